//! On-disk store of solved configurations keyed by `(N, precision_digits)`.

use std::fs;
use std::path::{Path, PathBuf};

use miw_core::{verify_properties, Configuration, ConfigurationDocument};

use crate::error::CliError;
use crate::output::write_atomic;

/// Tolerance used when re-checking a cached entry.
pub const LOAD_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct SolutionCache {
    dir: Option<PathBuf>,
}

/// A configuration together with the exact document text it came from.
pub struct Entry {
    pub text: String,
    pub config: Configuration,
}

impl SolutionCache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Self { dir }
    }

    pub fn disabled() -> Self {
        Self { dir: None }
    }

    pub fn path_for(&self, n: usize, digits: u32) -> Option<PathBuf> {
        self.dir
            .as_ref()
            .map(|d| d.join(format!("N{n}_P{digits}.json")))
    }

    /// A hit only if the file parses, matches the key, and still satisfies
    /// the defining identities. Anything else is reported and ignored.
    pub fn load(&self, n: usize, digits: u32) -> Option<Entry> {
        let path = self.path_for(n, digits)?;
        let text = fs::read_to_string(&path).ok()?;
        match validate(&text, n, digits) {
            Ok(config) => Some(Entry { text, config }),
            Err(why) => {
                eprintln!("warning: ignoring cache entry {}: {why}", path.display());
                None
            }
        }
    }

    pub fn store(&self, n: usize, digits: u32, text: &str) -> Result<(), CliError> {
        match self.path_for(n, digits) {
            Some(path) => write_atomic(&path, text.as_bytes()),
            None => Ok(()),
        }
    }
}

fn validate(text: &str, n: usize, digits: u32) -> Result<Configuration, String> {
    let doc = ConfigurationDocument::from_json(text).map_err(|e| e.to_string())?;
    if doc.n != n || doc.precision_digits != digits {
        return Err("key does not match contents".into());
    }
    let config = doc.to_configuration().map_err(|e| e.to_string())?;
    let report = verify_properties(&config, LOAD_TOLERANCE);
    if !report.core_properties_hold() {
        return Err(format!("failed {}", report.failures().join(", ")));
    }
    Ok(config)
}

/// Resolution order: explicit flag, then `MIW_CACHE_DIR`, then the user
/// cache directory. Clap already folds the environment variable into the
/// flag.
pub fn default_dir(flag: Option<&Path>) -> Option<PathBuf> {
    if let Some(p) = flag {
        return Some(p.to_path_buf());
    }
    if let Some(xdg) = std::env::var_os("XDG_CACHE_HOME").filter(|v| !v.is_empty()) {
        return Some(PathBuf::from(xdg).join("miw"));
    }
    std::env::var_os("HOME")
        .filter(|v| !v.is_empty())
        .map(|h| PathBuf::from(h).join(".cache").join("miw"))
}
