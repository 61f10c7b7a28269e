//! Serialization shared by all commands: JSON envelopes with floats as
//! decimal strings, CSV tables, and atomic file writes.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::CliError;

pub const ENVELOPE_VERSION: u32 = 1;

/// Shortest round-trip decimal, switching to exponent form outside
/// `[1e-5, 1e16)`.
pub fn decimal(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Rewrites every non-integer JSON number as a decimal string.
pub fn stringify_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => Value::String(decimal(n.as_f64().expect("f64 number"))),
        Value::Array(items) => Value::Array(items.into_iter().map(stringify_floats).collect()),
        Value::Object(map) => Value::Object(
            map.into_iter()
                .map(|(k, v)| (k, stringify_floats(v)))
                .collect::<Map<_, _>>(),
        ),
        other => other,
    }
}

pub fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

/// Assembles `{schema_version, command, ...body, metadata}`; metadata is
/// dropped in stable mode.
pub fn envelope(command: &str, body: Value, metadata: Option<Value>) -> String {
    let mut map = Map::new();
    map.insert("schema_version".into(), json!(ENVELOPE_VERSION));
    map.insert("command".into(), json!(command));
    if let Value::Object(fields) = stringify_floats(body) {
        map.extend(fields);
    }
    if let Some(meta) = metadata {
        map.insert("metadata".into(), stringify_floats(meta));
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(map)).expect("json value serializes");
    s.push('\n');
    s
}

/// CSV text from a header and rows of already formatted cells.
pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Write-to-temp-then-rename so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::Io(e.to_string()))?;
    tmp.write_all(contents)
        .map_err(|e| CliError::Io(e.to_string()))?;
    tmp.persist(path)
        .map_err(|e| CliError::Io(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

/// Prints to stdout, or writes the file when `out` is given.
pub fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_become_strings_and_integers_stay() {
        let v = stringify_floats(json!({"N": 22, "x": 0.5, "ok": true, "list": [1.0e-9, 3]}));
        assert_eq!(
            v,
            json!({"N": 22, "x": "0.5", "ok": true, "list": ["1e-9", 3]})
        );
    }

    #[test]
    fn decimal_round_trips() {
        for x in [0.1, 2.0025, -1e-12, 123456.789, 6.02e23, 0.0] {
            assert_eq!(decimal(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(decimal(f64::NAN), "NaN");
    }

    #[test]
    fn stable_envelope_has_no_metadata() {
        let s = envelope("verify", json!({"N": 3}), None);
        assert!(!s.contains("metadata"));
        let s = envelope(
            "verify",
            json!({"N": 3}),
            Some(json!({"elapsed_seconds": 0.1})),
        );
        assert!(s.contains("\"elapsed_seconds\": \"0.1\""));
    }
}
