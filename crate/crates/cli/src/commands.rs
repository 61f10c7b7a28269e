use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use miw_core::analysis::{hamiltonian, quantile_deviation, HamiltonianReport, PropertyReport};
use miw_core::metrics::{distance_report, sawtooth_lower_bound, DistanceReport};
use miw_core::ou_chain::{
    ar1_replications, compare_marginals, exceeds_slow_growth, ou_statistics, run_replications,
    RescaledPath, RunSpec, Source,
};
use miw_core::precision::{default_digits, format_decimal};
use miw_core::solver::{find_largest_root_sn, find_largest_root_xn};
use miw_core::zero_bias::{coupling_masses, zero_bias_identity};
use miw_core::{
    build_density, solve_ground_state, verify_properties, Configuration, ConfigurationDocument,
    SolverOptions,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::cache::{Entry, SolutionCache};
use crate::error::CliError;
use crate::output::{csv_table, decimal, emit, envelope, to_value, write_atomic};

/// Hamiltonian agreement required by `verify`, per world.
pub const HAMILTONIAN_TOLERANCE: f64 = 1e-6;

pub struct Context {
    pub stable: bool,
    pub csv: bool,
    pub cache: SolutionCache,
    pub started: Instant,
}

impl Context {
    fn metadata(&self, extra: Value) -> Option<Value> {
        if self.stable {
            return None;
        }
        let mut meta = json!({
            "version": env!("CARGO_PKG_VERSION"),
            "elapsed_seconds": self.started.elapsed().as_secs_f64(),
        });
        if let (Value::Object(m), Value::Object(e)) = (&mut meta, extra) {
            m.extend(e);
        }
        Some(meta)
    }
}

fn check_n(n: usize) -> Result<(), CliError> {
    if n < 3 {
        return Err(CliError::Usage(format!("N must be ≥ 3, got {n}")));
    }
    Ok(())
}

/// Cached configuration for `(n, digits)`, solving and caching on a miss.
fn resolve(
    ctx: &Context,
    n: usize,
    precision: Option<u32>,
    allow_solve: bool,
) -> Result<(Entry, bool), CliError> {
    check_n(n)?;
    let digits = precision.unwrap_or_else(|| default_digits(n));
    if let Some(entry) = ctx.cache.load(n, digits) {
        return Ok((entry, true));
    }
    if !allow_solve {
        return Err(CliError::MissingDependency(format!(
            "no cached configuration for N = {n} at {digits} digits and --no-solve was given"
        )));
    }
    let solved = solve_ground_state(n, &SolverOptions::with_precision(digits))?;
    let doc = ConfigurationDocument::from_configuration(&solved);
    let text = doc.to_json();
    // analysis always runs on the parsed document so cached and fresh
    // results are identical
    let config = doc.to_configuration()?;
    if let Err(e) = ctx.cache.store(n, digits, &text) {
        eprintln!("warning: could not write cache entry: {e}");
    }
    Ok((Entry { text, config }, false))
}

pub fn solve(
    ctx: &Context,
    n: usize,
    precision: Option<u32>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let (entry, cached) = resolve(ctx, n, precision, true)?;
    emit(&entry.text, out)?;
    let cfg = &entry.config;
    let mut line = format!(
        "N={} x1={} residual={}",
        cfg.n(),
        format_decimal(&cfg.values()[0], 16),
        format_decimal(&cfg.residual, 3)
    );
    if !ctx.stable {
        line += &format!(
            " source={} time={:.3}s",
            if cached { "cache" } else { "solver" },
            ctx.started.elapsed().as_secs_f64()
        );
    }
    eprintln!("{line}");
    Ok(())
}

fn load_document(path: &Path) -> Result<Configuration, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let doc = ConfigurationDocument::from_json(&text)?;
    Ok(doc.to_configuration()?)
}

/// Loads a document and rejects it unless the four defining identities
/// hold.
fn load_valid(path: &Path, tol: f64) -> Result<(Configuration, PropertyReport), CliError> {
    let cfg = load_document(path)?;
    let report = verify_properties(&cfg, tol);
    if !report.core_properties_hold() {
        return Err(CliError::Invariant {
            failed: report.failures().into_iter().map(String::from).collect(),
        });
    }
    Ok((cfg, report))
}

fn property_rows(r: &PropertyReport, h: Option<&HamiltonianReport>) -> Vec<Vec<String>> {
    let scaled = r.tolerance * r.n as f64;
    let mut rows = vec![
        vec![
            "zero_mean".into(),
            decimal(r.sum.abs()),
            decimal(scaled),
            r.zero_mean_ok.to_string(),
        ],
        vec![
            "variance".into(),
            decimal(r.sum_of_squares_minus.abs()),
            decimal(scaled),
            r.variance_ok.to_string(),
        ],
        vec![
            "symmetry".into(),
            decimal(r.max_symmetry_defect),
            decimal(r.tolerance),
            r.symmetry_ok.to_string(),
        ],
        vec![
            "monotone".into(),
            String::new(),
            String::new(),
            r.monotone.to_string(),
        ],
        vec![
            "mesh_bound".into(),
            decimal(r.mesh),
            decimal(r.mesh_bound),
            r.mesh_ok.to_string(),
        ],
        vec![
            "x1_lower_bound".into(),
            decimal(r.x1),
            decimal(r.x1_lower_bound),
            r.x1_lower_bound_ok.to_string(),
        ],
    ];
    if let Some(h) = h {
        let bound = HAMILTONIAN_TOLERANCE * h.n as f64;
        rows.push(vec![
            "hamiltonian".into(),
            decimal(h.defect),
            decimal(bound),
            (h.defect <= bound).to_string(),
        ]);
    }
    rows
}

pub fn verify(ctx: &Context, file: &Path, tol: f64, out: Option<&Path>) -> Result<(), CliError> {
    let cfg = load_document(file)?;
    let report = verify_properties(&cfg, tol);
    let mut failed: Vec<String> = report.failures().into_iter().map(String::from).collect();
    let ham = hamiltonian(&cfg).ok();
    match &ham {
        Some(h) if h.defect > HAMILTONIAN_TOLERANCE * h.n as f64 => {
            failed.push("hamiltonian".into())
        }
        None if !failed.iter().any(|f| f == "monotone") => failed.push("monotone".into()),
        _ => {}
    }

    let text = if ctx.csv {
        csv_table(
            &["property", "value", "bound", "ok"],
            &property_rows(&report, ham.as_ref()),
        )?
    } else {
        envelope(
            "verify",
            json!({
                "N": cfg.n(),
                "properties": to_value(&report),
                "hamiltonian": ham.as_ref().map(to_value),
                "failed": failed,
            }),
            ctx.metadata(json!({ "file": file.display().to_string() })),
        )
    };
    emit(&text, out)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invariant { failed })
    }
}

pub fn density(ctx: &Context, file: &Path, tol: f64, out: Option<&Path>) -> Result<(), CliError> {
    let (cfg, _) = load_valid(file, tol)?;
    let dens = build_density(&cfg)?;
    let rows = dens.rows();
    let text = if ctx.csv {
        let cells: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![
                    decimal(r.interval_left),
                    decimal(r.interval_right),
                    decimal(r.height),
                    decimal(r.mass),
                ]
            })
            .collect();
        csv_table(
            &["interval_left", "interval_right", "height", "mass"],
            &cells,
        )?
    } else {
        let identity: Vec<Value> = (1..=4)
            .map(|k| to_value(&zero_bias_identity(&cfg, &dens, k)))
            .collect();
        envelope(
            "density",
            json!({
                "N": cfg.n(),
                "total_mass": dens.total_mass(),
                "unimodal": dens.is_unimodal(),
                "mean": dens.mean(),
                "second_moment": dens.second_moment(),
                "rows": rows,
                "identity": identity,
                "coupling": to_value(&coupling_masses(&cfg)),
            }),
            ctx.metadata(json!({ "file": file.display().to_string() })),
        )
    };
    emit(&text, out)
}

const DISTANCE_COLUMNS: [&str; 11] = [
    "N",
    "x1",
    "dw_to_normal",
    "stein_upper",
    "twice_mesh",
    "mesh_upper",
    "dw_empirical_to_zerobias",
    "sawtooth_lower",
    "ks_to_normal",
    "sup_density_gap",
    "mesh",
];

fn distance_cells(r: &DistanceReport) -> Vec<String> {
    vec![
        r.n.to_string(),
        decimal(r.x1),
        decimal(r.dw_to_normal),
        decimal(r.stein_upper),
        decimal(r.twice_mesh),
        decimal(r.mesh_upper),
        decimal(r.dw_empirical_to_zerobias),
        decimal(r.sawtooth_lower),
        decimal(r.ks_to_normal),
        decimal(r.sup_density_gap),
        decimal(r.mesh),
    ]
}

pub fn distance(ctx: &Context, file: &Path, tol: f64, out: Option<&Path>) -> Result<(), CliError> {
    let (cfg, _) = load_valid(file, tol)?;
    let report = distance_report(&cfg)?;
    let text = if ctx.csv {
        csv_table(&DISTANCE_COLUMNS, &[distance_cells(&report)])?
    } else {
        let rows = quantile_deviation(&cfg);
        let max_quantile_deviation = rows.iter().map(|r| r.deviation.abs()).fold(0.0, f64::max);
        envelope(
            "distance",
            json!({
                "N": cfg.n(),
                "report": to_value(&report),
                "sawtooth": to_value(&sawtooth_lower_bound(&cfg)?),
                "bounds_hold": report.bounds_hold(),
                "max_quantile_deviation": max_quantile_deviation,
            }),
            ctx.metadata(json!({ "file": file.display().to_string() })),
        )
    };
    emit(&text, out)
}

pub fn roots(
    ctx: &Context,
    n: usize,
    precision: Option<u32>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    check_n(n)?;
    let digits = precision.unwrap_or_else(|| default_digits(n));
    let opts = SolverOptions::with_precision(digits);
    let last = n.div_ceil(2);
    let pairs = (2..=last)
        .map(|k| {
            Ok((
                k,
                find_largest_root_xn(k, &opts)?,
                find_largest_root_sn(k, &opts)?,
            ))
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let a_increasing = pairs.windows(2).all(|w| w[1].1 > w[0].1);
    let b_increasing = pairs.windows(2).all(|w| w[1].2 > w[0].2);
    let a_exceeds_b = pairs.iter().all(|(_, a, b)| a > b);
    let rows: Vec<Vec<String>> = pairs
        .iter()
        .map(|(k, a, b)| {
            vec![
                k.to_string(),
                format_decimal(a, digits),
                format_decimal(b, digits),
                (a > b).to_string(),
            ]
        })
        .collect();

    let text = if ctx.csv {
        csv_table(&["n", "a_n", "b_n", "a_gt_b"], &rows)?
    } else {
        let json_rows: Vec<Value> = pairs
            .iter()
            .zip(&rows)
            .map(|((k, a, b), r)| json!({ "n": k, "a_n": r[1], "b_n": r[2], "a_gt_b": a > b }))
            .collect();
        envelope(
            "roots",
            json!({
                "N": n,
                "precision_digits": digits,
                "rows": json_rows,
                "a_increasing": a_increasing,
                "b_increasing": b_increasing,
                "a_exceeds_b": a_exceeds_b,
            }),
            ctx.metadata(json!({})),
        )
    };
    emit(&text, out)
}

struct SweepRow {
    n: usize,
    distance: DistanceReport,
    properties_ok: bool,
    failed: Vec<String>,
}

fn sweep_one(
    ctx: &Context,
    n: usize,
    precision: Option<u32>,
    allow_solve: bool,
    dir: &Path,
) -> Result<SweepRow, CliError> {
    let (entry, _) = resolve(ctx, n, precision, allow_solve)?;
    let cfg = &entry.config;
    let props = verify_properties(cfg, crate::cache::LOAD_TOLERANCE);
    let distance = distance_report(cfg)?;
    let failed: Vec<String> = props.failures().into_iter().map(String::from).collect();
    let text = envelope(
        "sweep",
        json!({
            "N": n,
            "properties": to_value(&props),
            "distance": to_value(&distance),
            "bounds_hold": distance.bounds_hold(),
        }),
        None,
    );
    write_atomic(&dir.join(format!("N{n}.json")), text.as_bytes())?;
    Ok(SweepRow {
        n,
        properties_ok: failed.is_empty(),
        distance,
        failed,
    })
}

pub fn sweep(
    ctx: &Context,
    n_list: &[usize],
    out_dir: &Path,
    precision: Option<u32>,
    no_solve: bool,
) -> Result<(), CliError> {
    if n_list.is_empty() {
        return Err(CliError::Usage("--n-list is empty".into()));
    }
    for &n in n_list {
        check_n(n)?;
    }
    fs::create_dir_all(out_dir).map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    let results: Vec<(usize, Result<SweepRow, CliError>)> = n_list
        .par_iter()
        .map(|&n| (n, sweep_one(ctx, n, precision, !no_solve, out_dir)))
        .collect();

    let mut header: Vec<&str> = DISTANCE_COLUMNS.to_vec();
    header.extend(["properties_ok", "bounds_ok", "error"]);
    let mut cells = Vec::new();
    let mut json_rows = Vec::new();
    let mut first_error: Option<CliError> = None;
    for (n, result) in results {
        match result {
            Ok(row) => {
                let mut c = distance_cells(&row.distance);
                c.push(row.properties_ok.to_string());
                c.push(row.distance.bounds_hold().to_string());
                c.push(row.failed.join(";"));
                cells.push(c);
                json_rows.push(json!({
                    "N": row.n,
                    "distance": to_value(&row.distance),
                    "properties_ok": row.properties_ok,
                    "bounds_hold": row.distance.bounds_hold(),
                    "failed": row.failed,
                }));
                if !row.failed.is_empty() && first_error.is_none() {
                    first_error = Some(CliError::Invariant { failed: row.failed });
                }
            }
            Err(e) => {
                let mut c = vec![n.to_string()];
                c.resize(DISTANCE_COLUMNS.len(), String::new());
                c.extend([String::new(), String::new(), e.to_string()]);
                cells.push(c);
                json_rows.push(json!({ "N": n, "error": e.to_string() }));
                first_error.get_or_insert(e);
            }
        }
    }
    let table = csv_table(&header, &cells)?;
    write_atomic(&out_dir.join("sweep.csv"), table.as_bytes())?;

    let text = if ctx.csv {
        table
    } else {
        envelope(
            "sweep",
            json!({ "rows": json_rows }),
            ctx.metadata(json!({})),
        )
    };
    emit(&text, None)?;
    first_error.map_or(Ok(()), Err)
}

pub struct OuArgs {
    pub normal: bool,
    pub n: Option<usize>,
    pub m: usize,
    pub t: f64,
    pub reps: usize,
    pub seed: u64,
    pub lags: Vec<f64>,
    pub precision: Option<u32>,
    pub no_solve: bool,
    pub paths: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

fn paths_csv(header_line: &str, paths: &[RescaledPath]) -> String {
    let mut s =
        String::with_capacity(paths.len() * paths.first().map_or(0, |p| p.values.len()) * 40);
    s.push_str(header_line);
    s.push_str("rep,k,t,Y,Xbar\n");
    for (rep, p) in paths.iter().enumerate() {
        let root_m = (p.m as f64).sqrt();
        for (k, &x) in p.values.iter().enumerate() {
            s.push_str(&format!(
                "{rep},{k},{},{},{}\n",
                decimal(p.time(k)),
                decimal(x * root_m),
                decimal(x)
            ));
        }
    }
    s
}

pub fn ou(ctx: &Context, args: &OuArgs) -> Result<(), CliError> {
    if args.m == 0 {
        return Err(CliError::Usage("m must be ≥ 1".into()));
    }
    if args.reps < 2 {
        return Err(CliError::Usage("reps must be ≥ 2".into()));
    }
    if !(args.t.is_finite() && args.t > 0.0) {
        return Err(CliError::Usage("T must be positive".into()));
    }
    let source = match (args.normal, args.n) {
        (true, None) => Source::StandardNormal,
        (false, Some(n)) => {
            let (entry, _) = resolve(ctx, n, args.precision, !args.no_solve)?;
            Source::from_configuration(&entry.config)
        }
        _ => {
            return Err(CliError::Usage(
                "give exactly one of --normal and --n".into(),
            ))
        }
    };

    let mut warnings = Vec::new();
    if let Some(n) = source.n() {
        if exceeds_slow_growth(args.m, n) {
            let w = format!(
                "m = {} exceeds (ln N)^(1/3) = {:.3} for N = {n}; outside the slow-growth regime of the limit theorem",
                args.m,
                (n as f64).ln().cbrt()
            );
            eprintln!("warning: {w}");
            warnings.push(w);
        }
    }

    let spec = RunSpec {
        m: args.m,
        t: args.t,
        reps: args.reps,
        seed: args.seed,
    };
    let paths = run_replications(&source, &spec)?;
    let stats = ou_statistics(&paths, &args.lags)?;
    let twins = ar1_replications(&spec)?;
    let twin_stats = ou_statistics(&twins, &args.lags)?;
    let ks = compare_marginals(&paths, &twins, args.t);

    let header = json!({
        "seed": args.seed,
        "m": args.m,
        "N": source.n(),
        "T": args.t,
        "reps": args.reps,
        "source": if source.n().is_some() { "configuration" } else { "normal" },
    });
    let header_line = format!(
        "# seed={} m={} N={} T={} reps={}\n",
        args.seed,
        args.m,
        source.n().map_or("normal".to_string(), |n| n.to_string()),
        decimal(args.t),
        args.reps
    );

    if let Some(p) = &args.paths {
        write_atomic(p, paths_csv(&header_line, &paths).as_bytes())?;
    }

    let text = if ctx.csv {
        let mut rows = vec![vec![
            "variance".into(),
            String::new(),
            decimal(stats.stationary_variance.estimate),
            decimal(stats.stationary_variance.reference),
            decimal(stats.stationary_variance.se),
        ]];
        for r in &stats.autocorrelation {
            rows.push(vec![
                "autocorrelation".into(),
                decimal(r.lag_time),
                decimal(r.estimate),
                decimal(r.reference),
                decimal(r.se),
            ]);
        }
        rows.push(vec![
            "lag1_sum_corr".into(),
            String::new(),
            decimal(stats.lag1_sum_corr.estimate),
            decimal(stats.lag1_sum_corr.reference),
            decimal(stats.lag1_sum_corr.se),
        ]);
        header_line
            + &csv_table(
                &["quantity", "lag_time", "estimate", "reference", "se"],
                &rows,
            )?
    } else {
        envelope(
            "ou",
            json!({
                "header": header,
                "source_variance": source.variance(),
                "statistics": to_value(&stats),
                "ar1_reference": {
                    "statistics": to_value(&twin_stats),
                    "ks_at_T": to_value(&ks),
                },
                "warnings": warnings,
            }),
            ctx.metadata(json!({})),
        )
    };
    emit(&text, args.out.as_deref())
}
