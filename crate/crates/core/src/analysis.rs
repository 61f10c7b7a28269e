//! Structural certificates for a configuration: the zero-mean, variance,
//! symmetry and monotonicity identities, the mesh bound, the interworld
//! Hamiltonian, and the correspondence with normal quantiles.

use rug::{Assign, Float};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normal::normal_upper_quantile;
use crate::solver::Configuration;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("degenerate configuration: x_{index} equals x_{next}", next = index + 1)]
    RepeatedValue { index: usize },
}

/// Property check results. `tolerance` scales with N for the two sums
/// (`|Σx| <= tol·N`, `|Σx² − (N−1)| <= tol·N`) and is absolute for the
/// symmetry defect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub tolerance: f64,
    pub sum: f64,
    pub sum_of_squares_minus: f64,
    pub max_symmetry_defect: f64,
    pub monotone: bool,
    pub mesh: f64,
    pub mesh_bound: f64,
    pub x1: f64,
    pub x1_lower_bound: f64,
    pub zero_mean_ok: bool,
    pub variance_ok: bool,
    pub symmetry_ok: bool,
    pub mesh_ok: bool,
    pub x1_lower_bound_ok: bool,
}

impl PropertyReport {
    /// Names of the properties that failed, empty when everything passed.
    pub fn failures(&self) -> Vec<&'static str> {
        [
            (self.zero_mean_ok, "zero_mean"),
            (self.variance_ok, "variance"),
            (self.symmetry_ok, "symmetry"),
            (self.monotone, "monotone"),
            (self.mesh_ok, "mesh_bound"),
            (self.x1_lower_bound_ok, "x1_lower_bound"),
        ]
        .into_iter()
        .filter_map(|(ok, name)| (!ok).then_some(name))
        .collect()
    }

    /// The four defining identities (zero mean, variance, symmetry,
    /// strict decrease).
    pub fn core_properties_hold(&self) -> bool {
        self.zero_mean_ok && self.variance_ok && self.symmetry_ok && self.monotone
    }

    pub fn all_pass(&self) -> bool {
        self.failures().is_empty()
    }
}

/// Sums are accumulated at the configuration's working precision.
pub fn verify_properties(cfg: &Configuration, tol: f64) -> PropertyReport {
    let n = cfg.n();
    let prec = cfg.prec();
    let values = cfg.values();

    let mut sum = Float::with_val(prec, 0);
    let mut squares = Float::with_val(prec, 0);
    let mut tmp = Float::new(prec);
    for v in values {
        sum += v;
        tmp.assign(v.square_ref());
        squares += &tmp;
    }
    squares -= (n - 1) as u64;

    let mut max_defect = 0.0f64;
    for i in 0..n / 2 + n % 2 {
        tmp.assign(&values[i] + &values[n - 1 - i]);
        max_defect = max_defect.max(tmp.to_f64().abs());
    }

    let log_n = (n as f64).ln();
    let mesh = cfg.mesh();
    let mesh_bound = 2.0 / log_n.sqrt();
    let x1 = cfg.x1();
    let x1_lower_bound = log_n.sqrt() / 2.0;
    let sum = sum.to_f64();
    let sum_of_squares_minus = squares.to_f64();
    let scaled = tol * n as f64;

    PropertyReport {
        n,
        tolerance: tol,
        sum,
        sum_of_squares_minus,
        max_symmetry_defect: max_defect,
        monotone: cfg.is_strictly_decreasing(),
        mesh,
        mesh_bound,
        x1,
        x1_lower_bound,
        zero_mean_ok: sum.abs() <= scaled,
        variance_ok: sum_of_squares_minus.abs() <= scaled,
        symmetry_ok: max_defect <= tol,
        mesh_ok: mesh <= mesh_bound,
        x1_lower_bound_ok: x1 >= x1_lower_bound,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianReport {
    #[serde(rename = "N")]
    pub n: usize,
    /// Classical potential Σ x².
    pub v: f64,
    /// Interworld potential.
    pub u: f64,
    pub h: f64,
    pub ground_state_energy: f64,
    pub defect: f64,
}

/// `H = U + V` with `U = Σ (1/(x_{n+1}−x_n) − 1/(x_n−x_{n−1}))²` and the
/// boundary reciprocals `1/(x_1−x_0)`, `1/(x_{N+1}−x_N)` taken as exactly 0.
pub fn hamiltonian(cfg: &Configuration) -> Result<HamiltonianReport, AnalysisError> {
    let n = cfg.n();
    let prec = cfg.prec();
    let values = cfg.values();

    // inv_gap[k] = 1/(x_{k+1} − x_k) for the interior gaps (0-based k)
    let mut inv_gaps = Vec::with_capacity(n.saturating_sub(1));
    for (k, w) in values.windows(2).enumerate() {
        let gap = Float::with_val(prec, &w[1] - &w[0]);
        if gap.is_zero() {
            return Err(AnalysisError::RepeatedValue { index: k + 1 });
        }
        inv_gaps.push(gap.recip());
    }

    let zero = Float::with_val(prec, 0);
    let mut u = Float::with_val(prec, 0);
    let mut v = Float::with_val(prec, 0);
    let mut tmp = Float::new(prec);
    for k in 0..n {
        let ahead = inv_gaps.get(k).unwrap_or(&zero);
        let behind = if k == 0 { &zero } else { &inv_gaps[k - 1] };
        tmp.assign(ahead - behind);
        tmp.square_mut();
        u += &tmp;
        tmp.assign(values[k].square_ref());
        v += &tmp;
    }
    let h = Float::with_val(prec, &u + &v);
    let ground = 2.0 * (n as f64 - 1.0);
    let defect = Float::with_val(prec, &h - (2 * (n as u64 - 1)))
        .to_f64()
        .abs();
    Ok(HamiltonianReport {
        n,
        v: v.to_f64(),
        u: u.to_f64(),
        h: h.to_f64(),
        ground_state_energy: ground,
        defect,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileRow {
    pub n: usize,
    pub x_n: f64,
    pub q_n: f64,
    pub deviation: f64,
}

/// Pairs each `x_n` with the upper `(n − ½)/N` standard normal quantile.
pub fn quantile_deviation(cfg: &Configuration) -> Vec<QuantileRow> {
    let big_n = cfg.n() as f64;
    cfg.values_f64()
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let n = i + 1;
            let p = (n as f64 - 0.5) / big_n;
            let q = normal_upper_quantile(p).expect("mid-rank probabilities lie in (0, 1)");
            QuantileRow {
                n,
                x_n: x,
                q_n: q,
                deviation: x - q,
            }
        })
        .collect()
}

/// Largest `|deviation|` over ranks with `lo·N <= n <= hi·N`.
pub fn max_deviation_between(rows: &[QuantileRow], lo: f64, hi: f64) -> f64 {
    let big_n = rows.len() as f64;
    rows.iter()
        .filter(|r| {
            let frac = r.n as f64;
            frac >= lo * big_n && frac <= hi * big_n
        })
        .map(|r| r.deviation.abs())
        .fold(0.0, f64::max)
}
