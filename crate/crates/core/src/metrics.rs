//! Distances between the empirical law of a configuration, its zero-bias
//! density and the standard normal, together with the Stein upper bound and
//! the sawtooth lower bound.
//!
//! All integrals are exact: the empirical CDF is a step function, the
//! zero-bias CDF is piecewise linear, and `∫Φ` has the closed form
//! `xΦ(x) + φ(x)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normal;
use crate::solver::Configuration;
use crate::zero_bias::{build_density, ZeroBiasDensity, ZeroBiasError};

/// Agreement required between the sawtooth expectation and its closed form.
pub const SAWTOOTH_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error(transparent)]
    ZeroBias(#[from] ZeroBiasError),
    #[error("sawtooth expectation {direct} disagrees with x1/[2(N-1)] = {formula}")]
    SawtoothMismatch { formula: f64, direct: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub x1: f64,
    pub dw_to_normal: f64,
    pub dw_empirical_to_zerobias: f64,
    /// `4 x1 / (N-1)`.
    pub stein_upper: f64,
    /// `x1 / [2(N-1)]`.
    pub sawtooth_lower: f64,
    pub mesh: f64,
    pub twice_mesh: f64,
    /// `4 / sqrt(log N)`.
    pub mesh_upper: f64,
    pub ks_to_normal: f64,
    pub sup_density_gap: f64,
}

impl DistanceReport {
    /// The bound chain: sawtooth ≤ d_W(ℙ_N, y_N) and
    /// d_W(ℙ_N, 𝒩) ≤ min(Stein bound, 2δ_N, 4/√log N).
    pub fn bounds_hold(&self) -> bool {
        self.sawtooth_lower <= self.dw_empirical_to_zerobias
            && self.dw_to_normal <= self.stein_upper
            && self.dw_to_normal <= self.twice_mesh
            && self.dw_to_normal <= self.mesh_upper
    }
}

pub fn distance_report(cfg: &Configuration) -> Result<DistanceReport, MetricsError> {
    let n = cfg.n();
    let density = build_density(cfg)?;
    let mesh = cfg.mesh();
    Ok(DistanceReport {
        n,
        x1: cfg.x1(),
        dw_to_normal: wasserstein_to_normal(cfg),
        dw_empirical_to_zerobias: wasserstein_to_density(cfg, &density),
        stein_upper: stein_upper_bound(cfg),
        sawtooth_lower: sawtooth_lower_bound(cfg)?.value,
        mesh,
        twice_mesh: 2.0 * mesh,
        mesh_upper: 4.0 / (n as f64).ln().sqrt(),
        ks_to_normal: ks_distance_to_normal(cfg),
        sup_density_gap: sup_density_gap(&density),
    })
}

fn ascending(cfg: &Configuration) -> Vec<f64> {
    cfg.values_f64().iter().rev().copied().collect()
}

/// `∫_a^b |Φ(x) − c| dx` for `0 < c < 1`.
fn abs_gap_to_level(c: f64, a: f64, b: f64) -> f64 {
    let g = normal::cdf_antiderivative;
    let cross = normal::quantile(c).expect("levels lie strictly inside (0, 1)");
    if cross <= a {
        g(b) - g(a) - c * (b - a)
    } else if cross >= b {
        c * (b - a) - (g(b) - g(a))
    } else {
        (c * (cross - a) - (g(cross) - g(a))) + (g(b) - g(cross) - c * (b - cross))
    }
}

/// `d_W(ℙ_N, 𝒩(0,1)) = ∫|F_N − Φ|`, with analytic tails beyond the atoms.
pub fn wasserstein_to_normal(cfg: &Configuration) -> f64 {
    let z = ascending(cfg);
    let n = z.len();
    let nf = n as f64;
    let first = z[0];
    let last = z[n - 1];
    let mut total = normal::cdf_antiderivative(first);
    for i in 1..n {
        total += abs_gap_to_level(i as f64 / nf, z[i - 1], z[i]);
    }
    total + normal::pdf(last) - last * normal::sf(last)
}

/// `∫ |c − ℓ(x)| dx` over an interval of length `len` where `c − ℓ` runs
/// linearly from `d0` to `d1`.
fn abs_linear_integral(d0: f64, d1: f64, len: f64) -> f64 {
    if d0 * d1 >= 0.0 {
        0.5 * (d0.abs() + d1.abs()) * len
    } else {
        0.5 * len * (d0 * d0 + d1 * d1) / (d0.abs() + d1.abs())
    }
}

/// Wasserstein distance between the empirical law and a zero-bias density
/// built from the same configuration.
pub fn wasserstein_to_density(cfg: &Configuration, density: &ZeroBiasDensity) -> f64 {
    let z = ascending(cfg);
    let nf = z.len() as f64;
    let g: Vec<f64> = z.iter().map(|&x| density.cdf(x)).collect();
    (1..z.len())
        .map(|i| {
            let level = i as f64 / nf;
            abs_linear_integral(level - g[i - 1], level - g[i], z[i] - z[i - 1])
        })
        .sum()
}

pub fn wasserstein_empirical_to_zerobias(cfg: &Configuration) -> Result<f64, MetricsError> {
    let density = build_density(cfg)?;
    Ok(wasserstein_to_density(cfg, &density))
}

pub fn stein_upper_bound(cfg: &Configuration) -> f64 {
    4.0 * cfg.x1() / (cfg.n() - 1) as f64
}

/// 1-Lipschitz tent function vanishing at every atom and peaking at the
/// midpoint of each gap with height half the gap.
#[derive(Debug, Clone)]
pub struct Sawtooth {
    knots_x: Vec<f64>,
    knots_y: Vec<f64>,
}

impl Sawtooth {
    pub fn new(cfg: &Configuration) -> Self {
        let z = ascending(cfg);
        let mut knots_x = Vec::with_capacity(2 * z.len() - 1);
        let mut knots_y = Vec::with_capacity(2 * z.len() - 1);
        for (i, &x) in z.iter().enumerate() {
            if i > 0 {
                let prev = z[i - 1];
                knots_x.push(0.5 * (prev + x));
                knots_y.push(0.5 * (x - prev));
            }
            knots_x.push(x);
            knots_y.push(0.0);
        }
        Self { knots_x, knots_y }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = &self.knots_x;
        if x <= k[0] || x >= k[k.len() - 1] {
            return 0.0;
        }
        let j = k.partition_point(|&v| v <= x);
        let (x0, x1) = (k[j - 1], k[j]);
        let (y0, y1) = (self.knots_y[j - 1], self.knots_y[j]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    pub fn max_slope(&self) -> f64 {
        self.knots_x
            .windows(2)
            .zip(self.knots_y.windows(2))
            .map(|(x, y)| ((y[1] - y[0]) / (x[1] - x[0])).abs())
            .fold(0.0, f64::max)
    }

    /// `E h(X̃)` against a piecewise-constant density whose breakpoints are
    /// the atoms: every segment between knots sits inside one interval.
    pub fn expectation_under(&self, density: &ZeroBiasDensity) -> f64 {
        self.knots_x
            .windows(2)
            .zip(self.knots_y.windows(2))
            .map(|(x, y)| {
                let height = density.density_at(0.5 * (x[0] + x[1]));
                height * 0.5 * (y[0] + y[1]) * (x[1] - x[0])
            })
            .sum()
    }

    /// Mean over the atoms (uniform weights).
    pub fn expectation_over_atoms(&self, atoms: &[f64]) -> f64 {
        atoms.iter().map(|&a| self.eval(a)).sum::<f64>() / atoms.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SawtoothBound {
    /// `x1 / [2(N-1)]`.
    pub value: f64,
    /// `E h(X̃_N)` integrated directly.
    pub direct: f64,
    /// `E h(X_N)`; zero by construction.
    pub atom_expectation: f64,
    pub max_slope: f64,
}

pub fn sawtooth_lower_bound(cfg: &Configuration) -> Result<SawtoothBound, MetricsError> {
    let value = cfg.x1() / (2.0 * (cfg.n() - 1) as f64);
    let density = build_density(cfg)?;
    let saw = Sawtooth::new(cfg);
    let direct = saw.expectation_under(&density);
    if (direct - value).abs() > SAWTOOTH_TOLERANCE {
        return Err(MetricsError::SawtoothMismatch {
            formula: value,
            direct,
        });
    }
    Ok(SawtoothBound {
        value,
        direct,
        atom_expectation: saw.expectation_over_atoms(cfg.values_f64()),
        max_slope: saw.max_slope(),
    })
}

/// `sup |F_N − Φ|`, attained at an atom from one side or the other.
pub fn ks_distance_to_normal(cfg: &Configuration) -> f64 {
    let z = ascending(cfg);
    let nf = z.len() as f64;
    z.iter()
        .enumerate()
        .map(|(i, &x)| {
            let phi = normal::cdf(x);
            let below = i as f64 / nf;
            let at = (i + 1) as f64 / nf;
            (phi - below).abs().max((at - phi).abs())
        })
        .fold(0.0, f64::max)
}

const POINTS_PER_INTERVAL: usize = 10;
const TAIL_POINTS: usize = 50;

/// Largest `|y_N − φ|` over the atoms (both one-sided values), ten points in
/// every interval, and a tail grid out to `±(x1 + 1)`.
pub fn sup_density_gap(density: &ZeroBiasDensity) -> f64 {
    let b = &density.breakpoints;
    let mut worst = 0.0f64;
    let mut check = |x: f64, y: f64| worst = worst.max((y - normal::pdf(x)).abs());
    for (i, &x) in b.iter().enumerate() {
        let above = if i == 0 { 0.0 } else { density.heights[i - 1] };
        let below = density.heights.get(i).copied().unwrap_or(0.0);
        check(x, above);
        check(x, below);
    }
    for (i, &h) in density.heights.iter().enumerate() {
        let (hi, lo) = (b[i], b[i + 1]);
        for k in 1..POINTS_PER_INTERVAL {
            check(lo + (hi - lo) * k as f64 / POINTS_PER_INTERVAL as f64, h);
        }
    }
    let (top, bottom) = (b[0], b[b.len() - 1]);
    for k in 0..=TAIL_POINTS {
        let t = k as f64 / TAIL_POINTS as f64;
        check(top + t, 0.0);
        check(bottom - t, 0.0);
    }
    worst
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve_ground_state, SolverOptions};

    fn three() -> Configuration {
        Configuration::from_f64(&[1.0, 0.0, -1.0])
    }

    #[test]
    fn stein_and_sawtooth_small_case() {
        let cfg = three();
        assert_eq!(stein_upper_bound(&cfg), 2.0);
        let s = sawtooth_lower_bound(&cfg).unwrap();
        assert_eq!(s.value, 0.25);
        assert!((s.direct - 0.25).abs() < 1e-15);
        assert_eq!(s.atom_expectation, 0.0);
        assert!((s.max_slope - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sawtooth_shape() {
        let saw = Sawtooth::new(&three());
        assert_eq!(saw.eval(0.5), 0.5);
        assert_eq!(saw.eval(0.25), 0.25);
        assert_eq!(saw.eval(-0.75), 0.25);
        assert_eq!(saw.eval(0.0), 0.0);
        assert_eq!(saw.eval(3.0), 0.0);
    }

    #[test]
    fn linear_abs_integral_cases() {
        assert_eq!(abs_linear_integral(1.0, 1.0, 2.0), 2.0);
        assert_eq!(abs_linear_integral(-1.0, -3.0, 1.0), 2.0);
        // crosses zero at the midpoint: two triangles of area 1/4
        assert!((abs_linear_integral(1.0, -1.0, 1.0) - 0.5).abs() < 1e-16);
    }

    #[test]
    fn three_point_empirical_to_zerobias() {
        // F steps 1/3, 2/3 at -1, 0; G climbs 0→1/2 on [-1,0], 1/2→1 on [0,1]
        let w = wasserstein_empirical_to_zerobias(&three()).unwrap();
        // on [-1,0]: |1/3 − (x+1)/2| ; on [0,1]: |2/3 − (1+x)/2|
        let expect = 2.0 * (0.5 * (2.0f64 / 3.0) * (1.0 / 3.0) + 0.5 * (1.0 / 3.0) * (1.0 / 6.0));
        assert!((w - expect).abs() < 1e-15, "{w} vs {expect}");
        assert!(w >= 0.25);
    }

    #[test]
    fn bound_chain_on_solved_configurations() {
        for n in [7, 22, 60] {
            let cfg = solve_ground_state(n, &SolverOptions::default()).unwrap();
            let r = distance_report(&cfg).unwrap();
            assert!(r.bounds_hold(), "{r:?}");
        }
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.9)).collect();
        assert!((loglog_slope(&xs, &ys) + 0.9).abs() < 1e-12);
    }
}
