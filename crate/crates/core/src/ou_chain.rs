//! Random single replacement over m-samples and its rescaled sum process.
//!
//! Each step replaces one uniformly chosen member of the sample with a fresh
//! draw from the source. The sample sum `Y_k` is then AR(1) with
//! coefficient `1 − 1/m`, and `Y_{[mt]}/√m` approximates the stationary
//! Ornstein–Uhlenbeck process `dX = −X dt + √2 dW`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::solver::Configuration;
use crate::stats::{ks_two_sample, TestOutcome};

/// Steps between full re-summations of the sample.
pub const RESUM_INTERVAL: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OuError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone)]
pub enum Source {
    /// Uniform draws (with replacement) from the atoms of a configuration.
    Configuration(Arc<[f64]>),
    StandardNormal,
}

impl Source {
    pub fn from_configuration(cfg: &Configuration) -> Self {
        Source::Configuration(cfg.values_f64().into())
    }

    /// Number of atoms, `None` for the normal source.
    pub fn n(&self) -> Option<usize> {
        match self {
            Source::Configuration(atoms) => Some(atoms.len()),
            Source::StandardNormal => None,
        }
    }

    /// Variance of one draw: `1 − 1/N` for a solved configuration.
    pub fn variance(&self) -> f64 {
        match self {
            Source::Configuration(atoms) => {
                atoms.iter().map(|x| x * x).sum::<f64>() / atoms.len() as f64
            }
            Source::StandardNormal => 1.0,
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Source::Configuration(atoms) => atoms[rng.random_range(0..atoms.len())],
            Source::StandardNormal => StandardNormal.sample(rng),
        }
    }
}

/// Whether `m` lies outside the slow-growth regime `m ≲ (log N)^{1/3}` in
/// which the rescaled chain is known to converge for a configuration source.
pub fn exceeds_slow_growth(m: usize, n: usize) -> bool {
    m as f64 > (n as f64).ln().cbrt()
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone)]
pub struct ChainState {
    source: Source,
    sample: Vec<f64>,
    y: f64,
    step_index: u64,
    rng: ChaCha8Rng,
}

/// Stationary start: `m` independent draws from the source.
pub fn init_chain(source: Source, m: usize, seed: u64) -> Result<ChainState, OuError> {
    init_replication(source, m, seed, 0)
}

/// Like [`init_chain`] on an independent RNG stream, one per replication.
pub fn init_replication(
    source: Source,
    m: usize,
    seed: u64,
    rep: u64,
) -> Result<ChainState, OuError> {
    if m == 0 {
        return Err(OuError::InvalidInput("m must be >= 1".into()));
    }
    let mut rng = rng_for(seed, rep);
    let sample: Vec<f64> = (0..m).map(|_| source.draw(&mut rng)).collect();
    let y = sample.iter().sum();
    Ok(ChainState {
        source,
        sample,
        y,
        step_index: 0,
        rng,
    })
}

impl ChainState {
    pub fn m(&self) -> usize {
        self.sample.len()
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn sample(&self) -> &[f64] {
        &self.sample
    }

    pub fn recomputed_sum(&self) -> f64 {
        self.sample.iter().sum()
    }

    pub fn step(&mut self) {
        let i = self.rng.random_range(0..self.sample.len());
        let fresh = self.source.draw(&mut self.rng);
        self.y += fresh - self.sample[i];
        self.sample[i] = fresh;
        self.step_index += 1;
        if self.step_index.is_multiple_of(RESUM_INTERVAL) {
            self.y = self.recomputed_sum();
        }
    }
}

/// `X̄` sampled at every chain step: `values[k] = Y_k/√m` at time `k/m`.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledPath {
    pub m: usize,
    pub values: Vec<f64>,
}

impl RescaledPath {
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 / self.m as f64
    }

    /// Value at time `t`, i.e. at step `[mt]`.
    pub fn at_time(&self, t: f64) -> f64 {
        let k = ((t * self.m as f64).floor() as usize).min(self.steps());
        self.values[k]
    }
}

fn step_count(m: usize, t: f64) -> Result<usize, OuError> {
    if !(t.is_finite() && t > 0.0) {
        return Err(OuError::InvalidInput(format!(
            "T must be positive, got {t}"
        )));
    }
    Ok((m as f64 * t).floor() as usize)
}

/// Runs `[mT]` steps and returns the `[mT] + 1` rescaled values.
pub fn run_rescaled(chain: &mut ChainState, t: f64) -> Result<RescaledPath, OuError> {
    let m = chain.m();
    let steps = step_count(m, t)?;
    let scale = (m as f64).sqrt().recip();
    let mut values = Vec::with_capacity(steps + 1);
    values.push(chain.y * scale);
    for _ in 0..steps {
        chain.step();
        values.push(chain.y * scale);
    }
    Ok(RescaledPath { m, values })
}

/// Direct simulation of `Y_k = (1 − 1/m) Y_{k−1} + ε_k`,
/// `ε_k ~ 𝒩(0, 2 − 1/m)`, `Y_0 ~ 𝒩(0, m)`. Returns `Y_0..=Y_steps`.
pub fn ar1_reference(m: usize, steps: usize, seed: u64) -> Result<Vec<f64>, OuError> {
    ar1_replication(m, steps, seed, 0)
}

pub fn ar1_replication(m: usize, steps: usize, seed: u64, rep: u64) -> Result<Vec<f64>, OuError> {
    if m == 0 {
        return Err(OuError::InvalidInput("m must be >= 1".into()));
    }
    let lambda = 1.0 / m as f64;
    let mut rng = rng_for(seed, rep);
    let start = Normal::new(0.0, (m as f64).sqrt()).expect("finite sd");
    let noise = Normal::new(0.0, (2.0 - lambda).sqrt()).expect("finite sd");
    let mut y = start.sample(&mut rng);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(y);
    for _ in 0..steps {
        y = (1.0 - lambda) * y + noise.sample(&mut rng);
        out.push(y);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub m: usize,
    pub t: f64,
    pub reps: usize,
    pub seed: u64,
}

/// `reps` independent chains, replication `r` on RNG stream `r`. Results
/// are in replication order whatever the thread count.
pub fn run_replications(source: &Source, spec: &RunSpec) -> Result<Vec<RescaledPath>, OuError> {
    step_count(spec.m, spec.t)?;
    (0..spec.reps as u64)
        .into_par_iter()
        .map(|rep| {
            let mut chain = init_replication(source.clone(), spec.m, spec.seed, rep)?;
            run_rescaled(&mut chain, spec.t)
        })
        .collect()
}

/// AR(1) twins of [`run_replications`], rescaled the same way.
pub fn ar1_replications(spec: &RunSpec) -> Result<Vec<RescaledPath>, OuError> {
    let steps = step_count(spec.m, spec.t)?;
    let scale = (spec.m as f64).sqrt().recip();
    (0..spec.reps as u64)
        .into_par_iter()
        .map(|rep| {
            let y = ar1_replication(spec.m, steps, spec.seed, rep)?;
            Ok(RescaledPath {
                m: spec.m,
                values: y.into_iter().map(|v| v * scale).collect(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub reference: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocorrelationRow {
    pub lag_time: f64,
    pub lag_steps: usize,
    pub estimate: f64,
    pub reference: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathStatistics {
    pub m: usize,
    pub steps: usize,
    pub reps: usize,
    pub stationary_variance: Estimate,
    /// Variance over the first and second half of the time window.
    pub half_window_variance: (f64, f64),
    pub autocorrelation: Vec<AutocorrelationRow>,
    pub lag1_sum_corr: Estimate,
}

/// Pooled ratio `Σ a_r / Σ b_r` over replications, with a delta-method
/// standard error from the spread of the per-replication terms.
fn ratio_estimate(parts: &[(f64, f64)]) -> (f64, f64) {
    let k = parts.len() as f64;
    let a: f64 = parts.iter().map(|p| p.0).sum::<f64>() / k;
    let b: f64 = parts.iter().map(|p| p.1).sum::<f64>() / k;
    let r = a / b;
    let ss: f64 = parts.iter().map(|p| (p.0 - r * p.1).powi(2)).sum();
    (r, (ss / (k * (k - 1.0))).sqrt() / b)
}

/// Lag-`lag` correlation with the mean known to be zero.
fn lagged_correlation(paths: &[RescaledPath], lag: usize) -> (f64, f64) {
    let parts: Vec<(f64, f64)> = paths
        .iter()
        .map(|p| {
            let v = &p.values;
            let n = v.len() - lag;
            let cross: f64 = (0..n).map(|k| v[k] * v[k + lag]).sum();
            let norm: f64 = (0..n)
                .map(|k| 0.5 * (v[k] * v[k] + v[k + lag] * v[k + lag]))
                .sum();
            (cross / n as f64, norm / n as f64)
        })
        .collect();
    ratio_estimate(&parts)
}

fn mean_square(values: &[f64]) -> f64 {
    values.iter().map(|x| x * x).sum::<f64>() / values.len() as f64
}

/// Stationary variance and autocorrelations of a set of paths on a common
/// grid. References are the OU values `1` and `e^{−t}`; the lag-one sum
/// correlation is compared with `1 − 1/m`.
pub fn ou_statistics(paths: &[RescaledPath], lag_times: &[f64]) -> Result<PathStatistics, OuError> {
    if paths.len() < 2 {
        return Err(OuError::InvalidInput("need at least two paths".into()));
    }
    let (m, len) = (paths[0].m, paths[0].values.len());
    if paths.iter().any(|p| p.m != m || p.values.len() != len) {
        return Err(OuError::InvalidInput(
            "paths are not on a common grid".into(),
        ));
    }
    if len < 2 {
        return Err(OuError::InvalidInput("paths need at least one step".into()));
    }

    let per_rep: Vec<f64> = paths.iter().map(|p| mean_square(&p.values)).collect();
    let reps = per_rep.len() as f64;
    let var = per_rep.iter().sum::<f64>() / reps;
    let var_se =
        (per_rep.iter().map(|v| (v - var).powi(2)).sum::<f64>() / (reps - 1.0) / reps).sqrt();

    let half = len / 2;
    let first: f64 = paths
        .iter()
        .map(|p| mean_square(&p.values[..half]))
        .sum::<f64>()
        / reps;
    let second: f64 = paths
        .iter()
        .map(|p| mean_square(&p.values[half..]))
        .sum::<f64>()
        / reps;

    let mut autocorrelation = Vec::with_capacity(lag_times.len());
    for &t in lag_times {
        let lag = (t * m as f64).round() as usize;
        if !(t >= 0.0) || lag >= len {
            return Err(OuError::InvalidInput(format!(
                "lag time {t} outside the path"
            )));
        }
        let (estimate, se) = lagged_correlation(paths, lag);
        autocorrelation.push(AutocorrelationRow {
            lag_time: t,
            lag_steps: lag,
            estimate,
            reference: (-t).exp(),
            se,
        });
    }

    let (lag1, lag1_se) = lagged_correlation(paths, 1);
    Ok(PathStatistics {
        m,
        steps: len - 1,
        reps: paths.len(),
        stationary_variance: Estimate {
            estimate: var,
            reference: 1.0,
            se: var_se,
        },
        half_window_variance: (first, second),
        autocorrelation,
        lag1_sum_corr: Estimate {
            estimate: lag1,
            reference: 1.0 - 1.0 / m as f64,
            se: lag1_se,
        },
    })
}

/// Two-sample KS between the values of two path sets at time `t`, one value
/// per replication.
pub fn compare_marginals(a: &[RescaledPath], b: &[RescaledPath], t: f64) -> TestOutcome {
    let xa: Vec<f64> = a.iter().map(|p| p.at_time(t)).collect();
    let xb: Vec<f64> = b.iter().map(|p| p.at_time(t)).collect();
    ks_two_sample(&xa, &xb)
}
