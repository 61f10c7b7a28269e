//! Shooting solver for the recursion `x_{n+1} = x_n - 1/S_n`,
//! `S_n = x_1 + ... + x_n`.
//!
//! Every orbit is a function of its starting value `x_1` alone. The ground
//! state is the orbit whose median condition holds (odd N: `x_m = 0`; even N:
//! `x_m + x_{m+1} = 0`) for the *largest* admissible `x_1`. Between
//! consecutive roots the median residual may change sign several times, so
//! plain bisection on the residual can land on the wrong root. Instead the
//! solver bisects on a monotone predicate: "the orbit is positive up to the
//! median and the residual is positive there". On the half-line to the right
//! of the previous root `a_{m-1}` every `x_n` is increasing in `x_1`, which
//! makes the predicate false below the target root and true above it.

use rug::float::Special;
use rug::{Assign, Float};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normal::normal_upper_quantile;
use crate::precision::{bits_for_digits, default_digits, pow10_neg, MIN_DIGITS};

/// Doublings/halvings tried before giving up on a bracket.
const MAX_BRACKET_EXPANSIONS: u32 = 128;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no sign change located for {target} after {expansions} bracket expansions")]
    BracketNotFound { target: String, expansions: u32 },
    #[error("bisection did not converge after {steps} steps (relative width {width:e}, residual {residual:e})")]
    BisectionNotConverged {
        steps: u32,
        width: f64,
        residual: f64,
    },
    #[error("degenerate orbit: {0}")]
    Degenerate(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryStatus {
    Complete,
    /// Iteration stopped at this 1-based index because `S_k <= 0`.
    CumsumNonpositiveAt(usize),
}

/// Forward orbit of the recursion.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub values: Vec<Float>,
    pub cumsums: Vec<Float>,
    pub status: TrajectoryStatus,
}

impl Trajectory {
    pub fn n_reached(&self) -> usize {
        self.values.len()
    }

    pub fn is_complete(&self) -> bool {
        self.status == TrajectoryStatus::Complete
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub precision_digits: u32,
    pub residual_tolerance: f64,
    /// Multipliers applied to the normal-quantile seed to start the lower and
    /// upper brackets.
    pub bracket_seed_scale: (f64, f64),
    pub max_bisection_steps: u32,
}

impl SolverOptions {
    /// Defaults tuned for a problem of size `n`.
    pub fn for_size(n: usize) -> Self {
        Self::with_precision(default_digits(n))
    }

    pub fn with_precision(precision_digits: u32) -> Self {
        Self {
            precision_digits,
            residual_tolerance: 10f64.powi(-(precision_digits as i32) / 2),
            bracket_seed_scale: (1.0, 2.0),
            max_bisection_steps: 64 + 4 * precision_digits,
        }
    }

    fn validate(&self) -> Result<(), SolverError> {
        if self.precision_digits < MIN_DIGITS {
            return Err(SolverError::InvalidInput(format!(
                "precision_digits must be at least {MIN_DIGITS}, got {}",
                self.precision_digits
            )));
        }
        if !(self.residual_tolerance > 0.0) {
            return Err(SolverError::InvalidInput(
                "residual_tolerance must be positive".into(),
            ));
        }
        if self.max_bisection_steps == 0 {
            return Err(SolverError::InvalidInput(
                "max_bisection_steps must be at least 1".into(),
            ));
        }
        let (lo, hi) = self.bracket_seed_scale;
        if !(lo > 0.0 && hi > 0.0 && lo.is_finite() && hi.is_finite()) {
            return Err(SolverError::InvalidInput(
                "bracket_seed_scale entries must be positive and finite".into(),
            ));
        }
        Ok(())
    }

    fn bits(&self) -> u32 {
        bits_for_digits(self.precision_digits)
    }
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self::with_precision(crate::precision::DEFAULT_DIGITS_SMALL)
    }
}

/// A solved (or externally supplied) particle configuration.
#[derive(Debug, Clone)]
pub struct Configuration {
    values: Vec<Float>,
    cumsums: Vec<Float>,
    values_f64: Vec<f64>,
    pub residual: Float,
    pub precision_digits: u32,
    pub solver_iterations: u32,
}

impl Configuration {
    /// Wraps arbitrary values; cumulative sums are recomputed at the values'
    /// precision. No solver metadata is attached (residual is NaN).
    pub fn from_values(values: Vec<Float>, precision_digits: u32) -> Self {
        let prec = values.first().map_or(64, Float::prec);
        let mut cumsums = Vec::with_capacity(values.len());
        let mut acc = Float::with_val(prec, 0);
        for v in &values {
            acc += v;
            cumsums.push(acc.clone());
        }
        let values_f64 = values.iter().map(Float::to_f64).collect();
        Self {
            values,
            cumsums,
            values_f64,
            residual: Float::with_val(prec, Special::Nan),
            precision_digits,
            solver_iterations: 0,
        }
    }

    /// Convenience constructor for hand-built inputs in double precision.
    pub fn from_f64(values: &[f64]) -> Self {
        let prec = bits_for_digits(MIN_DIGITS);
        let floats = values.iter().map(|&v| Float::with_val(prec, v)).collect();
        Self::from_values(floats, 17)
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn x1(&self) -> f64 {
        self.values_f64[0]
    }

    pub fn values(&self) -> &[Float] {
        &self.values
    }

    pub fn cumsums(&self) -> &[Float] {
        &self.cumsums
    }

    pub fn values_f64(&self) -> &[f64] {
        &self.values_f64
    }

    pub fn prec(&self) -> u32 {
        self.values[0].prec()
    }

    /// Largest consecutive gap `δ_N`.
    pub fn mesh(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| Float::with_val(w[0].prec(), &w[0] - &w[1]).to_f64())
            .fold(0.0, f64::max)
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] > w[1])
    }
}

/// Runs the recursion forward from `x1` for at most `n_max` terms.
///
/// Stops early with [`TrajectoryStatus::CumsumNonpositiveAt`] when a
/// cumulative sum that would be used as a divisor is `<= 0`.
pub fn iterate_recursion(x1: &Float, n_max: usize) -> Result<Trajectory, SolverError> {
    if !x1.is_finite() {
        return Err(SolverError::InvalidInput(format!(
            "x1 must be finite, got {x1}"
        )));
    }
    if n_max == 0 {
        return Err(SolverError::InvalidInput("n_max must be at least 1".into()));
    }
    let prec = x1.prec();
    let mut values = Vec::with_capacity(n_max);
    let mut cumsums = Vec::with_capacity(n_max);
    values.push(x1.clone());
    cumsums.push(x1.clone());
    let mut status = TrajectoryStatus::Complete;
    let mut step = Float::new(prec);
    while values.len() < n_max {
        let k = values.len();
        let s = &cumsums[k - 1];
        if *s <= 0 {
            status = TrajectoryStatus::CumsumNonpositiveAt(k);
            break;
        }
        step.assign(s.recip_ref());
        let next = Float::with_val(prec, &values[k - 1] - &step);
        let sum = Float::with_val(prec, s + &next);
        values.push(next);
        cumsums.push(sum);
    }
    Ok(Trajectory {
        values,
        cumsums,
        status,
    })
}

fn median_index(n: usize) -> usize {
    if n % 2 == 1 {
        n.div_ceil(2)
    } else {
        n / 2
    }
}

/// Median condition residual of the orbit started at `x1`.
///
/// Odd N: `x_m`, `m = (N+1)/2`. Even N: `x_m + x_{m+1}`, `m = N/2`.
/// Returns `-inf` when the orbit hits `S_k <= 0` before the needed index.
pub fn shooting_residual(x1: &Float, n: usize) -> Result<Float, SolverError> {
    if n < 3 {
        return Err(SolverError::InvalidInput(format!(
            "N must be >= 3, got {n}"
        )));
    }
    let m = median_index(n);
    let needed = if n % 2 == 1 { m } else { m + 1 };
    let orbit = iterate_recursion(x1, needed)?;
    if !orbit.is_complete() {
        return Ok(Float::with_val(x1.prec(), Special::NegInfinity));
    }
    let mut r = orbit.values[m - 1].clone();
    if n % 2 == 0 {
        r += &orbit.values[m];
    }
    Ok(r)
}

/// What the bisection is locating; each variant defines a predicate that is
/// false to the left of the target root and true to its right.
#[derive(Debug, Clone, Copy)]
enum Target {
    /// Ground state of size N.
    Median(usize),
    /// `a_n`: largest root of `x_n`.
    TermZero(usize),
    /// `b_n`: largest root of `S_n`.
    CumsumZero(usize),
}

impl Target {
    fn describe(&self) -> String {
        match *self {
            Target::Median(n) => format!("ground state N={n}"),
            Target::TermZero(n) => format!("largest root of x_{n}"),
            Target::CumsumZero(n) => format!("largest root of S_{n}"),
        }
    }

    fn is_above(&self, x1: &Float) -> bool {
        if *x1 <= 0 {
            return false;
        }
        match *self {
            Target::TermZero(k) => positive_terms_through(x1, k),
            Target::Median(n) if n % 2 == 1 => positive_terms_through(x1, median_index(n)),
            Target::Median(n) => {
                let m = median_index(n);
                let prec = x1.prec();
                let mut x = x1.clone();
                let mut s = x1.clone();
                let mut step = Float::new(prec);
                for _ in 2..=m {
                    step.assign(s.recip_ref());
                    x -= &step;
                    if x <= 0 {
                        return false;
                    }
                    s += &x;
                }
                // x_m + x_{m+1} = 2 x_m - 1/S_m
                step.assign(s.recip_ref());
                let pair = Float::with_val(prec, &x * 2u32) - &step;
                pair > 0
            }
            Target::CumsumZero(k) => {
                let prec = x1.prec();
                let mut x = x1.clone();
                let mut s = x1.clone();
                let mut step = Float::new(prec);
                for _ in 2..=k {
                    step.assign(s.recip_ref());
                    x -= &step;
                    s += &x;
                    if s <= 0 {
                        return false;
                    }
                }
                true
            }
        }
    }
}

/// True when `x_2, ..., x_k` are all strictly positive.
fn positive_terms_through(x1: &Float, k: usize) -> bool {
    let prec = x1.prec();
    let mut x = x1.clone();
    let mut s = x1.clone();
    let mut step = Float::new(prec);
    for _ in 2..=k {
        step.assign(s.recip_ref());
        x -= &step;
        if x <= 0 {
            return false;
        }
        s += &x;
    }
    true
}

struct Root {
    x1: Float,
    steps: u32,
}

fn locate_boundary(target: Target, seed: f64, opts: &SolverOptions) -> Result<Root, SolverError> {
    opts.validate()?;
    let prec = opts.bits();
    let (lo_scale, hi_scale) = opts.bracket_seed_scale;

    let mut hi = Float::with_val(prec, seed * hi_scale);
    let mut expansions = 0;
    while !target.is_above(&hi) {
        hi *= 2u32;
        expansions += 1;
        if expansions > MAX_BRACKET_EXPANSIONS || !hi.is_finite() {
            return Err(SolverError::BracketNotFound {
                target: target.describe(),
                expansions,
            });
        }
    }
    let mut lo = Float::with_val(prec, seed * lo_scale);
    if lo >= hi {
        lo.assign(&hi / 2u32);
    }
    expansions = 0;
    while target.is_above(&lo) {
        lo /= 2u32;
        expansions += 1;
        if expansions > MAX_BRACKET_EXPANSIONS {
            return Err(SolverError::BracketNotFound {
                target: target.describe(),
                expansions,
            });
        }
    }

    let rel_tol = pow10_neg(prec, opts.precision_digits as i32 - 2);
    let mut mid = Float::new(prec);
    let mut width = Float::new(prec);
    let mut steps = 0;
    loop {
        width.assign(&hi - &lo);
        if width <= Float::with_val(prec, &rel_tol * &hi) {
            break;
        }
        if steps == opts.max_bisection_steps {
            let rel = Float::with_val(prec, &width / &hi).to_f64();
            return Err(SolverError::BisectionNotConverged {
                steps,
                width: rel,
                residual: f64::NAN,
            });
        }
        mid.assign(&lo + &hi);
        mid /= 2u32;
        if target.is_above(&mid) {
            hi.assign(&mid);
        } else {
            lo.assign(&mid);
        }
        steps += 1;
    }
    mid.assign(&lo + &hi);
    mid /= 2u32;
    Ok(Root { x1: mid, steps })
}

fn median_seed(n: usize) -> f64 {
    normal_upper_quantile(0.5 / n as f64).expect("1/(2N) lies in (0, 1) for N >= 1")
}

/// Unique monotonic zero-mean solution of size `n`.
pub fn solve_ground_state(n: usize, opts: &SolverOptions) -> Result<Configuration, SolverError> {
    if n < 3 {
        return Err(SolverError::InvalidInput(format!(
            "N must be >= 3, got {n}"
        )));
    }
    let root = locate_boundary(Target::Median(n), median_seed(n), opts)?;
    let residual = shooting_residual(&root.x1, n)?;
    let abs_residual = Float::with_val(residual.prec(), residual.abs_ref()).to_f64();
    if !(abs_residual <= opts.residual_tolerance) {
        return Err(SolverError::BisectionNotConverged {
            steps: root.steps,
            width: 0.0,
            residual: abs_residual,
        });
    }
    let orbit = iterate_recursion(&root.x1, n)?;
    if !orbit.is_complete() {
        return Err(SolverError::Degenerate(format!(
            "orbit from the located root stopped early: {:?}",
            orbit.status
        )));
    }
    let values_f64 = orbit.values.iter().map(Float::to_f64).collect();
    let cfg = Configuration {
        values: orbit.values,
        cumsums: orbit.cumsums,
        values_f64,
        residual,
        precision_digits: opts.precision_digits,
        solver_iterations: root.steps,
    };
    if !cfg.is_strictly_decreasing() {
        return Err(SolverError::Degenerate(
            "solution is not strictly decreasing".into(),
        ));
    }
    Ok(cfg)
}

fn check_root_index(n: usize) -> Result<(), SolverError> {
    if n < 2 {
        return Err(SolverError::InvalidInput(format!(
            "n must be >= 2, got {n}"
        )));
    }
    Ok(())
}

/// `a_n`: the largest `x1` with `x_n(x1) = 0`.
pub fn find_largest_root_xn(n: usize, opts: &SolverOptions) -> Result<Float, SolverError> {
    check_root_index(n)?;
    // a_n is the ground-state x1 for 2n - 1 worlds
    let seed = median_seed(2 * n - 1);
    Ok(locate_boundary(Target::TermZero(n), seed, opts)?.x1)
}

/// `b_n`: the largest `x1` with `S_n(x1) = 0`.
pub fn find_largest_root_sn(n: usize, opts: &SolverOptions) -> Result<Float, SolverError> {
    check_root_index(n)?;
    let seed = median_seed(2 * n - 1);
    Ok(locate_boundary(Target::CumsumZero(n), seed, opts)?.x1)
}
