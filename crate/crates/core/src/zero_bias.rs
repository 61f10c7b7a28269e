//! Piecewise-constant zero-bias density of the empirical law of a
//! configuration, and the interval mass-splitting coupling between the two.
//!
//! Interval `i` (0-based) is `[x_{i+2}, x_{i+1})` in 1-based particle indices,
//! so interval 0 is the topmost one. On a solved configuration each interval
//! carries mass `1/(N-1)` spread uniformly.
//!
//! The coupling splits interval `n` (1-based from the top) so that its upper
//! part, of mass `n/N - (n-1)/(N-1)`, is sent to `x_n` and its lower part, of
//! mass `n/(N-1) - n/N`, to `x_{n+1}`. This is the monotone rearrangement of
//! the two laws; for odd N the split of the j-th interval above zero reproduces
//! `L_j = (2j-1)/(2N) - (j-1)/(N-1)`, `R_j = j/(N-1) - (2j-1)/(2N)`, and for
//! even N the straddling middle interval is cut exactly at its midpoint.

use rand::Rng;
use rug::ops::Pow;
use rug::{Assign, Float, Rational};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::solver::Configuration;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZeroBiasError {
    #[error("configuration is not strictly decreasing at x_{index}")]
    NotDecreasing { index: usize },
    #[error("non-positive density height on interval {index} (cumulative sum S_{index} <= 0)")]
    NonPositiveHeight { index: usize },
}

#[derive(Debug, Clone)]
pub struct ZeroBiasDensity {
    /// Configuration values, decreasing.
    pub breakpoints: Vec<f64>,
    /// `S_n/(N-1)` on `[x_{n+1}, x_n)`.
    pub heights: Vec<f64>,
    /// `height * interval length`.
    pub masses: Vec<f64>,
    cumulative: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub interval_left: f64,
    pub interval_right: f64,
    pub height: f64,
    pub mass: f64,
}

pub fn build_density(cfg: &Configuration) -> Result<ZeroBiasDensity, ZeroBiasError> {
    let n = cfg.n();
    let prec = cfg.prec();
    let values = cfg.values();
    let denom = (n - 1) as u64;
    let mut heights = Vec::with_capacity(n - 1);
    let mut masses = Vec::with_capacity(n - 1);
    let mut height = Float::new(prec);
    let mut gap = Float::new(prec);
    for i in 0..n - 1 {
        gap.assign(&values[i] - &values[i + 1]);
        if gap <= 0 {
            return Err(ZeroBiasError::NotDecreasing { index: i + 2 });
        }
        height.assign(&cfg.cumsums()[i] / denom);
        if height <= 0 {
            return Err(ZeroBiasError::NonPositiveHeight { index: i + 1 });
        }
        heights.push(height.to_f64());
        gap *= &height;
        masses.push(gap.to_f64());
    }
    let mut cumulative = Vec::with_capacity(n - 1);
    let mut acc = 0.0;
    for m in &masses {
        acc += m;
        cumulative.push(acc);
    }
    Ok(ZeroBiasDensity {
        breakpoints: cfg.values_f64().to_vec(),
        heights,
        masses,
        cumulative,
    })
}

impl ZeroBiasDensity {
    pub fn n(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn intervals(&self) -> usize {
        self.heights.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Interval index containing `x` under `x_{n+1} <= x < x_n`.
    fn interval_of(&self, x: f64) -> Option<usize> {
        let above = self.breakpoints.partition_point(|&b| b > x);
        (above >= 1 && above < self.n()).then(|| above - 1)
    }

    pub fn density_at(&self, x: f64) -> f64 {
        self.interval_of(x).map_or(0.0, |i| self.heights[i])
    }

    /// Mass strictly above `x`.
    fn mass_above(&self, x: f64) -> f64 {
        if x >= self.breakpoints[0] {
            return 0.0;
        }
        match self.interval_of(x) {
            Some(i) => {
                let before = if i == 0 { 0.0 } else { self.cumulative[i - 1] };
                before + self.heights[i] * (self.breakpoints[i] - x)
            }
            None => self.total_mass(),
        }
    }

    /// Distribution function of the density.
    pub fn cdf(&self, x: f64) -> f64 {
        self.total_mass() - self.mass_above(x)
    }

    /// `E[X̃^k]`, integrated exactly interval by interval.
    pub fn moment(&self, k: u32) -> f64 {
        let p = k as i32 + 1;
        self.heights
            .iter()
            .enumerate()
            .map(|(i, h)| {
                let (hi, lo) = (self.breakpoints[i], self.breakpoints[i + 1]);
                h * (hi.powi(p) - lo.powi(p)) / f64::from(p as u32)
            })
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    pub fn second_moment(&self) -> f64 {
        self.moment(2)
    }

    /// Nondecreasing up to the peak, nonincreasing afterwards (walking
    /// intervals from the top).
    pub fn is_unimodal(&self) -> bool {
        let h = &self.heights;
        let peak = h
            .iter()
            .enumerate()
            .fold(0, |best, (i, &v)| if v > h[best] { i } else { best });
        h[..=peak].windows(2).all(|w| w[0] <= w[1]) && h[peak..].windows(2).all(|w| w[0] >= w[1])
    }

    /// Rows in increasing order of `x`.
    pub fn rows(&self) -> Vec<DensityRow> {
        (0..self.intervals())
            .rev()
            .map(|i| DensityRow {
                interval_left: self.breakpoints[i + 1],
                interval_right: self.breakpoints[i],
                height: self.heights[i],
                mass: self.masses[i],
            })
            .collect()
    }

    /// Draw from the density: pick an interval by mass, then uniformly inside.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = *self.cumulative.last().expect("at least one interval");
        let target = rng.random::<f64>() * total;
        let i = self
            .cumulative
            .partition_point(|&c| c <= target)
            .min(self.intervals() - 1);
        let u: f64 = rng.random();
        self.breakpoints[i + 1] + u * (self.breakpoints[i] - self.breakpoints[i + 1])
    }
}

pub fn sample_zero_bias<R: Rng + ?Sized>(dens: &ZeroBiasDensity, rng: &mut R) -> f64 {
    dens.sample(rng)
}

/// Exact mass split of interval `n` (1-based from the top) for N particles:
/// `(upper part sent to x_n, lower part sent to x_{n+1})`.
pub fn exact_split(n: usize, big_n: usize) -> (Rational, Rational) {
    let (n, big_n) = (n as i64, big_n as i64);
    let upper = Rational::from((n, big_n)) - Rational::from((n - 1, big_n - 1));
    let lower = Rational::from((n, big_n - 1)) - Rational::from((n, big_n));
    (upper, lower)
}

/// Atom masses reassembled from the exact splits.
pub fn exact_atom_masses(big_n: usize) -> Vec<Rational> {
    let mut atoms = vec![Rational::new(); big_n];
    for n in 1..big_n {
        let (upper, lower) = exact_split(n, big_n);
        atoms[n - 1] += upper;
        atoms[n] += lower;
    }
    atoms
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSplit {
    /// 1-based index `n` of the upper endpoint `x_n`.
    pub upper_index: usize,
    pub upper_mass: f64,
    pub lower_mass: f64,
}

/// `L_j` (toward zero) and `R_j` (away from zero) for the j-th full interval
/// above the median.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideSplit {
    pub j: usize,
    pub left_mass: f64,
    pub right_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingTable {
    #[serde(rename = "N")]
    pub n: usize,
    pub intervals: Vec<IntervalSplit>,
    pub positive_side: Vec<SideSplit>,
    /// For even N, the split of the interval straddling zero.
    pub central: Option<IntervalSplit>,
    pub atom_masses: Vec<f64>,
}

/// The table depends only on N; the configuration fixes it.
pub fn coupling_masses(cfg: &Configuration) -> CouplingTable {
    coupling_table(cfg.n())
}

pub fn coupling_table(big_n: usize) -> CouplingTable {
    let nf = big_n as f64;
    let intervals: Vec<IntervalSplit> = (1..big_n)
        .map(|n| {
            let k = n as f64;
            IntervalSplit {
                upper_index: n,
                upper_mass: k / nf - (k - 1.0) / (nf - 1.0),
                lower_mass: k / (nf - 1.0) - k / nf,
            }
        })
        .collect();
    let mut atom_masses = vec![0.0; big_n];
    for s in &intervals {
        atom_masses[s.upper_index - 1] += s.upper_mass;
        atom_masses[s.upper_index] += s.lower_mass;
    }
    // For odd N the median is x_m with m = (N+1)/2 and interval j above it
    // is n = m - j; for even N, m = N/2 and interval m straddles zero.
    let m = if big_n % 2 == 1 {
        big_n.div_ceil(2)
    } else {
        big_n / 2
    };
    let positive_side = (1..m)
        .map(|j| {
            let s = &intervals[m - j - 1];
            SideSplit {
                j,
                left_mass: s.lower_mass,
                right_mass: s.upper_mass,
            }
        })
        .collect();
    let central = (big_n % 2 == 0).then(|| intervals[m - 1].clone());
    CouplingTable {
        n: big_n,
        intervals,
        positive_side,
        central,
        atom_masses,
    }
}

/// Joint sampler for `(X_N, X̃_N)`.
#[derive(Debug, Clone)]
pub struct Coupling {
    breakpoints: Vec<f64>,
    /// Fraction of each interval's length (from its lower end) whose mass
    /// goes to the lower endpoint.
    lower_fraction: Vec<f64>,
}

impl Coupling {
    pub fn new(cfg: &Configuration) -> Self {
        let table = coupling_masses(cfg);
        let scale = (cfg.n() - 1) as f64;
        Self {
            breakpoints: cfg.values_f64().to_vec(),
            lower_fraction: table
                .intervals
                .iter()
                .map(|s| s.lower_mass * scale)
                .collect(),
        }
    }

    /// `E|X_N − X̃_N|` under this coupling, in closed form: inside an
    /// interval of length g cut at fraction f the mean distance to the
    /// assigned endpoint is `g (f² + (1−f)²)/2`.
    pub fn expected_displacement(&self) -> f64 {
        let weight = 1.0 / self.lower_fraction.len() as f64;
        self.lower_fraction
            .iter()
            .enumerate()
            .map(|(i, &f)| {
                let g = self.breakpoints[i] - self.breakpoints[i + 1];
                weight * g * (f * f + (1.0 - f) * (1.0 - f)) / 2.0
            })
            .sum()
    }

    /// Returns `(X_N, X̃_N)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let i = rng.random_range(0..self.lower_fraction.len());
        let u: f64 = rng.random();
        let (hi, lo) = (self.breakpoints[i], self.breakpoints[i + 1]);
        let tilde = lo + u * (hi - lo);
        let atom = if u < self.lower_fraction[i] { lo } else { hi };
        (atom, tilde)
    }
}

pub fn coupled_sample<R: Rng + ?Sized>(coupling: &Coupling, rng: &mut R) -> (f64, f64) {
    coupling.sample(rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroBiasIdentity {
    /// Test function `f(x) = x^power`.
    pub power: u32,
    /// `σ² E[f'(X̃)]` with `σ² = 1 − 1/N`.
    pub lhs: f64,
    /// `E[X f(X)]` under the empirical law.
    pub rhs: f64,
    pub defect: f64,
}

/// Checks `σ² E[f'(X̃)] = E[X f(X)]` for `f(x) = x^power` by exact finite
/// sums.
pub fn zero_bias_identity(
    cfg: &Configuration,
    dens: &ZeroBiasDensity,
    power: u32,
) -> ZeroBiasIdentity {
    assert!(power >= 1, "f(x) = x^0 has zero derivative");
    let n = cfg.n() as f64;
    let sigma2 = 1.0 - 1.0 / n;
    let lhs = sigma2 * f64::from(power) * dens.moment(power - 1);
    let prec = cfg.prec();
    let mut acc = Float::with_val(prec, 0);
    for v in cfg.values() {
        acc += Float::with_val(prec, v.pow(power + 1));
    }
    let rhs = (acc / cfg.n() as u64).to_f64();
    ZeroBiasIdentity {
        power,
        lhs,
        rhs,
        defect: (lhs - rhs).abs(),
    }
}
