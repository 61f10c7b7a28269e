//! Checks against values computed independently of the library: closed
//! forms, polynomial roots, and direct numerical quadrature.

use miw_core::metrics::{
    ks_distance_to_normal, sawtooth_lower_bound, wasserstein_empirical_to_zerobias,
    wasserstein_to_normal,
};
use miw_core::solver::{find_largest_root_sn, find_largest_root_xn};
use miw_core::zero_bias::{zero_bias_identity, Coupling};
use miw_core::*;
use rug::Float;

const BITS: u32 = 200;

fn phi_rug(x: f64) -> f64 {
    // Φ(x) = erfc(−x/√2)/2, evaluated independently of the library
    let mut t = Float::with_val(BITS, -x);
    t /= Float::with_val(BITS, 2).sqrt();
    (t.erfc() / 2u32).to_f64()
}

/// Largest root in `[lo, hi]` of a function that changes sign exactly once.
fn bisect(mut lo: Float, mut hi: Float, f: impl Fn(&Float) -> Float) -> Float {
    let lo_sign = f(&lo).is_sign_positive();
    for _ in 0..BITS {
        let mid = Float::with_val(BITS, &lo + &hi) / 2u32;
        if f(&mid).is_sign_positive() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn upper_quantile_oracle(p: f64) -> f64 {
    let target = Float::with_val(BITS, p);
    bisect(Float::with_val(BITS, 0), Float::with_val(BITS, 40), |z| {
        let mut t = Float::with_val(BITS, z);
        t /= Float::with_val(BITS, 2).sqrt();
        t.erfc() / 2u32 - &target
    })
    .to_f64()
}

#[test]
fn upper_quantiles_match_erfc_inversion() {
    for p in [0.4, 0.1, 0.025, 1.0 / 44.0, 1e-3, 1e-8] {
        let z = normal_upper_quantile(p).unwrap();
        let oracle = upper_quantile_oracle(p);
        assert!(
            (z - oracle).abs() < 1e-12 * oracle.max(1.0),
            "p={p}: {z} vs {oracle}"
        );
    }
    assert!((normal_upper_quantile(0.025).unwrap() - 1.959964).abs() < 1e-6);
    assert!((normal_upper_quantile(1.0 / 44.0).unwrap() - 2.0004).abs() < 1e-4);
}

#[test]
fn four_worlds_match_quartic_root() {
    // x1 = a, x2 = a − 1/a and x2 = −x3 give 4a⁴ − 7a² + 2 = 0
    let quartic = |a: &Float| {
        let a2 = Float::with_val(BITS, a.square_ref());
        Float::with_val(BITS, &a2 * &a2) * 4u32 - Float::with_val(BITS, &a2 * 7u32) + 2u32
    };
    let root = bisect(Float::with_val(BITS, 1), Float::with_val(BITS, 2), quartic).to_f64();
    let closed = ((7.0 + 17f64.sqrt()) / 8.0).sqrt();
    assert!((root - closed).abs() < 1e-14);

    let cfg = solve_ground_state(4, &SolverOptions::default()).unwrap();
    assert!((cfg.x1() - root).abs() < 1e-10, "{} vs {root}", cfg.x1());
    let v = cfg.values_f64();
    assert!((v[1] - (root - 1.0 / root)).abs() < 1e-10);
}

#[test]
fn third_roots_match_closed_forms() {
    // x3(a) = 0  ⇔ 2a⁴ − 4a² + 1 = 0 ; S3(a) = 0 ⇔ 3a⁴ − 4a² + 1 = 0
    let opts = SolverOptions::default();
    let a3 = find_largest_root_xn(3, &opts).unwrap().to_f64();
    let b3 = find_largest_root_sn(3, &opts).unwrap().to_f64();
    assert!((a3 - (1.0 + 0.5f64.sqrt()).sqrt()).abs() < 1e-14);
    assert!((b3 - 1.0).abs() < 1e-14);
}

/// Adaptive Simpson with an absolute tolerance.
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    rec(
        f,
        a,
        b,
        fa,
        fm,
        fb,
        (b - a) / 6.0 * (fa + 4.0 * fm + fb),
        tol,
        40,
    )
}

fn wasserstein_by_quadrature(values: &[f64]) -> f64 {
    let mut z = values.to_vec();
    z.reverse();
    let n = z.len() as f64;
    let mut total = 0.0;
    let lower_tail = |x: f64| phi_rug(x);
    total += simpson(&lower_tail, z[0] - 12.0, z[0], 1e-14);
    for i in 1..z.len() {
        let level = i as f64 / n;
        let gap = |x: f64| (level - phi_rug(x)).abs();
        total += simpson(&gap, z[i - 1], z[i], 1e-14);
    }
    let last = z[z.len() - 1];
    let upper_tail = |x: f64| 1.0 - phi_rug(x);
    total + simpson(&upper_tail, last, last + 12.0, 1e-14)
}

#[test]
fn wasserstein_to_normal_matches_quadrature() {
    let three = Configuration::from_f64(&[1.0, 0.0, -1.0]);
    let exact = wasserstein_to_normal(&three);
    let quad = wasserstein_by_quadrature(three.values_f64());
    assert!((exact - quad).abs() < 1e-10 * quad, "{exact} vs {quad}");

    for n in [8, 22] {
        let cfg = solve_ground_state(n, &SolverOptions::default()).unwrap();
        let exact = wasserstein_to_normal(&cfg);
        let quad = wasserstein_by_quadrature(cfg.values_f64());
        assert!(
            (exact - quad).abs() < 1e-8 * quad,
            "N={n}: {exact} vs {quad}"
        );
    }
}

#[test]
fn ks_of_three_points_is_the_largest_candidate() {
    let cfg = Configuration::from_f64(&[1.0, 0.0, -1.0]);
    let mut best = 0.0f64;
    for (i, x) in [-1.0, 0.0, 1.0].into_iter().enumerate() {
        let p = phi_rug(x);
        best = best.max((p - i as f64 / 3.0).abs());
        best = best.max((p - (i + 1) as f64 / 3.0).abs());
    }
    assert!((ks_distance_to_normal(&cfg) - best).abs() < 1e-15);
}

#[test]
fn zerobias_distance_equals_optimal_coupling_cost() {
    // in one dimension the monotone coupling attains the Wasserstein
    // distance, so the CDF integral and the coupling cost must coincide
    for n in [5, 22, 101] {
        let cfg = solve_ground_state(n, &SolverOptions::default()).unwrap();
        let by_cdf = wasserstein_empirical_to_zerobias(&cfg).unwrap();
        let by_coupling = Coupling::new(&cfg).expected_displacement();
        assert!(
            (by_cdf - by_coupling).abs() < 1e-13,
            "N={n}: {by_cdf} vs {by_coupling}"
        );
        assert!(by_cdf >= sawtooth_lower_bound(&cfg).unwrap().value);
    }
}

#[test]
fn first_order_identity_uses_reduced_variance() {
    for n in [3, 10, 22, 200] {
        let cfg = solve_ground_state(n, &SolverOptions::default()).unwrap();
        let dens = build_density(&cfg).unwrap();
        let id = zero_bias_identity(&cfg, &dens, 1);
        assert!(id.defect < 1e-10, "N={n}: {id:?}");
        assert!((id.rhs - (1.0 - 1.0 / n as f64)).abs() < 1e-12);
    }
}

#[test]
fn larger_configurations_sit_closer_to_normal() {
    let mut last = (f64::INFINITY, f64::INFINITY);
    for n in [11, 22, 50, 100] {
        let cfg = solve_ground_state(n, &SolverOptions::default()).unwrap();
        let d = (wasserstein_to_normal(&cfg), ks_distance_to_normal(&cfg));
        assert!(d.0 < last.0 && d.1 < last.1, "N={n}");
        last = d;
    }
}
