use miw_core::zero_bias::Coupling;
use miw_core::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Strictly decreasing, zero-mean configurations built from positive gaps.
fn decreasing_config() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..2.0, 2..40).prop_map(|gaps| {
        let mut v = vec![0.0];
        for g in gaps {
            let next = v[v.len() - 1] - g;
            v.push(next);
        }
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| x - mean).collect()
    })
}

proptest! {
    #[test]
    fn hamiltonian_bounded_below(v in decreasing_config()) {
        let cfg = Configuration::from_f64(&v);
        let h = hamiltonian(&cfg).unwrap();
        let floor = 2.0 * (v.len() as f64 - 1.0);
        prop_assert!(h.h >= floor * (1.0 - 1e-12), "H = {} < {}", h.h, floor);
    }

    #[test]
    fn documents_round_trip(v in decreasing_config()) {
        let cfg = Configuration::from_f64(&v);
        let doc = ConfigurationDocument::from_configuration(&cfg);
        let back = ConfigurationDocument::from_json(&doc.to_json()).unwrap();
        prop_assert_eq!(&back, &doc);
        let parsed = back.to_configuration().unwrap();
        prop_assert_eq!(parsed.values_f64(), cfg.values_f64());
    }

    #[test]
    fn coupled_draws_stay_within_one_gap(n in 3usize..60, seed in any::<u64>()) {
        let cfg = solve_ground_state(n, &SolverOptions::default()).unwrap();
        let coupling = Coupling::new(&cfg);
        let mesh = cfg.mesh();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..200 {
            let (x, t) = coupling.sample(&mut rng);
            prop_assert!((x - t).abs() <= mesh);
        }
    }

    #[test]
    fn density_has_unit_mass(n in 3usize..80) {
        let cfg = solve_ground_state(n, &SolverOptions::default()).unwrap();
        let d = build_density(&cfg).unwrap();
        prop_assert!((d.total_mass() - 1.0).abs() < 1e-12);
        prop_assert!(d.is_unimodal());
    }
}

#[test]
fn ground_states_attain_the_floor() {
    for n in [3, 7, 30] {
        let cfg = solve_ground_state(n, &SolverOptions::default()).unwrap();
        let h = hamiltonian(&cfg).unwrap();
        assert!(h.defect < 1e-12 * n as f64, "{h:?}");
    }
}
