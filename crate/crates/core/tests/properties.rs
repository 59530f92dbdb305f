use fhigs::element::{Fhigs, Line, Mode};
use fhigs::experiments::random;
use fhigs::sim::{simulate_epds, simulate_open_loop, SimConfig};
use proptest::prelude::*;

/// Element drawn from `seed`, a state on the sector (on a line when
/// `place` is 0 or 1, strictly inside otherwise) at input `e`.
fn setup(seed: u64, place: f64, xs: &[f64], e: f64) -> (Fhigs<f64>, Vec<f64>) {
    let el = random::element(&mut random::rng(seed));
    let mut x: Vec<f64> = (0..el.dim()).map(|i| xs[i % xs.len()]).collect();
    let v2 = el.v2(&x, e);
    let (k1, k2) = (el.params.k1, el.params.k2);
    x[0] = k1 * v2 + place * (k2 - k1) * v2;
    (el, x)
}

fn place() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), 0.0..1.0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn pwl_field_matches_projected_field(
        seed in any::<u64>(),
        place in place(),
        xs in prop::collection::vec(-1.0..1.0f64, 7),
        e in -2.0..2.0f64,
        e_dot in -50.0..50.0f64,
    ) {
        let (el, x) = setup(seed, place, &xs, e);
        let mode = el.classify_mode(&x, e, e_dot).unwrap();
        let pwl = el.build_pwl().derivative(mode, &x, e, e_dot);
        let mut f = vec![0.0; el.dim()];
        el.unprojected_into(&x, e, &mut f);
        let p = el.project_velocity(&x, e, e_dot, &f).unwrap();
        let scale = 1.0 + f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in pwl.iter().zip(&p.velocity) {
            prop_assert!((a - b).abs() <= 1e-10 * scale, "mode {:?}: {:?} vs {:?}", mode, pwl, p.velocity);
        }
    }

    #[test]
    fn projection_is_idempotent(
        seed in any::<u64>(),
        place in place(),
        xs in prop::collection::vec(-1.0..1.0f64, 7),
        e in -2.0..2.0f64,
        e_dot in -50.0..50.0f64,
        w in prop::collection::vec(-100.0..100.0f64, 7),
    ) {
        let (el, x) = setup(seed, place, &xs, e);
        let f: Vec<f64> = (0..el.dim()).map(|i| w[i]).collect();
        let once = el.project_velocity(&x, e, e_dot, &f).unwrap();
        let twice = el.project_velocity(&x, e, e_dot, &once.velocity).unwrap();
        for (a, b) in once.velocity.iter().zip(&twice.velocity) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
        prop_assert_eq!(twice.active, None);
    }

    #[test]
    fn mode_agrees_with_active_constraint(
        seed in any::<u64>(),
        place in place(),
        xs in prop::collection::vec(-1.0..1.0f64, 7),
        e in -2.0..2.0f64,
        e_dot in -50.0..50.0f64,
    ) {
        let (el, x) = setup(seed, place, &xs, e);
        let mode = el.classify_mode(&x, e, e_dot).unwrap();
        let mut f = vec![0.0; el.dim()];
        el.unprojected_into(&x, e, &mut f);
        let p = el.project_velocity(&x, e, e_dot, &f).unwrap();
        let expected = match p.active {
            None => Mode::Integrator,
            Some(Line::K1) => Mode::GainK1,
            Some(Line::K2) => Mode::GainK2,
        };
        prop_assert_eq!(mode, expected);
        prop_assert!(p.multiplier >= 0.0);
        // strictly inside the sector the flow is never corrected
        if place > 0.0 && place < 1.0 && el.v2(&x, e).abs() > 1e-6 {
            prop_assert_eq!(mode, Mode::Integrator);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trajectories_stay_in_the_sector(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let el = random::element(&mut rng);
        let input = random::sum_of_sines(&mut rng);
        let cfg = SimConfig::new(1e-4, 0.5);
        for tr in [simulate_open_loop(&el, &input, &cfg, &el.zero_state()).unwrap(), simulate_epds(&el, &input, &cfg, &el.zero_state()).unwrap()] {
            for s in &tr.samples {
                prop_assert!(el.sector_violation(s.x_h, s.v2) <= 1e-9, "t = {}", s.t);
            }
        }
    }
}
