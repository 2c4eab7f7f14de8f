use corrlearn::planner::objective;
use corrlearn::{generate_scenario, normalized_cost, plan, Environment, GenConfig, PlannerConfig};
use proptest::prelude::*;

#[test]
fn normalization_anchors_are_exact() {
    let cfg = GenConfig::default();
    for (f, m) in [(1, 1), (2, 1), (3, 2), (5, 5)] {
        for seed in 0..5 {
            let s = generate_scenario(f, m, seed, &cfg).unwrap();
            assert_eq!(normalized_cost(&s.truth.optimal, &s.env, &s.truth).unwrap(), 0.0);
            assert_eq!(normalized_cost(&s.truth.straight, &s.env, &s.truth).unwrap(), 1.0);
        }
    }
}

#[test]
fn generated_scenarios_round_trip_through_json() {
    let cfg = GenConfig::default();
    let s = generate_scenario(3, 2, 11, &cfg).unwrap();
    let text = s.env.to_json();
    let back = Environment::from_json(&text).unwrap();
    assert_eq!(back, s.env);
    // The optimum is reproducible from the document alone.
    let again = plan(&back, back.ground_truth_w.as_ref().unwrap(), &cfg.planner, None).unwrap();
    assert_eq!(again, s.truth.optimal);
}

#[test]
fn figure_four_scene_shape() {
    let s = generate_scenario(5, 2, 3, &GenConfig::default()).unwrap();
    assert_eq!(s.env.obstacles.len(), 10);
    assert!((0..5).all(|k| s.env.instances_of(k) == 2));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn plans_are_deterministic_and_never_worse(
        seed in 0u64..10_000,
        f in 1usize..4,
        m in 1usize..4,
        scale in -3.0f64..3.0,
    ) {
        let cfg = GenConfig::default();
        let s = generate_scenario(f, m, seed, &cfg).unwrap();
        let w: Vec<f64> = s.env.ground_truth_w.as_ref().unwrap().iter().map(|v| v * scale).collect();
        let pc = PlannerConfig::default();
        let a = plan(&s.env, &w, &pc, None).unwrap();
        let b = plan(&s.env, &w, &pc, None).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.waypoint(0), s.env.start.as_slice());
        prop_assert_eq!(a.waypoint(pc.horizon), s.env.goal.as_slice());
        let straight = s.env.straight_line(pc.horizon).unwrap();
        let ja = objective(&a, &s.env, &w, pc.smooth_mu).unwrap();
        let js = objective(&straight, &s.env, &w, pc.smooth_mu).unwrap();
        prop_assert!(ja <= js);
    }

    #[test]
    fn generation_is_a_pure_function_of_its_inputs(seed in any::<u64>(), f in 1usize..6, m in 1usize..4) {
        let cfg = GenConfig::default();
        let a = generate_scenario(f, m, seed, &cfg).unwrap();
        let b = generate_scenario(f, m, seed, &cfg).unwrap();
        prop_assert_eq!(a.env.to_json(), b.env.to_json());
        prop_assert_eq!(&a.truth, &b.truth);
        prop_assert!(a.truth.straight_cost - a.truth.optimal_cost >= 1e-9);
    }
}
