use farezone_core::corridor::{CorridorScenario, StagePolicy};
use farezone_core::equity::{equity_of, gini, lorenz_curve, lorenz_gini, BenefitWeights};
use farezone_core::search::{
    optimize_benefit_with, optimize_frequency_at, optimize_stage0, optimize_stage1, FrequencyRule,
    OptimumResult, SearchSpec,
};
use farezone_core::welfare::stage_welfare;

fn baseline() -> (CorridorScenario, SearchSpec, OptimumResult, OptimumResult) {
    let s = CorridorScenario::baseline();
    let spec = SearchSpec::for_scenario(&s);
    let s0 = optimize_stage0(&s, &spec).unwrap();
    let s1 = optimize_stage1(&s, &spec).unwrap();
    (s, spec, s0, s1)
}

fn w1(s: &CorridorScenario, b: f64, f: f64) -> f64 {
    stage_welfare(s, &StagePolicy::fare_free(b, f, s.fare))
        .unwrap()
        .total
}

#[test]
fn baseline_optimum_is_interior_and_in_band() {
    let (s, _, s0, s1) = baseline();
    assert!(!s0.boundary_optimum && !s1.boundary_optimum);
    assert!(
        (20.0..=45.0).contains(&s1.zone_length),
        "B* = {}",
        s1.zone_length
    );
    assert!(
        (5.0..=25.0).contains(&s1.frequency),
        "F* = {}",
        s1.frequency
    );
    assert!(s1.welfare > s0.welfare);
    assert_eq!(s1.surface.len(), 51 * 40);
    assert!(s1.surface.iter().all(|p| p.welfare <= s1.welfare));
    let again = w1(&s, s1.zone_length, s1.frequency);
    assert!((again - s1.welfare).abs() <= 1e-9 * again.abs());
}

#[test]
fn welfare_is_unimodal_in_frequency_at_optimal_zone() {
    let (s, _, _, s1) = baseline();
    let w: Vec<f64> = (2..=80)
        .map(|i| w1(&s, s1.zone_length, i as f64 * 0.5))
        .collect();
    let turns = w
        .windows(3)
        .filter(|t| (t[1] - t[0]).signum() != (t[2] - t[1]).signum())
        .count();
    assert_eq!(turns, 1);
}

#[test]
fn welfare_less_sensitive_to_zone_than_frequency() {
    let (s, _, _, s1) = baseline();
    let (b, f, w) = (s1.zone_length, s1.frequency, s1.welfare);
    let drop_b = (w - w1(&s, b - 1.0, f)).max(w - w1(&s, b + 1.0, f));
    let drop_f = (w - w1(&s, b, f - 1.0)).max(w - w1(&s, b, f + 1.0));
    assert!(drop_b < drop_f, "B drop {drop_b}, F drop {drop_f}");
}

#[test]
fn halving_base_steps_moves_optimum_less_than_a_refined_step() {
    let (s, spec, _, s1) = baseline();
    let mut half = spec;
    half.frequency.step /= 2.0;
    half.zone_length.step /= 2.0;
    let h = optimize_stage1(&s, &half).unwrap();
    let refined = 0.01 + 1e-9;
    assert!((h.zone_length - s1.zone_length).abs() < refined);
    assert!((h.frequency - s1.frequency).abs() < refined);
}

#[test]
fn gini_orders_fare_policies() {
    let (s, spec, s0, s1) = baseline();
    let fb = equity_of(&s, &StagePolicy::fare_based(s.fare, s0.frequency))
        .unwrap()
        .0;
    let (f_full, _) = optimize_frequency_at(&s, s.corridor_length, &spec).unwrap();
    let full = equity_of(
        &s,
        &StagePolicy::fare_free(s.corridor_length, f_full, s.fare),
    )
    .unwrap()
    .0;
    let opt = equity_of(
        &s,
        &StagePolicy::fare_free(s1.zone_length, s1.frequency, s.fare),
    )
    .unwrap()
    .0;
    assert!(
        full < fb && full < opt,
        "full {full}, fare-based {fb}, optimized {opt}"
    );
}

#[test]
fn baseline_lorenz_curve_is_well_formed() {
    let (s, _, _, s1) = baseline();
    let (g, lorenz, groups) = equity_of(
        &s,
        &StagePolicy::fare_free(s1.zone_length, s1.frequency, s.fare),
    )
    .unwrap();
    assert_eq!(groups.len(), 50);
    assert_eq!(
        (lorenz[0].demand_share, lorenz[0].surplus_share),
        (0.0, 0.0)
    );
    assert_eq!(
        (lorenz[50].demand_share, lorenz[50].surplus_share),
        (1.0, 1.0)
    );
    assert!((0.0..=1.0).contains(&g));
    for w in lorenz.windows(2) {
        assert!(w[1].demand_share >= w[0].demand_share && w[1].surplus_share >= w[0].surplus_share);
        assert!(w[1].surplus_share <= w[1].demand_share + 1e-12);
    }
    // With equal weights the area form and the pairwise form agree.
    let values: Vec<f64> = groups.iter().map(|g| g.mean_surplus).collect();
    let uniform = lorenz_curve(&values, &vec![1.0; values.len()]).unwrap();
    let pairwise = gini(&values).unwrap();
    assert!((lorenz_gini(&uniform) - pairwise).abs() <= 2.0 / 50.0 * pairwise);
}

#[test]
fn benefit_optimum_moves_outward_with_equity_weight() {
    let (s, spec, s0, s1) = baseline();
    let run = |mu| {
        optimize_benefit_with(
            &s,
            &spec,
            BenefitWeights::new(mu, 0.0, 1.0).unwrap(),
            FrequencyRule::Reoptimize,
            s0.clone(),
            s1.clone(),
        )
        .unwrap()
    };
    let welfare_only = run(0.0);
    assert_eq!(welfare_only.zone_length, s1.zone_length);
    let at_star = welfare_only
        .reports
        .iter()
        .find(|r| r.zone_length == s1.zone_length)
        .unwrap();
    assert!((at_star.sw_index - 1.0).abs() < 1e-12);
    assert_eq!(run(1.0).zone_length, s.corridor_length);
    assert!(run(0.5).zone_length >= s1.zone_length);
}

#[test]
fn frozen_frequency_is_held_during_benefit_scan() {
    let (s, mut spec, s0, s1) = baseline();
    spec.benefit_step = 1.0;
    let r = optimize_benefit_with(
        &s,
        &spec,
        BenefitWeights::new(0.5, 0.0, 1.0).unwrap(),
        FrequencyRule::Fixed(12.0),
        s0,
        s1,
    )
    .unwrap();
    assert!(r.reports.iter().all(|r| r.frequency == 12.0));
}

#[test]
fn gini_band_with_no_feasible_zone_is_an_error() {
    let (s, mut spec, s0, s1) = baseline();
    spec.benefit_step = 5.0;
    let r = optimize_benefit_with(
        &s,
        &spec,
        BenefitWeights::new(0.5, 0.0, 0.01).unwrap(),
        FrequencyRule::Reoptimize,
        s0,
        s1,
    );
    assert!(matches!(r, Err(farezone_core::Error::Infeasible(_))));
}

#[test]
fn reweighting_matches_a_fresh_scan() {
    let (s, mut spec, s0, s1) = baseline();
    spec.benefit_step = 1.0;
    let run = |mu| {
        optimize_benefit_with(
            &s,
            &spec,
            BenefitWeights::new(mu, 0.0, 1.0).unwrap(),
            FrequencyRule::Reoptimize,
            s0.clone(),
            s1.clone(),
        )
        .unwrap()
    };
    let fresh = run(0.7);
    let reweighted = run(0.0)
        .reweighted(BenefitWeights::new(0.7, 0.0, 1.0).unwrap())
        .unwrap();
    assert_eq!(fresh, reweighted);
}
