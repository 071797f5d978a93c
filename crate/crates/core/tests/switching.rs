use farezone_core::corridor::{CorridorScenario, StagePolicy};
use farezone_core::demand::GbmParams;
use farezone_core::options::{
    dp_cross_check, dp_oracle, solve_thresholds, AffineFlow, DpGrid, SwitchingInputs,
};
use farezone_core::search::{optimize_stage0, optimize_stage1, SearchSpec};
use farezone_core::welfare::{welfare_coefficients, GainCoefficients};
use proptest::prelude::*;

fn inputs(delta_q: f64, delta_c: f64, d: f64, k: f64) -> SwitchingInputs {
    let gbm = GbmParams::baseline();
    SwitchingInputs {
        gain: GainCoefficients::from_deltas(delta_q, delta_c, gbm.growth, gbm.discount).unwrap(),
        gbm,
        activation_cost: d,
        deactivation_cost: k,
    }
}

fn baseline_flows() -> [AffineFlow; 2] {
    let s = CorridorScenario::baseline();
    let spec = SearchSpec::for_scenario(&s);
    let f0 = optimize_stage0(&s, &spec).unwrap().frequency;
    let s1 = optimize_stage1(&s, &spec).unwrap();
    let c0 = welfare_coefficients(&s, &StagePolicy::fare_based(s.fare, f0)).unwrap();
    let c1 = welfare_coefficients(
        &s,
        &StagePolicy::fare_free(s1.zone_length, s1.frequency, s.fare),
    )
    .unwrap();
    [
        AffineFlow {
            slope: c0.d_q,
            intercept: c0.d_c,
        },
        AffineFlow {
            slope: c1.d_q,
            intercept: c1.d_c,
        },
    ]
}

fn gain_of(flows: &[AffineFlow; 2], d: f64, k: f64) -> SwitchingInputs {
    inputs(
        flows[1].slope - flows[0].slope,
        flows[1].intercept - flows[0].intercept,
        d,
        k,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn thresholds_sandwich_single_threshold(
        eta in -0.02..0.03f64,
        sigma in 0.05..0.4f64,
        gap in 0.005..0.05f64,
        delta_q in 1.0..100.0f64,
        delta_c in -1e5..-100.0f64,
        d in 1.0..1e4f64,
        k_share in 0.001..0.9f64,
    ) {
        let gbm = GbmParams { growth: eta, volatility: sigma, discount: eta.max(0.0) + gap, initial: 100.0 };
        let gain = GainCoefficients::from_deltas(delta_q, delta_c, gbm.growth, gbm.discount).unwrap();
        let i = SwitchingInputs { gain, gbm, activation_cost: d, deactivation_cost: -gain.nu_1 * k_share };
        let s = solve_thresholds(&i).unwrap();
        prop_assert!(s.lower < s.single_threshold && s.single_threshold < s.upper);
        prop_assert!(s.residual_norm < 1e-8, "residual {}", s.residual_norm);
        prop_assert!(s.lower > 0.0);
    }
}

#[test]
fn costs_push_thresholds_apart() {
    let costs = [100.0, 1_000.0, 3_000.0, 10_000.0, 30_000.0];
    let grid: Vec<Vec<_>> = costs
        .iter()
        .map(|&d| {
            costs
                .iter()
                .map(|&k| solve_thresholds(&inputs(25.8, -6856.0, d, k)).unwrap())
                .collect()
        })
        .collect();
    #[allow(clippy::needless_range_loop)]
    for i in 0..5 {
        for j in 0..4 {
            // raising D with K fixed, and K with D fixed
            assert!(grid[j + 1][i].upper >= grid[j][i].upper);
            assert!(grid[i][j + 1].lower <= grid[i][j].lower);
        }
    }
}

#[test]
fn steeper_gain_lowers_every_threshold() {
    let mut prev: Option<(f64, f64, f64)> = None;
    for delta_q in [20.0, 24.0, 28.0, 32.0] {
        let s = solve_thresholds(&inputs(delta_q, -6856.0, 5000.0, 5000.0)).unwrap();
        if let Some((u, l, q)) = prev {
            assert!(s.upper < u && s.lower < l && s.single_threshold < q);
        }
        prev = Some((s.upper, s.lower, s.single_threshold));
    }
}

#[test]
fn vanishing_costs_converge_to_single_threshold() {
    let mut last_gap = f64::INFINITY;
    let mut rel = 0.0;
    for c in [1e3, 1e1, 1e-1, 1e-3, 1e-5] {
        let s = solve_thresholds(&inputs(25.8, -6856.0, c, c)).unwrap();
        let q = s.single_threshold;
        rel = ((s.upper - q) / q).max((q - s.lower) / q);
        assert!(rel < last_gap);
        last_gap = rel;
    }
    assert!(rel < 1e-3, "relative gap {rel}");
}

#[test]
fn dp_oracle_agrees_with_analytic_thresholds() {
    let flows = baseline_flows();
    let s = solve_thresholds(&gain_of(&flows, 5000.0, 5000.0)).unwrap();
    let dp = dp_cross_check(
        &flows,
        &GbmParams::baseline(),
        5000.0,
        5000.0,
        &DpGrid::default(),
    )
    .unwrap();
    assert!(dp.coarse.monotone && dp.fine.monotone);
    assert!(
        (dp.upper / s.upper - 1.0).abs() < 0.05,
        "{} vs {}",
        dp.upper,
        s.upper
    );
    assert!(
        (dp.lower / s.lower - 1.0).abs() < 0.05,
        "{} vs {}",
        dp.lower,
        s.lower
    );
    // Monthly decisions alone sit inside the continuous band.
    assert!(dp.coarse.upper < s.upper && dp.coarse.lower > s.lower);
}

#[test]
fn dp_oracle_is_grid_converged() {
    let flows = baseline_flows();
    let gbm = GbmParams::baseline();
    let a = dp_oracle(&flows, &gbm, 5000.0, 5000.0, &DpGrid::default()).unwrap();
    let b = dp_oracle(
        &flows,
        &gbm,
        5000.0,
        5000.0,
        &DpGrid {
            points: 4000,
            ..DpGrid::default()
        },
    )
    .unwrap();
    assert!((a.upper / b.upper - 1.0).abs() < 0.01);
    assert!((a.lower / b.lower - 1.0).abs() < 0.01);
}

#[test]
fn dp_without_costs_finds_single_indifference_point() {
    let flows = baseline_flows();
    let q_star = solve_thresholds(&gain_of(&flows, 0.0, 0.0))
        .unwrap()
        .single_threshold;
    let dp = dp_oracle(&flows, &GbmParams::baseline(), 0.0, 0.0, &DpGrid::default()).unwrap();
    let cell = dp.log_step.exp();
    assert_eq!(dp.upper, dp.lower);
    assert!(dp.upper / q_star < cell && q_star / dp.upper < cell);
}

#[test]
fn dp_rejects_decreasing_gain() {
    let flows = [
        AffineFlow {
            slope: 10.0,
            intercept: 0.0,
        },
        AffineFlow {
            slope: 5.0,
            intercept: 100.0,
        },
    ];
    assert!(dp_oracle(&flows, &GbmParams::baseline(), 1.0, 1.0, &DpGrid::default()).is_err());
}
