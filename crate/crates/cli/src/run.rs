//! The subcommands. Each returns a [`Report`] and touches no files itself.

use std::collections::BTreeMap;
use std::path::Path;

use farezone_core::corridor::{CorridorScenario, Stage, StagePolicy};
use farezone_core::demand::{calibrate, mean_path, simulate_paths, DemandPath};
use farezone_core::equity::{equity_of, BenefitWeights, LorenzPoint};
use farezone_core::options::{dp_cross_check, DpCrossCheck, SwitchingInputs};
use farezone_core::policy::{
    regime_report, regime_setup_with, run_policy, PathMode, Period, Regime, RegimeSetup,
};
use farezone_core::search::{
    optimize_benefit_with, optimize_frequency_at, optimize_stage0, optimize_stage1, FrequencyRule,
    OptimumResult,
};
use farezone_core::welfare::surplus_density;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::{ScenarioConfig, Setting, Settings};
use crate::emit::{json_num, month_label, num, Report, Table};
use crate::error::CliError;
use crate::ridership::RidershipSeries;

/// Positions sampled along the corridor for the profile files.
const PROFILE_POINTS: usize = 500;

/// A validated configuration and the hash of the text it came from.
#[derive(Debug, Clone)]
pub struct Session {
    pub config: ScenarioConfig,
    pub config_sha256: String,
}

impl Session {
    pub fn from_text(text: &str) -> Result<Self, CliError> {
        Ok(Self {
            config: ScenarioConfig::parse(text)?,
            config_sha256: format!("{:x}", Sha256::digest(text.as_bytes())),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_text(&text)
    }

    fn report(&self, command: &str) -> (Report, Settings) {
        let settings = self.config.settings();
        let mut r = Report::default();
        r.set("command", command);
        r.set("config_sha256", self.config_sha256.clone());
        r.set("seed", settings.seed);
        let assumed: Map<String, Value> = self
            .config
            .assumed()
            .into_iter()
            .map(|(k, v)| (k, setting_json(&v)))
            .collect();
        r.set("assumed", Value::Object(assumed));
        (r, settings)
    }
}

fn setting_json(s: &Setting) -> Value {
    match s {
        Setting::Real(v) => json_num(*v),
        Setting::Count(v) => Value::from(*v),
        Setting::Flag(v) => Value::Bool(*v),
        Setting::Text(v) => Value::String(v.clone()),
        Setting::List(v) => v.iter().map(|x| json_num(*x)).collect(),
    }
}

fn stage_name(stage: Stage) -> &'static str {
    match stage {
        Stage::FareBased => "fare_based",
        Stage::FareFree => "fare_free",
    }
}

fn regime_name(regime: Regime) -> &'static str {
    match regime {
        Regime::Welfare => "welfare",
        Regime::Equity => "equity",
    }
}

fn optimum_json(o: &OptimumResult) -> Value {
    json!({
        "zone_length": json_num(o.zone_length),
        "frequency": json_num(o.frequency),
        "welfare": json_num(o.welfare),
        "boundary_optimum": o.boundary_optimum,
    })
}

fn optimum_policy(s: &CorridorScenario, o: &OptimumResult) -> StagePolicy {
    match o.stage {
        Stage::FareBased => StagePolicy::fare_based(s.fare, o.frequency),
        Stage::FareFree => StagePolicy::fare_free(o.zone_length, o.frequency, s.fare),
    }
}

fn profile_positions(a: f64) -> Vec<f64> {
    (0..=PROFILE_POINTS)
        .map(|i| a * i as f64 / PROFILE_POINTS as f64)
        .collect()
}

/// Welfare optima of the requested stages, the searched surface, and the
/// mode-split and surplus profiles at each optimum.
pub fn static_opt(session: &Session, stage: Option<Stage>) -> Result<Report, CliError> {
    let (mut report, st) = session.report("static-opt");
    let s = &st.corridor;
    let mut optima = Vec::new();
    if stage != Some(Stage::FareFree) {
        optima.push(optimize_stage0(s, &st.search)?);
    }
    if stage != Some(Stage::FareBased) {
        optima.push(optimize_stage1(s, &st.search)?);
    }
    let mut surface = Table::new(&["stage", "zone_length", "frequency", "welfare"]);
    let mut split = Table::new(&[
        "stage",
        "x",
        "fare",
        "bus_cost",
        "auto_cost",
        "pr_bus",
        "pr_auto",
    ]);
    let mut surplus = Table::new(&["stage", "x", "bus_surplus", "auto_surplus", "total_surplus"]);
    for o in &optima {
        let name = stage_name(o.stage);
        let mut cells = o.surface.clone();
        // The refined optimum is an evaluated cell too; listing it keeps the
        // file's maximum equal to the reported optimum.
        if !cells
            .iter()
            .any(|c| c.zone_length == o.zone_length && c.frequency == o.frequency)
        {
            cells.push(farezone_core::search::SurfacePoint {
                zone_length: o.zone_length,
                frequency: o.frequency,
                welfare: o.welfare,
            });
            cells.sort_by(|a, b| {
                (a.zone_length, a.frequency)
                    .partial_cmp(&(b.zone_length, b.frequency))
                    .unwrap()
            });
        }
        for c in cells {
            surface.push(vec![
                name.into(),
                num(c.zone_length),
                num(c.frequency),
                num(c.welfare),
            ]);
        }
        let policy = optimum_policy(s, o);
        for x in profile_positions(s.corridor_length) {
            let p = s.profile(&policy, x)?;
            split.push(vec![
                name.into(),
                num(x),
                num(p.fare),
                num(p.bus_cost),
                num(p.auto_cost),
                num(p.pr_bus),
                num(p.pr_auto),
            ]);
            let bus = surplus_density(s, &policy, x, farezone_core::corridor::Mode::Bus)?;
            let auto = surplus_density(s, &policy, x, farezone_core::corridor::Mode::Auto)?;
            surplus.push(vec![
                name.into(),
                num(x),
                num(bus),
                num(auto),
                num(bus + auto),
            ]);
        }
        report.set(&format!("optimum_{name}"), optimum_json(o));
    }
    report.table("welfare_surface.csv", surface);
    report.table("mode_split.csv", split);
    report.table("surplus_profile.csv", surplus);
    Ok(report)
}

fn lorenz_rows(table: &mut Table, name: &str, points: &[LorenzPoint]) {
    for p in points {
        table.push(vec![name.into(), num(p.demand_share), num(p.surplus_share)]);
    }
}

/// Gini by zone length per fare, Lorenz curves of the three reference
/// designs, and the benefit index per equity weight.
pub fn equity(
    session: &Session,
    fares: Option<Vec<f64>>,
    mu: Option<Vec<f64>>,
) -> Result<Report, CliError> {
    let (mut report, st) = session.report("equity");
    let s = &st.corridor;
    let fares = fares.unwrap_or(st.fares.clone());
    let mus = mu.unwrap_or(st.mu.clone());
    let mut problems = Vec::new();
    for f in &fares {
        if !(*f >= 0.0 && f.is_finite()) {
            problems.push(format!("--fares: {f} is not a fare >= 0"));
        }
    }
    for m in &mus {
        if !(0.0..=1.0).contains(m) {
            problems.push(format!("--mu: {m} is outside [0, 1]"));
        }
    }
    if fares.is_empty() || mus.is_empty() || !problems.is_empty() {
        problems.push("--fares and --mu need at least one valid value".into());
        return Err(CliError::Validation(problems));
    }

    let stage0 = optimize_stage0(s, &st.search)?;
    let stage1 = optimize_stage1(s, &st.search)?;
    let frequency_at = |scenario: &CorridorScenario, zone: f64| -> Result<f64, CliError> {
        Ok(match st.frequency_rule {
            FrequencyRule::Fixed(f) => f,
            FrequencyRule::Reoptimize => optimize_frequency_at(scenario, zone, &st.search)?.0,
        })
    };

    let mut gini_table = Table::new(&["fare", "zone_length", "frequency", "gini"]);
    for &fare in &fares {
        let scenario = CorridorScenario { fare, ..s.clone() };
        for zone in st.search.zone_length.points() {
            let freq = frequency_at(&scenario, zone)?;
            let (g, _, _) = equity_of(&scenario, &StagePolicy::fare_free(zone, freq, fare))?;
            gini_table.push(vec![num(fare), num(zone), num(freq), num(g)]);
        }
    }
    report.table("gini_vs_zone.csv", gini_table);

    let full_frequency = frequency_at(s, s.corridor_length)?;
    let designs = [
        ("fare_based", optimum_policy(s, &stage0)),
        ("optimized_zone", optimum_policy(s, &stage1)),
        (
            "full_corridor",
            StagePolicy::fare_free(s.corridor_length, full_frequency, s.fare),
        ),
    ];
    let mut lorenz = Table::new(&["policy", "demand_share", "surplus_share"]);
    let mut ginis = Map::new();
    for (name, policy) in &designs {
        let (g, points, _) = equity_of(s, policy)?;
        lorenz_rows(&mut lorenz, name, &points);
        ginis.insert((*name).into(), json_num(g));
    }
    report.table("lorenz.csv", lorenz);
    report.set("gini", Value::Object(ginis));

    let first = BenefitWeights::new(mus[0], st.beta_min, st.beta_max)?;
    let base = optimize_benefit_with(
        s,
        &st.search,
        first,
        st.frequency_rule,
        stage0.clone(),
        stage1.clone(),
    )?;
    let mut benefit = Table::new(&[
        "mu",
        "zone_length",
        "frequency",
        "welfare",
        "sw_index",
        "gini",
        "benefit",
        "feasible",
    ]);
    let mut argmax = Vec::new();
    for &m in &mus {
        let opt = base.reweighted(BenefitWeights::new(m, st.beta_min, st.beta_max)?)?;
        for r in &opt.reports {
            benefit.push(vec![
                num(m),
                num(r.zone_length),
                num(r.frequency),
                num(r.welfare),
                num(r.sw_index),
                num(r.gini),
                num(r.benefit),
                r.feasible.to_string(),
            ]);
        }
        argmax.push(json!({
            "mu": json_num(m),
            "zone_length": json_num(opt.zone_length),
            "frequency": json_num(opt.frequency),
            "benefit": json_num(opt.benefit),
            "gini": json_num(opt.gini),
        }));
    }
    report.table("benefit_vs_zone.csv", benefit);
    report.set("benefit_optimum", argmax);
    report.set("optimum_fare_based", optimum_json(&stage0));
    report.set("optimum_fare_free", optimum_json(&stage1));
    report.set("full_corridor_frequency", json_num(full_frequency));
    Ok(report)
}

/// Drift and volatility of a ridership series.
pub fn calibrate_series(session: &Session, series: &RidershipSeries) -> Result<Report, CliError> {
    let (mut report, st) = session.report("calibrate");
    let c = calibrate(&series.boardings)?;
    let mut table = Table::new(&["month", "boardings", "log_return"]);
    for (i, (&(y, m), &b)) in series.months.iter().zip(&series.boardings).enumerate() {
        let ret = if i == 0 {
            String::new()
        } else {
            num((b / series.boardings[i - 1]).ln())
        };
        table.push(vec![format!("{y:04}-{m:02}"), num(b), ret]);
    }
    report.table("ridership_returns.csv", table);
    let last = *series
        .boardings
        .last()
        .expect("calibrated series is nonempty");
    report.set(
        "calibration",
        json!({
            "eta": json_num(c.growth),
            "sigma": json_num(c.volatility),
            "eta_ci95": [json_num(c.growth_interval.0), json_num(c.growth_interval.1)],
            "sigma_ci95": [json_num(c.volatility_interval.0), json_num(c.volatility_interval.1)],
            "returns": c.returns,
            "discount_exceeds_growth": st.gbm.discount > c.growth,
            "last_density": json_num(last * st.ridership_scale),
        }),
    );
    Ok(report)
}

fn paths_table(paths: &[DemandPath], st: &Settings) -> Result<Table, CliError> {
    let mean = mean_path(paths)?;
    let mut table = Table::new(&["month", "calendar", "expected", "mean"]);
    table
        .header
        .extend((0..paths.len()).map(|i| format!("path_{i}")));
    for (t, m) in mean.iter().enumerate() {
        let mut row = vec![
            t.to_string(),
            month_label(st.start_month, t),
            num(st.gbm.expected_demand(t as f64)),
            num(*m),
        ];
        row.extend(paths.iter().map(|p| num(p.values[t])));
        table.push(row);
    }
    Ok(table)
}

/// Simulated demand paths with their pointwise and analytic means.
pub fn simulate(session: &Session) -> Result<Report, CliError> {
    let (mut report, st) = session.report("simulate");
    let paths = simulate_paths(&st.gbm, st.months, st.paths, st.seed)?;
    report.table("paths.csv", paths_table(&paths, &st)?);
    report.set("months", st.months);
    report.set("paths", st.paths);
    report.set(
        "expected_terminal",
        json_num(st.gbm.expected_demand(st.months as f64)),
    );
    report.set(
        "mean_terminal",
        json_num(*mean_path(&paths)?.last().expect("nonempty")),
    );
    Ok(report)
}

fn setups(
    st: &Settings,
    regimes: &[Regime],
    activation: f64,
    deactivation: f64,
) -> Result<Vec<RegimeSetup>, CliError> {
    let s = &st.corridor;
    let stage0 = optimize_stage0(s, &st.search)?;
    let stage1 = optimize_stage1(s, &st.search)?;
    regimes
        .iter()
        .map(|&r| {
            Ok(regime_setup_with(
                s,
                &st.search,
                &st.gbm,
                activation,
                deactivation,
                r,
                stage0.clone(),
                stage1.clone(),
            )?)
        })
        .collect()
}

fn threshold_rows(table: &mut Table, setup: &RegimeSetup, dp: Option<&DpCrossCheck>) {
    let name = regime_name(setup.regime);
    let t = &setup.thresholds;
    let mut lines = vec![
        ("upper", t.upper),
        ("lower", t.lower),
        ("single_threshold", t.single_threshold),
        ("break_even", setup.break_even),
    ];
    if let Some(dp) = dp {
        lines.extend([("dp_upper", dp.upper), ("dp_lower", dp.lower)]);
    }
    for (line, v) in lines {
        table.push(vec![name.into(), line.into(), num(v)]);
    }
}

fn setup_json(setup: &RegimeSetup, dp: Option<&DpCrossCheck>) -> Value {
    let t = &setup.thresholds;
    let mut v = json!({
        "zone_length": json_num(setup.zone_length),
        "fare_free_frequency": json_num(setup.fare_free_frequency),
        "fare_based_frequency": json_num(setup.fare_based_frequency),
        "delta_q": json_num(setup.gain.delta_q),
        "delta_c": json_num(setup.gain.delta_c),
        "nu_0": json_num(setup.gain.nu_0),
        "nu_1": json_num(setup.gain.nu_1),
        "gamma_positive": json_num(t.roots.positive),
        "gamma_negative": json_num(t.roots.negative),
        "upper": json_num(t.upper),
        "lower": json_num(t.lower),
        "single_threshold": json_num(t.single_threshold),
        "break_even": json_num(setup.break_even),
        "y0": json_num(t.y0),
        "x1": json_num(t.x1),
        "residual": json_num(t.residual_norm),
        "iterations": t.iterations,
        "method": format!("{:?}", t.method),
        "activation_cost": json_num(setup.context.activation_cost),
        "deactivation_cost": json_num(setup.context.deactivation_cost),
    });
    if let Some(dp) = dp {
        let rel = |a: f64, b: f64| json_num((a - b).abs() / b);
        v["dp"] = json!({
            "upper": json_num(dp.upper),
            "lower": json_num(dp.lower),
            "coarse_upper": json_num(dp.coarse.upper),
            "coarse_lower": json_num(dp.coarse.lower),
            "fine_upper": json_num(dp.fine.upper),
            "fine_lower": json_num(dp.fine.lower),
            "relative_gap_upper": rel(dp.upper, t.upper),
            "relative_gap_lower": rel(dp.lower, t.lower),
            "monotone": dp.coarse.monotone && dp.fine.monotone,
        });
    }
    v
}

/// Switching thresholds of each regime, optionally checked against value
/// iteration.
pub fn thresholds(
    session: &Session,
    regimes: &[Regime],
    no_switching_cost: bool,
    dp_check: bool,
) -> Result<Report, CliError> {
    let (mut report, st) = session.report("thresholds");
    let (d, k) = if no_switching_cost {
        (0.0, 0.0)
    } else {
        (st.activation_cost, st.deactivation_cost)
    };
    let mut table = Table::new(&["regime", "line", "value"]);
    let mut out = Map::new();
    for setup in setups(&st, regimes, d, k)? {
        let dp = if dp_check {
            let inputs = SwitchingInputs {
                gain: setup.gain,
                gbm: st.gbm,
                activation_cost: d,
                deactivation_cost: k,
            };
            Some(dp_cross_check(&inputs.flows(), &st.gbm, d, k, &st.dp_grid)?)
        } else {
            None
        };
        threshold_rows(&mut table, &setup, dp.as_ref());
        out.insert(
            regime_name(setup.regime).into(),
            setup_json(&setup, dp.as_ref()),
        );
    }
    report.table("threshold_lines.csv", table);
    report.set("regimes", Value::Object(out));
    Ok(report)
}

fn period_list(periods: &[Period], mode: Stage, start: (i32, u32)) -> (String, usize) {
    let picked: Vec<&Period> = periods.iter().filter(|p| p.mode == mode).collect();
    let text = picked
        .iter()
        .map(|p| {
            format!(
                "{}..{}",
                month_label(start, p.start),
                month_label(start, p.end)
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    (text, picked.iter().map(|p| p.end - p.start).sum())
}

/// Runs the five policy families of each regime on seeded demand paths.
pub fn policy_eval(session: &Session, regimes: &[Regime]) -> Result<Report, CliError> {
    let (mut report, st) = session.report("policy-eval");
    let paths = simulate_paths(&st.gbm, st.months, st.paths, st.seed)?;
    let mean = mean_path(&paths)?;
    let mut thresholds_table = Table::new(&["regime", "line", "value"]);
    let mut ranking = Table::new(&[
        "regime",
        "rank",
        "policy",
        "mean_payoff",
        "std_payoff",
        "mean_switches",
        "mean_months_fare_free",
    ]);
    let mut periods = Table::new(&[
        "regime",
        "policy",
        "path",
        "mode",
        "start",
        "end",
        "start_label",
        "end_label",
        "months",
    ]);
    let mut table3 = Table::new(&[
        "regime",
        "zone_length",
        "welfare",
        "upper",
        "lower",
        "single_threshold",
        "fare_based_periods",
        "fare_based_months",
        "fare_free_periods",
        "fare_free_months",
    ]);
    let mut out = Map::new();
    let path_mode = match st.path_mode {
        PathMode::EachPath => "each",
        PathMode::MeanPath => "mean",
    };
    for setup in setups(&st, regimes, st.activation_cost, st.deactivation_cost)? {
        let name = regime_name(setup.regime);
        threshold_rows(&mut thresholds_table, &setup, None);
        let mut entry = setup_json(&setup, None);

        let hysteresis = setup.policies().pop().expect("five policies");
        let on_mean = run_policy(&hysteresis, &mean, &setup.context)?;
        let (fb, fb_months) = period_list(&on_mean.periods, Stage::FareBased, st.start_month);
        let (ff, ff_months) = period_list(&on_mean.periods, Stage::FareFree, st.start_month);
        table3.push(vec![
            name.into(),
            num(setup.zone_length),
            num(setup.context.fare_free.welfare(st.corridor.cbd_density)),
            num(setup.thresholds.upper),
            num(setup.thresholds.lower),
            num(setup.thresholds.single_threshold),
            fb,
            fb_months.to_string(),
            ff,
            ff_months.to_string(),
        ]);

        let rep = regime_report(setup, &paths, st.path_mode)?;
        let mut ranked = Vec::new();
        for (rank, summary) in rep.outcomes.iter().enumerate() {
            let n = summary.per_path.len() as f64;
            let ff_mean = summary
                .per_path
                .iter()
                .map(|o| o.months_fare_free as f64)
                .sum::<f64>()
                / n;
            ranking.push(vec![
                name.into(),
                (rank + 1).to_string(),
                summary.policy.name.clone(),
                num(summary.mean_payoff),
                num(summary.std_payoff),
                num(summary.mean_switches),
                num(ff_mean),
            ]);
            ranked.push(json!({
                "policy": summary.policy.name,
                "mean_payoff": json_num(summary.mean_payoff),
                "mean_switches": json_num(summary.mean_switches),
            }));
        }
        // Period rows follow the fixed policy order, not the ranking.
        let mut by_name: BTreeMap<&str, _> = BTreeMap::new();
        for summary in &rep.outcomes {
            by_name.insert(summary.policy.name.as_str(), summary);
        }
        for policy in rep.setup.policies() {
            let summary = by_name[policy.name.as_str()];
            for (i, outcome) in summary.per_path.iter().enumerate() {
                let path = match rep.path_mode {
                    PathMode::EachPath => i.to_string(),
                    PathMode::MeanPath => "mean".into(),
                };
                for p in &outcome.periods {
                    periods.push(vec![
                        name.into(),
                        policy.name.clone(),
                        path.clone(),
                        stage_name(p.mode).into(),
                        p.start.to_string(),
                        p.end.to_string(),
                        month_label(st.start_month, p.start),
                        month_label(st.start_month, p.end),
                        (p.end - p.start).to_string(),
                    ]);
                }
            }
        }
        entry["ranking"] = Value::Array(ranked);
        out.insert(name.into(), entry);
    }
    report.table("paths.csv", paths_table(&paths, &st)?);
    report.table("threshold_lines.csv", thresholds_table);
    report.table("policy_ranking.csv", ranking);
    report.table("periods.csv", periods);
    report.table("table3.csv", table3);
    report.set("regimes", Value::Object(out));
    report.set("path_mode", path_mode);
    report.set("months", st.months);
    report.set("paths", st.paths);
    report.set("start_month", month_label(st.start_month, 0));
    Ok(report)
}
