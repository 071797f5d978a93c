//! Month-by-month evaluation of switching policies on demand paths, and the
//! full pipeline for the welfare-optimal and full-corridor fare-free regimes.

use alloc::string::String;
use alloc::vec::Vec;

use crate::corridor::{CorridorScenario, Stage, StagePolicy};
use crate::demand::{mean_path, DemandPath, GbmParams};
use crate::error::invalid;
use crate::options::{solve_thresholds, SwitchingInputs, SwitchingSolution};
use crate::search::{optimize_stage0, optimize_stage1, OptimumResult, SearchSpec};
use crate::welfare::{welfare_coefficients, GainCoefficients, WelfareCoefficients};
use crate::{Error, Result};

/// Rule deciding the operating mode from the current demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyKind {
    AlwaysFareBased,
    AlwaysFareFree,
    /// Fare-free while the expected demand `Q0 e^{eta t}` is at least the break-even density.
    DeterministicBreakEven {
        break_even: f64,
    },
    /// Fare-free while demand is at least `threshold`.
    SingleThreshold {
        threshold: f64,
    },
    /// Enter fare-free at `upper`, return to fare-based at `lower`.
    Hysteresis {
        upper: f64,
        lower: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub name: String,
    pub kind: PolicyKind,
    pub initial_mode: Stage,
}

impl Policy {
    pub fn new(name: &str, kind: PolicyKind) -> Self {
        Self {
            name: name.into(),
            kind,
            initial_mode: Stage::FareBased,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        match self.kind {
            PolicyKind::DeterministicBreakEven { break_even } if !positive(break_even) => {
                Err(invalid("break_even", "must be positive and finite"))
            }
            PolicyKind::SingleThreshold { threshold } if !positive(threshold) => {
                Err(invalid("threshold", "must be positive and finite"))
            }
            PolicyKind::Hysteresis { upper, lower }
                if !(positive(lower) && positive(upper) && lower < upper) =>
            {
                Err(invalid("thresholds", "hysteresis needs 0 < lower < upper"))
            }
            _ => Ok(()),
        }
    }

    fn decide(&self, mode: Stage, month: usize, q: f64, gbm: &GbmParams) -> Stage {
        let pick = |free: bool| {
            if free {
                Stage::FareFree
            } else {
                Stage::FareBased
            }
        };
        match self.kind {
            PolicyKind::AlwaysFareBased => Stage::FareBased,
            PolicyKind::AlwaysFareFree => Stage::FareFree,
            PolicyKind::DeterministicBreakEven { break_even } => {
                pick(gbm.expected_demand(month as f64) >= break_even)
            }
            PolicyKind::SingleThreshold { threshold } => pick(q >= threshold),
            PolicyKind::Hysteresis { upper, lower } => match mode {
                Stage::FareBased => pick(q >= upper),
                Stage::FareFree => pick(q > lower),
            },
        }
    }
}

/// Shared inputs of every policy evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyContext {
    pub fare_based: WelfareCoefficients,
    pub fare_free: WelfareCoefficients,
    pub gbm: GbmParams,
    pub activation_cost: f64,
    pub deactivation_cost: f64,
}

impl PolicyContext {
    fn welfare(&self, mode: Stage, q: f64) -> f64 {
        match mode {
            Stage::FareBased => self.fare_based.welfare(q),
            Stage::FareFree => self.fare_free.welfare(q),
        }
    }
}

/// Maximal run of months spent in one mode, `start..end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Period {
    pub mode: Stage,
    pub start: usize,
    pub end: usize,
}

/// Result of one policy on one path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathOutcome {
    /// Discounted welfare net of discounted switching costs ($).
    pub payoff: f64,
    /// Months at which the mode changed.
    pub switch_months: Vec<usize>,
    pub months_fare_based: usize,
    pub months_fare_free: usize,
    pub periods: Vec<Period>,
}

/// Runs the policy over the path's first `T` months (`T = len - 1`). Each
/// month the rule is applied to that month's demand, the switching cost is
/// charged if the mode changes, and the month's welfare accrues at the new
/// mode, all discounted by `e^{-kt}`.
pub fn run_policy(policy: &Policy, path: &[f64], ctx: &PolicyContext) -> Result<PathOutcome> {
    policy.validate()?;
    if path.len() < 2 {
        return Err(invalid("path", "need at least one month"));
    }
    if path.iter().any(|q| !(*q > 0.0 && q.is_finite())) {
        return Err(invalid("path", "demand must be positive and finite"));
    }
    let k = ctx.gbm.discount;
    let mut mode = policy.initial_mode;
    let mut payoff = 0.0;
    let mut switch_months = Vec::new();
    let mut periods: Vec<Period> = Vec::new();
    let (mut fare_based, mut fare_free) = (0, 0);
    for (t, &q) in path[..path.len() - 1].iter().enumerate() {
        let discount = libm::exp(-k * t as f64);
        let next = policy.decide(mode, t, q, &ctx.gbm);
        if next != mode {
            payoff -= discount
                * match next {
                    Stage::FareFree => ctx.activation_cost,
                    Stage::FareBased => ctx.deactivation_cost,
                };
            switch_months.push(t);
            mode = next;
        }
        payoff += discount * ctx.welfare(mode, q);
        match mode {
            Stage::FareBased => fare_based += 1,
            Stage::FareFree => fare_free += 1,
        }
        match periods.last_mut() {
            Some(p) if p.mode == mode => p.end = t + 1,
            _ => periods.push(Period {
                mode,
                start: t,
                end: t + 1,
            }),
        }
    }
    Ok(PathOutcome {
        payoff,
        switch_months,
        months_fare_based: fare_based,
        months_fare_free: fare_free,
        periods,
    })
}

/// Aggregate of one policy over all paths.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySummary {
    pub policy: Policy,
    pub mean_payoff: f64,
    pub std_payoff: f64,
    pub mean_switches: f64,
    pub per_path: Vec<PathOutcome>,
}

// Neumaier summation so that means do not depend on accumulation error.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Evaluates every policy on every path and ranks by mean payoff (stable for
/// ties, so input order breaks them).
pub fn compare_policies(
    policies: &[Policy],
    paths: &[Vec<f64>],
    ctx: &PolicyContext,
) -> Result<Vec<PolicySummary>> {
    if paths.is_empty() {
        return Err(invalid("paths", "need at least one path"));
    }
    let n = paths.len() as f64;
    let mut out = Vec::with_capacity(policies.len());
    for policy in policies {
        let per_path = paths
            .iter()
            .map(|p| run_policy(policy, p, ctx))
            .collect::<Result<Vec<_>>>()?;
        let mean = compensated_sum(per_path.iter().map(|o| o.payoff)) / n;
        let var = if per_path.len() > 1 {
            compensated_sum(
                per_path
                    .iter()
                    .map(|o| (o.payoff - mean) * (o.payoff - mean)),
            ) / (n - 1.0)
        } else {
            0.0
        };
        let switches = per_path
            .iter()
            .map(|o| o.switch_months.len() as f64)
            .sum::<f64>()
            / n;
        out.push(PolicySummary {
            policy: policy.clone(),
            mean_payoff: mean,
            std_payoff: libm::sqrt(var),
            mean_switches: switches,
            per_path,
        });
    }
    out.sort_by(|a, b| b.mean_payoff.total_cmp(&a.mean_payoff));
    Ok(out)
}

/// Full-corridor fare-free zone or the welfare-optimal zone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Welfare,
    Equity,
}

/// Which demand series the policies are applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathMode {
    /// Each simulated path separately.
    EachPath,
    /// The pointwise mean of the simulated paths.
    MeanPath,
}

/// Coefficients, thresholds and policy menu of one regime.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeSetup {
    pub regime: Regime,
    pub zone_length: f64,
    pub fare_free_frequency: f64,
    pub fare_based_frequency: f64,
    pub context: PolicyContext,
    pub gain: GainCoefficients,
    pub thresholds: SwitchingSolution,
    pub break_even: f64,
    pub fare_based_optimum: OptimumResult,
    pub fare_free_optimum: OptimumResult,
}

impl RegimeSetup {
    /// The five policy families in a fixed order.
    pub fn policies(&self) -> Vec<Policy> {
        let t = &self.thresholds;
        alloc::vec![
            Policy::new("always_fare_based", PolicyKind::AlwaysFareBased),
            Policy::new("always_fare_free", PolicyKind::AlwaysFareFree),
            Policy::new(
                "deterministic_break_even",
                PolicyKind::DeterministicBreakEven {
                    break_even: self.break_even
                }
            ),
            Policy::new(
                "stochastic_no_cost",
                PolicyKind::SingleThreshold {
                    threshold: t.single_threshold
                }
            ),
            Policy::new(
                "stochastic_hysteresis",
                PolicyKind::Hysteresis {
                    upper: t.upper,
                    lower: t.lower
                }
            ),
        ]
    }
}

/// Builds the regime: optimal frequencies, zone length (`A` for the equity
/// regime, `B*` for the welfare regime), affine coefficients and thresholds.
pub fn regime_setup(
    scenario: &CorridorScenario,
    spec: &SearchSpec,
    gbm: &GbmParams,
    activation_cost: f64,
    deactivation_cost: f64,
    regime: Regime,
) -> Result<RegimeSetup> {
    let stage0 = optimize_stage0(scenario, spec)?;
    let stage1 = optimize_stage1(scenario, spec)?;
    regime_setup_with(
        scenario,
        spec,
        gbm,
        activation_cost,
        deactivation_cost,
        regime,
        stage0,
        stage1,
    )
}

/// [`regime_setup`] with both static optima already computed.
#[allow(clippy::too_many_arguments)]
pub fn regime_setup_with(
    scenario: &CorridorScenario,
    spec: &SearchSpec,
    gbm: &GbmParams,
    activation_cost: f64,
    deactivation_cost: f64,
    regime: Regime,
    fare_based_optimum: OptimumResult,
    fare_free_optimum: OptimumResult,
) -> Result<RegimeSetup> {
    let (zone, freq) = match regime {
        Regime::Welfare => (fare_free_optimum.zone_length, fare_free_optimum.frequency),
        Regime::Equity => {
            let a = scenario.corridor_length;
            (
                a,
                crate::search::optimize_frequency_at(scenario, a, spec)?.0,
            )
        }
    };
    let c0 = welfare_coefficients(
        scenario,
        &StagePolicy::fare_based(scenario.fare, fare_based_optimum.frequency),
    )?;
    let c1 = welfare_coefficients(scenario, &StagePolicy::fare_free(zone, freq, scenario.fare))?;
    let gain = GainCoefficients::new(&c0, &c1, gbm.growth, gbm.discount)?;
    let inputs = SwitchingInputs {
        gain,
        gbm: *gbm,
        activation_cost,
        deactivation_cost,
    };
    let thresholds = solve_thresholds(&inputs)?;
    let break_even = gain.break_even()?;
    if !(break_even > 0.0) {
        return Err(Error::Structural("gain has no positive break-even density"));
    }
    Ok(RegimeSetup {
        regime,
        zone_length: zone,
        fare_free_frequency: freq,
        fare_based_frequency: fare_based_optimum.frequency,
        context: PolicyContext {
            fare_based: c0,
            fare_free: c1,
            gbm: *gbm,
            activation_cost,
            deactivation_cost,
        },
        gain,
        thresholds,
        break_even,
        fare_based_optimum,
        fare_free_optimum,
    })
}

/// Regime setup plus the ranked policy comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub setup: RegimeSetup,
    pub path_mode: PathMode,
    pub outcomes: Vec<PolicySummary>,
}

/// Runs the five policies of the regime on the simulated paths.
pub fn regime_report(
    setup: RegimeSetup,
    paths: &[DemandPath],
    path_mode: PathMode,
) -> Result<RegimeReport> {
    let series: Vec<Vec<f64>> = match path_mode {
        PathMode::EachPath => paths.iter().map(|p| p.values.clone()).collect(),
        PathMode::MeanPath => alloc::vec![mean_path(paths)?],
    };
    let outcomes = compare_policies(&setup.policies(), &series, &setup.context)?;
    Ok(RegimeReport {
        setup,
        path_mode,
        outcomes,
    })
}
