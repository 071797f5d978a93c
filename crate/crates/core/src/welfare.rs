//! User surplus, operator costs, stage welfare and the affine dependence of
//! welfare on the CBD demand density.
//!
//! All quantities are per day. With zone length and frequency held fixed,
//! every demand-driven term scales with `Q_CBD`, so stage welfare is an affine
//! function `W(Q) = d_Q Q + d_C`. [`welfare_coefficients`] computes that pair
//! from a unit-density integrand; [`stage_welfare`] evaluates the same
//! welfare term by term, and the two must agree.

use crate::corridor::{CorridorScenario, Mode, PointProfile, Stage, StagePolicy};
use crate::error::{domain, invalid};
use crate::quadrature::{integrate, DEFAULT_ABS_TOL};
use crate::Result;

/// Surplus of potential demand `potential` facing cost `cost`:
/// `Q_m (1/(2 e_c) - C + e_c C^2 / 2)` below the choke cost, zero above it.
pub fn surplus_from_cost(cost_elasticity: f64, potential: f64, cost: f64) -> f64 {
    let choke = 1.0 / cost_elasticity;
    if cost >= choke {
        return 0.0;
    }
    potential * (0.5 / cost_elasticity - cost + 0.5 * cost_elasticity * cost * cost)
}

/// User surplus density ($/mile/day) of `mode` at position `x`.
pub fn surplus_density(
    scenario: &CorridorScenario,
    policy: &StagePolicy,
    x: f64,
    mode: Mode,
) -> Result<f64> {
    let p = scenario.profile(policy, x)?;
    Ok(match mode {
        Mode::Bus => surplus_from_cost(scenario.cost_elasticity, p.bus_potential, p.bus_cost),
        Mode::Auto => surplus_from_cost(scenario.cost_elasticity, p.auto_potential, p.auto_cost),
    })
}

pub(crate) fn total_surplus(scenario: &CorridorScenario, p: &PointProfile) -> f64 {
    surplus_from_cost(scenario.cost_elasticity, p.bus_potential, p.bus_cost)
        + surplus_from_cost(scenario.cost_elasticity, p.auto_potential, p.auto_cost)
}

/// Fleet size `N = 2 A F / v_b`.
pub fn fleet_size(scenario: &CorridorScenario, policy: &StagePolicy) -> f64 {
    2.0 * scenario.corridor_length * policy.frequency / scenario.bus_speed
}

/// Operating cost `g_f + g_v N` ($/day).
pub fn operating_cost(scenario: &CorridorScenario, policy: &StagePolicy) -> f64 {
    scenario.operating_fixed + scenario.operating_per_vehicle * fleet_size(scenario, policy)
}

/// Start of the span where fares are collected.
fn charged_from(policy: &StagePolicy) -> f64 {
    match policy.stage {
        Stage::FareBased => 0.0,
        Stage::FareFree => policy.zone_length,
    }
}

fn fixed_collection_cost(scenario: &CorridorScenario, policy: &StagePolicy) -> f64 {
    scenario.collection_fixed
        + scenario.collection_per_mile * (scenario.corridor_length - charged_from(policy))
}

/// Fare collection cost `e_0 + e_1 L + e_2 ∫ q_b` over the charged span `L`
/// (the whole corridor at the fare-based stage, `[B, A]` otherwise).
pub fn collection_cost(scenario: &CorridorScenario, policy: &StagePolicy) -> Result<f64> {
    policy.validate(scenario)?;
    let from = charged_from(policy);
    let trips = integrate(
        |x| [scenario.profile_at(policy, x).bus_realized],
        &[from, scenario.corridor_length],
        DEFAULT_ABS_TOL,
    )?;
    Ok(fixed_collection_cost(scenario, policy) + scenario.collection_per_trip * trips.value[0])
}

/// Administration cost of the fare-free program, `iota_f + iota_v B^theta`;
/// zero at the fare-based stage.
pub fn admin_cost(scenario: &CorridorScenario, policy: &StagePolicy) -> f64 {
    match policy.stage {
        Stage::FareBased => 0.0,
        Stage::FareFree => {
            scenario.admin_fixed
                + scenario.admin_variable * libm::pow(policy.zone_length, scenario.admin_exponent)
        }
    }
}

fn charged_admin_cost(scenario: &CorridorScenario, policy: &StagePolicy) -> f64 {
    if scenario.admin_in_fare_free_objective {
        admin_cost(scenario, policy)
    } else {
        0.0
    }
}

/// Daily welfare of one stage, term by term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelfareBreakdown {
    pub stage: Stage,
    pub user_surplus: f64,
    pub bus_surplus: f64,
    pub auto_surplus: f64,
    pub revenue: f64,
    pub operating_cost: f64,
    pub collection_cost: f64,
    pub admin_cost: f64,
    pub total: f64,
    pub fleet_size: f64,
    /// Realized bus trips per day.
    pub bus_trips: f64,
    /// Realized auto trips per day.
    pub auto_trips: f64,
}

/// Evaluates stage welfare `U + R - W_o - W_f - W_d` at the scenario's `Q_CBD`.
pub fn stage_welfare(
    scenario: &CorridorScenario,
    policy: &StagePolicy,
) -> Result<WelfareBreakdown> {
    policy.validate(scenario)?;
    let from = charged_from(policy);
    let ec = scenario.cost_elasticity;
    let est = integrate(
        |x| {
            let p = scenario.profile_at(policy, x);
            let charged = if x >= from { 1.0 } else { 0.0 };
            [
                surplus_from_cost(ec, p.bus_potential, p.bus_cost),
                surplus_from_cost(ec, p.auto_potential, p.auto_cost),
                charged * p.bus_realized * p.fare,
                charged * p.bus_realized,
                p.bus_realized,
                p.auto_realized,
            ]
        },
        &policy.breakpoints(scenario.corridor_length),
        DEFAULT_ABS_TOL,
    )?;
    let [bus_surplus, auto_surplus, revenue, charged_trips, bus_trips, auto_trips] = est.value;
    let operating = operating_cost(scenario, policy);
    let collection =
        fixed_collection_cost(scenario, policy) + scenario.collection_per_trip * charged_trips;
    let admin = charged_admin_cost(scenario, policy);
    let user_surplus = bus_surplus + auto_surplus;
    Ok(WelfareBreakdown {
        stage: policy.stage,
        user_surplus,
        bus_surplus,
        auto_surplus,
        revenue,
        operating_cost: operating,
        collection_cost: collection,
        admin_cost: admin,
        total: user_surplus + revenue - operating - collection - admin,
        fleet_size: fleet_size(scenario, policy),
        bus_trips,
        auto_trips,
    })
}

/// Affine welfare pair `W(Q) = d_q Q + d_c` for a fixed zone length and frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelfareCoefficients {
    pub stage: Stage,
    pub zone_length: f64,
    pub frequency: f64,
    /// $/day per unit of CBD demand density.
    pub d_q: f64,
    /// $/day.
    pub d_c: f64,
}

impl WelfareCoefficients {
    pub fn welfare(&self, cbd_density: f64) -> f64 {
        self.d_q * cbd_density + self.d_c
    }
}

/// Computes `(d_Q, d_C)` for the policy. `d_Q` integrates the welfare of a
/// unit-density corridor, net of per-trip collection cost where fares are
/// charged; `d_C` gathers every density-independent cost.
pub fn welfare_coefficients(
    scenario: &CorridorScenario,
    policy: &StagePolicy,
) -> Result<WelfareCoefficients> {
    policy.validate(scenario)?;
    let a = scenario.corridor_length;
    let ec = scenario.cost_elasticity;
    let from = charged_from(policy);
    let est = integrate(
        |x| {
            let bus_cost = scenario.bus_cost_at(policy, x);
            let auto_cost = scenario.auto_cost_at(x);
            let pr_bus = crate::corridor::logistic(scenario.logit_scale * (auto_cost - bus_cost));
            let mut bus = surplus_from_cost(ec, 1.0, bus_cost);
            if x >= from {
                bus += scenario.realized_share(bus_cost)
                    * (policy.fare_at(x) - scenario.collection_per_trip);
            }
            let auto = surplus_from_cost(ec, 1.0, auto_cost);
            [(1.0 - x / a) * ((1.0 - pr_bus) * auto + pr_bus * bus)]
        },
        &policy.breakpoints(a),
        DEFAULT_ABS_TOL,
    )?;
    let d_c = -operating_cost(scenario, policy)
        - fixed_collection_cost(scenario, policy)
        - charged_admin_cost(scenario, policy);
    Ok(WelfareCoefficients {
        stage: policy.stage,
        zone_length: policy.zone_length,
        frequency: policy.frequency,
        d_q: est.value[0],
        d_c,
    })
}

/// Difference of the fare-free and fare-based affine pairs, with the
/// perpetuity coefficients `nu_0 = delta_q / (k - eta)`, `nu_1 = delta_c / k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainCoefficients {
    pub delta_q: f64,
    pub delta_c: f64,
    pub nu_0: f64,
    pub nu_1: f64,
}

impl GainCoefficients {
    /// `growth` and `discount` are the GBM drift and discount rate per period;
    /// the perpetuities diverge unless `discount > growth`.
    pub fn new(
        fare_based: &WelfareCoefficients,
        fare_free: &WelfareCoefficients,
        growth: f64,
        discount: f64,
    ) -> Result<Self> {
        Self::from_deltas(
            fare_free.d_q - fare_based.d_q,
            fare_free.d_c - fare_based.d_c,
            growth,
            discount,
        )
    }

    /// Builds the perpetuities directly from the gain slope and intercept.
    pub fn from_deltas(delta_q: f64, delta_c: f64, growth: f64, discount: f64) -> Result<Self> {
        if !(discount > 0.0) {
            return Err(domain("k", discount, "k > 0"));
        }
        if !(discount > growth) {
            return Err(invalid("k", "discount rate must exceed the growth rate"));
        }
        Ok(Self {
            delta_q,
            delta_c,
            nu_0: delta_q / (discount - growth),
            nu_1: delta_c / discount,
        })
    }

    /// Instantaneous welfare gain `Omega(Q) = delta_q Q + delta_c`.
    pub fn gain(&self, cbd_density: f64) -> f64 {
        self.delta_q * cbd_density + self.delta_c
    }

    /// Density where the gain changes sign, `-delta_c / delta_q`.
    pub fn break_even(&self) -> Result<f64> {
        if self.delta_q == 0.0 {
            return Err(crate::Error::Undefined("break-even density"));
        }
        Ok(-self.delta_c / self.delta_q)
    }
}

/// `Omega(Q) = W_1(Q) - W_0(Q)` from the two affine pairs.
pub fn welfare_gain(
    fare_based: &WelfareCoefficients,
    fare_free: &WelfareCoefficients,
    cbd_density: f64,
) -> f64 {
    (fare_free.d_q - fare_based.d_q) * cbd_density + (fare_free.d_c - fare_based.d_c)
}
