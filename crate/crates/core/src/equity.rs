//! Spatial equity of user surplus along the corridor.
//!
//! The corridor is cut into `n` equal-length groups. Each group's mean
//! surplus per potential traveller feeds a Gini index (pairwise form), a
//! demand-weighted Lorenz curve, and the benefit index that trades the
//! normalized welfare gain against `1 - Gini`.

use alloc::vec::Vec;

use crate::corridor::{CorridorScenario, StagePolicy};
use crate::error::{domain, invalid};
use crate::quadrature::{integrate, DEFAULT_ABS_TOL};
use crate::search::{FrequencyRule, SearchSpec};
use crate::welfare::{stage_welfare, total_surplus};
use crate::{Error, Result};

/// Mean user surplus of one corridor segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupSurplus {
    pub group: usize,
    pub start: f64,
    pub end: f64,
    /// Surplus per potential traveller ($/pax).
    pub mean_surplus: f64,
    /// Potential demand in the segment (pax/day).
    pub demand: f64,
}

/// Splits `[0, A]` into `n` equal segments and averages the surplus of both
/// modes over the potential demand of each. Returns an empty list when the
/// corridor carries no demand.
pub fn group_surpluses(
    scenario: &CorridorScenario,
    policy: &StagePolicy,
) -> Result<Vec<GroupSurplus>> {
    scenario.validate()?;
    policy.validate(scenario)?;
    if scenario.cbd_density == 0.0 {
        return Ok(Vec::new());
    }
    let n = scenario.groups;
    let a = scenario.corridor_length;
    let zone = policy.zone_length;
    let mut out = Vec::with_capacity(n);
    for group in 0..n {
        let start = a * group as f64 / n as f64;
        let end = a * (group + 1) as f64 / n as f64;
        let mut pts = alloc::vec![start];
        if zone > start && zone < end {
            pts.push(zone);
        }
        pts.push(end);
        let est = integrate(
            |x| {
                let p = scenario.profile_at(policy, x);
                [total_surplus(scenario, &p), p.density]
            },
            &pts,
            DEFAULT_ABS_TOL,
        )?;
        let [surplus, demand] = est.value;
        // Potential demand is positive on every segment because the density
        // vanishes only at the single point x = A.
        out.push(GroupSurplus {
            group,
            start,
            end,
            mean_surplus: surplus / demand,
            demand,
        });
    }
    Ok(out)
}

fn check_values(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Undefined("Gini index of an empty sample"));
    }
    let mut total = 0.0;
    for &v in values {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(domain("value", v, "finite and >= 0"));
        }
        total += v;
    }
    if total == 0.0 {
        return Err(Error::Undefined("Gini index of an all-zero sample"));
    }
    Ok(total)
}

/// Gini index `sum_i sum_j |x_i - x_j| / (2 n sum_i x_i)`.
pub fn gini(values: &[f64]) -> Result<f64> {
    let total = check_values(values)?;
    let n = values.len() as f64;
    let mut pairwise = 0.0;
    for &a in values {
        for &b in values {
            pairwise += (a - b).abs();
        }
    }
    Ok(pairwise / (2.0 * n * total))
}

/// Point of a Lorenz curve: cumulative demand share against cumulative surplus share.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorenzPoint {
    pub demand_share: f64,
    pub surplus_share: f64,
}

/// Lorenz curve of `values` weighted by `weights`, groups sorted by value.
/// Starts at `(0, 0)` and ends at `(1, 1)`.
pub fn lorenz_curve(values: &[f64], weights: &[f64]) -> Result<Vec<LorenzPoint>> {
    if values.len() != weights.len() {
        return Err(invalid("weights", "one weight per value"));
    }
    check_values(values)?;
    let mut weight_total = 0.0;
    let mut surplus_total = 0.0;
    for (&v, &w) in values.iter().zip(weights) {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(domain("weight", w, "finite and >= 0"));
        }
        weight_total += w;
        surplus_total += v * w;
    }
    if !(weight_total > 0.0) || !(surplus_total > 0.0) {
        return Err(Error::Undefined(
            "Lorenz curve without positive weighted surplus",
        ));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
    let mut points = Vec::with_capacity(values.len() + 1);
    points.push(LorenzPoint {
        demand_share: 0.0,
        surplus_share: 0.0,
    });
    let (mut cum_w, mut cum_s) = (0.0, 0.0);
    for i in order {
        cum_w += weights[i];
        cum_s += values[i] * weights[i];
        points.push(LorenzPoint {
            demand_share: cum_w / weight_total,
            surplus_share: cum_s / surplus_total,
        });
    }
    if let Some(last) = points.last_mut() {
        last.demand_share = 1.0;
        last.surplus_share = 1.0;
    }
    Ok(points)
}

/// Gini index from a Lorenz curve: one minus twice the trapezoid area under it.
pub fn lorenz_gini(points: &[LorenzPoint]) -> f64 {
    let area: f64 = points
        .windows(2)
        .map(|w| {
            0.5 * (w[1].demand_share - w[0].demand_share)
                * (w[1].surplus_share + w[0].surplus_share)
        })
        .sum();
    1.0 - 2.0 * area
}

/// Weight and admissible Gini band of the benefit index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenefitWeights {
    /// Weight on equity, `0 <= mu <= 1`.
    pub mu: f64,
    pub beta_min: f64,
    pub beta_max: f64,
}

impl BenefitWeights {
    pub fn new(mu: f64, beta_min: f64, beta_max: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mu) {
            return Err(domain("mu", mu, "0 <= mu <= 1"));
        }
        if !(0.0 <= beta_min && beta_min <= beta_max && beta_max <= 1.0) {
            return Err(invalid("beta", "need 0 <= beta_min <= beta_max <= 1"));
        }
        Ok(Self {
            mu,
            beta_min,
            beta_max,
        })
    }
}

/// Welfare levels the social-welfare index is normalized against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelfareReference {
    /// Optimized fare-based welfare `W_0`.
    pub fare_based: f64,
    /// Fare-free welfare at the welfare-optimal zone length, `W_1(B*)`.
    pub fare_free_optimum: f64,
}

/// Equity and benefit figures for one zone length.
#[derive(Debug, Clone, PartialEq)]
pub struct EquityReport {
    pub zone_length: f64,
    pub frequency: f64,
    pub welfare: f64,
    pub gini: f64,
    pub lorenz: Vec<LorenzPoint>,
    pub groups: Vec<GroupSurplus>,
    /// Normalized welfare gain `(W_1(B) - W_0) / (W_1(B*) - W_0)`.
    pub sw_index: f64,
    pub benefit: f64,
    pub weights: BenefitWeights,
    /// `beta_min <= gini <= beta_max`.
    pub feasible: bool,
}

/// Gini index, Lorenz curve and group surpluses for one policy.
pub fn equity_of(
    scenario: &CorridorScenario,
    policy: &StagePolicy,
) -> Result<(f64, Vec<LorenzPoint>, Vec<GroupSurplus>)> {
    let groups = group_surpluses(scenario, policy)?;
    let values: Vec<f64> = groups.iter().map(|g| g.mean_surplus).collect();
    let weights: Vec<f64> = groups.iter().map(|g| g.demand).collect();
    let g = gini(&values)?;
    let lorenz = lorenz_curve(&values, &weights)?;
    Ok((g, lorenz, groups))
}

/// Evaluates the benefit index `G(B) = (1 - mu) SW(B) + mu (1 - E(B))` on each
/// zone length of `zone_grid`, choosing the frequency by `frequency`.
pub fn benefit_index(
    scenario: &CorridorScenario,
    zone_grid: &[f64],
    weights: BenefitWeights,
    frequency: &FrequencyRule,
    search: &SearchSpec,
    reference: WelfareReference,
) -> Result<Vec<EquityReport>> {
    let span = reference.fare_free_optimum - reference.fare_based;
    if span == 0.0 || !span.is_finite() {
        return Err(Error::Undefined("welfare index when W_1(B*) equals W_0"));
    }
    zone_grid
        .iter()
        .map(|&zone| {
            let (freq, welfare) = match *frequency {
                FrequencyRule::Fixed(f) => {
                    let policy = StagePolicy::fare_free(zone, f, scenario.fare);
                    (f, stage_welfare(scenario, &policy)?.total)
                }
                FrequencyRule::Reoptimize => {
                    crate::search::optimize_frequency_at(scenario, zone, search)?
                }
            };
            let policy = StagePolicy::fare_free(zone, freq, scenario.fare);
            let (g, lorenz, groups) = equity_of(scenario, &policy)?;
            let sw_index = (welfare - reference.fare_based) / span;
            Ok(EquityReport {
                zone_length: zone,
                frequency: freq,
                welfare,
                gini: g,
                lorenz,
                groups,
                sw_index,
                benefit: (1.0 - weights.mu) * sw_index + weights.mu * (1.0 - g),
                weights,
                feasible: weights.beta_min <= g && g <= weights.beta_max,
            })
        })
        .collect()
}
