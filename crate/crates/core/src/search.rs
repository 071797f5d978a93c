//! Grid search for the welfare-optimal frequency, zone length and the
//! benefit-maximizing zone length.
//!
//! Each search scans a coarse grid and then refines twice around the
//! incumbent with a step ten times smaller. Comparison is by welfare, then by
//! a tie-break key, so the result does not depend on evaluation order.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::corridor::{CorridorScenario, Stage, StagePolicy};
use crate::equity::{benefit_index, BenefitWeights, EquityReport, WelfareReference};
use crate::error::invalid;
use crate::welfare::stage_welfare;
use crate::{Error, Result};

/// Closed range scanned with a fixed step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchRange {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl SearchRange {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        let r = Self { min, max, step };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(invalid("step", "must be positive and finite"));
        }
        if !(self.min.is_finite() && self.max.is_finite()) || self.max < self.min {
            return Err(Error::EmptyGrid);
        }
        Ok(())
    }

    /// Grid points `min + i*step` up to `max`, with `max` appended when the
    /// step does not land on it.
    pub fn points(&self) -> Vec<f64> {
        let n = libm::floor((self.max - self.min) / self.step + 1e-9) as usize;
        let mut pts: Vec<f64> = (0..=n).map(|i| self.min + i as f64 * self.step).collect();
        let last = pts[pts.len() - 1];
        if self.max - last > 1e-9 * self.step {
            pts.push(self.max);
        } else {
            let end = pts.len() - 1;
            pts[end] = pts[end].min(self.max);
        }
        pts
    }

    fn around(&self, centre: f64, step: f64) -> Self {
        Self {
            min: (centre - 10.0 * step).max(self.min),
            max: (centre + 10.0 * step).min(self.max),
            step,
        }
    }

    fn on_edge(&self, v: f64) -> bool {
        (v - self.min).abs() <= 1e-9 * self.step.max(1.0)
            || (self.max - v).abs() <= 1e-9 * self.step.max(1.0)
    }
}

/// Search ranges for frequency and zone length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSpec {
    /// vehicles/hr
    pub frequency: SearchRange,
    /// miles
    pub zone_length: SearchRange,
    /// Refinement passes, each with a step ten times smaller.
    pub refinements: usize,
    /// Zone-length step of benefit scans (miles).
    pub benefit_step: f64,
}

impl SearchSpec {
    /// F in [1, 40] step 1, B in [0, A] step 1, two refinements, benefit step 0.1.
    pub fn for_scenario(scenario: &CorridorScenario) -> Self {
        Self {
            frequency: SearchRange {
                min: 1.0,
                max: 40.0,
                step: 1.0,
            },
            zone_length: SearchRange {
                min: 0.0,
                max: scenario.corridor_length,
                step: 1.0,
            },
            refinements: 2,
            benefit_step: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.frequency.validate()?;
        self.zone_length.validate()?;
        if self.frequency.min <= 0.0 {
            return Err(invalid("frequency", "range must be strictly positive"));
        }
        if self.zone_length.min < 0.0 {
            return Err(invalid("zone_length", "range must be nonnegative"));
        }
        if !(self.benefit_step > 0.0 && self.benefit_step.is_finite()) {
            return Err(invalid("benefit_step", "must be positive and finite"));
        }
        Ok(())
    }
}

/// How the frequency is chosen while scanning zone lengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrequencyRule {
    /// Re-optimize F at every zone length.
    Reoptimize,
    /// Hold F fixed (vehicles/hr).
    Fixed(f64),
}

/// One evaluated grid cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub zone_length: f64,
    pub frequency: f64,
    pub welfare: f64,
}

/// Optimum of a grid search and every cell evaluated on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimumResult {
    pub stage: Stage,
    /// Zero for the fare-based stage.
    pub zone_length: f64,
    pub frequency: f64,
    pub welfare: f64,
    /// The optimum sits on an edge of the search range.
    pub boundary_optimum: bool,
    /// Coarse-grid cells, sorted by zone length then frequency.
    pub surface: Vec<SurfacePoint>,
}

// Larger welfare wins; ties go to smaller F, then smaller B.
fn better(a: &SurfacePoint, b: &SurfacePoint) -> bool {
    match a.welfare.total_cmp(&b.welfare) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => (a.frequency, a.zone_length) < (b.frequency, b.zone_length),
    }
}

fn evaluate(
    scenario: &CorridorScenario,
    stage: Stage,
    zone: f64,
    freq: f64,
) -> Result<SurfacePoint> {
    let policy = match stage {
        Stage::FareBased => StagePolicy::fare_based(scenario.fare, freq),
        Stage::FareFree => StagePolicy::fare_free(zone, freq, scenario.fare),
    };
    let welfare = stage_welfare(scenario, &policy)?.total;
    Ok(SurfacePoint {
        zone_length: zone,
        frequency: freq,
        welfare,
    })
}

fn scan(
    scenario: &CorridorScenario,
    stage: Stage,
    zones: &[f64],
    freqs: &[f64],
    surface: Option<&mut Vec<SurfacePoint>>,
) -> Result<Option<SurfacePoint>> {
    let mut best: Option<SurfacePoint> = None;
    let mut cells = Vec::new();
    for &z in zones {
        for &f in freqs {
            let p = evaluate(scenario, stage, z, f)?;
            if p.welfare.is_finite() && best.as_ref().is_none_or(|b| better(&p, b)) {
                best = Some(p);
            }
            cells.push(p);
        }
    }
    if let Some(s) = surface {
        *s = cells;
    }
    Ok(best)
}

fn search(
    scenario: &CorridorScenario,
    stage: Stage,
    zone_range: SearchRange,
    freq_range: SearchRange,
    refinements: usize,
    keep_surface: bool,
) -> Result<OptimumResult> {
    scenario.validate()?;
    zone_range.validate()?;
    freq_range.validate()?;
    let mut surface = Vec::new();
    let mut best = scan(
        scenario,
        stage,
        &zone_range.points(),
        &freq_range.points(),
        keep_surface.then_some(&mut surface),
    )?
    .ok_or(Error::Infeasible("no grid cell has finite welfare"))?;
    let (mut zs, mut fs) = (zone_range.step, freq_range.step);
    for _ in 0..refinements {
        zs /= 10.0;
        fs /= 10.0;
        let zones = if zone_range.max > zone_range.min {
            zone_range.around(best.zone_length, zs).points()
        } else {
            alloc::vec![zone_range.min]
        };
        let freqs = freq_range.around(best.frequency, fs).points();
        if let Some(p) = scan(scenario, stage, &zones, &freqs, None)? {
            if better(&p, &best) {
                best = p;
            }
        }
    }
    let boundary_optimum = freq_range.on_edge(best.frequency)
        || (zone_range.max > zone_range.min && zone_range.on_edge(best.zone_length));
    Ok(OptimumResult {
        stage,
        zone_length: best.zone_length,
        frequency: best.frequency,
        welfare: best.welfare,
        boundary_optimum,
        surface,
    })
}

/// Optimal fare-based frequency.
pub fn optimize_stage0(scenario: &CorridorScenario, spec: &SearchSpec) -> Result<OptimumResult> {
    spec.validate()?;
    let zone = SearchRange {
        min: 0.0,
        max: 0.0,
        step: 1.0,
    };
    search(
        scenario,
        Stage::FareBased,
        zone,
        spec.frequency,
        spec.refinements,
        true,
    )
}

/// Jointly optimal zone length and frequency of the fare-free stage.
pub fn optimize_stage1(scenario: &CorridorScenario, spec: &SearchSpec) -> Result<OptimumResult> {
    spec.validate()?;
    search(
        scenario,
        Stage::FareFree,
        spec.zone_length,
        spec.frequency,
        spec.refinements,
        true,
    )
}

/// Best fare-free frequency at a fixed zone length; returns `(F, W)`.
pub fn optimize_frequency_at(
    scenario: &CorridorScenario,
    zone_length: f64,
    spec: &SearchSpec,
) -> Result<(f64, f64)> {
    let zone = SearchRange {
        min: zone_length,
        max: zone_length,
        step: 1.0,
    };
    let r = search(
        scenario,
        Stage::FareFree,
        zone,
        spec.frequency,
        spec.refinements,
        false,
    )?;
    Ok((r.frequency, r.welfare))
}

/// Result of the benefit-index scan.
#[derive(Debug, Clone, PartialEq)]
pub struct BenefitOptimum {
    pub zone_length: f64,
    pub frequency: f64,
    pub benefit: f64,
    pub welfare: f64,
    pub gini: f64,
    /// Welfare optimum used for normalization.
    pub welfare_optimum: OptimumResult,
    pub fare_based_optimum: OptimumResult,
    /// One report per scanned zone length, ascending.
    pub reports: Vec<EquityReport>,
}

/// Zone length maximizing the benefit index over feasible lengths. The scan
/// uses `spec.benefit_step` and always includes the welfare-optimal length;
/// ties go to the longer zone.
pub fn optimize_benefit(
    scenario: &CorridorScenario,
    spec: &SearchSpec,
    weights: BenefitWeights,
    frequency: FrequencyRule,
) -> Result<BenefitOptimum> {
    let stage0 = optimize_stage0(scenario, spec)?;
    let stage1 = optimize_stage1(scenario, spec)?;
    optimize_benefit_with(scenario, spec, weights, frequency, stage0, stage1)
}

/// [`optimize_benefit`] with both welfare optima already computed.
pub fn optimize_benefit_with(
    scenario: &CorridorScenario,
    spec: &SearchSpec,
    weights: BenefitWeights,
    frequency: FrequencyRule,
    fare_based_optimum: OptimumResult,
    welfare_optimum: OptimumResult,
) -> Result<BenefitOptimum> {
    spec.validate()?;
    let mut grid = SearchRange {
        step: spec.benefit_step,
        ..spec.zone_length
    }
    .points();
    let b_star = welfare_optimum.zone_length;
    if !grid.contains(&b_star) {
        grid.push(b_star);
        grid.sort_by(f64::total_cmp);
    }
    // The normalizing welfare at B* comes from the same frequency rule as the
    // scan so that SW(B*) is exactly one.
    let w_star = match frequency {
        FrequencyRule::Fixed(f) => evaluate(scenario, Stage::FareFree, b_star, f)?.welfare,
        FrequencyRule::Reoptimize => optimize_frequency_at(scenario, b_star, spec)?.1,
    };
    let reference = WelfareReference {
        fare_based: fare_based_optimum.welfare,
        fare_free_optimum: w_star,
    };
    let reports = benefit_index(scenario, &grid, weights, &frequency, spec, reference)?;
    select_benefit(reports, fare_based_optimum, welfare_optimum)
}

impl BenefitOptimum {
    /// Re-scores the scanned zone lengths under other weights without
    /// re-evaluating welfare or Gini.
    pub fn reweighted(&self, weights: BenefitWeights) -> Result<BenefitOptimum> {
        let reports = self
            .reports
            .iter()
            .map(|r| EquityReport {
                benefit: (1.0 - weights.mu) * r.sw_index + weights.mu * (1.0 - r.gini),
                feasible: weights.beta_min <= r.gini && r.gini <= weights.beta_max,
                weights,
                ..r.clone()
            })
            .collect();
        select_benefit(
            reports,
            self.fare_based_optimum.clone(),
            self.welfare_optimum.clone(),
        )
    }
}

fn select_benefit(
    reports: Vec<EquityReport>,
    fare_based_optimum: OptimumResult,
    welfare_optimum: OptimumResult,
) -> Result<BenefitOptimum> {
    let mut best: Option<&EquityReport> = None;
    for r in reports
        .iter()
        .filter(|r| r.feasible && r.benefit.is_finite())
    {
        let take = match best {
            None => true,
            Some(b) => match r.benefit.total_cmp(&b.benefit) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => r.zone_length > b.zone_length,
            },
        };
        if take {
            best = Some(r);
        }
    }
    let best = best.ok_or(Error::Infeasible(
        "no zone length satisfies the Gini bounds",
    ))?;
    Ok(BenefitOptimum {
        zone_length: best.zone_length,
        frequency: best.frequency,
        benefit: best.benefit,
        welfare: best.welfare,
        gini: best.gini,
        reports: reports.clone(),
        welfare_optimum,
        fare_based_optimum,
    })
}
