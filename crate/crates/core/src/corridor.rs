//! Corridor geometry, generalized travel costs, logit mode split and elastic
//! demand.
//!
//! Positions `x` are miles from the CBD (`x = 0`) to the city boundary
//! (`x = A`). Costs are dollars per trip, densities passengers per mile per
//! day. Inside the fare-free zone `[0, B)` the bus fare is `fare_inside`;
//! from `B` outward it is `fare_outside`.

use alloc::vec::Vec;

use crate::error::{domain, invalid};
use crate::Result;

/// Static corridor, cost and fare parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CorridorScenario {
    /// Corridor length `A` (miles).
    pub corridor_length: f64,
    /// Demand density at the CBD, `Q_CBD` (pax/mile/day).
    pub cbd_density: f64,
    /// Logit scale `psi`.
    pub logit_scale: f64,
    /// Demand elasticity coefficient `e_c` (1/$); `1/e_c` is the choke cost.
    pub cost_elasticity: f64,
    /// Value of in-vehicle time `alpha_T` ($/hr).
    pub value_in_vehicle: f64,
    /// Value of waiting time `alpha_w` ($/hr).
    pub value_waiting: f64,
    /// Value of access time `alpha_S` ($/hr).
    pub value_access: f64,
    /// Access time to stops `S` (hr).
    pub access_time: f64,
    /// Auto fixed cost `C_f^a` ($/trip).
    pub auto_fixed_cost: f64,
    /// Auto variable cost `C_v^a` ($/mile).
    pub auto_variable_cost: f64,
    /// Existing transit fare `f` ($/trip).
    pub fare: f64,
    /// Auto speed `v_a` (mile/hr).
    pub auto_speed: f64,
    /// Bus speed `v_b` (mile/hr).
    pub bus_speed: f64,
    /// Fixed operating cost `g_f` ($/day).
    pub operating_fixed: f64,
    /// Operating cost per vehicle `g_v` ($/vehicle/day).
    pub operating_per_vehicle: f64,
    /// Fare collection fixed cost `e_0` ($/day).
    pub collection_fixed: f64,
    /// Fare collection cost per charged mile `e_1` ($/mile/day).
    pub collection_per_mile: f64,
    /// Fare collection cost per trip `e_2` ($/trip).
    pub collection_per_trip: f64,
    /// Fare-free administration fixed cost `iota_f` ($/day).
    pub admin_fixed: f64,
    /// Fare-free administration variable cost `iota_v`.
    pub admin_variable: f64,
    /// Growth exponent `theta` of the administration cost in zone length.
    pub admin_exponent: f64,
    /// Number of equity groups `n`.
    pub groups: usize,
    /// Charge the administration cost in the fare-free stage objective.
    pub admin_in_fare_free_objective: bool,
}

impl CorridorScenario {
    /// Baseline corridor. Speeds are not part of the published baseline and
    /// carry assumed values (`v_b = 25`, `v_a = 30` mile/hr).
    pub fn baseline() -> Self {
        Self {
            corridor_length: 50.0,
            cbd_density: 1500.0,
            logit_scale: 0.5,
            cost_elasticity: 1.0 / 70.0,
            value_in_vehicle: 20.0,
            value_waiting: 20.0,
            value_access: 20.0,
            access_time: 0.1,
            auto_fixed_cost: 3.0,
            auto_variable_cost: 0.5,
            fare: 5.0,
            auto_speed: 30.0,
            bus_speed: 25.0,
            operating_fixed: 10_000.0,
            operating_per_vehicle: 500.0,
            collection_fixed: 5_000.0,
            collection_per_mile: 500.0,
            collection_per_trip: 0.1,
            admin_fixed: 10_000.0,
            admin_variable: 10.0,
            admin_exponent: 2.0,
            groups: 50,
            admin_in_fare_free_objective: true,
        }
    }

    /// Every violated invariant as `(field, reason)`.
    pub fn violations(&self) -> Vec<(&'static str, &'static str)> {
        let mut out = Vec::new();
        let mut check = |ok: bool, name, reason| {
            if !ok {
                out.push((name, reason));
            }
        };
        check(
            self.corridor_length > 0.0 && self.corridor_length.is_finite(),
            "A",
            "must be > 0",
        );
        check(
            self.cbd_density >= 0.0 && self.cbd_density.is_finite(),
            "Q_CBD",
            "must be >= 0",
        );
        check(
            self.logit_scale >= 0.0 && self.logit_scale.is_finite(),
            "psi",
            "must be >= 0",
        );
        check(
            self.cost_elasticity > 0.0 && self.cost_elasticity.is_finite(),
            "e_c",
            "must be > 0",
        );
        check(
            self.auto_speed > 0.0 && self.auto_speed.is_finite(),
            "v_a",
            "must be > 0",
        );
        check(
            self.bus_speed > 0.0 && self.bus_speed.is_finite(),
            "v_b",
            "must be > 0",
        );
        check(
            self.admin_exponent >= 1.0 && self.admin_exponent.is_finite(),
            "theta",
            "must be >= 1",
        );
        check(self.groups >= 2, "n_groups", "must be >= 2");
        let costs = [
            ("alpha_T", self.value_in_vehicle),
            ("alpha_w", self.value_waiting),
            ("alpha_S", self.value_access),
            ("S", self.access_time),
            ("C_f_a", self.auto_fixed_cost),
            ("C_v_a", self.auto_variable_cost),
            ("f", self.fare),
            ("g_f", self.operating_fixed),
            ("g_v", self.operating_per_vehicle),
            ("e_0", self.collection_fixed),
            ("e_1", self.collection_per_mile),
            ("e_2", self.collection_per_trip),
            ("iota_f", self.admin_fixed),
            ("iota_v", self.admin_variable),
        ];
        for (name, value) in costs {
            check(value >= 0.0 && value.is_finite(), name, "must be >= 0");
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().first() {
            Some(&(name, reason)) => Err(invalid(name, reason)),
            None => Ok(()),
        }
    }

    /// Choke cost `1/e_c` above which no trips are generated.
    pub fn choke_cost(&self) -> f64 {
        1.0 / self.cost_elasticity
    }

    fn check_position(&self, x: f64) -> Result<()> {
        if (0.0..=self.corridor_length).contains(&x) {
            Ok(())
        } else {
            Err(domain("x", x, "0 <= x <= A"))
        }
    }

    /// Potential demand density `Q(x) = Q_CBD (1 - x/A)`.
    pub fn demand_density(&self, x: f64) -> Result<f64> {
        self.check_position(x)?;
        Ok(self.density_at(x))
    }

    pub(crate) fn density_at(&self, x: f64) -> f64 {
        self.cbd_density * (1.0 - x / self.corridor_length)
    }

    /// Generalized auto cost `alpha_T x / v_a + C_f^a + C_v^a x`.
    pub fn auto_cost(&self, x: f64) -> Result<f64> {
        self.check_position(x)?;
        Ok(self.auto_cost_at(x))
    }

    pub(crate) fn auto_cost_at(&self, x: f64) -> f64 {
        self.value_in_vehicle * x / self.auto_speed
            + self.auto_fixed_cost
            + self.auto_variable_cost * x
    }

    /// Generalized bus cost: in-vehicle time, half-headway wait, the fare that
    /// applies at `x`, and access time.
    pub fn bus_cost(&self, policy: &StagePolicy, x: f64) -> Result<f64> {
        self.check_position(x)?;
        policy.check_frequency()?;
        Ok(self.bus_cost_at(policy, x))
    }

    pub(crate) fn bus_cost_at(&self, policy: &StagePolicy, x: f64) -> f64 {
        self.value_in_vehicle * x / self.bus_speed
            + self.value_waiting / (2.0 * policy.frequency)
            + policy.fare_at(x)
            + self.value_access * self.access_time
    }

    /// Logit mode split at `x`, with the composites of the rearranged form.
    pub fn mode_split(&self, policy: &StagePolicy, x: f64) -> Result<ModeSplit> {
        self.check_position(x)?;
        policy.check_frequency()?;
        Ok(self.split_at(policy, x))
    }

    pub(crate) fn split_at(&self, policy: &StagePolicy, x: f64) -> ModeSplit {
        let gap = self.auto_cost_at(x) - self.bus_cost_at(policy, x);
        let pr_bus = logistic(self.logit_scale * gap);
        let constant = self.auto_fixed_cost
            - self.value_waiting / (2.0 * policy.frequency)
            - self.value_access * self.access_time;
        ModeSplit {
            pr_bus,
            pr_auto: 1.0 - pr_bus,
            chi_0: self.value_in_vehicle * (1.0 / self.auto_speed - 1.0 / self.bus_speed)
                + self.auto_variable_cost,
            chi_1: constant - policy.fare_inside,
            chi_2: constant - policy.fare_outside,
        }
    }

    /// Potential modal density `Q_m(x) = Q(x) Pr_m(x)`.
    pub fn modal_demand(&self, policy: &StagePolicy, x: f64, mode: Mode) -> Result<f64> {
        let split = self.mode_split(policy, x)?;
        Ok(self.density_at(x) * split.probability(mode))
    }

    /// Realized density `q_m = Q_m max(0, 1 - e_c C_m)`.
    pub fn elastic_demand(&self, policy: &StagePolicy, x: f64, mode: Mode) -> Result<f64> {
        let potential = self.modal_demand(policy, x, mode)?;
        let cost = match mode {
            Mode::Bus => self.bus_cost_at(policy, x),
            Mode::Auto => self.auto_cost_at(x),
        };
        Ok(potential * self.realized_share(cost))
    }

    /// Fraction of potential demand realized at generalized cost `cost`.
    pub(crate) fn realized_share(&self, cost: f64) -> f64 {
        (1.0 - self.cost_elasticity * cost).max(0.0)
    }

    /// Everything the welfare and equity integrands need at one position.
    pub fn profile(&self, policy: &StagePolicy, x: f64) -> Result<PointProfile> {
        self.check_position(x)?;
        policy.check_frequency()?;
        Ok(self.profile_at(policy, x))
    }

    pub(crate) fn profile_at(&self, policy: &StagePolicy, x: f64) -> PointProfile {
        let density = self.density_at(x);
        let bus_cost = self.bus_cost_at(policy, x);
        let auto_cost = self.auto_cost_at(x);
        let pr_bus = logistic(self.logit_scale * (auto_cost - bus_cost));
        let pr_auto = 1.0 - pr_bus;
        PointProfile {
            x,
            density,
            bus_cost,
            auto_cost,
            pr_bus,
            pr_auto,
            bus_potential: density * pr_bus,
            auto_potential: density * pr_auto,
            bus_realized: density * pr_bus * self.realized_share(bus_cost),
            auto_realized: density * pr_auto * self.realized_share(auto_cost),
            fare: policy.fare_at(x),
        }
    }
}

impl Default for CorridorScenario {
    fn default() -> Self {
        Self::baseline()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Bus,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    FareBased = 0,
    FareFree = 1,
}

/// Operating stage with its fare-free zone length and frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StagePolicy {
    pub stage: Stage,
    /// Fare-free zone length `B` (miles); zero at the fare-based stage.
    pub zone_length: f64,
    /// Service frequency `F` (vehicles/hr).
    pub frequency: f64,
    pub fare_inside: f64,
    pub fare_outside: f64,
}

impl StagePolicy {
    /// Fare `fare` charged along the whole corridor.
    pub fn fare_based(fare: f64, frequency: f64) -> Self {
        Self {
            stage: Stage::FareBased,
            zone_length: 0.0,
            frequency,
            fare_inside: fare,
            fare_outside: fare,
        }
    }

    /// Fare waived on `[0, zone_length)`, `fare` charged beyond it.
    pub fn fare_free(zone_length: f64, frequency: f64, fare: f64) -> Self {
        Self {
            stage: Stage::FareFree,
            zone_length,
            frequency,
            fare_inside: 0.0,
            fare_outside: fare,
        }
    }

    pub fn fare_at(&self, x: f64) -> f64 {
        if x < self.zone_length {
            self.fare_inside
        } else {
            self.fare_outside
        }
    }

    fn check_frequency(&self) -> Result<()> {
        if self.frequency > 0.0 && self.frequency.is_finite() {
            Ok(())
        } else {
            Err(domain("F", self.frequency, "F > 0"))
        }
    }

    pub fn validate(&self, scenario: &CorridorScenario) -> Result<()> {
        self.check_frequency()?;
        if !(0.0..=scenario.corridor_length).contains(&self.zone_length) {
            return Err(domain("B", self.zone_length, "0 <= B <= A"));
        }
        match self.stage {
            Stage::FareBased if self.zone_length != 0.0 => {
                Err(invalid("B", "fare-based stage has no fare-free zone"))
            }
            Stage::FareBased if self.fare_inside != self.fare_outside => {
                Err(invalid("fare_inside", "fare-based stage charges one fare"))
            }
            Stage::FareFree if self.fare_inside != 0.0 => {
                Err(invalid("fare_inside", "fare-free zone charges no fare"))
            }
            _ => Ok(()),
        }
    }

    /// Interior breakpoints of the corridor for this policy.
    pub(crate) fn breakpoints(&self, corridor_length: f64) -> Vec<f64> {
        let mut pts = alloc::vec![0.0];
        if self.zone_length > 0.0 && self.zone_length < corridor_length {
            pts.push(self.zone_length);
        }
        pts.push(corridor_length);
        pts
    }
}

/// Mode choice probabilities at one position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSplit {
    pub pr_bus: f64,
    pub pr_auto: f64,
    /// Per-mile cost advantage of bus over auto.
    pub chi_0: f64,
    /// Constant cost advantage of bus over auto inside the fare-free zone.
    pub chi_1: f64,
    /// Constant cost advantage of bus over auto where the fare is charged.
    pub chi_2: f64,
}

impl ModeSplit {
    pub fn probability(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Bus => self.pr_bus,
            Mode::Auto => self.pr_auto,
        }
    }

    /// Bus probability from the composites: `1 / (exp(-psi (chi_0 x + chi)) + 1)`
    /// with `chi = chi_1` inside the zone and `chi_2` outside.
    pub fn pr_bus_from_composites(&self, logit_scale: f64, x: f64, inside_zone: bool) -> f64 {
        let chi = if inside_zone { self.chi_1 } else { self.chi_2 };
        logistic(logit_scale * (self.chi_0 * x + chi))
    }
}

/// Model quantities at one corridor position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointProfile {
    pub x: f64,
    pub density: f64,
    pub bus_cost: f64,
    pub auto_cost: f64,
    pub pr_bus: f64,
    pub pr_auto: f64,
    pub bus_potential: f64,
    pub auto_potential: f64,
    pub bus_realized: f64,
    pub auto_realized: f64,
    pub fare: f64,
}

/// `1 / (1 + exp(-z))` without overflow for large `|z|`.
pub(crate) fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}
