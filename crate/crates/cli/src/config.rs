//! Scenario configuration: a sectioned TOML file where every entry is a bare
//! value or `{ value, unit, source }`.
//!
//! Missing entries fall back to baseline defaults, except the two travel
//! speeds, which have no published value and must be given explicitly.
//! Parsing collects every problem before failing.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;

use farezone_core::corridor::CorridorScenario;
use farezone_core::demand::GbmParams;
use farezone_core::equity::BenefitWeights;
use farezone_core::options::DpGrid;
use farezone_core::policy::PathMode;
use farezone_core::search::{FrequencyRule, SearchRange, SearchSpec};
use toml::{Table, Value};

use crate::error::CliError;

/// Where a configured value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Source {
    /// Published baseline.
    Table2,
    /// Modelling assumption without a published value.
    Assumed,
    /// Set by the user.
    User,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Table2 => "table2",
            Source::Assumed => "assumed",
            Source::User => "user",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "table2" => Some(Source::Table2),
            "assumed" => Some(Source::Assumed),
            "user" => Some(Source::User),
            _ => None,
        }
    }
}

/// A configured value.
#[derive(Debug, Clone, PartialEq)]
pub enum Setting {
    Real(f64),
    Count(u64),
    Flag(bool),
    Text(String),
    List(Vec<f64>),
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Setting::Real(v) => write!(f, "{}", Value::Float(*v)),
            Setting::Count(v) => write!(f, "{v}"),
            Setting::Flag(v) => write!(f, "{v}"),
            Setting::Text(v) => write!(f, "{}", Value::String(v.clone())),
            Setting::List(v) => {
                let items: Vec<String> = v.iter().map(|x| Value::Float(*x).to_string()).collect();
                write!(f, "[{}]", items.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Real,
    Count,
    Flag,
    Text,
    List,
}

enum Fallback {
    Value(fn() -> Setting, Source),
    /// Same value as another entry.
    SameAs(&'static str, &'static str),
    /// Must be given.
    Required(&'static str),
    /// May stay unset.
    Unset,
}

struct Field {
    section: &'static str,
    key: &'static str,
    unit: &'static str,
    kind: Kind,
    fallback: Fallback,
}

macro_rules! real {
    ($s:literal, $k:literal, $u:literal, $v:expr, $src:ident) => {
        Field {
            section: $s,
            key: $k,
            unit: $u,
            kind: Kind::Real,
            fallback: Fallback::Value(|| Setting::Real($v), Source::$src),
        }
    };
}

macro_rules! count {
    ($s:literal, $k:literal, $u:literal, $v:expr, $src:ident) => {
        Field {
            section: $s,
            key: $k,
            unit: $u,
            kind: Kind::Count,
            fallback: Fallback::Value(|| Setting::Count($v), Source::$src),
        }
    };
}

const SPEED_HELP: &str = "travel speeds have no published baseline value; \
     set it explicitly, e.g. { value = 30, unit = \"mile/hr\", source = \"assumed\" }";

static FIELDS: &[Field] = &[
    real!("corridor", "A", "mile", 50.0, Table2),
    real!("corridor", "Q_CBD", "pax/mile/day", 1500.0, Table2),
    real!("corridor", "psi", "-", 0.5, Table2),
    real!("corridor", "e_c", "-", 1.0 / 70.0, Table2),
    Field {
        section: "corridor",
        key: "v_a",
        unit: "mile/hr",
        kind: Kind::Real,
        fallback: Fallback::Required(SPEED_HELP),
    },
    Field {
        section: "corridor",
        key: "v_b",
        unit: "mile/hr",
        kind: Kind::Real,
        fallback: Fallback::Required(SPEED_HELP),
    },
    count!("corridor", "n_groups", "-", 50, Table2),
    Field {
        section: "corridor",
        key: "admin_in_fare_free_objective",
        unit: "-",
        kind: Kind::Flag,
        fallback: Fallback::Value(|| Setting::Flag(true), Source::Assumed),
    },
    real!("costs", "alpha_T", "$/hr", 20.0, Table2),
    real!("costs", "alpha_w", "$/hr", 20.0, Table2),
    real!("costs", "alpha_S", "$/hr", 20.0, Table2),
    real!("costs", "S", "hr", 0.1, Table2),
    real!("costs", "C_f_a", "$/trip", 3.0, Table2),
    real!("costs", "C_v_a", "$/mile", 0.5, Table2),
    real!("costs", "f", "$/trip", 5.0, Table2),
    real!("costs", "g_f", "$/day", 10_000.0, Table2),
    real!("costs", "g_v", "$/vehicle/day", 500.0, Table2),
    real!("costs", "e_0", "$/day", 5_000.0, Table2),
    real!("costs", "e_1", "$/mile", 500.0, Table2),
    real!("costs", "e_2", "$/trip", 0.1, Table2),
    real!("costs", "iota_f", "$/day", 10_000.0, Table2),
    real!("costs", "iota_v", "$/mile", 10.0, Table2),
    real!("costs", "theta", "-", 2.0, Table2),
    real!("dynamics", "eta", "1/month", 0.0116, Table2),
    real!("dynamics", "sigma", "1/month", 0.1347, Table2),
    real!("dynamics", "k", "1/month", 0.02, Table2),
    Field {
        section: "dynamics",
        key: "Q0",
        unit: "pax/mile/day",
        kind: Kind::Real,
        fallback: Fallback::SameAs("corridor", "Q_CBD"),
    },
    real!("dynamics", "D", "$", 5_000.0, Table2),
    real!("dynamics", "K", "$", 5_000.0, Table2),
    real!("search", "F_min", "veh/hr", 1.0, Assumed),
    real!("search", "F_max", "veh/hr", 40.0, Assumed),
    real!("search", "F_step", "veh/hr", 1.0, Assumed),
    real!("search", "B_min", "mile", 0.0, Assumed),
    Field {
        section: "search",
        key: "B_max",
        unit: "mile",
        kind: Kind::Real,
        fallback: Fallback::SameAs("corridor", "A"),
    },
    real!("search", "B_step", "mile", 1.0, Assumed),
    count!("search", "refinements", "-", 2, Assumed),
    real!("search", "benefit_step", "mile", 0.1, Assumed),
    Field {
        section: "equity",
        key: "mu",
        unit: "-",
        kind: Kind::List,
        fallback: Fallback::Value(
            || Setting::List(vec![0.0, 0.25, 0.5, 0.75, 1.0]),
            Source::Assumed,
        ),
    },
    real!("equity", "beta_min", "-", 0.0, Assumed),
    real!("equity", "beta_max", "-", 1.0, Assumed),
    Field {
        section: "equity",
        key: "fares",
        unit: "$/trip",
        kind: Kind::List,
        fallback: Fallback::Value(|| Setting::List(vec![0.0, 2.0, 5.0, 8.0]), Source::Assumed),
    },
    Field {
        section: "equity",
        key: "fixed_frequency",
        unit: "veh/hr",
        kind: Kind::Real,
        fallback: Fallback::Unset,
    },
    count!("simulation", "months", "month", 42, Assumed),
    count!("simulation", "paths", "-", 50, Assumed),
    count!("simulation", "seed", "-", 2024, Assumed),
    Field {
        section: "simulation",
        key: "path_mode",
        unit: "-",
        kind: Kind::Text,
        fallback: Fallback::Value(|| Setting::Text("each".into()), Source::Assumed),
    },
    Field {
        section: "simulation",
        key: "start_month",
        unit: "-",
        kind: Kind::Text,
        fallback: Fallback::Value(|| Setting::Text("2024-09".into()), Source::Assumed),
    },
    count!("options", "dp_points", "-", 2000, Assumed),
    real!("options", "dp_span", "-", 20.0, Assumed),
    count!("options", "dp_substeps", "-", 1, Assumed),
    real!("options", "dp_tolerance", "-", 1e-6, Assumed),
    real!(
        "calibration",
        "ridership_scale",
        "pax/mile/day per boarding",
        1.0,
        Assumed
    ),
];

const SECTIONS: &[&str] = &[
    "corridor",
    "costs",
    "dynamics",
    "search",
    "equity",
    "simulation",
    "options",
    "calibration",
];

fn field(section: &str, key: &str) -> Option<&'static Field> {
    FIELDS.iter().find(|f| f.section == section && f.key == key)
}

/// Configured entry with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: Setting,
    pub source: Source,
    /// Whether the file set this entry or it took a default.
    pub explicit: bool,
}

/// Parsed and validated scenario configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    entries: BTreeMap<(&'static str, &'static str), Entry>,
}

/// Typed settings derived from a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub corridor: CorridorScenario,
    pub gbm: GbmParams,
    pub activation_cost: f64,
    pub deactivation_cost: f64,
    pub search: SearchSpec,
    pub mu: Vec<f64>,
    pub beta_min: f64,
    pub beta_max: f64,
    pub fares: Vec<f64>,
    pub frequency_rule: FrequencyRule,
    pub months: usize,
    pub paths: usize,
    pub seed: u64,
    pub path_mode: PathMode,
    /// `(year, month)` of month zero.
    pub start_month: (i32, u32),
    pub dp_grid: DpGrid,
    pub ridership_scale: f64,
}

fn kind_name(k: Kind) -> &'static str {
    match k {
        Kind::Real => "a number",
        Kind::Count => "a nonnegative integer",
        Kind::Flag => "a boolean",
        Kind::Text => "a string",
        Kind::List => "a list of numbers",
    }
}

fn convert(kind: Kind, v: &Value) -> Option<Setting> {
    let real = |v: &Value| match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    };
    match kind {
        Kind::Real => real(v).map(Setting::Real),
        Kind::Count => v
            .as_integer()
            .and_then(|i| u64::try_from(i).ok())
            .map(Setting::Count),
        Kind::Flag => v.as_bool().map(Setting::Flag),
        Kind::Text => v.as_str().map(|s| Setting::Text(s.into())),
        Kind::List => v
            .as_array()
            .and_then(|a| a.iter().map(real).collect::<Option<Vec<f64>>>())
            .map(Setting::List),
    }
}

/// Parses `YYYY-MM`.
pub fn parse_month(s: &str) -> Option<(i32, u32)> {
    let (y, m) = s.split_once('-')?;
    if y.len() != 4 || m.len() != 2 {
        return None;
    }
    let year: i32 = y.parse().ok()?;
    let month: u32 = m.parse().ok()?;
    (1..=12).contains(&month).then_some((year, month))
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses and validates, reporting every problem found.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| {
            CliError::Validation(vec![format!("parse error: {}", e.message())])
        })?;
        let mut problems = Vec::new();
        let mut entries = BTreeMap::new();
        let mut present = Vec::new();
        for (section, body) in &table {
            if !SECTIONS.contains(&section.as_str()) {
                problems.push(format!("unknown section [{section}]"));
                continue;
            }
            let Some(body) = body.as_table() else {
                problems.push(format!("{section}: expected a table"));
                continue;
            };
            for (key, raw) in body {
                let Some(f) = field(section, key) else {
                    problems.push(format!("{section}.{key}: unknown key"));
                    continue;
                };
                present.push((f.section, f.key));
                match read_entry(f, raw) {
                    Ok(e) => {
                        entries.insert((f.section, f.key), e);
                    }
                    Err(mut p) => problems.append(&mut p),
                }
            }
        }
        for f in FIELDS {
            if present.contains(&(f.section, f.key)) {
                continue;
            }
            match &f.fallback {
                Fallback::Value(v, src) => {
                    entries.insert(
                        (f.section, f.key),
                        Entry {
                            value: v(),
                            source: *src,
                            explicit: false,
                        },
                    );
                }
                Fallback::Required(help) => {
                    problems.push(format!("{}.{}: missing; {help}", f.section, f.key))
                }
                Fallback::SameAs(..) | Fallback::Unset => {}
            }
        }
        if !problems.is_empty() {
            return Err(CliError::Validation(problems));
        }
        let config = Self { entries };
        let problems = config.violations();
        if problems.is_empty() {
            Ok(config)
        } else {
            Err(CliError::Validation(problems))
        }
    }

    /// The entry, after resolving entries that default to another one.
    pub fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        let f = field(section, key)?;
        match (self.entries.get(&(f.section, f.key)), &f.fallback) {
            (Some(e), _) => Some(e),
            (None, Fallback::SameAs(s, k)) => self.get(s, k),
            _ => None,
        }
    }

    fn real(&self, section: &str, key: &str) -> f64 {
        match self.get(section, key).map(|e| &e.value) {
            Some(Setting::Real(v)) => *v,
            _ => f64::NAN,
        }
    }

    fn count(&self, section: &str, key: &str) -> u64 {
        match self.get(section, key).map(|e| &e.value) {
            Some(Setting::Count(v)) => *v,
            _ => 0,
        }
    }

    fn list(&self, section: &str, key: &str) -> Vec<f64> {
        match self.get(section, key).map(|e| &e.value) {
            Some(Setting::List(v)) => v.clone(),
            _ => Vec::new(),
        }
    }

    fn text(&self, section: &str, key: &str) -> String {
        match self.get(section, key).map(|e| &e.value) {
            Some(Setting::Text(v)) => v.clone(),
            _ => String::new(),
        }
    }

    /// Overrides an entry as if the user had set it.
    pub fn set(&mut self, section: &str, key: &str, value: Setting) -> Result<(), CliError> {
        let f = field(section, key)
            .ok_or_else(|| CliError::Validation(vec![format!("{section}.{key}: unknown key")]))?;
        self.entries.insert(
            (f.section, f.key),
            Entry {
                value,
                source: Source::User,
                explicit: true,
            },
        );
        let problems = self.violations();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(problems))
        }
    }

    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let s = self.settings_unchecked();
        let section_of = |name: &str| {
            FIELDS
                .iter()
                .find(|f| f.key == name)
                .map(|f| f.section)
                .unwrap_or("corridor")
        };
        for (name, reason) in s.corridor.violations() {
            out.push(format!("{}.{name}: {reason}", section_of(name)));
        }
        if let Err(e) = s.gbm.validate() {
            out.push(format!("dynamics: {e}"));
        }
        if !(s.gbm.discount > s.gbm.growth) {
            out.push("dynamics.k: discount rate must exceed the growth rate eta".into());
        }
        for (key, v) in [("D", s.activation_cost), ("K", s.deactivation_cost)] {
            if !(v >= 0.0 && v.is_finite()) {
                out.push(format!("dynamics.{key}: must be >= 0"));
            }
        }
        if let Err(e) = s.search.validate() {
            out.push(format!("search: {e}"));
        }
        if s.search.zone_length.max > s.corridor.corridor_length {
            out.push("search.B_max: must not exceed the corridor length A".into());
        }
        if s.mu.is_empty() || s.mu.iter().any(|m| !(0.0..=1.0).contains(m)) {
            out.push("equity.mu: need one or more weights in [0, 1]".into());
        }
        if BenefitWeights::new(0.0, s.beta_min, s.beta_max).is_err() {
            out.push("equity.beta_min/beta_max: need 0 <= beta_min <= beta_max <= 1".into());
        }
        if s.fares.is_empty() || s.fares.iter().any(|f| !(*f >= 0.0 && f.is_finite())) {
            out.push("equity.fares: need one or more fares >= 0".into());
        }
        if let FrequencyRule::Fixed(f) = s.frequency_rule {
            if !(f > 0.0 && f.is_finite()) {
                out.push("equity.fixed_frequency: must be > 0".into());
            }
        }
        if s.months == 0 {
            out.push("simulation.months: must be >= 1".into());
        }
        if s.paths == 0 {
            out.push("simulation.paths: must be >= 1".into());
        }
        let mode = self.text("simulation", "path_mode");
        if mode != "each" && mode != "mean" {
            out.push(format!(
                "simulation.path_mode: expected \"each\" or \"mean\", got {mode:?}"
            ));
        }
        if parse_month(&self.text("simulation", "start_month")).is_none() {
            out.push("simulation.start_month: expected YYYY-MM".into());
        }
        let g = s.dp_grid;
        if g.points < 10 {
            out.push("options.dp_points: must be >= 10".into());
        }
        if !(g.span > 1.0 && g.span.is_finite()) {
            out.push("options.dp_span: must be > 1".into());
        }
        if g.substeps == 0 {
            out.push("options.dp_substeps: must be >= 1".into());
        }
        if !(g.tolerance > 0.0 && g.tolerance.is_finite()) {
            out.push("options.dp_tolerance: must be > 0".into());
        }
        if !(s.ridership_scale > 0.0 && s.ridership_scale.is_finite()) {
            out.push("calibration.ridership_scale: must be > 0".into());
        }
        out
    }

    fn settings_unchecked(&self) -> Settings {
        let r = |s, k| self.real(s, k);
        let corridor = CorridorScenario {
            corridor_length: r("corridor", "A"),
            cbd_density: r("corridor", "Q_CBD"),
            logit_scale: r("corridor", "psi"),
            cost_elasticity: r("corridor", "e_c"),
            value_in_vehicle: r("costs", "alpha_T"),
            value_waiting: r("costs", "alpha_w"),
            value_access: r("costs", "alpha_S"),
            access_time: r("costs", "S"),
            auto_fixed_cost: r("costs", "C_f_a"),
            auto_variable_cost: r("costs", "C_v_a"),
            fare: r("costs", "f"),
            auto_speed: r("corridor", "v_a"),
            bus_speed: r("corridor", "v_b"),
            operating_fixed: r("costs", "g_f"),
            operating_per_vehicle: r("costs", "g_v"),
            collection_fixed: r("costs", "e_0"),
            collection_per_mile: r("costs", "e_1"),
            collection_per_trip: r("costs", "e_2"),
            admin_fixed: r("costs", "iota_f"),
            admin_variable: r("costs", "iota_v"),
            admin_exponent: r("costs", "theta"),
            groups: self.count("corridor", "n_groups") as usize,
            admin_in_fare_free_objective: matches!(
                self.get("corridor", "admin_in_fare_free_objective")
                    .map(|e| &e.value),
                Some(Setting::Flag(true))
            ),
        };
        let gbm = GbmParams {
            growth: r("dynamics", "eta"),
            volatility: r("dynamics", "sigma"),
            discount: r("dynamics", "k"),
            initial: r("dynamics", "Q0"),
        };
        let search = SearchSpec {
            frequency: SearchRange {
                min: r("search", "F_min"),
                max: r("search", "F_max"),
                step: r("search", "F_step"),
            },
            zone_length: SearchRange {
                min: r("search", "B_min"),
                max: r("search", "B_max"),
                step: r("search", "B_step"),
            },
            refinements: self.count("search", "refinements") as usize,
            benefit_step: r("search", "benefit_step"),
        };
        let frequency_rule = match self.get("equity", "fixed_frequency") {
            Some(Entry {
                value: Setting::Real(f),
                ..
            }) => FrequencyRule::Fixed(*f),
            _ => FrequencyRule::Reoptimize,
        };
        Settings {
            corridor,
            gbm,
            activation_cost: r("dynamics", "D"),
            deactivation_cost: r("dynamics", "K"),
            search,
            mu: self.list("equity", "mu"),
            beta_min: r("equity", "beta_min"),
            beta_max: r("equity", "beta_max"),
            fares: self.list("equity", "fares"),
            frequency_rule,
            months: self.count("simulation", "months") as usize,
            paths: self.count("simulation", "paths") as usize,
            seed: self.count("simulation", "seed"),
            path_mode: if self.text("simulation", "path_mode") == "mean" {
                PathMode::MeanPath
            } else {
                PathMode::EachPath
            },
            start_month: parse_month(&self.text("simulation", "start_month")).unwrap_or((2024, 9)),
            dp_grid: DpGrid {
                points: self.count("options", "dp_points") as usize,
                span: r("options", "dp_span"),
                substeps: self.count("options", "dp_substeps") as usize,
                tolerance: r("options", "dp_tolerance"),
                ..DpGrid::default()
            },
            ridership_scale: r("calibration", "ridership_scale"),
        }
    }

    /// Typed view of the configuration.
    pub fn settings(&self) -> Settings {
        self.settings_unchecked()
    }

    /// Entries whose source is `assumed`, as `(section.key, value)`.
    pub fn assumed(&self) -> Vec<(String, Setting)> {
        FIELDS
            .iter()
            .filter_map(|f| {
                let e = self.get(f.section, f.key)?;
                (e.source == Source::Assumed)
                    .then(|| (format!("{}.{}", f.section, f.key), e.value.clone()))
            })
            .collect()
    }

    /// Every set entry as `{ value, unit, source }`, in schema order. Parsing
    /// the result gives back an equal configuration.
    pub fn to_toml_string(&self) -> String {
        let mut out = String::new();
        for section in SECTIONS {
            let _ = writeln!(out, "[{section}]");
            for f in FIELDS.iter().filter(|f| f.section == *section) {
                if let Some(e) = self.entries.get(&(f.section, f.key)) {
                    let _ = writeln!(
                        out,
                        "{} = {{ value = {}, unit = {}, source = \"{}\" }}",
                        f.key,
                        e.value,
                        Value::String(f.unit.into()),
                        e.source.as_str()
                    );
                }
            }
            out.push('\n');
        }
        out
    }
}

fn read_entry(f: &Field, raw: &Value) -> Result<Entry, Vec<String>> {
    let name = format!("{}.{}", f.section, f.key);
    let mut problems = Vec::new();
    let (value, source) = match raw {
        Value::Table(t) => {
            for k in t.keys() {
                if !["value", "unit", "source"].contains(&k.as_str()) {
                    problems.push(format!("{name}: unknown attribute {k:?}"));
                }
            }
            if let Some(u) = t.get("unit") {
                match u.as_str() {
                    Some(u) if u == f.unit => {}
                    Some(u) => problems.push(format!(
                        "{name}: unit {u:?} does not match expected {:?}",
                        f.unit
                    )),
                    None => problems.push(format!("{name}: unit must be a string")),
                }
            }
            let source = match t.get("source") {
                None => Source::User,
                Some(s) => match s.as_str().and_then(Source::parse) {
                    Some(src) => src,
                    None => {
                        problems.push(format!(
                            "{name}: source must be one of \"table2\", \"assumed\", \"user\""
                        ));
                        Source::User
                    }
                },
            };
            match t.get("value") {
                Some(v) => (v, source),
                None => {
                    problems.push(format!("{name}: missing value"));
                    return Err(problems);
                }
            }
        }
        v => (v, Source::User),
    };
    let Some(setting) = convert(f.kind, value) else {
        problems.push(format!("{name}: expected {}", kind_name(f.kind)));
        return Err(problems);
    };
    if problems.is_empty() {
        Ok(Entry {
            value: setting,
            source,
            explicit: true,
        })
    } else {
        Err(problems)
    }
}

/// The bundled baseline configuration.
pub const TABLE2: &str = include_str!("../data/table2.toml");

#[cfg(test)]
mod tests {
    use super::*;

    fn problems(text: &str) -> Vec<String> {
        match ScenarioConfig::parse(text) {
            Err(CliError::Validation(p)) => p,
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn bundled_file_reproduces_baseline() {
        let c = ScenarioConfig::parse(TABLE2).unwrap();
        let s = c.settings();
        assert_eq!(s.corridor, CorridorScenario::baseline());
        assert_eq!(s.gbm, GbmParams::baseline());
        assert_eq!((s.activation_cost, s.deactivation_cost), (5000.0, 5000.0));
        assert_eq!(s.search, SearchSpec::for_scenario(&s.corridor));
        assert_eq!(c.get("corridor", "v_a").unwrap().source, Source::Assumed);
        assert_eq!(c.get("corridor", "A").unwrap().source, Source::Table2);
    }

    #[test]
    fn round_trip_is_lossless() {
        let c = ScenarioConfig::parse(TABLE2).unwrap();
        let again = ScenarioConfig::parse(&c.to_toml_string()).unwrap();
        assert_eq!(c.settings(), again.settings());
        assert_eq!(c.to_toml_string(), again.to_toml_string());
        let minimal = ScenarioConfig::parse("[corridor]\nv_a = 31.5\nv_b = 24\n").unwrap();
        let back = ScenarioConfig::parse(&minimal.to_toml_string()).unwrap();
        assert_eq!(minimal.settings(), back.settings());
        assert_eq!(back.get("corridor", "v_a").unwrap().source, Source::User);
    }

    #[test]
    fn speeds_are_required() {
        let p = problems("[corridor]\nv_a = 30\n");
        assert_eq!(p.len(), 1);
        assert!(p[0].starts_with("corridor.v_b: missing"));
        assert!(p[0].contains("no published baseline"));
    }

    #[test]
    fn every_violation_is_listed() {
        let p = problems("[corridor]\nA = -5\nv_a = 30\nv_b = 25\nfoo = 1\n[costs]\nf = { value = 5, unit = \"$/mile\" }\n[bogus]\n");
        assert!(p.iter().any(|m| m == "corridor.foo: unknown key"));
        assert!(p.iter().any(|m| m.starts_with("costs.f: unit")));
        assert!(p.iter().any(|m| m == "unknown section [bogus]"));
        let p = problems("[corridor]\nA = -5\nv_a = 30\nv_b = 0\n");
        assert!(p.iter().any(|m| m.starts_with("corridor.A")));
        assert!(p.iter().any(|m| m.starts_with("corridor.v_b")));
    }

    #[test]
    fn bad_types_and_sources_rejected() {
        let p = problems(
            "[corridor]\nv_a = \"fast\"\nv_b = { value = 25, source = \"guess\" }\nn_groups = -3\n",
        );
        assert_eq!(p.len(), 3);
    }

    #[test]
    fn derived_defaults_follow_their_reference() {
        let c =
            ScenarioConfig::parse("[corridor]\nA = 40\nQ_CBD = 900\nv_a = 30\nv_b = 25\n").unwrap();
        let s = c.settings();
        assert_eq!(s.search.zone_length.max, 40.0);
        assert_eq!(s.gbm.initial, 900.0);
    }

    #[test]
    fn overrides_are_user_sourced_and_checked() {
        let mut c = ScenarioConfig::parse(TABLE2).unwrap();
        c.set("simulation", "seed", Setting::Count(7)).unwrap();
        assert_eq!(c.settings().seed, 7);
        assert_eq!(c.get("simulation", "seed").unwrap().source, Source::User);
        assert!(c.set("dynamics", "k", Setting::Real(0.001)).is_err());
    }

    #[test]
    fn month_labels() {
        assert_eq!(parse_month("2024-09"), Some((2024, 9)));
        assert_eq!(parse_month("2024-13"), None);
        assert_eq!(parse_month("24-09"), None);
    }
}
