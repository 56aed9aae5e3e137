//! Appliance catalog config.
//!
//! ```toml
//! [bands]
//! edges = ["00:00", "07:00", "11:00", "14:00", "18:00", "24:00"]
//!
//! [appliance.microwave]
//! unit_power = 900.0
//! standby_power = 2.0
//! aum = { kind = "fractional", fraction = 0.3, burst = 5 }
//! pu = { cooking = 0.64, meal = 0.08 }
//! [[appliance.microwave.rule]]        # optional, most specific match wins
//! activity = "cooking"
//! season = "winter"
//! band = 4                             # index into the bands
//! p = 0.7
//!
//! [appliance.washing_machine]
//! aum = { kind = "cycle", phases = [[30, 2000.0], [60, 200.0]] }
//!
//! [appliance.fridge]
//! aum = { kind = "duty_cycle", on = 20, period = 60 }
//!
//! [composite.cooking]
//! components = ["oven", "microwave"]
//! baseline = [5.0, 20.0, 15.0, 10.0, 25.0]   # W per band
//!
//! [dhw]                                # see DhwConfig
//! ```

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dhw::DhwConfig;
use crate::activity::{ActivityId, ActivityTable};
use crate::calendar::{parse_hhmm, DayType, Season, MINUTES_PER_DAY};
use crate::error::{Error, Result};

/// How a task execution turns into appliance operation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AumKind {
    /// On for every executed minute of the task.
    Forced,
    /// On for `fraction` of the task, in bursts of `burst` minutes.
    Fractional {
        fraction: f64,
        #[serde(default = "default_burst")]
        burst: u32,
    },
    /// Fixed program started with the task, independent of its duration.
    Cycle { phases: Vec<(u32, f64)> },
    /// Not task-driven: on `on` minutes out of every `period`.
    DutyCycle { on: u32, period: u32 },
}

fn default_burst() -> u32 {
    5
}

/// Phases of a cycle program: `(minutes, watts)`, played back to back.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleProfile {
    pub phases: Vec<(u32, f64)>,
}

impl CycleProfile {
    pub fn new(phases: Vec<(u32, f64)>) -> Result<Self> {
        if phases.iter().map(|p| p.0).sum::<u32>() == 0 {
            return Err(Error::validation("cycle profile has zero total duration"));
        }
        if phases.iter().any(|p| !(p.1 >= 0.0)) {
            return Err(Error::validation("cycle profile has a negative power"));
        }
        Ok(CycleProfile { phases })
    }

    pub fn duration(&self) -> u32 {
        self.phases.iter().map(|p| p.0).sum()
    }

    /// Power `offset` minutes after the start, `None` once finished.
    pub fn power_at(&self, mut offset: u32) -> Option<f64> {
        for &(len, w) in &self.phases {
            if offset < len {
                return Some(w);
            }
            offset -= len;
        }
        None
    }

    pub fn energy_wh(&self) -> f64 {
        self.phases.iter().map(|&(m, w)| w * f64::from(m) / 60.0).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PuRule {
    pub activity: String,
    #[serde(default)]
    pub season: Option<Season>,
    #[serde(default)]
    pub day_type: Option<DayType>,
    #[serde(default)]
    pub band: Option<usize>,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApplianceModel {
    /// Report category; composite membership overrides it.
    #[serde(default)]
    pub group: Option<String>,
    #[serde(default)]
    pub unit_power: f64,
    #[serde(default)]
    pub standby_power: f64,
    pub aum: AumKind,
    /// All-season default probability of use per activity code.
    #[serde(default)]
    pub pu: BTreeMap<String, f64>,
    #[serde(default, rename = "rule")]
    pub rules: Vec<PuRule>,
}

impl ApplianceModel {
    /// Multiplies every power figure by `factor`.
    pub fn scale_power(&mut self, factor: f64) {
        self.unit_power *= factor;
        self.standby_power *= factor;
        if let AumKind::Cycle { phases } = &mut self.aum {
            for p in phases {
                p.1 *= factor;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositeAppliance {
    pub components: Vec<String>,
    /// Unmodeled load in W, one value per time-of-day band.
    #[serde(default)]
    pub baseline: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bands {
    pub edges: Vec<String>,
}

impl Default for Bands {
    fn default() -> Self {
        Bands { edges: ["00:00", "07:00", "11:00", "14:00", "18:00", "24:00"].map(String::from).to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApplianceConfig {
    #[serde(default)]
    pub bands: Bands,
    #[serde(default, rename = "appliance")]
    pub appliances: BTreeMap<String, ApplianceModel>,
    #[serde(default, rename = "composite")]
    pub composites: BTreeMap<String, CompositeAppliance>,
    #[serde(default)]
    pub dhw: DhwConfig,
}

fn check_p(what: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::validation(format!("{what}: probability {p} not in [0,1]")))
    }
}

impl ApplianceConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| e.in_file(path))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ApplianceConfig = toml::from_str(text).map_err(|e| crate::error::toml_error(text, e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("appliance config serializes")
    }

    pub fn band_edges(&self) -> Result<Vec<u32>> {
        let edges = self.bands.edges.iter().map(|e| parse_hhmm(e)).collect::<Result<Vec<u32>>>()?;
        let ok = edges.len() >= 2
            && edges[0] == 0
            && *edges.last().expect("nonempty") == MINUTES_PER_DAY
            && edges.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(Error::validation("bands.edges must rise strictly from 00:00 to 24:00"));
        }
        Ok(edges)
    }

    pub fn validate(&self) -> Result<()> {
        let n_bands = self.band_edges()?.len() - 1;
        for (name, m) in &self.appliances {
            if !(m.unit_power >= 0.0 && m.standby_power >= 0.0) {
                return Err(Error::validation(format!("appliance `{name}`: powers must be >= 0")));
            }
            match &m.aum {
                AumKind::Fractional { fraction, burst } => {
                    if !(*fraction > 0.0 && *fraction <= 1.0) {
                        return Err(Error::validation(format!("appliance `{name}`: fraction {fraction} not in (0,1]")));
                    }
                    if *burst == 0 {
                        return Err(Error::validation(format!("appliance `{name}`: burst must be >= 1")));
                    }
                }
                AumKind::Cycle { phases } => {
                    CycleProfile::new(phases.clone())
                        .map_err(|e| Error::validation(format!("appliance `{name}`: {e}")))?;
                }
                AumKind::DutyCycle { on, period } => {
                    if *period == 0 || on > period {
                        return Err(Error::validation(format!("appliance `{name}`: need 0 <= on <= period, period > 0")));
                    }
                }
                AumKind::Forced => {}
            }
            for (act, &p) in &m.pu {
                check_p(&format!("appliance `{name}` pu.{act}"), p)?;
            }
            for r in &m.rules {
                check_p(&format!("appliance `{name}` rule for {}", r.activity), r.p)?;
                if r.band.is_some_and(|b| b >= n_bands) {
                    return Err(Error::validation(format!("appliance `{name}`: rule band out of range")));
                }
            }
        }
        for (name, c) in &self.composites {
            for comp in &c.components {
                if !self.appliances.contains_key(comp) {
                    return Err(Error::validation(format!("composite `{name}`: unknown component `{comp}`")));
                }
            }
            if !c.baseline.is_empty() && c.baseline.len() != n_bands {
                return Err(Error::validation(format!(
                    "composite `{name}`: baseline needs {n_bands} values, one per band"
                )));
            }
            if c.baseline.iter().any(|b| !(*b >= 0.0)) {
                return Err(Error::validation(format!("composite `{name}`: negative baseline")));
            }
        }
        self.dhw.validate()
    }
}

#[derive(Debug, Clone)]
struct CompiledRule {
    activity: ActivityId,
    season: Option<Season>,
    day_type: Option<DayType>,
    band: Option<usize>,
    p: f64,
    specificity: u8,
}

/// Validated catalog with interned activity ids and report groups.
#[derive(Debug, Clone)]
pub struct ApplianceSet {
    pub config: ApplianceConfig,
    pub names: Vec<String>,
    pub models: Vec<ApplianceModel>,
    /// Report groups, sorted; `model_group[i]` indexes into it.
    pub groups: Vec<String>,
    pub model_group: Vec<usize>,
    /// `(group index, per-band watts)` for composites with a baseline.
    pub baselines: Vec<(usize, Vec<f64>)>,
    pub band_edges: Vec<u32>,
    index: HashMap<String, usize>,
    default_pu: Vec<Vec<f64>>,
    rules: Vec<Vec<CompiledRule>>,
}

impl ApplianceSet {
    pub fn new(config: ApplianceConfig, activities: &ActivityTable) -> Result<Self> {
        config.validate()?;
        let band_edges = config.band_edges()?;
        let names: Vec<String> = config.appliances.keys().cloned().collect();
        let models: Vec<ApplianceModel> = config.appliances.values().cloned().collect();
        let index: HashMap<String, usize> = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();

        let mut group_of: Vec<String> =
            names.iter().zip(&models).map(|(n, m)| m.group.clone().unwrap_or_else(|| n.clone())).collect();
        for (cname, c) in &config.composites {
            for comp in &c.components {
                group_of[index[comp]] = cname.clone();
            }
        }
        let mut groups: Vec<String> = group_of.clone();
        groups.extend(config.composites.keys().cloned());
        groups.push(super::DHW_GROUP.to_string());
        groups.sort();
        groups.dedup();
        let gidx = |g: &str| groups.iter().position(|x| x == g).expect("group listed");
        let model_group = group_of.iter().map(|g| gidx(g)).collect();
        let baselines = config
            .composites
            .iter()
            .filter(|(_, c)| !c.baseline.is_empty())
            .map(|(n, c)| (gidx(n), c.baseline.clone()))
            .collect();

        let mut default_pu = Vec::with_capacity(models.len());
        let mut rules = Vec::with_capacity(models.len());
        for m in &models {
            let mut table = vec![0.0; activities.len()];
            for (act, &p) in &m.pu {
                if let Some(id) = activities.id(act) {
                    table[id as usize] = p;
                }
            }
            default_pu.push(table);
            rules.push(
                m.rules
                    .iter()
                    .filter_map(|r| {
                        activities.id(&r.activity).map(|activity| CompiledRule {
                            activity,
                            season: r.season,
                            day_type: r.day_type,
                            band: r.band,
                            p: r.p,
                            specificity: u8::from(r.season.is_some())
                                + u8::from(r.day_type.is_some())
                                + u8::from(r.band.is_some()),
                        })
                    })
                    .collect(),
            );
        }
        Ok(ApplianceSet {
            config,
            names,
            models,
            groups,
            model_group,
            baselines,
            band_edges,
            index,
            default_pu,
            rules,
        })
    }

    pub fn model_index(&self, category: &str) -> Option<usize> {
        self.index.get(category).copied()
    }

    pub fn group_index(&self, group: &str) -> Option<usize> {
        self.groups.iter().position(|g| g == group)
    }

    pub fn band_of(&self, minute_of_day: u32) -> usize {
        self.band_edges[1..].iter().position(|&e| minute_of_day < e).unwrap_or(self.band_edges.len() - 2)
    }

    /// Probability of use: the most specific matching rule, else the
    /// all-season default for the activity, else 0.
    pub fn pu(&self, model: usize, activity: ActivityId, season: Season, day_type: DayType, band: usize) -> f64 {
        let mut best: Option<&CompiledRule> = None;
        for r in &self.rules[model] {
            let hit = r.activity == activity
                && r.season.map_or(true, |s| s == season)
                && r.day_type.map_or(true, |d| d == day_type)
                && r.band.map_or(true, |b| b == band);
            if hit && best.map_or(true, |b| r.specificity > b.specificity) {
                best = Some(r);
            }
        }
        match best {
            Some(r) => r.p,
            None => self.default_pu[model].get(activity as usize).copied().unwrap_or(0.0),
        }
    }

    /// Baseline watts of all composites at a minute of day.
    pub fn baseline_at(&self, minute_of_day: u32) -> impl Iterator<Item = (usize, f64)> + '_ {
        let band = self.band_of(minute_of_day);
        self.baselines.iter().map(move |(g, v)| (*g, v[band]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CFG: &str = r#"
        [appliance.microwave]
        unit_power = 900.0
        standby_power = 2.0
        aum = { kind = "fractional", fraction = 0.3 }
        pu = { cooking = 0.64, tv = 0.02 }
        [[appliance.microwave.rule]]
        activity = "cooking"
        season = "winter"
        p = 0.7
        [[appliance.microwave.rule]]
        activity = "cooking"
        season = "winter"
        band = 4
        p = 0.9
        [appliance.tv]
        unit_power = 100.0
        aum = { kind = "forced" }
        pu = { tv = 1.0 }
        [appliance.washing_machine]
        aum = { kind = "cycle", phases = [[30, 2000.0], [60, 200.0]] }
        [composite.cooking]
        components = ["microwave"]
        baseline = [5.0, 20.0, 15.0, 10.0, 25.0]
    "#;

    fn table() -> ActivityTable {
        let mut t = ActivityTable::default();
        t.intern("cooking");
        t.intern("tv");
        t
    }

    #[test]
    fn pu_resolution_most_specific() {
        let set = ApplianceSet::new(ApplianceConfig::from_toml(CFG).unwrap(), &table()).unwrap();
        let m = set.model_index("microwave").unwrap();
        let cook = table().id("cooking").unwrap();
        assert_eq!(set.pu(m, cook, Season::Summer, DayType::Weekday, 0), 0.64);
        assert_eq!(set.pu(m, cook, Season::Winter, DayType::Weekday, 0), 0.7);
        assert_eq!(set.pu(m, cook, Season::Winter, DayType::Weekday, 4), 0.9);
        let tv = set.model_index("tv").unwrap();
        assert_eq!(set.pu(tv, cook, Season::Winter, DayType::Weekday, 4), 0.0);
    }

    #[test]
    fn groups_and_bands() {
        let set = ApplianceSet::new(ApplianceConfig::from_toml(CFG).unwrap(), &table()).unwrap();
        assert_eq!(set.groups[set.model_group[set.model_index("microwave").unwrap()]], "cooking");
        assert_eq!(set.band_of(0), 0);
        assert_eq!(set.band_of(419), 0);
        assert_eq!(set.band_of(420), 1);
        assert_eq!(set.band_of(1439), 4);
        let b: Vec<_> = set.baseline_at(1200).collect();
        assert_eq!(b, vec![(set.group_index("cooking").unwrap(), 25.0)]);
    }

    #[test]
    fn validation_errors() {
        let bad = CFG.replace("fraction = 0.3", "fraction = 1.5");
        assert!(ApplianceConfig::from_toml(&bad).is_err());
        let bad = CFG.replace("cooking = 0.64", "cooking = 1.64");
        assert!(ApplianceConfig::from_toml(&bad).is_err());
        let bad = CFG.replace("[[30, 2000.0], [60, 200.0]]", "[[0, 2000.0]]");
        assert!(ApplianceConfig::from_toml(&bad).is_err());
        let bad = CFG.replace("baseline = [5.0, 20.0, 15.0, 10.0, 25.0]", "baseline = [5.0]");
        assert!(ApplianceConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn cycle_profile_energy() {
        let p = CycleProfile::new(vec![(30, 2000.0), (60, 200.0)]).unwrap();
        assert_eq!(p.duration(), 90);
        assert!((p.energy_wh() - 1200.0).abs() < 1e-9);
        assert_eq!(p.power_at(29), Some(2000.0));
        assert_eq!(p.power_at(30), Some(200.0));
        assert_eq!(p.power_at(90), None);
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ApplianceConfig::from_toml(CFG).unwrap();
        assert_eq!(ApplianceConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}
