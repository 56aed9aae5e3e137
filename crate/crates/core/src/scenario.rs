//! Eco-behaviors applied to paired runs: task-catalog transformations,
//! shower blocking, activity-rate reports and baseline/scenario deltas.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use serde::Deserialize;

use crate::activity::{ActivityCounts, ActivityTrace, IDLE};
use crate::calendar::{format_hhmm, format_timestamp, Period, MINUTES_PER_DAY};
use crate::error::{Error, Result};
use crate::rng::{self, Domain};
use crate::simulation::{Simulation, SimulationOutput};
use crate::tusdata::TaskCatalog;

/// Peak windows used when a behavior does not list its own.
pub fn default_peak_windows() -> Vec<Period> {
    vec![Period { start: 8 * 60, end: 13 * 60 }, Period { start: 18 * 60, end: 20 * 60 }]
}

pub fn validate_windows(windows: &[Period]) -> Result<()> {
    let mut sorted = windows.to_vec();
    sorted.sort_by_key(|p| p.start);
    if sorted.windows(2).any(|w| w[0].overlaps(&w[1])) {
        return Err(Error::validation("peak windows must not overlap"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CookingShift {
    pub windows: Vec<Period>,
    pub max_shift: u32,
    /// Eating PPs starting within this many minutes of a shifted cooking PP's
    /// end move with it.
    pub chain_minutes: u32,
    pub cooking_activity: String,
    pub eating_activity: String,
}

impl Default for CookingShift {
    fn default() -> Self {
        CookingShift {
            windows: default_peak_windows(),
            max_shift: 45,
            chain_minutes: 30,
            cooking_activity: "cooking".into(),
            eating_activity: "meal".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BehaviorKind {
    CookingShift(CookingShift),
    NoShowerPeak { windows: Vec<Period> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EcoBehavior {
    pub name: String,
    pub kind: BehaviorKind,
    /// Share of households applying the behavior.
    pub compliance: f64,
}

impl EcoBehavior {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.compliance) {
            return Err(Error::validation(format!("{}: compliance must be in [0, 1]", self.name)));
        }
        match &self.kind {
            BehaviorKind::CookingShift(c) => validate_windows(&c.windows),
            BehaviorKind::NoShowerPeak { windows } => validate_windows(windows),
        }
    }
}

/// `[[scenario]]` table as written in the run config.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorToml {
    pub kind: String,
    pub name: Option<String>,
    pub windows: Option<Vec<Period>>,
    pub max_shift: Option<u32>,
    pub chain_minutes: Option<u32>,
    pub cooking_activity: Option<String>,
    pub eating_activity: Option<String>,
    pub compliance: Option<f64>,
}

impl TryFrom<BehaviorToml> for EcoBehavior {
    type Error = Error;

    fn try_from(t: BehaviorToml) -> Result<Self> {
        let windows = t.windows.unwrap_or_else(default_peak_windows);
        let kind = match t.kind.as_str() {
            "cooking_shift" => {
                let d = CookingShift::default();
                BehaviorKind::CookingShift(CookingShift {
                    windows,
                    max_shift: t.max_shift.unwrap_or(d.max_shift),
                    chain_minutes: t.chain_minutes.unwrap_or(d.chain_minutes),
                    cooking_activity: t.cooking_activity.unwrap_or(d.cooking_activity),
                    eating_activity: t.eating_activity.unwrap_or(d.eating_activity),
                })
            }
            "no_shower_peak" => BehaviorKind::NoShowerPeak { windows },
            other => return Err(Error::UnknownBehavior(other.to_string())),
        };
        let b = EcoBehavior { name: t.name.unwrap_or(t.kind), kind, compliance: t.compliance.unwrap_or(1.0) };
        b.validate()?;
        Ok(b)
    }
}

/// Signed shift in minutes that moves `pp` out of `window` toward the nearer
/// edge, capped at `max_shift`. Ties go earlier.
pub fn shift_for(pp: Period, window: Period, max_shift: u32) -> i32 {
    if !pp.overlaps(&window) {
        return 0;
    }
    let earlier = pp.end - window.start;
    let later = window.end - pp.start;
    if earlier <= later {
        -(earlier.min(max_shift).min(pp.start) as i32)
    } else {
        later.min(max_shift).min(MINUTES_PER_DAY - pp.end) as i32
    }
}

fn moved(p: Period, shift: i32) -> Period {
    let start = (p.start as i32 + shift).clamp(0, (MINUTES_PER_DAY - p.len()) as i32) as u32;
    Period { start, end: start + p.len() }
}

/// One PP moved by a cooking shift.
#[derive(Debug, Clone, PartialEq)]
pub struct PpShift {
    pub task: String,
    pub type_key: String,
    pub day_type: String,
    pub from: Period,
    pub to: Period,
}

impl PpShift {
    pub fn minutes(&self) -> i32 {
        self.to.start as i32 - self.from.start as i32
    }
}

/// Moves every cooking PP that overlaps a window (the window with the largest
/// overlap decides) and the eating PPs chained to it. The whole PP moves
/// rigidly.
pub fn apply_cooking_shift(catalog: &TaskCatalog, behavior: &CookingShift) -> Result<(TaskCatalog, Vec<PpShift>)> {
    let mut specs = catalog.specs.clone();
    let mut shifts = Vec::new();
    let mut cook_moves = Vec::new();
    for s in specs.iter_mut().filter(|s| s.activity_code == behavior.cooking_activity) {
        let pp = s.preferred_period;
        let Some(window) = behavior.windows.iter().filter(|w| w.overlaps(&pp)).max_by_key(|w| w.overlap_len(&pp))
        else {
            continue;
        };
        let shift = shift_for(pp, *window, behavior.max_shift);
        if shift == 0 {
            continue;
        }
        s.preferred_period = moved(pp, shift);
        cook_moves.push((s.type_key.clone(), s.day_type, pp.end, shift));
        shifts.push(PpShift {
            task: s.task.clone(),
            type_key: s.type_key.clone(),
            day_type: s.day_type.as_str().into(),
            from: pp,
            to: s.preferred_period,
        });
    }
    for s in specs.iter_mut().filter(|s| s.activity_code == behavior.eating_activity) {
        let pp = s.preferred_period;
        let chained = cook_moves.iter().find(|(key, dt, cook_end, _)| {
            *key == s.type_key && *dt == s.day_type && pp.start.abs_diff(*cook_end) <= behavior.chain_minutes
        });
        if let Some(&(_, _, _, shift)) = chained {
            s.preferred_period = moved(pp, shift);
            shifts.push(PpShift {
                task: s.task.clone(),
                type_key: s.type_key.clone(),
                day_type: s.day_type.as_str().into(),
                from: pp,
                to: s.preferred_period,
            });
        }
    }
    Ok((TaskCatalog::new(specs)?, shifts))
}

/// Shower probability under a no-shower-peak behavior.
pub fn blocked_shower_probability(p: f64, minute_of_day: u32, windows: &[Period]) -> f64 {
    if windows.iter().any(|w| w.contains(minute_of_day)) {
        0.0
    } else {
        p
    }
}

/// Which households apply behavior number `index`; one draw per household.
pub fn compliance_mask(households: usize, compliance: f64, seed: u64, index: u64) -> Vec<bool> {
    (0..households as u64)
        .map(|h| {
            if compliance >= 1.0 {
                true
            } else if compliance <= 0.0 {
                false
            } else {
                rng::stream(seed, Domain::Compliance, &[index, h]).gen_bool(compliance)
            }
        })
        .collect()
}

/// A baseline simulation with the behavior applied to complying households.
pub fn scenario_simulation<'a>(
    baseline: &Simulation<'a>,
    catalog: &TaskCatalog,
    behavior: &EcoBehavior,
    index: u64,
) -> Result<(Simulation<'a>, Vec<PpShift>)> {
    behavior.validate()?;
    let mask = compliance_mask(baseline.population.households.len(), behavior.compliance, baseline.seed, index);
    match &behavior.kind {
        BehaviorKind::CookingShift(c) => {
            let (shifted, shifts) = apply_cooking_shift(catalog, c)?;
            Ok((baseline.clone().with_catalog_variant(&shifted, &mask)?, shifts))
        }
        BehaviorKind::NoShowerPeak { windows } => {
            Ok((baseline.clone().with_shower_block(windows.clone(), mask)?, Vec::new()))
        }
    }
}

/// Fraction of agents per report category and minute; `idle` is last.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityRateReport {
    pub categories: Vec<String>,
    pub minutes: u32,
    /// Minute-major: `fractions[minute * categories.len() + category]`.
    pub fractions: Vec<f64>,
}

impl ActivityRateReport {
    pub fn get(&self, minute: u32, category: usize) -> f64 {
        self.fractions[minute as usize * self.categories.len() + category]
    }

    pub fn category_index(&self, name: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == name)
    }

    /// Mean over days for each minute of the day.
    pub fn daily_profile(&self) -> Vec<f64> {
        let k = self.categories.len();
        let days = (self.minutes / MINUTES_PER_DAY).max(1);
        let mut out = vec![0.0; MINUTES_PER_DAY as usize * k];
        for m in 0..(days * MINUTES_PER_DAY).min(self.minutes) as usize {
            let d = m % MINUTES_PER_DAY as usize;
            for c in 0..k {
                out[d * k + c] += self.fractions[m * k + c];
            }
        }
        out.iter_mut().for_each(|v| *v /= f64::from(days));
        out
    }
}

pub const IDLE_CATEGORY: &str = "idle";

pub fn activity_rates(counts: &ActivityCounts, category_map: &BTreeMap<String, String>) -> Result<ActivityRateReport> {
    let table = &counts.activities;
    let mut unmapped = Vec::new();
    let mut categories: Vec<String> = category_map.values().cloned().collect();
    categories.sort();
    categories.dedup();
    categories.retain(|c| c != IDLE_CATEGORY);
    let idle_col = categories.len();
    let mut col = Vec::with_capacity(table.len());
    for id in 0..table.len() {
        let name = table.name(id as _);
        if id as u16 == IDLE {
            col.push(idle_col);
            continue;
        }
        match category_map.get(name) {
            Some(c) if c == IDLE_CATEGORY => col.push(idle_col),
            Some(c) => col.push(categories.iter().position(|x| x == c).expect("category listed")),
            None => {
                unmapped.push(name.to_string());
                col.push(idle_col);
            }
        }
    }
    if !unmapped.is_empty() {
        return Err(Error::UnmappedCodes(unmapped));
    }
    categories.push(IDLE_CATEGORY.into());
    let k = categories.len();
    let a = table.len();
    let agents = f64::from(counts.agents.max(1));
    let mut fractions = vec![0.0; counts.minutes as usize * k];
    for m in 0..counts.minutes as usize {
        for (id, &c) in col.iter().enumerate() {
            fractions[m * k + c] += f64::from(counts.counts[m * a + id]);
        }
        fractions[m * k..(m + 1) * k].iter_mut().for_each(|v| *v /= agents);
    }
    Ok(ActivityRateReport { categories, minutes: counts.minutes, fractions })
}

pub fn activity_rates_from_trace(
    trace: &ActivityTrace,
    category_map: &BTreeMap<String, String>,
) -> Result<ActivityRateReport> {
    activity_rates(&ActivityCounts::from_trace(trace), category_map)
}

/// Scenario minus baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct RunComparison {
    pub start: chrono::NaiveDateTime,
    pub windows: Vec<Period>,
    pub categories: Vec<String>,
    pub groups: Vec<String>,
    /// Per minute, W per dwelling.
    pub power_delta: Vec<f64>,
    /// `group_delta[g][minute]`.
    pub group_delta: Vec<Vec<f64>>,
    /// Minute-major, as in [`ActivityRateReport`].
    pub rate_delta: Vec<f64>,
    pub summary: ComparisonSummary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonSummary {
    /// Largest baseline-minus-scenario power inside the windows on the
    /// mean-day profile, W per dwelling.
    pub max_window_gain_w: f64,
    /// Energy change per dwelling over the horizon inside the windows.
    pub window_energy_delta_wh: f64,
    /// Energy change per dwelling outside the windows (positive: moved there).
    pub energy_displaced_wh: f64,
    /// Net energy removed per dwelling.
    pub energy_dropped_wh: f64,
}

fn in_windows(windows: &[Period], minute_of_day: u32) -> bool {
    windows.iter().any(|w| w.contains(minute_of_day))
}

pub fn compare_runs(
    baseline: &SimulationOutput,
    scenario: &SimulationOutput,
    windows: &[Period],
    category_map: &BTreeMap<String, String>,
) -> Result<RunComparison> {
    if baseline.start != scenario.start || baseline.minutes != scenario.minutes {
        return Err(Error::MismatchedRuns("horizons differ".into()));
    }
    if baseline.dwellings != scenario.dwellings || baseline.activity_counts.agents != scenario.activity_counts.agents {
        return Err(Error::MismatchedRuns("populations differ".into()));
    }
    if baseline.groups != scenario.groups {
        return Err(Error::MismatchedRuns("appliance groups differ".into()));
    }
    let rb = activity_rates(&baseline.activity_counts, category_map)?;
    let rs = activity_rates(&scenario.activity_counts, category_map)?;
    if rb.categories != rs.categories {
        return Err(Error::MismatchedRuns("activity categories differ".into()));
    }
    let power_delta: Vec<f64> = scenario.mean_load.iter().zip(&baseline.mean_load).map(|(s, b)| s - b).collect();
    let group_delta = scenario
        .group_load
        .iter()
        .zip(&baseline.group_load)
        .map(|(s, b)| s.iter().zip(b).map(|(x, y)| x - y).collect())
        .collect();
    let rate_delta = rs.fractions.iter().zip(&rb.fractions).map(|(s, b)| s - b).collect();

    let day = MINUTES_PER_DAY as usize;
    let days = (power_delta.len() / day).max(1);
    let mut profile = vec![0.0; day];
    for (m, d) in power_delta.iter().enumerate() {
        profile[m % day] += d / days as f64;
    }
    let max_window_gain_w =
        (0..day).filter(|&m| in_windows(windows, m as u32)).map(|m| -profile[m]).fold(0.0_f64, f64::max);
    let (mut inside, mut outside) = (0.0, 0.0);
    for (m, d) in power_delta.iter().enumerate() {
        if in_windows(windows, (m % day) as u32) {
            inside += d / 60.0;
        } else {
            outside += d / 60.0;
        }
    }
    Ok(RunComparison {
        start: baseline.start,
        windows: windows.to_vec(),
        categories: rb.categories,
        groups: baseline.groups.clone(),
        power_delta,
        group_delta,
        rate_delta,
        summary: ComparisonSummary {
            max_window_gain_w,
            window_energy_delta_wh: inside,
            energy_displaced_wh: outside,
            energy_dropped_wh: -(inside + outside),
        },
    })
}

impl RunComparison {
    /// Mean-day profile: `minute_of_day, power_delta_w, <group>_w..., <category>...`.
    pub fn write_profile_csv<W: Write>(&self, out: W) -> Result<()> {
        let day = MINUTES_PER_DAY as usize;
        let k = self.categories.len();
        let days = (self.power_delta.len() / day).max(1) as f64;
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["minute_of_day".to_string(), "power_delta_w".to_string()];
        header.extend(self.groups.iter().map(|g| format!("{g}_w")));
        header.extend(self.categories.iter().cloned());
        w.write_record(&header)?;
        for d in 0..day {
            let mut row = vec![format_hhmm(d as u32)];
            let mean = |series: &dyn Fn(usize) -> f64| {
                (d..self.power_delta.len()).step_by(day).map(series).sum::<f64>() / days
            };
            row.push(format!("{:.3}", mean(&|m| self.power_delta[m])));
            for g in &self.group_delta {
                row.push(format!("{:.3}", mean(&|m| g[m])));
            }
            for c in 0..k {
                row.push(format!("{:.6}", mean(&|m| self.rate_delta[m * k + c])));
            }
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::Io { path: "<delta profile>".into(), source: e })?;
        Ok(())
    }

    /// Per minute: `timestamp, power_delta_w, <group>_w...`.
    pub fn write_minutes_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["timestamp".to_string(), "power_delta_w".to_string()];
        header.extend(self.groups.iter().map(|g| format!("{g}_w")));
        w.write_record(&header)?;
        for (m, d) in self.power_delta.iter().enumerate() {
            let ts = self.start + chrono::Duration::minutes(m as i64);
            let mut row = vec![format_timestamp(ts), format!("{d:.3}")];
            row.extend(self.group_delta.iter().map(|g| format!("{:.3}", g[m])));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::Io { path: "<delta minutes>".into(), source: e })?;
        Ok(())
    }

    /// `metric, value, unit`.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let s = &self.summary;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["metric", "value", "unit"])?;
        for (name, v, unit) in [
            ("max_window_gain", s.max_window_gain_w, "W"),
            ("window_energy_delta", s.window_energy_delta_wh, "Wh"),
            ("energy_displaced", s.energy_displaced_wh, "Wh"),
            ("energy_dropped", s.energy_dropped_wh, "Wh"),
        ] {
            w.write_record([name, &format!("{v:.6}"), unit])?;
        }
        w.flush().map_err(|e| Error::Io { path: "<delta summary>".into(), source: e })?;
        Ok(())
    }
}

/// Category map from `(activity code, category)` pairs.
pub fn category_map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(a, c)| (a.to_string(), c.to_string())).collect()
}
