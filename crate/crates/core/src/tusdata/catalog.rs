//! Task catalog: extracted task specs, CSV round-trip and type lookup.
//!
//! CSV columns, in order: `task, activity_code, day_type, type_key, pp_start,
//! pp_end, min_duration, max_duration, freq_day, freq_week, collectivity,
//! w_good, w_bad, w_unknown, household_level, fallback`. Times are `HH:MM`
//! (`24:00` allowed as an end). `type_key` may be coarse (`F_50-64`, `F`, `*`);
//! a lookup for an individual picks, per task name, the most specific entry.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calendar::{format_hhmm, parse_hhmm, DayType, Period, Weather};
use crate::error::{Error, Result};
use crate::popsynth::parent_type_keys;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherFactors {
    pub good: f64,
    pub bad: f64,
    pub unknown: f64,
}

impl Default for WeatherFactors {
    fn default() -> Self {
        WeatherFactors { good: 1.0, bad: 1.0, unknown: 1.0 }
    }
}

impl WeatherFactors {
    pub fn factor(&self, w: Weather) -> f64 {
        match w {
            Weather::Good => self.good,
            Weather::Bad => self.bad,
            Weather::Unknown => self.unknown,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    /// Catalog-unique task name, usually the activity code or `code@slot`.
    pub task: String,
    pub activity_code: String,
    pub day_type: DayType,
    pub type_key: String,
    pub preferred_period: Period,
    pub min_duration: u32,
    pub max_duration: u32,
    pub frequency_per_day: f64,
    pub frequency_per_week: f64,
    pub collectivity: f64,
    pub weather_multipliers: WeatherFactors,
    pub household_level: bool,
    /// Coarser key the spec was derived from when data was sparse.
    pub fallback_from: Option<String>,
}

impl TaskSpec {
    pub fn validate(&self) -> Result<()> {
        let ctx = || format!("task `{}` ({}, {})", self.task, self.type_key, self.day_type);
        Period::new(self.preferred_period.start, self.preferred_period.end)
            .map_err(|e| Error::validation(format!("{}: {e}", ctx())))?;
        if self.min_duration == 0 || self.min_duration > self.max_duration {
            return Err(Error::validation(format!(
                "{}: need 0 < min_duration <= max_duration, got {}..{}",
                ctx(),
                self.min_duration,
                self.max_duration
            )));
        }
        if !(0.0..=1.0).contains(&self.collectivity) {
            return Err(Error::validation(format!("{}: collectivity {} not in [0,1]", ctx(), self.collectivity)));
        }
        let w = self.weather_multipliers;
        if !(w.good > 0.0 && w.bad > 0.0 && w.unknown > 0.0) {
            return Err(Error::validation(format!("{}: weather factors must be positive", ctx())));
        }
        if !(self.frequency_per_day >= 0.0 && self.frequency_per_week >= 0.0) {
            return Err(Error::validation(format!("{}: negative frequency", ctx())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TaskCatalog {
    pub specs: Vec<TaskSpec>,
}

impl TaskCatalog {
    pub fn new(specs: Vec<TaskSpec>) -> Result<Self> {
        for s in &specs {
            s.validate()?;
        }
        let mut seen = std::collections::HashSet::new();
        for s in &specs {
            if !seen.insert((s.task.as_str(), s.day_type, s.type_key.as_str())) {
                return Err(Error::validation(format!(
                    "duplicate catalog entry for task `{}` ({}, {})",
                    s.task, s.type_key, s.day_type
                )));
            }
        }
        Ok(TaskCatalog { specs })
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    /// Distinct activity codes in catalog order.
    pub fn activity_codes(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for s in &self.specs {
            if !out.contains(&s.activity_code) {
                out.push(s.activity_code.clone());
            }
        }
        out
    }

    /// Distinct task names in catalog order.
    pub fn task_names(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for s in &self.specs {
            if !out.contains(&s.task) {
                out.push(s.task.clone());
            }
        }
        out
    }

    /// Indices of the specs that apply to `type_key` on `day_type`: for every
    /// task name the entry with the most specific matching key, in catalog order.
    pub fn resolve(&self, type_key: &str, day_type: DayType) -> Vec<usize> {
        let levels = parent_type_keys(type_key);
        let mut best: HashMap<&str, (usize, usize)> = HashMap::new();
        for (i, s) in self.specs.iter().enumerate() {
            if s.day_type != day_type {
                continue;
            }
            if let Some(level) = levels.iter().position(|k| *k == s.type_key) {
                let e = best.entry(s.task.as_str()).or_insert((level, i));
                if level < e.0 {
                    *e = (level, i);
                }
            }
        }
        let mut out: Vec<usize> = best.into_values().map(|(_, i)| i).collect();
        out.sort_unstable();
        out
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CatalogRow {
    task: String,
    activity_code: String,
    day_type: DayType,
    type_key: String,
    pp_start: String,
    pp_end: String,
    min_duration: u32,
    max_duration: u32,
    freq_day: f64,
    freq_week: f64,
    collectivity: f64,
    w_good: f64,
    w_bad: f64,
    w_unknown: f64,
    household_level: bool,
    fallback: String,
}

pub fn write_catalog<W: std::io::Write>(catalog: &TaskCatalog, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in &catalog.specs {
        w.serialize(CatalogRow {
            task: s.task.clone(),
            activity_code: s.activity_code.clone(),
            day_type: s.day_type,
            type_key: s.type_key.clone(),
            pp_start: format_hhmm(s.preferred_period.start),
            pp_end: format_hhmm(s.preferred_period.end),
            min_duration: s.min_duration,
            max_duration: s.max_duration,
            freq_day: s.frequency_per_day,
            freq_week: s.frequency_per_week,
            collectivity: s.collectivity,
            w_good: s.weather_multipliers.good,
            w_bad: s.weather_multipliers.bad,
            w_unknown: s.weather_multipliers.unknown,
            household_level: s.household_level,
            fallback: s.fallback_from.clone().unwrap_or_default(),
        })?;
    }
    w.flush().map_err(|e| Error::Io { path: "<catalog>".into(), source: e })?;
    Ok(())
}

pub fn read_catalog<R: std::io::Read>(input: R) -> Result<TaskCatalog> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut specs = Vec::new();
    for row in rdr.deserialize::<CatalogRow>() {
        let r = row?;
        let row_no = specs.len() as u64 + 2;
        let row_err = |e: Error| Error::Schema { row: row_no, message: e.to_string() };
        specs.push(TaskSpec {
            preferred_period: Period::new(
                parse_hhmm(&r.pp_start).map_err(row_err)?,
                parse_hhmm(&r.pp_end).map_err(row_err)?,
            )
            .map_err(row_err)?,
            task: r.task,
            activity_code: r.activity_code,
            day_type: r.day_type,
            type_key: r.type_key,
            min_duration: r.min_duration,
            max_duration: r.max_duration,
            frequency_per_day: r.freq_day,
            frequency_per_week: r.freq_week,
            collectivity: r.collectivity,
            weather_multipliers: WeatherFactors { good: r.w_good, bad: r.w_bad, unknown: r.w_unknown },
            household_level: r.household_level,
            fallback_from: (!r.fallback.is_empty()).then_some(r.fallback),
        });
    }
    TaskCatalog::new(specs)
}

pub fn load_catalog(path: &Path) -> Result<TaskCatalog> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_catalog(file).map_err(|e| e.in_file(path))
}

impl TaskCatalog {
    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        write_catalog(self, &mut buf)?;
        Ok(String::from_utf8(buf).expect("csv is utf-8"))
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        read_catalog(text.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(task: &str, key: &str, start: u32, end: u32) -> TaskSpec {
        TaskSpec {
            task: task.into(),
            activity_code: task.into(),
            day_type: DayType::Weekday,
            type_key: key.into(),
            preferred_period: Period { start, end },
            min_duration: 10,
            max_duration: 60,
            frequency_per_day: 1.0,
            frequency_per_week: 7.0,
            collectivity: 0.1,
            weather_multipliers: WeatherFactors::default(),
            household_level: false,
            fallback_from: None,
        }
    }

    #[test]
    fn csv_round_trip() {
        let mut b = spec("work", "F_50-64_active", 360, 1190);
        b.fallback_from = Some("F_50-64".into());
        b.weather_multipliers.good = 1.2;
        let cat = TaskCatalog::new(vec![spec("tv", "*", 1200, 1440), b]).unwrap();
        let text = cat.to_csv_string().unwrap();
        assert!(text.starts_with("task,activity_code,day_type,type_key,pp_start,pp_end,"));
        assert!(text.contains("24:00"));
        assert_eq!(TaskCatalog::from_csv_str(&text).unwrap(), cat);
    }

    #[test]
    fn resolve_prefers_specific_key() {
        let cat = TaskCatalog::new(vec![
            spec("tv", "*", 1200, 1440),
            spec("work", "*", 480, 1080),
            spec("work", "F_50-64_active", 360, 1190),
            spec("nap", "M", 780, 900),
        ])
        .unwrap();
        let got = cat.resolve("F_50-64_active", DayType::Weekday);
        assert_eq!(got, vec![0, 2]);
        assert_eq!(cat.resolve("M_25-49_active", DayType::Weekday), vec![0, 1, 3]);
        assert!(cat.resolve("M_25-49_active", DayType::Sunday).is_empty());
    }

    #[test]
    fn invalid_spec_rejected() {
        let mut s = spec("x", "*", 10, 20);
        s.min_duration = 0;
        assert!(TaskCatalog::new(vec![s]).is_err());
    }
}
