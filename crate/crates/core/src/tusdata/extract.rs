//! Episode extraction and task-spec derivation.
//!
//! Bands are the smallest symmetric interval `[mean - d, mean + d]`, with `d` a
//! multiple of the diary resolution, that contains at least X% of the observed
//! values; the band is then clipped to the observed range so that X = 100
//! yields exactly `[min, max]`. The preferred period takes the lower bound of
//! the start-time band and the upper bound of the end-time band.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::catalog::{TaskSpec, WeatherFactors};
use super::{TusRecord, VariabilityParam, SLOT_MINUTES};
use crate::calendar::{DayType, Period, Weather, MINUTES_PER_DAY};
use crate::error::{Error, Result};
use crate::popsynth::{parent_type_keys, type_key_matches, AgeBands};

/// A maximal run of one activity in a diary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Episode {
    pub start: u32,
    pub duration: u32,
    pub with_others_minutes: u32,
    pub weather: Weather,
}

impl Episode {
    pub fn end(&self) -> u32 {
        self.start + self.duration
    }

    /// Counted as collective when at least half of it was spent with others.
    pub fn with_others(&self) -> bool {
        self.with_others_minutes * 2 >= self.duration
    }
}

pub fn extract_episodes(record: &TusRecord, activity_code: &str) -> Vec<Episode> {
    let mut out = Vec::new();
    let mut current: Option<Episode> = None;
    for (i, slot) in record.episodes.iter().enumerate() {
        if slot.activity == activity_code {
            let ep = current.get_or_insert(Episode {
                start: i as u32 * SLOT_MINUTES,
                duration: 0,
                with_others_minutes: 0,
                weather: record.weather,
            });
            ep.duration += SLOT_MINUTES;
            if slot.with_others {
                ep.with_others_minutes += SLOT_MINUTES;
            }
        } else if let Some(ep) = current.take() {
            out.push(ep);
        }
    }
    out.extend(current);
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub mean: f64,
    /// Half-width before clipping, a multiple of the grid.
    pub delta: u32,
    pub lower: f64,
    pub upper: f64,
}

/// Minimal grid-aligned symmetric band around the mean covering >= X% of `values`.
/// Comparisons run in exact integer arithmetic: `|n*v - sum| <= n*delta`.
pub fn symmetric_band(values: &[u32], x: VariabilityParam, grid: u32) -> Option<Band> {
    if values.is_empty() || grid == 0 {
        return None;
    }
    let n = values.len() as u64;
    let sum: u64 = values.iter().map(|&v| u64::from(v)).sum();
    let mut deviations: Vec<u64> = values.iter().map(|&v| (n * u64::from(v)).abs_diff(sum)).collect();
    deviations.sort_unstable();
    let needed = (1..=values.len())
        .find(|&k| k as f64 * 100.0 >= x.percent() * n as f64)
        .unwrap_or(values.len());
    let dev = deviations[needed - 1];
    let step = n * u64::from(grid);
    let delta = (dev.div_ceil(step) * u64::from(grid)) as u32;

    let mean = sum as f64 / n as f64;
    let min = *values.iter().min().expect("nonempty") as f64;
    let max = *values.iter().max().expect("nonempty") as f64;
    Some(Band {
        mean,
        delta,
        lower: (mean - f64::from(delta)).max(min),
        upper: (mean + f64::from(delta)).min(max),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CollectivityWeighting {
    /// Share of lived minutes spent with others.
    #[default]
    Duration,
    /// Share of episodes mostly spent with others.
    Count,
}

pub fn collectivity_of(episodes: &[Episode], weighting: CollectivityWeighting) -> Option<f64> {
    if episodes.is_empty() {
        return None;
    }
    Some(match weighting {
        CollectivityWeighting::Duration => {
            let total: u32 = episodes.iter().map(|e| e.duration).sum();
            let with: u32 = episodes.iter().map(|e| e.with_others_minutes).sum();
            f64::from(with) / f64::from(total)
        }
        CollectivityWeighting::Count => {
            episodes.iter().filter(|e| e.with_others()).count() as f64 / episodes.len() as f64
        }
    })
}

/// Duration-weighted share of `activity_code` time spent with others.
pub fn compute_collectivity(records: &[TusRecord], activity_code: &str) -> Result<f64> {
    let eps: Vec<Episode> = records.iter().flat_map(|r| extract_episodes(r, activity_code)).collect();
    collectivity_of(&eps, CollectivityWeighting::Duration)
        .ok_or_else(|| Error::NoData(format!("no `{activity_code}` episodes")))
}

fn weather_factors_of(activity: &str, episodes: &[Episode]) -> Result<WeatherFactors> {
    if episodes.is_empty() {
        return Err(Error::NoData(format!("no `{activity}` episodes")));
    }
    let mut by: BTreeMap<Weather, (u64, u64)> = BTreeMap::new();
    for e in episodes {
        let s = by.entry(e.weather).or_default();
        s.0 += u64::from(e.duration);
        s.1 += 1;
    }
    if by.len() < 2 {
        return Err(Error::SingleWeatherCategory(activity.to_string()));
    }
    let total: u64 = by.values().map(|s| s.0).sum();
    let overall = total as f64 / episodes.len() as f64;
    let factor = |w: Weather| by.get(&w).map(|&(d, c)| d as f64 / c as f64 / overall).unwrap_or(1.0);
    Ok(WeatherFactors { good: factor(Weather::Good), bad: factor(Weather::Bad), unknown: factor(Weather::Unknown) })
}

/// `factor(w) = mean duration under w / overall mean duration`.
pub fn compute_weather_multipliers(records: &[TusRecord], activity_code: &str) -> Result<WeatherFactors> {
    let eps: Vec<Episode> = records.iter().flat_map(|r| extract_episodes(r, activity_code)).collect();
    weather_factors_of(activity_code, &eps)
}

/// What to extract: an activity, optionally restricted to episodes starting in
/// a time window (meal slots such as `cooking@dinner`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSelector {
    pub task: String,
    pub activity: String,
    #[serde(default)]
    pub window: Option<Period>,
}

impl TaskSelector {
    pub fn activity(code: &str) -> Self {
        TaskSelector { task: code.to_string(), activity: code.to_string(), window: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractConfig {
    pub variability: VariabilityParam,
    pub min_episodes: usize,
    pub weighting: CollectivityWeighting,
    pub household_level: Vec<String>,
    pub age_bands: AgeBands,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            variability: VariabilityParam::new(90.0).expect("valid"),
            min_episodes: 5,
            weighting: CollectivityWeighting::Duration,
            household_level: vec!["cooking".into(), "laundry".into()],
            age_bands: AgeBands::default(),
        }
    }
}

pub struct Extractor<'a> {
    records: &'a [TusRecord],
    keys: Vec<String>,
    config: ExtractConfig,
}

impl<'a> Extractor<'a> {
    pub fn new(records: &'a [TusRecord], config: ExtractConfig) -> Self {
        let keys = records.iter().map(|r| r.type_key(&config.age_bands)).collect();
        Extractor { records, keys, config }
    }

    pub fn config(&self) -> &ExtractConfig {
        &self.config
    }

    /// Distinct full type keys present in the data, sorted.
    pub fn type_keys(&self) -> Vec<String> {
        let mut k = self.keys.clone();
        k.sort();
        k.dedup();
        k
    }

    fn matching(&self, day_type: DayType, type_key: &str) -> Vec<&'a TusRecord> {
        self.records
            .iter()
            .zip(&self.keys)
            .filter(|(r, k)| r.day_type == day_type && type_key_matches(type_key, k))
            .map(|(r, _)| r)
            .collect()
    }

    /// Strict extraction at exactly `type_key` (which may be a coarse key).
    pub fn extract(&self, selector: &TaskSelector, day_type: DayType, type_key: &str) -> Result<TaskSpec> {
        let records = self.matching(day_type, type_key);
        let episodes: Vec<Episode> = records
            .iter()
            .flat_map(|r| extract_episodes(r, &selector.activity))
            .filter(|e| selector.window.map_or(true, |w| w.contains(e.start)))
            .collect();
        if episodes.len() < self.config.min_episodes.max(1) {
            return Err(Error::InsufficientData {
                activity: selector.task.clone(),
                type_key: type_key.to_string(),
                day_type: day_type.to_string(),
                found: episodes.len(),
                needed: self.config.min_episodes.max(1),
            });
        }
        let x = self.config.variability;
        let durations: Vec<u32> = episodes.iter().map(|e| e.duration).collect();
        let starts: Vec<u32> = episodes.iter().map(|e| e.start).collect();
        let ends: Vec<u32> = episodes.iter().map(Episode::end).collect();
        let d = symmetric_band(&durations, x, SLOT_MINUTES).expect("nonempty");
        let s = symmetric_band(&starts, x, SLOT_MINUTES).expect("nonempty");
        let e = symmetric_band(&ends, x, SLOT_MINUTES).expect("nonempty");

        let pp_start = (s.lower.floor() as u32).min(MINUTES_PER_DAY - 1);
        let pp_end = (e.upper.ceil() as u32).clamp(pp_start + 1, MINUTES_PER_DAY);
        let min_duration = (d.lower.floor() as u32).max(1);
        let max_duration = (d.upper.ceil() as u32).max(min_duration);
        let per_day = episodes.len() as f64 / records.len() as f64;

        Ok(TaskSpec {
            task: selector.task.clone(),
            activity_code: selector.activity.clone(),
            day_type,
            type_key: type_key.to_string(),
            preferred_period: Period { start: pp_start, end: pp_end },
            min_duration,
            max_duration,
            frequency_per_day: per_day,
            frequency_per_week: per_day * 7.0,
            collectivity: collectivity_of(&episodes, self.config.weighting).expect("nonempty"),
            weather_multipliers: weather_factors_of(&selector.activity, &episodes).unwrap_or_default(),
            household_level: self.config.household_level.contains(&selector.activity),
            fallback_from: None,
        })
    }

    /// Extraction walking up the type hierarchy when data is sparse. The
    /// returned spec keeps the requested key and records the parent it came from.
    pub fn extract_with_fallback(
        &self,
        selector: &TaskSelector,
        day_type: DayType,
        type_key: &str,
    ) -> Result<TaskSpec> {
        let mut last_err = None;
        for (level, key) in parent_type_keys(type_key).iter().enumerate() {
            match self.extract(selector, day_type, key) {
                Ok(mut spec) => {
                    spec.type_key = type_key.to_string();
                    if level > 0 {
                        spec.fallback_from = Some(key.clone());
                        // Bands come from the parent; frequency stays with the
                        // requested type when it has diaries of its own.
                        let own = self.matching(day_type, type_key);
                        if !own.is_empty() {
                            let n = own
                                .iter()
                                .flat_map(|r| extract_episodes(r, &selector.activity))
                                .filter(|e| selector.window.map_or(true, |w| w.contains(e.start)))
                                .count();
                            if n == 0 {
                                return Err(Error::NoData(format!(
                                    "`{}` never observed for {type_key} on {day_type}",
                                    selector.task
                                )));
                            }
                            spec.frequency_per_day = n as f64 / own.len() as f64;
                            spec.frequency_per_week = spec.frequency_per_day * 7.0;
                        }
                    }
                    return Ok(spec);
                }
                Err(e @ Error::InsufficientData { .. }) => last_err = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last_err.expect("at least one level"))
    }

    /// Builds a full catalog: every selector for every type key and day type
    /// with any data. Cells with no data anywhere in the hierarchy are skipped.
    pub fn build_catalog(&self, selectors: &[TaskSelector]) -> Vec<TaskSpec> {
        self.build_catalog_for(selectors, &[])
    }

    /// As [`Extractor::build_catalog`], also covering `extra_keys` (types of
    /// the simulated population absent from the diaries).
    pub fn build_catalog_for(&self, selectors: &[TaskSelector], extra_keys: &[String]) -> Vec<TaskSpec> {
        let mut keys = self.type_keys();
        keys.extend(extra_keys.iter().cloned());
        keys.sort();
        keys.dedup();
        let mut out = Vec::new();
        for key in keys {
            for day_type in DayType::ALL {
                for sel in selectors {
                    if let Ok(spec) = self.extract_with_fallback(sel, day_type, &key) {
                        out.push(spec);
                    }
                }
            }
        }
        out
    }
}

/// Extraction with default settings (`min_episodes = 5`, duration weighting).
pub fn extract_task_spec(
    records: &[TusRecord],
    activity_code: &str,
    day_type: DayType,
    type_key: &str,
    x: VariabilityParam,
) -> Result<TaskSpec> {
    let config = ExtractConfig { variability: x, ..ExtractConfig::default() };
    Extractor::new(records, config).extract_with_fallback(&TaskSelector::activity(activity_code), day_type, type_key)
}
