//! Time-use diaries and the task catalog derived from them.

mod assign;
mod catalog;
mod extract;
mod parse;

pub use assign::{assignment_from, generate_daily_assignment, stochastic_round, TaskTemplate};
pub use catalog::{load_catalog, write_catalog, TaskCatalog, TaskSpec, WeatherFactors};
pub use extract::{
    collectivity_of, compute_collectivity, compute_weather_multipliers, extract_episodes, extract_task_spec,
    symmetric_band, Band, CollectivityWeighting, Episode, ExtractConfig, Extractor, TaskSelector,
};
pub use parse::{parse_tus, parse_tus_reader, write_tus};

use serde::{Deserialize, Serialize};

use crate::calendar::{DayType, Weather};
use crate::error::{Error, Result};
use crate::popsynth::{individual_type_key, AgeBands, Employment};

/// Diary resolution.
pub const SLOT_MINUTES: u32 = 10;
pub const SLOTS_PER_DAY: usize = 144;

/// Share of observed data a band must cover, in percent, `0 < X <= 100`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct VariabilityParam(f64);

impl VariabilityParam {
    pub fn new(percent: f64) -> Result<Self> {
        if percent > 0.0 && percent <= 100.0 {
            Ok(VariabilityParam(percent))
        } else {
            Err(Error::validation(format!("variability X = {percent} must be in (0, 100]")))
        }
    }

    pub fn percent(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for VariabilityParam {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        VariabilityParam::new(v)
    }
}

impl From<VariabilityParam> for f64 {
    fn from(v: VariabilityParam) -> f64 {
        v.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiarySlot {
    pub activity: String,
    pub with_others: bool,
}

/// One respondent's diary day: 144 ten-minute slots from 00:00.
#[derive(Debug, Clone, PartialEq)]
pub struct TusRecord {
    pub respondent_id: String,
    pub diary_day: u32,
    pub gender: String,
    pub age: u32,
    pub employment: Employment,
    pub day_type: DayType,
    pub weather: Weather,
    pub episodes: Vec<DiarySlot>,
}

impl TusRecord {
    pub fn type_key(&self, bands: &AgeBands) -> String {
        individual_type_key(&self.gender, self.age, self.employment, bands)
    }
}
