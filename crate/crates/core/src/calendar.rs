//! Simulation clock, day typing, seasons, weather and the calendar overlay.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Weekday};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Domain};

pub const MINUTES_PER_DAY: u32 = 1440;

/// Day number of the Monday starting `date`'s week; identifies the week.
pub fn week_ordinal(date: NaiveDate) -> i32 {
    date.num_days_from_ce() - date.weekday().num_days_from_monday() as i32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DayType {
    Weekday,
    Saturday,
    Sunday,
}

impl DayType {
    pub const ALL: [DayType; 3] = [DayType::Weekday, DayType::Saturday, DayType::Sunday];

    pub fn of(weekday: Weekday) -> Self {
        match weekday {
            Weekday::Sat => DayType::Saturday,
            Weekday::Sun => DayType::Sunday,
            _ => DayType::Weekday,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DayType::Weekday => "weekday",
            DayType::Saturday => "saturday",
            DayType::Sunday => "sunday",
        }
    }
}

impl fmt::Display for DayType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DayType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "weekday" => Ok(DayType::Weekday),
            "saturday" => Ok(DayType::Saturday),
            "sunday" => Ok(DayType::Sunday),
            other => Err(Error::parse(format!("unknown day type `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weather {
    Good,
    Bad,
    Unknown,
}

impl Weather {
    pub const ALL: [Weather; 3] = [Weather::Good, Weather::Bad, Weather::Unknown];

    pub fn as_str(self) -> &'static str {
        match self {
            Weather::Good => "good",
            Weather::Bad => "bad",
            Weather::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Weather {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Weather {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "good" => Ok(Weather::Good),
            "bad" => Ok(Weather::Bad),
            "unknown" | "" => Ok(Weather::Unknown),
            other => Err(Error::parse(format!("unknown weather `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Season {
    Winter,
    Spring,
    Summer,
    Autumn,
}

impl Season {
    pub const ALL: [Season; 4] = [Season::Winter, Season::Spring, Season::Summer, Season::Autumn];

    pub fn of(date: NaiveDate) -> Self {
        match date.month() {
            12 | 1 | 2 => Season::Winter,
            3..=5 => Season::Spring,
            6..=8 => Season::Summer,
            _ => Season::Autumn,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Season::Winter => "winter",
            Season::Spring => "spring",
            Season::Summer => "summer",
            Season::Autumn => "autumn",
        }
    }
}

impl FromStr for Season {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "winter" => Ok(Season::Winter),
            "spring" => Ok(Season::Spring),
            "summer" => Ok(Season::Summer),
            "autumn" | "fall" => Ok(Season::Autumn),
            other => Err(Error::parse(format!("unknown season `{other}`"))),
        }
    }
}

/// Half-open time-of-day interval `[start, end)` in minutes, `0 <= start < end <= 1440`.
/// Serialized as `HH:MM-HH:MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Period {
    pub start: u32,
    pub end: u32,
}

impl Period {
    pub fn new(start: u32, end: u32) -> Result<Self> {
        if start >= end || end > MINUTES_PER_DAY {
            return Err(Error::validation(format!(
                "invalid period {start}..{end}: need 0 <= start < end <= 1440"
            )));
        }
        Ok(Period { start, end })
    }

    #[inline]
    pub fn contains(&self, minute_of_day: u32) -> bool {
        minute_of_day >= self.start && minute_of_day < self.end
    }

    pub fn len(&self) -> u32 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, other: &Period) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn overlap_len(&self, other: &Period) -> u32 {
        let lo = self.start.max(other.start);
        let hi = self.end.min(other.end);
        hi.saturating_sub(lo)
    }

    /// Parses `HH:MM-HH:MM`; `24:00` is accepted as an end.
    pub fn parse(text: &str) -> Result<Self> {
        let (a, b) = text
            .split_once('-')
            .ok_or_else(|| Error::parse(format!("period `{text}` is not HH:MM-HH:MM")))?;
        Period::new(parse_hhmm(a)?, parse_hhmm(b)?)
    }
}

impl TryFrom<String> for Period {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        Period::parse(&s)
    }
}

impl From<Period> for String {
    fn from(p: Period) -> String {
        p.to_string()
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", format_hhmm(self.start), format_hhmm(self.end))
    }
}

pub fn parse_hhmm(text: &str) -> Result<u32> {
    let text = text.trim();
    let (h, m) = text
        .split_once(':')
        .ok_or_else(|| Error::parse(format!("time `{text}` is not HH:MM")))?;
    let h: u32 = h.parse().map_err(|_| Error::parse(format!("bad hour in `{text}`")))?;
    let m: u32 = m.parse().map_err(|_| Error::parse(format!("bad minute in `{text}`")))?;
    if m >= 60 || h * 60 + m > MINUTES_PER_DAY {
        return Err(Error::parse(format!("time `{text}` out of range")));
    }
    Ok(h * 60 + m)
}

pub fn format_hhmm(minute: u32) -> String {
    format!("{:02}:{:02}", minute / 60, minute % 60)
}

/// One simulated calendar day.
#[derive(Debug, Clone, PartialEq)]
pub struct DayInfo {
    pub date: NaiveDate,
    pub day_type: DayType,
    pub season: Season,
    pub weather: Weather,
    pub holiday: bool,
    pub suppress: Vec<String>,
    pub inject: Vec<String>,
}

impl DayInfo {
    pub fn weekday(&self) -> Weekday {
        self.date.weekday()
    }
}

/// Absolute minute since simulation start; advances exactly one minute per tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimulationClock {
    pub minute: u32,
}

impl SimulationClock {
    pub fn new(minute: u32) -> Self {
        SimulationClock { minute }
    }

    #[inline]
    pub fn minute_of_day(&self) -> u32 {
        self.minute % MINUTES_PER_DAY
    }

    #[inline]
    pub fn day_index(&self) -> u32 {
        self.minute / MINUTES_PER_DAY
    }

    #[inline]
    pub fn is_midnight(&self) -> bool {
        self.minute_of_day() == 0
    }

    #[inline]
    pub fn tick(&mut self) {
        self.minute += 1;
    }

    pub fn minutes_left_in_day(&self) -> u32 {
        MINUTES_PER_DAY - self.minute_of_day()
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlayDay {
    pub date: NaiveDate,
    #[serde(default)]
    pub day_type: Option<DayType>,
    #[serde(default)]
    pub weather: Option<Weather>,
    #[serde(default)]
    pub holiday: bool,
    #[serde(default)]
    pub suppress: Vec<String>,
    #[serde(default)]
    pub inject: Vec<String>,
}

/// Calendar/weather overlay config. Weather is drawn per day from the seasonal
/// good-weather probability unless a `[[day]]` entry pins it.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalendarOverlay {
    #[serde(default = "default_good_weather")]
    pub good_weather: BTreeMap<Season, f64>,
    #[serde(default, rename = "day")]
    pub days: Vec<OverlayDay>,
}

fn default_good_weather() -> BTreeMap<Season, f64> {
    BTreeMap::from([
        (Season::Winter, 0.3),
        (Season::Spring, 0.5),
        (Season::Summer, 0.7),
        (Season::Autumn, 0.4),
    ])
}

impl Default for CalendarOverlay {
    fn default() -> Self {
        CalendarOverlay {
            good_weather: default_good_weather(),
            days: Vec::new(),
        }
    }
}

impl CalendarOverlay {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| e.in_file(path))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let overlay: CalendarOverlay = toml::from_str(text).map_err(|e| crate::error::toml_error(text, e))?;
        for (season, p) in &overlay.good_weather {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::validation(format!(
                    "good_weather.{} = {p} is not a probability",
                    season.as_str()
                )));
            }
        }
        Ok(overlay)
    }
}

/// The day table shared by every household of a run.
#[derive(Debug, Clone)]
pub struct Calendar {
    pub start: NaiveDate,
    pub days: Vec<DayInfo>,
}

impl Calendar {
    pub fn build(start: NaiveDate, horizon_days: u32, overlay: &CalendarOverlay, seed: u64) -> Self {
        let pinned: BTreeMap<NaiveDate, &OverlayDay> = overlay.days.iter().map(|d| (d.date, d)).collect();
        let days = (0..horizon_days)
            .map(|i| {
                let date = start + Duration::days(i64::from(i));
                let season = Season::of(date);
                let mut rng = rng::stream(seed, Domain::Weather, &[date.num_days_from_ce() as u64]);
                let p_good = overlay.good_weather.get(&season).copied().unwrap_or(0.5);
                let drawn = if rng.gen_bool(p_good) { Weather::Good } else { Weather::Bad };
                let mut info = DayInfo {
                    date,
                    day_type: DayType::of(date.weekday()),
                    season,
                    weather: drawn,
                    holiday: false,
                    suppress: Vec::new(),
                    inject: Vec::new(),
                };
                if let Some(o) = pinned.get(&date) {
                    if let Some(dt) = o.day_type {
                        info.day_type = dt;
                    }
                    if let Some(w) = o.weather {
                        info.weather = w;
                    }
                    info.holiday = o.holiday;
                    info.suppress = o.suppress.clone();
                    info.inject = o.inject.clone();
                }
                info
            })
            .collect();
        Calendar { start, days }
    }

    pub fn horizon_days(&self) -> u32 {
        self.days.len() as u32
    }

    pub fn horizon_minutes(&self) -> u32 {
        self.horizon_days() * MINUTES_PER_DAY
    }

    pub fn day(&self, clock: SimulationClock) -> &DayInfo {
        &self.days[clock.day_index() as usize]
    }

    pub fn timestamp(&self, clock: SimulationClock) -> NaiveDateTime {
        self.start.and_hms_opt(0, 0, 0).expect("midnight") + Duration::minutes(i64::from(clock.minute))
    }
}

pub fn format_timestamp(ts: NaiveDateTime) -> String {
    ts.format("%Y-%m-%dT%H:%M").to_string()
}

pub fn parse_timestamp(text: &str) -> Result<NaiveDateTime> {
    NaiveDateTime::parse_from_str(text.trim(), "%Y-%m-%dT%H:%M")
        .map_err(|e| Error::parse(format!("bad timestamp `{text}`: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn period_parse_and_contains() {
        let p = Period::parse("18:00-20:00").unwrap();
        assert_eq!(p, Period { start: 1080, end: 1200 });
        assert!(p.contains(1080));
        assert!(!p.contains(1200));
        assert_eq!(Period::parse("22:00-24:00").unwrap().end, 1440);
        assert!(Period::parse("20:00-18:00").is_err());
        assert_eq!(p.to_string(), "18:00-20:00");
    }

    #[test]
    fn clock_derivations() {
        let c = SimulationClock::new(1440 * 3 + 125);
        assert_eq!(c.day_index(), 3);
        assert_eq!(c.minute_of_day(), 125);
        assert_eq!(c.minutes_left_in_day(), 1315);
    }

    #[test]
    fn calendar_day_types_and_overlay() {
        let start = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(); // Monday
        let overlay = CalendarOverlay::from_toml(
            r#"
            [[day]]
            date = "2024-01-03"
            day_type = "sunday"
            weather = "good"
            suppress = ["work"]
            "#,
        )
        .unwrap();
        let cal = Calendar::build(start, 7, &overlay, 1);
        assert_eq!(cal.days[0].day_type, DayType::Weekday);
        assert_eq!(cal.days[2].day_type, DayType::Sunday);
        assert_eq!(cal.days[2].weather, Weather::Good);
        assert_eq!(cal.days[2].suppress, vec!["work".to_string()]);
        assert_eq!(cal.days[5].day_type, DayType::Saturday);
        assert_eq!(cal.days[6].day_type, DayType::Sunday);
        assert_eq!(cal.days[0].season, Season::Winter);
        // Weather is a pure function of (seed, date).
        let again = Calendar::build(start, 7, &overlay, 1);
        assert_eq!(cal.days, again.days);
    }
}
