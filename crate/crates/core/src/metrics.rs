//! Load-curve comparison: point errors, directional accuracy, discrete
//! Fréchet distance and the 336-slot average week.

use std::io::Write;

use chrono::{Datelike, Duration, NaiveDate};

use crate::appliance::LoadCurve;
use crate::error::{Error, Result};

/// Half-hour slots in a week.
pub const WEEK_SLOTS: usize = 7 * 48;
const SLOT_MINUTES: u32 = 30;

fn same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

pub fn mae(a: &[f64], b: &[f64]) -> Result<f64> {
    same_len(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

pub fn rmse(a: &[f64], b: &[f64]) -> Result<f64> {
    same_len(a, b)?;
    Ok((a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt())
}

/// Mean of `|a - b| / |b|`; `b` is the reference and must not contain 0.
pub fn mape(a: &[f64], b: &[f64]) -> Result<f64> {
    same_len(a, b)?;
    if let Some(index) = b.iter().position(|&y| y == 0.0) {
        return Err(Error::ZeroReference { index });
    }
    Ok(a.iter().zip(b).map(|(x, y)| ((x - y) / y).abs()).sum::<f64>() / a.len() as f64)
}

/// `sum |a - b| / sum |b|`.
pub fn wape(a: &[f64], b: &[f64]) -> Result<f64> {
    same_len(a, b)?;
    let den: f64 = b.iter().map(|y| y.abs()).sum();
    if den == 0.0 {
        return Err(Error::ZeroReference { index: 0 });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / den)
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Share of steps where both series move the same way; a flat step only
/// matches a flat step.
pub fn mda(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.len() < 2 {
        return Err(Error::TooShort { needed: 2, got: a.len() });
    }
    let hits = (1..a.len()).filter(|&t| sign(a[t] - a[t - 1]) == sign(b[t] - b[t - 1])).count();
    Ok(hits as f64 / (a.len() - 1) as f64)
}

/// Discrete Fréchet distance between two series ordered by index, with
/// point distance `|a_i - b_j|` in watts.
pub fn frechet_discrete(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput);
    }
    let m = b.len();
    let mut prev = vec![0.0; m];
    let mut cur = vec![0.0; m];
    for (i, &x) in a.iter().enumerate() {
        for j in 0..m {
            let d = (x - b[j]).abs();
            cur[j] = match (i, j) {
                (0, 0) => d,
                (0, _) => d.max(cur[j - 1]),
                (_, 0) => d.max(prev[0]),
                _ => d.max(prev[j].min(prev[j - 1]).min(cur[j - 1])),
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m - 1])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub mae: f64,
    pub rmse: f64,
    pub mape: f64,
    pub wape: f64,
    pub mda: f64,
    pub frechet: f64,
}

/// All six metrics with `reference` as the ground truth.
pub fn compare(model: &[f64], reference: &[f64]) -> Result<MetricReport> {
    Ok(MetricReport {
        mae: mae(model, reference)?,
        rmse: rmse(model, reference)?,
        mape: mape(model, reference)?,
        wape: wape(model, reference)?,
        mda: mda(model, reference)?,
        frechet: frechet_discrete(model, reference)?,
    })
}

impl MetricReport {
    pub fn rows(&self) -> [(&'static str, f64, &'static str); 6] {
        [
            ("mae", self.mae, "W"),
            ("rmse", self.rmse, "W"),
            ("mape", self.mape, "fraction"),
            ("wape", self.wape, "fraction"),
            ("mda", self.mda, "fraction"),
            ("frechet", self.frechet, "W"),
        ]
    }

    /// CSV: `metric, value, unit`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["metric", "value", "unit"])?;
        for (name, v, unit) in self.rows() {
            w.write_record([name, &format!("{v:.6}"), unit])?;
        }
        w.flush().map_err(|e| Error::Io { path: "<metric report>".into(), source: e })?;
        Ok(())
    }
}

/// Slot-wise mean week, Monday 00:00 first.
#[derive(Debug, Clone, PartialEq)]
pub struct AverageWeek {
    pub monday: NaiveDate,
    pub values: Vec<f64>,
}

impl AverageWeek {
    /// CSV: `slot, weekday, time, watts`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        const DAYS: [&str; 7] = ["mon", "tue", "wed", "thu", "fri", "sat", "sun"];
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["slot", "weekday", "time", "watts"])?;
        for (i, v) in self.values.iter().enumerate() {
            let minute = (i % 48) as u32 * SLOT_MINUTES;
            w.write_record([
                i.to_string(),
                DAYS[i / 48].to_string(),
                crate::calendar::format_hhmm(minute),
                format!("{v:.3}"),
            ])?;
        }
        w.flush().map_err(|e| Error::Io { path: "<average week>".into(), source: e })?;
        Ok(())
    }
}

/// First Monday on or after `date`.
pub fn first_monday_from(date: NaiveDate) -> NaiveDate {
    date + Duration::days(i64::from((7 - date.weekday().num_days_from_monday()) % 7))
}

/// Average week of the month starting at `month_start`: the four complete
/// Monday-aligned weeks from the first Monday on or after it (or after the
/// curve start, if later), reduced to half-hour means and averaged slot-wise.
pub fn reduce_to_average_week(curve: &LoadCurve, month_start: NaiveDate) -> Result<AverageWeek> {
    if SLOT_MINUTES % curve.step_minutes != 0 {
        return Err(Error::validation(format!("a {}-min curve does not divide into 30-min slots", curve.step_minutes)));
    }
    let first_full_day = if curve.start.time() == chrono::NaiveTime::MIN {
        curve.start.date()
    } else {
        curve.start.date() + Duration::days(1)
    };
    let monday = first_monday_from(month_start.max(first_full_day));
    let begin = monday.and_hms_opt(0, 0, 0).expect("midnight");
    let offset = (begin - curve.start).num_minutes();
    let step = i64::from(curve.step_minutes);
    let per_slot = (SLOT_MINUTES / curve.step_minutes) as usize;
    let needed = 4 * WEEK_SLOTS * per_slot;
    let first = (offset / step) as usize;
    let available = curve.len().saturating_sub(first);
    if available < needed {
        return Err(Error::TooShort { needed: 4 * 7, got: available / (48 * per_slot) });
    }
    let mut values = vec![0.0; WEEK_SLOTS];
    for (k, chunk) in curve.values[first..first + needed].chunks_exact(per_slot).enumerate() {
        values[k % WEEK_SLOTS] += chunk.iter().sum::<f64>() / per_slot as f64;
    }
    for v in &mut values {
        *v /= 4.0;
    }
    Ok(AverageWeek { monday, values })
}
