//! Iterative multiplicative calibration of appliance unit powers against
//! annual energy targets.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::{Datelike, NaiveDate};

use super::model::ApplianceConfig;
use crate::activity::EngineConfig;
use crate::calendar::{Calendar, CalendarOverlay};
use crate::error::{Error, Result};
use crate::popsynth::Population;
use crate::simulation::Simulation;
use crate::tusdata::TaskCatalog;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationSettings {
    pub max_iterations: u32,
    /// Relative tolerance on every category.
    pub tolerance: f64,
    /// Per-iteration bounds on the scaling factor.
    pub clamp: (f64, f64),
    /// Year supplying the four representative weeks.
    pub year: i32,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        CalibrationSettings { max_iterations: 20, tolerance: 0.01, clamp: (0.5, 2.0), year: 2024 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRow {
    /// Simulation pass, from 1.
    pub iteration: u32,
    pub category: String,
    /// kWh per dwelling per year.
    pub simulated: f64,
    pub target: f64,
    /// Factor applied after this pass; 1 once converged.
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub rows: Vec<CalibrationRow>,
    /// Scaling rounds performed, at least 1.
    pub iterations: u32,
    pub converged: bool,
    /// Final relative error per category.
    pub final_errors: BTreeMap<String, f64>,
}

/// Mondays of the weeks around mid-January, -April, -July and -October.
pub fn representative_weeks(year: i32) -> Vec<NaiveDate> {
    [1, 4, 7, 10]
        .iter()
        .map(|&month| {
            let d = NaiveDate::from_ymd_opt(year, month, 15).expect("valid date");
            d + chrono::Duration::days(i64::from((7 - d.weekday().num_days_from_monday()) % 7))
        })
        .collect()
}

/// Annual energy per dwelling in kWh for each target category, from four
/// seasonal weeks scaled by 13.
fn simulate_annual(
    population: &Population,
    catalog: &TaskCatalog,
    engine: &EngineConfig,
    calendars: &[Calendar],
    config: &ApplianceConfig,
    categories: &[String],
    seed: u64,
) -> Result<Vec<f64>> {
    let mut energy = vec![0.0; categories.len()];
    let dwellings = population.dwellings.len().max(1) as f64;
    for cal in calendars {
        let out = Simulation::new(population, catalog, cal, engine, config.clone(), seed).run()?;
        for (e, c) in energy.iter_mut().zip(categories) {
            let m = out.model_index(c).expect("validated category");
            *e += out.model_energy_wh[m];
        }
    }
    Ok(energy.into_iter().map(|wh| wh / dwellings * 13.0 / 1000.0).collect())
}

/// Scales each category by `clamp(target / simulated)` until all are within
/// tolerance or the iteration budget runs out. Not converging is reported,
/// not an error.
#[allow(clippy::too_many_arguments)]
pub fn calibrate_unit_powers(
    population: &Population,
    catalog: &TaskCatalog,
    engine: &EngineConfig,
    overlay: &CalendarOverlay,
    appliances: &ApplianceConfig,
    targets: &BTreeMap<String, f64>,
    settings: &CalibrationSettings,
    seed: u64,
) -> Result<(ApplianceConfig, CalibrationReport)> {
    if targets.is_empty() {
        return Err(Error::validation("calibration needs at least one target"));
    }
    for (c, &t) in targets {
        if !appliances.appliances.contains_key(c) {
            return Err(Error::validation(format!("calibration target for unknown category `{c}`")));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::validation(format!("calibration target for `{c}` must be positive")));
        }
    }
    let calendars: Vec<Calendar> =
        representative_weeks(settings.year).into_iter().map(|d| Calendar::build(d, 7, overlay, seed)).collect();
    let categories: Vec<String> = targets.keys().cloned().collect();
    let mut config = appliances.clone();
    let mut rows = Vec::new();
    let mut steps = 0;
    let mut pass = 0;
    loop {
        pass += 1;
        let sim = simulate_annual(population, catalog, engine, &calendars, &config, &categories, seed)?;
        let errors: Vec<f64> =
            categories.iter().zip(&sim).map(|(c, s)| ((s - targets[c]) / targets[c]).abs()).collect();
        let converged = errors.iter().all(|e| *e <= settings.tolerance);
        let stop = converged || steps >= settings.max_iterations;
        for (c, s) in categories.iter().zip(&sim) {
            let target = targets[c];
            let factor = if stop { 1.0 } else { (target / s).clamp(settings.clamp.0, settings.clamp.1) };
            rows.push(CalibrationRow { iteration: pass, category: c.clone(), simulated: *s, target, factor });
            if !stop {
                config.appliances.get_mut(c).expect("validated").scale_power(factor);
            }
        }
        if stop {
            let final_errors = categories.iter().cloned().zip(errors).collect();
            let report = CalibrationReport { rows, iterations: steps.max(1), converged, final_errors };
            return Ok((config, report));
        }
        steps += 1;
    }
}

/// CSV: `iteration, category, simulated, target, factor`.
pub fn write_calibration_report<W: Write>(report: &CalibrationReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "category", "simulated", "target", "factor"])?;
    for r in &report.rows {
        w.write_record([
            r.iteration.to_string(),
            r.category.clone(),
            format!("{:.6}", r.simulated),
            format!("{:.6}", r.target),
            format!("{:.6}", r.factor),
        ])?;
    }
    w.flush().map_err(|e| Error::Io { path: "<calibration report>".into(), source: e })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weeks_start_on_monday_one_per_season() {
        let w = representative_weeks(2024);
        assert_eq!(w.len(), 4);
        for (d, m) in w.iter().zip([1, 4, 7, 10]) {
            assert_eq!(d.weekday(), chrono::Weekday::Mon);
            assert_eq!(d.month(), m);
        }
    }
}
