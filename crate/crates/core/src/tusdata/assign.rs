use rand::Rng;

use super::TaskCatalog;
use crate::calendar::DayType;
use crate::error::{Error, Result};

/// One task to perform today: an index into the catalog plus its repetition number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TaskTemplate {
    pub spec: usize,
    pub repetition: u32,
}

/// `floor(x)` plus one more with probability `frac(x)`.
pub fn stochastic_round<R: Rng + ?Sized>(x: f64, rng: &mut R) -> u32 {
    let x = x.max(0.0);
    let base = x.floor();
    let frac = x - base;
    base as u32 + u32::from(frac > 0.0 && rng.gen_bool(frac))
}

/// Individual tasks for one agent-day. Household-level specs are skipped; the
/// household assignment instantiates those once per dwelling. Tasks rarer than
/// once a day come out of the same Bernoulli draw, so over a week they appear
/// on `7 * frequency` days on average.
pub fn generate_daily_assignment<R: Rng + ?Sized>(
    type_key: &str,
    day_type: DayType,
    catalog: &TaskCatalog,
    rng: &mut R,
) -> Result<Vec<TaskTemplate>> {
    let resolved = catalog.resolve(type_key, day_type);
    if resolved.is_empty() {
        return Err(Error::EmptyCatalog { type_key: type_key.to_string(), day_type: day_type.to_string() });
    }
    Ok(assignment_from(&resolved, catalog, rng))
}

/// Same as [`generate_daily_assignment`] over an already resolved spec list.
pub fn assignment_from<R: Rng + ?Sized>(resolved: &[usize], catalog: &TaskCatalog, rng: &mut R) -> Vec<TaskTemplate> {
    let mut out = Vec::new();
    for &spec in resolved {
        let s = &catalog.specs[spec];
        if s.household_level {
            continue;
        }
        for repetition in 0..stochastic_round(s.frequency_per_day, rng) {
            out.push(TaskTemplate { spec, repetition });
        }
    }
    out
}
