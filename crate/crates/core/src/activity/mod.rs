//! Minute-by-minute household activity engine.
//!
//! Every minute each agent scores its selectable tasks and executes the best
//! one. Scores combine a preferred-period factor, urgency, inertia, a
//! collective bonus and time pressure:
//!
//! `value = period * (1 + urgency) * (1 + inertia) * (1 + collective) / (1 + pressure)`
//!
//! Agents are stepped in member order; the collective bonus looks at what the
//! other members did in the previous minute, so the result does not depend on
//! stepping order.

mod compiled;
mod household;
mod trace;

pub use compiled::{ActivityId, ActivityTable, CompiledCatalog, AWAY, IDLE};
pub use household::{
    AgentState, Execution, HouseholdSim, MinuteReport, StepContext, TaskEvent, TaskEventKind, TaskInstance, TaskState,
};
pub use trace::{run_simulation, write_trace, ActivityCounts, ActivityTrace};
pub(crate) use trace::{assemble, HouseholdTrace};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::calendar::Period;

/// Priority constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorityConfig {
    pub in_period: f64,
    pub out_of_period: f64,
    pub inertia: f64,
    pub collective: f64,
    /// Weight of each competing in-period task.
    pub pressure: f64,
    /// Minutes before the preferred period during which a task may start.
    pub early_start: u32,
}

impl Default for PriorityConfig {
    fn default() -> Self {
        PriorityConfig { in_period: 1.0, out_of_period: 0.1, inertia: 0.5, collective: 0.5, pressure: 1.0, early_start: 30 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub priority: PriorityConfig,
    /// Minimum age to carry out household-level tasks.
    pub adult_age: u32,
    /// Household-level tasks drawn per week rather than per day: task name to
    /// cycles per person-week, rounded up per household.
    pub weekly_household: BTreeMap<String, f64>,
    /// Chance that a weekend-away household is away on a given weekend.
    pub weekend_away_probability: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            priority: PriorityConfig::default(),
            adult_age: 18,
            weekly_household: BTreeMap::from([("laundry".to_string(), 0.5)]),
            weekend_away_probability: 0.5,
        }
    }
}

/// Score with its components kept for inspection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorityScore {
    pub value: f64,
    pub period_factor: f64,
    pub urgency: f64,
    pub inertia: f64,
    pub collective: f64,
    pub pressure: f64,
}

/// Inputs of one priority evaluation.
#[derive(Debug, Clone, Copy)]
pub struct PriorityInput {
    pub preferred_period: Period,
    /// Minutes still needed to reach the minimum duration.
    pub remaining_min: u32,
    pub collectivity: f64,
    pub is_current: bool,
    /// Another member performed the same activity last minute.
    pub co_member_active: bool,
    /// Other selectable tasks currently inside their preferred period.
    pub competing_in_period: u32,
}

pub fn compute_priority(input: &PriorityInput, minute_of_day: u32, cfg: &PriorityConfig) -> PriorityScore {
    let pp = input.preferred_period;
    let period_factor = if pp.contains(minute_of_day) { cfg.in_period } else { cfg.out_of_period };
    let slack = i64::from(pp.end) - i64::from(minute_of_day) - i64::from(input.remaining_min);
    let urgency = 1.0 / (1.0 + slack.max(0) as f64);
    let inertia = if input.is_current { cfg.inertia } else { 0.0 };
    let collective = if input.co_member_active { cfg.collective * input.collectivity } else { 0.0 };
    let pressure = cfg.pressure * f64::from(input.competing_in_period);
    PriorityScore {
        value: period_factor * (1.0 + urgency) * (1.0 + inertia) * (1.0 + collective) / (1.0 + pressure),
        period_factor,
        urgency,
        inertia,
        collective,
        pressure,
    }
}
