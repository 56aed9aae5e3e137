use std::io::Write;

use rayon::prelude::*;

use super::compiled::{ActivityId, ActivityTable, CompiledCatalog};
use super::household::{HouseholdSim, MinuteReport, StepContext, TaskEvent, TaskInstance};
use super::EngineConfig;
use crate::calendar::{Calendar, MINUTES_PER_DAY};
use crate::error::{Error, Result};
use crate::popsynth::Population;
use crate::tusdata::TaskCatalog;

/// Full per-minute record of a run. Sized `minutes * agents`; meant for small
/// populations and tests. Large runs stream through the simulation module.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityTrace {
    pub activities: ActivityTable,
    /// `(household_id, individual_id)` per agent column.
    pub agents: Vec<(u32, u32)>,
    pub minutes: u32,
    /// Minute-major: `activity[minute * agents.len() + agent]`.
    pub activity: Vec<ActivityId>,
    pub collective: Vec<bool>,
    pub events: Vec<(u32, TaskEvent)>,
    /// Closed task instances per `(household_id, day)`.
    pub tasks: Vec<(u32, u32, TaskInstance)>,
}

impl ActivityTrace {
    pub fn at(&self, minute: u32, agent: usize) -> ActivityId {
        self.activity[minute as usize * self.agents.len() + agent]
    }

    /// One agent's activity sequence over one day.
    pub fn day_sequence(&self, agent: usize, day: u32) -> Vec<ActivityId> {
        (day * MINUTES_PER_DAY..(day + 1) * MINUTES_PER_DAY).map(|m| self.at(m, agent)).collect()
    }
}

/// Number of agents per (minute, activity).
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityCounts {
    pub activities: ActivityTable,
    pub minutes: u32,
    pub agents: u32,
    /// Minute-major: `counts[minute * activities.len() + activity]`.
    pub counts: Vec<u32>,
}

impl ActivityCounts {
    pub fn get(&self, minute: u32, activity: ActivityId) -> u32 {
        self.counts[minute as usize * self.activities.len() + activity as usize]
    }

    pub fn from_trace(trace: &ActivityTrace) -> Self {
        let k = trace.activities.len();
        let n = trace.agents.len();
        let mut counts = vec![0u32; trace.minutes as usize * k];
        for m in 0..trace.minutes as usize {
            for &a in &trace.activity[m * n..(m + 1) * n] {
                counts[m * k + a as usize] += 1;
            }
        }
        ActivityCounts { activities: trace.activities.clone(), minutes: trace.minutes, agents: n as u32, counts }
    }
}

/// Per-household slice of an [`ActivityTrace`], filled minute by minute.
#[derive(Debug, Default)]
pub(crate) struct HouseholdTrace {
    household: u32,
    activity: Vec<ActivityId>,
    collective: Vec<bool>,
    events: Vec<(u32, TaskEvent)>,
    tasks: Vec<(u32, u32, TaskInstance)>,
}

impl HouseholdTrace {
    pub(crate) fn new(household: u32, agents: usize, minutes: u32) -> Self {
        HouseholdTrace {
            household,
            activity: Vec::with_capacity(minutes as usize * agents),
            collective: Vec::with_capacity(minutes as usize * agents),
            events: Vec::new(),
            tasks: Vec::new(),
        }
    }

    /// Call after each `step`.
    pub(crate) fn record(&mut self, sim: &mut HouseholdSim, report: &MinuteReport) {
        let m = report.minute;
        let h = self.household;
        if m > 0 && m % MINUTES_PER_DAY == 0 {
            let day = m / MINUTES_PER_DAY - 1;
            self.tasks.extend(sim.closed.drain(..).map(|t| (h, day, t)));
        }
        self.activity.extend_from_slice(&report.activities);
        self.collective.extend_from_slice(&report.collective);
        self.events.extend(report.events.iter().map(|e| (h, *e)));
    }

    /// Closes the last day.
    pub(crate) fn finish(&mut self, sim: &mut HouseholdSim, minutes: u32) {
        let h = self.household;
        let mut tail = Vec::new();
        sim.close_day(minutes, &mut tail);
        self.events.extend(tail.into_iter().map(|e| (h, e)));
        let last_day = minutes.saturating_sub(1) / MINUTES_PER_DAY;
        self.tasks.extend(sim.closed.drain(..).map(|t| (h, last_day, t)));
    }
}

fn run_household(ctx: &StepContext<'_>, household: u32, minutes: u32) -> Result<HouseholdTrace> {
    let mut sim = HouseholdSim::new(ctx.population, household, ctx.config);
    let mut report = MinuteReport::default();
    let mut out = HouseholdTrace::new(household, sim.agents.len(), minutes);
    for m in 0..minutes {
        sim.step(ctx, m, &mut report)?;
        out.record(&mut sim, &report);
    }
    out.finish(&mut sim, minutes);
    Ok(out)
}

/// Stitches per-household slices, in household order, into one trace.
pub(crate) fn assemble(
    activities: ActivityTable,
    population: &Population,
    minutes: u32,
    per_household: Vec<HouseholdTrace>,
) -> ActivityTrace {
    let agents: Vec<(u32, u32)> =
        population.households.iter().flat_map(|h| h.member_ids.iter().map(move |&i| (h.id, i))).collect();
    let total = agents.len();
    let mut activity = vec![0; minutes as usize * total];
    let mut collective = vec![false; minutes as usize * total];
    let mut col = 0;
    let mut events = Vec::new();
    let mut tasks = Vec::new();
    for t in per_household {
        let n = t.activity.len() / minutes as usize;
        for m in 0..minutes as usize {
            activity[m * total + col..m * total + col + n].copy_from_slice(&t.activity[m * n..(m + 1) * n]);
            collective[m * total + col..m * total + col + n].copy_from_slice(&t.collective[m * n..(m + 1) * n]);
        }
        col += n;
        events.extend(t.events);
        tasks.extend(t.tasks);
    }
    ActivityTrace { activities, agents, minutes, activity, collective, events, tasks }
}

/// Simulates every household over the calendar's horizon.
pub fn run_simulation(
    population: &Population,
    catalog: &TaskCatalog,
    calendar: &Calendar,
    config: &EngineConfig,
    seed: u64,
) -> Result<ActivityTrace> {
    if calendar.days.is_empty() {
        return Err(Error::validation("horizon must be at least one day"));
    }
    let mut table = ActivityTable::default();
    let keys: Vec<&str> = population.individuals.iter().map(|i| i.type_key.as_str()).collect();
    let compiled = CompiledCatalog::new(catalog.clone(), &mut table, keys);
    let ctx = StepContext { population, catalog: &compiled, calendar, config, seed };
    let minutes = calendar.horizon_minutes();

    let per_household: Vec<HouseholdTrace> = (0..population.households.len() as u32)
        .into_par_iter()
        .map(|h| run_household(&ctx, h, minutes))
        .collect::<Result<_>>()?;
    Ok(assemble(table, population, minutes, per_household))
}

/// CSV: `minute, household_id, agent_id, activity_code, collective_flag`.
pub fn write_trace<W: Write>(trace: &ActivityTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["minute", "household_id", "agent_id", "activity_code", "collective_flag"])?;
    let n = trace.agents.len();
    for m in 0..trace.minutes {
        for (a, &(h, i)) in trace.agents.iter().enumerate() {
            let idx = m as usize * n + a;
            w.write_record([
                m.to_string(),
                h.to_string(),
                i.to_string(),
                trace.activities.name(trace.activity[idx]).to_string(),
                u8::from(trace.collective[idx]).to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::Io { path: "<trace>".into(), source: e })?;
    Ok(())
}
