//! Joint activity and appliance run over a whole population.
//!
//! Households are independent, so they are processed in fixed-size chunks on
//! the rayon pool. Each chunk sums its households in id order and chunks are
//! merged in order, which keeps floating-point results identical for any
//! number of worker threads.

use std::collections::VecDeque;

use chrono::{Datelike, Duration, NaiveDateTime};
use rand::Rng;
use rayon::prelude::*;

use crate::activity::{
    assemble, ActivityCounts, ActivityId, ActivityTable, ActivityTrace, CompiledCatalog, EngineConfig,
    HouseholdSim, HouseholdTrace, MinuteReport, StepContext, TaskState,
};
use crate::appliance::{
    dhw_step, draw_activations, shower_decision, shower_probability, Activation, ActivationStats, ApplianceConfig,
    ApplianceSet, AumKind, CycleProfile, DhwBalance, DhwConfig, DhwTank, LoadCurve, Realization, ShowerQuota,
    TaskStart, DHW_GROUP,
};
use crate::calendar::{week_ordinal, Calendar, DayType, Period, MINUTES_PER_DAY};
use crate::error::{Error, Result};
use crate::popsynth::Population;
use crate::rng::{self, Domain};
use crate::tusdata::TaskCatalog;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationOptions {
    /// Keep one 1-minute curve per dwelling.
    pub dwelling_curves: bool,
    /// Keep the full per-agent activity trace.
    pub trace: bool,
    /// Households per work unit. Part of the result's identity: float sums
    /// are grouped by chunk.
    pub chunk_size: usize,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        SimulationOptions { dwelling_curves: false, trace: false, chunk_size: 32 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shower {
    pub household_id: u32,
    pub individual_id: u32,
    pub minute: u32,
}

/// Everything a run produces. Loads are means per dwelling.
#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub start: NaiveDateTime,
    pub minutes: u32,
    pub dwellings: usize,
    pub groups: Vec<String>,
    pub models: Vec<String>,
    pub mean_load: Vec<f64>,
    /// `group_load[g][minute]`.
    pub group_load: Vec<Vec<f64>>,
    /// Total over all dwellings, per appliance model.
    pub model_energy_wh: Vec<f64>,
    pub activity_counts: ActivityCounts,
    pub activation_stats: ActivationStats,
    pub showers: Vec<Shower>,
    /// Closed tank-days and the worst daily balance error among them.
    pub dhw_days: u64,
    pub dhw_max_balance_error: f64,
    pub rejected_cycles: u64,
    pub dwelling_curves: Option<Vec<Vec<f64>>>,
    pub trace: Option<ActivityTrace>,
}

impl SimulationOutput {
    pub fn load_curve(&self) -> LoadCurve {
        LoadCurve { start: self.start, step_minutes: 1, values: self.mean_load.clone() }
    }

    pub fn group_index(&self, group: &str) -> Option<usize> {
        self.groups.iter().position(|g| g == group)
    }

    pub fn group_curve(&self, group: &str) -> Option<LoadCurve> {
        self.group_index(group)
            .map(|g| LoadCurve { start: self.start, step_minutes: 1, values: self.group_load[g].clone() })
    }

    pub fn model_index(&self, model: &str) -> Option<usize> {
        self.models.iter().position(|m| m == model)
    }

    pub fn activities(&self) -> &ActivityTable {
        &self.activity_counts.activities
    }
}

/// A configured run. Catalog variants and shower blocking let scenarios
/// alter selected households while every random stream stays keyed the same.
#[derive(Debug, Clone)]
pub struct Simulation<'a> {
    pub population: &'a Population,
    pub calendar: &'a Calendar,
    pub engine: &'a EngineConfig,
    pub appliances: ApplianceConfig,
    pub seed: u64,
    pub options: SimulationOptions,
    catalogs: Vec<TaskCatalog>,
    catalog_of: Vec<u8>,
    shower_block: Vec<Period>,
    blocked: Vec<bool>,
}

impl<'a> Simulation<'a> {
    pub fn new(
        population: &'a Population,
        catalog: &TaskCatalog,
        calendar: &'a Calendar,
        engine: &'a EngineConfig,
        appliances: ApplianceConfig,
        seed: u64,
    ) -> Self {
        let n = population.households.len();
        Simulation {
            population,
            calendar,
            engine,
            appliances,
            seed,
            options: SimulationOptions::default(),
            catalogs: vec![catalog.clone()],
            catalog_of: vec![0; n],
            shower_block: Vec::new(),
            blocked: vec![false; n],
        }
    }

    pub fn with_options(mut self, options: SimulationOptions) -> Self {
        self.options = options;
        self
    }

    /// Households flagged in `households` use `catalog` instead of the base one.
    pub fn with_catalog_variant(mut self, catalog: &TaskCatalog, households: &[bool]) -> Result<Self> {
        if households.len() != self.population.households.len() {
            return Err(Error::validation("catalog variant mask must cover every household"));
        }
        if self.catalogs.len() >= usize::from(u8::MAX) {
            return Err(Error::validation("too many catalog variants"));
        }
        let v = self.catalogs.len() as u8;
        self.catalogs.push(catalog.clone());
        for (c, &on) in self.catalog_of.iter_mut().zip(households) {
            if on {
                *c = v;
            }
        }
        Ok(self)
    }

    /// No shower may start inside `windows` in the flagged households.
    pub fn with_shower_block(mut self, windows: Vec<Period>, households: Vec<bool>) -> Result<Self> {
        if households.len() != self.population.households.len() {
            return Err(Error::validation("shower block mask must cover every household"));
        }
        self.shower_block = windows;
        self.blocked = households;
        Ok(self)
    }

    pub fn run(&self) -> Result<SimulationOutput> {
        if self.calendar.days.is_empty() {
            return Err(Error::validation("horizon must be at least one day"));
        }
        let pop = self.population;
        let mut table = ActivityTable::default();
        let keys: Vec<&str> = pop.individuals.iter().map(|i| i.type_key.as_str()).collect();
        let compiled: Vec<CompiledCatalog> =
            self.catalogs.iter().map(|c| CompiledCatalog::new(c.clone(), &mut table, keys.iter().copied())).collect();
        let set = ApplianceSet::new(self.appliances.clone(), &table)?;
        let minutes = self.calendar.horizon_minutes();
        let shared = Shared {
            pop,
            calendar: self.calendar,
            engine: self.engine,
            seed: self.seed,
            compiled: &compiled,
            catalog_of: &self.catalog_of,
            set: &set,
            hygiene: table.id(&set.config.dhw.hygiene_activity),
            shower_block: &self.shower_block,
            blocked: &self.blocked,
            minutes,
            n_activities: table.len(),
            options: self.options,
        };

        let ids: Vec<u32> = (0..pop.households.len() as u32).collect();
        let chunk = self.options.chunk_size.max(1);
        // Waves of chunks bound memory; merging stays in chunk order.
        let wave = chunk * 2 * rayon::current_num_threads().max(1);
        let n_groups = set.groups.len();
        let mut total = Chunk::new(&shared);
        let mut traces = Vec::new();
        let mut curves = Vec::new();
        for wave_ids in ids.chunks(wave) {
            let chunks: Vec<Chunk> = wave_ids
                .par_chunks(chunk)
                .map(|hh| {
                    let mut c = Chunk::new(&shared);
                    for &h in hh {
                        run_household(&shared, h, &mut c)?;
                    }
                    Ok(c)
                })
                .collect::<Result<_>>()?;
            for c in chunks {
                total.merge(c, &mut curves, &mut traces);
            }
        }
        let n = pop.dwellings.len().max(1) as f64;
        let m = minutes as usize;
        let group_load = (0..n_groups).map(|g| total.groups[g * m..(g + 1) * m].iter().map(|v| v / n).collect()).collect();
        let agents = pop.individuals.len() as u32;
        Ok(SimulationOutput {
            start: self.calendar.start.and_hms_opt(0, 0, 0).expect("midnight"),
            minutes,
            dwellings: pop.dwellings.len(),
            groups: set.groups.clone(),
            models: set.names.clone(),
            mean_load: total.load.iter().map(|v| v / n).collect(),
            group_load,
            model_energy_wh: total.model_wh,
            activity_counts: ActivityCounts { activities: table.clone(), minutes, agents, counts: total.counts },
            activation_stats: total.stats,
            showers: total.showers,
            dhw_days: total.dhw_days,
            dhw_max_balance_error: total.dhw_max_err,
            rejected_cycles: total.rejected,
            dwelling_curves: self.options.dwelling_curves.then_some(curves),
            trace: self.options.trace.then(|| assemble(table, pop, minutes, traces)),
        })
    }
}

struct Shared<'s> {
    pop: &'s Population,
    calendar: &'s Calendar,
    engine: &'s EngineConfig,
    seed: u64,
    compiled: &'s [CompiledCatalog],
    catalog_of: &'s [u8],
    set: &'s ApplianceSet,
    hygiene: Option<ActivityId>,
    shower_block: &'s [Period],
    blocked: &'s [bool],
    minutes: u32,
    n_activities: usize,
    options: SimulationOptions,
}

struct Chunk {
    load: Vec<f64>,
    groups: Vec<f64>,
    model_wh: Vec<f64>,
    counts: Vec<u32>,
    stats: ActivationStats,
    showers: Vec<Shower>,
    dhw_days: u64,
    dhw_max_err: f64,
    rejected: u64,
    curves: Vec<Vec<f64>>,
    traces: Vec<HouseholdTrace>,
}

impl Chunk {
    fn merge(&mut self, c: Chunk, curves: &mut Vec<Vec<f64>>, traces: &mut Vec<HouseholdTrace>) {
        for (a, b) in self.load.iter_mut().zip(&c.load) {
            *a += b;
        }
        for (a, b) in self.groups.iter_mut().zip(&c.groups) {
            *a += b;
        }
        for (a, b) in self.model_wh.iter_mut().zip(&c.model_wh) {
            *a += b;
        }
        for (a, b) in self.counts.iter_mut().zip(&c.counts) {
            *a += b;
        }
        self.stats.merge(&c.stats);
        self.showers.extend(c.showers);
        self.dhw_days += c.dhw_days;
        self.dhw_max_err = self.dhw_max_err.max(c.dhw_max_err);
        self.rejected += c.rejected;
        curves.extend(c.curves);
        traces.extend(c.traces);
    }

    fn new(s: &Shared<'_>) -> Self {
        let m = s.minutes as usize;
        Chunk {
            load: vec![0.0; m],
            groups: vec![0.0; m * s.set.groups.len()],
            model_wh: vec![0.0; s.set.models.len()],
            counts: vec![0; m * s.n_activities],
            stats: ActivationStats::new(s.n_activities, s.set.models.len()),
            showers: Vec::new(),
            dhw_days: 0,
            dhw_max_err: 0.0,
            rejected: 0,
            curves: Vec::new(),
            traces: Vec::new(),
        }
    }
}

fn day_type_index(dt: DayType) -> usize {
    DayType::ALL.iter().position(|d| *d == dt).expect("listed")
}

#[derive(Debug, Clone, Copy)]
enum Running {
    Idle,
    Duty { on: u32, period: u32, phase: u32 },
}

/// Appliance, tank and shower state of one dwelling.
struct DwellingState<'p> {
    dwelling_id: u32,
    inventory: Vec<(u32, usize)>,
    slot_group: Vec<usize>,
    duty: Vec<Running>,
    profiles: Vec<Option<CycleProfile>>,
    cycle_start: Vec<Option<u32>>,
    acts: Vec<Vec<Activation>>,
    demand: Vec<Option<f64>>,
    tank: Option<DhwTank>,
    draws: VecDeque<f64>,
    balance: DhwBalance,
    quotas: Vec<ShowerQuota>,
    /// Expected hygiene tasks per day, per agent and day type.
    hygiene_per_day: Vec<[f64; 3]>,
    dhw: &'p DhwConfig,
}

impl<'p> DwellingState<'p> {
    fn new(s: &Shared<'p>, household: u32, sim: &HouseholdSim) -> Self {
        let pop = s.pop;
        let dwelling = pop.dwelling_of(household);
        let set = s.set;
        let dhw = &set.config.dhw;
        let mut inventory = Vec::new();
        let mut has_tank = false;
        for &id in &dwelling.appliances {
            let cat = pop.appliances[id as usize].category.as_str();
            if cat == dhw.category {
                has_tank = true;
            }
            if let Some(m) = set.model_index(cat) {
                inventory.push((id, m));
            }
        }
        let duty = inventory
            .iter()
            .map(|&(id, m)| match set.models[m].aum {
                AumKind::DutyCycle { on, period } => {
                    let mut r = rng::stream(s.seed, Domain::Appliance, &[u64::from(dwelling.id), u64::from(id), u64::MAX]);
                    Running::Duty { on, period, phase: r.gen_range(0..period) }
                }
                _ => Running::Idle,
            })
            .collect();
        let profiles = inventory
            .iter()
            .map(|&(_, m)| match &set.models[m].aum {
                AumKind::Cycle { phases } => Some(CycleProfile { phases: phases.clone() }),
                _ => None,
            })
            .collect();
        let catalog = &s.compiled[usize::from(s.catalog_of[household as usize])];
        let hygiene_per_day = sim
            .agents
            .iter()
            .map(|a| {
                let mut per = [0.0; 3];
                for (i, dt) in DayType::ALL.iter().enumerate() {
                    per[i] = catalog
                        .resolve(&a.type_key, *dt)
                        .into_iter()
                        .map(|k| &catalog.catalog.specs[k])
                        .filter(|sp| sp.activity_code == dhw.hygiene_activity && !sp.household_level)
                        .map(|sp| sp.frequency_per_day)
                        .sum();
                }
                per
            })
            .collect();
        let n = inventory.len();
        DwellingState {
            dwelling_id: dwelling.id,
            slot_group: inventory.iter().map(|&(_, m)| set.model_group[m]).collect(),
            inventory,
            duty,
            profiles,
            cycle_start: vec![None; n],
            acts: Vec::new(),
            demand: vec![None; n],
            tank: has_tank.then(|| DhwTank::new(dhw)),
            draws: VecDeque::new(),
            balance: DhwBalance::default(),
            quotas: vec![ShowerQuota::default(); sim.agents.len()],
            hygiene_per_day,
            dhw,
        }
    }
}

fn run_household(s: &Shared<'_>, household: u32, acc: &mut Chunk) -> Result<()> {
    let catalog = &s.compiled[usize::from(s.catalog_of[household as usize])];
    let ctx = StepContext { population: s.pop, catalog, calendar: s.calendar, config: s.engine, seed: s.seed };
    let mut sim = HouseholdSim::new(s.pop, household, s.engine);
    let mut st = DwellingState::new(s, household, &sim);
    let mut report = MinuteReport::default();
    let mut trace = s.options.trace.then(|| HouseholdTrace::new(household, sim.agents.len(), s.minutes));
    let mut curve = if s.options.dwelling_curves { vec![0.0; s.minutes as usize] } else { Vec::new() };
    let set = s.set;
    let m_total = s.minutes as usize;
    let dhw_group = set.group_index(DHW_GROUP).expect("always listed");
    let blocked = s.blocked[household as usize];
    let k = s.n_activities;

    for minute in 0..s.minutes {
        let t_day = minute % MINUTES_PER_DAY;
        let day_index = minute / MINUTES_PER_DAY;
        let day = &s.calendar.days[day_index as usize];
        if t_day == 0 {
            let dow = day.date.weekday().num_days_from_monday();
            for q in &mut st.quotas {
                q.roll(week_ordinal(day.date), 7 - dow, st.dhw);
            }
            if let Some(tank) = &st.tank {
                if minute > 0 {
                    st.balance.stored_end_wh = tank.stored_wh(st.dhw);
                    acc.dhw_days += 1;
                    acc.dhw_max_err = acc.dhw_max_err.max(st.balance.relative_error());
                }
                st.balance = DhwBalance { stored_start_wh: tank.stored_wh(st.dhw), ..Default::default() };
            }
        }
        sim.step(&ctx, minute, &mut report)?;
        if t_day == 0 {
            st.acts.clear();
            st.acts.resize(sim.tasks.len(), Vec::new());
        }

        for e in &report.executions {
            if e.offset != 0 {
                continue;
            }
            let task = &sim.tasks[e.task as usize];
            let start = TaskStart {
                activity: e.activity,
                chosen_duration: task.chosen_duration,
                minute,
                minute_of_day: t_day,
                day: day_index,
                season: day.season,
                day_type: day.day_type,
                task_uid: e.task,
            };
            let acts = draw_activations(set, st.dwelling_id, &st.inventory, &start, s.seed, Some(&mut acc.stats));
            let mut kept = Vec::with_capacity(acts.len());
            for a in acts {
                if let Realization::Cycle { start } = a.realization {
                    if st.cycle_start[a.slot].is_some() {
                        acc.rejected += 1;
                    } else {
                        st.cycle_start[a.slot] = Some(start);
                    }
                } else {
                    kept.push(a);
                }
            }
            st.acts[e.task as usize] = kept;

            if Some(e.activity) != s.hygiene {
                continue;
            }
            for (ai, agent) in sim.agents.iter().enumerate() {
                if e.performers & (1 << ai) == 0 {
                    continue;
                }
                let dow = day.date.weekday().num_days_from_monday();
                let per_day = &st.hygiene_per_day[ai];
                let today_left = 1 + sim
                    .tasks
                    .iter()
                    .filter(|t| {
                        t.owner == Some(ai as u8)
                            && t.activity == e.activity
                            && t.state == TaskState::Pending
                            && t.elapsed == 0
                    })
                    .count();
                let future: f64 = (dow + 1..7)
                    .map(|d| {
                        let idx = (day_index + d - dow) as usize;
                        let dt = s.calendar.days.get(idx).map_or_else(
                            || DayType::of((day.date + Duration::days(i64::from(d - dow))).weekday()),
                            |x| x.day_type,
                        );
                        st.dhw.day_weights[d as usize] * per_day[day_type_index(dt)]
                    })
                    .sum();
                let w = st.dhw.day_weights[dow as usize];
                let q = &mut st.quotas[ai];
                let p = shower_probability(q.left, w, today_left as f64, future);
                let in_window = blocked && s.shower_block.iter().any(|w| w.contains(t_day));
                let mut r = rng::stream(
                    s.seed,
                    Domain::Shower,
                    &[u64::from(agent.individual_id), u64::from(day_index), u64::from(e.task)],
                );
                if shower_decision(q, p, in_window, &mut r) {
                    acc.showers.push(Shower { household_id: household, individual_id: agent.individual_id, minute });
                    if st.tank.is_some() {
                        let per_min = st.dhw.shower_liters / f64::from(st.dhw.shower_minutes);
                        let len = st.dhw.shower_minutes as usize;
                        if st.draws.len() < len {
                            st.draws.resize(len, 0.0);
                        }
                        for d in st.draws.iter_mut().take(len) {
                            *d += per_min;
                        }
                    }
                }
            }
        }

        st.demand.fill(None);
        for e in &report.executions {
            for a in &st.acts[e.task as usize] {
                let on = match &a.realization {
                    Realization::Forced => true,
                    Realization::Fractional { bursts } => bursts.iter().any(|&(b, l)| e.offset >= b && e.offset < b + l),
                    Realization::Cycle { .. } => false,
                };
                if on {
                    st.demand[a.slot] = Some(set.models[a.model].unit_power);
                }
            }
        }
        let mut total = 0.0;
        for slot in 0..st.inventory.len() {
            let model = &set.models[st.inventory[slot].1];
            if let Some(start) = st.cycle_start[slot] {
                let prof = st.profiles[slot].as_ref().expect("cycle model");
                match prof.power_at(minute - start) {
                    Some(p) => st.demand[slot] = Some(p),
                    None => st.cycle_start[slot] = None,
                }
            }
            if let Running::Duty { on, period, phase } = st.duty[slot] {
                if (minute + phase) % period < on {
                    st.demand[slot] = Some(model.unit_power);
                }
            }
            let p = st.demand[slot].unwrap_or(model.standby_power);
            total += p;
            acc.groups[st.slot_group[slot] * m_total + minute as usize] += p;
            acc.model_wh[st.inventory[slot].1] += p / 60.0;
        }
        for (g, w) in set.baseline_at(t_day) {
            total += w;
            acc.groups[g * m_total + minute as usize] += w;
        }
        if let Some(tank) = &mut st.tank {
            let draw = st.draws.pop_front().unwrap_or(0.0);
            let step = dhw_step(tank, st.dhw, draw, t_day);
            st.balance.add(&step);
            total += step.heater_w;
            acc.groups[dhw_group * m_total + minute as usize] += step.heater_w;
        }
        acc.load[minute as usize] += total;
        if s.options.dwelling_curves {
            curve[minute as usize] = total;
        }
        let row = &mut acc.counts[minute as usize * k..(minute as usize + 1) * k];
        for &a in &report.activities {
            row[a as usize] += 1;
        }
        if let Some(t) = &mut trace {
            t.record(&mut sim, &report);
        }
    }
    if let Some(tank) = &st.tank {
        st.balance.stored_end_wh = tank.stored_wh(st.dhw);
        acc.dhw_days += 1;
        acc.dhw_max_err = acc.dhw_max_err.max(st.balance.relative_error());
    }
    if let Some(mut t) = trace {
        t.finish(&mut sim, s.minutes);
        acc.traces.push(t);
    }
    if s.options.dwelling_curves {
        acc.curves.push(curve);
    }
    Ok(())
}
