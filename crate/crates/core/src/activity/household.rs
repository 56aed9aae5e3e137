use chrono::Datelike;
use rand::Rng;

use super::compiled::{ActivityId, CompiledCatalog, AWAY, IDLE};
use super::{compute_priority, EngineConfig, PriorityConfig, PriorityInput};
use crate::calendar::{week_ordinal, Calendar, DayInfo, DayType, Period, MINUTES_PER_DAY};
use crate::error::Result;
use crate::popsynth::Population;
use crate::rng::{self, Domain, StreamRng};
use crate::tusdata::{assignment_from, stochastic_round, TaskSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskState {
    Pending,
    Ongoing,
    Done,
    Abandoned,
}

/// One task to carry out today.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskInstance {
    /// Index of the spec in the household's catalog.
    pub spec: u32,
    pub activity: ActivityId,
    /// Owning agent, `None` for household-level tasks any adult may perform.
    pub owner: Option<u8>,
    pub preferred_period: Period,
    pub min_duration: u32,
    pub max_duration: u32,
    pub collectivity: f64,
    pub chosen_duration: u32,
    pub elapsed: u32,
    pub state: TaskState,
    /// Bit set of agents executing the task.
    pub performers: u16,
    /// Absolute minute + 1 of the last advance; 0 if never advanced.
    last_advanced: u32,
}

impl TaskInstance {
    fn new(spec_index: usize, spec: &TaskSpec, activity: ActivityId, owner: Option<u8>, chosen: u32) -> Self {
        TaskInstance {
            spec: spec_index as u32,
            activity,
            owner,
            preferred_period: spec.preferred_period,
            min_duration: spec.min_duration,
            max_duration: spec.max_duration,
            collectivity: spec.collectivity,
            chosen_duration: chosen,
            elapsed: 0,
            state: TaskState::Pending,
            performers: 0,
            last_advanced: 0,
        }
    }

    /// Minutes still needed to reach the minimum duration.
    #[inline]
    pub fn remaining_min(&self) -> u32 {
        self.min_duration.saturating_sub(self.elapsed)
    }

    #[inline]
    fn is_open(&self) -> bool {
        matches!(self.state, TaskState::Pending | TaskState::Ongoing)
    }

    #[inline]
    fn selectable(&self, minute_of_day: u32, left: u32, early: u32) -> bool {
        self.is_open() && minute_of_day + early >= self.preferred_period.start && self.remaining_min() <= left
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub individual_id: u32,
    pub type_key: String,
    /// May carry out household-level tasks.
    pub adult: bool,
    /// Today's task indices this agent may select, own tasks first.
    pub candidates: Vec<u32>,
    pub current: Option<u32>,
    pub idle: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskEventKind {
    Started,
    Resumed,
    Suspended,
    Completed,
    Abandoned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskEvent {
    pub minute: u32,
    pub task: u32,
    pub agent: Option<u8>,
    pub kind: TaskEventKind,
}

/// A task advanced by one minute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Execution {
    pub task: u32,
    pub spec: u32,
    pub activity: ActivityId,
    /// Executed minutes before this one; 0 on the very first minute.
    pub offset: u32,
    pub performers: u16,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MinuteReport {
    pub minute: u32,
    pub activities: Vec<ActivityId>,
    pub collective: Vec<bool>,
    pub executions: Vec<Execution>,
    pub events: Vec<TaskEvent>,
}

impl MinuteReport {
    fn reset(&mut self, minute: u32, agents: usize) {
        self.minute = minute;
        self.activities.clear();
        self.activities.resize(agents, IDLE);
        self.collective.clear();
        self.collective.resize(agents, false);
        self.executions.clear();
        self.events.clear();
    }
}

/// Everything shared by the households of a run.
pub struct StepContext<'a> {
    pub population: &'a Population,
    pub catalog: &'a CompiledCatalog,
    pub calendar: &'a Calendar,
    pub config: &'a EngineConfig,
    pub seed: u64,
}

/// Per-household engine state.
#[derive(Debug, Clone)]
pub struct HouseholdSim {
    pub household_id: u32,
    pub agents: Vec<AgentState>,
    pub tasks: Vec<TaskInstance>,
    pub away: bool,
    /// Final state of the previous day's tasks, kept until the next day closes.
    pub closed: Vec<TaskInstance>,
    prev_activity: Vec<ActivityId>,
    day: Option<u32>,
    week_plan: Option<(i32, Vec<(String, u32)>)>,
}


fn draw_duration(spec: &TaskSpec, day: &DayInfo, rng: &mut StreamRng) -> u32 {
    let (lo, hi) = (spec.min_duration, spec.max_duration);
    let u = if hi > lo { rng.gen_range(f64::from(lo)..=f64::from(hi)) } else { f64::from(lo) };
    let w = spec.weather_multipliers.factor(day.weather);
    ((u * w).round() as u32).clamp(lo, hi)
}

impl HouseholdSim {
    pub fn new(population: &Population, household_id: u32, config: &EngineConfig) -> Self {
        let h = &population.households[household_id as usize];
        let mut agents: Vec<AgentState> = population
            .members(h)
            .map(|i| AgentState {
                individual_id: i.id,
                type_key: i.type_key.clone(),
                adult: i.age >= config.adult_age,
                candidates: Vec::new(),
                current: None,
                idle: true,
            })
            .collect();
        if !agents.iter().any(|a| a.adult) {
            let oldest = population
                .members(h)
                .enumerate()
                .max_by_key(|(i, ind)| (ind.age, std::cmp::Reverse(*i)))
                .map(|(i, _)| i);
            if let Some(i) = oldest {
                agents[i].adult = true;
            }
        }
        let n = agents.len();
        HouseholdSim {
            household_id,
            agents,
            tasks: Vec::new(),
            away: false,
            closed: Vec::new(),
            prev_activity: vec![IDLE; n],
            day: None,
            week_plan: None,
        }
    }

    /// Closes the previous day: unfinished tasks are completed if they reached
    /// their minimum duration, abandoned otherwise.
    pub fn close_day(&mut self, minute: u32, events: &mut Vec<TaskEvent>) {
        for (i, t) in self.tasks.iter_mut().enumerate() {
            let kind = match t.state {
                TaskState::Ongoing if t.elapsed >= t.min_duration => TaskEventKind::Completed,
                TaskState::Ongoing | TaskState::Pending => TaskEventKind::Abandoned,
                _ => continue,
            };
            t.state = if kind == TaskEventKind::Completed { TaskState::Done } else { TaskState::Abandoned };
            t.performers = 0;
            events.push(TaskEvent { minute, task: i as u32, agent: None, kind });
        }
        for a in &mut self.agents {
            a.current = None;
            a.candidates.clear();
        }
        self.closed = std::mem::take(&mut self.tasks);
    }

    fn weekly_plan(&mut self, ctx: &StepContext<'_>, day: &DayInfo) -> &[(String, u32)] {
        let week = week_ordinal(day.date);
        if self.week_plan.as_ref().map(|(w, _)| *w) != Some(week) {
            let mut rng = rng::stream(ctx.seed, Domain::Assignment, &[u64::from(self.household_id), 1, week as u64]);
            let size = self.agents.len() as f64;
            let mut plan = Vec::new();
            for (task, rate) in &ctx.config.weekly_household {
                let cycles = (size * rate).ceil().max(0.0) as u32;
                for _ in 0..cycles {
                    plan.push((task.clone(), rng.gen_range(0..7u32)));
                }
            }
            self.week_plan = Some((week, plan));
        }
        &self.week_plan.as_ref().expect("set above").1
    }

    fn is_away(&self, ctx: &StepContext<'_>, day: &DayInfo) -> bool {
        let absence = ctx.population.households[self.household_id as usize].absence;
        if day.holiday && absence.holiday {
            return true;
        }
        if absence.weekend_away && day.day_type != DayType::Weekday {
            let week = week_ordinal(day.date) as u64;
            let mut rng = rng::stream(ctx.seed, Domain::Assignment, &[u64::from(self.household_id), 2, week]);
            return rng.gen_bool(ctx.config.weekend_away_probability.clamp(0.0, 1.0));
        }
        false
    }

    /// Draws today's tasks: individual assignments per agent, then household-level
    /// tasks once for the dwelling, then overlay injections.
    pub fn assign_day(&mut self, ctx: &StepContext<'_>, day_index: u32) -> Result<()> {
        let day = &ctx.calendar.days[day_index as usize];
        self.tasks.clear();
        for a in &mut self.agents {
            a.candidates.clear();
            a.current = None;
            a.idle = true;
        }
        self.day = Some(day_index);
        self.away = self.is_away(ctx, day);
        if self.away {
            return Ok(());
        }
        let cat = &ctx.catalog.catalog;
        let suppressed = |s: &TaskSpec| day.suppress.iter().any(|x| *x == s.task || *x == s.activity_code);
        let mut rng = rng::stream(ctx.seed, Domain::Assignment, &[u64::from(self.household_id), 0, u64::from(day_index)]);

        let push = |tasks: &mut Vec<TaskInstance>, spec: usize, owner: Option<u8>, rng: &mut StreamRng| {
            let s = &cat.specs[spec];
            let chosen = draw_duration(s, day, rng);
            tasks.push(TaskInstance::new(spec, s, ctx.catalog.activity[spec], owner, chosen));
        };

        for (ai, agent) in self.agents.iter().enumerate() {
            let resolved = ctx.catalog.resolve_nonempty(&agent.type_key, day.day_type)?;
            for t in assignment_from(&resolved, cat, &mut rng) {
                if !suppressed(&cat.specs[t.spec]) {
                    push(&mut self.tasks, t.spec, Some(ai as u8), &mut rng);
                }
            }
            for name in &day.inject {
                let spec = resolved.iter().copied().find(|&i| cat.specs[i].task == *name);
                if let Some(spec) = spec.filter(|&i| !cat.specs[i].household_level) {
                    push(&mut self.tasks, spec, Some(ai as u8), &mut rng);
                }
            }
        }

        let head = self.agents.iter().find(|a| a.adult).map(|a| a.type_key.clone()).unwrap_or_default();
        let resolved = ctx.catalog.resolve(&head, day.day_type);
        let dow = day.date.weekday().num_days_from_monday();
        let plan: Vec<(String, u32)> = self.weekly_plan(ctx, day).to_vec();
        for &spec in &resolved {
            let s = &cat.specs[spec];
            if !s.household_level || suppressed(s) {
                continue;
            }
            let n = if ctx.config.weekly_household.contains_key(&s.task) {
                plan.iter().filter(|(t, d)| *t == s.task && *d == dow).count() as u32
            } else {
                stochastic_round(s.frequency_per_day, &mut rng)
            };
            let n = n + day.inject.iter().filter(|x| **x == s.task).count() as u32;
            for _ in 0..n {
                push(&mut self.tasks, spec, None, &mut rng);
            }
        }

        for (i, t) in self.tasks.iter().enumerate() {
            match t.owner {
                Some(a) => self.agents[a as usize].candidates.push(i as u32),
                None => {
                    for a in self.agents.iter_mut().filter(|a| a.adult) {
                        a.candidates.push(i as u32);
                    }
                }
            }
        }
        Ok(())
    }

    /// Best selectable task for agent `a`, or `None` when idle.
    pub fn select_task(&self, a: usize, minute_of_day: u32, cfg: &PriorityConfig) -> Option<u32> {
        let agent = &self.agents[a];
        let left = MINUTES_PER_DAY - minute_of_day;
        let in_period = agent
            .candidates
            .iter()
            .map(|&i| &self.tasks[i as usize])
            .filter(|t| t.selectable(minute_of_day, left, cfg.early_start) && t.preferred_period.contains(minute_of_day))
            .count() as u32;

        let mut best: Option<(f64, u32, u32, u32)> = None;
        for &i in &agent.candidates {
            let t = &self.tasks[i as usize];
            if !t.selectable(minute_of_day, left, cfg.early_start) {
                continue;
            }
            let inside = t.preferred_period.contains(minute_of_day);
            let co_member_active =
                self.prev_activity.iter().enumerate().any(|(b, &act)| b != a && act == t.activity);
            let input = PriorityInput {
                preferred_period: t.preferred_period,
                remaining_min: t.remaining_min(),
                collectivity: t.collectivity,
                is_current: agent.current == Some(i),
                co_member_active,
                competing_in_period: in_period - u32::from(inside),
            };
            let v = compute_priority(&input, minute_of_day, cfg).value;
            let key = (v, t.preferred_period.end, t.spec, i);
            let better = match best {
                None => true,
                Some((bv, be, bs, bi)) => v > bv || (v == bv && (key.1, key.2, key.3) < (be, bs, bi)),
            };
            if better {
                best = Some(key);
            }
        }
        best.map(|b| b.3)
    }

    /// Advances the household by one minute. `minute` is absolute and must
    /// increase by exactly one per call.
    pub fn step(&mut self, ctx: &StepContext<'_>, minute: u32, report: &mut MinuteReport) -> Result<()> {
        let n = self.agents.len();
        report.reset(minute, n);
        let day_index = minute / MINUTES_PER_DAY;
        if self.day != Some(day_index) {
            self.close_day(minute, &mut report.events);
            self.assign_day(ctx, day_index)?;
        }
        if self.away {
            report.activities.fill(AWAY);
            self.prev_activity.fill(AWAY);
            return Ok(());
        }
        let t_day = minute % MINUTES_PER_DAY;
        let left = MINUTES_PER_DAY - t_day;
        let cfg = &ctx.config.priority;

        for (i, t) in self.tasks.iter_mut().enumerate() {
            if t.state == TaskState::Pending && t.preferred_period.end <= t_day && t.remaining_min() > left {
                t.state = TaskState::Abandoned;
                report.events.push(TaskEvent { minute, task: i as u32, agent: t.owner, kind: TaskEventKind::Abandoned });
            }
        }

        let stamp = minute + 1;
        for a in 0..n {
            let chosen = self.select_task(a, t_day, cfg);
            let bit = 1u16 << a;
            let prev = self.agents[a].current;
            if prev != chosen {
                if let Some(p) = prev {
                    let t = &mut self.tasks[p as usize];
                    t.performers &= !bit;
                    if t.performers == 0 && t.state == TaskState::Ongoing {
                        let kind = if t.elapsed >= t.min_duration {
                            t.state = TaskState::Done;
                            TaskEventKind::Completed
                        } else {
                            t.state = TaskState::Pending;
                            TaskEventKind::Suspended
                        };
                        report.events.push(TaskEvent { minute, task: p, agent: Some(a as u8), kind });
                    }
                }
                if let Some(c) = chosen {
                    let t = &mut self.tasks[c as usize];
                    if t.state == TaskState::Pending {
                        let kind = if t.elapsed == 0 { TaskEventKind::Started } else { TaskEventKind::Resumed };
                        t.state = TaskState::Ongoing;
                        report.events.push(TaskEvent { minute, task: c, agent: Some(a as u8), kind });
                    }
                }
                self.agents[a].current = chosen;
            }
            self.agents[a].idle = chosen.is_none();
            let Some(c) = chosen else {
                report.activities[a] = IDLE;
                continue;
            };
            let t = &mut self.tasks[c as usize];
            t.performers |= bit;
            report.activities[a] = t.activity;
            if t.last_advanced != stamp {
                t.last_advanced = stamp;
                report.executions.push(Execution {
                    task: c,
                    spec: t.spec,
                    activity: t.activity,
                    offset: t.elapsed,
                    performers: 0,
                });
                t.elapsed += 1;
            }
            if let Some(e) = report.executions.iter_mut().find(|e| e.task == c) {
                e.performers |= bit;
            }
            if t.elapsed >= t.chosen_duration && t.state == TaskState::Ongoing {
                t.state = TaskState::Done;
                t.performers = 0;
                report.events.push(TaskEvent { minute, task: c, agent: Some(a as u8), kind: TaskEventKind::Completed });
                for ag in &mut self.agents {
                    if ag.current == Some(c) {
                        ag.current = None;
                    }
                }
            }
        }

        for a in 0..n {
            let act = report.activities[a];
            report.collective[a] =
                act != IDLE && act != AWAY && report.activities.iter().enumerate().any(|(b, &x)| b != a && x == act);
        }
        self.prev_activity.copy_from_slice(&report.activities);
        Ok(())
    }
}
