//! Appliance activations and their power segments.

use rand::seq::index;
use rand::Rng;

use super::model::{ApplianceSet, AumKind, CycleProfile};
use crate::activity::ActivityId;
use crate::calendar::{DayType, Season};
use crate::rng::{self, Domain};

/// Constant power over `[start, start + len)`, minutes relative to a reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSegment {
    pub start: u32,
    pub len: u32,
    pub power: f64,
}

impl PowerSegment {
    pub fn energy_wh(&self) -> f64 {
        self.power * f64::from(self.len) / 60.0
    }
}

pub fn total_energy_wh(segments: &[PowerSegment]) -> f64 {
    segments.iter().map(PowerSegment::energy_wh).sum()
}

/// Constant power for the executed minutes of a task.
pub fn realize_forced(executed_minutes: u32, power: f64) -> Vec<PowerSegment> {
    if executed_minutes == 0 {
        return Vec::new();
    }
    vec![PowerSegment { start: 0, len: executed_minutes, power }]
}

/// Burst placement for a Fractional appliance over a task of `duration`
/// minutes: `round(f * duration)` on-minutes cut into bursts of `burst`
/// minutes (the last may be shorter), spread uniformly without overlap.
pub fn fractional_bursts<R: Rng + ?Sized>(duration: u32, fraction: f64, burst: u32, rng: &mut R) -> Vec<(u32, u32)> {
    let on = ((fraction * f64::from(duration)).round() as u32).min(duration);
    if on == 0 {
        return Vec::new();
    }
    if duration < burst || on == duration {
        let start = if duration > on { rng.gen_range(0..=duration - on) } else { 0 };
        return vec![(start, on)];
    }
    let burst = burst.max(1);
    let k = on.div_ceil(burst);
    let lens: Vec<u32> = (0..k).map(|i| if i + 1 < k { burst } else { on - burst * (k - 1) }).collect();
    let free = duration - on;
    // Stars and bars: choose which k of the (free + k) slots hold a burst.
    let mut slots = index::sample(rng, (free + k) as usize, k as usize).into_vec();
    slots.sort_unstable();
    let mut out = Vec::with_capacity(k as usize);
    let mut used = 0;
    for (i, &s) in slots.iter().enumerate() {
        let gap_before = s as u32 - i as u32;
        out.push((gap_before + used, lens[i]));
        used += lens[i];
    }
    out
}

pub fn realize_fractional<R: Rng + ?Sized>(
    duration: u32,
    fraction: f64,
    burst: u32,
    power: f64,
    rng: &mut R,
) -> Vec<PowerSegment> {
    fractional_bursts(duration, fraction, burst, rng)
        .into_iter()
        .map(|(start, len)| PowerSegment { start, len, power })
        .collect()
}

/// Phases back to back from `start`, independent of the triggering task.
pub fn realize_cycle(profile: &CycleProfile, start: u32) -> Vec<PowerSegment> {
    let mut t = start;
    profile
        .phases
        .iter()
        .filter(|p| p.0 > 0)
        .map(|&(len, power)| {
            let s = PowerSegment { start: t, len, power };
            t += len;
            s
        })
        .collect()
}

/// What an activated appliance will do.
#[derive(Debug, Clone, PartialEq)]
pub enum Realization {
    /// On whenever the task executes.
    Forced,
    /// On when the task's executed-minute offset falls in a burst.
    Fractional { bursts: Vec<(u32, u32)> },
    /// Program started at this absolute minute.
    Cycle { start: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Activation {
    /// Position of the appliance in the dwelling's inventory.
    pub slot: usize,
    pub model: usize,
    pub realization: Realization,
}

/// Context of a task start.
#[derive(Debug, Clone, Copy)]
pub struct TaskStart {
    pub activity: ActivityId,
    pub chosen_duration: u32,
    pub minute: u32,
    pub minute_of_day: u32,
    pub day: u32,
    pub season: Season,
    pub day_type: DayType,
    pub task_uid: u32,
}

/// Task starts and activations per (activity, appliance model).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActivationStats {
    pub models: usize,
    pub starts: Vec<u64>,
    pub hits: Vec<u64>,
}

impl ActivationStats {
    pub fn new(activities: usize, models: usize) -> Self {
        ActivationStats { models, starts: vec![0; activities * models], hits: vec![0; activities * models] }
    }

    pub fn merge(&mut self, other: &ActivationStats) {
        if self.starts.is_empty() {
            *self = other.clone();
            return;
        }
        for (a, b) in self.starts.iter_mut().zip(&other.starts) {
            *a += b;
        }
        for (a, b) in self.hits.iter_mut().zip(&other.hits) {
            *a += b;
        }
    }

    /// `(task starts with the appliance present, activations)`.
    pub fn get(&self, activity: ActivityId, model: usize) -> (u64, u64) {
        let i = activity as usize * self.models + model;
        (self.starts.get(i).copied().unwrap_or(0), self.hits.get(i).copied().unwrap_or(0))
    }
}

/// One independent draw per owned appliance with a nonzero PU. Streams are
/// keyed by (dwelling, appliance instance, day, task) so results do not depend
/// on processing order.
pub fn draw_activations(
    set: &ApplianceSet,
    dwelling_id: u32,
    inventory: &[(u32, usize)],
    start: &TaskStart,
    seed: u64,
    mut stats: Option<&mut ActivationStats>,
) -> Vec<Activation> {
    let band = set.band_of(start.minute_of_day);
    let mut out = Vec::new();
    for (slot, &(instance_id, model)) in inventory.iter().enumerate() {
        let m = &set.models[model];
        if matches!(m.aum, AumKind::DutyCycle { .. }) {
            continue;
        }
        let stat_index = start.activity as usize * set.models.len() + model;
        if let Some(s) = stats.as_deref_mut() {
            s.starts[stat_index] += 1;
        }
        let p = set.pu(model, start.activity, start.season, start.day_type, band);
        if p <= 0.0 {
            continue;
        }
        let mut rng = rng::stream(
            seed,
            Domain::Appliance,
            &[u64::from(dwelling_id), u64::from(instance_id), u64::from(start.day), u64::from(start.task_uid)],
        );
        if !rng.gen_bool(p.min(1.0)) {
            continue;
        }
        if let Some(s) = stats.as_deref_mut() {
            s.hits[stat_index] += 1;
        }
        let realization = match &m.aum {
            AumKind::Forced => Realization::Forced,
            AumKind::Fractional { fraction, burst } => Realization::Fractional {
                bursts: fractional_bursts(start.chosen_duration, *fraction, *burst, &mut rng),
            },
            AumKind::Cycle { .. } => Realization::Cycle { start: start.minute },
            AumKind::DutyCycle { .. } => unreachable!("skipped above"),
        };
        out.push(Activation { slot, model, realization });
    }
    out
}

/// Power state of one appliance this minute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApplianceStatus {
    /// Operating power when demanded, `None` when idle.
    pub demand: Option<f64>,
    pub standby: f64,
}

impl ApplianceStatus {
    pub fn power(&self) -> f64 {
        self.demand.unwrap_or(self.standby)
    }
}

/// Sum of appliance powers (standby when idle), composite baselines and the
/// water heater.
pub fn dwelling_power(statuses: &[ApplianceStatus], baseline: f64, heater: f64) -> f64 {
    statuses.iter().map(ApplianceStatus::power).sum::<f64>() + baseline + heater
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn forced_energy() {
        assert!((total_energy_wh(&realize_forced(90, 100.0)) - 150.0).abs() < 1e-12);
        assert!(realize_forced(0, 100.0).is_empty());
    }

    #[test]
    fn fractional_housekeeping_example() {
        for s in 0..200 {
            let mut rng = stream(s, Domain::Fixture, &[]);
            let b = fractional_bursts(60, 0.25, 5, &mut rng);
            assert_eq!(b.len(), 3);
            assert_eq!(b.iter().map(|x| x.1).sum::<u32>(), 15);
            for w in b.windows(2) {
                assert!(w[0].0 + w[0].1 <= w[1].0, "{b:?}");
            }
            assert!(b.last().map(|x| x.0 + x.1).unwrap() <= 60);
        }
    }

    #[test]
    fn fraction_one_is_forced() {
        let mut rng = stream(1, Domain::Fixture, &[]);
        assert_eq!(realize_fractional(45, 1.0, 5, 50.0, &mut rng), realize_forced(45, 50.0));
    }

    #[test]
    fn short_task_single_burst() {
        let mut rng = stream(2, Domain::Fixture, &[]);
        let b = fractional_bursts(4, 0.5, 5, &mut rng);
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].1, 2);
    }

    #[test]
    fn fractional_mean_on_time() {
        let mut on = 0u64;
        let mut total = 0u64;
        for s in 0..1000u64 {
            let mut rng = stream(s, Domain::Fixture, &[1]);
            let d = 20 + (s % 90) as u32;
            on += fractional_bursts(d, 0.3, 5, &mut rng).iter().map(|b| u64::from(b.1)).sum::<u64>();
            total += u64::from(d);
        }
        assert!((on as f64 / total as f64 - 0.3).abs() < 0.01);
    }

    #[test]
    fn cycle_segments() {
        let p = CycleProfile::new(vec![(30, 2000.0), (60, 200.0)]).unwrap();
        let s = realize_cycle(&p, 100);
        assert_eq!(s.len(), 2);
        assert_eq!((s[1].start, s[1].len), (130, 60));
        assert!((total_energy_wh(&s) - 1200.0).abs() < 1e-9);
    }

    #[test]
    fn power_additivity() {
        let none: [ApplianceStatus; 0] = [];
        assert_eq!(dwelling_power(&none, 20.0, 0.0), 20.0);
        let st = [
            ApplianceStatus { demand: Some(100.0), standby: 1.0 },
            ApplianceStatus { demand: Some(2000.0), standby: 0.0 },
        ];
        assert_eq!(dwelling_power(&st, 20.0, 0.0), 2120.0);
        let idle = [ApplianceStatus { demand: None, standby: 3.0 }];
        assert_eq!(dwelling_power(&idle, 0.0, 0.0), 3.0);
    }
}
