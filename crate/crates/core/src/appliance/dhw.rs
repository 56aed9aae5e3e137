//! Domestic hot water: a single fully mixed tank and the weekly shower quota.
//!
//! Tank energy is tracked relative to the cold inlet, so a day's balance
//! `heater = stored change + drawn + lost` closes up to rounding.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::calendar::{Period, MINUTES_PER_DAY};
use crate::error::{Error, Result};

/// Specific heat of water in Wh per litre per kelvin.
pub const WATER_WH_PER_L_K: f64 = 4186.0 / 3600.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DhwConfig {
    /// Appliance category whose ownership gives a dwelling an electric tank.
    pub category: String,
    pub volume_l: f64,
    pub setpoint_c: f64,
    pub heater_power_w: f64,
    /// Standing loss coefficient, W/K.
    pub loss_w_per_k: f64,
    pub ambient_c: f64,
    pub cold_inlet_c: f64,
    pub heating_windows: Vec<Period>,
    /// Showers per individual per week.
    pub shower_quota: f64,
    pub shower_liters: f64,
    pub shower_temp_c: f64,
    pub shower_minutes: u32,
    /// Activity whose task starts are shower opportunities.
    pub hygiene_activity: String,
    /// Relative shower propensity, Monday first.
    pub day_weights: [f64; 7],
}

impl Default for DhwConfig {
    fn default() -> Self {
        DhwConfig {
            category: "water_heater".into(),
            volume_l: 200.0,
            setpoint_c: 55.0,
            heater_power_w: 2200.0,
            loss_w_per_k: 1.6,
            ambient_c: 18.0,
            cold_inlet_c: 12.0,
            heating_windows: vec![
                Period { start: 0, end: 360 },
                Period { start: 720, end: 840 },
                Period { start: 1320, end: 1440 },
            ],
            shower_quota: 5.0,
            shower_liters: 50.0,
            shower_temp_c: 40.0,
            shower_minutes: 8,
            hygiene_activity: "hygiene".into(),
            day_weights: [1.0; 7],
        }
    }
}

impl DhwConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.volume_l > 0.0 && self.heater_power_w >= 0.0 && self.loss_w_per_k >= 0.0) {
            return Err(Error::validation("dhw: volume must be > 0, powers and losses >= 0"));
        }
        if !(self.setpoint_c > self.cold_inlet_c) {
            return Err(Error::validation("dhw: setpoint must exceed the cold inlet temperature"));
        }
        if !(self.shower_quota >= 0.0) || self.shower_minutes == 0 || !(self.shower_liters >= 0.0) {
            return Err(Error::validation("dhw: shower quota/volume must be >= 0 and duration >= 1"));
        }
        if self.day_weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::validation("dhw: day weights must be positive"));
        }
        Ok(())
    }

    pub fn in_window(&self, minute_of_day: u32) -> bool {
        self.heating_windows.iter().any(|w| w.contains(minute_of_day))
    }

    /// Thermal capacity of the tank, Wh/K.
    pub fn capacity_wh_per_k(&self) -> f64 {
        self.volume_l * WATER_WH_PER_L_K
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DhwTank {
    pub temperature_c: f64,
}

/// Energy flows of one tank minute, Wh.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DhwMinute {
    pub heater_w: f64,
    pub heater_wh: f64,
    pub drawn_wh: f64,
    pub lost_wh: f64,
}

impl DhwTank {
    pub fn new(cfg: &DhwConfig) -> Self {
        DhwTank { temperature_c: cfg.setpoint_c }
    }

    /// Stored energy above the cold inlet, Wh.
    pub fn stored_wh(&self, cfg: &DhwConfig) -> f64 {
        cfg.capacity_wh_per_k() * (self.temperature_c - cfg.cold_inlet_c)
    }
}

/// Advances the tank by one minute: draw `draw_liters` at the shower mixing
/// temperature, then standing losses, then the heater at full power if inside
/// a heating window and below the setpoint.
pub fn dhw_step(tank: &mut DhwTank, cfg: &DhwConfig, draw_liters: f64, minute_of_day: u32) -> DhwMinute {
    let cap = cfg.capacity_wh_per_k();
    let tc = cfg.cold_inlet_c;
    let mut out = DhwMinute::default();

    if draw_liters > 0.0 && tank.temperature_c > tc {
        // Hot share of the mixed draw; all of it when the tank is cooler than the tap target.
        let t = tank.temperature_c;
        let hot = if t > cfg.shower_temp_c { draw_liters * (cfg.shower_temp_c - tc) / (t - tc) } else { draw_liters };
        let hot = hot.min(cfg.volume_l);
        out.drawn_wh = hot * WATER_WH_PER_L_K * (t - tc);
        tank.temperature_c -= out.drawn_wh / cap;
    }

    let loss_wh = cfg.loss_w_per_k * (tank.temperature_c - cfg.ambient_c) / 60.0;
    out.lost_wh = loss_wh;
    tank.temperature_c -= loss_wh / cap;

    if cfg.in_window(minute_of_day) && tank.temperature_c < cfg.setpoint_c {
        out.heater_w = cfg.heater_power_w;
        out.heater_wh = cfg.heater_power_w / 60.0;
        tank.temperature_c += out.heater_wh / cap;
    }
    out
}

/// `p = quota_left * w_today / (w_today * today_left + future_weighted)`, in [0, 1].
///
/// `today_left` counts hygiene opportunities left today including this one;
/// `future_weighted` is the day-weighted expected count over the rest of the week.
pub fn shower_probability(quota_left: u32, w_today: f64, today_left: f64, future_weighted: f64) -> f64 {
    if quota_left == 0 {
        return 0.0;
    }
    let expected = w_today * today_left + future_weighted;
    if expected <= 0.0 {
        return 1.0;
    }
    (f64::from(quota_left) * w_today / expected).clamp(0.0, 1.0)
}

/// Per-individual weekly shower budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShowerQuota {
    pub week: i32,
    pub left: u32,
    pub taken: u32,
}

impl ShowerQuota {
    /// Resets on a new week; a week joined mid-way gets a prorated quota.
    pub fn roll(&mut self, week: i32, days_left_in_week: u32, cfg: &DhwConfig) {
        if self.week != week {
            self.week = week;
            self.left = (cfg.shower_quota * f64::from(days_left_in_week) / 7.0).round() as u32;
            self.taken = 0;
        }
    }
}

impl Default for ShowerQuota {
    fn default() -> Self {
        ShowerQuota { week: i32::MIN, left: 0, taken: 0 }
    }
}

/// Draws whether a hygiene task starting now includes a shower. `blocked`
/// forces no shower (peak-window eco-behavior) without touching the quota.
pub fn shower_decision<R: Rng + ?Sized>(
    quota: &mut ShowerQuota,
    p: f64,
    blocked: bool,
    rng: &mut R,
) -> bool {
    if blocked || quota.left == 0 {
        return false;
    }
    let take = rng.gen_bool(p.clamp(0.0, 1.0));
    if take {
        quota.left -= 1;
        quota.taken += 1;
    }
    take
}

/// Litres drawn per minute during a shower.
pub fn shower_profile(cfg: &DhwConfig) -> (u32, f64) {
    (cfg.shower_minutes, cfg.shower_liters / f64::from(cfg.shower_minutes))
}

/// Daily energy ledger of one tank.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DhwBalance {
    pub heater_wh: f64,
    pub drawn_wh: f64,
    pub lost_wh: f64,
    pub stored_start_wh: f64,
    pub stored_end_wh: f64,
}

impl DhwBalance {
    pub fn add(&mut self, m: &DhwMinute) {
        self.heater_wh += m.heater_wh;
        self.drawn_wh += m.drawn_wh;
        self.lost_wh += m.lost_wh;
    }

    /// `|in - (change + drawn + lost)|` relative to the larger side.
    pub fn relative_error(&self) -> f64 {
        let out = self.stored_end_wh - self.stored_start_wh + self.drawn_wh + self.lost_wh;
        let scale = self.heater_wh.abs().max(self.drawn_wh + self.lost_wh.abs()).max(1e-9);
        (self.heater_wh - out).abs() / scale
    }
}

/// Runs a tank over whole days with the given per-minute draws.
pub fn simulate_tank_days(cfg: &DhwConfig, draws: &[f64]) -> Vec<DhwBalance> {
    let mut tank = DhwTank::new(cfg);
    draws
        .chunks(MINUTES_PER_DAY as usize)
        .map(|day| {
            let mut b = DhwBalance { stored_start_wh: tank.stored_wh(cfg), ..Default::default() };
            for (m, &d) in day.iter().enumerate() {
                b.add(&dhw_step(&mut tank, cfg, d, m as u32));
            }
            b.stored_end_wh = tank.stored_wh(cfg);
            b
        })
        .collect()
}
