//! Appliance use models, dwelling power, hot water and unit-power calibration.
//!
//! A task start triggers one independent draw per owned appliance against its
//! probability of use (PU). Activated appliances then follow their use model:
//! Forced (on while the task runs), Fractional (bursts scattered over the
//! task) or Cycle (a fixed program). Duty-cycle appliances run regardless of
//! activity.

mod calibrate;
mod dhw;
mod load;
mod model;
mod realize;

pub use calibrate::{
    calibrate_unit_powers, representative_weeks, write_calibration_report, CalibrationReport, CalibrationRow,
    CalibrationSettings,
};
pub use dhw::{
    dhw_step, shower_decision, shower_probability, shower_profile, simulate_tank_days, DhwBalance, DhwConfig,
    DhwMinute, DhwTank, ShowerQuota, WATER_WH_PER_L_K,
};
pub use load::{aggregate_load, LoadCurve};
pub use model::{
    ApplianceConfig, ApplianceModel, ApplianceSet, AumKind, Bands, CompositeAppliance, CycleProfile, PuRule,
};
pub use realize::{
    draw_activations, dwelling_power, fractional_bursts, realize_cycle, realize_forced, realize_fractional,
    total_energy_wh, Activation, ActivationStats, ApplianceStatus, PowerSegment, Realization, TaskStart,
};

/// Report group of the water heater.
pub const DHW_GROUP: &str = "dhw";
