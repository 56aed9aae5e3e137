//! Built-in example inputs: a population spec, a 34-task catalog in eight
//! categories, an appliance catalog and diary generators. Used by `loadsim
//! init`, the test suites and the benchmarks. Every number here is an
//! illustrative default, not survey data.

use chrono::{Datelike, NaiveDate};

use crate::activity::{run_simulation, ActivityTrace, EngineConfig, AWAY, IDLE};
use crate::appliance::ApplianceConfig;
use crate::calendar::{parse_hhmm, Calendar, CalendarOverlay, DayType, Period, Weather, MINUTES_PER_DAY};
use crate::error::Result;
use crate::popsynth::{synthesize_population, AgeBands, Employment, Population, PopulationSpec};
use crate::tusdata::{DiarySlot, TaskCatalog, TaskSelector, TaskSpec, TusRecord, WeatherFactors, SLOT_MINUTES, SLOTS_PER_DAY};

pub const POPULATION_SPEC: &str = r#"adult_age = 18
floor_area_per_extra_member = 12.0

[marginals.household_size]
"1" = 0.36
"2" = 0.33
"3" = 0.14
"4" = 0.12
"5" = 0.05

[marginals.family_type]
single = 0.36
couple = 0.26
family = 0.32
other = 0.06

[marginals.energy_tariff]
base = 0.6
peak_offpeak = 0.4

[marginals.absence]
none = 0.7
holiday = 0.15
weekend_away = 0.1
holiday_weekend_away = 0.05

[marginals.gender]
F = 0.52
M = 0.48

[marginals.age]
"0-14" = 0.18
"15-24" = 0.12
"25-49" = 0.32
"50-64" = 0.19
"65-85" = 0.19

[[conditionals]]
attribute = "age"
parents = ["member_role"]
[conditionals.table]
head = { "18-24" = 0.08, "25-49" = 0.42, "50-64" = 0.25, "65-85" = 0.25 }

[marginals.employment]
active = 0.45
inactive = 0.1
retired = 0.25
student = 0.2

[[conditionals]]
attribute = "employment"
parents = ["age"]
[conditionals.table]
"0-14" = { student = 1.0 }
"15-24" = { student = 0.65, active = 0.28, inactive = 0.07 }
"18-24" = { student = 0.35, active = 0.55, inactive = 0.1 }
"25-49" = { active = 0.82, inactive = 0.18 }
"50-64" = { active = 0.62, inactive = 0.2, retired = 0.18 }
"65-85" = { retired = 0.95, inactive = 0.05 }

[marginals.dwelling_type]
house = 0.56
apartment = 0.44

[marginals.insulation]
poor = 0.3
medium = 0.5
good = 0.2

[marginals.location]
north = 0.5
south = 0.5

[marginals.floor_area]
"30-60" = 0.35
"60-100" = 0.45
"100-140" = 0.2

[appliances.tv]
probability = 0.95
[appliances.computer]
probability = 0.75
[appliances.microwave]
probability = 0.88
[appliances.oven]
probability = 0.8
[appliances.cooking_plate]
probability = 0.85
[appliances.coffee_machine]
probability = 0.6
[appliances.kettle]
probability = 0.5
[appliances.washing_machine]
probability = 0.95
[appliances.dishwasher]
probability = 0.55
[appliances.dryer]
probability = 0.3
[appliances.fridge]
probability = 1.0
[appliances.freezer]
probability = 0.5
[appliances.iron]
probability = 0.85
[appliances.vacuum]
probability = 0.9
[appliances.hifi]
probability = 0.5
[appliances.game_console]
probability = 0.3
[appliances.hair_dryer]
probability = 0.6
[appliances.water_heater]
probability = 0.45
given = "dwelling_type"
table = { house = 0.5, apartment = 0.38 }
"#;

pub const APPLIANCES: &str = r#"[bands]
edges = ["00:00", "07:00", "11:00", "14:00", "18:00", "24:00"]

[appliance.microwave]
unit_power = 900.0
standby_power = 2.0
aum = { kind = "fractional", fraction = 0.3, burst = 5 }
pu = { cooking = 0.64, computer = 0.02, tv = 0.02, reading = 0.02, housekeeping = 0.02, breakfast = 0.01, meal = 0.08, personal_time = 0.01 }

[appliance.tv]
unit_power = 100.0
standby_power = 3.0
aum = { kind = "forced" }
pu = { cooking = 0.05, computer = 0.0, tv = 1.0, reading = 0.0, housekeeping = 0.16, breakfast = 0.05, meal = 0.05, personal_time = 0.16, games = 0.3 }

[appliance.computer]
unit_power = 120.0
standby_power = 2.0
aum = { kind = "forced" }
pu = { cooking = 0.25, computer = 1.0, tv = 0.0, reading = 0.06, housekeeping = 0.19, breakfast = 0.0, meal = 0.06, personal_time = 0.19, study = 0.6, games = 0.4 }

[appliance.oven]
unit_power = 2000.0
standby_power = 1.0
aum = { kind = "cycle", phases = [[12, 2000.0], [38, 900.0]] }
pu = { cooking = 0.3 }
[[appliance.oven.rule]]
activity = "cooking"
season = "winter"
p = 0.4
[[appliance.oven.rule]]
activity = "cooking"
season = "summer"
p = 0.2

[appliance.cooking_plate]
unit_power = 1500.0
aum = { kind = "fractional", fraction = 0.6, burst = 5 }
pu = { cooking = 0.8 }

[appliance.coffee_machine]
unit_power = 1000.0
standby_power = 1.5
aum = { kind = "fractional", fraction = 0.3, burst = 3 }
pu = { breakfast = 0.5, cooking = 0.1 }

[appliance.kettle]
unit_power = 2000.0
aum = { kind = "fractional", fraction = 0.15, burst = 3 }
pu = { breakfast = 0.3, snack = 0.2, cooking = 0.1 }

[appliance.washing_machine]
unit_power = 2000.0
standby_power = 1.0
aum = { kind = "cycle", phases = [[20, 2000.0], [70, 250.0]] }
pu = { laundry = 1.0 }

[appliance.dishwasher]
unit_power = 1800.0
standby_power = 1.0
aum = { kind = "cycle", phases = [[30, 1800.0], [60, 150.0]] }
pu = { dishes = 0.7 }

[appliance.dryer]
unit_power = 2200.0
aum = { kind = "cycle", phases = [[60, 2200.0], [20, 300.0]] }
pu = { laundry = 0.3 }
[[appliance.dryer.rule]]
activity = "laundry"
season = "winter"
p = 0.6
[[appliance.dryer.rule]]
activity = "laundry"
season = "summer"
p = 0.1

[appliance.fridge]
group = "cold"
unit_power = 120.0
aum = { kind = "duty_cycle", on = 20, period = 60 }

[appliance.freezer]
group = "cold"
unit_power = 100.0
aum = { kind = "duty_cycle", on = 25, period = 75 }

[appliance.iron]
unit_power = 1000.0
aum = { kind = "fractional", fraction = 0.5, burst = 5 }
pu = { ironing = 1.0 }

[appliance.vacuum]
unit_power = 1200.0
aum = { kind = "fractional", fraction = 0.3, burst = 5 }
pu = { housekeeping = 0.5 }

[appliance.hifi]
unit_power = 30.0
standby_power = 2.0
aum = { kind = "forced" }
pu = { music = 1.0, social = 0.2, housekeeping = 0.1 }

[appliance.game_console]
unit_power = 120.0
standby_power = 1.0
aum = { kind = "forced" }
pu = { games = 0.5 }

[appliance.hair_dryer]
unit_power = 1200.0
aum = { kind = "fractional", fraction = 0.3, burst = 3 }
pu = { hygiene = 0.25 }

[composite.cooking]
components = ["oven", "cooking_plate", "microwave", "coffee_machine", "kettle"]
baseline = [5.0, 15.0, 10.0, 8.0, 20.0]

[composite.audiovisual]
components = ["tv", "computer", "hifi", "game_console"]
baseline = [8.0, 10.0, 10.0, 10.0, 15.0]

[composite.laundry]
components = ["washing_machine", "dryer", "iron"]

[composite.lighting]
components = []
baseline = [10.0, 25.0, 10.0, 15.0, 60.0]

[dhw]
category = "water_heater"
volume_l = 200.0
setpoint_c = 55.0
heater_power_w = 2200.0
loss_w_per_k = 1.6
ambient_c = 18.0
cold_inlet_c = 12.0
heating_windows = ["00:00-06:00", "12:00-14:00", "22:00-24:00"]
shower_quota = 5.0
shower_liters = 50.0
shower_temp_c = 40.0
shower_minutes = 8
hygiene_activity = "hygiene"
day_weights = [1.0, 1.0, 1.0, 1.0, 1.0, 1.2, 1.1]
"#;

pub fn population_spec() -> PopulationSpec {
    PopulationSpec::from_toml(POPULATION_SPEC).expect("fixture population spec is valid")
}

pub fn population(households: usize, seed: u64) -> Population {
    synthesize_population(&population_spec(), households, seed)
}

pub fn appliance_config() -> ApplianceConfig {
    ApplianceConfig::from_toml(APPLIANCES).expect("fixture appliance config is valid")
}

/// One row of the task table below.
struct Row {
    task: &'static str,
    code: &'static str,
    /// Diary window for extraction when several tasks share a code.
    window: Option<(&'static str, &'static str)>,
    pp: (&'static str, &'static str),
    weekend_pp: Option<(&'static str, &'static str)>,
    dur: (u32, u32),
    freq: f64,
    weekend_freq: f64,
    collectivity: f64,
    household: bool,
    /// Multiplier on good and bad weather days.
    weather: (f64, f64),
}

const fn row(
    task: &'static str,
    code: &'static str,
    pp: (&'static str, &'static str),
    dur: (u32, u32),
    freq: f64,
    weekend_freq: f64,
    collectivity: f64,
) -> Row {
    Row {
        task,
        code,
        window: None,
        pp,
        weekend_pp: None,
        dur,
        freq,
        weekend_freq,
        collectivity,
        household: false,
        weather: (1.0, 1.0),
    }
}

impl Row {
    const fn window(mut self, from: &'static str, to: &'static str) -> Self {
        self.window = Some((from, to));
        self
    }
    const fn weekend(mut self, from: &'static str, to: &'static str) -> Self {
        self.weekend_pp = Some((from, to));
        self
    }
    const fn household(mut self) -> Self {
        self.household = true;
        self
    }
    const fn weather(mut self, good: f64, bad: f64) -> Self {
        self.weather = (good, bad);
        self
    }
}

/// Tasks only some types perform on weekdays.
const WORK: Row = row("work", "work", ("08:00", "18:30"), (420, 540), 1.0, 0.1, 0.0);
const SCHOOL: Row = row("school", "school", ("08:30", "16:30"), (360, 420), 1.0, 0.0, 0.0);
const COMMUTE: Row = row("commute", "commute", ("07:00", "19:00"), (15, 45), 2.0, 0.0, 0.1);
const HOMEWORK: Row = row("homework", "study", ("17:00", "20:00"), (30, 90), 0.8, 0.4, 0.1);

fn rows() -> Vec<Row> {
    vec![
        row("night_sleep", "sleep", ("00:00", "07:30"), (360, 450), 1.0, 1.0, 0.3)
            .window("00:00", "12:00")
            .weekend("00:00", "09:30"),
        row("late_sleep", "sleep", ("22:30", "24:00"), (60, 90), 1.0, 1.0, 0.3).window("18:00", "24:00"),
        row("nap", "sleep", ("13:30", "16:00"), (20, 60), 0.05, 0.2, 0.0).window("12:00", "18:00"),
        row("breakfast", "breakfast", ("06:30", "09:00"), (10, 25), 1.0, 1.0, 0.5).weekend("08:00", "10:30"),
        row("lunch", "meal", ("12:00", "13:45"), (20, 45), 0.7, 1.0, 0.6).window("10:30", "16:00"),
        row("dinner", "meal", ("19:30", "21:00"), (25, 50), 1.0, 1.0, 0.7).window("16:00", "24:00"),
        row("snack", "snack", ("16:00", "17:30"), (5, 15), 0.4, 0.4, 0.3),
        row("cooking_lunch", "cooking", ("11:30", "12:45"), (20, 60), 0.5, 0.9, 0.4)
            .window("09:00", "13:30")
            .household(),
        row("cooking_dinner", "cooking", ("18:30", "19:30"), (30, 75), 0.9, 0.9, 0.4)
            .window("17:00", "24:00")
            .household(),
        row("baking", "cooking", ("14:00", "17:00"), (30, 90), 0.05, 0.2, 0.3)
            .window("13:30", "17:00")
            .household(),
        row("morning_hygiene", "hygiene", ("06:30", "08:30"), (10, 25), 1.0, 1.0, 0.0)
            .window("00:00", "12:00")
            .weekend("08:00", "10:30"),
        row("evening_hygiene", "hygiene", ("20:30", "23:00"), (10, 20), 0.6, 0.6, 0.0).window("12:00", "24:00"),
        row("dressing", "dressing", ("07:00", "09:00"), (5, 15), 1.0, 1.0, 0.0).weekend("08:30", "11:00"),
        row("housekeeping", "housekeeping", ("09:00", "12:00"), (30, 90), 0.3, 0.5, 0.1),
        row("laundry", "laundry", ("09:00", "20:00"), (20, 40), 0.0, 0.0, 0.0).household(),
        row("ironing", "ironing", ("14:00", "21:00"), (30, 60), 0.1, 0.15, 0.0),
        row("dishes", "dishes", ("20:00", "22:00"), (10, 25), 0.6, 0.7, 0.2).household(),
        row("shopping", "shopping", ("10:00", "19:00"), (30, 90), 0.25, 0.4, 0.3),
        row("gardening", "gardening", ("10:00", "18:00"), (30, 120), 0.05, 0.15, 0.2).weather(1.3, 0.6),
        row("childcare", "childcare", ("17:00", "20:30"), (20, 60), 0.2, 0.3, 0.8),
        row("tv", "tv", ("20:30", "23:30"), (60, 150), 0.8, 0.9, 0.5).weather(0.9, 1.15),
        row("computer", "computer", ("17:00", "22:00"), (30, 120), 0.5, 0.5, 0.05),
        row("reading", "reading", ("21:00", "23:00"), (15, 45), 0.3, 0.4, 0.0),
        row("personal_time", "personal_time", ("17:30", "21:00"), (15, 60), 0.5, 0.6, 0.2),
        row("sport", "sport", ("17:30", "20:00"), (45, 90), 0.15, 0.3, 0.2)
            .weekend("09:00", "12:00")
            .weather(1.2, 0.75),
        row("visiting", "social", ("15:00", "19:00"), (60, 150), 0.1, 0.3, 0.9).weather(1.1, 0.9),
        row("music", "music", ("18:00", "22:00"), (20, 60), 0.1, 0.15, 0.2),
        row("games", "games", ("16:00", "22:00"), (30, 90), 0.15, 0.3, 0.3),
        row("errands", "errands", ("10:00", "17:00"), (20, 60), 0.15, 0.1, 0.1),
        row("volunteering", "volunteering", ("09:00", "12:00"), (60, 150), 0.05, 0.1, 0.3),
    ]
}

fn spec_of(r: &Row, day_type: DayType, type_key: &str) -> TaskSpec {
    let weekend = day_type != DayType::Weekday;
    let (a, b) = if weekend { r.weekend_pp.unwrap_or(r.pp) } else { r.pp };
    let pp = Period::new(parse_hhmm(a).expect("fixture time"), parse_hhmm(b).expect("fixture time"))
        .expect("fixture period");
    let freq = if weekend { r.weekend_freq } else { r.freq };
    TaskSpec {
        task: r.task.into(),
        activity_code: r.code.into(),
        day_type,
        type_key: type_key.into(),
        preferred_period: pp,
        min_duration: r.dur.0,
        max_duration: r.dur.1,
        frequency_per_day: freq,
        frequency_per_week: freq * 7.0,
        collectivity: r.collectivity,
        weather_multipliers: WeatherFactors { good: r.weather.0, bad: r.weather.1, unknown: 1.0 },
        household_level: r.household,
        fallback_from: None,
    }
}

fn keys_for(genders: &[&str], bands: &[&str], employment: Employment) -> Vec<String> {
    genders.iter().flat_map(|g| bands.iter().map(move |b| format!("{g}_{b}_{employment}"))).collect()
}

/// 34 tasks: 30 shared by everyone under the `*` key plus work, school,
/// commute and homework for the employed and students.
pub fn task_catalog() -> TaskCatalog {
    let mut specs = Vec::new();
    for dt in DayType::ALL {
        for r in rows() {
            specs.push(spec_of(&r, dt, "*"));
        }
    }
    let bands = AgeBands::default();
    let labels: Vec<String> = bands.edges.iter().map(|&e| bands.label(e)).collect();
    let labels: Vec<&str> = labels.iter().map(String::as_str).collect();
    let workers = keys_for(&["F", "M"], &labels[1..], Employment::Active);
    let students = keys_for(&["F", "M"], &labels[..2], Employment::Student);
    for dt in DayType::ALL {
        for k in &workers {
            let mut w = spec_of(&WORK, dt, k);
            if dt != DayType::Weekday {
                w.frequency_per_day = WORK.weekend_freq;
            }
            specs.push(w);
            let mut c = spec_of(&COMMUTE, dt, k);
            if dt != DayType::Weekday {
                c.frequency_per_day = 0.2;
            }
            specs.push(c);
        }
        for k in &students {
            let mut s = spec_of(&SCHOOL, dt, k);
            if dt != DayType::Weekday {
                s.frequency_per_day = 0.0;
            }
            specs.push(s);
            specs.push(spec_of(&COMMUTE, dt, k));
            specs.push(spec_of(&HOMEWORK, dt, k));
        }
    }
    for s in &mut specs {
        if s.day_type != DayType::Weekday && s.task == "commute" && s.type_key.ends_with("student") {
            s.frequency_per_day = 0.0;
        }
        s.frequency_per_week = s.frequency_per_day * 7.0;
    }
    TaskCatalog::new(specs).expect("fixture catalog is valid")
}

/// Extraction selectors for the 34 tasks, with diary windows separating tasks
/// that share an activity code.
pub fn task_selectors() -> Vec<TaskSelector> {
    let mut all = rows();
    all.extend([WORK, SCHOOL, COMMUTE, HOMEWORK]);
    all.iter()
        .map(|r| TaskSelector {
            task: r.task.into(),
            activity: r.code.into(),
            window: r.window.map(|(a, b)| {
                Period::new(parse_hhmm(a).expect("fixture time"), parse_hhmm(b).expect("fixture time"))
                    .expect("fixture window")
            }),
        })
        .collect()
}

/// Household-level task names of the catalog.
pub fn household_tasks() -> Vec<String> {
    rows().into_iter().filter(|r| r.household).map(|r| r.task.to_string()).collect()
}

/// Activity code to report category, eight categories.
pub const CATEGORIES: &[(&str, &str)] = &[
    ("sleep", "sleep"),
    ("work", "work_school"),
    ("school", "work_school"),
    ("commute", "work_school"),
    ("study", "work_school"),
    ("breakfast", "meals"),
    ("meal", "meals"),
    ("snack", "meals"),
    ("cooking", "cooking"),
    ("hygiene", "hygiene"),
    ("dressing", "hygiene"),
    ("housekeeping", "housekeeping"),
    ("laundry", "housekeeping"),
    ("ironing", "housekeeping"),
    ("dishes", "housekeeping"),
    ("shopping", "housekeeping"),
    ("gardening", "housekeeping"),
    ("childcare", "housekeeping"),
    ("tv", "leisure"),
    ("computer", "leisure"),
    ("reading", "leisure"),
    ("personal_time", "leisure"),
    ("sport", "leisure"),
    ("social", "leisure"),
    ("music", "leisure"),
    ("games", "leisure"),
    ("errands", "other"),
    ("volunteering", "other"),
    ("away", "other"),
];

/// Work episodes `(start, duration)` in minutes for 20 employed respondents;
/// the extracted bands are PP 06:00-19:50 and 2-12 h at X = 90, PP
/// 07:40-16:50 and 5-10 h at X = 50.
pub const WORK_EPISODES: [(u32, u32); 20] = [
    (680, 300),
    (360, 600),
    (510, 450),
    (570, 450),
    (510, 420),
    (520, 480),
    (570, 400),
    (460, 500),
    (390, 360),
    (470, 540),
    (750, 120),
    (720, 120),
    (630, 120),
    (360, 720),
    (580, 620),
    (560, 620),
    (370, 630),
    (370, 630),
    (560, 630),
    (460, 290),
];

/// One weekday diary per work episode; every other slot is `home`.
pub fn work_fixture_records() -> Vec<TusRecord> {
    WORK_EPISODES
        .iter()
        .enumerate()
        .map(|(i, &(start, dur))| {
            let episodes = (0..SLOTS_PER_DAY as u32)
                .map(|s| {
                    let t = s * SLOT_MINUTES;
                    let at_work = t >= start && t < start + dur;
                    DiarySlot { activity: if at_work { "work" } else { "home" }.into(), with_others: false }
                })
                .collect();
            TusRecord {
                respondent_id: format!("w{i:02}"),
                diary_day: 0,
                gender: if i % 2 == 0 { "F" } else { "M" }.into(),
                age: 30 + i as u32,
                employment: Employment::Active,
                day_type: DayType::Weekday,
                weather: if i % 3 == 0 { Weather::Bad } else { Weather::Good },
                episodes,
            }
        })
        .collect()
}

/// Turns a simulated trace into ten-minute diaries, one per agent-day, by
/// sampling the activity at each slot midpoint. Idle minutes read `home`.
pub fn diaries_from_trace(trace: &ActivityTrace, population: &Population, calendar: &Calendar) -> Vec<TusRecord> {
    let mut out = Vec::new();
    for (a, &(_, ind)) in trace.agents.iter().enumerate() {
        let person = &population.individuals[ind as usize];
        for (d, day) in calendar.days.iter().enumerate() {
            let episodes = (0..SLOTS_PER_DAY as u32)
                .map(|s| {
                    let m = d as u32 * MINUTES_PER_DAY + s * SLOT_MINUTES + SLOT_MINUTES / 2;
                    let act = trace.at(m, a);
                    let activity = match act {
                        IDLE => "home".to_string(),
                        AWAY => "away".to_string(),
                        x => trace.activities.name(x).to_string(),
                    };
                    DiarySlot { activity, with_others: trace.collective[m as usize * trace.agents.len() + a] }
                })
                .collect();
            out.push(TusRecord {
                respondent_id: format!("p{ind:05}"),
                diary_day: day.date.num_days_from_ce() as u32,
                gender: person.gender.clone(),
                age: person.age,
                employment: person.employment,
                day_type: day.day_type,
                weather: day.weather,
                episodes,
            });
        }
    }
    out
}

/// Synthetic time-use survey: simulate `households` with the fixture catalog
/// over `days` days and record every agent-day as a diary.
pub fn synthetic_tus(households: usize, start: NaiveDate, days: u32, seed: u64) -> Result<Vec<TusRecord>> {
    let pop = population(households, seed);
    let calendar = Calendar::build(start, days, &CalendarOverlay::default(), seed);
    let trace = run_simulation(&pop, &task_catalog(), &calendar, &EngineConfig::default(), seed)?;
    Ok(diaries_from_trace(&trace, &pop, &calendar))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_has_34_tasks_in_8_categories() {
        let cat = task_catalog();
        assert_eq!(cat.task_names().len(), 34);
        let mut cats: Vec<&str> = CATEGORIES.iter().map(|c| c.1).collect();
        cats.sort();
        cats.dedup();
        assert_eq!(cats.len(), 8);
        for code in cat.activity_codes() {
            assert!(CATEGORIES.iter().any(|c| c.0 == code), "{code}");
        }
        assert_eq!(task_selectors().len(), 34);
    }

    #[test]
    fn fixtures_parse() {
        population_spec();
        let cfg = appliance_config();
        assert_eq!(cfg.composites["cooking"].components.len(), 5);
    }
}
