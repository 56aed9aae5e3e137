use chrono::NaiveDate;

use loadsim::activity::EngineConfig;
use loadsim::calendar::{Calendar, CalendarOverlay};
use loadsim::fixtures;
use loadsim::popsynth::{load_population, write_population};
use loadsim::scenario::{
    activity_rates, category_map, compare_runs, default_peak_windows, scenario_simulation, BehaviorKind, CookingShift,
    EcoBehavior,
};
use loadsim::simulation::{Simulation, SimulationOptions, SimulationOutput};
use loadsim::tusdata::{ExtractConfig, Extractor, TaskCatalog};

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

fn extracted_catalog(pop_keys: &[String]) -> TaskCatalog {
    let records = fixtures::synthetic_tus(40, date(2023, 3, 6), 14, 5).unwrap();
    let ex = Extractor::new(&records, ExtractConfig::default());
    TaskCatalog::new(ex.build_catalog_for(&fixtures::task_selectors(), pop_keys)).unwrap()
}

fn run_in_pool(threads: usize, sim: &Simulation<'_>) -> SimulationOutput {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| sim.run().unwrap())
}

#[test]
fn diaries_to_catalog_to_load() {
    let pop = fixtures::population(30, 12);
    let mut keys: Vec<String> = pop.individuals.iter().map(|i| i.type_key.clone()).collect();
    keys.sort();
    keys.dedup();
    let catalog = extracted_catalog(&keys);
    let cal = Calendar::build(date(2024, 2, 5), 3, &CalendarOverlay::default(), 12);
    let engine = EngineConfig::default();
    let out = Simulation::new(&pop, &catalog, &cal, &engine, fixtures::appliance_config(), 12).run().unwrap();

    assert_eq!(out.minutes, 3 * 1440);
    assert_eq!(out.mean_load.len(), 3 * 1440);
    assert!(out.mean_load.iter().all(|w| w.is_finite() && *w >= 0.0));
    assert!(out.mean_load.iter().sum::<f64>() > 0.0);

    let rates = activity_rates(&out.activity_counts, &category_map(fixtures::CATEGORIES)).unwrap();
    assert_eq!(rates.categories.last().map(String::as_str), Some("idle"));
    for m in 0..rates.minutes {
        let total: f64 = (0..rates.categories.len()).map(|c| rates.get(m, c)).sum();
        assert!((total - 1.0).abs() < 1e-9, "minute {m}: {total}");
    }
}

#[test]
fn identical_across_thread_counts() {
    let pop = fixtures::population(24, 3);
    let cat = fixtures::task_catalog();
    let cal = Calendar::build(date(2024, 10, 7), 2, &CalendarOverlay::default(), 3);
    let engine = EngineConfig::default();
    let sim = Simulation::new(&pop, &cat, &cal, &engine, fixtures::appliance_config(), 3)
        .with_options(SimulationOptions { chunk_size: 4, ..SimulationOptions::default() });
    let one = run_in_pool(1, &sim);
    let four = run_in_pool(4, &sim);
    assert_eq!(one.mean_load, four.mean_load);
    assert_eq!(one.group_load, four.group_load);
    assert_eq!(one.showers, four.showers);
    assert_eq!(one.model_energy_wh, four.model_energy_wh);
}

#[test]
fn population_round_trips_through_csv() {
    let pop = fixtures::population(50, 21);
    let dir = tempfile::tempdir().unwrap();
    let files = write_population(&pop, dir.path()).unwrap();
    assert_eq!(files.len(), 4);
    assert_eq!(load_population(dir.path()).unwrap(), pop);
}

#[test]
fn zero_compliance_reproduces_baseline() {
    let pop = fixtures::population(20, 6);
    let cat = fixtures::task_catalog();
    let cal = Calendar::build(date(2024, 1, 8), 2, &CalendarOverlay::default(), 6);
    let engine = EngineConfig::default();
    let base = Simulation::new(&pop, &cat, &cal, &engine, fixtures::appliance_config(), 6);
    let windows = default_peak_windows();
    for kind in [BehaviorKind::CookingShift(CookingShift::default()), BehaviorKind::NoShowerPeak { windows: windows.clone() }]
    {
        let behavior = EcoBehavior { name: "none".into(), kind, compliance: 0.0 };
        let (scen, _) = scenario_simulation(&base, &cat, &behavior, 0).unwrap();
        let b = base.run().unwrap();
        let s = scen.run().unwrap();
        let cmp = compare_runs(&b, &s, &windows, &category_map(fixtures::CATEGORIES)).unwrap();
        assert!(cmp.power_delta.iter().all(|d| *d == 0.0));
        assert!(cmp.rate_delta.iter().all(|d| *d == 0.0));
        assert_eq!(cmp.summary.energy_dropped_wh, 0.0);
    }
}

#[test]
fn prefix_households_do_not_depend_on_population_size() {
    let small = fixtures::population(10, 44);
    let big = fixtures::population(25, 44);
    assert_eq!(small.households[..], big.households[..10]);
}
