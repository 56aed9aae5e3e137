//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so the lines always print.

use std::collections::BTreeMap;
use std::time::Instant;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use loadsim::activity::{run_simulation, EngineConfig, TaskState};
use loadsim::appliance::{calibrate_unit_powers, CalibrationSettings};
use loadsim::calendar::{Calendar, CalendarOverlay, DayType, Period};
use loadsim::fixtures;
use loadsim::metrics::{frechet_discrete, mae, mda, rmse};
use loadsim::scenario::{
    apply_cooking_shift, category_map, compare_runs, default_peak_windows, scenario_simulation, BehaviorKind,
    CookingShift, EcoBehavior,
};
use loadsim::simulation::{Simulation, SimulationOutput};
use loadsim::tusdata::{extract_task_spec, symmetric_band, VariabilityParam};

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

fn calendar(start: NaiveDate, days: u32, seed: u64) -> Calendar {
    Calendar::build(start, days, &CalendarOverlay::default(), seed)
}

fn hhmm(m: u32) -> String {
    format!("{:02}:{:02}", m / 60, m % 60)
}

fn x_band_recovery() -> Outcome {
    let t = Instant::now();
    let records = fixtures::work_fixture_records();
    let mut ok = true;
    let mut detail = Vec::new();
    for (x, pp, dur) in [(90.0, (360, 1190), (120, 720)), (50.0, (460, 1010), (300, 600))] {
        let s = extract_task_spec(&records, "work", DayType::Weekday, "*", VariabilityParam::new(x).unwrap()).unwrap();
        let got_pp = (s.preferred_period.start, s.preferred_period.end);
        let got_dur = (s.min_duration, s.max_duration);
        ok &= got_pp == pp && got_dur == dur;
        detail.push(format!(
            "X={x}: PP {}-{}, {}-{} h",
            hhmm(got_pp.0),
            hhmm(got_pp.1),
            got_dur.0 as f64 / 60.0,
            got_dur.1 as f64 / 60.0
        ));
    }
    let secs = t.elapsed().as_secs_f64();
    ok &= secs < 1.0;
    (ok, format!("{}; {secs:.3} s", detail.join("; ")))
}

/// Smallest grid multiple `d` with at least X% of values in `[mean-d, mean+d]`,
/// found by scanning `d = 0, grid, 2*grid, ...` with exact integer tests.
fn brute_force_band(values: &[u32], x: f64, grid: u32) -> (u32, f64, f64) {
    let n = values.len() as i64;
    let sum: i64 = values.iter().map(|&v| i64::from(v)).sum();
    let mut d = 0u32;
    loop {
        let inside = values.iter().filter(|&&v| (n * i64::from(v) - sum).abs() <= n * i64::from(d)).count();
        if inside as f64 * 100.0 >= x * n as f64 {
            break;
        }
        d += grid;
    }
    let mean = sum as f64 / n as f64;
    let lo = (mean - f64::from(d)).max(f64::from(*values.iter().min().unwrap()));
    let hi = (mean + f64::from(d)).min(f64::from(*values.iter().max().unwrap()));
    (d, lo, hi)
}

fn band_minimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    for _ in 0..200 {
        let n = rng.gen_range(1..60);
        let values: Vec<u32> = (0..n).map(|_| rng.gen_range(1..=144) * 10).collect();
        for x in [50.0, 70.0, 90.0, 100.0] {
            let band = symmetric_band(&values, VariabilityParam::new(x).unwrap(), 10).unwrap();
            let (d, lo, hi) = brute_force_band(&values, x, 10);
            let covered = values.iter().filter(|&&v| f64::from(v) >= band.lower && f64::from(v) <= band.upper).count();
            if band.delta != d || band.lower != lo || band.upper != hi || (covered as f64) * 100.0 < x * n as f64 {
                return (false, format!("mismatch for X={x} on {values:?}: {band:?} vs d={d}"));
            }
            checked += 1;
        }
    }
    (true, format!("{checked} bands equal the brute-force interval and cover >= X%"))
}

fn pu_fidelity() -> Outcome {
    let t = Instant::now();
    let pop = fixtures::population(700, 31);
    let cal = calendar(date(2024, 3, 4), 7, 31);
    let engine = EngineConfig::default();
    let out = Simulation::new(&pop, &fixtures::task_catalog(), &cal, &engine, fixtures::appliance_config(), 31)
        .run()
        .unwrap();
    let table = out.activities();
    let id = |code: &str| table.id(code).unwrap();
    let model = |name: &str| out.model_index(name).unwrap();
    let (starts, hits) = out.activation_stats.get(id("cooking"), model("microwave"));
    let p = 0.64;
    let rate = hits as f64 / starts as f64;
    let half = 2.576 * (p * (1.0 - p) / starts as f64).sqrt();
    let (tv_starts, tv_hits) = out.activation_stats.get(id("tv"), model("computer"));
    let (pc_starts, pc_hits) = out.activation_stats.get(id("computer"), model("computer"));
    let secs = t.elapsed().as_secs_f64();
    let ok = starts >= 5000
        && (rate - p).abs() <= half
        && tv_starts > 0
        && tv_hits == 0
        && pc_starts > 0
        && pc_hits == pc_starts
        && secs < 30.0;
    (
        ok,
        format!(
            "microwave|cooking {hits}/{starts} = {rate:.4} (0.64 +/- {half:.4}); computer|tv {tv_hits}/{tv_starts}; \
             computer|computer {pc_hits}/{pc_starts}; {secs:.2} s"
        ),
    )
}

fn scheduler_bounds() -> Outcome {
    // 25 households over Monday-Thursday: 100 household-days.
    let pop = fixtures::population(25, 4);
    let cal = calendar(date(2024, 4, 15), 4, 4);
    let engine = EngineConfig::default();
    let cat = fixtures::task_catalog();
    let trace = run_simulation(&pop, &cat, &cal, &engine, 4).unwrap();
    let again = run_simulation(&pop, &cat, &cal, &engine, 4).unwrap();
    let done: Vec<_> = trace.tasks.iter().filter(|t| t.2.state == TaskState::Done).collect();
    let in_bounds = done.iter().filter(|t| t.2.elapsed >= t.2.min_duration && t.2.elapsed <= t.2.max_duration).count();
    let mut pairs = 0;
    let mut differ = 0;
    for a in 0..trace.agents.len() {
        for d in 0..3 {
            pairs += 1;
            if trace.day_sequence(a, d) != trace.day_sequence(a, d + 1) {
                differ += 1;
            }
        }
    }
    let share = differ as f64 / pairs as f64;
    let identical = trace == again;
    let ok = !done.is_empty() && in_bounds == done.len() && share >= 0.9 && identical;
    (
        ok,
        format!(
            "{in_bounds}/{} completed tasks within [min, max]; {differ}/{pairs} = {:.1}% day pairs differ; replay identical: {identical}",
            done.len(),
            share * 100.0
        ),
    )
}

/// Minimum over all monotone couplings of the maximum pair distance.
fn frechet_brute(a: &[f64], b: &[f64]) -> f64 {
    fn walk(a: &[f64], b: &[f64], i: usize, j: usize, worst: f64, best: &mut f64) {
        let worst = worst.max((a[i] - b[j]).abs());
        if worst >= *best {
            return;
        }
        if i + 1 == a.len() && j + 1 == b.len() {
            *best = worst;
            return;
        }
        if i + 1 < a.len() {
            walk(a, b, i + 1, j, worst, best);
        }
        if j + 1 < b.len() {
            walk(a, b, i, j + 1, worst, best);
        }
        if i + 1 < a.len() && j + 1 < b.len() {
            walk(a, b, i + 1, j + 1, worst, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(a, b, 0, 0, 0.0, &mut best);
    best
}

fn metric_oracles() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut series = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(0.0..1000.0)).collect() };
    let mut frechet_ok = 0;
    let mut order_ok = 0;
    let mut pairs = Vec::new();
    for _ in 0..1000 {
        let (na, nb) = ((series(1)[0] as usize % 8) + 1, (series(1)[0] as usize % 8) + 1);
        pairs.push((series(na), series(nb)));
    }
    for (a, b) in &pairs {
        if frechet_discrete(a, b).unwrap() == frechet_brute(a, b) {
            frechet_ok += 1;
        }
        let n = a.len().min(b.len());
        if mae(&a[..n], &b[..n]).unwrap() <= rmse(&a[..n], &b[..n]).unwrap() + 1e-12 {
            order_ok += 1;
        }
    }
    let hand = [
        (vec![1.0, 2.0, 2.0, 1.0], vec![5.0, 6.0, 7.0, 6.0], 2.0 / 3.0),
        (vec![1.0, 2.0, 3.0], vec![3.0, 2.0, 1.0], 0.0),
        (vec![1.0, 1.0, 1.0], vec![2.0, 2.0, 2.0], 1.0),
        (vec![0.0, 1.0], vec![0.0, 0.0], 0.0),
    ];
    let mda_ok = hand.iter().all(|(a, b, want)| (mda(a, b).unwrap() - want).abs() < 1e-12);
    let secs = t.elapsed().as_secs_f64();
    let ok = frechet_ok == 1000 && order_ok == 1000 && mda_ok && secs < 10.0;
    (ok, format!("Frechet {frechet_ok}/1000 exact; mae <= rmse {order_ok}/1000; MDA hand cases {mda_ok}; {secs:.2} s"))
}

fn calibration() -> Outcome {
    let pop = fixtures::population(40, 8);
    let cat = fixtures::task_catalog();
    let engine = EngineConfig::default();
    let overlay = CalendarOverlay::default();
    let base = fixtures::appliance_config();
    let settings = CalibrationSettings { max_iterations: 10, ..CalibrationSettings::default() };
    let three = BTreeMap::from([
        ("tv".to_string(), 150.0),
        ("washing_machine".to_string(), 140.0),
        ("fridge".to_string(), 280.0),
    ]);
    let (_, r3) = calibrate_unit_powers(&pop, &cat, &engine, &overlay, &base, &three, &settings, 8).unwrap();
    let worst = r3.final_errors.values().fold(0.0_f64, |a, &b| a.max(b));
    let forced = BTreeMap::from([("tv".to_string(), 150.0)]);
    let (_, r1) = calibrate_unit_powers(&pop, &cat, &engine, &overlay, &base, &forced, &settings, 8).unwrap();
    let ok = r3.converged && worst <= 0.01 && r3.iterations <= 10 && r1.converged && r1.iterations == 1;
    (
        ok,
        format!(
            "3 categories: {} iteration(s), worst error {worst:.2e}; forced-only: {} iteration(s)",
            r3.iterations, r1.iterations
        ),
    )
}

fn window_energy(curve: &[f64], window: Period) -> f64 {
    curve.iter().enumerate().filter(|(m, _)| window.contains((*m % 1440) as u32)).map(|(_, v)| v / 60.0).sum()
}

fn paired(households: usize, days: u32, seed: u64, behavior: &EcoBehavior) -> (SimulationOutput, SimulationOutput) {
    let pop = fixtures::population(households, seed);
    let cat = fixtures::task_catalog();
    let cal = calendar(date(2024, 1, 8), days, seed);
    let engine = EngineConfig::default();
    let base = Simulation::new(&pop, &cat, &cal, &engine, fixtures::appliance_config(), seed);
    let (scen, _) = scenario_simulation(&base, &cat, behavior, 0).unwrap();
    (base.run().unwrap(), scen.run().unwrap())
}

fn cooking_shift() -> Outcome {
    let evening = Period::new(18 * 60, 20 * 60).unwrap();
    let shift = CookingShift { windows: vec![evening], ..CookingShift::default() };
    let (_, shifts) = apply_cooking_shift(&fixtures::task_catalog(), &shift).unwrap();
    let bounded = !shifts.is_empty() && shifts.iter().all(|s| s.minutes().abs() <= 45);
    let behavior = EcoBehavior { name: "cooking".into(), kind: BehaviorKind::CookingShift(shift), compliance: 1.0 };
    let (b, s) = paired(100, 7, 17, &behavior);
    let g = b.group_index("cooking").unwrap();
    let (wb, ws) = (window_energy(&b.group_load[g], evening), window_energy(&s.group_load[g], evening));
    let (eb, es): (f64, f64) = (b.group_load[g].iter().sum(), s.group_load[g].iter().sum());
    let conserved = (es - eb).abs() / eb;
    let cmp = compare_runs(&b, &s, &[evening], &category_map(fixtures::CATEGORIES)).unwrap();
    let ok = bounded && ws < wb && conserved <= 0.05;
    (
        ok,
        format!(
            "{} PPs shifted, max |shift| {} min; cooking 18-20h {:.0} -> {:.0} Wh/dwelling; daily cooking energy change {:+.2}%; \
             max evening gain {:.0} W (reference magnitude only)",
            shifts.len(),
            shifts.iter().map(|s| s.minutes().abs()).max().unwrap_or(0),
            wb,
            ws,
            (es - eb) / eb * 100.0,
            cmp.summary.max_window_gain_w
        ),
    )
}

fn mean_weekly_showers(out: &SimulationOutput, individuals: usize) -> f64 {
    out.showers.len() as f64 / individuals as f64
}

fn no_shower_peak() -> Outcome {
    let windows = default_peak_windows();
    let behavior = EcoBehavior {
        name: "no_shower".into(),
        kind: BehaviorKind::NoShowerPeak { windows: windows.clone() },
        compliance: 1.0,
    };
    // Shower counts: per-seed mean weekly showers per individual over 50 weeks.
    let (mut base_means, mut scen_means) = (Vec::new(), Vec::new());
    let mut in_window = 0;
    for seed in 0..50 {
        let pop = fixtures::population(20, 100 + seed);
        let (b, s) = paired(20, 7, 100 + seed, &behavior);
        base_means.push(mean_weekly_showers(&b, pop.individuals.len()));
        scen_means.push(mean_weekly_showers(&s, pop.individuals.len()));
        in_window += s.showers.iter().filter(|x| windows.iter().any(|w| w.contains(x.minute % 1440))).count();
    }
    let n = base_means.len() as f64;
    let mu = base_means.iter().sum::<f64>() / n;
    let sd = (base_means.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let half = 2.576 * sd * (2.0 / n).sqrt();
    let scen_mu = scen_means.iter().sum::<f64>() / n;
    let counts_ok = (scen_mu - mu).abs() <= half;

    let (b, s) = paired(100, 7, 23, &behavior);
    let g = b.group_index("dhw").unwrap();
    let heating = fixtures::appliance_config().dhw.heating_windows;
    let outside_heating = |curve: &[f64]| {
        curve.iter().enumerate().filter(|(m, _)| !heating.iter().any(|w| w.contains((*m % 1440) as u32))).all(|(_, v)| *v == 0.0)
    };
    let confined = outside_heating(&b.group_load[g]) && outside_heating(&s.group_load[g]);
    let deltas: Vec<f64> =
        windows.iter().map(|w| window_energy(&s.group_load[g], *w) - window_energy(&b.group_load[g], *w)).collect();
    let night = Period::new(22 * 60, 24 * 60).unwrap();
    let rebound = window_energy(&s.group_load[g], night) - window_energy(&b.group_load[g], night);
    let morning_only = deltas[0] < 0.0 && deltas[1..].iter().all(|d| *d >= 0.0);
    let ok = in_window == 0 && counts_ok && confined && morning_only;
    (
        ok,
        format!(
            "{in_window} showers in peak windows; weekly showers/person {scen_mu:.3} vs baseline {mu:.3} +/- {half:.3}; \
             DHW delta morning {:+.1} Wh, evening {:+.1} Wh, night rebound {rebound:+.1} Wh; heating confined: {confined}",
            deltas[0], deltas[1]
        ),
    )
}

fn dhw_balance() -> Outcome {
    let pop = fixtures::population(100, 9);
    let cal = calendar(date(2024, 7, 15), 7, 9);
    let engine = EngineConfig::default();
    let out = Simulation::new(&pop, &fixtures::task_catalog(), &cal, &engine, fixtures::appliance_config(), 9)
        .run()
        .unwrap();
    let ok = out.dhw_days > 0 && out.dhw_max_balance_error <= 0.01;
    (ok, format!("{} tank-days, worst daily balance error {:.2e}", out.dhw_days, out.dhw_max_balance_error))
}

fn performance() -> Outcome {
    let pop = fixtures::population(1000, 10);
    let cal = calendar(date(2024, 1, 1), 28, 10);
    let engine = EngineConfig::default();
    let sim = Simulation::new(&pop, &fixtures::task_catalog(), &cal, &engine, fixtures::appliance_config(), 10);
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let t = Instant::now();
    let one = single.install(|| sim.run()).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let cpus = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let mut ok = secs <= 120.0;
    let scaling = if cpus >= 2 {
        let workers = cpus.min(4);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap();
        let t = Instant::now();
        let many = pool.install(|| sim.run()).unwrap();
        let par = t.elapsed().as_secs_f64();
        let efficiency = secs / par / workers as f64;
        ok &= many.mean_load == one.mean_load && efficiency >= 0.6;
        format!("{workers} workers {par:.1} s, parallel efficiency {:.0}%, identical output", efficiency * 100.0)
    } else {
        "scaling not measured: 1 CPU available".to_string()
    };
    (ok, format!("1000 households x 28 days single-threaded in {secs:.1} s; {scaling}"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("X-band recovery", x_band_recovery),
        ("band minimality and coverage", band_minimality),
        ("PU fidelity", pu_fidelity),
        ("scheduler bounds and variability", scheduler_bounds),
        ("metric oracles", metric_oracles),
        ("calibration convergence", calibration),
        ("cooking-shift scenario", cooking_shift),
        ("no-shower scenario", no_shower_peak),
        ("DHW balance", dhw_balance),
        ("performance budget", performance),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (ok, detail) = match std::panic::catch_unwind(run) {
            Ok(r) => r,
            Err(_) => (false, "panicked".to_string()),
        };
        if !ok {
            failed += 1;
        }
        println!("criterion {:>2} {name}: {} ({detail})", i + 1, if ok { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
