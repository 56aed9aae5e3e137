use std::fs::File;
use std::io::{BufWriter, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use loadsim::appliance::{calibrate_unit_powers, write_calibration_report, LoadCurve};
use loadsim::calendar::format_timestamp;
use loadsim::config::{Inputs, RunConfig};
use loadsim::metrics::{compare, reduce_to_average_week};
use loadsim::popsynth::write_population;
use loadsim::scenario::{compare_runs, default_peak_windows, scenario_simulation, BehaviorKind};
use loadsim::simulation::SimulationOutput;
use loadsim::tusdata::write_catalog;

#[derive(Parser)]
#[command(name = "loadsim", version, about = "Agent-based residential activity and load simulator")]
struct Cli {
    /// Run configuration file.
    #[arg(long, short, global = true, env = "LOADSIM_CONFIG", default_value = "loadsim.toml")]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the population and write its four CSVs.
    Synth,
    /// Extract the task catalog from time-use diaries.
    Extract,
    /// Simulate activity and load over the horizon.
    Simulate,
    /// Scale unit powers to annual energy targets.
    Calibrate,
    /// Compare the model curve against the reference curve.
    Metrics,
    /// Paired baseline/scenario runs for every configured eco-behavior.
    Scenario,
    /// Write a self-contained example project into a directory.
    Init { dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Command::Init { dir } = &cli.command {
        init(dir, cli.seed.unwrap_or(42))?;
        return Ok(ExitCode::SUCCESS);
    }
    let mut cfg = RunConfig::load(&cli.config).with_context(|| format!("loading {}", cli.config.display()))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir).with_context(|| format!("creating {}", cfg.output_dir.display()))?;
    let code = match cli.command {
        Command::Synth => synth(&cfg)?,
        Command::Extract => extract(&cfg)?,
        Command::Simulate => simulate(&cfg)?,
        Command::Calibrate => calibrate(&cfg)?,
        Command::Metrics => metrics(&cfg)?,
        Command::Scenario => scenario(&cfg)?,
        Command::Init { .. } => unreachable!(),
    };
    write_manifest(&cfg.output_dir)?;
    Ok(code)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn synth(cfg: &RunConfig) -> Result<ExitCode> {
    let pop = cfg.population()?;
    let paths = write_population(&pop, &cfg.output_dir.join("population"))?;
    eprintln!(
        "synth: {} households, {} individuals -> {}",
        pop.households.len(),
        pop.individuals.len(),
        paths.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn extract(cfg: &RunConfig) -> Result<ExitCode> {
    let catalog = cfg.extract_catalog()?;
    let path = cfg.output_dir.join("catalog.csv");
    write_catalog(&catalog, create(&path)?)?;
    eprintln!("extract: {} task specs at X = {} -> {}", catalog.len(), cfg.extract.x, path.display());
    Ok(ExitCode::SUCCESS)
}

fn write_groups(out: &SimulationOutput, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["timestamp".to_string()];
    header.extend(out.groups.iter().map(|g| format!("{g}_w")));
    w.write_record(&header)?;
    for m in 0..out.minutes as usize {
        let mut row = vec![format_timestamp(out.start + chrono::Duration::minutes(m as i64))];
        row.extend(out.group_load.iter().map(|g| format!("{:.3}", g[m])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn simulate(cfg: &RunConfig) -> Result<ExitCode> {
    let inputs = Inputs::load(cfg)?;
    let t = Instant::now();
    eprintln!(
        "simulate: {} households x {} days",
        inputs.population.households.len(),
        inputs.calendar.days.len()
    );
    let out = inputs.run(cfg)?;
    eprintln!("simulate: done in {:.2} s", t.elapsed().as_secs_f64());
    let curve = out.load_curve();
    curve.save(&cfg.output_dir.join("load_1min.csv"))?;
    curve.resample(30)?.save(&cfg.output_dir.join("load_30min.csv"))?;
    write_groups(&out, &cfg.output_dir.join("groups_1min.csv"))?;
    let mut w = csv::Writer::from_writer(create(&cfg.output_dir.join("showers.csv"))?);
    w.write_record(["household_id", "individual_id", "timestamp"])?;
    for s in &out.showers {
        let ts = out.start + chrono::Duration::minutes(i64::from(s.minute));
        w.write_record([s.household_id.to_string(), s.individual_id.to_string(), format_timestamp(ts)])?;
    }
    w.flush()?;
    if let Some(trace) = &out.trace {
        loadsim::activity::write_trace(trace, create(&cfg.output_dir.join("trace.csv"))?)?;
    }
    eprintln!(
        "simulate: mean load {:.1} W, {} showers, tank balance error {:.2e}",
        curve.values.iter().sum::<f64>() / curve.len().max(1) as f64,
        out.showers.len(),
        out.dhw_max_balance_error
    );
    Ok(ExitCode::SUCCESS)
}

fn calibrate(cfg: &RunConfig) -> Result<ExitCode> {
    if cfg.calibrate.targets.is_empty() {
        bail!("calibrate.targets is empty");
    }
    let pop = cfg.population()?;
    let catalog = cfg.catalog()?;
    let (calibrated, report) = calibrate_unit_powers(
        &pop,
        &catalog,
        &cfg.engine,
        &cfg.overlay()?,
        &cfg.appliances()?,
        &cfg.calibrate.targets,
        &cfg.calibration_settings(),
        cfg.seed,
    )?;
    let toml_path = cfg.output_dir.join("appliances_calibrated.toml");
    std::fs::write(&toml_path, calibrated.to_toml()).with_context(|| format!("writing {}", toml_path.display()))?;
    write_calibration_report(&report, create(&cfg.output_dir.join("calibration_report.csv"))?)?;
    for (cat, err) in &report.final_errors {
        eprintln!("calibrate: {cat}: relative error {err:.4}");
    }
    if report.converged {
        eprintln!("calibrate: converged after {} iteration(s)", report.iterations);
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("calibrate: not converged after {} iteration(s)", report.iterations);
        Ok(ExitCode::from(2))
    }
}

fn metrics(cfg: &RunConfig) -> Result<ExitCode> {
    let reference_path = cfg.paths.reference.as_ref().context("paths.reference is not set")?;
    let model_path = cfg.metrics.model.clone().unwrap_or_else(|| cfg.output_dir.join("load_1min.csv"));
    let model = LoadCurve::load(&model_path)?;
    let reference = LoadCurve::load(reference_path)?;
    let report = match cfg.month_start()? {
        Some(month) => {
            let m = reduce_to_average_week(&model, month)?;
            let r = reduce_to_average_week(&reference, month)?;
            m.write_csv(create(&cfg.output_dir.join("average_week_model.csv"))?)?;
            r.write_csv(create(&cfg.output_dir.join("average_week_reference.csv"))?)?;
            compare(&m.values, &r.values)?
        }
        None => {
            let m = model.resample(30)?;
            let r = reference.resample(30)?;
            if m.start != r.start {
                bail!("model starts at {} but reference at {}", format_timestamp(m.start), format_timestamp(r.start));
            }
            compare(&m.values, &r.values)?
        }
    };
    report.write_csv(create(&cfg.output_dir.join("metrics.csv"))?)?;
    for (name, v, unit) in report.rows() {
        eprintln!("metrics: {name} = {v:.4} {unit}");
    }
    Ok(ExitCode::SUCCESS)
}

fn scenario(cfg: &RunConfig) -> Result<ExitCode> {
    let behaviors = cfg.behaviors()?;
    let inputs = Inputs::load(cfg)?;
    let map = cfg.category_map();
    let base_sim = inputs.simulation(cfg);
    eprintln!("scenario: baseline run");
    let baseline = base_sim.run()?;
    let mut runs = Vec::new();
    if behaviors.is_empty() {
        runs.push(("baseline".to_string(), default_peak_windows(), baseline.clone(), Vec::new()));
    }
    for (i, b) in behaviors.iter().enumerate() {
        eprintln!("scenario: {} (compliance {})", b.name, b.compliance);
        let (sim, shifts) = scenario_simulation(&base_sim, &inputs.catalog, b, i as u64)?;
        let windows = match &b.kind {
            BehaviorKind::CookingShift(c) => c.windows.clone(),
            BehaviorKind::NoShowerPeak { windows } => windows.clone(),
        };
        runs.push((b.name.clone(), windows, sim.run()?, shifts));
    }
    for (name, windows, out, shifts) in &runs {
        let cmp = compare_runs(&baseline, out, windows, &map)?;
        let dir = &cfg.output_dir;
        cmp.write_profile_csv(create(&dir.join(format!("scenario_{name}_profile.csv")))?)?;
        cmp.write_minutes_csv(create(&dir.join(format!("scenario_{name}_minutes.csv")))?)?;
        cmp.write_summary_csv(create(&dir.join(format!("scenario_{name}_summary.csv")))?)?;
        if !shifts.is_empty() {
            let mut w = csv::Writer::from_writer(create(&dir.join(format!("scenario_{name}_shifts.csv")))?);
            w.write_record(["task", "type_key", "day_type", "from", "to", "shift_minutes"])?;
            for s in shifts {
                w.write_record([
                    s.task.clone(),
                    s.type_key.clone(),
                    s.day_type.clone(),
                    String::from(s.from),
                    String::from(s.to),
                    s.minutes().to_string(),
                ])?;
            }
            w.flush()?;
        }
        let s = cmp.summary;
        eprintln!(
            "scenario: {name}: max window gain {:.1} W, window energy {:+.1} Wh, displaced {:+.1} Wh, dropped {:+.1} Wh",
            s.max_window_gain_w, s.window_energy_delta_wh, s.energy_displaced_wh, s.energy_dropped_wh
        );
    }
    Ok(ExitCode::SUCCESS)
}

/// `manifest.csv`: every file under `dir` with its size and SHA-256.
fn write_manifest(dir: &Path) -> Result<()> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
        for entry in std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
            let path = entry?.path();
            if path.is_dir() {
                walk(&path, out)?;
            } else {
                out.push(path);
            }
        }
        Ok(())
    }
    let mut files = Vec::new();
    walk(dir, &mut files)?;
    let manifest = dir.join("manifest.csv");
    files.retain(|p| *p != manifest);
    files.sort();
    let mut w = csv::Writer::from_writer(create(&manifest)?);
    w.write_record(["path", "bytes", "sha256"])?;
    for path in files {
        let mut bytes = Vec::new();
        File::open(&path)?.read_to_end(&mut bytes)?;
        let rel = path.strip_prefix(dir).unwrap_or(&path).to_string_lossy().replace('\\', "/");
        let hash: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        w.write_record([rel, bytes.len().to_string(), hash])?;
    }
    w.flush()?;
    Ok(())
}

fn init(dir: &Path, seed: u64) -> Result<()> {
    use loadsim::fixtures;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let write = |name: &str, text: &str| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    };
    write("population.toml", fixtures::POPULATION_SPEC)?;
    write("appliances.toml", fixtures::APPLIANCES)?;
    write("calendar.toml", &toml::to_string(&loadsim::calendar::CalendarOverlay::default())?)?;

    eprintln!("init: synthesizing diaries");
    let start = chrono::NaiveDate::from_ymd_opt(2023, 3, 6).expect("valid date");
    let records = fixtures::synthetic_tus(80, start, 14, seed.wrapping_add(1))?;
    loadsim::tusdata::write_tus(&records, create(&dir.join("tus.csv"))?)?;

    eprintln!("init: simulating a reference curve");
    let pop = fixtures::population(60, seed.wrapping_add(2));
    let cal = loadsim::calendar::Calendar::build(
        chrono::NaiveDate::from_ymd_opt(2024, 1, 1).expect("valid date"),
        35,
        &Default::default(),
        seed.wrapping_add(2),
    );
    let engine = Default::default();
    let reference = loadsim::simulation::Simulation::new(
        &pop,
        &fixtures::task_catalog(),
        &cal,
        &engine,
        fixtures::appliance_config(),
        seed.wrapping_add(2),
    )
    .run()?;
    reference.load_curve().save(&dir.join("reference.csv"))?;

    let mut config = format!(
        r#"seed = {seed}
output_dir = "out"

[paths]
population_spec = "population.toml"
tus = "tus.csv"
appliances = "appliances.toml"
calendar = "calendar.toml"
reference = "reference.csv"

[synth]
households = 100

[extract]
x = 90
household_level = ["cooking", "laundry"]
"#
    );
    for s in fixtures::task_selectors() {
        config.push_str(&format!("\n[[extract.task]]\ntask = \"{}\"\nactivity = \"{}\"\n", s.task, s.activity));
        if let Some(w) = s.window {
            config.push_str(&format!("window = \"{}\"\n", String::from(w)));
        }
    }
    config.push_str(
        r#"
[simulate]
start = "2024-01-01"
days = 35

[calibrate]
max_iterations = 10
tolerance = 0.01
year = 2024
targets = { tv = 120.0, washing_machine = 160.0, fridge = 300.0 }

[metrics]
month = "2024-01"

[[scenario]]
kind = "cooking_shift"
name = "cooking_shift"
windows = ["18:00-20:00"]
max_shift = 45
chain_minutes = 30

[[scenario]]
kind = "no_shower_peak"
name = "no_shower_peak"
windows = ["08:00-13:00", "18:00-20:00"]

[categories]
"#,
    );
    for (code, cat) in fixtures::CATEGORIES {
        config.push_str(&format!("{code} = \"{cat}\"\n"));
    }
    write("loadsim.toml", &config)?;
    eprintln!("init: wrote {}", dir.join("loadsim.toml").display());
    Ok(())
}
