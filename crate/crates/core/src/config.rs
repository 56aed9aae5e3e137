//! Run configuration and the pipeline stages built on it.
//!
//! Relative paths in the file are resolved against the file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Deserialize;

use crate::activity::EngineConfig;
use crate::appliance::{ApplianceConfig, CalibrationSettings};
use crate::calendar::{Calendar, CalendarOverlay};
use crate::error::{toml_error, Error, Result};
use crate::popsynth::{load_population, load_population_spec, synthesize_population, Population, PopulationSpec};
use crate::scenario::{BehaviorToml, EcoBehavior};
use crate::simulation::{Simulation, SimulationOptions, SimulationOutput};
use crate::tusdata::{
    load_catalog, parse_tus, CollectivityWeighting, ExtractConfig, Extractor, TaskCatalog, TaskSelector,
    VariabilityParam,
};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub population_spec: PathBuf,
    /// Directory of population CSVs; synthesized from the spec when absent.
    pub population: Option<PathBuf>,
    pub tus: Option<PathBuf>,
    /// Prebuilt catalog; takes precedence over `tus`.
    pub catalog: Option<PathBuf>,
    pub appliances: PathBuf,
    pub calendar: Option<PathBuf>,
    pub reference: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub households: usize,
}

impl Default for SynthSection {
    fn default() -> Self {
        SynthSection { households: 100 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractSection {
    /// Variability X in percent.
    pub x: f64,
    pub min_episodes: usize,
    pub weighting: CollectivityWeighting,
    pub household_level: Vec<String>,
    /// Tasks to extract; one per activity code found in the diaries when empty.
    pub task: Vec<TaskSelector>,
    /// Diary codes that are not tasks.
    pub ignore: Vec<String>,
}

impl Default for ExtractSection {
    fn default() -> Self {
        let d = ExtractConfig::default();
        ExtractSection {
            x: d.variability.percent(),
            min_episodes: d.min_episodes,
            weighting: d.weighting,
            household_level: d.household_level,
            task: Vec::new(),
            ignore: vec!["home".into(), "away".into()],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub start: NaiveDate,
    pub days: u32,
    #[serde(default = "default_chunk")]
    pub chunk_size: usize,
    /// Also write the per-agent activity trace.
    #[serde(default)]
    pub trace: bool,
}

fn default_chunk() -> usize {
    32
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrateSection {
    /// Annual kWh per dwelling by appliance category.
    pub targets: BTreeMap<String, f64>,
    pub max_iterations: u32,
    pub tolerance: f64,
    pub year: i32,
}

impl Default for CalibrateSection {
    fn default() -> Self {
        let d = CalibrationSettings::default();
        CalibrateSection {
            targets: BTreeMap::new(),
            max_iterations: d.max_iterations,
            tolerance: d.tolerance,
            year: d.year,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    /// Model curve; defaults to the simulated `load_1min.csv`.
    pub model: Option<PathBuf>,
    /// `YYYY-MM`: compare average weeks of this month instead of raw slots.
    pub month: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    pub paths: Paths,
    #[serde(default)]
    pub synth: SynthSection,
    #[serde(default)]
    pub extract: ExtractSection,
    #[serde(default)]
    pub engine: EngineConfig,
    pub simulate: SimulateSection,
    #[serde(default)]
    pub calibrate: CalibrateSection,
    #[serde(default)]
    pub metrics: MetricsSection,
    #[serde(default)]
    pub scenario: Vec<BehaviorToml>,
    /// Activity code to report category.
    #[serde(default)]
    pub categories: BTreeMap<String, String>,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| toml_error(text, e))?;
        cfg.resolve(base);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base).map_err(|e| e.in_file(path))
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        let p = &mut self.paths;
        fix(&mut p.population_spec);
        fix(&mut p.appliances);
        for x in [&mut p.population, &mut p.tus, &mut p.catalog, &mut p.calendar, &mut p.reference].into_iter().flatten() {
            fix(x);
        }
        if let Some(m) = &mut self.metrics.model {
            fix(m);
        }
    }

    /// Checks values and that every referenced input exists.
    pub fn validate(&self) -> Result<()> {
        if self.simulate.days < 1 {
            return Err(Error::validation("simulate.days must be >= 1"));
        }
        if self.synth.households == 0 && self.paths.population.is_none() {
            return Err(Error::validation("synth.households must be >= 1"));
        }
        VariabilityParam::new(self.extract.x)?;
        let p = &self.paths;
        let required = [Some(&p.population_spec), Some(&p.appliances), p.tus.as_ref(), p.catalog.as_ref(), p.calendar.as_ref()];
        for path in required.into_iter().flatten() {
            if !path.exists() {
                return Err(Error::validation(format!("{} does not exist", path.display())));
            }
        }
        if let Some(dir) = &p.population {
            if !dir.is_dir() {
                return Err(Error::validation(format!("{} is not a directory", dir.display())));
            }
        }
        self.behaviors()?;
        Ok(())
    }

    pub fn behaviors(&self) -> Result<Vec<EcoBehavior>> {
        self.scenario.iter().cloned().map(EcoBehavior::try_from).collect()
    }

    pub fn variability(&self) -> Result<VariabilityParam> {
        VariabilityParam::new(self.extract.x)
    }

    pub fn population_spec(&self) -> Result<PopulationSpec> {
        load_population_spec(&self.paths.population_spec)
    }

    pub fn population(&self) -> Result<Population> {
        match &self.paths.population {
            Some(dir) => load_population(dir),
            None => Ok(synthesize_population(&self.population_spec()?, self.synth.households, self.seed)),
        }
    }

    pub fn overlay(&self) -> Result<CalendarOverlay> {
        match &self.paths.calendar {
            Some(p) => CalendarOverlay::load(p),
            None => Ok(CalendarOverlay::default()),
        }
    }

    pub fn calendar(&self) -> Result<Calendar> {
        Ok(Calendar::build(self.simulate.start, self.simulate.days, &self.overlay()?, self.seed))
    }

    pub fn appliances(&self) -> Result<ApplianceConfig> {
        ApplianceConfig::load(&self.paths.appliances)
    }

    /// Catalog from diaries with the configured X, covering every type of the
    /// configured population.
    pub fn extract_catalog(&self) -> Result<TaskCatalog> {
        let tus = self.paths.tus.as_ref().ok_or_else(|| Error::validation("paths.tus is not set"))?;
        let records = parse_tus(tus, None)?;
        let selectors = if self.extract.task.is_empty() {
            let mut codes: Vec<&str> = records
                .iter()
                .flat_map(|r| r.episodes.iter().map(|e| e.activity.as_str()))
                .filter(|c| !self.extract.ignore.iter().any(|i| i == c))
                .collect();
            codes.sort_unstable();
            codes.dedup();
            codes.into_iter().map(TaskSelector::activity).collect()
        } else {
            self.extract.task.clone()
        };
        let config = ExtractConfig {
            variability: self.variability()?,
            min_episodes: self.extract.min_episodes,
            weighting: self.extract.weighting,
            household_level: self.extract.household_level.clone(),
            age_bands: self.population_spec()?.age_bands,
        };
        let mut keys: Vec<String> = self.population()?.individuals.into_iter().map(|i| i.type_key).collect();
        keys.sort();
        keys.dedup();
        let specs = Extractor::new(&records, config).build_catalog_for(&selectors, &keys);
        if specs.is_empty() {
            return Err(Error::NoData(format!("no task could be extracted from {}", tus.display())));
        }
        TaskCatalog::new(specs)
    }

    /// Prebuilt catalog when given, extraction otherwise.
    pub fn catalog(&self) -> Result<TaskCatalog> {
        match &self.paths.catalog {
            Some(p) => load_catalog(p),
            None => self.extract_catalog(),
        }
    }

    pub fn simulation_options(&self) -> SimulationOptions {
        SimulationOptions { dwelling_curves: false, trace: self.simulate.trace, chunk_size: self.simulate.chunk_size }
    }

    pub fn calibration_settings(&self) -> CalibrationSettings {
        CalibrationSettings {
            max_iterations: self.calibrate.max_iterations,
            tolerance: self.calibrate.tolerance,
            year: self.calibrate.year,
            ..CalibrationSettings::default()
        }
    }

    pub fn category_map(&self) -> BTreeMap<String, String> {
        if self.categories.is_empty() {
            crate::scenario::category_map(crate::fixtures::CATEGORIES)
        } else {
            self.categories.clone()
        }
    }

    pub fn month_start(&self) -> Result<Option<NaiveDate>> {
        self.metrics
            .month
            .as_deref()
            .map(|m| {
                NaiveDate::parse_from_str(&format!("{m}-01"), "%Y-%m-%d")
                    .map_err(|_| Error::parse(format!("metrics.month `{m}` is not YYYY-MM")))
            })
            .transpose()
    }
}

/// Inputs of a simulation, loaded once.
pub struct Inputs {
    pub population: Population,
    pub catalog: TaskCatalog,
    pub calendar: Calendar,
    pub appliances: ApplianceConfig,
}

impl Inputs {
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        Ok(Inputs {
            population: cfg.population()?,
            catalog: cfg.catalog()?,
            calendar: cfg.calendar()?,
            appliances: cfg.appliances()?,
        })
    }

    pub fn simulation<'a>(&'a self, cfg: &'a RunConfig) -> Simulation<'a> {
        Simulation::new(&self.population, &self.catalog, &self.calendar, &cfg.engine, self.appliances.clone(), cfg.seed)
            .with_options(cfg.simulation_options())
    }

    pub fn run(&self, cfg: &RunConfig) -> Result<SimulationOutput> {
        self.simulation(cfg).run()
    }
}
