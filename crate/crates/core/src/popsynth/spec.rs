use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::Rng;
use serde::Deserialize;

use super::{AgeBands, Employment};
use crate::error::{toml_error, Error, Result};

const SUM_TOLERANCE: f64 = 1e-9;

/// Attributes the synthesizer knows how to sample, in sampling order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Attr {
    HouseholdSize,
    FamilyType,
    EnergyTariff,
    Absence,
    MemberRole,
    Gender,
    Age,
    Employment,
    Pcs,
    Income,
    DwellingType,
    Insulation,
    Location,
    FloorArea,
}

impl Attr {
    pub const ALL: [Attr; 14] = [
        Attr::HouseholdSize,
        Attr::FamilyType,
        Attr::EnergyTariff,
        Attr::Absence,
        Attr::MemberRole,
        Attr::Gender,
        Attr::Age,
        Attr::Employment,
        Attr::Pcs,
        Attr::Income,
        Attr::DwellingType,
        Attr::Insulation,
        Attr::Location,
        Attr::FloorArea,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Attr::HouseholdSize => "household_size",
            Attr::FamilyType => "family_type",
            Attr::EnergyTariff => "energy_tariff",
            Attr::Absence => "absence",
            Attr::MemberRole => "member_role",
            Attr::Gender => "gender",
            Attr::Age => "age",
            Attr::Employment => "employment",
            Attr::Pcs => "pcs",
            Attr::Income => "income",
            Attr::DwellingType => "dwelling_type",
            Attr::Insulation => "insulation",
            Attr::Location => "location",
            Attr::FloorArea => "floor_area",
        }
    }

    pub fn from_name(name: &str) -> Option<Attr> {
        Attr::ALL.into_iter().find(|a| a.name() == name)
    }

    fn required(self) -> bool {
        matches!(
            self,
            Attr::HouseholdSize
                | Attr::Gender
                | Attr::Age
                | Attr::Employment
                | Attr::DwellingType
                | Attr::Insulation
                | Attr::Location
                | Attr::FloorArea
        )
    }

    /// Category used when an optional attribute has no definition.
    fn default_category(self) -> &'static str {
        match self {
            Attr::FamilyType | Attr::Pcs | Attr::Income => "unknown",
            Attr::EnergyTariff => "base",
            Attr::Absence => "none",
            _ => "",
        }
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

/// Categorical distribution over labelled categories.
#[derive(Debug, Clone, PartialEq)]
pub struct Categorical {
    pub categories: Vec<String>,
    pub probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Categorical {
    /// Validates the sum (within 1e-9) and normalizes exactly.
    pub fn new(what: &str, entries: Vec<(String, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::validation(format!("distribution `{what}` is empty")));
        }
        if let Some((c, p)) = entries.iter().find(|(_, p)| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::validation(format!("distribution `{what}`: `{c}` has probability {p}")));
        }
        let sum: f64 = entries.iter().map(|(_, p)| p).sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::validation(format!("distribution `{what}` sums to {sum}, expected 1")));
        }
        let (categories, mut probs): (Vec<_>, Vec<_>) = entries.into_iter().unzip();
        probs.iter_mut().for_each(|p| *p /= sum);
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Categorical { categories, probs, cumulative })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.cumulative.len() - 1)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == label)
    }

    pub fn probability(&self, label: &str) -> f64 {
        self.index_of(label).map(|i| self.probs[i]).unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conditional {
    pub attribute: Attr,
    pub parents: Vec<Attr>,
    /// Keyed by parent category labels joined with `|`.
    pub table: HashMap<String, Categorical>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ownership {
    pub probability: f64,
    pub given: Option<Attr>,
    pub table: BTreeMap<String, f64>,
}

impl Ownership {
    pub fn probability_for(&self, given_label: Option<&str>) -> f64 {
        given_label
            .and_then(|l| self.table.get(l).copied())
            .unwrap_or(self.probability)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSpec {
    pub marginals: BTreeMap<Attr, Categorical>,
    pub conditionals: BTreeMap<Attr, Conditional>,
    pub appliance_ownership: BTreeMap<String, Ownership>,
    pub age_bands: AgeBands,
    pub adult_age: u32,
    pub floor_area_per_extra_member: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    #[serde(default)]
    age_bands: Option<Vec<u32>>,
    #[serde(default = "default_adult_age")]
    adult_age: u32,
    #[serde(default = "default_area_step")]
    floor_area_per_extra_member: f64,
    #[serde(default)]
    marginals: BTreeMap<String, toml::Table>,
    #[serde(default)]
    conditionals: Vec<RawConditional>,
    #[serde(default)]
    appliances: BTreeMap<String, RawOwnership>,
}

fn default_adult_age() -> u32 {
    18
}

fn default_area_step() -> f64 {
    15.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConditional {
    attribute: String,
    parents: Vec<String>,
    table: BTreeMap<String, toml::Table>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOwnership {
    probability: f64,
    #[serde(default)]
    given: Option<String>,
    #[serde(default)]
    table: BTreeMap<String, f64>,
}

fn table_to_entries(what: &str, table: &toml::Table) -> Result<Vec<(String, f64)>> {
    table
        .iter()
        .map(|(k, v)| {
            let p = v
                .as_float()
                .or_else(|| v.as_integer().map(|i| i as f64))
                .ok_or_else(|| Error::parse(format!("`{what}.{k}` is not a number")))?;
            Ok((k.clone(), p))
        })
        .collect()
}

pub fn load_population_spec(path: &Path) -> Result<PopulationSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    PopulationSpec::from_toml(&text).map_err(|e| e.in_file(path))
}

/// Parses `lo-hi` (inclusive) range labels used by `age` and `floor_area`.
pub(crate) fn parse_range(label: &str) -> Option<(f64, f64)> {
    let (a, b) = label.split_once('-')?;
    let lo: f64 = a.trim().parse().ok()?;
    let hi: f64 = b.trim().parse().ok()?;
    (lo >= 0.0 && hi >= lo).then_some((lo, hi))
}

impl PopulationSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawSpec = toml::from_str(text).map_err(|e| toml_error(text, e))?;

        let mut marginals = BTreeMap::new();
        for (name, table) in &raw.marginals {
            let attr = Attr::from_name(name)
                .filter(|a| *a != Attr::MemberRole)
                .ok_or_else(|| Error::validation(format!("unknown attribute `{name}` in marginals")))?;
            marginals.insert(attr, Categorical::new(name, table_to_entries(name, table)?)?);
        }

        let mut conditionals = BTreeMap::new();
        for c in &raw.conditionals {
            let attribute = Attr::from_name(&c.attribute)
                .filter(|a| *a != Attr::MemberRole)
                .ok_or_else(|| Error::validation(format!("unknown conditional attribute `{}`", c.attribute)))?;
            if c.parents.is_empty() {
                return Err(Error::validation(format!("conditional `{}` has no parents", c.attribute)));
            }
            let mut parents = Vec::with_capacity(c.parents.len());
            for p in &c.parents {
                let parent = Attr::from_name(p).ok_or_else(|| {
                    Error::validation(format!("conditional `{}` references unknown parent `{p}`", c.attribute))
                })?;
                if parent >= attribute {
                    return Err(Error::validation(format!(
                        "conditional `{}`: parent `{p}` is not sampled before it",
                        c.attribute
                    )));
                }
                parents.push(parent);
            }
            let mut table = HashMap::new();
            for (key, row) in &c.table {
                if key.split('|').count() != parents.len() {
                    return Err(Error::validation(format!(
                        "conditional `{}`: row `{key}` does not have {} parent values",
                        c.attribute,
                        parents.len()
                    )));
                }
                let what = format!("{}[{key}]", c.attribute);
                table.insert(key.clone(), Categorical::new(&what, table_to_entries(&what, row)?)?);
            }
            if conditionals.insert(attribute, Conditional { attribute, parents, table }).is_some() {
                return Err(Error::validation(format!("duplicate conditional for `{}`", c.attribute)));
            }
        }

        let mut appliance_ownership = BTreeMap::new();
        for (cat, o) in raw.appliances {
            let check = |p: f64, what: &str| {
                if (0.0..=1.0).contains(&p) {
                    Ok(())
                } else {
                    Err(Error::validation(format!("ownership `{cat}`{what} = {p} is outside [0,1]")))
                }
            };
            check(o.probability, "")?;
            for (k, p) in &o.table {
                check(*p, &format!("[{k}]"))?;
            }
            let given = match &o.given {
                None => None,
                Some(g) => Some(Attr::from_name(g).ok_or_else(|| {
                    Error::validation(format!("ownership `{cat}` conditioned on unknown attribute `{g}`"))
                })?),
            };
            appliance_ownership.insert(cat, Ownership { probability: o.probability, given, table: o.table });
        }

        let spec = PopulationSpec {
            marginals,
            conditionals,
            appliance_ownership,
            age_bands: match raw.age_bands {
                Some(edges) => AgeBands::new(edges)?,
                None => AgeBands::default(),
            },
            adult_age: raw.adult_age,
            floor_area_per_extra_member: raw.floor_area_per_extra_member,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn is_defined(&self, attr: Attr) -> bool {
        attr == Attr::MemberRole || self.marginals.contains_key(&attr) || self.conditionals.contains_key(&attr)
    }

    /// Every category an attribute can take.
    pub fn categories(&self, attr: Attr) -> Vec<String> {
        if attr == Attr::MemberRole {
            return vec!["head".into(), "member".into()];
        }
        let mut out: Vec<String> = Vec::new();
        if let Some(m) = self.marginals.get(&attr) {
            out.extend(m.categories.iter().cloned());
        }
        if let Some(c) = self.conditionals.get(&attr) {
            let mut keys: Vec<_> = c.table.keys().collect();
            keys.sort();
            for k in keys {
                for cat in &c.table[k].categories {
                    if !out.contains(cat) {
                        out.push(cat.clone());
                    }
                }
            }
        }
        if out.is_empty() && !attr.required() {
            out.push(attr.default_category().to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        for attr in Attr::ALL {
            if attr.required() && !self.is_defined(attr) {
                return Err(Error::validation(format!("attribute `{}` has no distribution", attr.name())));
            }
        }
        for c in self.conditionals.values() {
            for p in &c.parents {
                if !self.is_defined(*p) {
                    return Err(Error::validation(format!(
                        "conditional `{}` references parent `{}` which has no distribution",
                        c.attribute.name(),
                        p.name()
                    )));
                }
            }
            // Combinations missing from the table fall back to the marginal.
            if !self.marginals.contains_key(&c.attribute) {
                let combos = self.parent_combinations(&c.parents);
                if let Some(missing) = combos.iter().find(|k| !c.table.contains_key(*k)) {
                    return Err(Error::validation(format!(
                        "conditional `{}` lacks row `{missing}` and has no marginal fallback",
                        c.attribute.name()
                    )));
                }
            }
        }
        for label in self.categories(Attr::HouseholdSize) {
            match label.parse::<usize>() {
                Ok(n) if (1..=12).contains(&n) => {}
                _ => {
                    return Err(Error::validation(format!(
                        "household_size category `{label}` is not an integer in 1..=12"
                    )))
                }
            }
        }
        for label in self.categories(Attr::Employment) {
            label.parse::<Employment>().map_err(|_| {
                Error::validation(format!("employment category `{label}` is not active/inactive/retired/student"))
            })?;
        }
        for attr in [Attr::Age, Attr::FloorArea] {
            for label in self.categories(attr) {
                let (lo, _) = parse_range(&label).ok_or_else(|| {
                    Error::validation(format!("{} category `{label}` is not a `lo-hi` range", attr.name()))
                })?;
                if attr == Attr::FloorArea && lo <= 0.0 {
                    return Err(Error::validation(format!("floor_area range `{label}` must be positive")));
                }
            }
        }
        for (cat, o) in &self.appliance_ownership {
            if let Some(g) = o.given {
                if !self.is_defined(g) || g == Attr::MemberRole || (Attr::MemberRole..=Attr::Income).contains(&g) {
                    return Err(Error::validation(format!(
                        "ownership `{cat}` must be conditioned on a household or dwelling attribute, got `{}`",
                        g.name()
                    )));
                }
            }
        }
        if !(self.floor_area_per_extra_member >= 0.0) {
            return Err(Error::validation("floor_area_per_extra_member must be >= 0"));
        }
        Ok(())
    }

    fn parent_combinations(&self, parents: &[Attr]) -> Vec<String> {
        let mut combos = vec![String::new()];
        for (i, p) in parents.iter().enumerate() {
            let cats = self.categories(*p);
            combos = combos
                .iter()
                .flat_map(|prefix| {
                    cats.iter().map(move |c| if i == 0 { c.clone() } else { format!("{prefix}|{c}") })
                })
                .collect();
        }
        combos
    }
}
