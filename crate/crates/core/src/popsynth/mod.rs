//! Synthetic population: individuals grouped in households, each household in
//! one dwelling with an appliance inventory.
//!
//! Sampling is sequential (household attributes, then members, then the
//! dwelling, then appliance ownership), every attribute drawn from its
//! conditional table when one applies and from its marginal otherwise. Each
//! household draws from its own keyed stream, so the first `n` households of a
//! run are identical whatever `n_households` is.
//!
//! Iterative proportional fitting would slot in as an alternative
//! `synthesize_*` that reweights the household table before member sampling;
//! `PopulationSpec` already carries everything it needs.

mod io;
mod spec;
mod synth;

pub use io::{load_population, write_population};
pub use spec::{load_population_spec, Attr, Categorical, Conditional, Ownership, PopulationSpec};
pub use synth::synthesize_population;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Employment {
    Active,
    Inactive,
    Retired,
    Student,
}

impl Employment {
    pub fn as_str(self) -> &'static str {
        match self {
            Employment::Active => "active",
            Employment::Inactive => "inactive",
            Employment::Retired => "retired",
            Employment::Student => "student",
        }
    }
}

impl fmt::Display for Employment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Employment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "active" => Ok(Employment::Active),
            "inactive" => Ok(Employment::Inactive),
            "retired" => Ok(Employment::Retired),
            "student" => Ok(Employment::Student),
            other => Err(Error::parse(format!("unknown employment `{other}`"))),
        }
    }
}

/// Age segmentation used by type keys. `edges` are the inclusive lower bounds
/// of each band; the last band is open-ended.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgeBands {
    pub edges: Vec<u32>,
}

impl Default for AgeBands {
    fn default() -> Self {
        AgeBands { edges: vec![0, 15, 25, 50, 65] }
    }
}

impl AgeBands {
    pub fn new(edges: Vec<u32>) -> Result<Self> {
        if edges.first() != Some(&0) || edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::validation(format!(
                "age band edges {edges:?} must start at 0 and strictly increase"
            )));
        }
        Ok(AgeBands { edges })
    }

    pub fn band_index(&self, age: u32) -> usize {
        self.edges.iter().rposition(|&e| age >= e).unwrap_or(0)
    }

    pub fn label(&self, age: u32) -> String {
        let i = self.band_index(age);
        match self.edges.get(i + 1) {
            Some(next) => format!("{}-{}", self.edges[i], next - 1),
            None => format!("{}+", self.edges[i]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub id: u32,
    pub household_id: u32,
    pub age: u32,
    pub gender: String,
    pub employment: Employment,
    pub pcs: String,
    pub income: String,
    pub type_key: String,
}

impl Individual {
    pub fn is_adult(&self, adult_age: u32) -> bool {
        self.age >= adult_age
    }
}

/// Segmentation key `gender_ageband_employment`, e.g. `F_50-64_active`.
pub fn individual_type_key(gender: &str, age: u32, employment: Employment, bands: &AgeBands) -> String {
    format!("{}_{}_{}", gender, bands.label(age), employment)
}

/// Successively coarser keys used when a type has no catalog entry or too
/// little survey data: drop employment, then the age band, then everything.
pub fn parent_type_keys(key: &str) -> Vec<String> {
    let parts: Vec<&str> = key.split('_').collect();
    let mut out = Vec::with_capacity(4);
    out.push(key.to_string());
    if parts.len() >= 3 {
        out.push(format!("{}_{}", parts[0], parts[1]));
    }
    if parts.len() >= 2 {
        out.push(parts[0].to_string());
    }
    if key != "*" {
        out.push("*".to_string());
    }
    out
}

/// Does a (possibly coarse) catalog key cover an individual's full type key?
pub fn type_key_matches(pattern: &str, full_key: &str) -> bool {
    if pattern == "*" || pattern == full_key {
        return true;
    }
    full_key.len() > pattern.len()
        && full_key.starts_with(pattern)
        && full_key.as_bytes()[pattern.len()] == b'_'
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbsencePattern {
    pub holiday: bool,
    pub weekend_away: bool,
}

impl AbsencePattern {
    pub fn from_label(label: &str) -> Self {
        let l = label.to_ascii_lowercase();
        AbsencePattern {
            holiday: l.contains("holiday"),
            weekend_away: l.contains("weekend"),
        }
    }

    pub fn label(&self) -> &'static str {
        match (self.holiday, self.weekend_away) {
            (false, false) => "none",
            (true, false) => "holiday",
            (false, true) => "weekend_away",
            (true, true) => "holiday_weekend_away",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Household {
    pub id: u32,
    pub member_ids: Vec<u32>,
    pub family_type: String,
    pub energy_tariff: String,
    pub absence: AbsencePattern,
}

impl Household {
    pub fn size(&self) -> usize {
        self.member_ids.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dwelling {
    pub id: u32,
    pub household_id: u32,
    pub floor_area: f64,
    pub dwelling_type: String,
    pub insulation: String,
    pub location: String,
    pub appliances: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplianceInstance {
    pub id: u32,
    pub dwelling_id: u32,
    pub category: String,
}

/// Entities are stored densely: an entity's id is its index in its table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Population {
    pub individuals: Vec<Individual>,
    pub households: Vec<Household>,
    pub dwellings: Vec<Dwelling>,
    pub appliances: Vec<ApplianceInstance>,
}

impl Population {
    pub fn members<'a>(&'a self, household: &'a Household) -> impl Iterator<Item = &'a Individual> + 'a {
        household.member_ids.iter().map(move |&id| &self.individuals[id as usize])
    }

    pub fn dwelling_of(&self, household_id: u32) -> &Dwelling {
        // One dwelling per household, stored at the same index.
        &self.dwellings[household_id as usize]
    }

    pub fn appliance_categories<'a>(&'a self, dwelling: &'a Dwelling) -> impl Iterator<Item = &'a str> + 'a {
        dwelling.appliances.iter().map(move |&id| self.appliances[id as usize].category.as_str())
    }

    /// Checks referential integrity: dense ids, every link resolves, no orphans.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::validation(m));
        let mut owner = vec![None; self.individuals.len()];
        for (i, h) in self.households.iter().enumerate() {
            if h.id as usize != i {
                return bad(format!("household at index {i} has id {}", h.id));
            }
            if h.member_ids.is_empty() || h.member_ids.len() > 12 {
                return bad(format!("household {} has {} members", h.id, h.member_ids.len()));
            }
            for &m in &h.member_ids {
                match owner.get_mut(m as usize) {
                    None => return bad(format!("household {} lists unknown member {m}", h.id)),
                    Some(Some(_)) => return bad(format!("individual {m} belongs to two households")),
                    Some(slot) => *slot = Some(h.id),
                }
            }
        }
        for (i, ind) in self.individuals.iter().enumerate() {
            if ind.id as usize != i {
                return bad(format!("individual at index {i} has id {}", ind.id));
            }
            if owner[i] != Some(ind.household_id) {
                return bad(format!("individual {i} is not listed by household {}", ind.household_id));
            }
        }
        if self.dwellings.len() != self.households.len() {
            return bad(format!(
                "{} dwellings for {} households",
                self.dwellings.len(),
                self.households.len()
            ));
        }
        let mut app_owner = vec![None; self.appliances.len()];
        for (i, d) in self.dwellings.iter().enumerate() {
            if d.id as usize != i || d.household_id as usize != i {
                return bad(format!("dwelling at index {i} has id {} / household {}", d.id, d.household_id));
            }
            if !(d.floor_area > 0.0) {
                return bad(format!("dwelling {i} has floor area {}", d.floor_area));
            }
            for &a in &d.appliances {
                match app_owner.get_mut(a as usize) {
                    None => return bad(format!("dwelling {i} lists unknown appliance {a}")),
                    Some(Some(_)) => return bad(format!("appliance {a} listed twice")),
                    Some(slot) => *slot = Some(d.id),
                }
            }
        }
        for (i, a) in self.appliances.iter().enumerate() {
            if a.id as usize != i || app_owner[i] != Some(a.dwelling_id) {
                return bad(format!("appliance {i} is orphaned or mislinked"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type_key_examples() {
        let bands = AgeBands::default();
        assert_eq!(individual_type_key("F", 55, Employment::Active, &bands), "F_50-64_active");
        assert_eq!(individual_type_key("M", 10, Employment::Student, &bands), "M_0-14_student");
        assert_eq!(individual_type_key("M", 80, Employment::Retired, &bands), "M_65+_retired");
        assert_eq!(
            individual_type_key("F", 55, Employment::Active, &bands),
            individual_type_key("F", 55, Employment::Active, &bands)
        );
    }

    #[test]
    fn band_edges() {
        let b = AgeBands::default();
        assert_eq!(b.label(0), "0-14");
        assert_eq!(b.label(14), "0-14");
        assert_eq!(b.label(15), "15-24");
        assert_eq!(b.label(49), "25-49");
        assert_eq!(b.label(50), "50-64");
        assert_eq!(b.label(65), "65+");
        assert!(AgeBands::new(vec![5, 10]).is_err());
    }

    #[test]
    fn parent_keys_and_matching() {
        assert_eq!(parent_type_keys("F_50-64_active"), vec!["F_50-64_active", "F_50-64", "F", "*"]);
        assert!(type_key_matches("F_50-64", "F_50-64_active"));
        assert!(type_key_matches("F", "F_50-64_active"));
        assert!(type_key_matches("*", "M_0-14_student"));
        assert!(!type_key_matches("F_5", "F_50-64_active"));
        assert!(!type_key_matches("M", "F_50-64_active"));
    }
}
