//! Population dump: one CSV per entity kind.
//!
//! | file             | columns                                                                 |
//! |------------------|-------------------------------------------------------------------------|
//! | `individuals.csv`| id, household_id, age, gender, employment, pcs, income, type_key        |
//! | `households.csv` | id, member_ids (`;`-separated), family_type, energy_tariff, absence     |
//! | `dwellings.csv`  | id, household_id, floor_area, dwelling_type, insulation, location       |
//! | `appliances.csv` | id, dwelling_id, category                                               |
//!
//! A dwelling's appliance list is rebuilt from `appliances.csv` on load.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{AbsencePattern, ApplianceInstance, Dwelling, Employment, Household, Individual, Population};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct HouseholdRow {
    id: u32,
    member_ids: String,
    family_type: String,
    energy_tariff: String,
    absence: String,
}

#[derive(Serialize, Deserialize)]
struct DwellingRow {
    id: u32,
    household_id: u32,
    floor_area: f64,
    dwelling_type: String,
    insulation: String,
    location: String,
}

#[derive(Serialize, Deserialize)]
struct IndividualRow {
    id: u32,
    household_id: u32,
    age: u32,
    gender: String,
    employment: Employment,
    pcs: String,
    income: String,
    type_key: String,
}

pub const POPULATION_FILES: [&str; 4] = ["individuals.csv", "households.csv", "dwellings.csv", "appliances.csv"];

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(format!("{}: {other:?}", path.display())),
    })
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Reader::from_reader(file))
}

/// Writes the four CSVs into `dir`, returning their paths.
pub fn write_population(pop: &Population, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths: Vec<PathBuf> = POPULATION_FILES.iter().map(|f| dir.join(f)).collect();

    let mut w = writer(&paths[0])?;
    for i in &pop.individuals {
        w.serialize(IndividualRow {
            id: i.id,
            household_id: i.household_id,
            age: i.age,
            gender: i.gender.clone(),
            employment: i.employment,
            pcs: i.pcs.clone(),
            income: i.income.clone(),
            type_key: i.type_key.clone(),
        })?;
    }
    w.flush().map_err(|e| Error::io(&paths[0], e))?;

    let mut w = writer(&paths[1])?;
    for h in &pop.households {
        w.serialize(HouseholdRow {
            id: h.id,
            member_ids: h.member_ids.iter().map(u32::to_string).collect::<Vec<_>>().join(";"),
            family_type: h.family_type.clone(),
            energy_tariff: h.energy_tariff.clone(),
            absence: h.absence.label().to_string(),
        })?;
    }
    w.flush().map_err(|e| Error::io(&paths[1], e))?;

    let mut w = writer(&paths[2])?;
    for d in &pop.dwellings {
        w.serialize(DwellingRow {
            id: d.id,
            household_id: d.household_id,
            floor_area: d.floor_area,
            dwelling_type: d.dwelling_type.clone(),
            insulation: d.insulation.clone(),
            location: d.location.clone(),
        })?;
    }
    w.flush().map_err(|e| Error::io(&paths[2], e))?;

    let mut w = writer(&paths[3])?;
    for a in &pop.appliances {
        w.serialize(a)?;
    }
    w.flush().map_err(|e| Error::io(&paths[3], e))?;
    Ok(paths)
}

pub fn load_population(dir: &Path) -> Result<Population> {
    let mut pop = Population::default();

    for row in reader(&dir.join(POPULATION_FILES[0]))?.deserialize::<IndividualRow>() {
        let r = row?;
        pop.individuals.push(Individual {
            id: r.id,
            household_id: r.household_id,
            age: r.age,
            gender: r.gender,
            employment: r.employment,
            pcs: r.pcs,
            income: r.income,
            type_key: r.type_key,
        });
    }
    for row in reader(&dir.join(POPULATION_FILES[1]))?.deserialize::<HouseholdRow>() {
        let r = row?;
        let member_ids = r
            .member_ids
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<u32>().map_err(|_| Error::parse(format!("household {}: bad member id `{s}`", r.id))))
            .collect::<Result<Vec<_>>>()?;
        pop.households.push(Household {
            id: r.id,
            member_ids,
            family_type: r.family_type,
            energy_tariff: r.energy_tariff,
            absence: AbsencePattern::from_label(&r.absence),
        });
    }
    for row in reader(&dir.join(POPULATION_FILES[2]))?.deserialize::<DwellingRow>() {
        let r = row?;
        pop.dwellings.push(Dwelling {
            id: r.id,
            household_id: r.household_id,
            floor_area: r.floor_area,
            dwelling_type: r.dwelling_type,
            insulation: r.insulation,
            location: r.location,
            appliances: Vec::new(),
        });
    }
    for row in reader(&dir.join(POPULATION_FILES[3]))?.deserialize::<ApplianceInstance>() {
        let a = row?;
        let d = pop
            .dwellings
            .get_mut(a.dwelling_id as usize)
            .ok_or_else(|| Error::validation(format!("appliance {} references unknown dwelling {}", a.id, a.dwelling_id)))?;
        d.appliances.push(a.id);
        pop.appliances.push(a);
    }
    pop.validate()?;
    Ok(pop)
}
