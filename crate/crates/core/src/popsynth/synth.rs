use rand::Rng;

use super::spec::{parse_range, Attr, PopulationSpec};
use super::{
    individual_type_key, AbsencePattern, ApplianceInstance, Dwelling, Employment, Household, Individual, Population,
};
use crate::rng::{self, Domain, StreamRng};

/// Sampled category labels for the entity being built, indexed by `Attr`.
struct Context {
    labels: [Option<String>; Attr::ALL.len()],
}

impl Context {
    fn new() -> Self {
        Context { labels: Default::default() }
    }

    fn get(&self, attr: Attr) -> Option<&str> {
        self.labels[attr.index()].as_deref()
    }

    fn set(&mut self, attr: Attr, label: String) {
        self.labels[attr.index()] = Some(label);
    }

    fn clear(&mut self, attrs: &[Attr]) {
        for a in attrs {
            self.labels[a.index()] = None;
        }
    }
}

fn draw(spec: &PopulationSpec, attr: Attr, ctx: &Context, rng: &mut StreamRng) -> String {
    if let Some(cond) = spec.conditionals.get(&attr) {
        let key: Option<Vec<&str>> = cond.parents.iter().map(|p| ctx.get(*p)).collect();
        if let Some(dist) = key.and_then(|k| cond.table.get(&k.join("|"))) {
            return dist.categories[dist.sample(rng)].clone();
        }
    }
    match spec.marginals.get(&attr) {
        Some(m) => m.categories[m.sample(rng)].clone(),
        None => spec.categories(attr).into_iter().next().unwrap_or_default(),
    }
}

fn uniform_in(label: &str, rng: &mut StreamRng) -> (f64, f64, f64) {
    let (lo, hi) = parse_range(label).expect("validated range");
    let v = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
    (lo, hi, v)
}

/// Draws `n_households` households with members, one dwelling each and an
/// appliance inventory. Bit-identical for identical `(spec, n, seed)`.
pub fn synthesize_population(spec: &PopulationSpec, n_households: usize, seed: u64) -> Population {
    let mut pop = Population::default();
    for h in 0..n_households {
        let mut rng = rng::stream(seed, Domain::Population, &[h as u64]);
        let hid = h as u32;
        let mut ctx = Context::new();

        for attr in [Attr::HouseholdSize, Attr::FamilyType, Attr::EnergyTariff, Attr::Absence] {
            let label = draw(spec, attr, &ctx, &mut rng);
            ctx.set(attr, label);
        }
        let size: usize = ctx.get(Attr::HouseholdSize).and_then(|s| s.parse().ok()).unwrap_or(1).clamp(1, 12);

        let mut member_ids = Vec::with_capacity(size);
        for m in 0..size {
            ctx.clear(&[Attr::Gender, Attr::Age, Attr::Employment, Attr::Pcs, Attr::Income]);
            ctx.set(Attr::MemberRole, if m == 0 { "head" } else { "member" }.to_string());
            let gender = draw(spec, Attr::Gender, &ctx, &mut rng);
            ctx.set(Attr::Gender, gender.clone());
            let age_label = draw(spec, Attr::Age, &ctx, &mut rng);
            let (lo, hi) = parse_range(&age_label).expect("validated range");
            let age = rng.gen_range(lo as u32..=hi as u32);
            ctx.set(Attr::Age, age_label);
            let employment: Employment = draw(spec, Attr::Employment, &ctx, &mut rng)
                .parse()
                .expect("validated employment");
            ctx.set(Attr::Employment, employment.as_str().to_string());
            let pcs = draw(spec, Attr::Pcs, &ctx, &mut rng);
            ctx.set(Attr::Pcs, pcs.clone());
            let income = draw(spec, Attr::Income, &ctx, &mut rng);
            ctx.set(Attr::Income, income.clone());

            let id = pop.individuals.len() as u32;
            pop.individuals.push(Individual {
                id,
                household_id: hid,
                age,
                type_key: individual_type_key(&gender, age, employment, &spec.age_bands),
                gender,
                employment,
                pcs,
                income,
            });
            member_ids.push(id);
        }
        ctx.clear(&[Attr::MemberRole, Attr::Gender, Attr::Age, Attr::Employment, Attr::Pcs, Attr::Income]);

        for attr in [Attr::DwellingType, Attr::Insulation, Attr::Location, Attr::FloorArea] {
            let label = draw(spec, attr, &ctx, &mut rng);
            ctx.set(attr, label);
        }
        let (_, _, base_area) = uniform_in(ctx.get(Attr::FloorArea).expect("sampled"), &mut rng);
        let floor_area =
            ((base_area + spec.floor_area_per_extra_member * (size as f64 - 1.0)) * 10.0).round() / 10.0;

        let mut appliances = Vec::new();
        for (category, own) in &spec.appliance_ownership {
            let p = own.probability_for(own.given.and_then(|g| ctx.get(g)));
            if rng.gen_bool(p) {
                let id = pop.appliances.len() as u32;
                pop.appliances.push(ApplianceInstance { id, dwelling_id: hid, category: category.clone() });
                appliances.push(id);
            }
        }

        pop.households.push(Household {
            id: hid,
            member_ids,
            family_type: ctx.get(Attr::FamilyType).unwrap_or("unknown").to_string(),
            energy_tariff: ctx.get(Attr::EnergyTariff).unwrap_or("base").to_string(),
            absence: AbsencePattern::from_label(ctx.get(Attr::Absence).unwrap_or("none")),
        });
        pop.dwellings.push(Dwelling {
            id: hid,
            household_id: hid,
            floor_area: floor_area.max(1.0),
            dwelling_type: ctx.get(Attr::DwellingType).unwrap_or_default().to_string(),
            insulation: ctx.get(Attr::Insulation).unwrap_or_default().to_string(),
            location: ctx.get(Attr::Location).unwrap_or_default().to_string(),
            appliances,
        });
    }
    pop
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: &str = r#"
        [marginals.household_size]
        "1" = 0.3
        "2" = 0.3
        "4" = 0.4
        [marginals.gender]
        F = 0.5
        M = 0.5
        [marginals.age]
        "0-14" = 0.2
        "15-64" = 0.6
        "65-90" = 0.2
        [marginals.employment]
        active = 0.5
        retired = 0.2
        student = 0.3
        [marginals.dwelling_type]
        house = 0.5
        apartment = 0.5
        [marginals.insulation]
        medium = 1.0
        [marginals.location]
        north = 0.5
        south = 0.5
        [marginals.floor_area]
        "40-60" = 1.0
        [[conditionals]]
        attribute = "age"
        parents = ["member_role"]
        [conditionals.table]
        head = { "15-64" = 0.8, "65-90" = 0.2 }
        [appliances.air_conditioner]
        probability = 0.1
        given = "location"
        table = { south = 0.6, north = 0.05 }
    "#;

    #[test]
    fn empty_population() {
        let spec = PopulationSpec::from_toml(SPEC).unwrap();
        let pop = synthesize_population(&spec, 0, 1);
        assert!(pop.households.is_empty() && pop.individuals.is_empty());
    }

    #[test]
    fn heads_follow_conditional_and_links_resolve() {
        let spec = PopulationSpec::from_toml(SPEC).unwrap();
        let pop = synthesize_population(&spec, 300, 9);
        pop.validate().unwrap();
        for h in &pop.households {
            assert!(pop.individuals[h.member_ids[0] as usize].age >= 15);
        }
    }

    #[test]
    fn floor_area_grows_with_size() {
        let spec = PopulationSpec::from_toml(SPEC).unwrap();
        let pop = synthesize_population(&spec, 200, 3);
        for (h, d) in pop.households.iter().zip(&pop.dwellings) {
            let extra = 15.0 * (h.size() as f64 - 1.0);
            assert!(d.floor_area >= 40.0 + extra - 0.05 && d.floor_area <= 60.0 + extra + 0.05);
        }
    }

    #[test]
    fn prefix_stability() {
        let spec = PopulationSpec::from_toml(SPEC).unwrap();
        let small = synthesize_population(&spec, 10, 5);
        let big = synthesize_population(&spec, 20, 5);
        assert_eq!(small.households[..], big.households[..10]);
        assert_eq!(small.dwellings[..], big.dwellings[..10]);
    }
}
