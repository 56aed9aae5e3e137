//! TUS episode CSV.
//!
//! One row per ten-minute episode. Required columns (any order, header row):
//! `respondent_id, gender, age, employment, day_type, weather, episode_index,
//! activity_code, who_present`; optional `diary_day` (default 0) separates
//! several diary days of one respondent. `who_present` is `alone` or
//! `with_others`.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use super::{DiarySlot, TusRecord, SLOTS_PER_DAY};
use crate::calendar::{DayType, Weather};
use crate::error::{Error, Result};
use crate::popsynth::Employment;

const REQUIRED: [&str; 9] = [
    "respondent_id",
    "gender",
    "age",
    "employment",
    "day_type",
    "weather",
    "episode_index",
    "activity_code",
    "who_present",
];

struct Partial {
    gender: String,
    age: u32,
    employment: Employment,
    day_type: DayType,
    weather: Weather,
    first_row: u64,
    slots: Vec<Option<DiarySlot>>,
}

/// Writes records in the layout [`parse_tus_reader`] reads.
pub fn write_tus<W: std::io::Write>(records: &[TusRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "respondent_id",
        "diary_day",
        "gender",
        "age",
        "employment",
        "day_type",
        "weather",
        "episode_index",
        "activity_code",
        "who_present",
    ])?;
    for r in records {
        for (i, slot) in r.episodes.iter().enumerate() {
            w.write_record([
                r.respondent_id.as_str(),
                &r.diary_day.to_string(),
                &r.gender,
                &r.age.to_string(),
                r.employment.as_str(),
                r.day_type.as_str(),
                r.weather.as_str(),
                &i.to_string(),
                &slot.activity,
                if slot.with_others { "with_others" } else { "alone" },
            ])?;
        }
    }
    w.flush().map_err(|e| Error::Io { path: "<tus>".into(), source: e })?;
    Ok(())
}

/// Reads a TUS CSV file. `codes`, when given, restricts activity codes.
pub fn parse_tus(path: &Path, codes: Option<&[String]>) -> Result<Vec<TusRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_tus_reader(file, codes).map_err(|e| e.in_file(path))
}

pub fn parse_tus_reader<R: Read>(input: R, codes: Option<&[String]>) -> Result<Vec<TusRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let mut idx = [0usize; REQUIRED.len()];
    for (i, name) in REQUIRED.iter().enumerate() {
        idx[i] = col(name).ok_or(Error::Schema { row: 1, message: format!("missing column `{name}`") })?;
    }
    let diary_col = col("diary_day");

    // BTreeMap keeps output order deterministic: by respondent, then diary day.
    let mut diaries: BTreeMap<(String, u32), Partial> = BTreeMap::new();
    for result in rdr.records() {
        let rec = result?;
        let row = rec.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| rec.get(idx[i]).unwrap_or("");
        let schema = |message: String| Error::Schema { row, message };

        let respondent = field(0).to_string();
        if respondent.is_empty() {
            return Err(schema("empty respondent_id".into()));
        }
        let diary_day: u32 = match diary_col.and_then(|c| rec.get(c)) {
            None | Some("") => 0,
            Some(s) => s.parse().map_err(|_| schema(format!("bad diary_day `{s}`")))?,
        };
        let age: u32 = field(2).parse().map_err(|_| schema(format!("bad age `{}`", field(2))))?;
        let employment: Employment = field(3).parse().map_err(|e: Error| schema(e.to_string()))?;
        let day_type: DayType = field(4).parse().map_err(|e: Error| schema(e.to_string()))?;
        let weather: Weather = field(5).parse().map_err(|e: Error| schema(e.to_string()))?;
        let index: usize = field(6)
            .parse()
            .ok()
            .filter(|&i: &usize| i < SLOTS_PER_DAY)
            .ok_or_else(|| schema(format!("episode_index `{}` not in 0..=143", field(6))))?;
        let activity = field(7).to_string();
        if activity.is_empty() {
            return Err(schema("empty activity_code".into()));
        }
        if let Some(codes) = codes {
            if !codes.contains(&activity) {
                return Err(schema(format!("activity code `{activity}` is not in the catalog")));
            }
        }
        let with_others = match field(8).to_ascii_lowercase().replace('-', "_").as_str() {
            "alone" => false,
            "with_others" | "others" => true,
            other => return Err(schema(format!("who_present `{other}` is not alone/with_others"))),
        };

        let entry = diaries.entry((respondent.clone(), diary_day)).or_insert_with(|| Partial {
            gender: field(1).to_string(),
            age,
            employment,
            day_type,
            weather,
            first_row: row,
            slots: vec![None; SLOTS_PER_DAY],
        });
        if entry.gender != field(1)
            || entry.age != age
            || entry.employment != employment
            || entry.day_type != day_type
            || entry.weather != weather
        {
            return Err(schema(format!(
                "attributes of {respondent}/{diary_day} differ from row {}",
                entry.first_row
            )));
        }
        if entry.slots[index].is_some() {
            return Err(schema(format!("duplicate episode_index {index} for {respondent}/{diary_day}")));
        }
        entry.slots[index] = Some(DiarySlot { activity, with_others });
    }

    diaries
        .into_iter()
        .map(|((respondent_id, diary_day), p)| {
            let missing: Vec<u32> =
                p.slots.iter().enumerate().filter(|(_, s)| s.is_none()).map(|(i, _)| i as u32).collect();
            if !missing.is_empty() {
                return Err(Error::IncompleteDiary { respondent: respondent_id, diary_day, missing });
            }
            Ok(TusRecord {
                respondent_id,
                diary_day,
                gender: p.gender,
                age: p.age,
                employment: p.employment,
                day_type: p.day_type,
                weather: p.weather,
                episodes: p.slots.into_iter().map(|s| s.expect("checked")).collect(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "respondent_id,gender,age,employment,day_type,weather,episode_index,activity_code,who_present\n";

    fn diary(id: &str, n: usize, activity: impl Fn(usize) -> &'static str) -> String {
        (0..n)
            .map(|i| format!("{id},F,55,active,weekday,good,{i},{},alone\n", activity(i)))
            .collect()
    }

    #[test]
    fn full_diary_is_one_record() {
        let text = format!("{HEADER}{}", diary("r1", 144, |_| "sleep"));
        let recs = parse_tus_reader(text.as_bytes(), None).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].episodes.len(), 144);
    }

    #[test]
    fn short_diary_lists_missing_indices() {
        let text = format!("{HEADER}{}", diary("r1", 143, |_| "sleep"));
        match parse_tus_reader(text.as_bytes(), None) {
            Err(Error::IncompleteDiary { missing, .. }) => assert_eq!(missing, vec![143]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn interleaved_respondents_are_grouped_in_order() {
        let a = diary("a", 144, |i| if i % 2 == 0 { "cook" } else { "eat" });
        let b = diary("b", 144, |i| if i < 72 { "sleep" } else { "tv" });
        let mut lines: Vec<&str> = Vec::new();
        for (x, y) in a.lines().zip(b.lines()) {
            lines.push(y);
            lines.push(x);
        }
        // Reverse so episode indices arrive out of order too.
        lines.reverse();
        let text = format!("{HEADER}{}\n", lines.join("\n"));
        let recs = parse_tus_reader(text.as_bytes(), None).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].respondent_id, "a");
        let expected_a: Vec<&str> = (0..144).map(|i| if i % 2 == 0 { "cook" } else { "eat" }).collect();
        let got_a: Vec<&str> = recs[0].episodes.iter().map(|s| s.activity.as_str()).collect();
        assert_eq!(got_a, expected_a);
        let expected_b: Vec<&str> = (0..144).map(|i| if i < 72 { "sleep" } else { "tv" }).collect();
        let got_b: Vec<&str> = recs[1].episodes.iter().map(|s| s.activity.as_str()).collect();
        assert_eq!(got_b, expected_b);
    }

    #[test]
    fn malformed_row_reports_row_number() {
        let mut text = format!("{HEADER}{}", diary("r1", 144, |_| "sleep"));
        text = text.replacen("r1,F,55,active,weekday,good,5,", "r1,F,55,active,someday,good,5,", 1);
        match parse_tus_reader(text.as_bytes(), None) {
            Err(Error::Schema { row, .. }) => assert_eq!(row, 7),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_code_rejected_when_catalog_given() {
        let text = format!("{HEADER}{}", diary("r1", 144, |_| "sleep"));
        let codes = vec!["work".to_string()];
        assert!(matches!(parse_tus_reader(text.as_bytes(), Some(&codes)), Err(Error::Schema { .. })));
    }
}
