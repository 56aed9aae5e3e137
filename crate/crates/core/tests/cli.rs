use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn loadsim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loadsim"))
        .args(args)
        .current_dir(dir)
        .env_remove("LOADSIM_CONFIG")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(o: Output) -> Output {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), stderr(&o));
    o
}

/// Fresh example project, shrunk to `households` and `days`.
fn project(households: usize, days: u32) -> TempDir {
    let tmp = tempfile::tempdir().unwrap();
    ok(loadsim(tmp.path(), &["init", "."]));
    edit(tmp.path(), "households = 100", &format!("households = {households}"));
    edit(tmp.path(), "days = 35", &format!("days = {days}"));
    tmp
}

fn edit(dir: &Path, from: &str, to: &str) {
    let path = dir.join("loadsim.toml");
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.contains(from), "`{from}` not in config");
    fs::write(&path, text.replacen(from, to, 1)).unwrap();
}

fn csv_rows(path: &Path) -> Vec<BTreeMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.deserialize().map(|row| row.unwrap()).collect()
}

fn out(dir: &Path, name: &str) -> PathBuf {
    dir.join("out").join(name)
}

#[test]
fn synth_is_byte_identical_across_runs() {
    let p = project(30, 1);
    ok(loadsim(p.path(), &["synth", "--out", "a"]));
    ok(loadsim(p.path(), &["synth", "--out", "b"]));
    for f in ["individuals.csv", "households.csv", "dwellings.csv", "appliances.csv"] {
        let a = fs::read(p.path().join("a/population").join(f)).unwrap();
        let b = fs::read(p.path().join("b/population").join(f)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{f}");
    }
    let manifest = fs::read_to_string(p.path().join("a/manifest.csv")).unwrap();
    assert!(manifest.starts_with("path,bytes,sha256"));
    assert_eq!(manifest.lines().count(), 5);

    ok(loadsim(p.path(), &["synth", "--out", "c", "--seed", "99"]));
    assert_ne!(
        fs::read(p.path().join("a/population/individuals.csv")).unwrap(),
        fs::read(p.path().join("c/population/individuals.csv")).unwrap()
    );
}

#[test]
fn missing_population_spec_is_named() {
    let p = project(10, 1);
    fs::remove_file(p.path().join("population.toml")).unwrap();
    let o = loadsim(p.path(), &["synth"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("population.toml"), "{}", stderr(&o));
}

#[test]
fn missing_config_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let o = loadsim(tmp.path(), &["simulate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("loadsim.toml"));
}

#[test]
fn malformed_tus_row_reports_its_number() {
    let p = project(10, 1);
    let path = p.path().join("tus.csv");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    lines[3] = lines[3].replacen(",weekday,", ",someday,", 1);
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    let o = loadsim(p.path(), &["extract"]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("row 4"), "{err}");
    assert!(err.contains("tus.csv"), "{err}");
}

type Key = (String, String, String, String);

fn duration_bands(path: &Path) -> BTreeMap<Key, (u32, u32)> {
    csv_rows(path)
        .into_iter()
        .map(|r| {
            let key = (r["task"].clone(), r["activity_code"].clone(), r["day_type"].clone(), r["type_key"].clone());
            (key, (r["min_duration"].parse().unwrap(), r["max_duration"].parse().unwrap()))
        })
        .collect()
}

#[test]
fn lower_variability_gives_narrower_bands() {
    let p = project(10, 1);
    ok(loadsim(p.path(), &["extract", "--out", "x90"]));
    edit(p.path(), "x = 90", "x = 50");
    ok(loadsim(p.path(), &["extract", "--out", "x50"]));
    let wide = duration_bands(&p.path().join("x90/catalog.csv"));
    let narrow = duration_bands(&p.path().join("x50/catalog.csv"));
    let mut compared = 0;
    let mut strictly = 0;
    for (k, (lo50, hi50)) in &narrow {
        if let Some((lo90, hi90)) = wide.get(k) {
            assert!(lo50 >= lo90 && hi50 <= hi90, "{k:?}");
            compared += 1;
            strictly += usize::from(hi50 - lo50 < hi90 - lo90);
        }
    }
    assert!(compared > 100);
    assert!(strictly > 0);
}

#[test]
fn simulate_writes_expected_shapes_and_is_reproducible() {
    let p = project(12, 2);
    ok(loadsim(p.path(), &["simulate"]));
    let first = fs::read(out(p.path(), "load_1min.csv")).unwrap();
    let one = csv_rows(&out(p.path(), "load_1min.csv"));
    assert_eq!(one.len(), 2 * 1440);
    assert_eq!(one[0]["timestamp"], "2024-01-01T00:00");
    assert!(one.iter().all(|r| r["watts"].parse::<f64>().unwrap() >= 0.0));
    assert_eq!(csv_rows(&out(p.path(), "load_30min.csv")).len(), 2 * 48);
    assert_eq!(csv_rows(&out(p.path(), "groups_1min.csv")).len(), 2 * 1440);
    assert!(out(p.path(), "showers.csv").exists());
    assert!(out(p.path(), "manifest.csv").exists());

    ok(loadsim(p.path(), &["simulate"]));
    assert_eq!(first, fs::read(out(p.path(), "load_1min.csv")).unwrap());
}

#[test]
fn identical_curves_give_a_zero_report() {
    let p = project(10, 1);
    edit(p.path(), "[metrics]\n", "[metrics]\nmodel = \"reference.csv\"\n");
    ok(loadsim(p.path(), &["metrics"]));
    let rows = csv_rows(&out(p.path(), "metrics.csv"));
    let value = |m: &str| rows.iter().find(|r| r["metric"] == m).unwrap()["value"].parse::<f64>().unwrap();
    for m in ["mae", "rmse", "mape", "wape", "frechet"] {
        assert_eq!(value(m), 0.0, "{m}");
    }
    assert_eq!(value("mda"), 1.0);
    assert_eq!(csv_rows(&out(p.path(), "average_week_model.csv")).len(), 336);
}

#[test]
fn metrics_length_mismatch_fails() {
    let p = project(6, 2);
    edit(p.path(), "month = \"2024-01\"", "");
    ok(loadsim(p.path(), &["simulate"]));
    let o = loadsim(p.path(), &["metrics"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("length"), "{}", stderr(&o));
}

#[test]
fn month_too_short_for_four_weeks_fails() {
    let p = project(6, 2);
    ok(loadsim(p.path(), &["simulate"]));
    let o = loadsim(p.path(), &["metrics"]);
    assert_eq!(o.status.code(), Some(1));
}

fn strip_scenarios(dir: &Path) {
    let path = dir.join("loadsim.toml");
    let text = fs::read_to_string(&path).unwrap();
    let start = text.find("[[scenario]]").unwrap();
    let end = text.find("[categories]").unwrap();
    fs::write(&path, format!("{}{}", &text[..start], &text[end..])).unwrap();
}

#[test]
fn empty_scenario_list_gives_zero_deltas() {
    let p = project(8, 1);
    strip_scenarios(p.path());
    ok(loadsim(p.path(), &["scenario"]));
    for r in csv_rows(&out(p.path(), "scenario_baseline_summary.csv")) {
        assert_eq!(r["value"].parse::<f64>().unwrap(), 0.0, "{r:?}");
    }
    for r in csv_rows(&out(p.path(), "scenario_baseline_minutes.csv")) {
        for (k, v) in &r {
            if k != "minute" && k != "timestamp" {
                assert_eq!(v.parse::<f64>().unwrap(), 0.0, "{k}");
            }
        }
    }
}

#[test]
fn scenarios_write_one_report_set_each() {
    let p = project(10, 1);
    ok(loadsim(p.path(), &["scenario"]));
    for name in ["cooking_shift", "no_shower_peak"] {
        for part in ["profile", "minutes", "summary"] {
            assert!(out(p.path(), &format!("scenario_{name}_{part}.csv")).exists(), "{name} {part}");
        }
    }
    let shifts = csv_rows(&out(p.path(), "scenario_cooking_shift_shifts.csv"));
    assert!(!shifts.is_empty());
    assert!(shifts.iter().all(|r| r["shift_minutes"].parse::<i32>().unwrap().abs() <= 45));
}

#[test]
fn unknown_behavior_is_rejected() {
    let p = project(8, 1);
    edit(p.path(), "kind = \"cooking_shift\"", "kind = \"unplug_everything\"");
    let o = loadsim(p.path(), &["scenario"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("unplug_everything"), "{}", stderr(&o));
}

#[test]
fn calibrate_writes_report_and_scaled_config() {
    let p = project(10, 1);
    let o = loadsim(p.path(), &["calibrate"]);
    assert!(matches!(o.status.code(), Some(0) | Some(2)), "{}", stderr(&o));
    let rows = csv_rows(&out(p.path(), "calibration_report.csv"));
    assert!(rows.iter().any(|r| r["category"] == "tv"));
    let text = fs::read_to_string(out(p.path(), "appliances_calibrated.toml")).unwrap();
    assert!(text.contains("tv"));
}
