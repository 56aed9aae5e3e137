use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use loadsim::fixtures;
use loadsim_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(loadsim_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(loadsim_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn compare_and_errors() {
    let a = [100.0, 200.0];
    let b = [110.0, 190.0];
    let mut r = LoadsimMetricReport::default();
    let s = unsafe { loadsim_compare(a.as_ptr(), b.as_ptr(), 2, &mut r) };
    assert_eq!(s, LoadsimStatus::Ok);
    assert!((r.mae - 10.0).abs() < 1e-12 && (r.rmse - 10.0).abs() < 1e-12);
    assert_eq!(r.mda, 1.0);
    assert_eq!(last_error(), "");

    let z = [1.0, 0.0];
    assert_eq!(unsafe { loadsim_compare(a.as_ptr(), z.as_ptr(), 2, &mut r) }, LoadsimStatus::Data);
    assert!(last_error().contains("index 1"), "{}", last_error());
    assert_eq!(unsafe { loadsim_compare(ptr::null(), b.as_ptr(), 2, &mut r) }, LoadsimStatus::NullPointer);
    assert_eq!(unsafe { loadsim_compare(a.as_ptr(), b.as_ptr(), 2, ptr::null_mut()) }, LoadsimStatus::NullPointer);

    let mut f = 0.0;
    assert_eq!(unsafe { loadsim_frechet(a.as_ptr(), 2, b.as_ptr(), 1, &mut f) }, LoadsimStatus::Ok);
    assert_eq!(f, 90.0);
    assert_eq!(unsafe { loadsim_frechet(a.as_ptr(), 0, b.as_ptr(), 1, &mut f) }, LoadsimStatus::Data);
}

#[test]
fn config_errors() {
    let mut cfg = ptr::null_mut();
    let missing = CString::new("/nonexistent/loadsim.toml").unwrap();
    assert_eq!(unsafe { loadsim_config_load(missing.as_ptr(), &mut cfg) }, LoadsimStatus::Io);
    assert!(cfg.is_null());
    assert!(last_error().contains("/nonexistent/loadsim.toml"));
    assert_eq!(unsafe { loadsim_config_load(ptr::null(), &mut cfg) }, LoadsimStatus::NullPointer);
    unsafe { loadsim_config_free(ptr::null_mut()) };
    unsafe { loadsim_run_free(ptr::null_mut()) };
}

fn write_project(dir: &Path) -> PathBuf {
    std::fs::write(dir.join("population.toml"), fixtures::POPULATION_SPEC).unwrap();
    std::fs::write(dir.join("appliances.toml"), fixtures::APPLIANCES).unwrap();
    std::fs::write(dir.join("catalog.csv"), fixtures::task_catalog().to_csv_string().unwrap()).unwrap();
    let cfg = dir.join("loadsim.toml");
    std::fs::write(
        &cfg,
        r#"seed = 5
[paths]
population_spec = "population.toml"
catalog = "catalog.csv"
appliances = "appliances.toml"
[synth]
households = 6
[simulate]
start = "2024-01-08"
days = 1
"#,
    )
    .unwrap();
    cfg
}

#[test]
fn simulate_through_handles() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(write_project(dir.path()).to_str().unwrap()).unwrap();
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(loadsim_config_load(path.as_ptr(), &mut cfg), LoadsimStatus::Ok, "{}", last_error());
        assert_eq!(loadsim_config_set_seed(cfg, 9), LoadsimStatus::Ok);
        let mut run = ptr::null_mut();
        assert_eq!(loadsim_simulate(cfg, &mut run), LoadsimStatus::Ok, "{}", last_error());

        let (mut minutes, mut dwellings) = (0u32, 0usize);
        assert_eq!(loadsim_run_shape(run, &mut minutes, &mut dwellings), LoadsimStatus::Ok);
        assert_eq!((minutes, dwellings), (1440, 6));

        let mut n = 0usize;
        assert_eq!(loadsim_run_load(run, ptr::null_mut(), 0, &mut n), LoadsimStatus::Ok);
        assert_eq!(n, 1440);
        let mut small = vec![0.0; 10];
        assert_eq!(loadsim_run_load(run, small.as_mut_ptr(), 10, &mut n), LoadsimStatus::BufferTooSmall);
        let mut load = vec![0.0; n];
        assert_eq!(loadsim_run_load(run, load.as_mut_ptr(), n, ptr::null_mut()), LoadsimStatus::Ok);
        assert!(load.iter().all(|v| *v > 0.0));

        let dhw = CString::new("dhw").unwrap();
        let mut heater = vec![0.0; n];
        assert_eq!(loadsim_run_group_load(run, dhw.as_ptr(), heater.as_mut_ptr(), n, &mut n), LoadsimStatus::Ok);
        assert!(heater.iter().zip(&load).all(|(h, l)| h <= l));
        let nope = CString::new("nope").unwrap();
        assert_eq!(loadsim_run_group_load(run, nope.as_ptr(), heater.as_mut_ptr(), n, &mut n), LoadsimStatus::NotFound);

        let mut showers = 0usize;
        assert_eq!(loadsim_run_shower_count(run, &mut showers), LoadsimStatus::Ok);
        assert!(showers > 0);
        loadsim_run_free(run);
        loadsim_config_free(cfg);
    }
}

#[test]
fn header_lists_every_export() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/loadsim.h")).unwrap();
    let src = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert_eq!(exports.len(), 13);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("LOADSIM_STATUS_BUFFER_TOO_SMALL = 8"));
}

/// Compiles and runs a C program against the header and the static library.
#[test]
fn c_program_links() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(Path::parent).unwrap();
    let lib = profile_dir.join("libloadsim_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("a C compiler on PATH");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with(env!("CARGO_PKG_VERSION")));
}
