use std::ffi::{c_char, CStr, CString};
use std::ptr;

use mzeuler_ffi::*;

const DESK: &str = "preset = desk-check\nverify = false\nt_end = 0.05\n";

fn new_sim(text: &str) -> *mut MzSimulation {
    let text = CString::new(text).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { mz_simulation_new_config(text.as_ptr(), &mut h) }, MzStatus::Ok);
    assert!(!h.is_null());
    h
}

fn last_error() -> String {
    let mut needed = 0;
    unsafe { mz_last_error_message(ptr::null_mut(), 0, &mut needed) };
    let mut buf = vec![0 as c_char; needed];
    assert_eq!(unsafe { mz_last_error_message(buf.as_mut_ptr(), buf.len(), ptr::null_mut()) }, MzStatus::Ok);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn step_and_query() {
    let h = new_sim(DESK);
    let (mut t, mut e0, mut e1, mut rate) = (0.0, 0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(mz_simulation_energy(h, &mut e0), MzStatus::Ok);
        let mut done = 0;
        assert_eq!(mz_simulation_step(h, 20, &mut done), MzStatus::Ok);
        assert_eq!(done, 20);
        assert_eq!(mz_simulation_time(h, &mut t), MzStatus::Ok);
        assert_eq!(mz_simulation_energy(h, &mut e1), MzStatus::Ok);
        assert_eq!(mz_simulation_energy_rate(h, &mut rate), MzStatus::Ok);
        mz_simulation_free(h);
    }
    assert!((t - 20.0 * 1e-3).abs() < 1e-12);
    assert!(e0 > 0.0 && e1 > 0.0 && rate.is_finite());
}

#[test]
fn state_copy_round_trips_energy() {
    let h = new_sim(DESK);
    let mut count = 0usize;
    let mut energy = 0.0;
    unsafe {
        assert_eq!(mz_simulation_mode_count(h, &mut count), MzStatus::Ok);
        assert!(count > 0);
        let mut small = vec![0.0; 3];
        assert_eq!(mz_simulation_copy_state(h, small.as_mut_ptr(), small.len(), ptr::null_mut()), MzStatus::BufferTooSmall);
        let mut values = vec![0.0; 6 * count];
        let mut ks = vec![0i32; 3 * count];
        assert_eq!(mz_simulation_copy_state(h, values.as_mut_ptr(), values.len(), ks.as_mut_ptr()), MzStatus::Ok);
        assert_eq!(mz_simulation_energy(h, &mut energy), MzStatus::Ok);
        mz_simulation_free(h);
        let sum: f64 = values.iter().map(|v| v * v).sum();
        assert!((0.5 * sum - energy).abs() <= 1e-12 * energy.max(1.0), "{} vs {}", 0.5 * sum, energy);
        assert!(ks.chunks(3).any(|k| k != [0, 0, 0]));
    }
}

#[test]
fn config_errors_are_reported() {
    let text = CString::new("n = 4\nt0 = 0.0015\ndt = 0.001\n").unwrap();
    let mut h = ptr::null_mut();
    let s = unsafe { mz_simulation_new_config(text.as_ptr(), &mut h) };
    assert_eq!(s, MzStatus::Config);
    assert!(h.is_null());
    assert!(last_error().contains("multiple of dt"), "{}", last_error());

    let s = unsafe { mz_simulation_new_config(ptr::null(), &mut h) };
    assert_eq!(s, MzStatus::NullPointer);
}

#[test]
fn show_terms_reports_needed_size() {
    let mut needed = 0;
    let s = unsafe { mz_show_terms(1, false, ptr::null_mut(), 0, &mut needed) };
    assert_eq!(s, MzStatus::BufferTooSmall);
    let mut buf = vec![0 as c_char; needed];
    let s = unsafe { mz_show_terms(1, false, buf.as_mut_ptr(), buf.len(), &mut needed) };
    assert_eq!(s, MzStatus::Ok);
    let text = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned();
    assert!(text.contains("sums: 4"), "{text}");
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/mzeuler.h");
    for name in [
        "mz_last_error_message",
        "mz_simulation_new_preset",
        "mz_simulation_new_config",
        "mz_simulation_free",
        "mz_simulation_step",
        "mz_simulation_time",
        "mz_simulation_energy",
        "mz_simulation_energy_rate",
        "mz_simulation_mode_count",
        "mz_simulation_copy_state",
        "mz_show_terms",
        "MZ_STATUS_BLOW_UP = 7",
    ] {
        assert!(header.contains(name), "{name} missing");
    }
}

/// Compiles `c/smoke.c` against the generated header and the static library.
#[test]
fn c_program_links_and_runs() {
    use std::path::{Path, PathBuf};
    use std::process::Command;

    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir: PathBuf = exe.parent().and_then(Path::parent).unwrap().to_path_buf();
    let lib = profile_dir.join("libmzeuler_ffi.a");
    if !lib.exists() {
        let mut build = Command::new(env!("CARGO"));
        build.args(["build", "-p", "mzeuler-ffi"]).current_dir(crate_dir);
        if profile_dir.ends_with("release") {
            build.arg("--release");
        }
        assert!(build.status().unwrap().success());
    }
    let out_dir = tempfile::tempdir().unwrap();
    let bin = out_dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(crate_dir.join("c/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "cc failed");
    let run = Command::new(&bin).output().unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(run.status.success(), "{stdout}{}", String::from_utf8_lossy(&run.stderr));
    assert!(stdout.starts_with("steps=10 t=0.010000"), "{stdout}");
}
