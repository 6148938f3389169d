use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use mcaimem_ffi::*;

fn last_error() -> String {
    let p = mcaimem_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn codec_round_trips_every_pattern() {
    for x in i8::MIN..=i8::MAX {
        assert_eq!(mcaimem_decode(mcaimem_encode(x)), x);
    }
    for b in 0..=u8::MAX {
        assert_eq!(mcaimem_encode(mcaimem_decode(b)), b);
    }
}

#[test]
fn retention_queries_match_the_core_crate() {
    let core = mcaimem::retention::RetentionCalibration::default();
    let cal = mcaimem_calibration_default();
    let mut t = 0.0;
    let mut p = 0.0;
    unsafe {
        assert_eq!(mcaimem_refresh_interval(cal, 0.6, 0.01, &mut t), McaimemStatus::Ok);
        assert_eq!(t, core.refresh_interval(0.6, 0.01).unwrap());
        assert_eq!(mcaimem_flip_probability(cal, 13.0, 0.8, &mut p), McaimemStatus::Ok);
        assert_eq!(p, core.flip_probability(13.0, 0.8).unwrap());
        assert_eq!(mcaimem_flip_probability(cal, -1.0, 0.8, &mut p), McaimemStatus::Domain);
        assert_eq!(
            mcaimem_flip_probability(ptr::null(), 1.0, 0.8, &mut p),
            McaimemStatus::NullPointer
        );
        assert_eq!(last_error(), "cal is null");
        assert_eq!(
            mcaimem_refresh_interval(cal, 0.8, 0.01, ptr::null_mut()),
            McaimemStatus::NullPointer
        );
        mcaimem_calibration_free(cal);
        mcaimem_calibration_free(ptr::null_mut());
    }
}

#[test]
fn calibration_json_is_validated() {
    let json = serde_json::to_string(&mcaimem::retention::RetentionCalibration::default()).unwrap();
    let good = CString::new(json.clone()).unwrap();
    let bad = CString::new(json.replace("\"sigma\":0.0", "\"sigma\":-0.0")).unwrap();
    let mut cal = ptr::null_mut();
    unsafe {
        assert_eq!(
            mcaimem_calibration_from_json(good.as_ptr(), &mut cal),
            McaimemStatus::Ok
        );
        assert!(!cal.is_null());
        mcaimem_calibration_free(cal);
        let garbage = CString::new("{not json").unwrap();
        assert_eq!(
            mcaimem_calibration_from_json(garbage.as_ptr(), &mut cal),
            McaimemStatus::Format
        );
        assert_eq!(
            mcaimem_calibration_from_json(bad.as_ptr(), &mut cal),
            McaimemStatus::Calibration
        );
    }
}

#[test]
fn array_handle_lifecycle() {
    let cal = mcaimem_calibration_default();
    let mut cfg = mcaimem_array_config_default();
    cfg.banks = 2;
    cfg.rows_per_bank = 4;
    cfg.bytes_per_row = 4;
    cfg.refresh_enabled = false;
    let mut arr = ptr::null_mut();
    let mut bits = 0u8;
    let mut n = 0u64;
    let mut c = McaimemCounters::default();
    unsafe {
        assert_eq!(mcaimem_array_new(&cfg, cal, 3, &mut arr), McaimemStatus::Ok);
        assert_eq!(mcaimem_array_write(arr, 0, 1, 2, 0xff, 0), McaimemStatus::Ok);
        assert_eq!(mcaimem_array_write(arr, 0, 0, 0, 0x80, 0), McaimemStatus::Ok);
        assert_eq!(mcaimem_array_advance(arr, 1_000_000, &mut n), McaimemStatus::Ok);
        assert_eq!(n, 0);
        assert_eq!(
            mcaimem_array_read(arr, 0, 1, 2, 1_000_000, &mut bits),
            McaimemStatus::Ok
        );
        assert_eq!(bits, 0xff);
        // Zeros left a millisecond without refresh all read as ones.
        assert_eq!(
            mcaimem_array_read(arr, 0, 0, 0, 1_000_000, &mut bits),
            McaimemStatus::Ok
        );
        assert_eq!(bits, 0xff);
        // Untouched cells hold encode(0), which has no zeros to lose.
        assert_eq!(
            mcaimem_array_read(arr, 1, 3, 3, 1_000_000, &mut bits),
            McaimemStatus::Ok
        );
        assert_eq!(bits, 0x7f);
        assert_eq!(mcaimem_array_write(arr, 0, 0, 0, 0, 10), McaimemStatus::TimeRegression);
        assert_eq!(
            mcaimem_array_refresh_row(arr, 3, 0, 1_000_000),
            McaimemStatus::AddressOutOfRange
        );
        assert_eq!(mcaimem_array_counters(arr, &mut c), McaimemStatus::Ok);
        assert_eq!((c.reads, c.writes, c.row_refreshes, c.flips), (3, 2, 0, 7));
        mcaimem_array_free(arr);

        cfg.banks = 0;
        assert_eq!(mcaimem_array_new(&cfg, cal, 3, &mut arr), McaimemStatus::Domain);
        mcaimem_calibration_free(cal);
    }
}

#[test]
fn energy_and_dataflow_entry_points() {
    let p = mcaimem::energy::EnergyParams::default();
    let mut v = 0.0;
    unsafe {
        assert_eq!(
            mcaimem_static_power(McaimemTech::Mcaimem, 0.3, 2.0, &mut v),
            McaimemStatus::Ok
        );
        assert_eq!(v, p.static_power(mcaimem::energy::Tech::Mcaimem, 0.3, 2.0).unwrap());
        assert_eq!(
            mcaimem_access_energy(McaimemTech::Sram, McaimemAccess::Write, 1.0, &mut v),
            McaimemStatus::Ok
        );
        assert_eq!(v, p.sram.write_pj.max);
        assert_eq!(
            mcaimem_access_energy(McaimemTech::Edram, McaimemAccess::Read, 1.5, &mut v),
            McaimemStatus::Domain
        );
        assert_eq!(mcaimem_ops_per_watt_gain(0.425, 1.0, &mut v), McaimemStatus::Ok);
        assert_eq!(v, 0.0);
        assert_eq!(mcaimem_ops_per_watt_gain(1.0, 0.5, &mut v), McaimemStatus::Domain);

        let conv = McaimemLayer {
            ifmap_h: 56,
            ifmap_w: 56,
            filter_h: 3,
            filter_w: 3,
            channels: 64,
            num_filters: 64,
            stride: 1,
        };
        let mut s = McaimemLayerStats::default();
        assert_eq!(
            mcaimem_simulate_layer(&conv, McaimemPreset::Eyeriss, &mut s),
            McaimemStatus::Ok
        );
        let (n, w, m): (u64, u64, u64) = (54 * 54, 3 * 3 * 64, 64);
        assert_eq!(s.cycles, n.div_ceil(12) * m.div_ceil(14) * (w + 12 + 14 - 2));
        assert_eq!(s.ifmap_reads_bytes, n * w);
        assert_eq!(s.filter_reads_bytes, m * w);
        assert_eq!(s.ofmap_writes_bytes, n * m);
        let bad = McaimemLayer { stride: 0, ..conv };
        assert_eq!(
            mcaimem_simulate_layer(&bad, McaimemPreset::Tpuv1, &mut s),
            McaimemStatus::Domain
        );
    }
}

#[test]
fn errors_are_thread_local() {
    unsafe {
        mcaimem_ops_per_watt_gain(0.4, 1.0, ptr::null_mut());
    }
    let here = last_error();
    let there = std::thread::spawn(|| mcaimem_last_error().is_null()).join().unwrap();
    assert!(there);
    assert_eq!(here, "out is null");
}

fn target_dir() -> PathBuf {
    // target/<profile>/deps/<test binary>
    std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf()
}

#[test]
fn c_program_links_against_the_static_library() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libmcaimem_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(manifest.join("tests/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "ok\n");
}
