use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mcaimem::cli::output::read_manifest;
use mcaimem::retention::RetentionCalibration;

fn mcaimem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcaimem")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_config(dir: &Path) -> String {
    let p = dir.join("small.json");
    fs::write(&p, r#"{"array": {"banks": 2, "rows_per_bank": 4, "bytes_per_row": 4}}"#).unwrap();
    p.display().to_string()
}

#[test]
fn calibrate_output_feeds_other_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cal");
    let r = mcaimem(&["--out", path(&out), "calibrate"]);
    assert!(r.status.success());
    let cal: RetentionCalibration =
        serde_json::from_str(&fs::read_to_string(out.join("calibration.json")).unwrap()).unwrap();
    assert!((cal.sigma - 0.0204).abs() < 1e-4);

    let curves = dir.path().join("curves");
    let cal_path = out.join("calibration.json");
    let r = mcaimem(&["--out", path(&curves), "--config", path(&cal_path), "curves"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = fs::read_to_string(curves.join("curves.csv")).unwrap();
    assert!(text.starts_with("v_ref,t_us,p_flip\n"));
    assert_eq!(text.lines().count(), 1 + 4 * 201);
}

#[test]
fn single_vref_anchors_fail_with_domain_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let anchors = dir.path().join("a.csv");
    fs::write(&anchors, "t_us,v_ref,p\n12.57,0.8,0.01\n13,0.8,0.25\n14,0.8,0.5\n").unwrap();
    let r = mcaimem(&["--out", path(dir.path()), "calibrate", "--anchors", path(&anchors)]);
    assert_eq!(r.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&r.stderr).contains("V_REF"));
}

#[test]
fn curves_are_ordered_by_vref() {
    let dir = tempfile::tempdir().unwrap();
    let r = mcaimem(&[
        "--out",
        path(dir.path()),
        "--format",
        "json",
        "curves",
        "--points",
        "41",
    ]);
    assert!(r.status.success());
    let rows: Vec<serde_json::Value> =
        serde_json::from_str(&fs::read_to_string(dir.path().join("curves.json")).unwrap()).unwrap();
    assert_eq!(rows.len(), 4 * 41);
    let p = |i: usize| rows[i]["p_flip"].as_f64().unwrap();
    for k in 0..41 {
        for c in 0..3 {
            assert!(p(c * 41 + k) >= p((c + 1) * 41 + k));
        }
    }
}

#[test]
fn memsim_empty_trace_gives_zero_report() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    fs::write(&trace, "t_ns,op,bank,row,col,value_hex\n").unwrap();
    let out = dir.path().join("o");
    let cfg = small_config(dir.path());
    let r = mcaimem(&[
        "--out",
        path(&out),
        "--config",
        &cfg,
        "--format",
        "json",
        "memsim",
        "--trace",
        path(&trace),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("energy.json")).unwrap()).unwrap();
    assert_eq!(report[0]["total_j"].as_f64(), Some(0.0));
    assert_eq!(report[0]["refresh_count"].as_u64(), Some(0));
}

#[test]
fn memsim_all_ones_without_refresh_is_lossless() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let mut text = String::from("t_ns,op,bank,row,col,value_hex\n");
    for i in 0..32u64 {
        text += &format!("{i},W,{},{},{},ff\n", i / 16, (i / 4) % 4, i % 4);
    }
    for i in 0..32u64 {
        text += &format!(
            "{},R,{},{},{},ff\n",
            1_000_000 + i * 100_000,
            i / 16,
            (i / 4) % 4,
            i % 4
        );
    }
    fs::write(&trace, text).unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("o");
    let r = mcaimem(&[
        "--out",
        path(&out),
        "--config",
        &cfg,
        "memsim",
        "--trace",
        path(&trace),
        "--no-refresh",
    ]);
    assert!(r.status.success());
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let row: Vec<&str> = summary.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[..5], ["32", "32", "0", "0", "0"]);
}

#[test]
fn memsim_rejects_bad_traces() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    fs::write(&trace, "t_ns,op,bank,row,col,value_hex\n0,Q,0,0,0,00\n").unwrap();
    let cfg = small_config(dir.path());
    let r = mcaimem(&[
        "--out",
        path(dir.path()),
        "--config",
        &cfg,
        "memsim",
        "--trace",
        path(&trace),
    ]);
    assert_eq!(r.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&r.stderr).contains(":2:"));
    let missing = dir.path().join("missing.csv");
    let r = mcaimem(&["--out", path(dir.path()), "memsim", "--trace", path(&missing)]);
    assert_eq!(r.status.code(), Some(4));
}

#[test]
fn energy_reports_comparison_sweep_and_ops() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("rram.json");
    fs::write(&cfg, r#"{"energy": {"rram": {"read_pj": 1.0, "write_pj": 20.0}}}"#).unwrap();
    let r = mcaimem(&["--out", path(dir.path()), "--config", path(&cfg), "energy"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));

    let mut rdr = csv::Reader::from_path(dir.path().join("comparison.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    let techs: Vec<&str> = rows.iter().map(|r| &r[0]).collect();
    assert_eq!(techs, ["sram", "edram", "mcaimem", "rram"]);
    let ratio: f64 = rows[2][7].parse().unwrap();
    assert!((2.8..=4.0).contains(&ratio), "{ratio}");

    let mut rdr = csv::Reader::from_path(dir.path().join("refresh_sweep.csv")).unwrap();
    let refresh: Vec<f64> = rdr.records().map(|r| r.unwrap()[3].parse().unwrap()).collect();
    assert_eq!(refresh.len(), 4);
    assert!(refresh.windows(2).all(|w| w[0] > w[1]));

    let ops = fs::read_to_string(dir.path().join("ops_per_watt.csv")).unwrap();
    assert!(ops.contains("eyeriss,reference,0.425"));
    assert!(ops.contains("tpuv1,reference,0.37"));

    let layers = fs::read_to_string(dir.path().join("layers.csv")).unwrap();
    // 54 layers plus a total row, for each of the four technologies.
    assert_eq!(layers.lines().count(), 1 + 4 * 55);
}

#[test]
fn energy_without_rram_config_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let r = mcaimem(&["--out", path(dir.path()), "energy", "--tech", "sram,rram"]);
    assert_eq!(r.status.code(), Some(3));
    let r = mcaimem(&["--out", path(dir.path()), "energy", "--preset", "tpu9"]);
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn inject_writes_sweep_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let r = mcaimem(&["--out", path(dir.path()), "inject"]);
    assert!(r.status.success());
    let sweep = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(sweep.starts_with("rate,mode,mre,mae,max_abs,flips\n"));
    assert_eq!(sweep.lines().count(), 9);
    let m = read_manifest(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(m.command, "inject");
    assert_eq!(m.argv, ["inject"]);
    let files: Vec<&str> = m.outputs.iter().map(|o| o.file.as_str()).collect();
    assert_eq!(files, ["sweep.csv", "histogram.csv"]);
}

#[test]
fn inject_rejects_malformed_tensors() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.bin");
    fs::write(&t, [1u8, 2, 3]).unwrap();
    fs::write(dir.path().join("t.bin.hdr"), "dtype: int8\nshape: 2,2\n").unwrap();
    let r = mcaimem(&["--out", path(dir.path()), "inject", "--tensor", path(&t)]);
    assert_eq!(r.status.code(), Some(3));
    let r = mcaimem(&["--out", path(dir.path()), "inject", "--rates", "0.5,2"]);
    assert_eq!(r.status.code(), Some(3));
    let r = mcaimem(&["--out", path(dir.path()), "inject", "--rates", "x"]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn inject_evaluates_the_classifier_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let fx = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/digits");
    let r = mcaimem(&[
        "--out",
        path(dir.path()),
        "inject",
        "--rates",
        "0",
        "--model",
        path(&fx.join("model.json")),
        "--inputs",
        path(&fx.join("inputs.bin")),
        "--labels",
        path(&fx.join("labels.csv")),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = fs::read_to_string(dir.path().join("classifier.csv")).unwrap();
    for line in text.lines().skip(1) {
        assert!(line.ends_with(",0.0"), "rate 0 must not change accuracy: {line}");
    }
}

#[test]
fn rerun_detects_tampered_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    assert!(mcaimem(&["--out", path(&a), "curves", "--points", "11"])
        .status
        .success());
    let manifest = a.join("manifest.json");
    let mut m: serde_json::Value = serde_json::from_str(&fs::read_to_string(&manifest).unwrap()).unwrap();
    m["outputs"][0]["sha256"] = "00".into();
    fs::write(&manifest, serde_json::to_string(&m).unwrap()).unwrap();
    let r = mcaimem(&[
        "--out",
        path(&dir.path().join("b")),
        "rerun",
        "--manifest",
        path(&manifest),
    ]);
    assert_eq!(r.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&r.stdout).contains("DIFFERENT  curves.csv"));
}
