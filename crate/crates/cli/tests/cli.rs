use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_3, FRAC_PI_4};
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn qwalk(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qwalk"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("qwalk runs")
}

fn ok(out: &Path, args: &[&str]) {
    let o = qwalk(out, args);
    assert!(
        o.status.success(),
        "qwalk {args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

/// Rows of a CSV file as header-keyed maps.
fn rows(path: &Path) -> Vec<HashMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    r.records()
        .map(|rec| header.iter().cloned().zip(rec.unwrap().iter().map(String::from)).collect())
        .collect()
}

fn num(row: &HashMap<String, String>, col: &str) -> f64 {
    row[col].parse().unwrap()
}

#[test]
fn walk_emits_full_window_normalised() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["walk", "--theta1", "0.25pi", "--steps", "200"]);
    let text = fs::read_to_string(dir.path().join("walk.csv")).unwrap();
    assert!(!text.contains('\r'));
    let r = rows(&dir.path().join("walk.csv"));
    assert_eq!(r.len(), 401);
    assert_eq!(r[0]["x"], "-200");
    assert_eq!(r[400]["x"], "200");
    let total: f64 = r.iter().map(|row| num(row, "p")).sum();
    assert!((total - 1.0).abs() <= 1e-12);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("walk.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["steps"], 200);
    assert!(meta["version"].is_string());
    assert!(meta["wall_time_seconds"].is_number());
}

#[test]
fn walk_output_is_byte_identical_across_runs() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = ["walk", "--theta1", "0.3", "--theta2", "1.1", "--period", "3", "--steps", "60", "--record", "10,20", "--amplitudes"];
    ok(a.path(), &args);
    ok(b.path(), &args);
    for f in ["walk.csv", "walk_summary.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
    }
    let r = rows(&a.path().join("walk.csv"));
    assert!(r[0].contains_key("up_im"));
    let steps: Vec<String> = rows(&a.path().join("walk_summary.csv")).into_iter().map(|r| r["step"].clone()).collect();
    assert_eq!(steps, ["10", "20", "60"]);
}

#[test]
fn two_period_sigma_follows_min_law() {
    let dir = TempDir::new().unwrap();
    let sigma = |args: &[&str], sub: &str| {
        let d = dir.path().join(sub);
        let mut full = vec!["walk", "--steps", "200", "--delta", "0.25pi"];
        full.extend_from_slice(args);
        ok(&d, &full);
        num(&rows(&d.join("walk_summary.csv"))[0], "sigma")
    };
    let two = sigma(&["--period", "2", "--theta1", "0.25pi", "--theta2", "1/3pi"], "two");
    let s1 = sigma(&["--theta1", "0.25pi"], "one");
    let s2 = sigma(&["--theta1", "1/3pi"], "other");
    let m = s1.min(s2);
    assert!((two - m).abs() / m <= 0.05, "{two} vs {m}");
}

#[test]
fn compare_accepts_split_step_and_two_period_pairs() {
    let dir = TempDir::new().unwrap();
    let ss = dir.path().join("ss");
    let tp = dir.path().join("tp");
    let bad = dir.path().join("bad");
    ok(&ss, &["walk", "--split-step", "--theta1", "0.25pi", "--theta2", "1/3pi", "--steps", "100", "--delta", "0.25pi"]);
    ok(&tp, &["walk", "--period", "2", "--theta1", "0.25pi", "--theta2", "1/3pi", "--steps", "200", "--delta", "0.25pi"]);
    ok(&bad, &["walk", "--period", "2", "--theta1", "1/3pi", "--theta2", "0.25pi", "--steps", "200", "--delta", "0.25pi"]);
    let cmp = |other: &Path| {
        qwalk(
            dir.path(),
            &[
                "compare",
                "--split",
                ss.join("walk.csv").to_str().unwrap(),
                "--two-period",
                other.join("walk.csv").to_str().unwrap(),
            ],
        )
    };
    let good = cmp(&tp);
    assert!(good.status.success(), "{}", String::from_utf8_lossy(&good.stderr));
    assert_eq!(cmp(&bad).status.code(), Some(3));
}

#[test]
fn sweep_two_period_surface_is_symmetric_with_peak_at_origin() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &["sweep", "--period", "2", "--steps", "25", "--delta", "0.25pi", "--grid1", "0:0.5pi:51", "--grid2", "0:0.5pi:51"],
    );
    let r = rows(&dir.path().join("sweep.csv"));
    assert_eq!(r.len(), 51 * 51);
    let sigma: Vec<f64> = r.iter().map(|row| num(row, "sigma")).collect();
    for i in 0..51 {
        for j in 0..51 {
            assert!((sigma[i * 51 + j] - sigma[j * 51 + i]).abs() <= 1e-9);
        }
    }
    let best = (0..sigma.len()).max_by(|&a, &b| sigma[a].total_cmp(&sigma[b])).unwrap();
    assert_eq!((num(&r[best], "theta1"), num(&r[best], "theta2")), (0.0, 0.0));
}

#[test]
fn sweep_rows_do_not_depend_on_worker_count() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = ["sweep", "--period", "3", "--steps", "30", "--grid1", "0:1:7", "--grid2", "0.2:2:5"];
    let mut one = vec!["--threads", "1"];
    one.extend_from_slice(&args);
    let mut four = vec!["--threads", "4"];
    four.extend_from_slice(&args);
    ok(a.path(), &one);
    ok(b.path(), &four);
    assert_eq!(fs::read(a.path().join("sweep.csv")).unwrap(), fs::read(b.path().join("sweep.csv")).unwrap());
}

#[test]
fn three_period_bound_column_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["sweep", "--period", "3", "--steps", "100", "--grid1", "0:0.5pi:11", "--grid2", "0:0.5pi:11"]);
    for row in rows(&dir.path().join("sweep.csv")) {
        let (a, b) = (num(&row, "theta1"), num(&row, "theta2"));
        let expected = 50.0 * (a.cos().abs() + (a.cos() * b.cos()).abs());
        assert!((num(&row, "spread_bound") - expected).abs() <= 1e-12 * expected.max(1.0));
    }
}

#[test]
fn single_point_sweep_matches_walk_summary() {
    let dir = TempDir::new().unwrap();
    let common = ["--period", "2", "--theta1", "0.4", "--theta2", "1.2", "--steps", "80", "--delta", "0.25pi"];
    let mut walk = vec!["walk"];
    walk.extend_from_slice(&common);
    let mut sweep = vec!["sweep"];
    sweep.extend_from_slice(&common);
    ok(&dir.path().join("w"), &walk);
    ok(&dir.path().join("s"), &sweep);
    let w = &rows(&dir.path().join("w/walk_summary.csv"))[0];
    let s = &rows(&dir.path().join("s/sweep.csv"))[0];
    for col in ["step", "total", "mean", "sigma", "quantile_radius", "support_radius", "entropy"] {
        assert_eq!(w[col], s[col], "{col}");
    }
}

#[test]
fn dispersion_tables() {
    let dir = TempDir::new().unwrap();
    ok(&dir.path().join("free"), &["dispersion", "--theta1", "0", "--k-count", "101"]);
    for row in rows(&dir.path().join("free/dispersion.csv")) {
        let k = num(&row, "k");
        let wrap = |w: f64| (w + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI) - std::f64::consts::PI;
        assert!(wrap(num(&row, "omega_plus") + k).abs() < 1e-12);
        assert!((num(&row, "v_plus") + 1.0).abs() < 1e-9);
        assert!((num(&row, "v_minus") - 1.0).abs() < 1e-9);
    }

    ok(&dir.path().join("quarter"), &["dispersion", "--theta1", "0.25pi"]);
    let vmax = rows(&dir.path().join("quarter/dispersion.csv"))
        .iter()
        .map(|r| num(r, "v_plus").abs().max(num(r, "v_minus").abs()))
        .fold(0.0, f64::max);
    assert!((vmax - FRAC_PI_4.cos()).abs() <= 1e-9, "{vmax}");

    ok(&dir.path().join("two"), &["dispersion", "--period", "2", "--theta1", "0.25pi", "--theta2", "1/3pi", "--k-count", "33"]);
    for row in rows(&dir.path().join("two/dispersion.csv")) {
        assert!((num(&row, "v_law") - FRAC_PI_4.cos() * FRAC_PI_3.cos()).abs() < 1e-15);
    }
}

#[test]
fn figure_presets() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["figure", "4"]);
    for row in rows(&dir.path().join("figure4_group_velocity.csv")) {
        let (a, b) = (num(&row, "theta1"), num(&row, "theta2"));
        assert_eq!(num(&row, "v_law"), a.cos() * b.cos());
    }

    ok(dir.path(), &["figure", "9"]);
    for f in ["figure9_pair1_entropy.csv", "figure9_pair2_entropy.csv"] {
        let r = rows(&dir.path().join(f));
        assert_eq!(r.len(), 201);
        for row in &r {
            for (k, v) in row {
                if k != "step" {
                    let e: f64 = v.parse().unwrap();
                    assert!((0.0..=1.0).contains(&e));
                }
            }
        }
    }

    ok(dir.path(), &["figure", "8", "--steps", "60"]);
    let bounds = rows(&dir.path().join("figure8_bounds.csv"));
    assert_eq!(bounds.len(), 3);
    let (c1, c2) = (FRAC_PI_4.cos(), FRAC_PI_3.cos());
    for row in &bounds {
        let n = num(row, "n");
        let expected = 60.0 / (n - 1.0) * ((n - 2.0) * c1 + c1 * c2);
        assert!((num(row, "bound") - expected).abs() < 1e-12);
        assert!(num(row, "support_radius") <= 60.0);
    }
    assert!(dir.path().join("figure8.meta.json").exists());
}

#[test]
fn json_format() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["--format", "json", "walk", "--theta1", "0.5", "--steps", "4"]);
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("walk.json")).unwrap()).unwrap();
    assert_eq!(doc["columns"][2], "p");
    assert_eq!(doc["rows"].as_array().unwrap().len(), 9);
}

#[test]
fn config_file_with_flag_override() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"schedule": {"kind": "n_period", "n": 2, "theta1": "0.25pi", "theta2": "1/3pi"}, "steps": 50}"#,
    )
    .unwrap();
    ok(dir.path(), &["walk", "--config", cfg.to_str().unwrap(), "--steps", "10"]);
    assert_eq!(rows(&dir.path().join("walk_summary.csv"))[0]["step"], "10");
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(qwalk(dir.path(), &["walk", "--theta1", "notanangle"]).status.code(), Some(2));
    assert_eq!(qwalk(dir.path(), &["walk", "--period", "2", "--theta1", "1"]).status.code(), Some(2));
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{\"steps\": 3,\n \"stepz\": 4}").unwrap();
    let o = qwalk(dir.path(), &["walk", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    assert_eq!(
        qwalk(dir.path(), &["walk", "--config", dir.path().join("missing.json").to_str().unwrap()]).status.code(),
        Some(4)
    );
    let file = dir.path().join("occupied");
    fs::write(&file, "x").unwrap();
    assert_eq!(qwalk(&file, &["walk", "--theta1", "1"]).status.code(), Some(4));
    assert_eq!(
        qwalk(dir.path(), &["sweep", "--period", "2", "--theta2", "1", "--grid1", "0:4:3"]).status.code(),
        Some(2)
    );
}

#[test]
fn selfcheck_passes() {
    let dir = TempDir::new().unwrap();
    let o = qwalk(dir.path(), &["selfcheck"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}
