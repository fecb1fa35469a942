use std::path::Path;
use std::process::{Command, Output};

use ergoforge_cli::{report, run_exact, run_pvqd, run_vqergo, ExperimentConfig, RECORD_HEADER};
use tempfile::TempDir;

fn ergoforge(args: &[&str], dir: &Path, seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ergoforge"));
    cmd.args(args).current_dir(dir).env_remove("ERGOFORGE_SEED");
    if let Some(s) = seed {
        cmd.env("ERGOFORGE_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, json: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, json).unwrap();
    path.display().to_string()
}

fn body(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

const SMALL_NOISY: &str = r#"{"n_qubits":2,"m_values":[1],"t_points":5,"t_stop":0.8,
    "backend":"noisy","optimizer":"spsa","max_iterations":60,"seeds":4}"#;

#[test]
fn exact_command_writes_the_record_schema() {
    let dir = TempDir::new().unwrap();
    let out = ergoforge(&["exact", "--out", "res"], dir.path(), None);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("res/records.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), RECORD_HEADER);
    let rows = body(&csv);
    assert_eq!(rows.len(), 29 * 8);
    for r in &rows {
        assert_eq!(r.len(), 11);
        let (m, work, erg) = (r[1].parse::<usize>().unwrap(), num(&r[5]), num(&r[6]));
        if !r[7].is_empty() {
            assert!(num(&r[7]) <= 1.0 + 1e-9);
        }
        if m == 8 {
            assert!((erg - work).abs() < 1e-9);
        }
        if m == 1 && num(&r[0]) < 0.4 - 1e-9 {
            assert!(erg.abs() < 1e-12);
        }
        let mantissa = r[5].split('e').next().unwrap().trim_start_matches('-');
        assert_eq!(mantissa.len(), 18, "{}", r[5]);
    }
}

#[test]
fn correlations_are_optional() {
    let dir = TempDir::new().unwrap();
    let cfg = ExperimentConfig::from_json(r#"{"correlations":true,"t_points":3}"#).unwrap();
    let outputs = run_exact(&cfg).unwrap();
    let corr = outputs.get("correlations.csv").unwrap();
    assert_eq!(
        corr.lines().next().unwrap(),
        "site,ell,axis,t,value,config_hash"
    );
    // site 4 of 8 has offsets −4..=3 without 0, on two axes, at three times
    assert_eq!(corr.lines().count() - 1, 7 * 2 * 3);
    let plain = run_exact(&ExperimentConfig::from_json(r#"{"t_points":3}"#).unwrap()).unwrap();
    assert!(plain.get("correlations.csv").is_none());
    drop(dir);
}

#[test]
fn nearest_neighbour_xx_correlations_dominate() {
    let cfg = ExperimentConfig::from_json(
        r#"{"correlations":true,"t_start":0.4,"t_stop":0.45,"t_points":2}"#,
    )
    .unwrap();
    let corr = run_exact(&cfg).unwrap();
    let rows = body(corr.get("correlations.csv").unwrap());
    let at = |ell: &str, axis: &str| {
        rows.iter()
            .find(|r| r[1] == ell && r[2] == axis && num(&r[3]) == 0.4)
            .map(|r| num(&r[4]))
            .unwrap()
    };
    let nearest = at("1", "X").min(at("-1", "X"));
    for far in ["-4", "-3", "-2", "2", "3"] {
        assert!(nearest > at(far, "X"), "ℓ = {far}");
    }
}

#[test]
fn identical_invocations_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SMALL_NOISY);
    let a = ergoforge(
        &["vqergo", "--config", &cfg, "--out", "a", "--threads", "1"],
        dir.path(),
        None,
    );
    let b = ergoforge(
        &["vqergo", "--config", &cfg, "--out", "b", "--threads", "3"],
        dir.path(),
        None,
    );
    assert!(a.status.success() && b.status.success());
    for name in ["records.csv", "aggregates.csv", "trajectory.json"] {
        let x = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let y = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn seed_flag_and_environment_override() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SMALL_NOISY);
    let run = |out: &str, extra: &[&str], seed: Option<&str>| {
        let mut args = vec!["vqergo", "--config", &cfg, "--out", out];
        args.extend_from_slice(extra);
        let o = ergoforge(&args, dir.path(), seed);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read_to_string(dir.path().join(out).join("records.csv")).unwrap()
    };
    let base = run("base", &[], None);
    let two = run("two", &["--seeds", "2"], None);
    let reseeded = run("env", &[], Some("12345"));
    let count = |csv: &str| body(csv).iter().filter(|r| r[4] == "noisy-vq").count();
    assert_eq!(count(&base), 5 * 4);
    assert_eq!(count(&two), 5 * 2);
    assert_ne!(body(&base)[1][3], body(&reseeded)[1][3]);
    assert_ne!(body(&base)[0][10], body(&reseeded)[0][10]);
    let bad = ergoforge(&["exact", "--out", "x"], dir.path(), Some("-1"));
    assert!(!bad.status.success());
}

#[test]
fn rows_are_ordered_by_time_subsystem_depth_and_seed() {
    let cfg = ExperimentConfig::from_json(
        r#"{"protocol":"rxx-exact","n_qubits":3,"m_values":[2,1],"depths":[2,1],
            "t_points":3,"seeds":2}"#,
    )
    .unwrap();
    let csv = run_vqergo(&cfg).unwrap();
    let rows = body(csv.get("records.csv").unwrap());
    let keys: Vec<(f64, usize, String, String)> = rows
        .iter()
        .map(|r| {
            (
                num(&r[0]),
                r[1].parse().unwrap(),
                r[2].clone(),
                r[3].clone(),
            )
        })
        .collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(
                a.2.parse::<i64>()
                    .unwrap_or(-1)
                    .cmp(&b.2.parse::<i64>().unwrap_or(-1)),
            )
            .then(
                a.3.parse::<u64>()
                    .unwrap_or(0)
                    .cmp(&b.3.parse::<u64>().unwrap_or(0)),
            )
    });
    assert_eq!(keys, sorted);
    assert_eq!(rows.len(), 3 * 2 * (2 * 2 + 1));
}

#[test]
fn config_errors_fail_fast() {
    let dir = TempDir::new().unwrap();
    for json in [
        r#"{"n_qbits":4}"#,
        r#"{"h":0.0}"#,
        r#"{"t_points":3,"t_stop":-1}"#,
    ] {
        let cfg = write_config(dir.path(), json);
        let out = ergoforge(&["exact", "--config", &cfg, "--out", "x"], dir.path(), None);
        assert!(!out.status.success(), "{json}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("config"));
    }
    let cfg = write_config(dir.path(), r#"{"n_qubits":13}"#);
    assert!(!ergoforge(&["exact", "--config", &cfg], dir.path(), None)
        .status
        .success());
}

#[test]
fn missing_trajectory_is_reported() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), r#"{"n_qubits":2,"trajectory":"nowhere.json"}"#);
    let out = ergoforge(&["vqergo", "--config", &cfg], dir.path(), None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.json"));
}

#[test]
fn stored_trajectory_is_reused() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), r#"{"n_qubits":2,"pvqd_steps":28,"seeds":1}"#);
    assert!(
        ergoforge(&["pvqd", "--config", &cfg, "--out", "p"], dir.path(), None)
            .status
            .success()
    );
    let traj = dir.path().join("p/trajectory.json");
    let cfg = write_config(
        dir.path(),
        &format!(
            r#"{{"n_qubits":2,"m_values":[1],"seeds":2,"trajectory":{:?}}}"#,
            traj.display().to_string()
        ),
    );
    let out = ergoforge(
        &["vqergo", "--config", &cfg, "--out", "v"],
        dir.path(),
        None,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(!dir.path().join("v/trajectory.json").exists());
    let csv = std::fs::read_to_string(dir.path().join("v/records.csv")).unwrap();
    assert_eq!(body(&csv).len(), 29 * 3);
}

#[test]
fn pvqd_infidelity_table() {
    let cfg = ExperimentConfig::from_json(r#"{"n_qubits":2,"pvqd_depths":[1],"seeds":2}"#).unwrap();
    let out = run_pvqd(&cfg).unwrap();
    let rows = body(out.get("infidelity.csv").unwrap());
    assert_eq!(rows.len(), 2 * 15);
    for r in &rows {
        assert!(num(&r[6]) < 1e-3, "{r:?}");
        if r[2] == "0" {
            assert!(num(&r[6]) < 1e-9);
        }
    }
    assert_eq!(rows.iter().filter(|r| r[7] == "1").count(), 15);
    assert!(out.get("trajectory_d1_k0.json").is_some());
    assert!(out.get("trajectory_d1_k1.json").is_some());
}

#[test]
fn pvqd_best_seed_improves_with_depth() {
    let cfg =
        ExperimentConfig::from_json(r#"{"n_qubits":4,"pvqd_depths":[1,2],"seeds":3}"#).unwrap();
    let out = run_pvqd(&cfg).unwrap();
    let rows = body(out.get("infidelity.csv").unwrap());
    let best_final = |depth: &str| {
        rows.iter()
            .filter(|r| r[0] == depth && r[2] == "14")
            .map(|r| num(&r[6]))
            .fold(f64::INFINITY, f64::min)
    };
    assert!(best_final("2") <= best_final("1"));
}

#[test]
fn noisy_spread_exceeds_statevector_spread() {
    let agg = |json: &str| {
        let out = run_vqergo(&ExperimentConfig::from_json(json).unwrap()).unwrap();
        body(out.get("aggregates.csv").unwrap())
    };
    let noisy = agg(SMALL_NOISY);
    let ideal = agg(&SMALL_NOISY.replace(r#""backend":"noisy","optimizer":"spsa","#, ""));
    for (n, i) in noisy.iter().zip(&ideal).skip(1) {
        assert_eq!(n[0], i[0]);
        assert!(num(&n[7]) > num(&i[7]), "t = {}", n[0]);
    }
}

#[test]
fn report_round_trip_and_errors() {
    let dir = TempDir::new().unwrap();
    assert!(ergoforge(&["exact", "--out", "r"], dir.path(), None)
        .status
        .success());
    let out = ergoforge(&["report", "--out", "r"], dir.path(), None);
    assert!(out.status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r/summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["records"], 232);
    assert_eq!(summary["groups"].as_array().unwrap().len(), 8);

    std::fs::write(dir.path().join("empty.csv"), format!("{RECORD_HEADER}\n")).unwrap();
    let out = ergoforge(&["report", "empty.csv", "--out", "e"], dir.path(), None);
    assert!(out.status.success());
    let empty = std::fs::read_to_string(dir.path().join("e/summary.json")).unwrap();
    assert!(empty.contains("\"groups\": []"));

    let csv = std::fs::read_to_string(dir.path().join("r/records.csv")).unwrap();
    let mut lines: Vec<&str> = csv.lines().collect();
    lines[3] = "0.1,1,,,exact,nope";
    std::fs::write(dir.path().join("bad.csv"), lines.join("\n")).unwrap();
    let out = ergoforge(&["report", "bad.csv"], dir.path(), None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
}

#[test]
fn exact_report_shows_the_qualitative_charging_facts() {
    let cfg = ExperimentConfig::default();
    let csv = run_exact(&cfg).unwrap();
    let summary = report(csv.get("records.csv").unwrap(), "exact").unwrap();
    let peaks: Vec<f64> = summary.groups.iter().map(|g| g.peak).collect();
    assert!(peaks.windows(2).all(|w| w[1] > w[0]), "{peaks:?}");
    let m1 = &summary.groups[0];
    for p in &m1.series {
        if p.t < 0.4 - 1e-9 || p.t > 1.2 - 1e-9 {
            assert!(p.mean.abs() < 1e-12, "t = {}", p.t);
        }
    }
    let full = summary.groups.last().unwrap();
    assert!((full.efficiency_min.unwrap() - 1.0).abs() < 1e-9);
    assert!((full.efficiency_max.unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn simplified_protocol_peaks_at_twice_the_field() {
    let cfg = ExperimentConfig::from_json(r#"{"protocol":"rxx-exact","n_qubits":6}"#).unwrap();
    let csv = run_exact(&cfg).unwrap();
    let summary = report(csv.get("records.csv").unwrap(), "rxx").unwrap();
    let m1 = &summary.groups[0];
    assert!((m1.peak - 1.2).abs() < 1e-9);
    assert!((2.0 * m1.argmax_t - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
}
