use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ks-spikes")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Data rows of a CSV, skipping the hash comment and the header.
fn rows(path: impl AsRef<Path>) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

const TABLE_ROW: &str = "# one spike, first table row\nd1 = 1\nd2 = 0.02\nchi = 1\nmu = 0.25\nubar = 2\nN = 1\n";

#[test]
fn equilibrium_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("row.cfg");
    std::fs::write(&cfg, TABLE_ROW).unwrap();
    let out = dir.path().join("out");
    let r = run(&["equilibrium", "--config", cfg.to_str().unwrap()], &out);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let eq = json(out.join("equilibrium.json"));
    let v = eq["v_max0"].as_f64().unwrap();
    assert!((v - 2.717494829).abs() < 1e-6, "{v}");
    assert!((eq["u_max"].as_f64().unwrap() - v * v / 2.0).abs() < 1e-12);
    assert!(eq["s0"].as_f64().unwrap() > 0.0);
    let hash = eq["config_sha256"].as_str().unwrap().to_string();
    for name in ["profile.csv", "resolved_config.txt"] {
        let text = std::fs::read_to_string(out.join(name)).unwrap();
        assert_eq!(text.lines().next().unwrap(), format!("# config-sha256: {hash}"));
    }
    let echo = std::fs::read_to_string(out.join("resolved_config.txt")).unwrap();
    assert!(echo.contains("d2 = 0.02\n") && echo.contains("mu = 0.25\n"));
    let profile = rows(out.join("profile.csv"));
    assert_eq!(profile.len(), 2001);
    let balance = json(out.join("balance.json"));
    assert!(balance["ratio_to_eps_v_max"].as_f64().unwrap() < 5.0);
}

#[test]
fn three_spikes_share_one_amplitude() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(&["equilibrium", "--override", "N=3"], dir.path());
    assert!(r.status.success());
    let amps: Vec<f64> = json(dir.path().join("equilibrium.json"))["amplitudes"].as_array().unwrap().iter().map(|a| a.as_f64().unwrap()).collect();
    assert_eq!(amps.len(), 3);
    assert!(amps.iter().all(|a| (a - amps[0]).abs() < 1e-12));
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert!(run(&["stability", "--override", "sweep_points=12", "--threads", "2"], out).status.success());
    }
    for name in ["sweep.csv", "thresholds.json", "resolved_config.txt"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn resonant_d1_is_a_solver_failure() {
    let dir = tempfile::tempdir().unwrap();
    let d1t1 = format!("d1={}", 8.0 / std::f64::consts::PI.powi(2));
    let r = run(&["equilibrium", "--override", &d1t1], dir.path());
    assert_eq!(r.status.code(), Some(3));
    let err = json(dir.path().join("error.json"));
    assert_eq!(err["error"], "resonant d1");
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for bad in ["nope=1", "N=0", "locations=0.2", "d1"] {
        let r = run(&["equilibrium", "--override", bad], dir.path());
        assert_eq!(r.status.code(), Some(2), "{bad}");
    }
    let r = run(&["equilibrium", "--config", "/nonexistent.cfg"], dir.path());
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn one_spike_stability_report() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(&["stability", "--override", "N=1", "--override", "sweep_points=5"], dir.path());
    assert!(r.status.success());
    let t = json(dir.path().join("thresholds.json"));
    assert_eq!(t["small_eigenvalues"], "always stable (small)");
    assert_eq!(t["competition"], "no finite d1c1");
    assert!(t["d1c_n"].is_null());
}

#[test]
fn two_spike_sweep_crosses_small_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(&["stability", "--override", "sweep_d1_min=0.9", "--override", "sweep_d1_max=2", "--override", "sweep_points=23"], dir.path());
    assert!(r.status.success());
    let d1s = json(dir.path().join("thresholds.json"))["d1s_n"].as_f64().unwrap();
    let sweep = rows(dir.path().join("sweep.csv"));
    let crossing = sweep.windows(2).find(|w| w[0][2].parse::<f64>().unwrap() > 0.0 && w[1][2].parse::<f64>().unwrap() < 0.0).expect("h_2 changes sign");
    let (lo, hi): (f64, f64) = (crossing[0][0].parse().unwrap(), crossing[1][0].parse().unwrap());
    assert!(lo < d1s && d1s < hi, "{lo} {d1s} {hi}");
}

#[test]
fn hopf_flag_writes_curve_and_assertion_fails_above_it() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["stability", "--override", "N=1", "--override", "sweep_points=2", "--override", "hopf=true", "--override", "hopf_points=3", "--override", "tau=2", "--override", "d1=3"];
    let r = run(&args, dir.path());
    assert!(r.status.success());
    let curve = rows(dir.path().join("hopf.csv"));
    assert_eq!(curve.len(), 3);
    assert!(curve.iter().all(|r| r[1].parse::<f64>().unwrap() > 0.0 && r[2].parse::<f64>().unwrap() > 0.0));
    let r = run(&[&args[..], &["--override", "assert_stable=true"]].concat(), dir.path());
    assert_eq!(r.status.code(), Some(4));
}

#[test]
fn equilibrium_start_gives_constant_dae_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(&["dae", "--override", "samples=4"], dir.path());
    assert!(r.status.success());
    for row in rows(dir.path().join("dae_trajectory.csv")) {
        assert!((row[1].parse::<f64>().unwrap() + 0.5).abs() < 1e-8);
        assert!((row[2].parse::<f64>().unwrap() - 0.5).abs() < 1e-8);
    }
}

#[test]
fn compare_tracks_single_spike() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("row.cfg");
    std::fs::write(&cfg, format!("{TABLE_ROW}locations = -0.1\nsamples = 6\n")).unwrap();
    let r = run(&["compare", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let s = json(dir.path().join("compare_summary.json"));
    assert!(s["max_discrepancy"].as_f64().unwrap() < 0.03);
    assert_eq!(rows(dir.path().join("discrepancy.csv")).len(), 6);
    assert_eq!(rows(dir.path().join("pde_trajectory.csv")).len(), 6);
}

#[test]
fn steady_pde_matches_table_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("row.cfg");
    std::fs::write(&cfg, format!("{TABLE_ROW}tau = 0.005\nsteady = true\ndt_max = 2\n")).unwrap();
    let r = run(&["pde", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let s = json(dir.path().join("spikes.json"));
    let last = &s["snapshots"][1]["report"]["spikes"][0];
    assert!((last["u_max"].as_f64().unwrap() - 3.895).abs() < 0.01);
    assert_eq!(rows(dir.path().join("snapshot_001.csv")).len(), s["n_cells"].as_u64().unwrap() as usize);
}

#[test]
fn upward_ramp_logs_collapse() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(&["ramp"], dir.path());
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let events = rows(dir.path().join("ramp_events.csv"));
    assert_eq!(events[0][2], "2");
    assert_eq!(events.last().unwrap()[2], "1");
}
