use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use weaktime::harness::output::parse_csv;
use weaktime::harness::ExperimentConfig;

fn weaktime(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weaktime"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("WEAKTIME_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, cfg: &ExperimentConfig) -> PathBuf {
    let path = dir.join(format!("{}.json", cfg.name));
    std::fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

/// A small grid that runs in well under a second.
fn quick() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::reference();
    cfg.name = "quick".into();
    cfg.grid.panels = 10;
    cfg.grid.nodes_per_panel = 20;
    cfg.grid.time_samples = 1024;
    cfg.grid.delta_x = 2.0;
    cfg
}

fn body(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn malformed_and_invalid_configs_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let out = weaktime(&["table", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let mut cfg = quick();
    cfg.params.mass = -1.0;
    cfg.state.gamma = 0.0;
    cfg.barrier.half_width = -2.0;
    let path = write_config(dir.path(), &cfg);
    let out = weaktime(&["fig1", "--config", path.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    // One aggregated report listing every violation.
    assert!(stderr.matches("\n  - ").count() >= 3, "{stderr}");

    let missing = dir.path().join("missing.json");
    let out = weaktime(&["verify", "--config", missing.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unresolvable_separation_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick();
    cfg.grid.delta_x = 1e-4;
    let path = write_config(dir.path(), &cfg);
    let out = weaktime(&["table", "--config", path.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn resolution_check_rejects_coarse_grids() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick();
    // Momentum panels refine themselves; a 24-sample time grid does not.
    cfg.grid.time_samples = 24;
    cfg.grid.delta_x = 80.0;
    let path = write_config(dir.path(), &cfg);
    let args = ["table", "--config", path.to_str().unwrap()];
    assert_eq!(weaktime(&args, dir.path()).status.code(), Some(0));
    let out = weaktime(&[&args[..], &["--resolution-check"]].concat(), dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unwritable_output_exits_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let path = write_config(dir.path(), &quick());
    let out = weaktime(&["fig1", "--config", path.to_str().unwrap()], &blocker.join("sub"));
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn figures_are_reproducible_and_self_describing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick();
    let path = write_config(dir.path(), &cfg);
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for (out, threads) in [(&a, "1"), (&b, "1"), (&c, "4")] {
        for cmd in ["fig1", "fig2"] {
            let o = weaktime(&[cmd, "--config", path.to_str().unwrap(), "--threads", threads], out);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        }
    }
    for name in ["quick_fig1.csv", "quick_fig2.csv"] {
        let ta = std::fs::read_to_string(a.join(name)).unwrap();
        let tb = std::fs::read_to_string(b.join(name)).unwrap();
        let tc = std::fs::read_to_string(c.join(name)).unwrap();
        assert_eq!(body(&ta), body(&tb), "{name} differs between identical runs");

        let (pa, pc) = (parse_csv(&ta).unwrap(), parse_csv(&tc).unwrap());
        for (ra, rc) in pa.rows.iter().zip(&pc.rows) {
            for (x, y) in ra.iter().zip(rc) {
                assert!(
                    (x.is_nan() && y.is_nan()) || (x - y).abs() <= 1e-12 * x.abs().max(1e-300),
                    "{name}: {x} vs {y}"
                );
            }
        }

        // The header alone is enough to re-run the experiment.
        let echoed = pa.config().unwrap();
        assert_eq!(echoed, cfg);
        assert_eq!(pa.header_value("config_sha256"), Some(cfg.hash().as_str()));
        for key in ["t_max", "tail_mass", "tail_slope", "momentum_panels", "diagnostics"] {
            assert!(pa.header_value(key).is_some(), "{name} lacks {key}");
        }
    }
    let fig1 = parse_csv(&std::fs::read_to_string(a.join("quick_fig1.csv")).unwrap()).unwrap();
    assert_eq!(fig1.columns, ["t", "P_exact", "P_SD"]);
    let fig2 = parse_csv(&std::fs::read_to_string(a.join("quick_fig2.csv")).unwrap()).unwrap();
    assert_eq!(fig2.columns, ["t", "re_dpw_exact", "re_dpw_sd", "im_pw_exact", "im_pw_sd"]);
}

#[test]
fn output_directory_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &quick());
    let target = dir.path().join("from_env");
    let out = Command::new(env!("CARGO_BIN_EXE_weaktime"))
        .args(["fig1", "--config", path.to_str().unwrap()])
        .env("WEAKTIME_OUT_DIR", &target)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(target.join("quick_fig1.csv").exists());
}

#[test]
fn verify_passes_on_free_particle() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::reference();
    cfg.name = "free".into();
    cfg.barrier.height = 0.0;
    let path = write_config(dir.path(), &cfg);
    let out = weaktime(&["verify", "--config", path.to_str().unwrap()], dir.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(!stdout.contains("FAIL"));
    assert!(stdout.contains("spatial_average"));
    assert!(dir.path().join("free_verify.json").exists());
}

#[test]
fn table_record_pairs_scalars_with_doubled_values() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &quick());
    let out = weaktime(&["table", "--config", path.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("quick_table.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let resolution = v["resolution"].as_object().unwrap();
    for key in ["mean_p", "std_p", "mean_t", "var_t", "var_h", "arrival_momentum", "normalization"] {
        let s = &resolution[key];
        assert!(s["value"].is_f64() && s["doubled_value"].is_f64() && s["relative_drift"].is_f64());
    }
    let echoed: ExperimentConfig = serde_json::from_value(v["config"].clone()).unwrap();
    assert_eq!(echoed, quick());
    assert!(v["timings_seconds"]["analysis"].is_f64());
}

#[test]
fn sweep_writes_one_row_per_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &quick());
    let out = weaktime(
        &["sweep", "--config", path.to_str().unwrap(), "--gammas", "0.001,0.0005"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = parse_csv(&std::fs::read_to_string(dir.path().join("quick_sweep.csv")).unwrap())
        .unwrap();
    assert_eq!(csv.rows.len(), 2);
    assert_eq!(csv.rows[0][0], 0.001);
    assert!(csv.rows[1][2] < csv.rows[0][2], "narrower momentum spread");
}
