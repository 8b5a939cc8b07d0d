use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use transducer::params::{default_paper_config, Config, SystemParams};

fn shipped_config() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/cw_operating_point.toml")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_transducer"))
        .args(args)
        .output()
        .unwrap()
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn error_line(out: &Output) -> Value {
    assert!(!out.status.success());
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().unwrap();
    serde_json::from_str(line).unwrap_or_else(|_| panic!("not JSON: {line}"))
}

#[test]
fn simulate_reports_efficiencies() {
    let cfg = shipped_config();
    let v = json_stdout(&run(&[
        "--config",
        cfg.to_str().unwrap(),
        "simulate",
        "--probe-hz",
        "0",
    ]));
    let eta = v["eta_m2o"].as_f64().unwrap();
    assert!(eta > 0.0 && eta < 1.0);
    assert!((v["C_a"].as_f64().unwrap() - 0.22).abs() < 1e-9);
}

fn assert_same_system(a: &SystemParams, b: &SystemParams) {
    let fields = |p: &SystemParams| {
        [
            p.kappa_o_ext,
            p.kappa_o_int,
            p.kappa_e_ext,
            p.kappa_e_int,
            p.gamma_o,
            p.gamma_s,
            p.inhom_o,
            p.inhom_e,
            p.omega_e,
            p.omega_o,
            p.g_o_tot,
            p.g_e_tot,
            p.rabi,
            p.delta_oc,
            p.delta_ec,
            p.n_g,
            p.n_e1,
            p.n_e2,
            p.manifold_fraction,
        ]
    };
    for (x, y) in fields(a).into_iter().zip(fields(b)) {
        assert!((x - y).abs() <= 1e-14 * y.abs(), "{x} vs {y}");
    }
}

#[test]
fn shipped_config_is_the_builtin_operating_point() {
    let builtin = default_paper_config();
    assert_same_system(&Config::load(shipped_config()).unwrap().system, &builtin.system);
    let printed = run(&["defaults"]);
    assert!(printed.status.success());
    let reparsed = Config::from_toml_str(&String::from_utf8(printed.stdout).unwrap()).unwrap();
    assert_same_system(&reparsed.system, &builtin.system);
}

#[test]
fn sweep_csv_is_stable_and_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = shipped_config();
    let render = |name: &str| {
        let out = dir.path().join(name);
        let o = run(&[
            "--config",
            cfg.to_str().unwrap(),
            "--format",
            "csv",
            "--out",
            out.to_str().unwrap(),
            "sweep",
            "--var",
            "probe.detuning_Hz",
            "--from",
            "-1e6",
            "--to",
            "1e6",
            "--points",
            "5",
            "--mode",
            "closed",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(out).unwrap()
    };
    let a = render("a.csv");
    assert_eq!(a, render("b.csv"));
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("probe.detuning_Hz,eta,refl,noise_ratio"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    // 12 significant digits in scientific notation
    assert_eq!(row[0], "-1.00000000000e6");
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn fit_reads_csv_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("line.csv");
    let mut text = String::from("freq_Hz,eta\n");
    for i in 0..81 {
        let f = -2e6 + 5e4 * i as f64;
        let h = 0.25e6;
        text += &format!("{f},{}\n", 0.01 * h * h / ((f - 1e5) * (f - 1e5) + h * h));
    }
    fs::write(&data, text).unwrap();
    let v = json_stdout(&run(&[
        "fit",
        "--model",
        "lorentzian",
        "--data",
        data.to_str().unwrap(),
    ]));
    let fwhm = v["params"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["name"] == "fwhm_1")
        .unwrap();
    assert!((fwhm["value"].as_f64().unwrap() / 0.5e6 - 1.0).abs() < 1e-6);
}

#[test]
fn failures_emit_a_json_error_line() {
    let missing = run(&["--config", "/nonexistent/cfg.toml", "simulate"]);
    assert_eq!(error_line(&missing)["error"], "io");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let mut text = fs::read_to_string(shipped_config()).unwrap();
    text = text.replace("[atoms]", "[atoms]\nbogus_key = 1.0");
    fs::write(&bad, text).unwrap();
    let v = error_line(&run(&["--config", bad.to_str().unwrap(), "simulate"]));
    assert_eq!(v["error"], "parse");
    assert!(v["message"].as_str().unwrap().contains("bogus_key"));

    let cfg = shipped_config();
    let v = error_line(&run(&[
        "--config",
        cfg.to_str().unwrap(),
        "sweep",
        "--var",
        "atoms.nope",
        "--from",
        "0",
        "--to",
        "1",
    ]));
    assert_eq!(v["error"], "invalid_param");
}

#[test]
fn noise_and_report_run_on_the_shipped_config() {
    let cfg = shipped_config();
    let v = json_stdout(&run(&["--config", cfg.to_str().unwrap(), "noise"]));
    assert!(v["budget"]["n_add_rti"].as_f64().unwrap() > 0.0);
    let v = json_stdout(&run(&["--config", cfg.to_str().unwrap(), "report"]));
    let names: Vec<&str> = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["name"].as_str().unwrap())
        .collect();
    for want in [
        "eta_peak",
        "C_a",
        "C_e",
        "C_o",
        "chi2",
        "rho_ee",
        "g_e_tot",
        "N_add_thermal",
    ] {
        assert!(names.contains(&want), "missing {want}");
    }
}
