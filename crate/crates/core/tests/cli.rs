use std::fs;
use std::path::Path;
use std::process::Command as Process;

use ionsim::cli::*;

fn ov(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn bin(dir: &Path, args: &[&str]) -> i32 {
    let out = Process::new(env!("CARGO_BIN_EXE_ionsim"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    out.status.code().unwrap()
}

#[test]
fn toml_and_overrides_resolve_with_flags_winning() {
    let text = "n_traj = 50\nbase_seed = 3\n[trap]\nn_ions = 4\n[ramp]\ntau = 40.0\n";
    let cfg = RunConfig::from_toml_with_overrides(
        text,
        &ov(&[("ramp.tau", "20"), ("omega", "[300.0, 310.0, 320.0, 330.0]")]),
    )
    .unwrap();
    assert_eq!(cfg.n_traj, 50);
    assert_eq!(cfg.trap.n_ions, 4);
    assert_eq!(cfg.ramp.tau, 20.0);
    assert_eq!(cfg.omega.as_slice().len(), 4);
    assert_eq!(cfg.ramp.samples, RunConfig::from_toml_with_overrides("", &[]).unwrap().ramp.samples);
}

#[test]
fn bad_configs_are_config_errors() {
    for (text, o) in [
        ("nonsense = 1", vec![]),
        ("[trap]\nn_ions = 0", vec![]),
        ("", ov(&[("omega", "[1.0, 2.0]"), ("trap.n_ions", "3")])),
        ("", ov(&[("noise.gamma_se", "-1")])),
        ("n_traj = [", vec![]),
    ] {
        let err = RunConfig::from_toml_with_overrides(text, &o).unwrap_err();
        assert!(err.is_config(), "{text:?}: {err}");
        assert_eq!(exit_code(&err), EXIT_CONFIG);
    }
    assert!(parse_override("no_equals_sign").is_err());
}

#[test]
fn outputs_embed_config_and_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_toml_with_overrides(
        "",
        &ov(&[
            ("trap.n_ions", "2"),
            ("n_traj", "20"),
            ("base_seed", "77"),
            ("output.dir", &format!("{:?}", dir.path().display().to_string())),
        ]),
    )
    .unwrap();
    let paths = execute(&Command::Sweep, &cfg).unwrap().report.write_files(&cfg).unwrap();
    assert_eq!(paths.len(), 2);
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let header = read_csv_header(&csv).unwrap();
    assert_eq!(header["command"], "sweep");
    assert_eq!(header["config"]["base_seed"], 77);
    assert_eq!(header["config"]["trap"]["n_ions"], 2);
    assert_eq!(header["seeds"]["base_seed"], 77);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("sweep.json")).unwrap()).unwrap();
    assert_eq!(json["config"], header["config"]);
    assert!(json["result"].is_array());
}

#[test]
fn zero_noise_sweep_is_byte_identical_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let args = [
        "sweep",
        "--n-ions",
        "2",
        "--n-traj",
        "8",
        "--set",
        "sweep.n_values=[2]",
        "--set",
        "noise.gamma_se=0",
        "--set",
        "noise.gamma_deph=0",
    ];
    assert_eq!(bin(dir.path(), &args), EXIT_OK);
    let first = fs::read(Path::new(d).join("sweep.csv")).unwrap();
    assert_eq!(bin(dir.path(), &args), EXIT_OK);
    assert_eq!(first, fs::read(Path::new(d).join("sweep.csv")).unwrap());
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(bin(dir.path(), &["modes", "--n-ions", "5"]), EXIT_OK);
    assert!(dir.path().join("modes.csv").exists() && dir.path().join("modes.json").exists());
    assert_eq!(bin(dir.path(), &["modes", "--set", "trap.bogus=1"]), EXIT_CONFIG);
    // Detuning inside the guard band of the COM mode.
    assert_eq!(bin(dir.path(), &["couplings", "--n-ions", "3", "--mu", "4748.2"]), EXIT_CONFIG);
    // A single occupied bin cannot identify the photon means.
    let hist = dir.path().join("degenerate.csv");
    fs::write(&hist, "count,shots\n0,0\n1,0\n2,5000\n3,0\n").unwrap();
    assert_eq!(bin(dir.path(), &["fit", hist.to_str().unwrap(), "--n-ions", "2"]), EXIT_NUMERICAL);
    // Zero tolerance on the trajectory/oracle comparison cannot pass.
    assert_eq!(
        bin(
            dir.path(),
            &[
                "oracle",
                "--n-ions",
                "2",
                "--n-traj",
                "20",
                "--set",
                "oracle.max_z=0.0",
                "--set",
                "oracle.se_floor=1e-300"
            ]
        ),
        EXIT_COMPARISON
    );
}

#[test]
fn synthesize_then_fit_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["synthesize", "--n-ions", "2", "--set", "detect.truth=[0.5, 0.0, 0.5]", "--set", "detect.shots=20000"];
    assert_eq!(bin(dir.path(), &args), EXIT_OK);
    // The synthesized CSV carries the comment header, which the fitter skips.
    let hist = dir.path().join("synthesize.csv");
    assert_eq!(
        bin(dir.path(), &["fit", hist.to_str().unwrap(), "--n-ions", "2", "--set", "detect.n_resample=50"]),
        EXIT_OK
    );
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fit.json")).unwrap()).unwrap();
    let p = json["result"]["fit"]["distribution"]["p"].as_array().unwrap();
    assert!((p[0].as_f64().unwrap() - 0.5).abs() < 0.03);
    assert!(p[1].as_f64().unwrap() < 0.03);
}

#[test]
fn dicke_command_reports_large_n_crossing() {
    let cfg = RunConfig::from_toml_with_overrides("", &ov(&[("dicke.n_values", "[100]")])).unwrap();
    let report = execute(&Command::Dicke, &cfg).unwrap().report;
    let x = report.result["summary"][0]["half_crossing"].as_f64().unwrap();
    assert!((0.8..1.2).contains(&x));
}

#[test]
fn bench_reports_identical_results_across_workers() {
    let cfg =
        RunConfig::from_toml_with_overrides("", &ov(&[("n_traj", "40"), ("bench.workers", "[1, 2, 4]")])).unwrap();
    let rows = bench_rows(&cfg).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.identical && r.seconds > 0.0));
}

#[test]
fn shipped_config_matches_defaults() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/experiment.toml");
    let cfg = RunConfig::load(Some(&path), &[]).unwrap();
    assert_eq!(cfg, RunConfig::from_toml_with_overrides("", &[]).unwrap());
}
