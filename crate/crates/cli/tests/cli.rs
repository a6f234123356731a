use phonon_stirap::meanfield::MeanFieldMode;
use phonon_stirap::spectral::ShiftConvention;
use phonon_stirap_cli::{parse_config, serialize, ConfigError, RunConfig};
use proptest::prelude::*;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const LOSSLESS: &str = "gamma_L = 0\ngamma_M = 0\ngamma_R = 0\ngamma_m1 = 0\ngamma_m2 = 0\n";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_phonon-stirap"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|v| v.parse::<f64>().unwrap_or(f64::NAN)).collect())
        .collect();
    (header, rows)
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn empty_document_gives_defaults() {
    let cfg = parse_config("").unwrap();
    assert_eq!(cfg, RunConfig::default());
    let s = &cfg.scenario;
    assert_eq!((s.schedule.amplitude, s.schedule.width, s.schedule.half_delay), (350.0, 3.0, 1.0));
    assert_eq!((s.schedule.t_start, s.schedule.t_end), (-15.0, 15.0));
    assert_eq!((s.params.gamma_m, s.params.gamma_m1, s.params.g1, s.params.j1), (0.4, 1e-4, 1e-3, 0.5));
    assert_eq!(s.initial, [0.0, 0.0, 0.0, 1.0, 0.0]);
}

#[test]
fn config_errors_name_the_key() {
    let e = parse_config("gamma_M = -1").unwrap_err();
    assert_eq!(e.code(), "INVALID_VALUE");
    assert!(matches!(&e, ConfigError::InvalidValue { key, .. } if key == "gamma_M"));

    assert_eq!(parse_config("gama_M = 0.4").unwrap_err(), ConfigError::UnknownKey("gama_M".into()));

    let e = parse_config("A = 1\nT = 3\nthis is not toml\n").unwrap_err();
    assert_eq!(e.code(), "PARSE_ERROR");
    assert!(matches!(e, ConfigError::Parse { line: Some(3), .. }), "{e:?}");

    for (text, key) in [
        ("n_points = 1", "n_points"),
        ("n_points = 2.5", "n_points"),
        ("T = 0", "T"),
        ("A = \"big\"", "A"),
        ("rtol = 2", "rtol"),
        ("meanfield = \"sometimes\"", "meanfield"),
        ("decay_shift = \"raw\"", "decay_shift"),
        ("strict = 1", "strict"),
        ("delta_L = 0", "delta_L"),
        ("t_start = 20", "t_end"),
        ("nbar1 = nan", "nbar1"),
    ] {
        match parse_config(text) {
            Err(ConfigError::InvalidValue { key: k, .. }) => assert_eq!(k, key, "{text}"),
            other => panic!("{text}: {other:?}"),
        }
    }
}

#[test]
fn config_keys_are_applied() {
    let cfg = parse_config(
        "A = 50\ntau = 2.5\nn_points = 11\nmeanfield = \"dynamic\"\ndecay_shift = \"unnormalized\"\n\
         strict = true\nout_dir = \"runs/a\"\nnbar2 = 0.5\nn0_aM = 0.25\nmax_cells = 7\n",
    )
    .unwrap();
    let s = &cfg.scenario;
    assert_eq!((s.schedule.amplitude, s.schedule.half_delay, s.n_points), (50.0, 2.5, 11));
    assert_eq!(s.mean_field, MeanFieldMode::Dynamic);
    assert_eq!(s.shift, ShiftConvention::Unnormalized);
    assert!(cfg.strict);
    assert_eq!(cfg.out_dir, Path::new("runs/a"));
    assert_eq!((s.params.nbar2, s.initial[1], cfg.max_cells), (0.5, 0.25, 7));
}

proptest! {
    #[test]
    fn serialization_round_trips(
        amplitude in 0.0f64..1e3,
        width in 1e-3f64..10.0,
        tau in -5.0f64..5.0,
        gammas in proptest::array::uniform5(0.0f64..1.0),
        g in -1e-2f64..1e-2,
        n_points in 2usize..5000,
        initial in proptest::array::uniform5(0.0f64..3.0),
        dynamic in any::<bool>(),
        unnormalized in any::<bool>(),
        strict in any::<bool>(),
    ) {
        let mut cfg = RunConfig::default();
        let s = &mut cfg.scenario;
        s.schedule.amplitude = amplitude;
        s.schedule.width = width;
        s.schedule.half_delay = tau;
        (s.params.gamma_l, s.params.gamma_m, s.params.gamma_r, s.params.gamma_m1, s.params.gamma_m2) =
            (gammas[0], gammas[1], gammas[2], gammas[3], gammas[4]);
        s.params.g1 = g;
        s.n_points = n_points;
        s.initial = initial;
        s.mean_field = if dynamic { MeanFieldMode::Dynamic } else { MeanFieldMode::QuasiStatic };
        s.shift = if unnormalized { ShiftConvention::Unnormalized } else { ShiftConvention::Normalized };
        cfg.strict = strict;
        prop_assert_eq!(parse_config(&serialize(&cfg)).unwrap(), cfg);
    }
}

#[test]
fn simulate_writes_occupancies_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["simulate", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let (header, rows) = read_csv(&dir.path().join("occupancies.csv"));
    assert_eq!(header, ["t", "n_aL", "n_aM", "n_aR", "n_b1", "n_b2"]);
    assert_eq!(rows.len(), 601);
    assert_eq!(rows[0], [-15.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    let last = rows.last().unwrap();
    assert_eq!(last[0], 15.0);
    // Independent reference integration of the same moment flow.
    assert!((last[5] - 0.009527249823876486).abs() <= 1e-8);
    assert!(last[2] <= 1e-3);

    let summary = read_json(&dir.path().join("summary.json"));
    assert!((summary["eta"].as_f64().unwrap() - last[5]).abs() <= 1e-15);
    assert!(summary["peak_n_aM"].as_f64().unwrap() > 0.0);
    assert!(summary["runtime"].as_f64().unwrap() >= 0.0);
    assert!(summary["validation"].as_array().unwrap().is_empty());
}

#[test]
fn outputs_are_bit_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert!(run(&["simulate", "--out", d.path().to_str().unwrap()]).status.success());
        assert!(run(&["spectrum", "--out", d.path().to_str().unwrap()]).status.success());
    }
    for file in ["occupancies.csv", "spectrum.csv"] {
        assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap());
    }
}

#[test]
fn undriven_membrane_decays_alone() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "A = 0\ngamma_m1 = 0.05\n");
    let out = run(&["simulate", "--config", &config, "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let (_, rows) = read_csv(&dir.path().join("occupancies.csv"));
    for row in rows {
        let t = row[0] + 15.0;
        assert!((row[4] - (-0.05 * t).exp()).abs() <= 1e-8);
        assert!(row[1..4].iter().chain(&row[5..]).all(|&v| v.abs() <= 1e-12));
    }
}

#[test]
fn malformed_config_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    for text in ["A = [1,", "gama_M = 0.4", "gamma_M = -1"] {
        let config = write_config(dir.path(), text);
        let out = run(&["simulate", "--config", &config, "--out", out_dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        assert!(!out_dir.exists());
    }
    let stderr = String::from_utf8(run(&["simulate", "--config", &write_config(dir.path(), "gama_M = 0.4")]).stderr).unwrap();
    assert!(stderr.contains("UNKNOWN_KEY") && stderr.contains("gama_M"));
    assert_eq!(run(&["simulate", "--config", "/nonexistent/run.toml"]).status.code(), Some(2));
    assert_eq!(run(&["launch"]).status.code(), Some(2));
}

#[test]
fn strict_mode_rejects_warnings() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "J1 = 0.4\nn_points = 31\n");
    let out_dir = dir.path().join("out");
    let strict = run(&["simulate", "--config", &config, "--out", out_dir.to_str().unwrap(), "--strict"]);
    assert_eq!(strict.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&strict.stderr).contains("LINEAR_COUPLING"));

    let lenient = run(&["simulate", "--config", &config, "--out", out_dir.to_str().unwrap()]);
    assert!(lenient.status.success());
    let summary = read_json(&out_dir.join("summary.json"));
    assert_eq!(summary["validation"][0]["code"], "LINEAR_COUPLING");
}

#[test]
fn numerical_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "delta_M = 0.5\ngamma_L = 0\ngamma_M = 0\ngamma_R = 0\n");
    let out = run(&["simulate", "--config", &config, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("SINGULAR_SYSTEM"));
}

#[test]
fn lossless_spectrum_columns() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), LOSSLESS);
    let out = run(&["spectrum", "--config", &config, "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("spectrum.csv"));
    let want: Vec<&str> = "t,re_l1,im_l1,re_l2,im_l2,re_l3,im_l3,re_l4,im_l4,re_l5,im_l5,gap,re_shift,im_shift,g1aL,g2aR"
        .split(',')
        .collect();
    assert_eq!(header, want);
    for row in &rows {
        let t = row[0];
        assert!(row[1].abs() <= 1e-12);
        for k in 0..5 {
            assert_eq!(row[2 + 2 * k], 0.0);
        }
        let envelope = 0.35 * (-(t - 1.0).powi(2) / 9.0).exp();
        assert!((row[14].abs() - envelope).abs() <= 1e-12);
        assert_eq!((row[12], row[13]), (0.0, 0.0));
    }
}

#[test]
fn single_cell_sweep_matches_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(run(&["simulate", "--out", d]).status.success());
    assert!(run(&["sweep", "--out", d, "--axis", "A=350"]).status.success());
    let summary = read_json(&dir.path().join("summary.json"));
    let (header, rows) = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(header, ["A", "eta", "peak_n_aM", "min_gap", "integrated_shift", "status"]);
    assert_eq!(rows.len(), 1);
    for (k, key) in ["eta", "peak_n_aM", "min_gap", "integrated_shift"].iter().enumerate() {
        let expected = summary[key].as_f64().unwrap();
        assert!((rows[0][1 + k] - expected).abs() <= 1e-14 * expected.abs(), "{key}");
    }
    let best = read_json(&dir.path().join("best.json"));
    assert_eq!(best["parameters"]["A"], 350.0);
}

#[test]
fn amplitude_sweep_prefers_large_pulses() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "n_points = 121\n");
    let out = run(&["sweep", "--config", &config, "--out", dir.path().to_str().unwrap(), "--axis", "A=50,350"]);
    assert!(out.status.success());
    let (_, rows) = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!((rows[0][0], rows[1][0]), (50.0, 350.0));
    assert!(rows[1][1] > rows[0][1]);
    assert_eq!(read_json(&dir.path().join("best.json"))["parameters"]["A"], 350.0);
}

#[test]
fn sweep_failures_and_limits() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let config = write_config(dir.path(), "n_points = 31\nmax_cells = 3\n");
    let capped = run(&["sweep", "--config", &config, "--out", d, "--axis", "A=1,2", "--axis", "T=1,2"]);
    assert_eq!(capped.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&capped.stderr).contains("GRID_TOO_LARGE"));

    assert_eq!(run(&["sweep", "--out", d]).status.code(), Some(2));
    assert_eq!(run(&["sweep", "--out", d, "--axis", "B=1"]).status.code(), Some(2));

    let partial = run(&["sweep", "--config", &config, "--out", d, "--axis", "T=-1,3"]);
    assert!(partial.status.success());
    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(text.lines().nth(1).unwrap().ends_with("INVALID_INPUT"));
    assert!(text.lines().nth(2).unwrap().ends_with(",ok"));

    let all_failed = run(&["sweep", "--config", &config, "--out", d, "--axis", "T=-1,0"]);
    assert_eq!(all_failed.status.code(), Some(3));
}

#[test]
fn stirap3_reports_dark_state() {
    let json = |args: &[&str]| -> serde_json::Value {
        let mut full = vec!["stirap3"];
        full.extend_from_slice(args);
        let out = run(&full);
        assert!(out.status.success());
        serde_json::from_slice(&out.stdout).unwrap()
    };
    let v = json(&["--omega-p", "0", "--omega-s", "1"]);
    assert_eq!(v["eigenvalue"], 0.0);
    assert_eq!(v["state"], serde_json::json!([1.0, 0.0, 0.0]));

    let v = json(&["--omega-p", "1", "--omega-s", "1", "--delta-p", "0.2", "--delta-s", "0.2"]);
    assert_eq!(v["eigenvalue"], 0.0);
    assert!((v["state"][0].as_f64().unwrap() - FRAC_1_SQRT_2).abs() < 1e-12);
    assert!((v["state"][2].as_f64().unwrap() + FRAC_1_SQRT_2).abs() < 1e-12);

    let v = json(&["--omega-p", "1", "--omega-s", "2", "--delta-p", "0.3", "--delta-s", "-0.1"]);
    assert!(v["eigenvalue"].as_f64().unwrap().abs() > 1e-3);

    assert_eq!(run(&["stirap3", "--omega-p", "0", "--omega-s", "0"]).status.code(), Some(2));
}
