use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn semiweak(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semiweak"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn ok(o: &Output) {
    assert!(
        o.status.success(),
        "status {:?}\nstdout: {}\nstderr: {}",
        o.status,
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_schema(schema: &str, instance: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{schema}.schema.json"));
    let validator = jsonschema::validator_for(&read_json(&path)).unwrap();
    let errors: Vec<String> = validator.iter_errors(instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{schema}: {errors:#?}");
}

fn csv_header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn distribution_writes_densities_and_valid_report() {
    let dir = TempDir::new().unwrap();
    ok(&semiweak(&["--preset", "fig2a", "distribution"], dir.path()));
    let report = read_json(&dir.path().join("report.json"));
    assert_schema("report", &report);
    assert_eq!(report["peaks_exact"].as_array().unwrap().len(), 2);
    assert_eq!(report["params"]["stages"][0]["gradient_gauss_per_cm"], 100.0);
    assert_eq!(report["params"]["delta_cm"], 1.0);
    for stem in ["exact_momentum", "exact_position", "aav_momentum", "aav_position"] {
        let p = dir.path().join(format!("{stem}.csv"));
        assert_eq!(csv_header(&p), "coordinate,density");
        assert_eq!(fs::read_to_string(&p).unwrap().lines().count(), 4097, "{stem}");
    }
}

#[test]
fn json_format_densities_match_schema() {
    let dir = TempDir::new().unwrap();
    ok(&semiweak(&["--preset", "fig4", "--format", "json", "--grid-points", "512", "distribution"], dir.path()));
    let d = read_json(&dir.path().join("exact_momentum.json"));
    assert_schema("distribution", &d);
    assert_eq!(d["values"].as_array().unwrap().len(), 512);
    // orthogonal selection has no weak value and no AAV density
    assert!(!dir.path().join("aav_momentum.json").exists());
    assert_schema("report", &read_json(&dir.path().join("report.json")));
}

#[test]
fn sweep_over_six_decades_is_monotone_and_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = ["--preset", "fig3", "sweep", "--variable", "b", "--from", "1e-4", "--to", "1e2", "--count", "13", "--log"];
    ok(&semiweak(&args, a.path()));
    ok(&semiweak(&args, b.path()));
    let text = fs::read_to_string(a.path().join("sweep.csv")).unwrap();
    assert_eq!(text, fs::read_to_string(b.path().join("sweep.csv")).unwrap());

    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>().join(","),
        "variable,value,I,regime,weak_value_re,weak_value_im,eta,postselect_prob,n_peaks,peaks_p_prime,l1,linf,ks"
    );
    let overlaps: Vec<f64> = rdr.records().map(|r| r.unwrap()[2].parse().unwrap()).collect();
    assert_eq!(overlaps.len(), 13);
    assert!(overlaps[0] > 0.999 && *overlaps.last().unwrap() < 1e-6, "{overlaps:?}");
    assert!(overlaps.windows(2).all(|w| w[1] <= w[0]), "{overlaps:?}");
}

#[test]
fn sweep_json_matches_schema() {
    let dir = TempDir::new().unwrap();
    ok(&semiweak(
        &["--preset", "fig2b", "--format", "json", "sweep", "--variable", "theta", "--from", "170", "--to", "190", "--count", "5"],
        dir.path(),
    ));
    let s = read_json(&dir.path().join("sweep.json"));
    assert_schema("sweep", &s);
    assert!(s["rows"][2]["weak_value_re"].is_null());
}

#[test]
fn zero_length_sweep_fails() {
    let dir = TempDir::new().unwrap();
    let o = semiweak(&["--preset", "fig3", "sweep", "--variable", "b", "--from", "1", "--to", "2", "--count", "0"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("at least one point"));
}

#[test]
fn strong_discrimination_of_xi_takes_seven_particles() {
    let dir = TempDir::new().unwrap();
    let o = semiweak(&["--preset", "fig7", "discriminate", "--source", "xi", "--strategy", "strong", "--alpha", "0.01"], dir.path());
    ok(&o);
    let d = read_json(&dir.path().join("decision.json"));
    assert_schema("decision", &d);
    assert_eq!(d["verdict"], "xi");
    assert_eq!(d["particles_used"], 7);
    let trials = dir.path().join("trials.csv");
    assert_eq!(csv_header(&trials), "index,parity,postselected,label,sample");
    assert_eq!(fs::read_to_string(&trials).unwrap().lines().count(), 8);
}

#[test]
fn strong_discrimination_of_zeta_decides_quickly() {
    let dir = TempDir::new().unwrap();
    let o = semiweak(&["--preset", "fig7", "--seed", "5", "discriminate", "--source", "zeta", "--strategy", "strong"], dir.path());
    ok(&o);
    let d = read_json(&dir.path().join("decision.json"));
    assert_eq!(d["verdict"], "zeta");
    assert!(d["particles_used"].as_u64().unwrap() <= 7);
}

#[test]
fn undecided_run_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let o = semiweak(
        &["--preset", "fig7", "discriminate", "--source", "zeta", "--strategy", "standard-weak", "--max-particles", "100"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    let d = read_json(&dir.path().join("decision.json"));
    assert_schema("decision", &d);
    assert_eq!(d["verdict"], "undecided");
}

#[test]
fn unknown_strategy_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let o = semiweak(&["--preset", "fig7", "discriminate", "--source", "xi", "--strategy", "psychic"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("invalid value 'psychic'"));
    assert!(!dir.path().join("decision.json").exists());
}

#[test]
fn overlap_and_aav_reports_match_schema() {
    let dir = TempDir::new().unwrap();
    ok(&semiweak(&["--preset", "fig2b", "overlap"], dir.path()));
    let o = read_json(&dir.path().join("overlap.json"));
    assert_schema("overlap", &o);
    assert_eq!(o["regime"], "weak");
    ok(&semiweak(&["--preset", "fig2b", "aav"], dir.path()));
    let a = read_json(&dir.path().join("aav.json"));
    assert_schema("aav", &a);
    let w = a["weak_value_re"].as_f64().unwrap();
    assert!((w - (173.5f64.to_radians() / 2.0).tan()).abs() < 1e-9);
    assert_eq!(csv_header(&dir.path().join("aav_momentum.csv")), "coordinate,density");
}

#[test]
fn config_errors_name_the_field() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(
        &cfg,
        r#"{
  "particle": "neutron",
  "delta_cm": 1.0,
  "stages": [{"axis": "x", "gradient_gauss_per_cm": "strong", "transit_time_s": 1e-6}],
  "preselect": {"theta_deg": 90},
  "postselect": {"theta_deg": 0}
}"#,
    )
    .unwrap();
    let o = semiweak(&["--config", cfg.to_str().unwrap(), "distribution"], dir.path());
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("stages[0].gradient_gauss_per_cm"), "{err}");
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn reproduce_is_bit_identical_and_config_reloads() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    ok(&semiweak(&["--seed", "3", "reproduce", "fig3"], a.path()));
    ok(&semiweak(&["--seed", "3", "reproduce", "fig3"], b.path()));
    for f in ["config.json", "report.json", "exact_momentum.csv", "aav_position.csv", "overlap.json"] {
        assert_eq!(
            fs::read(a.path().join("fig3").join(f)).unwrap(),
            fs::read(b.path().join("fig3").join(f)).unwrap(),
            "{f}"
        );
    }
    let report = read_json(&a.path().join("fig3/report.json"));
    assert_schema("report", &report);
    assert_eq!(report["derived"], true);
    assert_eq!(report["params"]["seed"], 3);
    let i = report["I"].as_f64().unwrap();
    assert!(i > 0.3 && i < 0.9);

    let c = TempDir::new().unwrap();
    let cfg = a.path().join("fig3/config.json");
    ok(&semiweak(&["--config", cfg.to_str().unwrap(), "distribution"], c.path()));
    assert_eq!(
        fs::read(c.path().join("report.json")).unwrap(),
        fs::read(a.path().join("fig3/report.json")).unwrap()
    );
}

#[test]
fn reproduce_fig7_runs_every_strategy() {
    let dir = TempDir::new().unwrap();
    ok(&semiweak(&["reproduce", "fig7"], dir.path()));
    for source in ["xi", "zeta"] {
        for strategy in ["strong", "exact-weak", "standard-weak"] {
            let d = read_json(&dir.path().join(format!("fig7/{source}_{strategy}_decision.json")));
            assert_schema("decision", &d);
        }
    }
    let exact = read_json(&dir.path().join("fig7/xi_exact-weak_decision.json"));
    assert_eq!(exact["verdict"], "xi");
}
