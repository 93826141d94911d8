use std::collections::BTreeSet;
use std::process::{Command, Output};

use toridimer::cli::verify::{coverage, run_suite, MANIFEST};
use toridimer::cli::builtin_graph;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toridimer")).args(args).current_dir(env!("CARGO_MANIFEST_DIR")).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data(name: &str) -> String {
    format!("{}/../../data/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn charpoly_uniform() {
    let o = run(&["charpoly"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "-z^-1 - w^-1 + 4 - w - z\n");
    let o = run(&["--spec", &data("uniform.json"), "charpoly"]);
    assert_eq!(stdout(&o), "-z^-1 - w^-1 + 4 - w - z\n");
}

#[test]
fn charpoly_drifted_spec_matches_builtin() {
    let a = stdout(&run(&["--spec", &data("drifted_1234.json"), "charpoly"]));
    let b = stdout(&run(&["--graph", "drifted:1,2,3,4", "charpoly"]));
    assert_eq!(a, b);
    assert_eq!(a, "-4*z^-1 - 3*w^-1 + 10 - w - 2*z\n");
}

#[test]
fn echoes_version_and_seed() {
    let o = run(&["--seed", "99", "partition"]);
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains(env!("CARGO_PKG_VERSION")) && err.contains("seed=99"));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["Z"], "8");
}

#[test]
fn verify_passes_on_builtin_graphs() {
    for g in ["uniform", "drifted"] {
        for exact in [true, false] {
            let mut args = vec!["--graph", g, "verify"];
            if exact {
                args.push("--exact");
            }
            let o = run(&args);
            assert!(o.status.success(), "{g} exact={exact}");
            let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
            assert_eq!(v["passed"], true);
            assert!(v["coverage"]["missing"].as_array().unwrap().is_empty());
        }
    }
}

#[test]
fn broken_spec_fails_at_lattice_stage() {
    let o = run(&["--spec", &data("broken_crossing.json"), "verify"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("non-planar"));
    let o = run(&["--graph", "drifted:1,2,3", "charpoly"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn wilson_output_is_byte_identical() {
    let args = ["--graph", "drifted", "--n", "3", "--seed", "17", "--samples", "20", "sample-wilson"];
    let a = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, run(&args).stdout);
    assert_ne!(a.stdout, run(&["--graph", "drifted", "--n", "3", "--seed", "18", "--samples", "20", "sample-wilson"]).stdout);
}

#[test]
fn stats_and_scan_outputs() {
    let o = run(&["--graph", "drifted", "--by", "-1", "stats", "--steps", "2"]);
    let csv = stdout(&o);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "B_x,B_y,N,E_k,E_hx,E_hy,P_connect,n_samples,seed");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("0,0,2,"));
    let out = std::env::temp_dir().join("toridimer_cli_scan.csv");
    let o = run(&["--graph", "drifted", "--out", out.to_str().unwrap(), "scan", "--points", "24", "--torus-samples", "64"]);
    assert!(o.status.success());
    assert!(String::from_utf8(o.stderr).unwrap().contains("bounded components: 1"));
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 1 + 24 * 24);
}

#[test]
fn manifest_and_coverage_guard() {
    let names: BTreeSet<&str> = MANIFEST.iter().map(|(k, _)| *k).collect();
    assert_eq!(names.len(), MANIFEST.len());
    assert_eq!(coverage(&[]).missing.len(), MANIFEST.len());
    let r = run_suite(&builtin_graph("drifted:5,3,2,7").unwrap(), true);
    assert!(r.passed, "{:?}", r.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>());
    assert!(r.coverage.missing.is_empty() && r.coverage.unknown.is_empty());
    let mut partial = r.checks.clone();
    partial.retain(|c| c.identity != "forman");
    assert_eq!(coverage(&partial).missing, vec!["forman"]);
}
