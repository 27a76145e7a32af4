use std::process::{Command, Output};

use serde_json::Value;

fn laakso(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_laakso"))
        .args(args)
        .env_remove("LAAKSO_MAX_DEPTH")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn distance_outputs() {
    let v = json(&laakso(&["distance", "--x", "1/2:0", "--y", "1/2:1"]));
    assert_eq!(v["distance"], "1/3");
    assert!(!v["intervals"].as_array().unwrap().is_empty());
    assert_eq!(
        v["intervals"].as_array().unwrap().len(),
        v["geodesics"].as_array().unwrap().len()
    );
    let v = json(&laakso(&["distance", "--x", "1/2:0", "--y", "1/2:0"]));
    assert_eq!(v["distance"], "0");
}

#[test]
fn malformed_point_is_usage_error() {
    let o = laakso(&["distance", "--x", "1/2", "--y", "1/2:0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    assert_eq!(
        laakso(&["distance", "--x", "3/2:0", "--y", "1/2:0"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn profile_examples() {
    let v = json(&laakso(&["profile", "--p", "1/2:0", "--line", "v1:1"]));
    assert_eq!(v["pass"], true);
    let kinks = v["lines"][0]["kinks"].as_array().unwrap();
    assert_eq!(kinks.len(), 3);

    let v = json(&laakso(&["profile", "--p", "1/2:0", "--line", "v0"]));
    let kinks = v["lines"][0]["kinks"].as_array().unwrap();
    assert_eq!(kinks.len(), 1);
    assert_eq!(kinks[0]["height"], "1/2");
    assert_eq!(kinks[0]["type"], "valley");

    let v = json(&laakso(&["profile", "--p", "5/81:010", "--line", "vD:1,3"]));
    assert_eq!(v["pass"], true);
}

#[test]
fn three_level_profile_points_to_reduce() {
    let o = laakso(&["profile", "--p", "1/2:0", "--line", "vD:1,2,3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("reduce"));
    let v = json(&laakso(&[
        "reduce", "--p", "1/2:0", "--levels", "1,2,3", "--t", "1/5",
    ]));
    assert_eq!(v["equal"], true);
}

#[test]
fn profile_svg_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("profile.svg");
    let o = laakso(&[
        "profile",
        "--p",
        "1/2:0",
        "--line",
        "v1",
        "--format",
        "svg",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let svg = std::fs::read_to_string(&path).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert_eq!(svg.matches("<circle").count(), 3);
    // a wormhole has two V1 lines; SVG needs one
    assert_eq!(
        laakso(&["profile", "--p", "1/3:0", "--line", "v2", "--format", "svg"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn verify_suites() {
    let o = laakso(&["verify", "oracle", "--depth", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    assert!(csv.starts_with("suite,criterion,check,passed,detail\n"));
    assert!(csv.contains("oracle,1,all-pairs,pass,m=2 vertices=40 pairs=780 mismatches=0"));

    let csv = stdout(&laakso(&["verify", "kinks", "--seed", "7"]));
    assert!(csv
        .lines()
        .filter(|l| l.contains("branch-delta"))
        .all(|l| l.contains(",pass,hits=")));
    assert_eq!(
        csv.lines().filter(|l| l.contains("branch-delta")).count(),
        9
    );

    let csv = stdout(&laakso(&["verify", "regularity", "--depth", "6"]));
    assert!(csv.contains("spread=") && csv.contains("mass=1"));

    assert_eq!(laakso(&["verify", "bogus"]).status.code(), Some(2));
    assert_eq!(
        laakso(&["verify", "regularity", "--depth", "2"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn output_is_deterministic() {
    let args = [
        "scan", "--m", "4", "--sample", "6", "--radii", "1/9,1/27", "--seed", "3",
    ];
    let a = laakso(&args);
    let b = laakso(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let mut seq = args.to_vec();
    seq.push("--sequential");
    assert_eq!(laakso(&seq).stdout, a.stdout);
    assert!(stdout(&a).starts_with("center_h,center_bits,r,mass,ratio,m\n"));
}

#[test]
fn max_depth_env_caps_parameters() {
    let o = Command::new(env!("CARGO_BIN_EXE_laakso"))
        .args(["verify", "oracle", "--depth", "3"])
        .env("LAAKSO_MAX_DEPTH", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("LAAKSO_MAX_DEPTH"));
}

#[test]
fn census_csv_and_json() {
    let csv = stdout(&laakso(&[
        "census",
        "--p",
        "1/2:0",
        "--max-level",
        "2",
        "--format",
        "csv",
    ]));
    assert!(csv.starts_with("height,source_line,kink_type\n"));
    assert!(csv.contains("1/2,V0[z=0],valley"));
    assert!(!csv.contains("unconfirmed"));
    let v = json(&laakso(&["census", "--p", "1/2:0", "--max-level", "2"]));
    assert_eq!(v["pass"], true);
}

#[test]
fn porosity_and_membership() {
    let v = json(&laakso(&[
        "porosity",
        "--c",
        "2",
        "--n",
        "1",
        "--t0",
        "1/3",
        "--delta",
        "1/10",
        "--samples",
        "50",
    ]));
    assert_eq!(v["certified"], true);
    assert_eq!(v["lambda"], "1/4");
    let v = json(&laakso(&[
        "membership",
        "--x",
        "1/3:0",
        "--c",
        "2",
        "--n",
        "2",
        "--depth",
        "6",
    ]));
    assert_eq!(v["result"]["verdict"], "in-m-consistent");
}

#[test]
fn probe_and_graph() {
    let v = json(&laakso(&[
        "probe",
        "--x",
        "1/5:01",
        "--function",
        "zero-witness",
        "--k1",
        "8",
    ]));
    assert_eq!(v["derivative"]["verdict"], "exists");
    assert_eq!(v["derivative"]["value"], "0");
    let v = json(&laakso(&[
        "probe",
        "--x",
        "1/5:0",
        "--function",
        "height",
        "--candidate",
        "1",
        "--shell",
        "2",
    ]));
    assert_eq!(v["probe"]["result"]["sup_ratio"], "0");
    let v = json(&laakso(&["graph", "--m", "2"]));
    assert_eq!(v["vertices"], 40);
    let csv = stdout(&laakso(&["graph", "--m", "1", "--format", "csv"]));
    assert!(csv.starts_with("from_h,from_bits,to_h,to_bits,weight\n"));
}
