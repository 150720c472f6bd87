//! End-to-end checks of the command-line interface: file formats, JSON
//! output, determinism, and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn locobs(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_locobs"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON on stdout")
}

#[test]
fn gen_is_deterministic_and_loadable() {
    let tmp = tempfile::tempdir().unwrap();
    let a = locobs(&["gen", "random_regular", "10", "3", "--seed", "1"], tmp.path());
    let b = locobs(&["gen", "random_regular", "10", "3", "--seed", "1"], tmp.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "same seed must give byte-identical output");
    let c = locobs(&["gen", "random_regular", "10", "3", "--seed", "2"], tmp.path());
    assert_ne!(a.stdout, c.stdout);

    let cyc = locobs(&["gen", "cycle", "8"], tmp.path());
    let text = String::from_utf8(cyc.stdout).unwrap();
    assert!(text.starts_with("8 8"), "got: {text}");
}

#[test]
fn stats_sigma_on_cycle() {
    let tmp = tempfile::tempdir().unwrap();
    let g = tmp.path().join("c8.txt");
    locobs(&["gen", "cycle", "8", "--out", g.to_str().unwrap()], tmp.path());
    let out = locobs(
        &["stats", g.to_str().unwrap(), "--constant", "1", "--kind", "sigma"],
        tmp.path(),
    );
    let json = stdout_json(&out);
    assert_eq!(json["atoms"]["1:(2)"], "1/1");
}

#[test]
fn stats_chi_on_star() {
    let tmp = tempfile::tempdir().unwrap();
    let g = tmp.path().join("k13.txt");
    locobs(&["gen", "star", "3", "--out", g.to_str().unwrap()], tmp.path());
    let out = locobs(
        &["stats", g.to_str().unwrap(), "--constant", "1", "--kind", "chi"],
        tmp.path(),
    );
    let json = stdout_json(&out);
    assert_eq!(json["atoms"]["T(1|{1,1})"], "1/4");
    assert_eq!(json["atoms"]["E(1|1)"], "3/4");
}

#[test]
fn stats_matches_with_coloring_file() {
    let tmp = tempfile::tempdir().unwrap();
    let g = tmp.path().join("c6.txt");
    locobs(&["gen", "cycle", "6", "--out", g.to_str().unwrap()], tmp.path());
    let coloring = tmp.path().join("f.txt");
    std::fs::write(&coloring, "2\n0 1\n1 2\n2 1\n3 2\n4 1\n5 2\n").unwrap();
    let out = locobs(
        &[
            "stats",
            g.to_str().unwrap(),
            "--coloring",
            coloring.to_str().unwrap(),
            "--kind",
            "tau",
            "--r",
            "1",
        ],
        tmp.path(),
    );
    let json = stdout_json(&out);
    assert_eq!(json["universe"]["k"], 2);
    // an alternating 2-coloring of an even cycle has two ball types
    assert_eq!(json["atoms"].as_object().unwrap().len(), 2);
}

#[test]
fn compare_discriminates_with_two_colors() {
    let tmp = tempfile::tempdir().unwrap();
    let c8 = tmp.path().join("c8.txt");
    let c4 = tmp.path().join("c4.txt");
    let c4c4 = tmp.path().join("c4c4.txt");
    locobs(&["gen", "cycle", "8", "--out", c8.to_str().unwrap()], tmp.path());
    locobs(&["gen", "cycle", "4", "--out", c4.to_str().unwrap()], tmp.path());
    locobs(
        &["gen", "disjoint_union", c4.to_str().unwrap(), c4.to_str().unwrap(), "--out", c4c4.to_str().unwrap()],
        tmp.path(),
    );

    let one = stdout_json(&locobs(
        &["compare", c8.to_str().unwrap(), c4c4.to_str().unwrap(), "--k", "1", "--kind", "sigma"],
        tmp.path(),
    ));
    assert_eq!(one["distance"], "0/1");

    let two = stdout_json(&locobs(
        &["compare", c8.to_str().unwrap(), c4c4.to_str().unwrap(), "--k", "2", "--kind", "sigma"],
        tmp.path(),
    ));
    assert_ne!(two["distance"], "0/1");
    assert_eq!(two["mode"], "exact");

    let same = stdout_json(&locobs(
        &["compare", c8.to_str().unwrap(), c8.to_str().unwrap(), "--k", "2", "--kind", "sigma"],
        tmp.path(),
    ));
    assert_eq!(same["distance"], "0/1");
}

#[test]
fn verify_all_passes_and_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let out = locobs(&["verify", "all", "--seed", "7"], tmp.path());
    let json = stdout_json(&out);
    assert_eq!(json["pass"], true);
    assert!(json["checks"].as_array().unwrap().len() >= 8);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    // usage error: unknown family
    let bad = locobs(&["gen", "moebius", "5"], tmp.path());
    assert_eq!(bad.status.code(), Some(2));
    // usage error: unknown flag (clap)
    let flag = locobs(&["gen", "cycle", "8", "--bogus"], tmp.path());
    assert_eq!(flag.status.code(), Some(2));
    // cap exceeded: exact enumeration of 2^20 colorings under a tiny cap
    let g = tmp.path().join("c20.txt");
    locobs(&["gen", "cycle", "20", "--out", g.to_str().unwrap()], tmp.path());
    let capped = locobs(
        &[
            "compare",
            g.to_str().unwrap(),
            g.to_str().unwrap(),
            "--k",
            "2",
            "--kind",
            "sigma",
            "--cap",
            "1000",
        ],
        tmp.path(),
    );
    assert_eq!(capped.status.code(), Some(3));
}

#[test]
fn pretty_and_out_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let g = tmp.path().join("c8.txt");
    locobs(&["gen", "cycle", "8", "--out", g.to_str().unwrap()], tmp.path());
    let report = tmp.path().join("report.json");
    let out = locobs(
        &[
            "stats",
            g.to_str().unwrap(),
            "--constant",
            "1",
            "--kind",
            "sigma",
            "--out",
            report.to_str().unwrap(),
            "--pretty",
        ],
        tmp.path(),
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("1:(2)"), "pretty table missing atom: {text}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["atoms"]["1:(2)"], "1/1");
}
