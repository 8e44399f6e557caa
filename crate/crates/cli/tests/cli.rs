//! End-to-end runs of the command-line binary.

use std::path::Path;
use std::process::{Command, Output};

fn ssnfact(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssnfact"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = ssnfact(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

#[test]
fn generate_factorize_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.nt");
    let gp = dir.path().join("gp.nt");
    let (g, gp) = (g.to_str().unwrap(), gp.to_str().unwrap());
    let truth: serde_json::Value = serde_json::from_str(&ok(&["--seed", "9", "generate", "--n", "300", "--domain", "20", "--out", g])).unwrap();
    assert_eq!(truth["truth"]["triples"], 2700);
    let report: serde_json::Value = serde_json::from_str(&ok(&["factorize", "--graph", g, "--out", gp])).unwrap();
    assert_eq!(report["output_triples"], truth["factorized_triples"]);
    let state = format!("{gp}.state.json");
    let verify: serde_json::Value = serde_json::from_str(&ok(&["verify", "--graph", g, "--state", &state, "--tables"])).unwrap();
    assert_eq!(verify["passed"], true);
    let stats: serde_json::Value = serde_json::from_str(&ok(&["stats", "--graph", gp])).unwrap();
    assert_eq!(stats["triples"], truth["factorized_triples"]);

    let again = ssnfact(&["factorize", "--graph", gp, "--out", dir.path().join("x.nt").to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&again.stderr).contains("error"));
}

#[test]
fn verify_detects_a_tampered_graph() {
    let dir = tempfile::tempdir().unwrap();
    let gp = dir.path().join("gp.nt");
    let gp = gp.to_str().unwrap();
    let g = fixture("sensor_example.nt");
    ok(&["factorize", "--graph", &g, "--out", gp]);
    let text = std::fs::read_to_string(gp).unwrap();
    let tampered: String = text.lines().filter(|l| !l.contains("observationOf")).collect::<Vec<_>>().join("\n");
    std::fs::write(gp, tampered + "\n").unwrap();
    let out = ssnfact(&["verify", "--graph", &g, "--state", &format!("{gp}.state.json")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn query_and_rewrite() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = dir.path().join("r.tsv");
    ok(&["query", "--graph", &fixture("sensor_example.nt"), "--query", &fixture("values_by_procedure.rq"), "--out", tsv.to_str().unwrap()]);
    let text = std::fs::read_to_string(&tsv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "?value\t?unit");
    assert_eq!(text.lines().count(), 3);

    let rq = dir.path().join("q.rq");
    ok(&["rewrite", "--query", &fixture("values_by_procedure.rq"), "--out", rq.to_str().unwrap()]);
    let gp = dir.path().join("gp.nt");
    ok(&["factorize", "--graph", &fixture("sensor_example.nt"), "--out", gp.to_str().unwrap()]);
    let rewritten = ok(&["query", "--graph", gp.to_str().unwrap(), "--query", rq.to_str().unwrap()]);
    assert_eq!(rewritten, text);

    let bad = dir.path().join("bad.rq");
    std::fs::write(&bad, "SELECT ?s { ?s ?p ?o OPTIONAL { ?s ?q ?r } }").unwrap();
    let out = ssnfact(&["query", "--graph", &fixture("sensor_example.nt"), "--query", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("OPTIONAL"));
}

#[test]
fn tables_export_every_layout() {
    let dir = tempfile::tempdir().unwrap();
    for (mode, files) in [("universal", 1), ("factorized", 3), ("ct", 8)] {
        let out = dir.path().join(mode);
        let summary: serde_json::Value =
            serde_json::from_str(&ok(&["tables", "--graph", &fixture("sensor_example.nt"), "--mode", mode, "--out", out.to_str().unwrap()])).unwrap();
        assert_eq!(summary["files"].as_array().unwrap().len(), files, "{mode}");
        assert_eq!(std::fs::read_dir(&out).unwrap().count(), 2 * files);
    }
    let gp = dir.path().join("gp.nt");
    ok(&["factorize", "--graph", &fixture("sensor_example.nt"), "--out", gp.to_str().unwrap()]);
    let state = format!("{}.state.json", gp.display());
    let summary: serde_json::Value = serde_json::from_str(&ok(&[
        "tables", "--graph", &fixture("sensor_example.nt"), "--factorized", gp.to_str().unwrap(), "--mapping", &state, "--mode", "fct", "--out",
        dir.path().join("fct").to_str().unwrap(),
    ]))
    .unwrap();
    assert_eq!(summary["relations"]["F-MeasureData CT"], 2);
}

#[test]
fn bench_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench");
    let text = ok(&[
        "bench", "--gen-n", "400", "--repetitions", "2", "--tables", "--timeout-s", "60", "--out", out.to_str().unwrap(),
    ]);
    assert!(text.contains("12 equivalent"), "{text}");
    for f in ["report.json", "metrics.tsv", "queries.tsv", "tables.tsv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let cold = ok(&["bench", "--graph", &fixture("sensor_example.nt"), "--cache", "cold"]);
    assert!(cold.contains("Cold"));
}
