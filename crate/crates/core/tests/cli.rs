use std::process::Command;

use belltasks::cli::{advantage, display_advantage, read_csv, write_csv, ResultRecord, CSV_HEADER};
use belltasks::seesaw::Status;

fn belltasks(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_belltasks"))
        .args(args)
        .env_remove("BELLTASKS_SOLVER")
        .output()
        .unwrap()
}

fn eval_json(args: &[&str]) -> (ResultRecord, i32) {
    let mut all = vec!["eval", "--format", "json", "--restarts", "8", "--seed", "3"];
    all.extend_from_slice(args);
    let out = belltasks(&all);
    let text = String::from_utf8(out.stdout).unwrap();
    let rec: ResultRecord = serde_json::from_str(&text).unwrap_or_else(|e| panic!("{e}: {text}"));
    (rec, out.status.code().unwrap())
}

#[test]
fn triangle_has_an_advantage() {
    let (rec, code) = eval_json(&["--graph", "triangle", "--task", "rendezvous", "--start", "any"]);
    assert_eq!(code, 0);
    assert_eq!(rec.random.exact, "1/3");
    assert_eq!(rec.classical.exact, "5/9");
    assert_eq!(rec.status, Status::Advantage);
    assert!(rec.ordering_violation.is_none());
    assert_eq!(display_advantage(rec.advantage_pct.unwrap()), "13");
}

#[test]
fn square_rendezvous_has_none() {
    let (rec, code) = eval_json(&["--graph", "square", "--task", "rendezvous", "--start", "any"]);
    assert_eq!(code, 0);
    assert_eq!(rec.status, Status::NoAdvantage);
}

#[test]
fn json_and_csv_round_trip() {
    let (rec, _) = eval_json(&["--graph", "pentagon", "--task", "domination", "--start", "distinct"]);
    let json = serde_json::to_string(&rec).unwrap();
    let back: ResultRecord = serde_json::from_str(&json).unwrap();
    assert_eq!(back, rec);

    let mut buf = Vec::new();
    write_csv(&mut buf, std::slice::from_ref(&rec)).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    let rows = read_csv(buf.as_slice()).unwrap();
    assert_eq!(rows, vec![rec.csv_row()]);
}

#[test]
fn no_seesaw_without_a_settling_bound_is_inconclusive() {
    let (rec, code) = eval_json(&["--graph", "triangle", "--task", "rendezvous", "--no-seesaw"]);
    assert_eq!(rec.status, Status::Inconclusive);
    assert_eq!(code, 2);
}

#[test]
fn export_only_writes_sdpa() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.dat-s");
    let p = path.to_str().unwrap();
    let (rec, code) = eval_json(&["--graph", "hexagon", "--task", "rendezvous", "--export-sdpa", p, "--export-sdpa-only"]);
    assert_eq!(code, 0);
    assert_eq!(rec.status, Status::ExportOnly);
    assert!(rec.npa.is_none());
    let text = std::fs::read_to_string(&path).unwrap();
    belltasks::sdp::parse_sdpa(&text).unwrap();
}

#[test]
fn errors_exit_with_one() {
    let out = belltasks(&["eval", "--graph", "dodecahedron", "--task", "rendezvous"]);
    assert_eq!(out.status.code(), Some(1));
    let out = belltasks(&["eval", "--graph", "arrow", "--task", "rendezvous"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn list_graphs_reports_provenance() {
    let out = belltasks(&["list-graphs"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["tetrahedron", "cube", "hat", "house", "caltrop", "spike", "clamp", "arrow"] {
        assert!(text.contains(name), "{name} missing from list-graphs");
    }
    assert!(text.contains("explicit-definition"));
    assert!(text.contains("figure-derived"));
}

#[test]
fn advantage_formula() {
    let pct = advantage(4.5, 4.6, 4.67361).unwrap();
    assert_eq!(display_advantage(pct), "74");
    assert!(advantage(0.25, 0.25, 0.3).is_err());
    // hexagon domination row: (5.0 - 4.95) / (4.95 - 4.5)
    assert_eq!(display_advantage(advantage(4.5, 4.95, 5.0).unwrap()), "11");
}
