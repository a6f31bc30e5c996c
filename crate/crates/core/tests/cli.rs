use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn ffmlp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ffmlp"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .display()
        .to_string()
}

#[test]
fn fit_then_eval_xor() {
    let dir = TempDir::new().unwrap();
    let fit = ffmlp(&["fit", "--dataset", "xor", "-o", "xor.json", "--report", "r.json"], dir.path());
    assert!(fit.status.success(), "{}", stderr(&fit));
    let out = stdout(&fit);
    assert!(out.contains("D1=4"), "{out}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(report["final_planes"], 2);
    assert_eq!(report["isolation_violators"], 0);

    let eval = ffmlp(&["eval", "--model", "xor.json", "--dataset", "xor"], dir.path());
    assert!(eval.status.success(), "{}", stderr(&eval));
    assert!(stdout(&eval).contains("train accuracy 100.00% (600/600)"));
}

#[test]
fn eval_rejects_dimension_mismatch() {
    let dir = TempDir::new().unwrap();
    assert!(ffmlp(&["fit", "--dataset", "xor", "-o", "m.json"], dir.path()).status.success());
    let iris = data("iris.csv");
    let eval = ffmlp(&["eval", "--model", "m.json", "--dataset", "iris", "--csv", &iris], dir.path());
    assert_eq!(eval.status.code(), Some(2));
    assert!(stderr(&eval).contains("2-D"), "{}", stderr(&eval));
}

#[test]
fn exit_codes_follow_error_kind() {
    let dir = TempDir::new().unwrap();
    let bad_threshold = ffmlp(&["fit", "--dataset", "xor", "--threshold", "1.5"], dir.path());
    assert_eq!(bad_threshold.status.code(), Some(2));
    assert!(stderr(&bad_threshold).starts_with("error [cli]"));

    let missing = ffmlp(&["fit", "--dataset", "csv", "--csv", "nope.csv", "--label", "0"], dir.path());
    assert_eq!(missing.status.code(), Some(3));

    std::fs::write(dir.path().join("bad.csv"), "a,b,label\n1,2,x\n3,oops,y\n").unwrap();
    let ingest = ffmlp(&["fit", "--dataset", "csv", "--csv", "bad.csv", "--label", "label"], dir.path());
    assert_eq!(ingest.status.code(), Some(3));
    assert!(stderr(&ingest).contains("row 3"), "{}", stderr(&ingest));

    std::fs::write(dir.path().join("model.json"), "{\"version\": 2}").unwrap();
    let version = ffmlp(&["eval", "--model", "model.json"], dir.path());
    assert_eq!(version.status.code(), Some(2));
}

#[test]
fn plot_single_cell_and_responses() {
    let dir = TempDir::new().unwrap();
    assert!(ffmlp(&["fit", "--dataset", "xor", "-o", "m.json"], dir.path()).status.success());
    let plot = ffmlp(
        &["plot", "--model", "m.json", "--box", "0,4,0,4", "--resolution", "1x1", "--out", "one"],
        dir.path(),
    );
    assert!(plot.status.success(), "{}", stderr(&plot));
    let csv = std::fs::read_to_string(dir.path().join("one.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().starts_with("2,2,"));
    let ppm = std::fs::read(dir.path().join("one.ppm")).unwrap();
    assert_eq!(ppm.len(), b"P6\n1 1\n255\n".len() + 3);

    let resp = ffmlp(
        &["responses", "--model", "m.json", "--layer", "l2", "--neuron", "9", "--resolution", "4x4"],
        dir.path(),
    );
    assert_eq!(resp.status.code(), Some(2));
}

#[test]
fn plot_needs_two_dimensions() {
    let dir = TempDir::new().unwrap();
    let iris = data("iris.csv");
    assert!(ffmlp(&["fit", "--dataset", "iris", "--csv", &iris, "-o", "iris.json"], dir.path()).status.success());
    let plot = ffmlp(&["plot", "--model", "iris.json", "--resolution", "2x2"], dir.path());
    assert_eq!(plot.status.code(), Some(2));
}

#[test]
fn train_bp_writes_history() {
    let dir = TempDir::new().unwrap();
    let run = ffmlp(
        &["train-bp", "--dataset", "blobs3", "--init", "ff", "--epochs", "3", "--runs", "2", "--history", "h.csv"],
        dir.path(),
    );
    assert!(run.status.success(), "{}", stderr(&run));
    assert!(stdout(&run).contains("mean over 2 runs"));
    let hist = std::fs::read_to_string(dir.path().join("h.csv")).unwrap();
    assert_eq!(hist.lines().next().unwrap(), "epoch,train_acc,test_acc,loss");
    assert_eq!(hist.lines().count(), 4);
}
