use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_mas-classify");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn scenario(dir: &Path, seed: &str) -> PathBuf {
    let o = run(dir, &["scenario", "--n", "40", "--main", "4", "--seed", seed, "--out", "zones.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    dir.join("zones.csv")
}

fn golden(name: &str, actual: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, actual).unwrap();
        return;
    }
    let expected = fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("missing golden file {}: {e}", path.display()));
    assert_eq!(actual, expected, "golden mismatch for {name}; rerun with UPDATE_GOLDEN=1 after review");
}

#[test]
fn scenario_file_has_header_and_forty_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario(dir.path(), "1");
    let text = fs::read_to_string(path).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 41);
    assert!(text.contains("# seed: 1"));
    let mains = text.lines().filter(|l| l.starts_with('z') && l.ends_with(",1")).count();
    assert_eq!(mains, 4);
    let o = run(dir.path(), &["scenario", "--n", "2", "--main", "2", "--out", "x.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("BadCounts"));
}

#[test]
fn weights_table_lists_eight_attributes() {
    let dir = tempfile::tempdir().unwrap();
    scenario(dir.path(), "1");
    let o = run(dir.path(), &["weights", "--data", "zones.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().skip(1).take(8).collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().any(|r| r.ends_with("yes")));
    let weights: Vec<f64> = rows
        .iter()
        .map(|r| r.split_whitespace().nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(weights.windows(2).all(|w| w[0] >= w[1]));
    assert!(dir.path().join("zones.weights").exists());
    golden("weights_seed1.txt", &out);

    let again = run(dir.path(), &["weights", "--data", "zones.csv"]);
    assert_eq!(o.stdout, again.stdout);
}

#[test]
fn weights_on_constant_data_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("flat.csv"), "id,a,b\nr1,3,4\nr2,3,4\n").unwrap();
    let o = run(dir.path(), &["weights", "--data", "flat.csv", "--select", "a,b"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("AllWeightsZero"));
}

#[test]
fn weights_ties_sort_by_name() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("t.csv"), "id,b,a\nr1,0,1\nr2,1,0\n").unwrap();
    let o = run(dir.path(), &["weights", "--data", "t.csv", "--policy", "topk:1"]);
    let out = stdout(&o);
    let names: Vec<&str> = out.lines().skip(1).take(2).map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(names, ["a", "b"]);
}

#[test]
fn train_on_separable_scenario_prints_full_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    scenario(dir.path(), "1");
    let o = run(dir.path(), &["train", "--data", "zones.csv", "--out", "model.txt"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("train accuracy  1.000"));
    assert!(stdout(&o).contains("accuracy        1.000"));
    assert!(fs::read_to_string(dir.path().join("model.txt")).unwrap().starts_with("SMFFNN-MODEL v1\n"));
}

#[test]
fn training_without_split_ignores_seed() {
    let dir = tempfile::tempdir().unwrap();
    scenario(dir.path(), "4");
    for (seed, out) in [("1", "a.txt"), ("99", "b.txt")] {
        let o = run(dir.path(), &["train", "--data", "zones.csv", "--test-fraction", "0", "--seed", seed, "--out", out]);
        assert!(o.status.success());
    }
    let a = fs::read(dir.path().join("a.txt")).unwrap();
    let b = fs::read(dir.path().join("b.txt")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn single_class_training_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("one.csv"), "id,a,label\nr1,1,1\nr2,2,1\nr3,4,1\n").unwrap();
    let o = run(dir.path(), &["train", "--data", "one.csv", "--test-fraction", "0", "--out", "m.txt"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("SingleClassTraining"));
}

fn hand_model(dir: &Path) {
    fs::write(
        dir.join("model.txt"),
        "SMFFNN-MODEL v1\nthreshold 0.9\norientation class1_above\ntrain_accuracy 1\nattributes 2\na\t0\t1\t1\nb\t0\t1\t1\n",
    )
    .unwrap();
}

#[test]
fn classify_assigns_and_honours_boundary() {
    let dir = tempfile::tempdir().unwrap();
    hand_model(dir.path());
    fs::write(dir.path().join("d.csv"), "id,a,b\nr1,0.5,0.5\nr2,0.1,0.1\nr3,0.45,0.45\n").unwrap();
    let o = run(dir.path(), &["classify", "--model", "model.txt", "--data", "d.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let classes: Vec<String> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().last().unwrap().to_string())
        .collect();
    // r3 scores 0.9 exactly
    assert_eq!(classes, ["1", "2", "1"]);
}

#[test]
fn classify_with_missing_attribute_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    hand_model(dir.path());
    fs::write(dir.path().join("d.csv"), "id,a\nr1,0.5\n").unwrap();
    let o = run(dir.path(), &["classify", "--model", "model.txt", "--data", "d.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("DimensionMismatch"));
}

#[test]
fn approved_pipeline_matches_golden_trace() {
    let dir = tempfile::tempdir().unwrap();
    scenario(dir.path(), "1");
    let o = run(
        dir.path(),
        &["pipeline", "--scenario", "zones.csv", "--trace", "trace.tsv", "--coverage", "coverage.tsv"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    golden("pipeline_seed1_trace.tsv", &fs::read_to_string(dir.path().join("trace.tsv")).unwrap());
    golden("pipeline_seed1_report.txt", &fs::read_to_string(dir.path().join("report.txt")).unwrap());
    let cov = fs::read_to_string(dir.path().join("coverage.tsv")).unwrap();
    assert_eq!(cov.lines().count(), 41);
}

#[test]
fn feedback_two_produces_three_reports() {
    let dir = tempfile::tempdir().unwrap();
    scenario(dir.path(), "2");
    let o = run(
        dir.path(),
        &["pipeline", "--scenario", "zones.csv", "--head-policy", "feedback:2", "--trace", "t.tsv"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let trace = fs::read_to_string(dir.path().join("t.tsv")).unwrap();
    let reports = trace
        .lines()
        .filter(|l| l.split('\t').nth(1) == Some("delivery") && l.split('\t').nth(6) == Some("report"))
        .count();
    assert_eq!(reports, 3);
}

#[test]
fn endless_feedback_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    scenario(dir.path(), "2");
    let o = run(
        dir.path(),
        &["pipeline", "--scenario", "zones.csv", "--head-policy", "always-feedback", "--trace", "t.tsv"],
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("StepLimitExceeded"));
    assert!(dir.path().join("t.tsv").exists());

    let o = run(
        dir.path(),
        &["pipeline", "--scenario", "zones.csv", "--max-steps", "3", "--trace", "t.tsv"],
    );
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn manifest_digests_are_stable_and_verifiable() {
    let dir = tempfile::tempdir().unwrap();
    scenario(dir.path(), "5");
    let args = ["--manifest", "m1.json", "pipeline", "--scenario", "zones.csv", "--trace", "t.tsv"];
    assert!(run(dir.path(), &args).status.success());
    let mut second = args;
    second[1] = "m2.json";
    assert!(run(dir.path(), &second).status.success());
    let m1 = fs::read_to_string(dir.path().join("m1.json")).unwrap();
    let m2 = fs::read_to_string(dir.path().join("m2.json")).unwrap();
    assert_eq!(m1, m2);
    let o = run(dir.path(), &["verify", "m1.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    fs::write(dir.path().join("t.tsv"), "tampered\n").unwrap();
    let o = run(dir.path(), &["verify", "m1.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("DigestMismatch"));
}

#[test]
fn unknown_head_policy_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    scenario(dir.path(), "1");
    let o = run(
        dir.path(),
        &["pipeline", "--scenario", "zones.csv", "--head-policy", "sometimes", "--trace", "t.tsv"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("InvalidHeadPolicy"));
}
