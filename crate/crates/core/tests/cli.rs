use std::path::Path;
use std::process::{Command, Output};

fn rfbias(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rfbias")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = rfbias(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "rfbias {args:?}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn stages_chain_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = d.join("data.csv");
    ok(&["synth", "--coeffs", "2,3,4,5,6,7,8,9", "--n", "1500", "--seed", "7", "--out", s(&data)]);
    assert_eq!(header(&data), "A,B,C,D,E,F,G,H,target");

    ok(&[
        "split", "--data", s(&data), "--train-frac", "0.6", "--validation-frac", "0.2", "--test-frac", "0.2",
        "--seed", "7", "--out-dir", s(d),
    ]);
    for name in ["train.csv", "validation.csv", "test.csv"] {
        assert!(d.join(name).exists(), "{name}");
    }

    let model = d.join("model.json");
    ok(&["train", "--data", s(&d.join("train.csv")), "--ntree", "30", "--nodesize", "20", "--seed", "7", "--out", s(&model)]);

    let preds = d.join("pred.csv");
    ok(&["predict", "--model", s(&model), "--data", s(&d.join("test.csv")), "--out", s(&preds)]);
    assert_eq!(header(&preds), "row,truth,raw");

    let corr = d.join("logit.json");
    let printed = ok(&[
        "fit-correction", "--model", s(&model), "--validation", s(&d.join("validation.csv")), "--fit-on",
        "validation", "--family", "logit", "--out", s(&corr),
    ]);
    for family in ["logit", "sinh", "tan", "linear"] {
        assert!(printed.contains(family), "{printed}");
    }

    let corrected = d.join("corrected.csv");
    ok(&["apply-correction", "--correction", s(&corr), "--predictions", s(&preds), "--out", s(&corrected)]);
    assert_eq!(header(&corrected), "row,truth,raw,corrected");

    let report = d.join("report.csv");
    let table = ok(&["evaluate", "--predictions", s(&corrected), "--format", "csv", "--out", s(&report)]);
    assert!(table.contains("original MSE"), "{table}");
    let report_text = std::fs::read_to_string(&report).unwrap();
    assert_eq!(report_text.lines().count(), 3);

    let json_report = d.join("report.json");
    ok(&["evaluate", "--predictions", s(&corrected), "--out", s(&json_report)]);
    let parsed: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json_report).unwrap()).unwrap();
    assert!(parsed.to_string().contains("corrected"));

    let plot = d.join("plot.csv");
    ok(&["plot-data", "--predictions", s(&corrected), "--out", s(&plot)]);
    assert_eq!(header(&plot), "truth,raw,corrected,residual_raw,residual_corrected");
    let raw: Vec<f64> = std::fs::read_to_string(&plot)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(raw.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn predict_without_truth_column() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = d.join("data.csv");
    ok(&["synth", "--coeffs", "1,1", "--n", "200", "--seed", "1", "--out", s(&data)]);
    let model = d.join("m.json");
    ok(&["train", "--data", s(&data), "--ntree", "5", "--out", s(&model)]);
    let features = d.join("features.csv");
    let text = std::fs::read_to_string(&data).unwrap();
    let stripped: String = text
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string() + "\n")
        .collect();
    std::fs::write(&features, stripped).unwrap();
    let preds = d.join("p.csv");
    ok(&["predict", "--model", s(&model), "--data", s(&features), "--out", s(&preds)]);
    assert_eq!(header(&preds), "row,raw");
}

#[test]
fn pipeline_corrects_toward_truth() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let printed = ok(&[
        "pipeline", "--n", "3000", "--ntree", "50", "--nodesize", "20", "--family", "logit", "--seed", "3",
        "--out-dir", s(&out),
    ]);
    assert!(printed.contains("corrected_logit"), "{printed}");
    for name in ["model.json", "predictions.csv", "report.json", "plot.csv", "correction_logit.json"] {
        assert!(out.join(name).exists(), "{name}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let text = report.to_string();
    let mse_of = |col: &str| -> f64 {
        let entries = report.get("reports").and_then(|r| r.as_array()).expect(&text);
        let entry = entries.iter().find(|e| e["column"] == col).expect(col);
        entry["mse"].as_f64().unwrap()
    };
    assert!(mse_of("corrected_logit") <= mse_of("raw"));
}

#[test]
fn exit_codes() {
    assert_eq!(rfbias(&["--help"]).status.code(), Some(0));
    assert_eq!(rfbias(&["--version"]).status.code(), Some(0));
    assert_eq!(rfbias(&["train", "--bogus"]).status.code(), Some(1));
    assert_eq!(rfbias(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(rfbias(&["synth", "--n", "lots", "--out", "x.csv"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let missing = rfbias(&["train", "--data", s(&d.join("nope.csv")), "--out", s(&d.join("m.json"))]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.csv"));

    let data = d.join("data.csv");
    ok(&["synth", "--coeffs", "1,2,3", "--n", "300", "--seed", "2", "--out", s(&data)]);
    let bad_mtry = rfbias(&["train", "--data", s(&data), "--mtry", "9", "--out", s(&d.join("m.json"))]);
    assert_eq!(bad_mtry.status.code(), Some(2));
    assert!(!d.join("m.json").exists());

    let no_target = rfbias(&["train", "--data", s(&data), "--target", "y", "--out", s(&d.join("m.json"))]);
    assert_eq!(no_target.status.code(), Some(2));

    ok(&["split", "--data", s(&data), "--seed", "2", "--out-dir", s(d)]);
    assert!(!d.join("validation.csv").exists());
    let model = d.join("m.json");
    ok(&["train", "--data", s(&d.join("train.csv")), "--ntree", "5", "--out", s(&model)]);
    let no_validation = rfbias(&[
        "fit-correction", "--model", s(&model), "--train", s(&d.join("train.csv")), "--fit-on", "validation",
        "--out", s(&d.join("c.json")),
    ]);
    assert_eq!(no_validation.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&no_validation.stderr).contains("validation"));
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        ok(&["pipeline", "--n", "1200", "--ntree", "20", "--seed", "11", "--out-dir", s(&out)]);
        ["model.json", "predictions.csv", "correction_logit.json", "report.json"]
            .map(|f| std::fs::read(out.join(f)).unwrap())
    };
    assert!(run("a") == run("b"));
    let other = dir.path().join("c");
    ok(&["pipeline", "--n", "1200", "--ntree", "20", "--seed", "12", "--out-dir", s(&other)]);
    assert_ne!(std::fs::read(other.join("model.json")).unwrap(), run("d")[0]);
}
