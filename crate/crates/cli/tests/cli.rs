use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cdrkit::corpus::parse_pubtator;
use cdrkit::eval::read_report;
use cdrkit::heatmap::HeatmapRecord;
use cdrkit::instances::{Label, Level};
use cdrkit::nam::{write_predictions, Prediction};
use tempfile::TempDir;

fn data() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic")
}

fn cdrkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdrkit"))
        .args(args)
        .output()
        .unwrap()
}

/// Runs with the bundled config and the output redirected to `out`.
fn with_config(out: &Path, args: &[&str]) -> Output {
    let config = data().join("pipeline.conf");
    let output = format!("output={}", out.display());
    let mut all = vec!["--config", config.to_str().unwrap(), "--set", &output];
    all.extend_from_slice(args);
    cdrkit(&all)
}

fn ok(o: &Output) {
    assert!(
        o.status.success(),
        "exit {:?}\n{}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
}

fn files(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn pipeline_writes_a_report_matching_the_stages() {
    let tmp = TempDir::new().unwrap();
    let whole = tmp.path().join("whole");
    ok(&with_config(&whole, &["pipeline"]));
    let report = read_report(&fs::read_to_string(whole.join("eval/report.tsv")).unwrap()).unwrap();
    let names: Vec<&str> = report.iter().map(|r| r.0.as_str()).collect();
    assert_eq!(names, ["intra", "inter", "merged", "postprocessed"]);
    assert!(report[2].1.f > 0.5, "{report:?}");

    let staged = tmp.path().join("staged");
    for stage in [
        "parse",
        "build-instances",
        "extract-triples",
        "train-kge",
        "train-nam",
        "predict",
        "postprocess",
        "evaluate",
    ] {
        ok(&with_config(&staged, &[stage]));
    }
    assert_eq!(files(&whole), files(&staged));
}

#[test]
fn evaluate_gold_as_predictions_is_perfect() {
    let tmp = TempDir::new().unwrap();
    let gold = data().join("test.pubtator");
    let docs = parse_pubtator(&fs::read_to_string(&gold).unwrap()).unwrap();
    let preds: Vec<Prediction> = docs
        .iter()
        .flat_map(|d| {
            d.gold_pairs.iter().map(|(c, dis)| Prediction {
                pmid: d.pmid.clone(),
                level: Level::Intra,
                chemical: c.clone(),
                disease: dis.clone(),
                probabilities: [0.0, 1.0],
                label: Label::Positive,
                attention: Vec::new(),
                tokens: Vec::new(),
            })
        })
        .collect();
    let path = tmp.path().join("predictions.tsv");
    fs::write(&path, write_predictions(&preds)).unwrap();
    let o = cdrkit(&[
        "evaluate",
        "--predictions",
        path.to_str().unwrap(),
        "--gold",
        gold.to_str().unwrap(),
    ]);
    ok(&o);
    let text = String::from_utf8(o.stdout).unwrap();
    let merged = text.lines().find(|l| l.starts_with("merged")).unwrap();
    assert!(merged.ends_with("\t100.00\t100.00\t100.00"), "{text}");
}

#[test]
fn heatmaps_are_normalized_and_favour_the_trigger() {
    let tmp = TempDir::new().unwrap();
    let data_dir = tmp.path().join("trigger");
    let d = data_dir.to_str().unwrap();
    ok(&cdrkit(&["synthetic", "--out", d, "--task", "trigger"]));
    let config = data_dir.join("pipeline.conf");
    let c = config.to_str().unwrap();
    ok(&cdrkit(&["--config", c, "pipeline"]));
    let o = cdrkit(&["--config", c, "heatmap", "--svg"]);
    ok(&o);
    let listed = String::from_utf8(o.stdout).unwrap();
    let (mut with_trigger, mut trigger_max) = (0, 0);
    for path in listed.lines() {
        let record = HeatmapRecord::from_tsv(&fs::read_to_string(path).unwrap()).unwrap();
        let sum: f64 = record.cells.iter().map(|c| c.1).sum();
        assert!((sum - 1.0).abs() < 1e-6, "{path}: {sum}");
        assert!(Path::new(path).with_extension("svg").is_file());
        if record.p_positive > 0.5 && record.cells.iter().any(|c| c.0 == "induced") {
            with_trigger += 1;
            let top = record
                .cells
                .iter()
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            trigger_max += usize::from(top.0 == "induced");
        }
    }
    assert!(with_trigger > 20);
    assert!(
        trigger_max as f64 >= 0.9 * with_trigger as f64,
        "{trigger_max}/{with_trigger}"
    );
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(cdrkit(&["no-such-command"]).status.code(), Some(1));
    let o = with_config(tmp.path(), &["--set", "kge.dim=0", "--set", "bogus=1", "pipeline"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("bogus") && err.contains("kge.dim"), "{err}");

    let o = with_config(tmp.path(), &["train-nam"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("build-instances"));
}

#[test]
fn ttest_prints_statistics() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    fs::write(&a, "1.5\n2.5\n2\n2\n").unwrap();
    fs::write(&b, "1\n1\n1\n1\n").unwrap();
    let o = cdrkit(&["ttest", a.to_str().unwrap(), b.to_str().unwrap()]);
    ok(&o);
    let text = String::from_utf8(o.stdout).unwrap();
    let row: Vec<f64> = text.lines().nth(1).unwrap().split('\t').map(|x| x.parse().unwrap()).collect();
    assert!((row[1] - 24f64.sqrt()).abs() < 1e-9);
    assert!((row[2] - 0.0163).abs() < 1e-3);
}
