use std::fs;
use std::path::{Path, PathBuf};

use hlsqor::cli::{help_text, run, EXIT_DATA, EXIT_OK, EXIT_USAGE};

fn corpus(file: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/corpus").join(file).display().to_string()
}

fn golden_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/help.txt")
}

fn invoke(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("hlsqor").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// Set `UPDATE_GOLDEN=1` to rewrite the expected help text.
#[test]
fn help_matches_golden() {
    let help = help_text();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(golden_path(), &help).unwrap();
    }
    let expected = fs::read_to_string(golden_path()).expect("golden help file");
    assert_eq!(help, expected);
}

#[test]
fn extract_writes_one_header_and_one_row() {
    let (code, out, err) = invoke(&[
        "extract",
        "--source",
        &corpus("average.c"),
        "--ir",
        &corpus("average.ll"),
        "--top",
        "average",
        "--freq-mhz",
        "125",
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0].split(',').count(), 70);
    assert!(lines[0].ends_with("target_freq_mhz"));
    assert!(lines[1].ends_with(",125"));
    assert!(err.contains("total=69"));
}

#[test]
fn extract_without_source_warns_and_zeroes_the_source_family() {
    let (code, out, err) = invoke(&["extract", "--ir", &corpus("sobel.ll"), "--top", "sobel", "--freq-mhz", "100"]);
    assert_eq!(code, EXIT_OK);
    assert!(err.contains("warning: no source file given"), "{err}");
    let row: Vec<f64> = out.lines().nth(1).unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert!(row[..13].iter().all(|v| *v == 0.0));
    assert!(row[13..57].iter().any(|v| *v != 0.0));
}

#[test]
fn unknown_top_is_a_data_error() {
    let (code, _, err) = invoke(&["extract", "--ir", &corpus("sobel.ll"), "--top", "nope", "--freq-mhz", "100"]);
    assert_eq!(code, EXIT_DATA);
    assert!(err.contains("@nope"), "{err}");
}

#[test]
fn malformed_ir_reports_file_and_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.ll");
    fs::write(&path, "define void @f() {\nentry:\n  ret void oops\n").unwrap();
    let (code, _, err) = invoke(&["extract", "--ir", path.to_str().unwrap(), "--top", "f", "--freq-mhz", "100"]);
    assert_eq!(code, EXIT_DATA);
    assert!(err.contains("bad.ll:"), "{err}");
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(invoke(&["train", "--dataset", "x.csv", "--kind", "svm", "--target", "cp", "--out", "m.json"]).0, EXIT_USAGE);
    assert_eq!(invoke(&["train", "--dataset", "x.csv", "--kind", "gbt", "--target", "clk", "--out", "m.json"]).0, EXIT_USAGE);
    assert_eq!(invoke(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(invoke(&["extract", "--ir", "a.ll", "--top", "t", "--freq-mhz", "-5"]).0, EXIT_USAGE);
}

#[test]
fn missing_dataset_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let out = dir.path().join("m.json");
    let (code, _, err) = invoke(&[
        "train",
        "--dataset",
        missing.to_str().unwrap(),
        "--kind",
        "gbt",
        "--target",
        "cp",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_DATA, "{err}");
    assert!(!out.exists());
}

#[test]
fn too_small_dataset_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let model = dir.path().join("m.json");
    assert_eq!(invoke(&["synth-data", "--n", "5", "--out", data.to_str().unwrap()]).0, EXIT_OK);
    let (code, _, err) = invoke(&[
        "train",
        "--dataset",
        data.to_str().unwrap(),
        "--kind",
        "rf",
        "--target",
        "lut",
        "--out",
        model.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_DATA);
    assert!(err.contains("10"), "{err}");
}

#[test]
fn importance_rejects_the_perceptron() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let model = dir.path().join("m.json");
    invoke(&["synth-data", "--n", "30", "--out", data.to_str().unwrap()]);
    let (code, _, err) = invoke(&[
        "train",
        "--dataset",
        data.to_str().unwrap(),
        "--kind",
        "mlp",
        "--target",
        "cp",
        "--param",
        "epochs=5",
        "--out",
        model.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let (code, _, err) = invoke(&["importance", "--model", model.to_str().unwrap()]);
    assert_eq!(code, EXIT_DATA);
    assert!(err.contains("mlp"), "{err}");
}

#[test]
fn shipped_config_matches_the_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    invoke(&["synth-data", "--n", "40", "--out", data.to_str().unwrap()]);
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/hyperparams.toml");
    let train = |extra: &[&str], out: &Path| {
        let mut args = vec!["train", "--dataset", data.to_str().unwrap(), "--kind", "gbt", "--target", "cp"];
        args.extend_from_slice(extra);
        args.extend_from_slice(&["--out", out.to_str().unwrap()]);
        let (code, _, err) = invoke(&args);
        assert_eq!(code, EXIT_OK, "{err}");
        fs::read(out).unwrap()
    };
    let with_config = train(&["--config", config.to_str().unwrap()], &dir.path().join("a.json"));
    let plain = train(&[], &dir.path().join("b.json"));
    assert_eq!(with_config, plain);
}
