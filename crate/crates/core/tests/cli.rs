mod common;

use std::path::Path;
use std::process::{Command, Output};

use zrc::report::MetricReport;

fn zrc(args: &[&str], dir: &Path) -> Output {
    Command::new(common::zrc_bin())
        .args(args)
        .current_dir(dir)
        .env_remove("ZRC_JOBS")
        .output()
        .unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    common::write_integration_corpus(dir.path());
    dir
}

/// Lexical accuracy of the integration corpus, counted directly.
fn expected_swuggy() -> f64 {
    let s = zrc::synth::generate(&common::integration_spec()).unwrap();
    let score = |id: &String| s.lexical_scores[id];
    let twice: usize = s
        .lexical_pairs
        .iter()
        .map(
            |p| match score(&p.legal).partial_cmp(&score(&p.illegal)).unwrap() {
                std::cmp::Ordering::Greater => 2,
                std::cmp::Ordering::Equal => 1,
                std::cmp::Ordering::Less => 0,
            },
        )
        .sum();
    twice as f64 / (2 * s.lexical_pairs.len()) as f64
}

fn close(a: Option<f64>, b: f64) -> bool {
    a.is_some_and(|a| (a - b).abs() <= 1e-6 * b.abs().max(1.0))
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = zrc(&["bogus"], dir.path());
    assert_eq!(out.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let out = zrc(
        &["abx", "--corpus", "x", "--features", "y", "--frobnicate"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(64));
    let out = zrc(&["--jobs", "0", "bitrate", "u"], dir.path());
    assert_eq!(out.status.code(), Some(64));
    assert_eq!(zrc(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn abx_within_happy_path() {
    let dir = setup();
    let out = zrc(
        &[
            "abx",
            "--corpus",
            "corpus",
            "--features",
            "submission/features",
            "--mode",
            "within",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = MetricReport::from_json(&stdout(&out)).unwrap();
    let within = report.get("abx", "within").unwrap();
    assert!((0.0..=0.5).contains(&within));
    assert!(report.get("abx", "across").is_none());
    assert!(report.inputs.contains_key("features"));
    assert_eq!(report.version.as_deref(), Some(env!("CARGO_PKG_VERSION")));
    assert!(String::from_utf8_lossy(&out.stderr).contains("abx.within"));
}

#[test]
fn all_covers_every_task_in_the_submission() {
    let dir = setup();
    let out = zrc(
        &["all", "--corpus", "corpus", "--submission", "submission"],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = MetricReport::from_json(&stdout(&out)).unwrap();
    for (task, metric) in [
        ("abx", "within"),
        ("abx", "across"),
        ("tde", "ned"),
        ("tde", "coverage"),
        ("tde", "grouping_fscore"),
        ("tde", "type_fscore"),
        ("tde", "token_fscore"),
        ("tde", "boundary_fscore"),
        ("bitrate", "bitrate"),
        ("lexical", "swuggy"),
        ("syntactic", "sblimp"),
        ("semantic", "weighted"),
    ] {
        assert!(
            report.get(task, metric).is_some(),
            "missing {task}.{metric}"
        );
    }
    // the synthetic submission carries the gold word classes
    assert_eq!(report.get("tde", "ned"), Some(0.0));
    assert!(close(report.get("lexical", "swuggy"), expected_swuggy()));

    std::fs::remove_dir_all(dir.path().join("submission/units")).unwrap();
    let out = zrc(
        &["all", "--corpus", "corpus", "--submission", "submission"],
        dir.path(),
    );
    let partial = MetricReport::from_json(&stdout(&out)).unwrap();
    assert!(!partial.metrics.contains_key("bitrate"));
    assert!(partial.metrics.contains_key("abx"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = setup();
    let args = ["all", "--corpus", "corpus", "--submission", "submission"];
    let (a, b) = (zrc(&args, dir.path()), zrc(&args, dir.path()));
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());
}

#[test]
fn output_file_csv_and_percent() {
    let dir = setup();
    let out = zrc(
        &[
            "--format",
            "csv",
            "--percent",
            "-o",
            "report.csv",
            "lex",
            "--pairs",
            "corpus/lexical_pairs.txt",
            "--scores",
            "submission/lexical_scores.txt",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("task,metric,value"));
    let row = csv
        .lines()
        .find(|l| l.starts_with("lexical,swuggy,"))
        .unwrap();
    let value: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
    assert!(close(Some(value), 100.0 * expected_swuggy()), "{csv}");
    let n_pairs = zrc::synth::generate(&common::integration_spec())
        .unwrap()
        .lexical_pairs
        .len();
    assert!(
        csv.contains(&format!("lexical,n_pairs,{n_pairs}\n")),
        "{csv}"
    );
    // the summary goes to stdout when the report goes to a file
    assert!(stdout(&out).contains("lexical.swuggy"));

    let plain = zrc(
        &[
            "lex",
            "--pairs",
            "corpus/lexical_pairs.txt",
            "--scores",
            "submission/lexical_scores.txt",
        ],
        dir.path(),
    );
    let report = MetricReport::from_json(&stdout(&plain)).unwrap();
    assert!(close(report.get("lexical", "swuggy"), expected_swuggy()));
}

#[test]
fn input_errors_name_the_file_and_line() {
    let dir = setup();
    let scores = dir.path().join("bad_scores.txt");
    std::fs::write(&scores, "w0 0.5\nw1 notanumber\n").unwrap();
    let out = zrc(
        &[
            "lex",
            "--pairs",
            "corpus/lexical_pairs.txt",
            "--scores",
            "bad_scores.txt",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("bad_scores.txt") && err.contains("line 2"),
        "{err}"
    );

    let out = zrc(
        &[
            "tde",
            "--corpus",
            "missing",
            "--classes",
            "submission/classes.txt",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing"));
}

#[test]
fn metric_warnings_exit_with_two() {
    let dir = setup();
    std::fs::write(dir.path().join("empty.txt"), "").unwrap();
    let out = zrc(
        &["tde", "--corpus", "corpus", "--classes", "empty.txt"],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = MetricReport::from_json(&stdout(&out)).unwrap();
    assert!(!report.warnings.is_empty());
    assert_eq!(report.get("tde", "token_fscore"), Some(0.0));
}

#[test]
fn synth_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let spec = serde_json::json!({ "inventory": 5, "speakers": 2, "utterances": 12, "seed": 3 });
    std::fs::write(dir.path().join("spec.json"), spec.to_string()).unwrap();
    let out = zrc(
        &["synth", "--spec", "spec.json", "--out", "toy"],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = zrc(
        &["bitrate", "toy/submission/units", "--corpus", "toy/corpus"],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = MetricReport::from_json(&stdout(&out)).unwrap();
    assert!(report.get("bitrate", "bitrate").unwrap() > 0.0);

    std::fs::write(
        dir.path().join("bad.json"),
        r#"{"inventory": 1, "speakers": 1, "utterances": 1, "seed": 0}"#,
    )
    .unwrap();
    let out = zrc(
        &["synth", "--spec", "bad.json", "--out", "toy2"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}
