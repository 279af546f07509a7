use std::fs;
use std::path::Path;
use std::process::Command;

fn jtsmf(args: &[&str], cwd: &Path) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_jtsmf"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "jtsmf {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn staged_commands_produce_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    jtsmf(
        &[
            "synth",
            "--out",
            "data",
            "--users",
            "60",
            "--votings",
            "30",
            "--groups",
            "5",
            "--communities",
            "3",
            "--seed",
            "4",
        ],
        d,
    );
    assert!(d.join("data/manifest.txt").exists());
    jtsmf(&["split", "--data", "data", "--out", "train", "--fraction", "0.2"], d);
    let test_pairs = fs::read_to_string(d.join("train/test.tsv")).unwrap();
    assert!(test_pairs.lines().any(|l| !l.starts_with('#') && !l.is_empty()));

    jtsmf(
        &[
            "lda-train",
            "--data",
            "train",
            "--out",
            "lda.txt",
            "--topics",
            "3",
            "--iterations",
            "20",
        ],
        d,
    );
    jtsmf(
        &[
            "lda-infer",
            "--data",
            "train",
            "--model",
            "lda.txt",
            "--out",
            "topics",
            "--iterations",
            "10",
        ],
        d,
    );
    for level in ["v", "u", "g"] {
        assert!(d.join(format!("topics/doc_topics_{level}.tsv")).exists());
    }
    jtsmf(
        &[
            "embed", "--data", "train", "--topics", "topics", "--out", "tewe.bin", "--dim", "8", "--epochs", "1",
            "--binary",
        ],
        d,
    );
    jtsmf(
        &[
            "doc-embed",
            "--data",
            "train",
            "--topics",
            "topics",
            "--store",
            "tewe.bin",
            "--out",
            "docs.txt",
        ],
        d,
    );
    jtsmf(
        &[
            "sims",
            "--data",
            "train",
            "--doc-embeddings",
            "docs.txt",
            "--out",
            "sims",
        ],
        d,
    );
    jtsmf(
        &[
            "mf-train",
            "--data",
            "train",
            "--sims",
            "sims",
            "--out",
            "jts.mf",
            "--iterations",
            "20",
            "--log",
            "jts.tsv",
        ],
        d,
    );
    let log = fs::read_to_string(d.join("jts.tsv")).unwrap();
    assert!(log.lines().filter(|l| !l.starts_with('#')).count() >= 21, "{log}");

    let report = jtsmf(
        &[
            "evaluate",
            "--data",
            "train",
            "--test",
            "train/test.tsv",
            "--model",
            "jts.mf",
            "--ks",
            "1,5",
        ],
        d,
    );
    assert!(report.contains("recall"), "{report}");
    assert_eq!(
        report
            .lines()
            .filter(|l| l.starts_with("1\t") || l.starts_with("5\t"))
            .count(),
        2
    );
    let pop = jtsmf(
        &[
            "evaluate",
            "--data",
            "train",
            "--test",
            "train/test.tsv",
            "--mostpop",
            "--ks",
            "5",
        ],
        d,
    );
    assert!(pop.lines().any(|l| l.starts_with("5\t")));

    let stats = jtsmf(&["stats", "--data", "data", "--pairs", "2000", "--votings", "20"], d);
    assert!(!stats.is_empty());
}

#[test]
fn bad_input_fails_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_jtsmf"))
        .args(["split", "--data", "nowhere", "--out", "x"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
}
