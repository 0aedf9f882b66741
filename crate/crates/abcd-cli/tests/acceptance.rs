//! End-to-end acceptance: the shipped five-image fixture must evaluate to a
//! byte-identical copy of the checked-in golden report and CSV files.

use std::path::{Path, PathBuf};
use std::process::Command;

fn fixture(path: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/bccd5").join(path)
}

#[test]
fn criterion_11_cli_eval_matches_golden_byte_for_byte() {
    let out = tempfile::tempdir().unwrap();
    let output = Command::new(env!("CARGO_BIN_EXE_abcd"))
        .arg("eval")
        .arg(fixture("annotations"))
        .arg(fixture("predictions.jsonl"))
        .arg("--out")
        .arg(out.path())
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "eval exited with {}: {}",
        output.status,
        String::from_utf8_lossy(&output.stderr)
    );

    for name in [
        "report.txt",
        "confusion.csv",
        "pr_RBC.csv",
        "pr_WBC.csv",
        "pr_Platelets.csv",
    ] {
        let got = std::fs::read(out.path().join(name)).unwrap();
        let want = std::fs::read(fixture("golden").join(name)).unwrap();
        assert_eq!(got, want, "{name} differs from the golden copy");
    }
}
