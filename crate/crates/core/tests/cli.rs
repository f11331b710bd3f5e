use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_noflip"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

#[test]
fn verify_writes_outputs_and_is_byte_stable() {
    let base = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    let mut reports = Vec::new();
    for run in ["a", "b"] {
        let out = base.join(run);
        let status = bin()
            .args(["verify"])
            .arg(scenario("case_one_vs_two.toml"))
            .args(["--seed", "3", "--out"])
            .arg(&out)
            .args(["--tolerance-overrides", "differs=1e-8,bell=1e-9"])
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        reports.push(std::fs::read(out.join("report.txt")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn bad_inputs_are_reported() {
    let out = bin()
        .args(["verify"])
        .arg(scenario("case_one_vs_two.toml"))
        .args(["--tolerance-overrides", "nonsense=1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown tolerance"));

    let missing = bin().args(["verify", "does-not-exist.toml"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}
