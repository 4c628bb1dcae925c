use std::process::{Command, Output};

fn qdm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdm"))
        .args(args)
        .env_remove("QDM_DATA_DIR")
        .output()
        .unwrap()
}

fn error_line(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

#[test]
fn help_succeeds() {
    assert!(qdm(&["--help"]).status.success());
    assert!(qdm(&["train-qdm", "--help"]).status.success());
}

#[test]
fn missing_subcommand_is_missing_input() {
    let out = qdm(&[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["exit_code"], 2);
}

#[test]
fn unknown_flag_and_bad_override_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let run = run.to_str().unwrap();
    let out = qdm(&["sample", "--bogus"]);
    assert_eq!(out.status.code(), Some(3));
    let out = qdm(&[
        "train-qdm",
        "--preset",
        "latent",
        "--run-dir",
        run,
        "--set",
        "model.no_such_field=1",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_line(&out)["error"], "config");
    let out = qdm(&["train-qdm", "--preset", "nonsense", "--run-dir", run]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn missing_data_or_checkpoint_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let run = run.to_str().unwrap();
    let absent = dir.path().join("absent");
    let out = qdm(&[
        "train-qdm",
        "--preset",
        "latent",
        "--run-dir",
        run,
        "--data-dir",
        absent.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/mnist");
    let out = qdm(&["sample", "--preset", "hardware", "--run-dir", run, "--data-dir", data]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(error_line(&out)["error"], "missing_input");
}
