use std::process::Command;

fn mhdmg() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mhdmg"))
}

#[test]
fn verify_writes_a_convergence_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("verify.csv");
    let status = mhdmg().args(["verify", "--meshes", "4,8", "--coarse", "4", "--out"]).arg(&out).status().unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("mesh,h,u_l2"));
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("table.csv");
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, format!("mesh = 8\nlevels = 2\nvariant = \"coupled\"\nout = {:?}\n", out)).unwrap();
    let status = mhdmg()
        .args(["hartmann-table", "--mesh", "64", "--variant", "purist", "--re", "4", "--rem", "4", "--config"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[3..7], &["8", "4", "2", "coupled"]);
    assert_eq!(row.last(), Some(&"ok"));
}

#[test]
fn island_short_run_to_stdout() {
    let out = mhdmg()
        .args(["island", "--mesh", "8", "--levels", "2", "--epsilon", "0", "--dt", "0.1", "--tfinal", "0.2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    // step 0 and two macro steps
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn bad_input_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "meshh = 8\n").unwrap();
    assert!(!mhdmg().args(["verify", "--config"]).arg(&cfg).status().unwrap().success());
    assert!(!mhdmg().args(["hartmann-table", "--mesh", "60", "--levels", "9"]).status().unwrap().success());
}
