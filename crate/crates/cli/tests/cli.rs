use std::process::Command;

fn flowshape() -> Command {
    Command::new(env!("CARGO_BIN_EXE_flowshape"))
}

#[test]
fn small_diffuser_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = flowshape()
        .args([
            "run",
            "diffuser",
            "--nx",
            "8",
            "--ny",
            "8",
            "--outer",
            "2",
            "--inner",
            "2",
            "--vtk-every",
            "1",
        ])
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("history.csv")).unwrap();
    assert!(csv.starts_with("outer,inner,stage,L,"));
    assert_eq!(csv.lines().count(), 1 + 2 * 5);
    for f in ["field_0001.vtk", "field_0002.vtk", "field_final.vtk"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn unstable_stabilizer_needs_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let base = [
        "run", "diffuser", "--nx", "4", "--ny", "4", "--outer", "1", "--inner", "1", "--stab", "0",
    ];
    let out = flowshape()
        .args(base)
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stabilizer"));

    let out = flowshape()
        .args(base)
        .args(["--allow-unstable", "--policy", "record"])
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn unknown_case_is_reported() {
    let out = flowshape().args(["run", "nosuchcase"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown case"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "case = pipe_bend\nnx = 6\nny = 6\nouter = 3\ninner = 1\n",
    )
    .unwrap();
    let out = flowshape()
        .args(["run", "--outer", "1"])
        .arg("--config")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.starts_with("pipe_bend: 1 outer iterations"),
        "{stdout}"
    );
}

#[test]
fn malformed_config_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "nx = many\n").unwrap();
    let out = flowshape()
        .arg("run")
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn identical_runs_give_identical_history() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let out = flowshape()
            .args([
                "run", "bypass", "--nx", "9", "--ny", "6", "--outer", "2", "--inner", "2",
                "--seed", "5",
            ])
            .arg("--out-dir")
            .arg(d.path())
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    let a = std::fs::read(dirs[0].path().join("history.csv")).unwrap();
    let b = std::fs::read(dirs[1].path().join("history.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn runaway_multiplier_exits_with_solver_status() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "run",
        "diffuser",
        "--nx",
        "12",
        "--ny",
        "12",
        "--stop-tol",
        "none",
    ];
    let out = flowshape()
        .args(args)
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-finite"));

    let out = flowshape()
        .args(args)
        .args(["--policy", "record"])
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(dir.path().join("history.csv").exists());
    assert!(dir.path().join("field_final.vtk").exists());
}

#[test]
fn lists_cases() {
    let out = flowshape().arg("cases").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["diffuser", "rugby", "pipe_bend", "bypass"] {
        assert!(text.contains(name));
    }
}
