//! End-to-end runs of the `labeltrick` binary.

use std::path::Path;
use std::process::{Command, Output};

use labeltrick_core::data::{read_metrics_csv, sidecar_path};
use labeltrick_core::training::read_checkpoint;

fn labeltrick(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_labeltrick"))
        .args(args)
        .current_dir(cwd)
        .env_remove("LABELTRICK_THREADS")
        .output()
        .expect("spawn labeltrick")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_writes_metrics_sidecar_and_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let o = labeltrick(
        &[
            "run",
            "--method=trainable_lp",
            "--dataset.sbm.n_per_block=30",
            "--train.epochs=20",
            "--output=out/m.csv",
            "--checkpoint=out/w.ckpt",
            "--seed=3",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("method=trainable_lp"));
    let rows = read_metrics_csv(dir.path().join("out/m.csv")).unwrap();
    assert_eq!(
        rows.iter().map(|r| r.split.as_str()).collect::<Vec<_>>(),
        ["val", "test"]
    );
    assert!(rows.iter().all(|r| r.seed == 3 && r.alpha == Some(0.5)));
    let sidecar: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(sidecar_path(dir.path().join("out/m.csv"))).unwrap(),
    )
    .unwrap();
    assert_eq!(sidecar["train"]["epochs"], 20);
    assert_eq!(sidecar["dataset"]["sbm"]["seed"], 3);
    let (w, header) = read_checkpoint(dir.path().join("out/w.ckpt")).unwrap();
    assert_eq!(header.seed, 3);
    assert_eq!(w.get("w").unwrap().shape(), (2, 2));
}

#[test]
fn config_file_and_repeated_runs_agree() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.json"),
        r#"{"method": "linear_trick_s", "dataset": {"sbm": {"n_per_block": 25}}, "train": {"epochs": 15}}"#,
    )
    .unwrap();
    for out in ["a.csv", "b.csv"] {
        let o = labeltrick(
            &[
                "run",
                "--config",
                "c.json",
                &format!("--output={out}"),
                "--threads=1",
            ],
            dir.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn sweep_rows_are_sorted_by_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let o = labeltrick(
        &[
            "sweep-alpha",
            "--alphas",
            "0.7,0.2,0.5",
            "--method=linear_trick_d",
            "--dataset.sbm.n_per_block=20",
            "--train.epochs=10",
            "--output=s.csv",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_metrics_csv(dir.path().join("s.csv")).unwrap();
    let alphas: Vec<f64> = rows
        .iter()
        .filter(|r| r.split == "val")
        .map(|r| r.alpha.unwrap())
        .collect();
    assert_eq!(alphas, [0.2, 0.5, 0.7]);

    let o = labeltrick(
        &["sweep-alpha", "--alphas", "0.5,1.0", "--output=t.csv"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_and_config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["run", "--method=unknown"],
        vec!["run", "--train.lr=0"],
        vec!["run", "--nonsense.key=3"],
        vec!["run", "--dataset.source=dir", "--dataset.path=missing"],
        vec!["verify", "thm9"],
        vec!["frobnicate"],
        vec!["run", "--threads=0"],
    ] {
        let o = labeltrick(&args, dir.path());
        assert_eq!(
            o.status.code(),
            Some(1),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn verify_suite_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = labeltrick(
        &[
            "verify", "thm1", "--n", "25", "--seed", "4", "--report", "r.txt",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("thm1 instances=25"));
    let report = std::fs::read_to_string(dir.path().join("r.txt")).unwrap();
    assert!(report.contains("status pass"));
    assert_eq!(
        report.lines().filter(|l| l.starts_with("seed=")).count(),
        25
    );
}

#[test]
fn thread_count_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_labeltrick"))
        .args(["verify", "appendix", "--n", "10", "--report", "r.txt"])
        .current_dir(dir.path())
        .env("LABELTRICK_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn ingest_remaps_string_ids() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw");
    std::fs::create_dir(&raw).unwrap();
    std::fs::write(
        raw.join("edges.txt"),
        "alice bob\nbob carol\ncarol dave\ndave alice\nerin alice\n",
    )
    .unwrap();
    std::fs::write(
        raw.join("labels.csv"),
        "node_id,label\nalice,x\nbob,y\ncarol,x\ndave,y\nerin,x\n",
    )
    .unwrap();
    let o = labeltrick(&["ingest", "raw", "clean", "--seed", "2"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("nodes=5"));
    let map = labeltrick_core::data::read_id_map(dir.path().join("clean/id_map.csv")).unwrap();
    assert_eq!(map["alice"], 0);
    assert_eq!(map["erin"], 4);

    let o = labeltrick(
        &[
            "run",
            "--dataset.source=dir",
            "--dataset.path=clean",
            "--method=lp",
            "--output=m.csv",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}
