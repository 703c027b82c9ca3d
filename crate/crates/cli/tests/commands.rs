use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chronos_cli::csvio::Table;
use chronos_cli::traj1::read_traj1;
use chronos_core::protocol::Label;

const BIN: &str = env!("CARGO_BIN_EXE_chronos");

fn chronos(dir: &Path, args: &[&str]) -> Output {
    chronos_env(dir, args, &[])
}

fn chronos_env(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.current_dir(dir)
        .args(args)
        .env_remove("CHRONOS_SEED")
        .env_remove("CHRONOS_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

#[track_caller]
fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn simulate(dir: &Path, name: &str, direction: &str, count: usize, seed: u64) -> PathBuf {
    let out = chronos(
        dir,
        &[
            "simulate",
            "--direction",
            direction,
            "--count",
            &count.to_string(),
            "--seed",
            &seed.to_string(),
            "--out",
            name,
        ],
    );
    ok(&out);
    dir.join(name)
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate(dir.path(), "a.traj", "forward", 10, 7);
    let b = simulate(dir.path(), "b.traj", "forward", 10, 7);
    let c = simulate(dir.path(), "c.traj", "forward", 10, 8);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
    let records = read_traj1(&a).unwrap();
    assert_eq!(records.len(), 10);
    assert!(records
        .iter()
        .all(|r| r.n_rows() == 5 && r.n_qubits() == 10 && r.label() == Label::Forward));
}

#[test]
fn every_direction_is_available() {
    let dir = tempfile::tempdir().unwrap();
    for (direction, label) in [
        ("forward", Label::Forward),
        ("backward", Label::Backward),
        ("unitary-only", Label::Forward),
        ("unitary-only-reverse", Label::Backward),
    ] {
        let path = simulate(dir.path(), "d.traj", direction, 20, 1);
        assert!(
            read_traj1(&path).unwrap().iter().all(|r| r.label() == label),
            "{direction}"
        );
    }
    let out = chronos(
        dir.path(),
        &["simulate", "--direction", "sideways", "--count", "1", "--out", "x"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("sideways"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["simulate", "--count", "3", "--out", "x", "--bogus"],
        vec!["simulate", "--out", "x"],
        vec!["frobnicate"],
        vec![],
        vec!["simulate", "--count", "many", "--out", "x"],
        vec![
            "train-diffusion",
            "--in",
            "x",
            "--checkpoint",
            "c",
            "--curve-out",
            "f.csv",
        ],
    ] {
        let out = chronos(dir.path(), &args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let err = stderr(&out);
        assert!(err.contains("Usage") || err.contains("error"), "{args:?}: {err}");
        assert!(out.stdout.is_empty());
    }
    let out = chronos(dir.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("simulate"));
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = chronos(dir.path(), &["stats", "--in", "missing.traj"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("missing.traj"));

    fs::write(
        dir.path().join("bad.traj"),
        "#TRAJ v1 qubits=2 steps=1 label=forward count=2\n0110\n01?0\n",
    )
    .unwrap();
    let out = chronos(dir.path(), &["stats", "--in", "bad.traj"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));

    fs::write(
        dir.path().join("short.traj"),
        "#TRAJ v1 qubits=2 steps=1 label=forward count=2\n0110\n",
    )
    .unwrap();
    let out = chronos(dir.path(), &["stats", "--in", "short.traj"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("declares 2 records, found 1"), "{}", stderr(&out));

    let f = simulate(dir.path(), "f.traj", "forward", 30, 1);
    let out = chronos(
        dir.path(),
        &[
            "train-cnn",
            "--train",
            f.to_str().unwrap(),
            "--epochs",
            "1",
            "--checkpoint",
            "c",
        ],
    );
    assert_eq!(out.status.code(), Some(2), "single class: {}", stderr(&out));
    let out = chronos(
        dir.path(),
        &[
            "generate",
            "--checkpoint",
            "f.traj",
            "--label",
            "forward",
            "--count",
            "1",
            "--out",
            "g",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numeric_failures_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), "f.traj", "forward", 64, 1);
    simulate(dir.path(), "b.traj", "backward", 64, 1);
    let out = chronos(
        dir.path(),
        &[
            "train-diffusion",
            "--in",
            "f.traj",
            "--in",
            "b.traj",
            "--epochs",
            "5",
            "--timesteps",
            "20",
            "--lr",
            "1e300",
            "--checkpoint",
            "d.ckpt",
        ],
    );
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(!dir.path().join("d.ckpt").exists());
}

#[test]
fn zero_angle_statistics_are_flat() {
    let dir = tempfile::tempdir().unwrap();
    ok(&chronos(
        dir.path(),
        &[
            "simulate", "--count", "500", "--dt", "0", "--seed", "3", "--out", "z.traj",
        ],
    ));
    ok(&chronos(
        dir.path(),
        &[
            "stats",
            "--in",
            "z.traj",
            "--out-csv",
            "z.csv",
            "--out-svg",
            "z.svg",
            "--entropy-svg",
            "s.svg",
        ],
    ));
    let t = Table::read(&dir.path().join("z.csv")).unwrap();
    assert_eq!(
        t.columns(),
        [
            "step",
            "electron_energy",
            "bath_mean_energy",
            "bath_energy_sem",
            "entropy"
        ]
    );
    assert_eq!(t.rows().len(), 5);
    for col in ["electron_energy", "bath_mean_energy", "entropy"] {
        let v = t.column(col).unwrap();
        assert!(v.iter().all(|x| *x == v[0]), "{col}: {v:?}");
    }
    assert!(fs::read_to_string(dir.path().join("z.svg")).unwrap().contains("<svg"));
}

#[test]
fn stats_prints_csv_without_an_output_path() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), "f.traj", "forward", 50, 2);
    let text = ok(&chronos(dir.path(), &["stats", "--in", "f.traj"]));
    let t = Table::parse(text.as_bytes()).unwrap();
    assert_eq!(t.rows().len(), 5);
}

#[test]
fn seeds_from_environment_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, extra: &[&str], env: &[(&str, &str)]| {
        let mut args = vec!["simulate", "--count", "20", "--out", name];
        args.extend_from_slice(extra);
        ok(&chronos_env(dir.path(), &args, env));
        fs::read(dir.path().join(name)).unwrap()
    };
    let flag = run("flag.traj", &["--seed", "5"], &[]);
    let env = run("env.traj", &[], &[("CHRONOS_SEED", "5")]);
    let both = run("both.traj", &["--seed", "5"], &[("CHRONOS_SEED", "6")]);
    let other = run("other.traj", &[], &[("CHRONOS_SEED", "6")]);
    assert_eq!(flag, env);
    assert_eq!(flag, both);
    assert_ne!(flag, other);

    fs::write(dir.path().join("cfg.json"), r#"{"protocol": {"master_seed": 5}}"#).unwrap();
    let cfg = run("cfg.traj", &["--config", "cfg.json"], &[]);
    assert_eq!(flag, cfg);
    let overridden = run("cfg6.traj", &["--config", "cfg.json"], &[("CHRONOS_SEED", "6")]);
    assert_eq!(overridden, other);

    let bad = chronos_env(
        dir.path(),
        &["simulate", "--count", "1", "--out", "x"],
        &[("CHRONOS_SEED", "abc")],
    );
    assert_eq!(bad.status.code(), Some(1));
    let bad = chronos_env(
        dir.path(),
        &["simulate", "--count", "1", "--out", "x"],
        &[("CHRONOS_THREADS", "0")],
    );
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn config_documents_are_validated() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("unknown.json", r#"{"protocol": {}, "colour": "red"}"#),
        ("nested.json", r#"{"cnn": {"epochz": 3}}"#),
        ("invalid.json", r#"{"kmeans": {"k": 0}}"#),
        ("syntax.json", r#"{"protocol": "#),
        ("beta.json", r#"{"protocol": {"beta": [1.0, -1.0]}}"#),
    ] {
        fs::write(dir.path().join(name), text).unwrap();
        let out = chronos(
            dir.path(),
            &["--config", name, "simulate", "--count", "1", "--out", "x"],
        );
        assert_eq!(out.status.code(), Some(1), "{name}: {}", stderr(&out));
    }
    fs::write(
        dir.path().join("small.json"),
        r#"{"protocol": {"n_bath": 2, "n_steps": 2, "beta": [1.0, -1.0, -1.0]}, "outputs": {"dir": "results"}}"#,
    )
    .unwrap();
    fs::create_dir(dir.path().join("results")).unwrap();
    ok(&chronos(
        dir.path(),
        &["--config", "small.json", "simulate", "--count", "4", "--out", "s.traj"],
    ));
    let records = read_traj1(&dir.path().join("results/s.traj")).unwrap();
    assert!(records.iter().all(|r| r.n_qubits() == 3 && r.n_rows() == 3));
}

#[test]
fn raw_runs_assemble_into_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    ok(&chronos(
        dir.path(),
        &["simulate", "--raw", "--count", "4000", "--seed", "2", "--out", "f.raw"],
    ));
    ok(&chronos(
        dir.path(),
        &[
            "simulate",
            "--raw",
            "--direction",
            "backward",
            "--count",
            "4000",
            "--seed",
            "2",
            "--out",
            "b.raw",
        ],
    ));
    let text = ok(&chronos(
        dir.path(),
        &["assemble", "--raw", "f.raw", "--count", "200", "--out", "f.traj"],
    ));
    assert!(text.starts_with("assembled "));
    ok(&chronos(
        dir.path(),
        &[
            "assemble", "--raw", "b.raw", "--count", "200", "--start", "uniform", "--out", "b.traj",
        ],
    ));
    let f = read_traj1(&dir.path().join("f.traj")).unwrap();
    let b = read_traj1(&dir.path().join("b.traj")).unwrap();
    assert!(!f.is_empty() && f.len() <= 200 && f.iter().all(|r| r.label() == Label::Forward && r.n_rows() == 5));
    assert!(!b.is_empty() && b.iter().all(|r| r.label() == Label::Backward));
    let out = chronos(
        dir.path(),
        &[
            "simulate",
            "--raw",
            "--direction",
            "unitary-only",
            "--count",
            "5",
            "--out",
            "u.raw",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn full_pipeline_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate(d, "f.traj", "forward", 600, 11);
    simulate(d, "b.traj", "backward", 600, 11);
    ok(&chronos(
        d,
        &["stats", "--in", "f.traj", "--out-csv", "f.csv", "--out-svg", "f.svg"],
    ));
    let text = ok(&chronos(
        d,
        &[
            "cluster",
            "--in",
            "f.traj",
            "--in",
            "b.traj",
            "--elbow-max",
            "4",
            "--restarts",
            "2",
            "--out",
            "c.csv",
            "--elbow-out",
            "e.csv",
            "--out-svg",
            "c.svg",
        ],
    ));
    assert!(text.contains("permutation accuracy"));
    assert_eq!(Table::read(&d.join("c.csv")).unwrap().rows().len(), 1200);
    let text = ok(&chronos(
        d,
        &[
            "train-cnn",
            "--train",
            "f.traj",
            "--train",
            "b.traj",
            "--epochs",
            "2",
            "--checkpoint",
            "cnn.ckpt",
            "--curve-out",
            "curve.csv",
            "--curve-svg",
            "curve.svg",
        ],
    ));
    assert_eq!(text.lines().count(), 2);
    assert_eq!(Table::read(&d.join("curve.csv")).unwrap().rows().len(), 2);
    let eval = ok(&chronos(
        d,
        &[
            "eval-cnn",
            "--checkpoint",
            "cnn.ckpt",
            "--test",
            "f.traj",
            "--test",
            "b.traj",
            "--out",
            "p.csv",
        ],
    ));
    assert!(eval.starts_with("accuracy "));
    ok(&chronos(
        d,
        &[
            "train-diffusion",
            "--in",
            "f.traj",
            "--in",
            "b.traj",
            "--epochs",
            "2",
            "--timesteps",
            "30",
            "--hidden",
            "32",
            "--checkpoint",
            "d.ckpt",
            "--loss-out",
            "loss.csv",
            "--fidelity-every",
            "1",
            "--fidelity-samples",
            "50",
            "--curve-out",
            "fid.csv",
            "--curve-svg",
            "fid.svg",
        ],
    ));
    assert_eq!(Table::read(&d.join("fid.csv")).unwrap().rows().len(), 3);
    ok(&chronos(
        d,
        &[
            "generate",
            "--checkpoint",
            "d.ckpt",
            "--label",
            "forward",
            "--count",
            "40",
            "--out",
            "gf.traj",
        ],
    ));
    ok(&chronos(
        d,
        &[
            "generate",
            "--checkpoint",
            "d.ckpt",
            "--label",
            "backward",
            "--count",
            "40",
            "--out",
            "gb.traj",
        ],
    ));
    let fid = ok(&chronos(
        d,
        &[
            "fidelity",
            "--generated",
            "gf.traj",
            "--generated",
            "gb.traj",
            "--reference",
            "f.traj",
            "--reference",
            "b.traj",
            "--out-csv",
            "fs.csv",
        ],
    ));
    assert!(fid.starts_with("fidelity "));
    assert_eq!(Table::read(&d.join("fs.csv")).unwrap().rows().len(), 5);
    let g = read_traj1(&d.join("gb.traj")).unwrap();
    assert!(g.len() == 40 && g.iter().all(|r| r.label() == Label::Backward && r.n_rows() == 5));

    let out = chronos(
        d,
        &[
            "generate",
            "--checkpoint",
            "d.ckpt",
            "--label",
            "none",
            "--count",
            "4",
            "--out",
            "x",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let out = chronos(d, &["eval-cnn", "--checkpoint", "d.ckpt", "--test", "f.traj"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let run = |threads: &str, name: &str| {
        let env = [("CHRONOS_THREADS", threads)];
        ok(&chronos_env(
            d,
            &[
                "simulate",
                "--direction",
                "backward",
                "--count",
                "300",
                "--seed",
                "4",
                "--out",
                name,
            ],
            &env,
        ));
        fs::read(d.join(name)).unwrap()
    };
    assert_eq!(run("1", "one.traj"), run("8", "eight.traj"));
}
