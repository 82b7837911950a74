mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::{tiny, TINY};
use mvat::checkpoint::Checkpoint;
use mvat::config::{RunConfig, SEED_ENV};
use mvat::core::distill::{PLoss, View};
use mvat::core::model::{ModelConfig, Role, Side};
use mvat::export::{read_tams, TAM_FILE};
use mvat::io::{read_wav, write_wav};
use mvat::trainer::Trainer;

fn mvat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mvat"))
        .args(args)
        .env_remove(SEED_ENV)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn repo_configs(sub: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(sub)
}

#[test]
fn usage_errors_exit_with_one() {
    for args in [
        &[][..],
        &["bogus"],
        &["train"],
        &["count", "--config"],
        &["count", "--config", "x", "--input-len", "-3"],
    ] {
        let out = mvat(args);
        assert_eq!(code(&out), 1, "{args:?}: {}", stderr(&out));
    }
    let out = mvat(&[
        "train", "--config", "c", "--out", "o", "--seed", "1", "--resume", "r",
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn help_and_version_exit_with_zero() {
    for args in [&["--help"][..], &["--version"], &["distill", "--help"]] {
        let out = mvat(args);
        assert_eq!(code(&out), 0, "{args:?}");
        assert!(!stdout(&out).is_empty());
    }
}

#[test]
fn runtime_failures_exit_with_two_and_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(
        dir.path(),
        "bad.toml",
        "[train]\nepochs = 1\nseed = 0\nlearning_rte = 1.0\n",
    );
    let missing = write_config(dir.path(), "missing.toml", "[train]\nseed = 0\n");
    let cases: Vec<Vec<&str>> = vec![
        vec!["count", "--config", "/nonexistent.toml"],
        vec!["count", "--config", s(&bad)],
        vec!["count", "--config", s(&missing)],
        vec![
            "enhance",
            "--ckpt",
            "/nonexistent.ckpt",
            "--in",
            "a.wav",
            "--out",
            "b.wav",
        ],
        vec![
            "evaluate",
            "--ckpt",
            "/nonexistent.ckpt",
            "--data",
            "m.tsv",
            "--report",
            "r.jsonl",
        ],
    ];
    for args in &cases {
        let out = mvat(args);
        assert_eq!(code(&out), 2, "{args:?}");
        let err = stderr(&out);
        assert_eq!(err.trim_end().lines().count(), 1, "{err}");
        assert!(err.starts_with("error: "));
    }
    let err = stderr(&mvat(&cases[2]));
    assert!(err.contains("[train]") && err.contains("epochs"), "{err}");
}

#[test]
fn count_orders_the_student_regimes() {
    let dir = tempfile::tempdir().unwrap();
    let mut rows = Vec::new();
    for c in [12, 24, 30] {
        let cfg = write_config(
            dir.path(),
            &format!("c{c}.toml"),
            &format!(
                "[model.student]\ndepth = 3\nbase_channels = {c}\n[train]\nepochs = 1\nseed = 0\n"
            ),
        );
        let out = mvat(&["count", "--config", s(&cfg), "--input-len", "16000"]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let line = stdout(&out);
        let field = |k: &str| -> u64 {
            line.split_whitespace()
                .find_map(|f| f.strip_prefix(&format!("{k}=")))
                .unwrap()
                .parse()
                .unwrap()
        };
        rows.push((field("params"), field("flops")));
    }
    assert!(rows[0].0 < rows[1].0 && rows[1].0 < rows[2].0, "{rows:?}");
    assert!(rows[0].1 < rows[1].1 && rows[1].1 < rows[2].1, "{rows:?}");
}

#[test]
fn ablation_fixtures_parse_and_differ_only_in_distillation() {
    let dir = repo_configs("ablation");
    let load = |name: &str| RunConfig::load(&dir.join(format!("{name}.toml"))).unwrap();
    let rows = [
        "baseline",
        "single_view_at",
        "kd",
        "mvat_no_dual_depth",
        "mvat_l1",
        "mvat_l2",
        "mvat_kd",
    ];
    for name in rows {
        let cfg = load(name);
        assert_eq!(
            cfg.teacher().unwrap(),
            &ModelConfig::teacher(4, 60),
            "{name}"
        );
        assert_eq!(
            cfg.student().unwrap(),
            &ModelConfig::student(3, 12),
            "{name}"
        );
        assert_eq!(cfg.train.batch_size, 4);
        assert_eq!(
            RunConfig::parse(&cfg.to_toml().unwrap()).unwrap(),
            cfg,
            "{name}"
        );
    }
    let d = |name| load(name).distill;
    let at = |name| d(name).lambda_at != 0.0;
    let kd = |name| d(name).lambda_kd != 0.0;
    assert!(!at("baseline") && !kd("baseline"));
    assert!(
        at("single_view_at")
            && !kd("single_view_at")
            && d("single_view_at").single_view == Some(View::Channel)
    );
    assert!(!at("kd") && kd("kd"));
    assert!(at("mvat_no_dual_depth") && !d("mvat_no_dual_depth").dual_depth);
    assert!(
        at("mvat_l1")
            && !kd("mvat_l1")
            && d("mvat_l1").dual_depth
            && d("mvat_l1").p_loss == PLoss::L1
    );
    assert!(at("mvat_l2") && !kd("mvat_l2") && d("mvat_l2").p_loss == PLoss::L2);
    assert!(
        at("mvat_kd")
            && kd("mvat_kd")
            && d("mvat_kd").single_view.is_none()
            && d("mvat_kd").dual_depth
    );
}

#[test]
fn desk_fixtures_parse() {
    for name in ["teacher", "baseline", "mvat", "mvat_kd"] {
        let cfg = RunConfig::load(&repo_configs("desk").join(format!("{name}.toml"))).unwrap();
        assert_eq!(cfg.teacher().unwrap(), &ModelConfig::teacher(3, 24));
        assert_eq!(cfg.student().unwrap().ma_placement, vec![2]);
    }
    RunConfig::load(&repo_configs("tiny.toml")).unwrap();
}

#[test]
fn train_distill_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_config(d, "tiny.toml", TINY);
    let teacher_dir = d.join("teacher");
    let out = mvat(&[
        "train",
        "--config",
        s(&cfg),
        "--model",
        "teacher",
        "--out",
        s(&teacher_dir),
        "--epochs",
        "1",
        "-q",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).is_empty());
    for f in ["last.ckpt", "best.ckpt", "train.jsonl"] {
        assert!(teacher_dir.join(f).exists(), "{f}");
    }
    let teacher = Checkpoint::load(&teacher_dir.join("last.ckpt")).unwrap();
    assert_eq!(teacher.role, Role::Teacher);
    assert_eq!(teacher.progress.epochs_done, 1);

    let student_dir = d.join("student");
    let log = d.join("log.jsonl");
    let out = mvat(&[
        "distill",
        "--config",
        s(&cfg),
        "--teacher",
        s(&teacher_dir.join("best.ckpt")),
        "--out",
        s(&student_dir),
        "--log",
        s(&log),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(
        stdout(&out)
            .lines()
            .filter(|l| l.starts_with("epoch"))
            .count(),
        2
    );
    let lines: Vec<serde_json::Value> = std::fs::read_to_string(&log)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let step = lines.iter().find(|l| l["kind"] == "step").unwrap();
    for key in [
        "epoch",
        "step",
        "loss_total",
        "loss_sup",
        "loss_at_channel",
        "loss_at_global",
        "loss_at_local",
        "loss_kd",
        "lr",
    ] {
        assert!(step.get(key).is_some(), "{key}");
    }
    assert_eq!(lines.iter().filter(|l| l["kind"] == "epoch").count(), 2);

    let data = d.join("data");
    assert_eq!(
        code(&mvat(&["corpus", "--config", s(&cfg), "--out", s(&data)])),
        0
    );
    let report = d.join("eval.jsonl");
    let out = mvat(&[
        "evaluate",
        "--ckpt",
        s(&student_dir.join("last.ckpt")),
        "--data",
        s(&data.join("test.tsv")),
        "--report",
        s(&report),
        "--name",
        "tiny",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let table = std::fs::read_to_string(report.with_extension("txt")).unwrap();
    assert_eq!(stdout(&out), table);
    assert!(table.lines().nth(2).unwrap().starts_with("| tiny"));
    let records = std::fs::read_to_string(&report).unwrap();
    assert_eq!(records.lines().count(), 4 + 1);
}

#[test]
fn resume_from_the_command_line_matches_one_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_config(d, "tiny.toml", TINY);
    let run = |out: &Path, extra: &[&str]| {
        let mut args = vec!["train", "--config", s(&cfg), "--out", s(out), "-q"];
        args.extend_from_slice(extra);
        let o = mvat(&args);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        std::fs::read(out.join("last.ckpt")).unwrap()
    };
    let whole = run(&d.join("a"), &[]);
    run(&d.join("b"), &["--epochs", "1"]);
    let resumed = run(
        &d.join("b"),
        &["--resume", s(&d.join("b/last.ckpt")), "--epochs", "2"],
    );
    assert_eq!(whole, resumed);
    let log = std::fs::read_to_string(d.join("b/train.jsonl")).unwrap();
    assert_eq!(
        log,
        std::fs::read_to_string(d.join("a/train.jsonl")).unwrap()
    );
}

#[test]
fn seed_flag_beats_environment_beats_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_config(d, "tiny.toml", TINY);
    let run = |name: &str, env: Option<&str>, flag: Option<&str>| {
        let out = d.join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_mvat"));
        cmd.args([
            "train",
            "--config",
            s(&cfg),
            "--out",
            s(&out),
            "--epochs",
            "1",
            "-q",
        ])
        .env_remove(SEED_ENV);
        if let Some(v) = env {
            cmd.env(SEED_ENV, v);
        }
        if let Some(v) = flag {
            cmd.args(["--seed", v]);
        }
        let o = cmd.output().unwrap();
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        Checkpoint::load(&out.join("last.ckpt")).unwrap()
    };
    assert_eq!(run("file", None, None).config.train.seed, tiny().train.seed);
    let env = run("env", Some("11"), None);
    let flag = run("flag", Some("12"), Some("11"));
    assert_eq!(env.config.train.seed, 11);
    assert_eq!(env.to_bytes().unwrap(), flag.to_bytes().unwrap());

    let mut bad = Command::new(env!("CARGO_BIN_EXE_mvat"));
    let o = bad
        .args(["train", "--config", s(&cfg), "--out", s(&d.join("x"))])
        .env(SEED_ENV, "soon")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn enhance_keeps_the_input_length() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ckpt = d.join("s.ckpt");
    Trainer::new(tiny(), Role::Student)
        .unwrap()
        .checkpoint()
        .save(&ckpt)
        .unwrap();
    for len in [3001usize, 16000, 17] {
        let input = d.join(format!("in{len}.wav"));
        let samples: Vec<f32> = (0..len).map(|i| 0.3 * (i as f32 * 0.05).sin()).collect();
        write_wav(&input, &samples).unwrap();
        let output = d.join(format!("out{len}.wav"));
        let out = mvat(&[
            "enhance",
            "--ckpt",
            s(&ckpt),
            "--in",
            s(&input),
            "--out",
            s(&output),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        assert_eq!(read_wav(&output).unwrap().len(), len);
        let spec = hound::WavReader::open(&output).unwrap().spec();
        assert_eq!(
            (spec.bits_per_sample, spec.channels, spec.sample_rate),
            (16, 1, 16000)
        );
    }
}

#[test]
fn export_tams_covers_every_block_of_a_depth_four_teacher() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut cfg = tiny();
    cfg.model.teacher = Some(ModelConfig::teacher(4, 6));
    cfg.train.segment_len = 4096;
    let ckpt = d.join("t.ckpt");
    Trainer::new(cfg, Role::Teacher)
        .unwrap()
        .checkpoint()
        .save(&ckpt)
        .unwrap();
    let input = d.join("in.wav");
    write_wav(
        &input,
        &(0..4000)
            .map(|i| 0.2 * (i as f32 * 0.01).cos())
            .collect::<Vec<_>>(),
    )
    .unwrap();
    let out_dir = d.join("tams");
    let out = mvat(&[
        "export-tams",
        "--ckpt",
        s(&ckpt),
        "--in",
        s(&input),
        "--out",
        s(&out_dir),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let records = read_tams(&out_dir.join(TAM_FILE)).unwrap();
    assert_eq!(records.len(), 24);
    let mut keys: Vec<_> = records
        .iter()
        .map(|r| (r.side, r.level, r.view.as_str()))
        .collect();
    keys.sort();
    keys.dedup();
    assert_eq!(keys.len(), 24);
    for side in [Side::Encoder, Side::Decoder] {
        for level in 1..=4 {
            let lens: Vec<usize> = records
                .iter()
                .filter(|r| r.side == side && r.level == level)
                .map(|r| r.values.len())
                .collect();
            assert_eq!(lens.len(), 3);
            assert!(lens.iter().all(|&l| l == lens[0] && l > 0));
        }
    }
}
