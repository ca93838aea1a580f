use std::path::Path;
use std::process::{Command, Output};

fn predgame(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_predgame"));
    cmd.args(args).env_remove("PREDGAME_OUT");
    if let Some(p) = env_out {
        cmd.env("PREDGAME_OUT", p);
    }
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn smoke_train(out: &Path, extra: &[&str]) -> Output {
    let o = out.to_str().unwrap();
    let mut args = vec!["train", "--preset", "smoke", "-q", "--out", o, "--set", "scenario.n_seeds=1"];
    args.extend_from_slice(extra);
    predgame(&args, None)
}

#[test]
fn malformed_config_reports_location_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[ppo]\nlearning_rate = \n").unwrap();
    let o = predgame(&["train", "--config", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(code(&o), 2, "{}", text(&o.stderr));
    assert!(text(&o.stderr).contains("line"), "{}", text(&o.stderr));

    std::fs::write(&bad, "[ppo]\nlearning_rat = 1e-3\n").unwrap();
    let o = predgame(&["config", "--config", bad.to_str().unwrap()], None);
    assert_eq!(code(&o), 2);
    assert!(text(&o.stderr).contains("learning_rat"));

    let o = predgame(&["config", "--preset", "smoke", "--set", "ppo.clip_eps=-1"], None);
    assert_eq!(code(&o), 2);
    let o = predgame(&["config", "--preset", "nope"], None);
    assert_eq!(code(&o), 2);
}

#[test]
fn unsupported_and_missing_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = smoke_train(dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let run = dir.path().join("runs/homogeneous/ff/0");
    let o = predgame(&["diagnose", run.to_str().unwrap(), "--pairing", "hidden-action"], None);
    assert_eq!(code(&o), 3, "{}", text(&o.stderr));

    let o = predgame(&["diagnose", dir.path().join("runs/homogeneous/ff/7").to_str().unwrap()], None);
    assert_eq!(code(&o), 4, "{}", text(&o.stderr));
    let empty = tempfile::tempdir().unwrap();
    assert_eq!(code(&predgame(&["report", empty.path().to_str().unwrap()], None)), 4);
    let o = smoke_train(empty.path(), &["--set", "scenario.kind=zero_shot_swap", "--set", "scenario.blind=true"]);
    assert_eq!(code(&o), 4, "{}", text(&o.stderr));

    let o = predgame(&["diagnose", run.to_str().unwrap(), "--units", "nats"], None);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    assert!(text(&o.stdout).contains("obs_action"));
    let o = predgame(&["eval", run.to_str().unwrap(), "--episodes", "20", "--greedy"], None);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    assert!(text(&o.stdout).contains("over 20 episodes"));
}

#[test]
fn selftest_subset_and_fault_injection() {
    let o = predgame(&["selftest", "--only", "digamma", "--only", "gae"], None);
    assert_eq!(code(&o), 0, "{}", text(&o.stdout));
    assert!(text(&o.stdout).contains("all 2 checks passed"));

    let o = predgame(&["selftest", "--only", "digamma", "--inject-fault", "digamma"], None);
    assert_eq!(code(&o), 1);
    let out = text(&o.stdout);
    assert!(out.contains("FAIL digamma") && out.contains("failed checks: digamma"), "{out}");

    assert_eq!(code(&predgame(&["selftest", "--only", "nonexistent"], None)), 2);
    let listed = text(&predgame(&["selftest", "--list"], None).stdout);
    assert!(listed.lines().any(|l| l == "gradient_rnn"));
}

#[test]
fn overrides_are_frozen_into_the_run_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = smoke_train(dir.path(), &["--set", "ppo.entropy_coef=0.02", "--set", "run.master_seed=3"]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let frozen = std::fs::read_to_string(dir.path().join("runs/homogeneous/ff/3/config.toml")).unwrap();
    assert!(frozen.contains("entropy_coef = 0.02"), "{frozen}");
}

#[test]
fn output_root_comes_from_environment_when_no_flag() {
    let dir = tempfile::tempdir().unwrap();
    let o = predgame(&["train", "--preset", "smoke", "-q", "--set", "scenario.n_seeds=1"], Some(dir.path()));
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    assert!(dir.path().join("runs/homogeneous/ff/0/results.csv").exists());
    let o = predgame(&["report"], Some(dir.path()));
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    assert!(dir.path().join("summary.csv").exists());
}

#[test]
fn repeated_training_is_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert_eq!(code(&smoke_train(d.path(), &[])), 0);
    }
    for f in ["metrics.csv", "results.csv", "checkpoints/agent_0.ckpt", "trajectories.csv"] {
        let read = |d: &Path| std::fs::read(d.join("runs/homogeneous/ff/0").join(f)).unwrap();
        assert_eq!(read(a.path()), read(b.path()), "{f} differs");
    }
}
