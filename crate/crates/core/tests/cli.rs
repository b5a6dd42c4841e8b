use std::fs;
use std::process::{Command, Output};

fn qromlab(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qromlab"));
    cmd.args(args).env_remove("QROMLAB_SEED").env_remove("QROMLAB_TIMINGS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn lemmas_at_one_point_emit_csv_and_pass() {
    let out = qromlab(&["lemmas", "--scheme", "lamport", "--n", "2", "--l", "1", "--seed", "7", "--format", "csv"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("lemma,scheme,n,l,w,q0,q1,measured,bound,pass,runtime_ms\n"));
    assert!(text.lines().skip(1).all(|l| l.contains(",true,")));
}

#[test]
fn bounds_prints_the_lamport_value() {
    let out = qromlab(&["bounds", "--scheme", "lamport", "--q", "1", "--l", "1", "--n", "20"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["simplified"].as_f64().unwrap() - 5.995e-3).abs() < 1e-6);
}

#[test]
fn corrupted_signature_is_rejected_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let key = dir.path().join("key.json");
    let sig = dir.path().join("sig.json");
    let (key_s, sig_s) = (key.to_str().unwrap(), sig.to_str().unwrap());
    assert_eq!(qromlab(&["keygen", "--scheme", "lamport", "--n", "16", "--l", "3", "--output", key_s], &[]).status.code(), Some(0));
    assert_eq!(qromlab(&["sign", "--key", key_s, "--message", "101", "--output", sig_s], &[]).status.code(), Some(0));
    let out = qromlab(&["verify", "--key", key_s, "--signature", sig_s], &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("\"acc\""));

    let mut file: serde_json::Value = serde_json::from_slice(&fs::read(&sig).unwrap()).unwrap();
    let first = file["sigma"][0].as_str().unwrap().to_string();
    let flipped = match first.strip_prefix('0') {
        Some(rest) => format!("1{rest}"),
        None => format!("0{}", &first[1..]),
    };
    file["sigma"][0] = serde_json::Value::String(flipped);
    fs::write(&sig, serde_json::to_vec(&file).unwrap()).unwrap();
    let out = qromlab(&["verify", "--key", key_s, "--signature", sig_s], &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("\"rej\""));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(qromlab(&["nonsense"], &[]).status.code(), Some(1));
    assert_eq!(qromlab(&["bounds", "--scheme", "lamport", "--q", "1", "--n", "20", "--unknown"], &[]).status.code(), Some(1));
    assert_eq!(qromlab(&["keygen", "--scheme", "winternitz", "--n", "8", "--l", "4"], &[]).status.code(), Some(1));
    assert_eq!(qromlab(&["game", "--scheme", "lamport", "--n", "4", "--l", "2", "--format", "csv"], &[]).status.code(), Some(1));
    assert_eq!(qromlab(&["--help"], &[]).status.code(), Some(0));
}

#[test]
fn seed_defaults_to_the_environment() {
    let args = ["game", "--scheme", "lamport", "--n", "4", "--l", "2"];
    let from_env = qromlab(&args, &[("QROMLAB_SEED", "42")]);
    let mut explicit = args.to_vec();
    explicit.extend(["--seed", "42"]);
    let from_flag = qromlab(&explicit, &[]);
    assert_eq!(from_env.stdout, from_flag.stdout);
    assert!(stdout(&from_env).contains("\"seed\": 42"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    for args in [
        vec!["qgame", "--scheme", "winternitz", "--n", "1", "--a", "1", "--w", "3", "--q0", "1", "--q1", "1", "--mode", "modified"],
        vec!["attack", "--kind", "classical", "--n", "3", "--q", "4", "--trials", "500", "--format", "csv"],
        vec!["lemmas", "--scheme", "winternitz", "--n", "1", "--a", "1", "--w", "2", "--format", "csv"],
    ] {
        let a = qromlab(&args, &[("QROMLAB_SEED", "3")]);
        let b = qromlab(&args, &[("QROMLAB_SEED", "3")]);
        assert_eq!(a.status.code(), Some(0), "{args:?}");
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}
