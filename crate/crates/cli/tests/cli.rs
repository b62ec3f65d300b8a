use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn palmlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_palmlab"))
        .args(args)
        .current_dir(dir)
        .env_remove("PALMLAB_SEED")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// `(label, value, std_error)` rows of an estimate CSV.
fn estimates(csv: &str) -> Vec<(String, f64, f64)> {
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("label,value,std_error,reps,rejected,ess")
    );
    lines
        .map(|l| {
            let (label, rest) = if let Some(stripped) = l.strip_prefix('"') {
                let end = stripped.find('"').unwrap();
                (stripped[..end].to_string(), &stripped[end + 2..])
            } else {
                let comma = l.find(',').unwrap();
                (l[..comma].to_string(), &l[comma + 1..])
            };
            let f: Vec<f64> = rest.split(',').map(|s| s.parse().unwrap()).collect();
            (label, f[0], f[1])
        })
        .collect()
}

#[test]
fn simulate_two_poisson_patterns_reproducibly() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "[simulate]\nmodel = \"poisson_ts\"\nrate = 1.0\n",
    );
    let run = |out: &str| {
        let o = palmlab(
            dir.path(),
            &[
                "simulate", "--config", &cfg, "--seed", "7", "--reps", "2", "--out", out,
            ],
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        read(&dir.path().join(out), "patterns.txt")
    };
    let first = run("a");
    assert_eq!(first, run("b"));
    let lines: Vec<&str> = first.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "# window -20 20");
    for line in &lines[1..] {
        let t: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert!(t.windows(2).all(|w| w[0] < w[1]));
        assert!(t.iter().any(|&x| x <= 0.0) && t.iter().any(|&x| x > 0.0));
    }
    assert_ne!(lines[1], lines[2]);
}

#[test]
fn simulate_lattice_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "[simulate]\nmodel = \"example44\"\npattern_len = 100\nhi = 200\n",
    );
    let a = palmlab(
        dir.path(),
        &["simulate", "--config", &cfg, "--out", "a", "--seed", "1"],
    );
    let b = palmlab(
        dir.path(),
        &["simulate", "--config", &cfg, "--out", "b", "--seed", "2"],
    );
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(code(&b), 0);
    let text = read(&dir.path().join("a"), "patterns.txt");
    assert_eq!(text, read(&dir.path().join("b"), "patterns.txt"));
    // T_0 = 0, T_1 = 1, then gaps 1 for the first block of ones.
    let line = text.lines().nth(1).unwrap();
    assert!(line.contains(",0,1,2,3,4,5,7,"), "{line}");
}

#[test]
fn invalid_model_name_is_a_config_error_naming_the_field() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "[simulate]\nmodel = \"poison_ts\"\nrate = 1.0\n",
    );
    let o = palmlab(dir.path(), &["simulate", "--config", &cfg]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(
        err.contains("[simulate]") && err.contains("`model`") && err.contains("poison_ts"),
        "{err}"
    );

    let cfg = write_config(
        dir.path(),
        "[palm]\nmodel = \"poisson_ts\"\nrate = -1.0\nevents = [\"alpha(0)>1\"]\n",
    );
    let o = palmlab(dir.path(), &["palm", "--config", &cfg]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("`rate`"), "{}", stderr(&o));

    let cfg = write_config(
        dir.path(),
        "[palm]\nmodel = \"poisson_ts\"\nrate = 1.0\nevents = [\"alpha(0)>\"]\n",
    );
    let o = palmlab(dir.path(), &["palm", "--config", &cfg]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("`events`"), "{}", stderr(&o));
}

#[test]
fn palm_poisson_matches_exponential_gap_law() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "[palm]\nmodel = \"poisson_ts\"\nrate = 1.0\nevents = [\"alpha(0)>1\", \"count(0,1]==0\"]\n",
    );
    let o = palmlab(dir.path(), &["palm", "--config", &cfg, "--seed", "3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = estimates(&read(dir.path(), "palm.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1].0, "count(0,1]==0");
    for (label, value, _) in &rows {
        assert!((0.35..=0.39).contains(value), "{label}: {value}");
    }
}

#[test]
fn palm_without_eventualities_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "[palm]\nmodel = \"poisson_ts\"\nrate = 1.0\nevents = []\n",
    );
    let o = palmlab(dir.path(), &["palm", "--config", &cfg]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("usage error"), "{}", stderr(&o));
    assert!(!dir.path().join("palm.csv").exists());
}

#[test]
fn palm_profiles_have_bin_columns() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "[palm]\nmodel = \"poisson_ts\"\nrate = 1.0\nestimator = \"shifted_palm\"\nbin_lo = -2.0\nbin_hi = 2.0\nbins = 4\nevents = [\"alpha(0)>1\"]\n",
    );
    let o = palmlab(dir.path(), &["palm", "--config", &cfg, "--reps", "5000"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = read(dir.path(), "palm.csv");
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "bin_lo,bin_hi,label,value,std_error,reps,rejected,ess"
    );
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("-2,-1,alpha(0)>1,"));
}

#[test]
fn palm_from_pattern_file() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "[simulate]\nmodel = \"poisson_ts\"\nrate = 1.0\nreps = 2000\n\n[palm]\npatterns = \"sim/patterns.txt\"\nx = 10.0\nevents = [\"alpha(0)>1\"]\n",
    );
    let o = palmlab(dir.path(), &["simulate", "--config", &cfg, "--out", "sim"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = palmlab(dir.path(), &["palm", "--config", &cfg]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = estimates(&read(dir.path(), "palm.csv"));
    let (_, value, se) = rows[0];
    let exact = (-1.0f64).exp();
    assert!((value - exact).abs() <= 4.0 * se + 0.002, "{value} ± {se}");
}

fn verdict(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&read(dir, "verdict.json")).unwrap()
}

#[test]
fn ams_verdicts() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "[ams]\nmodel = \"poisson_ts\"\nrate = 1.0\nevent = \"alpha(0)>1\"\nreps = 2000\n",
    );
    let o = palmlab(dir.path(), &["ams", "--config", &cfg, "--out", "poisson"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = verdict(&dir.path().join("poisson"));
    assert_eq!(v["status"], "Convergent");
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(
        keys,
        [
            "eventuality",
            "mode",
            "model",
            "oscillation",
            "status",
            "tail_fraction",
            "threshold"
        ]
    );
    assert!(v["oscillation"].as_f64().unwrap() <= v["threshold"].as_f64().unwrap());
    let trace = read(&dir.path().join("poisson"), "trace.csv");
    assert_eq!(trace.lines().next(), Some("checkpoint,value,std_error"));

    let cfg = write_config(
        dir.path(),
        "[ams]\nmodel = \"example44\"\npattern_len = 216\nn_max = 216\n",
    );
    let o = palmlab(dir.path(), &["ams", "--config", &cfg, "--out", "lattice"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = verdict(&dir.path().join("lattice"));
    assert_eq!(v["status"], "NotConvergent");
    assert!(v["oscillation"].as_f64().unwrap() >= 0.2);

    let cfg = write_config(
        dir.path(),
        "[ams]\nmodel = \"poisson_ts\"\nrate = 1.0\nevent = \"alpha(0)>1\"\nn_max = 16\nreps = 500\n",
    );
    let o = palmlab(dir.path(), &["ams", "--config", &cfg, "--out", "tiny"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = verdict(&dir.path().join("tiny"));
    assert_eq!(v["status"], "Inconclusive");
    assert!(v["oscillation"].is_null());
}

#[test]
fn example44_exact_tables() {
    let dir = TempDir::new().unwrap();
    let o = palmlab(dir.path(), &["example44"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let seq = read(dir.path(), "sequence.csv");
    let rows: Vec<&str> = seq.lines().skip(1).collect();
    assert_eq!(
        &rows[..6],
        ["1,4,4", "2,4,8", "3,8,16", "4,8,24", "5,24,48", "6,24,72"]
    );
    let cesaro = read(dir.path(), "cesaro.csv");
    let m: Vec<&str> = cesaro
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap())
        .collect();
    assert_eq!(&m[1..5], ["1/2", "3/4", "1/2", "3/4"]);
    assert_eq!(verdict(dir.path())["status"], "NotConvergent");
}

#[test]
fn suite_only_filter_keeps_one_identity() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "[[suite.models]]\nmodel = \"poisson_ts\"\nrate = 1.0\n",
    );
    let o = palmlab(
        dir.path(),
        &[
            "suite", "--config", &cfg, "--only", "I-2.7a", "--reps", "20000",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = read(dir.path(), "suite.csv");
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("id,model,eventuality,lhs,lhs_se,rhs,rhs_se,z,verdict")
    );
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty());
    for row in rows {
        assert!(row.starts_with("I-2.7a,poisson_ts(rate=1),"), "{row}");
        assert!(row.ends_with(",pass"), "{row}");
    }

    let o = palmlab(dir.path(), &["suite", "--only", "I-9.9"]);
    assert_eq!(code(&o), 2);
    let o = palmlab(dir.path(), &["palm", "--only", "I-2.7a"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn suite_below_noise_floor_warns_and_fails() {
    let dir = TempDir::new().unwrap();
    let o = palmlab(dir.path(), &["suite", "--reps", "100"]);
    assert_eq!(code(&o), 1);
    assert!(
        stderr(&o).contains("below the noise floor"),
        "{}",
        stderr(&o)
    );
    let csv = read(dir.path(), "suite.csv");
    assert!(csv.lines().any(|l| l.ends_with(",fail")));
}

#[test]
fn seed_precedence() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "seed = 5\n[simulate]\nmodel = \"poisson_ts\"\nrate = 1.0\n",
    );
    let run = |out: &str, env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_palmlab"));
        cmd.current_dir(dir.path()).env_remove("PALMLAB_SEED");
        cmd.args(["simulate", "--config", &cfg, "--out", out]);
        if let Some(v) = env {
            cmd.env("PALMLAB_SEED", v);
        }
        if let Some(s) = flag {
            cmd.args(["--seed", s]);
        }
        let o = cmd.output().unwrap();
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        read(&dir.path().join(out), "patterns.txt")
    };
    let config_only = run("c", None, None);
    let flag5 = run("f5", None, Some("5"));
    let env9 = run("e9", Some("9"), None);
    let flag9 = run("f9", None, Some("9"));
    let env9_flag5 = run("e9f5", Some("9"), Some("5"));
    assert_eq!(config_only, flag5);
    assert_eq!(env9, flag9);
    assert_ne!(env9, config_only);
    assert_eq!(env9_flag5, flag5);

    let mut cmd = Command::new(env!("CARGO_BIN_EXE_palmlab"));
    let o = cmd
        .current_dir(dir.path())
        .env("PALMLAB_SEED", "seven")
        .args(["simulate", "--config", &cfg])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "seed = 11\nreps = 3000\n\n[palm]\nmodel = \"tilted_ts\"\nbase = \"poisson_ts\"\nrate = 1.0\ntilt = \"scaled_alpha0\"\nc = 0.5\nestimator = \"shifted_palm\"\nbins = 4\nevents = [\"alpha(0)>1\", \"alpha(-1)>0.5 | count(0,1]==0\"]\n\n[[suite.models]]\nmodel = \"renewal_ts_from_es\"\ninterval = \"gamma\"\nshape = 2.0\ninterval_rate = 1.0\n",
    );
    for cmd in ["palm", "suite", "example84"] {
        let mut outputs = Vec::new();
        for threads in ["1", "8"] {
            let out = format!("{cmd}-{threads}");
            let mut args = vec![cmd, "--config", &cfg, "--threads", threads, "--out", &out];
            if cmd == "suite" {
                args.extend(["--only", "I-2.4"]);
            }
            let o = palmlab(dir.path(), &args);
            assert!(code(&o) <= 1, "{cmd}: {}", stderr(&o));
            let file = match cmd {
                "palm" => "palm.csv",
                "suite" => "suite.csv",
                _ => "example84.csv",
            };
            outputs.push(fs::read(dir.path().join(&out).join(file)).unwrap());
        }
        assert_eq!(outputs[0], outputs[1], "{cmd}");
    }
}
