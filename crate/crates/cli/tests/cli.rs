use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use driftbench::harness::read_results;
use driftbench::streamgen::{generate_stream, read_stream_csv, DriftType, Generator, StreamSpec};

fn driftbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_driftbench"))
        .args(args)
        .env("DRIFTBENCH_WARMUP_S", "0")
        .env("DRIFTBENCH_COOLDOWN_S", "0")
        .env("DRIFTBENCH_ENERGY_PROVIDER", "proxy")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_writes_streams_that_read_back_identically() {
    let par = tempfile::tempdir().unwrap();
    let seq = tempfile::tempdir().unwrap();
    let args = ["generate", "--generators", "sine,stagger", "--drift-types", "gradual", "--seed", "5"];
    let listed = ok(driftbench(&[&args[..], &["--out-dir", s(par.path())]].concat()));
    ok(driftbench(&[&args[..], &["--out-dir", s(seq.path()), "--sequential"]].concat()));
    assert_eq!(listed.lines().count(), 2);

    let name = "sine_gradual_seed5.csv";
    let path = par.path().join(name);
    assert!(par.path().join("sine_gradual_seed5.meta.toml").exists());
    assert_eq!(
        std::fs::read(&path).unwrap(),
        std::fs::read(seq.path().join(name)).unwrap()
    );
    let back = read_stream_csv(&path).unwrap();
    let fresh = generate_stream(&StreamSpec::new(Generator::Sine, DriftType::Gradual, 5)).unwrap();
    assert_eq!(back.instances, fresh.instances);
    assert_eq!(back.spec, fresh.spec);
}

#[test]
fn run_analyze_report_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let stdout = ok(driftbench(&["run", "--preset", "smoke", "--output-dir", s(&out)]));
    assert!(stdout.contains("1 rows written"), "{stdout}");
    assert!(stdout.contains("guard trips 0"), "{stdout}");
    let results = out.join("results.csv");
    assert_eq!(read_results(&results).unwrap().len(), 1);

    // resuming a finished run writes nothing
    let again = ok(driftbench(&["run", "--preset", "smoke", "--output-dir", s(&out), "--resume"]));
    assert!(again.contains("0 rows written, 1 resumed"), "{again}");

    let tables = dir.path().join("tables");
    ok(driftbench(&["analyze", s(&results), "--out-dir", s(&tables)]));
    assert!(tables.join("alarm_accuracy.csv").exists());
    let md = ok(driftbench(&["report", s(&tables)]));
    assert!(md.starts_with("# Drift detector benchmark report"));
    assert!(md.contains("| KSWIN | abrupt | 1 | 0 | 0 | 100.0 |"), "{md}");

    let file = dir.path().join("report.md");
    ok(driftbench(&["report", s(&tables), "-o", s(&file)]));
    assert_eq!(std::fs::read_to_string(file).unwrap(), md);
}

#[test]
fn run_rejects_unknown_preset_and_bad_config() {
    let out = driftbench(&["run", "--preset", "huge"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown preset"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "repetitions = 0\n").unwrap();
    assert!(!driftbench(&["run", "--config", s(&cfg)]).status.success());
}

#[test]
fn run_accepts_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        format!(
            "detectors = [\"page_hinkley\", \"adwin\"]\ngenerators = [\"sine\"]\ndrift_types = [\"abrupt\"]\n\
             classifiers = [\"naive_bayes\"]\nrepetitions = 1\noutput_dir = \"{}\"\n",
            s(&dir.path().join("res"))
        ),
    )
    .unwrap();
    let stdout = ok(driftbench(&["run", "--config", s(&cfg)]));
    assert!(stdout.contains("2 rows written"), "{stdout}");
}

#[test]
fn detect_reports_alarm_indices_from_stdin() {
    let mut input = String::from("predicted,actual\n");
    for i in 0..3000 {
        let wrong = i >= 2000;
        input.push_str(if wrong { "1,0\n" } else { "1,1\n" });
    }
    let mut child = Command::new(env!("CARGO_BIN_EXE_driftbench"))
        .args(["detect", "--detector", "page_hinkley", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    let stdout = ok(child.wait_with_output().unwrap());
    let first: usize = stdout.lines().next().expect("an alarm").parse().unwrap();
    assert!((2000..2100).contains(&first), "{stdout}");
}

#[test]
fn detect_rejects_non_binary_values() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "predicted,actual\n1,1\n2,0\n").unwrap();
    let out = driftbench(&["detect", "--detector", "ddm", s(&path)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("not 0 or 1"));
}
