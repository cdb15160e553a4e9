use std::path::Path;

use smoothopt::commands::{run_dir, CONFIG_ECHO, LANDSCAPE_FILE, LOAD_DISPLACEMENT_FILE, SUMMARY_FILE};
use smoothopt::format::parse_records;
use smoothopt::{RawConfig, RunConfig};
use smoothopt_core::RecordTag;

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Output {
    let mut full = vec!["smoothopt"];
    full.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = smoothopt::cli::run(full, &mut out, &mut err);
    Output { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn path(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn read_csv(p: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(p).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|row| row.unwrap().iter().map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn invalid_configuration_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path());
    let bad_gamma = run(&["optimize", "--set", "optimizer.gamma_osc=1.5", "--out", &out]);
    assert_eq!(bad_gamma.code, 2);
    assert!(bad_gamma.stderr.contains("gamma_osc"), "{}", bad_gamma.stderr);

    let unknown = run(&["optimize", "--set", "optimizer.gama_pan=1.1", "--out", &out]);
    assert_eq!(unknown.code, 2);
    assert!(unknown.stderr.contains("gama_pan"));

    let malformed = run(&["simulate", "--objective", "cohesive_chain", "--design", "1.0,abc", "--out", &out]);
    assert_eq!(malformed.code, 2);
    let short = run(&["simulate", "--objective", "cohesive_chain", "--design", "1.0", "--out", &out]);
    assert_eq!(short.code, 2);
    assert_eq!(run(&["frobnicate"]).code, 2);
}

#[test]
fn evaluation_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let failed = run(&[
        "optimize",
        "--objective",
        "external",
        "--set",
        "objective.command=false",
        "--set",
        "optimizer.k_max=2",
        "--out",
        &path(dir.path()),
    ]);
    assert_eq!(failed.code, 3, "{}", failed.stderr);
}

#[test]
fn unwritable_output_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("occupied");
    std::fs::write(&file, "x").unwrap();
    let blocked = run(&["optimize", "--set", "optimizer.k_max=1", "--out", &path(&file.join("sub"))]);
    assert_eq!(blocked.code, 1, "{}", blocked.stderr);
}

#[test]
fn simulate_is_deterministic_and_writes_history() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path());
    let args = ["simulate", "--objective", "cohesive_chain", "--design", "1.2,0.7", "--out", &out];
    let first = run(&args);
    assert_eq!(first.code, 0, "{}", first.stderr);
    let csv_first = std::fs::read(dir.path().join(LOAD_DISPLACEMENT_FILE)).unwrap();
    let second = run(&args);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(csv_first, std::fs::read(dir.path().join(LOAD_DISPLACEMENT_FILE)).unwrap());

    let w: f64 = first.stdout.trim().parse().unwrap();
    assert!(w < 0.0);
    let (header, rows) = read_csv(&dir.path().join(LOAD_DISPLACEMENT_FILE));
    assert_eq!(header, ["step", "t", "displacement", "force"]);
    assert_eq!(rows.len(), 101);
    let trapezoid: f64 = rows.windows(2).map(|p| -0.5 * (p[0][3] + p[1][3]) * (p[1][2] - p[0][2])).sum();
    assert!((trapezoid - w).abs() <= 1e-12 * w.abs());
}

#[test]
fn rigid_interface_stores_no_energy_beyond_the_bending() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(&[
        "simulate",
        "--objective",
        "cohesive_chain",
        "--set",
        "objective.rigid_interface=true",
        "--design",
        "1,1",
        "--out",
        &path(dir.path()),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let w: f64 = r.stdout.trim().parse().unwrap();
    let (_, rows) = read_csv(&dir.path().join(LOAD_DISPLACEMENT_FILE));
    let kappa = rows[1][3] / rows[1][2];
    for row in &rows[1..] {
        assert!((row[3] - kappa * row[2]).abs() <= 1e-12 * row[3].abs());
    }
    let u_t = rows.last().unwrap()[2];
    let exact = -0.5 * kappa * u_t * u_t;
    assert!((w - exact).abs() <= 1e-12 * exact.abs(), "{w} vs {exact}");
}

#[test]
fn landscape_smooths_the_herbie_step() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(&[
        "landscape",
        "--objective",
        "herbie_step",
        "--grid",
        "401",
        "--sigmas",
        "0,0.1,0.2",
        "--out",
        &path(dir.path()),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let (header, rows) = read_csv(&dir.path().join(LANDSCAPE_FILE));
    assert_eq!(header, ["x0", "f", "smoothed_sigma_0", "smoothed_sigma_0.1", "smoothed_sigma_0.2"]);
    assert_eq!(rows.len(), 401);
    assert!(rows.iter().all(|row| row[2].to_bits() == row[1].to_bits()));
    let raw_jump = rows.windows(2).map(|w| (w[1][1] - w[0][1]).abs()).fold(0.0, f64::max);
    let smooth_jump = rows.windows(2).map(|w| (w[1][4] - w[0][4]).abs()).fold(0.0, f64::max);
    assert!(raw_jump >= 0.5);
    assert!(smooth_jump <= 0.05, "largest smoothed jump {smooth_jump}");
}

#[test]
fn landscape_rejects_bad_requests() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path());
    assert_eq!(run(&["landscape", "--axes", "3", "--out", &out]).code, 2);
    assert_eq!(run(&["landscape", "--sigmas", "-1", "--out", &out]).code, 2);
    assert_eq!(run(&["landscape", "--grid", "1", "--out", &out]).code, 2);
}

fn herbie_args<'a>(out: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut args = vec!["optimize", "--objective", "herbie_step", "--set", "optimizer.k_max=12", "--out", out];
    args.extend_from_slice(extra);
    args
}

fn run_files(dir: &Path) -> (Vec<u8>, Vec<u8>) {
    (std::fs::read(dir.join("trace.jsonl")).unwrap(), std::fs::read(dir.join("dataset.jsonl")).unwrap())
}

#[test]
fn resumed_run_matches_uninterrupted_run() {
    let full = tempfile::tempdir().unwrap();
    assert_eq!(run(&herbie_args(&path(full.path()), &[])).code, 0);
    let reference = run_files(&run_dir(full.path(), 0));

    let trace = String::from_utf8(reference.0.clone()).unwrap();
    let dataset = String::from_utf8(reference.1.clone()).unwrap();
    // crash points: during the start design, after it, mid-iteration
    for (traced, extra_records) in [(0usize, 1usize), (0, 3), (5, 2), (11, 0)] {
        let broken = tempfile::tempdir().unwrap();
        let dir = run_dir(broken.path(), 0);
        std::fs::create_dir_all(&dir).unwrap();
        let kept_records = if traced == 0 { extra_records } else { 3 + 3 * traced + extra_records };
        let lines = |text: &str, n: usize| text.lines().take(n).map(|l| format!("{l}\n")).collect::<String>();
        std::fs::write(dir.join("trace.jsonl"), lines(&trace, traced)).unwrap();
        std::fs::write(dir.join("dataset.jsonl"), lines(&dataset, kept_records)).unwrap();

        let resumed = run(&herbie_args(&path(broken.path()), &["--resume"]));
        assert_eq!(resumed.code, 0, "{}", resumed.stderr);
        assert_eq!(run_files(&dir), reference, "crash after {traced} iterations");
        assert_eq!(
            std::fs::read(broken.path().join(SUMMARY_FILE)).unwrap(),
            std::fs::read(full.path().join(SUMMARY_FILE)).unwrap()
        );
    }
}

#[test]
fn resume_rejects_a_foreign_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let run_path = run_dir(dir.path(), 0);
    std::fs::create_dir_all(&run_path).unwrap();
    std::fs::write(run_path.join("dataset.jsonl"), "{\"site\":[1.0],\"value\":1.0,\"iteration\":0,\"tag\":\"doe\"}\n".repeat(9))
        .unwrap();
    let r = run(&herbie_args(&path(dir.path()), &["--resume"]));
    assert_eq!(r.code, 1, "{}", r.stderr);
}

#[test]
fn penalty_policy_records_failures() {
    use std::os::unix::fs::PermissionsExt;
    let dir = tempfile::tempdir().unwrap();
    // succeeds for negative designs only
    let script = dir.path().join("objective.sh");
    std::fs::write(&script, "#!/bin/sh\nread x\ncase $x in -*) echo 1 ;; *) exit 1 ;; esac\n").unwrap();
    std::fs::set_permissions(&script, std::fs::Permissions::from_mode(0o755)).unwrap();
    let command = format!("objective.command={}", path(&script));
    let r = run(&[
        "optimize",
        "--objective",
        "external",
        "--set",
        &command,
        "--set",
        "objective.failure_policy=penalty",
        "--set",
        "objective.penalty_value=5",
        "--set",
        "optimizer.k_max=4",
        "--out",
        &path(&dir.path().join("out")),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let text = std::fs::read_to_string(run_dir(&dir.path().join("out"), 0).join("dataset.jsonl")).unwrap();
    let records = parse_records(&text).unwrap();
    assert_eq!(records.len(), 3 + 4 * 3);
    assert!(text.contains("\"tag\":\"external-failure\""));
    for r in &records {
        match r.tag {
            RecordTag::Failure => assert_eq!(r.value, 5.0),
            _ => assert_eq!(r.value, 1.0),
        }
    }
}

#[test]
fn config_echo_reproduces_the_run() {
    let first = tempfile::tempdir().unwrap();
    let r = run(&herbie_args(&path(first.path()), &["--set", "optimizer.eta=0.9", "--seed", "17", "--runs", "2"]));
    assert_eq!(r.code, 0, "{}", r.stderr);
    let echo = first.path().join(CONFIG_ECHO);

    let second = tempfile::tempdir().unwrap();
    let again = run(&["optimize", "--config", &path(&echo), "--out", &path(second.path())]);
    assert_eq!(again.code, 0, "{}", again.stderr);
    for run_index in 0..2 {
        assert_eq!(run_files(&run_dir(first.path(), run_index)), run_files(&run_dir(second.path(), run_index)));
    }

    let mut reloaded = RunConfig::from_raw(&RawConfig::load(&echo).unwrap()).unwrap();
    assert_eq!(reloaded.optimizer.move_limit.eta, 0.9);
    assert_eq!(reloaded.execution.seed, 17);
    reloaded.execution.out = second.path().to_path_buf();
    let second_echo = RunConfig::from_raw(&RawConfig::load(&second.path().join(CONFIG_ECHO)).unwrap()).unwrap();
    assert_eq!(reloaded, second_echo);
}

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for (name, kind, dim) in [("herbie.ini", "herbie_step", 1), ("chain.ini", "cohesive_chain", 6)] {
        let c = RunConfig::from_raw(&RawConfig::load(&dir.join(name)).unwrap()).unwrap();
        assert_eq!(c.objective.kind.name(), kind);
        assert_eq!(c.dim(), dim);
        assert_eq!(c.execution.runs, 20);
    }
}
