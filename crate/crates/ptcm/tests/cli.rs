//! End-to-end tests of the compiled binary: subcommands, output formats,
//! and exit codes.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ptcm"))
}

fn config_path(name: &str) -> String {
    format!("{}/configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn temp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("ptcm-cli-{}-{name}", std::process::id()));
    p
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// A small sweep used by the simulate tests: one harsh point with a low
/// error target so runs finish in well under a second.
const SMALL_CONFIG: &str = r#"{
  "code": {"k0": 1, "n0": 2, "generators_octal": ["7", "5"]},
  "puncture": {"period": 3, "mask": [[1, 1, 0], [0, 1, 1]]},
  "constellation": "pam4",
  "channel": {"taps": [1.0, 1.0], "auto_normalize": true},
  "decoders": [{"type": "mlse"}, {"type": "rsse", "depths": [0]}],
  "sweep": {"ebn0_db": [6]},
  "stop": {"min_bit_errors": 40, "max_info_bits": 20000},
  "block_info_bits": 400
}"#;

#[test]
fn simulate_writes_reproducible_csv() {
    let cfg = temp_path("small.json");
    std::fs::write(&cfg, SMALL_CONFIG).unwrap();
    let out1 = temp_path("run1.csv");
    let out2 = temp_path("run2.csv");

    let run = |out_path: &PathBuf, threads: &str| {
        let out = bin()
            .args(["simulate", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out_path)
            .args(["--seed", "11", "--no-timing"])
            .env("PTCM_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    };
    run(&out1, "1");
    run(&out2, "4");

    let csv1 = std::fs::read_to_string(&out1).unwrap();
    let csv2 = std::fs::read_to_string(&out2).unwrap();
    assert_eq!(csv1, csv2, "worker count changed the CSV");
    assert!(csv1.starts_with(
        "decoder,ebn0_db,info_bits,bit_errors,ber,symbol_errors,ser,blocks,metrics_evaluated,wall_seconds\n"
    ));
    assert_eq!(csv1.lines().count(), 3, "one header plus one row per (decoder, point)");
    for row in csv1.lines().skip(1) {
        assert_eq!(row.split(',').count(), 10, "row: {row}");
        assert!(row.ends_with(",0.000000"), "timing column must be zeroed: {row}");
    }

    // A different seed changes the numbers (the CSV is a function of the
    // config and seed, not of hidden global state).
    let out3 = temp_path("run3.csv");
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out3)
        .args(["--seed", "12", "--no-timing"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv3 = std::fs::read_to_string(&out3).unwrap();
    assert_ne!(csv1, csv3, "seed override had no effect");

    for p in [cfg, out1, out2, out3] {
        let _ = std::fs::remove_file(p);
    }
}

#[test]
fn distance_prints_the_benchmark_gain() {
    let out = bin()
        .args(["distance", "--config", &config_path("psk8_tcm4.json")])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("d2_free=4.0"), "stdout: {text}");
    assert!(text.contains("3.01 dB"), "stdout: {text}");
}

#[test]
fn trellis_dump_lists_every_branch_with_phase_counts() {
    let out = bin()
        .args([
            "trellis-dump",
            "--config",
            &config_path("pam4_r15_2tap.json"),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(
        text.contains("# phase 0: 4 states, 4 branches/state"),
        "stdout: {text}"
    );
    assert!(
        text.contains("# phase 1: 8 states, 2 branches/state"),
        "stdout: {text}"
    );
    // 16 + 16 branch lines plus the two phase headers.
    assert_eq!(text.lines().count(), 34);
    // Branch line shape: phase from_state in_bits label to_state.
    let branch = text.lines().nth(1).unwrap();
    let fields: Vec<&str> = branch.split(' ').collect();
    assert_eq!(fields.len(), 5, "line: {branch}");
    assert_eq!(fields[0], "0");
    assert!(fields[1].contains(':'), "state rendering: {branch}");
}

#[test]
fn trellis_dump_joint_and_partition_variants() {
    let joint = bin()
        .args([
            "trellis-dump",
            "--config",
            &config_path("pam4_r15_2tap.json"),
            "--joint",
            "--decoder",
            "mlse",
        ])
        .output()
        .unwrap();
    assert!(joint.status.success(), "stderr: {}", stderr_of(&joint));
    let text = stdout_of(&joint);
    assert!(
        text.contains("# metrics/period: 128"),
        "full-depth joint trellis of the R=1.5 system: {text}"
    );
    assert!(text.contains('|'), "joint states carry a history part");

    let partition = bin()
        .args([
            "trellis-dump",
            "--config",
            &config_path("pam4_r15_2tap.json"),
            "--partition",
        ])
        .output()
        .unwrap();
    assert!(partition.status.success());
    let text = stdout_of(&partition);
    assert!(text.contains("dmin="), "partition tree text: {text}");

    let missing = bin()
        .args([
            "trellis-dump",
            "--config",
            &config_path("pam4_r15_2tap.json"),
            "--joint",
            "--decoder",
            "nope",
        ])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn encode_prints_one_line_per_symbol() {
    let out = bin()
        .args([
            "encode",
            "--config",
            &config_path("pam4_r15_2tap.json"),
            "--bits",
            "ff",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "# t label re im");
    // 8 payload bits -> 12 encoder steps after tail and padding -> 8 data
    // symbols, plus 1 channel flush symbol.
    assert_eq!(lines.count(), 9);
}

#[test]
fn malformed_json_exits_2_and_names_the_byte_offset() {
    let cfg = temp_path("broken.json");
    std::fs::write(&cfg, "{\n  \"code\": nope\n}").unwrap();
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .args(["--out", "/dev/null"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(err.contains("byte offset"), "stderr: {err}");
    let _ = std::fs::remove_file(cfg);
}

#[test]
fn state_budget_overflow_exits_3() {
    let cfg = temp_path("capacity.json");
    std::fs::write(
        &cfg,
        SMALL_CONFIG.replace("\"block_info_bits\": 400", "\"block_info_bits\": 400, \"max_joint_states\": 4"),
    )
    .unwrap();
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .args(["--out", "/dev/null"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr_of(&out));
    let _ = std::fs::remove_file(cfg);
}

#[test]
fn usage_errors_exit_2_and_help_exits_0() {
    let out = bin().args(["simulate", "--bogus-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["--help"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout_of(&out).contains("simulate"));
}
