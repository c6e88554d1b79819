//! End-to-end runs of the `rdars` binary: exit codes, config files and
//! reproducibility of the CSV output.

use std::path::Path;
use std::process::{Command, Output};

use rdars_sim::output::read_result_rows;

fn rdars(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdars")).args(args).env("RUST_LOG", "warn").output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.toml");
    std::fs::write(
        &path,
        "seed = 3\n\
         [scenario]\n\
         bs_rows = 2\nbs_cols = 4\nrdars_rows = 2\nrdars_cols = 4\nconnected = 2\nusers = 2\n\
         pilot_len = 2\ncoherence_len = 20\n\
         [optimizer]\nmax_iter = 10\n\
         [sweep]\nkind = \"l\"\ngrid = [4, 8]\nseeds = [0, 1]\nbaselines = [\"rdars-joint\", \"ris-joint\"]\n",
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn validate_passes_and_negative_control_fails() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("v.csv");
    let ok = rdars(&["validate", "--configs", "2", "--draws", "2000", "-o", csv.to_str().unwrap()]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("config,seed,l,n,a,k,term,user,other,analytic,mc_mean,std_error,z\n"));

    let bad = rdars(&["validate", "--configs", "2", "--draws", "2000", "--corrupt-gain", "2", "-o", csv.to_str().unwrap()]);
    assert_eq!(code(&bad), 2);
}

#[test]
fn usage_and_config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[scenario]\nno_such_field = 1\n").unwrap();
    assert_eq!(code(&rdars(&["-c", cfg.to_str().unwrap(), "converge"])), 1);
    assert_eq!(code(&rdars(&["-c", "/nonexistent/file.toml", "converge"])), 1);
    // grid must be strictly increasing
    assert_eq!(code(&rdars(&["sweep", "--kind", "l", "--grid", "8,4"])), 1);
    // N below the number of connected elements
    let small = small_config(dir.path());
    assert_eq!(code(&rdars(&["-c", &small, "sweep", "--kind", "n", "--grid", "1,4"])), 1);
    assert_ne!(code(&rdars(&["no-such-command"])), 0);
}

#[test]
fn sweep_output_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let run = |threads: &str, name: &str| {
        let path = dir.path().join(name);
        let out = rdars(&["-c", &cfg, "--threads", threads, "-o", path.to_str().unwrap(), "sweep"]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(path).unwrap()
    };
    let serial = run("1", "a.csv");
    assert_eq!(serial, run("1", "b.csv"));
    assert_eq!(serial, run("4", "c.csv"));

    let rows = read_result_rows(&serial[..]).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 2);
    let order: Vec<(f64, &str, u64)> = rows.iter().map(|r| (r.param, r.baseline.as_str(), r.seed)).collect();
    assert_eq!(
        order,
        vec![
            (4.0, "rdars-joint", 0),
            (4.0, "rdars-joint", 1),
            (4.0, "ris-joint", 0),
            (4.0, "ris-joint", 1),
            (8.0, "rdars-joint", 0),
            (8.0, "rdars-joint", 1),
            (8.0, "ris-joint", 0),
            (8.0, "ris-joint", 1),
        ]
    );
    assert!(rows.iter().all(|r| r.is_ok() && r.wall_time.is_none() && r.experiment == "sweep-l"));
}

#[test]
fn command_line_overrides_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = rdars(&["-c", &cfg, "sweep", "--kind", "p", "--grid", "-10,0", "--seeds", "7", "--baselines", "das-power", "--timing"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_result_rows(&out.stdout[..]).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.experiment == "sweep-p" && r.baseline == "das-power" && r.seed == 7));
    assert!(rows.iter().all(|r| r.wall_time.is_some()));
}

#[test]
fn convergence_trace_has_initial_and_final_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = rdars(&["-c", &cfg, "converge", "--baselines", "rdars-joint,rdars-fixed", "--solver", "rga", "--prelog", "pilot-ratio"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_result_rows(&out.stdout[..]).unwrap();
    for label in ["rdars-joint", "rdars-fixed"] {
        let trace: Vec<_> = rows.iter().filter(|r| r.baseline == label).collect();
        assert_eq!(trace.first().unwrap().iteration, 0);
        let last = trace.last().unwrap();
        assert_eq!(last.iteration, -1);
        assert_eq!(last.wsr, trace[trace.len() - 2].wsr);
        assert!(trace.iter().all(|r| r.seed == 3 && r.experiment == "converge"));
        // objective trace is nondecreasing
        let obj: Vec<f64> = trace.iter().map(|r| r.objective.unwrap()).collect();
        assert!(obj.windows(2).all(|w| w[1] >= w[0] - 1e-12 * w[0].abs()));
    }
}

#[test]
fn dump_writes_every_channel_entry() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = rdars(&["-c", &cfg, "dump", "--draw", "2"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("block,row,col,re,im"));
    // H: 8 x 8, h: 8 x 2, d: 8 x 2
    assert_eq!(lines.count(), 64 + 16 + 16);
    assert_eq!(text, String::from_utf8(rdars(&["-c", &cfg, "dump", "--draw", "2"]).stdout).unwrap());
}

#[test]
fn failed_runs_are_flagged_and_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("short_pilots.toml");
    // fewer pilot symbols than users: every run is rejected
    std::fs::write(&cfg, "[scenario]\nusers = 3\npilot_len = 2\n").unwrap();
    let out = rdars(&["-c", cfg.to_str().unwrap(), "converge", "--baselines", "rdars-joint,das-power"]);
    assert_eq!(code(&out), 3);
    let rows = read_result_rows(&out.stdout[..]).unwrap();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert!(r.status.starts_with("error: ") && r.wsr.is_none() && r.rates.is_empty(), "{r:?}");
    }
}
