use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn dowsim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dowsim"))
        .args(args)
        .current_dir(dir)
        .env_remove("DOWSIM_THREADS")
        .output()
        .expect("binary runs")
}

fn with_config(cmd: &str, toml: &str) -> (TempDir, Output) {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("run.toml"), toml).unwrap();
    let out = dowsim(&[cmd, "--config", "run.toml", "--out", "out"], dir.path());
    (dir, out)
}

/// Column `name` of a CSV file as floats; empty fields are skipped.
fn column(path: &Path, name: &str) -> Vec<f64> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records()
        .map(|rec| rec.unwrap()[idx].to_owned())
        .filter(|f| !f.is_empty())
        .map(|f| f.parse().unwrap())
        .collect()
}

#[test]
fn missing_config_exits_2() {
    let dir = TempDir::new().unwrap();
    let out = dowsim(&["evolve", "--config", "nope.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.toml"));
}

#[test]
fn default_localization_rows() {
    let dir = TempDir::new().unwrap();
    let out = dowsim(&["localization-table", "--out", "o"], dir.path());
    assert!(out.status.success());
    let ev = column(&dir.path().join("o/localization_table.csv"), "energy_ev");
    for (got, want) in ev.iter().zip([0.009524, 0.9524, 95.24, 9524.0]) {
        assert!((got / want - 1.0).abs() < 0.005, "{got} vs {want}");
    }
    assert_eq!(ev.len(), 4);
}

#[test]
fn custom_localization_width() {
    let (dir, out) = with_config("localization-table", "[localization_table]\nwidths_nm = [0.5]\n");
    assert!(out.status.success());
    let ev = column(&dir.path().join("out/localization_table.csv"), "energy_ev");
    assert!((ev[0] / 0.038096 - 1.0).abs() < 0.005, "{}", ev[0]);
}

#[test]
fn nonpositive_width_exits_2() {
    for w in ["0.0", "-1.0"] {
        let (_d, out) = with_config(
            "localization-table",
            &format!("[localization_table]\nwidths_nm = [1.0, {w}]\n"),
        );
        assert_eq!(out.status.code(), Some(2), "{w}");
    }
}

#[test]
fn free_evolution_csv() {
    let (dir, out) = with_config(
        "evolve",
        "[evolve]\ndt = 0.01\nsteps = 300\n\
         grid = { n = 256, x_min = -20.0, x_max = 20.0 }\n\
         packet = { center = [0.0], sigma = 1.0 }\n",
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = dir.path().join("out/width_history.csv");
    let t = column(&csv, "t");
    let dx = column(&csv, "delta_x");
    let norm = column(&csv, "norm");
    assert_eq!(t.len(), 301);
    for ((t, dx), n) in t.iter().zip(&dx).zip(&norm) {
        let want = (1.0 + (t / 2.0).powi(2)).sqrt();
        assert!((dx / want - 1.0).abs() < 0.01, "t={t}");
        assert!((n - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn heatmaps_are_pgm() {
    let (dir, out) = with_config(
        "evolve",
        "[evolve]\ndt = 0.02\nsteps = 10\nheatmap_every = 5\n\
         grid = { dim = 2, n = 32, x_min = -8.0, x_max = 8.0 }\n\
         packet = { center = [0.0, 0.0], sigma = 1.0 }\n",
    );
    assert!(out.status.success());
    for k in [0, 5, 10] {
        let bytes = fs::read(dir.path().join(format!("out/heatmap_{k:06}.pgm"))).unwrap();
        assert!(bytes.starts_with(b"P5\n32 32\n255\n"));
        assert_eq!(bytes.len(), 13 + 32 * 32);
    }
}

#[test]
fn compare_reproduces_scores() {
    let dir = TempDir::new().unwrap();
    assert!(dowsim(&["compare", "--out", "o"], dir.path()).status.success());
    let scores = column(&dir.path().join("o/scores.csv"), "score");
    assert_eq!(scores, vec![12.0, 13.0, 11.0, 18.0, 8.0, 24.0]);
}

#[test]
fn compare_reads_relative_ranks() {
    let dir = TempDir::new().unwrap();
    fs::create_dir(dir.path().join("cfg")).unwrap();
    fs::write(dir.path().join("cfg/r.csv"), "model,a\nx,2\ny,1\n").unwrap();
    fs::write(dir.path().join("cfg/run.toml"), "[compare]\nranks = \"r.csv\"\n").unwrap();
    let out = dowsim(&["compare", "--config", "cfg/run.toml", "--out", "o"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(column(&dir.path().join("o/scores.csv"), "score"), vec![1.0, 2.0]);
}

#[test]
fn bad_rank_exits_2() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("r.csv"), "model,a\nx,3\ny,1\n").unwrap();
    fs::write(dir.path().join("run.toml"), "[compare]\nranks = \"r.csv\"\n").unwrap();
    let out = dowsim(&["compare", "--config", "run.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn section_must_match_command() {
    let (_d, out) = with_config("evolve", "[compare]\n");
    assert_eq!(out.status.code(), Some(2));
    let (_d, out) = with_config("compare", "[compare]\n[entangle]\n");
    assert_eq!(out.status.code(), Some(2));
    let (_d, out) = with_config("compare", "seed = 1\n");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_toml_exits_2() {
    let (_d, out) = with_config("compare", "[compare\n");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_subcommand_exits_2() {
    let dir = TempDir::new().unwrap();
    assert_eq!(dowsim(&["levitate"], dir.path()).status.code(), Some(2));
}

#[test]
fn bad_thread_count_exits_2() {
    let dir = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_dowsim"))
        .args(["compare", "--out", "o"])
        .current_dir(dir.path())
        .env("DOWSIM_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_failure_exits_1() {
    // Too few shots reach the screen for a visibility estimate.
    let (_d, out) = with_config("double-slit", "[double_slit]\nshots = 20\n");
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn trajectory_event_log() {
    let dir = TempDir::new().unwrap();
    let out = dowsim(&["trajectory", "--out", "o", "--seed", "5"], dir.path());
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("o/events.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,energy,outcome,x,y");
    assert!(lines[1].contains(",deformed,,"));
    assert!(lines[2].contains(",collapsed,"));
    let x = column(&dir.path().join("o/events.csv"), "x");
    assert_eq!(x.len(), 1);
}

#[test]
fn json_tables_and_summary() {
    let dir = TempDir::new().unwrap();
    let out = dowsim(&["born-check", "--out", "o", "--format", "json"], dir.path());
    assert!(out.status.success());
    let table: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/born_histogram.json")).unwrap()).unwrap();
    assert_eq!(table["columns"][2], "count");
    assert_eq!(table["rows"].as_array().unwrap().len(), 64);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/summary.json")).unwrap()).unwrap();
    assert!(summary["tv_distance"].as_f64().unwrap() <= 0.01);
    assert!(dir.path().join("o/metadata.json").exists());
}

#[test]
fn seed_flag_overrides_config() {
    let toml = "seed = 1\n[born_check]\ndraws = 2000\ngrid = { n = 64, x_min = -8.0, x_max = 8.0 }\n\
                field = { kind = \"gaussian\", center = 0.0, sigma = 1.0 }\n";
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("run.toml"), toml).unwrap();
    let a = dowsim(&["born-check", "--config", "run.toml", "--out", "a"], dir.path());
    let b = dowsim(
        &["born-check", "--config", "run.toml", "--out", "b", "--seed", "1"],
        dir.path(),
    );
    let c = dowsim(
        &["born-check", "--config", "run.toml", "--out", "c", "--seed", "2"],
        dir.path(),
    );
    assert!(a.status.success() && b.status.success() && c.status.success());
    let read = |d: &str| fs::read(dir.path().join(d).join("born_histogram.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}

#[test]
fn shipped_examples_parse() {
    let examples = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples");
    for entry in fs::read_dir(examples).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        dowsim_cli::config::RunConfig::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}
