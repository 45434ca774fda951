use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn landau(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_landau"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run_with(dir: &Path, cmd: &str, config: &str, out: &str, extra: &[&str]) -> (Output, PathBuf) {
    let cfg = write_config(dir, &format!("{out}.toml"), config);
    let out_dir = dir.join(out);
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    (landau(&args), out_dir)
}

fn record(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("run.json")).unwrap()).unwrap()
}

fn data_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(2)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn files(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

const FAST_PENROSE: &str = "[penrose]\nmap_modes = []\nk_max = 4\n";

#[test]
fn degenerate_coupling_gives_unit_margin() {
    let t = tempfile::tempdir().unwrap();
    let cfg = "[params]\nc_m = 0.0\n[penrose]\nmodels = [\"linear_boltzmann\", \"fokker_planck\"]\nmap_modes = []\n";
    let (o, out) = run_with(t.path(), "penrose", cfg, "deg", &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&out.join("penrose/margins.csv"));
    assert_eq!(rows.len(), 8);
    for r in rows {
        assert_eq!(r[2].parse::<f64>().unwrap(), 1.0);
    }
    // Vanishing coupling without collisions.
    let cfg = "[params]\ne0 = 1e-12\n[penrose]\nepsilons = [0.0]\nmap_modes = []\n";
    let (o, out) = run_with(t.path(), "penrose", cfg, "weak", &[]);
    assert_eq!(code(&o), 0);
    let m: f64 = data_rows(&out.join("penrose/margins.csv"))[0][2].parse().unwrap();
    assert!((m - 1.0).abs() < 1e-9, "{m}");
}

#[test]
fn margin_table_is_monotone_in_epsilon() {
    let t = tempfile::tempdir().unwrap();
    let cfg = "[penrose]\nmodels = [\"linear_boltzmann\", \"fokker_planck\"]\nmap_modes = []\n";
    let (o, out) = run_with(t.path(), "penrose", cfg, "mono", &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&out.join("penrose/margins.csv"));
    for model in ["linear_boltzmann", "fokker_planck"] {
        let m: Vec<f64> = rows.iter().filter(|r| r[0] == model).map(|r| r[2].parse().unwrap()).collect();
        assert_eq!(m.len(), 4);
        let up = m.windows(2).all(|w| w[1] >= w[0]);
        let down = m.windows(2).all(|w| w[1] <= w[0]);
        assert!(up || down, "{model}: {m:?}");
        assert!(m.iter().all(|&x| x >= 0.05));
    }
    let rec = record(&out);
    assert_eq!(rec["summary"]["epsilon0_fokker_planck"], 0.1);
    assert_eq!(rec["passed"], true);
}

#[test]
fn malformed_config_is_rejected_before_any_output() {
    let t = tempfile::tempdir().unwrap();
    for (i, body) in ["[params]\nepsilom = 0.1\n", "[params]\nepsilon = -0.1\n", "seed = \"x\"\n", "[time]\ndt = 0.0\n"]
        .iter()
        .enumerate()
    {
        let (o, out) = run_with(t.path(), "evolve", body, &format!("bad{i}"), &[]);
        assert_eq!(code(&o), 2, "{body}");
        assert!(!out.exists());
    }
    let missing = t.path().join("nope.toml");
    let o = landau(&["penrose", "--config", missing.to_str().unwrap(), "--out", "unused"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn usage_errors_exit_with_validation_status() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("u");
    assert_eq!(code(&landau(&["penrose", "--format", "png", "--out", out.to_str().unwrap()])), 2);
    assert_eq!(code(&landau(&["penrose", "--threads", "0", "--out", out.to_str().unwrap()])), 2);
    assert_eq!(code(&landau(&["frobnicate"])), 2);
    assert_eq!(code(&landau(&["evolve"])), 2);
}

#[test]
fn zero_data_gives_zero_series() {
    let t = tempfile::tempdir().unwrap();
    let cfg = "[time]\nt_end = 5.0\n[[family.modes]]\nk = [1]\nre = 0.0\n";
    let (o, out) = run_with(t.path(), "evolve", cfg, "zero", &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["evolve/volterra_k1.csv", "evolve/kinetic_k1.csv"] {
        for r in data_rows(&out.join(f)) {
            assert_eq!(r[3].parse::<f64>().unwrap(), 0.0, "{f}");
        }
    }
    for r in data_rows(&out.join("evolve/norms.csv")) {
        assert_eq!(r[1].parse::<f64>().unwrap(), 0.0);
        assert_eq!(r[2].parse::<f64>().unwrap(), 0.0);
    }

    let empty = "[time]\nt_end = 5.0\n[family]\nmodes = []\n";
    let (o, out) = run_with(t.path(), "evolve", empty, "empty", &[]);
    assert_eq!(code(&o), 0);
    let rows = data_rows(&out.join("evolve/norms.csv"));
    assert_eq!(rows.len(), 251);
    assert!(rows.iter().all(|r| r[1] == "0.0" && r[2] == "0.0"));
}

#[test]
fn crossvalidation_reports_small_deviation() {
    let t = tempfile::tempdir().unwrap();
    for model in ["linear_boltzmann", "fokker_planck"] {
        let cfg = format!("[params]\nmodel = \"{model}\"\nepsilon = 0.05\n[time]\ndt = 0.01\n");
        let (o, out) = run_with(t.path(), "evolve", &cfg, model, &[]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let cv: Value = serde_json::from_str(&fs::read_to_string(out.join("evolve/crossval.json")).unwrap()).unwrap();
        let dev = cv["max_relative_deviation"].as_f64().unwrap();
        assert!(dev <= 1e-3, "{model}: {dev}");
        assert_eq!(record(&out)["summary"]["crossval_max_relative_deviation"].as_f64().unwrap(), dev);
    }
}

#[test]
fn existing_run_directory_needs_force() {
    let t = tempfile::tempdir().unwrap();
    let cfg = "[time]\nt_end = 2.0\n";
    let (o, out) = run_with(t.path(), "evolve", cfg, "r", &[]);
    assert_eq!(code(&o), 0);
    let before = fs::read(out.join("run.json")).unwrap();
    let (o, _) = run_with(t.path(), "evolve", cfg, "r", &[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--force"));
    assert_eq!(fs::read(out.join("run.json")).unwrap(), before);
    let (o, _) = run_with(t.path(), "evolve", cfg, "r", &["--force"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(out.join("run.json")).unwrap(), before);
}

#[test]
fn reruns_are_byte_identical() {
    let t = tempfile::tempdir().unwrap();
    let cfg = format!("seed = 5\n[time]\nt_end = 10.0\n[xi]\nrandom_probes = 2\n{FAST_PENROSE}");
    for cmd in ["penrose", "evolve"] {
        let (a, da) = run_with(t.path(), cmd, &cfg, &format!("{cmd}_a"), &[]);
        let (b, db) = run_with(t.path(), cmd, &cfg, &format!("{cmd}_b"), &["--threads", "2"]);
        assert_eq!((code(&a), code(&b)), (0, 0));
        let fa = files(&da);
        let fb = files(&db);
        assert_eq!(fa.len(), fb.len());
        for (x, y) in fa.iter().zip(&fb) {
            assert_eq!(x.strip_prefix(&da).unwrap(), y.strip_prefix(&db).unwrap());
            assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
        }
    }
}

#[test]
fn every_numeric_artifact_carries_the_config_hash() {
    let t = tempfile::tempdir().unwrap();
    let cfg = "[time]\nt_end = 5.0\n[penrose]\nmap_modes = [[1]]\nmap_resolution = [9, 5]\nk_max = 4\nepsilons = [0.0, 0.05]\n";
    for cmd in ["penrose", "evolve"] {
        let (o, out) = run_with(t.path(), cmd, cfg, cmd, &[]);
        assert_eq!(code(&o), 0);
        let hash = record(&out)["config_hash"].as_str().unwrap().to_string();
        assert_eq!(hash.len(), 64);
        let all = files(&out);
        let exts: Vec<_> = all.iter().filter_map(|p| p.extension()).map(|e| e.to_owned()).collect();
        for e in ["csv", "json", "svg"] {
            assert!(exts.iter().any(|x| x == e), "{cmd} wrote no {e}");
        }
        for f in all {
            let body = fs::read_to_string(&f).unwrap();
            assert!(body.contains(&hash), "{}", f.display());
            if f.extension().unwrap() == "csv" {
                assert_eq!(body.lines().next().unwrap(), format!("# config_hash: {hash}"));
            }
        }
        let listed: Vec<String> = record(&out)["artifacts"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_str().unwrap().to_string())
            .collect();
        assert!(listed.iter().all(|a| out.join(a).exists()));
    }
}

#[test]
fn format_flag_limits_artifacts() {
    let t = tempfile::tempdir().unwrap();
    let (o, out) = run_with(t.path(), "penrose", FAST_PENROSE, "fmt", &["--format", "json"]);
    assert_eq!(code(&o), 0);
    let all = files(&out.join("penrose"));
    assert!(!all.is_empty());
    assert!(all.iter().all(|p| p.extension().unwrap() == "json"));
    let (o, out) = run_with(t.path(), "penrose", FAST_PENROSE, "fmt2", &["--format", "csv,svg"]);
    assert_eq!(code(&o), 0);
    assert!(files(&out.join("penrose")).iter().all(|p| p.extension().unwrap() != "json"));
}

#[test]
fn empty_criterion_list_passes_vacuously_with_warning() {
    let t = tempfile::tempdir().unwrap();
    let (o, out) = run_with(t.path(), "verify", "[verify]\ncriteria = []\n", "vac", &[]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    let s: Value = serde_json::from_str(&fs::read_to_string(out.join("verify/summary.json")).unwrap()).unwrap();
    assert_eq!(s["vacuous"], true);
    assert_eq!(s["all_passed"], true);
}

#[test]
fn coarsened_crossvalidation_fails_verification() {
    let t = tempfile::tempdir().unwrap();
    let cfg = "[verify]\ncriteria = [4]\n[verify.crossval]\ndt = 0.5\ndxi = 1.0\nxi_extent = 8.0\nt_end = 40.0\n";
    let (o, out) = run_with(t.path(), "verify", cfg, "coarse", &[]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL criterion 04"));
    assert_eq!(record(&out)["passed"], false);
    let rows = data_rows(&out.join("verify/summary.csv"));
    assert_eq!(rows, vec![vec!["4".to_string(), "0".to_string()]]);
}

#[test]
fn default_suite_passes() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("all");
    let o = landau(&["verify", "--out", out.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS criterion")).count(), 10);
    let s: Value = serde_json::from_str(&fs::read_to_string(out.join("verify/summary.json")).unwrap()).unwrap();
    assert_eq!(s["criteria"].as_array().unwrap().len(), 10);
    assert!(s["criteria"][0].get("seconds").is_none());
}

#[test]
fn report_summarizes_a_run() {
    let t = tempfile::tempdir().unwrap();
    let missing = t.path().join("none");
    assert_eq!(code(&landau(&["report", "--out", missing.to_str().unwrap()])), 2);
    let (o, out) = run_with(t.path(), "evolve", "[time]\nt_end = 5.0\n", "rep", &["--timestamps"]);
    assert_eq!(code(&o), 0);
    let rec = record(&out);
    assert!(rec["started"].is_string() && rec["finished"].is_string());
    let o = landau(&["report", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let md = fs::read_to_string(out.join("report.md")).unwrap();
    assert_eq!(md, String::from_utf8_lossy(&o.stdout));
    assert!(md.contains(rec["config_hash"].as_str().unwrap()));
    assert!(md.contains("crossval_max_relative_deviation"));
}

#[test]
fn reference_config_runs() {
    let t = tempfile::tempdir().unwrap();
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/reference.toml");
    let out = t.path().join("ref");
    let o = landau(&["evolve", "--config", cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(record(&out)["config"]["penrose"]["models"][1], "fokker_planck");
}
