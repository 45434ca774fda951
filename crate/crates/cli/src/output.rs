//! Run directory, artifact writers and the run record.
//!
//! All files of a run go through one [`RunDir`], which stamps the config hash into
//! every numeric artifact and keeps the artifact list for `run.json`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::CliError;

pub const RECORD_FILE: &str = "run.json";
pub const REPORT_FILE: &str = "report.md";
const MANAGED: [&str; 5] = ["penrose", "evolve", "verify", RECORD_FILE, REPORT_FILE];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub config: ScenarioConfig,
    pub artifacts: Vec<String>,
    pub summary: BTreeMap<String, f64>,
    pub passed: bool,
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub started: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finished: Option<String>,
}

pub struct RunDir {
    root: PathBuf,
    hash: String,
    formats: BTreeSet<Format>,
    artifacts: Vec<String>,
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl RunDir {
    /// Prepares `root` for a new run. A non-empty directory is refused unless `force`,
    /// which clears only the entries this tool writes.
    pub fn create(root: &Path, hash: &str, formats: &[Format], force: bool) -> Result<Self, CliError> {
        if root.exists() {
            if !root.is_dir() {
                return Err(CliError::Validation(format!("{} is not a directory", root.display())));
            }
            let non_empty = fs::read_dir(root).map_err(|e| io_err(root, e))?.next().is_some();
            if non_empty && !force {
                return Err(CliError::Validation(format!(
                    "run directory {} is not empty; pass --force to overwrite",
                    root.display()
                )));
            }
            for name in MANAGED {
                let p = root.join(name);
                if p.is_dir() {
                    fs::remove_dir_all(&p).map_err(|e| io_err(&p, e))?;
                } else if p.exists() {
                    fs::remove_file(&p).map_err(|e| io_err(&p, e))?;
                }
            }
        }
        fs::create_dir_all(root).map_err(|e| io_err(root, e))?;
        let formats = if formats.is_empty() {
            [Format::Csv, Format::Json, Format::Svg].into_iter().collect()
        } else {
            formats.iter().copied().collect()
        };
        Ok(RunDir {
            root: root.to_path_buf(),
            hash: hash.to_string(),
            formats,
            artifacts: Vec::new(),
        })
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    fn put(&mut self, rel: &str, contents: &str) -> Result<(), CliError> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        }
        fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
        self.artifacts.push(rel.to_string());
        Ok(())
    }

    /// CSV with a `# config_hash:` header line.
    pub fn csv(&mut self, rel: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        if !self.wants(Format::Csv) {
            return Ok(());
        }
        let mut s = format!("# config_hash: {}\n{}\n", self.hash, header.join(","));
        for r in rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        self.put(rel, &s)
    }

    /// JSON object with a top-level `config_hash` field.
    pub fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), CliError> {
        if !self.wants(Format::Json) {
            return Ok(());
        }
        let body = stamped_json(&self.hash, value)?;
        self.put(rel, &body)
    }

    pub fn svg(&mut self, rel: &str, svg: &str) -> Result<(), CliError> {
        if !self.wants(Format::Svg) {
            return Ok(());
        }
        let s = format!("<!-- config_hash: {} -->\n{svg}", self.hash);
        self.put(rel, &s)
    }

    /// Writes `run.json` read-only and consumes the directory handle.
    pub fn finish(mut self, mut record: RunRecord) -> Result<PathBuf, CliError> {
        self.artifacts.sort();
        record.artifacts = std::mem::take(&mut self.artifacts);
        let path = self.root.join(RECORD_FILE);
        let body = serde_json::to_string_pretty(&record).map_err(|e| CliError::Io(e.to_string()))? + "\n";
        fs::write(&path, body).map_err(|e| io_err(&path, e))?;
        let mut perm = fs::metadata(&path).map_err(|e| io_err(&path, e))?.permissions();
        perm.set_readonly(true);
        fs::set_permissions(&path, perm).map_err(|e| io_err(&path, e))?;
        Ok(path)
    }
}

fn stamped_json<T: Serialize>(hash: &str, value: &T) -> Result<String, CliError> {
    let v = serde_json::to_value(value).map_err(|e| CliError::Io(e.to_string()))?;
    let v = match v {
        serde_json::Value::Object(mut m) => {
            m.insert("config_hash".into(), hash.into());
            serde_json::Value::Object(m)
        }
        other => serde_json::json!({ "config_hash": hash, "data": other }),
    };
    Ok(serde_json::to_string_pretty(&v).map_err(|e| CliError::Io(e.to_string()))? + "\n")
}

pub fn read_record(root: &Path) -> Result<RunRecord, CliError> {
    let path = root.join(RECORD_FILE);
    let text = fs::read_to_string(&path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn write_report(root: &Path, body: &str) -> Result<PathBuf, CliError> {
    let path = root.join(REPORT_FILE);
    fs::write(&path, body).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

/// Shortest round-trip form, in exponent notation for extreme magnitudes.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
        W / 2.0,
        escape(title)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-300 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Line plot; with `log_y` non-positive samples are dropped.
pub fn line_plot(title: &str, x_label: &str, series: &[(String, Vec<(f64, f64)>)], log_y: bool) -> String {
    let tr = |y: f64| if log_y { y.log10() } else { y };
    let keep = |&(_, y): &(f64, f64)| !log_y || y > 0.0;
    let pts: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|(_, s)| s.iter().copied().filter(keep).map(|(x, y)| (x, tr(y))).collect())
        .collect();
    let (x0, x1) = range(pts.iter().flatten().map(|p| p.0));
    let (y0, y1) = range(pts.iter().flatten().map(|p| p.1));
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut s = header(title);
    let _ = writeln!(
        s,
        "<rect x=\"{PAD}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let ylab = |v: f64| if log_y { format!("1e{v:.1}") } else { format!("{v:.3e}") };
    let _ = writeln!(
        s,
        "<text x=\"{PAD}\" y=\"{}\" font-size=\"11\">{}</text><text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{}</text>",
        H - PAD + 16.0,
        format_args!("{x0:.3}"),
        W - PAD,
        H - PAD + 16.0,
        format_args!("{x1:.3}")
    );
    let _ = writeln!(
        s,
        "<text x=\"4\" y=\"{}\" font-size=\"11\">{}</text><text x=\"4\" y=\"{}\" font-size=\"11\">{}</text>",
        H - PAD,
        ylab(y0),
        PAD + 4.0,
        ylab(y1)
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
        W / 2.0,
        H - 12.0,
        escape(x_label)
    );
    for (i, ((name, _), p)) in series.iter().zip(&pts).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if !p.is_empty() {
            let path: Vec<String> = p.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(
                s,
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
                path.join(" ")
            );
        }
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"{color}\" text-anchor=\"end\">{}</text>",
            W - PAD - 6.0,
            PAD + 16.0 + 14.0 * i as f64,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Heat map of `values[row][col]` over `xs` (columns) and `ys` (rows).
pub fn heatmap(title: &str, xs: &[f64], ys: &[f64], values: &[Vec<f64>]) -> String {
    let (v0, v1) = range(values.iter().flatten().copied());
    let (x0, x1) = range(xs.iter().copied());
    let (y0, y1) = range(ys.iter().copied());
    let cw = (W - 2.0 * PAD) / xs.len().max(1) as f64;
    let ch = (H - 2.0 * PAD) / ys.len().max(1) as f64;
    let mut s = header(title);
    for (r, row) in values.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            let u = if v.is_finite() { (v - v0) / (v1 - v0) } else { 0.0 };
            let (red, blue) = ((255.0 * (1.0 - u)) as u8, (255.0 * u) as u8);
            let _ = writeln!(
                s,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"rgb({red},64,{blue})\"/>",
                PAD + c as f64 * cw,
                PAD + r as f64 * ch,
                cw + 0.05,
                ch + 0.05
            );
        }
    }
    let _ = writeln!(
        s,
        "<text x=\"{PAD}\" y=\"{}\" font-size=\"11\">lambda {x0:.2} .. {x1:.2}; zeta rows {y0:.2} .. {y1:.2}; margin {v0:.4} (red) .. {v1:.4} (blue)</text>",
        H - PAD + 18.0
    );
    s.push_str("</svg>\n");
    s
}
