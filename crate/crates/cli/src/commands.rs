use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use landau_core::analysis::{envelope_sup, fit_algebraic_decay, Weight};
use landau_core::dispersion::{epsilon0_search, margin_map, penrose_margin, PenroseReport};
use landau_core::foundations::{Model, Wavevector};
use landau_core::kernels::KernelSpec;
use landau_core::kinetic::run_scenario;
use landau_core::verify::run_all;
use landau_core::volterra::{solve_mode, ModeTrajectory};
use landau_core::{Complex64, Error};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ScenarioConfig, Solver};
use crate::output::{heatmap, line_plot, num, read_record, write_report, RunDir, RunRecord};
use crate::CliError;

/// Summary of a finished subcommand.
pub struct Outcome {
    pub summary: BTreeMap<String, f64>,
    pub passed: bool,
    pub notes: Vec<String>,
    pub failure: Option<String>,
}

fn core(e: Error) -> CliError {
    match e {
        Error::InvalidParameter(_) | Error::ZeroMode | Error::UpperHalfPlane(_) => CliError::Validation(e.to_string()),
        other => CliError::Numerical(other.to_string()),
    }
}

fn k_label(k: &Wavevector) -> String {
    k.components().iter().map(|c| c.to_string()).collect::<Vec<_>>().join("_")
}

fn rho_rows(times: &[f64], rho: &[Complex64]) -> Vec<Vec<String>> {
    times
        .iter()
        .zip(rho)
        .map(|(&t, z)| vec![num(t), num(z.re), num(z.im), num(z.norm())])
        .collect()
}

pub fn penrose(cfg: &ScenarioConfig, run: &mut RunDir) -> Result<Outcome, CliError> {
    let params = cfg.physical()?;
    let region = cfg.region();
    let scan = cfg.scan();
    let c_m = cfg.c_m();
    let models = cfg.penrose_models();
    let mut eps = cfg.penrose.epsilons.clone();
    if eps.is_empty() {
        eps.push(params.epsilon);
    }
    let jobs: Vec<(Model, f64)> = models.iter().flat_map(|&m| eps.iter().map(move |&e| (m, e))).collect();
    let mut reports = jobs
        .par_iter()
        .map(|&(m, e)| {
            let spec = KernelSpec::new(params.with_model(m).with_epsilon(e)).with_c_m(c_m);
            penrose_margin(&spec, &region, &scan)
        })
        .collect::<landau_core::Result<Vec<PenroseReport>>>()
        .map_err(core)?;

    let mut summary = BTreeMap::new();
    let mut notes = Vec::new();
    for &m in &models {
        let table: Vec<(f64, f64)> = reports.iter().filter(|r| r.model == m).map(|r| (r.epsilon, r.margin)).collect();
        let lookup = |e: f64| Ok(table.iter().find(|p| p.0 == e).map_or(f64::NAN, |p| p.1));
        match epsilon0_search(lookup, scan.kappa_target, &eps) {
            Ok(est) => {
                summary.insert(format!("epsilon0_{}", m.name()), est.epsilon0);
                summary.insert(format!("c0_{}", m.name()), est.c0);
                for r in reports.iter_mut().filter(|r| r.model == m) {
                    r.epsilon0 = Some(est.epsilon0);
                }
            }
            Err(e) => notes.push(format!("{}: {e}", m.name())),
        }
    }

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for r in &reports {
        let stem = format!("{}_eps{}", r.model.name(), r.epsilon);
        run.json(&format!("penrose/report_{stem}.json"), r)?;
        summary.insert(format!("margin_{stem}"), r.margin);
        rows.push(vec![
            r.model.name().to_string(),
            num(r.epsilon),
            num(r.margin),
            num(r.grid_margin),
            k_label(&r.argmin.k),
            num(r.argmin.lambda),
            num(r.argmin.zeta),
            (r.certified as u8).to_string(),
        ]);
        if !r.certified {
            let certs: Vec<String> = r
                .failed_certificates()
                .iter()
                .map(|c| format!("{:?} {:.4}", c.region, c.lower_bound))
                .collect();
            failures.push(format!(
                "{stem}: margin {:.4} below {} (failed certificates: [{}])",
                r.margin,
                r.kappa_target,
                certs.join(", ")
            ));
        }
    }
    run.csv(
        "penrose/margins.csv",
        &["model", "epsilon", "margin", "grid_margin", "argmin_k", "argmin_lambda", "argmin_zeta", "certified"],
        &rows,
    )?;
    let series: Vec<(String, Vec<(f64, f64)>)> = models
        .iter()
        .map(|&m| {
            let pts = reports.iter().filter(|r| r.model == m).map(|r| (r.epsilon, r.margin)).collect();
            (m.name().to_string(), pts)
        })
        .collect();
    run.svg("penrose/margins.svg", &line_plot("certified Penrose margin", "epsilon", &series, false))?;

    if !cfg.penrose.map_modes.is_empty() {
        let [nl, nz] = cfg.penrose.map_resolution;
        let map_jobs: Vec<(Model, f64, Wavevector)> = jobs
            .iter()
            .flat_map(|&(m, e)| {
                cfg.penrose
                    .map_modes
                    .iter()
                    .map(move |k| (m, e, Wavevector::new(k).expect("validated")))
            })
            .collect();
        let maps = map_jobs
            .par_iter()
            .map(|&(m, e, k)| {
                let spec = KernelSpec::new(params.with_model(m).with_epsilon(e)).with_c_m(c_m);
                margin_map(&spec, k, &region, nl, nz)
            })
            .collect::<landau_core::Result<Vec<_>>>()
            .map_err(core)?;
        for ((m, e, k), map) in map_jobs.iter().zip(&maps) {
            let stem = format!("{}_eps{}_k{}", m.name(), e, k_label(k));
            let mut rows = Vec::with_capacity(map.lambdas.len() * map.zetas.len());
            for (zi, z) in map.zetas.iter().enumerate() {
                for (li, l) in map.lambdas.iter().enumerate() {
                    rows.push(vec![num(*l), num(*z), num(map.values[zi][li])]);
                }
            }
            run.csv(&format!("penrose/map_{stem}.csv"), &["lambda", "zeta", "margin"], &rows)?;
            run.svg(
                &format!("penrose/map_{stem}.svg"),
                &heatmap(&format!("|1 - K| for {stem}"), &map.lambdas, &map.zetas, &map.values),
            )?;
        }
    }

    let passed = failures.is_empty();
    Ok(Outcome {
        summary,
        passed,
        notes,
        failure: (!passed).then(|| failures.join("; ")),
    })
}

#[derive(Serialize)]
struct CrossvalEntry {
    k: Wavevector,
    max_relative_deviation: f64,
}

#[derive(Serialize)]
struct Crossval {
    modes: Vec<CrossvalEntry>,
    max_relative_deviation: f64,
}

fn decay_metrics(
    tag: &str,
    times: &[f64],
    norm: &[f64],
    cfg: &ScenarioConfig,
    weight: Weight,
    summary: &mut BTreeMap<String, f64>,
    notes: &mut Vec<String>,
) {
    let env = envelope_sup(times, norm, weight);
    summary.insert(format!("{tag}_envelope_sup"), env.sup);
    summary.insert(format!("{tag}_envelope_bounded"), env.bounded as u8 as f64);
    let [t0, t1] = cfg.analysis.fit_window;
    match fit_algebraic_decay(times, norm, (t0, t1)) {
        Ok(f) => {
            summary.insert(format!("{tag}_algebraic_exponent"), f.rate);
            summary.insert(format!("{tag}_algebraic_r2"), f.r_squared);
        }
        Err(e) => notes.push(format!("{tag} decay fit skipped: {e}")),
    }
}

pub fn evolve(cfg: &ScenarioConfig, run: &mut RunDir) -> Result<Outcome, CliError> {
    let params = cfg.physical()?;
    let family = cfg.family()?;
    let grid = cfg.time_grid()?;
    let times = grid.times();
    let c_m = cfg.c_m();
    let solver = cfg.evolve.solver;
    let mut summary = BTreeMap::new();
    let mut notes = Vec::new();
    let weight = match params.model {
        Model::FokkerPlanck => Weight::ExpAlgebraic {
            epsilon: params.epsilon,
            n: cfg.analysis.weight_power,
        },
        _ => Weight::Algebraic {
            n: cfg.analysis.weight_power,
        },
    };
    let modes: Vec<Wavevector> = family.active_modes().collect();

    let mut volterra: Vec<ModeTrajectory> = Vec::new();
    if solver != Solver::Kinetic {
        let spec = KernelSpec::new(params).with_c_m(c_m);
        let nonzero: Vec<Wavevector> = modes.iter().copied().filter(|k| !k.is_zero()).collect();
        if nonzero.len() < modes.len() {
            notes.push("volterra: the k = 0 mode has no density equation and is skipped".into());
        }
        volterra = nonzero
            .par_iter()
            .map(|&k| solve_mode(&spec, &family, k, &grid))
            .collect::<landau_core::Result<Vec<_>>>()
            .map_err(core)?;
        for tr in &volterra {
            run.csv(
                &format!("evolve/volterra_k{}.csv", k_label(&tr.k)),
                &["t", "re_rho", "im_rho", "abs_rho"],
                &rho_rows(&tr.times, &tr.density()),
            )?;
        }
    }
    let dens: Vec<Vec<Complex64>> = volterra.iter().map(|t| t.density()).collect();
    let volterra_norm: Vec<f64> = (0..times.len())
        .map(|j| dens.iter().fold(0.0, |acc, d| acc + d[j].norm_sqr()).sqrt())
        .collect();

    let mut kinetic = None;
    if solver != Solver::Volterra {
        if params.d != 1 {
            return Err(CliError::Validation(format!(
                "the kinetic solver is one-dimensional, config has d = {}",
                params.d
            )));
        }
        let mut ks = cfg.kinetic();
        ks.dt = grid.dt();
        let out = run_scenario(&params, &family, &ks).map_err(core)?;
        for w in &out.boundary_warnings {
            eprintln!("warning: {w}");
            notes.push(w.clone());
        }
        if let Some(err) = out.homogeneous_relation_error {
            summary.insert("kinetic_homogeneous_relation_error".into(), err);
        }
        for h in &out.modes {
            let label = k_label(&h.k);
            run.csv(
                &format!("evolve/kinetic_k{label}.csv"),
                &["t", "re_rho", "im_rho", "abs_rho"],
                &rho_rows(&out.times, &h.rho),
            )?;
            if !h.probe_nodes.is_empty() {
                let cols: Vec<String> = std::iter::once("t".to_string())
                    .chain(h.probe_nodes.iter().map(|x| format!("abs_h_xi{x}")))
                    .collect();
                let header: Vec<&str> = cols.iter().map(String::as_str).collect();
                let rows: Vec<Vec<String>> = (0..out.times.len())
                    .map(|j| {
                        std::iter::once(num(out.times[j]))
                            .chain(h.probe_values.iter().map(|p| num(p[j].norm())))
                            .collect()
                    })
                    .collect();
                run.csv(&format!("evolve/kinetic_probes_k{label}.csv"), &header, &rows)?;
            }
            summary.insert(format!("kinetic_max_boundary_k{label}"), h.max_boundary);
        }
        kinetic = Some(out);
    }

    let mut cols = vec!["t"];
    let mut series = Vec::new();
    if solver != Solver::Kinetic {
        cols.push("volterra_norm");
        series.push(("volterra".to_string(), volterra_norm.as_slice()));
        decay_metrics("volterra", &times, &volterra_norm, cfg, weight, &mut summary, &mut notes);
    }
    if let Some(out) = &kinetic {
        cols.push("kinetic_norm");
        series.push(("kinetic".to_string(), out.rho_norm.as_slice()));
        decay_metrics("kinetic", &out.times, &out.rho_norm, cfg, weight, &mut summary, &mut notes);
    }
    let rows: Vec<Vec<String>> = (0..times.len())
        .map(|j| {
            std::iter::once(num(times[j]))
                .chain(series.iter().map(|(_, s)| num(s.get(j).copied().unwrap_or(f64::NAN))))
                .collect()
        })
        .collect();
    run.csv("evolve/norms.csv", &cols, &rows)?;
    let plot: Vec<(String, Vec<(f64, f64)>)> = series
        .iter()
        .map(|(n, s)| (n.clone(), times.iter().copied().zip(s.iter().copied()).collect()))
        .collect();
    run.svg("evolve/norms.svg", &line_plot("density norm", "t", &plot, true))?;

    if let Some(out) = &kinetic {
        if solver == Solver::Both {
            let entries: Vec<CrossvalEntry> = volterra
                .iter()
                .zip(&dens)
                .filter_map(|(tr, dv)| {
                    let h = out.modes.iter().find(|h| h.k == tr.k)?;
                    let scale = dv.iter().map(|z| z.norm()).fold(0.0, f64::max);
                    let dev = dv
                        .iter()
                        .zip(&h.rho)
                        .map(|(a, b)| (a.norm() - b.norm()).abs())
                        .fold(0.0, f64::max);
                    Some(CrossvalEntry {
                        k: tr.k,
                        max_relative_deviation: if scale > 0.0 { dev / scale } else { dev },
                    })
                })
                .collect();
            let worst = entries.iter().map(|e| e.max_relative_deviation).fold(0.0, f64::max);
            summary.insert("crossval_max_relative_deviation".into(), worst);
            run.json(
                "evolve/crossval.json",
                &Crossval {
                    modes: entries,
                    max_relative_deviation: worst,
                },
            )?;
        }
    }
    Ok(Outcome {
        summary,
        passed: true,
        notes,
        failure: None,
    })
}

#[derive(Serialize)]
struct VerifyEntry {
    number: u32,
    criterion: landau_core::verify::Criterion,
    title: &'static str,
    passed: bool,
    detail: String,
    metrics: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seconds: Option<f64>,
}

#[derive(Serialize)]
struct VerifySummary {
    all_passed: bool,
    vacuous: bool,
    criteria: Vec<VerifyEntry>,
}

pub fn verify(cfg: &ScenarioConfig, run: &mut RunDir, timings: bool) -> Result<Outcome, CliError> {
    let criteria = cfg.criteria();
    let mut notes = Vec::new();
    if criteria.is_empty() {
        let w = "no criteria selected; verification passes vacuously".to_string();
        eprintln!("warning: {w}");
        notes.push(w);
    }
    let outcomes = run_all(&criteria, &cfg.verify_settings());
    let mut summary = BTreeMap::new();
    let mut rows = Vec::new();
    let mut metric_rows = Vec::new();
    let mut failed = Vec::new();
    for o in &outcomes {
        println!(
            "{} criterion {:02}: {} :: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.number,
            o.criterion.title(),
            o.detail
        );
        summary.insert(format!("criterion_{:02}_passed", o.number), o.passed as u8 as f64);
        rows.push(vec![o.number.to_string(), (o.passed as u8).to_string()]);
        for (k, v) in &o.metrics {
            metric_rows.push(vec![o.number.to_string(), k.clone(), num(*v)]);
        }
        if !o.passed {
            failed.push(o.number);
        }
    }
    let all_passed = failed.is_empty();
    let doc = VerifySummary {
        all_passed,
        vacuous: criteria.is_empty(),
        criteria: outcomes
            .into_iter()
            .map(|o| VerifyEntry {
                number: o.number,
                criterion: o.criterion,
                title: o.criterion.title(),
                passed: o.passed,
                detail: o.detail,
                metrics: o.metrics,
                seconds: timings.then_some(o.seconds),
            })
            .collect(),
    };
    run.json("verify/summary.json", &doc)?;
    run.csv("verify/summary.csv", &["criterion", "passed"], &rows)?;
    run.csv("verify/metrics.csv", &["criterion", "metric", "value"], &metric_rows)?;
    let failure = (!all_passed).then(|| {
        let list: Vec<String> = failed.iter().map(|n| n.to_string()).collect();
        format!("criteria failed: {}", list.join(", "))
    });
    Ok(Outcome {
        summary,
        passed: all_passed,
        notes,
        failure,
    })
}

/// Markdown summary of the run recorded in `root`.
pub fn report(root: &Path) -> Result<String, CliError> {
    let rec: RunRecord = read_record(root)?;
    let mut s = String::new();
    let _ = writeln!(s, "<!-- config_hash: {} -->", rec.config_hash);
    let _ = writeln!(s, "# {} run: {}\n", rec.tool, rec.command);
    let _ = writeln!(s, "- version: {}", rec.version);
    let _ = writeln!(s, "- config hash: `{}`", rec.config_hash);
    let _ = writeln!(s, "- status: {}", if rec.passed { "passed" } else { "FAILED" });
    if let (Some(a), Some(b)) = (&rec.started, &rec.finished) {
        let _ = writeln!(s, "- started {a}, finished {b}");
    }
    let _ = writeln!(s, "\n## Metrics\n\n| metric | value |\n|---|---|");
    for (k, v) in &rec.summary {
        let _ = writeln!(s, "| {k} | {} |", num(*v));
    }
    if !rec.notes.is_empty() {
        let _ = writeln!(s, "\n## Notes\n");
        for n in &rec.notes {
            let _ = writeln!(s, "- {n}");
        }
    }
    let _ = writeln!(s, "\n## Artifacts\n");
    for a in &rec.artifacts {
        let _ = writeln!(s, "- {a}");
    }
    write_report(root, &s)?;
    Ok(s)
}
