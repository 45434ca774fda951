//! The ten acceptance criteria as reusable checks with structured metrics.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    envelope_sup, epsilon_continuity_study, fit_algebraic_decay, fit_exponential_rate, l2_norm_series, linear_fit,
    weighted_l2_ell1, ContinuityScenario, Weight,
};
use crate::dispersion::{default_distance_sample, kernel_distance, penrose_margin, PenroseRegion, ScanOptions};
use crate::foundations::{bracket, InitialDataFamily, Model, PhysicalParams, Wavevector};
use crate::kernels::{maxwellian_normalization, CausalKernel, KernelSpec};
use crate::kinetic::{exact_homogeneous_fp, run_scenario, FreeStreaming, KineticSettings};
use crate::quadrature::{integrate_real, QuadOptions};
use crate::volterra::{solve_mode, solve_volterra, TimeGrid};
use crate::Result;

pub const PENROSE_MIN_MARGIN: f64 = 0.05;
pub const PENROSE_MIN_R2: f64 = 0.95;
/// Slack on `margin(ε) ≥ margin(0) − c₀ε` for refinement noise.
pub const PENROSE_LINEAR_SLACK: f64 = 1e-4;
pub const SCALING_EXPONENT_RANGE: (f64, f64) = (0.8, 1.2);
pub const DISTANCE_MIN_R2: f64 = 0.99;
pub const MIN_CONVERGENCE_ORDER: f64 = 1.9;
pub const CROSSVAL_TOL: f64 = 1e-3;
pub const MIN_ALGEBRAIC_EXPONENT: f64 = 3.7;
pub const HOMOGENEOUS_LB_TOL: f64 = 1e-10;
pub const PROBE_SCALING_FACTOR: f64 = 3.0;
pub const HOMOGENEOUS_FP_TOL: f64 = 1e-8;
pub const MIN_RATE_RATIO: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    PenroseCondition,
    KernelCloseness,
    VolterraOrder,
    VolterraVsKinetic,
    DensityDecay,
    HomogeneousLinearBoltzmann,
    EnhancedDecay,
    ModeEstimates,
    HomogeneousFokkerPlanck,
    Uniformity,
}

impl Criterion {
    pub const ALL: [Criterion; 10] = [
        Criterion::PenroseCondition,
        Criterion::KernelCloseness,
        Criterion::VolterraOrder,
        Criterion::VolterraVsKinetic,
        Criterion::DensityDecay,
        Criterion::HomogeneousLinearBoltzmann,
        Criterion::EnhancedDecay,
        Criterion::ModeEstimates,
        Criterion::HomogeneousFokkerPlanck,
        Criterion::Uniformity,
    ];

    pub fn number(self) -> u32 {
        Criterion::ALL.iter().position(|&c| c == self).expect("listed") as u32 + 1
    }

    pub fn from_number(n: u32) -> Option<Criterion> {
        Criterion::ALL.get((n as usize).checked_sub(1)?).copied()
    }

    pub fn title(self) -> &'static str {
        match self {
            Criterion::PenroseCondition => "Penrose margin with tail certificates",
            Criterion::KernelCloseness => "kernel distance linear in epsilon",
            Criterion::VolterraOrder => "Volterra solver second-order convergence",
            Criterion::VolterraVsKinetic => "Volterra and kinetic densities agree",
            Criterion::DensityDecay => "linear-Boltzmann algebraic density decay",
            Criterion::HomogeneousLinearBoltzmann => "linear-Boltzmann k=0 exponential relation",
            Criterion::EnhancedDecay => "Fokker-Planck enhanced density decay",
            Criterion::ModeEstimates => "mode estimates at velocity-frequency probes",
            Criterion::HomogeneousFokkerPlanck => "homogeneous Fokker-Planck exact solution and rate",
            Criterion::Uniformity => "density continuity in epsilon",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub criterion: Criterion,
    pub number: u32,
    pub passed: bool,
    pub metrics: BTreeMap<String, f64>,
    pub detail: String,
    pub seconds: f64,
}

/// Resolution of the Volterra/kinetic comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub dt: f64,
    pub dxi: f64,
    pub xi_extent: f64,
    pub t_end: f64,
}

impl Default for CrossValidation {
    fn default() -> Self {
        CrossValidation {
            dt: 0.01,
            dxi: 0.05,
            xi_extent: 60.0,
            t_end: 40.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySettings {
    pub c_m: f64,
    pub region: PenroseRegion,
    pub scan: ScanOptions,
    pub crossval: CrossValidation,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            c_m: maxwellian_normalization(1),
            region: PenroseRegion::default(),
            scan: ScanOptions::default(),
            crossval: CrossValidation::default(),
        }
    }
}

struct Metrics(BTreeMap<String, f64>);

impl Metrics {
    fn new() -> Self {
        Metrics(BTreeMap::new())
    }
    fn put(&mut self, key: impl Into<String>, v: f64) {
        self.0.insert(key.into(), v);
    }
}

fn spec(model: Model, eps: f64, c_m: f64) -> KernelSpec {
    KernelSpec::new(PhysicalParams::d1(model, eps)).with_c_m(c_m)
}

fn tag(model: Model) -> &'static str {
    match model {
        Model::Collisionless => "cl",
        Model::LinearBoltzmann => "lb",
        Model::FokkerPlanck => "fp",
    }
}

/// Runs one criterion.
pub fn run_criterion(c: Criterion, settings: &VerifySettings) -> Result<CriterionOutcome> {
    let start = Instant::now();
    let mut m = Metrics::new();
    let (passed, detail) = match c {
        Criterion::PenroseCondition => penrose_condition(settings, &mut m)?,
        Criterion::KernelCloseness => kernel_closeness(settings, &mut m)?,
        Criterion::VolterraOrder => volterra_order(settings, &mut m)?,
        Criterion::VolterraVsKinetic => volterra_vs_kinetic(settings, &mut m)?,
        Criterion::DensityDecay => density_decay(settings, &mut m)?,
        Criterion::HomogeneousLinearBoltzmann => homogeneous_lb(&mut m)?,
        Criterion::EnhancedDecay => enhanced_decay(settings, &mut m)?,
        Criterion::ModeEstimates => mode_estimates(settings, &mut m)?,
        Criterion::HomogeneousFokkerPlanck => homogeneous_fp(&mut m)?,
        Criterion::Uniformity => uniformity(settings, &mut m)?,
    };
    Ok(CriterionOutcome {
        criterion: c,
        number: c.number(),
        passed,
        metrics: m.0,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs the listed criteria in order; a numerical error marks that criterion failed.
pub fn run_all(criteria: &[Criterion], settings: &VerifySettings) -> Vec<CriterionOutcome> {
    criteria
        .iter()
        .map(|&c| {
            run_criterion(c, settings).unwrap_or_else(|e| CriterionOutcome {
                criterion: c,
                number: c.number(),
                passed: false,
                metrics: BTreeMap::new(),
                detail: format!("error: {e}"),
                seconds: 0.0,
            })
        })
        .collect()
}

pub const PENROSE_EPSILONS: [f64; 4] = [0.0, 0.02, 0.05, 0.1];

fn penrose_condition(s: &VerifySettings, m: &mut Metrics) -> Result<(bool, String)> {
    let mut ok = true;
    let mut notes = Vec::new();
    for model in [Model::LinearBoltzmann, Model::FokkerPlanck] {
        let mut margins = Vec::new();
        for &eps in &PENROSE_EPSILONS {
            let r = penrose_margin(&spec(model, eps, s.c_m), &s.region, &s.scan)?;
            m.put(format!("{}_margin_{eps}", tag(model)), r.margin);
            ok &= r.margin >= PENROSE_MIN_MARGIN && r.certified;
            margins.push(r.margin);
        }
        let f = linear_fit(&PENROSE_EPSILONS, &margins)?;
        let c0 = -f.slope;
        m.put(format!("{}_c0", tag(model)), c0);
        m.put(format!("{}_r2", tag(model)), f.r_squared);
        ok &= f.r_squared >= PENROSE_MIN_R2;
        for (i, &eps) in PENROSE_EPSILONS.iter().enumerate() {
            ok &= margins[i] >= margins[0] - c0 * eps - PENROSE_LINEAR_SLACK;
        }
        notes.push(format!(
            "{}: margins {:?}, c0 = {c0:.4}, R² = {:.4}",
            model,
            margins.iter().map(|v| format!("{v:.5}")).collect::<Vec<_>>(),
            f.r_squared
        ));
    }
    Ok((ok, notes.join("; ")))
}

pub const DISTANCE_EPSILONS: [f64; 4] = [0.01, 0.02, 0.04, 0.08];

fn kernel_closeness(s: &VerifySettings, m: &mut Metrics) -> Result<(bool, String)> {
    let sample = default_distance_sample();
    let mut ok = true;
    let mut notes = Vec::new();
    for model in [Model::LinearBoltzmann, Model::FokkerPlanck] {
        let d = DISTANCE_EPSILONS
            .iter()
            .map(|&e| kernel_distance(&spec(model, e, s.c_m), &sample))
            .collect::<Result<Vec<_>>>()?;
        let x: Vec<f64> = DISTANCE_EPSILONS.iter().map(|e| e.ln()).collect();
        let y: Vec<f64> = d.iter().map(|v| v.ln()).collect();
        let f = linear_fit(&x, &y)?;
        let c0 = DISTANCE_EPSILONS.iter().zip(&d).map(|(e, v)| v / e).fold(0.0, f64::max);
        m.put(format!("{}_exponent", tag(model)), f.slope);
        m.put(format!("{}_r2", tag(model)), f.r_squared);
        m.put(format!("{}_c0", tag(model)), c0);
        ok &= f.slope >= SCALING_EXPONENT_RANGE.0 && f.slope <= SCALING_EXPONENT_RANGE.1 && f.r_squared >= DISTANCE_MIN_R2;
        notes.push(format!("{model}: exponent {:.4}, R² {:.5}, c0 {c0:.4}", f.slope, f.r_squared));
    }
    Ok((ok, notes.join("; ")))
}

pub const ORDER_STEPS: [f64; 3] = [0.1, 0.05, 0.025];

/// Max error of the manufactured solution `cos t` against the collisionless `k = 1` kernel.
pub fn manufactured_error(dt: f64, t_end: f64, c_m: f64) -> Result<f64> {
    let kernel = spec(Model::Collisionless, 0.0, c_m).at(Wavevector::d1(1))?;
    let grid = TimeGrid::with_step(t_end, dt)?;
    let opts = QuadOptions {
        abs_tol: 1e-14,
        ..Default::default()
    };
    let times = grid.times();
    let src = times
        .iter()
        .map(|&t| {
            let (conv, _) = integrate_real(|s| kernel.eval(t - s) * s.cos(), 0.0, t, &opts)?;
            Ok(Complex64::new(t.cos() - conv, 0.0))
        })
        .collect::<Result<Vec<_>>>()?;
    let kt: Vec<f64> = times.iter().map(|&t| kernel.eval(t)).collect();
    let u = crate::volterra::solve_tabulated(&kt, &src, grid.dt())?;
    Ok(u.iter().zip(&times).map(|(v, &t)| (v - t.cos()).norm()).fold(0.0, f64::max))
}

struct ConstantKernel(f64);

impl CausalKernel for ConstantKernel {
    fn eval(&self, t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else {
            self.0
        }
    }
    fn tail_bound(&self, _t: f64) -> f64 {
        f64::INFINITY
    }
    fn time_scale(&self) -> f64 {
        1.0
    }
}

fn volterra_order(s: &VerifySettings, m: &mut Metrics) -> Result<(bool, String)> {
    let errs = ORDER_STEPS
        .iter()
        .map(|&dt| manufactured_error(dt, 10.0, s.c_m))
        .collect::<Result<Vec<_>>>()?;
    let o1 = (errs[0] / errs[1]).log2();
    let o2 = (errs[1] / errs[2]).log2();
    m.put("order_coarse", o1);
    m.put("order_fine", o2);
    let mut ok = o1 >= MIN_CONVERGENCE_ORDER && o2 >= MIN_CONVERGENCE_ORDER;
    let (c, t_end) = (0.5, 2.0);
    for &dt in &ORDER_STEPS {
        let grid = TimeGrid::with_step(t_end, dt)?;
        let u = solve_volterra(&ConstantKernel(c), |_| Complex64::new(1.0, 0.0), &grid)?;
        let err = u
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let exact = (c * grid.t(j)).exp();
                (v.re - exact).abs() / exact
            })
            .fold(0.0, f64::max);
        let bound = 0.5 * dt * dt * t_end * (c * t_end).exp();
        m.put(format!("constant_rel_error_{dt}"), err);
        m.put(format!("constant_bound_{dt}"), bound);
        ok &= err <= bound;
    }
    Ok((ok, format!("orders {o1:.3}, {o2:.3}; manufactured errors {errs:?}")))
}

/// Sup-normalised deviation of `|ρ̂(t,1)|` between Volterra and kinetic runs.
pub fn crossval_deviation(model: Model, eps: f64, cv: &CrossValidation, c_m: f64) -> Result<f64> {
    let params = PhysicalParams::d1(model, eps);
    let fam = InitialDataFamily::gaussian_d1(1.0);
    let k = Wavevector::d1(1);
    let grid = TimeGrid::with_step(cv.t_end, cv.dt)?;
    let traj = solve_mode(&spec(model, eps, c_m), &fam, k, &grid)?;
    let rho_v = traj.density();
    let mut ks = KineticSettings::new(cv.dt, cv.t_end, cv.dxi, cv.xi_extent);
    ks.c_m = c_m;
    let out = run_scenario(&params, &fam, &ks)?;
    let rho_k = &out.modes[0].rho;
    let scale = rho_v.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let dev = rho_v
        .iter()
        .zip(rho_k)
        .map(|(a, b)| (a.norm() - b.norm()).abs())
        .fold(0.0, f64::max);
    Ok(dev / scale)
}

fn volterra_vs_kinetic(s: &VerifySettings, m: &mut Metrics) -> Result<(bool, String)> {
    let cases: Vec<(Model, f64)> = [Model::LinearBoltzmann, Model::FokkerPlanck]
        .iter()
        .flat_map(|&md| [(md, 0.0), (md, 0.05)])
        .collect();
    let devs = cases
        .par_iter()
        .map(|&(md, e)| crossval_deviation(md, e, &s.crossval, s.c_m))
        .collect::<Result<Vec<_>>>()?;
    let mut ok = true;
    for (&(md, e), &d) in cases.iter().zip(&devs) {
        m.put(format!("{}_deviation_{e}", tag(md)), d);
        ok &= d <= CROSSVAL_TOL;
    }
    let worst = devs.iter().copied().fold(0.0, f64::max);
    Ok((ok, format!("max relative deviation {worst:.3e}")))
}

/// Finite-regularity data on modes 1 and 2 used by the decay criteria.
pub fn decay_family() -> InitialDataFamily {
    InitialDataFamily::sobolev_tail_d1(4, &[1, 2])
}

fn density_norm(model: Model, eps: f64, c_m: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let fam = decay_family();
    let grid = TimeGrid::with_step(40.0, 0.02)?;
    let sp = spec(model, eps, c_m);
    let trajs = fam
        .active_modes()
        .map(|k| solve_mode(&sp, &fam, k, &grid))
        .collect::<Result<Vec<_>>>()?;
    Ok((grid.times(), l2_norm_series(&trajs)))
}

fn density_decay(s: &VerifySettings, m: &mut Metrics) -> Result<(bool, String)> {
    let (t, rho) = density_norm(Model::LinearBoltzmann, 0.02, s.c_m)?;
    let env = envelope_sup(&t, &rho, Weight::Algebraic { n: 4.0 });
    let fit = fit_algebraic_decay(&t, &rho, (5.0, 40.0))?;
    m.put("envelope_sup", env.sup);
    m.put("trailing_growth", env.trailing_growth);
    m.put("bounded", env.bounded as u8 as f64);
    m.put("algebraic_exponent", fit.rate);
    let ok = env.bounded && fit.rate >= MIN_ALGEBRAIC_EXPONENT;
    Ok((
        ok,
        format!("sup ⟨t⟩⁴‖ρ‖ = {:.4e} (growth {:.2e}), exponent {:.3}", env.sup, env.trailing_growth, fit.rate),
    ))
}

fn homogeneous_lb(m: &mut Metrics) -> Result<(bool, String)> {
    let eps = 0.07;
    let params = PhysicalParams::d1(Model::LinearBoltzmann, eps);
    let fam = InitialDataFamily::hermite1_homogeneous_d1();
    let mut ks = KineticSettings::new(0.01, 40.0, 0.05, 10.0);
    ks.free_streaming = FreeStreaming::Interpolated;
    ks.probes = vec![0.5, 1.0, 2.0];
    let out = run_scenario(&params, &fam, &ks)?;
    let err = out.homogeneous_relation_error.unwrap_or(f64::INFINITY);
    let probe: Vec<f64> = out.modes[0].probe_values[1].iter().map(|v| v.norm()).collect();
    let rate = fit_exponential_rate(&out.times, &probe, (5.0, 40.0))?.rate;
    let rho0 = out.modes[0].rho.iter().map(|v| v.norm()).fold(0.0, f64::max);
    m.put("relative_error", err);
    m.put("probe_rate", rate);
    m.put("max_abs_rho_k0", rho0);
    let ok = err <= HOMOGENEOUS_LB_TOL && rho0 == 0.0;
    Ok((ok, format!("relation error {err:.3e}, probe rate {rate:.9} (epsilon {eps})")))
}

fn enhanced_decay(s: &VerifySettings, m: &mut Metrics) -> Result<(bool, String)> {
    let eps = 0.05;
    let (t, rho) = density_norm(Model::FokkerPlanck, eps, s.c_m)?;
    let env = envelope_sup(&t, &rho, Weight::ExpAlgebraic { epsilon: eps, n: 4.0 });
    m.put("envelope_sup", env.sup);
    m.put("trailing_growth", env.trailing_growth);
    m.put("bounded", env.bounded as u8 as f64);
    Ok((
        env.bounded,
        format!("sup e^(εt)⟨t⟩⁴‖ρ‖ = {:.4e} (growth {:.2e})", env.sup, env.trailing_growth),
    ))
}

pub const PROBES: [f64; 4] = [0.5, 1.0, 2.0, 4.0];

fn mode_estimates(s: &VerifySettings, m: &mut Metrics) -> Result<(bool, String)> {
    let mut ok = true;
    let mut notes = Vec::new();
    let fam = InitialDataFamily::sobolev_tail_d1(4, &[1]);
    for (model, eps) in [(Model::LinearBoltzmann, 0.02), (Model::FokkerPlanck, 0.05)] {
        let params = PhysicalParams::d1(model, eps);
        let mut ks = KineticSettings::new(0.02, 40.0, 0.05, 60.0);
        ks.c_m = s.c_m;
        ks.probes = PROBES.to_vec();
        let out = run_scenario(&params, &fam, &ks)?;
        let h = &out.modes[0];
        let mut scaled = Vec::new();
        for (p, &xi) in PROBES.iter().enumerate() {
            let v: Vec<f64> = h.probe_values[p].iter().map(|z| z.norm()).collect();
            let env = envelope_sup(&out.times, &v, Weight::Algebraic { n: 2.0 });
            m.put(format!("{}_sup_xi_{xi}", tag(model)), env.sup);
            m.put(format!("{}_growth_xi_{xi}", tag(model)), env.trailing_growth);
            ok &= env.bounded;
            scaled.push(env.sup / bracket(xi).powi(2));
        }
        let worst = scaled.iter().copied().fold(0.0, f64::max);
        let ratio = worst / scaled[0];
        m.put(format!("{}_scaling_ratio", tag(model)), ratio);
        ok &= ratio <= PROBE_SCALING_FACTOR;
        notes.push(format!("{model}: scaled sups {:?}, ratio {ratio:.3}", scaled.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>()));
    }
    Ok((ok, notes.join("; ")))
}

/// Max deviation from the exact homogeneous solution and the fitted weighted-norm rate.
pub fn homogeneous_fp_run(eps: f64, dt: f64, dxi: f64, extent: f64) -> Result<(f64, f64)> {
    let params = PhysicalParams::d1(Model::FokkerPlanck, eps);
    let fam = InitialDataFamily::hermite1_homogeneous_d1();
    let mut ks = KineticSettings::new(dt, 40.0, dxi, extent);
    ks.free_streaming = FreeStreaming::Interpolated;
    ks.snapshot_every = (1.0 / dt).round().max(1.0) as usize;
    let out = run_scenario(&params, &fam, &ks)?;
    let h = &out.modes[0];
    let nodes = h.final_state.grid.nodes();
    let mut err: f64 = 0.0;
    let mut ts = Vec::new();
    let mut norms = Vec::new();
    for snap in &h.snapshots {
        for (x, v) in nodes.iter().zip(&snap.values) {
            err = err.max((v - exact_homogeneous_fp(&fam, snap.t, *x, eps)).norm());
        }
        ts.push(snap.t);
        norms.push(weighted_l2_ell1(&snap.values, dxi));
    }
    let rate = fit_exponential_rate(&ts, &norms, (5.0, 40.0))?.rate;
    Ok((err, rate))
}

fn homogeneous_fp(m: &mut Metrics) -> Result<(bool, String)> {
    let mut ok = true;
    let mut notes = Vec::new();
    for eps in [0.05, 0.1] {
        let (err, rate) = homogeneous_fp_run(eps, 0.1, 0.002, 10.0)?;
        m.put(format!("max_error_{eps}"), err);
        m.put(format!("rate_over_eps_{eps}"), rate / eps);
        ok &= err <= HOMOGENEOUS_FP_TOL && rate / eps >= MIN_RATE_RATIO;
        notes.push(format!("ε = {eps}: error {err:.2e}, rate/ε {:.4}", rate / eps));
    }
    Ok((ok, notes.join("; ")))
}

pub const CONTINUITY_EPSILONS: [f64; 3] = [0.01, 0.02, 0.04];

fn uniformity(s: &VerifySettings, m: &mut Metrics) -> Result<(bool, String)> {
    let scenario = ContinuityScenario {
        family: decay_family(),
        grid: TimeGrid::with_step(40.0, 0.05)?,
        c_m: s.c_m,
    };
    let mut ok = true;
    let mut notes = Vec::new();
    for model in [Model::LinearBoltzmann, Model::FokkerPlanck] {
        let table = epsilon_continuity_study(model, &CONTINUITY_EPSILONS, &scenario)?;
        m.put(format!("{}_exponent", tag(model)), table.exponent);
        for (e, d) in &table.rows {
            m.put(format!("{}_deviation_{e}", tag(model)), *d);
        }
        ok &= table.exponent >= SCALING_EXPONENT_RANGE.0 && table.exponent <= SCALING_EXPONENT_RANGE.1;
        notes.push(format!("{model}: exponent {:.4}", table.exponent));
    }
    Ok((ok, notes.join("; ")))
}
