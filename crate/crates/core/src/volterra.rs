//! Product-trapezoid solver for `u(t) = S(t) + ∫₀ᵗ K(t-s) u(s) ds`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::foundations::{bracket, chi, initial_mode, psi, InitialDataFamily, Model, PhysicalParams, Wavevector};
use crate::kernels::{CausalKernel, KernelSpec};
use crate::{Error, Result};

/// Smallest admissible `|1 - dt K(0)/2|`.
pub const BLOWUP_GUARD: f64 = 1e-8;

/// Uniform grid `t_j = j·dt`, `j = 0..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_end: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("time grid needs N >= 2 steps, got {n}")));
        }
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_end = {t_end} must be positive")));
        }
        Ok(TimeGrid { t_end, n })
    }

    /// Grid with step as close to `dt` as divides `t_end`.
    pub fn with_step(t_end: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt = {dt} must be positive")));
        }
        TimeGrid::new(t_end, (t_end / dt).round().max(2.0) as usize)
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.n as f64
    }

    pub fn t(&self, j: usize) -> f64 {
        j as f64 * self.dt()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n).map(|j| self.t(j)).collect()
    }
}

/// Time series of one density mode.
///
/// `values` holds the marched unknown; for Fokker–Planck this is `e^{εt} ρ̂(t,k)`
/// and `gauge_rate = ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeTrajectory {
    pub k: Wavevector,
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
    pub model: Model,
    pub epsilon: f64,
    pub gauge_rate: f64,
    pub source: String,
}

impl ModeTrajectory {
    /// `ρ̂(t_j, k)`.
    pub fn density(&self) -> Vec<Complex64> {
        self.times
            .iter()
            .zip(&self.values)
            .map(|(&t, &u)| u * (-self.gauge_rate * t).exp())
            .collect()
    }

    /// Rows `(t, Re u, Im u, |u|)`.
    pub fn rows(&self) -> impl Iterator<Item = [f64; 4]> + '_ {
        self.times
            .iter()
            .zip(&self.values)
            .map(|(&t, u)| [t, u.re, u.im, u.norm()])
    }
}

/// `e^{-εt} ĥ_in(k, kt)`.
pub fn source_lb(family: &InitialDataFamily, k: Wavevector, t: f64, params: &PhysicalParams) -> Complex64 {
    let xi = k.scaled(t);
    let eps = params.effective_epsilon();
    initial_mode(family, k, &xi[..k.dim()]) * (-eps * t).exp()
}

/// `e^{εt} exp(-ε|k|²ψ_ε(t)) ĥ_in(k, χ_ε(t) k)`.
pub fn source_fp(family: &InitialDataFamily, k: Wavevector, t: f64, params: &PhysicalParams) -> Complex64 {
    let eps = params.effective_epsilon();
    let c = chi(t, eps);
    let xi = k.scaled(c);
    let exponent = if eps == 0.0 {
        0.0
    } else {
        eps * t - eps * k.norm_sq() * psi(t, eps)
    };
    initial_mode(family, k, &xi[..k.dim()]) * exponent.exp()
}

/// Marches the product-trapezoid rule on tabulated `K_j = K(t_j)` and `S_j = S(t_j)`.
pub fn solve_tabulated(kernel: &[f64], source: &[Complex64], dt: f64) -> Result<Vec<Complex64>> {
    let n = source.len();
    if kernel.len() < n {
        return Err(Error::InvalidParameter(format!(
            "kernel table has {} entries, source has {n}",
            kernel.len()
        )));
    }
    let denom = 1.0 - 0.5 * dt * kernel[0];
    if denom.abs() < BLOWUP_GUARD {
        return Err(Error::StepSize(denom.abs()));
    }
    let mut u = Vec::with_capacity(n);
    if n == 0 {
        return Ok(u);
    }
    u.push(source[0]);
    for j in 1..n {
        let mut hist = u[0] * (0.5 * kernel[j]);
        for i in 1..j {
            hist += u[i] * kernel[j - i];
        }
        u.push((source[j] + hist * dt) / denom);
    }
    Ok(u)
}

/// Solves the Volterra equation for a kernel and source on `grid`.
pub fn solve_volterra<K, S>(kernel: &K, source: S, grid: &TimeGrid) -> Result<Vec<Complex64>>
where
    K: CausalKernel + ?Sized,
    S: Fn(f64) -> Complex64,
{
    let times = grid.times();
    let kt: Vec<f64> = times.iter().map(|&t| kernel.eval(t)).collect();
    let st: Vec<Complex64> = times.iter().map(|&t| source(t)).collect();
    solve_tabulated(&kt, &st, grid.dt())
}

/// Density mode `k` of the model equation: the model selects kernel, source and gauge.
pub fn solve_mode(spec: &KernelSpec, family: &InitialDataFamily, k: Wavevector, grid: &TimeGrid) -> Result<ModeTrajectory> {
    let kernel = spec.at(k)?;
    let params = spec.params.with_model(spec.model);
    let (values, gauge_rate) = match spec.model {
        Model::FokkerPlanck => (
            solve_volterra(&kernel, |t| source_fp(family, k, t, &params), grid)?,
            spec.epsilon(),
        ),
        _ => (solve_volterra(&kernel, |t| source_lb(family, k, t, &params), grid)?, 0.0),
    };
    Ok(ModeTrajectory {
        k,
        times: grid.times(),
        values,
        model: spec.model,
        epsilon: spec.epsilon(),
        gauge_rate,
        source: profile_label(family),
    })
}

fn profile_label(family: &InitialDataFamily) -> String {
    match &family.profile {
        crate::foundations::Profile::GaussianHermite { .. } => "gaussian_hermite".into(),
        crate::foundations::Profile::FiniteSobolevTail { n_decl } => format!("finite_sobolev_tail_{n_decl}"),
    }
}

/// Ratio `sup ⟨kt⟩ⁿ|ρ̂(t,k)| / sup ⟨kt⟩ⁿ|ĥ_in(k,kt)|` over the trajectory.
pub fn weighted_sup_ratio(traj: &ModeTrajectory, family: &InitialDataFamily, n: f64) -> f64 {
    let kn = traj.k.norm();
    let rho = traj.density();
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for (&t, r) in traj.times.iter().zip(&rho) {
        let w = bracket(kn * t).powf(n);
        num = num.max(w * r.norm());
        let xi = traj.k.scaled(t);
        den = den.max(w * initial_mode(family, traj.k, &xi[..traj.k.dim()]).norm());
    }
    num / den
}
