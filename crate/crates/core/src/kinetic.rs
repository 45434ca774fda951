//! Per-mode kinetic simulation along exact characteristics in velocity-frequency variables.
//!
//! Only `d = 1` is simulated. Each step maps the field back along the characteristic,
//! interpolates with a four-point Lagrange stencil and adds the force term by the
//! trapezoid rule. The density closure `ρ̂(t,k) = c_norm ĥ(t,k,0)` is linear in the
//! unknown end-of-step value and is solved exactly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::foundations::{chi, damping_exponent_parts, initial_mode, InitialDataFamily, Model, PhysicalParams, Wavevector};
use crate::kernels::maxwellian_normalization;
use crate::{Error, Result};

/// Boundary magnitude above which a run is flagged.
pub const BOUNDARY_WARN: f64 = 1e-10;

/// Uniform symmetric grid `ξ_i = i·dξ`, `|i| ≤ m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiGrid {
    pub dxi: f64,
    pub m: usize,
}

impl XiGrid {
    pub fn new(dxi: f64, extent: f64) -> Result<Self> {
        if !(dxi > 0.0 && extent > dxi) {
            return Err(Error::InvalidParameter(format!(
                "xi grid needs 0 < dxi < extent, got dxi = {dxi}, extent = {extent}"
            )));
        }
        Ok(XiGrid {
            dxi,
            m: (extent / dxi).round() as usize,
        })
    }

    pub fn extent(&self) -> f64 {
        self.m as f64 * self.dxi
    }

    pub fn len(&self) -> usize {
        2 * self.m + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn xi(&self, i: usize) -> f64 {
        (i as f64 - self.m as f64) * self.dxi
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.xi(i)).collect()
    }

    pub fn origin(&self) -> usize {
        self.m
    }

    /// Index nearest to `x`, clamped.
    pub fn nearest(&self, x: f64) -> usize {
        ((x / self.dxi).round() + self.m as f64).clamp(0.0, (self.len() - 1) as f64) as usize
    }
}

/// Four-point interpolation weights for one foot; out-of-grid nodes contribute zero.
#[derive(Debug, Clone, Copy)]
struct Stencil {
    base: isize,
    w: [f64; 4],
}

fn lagrange_stencil(grid: &XiGrid, x: f64) -> Stencil {
    let s = x / grid.dxi + grid.m as f64;
    let j = s.floor();
    let u = s - j;
    // Nodes j-1, j, j+1, j+2 at offsets -1, 0, 1, 2.
    let w = [
        -u * (u - 1.0) * (u - 2.0) / 6.0,
        (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0,
        -(u + 1.0) * u * (u - 2.0) / 2.0,
        (u + 1.0) * u * (u - 1.0) / 6.0,
    ];
    Stencil {
        base: j as isize - 1,
        w,
    }
}

fn apply(stencil: &Stencil, values: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (o, &w) in stencil.w.iter().enumerate() {
        let idx = stencil.base + o as isize;
        if idx >= 0 && (idx as usize) < values.len() {
            acc += values[idx as usize] * w;
        }
    }
    acc
}

/// One mode of the field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeState {
    pub k: Wavevector,
    pub grid: XiGrid,
    pub values: Vec<Complex64>,
    pub t: f64,
}

impl ModeState {
    pub fn from_initial(family: &InitialDataFamily, k: Wavevector, grid: XiGrid) -> Result<Self> {
        if k.dim() != 1 {
            return Err(Error::InvalidParameter(format!("kinetic simulation supports d = 1, got mode {k}")));
        }
        Ok(ModeState {
            k,
            grid,
            values: grid.nodes().iter().map(|&x| initial_mode(family, k, &[x])).collect(),
            t: 0.0,
        })
    }

    pub fn at_origin(&self) -> Complex64 {
        self.values[self.grid.origin()]
    }

    pub fn boundary_magnitude(&self) -> f64 {
        self.values[0].norm().max(self.values[self.values.len() - 1].norm())
    }
}

/// Precomputed one-step operator for a (model, k, dt, grid) combination.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub dt: f64,
    pub c_norm: f64,
    damping: Vec<f64>,
    feet: Vec<Stencil>,
    /// Force profile at the feet and at the nodes.
    g_foot: Vec<f64>,
    g_node: Vec<f64>,
    closure_denominator: f64,
    with_force: bool,
}

impl Stepper {
    /// `c_m` scales the Maxwellian inside the force term; `c_norm` the density closure.
    pub fn new(params: &PhysicalParams, k: Wavevector, dt: f64, grid: XiGrid, c_m: f64, c_norm: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt = {dt} must be positive")));
        }
        if k.dim() != 1 {
            return Err(Error::InvalidParameter(format!("kinetic simulation supports d = 1, got mode {k}")));
        }
        let eps = params.effective_epsilon();
        let kk = k.components()[0] as f64;
        let w_hat = if k.is_zero() { 0.0 } else { params.e0 / (kk * kk) };
        let with_force = !k.is_zero();
        let mhat = |eta: f64| c_m * (-0.5 * eta * eta).exp();
        let nodes = grid.nodes();
        let (damping, feet_x): (Vec<f64>, Vec<f64>) = match params.model {
            Model::FokkerPlanck => nodes
                .iter()
                .map(|&x| {
                    let d = damping_exponent_parts(dt, eps, x * x, kk * x, kk * kk);
                    ((-d).exp(), (-eps * dt).exp() * x + chi(dt, eps) * kk)
                })
                .unzip(),
            _ => nodes.iter().map(|&x| ((-eps * dt).exp(), x + kk * dt)).unzip(),
        };
        let g = |eta: f64| match params.model {
            Model::FokkerPlanck => -kk * eta * w_hat * mhat(eta),
            _ => (eps - kk * eta * w_hat) * mhat(eta),
        };
        let (g_foot, g_node) = if with_force {
            (feet_x.iter().map(|&x| g(x)).collect(), nodes.iter().map(|&x| g(x)).collect())
        } else {
            (vec![0.0; nodes.len()], vec![0.0; nodes.len()])
        };
        let feet = feet_x.iter().map(|&x| lagrange_stencil(&grid, x)).collect();
        let closure_denominator = 1.0 - c_norm * 0.5 * dt * g_node[grid.origin()];
        Ok(Stepper {
            dt,
            c_norm,
            damping,
            feet,
            g_foot,
            g_node,
            closure_denominator,
            with_force,
        })
    }

    /// Advances `state` by one step given `ρ̂` at the start of the step; returns `ρ̂` at the end.
    pub fn step(&self, state: &mut ModeState, rho_now: Complex64) -> Complex64 {
        self.step_with_free(state, rho_now, |_| Complex64::new(0.0, 0.0))
    }

    /// As [`Stepper::step`], with an additive known contribution `free(i)` to the
    /// end-of-step field that enters the closure.
    pub fn step_with_free<F: Fn(usize) -> Complex64>(&self, state: &mut ModeState, rho_now: Complex64, free: F) -> Complex64 {
        let half = 0.5 * self.dt;
        let old = std::mem::take(&mut state.values);
        let mut new: Vec<Complex64> = self
            .feet
            .iter()
            .zip(&self.damping)
            .zip(&self.g_foot)
            .map(|((st, &w), &g)| (apply(st, &old) + rho_now * (half * g)) * w)
            .collect();
        let o = state.grid.origin();
        let rho_next = if self.with_force {
            self.c_norm * (new[o] + free(o)) / self.closure_denominator
        } else {
            Complex64::new(0.0, 0.0)
        };
        if self.with_force {
            for (v, &g) in new.iter_mut().zip(&self.g_node) {
                *v += rho_next * (half * g);
            }
        }
        state.values = new;
        state.t += self.dt;
        rho_next
    }
}

/// One linear-Boltzmann (or collisionless) step; returns `ρ̂` at the end of the step.
pub fn step_lb(state: &mut ModeState, dt: f64, params: &PhysicalParams, rho_now: Complex64, c_m: f64) -> Result<Complex64> {
    let p = if params.model == Model::FokkerPlanck {
        params.with_model(Model::LinearBoltzmann)
    } else {
        *params
    };
    Ok(Stepper::new(&p, state.k, dt, state.grid, c_m, 1.0)?.step(state, rho_now))
}

/// One Fokker–Planck step; returns `ρ̂` at the end of the step.
pub fn step_fp(state: &mut ModeState, dt: f64, params: &PhysicalParams, rho_now: Complex64, c_m: f64) -> Result<Complex64> {
    let p = params.with_model(Model::FokkerPlanck);
    Ok(Stepper::new(&p, state.k, dt, state.grid, c_m, 1.0)?.step(state, rho_now))
}

/// `exp(-((1 - e^{-2εt})/2)|ξ|²) ĥ_in(0, e^{-εt}ξ)`.
pub fn exact_homogeneous_fp(family: &InitialDataFamily, t: f64, xi: f64, epsilon: f64) -> Complex64 {
    let k0 = Wavevector::d1(0);
    let decay = -0.5 * (-2.0 * epsilon * t).exp_m1() * xi * xi;
    initial_mode(family, k0, &[(-epsilon * t).exp() * xi]) * (-decay).exp()
}

/// Free-streaming contribution of the initial data along exact characteristics.
pub fn free_solution(family: &InitialDataFamily, params: &PhysicalParams, k: Wavevector, t: f64, xi: f64) -> Complex64 {
    let eps = params.effective_epsilon();
    let kk = k.components()[0] as f64;
    match params.model {
        Model::FokkerPlanck => {
            let d = damping_exponent_parts(t, eps, xi * xi, kk * xi, kk * kk);
            initial_mode(family, k, &[(-eps * t).exp() * xi + chi(t, eps) * kk]) * (-d).exp()
        }
        _ => initial_mode(family, k, &[xi + kk * t]) * (-eps * t).exp(),
    }
}

/// How the initial-data part of the field is propagated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreeStreaming {
    /// Closed form along characteristics; only the force response is stepped.
    #[default]
    Exact,
    /// The whole field is interpolated every step.
    Interpolated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticSettings {
    pub dt: f64,
    pub t_end: f64,
    pub dxi: f64,
    pub xi_extent: f64,
    pub c_m: f64,
    pub c_norm: f64,
    pub free_streaming: FreeStreaming,
    /// Probe frequencies recorded for every mode.
    pub probes: Vec<f64>,
    /// Store full snapshots every this many steps (0 disables).
    pub snapshot_every: usize,
}

impl KineticSettings {
    pub fn new(dt: f64, t_end: f64, dxi: f64, xi_extent: f64) -> Self {
        KineticSettings {
            dt,
            t_end,
            dxi,
            xi_extent,
            c_m: maxwellian_normalization(1),
            c_norm: 1.0,
            free_streaming: FreeStreaming::Exact,
            probes: Vec::new(),
            snapshot_every: 0,
        }
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub values: Vec<Complex64>,
}

/// History of one simulated mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeHistory {
    pub k: Wavevector,
    pub rho: Vec<Complex64>,
    /// `probe_values[p][j]` is `ĥ(t_j, k, probes[p])` at the nearest grid node.
    pub probe_values: Vec<Vec<Complex64>>,
    pub probe_nodes: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub max_boundary: f64,
    pub final_state: ModeState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutput {
    pub times: Vec<f64>,
    pub modes: Vec<ModeHistory>,
    /// `(Σ_{k≠0} |ρ̂(t,k)|²)^{1/2}`.
    pub rho_norm: Vec<f64>,
    pub boundary_warnings: Vec<String>,
    /// Largest relative violation of `|ĥ(t,0,ξ)| = e^{-εt}|ĥ_in(0,ξ)|` (linear Boltzmann only).
    pub homogeneous_relation_error: Option<f64>,
}

/// Runs every active mode of `family` to `t_end`.
pub fn run_scenario(params: &PhysicalParams, family: &InitialDataFamily, settings: &KineticSettings) -> Result<ScenarioOutput> {
    use rayon::prelude::*;
    params.validate()?;
    family.validate()?;
    if params.d != 1 {
        return Err(Error::InvalidParameter(format!("kinetic simulation supports d = 1, got d = {}", params.d)));
    }
    let grid = XiGrid::new(settings.dxi, settings.xi_extent)?;
    let n = settings.steps();
    if n == 0 {
        return Err(Error::InvalidParameter("t_end / dt rounds to zero steps".into()));
    }
    let dt = settings.t_end / n as f64;
    let times: Vec<f64> = (0..=n).map(|j| j as f64 * dt).collect();
    let modes: Vec<Wavevector> = family.active_modes().collect();
    let histories = modes
        .par_iter()
        .map(|&k| run_mode(params, family, k, grid, dt, n, settings))
        .collect::<Result<Vec<_>>>()?;
    let rho_norm = (0..=n)
        .map(|j| {
            histories
                .iter()
                .filter(|h| !h.k.is_zero())
                .fold(0.0, |acc, h| acc + h.rho[j].norm_sqr())
                .sqrt()
        })
        .collect();
    let boundary_warnings = histories
        .iter()
        .filter(|h| h.max_boundary > BOUNDARY_WARN)
        .map(|h| format!("mode {}: boundary magnitude {:.3e} exceeds {:e}", h.k, h.max_boundary, BOUNDARY_WARN))
        .collect();
    let homogeneous_relation_error = if params.model == Model::LinearBoltzmann {
        histories.iter().find(|h| h.k.is_zero()).map(|h| lb_homogeneous_error(h, family, params, &grid, dt))
    } else {
        None
    };
    Ok(ScenarioOutput {
        times,
        modes: histories,
        rho_norm,
        boundary_warnings,
        homogeneous_relation_error,
    })
}

fn lb_homogeneous_error(h: &ModeHistory, family: &InitialDataFamily, params: &PhysicalParams, grid: &XiGrid, dt: f64) -> f64 {
    let eps = params.effective_epsilon();
    let mut worst: f64 = 0.0;
    for (p, &xi) in h.probe_nodes.iter().enumerate() {
        let h0 = initial_mode(family, h.k, &[xi]).norm();
        if h0 == 0.0 {
            continue;
        }
        for (j, v) in h.probe_values[p].iter().enumerate() {
            let expect = (-eps * j as f64 * dt).exp() * h0;
            worst = worst.max((v.norm() - expect).abs() / expect);
        }
    }
    let t_final = h.final_state.t;
    for (i, v) in h.final_state.values.iter().enumerate() {
        let h0 = initial_mode(family, h.k, &[grid.xi(i)]).norm();
        if h0 > 1e-12 {
            let expect = (-eps * t_final).exp() * h0;
            worst = worst.max((v.norm() - expect).abs() / expect);
        }
    }
    worst
}

fn run_mode(
    params: &PhysicalParams,
    family: &InitialDataFamily,
    k: Wavevector,
    grid: XiGrid,
    dt: f64,
    n: usize,
    settings: &KineticSettings,
) -> Result<ModeHistory> {
    let stepper = Stepper::new(params, k, dt, grid, settings.c_m, settings.c_norm)?;
    let exact = settings.free_streaming == FreeStreaming::Exact;
    let nodes = grid.nodes();
    let mut state = if exact {
        ModeState {
            k,
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
            t: 0.0,
        }
    } else {
        ModeState::from_initial(family, k, grid)?
    };
    let o = grid.origin();
    let free_at = |t: f64, i: usize| {
        if exact {
            free_solution(family, params, k, t, nodes[i])
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    let full = |state: &ModeState, t: f64, i: usize| state.values[i] + free_at(t, i);
    let probe_idx: Vec<usize> = settings.probes.iter().map(|&x| grid.nearest(x)).collect();
    let mut probe_values: Vec<Vec<Complex64>> = probe_idx.iter().map(|&i| vec![full(&state, 0.0, i)]).collect();
    let mut rho = Vec::with_capacity(n + 1);
    let mut rho_now = if k.is_zero() {
        Complex64::new(0.0, 0.0)
    } else {
        full(&state, 0.0, o) * settings.c_norm
    };
    rho.push(rho_now);
    let mut snapshots = Vec::new();
    let snap = |state: &ModeState, t: f64| Snapshot {
        t,
        values: (0..grid.len()).map(|i| full(state, t, i)).collect(),
    };
    if settings.snapshot_every > 0 {
        snapshots.push(snap(&state, 0.0));
    }
    let boundary = |state: &ModeState, t: f64| full(state, t, 0).norm().max(full(state, t, grid.len() - 1).norm());
    let mut max_boundary = boundary(&state, 0.0);
    for j in 1..=n {
        let t = j as f64 * dt;
        rho_now = stepper.step_with_free(&mut state, rho_now, |i| free_at(t, i));
        state.t = t;
        rho.push(rho_now);
        for (p, &i) in probe_idx.iter().enumerate() {
            probe_values[p].push(full(&state, t, i));
        }
        if settings.snapshot_every > 0 && j % settings.snapshot_every == 0 {
            snapshots.push(snap(&state, t));
        }
        max_boundary = max_boundary.max(boundary(&state, t));
    }
    let t_final = n as f64 * dt;
    let final_state = ModeState {
        k,
        grid,
        values: (0..grid.len()).map(|i| full(&state, t_final, i)).collect(),
        t: t_final,
    };
    Ok(ModeHistory {
        k,
        rho,
        probe_values,
        probe_nodes: probe_idx.iter().map(|&i| nodes[i]).collect(),
        snapshots,
        max_boundary,
        final_state,
    })
}
