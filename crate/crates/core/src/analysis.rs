//! Decay fits, envelope boundedness, Sobolev–Fourier checks and ε-continuity studies.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::foundations::{bracket, initial_mode, InitialDataFamily, Model, PhysicalParams, Wavevector};
use crate::kernels::KernelSpec;
use crate::quadrature::{integrate_real, QuadOptions};
use crate::volterra::{solve_mode, ModeTrajectory, TimeGrid};
use crate::{Error, Result};

/// Default start of fit windows; earlier times are transient.
pub const DEFAULT_FIT_START: f64 = 5.0;
/// Relative growth of the running sup tolerated over the trailing half-window.
pub const BOUNDED_GROWTH: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y ≈ intercept + slope·x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Fit(format!("need at least two paired samples, got {} and {}", x.len(), y.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub t0: f64,
    pub t1: f64,
    /// Algebraic exponent or exponential rate, positive for decay.
    pub rate: f64,
    pub r_squared: f64,
    pub samples: usize,
    /// `max |value|` over the window.
    pub envelope_sup: f64,
}

fn windowed(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<(Vec<f64>, Vec<f64>)> {
    if times.len() != values.len() {
        return Err(Error::Fit("times and values differ in length".into()));
    }
    if values.iter().all(|v| *v == 0.0) {
        return Err(Error::Fit("series is identically zero".into()));
    }
    let (t0, t1) = window;
    let mut ts = Vec::new();
    let mut vs = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if t >= t0 && t <= t1 {
            if !(v.abs() > 0.0) || !v.is_finite() {
                return Err(Error::Fit(format!("non-positive or non-finite value {v} at t = {t}")));
            }
            ts.push(t);
            vs.push(v.abs());
        }
    }
    if ts.len() < 10 {
        return Err(Error::Fit(format!("window [{t0}, {t1}] holds {} samples, need 10", ts.len())));
    }
    Ok((ts, vs))
}

/// Slope of `log|v|` against `log⟨t⟩`, sign-flipped.
pub fn fit_algebraic_decay(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let (ts, vs) = windowed(times, values, window)?;
    let x: Vec<f64> = ts.iter().map(|&t| bracket(t).ln()).collect();
    let y: Vec<f64> = vs.iter().map(|v| v.ln()).collect();
    let f = linear_fit(&x, &y)?;
    Ok(DecayFit {
        t0: ts[0],
        t1: *ts.last().expect("non-empty"),
        rate: -f.slope,
        r_squared: f.r_squared,
        samples: ts.len(),
        envelope_sup: vs.iter().copied().fold(0.0, f64::max),
    })
}

/// Slope of `log|v|` against `t`, sign-flipped.
pub fn fit_exponential_rate(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let (ts, vs) = windowed(times, values, window)?;
    let y: Vec<f64> = vs.iter().map(|v| v.ln()).collect();
    let f = linear_fit(&ts, &y)?;
    Ok(DecayFit {
        t0: ts[0],
        t1: *ts.last().expect("non-empty"),
        rate: -f.slope,
        r_squared: f.r_squared,
        samples: ts.len(),
        envelope_sup: vs.iter().copied().fold(0.0, f64::max),
    })
}

/// Time weight applied before taking the sup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Weight {
    /// `⟨t⟩ⁿ`
    Algebraic { n: f64 },
    /// `e^{εt}⟨t⟩ⁿ`
    ExpAlgebraic { epsilon: f64, n: f64 },
}

impl Weight {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Weight::Algebraic { n } => bracket(t).powf(n),
            Weight::ExpAlgebraic { epsilon, n } => (epsilon * t).exp() * bracket(t).powf(n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub sup: f64,
    /// `sup over the whole series / sup up to the midpoint − 1`.
    pub trailing_growth: f64,
    pub bounded: bool,
}

/// `sup_t w(t)|v(t)|`, bounded when the running sup grows by less than 5% over the second half.
pub fn envelope_sup(times: &[f64], values: &[f64], weight: Weight) -> Envelope {
    let n = times.len().min(values.len());
    if n == 0 {
        return Envelope {
            sup: 0.0,
            trailing_growth: 0.0,
            bounded: true,
        };
    }
    let t_mid = 0.5 * (times[0] + times[n - 1]);
    let mut sup: f64 = 0.0;
    let mut sup_mid: f64 = 0.0;
    for i in 0..n {
        let w = weight.at(times[i]) * values[i].abs();
        sup = sup.max(w);
        if times[i] <= t_mid {
            sup_mid = sup;
        }
    }
    let trailing_growth = if sup_mid > 0.0 {
        sup / sup_mid - 1.0
    } else if sup > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Envelope {
        sup,
        trailing_growth,
        bounded: trailing_growth.is_finite() && trailing_growth < BOUNDED_GROWTH,
    }
}

/// `(∫|f|² + ∫|f'|²)^{1/2}` from uniform samples: the `⟨v⟩`-weighted `L²` norm of the
/// velocity function whose Fourier transform is sampled.
pub fn weighted_l2_ell1(values: &[Complex64], dxi: f64) -> f64 {
    let n = values.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        let d = if i == 0 {
            (values[1] - values[0]) / dxi
        } else if i == n - 1 {
            (values[n - 1] - values[n - 2]) / dxi
        } else {
            (values[i + 1] - values[i - 1]) / (2.0 * dxi)
        };
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        s += w * (values[i].norm_sqr() + d.norm_sqr());
    }
    (s * dxi).sqrt()
}

/// `(Σ_k |ρ̂(t,k)|²)^{1/2}` across trajectories on a common grid.
pub fn l2_norm_series(trajs: &[ModeTrajectory]) -> Vec<f64> {
    let Some(first) = trajs.first() else {
        return Vec::new();
    };
    let dens: Vec<Vec<Complex64>> = trajs.iter().map(|t| t.density()).collect();
    (0..first.times.len())
        .map(|j| dens.iter().fold(0.0, |acc, d| acc + d[j].norm_sqr()).sqrt())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevCheck {
    pub n: u32,
    pub norm: f64,
    /// `sup |ĥ_in(k,ξ)|⟨ξ⟩ⁿ / ‖h_in‖` over the sample.
    pub constant: f64,
    /// `(|ξ|, running sup)` in increasing `|ξ|`.
    pub running_sup: Vec<(f64, f64)>,
    /// Running sup stabilises over the outer half of the sample.
    pub bounded: bool,
}

// d^j/dξ^j by repeated central differences.
fn derivative(f: &dyn Fn(f64) -> Complex64, x: f64, order: u32, h: f64) -> Complex64 {
    if order == 0 {
        return f(x);
    }
    (derivative(f, x + h, order - 1, h) - derivative(f, x - h, order - 1, h)) / (2.0 * h)
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `‖f‖²_{L²_x ℋⁿ_v}` for d = 1 and integer `ℓ ≤ 3`, via Plancherel in `v` and a sum over modes.
pub fn sobolev_norm(family: &InitialDataFamily, n: u32, ell: f64, xi_max: f64) -> Result<f64> {
    if ell.fract() != 0.0 || !(1.0..=3.0).contains(&ell) {
        return Err(Error::InvalidParameter(format!("weight exponent ell = {ell} must be 1, 2 or 3")));
    }
    if family.modes.iter().any(|m| m.k.dim() != 1) {
        return Err(Error::InvalidParameter("Sobolev norm is implemented for d = 1".into()));
    }
    let ell = ell as u32;
    let opts = QuadOptions {
        abs_tol: 1e-10,
        rel_tol: 1e-10,
        max_initial_panel: 1.0,
        max_panels: 100_000,
    };
    let mut total = 0.0;
    for m in &family.modes {
        let k = m.k;
        for alpha in 0..=n {
            let g = move |x: f64| initial_mode(family, k, &[x]) * Complex64::new(0.0, x).powu(alpha);
            for j in 0..=ell {
                let h = 1e-3;
                let (v, _) = integrate_real(|x| derivative(&g, x, j, h).norm_sqr(), -xi_max, xi_max, &opts)?;
                total += binomial(ell, j) * v;
            }
        }
    }
    Ok(total.sqrt())
}

/// Checks `|ĥ_in(k,ξ)| ≤ C ⟨ξ⟩^{-n} ‖h_in‖` on a sample of `(k, ξ)` (d = 1).
pub fn sobolev_fourier_check(family: &InitialDataFamily, n: u32, ell: f64, sample: &[(Wavevector, f64)]) -> Result<SobolevCheck> {
    let norm = sobolev_norm(family, n, ell, 200.0)?;
    let mut pts: Vec<(f64, f64)> = sample
        .iter()
        .map(|&(k, xi)| (xi.abs(), initial_mode(family, k, &[xi]).norm() * bracket(xi).powi(n as i32)))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut running = Vec::with_capacity(pts.len());
    let mut sup: f64 = 0.0;
    for (x, v) in pts {
        sup = sup.max(v);
        running.push((x, sup));
    }
    let bounded = match running.len() {
        0 => true,
        len => {
            let mid = running[len / 2].1;
            let end = running[len - 1].1;
            mid == 0.0 && end == 0.0 || (mid > 0.0 && end / mid - 1.0 < BOUNDED_GROWTH)
        }
    };
    let constant = if norm > 0.0 { sup / norm } else { 0.0 };
    Ok(SobolevCheck {
        n,
        norm,
        constant,
        running_sup: running,
        bounded,
    })
}

/// Fixed data, modes and time grid used across an ε sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityScenario {
    pub family: InitialDataFamily,
    pub grid: TimeGrid,
    pub c_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityTable {
    pub model: Model,
    /// `(ε, sup_t |‖ρ_ε(t)‖ − ‖ρ₀(t)‖|)`.
    pub rows: Vec<(f64, f64)>,
    pub exponent: f64,
    pub r_squared: f64,
}

/// `‖ρ(t)‖` over the scenario's active nonzero modes, solved by Volterra.
pub fn density_norm_series(model: Model, epsilon: f64, scenario: &ContinuityScenario) -> Result<Vec<f64>> {
    let params = PhysicalParams::d1(model, epsilon);
    let spec = KernelSpec::new(params).with_c_m(scenario.c_m);
    let modes: Vec<Wavevector> = scenario.family.active_modes().filter(|k| !k.is_zero()).collect();
    let trajs = modes
        .par_iter()
        .map(|&k| solve_mode(&spec, &scenario.family, k, &scenario.grid))
        .collect::<Result<Vec<_>>>()?;
    if trajs.is_empty() {
        return Ok(vec![0.0; scenario.grid.n + 1]);
    }
    Ok(l2_norm_series(&trajs))
}

/// Sup-deviation from the collisionless run per ε, with a log–log fit over ε > 0.
pub fn epsilon_continuity_study(model: Model, epsilons: &[f64], scenario: &ContinuityScenario) -> Result<ContinuityTable> {
    let base = density_norm_series(Model::Collisionless, 0.0, scenario)?;
    let mut rows = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let dev = if eps == 0.0 {
            0.0
        } else {
            let s = density_norm_series(model, eps, scenario)?;
            s.iter().zip(&base).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        rows.push((eps, dev));
    }
    let pos: Vec<&(f64, f64)> = rows.iter().filter(|r| r.0 > 0.0 && r.1 > 0.0).collect();
    let (exponent, r_squared) = if pos.len() >= 2 {
        let x: Vec<f64> = pos.iter().map(|r| r.0.ln()).collect();
        let y: Vec<f64> = pos.iter().map(|r| r.1.ln()).collect();
        let f = linear_fit(&x, &y)?;
        (f.slope, f.r_squared)
    } else {
        (f64::NAN, 0.0)
    };
    Ok(ContinuityTable {
        model,
        rows,
        exponent,
        r_squared,
    })
}
