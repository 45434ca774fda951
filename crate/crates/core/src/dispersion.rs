//! Time Fourier transforms of causal kernels and Penrose-margin scans.
//!
//! `K̃(τ,k) = ∫₀^∞ K(t,k) e^{-itτ} dt` on `Im τ ≤ 0`. Kernels are real, so
//! `K̃(-λ+iζ) = conj K̃(λ+iζ)` and scans only visit `λ ≥ 0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::linear_fit;
use crate::foundations::{Frequency, Model, PhysicalParams, Wavevector};
use crate::kernels::{CausalKernel, KernelPart, KernelSpec};
use crate::quadrature::{integrate, Estimate, QuadOptions};
use crate::{Error, Result};

/// Tail mass left outside `[0, T*]`.
pub const TAIL_TOL: f64 = 1e-13;
/// Absolute quadrature tolerance on `[0, T*]`.
pub const QUAD_TOL: f64 = 1e-11;
/// Default convergence bound `λ†` for `ℒ(k, ξ)`.
pub const DEFAULT_LAMBDA_DAGGER: f64 = 0.5;

const HORIZON_CAP: f64 = 1e5;

fn quad_options(lambda: f64, scale: f64) -> QuadOptions {
    let mut panel = 2.0 * scale;
    if lambda.abs() > 0.0 {
        panel = panel.min(PI / lambda.abs());
    }
    QuadOptions {
        abs_tol: QUAD_TOL,
        rel_tol: 0.0,
        max_initial_panel: panel,
        max_panels: 200_000,
    }
}

/// Smallest `T` (up to bisection) with `e^{ζT} ∫_T^∞|K| ≤ tol`.
pub fn horizon<K: CausalKernel + ?Sized>(kernel: &K, zeta: f64, tol: f64) -> Result<f64> {
    let bound = |t: f64| kernel.tail_bound(t) * (zeta * t).exp();
    let scale = kernel.time_scale();
    if bound(0.0) <= tol {
        return Ok(scale);
    }
    let mut hi = scale;
    while !(bound(hi) <= tol) {
        hi *= 2.0;
        if hi > HORIZON_CAP {
            return Err(Error::InvalidParameter(format!(
                "no usable tail bound for this kernel (bound at t = {hi:e} is {:e})",
                bound(hi)
            )));
        }
    }
    let mut lo = 0.5 * hi;
    if !(bound(lo) > tol) {
        lo = 0.0;
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if bound(mid) <= tol {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-3 * scale {
            break;
        }
    }
    Ok(hi)
}

/// `K̃(τ)` for a mode-bound kernel; the error estimate includes the analytic tail.
pub fn laplace_mode<K: CausalKernel + ?Sized>(kernel: &K, tau: Frequency) -> Result<Estimate> {
    let t_star = horizon(kernel, tau.zeta, TAIL_TOL)?;
    let tail = kernel.tail_bound(t_star) * (tau.zeta * t_star).exp();
    let lam = tau.lambda;
    let zeta = tau.zeta;
    let est = integrate(
        |t| {
            let amp = kernel.eval(t) * (zeta * t).exp();
            let (s, c) = (lam * t).sin_cos();
            Complex64::new(amp * c, -amp * s)
        },
        0.0,
        t_star,
        &quad_options(lam, kernel.time_scale()),
    )?;
    Ok(Estimate {
        value: est.value,
        error: est.error + tail,
    })
}

/// `K̃(τ, k) = ∫₀^∞ K(t,k) e^{-itτ} dt` for `Im τ ≤ 0`.
pub fn laplace_kernel(spec: &KernelSpec, tau: Frequency, k: Wavevector) -> Result<Estimate> {
    laplace_mode(&spec.at(k)?, tau)
}

/// `ℒ(k, ξ) = -∫₀^∞ e^{ξ̄|k|t} M̂(kt) Ŵ(k)|k|² t dt`, requiring `Re ξ < λ†`.
pub fn dispersion_l(k: Wavevector, xi: Complex64, params: &PhysicalParams, c_m: f64, lambda_dagger: f64) -> Result<Complex64> {
    if k.is_zero() {
        return Err(Error::ZeroMode);
    }
    if !(xi.re < lambda_dagger) {
        return Err(Error::Divergent {
            re: xi.re,
            bound: lambda_dagger,
        });
    }
    let kn = k.norm();
    let k_sq = k.norm_sq();
    let a = xi.re.max(0.0) * kn;
    let amp = params.e0 * c_m;
    // Beyond t ≥ 4a/k² the growth is absorbed by half of the Gaussian.
    let t0 = 4.0 * a / k_sq;
    let tail = |t: f64| {
        if t >= t0 {
            2.0 * amp * (-0.25 * k_sq * t * t).exp() / k_sq
        } else {
            f64::INFINITY
        }
    };
    let mut t_star = 1.0 / kn;
    while tail(t_star) > TAIL_TOL {
        t_star *= 1.25;
    }
    let rate = xi.conj() * kn;
    let est = integrate(
        |t| -(rate * t).exp() * (amp * t * (-0.5 * k_sq * t * t).exp()),
        0.0,
        t_star,
        &quad_options(rate.im, 1.0 / kn),
    )?;
    Ok(est.value)
}

/// Scanned rectangle `λ ∈ [-Λ, Λ]`, `ζ ∈ [-Z, 0]`, modes `0 < |k| ≤ k_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenroseRegion {
    pub lambda_max: f64,
    pub zeta_max: f64,
    pub k_max: u32,
}

impl Default for PenroseRegion {
    fn default() -> Self {
        PenroseRegion {
            lambda_max: 40.0,
            zeta_max: 20.0,
            k_max: 8,
        }
    }
}

impl PenroseRegion {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_max > 0.0 && self.zeta_max > 0.0 && self.k_max >= 1) {
            return Err(Error::InvalidParameter(format!(
                "empty Penrose region Λ = {}, Z = {}, k_max = {}",
                self.lambda_max, self.zeta_max, self.k_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub lambda_step: f64,
    /// Coarse `ζ` levels; empty selects a geometric ladder down to `-Z`.
    pub zetas: Vec<f64>,
    /// Local refinement stops once a halving improves the margin by less than this.
    pub refine_tol: f64,
    /// Number of coarse minima refined.
    pub refine_seeds: usize,
    /// Samples per kernel for the total-variation certificate.
    pub tv_samples: usize,
    pub kappa_target: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            lambda_step: 0.25,
            zetas: Vec::new(),
            refine_tol: 1e-7,
            refine_seeds: 6,
            tv_samples: 20_000,
            kappa_target: 0.05,
        }
    }
}

impl ScanOptions {
    /// Halves both coarse spacings.
    pub fn refined(&self, region: &PenroseRegion) -> Self {
        let mut z = self.zeta_levels(region);
        let mut extra: Vec<f64> = z.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        z.append(&mut extra);
        z.sort_by(|a, b| b.total_cmp(a));
        ScanOptions {
            lambda_step: 0.5 * self.lambda_step,
            zetas: z,
            ..self.clone()
        }
    }

    fn zeta_levels(&self, region: &PenroseRegion) -> Vec<f64> {
        if !self.zetas.is_empty() {
            return self.zetas.clone();
        }
        let mut z = vec![0.0];
        let mut v = 0.25;
        while v < region.zeta_max && v <= 4.0 {
            z.push(-v);
            v *= 2.0;
        }
        while v < region.zeta_max {
            z.push(-v);
            v += 4.0;
        }
        z.push(-region.zeta_max);
        z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Argmin {
    pub k: Wavevector,
    pub lambda: f64,
    pub zeta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateRegion {
    /// `|λ| > Λ` or `ζ < -Z`, all scanned modes.
    OutsideRectangle,
    /// `|k| > k_max`, all `τ`.
    HighModes,
}

/// Lower bound of `|1 - K̃|` on a region the grid does not visit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailCertificate {
    pub region: CertificateRegion,
    pub lower_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenroseReport {
    pub model: Model,
    pub epsilon: f64,
    pub c_m: f64,
    pub part: KernelPart,
    /// `min(grid_margin, certificates)`.
    pub margin: f64,
    pub grid_margin: f64,
    pub argmin: Argmin,
    pub k_max_checked: u32,
    pub lambda_max: f64,
    pub zeta_max: f64,
    pub certificates: Vec<TailCertificate>,
    pub kappa_target: f64,
    pub certified: bool,
    pub points_evaluated: usize,
    pub epsilon0: Option<f64>,
}

impl PenroseReport {
    /// Certificates whose bound falls below the target.
    pub fn failed_certificates(&self) -> Vec<TailCertificate> {
        self.certificates
            .iter()
            .copied()
            .filter(|c| c.lower_bound < self.kappa_target)
            .collect()
    }
}

/// Representatives of each distinct `|k|²` with `0 < |k| ≤ k_max` in dimension `d`.
pub fn mode_shells(d: usize, k_max: u32) -> Vec<Wavevector> {
    let km = k_max as i64;
    let mut seen = std::collections::BTreeMap::new();
    let range = || -km..=km;
    for a in range() {
        for b in if d >= 2 { range() } else { 0..=0 } {
            for c in if d >= 3 { range() } else { 0..=0 } {
                let n = a * a + b * b + c * c;
                if n == 0 || n > km * km || a < 0 || b < 0 || c < 0 {
                    continue;
                }
                seen.entry(n).or_insert_with(|| Wavevector::new(&[a, b, c][..d]).expect("1 <= d <= 3"));
            }
        }
    }
    seen.into_values().collect()
}

/// `∫|dK|` on `[0, T]` from `samples` uniform points.
pub fn total_variation<K: CausalKernel + ?Sized>(kernel: &K, t_end: f64, samples: usize) -> f64 {
    let h = t_end / samples as f64;
    let mut prev = kernel.eval(0.0);
    let mut tv = 0.0;
    for i in 1..=samples {
        let v = kernel.eval(i as f64 * h);
        tv += (v - prev).abs();
        prev = v;
    }
    // Past the horizon the kernel decays monotonically to zero.
    tv + prev.abs()
}

fn margin_at<K: CausalKernel + ?Sized>(kernel: &K, lambda: f64, zeta: f64) -> Result<f64> {
    let est = laplace_mode(kernel, Frequency { lambda, zeta })?;
    Ok((Complex64::new(1.0, 0.0) - est.value).norm())
}

/// Scans `inf |1 - K̃(τ,k)|` over the region and attaches tail certificates.
pub fn penrose_margin(spec: &KernelSpec, region: &PenroseRegion, opts: &ScanOptions) -> Result<PenroseReport> {
    region.validate()?;
    if !(opts.lambda_step > 0.0) {
        return Err(Error::InvalidParameter("lambda_step must be positive".into()));
    }
    let shells = mode_shells(spec.params.d, region.k_max);
    let kernels: Vec<_> = shells.iter().map(|&k| spec.at(k)).collect::<Result<_>>()?;
    let zetas = opts.zeta_levels(region);
    let n_lambda = (region.lambda_max / opts.lambda_step).round() as usize;
    let mut points = Vec::with_capacity(shells.len() * zetas.len() * (n_lambda + 1));
    for ki in 0..shells.len() {
        for &z in &zetas {
            for i in 0..=n_lambda {
                points.push((ki, (i as f64 * opts.lambda_step).min(region.lambda_max), z));
            }
        }
    }
    let values: Vec<Result<f64>> = points
        .par_iter()
        .map(|&(ki, l, z)| margin_at(&kernels[ki], l, z))
        .collect();
    let mut scored = Vec::with_capacity(values.len());
    for (p, v) in points.iter().zip(values) {
        scored.push((v?, *p));
    }
    let mut evaluated = scored.len();

    // Coarse minima, one seed per (k, ζ) pair at most.
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[a].0.total_cmp(&scored[b].0).then(a.cmp(&b)));
    let mut seeds = Vec::new();
    for &i in &order {
        let (_, (ki, l, z)) = scored[i];
        let far = seeds
            .iter()
            .all(|&(sk, sl, sz): &(usize, f64, f64)| sk != ki || sz != z || (sl - l).abs() > 2.0 * opts.lambda_step);
        if far {
            seeds.push((ki, l, z));
        }
        if seeds.len() >= opts.refine_seeds.max(1) {
            break;
        }
    }
    let refined: Vec<Result<Refined>> = seeds
        .par_iter()
        .map(|&(ki, l, z)| refine(&kernels[ki], ki, l, z, opts.lambda_step, region, opts.refine_tol))
        .collect();
    let (mut best, mut best_pt) = (scored[order[0]].0, scored[order[0]].1);
    for r in refined {
        let (m, pt, n) = r?;
        evaluated += n;
        if m < best {
            best = m;
            best_pt = pt;
        }
    }

    let certificates = certificates(spec, &kernels, region, opts)?;
    let cert_min = certificates.iter().map(|c| c.lower_bound).fold(f64::INFINITY, f64::min);
    let margin = best.min(cert_min).max(0.0);
    Ok(PenroseReport {
        model: spec.model,
        epsilon: spec.epsilon(),
        c_m: spec.c_m,
        part: spec.part,
        margin,
        grid_margin: best,
        argmin: Argmin {
            k: shells[best_pt.0],
            lambda: best_pt.1,
            zeta: best_pt.2,
        },
        k_max_checked: region.k_max,
        lambda_max: region.lambda_max,
        zeta_max: region.zeta_max,
        certified: margin >= opts.kappa_target,
        kappa_target: opts.kappa_target,
        certificates,
        points_evaluated: evaluated,
        epsilon0: None,
    })
}

type Refined = (f64, (usize, f64, f64), usize);

// Compass search with dyadic step reduction, clamped to the rectangle.
fn refine<K: CausalKernel + ?Sized>(
    kernel: &K,
    ki: usize,
    lambda: f64,
    zeta: f64,
    step: f64,
    region: &PenroseRegion,
    tol: f64,
) -> Result<Refined> {
    let clamp_l = |l: f64| l.clamp(0.0, region.lambda_max);
    let clamp_z = |z: f64| z.clamp(-region.zeta_max, 0.0);
    let (mut l, mut z) = (lambda, zeta);
    let mut best = margin_at(kernel, l, z)?;
    let mut h = 0.5 * step;
    let mut evals = 1;
    let mut last_gain = f64::INFINITY;
    while h > 1e-9 && (last_gain >= tol || h > 1e-3 * step) {
        let mut moved = false;
        let start = best;
        for (dl, dz) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
            let (nl, nz) = (clamp_l(l + dl), clamp_z(z + dz));
            if nl == l && nz == z {
                continue;
            }
            let m = margin_at(kernel, nl, nz)?;
            evals += 1;
            if m < best {
                best = m;
                l = nl;
                z = nz;
                moved = true;
            }
        }
        last_gain = start - best;
        if !moved {
            h *= 0.5;
        }
        if evals > 4000 {
            break;
        }
    }
    Ok((best, (ki, l, z), evals))
}

fn certificates(spec: &KernelSpec, kernels: &[crate::kernels::ModeKernel], region: &PenroseRegion, opts: &ScanOptions) -> Result<Vec<TailCertificate>> {
    // Integration by parts: |K̃(τ)| ≤ (|K(0)| + TV(K)) / |τ|, and |K̃| ≤ ∫|K| e^{ζt}.
    let tau_min = region.lambda_max.min(region.zeta_max);
    let mut outside = f64::INFINITY;
    for mk in kernels {
        let t_star = horizon(mk, 0.0, TAIL_TOL)?;
        let tv = total_variation(mk, t_star, opts.tv_samples);
        let ibp = (mk.eval(0.0).abs() + tv) / tau_min;
        let mass = mk.l1_bound();
        outside = outside.min(1.0 - ibp.min(mass));
    }
    let next_k = if spec.params.d == 1 {
        region.k_max as f64 + 1.0
    } else {
        ((region.k_max as f64).powi(2) + 1.0).sqrt()
    };
    let far = crate::kernels::ModeKernel {
        spec: *spec,
        k_sq: next_k * next_k,
    };
    let high = 1.0 - far.l1_bound();
    Ok(vec![
        TailCertificate {
            region: CertificateRegion::OutsideRectangle,
            lower_bound: outside,
        },
        TailCertificate {
            region: CertificateRegion::HighModes,
            lower_bound: high,
        },
    ])
}

/// Samples of `|1 - K̃(λ+iζ, k)|` for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginMap {
    pub k: Wavevector,
    pub lambdas: Vec<f64>,
    pub zetas: Vec<f64>,
    /// Row-major, one row per `ζ`.
    pub values: Vec<Vec<f64>>,
}

pub fn margin_map(spec: &KernelSpec, k: Wavevector, region: &PenroseRegion, n_lambda: usize, n_zeta: usize) -> Result<MarginMap> {
    region.validate()?;
    let kernel = spec.at(k)?;
    let nl = n_lambda.max(2);
    let nz = n_zeta.max(2);
    let lambdas: Vec<f64> = (0..nl)
        .map(|i| -region.lambda_max + 2.0 * region.lambda_max * i as f64 / (nl - 1) as f64)
        .collect();
    let zetas: Vec<f64> = (0..nz).map(|j| -region.zeta_max * j as f64 / (nz - 1) as f64).collect();
    let values = zetas
        .par_iter()
        .map(|&z| {
            lambdas
                .iter()
                .map(|&l| margin_at(&kernel, l.abs(), z))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MarginMap {
        k,
        lambdas,
        zetas,
        values,
    })
}

/// `max |K̃_ε(τ,k) - K̃₀(τ,k)|` over the sample.
pub fn kernel_distance(spec: &KernelSpec, sample: &[(Frequency, Wavevector)]) -> Result<f64> {
    if spec.epsilon() == 0.0 && spec.part == KernelPart::Full {
        return Ok(0.0);
    }
    let limit = spec.limit();
    let diffs: Vec<Result<f64>> = sample
        .par_iter()
        .map(|&(tau, k)| {
            let a = laplace_kernel(spec, tau, k)?;
            let b = laplace_kernel(&limit, tau, k)?;
            Ok((a.value - b.value).norm())
        })
        .collect();
    let mut worst: f64 = 0.0;
    for d in diffs {
        worst = worst.max(d?);
    }
    Ok(worst)
}

/// Frequencies `λ ∈ {0, 0.5, …, 6}`, `ζ ∈ {0, -0.5, -2}` on modes `1, 2, 4` (d = 1).
pub fn default_distance_sample() -> Vec<(Frequency, Wavevector)> {
    let mut s = Vec::new();
    for k in [1, 2, 4] {
        for z in [0.0, -0.5, -2.0] {
            for i in 0..=12 {
                s.push((
                    Frequency {
                        lambda: 0.5 * i as f64,
                        zeta: z,
                    },
                    Wavevector::d1(k),
                ));
            }
        }
    }
    s
}

/// Outcome of scanning a margin curve `ε ↦ margin(ε)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Epsilon0Estimate {
    /// Largest grid `ε` such that every grid point up to it reaches the target.
    pub epsilon0: f64,
    /// Intercept of the linear fit `margin ≈ κ₀ - c₀ ε`.
    pub kappa0: f64,
    pub c0: f64,
    pub r_squared: f64,
    pub margins: Vec<(f64, f64)>,
}

/// Searches the grid with a margin evaluator.
pub fn epsilon0_search<F>(margin: F, kappa_target: f64, epsilon_grid: &[f64]) -> Result<Epsilon0Estimate>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut eps: Vec<f64> = epsilon_grid.to_vec();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    if eps.is_empty() {
        return Err(Error::InvalidParameter("empty epsilon grid".into()));
    }
    let margins = eps.iter().map(|&e| Ok((e, margin(e)?))).collect::<Result<Vec<_>>>()?;
    let mut epsilon0 = None;
    for &(e, m) in &margins {
        if m >= kappa_target {
            epsilon0 = Some(e);
        } else {
            break;
        }
    }
    let epsilon0 = epsilon0.ok_or(Error::NoQualifyingEpsilon(kappa_target))?;
    let (kappa0, c0, r_squared) = if margins.len() >= 2 {
        let x: Vec<f64> = margins.iter().map(|m| m.0).collect();
        let y: Vec<f64> = margins.iter().map(|m| m.1).collect();
        let f = linear_fit(&x, &y)?;
        (f.intercept, -f.slope, f.r_squared)
    } else {
        (margins[0].1, 0.0, 1.0)
    };
    Ok(Epsilon0Estimate {
        epsilon0,
        kappa0,
        c0,
        r_squared,
        margins,
    })
}
