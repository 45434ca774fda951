//! Memory kernels of the per-mode density Volterra equations.
//!
//! Every kernel carries the Maxwellian amplitude `c_M` used for `M̂(η) = c_M e^{-|η|²/2}`.
//! The default is `(2π)^{-d/2}`; a self-consistent Fourier bookkeeping gives `c_M = 1`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::foundations::{chi, psi, Model, PhysicalParams, Wavevector};
use crate::{Error, Result};

/// Which additive part of the kernel is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelPart {
    #[default]
    Full,
    /// The collision contribution alone (`K⁰_ε` for linear Boltzmann; zero otherwise).
    CollisionOnly,
    /// The Coulomb contribution alone (`K¹_ε` for linear Boltzmann; the full kernel otherwise).
    InteractionOnly,
}

/// A closed-form causal kernel `K(t, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub model: Model,
    pub params: PhysicalParams,
    pub c_m: f64,
    #[serde(default)]
    pub part: KernelPart,
}

/// `(2π)^{-d/2}`, the amplitude of `M̂ = M`.
pub fn maxwellian_normalization(d: usize) -> f64 {
    (2.0 * PI).powf(-(d as f64) / 2.0)
}

impl KernelSpec {
    /// Kernel of `params.model` with the `(2π)^{-d/2}` amplitude.
    pub fn new(params: PhysicalParams) -> Self {
        KernelSpec {
            model: params.model,
            params,
            c_m: maxwellian_normalization(params.d),
            part: KernelPart::Full,
        }
    }

    pub fn with_c_m(mut self, c_m: f64) -> Self {
        self.c_m = c_m;
        self
    }

    pub fn with_part(mut self, part: KernelPart) -> Self {
        self.part = part;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.params.epsilon = epsilon;
        self
    }

    /// The collisionless comparison kernel `K₀` sharing amplitude and coupling.
    pub fn limit(&self) -> Self {
        KernelSpec {
            model: Model::Collisionless,
            params: self.params.with_model(Model::Collisionless),
            c_m: self.c_m,
            part: KernelPart::Full,
        }
    }

    pub fn epsilon(&self) -> f64 {
        match self.model {
            Model::Collisionless => 0.0,
            _ => self.params.epsilon,
        }
    }

    pub fn eval(&self, t: f64, k: Wavevector) -> Result<f64> {
        if k.is_zero() {
            return Err(Error::ZeroMode);
        }
        Ok(self.eval_unchecked(t, k.norm_sq()))
    }

    /// Binds the kernel to a nonzero mode.
    pub fn at(&self, k: Wavevector) -> Result<ModeKernel> {
        if k.is_zero() {
            return Err(Error::ZeroMode);
        }
        Ok(ModeKernel {
            spec: *self,
            k_sq: k.norm_sq(),
        })
    }

    fn eval_unchecked(&self, t: f64, k_sq: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let e0 = self.params.e0;
        let eps = self.epsilon();
        match (self.model, self.part) {
            (Model::LinearBoltzmann, part) => {
                let (k0, k1) = lb_parts(t, k_sq, eps, e0, self.c_m);
                match part {
                    KernelPart::Full => k0 + k1,
                    KernelPart::CollisionOnly => k0,
                    KernelPart::InteractionOnly => k1,
                }
            }
            (_, KernelPart::CollisionOnly) => 0.0,
            (Model::Collisionless, _) => limit_value(t, k_sq, e0, self.c_m),
            (Model::FokkerPlanck, _) => fp_value(t, k_sq, eps, e0, self.c_m),
        }
    }
}

fn lb_parts(t: f64, k_sq: f64, eps: f64, e0: f64, c_m: f64) -> (f64, f64) {
    let m = c_m * (-eps * t - 0.5 * k_sq * t * t).exp();
    (eps * m, -e0 * m * t)
}

fn limit_value(t: f64, k_sq: f64, e0: f64, c_m: f64) -> f64 {
    -e0 * c_m * t * (-0.5 * k_sq * t * t).exp()
}

fn fp_value(t: f64, k_sq: f64, eps: f64, e0: f64, c_m: f64) -> f64 {
    if eps == 0.0 {
        return limit_value(t, k_sq, e0, c_m);
    }
    let c = chi(t, eps);
    // One exponential for e^{εt} · exp(-ε|k|²ψ) · M̂(χk); the net exponent is very negative at large t.
    let exponent = eps * t - eps * k_sq * psi(t, eps) - 0.5 * c * c * k_sq;
    -e0 * c_m * c * exponent.exp()
}

/// Linear-Boltzmann kernel parts `(K⁰_ε, K¹_ε)`.
pub fn kernel_lb_parts(t: f64, k: Wavevector, params: &PhysicalParams, c_m: f64) -> Result<(f64, f64)> {
    if k.is_zero() {
        return Err(Error::ZeroMode);
    }
    if t < 0.0 {
        return Ok((0.0, 0.0));
    }
    Ok(lb_parts(t, k.norm_sq(), params.epsilon, params.e0, c_m))
}

/// `K_ε = K⁰_ε + K¹_ε` for linear-Boltzmann collisions.
pub fn kernel_lb(t: f64, k: Wavevector, params: &PhysicalParams, c_m: f64) -> Result<f64> {
    kernel_lb_parts(t, k, params, c_m).map(|(a, b)| a + b)
}

/// Fokker–Planck kernel in the `e^{εt} ρ̂` gauge; `ε = 0` gives [`kernel_limit`].
pub fn kernel_fp(t: f64, k: Wavevector, params: &PhysicalParams, c_m: f64) -> Result<f64> {
    if k.is_zero() {
        return Err(Error::ZeroMode);
    }
    if t < 0.0 {
        return Ok(0.0);
    }
    Ok(fp_value(t, k.norm_sq(), params.epsilon, params.e0, c_m))
}

/// Collisionless kernel `K₀(t,k) = -Ŵ(k)|k|² M̂(kt) t`.
pub fn kernel_limit(t: f64, k: Wavevector, params: &PhysicalParams, c_m: f64) -> Result<f64> {
    if k.is_zero() {
        return Err(Error::ZeroMode);
    }
    if t < 0.0 {
        return Ok(0.0);
    }
    Ok(limit_value(t, k.norm_sq(), params.e0, c_m))
}

/// `sup_t (2εt - εψ_ε(t))`, reached where `χ_ε(t) = √2`. `None` when `√2 ε ≥ 1`.
fn fp_growth_exponent(eps: f64) -> Option<f64> {
    if eps == 0.0 {
        return Some(0.0);
    }
    let s = std::f64::consts::SQRT_2 * eps;
    if s >= 1.0 {
        return None;
    }
    let t_star = -(-s).ln_1p() / eps;
    Some(2.0 * eps * t_star - eps * psi(t_star, eps))
}

/// A kernel bound to one mode, as a function of time.
pub trait CausalKernel: Sync {
    fn eval(&self, t: f64) -> f64;
    /// Rigorous upper bound on `∫_T^∞ |K(t)| dt`.
    fn tail_bound(&self, t: f64) -> f64;
    /// Rigorous upper bound on `∫_0^∞ |K(t)| dt`.
    fn l1_bound(&self) -> f64 {
        self.tail_bound(0.0)
    }
    /// Time over which the kernel varies appreciably.
    fn time_scale(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeKernel {
    pub spec: KernelSpec,
    pub k_sq: f64,
}

impl ModeKernel {
    pub fn k_norm(&self) -> f64 {
        self.k_sq.sqrt()
    }

    fn collision_tail(&self, t: f64) -> f64 {
        let eps = self.spec.epsilon();
        if eps == 0.0 {
            return 0.0;
        }
        let k = self.k_norm();
        let gauss_tail = if t > 0.0 {
            ((PI / 2.0).sqrt() / k).min((-0.5 * self.k_sq * t * t).exp() / (self.k_sq * t))
        } else {
            (PI / 2.0).sqrt() / k
        };
        eps * self.spec.c_m * (-eps * t).exp() * gauss_tail
    }

    fn interaction_tail(&self, t: f64) -> f64 {
        let e0 = self.spec.params.e0;
        let c_m = self.spec.c_m;
        let eps = self.spec.epsilon();
        match self.spec.model {
            Model::Collisionless => e0 * c_m * (-0.5 * self.k_sq * t * t).exp() / self.k_sq,
            Model::LinearBoltzmann => e0 * c_m * (-eps * t - 0.5 * self.k_sq * t * t).exp() / self.k_sq,
            Model::FokkerPlanck => {
                if eps == 0.0 {
                    return e0 * c_m * (-0.5 * self.k_sq * t * t).exp() / self.k_sq;
                }
                let mut best = f64::INFINITY;
                if let Some(g) = fp_growth_exponent(eps) {
                    let c = chi(t, eps);
                    best = e0 * c_m * (g - 0.5 * c * c * self.k_sq).exp() / self.k_sq;
                }
                if eps <= 0.5 && t >= 3.0 / eps {
                    let k = self.k_norm();
                    best = best.min(2.0 * e0 * c_m * (-0.5 * k * t).exp() / (eps * k));
                }
                best
            }
        }
    }
}

impl CausalKernel for ModeKernel {
    fn eval(&self, t: f64) -> f64 {
        self.spec.eval_unchecked(t, self.k_sq)
    }

    fn tail_bound(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match (self.spec.model, self.spec.part) {
            (Model::LinearBoltzmann, KernelPart::Full) => self.collision_tail(t) + self.interaction_tail(t),
            (Model::LinearBoltzmann, KernelPart::CollisionOnly) => self.collision_tail(t),
            (_, KernelPart::CollisionOnly) => 0.0,
            _ => self.interaction_tail(t),
        }
    }

    fn time_scale(&self) -> f64 {
        1.0 / self.k_norm()
    }
}

/// The identically zero kernel.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroKernel;

impl CausalKernel for ZeroKernel {
    fn eval(&self, _t: f64) -> f64 {
        0.0
    }
    fn tail_bound(&self, _t: f64) -> f64 {
        0.0
    }
    fn time_scale(&self) -> f64 {
        1.0
    }
}
