//! Parameters, special functions and initial data.
//!
//! Fourier conventions are the symmetric ones: in velocity
//! `f̂(ξ) = (2π)^{-d/2} ∫ f(v) e^{-iv·ξ} dv`, so the Maxwellian
//! `M(v) = (2π)^{-d/2} e^{-|v|²/2}` is its own transform.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Below this value of `ε t` the integral `psi` is summed from its Taylor series.
/// The closed form loses `~1e-16 / (εt)²` relative accuracy to cancellation.
pub const PSI_SERIES_SWITCH: f64 = 0.5;

/// Collision model of the linearized equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Collisionless,
    LinearBoltzmann,
    FokkerPlanck,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Collisionless => "collisionless",
            Model::LinearBoltzmann => "linear_boltzmann",
            Model::FokkerPlanck => "fokker_planck",
        }
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Physical and regularity parameters of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub d: usize,
    pub model: Model,
    pub epsilon: f64,
    pub e0: f64,
    pub ell: f64,
    pub n: u32,
}

impl PhysicalParams {
    pub fn new(d: usize, model: Model, epsilon: f64, e0: f64, ell: f64, n: u32) -> Result<Self> {
        let p = PhysicalParams {
            d,
            model,
            epsilon,
            e0,
            ell,
            n,
        };
        p.validate()?;
        Ok(p)
    }

    /// One-dimensional defaults: `e0 = 1`, `ell = 1`, `n = 4`.
    pub fn d1(model: Model, epsilon: f64) -> Self {
        PhysicalParams {
            d: 1,
            model,
            epsilon,
            e0: 1.0,
            ell: 1.0,
            n: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.d) {
            return Err(Error::InvalidParameter(format!(
                "dimension d = {} must be 1, 2 or 3",
                self.d
            )));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon = {} must be finite and >= 0",
                self.epsilon
            )));
        }
        if !(self.e0 > 0.0 && self.e0.is_finite()) {
            return Err(Error::InvalidParameter(format!("e0 = {} must be > 0", self.e0)));
        }
        if !(self.ell > self.d as f64 / 2.0) {
            return Err(Error::InvalidParameter(format!(
                "ell = {} must exceed d/2 = {}",
                self.ell,
                self.d as f64 / 2.0
            )));
        }
        if self.n < 3 {
            return Err(Error::InvalidParameter(format!("n = {} must be >= 3", self.n)));
        }
        Ok(())
    }

    /// Collision strength seen by the dynamics; zero for the collisionless model.
    pub fn effective_epsilon(&self) -> f64 {
        match self.model {
            Model::Collisionless => 0.0,
            _ => self.epsilon,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_model(mut self, model: Model) -> Self {
        self.model = model;
        self
    }
}

/// A spatial Fourier mode `k ∈ ℤ^d`, `d ≤ 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct Wavevector {
    comps: [i64; 3],
    dim: u8,
}

impl Wavevector {
    pub fn new(comps: &[i64]) -> Result<Self> {
        if comps.is_empty() || comps.len() > 3 {
            return Err(Error::InvalidParameter(format!(
                "wavevector must have 1 to 3 components, got {}",
                comps.len()
            )));
        }
        let mut c = [0i64; 3];
        c[..comps.len()].copy_from_slice(comps);
        Ok(Wavevector {
            comps: c,
            dim: comps.len() as u8,
        })
    }

    pub fn d1(k: i64) -> Self {
        Wavevector {
            comps: [k, 0, 0],
            dim: 1,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn components(&self) -> &[i64] {
        &self.comps[..self.dim()]
    }

    pub fn is_zero(&self) -> bool {
        self.components().iter().all(|&c| c == 0)
    }

    pub fn norm_sq(&self) -> f64 {
        self.components().iter().map(|&c| (c * c) as f64).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dot(&self, xi: &[f64]) -> f64 {
        self.components()
            .iter()
            .zip(xi)
            .map(|(&c, &x)| c as f64 * x)
            .sum()
    }

    /// `s·k` as a real vector (padded to three components).
    pub fn scaled(&self, s: f64) -> [f64; 3] {
        [
            self.comps[0] as f64 * s,
            self.comps[1] as f64 * s,
            self.comps[2] as f64 * s,
        ]
    }
}

impl TryFrom<Vec<i64>> for Wavevector {
    type Error = Error;
    fn try_from(v: Vec<i64>) -> Result<Self> {
        Wavevector::new(&v)
    }
}

impl From<Wavevector> for Vec<i64> {
    fn from(k: Wavevector) -> Vec<i64> {
        k.components().to_vec()
    }
}

impl std::fmt::Display for Wavevector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.components().iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// A complex time frequency `τ = λ + iζ` restricted to the closed lower half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    pub lambda: f64,
    pub zeta: f64,
}

impl Frequency {
    pub fn new(lambda: f64, zeta: f64) -> Result<Self> {
        if zeta > 0.0 || !lambda.is_finite() || !zeta.is_finite() {
            return Err(Error::UpperHalfPlane(Complex64::new(lambda, zeta)));
        }
        Ok(Frequency { lambda, zeta })
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.lambda, self.zeta)
    }
}

impl TryFrom<Complex64> for Frequency {
    type Error = Error;
    fn try_from(tau: Complex64) -> Result<Self> {
        Frequency::new(tau.re, tau.im)
    }
}

/// `⟨x⟩ = (1 + x²)^{1/2}`.
#[inline]
pub fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// Maxwellian `(2π)^{-d/2} exp(-|ξ|²/2)`, with `d = xi.len()`.
pub fn maxwellian_profile(xi: &[f64]) -> f64 {
    let d = xi.len() as f64;
    let r2: f64 = xi.iter().map(|x| x * x).sum();
    (2.0 * PI).powf(-d / 2.0) * (-0.5 * r2).exp()
}

/// Collisional clock `χ_ε(t) = (1 - e^{-εt})/ε`, equal to `t` at `ε = 0`.
#[inline]
pub fn chi(t: f64, epsilon: f64) -> f64 {
    assert!(t >= 0.0, "chi: negative time {t}");
    if epsilon == 0.0 {
        t
    } else {
        -(-epsilon * t).exp_m1() / epsilon
    }
}

/// `ψ_ε(t) = ∫₀ᵗ χ_ε(σ)² dσ`, equal to `t³/3` at `ε = 0`.
pub fn psi(t: f64, epsilon: f64) -> f64 {
    assert!(t >= 0.0 && epsilon >= 0.0, "psi: negative input t={t}, epsilon={epsilon}");
    let x = epsilon * t;
    if x < PSI_SERIES_SWITCH {
        t * t * t * psi_series_factor(x)
    } else {
        let e1 = (-x).exp_m1();
        let e2 = (-2.0 * x).exp_m1();
        (2.0 * x + 4.0 * e1 - e2) / (2.0 * epsilon.powi(3))
    }
}

// ψ_ε(t) / t³ = Σ_{n≥3} (-1)^n (4 - 2^n) x^{n-3} / (2 n!)
fn psi_series_factor(x: f64) -> f64 {
    let mut sum: f64 = 0.0;
    // x^{n-3} / n!
    let mut pow_over_fact = 1.0 / 6.0;
    let mut two_pow = 8.0;
    for n in 3..60 {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let term = sign * (4.0 - two_pow) * pow_over_fact / 2.0;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
        pow_over_fact *= x / (n as f64 + 1.0);
        two_pow *= 2.0;
    }
    sum
}

/// Damping exponent along Fokker–Planck characteristics,
/// `ε ∫₀ᵗ |e^{-εs} ξ + χ_ε(s) k|² ds`, in terms of `|ξ|²`, `ξ·k` and `|k|²`.
pub fn damping_exponent_parts(t: f64, epsilon: f64, xi_sq: f64, xi_dot_k: f64, k_sq: f64) -> f64 {
    assert!(t >= 0.0, "damping exponent: negative time {t}");
    if epsilon == 0.0 {
        return 0.0;
    }
    let x = epsilon * t;
    let c = chi(t, epsilon);
    -0.5 * (-2.0 * x).exp_m1() * xi_sq + epsilon * c * c * xi_dot_k + epsilon * psi(t, epsilon) * k_sq
}

/// `ε ∫₀ᵗ |e^{-εs} ξ + χ_ε(s) k|² ds` for `ξ ∈ ℝ^d`, `k ∈ ℤ^d`.
pub fn fp_damping_exponent(t: f64, xi: &[f64], k: Wavevector, epsilon: f64) -> f64 {
    let xi_sq: f64 = xi.iter().map(|x| x * x).sum();
    damping_exponent_parts(t, epsilon, xi_sq, k.dot(xi), k.norm_sq())
}

/// Coulomb symbol `Ŵ(k) = e₀ / |k|²`.
pub fn coulomb_w(k: Wavevector, e0: f64) -> Result<f64> {
    if k.is_zero() {
        return Err(Error::ZeroMode);
    }
    Ok(e0 / k.norm_sq())
}

/// Velocity-frequency profile of an initial datum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// `p(ξ₁) e^{-c|ξ|²}` with complex polynomial coefficients in ascending order.
    GaussianHermite { poly: Vec<Complex64>, c: f64 },
    /// `⟨ξ⟩^{-(n_decl+1)} w(|ξ|)` with a smooth window `w` vanishing at the origin
    /// and equal to one for `|ξ| ≥ 1`.
    FiniteSobolevTail { n_decl: u32 },
}

impl Profile {
    pub fn eval(&self, xi: &[f64]) -> Complex64 {
        let r2: f64 = xi.iter().map(|x| x * x).sum();
        match self {
            Profile::GaussianHermite { poly, c } => {
                let x = xi.first().copied().unwrap_or(0.0);
                let p = poly
                    .iter()
                    .rev()
                    .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * x + a);
                p * (-c * r2).exp()
            }
            Profile::FiniteSobolevTail { n_decl } => {
                let w = smooth_window(r2.sqrt());
                if w == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                Complex64::new(w * (1.0 + r2).powf(-(*n_decl as f64 + 1.0) / 2.0), 0.0)
            }
        }
    }

    fn vanishes_at_origin(&self) -> bool {
        match self {
            Profile::GaussianHermite { poly, .. } => poly.first().is_none_or(|a| a.norm() == 0.0),
            Profile::FiniteSobolevTail { .. } => true,
        }
    }
}

/// C^∞ step: 0 at `r = 0`, 1 for `r ≥ 1`.
pub fn smooth_window(r: f64) -> f64 {
    fn bump(x: f64) -> f64 {
        if x > 0.0 {
            (-1.0 / x).exp()
        } else {
            0.0
        }
    }
    if r >= 1.0 {
        return 1.0;
    }
    let a = bump(r);
    let b = bump(1.0 - r);
    a / (a + b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeAmplitude {
    pub k: Wavevector,
    pub amplitude: Complex64,
}

/// Initial data `ĥ_in(k, ξ) = a_k · profile(ξ)` over a finite set of active modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialDataFamily {
    pub profile: Profile,
    pub modes: Vec<ModeAmplitude>,
}

impl InitialDataFamily {
    pub fn new(profile: Profile, modes: Vec<ModeAmplitude>) -> Result<Self> {
        let fam = InitialDataFamily { profile, modes };
        fam.validate()?;
        Ok(fam)
    }

    /// Gaussian data `a₁ e^{-ξ²/2}` on the single mode `k = 1` (d = 1).
    pub fn gaussian_d1(amplitude: f64) -> Self {
        InitialDataFamily {
            profile: Profile::GaussianHermite {
                poly: vec![Complex64::new(1.0, 0.0)],
                c: 0.5,
            },
            modes: vec![ModeAmplitude {
                k: Wavevector::d1(1),
                amplitude: Complex64::new(amplitude, 0.0),
            }],
        }
    }

    /// Finite-regularity data on the listed one-dimensional modes with unit amplitude.
    pub fn sobolev_tail_d1(n_decl: u32, ks: &[i64]) -> Self {
        InitialDataFamily {
            profile: Profile::FiniteSobolevTail { n_decl },
            modes: ks
                .iter()
                .map(|&k| ModeAmplitude {
                    k: Wavevector::d1(k),
                    amplitude: Complex64::new(1.0, 0.0),
                })
                .collect(),
        }
    }

    /// Mean-zero first Hermite function `i ξ e^{-ξ²/2}` on the spatially homogeneous mode.
    pub fn hermite1_homogeneous_d1() -> Self {
        InitialDataFamily {
            profile: Profile::GaussianHermite {
                poly: vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
                c: 0.5,
            },
            modes: vec![ModeAmplitude {
                k: Wavevector::d1(0),
                amplitude: Complex64::new(0.0, 1.0),
            }],
        }
    }

    pub fn zero(profile: Profile) -> Self {
        InitialDataFamily {
            profile,
            modes: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Profile::GaussianHermite { c, poly } = &self.profile {
            if !(*c > 0.0) {
                return Err(Error::InvalidParameter(format!("Gaussian width c = {c} must be > 0")));
            }
            if poly.is_empty() {
                return Err(Error::InvalidParameter("empty polynomial".into()));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for m in &self.modes {
            if let Some(first) = self.modes.first() {
                if m.k.dim() != first.k.dim() {
                    return Err(Error::InvalidParameter("modes of mixed dimension".into()));
                }
            }
            if !seen.insert(m.k) {
                return Err(Error::InvalidParameter(format!("duplicate mode {}", m.k)));
            }
            if m.k.is_zero() && m.amplitude.norm() != 0.0 && !self.profile.vanishes_at_origin() {
                return Err(Error::InvalidParameter(
                    "data is not mean-zero: the (k=0, ξ=0) coefficient must vanish".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn amplitude(&self, k: Wavevector) -> Complex64 {
        self.modes
            .iter()
            .find(|m| m.k == k)
            .map_or(Complex64::new(0.0, 0.0), |m| m.amplitude)
    }

    pub fn active_modes(&self) -> impl Iterator<Item = Wavevector> + '_ {
        self.modes.iter().map(|m| m.k)
    }
}

/// `ĥ_in(k, ξ)` for the family.
pub fn initial_mode(family: &InitialDataFamily, k: Wavevector, xi: &[f64]) -> Complex64 {
    let a = family.amplitude(k);
    if a.norm() == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    a * family.profile.eval(xi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maxwellian_values() {
        assert!((maxwellian_profile(&[0.0]) - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert!((maxwellian_profile(&[1.0]) - 0.241_970_724_519_143_37).abs() < 1e-15);
    }

    #[test]
    fn maxwellian_unit_mass() {
        // Trapezoid on a Gaussian is spectrally accurate.
        let h = 0.05;
        let n = 400i64;
        let line: f64 = (-n..=n)
            .map(|i| maxwellian_profile(&[i as f64 * h]) * h)
            .sum();
        assert!((line - 1.0).abs() < 1e-12);
        let mut plane = 0.0;
        let m = 200i64;
        let h2 = 0.1;
        for i in -m..=m {
            for j in -m..=m {
                plane += maxwellian_profile(&[i as f64 * h2, j as f64 * h2]) * h2 * h2;
            }
        }
        assert!((plane - 1.0).abs() < 1e-12);
        let m3 = 100i64;
        let h3 = 0.2;
        let mut vol = 0.0;
        for i in -m3..=m3 {
            for j in -m3..=m3 {
                for l in -m3..=m3 {
                    vol += maxwellian_profile(&[i as f64 * h3, j as f64 * h3, l as f64 * h3]);
                }
            }
        }
        assert!((vol * h3.powi(3) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi_values() {
        assert_eq!(chi(5.0, 0.0), 5.0);
        assert!((chi(1.0, 1.0) - 0.632_120_558_828_557_7).abs() < 1e-15);
    }

    #[test]
    #[should_panic]
    fn chi_rejects_negative_time() {
        chi(-1.0, 0.1);
    }

    #[test]
    fn psi_limits() {
        assert_eq!(psi(0.0, 0.3), 0.0);
        assert!((psi(2.0, 0.0) - 8.0 / 3.0).abs() < 1e-10);
        assert!((psi(2.0, 1e-9) - 8.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn psi_branches_agree_at_switch() {
        let eps = 0.25;
        let t = PSI_SERIES_SWITCH / eps;
        let below = psi(t * (1.0 - 1e-12), eps);
        let above = psi(t * (1.0 + 1e-12), eps);
        assert!(((below - above) / above).abs() < 1e-10);
    }

    #[test]
    fn damping_exponent_zero_epsilon() {
        assert_eq!(fp_damping_exponent(3.0, &[2.0], Wavevector::d1(1), 0.0), 0.0);
    }

    #[test]
    fn damping_exponent_xi_zero_reduces_to_psi() {
        for &(t, eps, k) in &[(1.0, 0.1, 1i64), (4.0, 0.3, 2), (10.0, 0.05, 3)] {
            let d = fp_damping_exponent(t, &[0.0], Wavevector::d1(k), eps);
            let expect = eps * (k * k) as f64 * psi(t, eps);
            assert!(((d - expect) / expect).abs() < 1e-12);
        }
    }

    #[test]
    fn coulomb_symbol() {
        assert_eq!(coulomb_w(Wavevector::d1(1), 1.0).unwrap(), 1.0);
        assert!((coulomb_w(Wavevector::new(&[3, 4]).unwrap(), 1.0).unwrap() - 0.04).abs() < 1e-16);
        assert_eq!(coulomb_w(Wavevector::d1(2), 2.5).unwrap(), 0.625);
        assert_eq!(coulomb_w(Wavevector::d1(0), 1.0), Err(Error::ZeroMode));
    }

    #[test]
    fn params_validation() {
        assert!(PhysicalParams::new(1, Model::LinearBoltzmann, 0.1, 1.0, 1.0, 4).is_ok());
        assert!(PhysicalParams::new(1, Model::LinearBoltzmann, -0.1, 1.0, 1.0, 4).is_err());
        assert!(PhysicalParams::new(1, Model::LinearBoltzmann, 0.1, 0.0, 1.0, 4).is_err());
        assert!(PhysicalParams::new(2, Model::LinearBoltzmann, 0.1, 1.0, 1.0, 4).is_err());
        assert!(PhysicalParams::new(1, Model::LinearBoltzmann, 0.1, 1.0, 1.0, 2).is_err());
        assert!(PhysicalParams::new(4, Model::LinearBoltzmann, 0.1, 1.0, 3.0, 4).is_err());
    }

    #[test]
    fn frequency_half_plane() {
        assert!(Frequency::new(1.0, 0.0).is_ok());
        assert!(Frequency::new(1.0, -3.0).is_ok());
        assert!(Frequency::new(1.0, 1e-3).is_err());
    }

    #[test]
    fn initial_data_mean_zero() {
        let g = InitialDataFamily::gaussian_d1(1.0);
        let t = InitialDataFamily::sobolev_tail_d1(4, &[0, 1]);
        for fam in [&g, &t] {
            assert_eq!(initial_mode(fam, Wavevector::d1(0), &[0.0]), Complex64::new(0.0, 0.0));
        }
        assert_eq!(initial_mode(&g, Wavevector::d1(1), &[0.0]), Complex64::new(1.0, 0.0));
        // A Gaussian on k = 0 with p(0) ≠ 0 is not mean-zero.
        let bad = InitialDataFamily::new(
            Profile::GaussianHermite {
                poly: vec![Complex64::new(1.0, 0.0)],
                c: 0.5,
            },
            vec![ModeAmplitude {
                k: Wavevector::d1(0),
                amplitude: Complex64::new(1.0, 0.0),
            }],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn sobolev_tail_is_sharp() {
        let fam = InitialDataFamily::sobolev_tail_d1(4, &[1]);
        let reference = initial_mode(&fam, Wavevector::d1(1), &[10.0]).norm() * bracket(10.0).powi(5);
        let mut xi = 10.0;
        while xi <= 100.0 {
            let v = initial_mode(&fam, Wavevector::d1(1), &[xi]).norm() * bracket(xi).powi(5);
            assert!((v / reference - 1.0).abs() < 0.05, "xi = {xi}: {v} vs {reference}");
            xi += 1.0;
        }
    }

    #[test]
    fn window_is_smooth_step() {
        assert_eq!(smooth_window(0.0), 0.0);
        assert_eq!(smooth_window(1.0), 1.0);
        assert_eq!(smooth_window(3.0), 1.0);
        assert!((smooth_window(0.5) - 0.5).abs() < 1e-15);
        let mut prev = 0.0;
        for i in 1..100 {
            let w = smooth_window(i as f64 / 100.0);
            assert!(w >= prev);
            prev = w;
        }
    }

    #[test]
    fn wavevector_serde_roundtrip_shape() {
        let k = Wavevector::new(&[3, -4]).unwrap();
        assert_eq!(k.norm_sq(), 25.0);
        assert_eq!(k.components(), &[3, -4]);
        let v: Vec<i64> = k.into();
        assert_eq!(Wavevector::try_from(v).unwrap(), k);
    }
}
