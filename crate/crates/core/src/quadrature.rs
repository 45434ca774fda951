//! Globally adaptive Gauss–Kronrod (7/15) quadrature for complex integrands.

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Integral value with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Initial panels are no longer than this.
    pub max_initial_panel: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-12,
            rel_tol: 0.0,
            max_initial_panel: f64::INFINITY,
            max_panels: 20_000,
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One 15-point Kronrod panel with the embedded 7-point Gauss estimate.
pub fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Estimate {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kron += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    Estimate {
        value: kron,
        error: (kron - gauss).norm(),
    }
}

/// Integrates `f` over `[a, b]` until the summed panel error meets
/// `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<Estimate> {
    if b <= a {
        return Ok(Estimate {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
        });
    }
    let n0 = if opts.max_initial_panel.is_finite() && opts.max_initial_panel > 0.0 {
        ((b - a) / opts.max_initial_panel).ceil().max(1.0) as usize
    } else {
        1
    };
    let width = (b - a) / n0 as f64;
    let mut heap = BinaryHeap::with_capacity(2 * n0 + 16);
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for i in 0..n0 {
        let pa = a + width * i as f64;
        let pb = if i + 1 == n0 { b } else { pa + width };
        let e = gk15(&f, pa, pb);
        total += e.value;
        err += e.error;
        heap.push(Panel {
            a: pa,
            b: pb,
            value: e.value,
            error: e.error,
        });
    }
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * total.norm());
        if err <= tol {
            return Ok(Estimate { value: total, error: err });
        }
        if heap.len() >= opts.max_panels {
            return Err(Error::Quadrature {
                tol,
                estimate: err,
                panels: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel cannot be split further in floating point.
            return Err(Error::Quadrature {
                tol,
                estimate: err,
                panels: heap.len() + 1,
            });
        }
        let left = gk15(&f, worst.a, mid);
        let right = gk15(&f, mid, worst.b);
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: left.value,
            error: left.error,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: right.value,
            error: right.error,
        });
    }
}

/// Real-valued convenience wrapper.
pub fn integrate_real<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<(f64, f64)> {
    let e = integrate(|t| Complex64::new(f(t), 0.0), a, b, opts)?;
    Ok((e.value.re, e.error))
}
