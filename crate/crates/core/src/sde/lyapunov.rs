use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent on toolchains with float math in core
use num_traits::Float;

use crate::coeffs::CoefficientModel;
use crate::stats::linear_fit;
use crate::{linalg, Error, Result};

/// A Lyapunov candidate `V >= 1` with first and second derivatives.
pub trait LyapunovFunction {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
    /// Row-major Hessian.
    fn hessian(&self, x: &[f64], out: &mut [f64]);
    /// Whether a sample point is usable (finite, not overflowing).
    fn admissible(&self, _x: &[f64]) -> bool {
        true
    }
}

/// The radial candidates used throughout: `(1 + |x|^2)^{p/2}` and
/// `exp(gamma (1 + |x|^2)^{q/2})`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum LyapunovForm {
    Polynomial { p: f64 },
    Exponential { gamma: f64, q: f64 },
}

/// Exponential candidates are only evaluated where `ln V` stays below this.
pub const MAX_LOG_V: f64 = 600.0;

impl LyapunovForm {
    /// `(f(u), f'(u), f''(u))` for `V = f(u)`, `u = 1 + |x|^2`.
    fn profile(&self, u: f64) -> (f64, f64, f64) {
        match *self {
            LyapunovForm::Polynomial { p } => {
                let h = 0.5 * p;
                (u.powf(h), h * u.powf(h - 1.0), h * (h - 1.0) * u.powf(h - 2.0))
            }
            LyapunovForm::Exponential { gamma, q } => {
                let h = 0.5 * q;
                let g = gamma * u.powf(h);
                let g1 = gamma * h * u.powf(h - 1.0);
                let g2 = gamma * h * (h - 1.0) * u.powf(h - 2.0);
                let v = g.exp();
                (v, v * g1, v * (g2 + g1 * g1))
            }
        }
    }
}

impl LyapunovFunction for LyapunovForm {
    fn value(&self, x: &[f64]) -> f64 {
        self.profile(1.0 + linalg::dot(x, x)).0
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let (_, f1, _) = self.profile(1.0 + linalg::dot(x, x));
        for (o, v) in out.iter_mut().zip(x) {
            *o = 2.0 * f1 * v;
        }
    }

    fn hessian(&self, x: &[f64], out: &mut [f64]) {
        let d = x.len();
        let (_, f1, f2) = self.profile(1.0 + linalg::dot(x, x));
        for i in 0..d {
            for j in 0..d {
                let delta = if i == j { 2.0 * f1 } else { 0.0 };
                out[i * d + j] = delta + 4.0 * f2 * x[i] * x[j];
            }
        }
    }

    fn admissible(&self, x: &[f64]) -> bool {
        match *self {
            LyapunovForm::Polynomial { .. } => true,
            LyapunovForm::Exponential { gamma, q } => gamma * (1.0 + linalg::dot(x, x)).powf(0.5 * q) <= MAX_LOG_V,
        }
    }
}

/// Constants with `LV <= c0 V + c1` on every used sample.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LyapunovFit {
    pub c0: f64,
    pub c1: f64,
    /// Amount by which the least-squares `c1` had to be raised.
    pub lift: f64,
    pub points_used: usize,
}

/// `LV = tr(a D^2 V) + b . DV` at `x` (time 0).
pub fn generator_on<V: LyapunovFunction + ?Sized>(model: &CoefficientModel, v: &V, x: &[f64]) -> f64 {
    let d = model.dim;
    let mut a = vec![0.0; d * d];
    let mut hv = vec![0.0; d * d];
    let mut b = vec![0.0; d];
    let mut g = vec![0.0; d];
    model.diffusion(0.0, x, &mut a);
    model.drift(0.0, x, &mut b);
    v.hessian(x, &mut hv);
    v.gradient(x, &mut g);
    let tr: f64 = (0..d * d).map(|k| a[k] * hv[k]).sum();
    tr + linalg::dot(&b, &g)
}

/// Least-squares `(c0, c1)` for `LV ~ c0 V + c1` over the samples, with `c1`
/// then raised so the inequality holds at every sample. Fails with
/// [`Error::Infeasible`] when `c0 > c0_cap`.
pub fn lyapunov_fit<V: LyapunovFunction + ?Sized>(
    model: &CoefficientModel,
    v: &V,
    samples: &[Vec<f64>],
    c0_cap: f64,
) -> Result<LyapunovFit> {
    let mut vs = Vec::with_capacity(samples.len());
    let mut lv = Vec::with_capacity(samples.len());
    for x in samples.iter().filter(|x| v.admissible(x)) {
        let val = v.value(x);
        let l = generator_on(model, v, x);
        if !val.is_finite() || !l.is_finite() {
            return Err(Error::Evaluation { point: x.clone() });
        }
        if val < 1.0 {
            return Err(Error::arg(alloc::format!("V({x:?}) = {val} < 1")));
        }
        vs.push(val);
        lv.push(l);
    }
    if vs.is_empty() {
        return Err(Error::arg("no admissible sample points"));
    }
    let (c0, c1) = match linear_fit(&vs, &lv) {
        Some(f) => (f.slope, f.intercept),
        None => (0.0, lv.iter().sum::<f64>() / lv.len() as f64),
    };
    let lift = vs
        .iter()
        .zip(&lv)
        .map(|(val, l)| l - c0 * val - c1)
        .fold(0.0f64, f64::max);
    if c0 > c0_cap {
        return Err(Error::Infeasible(alloc::format!(
            "fitted c0 = {c0} exceeds the cap {c0_cap}"
        )));
    }
    Ok(LyapunovFit {
        c0,
        c1: c1 + lift,
        lift,
        points_used: vs.len(),
    })
}
