#[allow(unused_imports)] // inherent on toolchains with float math in core
use num_traits::Float;

use crate::rng::PathRng;
use crate::{linalg, Error, Result};

/// Radial weight `rho(x) >= 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Weight {
    Unit,
    /// `(1 + |x|^2)^{p/2}`.
    Polynomial {
        p: f64,
    },
    /// `exp(gamma (1 + |x|^2)^{q/2})`.
    Exponential {
        gamma: f64,
        q: f64,
    },
}

impl Weight {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.radial(linalg::norm(x))
    }

    /// Value at any point with `|x| = r`.
    pub fn radial(&self, r: f64) -> f64 {
        match *self {
            Weight::Unit => 1.0,
            Weight::Polynomial { p } => (1.0 + r * r).powf(0.5 * p),
            Weight::Exponential { gamma, q } => (gamma * (1.0 + r * r).powf(0.5 * q)).exp(),
        }
    }

    /// `sup_{B_1(x)} rho`; exact because every weight is radially nondecreasing.
    pub fn sup_ball(&self, x: &[f64]) -> f64 {
        self.radial(linalg::norm(x) + 1.0)
    }

    pub fn inf_ball(&self, x: &[f64]) -> f64 {
        self.radial((linalg::norm(x) - 1.0).max(0.0))
    }
}

/// Increasing moment-growth function `l0(t) >= 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Growth {
    Unit,
    /// Synthesized from a Lyapunov pair: `exp(max(c0, 0) t) + |c1| t`.
    Lyapunov {
        c0: f64,
        c1: f64,
    },
    /// `exp(rate t)`, `rate >= 0`.
    Exponential {
        rate: f64,
    },
}

impl Growth {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Growth::Unit => 1.0,
            Growth::Lyapunov { c0, c1 } => (c0.max(0.0) * t).exp() + c1.abs() * t,
            Growth::Exponential { rate } => (rate.max(0.0) * t).exp(),
        }
    }
}

/// Decreasing ergodic rate `l1(t) > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Decay {
    /// `l1 = 1`: bounded but not integrable.
    Unit,
    /// `scale * exp(-gamma t)`.
    Exponential { gamma: f64, scale: f64 },
    /// `scale * (1 + t)^{-gamma}`.
    Polynomial { gamma: f64, scale: f64 },
}

impl Decay {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Decay::Unit => 1.0,
            Decay::Exponential { gamma, scale } => scale * (-gamma * t).exp(),
            Decay::Polynomial { gamma, scale } => scale * (1.0 + t).powf(-gamma),
        }
    }

    pub fn integrable(&self) -> bool {
        match *self {
            Decay::Unit => false,
            Decay::Exponential { gamma, .. } => gamma > 0.0,
            Decay::Polynomial { gamma, .. } => gamma > 1.0,
        }
    }

    /// `int_T^inf l1`, infinite when not integrable.
    pub fn tail_integral(&self, from: f64) -> f64 {
        if !self.integrable() {
            return f64::INFINITY;
        }
        match *self {
            Decay::Unit => f64::INFINITY,
            Decay::Exponential { gamma, scale } => scale * (-gamma * from).exp() / gamma,
            Decay::Polynomial { gamma, scale } => scale * (1.0 + from).powf(1.0 - gamma) / (gamma - 1.0),
        }
    }
}

/// Weights `rho0, rho1`, moment growth `l0` and ergodic decay `l1`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightSpec {
    pub rho0: Weight,
    pub rho1: Weight,
    pub ell0: Growth,
    pub ell1: Option<Decay>,
    /// Constant `c0` in `(0, 1]` certifying
    /// `c0 rho(x) <= inf_{B_1(x)} rho <= sup_{B_1(x)} rho <= rho(x) / c0`.
    pub w_constant: Option<f64>,
}

impl Default for WeightSpec {
    fn default() -> Self {
        WeightSpec {
            rho0: Weight::Unit,
            rho1: Weight::Unit,
            ell0: Growth::Unit,
            ell1: None,
            w_constant: None,
        }
    }
}

impl WeightSpec {
    /// `sup_{B_1(x)} rho1`.
    pub fn sup_rho1(&self, x: &[f64]) -> f64 {
        self.rho1.sup_ball(x)
    }

    /// Checks `rho0, rho1 >= 1` at the points and, if `w_constant` is set,
    /// the class condition for both weights with `samples` random `y` per point.
    pub fn check(&self, points: &[alloc::vec::Vec<f64>], samples: usize, seed: u64) -> Result<()> {
        for (i, x) in points.iter().enumerate() {
            for (name, w) in [("rho0", self.rho0), ("rho1", self.rho1)] {
                let v = w.eval(x);
                if !v.is_finite() {
                    return Err(Error::Evaluation { point: x.clone() });
                }
                if v < 1.0 {
                    return Err(Error::Assumption(alloc::format!("{name}({x:?}) = {v} < 1")));
                }
                if let Some(c0) = self.w_constant {
                    if !(c0 > 0.0 && c0 <= 1.0) {
                        return Err(Error::arg("w_constant must lie in (0, 1]"));
                    }
                    let mut rng = PathRng::new(seed, i as u64);
                    let mut y = x.clone();
                    for _ in 0..samples {
                        rng.fill_normal(&mut y);
                        let n = linalg::norm(&y).max(f64::MIN_POSITIVE);
                        let r = rng.uniform().powf(1.0 / x.len() as f64);
                        for (yk, xk) in y.iter_mut().zip(x) {
                            *yk = xk + *yk * r / n;
                        }
                        let wy = w.eval(&y);
                        if wy < c0 * v * (1.0 - 1e-12) || wy > v / c0 * (1.0 + 1e-12) {
                            return Err(Error::Assumption(alloc::format!(
                                "{name} leaves the class with c0 = {c0} near {x:?}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}
