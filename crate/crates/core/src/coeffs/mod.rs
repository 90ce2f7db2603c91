//! Coefficient models, local norms on unit balls, weight classes and
//! anisotropic space-time norms.

mod aniso;
mod norms;
mod weights;

pub use aniso::{anisotropic_norm, Cylinder, SpaceTimeGrid};
pub use norms::{
    ellipticity_comparability, local_holder_seminorm, local_lp_norm, local_norms, unit_ball_volume, weighted_sup_norm,
    LocalNormReport, LocalNorms, NormMethod, UNBOUNDED_CAP,
};
pub use weights::{Decay, Growth, Weight, WeightSpec};

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg;
use crate::{Error, Result};

/// Bump used when a model has no analytic derivatives.
pub const FD_BUMP: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DriftGrowth {
    Bounded,
    Linear,
    Superlinear,
}

/// Drift `b(t, x)` and diffusion `sigma(t, x)` of `dX = b dt + sqrt(2) sigma dW`.
///
/// Matrices are row-major `d x d`.
pub trait Dynamics: Send + Sync {
    fn dim(&self) -> usize;

    fn drift(&self, t: f64, x: &[f64], out: &mut [f64]);

    fn sigma(&self, t: f64, x: &[f64], out: &mut [f64]);

    /// `out[i * d + j] = d b_i / d x_j`.
    fn drift_jacobian(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        fd_jacobian(d, d, x, |y, o| self.drift(t, y, o), out);
    }

    /// `out[(k * d + i) * d + m] = d sigma_{im} / d x_k`.
    fn sigma_gradient(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        let mut jac = vec![0.0; d * d * d];
        fd_jacobian(d * d, d, x, |y, o| self.sigma(t, y, o), &mut jac);
        // jac is (d*d) x d: jac[(i*d+m)*d + k]
        for k in 0..d {
            for im in 0..d * d {
                out[k * d * d + im] = jac[im * d + k];
            }
        }
    }

    /// True when sigma does not depend on `(t, x)`; lets steppers skip `D sigma`.
    fn constant_sigma(&self) -> bool {
        false
    }
}

/// Central-difference Jacobian of `f: R^d -> R^m`, `out[i * d + j] = d f_i / d x_j`.
pub fn fd_jacobian<F: Fn(&[f64], &mut [f64])>(m: usize, d: usize, x: &[f64], f: F, out: &mut [f64]) {
    let mut y = x.to_vec();
    let mut fp = vec![0.0; m];
    let mut fm = vec![0.0; m];
    for j in 0..d {
        let h = FD_BUMP * (1.0 + x[j].abs());
        y[j] = x[j] + h;
        f(&y, &mut fp);
        y[j] = x[j] - h;
        f(&y, &mut fm);
        y[j] = x[j];
        for i in 0..m {
            out[i * d + j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
}

/// Dynamics given by closures, for inline and test models.
pub struct FnDynamics<B, S> {
    pub dim: usize,
    pub drift: B,
    pub sigma: S,
    pub constant_sigma: bool,
}

impl<B, S> Dynamics for FnDynamics<B, S>
where
    B: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
    S: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn drift(&self, t: f64, x: &[f64], out: &mut [f64]) {
        (self.drift)(t, x, out)
    }
    fn sigma(&self, t: f64, x: &[f64], out: &mut [f64]) {
        (self.sigma)(t, x, out)
    }
    fn constant_sigma(&self) -> bool {
        self.constant_sigma
    }
}

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type NormsFn = Arc<dyn Fn(&[f64]) -> LocalNorms + Send + Sync>;

/// A diffusion model together with the analytic data the bounds need.
#[derive(Clone)]
pub struct CoefficientModel {
    pub name: String,
    pub dim: usize,
    /// Hoelder exponent of `a` (and of `b` for Hessian bounds), in `(0, 1]`.
    pub alpha: f64,
    /// Integrability exponent of the drift, in `(d, inf]`.
    pub p_b: f64,
    pub time_homogeneous: bool,
    pub drift_growth: DriftGrowth,
    /// Closed-form lower ellipticity `lambda(x)`.
    pub lambda_fn: Option<ScalarFn>,
    /// Closed-form upper ellipticity `Lambda(x)`.
    pub big_lambda_fn: Option<ScalarFn>,
    /// Closed-form local norms on `B_1(x)`; overrides estimation.
    pub norms_fn: Option<NormsFn>,
    /// Certified constant `c0` with `c0 lambda(x) <= inf_{B_1(x)} lambda`.
    pub comparability: Option<f64>,
    pub dynamics: Arc<dyn Dynamics>,
}

impl core::fmt::Debug for CoefficientModel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("CoefficientModel")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("alpha", &self.alpha)
            .field("p_b", &self.p_b)
            .field("drift_growth", &self.drift_growth)
            .finish_non_exhaustive()
    }
}

impl CoefficientModel {
    /// A model with no analytic metadata beyond `alpha` and `p_b`.
    pub fn new(
        name: impl Into<String>,
        dynamics: Arc<dyn Dynamics>,
        alpha: f64,
        p_b: f64,
        growth: DriftGrowth,
    ) -> Result<Self> {
        let dim = dynamics.dim();
        if dim == 0 {
            return Err(Error::arg("dimension must be positive"));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::arg("alpha must lie in (0, 1]"));
        }
        if !(p_b > dim as f64) {
            return Err(Error::arg("p_b must exceed the dimension"));
        }
        Ok(CoefficientModel {
            name: name.into(),
            dim,
            alpha,
            p_b,
            time_homogeneous: true,
            drift_growth: growth,
            lambda_fn: None,
            big_lambda_fn: None,
            norms_fn: None,
            comparability: None,
            dynamics,
        })
    }

    #[inline]
    pub fn drift(&self, t: f64, x: &[f64], out: &mut [f64]) {
        self.dynamics.drift(t, x, out)
    }

    #[inline]
    pub fn sigma(&self, t: f64, x: &[f64], out: &mut [f64]) {
        self.dynamics.sigma(t, x, out)
    }

    /// `a = sigma sigma^T`.
    pub fn diffusion(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        let mut s = vec![0.0; d * d];
        self.sigma(t, x, &mut s);
        linalg::outer_self(d, &s, out);
    }

    /// `(lambda(x), Lambda(x))`: closed forms if present, else the extreme
    /// eigenvalues of `a(0, x)`.
    pub fn ellipticity(&self, x: &[f64]) -> Result<(f64, f64)> {
        let (lo, hi) = match (&self.lambda_fn, &self.big_lambda_fn) {
            (Some(l), Some(u)) => (l(x), u(x)),
            (l, u) => {
                let d = self.dim;
                let mut a = vec![0.0; d * d];
                self.diffusion(0.0, x, &mut a);
                let eig = linalg::sym_eigenvalues(d, &a);
                (
                    l.as_ref().map_or(eig[0], |f| f(x)),
                    u.as_ref().map_or(eig[d - 1], |f| f(x)),
                )
            }
        };
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Evaluation { point: x.to_vec() });
        }
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::Assumption(alloc::format!(
                "ellipticity fails at {x:?}: lambda = {lo}, Lambda = {hi}"
            )));
        }
        Ok((lo, hi))
    }

    /// Checks `lambda |xi|^2 <= <a xi, xi> <= Lambda |xi|^2` at the given
    /// points for random directions, to relative tolerance `1e-10`.
    pub fn check_ellipticity(&self, points: &[Vec<f64>], directions: usize, seed: u64) -> Result<()> {
        let d = self.dim;
        let mut a = vec![0.0; d * d];
        let mut ax = vec![0.0; d];
        let mut xi = vec![0.0; d];
        for (i, x) in points.iter().enumerate() {
            let (lo, hi) = self.ellipticity(x)?;
            self.diffusion(0.0, x, &mut a);
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::Evaluation { point: x.clone() });
            }
            let mut rng = crate::rng::PathRng::new(seed, i as u64);
            for _ in 0..directions {
                rng.fill_normal(&mut xi);
                let n2 = linalg::dot(&xi, &xi);
                linalg::mat_vec(d, &a, &xi, &mut ax);
                let q = linalg::dot(&xi, &ax);
                if q < lo * n2 * (1.0 - 1e-10) || q > hi * n2 * (1.0 + 1e-10) {
                    return Err(Error::Assumption(alloc::format!(
                        "quadratic form {q} outside [{}, {}] at {x:?}",
                        lo * n2,
                        hi * n2
                    )));
                }
            }
        }
        Ok(())
    }
}
