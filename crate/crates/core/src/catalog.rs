//! Built-in models with their analytic data.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent on toolchains with float math in core
use num_traits::Float;

use crate::coeffs::{CoefficientModel, Decay, DriftGrowth, Dynamics, Growth, LocalNorms, Weight, WeightSpec};
use crate::sde::LyapunovForm;
use crate::singular;
use crate::{linalg, Error, Result};

fn identity_sigma(d: usize, out: &mut [f64]) {
    out.fill(0.0);
    for i in 0..d {
        out[i * d + i] = 1.0;
    }
}

/// `b = -kappa x + c` with `sigma = I`; `kappa = 0, c = 0` is the heat model
/// and `kappa < 0` is anti-dissipative.
#[derive(Clone, Copy, Debug)]
pub struct LinearDrift {
    pub dim: usize,
    pub kappa: f64,
}

impl Dynamics for LinearDrift {
    fn dim(&self) -> usize {
        self.dim
    }
    fn drift(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(x) {
            *o = -self.kappa * v;
        }
    }
    fn sigma(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
        identity_sigma(self.dim, out)
    }
    fn drift_jacobian(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
        identity_sigma(self.dim, out);
        for v in out.iter_mut() {
            *v *= -self.kappa;
        }
    }
    fn sigma_gradient(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0)
    }
    fn constant_sigma(&self) -> bool {
        true
    }
}

/// `b = -|x|^2 x`, `sigma = I`.
#[derive(Clone, Copy, Debug)]
pub struct CubicDrift {
    pub dim: usize,
}

impl Dynamics for CubicDrift {
    fn dim(&self) -> usize {
        self.dim
    }
    fn drift(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        let r2 = linalg::dot(x, x);
        for (o, v) in out.iter_mut().zip(x) {
            *o = -r2 * v;
        }
    }
    fn sigma(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
        identity_sigma(self.dim, out)
    }
    fn drift_jacobian(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        let r2 = linalg::dot(x, x);
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = -2.0 * x[i] * x[j] - if i == j { r2 } else { 0.0 };
            }
        }
    }
    fn sigma_gradient(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0)
    }
    fn constant_sigma(&self) -> bool {
        true
    }
}

/// `b = -x / sqrt(1 + |x|^2)`, a smoothed `-x/|x|`; `sigma = I`.
#[derive(Clone, Copy, Debug)]
pub struct GeometricDrift {
    pub dim: usize,
}

impl Dynamics for GeometricDrift {
    fn dim(&self) -> usize {
        self.dim
    }
    fn drift(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        let s = (1.0 + linalg::dot(x, x)).sqrt();
        for (o, v) in out.iter_mut().zip(x) {
            *o = -v / s;
        }
    }
    fn sigma(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
        identity_sigma(self.dim, out)
    }
    fn drift_jacobian(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        let u = 1.0 + linalg::dot(x, x);
        let s = u.sqrt();
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = x[i] * x[j] / (u * s) - if i == j { 1.0 / s } else { 0.0 };
            }
        }
    }
    fn sigma_gradient(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0)
    }
    fn constant_sigma(&self) -> bool {
        true
    }
}

/// One-dimensional `b(x) = sum_k c_k x^k` with constant `sigma = s`.
#[derive(Clone, Debug)]
pub struct PolynomialDrift {
    pub coeffs: Vec<f64>,
    pub sigma: f64,
}

impl PolynomialDrift {
    fn eval(&self, x: f64) -> (f64, f64) {
        let mut v = 0.0;
        let mut dv = 0.0;
        for &c in self.coeffs.iter().rev() {
            dv = dv * x + v;
            v = v * x + c;
        }
        (v, dv)
    }
}

impl Dynamics for PolynomialDrift {
    fn dim(&self) -> usize {
        1
    }
    fn drift(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        out[0] = self.eval(x[0]).0;
    }
    fn sigma(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
        out[0] = self.sigma;
    }
    fn drift_jacobian(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        out[0] = self.eval(x[0]).1;
    }
    fn sigma_gradient(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
        out[0] = 0.0;
    }
    fn constant_sigma(&self) -> bool {
        true
    }
}

fn unit_ellipticity(m: &mut CoefficientModel) {
    m.lambda_fn = Some(Arc::new(|_x: &[f64]| 1.0));
    m.big_lambda_fn = Some(Arc::new(|_x: &[f64]| 1.0));
    m.comparability = Some(1.0);
}

pub fn heat(dim: usize) -> CoefficientModel {
    let mut m = CoefficientModel::new(
        "heat",
        Arc::new(LinearDrift { dim, kappa: 0.0 }),
        1.0,
        f64::INFINITY,
        DriftGrowth::Bounded,
    )
    .expect("valid heat model");
    unit_ellipticity(&mut m);
    m.norms_fn = Some(Arc::new(|_x: &[f64]| LocalNorms {
        holder_a: 0.0,
        lp_b: 0.0,
        holder_b: 0.0,
    }));
    m
}

/// `dX = -kappa X dt + sqrt(2) dW`.
pub fn ou(dim: usize, kappa: f64) -> CoefficientModel {
    let name = if kappa >= 0.0 { "ou" } else { "anti" };
    let mut m = CoefficientModel::new(
        name,
        Arc::new(LinearDrift { dim, kappa }),
        1.0,
        f64::INFINITY,
        DriftGrowth::Linear,
    )
    .expect("valid linear model");
    unit_ellipticity(&mut m);
    let k = kappa.abs();
    m.norms_fn = Some(Arc::new(move |x: &[f64]| {
        let sup = k * (linalg::norm(x) + 1.0);
        LocalNorms {
            holder_a: 0.0,
            lp_b: sup,
            holder_b: sup + k,
        }
    }));
    m
}

/// `b = +x`: no invariant measure, fails every dissipativity condition.
pub fn anti(dim: usize) -> CoefficientModel {
    ou(dim, -1.0)
}

pub fn cubic(dim: usize) -> CoefficientModel {
    let mut m = CoefficientModel::new(
        "cubic",
        Arc::new(CubicDrift { dim }),
        1.0,
        f64::INFINITY,
        DriftGrowth::Superlinear,
    )
    .expect("valid cubic model");
    unit_ellipticity(&mut m);
    m.norms_fn = Some(Arc::new(|x: &[f64]| {
        let r = linalg::norm(x) + 1.0;
        LocalNorms {
            holder_a: 0.0,
            lp_b: r * r * r,
            holder_b: r * r * r + 3.0 * r * r,
        }
    }));
    m
}

pub fn geometric_drift(dim: usize) -> CoefficientModel {
    let mut m = CoefficientModel::new(
        "geometric_drift",
        Arc::new(GeometricDrift { dim }),
        1.0,
        f64::INFINITY,
        DriftGrowth::Bounded,
    )
    .expect("valid geometric model");
    unit_ellipticity(&mut m);
    m.norms_fn = Some(Arc::new(|x: &[f64]| {
        let r = linalg::norm(x);
        let far = r + 1.0;
        let near = (r - 1.0).max(0.0);
        let sup = far / (1.0 + far * far).sqrt();
        LocalNorms {
            holder_a: 0.0,
            lp_b: sup,
            holder_b: sup + 1.0 / (1.0 + near * near).sqrt(),
        }
    }));
    m
}

/// Inline one-dimensional model with polynomial drift and constant `sigma`.
pub fn polynomial_drift(name: impl Into<String>, coeffs: Vec<f64>, sigma: f64) -> Result<CoefficientModel> {
    if !(sigma != 0.0 && sigma.is_finite()) || coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::arg(
            "polynomial drift needs finite coefficients and nonzero sigma",
        ));
    }
    let degree = coeffs.iter().rposition(|c| *c != 0.0).unwrap_or(0);
    let growth = match degree {
        0 => DriftGrowth::Bounded,
        1 => DriftGrowth::Linear,
        _ => DriftGrowth::Superlinear,
    };
    let mut m = CoefficientModel::new(
        name,
        Arc::new(PolynomialDrift { coeffs, sigma }),
        1.0,
        f64::INFINITY,
        growth,
    )?;
    let s2 = sigma * sigma;
    m.lambda_fn = Some(Arc::new(move |_x: &[f64]| s2));
    m.big_lambda_fn = Some(Arc::new(move |_x: &[f64]| s2));
    m.comparability = Some(1.0);
    Ok(m)
}

/// Summary of a catalog model and its certified properties.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CatalogEntry {
    pub name: String,
    pub drift: String,
    pub sigma: String,
    pub alpha: f64,
    /// `None` for `p_b = inf` (locally bounded drift).
    pub p_b: Option<f64>,
    pub lambda: String,
    pub big_lambda: String,
    pub drift_growth: DriftGrowth,
    /// Lyapunov candidate and certified `(c0, c1)` in dimension one.
    pub lyapunov: Option<(LyapunovForm, f64, f64)>,
    pub ell0_family: String,
    pub ell1_family: String,
    /// Regularity index of the distributional drift component.
    pub alpha_b: Option<f64>,
}

pub const NAMES: [&str; 6] = ["heat", "ou", "cubic", "geometric_drift", "singular_v", "anti"];

pub fn entries() -> Vec<CatalogEntry> {
    let quad = LyapunovForm::Polynomial { p: 2.0 };
    let entry = |name: &str, drift: &str, growth, lyapunov, ell0: &str, ell1: &str| CatalogEntry {
        name: name.into(),
        drift: drift.into(),
        sigma: "I".into(),
        alpha: 1.0,
        p_b: None,
        lambda: "1".into(),
        big_lambda: "1".into(),
        drift_growth: growth,
        lyapunov,
        ell0_family: ell0.into(),
        ell1_family: ell1.into(),
        alpha_b: None,
    };
    let sing = singular::SingularDriftSpec::canonical(0.6);
    let mut v = alloc::vec![
        entry(
            "heat",
            "0",
            DriftGrowth::Bounded,
            Some((quad, 0.0, 2.0)),
            "1",
            "none (no invariant measure)"
        ),
        entry(
            "ou",
            "-x",
            DriftGrowth::Linear,
            Some((quad, -2.0, 4.0)),
            "exp(max(c0,0) t) + |c1| t",
            "exponential exp(-t)"
        ),
        entry(
            "cubic",
            "-|x|^2 x",
            DriftGrowth::Superlinear,
            Some((quad, -2.0, 4.5)),
            "exp(max(c0,0) t) + |c1| t",
            "exponential (fitted rate)",
        ),
        entry(
            "geometric_drift",
            "-x / sqrt(1 + |x|^2)",
            DriftGrowth::Bounded,
            None,
            "1 (bounded weights)",
            "polynomial (1 + t)^-gamma (fitted)",
        ),
        entry(
            "singular_v",
            "d/dx V (lacunary series, alpha' = 0.6) mollified at level n",
            DriftGrowth::Bounded,
            None,
            "n/a",
            "n/a",
        ),
        entry(
            "anti",
            "+x",
            DriftGrowth::Linear,
            None,
            "exp(2t)",
            "none (anti-dissipative)"
        ),
    ];
    v[4].alpha_b = Some(sing.alpha_b);
    v[4].p_b = Some(sing.p_b);
    v
}

/// Catalog model by name in dimension `dim` (`singular_v` is one-dimensional
/// and built at mollification level 16; see [`singular`] for other levels).
pub fn model(name: &str, dim: usize) -> Result<CoefficientModel> {
    if dim == 0 {
        return Err(Error::arg("dimension must be positive"));
    }
    match name {
        "heat" => Ok(heat(dim)),
        "ou" => Ok(ou(dim, 1.0)),
        "cubic" => Ok(cubic(dim)),
        "geometric_drift" => Ok(geometric_drift(dim)),
        "anti" => Ok(anti(dim)),
        "singular_v" => {
            if dim != 1 {
                return Err(Error::arg("singular_v is one-dimensional"));
            }
            singular::SingularDriftSpec::canonical(0.6).model(16)
        }
        other => Err(Error::Configuration(alloc::format!("unknown catalog model '{other}'"))),
    }
}

/// Default weights of a catalog model.
pub fn weights(name: &str, dim: usize) -> WeightSpec {
    let quad = Weight::Polynomial { p: 2.0 };
    match name {
        "ou" => WeightSpec {
            rho0: quad,
            rho1: quad,
            ell0: Growth::Lyapunov {
                c0: -2.0,
                c1: 2.0 * dim as f64 + 2.0,
            },
            ell1: Some(Decay::Exponential { gamma: 1.0, scale: 1.0 }),
            w_constant: None,
        },
        // LV = 2d - 2|x|^4 <= -2 (1 + |x|^2) + 2d + 5/2 for V = 1 + |x|^2.
        "cubic" => WeightSpec {
            rho0: quad,
            rho1: quad,
            ell0: Growth::Lyapunov {
                c0: -2.0,
                c1: 2.0 * dim as f64 + 2.5,
            },
            ..WeightSpec::default()
        },
        "anti" => WeightSpec {
            ell0: Growth::Exponential { rate: 2.0 },
            ..WeightSpec::default()
        },
        _ => WeightSpec::default(),
    }
}

/// True when the catalog model has no invariant probability measure.
pub fn lacks_invariant_measure(name: &str) -> bool {
    matches!(name, "heat" | "anti")
}
