//! Explicit bound functions with every unnamed absolute constant set to one.
//!
//! Notation: `Lambda_1 = Lambda + 1`, `theta_b = 1 - d/p_b` (minus `2/q_b`
//! for the space-time variants), norms are taken on `B_1(x)`.

use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent on toolchains with float math in core
use num_traits::Float;

use crate::coeffs::{CoefficientModel, LocalNorms, WeightSpec};
use crate::{Error, Result, CONSTANT_CONVENTION};

pub const DEFAULT_EPSILON: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundInputs {
    pub t: f64,
    pub x: Vec<f64>,
    pub dim: usize,
    pub alpha: f64,
    pub p_b: f64,
    /// Time integrability of the drift; `inf` for time-homogeneous models.
    pub q_b: f64,
    pub norms: LocalNorms,
    pub lambda: f64,
    pub big_lambda: f64,
    pub epsilon: f64,
    /// `(S, T)` for the space-time bounds; defaults to `(0, 2t)`.
    pub horizon: Option<(f64, f64)>,
    pub weights: Option<WeightSpec>,
    /// `|phi|_{B_rho0}` (or `|f|` for the Poisson bounds).
    pub phi_norm: f64,
    /// Certified ellipticity comparability constant `c0` on `B_1(x)`.
    pub comparability: Option<f64>,
    /// Advanced override of the integrability pair `(q, p)` in the gradient
    /// bound; replaces `Lambda_1^eps (Lambda_1/lambda)^{3 eps + d/p_b}` by
    /// `Lambda_1^{1/q} (Lambda_1/lambda)^{2/q + d/p}`.
    pub qp_override: Option<(f64, f64)>,
}

impl BoundInputs {
    pub fn new(t: f64, x: Vec<f64>, alpha: f64, p_b: f64, norms: LocalNorms, lambda: f64, big_lambda: f64) -> Self {
        BoundInputs {
            t,
            dim: x.len(),
            x,
            alpha,
            p_b,
            q_b: f64::INFINITY,
            norms,
            lambda,
            big_lambda,
            epsilon: DEFAULT_EPSILON,
            horizon: None,
            weights: None,
            phi_norm: 1.0,
            comparability: None,
            qp_override: None,
        }
    }

    /// Inputs for `model` at `(t, x)` with the given local norms.
    pub fn from_model(model: &CoefficientModel, t: f64, x: &[f64], norms: LocalNorms) -> Result<Self> {
        let (lambda, big_lambda) = model.ellipticity(x)?;
        let mut inp = BoundInputs::new(t, x.to_vec(), model.alpha, model.p_b, norms, lambda, big_lambda);
        inp.comparability = model.comparability;
        Ok(inp)
    }

    pub fn at_time(&self, t: f64) -> Self {
        BoundInputs { t, ..self.clone() }
    }

    fn big_lambda1(&self) -> f64 {
        self.big_lambda + 1.0
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::arg("lambda must be positive"));
        }
        if !(self.lambda <= self.big_lambda) {
            return Err(Error::arg("lambda must not exceed Lambda"));
        }
        if !(self.t > 0.0) {
            return Err(Error::arg("t must be positive"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::arg("alpha must lie in (0, 1]"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::arg("epsilon must be positive"));
        }
        let n = &self.norms;
        for (name, v) in [("holder_a", n.holder_a), ("lp_b", n.lp_b), ("holder_b", n.holder_b)] {
            if !(v >= 0.0) {
                return Err(Error::arg(alloc::format!("{name} must be nonnegative")));
            }
        }
        if !self.norms.holder_a.is_finite() {
            return Err(Error::arg("[a]_{C^alpha} is unbounded above budget"));
        }
        Ok(())
    }

    /// `1 - d/p_b`.
    pub fn theta_b(&self) -> Result<f64> {
        let th = 1.0 - self.dim as f64 / self.p_b;
        if th > 0.0 {
            Ok(th)
        } else {
            Err(Error::ExponentRegime(alloc::format!(
                "theta_b = 1 - d/p_b = {th} is not positive (d = {}, p_b = {})",
                self.dim,
                self.p_b
            )))
        }
    }

    /// `1 - d/p_b - 2/q_b`.
    pub fn theta_b_space_time(&self) -> Result<f64> {
        let th = 1.0 - self.dim as f64 / self.p_b - 2.0 / self.q_b;
        if th > 0.0 {
            Ok(th)
        } else {
            Err(Error::ExponentRegime(alloc::format!(
                "theta_b = 1 - d/p_b - 2/q_b = {th} is not positive"
            )))
        }
    }

    fn weights(&self) -> Result<&WeightSpec> {
        self.weights
            .as_ref()
            .ok_or_else(|| Error::Configuration("weights (rho0, rho1, l0) are required for this bound".into()))
    }

    fn diffusion_term(&self) -> f64 {
        let a = self.norms.holder_a;
        if a == 0.0 {
            return 0.0;
        }
        self.big_lambda1() * a.powf(1.0 / self.alpha) / self.lambda.powf(1.0 + 1.0 / self.alpha)
    }

    fn horizon_or_default(&self) -> (f64, f64) {
        self.horizon.unwrap_or((0.0, 2.0 * self.t))
    }
}

fn gamma_at(inp: &BoundInputs, t: f64) -> Result<f64> {
    inp.validate()?;
    let theta = inp.theta_b()?;
    if !inp.norms.lp_b.is_finite() {
        return Err(Error::arg("|b|_{L^p_b} is unbounded above budget"));
    }
    let drift = (inp.norms.lp_b / inp.lambda).powf(1.0 / theta);
    Ok(t.min(1.0).sqrt() * (inp.diffusion_term() + drift) + inp.big_lambda1() / inp.lambda)
}

fn gamma_tilde_at(inp: &BoundInputs, t: f64) -> Result<f64> {
    inp.validate()?;
    if !inp.norms.holder_b.is_finite() {
        return Err(Error::arg("|b|_{C^alpha} must be finite"));
    }
    let drift = inp.norms.holder_b / inp.lambda;
    Ok(t.min(1.0).sqrt() * (inp.diffusion_term() + drift) + inp.big_lambda1() / inp.lambda)
}

/// `Gamma_t(x)`.
pub fn gamma_t(inp: &BoundInputs) -> Result<f64> {
    gamma_at(inp, inp.t)
}

/// `Gamma~_t(x)`, the Hoelder-drift variant.
pub fn gamma_tilde_t(inp: &BoundInputs) -> Result<f64> {
    gamma_tilde_at(inp, inp.t)
}

/// `R_0 = sqrt(T - t) / (sqrt(T - S) v 1)` after checking
/// `t in [(T + S)/2, T)`.
fn r0_checked(inp: &BoundInputs) -> Result<(f64, f64, f64)> {
    let (s, tt) = inp.horizon_or_default();
    let t = inp.t;
    if !(s < tt) || !(t >= 0.5 * (s + tt) && t < tt) {
        return Err(Error::Domain(alloc::format!(
            "t = {t} must lie in [(T+S)/2, T) for (S, T) = ({s}, {tt})"
        )));
    }
    let r0 = (tt - t).sqrt() / (tt - s).sqrt().max(1.0);
    Ok((s, tt, r0))
}

/// `G_t(x)` for the space-time gradient estimate. The drift norm on the
/// cylinder `Q_{R_0}` is bounded by `(2 R_0^2)^{1/q_b} |b|_{L^{p_b}(B_1(x))}`.
pub fn cal_g(inp: &BoundInputs) -> Result<f64> {
    inp.validate()?;
    let (s, tt, r0) = r0_checked(inp)?;
    let theta = inp.theta_b_space_time()?;
    if !inp.norms.lp_b.is_finite() {
        return Err(Error::arg("|b|_{L^p_b} is unbounded above budget"));
    }
    let l1 = inp.big_lambda1();
    let (cyl, scale) = if inp.q_b.is_infinite() {
        (1.0, 1.0)
    } else {
        ((2.0 * r0 * r0).powf(1.0 / inp.q_b), l1.powf(1.0 / inp.q_b))
    };
    let drift = (inp.norms.lp_b * cyl * scale / inp.lambda).powf(1.0 / theta);
    Ok((tt - s).sqrt().min(1.0) * (inp.diffusion_term() + drift) + l1 / inp.lambda)
}

/// `H(x)` for the space-time Hessian estimate.
pub fn cal_h(inp: &BoundInputs) -> Result<f64> {
    inp.validate()?;
    let (s, tt, _) = r0_checked(inp)?;
    if !inp.norms.holder_b.is_finite() {
        return Err(Error::arg("|b|_{C^alpha} must be finite"));
    }
    Ok(
        (tt - s).sqrt().min(1.0) * (inp.diffusion_term() + inp.norms.holder_b / inp.lambda)
            + inp.big_lambda1() / inp.lambda,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RadiusCase {
    Gradient,
    Hessian,
}

/// `(R_0, R)` with `R = Lambda_1 R_0 / (lambda G)` (or `H` for the Hessian).
pub fn radius_select(inp: &BoundInputs, case: RadiusCase) -> Result<(f64, f64)> {
    let (_, _, r0) = r0_checked(inp)?;
    let denom = match case {
        RadiusCase::Gradient => cal_g(inp)?,
        RadiusCase::Hessian => cal_h(inp)?,
    };
    Ok((r0, inp.big_lambda1() * r0 / (inp.lambda * denom)))
}

fn gradient_factor(inp: &BoundInputs) -> Result<f64> {
    let l1 = inp.big_lambda1();
    let ratio = l1 / inp.lambda;
    match inp.qp_override {
        None => Ok(l1.powf(inp.epsilon) * ratio.powf(3.0 * inp.epsilon + inp.dim as f64 / inp.p_b)),
        Some((q, p)) => {
            if !(q > 1.0 && q.is_finite() && p > 1.0 && p.is_finite() && p <= inp.p_b) {
                return Err(Error::arg("override needs q in (1, inf) and p in (1, p_b]"));
            }
            let theta = 1.0 - inp.dim as f64 / p - 2.0 / q;
            if theta <= 0.0 {
                return Err(Error::ExponentRegime(alloc::format!(
                    "override (q, p) = ({q}, {p}) gives 1 - d/p - 2/q = {theta}"
                )));
            }
            Ok(l1.powf(1.0 / q) * ratio.powf(2.0 / q + inp.dim as f64 / p))
        }
    }
}

/// Short-time gradient right-hand side.
pub fn grad_rhs(inp: &BoundInputs) -> Result<f64> {
    let w = inp.weights()?;
    let g = gamma_t(inp)?;
    Ok(
        gradient_factor(inp)? * g / inp.t.min(1.0).sqrt()
            * w.ell0.eval(2.0 * inp.t)
            * w.sup_rho1(&inp.x)
            * inp.phi_norm,
    )
}

fn check_beta(inp: &BoundInputs, beta: f64) -> Result<()> {
    if beta != 0.0 && beta != inp.alpha {
        return Err(Error::arg(alloc::format!("beta must be 0 or alpha = {}", inp.alpha)));
    }
    match inp.comparability {
        Some(c) if c > 0.0 && c <= 1.0 => Ok(()),
        _ => Err(Error::Assumption(
            "Hessian bounds need a certified ellipticity comparability constant on B_1(x)".into(),
        )),
    }
}

/// Short-time Hessian right-hand side, `beta in {0, alpha}`.
pub fn hess_rhs(inp: &BoundInputs, beta: f64) -> Result<f64> {
    check_beta(inp, beta)?;
    let w = inp.weights()?;
    let g = gamma_tilde_t(inp)?;
    Ok((g / inp.t.min(1.0).sqrt()).powf(2.0 + beta) * w.ell0.eval(2.0 * inp.t) * w.sup_rho1(&inp.x) * inp.phi_norm)
}

fn long_time_prefactor(inp: &BoundInputs) -> Result<f64> {
    if !(inp.t > 2.0) {
        return Err(Error::Domain(alloc::format!(
            "long-time bounds need t > 2, got {}",
            inp.t
        )));
    }
    let ell1 = inp
        .weights()?
        .ell1
        .ok_or_else(|| Error::Configuration("long-time bounds need an ergodic rate l1".into()))?;
    Ok(ell1.eval(inp.t - 1.0))
}

/// Long-time gradient right-hand side: `l1(t-1)` times the `t = 1` gradient
/// factor without the moment growth `l0`.
pub fn longtime_grad_rhs(inp: &BoundInputs) -> Result<f64> {
    let pre = long_time_prefactor(inp)?;
    let w = inp.weights()?;
    Ok(pre * gradient_factor(inp)? * gamma_at(inp, 1.0)? * w.sup_rho1(&inp.x) * inp.phi_norm)
}

/// Long-time Hessian right-hand side, `beta in {0, alpha}`.
pub fn longtime_hess_rhs(inp: &BoundInputs, beta: f64) -> Result<f64> {
    check_beta(inp, beta)?;
    let pre = long_time_prefactor(inp)?;
    let w = inp.weights()?;
    Ok(pre * gamma_tilde_at(inp, 1.0)?.powf(2.0 + beta) * w.sup_rho1(&inp.x) * inp.phi_norm)
}

fn require_integrable(inp: &BoundInputs) -> Result<&WeightSpec> {
    let w = inp.weights()?;
    match w.ell1 {
        Some(d) if d.integrable() => Ok(w),
        _ => Err(Error::Assumption(
            "the ergodic rate l1 must be integrable on [0, inf)".into(),
        )),
    }
}

/// Gradient bound for the Poisson solution `u = int_0^inf T_t f dt`.
pub fn poisson_grad_rhs(inp: &BoundInputs) -> Result<f64> {
    let w = require_integrable(inp)?;
    Ok(gamma_at(inp, 1.0)? * gradient_factor(inp)? * w.sup_rho1(&inp.x) * inp.phi_norm)
}

/// `C^{2+alpha}(B_{1/2}(x))` bound for the Poisson solution.
pub fn schauder_rhs(inp: &BoundInputs) -> Result<f64> {
    let w = require_integrable(inp)?;
    check_beta(inp, inp.alpha)?;
    let g = gamma_tilde_at(inp, 1.0)?;
    Ok((g.powf(2.0 + inp.alpha) * w.rho1.eval(&inp.x) + w.rho0.eval(&inp.x) / inp.lambda) * inp.phi_norm)
}

/// Every bound at one `(t, x)`. Right-hand sides whose hypotheses fail are
/// `None`, with the reason in `notes`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundReport {
    pub t: f64,
    pub x: Vec<f64>,
    pub gamma_t: f64,
    pub gamma_tilde_t: Option<f64>,
    pub cal_g: Option<f64>,
    pub cal_h: Option<f64>,
    pub r0: Option<f64>,
    pub r: Option<f64>,
    pub grad_rhs: Option<f64>,
    pub hess_rhs: Option<f64>,
    pub hess_beta: f64,
    pub longtime_grad_rhs: Option<f64>,
    pub longtime_hess_rhs: Option<f64>,
    pub poisson_grad_rhs: Option<f64>,
    pub schauder_rhs: Option<f64>,
    pub constant_convention: String,
    pub notes: Vec<String>,
}

/// Evaluates every bound. Fails only if `Gamma_t` itself cannot be formed.
pub fn bound_report(inp: &BoundInputs, beta: f64) -> Result<BoundReport> {
    let gamma_t = gamma_t(inp)?;
    let mut notes = Vec::new();
    let mut keep = |name: &str, r: Result<f64>| match r {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(alloc::format!("{name}: {e}"));
            None
        }
    };
    let radius = radius_select(inp, RadiusCase::Gradient);
    let (r0, r) = match radius {
        Ok((a, b)) => (Some(a), Some(b)),
        Err(e) => {
            keep("radius", Err(e));
            (None, None)
        }
    };
    Ok(BoundReport {
        t: inp.t,
        x: inp.x.clone(),
        gamma_t,
        gamma_tilde_t: keep("gamma_tilde_t", gamma_tilde_t(inp)),
        cal_g: keep("cal_g", cal_g(inp)),
        cal_h: keep("cal_h", cal_h(inp)),
        r0,
        r,
        grad_rhs: keep("grad_rhs", grad_rhs(inp)),
        hess_rhs: keep("hess_rhs", hess_rhs(inp, beta)),
        hess_beta: beta,
        longtime_grad_rhs: keep("longtime_grad_rhs", longtime_grad_rhs(inp)),
        longtime_hess_rhs: keep("longtime_hess_rhs", longtime_hess_rhs(inp, beta)),
        poisson_grad_rhs: keep("poisson_grad_rhs", poisson_grad_rhs(inp)),
        schauder_rhs: keep("schauder_rhs", schauder_rhs(inp)),
        constant_convention: CONSTANT_CONVENTION.into(),
        notes,
    })
}
