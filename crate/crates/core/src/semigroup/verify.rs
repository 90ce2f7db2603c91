//! Measured derivatives against the bound right-hand sides on a `(t, x)` grid.

use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent on toolchains with float math in core
use num_traits::Float;

use super::{gradient_bismut_at_times, gradient_fd_at_times, hessian_fd_at_times, hessian_holder_seminorm};
use super::{DerivativeEstimate, Estimator, EstimatorConfig};
use crate::bounds::{self, BoundInputs};
use crate::coeffs::{local_norms, CoefficientModel, WeightSpec};
use crate::stats::{grouped_slope_fit, LinearFit};
use crate::{Error, Observable, Result, CONSTANT_CONVENTION};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BoundKind {
    GradShort,
    HessShort,
    GradLong,
    HessLong,
}

impl BoundKind {
    pub fn is_long(&self) -> bool {
        matches!(self, BoundKind::GradLong | BoundKind::HessLong)
    }

    pub fn is_hessian(&self) -> bool {
        matches!(self, BoundKind::HessShort | BoundKind::HessLong)
    }
}

/// Largest tolerated downward slope of `log ratio` against `log t` on the
/// short-time leg (an upward trend as `t -> 0`).
pub const RATIO_SLOPE_TOLERANCE: f64 = 0.05;

/// Smallest accepted slope of `log measured` against `log l1(t - 1)` on the
/// long-time leg.
pub const DECAY_SLOPE_MIN: f64 = 0.9;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VerifyConfig {
    pub estimator: EstimatorConfig,
    /// Gradient estimator; Hessians always use finite differences.
    pub gradient: Estimator,
    /// `None` picks the default bump per time.
    pub bump: Option<f64>,
    pub weights: WeightSpec,
    /// `0` bounds the Hessian itself, `alpha` its Hoelder seminorm.
    pub beta: f64,
    /// Centering constant subtracted from `phi` on the long-time leg.
    pub centering: Option<f64>,
    pub norm_pairs: usize,
    pub norm_nodes: usize,
}

impl VerifyConfig {
    pub fn new(estimator: EstimatorConfig, weights: WeightSpec) -> Self {
        VerifyConfig {
            estimator,
            gradient: Estimator::FdCrn,
            bump: None,
            weights,
            beta: 0.0,
            centering: None,
            norm_pairs: 256,
            norm_nodes: 512,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VerificationRow {
    pub t: f64,
    pub x: Vec<f64>,
    pub measured: f64,
    pub std_error: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VerificationReport {
    pub kind: BoundKind,
    pub model: String,
    pub observable: String,
    pub rows: Vec<VerificationRow>,
    /// Short leg: `log measured` against `log t`. Long leg: against
    /// `log l1(t - 1)`.
    pub scaling_fit: Option<LinearFit>,
    /// Long leg only: `log measured` against `t`; the decay rate is
    /// `-slope`.
    pub rate_fit: Option<LinearFit>,
    /// `log ratio` against `log t`.
    pub ratio_fit: Option<LinearFit>,
    pub sup_ratio: f64,
    pub pass_finite: bool,
    pub pass_trend: bool,
    pub pass: bool,
    pub constant_convention: String,
    pub notes: Vec<String>,
}

fn measure(
    model: &CoefficientModel,
    phi: &Observable,
    kind: BoundKind,
    times: &[f64],
    x: &[f64],
    cfg: &VerifyConfig,
) -> Result<Vec<(f64, f64)>> {
    let est = &cfg.estimator;
    if kind.is_hessian() && cfg.beta > 0.0 {
        let delta = cfg.bump.unwrap_or(0.05);
        return times
            .iter()
            .map(|&t| {
                hessian_holder_seminorm(model, phi, t, x, cfg.beta, est, delta * t.min(1.0).sqrt())
                    .map(|h| (h.value, 0.0))
            })
            .collect();
    }
    let e: Vec<DerivativeEstimate> = if kind.is_hessian() {
        hessian_fd_at_times(model, phi, times, x, est, cfg.bump)?
    } else if cfg.gradient == Estimator::Bismut {
        gradient_bismut_at_times(model, phi, times, x, est)?
    } else {
        gradient_fd_at_times(model, phi, times, x, est, cfg.bump)?
    };
    Ok(e.iter().map(|e| (e.magnitude(), e.magnitude_std_error())).collect())
}

fn rhs(kind: BoundKind, inp: &BoundInputs, beta: f64) -> Result<f64> {
    match kind {
        BoundKind::GradShort => bounds::grad_rhs(inp),
        BoundKind::HessShort => bounds::hess_rhs(inp, beta),
        BoundKind::GradLong => bounds::longtime_grad_rhs(inp),
        BoundKind::HessLong => bounds::longtime_hess_rhs(inp, beta),
    }
}

/// Fits over points whose measurement clears twice its standard error.
fn fit(
    rows: &[VerificationRow],
    points: &[Vec<f64>],
    fx: impl Fn(&VerificationRow) -> f64,
    fy: impl Fn(&VerificationRow) -> f64,
) -> Option<LinearFit> {
    let groups: Vec<(Vec<f64>, Vec<f64>)> = points
        .iter()
        .map(|p| {
            let sel: Vec<&VerificationRow> = rows
                .iter()
                .filter(|r| &r.x == p && r.measured > 2.0 * r.std_error && r.measured > 0.0)
                .collect();
            (sel.iter().map(|r| fx(r)).collect(), sel.iter().map(|r| fy(r)).collect())
        })
        .collect();
    grouped_slope_fit(&groups).map(|g| g.0)
}

/// Measures `|D T_t phi(x)|` (or the Hessian) on `times x points`, divides by
/// the matching right-hand side, and fits the time scaling. Failures are
/// reported in the pass flags.
pub fn verify_bound(
    model: &CoefficientModel,
    phi: &Observable,
    times: &[f64],
    points: &[Vec<f64>],
    kind: BoundKind,
    cfg: &VerifyConfig,
) -> Result<VerificationReport> {
    if times.is_empty() || points.is_empty() {
        return Err(Error::arg("verification grid is empty"));
    }
    let phi_norm = phi
        .sup_abs()
        .ok_or_else(|| Error::Assumption("bound verification needs a bounded observable".into()))?;
    let mut notes = Vec::new();
    if kind.is_long() {
        if cfg.weights.ell1.is_none() {
            return Err(Error::Configuration(
                "long-time verification needs an ergodic rate l1".into(),
            ));
        }
        notes.push(alloc::format!(
            "centered observable phi - {}; finite differences are unaffected by the constant",
            cfg.centering.unwrap_or(0.0)
        ));
    }
    let mut rows = Vec::new();
    for (pi, x) in points.iter().enumerate() {
        let norms = local_norms(
            model,
            0.0,
            x,
            cfg.norm_pairs,
            cfg.norm_nodes,
            cfg.estimator.seed ^ pi as u64,
        )?
        .norms();
        let mut inp = BoundInputs::from_model(model, times[0], x, norms)?;
        inp.weights = Some(cfg.weights);
        inp.phi_norm = if kind.is_long() {
            phi_norm + cfg.centering.map_or(0.0, f64::abs)
        } else {
            phi_norm
        };
        let m = measure(model, phi, kind, times, x, cfg)?;
        for (&t, (measured, se)) in times.iter().zip(m) {
            let r = rhs(kind, &inp.at_time(t), cfg.beta)?;
            rows.push(VerificationRow {
                t,
                x: x.clone(),
                measured,
                std_error: se,
                rhs: r,
                ratio: measured / r,
            });
        }
    }
    let ratio_fit = fit(&rows, points, |r| r.t.ln(), |r| r.ratio.ln());
    let (scaling_fit, rate_fit) = if kind.is_long() {
        let ell1 = cfg.weights.ell1.expect("checked above");
        (
            fit(&rows, points, |r| ell1.eval(r.t - 1.0).ln(), |r| r.measured.ln()),
            fit(&rows, points, |r| r.t, |r| r.measured.ln()),
        )
    } else {
        (fit(&rows, points, |r| r.t.ln(), |r| r.measured.ln()), None)
    };
    let sup_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let pass_finite = rows.iter().all(|r| r.ratio.is_finite() && r.ratio >= 0.0);
    let pass_trend = if kind.is_long() {
        scaling_fit.is_some_and(|f| f.slope >= DECAY_SLOPE_MIN)
    } else {
        ratio_fit.is_some_and(|f| f.slope >= -RATIO_SLOPE_TOLERANCE)
    };
    if scaling_fit.is_none() {
        notes.push("no grid point cleared twice its standard error; scaling not fitted".into());
    }
    Ok(VerificationReport {
        kind,
        model: model.name.clone(),
        observable: phi.name(),
        rows,
        scaling_fit,
        rate_fit,
        ratio_fit,
        sup_ratio,
        pass_finite,
        pass_trend,
        pass: pass_finite && pass_trend,
        constant_convention: CONSTANT_CONVENTION.into(),
        notes,
    })
}
