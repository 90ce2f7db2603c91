//! Monte Carlo estimates of `T_t phi(x) = E phi(X_t(x))` and of its first
//! and second derivatives in `x`.
//!
//! Finite differences run every bumped start on the same noise (common
//! random numbers). Each stencil is evaluated at bumps `delta` and
//! `2 delta` on the same paths; the difference of the two gives a
//! Richardson estimate of the `O(delta^2)` bias.

mod verify;

pub use verify::{verify_bound, BoundKind, VerificationReport, VerificationRow, VerifyConfig};

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent on toolchains with float math in core
use num_traits::Float;

use crate::coeffs::{CoefficientModel, Weight, WeightSpec};
use crate::quadrature::halton;
use crate::rng::derive_seed;
use crate::sde::{run_paths, Scheme, SimulationConfig, TimeMesh};
use crate::stats::MeanVarVec;
use crate::{linalg, Error, Observable, Result};

const PILOT_TAG: u64 = 0x0070_696c_6f74;
const PILOT_PATHS: usize = 4096;

/// Smallest default bump before the `sqrt(t)` scaling.
pub const MIN_BUMP: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Estimator {
    /// Plain mean of `phi(X_t)` (order 0).
    Direct,
    FdCrn,
    Bismut,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EstimatorConfig {
    pub scheme: Scheme,
    pub step: f64,
    pub paths: usize,
    pub seed: u64,
    pub budget_cap: f64,
    /// When present, observables are checked against `rho0` first.
    pub weights: Option<WeightSpec>,
}

impl EstimatorConfig {
    pub fn new(paths: usize, step: f64, seed: u64) -> Self {
        EstimatorConfig {
            scheme: Scheme::TamedEuler,
            step,
            paths,
            seed,
            budget_cap: 1e11,
            weights: None,
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_weights(mut self, weights: WeightSpec) -> Self {
        self.weights = Some(weights);
        self
    }

    /// Simulation settings recording every time in `times`.
    pub fn simulation(&self, times: &[f64]) -> Result<SimulationConfig> {
        if times.is_empty() {
            return Err(Error::arg("at least one time is required"));
        }
        if let Some(t) = times.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(Error::arg(alloc::format!("times must be positive and finite, got {t}")));
        }
        let horizon = times.iter().fold(0.0f64, |a, &b| a.max(b));
        let mut cfg = SimulationConfig::new(self.scheme, self.step.min(horizon), horizon, self.paths, self.seed)
            .with_records(times);
        cfg.budget_cap = self.budget_cap;
        Ok(cfg)
    }
}

/// A Monte Carlo derivative estimate at `(t, x)`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DerivativeEstimate {
    pub order: u8,
    pub t: f64,
    pub x: Vec<f64>,
    /// Scalar, gradient (`d`), or row-major Hessian (`d x d`).
    pub value: Vec<f64>,
    pub std_error: Vec<f64>,
    /// Richardson estimate of the finite-difference bias (empty otherwise).
    pub fd_bias: Vec<f64>,
    pub bump: f64,
    pub estimator: Estimator,
    pub paths: usize,
    pub diverged: usize,
    /// Some component has a standard error above its magnitude.
    pub noise_floor: bool,
}

impl DerivativeEstimate {
    /// Euclidean norm (order 0, 1) or spectral norm (order 2) of the value.
    pub fn magnitude(&self) -> f64 {
        match self.order {
            2 => linalg::sym_operator_norm(self.x.len(), &self.value),
            _ => linalg::norm(&self.value),
        }
    }

    /// Standard error of [`magnitude`](Self::magnitude), to first order.
    pub fn magnitude_std_error(&self) -> f64 {
        let m = self.magnitude();
        if self.order == 2 || m == 0.0 {
            return self.std_error.iter().fold(0.0f64, |a, &b| a.max(b));
        }
        let v: f64 = self
            .value
            .iter()
            .zip(&self.std_error)
            .map(|(v, s)| (v * s / m).powi(2))
            .sum();
        v.sqrt()
    }

    fn finish(mut self) -> Self {
        self.noise_floor = self
            .value
            .iter()
            .zip(&self.std_error)
            .any(|(v, s)| *s > 0.0 && *s > v.abs());
        self
    }
}

/// `phi` must lie in the weighted space `B_{rho0}`: bounded for unit
/// weights, growth degree at most `p` for polynomial weights.
pub fn check_observable(phi: &Observable, rho0: &Weight) -> Result<()> {
    let ok = match rho0 {
        Weight::Unit => phi.sup_abs().is_some(),
        Weight::Polynomial { p } => phi.growth_degree() as f64 <= *p,
        Weight::Exponential { .. } => true,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Assumption(alloc::format!(
            "observable {} is not dominated by the weight rho0 = {rho0:?}",
            phi.name()
        )))
    }
}

fn check_config(phi: &Observable, model: &CoefficientModel, x: &[f64], cfg: &EstimatorConfig) -> Result<()> {
    if x.len() != model.dim {
        return Err(Error::arg("point dimension does not match the model"));
    }
    if let Some(w) = &cfg.weights {
        check_observable(phi, &w.rho0)?;
    }
    Ok(())
}

/// Index of every requested time in the mesh's sorted record list.
fn record_index(cfg: &SimulationConfig, times: &[f64]) -> Vec<usize> {
    let mesh = TimeMesh::new(cfg.horizon, cfg.step, &cfg.record_times);
    times
        .iter()
        .map(|t| mesh.record_times.iter().position(|s| s == t).expect("time is recorded"))
        .collect()
}

fn merge_opt(a: Option<MeanVarVec>, b: Option<MeanVarVec>) -> Option<MeanVarVec> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.merge(y)),
        (x, y) => x.or(y),
    }
}

/// `T_t phi(x)` at several times from one set of paths.
pub fn estimate_semigroup_at_times(
    model: &CoefficientModel,
    phi: &Observable,
    times: &[f64],
    x: &[f64],
    cfg: &EstimatorConfig,
) -> Result<Vec<DerivativeEstimate>> {
    check_config(phi, model, x, cfg)?;
    let sim = cfg.simulation(times)?;
    let idx = record_index(&sim, times);
    let out = run_paths(
        model,
        &sim,
        x,
        false,
        || None::<MeanVarVec>,
        |acc, rec| {
            let vals: Vec<f64> = idx.iter().map(|&r| phi.eval(rec.state(r, 0))).collect();
            acc.get_or_insert_with(|| MeanVarVec::zeros(vals.len())).push(&vals);
        },
        merge_opt,
    )?;
    let stats = out.acc.flatten().ok_or_else(|| Error::arg("every path diverged"))?;
    Ok(times
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            DerivativeEstimate {
                order: 0,
                t,
                x: x.to_vec(),
                value: vec![stats.0[j].mean],
                std_error: vec![stats.0[j].std_error()],
                fd_bias: Vec::new(),
                bump: 0.0,
                estimator: Estimator::Direct,
                paths: sim.paths,
                diverged: out.diverged,
                noise_floor: false,
            }
            .finish()
        })
        .collect())
}

/// `T_t phi(x)`: Monte Carlo mean with its standard error.
pub fn estimate_semigroup(
    model: &CoefficientModel,
    phi: &Observable,
    t: f64,
    x: &[f64],
    cfg: &EstimatorConfig,
) -> Result<DerivativeEstimate> {
    Ok(estimate_semigroup_at_times(model, phi, &[t], x, cfg)?.remove(0))
}

/// Default bump `max(1e-3, SE_0^{1/2}) sqrt(min(t, 1))`, where `SE_0` is the
/// standard error of the order-0 estimate.
pub fn default_bump(se0: f64, t: f64) -> f64 {
    MIN_BUMP.max(se0.sqrt()) * t.min(1.0).sqrt()
}

/// [`default_bump`] for every time in `times`, with `SE_0` from a pilot run
/// on an independent stream.
pub fn default_bumps(
    model: &CoefficientModel,
    phi: &Observable,
    times: &[f64],
    x: &[f64],
    cfg: &EstimatorConfig,
) -> Result<Vec<f64>> {
    let mut pilot = cfg.clone();
    pilot.paths = cfg.paths.min(PILOT_PATHS);
    pilot.seed = derive_seed(cfg.seed, PILOT_TAG);
    let est = estimate_semigroup_at_times(model, phi, times, x, &pilot)?;
    Ok(est
        .iter()
        .map(|e| {
            let sd = e.std_error[0] * (pilot.paths as f64).sqrt();
            default_bump(sd / (cfg.paths as f64).sqrt(), e.t)
        })
        .collect())
}

/// Start offsets and output combinations of a finite-difference stencil.
/// Outputs are laid out as `[D_delta..., D_2delta...]`.
struct Stencil {
    offsets: Vec<f64>,
    combos: Vec<Vec<(usize, f64)>>,
}

impl Stencil {
    fn starts(&self, d: usize) -> usize {
        self.offsets.len() / d
    }

    fn gradient(d: usize, delta: f64) -> Self {
        let mut offsets = Vec::new();
        let mut combos = Vec::new();
        let push = |off: &mut Vec<f64>, i: usize, h: f64| {
            let mut e = vec![0.0; d];
            e[i] = h;
            off.extend_from_slice(&e);
        };
        for h in [delta, 2.0 * delta] {
            for i in 0..d {
                let s = offsets.len() / d;
                push(&mut offsets, i, h);
                push(&mut offsets, i, -h);
                combos.push(vec![(s, 0.5 / h), (s + 1, -0.5 / h)]);
            }
        }
        Stencil { offsets, combos }
    }

    fn hessian(d: usize, delta: f64) -> Self {
        let mut offsets = vec![0.0; d];
        let mut combos = Vec::new();
        let add = |offsets: &mut Vec<f64>, pts: &[(usize, f64)]| {
            let s = offsets.len() / d;
            let mut e = vec![0.0; d];
            for &(i, v) in pts {
                e[i] += v;
            }
            offsets.extend_from_slice(&e);
            s
        };
        for h in [delta, 2.0 * delta] {
            let h2 = h * h;
            for i in 0..d {
                for j in 0..d {
                    if i == j {
                        let p = add(&mut offsets, &[(i, h)]);
                        let m = add(&mut offsets, &[(i, -h)]);
                        combos.push(vec![(p, 1.0 / h2), (0, -2.0 / h2), (m, 1.0 / h2)]);
                    } else if j > i {
                        let pp = add(&mut offsets, &[(i, h), (j, h)]);
                        let pm = add(&mut offsets, &[(i, h), (j, -h)]);
                        let mp = add(&mut offsets, &[(i, -h), (j, h)]);
                        let mm = add(&mut offsets, &[(i, -h), (j, -h)]);
                        let q = 0.25 / h2;
                        combos.push(vec![(pp, q), (pm, -q), (mp, -q), (mm, q)]);
                    } else {
                        // Filled from the mirrored entry.
                        combos.push(Vec::new());
                    }
                }
            }
        }
        Stencil { offsets, combos }
    }
}

/// Per (time, point): `(mean, std_error)` of each stencil output.
type StencilMoments = Vec<Vec<(Vec<f64>, Vec<f64>)>>;

/// Evaluates one stencil per requested time (bump `deltas[j]` at time `j`)
/// around several base points on shared noise. Returns, per point and time,
/// the mean and standard error of every stencil output.
fn run_stencils(
    model: &CoefficientModel,
    phi: &Observable,
    times: &[f64],
    points: &[Vec<f64>],
    deltas: &[f64],
    order: u8,
    cfg: &EstimatorConfig,
) -> Result<(StencilMoments, usize, usize)> {
    let d = model.dim;
    let sim = cfg.simulation(times)?;
    let idx = record_index(&sim, times);
    let stencils: Vec<Stencil> = deltas
        .iter()
        .map(|&h| {
            if order == 1 {
                Stencil::gradient(d, h)
            } else {
                Stencil::hessian(d, h)
            }
        })
        .collect();
    let mut starts = Vec::new();
    // (point, time) -> index of its first start
    let mut first = Vec::new();
    for p in points {
        for s in &stencils {
            first.push(starts.len() / d);
            for off in s.offsets.chunks(d) {
                starts.extend(p.iter().zip(off).map(|(a, b)| a + b));
            }
        }
    }
    let nout: usize = stencils.iter().map(|s| s.combos.len()).sum::<usize>() * points.len();
    let out = run_paths(
        model,
        &sim,
        &starts,
        false,
        || None::<MeanVarVec>,
        |acc, rec| {
            let mut vals = Vec::with_capacity(nout);
            let mut block = 0;
            for _ in points {
                for (j, s) in stencils.iter().enumerate() {
                    let r = idx[j];
                    let base = first[block];
                    let fv: Vec<f64> = (0..s.starts(d)).map(|k| phi.eval(rec.state(r, base + k))).collect();
                    for c in &s.combos {
                        vals.push(c.iter().map(|&(k, w)| w * fv[k]).sum::<f64>());
                    }
                    block += 1;
                }
            }
            acc.get_or_insert_with(|| MeanVarVec::zeros(nout)).push(&vals);
        },
        merge_opt,
    )?;
    let stats = out.acc.flatten().ok_or_else(|| Error::arg("every path diverged"))?;
    let mut res = Vec::with_capacity(points.len());
    let mut o = 0;
    for _ in points {
        let mut per_time = Vec::with_capacity(times.len());
        for s in &stencils {
            let n = s.combos.len();
            let m: Vec<f64> = stats.0[o..o + n].iter().map(|v| v.mean).collect();
            let e: Vec<f64> = stats.0[o..o + n].iter().map(|v| v.std_error()).collect();
            per_time.push((m, e));
            o += n;
        }
        res.push(per_time);
    }
    Ok((res, sim.paths, out.diverged))
}

fn assemble(
    order: u8,
    d: usize,
    t: f64,
    x: &[f64],
    delta: f64,
    means: &[f64],
    ses: &[f64],
    paths: usize,
    diverged: usize,
) -> DerivativeEstimate {
    let k = means.len() / 2;
    let mut value = means[..k].to_vec();
    let mut se = ses[..k].to_vec();
    let mut bias: Vec<f64> = (0..k).map(|i| ((means[k + i] - means[i]) / 3.0).abs()).collect();
    if order == 2 {
        for i in 0..d {
            for j in 0..i {
                value[i * d + j] = value[j * d + i];
                se[i * d + j] = se[j * d + i];
                bias[i * d + j] = bias[j * d + i];
            }
        }
    }
    DerivativeEstimate {
        order,
        t,
        x: x.to_vec(),
        value,
        std_error: se,
        fd_bias: bias,
        bump: delta,
        estimator: Estimator::FdCrn,
        paths,
        diverged,
        noise_floor: false,
    }
    .finish()
}

fn fd_at_times(
    model: &CoefficientModel,
    phi: &Observable,
    times: &[f64],
    x: &[f64],
    cfg: &EstimatorConfig,
    delta: Option<f64>,
    order: u8,
) -> Result<Vec<DerivativeEstimate>> {
    check_config(phi, model, x, cfg)?;
    let deltas = match delta {
        Some(h) => vec![h; times.len()],
        None => default_bumps(model, phi, times, x, cfg)?,
    };
    fd_with_bumps(model, phi, times, x, cfg, &deltas, order)
}

fn fd_with_bumps(
    model: &CoefficientModel,
    phi: &Observable,
    times: &[f64],
    x: &[f64],
    cfg: &EstimatorConfig,
    deltas: &[f64],
    order: u8,
) -> Result<Vec<DerivativeEstimate>> {
    check_config(phi, model, x, cfg)?;
    if deltas.len() != times.len() {
        return Err(Error::arg("one bump per time is required"));
    }
    if let Some(h) = deltas.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
        return Err(Error::arg(alloc::format!("bump must be positive, got {h}")));
    }
    // One run serves every time when the bumps agree; otherwise each time
    // gets its own shorter run instead of carrying every bump to the horizon.
    if deltas.iter().all(|h| *h == deltas[0]) {
        let (res, paths, diverged) = run_stencils(model, phi, times, &[x.to_vec()], deltas, order, cfg)?;
        return Ok(times
            .iter()
            .zip(deltas)
            .zip(&res[0])
            .map(|((&t, &h), (m, e))| assemble(order, model.dim, t, x, h, m, e, paths, diverged))
            .collect());
    }
    times
        .iter()
        .zip(deltas)
        .map(|(&t, &h)| {
            let (res, paths, diverged) = run_stencils(model, phi, &[t], &[x.to_vec()], &[h], order, cfg)?;
            let (m, e) = &res[0][0];
            Ok(assemble(order, model.dim, t, x, h, m, e, paths, diverged))
        })
        .collect()
}

/// Central-difference gradient on common random numbers at several times.
/// `delta = None` selects [`default_bump`] per time.
pub fn gradient_fd_at_times(
    model: &CoefficientModel,
    phi: &Observable,
    times: &[f64],
    x: &[f64],
    cfg: &EstimatorConfig,
    delta: Option<f64>,
) -> Result<Vec<DerivativeEstimate>> {
    fd_at_times(model, phi, times, x, cfg, delta, 1)
}

/// As [`gradient_fd_at_times`] with bump `deltas[j]` at time `times[j]`.
pub fn gradient_fd_with_bumps(
    model: &CoefficientModel,
    phi: &Observable,
    times: &[f64],
    x: &[f64],
    cfg: &EstimatorConfig,
    deltas: &[f64],
) -> Result<Vec<DerivativeEstimate>> {
    fd_with_bumps(model, phi, times, x, cfg, deltas, 1)
}

pub fn estimate_gradient_fd(
    model: &CoefficientModel,
    phi: &Observable,
    t: f64,
    x: &[f64],
    cfg: &EstimatorConfig,
    delta: Option<f64>,
) -> Result<DerivativeEstimate> {
    Ok(gradient_fd_at_times(model, phi, &[t], x, cfg, delta)?.remove(0))
}

pub fn hessian_fd_at_times(
    model: &CoefficientModel,
    phi: &Observable,
    times: &[f64],
    x: &[f64],
    cfg: &EstimatorConfig,
    delta: Option<f64>,
) -> Result<Vec<DerivativeEstimate>> {
    fd_at_times(model, phi, times, x, cfg, delta, 2)
}

/// Second-order central stencil for the diagonal and the four-point stencil
/// off the diagonal, on common random numbers.
pub fn estimate_hessian_fd(
    model: &CoefficientModel,
    phi: &Observable,
    t: f64,
    x: &[f64],
    cfg: &EstimatorConfig,
    delta: Option<f64>,
) -> Result<DerivativeEstimate> {
    Ok(hessian_fd_at_times(model, phi, &[t], x, cfg, delta)?.remove(0))
}

/// Bismut gradient `E[phi(X_t) M_t] / t` with
/// `M_t = int_0^t ((sqrt 2 sigma)^{-1} J_s)^T dW_s`, at several times.
pub fn gradient_bismut_at_times(
    model: &CoefficientModel,
    phi: &Observable,
    times: &[f64],
    x: &[f64],
    cfg: &EstimatorConfig,
) -> Result<Vec<DerivativeEstimate>> {
    check_config(phi, model, x, cfg)?;
    let d = model.dim;
    let sim = cfg.simulation(times)?;
    let idx = record_index(&sim, times);
    let n = times.len() * d;
    let out = run_paths(
        model,
        &sim,
        x,
        true,
        || None::<MeanVarVec>,
        |acc, rec| {
            let mut vals = Vec::with_capacity(n);
            for (&r, &t) in idx.iter().zip(times) {
                let f = phi.eval(rec.state(r, 0));
                vals.extend(rec.weight(r).iter().map(|m| f * m / t));
            }
            acc.get_or_insert_with(|| MeanVarVec::zeros(n)).push(&vals);
        },
        merge_opt,
    )?;
    let stats = out.acc.flatten().ok_or_else(|| Error::arg("every path diverged"))?;
    Ok(times
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let s = &stats.0[j * d..(j + 1) * d];
            DerivativeEstimate {
                order: 1,
                t,
                x: x.to_vec(),
                value: s.iter().map(|v| v.mean).collect(),
                std_error: s.iter().map(|v| v.std_error()).collect(),
                fd_bias: Vec::new(),
                bump: 0.0,
                estimator: Estimator::Bismut,
                paths: sim.paths,
                diverged: out.diverged,
                noise_floor: false,
            }
            .finish()
        })
        .collect())
}

pub fn estimate_gradient_bismut(
    model: &CoefficientModel,
    phi: &Observable,
    t: f64,
    x: &[f64],
    cfg: &EstimatorConfig,
) -> Result<DerivativeEstimate> {
    Ok(gradient_bismut_at_times(model, phi, &[t], x, cfg)?.remove(0))
}

/// Number of mesh points for the Hessian Hoelder seminorm.
pub const HOLDER_MESH: usize = 32;

/// Pair-sampled `[D^2 T_t phi]_{C^beta(B_{1/2}(x))}`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HessianSeminorm {
    pub t: f64,
    pub x: Vec<f64>,
    pub beta: f64,
    pub value: f64,
    /// Hessian spectral norms at the mesh points.
    pub sup_hessian: f64,
    pub mesh: Vec<Vec<f64>>,
    pub bump: f64,
}

/// Mesh of `B_{1/2}(x)`: `x` itself followed by Halton points of the ball.
pub fn ball_mesh(x: &[f64], count: usize) -> Vec<Vec<f64>> {
    let d = x.len();
    let mut pts = vec![x.to_vec()];
    let mut u = vec![0.0; d];
    let mut i = 0u64;
    while pts.len() < count {
        halton(i, d, &mut u);
        i += 1;
        let y: Vec<f64> = u.iter().map(|v| v - 0.5).collect();
        if linalg::norm(&y) <= 0.5 {
            pts.push(x.iter().zip(&y).map(|(a, b)| a + b).collect());
        }
    }
    pts
}

/// Hessian estimates on [`HOLDER_MESH`] points of `B_{1/2}(x)` (shared
/// noise), then the largest `|H(y) - H(z)| / |y - z|^beta` over all pairs.
pub fn hessian_holder_seminorm(
    model: &CoefficientModel,
    phi: &Observable,
    t: f64,
    x: &[f64],
    beta: f64,
    cfg: &EstimatorConfig,
    delta: f64,
) -> Result<HessianSeminorm> {
    check_config(phi, model, x, cfg)?;
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::arg("beta must lie in (0, 1]"));
    }
    if !(delta > 0.0) {
        return Err(Error::arg("bump must be positive"));
    }
    let d = model.dim;
    let mesh = ball_mesh(x, HOLDER_MESH);
    let (res, _, _) = run_stencils(model, phi, &[t], &mesh, &[delta], 2, cfg)?;
    let hs: Vec<DerivativeEstimate> = res
        .iter()
        .zip(&mesh)
        .map(|(r, p)| assemble(2, d, t, p, delta, &r[0].0, &r[0].1, cfg.paths, 0))
        .collect();
    let mut value = 0.0f64;
    let mut diff = vec![0.0; d * d];
    for a in 0..hs.len() {
        for b in a + 1..hs.len() {
            for (k, v) in diff.iter_mut().enumerate() {
                *v = hs[a].value[k] - hs[b].value[k];
            }
            let r = linalg::dist(&mesh[a], &mesh[b]);
            if r > 0.0 {
                value = value.max(linalg::sym_operator_norm(d, &diff) / r.powf(beta));
            }
        }
    }
    Ok(HessianSeminorm {
        t,
        x: x.to_vec(),
        beta,
        value,
        sup_hessian: hs.iter().map(|h| h.magnitude()).fold(0.0, f64::max),
        mesh,
        bump: delta,
    })
}
