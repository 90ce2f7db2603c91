//! Invariant-measure estimation, decay-rate fits of `T_t phi - mu(phi)`,
//! and the dissipativity conditions that certify exponential ergodicity.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent on toolchains with float math in core
use num_traits::Float;

use crate::coeffs::CoefficientModel;
use crate::quadrature::halton;
use crate::sde::{lyapunov_fit, run_paths_from, LyapunovFit, LyapunovForm, SimulationConfig};
use crate::semigroup::EstimatorConfig;
use crate::stats::{grouped_slope_fit, MeanVar, MeanVarVec};
use crate::{linalg, Error, Observable, Result};

/// Evidence that the model is dissipative.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Certificate {
    Lyapunov {
        fit: LyapunovFit,
    },
    /// The caller vouches for an invariant measure and supplies the burn-in.
    Override {
        burn_in: f64,
    },
}

impl Certificate {
    /// `max(10, 5 / |c0|)` for a Lyapunov certificate with `c0 < 0`.
    pub fn burn_in(&self) -> Result<f64> {
        match self {
            Certificate::Lyapunov { fit } if fit.c0 < 0.0 => Ok(10f64.max(5.0 / fit.c0.abs())),
            Certificate::Lyapunov { fit } => Err(Error::Assumption(alloc::format!(
                "no invariant measure certified: Lyapunov rate c0 = {} is not negative",
                fit.c0
            ))),
            Certificate::Override { burn_in } if *burn_in > 0.0 && burn_in.is_finite() => Ok(*burn_in),
            Certificate::Override { .. } => Err(Error::arg("override burn-in must be positive")),
        }
    }
}

/// Pooled terminal samples approximating the invariant measure.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmpiricalMeasure {
    pub dim: usize,
    pub burn_in: f64,
    /// `N x d`.
    pub samples: Vec<f64>,
    pub mean: Vec<f64>,
    pub mean_std_error: Vec<f64>,
    pub variance: Vec<f64>,
    pub diverged: usize,
}

impl EmpiricalMeasure {
    fn from_samples(dim: usize, burn_in: f64, samples: Vec<f64>, diverged: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::arg("no samples"));
        }
        let mut mv = MeanVarVec::zeros(dim);
        for row in samples.chunks(dim) {
            mv.push(row);
        }
        Ok(EmpiricalMeasure {
            dim,
            burn_in,
            mean: mv.means(),
            mean_std_error: mv.std_errors(),
            variance: mv.0.iter().map(|m| m.variance()).collect(),
            samples,
            diverged,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.samples[i * self.dim..(i + 1) * self.dim]
    }

    /// `(mu(phi), standard error)`.
    pub fn expectation(&self, phi: &Observable) -> (f64, f64) {
        let mut m = MeanVar::new();
        for row in self.samples.chunks(self.dim) {
            m.push(phi.eval(row));
        }
        (m.mean, m.std_error())
    }
}

fn collect_terminals(
    model: &CoefficientModel,
    sim: &SimulationConfig,
    starts: impl Fn(u64, &mut [f64]) + Sync + Send,
) -> Result<(Vec<f64>, usize)> {
    let d = model.dim;
    type Rows = Vec<(u64, Vec<f64>)>;
    let out = run_paths_from(
        model,
        sim,
        1,
        starts,
        false,
        Rows::new,
        |acc: &mut Rows, rec| {
            let n = rec.states.len() / d;
            acc.push((rec.index, rec.state(n - 1, 0).to_vec()));
        },
        |mut a, b| {
            a.extend(b);
            a
        },
    )?;
    let mut rows = out.acc.unwrap_or_default();
    rows.sort_by_key(|r| r.0);
    Ok((rows.into_iter().flat_map(|r| r.1).collect(), out.diverged))
}

/// Terminal states at the burn-in time of independent paths from `x0`.
pub fn estimate_invariant(
    model: &CoefficientModel,
    certificate: &Certificate,
    x0: &[f64],
    cfg: &EstimatorConfig,
) -> Result<EmpiricalMeasure> {
    let burn_in = certificate.burn_in()?;
    if x0.len() != model.dim {
        return Err(Error::arg("start point dimension does not match the model"));
    }
    let sim = cfg.simulation(&[burn_in])?;
    let (samples, diverged) = collect_terminals(model, &sim, |_, out| out.copy_from_slice(x0))?;
    EmpiricalMeasure::from_samples(model.dim, burn_in, samples, diverged)
}

/// Runs every sample of `mu` forward for `delta` (path `i` from sample
/// `i mod N`); an invariant `mu` is reproduced up to Monte Carlo error.
pub fn advance(
    model: &CoefficientModel,
    mu: &EmpiricalMeasure,
    delta: f64,
    cfg: &EstimatorConfig,
) -> Result<EmpiricalMeasure> {
    if mu.dim != model.dim {
        return Err(Error::arg("measure dimension does not match the model"));
    }
    let sim = cfg.simulation(&[delta])?;
    let n = mu.len();
    let (samples, diverged) = collect_terminals(model, &sim, |i, out| out.copy_from_slice(mu.sample(i as usize % n)))?;
    EmpiricalMeasure::from_samples(model.dim, mu.burn_in + delta, samples, diverged)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DecayFamily {
    /// `e^{-gamma t}`.
    Exponential,
    /// `(1 + t)^{-gamma}`.
    Polynomial,
}

impl DecayFamily {
    fn abscissa(&self, t: f64) -> f64 {
        match self {
            DecayFamily::Exponential => t,
            DecayFamily::Polynomial => t.ln_1p(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecayPoint {
    pub x: Vec<f64>,
    pub t: f64,
    /// Estimate of `T_t phi(x) - mu(phi)`.
    pub value: f64,
    pub std_error: f64,
    pub used: bool,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecayFit {
    pub family: DecayFamily,
    pub gamma: f64,
    pub gamma_ci95: (f64, f64),
    pub residual_rms: f64,
    /// Smallest and largest time used in the fit.
    pub window: (f64, f64),
    pub points: Vec<DecayPoint>,
    /// `false` when the signal never cleared the noise threshold.
    pub fitted: bool,
}

/// Points are used while `|value| > SIGNAL_TO_NOISE * SE`.
pub const SIGNAL_TO_NOISE: f64 = 5.0;

impl DecayFit {
    /// `sup |T_t phi(x) - mu(phi)| (1 + t)^gamma / (1 + |x|^power)` over the
    /// used points.
    pub fn sup_normalized(&self, power: f64) -> f64 {
        self.points
            .iter()
            .filter(|p| p.used)
            .map(|p| p.value.abs() * (1.0 + p.t).powf(self.gamma) / (1.0 + linalg::norm(&p.x).powf(power)))
            .fold(0.0, f64::max)
    }
}

/// Estimates `T_t phi(x) - mu(phi)` as `E[phi(X_t(x)) - phi(X_t(Y))]`, with
/// `Y` drawn from `mu` and both copies driven by the same noise, then fits
/// `log |.|` against the family on the time window where the signal stands
/// above the noise (trimmed at the first point that does not).
pub fn fit_decay(
    model: &CoefficientModel,
    phi: &Observable,
    xs: &[Vec<f64>],
    times: &[f64],
    family: DecayFamily,
    mu: &EmpiricalMeasure,
    cfg: &EstimatorConfig,
) -> Result<DecayFit> {
    if xs.is_empty() {
        return Err(Error::arg("at least one start point is required"));
    }
    if mu.dim != model.dim || mu.is_empty() {
        return Err(Error::arg("measure dimension does not match the model"));
    }
    let mut sorted = times.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let sim = cfg.simulation(&sorted)?;
    let d = model.dim;
    let n = mu.len();
    let mut points = Vec::new();
    let mut groups = Vec::new();
    for x in xs {
        if x.len() != d {
            return Err(Error::arg("start point dimension does not match the model"));
        }
        let out = run_paths_from(
            model,
            &sim,
            2,
            |i, out| {
                out[..d].copy_from_slice(x);
                out[d..].copy_from_slice(mu.sample(i as usize % n));
            },
            false,
            || None::<MeanVarVec>,
            |acc, rec| {
                let nrec = rec.states.len() / (2 * d);
                let vals: Vec<f64> = (0..nrec)
                    .map(|r| phi.eval(rec.state(r, 0)) - phi.eval(rec.state(r, 1)))
                    .collect();
                acc.get_or_insert_with(|| MeanVarVec::zeros(nrec)).push(&vals);
            },
            |a, b| match (a, b) {
                (Some(p), Some(q)) => Some(p.merge(q)),
                (p, q) => p.or(q),
            },
        )?;
        let stats = out.acc.flatten().ok_or_else(|| Error::arg("every path diverged"))?;
        let mut gx = Vec::new();
        let mut gy = Vec::new();
        let mut live = true;
        for &t in &sorted {
            let r = out.mesh.record_times.iter().position(|s| *s == t).expect("recorded");
            let (v, se) = (stats.0[r].mean, stats.0[r].std_error());
            live &= v.abs() > SIGNAL_TO_NOISE * se && v != 0.0;
            if live {
                gx.push(family.abscissa(t));
                gy.push(v.abs().ln());
            }
            points.push(DecayPoint {
                x: x.clone(),
                t,
                value: v,
                std_error: se,
                used: live,
            });
        }
        groups.push((gx, gy));
    }
    let used: Vec<f64> = points.iter().filter(|p| p.used).map(|p| p.t).collect();
    let window = (
        used.iter().copied().fold(f64::INFINITY, f64::min),
        used.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    Ok(match grouped_slope_fit(&groups) {
        Some((f, _)) => {
            let (a, b) = f.slope_ci95();
            DecayFit {
                family,
                gamma: -f.slope,
                gamma_ci95: (-b, -a),
                residual_rms: f.residual_rms,
                window,
                points,
                fitted: true,
            }
        }
        None => DecayFit {
            family,
            gamma: f64::NAN,
            gamma_ci95: (f64::NAN, f64::NAN),
            residual_rms: f64::NAN,
            window,
            points,
            fitted: false,
        },
    })
}

/// Dissipativity conditions for exponential ergodicity, with `|a|` the
/// spectral norm of the diffusion matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "case", rename_all = "snake_case"))]
pub enum DissipativityCase {
    /// `gamma |a| + <b, x> <= -theta |x|^q + c`, `q >= 2`; `V = (1 + |x|^2)^{p/2}`.
    A {
        gamma: f64,
        theta: f64,
        c: f64,
        q: f64,
        p: f64,
    },
    /// `gamma q |a| |x|^q + <b, x> <= -theta |x|^q + c`, `q >= 1`;
    /// `V = exp(gamma (1 + |x|^2)^{q/2})`.
    B { gamma: f64, theta: f64, c: f64, q: f64 },
    /// The inequality of case B with `V = exp(gamma (1 + |x|^2)^{p/2})`,
    /// `p in [1, q)`.
    C {
        gamma: f64,
        theta: f64,
        c: f64,
        q: f64,
        p: f64,
    },
}

impl DissipativityCase {
    fn validate(&self) -> Result<()> {
        let (gamma, theta, c, q) = match *self {
            DissipativityCase::A { gamma, theta, c, q, p } => {
                if !(q >= 2.0 && p > 0.0) {
                    return Err(Error::arg("case (a) needs q >= 2 and p > 0"));
                }
                (gamma, theta, c, q)
            }
            DissipativityCase::B { gamma, theta, c, q } => {
                if !(q >= 1.0) {
                    return Err(Error::arg("case (b) needs q >= 1"));
                }
                (gamma, theta, c, q)
            }
            DissipativityCase::C { gamma, theta, c, q, p } => {
                if !(q >= 1.0 && p >= 1.0 && p < q) {
                    return Err(Error::arg("case (c) needs 1 <= p < q"));
                }
                (gamma, theta, c, q)
            }
        };
        if !(gamma > 0.0 && theta > 0.0 && c > 0.0 && q.is_finite()) {
            return Err(Error::arg("gamma, theta and c must be positive"));
        }
        Ok(())
    }

    /// Left minus right side of the inequality at `x`; positive means violated.
    fn excess(&self, model: &CoefficientModel, x: &[f64]) -> f64 {
        let d = model.dim;
        let mut a = vec![0.0; d * d];
        let mut b = vec![0.0; d];
        model.diffusion(0.0, x, &mut a);
        model.drift(0.0, x, &mut b);
        let an = linalg::sym_operator_norm(d, &a);
        let bx = linalg::dot(&b, x);
        let r = linalg::norm(x);
        match *self {
            DissipativityCase::A { gamma, theta, c, q, .. } => gamma * an + bx + theta * r.powf(q) - c,
            DissipativityCase::B { gamma, theta, c, q } | DissipativityCase::C { gamma, theta, c, q, .. } => {
                gamma * q * an * r.powf(q) + bx + theta * r.powf(q) - c
            }
        }
    }

    pub fn lyapunov_form(&self) -> LyapunovForm {
        match *self {
            DissipativityCase::A { p, .. } => LyapunovForm::Polynomial { p },
            DissipativityCase::B { gamma, q, .. } => LyapunovForm::Exponential { gamma, q },
            DissipativityCase::C { gamma, p, .. } => LyapunovForm::Exponential { gamma, q: p },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DissipativityCertificate {
    pub case: DissipativityCase,
    pub holds: bool,
    pub samples: usize,
    pub violations: usize,
    pub largest_violated_radius: Option<f64>,
    /// Lyapunov pair for the case's `V`, fitted on the same samples.
    pub lyapunov: Option<LyapunovFit>,
}

/// Largest sampled radius.
pub const DISSIPATIVITY_RADIUS: f64 = 50.0;
pub const RADIAL_STEPS: usize = 500;
pub const EXTRA_DIRECTIONS: usize = 16;

fn radial_samples(d: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[i] = s;
            dirs.push(e);
        }
    }
    if d > 1 {
        let mut u = vec![0.0; d];
        let mut i = 0;
        while dirs.len() < 2 * d + EXTRA_DIRECTIONS {
            halton(i, d, &mut u);
            i += 1;
            let v: Vec<f64> = u.iter().map(|t| 2.0 * t - 1.0).collect();
            let n = linalg::norm(&v);
            if n > 1e-3 {
                dirs.push(v.iter().map(|t| t / n).collect());
            }
        }
    }
    let mut pts = Vec::new();
    for k in 0..=RADIAL_STEPS {
        let r = DISSIPATIVITY_RADIUS * k as f64 / RADIAL_STEPS as f64;
        for e in &dirs {
            pts.push(e.iter().map(|v| v * r).collect());
            if k == 0 {
                break;
            }
        }
    }
    pts
}

/// Samples the case inequality on a radial grid up to
/// [`DISSIPATIVITY_RADIUS`]; on success fits `(c0, c1)` for the case's `V`.
pub fn dissipativity_catalog_check(
    model: &CoefficientModel,
    case: DissipativityCase,
) -> Result<DissipativityCertificate> {
    case.validate()?;
    let pts = radial_samples(model.dim);
    let mut violations = 0;
    let mut worst: Option<f64> = None;
    for x in &pts {
        let e = case.excess(model, x);
        if !e.is_finite() {
            return Err(Error::Evaluation { point: x.clone() });
        }
        if e > 1e-9 * (1.0 + e.abs()) {
            violations += 1;
            let r = linalg::norm(x);
            worst = Some(worst.map_or(r, |w: f64| w.max(r)));
        }
    }
    let holds = violations == 0;
    let lyapunov = if holds {
        Some(lyapunov_fit(model, &case.lyapunov_form(), &pts, f64::INFINITY)?)
    } else {
        None
    };
    Ok(DissipativityCertificate {
        case,
        holds,
        samples: pts.len(),
        violations,
        largest_violated_radius: worst,
        lyapunov,
    })
}

/// Lyapunov certificate for `V = 1 + |x|^2`-type weights from samples on the
/// radial grid, as consumed by [`estimate_invariant`].
pub fn quadratic_certificate(model: &CoefficientModel) -> Result<Certificate> {
    let pts = radial_samples(model.dim);
    let fit = lyapunov_fit(model, &LyapunovForm::Polynomial { p: 2.0 }, &pts, f64::INFINITY)?;
    Ok(Certificate::Lyapunov { fit })
}
