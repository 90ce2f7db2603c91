//! Path experiments on the mollified dynamics.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent on toolchains with float math in core
use num_traits::Float;

use super::{MollifiedDrift, SingularDriftSpec};
use crate::exec::fold_chunks;
use crate::rng::PathRng;
use crate::sde::{Scheme, TimeMesh, DIVERGENCE_RADIUS, MAX_DIVERGED_FRACTION};
use crate::semigroup::{default_bumps, gradient_fd_with_bumps, EstimatorConfig};
use crate::stats::{grouped_slope_fit, linear_fit, LinearFit, MeanVar};
use crate::{Error, Observable, Result};

/// Scalar mollified dynamics `dX = (b_{1;n} + b2) dt + sqrt(2) dW`.
struct Path1d<'a> {
    b1: &'a MollifiedDrift,
    offset: f64,
    gain: f64,
    scheme: Scheme,
}

impl Path1d<'_> {
    fn new<'a>(spec: &SingularDriftSpec, b1: &'a MollifiedDrift, scheme: Scheme) -> Path1d<'a> {
        Path1d {
            b1,
            offset: spec.b2_offset,
            gain: spec.b2_gain,
            scheme,
        }
    }

    /// Runs one path on `mesh`, calling `visit(step, h, x)` with the state at
    /// the left end of every step. Returns `false` on divergence.
    fn run(&self, mesh: &TimeMesh, x0: f64, rng: &mut PathRng, mut visit: impl FnMut(usize, f64, f64)) -> bool {
        let mut x = x0;
        for s in 0..mesh.steps() {
            let h = mesh.nodes[s + 1] - mesh.nodes[s];
            visit(s, h, x);
            let b = self.b1.eval(x) + self.offset + self.gain * x;
            let scale = match self.scheme {
                Scheme::Euler => h,
                Scheme::TamedEuler => h / (1.0 + h * b.abs()),
            };
            x += scale * b + (2.0 * h).sqrt() * rng.normal();
            if !(x.abs() <= DIVERGENCE_RADIUS) {
                return false;
            }
        }
        true
    }
}

fn check_divergence(dead: usize, paths: usize, scheme: Scheme) -> Result<()> {
    if dead as f64 > MAX_DIVERGED_FRACTION * paths as f64 {
        return Err(Error::Diverged {
            diverged: dead,
            paths,
            scheme: String::from(scheme.name()),
        });
    }
    Ok(())
}

/// `L^2` distances between the drift functionals
/// `A^{(n)}_t = int_0^t b_{1;n}(X^{(n)}_s) ds` of consecutive levels.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CauchyReport {
    pub t: f64,
    pub x0: f64,
    pub levels: Vec<u32>,
    /// `||A^{(n_k)} - A^{(n_{k+1})}||_{L^2}`, one per consecutive pair.
    pub distances: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// `log distance` against `log n_k`.
    pub fit: Option<LinearFit>,
    /// Fitted slope negative with its 95% interval below zero.
    pub decreasing: bool,
    /// Distances are noise-dominated or rise by more than two standard errors.
    pub inconclusive: bool,
    pub paths: usize,
    pub diverged: usize,
}

/// Simulates every level on the same noise (path `i` uses stream `i` at
/// every level) and estimates the pairwise distances.
pub fn drift_functional_cauchy(
    spec: &SingularDriftSpec,
    x0: f64,
    t: f64,
    levels: &[u32],
    cfg: &EstimatorConfig,
) -> Result<CauchyReport> {
    spec.validate()?;
    if levels.len() < 2 {
        return Err(Error::arg("at least two mollification levels are required"));
    }
    if !levels.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::arg("levels must be strictly increasing"));
    }
    let sim = cfg.simulation(&[t])?;
    sim.validate_paths()?;
    let drifts: Vec<MollifiedDrift> = levels.iter().map(|&n| spec.mollify(n)).collect::<Result<_>>()?;
    let mesh = TimeMesh::new(t, sim.step, &[]);
    let k = levels.len() - 1;
    let folded = fold_chunks(
        cfg.paths,
        |range| {
            let mut acc = vec![MeanVar::new(); k];
            let mut dead = 0usize;
            let mut a = vec![0.0; levels.len()];
            for path in range {
                let mut ok = true;
                for (j, b1) in drifts.iter().enumerate() {
                    let mut rng = PathRng::new(cfg.seed, path as u64);
                    let mut sum = 0.0;
                    ok &= Path1d::new(spec, b1, cfg.scheme).run(&mesh, x0, &mut rng, |_, h, x| sum += h * b1.eval(x));
                    a[j] = sum;
                }
                if ok {
                    for (i, m) in acc.iter_mut().enumerate() {
                        m.push((a[i] - a[i + 1]).powi(2));
                    }
                } else {
                    dead += 1;
                }
            }
            (acc, dead)
        },
        |x, y| (x.0.into_iter().zip(y.0).map(|(p, q)| p.merge(q)).collect(), x.1 + y.1),
    )
    .expect("at least one path");
    check_divergence(folded.1, cfg.paths, cfg.scheme)?;
    let mut distances = Vec::with_capacity(k);
    let mut std_errors = Vec::with_capacity(k);
    for m in &folded.0 {
        let d = m.mean.max(0.0).sqrt();
        distances.push(d);
        std_errors.push(if d > 0.0 {
            m.std_error() / (2.0 * d)
        } else {
            m.std_error().sqrt()
        });
    }
    let xs: Vec<f64> = levels[..k].iter().map(|&n| (n as f64).ln()).collect();
    let usable: Vec<usize> = (0..k).filter(|&i| distances[i] > 0.0).collect();
    let fit = if usable.len() >= 2 {
        linear_fit(
            &usable.iter().map(|&i| xs[i]).collect::<Vec<_>>(),
            &usable.iter().map(|&i| distances[i].ln()).collect::<Vec<_>>(),
        )
    } else {
        None
    };
    let decreasing = fit.is_some_and(|f| f.slope < 0.0 && f.slope_ci95().1 < 0.0);
    let noise = distances
        .iter()
        .zip(&std_errors)
        .all(|(d, s)| *d > 0.0 && *d <= 2.0 * s);
    let rises = distances
        .windows(2)
        .zip(std_errors.windows(2))
        .any(|(d, s)| d[1] > d[0] + 2.0 * (s[0] * s[0] + s[1] * s[1]).sqrt());
    Ok(CauchyReport {
        t,
        x0,
        levels: levels.to_vec(),
        distances,
        std_errors,
        fit,
        decreasing,
        inconclusive: noise || rises,
        paths: cfg.paths,
        diverged: folded.1,
    })
}

/// Window-size scaling of `||int_{t0}^{t0+w} f(X_s) ds||_{L^m}`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KrylovFit {
    pub observable: String,
    pub m: u32,
    pub level: u32,
    pub t0: f64,
    pub windows: Vec<f64>,
    pub norms: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Fitted `(1 + theta) / 2`.
    pub exponent: f64,
    pub exponent_ci95: (f64, f64),
    pub theta: f64,
    pub theta_ci95: (f64, f64),
    pub residual_rms: f64,
}

/// Smallest accepted span `max(w) / min(w)` of the windows.
pub const MIN_WINDOW_SPAN: f64 = 31.622_776_601_683_793;

/// Fits `(1 + theta) / 2` from the `L^m` norms of the additive functional
/// over windows `[t0, t0 + w]` of the level-`level` mollified dynamics
/// started at `x0`.
pub fn krylov_fit(
    spec: &SingularDriftSpec,
    f: &Observable,
    m: u32,
    windows: &[f64],
    x0: f64,
    t0: f64,
    level: u32,
    cfg: &EstimatorConfig,
) -> Result<KrylovFit> {
    spec.validate()?;
    if m != 2 && m != 4 {
        return Err(Error::arg("m must be 2 or 4"));
    }
    if windows.len() < 4 {
        return Err(Error::arg("at least four windows are required"));
    }
    if windows.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(Error::arg("windows must be positive and finite"));
    }
    let lo = windows.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let hi = windows.iter().fold(0.0f64, |a, &b| a.max(b));
    if hi / lo < MIN_WINDOW_SPAN * (1.0 - 1e-12) {
        return Err(Error::arg("windows must span at least 1.5 decades"));
    }
    if !(t0 >= 0.0) {
        return Err(Error::arg("t0 must be nonnegative"));
    }
    if f.sup_abs().is_none() {
        return Err(Error::arg("the test function must be bounded"));
    }
    if f.sup_abs() == Some(0.0) {
        return Err(Error::Refused(
            "f vanishes identically; the functional is zero and has no exponent".into(),
        ));
    }
    let (norms, std_errors) = if f.is_constant() {
        // Deterministic: the functional is exactly c w.
        let c = f.eval1(0.0).abs();
        (
            windows.iter().map(|w| c * w).collect::<Vec<_>>(),
            vec![0.0; windows.len()],
        )
    } else {
        window_norms(spec, f, m, windows, x0, t0, level, cfg)?
    };
    let lx: Vec<f64> = windows.iter().map(|w| w.ln()).collect();
    let ly: Vec<f64> = norms.iter().map(|v| v.ln()).collect();
    let fit = linear_fit(&lx, &ly).ok_or_else(|| Error::arg("windows must not all coincide"))?;
    let (a, b) = fit.slope_ci95();
    Ok(KrylovFit {
        observable: f.name(),
        m,
        level,
        t0,
        windows: windows.to_vec(),
        norms,
        std_errors,
        exponent: fit.slope,
        exponent_ci95: (a, b),
        theta: 2.0 * fit.slope - 1.0,
        theta_ci95: (2.0 * a - 1.0, 2.0 * b - 1.0),
        residual_rms: fit.residual_rms,
    })
}

#[allow(clippy::too_many_arguments)]
fn window_norms(
    spec: &SingularDriftSpec,
    f: &Observable,
    m: u32,
    windows: &[f64],
    x0: f64,
    t0: f64,
    level: u32,
    cfg: &EstimatorConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let ends: Vec<f64> = windows.iter().map(|w| t0 + w).collect();
    let mut marks = ends.clone();
    if t0 > 0.0 {
        marks.push(t0);
    }
    let sim = cfg.simulation(&marks)?;
    sim.validate_paths()?;
    let mesh = TimeMesh::new(sim.horizon, sim.step, &marks);
    let start = mesh.nodes.iter().position(|&s| s == t0).expect("t0 is a mesh node");
    let stop: Vec<usize> = ends
        .iter()
        .map(|e| {
            mesh.nodes
                .iter()
                .position(|s| s == e)
                .expect("window end is a mesh node")
        })
        .collect();
    let b1 = spec.mollify(level)?;
    let dyn1 = Path1d::new(spec, &b1, cfg.scheme);
    let nw = windows.len();
    let folded = fold_chunks(
        cfg.paths,
        |range| {
            let mut acc = vec![MeanVar::new(); nw];
            let mut dead = 0usize;
            let mut ints = vec![0.0; nw];
            for path in range {
                let mut rng = PathRng::new(cfg.seed, path as u64);
                ints.fill(0.0);
                let ok = dyn1.run(&mesh, x0, &mut rng, |s, h, x| {
                    if s >= start {
                        let v = h * f.eval1(x);
                        for (i, e) in ints.iter_mut().enumerate() {
                            if s < stop[i] {
                                *e += v;
                            }
                        }
                    }
                });
                if ok {
                    for (a, v) in acc.iter_mut().zip(&ints) {
                        a.push(v.abs().powi(m as i32));
                    }
                } else {
                    dead += 1;
                }
            }
            (acc, dead)
        },
        |x, y| (x.0.into_iter().zip(y.0).map(|(p, q)| p.merge(q)).collect(), x.1 + y.1),
    )
    .expect("at least one path");
    check_divergence(folded.1, cfg.paths, cfg.scheme)?;
    let inv = 1.0 / m as f64;
    let mut norms = Vec::with_capacity(nw);
    let mut ses = Vec::with_capacity(nw);
    for a in &folded.0 {
        let v = a.mean.max(0.0).powf(inv);
        norms.push(v);
        // delta method for E^{1/m}
        ses.push(if a.mean > 0.0 {
            inv * v / a.mean * a.std_error()
        } else {
            0.0
        });
    }
    if norms.contains(&0.0) {
        return Err(Error::Refused(
            "a window norm vanished; the exponent is undefined".into(),
        ));
    }
    Ok((norms, ses))
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UniformityRow {
    pub n: u32,
    pub t: f64,
    pub x: f64,
    pub measured: f64,
    pub std_error: f64,
    /// `(1 + |x| + t^{-1/2}) ||phi||_inf`.
    pub rhs: f64,
    pub ratio: f64,
}

/// Ratio table of the gradient bound across mollification levels.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UniformityReport {
    pub observable: String,
    pub rows: Vec<UniformityRow>,
    /// `(t, x, max_n ratio)`.
    pub sup_over_n: Vec<(f64, f64, f64)>,
    /// Common slope of `ratio` against `ln n`, one intercept per `(t, x)`.
    pub fit: Option<LinearFit>,
    pub sup_ratio: f64,
    pub slope_tolerance: f64,
    pub pass: bool,
}

/// Largest accepted `|slope|` of the ratio against `ln n`.
pub const UNIFORMITY_SLOPE_TOLERANCE: f64 = 0.05;

/// Estimates `|grad T^{(n)}_t phi(x)|` for every level on the same noise and
/// bump, and tabulates its ratio to `(1 + |x| + t^{-1/2}) ||phi||_inf`.
pub fn uniform_gradient_check(
    spec: &SingularDriftSpec,
    phi: &Observable,
    times: &[f64],
    xs: &[f64],
    levels: &[u32],
    cfg: &EstimatorConfig,
    bump: Option<f64>,
) -> Result<UniformityReport> {
    let sup = phi
        .sup_abs()
        .ok_or_else(|| Error::Assumption("the observable must be bounded".into()))?;
    if times.is_empty() || xs.is_empty() || levels.is_empty() {
        return Err(Error::arg("empty grid"));
    }
    let mut rows = Vec::new();
    for &x in xs {
        let mut deltas: Option<Vec<f64>> = bump.map(|h| vec![h; times.len()]);
        for &n in levels {
            let model = spec.model(n)?;
            let d = match &deltas {
                Some(d) => d.clone(),
                None => {
                    let d = default_bumps(&model, phi, times, &[x], cfg)?;
                    deltas = Some(d.clone());
                    d
                }
            };
            let est = gradient_fd_with_bumps(&model, phi, times, &[x], cfg, &d)?;
            for e in est {
                let rhs = (1.0 + x.abs() + 1.0 / e.t.sqrt()) * sup;
                let measured = e.magnitude();
                rows.push(UniformityRow {
                    n,
                    t: e.t,
                    x,
                    measured,
                    std_error: e.magnitude_std_error(),
                    rhs,
                    ratio: if rhs > 0.0 { measured / rhs } else { 0.0 },
                });
            }
        }
    }
    let mut groups = Vec::new();
    let mut sup_over_n = Vec::new();
    for &x in xs {
        for &t in times {
            let sel: Vec<&UniformityRow> = rows.iter().filter(|r| r.x == x && r.t == t).collect();
            sup_over_n.push((t, x, sel.iter().map(|r| r.ratio).fold(0.0, f64::max)));
            groups.push((
                sel.iter().map(|r| (r.n as f64).ln()).collect::<Vec<_>>(),
                sel.iter().map(|r| r.ratio).collect::<Vec<_>>(),
            ));
        }
    }
    let fit = grouped_slope_fit(&groups).map(|g| g.0);
    let sup_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let flat = rows.iter().all(|r| r.ratio == 0.0);
    let pass = sup_ratio.is_finite() && (flat || fit.is_some_and(|f| f.slope.abs() <= UNIFORMITY_SLOPE_TOLERANCE));
    Ok(UniformityReport {
        observable: phi.name(),
        rows,
        sup_over_n,
        fit,
        sup_ratio,
        slope_tolerance: UNIFORMITY_SLOPE_TOLERANCE,
        pass,
    })
}
