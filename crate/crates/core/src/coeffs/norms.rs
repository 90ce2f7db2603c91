use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)] // inherent on toolchains with float math in core
use num_traits::Float;

use super::CoefficientModel;
use crate::quadrature::halton;
use crate::rng::PathRng;
use crate::{linalg, Error, Result};

/// Field magnitudes above this are reported as "unbounded above budget"
/// (`f64::INFINITY`) rather than as a number.
pub const UNBOUNDED_CAP: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum NormMethod {
    ClosedForm,
    PairSampling,
    Quadrature,
}

/// `[a]_{C^alpha(B_1(x))}`, `|b|_{L^{p_b}(B_1(x))}` and `|b|_{C^alpha(B_1(x))}`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LocalNorms {
    pub holder_a: f64,
    pub lp_b: f64,
    pub holder_b: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LocalNormReport {
    pub center: Vec<f64>,
    pub alpha: f64,
    pub holder_a: f64,
    pub lp_b: f64,
    pub holder_b: f64,
    pub sample_count: usize,
    pub method: NormMethod,
}

impl LocalNormReport {
    pub fn norms(&self) -> LocalNorms {
        LocalNorms {
            holder_a: self.holder_a,
            lp_b: self.lp_b,
            holder_b: self.holder_b,
        }
    }
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    PI.powf(h) / libm::tgamma(h + 1.0)
}

fn sample_ball(rng: &mut PathRng, x: &[f64], out: &mut [f64]) {
    let d = x.len();
    if d == 1 {
        out[0] = x[0] + 2.0 * rng.uniform() - 1.0;
        return;
    }
    rng.fill_normal(out);
    let n = linalg::norm(out).max(f64::MIN_POSITIVE);
    let r = rng.uniform().powf(1.0 / d as f64);
    for (o, c) in out.iter_mut().zip(x) {
        *o = c + *o * r / n;
    }
}

fn eval_checked<F: Fn(&[f64], &mut [f64])>(f: &F, y: &[f64], out: &mut [f64]) -> Result<()> {
    f(y, out);
    if out.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Evaluation { point: y.to_vec() })
    }
}

/// Lower estimate of `[f]_{C^alpha(B_1(x))}` for a field with `m` components
/// (Euclidean norm of the difference; Frobenius for matrices).
///
/// Pairs are drawn from one stream, so a larger budget sees a superset of the
/// pairs of a smaller one and the estimate is nondecreasing in `pairs`. Odd
/// pairs are independent uniform points; even pairs put the second point at a
/// log-uniform distance in `[1e-4, 1]` from the first, which is where the
/// supremum sits for `alpha` close to one.
pub fn local_holder_seminorm<F: Fn(&[f64], &mut [f64])>(
    f: F,
    m: usize,
    x: &[f64],
    alpha: f64,
    pairs: usize,
    seed: u64,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::arg("alpha must lie in (0, 1]"));
    }
    let d = x.len();
    let mut rng = PathRng::new(seed, 0x486f_6c64);
    let mut y = vec![0.0; d];
    let mut z = vec![0.0; d];
    let mut dir = vec![0.0; d];
    let mut fy = vec![0.0; m];
    let mut fz = vec![0.0; m];
    let mut best = 0.0f64;
    for k in 0..pairs {
        sample_ball(&mut rng, x, &mut y);
        if k % 2 == 0 {
            sample_ball(&mut rng, x, &mut z);
        } else {
            rng.fill_normal(&mut dir);
            let n = linalg::norm(&dir).max(f64::MIN_POSITIVE);
            let r = 10f64.powf(-4.0 * rng.uniform());
            for i in 0..d {
                z[i] = y[i] + r * dir[i] / n;
            }
            if linalg::dist(&z, x) > 1.0 {
                continue;
            }
        }
        let sep = linalg::dist(&y, &z);
        if sep == 0.0 {
            continue;
        }
        eval_checked(&f, &y, &mut fy)?;
        eval_checked(&f, &z, &mut fz)?;
        let diff = linalg::dist(&fy, &fz);
        best = best.max(diff / sep.powf(alpha));
    }
    Ok(best)
}

/// `|b|_{L^p(B_1(x))}` for a field with `m` components. Finite `p` uses
/// quasi-Monte Carlo on `nodes` Halton points of the enclosing cube;
/// `p = inf` takes the sup over the same points plus the centre and the
/// axis endpoints. Returns `f64::INFINITY` if any sampled magnitude exceeds
/// [`UNBOUNDED_CAP`].
pub fn local_lp_norm<F: Fn(&[f64], &mut [f64])>(b: F, m: usize, x: &[f64], p: f64, nodes: usize) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::arg("p must lie in (1, inf]"));
    }
    let d = x.len();
    let mut u = vec![0.0; d];
    let mut y = vec![0.0; d];
    let mut v = vec![0.0; m];
    let mut mags = Vec::with_capacity(nodes + 2 * d + 1);
    for i in 0..nodes as u64 {
        halton(i, d, &mut u);
        for k in 0..d {
            y[k] = x[k] + 2.0 * u[k] - 1.0;
        }
        if linalg::dist(&y, x) <= 1.0 {
            eval_checked(&b, &y, &mut v)?;
            mags.push(linalg::norm(&v));
        }
    }
    if mags.is_empty() {
        return Err(Error::arg("node budget too small for the unit ball"));
    }
    let quad_count = mags.len();
    if p.is_infinite() {
        y.copy_from_slice(x);
        eval_checked(&b, &y, &mut v)?;
        mags.push(linalg::norm(&v));
        for k in 0..d {
            for s in [-1.0, 1.0] {
                y.copy_from_slice(x);
                y[k] += s;
                eval_checked(&b, &y, &mut v)?;
                mags.push(linalg::norm(&v));
            }
        }
    }
    let top = mags.iter().fold(0.0f64, |a, &b| a.max(b));
    if top > UNBOUNDED_CAP {
        return Ok(f64::INFINITY);
    }
    if p.is_infinite() || top == 0.0 {
        return Ok(top);
    }
    let mean = mags[..quad_count].iter().map(|&g| (g / top).powf(p)).sum::<f64>() / quad_count as f64;
    Ok(top * (unit_ball_volume(d) * mean).powf(1.0 / p))
}

/// `max_grid |phi| / rho0`.
pub fn weighted_sup_norm<P, R>(phi: P, rho0: R, grid: &[Vec<f64>]) -> Result<f64>
where
    P: Fn(&[f64]) -> f64,
    R: Fn(&[f64]) -> f64,
{
    if grid.is_empty() {
        return Err(Error::arg("weighted sup norm needs a non-empty grid"));
    }
    let mut best = 0.0f64;
    for x in grid {
        let w = rho0(x);
        let v = phi(x);
        if !w.is_finite() || !v.is_finite() {
            return Err(Error::Evaluation { point: x.clone() });
        }
        if w < 1.0 {
            return Err(Error::arg(alloc::format!("weight {w} < 1 at {x:?}")));
        }
        best = best.max(v.abs() / w);
    }
    Ok(best)
}

/// Local norms of a model on `B_1(x)` at time `t`. Closed forms are used when
/// the model carries them; otherwise `pairs` Hoelder pairs and `nodes`
/// quadrature nodes are spent.
pub fn local_norms(
    model: &CoefficientModel,
    t: f64,
    x: &[f64],
    pairs: usize,
    nodes: usize,
    seed: u64,
) -> Result<LocalNormReport> {
    let d = model.dim;
    if x.len() != d {
        return Err(Error::arg("point dimension does not match the model"));
    }
    if let Some(f) = &model.norms_fn {
        let n = f(x);
        return Ok(LocalNormReport {
            center: x.to_vec(),
            alpha: model.alpha,
            holder_a: n.holder_a,
            lp_b: n.lp_b,
            holder_b: n.holder_b,
            sample_count: 0,
            method: NormMethod::ClosedForm,
        });
    }
    let alpha = model.alpha;
    let holder_a = local_holder_seminorm(|y, o| model.diffusion(t, y, o), d * d, x, alpha, pairs, seed)?;
    let drift = |y: &[f64], o: &mut [f64]| model.drift(t, y, o);
    let lp_b = local_lp_norm(drift, d, x, model.p_b, nodes)?;
    let sup_b = if model.p_b.is_infinite() {
        lp_b
    } else {
        local_lp_norm(drift, d, x, f64::INFINITY, nodes)?
    };
    let holder_b = sup_b + local_holder_seminorm(drift, d, x, alpha, pairs, seed ^ 1)?;
    Ok(LocalNormReport {
        center: x.to_vec(),
        alpha,
        holder_a,
        lp_b,
        holder_b,
        sample_count: pairs,
        method: NormMethod::PairSampling,
    })
}

/// Largest sampled `c0 <= 1` with `c0 lambda(x) <= lambda(y)` and
/// `Lambda(y) <= Lambda(x) / c0` for `y` in `B_1(x)`.
pub fn ellipticity_comparability(model: &CoefficientModel, x: &[f64], samples: usize, seed: u64) -> Result<f64> {
    if let Some(c) = model.comparability {
        return Ok(c);
    }
    let (lo, hi) = model.ellipticity(x)?;
    let mut rng = PathRng::new(seed, 0x004c_4c32);
    let mut y = vec![0.0; x.len()];
    let mut c = 1.0f64;
    for _ in 0..samples {
        sample_ball(&mut rng, x, &mut y);
        let (l, u) = model.ellipticity(&y)?;
        c = c.min(l / lo).min(hi / u);
    }
    Ok(c)
}
