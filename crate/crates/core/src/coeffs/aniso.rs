use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent on toolchains with float math in core
use num_traits::Float;

use crate::{Error, Result};

/// Space-time box `(t0, t1) x prod_k (lo_k, hi_k)`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Cylinder {
    pub t0: f64,
    pub t1: f64,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Values of `u(t, x)` on a tensor grid. `values` is time-major, then
/// row-major in space (last axis fastest).
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpaceTimeGrid {
    pub times: Vec<f64>,
    pub axes: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    for i in 0..n - 1 {
        let h = 0.5 * (x[i + 1] - x[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    w
}

impl SpaceTimeGrid {
    /// Samples `f` on a uniform grid with `nt` times and `nx` nodes per axis.
    pub fn sample<F: Fn(f64, &[f64]) -> f64>(cyl: &Cylinder, nt: usize, nx: usize, f: F) -> Self {
        let times = linspace(cyl.t0, cyl.t1, nt);
        let axes: Vec<Vec<f64>> = cyl.lo.iter().zip(&cyl.hi).map(|(&a, &b)| linspace(a, b, nx)).collect();
        let mut grid = SpaceTimeGrid {
            times,
            axes,
            values: Vec::new(),
        };
        let space = grid.space_len();
        let d = grid.axes.len();
        let mut x = vec![0.0; d];
        grid.values.reserve(nt * space);
        for &t in &grid.times {
            for s in 0..space {
                grid.point(s, &mut x);
                grid.values.push(f(t, &x));
            }
        }
        grid
    }

    pub fn space_len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    fn point(&self, mut s: usize, x: &mut [f64]) {
        for k in (0..self.axes.len()).rev() {
            let n = self.axes[k].len();
            x[k] = self.axes[k][s % n];
            s /= n;
        }
    }

    fn check_shape(&self) -> Result<()> {
        if self.times.len() < 2 || self.axes.iter().any(|a| a.len() < 2) {
            return Err(Error::arg("grid needs at least two nodes per axis"));
        }
        if self.values.len() != self.times.len() * self.space_len() {
            return Err(Error::arg("grid values do not match the axes"));
        }
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        if !increasing(&self.times) || !self.axes.iter().all(|a| increasing(a)) {
            return Err(Error::arg("grid axes must be strictly increasing"));
        }
        Ok(())
    }

    /// `|D_x u|` by second-order differences (one-sided at the box edges).
    pub fn gradient_magnitude(&self) -> Result<SpaceTimeGrid> {
        self.check_shape()?;
        let d = self.axes.len();
        let space = self.space_len();
        let mut strides = vec![1usize; d];
        for k in (0..d.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.axes[k + 1].len();
        }
        let mut out = vec![0.0; self.values.len()];
        for (ti, _) in self.times.iter().enumerate() {
            let u = &self.values[ti * space..(ti + 1) * space];
            for s in 0..space {
                let mut g2 = 0.0;
                for k in 0..d {
                    let ax = &self.axes[k];
                    let n = ax.len();
                    let i = (s / strides[k]) % n;
                    let at = |j: usize| u[s - i * strides[k] + j * strides[k]];
                    let g = if i == 0 {
                        let (h1, h2) = (ax[1] - ax[0], ax[2] - ax[0]);
                        // quadratic through nodes 0,1,2
                        (-(h1 + h2) / (h1 * h2)) * at(0) + h2 / (h1 * (h2 - h1)) * at(1) - h1 / (h2 * (h2 - h1)) * at(2)
                    } else if i == n - 1 {
                        let (h1, h2) = (ax[n - 1] - ax[n - 2], ax[n - 1] - ax[n - 3]);
                        ((h1 + h2) / (h1 * h2)) * at(n - 1) - h2 / (h1 * (h2 - h1)) * at(n - 2)
                            + h1 / (h2 * (h2 - h1)) * at(n - 3)
                    } else {
                        let (hm, hp) = (ax[i] - ax[i - 1], ax[i + 1] - ax[i]);
                        (-hp / (hm * (hm + hp))) * at(i - 1)
                            + ((hp - hm) / (hm * hp)) * at(i)
                            + (hm / (hp * (hm + hp))) * at(i + 1)
                    };
                    g2 += g * g;
                }
                out[ti * space + s] = g2.sqrt();
            }
        }
        Ok(SpaceTimeGrid {
            times: self.times.clone(),
            axes: self.axes.clone(),
            values: out,
        })
    }
}

/// `|u|_{L^q_t L^p_x}` on the cylinder: trapezoidal `L^p` in space at each
/// time node, then trapezoidal `L^q` in time. Infinite exponents take maxima.
pub fn anisotropic_norm(u: &SpaceTimeGrid, q: f64, p: f64, cyl: &Cylinder) -> Result<f64> {
    if !(q >= 1.0 && p >= 1.0) {
        return Err(Error::arg("exponents must lie in [1, inf]"));
    }
    u.check_shape()?;
    let d = u.axes.len();
    if cyl.lo.len() != d || cyl.hi.len() != d {
        return Err(Error::arg("cylinder dimension does not match the grid"));
    }
    let close = |a: f64, b: f64, scale: f64| (a - b).abs() <= 1e-9 * scale.max(1.0);
    let tspan = cyl.t1 - cyl.t0;
    let nt = u.times.len();
    if !close(u.times[0], cyl.t0, tspan) || !close(u.times[nt - 1], cyl.t1, tspan) {
        return Err(Error::arg("grid times do not cover the cylinder"));
    }
    for k in 0..d {
        let ax = &u.axes[k];
        let span = cyl.hi[k] - cyl.lo[k];
        if !close(ax[0], cyl.lo[k], span) || !close(ax[ax.len() - 1], cyl.hi[k], span) {
            return Err(Error::arg("grid space axes do not cover the cylinder"));
        }
    }
    let space = u.space_len();
    let weights: Vec<Vec<f64>> = u.axes.iter().map(|a| trapezoid_weights(a)).collect();
    let mut wspace = vec![1.0; space];
    let mut x = vec![0usize; d];
    for (s, w) in wspace.iter_mut().enumerate() {
        let mut r = s;
        for k in (0..d).rev() {
            let n = u.axes[k].len();
            x[k] = r % n;
            r /= n;
        }
        for k in 0..d {
            *w *= weights[k][x[k]];
        }
    }
    let mut inner = vec![0.0; nt];
    for (ti, slot) in inner.iter_mut().enumerate() {
        let row = &u.values[ti * space..(ti + 1) * space];
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluation {
                point: alloc::vec![u.times[ti]],
            });
        }
        *slot = if p.is_infinite() {
            row.iter().fold(0.0f64, |a, v| a.max(v.abs()))
        } else {
            let top = row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if top == 0.0 {
                0.0
            } else {
                let s: f64 = row.iter().zip(&wspace).map(|(v, w)| w * (v.abs() / top).powf(p)).sum();
                top * s.powf(1.0 / p)
            }
        };
    }
    if q.is_infinite() {
        return Ok(inner.iter().fold(0.0f64, |a, &v| a.max(v)));
    }
    let top = inner.iter().fold(0.0f64, |a, &v| a.max(v));
    if top == 0.0 {
        return Ok(0.0);
    }
    let wt = trapezoid_weights(&u.times);
    let s: f64 = inner.iter().zip(&wt).map(|(v, w)| w * (v / top).powf(q)).sum();
    Ok(top * s.powf(1.0 / q))
}
