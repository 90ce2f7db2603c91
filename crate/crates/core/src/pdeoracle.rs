//! Deterministic reference values: Gaussian and Ornstein-Uhlenbeck
//! semigroups by closed form or quadrature, and a finite-difference solver
//! for the one-dimensional backward Kolmogorov equation.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};
#[allow(unused_imports)] // inherent on toolchains with float math in core
use num_traits::Float;

use crate::coeffs::CoefficientModel;
use crate::quadrature::{integrate, Tolerance};
use crate::{Error, Observable, Result};

/// The parabolic cylinder `Q_R(t, x) = (t - R^2, t + R^2) x B_R(x)`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CylinderSpec {
    pub t: f64,
    pub x: Vec<f64>,
    pub radius: f64,
}

impl CylinderSpec {
    pub fn new(t: f64, x: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::arg("cylinder radius must be positive"));
        }
        Ok(CylinderSpec { t, x, radius })
    }

    pub fn contains(&self, t: f64, y: &[f64]) -> bool {
        let r2 = self.radius * self.radius;
        (t - self.t).abs() < r2 && crate::linalg::dist(y, &self.x) < self.radius
    }
}

/// Half-width of the standard normal integration range.
const Z_RANGE: f64 = 12.0;

const ORACLE_TOL: Tolerance = Tolerance {
    abs: 1e-14,
    rel: 1e-12,
    max_intervals: 4000,
};

/// `(E g(m + sZ), d/dm, d^2/dm^2)` for standard normal `Z` by quadrature in
/// `z`, split at the jumps of `g`.
pub fn gaussian_moments(phi: &Observable, m: f64, s: f64) -> Result<(f64, f64, f64)> {
    if s == 0.0 {
        let v = phi.eval1(m);
        let (d1, d2) = phi
            .derivatives1(m)
            .ok_or_else(|| Error::Domain("derivatives of a jump function at t = 0".into()))?;
        return Ok((v, d1, d2));
    }
    if !(s > 0.0 && s.is_finite() && m.is_finite()) {
        return Err(Error::arg("Gaussian parameters must be finite with s >= 0"));
    }
    let breaks: Vec<f64> = phi.breakpoints().iter().map(|b| (b - m) / s).collect();
    let dens = |z: f64| (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
    let q = |k: u8| {
        integrate(
            |z| {
                let w = match k {
                    0 => 1.0,
                    1 => z,
                    _ => z * z - 1.0,
                };
                phi.eval1(m + s * z) * w * dens(z)
            },
            -Z_RANGE,
            Z_RANGE,
            &breaks,
            ORACLE_TOL,
        )
        .map(|r| r.0)
    };
    Ok((q(0)?, q(1)? / s, q(2)? / (s * s)))
}

/// `int phi(y) N(x, 2 t a)(dy)` for a constant positive definite `a`.
/// Since `phi` depends on `y_0` only, this is a one-dimensional Gaussian
/// integral with variance `2 t a_00`.
pub fn gaussian_semigroup_exact(phi: &Observable, t: f64, x: &[f64], a: &[f64]) -> Result<f64> {
    Ok(gaussian_semigroup_derivatives(phi, t, x, a)?.0)
}

/// Value and `x_0`-derivatives of [`gaussian_semigroup_exact`].
pub fn gaussian_semigroup_derivatives(phi: &Observable, t: f64, x: &[f64], a: &[f64]) -> Result<(f64, f64, f64)> {
    let d = x.len();
    if d == 0 || a.len() != d * d {
        return Err(Error::arg("a must be a d x d matrix"));
    }
    if crate::linalg::cholesky(d, a).is_none() {
        return Err(Error::arg("a must be positive definite"));
    }
    if !(t >= 0.0) {
        return Err(Error::arg("t must be nonnegative"));
    }
    gaussian_moments(phi, x[0], (2.0 * t * a[0]).sqrt())
}

/// `T_t phi(x)` for `dX = -kappa X dt + sqrt 2 dW` and its first two
/// derivatives in `x_0`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OuClosedForm {
    pub value: f64,
    pub gradient: f64,
    pub hessian: f64,
    pub mean: f64,
    pub std_dev: f64,
}

/// `s_t^2 = (1 - e^{-2 kappa t}) / kappa`, with the limit `2t` at `kappa = 0`.
pub fn ou_variance(kappa: f64, t: f64) -> f64 {
    if kappa.abs() < 1e-12 {
        2.0 * t
    } else {
        -(-2.0 * kappa * t).exp_m1() / kappa
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// `E Z^j`.
fn normal_moment(j: usize) -> f64 {
    if j % 2 == 1 {
        0.0
    } else {
        (1..j).step_by(2).map(|k| k as f64).product()
    }
}

/// `(E g(m + sZ), d/dm, d^2/dm^2)` in closed form where one exists; `tanh`
/// falls back to quadrature.
fn gaussian_closed(phi: &Observable, m: f64, s: f64) -> Result<(f64, f64, f64)> {
    if s == 0.0 {
        return gaussian_moments(phi, m, 0.0);
    }
    let damp = (-0.5 * s * s).exp();
    Ok(match phi {
        Observable::Constant { value } => (*value, 0.0, 0.0),
        Observable::Sin => (damp * m.sin(), damp * m.cos(), -damp * m.sin()),
        Observable::Cos => (damp * m.cos(), -damp * m.sin(), -damp * m.cos()),
        Observable::Sign => {
            let z = m / s;
            (
                2.0 * normal_cdf(z) - 1.0,
                2.0 * normal_pdf(z) / s,
                -2.0 * z * normal_pdf(z) / (s * s),
            )
        }
        Observable::Indicator { threshold } => {
            let z = (m - threshold) / s;
            (normal_cdf(z), normal_pdf(z) / s, -z * normal_pdf(z) / (s * s))
        }
        Observable::Polynomial { coeffs } => {
            let deriv = |c: &[f64]| -> Vec<f64> { c.iter().enumerate().skip(1).map(|(k, v)| k as f64 * v).collect() };
            let expect = |c: &[f64]| -> f64 {
                // E (m + sZ)^k = sum_j C(k, j) m^{k-j} s^j E Z^j
                c.iter()
                    .enumerate()
                    .map(|(k, ck)| {
                        let mut binom = 1.0;
                        let mut acc = 0.0;
                        for j in 0..=k {
                            acc += binom * m.powi((k - j) as i32) * s.powi(j as i32) * normal_moment(j);
                            binom = binom * (k - j) as f64 / (j + 1) as f64;
                        }
                        ck * acc
                    })
                    .sum()
            };
            let c1 = deriv(coeffs);
            let c2 = deriv(&c1);
            (expect(coeffs), expect(&c1), expect(&c2))
        }
        Observable::Tanh => gaussian_moments(phi, m, s)?,
    })
}

/// Exact OU semigroup `E phi(e^{-kappa t} x + s_t Z)` and its
/// `x_0`-derivatives (`e^{-kappa t}` and `e^{-2 kappa t}` times the
/// Gaussian derivatives in the mean).
pub fn ou_closed_form(phi: &Observable, kappa: f64, t: f64, x: &[f64]) -> Result<OuClosedForm> {
    if x.is_empty() {
        return Err(Error::arg("empty point"));
    }
    if !(t >= 0.0 && t.is_finite() && kappa.is_finite()) {
        return Err(Error::arg("t must be nonnegative and kappa finite"));
    }
    let decay = (-kappa * t).exp();
    let mean = decay * x[0];
    let s = ou_variance(kappa, t).sqrt();
    let (v, d1, d2) = gaussian_closed(phi, mean, s)?;
    Ok(OuClosedForm {
        value: v,
        gradient: decay * d1,
        hessian: decay * decay * d2,
        mean,
        std_dev: s,
    })
}

/// Treatment of the artificial box edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BoundaryPolicy {
    /// Edge values are linear extrapolations of the two inner neighbours.
    LinearExtrapolation,
}

/// Solution of `u_tau = a u'' + b u'`, `u(0) = phi`, on a uniform grid;
/// `u(tau, x) = T_tau phi(x)` for time-homogeneous coefficients.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSolution {
    pub lo: f64,
    pub hi: f64,
    pub dx: f64,
    pub dt: f64,
    pub horizon: f64,
    /// Snapshot times.
    pub times: Vec<f64>,
    /// `times x nodes`, row-major.
    pub values: Vec<f64>,
    pub nodes: usize,
    pub boundary: BoundaryPolicy,
    /// Width `4 sqrt(2 Lambda T)` excluded at each edge.
    pub contamination: f64,
    /// Largest excursion of the interior solution outside `[min phi, max phi]`.
    pub max_principle_excess: f64,
}

impl GridSolution {
    pub fn x(&self, j: usize) -> f64 {
        self.lo + j as f64 * self.dx
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.nodes..(k + 1) * self.nodes]
    }

    pub fn terminal(&self) -> &[f64] {
        self.row(self.times.len() - 1)
    }

    /// `[lo, hi]` minus the contamination zone.
    pub fn interior(&self) -> (f64, f64) {
        (self.lo + self.contamination, self.hi - self.contamination)
    }

    fn check_interior(&self, x: f64) -> Result<()> {
        let (a, b) = self.interior();
        if x < a || x > b {
            return Err(Error::Domain(alloc::format!(
                "x = {x} lies outside the uncontaminated interior [{a}, {b}]"
            )));
        }
        Ok(())
    }

    fn cubic_at(&self, row: &[f64], x: f64) -> (f64, f64, f64) {
        // Local cubic through four nodes, differentiated analytically.
        let s = (x - self.lo) / self.dx;
        let j = (s.floor() as isize).clamp(1, self.nodes as isize - 3) as usize;
        let u = s - j as f64;
        let (p0, p1, p2, p3) = (row[j - 1], row[j], row[j + 1], row[j + 2]);
        // Lagrange basis at u + 1, u, u - 1, u - 2.
        let l0 = -u * (u - 1.0) * (u - 2.0) / 6.0;
        let l1 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
        let l2 = -(u + 1.0) * u * (u - 2.0) / 2.0;
        let l3 = (u + 1.0) * u * (u - 1.0) / 6.0;
        let d0 = -(3.0 * u * u - 6.0 * u + 2.0) / 6.0;
        let d1 = (3.0 * u * u - 4.0 * u - 1.0) / 2.0;
        let d2 = -(3.0 * u * u - 2.0 * u - 2.0) / 2.0;
        let d3 = (3.0 * u * u - 1.0) / 6.0;
        let e0 = -(6.0 * u - 6.0) / 6.0;
        let e1 = (6.0 * u - 4.0) / 2.0;
        let e2 = -(6.0 * u - 2.0) / 2.0;
        let e3 = 6.0 * u / 6.0;
        let h = self.dx;
        (
            l0 * p0 + l1 * p1 + l2 * p2 + l3 * p3,
            (d0 * p0 + d1 * p1 + d2 * p2 + d3 * p3) / h,
            (e0 * p0 + e1 * p1 + e2 * p2 + e3 * p3) / (h * h),
        )
    }

    /// `(u, u', u'')` at the horizon by local cubic interpolation.
    pub fn evaluate(&self, x: f64) -> Result<(f64, f64, f64)> {
        self.check_interior(x)?;
        Ok(self.cubic_at(self.terminal(), x))
    }

    /// `(u, u', u'')` at snapshot `k`.
    pub fn evaluate_at(&self, k: usize, x: f64) -> Result<(f64, f64, f64)> {
        if k >= self.times.len() {
            return Err(Error::arg("snapshot index out of range"));
        }
        self.check_interior(x)?;
        Ok(self.cubic_at(self.row(k), x))
    }
}

/// Snapshots kept per solve (plus the initial and final rows).
pub const MAX_SNAPSHOTS: usize = 256;

/// Backward Kolmogorov equation `u_tau = a u'' + b u'` on `[lo, hi]` for a
/// one-dimensional model: Crank-Nicolson in time with two implicit Euler
/// half-steps at the start (Rannacher smoothing), central differences in
/// space, node values initialised by cell averages of `phi`.
pub fn solve_kolmogorov_fd(
    model: &CoefficientModel,
    phi: &Observable,
    horizon: f64,
    bounds: (f64, f64),
    nodes: usize,
    steps: usize,
) -> Result<GridSolution> {
    if model.dim != 1 {
        return Err(Error::arg("the finite-difference oracle is one-dimensional"));
    }
    let (lo, hi) = bounds;
    if !(lo < hi && lo.is_finite() && hi.is_finite()) {
        return Err(Error::arg("box must satisfy lo < hi"));
    }
    if nodes < 5 || steps == 0 {
        return Err(Error::arg("need at least 5 nodes and one step"));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::arg("horizon must be positive"));
    }
    let n = nodes;
    let dx = (hi - lo) / (n - 1) as f64;
    let dt = horizon / steps as f64;
    let xs: Vec<f64> = (0..n).map(|j| lo + j as f64 * dx).collect();
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut big_lambda = 0.0f64;
    let mut tmp = [0.0];
    for j in 0..n {
        model.diffusion(0.0, &[xs[j]], &mut tmp);
        a[j] = tmp[0];
        model.drift(0.0, &[xs[j]], &mut tmp);
        b[j] = tmp[0];
        if !(a[j] > 0.0 && a[j].is_finite() && b[j].is_finite()) {
            return Err(Error::Evaluation { point: vec![xs[j]] });
        }
        big_lambda = big_lambda.max(a[j]);
    }
    let contamination = 4.0 * (2.0 * big_lambda * horizon).sqrt();
    if 2.0 * contamination >= hi - lo {
        return Err(Error::Domain(alloc::format!(
            "box [{lo}, {hi}] is narrower than twice the contamination width {contamination}"
        )));
    }
    let breaks = phi.breakpoints();
    let mut u = vec![0.0; n];
    for j in 0..n {
        let (c0, c1) = (xs[j] - 0.5 * dx, xs[j] + 0.5 * dx);
        let cell_breaks: Vec<f64> = breaks.iter().copied().filter(|&p| p > c0 && p < c1).collect();
        u[j] = integrate(|y| phi.eval1(y), c0, c1, &cell_breaks, Tolerance::default())?.0 / dx;
    }
    let (pmin, pmax) = u
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    // L u at node j = lower u_{j-1} + diag u_j + upper u_{j+1}
    let lower: Vec<f64> = (0..n).map(|j| a[j] / (dx * dx) - b[j] / (2.0 * dx)).collect();
    let diag: Vec<f64> = (0..n).map(|j| -2.0 * a[j] / (dx * dx)).collect();
    let upper: Vec<f64> = (0..n).map(|j| a[j] / (dx * dx) + b[j] / (2.0 * dx)).collect();
    let every = steps.div_ceil(MAX_SNAPSHOTS).max(1);
    let mut times = vec![0.0];
    let mut values = u.clone();
    let mut tau = 0.0;
    let mut rhs = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    for k in 0..steps {
        if k < 2 {
            for _ in 0..2 {
                implicit_step(&lower, &diag, &upper, 0.5 * dt, 1.0, &mut u, &mut rhs, &mut scratch);
            }
        } else {
            implicit_step(&lower, &diag, &upper, dt, 0.5, &mut u, &mut rhs, &mut scratch);
        }
        tau += dt;
        if (k + 1) % every == 0 || k + 1 == steps {
            times.push(if k + 1 == steps { horizon } else { tau });
            values.extend_from_slice(&u);
        }
    }
    let sol = GridSolution {
        lo,
        hi,
        dx,
        dt,
        horizon,
        times,
        values,
        nodes: n,
        boundary: BoundaryPolicy::LinearExtrapolation,
        contamination,
        max_principle_excess: 0.0,
    };
    let (ia, ib) = sol.interior();
    let mut excess = 0.0f64;
    for k in 0..sol.times.len() {
        for (j, v) in sol.row(k).iter().enumerate() {
            let x = sol.x(j);
            if x >= ia && x <= ib {
                excess = excess.max(v - pmax).max(pmin - v);
            }
        }
    }
    Ok(GridSolution {
        max_principle_excess: excess,
        ..sol
    })
}

/// One theta-step `(I - theta dt L) u' = (I + (1 - theta) dt L) u` on the
/// interior nodes, with linear extrapolation to both edges.
#[allow(clippy::too_many_arguments)]
fn implicit_step(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    dt: f64,
    theta: f64,
    u: &mut [f64],
    rhs: &mut [f64],
    scratch: &mut [f64],
) {
    let n = u.len();
    let ex = (1.0 - theta) * dt;
    for j in 1..n - 1 {
        rhs[j] = u[j] + ex * (lower[j] * u[j - 1] + diag[j] * u[j] + upper[j] * u[j + 1]);
    }
    // System rows 1..n-2 with u_0 = 2 u_1 - u_2 and u_{n-1} = 2 u_{n-2} - u_{n-3}.
    let m = n - 2;
    let im = theta * dt;
    let mut lo: Vec<f64> = (1..n - 1).map(|j| -im * lower[j]).collect();
    let mut di: Vec<f64> = (1..n - 1).map(|j| 1.0 - im * diag[j]).collect();
    let mut up: Vec<f64> = (1..n - 1).map(|j| -im * upper[j]).collect();
    // Row for node 1: lo[0] u_0 -> 2 lo[0] u_1 - lo[0] u_2.
    di[0] += 2.0 * lo[0];
    up[0] -= lo[0];
    lo[0] = 0.0;
    di[m - 1] += 2.0 * up[m - 1];
    lo[m - 1] -= up[m - 1];
    up[m - 1] = 0.0;
    let r = &mut rhs[1..n - 1];
    thomas(&lo, &mut di, &up, r, &mut scratch[..m]);
    u[1..n - 1].copy_from_slice(&scratch[..m]);
    u[0] = 2.0 * u[1] - u[2];
    u[n - 1] = 2.0 * u[n - 2] - u[n - 3];
}

/// Tridiagonal solve; `diag` and `rhs` are overwritten.
fn thomas(lower: &[f64], diag: &mut [f64], upper: &[f64], rhs: &mut [f64], out: &mut [f64]) {
    let m = diag.len();
    for i in 1..m {
        let w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    out[m - 1] = rhs[m - 1] / diag[m - 1];
    for i in (0..m - 1).rev() {
        out[i] = (rhs[i] - upper[i] * out[i + 1]) / diag[i];
    }
}
