//! Distributional drifts `b = b1 + b2` with `b1 = V'` for a rough periodic
//! `V`, their mollifications `b_{1;n} = b1 * phi_n`, and experiments on the
//! mollified dynamics.

mod experiments;

pub use experiments::{
    drift_functional_cauchy, krylov_fit, uniform_gradient_check, CauchyReport, KrylovFit, UniformityReport,
    UniformityRow,
};

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)] // inherent on toolchains with float math in core
use num_traits::Float;

use crate::coeffs::{CoefficientModel, DriftGrowth, Dynamics};
use crate::quadrature::composite_gauss_legendre;
use crate::{Error, Result};

/// One term `amplitude * cos(frequency * x + phase)` of `V`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Mode {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

/// `V(x) = slope x + sum_k a_k cos(w_k x + psi_k)`, `b1 = V'`, and
/// `b2(x) = offset + gain x`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SingularDriftSpec {
    /// Hoelder exponent of `V`.
    pub alpha_prime: f64,
    pub slope: f64,
    pub modes: Vec<Mode>,
    /// Declared regularity index of `b1`, in `(-1, -1/2]`.
    pub alpha_b: f64,
    pub p_b: f64,
    pub q_b: f64,
    pub b2_offset: f64,
    pub b2_gain: f64,
}

/// Number of lacunary modes in the canonical family (`w_k = 2^k`, `k < 21`).
pub const CANONICAL_MODES: usize = 21;

/// `|m(xi)|` is below `1e-14` past this frequency and is taken as zero.
pub const MOLLIFIER_CUTOFF: f64 = 2000.0;

/// Grid size of the tabulated periodic drift.
pub const TABLE_NODES: usize = 1 << 18;

impl SingularDriftSpec {
    /// `V = sum_{k < 21} 2^{-k alpha'} cos(2^k x)`, `b2 = 0`. The declared
    /// `alpha_b = min(alpha' - 1, -1/2)`: rougher exponents are admissible
    /// since `H^s` embeds in `H^{s'}` for `s' < s`.
    pub fn canonical(alpha_prime: f64) -> Self {
        let modes = (0..CANONICAL_MODES)
            .map(|k| Mode {
                amplitude: 2f64.powf(-(k as f64) * alpha_prime),
                frequency: 2f64.powi(k as i32),
                phase: 0.0,
            })
            .collect();
        SingularDriftSpec {
            alpha_prime,
            slope: 0.0,
            modes,
            alpha_b: (alpha_prime - 1.0).min(-0.5),
            p_b: f64::INFINITY,
            q_b: f64::INFINITY,
            b2_offset: 0.0,
            b2_gain: 0.0,
        }
    }

    /// `V(x) = slope x`, so `b1` is the constant `slope`.
    pub fn constant(slope: f64) -> Self {
        SingularDriftSpec {
            alpha_prime: 1.0,
            slope,
            modes: Vec::new(),
            alpha_b: -0.5,
            p_b: f64::INFINITY,
            q_b: f64::INFINITY,
            b2_offset: 0.0,
            b2_gain: 0.0,
        }
    }

    pub fn with_b2(mut self, offset: f64, gain: f64) -> Self {
        self.b2_offset = offset;
        self.b2_gain = gain;
        self
    }

    /// Checks `alpha_b in (-1, -1/2]` and `d/p_b + 2/q_b < 1 + alpha_b` (d = 1).
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_b > -1.0 && self.alpha_b <= -0.5) {
            return Err(Error::arg(alloc::format!(
                "alpha_b = {} outside (-1, -1/2]",
                self.alpha_b
            )));
        }
        if !(1.0 / self.p_b + 2.0 / self.q_b < 1.0 + self.alpha_b) {
            return Err(Error::ExponentRegime(alloc::format!(
                "1/p_b + 2/q_b = {} is not below 1 + alpha_b = {}",
                1.0 / self.p_b + 2.0 / self.q_b,
                1.0 + self.alpha_b
            )));
        }
        if self
            .modes
            .iter()
            .any(|m| !(m.amplitude.is_finite() && m.frequency.is_finite() && m.phase.is_finite()))
        {
            return Err(Error::arg("modes must be finite"));
        }
        Ok(())
    }

    /// `V(x)`.
    pub fn potential(&self, x: f64) -> f64 {
        self.slope * x
            + self
                .modes
                .iter()
                .map(|m| m.amplitude * (m.frequency * x + m.phase).cos())
                .sum::<f64>()
    }

    /// Spec of `V(. - s)`.
    pub fn translated(&self, s: f64) -> Self {
        let mut out = self.clone();
        for m in &mut out.modes {
            m.phase -= m.frequency * s;
        }
        out
    }

    /// Spec of `c V + W` (for `b2` the first operand is kept).
    pub fn combine(&self, c: f64, other: &Self) -> Self {
        let mut out = self.clone();
        out.slope = c * self.slope + other.slope;
        for m in &mut out.modes {
            m.amplitude *= c;
        }
        out.modes.extend(other.modes.iter().copied());
        out
    }

    /// The mollified drift `b_{1;n} = V * phi_n'`.
    pub fn mollify(&self, n: u32) -> Result<MollifiedDrift> {
        if n == 0 {
            return Err(Error::arg("mollification level must be at least 1"));
        }
        let bump = Bump::standard();
        let n = n as f64;
        let terms: Vec<(f64, f64, f64)> = self
            .modes
            .iter()
            .filter_map(|m| {
                let damp = bump.cosine_transform(m.frequency / n);
                let c = -m.amplitude * m.frequency * damp;
                (c != 0.0).then_some((c, m.frequency, m.phase))
            })
            .collect();
        let sup_bound = self.slope.abs() + terms.iter().map(|t| t.0.abs()).sum::<f64>();
        let integer = terms.iter().all(|t| t.1.fract() == 0.0);
        let table = if integer && !terms.is_empty() {
            Some(Arc::new(Table::new(self.slope, &terms)))
        } else {
            None
        };
        Ok(MollifiedDrift {
            slope: self.slope,
            terms,
            sup_bound,
            table,
        })
    }

    /// `dX = (b_{1;n} + b2) dt + sqrt(2) dW` as a coefficient model.
    pub fn model(&self, n: u32) -> Result<CoefficientModel> {
        self.validate()?;
        let drift = self.mollify(n)?;
        let growth = if self.b2_gain == 0.0 {
            DriftGrowth::Bounded
        } else {
            DriftGrowth::Linear
        };
        let dynamics = MollifiedDynamics {
            drift,
            offset: self.b2_offset,
            gain: self.b2_gain,
        };
        let mut m = CoefficientModel::new(
            alloc::format!("singular_v[n={n}]"),
            Arc::new(dynamics),
            1.0,
            f64::INFINITY,
            growth,
        )?;
        m.lambda_fn = Some(Arc::new(|_x: &[f64]| 1.0));
        m.big_lambda_fn = Some(Arc::new(|_x: &[f64]| 1.0));
        m.comparability = Some(1.0);
        Ok(m)
    }
}

/// `phi(y) = c exp(-1/(1 - y^2))` on `(-1, 1)` with unit mass.
#[derive(Clone, Copy, Debug)]
pub struct Bump {
    norm: f64,
}

impl Bump {
    pub fn standard() -> Self {
        let mass = composite_gauss_legendre(Self::raw, -1.0, 1.0, 64, 10);
        Bump { norm: 1.0 / mass }
    }

    fn raw(y: f64) -> f64 {
        if y.abs() >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - y * y)).exp()
        }
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.norm * Self::raw(y)
    }

    /// `m(xi) = int phi(y) cos(xi y) dy`, zero beyond [`MOLLIFIER_CUTOFF`].
    pub fn cosine_transform(&self, xi: f64) -> f64 {
        let xi = xi.abs();
        if xi > MOLLIFIER_CUTOFF {
            return 0.0;
        }
        let panels = (xi as usize).max(64);
        composite_gauss_legendre(|y| self.eval(y) * (xi * y).cos(), -1.0, 1.0, panels, 10)
    }
}

/// Values and slopes of a `2 pi`-periodic drift on a uniform grid.
#[derive(Debug)]
struct Table {
    values: Vec<f64>,
    slopes: Vec<f64>,
    step: f64,
}

impl Table {
    fn new(slope: f64, terms: &[(f64, f64, f64)]) -> Self {
        let step = 2.0 * PI / TABLE_NODES as f64;
        let mut values = vec![slope; TABLE_NODES + 1];
        let mut slopes = vec![0.0; TABLE_NODES + 1];
        for (i, (v, s)) in values.iter_mut().zip(slopes.iter_mut()).enumerate() {
            let x = i as f64 * step;
            for &(c, w, psi) in terms {
                let arg = w * x + psi;
                *v += c * arg.sin();
                *s += c * w * arg.cos();
            }
        }
        Table { values, slopes, step }
    }

    #[inline]
    fn locate(&self, x: f64) -> (usize, f64) {
        let p = 2.0 * PI;
        let y = (x - p * (x / p).floor()) / self.step;
        let i = (y as usize).min(TABLE_NODES - 1);
        (i, y - i as f64)
    }

    #[inline]
    fn value(&self, x: f64) -> f64 {
        let (i, f) = self.locate(x);
        self.values[i] + f * (self.values[i + 1] - self.values[i])
    }

    #[inline]
    fn slope(&self, x: f64) -> f64 {
        let (i, f) = self.locate(x);
        self.slopes[i] + f * (self.slopes[i + 1] - self.slopes[i])
    }
}

/// `b_{1;n}(x) = slope + sum_k c_k sin(w_k x + psi_k)`.
#[derive(Clone, Debug)]
pub struct MollifiedDrift {
    pub slope: f64,
    /// `(c_k, w_k, psi_k)` with `c_k = -a_k w_k m(w_k / n)`.
    pub terms: Vec<(f64, f64, f64)>,
    /// `|slope| + sum_k |c_k|`, an upper bound for `sup |b_{1;n}|`.
    pub sup_bound: f64,
    table: Option<Arc<Table>>,
}

impl MollifiedDrift {
    /// Exact series value.
    pub fn eval_exact(&self, x: f64) -> f64 {
        self.slope
            + self
                .terms
                .iter()
                .map(|&(c, w, psi)| c * (w * x + psi).sin())
                .sum::<f64>()
    }

    pub fn derivative_exact(&self, x: f64) -> f64 {
        self.terms.iter().map(|&(c, w, psi)| c * w * (w * x + psi).cos()).sum()
    }

    /// Value used by simulations: the periodic table when the frequencies
    /// are integers, else the series.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match &self.table {
            Some(t) => t.value(x),
            None => self.eval_exact(x),
        }
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        match &self.table {
            Some(t) => t.slope(x),
            None => self.derivative_exact(x),
        }
    }

    /// `sup_{B_1(x)} |b_{1;n}|` on a grid of `nodes` points.
    pub fn sup_on_ball(&self, x: f64, nodes: usize) -> f64 {
        (0..=nodes)
            .map(|i| self.eval_exact(x - 1.0 + 2.0 * i as f64 / nodes as f64).abs())
            .fold(0.0, f64::max)
    }
}

struct MollifiedDynamics {
    drift: MollifiedDrift,
    offset: f64,
    gain: f64,
}

impl Dynamics for MollifiedDynamics {
    fn dim(&self) -> usize {
        1
    }
    #[inline]
    fn drift(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        out[0] = self.drift.eval(x[0]) + self.offset + self.gain * x[0];
    }
    fn sigma(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
        out[0] = 1.0;
    }
    fn drift_jacobian(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        out[0] = self.drift.derivative(x[0]) + self.gain;
    }
    fn sigma_gradient(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
        out[0] = 0.0;
    }
    fn constant_sigma(&self) -> bool {
        true
    }
}
