//! Test functions `phi` for semigroup estimates.
//!
//! Every observable depends on the first coordinate only, `phi(x) = g(x_0)`.
//! That keeps the exact Gaussian and OU oracles one-dimensional in any
//! dimension while still exercising discontinuous, bounded-smooth and
//! polynomially growing data.

use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent on toolchains with float math in core
use num_traits::Float;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Observable {
    Constant {
        value: f64,
    },
    Sin,
    Cos,
    Tanh,
    /// `sign(x_0)` with `sign(0) = 0`.
    Sign,
    /// Indicator of the half-line `[threshold, inf)`.
    Indicator {
        threshold: f64,
    },
    /// `sum_k coeffs[k] x_0^k`.
    Polynomial {
        coeffs: Vec<f64>,
    },
}

impl Observable {
    pub fn name(&self) -> String {
        match self {
            Observable::Constant { value } => alloc::format!("constant({value})"),
            Observable::Sin => "sin".into(),
            Observable::Cos => "cos".into(),
            Observable::Tanh => "tanh".into(),
            Observable::Sign => "sign".into(),
            Observable::Indicator { threshold } => alloc::format!("indicator[{threshold},inf)"),
            Observable::Polynomial { coeffs } => alloc::format!("polynomial{coeffs:?}"),
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.eval1(x[0])
    }

    /// The scalar profile `g`.
    #[inline]
    pub fn eval1(&self, y: f64) -> f64 {
        match self {
            Observable::Constant { value } => *value,
            Observable::Sin => y.sin(),
            Observable::Cos => y.cos(),
            Observable::Tanh => y.tanh(),
            Observable::Sign => {
                if y > 0.0 {
                    1.0
                } else if y < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Observable::Indicator { threshold } => {
                if y >= *threshold {
                    1.0
                } else {
                    0.0
                }
            }
            Observable::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * y + c),
        }
    }

    /// `(g', g'')` where they exist classically; `None` for jump functions.
    pub fn derivatives1(&self, y: f64) -> Option<(f64, f64)> {
        match self {
            Observable::Constant { .. } => Some((0.0, 0.0)),
            Observable::Sin => Some((y.cos(), -y.sin())),
            Observable::Cos => Some((-y.sin(), -y.cos())),
            Observable::Tanh => {
                let th = y.tanh();
                let s = 1.0 - th * th;
                Some((s, -2.0 * th * s))
            }
            Observable::Sign | Observable::Indicator { .. } => None,
            Observable::Polynomial { coeffs } => {
                let mut d1 = 0.0;
                let mut d2 = 0.0;
                for k in (1..coeffs.len()).rev() {
                    d1 = d1 * y + k as f64 * coeffs[k];
                }
                for k in (2..coeffs.len()).rev() {
                    d2 = d2 * y + (k * (k - 1)) as f64 * coeffs[k];
                }
                Some((d1, d2))
            }
        }
    }

    /// Jump locations of `g`.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Observable::Sign => alloc::vec![0.0],
            Observable::Indicator { threshold } => alloc::vec![*threshold],
            _ => Vec::new(),
        }
    }

    /// `sup |phi|`, or `None` when `phi` is unbounded.
    pub fn sup_abs(&self) -> Option<f64> {
        match self {
            Observable::Constant { value } => Some(value.abs()),
            Observable::Sin | Observable::Cos | Observable::Tanh | Observable::Sign | Observable::Indicator { .. } => {
                Some(1.0)
            }
            Observable::Polynomial { coeffs } => {
                if coeffs.iter().skip(1).all(|c| *c == 0.0) {
                    Some(coeffs.first().map_or(0.0, |c| c.abs()))
                } else {
                    None
                }
            }
        }
    }

    /// Degree of polynomial growth (0 for bounded observables).
    pub fn growth_degree(&self) -> usize {
        match self {
            Observable::Polynomial { coeffs } => coeffs.iter().rposition(|c| *c != 0.0).unwrap_or(0),
            _ => 0,
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Observable::Constant { .. } => true,
            Observable::Polynomial { .. } => self.growth_degree() == 0,
            _ => false,
        }
    }

    /// `phi - c`.
    pub fn shifted(&self, c: f64) -> Shifted<'_> {
        Shifted { phi: self, c }
    }
}

/// An observable minus a constant, as used for centering.
#[derive(Clone, Copy, Debug)]
pub struct Shifted<'a> {
    pub phi: &'a Observable,
    pub c: f64,
}

impl Shifted<'_> {
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.phi.eval(x) - self.c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_derivatives() {
        let p = Observable::Polynomial {
            coeffs: alloc::vec![-1.0, 0.0, 1.0],
        };
        assert_eq!(p.eval1(2.0), 3.0);
        assert_eq!(p.derivatives1(2.0), Some((4.0, 2.0)));
        assert_eq!(p.growth_degree(), 2);
        assert!(p.sup_abs().is_none());
    }

    #[test]
    fn jumps() {
        assert_eq!(Observable::Sign.eval1(0.0), 0.0);
        assert_eq!(Observable::Indicator { threshold: 0.0 }.eval1(0.0), 1.0);
        assert!(Observable::Sign.derivatives1(1.0).is_none());
    }

    #[test]
    fn tanh_derivatives_match_differences() {
        let h = 1e-5;
        let y = 0.7;
        let (d1, d2) = Observable::Tanh.derivatives1(y).unwrap();
        let f = |y: f64| y.tanh();
        assert!((d1 - (f(y + h) - f(y - h)) / (2.0 * h)).abs() < 1e-8);
        assert!((d2 - (f(y + h) - 2.0 * f(y) + f(y - h)) / (h * h)).abs() < 1e-4);
    }
}
