//! Streaming moments and least-squares fits.

use alloc::vec::Vec;
#[allow(unused_imports)] // inherent on toolchains with float math in core
use num_traits::Float;

/// Count, mean and centred second moment, merged with Chan's update so that
/// a fixed merge tree gives a fixed result.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MeanVar {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl MeanVar {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(self, other: MeanVar) -> MeanVar {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        MeanVar {
            n,
            mean: self.mean + delta * w,
            m2: self.m2 + other.m2 + delta * delta * self.n as f64 * w,
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            return f64::INFINITY;
        }
        (self.variance() / self.n as f64).sqrt()
    }
}

/// One `MeanVar` per component.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MeanVarVec(pub Vec<MeanVar>);

impl MeanVarVec {
    pub fn zeros(k: usize) -> Self {
        MeanVarVec(alloc::vec![MeanVar::new(); k])
    }

    pub fn push(&mut self, xs: &[f64]) {
        for (m, &x) in self.0.iter_mut().zip(xs) {
            m.push(x);
        }
    }

    pub fn merge(self, other: MeanVarVec) -> MeanVarVec {
        if self.0.is_empty() {
            return other;
        }
        if other.0.is_empty() {
            return self;
        }
        MeanVarVec(self.0.into_iter().zip(other.0).map(|(a, b)| a.merge(b)).collect())
    }

    pub fn means(&self) -> Vec<f64> {
        self.0.iter().map(|m| m.mean).collect()
    }

    pub fn std_errors(&self) -> Vec<f64> {
        self.0.iter().map(|m| m.std_error()).collect()
    }
}

/// Sum by recursive halving; error grows like `log n` instead of `n`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Ordinary least-squares line `y = intercept + slope * x`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub residual_rms: f64,
    pub points: usize,
}

impl LinearFit {
    /// Normal-approximation 95% interval for the slope.
    pub fn slope_ci95(&self) -> (f64, f64) {
        (self.slope - 1.96 * self.slope_se, self.slope + 1.96 * self.slope_se)
    }
}

/// Fits a line through `(x, y)`. Needs at least two distinct abscissae.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    let slope_se = if n > 2 {
        (rss / (n - 2) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    Some(LinearFit {
        slope,
        intercept,
        slope_se,
        residual_rms: (rss / n as f64).sqrt(),
        points: n,
    })
}

/// Common-slope fit over several groups, each with its own intercept
/// (within-group demeaning). Returns the fit and per-group intercepts.
pub fn grouped_slope_fit(groups: &[(Vec<f64>, Vec<f64>)]) -> Option<(LinearFit, Vec<f64>)> {
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut n = 0usize;
    let mut used = 0usize;
    let mut centres = Vec::with_capacity(groups.len());
    for (x, y) in groups {
        if x.is_empty() {
            centres.push(None);
            continue;
        }
        let k = x.len() as f64;
        let mx = x.iter().sum::<f64>() / k;
        let my = y.iter().sum::<f64>() / k;
        for (a, b) in x.iter().zip(y) {
            sxx += (a - mx) * (a - mx);
            sxy += (a - mx) * (b - my);
        }
        n += x.len();
        used += 1;
        centres.push(Some((mx, my)));
    }
    if sxx <= 0.0 || n < 2 {
        return None;
    }
    let slope = sxy / sxx;
    let mut rss = 0.0;
    let mut intercepts = Vec::with_capacity(groups.len());
    for ((x, y), c) in groups.iter().zip(&centres) {
        match c {
            Some((mx, my)) => {
                let b0 = my - slope * mx;
                for (a, b) in x.iter().zip(y) {
                    let r = b - b0 - slope * a;
                    rss += r * r;
                }
                intercepts.push(b0);
            }
            None => intercepts.push(f64::NAN),
        }
    }
    let dof = n.saturating_sub(used + 1);
    let slope_se = if dof > 0 { (rss / dof as f64 / sxx).sqrt() } else { 0.0 };
    Some((
        LinearFit {
            slope,
            intercept: intercepts.iter().copied().find(|v| v.is_finite()).unwrap_or(0.0),
            slope_se,
            residual_rms: (rss / n as f64).sqrt(),
            points: n,
        },
        intercepts,
    ))
}
