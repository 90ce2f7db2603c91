//! Euler-type path simulation with counter-based noise, Jacobian flows, and
//! moment / Lyapunov checks.
//!
//! Paths are independent: path `i` draws its Brownian increments from the
//! stream `(seed, i)`. Several start points can be driven by the same noise
//! (a "bundle"), which is how common-random-number estimators are built.

mod lyapunov;

pub use lyapunov::{lyapunov_fit, LyapunovFit, LyapunovForm, LyapunovFunction};

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent on toolchains with float math in core
use num_traits::Float;

use crate::coeffs::{CoefficientModel, DriftGrowth, WeightSpec};
use crate::exec::fold_chunks;
use crate::rng::PathRng;
use crate::stats::MeanVarVec;
use crate::{linalg, Error, Result};

/// States beyond this magnitude count as diverged before they overflow.
pub const DIVERGENCE_RADIUS: f64 = 1e150;

/// Largest tolerated fraction of diverged paths.
pub const MAX_DIVERGED_FRACTION: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Scheme {
    Euler,
    /// Drift increment `b h / (1 + h |b|)`.
    TamedEuler,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Euler => "euler",
            Scheme::TamedEuler => "tamed_euler",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimulationConfig {
    pub scheme: Scheme,
    /// Maximal step `h`; every segment between record times is split into
    /// equal steps no longer than `h`.
    pub step: f64,
    pub horizon: f64,
    pub paths: usize,
    pub seed: u64,
    /// Times (in `[0, horizon]`) at which states are reported. The horizon
    /// is always reported.
    pub record_times: Vec<f64>,
    /// Upper limit on `paths * steps`.
    pub budget_cap: f64,
    /// Keep full recorded trajectories in [`PathEnsemble`].
    pub keep_trajectories: bool,
    /// Allow plain Euler on superlinear drift (for demonstrating divergence).
    pub force_scheme: bool,
}

impl SimulationConfig {
    pub fn new(scheme: Scheme, step: f64, horizon: f64, paths: usize, seed: u64) -> Self {
        SimulationConfig {
            scheme,
            step,
            horizon,
            paths,
            seed,
            record_times: Vec::new(),
            budget_cap: 1e11,
            keep_trajectories: false,
            force_scheme: false,
        }
    }

    pub fn with_records(mut self, times: &[f64]) -> Self {
        self.record_times = times.to_vec();
        self
    }

    pub fn validate(&self, model: &CoefficientModel) -> Result<()> {
        self.validate_paths()?;
        if model.drift_growth == DriftGrowth::Superlinear && self.scheme == Scheme::Euler && !self.force_scheme {
            return Err(Error::Configuration(
                "superlinear drift requires the tamed_euler scheme".into(),
            ));
        }
        Ok(())
    }

    /// Checks that do not depend on the model.
    pub fn validate_paths(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::arg("horizon must be positive and finite"));
        }
        if !(self.step > 0.0 && self.step <= self.horizon) {
            return Err(Error::arg("step must satisfy 0 < h <= T"));
        }
        if self.paths == 0 {
            return Err(Error::arg("at least one path is required"));
        }
        let steps = (self.horizon / self.step).ceil() + self.record_times.len() as f64;
        if self.paths as f64 * steps > self.budget_cap {
            return Err(Error::Configuration(alloc::format!(
                "{} paths x {steps} steps exceeds the budget cap {:e}",
                self.paths,
                self.budget_cap
            )));
        }
        if let Some(&t) = self.record_times.iter().find(|&&t| !(0.0..=self.horizon).contains(&t)) {
            return Err(Error::arg(alloc::format!("record time {t} outside [0, horizon]")));
        }
        Ok(())
    }
}

/// Step boundaries and the mesh index of every record time.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeMesh {
    pub nodes: Vec<f64>,
    pub records: Vec<usize>,
    pub record_times: Vec<f64>,
}

impl TimeMesh {
    pub fn new(horizon: f64, step: f64, record_times: &[f64]) -> Self {
        let mut marks: Vec<f64> = record_times.to_vec();
        marks.push(horizon);
        marks.sort_by(|a, b| a.total_cmp(b));
        marks.dedup();
        let mut nodes = vec![0.0];
        let mut records = Vec::with_capacity(marks.len());
        let mut prev = 0.0;
        for &m in &marks {
            let span = m - prev;
            if span > 0.0 {
                let n = ((span / step) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
                for k in 1..n {
                    nodes.push(prev + span * k as f64 / n as f64);
                }
                nodes.push(m);
            }
            records.push(nodes.len() - 1);
            prev = m;
        }
        TimeMesh {
            nodes,
            records,
            record_times: marks,
        }
    }

    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }
}

/// Recorded data of one path, handed to visitors.
pub struct PathRecord<'a> {
    pub index: u64,
    /// `records x starts x d`.
    pub states: &'a [f64],
    /// `records x d x d`, Jacobian of the first start (tangent runs only).
    pub jacobians: &'a [f64],
    /// `records x d`, `int_0^t (Sigma^{-1} J)^T dW` with `Sigma = sqrt(2) sigma`
    /// for the first start (tangent runs only).
    pub weights: &'a [f64],
    pub starts: usize,
    pub dim: usize,
}

impl PathRecord<'_> {
    #[inline]
    pub fn state(&self, record: usize, start: usize) -> &[f64] {
        let o = (record * self.starts + start) * self.dim;
        &self.states[o..o + self.dim]
    }

    #[inline]
    pub fn jacobian(&self, record: usize) -> &[f64] {
        let dd = self.dim * self.dim;
        &self.jacobians[record * dd..(record + 1) * dd]
    }

    #[inline]
    pub fn weight(&self, record: usize) -> &[f64] {
        &self.weights[record * self.dim..(record + 1) * self.dim]
    }
}

/// Result of [`run_paths`]: the merged accumulator (absent if every path
/// diverged) and the divergence count.
pub struct RunOutcome<A> {
    pub acc: Option<A>,
    pub diverged: usize,
    pub paths: usize,
    pub mesh: TimeMesh,
}

struct Scratch {
    d: usize,
    b: Vec<f64>,
    s: Vec<f64>,
    dz: Vec<f64>,
    tmp: Vec<f64>,
    db: Vec<f64>,
    ds: Vec<f64>,
    sinv: Vec<f64>,
    jnew: Vec<f64>,
    dmap: Vec<f64>,
}

impl Scratch {
    fn new(d: usize) -> Self {
        Scratch {
            d,
            b: vec![0.0; d],
            s: vec![0.0; d * d],
            dz: vec![0.0; d],
            tmp: vec![0.0; d],
            db: vec![0.0; d * d],
            ds: vec![0.0; d * d * d],
            sinv: vec![0.0; d * d],
            jnew: vec![0.0; d * d],
            dmap: vec![0.0; d * d],
        }
    }
}

#[inline]
fn diverged(x: &[f64]) -> bool {
    x.iter().any(|v| !(v.abs() <= DIVERGENCE_RADIUS))
}

/// One scheme step of `x` with normals `z`; optionally advances the tangent
/// `(J, M)` using the exact derivative of the discrete map.
fn step(
    model: &CoefficientModel,
    scheme: Scheme,
    t: f64,
    h: f64,
    x: &mut [f64],
    z: &[f64],
    tangent: Option<(&mut [f64], &mut [f64])>,
    w: &mut Scratch,
) -> Result<()> {
    let d = w.d;
    let sq = h.sqrt();
    model.drift(t, x, &mut w.b);
    model.sigma(t, x, &mut w.s);
    for k in 0..d {
        w.dz[k] = sq * z[k];
    }
    if let Some((jac, mw)) = tangent {
        // Bismut weight increment (sqrt(2) sigma)^{-1} J, transposed, times dW.
        let inv = linalg::inverse(d, &w.s).ok_or_else(|| Error::Evaluation { point: x.to_vec() })?;
        w.sinv.copy_from_slice(&inv);
        linalg::mat_t_vec(d, &w.sinv, &w.dz, &mut w.tmp);
        for j in 0..d {
            let mut acc = 0.0;
            for i in 0..d {
                acc += jac[i * d + j] * w.tmp[i];
            }
            mw[j] += acc / core::f64::consts::SQRT_2;
        }
        model.dynamics.drift_jacobian(t, x, &mut w.db);
        match scheme {
            Scheme::Euler => {
                for k in 0..d * d {
                    w.dmap[k] = h * w.db[k];
                }
            }
            Scheme::TamedEuler => {
                let nb = linalg::norm(&w.b);
                let den = 1.0 + h * nb;
                if nb > 0.0 {
                    // grad |b| = Db^T b / |b|
                    linalg::mat_t_vec(d, &w.db, &w.b, &mut w.tmp);
                    for i in 0..d {
                        for j in 0..d {
                            w.dmap[i * d + j] = h / den * (w.db[i * d + j] - h * w.b[i] * w.tmp[j] / (nb * den));
                        }
                    }
                } else {
                    for k in 0..d * d {
                        w.dmap[k] = h * w.db[k];
                    }
                }
            }
        }
        if !model.dynamics.constant_sigma() {
            model.dynamics.sigma_gradient(t, x, &mut w.ds);
            for k in 0..d {
                for i in 0..d {
                    let mut acc = 0.0;
                    for m in 0..d {
                        acc += w.ds[(k * d + i) * d + m] * w.dz[m];
                    }
                    w.dmap[i * d + k] += core::f64::consts::SQRT_2 * acc;
                }
            }
        }
        linalg::mat_mul(d, &w.dmap, jac, &mut w.jnew);
        for k in 0..d * d {
            jac[k] += w.jnew[k];
        }
    }
    let scale = match scheme {
        Scheme::Euler => h,
        Scheme::TamedEuler => h / (1.0 + h * linalg::norm(&w.b)),
    };
    linalg::mat_vec(d, &w.s, &w.dz, &mut w.tmp);
    for k in 0..d {
        x[k] += scale * w.b[k] + core::f64::consts::SQRT_2 * w.tmp[k];
    }
    Ok(())
}

/// Simulates `paths` paths, each driving every start in `starts`
/// (`K x d`, flattened) with the same noise, and folds the records of every
/// non-diverged path into an accumulator. `tangent` additionally carries the
/// Jacobian flow and Bismut weight of the first start.
///
/// Paths with any diverged start are excluded; above
/// [`MAX_DIVERGED_FRACTION`] the run fails.
pub fn run_paths<A, I, V, M>(
    model: &CoefficientModel,
    cfg: &SimulationConfig,
    starts: &[f64],
    tangent: bool,
    init: I,
    visit: V,
    merge: M,
) -> Result<RunOutcome<A>>
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    V: Fn(&mut A, &PathRecord<'_>) + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    let d = model.dim;
    if starts.is_empty() || starts.len() % d != 0 {
        return Err(Error::arg("start points must be a non-empty multiple of the dimension"));
    }
    if let Some(p) = starts.chunks(d).find(|p| p.iter().any(|v| !v.is_finite())) {
        return Err(Error::Evaluation { point: p.to_vec() });
    }
    run_paths_from(
        model,
        cfg,
        starts.len() / d,
        |_, out| out.copy_from_slice(starts),
        tangent,
        init,
        visit,
        merge,
    )
}

/// As [`run_paths`], with the `k` start points of path `i` written by
/// `starts(i, out)` (`out` is `k x d`).
#[allow(clippy::too_many_arguments)]
pub fn run_paths_from<A, S, I, V, M>(
    model: &CoefficientModel,
    cfg: &SimulationConfig,
    k: usize,
    starts: S,
    tangent: bool,
    init: I,
    visit: V,
    merge: M,
) -> Result<RunOutcome<A>>
where
    A: Send,
    S: Fn(u64, &mut [f64]) + Sync + Send,
    I: Fn() -> A + Sync + Send,
    V: Fn(&mut A, &PathRecord<'_>) + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    cfg.validate(model)?;
    let d = model.dim;
    if k == 0 {
        return Err(Error::arg("at least one start point is required"));
    }
    let mesh = TimeMesh::new(cfg.horizon, cfg.step, &cfg.record_times);
    let nrec = mesh.records.len();
    let folded = fold_chunks(
        cfg.paths,
        |range| {
            let mut acc = init();
            let mut dead = 0usize;
            let mut err: Option<Error> = None;
            let mut w = Scratch::new(d);
            let mut x = vec![0.0; k * d];
            let mut z = vec![0.0; d];
            let mut states = vec![0.0; nrec * k * d];
            let mut jac = vec![0.0; d * d];
            let mut mw = vec![0.0; d];
            let mut jacs = vec![0.0; if tangent { nrec * d * d } else { 0 }];
            let mut weights = vec![0.0; if tangent { nrec * d } else { 0 }];
            for path in range {
                let mut rng = PathRng::new(cfg.seed, path as u64);
                starts(path as u64, &mut x);
                if tangent {
                    jac.copy_from_slice(&linalg::identity(d));
                    mw.fill(0.0);
                }
                let mut rec = 0usize;
                let mut ok = true;
                let mut save = |rec: &mut usize, x: &[f64], jac: &[f64], mw: &[f64]| {
                    states[*rec * k * d..(*rec + 1) * k * d].copy_from_slice(x);
                    if tangent {
                        jacs[*rec * d * d..(*rec + 1) * d * d].copy_from_slice(jac);
                        weights[*rec * d..(*rec + 1) * d].copy_from_slice(mw);
                    }
                    *rec += 1;
                };
                while rec < nrec && mesh.records[rec] == 0 {
                    save(&mut rec, &x, &jac, &mw);
                }
                'steps: for s in 0..mesh.steps() {
                    let t = mesh.nodes[s];
                    let h = mesh.nodes[s + 1] - t;
                    rng.fill_normal(&mut z);
                    for j in 0..k {
                        let xj = &mut x[j * d..(j + 1) * d];
                        let tan = if tangent && j == 0 {
                            Some((&mut jac[..], &mut mw[..]))
                        } else {
                            None
                        };
                        if let Err(e) = step(model, cfg.scheme, t, h, xj, &z, tan, &mut w) {
                            if err.is_none() {
                                err = Some(e);
                            }
                            ok = false;
                            break 'steps;
                        }
                        if diverged(xj) {
                            ok = false;
                            break 'steps;
                        }
                    }
                    while rec < nrec && mesh.records[rec] == s + 1 {
                        save(&mut rec, &x, &jac, &mw);
                    }
                }
                if ok && tangent && (diverged(&jac) || diverged(&mw)) {
                    ok = false;
                }
                if ok {
                    let record = PathRecord {
                        index: path as u64,
                        states: &states,
                        jacobians: &jacs,
                        weights: &weights,
                        starts: k,
                        dim: d,
                    };
                    visit(&mut acc, &record);
                } else {
                    dead += 1;
                }
            }
            (acc, dead, err)
        },
        |a, b| (merge(a.0, b.0), a.1 + b.1, a.2.or(b.2)),
    )
    .expect("at least one path");
    let (acc, dead, err) = folded;
    if let Some(e) = err {
        return Err(e);
    }
    if dead as f64 > MAX_DIVERGED_FRACTION * cfg.paths as f64 {
        return Err(Error::Diverged {
            diverged: dead,
            paths: cfg.paths,
            scheme: String::from(cfg.scheme.name()),
        });
    }
    Ok(RunOutcome {
        acc: if dead == cfg.paths { None } else { Some(acc) },
        diverged: dead,
        paths: cfg.paths,
        mesh,
    })
}

/// Reference to the noise of an ensemble: path `i` used stream `(seed, i)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseRecord {
    pub seed: u64,
    pub paths: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathEnsemble {
    pub dim: usize,
    pub record_times: Vec<f64>,
    /// `N x d`; rows of diverged paths are NaN.
    pub terminal: Vec<f64>,
    /// `N x records x d` when trajectories were kept.
    pub trajectories: Option<Vec<f64>>,
    pub diverged: usize,
    pub noise: NoiseRecord,
}

impl PathEnsemble {
    pub fn paths(&self) -> usize {
        self.noise.paths
    }

    pub fn terminal_row(&self, i: usize) -> &[f64] {
        &self.terminal[i * self.dim..(i + 1) * self.dim]
    }

    /// Terminal rows of non-diverged paths.
    pub fn valid_terminals(&self) -> impl Iterator<Item = &[f64]> {
        self.terminal
            .chunks(self.dim)
            .filter(|r| r.iter().all(|v| v.is_finite()))
    }
}

/// Simulates from `x0` and materializes the ensemble.
pub fn simulate(model: &CoefficientModel, cfg: &SimulationConfig, x0: &[f64]) -> Result<PathEnsemble> {
    let d = model.dim;
    if x0.len() != d {
        return Err(Error::arg("start point dimension does not match the model"));
    }
    let keep = cfg.keep_trajectories;
    // (path index, terminal, trajectory) collected per chunk in path order.
    type Rows = Vec<(u64, Vec<f64>, Vec<f64>)>;
    let out = run_paths(
        model,
        cfg,
        x0,
        false,
        Rows::new,
        |acc: &mut Rows, rec| {
            let nrec = rec.states.len() / d;
            let term = rec.state(nrec - 1, 0).to_vec();
            let traj = if keep { rec.states.to_vec() } else { Vec::new() };
            acc.push((rec.index, term, traj));
        },
        |mut a, b| {
            a.extend(b);
            a
        },
    )?;
    let nrec = out.mesh.records.len();
    let mut terminal = vec![f64::NAN; cfg.paths * d];
    let mut traj = if keep {
        Some(vec![f64::NAN; cfg.paths * nrec * d])
    } else {
        None
    };
    for (i, term, tr) in out.acc.unwrap_or_default() {
        let i = i as usize;
        terminal[i * d..(i + 1) * d].copy_from_slice(&term);
        if let Some(t) = traj.as_mut() {
            t[i * nrec * d..(i + 1) * nrec * d].copy_from_slice(&tr);
        }
    }
    Ok(PathEnsemble {
        dim: d,
        record_times: out.mesh.record_times,
        terminal,
        trajectories: traj,
        diverged: out.diverged,
        noise: NoiseRecord {
            seed: cfg.seed,
            paths: cfg.paths,
        },
    })
}

/// Per-path Jacobians `J_t = D_x X_t(x)` at the record times.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobianFlow {
    pub dim: usize,
    pub record_times: Vec<f64>,
    /// `N x records x d x d`; rows of diverged paths are NaN.
    pub matrices: Vec<f64>,
    /// Entrywise mean over valid paths, `records x d x d`.
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    pub diverged: usize,
}

impl JacobianFlow {
    pub fn matrix(&self, path: usize, record: usize) -> &[f64] {
        let dd = self.dim * self.dim;
        let o = (path * self.record_times.len() + record) * dd;
        &self.matrices[o..o + dd]
    }
}

/// Joint stepping of `(X_t, J_t)` on the same noise.
pub fn jacobian_flow(model: &CoefficientModel, cfg: &SimulationConfig, x0: &[f64]) -> Result<JacobianFlow> {
    let d = model.dim;
    if x0.len() != d {
        return Err(Error::arg("start point dimension does not match the model"));
    }
    type Acc = (Vec<(u64, Vec<f64>)>, Option<MeanVarVec>);
    let out = run_paths(
        model,
        cfg,
        x0,
        true,
        || -> Acc { (Vec::new(), None) },
        |acc: &mut Acc, rec| {
            acc.0.push((rec.index, rec.jacobians.to_vec()));
            acc.1
                .get_or_insert_with(|| MeanVarVec::zeros(rec.jacobians.len()))
                .push(rec.jacobians);
        },
        |mut a, b| {
            a.0.extend(b.0);
            a.1 = match (a.1, b.1) {
                (Some(x), Some(y)) => Some(x.merge(y)),
                (x, y) => x.or(y),
            };
            a
        },
    )?;
    let nrec = out.mesh.records.len();
    let dd = d * d;
    let mut matrices = vec![f64::NAN; cfg.paths * nrec * dd];
    let (rows, stats) = out.acc.unwrap_or((Vec::new(), None));
    for (i, m) in rows {
        let i = i as usize;
        matrices[i * nrec * dd..(i + 1) * nrec * dd].copy_from_slice(&m);
    }
    let stats = stats.unwrap_or_else(|| MeanVarVec::zeros(nrec * dd));
    Ok(JacobianFlow {
        dim: d,
        record_times: out.mesh.record_times,
        matrices,
        mean: stats.means(),
        std_error: stats.std_errors(),
        diverged: out.diverged,
    })
}

/// `E rho0(X_t(x))` against `l0(t) rho1(x)` at several times.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MomentReport {
    pub x0: Vec<f64>,
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    pub bound: Vec<f64>,
    pub ratio: Vec<f64>,
    pub ratio_std_error: Vec<f64>,
    /// `ratio <= 1 + 3 SE(ratio)` at every time.
    pub pass: bool,
}

pub fn moment_check(
    model: &CoefficientModel,
    cfg: &SimulationConfig,
    weights: &WeightSpec,
    x0: &[f64],
    times: &[f64],
) -> Result<MomentReport> {
    if times.is_empty() {
        return Err(Error::arg("moment check needs at least one time"));
    }
    let horizon = times.iter().fold(0.0f64, |a, &b| a.max(b));
    let mut cfg = cfg.clone().with_records(times);
    cfg.horizon = horizon.max(cfg.step);
    let rho0 = weights.rho0;
    let out = run_paths(
        model,
        &cfg,
        x0,
        false,
        || None::<MeanVarVec>,
        |acc, rec| {
            let n = rec.states.len() / rec.dim;
            let vals: Vec<f64> = (0..n).map(|r| rho0.eval(rec.state(r, 0))).collect();
            acc.get_or_insert_with(|| MeanVarVec::zeros(n)).push(&vals);
        },
        |a, b| match (a, b) {
            (Some(x), Some(y)) => Some(x.merge(y)),
            (x, y) => x.or(y),
        },
    )?;
    let stats = out.acc.flatten().ok_or_else(|| Error::arg("no valid paths"))?;
    let means = stats.means();
    let ses = stats.std_errors();
    let rho1 = weights.rho1.eval(x0);
    let mut rep = MomentReport {
        x0: x0.to_vec(),
        times: Vec::new(),
        mean: Vec::new(),
        std_error: Vec::new(),
        bound: Vec::new(),
        ratio: Vec::new(),
        ratio_std_error: Vec::new(),
        pass: true,
    };
    for &t in times {
        let r = out
            .mesh
            .record_times
            .iter()
            .position(|&s| s == t)
            .expect("requested time is recorded");
        let bound = weights.ell0.eval(t) * rho1;
        let ratio = means[r] / bound;
        let rse = ses[r] / bound;
        rep.pass &= ratio <= 1.0 + 3.0 * rse + 1e-12;
        rep.times.push(t);
        rep.mean.push(means[r]);
        rep.std_error.push(ses[r]);
        rep.bound.push(bound);
        rep.ratio.push(ratio);
        rep.ratio_std_error.push(rse);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_hits_record_times_exactly() {
        let m = TimeMesh::new(1.0, 0.3, &[0.0, 0.5, 0.25]);
        assert_eq!(m.record_times, vec![0.0, 0.25, 0.5, 1.0]);
        for (r, &t) in m.records.iter().zip(&m.record_times) {
            assert_eq!(m.nodes[*r], t);
        }
        assert!(m.nodes.windows(2).all(|w| w[1] - w[0] <= 0.3 + 1e-15 && w[1] > w[0]));
        assert_eq!(TimeMesh::new(1.0, 0.1, &[]).steps(), 10);
    }
}
