//! Experiment files: one TOML document per experiment.

use std::path::{Path, PathBuf};

use gradest_core::catalog;
use gradest_core::coeffs::{CoefficientModel, WeightSpec};
use gradest_core::sde::Scheme;
use gradest_core::semigroup::{Estimator, EstimatorConfig};
use gradest_core::singular::SingularDriftSpec;
use gradest_core::Observable;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// What to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Bounds,
    Simulate,
    Estimate,
    VerifyShort,
    VerifyLong,
    Poisson,
    Singular,
    All,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Bounds => "bounds",
            Task::Simulate => "simulate",
            Task::Estimate => "estimate",
            Task::VerifyShort => "verify-short",
            Task::VerifyLong => "verify-long",
            Task::Poisson => "poisson",
            Task::Singular => "singular",
            Task::All => "all",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Task for `gradest run`; subcommands override it.
    #[serde(default)]
    pub task: Option<Task>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub model: ModelSpec,
    pub observable: Observable,
    /// Defaults to the catalog weights of the model.
    #[serde(default)]
    pub weights: Option<WeightSpec>,
    pub grid: GridSpec,
    #[serde(default)]
    pub estimator: EstimatorSpec,
    #[serde(default)]
    pub verify: VerifySpec,
    #[serde(default)]
    pub ergodic: ErgodicSpec,
    #[serde(default)]
    pub poisson: PoissonSpec,
    #[serde(default)]
    pub singular: SingularSpec,
    #[serde(default)]
    pub simulate: SimulateSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// Catalog name; exclusive with `inline`.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "one")]
    pub dim: usize,
    /// Mollification level of `singular_v`.
    #[serde(default)]
    pub level: Option<u32>,
    /// Hoelder exponent of the `singular_v` potential.
    #[serde(default)]
    pub alpha_prime: Option<f64>,
    #[serde(default)]
    pub inline: Option<InlineModel>,
}

/// One-dimensional polynomial drift `sum_k drift[k] x^k` with constant `sigma`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineModel {
    pub name: String,
    pub drift: Vec<f64>,
    #[serde(default = "one_f")]
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t: Vec<f64>,
    /// Points; a scalar entry is a one-dimensional point.
    pub x: Vec<PointSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointSpec {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl PointSpec {
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            PointSpec::Scalar(v) => vec![*v],
            PointSpec::Vector(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorSpec {
    pub paths: usize,
    pub step: f64,
    pub scheme: Scheme,
    pub method: Estimator,
    /// Derivative order for `estimate` (0, 1 or 2).
    pub order: u8,
    /// Finite-difference bump; the default is chosen per time.
    pub bump: Option<f64>,
}

impl Default for EstimatorSpec {
    fn default() -> Self {
        EstimatorSpec {
            paths: 10_000,
            step: 1e-2,
            scheme: Scheme::TamedEuler,
            method: Estimator::FdCrn,
            order: 1,
            bump: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySpec {
    /// Also verify the Hessian bound.
    pub hessian: bool,
    /// `0` or the model's `alpha`.
    pub beta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ErgodicSpec {
    /// Paths used to sample the invariant measure.
    pub invariant_paths: usize,
    /// Vouch for an invariant measure with this burn-in instead of fitting
    /// a Lyapunov certificate.
    pub burn_in: Option<f64>,
}

impl Default for ErgodicSpec {
    fn default() -> Self {
        ErgodicSpec {
            invariant_paths: 50_000,
            burn_in: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoissonSpec {
    pub tail_tolerance: f64,
    pub centering_tolerance: f64,
    pub bump: f64,
    pub residual_stencil: f64,
    pub residual_tolerance: f64,
}

impl Default for PoissonSpec {
    fn default() -> Self {
        PoissonSpec {
            tail_tolerance: 1e-3,
            centering_tolerance: 0.05,
            bump: 0.1,
            residual_stencil: 0.1,
            residual_tolerance: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SingularSpec {
    pub levels: Vec<u32>,
}

impl Default for SingularSpec {
    fn default() -> Self {
        SingularSpec {
            levels: vec![4, 8, 16, 32, 64, 128],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSpec {
    /// Write full trajectories as a columnar binary file.
    pub dump: bool,
}

fn one() -> usize {
    1
}

fn one_f() -> f64 {
    1.0
}

pub const DEFAULT_ALPHA_PRIME: f64 = 0.6;
pub const DEFAULT_LEVEL: u32 = 16;

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Parse(m) => CliError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Parse(m));
        match (&self.model.name, &self.model.inline) {
            (Some(_), Some(_)) => return bad("model: give either `name` or `inline`, not both".into()),
            (None, None) => return bad("model: `name` or `inline` is required".into()),
            (Some(n), None) if !catalog::NAMES.contains(&n.as_str()) => {
                return bad(format!(
                    "model: unknown catalog entry '{n}' (known: {})",
                    catalog::NAMES.join(", ")
                ))
            }
            _ => {}
        }
        if self.model.dim == 0 {
            return bad("model.dim must be positive".into());
        }
        if self.grid.t.is_empty() || self.grid.x.is_empty() {
            return bad("grid: `t` and `x` must be non-empty".into());
        }
        if let Some(t) = self.grid.t.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return bad(format!("grid.t: times must be positive, got {t}"));
        }
        let d = self.dim();
        if let Some(p) = self.grid.x.iter().find(|p| p.to_vec().len() != d) {
            return bad(format!("grid.x: point {:?} does not have dimension {d}", p.to_vec()));
        }
        if self.estimator.paths == 0 || self.estimator.step.is_nan() || self.estimator.step <= 0.0 {
            return bad("estimator: paths and step must be positive".into());
        }
        if self.estimator.order > 2 {
            return bad("estimator.order must be 0, 1 or 2".into());
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        if self.model.inline.is_some() {
            1
        } else {
            self.model.dim
        }
    }

    /// Catalog name or inline model name.
    pub fn model_name(&self) -> &str {
        match (&self.model.name, &self.model.inline) {
            (Some(n), _) => n,
            (None, Some(m)) => &m.name,
            (None, None) => "",
        }
    }

    pub fn is_singular(&self) -> bool {
        self.model.name.as_deref() == Some("singular_v")
    }

    pub fn singular_spec(&self) -> SingularDriftSpec {
        SingularDriftSpec::canonical(self.model.alpha_prime.unwrap_or(DEFAULT_ALPHA_PRIME))
    }

    pub fn build_model(&self) -> Result<CoefficientModel, CliError> {
        if let Some(m) = &self.model.inline {
            return Ok(catalog::polynomial_drift(m.name.clone(), m.drift.clone(), m.sigma)?);
        }
        if self.is_singular() {
            if self.model.dim != 1 {
                return Err(CliError::Parse("model: singular_v is one-dimensional".into()));
            }
            return Ok(self.singular_spec().model(self.model.level.unwrap_or(DEFAULT_LEVEL))?);
        }
        Ok(catalog::model(self.model_name(), self.model.dim)?)
    }

    pub fn weights(&self) -> WeightSpec {
        self.weights.unwrap_or_else(|| match &self.model.name {
            Some(n) => catalog::weights(n, self.model.dim),
            None => WeightSpec::default(),
        })
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.grid.x.iter().map(PointSpec::to_vec).collect()
    }

    pub fn estimator_config(&self) -> EstimatorConfig {
        let mut cfg = EstimatorConfig::new(self.estimator.paths, self.estimator.step, self.seed)
            .with_scheme(self.estimator.scheme)
            .with_weights(self.weights());
        cfg.budget_cap = 1e12;
        cfg
    }
}
