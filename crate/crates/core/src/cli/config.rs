//! TOML experiment configuration.
//!
//! ```toml
//! [model]
//! mode = { kind = "lognormal" }            # or { kind = "affine", mean = 1.0 }
//! psi = { kind = "power-sine", scale = 2.0, decay = 3.0 }
//! dims = 4
//! source = { kind = "sine" }               # optional
//!
//! [weights]                                # optional, defaults from the model
//! rho1 = { kind = "power", c = 2.0, kappa = 1.5 }
//! rho2 = { kind = "power", c = 2.0, kappa = 0.75 }
//! q1 = 0.75
//! q2 = 1.5
//! eta = 1
//!
//! [study]
//! mode = "quadrature"                      # or "interpolation"
//! budgets = [4, 8, 16, 32]
//! cost = "cardinality"                     # "dyadic-dim" | "grid-points"
//! ```
//!
//! The remaining `[study]` keys and their defaults are listed on
//! [`StudyConfig`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{Source, MAX_LEVEL};
use crate::indexset::{CostKind, Parity, Regime, RhoSeq, WeightSpec};
use crate::model::{CoefficientMode, CoefficientModel, PsiFamily};
use crate::nodes::NodeFamily;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub weights: WeightsConfig,
    pub study: StudyConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_mode")]
    pub mode: CoefficientMode,
    pub psi: PsiFamily,
    pub dims: usize,
    #[serde(default)]
    pub source: Source,
}

/// Overrides for the weight sequences; unset entries come from
/// [`CoefficientModel::rho_defaults`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    pub rho1: Option<RhoSeq>,
    pub rho2: Option<RhoSeq>,
    pub q1: Option<f64>,
    pub q2: Option<f64>,
    /// Default: [`default_eta`] of the effective exponent and parity step.
    pub eta: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyMode {
    /// Error of `Q_G u` against the mean of `u`, measured in `V`.
    Quadrature,
    /// `L²(U, V)` error of `I_G u` estimated by Monte Carlo.
    Interpolation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    /// Closed form when one is known, otherwise a tensor rule.
    Auto,
    ClosedForm,
    Tensor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub mode: StudyMode,
    /// Budgets `n`, strictly increasing.
    pub budgets: Vec<u64>,
    /// Default: `gauss-hermite` for lognormal models, `gauss-jacobi` with
    /// `a = 0` for affine ones.
    pub family: Option<NodeFamily>,
    /// Default `interpolation`.
    #[serde(default = "default_regime")]
    pub regime: Regime,
    /// Default: `even` for quadrature, `all` for interpolation.
    pub parity: Option<Parity>,
    #[serde(default = "default_cost")]
    pub cost: CostKind,
    /// Spatial convergence rate of the finite element hierarchy.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Largest mesh level a plan may reach, and the fixed level of purely
    /// parametric plans. Must be below `reference_level`, or at most equal
    /// to it for parametric plans.
    #[serde(default = "default_max_level")]
    pub max_level: u32,
    #[serde(default = "default_reference")]
    pub reference: ReferenceKind,
    /// Mesh level of reference solutions.
    #[serde(default = "default_reference_level")]
    pub reference_level: u32,
    /// Per-dimension degree `m` of the tensor reference rule (`m + 1` points).
    #[serde(default = "default_reference_order")]
    pub reference_order: usize,
    /// Largest `J` for which tensor references are attempted.
    #[serde(default = "default_oracle_max_dims")]
    pub oracle_max_dims: usize,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_mode() -> CoefficientMode {
    CoefficientMode::Lognormal
}
fn default_regime() -> Regime {
    Regime::Interpolation
}
fn default_cost() -> CostKind {
    CostKind::Cardinality
}
fn default_alpha() -> f64 {
    1.0
}
fn default_max_level() -> u32 {
    12
}
fn default_reference() -> ReferenceKind {
    ReferenceKind::Auto
}
fn default_reference_level() -> u32 {
    14
}
fn default_reference_order() -> usize {
    8
}
fn default_oracle_max_dims() -> usize {
    6
}
fn default_mc_samples() -> usize {
    64
}

/// Weight specs and exponents resolved from a configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedWeights {
    pub spec1: WeightSpec,
    pub spec2: WeightSpec,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn model(&self) -> Result<CoefficientModel> {
        CoefficientModel::new(self.model.mode, self.model.psi, self.model.dims).map_err(as_config("model"))
    }

    pub fn family(&self) -> NodeFamily {
        self.study.family.unwrap_or(match self.model.mode {
            CoefficientMode::Lognormal => NodeFamily::GaussHermite,
            CoefficientMode::Affine { .. } => NodeFamily::GaussJacobi { a: 0.0 },
        })
    }

    pub fn parity(&self) -> Parity {
        self.study.parity.unwrap_or(match self.study.mode {
            StudyMode::Quadrature => Parity::Even,
            StudyMode::Interpolation => Parity::All,
        })
    }

    /// Weight specs for the study: configured overrides on top of the model
    /// defaults. Quadrature halves both exponents.
    pub fn weights(&self) -> Result<ResolvedWeights> {
        let model = self.model()?;
        let w = &self.weights;
        let defaults = if w.rho1.is_some() && w.rho2.is_some() && w.q1.is_some() && w.q2.is_some() {
            None
        } else {
            Some(model.rho_defaults().map_err(as_config("weights"))?)
        };
        let pick_rho = |own: &Option<RhoSeq>, fallback: fn(&crate::model::RhoDefaults) -> RhoSeq| {
            own.clone().unwrap_or_else(|| fallback(defaults.as_ref().expect("defaults resolved")))
        };
        let rho1 = pick_rho(&w.rho1, |d| d.rho1.clone());
        let rho2 = pick_rho(&w.rho2, |d| d.rho2.clone());
        let q1 = w.q1.unwrap_or_else(|| defaults.as_ref().expect("defaults resolved").q1);
        let q2 = w.q2.unwrap_or_else(|| defaults.as_ref().expect("defaults resolved").q2);
        let scale = match self.study.mode {
            StudyMode::Quadrature => 0.5,
            StudyMode::Interpolation => 1.0,
        };
        let dims = self.model.dims;
        let step = self.parity().step();
        let make = |rho: RhoSeq, q: f64| match self.model.mode {
            CoefficientMode::Lognormal => {
                let q = q * scale;
                WeightSpec::lognormal(rho, dims, w.eta.unwrap_or_else(|| default_eta(q, step)), q)
            }
            CoefficientMode::Affine { mean } => WeightSpec::affine(rho, dims, q * scale, mean),
        };
        Ok(ResolvedWeights {
            spec1: make(rho1, q1).map_err(as_config("weights.rho1"))?,
            spec2: make(rho2, q2).map_err(as_config("weights.rho2"))?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.study;
        if s.budgets.is_empty() {
            return Err(Error::Config("study.budgets: at least one budget is required".into()));
        }
        if let Some(w) = s.budgets.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "study.budgets: must be strictly increasing, found {} before {}",
                w[0], w[1]
            )));
        }
        if s.budgets[0] == 0 {
            return Err(Error::Config("study.budgets: budgets must be positive".into()));
        }
        if !(s.alpha > 0.0) {
            return Err(Error::Config(format!("study.alpha: must be positive, got {}", s.alpha)));
        }
        if s.reference_level > MAX_LEVEL {
            return Err(Error::Config(format!("study.reference_level: at most {MAX_LEVEL}")));
        }
        // parametric plans solve at max_level only, so a reference on that
        // level isolates the parametric error
        let level_ok = match s.regime {
            Regime::Parametric => s.max_level <= s.reference_level,
            _ => s.max_level < s.reference_level,
        };
        if !level_ok {
            return Err(Error::Config(format!(
                "study.max_level: {} must be below reference_level {}",
                s.max_level, s.reference_level
            )));
        }
        if s.mode == StudyMode::Interpolation && s.mc_samples < 2 {
            return Err(Error::Config("study.mc_samples: at least 2".into()));
        }
        if s.mode == StudyMode::Interpolation && self.parity() == Parity::Even {
            return Err(Error::Config(
                "study.parity: even plans only apply to quadrature".into(),
            ));
        }
        if s.regime == Regime::Expansion {
            return Err(Error::Config("study.regime: expansion plans are not evaluated by studies".into()));
        }
        if self.uses_tensor_reference() && self.model.dims > s.oracle_max_dims {
            return Err(Error::Config(format!(
                "model.dims: {} exceeds study.oracle_max_dims = {} for a tensor reference",
                self.model.dims, s.oracle_max_dims
            )));
        }
        if s.reference == ReferenceKind::ClosedForm && self.closed_form_mean().is_none() {
            return Err(Error::Config(
                "study.reference: no closed form for this model (needs lognormal constant-one-term with sine source)"
                    .into(),
            ));
        }
        self.model()?;
        self.weights()?;
        Ok(())
    }

    /// Whether quadrature errors are measured against a tensor rule.
    pub fn uses_tensor_reference(&self) -> bool {
        self.study.mode == StudyMode::Quadrature
            && match self.study.reference {
                ReferenceKind::Tensor => true,
                ReferenceKind::ClosedForm => false,
                ReferenceKind::Auto => self.closed_form_mean().is_none(),
            }
    }

    /// `E[u] = e^{σ²/2} sin(πx)` for the lognormal one-term model with the
    /// sine source, returned as the factor `e^{σ²/2}`.
    pub fn closed_form_mean(&self) -> Option<f64> {
        match (self.model.mode, self.model.psi, self.model.source) {
            (CoefficientMode::Lognormal, PsiFamily::ConstantOneTerm { sigma }, Source::Sine) => {
                Some((0.5 * sigma * sigma).exp())
            }
            _ => None,
        }
    }
}

/// Smallest `η` with `η > 2ν/q`, which makes `Σ_{s∈F_ν} σ_s^{-q/ν}` finite.
pub fn default_eta(q: f64, nu: u32) -> u32 {
    (2.0 * nu as f64 / q).floor() as u32 + 1
}

fn as_config(field: &'static str) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Config(msg) => Error::Config(format!("{field}: {msg}")),
        other => Error::Config(format!("{field}: {other}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[model]
psi = { kind = "constant-one-term", sigma = 0.5 }
dims = 1

[study]
mode = "quadrature"
budgets = [2, 4, 8]
"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.family(), NodeFamily::GaussHermite);
        assert_eq!(c.parity(), Parity::Even);
        assert_eq!(c.study.cost, CostKind::Cardinality);
        assert!(!c.uses_tensor_reference());
        assert!((c.closed_form_mean().unwrap() - 0.125f64.exp()).abs() < 1e-15);
        let w = c.weights().unwrap();
        assert_eq!(w.spec1.q, 0.5);
        assert_eq!(w.spec1.eta, 9);
    }

    #[test]
    fn unsorted_budgets_are_rejected() {
        let text = MINIMAL.replace("[2, 4, 8]", "[2, 8, 8]");
        let err = ExperimentConfig::from_toml(&text).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("study.budgets")), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let text = MINIMAL.replace("dims = 1", "dims = \"one\"");
        let err = ExperimentConfig::from_toml(&text).unwrap_err();
        let Error::Config(msg) = err else { panic!("wrong class") };
        assert!(msg.contains("line"), "{msg}");
        assert!(msg.contains("dims"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("dims = 1", "dims = 1\nwidth = 3");
        assert!(matches!(ExperimentConfig::from_toml(&text), Err(Error::Config(_))));
    }

    #[test]
    fn tensor_reference_respects_dimension_limit() {
        let text = r#"
[model]
psi = { kind = "power-sine", scale = 2.0, decay = 3.0 }
dims = 8

[study]
mode = "quadrature"
budgets = [2, 4]
oracle_max_dims = 4
"#;
        let err = ExperimentConfig::from_toml(text).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("oracle_max_dims")), "{err}");
    }

    #[test]
    fn closed_form_requires_matching_model() {
        let text = MINIMAL
            .replace("constant-one-term\", sigma = 0.5", "power-sine\", scale = 2.0, decay = 3.0")
            .replace("dims = 1", "dims = 2")
            .replace("budgets", "reference = \"closed-form\"\nbudgets");
        assert!(matches!(ExperimentConfig::from_toml(&text), Err(Error::Config(_))));
    }
}
