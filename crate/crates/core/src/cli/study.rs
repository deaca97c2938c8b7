//! Convergence studies: one fully discrete approximation per budget,
//! measured against a reference, with a log-log rate fit.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, StudyMode};
use crate::error::{Error, Result};
use crate::fem::{norm_v_analytic, Field, SpatialHierarchy};
use crate::indexset::{build_g, build_lambda, calibrate_xi, grid_of, CostKind, GSpec, IndexPlan, Parity, Regime};
use crate::model::ModelSolver;
use crate::nodes::NodeFamily;
use crate::oracle::{field_distance, gaussian_sample, TensorRule};
use crate::sparse::{EvaluatorStats, ParametricSolver, SparseEvaluator};

/// Solves at a fixed level whatever level is requested; evaluates purely
/// parametric plans, whose entries all sit at level 0.
struct FixedLevel<'a> {
    inner: &'a ModelSolver,
    level: u32,
}

impl ParametricSolver for FixedLevel<'_> {
    fn dims(&self) -> usize {
        self.inner.dims()
    }

    fn solve(&self, _level: u32, y: &[f64]) -> Result<Field> {
        self.inner.solve(self.level, y)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyRow {
    pub n: u64,
    pub xi: f64,
    pub cardinality: u64,
    pub dyadic_dim: u64,
    pub grid_points: u64,
    pub max_level: u32,
    pub error: f64,
    pub relative_error: f64,
    /// Standard error of the Monte Carlo estimate of the squared error.
    pub std_error: Option<f64>,
    #[serde(skip)]
    pub seconds: f64,
    pub stats: EvaluatorStats,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudySummary {
    pub mode: StudyMode,
    pub regime: Regime,
    pub parity: Parity,
    pub family: NodeFamily,
    pub cost: CostKind,
    pub dims: usize,
    pub alpha: f64,
    pub q1: f64,
    pub q2: f64,
    /// Parametric rate `β` (or the purely parametric rate for parametric
    /// plans).
    pub beta: f64,
    /// `min(α, β)` for level/parameter plans, `β` for parametric ones.
    pub predicted_rate: f64,
    /// Least-squares rate over the last half of the budgets.
    pub fitted_rate: Option<f64>,
    pub fit_budgets: Vec<u64>,
    pub reference: String,
    pub reference_norm: f64,
    pub seed: u64,
    pub rows: Vec<StudyRow>,
}

/// What a study measures its approximations against.
#[derive(Clone, Debug)]
pub enum Reference {
    /// `E[u] = factor · sin(πx)`.
    ClosedForm { factor: f64 },
    /// Tensor-rule mean on the reference level.
    Mean(Field),
    /// Parameter samples with their reference-level solutions.
    Samples(Vec<(Vec<f64>, Field)>),
}

impl Reference {
    fn describe(&self, config: &ExperimentConfig) -> String {
        let s = &config.study;
        match self {
            Reference::ClosedForm { factor } => format!("closed form {factor:.16e} sin(pi x)"),
            Reference::Mean(_) => format!(
                "tensor rule with {} points per dimension at level {}",
                s.reference_order + 1,
                s.reference_level
            ),
            Reference::Samples(v) => {
                format!("{} Monte Carlo samples at level {} (seed {})", v.len(), s.reference_level, s.seed)
            }
        }
    }

    fn norm(&self) -> Result<f64> {
        Ok(match self {
            Reference::ClosedForm { factor } => {
                norm_v_analytic(|x| factor * std::f64::consts::PI * (std::f64::consts::PI * x).cos())?
            }
            Reference::Mean(f) => f.norm_v(),
            Reference::Samples(v) => {
                (v.iter().map(|(_, f)| f.norm_v().powi(2)).sum::<f64>() / v.len() as f64).sqrt()
            }
        })
    }
}

/// Reference for a configuration; studies that differ only in their plans
/// can share it through [`run_study_with_reference`].
pub fn build_reference(config: &ExperimentConfig) -> Result<Reference> {
    config.validate()?;
    let solver = ModelSolver::new(config.model()?, SpatialHierarchy::new(config.model.source));
    reference_for(config, &solver)
}

fn reference_for(config: &ExperimentConfig, solver: &ModelSolver) -> Result<Reference> {
    let s = &config.study;
    let dims = config.model.dims;
    match s.mode {
        StudyMode::Quadrature if !config.uses_tensor_reference() => Ok(Reference::ClosedForm {
            factor: config.closed_form_mean().expect("validated closed form"),
        }),
        StudyMode::Quadrature => {
            let rule = TensorRule::new(dims, s.reference_order, config.family().measure())?;
            Ok(Reference::Mean(rule.apply(|y| solver.solve(s.reference_level, y))?))
        }
        StudyMode::Interpolation => {
            let samples: Vec<Result<(Vec<f64>, Field)>> = (0..s.mc_samples as u64)
                .into_par_iter()
                .map(|i| {
                    let y = sample(config, i);
                    let u = solver.solve(s.reference_level, &y)?;
                    Ok((y, u))
                })
                .collect();
            Ok(Reference::Samples(samples.into_iter().collect::<Result<_>>()?))
        }
    }
}

/// Parameter sample `i`: standard normal for lognormal models, uniform on
/// `[-1, 1]` (through the normal CDF) for affine ones.
fn sample(config: &ExperimentConfig, i: u64) -> Vec<f64> {
    let y = gaussian_sample(config.study.seed, i, config.model.dims);
    match config.family() {
        NodeFamily::GaussJacobi { .. } => y.into_iter().map(|v| libm::erf(v / std::f64::consts::SQRT_2)).collect(),
        _ => y,
    }
}

/// Plan builder for threshold `ξ` under the configured regime and parity.
pub fn plan_builder(config: &ExperimentConfig) -> Result<impl Fn(f64, Option<usize>) -> Result<IndexPlan>> {
    let weights = config.weights()?;
    let regime = config.study.regime;
    let parity = config.parity();
    let alpha = config.study.alpha;
    Ok(move |xi: f64, cap: Option<usize>| match regime {
        Regime::Parametric => build_lambda(xi, &weights.spec1, parity, cap),
        _ => build_g(
            xi,
            &GSpec { alpha, spec1: &weights.spec1, spec2: &weights.spec2, regime, parity },
            cap,
        ),
    })
}

/// Rates predicted for the configured study: `(β, predicted)`.
pub fn predicted_rates(config: &ExperimentConfig) -> Result<(f64, f64, f64, f64)> {
    let w = config.weights()?;
    let scale = match config.study.mode {
        StudyMode::Quadrature => 0.5,
        StudyMode::Interpolation => 1.0,
    };
    let (q1, q2) = (w.spec1.q / scale, w.spec2.q / scale);
    let gain = 1.0 / scale;
    let base = gain / q1 - 0.5;
    let alpha = config.study.alpha;
    let (beta, predicted) = match config.study.regime {
        Regime::Parametric => (base, base),
        _ => {
            let delta = gain / q1 - gain / q2;
            let beta = base * alpha / (alpha + delta);
            (beta, alpha.min(beta))
        }
    };
    Ok((q1, q2, beta, predicted))
}

/// Least-squares rate `-d log(error) / d log(n)` over the last half of the
/// rows (at least two).
pub fn fit_rate(rows: &[(u64, f64)]) -> Option<(f64, Vec<u64>)> {
    if rows.len() < 2 {
        return None;
    }
    let take = rows.len().div_ceil(2).max(2);
    let tail = &rows[rows.len() - take..];
    if tail.iter().any(|(_, e)| !(*e > 0.0)) {
        return None;
    }
    let pts: Vec<(f64, f64)> = tail.iter().map(|&(n, e)| ((n as f64).ln(), e.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some((-sxy / sxx, tail.iter().map(|r| r.0).collect()))
}

pub fn run_study(config: &ExperimentConfig) -> Result<StudySummary> {
    run_study_with_reference(config, &build_reference(config)?)
}

/// [`run_study`] with a precomputed reference, which must match the study
/// mode.
pub fn run_study_with_reference(config: &ExperimentConfig, reference: &Reference) -> Result<StudySummary> {
    config.validate()?;
    let s = &config.study;
    let matches = match reference {
        Reference::Samples(samples) => {
            s.mode == StudyMode::Interpolation && samples.iter().all(|(y, _)| y.len() == config.model.dims)
        }
        _ => s.mode == StudyMode::Quadrature,
    };
    if !matches {
        return Err(Error::Usage("reference does not fit the study mode".into()));
    }
    let family = config.family();
    let dims = config.model.dims;
    let solver = ModelSolver::new(config.model()?, SpatialHierarchy::new(config.model.source));
    let fixed = FixedLevel { inner: &solver, level: s.max_level };
    let reference_norm = reference.norm()?;
    let build = plan_builder(config)?;

    let mut rows = Vec::with_capacity(s.budgets.len());
    for &n in &s.budgets {
        let start = Instant::now();
        let (xi, plan) = calibrate_xi(n, s.cost, family, &build)?;
        let plan_level = plan.max_level().unwrap_or(0);
        if plan_level > s.max_level {
            return Err(Error::Budget(format!(
                "budget {n} needs mesh level {plan_level} > study.max_level {}",
                s.max_level
            )));
        }
        let mut evaluator = SparseEvaluator::new(&plan, family, dims)?;
        let (error, std_error) = if s.regime == Regime::Parametric {
            measure(&mut evaluator, &fixed, reference)?
        } else {
            measure(&mut evaluator, &solver, reference)?
        };
        rows.push(StudyRow {
            n,
            xi,
            cardinality: plan.len() as u64,
            dyadic_dim: plan.dyadic_dim(),
            grid_points: grid_of(&plan.parametric_set(), family)?.len() as u64,
            max_level: plan_level,
            error,
            relative_error: error / reference_norm,
            std_error,
            seconds: start.elapsed().as_secs_f64(),
            stats: evaluator.stats(),
        });
    }

    let pairs: Vec<(u64, f64)> = rows.iter().map(|r| (r.n, r.error)).collect();
    let (fitted_rate, fit_budgets) = match fit_rate(&pairs) {
        Some((rate, ns)) => (Some(rate), ns),
        None => (None, Vec::new()),
    };
    let (q1, q2, beta, predicted_rate) = predicted_rates(config)?;
    Ok(StudySummary {
        mode: s.mode,
        regime: s.regime,
        parity: config.parity(),
        family,
        cost: s.cost,
        dims,
        alpha: s.alpha,
        q1,
        q2,
        beta,
        predicted_rate,
        fitted_rate,
        fit_budgets,
        reference: reference.describe(config),
        reference_norm,
        seed: s.seed,
        rows,
    })
}

/// Error of the evaluator's approximation against the reference, with the
/// Monte Carlo standard error where applicable.
fn measure(
    evaluator: &mut SparseEvaluator,
    solver: &impl ParametricSolver,
    reference: &Reference,
) -> Result<(f64, Option<f64>)> {
    match reference {
        Reference::ClosedForm { factor } => {
            let q = evaluator.quadrature(solver)?;
            let pi = std::f64::consts::PI;
            Ok((q.error_v_analytic(|x| factor * pi * (pi * x).cos())?, None))
        }
        Reference::Mean(mean) => Ok((field_distance(&evaluator.quadrature(solver)?, mean)?, None)),
        Reference::Samples(samples) => {
            evaluator.prepare(solver)?;
            let sq: Vec<Result<f64>> = samples
                .par_iter()
                .map(|(y, u)| Ok(field_distance(&evaluator.interpolate_prepared(y)?, u)?.powi(2)))
                .collect();
            let sq: Vec<f64> = sq.into_iter().collect::<Result<_>>()?;
            let m = sq.len() as f64;
            let mean = sq.iter().sum::<f64>() / m;
            let var = sq.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
            Ok((mean.sqrt(), Some((var / m).sqrt())))
        }
    }
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

impl StudySummary {
    pub fn write_study_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "n,xi,cardinality,dyadic_dim,grid_points,max_level,error,relative_error,std_error")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.n,
                fmt_f(r.xi),
                r.cardinality,
                r.dyadic_dim,
                r.grid_points,
                r.max_level,
                fmt_f(r.error),
                fmt_f(r.relative_error),
                r.std_error.map(fmt_f).unwrap_or_default()
            )?;
        }
        Ok(())
    }

    pub fn write_timings_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "n,seconds")?;
        for r in &self.rows {
            writeln!(out, "{},{}", r.n, fmt_f(r.seconds))?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serialises")
    }

    /// Writes `study.csv`, `summary.json` and `timings.csv` into `dir`; only
    /// the last one depends on wall-clock time.
    pub fn write_all(&self, dir: &Path) -> Result<()> {
        let io = |e: std::io::Error| Error::Usage(format!("cannot write to {}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        let mut study = Vec::new();
        self.write_study_csv(&mut study).map_err(io)?;
        std::fs::write(dir.join("study.csv"), study).map_err(io)?;
        std::fs::write(dir.join("summary.json"), self.to_json() + "\n").map_err(io)?;
        let mut timings = Vec::new();
        self.write_timings_csv(&mut timings).map_err(io)?;
        std::fs::write(dir.join("timings.csv"), timings).map_err(io)?;
        Ok(())
    }
}
