//! Parametric diffusion coefficients `a(y) = exp(Σ y_j ψ_j)` and
//! `a(y) = ā + Σ y_j ψ_j`, and the parametric solutions they induce.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{Field, Mesh, SpatialHierarchy, MAX_LEVEL};
use crate::indexset::{RhoSeq, J_MAX};
use crate::sparse::ParametricSolver;

/// Grid size used for sup-norm checks over `x ∈ [0,1]`.
pub const SUP_GRID: usize = 10_000;

/// Truncation multiples used to test convergence of the ρ-weighted sums.
pub const CHECK_MULTIPLES: [usize; 7] = [1, 2, 4, 8, 16, 32, 64];

/// Largest admitted ratio between the last two increments of the partial
/// sums (consecutive doublings of the truncation).
pub const CHECK_RATIO_TOL: f64 = 0.9;

/// Largest admitted geometric tail estimate, relative to the last partial sum.
pub const CHECK_TAIL_TOL: f64 = 1.0;

/// Relative increment below which the partial sums count as settled.
const SETTLED: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CoefficientMode {
    Lognormal,
    Affine { mean: f64 },
}

/// Expansion functions `ψ_j`, `j = 1, 2, …`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PsiFamily {
    /// `ψ_j(x) = c j^{-κ} sin(jπx)`.
    PowerSine { scale: f64, decay: f64 },
    /// `ψ_j(x) = c j^{-κ} hat_j(x)` with `hat_j` the unit hat on
    /// `[1/(j+1), 1/j]`; the supports are pairwise disjoint.
    DisjointBump { scale: f64, decay: f64 },
    /// A single term `ψ_1 ≡ σ`.
    ConstantOneTerm { sigma: f64 },
}

impl PsiFamily {
    /// `ψ_j(x)` for 1-based `j`.
    pub fn value(&self, j: usize, x: f64) -> f64 {
        let jf = j as f64;
        match *self {
            PsiFamily::PowerSine { scale, decay } => scale * jf.powf(-decay) * (jf * PI * x).sin(),
            PsiFamily::DisjointBump { scale, decay } => {
                let (lo, hi) = (1.0 / (jf + 1.0), 1.0 / jf);
                let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                scale * jf.powf(-decay) * (1.0 - (x - mid).abs() / half).max(0.0)
            }
            PsiFamily::ConstantOneTerm { sigma } => {
                if j == 1 {
                    sigma
                } else {
                    0.0
                }
            }
        }
    }

    /// `|ψ_j'(x)|`, taking the one-sided maximum at kinks.
    pub fn slope_abs(&self, j: usize, x: f64) -> f64 {
        let jf = j as f64;
        match *self {
            PsiFamily::PowerSine { scale, decay } => {
                scale * jf.powf(1.0 - decay) * PI * (jf * PI * x).cos().abs()
            }
            PsiFamily::DisjointBump { scale, decay } => {
                let (lo, hi) = (1.0 / (jf + 1.0), 1.0 / jf);
                if x >= lo && x <= hi {
                    scale * jf.powf(-decay) * 2.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            PsiFamily::ConstantOneTerm { .. } => 0.0,
        }
    }

    /// `‖ψ_j'‖_∞`.
    pub fn slope_sup(&self, j: usize) -> f64 {
        let jf = j as f64;
        match *self {
            PsiFamily::PowerSine { scale, decay } => scale.abs() * jf.powf(1.0 - decay) * PI,
            PsiFamily::DisjointBump { scale, decay } => scale.abs() * jf.powf(-decay) * 2.0 * jf * (jf + 1.0),
            PsiFamily::ConstantOneTerm { .. } => 0.0,
        }
    }

    /// `‖ψ_j‖_∞`.
    pub fn sup(&self, j: usize) -> f64 {
        match *self {
            PsiFamily::PowerSine { scale, decay } | PsiFamily::DisjointBump { scale, decay } => {
                scale.abs() * (j as f64).powf(-decay)
            }
            PsiFamily::ConstantOneTerm { sigma } => {
                if j == 1 {
                    sigma.abs()
                } else {
                    0.0
                }
            }
        }
    }
}

/// Coefficient model truncated to `dims` parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientModel {
    pub mode: CoefficientMode,
    pub psi: PsiFamily,
    pub dims: usize,
}

impl CoefficientModel {
    pub fn new(mode: CoefficientMode, psi: PsiFamily, dims: usize) -> Result<Self> {
        let model = Self { mode, psi, dims };
        model.validate()?;
        Ok(model)
    }

    pub fn lognormal(psi: PsiFamily, dims: usize) -> Result<Self> {
        Self::new(CoefficientMode::Lognormal, psi, dims)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims == 0 || self.dims > J_MAX {
            return Err(Error::Parameter(format!("dims must lie in 1..={J_MAX}, got {}", self.dims)));
        }
        if matches!(self.psi, PsiFamily::ConstantOneTerm { .. }) && self.dims != 1 {
            return Err(Error::Parameter("the constant one-term family has exactly one dimension".into()));
        }
        if let CoefficientMode::Affine { mean } = self.mode {
            if !(mean > 0.0) {
                return Err(Error::NonCoercive(format!("mean coefficient {mean} is not positive")));
            }
            // coercive for all y ∈ [-1,1]^J
            let worst = sup_on_grid(|x| (1..=self.dims).map(|j| self.psi.value(j, x).abs()).sum());
            if worst >= mean {
                return Err(Error::NonCoercive(format!(
                    "Σ|ψ_j| reaches {worst} which is not below the mean {mean}"
                )));
            }
        }
        Ok(())
    }

    /// `a(y, x)` at every `x` in `xs`; `y` has length `dims`.
    pub fn coefficient_at(&self, y: &[f64], xs: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.dims {
            return Err(Error::LengthMismatch { expected: self.dims, got: y.len() });
        }
        let active: Vec<(usize, f64)> =
            y.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(d, v)| (d + 1, *v)).collect();
        let b = |x: f64| active.iter().map(|&(j, yj)| yj * self.psi.value(j, x)).sum::<f64>();
        match self.mode {
            CoefficientMode::Lognormal => Ok(xs.iter().map(|&x| b(x).exp()).collect()),
            CoefficientMode::Affine { mean } => xs
                .iter()
                .map(|&x| {
                    let a = mean + b(x);
                    if a > 0.0 {
                        Ok(a)
                    } else {
                        Err(Error::NonCoercive(format!("a = {a} at x = {x} for y = {y:?}")))
                    }
                })
                .collect(),
        }
    }

    /// Finite element solution at level `k` for the parameter `y`.
    pub fn solve_parametric(&self, hierarchy: &SpatialHierarchy, k: u32, y: &[f64]) -> Result<Field> {
        let xs = Mesh::new(k)?.sample_points();
        let a = self.coefficient_at(y, &xs)?;
        hierarchy.solve(k, &a)
    }

    /// Checks `sup_x Σ_j ρ_j |D^{r-1} ψ_j(x)|` for `r ∈ {1, 2}`.
    ///
    /// The partial sums are evaluated at truncations `J, 2J, …, 64J`. The
    /// hypothesis counts as satisfied when the increments between doublings
    /// shrink by a ratio of at most [`CHECK_RATIO_TOL`] and the geometric tail
    /// `d r/(1-r)` built from the last increment `d` stays within
    /// [`CHECK_TAIL_TOL`] times the last sum. In affine mode the `r = 1` value
    /// is divided by `ā` and the extrapolated sum must stay below 1.
    pub fn check_rho(&self, r: u32, rho: &RhoSeq) -> Result<RhoCheck> {
        if !(r == 1 || r == 2) {
            return Err(Error::Parameter(format!("derivative order r = {r} is not supported")));
        }
        let scale = match self.mode {
            CoefficientMode::Affine { mean } if r == 1 => 1.0 / mean,
            _ => 1.0,
        };
        let one_term = matches!(self.psi, PsiFamily::ConstantOneTerm { .. });
        let truncations: Vec<usize> =
            if one_term { vec![1] } else { CHECK_MULTIPLES.iter().map(|m| m * self.dims).collect() };
        let top = *truncations.last().unwrap();
        let grid: Vec<f64> = (0..=SUP_GRID).map(|i| i as f64 / SUP_GRID as f64).collect();
        let mut sums = vec![0.0f64; grid.len()];
        let mut disjoint_max = 0.0f64;
        let mut partial_sups = Vec::new();
        let mut next = 0;
        for j in 1..=top {
            let rho_j = rho.value(j - 1);
            if let PsiFamily::DisjointBump { .. } = self.psi {
                // disjoint supports: the sum is a maximum, which the grid may
                // not resolve for narrow hats
                let term = if r == 1 { self.psi.sup(j) } else { self.psi.slope_sup(j) };
                disjoint_max = disjoint_max.max(rho_j * term);
            } else {
                for (s, &x) in sums.iter_mut().zip(&grid) {
                    let term = if r == 1 { self.psi.value(j, x).abs() } else { self.psi.slope_abs(j, x) };
                    *s += rho_j * term;
                }
            }
            if j == truncations[next] {
                let sup = sums.iter().fold(disjoint_max, |m, v| m.max(*v));
                partial_sups.push(scale * sup);
                next += 1;
            }
        }
        let n = partial_sups.len();
        let last = partial_sups[n - 1];
        let growth = if n >= 2 { last / partial_sups[n - 2] - 1.0 } else { 0.0 };
        let (ratio, tail) = if n >= 3 {
            let d_last = partial_sups[n - 1] - partial_sups[n - 2];
            let d_prev = partial_sups[n - 2] - partial_sups[n - 3];
            if d_last <= SETTLED * last {
                (0.0, 0.0)
            } else {
                let ratio = d_last / d_prev;
                (ratio, d_last * ratio / (1.0 - ratio))
            }
        } else {
            (0.0, 0.0)
        };
        let mut passed = last.is_finite()
            && (ratio == 0.0 || (ratio > 0.0 && ratio <= CHECK_RATIO_TOL && tail <= CHECK_TAIL_TOL * last));
        if scale != 1.0 {
            passed &= last + tail < 1.0;
        }
        Ok(RhoCheck { r, truncations, partial_sups, growth, increment_ratio: ratio, tail_estimate: tail, passed })
    }

    /// Default growth sequences `ρ_{r;j} = c_r j^{κ_r}` with their summability
    /// exponents `q_r`, checked against the model.
    pub fn rho_defaults(&self) -> Result<RhoDefaults> {
        let (rho1, rho2, q1, q2) = match self.psi {
            PsiFamily::ConstantOneTerm { .. } => {
                let rho = RhoSeq::Explicit { values: vec![1.0f64.exp()] };
                (rho.clone(), rho, 1.0, 1.0)
            }
            PsiFamily::PowerSine { decay, .. } | PsiFamily::DisjointBump { decay, .. } => {
                // |ψ_j| overlaps for sines, so the growth must leave a summable
                // j^{-1} margin; derivatives grow like j for sines and j² for hats
                let value_loss = if matches!(self.psi, PsiFamily::PowerSine { .. }) { 1.0 } else { 0.0 };
                let k1 = DEFAULT_KAPPA_FRACTION * (decay - value_loss);
                let k2 = DEFAULT_KAPPA_FRACTION * (decay - 2.0);
                if !(k1 > 0.0 && k2 > 0.0) {
                    return Err(Error::Parameter(format!(
                        "decay {decay} is too slow for polynomial growth sequences"
                    )));
                }
                let c = match self.mode {
                    CoefficientMode::Lognormal => DEFAULT_RHO_CONSTANT,
                    CoefficientMode::Affine { mean } => {
                        let unit = RhoSeq::Power { c: 1.0, kappa: k1 };
                        let s = self.check_rho(1, &unit)?;
                        let total = s.partial_sups.last().copied().unwrap_or(f64::INFINITY) + s.tail_estimate;
                        let c = AFFINE_MARGIN / total;
                        if !(c > 1.0) {
                            return Err(Error::NonCoercive(format!(
                                "mean {mean} leaves no room for growth ρ_j > 1"
                            )));
                        }
                        c
                    }
                };
                (
                    RhoSeq::Power { c, kappa: k1 },
                    RhoSeq::Power { c, kappa: k2 },
                    DEFAULT_Q_FACTOR / k1,
                    DEFAULT_Q_FACTOR / k2,
                )
            }
        };
        let check1 = self.check_rho(1, &rho1)?;
        let check2 = match self.mode {
            CoefficientMode::Lognormal => Some(self.check_rho(2, &rho2)?),
            CoefficientMode::Affine { .. } => None,
        };
        for check in std::iter::once(&check1).chain(check2.as_ref()) {
            if !check.passed {
                return Err(Error::Parameter(format!(
                    "default ρ sequence fails the r = {} check: {:?}",
                    check.r, check.partial_sups
                )));
            }
        }
        Ok(RhoDefaults { rho1, rho2, q1, q2, check1, check2 })
    }
}

/// Parametric solver for a model, caching `ψ_j` at the sample points of
/// every level it has visited.
#[derive(Debug)]
pub struct ModelSolver {
    pub model: CoefficientModel,
    pub hierarchy: SpatialHierarchy,
    psi_tables: Vec<OnceLock<Vec<Vec<f64>>>>,
}

impl ModelSolver {
    pub fn new(model: CoefficientModel, hierarchy: SpatialHierarchy) -> Self {
        let psi_tables = (0..=MAX_LEVEL).map(|_| OnceLock::new()).collect();
        Self { model, hierarchy, psi_tables }
    }

    fn psi_table(&self, level: u32) -> Result<&Vec<Vec<f64>>> {
        let slot = self
            .psi_tables
            .get(level as usize)
            .ok_or_else(|| Error::Parameter(format!("mesh level {level} exceeds {MAX_LEVEL}")))?;
        let mesh = Mesh::new(level)?;
        Ok(slot.get_or_init(|| {
            let xs = mesh.sample_points();
            (1..=self.model.dims).map(|j| xs.iter().map(|&x| self.model.psi.value(j, x)).collect()).collect()
        }))
    }
}

impl ParametricSolver for ModelSolver {
    fn dims(&self) -> usize {
        self.model.dims
    }

    fn solve(&self, level: u32, y: &[f64]) -> Result<Field> {
        if y.len() != self.model.dims {
            return Err(Error::LengthMismatch { expected: self.model.dims, got: y.len() });
        }
        let table = self.psi_table(level)?;
        let mut b = vec![0.0; table[0].len()];
        for (row, &yj) in table.iter().zip(y) {
            if yj != 0.0 {
                b.iter_mut().zip(row).for_each(|(acc, p)| *acc += yj * p);
            }
        }
        let a: Vec<f64> = match self.model.mode {
            CoefficientMode::Lognormal => b.into_iter().map(f64::exp).collect(),
            CoefficientMode::Affine { mean } => b.into_iter().map(|v| mean + v).collect(),
        };
        self.hierarchy.solve(level, &a)
    }
}

const DEFAULT_KAPPA_FRACTION: f64 = 0.75;
const DEFAULT_Q_FACTOR: f64 = 1.1;
const DEFAULT_RHO_CONSTANT: f64 = 2.0;
const AFFINE_MARGIN: f64 = 0.9;

/// Outcome of a ρ-hypothesis check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RhoCheck {
    pub r: u32,
    pub truncations: Vec<usize>,
    pub partial_sups: Vec<f64>,
    /// Relative growth over the last doubling.
    pub growth: f64,
    /// Ratio of the last two increments.
    pub increment_ratio: f64,
    /// Geometric estimate of the remaining tail.
    pub tail_estimate: f64,
    pub passed: bool,
}

/// Growth sequences and summability exponents suggested for a model.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RhoDefaults {
    pub rho1: RhoSeq,
    pub rho2: RhoSeq,
    pub q1: f64,
    pub q2: f64,
    pub check1: RhoCheck,
    pub check2: Option<RhoCheck>,
}

fn sup_on_grid(g: impl Fn(f64) -> f64) -> f64 {
    (0..=SUP_GRID).map(|i| g(i as f64 / SUP_GRID as f64)).fold(0.0f64, f64::max)
}
