//! Univariate Lagrange interpolation `I_m`, quadrature `Q_m`, and the
//! difference operators `Δ_m = I_m - I_{m-1}`, `Δ^Q_m = Q_m - Q_{m-1}`.

use crate::error::{Error, Result};
use crate::nodes::{Measure, NodeFamily, NodeSequence};
use crate::orthopoly::{gauss_hermite_rule, gauss_jacobi_rule};

/// Values that interpolation and quadrature can combine linearly: scalars,
/// coefficient vectors, finite element fields.
pub trait Vector: Clone + Send + Sync {
    /// Zero element shaped like `self`.
    fn zeros_like(&self) -> Self;
    /// `self += alpha * x`.
    fn axpy(&mut self, alpha: f64, x: &Self);
}

impl Vector for f64 {
    fn zeros_like(&self) -> Self {
        0.0
    }
    fn axpy(&mut self, alpha: f64, x: &Self) {
        *self += alpha * x;
    }
}

impl Vector for Vec<f64> {
    fn zeros_like(&self) -> Self {
        vec![0.0; self.len()]
    }
    fn axpy(&mut self, alpha: f64, x: &Self) {
        assert_eq!(self.len(), x.len(), "vector length mismatch");
        for (a, b) in self.iter_mut().zip(x) {
            *a += alpha * b;
        }
    }
}

/// `Σ_k coeffs[k] * values[k]`, summed left to right.
pub fn linear_combination<V: Vector>(coeffs: &[f64], values: &[V]) -> Result<V> {
    if coeffs.len() != values.len() {
        return Err(Error::LengthMismatch {
            expected: coeffs.len(),
            got: values.len(),
        });
    }
    let first = values
        .first()
        .ok_or_else(|| Error::Usage("empty value list".into()))?;
    let mut acc = first.zeros_like();
    for (c, v) in coeffs.iter().zip(values) {
        acc.axpy(*c, v);
    }
    Ok(acc)
}

/// Second-form barycentric evaluation of the Lagrange basis of a point set.
#[derive(Clone, Debug)]
pub struct BarycentricBasis {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl BarycentricBasis {
    pub fn new(points: &[f64]) -> Self {
        // λ_j = 1/∏_{k≠j}(x_j - x_k), computed in log scale and normalized;
        // the second barycentric form is invariant under a common factor.
        let n = points.len();
        let mut logs = vec![0.0; n];
        let mut signs = vec![1.0; n];
        for j in 0..n {
            for k in 0..n {
                if k != j {
                    let d = points[j] - points[k];
                    logs[j] -= d.abs().ln();
                    if d < 0.0 {
                        signs[j] = -signs[j];
                    }
                }
            }
        }
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights = logs
            .iter()
            .zip(&signs)
            .map(|(l, s)| s * (l - max).exp())
            .collect();
        Self {
            points: points.to_vec(),
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Writes `ℓ_k(y)` for all `k` into `out`.
    pub fn eval_all(&self, y: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.points.len());
        if let Some(hit) = self.points.iter().position(|&x| x == y) {
            out.iter_mut().for_each(|v| *v = 0.0);
            out[hit] = 1.0;
            return;
        }
        let mut denom = 0.0;
        for ((o, &x), &w) in out.iter_mut().zip(&self.points).zip(&self.weights) {
            *o = w / (y - x);
            denom += *o;
        }
        for o in out.iter_mut() {
            *o /= denom;
        }
    }

    pub fn eval(&self, k: usize, y: f64) -> f64 {
        let mut out = vec![0.0; self.points.len()];
        self.eval_all(y, &mut out);
        out[k]
    }
}

/// One level of a node family with its barycentric basis and quadrature
/// weights `ω_{m;k} = ∫ ℓ_{m;k} dμ`.
#[derive(Clone, Debug)]
pub struct UniRule {
    pub nodes: NodeSequence,
    pub basis: BarycentricBasis,
    pub weights: Vec<f64>,
}

impl UniRule {
    pub fn new(nodes: NodeSequence) -> Result<Self> {
        let basis = BarycentricBasis::new(&nodes.points);
        let weights = quad_weights(&nodes, nodes.family.measure())?;
        Ok(Self {
            nodes,
            basis,
            weights,
        })
    }

    pub fn level(&self) -> usize {
        self.nodes.level
    }

    pub fn points(&self) -> &[f64] {
        &self.nodes.points
    }

    pub fn basis_values(&self, y: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.basis.len()];
        self.basis.eval_all(y, &mut out);
        out
    }
}

/// Rules of one family for levels `0..=max_level`.
#[derive(Clone, Debug)]
pub struct RuleTable {
    family: NodeFamily,
    rules: Vec<UniRule>,
}

impl RuleTable {
    pub fn new(family: NodeFamily, max_level: usize) -> Result<Self> {
        let rules = (0..=max_level)
            .map(|m| family.nodes(m).and_then(UniRule::new))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { family, rules })
    }

    pub fn family(&self) -> NodeFamily {
        self.family
    }

    pub fn max_level(&self) -> usize {
        self.rules.len() - 1
    }

    pub fn rule(&self, m: usize) -> Result<&UniRule> {
        self.rules.get(m).ok_or_else(|| {
            Error::Usage(format!(
                "rule table holds levels up to {}, level {m} requested",
                self.rules.len() - 1
            ))
        })
    }
}

/// `ℓ_{m;k}(y)` for the given nodes.
pub fn lagrange_basis(nodes: &NodeSequence, k: usize, y: f64) -> f64 {
    BarycentricBasis::new(&nodes.points).eval(k, y)
}

/// `I_m(v)(y) = Σ_k values[k] ℓ_{m;k}(y)`.
pub fn interpolate<V: Vector>(nodes: &NodeSequence, values: &[V], y: f64) -> Result<V> {
    if values.len() != nodes.points.len() {
        return Err(Error::LengthMismatch {
            expected: nodes.points.len(),
            got: values.len(),
        });
    }
    let basis = BarycentricBasis::new(&nodes.points);
    let mut ell = vec![0.0; basis.len()];
    basis.eval_all(y, &mut ell);
    linear_combination(&ell, values)
}

/// Reference Gauss rule with `n` points for `measure`.
pub fn reference_rule(measure: Measure, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    match measure {
        Measure::Gaussian => gauss_hermite_rule(n),
        Measure::Jacobi { a } => gauss_jacobi_rule(n, a, a),
    }
}

/// `ω_{m;k} = ∫ ℓ_{m;k} dμ`, integrated exactly by a Gauss rule of the same
/// measure with `⌈(m+2)/2⌉` points.
pub fn quad_weights(nodes: &NodeSequence, measure: Measure) -> Result<Vec<f64>> {
    let m = nodes.level;
    let (x, w) = reference_rule(measure, (m + 3) / 2)?;
    let basis = BarycentricBasis::new(&nodes.points);
    let mut ell = vec![0.0; basis.len()];
    let mut out = vec![0.0; basis.len()];
    for (&xi, &wi) in x.iter().zip(&w) {
        basis.eval_all(xi, &mut ell);
        for (o, l) in out.iter_mut().zip(&ell) {
            *o += wi * l;
        }
    }
    Ok(out)
}

/// `Q_m(v) = Σ_k ω_{m;k} values[k]`.
pub fn quadrature<V: Vector>(rule: &UniRule, values: &[V]) -> Result<V> {
    linear_combination(&rule.weights, values)
}

/// `Δ_m(v)(y) = I_m(v)(y) - I_{m-1}(v)(y)` with `I_{-1} = 0`.
pub fn delta_interp<V: Vector>(
    family: NodeFamily,
    m: usize,
    v: impl Fn(f64) -> V,
    y: f64,
) -> Result<V> {
    let fine = family.nodes(m)?;
    let vals: Vec<V> = fine.points.iter().map(|&p| v(p)).collect();
    let mut out = interpolate(&fine, &vals, y)?;
    if m > 0 {
        let coarse = family.nodes(m - 1)?;
        let vals: Vec<V> = coarse.points.iter().map(|&p| v(p)).collect();
        out.axpy(-1.0, &interpolate(&coarse, &vals, y)?);
    }
    Ok(out)
}

/// `Δ^Q_m(v) = Q_m(v) - Q_{m-1}(v)` with `Q_{-1} = 0`.
pub fn delta_quad<V: Vector>(family: NodeFamily, m: usize, v: impl Fn(f64) -> V) -> Result<V> {
    let fine = UniRule::new(family.nodes(m)?)?;
    let vals: Vec<V> = fine.points().iter().map(|&p| v(p)).collect();
    let mut out = quadrature(&fine, &vals)?;
    if m > 0 {
        let coarse = UniRule::new(family.nodes(m - 1)?)?;
        let vals: Vec<V> = coarse.points().iter().map(|&p| v(p)).collect();
        out.axpy(-1.0, &quadrature(&coarse, &vals)?);
    }
    Ok(out)
}
