//! Sparse interpolation and quadrature over downward closed index sets, and
//! the fully discrete operators combining them with the spatial hierarchy.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::Field;
use crate::indexset::{
    dense_coords, difference_step, for_each_tensor_point, lower_neighbours, Coords, IndexPlan,
    MultiIndex, PointId,
};
use crate::nodes::NodeFamily;
use crate::oracle::hermite_coefficients;
use crate::orthopoly::hermite_value;
use crate::rules1d::{RuleTable, Vector};

/// `c_t = Σ_{e ∈ {0,1}^J, t + step·e ∈ Λ} (-1)^{|e|}`, keeping the nonzero
/// ones; `step` comes from [`difference_step`].
pub fn combination_coefficients(set: &BTreeSet<MultiIndex>, step: u32) -> BTreeMap<MultiIndex, i64> {
    let mut coeffs: BTreeMap<MultiIndex, i64> = BTreeMap::new();
    for s in set {
        for (t, lowered) in lower_neighbours(s, step) {
            *coeffs.entry(t).or_insert(0) += if lowered % 2 == 0 { 1 } else { -1 };
        }
    }
    coeffs.retain(|_, c| *c != 0);
    coeffs
}

struct TensorTerm {
    coeff: f64,
    /// `(dim, level)` for every dimension in the support of `t`.
    support: Vec<(usize, usize)>,
    /// Point indices in odometer order (first support entry fastest).
    points: Vec<usize>,
}

/// `I_Λ` and `Q_Λ` in combination form over the points `Γ(Λ)` that carry a
/// nonzero combined coefficient.
pub struct SparseOperator {
    table: Arc<RuleTable>,
    dims: usize,
    terms: Vec<TensorTerm>,
    ids: Vec<PointId>,
    coords: Vec<Coords>,
    quad_weights: Vec<f64>,
}

impl SparseOperator {
    pub fn new(set: &BTreeSet<MultiIndex>, family: NodeFamily, dims: usize) -> Result<Self> {
        let max_level = set.iter().map(MultiIndex::max_entry).max().unwrap_or(0) as usize;
        Self::with_table(set, Arc::new(RuleTable::new(family, max_level)?), dims)
    }

    pub fn with_table(set: &BTreeSet<MultiIndex>, table: Arc<RuleTable>, dims: usize) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::Parameter("index set is empty".into()));
        }
        let step = difference_step(set)?;
        if let Some(s) = set.iter().find(|s| s.dim_bound() > dims) {
            return Err(Error::Parameter(format!("index {s} exceeds {dims} dimensions")));
        }
        let family = table.family();
        let coeffs = combination_coefficients(set, step);
        let mut index: BTreeMap<PointId, Coords> = BTreeMap::new();
        for t in coeffs.keys() {
            for_each_tensor_point(t, family, &table, |p| {
                index.entry(p.id).or_insert(p.coords);
                Ok(())
            })?;
        }
        let positions: BTreeMap<&PointId, usize> = index.keys().enumerate().map(|(i, id)| (id, i)).collect();
        let mut terms = Vec::with_capacity(coeffs.len());
        let mut quad_weights = vec![0.0; index.len()];
        for (t, &c) in &coeffs {
            let support: Vec<(usize, usize)> = t.iter().map(|(d, v)| (d, v as usize)).collect();
            let mut points = Vec::new();
            for_each_tensor_point(t, family, &table, |p| {
                let i = positions[&p.id];
                let mut w = c as f64;
                for (j, &(_, lvl)) in support.iter().enumerate() {
                    w *= table.rule(lvl)?.weights[p.local[j]];
                }
                quad_weights[i] += w;
                points.push(i);
                Ok(())
            })?;
            terms.push(TensorTerm { coeff: c as f64, support, points });
        }
        let (ids, coords) = index.into_iter().unzip();
        Ok(Self { table, dims, terms, ids, coords, quad_weights })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[PointId] {
        &self.ids
    }

    /// Dense coordinates of point `i`.
    pub fn point(&self, i: usize) -> Vec<f64> {
        dense_coords(&self.coords[i], self.dims)
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Combined quadrature weights, aligned with [`SparseOperator::ids`].
    pub fn quadrature_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    /// Combined interpolation weights `Σ_t c_t ∏_j ℓ_{t_j;m_j}(y_j)` at `y`.
    pub fn interpolation_weights(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.dims {
            return Err(Error::LengthMismatch { expected: self.dims, got: y.len() });
        }
        let mut basis: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
        let mut weights = vec![0.0; self.len()];
        let mut local = Vec::new();
        for term in &self.terms {
            for &(d, lvl) in &term.support {
                if !basis.contains_key(&(d, lvl)) {
                    basis.insert((d, lvl), self.table.rule(lvl)?.basis_values(y[d]));
                }
            }
            let rows: Vec<&Vec<f64>> = term.support.iter().map(|key| &basis[key]).collect();
            local.clear();
            local.resize(term.support.len(), 0usize);
            for &i in &term.points {
                let mut w = term.coeff;
                for (j, row) in rows.iter().enumerate() {
                    w *= row[local[j]];
                }
                weights[i] += w;
                for (j, &(_, lvl)) in term.support.iter().enumerate() {
                    local[j] += 1;
                    if local[j] <= lvl {
                        break;
                    }
                    local[j] = 0;
                }
            }
        }
        Ok(weights)
    }

    /// `Σ_p w_p v_p` in point order.
    fn weighted_sum<V: Vector>(weights: &[f64], values: &[&V]) -> Result<V> {
        if values.len() != weights.len() {
            return Err(Error::LengthMismatch { expected: weights.len(), got: values.len() });
        }
        let mut acc = values[0].zeros_like();
        for (w, v) in weights.iter().zip(values) {
            if *w != 0.0 {
                acc.axpy(*w, v);
            }
        }
        Ok(acc)
    }

    pub fn interpolate<V: Vector>(&self, values: &[&V], y: &[f64]) -> Result<V> {
        Self::weighted_sum(&self.interpolation_weights(y)?, values)
    }

    pub fn quadrature<V: Vector>(&self, values: &[&V]) -> Result<V> {
        Self::weighted_sum(&self.quad_weights, values)
    }

    fn sample<V: Vector>(&self, f: impl Fn(&[f64]) -> V) -> Vec<V> {
        (0..self.len()).map(|i| f(&self.point(i))).collect()
    }
}

/// `I_Λ f (y)`; `y` has the length of the parameter vector `f` expects.
pub fn sparse_interpolate<V: Vector>(
    set: &BTreeSet<MultiIndex>,
    family: NodeFamily,
    f: impl Fn(&[f64]) -> V,
    y: &[f64],
) -> Result<V> {
    let op = SparseOperator::new(set, family, y.len())?;
    let values = op.sample(f);
    op.interpolate(&values.iter().collect::<Vec<_>>(), y)
}

/// `Q_Λ f` from combined weights; `f` receives parameter vectors of length
/// `dims`.
pub fn sparse_quadrature<V: Vector>(
    set: &BTreeSet<MultiIndex>,
    family: NodeFamily,
    dims: usize,
    f: impl Fn(&[f64]) -> V,
) -> Result<V> {
    let op = SparseOperator::new(set, family, dims)?;
    let values = op.sample(f);
    op.quadrature(&values.iter().collect::<Vec<_>>())
}

/// Tensor operator `⊗_j A_{t_j}` applied to `f`: interpolation at `y` when
/// given, quadrature otherwise.
fn tensor_apply<V: Vector>(
    t: &MultiIndex,
    table: &RuleTable,
    dims: usize,
    f: &impl Fn(&[f64]) -> V,
    y: Option<&[f64]>,
) -> Result<V> {
    let family = table.family();
    let support: Vec<(usize, usize)> = t.iter().map(|(d, v)| (d, v as usize)).collect();
    let rows: Vec<Vec<f64>> = support
        .iter()
        .map(|&(d, lvl)| {
            let rule = table.rule(lvl)?;
            Ok(match y {
                Some(y) => rule.basis_values(y[d]),
                None => rule.weights.clone(),
            })
        })
        .collect::<Result<_>>()?;
    let mut acc: Option<V> = None;
    for_each_tensor_point(t, family, table, |p| {
        let w: f64 = p.local.iter().zip(&rows).map(|(&m, row)| row[m]).product();
        let v = f(&dense_coords(&p.coords, dims));
        match acc.as_mut() {
            Some(a) => a.axpy(w, &v),
            None => {
                let mut a = v.zeros_like();
                a.axpy(w, &v);
                acc = Some(a);
            }
        }
        Ok(())
    })?;
    Ok(acc.expect("tensor grids are never empty"))
}

fn tensor_delta<V: Vector>(
    s: &MultiIndex,
    family: NodeFamily,
    dims: usize,
    step: u32,
    f: impl Fn(&[f64]) -> V,
    y: Option<&[f64]>,
) -> Result<V> {
    let table = RuleTable::new(family, s.max_entry() as usize)?;
    let mut acc: Option<V> = None;
    for (t, lowered) in lower_neighbours(s, step) {
        let sign = if lowered % 2 == 0 { 1.0 } else { -1.0 };
        let v = tensor_apply(&t, &table, dims, &f, y)?;
        match acc.as_mut() {
            Some(a) => a.axpy(sign, &v),
            None => {
                let mut a = v.zeros_like();
                a.axpy(sign, &v);
                acc = Some(a);
            }
        }
    }
    Ok(acc.expect("lower neighbours include s itself"))
}

/// `Δ^I_s f (y) = Σ_{e ∈ E_s} (-1)^{|e|} (⊗_j I_{s_j - e_j}) f (y)`.
pub fn tensor_delta_interp<V: Vector>(
    s: &MultiIndex,
    family: NodeFamily,
    f: impl Fn(&[f64]) -> V,
    y: &[f64],
) -> Result<V> {
    if s.dim_bound() > y.len() {
        return Err(Error::LengthMismatch { expected: s.dim_bound(), got: y.len() });
    }
    tensor_delta(s, family, y.len(), 1, f, Some(y))
}

/// `Δ^Q_s f`.
pub fn tensor_delta_quad<V: Vector>(
    s: &MultiIndex,
    family: NodeFamily,
    dims: usize,
    f: impl Fn(&[f64]) -> V,
) -> Result<V> {
    if s.dim_bound() > dims {
        return Err(Error::LengthMismatch { expected: s.dim_bound(), got: dims });
    }
    tensor_delta(s, family, dims, 1, f, None)
}

/// `Σ_{s∈Λ} Δ^Q_s f` evaluated term by term, with the differences of
/// [`difference_step`].
pub fn sparse_quadrature_by_terms<V: Vector>(
    set: &BTreeSet<MultiIndex>,
    family: NodeFamily,
    dims: usize,
    f: impl Fn(&[f64]) -> V,
) -> Result<V> {
    let step = difference_step(set)?;
    if let Some(s) = set.iter().find(|s| s.dim_bound() > dims) {
        return Err(Error::LengthMismatch { expected: s.dim_bound(), got: dims });
    }
    let mut acc: Option<V> = None;
    for s in set {
        let v = tensor_delta(s, family, dims, step, &f, None)?;
        match acc.as_mut() {
            Some(a) => a.axpy(1.0, &v),
            None => acc = Some(v),
        }
    }
    acc.ok_or_else(|| Error::Parameter("index set is empty".into()))
}

/// Parameter-to-solution map discretised on the spatial hierarchy.
pub trait ParametricSolver: Sync {
    fn dims(&self) -> usize;
    /// Finite element solution at level `level` for the parameter `y`.
    fn solve(&self, level: u32, y: &[f64]) -> Result<Field>;
}

/// Grid sizes and solver usage of a fully discrete evaluation.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EvaluatorStats {
    pub entries: usize,
    pub max_level: u32,
    /// `(k, number of points of the level-k operator)`.
    pub level_points: Vec<(u32, usize)>,
    pub solver_calls: u64,
    pub cached_values: usize,
}

/// Fully discrete operators `I_G = Σ_k δ_k I_{Λ_k}` and
/// `Q_G = Σ_k δ_k Q_{Λ_k}` with a solution cache keyed by `(level, point)`.
pub struct SparseEvaluator {
    plan: IndexPlan,
    dims: usize,
    /// Operator for every nonempty slice, in increasing level.
    operators: Vec<(u32, SparseOperator)>,
    cache: BTreeMap<(u32, PointId), Field>,
    solver_calls: u64,
}

impl SparseEvaluator {
    pub fn new(plan: &IndexPlan, family: NodeFamily, dims: usize) -> Result<Self> {
        if plan.is_empty() {
            return Err(Error::Parameter("plan is empty".into()));
        }
        let max_entry = plan.entries.iter().map(|e| e.s.max_entry()).max().unwrap_or(0) as usize;
        let table = Arc::new(RuleTable::new(family, max_entry)?);
        let mut operators = Vec::new();
        for (k, slice) in plan.slices().iter().enumerate() {
            if !slice.is_empty() {
                let op = SparseOperator::with_table(slice, table.clone(), dims)
                    .map_err(|e| Error::Closure(format!("slice {k}: {e}")))?;
                operators.push((k as u32, op));
            }
        }
        Ok(Self { plan: plan.clone(), dims, operators, cache: BTreeMap::new(), solver_calls: 0 })
    }

    pub fn plan(&self) -> &IndexPlan {
        &self.plan
    }

    pub fn max_level(&self) -> u32 {
        self.operators.last().map_or(0, |(k, _)| *k)
    }

    /// Solves every missing `(level, point)` pair, in parallel.
    pub fn prepare(&mut self, solver: &impl ParametricSolver) -> Result<()> {
        if solver.dims() != self.dims {
            return Err(Error::LengthMismatch { expected: self.dims, got: solver.dims() });
        }
        let mut missing: BTreeMap<(u32, PointId), Vec<f64>> = BTreeMap::new();
        for (k, op) in &self.operators {
            for (i, id) in op.ids().iter().enumerate() {
                let levels = if *k == 0 { vec![0] } else { vec![*k, k - 1] };
                for level in levels {
                    let key = (level, id.clone());
                    if !self.cache.contains_key(&key) && !missing.contains_key(&key) {
                        missing.insert(key, op.point(i));
                    }
                }
            }
        }
        let jobs: Vec<((u32, PointId), Vec<f64>)> = missing.into_iter().collect();
        let solved: Vec<Result<Field>> = jobs
            .par_iter()
            .map(|((level, id), y)| {
                solver.solve(*level, y).map_err(|e| match e {
                    Error::Solver { .. } => e,
                    other => Error::Solver { level: *level, point: format_point(id), reason: other.to_string() },
                })
            })
            .collect();
        for ((key, _), field) in jobs.into_iter().zip(solved) {
            self.cache.insert(key, field?);
            self.solver_calls += 1;
        }
        Ok(())
    }

    fn values(&self, level: u32, op: &SparseOperator) -> Vec<&Field> {
        op.ids()
            .iter()
            .map(|id| &self.cache[&(level, id.clone())])
            .collect()
    }

    /// `Σ_k [A_k(u_k) - P A_k(u_{k-1})]` accumulated on the finest level.
    fn combine(&self, apply: impl Fn(&SparseOperator, &[&Field]) -> Result<Field>) -> Result<Field> {
        let mut acc: Option<Field> = None;
        for (k, op) in &self.operators {
            let mut term = apply(op, &self.values(*k, op))?;
            if *k > 0 {
                let coarse = apply(op, &self.values(k - 1, op))?.prolong(*k)?;
                term.axpy(-1.0, &coarse);
            }
            acc = Some(match acc {
                None => term,
                Some(prev) => {
                    let mut up = prev.prolong(*k)?;
                    up.axpy(1.0, &term);
                    up
                }
            });
        }
        acc.ok_or_else(|| Error::Parameter("plan is empty".into()))
    }

    /// `Q_G u`.
    pub fn quadrature(&mut self, solver: &impl ParametricSolver) -> Result<Field> {
        self.prepare(solver)?;
        self.combine(|op, values| op.quadrature(values))
    }

    /// `I_G u (y)`.
    pub fn interpolate(&mut self, solver: &impl ParametricSolver, y: &[f64]) -> Result<Field> {
        self.prepare(solver)?;
        self.interpolate_prepared(y)
    }

    /// `I_G u (y)` from the cache filled by [`SparseEvaluator::prepare`].
    pub fn interpolate_prepared(&self, y: &[f64]) -> Result<Field> {
        self.combine(|op, values| op.interpolate(values, y))
    }

    pub fn stats(&self) -> EvaluatorStats {
        EvaluatorStats {
            entries: self.plan.len(),
            max_level: self.max_level(),
            level_points: self.operators.iter().map(|(k, op)| (*k, op.len())).collect(),
            solver_calls: self.solver_calls,
            cached_values: self.cache.len(),
        }
    }
}

fn format_point(id: &PointId) -> String {
    let parts: Vec<String> =
        id.iter().map(|(d, n)| format!("{}:{n}", d + 1)).collect();
    format!("({})", parts.join(","))
}

/// `I_G u (y)` for a parametric solver.
pub fn fully_discrete_interpolate(
    plan: &IndexPlan,
    family: NodeFamily,
    solver: &impl ParametricSolver,
    y: &[f64],
) -> Result<Field> {
    SparseEvaluator::new(plan, family, solver.dims())?.interpolate(solver, y)
}

/// `Q_G u` for a parametric solver.
pub fn fully_discrete_quadrature(
    plan: &IndexPlan,
    family: NodeFamily,
    solver: &impl ParametricSolver,
) -> Result<Field> {
    SparseEvaluator::new(plan, family, solver.dims())?.quadrature(solver)
}

/// Bounded linear functionals on the solution space.
#[derive(Clone, Debug, PartialEq)]
pub enum Functional {
    /// `∫_0^1 v`.
    Mean,
    /// `v(x)`.
    PointEval(f64),
    /// `∫_0^1 v' g'` for a fixed field `g`.
    H1Inner(Field),
}

impl Functional {
    pub fn apply(&self, v: &Field) -> Result<f64> {
        Ok(match self {
            Functional::Mean => v.mesh().h() * v.values.iter().sum::<f64>(),
            Functional::PointEval(x) => v.eval(*x),
            Functional::H1Inner(g) => {
                let level = v.level.max(g.level);
                let (a, b) = (v.prolong(level)?, g.prolong(level)?);
                let h = a.mesh().h();
                let pad = |f: &Field| -> Vec<f64> {
                    std::iter::once(0.0).chain(f.values.iter().copied()).chain(std::iter::once(0.0)).collect()
                };
                let (pa, pb) = (pad(&a), pad(&b));
                pa.windows(2).zip(pb.windows(2)).map(|(x, y)| (x[1] - x[0]) * (y[1] - y[0])).sum::<f64>() / h
            }
        })
    }
}

/// `φ(Q_G u)`.
pub fn functional_quadrature(
    plan: &IndexPlan,
    family: NodeFamily,
    solver: &impl ParametricSolver,
    functional: &Functional,
) -> Result<f64> {
    functional.apply(&fully_discrete_quadrature(plan, family, solver)?)
}

/// `S_G u (y) = Σ_s c_s H_s(y)` with `c_s = Σ_{k : (k,s)∈G} δ_k(u_s)`
/// stored on the finest level.
#[derive(Clone, Debug)]
pub struct TruncatedExpansion {
    pub dims: usize,
    pub level: u32,
    pub coefficients: Vec<(MultiIndex, Field)>,
}

impl TruncatedExpansion {
    pub fn eval(&self, y: &[f64]) -> Result<Field> {
        if y.len() != self.dims {
            return Err(Error::LengthMismatch { expected: self.dims, got: y.len() });
        }
        let mut acc = Field::zeros(self.level)?;
        for (s, c) in &self.coefficients {
            let h: f64 = s.iter().map(|(d, v)| hermite_value(v as usize, y[d])).product();
            acc.axpy(h, c);
        }
        Ok(acc)
    }
}

/// Builds `S_G u` from Hermite coefficients computed with a tensor
/// Gauss–Hermite rule of level `order` in every dimension.
pub fn truncated_expansion(
    plan: &IndexPlan,
    solver: &impl ParametricSolver,
    order: usize,
) -> Result<TruncatedExpansion> {
    let dims = solver.dims();
    let top = plan.max_level().unwrap_or(0);
    let mut coefficients: BTreeMap<MultiIndex, Field> = BTreeMap::new();
    let levels: BTreeSet<u32> = plan.entries.iter().flat_map(|e| [e.k, e.k.saturating_sub(1)]).collect();
    let indices: Vec<MultiIndex> = plan.parametric_set().into_iter().collect();
    let mut per_level: BTreeMap<u32, Vec<Field>> = BTreeMap::new();
    for &k in &levels {
        let coeffs = hermite_coefficients(dims, order, &indices, |y| solver.solve(k, y))?;
        per_level.insert(k, coeffs);
    }
    for entry in &plan.entries {
        let i = indices.binary_search(&entry.s).expect("index drawn from the plan");
        let mut delta = per_level[&entry.k][i].clone();
        if entry.k > 0 {
            delta.axpy(-1.0, &per_level[&(entry.k - 1)][i].prolong(entry.k)?);
        }
        let delta = delta.prolong(top)?;
        coefficients
            .entry(entry.s.clone())
            .and_modify(|c| c.axpy(1.0, &delta))
            .or_insert(delta);
    }
    Ok(TruncatedExpansion { dims, level: top, coefficients: coefficients.into_iter().collect() })
}
