//! Brute-force references: full tensor Gauss rules, Hermite coefficients,
//! exhaustive index-set scans and Monte Carlo Bochner-norm estimates.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::{difference, Field};
use crate::indexset::{MultiIndex, PlanEntry};
use crate::nodes::Measure;
use crate::orthopoly::hermite_values;
use crate::rules1d::{reference_rule, Vector};

/// Largest number of points or box cells an oracle will enumerate.
pub const ORACLE_BUDGET: u64 = 10_000_000;

const BATCH: usize = 64;

/// Full tensor Gauss rule of level `order` (`order + 1` points) in every
/// dimension.
#[derive(Clone, Debug)]
pub struct TensorRule {
    pub dims: usize,
    pub order: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl TensorRule {
    pub fn new(dims: usize, order: usize, measure: Measure) -> Result<Self> {
        let n = order + 1;
        let total = (n as u64).checked_pow(dims as u32).filter(|t| *t <= ORACLE_BUDGET);
        let Some(total) = total else {
            return Err(Error::Budget(format!("tensor rule with {n}^{dims} points exceeds {ORACLE_BUDGET}")));
        };
        let (x, w) = reference_rule(measure, n)?;
        let mut points = Vec::with_capacity(total as usize);
        let mut weights = Vec::with_capacity(total as usize);
        let mut local = vec![0usize; dims];
        for _ in 0..total {
            points.push(local.iter().map(|&i| x[i]).collect());
            weights.push(local.iter().map(|&i| w[i]).product());
            for l in local.iter_mut() {
                *l += 1;
                if *l < n {
                    break;
                }
                *l = 0;
            }
        }
        Ok(Self { dims, order, points, weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `Σ_p w_p f(y_p)`, evaluated in parallel and reduced in point order.
    pub fn apply<V: Vector>(&self, f: impl Fn(&[f64]) -> Result<V> + Sync) -> Result<V> {
        let partials: Vec<Result<V>> = self
            .points
            .par_chunks(BATCH)
            .zip(self.weights.par_chunks(BATCH))
            .map(|(pts, ws)| {
                let mut acc: Option<V> = None;
                for (y, w) in pts.iter().zip(ws) {
                    let v = f(y)?;
                    match acc.as_mut() {
                        Some(a) => a.axpy(*w, &v),
                        None => {
                            let mut a = v.zeros_like();
                            a.axpy(*w, &v);
                            acc = Some(a);
                        }
                    }
                }
                Ok(acc.expect("batches are nonempty"))
            })
            .collect();
        let mut total: Option<V> = None;
        for p in partials {
            let p = p?;
            match total.as_mut() {
                Some(t) => t.axpy(1.0, &p),
                None => total = Some(p),
            }
        }
        total.ok_or_else(|| Error::Parameter("empty tensor rule".into()))
    }
}

/// `∫ f dμ^J` with the tensor rule of level `order`.
pub fn tensor_quadrature<V: Vector>(
    dims: usize,
    order: usize,
    measure: Measure,
    f: impl Fn(&[f64]) -> Result<V> + Sync,
) -> Result<V> {
    TensorRule::new(dims, order, measure)?.apply(f)
}

/// `v_s = ∫ v H_s dγ` for every `s` in `indices`, by the Gauss–Hermite
/// tensor rule of level `order`.
pub fn hermite_coefficients<V: Vector>(
    dims: usize,
    order: usize,
    indices: &[MultiIndex],
    f: impl Fn(&[f64]) -> Result<V> + Sync,
) -> Result<Vec<V>> {
    if let Some(s) = indices.iter().find(|s| s.dim_bound() > dims) {
        return Err(Error::Parameter(format!("index {s} exceeds {dims} dimensions")));
    }
    let rule = TensorRule::new(dims, order, Measure::Gaussian)?;
    let max_degree = indices.iter().map(MultiIndex::max_entry).max().unwrap_or(0) as usize;
    let partials: Vec<Result<Vec<V>>> = rule
        .points
        .par_chunks(BATCH)
        .zip(rule.weights.par_chunks(BATCH))
        .map(|(pts, ws)| {
            let mut acc: Option<Vec<V>> = None;
            for (y, w) in pts.iter().zip(ws) {
                let v = f(y)?;
                let table: Vec<Vec<f64>> = y.iter().map(|&yj| hermite_values(max_degree, yj)).collect();
                let acc = acc.get_or_insert_with(|| vec![v.zeros_like(); indices.len()]);
                for (a, s) in acc.iter_mut().zip(indices) {
                    let h: f64 = s.iter().map(|(d, deg)| table[d][deg as usize]).product();
                    a.axpy(w * h, &v);
                }
            }
            Ok(acc.expect("batches are nonempty"))
        })
        .collect();
    let mut total: Option<Vec<V>> = None;
    for p in partials {
        let p = p?;
        match total.as_mut() {
            Some(t) => t.iter_mut().zip(&p).for_each(|(a, b)| a.axpy(1.0, b)),
            None => total = Some(p),
        }
    }
    total.ok_or_else(|| Error::Parameter("empty tensor rule".into()))
}

/// Hermite coefficients on the box `{s : s_j ≤ max_degree}`.
pub fn hermite_coefficient_box<V: Vector>(
    dims: usize,
    max_degree: u32,
    order: usize,
    f: impl Fn(&[f64]) -> Result<V> + Sync,
) -> Result<Vec<(MultiIndex, V)>> {
    let bounds = vec![max_degree; dims];
    let indices: Vec<MultiIndex> = box_scan_indexset(&bounds, |_| true)?.into_iter().collect();
    let coeffs = hermite_coefficients(dims, order, &indices, f)?;
    Ok(indices.into_iter().zip(coeffs).collect())
}

/// Every `s ≤ bounds` (componentwise) satisfying `predicate`.
pub fn box_scan_indexset(bounds: &[u32], predicate: impl Fn(&MultiIndex) -> bool) -> Result<BTreeSet<MultiIndex>> {
    let volume = bounds
        .iter()
        .try_fold(1u64, |acc, &b| acc.checked_mul(b as u64 + 1))
        .filter(|v| *v <= ORACLE_BUDGET)
        .ok_or_else(|| Error::Budget(format!("box {bounds:?} exceeds {ORACLE_BUDGET} cells")))?;
    let mut out = BTreeSet::new();
    let mut v = vec![0u32; bounds.len()];
    for _ in 0..volume {
        let s = MultiIndex::from_dense(&v);
        if predicate(&s) {
            out.insert(s);
        }
        for (x, b) in v.iter_mut().zip(bounds) {
            *x += 1;
            if *x <= *b {
                break;
            }
            *x = 0;
        }
    }
    Ok(out)
}

/// Every `(k, s)` with `k ≤ k_max` and `s ≤ bounds` satisfying `predicate`.
pub fn box_scan_plan(
    k_max: u32,
    bounds: &[u32],
    predicate: impl Fn(u32, &MultiIndex) -> bool,
) -> Result<Vec<PlanEntry>> {
    let cells = box_scan_indexset(bounds, |_| true)?;
    if cells.len() as u64 * (k_max as u64 + 1) > ORACLE_BUDGET {
        return Err(Error::Budget(format!("scan of {} levels exceeds {ORACLE_BUDGET} cells", k_max + 1)));
    }
    let mut out = Vec::new();
    for k in 0..=k_max {
        for s in &cells {
            if predicate(k, s) {
                out.push(PlanEntry { k, s: s.clone() });
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Monte Carlo estimate of `E ‖approx(y) - reference(y)‖_V^p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    /// Sample mean of `‖·‖_V^p`.
    pub estimate: f64,
    /// Standard error of the sample mean.
    pub std_error: f64,
    /// `estimate^{1/p}`.
    pub norm: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Standard normal parameter vector for sample `index`; every sample has
/// its own ChaCha stream so the draws do not depend on scheduling.
pub fn gaussian_sample(seed: u64, index: u64, dims: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    (0..dims).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// `‖u - v‖_V` after embedding both fields on the finer level.
pub fn field_distance(u: &Field, v: &Field) -> Result<f64> {
    let level = u.level.max(v.level);
    Ok(difference(&u.prolong(level)?, &v.prolong(level)?).norm_v())
}

pub fn mc_bochner_error(
    approx: impl Fn(&[f64]) -> Result<Field> + Sync,
    reference: impl Fn(&[f64]) -> Result<Field> + Sync,
    dims: usize,
    p: u32,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if !(p == 1 || p == 2) {
        return Err(Error::Parameter(format!("p must be 1 or 2, got {p}")));
    }
    if samples < 2 {
        return Err(Error::Parameter("at least two samples are required".into()));
    }
    let values: Vec<Result<f64>> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let y = gaussian_sample(seed, i, dims);
            Ok(field_distance(&approx(&y)?, &reference(&y)?)?.powi(p as i32))
        })
        .collect();
    let values: Vec<f64> = values.into_iter().collect::<Result<_>>()?;
    let n = samples as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(McEstimate {
        estimate: mean,
        std_error: (var / n).sqrt(),
        norm: mean.powf(1.0 / p as f64),
        samples,
        seed,
    })
}
