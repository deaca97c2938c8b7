use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{MultiIndex, WeightSpec};
use crate::error::{Error, Result};

/// Default hard cap on plan entries.
pub const DEFAULT_CAP: usize = 10_000_000;

/// Largest spatial level the builder will consider for a single index.
const LEVEL_GUARD: u32 = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Level/parameter set for truncated Hermite expansions.
    Expansion,
    /// Level/parameter set for interpolation and quadrature.
    Interpolation,
    /// Purely parametric set `Λ(ξ)` (every entry at level 0).
    Parametric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parity {
    All,
    Even,
}

impl Parity {
    pub fn step(self) -> u32 {
        match self {
            Parity::All => 1,
            Parity::Even => 2,
        }
    }
}

/// Finite set of `(level, multi-index)` pairs, sorted by level then index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexPlan {
    pub regime: Regime,
    pub parity: Parity,
    pub xi: f64,
    pub entries: Vec<PlanEntry>,
    /// Weight-predicate evaluations spent building the plan.
    #[serde(skip)]
    pub visits: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PlanEntry {
    pub k: u32,
    pub s: MultiIndex,
}

impl IndexPlan {
    pub fn new(regime: Regime, parity: Parity, xi: f64, mut entries: Vec<PlanEntry>) -> Self {
        entries.sort();
        entries.dedup();
        Self {
            regime,
            parity,
            xi,
            entries,
            visits: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_level(&self) -> Option<u32> {
        self.entries.last().map(|e| e.k)
    }

    /// `Λ_k = {s : (k, s) ∈ G}`.
    pub fn slice(&self, k: u32) -> BTreeSet<MultiIndex> {
        self.entries.iter().filter(|e| e.k == k).map(|e| e.s.clone()).collect()
    }

    /// Slices `Λ_0, …, Λ_K` indexed by level.
    pub fn slices(&self) -> Vec<BTreeSet<MultiIndex>> {
        let top = self.max_level().map_or(0, |k| k as usize + 1);
        let mut out = vec![BTreeSet::new(); top];
        for e in &self.entries {
            out[e.k as usize].insert(e.s.clone());
        }
        out
    }

    /// All multi-indices appearing at any level.
    pub fn parametric_set(&self) -> BTreeSet<MultiIndex> {
        self.entries.iter().map(|e| e.s.clone()).collect()
    }

    /// `Σ_{(k,s)} 2^k`.
    pub fn dyadic_dim(&self) -> u64 {
        self.entries.iter().map(|e| 1u64 << e.k.min(63)).sum()
    }

    pub fn contains(&self, k: u32, s: &MultiIndex) -> bool {
        self.entries
            .binary_search(&PlanEntry { k, s: s.clone() })
            .is_ok()
    }

    /// Every slice downward closed (with step 2 for even plans) and slices
    /// nested decreasingly in `k`.
    pub fn check_structure(&self) -> Result<()> {
        let slices = self.slices();
        for (k, slice) in slices.iter().enumerate() {
            check_downward_closed(slice, self.parity.step())
                .map_err(|e| Error::Closure(format!("slice {k}: {e}")))?;
            if self.parity == Parity::Even {
                if let Some(s) = slice.iter().find(|s| !s.is_even()) {
                    return Err(Error::Closure(format!("slice {k} holds non-even index {s}")));
                }
            }
        }
        for k in 1..slices.len() {
            if let Some(s) = slices[k].iter().find(|s| !slices[k - 1].contains(*s)) {
                return Err(Error::Closure(format!(
                    "slice {k} is not contained in slice {}: {s}",
                    k - 1
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid plan JSON: {e}")))
    }
}

/// Checks that `s - step·e_j ∈ set` for every `s` and every `j` with `s_j ≥ step`.
/// With `step = 2` a component equal to 1 is reported, since such an index
/// has no predecessor in the even lattice.
pub fn check_downward_closed(set: &BTreeSet<MultiIndex>, step: u32) -> Result<()> {
    for s in set {
        for (d, v) in s.iter() {
            match s.decremented(d, step) {
                Some(p) if set.contains(&p) => {}
                Some(p) => {
                    return Err(Error::Closure(format!("{s} present but {p} missing")));
                }
                None => {
                    return Err(Error::Closure(format!(
                        "{s} has component {v} not reachable with step {step}"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Which of the two defining inequalities applies, decided by `α` against
/// `1/q₂` (expansion) or `1/q₂ - 1/2` (interpolation).
#[derive(Clone, Copy, Debug, PartialEq)]
enum Rule {
    /// `2^k σ₂^{q₂} ≤ ξ`.
    Single { q2: f64 },
    /// `σ₁^{q₁} ≤ ξ` and `2^{α q₁ k} σ₂^{q₁} ≤ ξ`.
    ExpansionPair { q1: f64, alpha: f64 },
    /// `σ₁^{q₁} ≤ ξ` and `2^{(α+1/2) k} σ₂ ≤ ξ^ϑ`.
    InterpolationPair { q1: f64, alpha: f64, vartheta: f64 },
}

impl Rule {
    fn pick(regime: Regime, alpha: f64, q1: f64, q2: f64) -> Result<Self> {
        match regime {
            Regime::Expansion if alpha <= 1.0 / q2 => Ok(Rule::Single { q2 }),
            Regime::Expansion => Ok(Rule::ExpansionPair { q1, alpha }),
            Regime::Interpolation if alpha <= 1.0 / q2 - 0.5 => Ok(Rule::Single { q2 }),
            Regime::Interpolation => Ok(Rule::InterpolationPair {
                q1,
                alpha,
                vartheta: vartheta(alpha, q1, q2),
            }),
            Regime::Parametric => Err(Error::Usage("use build_lambda for parametric plans".into())),
        }
    }

    fn base_ok(&self, xi: f64, sigma1: f64) -> bool {
        match *self {
            Rule::Single { .. } => true,
            Rule::ExpansionPair { q1, .. } | Rule::InterpolationPair { q1, .. } => sigma1.powf(q1) <= xi,
        }
    }

    fn level_ok(&self, xi: f64, k: u32, sigma2: f64) -> bool {
        let k = k as f64;
        match *self {
            Rule::Single { q2 } => 2f64.powf(k) * sigma2.powf(q2) <= xi,
            Rule::ExpansionPair { q1, alpha } => 2f64.powf(alpha * q1 * k) * sigma2.powf(q1) <= xi,
            Rule::InterpolationPair { alpha, vartheta, .. } => {
                2f64.powf((alpha + 0.5) * k) * sigma2 <= xi.powf(vartheta)
            }
        }
    }
}

/// `ϑ = 1/q₁ + (1/q₁ - 1/q₂)/(2α)`.
pub fn vartheta(alpha: f64, q1: f64, q2: f64) -> f64 {
    1.0 / q1 + (1.0 / q1 - 1.0 / q2) / (2.0 * alpha)
}

/// Parameters of a level/parameter plan `G(ξ)`.
#[derive(Clone, Debug)]
pub struct GSpec<'a> {
    pub alpha: f64,
    pub spec1: &'a WeightSpec,
    pub spec2: &'a WeightSpec,
    pub regime: Regime,
    pub parity: Parity,
}

/// Walks a downward closed set (in steps of `step`) in the order of
/// Algorithm 1: dimension 1 runs fastest; when `s + step·e_d` is rejected
/// the odometer resets `s_d` and carries into the next dimension, skipping
/// straight to the first nonzero dimension when `s_d` is already 0. The skip
/// relies on nondecreasing ρ.
fn odometer(
    step: u32,
    dims: usize,
    mut admit: impl FnMut(&MultiIndex) -> bool,
    mut visit: impl FnMut(&MultiIndex) -> Result<()>,
) -> Result<()> {
    let mut s = MultiIndex::zero();
    if !admit(&s) {
        return Ok(());
    }
    visit(&s)?;
    loop {
        let mut d = 0usize;
        loop {
            if d < dims && admit(&s.incremented(d, step)) {
                break;
            }
            if s.get(d) != 0 {
                s.set(d, 0);
                d += 1;
            } else if let Some(first) = s.min_dim() {
                if first == d {
                    unreachable!("s_d is nonzero at the first nonzero dimension");
                }
                d = first;
            } else {
                return Ok(());
            }
        }
        s = s.incremented(d, step);
        visit(&s)?;
    }
}

/// Builds `G(ξ)` (or `G_ev(ξ)` for even parity) by the Algorithm-1 walk.
pub fn build_g(xi: f64, g: &GSpec<'_>, cap: Option<usize>) -> Result<IndexPlan> {
    if !(xi > 0.0) {
        return Err(Error::Parameter(format!("threshold must be positive, got {xi}")));
    }
    if !(g.alpha > 0.0) {
        return Err(Error::Parameter(format!("spatial rate must be positive, got {}", g.alpha)));
    }
    let (q1, q2) = (g.spec1.q, g.spec2.q);
    if q1 > q2 {
        return Err(Error::Parameter(format!("need q1 <= q2, got {q1} > {q2}")));
    }
    let rule = Rule::pick(g.regime, g.alpha, q1, q2)?;
    let cap = cap.unwrap_or(DEFAULT_CAP);
    let dims = g.spec1.dims.max(g.spec2.dims);
    let visits = std::cell::Cell::new(0u64);
    let mut entries = Vec::new();
    odometer(
        g.parity.step(),
        dims,
        |s| {
            visits.set(visits.get() + 1);
            let sigma2 = g.spec2.weight_value(s);
            let sigma1 = match rule {
                Rule::Single { .. } => 1.0,
                _ => g.spec1.weight_value(s),
            };
            sigma1.is_finite() && sigma2.is_finite() && rule.base_ok(xi, sigma1) && rule.level_ok(xi, 0, sigma2)
        },
        |s| {
            let sigma2 = g.spec2.weight_value(s);
            let mut k = 0;
            while k <= LEVEL_GUARD && rule.level_ok(xi, k, sigma2) {
                visits.set(visits.get() + 1);
                entries.push(PlanEntry { k, s: s.clone() });
                if entries.len() > cap {
                    return Err(Error::Budget(format!("plan exceeds {cap} entries at xi = {xi}")));
                }
                k += 1;
            }
            Ok(())
        },
    )?;
    let visits = visits.get();
    let mut plan = IndexPlan::new(g.regime, g.parity, xi, entries);
    plan.visits = visits;
    Ok(plan)
}

/// `Λ(ξ) = {s : w_s^q ≤ ξ}` (or its even part), with `w` the weight of `spec`.
pub fn build_lambda(xi: f64, spec: &WeightSpec, parity: Parity, cap: Option<usize>) -> Result<IndexPlan> {
    if !(xi > 0.0) {
        return Err(Error::Parameter(format!("threshold must be positive, got {xi}")));
    }
    let cap = cap.unwrap_or(DEFAULT_CAP);
    let mut entries = Vec::new();
    let mut visits = 0u64;
    odometer(
        parity.step(),
        spec.dims,
        |s| {
            visits += 1;
            let w = spec.weight_value(s);
            w.is_finite() && w.powf(spec.q) <= xi
        },
        |s| {
            entries.push(PlanEntry { k: 0, s: s.clone() });
            if entries.len() > cap {
                return Err(Error::Budget(format!("plan exceeds {cap} entries at xi = {xi}")));
            }
            Ok(())
        },
    )?;
    let mut plan = IndexPlan::new(Regime::Parametric, parity, xi, entries);
    plan.visits = visits;
    Ok(plan)
}

/// Keeps the entries whose multi-index has only even components.
pub fn restrict_even(plan: &IndexPlan) -> IndexPlan {
    let entries = plan.entries.iter().filter(|e| e.s.is_even()).cloned().collect();
    let mut out = IndexPlan::new(plan.regime, Parity::Even, plan.xi, entries);
    out.visits = plan.visits;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indexset::{RhoSeq, WeightSpec};

    fn spec(values: &[f64], eta: u32, q: f64) -> WeightSpec {
        WeightSpec::lognormal(RhoSeq::Explicit { values: values.to_vec() }, values.len(), eta, q).unwrap()
    }

    /// Box scan applying the expansion-regime pair inequalities directly.
    fn scan_expansion_pair(xi: f64, alpha: f64, s1: &WeightSpec, s2: &WeightSpec, smax: u32, kmax: u32) -> Vec<PlanEntry> {
        let mut out = Vec::new();
        for k in 0..=kmax {
            for v in 0..=smax {
                let s = MultiIndex::unit(0, v);
                let a = s1.weight_value(&s).powf(s1.q) <= xi;
                let b = 2f64.powf(alpha * s1.q * k as f64) * s2.weight_value(&s).powf(s1.q) <= xi;
                if a && b {
                    out.push(PlanEntry { k, s });
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn single_dimension_expansion_matches_scan() {
        let s1 = spec(&[2.0], 1, 1.0);
        let s2 = spec(&[2.0], 1, 1.0);
        let g = GSpec { alpha: 1.0, spec1: &s1, spec2: &s2, regime: Regime::Expansion, parity: Parity::All };
        let plan = build_g(10.0, &g, None).unwrap();
        assert_eq!(plan.entries, scan_expansion_pair(10.0, 1.0, &s1, &s2, 60, 10));
        plan.check_structure().unwrap();
    }

    #[test]
    fn small_threshold() {
        let s1 = spec(&[2.0], 1, 1.0);
        let g = GSpec { alpha: 1.0, spec1: &s1, spec2: &s1, regime: Regime::Expansion, parity: Parity::All };
        let plan = build_g(0.5, &g, None).unwrap();
        assert!(plan.is_empty());
        let plan = build_g(1.0, &g, None).unwrap();
        assert_eq!(plan.entries, vec![PlanEntry { k: 0, s: MultiIndex::zero() }]);
    }

    #[test]
    fn lambda_unit_threshold() {
        let s = spec(&[2.0, 3.0], 2, 1.0);
        let plan = build_lambda(1.0, &s, Parity::All, None).unwrap();
        assert_eq!(plan.parametric_set().into_iter().collect::<Vec<_>>(), vec![MultiIndex::zero()]);
    }

    #[test]
    fn even_walk_equals_filtered_walk() {
        let s1 = spec(&[1.5, 2.0, 2.5], 3, 0.5);
        let s2 = spec(&[1.5, 2.0, 2.5], 3, 1.0);
        for regime in [Regime::Expansion, Regime::Interpolation] {
            let all = GSpec { alpha: 1.0, spec1: &s1, spec2: &s2, regime, parity: Parity::All };
            let even = GSpec { parity: Parity::Even, ..all.clone() };
            let a = build_g(500.0, &all, None).unwrap();
            let e = build_g(500.0, &even, None).unwrap();
            assert_eq!(restrict_even(&a).entries, e.entries);
            e.check_structure().unwrap();
            assert!(e.len() < a.len());
        }
    }

    #[test]
    fn restrict_even_on_origin_plan() {
        let p = IndexPlan::new(Regime::Parametric, Parity::All, 1.0, vec![PlanEntry { k: 0, s: MultiIndex::zero() }]);
        assert_eq!(restrict_even(&p).entries, p.entries);
    }

    #[test]
    fn budget_cap() {
        let s = spec(&[1.5, 2.0], 2, 1.0);
        assert!(matches!(build_lambda(1e6, &s, Parity::All, Some(10)), Err(Error::Budget(_))));
    }

    #[test]
    fn closure_check_detects_gap() {
        let set: BTreeSet<_> = [MultiIndex::zero(), MultiIndex::unit(0, 2)].into_iter().collect();
        assert!(check_downward_closed(&set, 1).is_err());
        assert!(check_downward_closed(&set, 2).is_ok());
    }

    #[test]
    fn json_shape() {
        let s = spec(&[2.0, 3.0], 1, 1.0);
        let plan = build_lambda(20.0, &s, Parity::All, None).unwrap();
        let text = plan.to_json();
        assert!(text.contains("\"regime\": \"parametric\""));
        assert!(text.contains("\"parity\": \"all\""));
        let back = IndexPlan::from_json(&text).unwrap();
        assert_eq!(back.entries, plan.entries);
    }

    #[test]
    fn visits_grow_like_xi_log_xi() {
        let s = WeightSpec::lognormal(RhoSeq::Power { c: 1.5, kappa: 1.5 }, 64, 2, 1.0).unwrap();
        let g = GSpec { alpha: 1.0, spec1: &s, spec2: &s, regime: Regime::Expansion, parity: Parity::All };
        let ratio: Vec<f64> = [1e2, 1e3, 1e4]
            .iter()
            .map(|&xi| build_g(xi, &g, None).unwrap().visits as f64 / (xi * f64::log2(xi)))
            .collect();
        assert!(ratio[2] <= 2.0 * ratio[0], "{ratio:?}");
    }
}
