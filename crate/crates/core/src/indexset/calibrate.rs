use serde::{Deserialize, Serialize};

use super::{grid_of, IndexPlan};
use crate::error::{Error, Result};
use crate::nodes::NodeFamily;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostKind {
    /// `|G|`.
    Cardinality,
    /// `Σ_{(k,s)} 2^k`.
    DyadicDim,
    /// `|Γ(Λ_0)|`.
    GridPoints,
}

pub fn plan_cost(plan: &IndexPlan, cost: CostKind, family: NodeFamily) -> Result<u64> {
    Ok(match cost {
        CostKind::Cardinality => plan.len() as u64,
        CostKind::DyadicDim => plan.dyadic_dim(),
        CostKind::GridPoints => grid_of(&plan.parametric_set(), family)?.len() as u64,
    })
}

const BRACKET_STEPS: usize = 200;
const BISECTION_STEPS: usize = 60;

/// Largest threshold whose plan cost stays within `n`.
///
/// `build(ξ, cap)` constructs the plan; the cap lets cardinality-like costs
/// abort early, and a budget error from the builder counts as over budget.
pub fn calibrate_xi(
    n: u64,
    cost: CostKind,
    family: NodeFamily,
    build: impl Fn(f64, Option<usize>) -> Result<IndexPlan>,
) -> Result<(f64, IndexPlan)> {
    if n == 0 {
        return Err(Error::Parameter("budget must be at least 1".into()));
    }
    let cap = match cost {
        CostKind::Cardinality | CostKind::DyadicDim => Some(n as usize + 1),
        CostKind::GridPoints => None,
    };
    let fits = |xi: f64| -> Result<Option<IndexPlan>> {
        match build(xi, cap) {
            Ok(plan) => Ok((plan_cost(&plan, cost, family)? <= n).then_some(plan)),
            Err(Error::Budget(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let mut lo = 1.0;
    let mut best = fits(lo)?;
    let mut steps = 0;
    while best.is_none() {
        lo *= 0.5;
        steps += 1;
        if steps > BRACKET_STEPS {
            return Err(Error::Budget(format!("no threshold meets budget {n}")));
        }
        best = fits(lo)?;
    }
    let mut hi = lo * 2.0;
    steps = 0;
    loop {
        match fits(hi)? {
            Some(plan) => {
                lo = hi;
                best = Some(plan);
                hi *= 2.0;
            }
            None => break,
        }
        steps += 1;
        if steps > BRACKET_STEPS {
            return Err(Error::Budget(format!("plan cost never exceeds budget {n}")));
        }
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match fits(mid)? {
            Some(plan) => {
                lo = mid;
                best = Some(plan);
            }
            None => hi = mid,
        }
    }
    Ok((lo, best.expect("lower bracket always holds a fitting plan")))
}
