//! CSV and JSON tables for the `nodes`, `weights` and `indexset` commands.

use serde::Serialize;

use crate::error::Result;
use crate::indexset::{grid_of, IndexPlan, MultiIndex, WeightSpec};
use crate::nodes::NodeFamily;
use crate::rules1d::UniRule;

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

/// `k,point,weight` for the level-`m` rule of a family.
pub fn nodes_csv(family: NodeFamily, m: usize) -> Result<String> {
    let rule = UniRule::new(family.nodes(m)?)?;
    let mut out = String::from("k,point,weight\n");
    for (k, (y, w)) in rule.points().iter().zip(&rule.weights).enumerate() {
        out += &format!("{k},{},{}\n", fmt_f(*y), fmt_f(*w));
    }
    Ok(out)
}

/// `dim,n,rho,weight` with `weight` the weight of `n e_dim`, which is the
/// one-dimensional factor of the product weight.
pub fn weights_csv(spec: &WeightSpec, max_order: u32) -> Result<String> {
    let mut out = String::from("dim,n,rho,weight\n");
    for dim in 0..spec.dims {
        for n in 0..=max_order {
            let w = spec.weight(&MultiIndex::unit(dim, n))?;
            out += &format!("{},{n},{},{}\n", dim + 1, fmt_f(spec.rho(dim)), fmt_f(w));
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct PlanStats {
    cardinality: usize,
    dyadic_dim: u64,
    grid_points: usize,
    max_level: Option<u32>,
    parametric_cardinality: usize,
    visits: u64,
}

#[derive(Serialize)]
struct PlanReport<'a> {
    plan: &'a IndexPlan,
    stats: PlanStats,
}

/// The plan together with its sizes, as pretty-printed JSON.
pub fn plan_report_json(plan: &IndexPlan, family: NodeFamily) -> Result<String> {
    let parametric = plan.parametric_set();
    let stats = PlanStats {
        cardinality: plan.len(),
        dyadic_dim: plan.dyadic_dim(),
        grid_points: grid_of(&parametric, family)?.len(),
        max_level: plan.max_level(),
        parametric_cardinality: parametric.len(),
        visits: plan.visits,
    };
    Ok(serde_json::to_string_pretty(&PlanReport { plan, stats }).expect("report serialises"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indexset::{build_lambda, Parity, RhoSeq};

    #[test]
    fn hermite_level_two_table() {
        let csv = nodes_csv(NodeFamily::GaussHermite, 2).unwrap();
        let rows: Vec<Vec<f64>> = csv
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
            .collect();
        let r3 = 3f64.sqrt();
        let expect = [(-r3, 1.0 / 6.0), (0.0, 2.0 / 3.0), (r3, 1.0 / 6.0)];
        for (row, (y, w)) in rows.iter().zip(expect) {
            assert!((row[1] - y).abs() < 1e-14 && (row[2] - w).abs() < 1e-14, "{row:?}");
        }
    }

    #[test]
    fn weight_table_starts_at_one() {
        let spec = WeightSpec::lognormal(RhoSeq::Power { c: 2.0, kappa: 1.0 }, 2, 1, 1.0).unwrap();
        let csv = weights_csv(&spec, 3).unwrap();
        assert_eq!(csv.lines().count(), 1 + 2 * 4);
        let first: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(first[3].parse::<f64>().unwrap(), 1.0);
    }

    #[test]
    fn plan_report_round_trips() {
        let spec = WeightSpec::lognormal(RhoSeq::Power { c: 2.0, kappa: 1.0 }, 3, 1, 1.0).unwrap();
        let plan = build_lambda(10.0, &spec, Parity::All, None).unwrap();
        let json = plan_report_json(&plan, NodeFamily::GaussHermite).unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        let back = IndexPlan::from_json(&value["plan"].to_string()).unwrap();
        assert_eq!(back.entries, plan.entries);
        assert_eq!(value["stats"]["cardinality"], plan.len());
    }
}
