//! Invariant suite run by the `exactness` command and the `verify` profile.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::Result;
use crate::fem::{Field, SpatialHierarchy};
use crate::indexset::{
    build_g, build_lambda, binomial, sigma, vartheta, GSpec, MultiIndex, Parity, Regime, RhoSeq, WeightSpec,
};
use crate::nodes::{gauss_hermite_nodes, lebesgue_constant, NodeFamily};
use crate::oracle::{box_scan_indexset, box_scan_plan, tensor_quadrature};
use crate::orthopoly::hermite_value;
use crate::rules1d::{quad_weights, quadrature, UniRule};
use crate::nodes::Measure;
use crate::sparse::{sparse_interpolate, sparse_quadrature, tensor_delta_interp, tensor_delta_quad};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed discrepancy, or the error that stopped the check.
    pub detail: String,
}

fn tolerance_check(name: &'static str, worst: Result<f64>, tol: f64) -> Check {
    match worst {
        Ok(w) => Check { name, passed: w < tol, detail: format!("worst {w:.3e} (tolerance {tol:.0e})") },
        Err(e) => Check { name, passed: false, detail: e.to_string() },
    }
}

fn flag_check(name: &'static str, outcome: Result<Option<String>>) -> Check {
    match outcome {
        Ok(None) => Check { name, passed: true, detail: "ok".into() },
        Ok(Some(msg)) => Check { name, passed: false, detail: msg },
        Err(e) => Check { name, passed: false, detail: e.to_string() },
    }
}

fn gaussian_moment(p: usize) -> f64 {
    if p % 2 == 1 {
        0.0
    } else {
        (1..p).step_by(2).map(|j| j as f64).product()
    }
}

/// `E|y|^p`, the scale against which odd moments are compared.
fn gaussian_abs_moment(p: usize) -> f64 {
    let p = p as f64;
    2f64.powf(p / 2.0) * libm::tgamma((p + 1.0) / 2.0) / std::f64::consts::PI.sqrt()
}

fn hermite_moments() -> Result<f64> {
    let mut worst = 0.0f64;
    for m in 0..=20 {
        let rule = UniRule::new(gauss_hermite_nodes(m)?)?;
        for p in 0..=(2 * m + 1) {
            let vals: Vec<f64> = rule.points().iter().map(|y| y.powi(p as i32)).collect();
            let got = quadrature(&rule, &vals)?;
            worst = worst.max((got - gaussian_moment(p)).abs() / gaussian_abs_moment(p));
        }
    }
    Ok(worst)
}

fn hermite_weights() -> Result<f64> {
    let mut worst = 0.0f64;
    for m in 0..=20 {
        let nodes = gauss_hermite_nodes(m)?;
        let w = quad_weights(&nodes, Measure::Gaussian)?;
        for (k, &y) in nodes.points.iter().enumerate() {
            let h = hermite_value(m, y);
            worst = worst.max((w[k] - 1.0 / ((m + 1) as f64 * h * h)).abs());
        }
    }
    Ok(worst)
}

fn hermite2(s: &MultiIndex) -> impl Fn(&[f64]) -> f64 + '_ {
    move |y: &[f64]| hermite_value(s.get(0) as usize, y[0]) * hermite_value(s.get(1) as usize, y[1])
}

/// `Δ^I_s H_{s'} = 0` unless `s ≤ s'`, and `Δ^Q_{s'} H_s = 0` when `s` has
/// an odd component, over the box `{0..4}²`.
fn annihilation() -> Result<f64> {
    let cells = box_scan_indexset(&[4, 4], |_| true)?;
    let probes = [[0.3, -1.1], [1.7, 0.4], [-0.8, 2.2]];
    let mut worst = 0.0f64;
    for s in &cells {
        for t in &cells {
            let h = hermite2(t);
            if !s.le(t) {
                for y in &probes {
                    worst = worst.max(tensor_delta_interp(s, NodeFamily::GaussHermite, &h, y)?.abs());
                }
            }
            let hs = hermite2(s);
            if !s.is_even() {
                worst = worst.max(tensor_delta_quad(t, NodeFamily::GaussHermite, 2, &hs)?.abs());
            }
        }
    }
    Ok(worst)
}

/// On a full box the sparse operators are the tensor ones: quadrature
/// matches the tensor rule and interpolation reproduces tensor-degree
/// polynomials.
fn box_equals_tensor() -> Result<f64> {
    let set = box_scan_indexset(&[3, 3, 3], |_| true)?;
    let smooth = |y: &[f64]| (0.3 * y[0] - 0.2 * y[1] + 0.1 * y[2]).exp();
    let sparse = sparse_quadrature(&set, NodeFamily::GaussHermite, 3, smooth)?;
    let tensor = tensor_quadrature(3, 3, Measure::Gaussian, |y| Ok(smooth(y)))?;
    let mut worst = (sparse - tensor).abs();
    let cubic = |y: &[f64]| y[0].powi(3) * (y[1] * y[1] - 1.0) * y[2];
    for y in [[0.5, -0.25, 1.5], [-2.0, 1.0, 0.1]] {
        let got = sparse_interpolate(&set, NodeFamily::GaussHermite, cubic, &y)?;
        worst = worst.max((got - cubic(&y)).abs());
    }
    Ok(worst)
}

fn weight_specs() -> Result<Vec<(WeightSpec, WeightSpec)>> {
    Ok(vec![
        (
            WeightSpec::lognormal(RhoSeq::Power { c: 2.0, kappa: 1.5 }, 3, 1, 0.8)?,
            WeightSpec::lognormal(RhoSeq::Power { c: 1.5, kappa: 0.75 }, 3, 1, 1.6)?,
        ),
        (
            WeightSpec::lognormal(RhoSeq::Explicit { values: vec![1.5, 2.5] }, 2, 2, 0.5)?,
            WeightSpec::lognormal(RhoSeq::Explicit { values: vec![1.2, 1.8] }, 2, 2, 1.2)?,
        ),
    ])
}

/// Scan box covering `plan` with a margin of `MARGIN` in every dimension.
/// The weights increase in every component, so an empty margin rules out
/// members further out.
fn scan_bounds(entries: &[MultiIndex], dims: usize) -> Vec<u32> {
    let mut bounds = vec![MARGIN; dims];
    for s in entries {
        for (d, v) in s.iter() {
            bounds[d] = bounds[d].max(v + MARGIN);
        }
    }
    bounds
}

const MARGIN: u32 = 3;

/// `build_lambda` and `build_g` against exhaustive box scans, plus the
/// slice structure of every plan.
fn index_sets_match_scans() -> Result<Option<String>> {
    for (spec1, spec2) in weight_specs()? {
        let dims = spec1.dims;
        for parity in [Parity::All, Parity::Even] {
            for xi in [3.0, 12.0] {
                let plan = build_lambda(xi, &spec1, parity, None)?;
                let set: Vec<MultiIndex> = plan.parametric_set().into_iter().collect();
                let scanned = box_scan_indexset(&scan_bounds(&set, dims), |s| {
                    (parity == Parity::All || s.is_even()) && spec1.weight_value(s).powf(spec1.q) <= xi
                })?;
                if set.iter().cloned().collect::<BTreeSet<_>>() != scanned {
                    return Ok(Some(format!("build_lambda differs from scan at xi = {xi}, {parity:?}")));
                }
                for regime in [Regime::Expansion, Regime::Interpolation] {
                    for alpha in [0.3, 1.0] {
                        let g = GSpec { alpha, spec1: &spec1, spec2: &spec2, regime, parity };
                        let plan = build_g(xi, &g, None)?;
                        plan.check_structure()?;
                        let set: Vec<MultiIndex> = plan.parametric_set().into_iter().collect();
                        let k_max = plan.max_level().unwrap_or(0) + MARGIN;
                        let scanned = box_scan_plan(k_max, &scan_bounds(&set, dims), |k, s| {
                            (parity == Parity::All || s.is_even()) && g_predicate(&g, xi, k, s)
                        })?;
                        if plan.entries != scanned {
                            return Ok(Some(format!(
                                "build_g differs from scan at xi = {xi}, {regime:?}, {parity:?}, alpha = {alpha}"
                            )));
                        }
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Membership in `G(ξ)` straight from the defining inequalities.
pub fn g_predicate(g: &GSpec<'_>, xi: f64, k: u32, s: &MultiIndex) -> bool {
    let (q1, q2) = (g.spec1.q, g.spec2.q);
    let (s1, s2) = (g.spec1.weight_value(s), g.spec2.weight_value(s));
    let k = k as f64;
    let single = 2f64.powf(k) * s2.powf(q2) <= xi;
    match g.regime {
        Regime::Expansion if g.alpha <= 1.0 / q2 => single,
        Regime::Expansion => s1.powf(q1) <= xi && 2f64.powf(g.alpha * q1 * k) * s2.powf(q1) <= xi,
        Regime::Interpolation if g.alpha <= 1.0 / q2 - 0.5 => single,
        Regime::Interpolation => {
            s1.powf(q1) <= xi && 2f64.powf((g.alpha + 0.5) * k) * s2 <= xi.powf(vartheta(g.alpha, q1, q2))
        }
        Regime::Parametric => k == 0.0 && s1.powf(q1) <= xi,
    }
}

/// Product form of `σ_s` against `Σ_{ℓ ≤ s, ‖ℓ‖_∞ ≤ η} C(s,ℓ) ρ^{2ℓ}`.
fn sigma_literal() -> Result<f64> {
    let mut worst = 0.0f64;
    for eta in [1u32, 2, 6] {
        let spec = WeightSpec::lognormal(RhoSeq::Explicit { values: vec![1.3, 2.1, 3.7] }, 3, eta, 1.0)?;
        for s in box_scan_indexset(&[6, 6, 6], |_| true)? {
            let dense = s.to_dense(3);
            let ell_bounds: Vec<u32> = dense.iter().map(|&v| v.min(eta)).collect();
            let literal: f64 = box_scan_indexset(&ell_bounds, |_| true)?
                .iter()
                .map(|ell| {
                    (0..3)
                        .map(|j| binomial(dense[j], ell.get(j)) * spec.rho(j).powi(2 * ell.get(j) as i32))
                        .product::<f64>()
                })
                .sum();
            let got = sigma(&s, &spec)?;
            worst = worst.max((got - literal.sqrt()).abs() / literal.sqrt());
        }
    }
    Ok(worst)
}

fn lebesgue_origin() -> Result<Option<String>> {
    for family in [NodeFamily::GaussHermite, NodeFamily::Szabados] {
        let lambda0 = lebesgue_constant(&family.nodes(0)?);
        if lambda0 != 1.0 {
            return Ok(Some(format!("{} gives lambda_0 = {lambda0}", family.name())));
        }
    }
    Ok(None)
}

/// `log₂` slope of the `V`-error of `sin(πx)` over levels 3..10.
pub fn spatial_slope() -> Result<f64> {
    let hier = SpatialHierarchy::default();
    let pi = std::f64::consts::PI;
    let mut pts = Vec::new();
    for k in 3..=10 {
        let u: Field = hier.solve_with(k, |_| 1.0)?;
        pts.push((k as f64, u.error_v_analytic(|x| pi * (pi * x).cos())?.log2()));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Even-chain quadrature integrates the even Hermite products it contains.
fn even_quadrature_exactness() -> Result<f64> {
    let set: BTreeSet<MultiIndex> = box_scan_indexset(&[6, 6], |s| s.is_even() && s.order() <= 6)?;
    let mut worst = 0.0f64;
    for t in box_scan_indexset(&[6, 6], |s| s.order() <= 6)? {
        let h = hermite2(&t);
        let got = sparse_quadrature(&set, NodeFamily::GaussHermite, 2, &h)?;
        let exact = if t.is_zero() { 1.0 } else { 0.0 };
        worst = worst.max((got - exact).abs());
    }
    Ok(worst)
}

pub fn run_exactness() -> Vec<Check> {
    vec![
        tolerance_check("gauss-hermite-moments", hermite_moments(), 1e-10),
        tolerance_check("hermite-weights-closed-form", hermite_weights(), 1e-11),
        tolerance_check("annihilation", annihilation(), 1e-9),
        tolerance_check("box-equals-tensor", box_equals_tensor(), 1e-10),
        tolerance_check("even-quadrature-exactness", even_quadrature_exactness(), 1e-10),
        flag_check("index-sets-match-scans", index_sets_match_scans()),
        tolerance_check("sigma-product-form", sigma_literal(), 1e-12),
        flag_check("lebesgue-origin", lebesgue_origin()),
        tolerance_check("spatial-rate", spatial_slope().map(|s| (s + 1.0).abs()), 0.05),
    ]
}
