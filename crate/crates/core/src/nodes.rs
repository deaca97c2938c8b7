//! Univariate interpolation node families `Y_m`.
//!
//! Every family produces, for each level `m`, a strictly increasing sequence of
//! `m + 1` points that is symmetric about the origin and has `y_{0;0} = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orthopoly::{
    hermite_roots, hermite_value, jacobi_roots, sqrt_gaussian_density,
    sqrt_gaussian_support_radius,
};

/// Number of evaluation points used by [`lebesgue_constant`].
pub const LEBESGUE_GRID: usize = 20_000;

/// Small positive slack added to nominal Lebesgue exponents.
pub const EPSILON_EXPONENT: f64 = 0.05;

/// Generator of node sequences.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NodeFamily {
    /// Roots of `H_{m+1}`.
    GaussHermite,
    /// Roots of `H_{m-1}` plus the two points `±ζ` where `|H_{m-1} √g|` peaks.
    Szabados,
    /// Roots of the degree-`(m+1)` Jacobi polynomial with parameters `(a, a)`.
    GaussJacobi { a: f64 },
}

/// Measure a node family integrates against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Measure {
    Gaussian,
    Jacobi { a: f64 },
}

/// Identity of a univariate node that is stable across levels.
///
/// Two `(level, index)` pairs that denote the same point by construction map
/// to the same id: the origin of every odd-length symmetric level, and the
/// Gauss–Hermite roots reused inside Szabados levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId {
    tag: u8,
    level: u16,
    index: u16,
}

impl NodeId {
    pub const ORIGIN: NodeId = NodeId {
        tag: 0,
        level: 0,
        index: 0,
    };

    pub fn is_origin(&self) -> bool {
        *self == Self::ORIGIN
    }
}

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.tag, self.level, self.index)
    }
}

fn symmetric_id(m: usize, k: usize) -> NodeId {
    if m % 2 == 0 && 2 * k == m {
        NodeId::ORIGIN
    } else {
        NodeId {
            tag: 0,
            level: m as u16,
            index: k as u16,
        }
    }
}

impl NodeFamily {
    pub fn name(&self) -> &'static str {
        match self {
            NodeFamily::GaussHermite => "gauss-hermite",
            NodeFamily::Szabados => "szabados",
            NodeFamily::GaussJacobi { .. } => "gauss-jacobi",
        }
    }

    /// Parses `gauss-hermite`, `szabados`, or `gauss-jacobi` (with `a`).
    pub fn parse(name: &str, a: f64) -> Result<Self> {
        match name {
            "gauss-hermite" | "hermite" => Ok(NodeFamily::GaussHermite),
            "szabados" => Ok(NodeFamily::Szabados),
            "gauss-jacobi" | "jacobi" => {
                if !(a > -1.0) {
                    return Err(Error::Parameter(format!("Jacobi parameter a = {a} must exceed -1")));
                }
                Ok(NodeFamily::GaussJacobi { a })
            }
            other => Err(Error::Config(format!("unknown node family '{other}'"))),
        }
    }

    pub fn measure(&self) -> Measure {
        match *self {
            NodeFamily::GaussJacobi { a } => Measure::Jacobi { a },
            _ => Measure::Gaussian,
        }
    }

    /// Nominal exponent `τ` of the Lebesgue bound `λ_m ≤ (Cm + 1)^τ`.
    pub fn lebesgue_exponent(&self) -> Option<f64> {
        match self {
            NodeFamily::GaussHermite => Some(1.0 / 6.0 + EPSILON_EXPONENT),
            NodeFamily::Szabados => Some(EPSILON_EXPONENT),
            NodeFamily::GaussJacobi { .. } => None,
        }
    }

    /// `θ = τ + ε + 5/4`, the exponent of `p_s(θ, λ)` in the interpolation
    /// summability hypotheses.
    pub fn theta(&self) -> Option<f64> {
        self.lebesgue_exponent().map(|tau| tau + EPSILON_EXPONENT + 1.25)
    }

    pub fn nodes(&self, m: usize) -> Result<NodeSequence> {
        match *self {
            NodeFamily::GaussHermite => gauss_hermite_nodes(m),
            NodeFamily::Szabados => szabados_nodes(m),
            NodeFamily::GaussJacobi { a } => gauss_jacobi_nodes(m, a),
        }
    }

    /// Canonical identity of point `k` of level `m`.
    pub fn node_id(&self, m: usize, k: usize) -> NodeId {
        match self {
            NodeFamily::GaussHermite | NodeFamily::GaussJacobi { .. } => symmetric_id(m, k),
            NodeFamily::Szabados => {
                if m <= 2 {
                    symmetric_id(m, k)
                } else if k == 0 || k == m {
                    NodeId {
                        tag: 1,
                        level: m as u16,
                        index: k as u16,
                    }
                } else {
                    symmetric_id(m - 2, k - 1)
                }
            }
        }
    }
}

/// Points `y_{m;0} < ... < y_{m;m}` of one level of a family.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeSequence {
    pub family: NodeFamily,
    pub level: usize,
    pub points: Vec<f64>,
}

impl NodeSequence {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Checks strict monotonicity and mirror symmetry `y_{m;m-k} = -y_{m;k}`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        if self.points.len() != self.level + 1 {
            return Err(Error::Ordering(format!(
                "level {} has {} points",
                self.level,
                self.points.len()
            )));
        }
        for w in self.points.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::Ordering(format!("points not increasing: {} >= {}", w[0], w[1])));
            }
        }
        let m = self.level;
        for k in 0..=m {
            if (self.points[m - k] + self.points[k]).abs() > tol {
                return Err(Error::Ordering(format!("asymmetric pair at k = {k}")));
            }
        }
        Ok(())
    }
}

pub fn gauss_hermite_nodes(m: usize) -> Result<NodeSequence> {
    Ok(NodeSequence {
        family: NodeFamily::GaussHermite,
        level: m,
        points: hermite_roots(m)?,
    })
}

/// Positive global maximizer of `|H_n(y) √g(y)|`.
///
/// The maximum sits beyond the largest root of `H_n`; it is bracketed by a
/// coarse scan of `[largest root, 2√n + 4]` and refined by golden-section
/// search.
pub fn hermite_function_peak(n: usize) -> Result<f64> {
    let objective = |y: f64| (hermite_value(n, y) * sqrt_gaussian_density(y)).abs();
    let lo = if n == 0 {
        0.0
    } else {
        *hermite_roots(n - 1)?.last().expect("n roots")
    };
    let hi = sqrt_gaussian_support_radius(n) + 4.0;
    let steps = 4000;
    let h = (hi - lo) / steps as f64;
    let mut best_i: usize = 0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=steps {
        let v = objective(lo + i as f64 * h);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let mut a = lo + (best_i.saturating_sub(1)) as f64 * h;
    let mut b = (lo + (best_i + 1) as f64 * h).min(hi);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = objective(c);
    let mut fd = objective(d);
    while b - a > 1e-10 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d);
        }
    }
    Ok(0.5 * (a + b))
}

/// Szabados' modification: `{-ζ} ∪ Y*_{m-2} ∪ {ζ}` for `m > 2`, with `ζ` the
/// peak of `|H_{m-1} √g|`; Gauss–Hermite for `m ≤ 2`.
pub fn szabados_nodes(m: usize) -> Result<NodeSequence> {
    if m <= 2 {
        let mut seq = gauss_hermite_nodes(m)?;
        seq.family = NodeFamily::Szabados;
        return Ok(seq);
    }
    let inner = hermite_roots(m - 2)?;
    let zeta = hermite_function_peak(m - 1)?;
    let last = *inner.last().expect("non-empty");
    if !(zeta > last) {
        return Err(Error::Ordering(format!(
            "added point {zeta} does not exceed largest root {last} at level {m}"
        )));
    }
    let mut points = Vec::with_capacity(m + 1);
    points.push(-zeta);
    points.extend_from_slice(&inner);
    points.push(zeta);
    Ok(NodeSequence {
        family: NodeFamily::Szabados,
        level: m,
        points,
    })
}

pub fn gauss_jacobi_nodes(m: usize, a: f64) -> Result<NodeSequence> {
    Ok(NodeSequence {
        family: NodeFamily::GaussJacobi { a },
        level: m,
        points: jacobi_roots(m + 1, a, a)?,
    })
}

/// Numerical Lebesgue constant in the weighted sup norm.
///
/// For Hermite-type families the weight is `√g` and the supremum is taken on
/// a uniform grid over `[-(r + 2), r + 2]`, `r = 2√(m+2)` the effective support
/// radius. For Jacobi families the weight is 1 on `[-1, 1]`. The nodes
/// themselves are always included among the evaluation points.
///
/// Each weighted cardinal function is evaluated as a product in log scale so
/// that it keeps full relative accuracy even where it is tiny and its weight
/// ratio is huge.
pub fn lebesgue_constant(nodes: &NodeSequence) -> f64 {
    let x = &nodes.points;
    let (lo, hi, weighted) = match nodes.family {
        NodeFamily::GaussJacobi { .. } => (-1.0, 1.0, false),
        _ => {
            let r = sqrt_gaussian_support_radius(nodes.level + 2) + 2.0;
            (-r, r, true)
        }
    };
    let log_weight = |y: f64| if weighted { -0.25 * y * y } else { 0.0 };
    // log|λ_k| - log w(x_k), with λ_k the barycentric weight
    let node_terms: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(k, &xk)| {
            let denom: f64 = x
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != k)
                .map(|(_, &xj)| (xk - xj).abs().ln())
                .sum();
            -denom - log_weight(xk)
        })
        .collect();
    let mut best: f64 = 0.0;
    let grid = (0..LEBESGUE_GRID).map(|i| lo + (hi - lo) * i as f64 / (LEBESGUE_GRID - 1) as f64);
    for y in grid.chain(x.iter().copied()) {
        let value = if x.contains(&y) {
            1.0
        } else {
            let log_node_poly: f64 = x.iter().map(|&xj| (y - xj).abs().ln()).sum();
            let base = log_node_poly + log_weight(y);
            x.iter()
                .zip(&node_terms)
                .map(|(&xk, t)| (base - (y - xk).abs().ln() + t).exp())
                .sum()
        };
        best = best.max(value);
    }
    best
}
