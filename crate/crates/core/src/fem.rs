//! Piecewise-linear finite elements on `(0,1)` for `-(a u')' = f` with
//! homogeneous Dirichlet data, on a nested dyadic mesh hierarchy.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orthopoly::gauss_jacobi_rule;
use crate::rules1d::Vector;

/// Relative backward-error tolerance of the tridiagonal solve.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Finest level accepted by the solver.
pub const MAX_LEVEL: u32 = 24;

const GAUSS2: f64 = 0.577_350_269_189_625_8;

/// Uniform mesh of level `k`: spacing `h = 2^{-(k+1)}` and `2^{k+1} - 1`
/// interior nodes `x_i = (i+1) h`, so every level refines the previous one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mesh {
    level: u32,
}

impl Mesh {
    pub fn new(level: u32) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::Parameter(format!("mesh level {level} exceeds {MAX_LEVEL}")));
        }
        Ok(Self { level })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn elements(&self) -> usize {
        1usize << (self.level + 1)
    }

    pub fn interior(&self) -> usize {
        self.elements() - 1
    }

    pub fn h(&self) -> f64 {
        1.0 / self.elements() as f64
    }

    /// Coordinate of interior node `i` (0-based).
    pub fn node(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.interior()).map(|i| self.node(i)).collect()
    }

    /// Two Gauss–Legendre points per element, element by element.
    pub fn sample_points(&self) -> Vec<f64> {
        let h = self.h();
        (0..self.elements())
            .flat_map(|e| {
                let mid = (e as f64 + 0.5) * h;
                [mid - 0.5 * h * GAUSS2, mid + 0.5 * h * GAUSS2]
            })
            .collect()
    }
}

/// Nodal coefficients of a piecewise-linear function vanishing at 0 and 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub level: u32,
    pub values: Vec<f64>,
}

impl Field {
    pub fn zeros(level: u32) -> Result<Self> {
        let mesh = Mesh::new(level)?;
        Ok(Self { level, values: vec![0.0; mesh.interior()] })
    }

    /// Nodal interpolant of `u` at level `level`.
    pub fn interpolant(level: u32, u: impl Fn(f64) -> f64) -> Result<Self> {
        let mesh = Mesh::new(level)?;
        Ok(Self { level, values: mesh.nodes().into_iter().map(u).collect() })
    }

    pub fn mesh(&self) -> Mesh {
        Mesh { level: self.level }
    }

    /// Values including the two boundary zeros.
    fn padded(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(0.0).chain(self.values.iter().copied()).chain(std::iter::once(0.0))
    }

    /// `|v|_{H^1}` computed exactly from the element slopes.
    pub fn norm_v(&self) -> f64 {
        let h = self.mesh().h();
        let padded: Vec<f64> = self.padded().collect();
        let sum: f64 = padded.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
        (sum / h).sqrt()
    }

    /// A piecewise-linear field has no square-integrable Laplacian.
    pub fn norm_w(&self) -> Result<f64> {
        Err(Error::Usage(
            "the W-norm is defined only for analytic references, not for finite element fields".into(),
        ))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Value of the piecewise-linear function at `x ∈ [0,1]`.
    pub fn eval(&self, x: f64) -> f64 {
        let mesh = self.mesh();
        let t = (x.clamp(0.0, 1.0) / mesh.h()).min(mesh.elements() as f64);
        let e = (t.floor() as usize).min(mesh.elements() - 1);
        let r = t - e as f64;
        let at = |j: usize| if j == 0 || j == mesh.elements() { 0.0 } else { self.values[j - 1] };
        (1.0 - r) * at(e) + r * at(e + 1)
    }

    /// Nodal embedding into level `level ≥ self.level`.
    pub fn prolong(&self, level: u32) -> Result<Field> {
        if level < self.level {
            return Err(Error::Parameter(format!(
                "cannot prolong from level {} to coarser level {level}",
                self.level
            )));
        }
        let mut out = self.clone();
        while out.level < level {
            out = out.prolong_once();
        }
        Ok(out)
    }

    fn prolong_once(&self) -> Field {
        let coarse: Vec<f64> = self.padded().collect();
        let mut values = Vec::with_capacity(2 * self.values.len() + 1);
        for w in coarse.windows(2) {
            values.push(0.5 * (w[0] + w[1]));
            values.push(w[1]);
        }
        // drop the right boundary zero
        values.pop();
        Field { level: self.level + 1, values }
    }

    /// `|u - v|_{H^1}` for an analytic `u` given by its derivative,
    /// integrated with four Gauss points per element.
    pub fn error_v_analytic(&self, du: impl Fn(f64) -> f64) -> Result<f64> {
        let (gx, gw) = gauss_jacobi_rule(4, 0.0, 0.0)?;
        let mesh = self.mesh();
        let h = mesh.h();
        let padded: Vec<f64> = self.padded().collect();
        let mut sum = 0.0;
        for (e, w) in padded.windows(2).enumerate() {
            let slope = (w[1] - w[0]) / h;
            let mid = (e as f64 + 0.5) * h;
            for (x, wt) in gx.iter().zip(&gw) {
                sum += wt * h * (du(mid + 0.5 * h * x) - slope).powi(2);
            }
        }
        Ok(sum.sqrt())
    }

    /// Writes `x,value` rows including both boundary nodes.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        let h = self.mesh().h();
        writeln!(out, "x,value")?;
        for (i, v) in self.padded().enumerate() {
            writeln!(out, "{:.16e},{:.16e}", i as f64 * h, v)?;
        }
        Ok(())
    }
}

impl Vector for Field {
    fn zeros_like(&self) -> Self {
        Field { level: self.level, values: vec![0.0; self.values.len()] }
    }

    fn axpy(&mut self, alpha: f64, x: &Self) {
        assert_eq!(self.level, x.level, "field level mismatch");
        for (a, b) in self.values.iter_mut().zip(&x.values) {
            *a += alpha * b;
        }
    }
}

/// `∫_0^1 g` with `n` Gauss points on each of `cells` equal cells.
pub fn integrate(g: impl Fn(f64) -> f64, cells: usize, n: usize) -> Result<f64> {
    let (gx, gw) = gauss_jacobi_rule(n, 0.0, 0.0)?;
    let h = 1.0 / cells as f64;
    let mut sum = 0.0;
    for c in 0..cells {
        let mid = (c as f64 + 0.5) * h;
        for (x, w) in gx.iter().zip(&gw) {
            sum += w * h * g(mid + 0.5 * h * x);
        }
    }
    Ok(sum)
}

const ANALYTIC_CELLS: usize = 256;

/// `|u|_{H^1}` of an analytic `u` given by its derivative.
pub fn norm_v_analytic(du: impl Fn(f64) -> f64) -> Result<f64> {
    Ok(integrate(|x| du(x).powi(2), ANALYTIC_CELLS, 8)?.sqrt())
}

/// `‖Δu‖_{L²}` of an analytic `u` given by its second derivative.
pub fn norm_w_analytic(d2u: impl Fn(f64) -> f64) -> Result<f64> {
    Ok(integrate(|x| d2u(x).powi(2), ANALYTIC_CELLS, 8)?.sqrt())
}

/// Right-hand side of the boundary value problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Source {
    /// `f = π² sin(πx)`, so that `-w'' = f` has `w = sin(πx)`.
    Sine,
    /// `f ≡ value`.
    Constant { value: f64 },
}

impl Default for Source {
    fn default() -> Self {
        Source::Sine
    }
}

impl Source {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Source::Sine => PI * PI * (PI * x).sin(),
            Source::Constant { value } => value,
        }
    }
}

/// Galerkin solves of `-(a u')' = f` on the dyadic mesh hierarchy.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SpatialHierarchy {
    pub source: Source,
}

impl SpatialHierarchy {
    pub fn new(source: Source) -> Self {
        Self { source }
    }

    /// Solves at level `k` with `a` sampled at [`Mesh::sample_points`].
    pub fn solve(&self, k: u32, a: &[f64]) -> Result<Field> {
        let mesh = Mesh::new(k)?;
        let n = mesh.interior();
        let h = mesh.h();
        if a.len() != 2 * mesh.elements() {
            return Err(Error::LengthMismatch { expected: 2 * mesh.elements(), got: a.len() });
        }
        if let Some((i, v)) = a.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::NonCoercive(format!(
                "coefficient {v} at sample {i} of level {k} is not positive"
            )));
        }
        // element stiffness (1/h²)∫_e a = (a(g1) + a(g2)) / (2h)
        let stiff: Vec<f64> = a.chunks(2).map(|g| 0.5 * (g[0] + g[1]) / h).collect();
        let samples = mesh.sample_points();
        // ∫ f φ_i over the two elements adjacent to node i, two Gauss points each
        let mut load = vec![0.0; n];
        for (e, pts) in samples.chunks(2).enumerate() {
            let left = e as f64 * h;
            for &x in pts {
                let fx = 0.5 * h * self.source.eval(x);
                let r = (x - left) / h;
                if e > 0 {
                    load[e - 1] += fx * (1.0 - r);
                }
                if e < n {
                    load[e] += fx * r;
                }
            }
        }
        let diag: Vec<f64> = (0..n).map(|i| stiff[i] + stiff[i + 1]).collect();
        let off: Vec<f64> = (1..n).map(|i| -stiff[i]).collect();
        let u = thomas(&off, &diag, &off, &load);
        check_residual(k, &off, &diag, &u, &load)?;
        Ok(Field { level: k, values: u })
    }

    /// Solves at level `k` with a coefficient given as a function of `x`.
    pub fn solve_with(&self, k: u32, a: impl Fn(f64) -> f64) -> Result<Field> {
        let samples: Vec<f64> = Mesh::new(k)?.sample_points().into_iter().map(a).collect();
        self.solve(k, &samples)
    }

    /// `δ_k = u_k - u_{k-1}` (on level `k`), with `δ_0 = u_0`.
    pub fn delta_level(&self, k: u32, a: impl Fn(f64) -> f64) -> Result<Field> {
        let fine = self.solve_with(k, &a)?;
        if k == 0 {
            return Ok(fine);
        }
        let coarse = self.solve_with(k - 1, &a)?.prolong(k)?;
        Ok(difference(&fine, &coarse))
    }
}

/// `a - b` for fields on the same level.
pub fn difference(a: &Field, b: &Field) -> Field {
    let mut out = a.clone();
    out.axpy(-1.0, b);
    out
}

/// Thomas algorithm for a tridiagonal system with sub-, main and
/// super-diagonals `lower`, `diag`, `upper`.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if n > 1 {
        c[0] = upper[0] / denom;
    }
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - lower[i - 1] * c[i - 1];
        if i < n - 1 {
            c[i] = upper[i] / denom;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    d
}

/// Normwise backward-error check `‖Au - b‖ ≤ tol (‖A‖‖u‖ + ‖b‖)` in the
/// max norm.
fn check_residual(level: u32, off: &[f64], diag: &[f64], u: &[f64], b: &[f64]) -> Result<()> {
    let n = diag.len();
    let mut res: f64 = 0.0;
    let mut a_norm: f64 = 0.0;
    for i in 0..n {
        let mut row = diag[i] * u[i];
        let mut abs_row = diag[i].abs();
        if i > 0 {
            row += off[i - 1] * u[i - 1];
            abs_row += off[i - 1].abs();
        }
        if i + 1 < n {
            row += off[i] * u[i + 1];
            abs_row += off[i].abs();
        }
        res = res.max((row - b[i]).abs());
        a_norm = a_norm.max(abs_row);
    }
    let u_norm = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let b_norm = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let bound = RESIDUAL_TOL * (a_norm * u_norm + b_norm);
    if !(res <= bound) {
        return Err(Error::Solver {
            level,
            point: String::new(),
            reason: format!("residual {res:e} exceeds {bound:e}"),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn poisson() -> SpatialHierarchy {
        SpatialHierarchy::new(Source::Sine)
    }

    fn sine_slope(x: f64) -> f64 {
        PI * (PI * x).cos()
    }

    #[test]
    fn mesh_is_nested() {
        for k in 0..8 {
            let coarse = Mesh::new(k).unwrap();
            let fine = Mesh::new(k + 1).unwrap();
            for i in 0..coarse.interior() {
                assert_eq!(coarse.node(i), fine.node(2 * i + 1));
            }
        }
    }

    #[test]
    fn first_order_energy_error() {
        let mut prev = f64::NAN;
        for k in 3..=10 {
            let u = poisson().solve_with(k, |_| 1.0).unwrap();
            let err = u.error_v_analytic(sine_slope).unwrap();
            if k > 3 {
                assert_relative_eq!(prev / err, 2.0, max_relative = 0.02);
            }
            prev = err;
        }
        assert!(prev < 4e-3);
    }

    #[test]
    fn constant_coefficient_scales_solution() {
        let base = poisson().solve_with(6, |_| 1.0).unwrap();
        for c in [0.3, 2.0, 7.5] {
            let u = poisson().solve_with(6, |_| c).unwrap();
            for (a, b) in u.values.iter().zip(&base.values) {
                assert_relative_eq!(*a, b / c, max_relative = 1e-12);
            }
        }
        let (sigma, y0) = (0.5f64, 1.3f64);
        let u = poisson().solve_with(6, |_| (sigma * y0).exp()).unwrap();
        for (a, b) in u.values.iter().zip(&base.values) {
            assert_relative_eq!(*a, (-sigma * y0).exp() * b, max_relative = 1e-12);
        }
    }

    #[test]
    fn rejects_non_positive_coefficient() {
        let err = poisson().solve_with(3, |x| x - 0.5).unwrap_err();
        assert!(matches!(err, Error::NonCoercive(_)));
    }

    #[test]
    fn deltas_telescope() {
        let a = |x: f64| 1.0 + 0.5 * (3.0 * x).sin();
        let top = 7;
        let mut sum = Field::zeros(top).unwrap();
        for k in 0..=top {
            sum.axpy(1.0, &poisson().delta_level(k, a).unwrap().prolong(top).unwrap());
        }
        let u = poisson().solve_with(top, a).unwrap();
        for (s, v) in sum.values.iter().zip(&u.values) {
            assert!((s - v).abs() < 1e-13);
        }
        assert_eq!(poisson().delta_level(0, a).unwrap(), poisson().solve_with(0, a).unwrap());
    }

    #[test]
    fn delta_norms_halve() {
        let a = |x: f64| (0.4 * (PI * x).sin()).exp();
        let (xs, ys): (Vec<f64>, Vec<f64>) = (3..=9)
            .map(|k| (k as f64, poisson().delta_level(k, a).unwrap().norm_v().log2()))
            .unzip();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!((slope + 1.0).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn analytic_norms() {
        assert_relative_eq!(norm_v_analytic(sine_slope).unwrap(), PI / 2f64.sqrt(), max_relative = 1e-12);
        let d2 = |x: f64| -PI * PI * (PI * x).sin();
        assert_relative_eq!(norm_w_analytic(d2).unwrap(), PI * PI / 2f64.sqrt(), max_relative = 1e-12);
        assert_eq!(Field::zeros(5).unwrap().norm_v(), 0.0);
        assert!(matches!(Field::zeros(2).unwrap().norm_w(), Err(Error::Usage(_))));
    }

    #[test]
    fn interpolation_error_matches_assumption() {
        // ‖u - P_n u‖_V ≤ C n^{-1} ‖u‖_W with a stable constant
        let w_norm = PI * PI / 2f64.sqrt();
        let constants: Vec<f64> = (2..=9)
            .map(|k| {
                let u = Field::interpolant(k, |x| (PI * x).sin()).unwrap();
                let n = (1u64 << (k + 1)) as f64;
                u.error_v_analytic(sine_slope).unwrap() * n / w_norm
            })
            .collect();
        let (lo, hi) = constants.iter().fold((f64::MAX, 0.0f64), |(l, h), c| (l.min(*c), h.max(*c)));
        assert!(hi / lo < 1.05, "{constants:?}");
    }

    #[test]
    fn prolongation_is_exact_on_coarse_space() {
        let coarse = Field::interpolant(3, |x| x * (1.0 - x) + 0.2 * x).unwrap();
        let fine = coarse.prolong(6).unwrap();
        for i in 0..200 {
            let x = i as f64 / 199.0;
            assert!((coarse.eval(x) - fine.eval(x)).abs() < 1e-15);
        }
        assert_relative_eq!(coarse.norm_v(), fine.norm_v(), max_relative = 1e-13);
    }

    #[test]
    fn stiffness_is_positive_definite() {
        let mesh = Mesh::new(4).unwrap();
        let a: Vec<f64> = mesh.sample_points().iter().map(|x| 0.2 + x * x).collect();
        let h = mesh.h();
        let stiff: Vec<f64> = a.chunks(2).map(|g| 0.5 * (g[0] + g[1]) / h).collect();
        let n = mesh.interior();
        let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = stiff[i] + stiff[i + 1];
            if i + 1 < n {
                m[(i, i + 1)] = -stiff[i + 1];
                m[(i + 1, i)] = -stiff[i + 1];
            }
        }
        assert_eq!(m, m.transpose());
        assert!(m.cholesky().is_some());
    }

    #[test]
    fn csv_export_has_boundary_rows() {
        let u = Field::interpolant(1, |x| x).unwrap();
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(text.lines().last().unwrap().ends_with(",0.0000000000000000e0"));
    }

    proptest! {
        #[test]
        fn norm_is_homogeneous(vals in proptest::collection::vec(-3.0f64..3.0, 7), c in -4.0f64..4.0) {
            let u = Field { level: 2, values: vals };
            let mut scaled = u.clone();
            scaled.values.iter_mut().for_each(|v| *v *= c);
            prop_assert!((scaled.norm_v() - c.abs() * u.norm_v()).abs() <= 1e-12 * (1.0 + u.norm_v()));
        }

        #[test]
        fn solve_is_linear_in_source(c in 0.1f64..5.0) {
            let base = SpatialHierarchy::new(Source::Constant { value: 1.0 }).solve_with(4, |x| 1.0 + x).unwrap();
            let u = SpatialHierarchy::new(Source::Constant { value: c }).solve_with(4, |x| 1.0 + x).unwrap();
            for (a, b) in u.values.iter().zip(&base.values) {
                prop_assert!((a - c * b).abs() <= 1e-12 * c);
            }
        }
    }
}
