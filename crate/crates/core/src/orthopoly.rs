//! Normalized Hermite and Jacobi polynomials.
//!
//! `H_k` are the probabilists' Hermite polynomials scaled to be orthonormal
//! with respect to the standard Gaussian measure `γ`, so `H_k = He_k / √(k!)`.
//! `J_k` are Jacobi polynomials orthonormal with respect to the Jacobi
//! probability measure `c_{a,b} (1-y)^a (1+y)^b dy` on `[-1, 1]`.
//!
//! Roots come from the eigenvalues of the symmetric tridiagonal Jacobi
//! matrix of the orthonormal recurrence, followed by Newton polishing.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Residual tolerance for polished roots, measured in the weighted scale
/// `|p(y)| w(y)` in which orthonormal polynomials are O(1).
const ROOT_RESIDUAL_TOL: f64 = 1e-10;

/// Standard Gaussian density `g(y)`.
pub fn gaussian_density(y: f64) -> f64 {
    (-0.5 * y * y).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `√g(y)`, the weight of the Lebesgue constant and of the Cramér bound.
pub fn sqrt_gaussian_density(y: f64) -> f64 {
    (-0.25 * y * y).exp() / (2.0 * std::f64::consts::PI).powf(0.25)
}

/// Value of the normalized Hermite polynomial `H_k(y)`.
///
/// Uses `H_{k+1} = (y H_k - √k H_{k-1}) / √(k+1)`; factorials never appear.
pub fn hermite_value(k: usize, y: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = 1.0;
    for j in 0..k {
        let next = (y * cur - (j as f64).sqrt() * prev) / ((j + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    cur
}

/// All of `H_0(y), ..., H_kmax(y)`.
pub fn hermite_values(kmax: usize, y: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(kmax + 1);
    out.push(1.0);
    if kmax == 0 {
        return out;
    }
    out.push(y);
    for j in 1..kmax {
        let next = (y * out[j] - (j as f64).sqrt() * out[j - 1]) / ((j + 1) as f64).sqrt();
        out.push(next);
    }
    out
}

/// `H_k'(y) = √k H_{k-1}(y)`.
pub fn hermite_derivative(k: usize, y: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        (k as f64).sqrt() * hermite_value(k - 1, y)
    }
}

/// Mhaskar–Rakhmanov–Saff number attached to the Hermite weight, in the
/// closed form `a_m = √m`.
///
/// This is the value for the exponent `Q(y) = y²`. For an arbitrary
/// quadratic exponent use [`mrs_number_quadratic`].
pub fn mrs_number(m: usize) -> f64 {
    (m as f64).sqrt()
}

/// MRS number for the weight `exp(-c y²)`: the positive root `a` of
/// `m = (2/π) ∫_0^1 a t Q'(a t) / √(1-t²) dt`, which is `a = √(m / c)`.
///
/// For `√g` (`c = 1/4`) this gives `2√m`, the effective support radius of
/// `|p √g|` for polynomials `p` of degree `m`.
pub fn mrs_number_quadratic(m: usize, c: f64) -> f64 {
    (m as f64 / c).sqrt()
}

/// Effective support radius of degree-`m` polynomials weighted by `√g`.
pub fn sqrt_gaussian_support_radius(m: usize) -> f64 {
    mrs_number_quadratic(m, 0.25)
}

/// Recurrence coefficients `(α_n, b_n)` of an orthonormal family:
/// `y p_n = b_{n+1} p_{n+1} + α_n p_n + b_n p_{n-1}`.
trait Recurrence {
    fn alpha(&self, n: usize) -> f64;
    /// Off-diagonal `b_n` for `n ≥ 1`.
    fn offdiag(&self, n: usize) -> f64;
}

struct HermiteRecurrence;

impl Recurrence for HermiteRecurrence {
    fn alpha(&self, _n: usize) -> f64 {
        0.0
    }
    fn offdiag(&self, n: usize) -> f64 {
        (n as f64).sqrt()
    }
}

struct JacobiRecurrence {
    a: f64,
    b: f64,
}

impl Recurrence for JacobiRecurrence {
    fn alpha(&self, n: usize) -> f64 {
        let (a, b) = (self.a, self.b);
        if a == b {
            return 0.0;
        }
        let n = n as f64;
        let s = 2.0 * n + a + b;
        if n == 0.0 {
            (b - a) / (a + b + 2.0)
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        }
    }

    fn offdiag(&self, n: usize) -> f64 {
        let (a, b) = (self.a, self.b);
        let beta = if n == 1 {
            4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + a + b).powi(2) * (3.0 + a + b))
        } else {
            let n = n as f64;
            let s = 2.0 * n + a + b;
            4.0 * n * (n + a) * (n + b) * (n + a + b) / (s * s * (s + 1.0) * (s - 1.0))
        };
        beta.sqrt()
    }
}

/// Evaluates `(p_0(y), ..., p_n(y))` and `p_n'(y)` for an orthonormal family
/// with `p_0 ≡ 1`.
fn orthonormal_eval<R: Recurrence>(rec: &R, n: usize, y: f64) -> (Vec<f64>, f64) {
    let mut p = Vec::with_capacity(n + 1);
    p.push(1.0);
    let mut dprev = 0.0;
    let mut dcur = 0.0;
    for j in 0..n {
        let pj_1 = if j == 0 { 0.0 } else { p[j - 1] };
        let bj = if j == 0 { 0.0 } else { rec.offdiag(j) };
        let bn = rec.offdiag(j + 1);
        let aj = rec.alpha(j);
        let next = ((y - aj) * p[j] - bj * pj_1) / bn;
        let dnext = (p[j] + (y - aj) * dcur - bj * dprev) / bn;
        p.push(next);
        dprev = dcur;
        dcur = dnext;
    }
    (p, dcur)
}

/// Eigenvalues of the `n × n` Jacobi matrix of `rec`, sorted ascending.
fn jacobi_matrix_eigenvalues<R: Recurrence>(rec: &R, n: usize) -> Vec<f64> {
    let mut mat = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        mat[(i, i)] = rec.alpha(i);
        if i + 1 < n {
            let b = rec.offdiag(i + 1);
            mat[(i, i + 1)] = b;
            mat[(i + 1, i)] = b;
        }
    }
    let mut eig: Vec<f64> = mat.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|x, y| x.total_cmp(y));
    eig
}

/// Forces exact mirror symmetry on a sorted sequence and an exact zero in the
/// middle when the length is odd.
pub(crate) fn symmetrize(points: &mut [f64]) {
    let n = points.len();
    for i in 0..n / 2 {
        let half = 0.5 * (points[n - 1 - i] - points[i]);
        points[i] = -half;
        points[n - 1 - i] = half;
    }
    if n % 2 == 1 {
        points[n / 2] = 0.0;
    }
}

/// Roots of `p_n` via the Jacobi matrix, Newton polish, and a weighted
/// residual check.
fn polished_roots<R: Recurrence>(
    rec: &R,
    n: usize,
    symmetric: bool,
    weight: impl Fn(f64) -> f64,
) -> Result<Vec<f64>> {
    let mut roots = jacobi_matrix_eigenvalues(rec, n);
    for r in roots.iter_mut() {
        for _ in 0..2 {
            let (p, dp) = orthonormal_eval(rec, n, *r);
            if dp != 0.0 && dp.is_finite() {
                let step = p[n] / dp;
                if step.is_finite() {
                    *r -= step;
                }
            }
        }
    }
    if symmetric {
        symmetrize(&mut roots);
    }
    for (i, &r) in roots.iter().enumerate() {
        let (p, _) = orthonormal_eval(rec, n, r);
        let resid = (p[n] * weight(r)).abs();
        if !(resid <= ROOT_RESIDUAL_TOL) {
            return Err(Error::Convergence(format!(
                "root {i} of degree-{n} polynomial: weighted residual {resid:e}"
            )));
        }
        if i > 0 && roots[i - 1] >= r {
            return Err(Error::Convergence(format!(
                "roots of degree-{n} polynomial not strictly increasing at {i}"
            )));
        }
    }
    Ok(roots)
}

/// The `m + 1` roots of `H_{m+1}`, strictly increasing and symmetric.
pub fn hermite_roots(m: usize) -> Result<Vec<f64>> {
    polished_roots(&HermiteRecurrence, m + 1, true, |y| (-0.25 * y * y).exp())
}

/// Gauss–Hermite rule with `n` points for the standard Gaussian measure.
///
/// Weights come from the Christoffel function `1 / Σ_{j<n} H_j(y)²`.
pub fn gauss_hermite_rule(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::Parameter("Gauss rule needs at least one point".into()));
    }
    let nodes = hermite_roots(n - 1)?;
    let weights = nodes
        .iter()
        .map(|&y| {
            let h = hermite_values(n - 1, y);
            1.0 / h.iter().map(|v| v * v).sum::<f64>()
        })
        .collect();
    Ok((nodes, weights))
}

fn check_jacobi_params(a: f64, b: f64) -> Result<()> {
    if !(a > -1.0) || !(b > -1.0) {
        return Err(Error::Parameter(format!(
            "Jacobi parameters must exceed -1, got a = {a}, b = {b}"
        )));
    }
    Ok(())
}

/// Normalization constant `c_k^{a,b}` with `c_0^{a,b} = 1`.
///
/// `J_k = c_k^{a,b} P_k^{(a,b)}` where `P_k^{(a,b)}` is the classical Jacobi
/// polynomial.
pub fn jacobi_norm_const(k: usize, a: f64, b: f64) -> Result<f64> {
    check_jacobi_params(a, b)?;
    if k == 0 {
        return Ok(1.0);
    }
    let kf = k as f64;
    let ln = |x: f64| libm::lgamma(x);
    let log_sq = (2.0 * kf + a + b + 1.0).ln() + ln(kf + 1.0) + ln(kf + a + b + 1.0) + ln(a + 1.0)
        + ln(b + 1.0)
        - ln(kf + a + 1.0)
        - ln(kf + b + 1.0)
        - ln(a + b + 2.0);
    Ok((0.5 * log_sq).exp())
}

/// Classical Jacobi polynomial `P_k^{(a,b)}(y)` by its three-term recurrence.
pub fn jacobi_classical(k: usize, y: f64, a: f64, b: f64) -> f64 {
    let mut prev = 1.0;
    if k == 0 {
        return prev;
    }
    let mut cur = (a + 1.0) + 0.5 * (a + b + 2.0) * (y - 1.0);
    for n in 2..=k {
        let n = n as f64;
        let s = 2.0 * n + a + b;
        let c1 = 2.0 * n * (n + a + b) * (s - 2.0);
        let c2 = (s - 1.0) * (s * (s - 2.0) * y + a * a - b * b);
        let c3 = 2.0 * (n + a - 1.0) * (n + b - 1.0) * s;
        let next = (c2 * cur - c3 * prev) / c1;
        prev = cur;
        cur = next;
    }
    cur
}

/// Normalized Jacobi polynomial `J_k(y)`, orthonormal under the Jacobi
/// probability measure.
pub fn jacobi_value(k: usize, y: f64, a: f64, b: f64) -> Result<f64> {
    let c = jacobi_norm_const(k, a, b)?;
    Ok(c * jacobi_classical(k, y, a, b))
}

/// All normalized Jacobi values `J_0(y), ..., J_kmax(y)` via the orthonormal
/// recurrence.
pub fn jacobi_values(kmax: usize, y: f64, a: f64, b: f64) -> Result<Vec<f64>> {
    check_jacobi_params(a, b)?;
    Ok(orthonormal_eval(&JacobiRecurrence { a, b }, kmax, y).0)
}

/// The `n` roots of the degree-`n` Jacobi polynomial with parameters `(a, b)`.
pub fn jacobi_roots(n: usize, a: f64, b: f64) -> Result<Vec<f64>> {
    check_jacobi_params(a, b)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let rec = JacobiRecurrence { a, b };
    let weight = |y: f64| ((1.0 - y).max(0.0).powf(a) * (1.0 + y).max(0.0).powf(b)).sqrt();
    polished_roots(&rec, n, a == b, weight)
}

/// Gauss–Jacobi rule with `n` points for the Jacobi probability measure.
pub fn gauss_jacobi_rule(n: usize, a: f64, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::Parameter("Gauss rule needs at least one point".into()));
    }
    let nodes = jacobi_roots(n, a, b)?;
    let rec = JacobiRecurrence { a, b };
    let weights = nodes
        .iter()
        .map(|&y| {
            let (p, _) = orthonormal_eval(&rec, n - 1, y);
            1.0 / p.iter().map(|v| v * v).sum::<f64>()
        })
        .collect();
    Ok((nodes, weights))
}

/// Jacobi probability density `c_{a,b} (1-y)^a (1+y)^b` on `[-1, 1]`.
pub fn jacobi_density(y: f64, a: f64, b: f64) -> f64 {
    let ln_c = libm::lgamma(a + b + 2.0)
        - (a + b + 1.0) * std::f64::consts::LN_2
        - libm::lgamma(a + 1.0)
        - libm::lgamma(b + 1.0);
    ln_c.exp() * (1.0 - y).powf(a) * (1.0 + y).powf(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hermite_examples() {
        assert_eq!(hermite_value(0, 3.7), 1.0);
        assert_eq!(hermite_value(1, 0.5), 0.5);
        assert_abs_diff_eq!(hermite_value(2, 0.0), -1.0 / 2f64.sqrt(), epsilon = 1e-15);
        // He_3(y) = y^3 - 3y
        let y: f64 = 1.3;
        assert_abs_diff_eq!(
            hermite_value(3, y),
            (y.powi(3) - 3.0 * y) / 6f64.sqrt(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn hermite_values_match_single_evaluations() {
        let v = hermite_values(30, -2.2);
        for (k, &h) in v.iter().enumerate() {
            assert_abs_diff_eq!(h, hermite_value(k, -2.2), epsilon = 1e-12);
        }
    }

    #[test]
    fn hermite_roots_examples() {
        assert_eq!(hermite_roots(0).unwrap(), vec![0.0]);
        let r1 = hermite_roots(1).unwrap();
        assert_abs_diff_eq!(r1[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r1[1], 1.0, epsilon = 1e-14);
        let r2 = hermite_roots(2).unwrap();
        assert_abs_diff_eq!(r2[0], -3f64.sqrt(), epsilon = 1e-13);
        assert_eq!(r2[1], 0.0);
        assert_abs_diff_eq!(r2[2], 3f64.sqrt(), epsilon = 1e-13);
    }

    #[test]
    fn hermite_roots_symmetric_and_spaced() {
        for m in 0..=60 {
            let r = hermite_roots(m).unwrap();
            assert_eq!(r.len(), m + 1);
            for i in 0..=m {
                assert!((r[i] + r[m - i]).abs() < 1e-13);
            }
            if m >= 1 {
                let d = r.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
                let s = ((2 * m + 3) as f64).sqrt();
                assert!(std::f64::consts::PI * 2f64.sqrt() / s < d, "m = {m}");
                // Equality holds at m = 2: gap √3 = √21/√7.
                assert!(d < 21f64.sqrt() / s + 1e-12, "m = {m}");
            }
        }
    }

    #[test]
    fn hermite_orthonormal_under_reference_rule() {
        let (x, w) = gauss_hermite_rule(64).unwrap();
        for j in 0..=20 {
            for k in 0..=20 {
                let ip: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(&y, &wt)| wt * hermite_value(j, y) * hermite_value(k, y))
                    .sum();
                let target = if j == k { 1.0 } else { 0.0 };
                assert!((ip - target).abs() < 1e-10, "({j},{k}) -> {ip}");
            }
        }
    }

    #[test]
    fn cramer_bound() {
        let n = 100_000;
        for k in 0..=50 {
            let mut worst: f64 = 0.0;
            for i in 0..n {
                let y = -20.0 + 40.0 * i as f64 / (n - 1) as f64;
                worst = worst.max((hermite_value(k, y) * sqrt_gaussian_density(y)).abs());
            }
            assert!(worst <= 1.0 + 1e-12, "k = {k}: {worst}");
        }
    }

    #[test]
    fn mrs_examples() {
        assert_eq!(mrs_number(1), 1.0);
        assert_eq!(mrs_number(4), 2.0);
        assert_eq!(mrs_number(9), 3.0);
        assert_eq!(sqrt_gaussian_support_radius(9), 6.0);
    }

    #[test]
    fn mrs_quadratic_solves_defining_equation() {
        // (2/π) ∫_0^1 a t Q'(a t)/√(1-t²) dt with Q = c y², by Gauss–Chebyshev.
        let c = 0.25;
        let m = 7;
        let a = mrs_number_quadratic(m, c);
        let n = 200;
        let mut acc = 0.0;
        for i in 0..n {
            let theta = std::f64::consts::PI * (i as f64 + 0.5) / n as f64;
            let t = theta.cos();
            if t > 0.0 {
                acc += a * t * 2.0 * c * a * t;
            }
        }
        let integral = acc * std::f64::consts::PI / n as f64;
        assert_abs_diff_eq!(2.0 / std::f64::consts::PI * integral, m as f64, epsilon = 1e-10);
    }

    #[test]
    fn jacobi_examples() {
        assert_eq!(jacobi_value(0, 0.3, 0.0, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(jacobi_value(1, 1.0, 0.0, 0.0).unwrap(), 3f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(
            jacobi_value(2, 0.0, 0.0, 0.0).unwrap(),
            -5f64.sqrt() / 2.0,
            epsilon = 1e-14
        );
        assert!(jacobi_value(1, 0.0, -1.0, 0.0).is_err());
        assert!(jacobi_value(1, 0.0, 0.0, -1.5).is_err());
        assert_eq!(jacobi_norm_const(0, 0.3, 0.3).unwrap(), 1.0);
    }

    #[test]
    fn jacobi_two_routes_agree() {
        for &(a, b) in &[(0.0, 0.0), (-0.5, -0.5), (1.5, 1.5), (0.3, -0.4), (2.0, 0.5)] {
            for &y in &[-0.9, -0.3, 0.0, 0.45, 0.99] {
                let rec = jacobi_values(12, y, a, b).unwrap();
                for (k, &v) in rec.iter().enumerate() {
                    let direct = jacobi_value(k, y, a, b).unwrap();
                    assert!(
                        (v - direct).abs() < 1e-10 * (1.0 + direct.abs()),
                        "a={a} b={b} k={k} y={y}: {v} vs {direct}"
                    );
                }
            }
        }
    }

    #[test]
    fn jacobi_orthonormal() {
        for &(a, b) in &[(0.0, 0.0), (-0.5, -0.5), (1.0, 1.0), (0.5, -0.3)] {
            let (x, w) = gauss_jacobi_rule(30, a, b).unwrap();
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-13);
            for j in 0..=10 {
                for k in 0..=10 {
                    let ip: f64 = x
                        .iter()
                        .zip(&w)
                        .map(|(&y, &wt)| {
                            wt * jacobi_value(j, y, a, b).unwrap() * jacobi_value(k, y, a, b).unwrap()
                        })
                        .sum();
                    let target = if j == k { 1.0 } else { 0.0 };
                    assert!((ip - target).abs() < 1e-10, "a={a} ({j},{k}) -> {ip}");
                }
            }
        }
    }

    #[test]
    fn jacobi_density_integrates_to_one() {
        // Gauss–Legendre with enough points for a smooth density (a, b ≥ 1).
        let (x, w) = gauss_jacobi_rule(40, 0.0, 0.0).unwrap();
        let total: f64 = x.iter().zip(&w).map(|(&y, &wt)| 2.0 * wt * jacobi_density(y, 2.0, 1.0)).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn legendre_roots() {
        let r = jacobi_roots(2, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(r[1], 1.0 / 3f64.sqrt(), epsilon = 1e-14);
        let r = jacobi_roots(3, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(r[2], 0.6f64.sqrt(), epsilon = 1e-14);
        assert_eq!(r[1], 0.0);
    }

    #[test]
    fn gauss_hermite_exactness() {
        let (x, w) = gauss_hermite_rule(10).unwrap();
        for p in 0..20 {
            let q: f64 = x.iter().zip(&w).map(|(&y, &wt)| wt * y.powi(p)).sum();
            let exact = if p % 2 == 1 { 0.0 } else { (1..p).step_by(2).map(|v| v as f64).product() };
            let abs_moment = 2f64.powf(p as f64 / 2.0) * libm::tgamma((p as f64 + 1.0) / 2.0)
                / std::f64::consts::PI.sqrt();
            assert!((q - exact).abs() < 1e-10 * abs_moment, "p = {p}");
        }
    }
}
