use serde::{Deserialize, Serialize};

use super::MultiIndex;
use crate::error::{Error, Result};
use crate::orthopoly::jacobi_norm_const;

/// Hard guard on the number of active parametric dimensions.
pub const J_MAX: usize = 512;

/// Growth sequence `j ↦ ρ_j` (1-based `j`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RhoSeq {
    /// `ρ_j = c · j^κ`.
    Power { c: f64, kappa: f64 },
    /// Explicit values `ρ_1, ρ_2, …`.
    Explicit { values: Vec<f64> },
}

impl RhoSeq {
    /// `ρ` for the 0-based dimension `dim`.
    pub fn value(&self, dim: usize) -> f64 {
        match self {
            RhoSeq::Power { c, kappa } => c * ((dim + 1) as f64).powf(*kappa),
            RhoSeq::Explicit { values } => values.get(dim).copied().unwrap_or(f64::INFINITY),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WeightMode {
    /// Binomial weights `σ_s` for Gaussian parameters.
    Lognormal,
    /// `β_s = ρ^s ∏ c_{s_j}^{a,a}` for uniform-type parameters.
    Affine { a: f64 },
}

/// Weight sequence over multi-indices: ρ, cap η, exponent q, mode, and the
/// number of active dimensions (dimensions beyond it have infinite weight).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub rho: RhoSeq,
    pub dims: usize,
    pub eta: u32,
    pub q: f64,
    pub mode: WeightMode,
}

impl WeightSpec {
    pub fn lognormal(rho: RhoSeq, dims: usize, eta: u32, q: f64) -> Result<Self> {
        let spec = Self {
            rho,
            dims,
            eta,
            q,
            mode: WeightMode::Lognormal,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn affine(rho: RhoSeq, dims: usize, q: f64, a: f64) -> Result<Self> {
        let spec = Self {
            rho,
            dims,
            eta: 1,
            q,
            mode: WeightMode::Affine { a },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_q(&self, q: f64) -> Self {
        Self { q, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims > J_MAX {
            return Err(Error::Parameter(format!(
                "{} active dimensions exceed the limit {J_MAX}",
                self.dims
            )));
        }
        if !(self.q > 0.0) || !self.q.is_finite() {
            return Err(Error::Parameter(format!("exponent q must be positive, got {}", self.q)));
        }
        if self.eta == 0 {
            return Err(Error::Parameter("cap eta must be at least 1".into()));
        }
        if let WeightMode::Affine { a } = self.mode {
            if !(a > -1.0) {
                return Err(Error::Parameter(format!("Jacobi parameter must exceed -1, got {a}")));
            }
        }
        let mut prev = f64::NEG_INFINITY;
        for d in 0..self.dims {
            let r = self.rho.value(d);
            if !(r > 1.0) {
                return Err(Error::Parameter(format!("rho_{} = {r} must exceed 1", d + 1)));
            }
            if r < prev {
                return Err(Error::Parameter(format!(
                    "rho must be nondecreasing, rho_{} = {r} < rho_{} = {prev}",
                    d + 1,
                    d
                )));
            }
            prev = r;
        }
        Ok(())
    }

    /// `ρ` for dimension `dim`, infinite beyond the active range.
    pub fn rho(&self, dim: usize) -> f64 {
        if dim < self.dims {
            self.rho.value(dim)
        } else {
            f64::INFINITY
        }
    }

    /// Mode-appropriate weight (σ or β); `+∞` when it leaves the floating
    /// range or touches an inactive dimension.
    pub fn weight_value(&self, s: &MultiIndex) -> f64 {
        match self.mode {
            WeightMode::Lognormal => {
                let mut sq = 1.0;
                for (d, v) in s.iter() {
                    sq *= sigma_factor_sq(v, self.eta, self.rho(d));
                }
                sq.sqrt()
            }
            WeightMode::Affine { a } => {
                let mut b = 1.0;
                for (d, v) in s.iter() {
                    let c = jacobi_norm_const(v as usize, a, a).unwrap_or(f64::NAN);
                    b *= self.rho(d).powi(v as i32) * c;
                }
                b
            }
        }
    }

    pub fn weight(&self, s: &MultiIndex) -> Result<f64> {
        let w = self.weight_value(s);
        if w.is_finite() {
            Ok(w)
        } else {
            Err(Error::Overflow(format!("weight of {s} is not representable")))
        }
    }
}

/// `C(n, k)` in floating point.
pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// One factor of `σ_s²`: `Σ_{k ≤ min(η, n)} C(n,k) ρ^{2k}`.
pub fn sigma_factor_sq(n: u32, eta: u32, rho: f64) -> f64 {
    let r2 = rho * rho;
    let mut sum = 0.0;
    let mut pw = 1.0;
    for k in 0..=n.min(eta) {
        sum += binomial(n, k) * pw;
        pw *= r2;
    }
    sum
}

/// `σ_s = (∏_j Σ_{k ≤ min(η, s_j)} C(s_j,k) ρ_j^{2k})^{1/2}`.
pub fn sigma(s: &MultiIndex, spec: &WeightSpec) -> Result<f64> {
    if spec.mode != WeightMode::Lognormal {
        return Err(Error::Usage("sigma needs a lognormal weight spec".into()));
    }
    spec.weight(s)
}

/// `β_s = ∏_j ρ_j^{s_j} c_{s_j}^{a,a}`.
pub fn beta_affine(s: &MultiIndex, spec: &WeightSpec) -> Result<f64> {
    match spec.mode {
        WeightMode::Affine { a } => {
            if !(a > -1.0) {
                return Err(Error::Parameter(format!("Jacobi parameter must exceed -1, got {a}")));
            }
            spec.weight(s)
        }
        WeightMode::Lognormal => Err(Error::Usage("beta_affine needs an affine weight spec".into())),
    }
}

/// `p_s(θ, λ) = ∏_j (1 + λ s_j)^θ`.
pub fn p_weight(s: &MultiIndex, theta: f64, lambda: f64) -> f64 {
    s.iter().map(|(_, v)| (1.0 + lambda * v as f64).powf(theta)).product()
}

/// Outcome of evaluating `Σ_{s ∈ F_ν} p_s(θ,λ) σ_s^{-q/ν}` in product form.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummabilityCertificate {
    /// `∏_{j ≤ J_tail} B_j`.
    pub value: f64,
    pub factors: Vec<f64>,
    /// Multiplicative bound for the dimensions beyond `J_tail`.
    pub tail_bound: f64,
    pub converged: bool,
    pub warning: Option<String>,
}

const SERIES_TOL: f64 = 1e-16;
const SERIES_MAX_TERMS: u64 = 2_000_000;

/// One factor `B_j = Σ_{n ∈ N_{0,ν}} (1+λn)^θ (Σ_{k ≤ min(η,n)} C(n,k)ρ^{2k})^{-q/(2ν)}`.
///
/// Returns the sum and whether it converged; a power-law tail estimate is
/// added when the term budget runs out.
fn summability_factor(rho: f64, eta: u32, nu: u32, theta: f64, lambda: f64, q: f64) -> (f64, bool) {
    let expo = -q / (2.0 * nu as f64);
    let term = |n: u64| -> f64 {
        let log_sq = log_sigma_factor_sq(n, eta, rho);
        ((1.0 + lambda * n as f64).ln() * theta + expo * log_sq).exp()
    };
    let mut sum = 1.0;
    let mut n = nu.max(1) as u64;
    let mut last = f64::INFINITY;
    while n < SERIES_MAX_TERMS {
        let t = term(n);
        sum += t;
        if t < SERIES_TOL && n > eta as u64 && t <= last {
            return (sum, true);
        }
        last = t;
        n += 1;
    }
    // Tail ~ t(N)·N/(p-1) for terms decaying like n^{-p}, p = ηq/(2ν) - θ.
    let p = eta as f64 * q / (2.0 * nu as f64) - theta;
    if p > 1.0 {
        (sum + last * n as f64 / (p - 1.0), true)
    } else {
        (f64::INFINITY, false)
    }
}

/// `ln Σ_{k ≤ min(η,n)} C(n,k) ρ^{2k}` without overflow.
fn log_sigma_factor_sq(n: u64, eta: u32, rho: f64) -> f64 {
    let kmax = n.min(eta as u64);
    let logs: Vec<f64> = (0..=kmax)
        .map(|k| ln_binomial(n, k) + 2.0 * k as f64 * rho.ln())
        .collect();
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
}

fn ln_binomial(n: u64, k: u64) -> f64 {
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// Evaluates the summability series through its product factorisation,
/// truncated at `j_tail` dimensions, with a tail bound for the rest.
pub fn summability_check(
    spec: &WeightSpec,
    nu: u32,
    theta: f64,
    lambda: f64,
    q: f64,
    j_tail: usize,
) -> SummabilityCertificate {
    let threshold = 2.0 * nu as f64 * (theta + 1.0) / q;
    let mut warning = None;
    if !(spec.eta as f64 > threshold) {
        warning = Some(format!(
            "eta = {} does not exceed 2·nu·(theta+1)/q = {threshold}; the series may diverge",
            spec.eta
        ));
    }
    let head = j_tail.min(spec.dims);
    let mut converged = true;
    let factors: Vec<f64> = (0..head)
        .map(|d| {
            let (b, ok) = summability_factor(spec.rho(d), spec.eta, nu, theta, lambda, q);
            converged &= ok;
            b
        })
        .collect();
    let value: f64 = factors.iter().product();
    let tail_bound = if head >= spec.dims || factors.is_empty() {
        1.0
    } else {
        // C fitted on the last few computed dimensions, (B_j - 1) ≈ C ρ_j^{-q}
        let c = (head.saturating_sub(4)..head)
            .map(|d| (factors[d] - 1.0) * spec.rho(d).powf(q))
            .fold(0.0, f64::max);
        let tail_sum: f64 = (head..spec.dims).map(|d| spec.rho(d).powf(-q)).sum();
        (c * tail_sum).exp()
    };
    if !converged && warning.is_none() {
        warning = Some("a per-dimension factor diverged".into());
    }
    SummabilityCertificate {
        value,
        factors,
        tail_bound,
        converged: converged && value.is_finite(),
        warning,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn explicit(values: &[f64], eta: u32, q: f64) -> WeightSpec {
        WeightSpec::lognormal(RhoSeq::Explicit { values: values.to_vec() }, values.len(), eta, q).unwrap()
    }

    #[test]
    fn sigma_examples() {
        let spec = explicit(&[2.0, 3.0], 1, 1.0);
        assert_eq!(sigma(&MultiIndex::zero(), &spec).unwrap(), 1.0);
        assert_relative_eq!(sigma(&MultiIndex::unit(0, 1), &spec).unwrap(), 5f64.sqrt(), max_relative = 1e-15);
        let s = MultiIndex::from_dense(&[2, 1]);
        assert_relative_eq!(sigma(&s, &spec).unwrap(), 90f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn sigma_inactive_dimension_overflows() {
        let spec = explicit(&[2.0], 1, 1.0);
        assert!(matches!(sigma(&MultiIndex::unit(1, 1), &spec), Err(Error::Overflow(_))));
        let big = explicit(&[1e200], 2, 1.0);
        assert!(matches!(sigma(&MultiIndex::unit(0, 2), &big), Err(Error::Overflow(_))));
    }

    #[test]
    fn beta_examples() {
        let spec = WeightSpec::affine(RhoSeq::Explicit { values: vec![2.0] }, 1, 1.0, 0.0).unwrap();
        assert_eq!(beta_affine(&MultiIndex::zero(), &spec).unwrap(), 1.0);
        assert_relative_eq!(
            beta_affine(&MultiIndex::unit(0, 1), &spec).unwrap(),
            2.0 * 3f64.sqrt(),
            max_relative = 1e-14
        );
        let mut prev = 1.0;
        for v in 1..8 {
            let b = beta_affine(&MultiIndex::unit(0, v), &spec).unwrap();
            assert!(b > prev);
            prev = b;
        }
        assert!(WeightSpec::affine(RhoSeq::Explicit { values: vec![2.0] }, 1, 1.0, -1.0).is_err());
    }

    #[test]
    fn p_weight_examples() {
        assert_eq!(p_weight(&MultiIndex::zero(), 1.0, 2.0), 1.0);
        assert_eq!(p_weight(&MultiIndex::unit(0, 2), 1.0, 2.0), 5.0);
        assert_eq!(p_weight(&MultiIndex::from_dense(&[1, 1]), 1.0, 2.0), 9.0);
    }

    #[test]
    fn validation() {
        assert!(WeightSpec::lognormal(RhoSeq::Explicit { values: vec![1.0] }, 1, 1, 1.0).is_err());
        assert!(WeightSpec::lognormal(RhoSeq::Explicit { values: vec![3.0, 2.0] }, 2, 1, 1.0).is_err());
        assert!(WeightSpec::lognormal(RhoSeq::Power { c: 2.0, kappa: 1.0 }, J_MAX + 1, 1, 1.0).is_err());
        assert!(WeightSpec::lognormal(RhoSeq::Power { c: 2.0, kappa: 1.0 }, 4, 0, 1.0).is_err());
    }

    #[test]
    fn summability_single_dimension_matches_brute_force() {
        let q = 3.0;
        let spec = explicit(&[2.0], 1, q);
        let cert = summability_check(&spec, 1, 0.0, 0.0, q, 10);
        assert!(cert.converged && cert.warning.is_none());
        // Σ_n (1 + 4n)^{-q/2}; the tail beyond 60 is bounded by the integral.
        let brute: f64 = (0..=60).map(|n| (1.0 + 4.0 * n as f64).powf(-q / 2.0)).sum();
        let tail_max = (1.0 + 4.0 * 60.0_f64).powf(1.0 - q / 2.0) / (4.0 * (q / 2.0 - 1.0));
        assert!(cert.value >= brute && cert.value <= brute + tail_max, "{} vs {brute}", cert.value);
    }

    #[test]
    fn summability_warns_below_threshold() {
        let spec = explicit(&[2.0], 1, 1.0);
        let cert = summability_check(&spec, 1, 0.0, 0.0, 1.0, 10);
        assert!(cert.warning.is_some());
    }

    #[test]
    fn summability_tends_to_one_for_huge_rho() {
        let spec = explicit(&[1e12, 1e12, 1e12], 4, 2.0);
        let cert = summability_check(&spec, 1, 0.0, 0.0, 2.0, 3);
        assert!((cert.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn summability_tail_bound() {
        let spec = WeightSpec::lognormal(RhoSeq::Power { c: 2.0, kappa: 2.0 }, 200, 4, 1.0).unwrap();
        let cert = summability_check(&spec, 1, 0.0, 0.0, 1.0, 20);
        assert!(cert.converged);
        assert_eq!(cert.factors.len(), 20);
        assert!(cert.tail_bound > 1.0 && cert.tail_bound < 1.1);
    }
}
