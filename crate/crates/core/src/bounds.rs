//! Analytic constants and tail bounds.
//!
//! Every constant that multiplies a logarithm is computed per natural log
//! and tagged with [`LogBase`]; use [`convert_log_base`] to restate it per
//! `log₂ n`.
//!
//! Split laws are written `Z = 1/2 + σV` with `V ∈ [0, 1/2]` and `σ` a fair
//! sign, so `Z* = max(Z, 1 − Z) = 1/2 + V`.

use std::f64::consts::LN_2;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::tree::big_binomial;

/// Inner solve tolerance for `λ(c)`.
pub const LAMBDA_TOL: f64 = 1e-12;
/// Tolerance for the outer implicit equations.
pub const EQUATION_TOL: f64 = 1e-10;
/// Target relative error of every quadrature.
pub const QUAD_REL_TOL: f64 = 1e-8;
/// Upper end of the bracket searched by [`height_constant`].
pub const HEIGHT_BRACKET_MAX: f64 = 64.0;
/// A round upper bound for [`alpha`].
pub const ALPHA_SAFE: f64 = 19.0;

/// `α = 2(1 + √ln 8)² ≈ 11.93`.
pub fn alpha() -> f64 {
    let s = 1.0 + (8f64).ln().sqrt();
    2.0 * s * s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    Natural,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub value: f64,
    pub log_base: LogBase,
    /// False when the bound is vacuous or the solver did not converge;
    /// `value` should not be used then.
    pub valid: bool,
    pub residual: f64,
}

impl BoundResult {
    fn natural(value: f64, valid: bool, residual: f64) -> Self {
        BoundResult {
            value,
            log_base: LogBase::Natural,
            valid,
            residual,
        }
    }

    fn exact(value: f64) -> Self {
        Self::natural(value, value.is_finite(), 0.0)
    }
}

/// Restates a log-multiplying constant in another base: `c·ln n = (c·ln 2)·log₂ n`.
pub fn convert_log_base(b: BoundResult, to: LogBase) -> BoundResult {
    let f = match (b.log_base, to) {
        (LogBase::Natural, LogBase::Two) => LN_2,
        (LogBase::Two, LogBase::Natural) => 1.0 / LN_2,
        _ => return b,
    };
    BoundResult {
        value: b.value * f,
        log_base: to,
        valid: b.valid,
        residual: b.residual * f,
    }
}

/// Bisection on a bracket where `f(lo) > 0 > f(hi)` (or the reverse), run to
/// the resolution of `f64`.
fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, positive_at_lo: bool) -> f64 {
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == positive_at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `∫_a^b f` to [`QUAD_REL_TOL`]; returns the value and its error estimate.
fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<(f64, f64)> {
    if b <= a {
        return Ok((0.0, 0.0));
    }
    let mut out = quadrature::integrate(&f, a, b, 1e-13);
    let ok = |o: &quadrature::Output| {
        o.error_estimate <= QUAD_REL_TOL * o.integral.abs() || o.error_estimate <= 1e-300
    };
    if !ok(&out) && out.integral != 0.0 {
        out = quadrature::integrate(&f, a, b, 1e-3 * QUAD_REL_TOL * out.integral.abs());
    }
    if ok(&out) && out.integral.is_finite() {
        Ok((out.integral, out.error_estimate))
    } else {
        Err(Error::Numerical(format!(
            "quadrature on [{a}, {b}] did not converge: estimate {} ± {}",
            out.integral, out.error_estimate
        )))
    }
}

/// `Λ(t) = 1 / Σ_{i=t+1}^{2t+1} 1/(i+1)`, exactly.
pub fn lambda_poblete_exact(t: u64) -> BigRational {
    let mut s = BigRational::zero();
    for j in t + 2..=2 * t + 2 {
        s += BigRational::new(BigInt::one(), BigInt::from(j));
    }
    s.recip()
}

/// Limiting `D_n / ln n` for the median-of-`(2t+1)` tree.
pub fn lambda_poblete(t: u64) -> BoundResult {
    // Summing small terms first keeps the float sum accurate for large t.
    let s: f64 = (t + 2..=2 * t + 2).rev().map(|j| 1.0 / j as f64).sum();
    BoundResult::exact(1.0 / s)
}

fn lambda_rhs(lam: f64, t: u64) -> f64 {
    (t + 1..=2 * t + 1)
        .rev()
        .map(|i| 1.0 / (lam + i as f64))
        .sum()
}

/// Solves `1/c = Σ_{i=t+1}^{2t+1} 1/(λ + i)` for `λ > −(t+1)`. The result is
/// valid when the root is positive.
pub fn solve_lambda_of_c(c: f64, t: u64) -> BoundResult {
    if !(c.is_finite() && c > 0.0) {
        return BoundResult::natural(f64::NAN, false, f64::INFINITY);
    }
    let target = 1.0 / c;
    let g = |lam: f64| lambda_rhs(lam, t) - target;
    let lo = -((t + 1) as f64);
    let mut hi = 1.0;
    while g(hi) > 0.0 {
        hi *= 2.0;
    }
    let lam = bisect(g, lo, hi, true);
    let residual = g(lam).abs();
    BoundResult::natural(lam, lam > 0.0 && residual <= LAMBDA_TOL, residual)
}

fn height_equation(c: f64, t: u64) -> f64 {
    let lam = solve_lambda_of_c(c, t).value;
    let s: f64 = (t + 1..=2 * t + 1).map(|i| (lam / i as f64).ln_1p()).sum();
    lam - c * s + c * LN_2
}

/// `C(t)`, the limiting `H_n / ln n` of the median-of-`(2t+1)` tree: the root
/// above `Λ(t)` of `λ(c) − c·Σ ln(1 + λ(c)/i) + c·ln 2 = 0`.
pub fn height_constant(t: u64) -> BoundResult {
    let lo = lambda_poblete(t).value;
    if height_equation(HEIGHT_BRACKET_MAX, t) >= 0.0 {
        return BoundResult::natural(f64::NAN, false, f64::INFINITY);
    }
    // The equation equals 1 at Λ(t) (where λ = 1).
    let c = bisect(|c| height_equation(c, t), lo, HEIGHT_BRACKET_MAX, true);
    let residual = height_equation(c, t).abs();
    BoundResult::natural(c, residual <= EQUATION_TOL, residual)
}

/// `1/ln 2 + ln(3/2)/(4t)`, a lower bound on `Λ(t)`.
pub fn moment_depth_lower(t: u64) -> BoundResult {
    let v = 1.0 / LN_2 + 1.5f64.ln() / (4.0 * t as f64);
    BoundResult::natural(v, t >= 1, 0.0)
}

/// `1/ln 2 + c/√t`, a lower bound on `C(t)` for large `t` when `c < √ln 2`.
pub fn moment_height_lower(t: u64, c: f64) -> BoundResult {
    let v = 1.0 / LN_2 + c / (t as f64).sqrt();
    BoundResult::natural(v, t >= 1 && c > 0.0 && c < LN_2.sqrt(), 0.0)
}

/// `min(1/2, 1/(1 + 4(d+1)(x − 1/2)²))`, for `1/2 < x ≤ 1`.
pub fn simplified_balance_bound(d: usize, x: f64) -> BoundResult {
    let y = x - 0.5;
    let v = (1.0 / (1.0 + 4.0 * (d + 1) as f64 * y * y)).min(0.5);
    BoundResult::natural(v, x > 0.5 && x <= 1.0, 0.0)
}

/// Balance-lemma variance proxy `(n−d)/4 + (n−d)²/(4(d+1))`.
fn balance_v(n: usize, d: usize) -> f64 {
    let m = (n - d) as f64;
    m / 4.0 + m * m / (4.0 * (d + 1) as f64)
}

/// `V/(V + x²)`, bounding `P(N ≥ (n−d)/2 + x)` for the randomized side count.
pub fn balance_bound(n: usize, d: usize, x: f64) -> BoundResult {
    if n < d + 1 || x < 0.0 {
        return BoundResult::natural(f64::NAN, false, 0.0);
    }
    let v = balance_v(n, d);
    BoundResult::natural(v / (v + x * x), true, 0.0)
}

/// `4·exp(−2d(x − 1/2)²)`; vacuous (`valid = false`) when not below 1.
pub fn wagner_hoeffding_tail(d: usize, x: f64) -> BoundResult {
    let y = x - 0.5;
    let v = 4.0 * (-2.0 * d as f64 * y * y).exp();
    BoundResult::natural(v, v < 1.0 && (0.5..=1.0).contains(&x), 0.0)
}

/// `P(Bin(n, x) ≤ k)`, exactly.
pub fn binomial_cdf_exact(n: usize, x: &BigRational, k: usize) -> BigRational {
    // With x = p/q the sum is Σ C(n,j)·p^j·(q−p)^{n−j} over q^n; summing
    // integers avoids a gcd per term.
    let p = x.numer().clone();
    let q = x.denom().clone();
    let r = &q - &p;
    let mut s = BigInt::zero();
    for j in 0..=k.min(n) {
        s += big_binomial(n, j) * num_traits::pow(p.clone(), j) * num_traits::pow(r.clone(), n - j);
    }
    BigRational::new(s, num_traits::pow(q, n))
}

/// `P(B ≥ x)` for `B ~ beta(⌈d/2⌉, ⌈d/2⌉)`, through its binomial dual.
pub fn beta_tail_rational(d: usize, x: &BigRational) -> BigRational {
    assert!(d >= 1, "beta_tail needs d ≥ 1");
    if d % 2 == 1 {
        binomial_cdf_exact(d, x, (d - 1) / 2)
    } else {
        let half = BigRational::new(1.into(), 2.into());
        half * (binomial_cdf_exact(d, x, (d - 2) / 2) + binomial_cdf_exact(d, x, d / 2))
    }
}

/// Float front end of [`beta_tail_rational`]; `x` is taken at its exact
/// binary value.
pub fn beta_tail_exact(d: usize, x: f64) -> BoundResult {
    if d == 0 || !(0.0..=1.0).contains(&x) {
        return BoundResult::natural(f64::NAN, false, 0.0);
    }
    let xr = BigRational::from_float(x).expect("finite");
    let v = beta_tail_rational(d, &xr).to_f64().unwrap_or(f64::NAN);
    BoundResult::natural(v, true, 0.0)
}

/// A symmetric split law `Z = 1/2 + σV`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SplitLaw {
    /// `V = min(1/2, √(1/(2(d+1)U)))`, `U` uniform.
    Example2 { d: usize },
    /// `V = min(1/2, √((E + ln 4)/(2d)))`, `E` standard exponential.
    Wagner { d: usize },
    /// `V = min(1/2, a√(E + b))`.
    Explicit { a: f64, b: f64 },
    /// `V ≡ v`.
    Constant { v: f64 },
}

impl SplitLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            SplitLaw::Example2 { d } | SplitLaw::Wagner { d } => d >= 1,
            SplitLaw::Explicit { a, b } => a > 0.0 && a.is_finite() && b >= 0.0 && b.is_finite(),
            SplitLaw::Constant { v } => (0.0..=0.5).contains(&v),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "split law parameters out of range: {self:?}"
            )))
        }
    }

    /// `(a, b)` when the law has the `min(1/2, a√(E + b))` form.
    pub fn as_explicit(&self) -> Option<(f64, f64)> {
        match *self {
            SplitLaw::Wagner { d } => Some((1.0 / (2.0 * d as f64).sqrt(), 4f64.ln())),
            SplitLaw::Explicit { a, b } => Some((a, b)),
            _ => None,
        }
    }

    /// `P(Z* ≥ x)`.
    pub fn tail(&self, x: f64) -> f64 {
        let y = x - 0.5;
        if y <= 0.0 {
            return 1.0;
        }
        if y > 0.5 {
            return 0.0;
        }
        match *self {
            SplitLaw::Example2 { d } => (1.0 / (2.0 * (d + 1) as f64 * y * y)).min(1.0),
            SplitLaw::Constant { v } => {
                if y <= v {
                    1.0
                } else {
                    0.0
                }
            }
            _ => {
                let (a, b) = self.as_explicit().expect("explicit form");
                (-(y * y / (a * a) - b)).exp().min(1.0)
            }
        }
    }

    /// One draw of `V`.
    pub fn sample_v(&self, rng: &mut SplitMix64) -> f64 {
        match *self {
            SplitLaw::Example2 { d } => (1.0 / (2.0 * (d + 1) as f64 * rng.next_f64_open()))
                .sqrt()
                .min(0.5),
            SplitLaw::Constant { v } => v,
            _ => {
                let (a, b) = self.as_explicit().expect("explicit form");
                (a * (rng.exponential() + b).sqrt()).min(0.5)
            }
        }
    }

    /// `E[g(V)]` and an error estimate.
    pub fn expect<G: Fn(f64) -> f64>(&self, g: G) -> Result<(f64, f64)> {
        self.validate()?;
        match *self {
            SplitLaw::Example2 { d } => {
                let c = 2.0 / (d + 1) as f64;
                if c >= 1.0 {
                    return Ok((g(0.5), 0.0));
                }
                let k = 1.0 / (2.0 * (d + 1) as f64);
                let (i, e) = integrate(|u| g((k / u).sqrt()), c, 1.0)?;
                Ok((c * g(0.5) + i, e))
            }
            SplitLaw::Constant { v } => Ok((g(v), 0.0)),
            _ => {
                let (a, b) = self.as_explicit().expect("explicit form");
                let cap = 1.0 / (4.0 * a * a) - b;
                if cap <= 0.0 {
                    return Ok((g(0.5), 0.0));
                }
                // E = s²; beyond s = 9 the exponential weight is below e^{-81}.
                let s_cap = cap.sqrt();
                let s_end = s_cap.min(9.0);
                let (i, e) = integrate(
                    |s| g(a * (s * s + b).sqrt()) * 2.0 * s * (-s * s).exp(),
                    0.0,
                    s_end,
                )?;
                if s_end == s_cap {
                    Ok((i + (-cap).exp() * g(0.5), e))
                } else {
                    let g_half = g(0.5).abs();
                    Ok((
                        i + (-cap).exp() * g(0.5),
                        e + (-81f64).exp() * g_half.max(1.0),
                    ))
                }
            }
        }
    }
}

/// `ρ(b) = E[exp(√(E + b))]`.
pub fn rho(b: f64) -> Result<BoundResult> {
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::InvalidArgument(format!("rho needs b ≥ 0, got {b}")));
    }
    const S: f64 = 12.0;
    let (i, e) = integrate(|s| 2.0 * s * ((s * s + b).sqrt() - s * s).exp(), 0.0, S)?;
    // √(s² + b) ≤ s + √b and 2s ≤ (2s − 1)·2S/(2S − 1) past S.
    let tail = (b.sqrt() + S - S * S).exp() * 2.0 * S / (2.0 * S - 1.0);
    Ok(BoundResult::natural(i, true, e + tail))
}

/// `γ = 1/(ln 2 − 2a·ln(2ρ(b)))` for `Z* = min(1/2 + a√(E+b), 1)`; invalid when
/// the denominator is not positive.
pub fn dominated_height_gamma(law: &SplitLaw) -> Result<BoundResult> {
    law.validate()?;
    let (a, b) = law.as_explicit().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "gamma needs a law of the a√(E+b) form, got {law:?}"
        ))
    })?;
    let r = rho(b)?;
    let den = LN_2 - 2.0 * a * (2.0 * r.value).ln();
    if den <= 0.0 {
        return Ok(BoundResult::natural(f64::INFINITY, false, r.residual));
    }
    // dγ/dρ = 2a/(ρ·den²).
    let residual = 2.0 * a * r.residual / (r.value * den * den);
    Ok(BoundResult::natural(1.0 / den, true, residual))
}

/// The law dominating the tree in `d` dimensions: `a = 1/√(2d)`, `b = ln 8`.
pub fn theorem_height_law(d: usize) -> SplitLaw {
    SplitLaw::Explicit {
        a: 1.0 / (2.0 * d as f64).sqrt(),
        b: 8f64.ln(),
    }
}

/// `e^λ·(2E[Z*^λ])^γ < 1`.
pub fn height_condition_holds(gamma: f64, law: &SplitLaw, lambda: f64) -> Result<bool> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "height condition needs λ > 0, got {lambda}"
        )));
    }
    let (m, _) = law.expect(|v| (0.5 + v).powf(lambda))?;
    Ok(lambda + gamma * (2.0 * m).ln() < 0.0)
}

/// Lower bound `ln 2 − α·E[V²]` on the logarithmic moment, with the
/// closed forms for the two geometric laws.
pub fn log_moment_lower(law: &SplitLaw) -> Result<BoundResult> {
    log_moment_lower_with(law, alpha())
}

pub fn log_moment_lower_with(law: &SplitLaw, alpha: f64) -> Result<BoundResult> {
    law.validate()?;
    let (v, residual) = match *law {
        SplitLaw::Example2 { d } => {
            let d1 = (d + 1) as f64;
            (LN_2 - alpha / (2.0 * d1) * (1.0 + (d1 / 2.0).ln()), 0.0)
        }
        SplitLaw::Wagner { d } => (LN_2 - alpha * (1.0 + 4f64.ln()) / (2.0 * d as f64), 0.0),
        _ => {
            let (m, e) = law.expect(|v| v * v)?;
            (LN_2 - alpha * m, alpha * e)
        }
    };
    Ok(BoundResult::natural(v, v > 0.0, residual))
}

/// `μ = ln 2 − E[f(2V)]` with `f(v) = ((1+v)ln(1+v) + (1−v)ln(1−v))/2`.
pub fn log_moment(law: &SplitLaw) -> Result<BoundResult> {
    let f = |v: f64| {
        let w = 2.0 * v;
        let neg = if w >= 1.0 {
            0.0
        } else {
            (1.0 - w) * (-w).ln_1p()
        };
        0.5 * ((1.0 + w) * w.ln_1p() + neg)
    };
    let (m, e) = law.expect(f)?;
    let mu = LN_2 - m;
    Ok(BoundResult::natural(mu, mu > 0.0, e))
}

/// `φ(λ) = E[(1/2 + V)^{λ+1} + (1/2 − V)^{λ+1}]`.
pub fn phi(law: &SplitLaw, lambda: f64) -> Result<(f64, f64)> {
    law.expect(|v| (0.5 + v).powf(lambda + 1.0) + (0.5 - v).powf(lambda + 1.0))
}

/// `min(1, n^λ·φ(λ)^t)`, bounding `P(D_n ≥ t)`; valid when below 1.
pub fn depth_tail_bound(n: u64, t: u64, lambda: f64, law: &SplitLaw) -> Result<BoundResult> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "depth tail needs λ > 0, got {lambda}"
        )));
    }
    let (p, e) = phi(law, lambda)?;
    let log_v = lambda * (n as f64).ln() + t as f64 * p.ln();
    let v = log_v.exp().min(1.0);
    Ok(BoundResult::natural(v, log_v < 0.0, v * t as f64 * e / p))
}
