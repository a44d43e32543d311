//! Special functions used by the likelihood-ratio processes.
//!
//! Everything here is a pure function of its arguments and works in natural-log
//! space. The noncentral Student-t density is evaluated through
//!
//! ```text
//! f(t; ν, λ) = ν^{ν/2} e^{-λ²/2} / (√π Γ(ν/2) (ν+t²)^{(ν+1)/2}) · S(ν, λx),
//! x = t√2 / √(ν+t²),
//! S(ν, z) = Σ_j Γ((ν+j+1)/2) z^j / j!  =  2 ∫_0^∞ r^ν exp(-r² + z r) dr.
//! ```
//!
//! `S` is summed as a series in log space. When `z < 0` the terms alternate and
//! lose digits to cancellation; once the predicted or observed loss passes
//! three decimal digits the integral form is used instead (trapezoid rule in
//! `w = ln r`, which converges geometrically for this entire integrand).
//! As `t → ±∞` the polynomial prefactor cancels in density ratios and
//! `x → ±√2`, which gives the tail limit of [`nct_logratio`].

use std::f64::consts::{LN_2, PI, SQRT_2};
use std::sync::OnceLock;

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const LN_SQRT_PI: f64 = 0.572_364_942_924_700_1;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Terms of the noncentral-t series below this fraction of the running sum stop it.
const SERIES_REL_CUTOFF: f64 = 1e-17;
const SERIES_MAX_TERMS: usize = 10_000;
/// Allowed cancellation (in nats) before switching to the integral form.
const MAX_CANCELLATION: f64 = 6.907_755_278_982_137; // ln(1e3)

/// Degrees of freedom and noncentrality of a noncentral Student-t law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoncentralTParams {
    nu: f64,
    lambda: f64,
}

impl NoncentralTParams {
    pub fn new(nu: f64, lambda: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::domain("NoncentralTParams", format!("degrees of freedom must be positive and finite, got {nu}")));
        }
        if !lambda.is_finite() {
            return Err(Error::domain("NoncentralTParams", format!("noncentrality must be finite, got {lambda}")));
        }
        Ok(NoncentralTParams { nu, lambda })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

// ---------------------------------------------------------------------------
// log-sum-exp
// ---------------------------------------------------------------------------

/// `ln(e^a + e^b)` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln Σ exp(xs)`; `-∞` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let mut acc = LogSumExp::new();
    for &x in xs {
        acc.push(x);
    }
    acc.value()
}

/// Streaming log-sum-exp with a running maximum.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    scaled: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        LogSumExp { max: f64::NEG_INFINITY, scaled: 0.0 }
    }

    pub fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.scaled = self.scaled * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.scaled += (x - self.max).exp();
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

// ---------------------------------------------------------------------------
// log-gamma
// ---------------------------------------------------------------------------

/// ζ(k) for k = 0..=MAX_ZETA (entries 0 and 1 unused), by Euler–Maclaurin.
fn zeta_table() -> &'static [f64] {
    const MAX_ZETA: usize = 64;
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let big_n = 100.0_f64;
        let mut t = vec![f64::NAN; MAX_ZETA + 1];
        for (k, slot) in t.iter_mut().enumerate().skip(2) {
            let s = k as f64;
            let mut sum = 0.0;
            for m in (1..100).rev() {
                sum += (m as f64).powf(-s);
            }
            let tail = big_n.powf(1.0 - s) / (s - 1.0) + 0.5 * big_n.powf(-s) + s / 12.0 * big_n.powf(-s - 1.0)
                - s * (s + 1.0) * (s + 2.0) / 720.0 * big_n.powf(-s - 3.0)
                + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) / 30240.0 * big_n.powf(-s - 5.0);
            *slot = sum + tail;
        }
        t
    })
}

/// `ln Γ(1 + eps)` for `|eps| ≤ 1/2` from the zeta-function Taylor series.
fn ln_gamma_1p_series(eps: f64) -> f64 {
    let zeta = zeta_table();
    let mut acc = 0.0;
    for k in (2..zeta.len()).rev() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc = acc * eps + sign * zeta[k] / k as f64;
    }
    // acc holds Σ_{k≥2} (-1)^k ζ(k)/k · eps^{k-2}
    eps * (-EULER_GAMMA + eps * acc)
}

fn ln_gamma_stirling(x: f64) -> f64 {
    const C: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
        -3617.0 / 122_400.0,
    ];
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut corr = 0.0;
    for &c in C.iter().rev() {
        corr = corr * inv2 + c;
    }
    (x - 0.5) * x.ln() - x + LN_SQRT_2PI + corr * inv
}

/// Unchecked `ln Γ(x)` for finite `x > 0`.
pub(crate) fn ln_gamma(x: f64) -> f64 {
    if (0.5..=1.5).contains(&x) {
        return ln_gamma_1p_series(x - 1.0);
    }
    if (1.5..=2.5).contains(&x) {
        let eps = x - 2.0;
        return eps.ln_1p() + ln_gamma_1p_series(eps);
    }
    if x >= 10.0 {
        return ln_gamma_stirling(x);
    }
    // Shift into the asymptotic range: Γ(x) = Γ(x+m) / (x(x+1)...(x+m-1)).
    let mut shifted = x;
    let mut prod = 1.0;
    while shifted < 10.0 {
        prod *= shifted;
        shifted += 1.0;
    }
    ln_gamma_stirling(shifted) - prod.ln()
}

/// Natural log of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::domain("log_gamma", format!("argument must be positive and finite, got {x}")));
    }
    Ok(ln_gamma(x))
}

// ---------------------------------------------------------------------------
// normal CDF
// ---------------------------------------------------------------------------

/// Mills ratio `R(x) = (1 − Φ(x)) / φ(x)` for `x ≥ 3`, from Laplace's
/// continued fraction `1/(x+1/(x+2/(x+3/(x+…))))` (modified Lentz).
fn mills_ratio(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / f
}

/// `(Φ(x) − ½) / φ(x)` by the positive-term series `Σ x^{2k+1}/(2k+1)!!`.
fn centered_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 1.0;
    while term.abs() > 1e-17 * sum.abs() {
        term *= x2 / (2.0 * k + 1.0);
        sum += term;
        k += 1.0;
    }
    sum
}

fn ln_norm_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

const SERIES_LIMIT: f64 = 3.0;

/// Standard normal CDF Φ(x).
///
/// Inside `|x| < 3` the centred series has only positive terms; outside, the
/// tail comes from the Mills-ratio continued fraction, so the small tail is
/// accurate in relative terms.
pub fn norm_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain("norm_cdf", format!("argument must be finite, got {x}")));
    }
    if x.abs() < SERIES_LIMIT {
        return Ok(0.5 + ln_norm_pdf(x).exp() * centered_series(x));
    }
    let tail = (ln_norm_pdf(x) + mills_ratio(x.abs()).ln()).exp();
    Ok(if x > 0.0 { 1.0 - tail } else { tail })
}

/// `ln Φ(x)`, accurate in both tails and free of underflow.
pub fn log_norm_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain("log_norm_cdf", format!("argument must be finite, got {x}")));
    }
    if x <= -SERIES_LIMIT {
        return Ok(ln_norm_pdf(x) + mills_ratio(-x).ln());
    }
    if x < 0.0 {
        return Ok(norm_cdf(x)?.ln());
    }
    // ln(1 − Φ(−x))
    Ok((-norm_cdf(-x)?).ln_1p())
}

// ---------------------------------------------------------------------------
// noncentral Student-t
// ---------------------------------------------------------------------------

/// Signed log-space series for `ln S(ν, z)`; `None` when it cannot deliver
/// full precision (term cap, or cancellation beyond [`MAX_CANCELLATION`]).
fn log_s_series(nu: f64, z: f64) -> Option<f64> {
    let base0 = ln_gamma(0.5 * (nu + 1.0));
    if z == 0.0 {
        return Some(base0);
    }
    let ln_abs_z = z.abs().ln();
    let negative = z < 0.0;

    let mut pos = LogSumExp::new();
    let mut neg = LogSumExp::new();
    // Two interleaved recurrences (even and odd j) keep lgamma out of the loop.
    let mut even = base0;
    let mut odd = ln_gamma(0.5 * (nu + 2.0)) + ln_abs_z;
    let two_ln_z = 2.0 * ln_abs_z;
    let cutoff = SERIES_REL_CUTOFF.ln();

    let mut j = 0usize;
    while j < SERIES_MAX_TERMS {
        pos.push(even);
        if negative {
            neg.push(odd);
        } else {
            pos.push(odd);
        }
        let running = log_add_exp(pos.value(), neg.value());
        // Both chains shrink once (ν+j+1) z² < 2 (j+1)(j+2).
        let shrinking = (nu + j as f64 + 1.0) * z * z < 2.0 * (j as f64 + 1.0) * (j as f64 + 2.0);
        if shrinking && even - running < cutoff && odd - running < cutoff {
            let lp = pos.value();
            let ln = neg.value();
            if ln == f64::NEG_INFINITY {
                return Some(lp);
            }
            if ln >= lp {
                return None;
            }
            let value = lp + (-(ln - lp).exp()).ln_1p();
            return if lp - value > MAX_CANCELLATION { None } else { Some(value) };
        }
        let jf = j as f64;
        even += (0.5 * (nu + jf + 1.0)).ln() + two_ln_z - ((jf + 1.0) * (jf + 2.0)).ln();
        odd += (0.5 * (nu + jf + 2.0)).ln() + two_ln_z - ((jf + 2.0) * (jf + 3.0)).ln();
        j += 2;
    }
    None
}

/// `ln S(ν, z)` from the integral `2 ∫_0^∞ r^ν e^{-r²+zr} dr`, substituting
/// `r = e^w` and applying the trapezoid rule around the mode.
fn log_s_integral(nu: f64, z: f64) -> f64 {
    let a = nu + 1.0;
    let log_g = |w: f64| {
        let r = w.exp();
        a * w - r * r + z * r
    };
    let r0 = (z + (z * z + 8.0 * a).sqrt()) / 4.0;
    let w0 = r0.ln();
    let peak = log_g(w0);
    let sigma = 1.0 / (2.0 * r0 * r0 + a).sqrt();
    let h = (sigma / 3.0).min(0.1);
    let floor = peak - 40.0;

    let mut acc = 1.0; // mode, scaled by e^{-peak}
    for dir in [-1.0, 1.0] {
        let mut i = 1.0;
        loop {
            let lg = log_g(w0 + dir * i * h);
            acc += (lg - peak).exp();
            if lg < floor {
                break;
            }
            i += 1.0;
        }
    }
    LN_2 + peak + (acc * h).ln()
}

/// Cancellation the alternating series would suffer, in nats (≈ 2|z|·mode).
fn predicted_cancellation(nu: f64, z: f64) -> f64 {
    if z >= 0.0 {
        return 0.0;
    }
    let a = -z;
    let r0 = (a + (a * a + 8.0 * (nu + 1.0)).sqrt()) / 4.0;
    2.0 * a * r0
}

fn log_s(nu: f64, z: f64) -> f64 {
    if predicted_cancellation(nu, z) > 2.0 * MAX_CANCELLATION {
        return log_s_integral(nu, z);
    }
    log_s_series(nu, z).unwrap_or_else(|| log_s_integral(nu, z))
}

/// `(ln(ν+t²), t√2/√(ν+t²))` without overflow for large |t|.
fn nct_geometry(t: f64, nu: f64) -> (f64, f64) {
    let a = t.abs();
    if a > 1.0 {
        let inv2 = nu / (a * a);
        let ln_denom = 2.0 * a.ln() + inv2.ln_1p();
        let x = t.signum() * SQRT_2 / (1.0 + inv2).sqrt();
        (ln_denom, x)
    } else {
        let d = nu + t * t;
        (d.ln(), t * SQRT_2 / d.sqrt())
    }
}

/// Log-density of the noncentral Student-t distribution at `t`.
pub fn nct_logpdf(t: f64, params: NoncentralTParams) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::domain("nct_logpdf", format!("t must be finite, got {t}")));
    }
    let NoncentralTParams { nu, lambda } = params;
    let (ln_denom, x) = nct_geometry(t, nu);
    let prefactor = 0.5 * nu * nu.ln() - LN_SQRT_PI - ln_gamma(0.5 * nu) - 0.5 * (nu + 1.0) * ln_denom;
    Ok(prefactor - 0.5 * lambda * lambda + log_s(nu, lambda * x))
}

/// `ln f_{T(ν,λ⁺)}(t) − ln f_{T(ν,λ₀)}(t)`; `t = ±∞` gives the tail limit.
pub fn nct_logratio(t: f64, nu: f64, lambda_plus: f64, lambda_0: f64) -> Result<f64> {
    if t.is_nan() {
        return Err(Error::domain("nct_logratio", "t is NaN"));
    }
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::domain("nct_logratio", format!("degrees of freedom must be positive, got {nu}")));
    }
    if !(lambda_plus.is_finite() && lambda_0.is_finite()) {
        return Err(Error::domain("nct_logratio", "noncentralities must be finite"));
    }
    if lambda_plus == lambda_0 {
        return Ok(0.0);
    }
    let x = if t.is_infinite() { t.signum() * SQRT_2 } else { nct_geometry(t, nu).1 };
    let shift = -0.5 * (lambda_plus - lambda_0) * (lambda_plus + lambda_0);
    Ok(shift + log_s(nu, lambda_plus * x) - log_s(nu, lambda_0 * x))
}

/// Central Student-t log-density; the `λ = 0` special case in closed form.
pub fn t_logpdf(t: f64, nu: f64) -> Result<f64> {
    if !t.is_finite() || !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::domain("t_logpdf", format!("invalid arguments t={t}, nu={nu}")));
    }
    Ok(ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * PI).ln()
        - 0.5 * (nu + 1.0) * (t * t / nu).ln_1p())
}

/// Log-density at `q` of `s · χ²_ν`.
pub fn chisq_scaled_logpdf(q: f64, nu: f64, s: f64) -> Result<f64> {
    for (name, v) in [("q", q), ("nu", nu), ("s", s)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::domain("chisq_scaled_logpdf", format!("{name} must be positive and finite, got {v}")));
        }
    }
    let x = q / s;
    Ok((0.5 * nu - 1.0) * x.ln() - 0.5 * x - 0.5 * nu * LN_2 - ln_gamma(0.5 * nu) - s.ln())
}
