//! q-calculus primitives: q-integers, q-factorials, q-binomials, the
//! q-derivative and both Jackson q-exponentials, all for base q > 1.

mod qexp;
mod signed_log;

pub use qexp::{e_q, e_q_upper};
pub use signed_log::SignedLogValue;

use crate::error::{Error, Result};

/// Validated operator parameters.
///
/// `q` must exceed 1 strictly; the classical Szasz baseline is a separate
/// code path selected by [`QContext::classical`], never `q = 1`.
#[derive(Clone, Copy, Debug)]
pub struct QContext {
    q: f64,
    n: u32,
    classical_baseline: bool,
}

const MIN_Q_EXCESS: f64 = 1e-12;

impl QContext {
    pub fn new(q: f64, n: u32) -> Result<Self> {
        if !q.is_finite() || q <= 1.0 || (q - 1.0) < MIN_Q_EXCESS {
            return Err(Error::InvalidContext(format!(
                "q must exceed 1 by at least {MIN_Q_EXCESS:e} (got {q})"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidContext("n must be at least 1".into()));
        }
        Ok(QContext { q, n, classical_baseline: false })
    }

    /// Context for the classical Szasz comparison path. The q-calculus
    /// operations reject such a context instead of evaluating at q = 1.
    pub fn classical(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidContext("n must be at least 1".into()));
        }
        Ok(QContext { q: 1.0, n, classical_baseline: true })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn is_classical(&self) -> bool {
        self.classical_baseline
    }

    pub fn with_n(&self, n: u32) -> Result<Self> {
        if self.classical_baseline {
            QContext::classical(n)
        } else {
            QContext::new(self.q, n)
        }
    }

    pub(crate) fn require_q(&self) -> Result<()> {
        if self.classical_baseline {
            return Err(Error::InvalidContext(
                "classical baseline context passed to a q-calculus operation".into(),
            ));
        }
        Ok(())
    }

    /// ln q, computed through ln_1p so it stays accurate for q barely
    /// above 1.
    pub(crate) fn ln_q(&self) -> f64 {
        (self.q - 1.0).ln_1p()
    }
}

/// Convergence policy for the series and product evaluations.
#[derive(Clone, Copy, Debug)]
pub struct SeriesPolicy {
    rel_tol: f64,
    max_terms: usize,
    post_peak_window: usize,
}

impl SeriesPolicy {
    pub fn new(rel_tol: f64, max_terms: usize, post_peak_window: usize) -> Result<Self> {
        if !(rel_tol > 0.0) {
            return Err(Error::InvalidPolicy(format!("rel_tol must be positive (got {rel_tol})")));
        }
        if max_terms < 16 {
            return Err(Error::InvalidPolicy(format!("max_terms must be at least 16 (got {max_terms})")));
        }
        if post_peak_window == 0 {
            return Err(Error::InvalidPolicy("post_peak_window must be at least 1".into()));
        }
        Ok(SeriesPolicy { rel_tol, max_terms, post_peak_window })
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    pub fn max_terms(&self) -> usize {
        self.max_terms
    }

    pub fn post_peak_window(&self) -> usize {
        self.post_peak_window
    }
}

impl Default for SeriesPolicy {
    fn default() -> Self {
        SeriesPolicy { rel_tol: 1e-14, max_terms: 5000, post_peak_window: 3 }
    }
}

/// The q-integer [m] = (q^m - 1)/(q - 1).
///
/// Evaluated as expm1(m ln q)/(q - 1), which stays fully accurate when q
/// is barely above 1 (where the naive power loses half the digits) and
/// overflows to +infinity, with a logged warning, when the value itself
/// leaves the f64 range.
pub fn q_integer(m: u32, ctx: &QContext) -> Result<f64> {
    ctx.require_q()?;
    if m == 0 {
        return Ok(0.0);
    }
    let v = (m as f64 * ctx.ln_q()).exp_m1() / (ctx.q - 1.0);
    if v.is_infinite() {
        log::warn!("q_integer overflow: [{m}] at q = {} exceeds f64 range", ctx.q);
    }
    Ok(v)
}

/// ln [m], finite even when [m] itself overflows. Returns -infinity for m = 0.
pub fn q_integer_ln(m: u32, ctx: &QContext) -> Result<f64> {
    ctx.require_q()?;
    if m == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    let mlq = m as f64 * ctx.ln_q();
    // ln[(q^m - 1)/(q-1)] = m ln q + ln(1 - q^-m) - ln(q - 1)
    Ok(mlq + (-(-mlq).exp()).ln_1p() - (ctx.q - 1.0).ln())
}

/// The q-factorial [m]! = [1][2]...[m] with [0]! = 1.
pub fn q_factorial(m: u32, ctx: &QContext) -> Result<SignedLogValue> {
    ctx.require_q()?;
    let mut acc = SignedLogValue::one();
    for j in 1..=m {
        acc = acc.mul(&slv_q_integer(j, ctx));
    }
    Ok(acc)
}

/// [m] as a SignedLogValue, exact in the linear mirror while representable.
pub(crate) fn slv_q_integer(m: u32, ctx: &QContext) -> SignedLogValue {
    if m == 0 {
        return SignedLogValue::zero();
    }
    let v = (m as f64 * ctx.ln_q()).exp_m1() / (ctx.q - 1.0);
    if v.is_finite() {
        SignedLogValue::from_value(v)
    } else {
        SignedLogValue::from_sign_log(1, q_integer_ln(m, ctx).unwrap_or(f64::INFINITY))
    }
}

/// The q-binomial coefficient [m]! / ([k]! [m-k]!), 0 <= k <= m.
pub fn q_binomial(m: u32, k: u32, ctx: &QContext) -> Result<SignedLogValue> {
    ctx.require_q()?;
    if k > m {
        return Err(Error::Domain(format!("q_binomial requires k <= m (got m = {m}, k = {k})")));
    }
    let num = q_factorial(m, ctx)?;
    let den = q_factorial(k, ctx)?.mul(&q_factorial(m - k, ctx)?);
    Ok(num.div(&den))
}

/// The q-derivative (D_q f)(x) = (f(qx) - f(x)) / ((q-1)x).
///
/// At x = 0 the limit is approximated by evaluating the same quotient at
/// h = 1e-6 and h/2 with one Richardson extrapolation step. Non-finite f
/// values propagate into the result.
pub fn q_derivative(f: impl Fn(f64) -> f64, x: f64, ctx: &QContext) -> Result<f64> {
    ctx.require_q()?;
    let quot = |t: f64| (f(ctx.q * t) - f(t)) / ((ctx.q - 1.0) * t);
    if x != 0.0 {
        return Ok(quot(x));
    }
    let h = 1e-6;
    let g1 = quot(h);
    let g2 = quot(h / 2.0);
    Ok(2.0 * g2 - g1)
}
