//! Jackson's two q-exponential functions for base q > 1.

use super::{q_integer, q_integer_ln, QContext, SeriesPolicy, SignedLogValue};
use crate::error::{Error, Result};

/// Product factors below this threshold are folded into a closed-form
/// geometric tail correction instead of being multiplied one by one.
const PRODUCT_TAIL_CUT: f64 = 1e-17;

/// e_q(z) = sum z^k/[k]!, entire for q > 1.
///
/// Nonnegative arguments are summed directly (all terms positive). For
/// z < 0 the series alternates with catastrophic cancellation, so the
/// equivalent infinite product prod_(j>=0) (1 + (q-1) z / q^(j+1)) is used
/// instead, counting sign changes explicitly; the result is exactly zero
/// when some factor vanishes (z at one of the real zeros -q^(j+1)/(q-1)).
pub fn e_q(z: f64, ctx: &QContext, policy: &SeriesPolicy) -> Result<SignedLogValue> {
    ctx.require_q()?;
    if z == 0.0 {
        return Ok(SignedLogValue::one());
    }
    if z > 0.0 {
        e_q_series_positive(z, ctx, policy)
    } else {
        e_q_product_negative(z, ctx, policy)
    }
}

fn e_q_series_positive(z: f64, ctx: &QContext, policy: &SeriesPolicy) -> Result<SignedLogValue> {
    let mut sum = 1.0f64;
    let mut term = 1.0f64;
    let mut calm = 0usize;
    for k in 1..=policy.max_terms() {
        let qk = q_integer(k as u32, ctx)?;
        term *= z / qk;
        sum += term;
        if !sum.is_finite() {
            return e_q_series_positive_log(z, ctx, policy);
        }
        if z / qk < 1.0 && term <= policy.rel_tol() * sum {
            calm += 1;
            if calm >= policy.post_peak_window() {
                return Ok(SignedLogValue::from_value(sum));
            }
        } else {
            calm = 0;
        }
    }
    Err(Error::TruncationExhausted {
        max_terms: policy.max_terms(),
        context: format!("e_q series at z = {z}, q = {}", ctx.q()),
    })
}

/// Same sum carried in log space, for arguments whose value overflows f64.
fn e_q_series_positive_log(z: f64, ctx: &QContext, policy: &SeriesPolicy) -> Result<SignedLogValue> {
    let lz = z.ln();
    let mut lsum = 0.0f64;
    let mut lterm = 0.0f64;
    let mut calm = 0usize;
    for k in 1..=policy.max_terms() {
        let lqk = q_integer_ln(k as u32, ctx)?;
        lterm += lz - lqk;
        lsum = log_add_exp(lsum, lterm);
        if lz < lqk && lterm - lsum <= policy.rel_tol().ln() {
            calm += 1;
            if calm >= policy.post_peak_window() {
                return Ok(SignedLogValue::from_sign_log(1, lsum));
            }
        } else {
            calm = 0;
        }
    }
    Err(Error::TruncationExhausted {
        max_terms: policy.max_terms(),
        context: format!("e_q log-series at z = {z}, q = {}", ctx.q()),
    })
}

fn e_q_product_negative(z: f64, ctx: &QContext, policy: &SeriesPolicy) -> Result<SignedLogValue> {
    let q = ctx.q();
    let mut u = (q - 1.0) * z / q;
    let mut acc = SignedLogValue::one();
    for _ in 0..policy.max_terms() {
        if u.abs() < PRODUCT_TAIL_CUT {
            // remaining log-factors: sum ln(1 + u/q^i) ~ sum u/q^i = u q/(q-1)
            let tail = u * q / (q - 1.0);
            return Ok(acc.mul(&SignedLogValue::from_sign_log(1, tail)));
        }
        let f = 1.0 + u;
        if f == 0.0 {
            return Ok(SignedLogValue::zero());
        }
        acc = acc.mul(&SignedLogValue::from_value(f));
        u /= q;
    }
    Err(Error::TruncationExhausted {
        max_terms: policy.max_terms(),
        context: format!("e_q product at z = {z}, q = {}; q close to 1 needs more terms", ctx.q()),
    })
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if a >= b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// Fraction of the stated convergence radius 1/(q-1) actually accepted.
/// The radius bound is enforced with a safety margin rather than at its
/// edge, where the alternating series is already fragile.
const UPPER_DOMAIN_MARGIN: f64 = 0.9;

/// E_q(z) = sum q^(k(k-1)/2) z^k/[k]!, the inverted-base companion of
/// [`e_q`]. Converges for |z| < 1/(q-1); arguments at or beyond
/// 0.9/(q-1) are rejected as a domain error.
pub fn e_q_upper(z: f64, ctx: &QContext, policy: &SeriesPolicy) -> Result<f64> {
    ctx.require_q()?;
    let radius = 1.0 / (ctx.q() - 1.0);
    if z.abs() >= UPPER_DOMAIN_MARGIN * radius {
        return Err(Error::Domain(format!(
            "E_q argument |z| = {} outside the accepted domain |z| < {}",
            z.abs(),
            UPPER_DOMAIN_MARGIN * radius
        )));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    let mut sum = 1.0f64;
    let mut term = 1.0f64;
    let mut qk = 1.0f64; // q^(k-1)
    let mut calm = 0usize;
    for k in 1..=policy.max_terms() {
        term *= qk * z / q_integer(k as u32, ctx)?;
        sum += term;
        qk *= ctx.q();
        if term.abs() <= policy.rel_tol() * sum.abs() {
            calm += 1;
            if calm >= policy.post_peak_window() {
                return Ok(sum);
            }
        } else {
            calm = 0;
        }
    }
    Err(Error::TruncationExhausted {
        max_terms: policy.max_terms(),
        context: format!("E_q series at z = {z}, q = {}", ctx.q()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::q_derivative;
    use approx::assert_relative_eq;

    fn ctx(q: f64) -> QContext {
        QContext::new(q, 1).unwrap()
    }

    fn pol() -> SeriesPolicy {
        SeriesPolicy::default()
    }

    /// Test-side oracle: direct alternating series, safe for small |z|.
    fn e_q_series_oracle(z: f64, q: f64, terms: usize) -> f64 {
        let c = ctx(q);
        let mut sum = 1.0;
        let mut term = 1.0;
        for k in 1..terms {
            term *= z / q_integer(k as u32, &c).unwrap();
            sum += term;
        }
        sum
    }

    /// Test-side oracle: partial products.
    fn e_q_product_oracle(z: f64, q: f64, terms: usize) -> f64 {
        let mut p = 1.0;
        for j in 0..terms {
            p *= 1.0 + (q - 1.0) * z / q.powi(j as i32 + 1);
        }
        p
    }

    #[test]
    fn at_zero() {
        assert_eq!(e_q(0.0, &ctx(2.0), &pol()).unwrap().to_f64(), 1.0);
        assert_eq!(e_q_upper(0.0, &ctx(2.0), &pol()).unwrap(), 1.0);
    }

    #[test]
    fn positive_argument_cross_checked() {
        // series oracle against product oracle, then against the implementation
        let s = e_q_series_oracle(1.0, 2.0, 60);
        let p = e_q_product_oracle(1.0, 2.0, 200);
        assert_relative_eq!(s, p, max_relative = 1e-13);
        // 2.384231029031371724... (40-digit summation of the same series)
        assert_relative_eq!(s, 2.3842310290313717, max_relative = 1e-13);
        let got = e_q(1.0, &ctx(2.0), &pol()).unwrap().to_f64();
        assert_relative_eq!(got, s, max_relative = 1e-13);
    }

    #[test]
    fn zero_of_the_product() {
        // z = -2 at q = 2 hits the first factor: 1 + (2-1)(-2)/2 = 0
        let v = e_q(-2.0, &ctx(2.0), &pol()).unwrap();
        assert_eq!(v.sign(), 0);
        assert_eq!(v.to_f64(), 0.0);
    }

    #[test]
    fn negative_argument_signs() {
        // -3 lies between the zeros -2 and -4 of e_2, so the value is negative
        let v = e_q(-3.0, &ctx(2.0), &pol()).unwrap();
        assert_eq!(v.sign(), -1);
        // -5 lies between -4 and -8: two negative factors, positive value
        let v = e_q(-5.0, &ctx(2.0), &pol()).unwrap();
        assert_eq!(v.sign(), 1);
    }

    #[test]
    fn series_and_product_agree() {
        for &q in &[1.5, 2.0, 3.0] {
            for i in 1..=40 {
                let z = -2.0 * i as f64 / 40.0;
                let got = e_q(z, &ctx(q), &pol()).unwrap().to_f64();
                let oracle = e_q_series_oracle(z, q, 80);
                if oracle.abs() > 1e-6 {
                    assert_relative_eq!(got, oracle, max_relative = 1e-12);
                } else {
                    assert!((got - oracle).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn eigen_identity() {
        // D_q e_q(a z) = a e_q(a z): e_q is the eigenfunction of D_q
        let c = ctx(2.0);
        for &a in &[0.5, -0.5] {
            for i in 1..=8 {
                let z = 0.25 * i as f64;
                let f = |t: f64| e_q(a * t, &c, &pol()).unwrap().to_f64();
                let lhs = q_derivative(f, z, &c).unwrap();
                let rhs = a * e_q(a * z, &c, &pol()).unwrap().to_f64();
                assert!(
                    (lhs - rhs).abs() <= 1e-8 * (1.0 + rhs.abs()),
                    "a={a} z={z}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn upper_difference_equation() {
        // D_q E_q(a z) = a E_q(q a z)
        let c = ctx(2.0);
        let a = 0.1;
        for i in 1..=8 {
            let z = 0.25 * i as f64;
            let f = |t: f64| e_q_upper(a * t, &c, &pol()).unwrap();
            let lhs = q_derivative(f, z, &c).unwrap();
            let rhs = a * e_q_upper(c.q() * a * z, &c, &pol()).unwrap();
            assert!((lhs - rhs).abs() <= 1e-8 * (1.0 + rhs.abs()), "z={z}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn upper_series_value() {
        // 50-term direct summation oracle
        let c = ctx(2.0);
        let z = 0.3;
        let mut sum = 1.0;
        let mut term = 1.0;
        let mut qk = 1.0;
        for k in 1..50 {
            term *= qk * z / q_integer(k, &c).unwrap();
            qk *= 2.0;
            sum += term;
        }
        assert_relative_eq!(e_q_upper(z, &c, &pol()).unwrap(), sum, max_relative = 1e-13);
    }

    #[test]
    fn upper_domain_enforced() {
        let c = ctx(2.0);
        assert!(e_q_upper(0.9, &c, &pol()).is_err());
        assert!(e_q_upper(-0.95, &c, &pol()).is_err());
        assert!(e_q_upper(0.3, &c, &pol()).is_ok());
    }

    #[test]
    fn product_exhaustion_near_one() {
        // q this close to 1 cannot converge within the default budget
        let c = QContext::new(1.0 + 1e-9, 1).unwrap();
        let err = e_q(-1.0, &c, &pol()).unwrap_err();
        assert!(matches!(err, Error::TruncationExhausted { .. }));
    }
}
