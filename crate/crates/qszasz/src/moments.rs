//! Raw and central moments of the operator through three mutually
//! cross-validating paths, and the q-Stirling coefficient table.
//!
//! The closed form is M_{n,q}(t^m; x) = sum_{j=1..m} S_q(m,j) x^j / [n]^(m-j)
//! with the q-Stirling numbers S_q filled by the triangular recurrence
//! S_q(m+1, j) = [j] S_q(m, j) + S_q(m, j-1). The alternative routes are
//! the scaling recurrence in (x, q^-1 x, q^-2 x, ...) and the direct
//! weighted series; they share no algebra with the closed form, which is
//! what makes the agreement checks meaningful.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::operator::apply_operator;
use crate::qcore::{q_integer, q_integer_ln, QContext, SeriesPolicy};

/// Largest moment order the polynomial routines accept. Beyond this the
/// [n]-power scaling starts eating into plain-f64 precision.
pub const MAX_MOMENT_ORDER: u32 = 12;

/// Triangular table of q-Stirling numbers S_q(m, j), 0 <= j <= m <= m_max,
/// stored as f64 at a fixed q.
#[derive(Clone, Debug)]
pub struct QStirlingTable {
    q: f64,
    rows: Vec<Vec<f64>>,
}

impl QStirlingTable {
    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn m_max(&self) -> u32 {
        (self.rows.len() - 1) as u32
    }

    /// S_q(m, j); zero outside the triangle.
    pub fn s(&self, m: u32, j: u32) -> f64 {
        if j > m || m as usize >= self.rows.len() {
            return 0.0;
        }
        self.rows[m as usize][j as usize]
    }
}

/// Fills the q-Stirling triangle up to m_max.
pub fn qstirling_table(m_max: u32, ctx: &QContext) -> Result<QStirlingTable> {
    ctx.require_q()?;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m_max as usize + 1);
    rows.push(vec![1.0]); // S(0,0) = 1
    for m in 0..m_max {
        let prev = &rows[m as usize];
        let mut next = vec![0.0; m as usize + 2];
        for j in 1..=(m as usize + 1) {
            let upper = if j <= m as usize { prev[j] } else { 0.0 };
            next[j] = q_integer(j as u32, ctx)? * upper + prev[j - 1];
        }
        rows.push(next);
    }
    Ok(QStirlingTable { q: ctx.q(), rows })
}

/// Classical Stirling numbers of the second kind, same triangle shape:
/// S(m+1, j) = j S(m, j) + S(m, j-1).
pub fn classical_stirling_table(m_max: u32) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m_max as usize + 1);
    rows.push(vec![1.0]);
    for m in 0..m_max as usize {
        let prev = &rows[m];
        let mut next = vec![0.0; m + 2];
        for j in 1..=(m + 1) {
            let upper = if j <= m { prev[j] } else { 0.0 };
            next[j] = j as f64 * upper + prev[j - 1];
        }
        rows.push(next);
    }
    rows
}

/// M_{n,q}(t^m; x) as a polynomial in x: coefficients a_j = S_q(m,j)/[n]^(m-j)
/// for j = 1..m. No constant term; the leading coefficient is 1.
#[derive(Clone, Debug)]
pub struct MomentPolynomial {
    m: u32,
    coeffs: Vec<f64>,
}

impl MomentPolynomial {
    pub fn order(&self) -> u32 {
        self.m
    }

    /// Coefficients a_1..a_m.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &a in self.coeffs.iter().rev() {
            acc = acc * x + a;
        }
        acc * x
    }
}

/// Scales S_q(m,j) by [n]^-(p), dropping to log space when the power
/// overflows.
fn over_bn_pow(s: f64, p: u32, ctx: &QContext) -> Result<f64> {
    if p == 0 {
        return Ok(s);
    }
    let bn = q_integer(ctx.n(), ctx)?;
    let pow = if bn.is_finite() { bn.powi(p as i32) } else { f64::INFINITY };
    if pow.is_finite() {
        Ok(s / pow)
    } else if s == 0.0 {
        Ok(0.0)
    } else {
        Ok((s.ln() - p as f64 * q_integer_ln(ctx.n(), ctx)?).exp())
    }
}

pub fn moment_polynomial(m: u32, ctx: &QContext) -> Result<MomentPolynomial> {
    ctx.require_q()?;
    if m < 1 || m > MAX_MOMENT_ORDER {
        return Err(Error::UnsupportedOrder(m));
    }
    let table = qstirling_table(m, ctx)?;
    let mut coeffs = Vec::with_capacity(m as usize);
    for j in 1..=m {
        coeffs.push(over_bn_pow(table.s(m, j), m - j, ctx)?);
    }
    Ok(MomentPolynomial { m, coeffs })
}

/// M_{n,q}(t^m; x) - x^m, grouped so every term is nonnegative. This form
/// has no cancellation at all, which is what the convergence harness needs
/// when [n] dwarfs the deviation.
pub fn moment_deviation(m: u32, x: f64, ctx: &QContext) -> Result<f64> {
    ctx.require_q()?;
    if m > MAX_MOMENT_ORDER {
        return Err(Error::UnsupportedOrder(m));
    }
    if m == 0 {
        return Ok(0.0);
    }
    let table = qstirling_table(m, ctx)?;
    let mut acc = 0.0;
    for j in (1..m).rev() {
        acc = acc * x + over_bn_pow(table.s(m, j), m - j, ctx)?;
    }
    Ok(acc * x)
}

/// Evaluation route for [`raw_moment`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MomentMethod {
    /// q-Stirling polynomial (closed form).
    Polynomial,
    /// Scaling recurrence over M(t^j; q^-d x), memoized in (j, d).
    Recurrence1,
    /// Direct summation of the weighted series.
    Series,
}

/// M_{n,q}(t^m; x) by the chosen method. The three methods agree to about
/// 1e-9 relative on sane grids; the series route is the brute-force check
/// for the other two.
pub fn raw_moment(
    m: u32,
    x: f64,
    ctx: &QContext,
    method: MomentMethod,
    policy: &SeriesPolicy,
) -> Result<f64> {
    ctx.require_q()?;
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("raw_moment requires x >= 0 (got {x})")));
    }
    if m == 0 {
        return Ok(1.0);
    }
    match method {
        MomentMethod::Polynomial => Ok(moment_polynomial(m, ctx)?.eval(x)),
        MomentMethod::Recurrence1 => {
            if m > MAX_MOMENT_ORDER {
                return Err(Error::UnsupportedOrder(m));
            }
            let mut memo = HashMap::new();
            recurrence_moment(m, 0, x, ctx, &mut memo)
        }
        MomentMethod::Series => apply_operator(|t| t.powi(m as i32), x, ctx, policy),
    }
}

/// M(t^m; q^-d x) through
/// M(t^(m+1); x) = sum_j C(m,j) x q^j / [n]^(m-j) M(t^j; q^-1 x).
fn recurrence_moment(
    m: u32,
    depth: u32,
    x: f64,
    ctx: &QContext,
    memo: &mut HashMap<(u32, u32), f64>,
) -> Result<f64> {
    if m == 0 {
        return Ok(1.0);
    }
    if let Some(&v) = memo.get(&(m, depth)) {
        return Ok(v);
    }
    let xd = x * (-(depth as f64) * ctx.ln_q()).exp();
    let mm = m - 1;
    let mut sum = 0.0;
    let mut qj = 1.0; // q^j
    for j in 0..=mm {
        let inner = recurrence_moment(j, depth + 1, x, ctx, memo)?;
        let coeff = over_bn_pow(binomial(mm, j) * xd * qj, mm - j, ctx)?;
        sum += coeff * inner;
        qj *= ctx.q();
    }
    memo.insert((m, depth), sum);
    Ok(sum)
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k.min(n));
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Central moment M_{n,q}((t-x)^r; x) for 0 <= r <= 8, via the binomial
/// expansion over the moment polynomials. The expansion is grouped by
/// powers of x first, so the leading cancellations happen between exact
/// small coefficients instead of between x^r-sized floats; the r = 2 case
/// reduces to literally x/[n].
pub fn central_moment(r: u32, x: f64, ctx: &QContext) -> Result<f64> {
    ctx.require_q()?;
    if r > 8 {
        return Err(Error::UnsupportedOrder(r));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("central_moment requires x >= 0 (got {x})")));
    }
    if r == 0 {
        return Ok(1.0);
    }
    let table = qstirling_table(r, ctx)?;
    let mut total = 0.0;
    for t in 1..=r {
        // gamma_t = sum_i C(r,i) (-1)^(r-i) S_q(i, t-r+i)
        let mut gamma = 0.0;
        for i in 0..=r {
            let j = (t + i) as i64 - r as i64;
            if j < 0 || j > i as i64 {
                continue;
            }
            let sign = if (r - i) % 2 == 0 { 1.0 } else { -1.0 };
            gamma += sign * binomial(r, i) * table.s(i, j as u32);
        }
        total += over_bn_pow(gamma, r - t, ctx)? * x.powi(t as i32);
    }
    Ok(total)
}

/// Closed-form central moments printed for r = 2, 3, 4:
/// x/[n]; x/[n]^2 + (q-1)x^2/[n]; x/[n]^3 + (q^2+3q-1)x^2/[n]^2 + (q-1)^2 x^3/[n].
pub fn reference_central_moment(r: u32, x: f64, ctx: &QContext) -> Result<f64> {
    ctx.require_q()?;
    let bn = q_integer(ctx.n(), ctx)?;
    let q = ctx.q();
    match r {
        2 => Ok(x / bn),
        3 => Ok(x / (bn * bn) + (q - 1.0) * x * x / bn),
        4 => Ok(x / (bn * bn * bn)
            + (q * q + 3.0 * q - 1.0) * x * x / (bn * bn)
            + (q - 1.0) * (q - 1.0) * x * x * x / bn),
        _ => Err(Error::UnsupportedOrder(r)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pol() -> SeriesPolicy {
        SeriesPolicy::default()
    }

    #[test]
    fn stirling_base_cases() {
        let ctx = QContext::new(1.7, 1).unwrap();
        let t = qstirling_table(6, &ctx).unwrap();
        assert_eq!(t.s(0, 0), 1.0);
        for m in 1..=6 {
            assert_eq!(t.s(m, 0), 0.0);
            assert_eq!(t.s(m, m), 1.0); // forced by the recurrence
        }
        assert_eq!(t.s(2, 5), 0.0);
        assert_eq!(t.s(2, 1), 1.0);
        assert_eq!(t.s(1, 1), 1.0);
    }

    #[test]
    fn stirling_polynomial_identities() {
        for &q in &[1.1, 1.5, 2.0, 3.0] {
            let ctx = QContext::new(q, 1).unwrap();
            let t = qstirling_table(4, &ctx).unwrap();
            assert_relative_eq!(t.s(3, 2), 2.0 + q, max_relative = 1e-13);
            assert_relative_eq!(t.s(4, 2), 3.0 + 3.0 * q + q * q, max_relative = 1e-13);
            assert_relative_eq!(t.s(4, 3), 3.0 + 2.0 * q + q * q, max_relative = 1e-13);
        }
    }

    #[test]
    fn stirling_classical_limit() {
        // independent classical oracle
        fn classical(m: usize, j: usize) -> f64 {
            let mut rows = vec![vec![1.0f64]];
            for mm in 0..m {
                let prev = rows[mm].clone();
                let mut next = vec![0.0; mm + 2];
                for jj in 1..=mm + 1 {
                    let up = if jj <= mm { prev[jj] } else { 0.0 };
                    next[jj] = jj as f64 * up + prev[jj - 1];
                }
                rows.push(next);
            }
            rows[m][j]
        }
        assert_eq!(classical(4, 2), 7.0);
        assert_eq!(classical(4, 3), 6.0);
        assert_eq!(classical(5, 2), 15.0);

        let ctx = QContext::new(1.0 + 1e-12, 1).unwrap();
        let t = qstirling_table(8, &ctx).unwrap();
        for m in 0..=8u32 {
            for j in 0..=m {
                let want = classical(m as usize, j as usize);
                if want != 0.0 {
                    assert_relative_eq!(t.s(m, j), want, max_relative = 1e-6);
                }
            }
        }
    }

    #[test]
    fn stirling_nondecreasing_in_q() {
        let qs = [1.1, 1.3, 1.8, 2.5, 3.0];
        let tables: Vec<_> = qs
            .iter()
            .map(|&q| qstirling_table(6, &QContext::new(q, 1).unwrap()).unwrap())
            .collect();
        for m in 0..=6u32 {
            for j in 0..=m {
                for w in tables.windows(2) {
                    assert!(w[1].s(m, j) >= w[0].s(m, j) - 1e-12);
                    assert!(w[0].s(m, j) >= 0.0);
                }
            }
        }
    }

    #[test]
    fn moment_polynomial_shapes() {
        let ctx = QContext::new(2.0, 3).unwrap();
        let p1 = moment_polynomial(1, &ctx).unwrap();
        assert_eq!(p1.coeffs(), &[1.0]);
        let p2 = moment_polynomial(2, &ctx).unwrap();
        assert_eq!(p2.coeffs().len(), 2);
        assert_relative_eq!(p2.coeffs()[0], 1.0 / 7.0, max_relative = 1e-13);
        assert_eq!(p2.coeffs()[1], 1.0);
        assert_relative_eq!(p2.eval(1.0), 8.0 / 7.0, max_relative = 1e-13);

        // m = 4 at q = 2, n = 2 ([n] = 3): x^4 + 11x^3/3 + 13x^2/9 + x/27
        let ctx = QContext::new(2.0, 2).unwrap();
        let p4 = moment_polynomial(4, &ctx).unwrap();
        assert_relative_eq!(p4.coeffs()[3], 1.0, max_relative = 1e-13);
        assert_relative_eq!(p4.coeffs()[2], 11.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(p4.coeffs()[1], 13.0 / 9.0, max_relative = 1e-12);
        assert_relative_eq!(p4.coeffs()[0], 1.0 / 27.0, max_relative = 1e-12);

        assert!(moment_polynomial(0, &ctx).is_err());
        assert!(moment_polynomial(13, &ctx).is_err());
    }

    #[test]
    fn raw_moment_m3_example() {
        // q = 2, n = 2, x = 2: 8 + (4/3)*4 + (1/9)*2
        let ctx = QContext::new(2.0, 2).unwrap();
        let want = 8.0 + 16.0 / 3.0 + 2.0 / 9.0;
        for method in [MomentMethod::Polynomial, MomentMethod::Recurrence1, MomentMethod::Series] {
            let got = raw_moment(3, 2.0, &ctx, method, &pol()).unwrap();
            assert_relative_eq!(got, want, max_relative = 1e-11);
        }
    }

    #[test]
    fn raw_moment_zero_order() {
        let ctx = QContext::new(1.4, 6).unwrap();
        for method in [MomentMethod::Polynomial, MomentMethod::Recurrence1, MomentMethod::Series] {
            assert_eq!(raw_moment(0, 1.5, &ctx, method, &pol()).unwrap(), 1.0);
        }
    }

    #[test]
    fn cross_method_agreement() {
        let ctx = QContext::new(1.4, 6).unwrap();
        for m in 1..=5u32 {
            let a = raw_moment(m, 1.5, &ctx, MomentMethod::Polynomial, &pol()).unwrap();
            let b = raw_moment(m, 1.5, &ctx, MomentMethod::Recurrence1, &pol()).unwrap();
            let c = raw_moment(m, 1.5, &ctx, MomentMethod::Series, &pol()).unwrap();
            assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "m={m}: poly {a} vs rec {b}");
            assert!((a - c).abs() <= 1e-9 * (1.0 + a.abs()), "m={m}: poly {a} vs series {c}");
        }
    }

    #[test]
    fn central_moment_examples() {
        let ctx = QContext::new(2.0, 2).unwrap(); // [n] = 3
        assert_relative_eq!(central_moment(2, 3.0, &ctx).unwrap(), 1.0, max_relative = 1e-13);
        assert_eq!(central_moment(1, 7.7, &ctx).unwrap(), 0.0);
        assert_eq!(central_moment(0, 7.7, &ctx).unwrap(), 1.0);

        // r = 4, x = 1, q = 2, n = 1: 1 + (q^2+3q-1) + (q-1)^2 = 11
        let ctx = QContext::new(2.0, 1).unwrap();
        assert_relative_eq!(central_moment(4, 1.0, &ctx).unwrap(), 11.0, max_relative = 1e-12);
        assert!(central_moment(9, 1.0, &ctx).is_err());
    }

    #[test]
    fn reference_examples() {
        let ctx = QContext::new(1.1, 3).unwrap();
        let bn = q_integer(3, &ctx).unwrap();
        assert_relative_eq!(
            reference_central_moment(2, 5.0, &ctx).unwrap(),
            5.0 / bn,
            max_relative = 1e-14
        );
        let ctx = QContext::new(1.5, 2).unwrap(); // [n] = 2.5
        assert_relative_eq!(
            reference_central_moment(3, 1.0, &ctx).unwrap(),
            0.36,
            max_relative = 1e-13
        );
        assert_eq!(reference_central_moment(3, 0.0, &ctx).unwrap(), 0.0);
        assert!(reference_central_moment(5, 1.0, &ctx).is_err());
    }

    #[test]
    fn central_matches_reference_and_exact_scaling() {
        for &q in &[1.1, 1.5, 2.0, 3.0] {
            for n in [1u32, 2, 5, 12] {
                let ctx = QContext::new(q, n).unwrap();
                let bn = q_integer(n, &ctx).unwrap();
                for &x in &[0.0, 0.5, 1.0, 2.0, 5.0] {
                    for r in [2u32, 3, 4] {
                        let got = central_moment(r, x, &ctx).unwrap();
                        let want = reference_central_moment(r, x, &ctx).unwrap();
                        assert!(
                            (got - want).abs() <= 1e-10 * (1.0 + want.abs()),
                            "r={r} q={q} n={n} x={x}: {got} vs {want}"
                        );
                    }
                    // [n] mu_2 = x to roundoff
                    let mu2 = central_moment(2, x, &ctx).unwrap();
                    assert!((bn * mu2 - x).abs() <= 1e-14 * (1.0 + x));
                }
            }
        }
    }

    #[test]
    fn limit_consistency() {
        // [n] mu_3 -> (q-1) x^2 and [n] mu_4 -> (q-1)^2 x^3 as n grows
        let q = 1.5;
        let x = 2.0;
        let mut last3 = f64::INFINITY;
        let mut last4 = f64::INFINITY;
        for n in [4u32, 8, 16, 32] {
            let ctx = QContext::new(q, n).unwrap();
            let bn = q_integer(n, &ctx).unwrap();
            let d3 = (bn * central_moment(3, x, &ctx).unwrap() - (q - 1.0) * x * x).abs();
            let d4 =
                (bn * central_moment(4, x, &ctx).unwrap() - (q - 1.0) * (q - 1.0) * x * x * x).abs();
            assert!(d3 < last3 || d3 < 1e-12);
            assert!(d4 < last4 || d4 < 1e-12);
            last3 = d3;
            last4 = d4;
        }
        // error is O(1/[n])
        let ctx = QContext::new(q, 32).unwrap();
        let bn = q_integer(32, &ctx).unwrap();
        assert!(last3 <= 10.0 * x / bn);
    }

    #[test]
    fn deviation_matches_polynomial() {
        let ctx = QContext::new(1.5, 4).unwrap();
        for m in 1..=6u32 {
            for &x in &[0.3, 1.0, 4.2] {
                let dev = moment_deviation(m, x, &ctx).unwrap();
                let full = moment_polynomial(m, &ctx).map(|p| p.eval(x)).unwrap_or(1.0);
                assert!(
                    (dev - (full - x.powi(m as i32))).abs() <= 1e-9 * (1.0 + full.abs()),
                    "m={m} x={x}"
                );
            }
        }
        assert_eq!(moment_deviation(1, 3.0, &ctx).unwrap(), 0.0);
    }
}
