//! The q-Szasz operator: weights s_nk(q;x), truncated weight tables,
//! application to functions, the classical Szasz baseline, and sign
//! diagnostics.
//!
//! A weight is
//!
//! ```text
//! s_nk(q;x) = q^(-k(k-1)/2) [n]^k x^k / [k]!  *  e_q(-[n] q^-k x)
//! ```
//!
//! For (q-1)[n]x <= q every factor of the e_q product is positive and the
//! weights behave like a discrete probability mass. Beyond that point e_q
//! alternates between its real zeros and the weights grow enormous while
//! still summing to one, so the table silently switches its internal
//! arithmetic to fixed-width float expansions; the f64 values exposed to
//! callers are rounded views of those.

use crate::error::{Error, Result};
use crate::ext::{Ext, Scalar};
use crate::qcore::{e_q, q_factorial, q_integer, q_integer_ln, slv_q_integer};
use crate::qcore::{QContext, SeriesPolicy, SignedLogValue};

/// Product factors smaller than 2^-70 go into the closed-form tail of the
/// weight kernel's e_q chain.
const CHAIN_TAIL_CUT: f64 = 8.470329472543003e-22; // 2^-70

/// Threshold below which a weight counts as negative for diagnostics.
const NEGATIVE_WEIGHT_TOL: f64 = -1e-13;

/// Truncated weight sequence s_n0..s_nK at a fixed x, with the nodes
/// [k]/[n] and truncation metadata.
#[derive(Clone, Debug)]
pub struct WeightTable {
    ctx: QContext,
    x: f64,
    weights: Vec<f64>,
    nodes: Vec<f64>,
    tail_bound: f64,
    partition_defect: f64,
    sum_w: f64,
    rel_tol: f64,
    ext: Option<Vec<Ext>>,
}

impl WeightTable {
    pub fn ctx(&self) -> &QContext {
        &self.ctx
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    /// Truncation index K; the table holds K+1 entries.
    pub fn k_max(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Evaluation nodes [k]/[n], strictly increasing.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Estimate for the neglected tail beyond K.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// |sum of weights - 1|.
    pub fn partition_defect(&self) -> f64 {
        self.partition_defect
    }

    /// True when the table was computed through the extended-precision
    /// kernel (alternating-sign regime).
    pub fn is_extended(&self) -> bool {
        self.ext.is_some()
    }

    /// Applies the operator to `f`: sum of f(node_k) * w_k.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        let negligible = self.rel_tol * (1.0 + self.sum_w.abs());
        match &self.ext {
            Some(ws) => {
                let mut acc = Ext::zero();
                for (k, w) in ws.iter().enumerate() {
                    let fv = f(self.nodes[k]);
                    if !fv.is_finite() {
                        if self.weights[k].abs() > negligible {
                            return Err(Error::NonFiniteAtNode { k, node: self.nodes[k] });
                        }
                        continue;
                    }
                    acc = acc.add(&w.mul_f64(fv));
                }
                Ok(acc.to_f64())
            }
            None => {
                // Neumaier-compensated sum
                let mut s = 0.0f64;
                let mut c = 0.0f64;
                for (k, &w) in self.weights.iter().enumerate() {
                    let fv = f(self.nodes[k]);
                    if !fv.is_finite() {
                        if w.abs() > negligible {
                            return Err(Error::NonFiniteAtNode { k, node: self.nodes[k] });
                        }
                        continue;
                    }
                    let t = w * fv;
                    let sum = s + t;
                    c += if s.abs() >= t.abs() { (s - sum) + t } else { (t - sum) + s };
                    s = sum;
                }
                Ok(s + c)
            }
        }
    }
}

struct KernelOut<S: Scalar> {
    weights: Vec<S>,
    weights_f64: Vec<f64>,
    nodes: Vec<f64>,
    partition_sum: S,
    tail_bound: f64,
}

/// Stopping rule shared by the q and classical tables: stop after
/// `window` consecutive terms past the magnitude peak that each stay
/// below rel_tol times the running sum.
///
/// The comparison scale is the *cancelled* running sum, not the absolute
/// mass. In the alternating regime the absolute mass can exceed the true
/// sum by dozens of orders of magnitude, and a threshold based on it
/// would discard terms that still matter; against the cancelled sum the
/// threshold stays honest in both regimes (they coincide when all
/// weights are positive).
struct TruncationState {
    max_abs: f64,
    calm: usize,
    rel_tol: f64,
    window: usize,
}

impl TruncationState {
    fn new(policy: &SeriesPolicy) -> Self {
        TruncationState {
            max_abs: 0.0,
            calm: 0,
            rel_tol: policy.rel_tol(),
            window: policy.post_peak_window(),
        }
    }

    /// Feeds |term k| and the current |running sum|; true once the table
    /// may stop at this k.
    fn push(&mut self, a: f64, partial_abs: f64) -> bool {
        if a >= self.max_abs {
            self.max_abs = a;
            self.calm = 0;
            return false;
        }
        if a < self.rel_tol * partial_abs {
            self.calm += 1;
            self.calm >= self.window
        } else {
            self.calm = 0;
            false
        }
    }
}

fn weight_kernel<S: Scalar>(x: f64, ctx: &QContext, policy: &SeriesPolicy) -> Result<KernelOut<S>> {
    let q = ctx.q();
    let one = S::s_one();
    let qs = S::s_from(q);
    let qm1 = qs.s_sub(one);
    let inv_q = one.s_div(qs);
    let inv_qm1 = one.s_div(qm1);

    let qn = qs.s_powi(ctx.n());
    if !qn.s_to().is_finite() {
        return Err(Error::InvalidContext(format!(
            "q^n = {}^{} exceeds the representable range",
            q,
            ctx.n()
        )));
    }
    let bn = qn.s_sub(one).s_mul(inv_qm1); // [n]
    let a = bn.s_mul_f64(x); // [n] x

    // e_q chain: factor(t) = 1 - (q-1)[n]x / q^(t+1); e_q(-[n] q^-k x) is
    // the suffix product over t >= k times the closed-form tail.
    let mut factors: Vec<S> = Vec::new();
    let mut u = a.s_mul(qm1).s_mul(inv_q);
    if !u.s_to().is_finite() {
        return Err(Error::InvalidContext(format!(
            "operator scale [n]x = {} exceeds the representable range",
            a.s_to()
        )));
    }
    while u.s_to().abs() >= CHAIN_TAIL_CUT {
        factors.push(one.s_sub(u));
        u = u.s_mul(inv_q);
        if factors.len() > policy.max_terms() {
            return Err(Error::TruncationExhausted {
                max_terms: policy.max_terms(),
                context: format!(
                    "e_q product chain at x = {x}, q = {q}, n = {}; q this close to 1 needs a larger max_terms",
                    ctx.n()
                ),
            });
        }
    }
    let deep = factors.len();

    // tail = exp(S1 - S2/2 + S3/3), S_m = u^m q^m/(q^m - 1); |u| < 2^-70
    // makes the neglected S4 term irrelevant even at extended precision.
    let tail = {
        let q2 = qs.s_mul(qs);
        let q3 = q2.s_mul(qs);
        let u2 = u.s_mul(u);
        let u3 = u2.s_mul(u);
        let s1 = u.s_mul(qs).s_div(qs.s_sub(one));
        let s2 = u2.s_mul(q2).s_div(q2.s_sub(one));
        let s3 = u3.s_mul(q3).s_div(q3.s_sub(one));
        let l = s1.s_sub(s2.s_mul_f64(0.5)).s_add(s3.s_mul_f64(1.0 / 3.0));
        let l2 = l.s_mul(l);
        one.s_add(l).s_add(l2.s_mul_f64(0.5)).s_add(l2.s_mul(l).s_mul_f64(1.0 / 6.0))
    };

    let mut eq_chain: Vec<S> = vec![S::s_zero(); deep + 1];
    eq_chain[deep] = tail;
    for k in (0..deep).rev() {
        eq_chain[k] = factors[k].s_mul(eq_chain[k + 1]);
    }

    let ln_n = q_integer_ln(ctx.n(), ctx)?;
    let bn_f64 = q_integer(ctx.n(), ctx)?;

    let mut weights: Vec<S> = Vec::new();
    let mut weights_f64: Vec<f64> = Vec::new();
    let mut nodes: Vec<f64> = Vec::new();
    let mut partition = S::s_zero();
    let mut state = TruncationState::new(policy);

    // pre_k = [n]^k x^k / (q^(k(k-1)/2) [k]!), via
    // pre_(k+1) = pre_k * [n]x / (q^k [k+1])
    let mut pre = one;
    let mut q_pow_k = one; // q^k
    let mut q_pow_k1 = qs; // q^(k+1)
    let mut k = 0usize;
    loop {
        let eqk = if k <= deep { eq_chain[k] } else { one };
        let w = pre.s_mul(eqk);
        let wf = w.s_to();
        if !wf.is_finite() {
            return Err(Error::NonFinite { what: format!("weight k = {k}"), x });
        }

        let node = {
            let bk = q_integer(k as u32, ctx)?;
            if bk.is_finite() && bn_f64.is_finite() {
                bk / bn_f64
            } else {
                (q_integer_ln(k as u32, ctx)? - ln_n).exp()
            }
        };

        weights.push(w);
        weights_f64.push(wf);
        nodes.push(node);
        partition = partition.s_add(w);

        if state.push(wf.abs(), partition.s_to().abs()) {
            break;
        }
        if k + 1 > policy.max_terms() {
            return Err(Error::TruncationExhausted {
                max_terms: policy.max_terms(),
                context: format!("weight table at x = {x}, q = {q}, n = {}", ctx.n()),
            });
        }

        let bk1 = q_pow_k1.s_sub(one).s_mul(inv_qm1); // [k+1]
        pre = pre.s_mul(a).s_div(q_pow_k.s_mul(bk1));
        q_pow_k = q_pow_k.s_mul_f64(q);
        q_pow_k1 = q_pow_k1.s_mul_f64(q);
        k += 1;
    }

    let kk = weights_f64.len() - 1;
    let tail_bound = if kk == 0 {
        0.0
    } else {
        let r = (weights_f64[kk].abs() / weights_f64[kk - 1].abs()).min(0.99);
        if r.is_finite() {
            weights_f64[kk].abs() * r / (1.0 - r)
        } else {
            0.0
        }
    };

    Ok(KernelOut {
        weights,
        weights_f64,
        nodes,
        partition_sum: partition,
        tail_bound,
    })
}

/// Builds the truncated weight table at x >= 0.
///
/// The truncation index is the smallest k past the magnitude peak at which
/// `post_peak_window` consecutive weights stay below rel_tol times the
/// accumulated absolute mass.
pub fn weight_table(x: f64, ctx: &QContext, policy: &SeriesPolicy) -> Result<WeightTable> {
    ctx.require_q()?;
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("weight_table requires x >= 0 (got {x})")));
    }
    if x == 0.0 {
        return Ok(WeightTable {
            ctx: *ctx,
            x,
            weights: vec![1.0],
            nodes: vec![0.0],
            tail_bound: 0.0,
            partition_defect: 0.0,
            sum_w: 1.0,
            rel_tol: policy.rel_tol(),
            ext: None,
        });
    }

    // All e_q factors stay positive iff (q-1)[n]x/q <= 1; only then is the
    // plain f64 kernel trustworthy.
    let bn = q_integer(ctx.n(), ctx)?;
    let positive_regime =
        bn.is_finite() && (ctx.q() - 1.0) * bn * x / ctx.q() <= 1.0;

    if positive_regime {
        if let Ok(out) = weight_kernel::<f64>(x, ctx, policy) {
            let defect = (out.partition_sum - 1.0).abs();
            let clean = out.weights_f64.iter().all(|w| w.is_finite() && *w >= 0.0)
                && defect <= 10.0 * policy.rel_tol();
            if clean {
                return Ok(WeightTable {
                    ctx: *ctx,
                    x,
                    weights: out.weights_f64,
                    nodes: out.nodes,
                    tail_bound: out.tail_bound,
                    partition_defect: defect,
                    sum_w: out.partition_sum,
                    rel_tol: policy.rel_tol(),
                    ext: None,
                });
            }
        }
    }

    let out = weight_kernel::<Ext>(x, ctx, policy)?;
    let defect = out.partition_sum.add_f64(-1.0).abs_f64();
    Ok(WeightTable {
        ctx: *ctx,
        x,
        weights: out.weights_f64,
        nodes: out.nodes,
        tail_bound: out.tail_bound,
        partition_defect: defect,
        sum_w: out.partition_sum.to_f64(),
        rel_tol: policy.rel_tol(),
        ext: Some(out.weights),
    })
}

/// Single weight s_nk(q;x), assembled in signed-log form and converted at
/// the end. weight(0, 0) = 1 and weight(k > 0, 0) = 0.
pub fn weight(k: u32, x: f64, ctx: &QContext, policy: &SeriesPolicy) -> Result<f64> {
    ctx.require_q()?;
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("weight requires x >= 0 (got {x})")));
    }
    if x == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    // -[n] q^-k x, kept finite through logs even when [n] overflows
    let z = -((q_integer_ln(ctx.n(), ctx)? + x.ln() - k as f64 * ctx.ln_q()).exp());
    if !z.is_finite() {
        return Err(Error::NonFinite { what: format!("e_q argument for weight k = {k}"), x });
    }
    let eq = e_q(z, ctx, policy)?;
    let tri = SignedLogValue::from_sign_log(1, -(k as f64) * (k as f64 - 1.0) / 2.0 * ctx.ln_q());
    let power = slv_q_integer(ctx.n(), ctx).mul(&SignedLogValue::from_value(x)).powi(k);
    let w = tri.mul(&power).div(&q_factorial(k, ctx)?).mul(&eq);
    Ok(w.to_f64())
}

/// M_{n,q}(f; x) (or the classical S_n(f; x) when the context carries the
/// classical-baseline flag).
pub fn apply_operator(
    f: impl Fn(f64) -> f64,
    x: f64,
    ctx: &QContext,
    policy: &SeriesPolicy,
) -> Result<f64> {
    if ctx.is_classical() {
        return classical_szasz(f, x, ctx.n(), policy);
    }
    weight_table(x, ctx, policy)?.apply(f)
}

/// Classical Szasz operator S_n(f;x) = sum f(k/n) e^{-nx} (nx)^k / k!,
/// truncated by the same post-peak policy. Never touches q-formulas.
pub fn classical_szasz(
    f: impl Fn(f64) -> f64,
    x: f64,
    n: u32,
    policy: &SeriesPolicy,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidContext("n must be at least 1".into()));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("classical_szasz requires x >= 0 (got {x})")));
    }
    if x == 0.0 {
        let v = f(0.0);
        return if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteAtNode { k: 0, node: 0.0 })
        };
    }
    let nx = n as f64 * x;
    let lnx = nx.ln();
    let mut lw = -nx; // ln of the Poisson mass at k
    let mut state = TruncationState::new(policy);
    let mut wsum = 0.0f64;
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    let mut k = 0usize;
    loop {
        let w = lw.exp();
        wsum += w;
        let node = k as f64 / n as f64;
        let fv = f(node);
        if !fv.is_finite() {
            if w > policy.rel_tol() * (1.0 + wsum) {
                return Err(Error::NonFiniteAtNode { k, node });
            }
        } else {
            let t = w * fv;
            let sum = s + t;
            c += if s.abs() >= t.abs() { (s - sum) + t } else { (t - sum) + s };
            s = sum;
        }
        if state.push(w, wsum) {
            return Ok(s + c);
        }
        if k + 1 > policy.max_terms() {
            return Err(Error::TruncationExhausted {
                max_terms: policy.max_terms(),
                context: format!("classical table at x = {x}, n = {n}"),
            });
        }
        lw += lnx - ((k + 1) as f64).ln();
        k += 1;
    }
}

/// Residual of the weight identity
/// x D_q s_nk(x) = [n] ([k]/[n] - x) s_nk(x),
/// with D_q evaluated as the exact two-point quotient. Should vanish to
/// roughly 1e-9 (1 + |s|[n]) everywhere.
pub fn weight_identity_residual(
    k: u32,
    x: f64,
    ctx: &QContext,
    policy: &SeriesPolicy,
) -> Result<f64> {
    ctx.require_q()?;
    if !(x > 0.0) {
        return Err(Error::Domain(format!("weight_identity_residual requires x > 0 (got {x})")));
    }
    let s_x = weight(k, x, ctx, policy)?;
    let s_qx = weight(k, ctx.q() * x, ctx, policy)?;
    // x * (s(qx) - s(x)) / ((q-1)x)  -  ([k] - [n]x) s(x)
    let lhs = (s_qx - s_x) / (ctx.q() - 1.0);
    let rhs = (q_integer(k, ctx)? - q_integer(ctx.n(), ctx)? * x) * s_x;
    Ok(lhs - rhs)
}

/// A weight that came out negative during a positivity scan.
#[derive(Clone, Copy, Debug)]
pub struct NegativeWeight {
    pub k: usize,
    pub x: f64,
    pub weight: f64,
}

/// A real zero of e_q on the negative axis, z_j = -q^(j+1)/(q-1).
#[derive(Clone, Copy, Debug)]
pub struct EqZero {
    pub index: u32,
    pub z: f64,
}

/// Outcome of [`positivity_scan`]: every weight below -1e-13 on the grid,
/// plus the e_q zeros lying inside the range of scanned arguments. The
/// scan records; it never asserts.
#[derive(Clone, Debug, Default)]
pub struct PositivityReport {
    pub negatives: Vec<NegativeWeight>,
    pub eq_zeros: Vec<EqZero>,
}

/// Scans the weight tables over `x_grid` for negative weights and lists
/// the e_q zeros intersecting the scanned arguments -[n] q^-k x.
pub fn positivity_scan(
    ctx: &QContext,
    x_grid: &[f64],
    policy: &SeriesPolicy,
) -> Result<PositivityReport> {
    ctx.require_q()?;
    let mut report = PositivityReport::default();
    let mut x_max: f64 = 0.0;
    for &x in x_grid {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(Error::Domain(format!("positivity_scan grid value {x} is not a finite nonnegative real")));
        }
        x_max = x_max.max(x);
        let table = weight_table(x, ctx, policy)?;
        for (k, &w) in table.weights().iter().enumerate() {
            if w < NEGATIVE_WEIGHT_TOL {
                report.negatives.push(NegativeWeight { k, x, weight: w });
            }
        }
    }
    // scanned e_q arguments reach down to -[n] x_max (k = 0 term)
    let min_arg = -q_integer(ctx.n(), ctx)? * x_max;
    let mut j = 0u32;
    loop {
        let z = -ctx.q().powi(j as i32 + 1) / (ctx.q() - 1.0);
        if z < min_arg || !z.is_finite() || j > 2048 {
            break;
        }
        report.eq_zeros.push(EqZero { index: j, z });
        j += 1;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pol() -> SeriesPolicy {
        SeriesPolicy::default()
    }

    #[test]
    fn table_at_zero() {
        let ctx = QContext::new(2.0, 3).unwrap();
        let t = weight_table(0.0, &ctx, &pol()).unwrap();
        assert_eq!(t.weights(), &[1.0]);
        assert_eq!(t.nodes(), &[0.0]);
        assert_eq!(t.k_max(), 0);
        assert_eq!(t.partition_defect(), 0.0);
    }

    #[test]
    fn weight_special_cases() {
        let ctx = QContext::new(1.7, 4).unwrap();
        assert_eq!(weight(0, 0.0, &ctx, &pol()).unwrap(), 1.0);
        assert_eq!(weight(3, 0.0, &ctx, &pol()).unwrap(), 0.0);
        // k = 0 term is e_q(-[n]x)
        let x = 0.3;
        let z = -q_integer(4, &ctx).unwrap() * x;
        let expect = e_q(z, &ctx, &pol()).unwrap().to_f64();
        assert_relative_eq!(weight(0, x, &ctx, &pol()).unwrap(), expect, max_relative = 1e-12);
    }

    #[test]
    fn weight_against_series_oracle() {
        // s_11(2;1) = e_2(-1/2); the oracle sums the alternating series
        let ctx = QContext::new(2.0, 1).unwrap();
        let mut sum = 1.0;
        let mut term = 1.0;
        for k in 1..60 {
            term *= -0.5 / q_integer(k, &ctx).unwrap();
            sum += term;
        }
        assert_relative_eq!(weight(1, 1.0, &ctx, &pol()).unwrap(), sum, max_relative = 1e-12);
    }

    #[test]
    fn table_matches_single_weights() {
        for &(q, n, x) in &[(2.0, 3u32, 1.0), (1.2, 10, 5.0), (3.0, 2, 0.7), (2.0, 5, 4.0)] {
            let ctx = QContext::new(q, n).unwrap();
            let t = weight_table(x, &ctx, &pol()).unwrap();
            for k in 0..=t.k_max().min(12) {
                let w = weight(k as u32, x, &ctx, &pol()).unwrap();
                let tw = t.weights()[k];
                assert!(
                    (w - tw).abs() <= 1e-9 * (1.0 + w.abs()),
                    "q={q} n={n} x={x} k={k}: {w} vs {tw}"
                );
            }
        }
    }

    #[test]
    fn partition_of_unity() {
        let ctx = QContext::new(2.0, 3).unwrap();
        let t = weight_table(1.0, &ctx, &pol()).unwrap();
        assert!(t.partition_defect() <= 1e-12, "defect = {}", t.partition_defect());

        // deep in the alternating regime the identity still holds
        let ctx = QContext::new(3.0, 12).unwrap();
        let t = weight_table(5.0, &ctx, &pol()).unwrap();
        assert!(t.is_extended());
        assert!(t.partition_defect() <= 1e-12, "defect = {}", t.partition_defect());
    }

    #[test]
    fn first_moment_through_table() {
        let ctx = QContext::new(1.2, 10).unwrap();
        let t = weight_table(5.0, &ctx, &pol()).unwrap();
        let m1: f64 = t.apply(|u| u).unwrap();
        assert_relative_eq!(m1, 5.0, max_relative = 1e-10);
    }

    #[test]
    fn nodes_strictly_increasing_and_lengths_match() {
        let ctx = QContext::new(1.5, 6).unwrap();
        let t = weight_table(2.7, &ctx, &pol()).unwrap();
        assert_eq!(t.weights().len(), t.nodes().len());
        assert!(t.nodes().windows(2).all(|w| w[1] > w[0]));
        assert_relative_eq!(t.nodes()[1], 1.0 / q_integer(6, &ctx).unwrap(), max_relative = 1e-13);
    }

    #[test]
    fn apply_operator_moments() {
        let ctx = QContext::new(1.5, 4).unwrap();
        let one = apply_operator(|_| 1.0, 2.7, &ctx, &pol()).unwrap();
        assert_relative_eq!(one, 1.0, epsilon = 1e-12);
        let id = apply_operator(|t| t, 2.7, &ctx, &pol()).unwrap();
        assert_relative_eq!(id, 2.7, max_relative = 1e-10);
        // M(t^2; 1) at q = 2, n = 3: x^2 + x/[3] = 1 + 1/7
        let ctx = QContext::new(2.0, 3).unwrap();
        let sq = apply_operator(|t| t * t, 1.0, &ctx, &pol()).unwrap();
        assert_relative_eq!(sq, 8.0 / 7.0, max_relative = 1e-12);
    }

    #[test]
    fn linearity() {
        let ctx = QContext::new(1.3, 5).unwrap();
        let x = 1.9;
        let f = |t: f64| (-t).exp();
        let g = |t: f64| t * t;
        let lhs = apply_operator(|t| 2.5 * f(t) - 0.75 * g(t), x, &ctx, &pol()).unwrap();
        let rhs = 2.5 * apply_operator(f, x, &ctx, &pol()).unwrap()
            - 0.75 * apply_operator(g, x, &ctx, &pol()).unwrap();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-11);
    }

    #[test]
    fn nonfinite_at_weighted_node_fails() {
        let ctx = QContext::new(2.0, 2).unwrap();
        // 1/(t - node_1) blows up at a node carrying real mass
        let node1 = 1.0 / 3.0;
        let err = apply_operator(|t| 1.0 / (t - node1), 1.0, &ctx, &pol()).unwrap_err();
        assert!(matches!(err, Error::NonFiniteAtNode { .. }));
    }

    #[test]
    fn classical_poisson_oracle() {
        // direct Poisson summation oracle
        let oracle = |x: f64, n: u32, f: &dyn Fn(f64) -> f64| {
            let nx = n as f64 * x;
            let mut s = 0.0;
            let mut w = (-nx).exp();
            for k in 0..4000 {
                s += f(k as f64 / n as f64) * w;
                w *= nx / (k + 1) as f64;
            }
            s
        };
        let got = classical_szasz(|_| 1.0, 3.0, 7, &pol()).unwrap();
        assert_relative_eq!(got, 1.0, epsilon = 1e-12);
        let got = classical_szasz(|t| t, 3.0, 7, &pol()).unwrap();
        assert_relative_eq!(got, oracle(3.0, 7, &|t| t), max_relative = 1e-12);
        assert_relative_eq!(got, 3.0, max_relative = 1e-10);
        let got = classical_szasz(|t| t * t, 1.0, 10, &pol()).unwrap();
        assert_relative_eq!(got, oracle(1.0, 10, &|t| t * t), max_relative = 1e-12);
        assert_relative_eq!(got, 1.1, max_relative = 1e-10);
    }

    #[test]
    fn identity_residual_examples() {
        for &(k, x, q, n) in &[(0u32, 0.5, 2.0, 2u32), (3, 1.5, 1.3, 5), (1, 2.0, 3.0, 1)] {
            let ctx = QContext::new(q, n).unwrap();
            let r = weight_identity_residual(k, x, &ctx, &pol()).unwrap();
            let s = weight(k, x, &ctx, &pol()).unwrap();
            let tol = 1e-9 * (1.0 + s.abs() * q_integer(n, &ctx).unwrap());
            assert!(r.abs() <= tol, "residual {r} at k={k} x={x} q={q} n={n}");
        }
    }

    #[test]
    fn positivity_examples() {
        let ctx = QContext::new(2.0, 1).unwrap();
        // e_2(-3) < 0: -3 lies between the zeros -2 and -4
        let rep = positivity_scan(&ctx, &[3.0], &pol()).unwrap();
        assert!(rep.negatives.iter().any(|n| n.k == 0));
        assert!(rep.eq_zeros.iter().any(|z| z.z == -2.0));

        let rep = positivity_scan(&ctx, &[0.5], &pol()).unwrap();
        assert!(rep.negatives.is_empty());

        let rep = positivity_scan(&ctx, &[0.0], &pol()).unwrap();
        assert!(rep.negatives.is_empty());
        assert!(rep.eq_zeros.is_empty());
    }

    #[test]
    fn truncation_stability() {
        // tightening rel_tol by orders of magnitude barely moves results
        let ctx = QContext::new(1.5, 5).unwrap();
        let coarse = pol();
        let fine = SeriesPolicy::new(1e-28_f64.max(1e-30), 5000, 3).unwrap();
        for &x in &[0.5, 1.0, 2.0, 5.0] {
            let a = apply_operator(|t| (-t).exp(), x, &ctx, &coarse).unwrap();
            let b = apply_operator(|t| (-t).exp(), x, &ctx, &fine).unwrap();
            assert!((a - b).abs() <= 10.0 * coarse.rel_tol() * (1.0 + a.abs()));
        }
    }

    #[test]
    fn table_rejects_bad_input() {
        let ctx = QContext::new(2.0, 3).unwrap();
        assert!(weight_table(-1.0, &ctx, &pol()).is_err());
        let classical = QContext::classical(3).unwrap();
        assert!(weight_table(1.0, &classical, &pol()).is_err());
    }
}
