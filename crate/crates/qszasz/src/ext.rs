//! Fixed-width floating-point expansions for the weight-table kernel.
//!
//! An [`Ext`] value is an unevaluated sum of up to [`MAX_COMPONENTS`]
//! nonoverlapping f64 components (smallest first), in the style of
//! Shewchuk's adaptive-precision expansions (Discrete Comput. Geom. 18,
//! 1997) and the Hida/Li/Bailey double-double work. Addition, subtraction
//! and multiplication are exact up to the final truncation back to
//! `MAX_COMPONENTS` components, so each operation carries a relative error
//! below ~2^-260. That headroom is what lets the operator weight tables
//! survive the catastrophic cancellation of the alternating q-exponential
//! at large arguments, where plain f64 loses everything.
//!
//! This is deliberately *fixed* precision: five components, no allocation,
//! `Copy`. It is not an arbitrary-precision type and is not exposed.

/// Components kept after each renormalization. Five components span at
/// least 5*53 - 4 bits, far beyond what the operator kernel needs.
pub(crate) const MAX_COMPONENTS: usize = 5;

/// Working buffer size: an addition of two full expansions plus slack.
const WORK: usize = 4 * MAX_COMPONENTS + 2;

#[derive(Clone, Copy, Debug)]
pub(crate) struct Ext {
    len: usize,
    // components in increasing magnitude order; only c[..len] is valid
    c: [f64; MAX_COMPONENTS],
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

/// Requires |a| >= |b| (or a == 0).
#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

/// Exact addition of a scalar into an expansion (Shewchuk GROW-EXPANSION).
/// `e` must be nonoverlapping, increasing; output likewise, len + 1.
fn grow(e: &[f64], b: f64, out: &mut [f64]) -> usize {
    let mut q = b;
    for (i, &ei) in e.iter().enumerate() {
        let (s, err) = two_sum(q, ei);
        out[i] = err;
        q = s;
    }
    out[e.len()] = q;
    e.len() + 1
}

/// Exact multiplication of an expansion by a scalar (SCALE-EXPANSION).
fn scale(e: &[f64], b: f64, out: &mut [f64]) -> usize {
    if e.is_empty() {
        return 0;
    }
    let (mut q, h0) = two_prod(e[0], b);
    out[0] = h0;
    let mut idx = 1;
    for &ei in &e[1..] {
        let (big, small) = two_prod(ei, b);
        let (q2, h) = two_sum(q, small);
        out[idx] = h;
        idx += 1;
        let (qn, h2) = quick_two_sum(big, q2);
        out[idx] = h2;
        idx += 1;
        q = qn;
    }
    out[idx] = q;
    idx + 1
}

/// One error-free transformation sweep (Ogita/Rump/Oishi VecSum): the
/// last slot ends up holding the rounded sum of the inputs, the earlier
/// slots the exact roundoffs. The total is preserved bit-exactly, and
/// each sweep concentrates one more f64's worth of precision into the
/// trailing components.
fn vec_sum_pass(buf: &mut [f64]) {
    let mut s = buf[0];
    for i in 1..buf.len() {
        let (sum, err) = two_sum(s, buf[i]);
        buf[i - 1] = err;
        s = sum;
    }
    *buf.last_mut().unwrap() = s;
}

impl Ext {
    pub(crate) fn zero() -> Self {
        Ext { len: 0, c: [0.0; MAX_COMPONENTS] }
    }

    pub(crate) fn one() -> Self {
        Ext::from_f64(1.0)
    }

    pub(crate) fn from_f64(v: f64) -> Self {
        if v == 0.0 {
            return Ext::zero();
        }
        let mut c = [0.0; MAX_COMPONENTS];
        c[0] = v;
        Ext { len: 1, c }
    }

    fn from_work(buf: &mut [f64]) -> Self {
        if buf.is_empty() {
            return Ext::zero();
        }
        // distillation: after k sweeps the trailing k slots carry the
        // value to k-fold f64 precision, so truncating to MAX_COMPONENTS
        // loses only ~2^(-53*MAX_COMPONENTS) relative mass
        for _ in 0..=MAX_COMPONENTS {
            vec_sum_pass(buf);
        }
        // keep the last MAX_COMPONENTS nonzero components, preserving order
        let mut c = [0.0; MAX_COMPONENTS];
        let mut keep = 0;
        for &v in buf.iter().rev() {
            if v != 0.0 {
                keep += 1;
                if keep == MAX_COMPONENTS {
                    break;
                }
            }
        }
        if keep == 0 {
            return Ext::zero();
        }
        let mut got = 0;
        for &v in buf.iter().rev() {
            if v != 0.0 {
                c[keep - 1 - got] = v;
                got += 1;
                if got == keep {
                    break;
                }
            }
        }
        Ext { len: keep, c }
    }

    pub(crate) fn to_f64(&self) -> f64 {
        // summing smallest-first keeps the result within an ulp or two
        let mut s = 0.0;
        for &v in &self.c[..self.len] {
            s += v;
        }
        s
    }

    pub(crate) fn add(&self, other: &Ext) -> Ext {
        let mut buf = [0.0f64; WORK];
        let mut len = self.len;
        buf[..len].copy_from_slice(&self.c[..len]);
        for &b in &other.c[..other.len] {
            let mut next = [0.0f64; WORK];
            let n = grow(&buf[..len], b, &mut next);
            buf[..n].copy_from_slice(&next[..n]);
            len = n;
        }
        if len == 0 {
            return Ext::zero();
        }
        Ext::from_work(&mut buf[..len])
    }

    pub(crate) fn add_f64(&self, b: f64) -> Ext {
        if b == 0.0 {
            return *self;
        }
        let mut buf = [0.0f64; WORK];
        let n = grow(&self.c[..self.len], b, &mut buf);
        Ext::from_work(&mut buf[..n])
    }

    pub(crate) fn neg(&self) -> Ext {
        let mut r = *self;
        for v in &mut r.c[..r.len] {
            *v = -*v;
        }
        r
    }

    pub(crate) fn sub(&self, other: &Ext) -> Ext {
        self.add(&other.neg())
    }

    pub(crate) fn mul_f64(&self, b: f64) -> Ext {
        if b == 0.0 || self.len == 0 {
            return Ext::zero();
        }
        let mut buf = [0.0f64; WORK];
        let n = scale(&self.c[..self.len], b, &mut buf);
        Ext::from_work(&mut buf[..n])
    }

    pub(crate) fn mul(&self, other: &Ext) -> Ext {
        let mut acc = Ext::zero();
        for &b in &other.c[..other.len] {
            acc = acc.add(&self.mul_f64(b));
        }
        acc
    }

    /// Long division: five quotient digits leave a relative error around
    /// 2^-260, matching the rest of the arithmetic.
    pub(crate) fn div(&self, other: &Ext) -> Ext {
        let d = other.to_f64();
        let mut digits = [0.0f64; MAX_COMPONENTS + 1];
        let mut nd = 0;
        let mut r = *self;
        for _ in 0..MAX_COMPONENTS + 1 {
            let num = r.to_f64();
            let qi = num / d;
            if qi == 0.0 || !qi.is_finite() {
                break;
            }
            digits[nd] = qi;
            nd += 1;
            r = r.sub(&other.mul_f64(qi));
        }
        let mut acc = Ext::zero();
        for &qi in digits[..nd].iter().rev() {
            acc = acc.add_f64(qi);
        }
        if nd == 0 {
            // 0/x, x/0 or x/inf: fall back to the f64 semantics
            return Ext::from_f64(self.to_f64() / d);
        }
        acc
    }

    pub(crate) fn abs_f64(&self) -> f64 {
        self.to_f64().abs()
    }
}

/// Arithmetic abstraction letting the weight-table kernel run either in
/// plain f64 (benign, positive-weight regime) or in expansions (alternating
/// regime, where the table would otherwise drown in cancellation).
pub(crate) trait Scalar: Copy {
    fn s_from(v: f64) -> Self;
    fn s_to(self) -> f64;
    fn s_add(self, o: Self) -> Self;
    fn s_sub(self, o: Self) -> Self;
    fn s_mul(self, o: Self) -> Self;
    fn s_div(self, o: Self) -> Self;
    fn s_mul_f64(self, v: f64) -> Self;
    fn s_one() -> Self;
    fn s_zero() -> Self;
    fn s_powi(self, mut e: u32) -> Self {
        let mut base = self;
        let mut acc = Self::s_one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.s_mul(base);
            }
            e >>= 1;
            if e > 0 {
                base = base.s_mul(base);
            }
        }
        acc
    }
}

impl Scalar for f64 {
    fn s_from(v: f64) -> Self {
        v
    }
    fn s_to(self) -> f64 {
        self
    }
    fn s_add(self, o: Self) -> Self {
        self + o
    }
    fn s_sub(self, o: Self) -> Self {
        self - o
    }
    fn s_mul(self, o: Self) -> Self {
        self * o
    }
    fn s_div(self, o: Self) -> Self {
        self / o
    }
    fn s_mul_f64(self, v: f64) -> Self {
        self * v
    }
    fn s_one() -> Self {
        1.0
    }
    fn s_zero() -> Self {
        0.0
    }
}

impl Scalar for Ext {
    fn s_from(v: f64) -> Self {
        Ext::from_f64(v)
    }
    fn s_to(self) -> f64 {
        self.to_f64()
    }
    fn s_add(self, o: Self) -> Self {
        self.add(&o)
    }
    fn s_sub(self, o: Self) -> Self {
        self.sub(&o)
    }
    fn s_mul(self, o: Self) -> Self {
        self.mul(&o)
    }
    fn s_div(self, o: Self) -> Self {
        self.div(&o)
    }
    fn s_mul_f64(self, v: f64) -> Self {
        self.mul_f64(v)
    }
    fn s_one() -> Self {
        Ext::one()
    }
    fn s_zero() -> Self {
        Ext::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_integers_exact() {
        let a = Ext::from_f64(3.0).mul(&Ext::from_f64(7.0));
        assert_eq!(a.to_f64(), 21.0);
        assert_eq!(Ext::from_f64(2.0).s_powi(10).to_f64(), 1024.0);
    }

    #[test]
    fn cancellation_survives() {
        let big = Ext::from_f64(1e16);
        let s = big.add_f64(1.0).sub(&big);
        assert_eq!(s.to_f64(), 1.0);

        // alternating huge pairs around a tiny payload
        let mut acc = Ext::from_f64(1.0);
        for i in 0..20 {
            let v = 10f64.powi(200 + (i % 30));
            acc = acc.add_f64(v);
            acc = acc.add_f64(-v);
        }
        assert_eq!(acc.to_f64(), 1.0);
    }

    #[test]
    fn tiny_components_retained() {
        let tiny = Ext::one().div(&Ext::from_f64(2.0).s_powi(200)); // 2^-200 exactly
        assert_eq!(tiny.to_f64(), 2f64.powi(-200));
        let v = Ext::one().add(&tiny);
        let back = v.add_f64(-1.0);
        assert_eq!(back.to_f64(), 2f64.powi(-200));
    }

    #[test]
    fn division_roundtrip() {
        let third = Ext::one().div(&Ext::from_f64(3.0));
        let err = third.mul_f64(3.0).add_f64(-1.0).to_f64().abs();
        assert!(err < 1e-60, "1/3*3-1 = {err:e}");
    }

    #[test]
    fn zero_handling() {
        assert_eq!(Ext::zero().len, 0);
        assert_eq!(Ext::zero().add(&Ext::from_f64(2.5)).to_f64(), 2.5);
        assert_eq!(Ext::from_f64(2.5).mul(&Ext::zero()).to_f64(), 0.0);
        assert_eq!(Ext::from_f64(1.5).sub(&Ext::from_f64(1.5)).to_f64(), 0.0);
    }

    proptest! {
        #[test]
        fn add_sub_is_exact(a in -1e250f64..1e250, b in -1e250f64..1e250) {
            let r = Ext::from_f64(a).add_f64(b).add_f64(-b).add_f64(-a);
            prop_assert_eq!(r.to_f64(), 0.0);
        }

        #[test]
        fn mul_matches_two_prod(a in -1e100f64..1e100, b in -1e100f64..1e100) {
            let (p, e) = two_prod(a, b);
            let exact = Ext::from_f64(p).add_f64(e);
            let r = Ext::from_f64(a).mul(&Ext::from_f64(b)).sub(&exact);
            prop_assert_eq!(r.to_f64(), 0.0);
        }

        #[test]
        fn div_accuracy(a in 1e-30f64..1e30, b in 1e-30f64..1e30) {
            let q = Ext::from_f64(a).div(&Ext::from_f64(b));
            let back = q.mul(&Ext::from_f64(b)).sub(&Ext::from_f64(a));
            let rel = back.to_f64().abs() / a;
            prop_assert!(rel < 1e-60, "rel = {}", rel);
        }
    }
}
