/// Sign plus log-magnitude representation of a real number.
///
/// Quantities like q^(k(k-1)/2), [n]^k x^k and [k]! overflow f64 long
/// before the weights they combine into do, so all of them are carried in
/// this form and only converted to plain f64 at API edges. The value also
/// keeps an opportunistic plain-f64 mirror while the magnitude stays
/// representable, which makes round-trips through small products exact
/// instead of merely exp(ln x)-accurate.
#[derive(Clone, Copy, Debug)]
pub struct SignedLogValue {
    sign: i8,
    log_abs: f64,
    linear: Option<f64>,
}

impl SignedLogValue {
    pub fn zero() -> Self {
        SignedLogValue { sign: 0, log_abs: f64::NEG_INFINITY, linear: Some(0.0) }
    }

    pub fn one() -> Self {
        SignedLogValue { sign: 1, log_abs: 0.0, linear: Some(1.0) }
    }

    pub fn from_value(v: f64) -> Self {
        if v == 0.0 {
            return SignedLogValue::zero();
        }
        SignedLogValue {
            sign: if v > 0.0 { 1 } else { -1 },
            log_abs: v.abs().ln(),
            linear: Some(v),
        }
    }

    /// Builds from an explicit sign and natural log of the magnitude.
    pub fn from_sign_log(sign: i8, log_abs: f64) -> Self {
        assert!(sign == -1 || sign == 0 || sign == 1, "sign must be -1, 0 or 1");
        if sign == 0 {
            return SignedLogValue::zero();
        }
        let linear = if log_abs.abs() < 700.0 {
            Some(sign as f64 * log_abs.exp())
        } else {
            None
        };
        SignedLogValue { sign, log_abs, linear }
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    /// Natural log of |value|; negative infinity for zero.
    pub fn log_abs(&self) -> f64 {
        self.log_abs
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// Converts back to a plain f64, overflowing to signed infinity when
    /// the magnitude exceeds the representable range.
    pub fn to_f64(&self) -> f64 {
        if let Some(v) = self.linear {
            return v;
        }
        self.sign as f64 * self.log_abs.exp()
    }

    pub fn mul(&self, other: &SignedLogValue) -> SignedLogValue {
        if self.sign == 0 || other.sign == 0 {
            return SignedLogValue::zero();
        }
        SignedLogValue {
            sign: self.sign * other.sign,
            log_abs: self.log_abs + other.log_abs,
            linear: cache_combine(self.linear, other.linear, |a, b| a * b),
        }
    }

    pub fn div(&self, other: &SignedLogValue) -> SignedLogValue {
        assert!(other.sign != 0, "division of SignedLogValue by zero");
        if self.sign == 0 {
            return SignedLogValue::zero();
        }
        SignedLogValue {
            sign: self.sign * other.sign,
            log_abs: self.log_abs - other.log_abs,
            linear: cache_combine(self.linear, other.linear, |a, b| a / b),
        }
    }

    /// Integer power; pow(0) is one, also for zero.
    pub fn powi(&self, e: u32) -> SignedLogValue {
        if e == 0 {
            return SignedLogValue::one();
        }
        if self.sign == 0 {
            return SignedLogValue::zero();
        }
        let sign = if self.sign < 0 && e % 2 == 1 { -1 } else { 1 };
        let log_abs = self.log_abs * e as f64;
        let linear = self
            .linear
            .map(|v| v.powi(e as i32))
            .filter(|v| v.is_finite() && v.abs() >= f64::MIN_POSITIVE);
        SignedLogValue { sign, log_abs, linear }
    }
}

fn cache_combine(
    a: Option<f64>,
    b: Option<f64>,
    op: impl Fn(f64, f64) -> f64,
) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => {
            let v = op(x, y);
            // drop the mirror on overflow or subnormal precision loss
            if v.is_finite() && (v == 0.0 || v.abs() >= f64::MIN_POSITIVE) {
                Some(v)
            } else {
                None
            }
        }
        _ => None,
    }
}
