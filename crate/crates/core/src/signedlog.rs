//! Sign/log-magnitude arithmetic.
//!
//! Every determinant, density value and Gamma product in this crate flows
//! through [`SignedLog`]: a number represented as `sign * exp(logmag)`.
//! Multiplication adds log-magnitudes, addition goes through a max-shifted
//! exponential sum, so quantities like `exp(||Y||^2)` with `||Y||^2 ~ 1e4`
//! never materialize as raw doubles.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// A real number stored as `sign * exp(logmag)`.
///
/// Invariant: `sign == 0` if and only if `logmag == -inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    sign: i8,
    logmag: f64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog {
        sign: 0,
        logmag: f64::NEG_INFINITY,
    };
    pub const ONE: SignedLog = SignedLog {
        sign: 1,
        logmag: 0.0,
    };

    /// Builds from a raw sign and natural-log magnitude, normalizing zeros.
    pub fn new(sign: i8, logmag: f64) -> Self {
        debug_assert!(sign == -1 || sign == 0 || sign == 1);
        if sign == 0 || logmag == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            SignedLog { sign, logmag }
        }
    }

    /// Positive value from its natural logarithm.
    pub fn from_ln(logmag: f64) -> Self {
        Self::new(1, logmag)
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else if x > 0.0 {
            SignedLog {
                sign: 1,
                logmag: x.ln(),
            }
        } else {
            SignedLog {
                sign: -1,
                logmag: (-x).ln(),
            }
        }
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    /// Natural log of the absolute value (`-inf` for zero).
    pub fn logmag(&self) -> f64 {
        self.logmag
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn is_finite(&self) -> bool {
        self.sign == 0 || self.logmag.is_finite()
    }

    /// Converts back to `f64`; overflows to `+-inf`, underflows to 0.
    pub fn to_f64(&self) -> f64 {
        self.sign as f64 * self.logmag.exp()
    }

    pub fn abs(&self) -> Self {
        SignedLog {
            sign: self.sign.abs(),
            logmag: self.logmag,
        }
    }

    /// Integer power; `0^0 = 1`.
    pub fn powi(&self, k: i64) -> Self {
        if k == 0 {
            return Self::ONE;
        }
        if self.sign == 0 {
            if k < 0 {
                return SignedLog {
                    sign: 1,
                    logmag: f64::INFINITY,
                };
            }
            return Self::ZERO;
        }
        let sign = if self.sign < 0 && k % 2 != 0 { -1 } else { 1 };
        SignedLog::new(sign, self.logmag * k as f64)
    }

    /// Real power of a nonnegative value.
    pub fn powf(&self, p: f64) -> Self {
        debug_assert!(self.sign >= 0, "powf requires a nonnegative base");
        if self.sign == 0 {
            return if p == 0.0 { Self::ONE } else { Self::ZERO };
        }
        SignedLog::new(1, self.logmag * p)
    }

    pub fn recip(&self) -> Self {
        SignedLog::new(self.sign, -self.logmag)
    }

    /// Compares absolute values.
    pub fn abs_cmp(&self, other: &Self) -> Ordering {
        self.logmag
            .partial_cmp(&other.logmag)
            .unwrap_or(Ordering::Equal)
    }
}

impl Mul for SignedLog {
    type Output = SignedLog;
    fn mul(self, rhs: SignedLog) -> SignedLog {
        SignedLog::new(self.sign * rhs.sign, self.logmag + rhs.logmag)
    }
}

impl Div for SignedLog {
    type Output = SignedLog;
    fn div(self, rhs: SignedLog) -> SignedLog {
        debug_assert!(rhs.sign != 0, "division by signed-log zero");
        SignedLog::new(self.sign * rhs.sign, self.logmag - rhs.logmag)
    }
}

impl Neg for SignedLog {
    type Output = SignedLog;
    fn neg(self) -> SignedLog {
        SignedLog {
            sign: -self.sign,
            logmag: self.logmag,
        }
    }
}

impl Add for SignedLog {
    type Output = SignedLog;
    fn add(self, rhs: SignedLog) -> SignedLog {
        if self.sign == 0 {
            return rhs;
        }
        if rhs.sign == 0 {
            return self;
        }
        // Shift by the larger magnitude so the exponentials stay in [0, 1].
        let (hi, lo) = if self.logmag >= rhs.logmag {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let r = (lo.logmag - hi.logmag).exp();
        let s = if hi.sign == lo.sign { 1.0 + r } else { 1.0 - r };
        if s == 0.0 {
            SignedLog::ZERO
        } else if s > 0.0 {
            SignedLog::new(hi.sign, hi.logmag + s.ln())
        } else {
            SignedLog::new(-hi.sign, hi.logmag + (-s).ln())
        }
    }
}

impl Sub for SignedLog {
    type Output = SignedLog;
    fn sub(self, rhs: SignedLog) -> SignedLog {
        self + (-rhs)
    }
}

impl std::iter::Sum for SignedLog {
    fn sum<I: Iterator<Item = SignedLog>>(iter: I) -> SignedLog {
        sum_signedlog(iter)
    }
}

/// Sums an iterator of signed-log values with a single max shift.
///
/// More accurate than folding `+` when many terms share a scale: the shift
/// is established once per rescale instead of per addition.
pub fn sum_signedlog<I: Iterator<Item = SignedLog>>(iter: I) -> SignedLog {
    let mut shift = f64::NEG_INFINITY;
    let mut acc = 0.0f64;
    for v in iter {
        if v.sign == 0 {
            continue;
        }
        if v.logmag.is_nan() {
            return SignedLog {
                sign: 1,
                logmag: f64::NAN,
            };
        }
        if v.logmag > shift {
            if shift == f64::NEG_INFINITY {
                acc = 0.0;
            } else {
                acc *= (shift - v.logmag).exp();
            }
            shift = v.logmag;
        }
        acc += v.sign as f64 * (v.logmag - shift).exp();
    }
    if shift == f64::NEG_INFINITY || acc == 0.0 {
        SignedLog::ZERO
    } else {
        SignedLog::from_f64(acc) * SignedLog::from_ln(shift)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn zero_invariant() {
        assert_eq!(SignedLog::from_f64(0.0), SignedLog::ZERO);
        assert_eq!(SignedLog::ZERO.logmag(), f64::NEG_INFINITY);
        assert_eq!(SignedLog::new(1, f64::NEG_INFINITY).sign(), 0);
    }

    #[test]
    fn mul_is_sign_product_logmag_sum() {
        let a = SignedLog::from_f64(-3.0);
        let b = SignedLog::from_f64(2.0);
        let c = a * b;
        assert_eq!(c.sign(), -1);
        assert!((c.logmag() - 6.0f64.ln()).abs() < TOL);
    }

    #[test]
    fn add_handles_huge_magnitudes_without_overflow() {
        // logmag up to 700e3 per the type contract
        let a = SignedLog::from_ln(700_000.0);
        let b = SignedLog::from_ln(700_000.0 - 2.0_f64.ln());
        let s = a + b;
        assert!(s.is_finite());
        assert!((s.logmag() - (700_000.0 + 1.5f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn subtraction_cancels_exactly() {
        let a = SignedLog::from_ln(5.0);
        assert!((a - a).is_zero());
    }

    #[test]
    fn sum_matches_sequential_adds() {
        let vals = [1.5, -0.25, 3.0, -4.25, 0.125];
        let seq = vals
            .iter()
            .fold(SignedLog::ZERO, |acc, &v| acc + SignedLog::from_f64(v));
        let batched = sum_signedlog(vals.iter().map(|&v| SignedLog::from_f64(v)));
        assert!((seq.to_f64() - batched.to_f64()).abs() < TOL);
        assert!((batched.to_f64() - 0.125).abs() < TOL);
    }

    proptest! {
        #[test]
        fn roundtrip(x in -1e12f64..1e12) {
            let v = SignedLog::from_f64(x).to_f64();
            prop_assert!((v - x).abs() <= 1e-12 * x.abs().max(1.0));
        }

        #[test]
        fn mul_matches_f64(a in -1e6f64..1e6, b in -1e6f64..1e6) {
            let p = (SignedLog::from_f64(a) * SignedLog::from_f64(b)).to_f64();
            prop_assert!((p - a * b).abs() <= 1e-9 * (a * b).abs().max(1e-12));
        }

        #[test]
        fn add_matches_f64(a in -1e6f64..1e6, b in -1e6f64..1e6) {
            let s = (SignedLog::from_f64(a) + SignedLog::from_f64(b)).to_f64();
            prop_assert!((s - (a + b)).abs() <= 1e-9 * (a.abs() + b.abs()).max(1e-12));
        }
    }
}
