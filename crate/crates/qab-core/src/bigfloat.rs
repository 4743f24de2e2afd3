//! Fixed-precision binary floating point over `num-bigint`.
//!
//! A value is `(-1)^neg · mant · 2^exp`. Every arithmetic result is rounded
//! to nearest at the thread's working precision (see [`with_precision`]).
//! Only what the verification paths need is provided: the four field
//! operations, square root, comparisons and conversion to/from `f64`.

use num_bigint::BigUint;
use num_traits::{Num, One, ToPrimitive, Zero};
use std::cell::Cell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

pub const DEFAULT_PRECISION: u32 = 128;
pub const MIN_PRECISION: u32 = 64;

thread_local! {
    static PRECISION: Cell<u32> = const { Cell::new(DEFAULT_PRECISION) };
}

/// Working mantissa precision (bits) of the current thread.
pub fn precision() -> u32 {
    PRECISION.with(|p| p.get())
}

/// Run `f` with the working precision set to `bits`, restoring it afterwards.
pub fn with_precision<R>(bits: u32, f: impl FnOnce() -> R) -> R {
    struct Restore(u32);
    impl Drop for Restore {
        fn drop(&mut self) {
            PRECISION.with(|p| p.set(self.0));
        }
    }
    let prev = precision();
    PRECISION.with(|p| p.set(bits.max(MIN_PRECISION)));
    let _guard = Restore(prev);
    f()
}

#[derive(Clone, Debug)]
pub struct BigFloat {
    neg: bool,
    mant: BigUint,
    exp: i64,
}

impl BigFloat {
    fn make(neg: bool, mant: BigUint, exp: i64) -> Self {
        if mant.is_zero() {
            return Self::zero();
        }
        let p = precision() as u64;
        let bits = mant.bits();
        if bits <= p {
            return BigFloat { neg, mant, exp };
        }
        let sh = bits - p;
        let round_up = mant.bit(sh - 1);
        let mut m = mant >> sh;
        let mut e = exp + sh as i64;
        if round_up {
            m += 1u32;
            if m.bits() > p {
                m >>= 1;
                e += 1;
            }
        }
        BigFloat { neg, mant: m, exp: e }
    }

    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "BigFloat::from_f64 on non-finite value {x}");
        if x == 0.0 {
            return Self::zero();
        }
        let bits = x.to_bits();
        let neg = bits >> 63 == 1;
        let e = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if e == 0 { (frac, -1074) } else { (frac | (1u64 << 52), e - 1075) };
        Self::make(neg, BigUint::from(m), e)
    }

    pub fn from_i64(n: i64) -> Self {
        Self::make(n < 0, BigUint::from(n.unsigned_abs()), 0)
    }

    pub fn to_f64(&self) -> f64 {
        if self.mant.is_zero() {
            return 0.0;
        }
        let bits = self.mant.bits();
        let sh = bits.saturating_sub(64);
        let m = (&self.mant >> sh).to_u64().unwrap() as f64;
        let e = self.exp + sh as i64;
        let e = e.clamp(-4000, 4000) as i32;
        let v = m * 2f64.powi(e / 2) * 2f64.powi(e - e / 2);
        if self.neg {
            -v
        } else {
            v
        }
    }

    pub fn is_negative(&self) -> bool {
        self.neg && !self.mant.is_zero()
    }

    pub fn abs(&self) -> Self {
        BigFloat { neg: false, ..self.clone() }
    }

    /// 2^(-bits): the unit roundoff of the working precision.
    pub fn epsilon() -> Self {
        BigFloat { neg: false, mant: BigUint::one(), exp: -(precision() as i64) }
    }

    pub fn sqrt(&self) -> Self {
        assert!(!self.is_negative(), "BigFloat::sqrt of a negative value");
        if self.mant.is_zero() {
            return Self::zero();
        }
        let p = precision() as i64;
        let bits = self.mant.bits() as i64;
        let mut s = (2 * p + 4 - bits).max(0);
        if (self.exp - s).rem_euclid(2) != 0 {
            s += 1;
        }
        let r = (&self.mant << s as u64).sqrt();
        Self::make(false, r, (self.exp - s) / 2)
    }

    /// Top bit position: value magnitude lies in [2^(top-1), 2^top).
    fn top(&self) -> i64 {
        self.exp + self.mant.bits() as i64
    }

    fn add_signed(&self, other: &Self, flip: bool) -> Self {
        let oneg = other.neg ^ flip;
        if other.mant.is_zero() {
            return self.clone();
        }
        if self.mant.is_zero() {
            return BigFloat { neg: oneg, ..other.clone() };
        }
        let guard = precision() as i64 + 4;
        if self.top() - other.top() > guard {
            return self.clone();
        }
        if other.top() - self.top() > guard {
            return BigFloat { neg: oneg, ..other.clone() };
        }
        let e = self.exp.min(other.exp);
        let a = &self.mant << (self.exp - e) as u64;
        let b = &other.mant << (other.exp - e) as u64;
        if self.neg == oneg {
            Self::make(self.neg, a + b, e)
        } else {
            match a.cmp(&b) {
                Ordering::Equal => Self::zero(),
                Ordering::Greater => Self::make(self.neg, a - b, e),
                Ordering::Less => Self::make(oneg, b - a, e),
            }
        }
    }

    fn mul_ref(&self, other: &Self) -> Self {
        Self::make(self.neg ^ other.neg, &self.mant * &other.mant, self.exp + other.exp)
    }

    fn div_ref(&self, other: &Self) -> Self {
        assert!(!other.mant.is_zero(), "BigFloat division by zero");
        if self.mant.is_zero() {
            return Self::zero();
        }
        let p = precision() as i64;
        let s = (p + 2 + other.mant.bits() as i64 - self.mant.bits() as i64).max(0);
        let quo = (&self.mant << s as u64) / &other.mant;
        Self::make(self.neg ^ other.neg, quo, self.exp - other.exp - s)
    }

    fn trunc(&self) -> Self {
        if self.exp >= 0 {
            return self.clone();
        }
        let m = &self.mant >> (-self.exp) as u64;
        Self::make(self.neg, m, 0)
    }
}

impl Zero for BigFloat {
    fn zero() -> Self {
        BigFloat { neg: false, mant: BigUint::zero(), exp: 0 }
    }
    fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }
}

impl One for BigFloat {
    fn one() -> Self {
        BigFloat { neg: false, mant: BigUint::one(), exp: 0 }
    }
}

macro_rules! binop {
    ($tr:ident, $f:ident, $body:expr) => {
        impl $tr for BigFloat {
            type Output = BigFloat;
            fn $f(self, rhs: BigFloat) -> BigFloat {
                $body(&self, &rhs)
            }
        }
        impl<'a> $tr<&'a BigFloat> for &'a BigFloat {
            type Output = BigFloat;
            fn $f(self, rhs: &'a BigFloat) -> BigFloat {
                $body(self, rhs)
            }
        }
    };
}

binop!(Add, add, |a: &BigFloat, b: &BigFloat| a.add_signed(b, false));
binop!(Sub, sub, |a: &BigFloat, b: &BigFloat| a.add_signed(b, true));
binop!(Mul, mul, |a: &BigFloat, b: &BigFloat| a.mul_ref(b));
binop!(Div, div, |a: &BigFloat, b: &BigFloat| a.div_ref(b));
binop!(Rem, rem, |a: &BigFloat, b: &BigFloat| a - &(&a.div_ref(b).trunc() * b));

impl Neg for BigFloat {
    type Output = BigFloat;
    fn neg(mut self) -> BigFloat {
        if !self.mant.is_zero() {
            self.neg = !self.neg;
        }
        self
    }
}

impl PartialEq for BigFloat {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for BigFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let d = self.add_signed(other, true);
        Some(if d.is_zero() {
            Ordering::Equal
        } else if d.neg {
            Ordering::Less
        } else {
            Ordering::Greater
        })
    }
}

impl Num for BigFloat {
    type FromStrRadixErr = std::num::ParseFloatError;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        debug_assert_eq!(radix, 10, "only decimal literals are supported");
        s.parse::<f64>().map(BigFloat::from_f64)
    }
}

impl fmt::Display for BigFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bf(x: f64) -> BigFloat {
        BigFloat::from_f64(x)
    }

    #[test]
    fn roundtrip_f64() {
        for x in [1.0, -2.5, 1e-300, 3.0e200, 0.1, -7.0 / 3.0] {
            assert_eq!(bf(x).to_f64(), x);
        }
    }

    #[test]
    fn field_operations_match_f64_when_exact() {
        assert_eq!((bf(1.5) + bf(2.25)).to_f64(), 3.75);
        assert_eq!((bf(1.5) - bf(2.25)).to_f64(), -0.75);
        assert_eq!((bf(1.5) * bf(-2.0)).to_f64(), -3.0);
        assert_eq!((bf(1.0) / bf(4.0)).to_f64(), 0.25);
        assert_eq!(bf(2.0).sqrt().to_f64(), std::f64::consts::SQRT_2);
        assert_eq!((bf(7.5) % bf(2.0)).to_f64(), 1.5);
    }

    #[test]
    fn one_third_is_accurate_beyond_double() {
        with_precision(256, || {
            let third = bf(1.0) / bf(3.0);
            let err = (&(&third * &bf(3.0)) - &bf(1.0)).abs();
            assert!(err < BigFloat::epsilon() * bf(4.0));
            assert!(err.to_f64() < 1e-70);
        });
    }

    #[test]
    fn sqrt_squares_back() {
        with_precision(192, || {
            let x = bf(0.7) / bf(3.0);
            let r = x.sqrt();
            let err = (&(&r * &r) - &x).abs().to_f64();
            assert!(err < 1e-55, "{err}");
        });
    }

    #[test]
    fn cancellation_keeps_small_terms() {
        let big = bf(1.0);
        let tiny = bf(1e-30);
        let back = (&big + &tiny) - big;
        assert!((back.to_f64() - 1e-30).abs() < 1e-38);
    }

    #[test]
    fn ordering() {
        assert!(bf(-1.0) < bf(0.5));
        assert!(bf(2.0) > bf(1.999));
        assert_eq!(bf(0.25), bf(1.0) / bf(4.0));
    }

    #[test]
    fn precision_restores() {
        let before = precision();
        with_precision(300, || assert_eq!(precision(), 300));
        assert_eq!(precision(), before);
    }
}
