//! Real scalar abstraction shared by the double and high-precision paths.

use crate::bigfloat::BigFloat;
use num_complex::{Complex, Complex64};
use num_traits::{Num, One, Zero};
use std::fmt::Debug;
use std::ops::Neg;

/// A real field with square roots. Implemented for `f64` and [`BigFloat`].
pub trait Real: Clone + Debug + PartialOrd + Num + Neg<Output = Self> + Send + Sync + 'static {
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn sqrt(&self) -> Self;
    /// Unit roundoff at the current working precision.
    fn epsilon() -> Self;

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn from_i64(n: i64) -> Self {
        Self::from_f64(n as f64)
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn epsilon() -> Self {
        f64::EPSILON
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
}

impl Real for BigFloat {
    fn from_f64(x: f64) -> Self {
        BigFloat::from_f64(x)
    }
    fn to_f64(&self) -> f64 {
        BigFloat::to_f64(self)
    }
    fn sqrt(&self) -> Self {
        BigFloat::sqrt(self)
    }
    fn epsilon() -> Self {
        BigFloat::epsilon()
    }
    fn abs(&self) -> Self {
        BigFloat::abs(self)
    }
    fn from_i64(n: i64) -> Self {
        BigFloat::from_i64(n)
    }
}

pub type Cx<T> = Complex<T>;

pub fn cx<T: Real>(re: f64, im: f64) -> Cx<T> {
    Complex::new(T::from_f64(re), T::from_f64(im))
}

pub fn lift<T: Real>(z: Complex64) -> Cx<T> {
    cx(z.re, z.im)
}

pub fn lower<T: Real>(z: &Cx<T>) -> Complex64 {
    Complex64::new(z.re.to_f64(), z.im.to_f64())
}

pub fn ci<T: Real>() -> Cx<T> {
    Complex::new(T::zero(), T::one())
}

pub fn cint<T: Real>(n: i64) -> Cx<T> {
    Complex::new(T::from_i64(n), T::zero())
}

pub fn cabs<T: Real>(z: &Cx<T>) -> T {
    z.norm_sqr().sqrt()
}

pub fn cabs64<T: Real>(z: &Cx<T>) -> f64 {
    cabs(z).to_f64()
}

/// Principal square root: result has non-negative real part, and a branch
/// cut along the negative real axis approached from above.
pub fn csqrt<T: Real>(z: &Cx<T>) -> Cx<T> {
    let r = cabs(z);
    if r.is_zero() {
        return Cx::<T>::zero();
    }
    let two = T::from_f64(2.0);
    let t = ((r + z.re.abs()) / two.clone()).sqrt();
    if z.re >= T::zero() {
        Complex::new(t.clone(), z.im.clone() / (two * t))
    } else {
        let re = z.im.abs() / (two * t.clone());
        let im = if z.im < T::zero() { -t } else { t };
        Complex::new(re, im)
    }
}

/// Integer power by repeated squaring; negative exponents invert.
pub fn cpowi<T: Real>(z: &Cx<T>, n: i64) -> Cx<T> {
    let mut base = if n < 0 { Cx::<T>::one() / z.clone() } else { z.clone() };
    let mut e = n.unsigned_abs();
    let mut acc = Cx::<T>::one();
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base.clone();
        }
        e >>= 1;
        if e > 0 {
            base = base.clone() * base;
        }
    }
    acc
}

/// `q^(n/2)` built from the principal square root of `q`.
pub fn cpow_half<T: Real>(q: &Cx<T>, n: i64) -> Cx<T> {
    if n % 2 == 0 {
        cpowi(q, n / 2)
    } else {
        cpowi(&csqrt(q), n)
    }
}

/// q-number `[n]_q = (q^n - q^-n)/(q - q^-1)`, evaluated as the Laurent
/// polynomial so that it is regular at `q = 1`.
pub fn qnum<T: Real>(q: &Cx<T>, n: i64) -> Cx<T> {
    if n < 0 {
        return -qnum(q, -n);
    }
    let mut acc = Cx::<T>::zero();
    for j in 0..n {
        acc = acc + cpowi(q, n - 1 - 2 * j);
    }
    acc
}

/// Relative closeness used by scalar identity checks:
/// `|a - b| / max(1, |a|, |b|)`.
pub fn rel_diff<T: Real>(a: &Cx<T>, b: &Cx<T>) -> f64 {
    let d = cabs64(&(a.clone() - b.clone()));
    d / 1f64.max(cabs64(a)).max(cabs64(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigfloat::with_precision;

    #[test]
    fn csqrt_matches_std_principal_branch() {
        for &(re, im) in &[(1.0, 0.0), (-4.0, 0.0), (-1.0, -1e-3), (0.3, -2.0), (-2.0, 5.0)] {
            let z = Complex64::new(re, im);
            let ours = csqrt::<f64>(&z);
            let std = z.sqrt();
            assert!((ours - std).norm() < 1e-14, "{z}: {ours} vs {std}");
        }
    }

    #[test]
    fn qnum_limits_and_closed_form() {
        let one = cx::<f64>(1.0, 0.0);
        assert_eq!(qnum(&one, 5), cx(5.0, 0.0));
        let q = cx::<f64>(1.1, 0.05);
        let closed = (cpowi(&q, 3) - cpowi(&q, -3)) / (q - q.inv());
        assert!(rel_diff(&qnum(&q, 3), &closed) < 1e-14);
        assert_eq!(qnum(&q, 0), Cx::zero());
    }

    #[test]
    fn half_powers_square_back() {
        let q = cx::<f64>(-0.4, 1.3);
        let h = cpow_half(&q, 3);
        assert!(rel_diff(&(h * h), &cpowi(&q, 3)) < 1e-14);
    }

    #[test]
    fn high_precision_sqrt_agrees_with_double() {
        with_precision(160, || {
            let z = cx::<BigFloat>(0.3, -2.0);
            let r = csqrt(&z);
            let back = r.clone() * r;
            assert!(cabs64(&(back - z)) < 1e-40);
        });
    }
}
