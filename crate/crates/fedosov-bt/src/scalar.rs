//! Coefficient fields for the jet and Weyl algebra.
//!
//! Two scalars are provided: [`C64`] (complex double precision, the default
//! for asymptotic studies) and [`QC`] (complex numbers with exact rational
//! real and imaginary parts, used by the algebraic identity tests where
//! residuals must vanish on the nose).

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num::complex::Complex64;
use num::rational::BigRational;
use num::traits::{One, Zero};
use num::BigInt;

/// Complex double precision scalar.
pub type C64 = Complex64;

/// Field operations needed by the jet/Weyl machinery.
///
/// `inv` panics on zero; callers guard with `is_zero`. `abs_sq` is only used
/// for diagnostics and tolerance checks, so an exact scalar may round.
pub trait Scalar:
    Clone
    + PartialEq
    + Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    fn zero() -> Self;
    fn one() -> Self;
    /// The imaginary unit sqrt(-1).
    fn i() -> Self;
    fn from_int(n: i64) -> Self;
    /// Exact ratio `num/den`; the only scalar constructor the truncation
    /// normalizations (1/(p+q), 1/l!) ever need.
    fn from_ratio(num: i64, den: i64) -> Self;
    fn inv(&self) -> Self;
    fn conj(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn abs_sq(&self) -> f64;
    fn to_c64(&self) -> C64;
}

impl Scalar for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn one() -> Self {
        C64::new(1.0, 0.0)
    }
    fn i() -> Self {
        C64::new(0.0, 1.0)
    }
    fn from_int(n: i64) -> Self {
        C64::new(n as f64, 0.0)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        C64::new(num as f64 / den as f64, 0.0)
    }
    fn inv(&self) -> Self {
        assert!(!Scalar::is_zero(self), "inverse of zero");
        <C64 as Scalar>::one() / self
    }
    fn conj(&self) -> Self {
        num::complex::Complex::conj(self)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn abs_sq(&self) -> f64 {
        self.norm_sqr()
    }
    fn to_c64(&self) -> C64 {
        *self
    }
}

/// Complex number with exact rational parts.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct QC {
    pub re: BigRational,
    pub im: BigRational,
}

impl QC {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        QC { re, im }
    }

    pub fn from_ints(re: i64, im: i64) -> Self {
        QC {
            re: BigRational::from_integer(BigInt::from(re)),
            im: BigRational::from_integer(BigInt::from(im)),
        }
    }

    /// `re_n/re_d + i * im_n/im_d`.
    pub fn from_ratios(re_n: i64, re_d: i64, im_n: i64, im_d: i64) -> Self {
        QC {
            re: BigRational::new(BigInt::from(re_n), BigInt::from(re_d)),
            im: BigRational::new(BigInt::from(im_n), BigInt::from(im_d)),
        }
    }
}

impl Add for QC {
    type Output = QC;
    fn add(self, o: QC) -> QC {
        QC::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for QC {
    type Output = QC;
    fn sub(self, o: QC) -> QC {
        QC::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for QC {
    type Output = QC;
    fn mul(self, o: QC) -> QC {
        QC::new(
            self.re.clone() * o.re.clone() - self.im.clone() * o.im.clone(),
            self.re * o.im + self.im * o.re,
        )
    }
}

impl Neg for QC {
    type Output = QC;
    fn neg(self) -> QC {
        QC::new(-self.re, -self.im)
    }
}

impl Scalar for QC {
    fn zero() -> Self {
        QC::from_ints(0, 0)
    }
    fn one() -> Self {
        QC::from_ints(1, 0)
    }
    fn i() -> Self {
        QC::from_ints(0, 1)
    }
    fn from_int(n: i64) -> Self {
        QC::from_ints(n, 0)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        QC::from_ratios(num, den, 0, 1)
    }
    fn inv(&self) -> Self {
        let d = self.re.clone() * self.re.clone() + self.im.clone() * self.im.clone();
        assert!(!d.is_zero(), "inverse of zero");
        QC::new(self.re.clone() / d.clone(), -self.im.clone() / d)
    }
    fn conj(&self) -> Self {
        QC::new(self.re.clone(), -self.im.clone())
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    fn abs_sq(&self) -> f64 {
        let f = |r: &BigRational| -> f64 {
            let n = r.numer().to_string().parse::<f64>().unwrap_or(f64::NAN);
            let d = r.denom().to_string().parse::<f64>().unwrap_or(f64::NAN);
            n / d
        };
        let re = f(&self.re);
        let im = f(&self.im);
        re * re + im * im
    }
    fn to_c64(&self) -> C64 {
        let f = |r: &BigRational| -> f64 {
            let n = r.numer().to_string().parse::<f64>().unwrap_or(f64::NAN);
            let d = r.denom().to_string().parse::<f64>().unwrap_or(f64::NAN);
            n / d
        };
        C64::new(f(&self.re), f(&self.im))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qc_field_ops() {
        let a = QC::from_ratios(1, 2, -1, 3);
        let b = a.clone().mul(a.inv());
        assert_eq!(b, QC::one());
        assert_eq!(a.clone().conj().conj(), a);
    }

    #[test]
    fn i_squares_to_minus_one() {
        assert_eq!(QC::i() * QC::i(), QC::from_int(-1));
        let i = <C64 as Scalar>::i();
        assert_eq!(i * i, C64::from_int(-1));
    }
}
