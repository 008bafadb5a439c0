//! Scalar domains.
//!
//! Arithmetic goes through a field *context* rather than operator traits on
//! the element type, because prime-field elements need a runtime modulus.
//! The rational and floating contexts are zero-sized or carry only a
//! tolerance.

use core::fmt::Debug;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::linalg;
use crate::matrix::Matrix;

/// Default modulus: the Mersenne prime 2^31 - 1.
pub const MERSENNE_31: u64 = (1 << 31) - 1;

pub trait Field {
    type Elem: Clone + PartialEq + Debug;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn from_i64(&self, v: i64) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    /// `None` for zero (or, in floating contexts, an exact zero).
    fn inv(&self, a: &Self::Elem) -> Option<Self::Elem>;
    /// Size used for pivot selection. Exact fields report 1 for any nonzero.
    fn magnitude(&self, a: &Self::Elem) -> f64;
    fn is_exact(&self) -> bool;

    fn is_zero(&self, a: &Self::Elem) -> bool {
        *a == self.zero()
    }

    /// Whether `a` counts as zero relative to `scale` during elimination.
    fn is_negligible(&self, a: &Self::Elem, scale: f64) -> bool {
        let _ = scale;
        self.is_zero(a)
    }

    fn div(&self, a: &Self::Elem, b: &Self::Elem) -> Option<Self::Elem> {
        self.inv(b).map(|ib| self.mul(a, &ib))
    }
}

/// Fields with an order, where least-norm and least-squares solutions exist.
pub trait OrderedField: Field {
    fn to_f64(&self, a: &Self::Elem) -> f64;

    /// Minimum-norm least-squares solution of `a x = b`.
    fn pseudo_solve(&self, a: &Matrix<Self::Elem>, b: &Matrix<Self::Elem>) -> Matrix<Self::Elem>
    where
        Self: Sized,
    {
        linalg::pseudo_solve_exact(self, a, b)
    }
}

/// Integers modulo a prime below 2^32, so products fit in `u64`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrimeField {
    modulus: u64,
}

impl PrimeField {
    /// Returns `None` unless `modulus` is a prime in `[2, 2^32)`.
    pub fn new(modulus: u64) -> Option<Self> {
        if !(2..1 << 32).contains(&modulus) || !is_prime(modulus) {
            return None;
        }
        Some(Self { modulus })
    }

    pub fn mersenne31() -> Self {
        Self { modulus: MERSENNE_31 }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.modulus;
        base %= self.modulus;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base % self.modulus;
            }
            base = base * base % self.modulus;
            exp >>= 1;
        }
        acc
    }
}

fn is_prime(n: u64) -> bool {
    if n < 4 {
        return n >= 2;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

impl Field for PrimeField {
    type Elem = u64;

    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1
    }
    fn from_i64(&self, v: i64) -> u64 {
        v.rem_euclid(self.modulus as i64) as u64
    }
    fn add(&self, a: &u64, b: &u64) -> u64 {
        (a + b) % self.modulus
    }
    fn sub(&self, a: &u64, b: &u64) -> u64 {
        (a + self.modulus - b) % self.modulus
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        a * b % self.modulus
    }
    fn neg(&self, a: &u64) -> u64 {
        (self.modulus - a) % self.modulus
    }
    fn inv(&self, a: &u64) -> Option<u64> {
        if a.is_multiple_of(self.modulus) {
            None
        } else {
            Some(self.pow(*a, self.modulus - 2))
        }
    }
    fn magnitude(&self, a: &u64) -> f64 {
        if *a == 0 {
            0.0
        } else {
            1.0
        }
    }
    fn is_exact(&self) -> bool {
        true
    }
}

/// Exact rational arithmetic.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Rationals;

impl Field for Rationals {
    type Elem = BigRational;

    fn zero(&self) -> BigRational {
        BigRational::zero()
    }
    fn one(&self) -> BigRational {
        BigRational::from_integer(BigInt::from(1))
    }
    fn from_i64(&self, v: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(v))
    }
    fn add(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a + b
    }
    fn sub(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a - b
    }
    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }
    fn neg(&self, a: &BigRational) -> BigRational {
        -a
    }
    fn inv(&self, a: &BigRational) -> Option<BigRational> {
        if a.is_zero() {
            None
        } else {
            Some(a.recip())
        }
    }
    fn magnitude(&self, a: &BigRational) -> f64 {
        if a.is_zero() {
            0.0
        } else {
            1.0
        }
    }
    fn is_exact(&self) -> bool {
        true
    }
    fn is_zero(&self, a: &BigRational) -> bool {
        a.is_zero()
    }
}

impl OrderedField for Rationals {
    fn to_f64(&self, a: &BigRational) -> f64 {
        a.to_f64().unwrap_or(f64::NAN)
    }
}

/// `f64` arithmetic with a relative pivot tolerance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reals {
    pub tol: f64,
}

impl Default for Reals {
    fn default() -> Self {
        Self { tol: 1e-9 }
    }
}

impl Field for Reals {
    type Elem = f64;

    fn zero(&self) -> f64 {
        0.0
    }
    fn one(&self) -> f64 {
        1.0
    }
    fn from_i64(&self, v: i64) -> f64 {
        v as f64
    }
    fn add(&self, a: &f64, b: &f64) -> f64 {
        a + b
    }
    fn sub(&self, a: &f64, b: &f64) -> f64 {
        a - b
    }
    fn mul(&self, a: &f64, b: &f64) -> f64 {
        a * b
    }
    fn neg(&self, a: &f64) -> f64 {
        -a
    }
    fn inv(&self, a: &f64) -> Option<f64> {
        if *a == 0.0 {
            None
        } else {
            Some(1.0 / a)
        }
    }
    fn magnitude(&self, a: &f64) -> f64 {
        a.abs()
    }
    fn is_exact(&self) -> bool {
        false
    }
    fn is_negligible(&self, a: &f64, scale: f64) -> bool {
        a.abs() <= self.tol * scale
    }
}

impl OrderedField for Reals {
    fn to_f64(&self, a: &f64) -> f64 {
        *a
    }

    fn pseudo_solve(&self, a: &Matrix<f64>, b: &Matrix<f64>) -> Matrix<f64> {
        linalg::pseudo_solve_svd(a, b, self.tol)
    }
}

/// `Complex64` arithmetic with a relative pivot tolerance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Complexes {
    pub tol: f64,
}

impl Default for Complexes {
    fn default() -> Self {
        Self { tol: 1e-14 }
    }
}

impl Field for Complexes {
    type Elem = Complex64;

    fn zero(&self) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
    fn one(&self) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }
    fn from_i64(&self, v: i64) -> Complex64 {
        Complex64::new(v as f64, 0.0)
    }
    fn add(&self, a: &Complex64, b: &Complex64) -> Complex64 {
        a + b
    }
    fn sub(&self, a: &Complex64, b: &Complex64) -> Complex64 {
        a - b
    }
    fn mul(&self, a: &Complex64, b: &Complex64) -> Complex64 {
        a * b
    }
    fn neg(&self, a: &Complex64) -> Complex64 {
        -a
    }
    fn inv(&self, a: &Complex64) -> Option<Complex64> {
        if a.norm_sqr() == 0.0 {
            None
        } else {
            Some(a.inv())
        }
    }
    fn magnitude(&self, a: &Complex64) -> f64 {
        a.norm()
    }
    fn is_exact(&self) -> bool {
        false
    }
    fn is_negligible(&self, a: &Complex64, scale: f64) -> bool {
        a.norm() <= self.tol * scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_field_inverse() {
        let f = PrimeField::mersenne31();
        for a in [1u64, 2, 12345, MERSENNE_31 - 1] {
            let ia = f.inv(&a).unwrap();
            assert_eq!(f.mul(&a, &ia), 1);
        }
        assert_eq!(f.inv(&0), None);
        assert_eq!(f.from_i64(-1), MERSENNE_31 - 1);
    }

    #[test]
    fn prime_field_rejects_composites() {
        assert!(PrimeField::new(15).is_none());
        assert!(PrimeField::new(1).is_none());
        assert!(PrimeField::new(1 << 33).is_none());
        assert_eq!(PrimeField::new(101).map(|f| f.modulus()), Some(101));
    }
}
