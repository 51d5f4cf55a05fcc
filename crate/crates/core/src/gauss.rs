//! Exact complex rationals: pairs (re, im) in Q, the entry type of
//! gaussian_rational matrices and the grid points of the recovery search.

use crate::ball::ComplexBall;
use crate::cyclotomic::CycRat;
use crate::dyadic::Dyadic;
use crate::error::Result;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaussRat {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussRat {
    pub fn zero() -> Self {
        GaussRat { re: BigRational::zero(), im: BigRational::zero() }
    }

    pub fn one() -> Self {
        GaussRat { re: BigRational::one(), im: BigRational::zero() }
    }

    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussRat { re, im }
    }

    pub fn from_int(v: i64) -> Self {
        GaussRat { re: BigRational::from_integer(v.into()), im: BigRational::zero() }
    }

    pub fn from_dyadics(re: &Dyadic, im: &Dyadic) -> Self {
        GaussRat { re: re.to_rational(), im: im.to_rational() }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        GaussRat { re: &self.re + &rhs.re, im: &self.im + &rhs.im }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        GaussRat { re: &self.re - &rhs.re, im: &self.im - &rhs.im }
    }

    pub fn neg(&self) -> Self {
        GaussRat { re: -&self.re, im: -&self.im }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        GaussRat {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }

    pub fn conj(&self) -> Self {
        GaussRat { re: self.re.clone(), im: -&self.im }
    }

    pub fn normsq(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn to_ball(&self, prec: u64) -> ComplexBall {
        ComplexBall::from_rationals(&self.re, &self.im, prec)
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }

    /// As an element of Q(zeta_m); requires 4 | m when im != 0.
    pub fn to_cyc(&self, m: u64) -> Result<CycRat> {
        if self.im.is_zero() {
            Ok(CycRat::from_rational(m, self.re.clone()))
        } else {
            CycRat::from_complex_rational(m, &self.re, &self.im)
        }
    }
}
