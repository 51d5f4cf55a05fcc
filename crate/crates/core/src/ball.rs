//! Rigorous ball arithmetic over dyadic numbers.
//!
//! A `RealBall` is `mid ± rad`; a `ComplexBall` is a complex midpoint with an
//! l2 error radius. Every operation rounds the midpoint to the working
//! precision and folds the rounding error outward into the radius, so the true
//! value is always contained in the result.

use crate::dyadic::Dyadic;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use std::cmp::Ordering;
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

const RAD_BITS: u64 = 16;

/// Structural equality (same midpoint and radius), not set equality.
#[derive(Debug, Clone, PartialEq)]
pub struct RealBall {
    pub mid: Dyadic,
    pub rad: Dyadic,
}

impl RealBall {
    pub fn exact(mid: Dyadic) -> Self {
        RealBall { mid, rad: Dyadic::zero() }
    }

    pub fn zero() -> Self {
        RealBall::exact(Dyadic::zero())
    }

    pub fn new(mid: Dyadic, rad: Dyadic) -> Self {
        debug_assert!(!rad.is_negative());
        RealBall { mid, rad: rad.round_up_mag(RAD_BITS) }
    }

    pub fn from_rational(r: &BigRational, prec: u64) -> Self {
        let (mid, err) = Dyadic::from_rational(r, prec);
        RealBall::new(mid, err)
    }

    pub fn add(&self, rhs: &Self, prec: u64) -> Self {
        let (mid, err) = self.mid.add(&rhs.mid).round_to(prec);
        RealBall::new(mid, self.rad.add(&rhs.rad).add(&err))
    }

    pub fn sub(&self, rhs: &Self, prec: u64) -> Self {
        let (mid, err) = self.mid.sub(&rhs.mid).round_to(prec);
        RealBall::new(mid, self.rad.add(&rhs.rad).add(&err))
    }

    pub fn neg(&self) -> Self {
        RealBall { mid: self.mid.neg(), rad: self.rad.clone() }
    }

    pub fn mul(&self, rhs: &Self, prec: u64) -> Self {
        let (mid, err) = self.mid.mul(&rhs.mid).round_to(prec);
        let a = self.mid.abs().round_up_mag(RAD_BITS);
        let b = rhs.mid.abs().round_up_mag(RAD_BITS);
        let rad = a
            .mul(&rhs.rad)
            .add(&b.mul(&self.rad))
            .add(&self.rad.mul(&rhs.rad))
            .add(&err);
        RealBall::new(mid, rad)
    }

    pub fn div(&self, rhs: &Self, prec: u64) -> Option<Self> {
        // need |rhs| bounded away from zero
        let blo = rhs.mid.abs().sub(&rhs.rad);
        if blo.is_negative() || blo.is_zero() {
            return None;
        }
        let (mid, err) = self.mid.div_round(&rhs.mid, prec);
        // |a/b - a~/b~| <= (|a| rb + |b| ra) / (|b| (|b|-rb))
        let ahi = self.mid.abs().add(&self.rad);
        let num = ahi.mul(&rhs.rad).add(&rhs.mid.abs().mul(&self.rad));
        let den = rhs.mid.abs().mul(&blo);
        let (q, qe) = num.div_round(&den, RAD_BITS.max(16));
        Some(RealBall::new(mid, q.add(&qe).add(&err)))
    }

    pub fn scale_pow2(&self, k: i64) -> Self {
        RealBall { mid: self.mid.shl(k), rad: self.rad.shl(k) }
    }

    /// Square root ball; requires a nonnegative interval lower end for the
    /// midpoint path (clamps at zero).
    pub fn sqrt(&self, _prec: u64) -> Self {
        let lo = self.lb();
        let hi = self.ub();
        let lo = if lo.is_negative() { Dyadic::zero() } else { lo };
        let slo = lo.sqrt_lb();
        let shi = hi.sqrt_ub();
        let mid = slo.add(&shi).shl(-1);
        let rad = shi.sub(&slo).shl(-1).abs();
        RealBall::new(mid, rad)
    }

    pub fn ub(&self) -> Dyadic {
        self.mid.add(&self.rad)
    }

    pub fn lb(&self) -> Dyadic {
        self.mid.sub(&self.rad)
    }

    pub fn contains_zero(&self) -> bool {
        let lo = self.lb();
        let hi = self.ub();
        (lo.is_negative() || lo.is_zero()) && !hi.is_negative()
    }

    /// Certain comparison: Some(ordering) if the balls are disjoint.
    pub fn cmp_certain(&self, rhs: &Self) -> Option<Ordering> {
        if self.ub().cmp_val(&rhs.lb()) == Ordering::Less {
            Some(Ordering::Less)
        } else if self.lb().cmp_val(&rhs.ub()) == Ordering::Greater {
            Some(Ordering::Greater)
        } else {
            None
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.mid.to_f64()
    }
}

/// Structural equality (same midpoint and radius), not set equality.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexBall {
    pub re: Dyadic,
    pub im: Dyadic,
    pub rad: Dyadic,
}

impl ComplexBall {
    pub fn exact(re: Dyadic, im: Dyadic) -> Self {
        ComplexBall { re, im, rad: Dyadic::zero() }
    }

    pub fn zero() -> Self {
        ComplexBall::exact(Dyadic::zero(), Dyadic::zero())
    }

    pub fn one() -> Self {
        ComplexBall::exact(Dyadic::one(), Dyadic::zero())
    }

    pub fn new(re: Dyadic, im: Dyadic, rad: Dyadic) -> Self {
        debug_assert!(!rad.is_negative());
        ComplexBall { re, im, rad: rad.round_up_mag(RAD_BITS) }
    }

    pub fn from_rationals(re: &BigRational, im: &BigRational, prec: u64) -> Self {
        let (r, er) = Dyadic::from_rational(re, prec);
        let (i, ei) = Dyadic::from_rational(im, prec);
        // l2 radius <= |er| + |ei|
        ComplexBall::new(r, i, er.add(&ei))
    }

    pub fn from_f64s(re: f64, im: f64) -> Self {
        ComplexBall::exact(Dyadic::from_f64(re).unwrap(), Dyadic::from_f64(im).unwrap())
    }

    pub fn add(&self, rhs: &Self, prec: u64) -> Self {
        let (re, e1) = self.re.add(&rhs.re).round_to(prec);
        let (im, e2) = self.im.add(&rhs.im).round_to(prec);
        ComplexBall::new(re, im, self.rad.add(&rhs.rad).add(&e1).add(&e2))
    }

    pub fn sub(&self, rhs: &Self, prec: u64) -> Self {
        let (re, e1) = self.re.sub(&rhs.re).round_to(prec);
        let (im, e2) = self.im.sub(&rhs.im).round_to(prec);
        ComplexBall::new(re, im, self.rad.add(&rhs.rad).add(&e1).add(&e2))
    }

    pub fn neg(&self) -> Self {
        ComplexBall { re: self.re.neg(), im: self.im.neg(), rad: self.rad.clone() }
    }

    pub fn conj(&self) -> Self {
        ComplexBall { re: self.re.clone(), im: self.im.neg(), rad: self.rad.clone() }
    }

    /// Upper bound on |midpoint|.
    pub fn center_abs_ub(&self) -> Dyadic {
        let s = self.re.mul(&self.re).add(&self.im.mul(&self.im));
        s.sqrt_ub().round_up_mag(RAD_BITS)
    }

    pub fn abs_ub(&self) -> Dyadic {
        self.center_abs_ub().add(&self.rad)
    }

    pub fn abs_lb(&self) -> Dyadic {
        let s = self.re.mul(&self.re).add(&self.im.mul(&self.im));
        let lb = s.sqrt_lb().sub(&self.rad);
        if lb.is_negative() {
            Dyadic::zero()
        } else {
            lb
        }
    }

    pub fn mul(&self, rhs: &Self, prec: u64) -> Self {
        let (re, e1) = self
            .re
            .mul(&rhs.re)
            .sub(&self.im.mul(&rhs.im))
            .round_to(prec);
        let (im, e2) = self
            .re
            .mul(&rhs.im)
            .add(&self.im.mul(&rhs.re))
            .round_to(prec);
        let a = self.center_abs_ub();
        let b = rhs.center_abs_ub();
        let rad = a
            .mul(&rhs.rad)
            .add(&b.mul(&self.rad))
            .add(&self.rad.mul(&rhs.rad))
            .add(&e1)
            .add(&e2);
        ComplexBall::new(re, im, rad)
    }

    /// Multiply by an exact dyadic complex value.
    pub fn mul_exact_complex(&self, re: &Dyadic, im: &Dyadic, prec: u64) -> Self {
        let other = ComplexBall::exact(re.clone(), im.clone());
        self.mul(&other, prec)
    }

    pub fn scale_rational(&self, r: &BigRational, prec: u64) -> Self {
        let other = {
            let (m, e) = Dyadic::from_rational(r, prec + 8);
            ComplexBall::new(m, Dyadic::zero(), e)
        };
        self.mul(&other, prec)
    }

    /// |self|^2 as a real ball.
    pub fn normsq(&self, prec: u64) -> RealBall {
        let (mid, err) = self.re.mul(&self.re).add(&self.im.mul(&self.im)).round_to(prec);
        // |(v+e)|^2 - |v|^2 <= 2|v| r + r^2
        let c = self.center_abs_ub();
        let rad = c.shl(1).mul(&self.rad).add(&self.rad.mul(&self.rad)).add(&err);
        RealBall::new(mid, rad)
    }

    pub fn div(&self, rhs: &Self, prec: u64) -> Option<Self> {
        let blo = rhs.abs_lb();
        if blo.is_zero() {
            return None;
        }
        // a/b = a * conj(b) / |b|^2 with midpoint arithmetic; error bound via
        // |a/b - a~/b~| <= (|a| rb + |b~| ra) / (|b~| (|b~| - rb)) style bound.
        let den = rhs.re.mul(&rhs.re).add(&rhs.im.mul(&rhs.im));
        let nre = self.re.mul(&rhs.re).add(&self.im.mul(&rhs.im));
        let nim = self.im.mul(&rhs.re).sub(&self.re.mul(&rhs.im));
        let (qre, er) = nre.div_round(&den, prec);
        let (qim, ei) = nim.div_round(&den, prec);
        let bmid = rhs.center_abs_ub();
        let ahi = self.center_abs_ub().add(&self.rad);
        let num = ahi.mul(&rhs.rad).add(&bmid.mul(&self.rad));
        let dden = bmid.mul(&blo);
        let (q, qe) = num.div_round(&dden, RAD_BITS.max(16));
        Some(ComplexBall::new(qre, qim, q.add(&qe).add(&er).add(&ei)))
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    /// Whether `other` is certainly a different complex number.
    pub fn disjoint(&self, other: &Self, prec: u64) -> bool {
        let d = self.sub(other, prec);
        let lb = d.abs_lb();
        !lb.is_zero() && !lb.is_negative()
    }

    /// True if the exact complex rational (re,im) lies in this ball.
    pub fn contains_rational(&self, re: &BigRational, im: &BigRational) -> bool {
        let dre = self.re.to_rational() - re;
        let dim = self.im.to_rational() - im;
        let d2 = &dre * &dre + &dim * &dim;
        let r = self.rad.to_rational();
        d2 <= &r * &r
    }
}

/// pi as a real ball at the given precision (Machin's formula).
pub fn pi_ball(prec: u64) -> RealBall {
    static CACHE: OnceLock<Mutex<HashMap<u64, RealBall>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().unwrap().get(&prec) {
        return v.clone();
    }
    let work = prec + 16;
    // pi = 16 atan(1/5) - 4 atan(1/239)
    let a5 = atan_inv(5, work);
    let a239 = atan_inv(239, work);
    let pi = a5.scale_pow2(4).sub(&a239.scale_pow2(2), work);
    cache.lock().unwrap().insert(prec, pi.clone());
    pi
}

/// atan(1/x) for integer x >= 2, as a ball: alternating series with the first
/// omitted term as a truncation bound.
fn atan_inv(x: u64, prec: u64) -> RealBall {
    let xx = BigInt::from(x) * BigInt::from(x);
    // term_k = (-1)^k / ((2k+1) x^(2k+1)); stop when below 2^-(prec+8)
    let mut sum = BigRational::zero();
    let mut pow = BigRational::new(BigInt::from(1), BigInt::from(x));
    let mut k = 0u64;
    loop {
        let term = &pow / BigRational::from(BigInt::from(2 * k + 1));
        if k % 2 == 0 {
            sum += &term;
        } else {
            sum -= &term;
        }
        pow = pow / BigRational::from(xx.clone());
        let next = &pow / BigRational::from(BigInt::from(2 * k + 3));
        // next < 2^-(prec+8)?
        if next.numer().bits() as i64 + (prec as i64 + 8) < next.denom().bits() as i64 {
            let (mid, err) = Dyadic::from_rational(&sum, prec);
            let (tr, tre) = Dyadic::from_rational(&next, RAD_BITS);
            return RealBall::new(mid, err.add(&tr.abs()).add(&tre));
        }
        k += 1;
    }
}

/// (cos, sin) of 2*pi*k/m as balls.
pub fn sincos_two_pi_frac(k: u64, m: u64, prec: u64) -> (RealBall, RealBall) {
    let work = prec + 32;
    let pi = pi_ball(work);
    let frac = BigRational::new(BigInt::from(2 * (k % m)), BigInt::from(m));
    let theta = pi.mul(&RealBall::from_rational(&frac, work), work);
    // Taylor sums of cos and sin at theta (|theta| < 2 pi).
    let mut cos = RealBall::exact(Dyadic::one());
    let mut sin = RealBall::zero();
    let mut term = RealBall::exact(Dyadic::one()); // theta^j / j!
    let mut j = 0u64;
    loop {
        j += 1;
        let jb = RealBall::exact(Dyadic::from_int(j as i64));
        term = term.mul(&theta, work).div(&jb, work).unwrap();
        match j % 4 {
            1 => sin = sin.add(&term, work),
            2 => cos = cos.sub(&term, work),
            3 => sin = sin.sub(&term, work),
            _ => cos = cos.add(&term, work),
        }
        let tub = term.mid.abs().add(&term.rad);
        if j > 16 && tub.msb_exp().map_or(true, |e| e < -(prec as i64 + 8)) {
            // beyond j > 2|theta| the series tail is bounded by 2*|term|
            let tail = tub.shl(1);
            let cos = RealBall::new(cos.mid, cos.rad.add(&tail));
            let sin = RealBall::new(sin.mid, sin.rad.add(&tail));
            return (cos, sin);
        }
    }
}

/// Cache of root-of-unity power tables: zeta_m^j for j in 0..m.
pub fn roots_of_unity(m: u64, prec: u64) -> Vec<ComplexBall> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u64), Vec<ComplexBall>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().unwrap().get(&(m, prec)) {
        return v.clone();
    }
    let mut table = Vec::with_capacity(m as usize);
    for j in 0..m {
        if j == 0 {
            table.push(ComplexBall::one());
        } else if 4 * j == m {
            table.push(ComplexBall::exact(Dyadic::zero(), Dyadic::one()));
        } else if 2 * j == m {
            table.push(ComplexBall::exact(Dyadic::from_int(-1), Dyadic::zero()));
        } else if 4 * j == 3 * m {
            table.push(ComplexBall::exact(Dyadic::zero(), Dyadic::from_int(-1)));
        } else {
            let (c, s) = sincos_two_pi_frac(j, m, prec);
            table.push(ComplexBall::new(c.mid, s.mid, c.rad.add(&s.rad)));
        }
    }
    cache.lock().unwrap().insert((m, prec), table.clone());
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_matches_f64() {
        let p = pi_ball(128);
        assert!((p.to_f64() - std::f64::consts::PI).abs() < 1e-15);
        assert!(p.rad.msb_exp().unwrap() < -120);
    }

    #[test]
    fn pi_nested_precision() {
        let lo = pi_ball(64);
        let hi = pi_ball(512);
        // the high precision midpoint must lie in the low precision ball
        let d = lo.mid.sub(&hi.mid).abs();
        assert!(d.cmp_val(&lo.rad.add(&hi.rad)) != Ordering::Greater);
    }

    #[test]
    fn sincos_known_values() {
        // cos(2pi/4)=0, sin=1
        let (c, s) = sincos_two_pi_frac(1, 4, 128);
        assert!(c.mid.abs().add(&c.rad).msb_exp().map_or(true, |e| e < -100));
        assert!((s.to_f64() - 1.0).abs() < 1e-20);
        // cos(2pi/3) = -1/2
        let (c3, s3) = sincos_two_pi_frac(1, 3, 128);
        assert!((c3.to_f64() + 0.5).abs() < 1e-20);
        assert!((s3.to_f64() - 0.75f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sincos_pythagorean() {
        for (k, m) in [(1u64, 7u64), (3, 11), (2, 9), (5, 12), (4, 5)] {
            let (c, s) = sincos_two_pi_frac(k, m, 192);
            let one = c.mul(&c, 192).add(&s.mul(&s, 192), 192);
            let d = one.mid.sub(&Dyadic::one()).abs();
            assert!(d.cmp_val(&one.rad) != Ordering::Greater, "k={k} m={m}");
        }
    }

    #[test]
    fn ball_mul_contains_truth() {
        // (1/3 +- eps) * (1/7 +- eps) contains 1/21
        let a = RealBall::from_rational(&BigRational::new(1.into(), 3.into()), 64);
        let b = RealBall::from_rational(&BigRational::new(1.into(), 7.into()), 64);
        let p = a.mul(&b, 64);
        let truth = BigRational::new(1.into(), 21.into());
        let mut d = p.mid.to_rational() - truth;
        if d < BigRational::zero() {
            d = -d;
        }
        assert!(d <= p.rad.to_rational());
    }

    #[test]
    fn complex_div_roundtrip() {
        let a = ComplexBall::from_f64s(1.25, -2.5);
        let b = ComplexBall::from_f64s(0.5, 3.0);
        let q = a.div(&b, 128).unwrap();
        let back = q.mul(&b, 128);
        let d = back.sub(&a, 128);
        assert!(d.abs_lb().is_zero());
        let expected = Complex64::new(1.25, -2.5) / Complex64::new(0.5, 3.0);
        assert!((q.to_c64() - expected).norm() < 1e-12);
    }

    #[test]
    fn normsq_bound() {
        let v = ComplexBall::from_f64s(3.0, 4.0);
        let n = v.normsq(96);
        assert_eq!(n.to_f64(), 25.0);
        assert!(n.rad.is_zero());
    }
}
