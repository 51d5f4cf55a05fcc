//! Arbitrary-precision dyadic numbers: `mant * 2^exp` with a `BigInt`
//! mantissa. All rounding is explicit and returns an upper bound on the
//! rounding error, so callers can maintain rigorous error radii.

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use std::cmp::Ordering;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dyadic {
    mant: BigInt,
    exp: i64,
}

impl Dyadic {
    pub fn zero() -> Self {
        Dyadic { mant: BigInt::zero(), exp: 0 }
    }

    pub fn new(mant: BigInt, exp: i64) -> Self {
        let mut d = Dyadic { mant, exp };
        d.normalize();
        d
    }

    pub fn one() -> Self {
        Dyadic::new(BigInt::from(1), 0)
    }

    /// 2^e
    pub fn pow2(e: i64) -> Self {
        Dyadic { mant: BigInt::from(1), exp: e }
    }

    pub fn from_int(v: impl Into<BigInt>) -> Self {
        Dyadic::new(v.into(), 0)
    }

    fn normalize(&mut self) {
        if self.mant.is_zero() {
            self.exp = 0;
            return;
        }
        let tz = self.mant.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            self.mant >>= tz;
            self.exp += tz as i64;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mant.sign() == Sign::Minus
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mant
    }

    pub fn exponent(&self) -> i64 {
        self.exp
    }

    /// Number of significant bits of the mantissa.
    pub fn bits(&self) -> u64 {
        self.mant.bits()
    }

    /// Exponent of the most significant bit: value is in [2^(e-1), 2^e).
    /// Returns None for zero.
    pub fn msb_exp(&self) -> Option<i64> {
        if self.mant.is_zero() {
            None
        } else {
            Some(self.exp + self.mant.bits() as i64)
        }
    }

    pub fn neg(&self) -> Self {
        Dyadic { mant: -&self.mant, exp: self.exp }
    }

    pub fn abs(&self) -> Self {
        Dyadic { mant: self.mant.abs(), exp: self.exp }
    }

    /// Exact addition.
    pub fn add(&self, rhs: &Self) -> Self {
        if self.mant.is_zero() {
            return rhs.clone();
        }
        if rhs.mant.is_zero() {
            return self.clone();
        }
        let exp = self.exp.min(rhs.exp);
        let a = &self.mant << (self.exp - exp) as u64;
        let b = &rhs.mant << (rhs.exp - exp) as u64;
        Dyadic::new(a + b, exp)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    /// Exact multiplication.
    pub fn mul(&self, rhs: &Self) -> Self {
        if self.mant.is_zero() || rhs.mant.is_zero() {
            return Dyadic::zero();
        }
        Dyadic::new(&self.mant * &rhs.mant, self.exp + rhs.exp)
    }

    pub fn shl(&self, k: i64) -> Self {
        if self.mant.is_zero() {
            return Dyadic::zero();
        }
        Dyadic { mant: self.mant.clone(), exp: self.exp + k }
    }

    /// Truncate the mantissa to `prec` bits (toward zero). Returns the rounded
    /// value and an upper bound on the absolute rounding error.
    pub fn round_to(&self, prec: u64) -> (Self, Self) {
        let bits = self.mant.bits();
        if bits <= prec {
            return (self.clone(), Dyadic::zero());
        }
        let cut = (bits - prec) as i64;
        let mant = &self.mant >> cut as u64;
        let err = Dyadic::pow2(self.exp + cut);
        (Dyadic::new(mant, self.exp + cut), err)
    }

    /// Round up in magnitude to at most `prec` mantissa bits. Requires
    /// a nonnegative value; used for error radii.
    pub fn round_up_mag(&self, prec: u64) -> Self {
        debug_assert!(!self.is_negative());
        let bits = self.mant.bits();
        if bits <= prec {
            return self.clone();
        }
        let cut = (bits - prec) as u64;
        let mut mant = &self.mant >> cut;
        mant += 1;
        Dyadic::new(mant, self.exp + cut as i64)
    }

    pub fn cmp_val(&self, rhs: &Self) -> Ordering {
        match (self.mant.sign(), rhs.mant.sign()) {
            (Sign::Minus, Sign::NoSign) | (Sign::Minus, Sign::Plus) | (Sign::NoSign, Sign::Plus) => {
                return Ordering::Less
            }
            (Sign::Plus, Sign::NoSign) | (Sign::Plus, Sign::Minus) | (Sign::NoSign, Sign::Minus) => {
                return Ordering::Greater
            }
            (Sign::NoSign, Sign::NoSign) => return Ordering::Equal,
            _ => {}
        }
        // Same sign; compare magnitudes by msb first to avoid huge shifts.
        let (ma, mb) = (self.msb_exp().unwrap(), rhs.msb_exp().unwrap());
        let positive = self.mant.sign() == Sign::Plus;
        if ma != mb {
            let mag = if ma > mb { Ordering::Greater } else { Ordering::Less };
            return if positive { mag } else { mag.reverse() };
        }
        match self.sub(rhs).mant.sign() {
            Sign::Minus => Ordering::Less,
            Sign::NoSign => Ordering::Equal,
            Sign::Plus => Ordering::Greater,
        }
    }

    /// a/b truncated toward zero at `prec` significant bits, with error bound.
    pub fn div_round(&self, rhs: &Self, prec: u64) -> (Self, Self) {
        assert!(!rhs.is_zero(), "dyadic division by zero");
        if self.is_zero() {
            return (Dyadic::zero(), Dyadic::zero());
        }
        // Scale the numerator so the integer quotient carries >= prec+1 bits.
        let na = self.mant.bits() as i64;
        let nb = rhs.mant.bits() as i64;
        let shift = (nb - na + prec as i64 + 2).max(0) as u64;
        let num = &self.mant << shift;
        let q = num / &rhs.mant;
        let exp = self.exp - rhs.exp - shift as i64;
        let err = Dyadic::pow2(exp); // |truncation| <= 1 ulp
        (Dyadic::new(q, exp), err)
    }

    /// Convert an exact rational to a dyadic with `prec` significant bits.
    /// Returns the value and an error upper bound.
    pub fn from_rational(r: &BigRational, prec: u64) -> (Self, Self) {
        let num = Dyadic::from_int(r.numer().clone());
        let den = Dyadic::from_int(r.denom().clone());
        num.div_round(&den, prec)
    }

    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(Dyadic::zero());
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1 } else { 1 };
        let exp_raw = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, exp) = if exp_raw == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp_raw - 1075)
        };
        Some(Dyadic::new(BigInt::from(sign) * BigInt::from(mant), exp))
    }

    /// Nearest f64 (may overflow to infinity for huge exponents).
    pub fn to_f64(&self) -> f64 {
        if self.mant.is_zero() {
            return 0.0;
        }
        let bits = self.mant.bits();
        if bits <= 53 && self.exp.abs() < 900 {
            return self.mant.to_f64().unwrap_or(f64::NAN) * (self.exp as f64).exp2();
        }
        let cut = bits as i64 - 54;
        let top = if cut > 0 { &self.mant >> cut as u64 } else { self.mant.clone() };
        let e = self.exp + cut.max(0);
        top.to_f64().unwrap_or(f64::NAN) * (e as f64).exp2()
    }

    pub fn to_rational(&self) -> BigRational {
        if self.exp >= 0 {
            BigRational::from(&self.mant << self.exp as u64)
        } else {
            BigRational::new(self.mant.clone(), BigInt::from(1) << (-self.exp) as u64)
        }
    }

    /// Integer square root based upper bound: returns d with d^2 >= self.
    /// Requires self >= 0.
    pub fn sqrt_ub(&self) -> Self {
        debug_assert!(!self.is_negative());
        if self.is_zero() {
            return Dyadic::zero();
        }
        // Make the exponent even, with at least ~64 fractional guard bits.
        let mut mant = self.mant.clone();
        let mut exp = self.exp;
        let guard = 64i64 + (mant.bits() as i64 & 1);
        let shift = if (exp - guard) % 2 == 0 { guard } else { guard + 1 };
        mant <<= shift as u64;
        exp -= shift;
        let r = mant.sqrt();
        let rr = if &r * &r >= mant { r } else { r + 1 };
        Dyadic::new(rr, exp / 2)
    }

    /// Lower bound on the square root (d^2 <= self). Requires self >= 0.
    pub fn sqrt_lb(&self) -> Self {
        debug_assert!(!self.is_negative());
        if self.is_zero() {
            return Dyadic::zero();
        }
        let mut mant = self.mant.clone();
        let mut exp = self.exp;
        let guard = 64i64 + (mant.bits() as i64 & 1);
        let shift = if (exp - guard) % 2 == 0 { guard } else { guard + 1 };
        mant <<= shift as u64;
        exp -= shift;
        let r = mant.sqrt(); // floor sqrt
        Dyadic::new(r, exp / 2)
    }

    /// Decimal rendering with `digits` significant digits. When `round_up` the
    /// result is guaranteed >= the true magnitude (used for error bounds).
    pub fn to_decimal_string(&self, digits: usize, round_up: bool) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let neg = self.is_negative();
        let mag = self.abs().to_rational();
        // order of magnitude
        let mut e10: i64 = 0;
        let ten = BigRational::from(BigInt::from(10));
        let one = BigRational::from(BigInt::from(1));
        let mut v = mag.clone();
        while v >= ten {
            v /= ten.clone();
            e10 += 1;
        }
        while v < one {
            v *= ten.clone();
            e10 -= 1;
        }
        // v in [1, 10): emit digits
        let scale = BigInt::from(10).pow(digits as u32 - 1);
        let scaled = v * BigRational::from(scale);
        let floor = scaled.floor().to_integer();
        let digits_int = if round_up && scaled != BigRational::from(floor.clone()) {
            floor + 1
        } else {
            floor
        };
        let s = digits_int.to_string();
        let (head, tail) = s.split_at(1);
        let body = if tail.is_empty() { head.to_string() } else { format!("{head}.{tail}") };
        let sign = if neg { "-" } else { "" };
        if e10 == 0 {
            format!("{sign}{body}")
        } else {
            format!("{sign}{body}e{e10}")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_mul_roundtrip() {
        let a = Dyadic::from_f64(1.5).unwrap();
        let b = Dyadic::from_f64(-0.25).unwrap();
        assert_eq!(a.add(&b).to_f64(), 1.25);
        assert_eq!(a.mul(&b).to_f64(), -0.375);
        assert_eq!(a.sub(&a).to_f64(), 0.0);
    }

    #[test]
    fn rounding_error_bound() {
        let a = Dyadic::new(BigInt::from(0x1234_5678_9abc_def0u64), -80);
        let (r, e) = a.round_to(20);
        let diff = a.sub(&r).abs();
        assert!(diff.cmp_val(&e) != Ordering::Greater);
        assert!(r.bits() <= 20);
    }

    #[test]
    fn division_bounds() {
        let a = Dyadic::from_int(1);
        let b = Dyadic::from_int(3);
        let (q, e) = a.div_round(&b, 100);
        let back = q.mul(&b);
        let diff = a.sub(&back).abs();
        // |1 - 3q| <= 3 * err
        assert!(diff.cmp_val(&e.mul(&Dyadic::from_int(3))) != Ordering::Greater);
        assert!((q.to_f64() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn sqrt_directed() {
        for v in [2.0f64, 3.0, 10.0, 0.5, 123456.789] {
            let d = Dyadic::from_f64(v).unwrap();
            let ub = d.sqrt_ub();
            let lb = d.sqrt_lb();
            assert!(ub.mul(&ub).cmp_val(&d) != Ordering::Less);
            assert!(lb.mul(&lb).cmp_val(&d) != Ordering::Greater);
            assert!((ub.to_f64() - v.sqrt()).abs() < 1e-7);
        }
    }

    #[test]
    fn f64_roundtrip_exact() {
        for v in [0.1, -3.75, 1e-300, 2.2250738585072014e-308, 123.0] {
            let d = Dyadic::from_f64(v).unwrap();
            assert_eq!(d.to_f64(), v);
        }
    }

    #[test]
    fn cmp_across_magnitudes() {
        let a = Dyadic::pow2(-500);
        let b = Dyadic::pow2(500);
        assert_eq!(a.cmp_val(&b), Ordering::Less);
        assert_eq!(b.cmp_val(&a), Ordering::Greater);
        assert_eq!(a.cmp_val(&a), Ordering::Equal);
        assert_eq!(a.neg().cmp_val(&a), Ordering::Less);
    }

    #[test]
    fn decimal_rendering() {
        let d = Dyadic::from_f64(0.125).unwrap();
        assert_eq!(d.to_decimal_string(3, false), "1.25e-1");
        let e = Dyadic::from_int(1000);
        assert_eq!(e.to_decimal_string(4, false), "1.000e3");
    }
}
