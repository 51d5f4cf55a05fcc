//! Exact arithmetic in Z[zeta_m] and Q(zeta_m).
//!
//! Elements are canonical coefficient vectors of length phi(m): the remainder
//! of any defining polynomial modulo the m-th cyclotomic polynomial. Canonical
//! form makes equality a coefficient comparison.

use crate::ball::{roots_of_unity, ComplexBall};
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Euler's totient via the product formula over distinct prime divisors.
pub fn totient(m: u64) -> u64 {
    assert!(m >= 1);
    let mut result = m;
    let mut n = m;
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            while n % p == 0 {
                n /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

pub fn divisors(m: u64) -> Vec<u64> {
    let mut d = Vec::new();
    let mut i = 1;
    while i * i <= m {
        if m % i == 0 {
            d.push(i);
            if i != m / i {
                d.push(m / i);
            }
        }
        i += 1;
    }
    d.sort_unstable();
    d
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut i = 2;
    while i * i <= p {
        if p % i == 0 {
            return false;
        }
        i += 1;
    }
    true
}

/// Returns (p, k) when m = p^k for prime p and k >= 1.
pub fn prime_power(m: u64) -> Option<(u64, u32)> {
    if m < 2 {
        return None;
    }
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            let mut n = m;
            let mut k = 0;
            while n % p == 0 {
                n /= p;
                k += 1;
            }
            return if n == 1 { Some((p, k)) } else { None };
        }
        p += 1;
    }
    Some((m, 1))
}

/// Dense integer polynomial, ascending degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntPoly {
    pub coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.len() > 1 && coeffs.last().map_or(false, |c| c.is_zero()) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(BigInt::zero());
        }
        IntPoly { coeffs }
    }

    pub fn zero() -> Self {
        IntPoly { coeffs: vec![BigInt::zero()] }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// x^m - 1
    fn x_pow_minus_one(m: u64) -> Self {
        let mut c = vec![BigInt::zero(); m as usize + 1];
        c[0] = BigInt::from(-1);
        c[m as usize] = BigInt::one();
        IntPoly::new(c)
    }

    /// Exact division by a monic polynomial; panics if not exact.
    fn div_exact_monic(&self, divisor: &IntPoly) -> IntPoly {
        let (q, r) = self.div_rem_monic(divisor);
        assert!(r.is_zero(), "inexact cyclotomic division");
        q
    }

    /// Long division by a monic divisor; no denominators appear.
    pub fn div_rem_monic(&self, divisor: &IntPoly) -> (IntPoly, IntPoly) {
        let dd = divisor.degree();
        assert!(divisor.coeffs[dd].is_one(), "divisor must be monic");
        if self.degree() < dd || self.is_zero() {
            return (IntPoly::zero(), self.clone());
        }
        let mut rem = self.coeffs.clone();
        let mut quot = vec![BigInt::zero(); self.degree() - dd + 1];
        for i in (dd..=self.degree()).rev() {
            let c = rem[i].clone();
            if c.is_zero() {
                continue;
            }
            quot[i - dd] = c.clone();
            for (j, d) in divisor.coeffs.iter().enumerate() {
                let idx = i - dd + j;
                let t = d * &c;
                rem[idx] -= t;
            }
        }
        (IntPoly::new(quot), IntPoly::new(rem))
    }
}

/// The m-th cyclotomic polynomial, computed by iterated exact division of
/// x^m - 1 by the cyclotomic polynomials of the proper divisors.
pub fn cyclotomic_poly(m: u64) -> IntPoly {
    static CACHE: OnceLock<Mutex<HashMap<u64, IntPoly>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(p) = cache.lock().unwrap().get(&m) {
        return p.clone();
    }
    let mut poly = IntPoly::x_pow_minus_one(m);
    for d in divisors(m) {
        if d < m {
            poly = poly.div_exact_monic(&cyclotomic_poly(d));
        }
    }
    debug_assert_eq!(poly.degree() as u64, totient(m));
    cache.lock().unwrap().insert(m, poly.clone());
    poly
}

/// Table of x^k mod Phi_m for k in 0..max(m, 2*phi(m)-1), used for
/// multiplication and exponent folding.
fn power_table(m: u64) -> Vec<Vec<BigInt>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Vec<Vec<BigInt>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().unwrap().get(&m) {
        return t.clone();
    }
    let phi = totient(m) as usize;
    let phim = cyclotomic_poly(m);
    let count = (m as usize).max(2 * phi);
    let mut table: Vec<Vec<BigInt>> = Vec::with_capacity(count);
    for k in 0..count {
        if k < phi {
            let mut row = vec![BigInt::zero(); phi];
            row[k] = BigInt::one();
            table.push(row);
        } else {
            // x^k = x * x^(k-1) mod Phi
            let prev = &table[k - 1];
            let mut row = vec![BigInt::zero(); phi];
            for (i, c) in prev.iter().enumerate() {
                if i + 1 < phi {
                    row[i + 1] += c;
                } else {
                    // x^phi = -(phi_0 + phi_1 x + ...)/1, Phi monic
                    for j in 0..phi {
                        row[j] -= c * &phim.coeffs[j];
                    }
                }
            }
            table.push(row);
        }
    }
    cache.lock().unwrap().insert(m, table.clone());
    table
}

/// Element of Z[zeta_m] in canonical form (coefficients of zeta^0..zeta^(phi-1)).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CycInt {
    m: u64,
    coeffs: Vec<BigInt>,
}

impl CycInt {
    pub fn zero(m: u64) -> Self {
        CycInt { m, coeffs: vec![BigInt::zero(); totient(m) as usize] }
    }

    pub fn from_int(m: u64, v: impl Into<BigInt>) -> Self {
        let mut z = CycInt::zero(m);
        z.coeffs[0] = v.into();
        z
    }

    pub fn one(m: u64) -> Self {
        CycInt::from_int(m, 1)
    }

    /// zeta_m^k in canonical form.
    pub fn root_power(m: u64, k: u64) -> Self {
        let table = power_table(m);
        CycInt { m, coeffs: table[(k % m) as usize].clone() }
    }

    /// Canonical reduction of an arbitrary coefficient vector in zeta_m.
    pub fn from_poly_coeffs(m: u64, coeffs: &[BigInt]) -> Self {
        let phi = totient(m) as usize;
        let mut acc = vec![BigInt::zero(); phi];
        let table = power_table(m);
        for (k, c) in coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            // zeta^m = 1, so exponents fold mod m before the table lookup
            let row = &table[k % m as usize];
            for j in 0..phi {
                acc[j] += c * &row[j];
            }
        }
        CycInt { m, coeffs: acc }
    }

    pub fn order(&self) -> u64 {
        self.m
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<BigInt> {
        self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    fn check_order(&self, rhs: &Self) -> Result<()> {
        if self.m != rhs.m {
            Err(Error::MismatchedModulus(self.m, rhs.m))
        } else {
            Ok(())
        }
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.check_order(rhs)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Ok(CycInt { m: self.m, coeffs })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.check_order(rhs)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Ok(CycInt { m: self.m, coeffs })
    }

    pub fn neg(&self) -> Self {
        CycInt { m: self.m, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        self.check_order(rhs)?;
        let phi = self.coeffs.len();
        let mut conv = vec![BigInt::zero(); 2 * phi - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                conv[i + j] += a * b;
            }
        }
        let table = power_table(self.m);
        let mut acc = vec![BigInt::zero(); phi];
        for (k, c) in conv.into_iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for j in 0..phi {
                acc[j] += &c * &table[k][j];
            }
        }
        Ok(CycInt { m: self.m, coeffs: acc })
    }

    pub fn scale(&self, s: &BigInt) -> Self {
        CycInt { m: self.m, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// Image under zeta_m -> zeta_m^(-1); the complex conjugate.
    pub fn conj(&self) -> Self {
        let table = power_table(self.m);
        let phi = self.coeffs.len();
        let mut acc = vec![BigInt::zero(); phi];
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let e = ((self.m - j as u64) % self.m) as usize;
            for i in 0..phi {
                acc[i] += c * &table[e][i];
            }
        }
        CycInt { m: self.m, coeffs: acc }
    }

    /// |self|^2 = self * conj(self); embeds to a nonnegative real.
    pub fn normsq(&self) -> Self {
        self.mul(&self.conj()).expect("same order")
    }

    pub fn to_rat(&self) -> CycRat {
        CycRat {
            m: self.m,
            coeffs: self.coeffs.iter().map(|c| BigRational::from(c.clone())).collect(),
        }
    }

    /// Reinterpret in Z[zeta_M] for m | M.
    pub fn to_order(&self, target: u64) -> Result<Self> {
        if target % self.m != 0 {
            return Err(Error::InvalidInput(format!(
                "{} does not divide target order {}",
                self.m, target
            )));
        }
        let step = target / self.m;
        let phi = totient(target) as usize;
        let table = power_table(target);
        let mut acc = vec![BigInt::zero(); phi];
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let e = (j as u64 * step % target) as usize;
            for i in 0..phi {
                acc[i] += c * &table[e][i];
            }
        }
        Ok(CycInt { m: target, coeffs: acc })
    }

    /// Sum of canonical coefficients mod p.
    pub fn coefficient_sum_mod(&self, p: u64) -> u64 {
        let pb = BigInt::from(p);
        let mut sum = BigInt::zero();
        for c in &self.coeffs {
            sum += c.mod_floor(&pb);
        }
        sum.mod_floor(&pb).try_into().unwrap_or(0)
    }

    pub fn embed(&self, prec: u64) -> ComplexBall {
        embed_ints(self.m, &self.coeffs, prec)
    }

    /// Max |coefficient|.
    pub fn coeff_max(&self) -> BigInt {
        self.coeffs.iter().map(|c| c.abs()).max().unwrap_or_else(BigInt::zero)
    }
}

/// Remainder of an integer polynomial modulo Phi_m, as a canonical element.
pub fn reduce_mod_phi(p: &IntPoly, m: u64) -> CycInt {
    let phim = cyclotomic_poly(m);
    let (_, r) = p.div_rem_monic(&phim);
    let phi = totient(m) as usize;
    let mut coeffs = r.coeffs;
    coeffs.resize(phi, BigInt::zero());
    CycInt { m, coeffs }
}

/// Element of Q(zeta_m) in canonical form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycRat {
    m: u64,
    coeffs: Vec<BigRational>,
}

impl CycRat {
    pub fn zero(m: u64) -> Self {
        CycRat { m, coeffs: vec![BigRational::zero(); totient(m) as usize] }
    }

    pub fn one(m: u64) -> Self {
        CycRat::from_rational(m, BigRational::one())
    }

    pub fn from_rational(m: u64, v: BigRational) -> Self {
        let mut z = CycRat::zero(m);
        z.coeffs[0] = v;
        z
    }

    pub fn from_coeffs(m: u64, coeffs: Vec<BigRational>) -> Self {
        assert_eq!(coeffs.len(), totient(m) as usize);
        CycRat { m, coeffs }
    }

    pub fn root_power(m: u64, k: u64) -> Self {
        CycInt::root_power(m, k).to_rat()
    }

    /// A complex rational re + im*i inside Q(zeta_m); requires 4 | m.
    pub fn from_complex_rational(m: u64, re: &BigRational, im: &BigRational) -> Result<Self> {
        if m % 4 != 0 {
            return Err(Error::InvalidInput(format!("order {m} does not contain i (4 must divide m)")));
        }
        let i = CycRat::root_power(m, m / 4);
        let re_part = CycRat::from_rational(m, re.clone());
        let im_part = i.scale(im);
        re_part.add(&im_part)
    }

    pub fn order(&self) -> u64 {
        self.m
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    fn check(&self, rhs: &Self) -> Result<()> {
        if self.m != rhs.m {
            Err(Error::MismatchedModulus(self.m, rhs.m))
        } else {
            Ok(())
        }
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.check(rhs)?;
        Ok(CycRat {
            m: self.m,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.check(rhs)?;
        Ok(CycRat {
            m: self.m,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn neg(&self) -> Self {
        CycRat { m: self.m, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        CycRat { m: self.m, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        self.check(rhs)?;
        let phi = self.coeffs.len();
        let mut conv = vec![BigRational::zero(); 2 * phi - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                conv[i + j] += a * b;
            }
        }
        let table = power_table(self.m);
        let mut acc = vec![BigRational::zero(); phi];
        for (k, c) in conv.into_iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for j in 0..phi {
                if !table[k][j].is_zero() {
                    acc[j] += &c * BigRational::from(table[k][j].clone());
                }
            }
        }
        Ok(CycRat { m: self.m, coeffs: acc })
    }

    pub fn conj(&self) -> Self {
        let table = power_table(self.m);
        let phi = self.coeffs.len();
        let mut acc = vec![BigRational::zero(); phi];
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let e = ((self.m - j as u64) % self.m) as usize;
            for i in 0..phi {
                if !table[e][i].is_zero() {
                    acc[i] += c * BigRational::from(table[e][i].clone());
                }
            }
        }
        CycRat { m: self.m, coeffs: acc }
    }

    pub fn normsq(&self) -> Self {
        self.mul(&self.conj()).expect("same order")
    }

    /// Multiplicative inverse via the extended Euclidean algorithm against Phi_m.
    pub fn inverse(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let phim: Vec<BigRational> = cyclotomic_poly(self.m)
            .coeffs
            .iter()
            .map(|c| BigRational::from(c.clone()))
            .collect();
        let (g, u) = poly_ext_gcd(&self.coeffs, &phim);
        // g is a nonzero constant (Phi_m irreducible over Q)
        debug_assert!(g.len() == 1 && !g[0].is_zero());
        let inv_c = g[0].clone().recip();
        let coeffs_full: Vec<BigRational> = u.iter().map(|c| c * &inv_c).collect();
        // reduce mod Phi_m (degree already < phi, but normalize length)
        let phi = totient(self.m) as usize;
        let mut coeffs = coeffs_full;
        coeffs.resize(phi, BigRational::zero());
        Ok(CycRat { m: self.m, coeffs })
    }

    pub fn div(&self, rhs: &Self) -> Result<Self> {
        self.mul(&rhs.inverse()?)
    }

    pub fn to_order(&self, target: u64) -> Result<Self> {
        if target % self.m != 0 {
            return Err(Error::InvalidInput(format!(
                "{} does not divide target order {}",
                self.m, target
            )));
        }
        let step = target / self.m;
        let phi = totient(target) as usize;
        let table = power_table(target);
        let mut acc = vec![BigRational::zero(); phi];
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let e = (j as u64 * step % target) as usize;
            for i in 0..phi {
                if !table[e][i].is_zero() {
                    acc[i] += c * BigRational::from(table[e][i].clone());
                }
            }
        }
        Ok(CycRat { m: target, coeffs: acc })
    }

    /// If the element is rational (all higher coefficients zero), return it.
    pub fn as_rational(&self) -> Option<BigRational> {
        if self.coeffs[1..].iter().all(|c| c.is_zero()) {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }

    pub fn embed(&self, prec: u64) -> ComplexBall {
        embed_rats(self.m, &self.coeffs, prec)
    }

    /// Sign of a real element (conj-invariant); exact zero test first, then
    /// embedding at escalating precision.
    pub fn real_sign(&self) -> Ordering {
        if self.is_zero() {
            return Ordering::Equal;
        }
        debug_assert_eq!(self, &self.conj(), "real_sign on a non-real element");
        let mut prec = 64;
        loop {
            let b = self.embed(prec);
            let lo = b.re.sub(&b.rad);
            let hi = b.re.add(&b.rad);
            if !lo.is_negative() && !lo.is_zero() {
                return Ordering::Greater;
            }
            if hi.is_negative() {
                return Ordering::Less;
            }
            prec *= 2;
            assert!(prec <= 1 << 22, "sign resolution exceeded precision cap");
        }
    }

    /// Compare two real elements.
    pub fn real_cmp(&self, rhs: &Self) -> Result<Ordering> {
        Ok(self.sub(rhs)?.real_sign())
    }
}

/// Polynomial extended gcd over Q: returns (g, u) with u*a = g (mod b) and g
/// the gcd (constant for coprime inputs).
fn poly_ext_gcd(a: &[BigRational], b: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    fn deg(p: &[BigRational]) -> Option<usize> {
        p.iter().rposition(|c| !c.is_zero())
    }
    fn trim(mut p: Vec<BigRational>) -> Vec<BigRational> {
        while p.len() > 1 && p.last().map_or(false, |c| c.is_zero()) {
            p.pop();
        }
        p
    }
    fn poly_div(a: &[BigRational], b: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
        let db = deg(b).expect("division by zero poly");
        let mut rem = a.to_vec();
        let mut quot = vec![BigRational::zero(); a.len().saturating_sub(db).max(1)];
        while let Some(dr) = deg(&rem) {
            if dr < db {
                break;
            }
            let c = &rem[dr] / &b[db];
            quot[dr - db] = c.clone();
            for j in 0..=db {
                let t = &b[j] * &c;
                rem[dr - db + j] -= t;
            }
            rem[dr] = BigRational::zero();
        }
        (trim(quot), trim(rem))
    }
    fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
        let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                if !y.is_zero() {
                    out[i + j] += x * y;
                }
            }
        }
        trim(out)
    }
    fn poly_sub(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
        let n = a.len().max(b.len());
        let mut out = vec![BigRational::zero(); n];
        for (i, x) in a.iter().enumerate() {
            out[i] += x;
        }
        for (i, y) in b.iter().enumerate() {
            out[i] -= y;
        }
        trim(out)
    }

    let mut r0 = trim(a.to_vec());
    let mut r1 = trim(b.to_vec());
    let mut s0 = vec![BigRational::one()];
    let mut s1 = vec![BigRational::zero()];
    while deg(&r1).is_some() {
        let (q, r) = poly_div(&r0, &r1);
        let s = poly_sub(&s0, &poly_mul(&q, &s1));
        r0 = r1;
        r1 = r;
        s0 = s1;
        s1 = s;
    }
    (r0, s0)
}

fn embed_ints(m: u64, coeffs: &[BigInt], prec: u64) -> ComplexBall {
    let work = prec + 8;
    let roots = roots_of_unity(m, work);
    let mut acc = ComplexBall::zero();
    for (j, c) in coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let term = {
            let s = ComplexBall::exact(Dyadic::from_int(c.clone()), Dyadic::zero());
            roots[j].mul(&s, work)
        };
        acc = acc.add(&term, work);
    }
    acc
}

fn embed_rats(m: u64, coeffs: &[BigRational], prec: u64) -> ComplexBall {
    let work = prec + 8;
    let roots = roots_of_unity(m, work);
    let mut acc = ComplexBall::zero();
    for (j, c) in coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let term = roots[j].scale_rational(c, work);
        acc = acc.add(&term, work);
    }
    acc
}

/// Embed with automatic precision escalation until the ball radius is below
/// 2^(-target_bits).
pub fn embed_to_radius_int(a: &CycInt, target_bits: u64) -> ComplexBall {
    let mut prec = target_bits + 16;
    loop {
        let b = a.embed(prec);
        if b.rad.is_zero() || b.rad.msb_exp().map_or(true, |e| e <= -(target_bits as i64)) {
            return b;
        }
        prec *= 2;
    }
}

pub fn embed_to_radius_rat(a: &CycRat, target_bits: u64) -> ComplexBall {
    let mut prec = target_bits + 16;
    loop {
        let b = a.embed(prec);
        if b.rad.is_zero() || b.rad.msb_exp().map_or(true, |e| e <= -(target_bits as i64)) {
            return b;
        }
        prec *= 2;
    }
}

/// Guaranteed minimum complex distance between distinct elements of Z[zeta_m]
/// with canonical coefficients in [-A, A]: 1 / (2*A*phi(m) + 1)^(phi(m)-1).
pub fn separation_bound(a: &BigInt, m: u64) -> BigRational {
    assert!(a.is_positive(), "coefficient bound must be >= 1");
    let phi = BigInt::from(totient(m));
    let base = BigInt::from(2) * a * &phi + BigInt::one();
    let exp = (totient(m) - 1) as u32;
    BigRational::new(BigInt::one(), base.pow(exp))
}

/// Constructive bit bound B with log2 |a_i| <= B for every canonical
/// coefficient of the zeta_m-permanent of a binary n x n matrix.
///
/// Chain: the folded degree-(m-1) polynomial has nonnegative coefficients
/// summing to Per(X) <= n!; the cyclotomic coefficients are bounded by
/// N = ceil(m^(d(m)/2)); the quotient from dividing by the monic Phi_m has
/// coefficient sum at most (1+N)^(m-1-phi(m)) * n!, and the remainder
/// coefficients are bounded by n! + N * that sum.
pub fn rep_coeff_bound(m: u64, n: u64) -> u64 {
    assert!(m >= 2 && n >= 1);
    let phi = totient(m);
    let fact = factorial(n);
    let d = divisors(m).len() as u32;
    // N = ceil(sqrt(m^d)) >= e^{(d/2) ln m}
    let md = BigInt::from(m).pow(d);
    let s = md.sqrt();
    let nbound = if &s * &s == md { s } else { s + 1 };
    let quot_deg = (m as i64 - 1 - phi as i64).max(0) as u32;
    let quot_sum = (BigInt::one() + &nbound).pow(quot_deg) * &fact;
    let bound = &fact + &nbound * quot_sum;
    bound.bits()
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}
