//! Random self-reduction for z-permanents: sample a Gaussian (or truncated
//! uniform) matrix, walk the segment X(t) = (1-t)Y + tM, query a noisy value
//! oracle at L points, and decode the degree-n polynomial q(t) = Per_z(X(t))
//! with the Berlekamp-Welch algorithm over the exact field Q(zeta_lcm(4,m)).
//!
//! Samples are snapped to a dyadic grid so every oracle value is an exact
//! field element; the continuous-distribution content lives in the
//! autocorrelation quadrature at the bottom of the module.

use crate::cyclotomic::CycRat;
use crate::error::{Error, Result};
use crate::gauss::GaussRat;
use crate::zperm::{per_z_value_ring, CycRatRing, Domain, KernelCaps, MatrixZ, RootOfUnity};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use std::collections::HashMap;

/// Sampling family with mean-0 variance-1 base distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DistFamily {
    ComplexGaussian,
    TruncatedUniform,
}

impl DistFamily {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gaussian" | "complex_gaussian" => Ok(DistFamily::ComplexGaussian),
            "truncated_uniform" | "uniform" => Ok(DistFamily::TruncatedUniform),
            other => Err(Error::InvalidInput(format!("unknown distribution family {other}"))),
        }
    }
}

/// Specification of the sampling distribution: base family shifted by `mean`
/// and scaled to `variance`, with entries snapped to the dyadic grid
/// 2^(-discretization_bits) so downstream field arithmetic is exact.
#[derive(Debug, Clone)]
pub struct DistSpec {
    pub family: DistFamily,
    pub mean: (f64, f64),
    pub variance: f64,
    pub truncation: Option<f64>,
    pub discretization_bits: u32,
}

impl DistSpec {
    pub fn standard_gaussian(discretization_bits: u32) -> Self {
        DistSpec {
            family: DistFamily::ComplexGaussian,
            mean: (0.0, 0.0),
            variance: 1.0,
            truncation: None,
            discretization_bits,
        }
    }

    pub fn truncated_uniform(discretization_bits: u32) -> Self {
        DistSpec {
            family: DistFamily::TruncatedUniform,
            mean: (0.0, 0.0),
            variance: 1.0,
            truncation: None,
            discretization_bits,
        }
    }

    /// One complex sample before discretization.
    fn sample_f64(&self, rng: &mut ChaCha12Rng) -> (f64, f64) {
        let sigma = (self.variance / 2.0).sqrt();
        loop {
            let (re, im) = match self.family {
                DistFamily::ComplexGaussian => {
                    let normal = Normal::new(0.0, 1.0).unwrap();
                    (normal.sample(rng), normal.sample(rng))
                }
                DistFamily::TruncatedUniform => {
                    // uniform on [-sqrt(3), sqrt(3)]: mean 0, variance 1
                    let a = 3f64.sqrt();
                    (rng.gen_range(-a..=a), rng.gen_range(-a..=a))
                }
            };
            if let Some(cut) = self.truncation {
                if (re * re + im * im).sqrt() > cut {
                    continue;
                }
            }
            return (self.mean.0 + sigma * re, self.mean.1 + sigma * im);
        }
    }

    /// One exact sample on the dyadic grid.
    pub fn sample(&self, rng: &mut ChaCha12Rng) -> GaussRat {
        let (re, im) = self.sample_f64(rng);
        GaussRat::new(
            snap_dyadic(re, self.discretization_bits),
            snap_dyadic(im, self.discretization_bits),
        )
    }
}

pub(crate) fn snap_dyadic(x: f64, bits: u32) -> BigRational {
    let scale = (bits as f64).exp2();
    let scaled = (x * scale).round();
    BigRational::new(
        BigInt::from(scaled as i64),
        BigInt::one() << bits as usize,
    )
}

/// An i.i.d. matrix sample from the spec, as an exact gaussian_rational matrix.
pub fn sample_matrix(spec: &DistSpec, n: usize, rng: &mut ChaCha12Rng) -> MatrixZ {
    let entries: Vec<GaussRat> = (0..n * n).map(|_| spec.sample(rng)).collect();
    MatrixZ::new_gauss(n, entries).expect("square sample")
}

// ---------------------------------------------------------------------------
// Berlekamp-Welch over Q(zeta_M)
// ---------------------------------------------------------------------------

/// Deterministic Miller-Rabin for u64.
fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a % n, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    acc
}

/// A prime p = 1 (mod order) with a root w of multiplicative order `order`,
/// deterministically chosen by index.
fn field_prime(order: u64, index: u64) -> (u64, u64) {
    let mut p = (1u64 << 49) + 1 + index * 2 * order * 1_000_003;
    p += (order - (p - 1) % order) % order; // p = 1 mod order
    loop {
        if is_prime_u64(p) {
            // find an element of order exactly `order`
            let prime_factors: Vec<u64> = {
                let mut f = Vec::new();
                let mut n = order;
                let mut q = 2;
                while q * q <= n {
                    if n % q == 0 {
                        f.push(q);
                        while n % q == 0 {
                            n /= q;
                        }
                    }
                    q += 1;
                }
                if n > 1 {
                    f.push(n);
                }
                f
            };
            'try_gen: for x in 2u64..200 {
                let w = pow_mod(x, (p - 1) / order, p);
                if w == 1 {
                    continue;
                }
                for &q in &prime_factors {
                    if pow_mod(w, order / q, p) == 1 {
                        continue 'try_gen;
                    }
                }
                return (p, w);
            }
        }
        p += 2 * order;
    }
}

fn bigint_mod(v: &BigInt, p: u64) -> u64 {
    let m = v.mod_floor(&BigInt::from(p));
    m.to_u64().unwrap()
}

/// Ring hom Q(zeta_M) -> F_p with zeta mapped to w; None if a denominator
/// vanishes mod p.
fn cyc_mod_p(v: &CycRat, p: u64, w: u64) -> Option<u64> {
    let mut acc = 0u64;
    let mut wj = 1u64;
    for c in v.coeffs() {
        if !c.is_zero() {
            let den = bigint_mod(c.denom(), p);
            if den == 0 {
                return None;
            }
            let num = bigint_mod(c.numer(), p);
            let val = mul_mod(num, pow_mod(den, p - 2, p), p);
            acc = (acc + mul_mod(val, wj, p)) % p;
        }
        wj = mul_mod(wj, w, p);
    }
    Some(acc)
}

/// Solve a linear system mod p (Gaussian elimination); returns one solution
/// of A x = b or None if inconsistent.
fn solve_mod_p(a: &mut Vec<Vec<u64>>, b: &mut Vec<u64>, p: u64) -> Option<Vec<u64>> {
    let rows = a.len();
    let cols = if rows > 0 { a[0].len() } else { 0 };
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(pr) = (r..rows).find(|&i| a[i][c] != 0) else {
            continue;
        };
        a.swap(r, pr);
        b.swap(r, pr);
        let inv = pow_mod(a[r][c], p - 2, p);
        for j in c..cols {
            a[r][j] = mul_mod(a[r][j], inv, p);
        }
        b[r] = mul_mod(b[r], inv, p);
        for i in 0..rows {
            if i != r && a[i][c] != 0 {
                let f = a[i][c];
                for j in c..cols {
                    let t = mul_mod(f, a[r][j], p);
                    a[i][j] = (a[i][j] + p - t) % p;
                }
                let t = mul_mod(f, b[r], p);
                b[i] = (b[i] + p - t) % p;
            }
        }
        pivot_cols.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    // consistency: zero rows must have zero rhs
    for i in r..rows {
        if b[i] != 0 {
            return None;
        }
    }
    let mut x = vec![0u64; cols];
    for (ri, &c) in pivot_cols.iter().enumerate() {
        x[c] = b[ri];
    }
    Some(x)
}

fn poly_eval_mod(coeffs: &[u64], x: u64, p: u64) -> u64 {
    let mut acc = 0u64;
    for &c in coeffs.iter().rev() {
        acc = (mul_mod(acc, x, p) + c) % p;
    }
    acc
}

/// Polynomial division N / E mod p; returns quotient if the remainder is zero.
fn poly_div_mod(n: &[u64], e: &[u64], p: u64) -> Option<Vec<u64>> {
    let de = e.iter().rposition(|&c| c != 0)?;
    let mut rem: Vec<u64> = n.to_vec();
    let dn = rem.iter().rposition(|&c| c != 0).unwrap_or(0);
    if dn < de {
        return if rem.iter().all(|&c| c == 0) { Some(vec![0]) } else { None };
    }
    let mut quot = vec![0u64; dn - de + 1];
    let inv = pow_mod(e[de], p - 2, p);
    for i in (de..=dn).rev() {
        let c = mul_mod(rem[i], inv, p);
        if c == 0 {
            continue;
        }
        quot[i - de] = c;
        for j in 0..=de {
            let t = mul_mod(c, e[j], p);
            rem[i - de + j] = (rem[i - de + j] + p - t) % p;
        }
    }
    if rem.iter().all(|&c| c == 0) {
        Some(quot)
    } else {
        None
    }
}

/// Exact Lagrange interpolation of degree <= points.len()-1 through the
/// given field points.
fn lagrange_exact(points: &[(CycRat, CycRat)], m: u64) -> Result<Vec<CycRat>> {
    let k = points.len();
    let mut coeffs = vec![CycRat::zero(m); k];
    for (i, (xi, yi)) in points.iter().enumerate() {
        // basis polynomial prod_{j != i} (x - x_j) / (x_i - x_j)
        let mut basis = vec![CycRat::zero(m); k];
        basis[0] = CycRat::one(m);
        let mut deg = 0;
        let mut denom = CycRat::one(m);
        for (j, (xj, _)) in points.iter().enumerate() {
            if j == i {
                continue;
            }
            // basis *= (x - xj)
            for idx in (0..=deg).rev() {
                let shifted = basis[idx].clone();
                basis[idx + 1] = basis[idx + 1].add(&shifted)?;
                basis[idx] = basis[idx].mul(&xj.neg())?;
            }
            deg += 1;
            denom = denom.mul(&xi.sub(xj)?)?;
        }
        let scale = yi.mul(&denom.inverse()?)?;
        for idx in 0..=deg {
            coeffs[idx] = coeffs[idx].add(&basis[idx].mul(&scale)?)?;
        }
    }
    Ok(coeffs)
}

fn poly_eval_exact(coeffs: &[CycRat], x: &CycRat) -> Result<CycRat> {
    let m = x.order();
    let mut acc = CycRat::zero(m);
    for c in coeffs.iter().rev() {
        acc = acc.mul(x)?.add(c)?;
    }
    Ok(acc)
}

/// Berlekamp-Welch: recover the unique degree-<=d polynomial agreeing with
/// more than (L+d)/2 of the points, over the exact field Q(zeta_M).
///
/// The error-locator linear system E(x_i) y_i = N(x_i) is solved in a prime
/// homomorphic image to locate the corrupted points, then the polynomial is
/// interpolated and verified exactly; if every prime image fails, a fully
/// exact elimination over the field decides.
pub fn berlekamp_welch(xs: &[CycRat], ys: &[CycRat], d: usize) -> Result<Vec<CycRat>> {
    let l = xs.len();
    assert_eq!(l, ys.len());
    if l == 0 || l <= d {
        return Err(Error::DecodingFailure);
    }
    let m = xs[0].order();
    for prime_index in 0..24u64 {
        if let Some(q) = bw_modular_attempt(xs, ys, d, m, prime_index)? {
            return Ok(q);
        }
    }
    bw_exact(xs, ys, d, m)
}

fn agreement_verify(
    xs: &[CycRat],
    ys: &[CycRat],
    d: usize,
    q: &[CycRat],
) -> Result<bool> {
    let l = xs.len();
    let mut agree = 0usize;
    for (x, y) in xs.iter().zip(ys) {
        if poly_eval_exact(q, x)? == *y {
            agree += 1;
        }
    }
    Ok(2 * agree > l + d)
}

fn bw_modular_attempt(
    xs: &[CycRat],
    ys: &[CycRat],
    d: usize,
    m: u64,
    prime_index: u64,
) -> Result<Option<Vec<CycRat>>> {
    let l = xs.len();
    let e = (l - d - 1) / 2;
    let (p, w) = field_prime(m, prime_index);
    let mut xm = Vec::with_capacity(l);
    let mut ym = Vec::with_capacity(l);
    for (x, y) in xs.iter().zip(ys) {
        match (cyc_mod_p(x, p, w), cyc_mod_p(y, p, w)) {
            (Some(a), Some(b)) => {
                xm.push(a);
                ym.push(b);
            }
            _ => return Ok(None),
        }
    }
    // distinct x_i must stay distinct mod p
    for i in 0..l {
        for j in (i + 1)..l {
            if xm[i] == xm[j] {
                return Ok(None);
            }
        }
    }
    // unknowns: N_0..N_{d+e} (d+e+1), E_0..E_{e-1} (e); E = x^e + sum E_j x^j
    let cols = d + e + 1 + e;
    let mut a = vec![vec![0u64; cols]; l];
    let mut b = vec![0u64; l];
    for i in 0..l {
        let mut xp = 1u64;
        for j in 0..=(d + e) {
            a[i][j] = xp;
            xp = mul_mod(xp, xm[i], p);
        }
        let mut xp = 1u64;
        for j in 0..e {
            a[i][d + e + 1 + j] = (p - mul_mod(ym[i], xp, p)) % p;
            xp = mul_mod(xp, xm[i], p);
        }
        b[i] = mul_mod(ym[i], pow_mod(xm[i], e as u64, p), p);
    }
    let Some(x) = solve_mod_p(&mut a, &mut b, p) else {
        return Ok(None);
    };
    let n_coeffs: Vec<u64> = x[..=(d + e)].to_vec();
    let mut e_coeffs: Vec<u64> = x[(d + e + 1)..].to_vec();
    e_coeffs.push(1); // monic
    let Some(q_mod) = poly_div_mod(&n_coeffs, &e_coeffs, p) else {
        return Ok(None);
    };
    // clean points: those matching q mod p
    let clean: Vec<usize> = (0..l)
        .filter(|&i| poly_eval_mod(&q_mod, xm[i], p) == ym[i])
        .collect();
    if clean.len() < d + 1 {
        return Ok(None);
    }
    let pts: Vec<(CycRat, CycRat)> = clean[..=d]
        .iter()
        .map(|&i| (xs[i].clone(), ys[i].clone()))
        .collect();
    let q = lagrange_exact(&pts, m)?;
    if agreement_verify(xs, ys, d, &q)? {
        Ok(Some(q))
    } else {
        Ok(None)
    }
}

/// Fully exact fallback: eliminate the E(x) q(x) = N(x) system over the field.
fn bw_exact(xs: &[CycRat], ys: &[CycRat], d: usize, m: u64) -> Result<Vec<CycRat>> {
    let l = xs.len();
    let e = (l - d - 1) / 2;
    let cols = d + e + 1 + e;
    let mut a: Vec<Vec<CycRat>> = Vec::with_capacity(l);
    let mut rhs: Vec<CycRat> = Vec::with_capacity(l);
    for i in 0..l {
        let mut row = Vec::with_capacity(cols);
        let mut xp = CycRat::one(m);
        for _ in 0..=(d + e) {
            row.push(xp.clone());
            xp = xp.mul(&xs[i])?;
        }
        let mut xp = CycRat::one(m);
        for _ in 0..e {
            row.push(ys[i].mul(&xp)?.neg());
            xp = xp.mul(&xs[i])?;
        }
        rhs.push(ys[i].mul(&xp)?);
        a.push(row);
    }
    // Gaussian elimination over the field
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(pr) = (r..l).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, pr);
        rhs.swap(r, pr);
        let inv = a[r][c].inverse()?;
        for j in c..cols {
            a[r][j] = a[r][j].mul(&inv)?;
        }
        rhs[r] = rhs[r].mul(&inv)?;
        for i in 0..l {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in c..cols {
                    let t = f.mul(&a[r][j])?;
                    a[i][j] = a[i][j].sub(&t)?;
                }
                let t = f.mul(&rhs[r])?;
                rhs[i] = rhs[i].sub(&t)?;
            }
        }
        pivot_cols.push(c);
        r += 1;
        if r == l {
            break;
        }
    }
    for i in r..l {
        if !rhs[i].is_zero() {
            return Err(Error::DecodingFailure);
        }
    }
    let mut x = vec![CycRat::zero(m); cols];
    for (ri, &c) in pivot_cols.iter().enumerate() {
        x[c] = rhs[ri].clone();
    }
    // q = N / E exactly via clean-point interpolation
    let n_coeffs = &x[..=(d + e)];
    let mut e_coeffs: Vec<CycRat> = x[(d + e + 1)..].to_vec();
    e_coeffs.push(CycRat::one(m));
    let clean: Vec<usize> = {
        let mut v = Vec::new();
        for i in 0..l {
            let ei = poly_eval_exact(&e_coeffs, &xs[i])?;
            let ni = poly_eval_exact(n_coeffs, &xs[i])?;
            // E(x_i) y_i = N(x_i); a clean point has E(x_i) != 0 and matches q
            if !ei.is_zero() && ni == ei.mul(&ys[i])? {
                v.push(i);
            }
        }
        v
    };
    if clean.len() < d + 1 {
        return Err(Error::DecodingFailure);
    }
    let pts: Vec<(CycRat, CycRat)> =
        clean[..=d].iter().map(|&i| (xs[i].clone(), ys[i].clone())).collect();
    let q = lagrange_exact(&pts, m)?;
    if agreement_verify(xs, ys, d, &q)? {
        Ok(q)
    } else {
        Err(Error::DecodingFailure)
    }
}

// ---------------------------------------------------------------------------
// Noisy value oracle and the self-reduction
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorruptionMode {
    /// replace the value with a pseudorandom field element
    RandomFieldElement,
    /// add a fixed nonzero field element (worst case for majority voting)
    AdversarialOffset,
}

/// Value oracle that answers Per_z queries exactly except with probability
/// `corruption_prob`, in which case the response is corrupted per the mode.
pub struct NoisyValueOracle {
    pub corruption_prob: BigRational,
    pub mode: CorruptionMode,
    rng: ChaCha12Rng,
    pub queries: u64,
    pub corrupted: u64,
}

impl NoisyValueOracle {
    pub fn new(corruption_prob: BigRational, mode: CorruptionMode, seed: u64) -> Result<Self> {
        if corruption_prob.is_negative() || corruption_prob >= BigRational::one() {
            return Err(Error::InvalidInput("corruption probability must be in [0, 1)".into()));
        }
        Ok(NoisyValueOracle {
            corruption_prob,
            mode,
            rng: ChaCha12Rng::seed_from_u64(seed),
            queries: 0,
            corrupted: 0,
        })
    }

    /// Respond to a query whose exact value is `truth`.
    pub fn respond(&mut self, truth: &CycRat) -> CycRat {
        self.queries += 1;
        let u: f64 = self.rng.gen_range(0.0..1.0);
        if u >= self.corruption_prob.to_f64().unwrap_or(0.0) {
            return truth.clone();
        }
        self.corrupted += 1;
        let m = truth.order();
        match self.mode {
            CorruptionMode::AdversarialOffset => {
                truth.add(&CycRat::one(m)).expect("same order")
            }
            CorruptionMode::RandomFieldElement => {
                let phi = truth.coeffs().len();
                let coeffs: Vec<BigRational> = (0..phi)
                    .map(|_| {
                        BigRational::new(
                            BigInt::from(self.rng.gen_range(-50i64..=50)),
                            BigInt::from(self.rng.gen_range(1i64..=8)),
                        )
                    })
                    .collect();
                CycRat::from_coeffs(m, coeffs)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SelfReduceConfig {
    pub delta: BigRational,
    /// autocorrelation constants (measured, not assumed)
    pub m1: BigRational,
    pub m2: BigRational,
    pub corruption: BigRational,
    pub corruption_mode: CorruptionMode,
    pub seed: u64,
    pub discretization_bits: u32,
    /// number of majority-vote repetitions; defaults to ceil(1/(2 delta^2))
    pub repetitions: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfReduceOutcome {
    pub repetitions: usize,
    pub abstentions: usize,
    pub oracle_queries: u64,
    pub oracle_corruptions: u64,
    pub votes_for_winner: usize,
    /// parameters actually used
    pub points: usize,
    pub epsilon: String,
}

/// Exact value of Per_z(X(t)) for the segment X(t) = (1-t)Y + tM, evaluated
/// through the kernel in Q(zeta_field).
fn segment_value(
    y: &MatrixZ,
    mt: &MatrixZ,
    t: &BigRational,
    root: RootOfUnity,
    field: u64,
    caps: &KernelCaps,
) -> Result<CycRat> {
    let n = y.n();
    let one_minus_t = BigRational::one() - t;
    let yr = y.gauss_rows();
    let mr = mt.gauss_rows();
    let ring = CycRatRing { m: field };
    let mut rows: Vec<Vec<CycRat>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            let e = GaussRat::new(
                &yr[i][j].re * &one_minus_t + &mr[i][j].re * t,
                &yr[i][j].im * &one_minus_t + &mr[i][j].im * t,
            );
            row.push(e.to_cyc(field)?);
        }
        rows.push(row);
    }
    let z = CycRat::root_power(field, (field / root.m) * root.k % field);
    per_z_value_ring(&ring, &rows, &z, caps.dp)
}

/// The degree-n polynomial q(t) = Per_z((1-t)Y + tM), as exact field
/// coefficients, interpolated from evaluations at t = 0..n.
fn segment_polynomial(
    y: &MatrixZ,
    mt: &MatrixZ,
    root: RootOfUnity,
    field: u64,
    caps: &KernelCaps,
) -> Result<Vec<CycRat>> {
    let n = y.n();
    let mut pts = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let t = BigRational::from_integer((j as i64).into());
        let v = segment_value(y, mt, &t, root, field, caps)?;
        pts.push((CycRat::from_rational(field, t), v));
    }
    lagrange_exact(&pts, field)
}

/// Random self-reduction: recover Per_z(M) for a binary matrix M from an
/// oracle that answers correctly with probability 3/4 + delta, by decoding
/// the segment polynomial at L = ceil(n/delta) points with Berlekamp-Welch,
/// repeated O(1/delta^2) times with a majority vote over exact values.
pub fn self_reduce(
    target: &MatrixZ,
    root: RootOfUnity,
    cfg: &SelfReduceConfig,
) -> Result<(CycRat, SelfReduceOutcome)> {
    if target.domain() != Domain::Binary {
        return Err(Error::InvalidInput("self-reduction target must be binary".into()));
    }
    if cfg.delta.is_negative() || cfg.delta.is_zero() {
        return Err(Error::InvalidInput("delta must be positive".into()));
    }
    let n = target.n();
    let field = root.m.lcm(&4);
    let caps = KernelCaps::default();
    let l = {
        let nr = BigRational::from_integer((n as i64).into());
        (nr / &cfg.delta).ceil().to_integer().to_usize().unwrap().max(n + 1)
    };
    // epsilon = delta / ((4 n^2 M1 + 4 n^2 M2) L)
    let n2 = BigRational::from_integer(((n * n) as i64).into());
    let four = BigRational::from_integer(4.into());
    let denom = (&four * &n2 * &cfg.m1 + &four * &n2 * &cfg.m2)
        * BigRational::from_integer((l as i64).into());
    if denom.is_zero() {
        return Err(Error::InvalidInput("autocorrelation constants must be positive".into()));
    }
    let epsilon = &cfg.delta / &denom;
    let reps = cfg.repetitions.unwrap_or_else(|| {
        let d2 = &cfg.delta * &cfg.delta;
        ((BigRational::one() / (BigRational::from_integer(2.into()) * d2))
            .ceil()
            .to_integer()
            .to_usize()
            .unwrap_or(1))
        .max(1)
    });
    let spec = DistSpec::standard_gaussian(cfg.discretization_bits);
    let mut oracle = NoisyValueOracle::new(cfg.corruption.clone(), cfg.corruption_mode, cfg.seed)?;
    let mut votes: HashMap<String, (CycRat, usize)> = HashMap::new();
    let mut abstentions = 0usize;
    let xs: Vec<CycRat> = (1..=l)
        .map(|j| CycRat::from_rational(field, BigRational::from_integer((j as i64).into())))
        .collect();
    for rep in 0..reps {
        let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed ^ (0x5851_f42d_4c95_7f2d_u64.wrapping_mul(rep as u64 + 1)));
        let y = sample_matrix(&spec, n, &mut rng);
        let q = segment_polynomial(&y, target, root, field, &caps)?;
        // oracle values at t = epsilon * j, decoded in the scaled variable u = t/epsilon
        let mut ys = Vec::with_capacity(l);
        for j in 1..=l {
            let t = &epsilon * BigRational::from_integer((j as i64).into());
            let truth = poly_eval_exact(&q, &CycRat::from_rational(field, t))?;
            ys.push(oracle.respond(&truth));
        }
        match berlekamp_welch(&xs, &ys, n) {
            Ok(decoded) => {
                // q~(u) = q(eps u); the answer is q(1) = q~(1/eps)
                let inv_eps = CycRat::from_rational(field, epsilon.clone().recip());
                let value = poly_eval_exact(&decoded, &inv_eps)?;
                let key = format!("{:?}", value.coeffs());
                let entry = votes.entry(key).or_insert((value, 0));
                entry.1 += 1;
            }
            Err(Error::DecodingFailure) => abstentions += 1,
            Err(e) => return Err(e),
        }
    }
    let Some((value, count)) = votes.into_values().max_by_key(|(_, c)| *c) else {
        return Err(Error::AllFailed);
    };
    Ok((
        value,
        SelfReduceOutcome {
            repetitions: reps,
            abstentions,
            oracle_queries: oracle.queries,
            oracle_corruptions: oracle.corrupted,
            votes_for_winner: count,
            points: l,
            epsilon: epsilon.to_f64().unwrap_or(0.0).to_string(),
        },
    ))
}

// ---------------------------------------------------------------------------
// Strong autocorrelation quadrature
// ---------------------------------------------------------------------------

/// Densities of the variance-1 base families (per real coordinate).
fn base_density(family: DistFamily, x: f64) -> f64 {
    match family {
        DistFamily::ComplexGaussian => {
            (-(x * x) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
        }
        DistFamily::TruncatedUniform => {
            let a = 3f64.sqrt();
            if x.abs() <= a {
                1.0 / (2.0 * a)
            } else {
                0.0
            }
        }
    }
}

fn scaled_density(family: DistFamily, x: f64, scale: f64) -> f64 {
    base_density(family, x / scale) / scale
}

fn shifted_density(family: DistFamily, x: f64, shift: f64) -> f64 {
    base_density(family, x - shift)
}

fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    tol: f64,
    depth: u32,
) -> Result<f64> {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        // endpoints are sampled a hair inside the panel so that density
        // jumps aligned with panel edges see their one-sided limits
        let eta = (b - a) * 1e-12;
        (b - a) / 6.0 * (f(a + eta) + 4.0 * f(0.5 * (a + b)) + f(b - eta))
    }
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        if depth == 0 {
            return Err(Error::QuadratureNonConvergence(format!(
                "subdivision limit reached on [{a}, {b}]"
            )));
        }
        let m = 0.5 * (a + b);
        let left = simpson(f, a, m);
        let right = simpson(f, m, b);
        if (left + right - whole).abs() <= 15.0 * tol {
            Ok(left + right + (left + right - whole) / 15.0)
        } else {
            Ok(rec(f, a, m, left, tol / 2.0, depth - 1)?
                + rec(f, m, b, right, tol / 2.0, depth - 1)?)
        }
    }
    // split at density discontinuities, then pre-split into panels so the
    // remaining kinks are localized
    let mut edges = vec![lo];
    let mut bps: Vec<f64> = breakpoints.iter().cloned().filter(|&x| x > lo && x < hi).collect();
    bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    edges.extend(bps);
    edges.push(hi);
    let mut total = 0.0;
    for w in edges.windows(2) {
        let (slo, shi) = (w[0], w[1]);
        if shi - slo < 1e-300 {
            continue;
        }
        let panels = 16;
        for i in 0..panels {
            let a = slo + (shi - slo) * i as f64 / panels as f64;
            let b = slo + (shi - slo) * (i + 1) as f64 / panels as f64;
            total += rec(f, a, b, simpson(f, a, b), tol / (panels as f64 * (edges.len() - 1) as f64), depth)?;
        }
    }
    Ok(total)
}

/// Total variation distance between the base distribution and its
/// (1-eps)-scaled version, per real coordinate.
pub fn tv_scale(family: DistFamily, eps: f64, tol: f64) -> Result<f64> {
    if eps == 0.0 {
        return Ok(0.0);
    }
    let scale = 1.0 - eps;
    let (hi, breaks) = match family {
        DistFamily::ComplexGaussian => (14.0, Vec::new()),
        DistFamily::TruncatedUniform => {
            let a = 3f64.sqrt();
            (a + 1.0, vec![-a, -a * scale, a * scale, a])
        }
    };
    let f = move |x: f64| (base_density(family, x) - scaled_density(family, x, scale)).abs() / 2.0;
    adaptive_simpson(&f, -hi, hi, &breaks, tol, 40)
}

/// Total variation distance between the base distribution and its shift by x.
pub fn tv_shift(family: DistFamily, shift: f64, tol: f64) -> Result<f64> {
    if shift == 0.0 {
        return Ok(0.0);
    }
    let (hi, breaks) = match family {
        DistFamily::ComplexGaussian => (14.0 + shift.abs(), Vec::new()),
        DistFamily::TruncatedUniform => {
            let a = 3f64.sqrt();
            (a + shift.abs() + 1.0, vec![-a, a, -a + shift, a + shift])
        }
    };
    let f = move |x: f64| (base_density(family, x) - shifted_density(family, x, shift)).abs() / 2.0;
    adaptive_simpson(&f, -hi, hi, &breaks, tol, 40)
}

#[derive(Debug, Clone, Serialize)]
pub struct AutocorrReport {
    pub family: DistFamily,
    pub eps: f64,
    /// per-real-coordinate TV of the (1-eps) scaling
    pub g: f64,
    /// per-coordinate TVs of the shifts v_i
    pub h: Vec<f64>,
    pub h_total: f64,
    /// product-distribution bounds with the supplied constants
    pub bound1: f64,
    pub bound2: f64,
    pub pass: bool,
}

/// Check the autocorrelation bounds at one (eps, v) pair: G(eps) <= M1 eps
/// per coordinate and H(v_i) <= M2 |v_i|, plus the assembled product bounds
/// over `complex_coords` complex coordinates.
pub fn autocorr_check(
    spec: &DistSpec,
    eps: f64,
    v: &[(f64, f64)],
    m1: f64,
    m2: f64,
    complex_coords: usize,
    tol: f64,
) -> Result<AutocorrReport> {
    if !(0.0..0.5).contains(&eps) {
        return Err(Error::InvalidInput("eps must lie in [0, 1/2)".into()));
    }
    let g = tv_scale(spec.family, eps, tol)?;
    let mut h = Vec::new();
    let mut h_total = 0.0;
    let mut pass = g <= m1 * eps + tol;
    let mut l2 = 0.0;
    for &(re, im) in v {
        for comp in [re, im] {
            let hv = tv_shift(spec.family, comp.abs(), tol)?;
            pass &= hv <= m2 * comp.abs() + tol;
            h_total += hv;
            h.push(hv);
        }
        l2 += re * re + im * im;
    }
    let bound1 = 2.0 * complex_coords as f64 * m1 * eps;
    let bound2 = (2.0 * complex_coords as f64).sqrt() * m2 * l2.sqrt();
    Ok(AutocorrReport {
        family: spec.family,
        eps,
        g,
        h,
        h_total,
        bound1,
        bound2,
        pass,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SlopeRow {
    pub x: f64,
    pub value: f64,
    pub slope: f64,
}

/// Empirical max slopes of G and H over a grid; the measured stand-ins for
/// the constants M1, M2.
pub fn autocorr_slopes(
    family: DistFamily,
    grid: &[f64],
    tol: f64,
) -> Result<(Vec<SlopeRow>, Vec<SlopeRow>, f64, f64)> {
    let mut g_rows = Vec::new();
    let mut h_rows = Vec::new();
    let mut max_g: f64 = 0.0;
    let mut max_h: f64 = 0.0;
    for &x in grid {
        let g = tv_scale(family, x, tol)?;
        let h = tv_shift(family, x, tol)?;
        let gs = g / x;
        let hs = h / x;
        max_g = max_g.max(gs);
        max_h = max_h.max(hs);
        g_rows.push(SlopeRow { x, value: g, slope: gs });
        h_rows.push(SlopeRow { x, value: h, slope: hs });
    }
    Ok((g_rows, h_rows, max_g, max_h))
}

// ---------------------------------------------------------------------------
// Additive-from-multiplicative wrapper
// ---------------------------------------------------------------------------

/// Parameter map of the multiplicative-to-additive reduction: to get additive
/// error eps' sqrt(n!) with failure probability delta', call the inner
/// multiplicative solver with eps = eps'/k and delta = delta'/2, where
/// k = sqrt(2/delta').
#[derive(Debug, Clone)]
pub struct PmToTimesParams {
    pub inner_eps: BigRational,
    pub inner_delta: BigRational,
    /// rational upper bound on k = sqrt(2/delta')
    pub k: BigRational,
}

pub fn pm_to_times_params(eps_prime: &BigRational, delta_prime: &BigRational) -> Result<PmToTimesParams> {
    if delta_prime.is_negative() || delta_prime.is_zero() {
        return Err(Error::InvalidInput("delta' must be positive".into()));
    }
    let k_sq = BigRational::from_integer(2.into()) / delta_prime;
    let k = {
        let (d, e) = crate::dyadic::Dyadic::from_rational(&k_sq, 64);
        d.add(&e).sqrt_ub().to_rational()
    };
    Ok(PmToTimesParams {
        inner_eps: eps_prime / &k,
        inner_delta: delta_prime / BigRational::from_integer(2.into()),
        k,
    })
}

/// Additive guarantee of the wrapped solver: eps' * sqrt(n!) (rational upper
/// bound), holding with probability >= 1 - delta'.
pub fn additive_guarantee(eps_prime: &BigRational, n: u64) -> BigRational {
    let fact = crate::cyclotomic::factorial(n);
    let s = crate::dyadic::Dyadic::from_int(fact).sqrt_ub().to_rational();
    eps_prime * s
}

/// Wrap a multiplicative-error solver into an additive-error solver. The
/// closure receives the inner (eps, delta) pair; the wrapper passes its
/// output through unchanged (the content of the reduction is the parameter
/// map plus the Markov argument on E|Per_z|^2 = n!).
pub fn additive_from_multiplicative<'a, F>(
    mut mult_solver: F,
    eps_prime: &BigRational,
    delta_prime: &BigRational,
) -> Result<impl FnMut(&MatrixZ) -> Result<crate::ball::ComplexBall> + 'a>
where
    F: FnMut(&MatrixZ, &BigRational, &BigRational) -> Result<crate::ball::ComplexBall> + 'a,
{
    let params = pm_to_times_params(eps_prime, delta_prime)?;
    Ok(move |x: &MatrixZ| mult_solver(x, &params.inner_eps, &params.inner_delta))
}
