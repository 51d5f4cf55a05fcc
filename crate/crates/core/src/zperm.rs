//! z-permanent kernels: the inversion-number generating polynomial of a
//! matrix, computed by a brute-force reference and a column-subset dynamic
//! program, plus specialization at roots of unity and a Ryser permanent.

use crate::ball::{roots_of_unity, ComplexBall};
use crate::cyclotomic::{totient, CycInt, CycRat};
use crate::error::{Error, Result};
use crate::gauss::GaussRat;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

/// Ring context: the kernels are generic over the coefficient ring through an
/// explicit ring object (carrying e.g. the working precision for balls).
pub trait Ring: Sync {
    type El: Clone + Send + Sync;
    fn zero(&self) -> Self::El;
    fn one(&self) -> Self::El;
    fn add(&self, a: &Self::El, b: &Self::El) -> Self::El;
    fn sub(&self, a: &Self::El, b: &Self::El) -> Self::El;
    fn mul(&self, a: &Self::El, b: &Self::El) -> Self::El;
    fn is_zero(&self, a: &Self::El) -> bool;
}

pub struct IntRing;

impl Ring for IntRing {
    type El = BigInt;
    fn zero(&self) -> BigInt {
        BigInt::zero()
    }
    fn one(&self) -> BigInt {
        BigInt::one()
    }
    fn add(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a + b
    }
    fn sub(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a - b
    }
    fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a * b
    }
    fn is_zero(&self, a: &BigInt) -> bool {
        a.is_zero()
    }
}

pub struct GaussRing;

impl Ring for GaussRing {
    type El = GaussRat;
    fn zero(&self) -> GaussRat {
        GaussRat::zero()
    }
    fn one(&self) -> GaussRat {
        GaussRat::one()
    }
    fn add(&self, a: &GaussRat, b: &GaussRat) -> GaussRat {
        a.add(b)
    }
    fn sub(&self, a: &GaussRat, b: &GaussRat) -> GaussRat {
        a.sub(b)
    }
    fn mul(&self, a: &GaussRat, b: &GaussRat) -> GaussRat {
        a.mul(b)
    }
    fn is_zero(&self, a: &GaussRat) -> bool {
        a.is_zero()
    }
}

pub struct BallRing {
    pub prec: u64,
}

impl Ring for BallRing {
    type El = ComplexBall;
    fn zero(&self) -> ComplexBall {
        ComplexBall::zero()
    }
    fn one(&self) -> ComplexBall {
        ComplexBall::one()
    }
    fn add(&self, a: &ComplexBall, b: &ComplexBall) -> ComplexBall {
        a.add(b, self.prec)
    }
    fn sub(&self, a: &ComplexBall, b: &ComplexBall) -> ComplexBall {
        a.sub(b, self.prec)
    }
    fn mul(&self, a: &ComplexBall, b: &ComplexBall) -> ComplexBall {
        a.mul(b, self.prec)
    }
    fn is_zero(&self, a: &ComplexBall) -> bool {
        a.re.is_zero() && a.im.is_zero() && a.rad.is_zero()
    }
}

/// Field of exact cyclotomic rationals Q(zeta_m) as a ring context.
pub struct CycRatRing {
    pub m: u64,
}

impl Ring for CycRatRing {
    type El = CycRat;
    fn zero(&self) -> CycRat {
        CycRat::zero(self.m)
    }
    fn one(&self) -> CycRat {
        CycRat::one(self.m)
    }
    fn add(&self, a: &CycRat, b: &CycRat) -> CycRat {
        a.add(b).expect("order mismatch")
    }
    fn sub(&self, a: &CycRat, b: &CycRat) -> CycRat {
        a.sub(b).expect("order mismatch")
    }
    fn mul(&self, a: &CycRat, b: &CycRat) -> CycRat {
        a.mul(b).expect("order mismatch")
    }
    fn is_zero(&self, a: &CycRat) -> bool {
        a.is_zero()
    }
}

/// A permutation of [n], stored as 0-based images.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    /// Build from 1-based images, validating the bijection.
    pub fn from_one_based(images: &[usize]) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &v in images {
            if v < 1 || v > n || seen[v - 1] {
                return Err(Error::InvalidInput("not a permutation".into()));
            }
            seen[v - 1] = true;
        }
        Ok(Permutation { images: images.iter().map(|&v| v - 1).collect() })
    }

    pub fn from_zero_based(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &v in &images {
            if v >= n || seen[v] {
                return Err(Error::InvalidInput("not a permutation".into()));
            }
            seen[v] = true;
        }
        Ok(Permutation { images })
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }
}

/// Number of pairs i < j with sigma(i) > sigma(j).
pub fn inversion_number(sigma: &Permutation) -> u64 {
    inversions_of(&sigma.images)
}

pub(crate) fn inversions_of(images: &[usize]) -> u64 {
    let mut count = 0;
    for i in 0..images.len() {
        for j in (i + 1)..images.len() {
            if images[i] > images[j] {
                count += 1;
            }
        }
    }
    count
}

/// Visit all permutations of [n] (Heap's algorithm).
pub(crate) fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut a: Vec<usize> = (0..n).collect();
    if n == 0 {
        f(&a);
        return;
    }
    let mut c = vec![0usize; n];
    f(&a);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            f(&a);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Brute-force inversion polynomial over a generic ring: bucket the
/// permutation products by inversion count. Reference oracle for the DP.
pub fn invpoly_bruteforce_ring<R: Ring>(
    ring: &R,
    entries: &[Vec<R::El>],
    cap: usize,
) -> Result<Vec<R::El>> {
    let n = entries.len();
    if n > cap {
        return Err(Error::CapExceeded { n, cap });
    }
    let len = n * (n.saturating_sub(1)) / 2 + 1;
    let mut acc = vec![ring.zero(); len];
    for_each_permutation(n, |sigma| {
        let ell = inversions_of(sigma) as usize;
        let mut prod = ring.one();
        for (i, &j) in sigma.iter().enumerate() {
            prod = ring.mul(&prod, &entries[i][j]);
        }
        acc[ell] = ring.add(&acc[ell], &prod);
    });
    Ok(acc)
}

/// Column-subset dynamic program. f(S) is the inversion polynomial of the
/// bottom |S| rows restricted to column set S; expanding the top remaining
/// row gives f(S) = sum_k X[row][c_k] * z^(k-1) * f(S \ {c_k}) where c_k is
/// the k-th smallest column of S. O(2^n * n) ring operations on polynomials.
pub fn invpoly_subset_dp_ring<R: Ring>(
    ring: &R,
    entries: &[Vec<R::El>],
    cap: usize,
) -> Result<Vec<R::El>> {
    let n = entries.len();
    if n > cap {
        return Err(Error::CapExceeded { n, cap });
    }
    if n == 0 {
        return Ok(vec![ring.one()]);
    }
    let full = (1usize << n) - 1;
    let mut store: Vec<Option<Vec<R::El>>> = vec![None; 1 << n];
    store[0] = Some(vec![ring.one()]);
    let mut layer_masks: Vec<Vec<u32>> = vec![Vec::new(); n + 1];
    for mask in 0..=(full as u32) {
        layer_masks[mask.count_ones() as usize].push(mask);
    }
    for s in 1..=n {
        let row = n - s;
        let compute = |&mask: &u32| -> (u32, Vec<R::El>) {
            let len = s * (s - 1) / 2 + 1;
            let mut out = vec![ring.zero(); len];
            let mut k = 0usize; // rank of the column within the subset
            let mut bits = mask;
            while bits != 0 {
                let col = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let x = &entries[row][col];
                if !ring.is_zero(x) {
                    let sub = store[(mask & !(1u32 << col)) as usize]
                        .as_ref()
                        .expect("previous layer present");
                    for (i, c) in sub.iter().enumerate() {
                        let term = ring.mul(x, c);
                        out[i + k] = ring.add(&out[i + k], &term);
                    }
                }
                k += 1;
            }
            (mask, out)
        };
        let results: Vec<(u32, Vec<R::El>)> = if layer_masks[s].len() >= 2048 {
            layer_masks[s].par_iter().map(compute).collect()
        } else {
            layer_masks[s].iter().map(compute).collect()
        };
        // previous-previous layer is no longer needed
        if s >= 2 {
            for &mask in &layer_masks[s - 2] {
                store[mask as usize] = None;
            }
        }
        for (mask, poly) in results {
            store[mask as usize] = Some(poly);
        }
    }
    Ok(store[full].take().expect("full mask computed"))
}

/// Value-level subset DP: evaluates the z-permanent directly at a ring element
/// z, storing one ring element per subset.
pub fn per_z_value_ring<R: Ring>(
    ring: &R,
    entries: &[Vec<R::El>],
    z: &R::El,
    cap: usize,
) -> Result<R::El> {
    let n = entries.len();
    if n > cap {
        return Err(Error::CapExceeded { n, cap });
    }
    if n == 0 {
        return Ok(ring.one());
    }
    let full = (1usize << n) - 1;
    let mut zpow = Vec::with_capacity(n);
    zpow.push(ring.one());
    for _ in 1..n {
        let last = zpow.last().unwrap().clone();
        zpow.push(ring.mul(&last, z));
    }
    let mut store: Vec<Option<R::El>> = vec![None; 1 << n];
    store[0] = Some(ring.one());
    let mut layer_masks: Vec<Vec<u32>> = vec![Vec::new(); n + 1];
    for mask in 0..=(full as u32) {
        layer_masks[mask.count_ones() as usize].push(mask);
    }
    for s in 1..=n {
        let row = n - s;
        let compute = |&mask: &u32| -> (u32, R::El) {
            let mut out = ring.zero();
            let mut k = 0usize;
            let mut bits = mask;
            while bits != 0 {
                let col = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let x = &entries[row][col];
                if !ring.is_zero(x) {
                    let sub = store[(mask & !(1u32 << col)) as usize].as_ref().unwrap();
                    let term = ring.mul(&ring.mul(x, &zpow[k]), sub);
                    out = ring.add(&out, &term);
                }
                k += 1;
            }
            (mask, out)
        };
        let results: Vec<(u32, R::El)> = if layer_masks[s].len() >= 4096 {
            layer_masks[s].par_iter().map(compute).collect()
        } else {
            layer_masks[s].iter().map(compute).collect()
        };
        if s >= 2 {
            for &mask in &layer_masks[s - 2] {
                store[mask as usize] = None;
            }
        }
        for (mask, v) in results {
            store[mask as usize] = Some(v);
        }
    }
    Ok(store[full].take().unwrap())
}

/// Ryser inclusion-exclusion permanent (z = 1), independent of the DP path.
pub fn per_one_ryser_ring<R: Ring>(
    ring: &R,
    entries: &[Vec<R::El>],
    cap: usize,
) -> Result<R::El> {
    let n = entries.len();
    if n > cap {
        return Err(Error::CapExceeded { n, cap });
    }
    if n == 0 {
        return Ok(ring.one());
    }
    let mut row_sums = vec![ring.zero(); n];
    let mut total = ring.zero();
    let mut prev_gray = 0usize;
    for iter in 1usize..(1 << n) {
        let gray = iter ^ (iter >> 1);
        let changed = gray ^ prev_gray;
        let j = changed.trailing_zeros() as usize;
        let added = gray & changed != 0;
        for (i, rs) in row_sums.iter_mut().enumerate() {
            *rs = if added {
                ring.add(rs, &entries[i][j])
            } else {
                ring.sub(rs, &entries[i][j])
            };
        }
        prev_gray = gray;
        let mut prod = ring.one();
        for rs in &row_sums {
            prod = ring.mul(&prod, rs);
        }
        // sign (-1)^(n - |S|)
        if (n - gray.count_ones() as usize) % 2 == 0 {
            total = ring.add(&total, &prod);
        } else {
            total = ring.sub(&total, &prod);
        }
    }
    Ok(total)
}

/// Entry domain of a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Binary,
    Integer,
    GaussianRational,
    ComplexFloat,
}

impl Domain {
    pub fn as_str(&self) -> &'static str {
        match self {
            Domain::Binary => "binary",
            Domain::Integer => "integer",
            Domain::GaussianRational => "gaussian_rational",
            Domain::ComplexFloat => "complex_float",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(Domain::Binary),
            "integer" => Ok(Domain::Integer),
            "gaussian_rational" => Ok(Domain::GaussianRational),
            "complex_float" => Ok(Domain::ComplexFloat),
            other => Err(Error::InvalidInput(format!("unknown domain {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Entries {
    Int(Vec<BigInt>),
    Gauss(Vec<GaussRat>),
    Float(Vec<(f64, f64)>),
}

/// Square matrix with a declared entry domain.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixZ {
    n: usize,
    domain: Domain,
    entries: Entries,
}

impl MatrixZ {
    pub fn new_int(domain: Domain, n: usize, entries: Vec<BigInt>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::InvalidInput("entry count != n^2".into()));
        }
        match domain {
            Domain::Binary => {
                if entries.iter().any(|e| !e.is_zero() && !e.is_one()) {
                    return Err(Error::InvalidInput("binary entries must be 0 or 1".into()));
                }
            }
            Domain::Integer => {}
            _ => return Err(Error::InvalidInput("integer entries with non-integer domain".into())),
        }
        Ok(MatrixZ { n, domain, entries: Entries::Int(entries) })
    }

    pub fn new_gauss(n: usize, entries: Vec<GaussRat>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::InvalidInput("entry count != n^2".into()));
        }
        Ok(MatrixZ { n, domain: Domain::GaussianRational, entries: Entries::Gauss(entries) })
    }

    pub fn new_float(n: usize, entries: Vec<(f64, f64)>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::InvalidInput("entry count != n^2".into()));
        }
        if entries.iter().any(|(r, i)| !r.is_finite() || !i.is_finite()) {
            return Err(Error::InvalidInput("non-finite complex_float entry".into()));
        }
        Ok(MatrixZ { n, domain: Domain::ComplexFloat, entries: Entries::Float(entries) })
    }

    pub fn identity(n: usize) -> Self {
        let mut e = vec![BigInt::zero(); n * n];
        for i in 0..n {
            e[i * n + i] = BigInt::one();
        }
        MatrixZ { n, domain: Domain::Binary, entries: Entries::Int(e) }
    }

    pub fn all_ones(n: usize) -> Self {
        MatrixZ { n, domain: Domain::Binary, entries: Entries::Int(vec![BigInt::one(); n * n]) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn entries(&self) -> &Entries {
        &self.entries
    }

    pub fn int_entries(&self) -> Option<&[BigInt]> {
        match &self.entries {
            Entries::Int(v) => Some(v),
            _ => None,
        }
    }

    pub fn int_rows(&self) -> Option<Vec<Vec<BigInt>>> {
        self.int_entries().map(|v| {
            (0..self.n).map(|i| v[i * self.n..(i + 1) * self.n].to_vec()).collect()
        })
    }

    pub fn gauss_rows(&self) -> Vec<Vec<GaussRat>> {
        match &self.entries {
            Entries::Int(v) => (0..self.n)
                .map(|i| {
                    v[i * self.n..(i + 1) * self.n]
                        .iter()
                        .map(|c| GaussRat::new(BigRational::from(c.clone()), BigRational::zero()))
                        .collect()
                })
                .collect(),
            Entries::Gauss(v) => {
                (0..self.n).map(|i| v[i * self.n..(i + 1) * self.n].to_vec()).collect()
            }
            Entries::Float(v) => (0..self.n)
                .map(|i| {
                    v[i * self.n..(i + 1) * self.n]
                        .iter()
                        .map(|(r, im)| {
                            GaussRat::from_dyadics(
                                &crate::dyadic::Dyadic::from_f64(*r).unwrap(),
                                &crate::dyadic::Dyadic::from_f64(*im).unwrap(),
                            )
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn ball_rows(&self, prec: u64) -> Vec<Vec<ComplexBall>> {
        match &self.entries {
            Entries::Int(v) => (0..self.n)
                .map(|i| {
                    v[i * self.n..(i + 1) * self.n]
                        .iter()
                        .map(|c| {
                            ComplexBall::exact(
                                crate::dyadic::Dyadic::from_int(c.clone()),
                                crate::dyadic::Dyadic::zero(),
                            )
                        })
                        .collect()
                })
                .collect(),
            Entries::Gauss(v) => (0..self.n)
                .map(|i| v[i * self.n..(i + 1) * self.n].iter().map(|g| g.to_ball(prec)).collect())
                .collect(),
            Entries::Float(v) => (0..self.n)
                .map(|i| {
                    v[i * self.n..(i + 1) * self.n]
                        .iter()
                        .map(|(r, im)| ComplexBall::from_f64s(*r, *im))
                        .collect()
                })
                .collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let entries = match &self.entries {
            Entries::Int(v) => {
                Entries::Int((0..n * n).map(|idx| v[(idx % n) * n + idx / n].clone()).collect())
            }
            Entries::Gauss(v) => {
                Entries::Gauss((0..n * n).map(|idx| v[(idx % n) * n + idx / n].clone()).collect())
            }
            Entries::Float(v) => {
                Entries::Float((0..n * n).map(|idx| v[(idx % n) * n + idx / n]).collect())
            }
        };
        MatrixZ { n, domain: self.domain, entries }
    }

    /// Entrywise complex conjugate.
    pub fn conj_entries(&self) -> Self {
        let entries = match &self.entries {
            Entries::Int(v) => Entries::Int(v.clone()),
            Entries::Gauss(v) => Entries::Gauss(v.iter().map(|g| g.conj()).collect()),
            Entries::Float(v) => Entries::Float(v.iter().map(|(r, i)| (*r, -*i)).collect()),
        };
        MatrixZ { n: self.n, domain: self.domain, entries }
    }

    /// Delete one row and one column (0-based indices).
    pub fn minor(&self, row: usize, col: usize) -> Self {
        let n = self.n;
        let keep: Vec<usize> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| i != row && j != col)
            .map(|(i, j)| i * n + j)
            .collect();
        let entries = match &self.entries {
            Entries::Int(v) => Entries::Int(keep.iter().map(|&k| v[k].clone()).collect()),
            Entries::Gauss(v) => Entries::Gauss(keep.iter().map(|&k| v[k].clone()).collect()),
            Entries::Float(v) => Entries::Float(keep.iter().map(|&k| v[k]).collect()),
        };
        MatrixZ { n: n - 1, domain: self.domain, entries }
    }
}

/// Size caps for the kernels; configuration, not constants.
#[derive(Debug, Clone, Copy)]
pub struct KernelCaps {
    pub brute: usize,
    pub dp: usize,
    pub ryser: usize,
}

impl Default for KernelCaps {
    fn default() -> Self {
        KernelCaps { brute: 9, dp: 20, ryser: 24 }
    }
}

/// The inversion-number generating polynomial: coefficient A_l for each
/// inversion count l in [0, n(n-1)/2].
#[derive(Debug, Clone, PartialEq)]
pub struct InvPoly {
    n: usize,
    coeffs: InvCoeffs,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InvCoeffs {
    Int(Vec<BigInt>),
    Gauss(Vec<GaussRat>),
    Ball(Vec<ComplexBall>),
}

impl InvPoly {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        match &self.coeffs {
            InvCoeffs::Int(v) => v.len(),
            InvCoeffs::Gauss(v) => v.len(),
            InvCoeffs::Ball(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coeffs(&self) -> &InvCoeffs {
        &self.coeffs
    }

    pub fn int_coeffs(&self) -> Option<&[BigInt]> {
        match &self.coeffs {
            InvCoeffs::Int(v) => Some(v),
            _ => None,
        }
    }

    pub fn from_int_coeffs(n: usize, v: Vec<BigInt>) -> Self {
        assert_eq!(v.len(), n * n.saturating_sub(1) / 2 + 1);
        InvPoly { n, coeffs: InvCoeffs::Int(v) }
    }
}

/// Ball evaluation precision used when a complex_float matrix flows through
/// the kernels (callers can escalate via `BallRing` directly).
pub const DEFAULT_FLOAT_PREC: u64 = 96;

/// Reference brute-force inversion polynomial.
pub fn invpoly_bruteforce(x: &MatrixZ, caps: &KernelCaps) -> Result<InvPoly> {
    let n = x.n();
    let coeffs = match x.entries() {
        Entries::Int(_) => {
            InvCoeffs::Int(invpoly_bruteforce_ring(&IntRing, &x.int_rows().unwrap(), caps.brute)?)
        }
        Entries::Gauss(_) => {
            InvCoeffs::Gauss(invpoly_bruteforce_ring(&GaussRing, &x.gauss_rows(), caps.brute)?)
        }
        Entries::Float(_) => InvCoeffs::Ball(invpoly_bruteforce_ring(
            &BallRing { prec: DEFAULT_FLOAT_PREC },
            &x.ball_rows(DEFAULT_FLOAT_PREC),
            caps.brute,
        )?),
    };
    Ok(InvPoly { n, coeffs })
}

/// Fast subset-DP inversion polynomial; identical output to the brute force.
pub fn invpoly_subset_dp(x: &MatrixZ, caps: &KernelCaps) -> Result<InvPoly> {
    let n = x.n();
    let coeffs = match x.entries() {
        Entries::Int(_) => {
            InvCoeffs::Int(invpoly_subset_dp_ring(&IntRing, &x.int_rows().unwrap(), caps.dp)?)
        }
        Entries::Gauss(_) => {
            InvCoeffs::Gauss(invpoly_subset_dp_ring(&GaussRing, &x.gauss_rows(), caps.dp)?)
        }
        Entries::Float(_) => InvCoeffs::Ball(invpoly_subset_dp_ring(
            &BallRing { prec: DEFAULT_FLOAT_PREC },
            &x.ball_rows(DEFAULT_FLOAT_PREC),
            caps.dp,
        )?),
    };
    Ok(InvPoly { n, coeffs })
}

/// A primitive root of unity zeta_m^k with gcd(k, m) = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RootOfUnity {
    pub m: u64,
    pub k: u64,
}

impl RootOfUnity {
    pub fn new(m: u64, k: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInput("root order must be positive".into()));
        }
        let k = k % m;
        if m > 1 && (k == 0 || k.gcd(&m) != 1) {
            return Err(Error::InvalidInput(format!(
                "k={k} is not coprime to m={m}; zeta_m^k is not primitive"
            )));
        }
        Ok(RootOfUnity { m, k })
    }

    pub fn to_ball(&self, prec: u64) -> ComplexBall {
        roots_of_unity(self.m, prec)[self.k as usize % self.m as usize].clone()
    }

    pub fn conj(&self) -> Self {
        RootOfUnity { m: self.m, k: (self.m - self.k) % self.m }
    }
}

/// Result of specializing an inversion polynomial at a point.
#[derive(Debug, Clone)]
pub enum SpecValue {
    Exact(CycInt),
    ExactRat(CycRat),
    Ball(ComplexBall),
}

impl SpecValue {
    pub fn as_cyc_int(&self) -> Option<&CycInt> {
        match self {
            SpecValue::Exact(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_cyc_rat(&self) -> Option<&CycRat> {
        match self {
            SpecValue::ExactRat(v) => Some(v),
            _ => None,
        }
    }

    pub fn to_ball(&self, prec: u64) -> ComplexBall {
        match self {
            SpecValue::Exact(v) => v.embed(prec),
            SpecValue::ExactRat(v) => v.embed(prec),
            SpecValue::Ball(b) => b.clone(),
        }
    }
}

/// Evaluate an inversion polynomial at a primitive root of unity (exact).
pub fn specialize_at_root(p: &InvPoly, root: RootOfUnity) -> SpecValue {
    specialize_at_root_power(p, root.m, root.k)
}

/// Evaluate at zeta_m^e for any exponent e (not necessarily primitive),
/// folding exponents mod m before the cyclotomic reduction.
pub fn specialize_at_root_power(p: &InvPoly, m: u64, e: u64) -> SpecValue {
    match p.coeffs() {
        InvCoeffs::Int(coeffs) => {
            let mut folded = vec![BigInt::zero(); m as usize];
            for (l, c) in coeffs.iter().enumerate() {
                folded[(l as u64 % m * (e % m) % m) as usize] += c;
            }
            SpecValue::Exact(CycInt::from_poly_coeffs(m, &folded))
        }
        InvCoeffs::Gauss(coeffs) => {
            let big = m.lcm(&4);
            let step = big / m;
            let mut acc = CycRat::zero(big);
            for (l, c) in coeffs.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let ex = (l as u64 % m * (e % m) % m) * step % big;
                let term = c.to_cyc(big).expect("4 | m").mul(&CycRat::root_power(big, ex)).unwrap();
                acc = acc.add(&term).unwrap();
            }
            SpecValue::ExactRat(acc)
        }
        InvCoeffs::Ball(coeffs) => {
            let prec = DEFAULT_FLOAT_PREC;
            let z = roots_of_unity(m, prec)[(e % m) as usize].clone();
            SpecValue::Ball(horner_ball(coeffs, &z, prec))
        }
    }
}

/// Evaluate an inversion polynomial at a complex ball (Horner).
pub fn specialize_at_ball(p: &InvPoly, z: &ComplexBall, prec: u64) -> ComplexBall {
    match p.coeffs() {
        InvCoeffs::Int(coeffs) => {
            let balls: Vec<ComplexBall> = coeffs
                .iter()
                .map(|c| {
                    ComplexBall::exact(crate::dyadic::Dyadic::from_int(c.clone()), crate::dyadic::Dyadic::zero())
                })
                .collect();
            horner_ball(&balls, z, prec)
        }
        InvCoeffs::Gauss(coeffs) => {
            let balls: Vec<ComplexBall> = coeffs.iter().map(|c| c.to_ball(prec)).collect();
            horner_ball(&balls, z, prec)
        }
        InvCoeffs::Ball(coeffs) => horner_ball(coeffs, z, prec),
    }
}

pub(crate) fn horner_ball(coeffs: &[ComplexBall], z: &ComplexBall, prec: u64) -> ComplexBall {
    let mut acc = ComplexBall::zero();
    for c in coeffs.iter().rev() {
        acc = acc.mul(z, prec).add(c, prec);
    }
    acc
}

/// |Per_{zeta_m}(X)|^2 as an exact element of Z[zeta_m] (integer or binary X).
pub fn normsq_at_root(x: &MatrixZ, m: u64, caps: &KernelCaps) -> Result<CycInt> {
    match x.domain() {
        Domain::Binary | Domain::Integer => {}
        _ => {
            return Err(Error::InvalidInput(
                "normsq_at_root requires an integer or binary matrix".into(),
            ))
        }
    }
    let p = invpoly_subset_dp(x, caps)?;
    let root = RootOfUnity::new(m, 1)?;
    let v = specialize_at_root(&p, root);
    let v = v.as_cyc_int().expect("integer domain specializes exactly");
    Ok(v.normsq())
}

/// Ryser permanent of the matrix (equals specialization at z = 1).
pub fn per_one_ryser(x: &MatrixZ, caps: &KernelCaps) -> Result<SpecValue> {
    match x.entries() {
        Entries::Int(_) => Ok(SpecValue::Exact(CycInt::from_int(
            1,
            per_one_ryser_ring(&IntRing, &x.int_rows().unwrap(), caps.ryser)?,
        ))),
        Entries::Gauss(_) => {
            let v = per_one_ryser_ring(&GaussRing, &x.gauss_rows(), caps.ryser)?;
            let m = 4;
            Ok(SpecValue::ExactRat(v.to_cyc(m)?))
        }
        Entries::Float(_) => Ok(SpecValue::Ball(per_one_ryser_ring(
            &BallRing { prec: DEFAULT_FLOAT_PREC },
            &x.ball_rows(DEFAULT_FLOAT_PREC),
            caps.ryser,
        )?)),
    }
}

/// phi(m) viewed from this module, re-exported for convenience.
pub fn degree_bound(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Check that phi(m) exceeds the polynomial degree (Gauss-sum style identity
/// recovery precondition).
pub fn check_highdeg(m: u64, n: usize) -> Result<()> {
    let phi = totient(m) as usize;
    let d = degree_bound(n);
    if phi >= d + 1 {
        Ok(())
    } else {
        Err(Error::DegreeTooLow { phi, degree: d })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclotomic::separation_bound;
    use num_traits::ToPrimitive;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    /// Fraction-free (Bareiss) determinant over the integers; independent
    /// oracle for the z = -1 specialization.
    fn det_bareiss(rows: &[Vec<BigInt>]) -> BigInt {
        let n = rows.len();
        if n == 0 {
            return BigInt::one();
        }
        let mut a: Vec<Vec<BigInt>> = rows.to_vec();
        let mut sign = 1i64;
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                let swap = (k + 1..n).find(|&i| !a[i][k].is_zero());
                match swap {
                    Some(i) => {
                        a.swap(k, i);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                    a[i][j] = num / &prev;
                }
            }
            prev = a[k][k].clone();
        }
        let d = a[n - 1][n - 1].clone();
        if sign < 0 {
            -d
        } else {
            d
        }
    }

    fn random_binary(rng: &mut StdRng, n: usize) -> MatrixZ {
        let e: Vec<BigInt> = (0..n * n).map(|_| BigInt::from(rng.gen_range(0..=1))).collect();
        MatrixZ::new_int(Domain::Binary, n, e).unwrap()
    }

    fn random_int(rng: &mut StdRng, n: usize, lo: i64, hi: i64) -> MatrixZ {
        let e: Vec<BigInt> = (0..n * n).map(|_| BigInt::from(rng.gen_range(lo..=hi))).collect();
        MatrixZ::new_int(Domain::Integer, n, e).unwrap()
    }

    fn random_gauss(rng: &mut StdRng, n: usize) -> MatrixZ {
        let e: Vec<GaussRat> = (0..n * n)
            .map(|_| {
                GaussRat::new(
                    BigRational::new(rng.gen_range(-6i64..=6).into(), rng.gen_range(1i64..=4).into()),
                    BigRational::new(rng.gen_range(-6i64..=6).into(), rng.gen_range(1i64..=4).into()),
                )
            })
            .collect();
        MatrixZ::new_gauss(n, e).unwrap()
    }

    #[test]
    fn inversion_number_examples() {
        let id = Permutation::from_one_based(&[1, 2, 3, 4, 5]).unwrap();
        assert_eq!(inversion_number(&id), 0);
        let rev = Permutation::from_one_based(&[4, 3, 2, 1]).unwrap();
        assert_eq!(inversion_number(&rev), 6);
        let t = Permutation::from_one_based(&[2, 1, 3]).unwrap();
        assert_eq!(inversion_number(&t), 1);
        assert!(Permutation::from_one_based(&[1, 1, 3]).is_err());
    }

    #[test]
    fn bruteforce_examples() {
        let caps = KernelCaps::default();
        // identity: only the identity permutation contributes
        let p = invpoly_bruteforce(&MatrixZ::identity(3), &caps).unwrap();
        let expected: Vec<BigInt> = [1, 0, 0, 0].iter().map(|&v| BigInt::from(v)).collect();
        assert_eq!(p.int_coeffs().unwrap(), &expected);
        // 2x2: A_0 = ad, A_1 = bc
        let mut rng = StdRng::seed_from_u64(2);
        for _ in 0..20 {
            let x = random_int(&mut rng, 2, -9, 9);
            let e = x.int_entries().unwrap();
            let p = invpoly_bruteforce(&x, &caps).unwrap();
            let c = p.int_coeffs().unwrap();
            assert_eq!(c[0], &e[0] * &e[3]);
            assert_eq!(c[1], &e[2] * &e[1]);
        }
        // all-ones 3x3: inversion counts over S_3 give (1, 2, 2, 1)
        let p = invpoly_bruteforce(&MatrixZ::all_ones(3), &caps).unwrap();
        let expected: Vec<BigInt> = [1, 2, 2, 1].iter().map(|&v| BigInt::from(v)).collect();
        assert_eq!(p.int_coeffs().unwrap(), &expected);
    }

    #[test]
    fn n3_closed_form() {
        // explicit n = 3 coefficients by inversion count
        let caps = KernelCaps::default();
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let x = random_int(&mut rng, 3, -9, 9);
            let e = |i: usize, j: usize| x.int_entries().unwrap()[(i - 1) * 3 + (j - 1)].clone();
            let p = invpoly_subset_dp(&x, &caps).unwrap();
            let c = p.int_coeffs().unwrap();
            assert_eq!(c[0], e(1, 1) * e(2, 2) * e(3, 3));
            assert_eq!(c[1], e(1, 1) * e(2, 3) * e(3, 2) + e(1, 2) * e(2, 1) * e(3, 3));
            assert_eq!(c[2], e(1, 2) * e(2, 3) * e(3, 1) + e(1, 3) * e(2, 1) * e(3, 2));
            assert_eq!(c[3], e(1, 3) * e(2, 2) * e(3, 1));
        }
    }

    #[test]
    fn dp_matches_bruteforce_all_domains() {
        let caps = KernelCaps::default();
        let mut rng = StdRng::seed_from_u64(4);
        for n in 1..=6 {
            for _ in 0..8 {
                let xi = random_int(&mut rng, n, -5, 5);
                assert_eq!(
                    invpoly_subset_dp(&xi, &caps).unwrap(),
                    invpoly_bruteforce(&xi, &caps).unwrap()
                );
                let xb = random_binary(&mut rng, n);
                assert_eq!(
                    invpoly_subset_dp(&xb, &caps).unwrap(),
                    invpoly_bruteforce(&xb, &caps).unwrap()
                );
                let xg = random_gauss(&mut rng, n);
                assert_eq!(
                    invpoly_subset_dp(&xg, &caps).unwrap(),
                    invpoly_bruteforce(&xg, &caps).unwrap()
                );
            }
        }
    }

    #[test]
    fn dp_cap_errors() {
        let caps = KernelCaps { brute: 3, dp: 3, ryser: 3 };
        let x = MatrixZ::identity(4);
        assert!(matches!(
            invpoly_bruteforce(&x, &caps),
            Err(Error::CapExceeded { n: 4, cap: 3 })
        ));
        assert!(matches!(invpoly_subset_dp(&x, &caps), Err(Error::CapExceeded { .. })));
        assert!(matches!(per_one_ryser(&x, &caps), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn specialize_at_one_is_permanent() {
        let caps = KernelCaps::default();
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..30 {
            let n = rng.gen_range(1..=6);
            let x = random_binary(&mut rng, n);
            let p = invpoly_subset_dp(&x, &caps).unwrap();
            let one = RootOfUnity::new(1, 0).unwrap();
            let s = specialize_at_root(&p, one);
            let sum: BigInt = p.int_coeffs().unwrap().iter().sum();
            assert_eq!(s.as_cyc_int().unwrap().coeffs()[0], sum);
            // Ryser agreement
            let r = per_one_ryser(&x, &caps).unwrap();
            assert_eq!(r.as_cyc_int().unwrap().coeffs()[0], sum);
        }
    }

    #[test]
    fn specialize_at_minus_one_is_determinant() {
        let caps = KernelCaps::default();
        let mut rng = StdRng::seed_from_u64(6);
        for _ in 0..50 {
            let n = rng.gen_range(1..=6);
            let x = random_int(&mut rng, n, -4, 4);
            let p = invpoly_subset_dp(&x, &caps).unwrap();
            let minus_one = RootOfUnity::new(2, 1).unwrap();
            let s = specialize_at_root(&p, minus_one);
            let det = det_bareiss(&x.int_rows().unwrap());
            assert_eq!(s.as_cyc_int().unwrap().coeffs()[0], det);
        }
    }

    #[test]
    fn specialize_j2_at_zeta3() {
        let caps = KernelCaps::default();
        let p = invpoly_subset_dp(&MatrixZ::all_ones(2), &caps).unwrap();
        let s = specialize_at_root(&p, RootOfUnity::new(3, 1).unwrap());
        let v = s.as_cyc_int().unwrap();
        assert_eq!(v.coeffs(), &[BigInt::one(), BigInt::one()]);
    }

    #[test]
    fn transpose_agrees_at_roots() {
        let caps = KernelCaps::default();
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..15 {
            let n = rng.gen_range(2..=5);
            let x = random_int(&mut rng, n, -3, 3);
            let p = invpoly_subset_dp(&x, &caps).unwrap();
            let pt = invpoly_subset_dp(&x.transpose(), &caps).unwrap();
            for m in [1u64, 2, 3, 4, 5, 7, 12] {
                for k in 0..m {
                    if m > 1 && (k == 0 || k.gcd(&m) != 1) {
                        continue;
                    }
                    let root = RootOfUnity::new(m, k).unwrap();
                    let a = specialize_at_root(&p, root);
                    let b = specialize_at_root(&pt, root);
                    assert_eq!(
                        a.as_cyc_int().unwrap(),
                        b.as_cyc_int().unwrap(),
                        "m={m} k={k}"
                    );
                }
            }
        }
    }

    #[test]
    fn block_triangular_multiplicativity() {
        // block upper-triangular: value at any root is the product of the
        // blocks' values
        let caps = KernelCaps::default();
        let mut rng = StdRng::seed_from_u64(8);
        for _ in 0..10 {
            let n1 = rng.gen_range(1..=3);
            let n2 = rng.gen_range(1..=3);
            let b1 = random_int(&mut rng, n1, -3, 3);
            let b2 = random_int(&mut rng, n2, -3, 3);
            let n = n1 + n2;
            let mut e = vec![BigInt::zero(); n * n];
            for i in 0..n1 {
                for j in 0..n1 {
                    e[i * n + j] = b1.int_entries().unwrap()[i * n1 + j].clone();
                }
                for j in n1..n {
                    e[i * n + j] = BigInt::from(rng.gen_range(-3i64..=3));
                }
            }
            for i in 0..n2 {
                for j in 0..n2 {
                    e[(n1 + i) * n + (n1 + j)] = b2.int_entries().unwrap()[i * n2 + j].clone();
                }
            }
            let x = MatrixZ::new_int(Domain::Integer, n, e).unwrap();
            let p = invpoly_subset_dp(&x, &caps).unwrap();
            let p1 = invpoly_subset_dp(&b1, &caps).unwrap();
            let p2 = invpoly_subset_dp(&b2, &caps).unwrap();
            for m in [3u64, 5, 8] {
                let root = RootOfUnity::new(m, 1).unwrap();
                let v = specialize_at_root(&p, root);
                let v1 = specialize_at_root(&p1, root);
                let v2 = specialize_at_root(&p2, root);
                let prod = v1.as_cyc_int().unwrap().mul(v2.as_cyc_int().unwrap()).unwrap();
                assert_eq!(v.as_cyc_int().unwrap(), &prod);
            }
        }
    }

    #[test]
    fn multilinearity_in_rows() {
        let caps = KernelCaps::default();
        let mut rng = StdRng::seed_from_u64(9);
        for _ in 0..10 {
            let n = rng.gen_range(2..=5);
            let i = rng.gen_range(0..n);
            let u: Vec<BigInt> = (0..n).map(|_| BigInt::from(rng.gen_range(-4i64..=4))).collect();
            let v: Vec<BigInt> = (0..n).map(|_| BigInt::from(rng.gen_range(-4i64..=4))).collect();
            let base = random_int(&mut rng, n, -4, 4);
            let with_row = |row: &[BigInt]| {
                let mut e = base.int_entries().unwrap().to_vec();
                for j in 0..n {
                    e[i * n + j] = row[j].clone();
                }
                MatrixZ::new_int(Domain::Integer, n, e).unwrap()
            };
            let sum_row: Vec<BigInt> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
            let pu = invpoly_subset_dp(&with_row(&u), &caps).unwrap();
            let pv = invpoly_subset_dp(&with_row(&v), &caps).unwrap();
            let ps = invpoly_subset_dp(&with_row(&sum_row), &caps).unwrap();
            let cu = pu.int_coeffs().unwrap();
            let cv = pv.int_coeffs().unwrap();
            let cs = ps.int_coeffs().unwrap();
            for l in 0..cs.len() {
                assert_eq!(cs[l], &cu[l] + &cv[l]);
            }
        }
    }

    #[test]
    fn integrality_at_roots_for_integer_matrices() {
        // gaussian_rational path with integer-valued entries yields exact
        // values with denominator 1 at every root
        let caps = KernelCaps::default();
        let mut rng = StdRng::seed_from_u64(10);
        for _ in 0..10 {
            let n = rng.gen_range(1..=4);
            let xi = random_int(&mut rng, n, -3, 3);
            let g: Vec<GaussRat> = xi
                .int_entries()
                .unwrap()
                .iter()
                .map(|c| GaussRat::new(BigRational::from(c.clone()), BigRational::zero()))
                .collect();
            let xg = MatrixZ::new_gauss(n, g).unwrap();
            let p = invpoly_subset_dp(&xg, &caps).unwrap();
            let root = RootOfUnity::new(5, 1).unwrap();
            let v = specialize_at_root(&p, root);
            let vr = v.as_cyc_rat().unwrap();
            for c in vr.coeffs() {
                assert!(c.denom().is_one());
            }
        }
    }

    #[test]
    fn degree_bound_top_coefficient() {
        // the top coefficient C(n,2) is attained iff the anti-diagonal
        // product is nonzero
        let caps = KernelCaps::default();
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..20 {
            let n = rng.gen_range(2..=5);
            let x = random_binary(&mut rng, n);
            let p = invpoly_subset_dp(&x, &caps).unwrap();
            let c = p.int_coeffs().unwrap();
            assert_eq!(c.len(), n * (n - 1) / 2 + 1);
            let anti: BigInt = (0..n).map(|i| x.int_entries().unwrap()[i * n + (n - 1 - i)].clone()).product();
            assert_eq!(*c.last().unwrap(), anti);
        }
    }

    #[test]
    fn normsq_examples() {
        let caps = KernelCaps::default();
        for n in 1..=4 {
            let v = normsq_at_root(&MatrixZ::identity(n), 5, &caps).unwrap();
            assert_eq!(v, CycInt::one(5));
        }
        // zero row forces Per_z = 0
        let mut e = vec![BigInt::one(); 9];
        for j in 0..3 {
            e[3 + j] = BigInt::zero();
        }
        let x = MatrixZ::new_int(Domain::Binary, 3, e).unwrap();
        let v = normsq_at_root(&x, 3, &caps).unwrap();
        assert!(v.is_zero());
        // embedding cross-check against |embed(specialize)|^2
        let mut rng = StdRng::seed_from_u64(12);
        for _ in 0..50 {
            let n = rng.gen_range(1..=5);
            let m = *[3u64, 4, 5, 7].iter().nth(rng.gen_range(0..4)).unwrap();
            let x = random_binary(&mut rng, n);
            let ns = normsq_at_root(&x, m, &caps).unwrap();
            let p = invpoly_subset_dp(&x, &caps).unwrap();
            let val = specialize_at_root(&p, RootOfUnity::new(m, 1).unwrap());
            let ball = val.as_cyc_int().unwrap().embed(128);
            let n2 = ball.normsq(128);
            let emb = ns.embed(128);
            // |embed(specialize)|^2 within combined radii of embed(normsq)
            let diff = emb.re.sub(&n2.mid).abs();
            let tol = emb.rad.add(&n2.rad);
            assert!(diff.cmp_val(&tol) != std::cmp::Ordering::Greater);
        }
    }

    #[test]
    fn ryser_examples() {
        let caps = KernelCaps::default();
        let r = per_one_ryser(&MatrixZ::identity(4), &caps).unwrap();
        assert_eq!(r.as_cyc_int().unwrap().coeffs()[0], BigInt::one());
        let r = per_one_ryser(&MatrixZ::all_ones(4), &caps).unwrap();
        assert_eq!(r.as_cyc_int().unwrap().coeffs()[0], BigInt::from(24));
    }

    #[test]
    fn float_domain_ball_agreement() {
        // complex_float matrices evaluate through balls; cross-check the DP
        // against the brute force within radii
        let caps = KernelCaps::default();
        let mut rng = StdRng::seed_from_u64(13);
        for _ in 0..5 {
            let n = rng.gen_range(1..=5);
            let e: Vec<(f64, f64)> =
                (0..n * n).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let x = MatrixZ::new_float(n, e).unwrap();
            let a = invpoly_subset_dp(&x, &caps).unwrap();
            let b = invpoly_bruteforce(&x, &caps).unwrap();
            let (InvCoeffs::Ball(ca), InvCoeffs::Ball(cb)) = (a.coeffs(), b.coeffs()) else {
                panic!("expected ball coefficients");
            };
            for (u, v) in ca.iter().zip(cb) {
                let d = u.sub(v, 128);
                assert!(d.abs_lb().is_zero());
            }
        }
    }

    #[test]
    fn separation_vs_observed_coefficients() {
        // rep_coeff_bound dominates observed canonical coefficients
        let caps = KernelCaps::default();
        let mut rng = StdRng::seed_from_u64(14);
        for (m, n) in [(3u64, 4usize), (5, 5), (9, 4)] {
            let bound_bits = crate::cyclotomic::rep_coeff_bound(m, n as u64);
            let mut max_bits = 0u64;
            for _ in 0..200 {
                let x = random_binary(&mut rng, n);
                let p = invpoly_subset_dp(&x, &caps).unwrap();
                let v = specialize_at_root(&p, RootOfUnity::new(m, 1).unwrap());
                let mx = v.as_cyc_int().unwrap().coeff_max();
                max_bits = max_bits.max(mx.bits());
            }
            assert!(
                max_bits <= bound_bits,
                "m={m} n={n}: observed {max_bits} bits exceeds bound {bound_bits}"
            );
        }
        let _ = separation_bound(&BigInt::one(), 3).to_f64();
    }
}
