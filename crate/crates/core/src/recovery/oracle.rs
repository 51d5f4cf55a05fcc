//! Simulated |Per_z|^2 oracle with a multiplicative-factor adversary.
//!
//! Ground truth is exact: for a binary base matrix with at most one shifted
//! entry, Per_z(X^[t]) = Per_z(X) - t * Per_z(X with the shifted row replaced
//! by a unit row), so each query reduces to a cached pair of exact kernel
//! values and a little field arithmetic. Responses are the exact truth times
//! an adversary factor in [1/g, g]; zero is always reported exactly.

use crate::cyclotomic::{CycInt, CycRat};
use crate::error::{Error, Result};
use crate::gauss::GaussRat;
use crate::zperm::{invpoly_subset_dp, specialize_at_root_power, Domain, KernelCaps, MatrixZ};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::collections::HashMap;

/// Adversary strategy for the multiplicative factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adversary {
    /// factor = 1 (the oracle is the exact kernel)
    Exact,
    /// factor = g^u with u uniform in [-1, 1], a deterministic function of
    /// (query, seed) in consistent mode
    RandomUniformLogfactor,
    /// factors alternate g, 1/g by query counter; the worst case for the
    /// halving search
    WorstCaseAlternating,
}

impl Adversary {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Adversary::Exact),
            "random_uniform_logfactor" => Ok(Adversary::RandomUniformLogfactor),
            "worst_case_alternating" => Ok(Adversary::WorstCaseAlternating),
            other => Err(Error::InvalidInput(format!("unknown adversary {other}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleConfig {
    /// multiplicative envelope g >= 1
    pub g: BigRational,
    pub adversary: Adversary,
    pub seed: u64,
    /// when true, identical queries always receive identical responses
    pub consistent: bool,
}

impl OracleConfig {
    pub fn exact() -> Self {
        OracleConfig {
            g: BigRational::one(),
            adversary: Adversary::Exact,
            seed: 0,
            consistent: true,
        }
    }

    pub fn new(g: BigRational, adversary: Adversary, seed: u64) -> Result<Self> {
        if g < BigRational::one() {
            return Err(Error::InvalidInput("oracle factor g must be >= 1".into()));
        }
        Ok(OracleConfig { g, adversary, seed, consistent: true })
    }
}

/// A single oracle query: a binary matrix, optionally with one entry shifted
/// by a complex rational t (X^[t] has entry (row, col) replaced by X - t).
#[derive(Debug, Clone)]
pub struct OracleQuery {
    pub matrix: MatrixZ,
    pub shift: Option<Shift>,
}

#[derive(Debug, Clone)]
pub struct Shift {
    pub row: usize,
    pub col: usize,
    pub t: GaussRat,
}

impl OracleQuery {
    pub fn plain(matrix: MatrixZ) -> Self {
        OracleQuery { matrix, shift: None }
    }

    pub fn shifted(matrix: MatrixZ, row: usize, col: usize, t: GaussRat) -> Self {
        if t.is_zero() {
            OracleQuery { matrix, shift: None }
        } else {
            OracleQuery { matrix, shift: Some(Shift { row, col, t }) }
        }
    }

    fn key_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.matrix.n() as u64).to_le_bytes());
        if let Some(v) = self.matrix.int_entries() {
            for e in v {
                out.extend_from_slice(&e.to_signed_bytes_le());
                out.push(0xfe);
            }
        }
        if let Some(s) = &self.shift {
            out.push(1);
            out.extend_from_slice(&(s.row as u64).to_le_bytes());
            out.extend_from_slice(&(s.col as u64).to_le_bytes());
            for r in [&s.t.re, &s.t.im] {
                out.extend_from_slice(&r.numer().to_signed_bytes_le());
                out.push(0xfd);
                out.extend_from_slice(&r.denom().to_signed_bytes_le());
                out.push(0xfc);
            }
        } else {
            out.push(0);
        }
        out
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Exact linear form of a shift position: truth(t) = |p - t*w|^2 where
/// p = Per_z(X) and w = Per_z(X with row `row` replaced by the unit row e_col),
/// both lifted into Q(zeta_M), M = lcm(4, m).
#[derive(Debug, Clone)]
pub struct LinForm {
    pub p: CycRat,
    pub w: CycRat,
}

impl LinForm {
    pub fn value_at(&self, t: &GaussRat) -> CycRat {
        let m = self.p.order();
        let tw = mul_by_gauss(&self.w, t);
        let v = self.p.sub(&tw).expect("same order");
        debug_assert_eq!(v.order(), m);
        v.normsq()
    }

    pub fn diff_at(&self, t: &GaussRat) -> CycRat {
        let tw = mul_by_gauss(&self.w, t);
        self.p.sub(&tw).expect("same order")
    }
}

pub(crate) fn mul_by_gauss(v: &CycRat, t: &GaussRat) -> CycRat {
    let m = v.order();
    if t.im.is_zero() {
        v.scale(&t.re)
    } else {
        let i = CycRat::root_power(m, m / 4);
        let im_part = v.mul(&i).expect("same order").scale(&t.im);
        v.scale(&t.re).add(&im_part).expect("same order")
    }
}

/// Simulated oracle for |Per_{zeta_m^k}(X')|^2.
pub struct NormSqOracle {
    pub cfg: OracleConfig,
    m: u64,
    k: u64,
    /// field order for shifted values: lcm(4, m)
    field_order: u64,
    caps: KernelCaps,
    query_count: u64,
    lin_cache: HashMap<u64, LinForm>,
    value_cache: HashMap<u64, CycRat>,
}

/// One oracle response: the adversary factor is fixed at query time; the
/// exact value is materialized on demand.
#[derive(Debug, Clone)]
pub struct Response {
    pub factor: BigRational,
}

impl NormSqOracle {
    pub fn new(cfg: OracleConfig, m: u64, k: u64, caps: KernelCaps) -> Self {
        NormSqOracle {
            cfg,
            m,
            k,
            field_order: m.lcm(&4),
            caps,
            query_count: 0,
            lin_cache: HashMap::new(),
            value_cache: HashMap::new(),
        }
    }

    pub fn root_order(&self) -> u64 {
        self.m
    }

    pub fn root_exponent(&self) -> u64 {
        self.k
    }

    pub fn field_order(&self) -> u64 {
        self.field_order
    }

    pub fn query_count(&self) -> u64 {
        self.query_count
    }

    /// Adversary factors are stateless functions of (query, seed) in
    /// consistent mode, so identical queries always see identical responses
    /// without any memoization; fresh mode keys off the query counter.
    fn draw_factor(&self, key: u64) -> BigRational {
        let tag = if self.cfg.consistent {
            key
        } else {
            key ^ self.query_count.rotate_left(17) ^ 0x9e3779b97f4a7c15
        };
        match self.cfg.adversary {
            Adversary::Exact => BigRational::one(),
            Adversary::WorstCaseAlternating => {
                // alternate between the two extreme factors g and 1/g
                if tag.count_ones() % 2 == 0 {
                    self.cfg.g.clone()
                } else {
                    self.cfg.g.clone().recip()
                }
            }
            Adversary::RandomUniformLogfactor => {
                let mut rng = ChaCha12Rng::seed_from_u64(self.cfg.seed ^ tag);
                let u: f64 = rng.gen_range(-1.0..=1.0);
                let gf = self.cfg.g.to_f64().unwrap_or(1.0);
                let cand = crate::dyadic::Dyadic::from_f64(gf.powf(u))
                    .unwrap_or_else(crate::dyadic::Dyadic::one)
                    .to_rational();
                let lo = self.cfg.g.clone().recip();
                if cand < lo {
                    lo
                } else if cand > self.cfg.g {
                    self.cfg.g.clone()
                } else {
                    cand
                }
            }
        }
    }

    fn require_binary_base(&self, q: &OracleQuery) -> Result<()> {
        if q.matrix.domain() != Domain::Binary {
            return Err(Error::InvalidInput("oracle base matrix must be binary".into()));
        }
        if let Some(s) = &q.shift {
            if s.row >= q.matrix.n() || s.col >= q.matrix.n() {
                return Err(Error::ShiftNotSupported);
            }
        }
        Ok(())
    }

    /// Register a query: increments the counter and fixes the adversary
    /// factor. The exact value can be materialized later via `value_of`.
    pub fn query(&mut self, q: &OracleQuery) -> Result<Response> {
        self.require_binary_base(q)?;
        let key = fnv1a(&q.key_bytes());
        let factor = self.draw_factor(key);
        self.query_count += 1;
        Ok(Response { factor })
    }

    /// Exact linear form for a shift position (cached).
    pub fn lin_form(&mut self, matrix: &MatrixZ, row: usize, col: usize) -> Result<LinForm> {
        let mut kb = Vec::new();
        kb.extend_from_slice(&(matrix.n() as u64).to_le_bytes());
        for e in matrix.int_entries().expect("binary matrix") {
            kb.extend_from_slice(&e.to_signed_bytes_le());
            kb.push(0xfe);
        }
        kb.extend_from_slice(&(row as u64).to_le_bytes());
        kb.extend_from_slice(&(col as u64).to_le_bytes());
        let key = fnv1a(&kb);
        if let Some(f) = self.lin_cache.get(&key) {
            return Ok(f.clone());
        }
        let p = self.exact_per(matrix)?;
        let mut unit = matrix.int_entries().unwrap().to_vec();
        let n = matrix.n();
        for j in 0..n {
            unit[row * n + j] = if j == col { BigInt::one() } else { BigInt::zero() };
        }
        let unit_m = MatrixZ::new_int(Domain::Binary, n, unit)?;
        let w = self.exact_per(&unit_m)?;
        let form = LinForm {
            p: p.to_order(self.field_order)?.to_rat(),
            w: w.to_order(self.field_order)?.to_rat(),
        };
        self.lin_cache.insert(key, form.clone());
        Ok(form)
    }

    fn exact_per(&self, matrix: &MatrixZ) -> Result<CycInt> {
        let p = invpoly_subset_dp(matrix, &self.caps)?;
        let v = specialize_at_root_power(&p, self.m, self.k);
        Ok(v.as_cyc_int().expect("integer matrix").clone())
    }

    /// Exact truth |Per_z(X')|^2 for a query, before the adversary factor.
    pub fn exact_truth(&mut self, q: &OracleQuery) -> Result<CycRat> {
        self.require_binary_base(q)?;
        let key = fnv1a(&q.key_bytes());
        if let Some(v) = self.value_cache.get(&key) {
            return Ok(v.clone());
        }
        let v = match &q.shift {
            None => {
                let p = self.exact_per(&q.matrix)?;
                p.normsq().to_order(self.field_order)?.to_rat()
            }
            Some(s) => {
                let form = self.lin_form(&q.matrix, s.row, s.col)?;
                form.value_at(&s.t)
            }
        };
        self.value_cache.insert(key, v.clone());
        Ok(v)
    }

    /// The full response value: adversary factor times exact truth (zero is
    /// reported exactly).
    pub fn value_of(&mut self, q: &OracleQuery, resp: &Response) -> Result<CycRat> {
        let truth = self.exact_truth(q)?;
        if truth.is_zero() {
            return Ok(truth);
        }
        Ok(truth.scale(&resp.factor))
    }

    /// Query and materialize in one step.
    pub fn respond(&mut self, q: &OracleQuery) -> Result<CycRat> {
        let r = self.query(q)?;
        self.value_of(q, &r)
    }

    /// True exactly when Per_z of the queried matrix is zero.
    pub fn is_zero(&mut self, q: &OracleQuery) -> Result<bool> {
        Ok(self.exact_truth(q)?.is_zero())
    }
}

/// Standalone form of the oracle simulation: one query against a fresh oracle.
pub fn simulate_normsq_oracle(
    matrix: &MatrixZ,
    shift: Option<(usize, usize, GaussRat)>,
    cfg: &OracleConfig,
    m: u64,
    caps: &KernelCaps,
) -> Result<CycRat> {
    let mut oracle = NormSqOracle::new(cfg.clone(), m, 1, *caps);
    let q = match shift {
        None => OracleQuery::plain(matrix.clone()),
        Some((r, c, t)) => OracleQuery::shifted(matrix.clone(), r, c, t),
    };
    oracle.respond(&q)
}
