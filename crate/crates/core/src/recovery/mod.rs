//! Approximate-to-exact recovery: drive a multiplicative-factor |Per_z|^2
//! oracle down to an exponentially small error by a telescoping ratio search,
//! then round to the exact canonical representation through the
//! close-algebraic-integer search.

mod caip;
mod oracle;
#[cfg(test)]
mod tests;

pub use caip::{caip_decide, caip_search, lattice_point, CaipAnswer, CaipInstance, CaipLog, CaipStep};
pub use oracle::{
    simulate_normsq_oracle, Adversary, LinForm, NormSqOracle, OracleConfig, OracleQuery, Response,
    Shift,
};

use crate::ball::ComplexBall;
use crate::cyclotomic::{factorial, rep_coeff_bound, separation_bound, totient, CycInt, CycRat};
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::gauss::GaussRat;
use crate::zperm::MatrixZ;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use std::cmp::Ordering;

/// One step of the submatrix chain: the matrix and the (0-based) row of the
/// previous matrix that was deleted together with its first column.
#[derive(Debug, Clone)]
pub struct ChainStep {
    pub matrix: MatrixZ,
    pub deleted_row: usize,
}

/// The chain X_0 = X, ..., X_{n-1} (1x1), deleting the first column and the
/// smallest-index row whose minor has nonzero |Per_z|^2 (zero tests are exact
/// under the oracle contract). O(n^2) queries.
pub fn find_submatrix_chain(
    x: &MatrixZ,
    oracle: &mut NormSqOracle,
) -> Result<Vec<ChainStep>> {
    let q0 = OracleQuery::plain(x.clone());
    oracle.query(&q0)?;
    if oracle.exact_truth(&q0)?.is_zero() {
        return Err(Error::ZeroPermanent);
    }
    let mut chain = vec![ChainStep { matrix: x.clone(), deleted_row: 0 }];
    let mut cur = x.clone();
    while cur.n() > 1 {
        let mut found = None;
        for k in 0..cur.n() {
            let w = cur.minor(k, 0);
            let q = OracleQuery::plain(w.clone());
            oracle.query(&q)?;
            if !oracle.exact_truth(&q)?.is_zero() {
                found = Some((k, w));
                break;
            }
        }
        let (k, w) = found.ok_or(Error::InvariantViolation)?;
        chain.push(ChainStep { matrix: w.clone(), deleted_row: k });
        cur = w;
    }
    Ok(chain)
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundLog {
    pub grid_side: u64,
    pub alpha: [String; 2],
    pub beta: String,
    pub queries_so_far: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RefineLog {
    pub deleted_row: usize,
    pub rounds: Vec<RoundLog>,
    pub final_beta: String,
    pub exact_hit: bool,
}

/// Result of refining one telescoping ratio.
#[derive(Debug, Clone)]
pub struct RatioEstimate {
    /// estimate of Per_z(X_i) / (z^k Per_z(X_{i+1}))
    pub center: GaussRat,
    /// certified bound on |true ratio - center|
    pub radius: BigRational,
    pub log: RefineLog,
}

fn ceil_of_ratio(r: &BigRational) -> BigInt {
    let q = r.ceil();
    q.to_integer()
}

/// Upper-bound dyadic for a positive CycRat value, at a precision that is
/// relative to the value itself (the values here shrink geometrically, so an
/// absolute precision target would eventually swamp them).
fn real_ub_rel(v: &CycRat, rel_bits: u64) -> Dyadic {
    let mut prec = 64;
    loop {
        let b = v.embed(prec);
        if b.rad.is_zero() {
            return b.re;
        }
        if let (Some(re_msb), Some(rad_msb)) = (b.re.msb_exp(), b.rad.msb_exp()) {
            if rad_msb + rel_bits as i64 <= re_msb {
                return b.re.add(&b.rad);
            }
        }
        prec *= 2;
        assert!(prec <= 1 << 22, "relative upper bound did not resolve");
    }
}

fn real_lb_positive(v: &CycRat) -> Dyadic {
    let mut bits = 64;
    loop {
        let b = v.embed(bits);
        let lb = b.re.sub(&b.rad);
        if !lb.is_negative() && !lb.is_zero() {
            return lb;
        }
        bits *= 2;
        assert!(bits <= 1 << 20, "positive lower bound did not resolve");
    }
}

fn dyadic_div_up(a: &Dyadic, b: u64) -> Dyadic {
    let (q, e) = a.div_round(&Dyadic::from_int(b as i64), 32);
    q.add(&e)
}

fn ball_c64_scaled(b: &ComplexBall, shift: i64) -> Complex64 {
    Complex64::new(b.re.shl(shift).to_f64(), b.im.shl(shift).to_f64())
}

/// Refine the ratio attached to one chain step: starting from alpha_0 = 0,
/// repeatedly lay an L x L grid (L = ceil(g^2)) over the certified disk,
/// query the oracle at every grid shift, move to the minimizer (f64
/// preselection, exact verification of the halving invariant), and recompute
/// the certified radius beta = g sqrt(O(X^[alpha]) / O(Y)). Stops once the
/// radius is below `target`.
pub fn refine_ratio(
    oracle: &mut NormSqOracle,
    parent: &MatrixZ,
    deleted_row: usize,
    child: &MatrixZ,
    target: &BigRational,
) -> Result<RatioEstimate> {
    let g = oracle.cfg.g.clone();
    let g_dy = {
        let (d, e) = Dyadic::from_rational(&g, 32);
        d.add(&e)
    };
    let base_l: u64 = ceil_of_ratio(&(&g * &g)).to_u64().unwrap_or(1).max(1);

    // O(Y) and its positive lower bound
    let qy = OracleQuery::plain(child.clone());
    let ry = oracle.query(&qy)?;
    let vy = oracle.value_of(&qy, &ry)?;
    if vy.is_zero() {
        return Err(Error::ZeroPermanent);
    }
    let vy_lb = real_lb_positive(&vy);

    let form = oracle.lin_form(parent, deleted_row, 0)?;
    let w_ball = crate::cyclotomic::embed_to_radius_rat(&form.w, 192);

    let q_parent = OracleQuery::plain(parent.clone());
    let rp = oracle.query(&q_parent)?;
    let mut o_cur = oracle.value_of(&q_parent, &rp)?;
    let mut center = GaussRat::zero();
    let mut log = RefineLog {
        deleted_row,
        rounds: Vec::new(),
        final_beta: String::new(),
        exact_hit: false,
    };

    let beta_of = |o: &CycRat, oracle_g: &Dyadic, vy_lb: &Dyadic| -> Dyadic {
        let num = real_ub_rel(o, 32);
        let (ratio, re) = num.div_round(vy_lb, 96);
        let ratio_ub = ratio.add(&re);
        oracle_g.mul(&ratio_ub.sqrt_ub()).round_up_mag(24)
    };

    let mut beta = beta_of(&o_cur, &g_dy, &vy_lb);
    let mut level = 0u64;
    loop {
        if o_cur.is_zero() {
            log.exact_hit = true;
            log.final_beta = "0".into();
            return Ok(RatioEstimate { center, radius: BigRational::zero(), log });
        }
        if beta.to_rational() <= *target {
            break;
        }
        // centered linear form: C = P - center*W; truth(center + s) = |C - s W|^2
        let c_val = form.diff_at(&center);
        let c_ball = crate::cyclotomic::embed_to_radius_rat(&c_val, 192);
        // f64 scaling so tiny magnitudes stay representable
        let scale = -(beta.msb_exp().unwrap_or(0));
        let c64 = ball_c64_scaled(&c_ball, scale);
        let w64 = ball_c64_scaled(&w_ball, 0);

        let mut l = base_l;
        let mut moved = false;
        while l <= 3 * base_l + 8 {
            let h = dyadic_div_up(&beta, l);
            let h_scaled = h.shl(scale).to_f64();
            let beta_sq = beta.mul(&beta);
            let h_sq = h.mul(&h);
            let li = l as i64;
            let mut best: Option<(f64, i64, i64)> = None;
            for j in -li..=li {
                for k2 in -li..=li {
                    let s_norm_sq = h_sq.mul(&Dyadic::from_int(j * j + k2 * k2));
                    if s_norm_sq.cmp_val(&beta_sq) == Ordering::Greater {
                        continue;
                    }
                    let t = GaussRat::from_dyadics(
                        &center_shift(&center.re, &h, j),
                        &center_shift(&center.im, &h, k2),
                    );
                    let q = OracleQuery::shifted(parent.clone(), deleted_row, 0, t);
                    let resp = oracle.query(&q)?;
                    let f = resp.factor.to_f64().unwrap_or(1.0);
                    let s64 = Complex64::new(j as f64 * h_scaled, k2 as f64 * h_scaled);
                    let val = f * (c64 - s64 * w64).norm_sqr();
                    if best.as_ref().map_or(true, |(b, _, _)| val < *b) {
                        best = Some((val, j, k2));
                    }
                }
            }
            let (_, bj, bk) = best.ok_or(Error::InvariantViolation)?;
            let t_best = GaussRat::from_dyadics(
                &center_shift(&center.re, &h, bj),
                &center_shift(&center.im, &h, bk),
            );
            let q_best = OracleQuery::shifted(parent.clone(), deleted_row, 0, t_best.clone());
            let r_best = oracle.query(&q_best)?;
            let o_best = oracle.value_of(&q_best, &r_best)?;
            // exact halving check: 2 * O(best) <= O(current)
            let twice = o_best.scale(&BigRational::from_integer(2.into()));
            if twice.real_cmp(&o_cur)? != Ordering::Greater {
                center = t_best;
                o_cur = o_best;
                moved = true;
                break;
            }
            l += (base_l / 4).max(1);
        }
        if !moved {
            return Err(Error::InvariantViolation);
        }
        beta = beta_of(&o_cur, &g_dy, &vy_lb);
        level += 1;
        log.rounds.push(RoundLog {
            grid_side: 2 * base_l + 1,
            alpha: [
                center.re.to_f64().map(|v| v.to_string()).unwrap_or_default(),
                center.im.to_f64().map(|v| v.to_string()).unwrap_or_default(),
            ],
            beta: beta.to_f64().to_string(),
            queries_so_far: oracle.query_count(),
        });
        assert!(level <= 1 << 16, "refinement failed to converge");
    }
    log.final_beta = beta.to_f64().to_string();
    Ok(RatioEstimate { center, radius: beta.to_rational(), log })
}

fn center_shift(base: &BigRational, h: &Dyadic, steps: i64) -> Dyadic {
    // base is itself a dyadic rational by construction (grid sums)
    let base_dy = rational_to_dyadic_exact(base);
    base_dy.add(&h.mul(&Dyadic::from_int(steps)))
}

fn rational_to_dyadic_exact(r: &BigRational) -> Dyadic {
    // denominators of grid points are powers of two
    let den = r.denom();
    let bits = den.bits();
    debug_assert!(den == &(BigInt::one() << (bits - 1)), "grid point not dyadic");
    Dyadic::new(r.numer().clone(), -((bits - 1) as i64))
}

#[derive(Debug, Clone, Serialize)]
pub struct ReduceLog {
    pub queries: u64,
    pub chain_rows: Vec<usize>,
    pub refines: Vec<RefineLog>,
}

/// Outcome of the error-reduction pipeline.
#[derive(Debug, Clone)]
pub struct ReduceOutcome {
    pub estimate: ComplexBall,
    pub log: ReduceLog,
}

/// Reduce the oracle's multiplicative factor g to relative error <= eps by
/// the telescoping product of refined ratios; the returned ball certifies
/// containment of the true Per_z(X).
pub fn reduce_error(
    x: &MatrixZ,
    oracle: &mut NormSqOracle,
    eps: &BigRational,
) -> Result<ReduceOutcome> {
    if eps.is_negative() || eps.is_zero() {
        return Err(Error::InvalidInput("relative error target must be positive".into()));
    }
    let n = x.n() as u64;
    let m = oracle.root_order();
    let q0 = OracleQuery::plain(x.clone());
    oracle.query(&q0)?;
    if oracle.exact_truth(&q0)?.is_zero() {
        return Ok(ReduceOutcome {
            estimate: ComplexBall::zero(),
            log: ReduceLog {
                queries: oracle.query_count(),
                chain_rows: Vec::new(),
                refines: Vec::new(),
            },
        });
    }
    let chain = find_submatrix_chain(x, oracle)?;
    let fact = factorial(n);
    // Liouville floor: |Per_z| >= 1/M with M = (2 n! + 1)^(m-2)
    let m_liou = (BigInt::from(2) * &fact + BigInt::one()).pow(m.saturating_sub(2) as u32);
    let eps_eff = if *eps > BigRational::one() { BigRational::one() } else { eps.clone() };
    let mut shrink = BigRational::one();
    for _attempt in 0..4 {
        let tau_rel = &eps_eff * &shrink / BigRational::from_integer((4 * n.max(1)).into());
        let tau_abs = &tau_rel / BigRational::from(&fact * &m_liou);
        let mut refines = Vec::new();
        let prec = 256;
        let roots = crate::ball::roots_of_unity(m, prec);
        let mut product = ComplexBall::one();
        for i in 0..chain.len() - 1 {
            let parent = &chain[i].matrix;
            let step = &chain[i + 1];
            let est = refine_ratio(oracle, parent, step.deleted_row, &step.matrix, &tau_abs)?;
            let ratio_ball = ComplexBall::new(
                rational_to_dyadic_exact(&est.center.re),
                rational_to_dyadic_exact(&est.center.im),
                {
                    let (d, e) = Dyadic::from_rational(&est.radius, 32);
                    d.add(&e)
                },
            );
            // reinstate the phase z^k from the deleted row
            let e = oracle.root_exponent() * step.deleted_row as u64 % m;
            let phase = &roots[e as usize];
            product = product.mul(&ratio_ball, prec).mul(phase, prec);
            refines.push(est.log);
        }
        // base case: the 1x1 matrix has Per = its (nonzero) binary entry = 1
        // relative-error certificate: rad <= eps * (|center| - rad)
        let rad = product.rad.clone();
        let lb = product.abs_lb();
        let ok = {
            let lhs = rad.to_rational();
            let rhs = eps * lb.to_rational();
            lhs <= rhs
        };
        if ok {
            return Ok(ReduceOutcome {
                estimate: product,
                log: ReduceLog {
                    queries: oracle.query_count(),
                    chain_rows: chain.iter().skip(1).map(|s| s.deleted_row).collect(),
                    refines,
                },
            });
        }
        shrink /= BigRational::from_integer(8.into());
    }
    Err(Error::InvariantViolation)
}

/// Absolute-error variant: |Per_z| <= n! for binary X, so a relative target
/// eps_abs / n! suffices.
pub fn reduce_error_additive(
    x: &MatrixZ,
    oracle: &mut NormSqOracle,
    eps_abs: &BigRational,
) -> Result<ReduceOutcome> {
    let fact = factorial(x.n() as u64);
    let rel = eps_abs / BigRational::from(fact);
    let out = reduce_error(x, oracle, &rel)?;
    debug_assert!(out.estimate.rad.to_rational() <= *eps_abs);
    Ok(out)
}

/// Paper-shaped query budget: c * (m n^2 g^4 log n + n g^4 log g + n g^4 log(1/eps)).
pub fn query_budget_bound(m: u64, n: u64, g: &BigRational, eps: &BigRational) -> f64 {
    let g4 = g.to_f64().unwrap_or(1.0).powi(4);
    let logn = (n.max(2) as f64).log2();
    let logg = g.to_f64().unwrap_or(1.0).log2().max(1.0);
    let logeps = (1.0 / eps.to_f64().unwrap_or(1.0)).log2().max(1.0);
    let (m, n) = (m as f64, n as f64);
    m * n * n * g4 * logn + n * g4 * logg + n * g4 * logeps
}

#[derive(Debug, Clone, Serialize)]
pub struct RecoveryReport {
    pub queries: u64,
    pub coeff_bound_bits: u64,
    pub delta: String,
    pub t_scale: String,
    pub reduce: ReduceLog,
    pub caip: CaipLog,
}

#[derive(Debug, Clone)]
pub struct RecoveryOutcome {
    pub representation: CycInt,
    pub pre_caip: ComplexBall,
    pub report: RecoveryReport,
}

/// End-to-end recovery of the exact canonical representation of
/// Per_{zeta_m}(X) from the multiplicative oracle: reduce the error below
/// both a quarter of the separation bound and 2^(-n^2), then run the
/// coefficient binary search.
pub fn recover_exact(x: &MatrixZ, oracle: &mut NormSqOracle) -> Result<RecoveryOutcome> {
    let n = x.n() as u64;
    let m = oracle.root_order();
    let phi = totient(m) as usize;
    let q0 = OracleQuery::plain(x.clone());
    oracle.query(&q0)?;
    if oracle.exact_truth(&q0)?.is_zero() {
        return Ok(RecoveryOutcome {
            representation: CycInt::zero(m),
            pre_caip: ComplexBall::zero(),
            report: RecoveryReport {
                queries: oracle.query_count(),
                coeff_bound_bits: 0,
                delta: "0".into(),
                t_scale: "0".into(),
                reduce: ReduceLog {
                    queries: oracle.query_count(),
                    chain_rows: Vec::new(),
                    refines: Vec::new(),
                },
                caip: CaipLog::default(),
            },
        });
    }
    let bits = rep_coeff_bound(m, n.max(1));
    let a_bound = BigInt::one() << bits;
    let sep = separation_bound(&a_bound, m);
    // delta = min(sep/5, 2^-(n^2)); both have exact integer reciprocals
    let sep5 = sep / BigRational::from_integer(5.into());
    let dyadic_target = BigRational::new(BigInt::one(), BigInt::one() << ((n * n) as usize).max(1));
    let delta = if sep5 < dyadic_target { sep5 } else { dyadic_target };
    let t_scale = ceil_of_ratio(&delta.clone().recip());
    let reduced = reduce_error_additive(x, oracle, &delta)?;
    let est = &reduced.estimate;

    // shift coefficients into [0, 2A]: candidate = -A*sum zeta^i + box
    let mut base = CycInt::zero(m);
    for i in 0..phi {
        let term = CycInt::root_power(m, i as u64).scale(&(-&a_bound));
        base = base.add(&term)?;
    }
    let bounds = vec![BigInt::from(2) * &a_bound; phi];
    let inst = CaipInstance::new(
        m,
        est.re.to_rational(),
        est.im.to_rational(),
        bounds,
        t_scale.clone(),
    )?
    .with_base(base)?;
    let (found, caip_log) = caip_search(&inst)?;
    let shifted = found.ok_or(Error::PromiseViolated)?;
    let coeffs: Vec<BigInt> = shifted.into_iter().map(|b| b - &a_bound).collect();
    let representation = lattice_point(m, &coeffs);
    Ok(RecoveryOutcome {
        representation,
        pre_caip: est.clone(),
        report: RecoveryReport {
            queries: oracle.query_count(),
            coeff_bound_bits: bits,
            delta: delta.to_f64().unwrap_or(0.0).to_string(),
            t_scale: t_scale.to_string(),
            reduce: reduced.log,
            caip: caip_log,
        },
    })
}
