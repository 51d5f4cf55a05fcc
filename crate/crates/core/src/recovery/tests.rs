use super::*;
use crate::cyclotomic::{reduce_mod_phi, IntPoly};
use crate::zperm::{invpoly_subset_dp, specialize_at_root, Domain, KernelCaps, RootOfUnity};
use num_rational::BigRational;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn random_binary(rng: &mut StdRng, n: usize) -> MatrixZ {
    let e: Vec<BigInt> = (0..n * n).map(|_| BigInt::from(rng.gen_range(0..=1))).collect();
    MatrixZ::new_int(Domain::Binary, n, e).unwrap()
}

fn exact_value(x: &MatrixZ, m: u64) -> CycInt {
    let p = invpoly_subset_dp(x, &KernelCaps::default()).unwrap();
    specialize_at_root(&p, RootOfUnity::new(m, 1).unwrap())
        .as_cyc_int()
        .unwrap()
        .clone()
}

fn oracle_with(g: (i64, i64), adversary: Adversary, seed: u64, m: u64) -> NormSqOracle {
    let cfg = OracleConfig::new(
        BigRational::new(g.0.into(), g.1.into()),
        adversary,
        seed,
    )
    .unwrap();
    NormSqOracle::new(cfg, m, 1, KernelCaps::default())
}

#[test]
fn oracle_exact_mode() {
    // exact config on the identity: |Per_{zeta_3}(I_3)|^2 = 1
    let m = MatrixZ::identity(3);
    let v = simulate_normsq_oracle(&m, None, &OracleConfig::exact(), 3, &KernelCaps::default())
        .unwrap();
    assert_eq!(v.as_rational().unwrap(), BigRational::one());
}

#[test]
fn oracle_envelope_statistics() {
    // the response/truth ratio stays inside [1/g, g] over many queries
    let mut rng = StdRng::seed_from_u64(31);
    let mut oracle = oracle_with((4, 1), Adversary::RandomUniformLogfactor, 7, 3);
    let g = BigRational::from_integer(4.into());
    let ginv = g.clone().recip();
    let mut spread_lo = false;
    let mut spread_hi = false;
    for i in 0..10_000u64 {
        let n = rng.gen_range(1..=3);
        let x = random_binary(&mut rng, n);
        let t = GaussRat::new(
            BigRational::new((i as i64 % 17 - 8).into(), 16.into()),
            BigRational::new((i as i64 % 13 - 6).into(), 16.into()),
        );
        let q = OracleQuery::shifted(x, 0, 0, t);
        let resp = oracle.query(&q).unwrap();
        assert!(resp.factor >= ginv && resp.factor <= g, "factor out of envelope");
        if resp.factor < BigRational::new(1.into(), 2.into()) {
            spread_lo = true;
        }
        if resp.factor > BigRational::from_integer(2.into()) {
            spread_hi = true;
        }
    }
    assert!(spread_lo && spread_hi, "adversary factors should spread across the envelope");
    assert_eq!(oracle.query_count(), 10_000);
}

#[test]
fn oracle_zero_preservation() {
    // a zero row forces Per_z = 0; the response is exactly zero despite g > 1
    let mut e = vec![BigInt::one(); 9];
    for j in 0..3 {
        e[3 + j] = BigInt::zero();
    }
    let x = MatrixZ::new_int(Domain::Binary, 3, e).unwrap();
    let mut oracle = oracle_with((10, 1), Adversary::WorstCaseAlternating, 3, 3);
    let v = oracle.respond(&OracleQuery::plain(x)).unwrap();
    assert!(v.is_zero());
}

#[test]
fn oracle_consistency() {
    let x = MatrixZ::all_ones(3);
    let t = GaussRat::new(BigRational::new(1.into(), 4.into()), BigRational::new(3.into(), 8.into()));
    let q = OracleQuery::shifted(x, 1, 0, t);
    let mut oracle = oracle_with((7, 2), Adversary::RandomUniformLogfactor, 11, 5);
    let a = oracle.respond(&q).unwrap();
    let b = oracle.respond(&q).unwrap();
    assert_eq!(a, b, "consistent mode must repeat responses");
}

#[test]
fn oracle_shift_linear_form_matches_direct_kernel() {
    // |Per_z(X^[t])|^2 computed through the cached linear form equals a
    // direct kernel evaluation of the shifted matrix
    let mut rng = StdRng::seed_from_u64(32);
    for _ in 0..20 {
        let n = rng.gen_range(2..=4);
        let x = random_binary(&mut rng, n);
        let row = rng.gen_range(0..n);
        let t = GaussRat::new(
            BigRational::new(rng.gen_range(-8i64..=8).into(), 8.into()),
            BigRational::new(rng.gen_range(-8i64..=8).into(), 8.into()),
        );
        let m = 3u64;
        let mut oracle = oracle_with((1, 1), Adversary::Exact, 0, m);
        let q = OracleQuery::shifted(x.clone(), row, 0, t.clone());
        let via_form = oracle.respond(&q).unwrap();
        // direct: build the shifted matrix over gaussian rationals
        let mut ge = x.gauss_rows();
        ge[row][0] = ge[row][0].sub(&t);
        let flat: Vec<GaussRat> = ge.into_iter().flatten().collect();
        let xs = MatrixZ::new_gauss(x.n(), flat).unwrap();
        let p = invpoly_subset_dp(&xs, &KernelCaps::default()).unwrap();
        let v = specialize_at_root(&p, RootOfUnity::new(m, 1).unwrap());
        let direct = v.as_cyc_rat().unwrap().normsq().to_order(12).unwrap();
        assert_eq!(via_form, direct);
    }
}

#[test]
fn chain_examples() {
    // identity and all-ones matrices pick k = 1 (index 0) at every step;
    // note Per_{zeta_3}(J_n) = 0 for n >= 3 (the q-factorial vanishes), so
    // the all-ones case runs at m = 7
    for (x, m) in [(MatrixZ::identity(5), 3u64), (MatrixZ::all_ones(5), 7)] {
        let mut oracle = oracle_with((2, 1), Adversary::RandomUniformLogfactor, 5, m);
        let chain = find_submatrix_chain(&x, &mut oracle).unwrap();
        assert_eq!(chain.len(), 5);
        for step in &chain[1..] {
            assert_eq!(step.deleted_row, 0);
        }
    }
    // random chains: every element has nonzero Per_z per the exact kernel
    let mut rng = StdRng::seed_from_u64(33);
    let mut done = 0;
    while done < 10 {
        let n = rng.gen_range(2..=6);
        let x = random_binary(&mut rng, n);
        if exact_value(&x, 3).is_zero() {
            continue;
        }
        done += 1;
        let mut oracle = oracle_with((3, 1), Adversary::RandomUniformLogfactor, done, 3);
        let chain = find_submatrix_chain(&x, &mut oracle).unwrap();
        assert_eq!(chain.len(), n);
        for step in &chain {
            assert!(!exact_value(&step.matrix, 3).is_zero());
        }
    }
    //  zero permanent is rejected
    let mut e = vec![BigInt::one(); 4];
    e[0] = BigInt::zero();
    e[1] = BigInt::zero();
    let x = MatrixZ::new_int(Domain::Binary, 2, e).unwrap();
    let mut oracle = oracle_with((2, 1), Adversary::Exact, 0, 3);
    assert!(matches!(find_submatrix_chain(&x, &mut oracle), Err(Error::ZeroPermanent)));
}

#[test]
fn refine_ratio_exact_oracle() {
    // with the exact oracle the refinement converges to the true ratio
    let mut rng = StdRng::seed_from_u64(34);
    let mut done = 0;
    while done < 6 {
        let n = rng.gen_range(2..=4);
        let x = random_binary(&mut rng, n);
        let m = 3u64;
        if exact_value(&x, m).is_zero() {
            continue;
        }
        let mut oracle = oracle_with((1, 1), Adversary::Exact, 0, m);
        let chain = find_submatrix_chain(&x, &mut oracle).unwrap();
        if chain.len() < 2 {
            continue;
        }
        done += 1;
        let target = BigRational::new(1.into(), BigInt::from(1u64) << 40);
        let est = refine_ratio(
            &mut oracle,
            &chain[0].matrix,
            chain[1].deleted_row,
            &chain[1].matrix,
            &target,
        )
        .unwrap();
        assert!(est.radius <= target);
        // compare against the exact ratio Per(X0) / (z^k Per(X1))
        let p0 = exact_value(&chain[0].matrix, m).to_order(12).unwrap().to_rat();
        let p1 = exact_value(&chain[1].matrix, m).to_order(12).unwrap().to_rat();
        let phase = CycInt::root_power(12, 4 * chain[1].deleted_row as u64 % 12).to_rat();
        let denom = phase.mul(&p1).unwrap();
        let true_ratio = p0.div(&denom).unwrap();
        let ball = true_ratio.embed(128);
        let c = ball.to_c64();
        let est_c = num_complex::Complex64::new(
            est.center.re.to_f64().unwrap(),
            est.center.im.to_f64().unwrap(),
        );
        let dist = (c - est_c).norm();
        assert!(
            dist <= est.radius.to_f64().unwrap() + 1e-12,
            "ratio estimate off: {dist} vs {}",
            est.radius.to_f64().unwrap()
        );
    }
}

#[test]
fn refine_ratio_worst_case_adversary_bound() {
    // g = 2 worst-case alternating: the certified radius still contracts and
    // the final distance obeys it (m = 7 so the all-ones value is nonzero)
    let m = 7u64;
    let field = 28u64;
    let x = MatrixZ::all_ones(3);
    for seed in 0..20u64 {
        let mut oracle = oracle_with((2, 1), Adversary::WorstCaseAlternating, seed, m);
        let chain = find_submatrix_chain(&x, &mut oracle).unwrap();
        let target = BigRational::new(1.into(), BigInt::from(1u64) << 30);
        let est = refine_ratio(
            &mut oracle,
            &chain[0].matrix,
            chain[1].deleted_row,
            &chain[1].matrix,
            &target,
        )
        .unwrap();
        assert!(est.radius <= target);
        let p0 = exact_value(&chain[0].matrix, m).to_order(field).unwrap().to_rat();
        let p1 = exact_value(&chain[1].matrix, m).to_order(field).unwrap().to_rat();
        let phase = CycInt::root_power(field, (field / m) * chain[1].deleted_row as u64 % field)
            .to_rat();
        let true_ratio = p0.div(&phase.mul(&p1).unwrap()).unwrap().embed(128).to_c64();
        let est_c = num_complex::Complex64::new(
            est.center.re.to_f64().unwrap(),
            est.center.im.to_f64().unwrap(),
        );
        assert!((true_ratio - est_c).norm() <= est.radius.to_f64().unwrap() + 1e-12);
    }
}

#[test]
fn reduce_error_exact_oracle() {
    // exact oracle: the certified ball tightly contains the true value
    let mut rng = StdRng::seed_from_u64(35);
    for m in [3u64, 5] {
        let mut done = 0;
        while done < 4 {
            let n = rng.gen_range(2..=5);
            let x = random_binary(&mut rng, n);
            let truth = exact_value(&x, m);
            let mut oracle = oracle_with((1, 1), Adversary::Exact, 0, m);
            let eps = BigRational::new(1.into(), BigInt::from(1u64) << 30);
            let out = reduce_error(&x, &mut oracle, &eps).unwrap();
            if truth.is_zero() {
                assert!(out.estimate.abs_ub().is_zero());
                continue;
            }
            done += 1;
            let t = truth.embed(160);
            let d = t.sub(&out.estimate, 160);
            assert!(d.abs_lb().is_zero(), "ball must contain the truth");
            // relative error certificate
            let rel = out.estimate.rad.to_f64() / t.abs_lb().to_f64();
            assert!(rel <= eps.to_f64().unwrap() * 1.0001);
        }
    }
}

#[test]
fn reduce_error_additive_regime() {
    // g = 10 adversarial, additive error <= 2^(-n^2) against the exact kernel
    let mut rng = StdRng::seed_from_u64(36);
    let m = 3u64;
    let mut done = 0;
    while done < 3 {
        let n = rng.gen_range(2..=4usize);
        let x = random_binary(&mut rng, n);
        let truth = exact_value(&x, m);
        if truth.is_zero() {
            continue;
        }
        done += 1;
        let mut oracle = oracle_with((10, 1), Adversary::RandomUniformLogfactor, done, m);
        let eps = BigRational::new(1.into(), BigInt::from(1u64) << ((n * n) as u32));
        let out = reduce_error_additive(&x, &mut oracle, &eps).unwrap();
        let t = truth.embed(160);
        let err = t.sub(&out.estimate, 160);
        // |true - center| <= radius <= eps
        assert!(err.abs_lb().is_zero());
        assert!(out.estimate.rad.to_rational() <= eps);
    }
}

#[test]
fn error_propagation_lemma_standalone() {
    // random complex tuples with per-factor relative error delta <= 1/(2n)
    // satisfy |prod a - prod a~| <= 2 n delta |prod a|
    let mut rng = StdRng::seed_from_u64(37);
    for _ in 0..200 {
        let n = rng.gen_range(1..=8usize);
        let delta = rng.gen_range(0.0..(1.0 / (2.0 * n as f64)));
        let mut prod = num_complex::Complex64::new(1.0, 0.0);
        let mut prod_t = prod;
        for _ in 0..n {
            let a = num_complex::Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let a = if a.norm() < 1e-3 { a + 1.0 } else { a };
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            let mag = rng.gen_range(0.0..delta);
            let err = num_complex::Complex64::new(phase.cos(), phase.sin()) * (mag * a.norm());
            prod *= a;
            prod_t *= a + err;
        }
        let bound = 2.0 * n as f64 * delta * prod.norm();
        assert!((prod - prod_t).norm() <= bound * (1.0 + 1e-9));
    }
}

#[test]
fn query_budget_tracks_paper_shape() {
    // fitted-constant check: observed queries / budget stays below a fixed c
    let mut rng = StdRng::seed_from_u64(38);
    let mut worst: f64 = 0.0;
    for (m, g) in [(3u64, (2i64, 1i64)), (5, (2, 1)), (3, (10, 1))] {
        let mut done = 0;
        while done < 2 {
            let n = rng.gen_range(2..=4usize);
            let x = random_binary(&mut rng, n);
            if exact_value(&x, m).is_zero() {
                continue;
            }
            done += 1;
            let mut oracle = oracle_with(g, Adversary::RandomUniformLogfactor, done, m);
            let eps = BigRational::new(1.into(), BigInt::from(1u64) << 24);
            let out = reduce_error(&x, &mut oracle, &eps).unwrap();
            let budget = query_budget_bound(
                m,
                n as u64,
                &BigRational::new(g.0.into(), g.1.into()),
                &eps,
            );
            worst = worst.max(out.log.queries as f64 / budget);
        }
    }
    assert!(worst <= 24.0, "query count exceeded c * budget: c = {worst}");
}

// ---------- CAIP ----------

#[test]
fn caip_decide_examples() {
    // alpha at a known representation with huge T -> close
    let m = 3u64;
    let rep = lattice_point(m, &[BigInt::from(2), BigInt::from(3)]);
    let b = rep.embed(160);
    let inst = CaipInstance::new(
        m,
        b.re.to_rational(),
        b.im.to_rational(),
        vec![BigInt::from(5), BigInt::from(5)],
        BigInt::from(1u64) << 40,
    )
    .unwrap();
    assert_eq!(caip_decide(&inst).unwrap(), CaipAnswer::Close);
    // alpha offset by 3/T from every lattice point -> far
    let t = BigInt::from(1000);
    let offset = BigRational::new(3.into(), t.clone());
    let inst_far = CaipInstance::new(
        m,
        b.re.to_rational() + offset,
        b.im.to_rational(),
        vec![BigInt::from(5), BigInt::from(5)],
        t.clone(),
    )
    .unwrap();
    // 3/1000 off the lattice while the separation at A=5 is ~1/21: check far
    assert_eq!(caip_decide(&inst_far).unwrap(), CaipAnswer::Far);
    // nearest point in the excluded gap (distance 1.2/T) -> promise violated
    let gap = BigRational::new(12.into(), &t * BigInt::from(10));
    let inst_gap = CaipInstance::new(
        m,
        b.re.to_rational() + gap,
        b.im.to_rational(),
        vec![BigInt::from(5), BigInt::from(5)],
        t,
    )
    .unwrap();
    assert!(matches!(caip_decide(&inst_gap), Err(Error::PromiseViolated)));
}

#[test]
fn caip_decide_shifted_bounds() {
    // bounds [U, L] via an algebraic base shift
    let m = 4u64;
    let rep = lattice_point(m, &[BigInt::from(-3), BigInt::from(7)]);
    let b = rep.embed(160);
    let base = lattice_point(m, &[BigInt::from(-5), BigInt::from(4)]);
    // shifted box: coefficients in [-5, 5] x [4, 10] relative bounds (10, 6)
    let inst = CaipInstance::new(
        m,
        b.re.to_rational(),
        b.im.to_rational(),
        vec![BigInt::from(10), BigInt::from(6)],
        BigInt::from(1u64) << 30,
    )
    .unwrap()
    .with_base(base)
    .unwrap();
    assert_eq!(caip_decide(&inst).unwrap(), CaipAnswer::Close);
}

#[test]
fn caip_search_roundtrip() {
    // 100 random representations, m in {3,4,5}, coefficients <= 50: exact
    // recovery within the query budget phi(m) * (ceil(log2 max L) + 2) + 1
    let mut rng = StdRng::seed_from_u64(39);
    for trial in 0..100 {
        let m = *[3u64, 4, 5].iter().nth(trial % 3).unwrap();
        let phi = totient(m) as usize;
        let coeffs: Vec<BigInt> =
            (0..phi).map(|_| BigInt::from(rng.gen_range(0i64..=50))).collect();
        let rep = lattice_point(m, &coeffs);
        let b = rep.embed(192);
        let a_bound = BigInt::from(50);
        let sep = separation_bound(&a_bound, m);
        let t = ceil_of_ratio(&(BigRational::from_integer(5.into()) / sep));
        let inst = CaipInstance::new(
            m,
            b.re.to_rational(),
            b.im.to_rational(),
            vec![BigInt::from(50); phi],
            t,
        )
        .unwrap();
        let (found, log) = caip_search(&inst).unwrap();
        assert_eq!(found.unwrap(), coeffs, "trial {trial}");
        let budget = phi as u64 * (50f64.log2().ceil() as u64 + 2) + 1;
        assert!(log.queries <= budget, "queries {} > budget {budget}", log.queries);
    }
}

#[test]
fn caip_search_far_returns_none() {
    let m = 3u64;
    let inst = CaipInstance::new(
        m,
        BigRational::new(1.into(), 3.into()),
        BigRational::new(1.into(), 7.into()),
        vec![BigInt::from(9), BigInt::from(9)],
        BigInt::from(1u64) << 35,
    )
    .unwrap();
    let (found, _) = caip_search(&inst).unwrap();
    assert!(found.is_none());
}

// ---------- end-to-end ----------

#[test]
fn recover_exact_oracle_equivalence() {
    // exact oracle: recover_exact equals the kernel representation
    let mut rng = StdRng::seed_from_u64(40);
    for m in [3u64, 5] {
        for _ in 0..4 {
            let n = rng.gen_range(1..=4usize);
            let x = random_binary(&mut rng, n);
            let mut oracle = oracle_with((1, 1), Adversary::Exact, 0, m);
            let out = recover_exact(&x, &mut oracle).unwrap();
            assert_eq!(out.representation, exact_value(&x, m));
        }
    }
    // identity: coefficient vector (1, 0, ..., 0)
    let mut oracle = oracle_with((1, 1), Adversary::Exact, 0, 5);
    let out = recover_exact(&MatrixZ::identity(3), &mut oracle).unwrap();
    assert_eq!(out.representation, CycInt::one(5));
}

#[test]
fn recover_exact_zero_soundness() {
    // recover_exact returns 0 iff Per_z = 0
    let mut e = vec![BigInt::one(); 9];
    for j in 0..3 {
        e[j * 3] = BigInt::zero();
    }
    e[0] = BigInt::zero();
    let mut collapsed = vec![BigInt::zero(); 9];
    collapsed[4] = BigInt::one();
    // row of zeros
    let zero_row = MatrixZ::new_int(Domain::Binary, 3, {
        let mut v = vec![BigInt::one(); 9];
        for j in 0..3 {
            v[j] = BigInt::zero();
        }
        v
    })
    .unwrap();
    let mut oracle = oracle_with((10, 1), Adversary::WorstCaseAlternating, 1, 3);
    let out = recover_exact(&zero_row, &mut oracle).unwrap();
    assert!(out.representation.is_zero());
}

#[test]
fn recover_exact_adversarial() {
    // g = 10, both adversaries: exact recovery every time
    let mut rng = StdRng::seed_from_u64(41);
    for adversary in [Adversary::RandomUniformLogfactor, Adversary::WorstCaseAlternating] {
        for trial in 0..3u64 {
            let n = rng.gen_range(2..=4usize);
            let x = random_binary(&mut rng, n);
            let mut oracle = oracle_with((10, 1), adversary, 100 + trial, 3);
            let out = recover_exact(&x, &mut oracle).unwrap();
            assert_eq!(out.representation, exact_value(&x, 3));
            // pre-CAIP additive error within 2^(-n^2)
            let bound = BigRational::new(1.into(), BigInt::from(1u64) << ((n * n) as u32));
            assert!(out.pre_caip.rad.to_rational() <= bound || out.representation.is_zero());
        }
    }
}

fn ceil_of_ratio(r: &BigRational) -> BigInt {
    r.ceil().to_integer()
}

use crate::cyclotomic::separation_bound;

#[test]
fn representation_invariance_under_phi_multiples() {
    // adding integer multiples of Phi_{p^k} to a representation never changes
    // the mod-p reduction used downstream (glue check between modules)
    let mut rng = StdRng::seed_from_u64(42);
    for _ in 0..50 {
        let m = 9u64;
        let coeffs: Vec<BigInt> = (0..12).map(|_| BigInt::from(rng.gen_range(-9i64..=9))).collect();
        let p1 = IntPoly::new(coeffs.clone());
        let r1 = reduce_mod_phi(&p1, m);
        let c = BigInt::from(rng.gen_range(-4i64..=4));
        let phim = crate::cyclotomic::cyclotomic_poly(m);
        let mut shifted = coeffs.clone();
        shifted.resize(shifted.len().max(phim.coeffs.len()), BigInt::zero());
        for (i, v) in phim.coeffs.iter().enumerate() {
            shifted[i] += v * &c;
        }
        let r2 = reduce_mod_phi(&IntPoly::new(shifted), m);
        assert_eq!(
            crate::reductions::per_mod_p_from_rep(&r1).unwrap(),
            crate::reductions::per_mod_p_from_rep(&r2).unwrap()
        );
    }
}
