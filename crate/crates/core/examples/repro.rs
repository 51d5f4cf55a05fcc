// temporary repro
use num_bigint::BigInt;
use num_rational::BigRational;
use qperm_core::recovery::*;
use qperm_core::zperm::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn random_binary(rng: &mut StdRng, n: usize) -> MatrixZ {
    let e: Vec<BigInt> = (0..n * n).map(|_| BigInt::from(rng.gen_range(0..=1))).collect();
    MatrixZ::new_int(Domain::Binary, n, e).unwrap()
}

fn exact_value(x: &MatrixZ, m: u64) -> qperm_core::cyclotomic::CycInt {
    let p = invpoly_subset_dp(x, &KernelCaps::default()).unwrap();
    specialize_at_root(&p, RootOfUnity::new(m, 1).unwrap()).as_cyc_int().unwrap().clone()
}

fn main() {
    // part 1: identity(5) chain with g=2 random adversary
    for x in [MatrixZ::identity(5), MatrixZ::all_ones(5)] {
        let cfg = OracleConfig::new(BigRational::new(2.into(), 1.into()), Adversary::RandomUniformLogfactor, 5).unwrap();
        let mut oracle = NormSqOracle::new(cfg, 3, 1, KernelCaps::default());
        match find_submatrix_chain(&x, &mut oracle) {
            Ok(c) => println!("chain ok len {}", c.len()),
            Err(e) => println!("chain ERR {e}"),
        }
    }
    // part 2: reduce m=5 n=5 instance
    let mut rng = StdRng::seed_from_u64(35);
    for m in [3u64, 5] {
        let mut done = 0;
        while done < 4 {
            let n = rng.gen_range(2..=5);
            let x = random_binary(&mut rng, n);
            let truth = exact_value(&x, m);
            if m == 5 && n == 5 && !truth.is_zero() {
                // dig into the chain and first refine
                let cfg = OracleConfig::exact();
                let mut oracle = NormSqOracle::new(cfg, m, 1, KernelCaps::default());
                let chain = find_submatrix_chain(&x, &mut oracle).unwrap();
                println!("chain rows: {:?}", chain.iter().map(|s| s.deleted_row).collect::<Vec<_>>());
                for i in 0..chain.len()-1 {
                    let target = BigRational::new(1.into(), BigInt::from(1u64) << 45);
                    match refine_ratio(&mut oracle, &chain[i].matrix, chain[i+1].deleted_row, &chain[i+1].matrix, &target) {
                        Ok(est) => println!("ratio {i} ok center=({}, {}) radius={}", est.center.re.to_string(), est.center.im.to_string(), est.radius.to_string()),
                        Err(e) => {
                            println!("ratio {i} ERR {e}");
                            println!("parent per: {:?}", exact_value(&chain[i].matrix, m));
                            println!("child per: {:?}", exact_value(&chain[i+1].matrix, m));
                            return;
                        }
                    }
                }
                return;
            }
            if !truth.is_zero() { done += 1; }
        }
    }
}
