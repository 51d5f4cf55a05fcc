//! Worst-case reduction maps and root-of-unity interpolation: recovering
//! Per(X) mod p from a zeta_{p^k}-permanent representation, exact recovery
//! when phi(m) exceeds the polynomial degree, and reconstruction of the
//! inversion polynomial from (possibly noisy) evaluations at shifted roots
//! of unity.

use crate::ball::{roots_of_unity, ComplexBall};
use crate::cyclotomic::{prime_power, totient, CycInt, CycRat};
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::zperm::{degree_bound, horner_ball, Domain, Entries, MatrixZ};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// A residue class value mod a prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Residue {
    pub value: u64,
    pub p: u64,
}

/// Per(X) mod p from any representation of Per_{zeta_m}(X) with m = p^k:
/// the sum of the coefficients taken mod p. Rejects m = 2^k, where the
/// congruence holds but carries no hardness content.
pub fn per_mod_p_from_rep(rep: &CycInt) -> Result<Residue> {
    let m = rep.order();
    let (p, _k) = prime_power(m).ok_or(Error::NotPrimePower(m))?;
    if p == 2 {
        return Err(Error::PowerOfTwoModulus(m));
    }
    Ok(Residue { value: rep.coefficient_sum_mod(p), p })
}

/// Per(X) mod 3 from the degree-2 coefficient tuple at a cube root of unity:
/// the real part gives (2*A0 - A1 - A2)/2, and 2^{-1} = 2 mod 3.
pub fn cube_root_real_part(a0: &BigInt, a1: &BigInt, a2: &BigInt) -> Residue {
    let three = BigInt::from(3);
    let t = (BigInt::from(2) * a0 - a1 - a2).mod_floor(&three);
    let value = (BigInt::from(2) * t).mod_floor(&three);
    Residue { value: value.try_into().unwrap_or(0), p: 3 }
}

/// When phi(m) >= C(n,2) + 1 the canonical coefficients are the inversion
/// counts themselves; returns (Per(X), recovered A vector).
pub fn per_from_highdeg(rep: &CycInt, n: usize) -> Result<(BigInt, Vec<BigInt>)> {
    let m = rep.order();
    let phi = totient(m) as usize;
    let d = degree_bound(n);
    if phi < d + 1 {
        return Err(Error::DegreeTooLow { phi, degree: d });
    }
    let coeffs = rep.coeffs();
    let a: Vec<BigInt> = coeffs[..=d].to_vec();
    let sum: BigInt = coeffs.iter().sum();
    Ok((sum, a))
}

/// The d+1 equally spaced interpolation nodes z_i = e^(2 pi i r) * zeta_{d+1}^(i-1)
/// on the unit circle, for rational r in (0, 1/(d+1)). All nodes are roots of
/// unity of order L = lcm(denominator(r), d+1), so an exact evaluation path
/// through Q(zeta_L) exists alongside the ball path.
#[derive(Debug, Clone)]
pub struct InterpNodes {
    pub d: usize,
    pub r: BigRational,
    /// common root order L
    pub order: u64,
    /// node i is zeta_L^(exponents[i])
    pub exponents: Vec<u64>,
}

impl InterpNodes {
    pub fn new(d: usize, r: BigRational) -> Result<Self> {
        let dp1 = BigRational::new(BigInt::one(), BigInt::from(d as i64 + 1));
        if r <= BigRational::zero() || r >= dp1 {
            return Err(Error::InvalidInput(format!(
                "r = {r} outside the legal interval (0, 1/(d+1))"
            )));
        }
        let b: u64 = r.denom().try_into().map_err(|_| {
            Error::InvalidInput("node rotation denominator too large".into())
        })?;
        let a: u64 = r.numer().try_into().map_err(|_| {
            Error::InvalidInput("node rotation numerator too large".into())
        })?;
        let dp1 = d as u64 + 1;
        let order = b.lcm(&dp1);
        let rot = a * (order / b) % order;
        let step = order / dp1;
        let exponents = (0..dp1).map(|i| (rot + i * step) % order).collect();
        Ok(InterpNodes { d, r, order, exponents })
    }

    /// Midpoint of the legal interval: r = 1/(2(d+1)).
    pub fn default_rotation(d: usize) -> Result<Self> {
        InterpNodes::new(d, BigRational::new(BigInt::one(), BigInt::from(2 * (d as i64 + 1))))
    }

    pub fn nodes_ball(&self, prec: u64) -> Vec<ComplexBall> {
        let roots = roots_of_unity(self.order, prec);
        self.exponents.iter().map(|&e| roots[e as usize].clone()).collect()
    }

    pub fn nodes_exact(&self) -> Vec<CycRat> {
        self.exponents.iter().map(|&e| CycRat::root_power(self.order, e)).collect()
    }

    /// Solve V c = y using the unitary structure: V = F * Lambda with F the
    /// DFT matrix on zeta_{d+1} and Lambda = diag(e^(2 pi i r j)), so
    /// c_j = e^(-2 pi i r j) / (d+1) * sum_i zeta_{d+1}^(-(i-1) j) y_i.
    pub fn solve_ball(&self, values: &[ComplexBall], prec: u64) -> Vec<ComplexBall> {
        assert_eq!(values.len(), self.d + 1);
        let dp1 = self.d as u64 + 1;
        let roots = roots_of_unity(self.order, prec);
        let step = self.order / dp1;
        let rot = self.exponents[0];
        let inv_dp1 = BigRational::new(BigInt::one(), BigInt::from(dp1));
        (0..dp1)
            .map(|j| {
                let mut acc = ComplexBall::zero();
                for (i, y) in values.iter().enumerate() {
                    // zeta_{d+1}^{-(i) j} = zeta_order^{-(i * step) j}
                    let e = (self.order - (i as u64 * step % self.order)) % self.order;
                    let w = &roots[(e * j % self.order) as usize];
                    acc = acc.add(&y.mul(w, prec), prec);
                }
                let e_rot = (self.order - rot % self.order) % self.order;
                let twist = &roots[(e_rot * j % self.order) as usize];
                acc.mul(twist, prec).scale_rational(&inv_dp1, prec)
            })
            .collect()
    }

    /// Exact counterpart of `solve_ball` over Q(zeta_L).
    pub fn solve_exact(&self, values: &[CycRat]) -> Result<Vec<CycRat>> {
        assert_eq!(values.len(), self.d + 1);
        let dp1 = self.d as u64 + 1;
        let step = self.order / dp1;
        let rot = self.exponents[0];
        let inv_dp1 = BigRational::new(BigInt::one(), BigInt::from(dp1));
        let mut out = Vec::with_capacity(self.d + 1);
        for j in 0..dp1 {
            let mut acc = CycRat::zero(self.order);
            for (i, y) in values.iter().enumerate() {
                let e = (self.order - (i as u64 * step % self.order)) % self.order;
                let w = CycRat::root_power(self.order, e * j % self.order);
                acc = acc.add(&y.mul(&w)?)?;
            }
            let e_rot = (self.order - rot % self.order) % self.order;
            let twist = CycRat::root_power(self.order, e_rot * j % self.order);
            out.push(acc.mul(&twist)?.scale(&inv_dp1));
        }
        Ok(out)
    }
}

/// General Vandermonde solve by Gaussian elimination on balls. Fails with
/// SingularSystem when no pivot is bounded away from zero at the working
/// resolution. For InterpNodes sets use `InterpNodes::solve_ball`, which
/// exploits the unitary DFT structure instead of elimination.
pub fn vandermonde_solve(
    nodes: &[ComplexBall],
    values: &[ComplexBall],
    prec: u64,
) -> Result<Vec<ComplexBall>> {
    let n = nodes.len();
    assert_eq!(values.len(), n);
    // build V and the augmented column
    let mut a: Vec<Vec<ComplexBall>> = Vec::with_capacity(n);
    for node in nodes {
        let mut row = Vec::with_capacity(n + 1);
        let mut pw = ComplexBall::one();
        for _ in 0..n {
            row.push(pw.clone());
            pw = pw.mul(node, prec);
        }
        a.push(row);
    }
    for (i, v) in values.iter().enumerate() {
        a[i].push(v.clone());
    }
    // elimination with column pivoting by largest certified lower bound
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                a[i][col].abs_lb().cmp_val(&a[j][col].abs_lb())
            })
            .unwrap();
        if a[pivot][col].abs_lb().is_zero() {
            return Err(Error::SingularSystem);
        }
        a.swap(col, pivot);
        for i in (col + 1)..n {
            if a[i][col].abs_ub().is_zero() {
                continue;
            }
            let factor = a[i][col].div(&a[col][col], prec).ok_or(Error::SingularSystem)?;
            for j in col..=n {
                let t = factor.mul(&a[col][j], prec);
                a[i][j] = a[i][j].sub(&t, prec);
            }
        }
    }
    // back substitution
    let mut c = vec![ComplexBall::zero(); n];
    for i in (0..n).rev() {
        let mut acc = a[i][n].clone();
        for j in (i + 1)..n {
            let t = a[i][j].mul(&c[j], prec);
            acc = acc.sub(&t, prec);
        }
        c[i] = acc.div(&a[i][i], prec).ok_or(Error::SingularSystem)?;
    }
    Ok(c)
}

/// Rational upper bound on sqrt(d+1) * eps.
pub fn interp_error_bound(d: usize, eps: &BigRational) -> BigRational {
    let s = Dyadic::from_int(d as i64 + 1).sqrt_ub();
    s.to_rational() * eps
}

/// Estimate f(z*) from d+1 evaluations at the interpolation nodes, each within
/// additive error eps of the true values. The returned ball's radius combines
/// the computational radius with the certified (d+1)*||V^{-1}||*eps
/// = sqrt(d+1)*eps propagation bound, so it contains the true f(z*) whenever
/// the noise model holds and |z*| <= 1.
pub fn interpolate_per_additive(
    nodes: &InterpNodes,
    evals: &[ComplexBall],
    eps: &BigRational,
    z_star: &ComplexBall,
    prec: u64,
) -> Result<ComplexBall> {
    if eps.is_negative() {
        return Err(Error::InvalidInput("negative noise bound".into()));
    }
    if nodes.d == 0 {
        // degree zero: the single evaluation is the answer
        let mut b = evals[0].clone();
        let (extra, ee) = Dyadic::from_rational(eps, 24);
        b.rad = b.rad.add(&extra).add(&ee);
        return Ok(ComplexBall::new(b.re, b.im, b.rad));
    }
    let c = nodes.solve_ball(evals, prec);
    let est = horner_ball(&c, z_star, prec);
    let bound = interp_error_bound(nodes.d, eps);
    let (extra, ee) = Dyadic::from_rational(&bound, 24);
    Ok(ComplexBall::new(est.re, est.im, est.rad.add(&extra).add(&ee)))
}

/// Estimate f(1) = Per(X) from evaluations carrying multiplicative error eps;
/// valid for matrices with nonnegative entries (so |f(z)| <= f(1) on the
/// circle). Returns the estimate and the certified multiplicative error bound
/// sqrt(d+1)*eps.
pub fn interpolate_per_multiplicative(
    x: &MatrixZ,
    nodes: &InterpNodes,
    evals: &[ComplexBall],
    eps: &BigRational,
    prec: u64,
) -> Result<(ComplexBall, BigRational)> {
    check_nonnegative(x)?;
    let c = nodes.solve_ball(evals, prec);
    // f(1) = sum of coefficients
    let mut est = ComplexBall::zero();
    for ci in &c {
        est = est.add(ci, prec);
    }
    Ok((est, interp_error_bound(nodes.d, eps)))
}

pub(crate) fn check_nonnegative(x: &MatrixZ) -> Result<()> {
    let ok = match x.entries() {
        Entries::Int(v) => v.iter().all(|c| !c.is_negative()),
        Entries::Gauss(v) => v.iter().all(|g| !g.re.is_negative() && g.im.is_zero()),
        Entries::Float(v) => v.iter().all(|&(r, i)| r >= 0.0 && i == 0.0),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::NegativeEntries)
    }
}

/// Transfer an approximation of Per_z(X*) to one of Per_{z*}(X) by complex
/// conjugation; both multiplicative and additive error bounds are preserved
/// (the radius is carried over unchanged).
pub fn conjugate_transfer(approx: &ComplexBall) -> ComplexBall {
    approx.conj()
}

/// Domain check helper shared by the CLI: is this matrix binary?
pub fn require_binary(x: &MatrixZ) -> Result<()> {
    if x.domain() == Domain::Binary {
        Ok(())
    } else {
        Err(Error::InvalidInput("pipeline requires a binary matrix".into()))
    }
}
