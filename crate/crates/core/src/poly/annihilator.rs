//! Homogeneous integer polynomials vanishing at `(t_1^k, ..., t_n^k, (t_1 + ... + t_n)^k)`.
//!
//! Starting from `G = y - sum t_j`, each variable in turn is replaced by its
//! conjugates: `G <- prod_m G(..., zeta^m t_j, ...)` with `zeta` a primitive
//! k-th root of unity, computed exactly in `Z[zeta]`. Every intermediate
//! product is Galois invariant, so its coefficients must come out rational;
//! this is checked, not assumed. The final `G` is invariant under
//! `t_j -> zeta t_j` and `y -> zeta y`, hence a polynomial in `t_j^k` and `y^k`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cyclotomic::CyclotomicRing;
use super::multipoly::MultiPoly;
use crate::error::PolyError;

pub const DEFAULT_TERM_CAP: usize = 1_000_000;

/// Upper bound on the term count: monomials of degree `k^(n-1)` in `n + 1` variables.
pub fn estimated_terms(n: usize, k: usize) -> usize {
    let d = (k as f64).powi(n as i32 - 1);
    // C(d + n, n)
    let mut acc = 1.0f64;
    for i in 1..=n {
        acc *= (d + i as f64) / i as f64;
    }
    if acc >= usize::MAX as f64 {
        usize::MAX
    } else {
        acc.round() as usize
    }
}

/// Annihilator with the default term cap.
pub fn annihilator(n: usize, k: usize) -> Result<MultiPoly<BigRational>, PolyError> {
    annihilator_with_cap(n, k, DEFAULT_TERM_CAP)
}

type ZetaPoly = BTreeMap<Vec<u32>, Vec<BigInt>>;

pub fn annihilator_with_cap(n: usize, k: usize, cap: usize) -> Result<MultiPoly<BigRational>, PolyError> {
    if n == 0 || k == 0 {
        return Err(PolyError::Argument(format!("need n >= 1 and k >= 1, got n = {n}, k = {k}")));
    }
    let estimated = estimated_terms(n, k);
    if estimated > cap {
        return Err(PolyError::Size { cap, estimated });
    }
    let ring = CyclotomicRing::new(k);
    let nv = n + 1;

    // y - sum t_j; variables t_1..t_n, y
    let mut g: BTreeMap<Vec<u32>, BigInt> = BTreeMap::new();
    let mut ey = vec![0; nv];
    ey[n] = 1;
    g.insert(ey, BigInt::one());
    for j in 0..n {
        let mut e = vec![0; nv];
        e[j] = 1;
        g.insert(e, -BigInt::one());
    }

    for j in 0..n {
        let conjugate = |m: usize| -> ZetaPoly {
            g.iter()
                .map(|(e, c)| {
                    let z = ring.zeta_pow(m * e[j] as usize);
                    (e.clone(), z.into_iter().map(|x| x * c).collect())
                })
                .collect()
        };
        let mut prod = conjugate(0);
        for m in 1..k {
            prod = multiply(&ring, &prod, &conjugate(m));
        }
        let mut next = BTreeMap::new();
        for (e, c) in prod {
            let v = CyclotomicRing::as_integer(&c).ok_or_else(|| {
                PolyError::Argument(format!("conjugate product has irrational coefficient at {e:?}"))
            })?;
            if !v.is_zero() {
                next.insert(e, v);
            }
        }
        g = next;
    }

    let kk = k as u32;
    let mut terms = Vec::with_capacity(g.len());
    for (e, c) in g {
        if e.iter().any(|&x| x % kk != 0) {
            return Err(PolyError::Argument(format!("exponent {e:?} not divisible by {k}")));
        }
        terms.push((e.iter().map(|&x| x / kk).collect(), BigRational::from_integer(c)));
    }
    MultiPoly::from_terms(nv, terms)
}

fn multiply(ring: &CyclotomicRing, a: &ZetaPoly, b: &ZetaPoly) -> ZetaPoly {
    let width = 2 * ring.dim() - 1;
    let mut acc: BTreeMap<Vec<u32>, Vec<BigInt>> = BTreeMap::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            let slot = acc.entry(e).or_insert_with(|| vec![BigInt::zero(); width]);
            ring.mul_acc(ca, cb, slot);
        }
    }
    acc.into_iter()
        .map(|(e, v)| (e, ring.reduce(v)))
        .filter(|(_, v)| v.iter().any(|x| !x.is_zero()))
        .collect()
}

/// Outcome of an exact annihilation check.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnihilationReport {
    pub samples: usize,
    /// Largest `|P(t_1^k, ..., (sum t)^k)|` over the samples.
    pub max_abs_exact: BigRational,
    /// Index of the first sample with a nonzero value.
    pub first_failure: Option<usize>,
    pub pass: bool,
}

fn random_rational(rng: &mut ChaCha8Rng) -> BigRational {
    let n: i64 = rng.gen_range(-60..=60);
    let d: i64 = rng.gen_range(1..=25);
    BigRational::new(n.into(), d.into())
}

/// Builds `annihilator(n, k)` and checks it on `samples` random rational points.
pub fn verify_annihilation(n: usize, k: usize, samples: usize, seed: u64) -> Result<AnnihilationReport, PolyError> {
    let p = annihilator(n, k)?;
    verify_polynomial(&p, k, samples, seed)
}

/// Checks `p(t_1^k, ..., t_n^k, (sum t_j)^k) = 0` exactly at random rationals.
pub fn verify_polynomial(
    p: &MultiPoly<BigRational>,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<AnnihilationReport, PolyError> {
    if p.nvars() < 2 {
        return Err(PolyError::Argument("need at least one root variable and s".into()));
    }
    let n = p.nvars() - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_abs = BigRational::zero();
    let mut first_failure = None;
    let kk = k as i32;
    for i in 0..samples {
        let t: Vec<BigRational> = (0..n).map(|_| random_rational(&mut rng)).collect();
        let sum = t.iter().fold(BigRational::zero(), |a, b| a + b);
        let mut point: Vec<BigRational> = t.iter().map(|x| num_traits::pow::pow(x.clone(), kk as usize)).collect();
        point.push(num_traits::pow::pow(sum, kk as usize));
        let v = p.eval(&point)?;
        let a = if v < BigRational::zero() { -v } else { v };
        if !a.is_zero() && first_failure.is_none() {
            first_failure = Some(i);
        }
        if a > max_abs {
            max_abs = a;
        }
    }
    Ok(AnnihilationReport {
        samples,
        pass: first_failure.is_none(),
        max_abs_exact: max_abs,
        first_failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(c: i64) -> BigRational {
        BigRational::from_integer(c.into())
    }

    #[test]
    fn single_root_is_linear() {
        for k in 1..=5 {
            let p = annihilator(1, k).unwrap();
            let expect = MultiPoly::from_terms(2, vec![(vec![0, 1], int(1)), (vec![1, 0], int(-1))]).unwrap();
            assert_eq!(p, expect, "k = {k}");
        }
    }

    #[test]
    fn two_square_roots() {
        let p = annihilator(2, 2).unwrap();
        // s^2 - 2 s (t1 + t2) + (t1 - t2)^2
        let expect = MultiPoly::from_terms(
            3,
            vec![
                (vec![0, 0, 2], int(1)),
                (vec![1, 0, 1], int(-2)),
                (vec![0, 1, 1], int(-2)),
                (vec![2, 0, 0], int(1)),
                (vec![1, 1, 0], int(-2)),
                (vec![0, 2, 0], int(1)),
            ],
        )
        .unwrap();
        assert_eq!(p, expect);
        assert_eq!(p.eval(&[int(1), int(4), int(9)]).unwrap(), int(0));
    }

    #[test]
    fn structure() {
        for (n, k) in [(2, 3), (3, 2), (2, 4), (3, 3)] {
            let p = annihilator(n, k).unwrap();
            let d = (k as u32).pow(n as u32 - 1);
            assert!(p.is_homogeneous());
            assert_eq!(p.total_degree(), Some(d));
            for v in 0..=n {
                assert_eq!(p.degree_in(v), Some(d), "n={n} k={k} var {v}");
            }
            let lead = p.leading_coefficient_in(n);
            assert_eq!(lead, MultiPoly::constant(n + 1, int(1)));
            assert!(p.len() <= estimated_terms(n, k));
        }
    }

    #[test]
    fn verification_and_corruption() {
        let r = verify_annihilation(2, 3, 30, 7).unwrap();
        assert!(r.pass);
        assert!(r.max_abs_exact.is_zero());
        let mut p = annihilator(2, 2).unwrap();
        p.add_term(vec![2, 0, 0], int(1));
        let bad = verify_polynomial(&p, 2, 10, 1).unwrap();
        assert!(!bad.pass);
        assert_eq!(bad.first_failure, Some(0));
    }

    #[test]
    fn size_cap() {
        assert!(matches!(annihilator_with_cap(3, 3, 10), Err(PolyError::Size { cap: 10, .. })));
        assert!(matches!(annihilator(8, 7), Err(PolyError::Size { .. })));
        assert!(matches!(annihilator(0, 2), Err(PolyError::Argument(_))));
    }
}
