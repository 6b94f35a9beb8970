//! Exact arithmetic in `Z[zeta_k]`, represented as integer polynomials in
//! `zeta` reduced modulo the k-th cyclotomic polynomial.

use num_bigint::BigInt;
use num_traits::{One, Zero};

/// Integer polynomial, lowest degree first.
type IntPoly = Vec<BigInt>;

fn trim(p: &mut IntPoly) {
    while p.len() > 1 && p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
}

/// Exact quotient of `num` by the monic polynomial `den`.
fn div_exact(num: &IntPoly, den: &IntPoly) -> IntPoly {
    let dn = den.len() - 1;
    let mut rem = num.clone();
    let mut quot = vec![BigInt::zero(); rem.len().saturating_sub(dn)];
    for i in (0..quot.len()).rev() {
        let c = rem[i + dn].clone();
        if c.is_zero() {
            continue;
        }
        for (j, d) in den.iter().enumerate() {
            rem[i + j] -= &c * d;
        }
        quot[i] = c;
    }
    debug_assert!(rem.iter().all(Zero::is_zero), "division not exact");
    trim(&mut quot);
    quot
}

/// `Phi_k`, lowest degree first.
pub(crate) fn cyclotomic_polynomial(k: usize) -> IntPoly {
    assert!(k >= 1);
    let mut num = vec![BigInt::zero(); k + 1];
    num[0] = -BigInt::one();
    num[k] = BigInt::one();
    for d in 1..k {
        if k % d == 0 {
            num = div_exact(&num, &cyclotomic_polynomial(d));
        }
    }
    num
}

/// The ring `Z[x] / Phi_k(x)`; elements are coefficient vectors of length
/// `deg Phi_k`.
#[derive(Debug, Clone)]
pub(crate) struct CyclotomicRing {
    k: usize,
    /// Monic `Phi_k`, lowest degree first.
    modulus: IntPoly,
}

impl CyclotomicRing {
    pub(crate) fn new(k: usize) -> Self {
        CyclotomicRing {
            k,
            modulus: cyclotomic_polynomial(k),
        }
    }

    /// `deg Phi_k`.
    pub(crate) fn dim(&self) -> usize {
        self.modulus.len() - 1
    }

    #[cfg(test)]
    pub(crate) fn from_int(&self, c: BigInt) -> IntPoly {
        let mut v = vec![BigInt::zero(); self.dim()];
        v[0] = c;
        v
    }

    /// Reduces a polynomial of any length modulo `Phi_k`.
    pub(crate) fn reduce(&self, mut v: IntPoly) -> IntPoly {
        let d = self.dim();
        for i in (d..v.len()).rev() {
            let c = std::mem::take(&mut v[i]);
            if c.is_zero() {
                continue;
            }
            // x^d = -sum_{j<d} m_j x^j
            for j in 0..d {
                v[i - d + j] -= &c * &self.modulus[j];
            }
        }
        v.resize(d, BigInt::zero());
        v
    }

    /// `zeta^e`.
    pub(crate) fn zeta_pow(&self, e: usize) -> IntPoly {
        let e = e % self.k;
        let mut v = vec![BigInt::zero(); e + 1];
        v[e] = BigInt::one();
        self.reduce(v)
    }

    /// `acc += a * b` without reduction; `acc` has length `2 dim - 1`.
    pub(crate) fn mul_acc(&self, a: &[BigInt], b: &[BigInt], acc: &mut [BigInt]) {
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                if !y.is_zero() {
                    acc[i + j] += x * y;
                }
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn mul(&self, a: &[BigInt], b: &[BigInt]) -> IntPoly {
        let mut acc = vec![BigInt::zero(); 2 * self.dim() - 1];
        self.mul_acc(a, b, &mut acc);
        self.reduce(acc)
    }

    /// The rational integer an element equals, if it lies in `Z`.
    pub(crate) fn as_integer(v: &[BigInt]) -> Option<BigInt> {
        if v[1..].iter().all(Zero::is_zero) {
            Some(v[0].clone())
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> IntPoly {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn known_cyclotomics() {
        assert_eq!(cyclotomic_polynomial(1), ints(&[-1, 1]));
        assert_eq!(cyclotomic_polynomial(2), ints(&[1, 1]));
        assert_eq!(cyclotomic_polynomial(3), ints(&[1, 1, 1]));
        assert_eq!(cyclotomic_polynomial(4), ints(&[1, 0, 1]));
        assert_eq!(cyclotomic_polynomial(6), ints(&[1, -1, 1]));
        assert_eq!(cyclotomic_polynomial(12), ints(&[1, 0, -1, 0, 1]));
    }

    #[test]
    fn roots_of_unity_multiply() {
        for k in 1..=12 {
            let r = CyclotomicRing::new(k);
            let z = r.zeta_pow(1);
            let mut acc = r.from_int(BigInt::one());
            for _ in 0..k {
                acc = r.mul(&acc, &z);
            }
            assert_eq!(CyclotomicRing::as_integer(&acc), Some(BigInt::one()), "k = {k}");
            // sum of all k-th roots vanishes for k > 1
            let mut sum = r.from_int(BigInt::zero());
            for m in 0..k {
                for (s, x) in sum.iter_mut().zip(r.zeta_pow(m)) {
                    *s += x;
                }
            }
            let expect = if k == 1 { 1 } else { 0 };
            assert_eq!(CyclotomicRing::as_integer(&sum), Some(BigInt::from(expect)));
        }
    }
}
