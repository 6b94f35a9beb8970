use std::collections::BTreeMap;
use std::fmt::{Debug, Write as _};
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::PolyError;

/// Coefficient ring of a [`MultiPoly`].
pub trait Coeff:
    Clone + PartialEq + Debug + Zero + One + Neg<Output = Self> + Sub<Output = Self> + Mul<Output = Self>
{
}

impl<C> Coeff for C where
    C: Clone + PartialEq + Debug + Zero + One + Neg<Output = C> + Sub<Output = C> + Mul<Output = C>
{
}

/// Sparse polynomial in a fixed number of variables with nonnegative integer
/// exponents. Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiPoly<C> {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, C>,
}

impl<C: Coeff> MultiPoly<C> {
    pub fn zero(nvars: usize) -> Self {
        MultiPoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    /// The variable `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars, "variable {i} of {nvars}");
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(e, C::one());
        p
    }

    /// Sums duplicate exponents and drops zeros.
    pub fn from_terms<I: IntoIterator<Item = (Vec<u32>, C)>>(nvars: usize, terms: I) -> Result<Self, PolyError> {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(PolyError::Dimension {
                    expected: nvars,
                    got: e.len(),
                });
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    pub(crate) fn add_term(&mut self, e: Vec<u32>, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&e) {
            Some(v) => {
                let s = v.clone() + c;
                if s.is_zero() {
                    self.terms.remove(&e);
                } else {
                    *v = s;
                }
            }
            None => {
                self.terms.insert(e, c);
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending lexicographic exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &C)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), c))
    }

    pub fn coefficient(&self, e: &[u32]) -> C {
        self.terms.get(e).cloned().unwrap_or_else(C::zero)
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut p = Self::zero(self.nvars);
        for (e, v) in &self.terms {
            p.add_term(e.clone(), v.clone() * c.clone());
        }
        p
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::constant(self.nvars, C::one());
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// `None` for the zero polynomial.
    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    /// Degree in variable `var`; `None` for the zero polynomial.
    pub fn degree_in(&self, var: usize) -> Option<u32> {
        self.terms.keys().map(|e| e[var]).max()
    }

    /// Every term has the same total degree.
    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(|e| e.iter().sum::<u32>());
        match degs.next() {
            None => true,
            Some(d) => degs.all(|x| x == d),
        }
    }

    /// Coefficient of the highest power of `var`, as a polynomial in the rest.
    pub fn leading_coefficient_in(&self, var: usize) -> Self {
        let mut p = Self::zero(self.nvars);
        if let Some(d) = self.degree_in(var) {
            for (e, c) in &self.terms {
                if e[var] == d {
                    let mut e2 = e.clone();
                    e2[var] = 0;
                    p.add_term(e2, c.clone());
                }
            }
        }
        p
    }

    /// Value at `point`, using cached powers of each coordinate.
    pub fn eval(&self, point: &[C]) -> Result<C, PolyError> {
        if point.len() != self.nvars {
            return Err(PolyError::Dimension {
                expected: self.nvars,
                got: point.len(),
            });
        }
        let mut powers: Vec<Vec<C>> = Vec::with_capacity(self.nvars);
        for (i, x) in point.iter().enumerate() {
            let d = self.degree_in(i).unwrap_or(0) as usize;
            let mut row = Vec::with_capacity(d + 1);
            row.push(C::one());
            for k in 1..=d {
                let next = row[k - 1].clone() * x.clone();
                row.push(next);
            }
            powers.push(row);
        }
        let mut acc = C::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t = t * powers[i][k as usize].clone();
                }
            }
            acc = acc + t;
        }
        Ok(acc)
    }
}

impl<C: Coeff> Add for &MultiPoly<C> {
    type Output = MultiPoly<C>;
    fn add(self, rhs: Self) -> MultiPoly<C> {
        assert_eq!(self.nvars, rhs.nvars);
        let mut p = self.clone();
        for (e, c) in &rhs.terms {
            p.add_term(e.clone(), c.clone());
        }
        p
    }
}

impl<C: Coeff> Sub for &MultiPoly<C> {
    type Output = MultiPoly<C>;
    fn sub(self, rhs: Self) -> MultiPoly<C> {
        assert_eq!(self.nvars, rhs.nvars);
        let mut p = self.clone();
        for (e, c) in &rhs.terms {
            p.add_term(e.clone(), -c.clone());
        }
        p
    }
}

impl<C: Coeff> Neg for &MultiPoly<C> {
    type Output = MultiPoly<C>;
    fn neg(self) -> MultiPoly<C> {
        MultiPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c.clone())).collect(),
        }
    }
}

impl<C: Coeff> Mul for &MultiPoly<C> {
    type Output = MultiPoly<C>;
    fn mul(self, rhs: Self) -> MultiPoly<C> {
        assert_eq!(self.nvars, rhs.nvars);
        let mut p = MultiPoly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                p.add_term(e, ca.clone() * cb.clone());
            }
        }
        p
    }
}

fn parse_rational(s: &str) -> Option<BigRational> {
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.parse().ok()?;
            let d: BigInt = d.parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(BigRational::new(n, d))
        }
        None => Some(BigRational::from_integer(s.parse().ok()?)),
    }
}

impl MultiPoly<BigRational> {
    /// One line `p/q e_1 ... e_n` per term.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (e, c) in &self.terms {
            let _ = write!(s, "{}/{}", c.numer(), c.denom());
            for x in e {
                let _ = write!(s, " {x}");
            }
            s.push('\n');
        }
        s
    }

    /// Inverse of [`Self::to_text`]; blank lines and `#` comments are skipped.
    pub fn from_text(nvars: usize, text: &str) -> Result<Self, PolyError> {
        let mut p = Self::zero(nvars);
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let c = parts
                .next()
                .and_then(parse_rational)
                .ok_or_else(|| PolyError::Parse {
                    line: i + 1,
                    msg: "bad coefficient".into(),
                })?;
            let e: Vec<u32> = parts
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|err| PolyError::Parse {
                    line: i + 1,
                    msg: format!("bad exponent: {err}"),
                })?;
            if e.len() != nvars {
                return Err(PolyError::Parse {
                    line: i + 1,
                    msg: format!("expected {nvars} exponents, found {}", e.len()),
                });
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    /// Floating point value.
    pub fn eval_f64(&self, point: &[f64]) -> Result<f64, PolyError> {
        if point.len() != self.nvars {
            return Err(PolyError::Dimension {
                expected: self.nvars,
                got: point.len(),
            });
        }
        Ok(self
            .terms
            .iter()
            .map(|(e, c)| {
                let cf = c.to_f64().unwrap_or(f64::NAN);
                e.iter().zip(point).fold(cf, |acc, (&k, &x)| acc * x.powi(k as i32))
            })
            .sum())
    }
}

/// Value of `p` at `point`.
pub fn eval_multipoly<C: Coeff>(p: &MultiPoly<C>, point: &[C]) -> Result<C, PolyError> {
    p.eval(point)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn arithmetic() {
        let x = MultiPoly::<BigRational>::var(2, 0);
        let y = MultiPoly::<BigRational>::var(2, 1);
        let s = &x + &y;
        let sq = s.pow(2);
        assert_eq!(sq.len(), 3);
        assert_eq!(sq.coefficient(&[1, 1]), q(2, 1));
        let diff = &sq - &sq;
        assert!(diff.is_zero());
        assert_eq!((&x * &y).total_degree(), Some(2));
        assert!(sq.is_homogeneous());
        assert!(!(&sq + &x).is_homogeneous());
    }

    #[test]
    fn evaluation() {
        let z = MultiPoly::<BigRational>::zero(3);
        assert_eq!(z.eval(&[q(1, 2), q(3, 1), q(-1, 5)]).unwrap(), q(0, 1));
        let p = &MultiPoly::<BigRational>::var(2, 1) - &MultiPoly::var(2, 0);
        assert_eq!(eval_multipoly(&p, &[q(5, 1), q(5, 1)]).unwrap(), q(0, 1));
        assert!(matches!(p.eval(&[q(1, 1)]), Err(PolyError::Dimension { expected: 2, got: 1 })));
        let f: MultiPoly<f64> = MultiPoly::from_terms(1, vec![(vec![2], 1.5), (vec![0], -1.0)]).unwrap();
        assert_eq!(f.eval(&[2.0]).unwrap(), 5.0);
    }

    #[test]
    fn text_round_trip() {
        let p = MultiPoly::from_terms(2, vec![(vec![2, 0], q(-3, 4)), (vec![0, 1], q(7, 1))]).unwrap();
        let t = p.to_text();
        assert!(t.contains("-3/4 2 0"));
        assert_eq!(MultiPoly::from_text(2, &t).unwrap(), p);
        assert!(matches!(MultiPoly::from_text(2, "1/2 1"), Err(PolyError::Parse { line: 1, .. })));
        assert!(matches!(MultiPoly::from_text(2, "x 1 1"), Err(PolyError::Parse { .. })));
    }
}
