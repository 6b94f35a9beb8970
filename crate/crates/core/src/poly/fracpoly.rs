//! Polynomials in three variables with nonnegative rational exponents.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

use crate::error::PolyError;
use crate::scalar::Real;

/// Exponent triple in `Q_+^3`.
pub type Exponent = [Ratio<i64>; 3];

/// Degree of a [`FracPoly`]; the zero polynomial has degree `-inf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Degree {
    NegInfinity,
    Finite(Ratio<i64>),
}

impl Degree {
    /// `deg p^mu = mu deg p`.
    pub fn pow(self, mu: Ratio<i64>) -> Self {
        match self {
            Degree::NegInfinity => Degree::NegInfinity,
            Degree::Finite(d) => Degree::Finite(d * mu),
        }
    }

    /// `deg(p / q) = deg p - deg q`; `None` when `q` is zero.
    pub fn quotient(self, q: Degree) -> Option<Self> {
        match (self, q) {
            (_, Degree::NegInfinity) => None,
            (Degree::NegInfinity, _) => Some(Degree::NegInfinity),
            (Degree::Finite(a), Degree::Finite(b)) => Some(Degree::Finite(a - b)),
        }
    }
}

/// `alpha` versus `beta` by the sign of the first nonzero entry of `alpha - beta`.
pub fn monomial_order(alpha: &Exponent, beta: &Exponent) -> Ordering {
    for (a, b) in alpha.iter().zip(beta) {
        let d = a - b;
        if d > Ratio::zero() {
            return Ordering::Greater;
        }
        if d < Ratio::zero() {
            return Ordering::Less;
        }
    }
    Ordering::Equal
}

#[derive(Debug, Clone, PartialEq)]
pub struct FracPoly<T> {
    terms: BTreeMap<Exponent, T>,
}

impl<T: Real> Default for FracPoly<T> {
    fn default() -> Self {
        Self::zero()
    }
}

pub fn exponent(a: (i64, i64), b: (i64, i64), c: (i64, i64)) -> Exponent {
    [Ratio::new(a.0, a.1), Ratio::new(b.0, b.1), Ratio::new(c.0, c.1)]
}

impl<T: Real> FracPoly<T> {
    pub fn zero() -> Self {
        FracPoly { terms: BTreeMap::new() }
    }

    pub fn constant(c: T) -> Self {
        Self::monomial(c, [Ratio::zero(); 3]).expect("zero exponent is valid")
    }

    pub fn monomial(c: T, alpha: Exponent) -> Result<Self, PolyError> {
        let mut p = Self::zero();
        p.add_term(alpha, c)?;
        Ok(p)
    }

    /// Builds from terms; negative exponents are rejected.
    pub fn from_terms<I: IntoIterator<Item = (Exponent, T)>>(terms: I) -> Result<Self, PolyError> {
        let mut p = Self::zero();
        for (a, c) in terms {
            p.add_term(a, c)?;
        }
        Ok(p)
    }

    pub fn add_term(&mut self, alpha: Exponent, c: T) -> Result<(), PolyError> {
        if alpha.iter().any(|a| *a < Ratio::zero()) {
            return Err(PolyError::Argument(format!("negative exponent {alpha:?}")));
        }
        let v = self.terms.remove(&alpha).unwrap_or_else(T::zero) + c;
        if v != T::zero() {
            self.terms.insert(alpha, v);
        }
        Ok(())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &T)> {
        self.terms.iter()
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

    pub fn add(&self, other: &Self) -> Self {
        let mut p = self.clone();
        for (a, &c) in &other.terms {
            p.add_term(*a, c).expect("exponents already valid");
        }
        p
    }

    pub fn scale(&self, c: T) -> Self {
        let mut p = Self::zero();
        for (a, &v) in &self.terms {
            p.add_term(*a, v * c).expect("exponents already valid");
        }
        p
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut p = Self::zero();
        for (a, &x) in &self.terms {
            for (b, &y) in &other.terms {
                let e = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
                p.add_term(e, x * y).expect("sum of nonnegative exponents");
            }
        }
        p
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::constant(T::one()), |acc, _| acc.mul(self))
    }

    /// Terms ordered by [`monomial_order`], largest first.
    pub fn leading_term(&self) -> Option<(Exponent, T)> {
        self.terms
            .iter()
            .max_by(|a, b| monomial_order(a.0, b.0))
            .map(|(a, c)| (*a, *c))
    }

    /// Value at a point with nonnegative coordinates.
    pub fn eval(&self, x: [T; 3]) -> T {
        self.terms.iter().map(|(a, &c)| c * monomial_value(a, x)).sum()
    }

    /// `sum |c_alpha| |x^alpha|`, the scale against which a value is judged nonzero.
    pub fn magnitude(&self, x: [T; 3]) -> T {
        self.terms
            .iter()
            .map(|(a, &c)| (c * monomial_value(a, x)).abs())
            .sum()
    }
}

impl<T: Real> FracPoly<T> {
    /// One term per line, `c a1 a2 a3`, with real `c` and exponents written
    /// as integers or `p/q`. Blank lines and `#` comments are skipped.
    pub fn from_text(text: &str) -> Result<Self, PolyError> {
        let mut p = Self::zero();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: String| PolyError::Parse { line: i + 1, msg };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(parse_err(format!("expected 4 fields, found {}", fields.len())));
            }
            let c: f64 = fields[0]
                .parse()
                .map_err(|_| parse_err(format!("bad coefficient `{}`", fields[0])))?;
            let mut alpha = [Ratio::zero(); 3];
            for (a, f) in alpha.iter_mut().zip(&fields[1..]) {
                *a = f.parse().map_err(|_| parse_err(format!("bad exponent `{f}`")))?;
            }
            p.add_term(alpha, T::lit(c)).map_err(|e| parse_err(e.to_string()))?;
        }
        Ok(p)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (a, c) in &self.terms {
            s.push_str(&format!("{:e} {} {} {}\n", c.to_f64_lossy(), a[0], a[1], a[2]));
        }
        s
    }
}

fn monomial_value<T: Real>(a: &Exponent, x: [T; 3]) -> T {
    let mut v = T::one();
    for (e, &xi) in a.iter().zip(&x) {
        if e.is_zero() {
            continue;
        }
        let f = T::lit(e.to_f64().unwrap_or(f64::NAN));
        v *= xi.powf(f);
    }
    v
}

/// `max |alpha|` over the terms.
pub fn frac_degree<T: Real>(p: &FracPoly<T>) -> Degree {
    p.terms
        .keys()
        .map(|a| a[0] + a[1] + a[2])
        .max()
        .map_or(Degree::NegInfinity, Degree::Finite)
}
