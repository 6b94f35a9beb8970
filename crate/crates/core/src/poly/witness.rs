//! Numeric searches for points where a fractional polynomial, or a sum of
//! `p_j ln q_j`, is nonzero. A `None` result is inconclusive.

use super::fracpoly::FracPoly;
use crate::error::PolyError;

/// Axis-aligned box in the closed nonnegative octant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBox {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl SearchBox {
    pub fn new(lo: [f64; 3], hi: [f64; 3]) -> Result<Self, PolyError> {
        for i in 0..3 {
            if !(lo[i] >= 0.0 && hi[i] > lo[i] && hi[i].is_finite()) {
                return Err(PolyError::Argument(format!(
                    "box side {i} is [{}, {}]; need 0 <= lo < hi",
                    lo[i], hi[i]
                )));
            }
        }
        Ok(SearchBox { lo, hi })
    }

    pub fn cube(lo: f64, hi: f64) -> Result<Self, PolyError> {
        Self::new([lo; 3], [hi; 3])
    }

    /// `i`-th Halton point (bases 2, 3, 5), `i >= 1`.
    pub fn halton(&self, i: u64) -> [f64; 3] {
        let u = [radical_inverse(i, 2), radical_inverse(i, 3), radical_inverse(i, 5)];
        let mut x = [0.0; 3];
        for k in 0..3 {
            x[k] = self.lo[k] + u[k] * (self.hi[k] - self.lo[k]);
        }
        x
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    out
}

const RELATIVE_THRESHOLD: f64 = 1e-12;

/// First sample `x` with `|p(x)| > 1e-12 * sum |terms of p at x|`.
pub fn nonvanishing_witness(p: &FracPoly<f64>, region: &SearchBox, budget: usize) -> Option<[f64; 3]> {
    if p.is_zero() {
        return None;
    }
    (1..=budget as u64).map(|i| region.halton(i)).find(|&x| {
        let v = p.eval(x);
        v.is_finite() && v.abs() > RELATIVE_THRESHOLD * p.magnitude(x)
    })
}

/// As [`nonvanishing_witness`] for `F = sum p_j ln q_j`. Every `q_j` must be
/// positive at every sample.
pub fn logsum_witness(
    terms: &[(FracPoly<f64>, FracPoly<f64>)],
    region: &SearchBox,
    budget: usize,
) -> Result<Option<[f64; 3]>, PolyError> {
    for i in 1..=budget as u64 {
        let x = region.halton(i);
        let mut f = 0.0;
        let mut scale = 0.0;
        for (p, q) in terms {
            let qv = q.eval(x);
            if !(qv > 0.0) {
                return Err(PolyError::Domain { value: qv, point: x });
            }
            let l = qv.ln();
            f += p.eval(x) * l;
            scale += p.magnitude(x) * l.abs();
        }
        if f.is_finite() && scale > 0.0 && f.abs() > RELATIVE_THRESHOLD * scale {
            return Ok(Some(x));
        }
    }
    Ok(None)
}
