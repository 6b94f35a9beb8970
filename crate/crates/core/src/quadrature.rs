//! Symmetric triangle rules and Gauss–Legendre rules.

use crate::scalar::Real;

/// Triangle rule in barycentric coordinates; weights sum to one, so the
/// integral over an element is `area * sum(w_q f(x_q))`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule<T> {
    /// Polynomial degree integrated exactly.
    pub order: usize,
    pub points: Vec<[T; 3]>,
    pub weights: Vec<T>,
}

/// Highest polynomial degree available from [`TriangleRule::with_order`].
pub const MAX_TRIANGLE_ORDER: usize = 6;

impl<T: Real> TriangleRule<T> {
    /// Smallest tabulated rule exact for polynomials of total degree `order`.
    pub fn with_order(order: usize) -> Option<Self> {
        let l = T::lit;
        let mut rule = TriangleRule {
            order: 0,
            points: Vec::new(),
            weights: Vec::new(),
        };
        match order {
            0 | 1 => {
                rule.order = 1;
                rule.push_orbit1(l(1.0));
            }
            2 => {
                rule.order = 2;
                rule.push_orbit3(l(2.0 / 3.0), l(1.0 / 3.0));
            }
            3 | 4 => {
                // Dunavant, 6 points
                rule.order = 4;
                rule.push_orbit3(l(0.108103018168070), l(0.223381589678011));
                rule.push_orbit3(l(0.816847572980459), l(0.109951743655322));
            }
            5 => {
                // Radon's 7-point rule
                let s15 = 15f64.sqrt();
                rule.order = 5;
                rule.push_orbit1(l(0.225));
                rule.push_orbit3(l((9.0 - 2.0 * s15) / 21.0), l((155.0 + s15) / 1200.0));
                rule.push_orbit3(l((9.0 + 2.0 * s15) / 21.0), l((155.0 - s15) / 1200.0));
            }
            6 => {
                // Dunavant, 12 points
                rule.order = 6;
                rule.push_orbit3(l(0.501426509658179), l(0.116786275726379));
                rule.push_orbit3(l(0.873821971016996), l(0.050844906370207));
                rule.push_orbit6(
                    l(0.053145049844817),
                    l(0.310352451033784),
                    l(0.082851075618374),
                );
            }
            _ => return None,
        }
        Some(rule)
    }

    fn push_orbit1(&mut self, w: T) {
        let t = T::one() / T::lit(3.0);
        self.points.push([t, t, t]);
        self.weights.push(w);
    }

    /// Points `(a, b, b)` and permutations with `b = (1 - a) / 2`.
    fn push_orbit3(&mut self, a: T, w: T) {
        let b = (T::one() - a) / T::lit(2.0);
        for p in [[a, b, b], [b, a, b], [b, b, a]] {
            self.points.push(p);
            self.weights.push(w);
        }
    }

    /// All six permutations of `(a, b, 1 - a - b)`.
    fn push_orbit6(&mut self, a: T, b: T, w: T) {
        let c = T::one() - a - b;
        for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
            self.points.push(p);
            self.weights.push(w);
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Gauss–Legendre rule mapped to `[0, 1]`; weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct LineRule<T> {
    pub points: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> LineRule<T> {
    /// `n` points, `1 <= n <= 5`; exact for degree `2n - 1`.
    pub fn gauss(n: usize) -> Option<Self> {
        let (x, w): (Vec<f64>, Vec<f64>) = match n {
            1 => (vec![0.0], vec![2.0]),
            2 => {
                let a = 1.0 / 3f64.sqrt();
                (vec![-a, a], vec![1.0, 1.0])
            }
            3 => {
                let a = 0.6f64.sqrt();
                (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
            }
            4 => {
                let r = (6.0f64 / 5.0).sqrt();
                let a = (3.0 / 7.0 - 2.0 / 7.0 * r).sqrt();
                let b = (3.0 / 7.0 + 2.0 / 7.0 * r).sqrt();
                let s30 = 30f64.sqrt();
                let wa = (18.0 + s30) / 36.0;
                let wb = (18.0 - s30) / 36.0;
                (vec![-b, -a, a, b], vec![wb, wa, wa, wb])
            }
            5 => {
                let r = (10.0f64 / 7.0).sqrt();
                let a = (5.0 - 2.0 * r).sqrt() / 3.0;
                let b = (5.0 + 2.0 * r).sqrt() / 3.0;
                let s70 = 70f64.sqrt();
                let wa = (322.0 + 13.0 * s70) / 900.0;
                let wb = (322.0 - 13.0 * s70) / 900.0;
                (vec![-b, -a, 0.0, a, b], vec![wb, wa, 128.0 / 225.0, wa, wb])
            }
            _ => return None,
        };
        Some(LineRule {
            points: x.iter().map(|&xi| T::lit(0.5 * (xi + 1.0))).collect(),
            weights: w.iter().map(|&wi| T::lit(0.5 * wi)).collect(),
        })
    }

    /// `integral_a^b f` with this rule.
    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        let len = b - a;
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(a + len * x))
            .sum::<T>()
            * len
    }
}

/// Adaptive Gauss–Legendre integration by interval bisection, comparing the
/// 5-point result with the sum over both halves. `tol` is an absolute
/// per-interval tolerance.
pub fn adaptive_integrate<T: Real, F: FnMut(T) -> T>(a: T, b: T, tol: T, mut f: F) -> T {
    let rule = LineRule::gauss(5).expect("5-point rule");
    fn recurse<T: Real, F: FnMut(T) -> T>(
        rule: &LineRule<T>,
        a: T,
        b: T,
        whole: T,
        tol: T,
        depth: u32,
        f: &mut F,
    ) -> T {
        let mid = (a + b) / T::lit(2.0);
        let left = rule.integrate(a, mid, &mut *f);
        let right = rule.integrate(mid, b, &mut *f);
        let sum = left + right;
        let diff = (sum - whole).abs();
        if depth == 0 || diff <= tol || diff <= T::lit(64.0) * T::epsilon() * sum.abs() {
            return sum;
        }
        recurse(rule, a, mid, left, tol, depth - 1, f) + recurse(rule, mid, b, right, tol, depth - 1, f)
    }
    if a == b {
        return T::zero();
    }
    let whole = rule.integrate(a, b, &mut f);
    recurse(&rule, a, b, whole, tol, 60, &mut f)
}
