//! Lowest eigenpairs of symmetric pencils `(A, B)`, `B` positive definite.
//!
//! Small problems are reduced with a Cholesky factor of `B` and solved densely.
//! Larger ones use block LOBPCG with a Jacobi preconditioner and
//! `n + min(n, 5)` guard vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::EigenError;
use crate::linalg::{DenseMatrix, SparseOperator};
use crate::scalar::{axpy, dot, norm2, Real};

pub const DEFAULT_SEED: u64 = 0x5eed_2024;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenOptions<T> {
    /// Bound on `||A x - lambda B x|| / ||x||_B` per pair.
    pub tol: T,
    pub max_iter: usize,
    /// Seed of the pseudorandom initial block.
    pub seed: u64,
    /// Problems of at most this dimension are solved densely.
    pub dense_threshold: usize,
}

impl<T: Real> Default for EigenOptions<T> {
    fn default() -> Self {
        EigenOptions {
            tol: T::lit(1e-8),
            max_iter: 2000,
            seed: DEFAULT_SEED,
            dense_threshold: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult<T> {
    /// Ascending.
    pub eigenvalues: Vec<T>,
    /// `B`-orthonormal.
    pub eigenvectors: Vec<Vec<T>>,
    pub iterations: usize,
    pub residual_norms: Vec<T>,
    pub seed: u64,
}

fn check_pencil<T: Real>(a: &SparseOperator<T>, b: &SparseOperator<T>, n: usize) -> Result<(), EigenError<T>> {
    if a.dim() != b.dim() {
        return Err(EigenError::Dimension(format!("A is {0}x{0}, B is {1}x{1}", a.dim(), b.dim())));
    }
    if n == 0 || n > a.dim() {
        return Err(EigenError::Dimension(format!(
            "requested {n} eigenpairs of a {}-dimensional pencil",
            a.dim()
        )));
    }
    if let Some(i) = b.diagonal().iter().position(|&d| !(d > T::zero())) {
        return Err(EigenError::Operator(format!("B has non-positive diagonal entry at {i}")));
    }
    Ok(())
}

/// `||A x - lambda B x||` for `B`-normalized `x`.
fn residual<T: Real>(a: &SparseOperator<T>, b: &SparseOperator<T>, lambda: T, x: &[T]) -> T {
    let mut r = a.apply(x);
    axpy(-lambda, &b.apply(x), &mut r);
    norm2(&r) / b.quadratic_form(x).max(T::min_positive_value()).sqrt()
}

/// The `n` algebraically smallest eigenpairs of `A x = lambda B x`.
pub fn solve_lowest<T: Real>(
    a: &SparseOperator<T>,
    b: &SparseOperator<T>,
    n: usize,
    opts: &EigenOptions<T>,
    initial: Option<&[Vec<T>]>,
) -> Result<EigenResult<T>, EigenError<T>> {
    check_pencil(a, b, n)?;
    if let Some(init) = initial {
        if let Some(v) = init.iter().find(|v| v.len() != a.dim()) {
            return Err(EigenError::Dimension(format!(
                "initial vector has length {}, expected {}",
                v.len(),
                a.dim()
            )));
        }
    }
    let m = n + n.min(5);
    if a.dim() <= opts.dense_threshold || 3 * m >= a.dim() {
        dense_lowest(a, b, n, opts.seed)
    } else {
        lobpcg(a, b, n, m, opts, initial)
    }
}

fn dense_lowest<T: Real>(
    a: &SparseOperator<T>,
    b: &SparseOperator<T>,
    n: usize,
    seed: u64,
) -> Result<EigenResult<T>, EigenError<T>> {
    let dim = a.dim();
    let l = b
        .to_dense()
        .cholesky()
        .ok_or_else(|| EigenError::Operator("B is not positive definite".into()))?;
    let ad = a.to_dense();
    // C = L^-1 A L^-T
    let mut y = DenseMatrix::zeros(dim, dim);
    for j in 0..dim {
        let col = l.forward_solve(&ad.column(j));
        for i in 0..dim {
            y[(i, j)] = col[i];
        }
    }
    let mut c = DenseMatrix::zeros(dim, dim);
    for i in 0..dim {
        let row: Vec<T> = (0..dim).map(|k| y[(i, k)]).collect();
        let col = l.forward_solve(&row);
        for j in 0..dim {
            c[(j, i)] = col[j];
        }
    }
    for i in 0..dim {
        for j in i + 1..dim {
            let s = (c[(i, j)] + c[(j, i)]) / T::lit(2.0);
            c[(i, j)] = s;
            c[(j, i)] = s;
        }
    }
    let (vals, vecs) = c.sym_eigen();
    let mut eigenvectors = Vec::with_capacity(n);
    let mut residual_norms = Vec::with_capacity(n);
    for k in 0..n {
        let x = l.backward_solve_transpose(&vecs.column(k));
        residual_norms.push(residual(a, b, vals[k], &x));
        eigenvectors.push(x);
    }
    Ok(EigenResult {
        eigenvalues: vals[..n].to_vec(),
        eigenvectors,
        iterations: 0,
        residual_norms,
        seed,
    })
}

/// Gram–Schmidt in the `B` inner product with one reorthogonalization pass.
/// Columns whose remaining norm falls below `drop_tol` times their original
/// norm are dropped; their indices are returned.
fn gram_schmidt<T: Real>(
    vecs: &mut Vec<Vec<T>>,
    bvecs: &mut Vec<Vec<T>>,
    candidates: Vec<Vec<T>>,
    b: &SparseOperator<T>,
    drop_tol: T,
) -> Result<Vec<usize>, EigenError<T>> {
    let mut dropped = Vec::new();
    for (idx, mut v) in candidates.into_iter().enumerate() {
        let mut bv = b.apply(&v);
        let n0 = dot(&v, &bv);
        if n0 < T::zero() {
            return Err(EigenError::Operator("negative v^T B v: B is not positive definite".into()));
        }
        if !(n0 > T::zero()) || !n0.is_finite() {
            dropped.push(idx);
            continue;
        }
        for _pass in 0..2 {
            for (q, bq) in vecs.iter().zip(bvecs.iter()) {
                let c = dot(bq, &v);
                axpy(-c, q, &mut v);
                axpy(-c, bq, &mut bv);
            }
        }
        let nn = dot(&v, &bv);
        if !(nn > drop_tol * drop_tol * n0) {
            dropped.push(idx);
            continue;
        }
        let inv = T::one() / nn.sqrt();
        v.iter_mut().for_each(|x| *x *= inv);
        // recompute B v to keep rounding from accumulating
        let bv = b.apply(&v);
        vecs.push(v);
        bvecs.push(bv);
    }
    Ok(dropped)
}

/// `B`-orthonormal basis of the span of `x`, same order, Gram–Schmidt with
/// one reorthogonalization pass. A pivot below `1e-12` times the largest
/// input `B`-norm is a rank error.
pub fn b_orthonormalize<T: Real>(x: &[Vec<T>], b: &SparseOperator<T>) -> Result<Vec<Vec<T>>, EigenError<T>> {
    if let Some(v) = x.iter().find(|v| v.len() != b.dim()) {
        return Err(EigenError::Dimension(format!("vector of length {} for dimension {}", v.len(), b.dim())));
    }
    let mut norms = Vec::with_capacity(x.len());
    for v in x {
        let q = b.quadratic_form(v);
        if q < T::zero() {
            return Err(EigenError::Operator("negative v^T B v: B is not positive definite".into()));
        }
        norms.push(q.sqrt());
    }
    let scale = norms.iter().copied().fold(T::zero(), T::max);
    let mut out: Vec<Vec<T>> = Vec::with_capacity(x.len());
    let mut bout: Vec<Vec<T>> = Vec::with_capacity(x.len());
    for (k, v) in x.iter().enumerate() {
        let mut r = v.clone();
        for _pass in 0..2 {
            for (q, bq) in out.iter().zip(&bout) {
                let c = dot(bq, &r);
                axpy(-c, q, &mut r);
            }
        }
        let br = b.apply(&r);
        let pivot = dot(&r, &br).max(T::zero()).sqrt();
        if !(pivot > T::lit(1e-12) * scale) {
            return Err(EigenError::Rank { column: k });
        }
        let inv = T::one() / pivot;
        r.iter_mut().for_each(|c| *c *= inv);
        bout.push(br.into_iter().map(|c| c * inv).collect());
        out.push(r);
    }
    Ok(out)
}

fn random_vec<T: Real>(rng: &mut ChaCha8Rng, n: usize) -> Vec<T> {
    (0..n).map(|_| T::lit(rng.gen::<f64>() - 0.5)).collect()
}

/// Linear combination `sum_k coeffs[k] * vecs[k]`.
fn combine<T: Real>(vecs: &[Vec<T>], coeffs: impl Iterator<Item = T>) -> Vec<T> {
    let mut out = vec![T::zero(); vecs[0].len()];
    for (v, c) in vecs.iter().zip(coeffs) {
        if c != T::zero() {
            axpy(c, v, &mut out);
        }
    }
    out
}

fn lobpcg<T: Real>(
    a: &SparseOperator<T>,
    b: &SparseOperator<T>,
    n: usize,
    m: usize,
    opts: &EigenOptions<T>,
    initial: Option<&[Vec<T>]>,
) -> Result<EigenResult<T>, EigenError<T>> {
    let dim = a.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let precond: Vec<T> = a
        .diagonal()
        .iter()
        .map(|&d| if d.abs() > T::zero() { T::one() / d.abs() } else { T::one() })
        .collect();
    let drop_tol = T::lit(1e-10).max(T::epsilon().sqrt() * T::lit(10.0));

    // initial block: supplied vectors first, random fill
    let mut cand: Vec<Vec<T>> = initial.map(|v| v.iter().take(m).cloned().collect()).unwrap_or_default();
    while cand.len() < m {
        cand.push(random_vec(&mut rng, dim));
    }
    let mut x: Vec<Vec<T>> = Vec::with_capacity(m);
    let mut bx: Vec<Vec<T>> = Vec::with_capacity(m);
    gram_schmidt(&mut x, &mut bx, cand, b, drop_tol)?;
    let mut guard = 0;
    while x.len() < m {
        gram_schmidt(&mut x, &mut bx, vec![random_vec(&mut rng, dim)], b, drop_tol)?;
        guard += 1;
        if guard > 10 * m {
            return Err(EigenError::Rank { column: x.len() });
        }
    }

    // Rayleigh–Ritz on X
    let ax: Vec<Vec<T>> = x.iter().map(|v| a.apply(v)).collect();
    let (mut lambda, mut x, mut ax, mut bx) = {
        let (vals, y) = projected_eigen(&x, &ax);
        let take = |s: &[Vec<T>]| -> Vec<Vec<T>> { (0..m).map(|j| combine(s, (0..m).map(|i| y[(i, j)]))).collect() };
        (vals[..m].to_vec(), take(&x), take(&ax), take(&bx))
    };
    let mut p: Vec<Vec<T>> = Vec::new();
    let mut best_res = vec![T::infinity(); n];

    for it in 1..=opts.max_iter {
        let mut res = Vec::with_capacity(m);
        let mut r_vecs = Vec::with_capacity(m);
        for j in 0..m {
            let mut r = ax[j].clone();
            axpy(-lambda[j], &bx[j], &mut r);
            res.push(norm2(&r));
            r_vecs.push(r);
        }
        best_res.copy_from_slice(&res[..n]);
        if res[..n].iter().all(|&r| r <= opts.tol) {
            return Ok(EigenResult {
                eigenvalues: lambda[..n].to_vec(),
                eigenvectors: x[..n].to_vec(),
                iterations: it - 1,
                residual_norms: res[..n].to_vec(),
                seed: opts.seed,
            });
        }
        let w: Vec<Vec<T>> = r_vecs
            .into_iter()
            .zip(&res)
            .filter(|(_, &r)| r > opts.tol)
            .map(|(r, _)| r.iter().zip(&precond).map(|(&ri, &d)| ri * d).collect())
            .collect();

        let mut s = x.clone();
        let mut bs = bx.clone();
        let mut cand = w;
        cand.extend(p.drain(..));
        gram_schmidt(&mut s, &mut bs, cand, b, drop_tol)?;
        let as_: Vec<Vec<T>> = ax.iter().cloned().chain(s[m..].iter().map(|v| a.apply(v))).collect();
        let (vals, y) = projected_eigen(&s, &as_);
        let k = s.len();
        let mut nx = Vec::with_capacity(m);
        let mut nax = Vec::with_capacity(m);
        let mut nbx = Vec::with_capacity(m);
        let mut np = Vec::with_capacity(m);
        for j in 0..m {
            nx.push(combine(&s, (0..k).map(|i| y[(i, j)])));
            nax.push(combine(&as_, (0..k).map(|i| y[(i, j)])));
            nbx.push(combine(&bs, (0..k).map(|i| y[(i, j)])));
            if k > m {
                np.push(combine(&s[m..], (m..k).map(|i| y[(i, j)])));
            }
        }
        lambda = vals[..m].to_vec();
        x = nx;
        ax = nax;
        bx = nbx;
        p = np;
    }
    let best = EigenResult {
        eigenvalues: lambda[..n].to_vec(),
        eigenvectors: x[..n].to_vec(),
        iterations: opts.max_iter,
        residual_norms: best_res.clone(),
        seed: opts.seed,
    };
    Err(EigenError::NoConvergence {
        iterations: opts.max_iter,
        max_residual: best_res.iter().fold(0.0f64, |m, r| m.max(r.to_f64_lossy())),
        best: Box::new(best),
    })
}

/// Eigen-decomposition of `S^T A S` for `B`-orthonormal `S`.
fn projected_eigen<T: Real>(s: &[Vec<T>], as_: &[Vec<T>]) -> (Vec<T>, DenseMatrix<T>) {
    let k = s.len();
    let mut g = DenseMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let v = (dot(&s[i], &as_[j]) + dot(&s[j], &as_[i])) / T::lit(2.0);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g.sym_eigen()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn diag(v: &[f64]) -> SparseOperator<f64> {
        SparseOperator::from_diagonal(v)
    }

    fn laplace_1d(n: usize) -> SparseOperator<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        SparseOperator::from_triplets(n, &t)
    }

    fn mass_1d(n: usize) -> SparseOperator<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0 / 6.0));
            if i + 1 < n {
                t.push((i, i + 1, 1.0 / 6.0));
                t.push((i + 1, i, 1.0 / 6.0));
            }
        }
        SparseOperator::from_triplets(n, &t)
    }

    #[test]
    fn diagonal_example() {
        let r = solve_lowest(&diag(&[1.0, 2.0, 3.0]), &diag(&[1.0; 3]), 2, &EigenOptions::default(), None).unwrap();
        assert_relative_eq!(r.eigenvalues[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(r.eigenvalues[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn lobpcg_matches_closed_form() {
        // tridiag(-1,2,-1) against tridiag(1,4,1)/6 has eigenvalues
        // 6 (1 - cos t) / (2 + cos t), t = k pi / (n + 1)
        let n = 400;
        let a = laplace_1d(n);
        let b = mass_1d(n);
        let opts = EigenOptions {
            tol: 1e-10,
            ..EigenOptions::default()
        };
        let r = solve_lowest(&a, &b, 3, &opts, None).unwrap();
        assert!(r.iterations > 0);
        for (k, v) in r.eigenvalues.iter().enumerate() {
            let t = (k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64;
            let exact = 6.0 * (1.0 - t.cos()) / (2.0 + t.cos());
            assert_relative_eq!(*v, exact, max_relative = 1e-9);
        }
        for i in 0..3 {
            for j in 0..3 {
                let g = dot(&r.eigenvectors[i], &b.apply(&r.eigenvectors[j]));
                assert!((g - if i == j { 1.0 } else { 0.0 }).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn dense_full_spectrum() {
        let a = laplace_1d(5);
        let b = mass_1d(5);
        let r = solve_lowest(&a, &b, 5, &EigenOptions::default(), None).unwrap();
        for (k, v) in r.eigenvalues.iter().enumerate() {
            let t = (k + 1) as f64 * std::f64::consts::PI / 6.0;
            assert_relative_eq!(*v, 6.0 * (1.0 - t.cos()) / (2.0 + t.cos()), epsilon = 1e-10);
        }
    }

    #[test]
    fn not_spd_is_operator_error() {
        let r = solve_lowest(&diag(&[1.0, 2.0]), &diag(&[1.0, -1.0]), 1, &EigenOptions::default(), None);
        assert!(matches!(r, Err(EigenError::Operator(_))));
        let r = solve_lowest(&diag(&[1.0, 2.0]), &diag(&[1.0, 1.0]), 3, &EigenOptions::default(), None);
        assert!(matches!(r, Err(EigenError::Dimension(_))));
    }

    #[test]
    fn non_convergence_carries_best() {
        let n = 300;
        let opts = EigenOptions {
            tol: 1e-14,
            max_iter: 3,
            ..EigenOptions::default()
        };
        match solve_lowest(&laplace_1d(n), &mass_1d(n), 1, &opts, None) {
            Err(EigenError::NoConvergence { best, iterations, .. }) => {
                assert_eq!(iterations, 3);
                assert_eq!(best.eigenvectors.len(), 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn orthonormalize_examples() {
        let b = mass_1d(4);
        let v = vec![1.0, 2.0, 0.5, -1.0];
        let w: Vec<f64> = v.iter().map(|x| 2.0 * x).collect();
        assert!(matches!(b_orthonormalize(&[v.clone(), w], &b), Err(EigenError::Rank { column: 1 })));
        let q = b_orthonormalize(&[v, vec![0.0, 1.0, 1.0, 0.0], vec![1.0, 0.0, 0.0, 3.0]], &b).unwrap();
        let again = b_orthonormalize(&q, &b).unwrap();
        for (x, y) in q.iter().zip(&again) {
            for (a, c) in x.iter().zip(y) {
                assert!((a - c).abs() < 1e-12);
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                let g = dot(&q[i], &b.apply(&q[j]));
                assert!((g - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }
}
