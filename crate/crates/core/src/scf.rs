//! Self-consistent field iteration with linear density mixing.
//!
//! Densities are mixed at quadrature points, so the Hamiltonian seen by the
//! eigensolver is exactly `kappa K + M[V + N_1(rho_in) + W(rho_in)]`.

use crate::eigen::{b_orthonormalize, solve_lowest, EigenOptions};
use crate::error::{FemError, ScfError};
use crate::fem::FESpace;
use crate::physics::{self, ProblemSpec};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct ScfOptions<T> {
    /// Weight of the new density in `rho <- (1 - m) rho + m rho_new`.
    pub mixing: T,
    /// L2 bound on `rho_new - rho`.
    pub tol_density: T,
    /// Bound on the largest eigenvalue change between outer iterations.
    pub tol_eigen: T,
    pub max_outer: usize,
    /// Relative residual for the Hartree Poisson solves.
    pub poisson_tol: T,
    pub eigen: EigenOptions<T>,
}

impl<T: Real> Default for ScfOptions<T> {
    fn default() -> Self {
        ScfOptions {
            mixing: T::lit(0.3),
            tol_density: T::lit(1e-7),
            tol_eigen: T::lit(1e-8),
            max_outer: 200,
            poisson_tol: T::lit(1e-12),
            eigen: EigenOptions::default(),
        }
    }
}

/// One outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScfRecord<T> {
    pub iteration: usize,
    pub density_residual: T,
    /// Infinite on the first iteration of a nonlinear problem.
    pub eigenvalue_change: T,
    /// Energy of the iterate's orbitals.
    pub energy: T,
    /// `max |Phi^T M Phi - I|`.
    pub orthonormality_error: T,
    pub eigen_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteState<T> {
    /// Full-length coefficient vectors, zero on the boundary.
    pub phi: Vec<Vec<T>>,
    /// Ascending.
    pub mu: Vec<T>,
    /// Nodal `sum phi_i^2`.
    pub rho: Vec<T>,
    pub energy: T,
    /// The local energy term was integrated numerically.
    pub energy_numeric: bool,
    pub scf_iterations: usize,
    /// `||rho(Phi) - rho_input||_{L2}`.
    pub scf_residual: T,
    /// Density that built the final Hamiltonian, at quadrature points.
    pub rho_input_qp: Vec<T>,
    /// `V + N_1(rho_input) + W(rho_input)` at quadrature points.
    pub potential_qp: Vec<T>,
    pub trace: Vec<ScfRecord<T>>,
    pub seed: u64,
}

impl<T: Real> DiscreteState<T> {
    /// `max |Phi^T M Phi - I|`.
    pub fn orthonormality_error(&self, space: &FESpace<T>) -> T {
        orthonormality_error(&space.assemble_mass(), &self.phi)
    }
}

fn orthonormality_error<T: Real>(m: &crate::linalg::SparseOperator<T>, phi: &[Vec<T>]) -> T {
    let mphi: Vec<Vec<T>> = phi.iter().map(|p| m.apply(p)).collect();
    let mut worst = T::zero();
    for (i, p) in phi.iter().enumerate() {
        for (j, mp) in mphi.iter().enumerate() {
            let g = crate::scalar::dot(p, mp);
            let target = if i == j { T::one() } else { T::zero() };
            worst = worst.max((g - target).abs());
        }
    }
    worst
}

/// `V + N_1(rho) + W` at quadrature points, with `W` nodal.
fn effective_potential<T: Real>(
    space: &FESpace<T>,
    spec: &ProblemSpec<T>,
    v_qp: &[T],
    rho_qp: &[T],
    w: Option<&[T]>,
) -> Vec<T> {
    let mut out = v_qp.to_vec();
    if !spec.n1.is_zero() {
        for (o, &r) in out.iter_mut().zip(rho_qp) {
            *o += spec.n1.eval(r);
        }
    }
    if let Some(w) = w {
        for (o, wq) in out.iter_mut().zip(space.eval_at_qp(w)) {
            *o += wq;
        }
    }
    out
}

/// Makes the largest-magnitude coefficient of each vector positive.
pub fn fix_signs<T: Real>(phi: &mut [Vec<T>]) {
    for p in phi {
        let mut best = T::zero();
        for &c in p.iter() {
            if c.abs() > best.abs() {
                best = c;
            }
        }
        if best < T::zero() {
            p.iter_mut().for_each(|c| *c = -*c);
        }
    }
}

/// Solves the discrete nonlinear eigenproblem on a fixed space. `warm_start`
/// holds full-length coefficient vectors on this space.
pub fn scf_solve<T: Real>(
    space: &FESpace<T>,
    spec: &ProblemSpec<T>,
    opts: &ScfOptions<T>,
    warm_start: Option<&[Vec<T>]>,
) -> Result<DiscreteState<T>, ScfError<T>> {
    spec.validate()?;
    let n = spec.n_states;
    space.require_interior(n)?;
    let kin = space.assemble_stiffness(spec.kappa);
    let mass = space.assemble_mass();
    let m_free = space.restrict_operator(&mass);
    let v_qp = physics::eval_potential(spec, space.qp_coords());
    let linear = spec.is_linear();

    let mut x0: Option<Vec<Vec<T>>> = None;
    if let Some(w) = warm_start {
        if let Some(v) = w.iter().find(|v| v.len() != space.dof_count()) {
            return Err(FemError::Dimension {
                expected: space.dof_count(),
                got: v.len(),
            }
            .into());
        }
        let restricted: Vec<Vec<T>> = w.iter().take(n).map(|v| space.restrict_vector(v)).collect();
        // a degenerate warm start simply falls back to the random block
        x0 = b_orthonormalize(&restricted, &m_free).ok();
    }
    let mut rho_in = match &x0 {
        Some(x) if !linear => {
            let full: Vec<Vec<T>> = x.iter().map(|v| space.extend_vector(v)).collect();
            physics::density_at_qp(space, &full)?
        }
        _ => vec![T::zero(); space.num_qp()],
    };

    let mut trace: Vec<ScfRecord<T>> = Vec::new();
    let mut mu_prev: Option<Vec<T>> = None;
    let mut last: Option<DiscreteState<T>> = None;
    for it in 1..=opts.max_outer {
        let w = if spec.alpha != T::zero() {
            Some(physics::hartree_potential_from_qp(space, &rho_in, spec.alpha, opts.poisson_tol)?)
        } else {
            None
        };
        let veff = effective_potential(space, spec, &v_qp, &rho_in, w.as_deref());
        let h = kin.add_scaled_same_pattern(T::one(), &space.assemble_mass_from_qp(&veff)?);
        let h_free = space.restrict_operator(&h);
        let eig = solve_lowest(&h_free, &m_free, n, &opts.eigen, x0.as_deref())?;
        let mut phi: Vec<Vec<T>> = eig.eigenvectors.iter().map(|v| space.extend_vector(v)).collect();
        fix_signs(&mut phi);
        x0 = Some(phi.iter().map(|v| space.restrict_vector(v)).collect());

        let rho_out = physics::density_at_qp(space, &phi)?;
        if linear {
            rho_in = rho_out.clone();
        }
        let diff: Vec<T> = rho_out.iter().zip(&rho_in).map(|(&a, &b)| (a - b) * (a - b)).collect();
        let residual = space.integrate_qp(&diff).max(T::zero()).sqrt();
        let dmu = match &mu_prev {
            Some(prev) => prev
                .iter()
                .zip(&eig.eigenvalues)
                .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs())),
            None if linear => T::zero(),
            None => T::infinity(),
        };
        let report = physics::energy(space, spec, &phi, opts.poisson_tol)?;
        trace.push(ScfRecord {
            iteration: it,
            density_residual: residual,
            eigenvalue_change: dmu,
            energy: report.total,
            orthonormality_error: orthonormality_error(&mass, &phi),
            eigen_iterations: eig.iterations,
        });
        let state = DiscreteState {
            rho: physics::density(space, &phi)?,
            phi,
            mu: eig.eigenvalues.clone(),
            energy: report.total,
            energy_numeric: report.numeric_local,
            scf_iterations: it,
            scf_residual: residual,
            rho_input_qp: rho_in.clone(),
            potential_qp: veff,
            trace: trace.clone(),
            seed: eig.seed,
        };
        if residual <= opts.tol_density && dmu <= opts.tol_eigen {
            return Ok(state);
        }
        last = Some(state);
        mu_prev = Some(eig.eigenvalues);
        for (r, &o) in rho_in.iter_mut().zip(&rho_out) {
            *r = (T::one() - opts.mixing) * *r + opts.mixing * o;
        }
    }
    let last = last.expect("at least one outer iteration");
    Err(ScfError::NoConvergence {
        iterations: opts.max_outer,
        residual: last.scf_residual.to_f64_lossy(),
        history: trace,
        last: Box::new(last),
    })
}

/// Weak action `kappa (grad x, grad psi_i) + ((V + N_1(rho) + W(rho)) x, psi_i)`
/// on interior DOFs for nodal `rho`; boundary entries are zero.
pub fn apply_hamiltonian<T: Real>(
    space: &FESpace<T>,
    spec: &ProblemSpec<T>,
    rho: &[T],
    x: &[T],
    poisson_tol: T,
) -> Result<Vec<T>, FemError> {
    space.check_len(rho)?;
    space.check_len(x)?;
    let v_qp = physics::eval_potential(spec, space.qp_coords());
    let rho_qp = space.eval_at_qp(rho);
    let w = if spec.alpha != T::zero() {
        Some(physics::hartree_potential(space, rho, spec.alpha, poisson_tol)?)
    } else {
        None
    };
    let veff = effective_potential(space, spec, &v_qp, &rho_qp, w.as_deref());
    let xq = space.eval_at_qp(x);
    let prod: Vec<T> = veff.iter().zip(&xq).map(|(&a, &b)| a * b).collect();
    let mut out = space.load_from_qp(&prod);
    let kx = space.assemble_stiffness(spec.kappa).apply(x);
    for (o, k) in out.iter_mut().zip(kx) {
        *o += k;
    }
    for (o, &d) in out.iter_mut().zip(space.dirichlet_mask()) {
        if d {
            *o = T::zero();
        }
    }
    Ok(out)
}
