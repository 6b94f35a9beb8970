//! Adaptive finite element solver for nonlinear Schrödinger-type eigenvalue
//! problems on 2D polygonal domains, together with exact polynomial tools for
//! eliminating sums of k-th roots.
//!
//! The numerical modules are generic over a floating point scalar implementing
//! [`Real`] (`f32` and `f64`); the polynomial module works over exact rationals.
//! Concrete `f64` aliases are exported at the crate root for everyday use.
//!
//! The adaptive loop is `solve -> estimate -> mark -> refine`:
//!
//! ```no_run
//! use qafem::{afem_run, AfemOptions, DomainSpec, ProblemSpec};
//!
//! let spec = ProblemSpec::<f64>::laplacian(1);
//! let domain = DomainSpec::unit_square();
//! let history = afem_run(&spec, &domain, &AfemOptions::default()).unwrap();
//! println!("{:?}", history.records.last().map(|r| r.mu[0]));
//! ```

pub mod eigen;
pub mod error;
pub mod estimate;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod physics;
pub mod poly;
pub mod quadrature;
pub mod scalar;
pub mod scf;

pub use eigen::{b_orthonormalize, solve_lowest, EigenOptions, EigenResult};
pub use error::{AfemError, EigenError, FemError, MeshError, PolyError, ScfError, SpecError};
pub use estimate::{
    afem_run, afem_run_from_mesh, global_estimate, local_indicator, mark_dorfler, mark_maximum,
    AfemOptions, ConvergenceHistory, IndicatorField, IterationRecord, LocalIndicator, Marking,
    StopRule,
};
pub use fem::{FESpace, QuadPoint};
pub use linalg::SparseOperator;
pub use mesh::{DomainSpec, Mesh, QualityReport};
pub use physics::{N1Preset, N1Variant, Potential, ProblemSpec};
pub use scalar::Real;
pub use scf::{apply_hamiltonian, scf_solve, DiscreteState, ScfOptions, ScfRecord};
pub use poly::{annihilator, verify_annihilation, AnnihilationReport};

/// Double precision mesh.
pub type Mesh64 = mesh::Mesh<f64>;
/// Double precision finite element space.
pub type Space64 = fem::FESpace<f64>;
/// Double precision sparse operator.
pub type Operator64 = linalg::SparseOperator<f64>;
/// Double precision problem description.
pub type Problem64 = physics::ProblemSpec<f64>;
/// Double precision SCF state.
pub type State64 = scf::DiscreteState<f64>;
/// Double precision AFEM history.
pub type History64 = estimate::ConvergenceHistory<f64>;

/// Single precision mesh.
pub type Mesh32 = mesh::Mesh<f32>;
/// Single precision finite element space.
pub type Space32 = fem::FESpace<f32>;

/// Exact rational numbers used by the polynomial module.
pub type Rational = num_rational::BigRational;
/// Annihilator polynomials with exact rational coefficients.
pub type RationalPoly = poly::MultiPoly<num_rational::BigRational>;
/// Fractional-exponent polynomials with double coefficients.
pub type FracPoly64 = poly::FracPoly<f64>;
