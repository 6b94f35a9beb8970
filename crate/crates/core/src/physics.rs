//! Problem descriptions: external potential, local nonlinearity, Hartree term,
//! density and energy.

use crate::error::{FemError, SpecError};
use crate::fem::FESpace;
use crate::quadrature::adaptive_integrate;
use crate::scalar::Real;

/// External potential `V`.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential<T> {
    None,
    Constant(T),
    /// `gamma_1 x^2 + gamma_2 y^2`
    Harmonic { gamma: [T; 2] },
    /// `-sum_j Z_j / sqrt(|x - r_j|^2 + eps^2)`
    Coulomb {
        charges: Vec<T>,
        centers: Vec<[T; 2]>,
        epsilon: T,
    },
}

impl<T: Real> Potential<T> {
    pub fn eval(&self, x: [T; 2]) -> T {
        match self {
            Potential::None => T::zero(),
            Potential::Constant(c) => *c,
            Potential::Harmonic { gamma } => gamma[0] * x[0] * x[0] + gamma[1] * x[1] * x[1],
            Potential::Coulomb {
                charges,
                centers,
                epsilon,
            } => {
                let e2 = *epsilon * *epsilon;
                -charges
                    .iter()
                    .zip(centers)
                    .map(|(&z, r)| {
                        let d2 = (x[0] - r[0]).powi(2) + (x[1] - r[1]).powi(2);
                        z / (d2 + e2).sqrt()
                    })
                    .sum::<T>()
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Potential::None => true,
            Potential::Constant(c) => *c == T::zero(),
            _ => false,
        }
    }
}

/// Local nonlinearity `N_1(rho)`.
#[derive(Debug, Clone, PartialEq)]
pub enum N1Variant<T> {
    None,
    /// `beta * rho`
    Gpe { beta: T },
    /// `beta1 rho^(nu-1) - beta2 rho^(1/3)`
    Tfdw { beta1: T, beta2: T, nu: T },
    /// `sign * (3/2) alpha (3 rho / pi)^(1/3)`
    XAlpha { alpha: T, sign: T },
    /// Perdew–Zunger parametrization in `r_s = (3 / (4 pi rho))^(1/3)`.
    PzLda,
    /// Vosko–Wilk–Nusair form in `t = sqrt(r_s)`.
    VwnLda,
}

#[derive(Debug, Clone, PartialEq)]
pub struct N1Preset<T> {
    pub variant: N1Variant<T>,
    /// Densities below this are raised to it before evaluation.
    pub floor: T,
}

pub const DEFAULT_DENSITY_FLOOR: f64 = 1e-12;

impl<T: Real> N1Preset<T> {
    pub fn new(variant: N1Variant<T>) -> Self {
        N1Preset {
            variant,
            floor: T::lit(DEFAULT_DENSITY_FLOOR),
        }
    }

    pub fn none() -> Self {
        Self::new(N1Variant::None)
    }

    pub fn gpe(beta: T) -> Self {
        Self::new(N1Variant::Gpe { beta })
    }

    /// True when `N_1` vanishes identically.
    pub fn is_zero(&self) -> bool {
        match self.variant {
            N1Variant::None => true,
            N1Variant::Gpe { beta } => beta == T::zero(),
            _ => false,
        }
    }

    /// `N_1(rho)`.
    pub fn eval(&self, rho: T) -> T {
        let r = rho.max(self.floor);
        let l = T::lit;
        let third = T::one() / l(3.0);
        match self.variant {
            N1Variant::None => T::zero(),
            N1Variant::Gpe { beta } => beta * r,
            N1Variant::Tfdw { beta1, beta2, nu } => beta1 * r.powf(nu - T::one()) - beta2 * r.powf(third),
            N1Variant::XAlpha { alpha, sign } => {
                sign * l(1.5) * alpha * (l(3.0) * r / T::PI()).powf(third)
            }
            N1Variant::PzLda => pz_lda(wigner_seitz(r)),
            N1Variant::VwnLda => vwn_lda(wigner_seitz(r)),
        }
    }

    /// `integral_0^s N_1`, and whether it was obtained numerically.
    pub fn energy_density(&self, s: T) -> (T, bool) {
        let l = T::lit;
        let s = s.max(T::zero());
        let four_thirds = l(4.0) / l(3.0);
        match self.variant {
            N1Variant::None => (T::zero(), false),
            N1Variant::Gpe { beta } => (beta * s * s / l(2.0), false),
            N1Variant::Tfdw { beta1, beta2, nu } => (
                beta1 * s.powf(nu) / nu - l(0.75) * beta2 * s.powf(four_thirds),
                false,
            ),
            N1Variant::XAlpha { alpha, sign } => (
                sign * l(9.0) * alpha / l(8.0) * (l(3.0) / T::PI()).powf(T::one() / l(3.0))
                    * s.powf(four_thirds),
                false,
            ),
            N1Variant::PzLda | N1Variant::VwnLda => {
                let head = s.min(self.floor) * self.eval(self.floor);
                if s <= self.floor {
                    return (head, true);
                }
                let tol = l(1e-13).max(T::epsilon() * l(16.0)) * s;
                (head + adaptive_integrate(self.floor, s, tol, |t| self.eval(t)), true)
            }
        }
    }

    fn validate(&self) -> Result<(), SpecError> {
        let l = T::lit;
        if !(self.floor > T::zero()) {
            return Err(SpecError(format!("density floor must be positive, got {}", self.floor)));
        }
        match self.variant {
            N1Variant::Tfdw { nu, .. } if !(nu >= T::one() && nu <= l(2.0)) => {
                Err(SpecError(format!("tfdw nu must lie in [1, 2], got {nu}")))
            }
            N1Variant::XAlpha { alpha, .. } if !(alpha >= l(2.0 / 3.0) - T::epsilon() && alpha <= T::one()) => {
                Err(SpecError(format!("x_alpha alpha must lie in [2/3, 1], got {alpha}")))
            }
            _ => Ok(()),
        }
    }
}

/// `r_s = (3 / (4 pi rho))^(1/3)`
pub fn wigner_seitz<T: Real>(rho: T) -> T {
    (T::lit(3.0) / (T::lit(4.0) * T::PI() * rho)).cbrt()
}

/// Perdew–Zunger potential, both branches joined at `r_s = 1`.
pub fn pz_lda<T: Real>(rs: T) -> T {
    if rs >= T::one() {
        pz_lda_low_density(rs)
    } else {
        pz_lda_high_density(rs)
    }
}

fn pz_exchange<T: Real>(rs: T) -> T {
    (T::lit(9.0) / (T::lit(4.0) * T::PI() * T::PI())).cbrt() / rs
}

/// Branch used for `r_s >= 1`.
pub fn pz_lda_low_density<T: Real>(rs: T) -> T {
    let l = T::lit;
    let sq = rs.sqrt();
    let den = T::one() + l(1.0529) * sq + l(0.3334) * rs;
    -(l(0.1423) + l(0.0633) * rs + l(0.1748) * sq) / (den * den) - pz_exchange(rs)
}

/// Branch used for `r_s < 1`.
pub fn pz_lda_high_density<T: Real>(rs: T) -> T {
    let l = T::lit;
    let ln = rs.ln();
    l(0.0311) * ln - l(0.0584) + l(0.0013) * rs * ln - l(0.0084) * rs - pz_exchange(rs)
}

/// Vosko–Wilk–Nusair expression.
pub fn vwn_lda<T: Real>(rs: T) -> T {
    let l = T::lit;
    let (a, t0, b, c) = (l(0.0621814), l(-0.409286), l(13.0720), l(42.7198));
    let t = rs.sqrt();
    let x = |t: T| t * t + b * t + c;
    let q = (l(4.0) * c - b * b).sqrt();
    let atan = (q / (l(2.0) * t + b)).atan();
    let xt = x(t);
    a / l(2.0)
        * ((t * t / xt).ln() + l(2.0) * b / q * atan
            - b * t0 / x(t0)
                * (((t - t0) * (t - t0) / xt).ln() + l(2.0) * (b + l(2.0) * t0) / q * atan))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec<T> {
    pub kappa: T,
    pub potential: Potential<T>,
    pub n1: N1Preset<T>,
    /// Hartree coefficient.
    pub alpha: T,
    pub n_states: usize,
}

impl<T: Real> ProblemSpec<T> {
    /// `-Delta u = lambda u` for the lowest `n_states` eigenpairs.
    pub fn laplacian(n_states: usize) -> Self {
        ProblemSpec {
            kappa: T::one(),
            potential: Potential::None,
            n1: N1Preset::none(),
            alpha: T::zero(),
            n_states,
        }
    }

    /// Single-state GPE in a harmonic trap.
    pub fn gpe(kappa: T, gamma: [T; 2], beta: T) -> Self {
        ProblemSpec {
            kappa,
            potential: Potential::Harmonic { gamma },
            n1: N1Preset::gpe(beta),
            alpha: T::zero(),
            n_states: 1,
        }
    }

    pub fn with_potential(mut self, potential: Potential<T>) -> Self {
        self.potential = potential;
        self
    }

    pub fn with_n1(mut self, n1: N1Preset<T>) -> Self {
        self.n1 = n1;
        self
    }

    pub fn with_alpha(mut self, alpha: T) -> Self {
        self.alpha = alpha;
        self
    }

    /// The Hamiltonian does not depend on the density.
    pub fn is_linear(&self) -> bool {
        self.n1.is_zero() && self.alpha == T::zero()
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if self.n_states == 0 {
            return Err(SpecError("n_states must be at least 1".into()));
        }
        if !(self.kappa > T::zero() && self.kappa.is_finite()) {
            return Err(SpecError(format!("kappa must be positive, got {}", self.kappa)));
        }
        if !self.alpha.is_finite() {
            return Err(SpecError("alpha must be finite".into()));
        }
        match &self.potential {
            Potential::Harmonic { gamma } if !(gamma[0] > T::zero() && gamma[1] > T::zero()) => {
                return Err(SpecError(format!("harmonic coefficients must be positive, got {gamma:?}")));
            }
            Potential::Coulomb {
                charges,
                centers,
                epsilon,
            } => {
                if charges.len() != centers.len() {
                    return Err(SpecError(format!(
                        "{} charges but {} centers",
                        charges.len(),
                        centers.len()
                    )));
                }
                if !(*epsilon > T::zero()) {
                    return Err(SpecError(format!("Coulomb regularization must be positive, got {epsilon}")));
                }
            }
            _ => {}
        }
        self.n1.validate()
    }
}

/// `V` at each point.
pub fn eval_potential<T: Real>(spec: &ProblemSpec<T>, points: &[[T; 2]]) -> Vec<T> {
    points.iter().map(|&x| spec.potential.eval(x)).collect()
}

/// `N_1` at each density value.
pub fn eval_n1<T: Real>(preset: &N1Preset<T>, rho: &[T]) -> Vec<T> {
    rho.iter().map(|&r| preset.eval(r)).collect()
}

fn poisson_max_iter(n: usize) -> usize {
    (10 * n).max(1000)
}

/// Solves `-Delta W = 4 pi alpha rho`, `W = 0` on the boundary, for nodal `rho`.
pub fn hartree_potential<T: Real>(
    space: &FESpace<T>,
    rho: &[T],
    alpha: T,
    tol: T,
) -> Result<Vec<T>, FemError> {
    space.check_len(rho)?;
    if alpha == T::zero() {
        return Ok(vec![T::zero(); space.dof_count()]);
    }
    let mut load = space.assemble_mass().apply(rho);
    let s = T::lit(4.0) * T::PI() * alpha;
    load.iter_mut().for_each(|v| *v *= s);
    space.solve_dirichlet_poisson(&load, tol, poisson_max_iter(space.dof_count()))
}

/// As [`hartree_potential`], with `rho` given at quadrature points.
pub fn hartree_potential_from_qp<T: Real>(
    space: &FESpace<T>,
    rho_qp: &[T],
    alpha: T,
    tol: T,
) -> Result<Vec<T>, FemError> {
    if rho_qp.len() != space.num_qp() {
        return Err(FemError::Dimension {
            expected: space.num_qp(),
            got: rho_qp.len(),
        });
    }
    if alpha == T::zero() {
        return Ok(vec![T::zero(); space.dof_count()]);
    }
    let s = T::lit(4.0) * T::PI() * alpha;
    let scaled: Vec<T> = rho_qp.iter().map(|&r| s * r).collect();
    let load = space.load_from_qp(&scaled);
    space.solve_dirichlet_poisson(&load, tol, poisson_max_iter(space.dof_count()))
}

fn check_all<T: Real>(space: &FESpace<T>, phi: &[Vec<T>]) -> Result<(), FemError> {
    if phi.is_empty() {
        return Err(FemError::Dimension { expected: 1, got: 0 });
    }
    phi.iter().try_for_each(|p| space.check_len(p))
}

/// Nodal interpolant of `sum_i phi_i^2`.
pub fn density<T: Real>(space: &FESpace<T>, phi: &[Vec<T>]) -> Result<Vec<T>, FemError> {
    check_all(space, phi)?;
    let mut rho = vec![T::zero(); space.dof_count()];
    for p in phi {
        for (r, &v) in rho.iter_mut().zip(p) {
            *r += v * v;
        }
    }
    Ok(rho)
}

/// `sum_i phi_i^2` at every quadrature point.
pub fn density_at_qp<T: Real>(space: &FESpace<T>, phi: &[Vec<T>]) -> Result<Vec<T>, FemError> {
    check_all(space, phi)?;
    let mut rho = vec![T::zero(); space.num_qp()];
    for p in phi {
        for (r, v) in rho.iter_mut().zip(space.eval_at_qp(p)) {
            *r += v * v;
        }
    }
    Ok(rho)
}

/// Energy split into its parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport<T> {
    pub total: T,
    pub kinetic: T,
    pub external: T,
    pub local: T,
    pub hartree: T,
    /// The local part was integrated numerically (no closed form).
    pub numeric_local: bool,
}

/// `kappa sum |grad phi_i|^2 + int V rho + int E(rho) + (1/2)(rho, W(rho))`,
/// where `W` already carries the Hartree coefficient.
pub fn energy<T: Real>(
    space: &FESpace<T>,
    spec: &ProblemSpec<T>,
    phi: &[Vec<T>],
    poisson_tol: T,
) -> Result<EnergyReport<T>, FemError> {
    let rho = density_at_qp(space, phi)?;
    let k = space.assemble_stiffness(spec.kappa);
    let kinetic: T = phi.iter().map(|p| k.quadratic_form(p)).sum();
    let v = eval_potential(spec, space.qp_coords());
    let ext: Vec<T> = v.iter().zip(&rho).map(|(&a, &b)| a * b).collect();
    let external = space.integrate_qp(&ext);
    let mut numeric_local = false;
    let local = if spec.n1.is_zero() {
        T::zero()
    } else {
        let e: Vec<T> = rho
            .iter()
            .map(|&r| {
                let (val, numeric) = spec.n1.energy_density(r);
                numeric_local |= numeric;
                val
            })
            .collect();
        space.integrate_qp(&e)
    };
    let hartree = if spec.alpha == T::zero() {
        T::zero()
    } else {
        let w = space.eval_at_qp(&hartree_potential_from_qp(space, &rho, spec.alpha, poisson_tol)?);
        let prod: Vec<T> = w.iter().zip(&rho).map(|(&a, &b)| a * b).collect();
        space.integrate_qp(&prod) / T::lit(2.0)
    };
    Ok(EnergyReport {
        total: kinetic + external + local + hartree,
        kinetic,
        external,
        local,
        hartree,
        numeric_local,
    })
}
