//! Residual error indicators, marking, and the adaptive loop
//! `solve -> estimate -> mark -> refine`.

use std::fmt::Write as _;
use std::time::Instant;

use crate::error::{AfemError, FemError};
use crate::fem::FESpace;
use crate::mesh::{DomainSpec, Mesh};
use crate::physics::ProblemSpec;
use crate::quadrature::LineRule;
use crate::scalar::Real;
use crate::scf::{scf_solve, DiscreteState, ScfOptions, ScfRecord};

/// Indicator of one element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalIndicator<T> {
    pub eta: T,
    pub residual_part: T,
    pub jump_part: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorField<T> {
    pub eta: Vec<T>,
    /// Squared residual parts.
    pub residual_sq: Vec<T>,
    /// Squared jump parts.
    pub jump_sq: Vec<T>,
}

impl<T: Real> IndicatorField<T> {
    pub fn from_eta(eta: Vec<T>) -> Self {
        let residual_sq = eta.iter().map(|&e| e * e).collect();
        let jump_sq = vec![T::zero(); eta.len()];
        IndicatorField {
            eta,
            residual_sq,
            jump_sq,
        }
    }

    pub fn global(&self) -> T {
        global_estimate(self)
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }
}

/// `(sum eta_tau^2)^(1/2)`
pub fn global_estimate<T: Real>(field: &IndicatorField<T>) -> T {
    field.eta.iter().map(|&e| e * e).sum::<T>().sqrt()
}

/// `h_tau^2 sum_i ||-kappa Delta phi_i + Veff phi_i - mu_i phi_i||^2_tau`
fn residual_sq<T: Real>(space: &FESpace<T>, state: &DiscreteState<T>, spec: &ProblemSpec<T>, e: usize) -> T {
    let nq = space.points_per_element();
    let rule = space.rule();
    let area = space.area(e);
    let h = space.mesh().diameter(e);
    let mut total = T::zero();
    for (phi, &mu) in state.phi.iter().zip(&state.mu) {
        let lap = space.laplacian_in_element(e, phi);
        for (q, (lam, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let v = space.eval_in_element(e, *lam, phi);
            let r = -spec.kappa * lap + (state.potential_qp[e * nq + q] - mu) * v;
            total += area * w * r * r;
        }
    }
    h * h * total
}

/// `h_e sum_i integral_e j_e(phi_i)^2` for an interior edge, zero on the boundary.
pub fn edge_jump_sq<T: Real>(space: &FESpace<T>, phi: &[Vec<T>], kappa: T, edge: usize) -> T {
    let (e1, other) = space.edge_elements(edge);
    let Some(e2) = other else {
        return T::zero();
    };
    let verts = space.mesh().vertices();
    let [a, b] = space.edges()[edge];
    let (pa, pb) = (verts[a], verts[b]);
    let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
    // unit normal pointing out of e1
    let mut n = [(pb[1] - pa[1]) / len, (pa[0] - pb[0]) / len];
    let c = space.mesh().centroid(e1);
    if (c[0] - pa[0]) * n[0] + (c[1] - pa[1]) * n[1] > T::zero() {
        n = [-n[0], -n[1]];
    }
    let line = LineRule::<T>::gauss(3).expect("3-point rule");
    let mut total = T::zero();
    for (&s, &w) in line.points.iter().zip(&line.weights) {
        let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
        let l1 = space.mesh().barycentric(e1, x);
        let l2 = space.mesh().barycentric(e2, x);
        for p in phi {
            let g1 = space.grad_in_element(e1, l1, p);
            let g2 = space.grad_in_element(e2, l2, p);
            let j = kappa * ((g1[0] - g2[0]) * n[0] + (g1[1] - g2[1]) * n[1]);
            total += w * len * j * j;
        }
    }
    len * total
}

/// Indicator of element `tau`.
pub fn local_indicator<T: Real>(
    space: &FESpace<T>,
    state: &DiscreteState<T>,
    spec: &ProblemSpec<T>,
    tau: usize,
) -> LocalIndicator<T> {
    let r2 = residual_sq(space, state, spec, tau);
    let j2: T = space
        .element_edges(tau)
        .iter()
        .map(|&g| edge_jump_sq(space, &state.phi, spec.kappa, g))
        .sum();
    LocalIndicator {
        eta: (r2 + j2).sqrt(),
        residual_part: r2.sqrt(),
        jump_part: j2.sqrt(),
    }
}

/// Indicators of every element; each interior edge contributes to both neighbours.
pub fn indicator_field<T: Real>(
    space: &FESpace<T>,
    state: &DiscreteState<T>,
    spec: &ProblemSpec<T>,
) -> IndicatorField<T> {
    let ne = space.mesh().num_elements();
    let residual: Vec<T> = (0..ne).map(|e| residual_sq(space, state, spec, e)).collect();
    let mut jump = vec![T::zero(); ne];
    for g in 0..space.edges().len() {
        let (e1, other) = space.edge_elements(g);
        if let Some(e2) = other {
            let j = edge_jump_sq(space, &state.phi, spec.kappa, g);
            jump[e1] += j;
            jump[e2] += j;
        }
    }
    IndicatorField {
        eta: residual.iter().zip(&jump).map(|(&r, &j)| (r + j).sqrt()).collect(),
        residual_sq: residual,
        jump_sq: jump,
    }
}

/// Elements with `eta >= theta * max eta`; empty when all indicators vanish.
pub fn mark_maximum<T: Real>(field: &IndicatorField<T>, theta: T) -> Vec<usize> {
    let max = field.eta.iter().copied().fold(T::zero(), T::max);
    if !(max > T::zero()) {
        return Vec::new();
    }
    let cut = theta * max;
    (0..field.len()).filter(|&i| field.eta[i] >= cut).collect()
}

/// Smallest prefix (largest indicators first, ties by index) holding at least
/// `theta` of `sum eta^2`. Returned ascending.
pub fn mark_dorfler<T: Real>(field: &IndicatorField<T>, theta: T) -> Vec<usize> {
    let total: T = field.eta.iter().map(|&e| e * e).sum();
    if !(total > T::zero()) {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..field.len()).collect();
    order.sort_by(|&a, &b| field.eta[b].partial_cmp(&field.eta[a]).expect("finite indicators").then(a.cmp(&b)));
    let mut acc = T::zero();
    let mut out = Vec::new();
    for i in order {
        if acc >= theta * total {
            break;
        }
        acc += field.eta[i] * field.eta[i];
        out.push(i);
    }
    out.sort_unstable();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marking {
    Maximum,
    Dorfler,
    /// Mark every element.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule<T> {
    pub eta_tol: T,
    pub max_dof: usize,
    pub max_iter: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AfemOptions<T> {
    pub theta: T,
    pub degree: usize,
    /// Defaults to 4 for degree 1 and 6 for degree 2.
    pub quad_order: Option<usize>,
    pub marking: Marking,
    pub scf: ScfOptions<T>,
    pub stop: StopRule<T>,
    /// Uniform bisection sweeps applied to the initial mesh.
    pub pre_refine: usize,
    /// Record wall-clock time per iteration; off gives reproducible histories.
    pub timing: bool,
}

impl<T: Real> Default for AfemOptions<T> {
    fn default() -> Self {
        AfemOptions {
            theta: T::lit(0.5),
            degree: 1,
            quad_order: None,
            marking: Marking::Maximum,
            scf: ScfOptions::default(),
            stop: StopRule {
                eta_tol: T::lit(1e-3),
                max_dof: 20_000,
                max_iter: 60,
            },
            pre_refine: 0,
            timing: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord<T> {
    pub k: usize,
    pub dofs: usize,
    pub h_max: T,
    pub mu: Vec<T>,
    pub energy: T,
    pub eta: T,
    pub marked: usize,
    pub scf_iterations: usize,
    pub wall_ms: f64,
    pub orthonormality_error: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceHistory<T> {
    pub records: Vec<IterationRecord<T>>,
    /// Outer SCF trace of every AFEM iteration.
    pub scf_traces: Vec<Vec<ScfRecord<T>>>,
    /// Mesh of the last solved iteration.
    pub final_mesh: Option<Mesh<T>>,
    pub final_state: Option<DiscreteState<T>>,
    pub seed: u64,
    pub n_states: usize,
    /// Why the loop stopped.
    pub stop_reason: String,
    /// Some local energy was integrated numerically.
    pub energy_numeric: bool,
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

impl<T: Real> ConvergenceHistory<T> {
    fn new(seed: u64, n_states: usize) -> Self {
        ConvergenceHistory {
            records: Vec::new(),
            scf_traces: Vec::new(),
            final_mesh: None,
            final_state: None,
            seed,
            n_states,
            stop_reason: String::new(),
            energy_numeric: false,
        }
    }

    pub fn csv_header(n_states: usize) -> String {
        let mut h = String::from("k,dofs,h_max,eta,energy");
        for i in 1..=n_states {
            let _ = write!(h, ",mu_{i}");
        }
        h.push_str(",marked,scf_iters,wall_ms");
        h
    }

    /// CSV with 17 significant digits per floating value.
    pub fn to_csv(&self) -> String {
        let mut out = Self::csv_header(self.n_states);
        out.push('\n');
        for r in &self.records {
            let _ = write!(
                out,
                "{},{},{},{},{}",
                r.k,
                r.dofs,
                fmt17(r.h_max.to_f64_lossy()),
                fmt17(r.eta.to_f64_lossy()),
                fmt17(r.energy.to_f64_lossy())
            );
            for m in &r.mu {
                let _ = write!(out, ",{}", fmt17(m.to_f64_lossy()));
            }
            let _ = writeln!(out, ",{},{},{}", r.marked, r.scf_iterations, fmt17(r.wall_ms));
        }
        out
    }

    /// `k,iteration,density_residual,eigenvalue_change,energy,orthonormality_error`
    pub fn scf_trace_csv(&self) -> String {
        let mut out = String::from("k,iteration,density_residual,eigenvalue_change,energy,orthonormality_error\n");
        for (k, trace) in self.scf_traces.iter().enumerate() {
            for r in trace {
                let _ = writeln!(
                    out,
                    "{k},{},{},{},{},{}",
                    r.iteration,
                    fmt17(r.density_residual.to_f64_lossy()),
                    fmt17(r.eigenvalue_change.to_f64_lossy()),
                    fmt17(r.energy.to_f64_lossy()),
                    fmt17(r.orthonormality_error.to_f64_lossy())
                );
            }
        }
        out
    }
}

/// Runs the adaptive loop from the initial mesh of `domain`.
pub fn afem_run<T: Real>(
    spec: &ProblemSpec<T>,
    domain: &DomainSpec<T>,
    opts: &AfemOptions<T>,
) -> Result<ConvergenceHistory<T>, AfemError<T>> {
    let mesh = Mesh::from_domain(domain)?;
    afem_run_from_mesh(spec, mesh, opts)
}

/// Runs the adaptive loop from a given mesh.
pub fn afem_run_from_mesh<T: Real>(
    spec: &ProblemSpec<T>,
    mut mesh: Mesh<T>,
    opts: &AfemOptions<T>,
) -> Result<ConvergenceHistory<T>, AfemError<T>> {
    spec.validate()?;
    for _ in 0..opts.pre_refine {
        mesh = mesh.bisect_all()?;
    }
    let quad = opts.quad_order.unwrap_or_else(|| crate::fem::default_quad_order(opts.degree));
    let mut space = FESpace::build(&mesh, opts.degree, quad)?;
    space.require_interior(spec.n_states)?;

    let mut history = ConvergenceHistory::new(opts.scf.eigen.seed, spec.n_states);
    let mut warm: Option<Vec<Vec<T>>> = None;
    let mut k = 0;
    loop {
        let start = Instant::now();
        let state = match scf_solve(&space, spec, &opts.scf, warm.as_deref()) {
            Ok(s) => s,
            Err(source) => {
                history.final_mesh = Some(space.mesh().clone());
                history.stop_reason = format!("solver failure at iteration {k}");
                return Err(AfemError::Solve {
                    iteration: k,
                    history: Box::new(history),
                    source,
                });
            }
        };
        let field = indicator_field(&space, &state, spec);
        let eta = field.global();
        let mut marked = match opts.marking {
            Marking::Maximum => mark_maximum(&field, opts.theta),
            Marking::Dorfler => mark_dorfler(&field, opts.theta),
            Marking::Uniform => (0..field.len()).collect(),
        };

        let mut stop = None;
        if eta <= opts.stop.eta_tol {
            stop = Some(format!("estimate {eta:e} below tolerance"));
        } else if k + 1 >= opts.stop.max_iter {
            stop = Some(format!("reached {} iterations", opts.stop.max_iter));
        } else if marked.is_empty() {
            stop = Some("all indicators vanish".into());
        }
        let mut next = None;
        if stop.is_none() {
            let refined = space.mesh().refine(&marked)?;
            let fine = FESpace::build(&refined, opts.degree, quad)?;
            if fine.dof_count() > opts.stop.max_dof {
                stop = Some(format!("next space has {} DOFs, above {}", fine.dof_count(), opts.stop.max_dof));
            } else {
                next = Some(fine);
            }
        }
        if stop.is_some() && next.is_none() {
            marked.clear();
        }
        let wall_ms = if opts.timing {
            start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        };
        history.energy_numeric |= state.energy_numeric;
        history.records.push(IterationRecord {
            k,
            dofs: space.dof_count(),
            h_max: space.mesh().h_max(),
            mu: state.mu.clone(),
            energy: state.energy,
            eta,
            marked: marked.len(),
            scf_iterations: state.scf_iterations,
            wall_ms,
            orthonormality_error: state.trace.last().map_or(T::zero(), |r| r.orthonormality_error),
        });
        history.scf_traces.push(state.trace.clone());

        match next {
            Some(fine) => {
                let prolonged: Result<Vec<Vec<T>>, FemError> =
                    state.phi.iter().map(|p| fine.prolongate(&space, p)).collect();
                warm = Some(prolonged?);
                space = fine;
                k += 1;
            }
            None => {
                history.stop_reason = stop.unwrap_or_default();
                history.final_mesh = Some(space.mesh().clone());
                history.final_state = Some(state);
                return Ok(history);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scf::ScfOptions;
    use approx::assert_relative_eq;

    fn field(eta: &[f64]) -> IndicatorField<f64> {
        IndicatorField::from_eta(eta.to_vec())
    }

    #[test]
    fn global_examples() {
        assert_eq!(global_estimate(&field(&[0.0, 0.0])), 0.0);
        assert_eq!(global_estimate(&field(&[3.0])), 3.0);
        assert_relative_eq!(global_estimate(&field(&[3.0, 4.0])), 5.0);
    }

    #[test]
    fn maximum_marking_examples() {
        assert_eq!(mark_maximum(&field(&[4.0, 3.0, 2.0, 1.0]), 0.5), vec![0, 1, 2]);
        assert_eq!(mark_maximum(&field(&[1.0, 5.0, 5.0, 2.0]), 1.0), vec![1, 2]);
        assert_eq!(mark_maximum(&field(&[2.0; 4]), 0.9), vec![0, 1, 2, 3]);
        assert!(mark_maximum(&field(&[0.0; 3]), 0.5).is_empty());
    }

    #[test]
    fn dorfler_marking() {
        // squares 16, 9, 4, 1: 16 + 9 = 25 >= 0.8 * 30
        assert_eq!(mark_dorfler(&field(&[4.0, 3.0, 2.0, 1.0]), 0.8), vec![0, 1]);
        assert_eq!(mark_dorfler(&field(&[1.0, 2.0]), 1.0), vec![0, 1]);
    }

    fn hat_state(space: &FESpace<f64>, vertex: usize) -> DiscreteState<f64> {
        let mut phi = vec![0.0; space.dof_count()];
        phi[vertex] = 1.0;
        DiscreteState {
            rho: phi.clone(),
            phi: vec![phi],
            mu: vec![0.0],
            energy: 0.0,
            energy_numeric: false,
            scf_iterations: 0,
            scf_residual: 0.0,
            rho_input_qp: vec![0.0; space.num_qp()],
            potential_qp: vec![0.0; space.num_qp()],
            trace: Vec::new(),
            seed: 0,
        }
    }

    #[test]
    fn hat_function_jump() {
        let mesh = Mesh::from_domain(&DomainSpec::unit_square()).unwrap();
        let space = FESpace::new(&mesh, 1).unwrap();
        let diag = (0..space.edges().len())
            .find(|&g| space.edge_elements(g).1.is_some())
            .unwrap();
        // hat at (1,0): gradient (1,-1) on one side, 0 on the other; |j| = sqrt 2
        let state = hat_state(&space, 1);
        let len = 2f64.sqrt();
        let integral = edge_jump_sq(&space, &state.phi, 1.0, diag) / len;
        assert_relative_eq!(integral, 2.0 * 2f64.sqrt(), epsilon = 1e-13);
        let spec = ProblemSpec::laplacian(1);
        let li = local_indicator(&space, &state, &spec, 0);
        assert_relative_eq!(li.jump_part * li.jump_part, 4.0, epsilon = 1e-13);
    }

    #[test]
    fn affine_function_has_no_interior_jump() {
        let mut mesh = Mesh::from_domain(&DomainSpec::unit_square()).unwrap();
        mesh = mesh.refine_uniform().unwrap();
        let space = FESpace::new(&mesh, 1).unwrap();
        let mut state = hat_state(&space, 0);
        state.phi = vec![space.interpolate(|p| 2.0 * p[0] - p[1] + 0.5)];
        for g in 0..space.edges().len() {
            assert!(edge_jump_sq(&space, &state.phi, 1.0, g).abs() < 1e-24);
        }
    }

    #[test]
    fn field_matches_local_and_residual_formula() {
        let mut mesh = Mesh::<f64>::from_domain(&DomainSpec::unit_square()).unwrap();
        mesh = mesh.refine_uniform().unwrap().refine_uniform().unwrap();
        let space = FESpace::new(&mesh, 1).unwrap();
        let spec = ProblemSpec::laplacian(1);
        let st = scf_solve(&space, &spec, &ScfOptions::default(), None).unwrap();
        let f = indicator_field(&space, &st, &spec);
        let sum: f64 = f.eta.iter().map(|e| e * e).sum();
        assert_relative_eq!(f.global().powi(2), sum, max_relative = 1e-12);
        for e in 0..mesh.num_elements() {
            let li = local_indicator(&space, &st, &spec, e);
            assert_relative_eq!(li.eta, f.eta[e], max_relative = 1e-12);
            // residual for P1 and V = 0: h^2 mu^2 ||phi||^2_tau
            let vals: Vec<f64> = (0..space.points_per_element())
                .map(|q| {
                    let lam = space.rule().points[q];
                    space.eval_in_element(e, lam, &st.phi[0]).powi(2) * space.rule().weights[q]
                })
                .collect();
            let l2 = space.area(e) * vals.iter().sum::<f64>();
            let h = mesh.diameter(e);
            assert_relative_eq!(li.residual_part.powi(2), h * h * st.mu[0].powi(2) * l2, max_relative = 1e-10);
        }
    }

    #[test]
    fn small_afem_run_is_nested_and_grows() {
        let spec = ProblemSpec::laplacian(1);
        let opts = AfemOptions {
            pre_refine: 1,
            timing: false,
            stop: StopRule {
                eta_tol: 0.0,
                max_dof: 400,
                max_iter: 30,
            },
            ..AfemOptions::default()
        };
        let h = afem_run(&spec, &DomainSpec::unit_square(), &opts).unwrap();
        assert!(h.records.len() >= 3);
        for w in h.records.windows(2) {
            assert!(w[1].dofs > w[0].dofs);
            assert!(w[1].h_max <= w[0].h_max);
            assert_eq!(w[1].k, w[0].k + 1);
        }
        let csv = h.to_csv();
        assert!(csv.starts_with("k,dofs,h_max,eta,energy,mu_1,marked,scf_iters,wall_ms\n"));
        assert_eq!(csv.lines().count(), h.records.len() + 1);
    }

    #[test]
    fn too_small_initial_space() {
        let spec = ProblemSpec::<f64>::laplacian(1);
        let r = afem_run(&spec, &DomainSpec::unit_square(), &AfemOptions::default());
        assert!(matches!(r, Err(AfemError::Fem(FemError::SpaceTooSmall { .. }))));
    }
}
