//! Lagrange P1/P2 spaces, quadrature-point evaluation and assembly.
//!
//! Global DOFs: vertices first, then (degree 2) one DOF per edge in order of
//! first encounter while sweeping elements. Local DOF `3 + k` sits on the
//! edge opposite local vertex `k`.

use std::collections::HashMap;

use crate::error::FemError;
use crate::linalg::{cg_solve, SparseOperator};
use crate::mesh::{edge_key, EdgeKey, Mesh};
use crate::quadrature::{TriangleRule, MAX_TRIANGLE_ORDER};
use crate::scalar::Real;

/// A quadrature point handed to weight callbacks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint<T> {
    pub element: usize,
    /// Index of the point within the element's rule.
    pub index: usize,
    pub x: [T; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms<T> {
    pub l2: T,
    pub h1_semi: T,
}

#[derive(Debug, Clone)]
pub struct FESpace<T> {
    mesh: Mesh<T>,
    degree: usize,
    rule: TriangleRule<T>,
    dof_count: usize,
    /// `nloc` entries per element.
    element_dofs: Vec<usize>,
    edges: Vec<[usize; 2]>,
    /// Global edge opposite each local vertex.
    element_edges: Vec<[usize; 3]>,
    edge_elements: Vec<(usize, Option<usize>)>,
    dirichlet: Vec<bool>,
    free: Vec<usize>,
    grads: Vec<[[T; 2]; 3]>,
    areas: Vec<T>,
    /// Basis values at the reference quadrature points, `nq x nloc`.
    basis_ref: Vec<T>,
    qp_coords: Vec<[T; 2]>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    /// CSR position of local entry `(i, j)`, `nloc^2` per element.
    elem_pos: Vec<usize>,
}

/// Default quadrature order for a degree.
pub fn default_quad_order(degree: usize) -> usize {
    if degree >= 2 {
        6
    } else {
        4
    }
}

impl<T: Real> FESpace<T> {
    /// Space with the default quadrature order.
    pub fn new(mesh: &Mesh<T>, degree: usize) -> Result<Self, FemError> {
        Self::build(mesh, degree, default_quad_order(degree))
    }

    /// Builds the space; `quad_order` must be at least `2 * degree`.
    pub fn build(mesh: &Mesh<T>, degree: usize, quad_order: usize) -> Result<Self, FemError> {
        if !(1..=2).contains(&degree) {
            return Err(FemError::Degree(degree));
        }
        if quad_order < 2 * degree || quad_order > MAX_TRIANGLE_ORDER {
            return Err(FemError::Quadrature {
                order: quad_order,
                degree,
            });
        }
        let rule = TriangleRule::with_order(quad_order).ok_or(FemError::Quadrature {
            order: quad_order,
            degree,
        })?;
        let nv = mesh.num_vertices();
        let ne = mesh.num_elements();

        let mut edge_index: HashMap<EdgeKey, usize> = HashMap::with_capacity(3 * ne / 2 + 2);
        let mut edges = Vec::new();
        let mut edge_elements: Vec<(usize, Option<usize>)> = Vec::new();
        let mut element_edges = Vec::with_capacity(ne);
        for (e, tri) in mesh.elements().iter().enumerate() {
            let mut ee = [0usize; 3];
            for (k, slot) in ee.iter_mut().enumerate() {
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let key = edge_key(a, b);
                let idx = *edge_index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_elements.push((e, None));
                    edges.len() - 1
                });
                if edge_elements[idx].0 != e {
                    edge_elements[idx].1 = Some(e);
                }
                *slot = idx;
            }
            element_edges.push(ee);
        }

        let nloc = if degree == 1 { 3 } else { 6 };
        let dof_count = if degree == 1 { nv } else { nv + edges.len() };
        let mut element_dofs = Vec::with_capacity(nloc * ne);
        for (tri, ee) in mesh.elements().iter().zip(&element_edges) {
            element_dofs.extend_from_slice(tri);
            if degree == 2 {
                element_dofs.extend(ee.iter().map(|&g| nv + g));
            }
        }

        let mut dirichlet = vec![false; dof_count];
        for (g, (_, other)) in edge_elements.iter().enumerate() {
            if other.is_none() {
                dirichlet[edges[g][0]] = true;
                dirichlet[edges[g][1]] = true;
                if degree == 2 {
                    dirichlet[nv + g] = true;
                }
            }
        }
        let free = (0..dof_count).filter(|&i| !dirichlet[i]).collect();

        let mut grads = Vec::with_capacity(ne);
        let mut areas = Vec::with_capacity(ne);
        for e in 0..ne {
            let [a, b, c] = mesh.element_coords(e);
            let twice = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
            // grad lambda_k = rot(opposite edge) / 2A
            let g = |p: [T; 2], q: [T; 2]| [(p[1] - q[1]) / twice, (q[0] - p[0]) / twice];
            grads.push([g(b, c), g(c, a), g(a, b)]);
            areas.push(twice / T::lit(2.0));
        }

        let nq = rule.len();
        let mut basis_ref = Vec::with_capacity(nq * nloc);
        for lam in &rule.points {
            basis_ref.extend(basis_values(degree, *lam));
        }
        let mut qp_coords = Vec::with_capacity(ne * nq);
        for e in 0..ne {
            let [a, b, c] = mesh.element_coords(e);
            for lam in &rule.points {
                qp_coords.push([
                    lam[0] * a[0] + lam[1] * b[0] + lam[2] * c[0],
                    lam[0] * a[1] + lam[1] * b[1] + lam[2] * c[1],
                ]);
            }
        }

        // sparsity pattern of element connectivity
        let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(ne * nloc * nloc);
        for dofs in element_dofs.chunks(nloc) {
            for &i in dofs {
                for &j in dofs {
                    pairs.push((i, j));
                }
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let mut row_ptr = vec![0usize; dof_count + 1];
        for &(i, _) in &pairs {
            row_ptr[i + 1] += 1;
        }
        for i in 0..dof_count {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col_idx: Vec<usize> = pairs.iter().map(|&(_, j)| j).collect();
        let mut elem_pos = Vec::with_capacity(ne * nloc * nloc);
        for dofs in element_dofs.chunks(nloc) {
            for &i in dofs {
                let row = &col_idx[row_ptr[i]..row_ptr[i + 1]];
                for &j in dofs {
                    let k = row.binary_search(&j).expect("pattern covers element");
                    elem_pos.push(row_ptr[i] + k);
                }
            }
        }

        Ok(FESpace {
            mesh: mesh.clone(),
            degree,
            rule,
            dof_count,
            element_dofs,
            edges,
            element_edges,
            edge_elements,
            dirichlet,
            free,
            grads,
            areas,
            basis_ref,
            qp_coords,
            row_ptr,
            col_idx,
            elem_pos,
        })
    }

    pub fn mesh(&self) -> &Mesh<T> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn quad_order(&self) -> usize {
        self.rule.order
    }

    pub fn rule(&self) -> &TriangleRule<T> {
        &self.rule
    }

    pub fn dof_count(&self) -> usize {
        self.dof_count
    }

    pub fn local_dofs(&self) -> usize {
        if self.degree == 1 {
            3
        } else {
            6
        }
    }

    pub fn element_dofs(&self, e: usize) -> &[usize] {
        let n = self.local_dofs();
        &self.element_dofs[e * n..(e + 1) * n]
    }

    pub fn dirichlet_mask(&self) -> &[bool] {
        &self.dirichlet
    }

    /// Interior DOF indices, ascending.
    pub fn free_dofs(&self) -> &[usize] {
        &self.free
    }

    pub fn interior_count(&self) -> usize {
        self.free.len()
    }

    /// Fails unless at least `required` interior DOFs exist.
    pub fn require_interior(&self, required: usize) -> Result<(), FemError> {
        if self.free.len() < required.max(1) {
            return Err(FemError::SpaceTooSmall {
                interior: self.free.len(),
                required: required.max(1),
            });
        }
        Ok(())
    }

    /// All mesh edges as sorted vertex pairs.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Global edge index opposite each local vertex of element `e`.
    pub fn element_edges(&self, e: usize) -> [usize; 3] {
        self.element_edges[e]
    }

    /// The one or two elements sharing edge `g`.
    pub fn edge_elements(&self, g: usize) -> (usize, Option<usize>) {
        self.edge_elements[g]
    }

    /// Gradients of the barycentric coordinates on element `e`.
    pub fn lambda_grads(&self, e: usize) -> [[T; 2]; 3] {
        self.grads[e]
    }

    pub fn area(&self, e: usize) -> T {
        self.areas[e]
    }

    pub fn points_per_element(&self) -> usize {
        self.rule.len()
    }

    /// Number of quadrature points over the mesh.
    pub fn num_qp(&self) -> usize {
        self.qp_coords.len()
    }

    /// Physical quadrature points, element-major.
    pub fn qp_coords(&self) -> &[[T; 2]] {
        &self.qp_coords
    }

    /// `area * w_q` for every quadrature point.
    pub fn qp_weights(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.num_qp());
        for &a in &self.areas {
            out.extend(self.rule.weights.iter().map(|&w| a * w));
        }
        out
    }

    /// Coordinates of every DOF node.
    pub fn dof_coords(&self) -> Vec<[T; 2]> {
        let mut out = self.mesh.vertices().to_vec();
        if self.degree == 2 {
            let verts = self.mesh.vertices();
            let half = T::lit(0.5);
            out.extend(self.edges.iter().map(|&[a, b]| {
                [(verts[a][0] + verts[b][0]) * half, (verts[a][1] + verts[b][1]) * half]
            }));
        }
        out
    }

    /// Nodal interpolant.
    pub fn interpolate<F: FnMut([T; 2]) -> T>(&self, mut f: F) -> Vec<T> {
        self.dof_coords().into_iter().map(&mut f).collect()
    }

    pub fn check_len(&self, coeffs: &[T]) -> Result<(), FemError> {
        if coeffs.len() != self.dof_count {
            return Err(FemError::Dimension {
                expected: self.dof_count,
                got: coeffs.len(),
            });
        }
        Ok(())
    }

    /// Value of the FE function at barycentric point `lam` of element `e`.
    pub fn eval_in_element(&self, e: usize, lam: [T; 3], coeffs: &[T]) -> T {
        let b = basis_values(self.degree, lam);
        self.element_dofs(e)
            .iter()
            .zip(&b)
            .map(|(&d, &v)| coeffs[d] * v)
            .sum()
    }

    /// Gradient of the FE function at barycentric point `lam` of element `e`.
    pub fn grad_in_element(&self, e: usize, lam: [T; 3], coeffs: &[T]) -> [T; 2] {
        let g = basis_grads(self.degree, lam, &self.grads[e]);
        let mut out = [T::zero(); 2];
        for (&d, gi) in self.element_dofs(e).iter().zip(&g) {
            out[0] += coeffs[d] * gi[0];
            out[1] += coeffs[d] * gi[1];
        }
        out
    }

    /// Laplacian of the FE function inside element `e` (constant per element).
    pub fn laplacian_in_element(&self, e: usize, coeffs: &[T]) -> T {
        if self.degree == 1 {
            return T::zero();
        }
        let g = &self.grads[e];
        let d = |a: [T; 2], b: [T; 2]| a[0] * b[0] + a[1] * b[1];
        let dofs = self.element_dofs(e);
        let mut s = T::zero();
        for k in 0..3 {
            s += coeffs[dofs[k]] * T::lit(4.0) * d(g[k], g[k]);
            let (a, b) = ((k + 1) % 3, (k + 2) % 3);
            s += coeffs[dofs[3 + k]] * T::lit(8.0) * d(g[a], g[b]);
        }
        s
    }

    /// Values of the FE function at every quadrature point.
    pub fn eval_at_qp(&self, coeffs: &[T]) -> Vec<T> {
        let nloc = self.local_dofs();
        let nq = self.rule.len();
        let mut out = Vec::with_capacity(self.num_qp());
        for dofs in self.element_dofs.chunks(nloc) {
            for q in 0..nq {
                let b = &self.basis_ref[q * nloc..(q + 1) * nloc];
                out.push(dofs.iter().zip(b).map(|(&d, &v)| coeffs[d] * v).sum());
            }
        }
        out
    }

    /// `integral f` for `f` given at quadrature points.
    pub fn integrate_qp(&self, values: &[T]) -> T {
        let nq = self.rule.len();
        let mut total = T::zero();
        for (e, chunk) in values.chunks(nq).enumerate() {
            let s: T = chunk.iter().zip(&self.rule.weights).map(|(&v, &w)| v * w).sum();
            total += self.areas[e] * s;
        }
        total
    }

    /// Load vector `(f, psi_i)` for `f` given at quadrature points.
    pub fn load_from_qp(&self, values: &[T]) -> Vec<T> {
        let nloc = self.local_dofs();
        let nq = self.rule.len();
        let mut out = vec![T::zero(); self.dof_count];
        for (e, dofs) in self.element_dofs.chunks(nloc).enumerate() {
            for q in 0..nq {
                let f = values[e * nq + q] * self.rule.weights[q] * self.areas[e];
                let b = &self.basis_ref[q * nloc..(q + 1) * nloc];
                for (&d, &v) in dofs.iter().zip(b) {
                    out[d] += f * v;
                }
            }
        }
        out
    }

    fn empty_operator(&self) -> SparseOperator<T> {
        SparseOperator::from_pattern(self.dof_count, self.row_ptr.clone(), self.col_idx.clone())
    }

    /// `kappa * integral grad psi_i . grad psi_j` over all DOFs.
    pub fn assemble_stiffness(&self, kappa: T) -> SparseOperator<T> {
        let nloc = self.local_dofs();
        let mut op = self.empty_operator();
        let vals = op.values_mut();
        let mut local = vec![T::zero(); nloc * nloc];
        for e in 0..self.mesh.num_elements() {
            local.iter_mut().for_each(|v| *v = T::zero());
            for (lam, &w) in self.rule.points.iter().zip(&self.rule.weights) {
                let g = basis_grads(self.degree, *lam, &self.grads[e]);
                for i in 0..nloc {
                    for j in 0..nloc {
                        local[i * nloc + j] += w * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                    }
                }
            }
            let scale = kappa * self.areas[e];
            let pos = &self.elem_pos[e * nloc * nloc..(e + 1) * nloc * nloc];
            for (&p, &v) in pos.iter().zip(&local) {
                vals[p] += scale * v;
            }
        }
        op
    }

    /// `sum_q w_q weight(x_q) psi_i(x_q) psi_j(x_q)`.
    pub fn assemble_weighted_mass<F: FnMut(QuadPoint<T>) -> T>(
        &self,
        mut weight: F,
    ) -> Result<SparseOperator<T>, FemError> {
        let nq = self.rule.len();
        let mut values = Vec::with_capacity(self.num_qp());
        for (k, &x) in self.qp_coords.iter().enumerate() {
            values.push(weight(QuadPoint {
                element: k / nq,
                index: k % nq,
                x,
            }));
        }
        self.assemble_mass_from_qp(&values)
    }

    /// Weighted mass with the weight given at quadrature points.
    pub fn assemble_mass_from_qp(&self, weight: &[T]) -> Result<SparseOperator<T>, FemError> {
        if weight.len() != self.num_qp() {
            return Err(FemError::Dimension {
                expected: self.num_qp(),
                got: weight.len(),
            });
        }
        let nloc = self.local_dofs();
        let nq = self.rule.len();
        let mut op = self.empty_operator();
        let vals = op.values_mut();
        for e in 0..self.mesh.num_elements() {
            let pos = &self.elem_pos[e * nloc * nloc..(e + 1) * nloc * nloc];
            for q in 0..nq {
                let wv = weight[e * nq + q];
                if !wv.is_finite() {
                    let x = self.qp_coords[e * nq + q];
                    return Err(FemError::WeightSingular {
                        element: e,
                        x: x[0].to_f64_lossy(),
                        y: x[1].to_f64_lossy(),
                    });
                }
                let f = wv * self.rule.weights[q] * self.areas[e];
                if f == T::zero() {
                    continue;
                }
                let b = &self.basis_ref[q * nloc..(q + 1) * nloc];
                for i in 0..nloc {
                    let fi = f * b[i];
                    for j in 0..nloc {
                        vals[pos[i * nloc + j]] += fi * b[j];
                    }
                }
            }
        }
        Ok(op)
    }

    pub fn assemble_mass(&self) -> SparseOperator<T> {
        self.assemble_mass_from_qp(&vec![T::one(); self.num_qp()])
            .expect("unit weight is finite")
    }

    /// Interior block of a full operator.
    pub fn restrict_operator(&self, op: &SparseOperator<T>) -> SparseOperator<T> {
        op.submatrix(&self.free)
    }

    pub fn restrict_vector(&self, full: &[T]) -> Vec<T> {
        self.free.iter().map(|&i| full[i]).collect()
    }

    /// Full vector from interior values, zero on the boundary.
    pub fn extend_vector(&self, interior: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dof_count];
        for (&i, &v) in self.free.iter().zip(interior) {
            out[i] = v;
        }
        out
    }

    /// L2 norm and H1 seminorm.
    pub fn norms(&self, coeffs: &[T]) -> Result<Norms<T>, FemError> {
        self.check_len(coeffs)?;
        let m = self.assemble_mass();
        let k = self.assemble_stiffness(T::one());
        Ok(Norms {
            l2: m.quadratic_form(coeffs).max(T::zero()).sqrt(),
            h1_semi: k.quadratic_form(coeffs).max(T::zero()).sqrt(),
        })
    }

    /// Solves `-Delta u = f` with `u = 0` on the boundary, `f` given as a
    /// full-length load vector.
    pub fn solve_dirichlet_poisson(
        &self,
        load: &[T],
        tol: T,
        max_iter: usize,
    ) -> Result<Vec<T>, FemError> {
        self.check_len(load)?;
        if self.free.is_empty() {
            return Ok(vec![T::zero(); self.dof_count]);
        }
        let k = self.restrict_operator(&self.assemble_stiffness(T::one()));
        let b = self.restrict_vector(load);
        let out = cg_solve(&k, &b, None, tol, max_iter)?;
        Ok(self.extend_vector(&out.x))
    }

    /// Coefficients on this space of a function given on `coarse`, where this
    /// space's mesh was refined from `coarse`'s mesh. Exact for nested meshes.
    pub fn prolongate(&self, coarse: &FESpace<T>, coeffs: &[T]) -> Result<Vec<T>, FemError> {
        coarse.check_len(coeffs)?;
        if coarse.degree != self.degree {
            return Err(FemError::Degree(coarse.degree));
        }
        let parents = self.mesh.parent();
        let coords = self.dof_coords();
        let mut out = vec![T::zero(); self.dof_count];
        let mut done = vec![false; self.dof_count];
        for e in 0..self.mesh.num_elements() {
            let pe = parents[e].unwrap_or(e);
            if pe >= coarse.mesh.num_elements() {
                return Err(FemError::Dimension {
                    expected: coarse.mesh.num_elements(),
                    got: pe + 1,
                });
            }
            for &d in self.element_dofs(e) {
                if done[d] {
                    continue;
                }
                let lam = coarse.mesh.barycentric(pe, coords[d]);
                out[d] = coarse.eval_in_element(pe, lam, coeffs);
                done[d] = true;
            }
        }
        Ok(out)
    }
}

/// Basis values at barycentric point `lam`.
pub(crate) fn basis_values<T: Real>(degree: usize, lam: [T; 3]) -> Vec<T> {
    if degree == 1 {
        return lam.to_vec();
    }
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let mut v = Vec::with_capacity(6);
    for &l in &lam {
        v.push(l * (two * l - T::one()));
    }
    for k in 0..3 {
        v.push(four * lam[(k + 1) % 3] * lam[(k + 2) % 3]);
    }
    v
}

/// Basis gradients given the barycentric gradients of the element.
pub(crate) fn basis_grads<T: Real>(degree: usize, lam: [T; 3], g: &[[T; 2]; 3]) -> Vec<[T; 2]> {
    if degree == 1 {
        return g.to_vec();
    }
    let four = T::lit(4.0);
    let mut out = Vec::with_capacity(6);
    for k in 0..3 {
        let s = four * lam[k] - T::one();
        out.push([s * g[k][0], s * g[k][1]]);
    }
    for k in 0..3 {
        let (a, b) = ((k + 1) % 3, (k + 2) % 3);
        out.push([
            four * (lam[a] * g[b][0] + lam[b] * g[a][0]),
            four * (lam[a] * g[b][1] + lam[b] * g[a][1]),
        ]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::DomainSpec;
    use approx::assert_relative_eq;

    fn reference_triangle() -> Mesh<f64> {
        Mesh::from_domain(&DomainSpec::Explicit {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            elements: vec![[0, 1, 2]],
        })
        .unwrap()
    }

    fn square(levels: usize) -> Mesh<f64> {
        let mut m = Mesh::from_domain(&DomainSpec::unit_square()).unwrap();
        for _ in 0..levels {
            m = m.refine_uniform().unwrap();
        }
        m
    }

    #[test]
    fn dof_counts() {
        let coarse = FESpace::new(&square(0), 1).unwrap();
        assert_eq!(coarse.dof_count(), 4);
        assert_eq!(coarse.interior_count(), 0);
        assert!(matches!(coarse.require_interior(1), Err(FemError::SpaceTooSmall { .. })));
        let fine = FESpace::new(&square(2), 1).unwrap();
        assert_eq!(fine.dof_count(), 25);
        assert_eq!(fine.interior_count(), 9);
        let p2 = FESpace::new(&square(0), 2).unwrap();
        assert_eq!(p2.dof_count(), 9);
        assert_eq!(p2.interior_count(), 1); // midpoint of the shared diagonal
    }

    #[test]
    fn rejects_bad_degree_and_order() {
        let m = square(0);
        assert_eq!(FESpace::new(&m, 3).unwrap_err(), FemError::Degree(3));
        assert!(matches!(FESpace::build(&m, 2, 3), Err(FemError::Quadrature { .. })));
        assert!(matches!(FESpace::build(&m, 1, 7), Err(FemError::Quadrature { .. })));
    }

    #[test]
    fn reference_local_matrices() {
        let s = FESpace::new(&reference_triangle(), 1).unwrap();
        let k = s.assemble_stiffness(1.0);
        let expect_k = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        let m = s.assemble_mass();
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(k.get(i, j), expect_k[i][j], epsilon = 1e-15);
                let mij = if i == j { 2.0 } else { 1.0 } / 24.0;
                assert_relative_eq!(m.get(i, j), mij, epsilon = 1e-15);
            }
        }
        let k2 = s.assemble_stiffness(2.0);
        for i in 0..3 {
            let row: f64 = (0..3).map(|j| k.get(i, j)).sum();
            assert!(row.abs() < 1e-15);
            for j in 0..3 {
                assert_eq!(k2.get(i, j), 2.0 * k.get(i, j));
            }
        }
    }

    #[test]
    fn weighted_mass_linearity_and_errors() {
        let s = FESpace::new(&square(1), 2).unwrap();
        let m = s.assemble_mass();
        let z = s.assemble_weighted_mass(|_| 0.0).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        let c = s.assemble_weighted_mass(|_| 3.5).unwrap();
        for i in 0..s.dof_count() {
            for j in 0..s.dof_count() {
                assert_relative_eq!(c.get(i, j), 3.5 * m.get(i, j), epsilon = 1e-15);
            }
        }
        let err = s
            .assemble_weighted_mass(|q| if q.element == 2 { f64::NAN } else { 1.0 })
            .unwrap_err();
        assert!(matches!(err, FemError::WeightSingular { element: 2, .. }));
    }

    #[test]
    fn norms_of_linear_function() {
        let s = FESpace::new(&square(4), 1).unwrap();
        let c = s.interpolate(|p| p[0]);
        let n = s.norms(&c).unwrap();
        assert!((n.l2 - 1.0 / 3f64.sqrt()).abs() < 1e-3);
        assert_relative_eq!(n.h1_semi, 1.0, epsilon = 1e-12);
        let zero = s.norms(&vec![0.0; s.dof_count()]).unwrap();
        assert_eq!((zero.l2, zero.h1_semi), (0.0, 0.0));
        assert!(matches!(s.norms(&[1.0]), Err(FemError::Dimension { .. })));
    }

    #[test]
    fn p2_reproduces_quadratics() {
        let s = FESpace::new(&square(1), 2).unwrap();
        let f = |p: [f64; 2]| p[0] * p[0] - 2.0 * p[0] * p[1] + 0.5 * p[1];
        let c = s.interpolate(f);
        let vals = s.eval_at_qp(&c);
        for (v, x) in vals.iter().zip(s.qp_coords()) {
            assert_relative_eq!(*v, f(*x), epsilon = 1e-13);
        }
        // Laplacian of x^2 - 2xy + y/2 is 2
        for e in 0..s.mesh().num_elements() {
            assert_relative_eq!(s.laplacian_in_element(e, &c), 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn prolongation_is_exact_on_nested_meshes() {
        for degree in 1..=2 {
            let coarse_mesh = square(1);
            let fine_mesh = coarse_mesh.refine(&[0, 3]).unwrap();
            let coarse = FESpace::new(&coarse_mesh, degree).unwrap();
            let fine = FESpace::new(&fine_mesh, degree).unwrap();
            let c = coarse.interpolate(|p| (3.0 * p[0]).sin() + p[1]);
            let f = fine.prolongate(&coarse, &c).unwrap();
            let a = coarse.integrate_qp(&coarse.eval_at_qp(&c));
            let b = fine.integrate_qp(&fine.eval_at_qp(&f));
            assert_relative_eq!(a, b, epsilon = 1e-13);
        }
    }

    #[test]
    fn poisson_galerkin_orthogonality() {
        let s = FESpace::new(&square(3), 1).unwrap();
        let load = s.load_from_qp(&vec![1.0; s.num_qp()]);
        let u = s.solve_dirichlet_poisson(&load, 1e-14, 1000).unwrap();
        let k = s.assemble_stiffness(1.0);
        let r = k.apply(&u);
        for &i in s.free_dofs() {
            assert!((r[i] - load[i]).abs() <= 1e-10);
        }
    }

    #[test]
    fn operators_symmetric() {
        let s = FESpace::new(&square(2), 2).unwrap();
        for op in [s.assemble_stiffness(1.3), s.assemble_weighted_mass(|q| 1.0 + q.x[0]).unwrap()] {
            assert!(op.asymmetry() <= 1e-13 * op.max_abs());
        }
    }
}
