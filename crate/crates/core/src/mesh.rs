//! Conforming triangulations of polygonal domains with newest-vertex bisection.
//!
//! Every element stores a refinement edge, identified by the local index of
//! the vertex opposite to it. Bisecting an element splits its refinement edge
//! at the midpoint; both children take the edge opposite the new vertex as
//! their own refinement edge. Refinement first closes the set of edges to be
//! split (an element with any split edge must split its refinement edge), so
//! the resulting mesh is conforming without hanging nodes.
//!
//! Meshes are immutable values. [`Mesh::refine`] returns a new mesh whose
//! vertex list extends the input's, and records for every element the index
//! of the input element containing it.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use crate::error::MeshError;
use crate::scalar::Real;

/// Sorted vertex pair identifying an edge.
pub type EdgeKey = (usize, usize);

#[inline]
pub(crate) fn edge_key(a: usize, b: usize) -> EdgeKey {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Geometric description of the initial mesh.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec<T> {
    /// `[0,1]^2` split along the diagonal from `(0,0)` to `(1,1)`.
    UnitSquare,
    /// Axis-aligned rectangle, two triangles.
    Rectangle { min: [T; 2], max: [T; 2] },
    /// `(-1,1)^2` minus `[0,1) x (-1,0]`, six triangles with diagonals through the reentrant corner.
    LShape,
    /// User supplied triangulation; must be conforming and positively oriented.
    Explicit {
        vertices: Vec<[T; 2]>,
        elements: Vec<[usize; 3]>,
    },
}

impl<T: Real> DomainSpec<T> {
    pub fn unit_square() -> Self {
        DomainSpec::UnitSquare
    }

    /// `[0,a] x [0,b]`.
    pub fn rectangle(a: T, b: T) -> Self {
        DomainSpec::Rectangle {
            min: [T::zero(), T::zero()],
            max: [a, b],
        }
    }

    pub fn l_shape() -> Self {
        DomainSpec::LShape
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport<T> {
    pub h_max: T,
    pub h_min: T,
    /// Largest diameter over inscribed-circle diameter.
    pub max_ratio: T,
    pub conforming: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh<T> {
    vertices: Vec<[T; 2]>,
    elements: Vec<[usize; 3]>,
    refine_edge: Vec<u8>,
    boundary_edges: Vec<[usize; 2]>,
    generation: Vec<u32>,
    parent: Vec<Option<usize>>,
    vertex_parents: Vec<Option<[usize; 2]>>,
}

/// Twice the signed area of the triangle `abc`.
#[inline]
fn cross<T: Real>(a: [T; 2], b: [T; 2], c: [T; 2]) -> T {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

#[inline]
fn dist<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

impl<T: Real> Mesh<T> {
    /// Builds the initial mesh of a domain and assigns refinement edges.
    pub fn from_domain(domain: &DomainSpec<T>) -> Result<Self, MeshError> {
        let l = T::lit;
        let (vertices, elements) = match domain {
            DomainSpec::UnitSquare => (
                vec![[l(0.0), l(0.0)], [l(1.0), l(0.0)], [l(1.0), l(1.0)], [l(0.0), l(1.0)]],
                vec![[0, 1, 2], [0, 2, 3]],
            ),
            DomainSpec::Rectangle { min, max } => {
                if !(max[0] > min[0] && max[1] > min[1]) {
                    return Err(MeshError::Geometry(format!(
                        "rectangle has non-positive extent: min {min:?}, max {max:?}"
                    )));
                }
                (
                    vec![[min[0], min[1]], [max[0], min[1]], [max[0], max[1]], [min[0], max[1]]],
                    vec![[0, 1, 2], [0, 2, 3]],
                )
            }
            DomainSpec::LShape => (
                vec![
                    [l(-1.0), l(-1.0)],
                    [l(0.0), l(-1.0)],
                    [l(-1.0), l(0.0)],
                    [l(0.0), l(0.0)],
                    [l(1.0), l(0.0)],
                    [l(-1.0), l(1.0)],
                    [l(0.0), l(1.0)],
                    [l(1.0), l(1.0)],
                ],
                vec![[0, 1, 3], [0, 3, 2], [2, 3, 5], [3, 6, 5], [3, 4, 7], [3, 7, 6]],
            ),
            DomainSpec::Explicit { vertices, elements } => (vertices.clone(), elements.clone()),
        };
        let refine_edge = elements
            .iter()
            .map(|el| longest_edge(&vertices, el))
            .collect();
        Self::assemble(vertices, elements, refine_edge)
    }

    /// Validates raw arrays and derives boundary edges.
    fn assemble(
        vertices: Vec<[T; 2]>,
        elements: Vec<[usize; 3]>,
        refine_edge: Vec<u8>,
    ) -> Result<Self, MeshError> {
        if elements.is_empty() {
            return Err(MeshError::Geometry("mesh has no elements".into()));
        }
        for (i, el) in elements.iter().enumerate() {
            if el.iter().any(|&v| v >= vertices.len()) {
                return Err(MeshError::Geometry(format!(
                    "element {i} references a vertex outside 0..{}",
                    vertices.len()
                )));
            }
            if el[0] == el[1] || el[1] == el[2] || el[0] == el[2] {
                return Err(MeshError::Geometry(format!("element {i} has repeated vertices")));
            }
        }
        let n = elements.len();
        let mut mesh = Mesh {
            boundary_edges: Vec::new(),
            generation: vec![0; n],
            parent: vec![None; n],
            vertex_parents: vec![None; vertices.len()],
            vertices,
            elements,
            refine_edge,
        };
        mesh.check_orientation()?;
        mesh.boundary_edges = mesh.derive_boundary();
        mesh.audit_conformity()?;
        Ok(mesh)
    }

    fn check_orientation(&self) -> Result<(), MeshError> {
        for (i, el) in self.elements.iter().enumerate() {
            let [a, b, c] = el.map(|v| self.vertices[v]);
            let scale = dist(a, b).max(dist(b, c)).max(dist(a, c));
            let area2 = cross(a, b, c);
            if !(area2 > T::epsilon() * scale * scale) {
                return Err(MeshError::Geometry(format!(
                    "element {i} has non-positive signed area {}",
                    area2 / T::lit(2.0)
                )));
            }
        }
        Ok(())
    }

    fn edge_counts(&self) -> HashMap<EdgeKey, usize> {
        let mut counts = HashMap::with_capacity(self.elements.len() * 2);
        for el in &self.elements {
            for k in 0..3 {
                *counts
                    .entry(edge_key(el[(k + 1) % 3], el[(k + 2) % 3]))
                    .or_insert(0) += 1;
            }
        }
        counts
    }

    fn derive_boundary(&self) -> Vec<[usize; 2]> {
        let counts = self.edge_counts();
        let mut out = Vec::new();
        for el in &self.elements {
            for k in 0..3 {
                let (a, b) = (el[(k + 1) % 3], el[(k + 2) % 3]);
                if counts[&edge_key(a, b)] == 1 {
                    out.push([a, b]);
                }
            }
        }
        out
    }

    /// Full edge-incidence audit: interior edges are shared by exactly two
    /// elements, and no vertex hangs on an edge.
    pub fn audit_conformity(&self) -> Result<(), MeshError> {
        let counts = self.edge_counts();
        if let Some((e, c)) = counts.iter().find(|(_, &c)| c > 2) {
            return Err(MeshError::Conformity(format!("edge {e:?} is shared by {c} elements")));
        }
        // Edges seen from one side only must form the domain boundary: at every
        // vertex they come in pairs, and never two of them along the same ray
        // (that is the signature of a hanging node).
        let mut incident: HashMap<usize, Vec<usize>> = HashMap::new();
        for (&(a, b), &c) in &counts {
            if c == 1 {
                incident.entry(a).or_default().push(b);
                incident.entry(b).or_default().push(a);
            }
        }
        for (&v, nbrs) in &incident {
            if nbrs.len() % 2 != 0 {
                return Err(MeshError::Conformity(format!(
                    "vertex {v} touches {} unmatched edges",
                    nbrs.len()
                )));
            }
            let p = self.vertices[v];
            for (i, &a) in nbrs.iter().enumerate() {
                for &b in &nbrs[i + 1..] {
                    let (pa, pb) = (self.vertices[a], self.vertices[b]);
                    let da = [pa[0] - p[0], pa[1] - p[1]];
                    let db = [pb[0] - p[0], pb[1] - p[1]];
                    let c = da[0] * db[1] - da[1] * db[0];
                    let d = da[0] * db[0] + da[1] * db[1];
                    let scale = dist(p, pa) * dist(p, pb);
                    if c.abs() <= T::lit(1e-10) * scale && d > T::zero() {
                        return Err(MeshError::Conformity(format!(
                            "hanging node: edges {v}-{a} and {v}-{b} overlap"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[[T; 2]] {
        &self.vertices
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    /// Refinement-edge local index (the edge opposite that local vertex) per element.
    pub fn refinement_edges(&self) -> &[u8] {
        &self.refine_edge
    }

    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary_edges
    }

    pub fn generation(&self) -> &[u32] {
        &self.generation
    }

    /// Index of the containing element in the mesh this one was refined from.
    pub fn parent(&self) -> &[Option<usize>] {
        &self.parent
    }

    /// For vertices created by refinement, the endpoints of the bisected edge.
    pub fn vertex_parents(&self) -> &[Option<[usize; 2]>] {
        &self.vertex_parents
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element_coords(&self, e: usize) -> [[T; 2]; 3] {
        self.elements[e].map(|v| self.vertices[v])
    }

    pub fn area(&self, e: usize) -> T {
        let [a, b, c] = self.element_coords(e);
        cross(a, b, c) / T::lit(2.0)
    }

    /// Element diameter (longest edge).
    pub fn diameter(&self, e: usize) -> T {
        let [a, b, c] = self.element_coords(e);
        dist(a, b).max(dist(b, c)).max(dist(a, c))
    }

    /// Diameter of the inscribed circle.
    pub fn inscribed_diameter(&self, e: usize) -> T {
        let [a, b, c] = self.element_coords(e);
        let perimeter = dist(a, b) + dist(b, c) + dist(a, c);
        // r = 2A / P
        T::lit(2.0) * cross(a, b, c) / perimeter
    }

    pub fn total_area(&self) -> T {
        (0..self.num_elements()).map(|e| self.area(e)).sum()
    }

    pub fn centroid(&self, e: usize) -> [T; 2] {
        let [a, b, c] = self.element_coords(e);
        let third = T::one() / T::lit(3.0);
        [(a[0] + b[0] + c[0]) * third, (a[1] + b[1] + c[1]) * third]
    }

    /// Barycentric coordinates of `p` with respect to element `e`.
    pub fn barycentric(&self, e: usize, p: [T; 2]) -> [T; 3] {
        let [a, b, c] = self.element_coords(e);
        let total = cross(a, b, c);
        [cross(p, b, c) / total, cross(a, p, c) / total, cross(a, b, p) / total]
    }

    /// Euclidean distance from `p` to the closed triangle `e`.
    pub fn distance_to_element(&self, e: usize, p: [T; 2]) -> T {
        let lam = self.barycentric(e, p);
        if lam.iter().all(|&l| l >= T::zero()) {
            return T::zero();
        }
        let coords = self.element_coords(e);
        (0..3)
            .map(|k| segment_distance(p, coords[k], coords[(k + 1) % 3]))
            .fold(T::infinity(), T::min)
    }

    /// `h(x) = h_tau` sampled per element, and the quality metrics.
    pub fn quality(&self) -> QualityReport<T> {
        let mut h_max = T::zero();
        let mut h_min = T::infinity();
        let mut max_ratio = T::zero();
        for e in 0..self.num_elements() {
            let h = self.diameter(e);
            h_max = h_max.max(h);
            h_min = h_min.min(h);
            max_ratio = max_ratio.max(h / self.inscribed_diameter(e));
        }
        QualityReport {
            h_max,
            h_min,
            max_ratio,
            conforming: self.audit_conformity().is_ok() && self.check_orientation().is_ok(),
        }
    }

    pub fn h_max(&self) -> T {
        (0..self.num_elements())
            .map(|e| self.diameter(e))
            .fold(T::zero(), T::max)
    }

    /// Bisects every marked element at least once and closes the refinement so
    /// the result is conforming. The closure pass count is bounded by
    /// `100 * num_elements`.
    pub fn refine(&self, marked: &[usize]) -> Result<Self, MeshError> {
        self.refine_with_bound(marked, 100 * self.num_elements())
    }

    pub fn refine_with_bound(&self, marked: &[usize], bound: usize) -> Result<Self, MeshError> {
        for &m in marked {
            if m >= self.num_elements() {
                return Err(MeshError::ElementIndex {
                    index: m,
                    len: self.num_elements(),
                });
            }
        }
        let split = self.close_marking(marked, bound)?;

        let mut vertices = self.vertices.clone();
        let mut vertex_parents = self.vertex_parents.clone();
        let mut midpoints: HashMap<EdgeKey, usize> = HashMap::with_capacity(split.len());
        let mut elements = Vec::with_capacity(self.num_elements() + 2 * split.len());
        let mut refine_edge = Vec::with_capacity(elements.capacity());
        let mut generation = Vec::with_capacity(elements.capacity());
        let mut parent = Vec::with_capacity(elements.capacity());

        let mut stack: Vec<([usize; 3], u8, u32)> = Vec::new();
        for (e, el) in self.elements.iter().enumerate() {
            stack.push((*el, self.refine_edge[e], self.generation[e]));
            while let Some((tri, re, gen)) = stack.pop() {
                let r = re as usize;
                let peak = tri[r];
                let a = tri[(r + 1) % 3];
                let b = tri[(r + 2) % 3];
                let key = edge_key(a, b);
                if !split.contains_key(&key) {
                    elements.push(tri);
                    refine_edge.push(re);
                    generation.push(gen);
                    parent.push(Some(e));
                    continue;
                }
                let m = *midpoints.entry(key).or_insert_with(|| {
                    let (pa, pb) = (vertices[a], vertices[b]);
                    let half = T::lit(0.5);
                    vertices.push([(pa[0] + pb[0]) * half, (pa[1] + pb[1]) * half]);
                    vertex_parents.push(Some([a, b]));
                    vertices.len() - 1
                });
                // Pushed in reverse so the child at `a` is emitted first.
                stack.push(([peak, m, b], 1, gen + 1));
                stack.push(([peak, a, m], 2, gen + 1));
            }
        }

        let mut mesh = Mesh {
            vertices,
            elements,
            refine_edge,
            boundary_edges: Vec::new(),
            generation,
            parent,
            vertex_parents,
        };
        mesh.boundary_edges = mesh.derive_boundary();
        Ok(mesh)
    }

    /// Edges that must be bisected: refinement edges of marked elements, closed
    /// under "an element with a split edge splits its refinement edge".
    fn close_marking(&self, marked: &[usize], bound: usize) -> Result<HashMap<EdgeKey, ()>, MeshError> {
        let mut edge_elems: HashMap<EdgeKey, [usize; 2]> = HashMap::with_capacity(self.elements.len() * 2);
        for (e, el) in self.elements.iter().enumerate() {
            for k in 0..3 {
                let slot = edge_elems
                    .entry(edge_key(el[(k + 1) % 3], el[(k + 2) % 3]))
                    .or_insert([usize::MAX; 2]);
                if slot[0] == usize::MAX {
                    slot[0] = e;
                } else {
                    slot[1] = e;
                }
            }
        }
        let mut split: HashMap<EdgeKey, ()> = HashMap::new();
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &m in marked {
            let key = self.refinement_edge_key(m);
            if split.insert(key, ()).is_none() {
                queue.extend(edge_elems[&key].iter().filter(|&&x| x != usize::MAX));
            }
        }
        let mut steps = 0usize;
        while let Some(e) = queue.pop_front() {
            steps += 1;
            if steps > bound {
                return Err(MeshError::Closure { bound });
            }
            let key = self.refinement_edge_key(e);
            if split.insert(key, ()).is_none() {
                queue.extend(edge_elems[&key].iter().filter(|&&x| x != usize::MAX));
            }
        }
        Ok(split)
    }

    fn refinement_edge_key(&self, e: usize) -> EdgeKey {
        let el = self.elements[e];
        let r = self.refine_edge[e] as usize;
        edge_key(el[(r + 1) % 3], el[(r + 2) % 3])
    }

    /// One bisection of every element.
    pub fn bisect_all(&self) -> Result<Self, MeshError> {
        let all: Vec<usize> = (0..self.num_elements()).collect();
        self.refine(&all)
    }

    /// Uniform refinement: every edge is halved and every element split into four.
    pub fn refine_uniform(&self) -> Result<Self, MeshError> {
        let mid = self.bisect_all()?;
        let mut fine = mid.bisect_all()?;
        for p in fine.parent.iter_mut() {
            *p = p.and_then(|q| mid.parent[q]);
        }
        Ok(fine)
    }

    /// ASCII export: `vertices N elements M`, then `x y` lines, then `i j k re` lines.
    pub fn to_ascii(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "vertices {} elements {}", self.num_vertices(), self.num_elements());
        for v in &self.vertices {
            let _ = writeln!(s, "{} {}", v[0], v[1]);
        }
        for (el, re) in self.elements.iter().zip(&self.refine_edge) {
            let _ = writeln!(s, "{} {} {} {}", el[0], el[1], el[2], re);
        }
        s
    }

    /// Parses the format written by [`Mesh::to_ascii`].
    pub fn from_ascii(text: &str) -> Result<Self, MeshError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let perr = |line: usize, msg: &str| MeshError::Parse {
            line,
            msg: msg.to_string(),
        };
        let (hl, header) = lines.next().ok_or_else(|| perr(1, "empty input"))?;
        let toks: Vec<&str> = header.split_whitespace().collect();
        if toks.len() != 4 || toks[0] != "vertices" || toks[2] != "elements" {
            return Err(perr(hl, "expected `vertices N elements M`"));
        }
        let nv: usize = toks[1].parse().map_err(|_| perr(hl, "bad vertex count"))?;
        let ne: usize = toks[3].parse().map_err(|_| perr(hl, "bad element count"))?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, l) = lines.next().ok_or_else(|| perr(hl, "missing vertex lines"))?;
            let xs: Vec<f64> = l
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|_| perr(ln, "bad vertex coordinate"))?;
            if xs.len() != 2 {
                return Err(perr(ln, "expected `x y`"));
            }
            vertices.push([T::lit(xs[0]), T::lit(xs[1])]);
        }
        let mut elements = Vec::with_capacity(ne);
        let mut refine_edge = Vec::with_capacity(ne);
        for _ in 0..ne {
            let (ln, l) = lines.next().ok_or_else(|| perr(hl, "missing element lines"))?;
            let xs: Vec<usize> = l
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|_| perr(ln, "bad element index"))?;
            if xs.len() != 4 || xs[3] > 2 {
                return Err(perr(ln, "expected `i j k re` with re in 0..=2"));
            }
            elements.push([xs[0], xs[1], xs[2]]);
            refine_edge.push(xs[3] as u8);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(perr(ln, "trailing content"));
        }
        Self::assemble(vertices, elements, refine_edge)
    }
}

/// Longest edge, ties broken by the lowest opposite vertex index.
fn longest_edge<T: Real>(vertices: &[[T; 2]], el: &[usize; 3]) -> u8 {
    let len = |k: usize| dist(vertices[el[(k + 1) % 3]], vertices[el[(k + 2) % 3]]);
    let lmax = (0..3).map(len).fold(T::zero(), T::max);
    let tol = T::lit(1e-12) * lmax;
    (0..3)
        .filter(|&k| lmax - len(k) <= tol)
        .min_by_key(|&k| el[k])
        .expect("at least one longest edge") as u8
}

fn segment_distance<T: Real>(p: [T; 2], a: [T; 2], b: [T; 2]) -> T {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).max(T::zero()).min(T::one());
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}
