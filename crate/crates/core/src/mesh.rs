//! Simplicial meshes of boxes with facet topology and boundary tags.
//!
//! Facets are identified by their sorted vertex tuple and numbered in
//! lexicographic order of that tuple, so two meshes built from the same
//! vertex/element lists always produce identical numbering.

use std::collections::BTreeMap;

use crate::error::{PoroError, Result};

pub type Point = [f64; 3];

/// Axis-aligned box `[lo, hi]`; only the first `dim` components are used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxDomain {
    pub lo: Point,
    pub hi: Point,
}

impl BoxDomain {
    pub fn unit() -> Self {
        BoxDomain {
            lo: [0.0; 3],
            hi: [1.0; 3],
        }
    }

    pub fn volume(&self, dim: usize) -> f64 {
        (0..dim).map(|a| self.hi[a] - self.lo[a]).product()
    }
}

/// Labels of the box faces, indexed by `2 * axis + side`.
pub const BOX_FACE_TAGS: [&str; 6] = ["left", "right", "bottom", "top", "front", "back"];

#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    vertices: Vec<Point>,
    /// Flat element connectivity, stride `dim + 1`.
    elements: Vec<usize>,
    /// Flat sorted facet tuples, stride `dim`.
    facets: Vec<usize>,
    /// One or two incident elements per facet.
    facet_elements: Vec<(usize, Option<usize>)>,
    /// Local facet `i` of element `k` (opposite local vertex `i`), stride `dim + 1`.
    element_facets: Vec<usize>,
    boundary_tags: BTreeMap<usize, String>,
}

impl Mesh {
    /// Builds the facet topology for a list of simplices. Elements with
    /// negative orientation are reoriented; zero-volume elements are rejected.
    /// `tagger` receives the vertex coordinates of each boundary facet.
    pub fn from_simplices<F>(
        dim: usize,
        vertices: Vec<Point>,
        mut elements: Vec<usize>,
        tagger: F,
    ) -> Result<Mesh>
    where
        F: Fn(&[Point]) -> Option<String>,
    {
        if !(2..=3).contains(&dim) {
            return Err(PoroError::Config(format!("unsupported dimension {dim}")));
        }
        let nv = dim + 1;
        if elements.is_empty() || elements.len() % nv != 0 {
            return Err(PoroError::Mesh("element list is empty or ragged".into()));
        }
        if let Some(&bad) = elements.iter().find(|&&v| v >= vertices.len()) {
            return Err(PoroError::Mesh(format!("vertex index {bad} out of range")));
        }

        for (k, el) in elements.chunks_mut(nv).enumerate() {
            let s = signed_measure(dim, &vertices, el);
            if s.abs() <= 1e-14 * scale_of(dim, &vertices, el) {
                return Err(PoroError::Geometry {
                    element: k,
                    reason: "degenerate simplex".into(),
                });
            }
            if s < 0.0 {
                el.swap(dim - 1, dim);
            }
        }

        let n_el = elements.len() / nv;
        let mut local: Vec<(Vec<usize>, usize, usize)> = Vec::with_capacity(n_el * nv);
        for k in 0..n_el {
            let el = &elements[k * nv..(k + 1) * nv];
            for i in 0..nv {
                let mut f: Vec<usize> = (0..nv).filter(|&j| j != i).map(|j| el[j]).collect();
                f.sort_unstable();
                local.push((f, k, i));
            }
        }
        local.sort();

        let mut facets = Vec::new();
        let mut facet_elements: Vec<(usize, Option<usize>)> = Vec::new();
        let mut element_facets = vec![usize::MAX; n_el * nv];
        let mut idx = 0;
        while idx < local.len() {
            let mut end = idx + 1;
            while end < local.len() && local[end].0 == local[idx].0 {
                end += 1;
            }
            if end - idx > 2 {
                return Err(PoroError::Mesh(format!(
                    "facet {:?} shared by {} elements",
                    local[idx].0,
                    end - idx
                )));
            }
            let id = facet_elements.len();
            facets.extend_from_slice(&local[idx].0);
            let second = if end - idx == 2 { Some(local[idx + 1].1) } else { None };
            facet_elements.push((local[idx].1, second));
            for entry in &local[idx..end] {
                element_facets[entry.1 * nv + entry.2] = id;
            }
            idx = end;
        }

        let mut boundary_tags = BTreeMap::new();
        for (f, inc) in facet_elements.iter().enumerate() {
            if inc.1.is_none() {
                let pts: Vec<Point> = facets[f * dim..(f + 1) * dim]
                    .iter()
                    .map(|&v| vertices[v])
                    .collect();
                if let Some(tag) = tagger(&pts) {
                    boundary_tags.insert(f, tag);
                }
            }
        }

        Ok(Mesh {
            dim,
            vertices,
            elements,
            facets,
            facet_elements,
            element_facets,
            boundary_tags,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len() / (self.dim + 1)
    }

    pub fn num_facets(&self) -> usize {
        self.facet_elements.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    pub fn element(&self, k: usize) -> &[usize] {
        let nv = self.dim + 1;
        &self.elements[k * nv..(k + 1) * nv]
    }

    pub fn facet(&self, f: usize) -> &[usize] {
        &self.facets[f * self.dim..(f + 1) * self.dim]
    }

    /// Global facet ids of element `k`; entry `i` is the facet opposite local vertex `i`.
    pub fn element_facets(&self, k: usize) -> &[usize] {
        let nv = self.dim + 1;
        &self.element_facets[k * nv..(k + 1) * nv]
    }

    pub fn facet_elements(&self, f: usize) -> (usize, Option<usize>) {
        self.facet_elements[f]
    }

    pub fn is_boundary_facet(&self, f: usize) -> bool {
        self.facet_elements[f].1.is_none()
    }

    pub fn boundary_tag(&self, f: usize) -> Option<&str> {
        self.boundary_tags.get(&f).map(String::as_str)
    }

    pub fn boundary_tags(&self) -> &BTreeMap<usize, String> {
        &self.boundary_tags
    }

    pub fn boundary_facets(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_facets()).filter(move |&f| self.is_boundary_facet(f))
    }

    pub fn element_vertices(&self, k: usize) -> Vec<Point> {
        self.element(k).iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn centroid(&self, k: usize) -> Point {
        let el = self.element(k);
        let mut c = [0.0; 3];
        for &v in el {
            for a in 0..3 {
                c[a] += self.vertices[v][a];
            }
        }
        c.map(|x| x / el.len() as f64)
    }

    pub fn geometry(&self, k: usize) -> Result<ElementGeometry> {
        element_geometry(self, k)
    }

    /// Largest edge length of element `k`.
    pub fn diameter(&self, k: usize) -> f64 {
        let el = self.element(k);
        let mut h: f64 = 0.0;
        for i in 0..el.len() {
            for j in i + 1..el.len() {
                h = h.max(dist(&self.vertices[el[i]], &self.vertices[el[j]]));
            }
        }
        h
    }

    /// Maximum element diameter.
    pub fn h_max(&self) -> f64 {
        (0..self.num_elements()).map(|k| self.diameter(k)).fold(0.0, f64::max)
    }

    /// True iff the element graph through interior facets has one component.
    pub fn check_connected(&self) -> bool {
        self.num_components() == 1
    }

    /// Number of components of the element graph through interior facets.
    pub fn num_components(&self) -> usize {
        let labels = self.component_labels();
        labels.iter().copied().max().map_or(0, |m| m + 1)
    }

    /// Component index per element (components numbered by first element).
    pub fn component_labels(&self) -> Vec<usize> {
        let n = self.num_elements();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(a, b) in &self.facet_elements {
            if let Some(b) = b {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
        let mut ids = BTreeMap::new();
        (0..n)
            .map(|k| {
                let r = find(&mut parent, k);
                let next = ids.len();
                *ids.entry(r).or_insert(next)
            })
            .collect()
    }
}

/// Structured mesh of `box_`: `n` cells per axis, 2 triangles per square or
/// 6 Kuhn tetrahedra per cube. Boundary facets are tagged by box face.
pub fn build_structured_simplicial(n: usize, dim: usize, box_: BoxDomain) -> Result<Mesh> {
    if n == 0 {
        return Err(PoroError::Config("subdivisions must be at least 1".into()));
    }
    if !(2..=3).contains(&dim) {
        return Err(PoroError::Config(format!("unsupported dimension {dim}")));
    }
    for a in 0..dim {
        let ext = box_.hi[a] - box_.lo[a];
        if !(ext > 0.0 && ext.is_finite()) {
            return Err(PoroError::Config(format!("degenerate box extent on axis {a}")));
        }
    }

    let np = n + 1;
    let coord = |a: usize, i: usize| {
        if i == n {
            box_.hi[a]
        } else {
            box_.lo[a] + (box_.hi[a] - box_.lo[a]) * i as f64 / n as f64
        }
    };

    let mut vertices = Vec::new();
    let mut elements = Vec::new();
    if dim == 2 {
        for j in 0..np {
            for i in 0..np {
                vertices.push([coord(0, i), coord(1, j), 0.0]);
            }
        }
        let id = |i: usize, j: usize| j * np + i;
        for j in 0..n {
            for i in 0..n {
                let (v00, v10, v11, v01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                elements.extend_from_slice(&[v00, v10, v11]);
                elements.extend_from_slice(&[v00, v11, v01]);
            }
        }
    } else {
        for k in 0..np {
            for j in 0..np {
                for i in 0..np {
                    vertices.push([coord(0, i), coord(1, j), coord(2, k)]);
                }
            }
        }
        let id = |c: [usize; 3]| (c[2] * np + c[1]) * np + c[0];
        const PERMS: [[usize; 3]; 6] = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    for perm in PERMS {
                        let mut c = [i, j, k];
                        let mut tet = [id(c), 0, 0, 0];
                        for (s, &axis) in perm.iter().enumerate() {
                            c[axis] += 1;
                            tet[s + 1] = id(c);
                        }
                        elements.extend_from_slice(&tet);
                    }
                }
            }
        }
    }

    let tol = 1e-12 * (0..dim).map(|a| box_.hi[a] - box_.lo[a]).fold(0.0, f64::max);
    let tagger = move |pts: &[Point]| -> Option<String> {
        for a in 0..dim {
            if pts.iter().all(|p| (p[a] - box_.lo[a]).abs() <= tol) {
                return Some(BOX_FACE_TAGS[2 * a].to_string());
            }
            if pts.iter().all(|p| (p[a] - box_.hi[a]).abs() <= tol) {
                return Some(BOX_FACE_TAGS[2 * a + 1].to_string());
            }
        }
        None
    };
    Mesh::from_simplices(dim, vertices, elements, tagger)
}

/// Exact per-element geometry. Local facet `i` is opposite local vertex `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementGeometry {
    pub dim: usize,
    pub vertices: [Point; 4],
    pub volume: f64,
    pub facet_areas: [f64; 4],
    pub outward_normals: [Point; 4],
    pub barycentric_gradients: [Point; 4],
}

impl ElementGeometry {
    pub fn from_vertices(dim: usize, pts: &[Point]) -> Option<ElementGeometry> {
        debug_assert_eq!(pts.len(), dim + 1);
        let mut vertices = [[0.0; 3]; 4];
        vertices[..=dim].copy_from_slice(pts);

        // Rows of the inverse Jacobian are the gradients of λ_1..λ_d.
        let mut jac = [[0.0; 3]; 3];
        for c in 0..dim {
            for r in 0..dim {
                jac[r][c] = pts[c + 1][r] - pts[0][r];
            }
        }
        let det = det_n(dim, &jac);
        let scale = (1..=dim).map(|i| dist(&pts[0], &pts[i])).fold(0.0, f64::max);
        if !(det.abs() > 1e-14 * scale.powi(dim as i32)) {
            return None;
        }
        let inv = inverse_n(dim, &jac, det);
        let mut grads = [[0.0; 3]; 4];
        for i in 1..=dim {
            grads[i][..dim].copy_from_slice(&inv[i - 1][..dim]);
            for a in 0..dim {
                grads[0][a] -= inv[i - 1][a];
            }
        }
        let fact = if dim == 2 { 2.0 } else { 6.0 };
        let volume = det.abs() / fact;

        let mut facet_areas = [0.0; 4];
        let mut outward_normals = [[0.0; 3]; 4];
        for i in 0..=dim {
            let g = norm(&grads[i]);
            facet_areas[i] = dim as f64 * volume * g;
            outward_normals[i] = grads[i].map(|x| -x / g);
        }
        Some(ElementGeometry {
            dim,
            vertices,
            volume,
            facet_areas,
            outward_normals,
            barycentric_gradients: grads,
        })
    }

    pub fn centroid(&self) -> Point {
        let mut c = [0.0; 3];
        for v in &self.vertices[..=self.dim] {
            for a in 0..3 {
                c[a] += v[a];
            }
        }
        c.map(|x| x / (self.dim + 1) as f64)
    }

    /// Physical point of the barycentric coordinates `bary` (length `dim + 1`).
    pub fn map_point(&self, bary: &[f64]) -> Point {
        let mut x = [0.0; 3];
        for (i, &l) in bary.iter().enumerate() {
            for a in 0..3 {
                x[a] += l * self.vertices[i][a];
            }
        }
        x
    }
}

/// Geometry of element `k`; fails on degenerate simplices.
pub fn element_geometry(mesh: &Mesh, k: usize) -> Result<ElementGeometry> {
    if k >= mesh.num_elements() {
        return Err(PoroError::Mesh(format!("element {k} out of range")));
    }
    ElementGeometry::from_vertices(mesh.dim(), &mesh.element_vertices(k)).ok_or_else(|| {
        PoroError::Geometry {
            element: k,
            reason: "zero volume".into(),
        }
    })
}

pub(crate) fn dist(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

pub(crate) fn norm(a: &Point) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

pub(crate) fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn det_n(dim: usize, m: &[[f64; 3]; 3]) -> f64 {
    if dim == 2 {
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    } else {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

fn inverse_n(dim: usize, m: &[[f64; 3]; 3], det: f64) -> [[f64; 3]; 3] {
    let mut inv = [[0.0; 3]; 3];
    if dim == 2 {
        inv[0][0] = m[1][1] / det;
        inv[0][1] = -m[0][1] / det;
        inv[1][0] = -m[1][0] / det;
        inv[1][1] = m[0][0] / det;
    } else {
        for r in 0..3 {
            for c in 0..3 {
                let (r1, r2) = ((c + 1) % 3, (c + 2) % 3);
                let (c1, c2) = ((r + 1) % 3, (r + 2) % 3);
                inv[r][c] = (m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]) / det;
            }
        }
    }
    inv
}

fn signed_measure(dim: usize, vertices: &[Point], el: &[usize]) -> f64 {
    let mut jac = [[0.0; 3]; 3];
    for c in 0..dim {
        for r in 0..dim {
            jac[r][c] = vertices[el[c + 1]][r] - vertices[el[0]][r];
        }
    }
    det_n(dim, &jac)
}

fn scale_of(dim: usize, vertices: &[Point], el: &[usize]) -> f64 {
    let h = (1..=dim)
        .map(|i| dist(&vertices[el[0]], &vertices[el[i]]))
        .fold(0.0, f64::max);
    h.powi(dim as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn edge_count_oracle(mesh: &Mesh) -> usize {
        let mut edges = BTreeSet::new();
        for k in 0..mesh.num_elements() {
            let el = mesh.element(k);
            for i in 0..el.len() {
                for j in i + 1..el.len() {
                    edges.insert((el[i].min(el[j]), el[i].max(el[j])));
                }
            }
        }
        edges.len()
    }

    #[test]
    fn single_cell_square() {
        let m = build_structured_simplicial(1, 2, BoxDomain::unit()).unwrap();
        assert_eq!(m.num_elements(), 2);
        assert_eq!(m.num_vertices(), 4);
        assert_eq!(m.num_facets(), 5);
        assert_eq!(m.boundary_facets().count(), 4);
    }

    #[test]
    fn two_by_two_square_counts() {
        let m = build_structured_simplicial(2, 2, BoxDomain::unit()).unwrap();
        assert_eq!(m.num_elements(), 8);
        assert_eq!(m.num_vertices(), 9);
        assert_eq!(m.num_facets(), edge_count_oracle(&m));
        assert_eq!(m.num_facets(), 16);
    }

    #[test]
    fn kuhn_cube() {
        let m = build_structured_simplicial(1, 3, BoxDomain::unit()).unwrap();
        assert_eq!(m.num_elements(), 6);
        assert_eq!(m.num_vertices(), 8);
        let mut total = 0.0;
        for k in 0..6 {
            let g = m.geometry(k).unwrap();
            assert!((g.volume - 1.0 / 6.0).abs() < 1e-15);
            total += g.volume;
        }
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn right_triangle_geometry() {
        let g = ElementGeometry::from_vertices(2, &[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
            .unwrap();
        assert!((g.volume - 0.5).abs() < 1e-15);
        // Hypotenuse is opposite vertex 0.
        let s = 1.0 / 2f64.sqrt();
        assert!((g.outward_normals[0][0] - s).abs() < 1e-15);
        assert!((g.outward_normals[0][1] - s).abs() < 1e-15);
        assert!((g.facet_areas[0] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn reference_tetrahedron_geometry() {
        let g = ElementGeometry::from_vertices(
            3,
            &[[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        )
        .unwrap();
        assert!((g.volume - 1.0 / 6.0).abs() < 1e-15);
        let mut areas: Vec<f64> = g.facet_areas.to_vec();
        areas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for a in &areas[..3] {
            assert!((a - 0.5).abs() < 1e-15);
        }
        assert!((areas[3] - 3f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn closed_surface_and_gradient_sums() {
        for dim in [2, 3] {
            let m = build_structured_simplicial(3, dim, BoxDomain { lo: [0.0, -1.0, 0.5], hi: [2.0, 0.5, 1.0] })
                .unwrap();
            for k in 0..m.num_elements() {
                let g = m.geometry(k).unwrap();
                for a in 0..3 {
                    let s: f64 = (0..=dim).map(|i| g.facet_areas[i] * g.outward_normals[i][a]).sum();
                    let t: f64 = (0..=dim).map(|i| g.barycentric_gradients[i][a]).sum();
                    assert!(s.abs() < 1e-14, "closed surface {s}");
                    assert!(t.abs() < 1e-12, "gradient sum {t}");
                }
                assert!(g.volume > 0.0);
            }
        }
    }

    #[test]
    fn volumes_sum_to_box() {
        for dim in [2, 3] {
            let b = BoxDomain { lo: [0.0, 0.0, 0.0], hi: [1.5, 0.7, 2.0] };
            let m = build_structured_simplicial(4, dim, b).unwrap();
            let total: f64 = (0..m.num_elements()).map(|k| m.geometry(k).unwrap().volume).sum();
            assert!((total - b.volume(dim)).abs() <= 1e-13 * b.volume(dim));
        }
    }

    #[test]
    fn facet_incidence_and_tags() {
        for dim in [2, 3] {
            let m = build_structured_simplicial(3, dim, BoxDomain::unit()).unwrap();
            let mut seen = vec![0usize; m.num_facets()];
            for k in 0..m.num_elements() {
                for &f in m.element_facets(k) {
                    seen[f] += 1;
                }
            }
            for f in 0..m.num_facets() {
                let expected = if m.is_boundary_facet(f) { 1 } else { 2 };
                assert_eq!(seen[f], expected);
                assert_eq!(m.boundary_tag(f).is_some(), m.is_boundary_facet(f));
            }
            // 2n² boundary facets per box face.
            let per_face = if dim == 2 { 3 } else { 18 };
            for tag in &BOX_FACE_TAGS[..2 * dim] {
                let c = m.boundary_tags().values().filter(|t| t == tag).count();
                assert_eq!(c, per_face, "{tag}");
            }
        }
    }

    #[test]
    fn quasi_uniform() {
        for dim in [2, 3] {
            let m = build_structured_simplicial(4, dim, BoxDomain::unit()).unwrap();
            let d: Vec<f64> = (0..m.num_elements()).map(|k| m.diameter(k)).collect();
            let (lo, hi) = d.iter().fold((f64::MAX, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
            assert!(hi / lo <= 4.0);
        }
    }

    #[test]
    fn connectivity() {
        assert!(build_structured_simplicial(5, 2, BoxDomain::unit()).unwrap().check_connected());
        assert!(build_structured_simplicial(2, 3, BoxDomain::unit()).unwrap().check_connected());

        let single = Mesh::from_simplices(2, vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], vec![0, 1, 2], |_| None)
            .unwrap();
        assert!(single.check_connected());

        let mut verts = Vec::new();
        for shift in [0.0, 5.0] {
            verts.extend_from_slice(&[[shift, 0.0, 0.0], [shift + 1.0, 0.0, 0.0], [shift + 1.0, 1.0, 0.0], [shift, 1.0, 0.0]]);
        }
        let els = vec![0, 1, 2, 0, 2, 3, 4, 5, 6, 4, 6, 7];
        let two = Mesh::from_simplices(2, verts, els, |_| None).unwrap();
        assert!(!two.check_connected());
        assert_eq!(two.num_components(), 2);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(build_structured_simplicial(0, 2, BoxDomain::unit()).is_err());
        let flat = BoxDomain { lo: [0.0; 3], hi: [1.0, 0.0, 1.0] };
        assert!(build_structured_simplicial(2, 2, flat).is_err());
        let degenerate = Mesh::from_simplices(2, vec![[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]], vec![0, 1, 2], |_| None);
        assert!(degenerate.is_err());
    }

    #[test]
    fn reorients_negative_elements() {
        let m = Mesh::from_simplices(2, vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], vec![0, 2, 1], |_| None)
            .unwrap();
        assert!(m.geometry(0).unwrap().volume > 0.0);
        assert!(signed_measure(2, m.vertices(), m.element(0)) > 0.0);
    }
}
