//! Bernardi–Raugel displacement basis, lowest-order weak Galerkin pressure
//! machinery (RT0 weak gradient) and the global degree-of-freedom map.
//!
//! Local displacement dofs on an element are ordered vertex-major
//! (`i * dim + component`) followed by the `dim + 1` facet bubbles, bubble `i`
//! living on the facet opposite vertex `i`. Global displacement dofs are
//! `dim * vertex + component` followed by one bubble per global facet.
//! Each facet bubble uses a single global normal, pointing out of the first
//! incident element of the facet, so the space is conforming.
//!
//! Pressure dofs are element interiors first, then facets.

use nalgebra::{DMatrix, DVector};

use crate::error::{PoroError, Result};
use crate::mesh::{dot, ElementGeometry, Mesh, Point};
use crate::quadrature::{facet_rule, stiffness_rule, QuadRule};
use crate::scenario::{DisplacementBc, PressureBc, ScenarioSpec};

/// Local BR1 shape functions on one element.
#[derive(Debug, Clone)]
pub struct BRLocalBasis {
    pub geom: ElementGeometry,
    /// Globally oriented unit normal of each bubble (indexed by local facet).
    pub bubble_normals: [Point; 4],
}

impl BRLocalBasis {
    pub fn dim(&self) -> usize {
        self.geom.dim
    }

    pub fn num_dofs(&self) -> usize {
        let d = self.dim();
        d * (d + 1) + d + 1
    }

    /// Product of the barycentrics of the vertices on facet `i`.
    fn bubble_scalar(&self, bary: &[f64], i: usize) -> f64 {
        (0..=self.dim()).filter(|&j| j != i).map(|j| bary[j]).product()
    }

    fn bubble_scalar_grad(&self, bary: &[f64], i: usize) -> Point {
        let d = self.dim();
        let mut g = [0.0; 3];
        for j in (0..=d).filter(|&j| j != i) {
            let coeff: f64 = (0..=d).filter(|&k| k != i && k != j).map(|k| bary[k]).product();
            for a in 0..3 {
                g[a] += coeff * self.geom.barycentric_gradients[j][a];
            }
        }
        g
    }

    /// Value of local shape function `dof` at barycentric point `bary`.
    pub fn value(&self, bary: &[f64], dof: usize) -> Point {
        let d = self.dim();
        let mut v = [0.0; 3];
        if dof < d * (d + 1) {
            v[dof % d] = bary[dof / d];
        } else {
            let i = dof - d * (d + 1);
            let b = self.bubble_scalar(bary, i);
            v = self.bubble_normals[i].map(|n| n * b);
        }
        v
    }

    /// Jacobian `∂φ_a/∂x_c` of local shape function `dof`.
    pub fn gradient(&self, bary: &[f64], dof: usize) -> [[f64; 3]; 3] {
        let d = self.dim();
        let mut g = [[0.0; 3]; 3];
        if dof < d * (d + 1) {
            g[dof % d] = self.geom.barycentric_gradients[dof / d];
        } else {
            let i = dof - d * (d + 1);
            let gb = self.bubble_scalar_grad(bary, i);
            for a in 0..d {
                for c in 0..d {
                    g[a][c] = self.bubble_normals[i][a] * gb[c];
                }
            }
        }
        g
    }

    /// Values of all local shape functions at `bary`.
    pub fn values(&self, bary: &[f64]) -> Vec<Point> {
        (0..self.num_dofs()).map(|k| self.value(bary, k)).collect()
    }

    pub fn gradients(&self, bary: &[f64]) -> Vec<[[f64; 3]; 3]> {
        (0..self.num_dofs()).map(|k| self.gradient(bary, k)).collect()
    }
}

/// BR1 basis for element `k` of `mesh`.
pub fn br_basis_for(mesh: &Mesh, k: usize) -> Result<BRLocalBasis> {
    let geom = mesh.geometry(k)?;
    let mut bubble_normals = [[0.0; 3]; 4];
    for (i, &f) in mesh.element_facets(k).iter().enumerate() {
        let sign = if mesh.facet_elements(f).0 == k { 1.0 } else { -1.0 };
        bubble_normals[i] = geom.outward_normals[i].map(|x| sign * x);
    }
    Ok(BRLocalBasis { geom, bubble_normals })
}

/// BR1 basis using the element's own outward normals for the bubbles.
pub fn br_basis(geom: &ElementGeometry) -> BRLocalBasis {
    BRLocalBasis {
        geom: geom.clone(),
        bubble_normals: geom.outward_normals,
    }
}

/// `(1/|K|) ∫_K ∇·φ` for every local shape function.
pub fn avg_divergence(basis: &BRLocalBasis) -> Vec<f64> {
    avg_divergence_with(basis, &stiffness_rule(basis.dim()))
}

pub(crate) fn avg_divergence_with(basis: &BRLocalBasis, rule: &QuadRule) -> Vec<f64> {
    let d = basis.dim();
    let mut out = vec![0.0; basis.num_dofs()];
    for (bary, w) in rule.iter() {
        for (k, o) in out.iter_mut().enumerate() {
            let g = basis.gradient(bary, k);
            *o += w * (0..d).map(|a| g[a][a]).sum::<f64>();
        }
    }
    out
}

/// Lowest-order Raviart–Thomas field `g(x) = constant + slope (x − x_c)`
/// on one element (`x_c` the centroid).
#[derive(Debug, Clone, PartialEq)]
pub struct Rt0Field {
    pub constant: Point,
    pub slope: f64,
    pub center: Point,
}

impl Rt0Field {
    pub fn eval(&self, x: &Point) -> Point {
        let mut v = self.constant;
        for a in 0..3 {
            v[a] += self.slope * (x[a] - self.center[a]);
        }
        v
    }
}

/// RT0 mass matrix in the basis `e_1, …, e_d, x − x_c`.
pub fn rt0_mass(geom: &ElementGeometry) -> DMatrix<f64> {
    let d = geom.dim;
    let xc = geom.centroid();
    let mut m = DMatrix::zeros(d + 1, d + 1);
    for a in 0..d {
        m[(a, a)] = geom.volume;
    }
    let rule = crate::quadrature::simplex_rule(d, 2);
    let mut second = 0.0;
    let mut first = [0.0; 3];
    for (bary, w) in rule.iter() {
        let x = geom.map_point(bary);
        for a in 0..d {
            first[a] += w * (x[a] - xc[a]);
            second += w * (x[a] - xc[a]).powi(2);
        }
    }
    for a in 0..d {
        m[(a, d)] = first[a] * geom.volume;
        m[(d, a)] = m[(a, d)];
    }
    m[(d, d)] = second * geom.volume;
    m
}

/// Matrix `G` with `coeffs = G [p°, p∂_0, …, p∂_d]` solving the local weak
/// gradient system `(g, w)_K = (p∂, w·n)_∂K − (p°, ∇·w)_K` for all `w ∈ RT0(K)`.
pub fn weak_gradient_matrix(geom: &ElementGeometry) -> Result<DMatrix<f64>> {
    let d = geom.dim;
    let xc = geom.centroid();
    let mass = rt0_mass(geom);
    // rhs[(a, j)]: test function a against local pressure dof j.
    let mut rhs = DMatrix::zeros(d + 1, d + 2);
    for a in 0..d {
        for i in 0..=d {
            rhs[(a, 1 + i)] = geom.facet_areas[i] * geom.outward_normals[i][a];
        }
    }
    rhs[(d, 0)] = -(d as f64) * geom.volume;
    for i in 0..=d {
        // (x − x_c)·n_i is constant on facet i; evaluate at the facet centroid.
        let mut m = [0.0; 3];
        for j in (0..=d).filter(|&j| j != i) {
            for a in 0..3 {
                m[a] += geom.vertices[j][a] / d as f64;
            }
        }
        let rel = [m[0] - xc[0], m[1] - xc[1], m[2] - xc[2]];
        rhs[(d, 1 + i)] = geom.facet_areas[i] * dot(&rel, &geom.outward_normals[i]);
    }
    let lu = mass.lu();
    lu.solve(&rhs).ok_or_else(|| PoroError::Geometry {
        element: usize::MAX,
        reason: "singular RT0 mass matrix".into(),
    })
}

/// Weak gradient of the local pressure `(p°, [p∂_0..p∂_d])`.
pub fn wg_weak_gradient(geom: &ElementGeometry, interior: f64, facets: &[f64]) -> Result<Rt0Field> {
    let d = geom.dim;
    if facets.len() != d + 1 {
        return Err(PoroError::Config(format!("expected {} facet values, got {}", d + 1, facets.len())));
    }
    let g = weak_gradient_matrix(geom)?;
    let mut p = DVector::zeros(d + 2);
    p[0] = interior;
    for i in 0..=d {
        p[1 + i] = facets[i];
    }
    let c = g * p;
    let mut constant = [0.0; 3];
    constant[..d].copy_from_slice(&c.as_slice()[..d]);
    Ok(Rt0Field {
        constant,
        slope: c[d],
        center: geom.centroid(),
    })
}

/// Local WG Laplacian `(∇_w φ_i, ∇_w φ_j)_K` over `[p°, p∂_0..p∂_d]`.
pub fn wg_local_stiffness(geom: &ElementGeometry) -> Result<DMatrix<f64>> {
    let g = weak_gradient_matrix(geom)?;
    Ok(g.transpose() * rt0_mass(geom) * g)
}

/// Global numbering of displacement and pressure unknowns with Dirichlet
/// constraint sets and lifted boundary values at one time.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub dim: usize,
    pub n_vertices: usize,
    pub n_elements: usize,
    pub n_facets: usize,
    /// All-dof → free-dof map for displacement.
    pub disp_free: Vec<Option<usize>>,
    pub n_disp_free: usize,
    /// All-dof → free-dof map for pressure (interiors are always free).
    pub pres_free: Vec<Option<usize>>,
    pub n_pres_free: usize,
    /// Lifted Dirichlet values over all displacement dofs (zero on free dofs).
    pub disp_lift: Vec<f64>,
    /// Lifted Dirichlet values over all pressure dofs (zero on free dofs).
    pub pres_lift: Vec<f64>,
    pub time: f64,
}

impl DofMap {
    pub fn n_disp_all(&self) -> usize {
        self.dim * self.n_vertices + self.n_facets
    }

    pub fn n_pres_all(&self) -> usize {
        self.n_elements + self.n_facets
    }

    pub fn disp_vertex_dof(&self, v: usize, comp: usize) -> usize {
        self.dim * v + comp
    }

    pub fn disp_bubble_dof(&self, f: usize) -> usize {
        self.dim * self.n_vertices + f
    }

    pub fn pres_facet_dof(&self, f: usize) -> usize {
        self.n_elements + f
    }

    /// Global displacement dofs of element `k` in local order.
    pub fn element_disp_dofs(&self, mesh: &Mesh, k: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.dim * (self.dim + 1) + self.dim + 1);
        for &v in mesh.element(k) {
            for c in 0..self.dim {
                out.push(self.disp_vertex_dof(v, c));
            }
        }
        for &f in mesh.element_facets(k) {
            out.push(self.disp_bubble_dof(f));
        }
        out
    }

    /// Global pressure dofs `[interior, facet_0..facet_d]` of element `k`.
    pub fn element_pres_dofs(&self, mesh: &Mesh, k: usize) -> Vec<usize> {
        let mut out = vec![k];
        out.extend(mesh.element_facets(k).iter().map(|&f| self.pres_facet_dof(f)));
        out
    }

    pub fn is_disp_constrained(&self, dof: usize) -> bool {
        self.disp_free[dof].is_none()
    }

    pub fn n_pres_facet_free(&self) -> usize {
        self.n_pres_free - self.n_elements
    }

    /// Scatter free values and lifted values into an all-dof vector.
    pub fn expand_disp(&self, free: &[f64]) -> Vec<f64> {
        let mut out = self.disp_lift.clone();
        for (i, m) in self.disp_free.iter().enumerate() {
            if let Some(j) = m {
                out[i] = free[*j];
            }
        }
        out
    }

    pub fn expand_pres(&self, free: &[f64]) -> Vec<f64> {
        let mut out = self.pres_lift.clone();
        for (i, m) in self.pres_free.iter().enumerate() {
            if let Some(j) = m {
                out[i] = free[*j];
            }
        }
        out
    }

    pub fn restrict_disp(&self, all: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_disp_free];
        for (i, m) in self.disp_free.iter().enumerate() {
            if let Some(j) = m {
                out[*j] = all[i];
            }
        }
        out
    }

    pub fn restrict_pres(&self, all: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_pres_free];
        for (i, m) in self.pres_free.iter().enumerate() {
            if let Some(j) = m {
                out[*j] = all[i];
            }
        }
        out
    }

    /// Recomputes the lifted Dirichlet values at time `t`.
    pub fn lift(&mut self, mesh: &Mesh, scenario: &ScenarioSpec, t: f64) -> Result<()> {
        let d = self.dim;
        self.time = t;
        self.disp_lift.iter_mut().for_each(|v| *v = 0.0);
        self.pres_lift.iter_mut().for_each(|v| *v = 0.0);
        let rule = facet_rule(d);
        let mut disp_lifted = vec![false; self.n_vertices];
        for (&f, tag) in mesh.boundary_tags() {
            let nodes = mesh.facet(f);
            let pts: Vec<Point> = nodes.iter().map(|&v| mesh.vertex(v)).collect();
            let (area, normal) = facet_area_normal(mesh, f)?;
            if scenario.displacement_bc(tag)? == DisplacementBc::Dirichlet {
                let u_d = scenario
                    .data
                    .displacement
                    .as_ref()
                    .ok_or_else(|| PoroError::Config("missing displacement data".into()))?;
                for (&v, p) in nodes.iter().zip(&pts) {
                    if !disp_lifted[v] {
                        let val = u_d(p, t);
                        for c in 0..d {
                            let i = self.disp_vertex_dof(v, c);
                            self.disp_lift[i] = val[c];
                        }
                        disp_lifted[v] = true;
                    }
                }
                // Match the facet normal flux ∫_e u_h·n = ∫_e u_D·n.
                let mut flux = 0.0;
                for (bary, w) in rule.iter() {
                    let x = combine(&pts, bary);
                    flux += w * area * dot(&u_d(&x, t), &normal);
                }
                let vertex_flux: f64 = pts
                    .iter()
                    .map(|p| dot(&u_d(p, t), &normal) * area / d as f64)
                    .sum();
                let bubble_mean = area * bubble_facet_moment(d);
                let i = self.disp_bubble_dof(f);
                self.disp_lift[i] = (flux - vertex_flux) / bubble_mean;
            }
            if scenario.pressure_bc(tag)? == PressureBc::Dirichlet {
                let p_d = scenario
                    .data
                    .pressure
                    .as_ref()
                    .ok_or_else(|| PoroError::Config("missing pressure data".into()))?;
                let mean: f64 = rule.iter().map(|(bary, w)| w * p_d(&combine(&pts, bary), t)).sum();
                let i = self.pres_facet_dof(f);
                self.pres_lift[i] = mean;
            }
        }
        Ok(())
    }
}

/// `∫_e Π_{x_j ∈ e} λ_j / |e|` on a facet of a `dim`-simplex: `(d−1)!/(2d−1)!`.
pub fn bubble_facet_moment(dim: usize) -> f64 {
    if dim == 2 {
        1.0 / 6.0
    } else {
        2.0 / 120.0
    }
}

/// Area and globally oriented unit normal (out of the first incident element).
pub fn facet_area_normal(mesh: &Mesh, f: usize) -> Result<(f64, Point)> {
    let (k, _) = mesh.facet_elements(f);
    let geom = mesh.geometry(k)?;
    let i = mesh
        .element_facets(k)
        .iter()
        .position(|&g| g == f)
        .expect("facet belongs to its first element");
    Ok((geom.facet_areas[i], geom.outward_normals[i]))
}

pub(crate) fn combine(pts: &[Point], bary: &[f64]) -> Point {
    let mut x = [0.0; 3];
    for (p, &l) in pts.iter().zip(bary) {
        for a in 0..3 {
            x[a] += l * p[a];
        }
    }
    x
}

/// Constraint sets and lifted values for `scenario` at time `t`. A vertex
/// touching any displacement-Dirichlet facet is constrained.
pub fn dirichlet_constraints(mesh: &Mesh, scenario: &ScenarioSpec, t: f64) -> Result<DofMap> {
    scenario.validate(mesh)?;
    let d = mesh.dim();
    let (nv, ne, nf) = (mesh.num_vertices(), mesh.num_elements(), mesh.num_facets());
    let mut disp_constrained = vec![false; d * nv + nf];
    let mut pres_constrained = vec![false; ne + nf];
    for (&f, tag) in mesh.boundary_tags() {
        if scenario.displacement_bc(tag)? == DisplacementBc::Dirichlet {
            for &v in mesh.facet(f) {
                for c in 0..d {
                    disp_constrained[d * v + c] = true;
                }
            }
            disp_constrained[d * nv + f] = true;
        }
        if scenario.pressure_bc(tag)? == PressureBc::Dirichlet {
            pres_constrained[ne + f] = true;
        }
    }
    let number = |flags: &[bool]| -> (Vec<Option<usize>>, usize) {
        let mut next = 0;
        let map = flags
            .iter()
            .map(|&c| {
                if c {
                    None
                } else {
                    next += 1;
                    Some(next - 1)
                }
            })
            .collect();
        (map, next)
    };
    let (disp_free, n_disp_free) = number(&disp_constrained);
    let (pres_free, n_pres_free) = number(&pres_constrained);
    let mut map = DofMap {
        dim: d,
        n_vertices: nv,
        n_elements: ne,
        n_facets: nf,
        disp_free,
        n_disp_free,
        pres_free,
        n_pres_free,
        disp_lift: vec![0.0; d * nv + nf],
        pres_lift: vec![0.0; ne + nf],
        time: t,
    };
    map.lift(mesh, scenario, t)?;
    Ok(map)
}
