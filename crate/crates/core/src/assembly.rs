//! Sparse assembly of the strain stiffness, divergence coupling, pressure
//! mass and weak-Galerkin pressure stiffness, plus the per-step load vectors.
//!
//! `A1` is assembled without the `2μ` factor and `B°` without `α`; the
//! system module applies the scalings. With elementwise Lamé parameters the
//! strain term is weighted by `μ_K / μ_ref` (`μ_ref = max μ_K`), so `A1`
//! reduces to the plain strain stiffness in the homogeneous case.

use std::path::Path;

use crate::error::{PoroError, Result};
use crate::mesh::{dot, Mesh};
use crate::quadrature::{facet_rule, load_rule, stiffness_rule};
use crate::scenario::{DisplacementBc, PressureBc, ScenarioSpec};
use crate::sparse::{CooBuilder, CsrMatrix};
use crate::spaces::{avg_divergence_with, br_basis_for, wg_local_stiffness, DofMap};

/// A material coefficient that is either constant or given per element.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Uniform(f64),
    PerElement(Vec<f64>),
}

impl Coefficient {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            Coefficient::Uniform(v) => *v,
            Coefficient::PerElement(v) => v[k],
        }
    }

    pub fn is_uniform(&self) -> bool {
        match self {
            Coefficient::Uniform(_) => true,
            Coefficient::PerElement(v) => v.windows(2).all(|w| w[0] == w[1]),
        }
    }

    pub fn max(&self) -> f64 {
        match self {
            Coefficient::Uniform(v) => *v,
            Coefficient::PerElement(v) => v.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn min(&self) -> f64 {
        match self {
            Coefficient::Uniform(v) => *v,
            Coefficient::PerElement(v) => v.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }

    fn values(&self) -> Vec<f64> {
        match self {
            Coefficient::Uniform(v) => vec![*v],
            Coefficient::PerElement(v) => v.clone(),
        }
    }
}

/// Lamé parameters from Young's modulus and Poisson ratio, `(μ, λ)`.
pub fn lame_from_young(e: f64, nu: f64) -> (f64, f64) {
    (e / (2.0 * (1.0 + nu)), nu * e / ((1.0 - 2.0 * nu) * (1.0 + nu)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    pub mu: Coefficient,
    pub lambda: Coefficient,
    pub kappa: Coefficient,
    pub alpha: f64,
    pub c0: f64,
    pub dt: f64,
}

impl PhysicalParams {
    pub fn uniform(mu: f64, lambda: f64, alpha: f64, c0: f64, kappa: f64, dt: f64) -> Self {
        PhysicalParams {
            mu: Coefficient::Uniform(mu),
            lambda: Coefficient::Uniform(lambda),
            kappa: Coefficient::Uniform(kappa),
            alpha,
            c0,
            dt,
        }
    }

    pub fn from_young(e: f64, nu: f64, alpha: f64, c0: f64, kappa: f64, dt: f64) -> Self {
        let (mu, lambda) = lame_from_young(e, nu);
        Self::uniform(mu, lambda, alpha, c0, kappa, dt)
    }

    /// Reference shear modulus used for the scalings, `max_K μ_K`.
    pub fn mu_ref(&self) -> f64 {
        self.mu.max()
    }

    /// `ε = 2μ/λ` when it is the same on every element.
    pub fn uniform_eps(&self, n_elements: usize) -> Option<f64> {
        let eps: Vec<f64> = (0..n_elements).map(|k| 2.0 * self.mu.at(k) / self.lambda.at(k)).collect();
        let first = *eps.first()?;
        eps.iter().all(|&e| (e - first).abs() <= 1e-14 * first).then_some(first)
    }

    /// Largest `ε_K = 2μ_K/λ_K`.
    pub fn eps_max(&self, n_elements: usize) -> f64 {
        (0..n_elements)
            .map(|k| 2.0 * self.mu.at(k) / self.lambda.at(k))
            .fold(0.0, f64::max)
    }

    pub fn validate(&self, n_elements: usize) -> Result<()> {
        let check = |name: &str, c: &Coefficient| -> Result<()> {
            if let Coefficient::PerElement(v) = c {
                if v.len() != n_elements {
                    return Err(PoroError::Config(format!(
                        "{name} has {} entries for {n_elements} elements",
                        v.len()
                    )));
                }
            }
            if c.values().iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(PoroError::Config(format!("{name} must be positive")));
            }
            Ok(())
        };
        check("mu", &self.mu)?;
        check("lambda", &self.lambda)?;
        check("kappa", &self.kappa)?;
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(PoroError::Config(format!("alpha = {} outside (0, 1]", self.alpha)));
        }
        if !(self.c0 >= 0.0 && self.c0.is_finite()) {
            return Err(PoroError::Config(format!("c0 = {} must be nonnegative", self.c0)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(PoroError::Config(format!("dt = {} must be positive", self.dt)));
        }
        Ok(())
    }
}

/// Assembled matrices for one mesh, parameter set and constraint pattern.
///
/// Matrices without suffix act on free dofs; `*_full` versions act on all
/// dofs and are used for Dirichlet lifting and previous-step terms.
#[derive(Debug, Clone)]
pub struct AssembledBlocks {
    pub a1: CsrMatrix,
    pub bcirc: CsrMatrix,
    /// Diagonal of `Mp°`, the element volumes.
    pub mp: Vec<f64>,
    /// κ-weighted WG pressure stiffness (no Δt) on free pressure dofs.
    pub ap: CsrMatrix,
    /// `c0·blockdiag(Mp°, 0) + Δt·Ap` on free pressure dofs.
    pub d: CsrMatrix,
    pub a1_full: CsrMatrix,
    pub bcirc_full: CsrMatrix,
    pub ap_full: CsrMatrix,
    pub d_full: CsrMatrix,
    /// Diagonal of `Σ_K |K|·2μ_ref/λ_K`; equals `ε·Mp°` for uniform ε.
    pub m_eps: Vec<f64>,
    /// Diagonal `|K|·μ_ref/μ_K` approximating `B° A1⁻¹ B°ᵀ`; equals `Mp°` for uniform μ.
    pub m_schur: Vec<f64>,
    pub mu_ref: f64,
    pub alpha: f64,
    pub dt: f64,
    pub c0: f64,
}

impl AssembledBlocks {
    pub fn n_disp(&self) -> usize {
        self.a1.nrows()
    }

    pub fn n_pres(&self) -> usize {
        self.d.nrows()
    }

    pub fn n_elements(&self) -> usize {
        self.mp.len()
    }

    /// `Σ_K (avg div φ_i)(avg div φ_j)|K|`, i.e. `(B°)ᵀ (Mp°)⁻¹ B°`, assembled
    /// explicitly (used by the direct two-field solver and checks).
    pub fn a0(&self) -> CsrMatrix {
        weighted_normal_product(&self.bcirc, &self.mp.iter().map(|v| 1.0 / v).collect::<Vec<_>>())
    }

    /// `(B°)ᵀ diag(w) B°` on free displacement dofs.
    pub fn bt_diag_b(&self, w: &[f64]) -> CsrMatrix {
        weighted_normal_product(&self.bcirc, w)
    }

    /// Writes `A1`, `B°`, `D` and `Mp°` in MatrixMarket format into `dir`.
    pub fn dump_matrix_market(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| PoroError::io(dir, e))?;
        self.a1.write_matrix_market(dir.join("A1.mtx"))?;
        self.bcirc.write_matrix_market(dir.join("Bcirc.mtx"))?;
        self.d.write_matrix_market(dir.join("D.mtx"))?;
        CsrMatrix::from_diagonal(&self.mp).write_matrix_market(dir.join("Mp.mtx"))
    }
}

/// `Bᵀ diag(w) B` for a matrix `B` with rows indexed by `w`.
pub fn weighted_normal_product(b: &CsrMatrix, w: &[f64]) -> CsrMatrix {
    let mut coo = CooBuilder::new(b.ncols(), b.ncols());
    for (k, &wk) in w.iter().enumerate() {
        let (cols, vals) = b.row(k);
        for (&i, &vi) in cols.iter().zip(vals) {
            for (&j, &vj) in cols.iter().zip(vals) {
                coo.push(i, j, wk * vi * vj);
            }
        }
    }
    coo.build()
}

fn sym_grad(g: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut e = [[0.0; 3]; 3];
    for a in 0..3 {
        for c in 0..3 {
            e[a][c] = 0.5 * (g[a][c] + g[c][a]);
        }
    }
    e
}

/// Assembles all matrices on the free dofs of `dofs`.
pub fn assemble_blocks(mesh: &Mesh, dofs: &DofMap, params: &PhysicalParams) -> Result<AssembledBlocks> {
    let ne = mesh.num_elements();
    params.validate(ne)?;
    if params.c0 == 0.0 && dofs.n_pres_free == dofs.n_pres_all() {
        return Err(PoroError::Config(
            "c0 = 0 requires a pressure Dirichlet boundary part".into(),
        ));
    }
    let d = mesh.dim();
    let nd = dofs.n_disp_all();
    let np = dofs.n_pres_all();
    let nloc = d * (d + 1) + d + 1;
    let mu_ref = params.mu_ref();
    let rule = stiffness_rule(d);

    let mut a1 = CooBuilder::with_capacity(nd, nd, ne * nloc * nloc);
    let mut bc = CooBuilder::with_capacity(ne, nd, ne * nloc);
    let mut ap = CooBuilder::with_capacity(np, np, ne * (d + 2) * (d + 2));
    let mut mp = vec![0.0; ne];
    let mut m_eps = vec![0.0; ne];
    let mut m_schur = vec![0.0; ne];

    for k in 0..ne {
        let basis = br_basis_for(mesh, k).map_err(|e| match e {
            PoroError::Geometry { reason, .. } => PoroError::Geometry { element: k, reason },
            other => other,
        })?;
        let vol = basis.geom.volume;
        let gdofs = dofs.element_disp_dofs(mesh, k);
        let weight = params.mu.at(k) / mu_ref;

        let mut local = vec![0.0; nloc * nloc];
        for (bary, w) in rule.iter() {
            let strains: Vec<[[f64; 3]; 3]> = basis.gradients(bary).iter().map(sym_grad).collect();
            for i in 0..nloc {
                for j in i..nloc {
                    let mut s = 0.0;
                    for a in 0..d {
                        for c in 0..d {
                            s += strains[i][a][c] * strains[j][a][c];
                        }
                    }
                    local[i * nloc + j] += w * vol * s;
                }
            }
        }
        for i in 0..nloc {
            for j in i..nloc {
                let v = weight * local[i * nloc + j];
                a1.push(gdofs[i], gdofs[j], v);
                if i != j {
                    a1.push(gdofs[j], gdofs[i], v);
                }
            }
        }

        let div = avg_divergence_with(&basis, &rule);
        for (i, &g) in gdofs.iter().enumerate() {
            if div[i] != 0.0 {
                bc.push(k, g, vol * div[i]);
            }
        }

        let kloc = wg_local_stiffness(&basis.geom).map_err(|_| PoroError::Geometry {
            element: k,
            reason: "singular RT0 mass matrix".into(),
        })?;
        let pdofs = dofs.element_pres_dofs(mesh, k);
        let kappa = params.kappa.at(k);
        for (i, &gi) in pdofs.iter().enumerate() {
            for (j, &gj) in pdofs.iter().enumerate() {
                ap.push(gi, gj, kappa * kloc[(i, j)]);
            }
        }

        mp[k] = vol;
        m_eps[k] = vol * 2.0 * mu_ref / params.lambda.at(k);
        m_schur[k] = vol * mu_ref / params.mu.at(k);
    }

    let a1_full = a1.build();
    let bcirc_full = bc.build();
    let ap_full = ap.build();
    let mut mass = vec![0.0; np];
    for k in 0..ne {
        mass[k] = params.c0 * mp[k];
    }
    let d_full = CsrMatrix::linear_combination(params.dt, &ap_full, 1.0, &CsrMatrix::from_diagonal(&mass));

    let elem_map: Vec<Option<usize>> = (0..ne).map(Some).collect();
    let (uf, nuf) = (&dofs.disp_free, dofs.n_disp_free);
    let (pf, npf) = (&dofs.pres_free, dofs.n_pres_free);
    Ok(AssembledBlocks {
        a1: a1_full.select(uf, nuf, uf, nuf),
        bcirc: bcirc_full.select(&elem_map, ne, uf, nuf),
        mp,
        ap: ap_full.select(pf, npf, pf, npf),
        d: d_full.select(pf, npf, pf, npf),
        a1_full,
        bcirc_full,
        ap_full,
        d_full,
        m_eps,
        m_schur,
        mu_ref,
        alpha: params.alpha,
        dt: params.dt,
        c0: params.c0,
    })
}

/// Load vectors over all dofs (no Dirichlet lifting applied).
#[derive(Debug, Clone, PartialEq)]
pub struct LoadVectors {
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
}

impl LoadVectors {
    pub fn b1_free(&self, dofs: &DofMap) -> Vec<f64> {
        dofs.restrict_disp(&self.b1)
    }

    pub fn b2_free(&self, dofs: &DofMap) -> Vec<f64> {
        dofs.restrict_pres(&self.b2)
    }
}

/// Previous-step fields over all dofs.
#[derive(Debug, Clone, PartialEq)]
pub struct PreviousStep {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
}

impl PreviousStep {
    pub fn zero(dofs: &DofMap) -> Self {
        PreviousStep {
            u: vec![0.0; dofs.n_disp_all()],
            p: vec![0.0; dofs.n_pres_all()],
        }
    }
}

/// `b1 = (f, v) + (t_N, v)_{Γ_uN}` and
/// `b2 = −Δt(s, q°) − α(∇·u^{n−1}, q°) − c0(p°^{n−1}, q°) − Δt(p_N, q∂)_{Γ_pN}`
/// at time `t`, over all dofs.
pub fn assemble_rhs(
    mesh: &Mesh,
    dofs: &DofMap,
    params: &PhysicalParams,
    scenario: &ScenarioSpec,
    t: f64,
    prev: &PreviousStep,
    blocks: &AssembledBlocks,
) -> Result<LoadVectors> {
    let d = mesh.dim();
    let data = &scenario.data;
    let missing = |name: &str| PoroError::Config(format!("scenario '{}' is missing the {name} data function", scenario.name));
    let f = data.body_force.as_ref().ok_or_else(|| missing("body_force"))?;
    let s = data.source.as_ref().ok_or_else(|| missing("source"))?;
    let mut b1 = vec![0.0; dofs.n_disp_all()];
    let mut b2 = vec![0.0; dofs.n_pres_all()];
    let rule = load_rule(d);

    for k in 0..mesh.num_elements() {
        let basis = br_basis_for(mesh, k)?;
        let vol = basis.geom.volume;
        let gdofs = dofs.element_disp_dofs(mesh, k);
        let mut src = 0.0;
        for (bary, w) in rule.iter() {
            let x = basis.geom.map_point(bary);
            let fx = f(&x, t);
            for (i, &g) in gdofs.iter().enumerate() {
                b1[g] += w * vol * dot(&fx, &basis.value(bary, i));
            }
            src += w * vol * s(&x, t);
        }
        b2[k] -= params.dt * src;
    }

    let frule = facet_rule(d);
    for (&fct, tag) in mesh.boundary_tags() {
        let traction = scenario.displacement_bc(tag)? == DisplacementBc::Traction;
        let flux = scenario.pressure_bc(tag)? == PressureBc::Flux;
        if !traction && !flux {
            continue;
        }
        let (k, _) = mesh.facet_elements(fct);
        let basis = br_basis_for(mesh, k)?;
        let li = mesh.element_facets(k).iter().position(|&g| g == fct).expect("facet of element");
        let area = basis.geom.facet_areas[li];
        let normal = basis.geom.outward_normals[li];
        let gdofs = dofs.element_disp_dofs(mesh, k);
        for (fb, w) in frule.iter() {
            let mut bary = [0.0; 4];
            for (slot, j) in (0..=d).filter(|&j| j != li).enumerate() {
                bary[j] = fb[slot];
            }
            let bary = &bary[..=d];
            let x = basis.geom.map_point(bary);
            if traction {
                let tn = data.traction.as_ref().ok_or_else(|| missing("traction"))?(&x, t, &normal);
                for (i, &g) in gdofs.iter().enumerate() {
                    b1[g] += w * area * dot(&tn, &basis.value(bary, i));
                }
            }
            if flux {
                let pn = data.flux.as_ref().ok_or_else(|| missing("flux"))?(&x, t, &normal);
                b2[dofs.pres_facet_dof(fct)] -= params.dt * w * area * pn;
            }
        }
    }

    let div_prev = blocks.bcirc_full.mul_vec(&prev.u);
    for k in 0..mesh.num_elements() {
        b2[k] -= params.alpha * div_prev[k] + params.c0 * blocks.mp[k] * prev.p[k];
    }
    Ok(LoadVectors { b1, b2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_simplicial, BoxDomain};
    use crate::mesh::Point;
    use crate::scenario::ProblemData;
    use crate::spaces::dirichlet_constraints;
    use nalgebra::SymmetricEigen;
    use std::sync::Arc;

    fn setup(n: usize, dim: usize, mixed: bool) -> (Mesh, DofMap, AssembledBlocks) {
        let mesh = build_structured_simplicial(n, dim, BoxDomain::unit()).unwrap();
        let s = if mixed {
            ScenarioSpec::mixed_right_neumann(dim, ProblemData::zero())
        } else {
            ScenarioSpec::pure_dirichlet(dim, ProblemData::zero())
        };
        let dofs = dirichlet_constraints(&mesh, &s, 0.0).unwrap();
        let params = PhysicalParams::uniform(1.0, 1.0, 1.0, 1.0, 1.0, 1e-3);
        let blocks = assemble_blocks(&mesh, &dofs, &params).unwrap();
        (mesh, dofs, blocks)
    }

    #[test]
    fn mass_on_two_triangles() {
        let (_, _, b) = setup(1, 2, false);
        assert_eq!(b.mp, vec![0.5, 0.5]);
    }

    #[test]
    fn lame_conversion() {
        let (mu, lambda) = lame_from_young(2.5, 0.25);
        assert!((mu - 1.0).abs() < 1e-15 && (lambda - 1.0).abs() < 1e-15);
    }

    #[test]
    fn a0_identity_entrywise() {
        for (dim, n) in [(2, 4), (3, 2)] {
            let (mesh, dofs, b) = setup(n, dim, false);
            // Oracle: Σ_K |K| avgdiv_i avgdiv_j from the facet-formula for bubbles.
            let mut oracle = nalgebra::DMatrix::zeros(dofs.n_disp_all(), dofs.n_disp_all());
            let moment = if dim == 2 { 1.0 / 6.0 } else { 1.0 / 60.0 };
            for k in 0..mesh.num_elements() {
                let basis = br_basis_for(&mesh, k).unwrap();
                let g = &basis.geom;
                let mut div = vec![];
                for i in 0..=dim {
                    for a in 0..dim {
                        div.push(g.barycentric_gradients[i][a]);
                    }
                }
                for i in 0..=dim {
                    div.push(dot(&basis.bubble_normals[i], &g.outward_normals[i]) * g.facet_areas[i] * moment / g.volume);
                }
                let gd = dofs.element_disp_dofs(&mesh, k);
                for i in 0..gd.len() {
                    for j in 0..gd.len() {
                        oracle[(gd[i], gd[j])] += g.volume * div[i] * div[j];
                    }
                }
            }
            let a0_full = weighted_normal_product(&b.bcirc_full, &b.mp.iter().map(|v| 1.0 / v).collect::<Vec<_>>()).to_dense();
            let diff = (&a0_full - &oracle).abs().max();
            assert!(diff <= 1e-13, "dim {dim}: {diff}");
        }
    }

    #[test]
    fn a1_symmetric_positive_definite() {
        for (dim, n, mixed) in [(2, 3, false), (2, 3, true), (3, 1, false), (3, 2, true)] {
            let (_, _, b) = setup(n, dim, mixed);
            assert!(b.a1.asymmetry() <= 1e-13 * b.a1.max_abs().max(1.0));
            if b.a1.nrows() > 0 {
                let eig = SymmetricEigen::new(b.a1.to_dense()).eigenvalues;
                assert!(eig.min() > 1e-8, "dim {dim} mixed {mixed}: {}", eig.min());
            }
        }
    }

    #[test]
    fn rigid_translations_have_zero_divergence() {
        let (mesh, dofs, b) = setup(3, 2, false);
        for c in 0..2 {
            let mut u = vec![0.0; dofs.n_disp_all()];
            for v in 0..mesh.num_vertices() {
                u[dofs.disp_vertex_dof(v, c)] = 1.0;
            }
            let r = b.bcirc_full.mul_vec(&u);
            assert!(r.iter().all(|v| v.abs() < 1e-14));
        }
    }

    #[test]
    fn constant_pressure_in_null_space_for_pure_dirichlet() {
        for dim in [2, 3] {
            let (_, _, b) = setup(2, dim, false);
            let r = b.bcirc.tr_mul_vec(&vec![1.0; b.n_elements()]);
            let scale = b.bcirc.max_abs();
            assert!(crate::linalg::norm2(&r) <= 1e-12 * scale);
        }
    }

    #[test]
    fn mixed_divergence_has_full_column_rank() {
        let (_, _, b) = setup(3, 2, true);
        let bt = b.bcirc.transpose().to_dense();
        let sv = bt.singular_values();
        assert!(sv.min() / sv.max() > 1e-6);
    }

    #[test]
    fn d_structure() {
        let (mesh, dofs, b) = setup(2, 2, true);
        let dd = b.d.to_dense();
        let ap = b.ap.to_dense();
        for i in 0..b.n_pres() {
            for j in 0..b.n_pres() {
                let mass = if i == j && i < mesh.num_elements() { b.mp[i] } else { 0.0 };
                assert!((dd[(i, j)] - (mass + 1e-3 * ap[(i, j)])).abs() < 1e-15);
            }
        }
        assert!(b.d.asymmetry() < 1e-15);
        let eig = SymmetricEigen::new(dd).eigenvalues;
        assert!(eig.min() > 0.0);
        // Ap annihilates constants over all dofs.
        let ones = vec![1.0; dofs.n_pres_all()];
        assert!(b.ap_full.mul_vec(&ones).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn zero_data_gives_zero_rhs() {
        let mesh = build_structured_simplicial(2, 2, BoxDomain::unit()).unwrap();
        let s = ScenarioSpec::mixed_right_neumann(2, ProblemData::zero());
        let dofs = dirichlet_constraints(&mesh, &s, 0.0).unwrap();
        let params = PhysicalParams::uniform(1.0, 1.0, 1.0, 1.0, 1.0, 0.1);
        let blocks = assemble_blocks(&mesh, &dofs, &params).unwrap();
        let l = assemble_rhs(&mesh, &dofs, &params, &s, 0.1, &PreviousStep::zero(&dofs), &blocks).unwrap();
        assert!(l.b1.iter().all(|&v| v == 0.0) && l.b2.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_source_gives_minus_dt_volume() {
        let mesh = build_structured_simplicial(3, 2, BoxDomain::unit()).unwrap();
        let mut data = ProblemData::zero();
        data.source = Some(Arc::new(|_, _| 1.0));
        let s = ScenarioSpec::pure_dirichlet(2, data);
        let dofs = dirichlet_constraints(&mesh, &s, 0.0).unwrap();
        let params = PhysicalParams::uniform(1.0, 1.0, 1.0, 1.0, 1.0, 0.01);
        let blocks = assemble_blocks(&mesh, &dofs, &params).unwrap();
        let l = assemble_rhs(&mesh, &dofs, &params, &s, 0.0, &PreviousStep::zero(&dofs), &blocks).unwrap();
        for k in 0..mesh.num_elements() {
            assert!((l.b2[k] + 0.01 * mesh.geometry(k).unwrap().volume).abs() < 1e-16);
        }
        assert!(l.b2[mesh.num_elements()..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_body_force_and_flux_totals() {
        let mesh = build_structured_simplicial(4, 2, BoxDomain::unit()).unwrap();
        let mut data = ProblemData::zero();
        data.body_force = Some(Arc::new(|_, _| [2.0, -1.0, 0.0]));
        data.flux = Some(Arc::new(|_, _, n: &Point| 3.0 * n[0]));
        data.traction = Some(Arc::new(|_, _, _| [0.0, 5.0, 0.0]));
        let s = ScenarioSpec::mixed_right_neumann(2, data);
        let dofs = dirichlet_constraints(&mesh, &s, 0.0).unwrap();
        let params = PhysicalParams::uniform(1.0, 1.0, 1.0, 1.0, 1.0, 0.5);
        let blocks = assemble_blocks(&mesh, &dofs, &params).unwrap();
        let l = assemble_rhs(&mesh, &dofs, &params, &s, 0.0, &PreviousStep::zero(&dofs), &blocks).unwrap();
        // Vertex functions form a partition of unity: Σ over x-dofs = ∫ f_x.
        let sum_c = |c: usize| -> f64 { (0..mesh.num_vertices()).map(|v| l.b1[dofs.disp_vertex_dof(v, c)]).sum() };
        assert!((sum_c(0) - 2.0).abs() < 1e-13);
        assert!((sum_c(1) - (-1.0 + 5.0)).abs() < 1e-13);
        let flux_total: f64 = l.b2[mesh.num_elements()..].iter().sum();
        assert!((flux_total + 0.5 * 3.0).abs() < 1e-13);
    }

    #[test]
    fn previous_step_terms() {
        let (mesh, dofs, b) = setup(2, 2, false);
        let params = PhysicalParams::uniform(1.0, 1.0, 0.7, 2.0, 1.0, 1e-3);
        let s = ScenarioSpec::pure_dirichlet(2, ProblemData::zero());
        let mut prev = PreviousStep::zero(&dofs);
        for v in 0..mesh.num_vertices() {
            let x = mesh.vertex(v);
            prev.u[dofs.disp_vertex_dof(v, 0)] = x[0];
            prev.u[dofs.disp_vertex_dof(v, 1)] = x[1];
        }
        prev.p.iter_mut().for_each(|p| *p = 1.5);
        let l = assemble_rhs(&mesh, &dofs, &params, &s, 0.0, &prev, &b).unwrap();
        for k in 0..mesh.num_elements() {
            let vol = b.mp[k];
            assert!((l.b2[k] - (-0.7 * 2.0 * vol - 2.0 * vol * 1.5)).abs() < 1e-14);
        }
    }

    #[test]
    fn layered_coefficients_weight_elements() {
        let mesh = build_structured_simplicial(2, 2, BoxDomain::unit()).unwrap();
        let s = ScenarioSpec::pure_dirichlet(2, ProblemData::zero());
        let dofs = dirichlet_constraints(&mesh, &s, 0.0).unwrap();
        let ne = mesh.num_elements();
        let mu: Vec<f64> = (0..ne).map(|k| if k % 2 == 0 { 4.0 } else { 1.0 }).collect();
        let mut params = PhysicalParams::uniform(1.0, 1.0, 1.0, 1.0, 1.0, 1e-3);
        params.mu = Coefficient::PerElement(mu);
        params.lambda = Coefficient::PerElement(vec![8.0; ne]);
        let b = assemble_blocks(&mesh, &dofs, &params).unwrap();
        assert_eq!(b.mu_ref, 4.0);
        assert!(params.uniform_eps(ne).is_none());
        for k in 0..ne {
            assert!((b.m_eps[k] - b.mp[k]).abs() < 1e-15);
            let ratio = if k % 2 == 0 { 1.0 } else { 4.0 };
            assert!((b.m_schur[k] - ratio * b.mp[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = PhysicalParams::uniform(1.0, 1.0, 1.0, 1.0, 1.0, 1e-3);
        p.alpha = 1.5;
        assert!(p.validate(4).is_err());
        let mut p = PhysicalParams::uniform(1.0, 1.0, 1.0, 1.0, 1.0, 1e-3);
        p.kappa = Coefficient::PerElement(vec![1.0; 3]);
        assert!(p.validate(4).is_err());
        let p = PhysicalParams::uniform(-1.0, 1.0, 1.0, 1.0, 1.0, 1e-3);
        assert!(p.validate(4).is_err());
    }

    #[test]
    fn matrix_market_dump() {
        let (_, _, b) = setup(2, 2, false);
        let dir = tempfile::tempdir().unwrap();
        b.dump_matrix_market(dir.path()).unwrap();
        let a1 = CsrMatrix::read_matrix_market(dir.path().join("A1.mtx")).unwrap();
        assert!((a1.to_dense() - b.a1.to_dense()).abs().max() < 1e-15);
    }
}
