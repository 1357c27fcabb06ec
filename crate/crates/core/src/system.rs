//! Two-field and regularized three-field linear systems for one time step.
//!
//! Three-field unknowns are `x = (u; y; x3)` with `y = −(α/2μ)p` over the
//! free pressure layout (interiors then facets) and `x3` over elements. The
//! operator is
//!
//! ```text
//! [  A1        0                         −B°ᵀ         ]
//! [  0    −(2μ/α²)D − E(Mε+ρwwᵀ)Eᵀ   −E(Mε+ρwwᵀ)     ]
//! [ −B°       −(Mε+ρwwᵀ)Eᵀ             −(Mε+ρwwᵀ)     ]
//! ```
//!
//! where `E` embeds element values into the pressure layout and `Mε = ε Mp°`
//! for homogeneous materials.

use nalgebra::{DMatrix, DVector};

use crate::assembly::{AssembledBlocks, LoadVectors};
use crate::error::{PoroError, Result};
use crate::linalg::{dot, LinearOperator};
use crate::sparse::{CooBuilder, CsrMatrix};
use crate::spaces::DofMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularizationMode {
    PureDirichlet,
    Mixed,
}

/// Rank-one regularizer `ρ w wᵀ` on the element layout.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizationSpec {
    pub rho: f64,
    pub w: Vec<f64>,
    pub enabled: bool,
}

impl RegularizationSpec {
    pub fn disabled(n: usize) -> Self {
        RegularizationSpec {
            rho: 0.0,
            w: vec![0.0; n],
            enabled: false,
        }
    }

    /// Effective weight (zero when disabled).
    pub fn weight(&self) -> f64 {
        if self.enabled {
            self.rho
        } else {
            0.0
        }
    }
}

/// `w ∝ Mp°𝟙` normalized; `ρ = 0.1·min|K|` for pure Dirichlet, zero for mixed.
pub fn build_regularizer(mp: &[f64], mode: RegularizationMode) -> RegularizationSpec {
    build_regularizer_scaled(mp, mode, 0.1)
}

/// As [`build_regularizer`] with `ρ = scale·min|K|`.
pub fn build_regularizer_scaled(mp: &[f64], mode: RegularizationMode, scale: f64) -> RegularizationSpec {
    let norm = mp.iter().map(|v| v * v).sum::<f64>().sqrt();
    let w: Vec<f64> = mp.iter().map(|v| v / norm).collect();
    match mode {
        RegularizationMode::PureDirichlet => RegularizationSpec {
            rho: scale * mp.iter().cloned().fold(f64::INFINITY, f64::min),
            w,
            enabled: scale > 0.0,
        },
        RegularizationMode::Mixed => RegularizationSpec { rho: 0.0, w, enabled: false },
    }
}

/// `[[2μA1 + λA0, −αBᵀ], [−αB, −D]]` on free dofs (sparse).
pub fn build_two_field(blocks: &AssembledBlocks) -> CsrMatrix {
    let n1 = blocks.n_disp();
    let n2 = blocks.n_pres();
    let two_mu = 2.0 * blocks.mu_ref;
    let lam_a0 = blocks.bt_diag_b(&blocks.m_eps.iter().map(|m| two_mu / m).collect::<Vec<_>>());
    let lead = CsrMatrix::linear_combination(two_mu, &blocks.a1, 1.0, &lam_a0);
    let mut coo = CooBuilder::with_capacity(n1 + n2, n1 + n2, lead.nnz() + 2 * blocks.bcirc.nnz() + blocks.d.nnz());
    for i in 0..n1 {
        let (c, v) = lead.row(i);
        for (&j, &x) in c.iter().zip(v) {
            coo.push(i, j, x);
        }
    }
    for k in 0..blocks.n_elements() {
        let (c, v) = blocks.bcirc.row(k);
        for (&j, &x) in c.iter().zip(v) {
            coo.push(n1 + k, j, -blocks.alpha * x);
            coo.push(j, n1 + k, -blocks.alpha * x);
        }
    }
    for i in 0..n2 {
        let (c, v) = blocks.d.row(i);
        for (&j, &x) in c.iter().zip(v) {
            coo.push(n1 + i, n1 + j, -x);
        }
    }
    coo.build()
}

/// Right side of the two-field system with Dirichlet lifting.
pub fn two_field_rhs(blocks: &AssembledBlocks, dofs: &DofMap, loads: &LoadVectors) -> Vec<f64> {
    let two_mu = 2.0 * blocks.mu_ref;
    let uc = &dofs.disp_lift;
    let div_c = blocks.bcirc_full.mul_vec(uc);
    let a1_uc = dofs.restrict_disp(&blocks.a1_full.mul_vec(uc));
    let scaled: Vec<f64> = div_c.iter().zip(&blocks.m_eps).map(|(b, m)| two_mu * b / m).collect();
    let lam_uc = blocks.bcirc.tr_mul_vec(&scaled);
    let mut r1 = loads.b1_free(dofs);
    for i in 0..r1.len() {
        r1[i] -= two_mu * a1_uc[i] + lam_uc[i];
    }
    let d_pc = dofs.restrict_pres(&blocks.d_full.mul_vec(&dofs.pres_lift));
    let mut r2 = loads.b2_free(dofs);
    for i in 0..r2.len() {
        r2[i] += d_pc[i];
    }
    for (k, v) in div_c.iter().enumerate() {
        r2[k] += blocks.alpha * v;
    }
    r1.extend(r2);
    r1
}

/// Dense LU solve of the two-field system (small problems only).
pub fn solve_two_field_dense(blocks: &AssembledBlocks, rhs: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let a = build_two_field(blocks).to_dense();
    let x = a
        .lu()
        .solve(&DVector::from_column_slice(rhs))
        .ok_or_else(|| PoroError::Config("two-field system is singular".into()))?;
    let n1 = blocks.n_disp();
    Ok((x.as_slice()[..n1].to_vec(), x.as_slice()[n1..].to_vec()))
}

/// Matrix-free regularized three-field operator.
#[derive(Debug, Clone)]
pub struct ThreeFieldSystem {
    pub a1: CsrMatrix,
    pub bcirc: CsrMatrix,
    pub d: CsrMatrix,
    pub m_eps: Vec<f64>,
    pub reg: RegularizationSpec,
    /// `2μ/α²`.
    pub d_scale: f64,
    pub two_mu: f64,
    pub alpha: f64,
}

/// Builds the three-field operator. Regularization requires a homogeneous
/// `ε` so that the rank-one term is annihilated by the exact solution.
pub fn build_three_field(blocks: &AssembledBlocks, reg: RegularizationSpec) -> Result<ThreeFieldSystem> {
    let n = blocks.n_elements();
    if reg.w.len() != n {
        return Err(PoroError::Config(format!("regularizer has {} entries for {n} elements", reg.w.len())));
    }
    if reg.enabled {
        let ratio: Vec<f64> = blocks.m_eps.iter().zip(&blocks.mp).map(|(m, v)| m / v).collect();
        if ratio.iter().any(|r| (r - ratio[0]).abs() > 1e-12 * ratio[0]) {
            return Err(PoroError::Config("regularization needs a uniform 2μ/λ".into()));
        }
    }
    Ok(ThreeFieldSystem {
        a1: blocks.a1.clone(),
        bcirc: blocks.bcirc.clone(),
        d: blocks.d.clone(),
        m_eps: blocks.m_eps.clone(),
        reg,
        d_scale: 2.0 * blocks.mu_ref / (blocks.alpha * blocks.alpha),
        two_mu: 2.0 * blocks.mu_ref,
        alpha: blocks.alpha,
    })
}

impl ThreeFieldSystem {
    pub fn n1(&self) -> usize {
        self.a1.nrows()
    }

    pub fn n2(&self) -> usize {
        self.d.nrows()
    }

    pub fn n3(&self) -> usize {
        self.m_eps.len()
    }

    /// Block offsets `(0, n1, n1 + n2, total)`.
    pub fn offsets(&self) -> [usize; 4] {
        let (a, b, c) = (self.n1(), self.n2(), self.n3());
        [0, a, a + b, a + b + c]
    }

    /// `(Mε + ρwwᵀ) v`.
    pub fn mass_reg(&self, v: &[f64]) -> Vec<f64> {
        let rho = self.reg.weight();
        let c = if rho > 0.0 { rho * dot(&self.reg.w, v) } else { 0.0 };
        v.iter()
            .zip(&self.m_eps)
            .zip(&self.reg.w)
            .map(|((x, m), w)| m * x + c * w)
            .collect()
    }

    /// Right side `(b1/2μ; −b2/α; 0)` with Dirichlet lifting.
    pub fn rhs(&self, blocks: &AssembledBlocks, dofs: &DofMap, loads: &LoadVectors) -> Vec<f64> {
        let uc = &dofs.disp_lift;
        let div_c = blocks.bcirc_full.mul_vec(uc);
        let rho = self.reg.weight();
        let shift = if rho > 0.0 {
            let scaled: Vec<f64> = div_c.iter().zip(&self.m_eps).map(|(b, m)| b / m).collect();
            rho * dot(&self.reg.w, &scaled)
        } else {
            0.0
        };
        let a1_uc = dofs.restrict_disp(&blocks.a1_full.mul_vec(uc));
        let mut out: Vec<f64> = loads
            .b1_free(dofs)
            .iter()
            .zip(&a1_uc)
            .map(|(b, a)| b / self.two_mu - a)
            .collect();
        let d_pc = dofs.restrict_pres(&blocks.d_full.mul_vec(&dofs.pres_lift));
        let b2 = loads.b2_free(dofs);
        let mut r2: Vec<f64> = b2.iter().zip(&d_pc).map(|(b, d)| -(b + d) / self.alpha).collect();
        for k in 0..self.n3() {
            r2[k] += shift * self.reg.w[k];
        }
        out.extend(r2);
        out.extend((0..self.n3()).map(|k| div_c[k] + shift * self.reg.w[k]));
        out
    }

    /// Scales `(u, p)` on free dofs into the unknown layout (`x3` from `u`).
    pub fn scale_fields(&self, u: &[f64], p: &[f64], div_lift: &[f64]) -> Vec<f64> {
        let y: Vec<f64> = p.iter().map(|v| -self.alpha / self.two_mu * v).collect();
        let bu = self.bcirc.mul_vec(u);
        let x3: Vec<f64> = (0..self.n3())
            .map(|k| -(bu[k] + div_lift[k]) / self.m_eps[k] - y[k])
            .collect();
        let mut x = u.to_vec();
        x.extend(y);
        x.extend(x3);
        x
    }

    /// Dense copy of the operator (diagnostics and tests only).
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply(&e, &mut col);
            for i in 0..n {
                m[(i, j)] = col[i];
            }
            e[j] = 0.0;
        }
        m
    }
}

impl LinearOperator for ThreeFieldSystem {
    fn dim(&self) -> usize {
        self.n1() + self.n2() + self.n3()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let [_, o1, o2, _] = self.offsets();
        let n3 = self.n3();
        let (x1, rest) = x.split_at(o1);
        let (x2, x3) = rest.split_at(o2 - o1);
        let sum: Vec<f64> = (0..n3).map(|k| x2[k] + x3[k]).collect();
        let t = self.mass_reg(&sum);

        let (y1, rest) = y.split_at_mut(o1);
        let (y2, y3) = rest.split_at_mut(o2 - o1);
        self.a1.mul_vec_into(x1, y1);
        self.bcirc.tr_mul_vec_acc(-1.0, x3, y1);
        self.d.mul_vec_into(x2, y2);
        y2.iter_mut().for_each(|v| *v *= -self.d_scale);
        for k in 0..n3 {
            y2[k] -= t[k];
        }
        self.bcirc.mul_vec_into(x1, y3);
        for k in 0..n3 {
            y3[k] = -y3[k] - t[k];
        }
    }
}

/// Recovers `(u, p)` on free dofs from the scaled solution.
pub fn recover_fields(system: &ThreeFieldSystem, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let [_, o1, o2, _] = system.offsets();
    let u = x[..o1].to_vec();
    let p = x[o1..o2].iter().map(|v| -system.two_mu / system.alpha * v).collect();
    (u, p)
}

/// Approximate Schur complement blocks: the sparse part of the middle block
/// `(2μ/α²)D + E Mε Eᵀ`, the third-block diagonal, and the regularizer that
/// is added as `ρwwᵀ` to both.
#[derive(Debug, Clone)]
pub struct SchurApprox {
    pub middle: CsrMatrix,
    pub third: Vec<f64>,
    pub reg: RegularizationSpec,
}

impl SchurApprox {
    pub fn new(system: &ThreeFieldSystem, blocks: &AssembledBlocks) -> Self {
        SchurApprox {
            middle: system.d.scaled(system.d_scale).add_diagonal(0, &system.m_eps),
            third: blocks.m_schur.clone(),
            reg: system.reg.clone(),
        }
    }

    pub fn middle_dense(&self) -> DMatrix<f64> {
        let mut m = self.middle.to_dense();
        add_rank_one(&mut m, &self.reg);
        m
    }

    pub fn third_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::from_diagonal(&DVector::from_column_slice(&self.third));
        add_rank_one(&mut m, &self.reg);
        m
    }
}

fn add_rank_one(m: &mut DMatrix<f64>, reg: &RegularizationSpec) {
    let rho = reg.weight();
    for i in 0..reg.w.len() {
        for j in 0..reg.w.len() {
            m[(i, j)] += rho * reg.w[i] * reg.w[j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_blocks, assemble_rhs, PhysicalParams, PreviousStep};
    use crate::linalg::{norm2, rel_diff};
    use crate::mesh::{build_structured_simplicial, BoxDomain};
    use crate::scenario::{ProblemData, ScenarioSpec};
    use crate::spaces::dirichlet_constraints;
    use proptest::prelude::*;
    use std::sync::Arc;

    struct Fixture {
        blocks: AssembledBlocks,
        dofs: DofMap,
        loads: LoadVectors,
        sys: ThreeFieldSystem,
    }

    fn data() -> ProblemData {
        let mut d = ProblemData::zero();
        d.body_force = Some(Arc::new(|x, t| [t * (1.0 + x[1]), -t * x[0] * x[0], 0.0]));
        d.source = Some(Arc::new(|x, t| t * (x[0] - 0.3)));
        d.displacement = Some(Arc::new(|x, t| [t * x[0] * x[1], t * (1.0 - x[0]) * 0.5, 0.0]));
        d.pressure = Some(Arc::new(|x, t| t * (x[0] + 2.0 * x[1])));
        d.traction = Some(Arc::new(|_, t, n| [t * n[0], 0.3 * t, 0.0]));
        d.flux = Some(Arc::new(|x, t, _| t * x[1]));
        d
    }

    fn fixture(n: usize, mixed: bool, lambda: f64) -> Fixture {
        let mesh = build_structured_simplicial(n, 2, BoxDomain::unit()).unwrap();
        let s = if mixed {
            ScenarioSpec::mixed_right_neumann(2, data())
        } else {
            ScenarioSpec::pure_dirichlet(2, data())
        };
        let t = 0.1;
        let dofs = dirichlet_constraints(&mesh, &s, t).unwrap();
        let params = PhysicalParams::uniform(1.0, lambda, 0.9, 1.0, 1.0, 0.05);
        let blocks = assemble_blocks(&mesh, &dofs, &params).unwrap();
        let loads = assemble_rhs(&mesh, &dofs, &params, &s, t, &PreviousStep::zero(&dofs), &blocks).unwrap();
        let mode = if mixed { RegularizationMode::Mixed } else { RegularizationMode::PureDirichlet };
        let reg = build_regularizer(&blocks.mp, mode);
        let sys = build_three_field(&blocks, reg).unwrap();
        Fixture { blocks, dofs, loads, sys }
    }

    #[test]
    fn regularizer_on_two_elements() {
        let r = build_regularizer(&[0.5, 0.5], RegularizationMode::PureDirichlet);
        assert!((r.rho - 0.05).abs() < 1e-16);
        for w in &r.w {
            assert!((w - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        }
        let r = build_regularizer(&[0.5, 0.25, 0.125], RegularizationMode::Mixed);
        assert_eq!(r.rho, 0.0);
        assert!(!r.enabled);
        assert!((norm2(&r.w) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_field_is_symmetric_and_solves() {
        let f = fixture(8, false, 1.0);
        let a = build_two_field(&f.blocks);
        assert!(a.asymmetry() <= 1e-13 * a.max_abs());
        let rhs = two_field_rhs(&f.blocks, &f.dofs, &f.loads);
        let (u, p) = solve_two_field_dense(&f.blocks, &rhs).unwrap();
        let mut x = u;
        x.extend(p);
        let r = crate::linalg::sub(&a.mul_vec(&x), &rhs);
        assert!(norm2(&r) <= 1e-12 * norm2(&rhs));
    }

    #[test]
    fn leading_block_degenerates_like_eps() {
        let mins: Vec<f64> = [1e2, 1e4]
            .iter()
            .map(|&lam| {
                let f = fixture(2, false, lam);
                let lead = build_two_field(&f.blocks).to_dense();
                let n1 = f.blocks.n_disp();
                let a = lead.view((0, 0), (n1, n1)).into_owned() / lam;
                nalgebra::SymmetricEigen::new(a).eigenvalues.min()
            })
            .collect();
        // Scaled by 1/λ the minimum eigenvalue is O(ε) = O(1/λ).
        let ratio = mins[0] / mins[1];
        assert!(ratio > 50.0 && ratio < 200.0, "{ratio}");
    }

    #[test]
    fn apply_to_third_block_only() {
        let f = fixture(3, false, 10.0);
        let [_, o1, o2, n] = f.sys.offsets();
        let mut x = vec![0.0; n];
        let v3: Vec<f64> = (0..n - o2).map(|k| (k as f64 * 0.37).sin()).collect();
        x[o2..].copy_from_slice(&v3);
        let y = f.sys.apply_vec(&x);
        let bt = f.blocks.bcirc.tr_mul_vec(&v3);
        for i in 0..o1 {
            assert!((y[i] + bt[i]).abs() < 1e-14);
        }
        let eps = 2.0 / 10.0;
        let c = f.sys.reg.rho * dot(&f.sys.reg.w, &v3);
        for k in 0..n - o2 {
            let expect = -eps * f.blocks.mp[k] * v3[k] - c * f.sys.reg.w[k];
            assert!((y[o2 + k] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn regularizer_orthogonal_to_divergence_range() {
        let f = fixture(4, false, 1.0);
        for s in 0..20 {
            let v: Vec<f64> = (0..f.blocks.n_disp()).map(|i| ((i * 7 + s * 13) as f64).sin()).collect();
            let bv = f.blocks.bcirc.mul_vec(&v);
            assert!(dot(&f.sys.reg.w, &bv).abs() <= 1e-12 * norm2(&bv));
        }
    }

    #[test]
    fn three_field_matches_two_field_direct() {
        for mixed in [false, true] {
            let f = fixture(4, mixed, 100.0);
            let rhs2 = two_field_rhs(&f.blocks, &f.dofs, &f.loads);
            let (u2, p2) = solve_two_field_dense(&f.blocks, &rhs2).unwrap();
            let rhs3 = f.sys.rhs(&f.blocks, &f.dofs, &f.loads);
            let x = f
                .sys
                .to_dense()
                .lu()
                .solve(&DVector::from_column_slice(&rhs3))
                .unwrap();
            let (u3, p3) = recover_fields(&f.sys, x.as_slice());
            assert!(rel_diff(&u3, &u2) < 1e-9, "mixed {mixed}: {}", rel_diff(&u3, &u2));
            assert!(rel_diff(&p3, &p2) < 1e-9, "mixed {mixed}: {}", rel_diff(&p3, &p2));
        }
    }

    #[test]
    fn scaled_exact_solution_satisfies_system() {
        let f = fixture(4, false, 10.0);
        let rhs2 = two_field_rhs(&f.blocks, &f.dofs, &f.loads);
        let (u, p) = solve_two_field_dense(&f.blocks, &rhs2).unwrap();
        let div_lift = f.blocks.bcirc_full.mul_vec(&f.dofs.disp_lift);
        let x = f.sys.scale_fields(&u, &p, &div_lift);
        let r = crate::linalg::sub(&f.sys.apply_vec(&x), &f.sys.rhs(&f.blocks, &f.dofs, &f.loads));
        assert!(norm2(&r) <= 1e-10 * norm2(&f.sys.rhs(&f.blocks, &f.dofs, &f.loads)));
    }

    #[test]
    fn recover_scaling() {
        let f = fixture(2, false, 1.0);
        let n = f.sys.dim();
        let (u, p) = recover_fields(&f.sys, &vec![0.0; n]);
        assert!(u.iter().chain(&p).all(|&v| v == 0.0));
        // μ = 1/2, α = 1 gives p = −y.
        let mesh = build_structured_simplicial(2, 2, BoxDomain::unit()).unwrap();
        let s = ScenarioSpec::pure_dirichlet(2, ProblemData::zero());
        let dofs = dirichlet_constraints(&mesh, &s, 0.0).unwrap();
        let blocks = assemble_blocks(&mesh, &dofs, &PhysicalParams::uniform(0.5, 1.0, 1.0, 1.0, 1.0, 0.1)).unwrap();
        let sys = build_three_field(&blocks, build_regularizer(&blocks.mp, RegularizationMode::PureDirichlet)).unwrap();
        let x: Vec<f64> = (0..sys.dim()).map(|i| i as f64).collect();
        let (_, p) = recover_fields(&sys, &x);
        for (i, v) in p.iter().enumerate() {
            assert_eq!(*v, -x[sys.n1() + i]);
        }
    }

    #[test]
    fn regularization_weight_does_not_change_solution() {
        let f = fixture(4, false, 1e3);
        let min = f.blocks.mp.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut sols = vec![];
        for scale in [0.05, 0.1, 0.2] {
            let mut reg = f.sys.reg.clone();
            reg.rho = scale * min;
            let sys = build_three_field(&f.blocks, reg).unwrap();
            let rhs = sys.rhs(&f.blocks, &f.dofs, &f.loads);
            let x = sys.to_dense().lu().solve(&DVector::from_column_slice(&rhs)).unwrap();
            sols.push(recover_fields(&sys, x.as_slice()));
        }
        for s in &sols[1..] {
            assert!(rel_diff(&s.0, &sols[0].0) < 1e-9);
            assert!(rel_diff(&s.1, &sols[0].1) < 1e-9);
        }
    }

    #[test]
    fn nonuniform_eps_with_regularization_is_rejected() {
        let mesh = build_structured_simplicial(2, 2, BoxDomain::unit()).unwrap();
        let s = ScenarioSpec::pure_dirichlet(2, ProblemData::zero());
        let dofs = dirichlet_constraints(&mesh, &s, 0.0).unwrap();
        let mut params = PhysicalParams::uniform(1.0, 1.0, 1.0, 1.0, 1.0, 0.1);
        params.lambda = crate::assembly::Coefficient::PerElement((0..8).map(|k| 1.0 + k as f64).collect());
        let blocks = assemble_blocks(&mesh, &dofs, &params).unwrap();
        let reg = build_regularizer(&blocks.mp, RegularizationMode::PureDirichlet);
        assert!(matches!(build_three_field(&blocks, reg), Err(PoroError::Config(_))));
    }

    #[test]
    fn schur_blocks_are_spd() {
        let f = fixture(3, false, 1e4);
        let s = SchurApprox::new(&f.sys, &f.blocks);
        for m in [s.middle_dense(), s.third_dense()] {
            assert!((&m - m.transpose()).abs().max() < 1e-14);
            assert!(nalgebra::SymmetricEigen::new(m).eigenvalues.min() > 0.0);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn three_field_operator_is_symmetric(seed in 0u64..1000) {
            let f = fixture(3, seed % 2 == 0, 1e4);
            let n = f.sys.dim();
            let gen = |s: u64| -> Vec<f64> { (0..n).map(|i| ((i as u64 * 31 + s * 17) as f64 * 0.61).sin()).collect() };
            let x = gen(seed);
            let y = gen(seed + 5000);
            let ax = f.sys.apply_vec(&x);
            let ay = f.sys.apply_vec(&y);
            let lhs = dot(&ax, &y);
            let rhs = dot(&x, &ay);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * norm2(&ax) * norm2(&y));
        }
    }
}
