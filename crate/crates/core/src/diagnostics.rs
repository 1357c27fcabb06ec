//! Dense spectral checks on small meshes: the approximate Schur complement
//! spectrum, the null space of `(B°)ᵀ`, the discrete inf-sup constant and the
//! spectrum of the block-diagonally preconditioned operator.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::assembly::AssembledBlocks;
use crate::error::{PoroError, Result};
use crate::sparse::CsrMatrix;
use crate::system::{SchurApprox, ThreeFieldSystem};

/// Largest pressure space (interiors plus free facets) handled densely.
pub const DENSE_PRESSURE_CAP: usize = 400;

/// Singular values below this fraction of the largest count as zero.
pub const NULL_THRESHOLD: f64 = 1e-10;

fn check_size(n_pres: usize) -> Result<()> {
    if n_pres > DENSE_PRESSURE_CAP {
        return Err(PoroError::TooLarge(format!(
            "{n_pres} pressure dofs exceed the dense limit of {DENSE_PRESSURE_CAP}; use a coarser mesh (2D n ≤ 8)"
        )));
    }
    Ok(())
}

/// Eigenvalues of the symmetric pencil `A x = θ B x`, `B` SPD, ascending.
pub fn generalized_symmetric_eigs(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<f64>> {
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| PoroError::Config("pencil matrix is not positive definite".into()))?;
    let l = chol.l();
    let y = l
        .solve_lower_triangular(a)
        .ok_or_else(|| PoroError::Config("singular Cholesky factor".into()))?;
    let c = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| PoroError::Config("singular Cholesky factor".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let mut ev: Vec<f64> = c.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    Ok(ev)
}

fn dense_inverse_spd(a: &CsrMatrix) -> Result<DMatrix<f64>> {
    a.to_dense()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| PoroError::Config("A1 is not positive definite".into()))
}

/// `B° A1⁻¹ (B°)ᵀ`.
fn b_ainv_bt(a1: &CsrMatrix, bcirc: &CsrMatrix) -> Result<DMatrix<f64>> {
    let b = bcirc.to_dense();
    let ainv = dense_inverse_spd(a1)?;
    Ok(&b * ainv * b.transpose())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenReport {
    /// Ascending eigenvalues of `Ŝ₃⁻¹S₃`.
    pub eigenvalues: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub h: f64,
    pub eps: f64,
    pub rho: f64,
    pub scenario: String,
    pub beta: Option<f64>,
    /// `λ_max(A1⁻¹A0)`.
    pub c_korn: f64,
}

/// Spectra of `Ŝ₃⁻¹S₃` with `Mε` replaced by `ε Mp°` for each `ε`. `S₃` is
/// the pressure Schur complement obtained by eliminating the displacement
/// with a dense inverse of `A1`; `Ŝ₃ = blockdiag(middle, Mp° + ρwwᵀ)`.
pub fn dense_schur_eigs(
    system: &ThreeFieldSystem,
    blocks: &AssembledBlocks,
    eps_list: &[f64],
    h: f64,
    scenario: &str,
) -> Result<Vec<EigenReport>> {
    let (n2, n3) = (system.n2(), system.n3());
    check_size(n2)?;
    let bab = b_ainv_bt(&system.a1, &system.bcirc)?;
    let beta = estimate_inf_sup(&system.a1, &system.bcirc, &blocks.mp)?.beta;
    let c_korn = korn_ratio(&system.a1, blocks)?;
    let d = system.d.to_dense() * system.d_scale;
    let rho = system.reg.weight();
    let w = DVector::from_column_slice(&system.reg.w);
    let wwt = &w * w.transpose() * rho;
    let mut out = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let mreg = DMatrix::from_diagonal(&DVector::from_iterator(n3, blocks.mp.iter().map(|m| eps * m))) + &wwt;
        let n = n2 + n3;
        let mut s = DMatrix::zeros(n, n);
        let mut shat = DMatrix::zeros(n, n);
        s.view_mut((0, 0), (n2, n2)).copy_from(&d);
        s.view_mut((0, 0), (n3, n3)).add_assign(&mreg);
        shat.view_mut((0, 0), (n2, n2)).copy_from(&s.view((0, 0), (n2, n2)));
        s.view_mut((0, n2), (n3, n3)).copy_from(&mreg);
        s.view_mut((n2, 0), (n3, n3)).copy_from(&mreg);
        s.view_mut((n2, n2), (n3, n3)).copy_from(&(&mreg + &bab));
        let mp = DMatrix::from_diagonal(&DVector::from_column_slice(&blocks.mp)) + &wwt;
        shat.view_mut((n2, n2), (n3, n3)).copy_from(&mp);
        let ev = generalized_symmetric_eigs(&s, &shat)?;
        out.push(EigenReport {
            min: ev[0],
            max: ev[ev.len() - 1],
            eigenvalues: ev,
            h,
            eps,
            rho,
            scenario: scenario.to_string(),
            beta: Some(beta),
            c_korn,
        });
    }
    Ok(out)
}

trait AddAssign<T> {
    fn add_assign(&mut self, rhs: T);
}

impl AddAssign<&DMatrix<f64>> for nalgebra::DMatrixViewMut<'_, f64> {
    fn add_assign(&mut self, rhs: &DMatrix<f64>) {
        for j in 0..rhs.ncols() {
            for i in 0..rhs.nrows() {
                self[(i, j)] += rhs[(i, j)];
            }
        }
    }
}

/// `λ_max(A1⁻¹A0)` with `A0 = (B°)ᵀ(Mp°)⁻¹B°`.
pub fn korn_ratio(a1: &CsrMatrix, blocks: &AssembledBlocks) -> Result<f64> {
    let ev = generalized_symmetric_eigs(&blocks.a0().to_dense(), &a1.to_dense())?;
    Ok(*ev.last().unwrap_or(&0.0))
}

/// Writes `eps,rho,theta_min,theta_max,beta` rows.
pub fn write_eigen_csv(reports: &[EigenReport], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::from("scenario,h,eps,rho,theta_min,theta_max,beta,c_korn\n");
    for r in reports {
        text.push_str(&format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
            r.scenario,
            r.h,
            r.eps,
            r.rho,
            r.min,
            r.max,
            r.beta.unwrap_or(f64::NAN),
            r.c_korn
        ));
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(text.as_bytes()))
        .map_err(|e| PoroError::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NullSpaceReport {
    /// Descending singular values of `(B°)ᵀ`.
    pub singular_values: Vec<f64>,
    pub rank: usize,
    /// Orthonormal basis of `Null((B°)ᵀ)` on the element layout.
    pub null_basis: Vec<Vec<f64>>,
    pub sigma_ratio: f64,
}

impl NullSpaceReport {
    /// `|cos∠(v, 𝟙)|` for the first null vector.
    pub fn constant_cosine(&self) -> Option<f64> {
        let v = self.null_basis.first()?;
        let n = v.len() as f64;
        let s: f64 = v.iter().sum();
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        Some((s / (norm * n.sqrt())).abs())
    }
}

/// Singular-value analysis of `(B°)ᵀ`.
pub fn rank_nullspace(bcirc: &CsrMatrix) -> Result<NullSpaceReport> {
    let (n_el, n_disp) = (bcirc.nrows(), bcirc.ncols());
    check_size(n_el)?;
    let bt = bcirc.to_dense().transpose();
    // Pad with zero rows so the thin SVD exposes all n_el right singular vectors.
    let rows = n_disp.max(n_el);
    let mut m = DMatrix::zeros(rows, n_el);
    m.view_mut((0, 0), (n_disp, n_el)).copy_from(&bt);
    let svd = m.svd(false, true);
    let vt = svd
        .v_t
        .ok_or_else(|| PoroError::Config("SVD did not return singular vectors".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let smax = sv[0];
    let cut = NULL_THRESHOLD * smax;
    let rank = sv.iter().filter(|&&s| s > cut).count();
    let null_basis = order
        .iter()
        .filter(|&&i| svd.singular_values[i] <= cut)
        .map(|&i| vt.row(i).iter().copied().collect())
        .collect();
    Ok(NullSpaceReport {
        sigma_ratio: sv[sv.len() - 1] / smax,
        singular_values: sv,
        rank,
        null_basis,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfSup {
    pub beta: f64,
    /// Number of zero eigenvalues excluded from the estimate.
    pub zero_modes: usize,
    /// Ascending eigenvalues of the pencil `(B°A1⁻¹(B°)ᵀ, Mp°)`.
    pub eigenvalues: Vec<f64>,
}

/// `β² = ` smallest nonzero eigenvalue of `B°A1⁻¹(B°)ᵀ q = β² Mp° q`.
pub fn estimate_inf_sup(a1: &CsrMatrix, bcirc: &CsrMatrix, mp: &[f64]) -> Result<InfSup> {
    check_size(mp.len())?;
    let bab = b_ainv_bt(a1, bcirc)?;
    let m = DMatrix::from_diagonal(&DVector::from_column_slice(mp));
    let ev = generalized_symmetric_eigs(&bab, &m)?;
    let top = ev.last().copied().unwrap_or(0.0);
    let zero_modes = ev.iter().filter(|&&v| v <= NULL_THRESHOLD * top).count();
    let beta = ev.get(zero_modes).copied().unwrap_or(0.0).max(0.0).sqrt();
    Ok(InfSup {
        beta,
        zero_modes,
        eigenvalues: ev,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumSplit {
    pub n_negative: usize,
    pub n_positive: usize,
    /// `[−a, −b]`.
    pub negative: (f64, f64),
    /// `[c, d]`.
    pub positive: (f64, f64),
}

impl SpectrumSplit {
    pub fn min_abs(&self) -> f64 {
        (-self.negative.1).min(self.positive.0)
    }
}

/// Eigenvalues of `𝒫_d⁻¹𝒜₃` with exact blocks, grouped by sign.
pub fn preconditioned_spectrum(system: &ThreeFieldSystem, schur: &SchurApprox) -> Result<SpectrumSplit> {
    check_size(system.n2())?;
    let a = system.to_dense();
    let [_, o1, o2, n] = system.offsets();
    let mut p = DMatrix::zeros(n, n);
    p.view_mut((0, 0), (o1, o1)).copy_from(&system.a1.to_dense());
    p.view_mut((o1, o1), (o2 - o1, o2 - o1)).copy_from(&schur.middle_dense());
    p.view_mut((o2, o2), (n - o2, n - o2)).copy_from(&schur.third_dense());
    let ev = generalized_symmetric_eigs(&a, &p)?;
    let neg: Vec<f64> = ev.iter().copied().filter(|&v| v < 0.0).collect();
    let pos: Vec<f64> = ev.iter().copied().filter(|&v| v > 0.0).collect();
    let range = |v: &[f64]| (v.first().copied().unwrap_or(f64::NAN), v.last().copied().unwrap_or(f64::NAN));
    Ok(SpectrumSplit {
        n_negative: neg.len(),
        n_positive: pos.len(),
        negative: range(&neg),
        positive: range(&pos),
    })
}
