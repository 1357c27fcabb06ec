//! Block diagonal and block lower-triangular preconditioners for the
//! three-field system, applied through inner PCG solves with
//! threshold-dropping incomplete Cholesky factors.

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use crate::error::{PoroError, Result};
use crate::linalg::{axpy, dot, norm2, LinearOperator, Preconditioner};
use crate::sparse::CsrMatrix;
use crate::system::{RegularizationSpec, SchurApprox, ThreeFieldSystem};

const SHIFTS: [f64; 3] = [1e-3, 1e-2, 1e-1];

/// Incomplete Cholesky factor `S ≈ L Lᵀ`, stored column-wise.
#[derive(Debug, Clone)]
pub struct ICFactor {
    /// Column `j` of `L`: `(row, value)` sorted by row, diagonal first.
    cols: Vec<Vec<(usize, f64)>>,
    /// Diagonal shift factor that was needed (0 when none).
    pub shift: f64,
}

impl ICFactor {
    pub fn dim(&self) -> usize {
        self.cols.len()
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    /// Dense copy of `L`.
    pub fn lower_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dim();
        let mut l = nalgebra::DMatrix::zeros(n, n);
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, v) in col {
                l[(i, j)] = v;
            }
        }
        l
    }

    /// `z = (L Lᵀ)⁻¹ r`.
    pub fn solve(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
        for col in &self.cols {
            let (j, ljj) = col[0];
            z[j] /= ljj;
            let zj = z[j];
            for &(i, lij) in &col[1..] {
                z[i] -= lij * zj;
            }
        }
        for col in self.cols.iter().rev() {
            let (j, ljj) = col[0];
            let mut s = z[j];
            for &(i, lij) in &col[1..] {
                s -= lij * z[i];
            }
            z[j] = s / ljj;
        }
    }
}

impl Preconditioner for ICFactor {
    fn dim(&self) -> usize {
        self.cols.len()
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) -> Result<()> {
        self.solve(r, z);
        Ok(())
    }
}

/// Threshold incomplete Cholesky of the symmetric matrix `s`. Entries of
/// column `j` with `|l_ij| < droptol·‖S(j:, j)‖₁` are dropped. On a
/// nonpositive pivot the factorization is retried on `S + β diag(S)`.
pub fn ic_factorize(s: &CsrMatrix, droptol: f64) -> Result<ICFactor> {
    if s.nrows() != s.ncols() {
        return Err(PoroError::Config("incomplete Cholesky needs a square matrix".into()));
    }
    let diag = s.diagonal();
    if let Some(row) = diag.iter().position(|&d| d <= 0.0) {
        return Err(PoroError::Factorization { row });
    }
    let mut last = 0;
    for beta in std::iter::once(0.0).chain(SHIFTS) {
        match ic_attempt(s, &diag, droptol, beta) {
            Ok(cols) => {
                if beta > 0.0 {
                    log::debug!("incomplete Cholesky needed diagonal shift {beta}");
                }
                return Ok(ICFactor { cols, shift: beta });
            }
            Err(row) => last = row,
        }
    }
    Err(PoroError::Factorization { row: last })
}

fn ic_attempt(s: &CsrMatrix, diag: &[f64], droptol: f64, beta: f64) -> std::result::Result<Vec<Vec<(usize, f64)>>, usize> {
    let n = s.nrows();
    let mut cols: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    let mut next = vec![0usize; n];
    let mut pending: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut work = vec![0.0; n];
    let mut used = vec![false; n];
    let mut touched: Vec<usize> = Vec::new();

    for j in 0..n {
        let (ci, cv) = s.row(j);
        let mut norm1 = 0.0;
        for (&i, &v) in ci.iter().zip(cv) {
            if i >= j {
                let v = if i == j { v + beta * diag[j] } else { v };
                norm1 += v.abs();
                work[i] += v;
                if !used[i] {
                    used[i] = true;
                    touched.push(i);
                }
            }
        }
        for k in std::mem::take(&mut pending[j]) {
            let p = next[k];
            let ljk = cols[k][p].1;
            for &(i, lik) in &cols[k][p..] {
                work[i] -= ljk * lik;
                if !used[i] {
                    used[i] = true;
                    touched.push(i);
                }
            }
            next[k] = p + 1;
            if p + 1 < cols[k].len() {
                pending[cols[k][p + 1].0].push(k);
            }
        }
        let pivot = work[j];
        if !(pivot > 0.0 && pivot.is_finite()) {
            return Err(j);
        }
        let ljj = pivot.sqrt();
        let tol = droptol * norm1;
        touched.sort_unstable();
        let mut col = Vec::with_capacity(touched.len());
        col.push((j, ljj));
        for &i in &touched {
            if i > j {
                let l = work[i] / ljj;
                if l != 0.0 && l.abs() >= tol {
                    col.push((i, l));
                }
            }
            work[i] = 0.0;
            used[i] = false;
        }
        touched.clear();
        next[j] = 1;
        if col.len() > 1 {
            pending[col[1].0].push(j);
        }
        cols.push(col);
    }
    Ok(cols)
}

/// Inner-solve settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerSolverConfig {
    pub tol: f64,
    pub maxit: usize,
    pub droptol: f64,
}

impl Default for InnerSolverConfig {
    fn default() -> Self {
        InnerSolverConfig {
            tol: 1e-12,
            maxit: 200,
            droptol: 1e-3,
        }
    }
}

impl InnerSolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) || self.maxit == 0 || self.droptol < 0.0 {
            return Err(PoroError::Config(format!("invalid inner solver settings {self:?}")));
        }
        Ok(())
    }
}

/// Outcome of one PCG solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcgStats {
    pub iterations: usize,
    pub rel_residual: f64,
}

/// Preconditioned conjugate gradients from a zero initial guess; stops on
/// `‖r‖ ≤ tol·‖b‖`.
pub fn pcg(
    a: &dyn LinearOperator,
    b: &[f64],
    m: &dyn Preconditioner,
    tol: f64,
    maxit: usize,
    x: &mut [f64],
) -> Result<PcgStats> {
    let n = b.len();
    x.iter_mut().for_each(|v| *v = 0.0);
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(PcgStats { iterations: 0, rel_residual: 0.0 });
    }
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    let mut q = vec![0.0; n];
    m.apply(&r, &mut z)?;
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rel = 1.0;
    for it in 1..=maxit {
        a.apply(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(PoroError::InnerSolver { iterations: it, residual: rel });
        }
        let alpha = rz / pq;
        axpy(alpha, &p, x);
        axpy(-alpha, &q, &mut r);
        rel = norm2(&r) / bnorm;
        if rel <= tol {
            return Ok(PcgStats { iterations: it, rel_residual: rel });
        }
        m.apply(&r, &mut z)?;
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Err(PoroError::InnerSolver { iterations: maxit, residual: rel })
}

/// `(diag(m) + ρ w wᵀ)⁻¹ v` by the Sherman–Morrison formula.
pub fn smw_solve(m: &[f64], rho: f64, w: &[f64], v: &[f64]) -> Vec<f64> {
    let mv: Vec<f64> = v.iter().zip(m).map(|(a, b)| a / b).collect();
    if rho == 0.0 {
        return mv;
    }
    let mw: Vec<f64> = w.iter().zip(m).map(|(a, b)| a / b).collect();
    let c = rho * dot(w, &mv) / (1.0 + rho * dot(w, &mw));
    mv.iter().zip(&mw).map(|(a, b)| a - c * b).collect()
}

/// `S + ρ ŵŵᵀ` where `ŵ` is `w` zero-padded to the size of `S`.
#[derive(Debug, Clone)]
pub struct RankOneUpdated {
    pub base: CsrMatrix,
    pub rho: f64,
    pub w: Vec<f64>,
}

impl LinearOperator for RankOneUpdated {
    fn dim(&self) -> usize {
        self.base.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.base.mul_vec_into(x, y);
        if self.rho != 0.0 {
            let c = self.rho * dot(&self.w, &x[..self.w.len()]);
            axpy(c, &self.w, &mut y[..self.w.len()]);
        }
    }
}

/// IC preconditioner for `S + ρŵŵᵀ`, closing the rank-one term with
/// Sherman–Morrison: `(LLᵀ + ρŵŵᵀ)⁻¹`.
#[derive(Debug, Clone)]
pub struct SmwIc {
    pub ic: ICFactor,
    rho: f64,
    w: Vec<f64>,
    /// `(LLᵀ)⁻¹ ŵ`.
    z: Vec<f64>,
    denom: f64,
}

impl SmwIc {
    pub fn new(ic: ICFactor, rho: f64, w: &[f64]) -> Self {
        let n = ic.dim();
        let mut wf = vec![0.0; n];
        wf[..w.len()].copy_from_slice(w);
        let mut z = vec![0.0; n];
        if rho != 0.0 {
            ic.solve(&wf, &mut z);
        }
        let denom = 1.0 + rho * dot(&wf, &z);
        SmwIc { ic, rho, w: wf, z, denom }
    }
}

impl Preconditioner for SmwIc {
    fn dim(&self) -> usize {
        self.ic.dim()
    }

    fn apply(&self, r: &[f64], out: &mut [f64]) -> Result<()> {
        self.ic.solve(r, out);
        if self.rho != 0.0 {
            let c = self.rho * dot(&self.w, out) / self.denom;
            axpy(-c, &self.z, out);
        }
        Ok(())
    }
}

/// An SPD block applied approximately by IC-preconditioned CG.
#[derive(Debug)]
pub struct InnerSolver {
    pub op: RankOneUpdated,
    pub prec: SmwIc,
    pub cfg: InnerSolverConfig,
    calls: AtomicUsize,
    iterations: AtomicUsize,
    worst_residual: AtomicU64,
}

impl InnerSolver {
    pub fn new(base: CsrMatrix, rho: f64, w: &[f64], cfg: InnerSolverConfig) -> Result<Self> {
        let ic = ic_factorize(&base, cfg.droptol)?;
        let prec = SmwIc::new(ic, rho, w);
        Ok(InnerSolver {
            op: RankOneUpdated { base, rho, w: w.to_vec() },
            prec,
            cfg,
            calls: AtomicUsize::new(0),
            iterations: AtomicUsize::new(0),
            worst_residual: AtomicU64::new(0f64.to_bits()),
        })
    }

    pub fn solve(&self, r: &[f64], z: &mut [f64]) -> Result<PcgStats> {
        let stats = pcg(&self.op, r, &self.prec, self.cfg.tol, self.cfg.maxit, z)?;
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.iterations.fetch_add(stats.iterations, Ordering::Relaxed);
        let _ = self.worst_residual.fetch_update(Ordering::Relaxed, Ordering::Relaxed, |old| {
            (stats.rel_residual > f64::from_bits(old)).then_some(stats.rel_residual.to_bits())
        });
        Ok(stats)
    }

    /// `(calls, total iterations, worst relative residual)` since creation.
    pub fn totals(&self) -> (usize, usize, f64) {
        (
            self.calls.load(Ordering::Relaxed),
            self.iterations.load(Ordering::Relaxed),
            f64::from_bits(self.worst_residual.load(Ordering::Relaxed)),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreconditionerKind {
    Diagonal,
    Triangular,
}

/// Inner iteration totals accumulated by a block preconditioner.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InnerTotals {
    pub applications: usize,
    pub a1_iterations: usize,
    pub middle_iterations: usize,
    pub worst_residual: f64,
}

/// `𝒫_d = blockdiag(A1, Ŝ_mid, Ŝ_3)` or the lower-triangular `𝒫_t`.
#[derive(Debug)]
pub struct BlockPreconditioner {
    pub kind: PreconditionerKind,
    pub a1: InnerSolver,
    pub middle: InnerSolver,
    pub third: Vec<f64>,
    pub reg: RegularizationSpec,
    pub bcirc: CsrMatrix,
    offsets: [usize; 4],
}

impl BlockPreconditioner {
    pub fn new(system: &ThreeFieldSystem, schur: &SchurApprox, kind: PreconditionerKind, cfg: InnerSolverConfig) -> Result<Self> {
        cfg.validate()?;
        let wrap = |e: PoroError| PoroError::Preconditioner(Box::new(e));
        let a1 = InnerSolver::new(system.a1.clone(), 0.0, &[], cfg).map_err(wrap)?;
        let rho = schur.reg.weight();
        let middle = InnerSolver::new(schur.middle.clone(), rho, &schur.reg.w, cfg).map_err(wrap)?;
        Ok(BlockPreconditioner {
            kind,
            a1,
            middle,
            third: schur.third.clone(),
            reg: schur.reg.clone(),
            bcirc: system.bcirc.clone(),
            offsets: system.offsets(),
        })
    }

    pub fn totals(&self) -> InnerTotals {
        let (c1, i1, r1) = self.a1.totals();
        let (_, i2, r2) = self.middle.totals();
        InnerTotals {
            applications: c1,
            a1_iterations: i1,
            middle_iterations: i2,
            worst_residual: r1.max(r2),
        }
    }

    fn solve_third(&self, r: &[f64]) -> Vec<f64> {
        smw_solve(&self.third, self.reg.weight(), &self.reg.w, r)
    }

    fn apply_blocks(&self, r: &[f64], z: &mut [f64]) -> Result<()> {
        let [_, o1, o2, _] = self.offsets;
        let (z1, rest) = z.split_at_mut(o1);
        let (z2, z3) = rest.split_at_mut(o2 - o1);
        self.a1.solve(&r[..o1], z1)?;
        self.middle.solve(&r[o1..o2], z2)?;
        match self.kind {
            PreconditionerKind::Diagonal => {
                z3.copy_from_slice(&self.solve_third(&r[o2..]));
            }
            PreconditionerKind::Triangular => {
                z2.iter_mut().for_each(|v| *v = -*v);
                let mut r3 = r[o2..].to_vec();
                self.bcirc.mul_vec_acc(1.0, z1, &mut r3);
                for (dst, v) in z3.iter_mut().zip(self.solve_third(&r3)) {
                    *dst = -v;
                }
            }
        }
        Ok(())
    }
}

impl Preconditioner for BlockPreconditioner {
    fn dim(&self) -> usize {
        self.offsets[3]
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) -> Result<()> {
        self.apply_blocks(r, z).map_err(|e| match e {
            PoroError::Preconditioner(_) => e,
            other => PoroError::Preconditioner(Box::new(other)),
        })
    }
}
