//! Preconditioned MINRES and restarted GMRES.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use crate::error::{PoroError, Result};
use crate::linalg::{axpy, dot, norm2, LinearOperator, Preconditioner};
use crate::precond::InnerTotals;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tol: f64,
    pub maxit: usize,
    pub restart: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-8,
            maxit: 1000,
            restart: 30,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) || self.restart == 0 || self.maxit == 0 {
            return Err(PoroError::Config(format!("invalid solver settings {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveReport {
    pub iterations: usize,
    /// Relative preconditioned residual norms, entry 0 being the initial one.
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub seconds: f64,
    /// `‖b − Ax‖ / ‖b‖` of the returned iterate.
    pub true_residual: f64,
    /// Iteration index at which each GMRES cycle started (empty for MINRES).
    pub restarts: Vec<usize>,
    pub inner: InnerTotals,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(0.0)
    }

    /// Writes `iteration,residual` rows.
    pub fn write_history_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from("iteration,residual\n");
        for (i, r) in self.residuals.iter().enumerate() {
            out.push_str(&format!("{i},{r:.12e}\n"));
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| PoroError::io(path, e))
    }
}

fn true_residual(a: &dyn LinearOperator, b: &[f64], x: &[f64]) -> f64 {
    let ax = a.apply_vec(x);
    let r: f64 = b.iter().zip(&ax).map(|(b, a)| (b - a) * (b - a)).sum::<f64>().sqrt();
    let nb = norm2(b);
    if nb > 0.0 {
        r / nb
    } else {
        r
    }
}

/// Preconditioned MINRES (Paige–Saunders) from a zero initial guess. `m`
/// must be SPD; convergence is measured in the `M⁻¹` norm of the residual.
pub fn minres(
    a: &dyn LinearOperator,
    b: &[f64],
    m: &dyn Preconditioner,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    cfg.validate()?;
    let start = Instant::now();
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut report = SolveReport::default();

    let mut r1 = b.to_vec();
    let mut y = vec![0.0; n];
    m.apply(&r1, &mut y)?;
    let beta1_sq = dot(&r1, &y);
    if beta1_sq < 0.0 {
        return Err(PoroError::Config("MINRES preconditioner is not positive definite".into()));
    }
    let beta1 = beta1_sq.sqrt();
    report.residuals.push(if beta1 > 0.0 { 1.0 } else { 0.0 });
    if beta1 == 0.0 {
        report.converged = true;
        report.seconds = start.elapsed().as_secs_f64();
        return Ok((x, report));
    }

    let mut r2 = r1.clone();
    let mut v = vec![0.0; n];
    let (mut w, mut w1, mut w2) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut oldb = 0.0;
    let mut beta = beta1;
    let mut dbar = 0.0;
    let mut epsln = 0.0;
    let mut phibar = beta1;
    let mut cs = -1.0;
    let mut sn = 0.0;

    for itn in 1..=cfg.maxit {
        let s = 1.0 / beta;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = s * yi;
        }
        a.apply(&v, &mut y);
        if itn >= 2 {
            axpy(-beta / oldb, &r1, &mut y);
        }
        let alfa = dot(&v, &y);
        axpy(-alfa / beta, &r2, &mut y);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        m.apply(&r2, &mut y)?;
        oldb = beta;
        let beta_sq = dot(&r2, &y);
        if beta_sq < 0.0 {
            return Err(PoroError::Config("MINRES preconditioner is not positive definite".into()));
        }
        beta = beta_sq.sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
        }
        axpy(phi, &w, &mut x);

        let rel = phibar / beta1;
        report.residuals.push(rel);
        report.iterations = itn;
        if rel <= cfg.tol {
            report.converged = true;
            break;
        }
        if beta == 0.0 {
            report.converged = true;
            break;
        }
    }
    report.true_residual = true_residual(a, b, &x);
    report.seconds = start.elapsed().as_secs_f64();
    Ok((x, report))
}

/// Left-preconditioned restarted GMRES with modified Gram–Schmidt; the
/// iteration count is the total number of Arnoldi steps.
pub fn gmres_restarted(
    a: &dyn LinearOperator,
    b: &[f64],
    m: &dyn Preconditioner,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    cfg.validate()?;
    let start = Instant::now();
    let n = b.len();
    let k = cfg.restart;
    let mut x = vec![0.0; n];
    let mut report = SolveReport::default();

    let mut mb = vec![0.0; n];
    m.apply(b, &mut mb)?;
    let bnorm = norm2(&mb);
    if bnorm == 0.0 {
        report.residuals.push(0.0);
        report.converged = true;
        report.seconds = start.elapsed().as_secs_f64();
        return Ok((x, report));
    }

    let mut basis: Vec<Vec<f64>> = vec![vec![0.0; n]; k + 1];
    let mut h = vec![vec![0.0; k]; k + 1];
    let mut cs = vec![0.0; k];
    let mut sn = vec![0.0; k];
    let mut g = vec![0.0; k + 1];
    let mut tmp = vec![0.0; n];
    let mut r = mb.clone();
    let mut rnorm = bnorm;
    report.residuals.push(1.0);

    'outer: while report.iterations < cfg.maxit {
        report.restarts.push(report.iterations);
        let cycle_start = rnorm;
        for (bi, ri) in basis[0].iter_mut().zip(&r) {
            *bi = ri / rnorm;
        }
        g.iter_mut().for_each(|v| *v = 0.0);
        g[0] = rnorm;
        let mut used = 0;
        let mut done = false;
        for j in 0..k {
            if report.iterations >= cfg.maxit {
                break;
            }
            a.apply(&basis[j], &mut tmp);
            let (head, tail) = basis.split_at_mut(j + 1);
            let wv = &mut tail[0];
            m.apply(&tmp, wv)?;
            for (i, vi) in head.iter().enumerate() {
                let hij = dot(wv, vi);
                h[i][j] = hij;
                axpy(-hij, vi, wv);
            }
            let hn = norm2(wv);
            h[j + 1][j] = hn;
            if hn > 0.0 {
                wv.iter_mut().for_each(|v| *v /= hn);
            }
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let denom = h[j][j].hypot(h[j + 1][j]);
            if denom == 0.0 {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else {
                cs[j] = h[j][j] / denom;
                sn[j] = h[j + 1][j] / denom;
            }
            h[j][j] = denom;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            report.iterations += 1;
            let rel = g[j + 1].abs() / bnorm;
            report.residuals.push(rel);
            if rel <= cfg.tol || hn <= f64::EPSILON * bnorm {
                done = true;
                break;
            }
        }
        // Back substitution for the least-squares coefficients.
        let mut yk = vec![0.0; used];
        for i in (0..used).rev() {
            let mut s = g[i];
            for l in i + 1..used {
                s -= h[i][l] * yk[l];
            }
            yk[i] = if h[i][i] != 0.0 { s / h[i][i] } else { 0.0 };
        }
        for (i, yi) in yk.iter().enumerate() {
            axpy(*yi, &basis[i], &mut x);
        }
        a.apply(&x, &mut tmp);
        for (ti, bi) in tmp.iter_mut().zip(b) {
            *ti = bi - *ti;
        }
        m.apply(&tmp, &mut r)?;
        rnorm = norm2(&r);
        if done || rnorm / bnorm <= cfg.tol {
            report.converged = true;
            break 'outer;
        }
        if rnorm >= cycle_start * (1.0 - 1e-12) {
            log::warn!("GMRES stagnated over a restart cycle at relative residual {:.3e}", rnorm / bnorm);
            break;
        }
    }
    report.true_residual = true_residual(a, b, &x);
    report.seconds = start.elapsed().as_secs_f64();
    Ok((x, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{rel_diff, Identity};
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn lcg(seed: u64) -> impl FnMut() -> f64 {
        let mut s = seed ^ 0x9E3779B97F4A7C15;
        move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        }
    }

    fn sym_indefinite(n: usize, seed: u64) -> DMatrix<f64> {
        let mut r = lcg(seed);
        let g = DMatrix::from_fn(n, n, |_, _| r());
        let q = g.qr().q();
        let eig = DVector::from_fn(n, |i, _| if i % 3 == 0 { -1.0 - i as f64 } else { 1.0 + 0.5 * i as f64 });
        &q * DMatrix::from_diagonal(&eig) * q.transpose()
    }

    struct DiagPrec(Vec<f64>);

    impl Preconditioner for DiagPrec {
        fn dim(&self) -> usize {
            self.0.len()
        }

        fn apply(&self, r: &[f64], z: &mut [f64]) -> Result<()> {
            for i in 0..r.len() {
                z[i] = r[i] / self.0[i];
            }
            Ok(())
        }
    }

    #[test]
    fn identity_converges_in_one_step() {
        let b = vec![1.0, -2.0, 3.0];
        let (x, r) = minres(&Identity(3), &b, &Identity(3), &SolverConfig::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(rel_diff(&x, &b) < 1e-15);
        let (x, r) = gmres_restarted(&Identity(3), &b, &Identity(3), &SolverConfig::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(rel_diff(&x, &b) < 1e-15);
    }

    #[test]
    fn two_eigenvalues_two_steps() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        let (x, r) = minres(&a, &[1.0, 1.0], &Identity(2), &SolverConfig::default()).unwrap();
        assert!(r.iterations <= 2 && r.converged);
        assert!(rel_diff(&x, &[1.0, -1.0]) < 1e-12);
    }

    #[test]
    fn zero_rhs() {
        let (x, r) = minres(&Identity(4), &[0.0; 4], &Identity(4), &SolverConfig::default()).unwrap();
        assert!(r.converged && r.iterations == 0 && x.iter().all(|&v| v == 0.0));
        let (_, r) = gmres_restarted(&Identity(4), &[0.0; 4], &Identity(4), &SolverConfig::default()).unwrap();
        assert!(r.converged && r.iterations == 0);
    }

    #[test]
    fn minres_solves_indefinite_system_with_preconditioner() {
        let a = sym_indefinite(40, 1);
        let b: Vec<f64> = (0..40).map(|i| (i as f64).sin()).collect();
        let m = DiagPrec((0..40).map(|i| 1.0 + (i % 5) as f64).collect());
        let cfg = SolverConfig { tol: 1e-12, ..Default::default() };
        let (x, r) = minres(&a, &b, &m, &cfg).unwrap();
        assert!(r.converged);
        let exact = a.lu().solve(&DVector::from_vec(b)).unwrap();
        assert!(rel_diff(&x, exact.as_slice()) < 1e-9);
        for w in r.residuals.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn gmres_solves_nonsymmetric_system_with_restarts() {
        let n = 60;
        let mut g = lcg(9);
        let a = DMatrix::from_fn(n, n, |i, j| if i == j { 4.0 + (i % 7) as f64 } else { 0.3 * g() });
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).cos()).collect();
        let m = DiagPrec((0..n).map(|i| 4.0 + (i % 7) as f64).collect());
        let cfg = SolverConfig { tol: 1e-12, restart: 5, ..Default::default() };
        let (x, r) = gmres_restarted(&a, &b, &m, &cfg).unwrap();
        assert!(r.converged);
        assert!(r.restarts.len() > 1);
        let exact = a.lu().solve(&DVector::from_vec(b)).unwrap();
        assert!(rel_diff(&x, exact.as_slice()) < 1e-9);
        let mut bounds = r.restarts.clone();
        bounds.push(r.iterations);
        for c in bounds.windows(2) {
            for i in c[0] + 1..c[1] {
                assert!(r.residuals[i + 1] <= r.residuals[i] * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn maxit_reports_nonconvergence() {
        let a = sym_indefinite(30, 4);
        let b = vec![1.0; 30];
        let cfg = SolverConfig { maxit: 3, ..Default::default() };
        let (_, r) = minres(&a, &b, &Identity(30), &cfg).unwrap();
        assert!(!r.converged && r.iterations == 3);
        let (_, r) = gmres_restarted(&a, &b, &Identity(30), &cfg).unwrap();
        assert!(!r.converged && r.iterations == 3);
    }

    #[test]
    fn history_csv() {
        let (_, r) = minres(&Identity(3), &[1.0, 2.0, 3.0], &Identity(3), &SolverConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.csv");
        r.write_history_csv(&p).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        assert!(text.starts_with("iteration,residual\n0,"));
        assert_eq!(text.lines().count(), r.residuals.len() + 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn minres_residuals_monotone(seed in 0u64..10000) {
            let a = sym_indefinite(25, seed);
            let mut g = lcg(seed + 1);
            let b: Vec<f64> = (0..25).map(|_| g()).collect();
            let (_, r) = minres(&a, &b, &Identity(25), &SolverConfig::default()).unwrap();
            for w in r.residuals.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
            }
        }

        #[test]
        fn gmres_residuals_nonincreasing_within_cycles(seed in 0u64..10000, restart in 2usize..12) {
            let n = 30;
            let mut g = lcg(seed);
            let a = DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 + (i % 5) as f64 } else { 0.4 * g() });
            let b: Vec<f64> = (0..n).map(|_| g()).collect();
            let cfg = SolverConfig { tol: 1e-10, restart, ..Default::default() };
            let (_, r) = gmres_restarted(&a, &b, &Identity(n), &cfg).unwrap();
            let mut bounds = r.restarts.clone();
            bounds.push(r.iterations);
            for c in bounds.windows(2) {
                for i in c[0] + 1..c[1] {
                    prop_assert!(r.residuals[i + 1] <= r.residuals[i] * (1.0 + 1e-12));
                }
            }
        }
    }
}
