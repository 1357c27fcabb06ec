//! Manufactured solutions `u = t·U(x)`, `p = t·P(x)` built from separable
//! trigonometric terms, with every data function derived analytically.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::mesh::Point;
use crate::scenario::ProblemData;

/// One-dimensional factor `sin(kπx)`, `cos(kπx)` or `1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Factor {
    One,
    Sin(f64),
    Cos(f64),
}

impl Factor {
    /// Value and first two derivatives.
    fn eval(self, x: f64) -> [f64; 3] {
        match self {
            Factor::One => [1.0, 0.0, 0.0],
            Factor::Sin(k) => {
                let w = k * PI;
                let (s, c) = (w * x).sin_cos();
                [s, w * c, -w * w * s]
            }
            Factor::Cos(k) => {
                let w = k * PI;
                let (s, c) = (w * x).sin_cos();
                [c, -w * s, -w * w * c]
            }
        }
    }
}

/// `coef · Π_a factors[a](x_a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub factors: [Factor; 3],
}

impl Term {
    pub fn new(coef: f64, fx: Factor, fy: Factor, fz: Factor) -> Self {
        Term {
            coef,
            factors: [fx, fy, fz],
        }
    }
}

/// Value, gradient and Hessian of a sum of terms.
fn jet(terms: &[Term], x: &Point) -> (f64, [f64; 3], [[f64; 3]; 3]) {
    let mut v = 0.0;
    let mut g = [0.0; 3];
    let mut h = [[0.0; 3]; 3];
    for t in terms {
        let e: Vec<[f64; 3]> = (0..3).map(|a| t.factors[a].eval(x[a])).collect();
        let pick = |orders: [usize; 3]| t.coef * e[0][orders[0]] * e[1][orders[1]] * e[2][orders[2]];
        v += pick([0, 0, 0]);
        for a in 0..3 {
            let mut o = [0; 3];
            o[a] = 1;
            g[a] += pick(o);
            for b in 0..3 {
                let mut o = [0; 3];
                o[a] += 1;
                o[b] += 1;
                h[a][b] += pick(o);
            }
        }
    }
    (v, g, h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedSolution {
    pub dim: usize,
    pub mu: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub c0: f64,
    pub kappa: f64,
    /// Spatial parts `U_i` of the displacement components.
    pub u_terms: Vec<Vec<Term>>,
    /// Spatial part `P` of the pressure.
    pub p_terms: Vec<Term>,
}

impl ManufacturedSolution {
    pub fn u(&self, x: &Point, t: f64) -> Point {
        let mut u = [0.0; 3];
        for (i, terms) in self.u_terms.iter().enumerate() {
            u[i] = t * jet(terms, x).0;
        }
        u
    }

    /// `∂u_i/∂x_j`.
    pub fn grad_u(&self, x: &Point, t: f64) -> [[f64; 3]; 3] {
        let mut g = [[0.0; 3]; 3];
        for (i, terms) in self.u_terms.iter().enumerate() {
            g[i] = jet(terms, x).1.map(|v| t * v);
        }
        g
    }

    pub fn p(&self, x: &Point, t: f64) -> f64 {
        t * jet(&self.p_terms, x).0
    }

    pub fn grad_p(&self, x: &Point, t: f64) -> Point {
        jet(&self.p_terms, x).1.map(|v| t * v)
    }

    fn spatial(&self, x: &Point) -> (Vec<(f64, [f64; 3], [[f64; 3]; 3])>, (f64, [f64; 3], [[f64; 3]; 3])) {
        (self.u_terms.iter().map(|t| jet(t, x)).collect(), jet(&self.p_terms, x))
    }

    /// `f = −μΔu − (μ+λ)∇(∇·u) + α∇p`.
    pub fn body_force(&self, x: &Point, t: f64) -> Point {
        let d = self.dim;
        let (u, p) = self.spatial(x);
        let mut f = [0.0; 3];
        for i in 0..d {
            let lap: f64 = (0..d).map(|a| u[i].2[a][a]).sum();
            let grad_div: f64 = (0..d).map(|j| u[j].2[j][i]).sum();
            f[i] = t * (-self.mu * lap - (self.mu + self.lambda) * grad_div + self.alpha * p.1[i]);
        }
        f
    }

    /// `s = α ∂_t(∇·u) + c0 ∂_t p − κΔp`.
    pub fn source(&self, x: &Point, t: f64) -> f64 {
        let d = self.dim;
        let (u, p) = self.spatial(x);
        let div: f64 = (0..d).map(|i| u[i].1[i]).sum();
        let lap: f64 = (0..d).map(|a| p.2[a][a]).sum();
        self.alpha * div + self.c0 * p.0 - self.kappa * t * lap
    }

    /// `(σ − αpI) n`.
    pub fn traction(&self, x: &Point, t: f64, n: &Point) -> Point {
        let d = self.dim;
        let g = self.grad_u(x, t);
        let div: f64 = (0..d).map(|i| g[i][i]).sum();
        let p = self.p(x, t);
        let mut out = [0.0; 3];
        for i in 0..d {
            for j in 0..d {
                let mut s = self.mu * (g[i][j] + g[j][i]);
                if i == j {
                    s += self.lambda * div - self.alpha * p;
                }
                out[i] += s * n[j];
            }
        }
        out
    }

    /// `κ ∇p·n`.
    pub fn flux(&self, x: &Point, t: f64, n: &Point) -> f64 {
        let g = self.grad_p(x, t);
        self.kappa * (0..self.dim).map(|a| g[a] * n[a]).sum::<f64>()
    }

    /// All data functions of the problem solved by this solution.
    pub fn problem_data(&self) -> ProblemData {
        let s = Arc::new(self.clone());
        let (a, b, c, d, e, f) = (s.clone(), s.clone(), s.clone(), s.clone(), s.clone(), s);
        ProblemData {
            body_force: Some(Arc::new(move |x, t| a.body_force(x, t))),
            source: Some(Arc::new(move |x, t| b.source(x, t))),
            displacement: Some(Arc::new(move |x, t| c.u(x, t))),
            traction: Some(Arc::new(move |x, t, n| d.traction(x, t, n))),
            pressure: Some(Arc::new(move |x, t| e.p(x, t))),
            flux: Some(Arc::new(move |x, t, n| f.flux(x, t, n))),
        }
    }
}

/// Two-dimensional benchmark on the unit square:
/// `u = t((cos2πx − 1)sin2πy + sinπx sinπy/(λ+μ), sin2πx(1 − cos2πy) + sinπx sinπy/(λ+μ))`,
/// `p = −t sinπx sinπy`.
pub fn benchmark_2d(mu: f64, lambda: f64, alpha: f64, c0: f64, kappa: f64) -> ManufacturedSolution {
    use Factor::*;
    let c = 1.0 / (lambda + mu);
    let bubble = Term::new(c, Sin(1.0), Sin(1.0), One);
    ManufacturedSolution {
        dim: 2,
        mu,
        lambda,
        alpha,
        c0,
        kappa,
        u_terms: vec![
            vec![Term::new(-1.0, One, Sin(2.0), One), Term::new(1.0, Cos(2.0), Sin(2.0), One), bubble.clone()],
            vec![Term::new(1.0, Sin(2.0), One, One), Term::new(-1.0, Sin(2.0), Cos(2.0), One), bubble],
        ],
        p_terms: vec![Term::new(-1.0, Sin(1.0), Sin(1.0), One)],
    }
}

/// Three-dimensional benchmark on the unit cube:
/// `u_1 = t((cos2πx − 1)sin2πy sin2πz + b)`, `u_2 = t(2 sin2πx(1 − cos2πy)sin2πz + b)`,
/// `u_3 = t(sin2πx sin2πy(cos2πz − 1) + b)` with `b = sinπx sinπy sinπz/(λ+μ)`,
/// `p = t sinπx sinπy sinπz`.
pub fn benchmark_3d(mu: f64, lambda: f64, alpha: f64, c0: f64, kappa: f64) -> ManufacturedSolution {
    use Factor::*;
    let b = Term::new(1.0 / (lambda + mu), Sin(1.0), Sin(1.0), Sin(1.0));
    ManufacturedSolution {
        dim: 3,
        mu,
        lambda,
        alpha,
        c0,
        kappa,
        u_terms: vec![
            vec![Term::new(1.0, Cos(2.0), Sin(2.0), Sin(2.0)), Term::new(-1.0, One, Sin(2.0), Sin(2.0)), b.clone()],
            vec![Term::new(2.0, Sin(2.0), One, Sin(2.0)), Term::new(-2.0, Sin(2.0), Cos(2.0), Sin(2.0)), b.clone()],
            vec![Term::new(1.0, Sin(2.0), Sin(2.0), Cos(2.0)), Term::new(-1.0, Sin(2.0), Sin(2.0), One), b],
        ],
        p_terms: vec![Term::new(1.0, Sin(1.0), Sin(1.0), Sin(1.0))],
    }
}
