//! Quadrature on simplices via collapsed (Duffy) tensor Gauss–Legendre rules.
//!
//! Points are returned in barycentric coordinates and weights are fractions
//! of the simplex measure (they sum to one).

use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct QuadRule {
    pub dim: usize,
    /// Barycentric coordinates; the first `dim + 1` entries are meaningful.
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.points
            .iter()
            .zip(&self.weights)
            .map(move |(p, &w)| (&p[..=self.dim], w))
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, x);
        if d != 0.0 {
            dp = d;
        }
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=m {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Rule on the `dim`-simplex (1 ≤ dim ≤ 3) exact for polynomials of total
/// degree `degree`.
pub fn simplex_rule(dim: usize, degree: usize) -> QuadRule {
    assert!((1..=3).contains(&dim), "simplex dimension {dim}");
    let m = (degree + dim).div_ceil(2).max(1);
    let (x, w) = gauss_legendre(m);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    match dim {
        1 => {
            for i in 0..m {
                points.push([1.0 - x[i], x[i], 0.0, 0.0]);
                weights.push(w[i]);
            }
        }
        2 => {
            for i in 0..m {
                for j in 0..m {
                    let (u, v) = (x[i], x[j] * (1.0 - x[i]));
                    points.push([1.0 - u - v, u, v, 0.0]);
                    weights.push(2.0 * w[i] * w[j] * (1.0 - x[i]));
                }
            }
        }
        _ => {
            for i in 0..m {
                for j in 0..m {
                    for k in 0..m {
                        let u = x[i];
                        let v = x[j] * (1.0 - u);
                        let s = x[k] * (1.0 - x[i]) * (1.0 - x[j]);
                        points.push([1.0 - u - v - s, u, v, s]);
                        weights.push(6.0 * w[i] * w[j] * w[k] * (1.0 - x[i]).powi(2) * (1.0 - x[j]));
                    }
                }
            }
        }
    }
    QuadRule { dim, points, weights }
}

/// Cell rule used for stiffness integrands (BR gradients are degree d−1).
pub fn stiffness_rule(dim: usize) -> QuadRule {
    simplex_rule(dim, if dim == 2 { 2 } else { 4 })
}

/// Cell rule used for load integrands.
pub fn load_rule(dim: usize) -> QuadRule {
    simplex_rule(dim, if dim == 2 { 4 } else { 5 })
}

/// Facet rule (on the (dim−1)-simplex) for traction and flux integrals.
pub fn facet_rule(dim: usize) -> QuadRule {
    simplex_rule(dim - 1, 3)
}
