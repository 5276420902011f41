//! Quadrature on the reference triangle and the unit interval.
//!
//! Triangle rules are conical products of Gauss–Legendre rules (collapsed
//! square), which keeps every weight positive and every point strictly inside
//! the triangle for all supported degrees.

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 12;

#[derive(Debug, Clone)]
pub struct EdgeRule {
    /// Parameters in `[0, 1]`.
    pub points: Vec<f64>,
    /// Weights summing to 1.
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Rule on the reference triangle with vertices (0,0), (1,0), (0,1).
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    /// Weights summing to 1/2.
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl TriangleRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }

    /// Barycentric coordinates of point `i`.
    pub fn barycentric(&self, i: usize) -> [f64; 3] {
        let [x, y] = self.points[i];
        [1.0 - x - y, x, y]
    }
}

impl EdgeRule {
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

fn check_degree(degree: usize) -> Result<()> {
    if degree == 0 || degree > MAX_DEGREE {
        return Err(Error::InvalidArgument(format!(
            "quadrature degree {degree} outside 1..={MAX_DEGREE}"
        )));
    }
    Ok(())
}

/// Gauss–Legendre rule on `[0, 1]` exact for polynomials of degree `degree`.
pub fn edge_rule(degree: usize) -> Result<EdgeRule> {
    check_degree(degree)?;
    let (points, weights) = gauss_legendre((degree + 1).div_ceil(2));
    Ok(EdgeRule { points, weights, degree })
}

/// Conical product rule on the reference triangle exact for total degree `degree`.
pub fn triangle_rule(degree: usize) -> Result<TriangleRule> {
    check_degree(degree)?;
    // x = s, y = t (1 - s); the Jacobian (1 - s) raises the degree in s by one.
    let n = (degree + 2).div_ceil(2);
    let (nodes, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (&s, &ws) in nodes.iter().zip(&w) {
        for (&t, &wt) in nodes.iter().zip(&w) {
            points.push([s, t * (1.0 - s)]);
            weights.push(ws * wt * (1.0 - s));
        }
    }
    Ok(TriangleRule { points, weights, degree })
}

/// `n`-point Gauss–Legendre nodes and weights mapped to `[0, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        // Map from [-1, 1] to [0, 1], ascending order.
        nodes[n - 1 - i] = 0.5 * (x + 1.0);
        weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
