//! Reference element for the stress/velocity/rotation triple of degree k.
//!
//! Each row of the stress is a BDM_k vector field. Its degrees of freedom are
//! the normal moments against shifted Legendre polynomials on each edge and
//! the interior moments against the first-kind Nédélec space of degree k-1.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quadrature::{edge_rule, triangle_rule};

pub const REFERENCE_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Local edge `i` runs counterclockwise from vertex `(i + 1) % 3` to `(i + 2) % 3`.
pub const fn edge_vertices(i: usize) -> (usize, usize) {
    ((i + 1) % 3, (i + 2) % 3)
}

/// Exponent pairs `(a, b)` of the monomials `x^a y^b` with `a + b <= degree`.
pub fn monomial_exponents(degree: usize) -> Vec<(i32, i32)> {
    let mut out = Vec::new();
    for d in 0..=degree as i32 {
        for b in 0..=d {
            out.push((d - b, b));
        }
    }
    out
}

pub fn scalar_dim(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

fn monomial(x: f64, y: f64, (a, b): (i32, i32)) -> f64 {
    x.powi(a) * y.powi(b)
}

fn monomial_grad(x: f64, y: f64, (a, b): (i32, i32)) -> [f64; 2] {
    let dx = if a > 0 { a as f64 * x.powi(a - 1) * y.powi(b) } else { 0.0 };
    let dy = if b > 0 { b as f64 * x.powi(a) * y.powi(b - 1) } else { 0.0 };
    [dx, dy]
}

/// Shifted Legendre polynomial of degree `j` on `[0, 1]`.
pub fn legendre01(j: usize, s: f64) -> f64 {
    let x = 2.0 * s - 1.0;
    let (mut p0, mut p1) = (1.0, x);
    if j == 0 {
        return 1.0;
    }
    for n in 2..=j {
        let p2 = ((2 * n - 1) as f64 * x * p1 - (n - 1) as f64 * p0) / n as f64;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Scalar polynomials of degree `degree` evaluated at a reference point.
pub fn scalar_basis(degree: usize, p: [f64; 2]) -> Vec<f64> {
    monomial_exponents(degree).into_iter().map(|e| monomial(p[0], p[1], e)).collect()
}

#[derive(Debug, Clone)]
pub struct ReferenceElement {
    degree: usize,
    exponents: Vec<(i32, i32)>,
    /// Column `j` holds the monomial coefficients of basis function `j`. Rows
    /// are ordered `[x-component monomials, y-component monomials]`.
    coefficients: DMatrix<f64>,
}

impl ReferenceElement {
    pub fn new(degree: usize) -> Result<Self> {
        if !(1..=3).contains(&degree) {
            return Err(Error::InvalidArgument(format!("degree k = {degree} not in 1..=3")));
        }
        let exponents = monomial_exponents(degree);
        let n = 2 * exponents.len();
        let mut dofs = DMatrix::zeros(n, n);
        for col in 0..n {
            let values = reference_dofs(degree, |p| {
                let m = monomial(p[0], p[1], exponents[col % exponents.len()]);
                if col < exponents.len() { [m, 0.0] } else { [0.0, m] }
            });
            dofs.set_column(col, &nalgebra::DVector::from_vec(values));
        }
        let coefficients = dofs
            .try_inverse()
            .ok_or_else(|| Error::Singular("reference DOF matrix".into()))?;
        Ok(Self { degree, exponents, coefficients })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Basis functions per stress row: (k+1)(k+2).
    pub fn stress_row_dim(&self) -> usize {
        2 * self.exponents.len()
    }

    pub fn edge_dofs(&self) -> usize {
        self.degree + 1
    }

    pub fn interior_dofs(&self) -> usize {
        self.degree * self.degree - 1
    }

    /// Dimension of P_{k-1}, shared by every velocity component and the rotation.
    pub fn scalar_dim(&self) -> usize {
        scalar_dim(self.degree - 1)
    }

    /// Values and divergences of all row basis functions at a reference point.
    pub fn eval(&self, p: [f64; 2]) -> (Vec<[f64; 2]>, Vec<f64>) {
        let nm = self.exponents.len();
        let mono: Vec<f64> = self.exponents.iter().map(|&e| monomial(p[0], p[1], e)).collect();
        let grads: Vec<[f64; 2]> = self.exponents.iter().map(|&e| monomial_grad(p[0], p[1], e)).collect();
        let n = self.stress_row_dim();
        let mut values = vec![[0.0; 2]; n];
        let mut divs = vec![0.0; n];
        for j in 0..n {
            let c = self.coefficients.column(j);
            for m in 0..nm {
                values[j][0] += c[m] * mono[m];
                values[j][1] += c[nm + m] * mono[m];
                divs[j] += c[m] * grads[m][0] + c[nm + m] * grads[m][1];
            }
        }
        (values, divs)
    }

    /// Applies the reference DOF functionals to a vector field on the reference triangle.
    pub fn dofs_of<F: Fn([f64; 2]) -> [f64; 2]>(&self, field: F) -> Vec<f64> {
        reference_dofs(self.degree, field)
    }
}

/// Nédélec (first kind) test fields of degree `order` at a reference point:
/// P_{order-1} vectors followed by `(-y, x) * x^a y^b` with `a + b = order - 1`.
pub fn nedelec_test_fields(order: usize, p: [f64; 2]) -> Vec<[f64; 2]> {
    if order == 0 {
        return Vec::new();
    }
    let [x, y] = p;
    let lower = monomial_exponents(order - 1);
    let mut out = Vec::with_capacity(order * (order + 2));
    for &e in &lower {
        out.push([monomial(x, y, e), 0.0]);
    }
    for &e in &lower {
        out.push([0.0, monomial(x, y, e)]);
    }
    let top = order as i32 - 1;
    for b in 0..=top {
        let m = monomial(x, y, (top - b, b));
        out.push([-y * m, x * m]);
    }
    out
}

fn reference_dofs<F: Fn([f64; 2]) -> [f64; 2]>(degree: usize, field: F) -> Vec<f64> {
    let erule = edge_rule(2 * degree + 2).expect("supported degree");
    let trule = triangle_rule(2 * degree + 2).expect("supported degree");
    let mut out = Vec::with_capacity((degree + 1) * (degree + 2));
    for i in 0..3 {
        let (a, b) = edge_vertices(i);
        let (pa, pb) = (REFERENCE_VERTICES[a], REFERENCE_VERTICES[b]);
        // |e| times the outward unit normal.
        let scaled_normal = [pb[1] - pa[1], pa[0] - pb[0]];
        for j in 0..=degree {
            let mut acc = 0.0;
            for (s, w) in erule.iter() {
                let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                let v = field(x);
                acc += w * (v[0] * scaled_normal[0] + v[1] * scaled_normal[1]) * legendre01(j, s);
            }
            out.push(acc);
        }
    }
    let ninterior = degree * degree - 1;
    let mut interior = vec![0.0; ninterior];
    for (p, w) in trule.iter() {
        let v = field(p);
        for (acc, q) in interior.iter_mut().zip(nedelec_test_fields(degree - 1, p)) {
            *acc += w * (v[0] * q[0] + v[1] * q[1]);
        }
    }
    out.extend(interior);
    out
}
