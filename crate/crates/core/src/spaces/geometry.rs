use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::mesh::Point;

/// Affine map from the reference triangle onto a physical triangle.
#[derive(Debug, Clone)]
pub struct ElementMap {
    origin: Vector2<f64>,
    jacobian: Matrix2<f64>,
    inverse: Matrix2<f64>,
    det: f64,
}

impl ElementMap {
    pub fn new(vertices: [Point; 3]) -> Result<Self> {
        let [a, b, c] = vertices;
        let jacobian = Matrix2::new(b[0] - a[0], c[0] - a[0], b[1] - a[1], c[1] - a[1]);
        let det = jacobian.determinant();
        let scale = jacobian.norm_squared();
        if !(det > 1e-14 * scale) {
            return Err(Error::Geometry(format!("triangle {vertices:?} is degenerate or clockwise")));
        }
        let inverse = jacobian.try_inverse().ok_or_else(|| Error::Geometry("singular Jacobian".into()))?;
        Ok(Self { origin: Vector2::new(a[0], a[1]), jacobian, inverse, det })
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn jacobian(&self) -> &Matrix2<f64> {
        &self.jacobian
    }

    pub fn to_physical(&self, p: [f64; 2]) -> Point {
        let x = self.origin + self.jacobian * Vector2::new(p[0], p[1]);
        [x[0], x[1]]
    }

    pub fn to_reference(&self, x: Point) -> [f64; 2] {
        let p = self.inverse * (Vector2::new(x[0], x[1]) - self.origin);
        [p[0], p[1]]
    }

    /// Contravariant (Piola) map of a reference vector: `J v / det J`.
    pub fn piola(&self, v: [f64; 2]) -> [f64; 2] {
        let w = self.jacobian * Vector2::new(v[0], v[1]) / self.det;
        [w[0], w[1]]
    }

    /// Inverse of [`Self::piola`]: `det J  J^{-1} v`.
    pub fn inverse_piola(&self, v: [f64; 2]) -> [f64; 2] {
        let w = self.inverse * Vector2::new(v[0], v[1]) * self.det;
        [w[0], w[1]]
    }

    /// Covariant map `J^{-T} q`.
    pub fn covariant(&self, q: [f64; 2]) -> [f64; 2] {
        let w = self.inverse.transpose() * Vector2::new(q[0], q[1]);
        [w[0], w[1]]
    }
}
