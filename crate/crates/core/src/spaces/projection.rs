//! Canonical interpolation, local L2 projections and pointwise evaluation.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use super::reference::{edge_vertices, legendre01, nedelec_test_fields, scalar_basis};
use super::DiscreteSpaces;
use crate::mesh::Point;
use crate::quadrature::{edge_rule, triangle_rule};

/// Evaluates a stress field on one triangle from its local (unsigned) coefficients.
pub struct StressEvaluator<'a> {
    spaces: &'a DiscreteSpaces,
    triangle: usize,
    coefficients: Vec<f64>,
}

impl<'a> StressEvaluator<'a> {
    /// `coefficients` multiply the Piola-mapped reference basis, row 0 first.
    pub fn new(spaces: &'a DiscreteSpaces, triangle: usize, coefficients: Vec<f64>) -> Self {
        assert_eq!(coefficients.len(), spaces.local_stress_dim());
        Self { spaces, triangle, coefficients }
    }

    /// Restriction of a global stress coefficient vector to one triangle.
    pub fn from_global(spaces: &'a DiscreteSpaces, triangle: usize, global: &[f64]) -> Self {
        let coefficients = spaces.stress_dofs(triangle).into_iter().map(|(g, s)| s * global[g]).collect();
        Self { spaces, triangle, coefficients }
    }

    pub fn value(&self, x: Point) -> Matrix2<f64> {
        let map = self.spaces.element_map(self.triangle);
        let (vals, _) = self.spaces.reference().eval(map.to_reference(x));
        let nb = vals.len();
        let mut out = Matrix2::zeros();
        for row in 0..2 {
            let mut acc = [0.0; 2];
            for (j, v) in vals.iter().enumerate() {
                let c = self.coefficients[row * nb + j];
                acc[0] += c * v[0];
                acc[1] += c * v[1];
            }
            let w = map.piola(acc);
            out[(row, 0)] = w[0];
            out[(row, 1)] = w[1];
        }
        out
    }

    pub fn divergence(&self, x: Point) -> Vector2<f64> {
        let map = self.spaces.element_map(self.triangle);
        let (_, divs) = self.spaces.reference().eval(map.to_reference(x));
        let nb = divs.len();
        let mut out = Vector2::zeros();
        for row in 0..2 {
            out[row] = (0..nb).map(|j| self.coefficients[row * nb + j] * divs[j]).sum::<f64>() / map.det();
        }
        out
    }
}

impl DiscreteSpaces {
    fn dof_quadrature_degree(&self) -> usize {
        2 * self.degree() + 4
    }

    /// Local DOF functionals of triangle `t` (counterclockwise edge moments,
    /// then interior moments), applied to a matrix field row by row.
    pub fn local_dofs(&self, t: usize, field: &dyn Fn(Point) -> Matrix2<f64>) -> Vec<f64> {
        let k = self.degree();
        let map = self.element_map(t);
        let verts = self.mesh().triangle_vertices(t);
        let erule = edge_rule(self.dof_quadrature_degree()).expect("supported degree");
        let trule = triangle_rule(self.dof_quadrature_degree()).expect("supported degree");
        let nb = self.reference().stress_row_dim();
        let mut out = vec![0.0; 2 * nb];
        for i in 0..3 {
            let (a, b) = edge_vertices(i);
            let (pa, pb) = (verts[a], verts[b]);
            let normal = [pb[1] - pa[1], pa[0] - pb[0]];
            for (s, w) in erule.iter() {
                let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                let m = field(x);
                for row in 0..2 {
                    let flux = m[(row, 0)] * normal[0] + m[(row, 1)] * normal[1];
                    for j in 0..=k {
                        out[row * nb + i * (k + 1) + j] += w * flux * legendre01(j, s);
                    }
                }
            }
        }
        let first_interior = 3 * (k + 1);
        for (p, w) in trule.iter() {
            let m = field(map.to_physical(p));
            let tests = nedelec_test_fields(k - 1, p);
            for row in 0..2 {
                let pulled = map.inverse_piola([m[(row, 0)], m[(row, 1)]]);
                for (idx, q) in tests.iter().enumerate() {
                    out[row * nb + first_interior + idx] += w * (pulled[0] * q[0] + pulled[1] * q[1]);
                }
            }
        }
        out
    }

    /// Canonical interpolant: edge moments of the row-normal traces against
    /// P_k and interior moments against the Nédélec test space.
    pub fn canonical_interpolation<F>(&self, sigma: F) -> Vec<f64>
    where
        F: Fn(Point) -> Matrix2<f64> + Sync,
    {
        let k = self.degree();
        let mesh = self.mesh();
        let erule = edge_rule(self.dof_quadrature_degree()).expect("supported degree");
        let mut out = vec![0.0; self.dim_stress()];
        let edge_moments = self.execution().map(mesh.num_edges(), |e| {
            let [a, b] = mesh.edges()[e];
            let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
            let normal = [pb[1] - pa[1], pa[0] - pb[0]];
            let mut moments = vec![[0.0; 2]; k + 1];
            for (s, w) in erule.iter() {
                let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                let m = sigma(x);
                for row in 0..2 {
                    let flux = m[(row, 0)] * normal[0] + m[(row, 1)] * normal[1];
                    for (j, mom) in moments.iter_mut().enumerate() {
                        mom[row] += w * flux * legendre01(j, s);
                    }
                }
            }
            moments
        });
        for (e, moments) in edge_moments.iter().enumerate() {
            for (j, mom) in moments.iter().enumerate() {
                for row in 0..2 {
                    out[self.edge_dof(row, e, j)] = mom[row];
                }
            }
        }
        if k > 1 {
            let nb = self.reference().stress_row_dim();
            let first_interior = 3 * (k + 1);
            let interiors = self.execution().map(self.num_triangles(), |t| self.local_dofs(t, &sigma));
            for (t, local) in interiors.iter().enumerate() {
                for row in 0..2 {
                    for m in 0..self.reference().interior_dofs() {
                        out[self.interior_dof(row, t, m)] = local[row * nb + first_interior + m];
                    }
                }
            }
        }
        out
    }

    /// Reference scalar mass matrix of P_{k-1} (to be scaled by det J).
    fn reference_scalar_mass(&self) -> DMatrix<f64> {
        let n = self.local_scalar_dim();
        let rule = triangle_rule(2 * self.degree()).expect("supported degree");
        let mut m = DMatrix::zeros(n, n);
        for (p, w) in rule.iter() {
            let s = scalar_basis(self.degree() - 1, p);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] += w * s[i] * s[j];
                }
            }
        }
        m
    }

    fn project_scalars<F>(&self, components: usize, field: F) -> Vec<f64>
    where
        F: Fn(Point) -> [f64; 2] + Sync,
    {
        let n = self.local_scalar_dim();
        let mass = self.reference_scalar_mass().cholesky().expect("scalar mass is SPD");
        let rule = triangle_rule(self.dof_quadrature_degree()).expect("supported degree");
        let blocks = self.execution().map(self.num_triangles(), |t| {
            let map = self.element_map(t);
            let mut rhs = vec![DVector::zeros(n); components];
            for (p, w) in rule.iter() {
                let f = field(map.to_physical(p));
                let s = scalar_basis(self.degree() - 1, p);
                for (c, r) in rhs.iter_mut().enumerate() {
                    for i in 0..n {
                        r[i] += w * f[c] * s[i];
                    }
                }
            }
            // det J cancels between the physical mass matrix and load.
            rhs.into_iter().map(|r| mass.solve(&r)).collect::<Vec<_>>()
        });
        let mut out = Vec::with_capacity(components * n * self.num_triangles());
        for block in blocks {
            for comp in block {
                out.extend(comp.iter());
            }
        }
        out
    }

    /// L2 projection onto the velocity space.
    pub fn l2_project_velocity<F>(&self, v: F) -> Vec<f64>
    where
        F: Fn(Point) -> Vector2<f64> + Sync,
    {
        self.project_scalars(2, |x| {
            let w = v(x);
            [w[0], w[1]]
        })
    }

    /// L2 projection onto the rotation space (scalar representative `q`).
    pub fn l2_project_rotation<F>(&self, q: F) -> Vec<f64>
    where
        F: Fn(Point) -> f64 + Sync,
    {
        self.project_scalars(1, |x| [q(x), 0.0])
    }

    /// Velocity field value at a reference point of triangle `t`.
    pub fn velocity_value(&self, coefficients: &[f64], t: usize, p: [f64; 2]) -> Vector2<f64> {
        let n = self.local_scalar_dim();
        let s = scalar_basis(self.degree() - 1, p);
        let off = self.velocity_offset(t);
        let mut out = Vector2::zeros();
        for c in 0..2 {
            out[c] = (0..n).map(|m| coefficients[off + c * n + m] * s[m]).sum();
        }
        out
    }

    /// Rotation scalar value at a reference point of triangle `t`.
    pub fn rotation_value(&self, coefficients: &[f64], t: usize, p: [f64; 2]) -> f64 {
        let n = self.local_scalar_dim();
        let s = scalar_basis(self.degree() - 1, p);
        let off = self.rotation_offset(t);
        (0..n).map(|m| coefficients[off + m] * s[m]).sum()
    }
}
