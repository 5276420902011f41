//! Discrete stress, velocity and rotation spaces on a triangulation.
//!
//! * stress: 2x2 matrix fields whose rows are BDM_k (normal-continuous),
//! * velocity: discontinuous vector P_{k-1},
//! * rotation: discontinuous scalar P_{k-1}, standing for the skew matrix
//!   `[[0, q], [-q, 0]]`.
//!
//! Global stress DOFs are numbered row by row; inside a row, edge moments
//! come first (edge-major), then interior moments (triangle-major).

mod geometry;
mod projection;
mod reference;

use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};

pub use geometry::ElementMap;
pub use projection::StressEvaluator;
pub use reference::{edge_vertices, legendre01, monomial_exponents, nedelec_test_fields, scalar_basis, ReferenceElement};

use crate::error::Result;
use crate::exec::Execution;
use crate::mesh::Mesh;
use crate::quadrature::{triangle_rule, TriangleRule};

/// Embeds the rotation scalar `q` as the skew matrix `[[0, q], [-q, 0]]`.
pub fn skew(q: f64) -> Matrix2<f64> {
    Matrix2::new(0.0, q, -q, 0.0)
}

/// Pairing of a matrix with the skew matrix of `q`.
pub fn skew_pairing(tau: &Matrix2<f64>, q: f64) -> f64 {
    q * (tau[(0, 1)] - tau[(1, 0)])
}

#[derive(Debug, Clone)]
pub struct DiscreteSpaces {
    mesh: Arc<Mesh>,
    reference: ReferenceElement,
    maps: Vec<ElementMap>,
    execution: Execution,
}

/// Reference basis values at the points of a triangle rule.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub rule: TriangleRule,
    pub row_values: Vec<Vec<[f64; 2]>>,
    pub row_divs: Vec<Vec<f64>>,
    pub scalars: Vec<Vec<f64>>,
}

/// Physical basis values of one triangle at the points of a rule.
///
/// Stress functions are indexed locally by `row * row_dim + j`, already
/// multiplied by their global orientation sign.
#[derive(Debug, Clone)]
pub struct ElementBasis {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub stress: Vec<Vec<Matrix2<f64>>>,
    pub stress_div: Vec<Vec<Vector2<f64>>>,
    pub scalars: Vec<Vec<f64>>,
}

impl DiscreteSpaces {
    pub fn new(mesh: Arc<Mesh>, degree: usize) -> Result<Self> {
        let reference = ReferenceElement::new(degree)?;
        let maps = (0..mesh.num_triangles())
            .map(|t| ElementMap::new(mesh.triangle_vertices(t)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { mesh, reference, maps, execution: Execution::default() })
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn execution(&self) -> Execution {
        self.execution
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn reference(&self) -> &ReferenceElement {
        &self.reference
    }

    pub fn degree(&self) -> usize {
        self.reference.degree()
    }

    pub fn element_map(&self, t: usize) -> &ElementMap {
        &self.maps[t]
    }

    pub fn num_triangles(&self) -> usize {
        self.mesh.num_triangles()
    }

    /// Stress DOFs per row: (k+1) E + (k^2 - 1) T.
    pub fn row_dim(&self) -> usize {
        self.reference.edge_dofs() * self.mesh.num_edges() + self.reference.interior_dofs() * self.mesh.num_triangles()
    }

    pub fn dim_stress(&self) -> usize {
        2 * self.row_dim()
    }

    pub fn dim_velocity(&self) -> usize {
        2 * self.reference.scalar_dim() * self.mesh.num_triangles()
    }

    pub fn dim_rotation(&self) -> usize {
        self.reference.scalar_dim() * self.mesh.num_triangles()
    }

    /// Local stress basis size per triangle (both rows).
    pub fn local_stress_dim(&self) -> usize {
        2 * self.reference.stress_row_dim()
    }

    pub fn local_scalar_dim(&self) -> usize {
        self.reference.scalar_dim()
    }

    /// Global index of edge moment `j` of `row` on `edge`.
    pub fn edge_dof(&self, row: usize, edge: usize, j: usize) -> usize {
        row * self.row_dim() + edge * self.reference.edge_dofs() + j
    }

    /// Global index of interior moment `m` of `row` on triangle `t`.
    pub fn interior_dof(&self, row: usize, t: usize, m: usize) -> usize {
        row * self.row_dim()
            + self.reference.edge_dofs() * self.mesh.num_edges()
            + t * self.reference.interior_dofs()
            + m
    }

    /// `(global index, sign)` of every local stress basis function of triangle `t`.
    pub fn stress_dofs(&self, t: usize) -> Vec<(usize, f64)> {
        let ne = self.reference.edge_dofs();
        let mut out = Vec::with_capacity(self.local_stress_dim());
        for row in 0..2 {
            for r in &self.mesh.triangle_edges()[t] {
                for j in 0..ne {
                    // Reversing the edge flips the normal and reflects odd Legendre moments.
                    let sign = if r.sign > 0 || j % 2 == 1 { 1.0 } else { -1.0 };
                    out.push((self.edge_dof(row, r.index, j), sign));
                }
            }
            for m in 0..self.reference.interior_dofs() {
                out.push((self.interior_dof(row, t, m), 1.0));
            }
        }
        out
    }

    /// Global index of local velocity function `(component, m)` is `first + component * n + m`.
    pub fn velocity_offset(&self, t: usize) -> usize {
        2 * self.reference.scalar_dim() * t
    }

    pub fn rotation_offset(&self, t: usize) -> usize {
        self.reference.scalar_dim() * t
    }

    pub fn tabulate(&self, degree: usize) -> Result<Tabulation> {
        let rule = triangle_rule(degree)?;
        let mut row_values = Vec::with_capacity(rule.len());
        let mut row_divs = Vec::with_capacity(rule.len());
        let mut scalars = Vec::with_capacity(rule.len());
        for &p in &rule.points {
            let (v, d) = self.reference.eval(p);
            row_values.push(v);
            row_divs.push(d);
            scalars.push(scalar_basis(self.degree() - 1, p));
        }
        Ok(Tabulation { rule, row_values, row_divs, scalars })
    }

    /// Physical basis functions of triangle `t` at the tabulated points.
    pub fn element_basis(&self, t: usize, tab: &Tabulation) -> ElementBasis {
        let map = &self.maps[t];
        let dofs = self.stress_dofs(t);
        let nb = self.reference.stress_row_dim();
        let nq = tab.rule.len();
        let mut points = Vec::with_capacity(nq);
        let mut weights = Vec::with_capacity(nq);
        let mut stress = Vec::with_capacity(nq);
        let mut stress_div = Vec::with_capacity(nq);
        for q in 0..nq {
            points.push(map.to_physical(tab.rule.points[q]));
            weights.push(tab.rule.weights[q] * map.det());
            let mut values = Vec::with_capacity(2 * nb);
            let mut divs = Vec::with_capacity(2 * nb);
            for row in 0..2 {
                for j in 0..nb {
                    let sign = dofs[row * nb + j].1;
                    let v = map.piola(tab.row_values[q][j]);
                    let mut m = Matrix2::zeros();
                    m[(row, 0)] = sign * v[0];
                    m[(row, 1)] = sign * v[1];
                    values.push(m);
                    let mut d = Vector2::zeros();
                    d[row] = sign * tab.row_divs[q][j] / map.det();
                    divs.push(d);
                }
            }
            stress.push(values);
            stress_div.push(divs);
        }
        ElementBasis { points, weights, stress, stress_div, scalars: tab.scalars.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Diagonal;

    fn spaces(n: usize, k: usize) -> DiscreteSpaces {
        let mesh = Arc::new(Mesh::unit_square(n, Diagonal::default()).unwrap());
        DiscreteSpaces::new(mesh, k).unwrap()
    }

    #[test]
    fn dimension_counts() {
        let s = spaces(1, 1);
        assert_eq!((s.dim_stress(), s.dim_velocity(), s.dim_rotation()), (20, 4, 2));
        let s = spaces(1, 2);
        assert_eq!((s.dim_stress(), s.dim_velocity(), s.dim_rotation()), (42, 12, 6));
        for n in [1, 2, 5] {
            for k in 1..=3 {
                let s = spaces(n, k);
                let (e, t) = (s.mesh().num_edges(), s.mesh().num_triangles());
                assert_eq!(s.dim_stress(), 2 * ((k + 1) * e + (k * k - 1) * t));
                assert_eq!(s.dim_velocity(), t * k * (k + 1));
                assert_eq!(s.dim_rotation(), s.dim_velocity() / 2);
            }
        }
    }

    #[test]
    fn unsupported_degree_rejected() {
        let mesh = Arc::new(Mesh::unit_square(1, Diagonal::default()).unwrap());
        assert!(DiscreteSpaces::new(mesh, 4).is_err());
    }

    #[test]
    fn every_stress_dof_is_owned_once() {
        let s = spaces(3, 3);
        let mut interior_seen = vec![0usize; s.dim_stress()];
        let mut any_seen = vec![false; s.dim_stress()];
        for t in 0..s.num_triangles() {
            for (g, _) in s.stress_dofs(t) {
                any_seen[g] = true;
            }
            for row in 0..2 {
                for m in 0..s.reference().interior_dofs() {
                    interior_seen[s.interior_dof(row, t, m)] += 1;
                }
            }
        }
        assert!(any_seen.iter().all(|&b| b));
        assert!(interior_seen.iter().all(|&c| c <= 1));
    }

    /// Normal-trace continuity: on every interior edge, the jump of each global
    /// basis function's row-normal trace vanishes against P_k on the edge.
    #[test]
    fn normal_traces_are_continuous() {
        use crate::quadrature::edge_rule;
        for k in 1..=3 {
            let s = spaces(2, k);
            let mesh = s.mesh();
            let erule = edge_rule(2 * k + 2).unwrap();
            for (e, slots) in mesh.edge_triangles().iter().enumerate() {
                let [Some(t0), Some(t1)] = *slots else { continue };
                let [a, b] = mesh.edges()[e];
                let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
                let normal = [pb[1] - pa[1], pa[0] - pb[0]];
                // Accumulate moments of every global function from both sides.
                let mut jumps = std::collections::HashMap::<(usize, usize), f64>::new();
                for (t, side) in [(t0, 1.0), (t1, -1.0)] {
                    let map = s.element_map(t);
                    let dofs = s.stress_dofs(t);
                    let nb = s.reference().stress_row_dim();
                    for (sq, w) in erule.iter() {
                        let x = [pa[0] + sq * (pb[0] - pa[0]), pa[1] + sq * (pb[1] - pa[1])];
                        let (vals, _) = s.reference().eval(map.to_reference(x));
                        for row in 0..2 {
                            for j in 0..nb {
                                let (g, sign) = dofs[row * nb + j];
                                let v = map.piola(vals[j]);
                                let flux = sign * (v[0] * normal[0] + v[1] * normal[1]);
                                for p in 0..=k {
                                    *jumps.entry((g, p)).or_default() += side * w * flux * legendre01(p, sq);
                                }
                            }
                        }
                    }
                }
                for (&(g, p), &jump) in &jumps {
                    assert!(jump.abs() < 1e-12, "k={k} edge {e} dof {g} moment {p}: jump {jump:e}");
                }
            }
        }
    }

    /// Physical DOF functionals applied to the physical basis give the identity.
    #[test]
    fn physical_duality() {
        for k in 1..=3 {
            let s = spaces(2, k);
            for t in 0..s.num_triangles() {
                let nb = s.reference().stress_row_dim();
                for row in 0..2 {
                    for j in 0..nb {
                        let coeffs: Vec<f64> = (0..2 * nb).map(|l| if l == row * nb + j { 1.0 } else { 0.0 }).collect();
                        let eval = StressEvaluator::new(&s, t, coeffs);
                        let local = s.local_dofs(t, &|x| eval.value(x));
                        for (l, v) in local.iter().enumerate() {
                            let expected = if l == row * nb + j { 1.0 } else { 0.0 };
                            assert!((v - expected).abs() < 1e-12, "k={k} t={t} l={l}: {v}");
                        }
                    }
                }
            }
        }
    }
}
