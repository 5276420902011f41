//! Block matrices and load vectors of the semidiscrete system
//!
//! ```text
//! [A 0 C^T] [α']   [0 -B^T 0] [α]   [g]
//! [0 M 0  ] [β'] = [B  0   0] [β] + [ζ]
//! [C 0 0  ] [γ']   [0  0   0] [γ]   [0]
//! ```
//!
//! with `A_ij = (A φ_j, φ_i)`, `B_ij = (div φ_j, ψ_i)`, `C_ij = (φ_j, χ_i)`,
//! `M_ij = (ρ ψ_j, ψ_i)`, `ζ_i = (f, ψ_i)` and `g_i = ∫_{Γ_D} g·φ_i ν ds`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Point};
use crate::quadrature::edge_rule;
use crate::spaces::{edge_vertices, skew_pairing, DiscreteSpaces};
use crate::sparse::CsrMatrix;

pub type ScalarField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Isotropic material with Lamé parameters and a bounded density field.
#[derive(Clone)]
pub struct MaterialModel {
    pub mu: f64,
    pub lambda: f64,
    pub rho: ScalarField,
    pub rho_bounds: [f64; 2],
    /// Multiple of the identity used for the compliance on skew tensors.
    pub skw_scale: f64,
}

impl fmt::Debug for MaterialModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MaterialModel")
            .field("mu", &self.mu)
            .field("lambda", &self.lambda)
            .field("rho_bounds", &self.rho_bounds)
            .field("skw_scale", &self.skw_scale)
            .finish()
    }
}

impl MaterialModel {
    pub fn homogeneous(mu: f64, lambda: f64, rho: f64) -> Result<Self> {
        if !(mu > 0.0 && lambda > 0.0 && rho > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "material parameters must be positive (mu={mu}, lambda={lambda}, rho={rho})"
            )));
        }
        Ok(Self { mu, lambda, rho: Arc::new(move |_| rho), rho_bounds: [rho, rho], skw_scale: 1.0 })
    }

    /// Replaces the density by a spatial field bounded by `[rho0, rho1]`.
    pub fn with_density(mut self, rho: ScalarField, rho0: f64, rho1: f64) -> Result<Self> {
        if !(0.0 < rho0 && rho0 <= rho1) {
            return Err(Error::InvalidArgument(format!("invalid density bounds [{rho0}, {rho1}]")));
        }
        self.rho = rho;
        self.rho_bounds = [rho0, rho1];
        Ok(self)
    }

    /// Compliance: the isotropic inverse of the stiffness on the symmetric
    /// part, `skw_scale` times the identity on the skew part.
    pub fn compliance(&self, tau: &Matrix2<f64>) -> Matrix2<f64> {
        let sym = 0.5 * (tau + tau.transpose());
        let skw = 0.5 * (tau - tau.transpose());
        let tr = tau.trace();
        let coef = self.lambda / (2.0 * self.mu + 2.0 * self.lambda);
        (sym - Matrix2::identity() * (coef * tr)) / (2.0 * self.mu) + skw * self.skw_scale
    }

    /// Stiffness `2 μ τ + λ tr(τ) I`.
    pub fn stiffness(&self, tau: &Matrix2<f64>) -> Matrix2<f64> {
        tau * (2.0 * self.mu) + Matrix2::identity() * (self.lambda * tau.trace())
    }
}

/// Assembled matrices of the semidiscrete system.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    spaces: Arc<DiscreteSpaces>,
    material: MaterialModel,
    /// Compliance mass `(A φ_j, φ_i)`.
    pub a: CsrMatrix,
    /// Divergence coupling `(div φ_j, ψ_i)`.
    pub b: CsrMatrix,
    /// Weak-symmetry coupling `(φ_j, χ_i)`.
    pub c: CsrMatrix,
    /// Density-weighted velocity mass `(ρ ψ_j, ψ_i)`.
    pub m: CsrMatrix,
    /// Plain L2 stress Gram matrix `(φ_j, φ_i)`.
    pub stress_mass: CsrMatrix,
    /// Rotation Gram matrix `(χ_j, χ_i)` with the skew-matrix inner product.
    pub rotation_mass: CsrMatrix,
}

struct LocalMatrices {
    a: Vec<f64>,
    s: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    m: Vec<f64>,
    r: Vec<f64>,
}

impl BlockSystem {
    pub fn assemble(spaces: Arc<DiscreteSpaces>, material: MaterialModel) -> Result<Self> {
        let mesh = spaces.mesh();
        if (0..mesh.num_edges()).any(|e| mesh.boundary_tag(e) == Some(BoundaryTag::Neumann)) {
            return Err(Error::Assembly("traction (Neumann) boundaries are not supported".into()));
        }
        let k = spaces.degree();
        let tab = spaces.tabulate(2 * k + 2)?;
        let ns = spaces.local_stress_dim();
        let nv = spaces.local_scalar_dim();
        let [rho0, rho1] = material.rho_bounds;

        let locals = spaces.execution().map(spaces.num_triangles(), |t| -> Result<LocalMatrices> {
            let eb = spaces.element_basis(t, &tab);
            let mut l = LocalMatrices {
                a: vec![0.0; ns * ns],
                s: vec![0.0; ns * ns],
                b: vec![0.0; 2 * nv * ns],
                c: vec![0.0; nv * ns],
                m: vec![0.0; nv * nv],
                r: vec![0.0; nv * nv],
            };
            for q in 0..eb.points.len() {
                let w = eb.weights[q];
                let rho = (material.rho)(eb.points[q]);
                if !(rho >= rho0 * (1.0 - 1e-12) && rho <= rho1 * (1.0 + 1e-12)) {
                    return Err(Error::Assembly(format!(
                        "density {rho} at {:?} outside [{rho0}, {rho1}]",
                        eb.points[q]
                    )));
                }
                let phi = &eb.stress[q];
                let div = &eb.stress_div[q];
                let sc = &eb.scalars[q];
                let aphi: Vec<Matrix2<f64>> = phi.iter().map(|p| material.compliance(p)).collect();
                for i in 0..ns {
                    for j in 0..ns {
                        l.a[i * ns + j] += w * aphi[j].dot(&phi[i]);
                        l.s[i * ns + j] += w * phi[j].dot(&phi[i]);
                    }
                }
                for j in 0..ns {
                    for m in 0..nv {
                        for comp in 0..2 {
                            l.b[(comp * nv + m) * ns + j] += w * div[j][comp] * sc[m];
                        }
                        l.c[m * ns + j] += w * skew_pairing(&phi[j], sc[m]);
                    }
                }
                for i in 0..nv {
                    for j in 0..nv {
                        l.m[i * nv + j] += w * rho * sc[i] * sc[j];
                        l.r[i * nv + j] += w * 2.0 * sc[i] * sc[j];
                    }
                }
            }
            Ok(l)
        });

        let mut ta = Vec::new();
        let mut ts = Vec::new();
        let mut tb = Vec::new();
        let mut tc = Vec::new();
        let mut tm = Vec::new();
        let mut tr = Vec::new();
        for (t, local) in locals.into_iter().enumerate() {
            let l = local?;
            let sdofs: Vec<usize> = spaces.stress_dofs(t).into_iter().map(|(g, _)| g).collect();
            let voff = spaces.velocity_offset(t);
            let roff = spaces.rotation_offset(t);
            for i in 0..ns {
                for j in 0..ns {
                    ta.push((sdofs[i], sdofs[j], l.a[i * ns + j]));
                    ts.push((sdofs[i], sdofs[j], l.s[i * ns + j]));
                }
            }
            for j in 0..ns {
                for i in 0..2 * nv {
                    tb.push((voff + i, sdofs[j], l.b[i * ns + j]));
                }
                for m in 0..nv {
                    tc.push((roff + m, sdofs[j], l.c[m * ns + j]));
                }
            }
            for comp in 0..2 {
                for i in 0..nv {
                    for j in 0..nv {
                        tm.push((voff + comp * nv + i, voff + comp * nv + j, l.m[i * nv + j]));
                    }
                }
            }
            for i in 0..nv {
                for j in 0..nv {
                    tr.push((roff + i, roff + j, l.r[i * nv + j]));
                }
            }
        }
        let (dm, dv, dk) = (spaces.dim_stress(), spaces.dim_velocity(), spaces.dim_rotation());
        Ok(Self {
            a: CsrMatrix::from_triplets(dm, dm, &ta),
            b: CsrMatrix::from_triplets(dv, dm, &tb),
            c: CsrMatrix::from_triplets(dk, dm, &tc),
            m: CsrMatrix::from_triplets(dv, dv, &tm),
            stress_mass: CsrMatrix::from_triplets(dm, dm, &ts),
            rotation_mass: CsrMatrix::from_triplets(dk, dk, &tr),
            spaces,
            material,
        })
    }

    pub fn spaces(&self) -> &DiscreteSpaces {
        &self.spaces
    }

    pub fn spaces_arc(&self) -> &Arc<DiscreteSpaces> {
        &self.spaces
    }

    pub fn material(&self) -> &MaterialModel {
        &self.material
    }

    pub fn dim_stress(&self) -> usize {
        self.a.nrows()
    }

    pub fn dim_velocity(&self) -> usize {
        self.m.nrows()
    }

    pub fn dim_rotation(&self) -> usize {
        self.c.nrows()
    }

    /// `(f(t, ·), ψ_i)` for every velocity basis function.
    pub fn body_load<F>(&self, f: F, t: f64) -> Vec<f64>
    where
        F: Fn(f64, Point) -> Vector2<f64> + Sync,
    {
        let spaces = &self.spaces;
        let nv = spaces.local_scalar_dim();
        let tab = spaces.tabulate(2 * spaces.degree() + 4).expect("supported degree");
        let blocks = spaces.execution().map(spaces.num_triangles(), |tri| {
            let map = spaces.element_map(tri);
            let mut local = vec![0.0; 2 * nv];
            for (q, (p, w)) in tab.rule.iter().enumerate() {
                let fx = f(t, map.to_physical(p));
                let wq = w * map.det();
                for comp in 0..2 {
                    for m in 0..nv {
                        local[comp * nv + m] += wq * fx[comp] * tab.scalars[q][m];
                    }
                }
            }
            local
        });
        blocks.concat()
    }

    /// `∫_{Γ_D} g(t, ·) · φ_i ν ds` for every stress basis function.
    pub fn dirichlet_load<G>(&self, g: G, time: f64) -> Vec<f64>
    where
        G: Fn(f64, Point) -> Vector2<f64> + Sync,
    {
        let spaces = &self.spaces;
        let mesh = spaces.mesh();
        let erule = edge_rule(2 * spaces.degree() + 4).expect("supported degree");
        let nb = spaces.reference().stress_row_dim();
        let boundary: Vec<(usize, usize)> = (0..mesh.num_edges())
            .filter(|&e| mesh.boundary_tag(e) == Some(BoundaryTag::Dirichlet))
            .map(|e| {
                let t = mesh.edge_triangles()[e][0].expect("boundary edge has a triangle");
                let local = mesh.triangle_edges()[t].iter().position(|r| r.index == e).expect("incident edge");
                (t, local)
            })
            .collect();
        let contributions = spaces.execution().map(boundary.len(), |i| {
            let (t, local) = boundary[i];
            let map = spaces.element_map(t);
            let dofs = spaces.stress_dofs(t);
            let verts = mesh.triangle_vertices(t);
            let (a, b) = edge_vertices(local);
            let (pa, pb) = (verts[a], verts[b]);
            // |e| times the outward unit normal
            let normal = [pb[1] - pa[1], pa[0] - pb[0]];
            let mut out = vec![0.0; 2 * nb];
            for (s, w) in erule.iter() {
                let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                let gx = g(time, x);
                let (vals, _) = spaces.reference().eval(map.to_reference(x));
                for j in 0..nb {
                    let v = map.piola(vals[j]);
                    let flux = w * (v[0] * normal[0] + v[1] * normal[1]);
                    for row in 0..2 {
                        out[row * nb + j] += dofs[row * nb + j].1 * gx[row] * flux;
                    }
                }
            }
            out
        });
        let mut out = vec![0.0; self.dim_stress()];
        for (&(t, _), contrib) in boundary.iter().zip(&contributions) {
            for (l, (gi, _)) in spaces.stress_dofs(t).into_iter().enumerate() {
                out[gi] += contrib[l];
            }
        }
        out
    }

    /// `(σ, φ_i)` for every stress basis function.
    pub fn stress_load<F>(&self, sigma: F) -> Vec<f64>
    where
        F: Fn(Point) -> Matrix2<f64> + Sync,
    {
        let spaces = &self.spaces;
        let tab = spaces.tabulate(2 * spaces.degree() + 4).expect("supported degree");
        let blocks = spaces.execution().map(spaces.num_triangles(), |t| {
            let eb = spaces.element_basis(t, &tab);
            let mut local = vec![0.0; spaces.local_stress_dim()];
            for q in 0..eb.points.len() {
                let s = sigma(eb.points[q]);
                for (l, phi) in eb.stress[q].iter().enumerate() {
                    local[l] += eb.weights[q] * phi.dot(&s);
                }
            }
            local
        });
        let mut out = vec![0.0; self.dim_stress()];
        for (t, local) in blocks.iter().enumerate() {
            for (l, (g, _)) in spaces.stress_dofs(t).into_iter().enumerate() {
                out[g] += local[l];
            }
        }
        out
    }

    /// `(σ, χ_i)` for every rotation basis function.
    pub fn rotation_load<F>(&self, sigma: F) -> Vec<f64>
    where
        F: Fn(Point) -> Matrix2<f64> + Sync,
    {
        let spaces = &self.spaces;
        let nv = spaces.local_scalar_dim();
        let tab = spaces.tabulate(2 * spaces.degree() + 4).expect("supported degree");
        let blocks = spaces.execution().map(spaces.num_triangles(), |t| {
            let map = spaces.element_map(t);
            let mut local = vec![0.0; nv];
            for (q, (p, w)) in tab.rule.iter().enumerate() {
                let s = sigma(map.to_physical(p));
                for m in 0..nv {
                    local[m] += w * map.det() * skew_pairing(&s, tab.scalars[q][m]);
                }
            }
            local
        });
        blocks.concat()
    }

    /// Writes `A`, `B`, `C` and `M` in coordinate format to `dir`.
    pub fn export(&self, dir: &std::path::Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, m) in [("A", &self.a), ("B", &self.b), ("C", &self.c), ("M", &self.m)] {
            let file = std::fs::File::create(dir.join(format!("{name}.txt")))?;
            m.write_coordinate(std::io::BufWriter::new(file))?;
        }
        Ok(())
    }
}
