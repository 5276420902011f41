//! Dense brute-force reimplementation of the lowest-order (k = 1) system.
//!
//! Basis functions are built directly on each physical triangle by inverting
//! the global edge functionals `∫_e τ·(dy, -dx) L_j(s) ds` over linear
//! vector fields, so no reference element, Piola map or sign convention is
//! shared with the library.

#![allow(dead_code)]

use elastowave::mesh::Mesh;
use nalgebra::{DMatrix, DVector, Matrix6, Vector6};

pub struct DenseSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub m: DMatrix<f64>,
    /// Stress basis: per triangle, (global index, row, coefficients of (1, x, y) for both components).
    pub basis: Vec<Vec<(usize, usize, [f64; 6])>>,
    pub mu: f64,
    pub lambda: f64,
    pub rho: f64,
}

fn legendre(j: usize, s: f64) -> f64 {
    if j == 0 { 1.0 } else { 2.0 * s - 1.0 }
}

fn eval(c: &[f64; 6], x: [f64; 2]) -> [f64; 2] {
    [c[0] + c[1] * x[0] + c[2] * x[1], c[3] + c[4] * x[0] + c[5] * x[1]]
}

/// Two-point Gauss rule on [0, 1].
const GAUSS2: [(f64, f64); 2] = [(0.211_324_865_405_187_1, 0.5), (0.788_675_134_594_812_9, 0.5)];

fn compliance(mu: f64, lambda: f64, t: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let tr = t[0][0] + t[1][1];
    let iso = lambda / (2.0 * (mu + lambda)) * tr;
    let s01 = 0.5 * (t[0][1] + t[1][0]);
    let w01 = 0.5 * (t[0][1] - t[1][0]);
    [
        [(t[0][0] - iso) / (2.0 * mu), s01 / (2.0 * mu) + w01],
        [s01 / (2.0 * mu) - w01, (t[1][1] - iso) / (2.0 * mu)],
    ]
}

impl DenseSystem {
    pub fn build(mesh: &Mesh, mu: f64, lambda: f64, rho: f64) -> Self {
        let ne = mesh.num_edges();
        let nt = mesh.num_triangles();
        let dm = 2 * 2 * ne;
        let (dv, dk) = (2 * nt, nt);
        let mut a = DMatrix::zeros(dm, dm);
        let mut b = DMatrix::zeros(dv, dm);
        let mut c = DMatrix::zeros(dk, dm);
        let mut m = DMatrix::zeros(dv, dv);
        let mut basis = Vec::new();
        for t in 0..nt {
            let tri = mesh.triangles()[t];
            let p: Vec<[f64; 2]> = tri.iter().map(|&v| mesh.vertices()[v]).collect();
            let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1])).abs();
            // edges of this triangle, found by vertex pairs
            let mut edges = Vec::new();
            for (e, &[lo, hi]) in mesh.edges().iter().enumerate() {
                if tri.contains(&lo) && tri.contains(&hi) {
                    edges.push(e);
                }
            }
            assert_eq!(edges.len(), 3);
            let mut dof = Matrix6::zeros();
            let mut ids = Vec::new();
            for (r, &e) in edges.iter().enumerate() {
                let [lo, hi] = mesh.edges()[e];
                let (pa, pb) = (mesh.vertices()[lo], mesh.vertices()[hi]);
                let nrm = [pb[1] - pa[1], pa[0] - pb[0]];
                for j in 0..2 {
                    let row = 2 * r + j;
                    for &(s, w) in &GAUSS2 {
                        let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                        let mono = [1.0, x[0], x[1]];
                        for q in 0..3 {
                            dof[(row, q)] += w * legendre(j, s) * mono[q] * nrm[0];
                            dof[(row, 3 + q)] += w * legendre(j, s) * mono[q] * nrm[1];
                        }
                    }
                    ids.push(2 * e + j);
                }
            }
            let inv = dof.try_inverse().expect("unisolvent");
            let mut local = Vec::new();
            for row in 0..2 {
                for (l, &id) in ids.iter().enumerate() {
                    let col: Vector6<f64> = inv.column(l).into();
                    let coeffs: [f64; 6] = col.as_slice().try_into().unwrap();
                    local.push((row * 2 * ne + id, row, coeffs));
                }
            }
            // edge-midpoint rule, exact for quadratics
            let mids: Vec<[f64; 2]> = (0..3)
                .map(|i| {
                    let (u, v) = (p[(i + 1) % 3], p[(i + 2) % 3]);
                    [0.5 * (u[0] + v[0]), 0.5 * (u[1] + v[1])]
                })
                .collect();
            let field = |(_, row, co): &(usize, usize, [f64; 6]), x: [f64; 2]| {
                let v = eval(co, x);
                let mut mtx = [[0.0; 2]; 2];
                mtx[*row] = v;
                mtx
            };
            for fi in &local {
                for fj in &local {
                    let mut s = 0.0;
                    for &x in &mids {
                        let aj = compliance(mu, lambda, field(fj, x));
                        let pi = field(fi, x);
                        s += area / 3.0 * (aj[0][0] * pi[0][0] + aj[0][1] * pi[0][1] + aj[1][0] * pi[1][0] + aj[1][1] * pi[1][1]);
                    }
                    a[(fi.0, fj.0)] += s;
                }
                let (_, row, co) = fi;
                let div = co[1] + co[5];
                b[(2 * t + row, fi.0)] += area * div;
                let mut skw = 0.0;
                for &x in &mids {
                    let f = field(fi, x);
                    skw += area / 3.0 * (f[0][1] - f[1][0]);
                }
                c[(t, fi.0)] += skw;
            }
            for comp in 0..2 {
                m[(2 * t + comp, 2 * t + comp)] = rho * area;
            }
            basis.push(local);
        }
        Self { a, b, c, m, basis, mu, lambda, rho }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.a.nrows(), self.b.nrows(), self.c.nrows())
    }

    /// `E` and `G` of the block ODE.
    pub fn ode_matrices(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let (dm, dv, dk) = self.dims();
        let n = dm + dv + dk;
        let mut e = DMatrix::zeros(n, n);
        e.view_mut((0, 0), (dm, dm)).copy_from(&self.a);
        e.view_mut((0, dm + dv), (dm, dk)).copy_from(&self.c.transpose());
        e.view_mut((dm, dm), (dv, dv)).copy_from(&self.m);
        e.view_mut((dm + dv, 0), (dk, dm)).copy_from(&self.c);
        let mut g = DMatrix::zeros(n, n);
        g.view_mut((0, dm), (dm, dv)).copy_from(&(-self.b.transpose()));
        g.view_mut((dm, 0), (dv, dm)).copy_from(&self.b);
        (e, g)
    }

    /// Forcing for a constant body force `f` and constant boundary velocity `g`
    /// on every boundary edge.
    pub fn constant_forcing(&self, mesh: &Mesh, f: [f64; 2], g: [f64; 2]) -> DVector<f64> {
        let (dm, dv, dk) = self.dims();
        let mut out = DVector::zeros(dm + dv + dk);
        for t in 0..mesh.num_triangles() {
            let area = mesh.triangle_area(t);
            out[dm + 2 * t] = f[0] * area;
            out[dm + 2 * t + 1] = f[1] * area;
        }
        for (e, tris) in mesh.edge_triangles().iter().enumerate() {
            if tris[1].is_some() {
                continue;
            }
            let t = tris[0].unwrap();
            let tri = mesh.triangles()[t];
            let [lo, hi] = mesh.edges()[e];
            let (pa, pb) = (mesh.vertices()[lo], mesh.vertices()[hi]);
            let opp = mesh.vertices()[*tri.iter().find(|v| **v != lo && **v != hi).unwrap()];
            let mut nrm = [pb[1] - pa[1], pa[0] - pb[0]];
            if nrm[0] * (opp[0] - pa[0]) + nrm[1] * (opp[1] - pa[1]) > 0.0 {
                nrm = [-nrm[0], -nrm[1]];
            }
            for (id, row, co) in &self.basis[t] {
                let mut s = 0.0;
                for &(sp, w) in &GAUSS2 {
                    let x = [pa[0] + sp * (pb[0] - pa[0]), pa[1] + sp * (pb[1] - pa[1])];
                    let v = eval(co, x);
                    s += w * g[*row] * (v[0] * nrm[0] + v[1] * nrm[1]);
                }
                out[*id] += s;
            }
        }
        out
    }
}

/// Dense Crank-Nicolson step for a constant forcing.
pub fn dense_cn(e: &DMatrix<f64>, g: &DMatrix<f64>, y: &DVector<f64>, dt: f64, f: &DVector<f64>) -> DVector<f64> {
    let lhs = e - g * (0.5 * dt);
    let rhs = (e + g * (0.5 * dt)) * y + f * dt;
    lhs.lu().solve(&rhs).expect("nonsingular")
}

/// Dense two-stage RadauIIA step for a constant forcing, stage form.
pub fn dense_radau(e: &DMatrix<f64>, g: &DMatrix<f64>, y: &DVector<f64>, dt: f64, f: &DVector<f64>) -> DVector<f64> {
    let a = [[5.0 / 12.0, -1.0 / 12.0], [0.75, 0.25]];
    let n = y.len();
    // E (Y_i - y) = dt Σ a_ij (G Y_j + f)
    let mut lhs = DMatrix::zeros(2 * n, 2 * n);
    let mut rhs = DVector::zeros(2 * n);
    for i in 0..2 {
        lhs.view_mut((i * n, i * n), (n, n)).copy_from(e);
        for j in 0..2 {
            let blk = g * (dt * a[i][j]);
            let mut v = lhs.view_mut((i * n, j * n), (n, n));
            v -= blk;
        }
        let r = e * y + f * (dt * (a[i][0] + a[i][1]));
        rhs.rows_mut(i * n, n).copy_from(&r);
    }
    let stages = lhs.lu().solve(&rhs).expect("nonsingular");
    stages.rows(n, n).into_owned()
}
