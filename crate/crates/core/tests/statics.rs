use std::sync::Arc;

use elastowave::assembly::{BlockSystem, MaterialModel};
use elastowave::mesh::{BoundaryTag, Diagonal, Mesh};
use elastowave::spaces::DiscreteSpaces;
use elastowave::statics::{
    build_initial_data, elastostatic_rhs, solve_elastostatics, EllipticProjector,
};
use elastowave::verification::{
    divergence_l2_error, rotation_l2_error, stress_l2_error, velocity_l2_error, CaseKind, MmsCase,
};
use nalgebra::Matrix2;

fn system(n: usize, k: usize) -> BlockSystem {
    let mut mesh = Mesh::unit_square(n, Diagonal::default()).unwrap();
    mesh.tag_boundary(|_| BoundaryTag::Dirichlet);
    let spaces = Arc::new(DiscreteSpaces::new(Arc::new(mesh), k).unwrap());
    BlockSystem::assemble(spaces, MaterialModel::homogeneous(1.0, 1.0, 1.0).unwrap()).unwrap()
}

fn rate(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

#[test]
fn manufactured_static_solution_converges_at_order_k() {
    // u = (sin πx sin πy, x(1-x)y(1-y)) is the EG1 profile at sin t = 1
    let case = MmsCase::builtin(CaseKind::Eg1).unwrap();
    let t = std::f64::consts::FRAC_PI_2;
    for k in 1..=2 {
        let mut prev: Option<[f64; 3]> = None;
        for n in [4, 8, 16] {
            let s = system(n, k);
            let [fs, fv, fr] = elastostatic_rhs(&s, |x| -case.stress_divergence(t, x), |x| case.displacement(t, x));
            let sol = solve_elastostatics(&s, &fs, &fv, &fr).unwrap();
            let spaces = s.spaces();
            let pu = spaces.l2_project_velocity(|x| case.displacement(t, x));
            let gap: Vec<f64> = pu.iter().zip(&sol.u).map(|(a, b)| a - b).collect();
            let errs = [
                stress_l2_error(spaces, &sol.sigma, |x| case.stress(t, x)),
                velocity_l2_error(spaces, &gap, |_| nalgebra::Vector2::zeros()),
                rotation_l2_error(spaces, &sol.r, |x| case.rotation(t, x)),
            ];
            if let Some(p) = prev {
                for i in 0..3 {
                    let r = rate(p[i], errs[i]);
                    assert!(r > k as f64 - 0.15, "k={k} n={n} field {i}: rate {r}");
                }
            }
            prev = Some(errs);
        }
    }
}

#[test]
fn elliptic_projection_is_quasi_optimal() {
    let case = MmsCase::builtin(CaseKind::Eg1).unwrap();
    let sigma = |x| case.stress(0.9, x);
    let div = |x| case.stress_divergence(0.9, x);
    for k in 1..=3 {
        for n in [2, 4, 8] {
            let s = system(n, k);
            let spaces = s.spaces();
            let proj = EllipticProjector::new(&s).unwrap().project(sigma, div).unwrap();
            let interp = spaces.canonical_interpolation(sigma);
            let ep = stress_l2_error(spaces, &proj, sigma);
            let ei = stress_l2_error(spaces, &interp, sigma);
            // the constant is not quantified; 10 is a working bound
            assert!(ep <= 10.0 * ei, "k={k} n={n}: {ep} vs {ei}");

            let hdiv = |c: &[f64]| {
                (stress_l2_error(spaces, c, |_| Matrix2::zeros()).powi(2)
                    + divergence_l2_error(spaces, c, |_| nalgebra::Vector2::zeros()).powi(2))
                .sqrt()
            };
            let exact = (stress_l2_error(spaces, &vec![0.0; s.dim_stress()], sigma).powi(2)
                + divergence_l2_error(spaces, &vec![0.0; s.dim_stress()], div).powi(2))
            .sqrt();
            assert!(hdiv(&proj) <= 10.0 * exact, "k={k} n={n}");
        }
    }
}

#[test]
fn elliptic_projection_preserves_space_members() {
    let s = system(3, 2);
    let spaces = s.spaces();
    let member = spaces.canonical_interpolation(|x| Matrix2::new(1.0 + x[0], x[1] * x[1], -x[0] * x[1], 2.0));
    let p = EllipticProjector::new(&s).unwrap().project_discrete(&member).unwrap();
    for (a, b) in member.iter().zip(&p) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn initial_stress_converges_at_order_k() {
    let case = MmsCase::builtin(CaseKind::Eg2 { alpha: 2.7 }).unwrap();
    for k in 1..=2 {
        let errs: Vec<f64> = [4, 8, 16]
            .iter()
            .map(|&n| {
                let s = system(n, k);
                let d = build_initial_data(&case, &s).unwrap();
                stress_l2_error(s.spaces(), &d.sigma0, |x| case.stress(0.0, x))
            })
            .collect();
        let r = rate(errs[1], errs[2]);
        assert!((r - k as f64).abs() < 0.3, "k={k}: {errs:?}");
    }
}
