use elastowave::dynamics::Scheme;
use elastowave::verification::{
    convergence_study, error_decomposition_diagnostic, run_case, unit_square_system, CaseKind, MmsCase, RunSettings,
};

#[test]
fn eg1_coarse_stress_error_near_reference() {
    let case = MmsCase::builtin(CaseKind::Eg1).unwrap();
    let e = run_case(&case, 4, RunSettings::new(2, Scheme::CrankNicolson)).unwrap().errors.sigma;
    assert!(e >= 5.73e-2 / 2.0 && e <= 5.73e-2 * 2.0, "{e}");
}

#[test]
fn tables_are_deterministic_and_monotone() {
    let case = MmsCase::builtin(CaseKind::Eg1).unwrap();
    let settings = RunSettings::new(2, Scheme::CrankNicolson);
    let a = convergence_study(&case, settings, &[4, 8, 16]).unwrap();
    let b = convergence_study(&case, settings, &[4, 8, 16]).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    for w in a.rows.windows(2) {
        let (c, f) = (w[0].errors.as_array(), w[1].errors.as_array());
        assert!(c.iter().zip(&f).all(|(c, f)| f < c));
    }
    // observed order never exceeds min(scheme, space) + 0.3
    for row in &a.rows {
        if let Some(o) = row.orders {
            assert!(o.iter().all(|v| *v <= 2.0 + 0.3), "{o:?}");
        }
    }
}

#[test]
fn error_decomposition_of_eg1() {
    let case = MmsCase::builtin(CaseKind::Eg1).unwrap();
    let settings = RunSettings::new(2, Scheme::CrankNicolson);
    let coarse = error_decomposition_diagnostic(&case, settings, 8).unwrap();
    let fine = error_decomposition_diagnostic(&case, settings, 16).unwrap();
    for (c, f) in [(coarse.sigma, fine.sigma), (coarse.v, fine.v), (coarse.r, fine.r)] {
        for s in [c, f] {
            assert!(s.total <= s.projection + s.approximation + 1e-14);
        }
        let rp = (c.projection / f.projection).log2();
        let ra = (c.approximation / f.approximation).log2();
        assert!(rp > 1.7 && ra > 1.7, "{rp} {ra}");
    }
}

#[test]
fn velocity_projection_error_is_orthogonal_to_divergences() {
    let case = MmsCase::builtin(CaseKind::Eg1).unwrap();
    let settings = RunSettings::new(2, Scheme::CrankNicolson);
    let system = unit_square_system(&case, 4, &settings).unwrap();
    let spaces = system.spaces();
    let v = |x| case.velocity(0.6, x);
    let pv = spaces.l2_project_velocity(v);
    let discrete = system.b.transpose_mul_vec(&pv);
    // (div φ_i, v) by quadrature
    let tab = spaces.tabulate(2 * spaces.degree() + 4).unwrap();
    let mut exact = vec![0.0; system.dim_stress()];
    for t in 0..spaces.num_triangles() {
        let eb = spaces.element_basis(t, &tab);
        let dofs = spaces.stress_dofs(t);
        for q in 0..eb.points.len() {
            let vx = v(eb.points[q]);
            for (l, d) in eb.stress_div[q].iter().enumerate() {
                exact[dofs[l].0] += eb.weights[q] * d.dot(&vx);
            }
        }
    }
    let gap = discrete.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(gap <= 1e-10, "{gap}");
}
