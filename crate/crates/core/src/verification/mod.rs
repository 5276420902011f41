//! Manufactured-solution experiments: error norms, convergence tables,
//! λ sweeps and the projection/approximation error split.

mod cases;

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};

pub use cases::{CaseKind, Jet, MmsCase, SeparableField, SpatialFactor, TimeFactor};

use crate::assembly::BlockSystem;
use crate::dynamics::{Dynamics, Scheme, SemidiscreteState, StepRecord};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mesh::{BoundaryTag, Diagonal, Mesh, Point};
use crate::spaces::DiscreteSpaces;
use crate::statics::{build_initial_data, EllipticProjector};

fn error_degree(spaces: &DiscreteSpaces) -> usize {
    2 * spaces.degree() + 4
}

/// `||σ - σ_h||` for a global stress coefficient vector.
pub fn stress_l2_error<F>(spaces: &DiscreteSpaces, coefficients: &[f64], exact: F) -> f64
where
    F: Fn(Point) -> Matrix2<f64> + Sync,
{
    let tab = spaces.tabulate(error_degree(spaces)).expect("supported degree");
    let parts = spaces.execution().map(spaces.num_triangles(), |t| {
        let eb = spaces.element_basis(t, &tab);
        let dofs = spaces.stress_dofs(t);
        let mut acc = 0.0;
        for q in 0..eb.points.len() {
            let mut sh = Matrix2::zeros();
            for (l, phi) in eb.stress[q].iter().enumerate() {
                sh += phi * coefficients[dofs[l].0];
            }
            acc += eb.weights[q] * (exact(eb.points[q]) - sh).norm_squared();
        }
        acc
    });
    parts.iter().sum::<f64>().sqrt()
}

/// `||div σ_h - d||`.
pub fn divergence_l2_error<F>(spaces: &DiscreteSpaces, coefficients: &[f64], exact: F) -> f64
where
    F: Fn(Point) -> Vector2<f64> + Sync,
{
    let tab = spaces.tabulate(error_degree(spaces)).expect("supported degree");
    let parts = spaces.execution().map(spaces.num_triangles(), |t| {
        let eb = spaces.element_basis(t, &tab);
        let dofs = spaces.stress_dofs(t);
        let mut acc = 0.0;
        for q in 0..eb.points.len() {
            let mut dh = Vector2::zeros();
            for (l, d) in eb.stress_div[q].iter().enumerate() {
                dh += d * coefficients[dofs[l].0];
            }
            acc += eb.weights[q] * (exact(eb.points[q]) - dh).norm_squared();
        }
        acc
    });
    parts.iter().sum::<f64>().sqrt()
}

/// `||v - v_h||` for a velocity (or displacement) coefficient vector.
pub fn velocity_l2_error<F>(spaces: &DiscreteSpaces, coefficients: &[f64], exact: F) -> f64
where
    F: Fn(Point) -> Vector2<f64> + Sync,
{
    let tab = spaces.tabulate(error_degree(spaces)).expect("supported degree");
    let parts = spaces.execution().map(spaces.num_triangles(), |t| {
        let map = spaces.element_map(t);
        let mut acc = 0.0;
        for (p, w) in tab.rule.iter() {
            let diff = exact(map.to_physical(p)) - spaces.velocity_value(coefficients, t, p);
            acc += w * map.det() * diff.norm_squared();
        }
        acc
    });
    parts.iter().sum::<f64>().sqrt()
}

/// `||r - r_h||` measured as skew matrices, i.e. `√2 ||q - q_h||`.
pub fn rotation_l2_error<F>(spaces: &DiscreteSpaces, coefficients: &[f64], exact: F) -> f64
where
    F: Fn(Point) -> f64 + Sync,
{
    let tab = spaces.tabulate(error_degree(spaces)).expect("supported degree");
    let parts = spaces.execution().map(spaces.num_triangles(), |t| {
        let map = spaces.element_map(t);
        let mut acc = 0.0;
        for (p, w) in tab.rule.iter() {
            let diff = exact(map.to_physical(p)) - spaces.rotation_value(coefficients, t, p);
            acc += w * map.det() * 2.0 * diff * diff;
        }
        acc
    });
    parts.iter().sum::<f64>().sqrt()
}

/// L2 errors of the four fields.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldErrors {
    pub sigma: f64,
    pub v: f64,
    pub u: f64,
    pub r: f64,
}

impl FieldErrors {
    pub fn as_array(&self) -> [f64; 4] {
        [self.sigma, self.v, self.u, self.r]
    }
}

/// Errors of a discrete state against `case` at the state's time.
pub fn state_errors(case: &MmsCase, spaces: &DiscreteSpaces, state: &SemidiscreteState) -> FieldErrors {
    let t = state.t;
    FieldErrors {
        sigma: stress_l2_error(spaces, &state.alpha, |x| case.stress(t, x)),
        v: velocity_l2_error(spaces, &state.beta, |x| case.velocity(t, x)),
        u: velocity_l2_error(spaces, &state.u, |x| case.displacement(t, x)),
        r: rotation_l2_error(spaces, &state.gamma, |x| case.rotation(t, x)),
    }
}

/// Time step selection for a mesh with `n` cells per side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtRule {
    /// `dt = 1/n`
    EqualsH,
    Fixed(f64),
}

impl DtRule {
    pub fn dt(self, n: usize) -> f64 {
        match self {
            DtRule::EqualsH => 1.0 / n as f64,
            DtRule::Fixed(dt) => dt,
        }
    }
}

/// Settings of one manufactured-solution run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub k: usize,
    pub scheme: Scheme,
    pub dt_rule: DtRule,
    pub diagonal: Diagonal,
    pub execution: Execution,
}

impl RunSettings {
    pub fn new(k: usize, scheme: Scheme) -> Self {
        Self { k, scheme, dt_rule: DtRule::EqualsH, diagonal: Diagonal::default(), execution: Execution::default() }
    }
}

/// Assembled system on the unit square with all edges clamped.
pub fn unit_square_system(case: &MmsCase, n: usize, settings: &RunSettings) -> Result<BlockSystem> {
    let (k, execution) = (settings.k, settings.execution);
    let mut mesh = Mesh::unit_square(n, settings.diagonal)?;
    mesh.tag_boundary(|_| BoundaryTag::Dirichlet);
    let spaces = DiscreteSpaces::new(Arc::new(mesh), k)?.with_execution(execution);
    BlockSystem::assemble(Arc::new(spaces), case.material())
}

/// Full right-hand side `F(t)` of the dynamic system for `case`.
pub fn case_forcing<'a>(case: &'a MmsCase, system: &'a BlockSystem) -> impl Fn(f64) -> Vec<f64> + Sync + 'a {
    move |t| {
        let mut f = system.dirichlet_load(|s, x| case.boundary_velocity(s, x), t);
        f.extend(system.body_load(|s, x| case.body_force(s, x), t));
        f.extend(std::iter::repeat_n(0.0, system.dim_rotation()));
        f
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub n: usize,
    pub dt: f64,
    pub errors: FieldErrors,
    pub log: Vec<StepRecord>,
    pub final_state: SemidiscreteState,
}

/// Integrates `case` on the `n × n` mesh up to `case.t0` and measures the errors.
pub fn run_case(case: &MmsCase, n: usize, settings: RunSettings) -> Result<RunOutcome> {
    let system = unit_square_system(case, n, &settings)?;
    let dt = settings.dt_rule.dt(n);
    let initial = build_initial_data(case, &system)?;
    let forcing = case_forcing(case, &system);
    let mut dynamics = Dynamics::new(&system)?;
    let traj = dynamics.integrate(
        SemidiscreteState::from_initial(&initial, 0.0),
        settings.scheme,
        dt,
        case.t0,
        Some(&forcing),
        &mut |_| {},
    )?;
    let errors = state_errors(case, system.spaces(), &traj.final_state);
    Ok(RunOutcome { n, dt, errors, log: traj.log, final_state: traj.final_state })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub inv_h: usize,
    pub errors: FieldErrors,
    /// Observed orders against the previous row.
    pub orders: Option<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

/// Three significant digits with a signed two-digit exponent, e.g. `5.73e-02`.
pub fn format_error(e: f64) -> String {
    let s = format!("{e:.2e}");
    match s.split_once('e') {
        Some((m, exp)) => {
            let (sign, digits) = exp.strip_prefix('-').map_or(("+", exp), |d| ("-", d));
            format!("{m}e{sign}{digits:0>2}")
        }
        None => s,
    }
}

pub const CSV_HEADER: &str = "inv_h,err_sigma,ord_sigma,err_v,ord_v,err_u,ord_u,err_r,ord_r";

impl ConvergenceTable {
    pub fn from_errors(entries: &[(usize, FieldErrors)]) -> Self {
        let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(entries.len());
        for &(inv_h, errors) in entries {
            let orders = rows.last().map(|prev| {
                let (a, b) = (prev.errors.as_array(), errors.as_array());
                let ratio = inv_h as f64 / prev.inv_h as f64;
                std::array::from_fn(|i| (a[i] / b[i]).ln() / ratio.ln())
            });
            rows.push(ConvergenceRow { inv_h, errors, orders });
        }
        Self { rows }
    }

    /// Orders of the last row.
    pub fn finest_orders(&self) -> Option<[f64; 4]> {
        self.rows.last().and_then(|r| r.orders)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            write!(out, "{}", row.inv_h).unwrap();
            for (i, e) in row.errors.as_array().iter().enumerate() {
                match row.orders {
                    Some(o) => write!(out, ",{},{:.2}", format_error(*e), o[i]).unwrap(),
                    None => write!(out, ",{},", format_error(*e)).unwrap(),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Aligned plain-text rendering.
    pub fn to_pretty(&self) -> String {
        let mut out = format!(
            "{:>5} | {:>9} {:>5} | {:>9} {:>5} | {:>9} {:>5} | {:>9} {:>5}\n",
            "1/h", "|s-sh|", "ord", "|v-vh|", "ord", "|u-uh|", "ord", "|r-rh|", "ord"
        );
        for row in &self.rows {
            write!(out, "{:>5} |", row.inv_h).unwrap();
            for (i, e) in row.errors.as_array().iter().enumerate() {
                let o = row.orders.map_or("--".to_string(), |o| format!("{:.2}", o[i]));
                write!(out, " {:>9} {o:>5}", format_error(*e)).unwrap();
                if i < 3 {
                    out.push_str(" |");
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Runs `case` on each mesh of `n_list` (each twice the previous).
pub fn convergence_study(case: &MmsCase, settings: RunSettings, n_list: &[usize]) -> Result<ConvergenceTable> {
    if n_list.is_empty() {
        return Err(Error::InvalidArgument("empty mesh list".into()));
    }
    if n_list.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::InvalidArgument(format!("mesh sizes must double: {n_list:?}")));
    }
    let mut entries = Vec::with_capacity(n_list.len());
    for &n in n_list {
        entries.push((n, run_case(case, n, settings)?.errors));
    }
    Ok(ConvergenceTable::from_errors(&entries))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockingRow {
    pub lambda: f64,
    pub err_sigma: f64,
    pub err_v: f64,
}

/// Errors for each λ on a fixed mesh, with the exact solution recomputed per λ.
pub fn locking_study(case: &MmsCase, settings: RunSettings, n: usize, lambdas: &[f64]) -> Result<Vec<LockingRow>> {
    lambdas
        .iter()
        .map(|&lambda| {
            let c = case.clone().with_lambda(lambda)?;
            let out = run_case(&c, n, settings)?;
            Ok(LockingRow { lambda, err_sigma: out.errors.sigma, err_v: out.errors.v })
        })
        .collect()
}

/// `max / min` of a positive sequence.
pub fn spread(values: impl IntoIterator<Item = f64>) -> f64 {
    let (lo, hi) = values.into_iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    hi / lo
}

/// Norms of the projection part and the discrete part of each error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSplit {
    pub total: f64,
    pub projection: f64,
    pub approximation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorDecomposition {
    pub sigma: ErrorSplit,
    pub v: ErrorSplit,
    pub r: ErrorSplit,
}

/// Splits the errors at `case.t0` into `(σ - Π̃σ, Π̃σ - σ_h)`, `(v - P v, P v - v_h)`
/// and `(r - P r, P r - r_h)`.
pub fn error_decomposition_diagnostic(case: &MmsCase, settings: RunSettings, n: usize) -> Result<ErrorDecomposition> {
    let system = unit_square_system(case, n, &settings)?;
    let spaces = system.spaces();
    let dt = settings.dt_rule.dt(n);
    let initial = build_initial_data(case, &system)?;
    let forcing = case_forcing(case, &system);
    let mut dynamics = Dynamics::new(&system)?;
    let state = dynamics
        .integrate(SemidiscreteState::from_initial(&initial, 0.0), settings.scheme, dt, case.t0, Some(&forcing), &mut |_| {})?
        .final_state;
    let t = state.t;
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<f64>>();

    let ps = EllipticProjector::new(&system)?.project(|x| case.stress(t, x), |x| case.stress_divergence(t, x))?;
    let pv = spaces.l2_project_velocity(|x| case.velocity(t, x));
    let pr = spaces.l2_project_rotation(|x| case.rotation(t, x));
    Ok(ErrorDecomposition {
        sigma: ErrorSplit {
            total: stress_l2_error(spaces, &state.alpha, |x| case.stress(t, x)),
            projection: stress_l2_error(spaces, &ps, |x| case.stress(t, x)),
            approximation: stress_l2_error(spaces, &diff(&ps, &state.alpha), |_| Matrix2::zeros()),
        },
        v: ErrorSplit {
            total: velocity_l2_error(spaces, &state.beta, |x| case.velocity(t, x)),
            projection: velocity_l2_error(spaces, &pv, |x| case.velocity(t, x)),
            approximation: velocity_l2_error(spaces, &diff(&pv, &state.beta), |_| Vector2::zeros()),
        },
        r: ErrorSplit {
            total: rotation_l2_error(spaces, &state.gamma, |x| case.rotation(t, x)),
            projection: rotation_l2_error(spaces, &pr, |x| case.rotation(t, x)),
            approximation: rotation_l2_error(spaces, &diff(&pr, &state.gamma), |_| 0.0),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_from_errors() {
        let e = |s: f64| FieldErrors { sigma: s, v: s, u: s, r: s };
        let t = ConvergenceTable::from_errors(&[(4, e(1.6e-2)), (8, e(4.0e-3)), (16, e(5.0e-4))]);
        assert!(t.rows[0].orders.is_none());
        assert!((t.rows[1].orders.unwrap()[0] - 2.0).abs() < 1e-12);
        assert!((t.finest_orders().unwrap()[3] - 3.0).abs() < 1e-12);
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), Some("4,1.60e-02,,1.60e-02,,1.60e-02,,1.60e-02,"));
        assert_eq!(lines.next(), Some("8,4.00e-03,2.00,4.00e-03,2.00,4.00e-03,2.00,4.00e-03,2.00"));
    }

    #[test]
    fn constant_velocity_has_no_error() {
        let mesh = Arc::new(Mesh::unit_square(3, Diagonal::default()).unwrap());
        let s = DiscreteSpaces::new(mesh, 2).unwrap();
        let v = |_: Point| Vector2::new(0.4, -2.0);
        let c = s.l2_project_velocity(v);
        assert!(velocity_l2_error(&s, &c, v) < 1e-13);
    }

    #[test]
    fn error_format() {
        assert_eq!(format_error(5.73e-2), "5.73e-02");
        assert_eq!(format_error(1.234e3), "1.23e+03");
        assert_eq!(format_error(0.0), "0.00e+00");
    }

    #[test]
    fn spread_of_values() {
        assert_eq!(spread([2.0, 1.0, 4.0]), 4.0);
    }

    #[test]
    fn doubling_required() {
        let case = MmsCase::builtin(CaseKind::Eg1).unwrap();
        assert!(convergence_study(&case, RunSettings::new(1, Scheme::CrankNicolson), &[2, 3]).is_err());
    }
}
