//! Time integration of `E y' = G y + F(t)`, `y = (α, β, γ)`, with
//!
//! ```text
//! E = [A 0 C^T]    G = [0 -B^T 0]
//!     [0 M 0  ]        [B  0   0]
//!     [C 0 0  ]        [0  0   0]
//! ```

use std::fmt;

use crate::assembly::BlockSystem;
use crate::error::{Error, Result};
use crate::sparse::{dot, norm, BlockBuilder, CsrMatrix, SparseLu};
use crate::statics::InitialData;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    CrankNicolson,
    Radau2,
}

impl Scheme {
    pub fn order(self) -> usize {
        match self {
            Scheme::CrankNicolson => 2,
            Scheme::Radau2 => 3,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::CrankNicolson => "CN",
            Scheme::Radau2 => "RADAU2",
        })
    }
}

/// Two-stage Runge-Kutta coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ButcherTableau {
    pub c: [f64; 2],
    pub a: [[f64; 2]; 2],
    pub b: [f64; 2],
}

impl ButcherTableau {
    pub fn radau_iia2() -> Self {
        Self { c: [1.0 / 3.0, 1.0], a: [[5.0 / 12.0, -1.0 / 12.0], [0.75, 0.25]], b: [0.75, 0.25] }
    }
}

/// Right-hand side `F(t)` of the linear system, full length.
pub type Forcing<'a> = Option<&'a (dyn Fn(f64) -> Vec<f64> + Sync)>;

fn forcing_at(f: Forcing<'_>, t: f64, n: usize) -> Vec<f64> {
    match f {
        Some(f) => {
            let v = f(t);
            assert_eq!(v.len(), n, "forcing length");
            v
        }
        None => vec![0.0; n],
    }
}

/// One-step methods for `E y' = G y + F(t)` with cached factorizations.
#[derive(Debug)]
pub struct LinearDae {
    e: CsrMatrix,
    g: CsrMatrix,
    cn: Option<(f64, SparseLu)>,
    radau: Option<(f64, SparseLu)>,
    tableau: ButcherTableau,
}

impl LinearDae {
    pub fn new(e: CsrMatrix, g: CsrMatrix) -> Result<Self> {
        if e.nrows() != e.ncols() || g.nrows() != e.nrows() || g.ncols() != e.ncols() {
            return Err(Error::InvalidArgument("E and G must be square of equal size".into()));
        }
        Ok(Self { e, g, cn: None, radau: None, tableau: ButcherTableau::radau_iia2() })
    }

    pub fn dim(&self) -> usize {
        self.e.nrows()
    }

    fn check_dt(dt: f64) -> Result<()> {
        if dt > 0.0 && dt.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")))
        }
    }

    fn step_error(e: Error) -> Error {
        match e {
            Error::Singular(m) => Error::Singular(format!("time step matrix: {m}")),
            other => other,
        }
    }

    /// `(E - dt/2 G) y1 = (E + dt/2 G) y0 + dt F(t + dt/2)`.
    pub fn cn_step(&mut self, y: &[f64], t: f64, dt: f64, f: Forcing<'_>) -> Result<Vec<f64>> {
        Self::check_dt(dt)?;
        let n = self.dim();
        if self.cn.as_ref().map(|c| c.0) != Some(dt) {
            let mut m = BlockBuilder::new(n);
            m.add(0, 0, &self.e, 1.0).add(0, 0, &self.g, -0.5 * dt);
            self.cn = Some((dt, SparseLu::new(m.build()).map_err(Self::step_error)?));
        }
        let ey = self.e.mul_vec(y);
        let gy = self.g.mul_vec(y);
        let load = forcing_at(f, t + 0.5 * dt, n);
        let rhs: Vec<f64> = (0..n).map(|i| ey[i] + 0.5 * dt * gy[i] + dt * load[i]).collect();
        let (_, lu) = self.cn.as_ref().expect("factorized above");
        lu.solve(&rhs)
    }

    /// Two-stage RadauIIA step in derivative form; returns `y1` and the
    /// stage derivatives `K1`, `K2`.
    pub fn radau_step(&mut self, y: &[f64], t: f64, dt: f64, f: Forcing<'_>) -> Result<(Vec<f64>, [Vec<f64>; 2])> {
        Self::check_dt(dt)?;
        let n = self.dim();
        let tab = self.tableau;
        if self.radau.as_ref().map(|c| c.0) != Some(dt) {
            let mut m = BlockBuilder::new(2 * n);
            for i in 0..2 {
                m.add(i * n, i * n, &self.e, 1.0);
                for j in 0..2 {
                    m.add(i * n, j * n, &self.g, -dt * tab.a[i][j]);
                }
            }
            self.radau = Some((dt, SparseLu::new(m.build()).map_err(Self::step_error)?));
        }
        let gy = self.g.mul_vec(y);
        let mut rhs = Vec::with_capacity(2 * n);
        for i in 0..2 {
            let load = forcing_at(f, t + tab.c[i] * dt, n);
            rhs.extend(gy.iter().zip(&load).map(|(a, b)| a + b));
        }
        let (_, lu) = self.radau.as_ref().expect("factorized above");
        let k = lu.solve(&rhs)?;
        let (k1, k2) = k.split_at(n);
        let y1 = (0..n).map(|i| y[i] + dt * (tab.b[0] * k1[i] + tab.b[1] * k2[i])).collect();
        Ok((y1, [k1.to_vec(), k2.to_vec()]))
    }
}

/// `U + dt V + dt²/2 V_t` with `V_t` the velocity derivative at the first stage.
pub fn reconstruct_displacement_third_order(u: &[f64], beta: &[f64], stage_beta_derivative: &[f64], dt: f64) -> Vec<f64> {
    u.iter()
        .zip(beta)
        .zip(stage_beta_derivative)
        .map(|((u, v), vt)| u + dt * v + 0.5 * dt * dt * vt)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemidiscreteState {
    pub t: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Reconstructed displacement.
    pub u: Vec<f64>,
}

impl SemidiscreteState {
    pub fn from_initial(data: &InitialData, t: f64) -> Self {
        Self { t, alpha: data.sigma0.clone(), beta: data.v0.clone(), gamma: data.r0.clone(), u: data.u0.clone() }
    }

    fn stacked(&self) -> Vec<f64> {
        [self.alpha.as_slice(), &self.beta, &self.gamma].concat()
    }

    fn unstack(&mut self, y: &[f64]) {
        let (dm, dv) = (self.alpha.len(), self.beta.len());
        self.alpha.copy_from_slice(&y[..dm]);
        self.beta.copy_from_slice(&y[dm..dm + dv]);
        self.gamma.copy_from_slice(&y[dm + dv..]);
    }
}

/// Observer log row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub energy: f64,
    /// `||C α_n - C α_0||`.
    pub constraint_drift: f64,
    pub alpha_norm: f64,
    /// `(A σ_h, I)`.
    pub trace_moment: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub final_state: SemidiscreteState,
    pub log: Vec<StepRecord>,
}

/// `½ αᵀ A α + ½ βᵀ M β`.
pub fn energy(system: &BlockSystem, state: &SemidiscreteState) -> f64 {
    0.5 * system.a.bilinear(&state.alpha, &state.alpha) + 0.5 * system.m.bilinear(&state.beta, &state.beta)
}

/// Time stepper for an assembled system.
#[derive(Debug)]
pub struct Dynamics<'s> {
    system: &'s BlockSystem,
    dae: LinearDae,
    identity_moment: Vec<f64>,
}

impl<'s> Dynamics<'s> {
    pub fn new(system: &'s BlockSystem) -> Result<Self> {
        let (dm, dv, dk) = (system.dim_stress(), system.dim_velocity(), system.dim_rotation());
        let n = dm + dv + dk;
        let mut e = BlockBuilder::new(n);
        e.add(0, 0, &system.a, 1.0)
            .add_transpose(0, dm + dv, &system.c, 1.0)
            .add(dm, dm, &system.m, 1.0)
            .add(dm + dv, 0, &system.c, 1.0);
        let mut g = BlockBuilder::new(n);
        g.add_transpose(0, dm, &system.b, -1.0).add(dm, 0, &system.b, 1.0);
        let identity = system.spaces().canonical_interpolation(|_| nalgebra::Matrix2::identity());
        let identity_moment = system.a.mul_vec(&identity);
        Ok(Self { system, dae: LinearDae::new(e.build(), g.build())?, identity_moment })
    }

    pub fn system(&self) -> &BlockSystem {
        self.system
    }

    fn check_state(&self, s: &SemidiscreteState) -> Result<()> {
        let sys = self.system;
        if s.alpha.len() != sys.dim_stress()
            || s.beta.len() != sys.dim_velocity()
            || s.gamma.len() != sys.dim_rotation()
            || s.u.len() != sys.dim_velocity()
        {
            return Err(Error::InvalidArgument("state does not match the system dimensions".into()));
        }
        Ok(())
    }

    /// Crank-Nicolson step with trapezoidal displacement update.
    pub fn cn_step(&mut self, state: &SemidiscreteState, dt: f64, f: Forcing<'_>) -> Result<SemidiscreteState> {
        self.check_state(state)?;
        let y1 = self.dae.cn_step(&state.stacked(), state.t, dt, f)?;
        let mut next = state.clone();
        next.unstack(&y1);
        next.t = state.t + dt;
        for (u, (b0, b1)) in next.u.iter_mut().zip(state.beta.iter().zip(&next.beta)) {
            *u += 0.5 * dt * (b0 + b1);
        }
        Ok(next)
    }

    /// RadauIIA step; also returns the velocity derivative at the first stage.
    ///
    /// The displacement is advanced with the third-order rule.
    pub fn radau2_step(
        &mut self,
        state: &SemidiscreteState,
        dt: f64,
        f: Forcing<'_>,
    ) -> Result<(SemidiscreteState, Vec<f64>)> {
        self.check_state(state)?;
        let (y1, [k1, _]) = self.dae.radau_step(&state.stacked(), state.t, dt, f)?;
        let dm = self.system.dim_stress();
        let vt = k1[dm..dm + self.system.dim_velocity()].to_vec();
        let mut next = state.clone();
        next.unstack(&y1);
        next.t = state.t + dt;
        next.u = reconstruct_displacement_third_order(&state.u, &state.beta, &vt, dt);
        Ok((next, vt))
    }

    pub fn step(&mut self, scheme: Scheme, state: &SemidiscreteState, dt: f64, f: Forcing<'_>) -> Result<SemidiscreteState> {
        match scheme {
            Scheme::CrankNicolson => self.cn_step(state, dt, f),
            Scheme::Radau2 => Ok(self.radau2_step(state, dt, f)?.0),
        }
    }

    pub fn trace_moment(&self, state: &SemidiscreteState) -> f64 {
        dot(&self.identity_moment, &state.alpha)
    }

    fn record(&self, step: usize, state: &SemidiscreteState, c0: &[f64]) -> StepRecord {
        let c = self.system.c.mul_vec(&state.alpha);
        let drift = c.iter().zip(c0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        StepRecord {
            step,
            t: state.t,
            energy: energy(self.system, state),
            constraint_drift: drift,
            alpha_norm: norm(&state.alpha),
            trace_moment: self.trace_moment(state),
        }
    }

    /// Integrates from `initial.t` to `t_end` with `observer` called after every step.
    pub fn integrate(
        &mut self,
        initial: SemidiscreteState,
        scheme: Scheme,
        dt: f64,
        t_end: f64,
        f: Forcing<'_>,
        observer: &mut dyn FnMut(&SemidiscreteState),
    ) -> Result<Trajectory> {
        let span = t_end - initial.t;
        let steps = (span / dt).round();
        if !(dt > 0.0) || steps < 1.0 || (steps * dt - span).abs() > 1e-12 * span.max(1.0) {
            return Err(Error::InvalidArgument(format!("dt = {dt} does not divide the interval of length {span}")));
        }
        let steps = steps as usize;
        let c0 = self.system.c.mul_vec(&initial.alpha);
        let mut log = Vec::with_capacity(steps + 1);
        log.push(self.record(0, &initial, &c0));
        let t_start = initial.t;
        let mut state = initial;
        for i in 1..=steps {
            let mut next = self.step(scheme, &state, dt, f)?;
            // Avoid accumulating rounding in the clock.
            next.t = t_start + i as f64 * dt;
            state = next;
            observer(&state);
            log.push(self.record(i, &state, &c0));
        }
        Ok(Trajectory { final_state: state, log })
    }
}
