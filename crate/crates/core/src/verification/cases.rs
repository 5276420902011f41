//! Manufactured displacement fields and the data derived from them.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};

use crate::assembly::MaterialModel;
use crate::dynamics::Scheme;
use crate::error::{Error, Result};
use crate::mesh::Point;

/// Value, gradient and Hessian of a scalar function at a point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

/// Scalar function of time together with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeFactor {
    Zero,
    Sin,
    /// `1 + t²`
    OnePlusSquare,
    /// `1 + cos t`
    OnePlusCos,
    Square,
}

impl TimeFactor {
    /// `d^order/dt^order` at `t`, for `order` in `0..=2`.
    pub fn derivative(self, order: usize, t: f64) -> f64 {
        match (self, order) {
            (TimeFactor::Zero, _) => 0.0,
            (TimeFactor::Sin, 0) => t.sin(),
            (TimeFactor::Sin, 1) => t.cos(),
            (TimeFactor::Sin, _) => -t.sin(),
            (TimeFactor::OnePlusSquare, 0) => 1.0 + t * t,
            (TimeFactor::OnePlusSquare, 1) => 2.0 * t,
            (TimeFactor::OnePlusSquare, _) => 2.0,
            (TimeFactor::OnePlusCos, 0) => 1.0 + t.cos(),
            (TimeFactor::OnePlusCos, 1) => -t.sin(),
            (TimeFactor::OnePlusCos, _) => -t.cos(),
            (TimeFactor::Square, 0) => t * t,
            (TimeFactor::Square, 1) => 2.0 * t,
            (TimeFactor::Square, _) => 2.0,
        }
    }
}

pub type SpatialFactor = Arc<dyn Fn(Point) -> Jet + Send + Sync>;

/// Displacement whose components are `u_i(t, x) = T_i(t) S_i(x)`.
#[derive(Clone)]
pub struct SeparableField {
    pub time: [TimeFactor; 2],
    pub space: [SpatialFactor; 2],
}

impl SeparableField {
    fn jets(&self, x: Point) -> [Jet; 2] {
        [(self.space[0])(x), (self.space[1])(x)]
    }

    /// `∂_t^order u`.
    pub fn time_derivative(&self, order: usize, t: f64, x: Point) -> Vector2<f64> {
        let j = self.jets(x);
        Vector2::new(
            self.time[0].derivative(order, t) * j[0].value,
            self.time[1].derivative(order, t) * j[1].value,
        )
    }

    /// `grad u` with entry `(i, j) = ∂_j u_i`.
    pub fn gradient(&self, t: f64, x: Point) -> Matrix2<f64> {
        let j = self.jets(x);
        let (a, b) = (self.time[0].derivative(0, t), self.time[1].derivative(0, t));
        Matrix2::new(a * j[0].grad[0], a * j[0].grad[1], b * j[1].grad[0], b * j[1].grad[1])
    }

    /// Hessians of both components.
    pub fn hessians(&self, t: f64, x: Point) -> [Matrix2<f64>; 2] {
        let j = self.jets(x);
        let h = |c: usize| {
            let s = self.time[c].derivative(0, t);
            let m = j[c].hess;
            Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]) * s
        };
        [h(0), h(1)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CaseKind {
    Eg1,
    Eg2 { alpha: f64 },
    Eg3,
    /// `u = (t² x, 0)`: constant stress, linear-in-space load.
    Probe,
    /// Divergence-free field `curl(sin²πx sin²πy) sin t`, whose stress and
    /// load do not depend on λ.
    Solenoidal,
}

/// Manufactured solution with homogeneous material data.
#[derive(Clone)]
pub struct MmsCase {
    pub name: String,
    pub kind: CaseKind,
    pub field: SeparableField,
    pub mu: f64,
    pub lambda: f64,
    pub rho: f64,
    pub t0: f64,
}

impl fmt::Debug for MmsCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MmsCase")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("mu", &self.mu)
            .field("lambda", &self.lambda)
            .field("rho", &self.rho)
            .field("t0", &self.t0)
            .finish()
    }
}

fn sine_bubble(x: Point) -> Jet {
    let (sx, cx) = (PI * x[0]).sin_cos();
    let (sy, cy) = (PI * x[1]).sin_cos();
    let p2 = PI * PI;
    Jet {
        value: sx * sy,
        grad: [PI * cx * sy, PI * sx * cy],
        hess: [[-p2 * sx * sy, p2 * cx * cy], [p2 * cx * cy, -p2 * sx * sy]],
    }
}

fn poly_bubble(x: Point) -> Jet {
    let (a, b) = (x[0] * (1.0 - x[0]), x[1] * (1.0 - x[1]));
    let (da, db) = (1.0 - 2.0 * x[0], 1.0 - 2.0 * x[1]);
    Jet { value: a * b, grad: [da * b, a * db], hess: [[-2.0 * b, da * db], [da * db, -2.0 * a]] }
}

/// `x^p y^q` for real exponents.
fn power(p: f64, q: f64) -> SpatialFactor {
    let d = |e: f64, s: f64, n: i32| -> f64 {
        match n {
            0 => s.powf(e),
            1 => e * s.powf(e - 1.0),
            _ => e * (e - 1.0) * s.powf(e - 2.0),
        }
    };
    Arc::new(move |x: Point| {
        let (x0, x1) = (x[0], x[1]);
        Jet {
            value: d(p, x0, 0) * d(q, x1, 0),
            grad: [d(p, x0, 1) * d(q, x1, 0), d(p, x0, 0) * d(q, x1, 1)],
            hess: [
                [d(p, x0, 2) * d(q, x1, 0), d(p, x0, 1) * d(q, x1, 1)],
                [d(p, x0, 1) * d(q, x1, 1), d(p, x0, 0) * d(q, x1, 2)],
            ],
        }
    })
}

/// Derivatives 0..=3 of `sin²(πs)`.
fn sin2(s: f64) -> [f64; 4] {
    let sn = (PI * s).sin();
    let (s2, c2) = (2.0 * PI * s).sin_cos();
    [sn * sn, PI * s2, 2.0 * PI * PI * c2, -4.0 * PI * PI * PI * s2]
}

fn curl_first(x: Point) -> Jet {
    // ψ_y with ψ = a(x) a(y)
    let (a, b) = (sin2(x[0]), sin2(x[1]));
    Jet {
        value: a[0] * b[1],
        grad: [a[1] * b[1], a[0] * b[2]],
        hess: [[a[2] * b[1], a[1] * b[2]], [a[1] * b[2], a[0] * b[3]]],
    }
}

fn curl_second(x: Point) -> Jet {
    // -ψ_x
    let (a, b) = (sin2(x[0]), sin2(x[1]));
    Jet {
        value: -a[1] * b[0],
        grad: [-a[2] * b[0], -a[1] * b[1]],
        hess: [[-a[3] * b[0], -a[2] * b[1]], [-a[2] * b[1], -a[1] * b[2]]],
    }
}

impl MmsCase {
    pub fn builtin(kind: CaseKind) -> Result<Self> {
        let (name, field) = match kind {
            CaseKind::Eg1 | CaseKind::Eg3 => (
                if kind == CaseKind::Eg1 { "eg1" } else { "eg3" },
                SeparableField {
                    time: [TimeFactor::Sin, TimeFactor::Sin],
                    space: [Arc::new(sine_bubble) as SpatialFactor, Arc::new(poly_bubble)],
                },
            ),
            CaseKind::Eg2 { alpha } => {
                if !(alpha.is_finite() && alpha > 1.5) {
                    return Err(Error::InvalidArgument(format!("alpha must exceed 3/2, got {alpha}")));
                }
                (
                    "eg2",
                    SeparableField {
                        time: [TimeFactor::OnePlusSquare, TimeFactor::OnePlusCos],
                        space: [power(alpha, 2.0), power(2.0, alpha)],
                    },
                )
            }
            CaseKind::Probe => (
                "probe",
                SeparableField {
                    time: [TimeFactor::Square, TimeFactor::Zero],
                    space: [power(1.0, 0.0), Arc::new(|_| Jet::default())],
                },
            ),
            CaseKind::Solenoidal => (
                "solenoidal",
                SeparableField {
                    time: [TimeFactor::Sin, TimeFactor::Sin],
                    space: [Arc::new(curl_first) as SpatialFactor, Arc::new(curl_second)],
                },
            ),
        };
        Ok(Self { name: name.into(), kind, field, mu: 1.0, lambda: 1.0, rho: 1.0, t0: 1.0 })
    }

    /// Overrides the Lamé parameters and density.
    pub fn with_material(mut self, mu: f64, lambda: f64, rho: f64) -> Result<Self> {
        MaterialModel::homogeneous(mu, lambda, rho)?;
        self.mu = mu;
        self.lambda = lambda;
        self.rho = rho;
        Ok(self)
    }

    pub fn with_lambda(self, lambda: f64) -> Result<Self> {
        let (mu, rho) = (self.mu, self.rho);
        self.with_material(mu, lambda, rho)
    }

    pub fn material(&self) -> MaterialModel {
        MaterialModel::homogeneous(self.mu, self.lambda, self.rho).expect("validated on construction")
    }

    pub fn alpha(&self) -> Option<f64> {
        match self.kind {
            CaseKind::Eg2 { alpha } => Some(alpha),
            _ => None,
        }
    }

    /// Polynomial degree and time scheme used for this case in the reference experiments.
    pub fn default_discretization(&self) -> (usize, Scheme) {
        match self.kind {
            CaseKind::Eg3 => (3, Scheme::Radau2),
            CaseKind::Solenoidal => (1, Scheme::CrankNicolson),
            _ => (2, Scheme::CrankNicolson),
        }
    }

    pub fn displacement(&self, t: f64, x: Point) -> Vector2<f64> {
        self.field.time_derivative(0, t, x)
    }

    pub fn velocity(&self, t: f64, x: Point) -> Vector2<f64> {
        self.field.time_derivative(1, t, x)
    }

    pub fn acceleration(&self, t: f64, x: Point) -> Vector2<f64> {
        self.field.time_derivative(2, t, x)
    }

    /// `σ = 2 μ ε(u) + λ div(u) I`.
    pub fn stress(&self, t: f64, x: Point) -> Matrix2<f64> {
        let g = self.field.gradient(t, x);
        (g + g.transpose()) * self.mu + Matrix2::identity() * (self.lambda * g.trace())
    }

    pub fn stress_divergence(&self, t: f64, x: Point) -> Vector2<f64> {
        let h = self.field.hessians(t, x);
        let grad_div = Vector2::new(h[0][(0, 0)] + h[1][(0, 1)], h[0][(1, 0)] + h[1][(1, 1)]);
        let lap = Vector2::new(h[0].trace(), h[1].trace());
        lap * self.mu + grad_div * (self.mu + self.lambda)
    }

    /// Scalar `q` of the rotation `skw grad u = [[0, q], [-q, 0]]`.
    pub fn rotation(&self, t: f64, x: Point) -> f64 {
        let g = self.field.gradient(t, x);
        0.5 * (g[(0, 1)] - g[(1, 0)])
    }

    /// `f = ρ ü − div σ`.
    pub fn body_force(&self, t: f64, x: Point) -> Vector2<f64> {
        self.acceleration(t, x) * self.rho - self.stress_divergence(t, x)
    }

    /// Boundary velocity `g = u̇`.
    pub fn boundary_velocity(&self, t: f64, x: Point) -> Vector2<f64> {
        self.velocity(t, x)
    }
}
