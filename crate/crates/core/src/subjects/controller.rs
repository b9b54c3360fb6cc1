//! Feedback laws for the pendulum bench.
//!
//! A [`ControllerSpec`] is the serializable tuning; [`ControllerSpec::build`]
//! derives everything that depends on the plant (LQR gains, the NMPC step
//! size) once, producing an immutable [`Controller`]. Per-run mutable state
//! (integrator, warm-started plan) lives in [`ControllerMemory`].

use serde::{Deserialize, Serialize};

use super::pendulum::{PendulumParams, PendulumState};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    Pid,
    Lqr,
    Nmpc,
}

impl ControllerKind {
    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::Pid => "pid",
            ControllerKind::Lqr => "lqr",
            ControllerKind::Nmpc => "nmpc",
        }
    }
}

impl std::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ControllerSpec<S> {
    Pid {
        kp: S,
        ki: S,
        kd: S,
    },
    Lqr {
        q_theta: S,
        q_rate: S,
        r: S,
    },
    Nmpc {
        q_theta: S,
        q_rate: S,
        r: S,
        /// Prediction steps.
        horizon: usize,
        /// Simulation steps per prediction step; the plan is recomputed at this period.
        model_substeps: usize,
        /// Projected-gradient iterations per solve.
        iterations: usize,
    },
}

impl<S: Scalar> ControllerSpec<S> {
    pub fn default_for(kind: ControllerKind) -> Self {
        match kind {
            ControllerKind::Pid => Self::Pid { kp: S::lit(12.0), ki: S::one(), kd: S::lit(1.5) },
            ControllerKind::Lqr => Self::Lqr { q_theta: S::lit(10.0), q_rate: S::one(), r: S::one() },
            ControllerKind::Nmpc => Self::Nmpc {
                q_theta: S::lit(10.0),
                q_rate: S::one(),
                r: S::one(),
                horizon: 40,
                model_substeps: 5,
                iterations: 4,
            },
        }
    }

    pub fn kind(&self) -> ControllerKind {
        match self {
            Self::Pid { .. } => ControllerKind::Pid,
            Self::Lqr { .. } => ControllerKind::Lqr,
            Self::Nmpc { .. } => ControllerKind::Nmpc,
        }
    }

    pub fn build(&self, params: &PendulumParams<S>) -> Result<Controller<S>> {
        params.validate()?;
        match *self {
            Self::Pid { kp, ki, kd } => {
                for (name, g) in [("kp", kp), ("ki", ki), ("kd", kd)] {
                    if !g.is_finite() || g < S::zero() {
                        return Err(Error::param(format!("PID gain {name} must be finite and >= 0")));
                    }
                }
                Ok(Controller::Pid { kp, ki, kd })
            }
            Self::Lqr { q_theta, q_rate, r } => {
                let care = Riccati::solve(params, q_theta, q_rate, r)?;
                Ok(Controller::Lqr { gain: care.gain })
            }
            Self::Nmpc { q_theta, q_rate, r, horizon, model_substeps, iterations } => {
                if horizon == 0 || model_substeps == 0 || iterations == 0 {
                    return Err(Error::param("NMPC horizon, substeps and iterations must be >= 1"));
                }
                let care = Riccati::solve(params, q_theta, q_rate, r)?;
                let mut nmpc = Nmpc {
                    q_theta,
                    q_rate,
                    r,
                    horizon,
                    model_substeps,
                    iterations,
                    model_dt: params.dt * S::from_count(model_substeps),
                    terminal: care.p,
                    step_size: S::zero(),
                };
                nmpc.step_size = S::one() / nmpc.lipschitz_bound(params);
                Ok(Controller::Nmpc(Box::new(nmpc)))
            }
        }
    }
}

/// Stabilizing solution of the continuous-time algebraic Riccati equation for
/// the pendulum linearized about upright, in closed form.
///
/// With `A = [[0, 1], [a, -c]]`, `B = [0, b]`, `Q = diag(q1, q2)`, `R = r`
/// and `P = [[p1, p2], [p2, p3]]`, the three scalar equations decouple:
/// `p2` from the (1,1) entry, then `p3` from (2,2), then `p1` from (1,2).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Riccati<S> {
    pub p: [S; 3],
    pub gain: [S; 2],
}

impl<S: Scalar> Riccati<S> {
    pub(crate) fn solve(params: &PendulumParams<S>, q1: S, q2: S, r: S) -> Result<Self> {
        if !(q1 > S::zero() && q2 >= S::zero() && r > S::zero()) {
            return Err(Error::param("LQR weights need q_theta > 0, q_rate >= 0, r > 0"));
        }
        let a = params.gravity / params.length;
        let c = params.friction / params.inertia();
        let b = S::one() / params.inertia();
        let s = b * b / r;
        let p2 = (a + (a * a + s * q1).sqrt()) / s;
        let p3 = (-c + (c * c + s * (S::lit(2.0) * p2 + q2)).sqrt()) / s;
        let p1 = c * p2 - a * p3 + s * p2 * p3;
        let gain = [b / r * p2, b / r * p3];
        Ok(Self { p: [p1, p2, p3], gain })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nmpc<S> {
    q_theta: S,
    q_rate: S,
    r: S,
    horizon: usize,
    model_substeps: usize,
    iterations: usize,
    model_dt: S,
    /// Riccati matrix entries used as terminal weight.
    terminal: [S; 3],
    step_size: S,
}

/// Immutable, plant-specific feedback law.
#[derive(Debug, Clone, PartialEq)]
pub enum Controller<S> {
    Pid { kp: S, ki: S, kd: S },
    Lqr { gain: [S; 2] },
    Nmpc(Box<Nmpc<S>>),
}

/// Mutable per-run controller state.
#[derive(Debug, Clone, Default)]
pub struct ControllerMemory<S> {
    integral: S,
    plan: Vec<S>,
    held: S,
    ticks: usize,
    // scratch buffers reused across solves
    traj: Vec<[S; 2]>,
    grad: Vec<S>,
}

impl<S: Scalar> Controller<S> {
    pub fn kind(&self) -> ControllerKind {
        match self {
            Self::Pid { .. } => ControllerKind::Pid,
            Self::Lqr { .. } => ControllerKind::Lqr,
            Self::Nmpc(_) => ControllerKind::Nmpc,
        }
    }

    pub fn memory(&self, _params: &PendulumParams<S>) -> ControllerMemory<S> {
        let mut m = ControllerMemory {
            integral: S::zero(),
            plan: Vec::new(),
            held: S::zero(),
            ticks: 0,
            traj: Vec::new(),
            grad: Vec::new(),
        };
        if let Self::Nmpc(n) = self {
            m.plan = vec![S::zero(); n.horizon];
            m.traj = vec![[S::zero(); 2]; n.horizon + 1];
            m.grad = vec![S::zero(); n.horizon];
        }
        m
    }

    /// Torque command for `state`, before actuator limits.
    pub fn control(
        &self,
        state: &PendulumState<S>,
        memory: &mut ControllerMemory<S>,
        params: &PendulumParams<S>,
    ) -> Result<S> {
        let u = match self {
            Self::Pid { kp, ki, kd } => {
                memory.integral = memory.integral + state.theta * params.dt;
                -(*kp * state.theta + *ki * memory.integral + *kd * state.theta_dot)
            }
            Self::Lqr { gain } => -(gain[0] * state.theta + gain[1] * state.theta_dot),
            Self::Nmpc(n) => {
                if memory.ticks % n.model_substeps == 0 {
                    n.solve(state, memory, params)?;
                    memory.held = memory.plan[0];
                    memory.plan.rotate_left(1);
                    let last = memory.plan.len() - 1;
                    memory.plan[last] = memory.plan[last - usize::from(last > 0)];
                }
                memory.ticks += 1;
                memory.held
            }
        };
        if !u.is_finite() {
            return Err(Error::Controller(format!("{} command is {u}", self.kind())));
        }
        Ok(u)
    }

    /// Whether the controller holds no residual effort (integrator, plan).
    pub fn is_idle(&self, memory: &ControllerMemory<S>, tol: S) -> bool {
        match self {
            Self::Pid { ki, .. } => (*ki * memory.integral).abs() <= tol,
            Self::Lqr { .. } => true,
            Self::Nmpc(_) => {
                memory.held.abs() <= tol && memory.plan.iter().all(|u| u.abs() <= tol)
            }
        }
    }

    pub fn lqr_gain(&self) -> Option<[S; 2]> {
        match self {
            Self::Lqr { gain } => Some(*gain),
            _ => None,
        }
    }
}

impl<S: Scalar> Nmpc<S> {
    /// Euler prediction model.
    #[inline]
    fn predict(&self, x: [S; 2], u: S, params: &PendulumParams<S>) -> [S; 2] {
        let h = self.model_dt;
        let inertia = params.inertia();
        let acc = params.gravity / params.length * x[0].sin() - params.friction / inertia * x[1]
            + u / inertia;
        [x[0] + h * x[1], x[1] + h * acc]
    }

    /// Projected gradient on the stacked input sequence, gradient by adjoint sweep.
    fn solve(
        &self,
        state: &PendulumState<S>,
        memory: &mut ControllerMemory<S>,
        params: &PendulumParams<S>,
    ) -> Result<()> {
        let n = self.horizon;
        let h = self.model_dt;
        let two = S::lit(2.0);
        let inertia = params.inertia();
        let (a, c, b) = (params.gravity / params.length, params.friction / inertia, S::one() / inertia);
        let [p1, p2, p3] = self.terminal;
        let umax = params.max_torque;
        for _ in 0..self.iterations {
            memory.traj[0] = [state.theta, state.theta_dot];
            for k in 0..n {
                memory.traj[k + 1] = self.predict(memory.traj[k], memory.plan[k], params);
            }
            // terminal weight P/h matches a per-step sum to the continuous cost
            let xn = memory.traj[n];
            let mut lam = [two * (p1 * xn[0] + p2 * xn[1]) / h, two * (p2 * xn[0] + p3 * xn[1]) / h];
            for k in (0..n).rev() {
                memory.grad[k] = two * self.r * memory.plan[k] + h * b * lam[1];
                if k > 0 {
                    let x = memory.traj[k];
                    lam = [
                        two * self.q_theta * x[0] + lam[0] + h * a * x[0].cos() * lam[1],
                        two * self.q_rate * x[1] + h * lam[0] + (S::one() - h * c) * lam[1],
                    ];
                }
            }
            for k in 0..n {
                let u = memory.plan[k] - self.step_size * memory.grad[k];
                if !u.is_finite() {
                    return Err(Error::Controller("NMPC iterate is not finite".into()));
                }
                memory.plan[k] = u.max(-umax).min(umax);
            }
        }
        Ok(())
    }

    /// Largest eigenvalue of the cost Hessian for the model linearized about
    /// upright, by power iteration on Hessian-vector products.
    fn lipschitz_bound(&self, params: &PendulumParams<S>) -> S {
        let n = self.horizon;
        let h = self.model_dt;
        let two = S::lit(2.0);
        let inertia = params.inertia();
        let (a, c, b) = (params.gravity / params.length, params.friction / inertia, S::one() / inertia);
        let [p1, p2, p3] = self.terminal;
        let hess = |v: &[S]| -> Vec<S> {
            let mut xs = vec![[S::zero(); 2]; n + 1];
            for k in 0..n {
                let x = xs[k];
                xs[k + 1] = [x[0] + h * x[1], x[1] + h * (a * x[0] - c * x[1] + b * v[k])];
            }
            let xn = xs[n];
            let mut lam = [two * (p1 * xn[0] + p2 * xn[1]) / h, two * (p2 * xn[0] + p3 * xn[1]) / h];
            let mut out = vec![S::zero(); n];
            for k in (0..n).rev() {
                out[k] = two * self.r * v[k] + h * b * lam[1];
                if k > 0 {
                    let x = xs[k];
                    lam = [
                        two * self.q_theta * x[0] + lam[0] + h * a * lam[1],
                        two * self.q_rate * x[1] + h * lam[0] + (S::one() - h * c) * lam[1],
                    ];
                }
            }
            out
        };
        let norm = |v: &[S]| v.iter().fold(S::zero(), |acc, &x| acc + x * x).sqrt();
        let mut v = vec![S::one(); n];
        let mut eig = S::zero();
        for _ in 0..200 {
            let w = hess(&v);
            eig = norm(&w) / norm(&v);
            let scale = norm(&w);
            v = w.into_iter().map(|x| x / scale).collect();
        }
        // margin for the curvature the linearization ignores
        eig * S::lit(1.1)
    }
}
