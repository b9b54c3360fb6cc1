//! Torque-limited inverted pendulum with viscous pivot friction.
//!
//! Angles are measured from upright, so gravity is destabilizing:
//! `theta'' = (g/l) sin(theta) - b/(m l^2) theta' + torque/(m l^2)`.

use serde::{Deserialize, Serialize};

use super::controller::Controller;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PendulumParams<S> {
    /// Rod length, m.
    pub length: S,
    /// Point mass at the tip, kg.
    pub mass: S,
    /// Viscous pivot friction, N·m·s/rad.
    pub friction: S,
    /// m/s².
    pub gravity: S,
    /// Integration step, s.
    pub dt: S,
    /// Simulated duration, s.
    pub horizon: S,
    /// |theta| beyond this is a fall, rad.
    pub fail_angle: S,
    /// Actuator saturation, N·m.
    pub max_torque: S,
    /// Actuator slew limit, N·m/s.
    pub max_torque_rate: S,
    /// A run has recovered if it ends with |theta| and |theta'| inside these bounds.
    pub recovery_angle: S,
    pub recovery_rate: S,
    /// Admissible initial tip speeds, m/s.
    pub disturbance_min: S,
    pub disturbance_max: S,
    /// Stop integrating once the outcome is certain (see [`StopReason`]).
    pub early_exit: bool,
    /// Settling tolerance used by the early exit.
    pub settle_tolerance: S,
}

impl<S: Scalar> Default for PendulumParams<S> {
    fn default() -> Self {
        Self {
            length: S::one(),
            mass: S::one(),
            friction: S::lit(0.5),
            gravity: S::lit(9.817),
            dt: S::lit(0.01),
            horizon: S::lit(10.0),
            fail_angle: S::FRAC_PI_2(),
            max_torque: S::one(),
            max_torque_rate: S::lit(10.0),
            recovery_angle: S::lit(0.05),
            recovery_rate: S::lit(0.05),
            disturbance_min: S::lit(-0.9),
            disturbance_max: S::lit(0.9),
            early_exit: true,
            settle_tolerance: S::lit(1e-4),
        }
    }
}

impl<S: Scalar> PendulumParams<S> {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("length", self.length),
            ("mass", self.mass),
            ("friction", self.friction),
            ("gravity", self.gravity),
            ("dt", self.dt),
            ("horizon", self.horizon),
            ("fail_angle", self.fail_angle),
            ("max_torque", self.max_torque),
            ("max_torque_rate", self.max_torque_rate),
            ("recovery_angle", self.recovery_angle),
            ("recovery_rate", self.recovery_rate),
            ("settle_tolerance", self.settle_tolerance),
        ];
        for (name, v) in positive {
            if !(v > S::zero()) || !v.is_finite() {
                return Err(Error::param(format!("pendulum {name} must be positive, got {v}")));
            }
        }
        if self.dt > S::lit(0.01) {
            return Err(Error::param("pendulum dt must be at most 0.01 s"));
        }
        if self.horizon < S::lit(5.0) {
            return Err(Error::param("pendulum horizon must be at least 5 s"));
        }
        if !(self.disturbance_min < self.disturbance_max) {
            return Err(Error::param("empty disturbance range"));
        }
        Ok(())
    }

    /// Number of integration steps in a full-horizon run.
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round().to_usize().unwrap_or(0)
    }

    pub fn inertia(&self) -> S {
        self.mass * self.length * self.length
    }

    /// Smallest |theta| at which gravity torque exceeds the actuator limit.
    pub fn holding_limit(&self) -> S {
        let ratio = self.max_torque / (self.mass * self.gravity * self.length);
        if ratio >= S::one() {
            S::FRAC_PI_2()
        } else {
            ratio.asin()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumState<S> {
    /// rad, 0 = upright
    pub theta: S,
    /// rad/s
    pub theta_dot: S,
    /// Actuated torque after slew limiting and saturation, N·m.
    pub torque: S,
    /// s
    pub time: S,
}

impl<S: Scalar> PendulumState<S> {
    pub fn upright() -> Self {
        Self { theta: S::zero(), theta_dot: S::zero(), torque: S::zero(), time: S::zero() }
    }

    /// Initial state for a tip-speed disturbance `v_d` (m/s).
    pub fn pushed(v_d: S, params: &PendulumParams<S>) -> Self {
        Self { theta_dot: v_d / params.length, ..Self::upright() }
    }

    pub fn is_finite(&self) -> bool {
        self.theta.is_finite() && self.theta_dot.is_finite() && self.torque.is_finite()
    }

    /// Kinetic plus potential energy, with the pivot as potential reference.
    pub fn energy(&self, params: &PendulumParams<S>) -> S {
        S::lit(0.5) * params.inertia() * self.theta_dot * self.theta_dot
            + params.mass * params.gravity * params.length * self.theta.cos()
    }
}

/// Slew-limits then saturates a torque command.
#[inline]
pub fn actuate<S: Scalar>(current: S, command: S, params: &PendulumParams<S>) -> S {
    let max_delta = params.max_torque_rate * params.dt;
    let limited = current + (command - current).max(-max_delta).min(max_delta);
    limited.max(-params.max_torque).min(params.max_torque)
}

#[inline]
fn acceleration<S: Scalar>(theta: S, theta_dot: S, torque: S, params: &PendulumParams<S>) -> S {
    let inertia = params.inertia();
    params.gravity / params.length * theta.sin() - params.friction / inertia * theta_dot
        + torque / inertia
}

/// One closed-loop step: actuate `torque_cmd`, then advance the dynamics with RK4.
pub fn pendulum_step<S: Scalar>(
    state: &PendulumState<S>,
    params: &PendulumParams<S>,
    torque_cmd: S,
) -> Result<PendulumState<S>> {
    if !state.is_finite() || !torque_cmd.is_finite() {
        return Err(Error::SimulationDiverged { time: state.time.to_f64_lossy() });
    }
    let torque = actuate(state.torque, torque_cmd, params);
    let h = params.dt;
    let half = h / S::lit(2.0);
    let f = |th: S, om: S| acceleration(th, om, torque, params);

    let (th, om) = (state.theta, state.theta_dot);
    let k1 = (om, f(th, om));
    let k2 = (om + half * k1.1, f(th + half * k1.0, om + half * k1.1));
    let k3 = (om + half * k2.1, f(th + half * k2.0, om + half * k2.1));
    let k4 = (om + h * k3.1, f(th + h * k3.0, om + h * k3.1));
    let sixth = h / S::lit(6.0);
    let two = S::lit(2.0);
    let next = PendulumState {
        theta: th + sixth * (k1.0 + two * k2.0 + two * k3.0 + k4.0),
        theta_dot: om + sixth * (k1.1 + two * k2.1 + two * k3.1 + k4.1),
        torque,
        time: state.time + h,
    };
    if !next.is_finite() {
        return Err(Error::SimulationDiverged { time: next.time.to_f64_lossy() });
    }
    Ok(next)
}

/// Why a closed-loop run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    /// Ran the full horizon.
    Horizon,
    /// |theta| exceeded the fail angle.
    FailAngle,
    /// Past the holding limit and still moving away from upright: gravity
    /// outweighs any admissible torque, so the fail angle will be crossed.
    Doomed,
    /// Came to rest at upright with the controller idle.
    Settled,
    /// The controller produced a non-finite command.
    ControllerFault,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<S> {
    pub states: Vec<PendulumState<S>>,
    pub stop: StopReason,
}

impl<S: Scalar> Trajectory<S> {
    pub fn last(&self) -> Option<&PendulumState<S>> {
        self.states.last()
    }
}

/// Failure indicator for a trajectory: the fail angle is crossed at any
/// point, or the run ends outside the recovery ball.
pub fn failure<S: Scalar>(trajectory: &Trajectory<S>, params: &PendulumParams<S>) -> bool {
    if trajectory.stop == StopReason::ControllerFault {
        return true;
    }
    if trajectory.states.iter().any(|s| s.theta.abs() > params.fail_angle) {
        return true;
    }
    match trajectory.last() {
        Some(end) => !recovered(end, params),
        None => true,
    }
}

#[inline]
fn recovered<S: Scalar>(s: &PendulumState<S>, params: &PendulumParams<S>) -> bool {
    s.theta.abs() <= params.recovery_angle && s.theta_dot.abs() <= params.recovery_rate
}

/// Runs the closed loop from `start`, handing every state (including the
/// first) to `observe`.
pub(crate) fn run_closed_loop<S: Scalar>(
    params: &PendulumParams<S>,
    controller: &Controller<S>,
    start: PendulumState<S>,
    mut observe: impl FnMut(&PendulumState<S>),
) -> Result<(PendulumState<S>, StopReason)> {
    let mut memory = controller.memory(params);
    let doom_sin = params.max_torque / (params.mass * params.gravity * params.length)
        * S::lit(1.0 + 1e-3);
    // the fall argument needs the fail angle to lie before gravity turns restoring again
    let doom_check = params.early_exit
        && doom_sin < S::one()
        && params.fail_angle < S::PI() - doom_sin.asin();
    let effort_tol = params.settle_tolerance * S::lit(10.0);
    let mut state = start;
    observe(&state);
    for _ in 0..params.steps() {
        if state.theta.abs() > params.fail_angle {
            return Ok((state, StopReason::FailAngle));
        }
        if doom_check
            && state.theta.sin().abs() > doom_sin
            && state.theta * state.theta_dot > S::zero()
        {
            return Ok((state, StopReason::Doomed));
        }
        if params.early_exit {
            let tol = params.settle_tolerance;
            if state.theta.abs() <= tol
                && state.theta_dot.abs() <= tol
                && state.torque.abs() <= effort_tol
                && controller.is_idle(&memory, effort_tol)
            {
                return Ok((state, StopReason::Settled));
            }
        }
        let cmd = match controller.control(&state, &mut memory, params) {
            Ok(u) => u,
            Err(Error::Controller(_)) => return Ok((state, StopReason::ControllerFault)),
            Err(e) => return Err(e),
        };
        state = pendulum_step(&state, params, cmd)?;
        observe(&state);
    }
    if state.theta.abs() > params.fail_angle {
        return Ok((state, StopReason::FailAngle));
    }
    Ok((state, StopReason::Horizon))
}

/// Full closed-loop trajectory for an initial tip speed `v_d`.
pub fn simulate<S: Scalar>(
    params: &PendulumParams<S>,
    controller: &Controller<S>,
    v_d: S,
) -> Result<Trajectory<S>> {
    check_disturbance(params, v_d)?;
    let mut states = Vec::with_capacity(params.steps() + 1);
    let (_, stop) =
        run_closed_loop(params, controller, PendulumState::pushed(v_d, params), |s| states.push(*s))?;
    Ok(Trajectory { states, stop })
}

/// Failure indicator for `v_d` without materializing the trajectory.
pub fn simulate_failure<S: Scalar>(
    params: &PendulumParams<S>,
    controller: &Controller<S>,
    v_d: S,
) -> Result<bool> {
    check_disturbance(params, v_d)?;
    let mut crossed = false;
    let fail = params.fail_angle;
    let (end, stop) = run_closed_loop(params, controller, PendulumState::pushed(v_d, params), |s| {
        crossed |= s.theta.abs() > fail
    })?;
    Ok(crossed || stop == StopReason::ControllerFault || !recovered(&end, params))
}

fn check_disturbance<S: Scalar>(params: &PendulumParams<S>, v_d: S) -> Result<()> {
    if !(v_d >= params.disturbance_min && v_d <= params.disturbance_max) {
        return Err(Error::input(format!(
            "disturbance {v_d} outside [{}, {}]",
            params.disturbance_min, params.disturbance_max
        )));
    }
    Ok(())
}
