//! Closed-loop simulation: reference model, MPC upper controller, brake
//! allocation and the nonlinear plant, all on the controller's sample grid.

use nalgebra::Vector2;

use crate::brake::{allocate, BrakeCommand, BrakeConfig, Wheel};
use crate::error::{Error, Result};
use crate::mpc::{build_bank, mpc_step, ControlCommand, MpcConfig};
use crate::reference::ReferenceModel;
use crate::vehicle::{plant_derivatives, VehicleParams, VehicleState};

/// Piecewise-constant input: each step sets a new level from its time on.
/// With a rate limit the level ramps towards each new value instead.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepProfile {
    /// `(time_s, value)` pairs in increasing time order; zero before the first.
    pub steps: Vec<(f64, f64)>,
    /// Maximum rate of change per second, `None` for instantaneous steps.
    pub rate_limit: Option<f64>,
}

impl StepProfile {
    pub fn step(time_s: f64, value: f64) -> Self {
        Self {
            steps: vec![(time_s, value)],
            rate_limit: None,
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let mut level = 0.0;
        for (i, &(start, target)) in self.steps.iter().enumerate() {
            if t < start {
                break;
            }
            level = match self.rate_limit {
                None => target,
                Some(rate) => {
                    let end = match self.steps.get(i + 1) {
                        Some(&(next, _)) if next <= t => next,
                        _ => t,
                    };
                    let reach = rate * (end - start);
                    level + (target - level).clamp(-reach, reach)
                }
            };
        }
        level
    }

    /// Time of the first nonzero step.
    pub fn first_event(&self) -> Option<f64> {
        self.steps.iter().find(|(_, v)| *v != 0.0).map(|(t, _)| *t)
    }

    fn validate(&self, what: &str) -> Result<()> {
        let finite = self.steps.iter().all(|(t, v)| t.is_finite() && v.is_finite());
        let ordered = self.steps.windows(2).all(|w| w[0].0 <= w[1].0);
        let rate_ok = self.rate_limit.is_none_or(|r| r.is_finite() && r > 0.0);
        if finite && ordered && rate_ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("malformed {what} profile")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub initial_speed_mps: f64,
    pub mu: f64,
    /// Steering-wheel angle δ_s(t) [deg].
    pub steer_profile: StepProfile,
    /// External yaw moment M_zd(t) [N·m].
    pub disturbance_profile: StepProfile,
    pub duration_s: f64,
    pub controller_enabled: bool,
}

impl Scenario {
    fn preset(name: &str, speed: f64, mu: f64, steer_deg: f64, dist_nm: f64) -> Self {
        let profile = |v: f64| if v == 0.0 { StepProfile::zero() } else { StepProfile::step(1.0, v) };
        Self {
            name: name.to_string(),
            initial_speed_mps: speed,
            mu,
            steer_profile: profile(steer_deg),
            disturbance_profile: profile(dist_nm),
            duration_s: 5.0,
            controller_enabled: true,
        }
    }

    /// 90° steering-wheel step at 1 s, 20 m/s, μ = 0.6.
    pub fn s1() -> Self {
        Self::preset("s1", 20.0, 0.6, 90.0, 0.0)
    }

    /// 45° steering-wheel step at 1 s, 50 m/s, μ = 0.7.
    pub fn s2() -> Self {
        Self::preset("s2", 50.0, 0.7, 45.0, 0.0)
    }

    /// 10 kN·m yaw disturbance step at 1 s, 70 m/s, μ = 0.4.
    pub fn s3() -> Self {
        Self::preset("s3", 70.0, 0.4, 0.0, 10_000.0)
    }

    /// Straight driving with no inputs.
    pub fn straight(speed: f64, mu: f64) -> Self {
        Self::preset("straight", speed, mu, 0.0, 0.0)
    }

    pub fn with_controller(mut self, enabled: bool) -> Self {
        self.controller_enabled = enabled;
        self
    }

    /// Start of the window the metrics look at: the first input event.
    pub fn event_time(&self) -> f64 {
        match (self.steer_profile.first_event(), self.disturbance_profile.first_event()) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(Error::InvalidArgument(format!("mu must lie in (0, 1], got {}", self.mu)));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(Error::InvalidArgument(format!("duration must be positive, got {}", self.duration_s)));
        }
        if !(self.initial_speed_mps.is_finite() && self.initial_speed_mps > 0.0) {
            return Err(Error::NonPositiveSpeed(self.initial_speed_mps));
        }
        self.steer_profile.validate("steering")?;
        self.disturbance_profile.validate("disturbance")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub mpc: MpcConfig,
    pub brake: BrakeConfig,
    /// Plant integration steps per control tick.
    pub plant_substeps: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            mpc: MpcConfig::default(),
            brake: BrakeConfig::default(),
            plant_substeps: 1,
        }
    }
}

/// One row per control tick. Angles in rad, moments and torques in N·m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimRecord {
    pub t: f64,
    pub beta: f64,
    pub r: f64,
    pub beta_ref: f64,
    pub r_ref: f64,
    /// Controller part of the front steering angle.
    pub delta_f_cmd: f64,
    pub m_cmd: f64,
    /// Driver part of the front steering angle.
    pub delta_f_driver: f64,
    pub wheel: Wheel,
    pub t_brake: f64,
    pub x: f64,
    pub y: f64,
    pub psi: f64,
}

impl SimRecord {
    pub fn yaw_error(&self) -> f64 {
        self.r - self.r_ref
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub records: Vec<SimRecord>,
    /// Set when the plant blew up; `records` then ends at the last good tick.
    pub fault: Option<Error>,
    /// Ticks where the QP did not converge and the previous input was held.
    pub solver_faults: usize,
}

impl SimRun {
    pub fn is_ok(&self) -> bool {
        self.fault.is_none()
    }
}

/// Classical fourth-order Runge-Kutta over `h` with inputs held.
fn rk4_step(
    state: &VehicleState,
    h: f64,
    delta_f: f64,
    m_corr: f64,
    m_dist: f64,
    mu: f64,
    params: &VehicleParams,
) -> Result<VehicleState> {
    let f = |s: &VehicleState| plant_derivatives(s, delta_f, m_corr, m_dist, mu, params);
    let k1 = f(state)?;
    let k2 = f(&state.advanced(&k1, h / 2.0))?;
    let k3 = f(&state.advanced(&k2, h / 2.0))?;
    let k4 = f(&state.advanced(&k3, h))?;
    Ok(state
        .advanced(&k1, h / 6.0)
        .advanced(&k2, h / 3.0)
        .advanced(&k3, h / 3.0)
        .advanced(&k4, h / 6.0))
}

pub fn run_scenario(scenario: &Scenario, params: &VehicleParams, config: &SimConfig) -> Result<SimRun> {
    scenario.validate()?;
    params.validate()?;
    if config.plant_substeps == 0 {
        return Err(Error::InvalidArgument("plant_substeps must be at least 1".into()));
    }
    let bank = build_bank(params, &config.mpc)?;
    let ts = config.mpc.ts_s;
    let ticks = (scenario.duration_s / ts).round() as usize;
    let deg = std::f64::consts::PI / 180.0;

    let mut reference = ReferenceModel::new(*params, ts);
    let mut state = VehicleState::straight(scenario.initial_speed_mps);
    let mut u_prev = ControlCommand::default();
    let mut records = Vec::with_capacity(ticks + 1);
    let mut solver_faults = 0;
    let mut ref_traj = vec![Vector2::zeros(); bank.pred_horizon()];

    for k in 0..=ticks {
        let t = k as f64 * ts;
        let driver = scenario.steer_profile.value_at(t) * deg / params.steering_ratio;
        let target = reference.step(driver, state.speed_mps)?.target();

        let command = if scenario.controller_enabled {
            ref_traj.fill(target);
            let x_now = Vector2::new(state.sideslip_rad, state.yaw_rate_radps);
            match mpc_step(&bank, x_now, &ref_traj, u_prev, state.speed_mps) {
                Ok(cmd) => cmd,
                Err(Error::SolverStalled { iterations }) => {
                    log::warn!("t = {t:.3} s: QP stalled after {iterations} iterations, holding input");
                    solver_faults += 1;
                    u_prev
                }
                Err(e) => return Err(e),
            }
        } else {
            ControlCommand::default()
        };
        let steer_total = driver + command.delta_f_rad;
        let brake = if scenario.controller_enabled {
            allocate(
                state.yaw_rate_radps,
                target[1],
                command.yaw_moment_nm,
                steer_total,
                params,
                &config.brake,
            )?
        } else {
            BrakeCommand::RELEASED
        };

        records.push(SimRecord {
            t,
            beta: state.sideslip_rad,
            r: state.yaw_rate_radps,
            beta_ref: target[0],
            r_ref: target[1],
            delta_f_cmd: command.delta_f_rad,
            m_cmd: command.yaw_moment_nm,
            delta_f_driver: driver,
            wheel: brake.wheel,
            t_brake: brake.torque_nm,
            x: state.pos_x_m,
            y: state.pos_y_m,
            psi: state.heading_rad,
        });
        if k == ticks {
            break;
        }

        let disturbance = scenario.disturbance_profile.value_at(t);
        let h = ts / config.plant_substeps as f64;
        let mut next = state;
        for _ in 0..config.plant_substeps {
            match rk4_step(&next, h, steer_total, command.yaw_moment_nm, disturbance, scenario.mu, params) {
                Ok(s) if s.is_finite() => next = s,
                _ => {
                    return Ok(SimRun {
                        records,
                        fault: Some(Error::Diverged { t: t + ts }),
                        solver_faults,
                    })
                }
            }
        }
        state = next;
        u_prev = command;
    }

    Ok(SimRun {
        records,
        fault: None,
        solver_faults,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMetrics {
    pub peak_yaw_error: f64,
    /// Mean `|r - r_ref|` over the final 10 % of samples.
    pub steady_yaw_error: f64,
    pub peak_sideslip: f64,
    pub peak_yaw_rate: f64,
    /// Time after the window start until `|r - r_ref|` stays within 5 % of
    /// its peak.
    pub settling_time_s: f64,
}

impl RunMetrics {
    /// Metrics over the records at or after `window_start_s`.
    pub fn from_records(records: &[SimRecord], window_start_s: f64) -> Self {
        let window: Vec<&SimRecord> = records.iter().filter(|r| r.t >= window_start_s).collect();
        let peak = |f: &dyn Fn(&SimRecord) -> f64| window.iter().map(|r| f(r).abs()).fold(0.0, f64::max);
        let peak_yaw_error = peak(&|r| r.yaw_error());
        let tail_len = (window.len() / 10).max(1).min(window.len());
        let tail = &window[window.len() - tail_len..];
        let steady_yaw_error = if tail.is_empty() {
            0.0
        } else {
            tail.iter().map(|r| r.yaw_error().abs()).sum::<f64>() / tail.len() as f64
        };
        let band = 0.05 * peak_yaw_error;
        let settling_time_s = window
            .iter()
            .rev()
            .find(|r| r.yaw_error().abs() > band)
            .map_or(0.0, |r| r.t - window_start_s);
        Self {
            peak_yaw_error,
            steady_yaw_error,
            peak_sideslip: peak(&|r| r.beta),
            peak_yaw_rate: peak(&|r| r.r),
            settling_time_s,
        }
    }

    fn ratio(&self, other: &Self) -> Self {
        let div = |a: f64, b: f64| if a == b { 1.0 } else { a / b };
        Self {
            peak_yaw_error: div(self.peak_yaw_error, other.peak_yaw_error),
            steady_yaw_error: div(self.steady_yaw_error, other.steady_yaw_error),
            peak_sideslip: div(self.peak_sideslip, other.peak_sideslip),
            peak_yaw_rate: div(self.peak_yaw_rate, other.peak_yaw_rate),
            settling_time_s: div(self.settling_time_s, other.settling_time_s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub controlled: RunMetrics,
    pub uncontrolled: RunMetrics,
    /// Controlled over uncontrolled, 1 where both are equal.
    pub ratio: RunMetrics,
}

pub fn compare_runs(
    controlled: &[SimRecord],
    uncontrolled: &[SimRecord],
    window_start_s: f64,
) -> Result<Comparison> {
    if controlled.len() != uncontrolled.len() {
        return Err(Error::Dimension(format!(
            "runs differ in length: {} vs {}",
            controlled.len(),
            uncontrolled.len()
        )));
    }
    let c = RunMetrics::from_records(controlled, window_start_s);
    let u = RunMetrics::from_records(uncontrolled, window_start_s);
    Ok(Comparison {
        controlled: c,
        uncontrolled: u,
        ratio: c.ratio(&u),
    })
}
