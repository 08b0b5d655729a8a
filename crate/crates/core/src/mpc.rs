//! Velocity-scheduled model predictive upper controller.
//!
//! Each bank entry holds a prediction model linearized at a fixed model speed
//! (μ = 1) and discretized by ZOH, plus the condensed QP matrices for it. The
//! decision vector stacks input increments over the control horizon,
//! `z = [Δu_0; …; Δu_{Nc-1}]`; inputs past the control horizon are held.
//!
//! Cost, for predicted states `x_1 … x_Np` and inputs `u_0 … u_{Nc-1}`:
//!
//! ```text
//!     Σ_{i=1..Np} (x_i - r_i)ᵀ Q (x_i - r_i) + Σ_{j=0..Nc-1} Δu_jᵀ R_Δu Δu_j + u_jᵀ R_u u_j
//! ```
//!
//! with `u_min ≤ u_j ≤ u_max` and `Δu_min ≤ Δu_j ≤ Δu_max` for every `j < Nc`.

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen, Vector2};

use crate::error::{Error, Result};
use crate::linear::{discretize_zoh, linearize, DiscreteStateSpace};
use crate::qp::{solve_qp, QpProblem, QpStatus};
use crate::vehicle::VehicleParams;

/// Friction coefficient of every prediction model.
const MODEL_MU: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MpcConfig {
    pub pred_horizon: usize,
    pub ctrl_horizon: usize,
    pub ts_s: f64,
    pub q_weights: Matrix2<f64>,
    pub ru_weights: Matrix2<f64>,
    pub rdu_weights: Matrix2<f64>,
    /// `[δ_f rad, M N·m]`
    pub u_min: Vector2<f64>,
    pub u_max: Vector2<f64>,
    pub du_min: Vector2<f64>,
    pub du_max: Vector2<f64>,
    /// Speeds the bank's prediction models are built at, strictly increasing.
    /// Switching thresholds sit halfway between neighbours.
    pub model_speeds: Vec<f64>,
    pub max_qp_iterations: usize,
}

impl Default for MpcConfig {
    fn default() -> Self {
        let deg = std::f64::consts::PI / 180.0;
        Self {
            pred_horizon: 15,
            ctrl_horizon: 2,
            ts_s: 0.001,
            q_weights: Matrix2::new(500.0, 0.0, 0.0, 2000.0),
            ru_weights: Matrix2::new(1e-2, 0.0, 0.0, 1e-9),
            rdu_weights: Matrix2::new(1e-1, 0.0, 0.0, 1e-7),
            u_min: Vector2::new(-15.0 * deg, -10_000.0),
            u_max: Vector2::new(15.0 * deg, 10_000.0),
            du_min: Vector2::new(-deg, -100.0),
            du_max: Vector2::new(1.0 * deg, 100.0),
            model_speeds: vec![20.0, 30.0, 40.0, 50.0, 60.0, 70.0],
            max_qp_iterations: 200,
        }
    }
}

impl MpcConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.ctrl_horizon == 0 || self.ctrl_horizon > self.pred_horizon {
            return bad(format!(
                "need 1 <= ctrl_horizon <= pred_horizon, got {} and {}",
                self.ctrl_horizon, self.pred_horizon
            ));
        }
        if !(self.ts_s.is_finite() && self.ts_s > 0.0) {
            return bad(format!("ts_s must be positive, got {}", self.ts_s));
        }
        for (name, w, strict) in [
            ("q_weights", &self.q_weights, false),
            ("ru_weights", &self.ru_weights, false),
            ("rdu_weights", &self.rdu_weights, true),
        ] {
            if (w - w.transpose()).amax() > 0.0 || w.iter().any(|v| !v.is_finite()) {
                return bad(format!("{name} must be finite and symmetric"));
            }
            let min_eig = SymmetricEigen::new(*w).eigenvalues.min();
            if min_eig < 0.0 || (strict && min_eig <= 0.0) {
                let kind = if strict { "definite" } else { "semidefinite" };
                return bad(format!("{name} must be positive {kind}"));
            }
        }
        for k in 0..2 {
            if !(self.u_min[k] < self.u_max[k]) || !(self.du_min[k] < self.du_max[k]) {
                return bad("input bounds must satisfy min < max".into());
            }
            if !(self.du_min[k] <= 0.0 && self.du_max[k] >= 0.0) {
                return bad("increment bounds must contain zero".into());
            }
        }
        if self.model_speeds.is_empty()
            || self.model_speeds.iter().any(|v| !(v.is_finite() && *v > 0.0))
            || self.model_speeds.windows(2).any(|w| w[0] >= w[1])
        {
            return bad("model_speeds must be positive and strictly increasing".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlCommand {
    pub delta_f_rad: f64,
    pub yaw_moment_nm: f64,
}

impl ControlCommand {
    pub fn as_vector(&self) -> Vector2<f64> {
        Vector2::new(self.delta_f_rad, self.yaw_moment_nm)
    }

    pub fn from_vector(u: Vector2<f64>) -> Self {
        Self {
            delta_f_rad: u[0],
            yaw_moment_nm: u[1],
        }
    }
}

/// Condensed QP data of one prediction model.
///
/// The gradient is `f = fx·x_now + fu·u_prev - fr·R` with `R` the stacked
/// reference trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Condensed {
    pub hessian: DMatrix<f64>,
    pub fx: DMatrix<f64>,
    pub fu: DMatrix<f64>,
    pub fr: DMatrix<f64>,
    /// Constant constraint matrix; only the right-hand side depends on `u_prev`.
    pub g_mat: DMatrix<f64>,
    /// Predicted states as `X = phi·x_now + gamma·u_prev + theta·z`.
    pub phi: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
    pub theta: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BankEntry {
    /// 1-based controller number.
    pub controller: usize,
    /// Interval `[speed_lower, speed_upper)` this entry serves.
    pub speed_lower: f64,
    pub speed_upper: f64,
    pub model_speed: f64,
    pub model: DiscreteStateSpace,
    pub condensed: Condensed,
    pred_horizon: usize,
    ctrl_horizon: usize,
    u_min: Vector2<f64>,
    u_max: Vector2<f64>,
    du_min: Vector2<f64>,
    du_max: Vector2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerBank {
    pub entries: Vec<BankEntry>,
    max_qp_iterations: usize,
}

pub fn build_bank(params: &VehicleParams, config: &MpcConfig) -> Result<ControllerBank> {
    params.validate()?;
    config.validate()?;
    let speeds = &config.model_speeds;
    let mut entries = Vec::with_capacity(speeds.len());
    for (k, &model_speed) in speeds.iter().enumerate() {
        let speed_lower = if k == 0 { 0.0 } else { 0.5 * (speeds[k - 1] + model_speed) };
        let speed_upper = speeds
            .get(k + 1)
            .map_or(f64::INFINITY, |next| 0.5 * (model_speed + next));
        let model = discretize_zoh(&linearize(params, model_speed, MODEL_MU)?, config.ts_s)?;
        entries.push(BankEntry {
            controller: k + 1,
            speed_lower,
            speed_upper,
            model_speed,
            condensed: condense_model(&model, config),
            model,
            pred_horizon: config.pred_horizon,
            ctrl_horizon: config.ctrl_horizon,
            u_min: config.u_min,
            u_max: config.u_max,
            du_min: config.du_min,
            du_max: config.du_max,
        });
    }
    Ok(ControllerBank {
        entries,
        max_qp_iterations: config.max_qp_iterations,
    })
}

impl ControllerBank {
    /// Entry whose interval contains `speed_mps`. Lower bounds are inclusive;
    /// anything below the second threshold goes to the first entry.
    pub fn select(&self, speed_mps: f64) -> &BankEntry {
        let idx = self.entries.partition_point(|e| e.speed_upper <= speed_mps);
        &self.entries[idx.min(self.entries.len() - 1)]
    }

    pub fn pred_horizon(&self) -> usize {
        self.entries[0].pred_horizon
    }
}

pub fn select_controller(bank: &ControllerBank, speed_mps: f64) -> &BankEntry {
    bank.select(speed_mps)
}

fn block(m: &mut DMatrix<f64>, row: usize, col: usize, b: &Matrix2<f64>) {
    m.view_mut((2 * row, 2 * col), (2, 2)).copy_from(b);
}

fn condense_model(model: &DiscreteStateSpace, config: &MpcConfig) -> Condensed {
    let np = config.pred_horizon;
    let nc = config.ctrl_horizon;
    let a = model.ad_mat;
    let b = model.bd_mat;

    // held_input[k] = Σ_{j<k} A^j B: response after k steps to a constant unit input
    let mut held_input = vec![Matrix2::zeros(); np + 1];
    let mut a_pow = Matrix2::identity();
    let mut phi = DMatrix::zeros(2 * np, 2);
    for k in 1..=np {
        held_input[k] = held_input[k - 1] + a_pow * b;
        a_pow *= a;
        block(&mut phi, k - 1, 0, &a_pow);
    }

    let mut gamma = DMatrix::zeros(2 * np, 2);
    let mut theta = DMatrix::zeros(2 * np, 2 * nc);
    for i in 1..=np {
        block(&mut gamma, i - 1, 0, &held_input[i]);
        for c in 0..nc.min(i) {
            block(&mut theta, i - 1, c, &held_input[i - c]);
        }
    }

    let mut q_bar = DMatrix::zeros(2 * np, 2 * np);
    for i in 0..np {
        block(&mut q_bar, i, i, &config.q_weights);
    }

    // u_j = u_prev + lambda_j z
    let mut hessian = theta.transpose() * &q_bar * &theta;
    let mut fu_input = DMatrix::zeros(2 * nc, 2);
    for j in 0..nc {
        let mut lambda = DMatrix::zeros(2, 2 * nc);
        for c in 0..=j {
            lambda.view_mut((0, 2 * c), (2, 2)).fill_with_identity();
        }
        let ru = DMatrix::from_column_slice(2, 2, config.ru_weights.as_slice());
        let rdu = DMatrix::from_column_slice(2, 2, config.rdu_weights.as_slice());
        hessian += lambda.transpose() * &ru * &lambda;
        let mut diag = hessian.view_mut((2 * j, 2 * j), (2, 2));
        diag += &rdu;
        fu_input += lambda.transpose() * &ru;
    }
    hessian *= 2.0;
    // exact symmetry for the solver
    let hessian = (&hessian + hessian.transpose()) * 0.5;

    let tq = theta.transpose() * &q_bar;
    let fx = &tq * &phi * 2.0;
    let fu = (&tq * &gamma + fu_input) * 2.0;
    let fr = tq * 2.0;

    let mut g_mat = DMatrix::zeros(8 * nc, 2 * nc);
    for j in 0..nc {
        let r0 = 8 * j;
        for k in 0..2 {
            g_mat[(r0 + k, 2 * j + k)] = 1.0;
            g_mat[(r0 + 2 + k, 2 * j + k)] = -1.0;
            for c in 0..=j {
                g_mat[(r0 + 4 + k, 2 * c + k)] = 1.0;
                g_mat[(r0 + 6 + k, 2 * c + k)] = -1.0;
            }
        }
    }

    Condensed {
        hessian,
        fx,
        fu,
        fr,
        g_mat,
        phi,
        gamma,
        theta,
    }
}

impl BankEntry {
    /// QP over input increments for the current state, reference trajectory
    /// (`pred_horizon` targets for `x_1 … x_Np`) and previous input.
    pub fn condense(
        &self,
        x_now: Vector2<f64>,
        x_ref_traj: &[Vector2<f64>],
        u_prev: Vector2<f64>,
    ) -> Result<QpProblem> {
        if x_ref_traj.len() != self.pred_horizon {
            return Err(Error::Dimension(format!(
                "reference trajectory has {} points, horizon is {}",
                x_ref_traj.len(),
                self.pred_horizon
            )));
        }
        let c = &self.condensed;
        let refs = DVector::from_iterator(
            2 * self.pred_horizon,
            x_ref_traj.iter().flat_map(|r| [r[0], r[1]]),
        );
        let x = DVector::from_column_slice(x_now.as_slice());
        let u = DVector::from_column_slice(u_prev.as_slice());
        let f_vec = &c.fx * x + &c.fu * &u - &c.fr * refs;

        let nc = self.ctrl_horizon;
        let mut h_vec = DVector::zeros(8 * nc);
        for j in 0..nc {
            let r0 = 8 * j;
            for k in 0..2 {
                h_vec[r0 + k] = self.du_max[k];
                h_vec[r0 + 2 + k] = -self.du_min[k];
                h_vec[r0 + 4 + k] = self.u_max[k] - u_prev[k];
                h_vec[r0 + 6 + k] = u_prev[k] - self.u_min[k];
            }
        }
        QpProblem::new(c.hessian.clone(), f_vec, c.g_mat.clone(), h_vec)
    }

    /// Predicted states `x_1 … x_Np` for a given increment sequence.
    pub fn predict(&self, x_now: Vector2<f64>, u_prev: Vector2<f64>, z: &DVector<f64>) -> Vec<Vector2<f64>> {
        let c = &self.condensed;
        let x = DVector::from_column_slice(x_now.as_slice());
        let u = DVector::from_column_slice(u_prev.as_slice());
        let stacked = &c.phi * x + &c.gamma * u + &c.theta * z;
        stacked
            .as_slice()
            .chunks(2)
            .map(|p| Vector2::new(p[0], p[1]))
            .collect()
    }

    /// Clamps `u_prev + Δu` onto both bound sets; absorbs solver round-off.
    fn project(&self, u_prev: Vector2<f64>, du: Vector2<f64>) -> Vector2<f64> {
        Vector2::from_fn(|k, _| {
            let step = du[k].clamp(self.du_min[k], self.du_max[k]);
            (u_prev[k] + step).clamp(self.u_min[k], self.u_max[k])
        })
    }
}

/// Free-function form of [`BankEntry::condense`].
pub fn condense(
    entry: &BankEntry,
    x_now: Vector2<f64>,
    x_ref_traj: &[Vector2<f64>],
    u_prev: Vector2<f64>,
) -> Result<QpProblem> {
    entry.condense(x_now, x_ref_traj, u_prev)
}

/// One receding-horizon step: select the model by speed, solve the QP and
/// apply the first increment.
pub fn mpc_step(
    bank: &ControllerBank,
    x_now: Vector2<f64>,
    x_ref_traj: &[Vector2<f64>],
    u_prev: ControlCommand,
    speed_mps: f64,
) -> Result<ControlCommand> {
    let entry = bank.select(speed_mps);
    let u_prev = u_prev.as_vector();
    let problem = entry.condense(x_now, x_ref_traj, u_prev)?;
    let solution = solve_qp(&problem, bank.max_qp_iterations)?;
    if solution.status == QpStatus::MaxIterations {
        return Err(Error::SolverStalled {
            iterations: solution.iterations,
        });
    }
    let du = Vector2::new(solution.z_vec[0], solution.z_vec[1]);
    Ok(ControlCommand::from_vector(entry.project(u_prev, du)))
}
