//! Desired motion of an ideal vehicle.
//!
//! The reference is the linear single-track model at μ = 1 (ideal road),
//! rebuilt at the measured speed and driven by the driver's front-wheel angle.
//! Desired sideslip is always zero.

use nalgebra::Vector2;

use crate::error::Result;
use crate::linear::{discretize_zoh, linearize, DiscreteStateSpace};
use crate::vehicle::VehicleParams;

const REFERENCE_MU: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReferenceState {
    /// Always zero.
    pub beta_ref_rad: f64,
    pub r_ref_radps: f64,
    /// `[β, r]` of the reference vehicle.
    pub internal_state: Vector2<f64>,
}

impl ReferenceState {
    pub fn target(&self) -> Vector2<f64> {
        Vector2::new(self.beta_ref_rad, self.r_ref_radps)
    }
}

/// Advances the reference vehicle one zero-order-hold step.
pub fn reference_step(
    reference: &ReferenceState,
    driver_delta_f: f64,
    speed_mps: f64,
    ts_s: f64,
    params: &VehicleParams,
) -> Result<ReferenceState> {
    let model = discretize_zoh(&linearize(params, speed_mps, REFERENCE_MU)?, ts_s)?;
    Ok(advance(&model, reference, driver_delta_f))
}

fn advance(model: &DiscreteStateSpace, reference: &ReferenceState, delta_f: f64) -> ReferenceState {
    let next = model.ad_mat * reference.internal_state + model.bd_mat * Vector2::new(delta_f, 0.0);
    ReferenceState {
        beta_ref_rad: 0.0,
        r_ref_radps: next[1],
        internal_state: next,
    }
}

/// Steady-state desired yaw rate for a constant front-wheel angle.
pub fn steady_state_yaw_rate(delta_f: f64, speed_mps: f64, params: &VehicleParams) -> Result<f64> {
    let sys = linearize(params, speed_mps, REFERENCE_MU)?;
    let x = sys
        .steady_state(Vector2::new(delta_f, 0.0))
        .ok_or_else(|| crate::Error::InvalidArgument("singular reference model".into()))?;
    Ok(x[1])
}

/// Stateful wrapper that caches the discretization while the speed does not
/// change.
#[derive(Debug, Clone)]
pub struct ReferenceModel {
    params: VehicleParams,
    ts_s: f64,
    cached: Option<(u64, DiscreteStateSpace)>,
    state: ReferenceState,
}

impl ReferenceModel {
    pub fn new(params: VehicleParams, ts_s: f64) -> Self {
        Self {
            params,
            ts_s,
            cached: None,
            state: ReferenceState::default(),
        }
    }

    pub fn state(&self) -> &ReferenceState {
        &self.state
    }

    pub fn step(&mut self, driver_delta_f: f64, speed_mps: f64) -> Result<ReferenceState> {
        let key = speed_mps.to_bits();
        let model = match self.cached {
            Some((k, model)) if k == key => model,
            _ => {
                let model =
                    discretize_zoh(&linearize(&self.params, speed_mps, REFERENCE_MU)?, self.ts_s)?;
                self.cached = Some((key, model));
                model
            }
        };
        self.state = advance(&model, &self.state, driver_delta_f);
        Ok(self.state)
    }
}
