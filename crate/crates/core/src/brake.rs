//! Lower controller: individual wheel braking.
//!
//! The wheel is chosen from the signs and ordering of the measured and desired
//! yaw rates; the torque is sized so that the longitudinal braking force on
//! that wheel produces the commanded corrective yaw moment about the CG.
//!
//! Body axes: x forward, y left, yaw positive counter-clockwise.

use std::fmt;
use std::str::FromStr;

use crate::error::{ensure_finite, Error, Result};
use crate::vehicle::VehicleParams;

/// Smallest admissible lever arm [m] before the geometry is treated as singular.
const MIN_LEVER_ARM: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Wheel {
    FrontLeft,
    FrontRight,
    RearLeft,
    RearRight,
    None,
}

impl Wheel {
    pub const ALL: [Wheel; 4] = [
        Wheel::FrontLeft,
        Wheel::FrontRight,
        Wheel::RearLeft,
        Wheel::RearRight,
    ];

    pub fn is_front(self) -> bool {
        matches!(self, Wheel::FrontLeft | Wheel::FrontRight)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Wheel::FrontLeft => "FL",
            Wheel::FrontRight => "FR",
            Wheel::RearLeft => "RL",
            Wheel::RearRight => "RR",
            Wheel::None => "none",
        }
    }
}

impl fmt::Display for Wheel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Wheel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "FL" => Ok(Wheel::FrontLeft),
            "FR" => Ok(Wheel::FrontRight),
            "RL" => Ok(Wheel::RearLeft),
            "RR" => Ok(Wheel::RearRight),
            "none" => Ok(Wheel::None),
            other => Err(Error::InvalidArgument(format!("unknown wheel {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrakeCommand {
    pub wheel: Wheel,
    /// Brake torque [N·m], zero exactly when `wheel` is `None`.
    pub torque_nm: f64,
}

impl BrakeCommand {
    pub const RELEASED: BrakeCommand = BrakeCommand {
        wheel: Wheel::None,
        torque_nm: 0.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrakeConfig {
    /// No braking while `|r_d - r|` stays within this band [rad/s].
    pub deadband: f64,
    /// Actuator limit [N·m].
    pub max_torque: f64,
}

impl Default for BrakeConfig {
    fn default() -> Self {
        Self {
            deadband: 0.005,
            max_torque: 5000.0,
        }
    }
}

/// Wheel to brake for measured yaw rate `r` and desired yaw rate `r_d`.
///
/// Cases are tried in order, first match wins:
///
/// | case | r     | r_d    | ordering  | wheel |
/// |------|-------|--------|-----------|-------|
/// | 1    | r > 0 | r_d ≥ 0 | r_d < r  | FR    |
/// | 2    | r ≥ 0 | r_d > 0 | r_d > r  | RL    |
/// | 3    | r < 0 | r_d ≥ 0 | r_d > r  | FL    |
/// | 4    | r > 0 | r_d < 0 | r_d < r  | FR    |
/// | 5    | r ≤ 0 | r_d < 0 | r_d < r  | RR    |
/// | 6    | r < 0 | r_d < 0 | r_d > r  | FL    |
pub fn select_wheel(r: f64, r_d: f64, deadband: f64) -> Wheel {
    if !(r.is_finite() && r_d.is_finite()) || (r_d - r).abs() <= deadband {
        return Wheel::None;
    }
    if r > 0.0 && r_d >= 0.0 && r_d < r {
        Wheel::FrontRight
    } else if r >= 0.0 && r_d > 0.0 && r_d > r {
        Wheel::RearLeft
    } else if r < 0.0 && r_d >= 0.0 && r_d > r {
        Wheel::FrontLeft
    } else if r > 0.0 && r_d < 0.0 && r_d < r {
        Wheel::FrontRight
    } else if r <= 0.0 && r_d < 0.0 && r_d < r {
        Wheel::RearRight
    } else if r < 0.0 && r_d < 0.0 && r_d > r {
        Wheel::FrontLeft
    } else {
        Wheel::None
    }
}

/// Brake torque producing a yaw moment of magnitude `|m_corr|` at `wheel`,
/// before the actuator limit.
///
/// Front wheels: `|M| R / (sin(atan((l_wF/2)/l_f) ∓ δ_f) · √(l_f² + (l_wF/2)²))`,
/// minus for the left wheel and plus for the right (mirror image).
/// Rear wheels: `|M| R / (sin(atan((l_wR/2)/l_r)) · √(l_r² + (l_wR/2)²))`.
pub fn brake_torque_unclamped(
    m_corr: f64,
    wheel: Wheel,
    delta_f: f64,
    params: &VehicleParams,
) -> Result<f64> {
    ensure_finite(m_corr, "corrective moment")?;
    ensure_finite(delta_f, "steering angle")?;
    let (half_track, axle_dist, steer) = match wheel {
        Wheel::None => return Ok(0.0),
        Wheel::FrontLeft => (params.track_front / 2.0, params.dist_front, delta_f),
        Wheel::FrontRight => (params.track_front / 2.0, params.dist_front, -delta_f),
        Wheel::RearLeft | Wheel::RearRight => (params.track_rear / 2.0, params.dist_rear, 0.0),
    };
    let radius = axle_dist.hypot(half_track);
    let lever = ((half_track / axle_dist).atan() - steer).sin() * radius;
    if lever <= MIN_LEVER_ARM {
        return Err(Error::BrakeGeometry { delta_f });
    }
    Ok(m_corr.abs() * params.wheel_radius / lever)
}

/// [`brake_torque_unclamped`] limited to `[0, max_torque]`.
pub fn brake_torque(
    m_corr: f64,
    wheel: Wheel,
    delta_f: f64,
    params: &VehicleParams,
    max_torque: f64,
) -> Result<f64> {
    Ok(brake_torque_unclamped(m_corr, wheel, delta_f, params)?.clamp(0.0, max_torque))
}

/// Yaw moment about the CG produced by `cmd`: the braking force `T/R` acts
/// rearward along the wheel heading at the wheel contact point.
pub fn reconstruct_moment(cmd: &BrakeCommand, delta_f: f64, params: &VehicleParams) -> f64 {
    let (x, y, heading) = match cmd.wheel {
        Wheel::None => return 0.0,
        Wheel::FrontLeft => (params.dist_front, params.track_front / 2.0, delta_f),
        Wheel::FrontRight => (params.dist_front, -params.track_front / 2.0, delta_f),
        Wheel::RearLeft => (-params.dist_rear, params.track_rear / 2.0, 0.0),
        Wheel::RearRight => (-params.dist_rear, -params.track_rear / 2.0, 0.0),
    };
    let force = cmd.torque_nm / params.wheel_radius;
    let (fx, fy) = (-force * heading.cos(), -force * heading.sin());
    x * fy - y * fx
}

/// Full lower-controller step: wheel from the yaw-rate case table, torque
/// from the corrective moment magnitude.
pub fn allocate(
    r: f64,
    r_d: f64,
    m_corr: f64,
    delta_f: f64,
    params: &VehicleParams,
    config: &BrakeConfig,
) -> Result<BrakeCommand> {
    let wheel = select_wheel(r, r_d, config.deadband);
    if wheel == Wheel::None {
        return Ok(BrakeCommand::RELEASED);
    }
    let torque_nm = brake_torque(m_corr, wheel, delta_f, params, config.max_torque)?;
    if torque_nm == 0.0 {
        return Ok(BrakeCommand::RELEASED);
    }
    Ok(BrakeCommand { wheel, torque_nm })
}
