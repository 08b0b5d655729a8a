//! Vehicle parameters and the nonlinear single-track plant.
//!
//! The plant keeps forward speed constant and lumps the two tires of each axle
//! into one. Lateral axle forces follow a saturating magic-formula-style law
//! whose slope at the origin equals `μ·C_α`, so the plant linearizes exactly to
//! the model built in [`crate::linear`].

use crate::error::{ensure_finite, Error, Result};

/// Shape factor of the tire law. Fixed.
pub const TIRE_SHAPE: f64 = 1.3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    pub mass_kg: f64,
    /// Nominal front axle cornering stiffness [N/rad].
    pub c_front: f64,
    /// Nominal rear axle cornering stiffness [N/rad].
    pub c_rear: f64,
    /// Yaw moment of inertia [kg m²].
    pub yaw_inertia: f64,
    /// CG to front axle [m].
    pub dist_front: f64,
    /// CG to rear axle [m].
    pub dist_rear: f64,
    pub track_front: f64,
    pub track_rear: f64,
    /// Effective rolling radius [m].
    pub wheel_radius: f64,
    /// Steering-wheel angle per road-wheel angle.
    pub steering_ratio: f64,
    pub gravity: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            mass_kg: 1321.0,
            c_front: 72500.0,
            c_rear: 92500.0,
            yaw_inertia: 2120.0,
            dist_front: 1.07,
            dist_rear: 1.53,
            track_front: 1.50,
            track_rear: 1.50,
            wheel_radius: 0.30,
            steering_ratio: 16.0,
            gravity: 9.81,
        }
    }
}

impl VehicleParams {
    pub fn wheelbase(&self) -> f64 {
        self.dist_front + self.dist_rear
    }

    /// Static (front, rear) axle loads [N].
    pub fn static_axle_loads(&self) -> (f64, f64) {
        let weight = self.mass_kg * self.gravity;
        let l = self.wheelbase();
        (weight * self.dist_rear / l, weight * self.dist_front / l)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mass_kg", self.mass_kg),
            ("c_front", self.c_front),
            ("c_rear", self.c_rear),
            ("yaw_inertia", self.yaw_inertia),
            ("dist_front", self.dist_front),
            ("dist_rear", self.dist_rear),
            ("track_front", self.track_front),
            ("track_rear", self.track_rear),
            ("wheel_radius", self.wheel_radius),
            ("steering_ratio", self.steering_ratio),
            ("gravity", self.gravity),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "vehicle parameter {name} must be finite and positive, got {value}"
                )));
            }
        }
        if self.steering_ratio < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "steering_ratio must be >= 1, got {}",
                self.steering_ratio
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    /// Body sideslip angle β [rad].
    pub sideslip_rad: f64,
    /// Yaw rate r [rad/s].
    pub yaw_rate_radps: f64,
    /// Forward speed V [m/s]. Held constant by the plant.
    pub speed_mps: f64,
    pub pos_x_m: f64,
    pub pos_y_m: f64,
    /// Global heading ψ [rad].
    pub heading_rad: f64,
}

impl VehicleState {
    /// Straight-line driving at `speed_mps` from the origin.
    pub fn straight(speed_mps: f64) -> Self {
        Self {
            sideslip_rad: 0.0,
            yaw_rate_radps: 0.0,
            speed_mps,
            pos_x_m: 0.0,
            pos_y_m: 0.0,
            heading_rad: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }

    fn as_array(&self) -> [f64; 6] {
        [
            self.sideslip_rad,
            self.yaw_rate_radps,
            self.speed_mps,
            self.pos_x_m,
            self.pos_y_m,
            self.heading_rad,
        ]
    }

    fn validate(&self) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::NonFinite("vehicle state"));
        }
        if self.speed_mps <= 0.0 {
            return Err(Error::NonPositiveSpeed(self.speed_mps));
        }
        Ok(())
    }

    /// `self + scale * d`, with speed untouched.
    pub(crate) fn advanced(&self, d: &StateDerivative, scale: f64) -> Self {
        Self {
            sideslip_rad: self.sideslip_rad + scale * d.sideslip,
            yaw_rate_radps: self.yaw_rate_radps + scale * d.yaw_rate,
            speed_mps: self.speed_mps + scale * d.speed,
            pos_x_m: self.pos_x_m + scale * d.pos_x,
            pos_y_m: self.pos_y_m + scale * d.pos_y,
            heading_rad: self.heading_rad + scale * d.heading,
        }
    }
}

/// Time derivative of [`VehicleState`], field by field.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateDerivative {
    pub sideslip: f64,
    pub yaw_rate: f64,
    pub speed: f64,
    pub pos_x: f64,
    pub pos_y: f64,
    pub heading: f64,
}

impl StateDerivative {
    pub fn is_finite(&self) -> bool {
        [
            self.sideslip,
            self.yaw_rate,
            self.speed,
            self.pos_x,
            self.pos_y,
            self.heading,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Lateral force of one lumped axle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TireForce {
    pub slip_angle_rad: f64,
    pub lateral_force_n: f64,
    pub normal_load_n: f64,
}

/// Front and rear axle slip angles `(α_f, α_r)`.
pub fn axle_slip_angles(
    state: &VehicleState,
    delta_f: f64,
    params: &VehicleParams,
) -> Result<(f64, f64)> {
    state.validate()?;
    ensure_finite(delta_f, "steering angle")?;
    let beta = state.sideslip_rad;
    let r = state.yaw_rate_radps;
    let v = state.speed_mps;
    Ok((
        delta_f - beta - params.dist_front * r / v,
        -beta + params.dist_rear * r / v,
    ))
}

/// Saturating lateral force `μF_z·sin(C·atan(B·α))` with slope `μ·C_α` at the
/// origin and magnitude never above `μF_z`.
pub fn tire_lateral_force(alpha: f64, c_alpha: f64, f_z: f64, mu: f64) -> Result<f64> {
    ensure_finite(alpha, "slip angle")?;
    if !(c_alpha > 0.0 && f_z > 0.0 && mu > 0.0 && mu <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "tire law needs c_alpha > 0, f_z > 0, 0 < mu <= 1 (got {c_alpha}, {f_z}, {mu})"
        )));
    }
    let peak = mu * f_z;
    let stiffness_factor = c_alpha * mu / (TIRE_SHAPE * peak);
    Ok(peak * (TIRE_SHAPE * (stiffness_factor * alpha).atan()).sin())
}

/// Front and rear axle forces at static loads.
pub fn axle_forces(
    state: &VehicleState,
    delta_f: f64,
    mu: f64,
    params: &VehicleParams,
) -> Result<[TireForce; 2]> {
    let (alpha_f, alpha_r) = axle_slip_angles(state, delta_f, params)?;
    let (load_f, load_r) = params.static_axle_loads();
    Ok([
        TireForce {
            slip_angle_rad: alpha_f,
            lateral_force_n: tire_lateral_force(alpha_f, params.c_front, load_f, mu)?,
            normal_load_n: load_f,
        },
        TireForce {
            slip_angle_rad: alpha_r,
            lateral_force_n: tire_lateral_force(alpha_r, params.c_rear, load_r, mu)?,
            normal_load_n: load_r,
        },
    ])
}

/// Nonlinear single-track equations of motion at constant speed.
///
/// `m_corr` is the controller's corrective yaw moment, `m_dist` an external
/// yaw disturbance; both act directly about the CG.
pub fn plant_derivatives(
    state: &VehicleState,
    delta_f: f64,
    m_corr: f64,
    m_dist: f64,
    mu: f64,
    params: &VehicleParams,
) -> Result<StateDerivative> {
    ensure_finite(m_corr, "corrective moment")?;
    ensure_finite(m_dist, "disturbance moment")?;
    if delta_f.abs() >= std::f64::consts::FRAC_PI_2 {
        return Err(Error::InvalidArgument(format!(
            "front steering angle {delta_f} rad out of range"
        )));
    }
    let [front, rear] = axle_forces(state, delta_f, mu, params)?;
    let fy_front = front.lateral_force_n * delta_f.cos();
    let fy_rear = rear.lateral_force_n;
    let v = state.speed_mps;
    let course = state.heading_rad + state.sideslip_rad;
    let d = StateDerivative {
        sideslip: (fy_front + fy_rear) / (params.mass_kg * v) - state.yaw_rate_radps,
        yaw_rate: (params.dist_front * fy_front - params.dist_rear * fy_rear + m_corr + m_dist)
            / params.yaw_inertia,
        speed: 0.0,
        pos_x: v * course.cos(),
        pos_y: v * course.sin(),
        heading: state.yaw_rate_radps,
    };
    if !d.is_finite() {
        return Err(Error::NonFinite("plant derivatives"));
    }
    Ok(d)
}
