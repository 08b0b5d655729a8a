//! Linearized single-track model and its zero-order-hold discretization.
//!
//! State `x = [β, r]`, input `u = [δ_f, M]`. Every tire term carries the
//! friction coefficient μ.

use nalgebra::{Matrix2, Matrix4, SMatrix};

use crate::error::{Error, Result};
use crate::vehicle::VehicleParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousStateSpace {
    pub a_mat: Matrix2<f64>,
    pub b_mat: Matrix2<f64>,
    /// Always the identity: both states are measured.
    pub c_mat: Matrix2<f64>,
    pub speed_mps: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteStateSpace {
    pub ad_mat: Matrix2<f64>,
    pub bd_mat: Matrix2<f64>,
    pub ts_s: f64,
}

pub fn linearize(params: &VehicleParams, speed_mps: f64, mu: f64) -> Result<ContinuousStateSpace> {
    if !(speed_mps.is_finite() && speed_mps > 0.0) {
        return Err(Error::NonPositiveSpeed(speed_mps));
    }
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::InvalidArgument(format!("friction coefficient {mu} outside (0, 1]")));
    }
    let VehicleParams {
        mass_kg: m,
        c_front: cf,
        c_rear: cr,
        yaw_inertia: iz,
        dist_front: lf,
        dist_rear: lr,
        ..
    } = *params;
    let v = speed_mps;
    let a_mat = Matrix2::new(
        -(cr + cf) * mu / (m * v),
        -1.0 + (cr * lr - cf * lf) * mu / (m * v * v),
        (cr * lr - cf * lf) * mu / iz,
        -(cr * lr * lr + cf * lf * lf) * mu / (iz * v),
    );
    let b_mat = Matrix2::new(cf * mu / (m * v), 0.0, cf * lf * mu / iz, 1.0 / iz);
    Ok(ContinuousStateSpace {
        a_mat,
        b_mat,
        c_mat: Matrix2::identity(),
        speed_mps,
        mu,
    })
}

impl ContinuousStateSpace {
    /// Steady-state response `x_ss = -A⁻¹B u` to a constant input.
    pub fn steady_state(&self, u: nalgebra::Vector2<f64>) -> Option<nalgebra::Vector2<f64>> {
        self.a_mat.lu().solve(&(self.b_mat * u)).map(|x| -x)
    }
}

/// Exact discretization under a zero-order hold on the input.
///
/// Uses the exponential of the augmented matrix `[[A, B], [0, 0]]·Ts`, whose
/// top blocks are `A_D` and `B_D`.
pub fn discretize_zoh(sys: &ContinuousStateSpace, ts_s: f64) -> Result<DiscreteStateSpace> {
    if !(ts_s.is_finite() && ts_s > 0.0) {
        return Err(Error::InvalidArgument(format!("sample time must be positive, got {ts_s}")));
    }
    let mut aug = Matrix4::<f64>::zeros();
    aug.fixed_view_mut::<2, 2>(0, 0).copy_from(&(sys.a_mat * ts_s));
    aug.fixed_view_mut::<2, 2>(0, 2).copy_from(&(sys.b_mat * ts_s));
    if aug.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("state-space matrices"));
    }
    let e = expm(&aug);
    Ok(DiscreteStateSpace {
        ad_mat: e.fixed_view::<2, 2>(0, 0).into_owned(),
        bd_mat: e.fixed_view::<2, 2>(0, 2).into_owned(),
        ts_s,
    })
}

/// Matrix exponential by Taylor series with scaling and squaring.
pub fn expm<const N: usize>(a: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    let norm = one_norm(a);
    // scale until the norm is at most 1/2; the series then converges fast
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a / 2f64.powi(squarings);

    let mut result = SMatrix::<f64, N, N>::identity();
    let mut term = SMatrix::<f64, N, N>::identity();
    for k in 1..=30 {
        term = term * scaled / k as f64;
        result += term;
        if one_norm(&term) <= f64::EPSILON * one_norm(&result) {
            break;
        }
    }
    for _ in 0..squarings {
        result = result * result;
    }
    result
}

fn one_norm<const N: usize>(a: &SMatrix<f64, N, N>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
