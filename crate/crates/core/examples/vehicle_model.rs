//! Tire saturation and the linearized single-track model.
//!
//! ```text
//! cargo run --example vehicle_model -- 30 0.8
//! ```

use yawstab::linear::linearize;
use yawstab::vehicle::{axle_forces, tire_lateral_force, VehicleParams, VehicleState};

fn main() -> yawstab::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<f64>().expect("numeric argument"));
    let speed = args.next().unwrap_or(20.0);
    let mu = args.next().unwrap_or(1.0);
    let params = VehicleParams::default();
    let (fz_front, fz_rear) = params.static_axle_loads();

    println!("front axle lateral force vs slip angle (mu = {mu}, Fz = {fz_front:.0} N)");
    for deg in [0.0f64, 1.0, 2.0, 4.0, 8.0, 12.0, 20.0] {
        let alpha = deg.to_radians();
        let nonlinear = tire_lateral_force(alpha, params.c_front, fz_front, mu)?;
        let linear = mu * params.c_front * alpha;
        println!("  {deg:>5.1} deg  {nonlinear:>10.1} N  (linear {linear:>10.1} N)");
    }

    let mut state = VehicleState::straight(speed);
    state.yaw_rate_radps = 0.1;
    let [front, rear] = axle_forces(&state, 0.02, mu, &params)?;
    println!(
        "\nat r = 0.1 rad/s, delta_f = 0.02 rad: alpha_f = {:.5}, alpha_r = {:.5}, Fy_f = {:.1} N, Fy_r = {:.1} N (Fz_r = {fz_rear:.0} N)",
        front.slip_angle_rad, rear.slip_angle_rad, front.lateral_force_n, rear.lateral_force_n
    );

    let sys = linearize(&params, speed, mu)?;
    println!("\nlinear model at V = {speed} m/s, mu = {mu}");
    println!("A =\n{}B =\n{}", sys.a_mat, sys.b_mat);
    let eig = sys.a_mat.complex_eigenvalues();
    println!("eigenvalues: {:.4}, {:.4}", eig[0], eig[1]);
    Ok(())
}
