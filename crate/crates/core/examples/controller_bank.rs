//! Speed-scheduled MPC bank: which controller serves which speed, and one
//! receding-horizon step from an off-reference state.
//!
//! ```text
//! cargo run --example controller_bank -- 42
//! ```

use nalgebra::Vector2;
use yawstab::mpc::{build_bank, mpc_step, ControlCommand, MpcConfig};
use yawstab::vehicle::VehicleParams;

fn main() -> yawstab::Result<()> {
    let speed: f64 = std::env::args().nth(1).map_or(42.0, |a| a.parse().expect("speed"));
    let params = VehicleParams::default();
    let config = MpcConfig::default();
    let bank = build_bank(&params, &config)?;

    for e in &bank.entries {
        println!(
            "controller {}: model at {:>4} m/s serves [{}, {})",
            e.controller, e.model_speed, e.speed_lower, e.speed_upper
        );
    }
    let entry = bank.select(speed);
    println!("\nV = {speed} m/s -> controller {}", entry.controller);

    // Vehicle yawing slower than the reference asks for.
    let x_now = Vector2::new(0.0, 0.05);
    let reference = vec![Vector2::new(0.0, 0.15); bank.pred_horizon()];
    let mut u = ControlCommand::default();
    for k in 0..5 {
        u = mpc_step(&bank, x_now, &reference, u, speed)?;
        println!(
            "step {k}: delta_f = {:+.4} deg, M = {:+.1} N m",
            u.delta_f_rad.to_degrees(),
            u.yaw_moment_nm
        );
    }
    Ok(())
}
