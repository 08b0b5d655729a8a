//! Wheel selection and brake torque for a few yaw-rate situations.
//!
//! ```text
//! cargo run --example brake_allocation
//! ```

use yawstab::brake::{allocate, reconstruct_moment, BrakeConfig};
use yawstab::vehicle::VehicleParams;

fn main() -> yawstab::Result<()> {
    let params = VehicleParams::default();
    let cfg = BrakeConfig::default();
    let delta_f = 3f64.to_radians();
    println!("{:>7} {:>7} {:>8}  {:<5} {:>9} {:>12}", "r", "r_d", "M", "wheel", "T [N m]", "M back");
    for (r, r_d, m) in [
        (0.2, 0.1, -1000.0),
        (0.1, 0.2, 1000.0),
        (-0.1, 0.05, 1000.0),
        (0.1, -0.05, -2000.0),
        (-0.05, -0.2, -1500.0),
        (-0.2, -0.1, 800.0),
        (0.1, 0.102, 50.0),
        (0.3, -0.3, -20000.0),
    ] {
        let cmd = allocate(r, r_d, m, delta_f, &params, &cfg)?;
        let back = reconstruct_moment(&cmd, delta_f, &params);
        println!(
            "{r:>7.3} {r_d:>7.3} {m:>8.0}  {:<5} {:>9.1} {back:>12.1}",
            cmd.wheel.to_string(),
            cmd.torque_nm
        );
    }
    Ok(())
}
