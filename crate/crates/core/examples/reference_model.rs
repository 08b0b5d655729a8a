//! Desired yaw rate from the reference model for a steering step.
//!
//! ```text
//! cargo run --example reference_model -- 50 45
//! ```

use yawstab::reference::{steady_state_yaw_rate, ReferenceModel};
use yawstab::vehicle::VehicleParams;

fn main() -> yawstab::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<f64>().expect("numeric argument"));
    let speed = args.next().unwrap_or(50.0);
    let wheel_deg = args.next().unwrap_or(45.0);
    let params = VehicleParams::default();
    let delta_f = wheel_deg.to_radians() / params.steering_ratio;
    let ts = 0.001;

    let mut model = ReferenceModel::new(params, ts);
    println!("steering wheel {wheel_deg} deg at V = {speed} m/s");
    for k in 0..=1000 {
        let s = model.step(delta_f, speed)?;
        if k % 100 == 0 {
            println!("  t = {:.1} s  r_ref = {:.5} rad/s  beta_ref = {:.5} rad", k as f64 * ts, s.r_ref_radps, s.beta_ref_rad);
        }
    }
    println!("steady state r = {:.5} rad/s", steady_state_yaw_rate(delta_f, speed, &params)?);
    println!("friction bound mu g / V at mu = 0.7: {:.5} rad/s", 0.7 * params.gravity / speed);
    Ok(())
}
