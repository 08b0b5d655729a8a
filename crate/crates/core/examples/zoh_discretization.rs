//! Exact zero-order-hold discretization and a check against stepping the
//! continuous model with a fine integrator.
//!
//! ```text
//! cargo run --example zoh_discretization -- 0.001
//! ```

use nalgebra::Vector2;
use yawstab::linear::{discretize_zoh, linearize};
use yawstab::vehicle::VehicleParams;

fn main() -> yawstab::Result<()> {
    let ts: f64 = std::env::args().nth(1).map_or(0.001, |a| a.parse().expect("sample time"));
    let params = VehicleParams::default();
    for speed in [20.0, 45.0, 70.0] {
        let sys = linearize(&params, speed, 1.0)?;
        let d = discretize_zoh(&sys, ts)?;

        let x0 = Vector2::new(0.01, 0.1);
        let u = Vector2::new(0.02, 500.0);
        let n = 10_000;
        let h = ts / n as f64;
        let mut x = x0;
        for _ in 0..n {
            let k1 = sys.a_mat * x + sys.b_mat * u;
            let k2 = sys.a_mat * (x + k1 * (h / 2.0)) + sys.b_mat * u;
            let k3 = sys.a_mat * (x + k2 * (h / 2.0)) + sys.b_mat * u;
            let k4 = sys.a_mat * (x + k3 * h) + sys.b_mat * u;
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        let zoh = d.ad_mat * x0 + d.bd_mat * u;
        println!("V = {speed} m/s, Ts = {ts} s");
        println!("Ad =\n{}Bd =\n{}", d.ad_mat, d.bd_mat);
        println!("one step: zoh {:?}, fine {:?}, |diff| = {:.2e}\n", zoh.as_slice(), x.as_slice(), (zoh - x).norm());
    }
    Ok(())
}
