//! Runs a steering step over a grid of speeds and friction coefficients in
//! parallel and prints the steady yaw-rate error ratio per cell.
//!
//! ```text
//! cargo run --release --example parameter_sweep
//! ```

use yawstab::cli::{run_sweep, RunSetup};
use yawstab::sim::Scenario;

fn main() {
    let mut setup = RunSetup::new(Scenario::s2());
    setup.scenario.duration_s = 3.0;
    let speeds = [20.0, 35.0, 50.0, 70.0];
    let mus = [0.4, 0.6, 0.8, 1.0];
    let rows = run_sweep(&setup, &speeds, &mus);

    print!("{:>8}", "V \\ mu");
    for mu in mus {
        print!("{mu:>10}");
    }
    println!();
    for chunk in rows.chunks(mus.len()) {
        print!("{:>8}", chunk[0].speed_mps);
        for row in chunk {
            match &row.outcome {
                Ok(s) => print!("{:>10.3}", s.ratio.map_or(f64::NAN, |r| r.steady_yaw_error)),
                Err(_) => print!("{:>10}", "fault"),
            }
        }
        println!();
    }
    println!("\nsteady |r - r_ref| controlled / uncontrolled");
}
