//! Runs the three reference scenarios with and without the controller and
//! prints the tracking metrics side by side.
//!
//! ```text
//! cargo run --release --example scenario_comparison
//! ```

use yawstab::sim::{compare_runs, run_scenario, Scenario, SimConfig};
use yawstab::vehicle::VehicleParams;

fn main() -> yawstab::Result<()> {
    let params = VehicleParams::default();
    let config = SimConfig::default();
    for scenario in [Scenario::s1(), Scenario::s2(), Scenario::s3()] {
        let on = run_scenario(&scenario, &params, &config)?;
        let off = run_scenario(&scenario.clone().with_controller(false), &params, &config)?;
        let cmp = compare_runs(&on.records, &off.records, scenario.event_time())?;
        let last = |run: &yawstab::sim::SimRun| *run.records.last().unwrap();
        println!(
            "{}: V = {} m/s, mu = {}",
            scenario.name, scenario.initial_speed_mps, scenario.mu
        );
        println!("  {:<22}{:>14}{:>14}", "", "controlled", "uncontrolled");
        let rows = [
            ("peak |r - r_ref|", cmp.controlled.peak_yaw_error, cmp.uncontrolled.peak_yaw_error),
            ("steady |r - r_ref|", cmp.controlled.steady_yaw_error, cmp.uncontrolled.steady_yaw_error),
            ("peak |r|", cmp.controlled.peak_yaw_rate, cmp.uncontrolled.peak_yaw_rate),
            ("peak |beta| [deg]", cmp.controlled.peak_sideslip.to_degrees(), cmp.uncontrolled.peak_sideslip.to_degrees()),
            ("final beta [deg]", last(&on).beta.to_degrees(), last(&off).beta.to_degrees()),
            ("final r", last(&on).r, last(&off).r),
            ("final r_ref", last(&on).r_ref, last(&off).r_ref),
            ("settling [s]", cmp.controlled.settling_time_s, cmp.uncontrolled.settling_time_s),
        ];
        for (name, c, u) in rows {
            println!("  {name:<22}{c:>14.5}{u:>14.5}");
        }
        println!(
            "  final command: delta_f = {:.4} deg, M = {:.1} N m, brake {} {:.1} N m\n",
            last(&on).delta_f_cmd.to_degrees(),
            last(&on).m_cmd,
            last(&on).wheel,
            last(&on).t_brake
        );
    }
    Ok(())
}
