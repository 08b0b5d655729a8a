//! Acceptance suite. Each test prints one `PASS`/`FAIL` line and then
//! asserts it. Run with `cargo test --test acceptance -- --nocapture` to see
//! the lines.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use yawstab::brake::{brake_torque_unclamped, reconstruct_moment, select_wheel, BrakeCommand, Wheel};
use yawstab::cli::write_records;
use yawstab::linear::{discretize_zoh, linearize, ContinuousStateSpace};
use yawstab::mpc::{build_bank, MpcConfig};
use yawstab::qp::{solve_qp, QpProblem};
use yawstab::sim::{run_scenario, RunMetrics, Scenario, SimConfig, SimRecord};
use yawstab::vehicle::VehicleParams;

const DEG: f64 = std::f64::consts::PI / 180.0;

fn report(id: u32, title: &str, pass: bool, elapsed: Duration, budget: Duration, detail: String) {
    let in_time = elapsed <= budget;
    let verdict = if pass && in_time { "PASS" } else { "FAIL" };
    println!(
        "criterion {id:>2} {verdict} {title}: {detail} [{:.2} s, budget {:.0} s]",
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    assert!(pass, "criterion {id} ({title}) failed: {detail}");
    if !in_time {
        // Timing depends on the build profile; report, do not fail.
        println!("criterion {id:>2} note: over the runtime budget in this build");
    }
}

fn run(s: Scenario) -> Vec<SimRecord> {
    let run = run_scenario(&s, &VehicleParams::default(), &SimConfig::default()).unwrap();
    assert!(run.fault.is_none(), "{}: {:?}", s.name, run.fault);
    run.records
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn criterion_01_linearization() {
    let start = Instant::now();
    let sys = linearize(&VehicleParams::default(), 20.0, 1.0).unwrap();
    // Worked by hand from the default parameters at 20 m/s, mu = 1.
    let expected = [
        ("A00", sys.a_mat[(0, 0)], -8250.0 / 1321.0),
        ("A01", sys.a_mat[(0, 1)], -9289.0 / 10568.0),
        ("A10", sys.a_mat[(1, 0)], 6395.0 / 212.0),
        ("A11", sys.a_mat[(1, 1)], -599_077.0 / 84_800.0),
        ("B00", sys.b_mat[(0, 0)], 3625.0 / 1321.0),
        ("B10", sys.b_mat[(1, 0)], 15515.0 / 424.0),
        ("B11", sys.b_mat[(1, 1)], 1.0 / 2120.0),
    ];
    let worst = expected.iter().map(|(_, got, want)| rel(*got, *want)).fold(0.0, f64::max);
    let zero_ok = sys.b_mat[(0, 1)] == 0.0;
    report(
        1,
        "linearization entries",
        worst < 1e-9 && zero_ok,
        start.elapsed(),
        Duration::from_secs(1),
        format!("max rel err {worst:.2e} over {} entries, B01 = {}", expected.len(), sys.b_mat[(0, 1)]),
    );
}

fn rk4_fine(a: &Matrix2<f64>, b: &Matrix2<f64>, x0: Vector2<f64>, u: Vector2<f64>, ts: f64, n: usize) -> Vector2<f64> {
    let h = ts / n as f64;
    let f = |x: Vector2<f64>| a * x + b * u;
    let mut x = x0;
    for _ in 0..n {
        let k1 = f(x);
        let k2 = f(x + k1 * (h / 2.0));
        let k3 = f(x + k2 * (h / 2.0));
        let k4 = f(x + k3 * h);
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    x
}

#[test]
fn criterion_02_zoh_vs_fine_integration() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        // Stable by construction: A = P diag(-l1, -l2) P^-1 or a damped rotation.
        let a = if rng.gen_bool(0.5) {
            let p = loop {
                let p: Matrix2<f64> = Matrix2::from_fn(|_, _| rng.gen_range(-1.0..1.0));
                if p.determinant().abs() > 0.2 {
                    break p;
                }
            };
            let d = Matrix2::from_diagonal(&Vector2::new(-rng.gen_range(0.1..50.0), -rng.gen_range(0.1..50.0)));
            p * d * p.try_inverse().unwrap()
        } else {
            let s = rng.gen_range(0.1..20.0);
            let w = rng.gen_range(0.0..30.0);
            Matrix2::new(-s, w, -w, -s)
        };
        let b = Matrix2::from_fn(|_, _| rng.gen_range(-5.0..5.0));
        let sys = ContinuousStateSpace {
            a_mat: a,
            b_mat: b,
            c_mat: Matrix2::identity(),
            speed_mps: 1.0,
            mu: 1.0,
        };
        let ts = rng.gen_range(1e-3..2e-2);
        let d = discretize_zoh(&sys, ts).unwrap();
        let x0 = Vector2::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let u = Vector2::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let zoh = d.ad_mat * x0 + d.bd_mat * u;
        let fine = rk4_fine(&a, &b, x0, u, ts, 1000);
        worst = worst.max((zoh - fine).norm() / fine.norm());
    }
    report(
        2,
        "ZOH vs 1000-substep integration",
        worst < 1e-8,
        start.elapsed(),
        Duration::from_secs(5),
        format!("1000 systems, max rel err {worst:.2e}"),
    );
}

/// Accelerated projected gradient on the dual, stopped on a KKT certificate.
fn dual_gradient_oracle(h: &DMatrix<f64>, f: &DVector<f64>, g: &DMatrix<f64>, hv: &DVector<f64>) -> DVector<f64> {
    let h_inv = h.clone().try_inverse().unwrap();
    let q = g * &h_inv * g.transpose();
    let c = hv + g * &h_inv * f;
    let lip = q.symmetric_eigenvalues().max().max(1e-12);
    let step = 1.0 / lip;
    let m = g.nrows();
    let mut lam = DVector::zeros(m);
    let mut y = lam.clone();
    let mut t = 1.0f64;
    let primal = |lam: &DVector<f64>| -(&h_inv * (f + g.transpose() * lam));
    for it in 0..2_000_000 {
        let grad = &q * &y + &c;
        let next = (&y - grad * step).map(|v| v.max(0.0));
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let momentum = (t - 1.0) / t_next;
        // Adaptive restart when the momentum points uphill.
        if (&next - &lam).dot(&(&q * &next + &c)) > 0.0 {
            t = 1.0;
            y = next.clone();
        } else {
            y = &next + (&next - &lam) * momentum;
            t = t_next;
        }
        lam = next;
        if it % 50 == 0 {
            let z = primal(&lam);
            let slack = g * &z - hv;
            let viol = slack.iter().fold(0.0f64, |a, &s| a.max(s));
            let comp = slack.iter().zip(lam.iter()).fold(0.0f64, |a, (s, l)| a.max((s * l).abs()));
            if viol <= 1e-10 && comp <= 1e-10 {
                return z;
            }
        }
    }
    primal(&lam)
}

#[test]
fn criterion_03_qp_oracles() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut slack_n, mut active_n) = (0, 0);
    let (mut worst_slack, mut worst_active): (f64, f64) = (0.0, 0.0);
    for k in 0..500 {
        let n = 4;
        let m = 6;
        let r = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let h = r.transpose() * &r + DMatrix::identity(n, n) * rng.gen_range(0.1..1.0);
        let f = DVector::from_fn(n, |_, _| rng.gen_range(-5.0..5.0));
        let g = DMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
        let z_free = -h.clone().lu().solve(&f).unwrap();
        let hv = if k % 2 == 0 {
            // Loose: unconstrained optimum strictly inside.
            &g * &z_free + DVector::from_fn(m, |_, _| rng.gen_range(0.1..2.0))
        } else {
            // Tight around a random feasible point.
            let z0 = DVector::from_fn(n, |_, _| rng.gen_range(-0.5..0.5));
            &g * &z0 + DVector::from_fn(m, |_, _| rng.gen_range(0.0..0.5))
        };
        let problem = QpProblem::new(h.clone(), f.clone(), g.clone(), hv.clone()).unwrap();
        let sol = solve_qp(&problem, 100).unwrap();
        let slack = (&g * &z_free - &hv).max() < 0.0;
        if slack {
            slack_n += 1;
            worst_slack = worst_slack.max((&sol.z_vec - &z_free).norm() / z_free.norm().max(1.0));
        } else {
            active_n += 1;
            let oracle = dual_gradient_oracle(&h, &f, &g, &hv);
            worst_active = worst_active.max((&sol.z_vec - &oracle).norm() / oracle.norm().max(1.0));
        }
    }
    report(
        3,
        "QP vs closed form / dual gradient",
        worst_slack < 1e-8 && worst_active < 1e-6 && slack_n > 0 && active_n > 0,
        start.elapsed(),
        Duration::from_secs(10),
        format!("{slack_n} slack max rel {worst_slack:.2e}, {active_n} active max rel {worst_active:.2e}"),
    );
}

#[test]
fn criterion_04_constraint_compliance() {
    let start = Instant::now();
    let cfg = MpcConfig::default();
    let tol = 1e-9;
    let mut violations = 0usize;
    let mut commands = 0usize;
    for s in [Scenario::s1(), Scenario::s2(), Scenario::s3()] {
        let recs = run(s);
        let mut prev = (0.0, 0.0);
        for r in &recs {
            commands += 1;
            let (d, m) = (r.delta_f_cmd, r.m_cmd);
            let (dd, dm) = (d - prev.0, m - prev.1);
            let ok = d >= cfg.u_min[0] - tol
                && d <= cfg.u_max[0] + tol
                && m >= cfg.u_min[1] - tol
                && m <= cfg.u_max[1] + tol
                && dd >= cfg.du_min[0] - tol
                && dd <= cfg.du_max[0] + tol
                && dm >= cfg.du_min[1] - tol
                && dm <= cfg.du_max[1] + tol;
            if !ok {
                violations += 1;
            }
            prev = (d, m);
        }
    }
    report(
        4,
        "input and rate bounds over S1-S3",
        violations == 0,
        start.elapsed(),
        Duration::from_secs(30),
        format!("{violations} violations in {commands} commands"),
    );
}

/// Wheel selection written out as the literal case table.
fn table_cases(r: f64, rd: f64) -> Vec<Wheel> {
    let rules: [(bool, Wheel); 6] = [
        (r > 0.0 && rd >= 0.0 && rd < r, Wheel::FrontRight),
        (r >= 0.0 && rd > 0.0 && rd > r, Wheel::RearLeft),
        (r < 0.0 && rd >= 0.0, Wheel::FrontLeft),
        (r > 0.0 && rd < 0.0, Wheel::FrontRight),
        (r <= 0.0 && rd < 0.0 && rd < r, Wheel::RearRight),
        (r < 0.0 && rd < 0.0 && rd > r, Wheel::FrontLeft),
    ];
    rules.iter().filter(|(hit, _)| *hit).map(|(_, w)| *w).collect()
}

#[test]
fn criterion_05_brake_round_trip_and_table() {
    let start = Instant::now();
    let params = VehicleParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let m = rng.gen_range(1e-6..=1e4);
        let delta = rng.gen_range(-15.0 * DEG..=15.0 * DEG);
        let wheel = Wheel::ALL[rng.gen_range(0..4)];
        let torque_nm = brake_torque_unclamped(m, wheel, delta, &params).unwrap();
        let back = reconstruct_moment(&BrakeCommand { wheel, torque_nm }, delta, &params);
        worst = worst.max(rel(back.abs(), m));
    }

    let deadband = 0.005;
    let mut mismatches = 0;
    for i in 0..201 {
        for j in 0..201 {
            let r = -1.0 + 0.01 * i as f64;
            let rd = -1.0 + 0.01 * j as f64;
            let got = select_wheel(r, rd, deadband);
            let hits = table_cases(r, rd);
            let want = if (rd - r).abs() <= deadband {
                Wheel::None
            } else {
                match hits.first() {
                    Some(w) => *w,
                    None => {
                        mismatches += 1;
                        continue;
                    }
                }
            };
            // All matching rows must agree, so the outcome is unique.
            let unique = hits.iter().all(|w| *w == hits[0]);
            if got != want || !unique {
                mismatches += 1;
            }
        }
    }
    report(
        5,
        "brake round trip and wheel table",
        worst < 1e-9 && mismatches == 0,
        start.elapsed(),
        Duration::from_secs(5),
        format!("1000 triples max rel {worst:.2e}, {mismatches} grid mismatches of 40401"),
    );
}

#[test]
fn criterion_06_scheduler_partition() {
    let start = Instant::now();
    let bank = build_bank(&VehicleParams::default(), &MpcConfig::default()).unwrap();
    let oracle = |v: f64| -> usize { 1 + [25.0, 35.0, 45.0, 55.0, 65.0].iter().filter(|&&b| v >= b).count() };
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut bad = 0usize;
    for _ in 0..1_000_000 {
        let v = rng.gen_range(0.5..100.0);
        let containing = bank
            .entries
            .iter()
            .filter(|e| v >= e.speed_lower && v < e.speed_upper)
            .count();
        if containing != 1 || bank.select(v).controller != oracle(v) {
            bad += 1;
        }
    }
    let boundaries: Vec<(f64, usize)> = [25.0, 35.0, 45.0, 55.0, 65.0]
        .iter()
        .map(|&v| (v, bank.select(v).controller))
        .collect();
    let boundaries_ok = boundaries.iter().zip(2..).all(|(&(_, c), want)| c == want);
    report(
        6,
        "controller scheduling partition",
        bad == 0 && boundaries_ok,
        start.elapsed(),
        Duration::from_secs(2),
        format!("{bad} bad of 1e6 random speeds, boundaries -> {boundaries:?}"),
    );
}

fn steady_abs_beta_deg(recs: &[SimRecord]) -> f64 {
    let n = (recs.len() / 10).max(1);
    recs[recs.len() - n..].iter().map(|r| r.beta.abs()).sum::<f64>() / n as f64 / DEG
}

#[test]
fn criterion_07_tracking_s2() {
    let start = Instant::now();
    let s = Scenario::s2();
    let window = s.event_time();
    let c = run(s.clone().with_controller(true));
    let u = run(s.with_controller(false));
    let mc = RunMetrics::from_records(&c, window);
    let mu = RunMetrics::from_records(&u, window);
    let beta = steady_abs_beta_deg(&c);
    let ratio = mc.steady_yaw_error / mu.steady_yaw_error;
    report(
        7,
        "S2 yaw-rate tracking",
        ratio <= 0.5 && beta <= 1.0,
        start.elapsed(),
        Duration::from_secs(10),
        format!(
            "steady |r-r_ref| {:.4} vs {:.4} (ratio {ratio:.3}, need <= 0.5), steady |beta| {beta:.3} deg (need <= 1)",
            mc.steady_yaw_error, mu.steady_yaw_error
        ),
    );
}

#[test]
fn criterion_08_disturbance_rejection_s3() {
    let start = Instant::now();
    let s = Scenario::s3();
    let t_step = s.event_time();
    let c = run(s.clone().with_controller(true));
    let u = run(s.with_controller(false));
    let peak = |recs: &[SimRecord]| recs.iter().map(|r| r.r.abs()).fold(0.0, f64::max);
    let (pc, pu) = (peak(&c), peak(&u));
    let r_pre = c.iter().rev().find(|r| r.t < t_step).map_or(0.0, |r| r.r);
    let excursion = c.iter().map(|r| (r.r - r_pre).abs()).fold(0.0, f64::max);
    let band = 0.1 * excursion;
    let late = c
        .iter()
        .filter(|r| r.t >= t_step + 3.0)
        .map(|r| (r.r - r_pre).abs())
        .fold(0.0, f64::max);
    report(
        8,
        "S3 disturbance rejection",
        pc <= 0.5 * pu && late <= band,
        start.elapsed(),
        Duration::from_secs(10),
        format!(
            "peak |r| {pc:.4} vs {pu:.4} (ratio {:.4}), after +3 s max |r - r_pre| {late:.4} vs band {band:.4}",
            pc / pu
        ),
    );
}

#[test]
fn criterion_09_zero_fixed_point() {
    let start = Instant::now();
    let recs = run(Scenario::straight(30.0, 0.8));
    let nonzero = recs
        .iter()
        .filter(|r| r.delta_f_cmd != 0.0 || r.m_cmd != 0.0 || r.t_brake != 0.0 || r.wheel != Wheel::None)
        .count();
    report(
        9,
        "zero-input fixed point",
        nonzero == 0,
        start.elapsed(),
        Duration::from_secs(10),
        format!("{nonzero} of {} rows with a nonzero command or brake", recs.len()),
    );
}

fn suite_csv() -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    for s in [Scenario::s1(), Scenario::s2(), Scenario::s3()] {
        for controller in [true, false] {
            let mut buf = Vec::new();
            write_records(&mut buf, &run(s.clone().with_controller(controller))).unwrap();
            out.push(buf);
        }
    }
    out
}

#[test]
fn criterion_10_determinism() {
    let start = Instant::now();
    let (a, b) = std::thread::scope(|s| {
        let a = s.spawn(suite_csv);
        let b = s.spawn(suite_csv);
        (a.join().unwrap(), b.join().unwrap())
    });
    let identical = a == b;
    let bytes: usize = a.iter().map(Vec::len).sum();
    report(
        10,
        "bit-identical S1-S3 CSVs",
        identical,
        start.elapsed(),
        Duration::from_secs(60),
        format!("6 files, {bytes} bytes, identical = {identical}"),
    );
}
