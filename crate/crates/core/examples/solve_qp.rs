//! The dense active-set QP solver on a small box-constrained problem.
//!
//! ```text
//! cargo run --example solve_qp
//! ```

use nalgebra::{DMatrix, DVector};
use yawstab::qp::{solve_qp, QpProblem};

fn main() -> yawstab::Result<()> {
    // minimize (z0 - 3)^2 + (z1 + 1)^2 + z0 z1  subject to  |z_i| <= 1, z0 + z1 <= 0.5
    let h = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
    let f = DVector::from_vec(vec![-6.0, 2.0]);
    let g = DMatrix::from_row_slice(5, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0, 1.0, 1.0]);
    let hv = DVector::from_vec(vec![1.0, 1.0, 1.0, 1.0, 0.5]);

    let free = solve_qp(&QpProblem::unconstrained(h.clone(), f.clone())?, 10)?;
    println!("unconstrained: z = {:?}, objective {:.6}", free.z_vec.as_slice(), free.objective);

    let problem = QpProblem::new(h, f, g, hv)?;
    let sol = solve_qp(&problem, 50)?;
    println!(
        "constrained:   z = {:?}, objective {:.6}, {} iterations, {:?}",
        sol.z_vec.as_slice(),
        sol.objective,
        sol.iterations,
        sol.status
    );
    println!("multipliers:   {:?}", sol.multipliers.as_slice());
    println!(
        "max violation {:.2e}, stationarity residual {:.2e}",
        problem.max_violation(&sol.z_vec),
        problem.stationarity_residual(&sol.z_vec, &sol.multipliers)
    );
    Ok(())
}
