//! Dense strictly convex quadratic programming.
//!
//! Solves
//!
//! ```text
//!     minimize    ½ zᵀ H z + fᵀ z
//!     subject to  G z ≤ h
//! ```
//!
//! with the dual active-set method of Goldfarb and Idnani. The iteration starts
//! from the unconstrained minimizer and adds the most violated constraint at
//! each major step, so no feasible starting point is needed and termination is
//! finite. Problems here are tiny (a handful of variables, a few dozen rows),
//! so projections are recomputed from an explicit `H⁻¹` rather than updated.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub h_mat: DMatrix<f64>,
    pub f_vec: DVector<f64>,
    pub g_mat: DMatrix<f64>,
    pub h_vec: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub z_vec: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub status: QpStatus,
    /// One multiplier per inequality row, zero for inactive rows.
    pub multipliers: DVector<f64>,
}

impl QpProblem {
    pub fn new(
        h_mat: DMatrix<f64>,
        f_vec: DVector<f64>,
        g_mat: DMatrix<f64>,
        h_vec: DVector<f64>,
    ) -> Result<Self> {
        let problem = Self {
            h_mat,
            f_vec,
            g_mat,
            h_vec,
        };
        problem.check_dimensions()?;
        Ok(problem)
    }

    /// Problem without inequality rows.
    pub fn unconstrained(h_mat: DMatrix<f64>, f_vec: DVector<f64>) -> Result<Self> {
        let n = f_vec.len();
        Self::new(h_mat, f_vec, DMatrix::zeros(0, n), DVector::zeros(0))
    }

    pub fn num_vars(&self) -> usize {
        self.f_vec.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.h_vec.len()
    }

    pub fn objective(&self, z: &DVector<f64>) -> f64 {
        0.5 * z.dot(&(&self.h_mat * z)) + self.f_vec.dot(z)
    }

    /// Largest `G z - h`, or `-inf` with no rows.
    pub fn max_violation(&self, z: &DVector<f64>) -> f64 {
        (&self.g_mat * z - &self.h_vec)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Norm of `H z + f + Gᵀ λ`.
    pub fn stationarity_residual(&self, z: &DVector<f64>, multipliers: &DVector<f64>) -> f64 {
        (&self.h_mat * z + &self.f_vec + self.g_mat.transpose() * multipliers).norm()
    }

    fn check_dimensions(&self) -> Result<()> {
        let n = self.f_vec.len();
        if self.h_mat.nrows() != n || self.h_mat.ncols() != n {
            return Err(Error::Dimension(format!(
                "hessian is {}x{}, gradient has {n} entries",
                self.h_mat.nrows(),
                self.h_mat.ncols()
            )));
        }
        if self.g_mat.ncols() != n || self.g_mat.nrows() != self.h_vec.len() {
            return Err(Error::Dimension(format!(
                "constraint matrix is {}x{}, expected {}x{n}",
                self.g_mat.nrows(),
                self.g_mat.ncols(),
                self.h_vec.len()
            )));
        }
        Ok(())
    }

    fn check_values(&self) -> Result<()> {
        let finite = self.h_mat.iter().all(|v| v.is_finite())
            && self.f_vec.iter().all(|v| v.is_finite())
            && self.g_mat.iter().all(|v| v.is_finite())
            && !self.h_vec.iter().any(|v| v.is_nan());
        if !finite {
            return Err(Error::NonFinite("quadratic program data"));
        }
        let scale = self.h_mat.amax().max(f64::MIN_POSITIVE);
        let asym = (&self.h_mat - self.h_mat.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::InvalidArgument(format!(
                "hessian is not symmetric (max asymmetry {asym:e})"
            )));
        }
        Ok(())
    }
}

fn violation_tolerance(h_i: f64) -> f64 {
    1e-11 + 1e-14 * h_i.abs()
}

/// Solves `problem` to the unique global minimizer.
///
/// Each primal or dual step counts as one iteration. If the budget runs out
/// the current iterate is returned with [`QpStatus::MaxIterations`].
pub fn solve_qp(problem: &QpProblem, max_iterations: usize) -> Result<QpSolution> {
    problem.check_dimensions()?;
    problem.check_values()?;
    let n = problem.num_vars();
    let q = problem.num_constraints();

    let chol = problem
        .h_mat
        .clone()
        .cholesky()
        .ok_or(Error::IndefiniteHessian)?;
    let h_inv = chol.inverse();

    // rows are g_i z <= h_i; the method works with n_i z >= b_i, n_i = -g_i
    let normal = |i: usize| -> DVector<f64> { -problem.g_mat.row(i).transpose() };
    let slack = |z: &DVector<f64>, i: usize| -> f64 { problem.h_vec[i] - problem.g_mat.row(i).dot(&z.transpose()) };

    let mut z = -(&h_inv * &problem.f_vec);
    let mut active: Vec<usize> = Vec::with_capacity(n);
    let mut duals: Vec<f64> = Vec::with_capacity(n);
    let mut iterations = 0usize;

    let finish = |z: DVector<f64>, active: &[usize], duals: &[f64], iterations, status| {
        let mut multipliers = DVector::zeros(q);
        for (&i, &u) in active.iter().zip(duals) {
            multipliers[i] = u;
        }
        QpSolution {
            objective: problem.objective(&z),
            z_vec: z,
            iterations,
            status,
            multipliers,
        }
    };

    loop {
        // most violated inactive row; ties resolve to the lowest index
        let mut entering = None;
        let mut worst = 0.0;
        for i in 0..q {
            if active.contains(&i) {
                continue;
            }
            let violation = -slack(&z, i);
            if violation > violation_tolerance(problem.h_vec[i]) && violation > worst {
                worst = violation;
                entering = Some(i);
            }
        }
        let Some(p) = entering else {
            return Ok(finish(z, &active, &duals, iterations, QpStatus::Optimal));
        };
        let n_p = normal(p);
        let mut dual_p = 0.0;

        loop {
            if iterations >= max_iterations {
                return Ok(finish(z, &active, &duals, iterations, QpStatus::MaxIterations));
            }
            iterations += 1;

            let (step, dual_dir) = directions(&h_inv, &active, &normal, &n_p)?;

            // partial step: an active multiplier reaches zero first
            let mut t_partial = f64::INFINITY;
            let mut leaving = None;
            for (k, (&r_k, &u_k)) in dual_dir.iter().zip(&duals).enumerate() {
                if r_k > 0.0 {
                    let t = u_k / r_k;
                    if t < t_partial {
                        t_partial = t;
                        leaving = Some(k);
                    }
                }
            }

            // full step: the entering row becomes tight
            let curvature = n_p.dot(&step);
            let scale = n_p.dot(&(&h_inv * &n_p));
            let t_full = if curvature <= 1e-12 * scale {
                f64::INFINITY
            } else {
                -slack(&z, p) / curvature
            };

            if t_full.is_infinite() && t_partial.is_infinite() {
                return Err(Error::Infeasible);
            }

            if t_full.is_infinite() {
                // pure dual step
                for (u, r) in duals.iter_mut().zip(dual_dir.iter()) {
                    *u -= t_partial * r;
                }
                dual_p += t_partial;
                let k = leaving.expect("finite partial step has a leaving row");
                active.remove(k);
                duals.remove(k);
                continue;
            }

            let t = t_full.min(t_partial);
            z += &step * t;
            for (u, r) in duals.iter_mut().zip(dual_dir.iter()) {
                *u -= t * r;
            }
            dual_p += t;

            if t_full <= t_partial {
                active.push(p);
                duals.push(dual_p);
                break;
            }
            let k = leaving.expect("finite partial step has a leaving row");
            active.remove(k);
            duals.remove(k);
        }
    }
}

/// Primal direction `H⁻¹(n_p - N r)` and dual direction `r`, where `N` holds
/// the active normals and `r = (Nᵀ H⁻¹ N)⁻¹ Nᵀ H⁻¹ n_p`.
fn directions(
    h_inv: &DMatrix<f64>,
    active: &[usize],
    normal: &impl Fn(usize) -> DVector<f64>,
    n_p: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let h_inv_np = h_inv * n_p;
    if active.is_empty() {
        return Ok((h_inv_np, DVector::zeros(0)));
    }
    let n = n_p.len();
    let mut normals = DMatrix::zeros(n, active.len());
    for (k, &i) in active.iter().enumerate() {
        normals.set_column(k, &normal(i));
    }
    let h_inv_n = h_inv * &normals;
    let gram = normals.transpose() * &h_inv_n;
    let rhs = normals.transpose() * &h_inv_np;
    let dual_dir = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidArgument("active constraints became dependent".into()))?;
    let step = h_inv_np - h_inv_n * &dual_dir;
    Ok((step, dual_dir))
}
