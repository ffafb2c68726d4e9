//! Convex quadratic programs with a diagonal objective, linear equalities
//! and lower bounds, behind a swappable backend.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};

use crate::error::{Error, Result};

/// Minimize `sum_j weight[j] * x[j]^2` subject to equality rows and
/// `x[j] >= lower[j]` (use `-inf` for a free variable).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuadraticProgram {
    pub weights: Vec<f64>,
    pub lower: Vec<f64>,
    pub equalities: Vec<(Vec<(usize, f64)>, f64)>,
}

impl QuadraticProgram {
    pub fn add_var(&mut self, weight: f64, lower: f64) -> usize {
        self.weights.push(weight);
        self.lower.push(lower);
        self.weights.len() - 1
    }

    pub fn add_equality(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.equalities.push((coeffs, rhs));
    }

    pub fn n_vars(&self) -> usize {
        self.weights.len()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v * v).sum()
    }

    /// Largest equality residual or lower-bound shortfall at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.equalities.iter().map(|(coeffs, rhs)| {
            let lhs: f64 = coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            (lhs - rhs).abs()
        });
        let bounds = self.lower.iter().zip(x).map(|(&l, &v)| (l - v).max(0.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
}

pub trait QpBackend: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, qp: &QuadraticProgram) -> Result<QpOutcome>;
}

/// Accuracy every backend must reach; solutions are checked against it.
pub const QP_TOL: f64 = 1e-7;

/// Interior-point backend built on `clarabel`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Clarabel;

impl QpBackend for Clarabel {
    fn name(&self) -> &str {
        "clarabel"
    }

    fn solve(&self, qp: &QuadraticProgram) -> Result<QpOutcome> {
        let n = qp.n_vars();
        let p = CscMatrix::new_from_triplets(
            n,
            n,
            (0..n).collect(),
            (0..n).collect(),
            qp.weights.iter().map(|w| 2.0 * w).collect(),
        );
        let (mut rows, mut cols, mut vals, mut b) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (r, (coeffs, rhs)) in qp.equalities.iter().enumerate() {
            for &(j, a) in coeffs {
                rows.push(r);
                cols.push(j);
                vals.push(a);
            }
            b.push(*rhs);
        }
        let n_eq = qp.equalities.len();
        let mut n_ineq = 0;
        for (j, &l) in qp.lower.iter().enumerate() {
            if l.is_finite() {
                rows.push(n_eq + n_ineq);
                cols.push(j);
                vals.push(-1.0);
                b.push(-l);
                n_ineq += 1;
            }
        }
        let a = CscMatrix::new_from_triplets(n_eq + n_ineq, n, rows, cols, vals);
        let mut cones = Vec::new();
        if n_eq > 0 {
            cones.push(SupportedConeT::ZeroConeT(n_eq));
        }
        if n_ineq > 0 {
            cones.push(SupportedConeT::NonnegativeConeT(n_ineq));
        }
        let settings = DefaultSettings {
            verbose: false,
            tol_gap_abs: 1e-11,
            tol_gap_rel: 1e-11,
            tol_feas: 1e-10,
            ..DefaultSettings::default()
        };
        let q = vec![0.0; n];
        let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings)
            .map_err(|e| Error::Solver(format!("clarabel setup: {e}")))?;
        solver.solve();
        match solver.solution.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => {
                let x = solver.solution.x.clone();
                let violation = qp.max_violation(&x);
                if violation > QP_TOL {
                    return Err(Error::Solver(format!("clarabel point violates constraints by {violation:.3e}")));
                }
                Ok(QpOutcome::Optimal { objective: qp.objective(&x), x })
            }
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => Ok(QpOutcome::Infeasible),
            other => Err(Error::Solver(format!("clarabel stopped with {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_onto_simplex() {
        // Closest point to (0.7, 0.5) with x0 + x1 = 1: (0.6, 0.4).
        let mut qp = QuadraticProgram::default();
        let x0 = qp.add_var(0.0, 0.0);
        let x1 = qp.add_var(0.0, 0.0);
        let r0 = qp.add_var(1.0, f64::NEG_INFINITY);
        let r1 = qp.add_var(1.0, f64::NEG_INFINITY);
        qp.add_equality(vec![(x0, 1.0), (r0, 1.0)], 0.7);
        qp.add_equality(vec![(x1, 1.0), (r1, 1.0)], 0.5);
        qp.add_equality(vec![(x0, 1.0), (x1, 1.0)], 1.0);
        let QpOutcome::Optimal { x, objective } = Clarabel.solve(&qp).unwrap() else { panic!() };
        assert!((x[0] - 0.6).abs() < 1e-8 && (x[1] - 0.4).abs() < 1e-8);
        assert!((objective - 0.02).abs() < 1e-9);
    }

    #[test]
    fn lower_bounds_bind_and_conflicts_are_infeasible() {
        let mut qp = QuadraticProgram::default();
        let x = qp.add_var(1.0, 0.3);
        assert!(matches!(Clarabel.solve(&qp).unwrap(), QpOutcome::Optimal { ref x, .. } if (x[0] - 0.3).abs() < 1e-8));
        qp.add_equality(vec![(x, 1.0)], 0.1);
        assert_eq!(Clarabel.solve(&qp).unwrap(), QpOutcome::Infeasible);
    }
}
