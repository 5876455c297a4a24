//! Solver-neutral description of the semidefinite programs built elsewhere in
//! the crate, and the solve contract.
//!
//! A [`ConicProblem`] is stated in terms of a decision vector `y`: a linear
//! objective to minimize, affine equalities, symmetric matrix templates that
//! must instantiate to PSD matrices, and templates that must vanish. Every
//! verdict returned by [`solve`] has been re-validated against the raw data
//! by [`check`], independently of the backend.

mod backend;
pub mod check;

use serde_json::{json, Value};

use crate::basis::{LinearFunctional, MatrixTemplate};
use crate::error::{Error, Result};

pub use backend::solve;
pub use check::{check_solution, Residuals};

#[derive(Clone, Debug, Default)]
pub struct ConicProblem {
    pub num_y: usize,
    /// Minimized; `None` for a pure feasibility problem.
    pub objective: Option<LinearFunctional>,
    pub equalities: Vec<(LinearFunctional, f64)>,
    pub psd_blocks: Vec<MatrixTemplate>,
    pub zero_blocks: Vec<MatrixTemplate>,
    /// PSD constraints implied by the others when the equalities hold
    /// exactly. Validated by the checker, never sent to the backend.
    pub implied_psd: Vec<MatrixTemplate>,
}

impl ConicProblem {
    pub fn new(num_y: usize) -> Self {
        ConicProblem {
            num_y,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let out_of_range = |i: Option<usize>| i.is_some_and(|i| i >= self.num_y);
        let bad = self.objective.as_ref().is_some_and(|f| out_of_range(f.max_index()))
            || self.equalities.iter().any(|(f, _)| out_of_range(f.max_index()))
            || self
                .psd_blocks
                .iter()
                .chain(&self.zero_blocks)
                .chain(&self.implied_psd)
                .any(|t| out_of_range(t.max_index()));
        if bad {
            return Err(Error::InvalidArgument(format!(
                "problem references a variable beyond num_y = {}",
                self.num_y
            )));
        }
        if self.equalities.iter().any(|(_, b)| !b.is_finite()) {
            return Err(Error::InvalidArgument("non-finite equality right-hand side".into()));
        }
        Ok(())
    }

    /// The upper-triangle entries of all zero blocks, without trivial or
    /// repeated functionals.
    pub fn zero_rows(&self) -> Vec<LinearFunctional> {
        let mut rows: Vec<LinearFunctional> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for t in &self.zero_blocks {
            for (_, _, f) in t.upper_entries() {
                if f.is_zero() {
                    continue;
                }
                let key: Vec<(usize, u64)> = f.terms().iter().map(|&(i, c)| (i, c.to_bits())).collect();
                if seen.insert(key) {
                    rows.push(f.clone());
                }
            }
        }
        rows
    }

    /// Self-describing dump for debugging: dimensions and sparse triplets.
    pub fn to_debug_json(&self) -> Value {
        let lf = |f: &LinearFunctional| -> Value {
            Value::Array(f.terms().iter().map(|&(i, c)| json!([i, c])).collect())
        };
        let block = |t: &MatrixTemplate| -> Value {
            let entries: Vec<Value> = t
                .upper_entries()
                .flat_map(|(i, j, f)| f.terms().iter().map(move |&(v, c)| json!([i, j, v, c])))
                .collect();
            json!({ "size": t.size(), "entries": entries })
        };
        json!({
            "num_y": self.num_y,
            "objective": self.objective.as_ref().map(lf),
            "equalities": self.equalities.iter().map(|(f, b)| json!({ "row": lf(f), "rhs": b })).collect::<Vec<_>>(),
            "psd_blocks": self.psd_blocks.iter().map(block).collect::<Vec<_>>(),
            "zero_blocks": self.zero_blocks.iter().map(block).collect::<Vec<_>>(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Inaccurate,
    SolverFailure,
}

#[derive(Clone, Debug)]
pub struct SolverSettings {
    /// Absolute tolerance on equality rows and zero-block entries.
    pub eq_tol: f64,
    /// Smallest accepted eigenvalue of a PSD block is `-psd_tol`.
    pub psd_tol: f64,
    pub max_iters: u32,
    pub verbose: bool,
    /// Constraint violation allowed along an improving ray normalized to unit
    /// objective decrease.
    pub ray_tol: f64,
    /// An infeasibility certificate must exclude every `y` with
    /// `max |y_i| < infeasible_radius`.
    pub infeasible_radius: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            eq_tol: 1e-8,
            psd_tol: 1e-7,
            max_iters: 200,
            verbose: false,
            ray_tol: 1e-6,
            infeasible_radius: 1e6,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eq_tol", self.eq_tol),
            ("psd_tol", self.psd_tol),
            ("ray_tol", self.ray_tol),
            ("infeasible_radius", self.infeasible_radius),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub status: SolveStatus,
    /// Present for `Optimal` and `Inaccurate`.
    pub y: Option<Vec<f64>>,
    /// `+inf` when infeasible, `-inf` when unbounded, `0` for feasibility
    /// problems.
    pub objective_value: f64,
    /// Residuals of `y`, recomputed from the problem data.
    pub residuals: Option<Residuals>,
    pub iterations: u32,
    /// Last backend iterate, unvalidated; callers may run their own checks on it.
    pub raw_x: Vec<f64>,
    /// Backend dual iterate in its own row order, unvalidated.
    pub raw_z: Vec<f64>,
    /// Backend status, for diagnostics only.
    pub raw_status: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(i: usize) -> MatrixTemplate {
        MatrixTemplate::from_fn(1, |_, _| LinearFunctional::unit(i))
    }

    #[test]
    fn two_by_two_lmi() {
        // minimize t s.t. [[t, 1], [1, t]] >= 0, with y1 pinned to 1
        let mut p = ConicProblem::new(2);
        p.objective = Some(LinearFunctional::unit(0));
        p.equalities.push((LinearFunctional::unit(1), 1.0));
        p.psd_blocks.push(MatrixTemplate::from_fn(2, |i, j| {
            LinearFunctional::unit(if i == j { 0 } else { 1 })
        }));
        let s = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective_value - 1.0).abs() < 1e-7);
        assert!((s.y.unwrap()[0] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn contradictory_equalities() {
        let mut p = ConicProblem::new(1);
        p.equalities.push((LinearFunctional::unit(0), 1.0));
        p.equalities.push((LinearFunctional::unit(0), 2.0));
        let s = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
        assert_eq!(s.objective_value, f64::INFINITY);
        assert!(s.y.is_none());
    }

    #[test]
    fn unbounded_ray() {
        let mut p = ConicProblem::new(1);
        p.objective = Some(LinearFunctional::from_pairs([(0, -1.0)]));
        p.psd_blocks.push(scalar(0));
        let s = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Unbounded);
        assert_eq!(s.objective_value, f64::NEG_INFINITY);
    }

    #[test]
    fn zero_blocks_and_feasibility() {
        // y0 + y1 = 1, y0 - y1 = 0 as a zero block, y >= 0
        let mut p = ConicProblem::new(2);
        p.equalities.push((LinearFunctional::from_pairs([(0, 1.0), (1, 1.0)]), 1.0));
        p.zero_blocks.push(MatrixTemplate::from_fn(1, |_, _| {
            LinearFunctional::from_pairs([(0, 1.0), (1, -1.0)])
        }));
        p.psd_blocks.push(scalar(0));
        p.psd_blocks.push(scalar(1));
        let s = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        let y = s.y.unwrap();
        assert!((y[0] - 0.5).abs() < 1e-7 && (y[1] - 0.5).abs() < 1e-7);
    }

    #[test]
    fn deterministic() {
        let mut p = ConicProblem::new(3);
        p.objective = Some(LinearFunctional::from_pairs([(0, 1.0), (2, 0.5)]));
        p.equalities.push((LinearFunctional::unit(1), 0.3));
        p.psd_blocks.push(MatrixTemplate::from_fn(2, |i, j| LinearFunctional::unit(i + j)));
        let a = solve(&p, &SolverSettings::default()).unwrap();
        let b = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(a.status, b.status);
        assert!((a.objective_value - b.objective_value).abs() <= 1e-9);
    }

    #[test]
    fn rejects_out_of_range_references() {
        let mut p = ConicProblem::new(1);
        p.equalities.push((LinearFunctional::unit(3), 1.0));
        assert!(p.validate().is_err());
        assert!(solve(&p, &SolverSettings::default()).is_err());
    }

    #[test]
    fn zero_rows_deduplicate() {
        let mut p = ConicProblem::new(3);
        p.zero_blocks.push(MatrixTemplate::from_fn(2, |i, j| {
            if i == j {
                LinearFunctional::unit(0)
            } else {
                LinearFunctional::zero()
            }
        }));
        assert_eq!(p.zero_rows(), vec![LinearFunctional::unit(0)]);
        let dump = p.to_debug_json();
        assert_eq!(dump["num_y"], 3);
        assert_eq!(dump["zero_blocks"][0]["size"], 2);
    }
}
