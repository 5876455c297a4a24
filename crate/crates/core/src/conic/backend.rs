//! Translation to the Clarabel interior-point solver.
//!
//! Clarabel solves `min q'x  s.t.  Ax + s = b, s ∈ K`. Equality rows and
//! zero-block entries go to one zero cone; every PSD block becomes a
//! triangle cone in Clarabel's scaled column-major `svec` layout with
//! `A = -svec(P)` and `b = 0`. Whatever the backend reports, the final status
//! is decided by the checks in [`super::check`].

use std::sync::Once;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use nalgebra::DMatrix;

use super::check::{check_solution, dual_bound, infeasibility_radius, ray_violation, FarkasMultipliers};
use super::{ConicProblem, Solution, SolveStatus, SolverSettings};
use crate::basis::{LinearFunctional, MatrixTemplate};
use crate::error::{Error, Result};

extern "C" {
    fn openblas_set_num_threads(n: std::os::raw::c_int);
}

/// Solves run concurrently at the caller's level, so BLAS stays serial; this
/// also keeps floating-point reductions reproducible.
fn serial_blas() {
    static ONCE: Once = Once::new();
    // SAFETY: plain setter exported by the linked OpenBLAS.
    ONCE.call_once(|| unsafe { openblas_set_num_threads(1) });
}

/// Relative gap accepted between the objective and the independently
/// recomputed dual bound.
const GAP_TOL: f64 = 1e-5;

/// Clarabel's feasibility and gap tolerances.
const BACKEND_TOL: f64 = 1e-9;

struct Assembled {
    a: CscMatrix<f64>,
    b: Vec<f64>,
    q: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
    n_eq: usize,
    n_zero: usize,
}

fn assemble(problem: &ConicProblem) -> Assembled {
    let zero_rows = problem.zero_rows();
    let (mut ri, mut ci, mut vals) = (Vec::new(), Vec::new(), Vec::new());
    let mut b = Vec::new();
    let mut row = 0;
    for (f, rhs) in &problem.equalities {
        for &(k, c) in f.terms() {
            ri.push(row);
            ci.push(k);
            vals.push(c);
        }
        b.push(*rhs);
        row += 1;
    }
    for f in &zero_rows {
        for &(k, c) in f.terms() {
            ri.push(row);
            ci.push(k);
            vals.push(c);
        }
        b.push(0.0);
        row += 1;
    }
    let mut cones = Vec::new();
    if row > 0 {
        cones.push(SupportedConeT::ZeroConeT(row));
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    for t in &problem.psd_blocks {
        let n = t.size();
        for j in 0..n {
            for i in 0..=j {
                let s = if i == j { 1.0 } else { sqrt2 };
                for &(k, c) in t.entry(i, j).terms() {
                    ri.push(row);
                    ci.push(k);
                    vals.push(-s * c);
                }
                b.push(0.0);
                row += 1;
            }
        }
        cones.push(if n == 1 {
            SupportedConeT::NonnegativeConeT(1)
        } else {
            SupportedConeT::PSDTriangleConeT(n)
        });
    }
    let mut q = vec![0.0; problem.num_y];
    if let Some(obj) = &problem.objective {
        for &(k, c) in obj.terms() {
            q[k] = c;
        }
    }
    Assembled {
        a: CscMatrix::new_from_triplets(row, problem.num_y, ri, ci, vals),
        b,
        q,
        cones,
        n_eq: problem.equalities.len(),
        n_zero: zero_rows.len(),
    }
}

fn farkas_from_dual(problem: &ConicProblem, asm: &Assembled, z: &[f64]) -> FarkasMultipliers {
    let equalities = z[..asm.n_eq].iter().map(|v| -v).collect();
    let zero_rows = z[asm.n_eq..asm.n_eq + asm.n_zero].iter().map(|v| -v).collect();
    let mut at = asm.n_eq + asm.n_zero;
    let sqrt2 = std::f64::consts::SQRT_2;
    let psd = problem
        .psd_blocks
        .iter()
        .map(|t| {
            let n = t.size();
            let mut m = DMatrix::zeros(n, n);
            for j in 0..n {
                for i in 0..=j {
                    let v = if i == j { z[at] } else { z[at] / sqrt2 };
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                    at += 1;
                }
            }
            m
        })
        .collect();
    FarkasMultipliers {
        equalities,
        zero_rows,
        psd,
    }
}

/// Solves with the supernodal factorization first and, when its answer does
/// not pass the checks, once more with the slower but often more accurate
/// sparse LDL, then with the implied blocks added. Feasibility problems that
/// still fail get one centered retry.
pub fn solve(problem: &ConicProblem, settings: &SolverSettings) -> Result<Solution> {
    problem.validate()?;
    settings.validate()?;
    serial_blas();
    let first = solve_with(problem, settings, "faer", BACKEND_TOL)?;
    if !unsettled(first.status) {
        return Ok(first);
    }
    let mut second = solve_with(problem, settings, "qdldl", BACKEND_TOL)?;
    if unsettled(second.status) && !problem.implied_psd.is_empty() {
        // near a face of the feasible set the reduced blocks can be accurate
        // while the implied ones are not; hand both to the backend
        let mut both = problem.clone();
        both.psd_blocks.extend(problem.implied_psd.iter().cloned());
        both.implied_psd.clear();
        second = solve_with(&both, settings, "qdldl", BACKEND_TOL)?;
        if let Some(y) = &second.y {
            second.residuals = Some(check_solution(problem, y)?);
        }
        if !unsettled(second.status) {
            return Ok(second);
        }
    }
    if !unsettled(second.status) || problem.objective.is_some() || problem.psd_blocks.is_empty() {
        return Ok(second);
    }
    let centered = center(problem, settings)?;
    Ok(if centered.status == SolveStatus::Optimal { centered } else { second })
}

fn unsettled(status: SolveStatus) -> bool {
    matches!(status, SolveStatus::Inaccurate | SolveStatus::SolverFailure)
}

/// A feasibility problem has no objective to pull the iterate away from the
/// PSD boundary. Retries with `max t` over `P(y) - t I ⪰ 0`, `t <= 1`, and
/// keeps the answer only if `y` passes the checks of the original problem.
fn center(problem: &ConicProblem, settings: &SolverSettings) -> Result<Solution> {
    let t = problem.num_y;
    let slack = t + 1;
    let mut lifted = ConicProblem::new(problem.num_y + 2);
    lifted.objective = Some(LinearFunctional::from_pairs([(t, -1.0)]));
    lifted.equalities = problem.equalities.clone();
    lifted.equalities.push((LinearFunctional::from_pairs([(t, 1.0), (slack, 1.0)]), 1.0));
    lifted.zero_blocks = problem.zero_blocks.clone();
    lifted.psd_blocks = problem
        .psd_blocks
        .iter()
        .map(|b| {
            MatrixTemplate::from_fn(b.size(), |i, j| {
                let f = b.entry(i, j).clone();
                if i == j { f.plus(&LinearFunctional::from_pairs([(t, -1.0)])) } else { f }
            })
        })
        .collect();
    lifted.psd_blocks.push(MatrixTemplate::from_fn(1, |_, _| LinearFunctional::unit(slack)));
    let sol = solve_with(&lifted, settings, "qdldl", 1e-12)?;
    let y = &sol.raw_x[..problem.num_y.min(sol.raw_x.len())];
    let mut out = Solution {
        status: SolveStatus::SolverFailure,
        y: None,
        objective_value: 0.0,
        residuals: None,
        iterations: sol.iterations,
        raw_x: y.to_vec(),
        raw_z: sol.raw_z,
        raw_status: sol.raw_status,
    };
    if y.len() == problem.num_y && y.iter().all(|v| v.is_finite()) {
        let residuals = check_solution(problem, y)?;
        if residuals.within(settings) {
            out.status = SolveStatus::Optimal;
            out.y = Some(y.to_vec());
        } else {
            out.status = SolveStatus::Inaccurate;
        }
        out.residuals = Some(residuals);
    }
    Ok(out)
}

fn solve_with(problem: &ConicProblem, settings: &SolverSettings, method: &str, tol: f64) -> Result<Solution> {
    let asm = assemble(problem);
    let p = CscMatrix::zeros((problem.num_y, problem.num_y));
    let backend_settings = DefaultSettingsBuilder::default()
        .max_iter(settings.max_iters)
        .verbose(settings.verbose)
        .tol_gap_abs(tol)
        .tol_gap_rel(tol)
        .tol_feas(tol)
        .tol_infeas_abs(tol)
        .tol_infeas_rel(tol)
        .chordal_decomposition_enable(false)
        .max_threads(1)
        .direct_solve_method(method.into())
        .build()
        .map_err(|e| Error::InvalidArgument(format!("solver settings: {e}")))?;
    let mut solver = DefaultSolver::new(&p, &asm.q, &asm.a, &asm.b, &asm.cones, backend_settings)
        .map_err(|e| Error::InvalidArgument(format!("solver setup: {e}")))?;
    solver.solve();
    let sol = &solver.solution;
    let raw_status = format!("{:?}", sol.status);
    let finite_x = sol.x.iter().all(|v| v.is_finite());
    let objective = |y: &[f64]| problem.objective.as_ref().map_or(0.0, |f| f.apply(y));

    let mut out = Solution {
        status: SolveStatus::SolverFailure,
        y: None,
        objective_value: f64::NAN,
        residuals: None,
        iterations: sol.iterations,
        raw_x: sol.x.clone(),
        raw_z: sol.z.clone(),
        raw_status,
    };

    match sol.status {
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            let m = farkas_from_dual(problem, &asm, &sol.z);
            out.status = if infeasibility_radius(problem, &m) >= settings.infeasible_radius {
                out.objective_value = f64::INFINITY;
                SolveStatus::Infeasible
            } else {
                SolveStatus::Inaccurate
            };
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
            out.status = match ray_violation(problem, &sol.x) {
                Some(v) if v <= settings.ray_tol => {
                    out.objective_value = f64::NEG_INFINITY;
                    SolveStatus::Unbounded
                }
                _ => SolveStatus::Inaccurate,
            };
        }
        status if finite_x => {
            let residuals = check_solution(problem, &sol.x)?;
            // A checked point settles a feasibility problem whatever the
            // backend thinks. An optimization problem also needs a dual bound
            // that holds at least on the box reaching out to the point itself.
            let converged = problem.objective.is_none() || {
                let obj = objective(&sol.x);
                let radius = sol.x.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
                let bound = dual_bound(problem, &farkas_from_dual(problem, &asm, &sol.z), radius);
                matches!(status, SolverStatus::Solved | SolverStatus::AlmostSolved)
                    && obj - bound <= GAP_TOL * (1.0 + obj.abs())
            };
            out.status = if residuals.within(settings) && converged {
                SolveStatus::Optimal
            } else if matches!(status, SolverStatus::Solved | SolverStatus::AlmostSolved) {
                SolveStatus::Inaccurate
            } else {
                SolveStatus::SolverFailure
            };
            if out.status != SolveStatus::SolverFailure {
                out.objective_value = objective(&sol.x);
                out.y = Some(sol.x.clone());
            }
            out.residuals = Some(residuals);
        }
        _ => {}
    }
    Ok(out)
}
