//! Backend-independent validation of solutions, infeasibility certificates
//! and improving rays, recomputed from the raw problem data.

use nalgebra::DMatrix;
use serde::Serialize;

use super::{ConicProblem, SolverSettings};
use crate::basis::MatrixTemplate;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Residuals {
    /// Largest `|a·y - b|` over equality rows.
    pub equality: f64,
    /// Largest absolute entry of any zero block.
    pub zero_block: f64,
    /// Smallest eigenvalue over all PSD blocks (`+inf` if there are none).
    pub psd_min_eig: f64,
    /// Rounding-error bound on `psd_min_eig`.
    pub psd_eig_error: f64,
}

impl Residuals {
    /// Passes only if the PSD margin is resolvable in floating point: very
    /// large moment matrices cannot be certified to an absolute tolerance.
    pub fn within(&self, settings: &SolverSettings) -> bool {
        self.equality <= settings.eq_tol
            && self.zero_block <= settings.eq_tol
            && self.psd_min_eig - self.psd_eig_error >= -settings.psd_tol
    }
}

/// Smallest eigenvalue and a bound on its rounding error,
/// `4 n ε ‖M‖_F`, for the backward-stable symmetric eigensolver.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> (f64, f64) {
    if m.nrows() == 0 {
        return (f64::INFINITY, 0.0);
    }
    let err = 4.0 * m.nrows() as f64 * f64::EPSILON * m.norm();
    (m.clone().symmetric_eigen().eigenvalues.min(), err)
}

/// Over the solver's blocks and the implied ones.
fn psd_min(problem: &ConicProblem, y: &[f64]) -> (f64, f64) {
    problem
        .psd_blocks
        .iter()
        .chain(&problem.implied_psd)
        .map(|t| min_eigenvalue(&t.instantiate(y)))
        .fold((f64::INFINITY, 0.0), |(a, ea), (b, eb)| (a.min(b), ea.max(eb)))
}

fn zero_block_max(blocks: &[MatrixTemplate], y: &[f64]) -> f64 {
    blocks
        .iter()
        .flat_map(|t| t.upper_entries().map(|(_, _, f)| f.apply(y).abs()))
        .fold(0.0, f64::max)
}

pub fn check_solution(problem: &ConicProblem, y: &[f64]) -> Result<Residuals> {
    if y.len() != problem.num_y {
        return Err(Error::DimensionMismatch {
            expected: problem.num_y,
            got: y.len(),
        });
    }
    let equality = problem
        .equalities
        .iter()
        .map(|(f, b)| (f.apply(y) - b).abs())
        .fold(0.0, f64::max);
    let (psd_min_eig, psd_eig_error) = psd_min(problem, y);
    Ok(Residuals {
        equality,
        zero_block: zero_block_max(&problem.zero_blocks, y),
        psd_min_eig,
        psd_eig_error,
    })
}

/// Dual multipliers for a Farkas-type infeasibility argument: free weights on
/// the equality rows and on [`ConicProblem::zero_rows`], and one symmetric
/// matrix per PSD block.
#[derive(Clone, Debug)]
pub struct FarkasMultipliers {
    pub equalities: Vec<f64>,
    pub zero_rows: Vec<f64>,
    pub psd: Vec<DMatrix<f64>>,
}

fn psd_projection(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let clipped = eig.eigenvalues.map(|v| v.max(0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose()
}

/// `r = Σ μ_i a_i + Σ ν_e f_e + Σ_j P_j*(Λ_j)` and `β = Σ μ_i b_i`, with each
/// `Λ_j` first projected onto the PSD cone. Every feasible `y` then obeys
/// `r·y = β + Σ_j ⟨Λ_j, P_j(y)⟩ ≥ β`. `None` on a shape mismatch.
fn aggregate(problem: &ConicProblem, m: &FarkasMultipliers) -> Option<(Vec<f64>, f64)> {
    let zero_rows = problem.zero_rows();
    if m.equalities.len() != problem.equalities.len()
        || m.zero_rows.len() != zero_rows.len()
        || m.psd.len() != problem.psd_blocks.len()
    {
        return None;
    }
    let mut r = vec![0.0; problem.num_y];
    let mut beta = 0.0;
    for ((f, b), &mu) in problem.equalities.iter().zip(&m.equalities) {
        beta += mu * b;
        for &(i, c) in f.terms() {
            r[i] += mu * c;
        }
    }
    for (f, &nu) in zero_rows.iter().zip(&m.zero_rows) {
        for &(i, c) in f.terms() {
            r[i] += nu * c;
        }
    }
    for (t, lam) in problem.psd_blocks.iter().zip(&m.psd) {
        if lam.nrows() != t.size() || lam.ncols() != t.size() {
            return None;
        }
        let lam = psd_projection(lam);
        for (i, j, f) in t.upper_entries() {
            let w = if i == j { lam[(i, i)] } else { lam[(i, j)] + lam[(j, i)] };
            for &(k, c) in f.terms() {
                r[k] += w * c;
            }
        }
    }
    Some((r, beta))
}

/// Radius `R` such that no feasible `y` has `max |y_i| < R`: from
/// `r·y ≥ β`, `‖y‖_∞ ≥ β / ‖r‖_1`. Returns 0 when the multipliers prove
/// nothing.
pub fn infeasibility_radius(problem: &ConicProblem, m: &FarkasMultipliers) -> f64 {
    let Some((r, beta)) = aggregate(problem, m) else {
        return 0.0;
    };
    let norm: f64 = r.iter().map(|v| v.abs()).sum();
    if !(beta > 0.0) {
        return 0.0;
    }
    if norm == 0.0 {
        f64::INFINITY
    } else {
        beta / norm
    }
}

/// Lower bound on the objective over feasible `y` with `max |y_i| <= radius`.
///
/// Splitting `q = (q - r) + r` gives `q·y ≥ β - ‖q - r‖_1 radius`. Without a
/// radius no finite bound is possible in general: relaxations can be weakly
/// unbounded, with near-feasible duals and no improving ray.
pub fn dual_bound(problem: &ConicProblem, m: &FarkasMultipliers, radius: f64) -> f64 {
    let (Some(q), Some((r, beta))) = (problem.objective.as_ref(), aggregate(problem, m)) else {
        return f64::NEG_INFINITY;
    };
    let mut slack = r;
    for v in &mut slack {
        *v = -*v;
    }
    for &(i, c) in q.terms() {
        slack[i] += c;
    }
    beta - slack.iter().map(|v| v.abs()).sum::<f64>() * radius
}

/// Constraint violation of an improving direction `d`, after scaling it to
/// unit objective decrease, with equality right-hand sides taken as zero.
/// Includes the rounding-error bound of the eigenvalue test. `None` if `d`
/// does not decrease the objective.
pub fn ray_violation(problem: &ConicProblem, d: &[f64]) -> Option<f64> {
    let q = problem.objective.as_ref()?;
    if d.len() != problem.num_y {
        return None;
    }
    let decrease = -q.apply(d);
    if !(decrease > 0.0) || !decrease.is_finite() {
        return None;
    }
    let d: Vec<f64> = d.iter().map(|v| v / decrease).collect();
    let eq = problem
        .equalities
        .iter()
        .map(|(f, _)| f.apply(&d).abs())
        .fold(0.0, f64::max);
    let (psd, err) = psd_min(problem, &d);
    Some(eq.max(zero_block_max(&problem.zero_blocks, &d)).max(err - psd.min(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::LinearFunctional;

    #[test]
    fn residuals_of_a_point() {
        let mut p = ConicProblem::new(2);
        p.equalities.push((LinearFunctional::unit(0), 1.0));
        p.psd_blocks.push(MatrixTemplate::from_fn(2, |i, j| {
            LinearFunctional::unit(if i == j { 0 } else { 1 })
        }));
        let r = check_solution(&p, &[1.0, 2.0]).unwrap();
        assert_eq!(r.equality, 0.0);
        assert!((r.psd_min_eig + 1.0).abs() < 1e-12);
        assert!(r.psd_eig_error < 1e-13);
        assert!(!r.within(&SolverSettings::default()));
        assert!(check_solution(&p, &[1.0]).is_err());
    }

    #[test]
    fn farkas_for_contradictory_rows() {
        let mut p = ConicProblem::new(1);
        p.equalities.push((LinearFunctional::unit(0), 1.0));
        p.equalities.push((LinearFunctional::unit(0), 2.0));
        let m = FarkasMultipliers {
            equalities: vec![-1.0, 1.0],
            zero_rows: vec![],
            psd: vec![],
        };
        assert_eq!(infeasibility_radius(&p, &m), f64::INFINITY);
        let wrong = FarkasMultipliers {
            equalities: vec![1.0, -1.0],
            zero_rows: vec![],
            psd: vec![],
        };
        assert_eq!(infeasibility_radius(&p, &wrong), 0.0);
    }

    #[test]
    fn ray_checks() {
        let mut p = ConicProblem::new(1);
        p.objective = Some(LinearFunctional::from_pairs([(0, -1.0)]));
        p.psd_blocks.push(MatrixTemplate::from_fn(1, |_, _| LinearFunctional::unit(0)));
        assert!(ray_violation(&p, &[2.0]).unwrap() < 1e-14);
        assert_eq!(ray_violation(&p, &[-2.0]), None);
    }

    #[test]
    fn dual_bound_of_a_scalar_program() {
        // min y s.t. y - 1 >= 0 as a 1x1 block on (y0 - 1 * y1), y1 = 1
        let mut p = ConicProblem::new(2);
        p.objective = Some(LinearFunctional::unit(0));
        p.equalities.push((LinearFunctional::unit(1), 1.0));
        p.psd_blocks.push(MatrixTemplate::from_fn(1, |_, _| {
            LinearFunctional::from_pairs([(0, 1.0), (1, -1.0)])
        }));
        let exact = FarkasMultipliers {
            equalities: vec![1.0],
            zero_rows: vec![],
            psd: vec![DMatrix::from_element(1, 1, 1.0)],
        };
        assert_eq!(dual_bound(&p, &exact, 1e9), 1.0);
        let off = FarkasMultipliers {
            equalities: vec![1.0],
            zero_rows: vec![],
            psd: vec![DMatrix::from_element(1, 1, 0.5)],
        };
        assert!((dual_bound(&p, &off, 10.0) - (1.0 - 0.5 * 10.0 - 0.5 * 10.0)).abs() < 1e-12);
    }
}

#[cfg(test)]
mod scale_tests {
    use super::*;
    use crate::basis::LinearFunctional;

    #[test]
    fn huge_matrices_are_not_certifiable() {
        let mut p = ConicProblem::new(3);
        p.psd_blocks.push(MatrixTemplate::from_fn(2, |i, j| LinearFunctional::unit(i + j)));
        let ok = check_solution(&p, &[1.0, 0.0, 1.0]).unwrap();
        assert!(ok.within(&SolverSettings::default()));
        // singular at any scale, but only resolvable when small
        let small = check_solution(&p, &[1.0, 1.0, 1.0]).unwrap();
        assert!(small.within(&SolverSettings::default()));
        let big = check_solution(&p, &[1e12, 1e12, 1e12]).unwrap();
        assert!(!big.within(&SolverSettings::default()));
    }
}
