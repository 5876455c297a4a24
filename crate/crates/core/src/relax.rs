//! The homogenized moment hierarchy and the plain Lasserre baseline.
//!
//! For `S = {g_j >= 0, h_i = 0}` in `n` variables the homogenized system lives
//! in `n + 1` variables `(x0, x)` and has inequality generators
//! `g̃_1, ..., g̃_m, x0` and equality generators `‖(x0, x)‖² - 1, h̃_1, ...`.
//! At order `k` a point `x` belongs to the relaxation when some `y` indexed by
//! monomials of degree `<= 2k` satisfies `L_y(x0) = 1`, `L_y(x_i) = x_i`,
//! `M_k(y) ⪰ 0`, every inequality localizer PSD and every equality localizer
//! zero.
//!
//! A generator whose half-degree exceeds `k` has no localizer of order `>= 0`
//! and is left out at that order; [`Relaxation::omitted`] lists them.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{
    binomial, localizing_template, moment_template, riesz_functional, LinearFunctional,
    MatrixTemplate, MomentLayout,
};
use crate::conic::check::ray_violation;
use crate::conic::{solve, ConicProblem, Residuals, SolveStatus, SolverSettings};
use crate::error::{Error, Result};
use crate::poly::{Polynomial, SemialgebraicSet};

pub const DEFAULT_ORDER_CAP: usize = 6;
pub const DEFAULT_MAX_Y: usize = 5000;

#[derive(Clone, Debug)]
pub struct HomogenizedSystem {
    base: SemialgebraicSet,
    variables: Vec<String>,
    inequalities: Vec<Polynomial>,
    equalities: Vec<Polynomial>,
}

/// First of `x0, x0_, x0__, ...` not used by `variables`.
fn fresh_name(variables: &[String]) -> String {
    let mut name = "x0".to_string();
    while variables.contains(&name) {
        name.push('_');
    }
    name
}

pub fn homogenize_system(set: &SemialgebraicSet) -> HomogenizedSystem {
    let hom = fresh_name(set.variables());
    let lift = |p: &Polynomial| p.homogenize(&hom).expect("fresh name cannot collide");
    let mut variables = vec![hom.clone()];
    variables.extend(set.variables().iter().cloned());

    let mut inequalities: Vec<Polynomial> = set.inequalities().iter().map(lift).collect();
    inequalities.push(Polynomial::var(&variables, 0));

    let one = Polynomial::constant(&variables, 1.0);
    let sphere = (0..variables.len()).fold(-&one, |acc, i| {
        let xi = Polynomial::var(&variables, i);
        &acc + &(&xi * &xi)
    });
    let mut equalities = vec![sphere];
    equalities.extend(set.equalities().iter().map(lift));

    HomogenizedSystem {
        base: set.clone(),
        variables,
        inequalities,
        equalities,
    }
}

impl HomogenizedSystem {
    pub fn base(&self) -> &SemialgebraicSet {
        &self.base
    }

    pub fn hom_var(&self) -> &str {
        &self.variables[0]
    }

    /// `(x0, x1, ..., xn)`.
    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    /// `g̃_1, ..., g̃_m, x0`.
    pub fn inequalities(&self) -> &[Polynomial] {
        &self.inequalities
    }

    /// `‖X̃‖² - 1` followed by the homogenized base equalities.
    pub fn equalities(&self) -> &[Polynomial] {
        &self.equalities
    }

    pub fn inequality_degrees(&self) -> Vec<usize> {
        self.inequalities.iter().map(Polynomial::half_degree).collect()
    }

    pub fn equality_degrees(&self) -> Vec<usize> {
        self.equalities.iter().map(Polynomial::half_degree).collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Limits {
    pub order_cap: usize,
    pub max_y: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            order_cap: DEFAULT_ORDER_CAP,
            max_y: DEFAULT_MAX_Y,
        }
    }
}

pub(crate) fn check_order(num_vars: usize, k: usize, limits: Limits) -> Result<()> {
    if k < 1 {
        return Err(Error::OrderTooSmall {
            order: k,
            reason: "the relaxation needs order >= 1".into(),
        });
    }
    if k > limits.order_cap {
        return Err(Error::OrderTooLarge {
            order: k,
            cap: limits.order_cap,
        });
    }
    let size = binomial(num_vars + 2 * k, num_vars);
    if size > limits.max_y {
        return Err(Error::SizeGuard {
            size,
            limit: limits.max_y,
        });
    }
    Ok(())
}

/// Coefficient vectors over the degree-`d` basis of `h·m`, for each active
/// equality `h` and monomial `m` such that the zero localizers force
/// `L(g·b·h·m) = 0` for every basis element `b`, where `deg g = g_deg`. These
/// lie in the kernel of the localizing matrix of `g` for every feasible `y`.
fn forced_kernel(layout: &MomentLayout, g_deg: usize, d: usize, equalities: &[&Polynomial]) -> Vec<DVector<f64>> {
    let basis = layout.basis(d);
    let k = layout.order();
    let mut out = Vec::new();
    for h in equalities {
        let h_deg = h.total_degree().unwrap_or(0);
        let reach = 2 * (k - h.half_degree());
        let (Some(a), Some(b)) = (d.checked_sub(h_deg), reach.checked_sub(g_deg + d)) else {
            continue;
        };
        for m in layout.basis(a.min(b)) {
            let mut v = DVector::zeros(basis.len());
            for (mono, c) in h.terms() {
                let pos = layout.position(&mono.mul(m)).expect("degree bounded by d");
                v[pos] = c;
            }
            out.push(v);
        }
    }
    out
}

/// Basis positions whose unit vectors complete `kernel` to a basis of
/// `R^n`, or `None` when there is nothing to remove. If `M v = 0` for every
/// kernel vector, `M ⪰ 0` iff its principal submatrix on these positions is.
///
/// Row reduction of the kernel with pivots taken from the highest-degree
/// positions first, so low-degree monomials are kept.
fn face(kernel: &[DVector<f64>], n: usize) -> Option<Vec<usize>> {
    if kernel.is_empty() {
        return None;
    }
    let mut rows: Vec<DVector<f64>> = kernel.to_vec();
    let mut pivot = vec![false; n];
    for col in (0..n).rev() {
        let best = rows
            .iter()
            .enumerate()
            .map(|(i, r)| (i, r[col].abs() / r.amax().max(f64::MIN_POSITIVE)))
            .filter(|&(_, v)| v > 1e-9)
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let Some((i, _)) = best else { continue };
        let p = rows.swap_remove(i);
        for r in &mut rows {
            let f = r[col] / p[col];
            if f != 0.0 {
                r.axpy(-f, &p, 1.0);
                r[col] = 0.0;
            }
        }
        pivot[col] = true;
    }
    Some((0..n).filter(|&i| !pivot[i]).collect())
}

/// Generator indices left out at order `k`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Omitted {
    pub inequalities: Vec<usize>,
    pub equalities: Vec<usize>,
}

impl Omitted {
    pub fn is_empty(&self) -> bool {
        self.inequalities.is_empty() && self.equalities.is_empty()
    }
}

/// Precomputed templates for one system at one order, reused for every query.
#[derive(Clone, Debug)]
pub struct Relaxation {
    layout: MomentLayout,
    homogenized: bool,
    psd: Vec<MatrixTemplate>,
    zero: Vec<MatrixTemplate>,
    /// Unreduced blocks, kept for validation.
    implied: Vec<MatrixTemplate>,
    normalizer: LinearFunctional,
    coords: Vec<LinearFunctional>,
    omitted: Omitted,
}

impl Relaxation {
    /// The spectrahedral relaxation of the homogenized system at order `k`.
    pub fn homogenized(h: &HomogenizedSystem, k: usize, limits: Limits) -> Result<Self> {
        let nv = h.variables.len();
        check_order(nv, k, limits)?;
        let layout = MomentLayout::new(nv, k);
        let unit = |i: usize| riesz_functional(&layout, &Polynomial::var(&h.variables, i));
        let normalizer = unit(0)?;
        let coords = (1..nv).map(unit).collect::<Result<Vec<_>>>()?;
        Self::assemble(layout, true, &h.inequalities, &h.equalities, normalizer, coords)
    }

    /// The un-homogenized relaxation, kept as a baseline.
    pub fn plain(set: &SemialgebraicSet, k: usize, limits: Limits) -> Result<Self> {
        let nv = set.dim();
        check_order(nv, k, limits)?;
        let layout = MomentLayout::new(nv, k);
        let vars = set.variables();
        let normalizer = riesz_functional(&layout, &Polynomial::constant(vars, 1.0))?;
        let coords = (0..nv)
            .map(|i| riesz_functional(&layout, &Polynomial::var(vars, i)))
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(layout, false, set.inequalities(), set.equalities(), normalizer, coords)
    }

    fn assemble(
        layout: MomentLayout,
        homogenized: bool,
        inequalities: &[Polynomial],
        equalities: &[Polynomial],
        normalizer: LinearFunctional,
        coords: Vec<LinearFunctional>,
    ) -> Result<Self> {
        let k = layout.order();
        let mut omitted = Omitted::default();
        let mut zero = Vec::new();
        let mut active_eq = Vec::new();
        for (j, h) in equalities.iter().enumerate() {
            if h.half_degree() > k {
                omitted.equalities.push(j);
            } else if !h.is_zero() {
                zero.push(localizing_template(h, &layout)?);
                active_eq.push(h);
            }
        }
        let mut blocks = vec![(moment_template(&layout), 0, k)];
        for (j, g) in inequalities.iter().enumerate() {
            if g.half_degree() > k {
                omitted.inequalities.push(j);
            } else if !g.is_zero() {
                let deg = g.total_degree().unwrap_or(0);
                blocks.push((localizing_template(g, &layout)?, deg, k - g.half_degree()));
            }
        }
        let mut psd = Vec::new();
        let mut implied = Vec::new();
        for (t, deg, d) in blocks {
            match face(&forced_kernel(&layout, deg, d, &active_eq), t.size()) {
                None => psd.push(t),
                Some(keep) => {
                    if !keep.is_empty() {
                        psd.push(t.principal(&keep));
                    }
                    implied.push(t);
                }
            }
        }
        Ok(Relaxation {
            layout,
            homogenized,
            psd,
            zero,
            implied,
            normalizer,
            coords,
            omitted,
        })
    }

    pub fn order(&self) -> usize {
        self.layout.order()
    }

    pub fn layout(&self) -> &MomentLayout {
        &self.layout
    }

    pub fn num_y(&self) -> usize {
        self.layout.dim()
    }

    /// Dimension `n` of the base set.
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_homogenized(&self) -> bool {
        self.homogenized
    }

    pub fn omitted(&self) -> &Omitted {
        &self.omitted
    }

    /// `L_y(x0)` for the homogenized relaxation, `L_y(1)` for the plain one.
    pub fn normalizer(&self) -> &LinearFunctional {
        &self.normalizer
    }

    /// `L_y(x_i)` for the base coordinates.
    pub fn coordinates(&self) -> &[LinearFunctional] {
        &self.coords
    }

    pub fn psd_blocks(&self) -> &[MatrixTemplate] {
        &self.psd
    }

    pub fn zero_blocks(&self) -> &[MatrixTemplate] {
        &self.zero
    }

    /// Moment and localizing matrices before reduction to their face.
    pub fn implied_blocks(&self) -> &[MatrixTemplate] {
        &self.implied
    }

    fn base_problem(&self) -> ConicProblem {
        ConicProblem {
            num_y: self.num_y(),
            objective: None,
            equalities: vec![(self.normalizer.clone(), 1.0)],
            psd_blocks: self.psd.clone(),
            zero_blocks: self.zero.clone(),
            implied_psd: self.implied.clone(),
        }
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        if v.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coordinate".into()));
        }
        Ok(())
    }

    /// Feasibility problem for `x` with exactly `n + 1` normalization rows.
    pub fn membership_problem(&self, x: &[f64]) -> Result<ConicProblem> {
        self.check_dim(x)?;
        let mut p = self.base_problem();
        p.equalities
            .extend(self.coords.iter().cloned().zip(x.iter().copied()));
        Ok(p)
    }

    /// Minimizes `-Σ c_i L_y(x_i)`, i.e. maximizes the support functional.
    pub fn support_problem(&self, c: &[f64]) -> Result<ConicProblem> {
        self.check_dim(c)?;
        if c.iter().all(|&t| t == 0.0) {
            return Err(Error::InvalidArgument("direction must be nonzero".into()));
        }
        let mut p = self.base_problem();
        let obj = self
            .coords
            .iter()
            .zip(c)
            .fold(LinearFunctional::zero(), |acc, (f, &ci)| acc.plus(&f.scaled(-ci)));
        p.objective = Some(obj);
        Ok(p)
    }

    /// Moments of the point mass that certifies `u` in the proof that the
    /// relaxation contains `S`: `ũ^α / ũ0` with `ũ = (1, u) / ‖(1, u)‖` when
    /// homogenized, plain `u^α` otherwise.
    pub fn point_mass_moments(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(u)?;
        let pt: Vec<f64> = if self.homogenized {
            let norm = (1.0 + u.iter().map(|v| v * v).sum::<f64>()).sqrt();
            std::iter::once(1.0 / norm).chain(u.iter().map(|v| v / norm)).collect()
        } else {
            u.to_vec()
        };
        let scale = if self.homogenized { 1.0 / pt[0] } else { 1.0 };
        Ok(self
            .layout
            .moments()
            .iter()
            .map(|m| m.eval(&pt) * scale)
            .collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Member,
    NotMember,
    Undetermined,
}

impl Decision {
    pub fn exit_code(self) -> i32 {
        match self {
            Decision::Member => 0,
            Decision::NotMember => 1,
            Decision::Undetermined => 2,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MembershipVerdict {
    pub decision: Decision,
    pub order: usize,
    pub point: Vec<f64>,
    /// Checker-validated moment vector, present for members.
    pub witness: Option<Vec<f64>>,
    pub residuals: Option<Residuals>,
    pub solver_status: SolveStatus,
    pub eq_tol: f64,
    pub psd_tol: f64,
}

pub fn decide(status: SolveStatus) -> Decision {
    match status {
        SolveStatus::Optimal => Decision::Member,
        SolveStatus::Infeasible => Decision::NotMember,
        _ => Decision::Undetermined,
    }
}

pub fn is_member(relax: &Relaxation, x: &[f64], settings: &SolverSettings) -> Result<MembershipVerdict> {
    let problem = relax.membership_problem(x)?;
    let sol = solve(&problem, settings)?;
    let decision = decide(sol.status);
    Ok(MembershipVerdict {
        decision,
        order: relax.order(),
        point: x.to_vec(),
        witness: if decision == Decision::Member { sol.y } else { None },
        residuals: sol.residuals,
        solver_status: sol.status,
        eq_tol: settings.eq_tol,
        psd_tol: settings.psd_tol,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SupportValue {
    Finite(f64),
    /// The relaxation is unbounded in this direction.
    Unbounded,
    /// The relaxation is empty.
    Empty,
    Undetermined,
}

impl SupportValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            SupportValue::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// Upper bound usable in comparisons: `+inf` when unbounded or unknown.
    pub fn upper_bound(self) -> f64 {
        match self {
            SupportValue::Finite(v) => v,
            SupportValue::Empty => f64::NEG_INFINITY,
            _ => f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SupportResult {
    pub direction: Vec<f64>,
    pub order: usize,
    pub value: SupportValue,
    /// `(L_y(x_1), ..., L_y(x_n))` at the optimum.
    pub maximizer_proxy: Option<Vec<f64>>,
    pub solver_status: SolveStatus,
    pub residuals: Option<Residuals>,
}

/// Maximizes `c·L_y(x)` over the relaxation.
///
/// The plain problem is tried first. If the backend is inconclusive, which
/// happens along directions where the supremum is infinite but no exact ray
/// exists, the objective is capped by the homogeneous constraint
/// `ĉ·L_y(x) <= T·n(y)` with `ĉ = c/‖c‖`, `n` the normalization functional
/// and `T = 2/ray_tol`. A capped optimum below `T/2` is the relaxation's
/// optimum, since the cap is then inactive. At or above `T/2`, `y` rescaled
/// to unit objective gain is an improving direction violating the
/// normalization row by at most `ray_tol/2`; it is reported unbounded only
/// if the ray check on the uncapped problem accepts it.
pub fn support_value(relax: &Relaxation, c: &[f64], settings: &SolverSettings) -> Result<SupportResult> {
    relax.check_dim(c)?;
    let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidArgument("direction must be nonzero".into()));
    }
    let unit: Vec<f64> = c.iter().map(|v| v / norm).collect();
    let problem = relax.support_problem(&unit)?;
    let proxy = |y: &[f64]| relax.coords.iter().map(|f| f.apply(y)).collect::<Vec<_>>();
    let result = |value, maximizer_proxy, sol: &crate::conic::Solution| SupportResult {
        direction: c.to_vec(),
        order: relax.order(),
        value,
        maximizer_proxy,
        solver_status: sol.status,
        residuals: sol.residuals,
    };

    let sol = solve(&problem, settings)?;
    match sol.status {
        SolveStatus::Optimal => {
            let y = sol.y.as_deref().expect("optimal solutions carry y");
            return Ok(result(SupportValue::Finite(-sol.objective_value * norm), Some(proxy(y)), &sol));
        }
        SolveStatus::Unbounded => return Ok(result(SupportValue::Unbounded, None, &sol)),
        SolveStatus::Infeasible => return Ok(result(SupportValue::Empty, None, &sol)),
        _ => {}
    }

    let cap = 2.0 / settings.ray_tol;
    let gain = problem.objective.as_ref().expect("support problems have an objective");
    let mut capped = problem.clone();
    capped
        .psd_blocks
        .push(MatrixTemplate::from_fn(1, |_, _| relax.normalizer.scaled(cap).plus(gain)));
    let sol = solve(&capped, settings)?;
    let is_ray = |x: &[f64]| {
        -gain.apply(x) >= cap / 2.0 && ray_violation(&problem, x).is_some_and(|v| v <= settings.ray_tol)
    };
    let (value, maximizer) = match sol.status {
        SolveStatus::Optimal if -sol.objective_value < cap / 2.0 => {
            let y = sol.y.as_deref().expect("optimal solutions carry y");
            (SupportValue::Finite(-sol.objective_value * norm), Some(proxy(y)))
        }
        SolveStatus::Infeasible => (SupportValue::Empty, None),
        _ if is_ray(&sol.raw_x) => (SupportValue::Unbounded, None),
        _ => (SupportValue::Undetermined, None),
    };
    Ok(result(value, maximizer, &sol))
}

/// Support values along `num_angles` directions `(cos θ, sin θ)`, θ uniform
/// in `[0, 2π)`, ordered by angle. Per-angle failures are recorded inline.
pub fn trace_support_2d(
    relax: &Relaxation,
    num_angles: usize,
    settings: &SolverSettings,
) -> Result<Vec<(f64, SupportResult)>> {
    if relax.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: relax.dim(),
        });
    }
    if num_angles < 3 {
        return Err(Error::InvalidArgument("tracing needs at least 3 angles".into()));
    }
    (0..num_angles)
        .into_par_iter()
        .map(|i| {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / num_angles as f64;
            let (s, c) = theta.sin_cos();
            support_value(relax, &[c, s], settings).map(|r| (theta, r))
        })
        .collect()
}
