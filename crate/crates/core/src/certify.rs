//! Side conditions of the homogenized hierarchy: quadratic-module membership
//! by Gram matrices, pointedness certificates, the even-degree obstruction to
//! closedness at infinity, and generator augmentation.
//!
//! A certificate writes a target as `Σ_j σ_j g_j + Σ_i h_i e_i` with SOS
//! multipliers `σ_j = b_jᵀ G_j b_j` (`G_j ⪰ 0`, `g_0 = 1`) and free multipliers
//! `h_i = b_iᵀ H_i b_i` for the equality generators `e_i`. The solver only
//! proposes the matrices; acceptance rests on re-expanding the identity with
//! polynomial arithmetic and on the Gram eigenvalues.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Value};

use crate::basis::{enumerate_basis, LinearFunctional, MatrixTemplate};
use crate::conic::check::min_eigenvalue;
use crate::conic::{solve, ConicProblem, SolveStatus, SolverSettings};
use crate::error::{Error, Result};
use crate::oracle::{sample_set, BoundingBox, FEASIBILITY_TOL};
use crate::poly::{Monomial, Polynomial, SemialgebraicSet};
use crate::relax::{check_order, homogenize_system, HomogenizedSystem, Limits};

/// Largest accepted coefficient mismatch of a reconstructed identity.
pub const COEFF_TOL: f64 = 1e-6;

/// A pointedness margin must exceed this to count.
pub const MIN_MARGIN: f64 = 1e-6;

/// Sampled points beyond this norm are evidence of non-compactness.
pub const NONCOMPACT_NORM: f64 = 256.0;

const PROBE_LEVELS: u32 = 10;
const PROBE_COUNT: usize = 2000;
pub const AUGMENT_SAMPLES: usize = 500;

/// Sign-vector certificates are attempted only up to this dimension.
pub const MAX_SIGN_DIM: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplierKind {
    Sos,
    Free,
}

#[derive(Clone, Debug)]
pub struct GramBlock {
    pub generator: Polynomial,
    pub kind: MultiplierKind,
    pub basis: Vec<Monomial>,
    pub gram: DMatrix<f64>,
}

impl GramBlock {
    /// `bᵀ G b`.
    pub fn multiplier(&self) -> Polynomial {
        let vars = self.generator.variables();
        let n = self.basis.len();
        let terms = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| {
            (self.basis[i].mul(&self.basis[j]), self.gram[(i, j)])
        });
        Polynomial::from_terms(vars, terms)
    }
}

#[derive(Clone, Debug)]
pub struct QModuleCertificate {
    pub target: Polynomial,
    pub order: usize,
    pub blocks: Vec<GramBlock>,
    /// Largest coefficient of `target - reconstruction`.
    pub residual: f64,
    /// Sum of absolute coefficients of `target - reconstruction`.
    pub residual_l1: f64,
    /// Smallest eigenvalue over the SOS Gram blocks.
    pub min_eigenvalue: f64,
}

impl QModuleCertificate {
    fn new(target: Polynomial, order: usize, blocks: Vec<GramBlock>) -> Self {
        let mut cert = QModuleCertificate {
            target,
            order,
            blocks,
            residual: 0.0,
            residual_l1: 0.0,
            min_eigenvalue: f64::INFINITY,
        };
        let diff = &cert.target - &cert.reconstruct();
        cert.residual = diff.terms().fold(0.0, |a, (_, c)| a.max(c.abs()));
        cert.residual_l1 = diff.terms().map(|(_, c)| c.abs()).sum();
        cert.min_eigenvalue = cert
            .blocks
            .iter()
            .filter(|b| b.kind == MultiplierKind::Sos)
            .map(|b| min_eigenvalue(&b.gram).0)
            .fold(f64::INFINITY, f64::min);
        cert
    }

    /// `Σ (bᵀ G b) · g` over all blocks, by polynomial arithmetic.
    pub fn reconstruct(&self) -> Polynomial {
        self.blocks
            .iter()
            .fold(Polynomial::zero(self.target.variables()), |acc, b| {
                &acc + &(&b.multiplier() * &b.generator)
            })
    }

    pub fn is_valid(&self, psd_tol: f64) -> bool {
        self.residual <= COEFF_TOL && self.min_eigenvalue >= -psd_tol
    }

    fn scaled(&self, s: f64) -> Self {
        let blocks = self
            .blocks
            .iter()
            .map(|b| GramBlock {
                gram: &b.gram * s,
                ..b.clone()
            })
            .collect();
        Self::new(self.target.scale(s), self.order, blocks)
    }

    /// Generator index to dense lower-triangular Gram rows.
    pub fn to_json(&self) -> Value {
        let blocks: Vec<Value> = self
            .blocks
            .iter()
            .enumerate()
            .map(|(idx, b)| {
                let lower: Vec<Vec<f64>> = (0..b.gram.nrows())
                    .map(|i| (0..=i).map(|j| b.gram[(i, j)]).collect())
                    .collect();
                let basis: Vec<String> = b
                    .basis
                    .iter()
                    .map(|m| Polynomial::from_terms(b.generator.variables(), [(m.clone(), 1.0)]).to_string())
                    .collect();
                json!({
                    "index": idx,
                    "generator": b.generator.to_string(),
                    "kind": b.kind,
                    "basis": basis,
                    "gram_lower": lower,
                })
            })
            .collect();
        json!({
            "target": self.target.to_string(),
            "order": self.order,
            "blocks": blocks,
            "residual": self.residual,
            "min_eigenvalue": self.min_eigenvalue,
        })
    }
}

/// Outcome of a certificate search. `NotFound` only means the order-`k`
/// program has no solution; `Undetermined` means the solver gave no usable
/// answer.
#[derive(Clone, Debug)]
pub enum Search<T> {
    Found(T),
    NotFound,
    Undetermined,
}

impl<T> Search<T> {
    pub fn found(&self) -> Option<&T> {
        match self {
            Search::Found(t) => Some(t),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Search::Found(_) => "found",
            Search::NotFound => "not_found",
            Search::Undetermined => "undetermined",
        }
    }
}

struct BlockSpec {
    generator: Polynomial,
    kind: MultiplierKind,
    basis: Vec<Monomial>,
    offset: usize,
}

/// One identity `target = Σ multipliers · generators`, where the target is
/// `constant + Σ_e y_e · polys_e` over scalar decision variables `y_e`.
struct Identity {
    constant: Polynomial,
    extras: Vec<(usize, Polynomial)>,
    blocks: Vec<BlockSpec>,
}

/// Gram program over leading scalars followed by the upper triangles of
/// every block.
struct GramProgram {
    num_y: usize,
    identities: Vec<Identity>,
}

fn tri_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Offset of `(i, j)`, `i <= j`, in the row-major upper triangle of size `n`.
fn tri_index(i: usize, j: usize, n: usize) -> usize {
    i * n - i * i.saturating_sub(1) / 2 + (j - i)
}

impl GramProgram {
    fn new(num_extra: usize) -> Self {
        GramProgram {
            num_y: num_extra,
            identities: Vec::new(),
        }
    }

    /// Adds an identity with multipliers for every generator of half-degree
    /// at most `k`.
    fn push_identity(
        &mut self,
        constant: Polynomial,
        extras: Vec<(usize, Polynomial)>,
        inequalities: &[Polynomial],
        equalities: &[Polynomial],
        k: usize,
    ) {
        let vars = constant.variables().to_vec();
        let nv = vars.len();
        let one = Polynomial::constant(&vars, 1.0);
        let gens = std::iter::once((&one, MultiplierKind::Sos))
            .chain(inequalities.iter().map(|g| (g, MultiplierKind::Sos)))
            .chain(equalities.iter().map(|g| (g, MultiplierKind::Free)));
        let mut blocks = Vec::new();
        for (g, kind) in gens {
            if g.is_zero() || g.half_degree() > k {
                continue;
            }
            let basis = enumerate_basis(nv, k - g.half_degree());
            let offset = self.num_y;
            self.num_y += tri_len(basis.len());
            blocks.push(BlockSpec {
                generator: g.clone(),
                kind,
                basis,
                offset,
            });
        }
        self.identities.push(Identity {
            constant,
            extras,
            blocks,
        });
    }

    fn to_problem(&self) -> ConicProblem {
        let mut p = ConicProblem::new(self.num_y);
        for id in &self.identities {
            let mut rows: BTreeMap<Monomial, Vec<(usize, f64)>> = BTreeMap::new();
            for b in &id.blocks {
                let n = b.basis.len();
                for i in 0..n {
                    for j in i..n {
                        let var = b.offset + tri_index(i, j, n);
                        let w = if i == j { 1.0 } else { 2.0 };
                        let bij = b.basis[i].mul(&b.basis[j]);
                        for (m, c) in b.generator.terms() {
                            rows.entry(bij.mul(m)).or_default().push((var, w * c));
                        }
                    }
                }
            }
            for (e, poly) in &id.extras {
                for (m, c) in poly.terms() {
                    rows.entry(m.clone()).or_default().push((*e, -c));
                }
            }
            for (m, _) in id.constant.terms() {
                rows.entry(m.clone()).or_default();
            }
            for (m, pairs) in rows {
                p.equalities
                    .push((LinearFunctional::from_pairs(pairs), id.constant.coefficient(&m)));
            }
            for b in id.blocks.iter().filter(|b| b.kind == MultiplierKind::Sos) {
                let n = b.basis.len();
                p.psd_blocks.push(MatrixTemplate::from_fn(n, |i, j| {
                    LinearFunctional::unit(b.offset + tri_index(i, j, n))
                }));
            }
        }
        p
    }

    /// Certificates read off a candidate vector, with concrete targets.
    fn extract(&self, y: &[f64], order: usize) -> Vec<QModuleCertificate> {
        self.identities
            .iter()
            .map(|id| {
                let target = id
                    .extras
                    .iter()
                    .fold(id.constant.clone(), |acc, (e, poly)| &acc + &poly.scale(y[*e]));
                let blocks = id
                    .blocks
                    .iter()
                    .map(|b| {
                        let n = b.basis.len();
                        let gram = DMatrix::from_fn(n, n, |i, j| {
                            let (i, j) = if i <= j { (i, j) } else { (j, i) };
                            y[b.offset + tri_index(i, j, n)]
                        });
                        GramBlock {
                            generator: b.generator.clone(),
                            kind: b.kind,
                            basis: b.basis.clone(),
                            gram,
                        }
                    })
                    .collect();
                QModuleCertificate::new(target, order, blocks)
            })
            .collect()
    }
}

/// The solver's answer if it has one, else its last iterate, for independent
/// validation.
fn candidate(sol: &crate::conic::Solution) -> Option<Vec<f64>> {
    sol.y
        .clone()
        .or_else(|| (!sol.raw_x.is_empty() && sol.raw_x.iter().all(|v| v.is_finite())).then(|| sol.raw_x.clone()))
}

/// Searches for `target ∈ Q_k(G)` over explicit generator lists.
pub fn qmodule_search(
    target: &Polynomial,
    inequalities: &[Polynomial],
    equalities: &[Polynomial],
    k: usize,
    settings: &SolverSettings,
    limits: Limits,
) -> Result<Search<QModuleCertificate>> {
    let vars = target.variables();
    for g in inequalities.iter().chain(equalities) {
        if g.variables() != vars {
            return Err(Error::VariableMismatch(format!(
                "generator over {:?}, target over {:?}",
                g.variables(),
                vars
            )));
        }
    }
    check_order(vars.len(), k, limits)?;
    let deg = target.total_degree().unwrap_or(0);
    if deg > 2 * k {
        return Err(Error::OrderTooSmall {
            order: k,
            reason: format!("target has degree {deg} > 2k"),
        });
    }
    let mut prog = GramProgram::new(0);
    prog.push_identity(target.clone(), Vec::new(), inequalities, equalities, k);
    let sol = solve(&prog.to_problem(), settings)?;
    if let Some(y) = candidate(&sol) {
        let cert = prog.extract(&y, k).remove(0);
        if cert.is_valid(settings.psd_tol) {
            return Ok(Search::Found(cert));
        }
    }
    Ok(match sol.status {
        SolveStatus::Infeasible => Search::NotFound,
        _ => Search::Undetermined,
    })
}

/// `f̃ ∈ Q_k(G̃)` for the homogenized generators, with the sphere equality.
pub fn qmodule_membership(
    target: &Polynomial,
    h: &HomogenizedSystem,
    k: usize,
    settings: &SolverSettings,
    limits: Limits,
) -> Result<Search<QModuleCertificate>> {
    if target.variables() != h.variables() {
        return Err(Error::VariableMismatch(format!(
            "target over {:?}, system over {:?}",
            target.variables(),
            h.variables()
        )));
    }
    qmodule_search(target, h.inequalities(), h.equalities(), k, settings, limits)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointednessRoute {
    /// `ℓ̃ - ε ∈ Q_k(G̃)`: positivity on the whole spherical slice `S̃`.
    Sphere,
    /// `ℓ(x) - ε (1 + s·x) ∈ Q_k(G)` for every sign vector `s`: affine
    /// growth on `S`, hence positivity on the closure of the lifted set.
    AffineGrowth,
}

#[derive(Clone, Debug)]
pub struct PointednessCertificate {
    /// `ℓ̃ = Σ_i g_i X_i` over the homogenized variables, `‖g‖₂ = 1`.
    pub form: Polynomial,
    pub margin: f64,
    /// Rigorous lower bound on `ℓ̃` over `S̃` that accounts for the residual
    /// and Gram eigenvalues; only for the sphere route.
    pub certified_margin: Option<f64>,
    pub order: usize,
    pub route: PointednessRoute,
    pub certificates: Vec<QModuleCertificate>,
    /// Whether the margin is the solver's certified optimum at this order.
    pub optimal: bool,
}

impl PointednessCertificate {
    pub fn coefficients(&self) -> Vec<f64> {
        let nv = self.form.num_vars();
        (0..nv)
            .map(|i| self.form.coefficient(&Monomial::var(nv, i)))
            .collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "form": self.form.to_string(),
            "coefficients": self.coefficients(),
            "margin": self.margin,
            "certified_margin": self.certified_margin,
            "order": self.order,
            "route": self.route,
            "optimal": self.optimal,
            "certificates": self.certificates.iter().map(QModuleCertificate::to_json).collect::<Vec<_>>(),
        })
    }
}

fn l1(p: &Polynomial) -> f64 {
    p.terms().map(|(_, c)| c.abs()).sum()
}

/// Lower bound on `target` over the unit-sphere part of the set: there every
/// monomial is at most 1 in absolute value, so `σ_j(x) >= λ_min |b_j|` and
/// `|g_j(x)| <= ‖g_j‖₁`.
fn sphere_slack(cert: &QModuleCertificate) -> f64 {
    let gram_loss: f64 = cert
        .blocks
        .iter()
        .filter(|b| b.kind == MultiplierKind::Sos)
        .map(|b| (-min_eigenvalue(&b.gram).0).max(0.0) * b.basis.len() as f64 * l1(&b.generator))
        .sum();
    cert.residual_l1 + gram_loss
}

/// Shared scalars: `t` (norm bound, pinned to 1), `ε`, then `g_0..g_n`.
const T: usize = 0;
const EPS: usize = 1;
const G0: usize = 2;

fn norm_block(len: usize) -> MatrixTemplate {
    MatrixTemplate::from_fn(len + 1, |i, j| match (i, j) {
        (0, 0) => LinearFunctional::unit(T),
        (0, j) => LinearFunctional::unit(G0 + j - 1),
        (i, j) if i == j => LinearFunctional::unit(T),
        _ => LinearFunctional::zero(),
    })
}

fn finish(
    prog: &GramProgram,
    h: &HomogenizedSystem,
    k: usize,
    route: PointednessRoute,
    settings: &SolverSettings,
) -> Result<Search<PointednessCertificate>> {
    let nv = h.variables().len();
    let mut problem = prog.to_problem();
    problem.equalities.push((LinearFunctional::unit(T), 1.0));
    problem.psd_blocks.push(norm_block(nv));
    problem.objective = Some(LinearFunctional::from_pairs([(EPS, -1.0)]));
    let sol = solve(&problem, settings)?;
    let Some(y) = candidate(&sol) else {
        return Ok(Search::Undetermined);
    };
    let g: Vec<f64> = y[G0..G0 + nv].to_vec();
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    let optimal = sol.status == SolveStatus::Optimal;
    let not_found = if optimal { Search::NotFound } else { Search::Undetermined };
    if !(norm > 0.0) || !(y[EPS] > 0.0) {
        return Ok(not_found);
    }
    let scale = 1.0 / norm;
    let certs: Vec<QModuleCertificate> = prog.extract(&y, k).iter().map(|c| c.scaled(scale)).collect();
    let margin = y[EPS] * scale;
    let form = Polynomial::from_terms(
        h.variables(),
        g.iter().enumerate().map(|(i, &c)| (Monomial::var(nv, i), c * scale)),
    );
    let certified_margin = match route {
        PointednessRoute::Sphere => Some(margin - sphere_slack(&certs[0])),
        PointednessRoute::AffineGrowth => None,
    };
    // On the compact slice the certified margin is a proof by itself. On an
    // unbounded set a small residual can outgrow any linear margin, so
    // affine growth also needs a solver-certified optimum: near-feasible
    // iterates of weakly infeasible programs otherwise pass the checks.
    let valid = certs.iter().all(|c| c.is_valid(settings.psd_tol))
        && margin > MIN_MARGIN
        && match certified_margin {
            Some(m) => m > MIN_MARGIN,
            None => optimal,
        };
    if !valid {
        return Ok(not_found);
    }
    Ok(Search::Found(PointednessCertificate {
        form,
        margin,
        certified_margin,
        order: k,
        route,
        certificates: certs,
        optimal,
    }))
}

fn sphere_route(h: &HomogenizedSystem, k: usize, settings: &SolverSettings) -> Result<Search<PointednessCertificate>> {
    let vars = h.variables();
    let nv = vars.len();
    let mut prog = GramProgram::new(G0 + nv);
    let mut extras = vec![(EPS, Polynomial::constant(vars, -1.0))];
    extras.extend((0..nv).map(|i| (G0 + i, Polynomial::var(vars, i))));
    prog.push_identity(Polynomial::zero(vars), extras, h.inequalities(), h.equalities(), k);
    finish(&prog, h, k, PointednessRoute::Sphere, settings)
}

fn affine_route(h: &HomogenizedSystem, k: usize, settings: &SolverSettings) -> Result<Search<PointednessCertificate>> {
    let base = h.base();
    let vars = base.variables();
    let n = vars.len();
    let mut prog = GramProgram::new(G0 + n + 1);
    let one = Polynomial::constant(vars, 1.0);
    for signs in 0..(1usize << n) {
        let growth = (0..n).fold(one.clone(), |acc, i| {
            let s = if signs >> i & 1 == 1 { -1.0 } else { 1.0 };
            &acc + &Polynomial::var(vars, i).scale(s)
        });
        let mut extras = vec![(EPS, -&growth), (G0, one.clone())];
        extras.extend((0..n).map(|i| (G0 + 1 + i, Polynomial::var(vars, i))));
        prog.push_identity(Polynomial::zero(vars), extras, base.inequalities(), base.equalities(), k);
    }
    finish(&prog, h, k, PointednessRoute::AffineGrowth, settings)
}

/// Searches for a unit linear form `ℓ̃` positive on the lifted set, with
/// maximal margin.
///
/// The sphere route certifies `ℓ̃ >= ε` on all of `S̃`. When `S̃` is larger
/// than the closure of the lifted interior, which is exactly the situation
/// of sets that are not closed at infinity, no such form exists, and the
/// affine-growth route certifies `ℓ(x) >= ε (1 + ‖x‖₁)` on `S` instead
/// (up to dimension [`MAX_SIGN_DIM`]). The second route is a supplement:
/// without a certificate the verdict is the sphere route's.
pub fn pointedness_certificate(
    h: &HomogenizedSystem,
    k: usize,
    settings: &SolverSettings,
    limits: Limits,
) -> Result<Search<PointednessCertificate>> {
    check_order(h.variables().len(), k, limits)?;
    let sphere = sphere_route(h, k, settings)?;
    if let Search::Found(_) = sphere {
        return Ok(sphere);
    }
    if h.base().dim() > MAX_SIGN_DIM {
        return Ok(sphere);
    }
    Ok(match affine_route(h, k, settings)? {
        found @ Search::Found(_) => found,
        _ => sphere,
    })
}

/// True iff every inequality generator has even degree; equalities are exempt.
pub fn even_degree_obstruction(set: &SemialgebraicSet) -> bool {
    set.inequalities()
        .iter()
        .all(|g| g.total_degree().map_or(true, |d| d % 2 == 0))
}

#[derive(Clone, Debug)]
pub struct ClosednessReport {
    pub structural_obstruction: bool,
    pub noncompact_evidence: bool,
    pub far_point: Option<Vec<f64>>,
    pub pointedness: Search<PointednessCertificate>,
    pub recommendation: Option<Polynomial>,
    pub notes: Vec<String>,
}

impl ClosednessReport {
    pub fn to_json(&self) -> Value {
        json!({
            "structural_obstruction": self.structural_obstruction,
            "noncompact_evidence": self.noncompact_evidence,
            "far_point": self.far_point,
            "pointedness_status": self.pointedness.label(),
            "pointedness": self.pointedness.found().map(PointednessCertificate::to_json),
            "recommendation": self.recommendation.as_ref().map(|p| p.to_string()),
            "notes": self.notes,
        })
    }
}

/// Samples nested boxes `[-2^t, 2^t]^n`, `t = 1..10`, and returns the first
/// point of norm above [`NONCOMPACT_NORM`].
pub fn noncompact_probe(set: &SemialgebraicSet, seed: u64) -> Result<Option<Vec<f64>>> {
    for t in 1..=PROBE_LEVELS {
        let bbox = BoundingBox::cube(set.dim(), 2f64.powi(t as i32))?;
        let cloud = match sample_set(set, &bbox, PROBE_COUNT, seed.wrapping_add(t as u64)) {
            Ok(c) => c,
            Err(Error::NoSamples { .. }) => continue,
            Err(e) => return Err(e),
        };
        if let Some(p) = cloud
            .points
            .into_iter()
            .find(|p| p.iter().map(|v| v * v).sum::<f64>().sqrt() > NONCOMPACT_NORM)
        {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

/// `ℓ̃(1, x)` with negligible coefficients dropped, scaled to constant term 1
/// when the constant is positive and snapped to a `1e-6` grid. The snapped
/// form is re-validated on samples by [`augment_generators`].
pub fn recommend(cert: &PointednessCertificate) -> Polynomial {
    let ell = cert
        .form
        .dehomogenize()
        .expect("forms have at least one variable")
        .prune(1e-6);
    let c0 = ell.coefficient(&Monomial::one(ell.num_vars()));
    let ell = if c0 > 1e-9 { ell.scale(1.0 / c0) } else { ell };
    let snapped = ell.terms().map(|(m, c)| (m.clone(), (c * 1e6).round() / 1e6));
    Polynomial::from_terms(ell.variables(), snapped.collect::<Vec<_>>())
}

pub fn closedness_report(
    set: &SemialgebraicSet,
    k: usize,
    settings: &SolverSettings,
    limits: Limits,
    seed: u64,
) -> Result<ClosednessReport> {
    let structural_obstruction = even_degree_obstruction(set);
    let far_point = noncompact_probe(set, seed)?;
    let h = homogenize_system(set);
    let pointedness = pointedness_certificate(&h, k, settings, limits)?;
    let mut notes = vec!["non-compactness is a sampling heuristic".to_string()];
    match pointedness.found() {
        Some(c) if c.route == PointednessRoute::Sphere => {
            notes.push("linear form certified positive on the whole spherical slice".into())
        }
        Some(_) => notes.push(
            "linear form certified by affine growth on the set; the spherical slice itself admits no positive form"
                .into(),
        ),
        None => notes.push(format!("no pointedness certificate at order {k}; inconclusive")),
    }
    let recommendation = match pointedness.found() {
        Some(c) if structural_obstruction && far_point.is_some() => Some(recommend(c)),
        _ => None,
    };
    Ok(ClosednessReport {
        structural_obstruction,
        noncompact_evidence: far_point.is_some(),
        far_point,
        pointedness,
        recommendation,
        notes,
    })
}

/// Adds `ell >= 0` to the inequalities after checking on
/// [`AUGMENT_SAMPLES`] sampled points of `set ∩ bbox` that it cuts nothing.
pub fn augment_generators(
    set: &SemialgebraicSet,
    ell: &Polynomial,
    bbox: &BoundingBox,
    seed: u64,
) -> Result<SemialgebraicSet> {
    if ell.variables() != set.variables() {
        return Err(Error::VariableMismatch(format!(
            "generator over {:?}, set over {:?}",
            ell.variables(),
            set.variables()
        )));
    }
    if ell.total_degree().unwrap_or(0) > 1 {
        return Err(Error::InvalidArgument(format!("augmenting generator `{ell}` is not affine")));
    }
    let cloud = sample_set(set, bbox, AUGMENT_SAMPLES, seed)?;
    for p in &cloud.points {
        let v = ell.eval_unchecked(p);
        if v < -FEASIBILITY_TOL * (1.0 + ell.abs_scale(p)) {
            return Err(Error::InvalidAugmentation {
                value: v,
                point: p.clone(),
            });
        }
    }
    set.with_inequality(ell.clone())
}
