//! Convex hulls of unions: split a set along coordinate signs and decide
//! membership in the hull of the union with one joint moment program.
//!
//! Each piece keeps all of its homogeneous constraints but loses its own
//! normalization. The pieces are tied together by `Σ_e L_e(x0) = 1` and
//! `Σ_e L_e(x_i) = x_i`, so `λ_e = L_e(x0)` acts as the convex weight of piece
//! `e` without any bilinear terms.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::basis::LinearFunctional;
use crate::conic::{solve, ConicProblem, Residuals, SolveStatus, SolverSettings};
use crate::error::{Error, Result};
use crate::poly::{Polynomial, SemialgebraicSet};
use crate::relax::{decide, support_value, Decision, HomogenizedSystem, Limits, Relaxation, SupportValue};

/// Full splits are refused above this dimension unless explicitly allowed.
pub const MAX_FULL_SPLIT_DIM: usize = 4;

/// Directions probed for the stabilization signal.
const SIGNAL_DIRECTIONS: usize = 8;
const SIGNAL_TOL: f64 = 1e-6;

/// Bit `e_i = 1` selects `x_i <= 0`, `e_i = 0` selects `x_i >= 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OrthantPattern(Vec<bool>);

impl OrthantPattern {
    pub fn new(bits: Vec<bool>) -> Self {
        OrthantPattern(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All `2^n` patterns, `00..0` first.
    pub fn all(n: usize) -> Vec<OrthantPattern> {
        (0..1usize << n)
            .map(|m| OrthantPattern((0..n).map(|i| m >> (n - 1 - i) & 1 == 1).collect()))
            .collect()
    }

    /// Whether `x` satisfies the sign constraints.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.0
            .iter()
            .zip(x)
            .all(|(&neg, &v)| if neg { v <= 0.0 } else { v >= 0.0 })
    }
}

impl FromStr for OrthantPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::InvalidArgument("empty orthant pattern".into()));
        }
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::InvalidArgument(format!("orthant pattern `{s}` must use only 0 and 1"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(OrthantPattern)
    }
}

impl fmt::Display for OrthantPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl Serialize for OrthantPattern {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// `S_e = S ∩ {(-1)^{e_i} x_i >= 0}` for each pattern, all `2^n` by default.
/// A caller passing a subset asserts that it still covers `S`.
pub fn split_orthants(
    set: &SemialgebraicSet,
    patterns: Option<&[OrthantPattern]>,
    allow_large: bool,
) -> Result<Vec<(OrthantPattern, SemialgebraicSet)>> {
    let n = set.dim();
    let patterns = match patterns {
        Some(p) => p.to_vec(),
        None if n > MAX_FULL_SPLIT_DIM && !allow_large => {
            return Err(Error::InvalidArgument(format!(
                "a full split of {n} variables has 2^{n} pieces; pass patterns or allow it explicitly"
            )))
        }
        None => OrthantPattern::all(n),
    };
    patterns
        .into_iter()
        .map(|e| {
            if e.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: e.len(),
                });
            }
            let mut piece = set.clone();
            for (i, &neg) in e.bits().iter().enumerate() {
                let xi = Polynomial::var(set.variables(), i);
                piece = piece.with_inequality(if neg { -&xi } else { xi })?;
            }
            Ok((e, piece))
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct UnionHullVerdict {
    pub decision: Decision,
    pub order: usize,
    pub point: Vec<f64>,
    /// `λ_e = L_e(x0)` per piece, when member.
    pub weights: Option<Vec<f64>>,
    /// `L_e(x) / λ_e` per piece with `λ_e > 0`, when member.
    pub piece_points: Option<Vec<Option<Vec<f64>>>>,
    /// Set when some piece shows no stabilization across orders `k, k+1`;
    /// the union relaxation may then strictly contain the hull.
    pub over_approximation_possible: bool,
    pub solver_status: SolveStatus,
    pub residuals: Option<Residuals>,
}

/// The joint program for a fixed list of pieces and order, reused across
/// query points.
#[derive(Clone, Debug)]
pub struct UnionHull {
    pieces: Vec<Relaxation>,
    offsets: Vec<usize>,
    num_y: usize,
    stabilized: Vec<bool>,
}

/// Whether support values at orders `k` and `k + 1` agree along evenly
/// spread directions; heuristic evidence that order `k` is already exact.
pub fn stabilization_signal(
    piece: &HomogenizedSystem,
    k: usize,
    settings: &SolverSettings,
    limits: Limits,
) -> Result<bool> {
    let n = piece.base().dim();
    let (Ok(lo), Ok(hi)) = (
        Relaxation::homogenized(piece, k, limits),
        Relaxation::homogenized(piece, k + 1, limits),
    ) else {
        return Ok(false);
    };
    for d in 0..SIGNAL_DIRECTIONS {
        let c: Vec<f64> = if n == 2 {
            let t = std::f64::consts::TAU * d as f64 / SIGNAL_DIRECTIONS as f64;
            vec![t.cos(), t.sin()]
        } else {
            (0..n)
                .map(|i| if i == d % n { if d / n % 2 == 0 { 1.0 } else { -1.0 } } else { 0.0 })
                .collect()
        };
        let a = support_value(&lo, &c, settings)?.value;
        let b = support_value(&hi, &c, settings)?.value;
        let same = match (a, b) {
            (SupportValue::Finite(u), SupportValue::Finite(v)) => (u - v).abs() <= SIGNAL_TOL * (1.0 + u.abs()),
            (SupportValue::Unbounded, SupportValue::Unbounded) => true,
            (SupportValue::Empty, SupportValue::Empty) => true,
            _ => false,
        };
        if !same {
            return Ok(false);
        }
    }
    Ok(true)
}

impl UnionHull {
    /// Builds the piece relaxations and their stabilization signals.
    pub fn new(pieces: &[HomogenizedSystem], k: usize, settings: &SolverSettings, limits: Limits) -> Result<Self> {
        let Some(first) = pieces.first() else {
            return Err(Error::InvalidArgument("no pieces".into()));
        };
        let n = first.base().dim();
        let mut rel = Vec::with_capacity(pieces.len());
        let mut offsets = Vec::with_capacity(pieces.len());
        let mut num_y = 0;
        for p in pieces {
            if p.base().dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: p.base().dim(),
                });
            }
            let r = Relaxation::homogenized(p, k, limits)?;
            offsets.push(num_y);
            num_y += r.num_y();
            rel.push(r);
        }
        if num_y > limits.max_y {
            return Err(Error::SizeGuard {
                size: num_y,
                limit: limits.max_y,
            });
        }
        let stabilized = pieces
            .iter()
            .map(|p| stabilization_signal(p, k, settings, limits))
            .collect::<Result<Vec<_>>>()?;
        Ok(UnionHull {
            pieces: rel,
            offsets,
            num_y,
            stabilized,
        })
    }

    pub fn order(&self) -> usize {
        self.pieces[0].order()
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].dim()
    }

    pub fn stabilized(&self) -> &[bool] {
        &self.stabilized
    }

    pub fn problem(&self, x: &[f64]) -> Result<ConicProblem> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coordinate".into()));
        }
        let mut p = ConicProblem::new(self.num_y);
        let mut weight = LinearFunctional::zero();
        let mut coords = vec![LinearFunctional::zero(); self.dim()];
        for (r, &off) in self.pieces.iter().zip(&self.offsets) {
            p.psd_blocks.extend(r.psd_blocks().iter().map(|t| t.shifted(off)));
            p.zero_blocks.extend(r.zero_blocks().iter().map(|t| t.shifted(off)));
            p.implied_psd.extend(r.implied_blocks().iter().map(|t| t.shifted(off)));
            weight = weight.plus(&r.normalizer().shifted(off));
            for (acc, f) in coords.iter_mut().zip(r.coordinates()) {
                *acc = acc.plus(&f.shifted(off));
            }
        }
        p.equalities.push((weight, 1.0));
        p.equalities.extend(coords.into_iter().zip(x.iter().copied()));
        Ok(p)
    }

    pub fn membership(&self, x: &[f64], settings: &SolverSettings) -> Result<UnionHullVerdict> {
        let sol = solve(&self.problem(x)?, settings)?;
        let decision = decide(sol.status);
        let (weights, piece_points) = match (&sol.y, decision) {
            (Some(y), Decision::Member) => {
                let mut w = Vec::new();
                let mut pts = Vec::new();
                for (r, &off) in self.pieces.iter().zip(&self.offsets) {
                    let local = &y[off..off + r.num_y()];
                    let lam = r.normalizer().apply(local);
                    w.push(lam);
                    pts.push((lam > settings.eq_tol).then(|| {
                        r.coordinates().iter().map(|f| f.apply(local) / lam).collect()
                    }));
                }
                (Some(w), Some(pts))
            }
            _ => (None, None),
        };
        Ok(UnionHullVerdict {
            decision,
            order: self.order(),
            point: x.to_vec(),
            weights,
            piece_points,
            over_approximation_possible: self.stabilized.iter().any(|s| !s),
            solver_status: sol.status,
            residuals: sol.residuals,
        })
    }
}

/// One-off membership in the closed convex hull of the union of `pieces`.
pub fn union_hull_membership(
    pieces: &[HomogenizedSystem],
    k: usize,
    x: &[f64],
    settings: &SolverSettings,
    limits: Limits,
) -> Result<UnionHullVerdict> {
    UnionHull::new(pieces, k, settings, limits)?.membership(x, settings)
}
