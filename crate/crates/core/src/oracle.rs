//! Sampling-based ground truth: seeded point clouds of a set inside a box,
//! planar convex hulls and inner estimates of support functions.
//!
//! Sets with equalities have no volume, so their points are found on random
//! axis-parallel lines: all coordinates but one are drawn uniformly and the
//! first equality is solved for the remaining one by sign-change bisection.
//! Tangential roots are missed and the resulting density is not uniform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::SemialgebraicSet;
use crate::relax::HomogenizedSystem;

/// Points must satisfy every generator to this tolerance, relative to the
/// size of the terms.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Below this acceptance rate sampling stops early with a warning.
pub const MIN_ACCEPTANCE: f64 = 1e-5;

const MAX_ATTEMPTS: u64 = 20_000_000;
const CHECK_EVERY: u64 = 100_000;
const LINE_GRID: usize = 512;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundingBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoundingBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(Error::InvalidArgument("a box needs at least one axis".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::InvalidArgument(format!("degenerate box {lower:?} x {upper:?}")));
        }
        Ok(BoundingBox { lower, upper })
    }

    /// `[-r, r]^n`.
    pub fn cube(n: usize, r: f64) -> Result<Self> {
        Self::new(vec![-r; n], vec![r; n])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// True if `x` lies within `rel_margin` times the axis width of a face.
    pub fn near_boundary(&self, x: &[f64], rel_margin: f64) -> bool {
        x.iter().zip(self.lower.iter().zip(&self.upper)).any(|(&v, (&l, &u))| {
            let m = rel_margin * (u - l);
            v - l <= m || u - v <= m
        })
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| rng.gen_range(l..u))
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleCloud {
    pub points: Vec<Vec<f64>>,
    pub bbox: BoundingBox,
    pub seed: u64,
    pub attempts: u64,
    pub warnings: Vec<String>,
}

/// Real roots of `f` on `[lo, hi]` located by sign changes on a uniform grid.
fn roots_on_interval<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Vec<f64> {
    let step = (hi - lo) / LINE_GRID as f64;
    let mut out = Vec::new();
    let mut a = lo;
    let mut fa = f(a);
    for i in 1..=LINE_GRID {
        let b = if i == LINE_GRID { hi } else { lo + step * i as f64 };
        let fb = f(b);
        if fa == 0.0 {
            out.push(a);
        } else if fa.signum() != fb.signum() && fb != 0.0 {
            let (mut l, mut r, mut fl) = (a, b, fa);
            for _ in 0..200 {
                let m = 0.5 * (l + r);
                if m <= l || m >= r {
                    break;
                }
                let fm = f(m);
                if fm == 0.0 {
                    l = m;
                    r = m;
                    break;
                }
                if fm.signum() == fl.signum() {
                    l = m;
                    fl = fm;
                } else {
                    r = m;
                }
            }
            out.push(0.5 * (l + r));
        }
        a = b;
        fa = fb;
    }
    if fa == 0.0 {
        out.push(hi);
    }
    out
}

/// Seeded sample of `set ∩ bbox`.
///
/// Stops after `count` points, after too many attempts, or as soon as the
/// acceptance rate drops below [`MIN_ACCEPTANCE`]; the last two leave a
/// warning. Every returned point satisfies the set to [`FEASIBILITY_TOL`].
pub fn sample_set(set: &SemialgebraicSet, bbox: &BoundingBox, count: usize, seed: u64) -> Result<SampleCloud> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    if bbox.dim() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            got: bbox.dim(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(count);
    let mut warnings = Vec::new();
    let mut attempts = 0u64;
    let n = set.dim();

    while points.len() < count {
        if attempts >= MAX_ATTEMPTS {
            warnings.push(format!("stopped after {attempts} attempts with {} points", points.len()));
            break;
        }
        if attempts >= CHECK_EVERY
            && attempts % CHECK_EVERY == 0
            && (points.len() as f64) < MIN_ACCEPTANCE * attempts as f64
        {
            warnings.push(format!(
                "acceptance rate {:.1e} below {MIN_ACCEPTANCE:.0e}; returning {} of {count} points",
                points.len() as f64 / attempts as f64,
                points.len()
            ));
            break;
        }
        attempts += 1;
        let mut x = bbox.draw(&mut rng);
        if let Some(h) = set.equalities().first() {
            let axis = rng.gen_range(0..n);
            let roots = roots_on_interval(
                |t| {
                    let mut z = x.clone();
                    z[axis] = t;
                    h.eval_unchecked(&z)
                },
                bbox.lower[axis],
                bbox.upper[axis],
            );
            if roots.is_empty() {
                continue;
            }
            x[axis] = roots[rng.gen_range(0..roots.len())];
        }
        if set.contains_unchecked(&x, FEASIBILITY_TOL) {
            points.push(x);
        }
    }
    if points.is_empty() {
        return Err(Error::NoSamples { attempts });
    }
    Ok(SampleCloud {
        points,
        bbox: bbox.clone(),
        seed,
        attempts,
        warnings,
    })
}

/// Box-Muller.
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = 1.0 - rng.gen::<f64>();
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

/// Seeded sample of the spherical slice `{x̃ ∈ S̃ : ‖x̃‖ = 1, x0 >= 0}`,
/// rejection-sampled from the uniform distribution on the half sphere.
/// Only for systems without base equalities.
pub fn sample_sphere_slice(h: &HomogenizedSystem, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if h.equalities().len() > 1 {
        return Err(Error::InvalidArgument(
            "sphere sampling needs a system without equalities; lift samples of the base set instead".into(),
        ));
    }
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nv = h.variables().len();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0u64;
    while out.len() < count && attempts < MAX_ATTEMPTS {
        attempts += 1;
        let mut x: Vec<f64> = (0..nv).map(|_| standard_normal(&mut rng)).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        for v in &mut x {
            *v /= norm;
        }
        x[0] = x[0].abs();
        if h
            .inequalities()
            .iter()
            .all(|g| g.eval_unchecked(&x) >= -FEASIBILITY_TOL * (1.0 + g.abs_scale(&x)))
        {
            out.push(x);
        }
    }
    if out.is_empty() {
        return Err(Error::NoSamples { attempts });
    }
    Ok(out)
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Convex hull by Andrew's monotone chain, counterclockwise without repeated
/// or collinear vertices. Collinear input yields its two extreme points, a
/// single distinct point yields one vertex.
pub fn hull_2d(points: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("hull of an empty cloud".into()));
    }
    if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::InvalidArgument("non-finite point".into()));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return Ok(pts);
    }
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    Ok(lower)
}

/// Largest `c·x` over the points and the index attaining it; a lower bound on
/// the support function of the closed convex hull of any set containing them.
pub fn support_numeric(points: &[Vec<f64>], c: &[f64]) -> Result<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for (i, p) in points.iter().enumerate() {
        if p.len() != c.len() {
            return Err(Error::DimensionMismatch {
                expected: c.len(),
                got: p.len(),
            });
        }
        let v: f64 = p.iter().zip(c).map(|(a, b)| a * b).sum();
        if best.map_or(true, |(b, _)| v > b) {
            best = Some((v, i));
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("support of an empty cloud".into()))
}

/// Inner support estimate with the box-saturation flag: `true` when the
/// maximizer sits within `rel_margin` of the box boundary, where truncation
/// may hide a larger true value.
pub fn support_with_saturation(cloud: &SampleCloud, c: &[f64], rel_margin: f64) -> Result<(f64, bool)> {
    let (v, i) = support_numeric(&cloud.points, c)?;
    Ok((v, cloud.bbox.near_boundary(&cloud.points[i], rel_margin)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relax::homogenize_system;

    fn cusp() -> SemialgebraicSet {
        SemialgebraicSet::parse(&["x1", "x2"], &["x1", "x1^2 - x2^3"], &[]).unwrap()
    }

    #[test]
    fn cusp_cloud_is_feasible_and_reproducible() {
        let bbox = BoundingBox::new(vec![0.0, -4.0], vec![4.0, 2.0]).unwrap();
        let a = sample_set(&cusp(), &bbox, 2000, 7).unwrap();
        assert_eq!(a.points.len(), 2000);
        for p in &a.points {
            assert!(p[0] >= 0.0 && p[0] * p[0] - p[1].powi(3) >= -1e-9);
        }
        let b = sample_set(&cusp(), &bbox, 2000, 7).unwrap();
        assert_eq!(a.points, b.points);
        let (v, _) = support_numeric(&a.points, &[-2.0, 3.0]).unwrap();
        assert!(v <= 1.0 + 1e-9 && v > 0.8);
    }

    #[test]
    fn empty_set_has_no_samples() {
        let s = SemialgebraicSet::parse(&["x1"], &["x1 - 1", "-x1"], &[]).unwrap();
        let bbox = BoundingBox::cube(1, 2.0).unwrap();
        assert!(matches!(sample_set(&s, &bbox, 10, 1), Err(Error::NoSamples { .. })));
    }

    #[test]
    fn curve_points_satisfy_the_equality() {
        let s = SemialgebraicSet::parse(&["x1", "x2"], &["x2"], &["x1^3 - x2^2 - x1 + 1"]).unwrap();
        let bbox = BoundingBox::cube(2, 3.0).unwrap();
        let cloud = sample_set(&s, &bbox, 300, 3).unwrap();
        assert_eq!(cloud.points.len(), 300);
        for p in &cloud.points {
            let r = p[0].powi(3) - p[1] * p[1] - p[0] + 1.0;
            assert!(r.abs() < 1e-8, "{p:?} {r}");
            assert!(p[1] >= 0.0);
        }
    }

    #[test]
    fn parabola_support_from_below() {
        let s = SemialgebraicSet::parse(&["x1", "x2"], &["x2 - x1^2"], &[]).unwrap();
        let cloud = sample_set(&s, &BoundingBox::cube(2, 2.0).unwrap(), 4000, 11).unwrap();
        let (v, sat) = support_with_saturation(&cloud, &[1.0, -1.0], 1e-3).unwrap();
        assert!(v <= 0.25 && v > 0.2);
        assert!(!sat);
    }

    #[test]
    fn hull_of_square_with_interior() {
        let mut pts = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let square = hull_2d(&pts).unwrap();
        pts.extend([[0.5, 0.5], [0.2, 0.7], [0.5, 0.0]]);
        assert_eq!(hull_2d(&pts).unwrap(), square);
        assert_eq!(square, vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        let pts: Vec<Vec<f64>> = square.iter().map(|p| p.to_vec()).collect();
        assert_eq!(support_numeric(&pts, &[1.0, 1.0]).unwrap().0, 2.0);
    }

    #[test]
    fn collinear_hull_is_a_segment() {
        let h = hull_2d(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [0.5, 0.5]]).unwrap();
        assert_eq!(h, vec![[0.0, 0.0], [2.0, 2.0]]);
    }

    #[test]
    fn sphere_slice_points() {
        let h = homogenize_system(&cusp());
        let pts = sample_sphere_slice(&h, 200, 5).unwrap();
        for p in &pts {
            let norm: f64 = p.iter().map(|v| v * v).sum();
            assert!((norm - 1.0).abs() < 1e-12 && p[0] >= 0.0 && p[1] >= 0.0);
        }
    }
}
