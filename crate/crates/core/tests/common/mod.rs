#![allow(dead_code)]

use std::path::PathBuf;

use nchull::conic::SolverSettings;
use nchull::oracle::{sample_set, BoundingBox};
use nchull::relax::{homogenize_system, HomogenizedSystem, Limits, Relaxation};
use nchull::SemialgebraicSet;

pub fn set(ineq: &[&str], eq: &[&str]) -> SemialgebraicSet {
    SemialgebraicSet::parse(&["x1", "x2"], ineq, eq).unwrap()
}

pub fn cusp() -> SemialgebraicSet {
    set(&["x1", "x1^2 - x2^3"], &[])
}

pub fn parabola() -> SemialgebraicSet {
    set(&["x2 - x1^2"], &[])
}

pub fn parabola_augmented() -> SemialgebraicSet {
    set(&["x2 - x1^2", "1 + x2"], &[])
}

pub fn cubic_curve() -> SemialgebraicSet {
    set(&["x2"], &["x1^3 - x2^2 - x1 + 1"])
}

pub fn not_pointed() -> SemialgebraicSet {
    set(&["x2^3 - x1^2"], &[])
}

pub fn bow() -> SemialgebraicSet {
    set(&[], &["x1^4 - x1^2*x2 + x2^3"])
}

pub fn settings() -> SolverSettings {
    SolverSettings::default()
}

pub fn hom(s: &SemialgebraicSet, k: usize) -> Relaxation {
    Relaxation::homogenized(&homogenize_system(s), k, Limits::default()).unwrap()
}

pub fn system(s: &SemialgebraicSet) -> HomogenizedSystem {
    homogenize_system(s)
}

pub fn samples(s: &SemialgebraicSet, half_width: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let bbox = BoundingBox::cube(s.dim(), half_width).unwrap();
    sample_set(s, &bbox, count, seed).unwrap().points
}

pub fn problem_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("problems").join(name)
}
