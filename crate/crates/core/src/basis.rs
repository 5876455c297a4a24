//! Monomial bases and the linear skeleton of moment and localizing matrices.
//!
//! A truncated moment vector `y` is indexed by all monomials of degree at
//! most `2k`, in graded-lex order. Because the order is graded, the basis of
//! degree `<= d` is always a prefix of that list. Matrix entries are stored as
//! [`LinearFunctional`]s of `y`, so a template is built once per generator and
//! instantiated for every query.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::poly::{Monomial, Polynomial};

/// All monomials in `num_vars` variables of degree `<= k`, graded-lex.
pub fn enumerate_basis(num_vars: usize, k: usize) -> Vec<Monomial> {
    let mut out = Vec::with_capacity(binomial(num_vars + k, num_vars));
    for d in 0..=k {
        let mut buf = vec![0u32; num_vars];
        push_degree(&mut out, &mut buf, 0, d as u32);
    }
    out
}

fn push_degree(out: &mut Vec<Monomial>, buf: &mut [u32], at: usize, left: u32) {
    if at + 1 == buf.len() {
        buf[at] = left;
        out.push(Monomial::new(buf.to_vec()));
        return;
    }
    for e in (0..=left).rev() {
        buf[at] = e;
        push_degree(out, buf, at + 1, left - e);
    }
    buf[at] = 0;
}

pub fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k.min(n));
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

#[derive(Clone, Debug)]
pub struct MomentLayout {
    num_vars: usize,
    order: usize,
    moments: Vec<Monomial>,
    index: HashMap<Monomial, usize>,
}

impl MomentLayout {
    pub fn new(num_vars: usize, order: usize) -> Self {
        assert!(num_vars >= 1, "a layout needs at least one variable");
        let moments = enumerate_basis(num_vars, 2 * order);
        let index = moments
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        MomentLayout {
            num_vars,
            order,
            moments,
            index,
        }
    }

    /// Number of entries of `y`, i.e. `C(num_vars + 2k, num_vars)`.
    pub fn dim(&self) -> usize {
        self.moments.len()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// The moment basis of degree `<= 2k`.
    pub fn moments(&self) -> &[Monomial] {
        &self.moments
    }

    /// Monomials of degree `<= d` (a prefix of [`MomentLayout::moments`]).
    pub fn basis(&self, d: usize) -> &[Monomial] {
        assert!(d <= 2 * self.order);
        &self.moments[..binomial(self.num_vars + d, self.num_vars)]
    }

    pub fn position(&self, m: &Monomial) -> Option<usize> {
        self.index.get(m).copied()
    }

    fn check_poly(&self, p: &Polynomial) -> Result<()> {
        if p.num_vars() != self.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                got: p.num_vars(),
            });
        }
        Ok(())
    }
}

/// Sparse linear form `y ↦ Σ c_i y_i`, sorted by index, no explicit zeros.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearFunctional {
    terms: Vec<(usize, f64)>,
}

impl LinearFunctional {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn unit(i: usize) -> Self {
        LinearFunctional {
            terms: vec![(i, 1.0)],
        }
    }

    pub fn from_pairs<I: IntoIterator<Item = (usize, f64)>>(pairs: I) -> Self {
        let mut v: Vec<(usize, f64)> = pairs.into_iter().collect();
        v.sort_by_key(|&(i, _)| i);
        let mut terms: Vec<(usize, f64)> = Vec::with_capacity(v.len());
        for (i, c) in v {
            match terms.last_mut() {
                Some((j, d)) if *j == i => *d += c,
                _ => terms.push((i, c)),
            }
        }
        terms.retain(|&(_, c)| c != 0.0);
        LinearFunctional { terms }
    }

    pub fn terms(&self) -> &[(usize, f64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.terms.last().map(|&(i, _)| i)
    }

    pub fn apply(&self, y: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * y[i]).sum()
    }

    pub fn shifted(&self, offset: usize) -> Self {
        LinearFunctional {
            terms: self.terms.iter().map(|&(i, c)| (i + offset, c)).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::from_pairs(self.terms.iter().map(|&(i, c)| (i, c * s)))
    }

    pub fn plus(&self, other: &LinearFunctional) -> Self {
        Self::from_pairs(self.terms.iter().chain(&other.terms).copied())
    }
}

/// Symmetric matrix of linear functionals; only the upper triangle is stored.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixTemplate {
    size: usize,
    upper: Vec<LinearFunctional>,
}

impl MatrixTemplate {
    pub fn from_fn<F>(size: usize, mut f: F) -> Self
    where
        F: FnMut(usize, usize) -> LinearFunctional,
    {
        let mut upper = Vec::with_capacity(size * (size + 1) / 2);
        for i in 0..size {
            for j in i..size {
                upper.push(f(i, j));
            }
        }
        MatrixTemplate { size, upper }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn entry(&self, i: usize, j: usize) -> &LinearFunctional {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        &self.upper[i * self.size - i * i.saturating_sub(1) / 2 + (j - i)]
    }

    /// Upper-triangle entries as `(i, j, functional)` with `i <= j`.
    pub fn upper_entries(&self) -> impl Iterator<Item = (usize, usize, &LinearFunctional)> {
        let n = self.size;
        (0..n)
            .flat_map(move |i| (i..n).map(move |j| (i, j)))
            .zip(&self.upper)
            .map(|((i, j), f)| (i, j, f))
    }

    pub fn max_index(&self) -> Option<usize> {
        self.upper.iter().filter_map(LinearFunctional::max_index).max()
    }

    pub fn instantiate(&self, y: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.size, self.size);
        for (i, j, f) in self.upper_entries() {
            let v = f.apply(y);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }

    pub fn shifted(&self, offset: usize) -> Self {
        MatrixTemplate {
            size: self.size,
            upper: self.upper.iter().map(|f| f.shifted(offset)).collect(),
        }
    }

    /// Principal submatrix on `rows`.
    pub fn principal(&self, rows: &[usize]) -> Self {
        MatrixTemplate::from_fn(rows.len(), |a, b| self.entry(rows[a], rows[b]).clone())
    }
}

/// `M_k(y)`: entry `(α, β)` selects `y_{α+β}`.
pub fn moment_template(layout: &MomentLayout) -> MatrixTemplate {
    localizing_at(&[(Monomial::one(layout.num_vars), 1.0)], layout, layout.order)
}

/// `M_{k - ⌈deg p / 2⌉}(p y)`: entry `(α, β)` is `Σ_γ p_γ y_{α+β+γ}`.
pub fn localizing_template(p: &Polynomial, layout: &MomentLayout) -> Result<MatrixTemplate> {
    layout.check_poly(p)?;
    let half = p.half_degree();
    if half > layout.order {
        return Err(Error::OrderTooSmall {
            order: layout.order,
            reason: format!(
                "localizing a polynomial of degree {} needs order >= {half}",
                p.total_degree().unwrap_or(0)
            ),
        });
    }
    let terms: Vec<(Monomial, f64)> = p.terms().map(|(m, c)| (m.clone(), c)).collect();
    Ok(localizing_at(&terms, layout, layout.order - half))
}

fn localizing_at(terms: &[(Monomial, f64)], layout: &MomentLayout, order: usize) -> MatrixTemplate {
    let basis = layout.basis(order);
    MatrixTemplate::from_fn(basis.len(), |i, j| {
        let ab = basis[i].mul(&basis[j]);
        LinearFunctional::from_pairs(terms.iter().map(|(g, c)| {
            let pos = layout
                .position(&ab.mul(g))
                .expect("localizing degree checked against the layout");
            (pos, *c)
        }))
    })
}

/// The Riesz functional `L_y(p) = Σ p_α y_α` as a functional of `y`.
pub fn riesz_functional(layout: &MomentLayout, p: &Polynomial) -> Result<LinearFunctional> {
    layout.check_poly(p)?;
    let pairs = p
        .terms()
        .map(|(m, c)| {
            layout.position(m).map(|i| (i, c)).ok_or(Error::DegreeOverflow {
                degree: m.degree(),
                capacity: 2 * layout.order,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LinearFunctional::from_pairs(pairs))
}

pub fn riesz_apply(layout: &MomentLayout, y: &[f64], p: &Polynomial) -> Result<f64> {
    if y.len() != layout.dim() {
        return Err(Error::DimensionMismatch {
            expected: layout.dim(),
            got: y.len(),
        });
    }
    Ok(riesz_functional(layout, p)?.apply(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_polynomial;
    use proptest::prelude::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn basis_examples() {
        let b = enumerate_basis(3, 1);
        let got: Vec<_> = b.iter().map(|m| m.exponents().to_vec()).collect();
        assert_eq!(got, vec![vec![0, 0, 0], vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
        assert_eq!(enumerate_basis(3, 2).len(), 10);
        assert_eq!(enumerate_basis(2, 3).len(), 10);
        let mut sorted = enumerate_basis(3, 4);
        let orig = sorted.clone();
        sorted.sort();
        assert_eq!(sorted, orig);
    }

    #[test]
    fn basis_sizes_follow_binomial() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(1..=4);
            let k = rng.gen_range(0..=6);
            let expect = (1..=n).fold(1usize, |acc, i| acc * (k + i) / i);
            assert_eq!(enumerate_basis(n, k).len(), expect, "n={n} k={k}");
        }
    }

    #[test]
    fn hankel_template_in_one_variable() {
        let layout = MomentLayout::new(1, 1);
        let m = moment_template(&layout);
        assert_eq!(m.size(), 2);
        assert_eq!(m.entry(0, 0), &LinearFunctional::unit(0));
        assert_eq!(m.entry(0, 1), &LinearFunctional::unit(1));
        assert_eq!(m.entry(1, 0), &LinearFunctional::unit(1));
        assert_eq!(m.entry(1, 1), &LinearFunctional::unit(2));
    }

    #[test]
    fn moment_entry_selects_product() {
        let layout = MomentLayout::new(3, 2);
        let m = moment_template(&layout);
        let x0x1 = layout.position(&Monomial::new(vec![1, 1, 0])).unwrap();
        assert_eq!(m.entry(1, 2), &LinearFunctional::unit(x0x1));
        for (i, j, f) in m.upper_entries() {
            assert_eq!(m.entry(j, i), f);
        }
    }

    #[test]
    fn localizing_examples() {
        let layout = MomentLayout::new(3, 1);
        let one = parse_polynomial("1", &names(3)).unwrap();
        assert_eq!(localizing_template(&one, &layout).unwrap(), moment_template(&layout));

        let x0 = parse_polynomial("x0", &names(3)).unwrap();
        let t = localizing_template(&x0, &layout).unwrap();
        assert_eq!(t.size(), 1);
        assert_eq!(t.entry(0, 0), &LinearFunctional::unit(1));

        let sphere = parse_polynomial("x0^2 + x1^2 + x2^2 - 1", &names(3)).unwrap();
        let t = localizing_template(&sphere, &layout).unwrap();
        let pos = |e: Vec<u32>| layout.position(&Monomial::new(e)).unwrap();
        let expect = LinearFunctional::from_pairs([
            (pos(vec![2, 0, 0]), 1.0),
            (pos(vec![0, 2, 0]), 1.0),
            (pos(vec![0, 0, 2]), 1.0),
            (pos(vec![0, 0, 0]), -1.0),
        ]);
        assert_eq!(t.size(), 1);
        assert_eq!(t.entry(0, 0), &expect);

        let cubic = parse_polynomial("x0*x1^2 - x2^3", &names(3)).unwrap();
        assert!(matches!(
            localizing_template(&cubic, &layout),
            Err(Error::OrderTooSmall { order: 1, .. })
        ));
    }

    #[test]
    fn riesz_examples() {
        let layout = MomentLayout::new(3, 1);
        let vars = names(3);
        let u = [1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0];
        let y: Vec<f64> = layout.moments().iter().map(|m| m.eval(&u) / u[0]).collect();
        let one = parse_polynomial("1", &vars).unwrap();
        assert_eq!(riesz_apply(&layout, &y, &one).unwrap(), y[0]);
        let x1 = parse_polynomial("x1", &vars).unwrap();
        assert!((riesz_apply(&layout, &y, &x1).unwrap() - 2.0).abs() < 1e-15);
        let cube = parse_polynomial("x1^3", &vars).unwrap();
        assert!(matches!(
            riesz_apply(&layout, &y, &cube),
            Err(Error::DegreeOverflow { degree: 3, capacity: 2 })
        ));
    }

    #[test]
    fn point_mass_moment_matrix_is_rank_one() {
        let layout = MomentLayout::new(3, 2);
        let u = [0.6, -0.48, 0.64];
        let y: Vec<f64> = layout.moments().iter().map(|m| m.eval(&u)).collect();
        let m = moment_template(&layout).instantiate(&y);
        let eig = m.symmetric_eigen().eigenvalues;
        let mut ev: Vec<f64> = eig.iter().copied().collect();
        ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!(ev[ev.len() - 1] > -1e-12);
        assert!(ev[1].abs() < 1e-12);
    }

    fn arb_poly(nvars: usize, max_deg: usize) -> impl Strategy<Value = Polynomial> {
        let basis = enumerate_basis(nvars, max_deg);
        prop::collection::vec(-3.0f64..3.0, basis.len()).prop_map(move |cs| {
            Polynomial::from_terms(&names(nvars), basis.iter().cloned().zip(cs))
        })
    }

    proptest! {
        // qᵀ M(p y) q = L_y(p q²)
        #[test]
        fn localizing_identity(
            p in arb_poly(3, 2),
            q in arb_poly(3, 1),
            y in prop::collection::vec(-1.0f64..1.0, binomial(3 + 4, 3)),
        ) {
            let layout = MomentLayout::new(3, 2);
            let t = localizing_template(&p, &layout).unwrap();
            let m = t.instantiate(&y);
            let basis = layout.basis(t.size() - 1 - 2);
            let qv = nalgebra::DVector::from_iterator(
                basis.len(),
                basis.iter().map(|b| q.coefficient(b)),
            );
            let lhs = (qv.transpose() * &m * &qv)[(0, 0)];
            let rhs = riesz_apply(&layout, &y, &(&p * &(&q * &q))).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
        }
    }
}
