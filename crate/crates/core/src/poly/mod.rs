//! Sparse multivariate polynomials over `f64`.
//!
//! A [`Polynomial`] carries its own ordered variable list; terms are stored in
//! a `BTreeMap` keyed by [`Monomial`], whose ordering is graded
//! lexicographic with the first variable largest. For homogenized systems the
//! homogenizing variable is always placed first, so moment indices are stable
//! across runs.

mod parse;
mod set;

use std::cmp::Ordering;
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

pub use parse::parse_polynomial;
pub use set::SemialgebraicSet;

/// Exponent vector `α` of the monomial `X^α`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn one(num_vars: usize) -> Self {
        Monomial(vec![0; num_vars])
    }

    /// The monomial `X_i`.
    pub fn var(num_vars: usize, i: usize) -> Self {
        let mut e = vec![0; num_vars];
        e[i] = 1;
        Monomial(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn num_vars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// Product `X^α · X^β = X^(α+β)`.
    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.0.len(), other.0.len());
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(point)
            .filter(|(&e, _)| e > 0)
            .map(|(&e, &x)| x.powi(e as i32))
            .product()
    }

    fn prepend(&self, e0: u32) -> Monomial {
        let mut e = Vec::with_capacity(self.0.len() + 1);
        e.push(e0);
        e.extend_from_slice(&self.0);
        Monomial(e)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    variables: Vec<String>,
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero(variables: &[String]) -> Self {
        Polynomial {
            variables: variables.to_vec(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(variables: &[String], c: f64) -> Self {
        Self::from_terms(variables, [(Monomial::one(variables.len()), c)])
    }

    pub fn var(variables: &[String], i: usize) -> Self {
        Self::from_terms(variables, [(Monomial::var(variables.len(), i), 1.0)])
    }

    /// Builds a polynomial, summing repeated monomials and dropping zeros.
    ///
    /// Panics if a monomial does not match the variable count.
    pub fn from_terms<I>(variables: &[String], terms: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, f64)>,
    {
        let mut p = Polynomial::zero(variables);
        for (m, c) in terms {
            assert_eq!(m.num_vars(), variables.len(), "monomial arity mismatch");
            p.add_term(m, c);
        }
        p
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, f64)> + '_ {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == 0.0 {
                    o.remove();
                }
            }
        }
    }

    pub fn total_degree(&self) -> Result<usize> {
        self.terms
            .keys()
            .map(Monomial::degree)
            .max()
            .ok_or(Error::ZeroPolynomial)
    }

    pub fn is_even_degree(&self) -> Result<bool> {
        Ok(self.total_degree()? % 2 == 0)
    }

    /// Half-degree `⌈deg/2⌉`; zero for the zero polynomial.
    pub fn half_degree(&self) -> usize {
        self.total_degree().map(|d| d.div_ceil(2)).unwrap_or(0)
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(Monomial::degree);
        match degs.next() {
            None => true,
            Some(d) => degs.all(|e| e == d),
        }
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.variables.len() {
            return Err(Error::DimensionMismatch {
                expected: self.variables.len(),
                got: point.len(),
            });
        }
        Ok(self.eval_unchecked(point))
    }

    pub(crate) fn eval_unchecked(&self, point: &[f64]) -> f64 {
        self.terms.iter().map(|(m, c)| c * m.eval(point)).sum()
    }

    /// Sum of `|c_α| · |x^α|`, the natural scale for the rounding error of
    /// [`Polynomial::evaluate`].
    pub(crate) fn abs_scale(&self, point: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| (c * m.eval(point)).abs())
            .sum()
    }

    /// `X_0^d · p(X/X_0)` with `d = deg p`; the new variable goes first.
    pub fn homogenize(&self, hom_var: &str) -> Result<Polynomial> {
        if self.variables.iter().any(|v| v == hom_var) {
            return Err(Error::NameCollision(hom_var.to_string()));
        }
        let mut vars = Vec::with_capacity(self.variables.len() + 1);
        vars.push(hom_var.to_string());
        vars.extend(self.variables.iter().cloned());
        let d = match self.total_degree() {
            Ok(d) => d,
            Err(_) => return Ok(Polynomial::zero(&vars)),
        };
        let terms = self
            .terms
            .iter()
            .map(|(m, &c)| (m.prepend((d - m.degree()) as u32), c));
        Ok(Polynomial::from_terms(&vars, terms))
    }

    /// Sets the first variable to one and removes it: `p̃(1, X)`.
    pub fn dehomogenize(&self) -> Result<Polynomial> {
        if self.variables.is_empty() {
            return Err(Error::InvalidArgument(
                "cannot dehomogenize a polynomial without variables".into(),
            ));
        }
        let vars = &self.variables[1..];
        let terms = self
            .terms
            .iter()
            .map(|(m, &c)| (Monomial(m.0[1..].to_vec()), c));
        Ok(Polynomial::from_terms(vars, terms))
    }

    /// Highest-degree homogeneous part.
    pub fn top_form(&self) -> Result<Polynomial> {
        let d = self.total_degree()?;
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.degree() == d)
            .map(|(m, &c)| (m.clone(), c));
        Ok(Polynomial::from_terms(&self.variables, terms))
    }

    /// Restricts to the hyperplane where the first variable vanishes and drops it.
    pub fn restrict_first_to_zero(&self) -> Polynomial {
        let vars = &self.variables[1..];
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.0[0] == 0)
            .map(|(m, &c)| (Monomial(m.0[1..].to_vec()), c));
        Polynomial::from_terms(vars, terms)
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        let terms = self.terms.iter().map(|(m, &c)| (m.clone(), c * s));
        Polynomial::from_terms(&self.variables, terms)
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut acc = Polynomial::constant(&self.variables, 1.0);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Re-expresses the polynomial over a superset of its variables.
    pub fn embed(&self, variables: &[String]) -> Result<Polynomial> {
        let map: Vec<usize> = self
            .variables
            .iter()
            .map(|v| {
                variables
                    .iter()
                    .position(|w| w == v)
                    .ok_or_else(|| Error::VariableMismatch(format!("`{v}` is not in the target list")))
            })
            .collect::<Result<_>>()?;
        let terms = self.terms.iter().map(|(m, &c)| {
            let mut e = vec![0; variables.len()];
            for (i, &k) in map.iter().enumerate() {
                e[k] = m.0[i];
            }
            (Monomial(e), c)
        });
        Ok(Polynomial::from_terms(variables, terms))
    }

    /// Largest absolute coefficient difference against `other`.
    pub fn max_coeff_diff(&self, other: &Polynomial) -> f64 {
        let diff = self - other;
        diff.terms.values().fold(0.0, |acc, c| acc.max(c.abs()))
    }

    /// Drops coefficients with `|c| <= rel * max|c|`.
    pub fn prune(&self, rel: f64) -> Polynomial {
        let max = self.terms.values().fold(0.0f64, |a, c| a.max(c.abs()));
        let terms = self
            .terms
            .iter()
            .filter(|(_, c)| c.abs() > rel * max)
            .map(|(m, &c)| (m.clone(), c));
        Polynomial::from_terms(&self.variables, terms)
    }

    fn check_same_vars(&self, other: &Polynomial) {
        assert_eq!(
            self.variables, other.variables,
            "polynomial arithmetic requires identical variable lists"
        );
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.check_same_vars(rhs);
        let mut out = self.clone();
        for (m, &c) in &rhs.terms {
            out.add_term(m.clone(), c);
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.check_same_vars(rhs);
        let mut out = self.clone();
        for (m, &c) in &rhs.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.check_same_vars(rhs);
        let mut out = Polynomial::zero(&self.variables);
        for (a, &ca) in &self.terms {
            for (b, &cb) in &rhs.terms {
                out.add_term(a.mul(b), ca * cb);
            }
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl fmt::Display for Polynomial {
    /// Prints in the input grammar, highest degree first and lex within a
    /// degree; coefficients use the shortest representation that parses back
    /// to the same `f64`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut ordered: Vec<_> = self.terms.iter().collect();
        ordered.sort_by(|(a, _), (b, _)| b.degree().cmp(&a.degree()).then(b.0.cmp(&a.0)));
        for (i, (m, &c)) in ordered.into_iter().enumerate() {
            let sign = if c < 0.0 { '-' } else { '+' };
            let a = c.abs();
            match (i, sign) {
                (0, '-') => f.write_str("-")?,
                (0, _) => {}
                (_, s) => write!(f, " {s} ")?,
            }
            let factors: Vec<String> = m
                .0
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(j, &e)| {
                    if e == 1 {
                        self.variables[j].clone()
                    } else {
                        format!("{}^{}", self.variables[j], e)
                    }
                })
                .collect();
            if factors.is_empty() {
                write!(f, "{a}")?;
            } else if a == 1.0 {
                f.write_str(&factors.join("*"))?;
            } else {
                write!(f, "{a}*{}", factors.join("*"))?;
            }
        }
        Ok(())
    }
}

/// `["x1", ..., "xn"]`.
pub fn default_variables(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}
