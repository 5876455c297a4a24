use super::{parse_polynomial, Polynomial};
use crate::error::{Error, Result};

/// `{x : g(x) >= 0 for g in inequalities, h(x) = 0 for h in equalities}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SemialgebraicSet {
    variables: Vec<String>,
    inequalities: Vec<Polynomial>,
    equalities: Vec<Polynomial>,
}

impl SemialgebraicSet {
    pub fn new(
        variables: Vec<String>,
        inequalities: Vec<Polynomial>,
        equalities: Vec<Polynomial>,
    ) -> Result<Self> {
        if variables.is_empty() {
            return Err(Error::InvalidArgument("a set needs at least one variable".into()));
        }
        for (i, v) in variables.iter().enumerate() {
            if variables[..i].contains(v) {
                return Err(Error::NameCollision(v.clone()));
            }
        }
        for g in inequalities.iter().chain(&equalities) {
            if g.variables() != variables.as_slice() {
                return Err(Error::VariableMismatch(format!(
                    "generator over {:?}, set over {:?}",
                    g.variables(),
                    variables
                )));
            }
        }
        Ok(SemialgebraicSet {
            variables,
            inequalities,
            equalities,
        })
    }

    /// Parses every generator string over `variables`.
    pub fn parse<S: AsRef<str>>(
        variables: &[&str],
        inequalities: &[S],
        equalities: &[S],
    ) -> Result<Self> {
        let vars: Vec<String> = variables.iter().map(|s| s.to_string()).collect();
        let ineq = inequalities
            .iter()
            .map(|s| parse_polynomial(s.as_ref(), &vars))
            .collect::<Result<Vec<_>>>()?;
        let eq = equalities
            .iter()
            .map(|s| parse_polynomial(s.as_ref(), &vars))
            .collect::<Result<Vec<_>>>()?;
        Self::new(vars, ineq, eq)
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn dim(&self) -> usize {
        self.variables.len()
    }

    pub fn inequalities(&self) -> &[Polynomial] {
        &self.inequalities
    }

    pub fn equalities(&self) -> &[Polynomial] {
        &self.equalities
    }

    pub fn with_inequality(&self, g: Polynomial) -> Result<Self> {
        let mut ineq = self.inequalities.clone();
        ineq.push(g);
        Self::new(self.variables.clone(), ineq, self.equalities.clone())
    }

    /// Membership test with a tolerance relative to the size of each term.
    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(self.contains_unchecked(x, tol))
    }

    pub(crate) fn contains_unchecked(&self, x: &[f64], tol: f64) -> bool {
        self.inequalities
            .iter()
            .all(|g| g.eval_unchecked(x) >= -tol * (1.0 + g.abs_scale(x)))
            && self
                .equalities
                .iter()
                .all(|h| h.eval_unchecked(x).abs() <= tol * (1.0 + h.abs_scale(x)))
    }
}
