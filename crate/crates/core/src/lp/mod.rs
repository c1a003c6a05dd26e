//! Dense linear programs and a deterministic two-phase primal simplex.
//!
//! Every optimization in the crate (admission planning, resource sizing,
//! headroom planning, coefficient calibration and the inner problems of the
//! exact oracle) is expressed as a [`LinearProgram`] and solved here.

mod simplex;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

pub use simplex::{PivotRule, SolverOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("constraint {row} references undeclared variable #{var}")]
    UnknownVariable { row: usize, var: usize },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("variable `{0}` has lower bound above its upper bound")]
    EmptyBounds(String),
    #[error("assignment is missing variable `{0}`")]
    MissingVariable(String),
    #[error("assignment has {got} values, problem has {expected} variables")]
    AssignmentLength { expected: usize, got: usize },
    #[error("simplex did not terminate within {0} pivots")]
    IterationLimit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable<S> {
    pub name: String,
    pub lower: S,
    pub upper: Option<S>,
    pub objective: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<S> {
    pub terms: Vec<(VarId, S)>,
    pub relation: Relation,
    pub rhs: S,
}

impl<S: Scalar> Constraint<S> {
    fn lhs(&self, values: &[S]) -> S {
        self.terms.iter().fold(S::zero(), |acc, (v, a)| {
            acc + a.clone() * values[v.0].clone()
        })
    }
}

/// A linear program over scalar `S` with named, bounded variables.
#[derive(Debug, Clone)]
pub struct LinearProgram<S> {
    sense: Sense,
    variables: Vec<Variable<S>>,
    index: HashMap<String, VarId>,
    constraints: Vec<Constraint<S>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution<S> {
    pub values: Vec<S>,
    pub objective: S,
}

impl<S: Scalar> Solution<S> {
    pub fn value(&self, var: VarId) -> &S {
        &self.values[var.0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<S> {
    Optimal(Solution<S>),
    Infeasible,
    Unbounded,
}

impl<S> LpOutcome<S> {
    pub fn optimal(self) -> Option<Solution<S>> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        matches!(self, LpOutcome::Optimal(_))
    }
}

impl<S: Scalar> LinearProgram<S> {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            variables: Vec::new(),
            index: HashMap::new(),
            constraints: Vec::new(),
        }
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn variables(&self) -> &[Variable<S>] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint<S>] {
        &self.constraints
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn var(&self, name: &str) -> Option<VarId> {
        self.index.get(name).copied()
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: S,
        upper: Option<S>,
        objective: S,
    ) -> Result<VarId, LpError> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(LpError::DuplicateName(name));
        }
        let id = VarId(self.variables.len());
        self.index.insert(name.clone(), id);
        self.variables.push(Variable {
            name,
            lower,
            upper,
            objective,
        });
        Ok(id)
    }

    /// Nonnegative variable without an upper bound.
    pub fn add_nonneg(&mut self, name: impl Into<String>, objective: S) -> Result<VarId, LpError> {
        self.add_var(name, S::zero(), None, objective)
    }

    pub fn set_objective(&mut self, var: VarId, coefficient: S) {
        self.variables[var.0].objective = coefficient;
    }

    pub fn add_constraint(
        &mut self,
        terms: Vec<(VarId, S)>,
        relation: Relation,
        rhs: S,
    ) -> Result<usize, LpError> {
        let row = self.constraints.len();
        if let Some((v, _)) = terms.iter().find(|(v, _)| v.0 >= self.variables.len()) {
            return Err(LpError::UnknownVariable { row, var: v.0 });
        }
        self.constraints.push(Constraint {
            terms,
            relation,
            rhs,
        });
        Ok(row)
    }

    /// Check the structural invariants: finite data, nonempty bounds.
    pub fn validate(&self) -> Result<(), LpError> {
        for v in &self.variables {
            if !v.lower.is_finite_value() || !v.objective.is_finite_value() {
                return Err(LpError::NonFinite(format!("variable `{}`", v.name)));
            }
            if let Some(u) = &v.upper {
                if !u.is_finite_value() {
                    return Err(LpError::NonFinite(format!("upper bound of `{}`", v.name)));
                }
                if *u < v.lower {
                    return Err(LpError::EmptyBounds(v.name.clone()));
                }
            }
        }
        for (row, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite_value() || c.terms.iter().any(|(_, a)| !a.is_finite_value()) {
                return Err(LpError::NonFinite(format!("constraint {row}")));
            }
            if let Some((v, _)) = c.terms.iter().find(|(v, _)| v.0 >= self.variables.len()) {
                return Err(LpError::UnknownVariable { row, var: v.0 });
            }
        }
        Ok(())
    }

    pub fn solve(&self) -> Result<LpOutcome<S>, LpError> {
        self.solve_with(&SolverOptions::default())
    }

    pub fn solve_with(&self, options: &SolverOptions) -> Result<LpOutcome<S>, LpError> {
        self.validate()?;
        simplex::solve(self, options)
    }

    pub fn objective_value(&self, values: &[S]) -> S {
        self.variables
            .iter()
            .zip(values)
            .fold(S::zero(), |acc, (v, x)| {
                acc + v.objective.clone() * x.clone()
            })
    }

    /// True iff every bound and constraint holds within `tolerance`.
    pub fn check_values(&self, values: &[S], tolerance: &S) -> Result<bool, LpError> {
        if values.len() != self.variables.len() {
            return Err(LpError::AssignmentLength {
                expected: self.variables.len(),
                got: values.len(),
            });
        }
        for (v, x) in self.variables.iter().zip(values) {
            if x.clone() < v.lower.clone() - tolerance.clone() {
                return Ok(false);
            }
            if let Some(u) = &v.upper {
                if x.clone() > u.clone() + tolerance.clone() {
                    return Ok(false);
                }
            }
        }
        Ok(self
            .constraints
            .iter()
            .all(|c| row_holds(c.lhs(values), c.relation, &c.rhs, tolerance)))
    }

    /// Name-keyed variant of [`check_values`](Self::check_values).
    pub fn check_solution(
        &self,
        assignment: &BTreeMap<String, S>,
        tolerance: &S,
    ) -> Result<bool, LpError> {
        let values = self
            .variables
            .iter()
            .map(|v| {
                assignment
                    .get(&v.name)
                    .cloned()
                    .ok_or_else(|| LpError::MissingVariable(v.name.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.check_values(&values, tolerance)
    }

    pub fn assignment(&self, values: &[S]) -> BTreeMap<String, S> {
        self.variables
            .iter()
            .zip(values)
            .map(|(v, x)| (v.name.clone(), x.clone()))
            .collect()
    }

    /// Human-readable dump in an LP-file-like layout. Not meant to be parsed
    /// back.
    pub fn to_lp_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{}",
            match self.sense {
                Sense::Maximize => "Maximize",
                Sense::Minimize => "Minimize",
            }
        );
        let obj: Vec<_> = self
            .variables
            .iter()
            .filter(|v| !v.objective.is_zero())
            .map(|v| format!("{} {}", v.objective, v.name))
            .collect();
        let _ = writeln!(
            out,
            " obj: {}",
            if obj.is_empty() {
                "0".into()
            } else {
                obj.join(" + ")
            }
        );
        let _ = writeln!(out, "Subject To");
        for (row, c) in self.constraints.iter().enumerate() {
            let lhs: Vec<_> = c
                .terms
                .iter()
                .map(|(v, a)| format!("{} {}", a, self.variables[v.0].name))
                .collect();
            let _ = writeln!(
                out,
                " c{}: {} {} {}",
                row + 1,
                if lhs.is_empty() {
                    "0".into()
                } else {
                    lhs.join(" + ")
                },
                c.relation.symbol(),
                c.rhs
            );
        }
        let _ = writeln!(out, "Bounds");
        for v in &self.variables {
            match &v.upper {
                Some(u) => {
                    let _ = writeln!(out, " {} <= {} <= {}", v.lower, v.name, u);
                }
                None => {
                    let _ = writeln!(out, " {} >= {}", v.name, v.lower);
                }
            }
        }
        out.push_str("End\n");
        out
    }
}

fn row_holds<S: Scalar>(lhs: S, relation: Relation, rhs: &S, tol: &S) -> bool {
    match relation {
        Relation::Le => lhs <= rhs.clone() + tol.clone(),
        Relation::Ge => lhs >= rhs.clone() - tol.clone(),
        Relation::Eq => (lhs - rhs.clone()).abs() <= tol.clone(),
    }
}
