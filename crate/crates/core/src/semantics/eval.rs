use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{check_adequate, KripkeModel, SemanticsError};
use crate::syntax::{Formula, Term};

/// A `w`-assignment: element indices of `M_w` for variables. Variables not
/// mentioned take element 0.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub values: BTreeMap<String, usize>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, var: impl Into<String>, element: usize) -> Self {
        self.values.insert(var.into(), element);
        self
    }

    pub fn get(&self, var: &str) -> usize {
        self.values.get(var).copied().unwrap_or(0)
    }
}

/// Satisfaction over a model that has been checked to be adequate once.
#[derive(Debug, Clone)]
pub struct Evaluator<'m> {
    model: &'m KripkeModel,
    succ: Vec<Vec<usize>>,
    same_domain: bool,
}

impl<'m> Evaluator<'m> {
    pub fn new(model: &'m KripkeModel) -> Result<Self, SemanticsError> {
        model.validate()?;
        let report = check_adequate(model);
        if let Some(v) = report.witnesses.first() {
            return Err(SemanticsError::NotAdequate(v.to_string()));
        }
        Ok(Self::trusted(model))
    }

    /// Skips the checks for models adequate by construction.
    pub(crate) fn trusted(model: &'m KripkeModel) -> Self {
        let succ = (0..model.world_count())
            .map(|w| model.successors(w).collect())
            .collect();
        Evaluator {
            model,
            succ,
            same_domain: model.is_constant_domain(),
        }
    }

    pub fn model(&self) -> &KripkeModel {
        self.model
    }

    pub fn satisfies(&self, world: usize, g: &Assignment, phi: &Formula) -> Result<bool, SemanticsError> {
        if world >= self.model.world_count() {
            return Err(SemanticsError::UnknownWorld(world.to_string()));
        }
        let size = self.model.domains[world].len();
        let mut env = BTreeMap::new();
        for x in phi.free_vars() {
            let a = g.get(&x);
            if a >= size {
                return Err(SemanticsError::AssignmentOutOfRange {
                    var: x,
                    world: self.model.worlds[world].clone(),
                });
            }
            env.insert(x, a);
        }
        self.eval(world, &env, phi)
    }

    fn term(&self, w: usize, env: &BTreeMap<String, usize>, t: &Term) -> Result<usize, SemanticsError> {
        match t {
            Term::Var(x) => Ok(env.get(x).copied().unwrap_or(0)),
            Term::Const(c) => self.model.constants[w]
                .get(c)
                .copied()
                .ok_or_else(|| SemanticsError::UnknownConstant {
                    constant: c.clone(),
                    world: self.model.worlds[w].clone(),
                }),
        }
    }

    fn eval(&self, w: usize, env: &BTreeMap<String, usize>, phi: &Formula) -> Result<bool, SemanticsError> {
        match phi {
            Formula::Top => Ok(true),
            Formula::Rel(s, args) => {
                let tuple = args
                    .iter()
                    .map(|t| self.term(w, env, t))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(self.model.holds(w, s, &tuple))
            }
            Formula::And(a, b) => Ok(self.eval(w, env, a)? && self.eval(w, env, b)?),
            Formula::Diamond(a) => {
                for &v in &self.succ[w] {
                    let moved = if self.same_domain {
                        env.clone()
                    } else {
                        env.iter()
                            .map(|(x, &d)| {
                                let e = self.model.eta_apply(w, v, d).expect("eta is total on adequate models");
                                (x.clone(), e)
                            })
                            .collect()
                    };
                    if self.eval(v, &moved, a)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Formula::Forall(x, a) => {
                let mut inner = env.clone();
                for d in 0..self.model.domains[w].len() {
                    inner.insert(x.clone(), d);
                    if !self.eval(w, &inner, a)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }
}

/// `M, w |=^g phi`. The model must be adequate.
pub fn satisfies(m: &KripkeModel, world: usize, g: &Assignment, phi: &Formula) -> Result<bool, SemanticsError> {
    Evaluator::new(m)?.satisfies(world, g, phi)
}
