//! Seeded random formulas and sequents. The same seed and bounds always
//! give the same sequence.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calculus::Sequent;
use crate::syntax::{Formula, Signature, Term};

/// Shape limits for generated formulas.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusBounds {
    pub signature: Signature,
    /// Variables that may occur free.
    pub free_vars: Vec<String>,
    /// Names used for bound variables.
    pub bound_vars: Vec<String>,
    pub max_mdepth: usize,
    pub max_udepth: usize,
    /// Upper bound on the number of connectives and atoms.
    pub max_size: usize,
}

impl Default for CorpusBounds {
    /// `S/1`, `R/2`, constants `c` and `d`, modal depth 2, one quantifier.
    fn default() -> Self {
        CorpusBounds {
            signature: Signature::new()
                .with_relation("S", 1)
                .with_relation("R", 2)
                .with_constant("c")
                .with_constant("d"),
            free_vars: vec!["x0".into()],
            bound_vars: vec!["x0".into(), "x1".into()],
            max_mdepth: 2,
            max_udepth: 1,
            max_size: 6,
        }
    }
}

pub struct Corpus {
    rng: ChaCha8Rng,
    bounds: CorpusBounds,
    relations: Vec<(String, usize)>,
    constants: Vec<String>,
}

impl Corpus {
    pub fn new(seed: u64, bounds: CorpusBounds) -> Self {
        let relations = bounds
            .signature
            .relations
            .iter()
            .map(|(s, &n)| (s.clone(), n))
            .collect();
        let constants = bounds.signature.constants.iter().cloned().collect();
        Corpus {
            rng: ChaCha8Rng::seed_from_u64(seed),
            bounds,
            relations,
            constants,
        }
    }

    pub fn bounds(&self) -> &CorpusBounds {
        &self.bounds
    }

    /// A formula whose free variables come from `free_vars`.
    pub fn formula(&mut self) -> Formula {
        let size = self.rng.gen_range(1..=self.bounds.max_size.max(1));
        let mut scope = Vec::new();
        self.gen(self.bounds.max_mdepth, self.bounds.max_udepth, size, &mut scope, true)
    }

    /// A formula without free variables.
    pub fn closed_formula(&mut self) -> Formula {
        let size = self.rng.gen_range(1..=self.bounds.max_size.max(1));
        let mut scope = Vec::new();
        self.gen(self.bounds.max_mdepth, self.bounds.max_udepth, size, &mut scope, false)
    }

    /// A sequent of closed formulas. About a third of the right-hand sides
    /// are weakenings of the left, so that derivable sequents are common.
    pub fn sequent(&mut self) -> Sequent {
        let lhs = self.closed_formula();
        let rhs = if self.rng.gen_ratio(1, 3) {
            self.weaken(&lhs)
        } else {
            self.closed_formula()
        };
        Sequent::new(lhs, rhs)
    }

    fn weaken(&mut self, phi: &Formula) -> Formula {
        match phi {
            Formula::And(a, b) => {
                let pick = if self.rng.gen_bool(0.5) { a } else { b };
                self.weaken(pick)
            }
            Formula::Diamond(a) => match a.as_ref() {
                Formula::Diamond(_) => (**a).clone(),
                inner => Formula::diamond(self.weaken(inner)),
            },
            Formula::Forall(x, a) if !self.constants.is_empty() && self.rng.gen_bool(0.5) => {
                let c = self.constants.choose(&mut self.rng).expect("nonempty").clone();
                a.instantiate(x, &c)
            }
            other => other.clone(),
        }
    }

    fn atom(&mut self, scope: &[String], open: bool) -> Formula {
        if self.relations.is_empty() || self.rng.gen_ratio(1, 6) {
            return Formula::Top;
        }
        let (sym, arity) = self.relations.choose(&mut self.rng).expect("nonempty").clone();
        let mut pool: Vec<Term> = scope.iter().map(Term::var).collect();
        if open {
            pool.extend(self.bounds.free_vars.iter().map(Term::var));
        }
        pool.extend(self.constants.iter().map(Term::constant));
        if pool.is_empty() {
            return Formula::Top;
        }
        let args = (0..arity)
            .map(|_| pool.choose(&mut self.rng).expect("nonempty").clone())
            .collect();
        Formula::rel(sym, args)
    }

    fn gen(&mut self, md: usize, ud: usize, size: usize, scope: &mut Vec<String>, open: bool) -> Formula {
        if size <= 1 {
            return self.atom(scope, open);
        }
        let mut choices = vec![0u8];
        if md > 0 {
            choices.push(1);
        }
        if ud > 0 && !self.bounds.bound_vars.is_empty() {
            choices.push(2);
        }
        match *choices.choose(&mut self.rng).expect("nonempty") {
            1 => Formula::diamond(self.gen(md - 1, ud, size - 1, scope, open)),
            2 => {
                let x = self.bounds.bound_vars.choose(&mut self.rng).expect("nonempty").clone();
                scope.push(x.clone());
                let body = self.gen(md, ud - 1, size - 1, scope, open);
                scope.pop();
                Formula::forall(x, body)
            }
            _ => {
                let left = self.rng.gen_range(1..size);
                let a = self.gen(md, ud, left, scope, open);
                let b = self.gen(md, ud, size - left, scope, open);
                Formula::and(a, b)
            }
        }
    }
}
