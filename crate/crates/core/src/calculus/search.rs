//! Backward proof search with iterative deepening.
//!
//! Goals are decomposed on the right first (`T`, conjunction, universal),
//! then on the left (conjunction, universal instantiation, diamonds). A goal
//! whose left side has smaller modal depth than its right side is never
//! derivable and is cut off immediately.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::{check_derivation, Derivation, Rule, Sequent, Witness};
use crate::syntax::{fresh_constant, fresh_var, Formula, Term};

pub const DEFAULT_DEPTH_BUDGET: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(Derivation),
    /// The left side has smaller modal depth than the right side, so the
    /// sequent has no derivation at all.
    Pruned,
    /// No derivation within the budget. Says nothing about derivability.
    Exhausted,
}

impl SearchOutcome {
    pub fn derivation(self) -> Option<Derivation> {
        match self {
            SearchOutcome::Found(d) => Some(d),
            _ => None,
        }
    }
}

/// Searches for a derivation of `s` using only primitive rules. Any returned
/// derivation has been accepted by [`check_derivation`].
pub fn prove(s: &Sequent, depth_budget: usize) -> Option<Derivation> {
    search(s, depth_budget).derivation()
}

pub fn search(s: &Sequent, depth_budget: usize) -> SearchOutcome {
    if s.lhs.mdepth() < s.rhs.mdepth() {
        return SearchOutcome::Pruned;
    }
    let mut prover = Prover::default();
    for budget in 1..=depth_budget {
        if let Some((d, _)) = prover.goal(&s.lhs, &s.rhs, budget) {
            if let Err(e) = check_derivation(&d) {
                debug_assert!(false, "prover built an invalid derivation: {e}");
                return SearchOutcome::Exhausted;
            }
            return SearchOutcome::Found(d);
        }
    }
    SearchOutcome::Exhausted
}

enum Memo {
    /// Derivation found, with the budget it needed.
    Proved(Derivation, usize),
    /// No derivation within this budget.
    Failed(usize),
}

#[derive(Default)]
struct Prover {
    memo: HashMap<Sequent, Memo>,
    active: HashSet<Sequent>,
}

impl Prover {
    /// Returns a derivation of `lhs |- rhs` whose conclusion is literally
    /// that sequent, together with the budget it used.
    fn goal(&mut self, lhs: &Formula, rhs: &Formula, budget: usize) -> Option<(Derivation, usize)> {
        if budget == 0 || lhs.mdepth() < rhs.mdepth() {
            return None;
        }
        let key = Sequent::new(lhs.canonical(), rhs.canonical());
        match self.memo.get(&key) {
            Some(Memo::Proved(d, used)) if *used <= budget => {
                return Some((d.clone().retarget(lhs, rhs), *used));
            }
            Some(Memo::Failed(b)) if *b >= budget => return None,
            _ => {}
        }
        if !self.active.insert(key.clone()) {
            return None;
        }
        let found = self.expand(lhs, rhs, budget);
        self.active.remove(&key);
        let entry = match &found {
            Some((d, used)) => Memo::Proved(d.clone(), *used),
            None => Memo::Failed(budget),
        };
        self.memo.insert(key, entry);
        found
    }

    fn expand(&mut self, lhs: &Formula, rhs: &Formula, budget: usize) -> Option<(Derivation, usize)> {
        let below = budget - 1;
        if *rhs == Formula::Top {
            return Some((Derivation::axiom(Rule::Top, lhs.clone(), Formula::Top), 1));
        }
        if lhs.alpha_eq(rhs) {
            return Some((Derivation::axiom(Rule::Refl, lhs.clone(), rhs.clone()), 1));
        }
        match rhs {
            Formula::And(a, b) => {
                let (da, ua) = self.goal(lhs, a, below)?;
                let (db, ub) = self.goal(lhs, b, below)?;
                let d = Derivation::infer(Rule::AndIntro, lhs.clone(), rhs.clone(), vec![da, db]);
                return Some((d, 1 + ua.max(ub)));
            }
            Formula::Forall(x, body) => return self.forall_right(lhs, rhs, x, body, below),
            _ => {}
        }
        match lhs {
            Formula::And(a, b) => {
                for (part, rule) in [(a, Rule::AndElimLeft), (b, Rule::AndElimRight)] {
                    if let Some((d, used)) = self.goal(part, rhs, below) {
                        let elim = Derivation::axiom(rule, lhs.clone(), (**part).clone());
                        let cut = Derivation::infer(Rule::Cut, lhs.clone(), rhs.clone(), vec![elim, d]);
                        return Some((cut, 1 + used));
                    }
                }
                None
            }
            Formula::Forall(x, body) => self.forall_left(lhs, rhs, x, body, below),
            Formula::Diamond(a) => {
                let Formula::Diamond(b) = rhs else {
                    return None;
                };
                if let Some((d, used)) = self.goal(a, b, below) {
                    let mono = Derivation::infer(Rule::DiamondMono, lhs.clone(), rhs.clone(), vec![d]);
                    return Some((mono, 1 + used));
                }
                // <>a |- <><>b |- <>b
                let (d, used) = self.goal(a, rhs, below)?;
                let twice = Formula::diamond(rhs.clone());
                let mono = Derivation::infer(Rule::DiamondMono, lhs.clone(), twice.clone(), vec![d]);
                let trans = Derivation::axiom(Rule::Transitivity, twice, rhs.clone());
                let cut = Derivation::infer(Rule::Cut, lhs.clone(), rhs.clone(), vec![mono, trans]);
                Some((cut, 1 + used))
            }
            Formula::Top | Formula::Rel(..) => None,
        }
    }

    fn forall_right(
        &mut self,
        lhs: &Formula,
        rhs: &Formula,
        x: &str,
        body: &Formula,
        below: usize,
    ) -> Option<(Derivation, usize)> {
        if !lhs.has_free(x) {
            let (d, used) = self.goal(lhs, body, below)?;
            let gen = Derivation::infer(Rule::ForallRight, lhs.clone(), rhs.clone(), vec![d]);
            return Some((gen, 1 + used));
        }
        // Rename the bound variable away from the left side first.
        let mut used_names = lhs.all_vars();
        used_names.extend(rhs.all_vars());
        let z = fresh_var(&used_names);
        let renamed_body = body.replace_free(x, &Term::Var(z.clone()));
        let renamed = Formula::forall(z, renamed_body.clone());
        let (d, used) = self.goal(lhs, &renamed_body, below)?;
        let gen = Derivation::infer(Rule::ForallRight, lhs.clone(), renamed.clone(), vec![d]);
        Some((gen.retarget(lhs, rhs), 1 + used))
    }

    fn forall_left(
        &mut self,
        lhs: &Formula,
        rhs: &Formula,
        x: &str,
        body: &Formula,
        below: usize,
    ) -> Option<(Derivation, usize)> {
        let mut candidates: Vec<Term> = lhs.free_terms().union(&rhs.free_terms()).cloned().collect();
        let mut constants: BTreeSet<String> = lhs.constants();
        constants.extend(rhs.constants());
        candidates.push(Term::Const(fresh_constant(&constants)));
        for t in candidates {
            let (quantified, inner) = if body.free_for(x, &t) {
                (lhs.clone(), body.clone())
            } else {
                let apart = body.rename_bound_apart(&BTreeSet::from([t.name().to_string(), x.to_string()]));
                (Formula::forall(x, apart.clone()), apart)
            };
            let instance = inner.replace_free(x, &t);
            if let Some((d, used)) = self.goal(&instance, rhs, below) {
                let inst = Derivation::infer(Rule::ForallLeft, quantified, rhs.clone(), vec![d])
                    .with_witness(Witness::term(t));
                return Some((inst.retarget(lhs, rhs), 1 + used));
            }
        }
        None
    }
}
