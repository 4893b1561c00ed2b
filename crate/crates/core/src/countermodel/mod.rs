//! Term models built from maximal consistent witnessed pairs.
//!
//! A pair `<p+, p->` of closed formulas is saturated inside `Cl_C(Phi)`:
//! the positive side becomes everything in the closure derivable from the
//! (single) positive formula, the negative side the rest. Each positive
//! diamond of a world spawns a successor pair, and the resulting tree,
//! transitively closed over the constant domain `C`, satisfies exactly the
//! positive closure formulas at every world.
//!
//! Derivability questions are answered by the semantic decider.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculus::Sequent;
use crate::semantics::{
    close_sequent, decide, pad_domain, Assignment, DecideOptions, EntailmentOracle, Evaluator, KripkeModel,
    SemanticsError, Verdict,
};
use crate::syntax::{closure, Depths, Formula, FormulaSet, Signature, SyntaxError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CountermodelError {
    #[error("formula {0} is not closed")]
    Open(String),
    #[error("pair is inconsistent: its positive side derives {0}")]
    Inconsistent(String),
    #[error("the positive side must be a single formula, found {0}")]
    NotSingleton(usize),
    #[error("{0} is not in the closure")]
    NotInClosure(String),
    #[error("{have} constants are too few: need more than {bound}")]
    DomainTooSmall { have: usize, bound: usize },
    #[error("{0} is not a diamond formula of the positive side")]
    NotPositiveDiamond(String),
    #[error("the sequent is derivable, so it has no countermodel")]
    Derivable,
    #[error("no witness constant for {0}")]
    MissingWitness(String),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

/// `<p+, p->`, both sides canonical closed formulas.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Pair {
    pub positive: FormulaSet,
    pub negative: FormulaSet,
    /// For each negative universal, the constant whose instance is negative.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub witnesses: BTreeMap<Formula, String>,
}

impl Pair {
    pub fn new<P, N>(positive: P, negative: N) -> Self
    where
        P: IntoIterator<Item = Formula>,
        N: IntoIterator<Item = Formula>,
    {
        Pair {
            positive: positive.into_iter().map(|f| f.canonical()).collect(),
            negative: negative.into_iter().map(|f| f.canonical()).collect(),
            witnesses: BTreeMap::new(),
        }
    }

    pub fn formulas(&self) -> impl Iterator<Item = &Formula> {
        self.positive.iter().chain(self.negative.iter())
    }

    pub fn positive_conjunction(&self) -> Formula {
        Formula::conjunction(self.positive.iter().cloned())
    }

    pub fn contains_positive(&self, phi: &Formula) -> bool {
        self.positive.contains(&phi.canonical())
    }

    pub fn contains_negative(&self, phi: &Formula) -> bool {
        self.negative.contains(&phi.canonical())
    }

    pub fn positive_mdepth(&self) -> usize {
        self.positive.iter().map(Formula::mdepth).max().unwrap_or(0)
    }
}

/// `p R^ q`: every negative diamond of `p` has its body and itself negative
/// in `q`, and some positive diamond of `p` is negative in `q`.
pub fn hat_r(p: &Pair, q: &Pair) -> bool {
    let carried = p.negative.iter().all(|f| match f {
        Formula::Diamond(body) => q.contains_negative(body) && q.negative.contains(f),
        _ => true,
    });
    carried
        && p.positive
            .iter()
            .any(|f| matches!(f, Formula::Diamond(_)) && q.negative.contains(f))
}

/// Shared state for one construction: `Phi`, the constant set `C`, the
/// closure `Cl_C(Phi)` and a memoized derivability oracle.
#[derive(Debug)]
pub struct Saturator {
    phi: FormulaSet,
    constants: Vec<String>,
    closure: FormulaSet,
    oracle: EntailmentOracle,
}

impl Saturator {
    /// Requires every member of `phi` closed and `|C| > 2 cdepth + 2 udepth`.
    pub fn new<'a, I>(phi: I, constants: &BTreeSet<String>) -> Result<Self, CountermodelError>
    where
        I: IntoIterator<Item = &'a Formula>,
    {
        let phi: FormulaSet = phi.into_iter().map(|f| f.canonical()).collect();
        if let Some(open) = phi.iter().find(|f| !f.is_closed()) {
            return Err(CountermodelError::Open(open.to_string()));
        }
        let d = Depths::of_set(&phi);
        let bound = 2 * d.cdepth + 2 * d.udepth;
        if constants.len() <= bound {
            return Err(CountermodelError::DomainTooSmall {
                have: constants.len(),
                bound,
            });
        }
        let closure = closure(&phi, constants)?;
        // Closure members have at most cdepth + udepth constants, so queries
        // between them need this many elements to be decided exactly.
        let oracle_domain = pad_domain(constants.clone(), 2 * (d.cdepth + d.udepth) + 2 * d.udepth + 1);
        Ok(Saturator {
            phi,
            constants: constants.iter().cloned().collect(),
            closure,
            oracle: EntailmentOracle::new(oracle_domain),
        })
    }

    pub fn phi(&self) -> &FormulaSet {
        &self.phi
    }

    pub fn constants(&self) -> &[String] {
        &self.constants
    }

    pub fn closure(&self) -> &FormulaSet {
        &self.closure
    }

    pub fn oracle_queries(&self) -> usize {
        self.oracle.queries()
    }

    pub fn derivable(&mut self, lhs: &Formula, rhs: &Formula) -> bool {
        self.oracle.derivable(lhs, rhs)
    }

    /// Extends `p` (a singleton positive side inside the closure) to the
    /// maximal pair `q+ = {chi in Cl : p+ |- chi}` and records a witness for
    /// every negative universal.
    pub fn lindenbaum(&mut self, p: &Pair) -> Result<Pair, CountermodelError> {
        if p.positive.len() != 1 {
            return Err(CountermodelError::NotSingleton(p.positive.len()));
        }
        for f in p.formulas() {
            if !f.is_closed() {
                return Err(CountermodelError::Open(f.to_string()));
            }
            if !self.closure.contains(f) {
                return Err(CountermodelError::NotInClosure(f.to_string()));
            }
        }
        let top = p.positive.iter().next().expect("singleton").clone();
        for delta in &p.negative {
            if self.oracle.derivable(&top, delta) {
                return Err(CountermodelError::Inconsistent(delta.to_string()));
            }
        }
        let mut q = Pair::default();
        let members: Vec<Formula> = self.closure.iter().cloned().collect();
        for chi in members {
            if self.oracle.derivable(&top, &chi) {
                q.positive.insert(chi);
            } else {
                q.negative.insert(chi);
            }
        }
        let avoid = top.constants();
        for f in &q.negative {
            let Formula::Forall(x, body) = f else {
                continue;
            };
            let mentioned = f.constants();
            let d = self
                .constants
                .iter()
                .find(|c| !avoid.contains(*c) && !mentioned.contains(*c))
                .ok_or_else(|| CountermodelError::MissingWitness(f.to_string()))?;
            if !q.negative.contains(&body.instantiate(x, d).canonical()) {
                return Err(CountermodelError::MissingWitness(f.to_string()));
            }
            q.witnesses.insert(f.clone(), d.clone());
        }
        Ok(q)
    }

    /// A saturated `q` with `p R^ q` and `phi` positive in `q`, for a
    /// positive `<>phi` of the saturated pair `p`.
    pub fn pair_successor(&mut self, p: &Pair, diamond: &Formula) -> Result<Pair, CountermodelError> {
        let diamond = diamond.canonical();
        let Formula::Diamond(phi) = &diamond else {
            return Err(CountermodelError::NotPositiveDiamond(diamond.to_string()));
        };
        if !p.positive.contains(&diamond) {
            return Err(CountermodelError::NotPositiveDiamond(diamond.to_string()));
        }
        let mut negative = vec![diamond.clone()];
        for f in &p.negative {
            if let Formula::Diamond(delta) = f {
                negative.push((**delta).clone());
                negative.push(f.clone());
            }
        }
        let r = Pair::new([(**phi).clone()], negative);
        self.lindenbaum(&r)
    }

    /// Checks that `p` partitions the closure, is consistent and fully
    /// witnessed; returns the first failure.
    pub fn check_mcw(&mut self, p: &Pair) -> Result<(), String> {
        if !p.positive.is_disjoint(&p.negative) {
            return Err("positive and negative sides overlap".into());
        }
        let all: FormulaSet = p.formulas().cloned().collect();
        if all != self.closure {
            return Err("pair does not partition the closure".into());
        }
        let conj = p.positive_conjunction();
        for delta in &p.negative {
            let s = Sequent::new(conj.clone(), delta.clone());
            let opts = DecideOptions {
                certificate_budget: None,
                ..Default::default()
            };
            match decide(&s, &Signature::new(), &opts) {
                Ok(Verdict::Refuted { .. }) => {}
                Ok(Verdict::Derivable { .. }) => return Err(format!("positive side derives {delta}")),
                Err(e) => return Err(e.to_string()),
            }
        }
        for f in &p.negative {
            if let Formula::Forall(x, body) = f {
                let witnessed = self
                    .constants
                    .iter()
                    .any(|c| p.negative.contains(&body.instantiate(x, c).canonical()));
                if !witnessed {
                    return Err(format!("{f} has no negative instance"));
                }
            }
        }
        Ok(())
    }
}

/// The term model together with the pairs labelling its worlds and the
/// stage at which each world was added.
#[derive(Debug, Clone)]
pub struct PairFrame {
    pub pairs: Vec<Pair>,
    /// Stage of each world; world 0 (the root) is stage 0.
    pub stage_of: Vec<usize>,
    /// Parent-to-child edges before transitive closure.
    pub tree_edges: Vec<(usize, usize)>,
    pub domain: Vec<String>,
    pub phi: FormulaSet,
    pub closure: FormulaSet,
    pub model: KripkeModel,
}

impl PairFrame {
    pub fn stage_count(&self) -> usize {
        self.stage_of.iter().max().map_or(1, |m| m + 1)
    }

    /// Worlds and tree edges of stage frame `i`.
    pub fn stage(&self, i: usize) -> (Vec<usize>, Vec<(usize, usize)>) {
        let worlds: Vec<usize> = (0..self.pairs.len()).filter(|&w| self.stage_of[w] <= i).collect();
        let edges = self
            .tree_edges
            .iter()
            .copied()
            .filter(|&(_, b)| self.stage_of[b] <= i)
            .collect();
        (worlds, edges)
    }
}

/// Builds the term model of a consistent pair of closed formulas whose
/// positive side is a single formula. `C` holds the constants of `sig` and
/// of the pair, padded with fresh ones to `2 cdepth + 2 udepth + 1`.
pub fn build_model(p: &Pair, sig: &Signature) -> Result<PairFrame, CountermodelError> {
    if p.positive.len() != 1 {
        return Err(CountermodelError::NotSingleton(p.positive.len()));
    }
    let phi: FormulaSet = p.formulas().cloned().collect();
    let mut used: BTreeSet<String> = sig.constants.clone();
    for f in &phi {
        used.extend(f.constants());
    }
    let d = Depths::of_set(&phi);
    let constants: BTreeSet<String> = pad_domain(used, 2 * d.cdepth + 2 * d.udepth + 1).into_iter().collect();
    let mut sat = Saturator::new(&phi, &constants)?;
    let root = sat.lindenbaum(p)?;
    let mut pairs = vec![root];
    let mut stage_of = vec![0];
    let mut tree_edges = Vec::new();
    let mut leaves = vec![0];
    let mut stage = 0;
    while !leaves.is_empty() {
        stage += 1;
        let mut next = Vec::new();
        for w in leaves {
            let diamonds: Vec<Formula> = pairs[w]
                .positive
                .iter()
                .filter(|f| matches!(f, Formula::Diamond(_)))
                .cloned()
                .collect();
            for dia in diamonds {
                let q = sat.pair_successor(&pairs[w], &dia)?;
                let v = pairs.len();
                pairs.push(q);
                stage_of.push(stage);
                tree_edges.push((w, v));
                next.push(v);
            }
        }
        leaves = next;
    }
    let domain = sat.constants().to_vec();
    let worlds = (0..pairs.len()).map(|i| format!("w{i}")).collect();
    let mut model = KripkeModel::constant_domain(worlds, domain.clone());
    model.edges.extend(tree_edges.iter().copied());
    model.transitive_closure();
    for (w, pair) in pairs.iter().enumerate() {
        for f in &pair.positive {
            if let Formula::Rel(s, args) = f {
                let tuple = args
                    .iter()
                    .map(|t| domain.iter().position(|c| c == t.name()).expect("closed atom over C"))
                    .collect();
                model.add_tuple(w, s, tuple);
            }
        }
    }
    Ok(PairFrame {
        pairs,
        stage_of,
        tree_edges,
        domain,
        phi: sat.phi().clone(),
        closure: sat.closure().clone(),
        model,
    })
}

/// A countermodel for `s` by the pair construction: free variables are
/// replaced by fresh constants and the root pair is `<{lhs}, {rhs}>`. The
/// assignment sends each free variable to the element naming it.
pub fn countermodel_for(s: &Sequent, sig: &Signature) -> Result<(PairFrame, Assignment), CountermodelError> {
    let closed = close_sequent(s, sig);
    let p = Pair::new([closed.lhs.clone()], [closed.rhs.clone()]);
    let mut full_sig = sig.clone();
    full_sig.constants.extend(closed.naming.values().cloned());
    let frame = match build_model(&p, &full_sig) {
        Err(CountermodelError::Inconsistent(_)) => return Err(CountermodelError::Derivable),
        other => other?,
    };
    let mut g = Assignment::new();
    for (x, c) in &closed.naming {
        let a = frame.domain.iter().position(|d| d == c).expect("naming constant in C");
        g.values.insert(x.clone(), a);
    }
    Ok((frame, g))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TruthMismatch {
    pub world: String,
    pub formula: String,
    pub in_positive: bool,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TruthLemmaReport {
    pub worlds: usize,
    pub formulas: usize,
    pub checks: usize,
    pub mismatches: Vec<TruthMismatch>,
}

impl TruthLemmaReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Compares satisfaction with membership in the positive side for every
/// world and every closure formula.
pub fn truth_lemma_check(
    model: &KripkeModel,
    pairs: &[Pair],
    closure: &FormulaSet,
) -> Result<TruthLemmaReport, SemanticsError> {
    let ev = Evaluator::new(model)?;
    let g = Assignment::new();
    let mut mismatches = Vec::new();
    let mut checks = 0;
    for (w, pair) in pairs.iter().enumerate() {
        for chi in closure {
            checks += 1;
            let satisfied = ev.satisfies(w, &g, chi)?;
            let in_positive = pair.positive.contains(chi);
            if satisfied != in_positive {
                mismatches.push(TruthMismatch {
                    world: model.worlds[w].clone(),
                    formula: chi.to_string(),
                    in_positive,
                    satisfied,
                });
            }
        }
    }
    Ok(TruthLemmaReport {
        worlds: pairs.len(),
        formulas: closure.len(),
        checks,
        mismatches,
    })
}

impl PairFrame {
    pub fn truth_lemma_check(&self) -> Result<TruthLemmaReport, SemanticsError> {
        truth_lemma_check(&self.model, &self.pairs, &self.closure)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::check_adequate;
    use crate::syntax::parse_formula;

    fn sig() -> Signature {
        Signature::new()
            .with_relation("S", 1)
            .with_relation("R", 2)
            .with_constant("c")
    }

    fn f(s: &str) -> Formula {
        parse_formula(s, &sig()).unwrap()
    }

    fn consts(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn lindenbaum_saturates_by_derivability() {
        let phi = [f("<>T"), f("<><>T")];
        let mut sat = Saturator::new(&phi, &consts(&["c"])).unwrap();
        let q = sat.lindenbaum(&Pair::new([f("<>T")], [f("<><>T")])).unwrap();
        assert_eq!(q, Pair::new([f("T"), f("<>T")], [f("<><>T")]));
    }

    #[test]
    fn lindenbaum_of_top() {
        let mut sat = Saturator::new(&[Formula::Top], &consts(&["c"])).unwrap();
        let q = sat.lindenbaum(&Pair::new([Formula::Top], [])).unwrap();
        assert_eq!(q, Pair::new([Formula::Top], []));
    }

    #[test]
    fn negative_universal_gets_negative_instance() {
        let phi = [f("S(c)"), f("A x . S(x)")];
        let constants = pad_domain(consts(&["c"]), 5).into_iter().collect();
        let mut sat = Saturator::new(&phi, &constants).unwrap();
        let q = sat.lindenbaum(&Pair::new([f("S(c)")], [f("A x . S(x)")])).unwrap();
        let d = &q.witnesses[&f("A x . S(x)").canonical()];
        assert_ne!(d, "c");
        assert!(q.contains_negative(&Formula::rel("S", vec![crate::syntax::Term::constant(d.clone())])));
        assert!(sat.check_mcw(&q).is_ok());
    }

    #[test]
    fn preconditions_enforced() {
        let phi = [f("A x . S(x)")];
        assert!(matches!(
            Saturator::new(&phi, &consts(&["c", "c1"])),
            Err(CountermodelError::DomainTooSmall { .. })
        ));
        let mut sat = Saturator::new(&[f("S(c)")], &consts(&["c", "c1", "c2"])).unwrap();
        assert!(matches!(
            sat.lindenbaum(&Pair::new([f("S(c)")], [f("S(c)")])),
            Err(CountermodelError::Inconsistent(_))
        ));
        assert!(matches!(
            sat.lindenbaum(&Pair::new([f("S(c)"), Formula::Top], [])),
            Err(CountermodelError::NotSingleton(2))
        ));
        assert!(matches!(
            sat.lindenbaum(&Pair::new([f("<>S(c)")], [])),
            Err(CountermodelError::NotInClosure(_))
        ));
    }

    #[test]
    fn successor_pairs_follow_hat_r() {
        let phi = [f("<>T"), f("<><>T")];
        let mut sat = Saturator::new(&phi, &consts(&["c"])).unwrap();
        let p = sat.lindenbaum(&Pair::new([f("<>T")], [f("<><>T")])).unwrap();
        let q = sat.pair_successor(&p, &f("<>T")).unwrap();
        assert!(q.contains_positive(&Formula::Top));
        assert!(q.contains_negative(&f("<>T")));
        assert_eq!(q.positive_mdepth(), 0);
        assert!(hat_r(&p, &q));
        assert!(!hat_r(&q, &q));
        assert!(sat.pair_successor(&p, &f("<><>T")).is_err());
    }

    #[test]
    fn top_without_diamond_gives_single_world() {
        let frame = build_model(&Pair::new([Formula::Top], [f("<>T")]), &Signature::new()).unwrap();
        assert_eq!(frame.model.world_count(), 1);
        assert!(frame.model.edges.is_empty());
        let report = frame.truth_lemma_check().unwrap();
        assert!(report.passed());
        assert_eq!(report.checks, 2);
    }

    #[test]
    fn forall_diamond_countermodel() {
        let p = Pair::new([f("A x . <>S(x)")], [f("<>A x . S(x)")]);
        let frame = build_model(&p, &sig()).unwrap();
        let m = &frame.model;
        assert!(check_adequate(m).is_adequate());
        assert!(m.is_irreflexive() && m.is_transitive() && m.is_constant_domain());
        let ev = Evaluator::new(m).unwrap();
        assert!(ev.satisfies(0, &Assignment::new(), &f("A x . <>S(x)")).unwrap());
        assert!(!ev.satisfies(0, &Assignment::new(), &f("<>A x . S(x)")).unwrap());
        assert!(frame.truth_lemma_check().unwrap().passed());
        for &(a, b) in &frame.tree_edges {
            assert!(frame.pairs[b].positive_mdepth() < frame.pairs[a].positive_mdepth());
        }
    }

    #[test]
    fn flipped_tuple_breaks_truth_lemma() {
        let p = Pair::new([f("A x . <>S(x)")], [f("<>A x . S(x)")]);
        let mut frame = build_model(&p, &sig()).unwrap();
        let w = 1;
        let tuple = vec![0];
        let set = frame.model.relations[w].entry("S".into()).or_default();
        if !set.remove(&tuple) {
            set.insert(tuple);
        }
        assert!(!frame.truth_lemma_check().unwrap().passed());
    }

    #[test]
    fn derivable_sequent_has_no_countermodel() {
        let s = Sequent::new(f("<><>S(c)"), f("<>S(c)"));
        assert!(matches!(
            countermodel_for(&s, &sig()),
            Err(CountermodelError::Derivable)
        ));
        let open = Sequent::new(f("S(x)"), f("<>S(x)"));
        let (frame, g) = countermodel_for(&open, &sig()).unwrap();
        assert_eq!(frame.domain[g.get("x")], "c_x");
    }
}
