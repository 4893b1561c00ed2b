//! Deciding sequents semantically.
//!
//! Both strategies close the sequent with fresh constants and fix a
//! constant domain `C` large enough that every non-derivable sequent has a
//! countermodel over `C` with identity `eta` and every constant denoting
//! itself.
//!
//! * `Canonical` builds the least tree model of the left side over `C` and
//!   checks the right side at its root. Strictly positive formulas are
//!   preserved along the homomorphism from this model into any model of the
//!   left side over `C`, so the right side holds at the root exactly when it
//!   holds in every such model.
//! * `Enumerate` walks every tree model within the depth and branching
//!   bounds and returns the first countermodel. It is exact too but only
//!   feasible for tiny signatures.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::enumerate::enumerate_models;
use super::eval::{Assignment, Evaluator};
use super::{KripkeModel, SemanticsError};
use crate::calculus::{prove, Derivation, Sequent, DEFAULT_DEPTH_BUDGET};
use crate::syntax::{closure, fresh_constant, Depths, Formula, Signature, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    #[default]
    Canonical,
    Enumerate,
}

#[derive(Debug, Clone)]
pub struct DecideOptions {
    pub strategy: Strategy,
    /// Largest number of models the enumerating strategy may inspect.
    pub model_cap: u64,
    /// Budget for attaching a certificate to a `Derivable` verdict; `None`
    /// skips proof search.
    pub certificate_budget: Option<usize>,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions {
            strategy: Strategy::Canonical,
            model_cap: 10_000_000,
            certificate_budget: Some(DEFAULT_DEPTH_BUDGET),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Derivable {
        certificate: Option<Derivation>,
    },
    /// The left side holds and the right side fails at `world` under
    /// `assignment`, which sends each free variable of the sequent to the
    /// element naming it.
    Refuted {
        model: KripkeModel,
        world: usize,
        assignment: Assignment,
    },
}

impl Verdict {
    pub fn is_derivable(&self) -> bool {
        matches!(self, Verdict::Derivable { .. })
    }
}

/// A closed version of a sequent and the constant domain used to decide it.
#[derive(Debug, Clone)]
pub struct ClosedSequent {
    pub lhs: Formula,
    pub rhs: Formula,
    /// Free variable to the fresh constant replacing it.
    pub naming: BTreeMap<String, String>,
    pub domain: Vec<String>,
}

/// Closes `s` with fresh constants `c_x` and chooses `C`: the constants of
/// `sig` and of the sequent, padded with fresh `c#k` up to
/// `2 cdepth + 2 udepth + 1`.
pub fn close_sequent(s: &Sequent, sig: &Signature) -> ClosedSequent {
    let mut used: BTreeSet<String> = sig.constants.clone();
    used.extend(s.lhs.constants());
    used.extend(s.rhs.constants());
    let mut naming = BTreeMap::new();
    let free: BTreeSet<String> = s.lhs.free_vars().union(&s.rhs.free_vars()).cloned().collect();
    for x in free {
        let preferred = format!("c_{x}");
        let c = if used.contains(&preferred) {
            fresh_constant(&used)
        } else {
            preferred
        };
        used.insert(c.clone());
        naming.insert(x, c);
    }
    let lhs = s
        .lhs
        .close_with_constants(&naming)
        .expect("every free variable is named");
    let rhs = s
        .rhs
        .close_with_constants(&naming)
        .expect("every free variable is named");
    let d = Depths::of_set([&lhs, &rhs]);
    let domain = pad_domain(used, 2 * d.cdepth + 2 * d.udepth + 1);
    ClosedSequent {
        lhs,
        rhs,
        naming,
        domain,
    }
}

/// `used` extended with fresh constants until it has `size` members.
pub fn pad_domain(mut used: BTreeSet<String>, size: usize) -> Vec<String> {
    while used.len() < size {
        let c = fresh_constant(&used);
        used.insert(c);
    }
    used.into_iter().collect()
}

/// The least model of a closed formula over `domain`: one world per diamond
/// occurrence (after expanding universals into their instances), atoms as
/// stated, transitively closed. World 0 is the root.
pub fn canonical_model(phi: &Formula, domain: &[String]) -> KripkeModel {
    let mut b = TreeBuilder {
        domain,
        labels: vec![BTreeSet::new()],
        seen: vec![BTreeSet::new()],
        children: vec![HashMap::new()],
        edges: Vec::new(),
    };
    b.add(0, phi);
    let worlds = (0..b.labels.len()).map(|i| format!("w{i}")).collect();
    let mut m = KripkeModel::constant_domain(worlds, domain.to_vec());
    m.edges.extend(b.edges);
    for (w, atoms) in b.labels.into_iter().enumerate() {
        for (s, tuple) in atoms {
            m.add_tuple(w, &s, tuple);
        }
    }
    m.transitive_closure();
    m
}

struct TreeBuilder<'a> {
    domain: &'a [String],
    labels: Vec<BTreeSet<(String, Vec<usize>)>>,
    seen: Vec<BTreeSet<Formula>>,
    children: Vec<HashMap<Formula, usize>>,
    edges: Vec<(usize, usize)>,
}

impl TreeBuilder<'_> {
    fn add(&mut self, w: usize, phi: &Formula) {
        if !self.seen[w].insert(phi.canonical()) {
            return;
        }
        match phi {
            Formula::Top => {}
            Formula::Rel(s, args) => {
                let tuple = args
                    .iter()
                    .map(|t| match t {
                        Term::Const(c) => self
                            .domain
                            .iter()
                            .position(|d| d == c)
                            .unwrap_or_else(|| panic!("constant {c} outside the domain")),
                        Term::Var(x) => panic!("free variable {x} in a closed formula"),
                    })
                    .collect();
                self.labels[w].insert((s.clone(), tuple));
            }
            Formula::And(a, b) => {
                self.add(w, a);
                self.add(w, b);
            }
            Formula::Diamond(a) => {
                let key = a.canonical();
                if self.children[w].contains_key(&key) {
                    return;
                }
                let v = self.labels.len();
                self.labels.push(BTreeSet::new());
                self.seen.push(BTreeSet::new());
                self.children.push(HashMap::new());
                self.children[w].insert(key, v);
                self.edges.push((w, v));
                self.add(v, a);
            }
            Formula::Forall(x, a) => {
                for c in self.domain {
                    self.add(w, &a.instantiate(x, c));
                }
            }
        }
    }
}

/// Decides `s` over `sig` (which supplies constants to include in the
/// domain; symbols of `s` need not be declared).
pub fn decide(s: &Sequent, sig: &Signature, opts: &DecideOptions) -> Result<Verdict, SemanticsError> {
    let closed = close_sequent(s, sig);
    let found = match opts.strategy {
        Strategy::Canonical => {
            let model = canonical_model(&closed.lhs, &closed.domain);
            let ev = Evaluator::new(&model)?;
            if ev.satisfies(0, &Assignment::new(), &closed.rhs)? {
                None
            } else {
                Some(model)
            }
        }
        Strategy::Enumerate => enumerate_countermodel(&closed, opts.model_cap)?,
    };
    match found {
        None => {
            let certificate = opts.certificate_budget.and_then(|b| prove(s, b));
            Ok(Verdict::Derivable { certificate })
        }
        Some(model) => {
            let mut assignment = Assignment::new();
            for (x, c) in &closed.naming {
                let a = closed
                    .domain
                    .iter()
                    .position(|d| d == c)
                    .expect("naming constant in domain");
                assignment.values.insert(x.clone(), a);
            }
            let ev = Evaluator::new(&model)?;
            let holds = ev.satisfies(0, &assignment, &s.lhs)?;
            let fails = !ev.satisfies(0, &assignment, &s.rhs)?;
            if !(holds && fails) {
                return Err(SemanticsError::Internal(format!(
                    "countermodel for {s} does not re-verify"
                )));
            }
            Ok(Verdict::Refuted {
                model,
                world: 0,
                assignment,
            })
        }
    }
}

fn enumerate_countermodel(closed: &ClosedSequent, cap: u64) -> Result<Option<KripkeModel>, SemanticsError> {
    let mut sig = Signature::new();
    for phi in [&closed.lhs, &closed.rhs] {
        for (r, n) in phi.relations() {
            sig.relations.insert(r, n);
        }
    }
    sig.constants = closed.domain.iter().cloned().collect();
    let constants: BTreeSet<String> = closed.domain.iter().cloned().collect();
    let cl = closure([&closed.lhs, &closed.rhs], &constants)?;
    let width = cl.iter().filter(|f| matches!(f, Formula::Diamond(_))).count();
    let depth = closed.lhs.mdepth().max(closed.rhs.mdepth());
    let space = enumerate_models(&sig, &closed.domain, depth, width)?;
    let empty = Assignment::new();
    for (seen, model) in space.iter().enumerate() {
        if seen as u64 >= cap {
            return Err(SemanticsError::ResourceCap { explored: seen as u64 });
        }
        let ev = Evaluator::trusted(&model);
        if ev.satisfies(0, &empty, &closed.lhs)? && !ev.satisfies(0, &empty, &closed.rhs)? {
            return Ok(Some(model));
        }
    }
    Ok(None)
}

/// Derivability of closed sequents over a fixed domain, memoizing the
/// canonical model of each left side. The domain must contain every
/// constant of the queried formulas and be at least as large as
/// `2 cdepth + 2 udepth + 1` for each query.
#[derive(Debug)]
pub struct EntailmentOracle {
    domain: Vec<String>,
    models: HashMap<Formula, KripkeModel>,
    answers: HashMap<(Formula, Formula), bool>,
}

impl EntailmentOracle {
    pub fn new(domain: Vec<String>) -> Self {
        EntailmentOracle {
            domain,
            models: HashMap::new(),
            answers: HashMap::new(),
        }
    }

    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    pub fn derivable(&mut self, lhs: &Formula, rhs: &Formula) -> bool {
        let key = (lhs.canonical(), rhs.canonical());
        if let Some(&a) = self.answers.get(&key) {
            return a;
        }
        let domain = &self.domain;
        let model = self
            .models
            .entry(key.0.clone())
            .or_insert_with(|| canonical_model(&key.0, domain));
        let ev = Evaluator::trusted(model);
        let answer = ev
            .satisfies(0, &Assignment::new(), &key.1)
            .expect("closed formula over the domain");
        self.answers.insert(key, answer);
        answer
    }

    pub fn queries(&self) -> usize {
        self.answers.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(l: &str, r: &str) -> Sequent {
        Sequent::new(l.parse().unwrap(), r.parse().unwrap())
    }

    fn verdict(l: &str, r: &str, strategy: Strategy) -> Verdict {
        let s = seq(l, r);
        let sig = Signature::infer([&s.lhs, &s.rhs]).unwrap();
        let opts = DecideOptions {
            strategy,
            certificate_budget: None,
            ..Default::default()
        };
        decide(&s, &sig, &opts).unwrap()
    }

    #[test]
    fn transitivity_is_derivable() {
        assert!(verdict("<><>S(c)", "<>S(c)", Strategy::Canonical).is_derivable());
        assert!(verdict("<><>T", "<>T", Strategy::Enumerate).is_derivable());
        assert!(!verdict("<>S(c)", "S(c)", Strategy::Enumerate).is_derivable());
    }

    #[test]
    fn diamond_not_from_nothing() {
        for strategy in [Strategy::Canonical, Strategy::Enumerate] {
            match verdict("T", "<>T", strategy) {
                Verdict::Refuted { model, world, .. } => {
                    assert_eq!(model.world_count(), 1);
                    assert_eq!(world, 0);
                }
                v => panic!("{v:?}"),
            }
        }
    }

    #[test]
    fn universal_does_not_commute_into_diamond() {
        match verdict("A x . <>S(x)", "<>A x . S(x)", Strategy::Canonical) {
            Verdict::Refuted { model, .. } => {
                assert!(model.world_count() >= 3);
                assert!(model.successors(0).count() >= 2);
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn open_sequents_are_closed_with_fresh_constants() {
        let s = seq("S(x)", "S(y)");
        let closed = close_sequent(&s, &Signature::new());
        assert_eq!(closed.naming["x"], "c_x");
        assert_eq!(closed.naming["y"], "c_y");
        match decide(&s, &Signature::new(), &DecideOptions::default()).unwrap() {
            Verdict::Refuted { assignment, model, .. } => {
                assert_eq!(model.domains[0][assignment.get("x")], "c_x");
            }
            v => panic!("{v:?}"),
        }
        assert!(verdict("S(x)", "S(x)", Strategy::Canonical).is_derivable());
    }

    #[test]
    fn domain_size_follows_depths() {
        let s = seq("A x . R(x, c)", "R(d, c)");
        let closed = close_sequent(&s, &Signature::new());
        // cdepth 2, udepth 1
        assert_eq!(closed.domain.len(), 7);
        assert!(closed.domain.contains(&"c".to_string()));
    }

    #[test]
    fn certificates_attached_when_requested() {
        let s = seq("(S(c) & S(d))", "S(d)");
        match decide(&s, &Signature::new(), &DecideOptions::default()).unwrap() {
            Verdict::Derivable { certificate: Some(d) } => assert_eq!(d.conclusion, s),
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn oracle_matches_decide() {
        let domain = pad_domain(BTreeSet::from(["c".to_string()]), 5);
        let mut oracle = EntailmentOracle::new(domain);
        let f = |s: &str| s.parse::<Formula>().unwrap();
        assert!(oracle.derivable(&f("<>T"), &f("T")));
        assert!(!oracle.derivable(&f("<>T"), &f("<><>T")));
        assert!(oracle.derivable(&f("A x . S(x)"), &f("S(c)")));
        assert_eq!(oracle.queries(), 3);
    }
}
