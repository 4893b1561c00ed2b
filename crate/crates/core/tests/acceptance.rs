//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use qrc1::arith::{shadow_env, shadow_eval, solovay_star, y_var, ShadowStructure};
use qrc1::calculus::{Rule, Witness};
use qrc1::corpus::{Corpus, CorpusBounds};
use qrc1::countermodel::countermodel_for;
use qrc1::semantics::{check_adequate, enumerate_models, Assignment, Evaluator};
use qrc1::syntax::closure;
use qrc1::{
    check_derivation, decide, parse_formula, prove, DecideOptions, Derivation, Formula, KripkeModel, Sequent,
    Signature, Term, Verdict,
};

const SEED: u64 = 20_240_601;
const PROVE_BUDGET: usize = 12;

const GOLDEN_LIMIT: Duration = Duration::from_secs(60);
const REFUTATION_LIMIT: Duration = Duration::from_secs(60);
const TRUTH_LEMMA_PAIRS: usize = 100;
const TRUTH_LEMMA_ATTEMPTS: usize = 2_000;
const TRUTH_LEMMA_LIMIT: Duration = Duration::from_secs(600);
const AGREEMENT_SEQUENTS: usize = 200;
const AGREEMENT_LIMIT: Duration = Duration::from_secs(900);
const SOUNDNESS_MODELS: usize = 1_000;
const RANDOM_FORMULAS: usize = 500;

fn sig() -> Signature {
    Signature::new()
        .with_relation("S", 1)
        .with_relation("R", 2)
        .with_constant("c")
        .with_constant("d")
}

fn f(text: &str) -> Formula {
    parse_formula(text, &sig()).unwrap_or_else(|e| panic!("{text}: {e}"))
}

fn seq(l: &str, r: &str) -> Sequent {
    Sequent::new(f(l), f(r))
}

fn no_certificate() -> DecideOptions {
    DecideOptions {
        certificate_budget: None,
        ..DecideOptions::default()
    }
}

type Outcome = Result<String, String>;

fn within(start: Instant, limit: Duration, what: &str) -> Result<(), String> {
    let spent = start.elapsed();
    if spent > limit {
        Err(format!("{what} took {spent:.1?}, limit {limit:?}"))
    } else {
        Ok(())
    }
}

struct Golden {
    tag: &'static str,
    conclusion: (&'static str, &'static str),
    premises: Vec<(&'static str, &'static str)>,
    witness: Option<Witness>,
    rule: Rule,
}

fn golden(rule: Rule, l: &'static str, r: &'static str) -> Golden {
    Golden {
        tag: rule.tag(),
        conclusion: (l, r),
        premises: Vec::new(),
        witness: None,
        rule,
    }
}

impl Golden {
    fn from(mut self, l: &'static str, r: &'static str) -> Self {
        self.premises.push((l, r));
        self
    }

    fn witness(mut self, w: Witness) -> Self {
        self.witness = Some(w);
        self
    }
}

fn golden_corpus() -> Vec<Golden> {
    let c = || Term::constant("c");
    let d = || Term::constant("d");
    vec![
        golden(Rule::Top, "S(c)", "T"),
        golden(Rule::Refl, "S(c)", "S(c)"),
        golden(Rule::AndElimLeft, "(S(c) & S(d))", "S(c)"),
        golden(Rule::AndElimRight, "(S(c) & S(d))", "S(d)"),
        golden(Rule::AndIntro, "S(c)", "(S(c) & T)")
            .from("S(c)", "S(c)")
            .from("S(c)", "T"),
        golden(Rule::Cut, "((S(c) & S(d)) & S(c))", "S(d)")
            .from("((S(c) & S(d)) & S(c))", "(S(c) & S(d))")
            .from("(S(c) & S(d))", "S(d)"),
        golden(Rule::DiamondMono, "<>(S(c) & S(d))", "<>S(c)").from("(S(c) & S(d))", "S(c)"),
        golden(Rule::Transitivity, "<><>S(c)", "<>S(c)"),
        golden(Rule::ForallRight, "S(c)", "A x . S(c)").from("S(c)", "S(c)"),
        golden(Rule::ForallLeft, "A x . S(x)", "S(c)")
            .from("S(c)", "S(c)")
            .witness(Witness::term(c())),
        golden(Rule::TermInstantiation, "(S(c) & S(d))", "S(c)")
            .from("(S(x) & S(d))", "S(x)")
            .witness(Witness::substitution("x", c())),
        golden(Rule::ConstantGeneralization, "(S(x) & S(d))", "S(x)")
            .from("(S(c) & S(d))", "S(c)")
            .witness(Witness::substitution("x", c())),
        golden(Rule::DiamondForall, "<>A x . S(x)", "A x . <>S(x)"),
        golden(Rule::ForallSwap, "A x . A y . S(x)", "A y . A x . S(x)"),
        golden(Rule::ForallElim, "A x . S(x)", "S(d)").witness(Witness::term(d())),
        golden(Rule::ForallRename, "A x . S(x)", "A y . S(y)"),
        golden(Rule::RhsInstantiation, "A x . S(x)", "S(d)")
            .from("A x . S(x)", "S(x)")
            .witness(Witness::substitution("x", d())),
        golden(Rule::ConstantForallRight, "A y . S(y)", "A x . S(x)")
            .from("A y . S(y)", "S(c)")
            .witness(Witness::term(c())),
    ]
}

/// Every primitive rule and derived schema: the one-step node (premises
/// proved) is accepted, decide says derivable, and prove finds a checked
/// certificate for the conclusion.
fn criterion_golden(certs: &mut Vec<Derivation>) -> Outcome {
    let start = Instant::now();
    let s = sig();
    let corpus = golden_corpus();
    let primitive = corpus.iter().filter(|g| !g.rule.is_derived()).count();
    if primitive != 12 || corpus.len() != 18 {
        return Err(format!(
            "corpus has {primitive} primitive of {} instances",
            corpus.len()
        ));
    }
    for g in &corpus {
        let mut premises = Vec::new();
        for &(l, r) in &g.premises {
            let p =
                prove(&seq(l, r), PROVE_BUDGET).ok_or_else(|| format!("{}: no proof of premise {l} |- {r}", g.tag))?;
            premises.push(p);
        }
        let (l, r) = g.conclusion;
        let mut node = Derivation::infer(g.rule, f(l), f(r), premises);
        node.witness = g.witness.clone();
        check_derivation(&node).map_err(|e| format!("{}: node rejected: {e}", g.tag))?;
        let conclusion = seq(l, r);
        let verdict = decide(&conclusion, &s, &no_certificate()).map_err(|e| format!("{}: {e}", g.tag))?;
        if !verdict.is_derivable() {
            return Err(format!("{}: decide refutes {conclusion}", g.tag));
        }
        let cert = prove(&conclusion, PROVE_BUDGET).ok_or_else(|| format!("{}: prove found nothing", g.tag))?;
        check_derivation(&cert).map_err(|e| format!("{}: certificate rejected: {e}", g.tag))?;
        certs.push(node);
        certs.push(cert);
    }
    within(start, GOLDEN_LIMIT, "golden corpus")?;
    Ok(format!(
        "18 instances (12 primitive, 6 derived) in {:.1?}",
        start.elapsed()
    ))
}

fn refute(s: &Sequent) -> Result<(KripkeModel, usize, Assignment), String> {
    match decide(s, &sig(), &DecideOptions::default()).map_err(|e| e.to_string())? {
        Verdict::Refuted {
            model,
            world,
            assignment,
        } => Ok((model, world, assignment)),
        Verdict::Derivable { .. } => Err(format!("{s} reported derivable")),
    }
}

/// Both non-derivable sequents are refuted and the refutation re-verifies.
fn criterion_refutations() -> Outcome {
    let mut notes = Vec::new();
    for (l, r) in [("T", "<>T"), ("A x . <>S(x)", "<>A x . S(x)")] {
        let start = Instant::now();
        let s = seq(l, r);
        let (model, w, g) = refute(&s)?;
        let ev = Evaluator::new(&model).map_err(|e| e.to_string())?;
        let lhs = ev.satisfies(w, &g, &s.lhs).map_err(|e| e.to_string())?;
        let rhs = ev.satisfies(w, &g, &s.rhs).map_err(|e| e.to_string())?;
        if !lhs || rhs {
            return Err(format!("{s}: payload does not refute (lhs {lhs}, rhs {rhs})"));
        }
        within(start, REFUTATION_LIMIT, &s.to_string())?;
        notes.push(format!("{s}: {} worlds", model.world_count()));
    }
    Ok(notes.join("; "))
}

struct Frames {
    checked: usize,
    attempts: usize,
    shape_failures: Vec<String>,
}

/// Countermodels from random refuted sequents pass the truth lemma at every
/// world for every closure formula. Shape findings are kept for the next
/// criterion.
fn criterion_truth_lemma(frames: &mut Frames) -> Outcome {
    let start = Instant::now();
    let s = sig();
    let mut corpus = Corpus::new(SEED, CorpusBounds::default());
    let mut checks = 0;
    while frames.checked < TRUTH_LEMMA_PAIRS && frames.attempts < TRUTH_LEMMA_ATTEMPTS {
        frames.attempts += 1;
        let sequent = corpus.sequent();
        let verdict = decide(&sequent, &s, &no_certificate()).map_err(|e| format!("{sequent}: {e}"))?;
        if verdict.is_derivable() {
            continue;
        }
        let (frame, g) = countermodel_for(&sequent, &s).map_err(|e| format!("{sequent}: {e}"))?;
        let report = frame.truth_lemma_check().map_err(|e| format!("{sequent}: {e}"))?;
        if !report.passed() {
            return Err(format!("{sequent}: {:?}", report.mismatches[0]));
        }
        checks += report.checks;
        let ev = Evaluator::new(&frame.model).map_err(|e| e.to_string())?;
        let root_refutes = ev.satisfies(0, &g, &sequent.lhs).map_err(|e| e.to_string())?
            && !ev.satisfies(0, &g, &sequent.rhs).map_err(|e| e.to_string())?;
        if !root_refutes {
            return Err(format!("{sequent}: root does not refute the sequent"));
        }
        let m = &frame.model;
        if !check_adequate(m).is_adequate() {
            frames.shape_failures.push(format!("{sequent}: not adequate"));
        }
        if !m.is_constant_domain() || !m.is_irreflexive() || !m.is_transitive() {
            frames.shape_failures.push(format!("{sequent}: frame shape"));
        }
        for &(a, b) in &frame.tree_edges {
            if frame.pairs[b].positive_mdepth() >= frame.pairs[a].positive_mdepth() {
                frames
                    .shape_failures
                    .push(format!("{sequent}: mdepth does not drop on {a}->{b}"));
            }
        }
        frames.checked += 1;
    }
    if frames.checked < TRUTH_LEMMA_PAIRS {
        return Err(format!(
            "only {} refuted sequents in {} attempts",
            frames.checked, frames.attempts
        ));
    }
    within(start, TRUTH_LEMMA_LIMIT, "truth lemma suite")?;
    Ok(format!(
        "{} root pairs, {checks} checks, {:.1?}",
        frames.checked,
        start.elapsed()
    ))
}

fn criterion_shapes(frames: &Frames) -> Outcome {
    if frames.checked == 0 {
        return Err("no models were built".into());
    }
    match frames.shape_failures.first() {
        Some(first) => Err(format!("{} failures, first: {first}", frames.shape_failures.len())),
        None => Ok(format!(
            "{} models adequate, constant-domain, irreflexive, transitive, mdepth-decreasing",
            frames.checked
        )),
    }
}

/// The prover never certifies what the decider refutes.
fn criterion_agreement(certs: &mut Vec<Derivation>) -> Outcome {
    let start = Instant::now();
    let s = sig();
    let mut corpus = Corpus::new(SEED ^ 0x5eed, CorpusBounds::default());
    let (mut proved, mut refuted, mut unproved_derivable) = (0, 0, 0);
    for _ in 0..AGREEMENT_SEQUENTS {
        let sequent = corpus.sequent();
        let verdict = decide(&sequent, &s, &no_certificate()).map_err(|e| format!("{sequent}: {e}"))?;
        let cert = prove(&sequent, PROVE_BUDGET);
        match (&cert, verdict.is_derivable()) {
            (Some(_), false) => return Err(format!("{sequent}: certified but refuted")),
            (None, true) => unproved_derivable += 1,
            (None, false) => refuted += 1,
            (Some(_), true) => {}
        }
        if let Some(cert) = cert {
            check_derivation(&cert).map_err(|e| format!("{sequent}: certificate rejected: {e}"))?;
            proved += 1;
            certs.push(cert);
        }
    }
    within(start, AGREEMENT_LIMIT, "agreement")?;
    Ok(format!(
        "{AGREEMENT_SEQUENTS} sequents: {proved} certified, {refuted} refuted, {unproved_derivable} derivable without certificate, {:.1?}",
        start.elapsed()
    ))
}

fn nodes<'a>(d: &'a Derivation, out: &mut Vec<&'a Sequent>) {
    out.push(&d.conclusion);
    for p in &d.premises {
        nodes(p, out);
    }
}

fn assignments(vars: &[String], size: usize) -> Vec<Assignment> {
    let mut out = vec![Assignment::new()];
    for x in vars {
        out = out
            .into_iter()
            .flat_map(|g| (0..size).map(move |a| g.clone().with(x.clone(), a)))
            .collect();
    }
    out
}

/// Every sequent occurring in a certificate preserves truth in sampled
/// models, under every interpretation of constants the model lacks.
fn criterion_soundness(certs: &[Derivation]) -> Outcome {
    let start = Instant::now();
    let domain = vec!["c".to_string(), "d".to_string()];
    let space = enumerate_models(&sig(), &domain, 2, 2).map_err(|e| e.to_string())?;
    let models = space.sample_evenly(SOUNDNESS_MODELS);
    if models.len() < SOUNDNESS_MODELS {
        return Err(format!("only {} models available", models.len()));
    }
    let mut seen = BTreeSet::new();
    let mut sequents = Vec::new();
    for cert in certs {
        let mut here = Vec::new();
        nodes(cert, &mut here);
        for s in here {
            if seen.insert(s.canonical()) {
                sequents.push(s.clone());
            }
        }
    }
    let mut checks = 0usize;
    for model in &models {
        for s in &sequents {
            let mut extra: BTreeSet<String> = s.lhs.constants();
            extra.extend(s.rhs.constants());
            extra.retain(|c| !model.constants[0].contains_key(c));
            let extra: Vec<String> = extra.into_iter().collect();
            let mut vars: BTreeSet<String> = s.lhs.free_vars();
            vars.extend(s.rhs.free_vars());
            let vars: Vec<String> = vars.into_iter().collect();
            for interp in assignments(&extra, domain.len()) {
                let mut m = model.clone();
                for consts in &mut m.constants {
                    consts.extend(interp.values.iter().map(|(c, &a)| (c.clone(), a)));
                }
                let ev = Evaluator::new(&m).map_err(|e| e.to_string())?;
                for w in 0..m.world_count() {
                    for g in assignments(&vars, domain.len()) {
                        checks += 1;
                        let l = ev.satisfies(w, &g, &s.lhs).map_err(|e| e.to_string())?;
                        if l && !ev.satisfies(w, &g, &s.rhs).map_err(|e| e.to_string())? {
                            return Err(format!("{s} fails at world {w} of\n{}", m.to_json()));
                        }
                    }
                }
            }
        }
    }
    Ok(format!(
        "{} certificates, {} distinct sequents, {} models, {checks} checks, {:.1?}",
        certs.len(),
        sequents.len(),
        models.len(),
        start.elapsed()
    ))
}

fn subformulas(phi: &Formula, out: &mut BTreeSet<Formula>) {
    out.insert(phi.clone());
    match phi {
        Formula::And(a, b) => {
            subformulas(a, out);
            subformulas(b, out);
        }
        Formula::Diamond(a) | Formula::Forall(_, a) => subformulas(a, out),
        Formula::Top | Formula::Rel(..) => {}
    }
}

/// The Solovay-style interpretation over the extended countermodel agrees
/// with Kripke truth, and the extra root sees a world separating the sides.
fn criterion_shadow() -> Outcome {
    let s = seq("A x . <>S(x)", "<>A x . S(x)");
    let (frame, _) = countermodel_for(&s, &sig()).map_err(|e| e.to_string())?;
    let shadow = ShadowStructure::new(&frame.model).map_err(|e| e.to_string())?;
    let ev = Evaluator::new(&frame.model).map_err(|e| e.to_string())?;
    let mut formulas = BTreeSet::new();
    for chi in &frame.closure {
        subformulas(chi, &mut formulas);
    }
    let size = frame.domain.len();
    let mut checks = 0;
    for phi in &formulas {
        let star = solovay_star(phi, &shadow).map_err(|e| e.to_string())?;
        let vars: Vec<String> = phi.free_vars().into_iter().collect();
        for i in 1..shadow.world_count() {
            for g in assignments(&vars, size) {
                let kripke = ev.satisfies(i - 1, &g, phi).map_err(|e| e.to_string())?;
                let arith = shadow_eval(&shadow, i, &shadow_env(&g, phi), &star).map_err(|e| e.to_string())?;
                checks += 1;
                if kripke != arith {
                    return Err(format!("{phi} at shadow world {i}: kripke {kripke}, shadow {arith}"));
                }
            }
        }
    }
    let lhs = solovay_star(&s.lhs, &shadow).map_err(|e| e.to_string())?;
    let rhs = solovay_star(&s.rhs, &shadow).map_err(|e| e.to_string())?;
    let env = BTreeMap::new();
    let mut separating = None;
    for &j in shadow.successors(0) {
        let l = shadow_eval(&shadow, j, &env, &lhs).map_err(|e| e.to_string())?;
        let r = shadow_eval(&shadow, j, &env, &rhs).map_err(|e| e.to_string())?;
        if l && !r {
            separating = Some(j);
            break;
        }
    }
    let j = separating.ok_or("no successor of world 0 separates the sides")?;
    Ok(format!(
        "{} formulas, {} worlds, {checks} agreements; world 0 sees separating world {j}",
        formulas.len(),
        shadow.world_count()
    ))
}

/// Shadow truth depends on variable values only modulo the domain size,
/// and `x_k` is free in a formula exactly when `y_k` is free in its image.
fn criterion_mod_and_free_vars() -> Outcome {
    let domain = vec!["c".to_string(), "d".to_string()];
    let space = enumerate_models(&sig(), &domain, 1, 2).map_err(|e| e.to_string())?;
    let structures: Vec<ShadowStructure> = space
        .sample_evenly(200)
        .into_iter()
        .filter(|m| {
            ["S", "R"]
                .iter()
                .all(|r| m.relations.iter().any(|j| j.get(*r).is_some_and(|t| !t.is_empty())))
        })
        .map(|m| ShadowStructure::new(&m).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    if structures.is_empty() {
        return Err("no structure interprets every relation".into());
    }
    let bounds = CorpusBounds {
        free_vars: vec!["x0".into(), "x1".into()],
        bound_vars: vec!["x1".into(), "x2".into()],
        ..CorpusBounds::default()
    };
    let mut corpus = Corpus::new(SEED ^ 0x10d, bounds);
    let mut evaluations = 0;
    for n in 0..RANDOM_FORMULAS {
        let phi = corpus.formula();
        let shadow = &structures[n % structures.len()];
        let star = solovay_star(&phi, shadow).map_err(|e| e.to_string())?;
        let image_free = star.free_vars();
        for x in ["x0", "x1", "x2"] {
            if phi.has_free(x) != image_free.contains(&y_var(x)) {
                return Err(format!("{phi}: free-variable mismatch on {x}"));
            }
        }
        let m = shadow.m();
        let vars: Vec<String> = image_free.into_iter().collect();
        let mut envs = vec![BTreeMap::new()];
        for v in &vars {
            envs = envs
                .into_iter()
                .flat_map(|e: BTreeMap<String, u64>| {
                    (0..3 * m).map(move |a| {
                        let mut e = e.clone();
                        e.insert(v.clone(), a);
                        e
                    })
                })
                .collect();
        }
        for env in &envs {
            let reduced: BTreeMap<String, u64> = env.iter().map(|(k, &a)| (k.clone(), a % m)).collect();
            for i in 0..shadow.world_count() {
                let a = shadow_eval(shadow, i, env, &star).map_err(|e| e.to_string())?;
                let b = shadow_eval(shadow, i, &reduced, &star).map_err(|e| e.to_string())?;
                evaluations += 1;
                if a != b {
                    return Err(format!("{phi} at {i}: {env:?} vs {reduced:?}"));
                }
            }
        }
    }
    Ok(format!(
        "{RANDOM_FORMULAS} formulas over {} structures, {evaluations} evaluation pairs",
        structures.len()
    ))
}

/// `cdepth(P) <= cdepth(Cl_C(P)) <= cdepth(P) + udepth(P)` for random sets
/// and constant pools, recomputing the measures directly.
fn criterion_depth_bounds() -> Outcome {
    let pool = ["c", "d", "e0", "e1", "e2"];
    let mut corpus = Corpus::new(SEED ^ 0xcd, CorpusBounds::default());
    let mut rng_state = SEED;
    let mut next = move || {
        rng_state = rng_state
            .wrapping_mul(6_364_136_223_846_793_005)
            .wrapping_add(1_442_695_040_888_963_407);
        (rng_state >> 33) as usize
    };
    for _ in 0..RANDOM_FORMULAS {
        let phi: Vec<Formula> = (0..1 + next() % 3).map(|_| corpus.closed_formula()).collect();
        let constants: BTreeSet<String> = pool.iter().filter(|_| next() % 2 == 0).map(|c| c.to_string()).collect();
        let cl = closure(&phi, &constants).map_err(|e| e.to_string())?;
        let count = |f: &Formula| {
            let mut seen = BTreeSet::new();
            collect_constants(f, &mut seen);
            seen.len()
        };
        let c_phi = phi.iter().map(count).max().unwrap_or(0);
        let u_phi = phi.iter().map(quantifier_depth).max().unwrap_or(0);
        let c_cl = cl.iter().map(count).max().unwrap_or(0);
        if c_cl < c_phi || c_cl > c_phi + u_phi {
            let shown: Vec<String> = phi.iter().map(ToString::to_string).collect();
            return Err(format!(
                "{shown:?} with {constants:?}: {c_phi} <= {c_cl} <= {c_phi} + {u_phi} fails"
            ));
        }
    }
    Ok(format!("{RANDOM_FORMULAS} (set, constants) pairs"))
}

fn collect_constants(phi: &Formula, out: &mut BTreeSet<String>) {
    match phi {
        Formula::Top => {}
        Formula::Rel(_, args) => out.extend(args.iter().filter(|t| !t.is_var()).map(|t| t.name().to_string())),
        Formula::And(a, b) => {
            collect_constants(a, out);
            collect_constants(b, out);
        }
        Formula::Diamond(a) | Formula::Forall(_, a) => collect_constants(a, out),
    }
}

fn quantifier_depth(phi: &Formula) -> usize {
    match phi {
        Formula::Top | Formula::Rel(..) => 0,
        Formula::And(a, b) => quantifier_depth(a).max(quantifier_depth(b)),
        Formula::Diamond(a) => quantifier_depth(a),
        Formula::Forall(_, a) => 1 + quantifier_depth(a),
    }
}

fn main() {
    let mut certs = Vec::new();
    let mut frames = Frames {
        checked: 0,
        attempts: 0,
        shape_failures: Vec::new(),
    };
    let mut failed = 0;
    let mut report = |n: usize, name: &str, outcome: Outcome| match outcome {
        Ok(detail) => println!("criterion {n} [{name}]: PASS ({detail})"),
        Err(detail) => {
            failed += 1;
            println!("criterion {n} [{name}]: FAIL ({detail})");
        }
    };
    report(1, "calculus golden corpus", criterion_golden(&mut certs));
    report(2, "non-derivability corpus", criterion_refutations());
    report(3, "truth lemma", criterion_truth_lemma(&mut frames));
    report(4, "model shape", criterion_shapes(&frames));
    report(5, "prover/decider agreement", criterion_agreement(&mut certs));
    report(6, "soundness fuzz", criterion_soundness(&certs));
    report(7, "shadow truth lemma", criterion_shadow());
    report(8, "mod invariance and free variables", criterion_mod_and_free_vars());
    report(9, "depth bounds", criterion_depth_bounds());
    if failed > 0 {
        println!("{failed} of 9 criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}
