//! The six derived rules: how each instance unfolds into primitive steps,
//! and recognition of which derived schemas a given sequent instantiates.

use std::collections::BTreeSet;

use super::search::prove;
use super::{check_derivation, CalculusError, Derivation, Rule, Sequent, Witness};
use crate::syntax::{fresh_constant, fresh_var, Formula, Term};

/// Budget for the fallback search when a fixed expansion does not apply.
const FALLBACK_BUDGET: usize = 16;

/// Rewrites a derived-rule node into primitive steps with the same
/// conclusion and the same premises. Returns `None` for primitive nodes and
/// for nodes that do not instantiate their schema.
pub fn expand_derived(node: &Derivation) -> Option<Derivation> {
    let (lhs, rhs) = (node.lhs(), node.rhs());
    let expansion = match node.rule {
        Rule::DiamondForall => diamond_forall(lhs, rhs),
        Rule::ForallSwap => forall_swap(lhs, rhs),
        Rule::ForallElim => forall_elim(lhs, rhs, &node.witness.as_ref()?.term),
        Rule::ForallRename => forall_rename(lhs, rhs),
        Rule::RhsInstantiation => {
            let w = node.witness.clone()?;
            w.var.as_ref()?;
            Some(
                Derivation::infer(Rule::TermInstantiation, lhs.clone(), rhs.clone(), node.premises.clone())
                    .with_witness(w),
            )
        }
        Rule::ConstantForallRight => {
            let Formula::Forall(x, psi) = rhs else {
                return None;
            };
            let c = node.witness.as_ref()?.term.clone();
            let generalized = Derivation::infer(
                Rule::ConstantGeneralization,
                lhs.clone(),
                (**psi).clone(),
                node.premises.clone(),
            )
            .with_witness(Witness::substitution(x.clone(), c));
            Some(Derivation::infer(
                Rule::ForallRight,
                lhs.clone(),
                rhs.clone(),
                vec![generalized],
            ))
        }
        _ => return None,
    };
    match expansion {
        Some(d) if node.rule.premise_count() > 0 || check_derivation(&d).is_ok() => Some(d),
        // The fixed shapes cover every instance up to renaming; fall back to
        // search for the rest.
        _ if node.rule.premise_count() == 0 => prove(&node.conclusion, FALLBACK_BUDGET),
        _ => None,
    }
}

fn refl(a: &Formula, b: &Formula) -> Derivation {
    Derivation::axiom(Rule::Refl, a.clone(), b.clone())
}

/// `A x . phi |- rhs` by one instantiation with `t`, renaming `phi` apart
/// from `t` when needed.
fn instantiate_left(lhs: &Formula, rhs: &Formula, t: &Term, premise_rhs: Option<Derivation>) -> Option<Derivation> {
    let Formula::Forall(x, phi) = lhs else {
        return None;
    };
    let phi = if phi.free_for(x, t) {
        (**phi).clone()
    } else {
        phi.rename_bound_apart(&BTreeSet::from([t.name().to_string()]))
    };
    let quantified = Formula::forall(x.clone(), phi.clone());
    let instance = phi.replace_free(x, t);
    let premise = premise_rhs.unwrap_or_else(|| refl(&instance, rhs));
    let step = Derivation::infer(Rule::ForallLeft, quantified, rhs.clone(), vec![premise])
        .with_witness(Witness::term(t.clone()));
    Some(step.retarget(lhs, rhs))
}

/// `<>A x . phi |- A y . <>chi`: generalize `y`, push the diamond through,
/// instantiate `x` with `y`.
fn diamond_forall(lhs: &Formula, rhs: &Formula) -> Option<Derivation> {
    let (Formula::Diamond(inner), Formula::Forall(y, body)) = (lhs, rhs) else {
        return None;
    };
    let Formula::Diamond(chi) = &**body else {
        return None;
    };
    let yv = Term::Var(y.clone());
    let inst = instantiate_left(inner, chi, &yv, None)?;
    let mono = Derivation::infer(Rule::DiamondMono, lhs.clone(), (**body).clone(), vec![inst]);
    Some(Derivation::infer(
        Rule::ForallRight,
        lhs.clone(),
        rhs.clone(),
        vec![mono],
    ))
}

/// `A x . A y . phi |- A y' . A x' . phi'`.
fn forall_swap(lhs: &Formula, rhs: &Formula) -> Option<Derivation> {
    let (Formula::Forall(x, outer_body), Formula::Forall(y2, rhs_inner)) = (lhs, rhs) else {
        return None;
    };
    let Formula::Forall(x2, phi2) = &**rhs_inner else {
        return None;
    };
    let avoid = BTreeSet::from([x2.clone(), y2.clone()]);
    let inner = outer_body.rename_bound_apart(&avoid);
    let Formula::Forall(y, _) = &inner else {
        return None;
    };
    let y = y.clone();
    let apart = Formula::forall(x.clone(), inner.clone());
    let after_x = inner.replace_free(x, &Term::Var(x2.clone()));
    let Formula::Forall(_, psi) = &after_x else {
        return None;
    };
    let after_y = psi.replace_free(&y, &Term::Var(y2.clone()));
    let second = Derivation::infer(
        Rule::ForallLeft,
        after_x.clone(),
        (**phi2).clone(),
        vec![refl(&after_y, phi2)],
    )
    .with_witness(Witness::term(Term::Var(y2.clone())));
    let first = Derivation::infer(Rule::ForallLeft, apart, (**phi2).clone(), vec![second])
        .with_witness(Witness::term(Term::Var(x2.clone())))
        .retarget(lhs, phi2);
    let gen_x = Derivation::infer(Rule::ForallRight, lhs.clone(), (**rhs_inner).clone(), vec![first]);
    Some(Derivation::infer(
        Rule::ForallRight,
        lhs.clone(),
        rhs.clone(),
        vec![gen_x],
    ))
}

fn forall_elim(lhs: &Formula, rhs: &Formula, t: &Term) -> Option<Derivation> {
    instantiate_left(lhs, rhs, t, None)
}

/// `A x . phi |- A y . chi`: generalize `y`, instantiate `x` with `y`.
fn forall_rename(lhs: &Formula, rhs: &Formula) -> Option<Derivation> {
    let Formula::Forall(y, chi) = rhs else {
        return None;
    };
    let inst = instantiate_left(lhs, chi, &Term::Var(y.clone()), None)?;
    Some(Derivation::infer(
        Rule::ForallRight,
        lhs.clone(),
        rhs.clone(),
        vec![inst],
    ))
}

/// Every derived schema that `s` instantiates, each returned as its
/// primitive expansion. Premises of the two inference schemas are
/// discharged by proof search within `depth_budget`.
pub fn derived_rule_instances(s: &Sequent, depth_budget: usize) -> Result<Vec<Derivation>, CalculusError> {
    let (lhs, rhs) = (&s.lhs, &s.rhs);
    let mut nodes = Vec::new();
    let axiom = |rule| Derivation::axiom(rule, lhs.clone(), rhs.clone());
    nodes.push(axiom(Rule::DiamondForall));
    nodes.push(axiom(Rule::ForallSwap));
    nodes.push(axiom(Rule::ForallRename));
    if let Formula::Forall(x, _) = lhs {
        let mut terms: Vec<Term> = rhs.free_terms().into_iter().collect();
        terms.push(Term::Var(x.clone()));
        for t in terms {
            nodes.push(axiom(Rule::ForallElim).with_witness(Witness::term(t)));
        }
    }
    // Abstract every free occurrence of one term of the right side.
    let mut names = lhs.all_vars();
    names.extend(rhs.all_vars());
    let x = fresh_var(&names);
    for t in rhs.free_terms() {
        let psi = abstract_term(rhs, &t, &x);
        if let Some(d) = prove(&Sequent::new(lhs.clone(), psi.clone()), depth_budget) {
            nodes.push(
                Derivation::infer(Rule::RhsInstantiation, lhs.clone(), rhs.clone(), vec![d])
                    .with_witness(Witness::substitution(x.clone(), t)),
            );
        }
    }
    if let Formula::Forall(x, psi) = rhs {
        if !lhs.has_free(x) {
            let mut used = lhs.constants();
            used.extend(psi.constants());
            let c = fresh_constant(&used);
            let goal = Sequent::new(lhs.clone(), psi.instantiate(x, &c));
            if let Some(d) = prove(&goal, depth_budget) {
                nodes.push(
                    Derivation::infer(Rule::ConstantForallRight, lhs.clone(), rhs.clone(), vec![d])
                        .with_witness(Witness::term(Term::Const(c))),
                );
            }
        }
    }
    let mut out: Vec<Derivation> = Vec::new();
    let mut seen_rules = Vec::new();
    for node in nodes {
        if seen_rules.contains(&node.rule) || check_derivation(&node).is_err() {
            continue;
        }
        if let Some(expansion) = expand_derived(&node) {
            seen_rules.push(node.rule);
            out.push(expansion);
        }
    }
    if out.is_empty() {
        return Err(CalculusError::NoSchemaMatches(s.to_string()));
    }
    Ok(out)
}

/// Replaces the free occurrences of `t` in `phi` by the variable `x`.
fn abstract_term(phi: &Formula, t: &Term, x: &str) -> Formula {
    match phi {
        Formula::Top => Formula::Top,
        Formula::Rel(s, args) => Formula::Rel(
            s.clone(),
            args.iter()
                .map(|a| if a == t { Term::Var(x.to_string()) } else { a.clone() })
                .collect(),
        ),
        Formula::And(a, b) => Formula::and(abstract_term(a, t, x), abstract_term(b, t, x)),
        Formula::Diamond(a) => Formula::diamond(abstract_term(a, t, x)),
        Formula::Forall(y, _) if t.is_var() && y == t.name() => phi.clone(),
        Formula::Forall(y, a) => Formula::forall(y.clone(), abstract_term(a, t, x)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::DEFAULT_DEPTH_BUDGET;

    fn f(s: &str) -> Formula {
        s.parse().unwrap()
    }

    fn node(rule: Rule, l: &str, r: &str) -> Derivation {
        Derivation::axiom(rule, f(l), f(r))
    }

    fn expands_primitively(d: &Derivation) {
        let e = expand_derived(d).expect("expands");
        assert_eq!(e.conclusion, d.conclusion);
        assert!(check_derivation(&e).is_ok(), "{}", e.render_tree());
    }

    #[test]
    fn diamond_forall_expansion() {
        let d = node(Rule::DiamondForall, "<>A x . S(x)", "A x . <>S(x)");
        assert!(check_derivation(&d).is_ok());
        expands_primitively(&d);
        let renamed = node(Rule::DiamondForall, "<>A x . R(x, y)", "A z . <>R(z, y)");
        assert!(check_derivation(&renamed).is_ok());
        expands_primitively(&renamed);
    }

    #[test]
    fn forall_swap_expansion() {
        let d = node(Rule::ForallSwap, "A x . A y . R(x, y)", "A y . A x . R(x, y)");
        assert!(check_derivation(&d).is_ok());
        expands_primitively(&d);
        let same_names = node(Rule::ForallSwap, "A x . A x . S(x)", "A x . A x . S(x)");
        assert!(check_derivation(&same_names).is_ok());
        expands_primitively(&same_names);
    }

    #[test]
    fn forall_elim_and_rename() {
        let d = node(Rule::ForallElim, "A x . S(x)", "S(c)").with_witness(Witness::term(Term::constant("c")));
        assert!(check_derivation(&d).is_ok());
        let r = node(Rule::ForallRename, "A x . S(x)", "A y . S(y)");
        assert!(check_derivation(&r).is_ok());
        let bad = node(Rule::ForallRename, "A x . R(x, y)", "A y . R(y, y)");
        assert!(check_derivation(&bad).is_err());
    }

    #[test]
    fn rhs_instantiation_expansion() {
        let premise = node(Rule::Top, "S(c)", "T");
        let d = Derivation::infer(Rule::RhsInstantiation, f("S(c)"), Formula::Top, vec![premise])
            .with_witness(Witness::substitution("x", Term::constant("d")));
        assert!(check_derivation(&d).is_ok());
    }

    #[test]
    fn constant_forall_right_expansion() {
        let premise = node(Rule::ForallElim, "A y . S(y)", "S(c#0)").with_witness(Witness::term(Term::constant("c#0")));
        let d = Derivation::infer(
            Rule::ConstantForallRight,
            f("A y . S(y)"),
            f("A x . S(x)"),
            vec![premise],
        )
        .with_witness(Witness::term(Term::constant("c#0")));
        assert!(check_derivation(&d).is_ok());
        let not_fresh = Derivation::infer(
            Rule::ConstantForallRight,
            f("(A y . S(y) & S(c))"),
            f("A x . S(x)"),
            vec![Derivation::infer(
                Rule::Cut,
                f("(A y . S(y) & S(c))"),
                f("S(c)"),
                vec![
                    node(Rule::AndElimLeft, "(A y . S(y) & S(c))", "A y . S(y)"),
                    node(Rule::ForallElim, "A y . S(y)", "S(c)").with_witness(Witness::term(Term::constant("c"))),
                ],
            )],
        )
        .with_witness(Witness::term(Term::constant("c")));
        assert!(check_derivation(&not_fresh).is_err());
    }

    #[test]
    fn instances_are_recognized() {
        let s = Sequent::new(f("<>A x . S(x)"), f("A x . <>S(x)"));
        let found = derived_rule_instances(&s, DEFAULT_DEPTH_BUDGET).unwrap();
        assert!(!found.is_empty());
        for d in &found {
            assert!(d.uses_only_primitive_rules());
            assert!(check_derivation(d).is_ok());
        }
        let none = Sequent::new(f("S(c)"), f("S(d)"));
        assert!(derived_rule_instances(&none, DEFAULT_DEPTH_BUDGET).is_err());
    }
}
