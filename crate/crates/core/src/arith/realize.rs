use std::collections::BTreeSet;

use super::{y_var, z_var, ArithError, ArithFormula, ArithTerm, BoxIndex, ShadowStructure, TauTag, U};
use crate::syntax::{Formula, Term};

fn tau_base() -> ArithFormula {
    ArithFormula::TauAxiom(TauTag::ISigma1)
}

fn quote_diamond(inner: ArithFormula) -> ArithFormula {
    let quoted = ArithFormula::Diamond(BoxIndex::Realization(Box::new(inner)), Box::new(ArithFormula::Truth));
    ArithFormula::GodelEq(U.to_string(), Box::new(quoted))
}

/// The realization of a formula as an axiomatization (in `u`) of a theory
/// extending the base theory. Relation symbols become opaque
/// `sigma_S(u, ...)` formulas.
pub fn star_realization(phi: &Formula) -> ArithFormula {
    star_with(phi, &mut |s, args| {
        let mut terms = vec![ArithTerm::var(U)];
        terms.extend(args.iter().map(|t| match t {
            Term::Var(x) => ArithTerm::Var(y_var(x)),
            Term::Const(c) => ArithTerm::Var(z_var(c)),
        }));
        ArithFormula::or(vec![ArithFormula::Sigma(s.to_string(), terms), tau_base()])
    })
}

/// The same realization with relation symbols taken from a model through
/// the Solovay sentences: `S(t) |-> tau(u) | u = godel<S(t)*'>`.
pub fn completeness_star(phi: &Formula, s: &ShadowStructure) -> Result<ArithFormula, ArithError> {
    let mut err = None;
    let out = star_with(phi, &mut |sym, args| {
        let atom = Formula::Rel(sym.to_string(), args.to_vec());
        match solovay_atom_prime(&atom, s) {
            Ok(prime) => ArithFormula::or(vec![
                ArithFormula::TauAxiom(TauTag::Tau),
                ArithFormula::GodelEq(U.to_string(), Box::new(prime)),
            ]),
            Err(e) => {
                err.get_or_insert(e);
                ArithFormula::Falsity
            }
        }
    });
    err.map_or(Ok(out), Err)
}

fn star_with(phi: &Formula, atom: &mut dyn FnMut(&str, &[Term]) -> ArithFormula) -> ArithFormula {
    match phi {
        Formula::Top => tau_base(),
        Formula::Rel(s, args) => atom(s, args),
        Formula::And(a, b) => ArithFormula::or(vec![star_with(a, atom), star_with(b, atom)]),
        Formula::Diamond(a) => ArithFormula::or(vec![tau_base(), quote_diamond(star_with(a, atom))]),
        Formula::Forall(x, a) => ArithFormula::exists(y_var(x), star_with(a, atom)),
    }
}

fn mod_var(name: String, m: u64) -> ArithTerm {
    ArithTerm::Mod(Box::new(ArithTerm::Var(name)), m)
}

/// `Phi_i` for an atom at shadow world `i`: some tuple of `S` at `i` matches
/// the codes of the arguments. With `constants_as_vars`, constants are
/// represented by `z_k mod m` instead of their codes.
fn atom_family(atom: &Formula, s: &ShadowStructure, constants_as_vars: bool) -> Result<Vec<ArithFormula>, ArithError> {
    let Formula::Rel(sym, args) = atom else {
        return Err(ArithError::NotAtom(atom.to_string()));
    };
    let m = s.m();
    let mut out = Vec::with_capacity(s.world_count());
    for i in 0..s.world_count() {
        let mut alternatives = Vec::new();
        for tuple in s.tuples(i, sym) {
            let mut eqs = Vec::with_capacity(args.len());
            for (t, &a) in args.iter().zip(tuple) {
                let rhs = match t {
                    Term::Var(x) => mod_var(y_var(x), m),
                    Term::Const(c) if constants_as_vars => mod_var(z_var(c), m),
                    Term::Const(c) => ArithTerm::CodedElement(s.constant_code(i, c)?),
                };
                eqs.push(ArithFormula::Eq(ArithTerm::CodedElement(a as u64), rhs));
            }
            alternatives.push(ArithFormula::and(eqs));
        }
        out.push(ArithFormula::or(alternatives));
    }
    Ok(out)
}

/// `Psi_i` for every shadow world `i`: like `Phi_i` but with `z_k mod m`
/// in place of the code of constant `c_k`.
pub fn psi_family(atom: &Formula, s: &ShadowStructure) -> Result<Vec<ArithFormula>, ArithError> {
    atom_family(atom, s, true)
}

/// `S(t)*'`: the disjunction over worlds of `Lam(i) & Psi_i`.
pub fn solovay_atom_prime(atom: &Formula, s: &ShadowStructure) -> Result<ArithFormula, ArithError> {
    let psi = psi_family(atom, s)?;
    Ok(ArithFormula::or(
        psi.into_iter()
            .enumerate()
            .map(|(i, p)| ArithFormula::and(vec![ArithFormula::LambdaAtom(i), p]))
            .collect(),
    ))
}

/// The Solovay-style interpretation over a shadow structure.
pub fn solovay_star(phi: &Formula, s: &ShadowStructure) -> Result<ArithFormula, ArithError> {
    Ok(match phi {
        Formula::Top => ArithFormula::Truth,
        Formula::Rel(..) => {
            let family = atom_family(phi, s, false)?;
            ArithFormula::or(
                family
                    .into_iter()
                    .enumerate()
                    .map(|(i, p)| ArithFormula::and(vec![ArithFormula::LambdaAtom(i), p]))
                    .collect(),
            )
        }
        Formula::And(a, b) => ArithFormula::and(vec![solovay_star(a, s)?, solovay_star(b, s)?]),
        Formula::Diamond(a) => ArithFormula::Diamond(BoxIndex::Tau, Box::new(solovay_star(a, s)?)),
        Formula::Forall(x, a) => ArithFormula::forall(y_var(x), solovay_star(a, s)?),
    })
}

/// `forall theta forall y.. forall z.. (Box[psi*] theta -> Box[phi*] theta)`,
/// quantifying the variables standing for the free variables and constants
/// of both formulas.
pub fn qrc1_t_statement(phi: &Formula, psi: &Formula) -> ArithFormula {
    let theta = ArithFormula::Schematic("theta".into());
    let boxed = |f: &Formula| {
        ArithFormula::Box(
            BoxIndex::Realization(Box::new(star_realization(f))),
            Box::new(theta.clone()),
        )
    };
    let mut body = ArithFormula::implies(boxed(psi), boxed(phi));
    let mut zs: BTreeSet<String> = phi.constants().iter().map(|c| z_var(c)).collect();
    zs.extend(psi.constants().iter().map(|c| z_var(c)));
    let mut ys: BTreeSet<String> = phi.free_vars().iter().map(|x| y_var(x)).collect();
    ys.extend(psi.free_vars().iter().map(|x| y_var(x)));
    for z in zs.into_iter().rev() {
        body = ArithFormula::forall(z, body);
    }
    for y in ys.into_iter().rev() {
        body = ArithFormula::forall(y, body);
    }
    ArithFormula::forall("theta", body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::KripkeModel;

    fn f(s: &str) -> Formula {
        s.parse().unwrap()
    }

    fn two_world_structure() -> ShadowStructure {
        let mut m = KripkeModel::constant_domain(vec!["w".into(), "v".into()], vec!["c0".into(), "c1".into()]);
        m.edges.insert((0, 1));
        m.add_tuple(0, "S", vec![0]);
        m.add_tuple(1, "S", vec![1]);
        ShadowStructure::new(&m).unwrap()
    }

    #[test]
    fn star_clauses() {
        assert_eq!(star_realization(&Formula::Top).to_string(), "tau_isig1(u)");
        assert_eq!(
            star_realization(&f("(S(x0) & T)")).to_string(),
            "(sigma_S(u, y0) | tau_isig1(u) | tau_isig1(u))"
        );
        assert_eq!(
            star_realization(&f("A x0 . S(x0)")).to_string(),
            "exists y0 . (sigma_S(u, y0) | tau_isig1(u))"
        );
        assert_eq!(
            star_realization(&f("<>T")).to_string(),
            "(tau_isig1(u) | u = godel<Dia[tau_isig1(u)] true>)"
        );
    }

    #[test]
    fn solovay_clauses() {
        let s = two_world_structure();
        assert_eq!(solovay_star(&Formula::Top, &s).unwrap(), ArithFormula::Truth);
        assert_eq!(solovay_star(&f("<>T"), &s).unwrap().to_string(), "Dia[tau] true");
        assert_eq!(
            solovay_star(&f("S(x0)"), &s).unwrap().to_string(),
            "((Lam(0) & [0] = (y0 mod 2)) | (Lam(1) & [0] = (y0 mod 2)) | (Lam(2) & [1] = (y0 mod 2)))"
        );
    }

    #[test]
    fn psi_reduces_to_phi() {
        let s = two_world_structure();
        let atom = f("S(c1)");
        let psi = psi_family(&atom, &s).unwrap();
        let phi = atom_family(&atom, &s, false).unwrap();
        let code = ArithTerm::CodedElement(s.constant_code(0, "c1").unwrap());
        for (p, q) in psi.iter().zip(&phi) {
            assert_eq!(&p.substitute("z1", &code).reduce_numerals(), q);
        }
        assert_eq!(psi[2].to_string(), "[1] = (z1 mod 2)");
        let open = f("S(x0)");
        assert_eq!(psi_family(&open, &s).unwrap(), atom_family(&open, &s, false).unwrap());
    }

    #[test]
    fn t_statement_quantifiers() {
        assert_eq!(
            qrc1_t_statement(&Formula::Top, &Formula::Top).to_string(),
            "forall theta . (Box[tau_isig1(u)] theta -> Box[tau_isig1(u)] theta)"
        );
        let st = qrc1_t_statement(&f("S(x0)"), &f("S(c0)")).to_string();
        assert!(st.starts_with("forall theta . forall y0 . forall z0 . ("), "{st}");
    }

    #[test]
    fn completeness_star_quotes_the_prime_atom() {
        let s = two_world_structure();
        let out = completeness_star(&f("S(x0)"), &s).unwrap().to_string();
        assert!(out.starts_with("(tau(u) | u = godel<((Lam(0) & "), "{out}");
    }
}
