use std::collections::BTreeSet;

use super::{Formula, FormulaSet, SyntaxError};

/// `Cl_C(gamma)`: the least set containing each member of `gamma` and closed
/// under taking conjuncts, the body of a diamond, and every instance
/// `phi[x/c]` (c in `constants`) of a universal `A x . phi`. Atoms and `T`
/// contribute `T`. Members are stored in canonical form.
pub fn closure<'a, I>(gamma: I, constants: &BTreeSet<String>) -> Result<FormulaSet, SyntaxError>
where
    I: IntoIterator<Item = &'a Formula>,
{
    let mut out = FormulaSet::new();
    for phi in gamma {
        if !phi.is_closed() {
            return Err(SyntaxError::OpenFormula(phi.to_string()));
        }
        close_into(&phi.canonical(), constants, &mut out);
    }
    Ok(out)
}

fn close_into(phi: &Formula, constants: &BTreeSet<String>, out: &mut FormulaSet) {
    let phi = phi.canonical();
    if !out.insert(phi.clone()) {
        return;
    }
    match &phi {
        Formula::Top => {}
        Formula::Rel(..) => {
            out.insert(Formula::Top);
        }
        Formula::And(a, b) => {
            close_into(a, constants, out);
            close_into(b, constants, out);
        }
        Formula::Diamond(a) => close_into(a, constants, out),
        Formula::Forall(x, a) => {
            for c in constants {
                close_into(&a.instantiate(x, c), constants, out);
            }
        }
    }
}
