use std::collections::{BTreeMap, BTreeSet};

use super::{y_var, ArithError, ArithFormula, ArithTerm, BoxIndex};
use crate::semantics::{check_adequate, Assignment, KripkeModel};
use crate::syntax::Formula;

/// A constant-domain model with an extra root: shadow world 0 sees every
/// other world and copies the interpretation of shadow world 1. Shadow world
/// `i >= 1` is world `i - 1` of the original model. Elements are coded by
/// their index, so codes range over `0..m`.
#[derive(Debug, Clone)]
pub struct ShadowStructure {
    extended: KripkeModel,
    succ: Vec<Vec<usize>>,
}

impl ShadowStructure {
    pub fn new(model: &KripkeModel) -> Result<Self, ArithError> {
        model
            .validate()
            .map_err(|e| ArithError::UnsuitableModel(e.to_string()))?;
        if !model.is_constant_domain() {
            return Err(ArithError::UnsuitableModel("domains differ or eta is explicit".into()));
        }
        if let Some(v) = check_adequate(model).witnesses.first() {
            return Err(ArithError::UnsuitableModel(v.to_string()));
        }
        let mut root = "0".to_string();
        while model.worlds.contains(&root) {
            root.push('\'');
        }
        let n = model.world_count();
        let mut worlds = vec![root];
        worlds.extend(model.worlds.iter().cloned());
        let mut edges: BTreeSet<(usize, usize)> = model.edges.iter().map(|&(a, b)| (a + 1, b + 1)).collect();
        edges.extend((1..=n).map(|j| (0, j)));
        let mut domains = vec![model.domains[0].clone()];
        domains.extend(model.domains.iter().cloned());
        let mut constants = vec![model.constants[0].clone()];
        constants.extend(model.constants.iter().cloned());
        let mut relations = vec![model.relations[0].clone()];
        relations.extend(model.relations.iter().cloned());
        let extended = KripkeModel {
            worlds,
            edges,
            domains,
            eta: model.eta.clone(),
            constants,
            relations,
        };
        let succ = (0..=n).map(|w| extended.successors(w).collect()).collect();
        Ok(ShadowStructure { extended, succ })
    }

    /// The model with the extra root at index 0.
    pub fn extended(&self) -> &KripkeModel {
        &self.extended
    }

    /// Domain size; the modulus of the interpretation.
    pub fn m(&self) -> u64 {
        self.extended.domains[0].len() as u64
    }

    /// Number of shadow worlds, the extra root included.
    pub fn world_count(&self) -> usize {
        self.extended.world_count()
    }

    /// The original world a shadow world stands for.
    pub fn base_world(&self, i: usize) -> Option<usize> {
        (1..self.world_count()).contains(&i).then(|| i - 1)
    }

    pub fn successors(&self, i: usize) -> &[usize] {
        &self.succ[i]
    }

    pub fn tuples<'a>(&'a self, i: usize, relation: &str) -> impl Iterator<Item = &'a Vec<usize>> + 'a {
        self.extended.relations[i].get(relation).into_iter().flatten()
    }

    pub fn constant_code(&self, i: usize, c: &str) -> Result<u64, ArithError> {
        self.extended.constants[i]
            .get(c)
            .map(|&a| a as u64)
            .ok_or_else(|| ArithError::Unbound(c.to_string()))
    }
}

/// The numbers coding an assignment, keyed by the arithmetic variables
/// standing for the free variables of `phi`.
pub fn shadow_env(g: &Assignment, phi: &Formula) -> BTreeMap<String, u64> {
    phi.free_vars()
        .into_iter()
        .map(|x| {
            let v = g.get(&x) as u64;
            (y_var(&x), v)
        })
        .collect()
}

fn term(env: &BTreeMap<String, u64>, t: &ArithTerm) -> Result<u64, ArithError> {
    match t {
        ArithTerm::Var(v) => env.get(v).copied().ok_or_else(|| ArithError::Unbound(v.clone())),
        ArithTerm::Numeral(n) | ArithTerm::CodedElement(n) => Ok(*n),
        ArithTerm::Mod(inner, m) => Ok(term(env, inner)? % m),
    }
}

/// Truth of `a` at shadow world `i`: `Lam(j)` holds exactly at `j = i`,
/// `Dia[tau]` moves along the accessibility relation and quantifiers range
/// over the codes `0..m`. Provability predicates other than `tau`, quotes,
/// axiomatizations and opaque formulas are rejected.
pub fn shadow_eval(
    s: &ShadowStructure,
    i: usize,
    env: &BTreeMap<String, u64>,
    a: &ArithFormula,
) -> Result<bool, ArithError> {
    if i >= s.world_count() {
        return Err(ArithError::UnknownWorld(i));
    }
    let mut env = env.clone();
    eval(s, i, &mut env, a)
}

fn eval(s: &ShadowStructure, i: usize, env: &mut BTreeMap<String, u64>, a: &ArithFormula) -> Result<bool, ArithError> {
    match a {
        ArithFormula::Truth => Ok(true),
        ArithFormula::Falsity => Ok(false),
        ArithFormula::Eq(l, r) => Ok(term(env, l)? == term(env, r)?),
        ArithFormula::LambdaAtom(j) => Ok(*j == i),
        ArithFormula::Not(b) => Ok(!eval(s, i, env, b)?),
        ArithFormula::And(items) => {
            for b in items {
                if !eval(s, i, env, b)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        ArithFormula::Or(items) => {
            for b in items {
                if eval(s, i, env, b)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        ArithFormula::Implies(b, c) => Ok(!eval(s, i, env, b)? || eval(s, i, env, c)?),
        ArithFormula::Forall(v, b) => quantify(s, i, env, v, b, true),
        ArithFormula::Exists(v, b) => quantify(s, i, env, v, b, false),
        ArithFormula::Diamond(BoxIndex::Tau, b) => {
            for &j in s.successors(i) {
                if eval(s, j, env, b)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        ArithFormula::Box(BoxIndex::Tau, b) => {
            for &j in s.successors(i) {
                if !eval(s, j, env, b)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        other => Err(ArithError::OutsideFragment(other.to_string())),
    }
}

fn quantify(
    s: &ShadowStructure,
    i: usize,
    env: &mut BTreeMap<String, u64>,
    v: &str,
    body: &ArithFormula,
    universal: bool,
) -> Result<bool, ArithError> {
    let saved = env.get(v).copied();
    let mut result = universal;
    for n in 0..s.m() {
        env.insert(v.to_string(), n);
        if eval(s, i, env, body)? != universal {
            result = !universal;
            break;
        }
    }
    match saved {
        Some(old) => env.insert(v.to_string(), old),
        None => env.remove(v),
    };
    Ok(result)
}
