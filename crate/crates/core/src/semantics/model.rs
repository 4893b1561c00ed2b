use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::SemanticsError;

/// How elements travel along an edge `w R v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Eta {
    /// Each element goes to the element of the same name.
    Identity,
    /// `(w, v)` maps element index `a` of `M_w` to `map[a]` in `M_v`.
    Explicit(BTreeMap<(usize, usize), Vec<usize>>),
}

/// A finite relational model. Worlds, elements and tuples are referred to by
/// index; names are kept for display and serialization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KripkeModel {
    pub worlds: Vec<String>,
    pub edges: BTreeSet<(usize, usize)>,
    pub domains: Vec<Vec<String>>,
    pub eta: Eta,
    /// `I_w`: constant name to element index of `M_w`.
    pub constants: Vec<BTreeMap<String, usize>>,
    /// `J_w`: relation symbol to the tuples (element indices) holding at `w`.
    pub relations: Vec<BTreeMap<String, BTreeSet<Vec<usize>>>>,
}

impl KripkeModel {
    /// A model with no edges over one shared domain, identity `eta`, every
    /// constant named like an element interpreted as that element, and empty
    /// relations.
    pub fn constant_domain(worlds: Vec<String>, domain: Vec<String>) -> Self {
        let n = worlds.len();
        let consts: BTreeMap<String, usize> = domain.iter().enumerate().map(|(i, d)| (d.clone(), i)).collect();
        KripkeModel {
            worlds,
            edges: BTreeSet::new(),
            domains: vec![domain; n],
            eta: Eta::Identity,
            constants: vec![consts; n],
            relations: vec![BTreeMap::new(); n],
        }
    }

    pub fn world_count(&self) -> usize {
        self.worlds.len()
    }

    pub fn world_index(&self, name: &str) -> Option<usize> {
        self.worlds.iter().position(|w| w == name)
    }

    pub fn element_index(&self, world: usize, name: &str) -> Option<usize> {
        self.domains[world].iter().position(|d| d == name)
    }

    pub fn successors(&self, w: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.range((w, 0)..(w + 1, 0)).map(|&(_, v)| v)
    }

    pub fn add_tuple(&mut self, world: usize, relation: &str, tuple: Vec<usize>) {
        self.relations[world]
            .entry(relation.to_string())
            .or_default()
            .insert(tuple);
    }

    pub fn holds(&self, world: usize, relation: &str, tuple: &[usize]) -> bool {
        self.relations[world].get(relation).is_some_and(|ts| ts.contains(tuple))
    }

    /// Adds edges until `R` is transitive.
    pub fn transitive_closure(&mut self) {
        let n = self.worlds.len();
        let mut reach = vec![vec![false; n]; n];
        for &(a, b) in &self.edges {
            reach[a][b] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if reach[i][k] {
                    let via = reach[k].clone();
                    for (r, v) in reach[i].iter_mut().zip(via) {
                        *r |= v;
                    }
                }
            }
        }
        for (i, row) in reach.iter().enumerate() {
            for (j, &r) in row.iter().enumerate() {
                if r {
                    self.edges.insert((i, j));
                }
            }
        }
    }

    pub fn is_irreflexive(&self) -> bool {
        self.edges.iter().all(|(a, b)| a != b)
    }

    pub fn is_transitive(&self) -> bool {
        self.edges
            .iter()
            .all(|&(a, b)| self.successors(b).all(|c| self.edges.contains(&(a, c))))
    }

    /// Same element names everywhere and identity `eta`.
    pub fn is_constant_domain(&self) -> bool {
        self.eta == Eta::Identity && self.domains.windows(2).all(|w| w[0] == w[1])
    }

    /// Image of element `a` under `eta_{w,v}`, if defined.
    pub fn eta_apply(&self, w: usize, v: usize, a: usize) -> Option<usize> {
        match &self.eta {
            Eta::Identity => {
                let name = self.domains[w].get(a)?;
                self.element_index(v, name)
            }
            Eta::Explicit(map) => map.get(&(w, v)).and_then(|m| m.get(a).copied()),
        }
    }

    /// Structural sanity: indices in range, tuple arities consistent, `eta`
    /// given exactly on the edges.
    pub fn validate(&self) -> Result<(), SemanticsError> {
        let n = self.worlds.len();
        let bad = |m: String| Err(SemanticsError::InvalidModel(m));
        if n == 0 {
            return bad("no worlds".into());
        }
        if self.domains.len() != n || self.constants.len() != n || self.relations.len() != n {
            return bad("per-world tables do not match the number of worlds".into());
        }
        let names: BTreeSet<&String> = self.worlds.iter().collect();
        if names.len() != n {
            return bad("duplicate world names".into());
        }
        for &(a, b) in &self.edges {
            if a >= n || b >= n {
                return bad(format!("edge ({a}, {b}) out of range"));
            }
        }
        let mut arity: BTreeMap<&str, usize> = BTreeMap::new();
        for w in 0..n {
            let size = self.domains[w].len();
            if size == 0 {
                return bad(format!("world {} has an empty domain", self.worlds[w]));
            }
            let distinct: BTreeSet<&String> = self.domains[w].iter().collect();
            if distinct.len() != size {
                return bad(format!("world {} repeats a domain element", self.worlds[w]));
            }
            for (c, &a) in &self.constants[w] {
                if a >= size {
                    return bad(format!("constant {c} out of range at {}", self.worlds[w]));
                }
            }
            for (s, tuples) in &self.relations[w] {
                for t in tuples {
                    if t.iter().any(|&a| a >= size) {
                        return bad(format!("tuple of {s} out of range at {}", self.worlds[w]));
                    }
                    match arity.insert(s, t.len()) {
                        Some(k) if k != t.len() => {
                            return bad(format!("relation {s} used with arities {k} and {}", t.len()))
                        }
                        _ => {}
                    }
                }
            }
        }
        if let Eta::Explicit(map) = &self.eta {
            for (&(w, v), m) in map {
                if !self.edges.contains(&(w, v)) {
                    return bad(format!("eta given for non-edge ({w}, {v})"));
                }
                if m.len() != self.domains[w].len() || m.iter().any(|&b| b >= self.domains[v].len()) {
                    return bad(format!("eta for ({w}, {v}) is not a function between domains"));
                }
            }
            for e in &self.edges {
                if !map.contains_key(e) {
                    return bad(format!("eta missing for edge ({}, {})", e.0, e.1));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_raw()).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SemanticsError> {
        let raw: RawModel = serde_json::from_str(text).map_err(|e| SemanticsError::InvalidModel(e.to_string()))?;
        let m = Self::from_raw(raw)?;
        m.validate()?;
        Ok(m)
    }

    fn to_raw(&self) -> RawModel {
        let name = |w: usize| self.worlds[w].clone();
        let elem = |w: usize, a: usize| self.domains[w][a].clone();
        let constant_domain = self.is_constant_domain();
        let (domain, domains) = if constant_domain {
            (Some(self.domains[0].clone()), None)
        } else {
            let per = (0..self.worlds.len())
                .map(|w| (name(w), self.domains[w].clone()))
                .collect();
            (None, Some(per))
        };
        let named_consts = |w: usize| -> BTreeMap<String, String> {
            self.constants[w]
                .iter()
                .map(|(c, &a)| (c.clone(), elem(w, a)))
                .collect()
        };
        let first = named_consts(0);
        let i = if (1..self.worlds.len()).all(|w| named_consts(w) == first) {
            RawConstants::Global(first)
        } else {
            RawConstants::PerWorld((0..self.worlds.len()).map(|w| (name(w), named_consts(w))).collect())
        };
        let mut j: BTreeMap<String, BTreeMap<String, Vec<Vec<String>>>> = BTreeMap::new();
        for (w, rels) in self.relations.iter().enumerate() {
            for (s, tuples) in rels {
                let entry = j.entry(s.clone()).or_default();
                let list = entry.entry(name(w)).or_default();
                list.extend(tuples.iter().map(|t| t.iter().map(|&a| elem(w, a)).collect()));
            }
        }
        let eta = match &self.eta {
            Eta::Identity => None,
            Eta::Explicit(map) => {
                let mut out: RawEta = BTreeMap::new();
                for (&(w, v), m) in map {
                    let f = m.iter().enumerate().map(|(a, &b)| (elem(w, a), elem(v, b))).collect();
                    out.entry(name(w)).or_default().insert(name(v), f);
                }
                Some(out)
            }
        };
        RawModel {
            worlds: self.worlds.clone(),
            r: self.edges.iter().map(|&(a, b)| (name(a), name(b))).collect(),
            domain,
            domains,
            i,
            j,
            eta,
        }
    }

    fn from_raw(raw: RawModel) -> Result<Self, SemanticsError> {
        let bad = |m: String| SemanticsError::InvalidModel(m);
        let n = raw.worlds.len();
        let world = |name: &str| {
            raw.worlds
                .iter()
                .position(|w| w == name)
                .ok_or_else(|| bad(format!("unknown world `{name}`")))
        };
        let domains: Vec<Vec<String>> = match (&raw.domain, &raw.domains) {
            (Some(d), None) => vec![d.clone(); n],
            (None, Some(per)) => raw
                .worlds
                .iter()
                .map(|w| {
                    per.get(w)
                        .cloned()
                        .ok_or_else(|| bad(format!("no domain for world `{w}`")))
                })
                .collect::<Result<_, _>>()?,
            _ => return Err(bad("give exactly one of `domain` and `domains`".into())),
        };
        let elem = |w: usize, name: &str| {
            domains[w]
                .iter()
                .position(|d| d == name)
                .ok_or_else(|| bad(format!("`{name}` is not in the domain of `{}`", raw.worlds[w])))
        };
        let mut edges = BTreeSet::new();
        for (a, b) in &raw.r {
            edges.insert((world(a)?, world(b)?));
        }
        let mut constants = vec![BTreeMap::new(); n];
        match &raw.i {
            RawConstants::Global(map) => {
                for (w, table) in constants.iter_mut().enumerate() {
                    for (c, a) in map {
                        table.insert(c.clone(), elem(w, a)?);
                    }
                }
            }
            RawConstants::PerWorld(per) => {
                for (wname, map) in per {
                    let w = world(wname)?;
                    for (c, a) in map {
                        constants[w].insert(c.clone(), elem(w, a)?);
                    }
                }
            }
        }
        let mut relations = vec![BTreeMap::new(); n];
        for (s, per) in &raw.j {
            for (wname, tuples) in per {
                let w = world(wname)?;
                let set: &mut BTreeSet<Vec<usize>> = relations[w].entry(s.clone()).or_default();
                for t in tuples {
                    set.insert(t.iter().map(|a| elem(w, a)).collect::<Result<_, _>>()?);
                }
            }
        }
        let eta = match &raw.eta {
            None => Eta::Identity,
            Some(per) => {
                let mut map = BTreeMap::new();
                for (wname, targets) in per {
                    let w = world(wname)?;
                    for (vname, f) in targets {
                        let v = world(vname)?;
                        let mut table = vec![usize::MAX; domains[w].len()];
                        for (a, b) in f {
                            table[elem(w, a)?] = elem(v, b)?;
                        }
                        if table.contains(&usize::MAX) {
                            return Err(bad(format!("eta for ({wname}, {vname}) is not total")));
                        }
                        map.insert((w, v), table);
                    }
                }
                Eta::Explicit(map)
            }
        };
        Ok(KripkeModel {
            worlds: raw.worlds,
            edges,
            domains,
            eta,
            constants,
            relations,
        })
    }

    /// Graphviz rendering: one node per world labelled with its true atoms.
    /// With `reduce`, edges implied by transitivity are omitted.
    pub fn to_dot(&self, reduce: bool) -> String {
        let mut out = String::from("digraph model {\n  rankdir=BT;\n  node [shape=box];\n");
        for (w, name) in self.worlds.iter().enumerate() {
            let mut atoms = Vec::new();
            for (s, tuples) in &self.relations[w] {
                for t in tuples {
                    let args: Vec<&str> = t.iter().map(|&a| self.domains[w][a].as_str()).collect();
                    atoms.push(format!("{s}({})", args.join(", ")));
                }
            }
            let label = if atoms.is_empty() {
                name.clone()
            } else {
                format!("{name}\\n{}", atoms.join("\\n"))
            };
            let _ = writeln!(out, "  \"{name}\" [label=\"{label}\"];");
        }
        for &(a, b) in &self.edges {
            if reduce && self.successors(a).any(|m| m != b && self.edges.contains(&(m, b))) {
                continue;
            }
            let _ = writeln!(out, "  \"{}\" -> \"{}\";", self.worlds[a], self.worlds[b]);
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RawModel {
    worlds: Vec<String>,
    #[serde(rename = "R", default)]
    r: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domains: Option<BTreeMap<String, Vec<String>>>,
    #[serde(rename = "I", default)]
    i: RawConstants,
    #[serde(rename = "J", default)]
    j: BTreeMap<String, BTreeMap<String, Vec<Vec<String>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eta: Option<RawEta>,
}

/// `eta[w][v][element of w] = element of v`.
type RawEta = BTreeMap<String, BTreeMap<String, BTreeMap<String, String>>>;

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RawConstants {
    Global(BTreeMap<String, String>),
    PerWorld(BTreeMap<String, BTreeMap<String, String>>),
}

impl Default for RawConstants {
    fn default() -> Self {
        RawConstants::Global(BTreeMap::new())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_worlds() -> KripkeModel {
        let mut m = KripkeModel::constant_domain(vec!["w".into(), "v".into()], vec!["c".into(), "d".into()]);
        m.edges.insert((0, 1));
        m.add_tuple(1, "S", vec![1]);
        m
    }

    #[test]
    fn json_round_trip() {
        let m = two_worlds();
        let json = m.to_json();
        assert!(json.contains("\"domain\""));
        assert_eq!(KripkeModel::from_json(&json).unwrap(), m);
    }

    #[test]
    fn json_with_explicit_eta_and_per_world_data() {
        let text = r#"{
            "worlds": ["w", "v"],
            "R": [["w", "v"]],
            "domains": {"w": ["a"], "v": ["b", "e"]},
            "I": {"w": {"c": "a"}, "v": {"c": "e"}},
            "J": {"S": {"v": [["b"]]}},
            "eta": {"w": {"v": {"a": "e"}}}
        }"#;
        let m = KripkeModel::from_json(text).unwrap();
        assert_eq!(m.eta_apply(0, 1, 0), Some(1));
        assert!(!m.is_constant_domain());
        assert_eq!(KripkeModel::from_json(&m.to_json()).unwrap(), m);
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(KripkeModel::from_json(r#"{"worlds": ["w"], "domain": []}"#).is_err());
        assert!(KripkeModel::from_json(r#"{"worlds": ["w"], "domain": ["a"], "R": [["w", "u"]]}"#).is_err());
        assert!(KripkeModel::from_json(
            r#"{"worlds": ["w"], "domain": ["a"], "J": {"S": {"w": [["a"], ["a", "a"]]}}}"#
        )
        .is_err());
    }

    #[test]
    fn closure_and_shape() {
        let mut m = KripkeModel::constant_domain(vec!["a".into(), "b".into(), "c".into()], vec!["d".into()]);
        m.edges.insert((0, 1));
        m.edges.insert((1, 2));
        assert!(!m.is_transitive());
        m.transitive_closure();
        assert!(m.is_transitive());
        assert!(m.is_irreflexive());
        let dot = m.to_dot(true);
        assert!(!dot.contains("\"a\" -> \"c\""));
        assert!(m.to_dot(false).contains("\"a\" -> \"c\""));
    }
}
