use std::fmt;

use serde::Serialize;

use super::KripkeModel;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// `w R u` and `u R v` but not `w R v`.
    NotTransitive { w: String, u: String, v: String },
    /// `eta_{w,v}(d)` differs from `eta_{u,v}(eta_{w,u}(d))`, or one side is
    /// undefined.
    EtaIncoherent {
        w: String,
        u: String,
        v: String,
        element: String,
    },
    /// `eta_{w,u}` does not carry `c^{I_w}` to `c^{I_u}`.
    Discordant { w: String, u: String, constant: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotTransitive { w, u, v } => {
                write!(f, "{w} R {u} and {u} R {v} but not {w} R {v}")
            }
            Violation::EtaIncoherent { w, u, v, element } => {
                write!(f, "eta along {w} -> {v} disagrees with {w} -> {u} -> {v} on {element}")
            }
            Violation::Discordant { w, u, constant } => {
                write!(f, "constant {constant} is not carried from {w} to {u}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdequacyReport {
    pub transitive: bool,
    pub eta_coherent: bool,
    pub concordant: bool,
    pub witnesses: Vec<Violation>,
}

impl AdequacyReport {
    pub fn is_adequate(&self) -> bool {
        self.transitive && self.eta_coherent && self.concordant
    }
}

/// Exhaustively checks transitivity, composition of `eta` along every
/// two-step chain, and concordance of every constant along every edge.
pub fn check_adequate(m: &KripkeModel) -> AdequacyReport {
    let name = |w: usize| m.worlds[w].clone();
    let mut witnesses = Vec::new();
    let (mut transitive, mut eta_coherent, mut concordant) = (true, true, true);
    for &(w, u) in &m.edges {
        for v in m.successors(u) {
            if !m.edges.contains(&(w, v)) {
                transitive = false;
                witnesses.push(Violation::NotTransitive {
                    w: name(w),
                    u: name(u),
                    v: name(v),
                });
                continue;
            }
            for d in 0..m.domains[w].len() {
                let direct = m.eta_apply(w, v, d);
                let composed = m.eta_apply(w, u, d).and_then(|e| m.eta_apply(u, v, e));
                if direct.is_none() || direct != composed {
                    eta_coherent = false;
                    witnesses.push(Violation::EtaIncoherent {
                        w: name(w),
                        u: name(u),
                        v: name(v),
                        element: m.domains[w][d].clone(),
                    });
                }
            }
        }
        let constants = m.constants[w].keys().chain(m.constants[u].keys());
        let mut seen = std::collections::BTreeSet::new();
        for c in constants {
            if !seen.insert(c) {
                continue;
            }
            let carried = m.constants[w].get(c).and_then(|&a| m.eta_apply(w, u, a));
            if carried.is_none() || carried != m.constants[u].get(c).copied() {
                concordant = false;
                witnesses.push(Violation::Discordant {
                    w: name(w),
                    u: name(u),
                    constant: c.clone(),
                });
            }
        }
    }
    AdequacyReport {
        transitive,
        eta_coherent,
        concordant,
        witnesses,
    }
}
