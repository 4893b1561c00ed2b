//! Constant-domain tree models, indexed so that the whole space can be
//! walked in a fixed order or sampled by position.
//!
//! A tree of depth at most `d` is a root label (one bit per relation tuple
//! over the domain) and a multiset of at most `width` subtrees of depth at
//! most `d - 1`. Trees are ordered by number of children, then by the rank
//! of the child multiset, then by root label. Counts saturate at
//! `u128::MAX`, which only matters for spaces far larger than anything that
//! can be walked.

use super::{KripkeModel, SemanticsError};
use crate::syntax::Signature;

/// Most relation tuples a label can carry.
pub const MAX_SLOTS: usize = 127;

#[derive(Debug, Clone)]
pub struct ModelSpace {
    domain: Vec<String>,
    constants: Vec<String>,
    /// `(relation, tuple)` for each label bit.
    slots: Vec<(String, Vec<usize>)>,
    depth: usize,
    width: usize,
    /// `trees[d]`: number of trees of depth at most `d`.
    trees: Vec<u128>,
}

/// The models, over the relations of `sig` and the given domain, whose frame
/// is the transitive closure of a tree of depth at most `depth` and
/// branching at most `width`. Every constant of `sig` denotes the element of
/// the same name, or the first element when there is none.
pub fn enumerate_models(
    sig: &Signature,
    domain: &[String],
    depth: usize,
    width: usize,
) -> Result<ModelSpace, SemanticsError> {
    if domain.is_empty() {
        return Err(SemanticsError::InvalidModel("empty domain".into()));
    }
    let mut slots = Vec::new();
    for (s, &arity) in &sig.relations {
        let total = domain.len().checked_pow(arity as u32).unwrap_or(usize::MAX);
        if total > MAX_SLOTS {
            return Err(SemanticsError::ModelSpaceTooLarge(format!(
                "{s} alone has {total} tuples over the domain"
            )));
        }
        for mut code in 0..total {
            let mut tuple = vec![0; arity];
            for slot in tuple.iter_mut().rev() {
                *slot = code % domain.len();
                code /= domain.len();
            }
            slots.push((s.clone(), tuple));
        }
    }
    if slots.len() > MAX_SLOTS {
        return Err(SemanticsError::ModelSpaceTooLarge(format!(
            "{} relation tuples exceed the limit of {MAX_SLOTS}",
            slots.len()
        )));
    }
    let labels = label_count(slots.len());
    let mut trees = vec![labels];
    for d in 1..=depth {
        let below = trees[d - 1];
        let shapes = (0..=width).fold(0u128, |acc, k| acc.saturating_add(multisets(below, k)));
        trees.push(labels.saturating_mul(shapes));
    }
    Ok(ModelSpace {
        domain: domain.to_vec(),
        constants: sig.constants.iter().cloned().collect(),
        slots,
        depth,
        width,
        trees,
    })
}

fn label_count(slots: usize) -> u128 {
    if slots >= 128 {
        u128::MAX
    } else {
        1u128 << slots
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `C(n, k)`, saturating.
fn binomial(n: u128, k: usize) -> u128 {
    let k = k as u128;
    if k > n {
        return 0;
    }
    let mut acc: u128 = 1;
    for j in 0..k {
        // acc = C(n, j); C(n, j + 1) = acc * (n - j) / (j + 1), divided
        // out before multiplying so nothing overflows unless the result does.
        let g = gcd(acc, j + 1);
        let rest = (j + 1) / g;
        let factor = (n - j) / rest;
        acc = match (acc / g).checked_mul(factor) {
            Some(v) => v,
            None => return u128::MAX,
        };
    }
    acc
}

/// Number of multisets of size `k` drawn from `n` kinds.
fn multisets(n: u128, k: usize) -> u128 {
    if k == 0 {
        return 1;
    }
    if n == 0 {
        return 0;
    }
    match n.checked_add(k as u128 - 1) {
        Some(top) => binomial(top, k),
        None => u128::MAX,
    }
}

/// The `index`-th non-decreasing sequence of length `k` over `0..n`, in
/// lexicographic order.
fn unrank_multiset(n: u128, k: usize, mut index: u128) -> Vec<u128> {
    let mut out = Vec::with_capacity(k);
    let mut low = 0u128;
    for remaining in (1..=k).rev() {
        // Sequences of length `remaining` with every entry >= e.
        let from = |e: u128| multisets(n - e, remaining);
        let total = from(low);
        // Smallest e in (low, n] with total - from(e) > index; the entry is e - 1.
        let (mut lo, mut hi) = (low + 1, n);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if total - from(mid) > index {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let first = lo - 1;
        index -= total - from(first);
        out.push(first);
        low = first;
    }
    out
}

struct Node {
    label: u128,
    children: Vec<Node>,
}

impl ModelSpace {
    /// Number of models, saturating at `u128::MAX`.
    pub fn len(&self) -> u128 {
        self.trees[self.depth]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    fn unrank(&self, depth: usize, index: u128) -> Node {
        let labels = label_count(self.slots.len());
        if depth == 0 {
            return Node {
                label: index,
                children: Vec::new(),
            };
        }
        let below = self.trees[depth - 1];
        let mut index = index;
        for k in 0..=self.width {
            let block = labels.saturating_mul(multisets(below, k));
            if index < block {
                let shape = index / labels;
                let label = index % labels;
                let children = unrank_multiset(below, k, shape)
                    .into_iter()
                    .map(|c| self.unrank(depth - 1, c))
                    .collect();
                return Node { label, children };
            }
            index -= block;
        }
        unreachable!("index within the space")
    }

    /// The model at position `index`, if there is one.
    pub fn model(&self, index: u128) -> Option<KripkeModel> {
        if index >= self.len() {
            return None;
        }
        let tree = self.unrank(self.depth, index);
        let mut labels = Vec::new();
        let mut edges = Vec::new();
        flatten(&tree, None, &mut labels, &mut edges);
        let worlds = (0..labels.len()).map(|i| format!("w{i}")).collect();
        let mut m = KripkeModel::constant_domain(worlds, self.domain.clone());
        for table in &mut m.constants {
            table.clear();
            for c in &self.constants {
                let a = self.domain.iter().position(|d| d == c).unwrap_or(0);
                table.insert(c.clone(), a);
            }
        }
        m.edges.extend(edges);
        for (w, &label) in labels.iter().enumerate() {
            for (bit, (s, tuple)) in self.slots.iter().enumerate() {
                if label >> bit & 1 == 1 {
                    m.add_tuple(w, s, tuple.clone());
                }
            }
        }
        m.transitive_closure();
        Some(m)
    }

    /// All models in order.
    pub fn iter(&self) -> impl Iterator<Item = KripkeModel> + '_ {
        (0u128..).map_while(move |i| self.model(i))
    }

    /// `count` models spread evenly over the space (all of them when the
    /// space is smaller).
    pub fn sample_evenly(&self, count: usize) -> Vec<KripkeModel> {
        let total = self.len();
        if total <= count as u128 {
            return self.iter().collect();
        }
        let step = total / count as u128;
        (0..count as u128).filter_map(|i| self.model(i * step)).collect()
    }
}

fn flatten(node: &Node, parent: Option<usize>, labels: &mut Vec<u128>, edges: &mut Vec<(usize, usize)>) {
    let me = labels.len();
    labels.push(node.label);
    if let Some(p) = parent {
        edges.push((p, me));
    }
    for c in &node.children {
        flatten(c, Some(me), labels, edges);
    }
}
