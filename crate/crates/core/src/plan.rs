//! Compilation of a pattern into an exploration plan.
//!
//! The plan holds the symmetry-breaking partial order, the core (subgraph
//! induced by a minimum connected vertex cover of the regular vertices) and
//! the matching orders: totally ordered views of the core that are matched by
//! walking data vertices in id order.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::canon::{self, pair_kind};
use crate::error::PatternError;
use crate::pattern::{bits, Label, Pattern};

/// Ordering constraints `a < b` between pattern vertices: the data vertex
/// matched to `a` must have a smaller id than the one matched to `b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialOrder {
    reduced: Vec<(usize, usize)>,
    // after[a]: every b with a < b in the transitive closure
    after: Vec<u32>,
}

impl PartialOrder {
    pub fn empty(n: usize) -> Self {
        Self {
            reduced: Vec::new(),
            after: vec![0; n],
        }
    }

    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self, PatternError> {
        let mut after = vec![0u32; n];
        for &(a, b) in pairs {
            if a >= n {
                return Err(PatternError::UnknownVertex(a));
            }
            if b >= n {
                return Err(PatternError::UnknownVertex(b));
            }
            after[a] |= 1 << b;
        }
        for k in 0..n {
            for a in 0..n {
                if after[a] & (1 << k) != 0 {
                    after[a] |= after[k];
                }
            }
        }
        if (0..n).any(|a| after[a] & (1 << a) != 0) {
            return Err(PatternError::Invalid("partial order has a cycle".into()));
        }
        let mut reduced = Vec::new();
        for a in 0..n {
            for b in bits(after[a]) {
                if !bits(after[a]).any(|c| after[c] & (1 << b) != 0) {
                    reduced.push((a, b));
                }
            }
        }
        Ok(Self { reduced, after })
    }

    /// Transitive reduction, sorted.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.reduced
    }

    pub fn is_empty(&self) -> bool {
        self.reduced.is_empty()
    }

    /// `a < b` in the transitive closure.
    pub fn precedes(&self, a: usize, b: usize) -> bool {
        self.after[a] & (1 << b) != 0
    }

    pub(crate) fn successors(&self, a: usize) -> u32 {
        self.after[a]
    }

    pub(crate) fn predecessors(&self, b: usize) -> u32 {
        (0..self.after.len())
            .filter(|&a| self.precedes(a, b))
            .fold(0, |m, a| m | 1 << a)
    }

    /// Whether `values` (indexed by pattern vertex) meets every constraint.
    pub fn is_satisfied_by<T: Ord>(&self, values: &[T]) -> bool {
        self.reduced.iter().all(|&(a, b)| values[a] < values[b])
    }
}

/// Backtracking search for automorphisms that agree with `colors`, which
/// must be invariant under the automorphisms being searched for.
struct AutSearch<'a> {
    p: &'a Pattern,
    colors: Vec<u32>,
    order: Vec<usize>,
    map: Vec<usize>,
    used: u32,
}

impl<'a> AutSearch<'a> {
    fn new(p: &'a Pattern, colors: Vec<u32>, first: &[usize]) -> Self {
        let n = p.len();
        let mut order: Vec<usize> = first.to_vec();
        let mut placed = first.iter().fold(0u32, |m, &v| m | 1 << v);
        while order.len() < n {
            // most constrained next: the vertex with the most placed neighbours
            let v = (0..n)
                .filter(|&v| placed & (1 << v) == 0)
                .max_by_key(|&v| {
                    let links = (p.true_mask(v) | p.anti_mask(v)) & placed;
                    (links.count_ones(), std::cmp::Reverse(v))
                })
                .unwrap();
            placed |= 1 << v;
            order.push(v);
        }
        Self {
            p,
            colors,
            order,
            map: vec![usize::MAX; n],
            used: 0,
        }
    }

    fn fits(&self, depth: usize, w: usize) -> bool {
        let v = self.order[depth];
        self.used & (1 << w) == 0
            && self.colors[v] == self.colors[w]
            && self.order[..depth]
                .iter()
                .all(|&x| pair_kind(self.p, v, x) == pair_kind(self.p, w, self.map[x]))
    }

    /// Calls `visit` on each automorphism extending `forced` (pairs applied
    /// to the first vertices of the order). Stops when `visit` returns true.
    fn run(&mut self, forced: &[usize], visit: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        self.descend(0, forced, visit)
    }

    fn descend(
        &mut self,
        depth: usize,
        forced: &[usize],
        visit: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if depth == self.order.len() {
            return visit(&self.map);
        }
        let v = self.order[depth];
        let candidates: Vec<usize> = match forced.get(depth) {
            Some(&w) => vec![w],
            None => (0..self.p.len()).collect(),
        };
        for w in candidates {
            if !self.fits(depth, w) {
                continue;
            }
            self.map[v] = w;
            self.used |= 1 << w;
            let stop = self.descend(depth + 1, forced, visit);
            self.used &= !(1 << w);
            self.map[v] = usize::MAX;
            if stop {
                return true;
            }
        }
        false
    }
}

fn refined_colors(p: &Pattern, fixed: &[usize]) -> Vec<u32> {
    let mut colors = canon::initial_colors(p);
    canon::refine(p, &mut colors);
    for &v in fixed {
        canon::individualize(&mut colors, v);
        canon::refine(p, &mut colors);
    }
    colors
}

/// Every permutation of the pattern's vertices preserving true edges,
/// anti-edges (as a separate kind) and labels. Anti-vertices only map to
/// anti-vertices. Entry `v` of each result is the image of `v`.
pub fn automorphisms(p: &Pattern) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut search = AutSearch::new(p, refined_colors(p, &[]), &[]);
    search.run(&[], &mut |m| {
        out.push(m.to_vec());
        false
    });
    out.sort();
    out
}

/// Orbits of the regular vertices under the automorphisms fixing `fixed`
/// pointwise, each sorted, listed by smallest member.
fn regular_orbits(p: &Pattern, fixed: &[usize]) -> Vec<Vec<usize>> {
    let colors = refined_colors(p, fixed);
    let regular = p.regular_mask();
    let mut assigned = 0u32;
    let mut orbits = Vec::new();
    for v in bits(regular) {
        if assigned & (1 << v) != 0 {
            continue;
        }
        let mut orbit = vec![v];
        for w in bits(regular) {
            if w <= v || assigned & (1 << w) != 0 || colors[w] != colors[v] {
                continue;
            }
            let mut first = fixed.to_vec();
            first.push(v);
            let mut forced = fixed.to_vec();
            forced.push(w);
            let mut search = AutSearch::new(p, colors.clone(), &first);
            if search.run(&forced, &mut |_| true) {
                orbit.push(w);
                assigned |= 1 << w;
            }
        }
        assigned |= 1 << v;
        orbits.push(orbit);
    }
    orbits
}

/// Orbits of the regular vertices under the full automorphism group.
pub fn automorphism_orbits(p: &Pattern) -> Vec<Vec<usize>> {
    regular_orbits(p, &[])
}

/// Result of symmetry breaking: the constraints plus the order of the
/// automorphism group acting on the regular vertices.
#[derive(Debug, Clone)]
pub struct SymmetryBreaking {
    pub partial_order: PartialOrder,
    pub group_order: u64,
}

/// Orders symmetric vertices until only the identity (on regular vertices)
/// remains. Each round takes the largest non-trivial orbit of the current
/// stabiliser (smallest first member on ties), orders its smallest member
/// before the rest, and fixes that member.
pub fn break_symmetries(p: &Pattern) -> SymmetryBreaking {
    let mut fixed = Vec::new();
    let mut pairs = Vec::new();
    let mut group_order = 1u64;
    loop {
        let orbits = regular_orbits(p, &fixed);
        let Some(orbit) = orbits
            .into_iter()
            .filter(|o| o.len() > 1)
            .reduce(|best, o| if o.len() > best.len() { o } else { best })
        else {
            break;
        };
        let a = orbit[0];
        pairs.extend(orbit[1..].iter().map(|&b| (a, b)));
        group_order = group_order.saturating_mul(orbit.len() as u64);
        fixed.push(a);
    }
    SymmetryBreaking {
        partial_order: PartialOrder::from_pairs(p.len(), &pairs)
            .expect("orbit constraints are acyclic"),
        group_order,
    }
}

/// Smallest set of regular vertices that covers every true edge and every
/// anti-edge between regular vertices and induces a connected subgraph.
/// Among minimum covers the lexicographically smallest is returned.
/// Anti-edges of anti-vertices are not covered: those vertices are checked
/// after the match is complete.
pub fn min_connected_vertex_cover(p: &Pattern) -> Vec<usize> {
    let regular = p.regular_vertices();
    let regular_mask = p.regular_mask();
    let covered_edges: Vec<(usize, usize)> = p
        .true_edges()
        .into_iter()
        .chain(
            p.anti_edges()
                .into_iter()
                .filter(|&(u, v)| regular_mask & (1 << u) != 0 && regular_mask & (1 << v) != 0),
        )
        .collect();
    let is_cover = |set: u32| {
        covered_edges
            .iter()
            .all(|&(u, v)| set & (1 << u) != 0 || set & (1 << v) != 0)
    };
    let is_connected = |set: u32| {
        let mut seen = 1u32 << set.trailing_zeros();
        let mut frontier = seen;
        while frontier != 0 {
            let next = bits(frontier).fold(0, |m, u| m | p.true_mask(u)) & set;
            frontier = next & !seen;
            seen |= next;
        }
        seen == set
    };
    for size in 1..=regular.len() {
        let mut found = None;
        combinations(&regular, size, &mut |combo| {
            let set = combo.iter().fold(0u32, |m, &v| m | 1 << v);
            if is_cover(set) && is_connected(set) {
                found = Some(combo.to_vec());
                true
            } else {
                false
            }
        });
        if let Some(c) = found {
            return c;
        }
    }
    regular
}

/// Visits size-`k` subsets of `items` in lexicographic order until `f`
/// returns true.
fn combinations(items: &[usize], k: usize, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    fn go(
        items: &[usize],
        k: usize,
        start: usize,
        cur: &mut Vec<usize>,
        f: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if cur.len() == k {
            return f(cur);
        }
        for i in start..=items.len() - (k - cur.len()) {
            cur.push(items[i]);
            if go(items, k, i + 1, cur, f) {
                return true;
            }
            cur.pop();
        }
        false
    }
    go(items, k, 0, &mut Vec::with_capacity(k), f)
}

/// Upper bound on the total orders of a core that a plan may enumerate.
/// Long weakly symmetric patterns (e.g. a 14-vertex path) exceed it.
pub const MAX_CORE_ORDERINGS: usize = 100_000;

/// A totally ordered view of the core. Position `i` of the remapped core is
/// matched to the `i`-th smallest data vertex of a core match.
#[derive(Debug, Clone)]
pub struct MatchingOrder {
    sequences: Vec<Vec<usize>>,
    remapped_core: Pattern,
}

impl MatchingOrder {
    /// The first vertex sequence (position -> pattern vertex).
    pub fn sequence(&self) -> &[usize] {
        &self.sequences[0]
    }

    /// All vertex sequences that remap the core to this same ordered graph.
    /// A match of the remapped core yields one core match per sequence.
    pub fn sequences(&self) -> &[Vec<usize>] {
        &self.sequences
    }

    pub fn remapped_core(&self) -> &Pattern {
        &self.remapped_core
    }
}

/// Enumerates every ordering of `core` compatible with `po` and groups the
/// orderings whose remapped cores are identical.
pub fn compute_matching_orders(
    p: &Pattern,
    core: &[usize],
    po: &PartialOrder,
) -> Result<Vec<MatchingOrder>, PatternError> {
    let mut orders: Vec<MatchingOrder> = Vec::new();
    let mut index: HashMap<Vec<u8>, usize> = HashMap::new();
    let core_mask = core.iter().fold(0u32, |m, &v| m | 1 << v);
    let mut seq = Vec::with_capacity(core.len());
    let mut budget = MAX_CORE_ORDERINGS;
    linear_extensions(po, core, core_mask, 0, &mut seq, &mut budget, &mut |seq| {
        let remapped = p.induced(seq);
        let code = remapped.exact_code().as_bytes().to_vec();
        match index.get(&code) {
            Some(&i) => orders[i].sequences.push(seq.to_vec()),
            None => {
                index.insert(code, orders.len());
                orders.push(MatchingOrder {
                    sequences: vec![seq.to_vec()],
                    remapped_core: remapped,
                });
            }
        }
    });
    if budget == 0 {
        return Err(PatternError::TooManyOrderings(MAX_CORE_ORDERINGS));
    }
    Ok(orders)
}

/// Stops once `budget` orderings have been produced plus one more found.
fn linear_extensions(
    po: &PartialOrder,
    core: &[usize],
    core_mask: u32,
    placed: u32,
    seq: &mut Vec<usize>,
    budget: &mut usize,
    f: &mut dyn FnMut(&[usize]),
) {
    if seq.len() == core.len() {
        if *budget > 0 {
            f(seq);
        }
        *budget = budget.saturating_sub(1);
        return;
    }
    if *budget == 0 {
        return;
    }
    for &v in core {
        if placed & (1 << v) != 0 {
            continue;
        }
        let pending = po.predecessors(v) & core_mask & !placed;
        if pending != 0 {
            continue;
        }
        seq.push(v);
        linear_extensions(po, core, core_mask, placed | 1 << v, seq, budget, f);
        seq.pop();
    }
}

/// A regular vertex outside the core, completed by set operations over the
/// adjacency lists of its matched neighbours.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonCoreVertex {
    pub vertex: usize,
    pub core_neighbors: Vec<usize>,
    pub core_anti_neighbors: Vec<usize>,
    pub non_core_neighbors: Vec<usize>,
    pub non_core_anti_neighbors: Vec<usize>,
}

/// The matched neighbours of an anti-vertex must have no qualifying common
/// neighbour.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AntiVertexCheck {
    pub anti_vertex: usize,
    pub neighbors: Vec<usize>,
    pub label: Option<Label>,
}

#[derive(Debug, Clone)]
pub struct ExplorationPlan {
    pattern: Pattern,
    core: Vec<usize>,
    core_pattern: Pattern,
    partial_order: PartialOrder,
    group_order: u64,
    matching_orders: Vec<MatchingOrder>,
    non_core: Vec<NonCoreVertex>,
    anti_vertex_checks: Vec<AntiVertexCheck>,
}

impl ExplorationPlan {
    pub fn generate(p: &Pattern) -> Result<Self, PatternError> {
        Self::generate_with(p, true)
    }

    /// With `symmetry_breaking` off the partial order is empty and every
    /// automorphic copy of a match is produced.
    pub fn generate_with(p: &Pattern, symmetry_breaking: bool) -> Result<Self, PatternError> {
        p.validate()?;
        let sb = break_symmetries(p);
        let partial_order = if symmetry_breaking {
            sb.partial_order
        } else {
            PartialOrder::empty(p.len())
        };
        let core = min_connected_vertex_cover(p);
        let core_pattern = p.induced(&core);
        let matching_orders = compute_matching_orders(p, &core, &partial_order)?;
        let core_mask = core.iter().fold(0u32, |m, &v| m | 1 << v);
        let split = |mask: u32| -> (Vec<usize>, Vec<usize>) {
            bits(mask).partition(|&w| core_mask & (1 << w) != 0)
        };
        let non_core = p
            .regular_vertices()
            .into_iter()
            .filter(|&u| core_mask & (1 << u) == 0)
            .map(|u| {
                let (core_neighbors, non_core_neighbors) = split(p.true_mask(u));
                let (core_anti_neighbors, non_core_anti_neighbors) =
                    split(p.anti_mask(u) & p.regular_mask());
                NonCoreVertex {
                    vertex: u,
                    core_neighbors,
                    core_anti_neighbors,
                    non_core_neighbors,
                    non_core_anti_neighbors,
                }
            })
            .collect();
        let anti_vertex_checks = p
            .anti_vertices()
            .into_iter()
            .map(|a| AntiVertexCheck {
                anti_vertex: a,
                neighbors: p.anti_neighbors(a).collect(),
                label: p.label(a),
            })
            .collect();
        Ok(Self {
            pattern: p.clone(),
            core,
            core_pattern,
            partial_order,
            group_order: sb.group_order,
            matching_orders,
            non_core,
            anti_vertex_checks,
        })
    }

    pub fn pattern(&self) -> &Pattern {
        &self.pattern
    }

    pub fn core(&self) -> &[usize] {
        &self.core
    }

    pub fn core_pattern(&self) -> &Pattern {
        &self.core_pattern
    }

    pub fn partial_order(&self) -> &PartialOrder {
        &self.partial_order
    }

    /// Order of the automorphism group acting on the regular vertices.
    pub fn automorphism_count(&self) -> u64 {
        self.group_order
    }

    pub fn matching_orders(&self) -> &[MatchingOrder] {
        &self.matching_orders
    }

    pub fn non_core_vertices(&self) -> &[NonCoreVertex] {
        &self.non_core
    }

    pub fn anti_vertex_checks(&self) -> &[AntiVertexCheck] {
        &self.anti_vertex_checks
    }

    /// Stable, line-oriented rendering of the plan (1-based vertex ids).
    pub fn explain(&self) -> String {
        let ids = |vs: &[usize]| -> String {
            if vs.is_empty() {
                "-".to_string()
            } else {
                vs.iter().map(|v| (v + 1).to_string()).collect::<Vec<_>>().join(" ")
            }
        };
        let mut s = String::new();
        let _ = writeln!(s, "pattern {}", self.pattern.describe());
        let _ = writeln!(s, "automorphisms {}", self.group_order);
        let _ = writeln!(s, "core {}", ids(&self.core));
        let po: Vec<String> = self
            .partial_order
            .pairs()
            .iter()
            .map(|(a, b)| format!("{}<{}", a + 1, b + 1))
            .collect();
        let _ = writeln!(
            s,
            "partial-order {}",
            if po.is_empty() { "-".to_string() } else { po.join(" ") }
        );
        for (i, mo) in self.matching_orders.iter().enumerate() {
            let seqs: Vec<String> = mo.sequences().iter().map(|q| ids(q)).collect();
            let core = mo.remapped_core().describe();
            let _ = writeln!(
                s,
                "matching-order {} sequences [{}] remapped {}",
                i + 1,
                seqs.join("] ["),
                if core.is_empty() { "-" } else { &core }
            );
        }
        for nc in &self.non_core {
            let _ = writeln!(
                s,
                "non-core {} true {} anti {}",
                nc.vertex + 1,
                ids(&nc.core_neighbors),
                ids(&nc.core_anti_neighbors)
            );
        }
        for av in &self.anti_vertex_checks {
            let _ = writeln!(s, "anti-vertex {} neighbors {}", av.anti_vertex + 1, ids(&av.neighbors));
        }
        s
    }
}
