//! Brute-force reference matcher for tests.
//!
//! Grows connected vertex sets one vertex at a time, dropping sets already
//! seen (a canonicality check), and tests each complete set against the
//! pattern (an isomorphism check). Anti-edges and anti-vertices are checked
//! straight from their definitions. Nothing here uses exploration plans.

use std::collections::{BTreeSet, HashMap, HashSet};

use patmine::matcher::UNMATCHED;
use patmine::{DataGraph, Label, MatchMode, Pattern};
use rand::Rng;

/// Largest data graph the oracle accepts.
pub const MAX_GRAPH_VERTICES: usize = 14;
/// Largest pattern the oracle accepts.
pub const MAX_PATTERN_VERTICES: usize = 7;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub partial_matches: u64,
    pub canonicality_checks: u64,
    pub isomorphism_checks: u64,
}

#[derive(Debug, Clone, Default)]
pub struct OracleRun {
    /// Orbit-minimal representatives, internal ids, [`UNMATCHED`] for
    /// anti-vertices.
    pub matches: BTreeSet<Vec<u32>>,
    pub counters: Counters,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Refusal {
    GraphTooLarge(usize),
    PatternTooLarge(usize),
}

/// All permutations of `0..n` (Heap's algorithm).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = vec![a.clone()];
    let mut c = vec![0; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(a.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// Automorphisms by trying every permutation.
pub fn automorphisms(p: &Pattern) -> Vec<Vec<usize>> {
    let n = p.len();
    permutations(n)
        .into_iter()
        .filter(|s| {
            (0..n).all(|u| p.label(u) == p.label(s[u]))
                && (0..n).all(|u| (u + 1..n).all(|v| p.edge_kind(u, v) == p.edge_kind(s[u], s[v])))
        })
        .collect()
}

/// Smallest mapping (as a tuple over pattern vertices) among the
/// automorphic variants of `m`.
pub fn orbit_min(m: &[u32], auts: &[Vec<usize>]) -> Vec<u32> {
    auts.iter()
        .map(|s| {
            let mut t = vec![UNMATCHED; m.len()];
            for (u, &v) in m.iter().enumerate() {
                t[s[u]] = v;
            }
            t
        })
        .min()
        .unwrap_or_else(|| m.to_vec())
}

/// The pattern whose matches `mode` asks for: vertex-induced matching
/// forbids every edge the pattern does not have.
pub fn matched_pattern(p: &Pattern, mode: MatchMode) -> Pattern {
    let mut q = p.clone();
    if mode == MatchMode::VertexInduced {
        let regular = p.regular_vertices();
        for (i, &u) in regular.iter().enumerate() {
            for &v in &regular[i + 1..] {
                if p.edge_kind(u, v).is_none() {
                    q.add_anti_edge(u, v).unwrap();
                }
            }
        }
    }
    q
}

/// Normalizes a list of matches to orbit-minimal representatives.
pub fn normalize(p: &Pattern, mode: MatchMode, matches: impl IntoIterator<Item = Vec<u32>>) -> BTreeSet<Vec<u32>> {
    let auts = automorphisms(&matched_pattern(p, mode));
    matches.into_iter().map(|m| orbit_min(&m, &auts)).collect()
}

fn label_ok(want: Option<Label>, g: &DataGraph, v: u32) -> bool {
    want.is_none_or(|l| g.label(v) == Some(l))
}

/// True when every anti-edge and anti-vertex constraint holds for `f`.
fn constraints_hold(p: &Pattern, g: &DataGraph, f: &[u32]) -> bool {
    for (u, v) in p.anti_edges() {
        if p.is_regular(u) && p.is_regular(v) && g.has_edge(f[u], f[v]) {
            return false;
        }
    }
    for a in p.anti_vertices() {
        let nbrs: Vec<usize> = p.anti_neighbors(a).collect();
        let excluded: HashSet<u32> = nbrs.iter().flat_map(|&w| p.neighbors(w)).map(|y| f[y]).collect();
        let witness = g.vertices().any(|x| {
            label_ok(p.label(a), g, x)
                && !excluded.contains(&x)
                && nbrs.iter().all(|&w| g.has_edge(f[w], x))
        });
        if witness {
            return false;
        }
    }
    true
}

fn pair_bit(i: usize, j: usize) -> u64 {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    1 << (a * MAX_PATTERN_VERTICES + b)
}

fn degrees(mask: u64, k: usize) -> Vec<u32> {
    let mut d = vec![0; k];
    for i in 0..k {
        for j in i + 1..k {
            if mask & pair_bit(i, j) != 0 {
                d[i] += 1;
                d[j] += 1;
            }
        }
    }
    d.sort_unstable();
    d
}

/// Search state for one oracle run, in local coordinates: regular vertex
/// `regular[i]` is position `i`, the `j`-th element of a vertex set is
/// position `j`.
struct Local<'a> {
    p: &'a Pattern,
    g: &'a DataGraph,
    regular: Vec<usize>,
    edges: Vec<(usize, usize)>,
    degree_profile: Vec<u32>,
    perms: Vec<Vec<usize>>,
}

impl Local<'_> {
    /// Every bijection from the regular vertices onto `set` whose true
    /// edges land exactly on `edges` and whose constraints hold.
    fn bijections(&self, set: &[u32], edges: u64, counters: &mut Counters, out: &mut Vec<Vec<u32>>) {
        counters.isomorphism_checks += 1;
        if degrees(edges, set.len()) != self.degree_profile {
            return;
        }
        for perm in &self.perms {
            counters.partial_matches += 1;
            let image = self.edges.iter().fold(0, |m, &(a, b)| m | pair_bit(perm[a], perm[b]));
            if image != edges {
                continue;
            }
            let mut f = vec![UNMATCHED; self.p.len()];
            for (i, &u) in self.regular.iter().enumerate() {
                f[u] = set[perm[i]];
            }
            if self.regular.iter().all(|&u| label_ok(self.p.label(u), self.g, f[u])) && constraints_hold(self.p, self.g, &f) {
                out.push(f);
            }
        }
    }
}

fn combinations<T: Copy>(items: &[T], k: usize) -> Vec<Vec<T>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if items.len() < k {
        return Vec::new();
    }
    let mut out = combinations(&items[1..], k - 1);
    for c in &mut out {
        c.insert(0, items[0]);
    }
    out.extend(combinations(&items[1..], k));
    out
}

/// Brute-force canonical matches of `pattern` in `graph`.
pub fn brute_force_matches(pattern: &Pattern, graph: &DataGraph, mode: MatchMode) -> Result<OracleRun, Refusal> {
    if graph.vertex_count() > MAX_GRAPH_VERTICES {
        return Err(Refusal::GraphTooLarge(graph.vertex_count()));
    }
    if pattern.len() > MAX_PATTERN_VERTICES {
        return Err(Refusal::PatternTooLarge(pattern.len()));
    }
    let q = matched_pattern(pattern, mode);
    let p = &q;
    let regular = p.regular_vertices();
    let k = regular.len();
    let e = p.true_edges().len();
    let auts = automorphisms(p);
    let mut run = OracleRun::default();

    // connected k-subsets, grown vertex by vertex
    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    let mut frontier: Vec<Vec<u32>> = graph.vertices().map(|v| vec![v]).collect();
    run.counters.partial_matches += frontier.len() as u64;
    for _ in 1..k {
        let mut next = Vec::new();
        for set in &frontier {
            let mut grow: BTreeSet<u32> = BTreeSet::new();
            for &v in set {
                grow.extend(graph.neighbors(v).iter().copied().filter(|x| !set.contains(x)));
            }
            for x in grow {
                let mut s = set.clone();
                s.push(x);
                s.sort_unstable();
                run.counters.partial_matches += 1;
                run.counters.canonicality_checks += 1;
                if seen.insert(s.clone()) {
                    next.push(s);
                }
            }
        }
        frontier = next;
    }

    let index: HashMap<usize, usize> = regular.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let edges: Vec<(usize, usize)> = p.true_edges().into_iter().map(|(u, v)| (index[&u], index[&v])).collect();
    let local = Local {
        p,
        g: graph,
        degree_profile: degrees(edges.iter().fold(0, |m, &(a, b)| m | pair_bit(a, b)), k),
        edges,
        regular,
        perms: permutations(k),
    };
    let mut found = Vec::new();
    for set in frontier {
        let induced: Vec<u64> = combinations(&(0..k).collect::<Vec<_>>(), 2)
            .into_iter()
            .filter(|c| graph.has_edge(set[c[0]], set[c[1]]))
            .map(|c| pair_bit(c[0], c[1]))
            .collect();
        let edge_sets: Vec<u64> = match mode {
            MatchMode::VertexInduced => vec![induced.iter().fold(0, |m, b| m | b)],
            MatchMode::EdgeInduced => combinations(&induced, e)
                .into_iter()
                .map(|c| c.iter().fold(0, |m, b| m | b))
                .collect(),
        };
        for es in edge_sets {
            found.clear();
            local.bijections(&set, es, &mut run.counters, &mut found);
            for f in &found {
                run.matches.insert(orbit_min(f, &auts));
            }
        }
    }
    Ok(run)
}

/// The constrained patterns of the anti-edge and anti-vertex examples,
/// named `p_a` to `p_f`.
pub fn constrained_patterns() -> Vec<(&'static str, Pattern)> {
    let cycle = || Pattern::from_edges(&[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
    let mut pa = cycle();
    pa.add_anti_edge(1, 3).unwrap();
    let mut pb = cycle();
    pb.add_anti_edge(0, 2).unwrap().add_anti_edge(1, 3).unwrap();
    let mut pc = Pattern::chain(2).unwrap();
    pc.add_anti_edge(0, 2).unwrap().add_anti_edge(1, 2).unwrap();
    let mut pd = Pattern::chain(3).unwrap();
    pd.add_anti_edge(1, 3).unwrap();
    let mut pe = Pattern::clique(3).unwrap();
    pe.add_anti_edge(0, 3).unwrap().add_anti_edge(2, 3).unwrap();
    let mut pf = Pattern::chain(3).unwrap();
    pf.add_anti_edge(0, 3)
        .unwrap()
        .add_anti_edge(1, 3)
        .unwrap()
        .add_anti_edge(1, 4)
        .unwrap();
    vec![("p_a", pa), ("p_b", pb), ("p_c", pc), ("p_d", pd), ("p_e", pe), ("p_f", pf)]
}

/// Unconstrained connected patterns on 2 to `max_vertices` vertices plus
/// the constrained examples.
pub fn pattern_suite(max_vertices: usize) -> Vec<(String, Pattern)> {
    let mut out = Vec::new();
    for n in 2..=max_vertices {
        for p in Pattern::generate_all_vertex_induced(n).unwrap() {
            out.push((p.display_name(), p));
        }
    }
    out.extend(constrained_patterns().into_iter().map(|(n, p)| (n.to_string(), p)));
    out
}

/// Erdős–Rényi graph on vertices `0..n`, isolated vertices kept.
pub fn gnp<R: Rng>(n: u64, p: f64, rng: &mut R) -> DataGraph {
    gnp_labeled(n, p, 0, rng)
}

/// Like [`gnp`], with uniform labels in `0..labels` when `labels > 0`.
pub fn gnp_labeled<R: Rng>(n: u64, p: f64, labels: u32, rng: &mut R) -> DataGraph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    let map: HashMap<u64, Label> = (0..n).map(|v| (v, rng.random_range(0..labels.max(1)))).collect();
    DataGraph::from_parts((0..n).collect(), edges, (labels > 0).then_some(&map)).unwrap()
}

/// Six-vertex graph used for the exploration-cost comparison: two
/// triangles joined by a path, with a pendant.
pub fn exploration_example() -> DataGraph {
    DataGraph::from_edges([(1, 2), (1, 3), (2, 3), (3, 4), (4, 5), (4, 6), (5, 6)], None).unwrap()
}

/// Exact GCC numerator and denominator: `(3 * triangles, wedges)`.
pub fn clustering_ratio(g: &DataGraph) -> (u64, u64) {
    let mut t = 0;
    for u in g.vertices() {
        for &v in g.neighbors(u).iter().filter(|&&v| v > u) {
            t += g.neighbors(v).iter().filter(|&&w| w > v && g.has_edge(u, w)).count() as u64;
        }
    }
    let s = g
        .vertices()
        .map(|v| {
            let d = g.degree(v) as u64;
            d * d.saturating_sub(1) / 2
        })
        .sum();
    (3 * t, s)
}

/// Clique number by exhaustive branch and bound.
pub fn clique_number(g: &DataGraph) -> usize {
    fn grow(g: &DataGraph, cand: Vec<u32>, size: usize, best: &mut usize) {
        if size > *best {
            *best = size;
        }
        for (i, &v) in cand.iter().enumerate() {
            if size + cand.len() - i <= *best {
                return;
            }
            let next: Vec<u32> = cand[i + 1..].iter().copied().filter(|&w| g.has_edge(v, w)).collect();
            grow(g, next, size + 1, best);
        }
    }
    let mut best = 0;
    grow(g, g.vertices().collect(), 0, &mut best);
    best
}
