//! Query patterns: true edges, anti-edges, anti-vertices and labels.
//!
//! Vertices are numbered `0..len()` internally. The text format and every
//! human-readable rendering use 1-based ids (`u1`, `u2`, ...).

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::canon;
use crate::error::PatternError;

pub type Label = u32;

/// Hard limit imposed by the bitmask adjacency representation.
pub const MAX_VERTICES: usize = 32;
/// Largest edge count accepted by [`Pattern::generate_all_edge_induced`].
pub const MAX_GENERATED_EDGES: usize = 8;
/// Largest vertex count accepted by [`Pattern::generate_all_vertex_induced`].
pub const MAX_GENERATED_VERTICES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    True,
    Anti,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extension {
    /// Add one true edge, between existing vertices or to a new vertex.
    ByEdge,
    /// Add one new vertex joined by a single true edge.
    ByVertex,
}

/// Isomorphism-invariant code; equal codes mean isomorphic patterns
/// (edge kinds and labels included).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalCode(Vec<u8>);

impl CanonicalCode {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Display for CanonicalCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Pattern {
    adj: Vec<u32>,
    anti: Vec<u32>,
    labels: Vec<Option<Label>>,
}

impl Pattern {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_vertices(n: usize) -> Result<Self, PatternError> {
        if n > MAX_VERTICES {
            return Err(PatternError::TooLarge(MAX_VERTICES));
        }
        Ok(Self {
            adj: vec![0; n],
            anti: vec![0; n],
            labels: vec![None; n],
        })
    }

    /// Builds a pattern from true edges; the vertex count is one past the
    /// largest id mentioned.
    pub fn from_edges(edges: &[(usize, usize)]) -> Result<Self, PatternError> {
        let n = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
        let mut p = Self::with_vertices(n)?;
        for &(u, v) in edges {
            p.add_edge(u, v)?;
        }
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn add_vertex(&mut self) -> Result<usize, PatternError> {
        if self.len() == MAX_VERTICES {
            return Err(PatternError::TooLarge(MAX_VERTICES));
        }
        self.adj.push(0);
        self.anti.push(0);
        self.labels.push(None);
        Ok(self.len() - 1)
    }

    /// Accepts an existing id, or `len()` which appends a vertex.
    fn ensure_vertex(&mut self, u: usize) -> Result<(), PatternError> {
        match u.cmp(&self.len()) {
            std::cmp::Ordering::Less => Ok(()),
            std::cmp::Ordering::Equal => self.add_vertex().map(|_| ()),
            std::cmp::Ordering::Greater => Err(PatternError::UnknownVertex(u)),
        }
    }

    fn check_vertex(&self, u: usize) -> Result<(), PatternError> {
        if u < self.len() {
            Ok(())
        } else {
            Err(PatternError::UnknownVertex(u))
        }
    }

    fn insert(&mut self, u: usize, v: usize, kind: EdgeKind) -> Result<&mut Self, PatternError> {
        self.ensure_vertex(u)?;
        self.ensure_vertex(v)?;
        if u == v {
            return Err(PatternError::SelfLoop(u));
        }
        match self.edge_kind(u, v) {
            Some(EdgeKind::True) => return Err(PatternError::ConstraintConflict(u, v, "edge")),
            Some(EdgeKind::Anti) => {
                return Err(PatternError::ConstraintConflict(u, v, "anti-edge"))
            }
            None => {}
        }
        let masks = match kind {
            EdgeKind::True => &mut self.adj,
            EdgeKind::Anti => &mut self.anti,
        };
        masks[u] |= 1 << v;
        masks[v] |= 1 << u;
        Ok(self)
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<&mut Self, PatternError> {
        self.insert(u, v, EdgeKind::True)
    }

    pub fn add_anti_edge(&mut self, u: usize, v: usize) -> Result<&mut Self, PatternError> {
        self.insert(u, v, EdgeKind::Anti)
    }

    /// Removing an edge never fails on connectivity; that is checked when a
    /// plan is built.
    pub fn remove_edge(&mut self, u: usize, v: usize) -> Result<&mut Self, PatternError> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if !self.are_connected(u, v) {
            return Err(PatternError::MissingEdge(u, v, "edge"));
        }
        self.adj[u] &= !(1 << v);
        self.adj[v] &= !(1 << u);
        Ok(self)
    }

    pub fn remove_anti_edge(&mut self, u: usize, v: usize) -> Result<&mut Self, PatternError> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if !self.are_anti_adjacent(u, v) {
            return Err(PatternError::MissingEdge(u, v, "anti-edge"));
        }
        self.anti[u] &= !(1 << v);
        self.anti[v] &= !(1 << u);
        Ok(self)
    }

    /// `None` makes the vertex a wildcard.
    pub fn set_label(&mut self, u: usize, label: Option<Label>) -> Result<&mut Self, PatternError> {
        self.check_vertex(u)?;
        self.labels[u] = label;
        Ok(self)
    }

    pub fn label(&self, u: usize) -> Option<Label> {
        self.labels[u]
    }

    pub fn labels(&self) -> &[Option<Label>] {
        &self.labels
    }

    pub fn has_labels(&self) -> bool {
        self.labels.iter().any(Option::is_some)
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        bits(self.adj[u])
    }

    pub fn anti_neighbors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        bits(self.anti[u])
    }

    pub fn are_connected(&self, u: usize, v: usize) -> bool {
        self.adj[u] & (1 << v) != 0
    }

    pub fn are_anti_adjacent(&self, u: usize, v: usize) -> bool {
        self.anti[u] & (1 << v) != 0
    }

    pub fn edge_kind(&self, u: usize, v: usize) -> Option<EdgeKind> {
        if self.are_connected(u, v) {
            Some(EdgeKind::True)
        } else if self.are_anti_adjacent(u, v) {
            Some(EdgeKind::Anti)
        } else {
            None
        }
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].count_ones() as usize
    }

    pub(crate) fn true_mask(&self, u: usize) -> u32 {
        self.adj[u]
    }

    pub(crate) fn anti_mask(&self, u: usize) -> u32 {
        self.anti[u]
    }

    pub fn true_edges(&self) -> Vec<(usize, usize)> {
        pairs(&self.adj)
    }

    pub fn anti_edges(&self) -> Vec<(usize, usize)> {
        pairs(&self.anti)
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|m| m.count_ones() as usize).sum::<usize>() / 2
    }

    /// A vertex with at least one true edge.
    pub fn is_regular(&self, u: usize) -> bool {
        self.adj[u] != 0
    }

    /// A vertex joined to the rest of the pattern only through anti-edges.
    pub fn is_anti_vertex(&self, u: usize) -> bool {
        self.adj[u] == 0 && self.anti[u] != 0
    }

    pub fn regular_vertices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&u| self.is_regular(u)).collect()
    }

    pub fn anti_vertices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&u| self.is_anti_vertex(u)).collect()
    }

    pub(crate) fn regular_mask(&self) -> u32 {
        (0..self.len())
            .filter(|&u| self.is_regular(u))
            .fold(0, |m, u| m | 1 << u)
    }

    /// Checks the invariants a pattern must satisfy before it can be planned.
    pub fn validate(&self) -> Result<(), PatternError> {
        if self.edge_count() == 0 {
            return Err(PatternError::Invalid("pattern has no true edge".into()));
        }
        let regular = self.regular_mask();
        for u in 0..self.len() {
            if self.adj[u] == 0 && self.anti[u] == 0 {
                return Err(PatternError::Invalid(format!("u{} is isolated", u + 1)));
            }
            if self.is_anti_vertex(u) && self.anti[u] & !regular != 0 {
                return Err(PatternError::Invalid(format!(
                    "anti-vertex u{} is anti-adjacent to another anti-vertex",
                    u + 1
                )));
            }
        }
        let start = regular.trailing_zeros() as usize;
        let mut seen = 1u32 << start;
        let mut frontier = seen;
        while frontier != 0 {
            let mut next = 0;
            for u in bits(frontier) {
                next |= self.adj[u];
            }
            frontier = next & !seen;
            seen |= next;
        }
        if seen != regular {
            return Err(PatternError::Invalid(
                "regular vertices are not connected by true edges".into(),
            ));
        }
        Ok(())
    }

    /// Relabels vertices: vertex `v` becomes `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Pattern {
        let n = self.len();
        let mut q = Pattern::with_vertices(n).unwrap();
        for v in 0..n {
            q.labels[perm[v]] = self.labels[v];
            q.adj[perm[v]] = bits(self.adj[v]).fold(0, |m, w| m | 1 << perm[w]);
            q.anti[perm[v]] = bits(self.anti[v]).fold(0, |m, w| m | 1 << perm[w]);
        }
        q
    }

    /// Sub-pattern on `vertices`, renumbered in the order given.
    pub fn induced(&self, vertices: &[usize]) -> Pattern {
        let mut q = Pattern::with_vertices(vertices.len()).unwrap();
        for (i, &v) in vertices.iter().enumerate() {
            q.labels[i] = self.labels[v];
            for (j, &w) in vertices.iter().enumerate() {
                if self.are_connected(v, w) {
                    q.adj[i] |= 1 << j;
                } else if self.are_anti_adjacent(v, w) {
                    q.anti[i] |= 1 << j;
                }
            }
        }
        q
    }

    /// Equivalent pattern whose edge-induced matches are exactly the
    /// vertex-induced matches of `self`: every non-adjacent pair of regular
    /// vertices becomes anti-adjacent.
    pub fn to_vertex_induced(&self) -> Pattern {
        let mut q = self.clone();
        let regular = self.regular_mask();
        for u in bits(regular) {
            let missing = regular & !(1 << u) & !self.adj[u];
            q.anti[u] |= missing;
        }
        q
    }

    pub fn canonical_code(&self) -> CanonicalCode {
        CanonicalCode(canon::canonical(self).code)
    }

    /// Canonical code plus the relabeling (vertex -> canonical position)
    /// that produces it.
    pub fn canonical_form(&self) -> (CanonicalCode, Vec<usize>) {
        let c = canon::canonical(self);
        (CanonicalCode(c.code), c.perm)
    }

    /// The isomorphic copy of `self` laid out in canonical order.
    pub fn canonical(&self) -> Pattern {
        self.permuted(&canon::canonical(self).perm)
    }

    /// Layout-exact code: equal only for identical (not merely isomorphic)
    /// patterns.
    pub fn exact_code(&self) -> CanonicalCode {
        let order: Vec<usize> = (0..self.len()).collect();
        CanonicalCode(canon::code_for(self, &order))
    }

    pub fn clique(size: usize) -> Result<Pattern, PatternError> {
        check_special(size)?;
        let mut p = Pattern::with_vertices(size)?;
        for u in 0..size {
            for v in u + 1..size {
                p.add_edge(u, v)?;
            }
        }
        Ok(p)
    }

    /// One center (`u1`) and `size - 1` leaves.
    pub fn star(size: usize) -> Result<Pattern, PatternError> {
        check_special(size)?;
        let mut p = Pattern::with_vertices(size)?;
        for v in 1..size {
            p.add_edge(0, v)?;
        }
        Ok(p)
    }

    /// Path on `size` vertices.
    pub fn chain(size: usize) -> Result<Pattern, PatternError> {
        check_special(size)?;
        let mut p = Pattern::with_vertices(size)?;
        for v in 1..size {
            p.add_edge(v - 1, v)?;
        }
        Ok(p)
    }

    /// All connected unlabeled patterns with `size` edges, up to isomorphism.
    pub fn generate_all_edge_induced(size: usize) -> Result<Vec<Pattern>, PatternError> {
        if !(1..=MAX_GENERATED_EDGES).contains(&size) {
            return Err(PatternError::UnsupportedSize {
                size,
                min: 1,
                max: MAX_GENERATED_EDGES,
            });
        }
        let mut level = vec![Pattern::chain(2)?];
        for _ in 1..size {
            level = Pattern::extend(&level, Extension::ByEdge);
        }
        Ok(level)
    }

    /// All connected unlabeled graphs on `size` vertices, up to isomorphism.
    pub fn generate_all_vertex_induced(size: usize) -> Result<Vec<Pattern>, PatternError> {
        if !(2..=MAX_GENERATED_VERTICES).contains(&size) {
            return Err(PatternError::UnsupportedSize {
                size,
                min: 2,
                max: MAX_GENERATED_VERTICES,
            });
        }
        let mut seen = HashSet::new();
        let mut frontier = vec![Pattern::chain(2)?];
        let mut out = Vec::new();
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for p in frontier {
                if p.len() == size {
                    out.push(p.clone());
                }
                for q in Pattern::extend(std::slice::from_ref(&p), Extension::ByEdge) {
                    if q.len() <= size && seen.insert(q.canonical_code()) {
                        next.push(q);
                    }
                }
            }
            frontier = next;
        }
        sort_by_code(&mut out);
        Ok(out)
    }

    /// Every distinct pattern obtained by one growth step of any input
    /// pattern. New vertices are unlabeled; existing labels and anti-edges
    /// are kept. Output is deduplicated up to isomorphism and returned in
    /// canonical layout.
    pub fn extend(patterns: &[Pattern], mode: Extension) -> Vec<Pattern> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let mut push = |q: Pattern| {
            let (code, perm) = q.canonical_form();
            if seen.insert(code) {
                out.push(q.permuted(&perm));
            }
        };
        for p in patterns {
            let regular = p.regular_vertices();
            if mode == Extension::ByEdge {
                for (i, &u) in regular.iter().enumerate() {
                    for &v in &regular[i + 1..] {
                        if p.edge_kind(u, v).is_none() {
                            let mut q = p.clone();
                            q.add_edge(u, v).unwrap();
                            push(q);
                        }
                    }
                }
            }
            if p.len() < MAX_VERTICES {
                for &u in &regular {
                    let mut q = p.clone();
                    let w = q.add_vertex().unwrap();
                    q.add_edge(u, w).unwrap();
                    push(q);
                }
            }
        }
        sort_by_code(&mut out);
        out
    }

    /// Compact one-line rendering: `1-2` true edge, `1!3` anti-edge,
    /// `1:7` label.
    pub fn describe(&self) -> String {
        let mut parts: Vec<String> = Vec::new();
        parts.extend(self.true_edges().iter().map(|(u, v)| format!("{}-{}", u + 1, v + 1)));
        parts.extend(self.anti_edges().iter().map(|(u, v)| format!("{}!{}", u + 1, v + 1)));
        parts.extend(
            self.labels
                .iter()
                .enumerate()
                .filter_map(|(u, l)| l.map(|l| format!("{}:{l}", u + 1))),
        );
        parts.join(" ")
    }

    /// Conventional name for common unlabeled, constraint-free patterns.
    pub fn well_known_name(&self) -> Option<&'static str> {
        if self.has_labels() || !self.anti_edges().is_empty() {
            return None;
        }
        let code = self.canonical_code();
        known_names()
            .iter()
            .find(|(c, _)| *c == code)
            .map(|&(_, name)| name)
    }

    /// `well_known_name` or, failing that, the canonical description.
    pub fn display_name(&self) -> String {
        match self.well_known_name() {
            Some(n) => n.to_string(),
            None => self.canonical().describe(),
        }
    }

    /// Parses a file holding several patterns separated by blank lines.
    pub fn parse_many(text: &str) -> Result<Vec<Pattern>, PatternError> {
        let mut out = Vec::new();
        let mut block: Vec<(usize, &str)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                if !block.is_empty() {
                    out.push(parse_block(&block)?);
                    block.clear();
                }
            } else {
                block.push((i + 1, line));
            }
        }
        if !block.is_empty() {
            out.push(parse_block(&block)?);
        }
        Ok(out)
    }
}

fn check_special(size: usize) -> Result<(), PatternError> {
    if size < 2 {
        return Err(PatternError::UnsupportedSize {
            size,
            min: 2,
            max: MAX_VERTICES,
        });
    }
    if size > MAX_VERTICES {
        return Err(PatternError::TooLarge(MAX_VERTICES));
    }
    Ok(())
}

fn sort_by_code(patterns: &mut [Pattern]) {
    patterns.sort_by_cached_key(|p| p.canonical_code());
}

fn known_names() -> &'static [(CanonicalCode, &'static str)] {
    static NAMES: OnceLock<Vec<(CanonicalCode, &'static str)>> = OnceLock::new();
    NAMES.get_or_init(|| {
        let e = |edges: &[(usize, usize)]| Pattern::from_edges(edges).unwrap().canonical_code();
        vec![
            (e(&[(0, 1)]), "edge"),
            (e(&[(0, 1), (1, 2)]), "path3"),
            (e(&[(0, 1), (1, 2), (0, 2)]), "triangle"),
            (e(&[(0, 1), (1, 2), (2, 3)]), "path4"),
            (e(&[(0, 1), (0, 2), (0, 3)]), "star4"),
            (e(&[(0, 1), (1, 2), (2, 3), (3, 0)]), "cycle4"),
            (e(&[(0, 1), (1, 2), (0, 2), (2, 3)]), "tailed-triangle"),
            (e(&[(0, 1), (1, 2), (2, 3), (3, 0), (1, 3)]), "diamond"),
            (Pattern::clique(4).unwrap().canonical_code(), "clique4"),
        ]
    })
}

pub(crate) fn bits(mut mask: u32) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let b = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(b)
        }
    })
}

fn pairs(masks: &[u32]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (u, &m) in masks.iter().enumerate() {
        for v in bits(m) {
            if u < v {
                out.push((u, v));
            }
        }
    }
    out
}

fn parse_id(tok: &str, line: usize) -> Result<usize, PatternError> {
    match tok.parse::<usize>() {
        Ok(id) if id >= 1 => Ok(id - 1),
        _ => Err(PatternError::Parse {
            line,
            msg: format!("expected a vertex id >= 1, found {tok:?}"),
        }),
    }
}

fn parse_block(lines: &[(usize, &str)]) -> Result<Pattern, PatternError> {
    let mut edges = Vec::new();
    let mut labels = Vec::new();
    for &(line, text) in lines {
        let text = text.trim();
        if let Some(rest) = text.strip_prefix("#label") {
            let toks: Vec<&str> = rest.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(PatternError::Parse {
                    line,
                    msg: "expected `#label <vertex> <label>`".into(),
                });
            }
            let label = toks[1].parse::<Label>().map_err(|_| PatternError::Parse {
                line,
                msg: format!("bad label {:?}", toks[1]),
            })?;
            labels.push((line, parse_id(toks[0], line)?, label));
            continue;
        }
        if text.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(PatternError::Parse {
                line,
                msg: "expected `u v` or `u !v`".into(),
            });
        }
        let u = parse_id(toks[0], line)?;
        let (anti, v) = match toks[1].strip_prefix('!') {
            Some(v) => (true, parse_id(v, line)?),
            None => (false, parse_id(toks[1], line)?),
        };
        edges.push((line, u, v, anti));
    }
    let n = edges
        .iter()
        .map(|&(_, u, v, _)| u.max(v) + 1)
        .chain(labels.iter().map(|&(_, u, _)| u + 1))
        .max()
        .unwrap_or(0);
    let mut p = Pattern::with_vertices(n).map_err(|e| PatternError::Parse {
        line: lines[0].0,
        msg: e.to_string(),
    })?;
    for (line, u, v, anti) in edges {
        let r = if anti {
            p.add_anti_edge(u, v)
        } else {
            p.add_edge(u, v)
        };
        r.map_err(|e| PatternError::Parse {
            line,
            msg: e.to_string(),
        })?;
    }
    for (_, u, l) in labels {
        p.set_label(u, Some(l))?;
    }
    Ok(p)
}

impl FromStr for Pattern {
    type Err = PatternError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut all = Pattern::parse_many(s)?;
        match all.len() {
            1 => Ok(all.pop().unwrap()),
            n => Err(PatternError::Parse {
                line: 1,
                msg: format!("expected exactly one pattern, found {n}"),
            }),
        }
    }
}

/// Writes the text format accepted by [`Pattern::parse_many`].
impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (u, v) in self.true_edges() {
            writeln!(f, "{} {}", u + 1, v + 1)?;
        }
        for (u, v) in self.anti_edges() {
            writeln!(f, "{} !{}", u + 1, v + 1)?;
        }
        for (u, l) in self.labels.iter().enumerate() {
            if let Some(l) = l {
                writeln!(f, "#label {} {l}", u + 1)?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pattern[{}; {}]", self.len(), self.describe())
    }
}
