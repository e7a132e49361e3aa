//! Canonical labeling of small patterns by colour refinement and
//! individualisation, with twin pruning.

use crate::pattern::Pattern;

const NO_EDGE: u8 = 0;
const TRUE_EDGE: u8 = 1;
const ANTI_EDGE: u8 = 2;

pub(crate) struct Canon {
    pub code: Vec<u8>,
    /// vertex -> canonical position
    pub perm: Vec<usize>,
}

pub(crate) fn pair_kind(p: &Pattern, u: usize, v: usize) -> u8 {
    if p.true_mask(u) & (1 << v) != 0 {
        TRUE_EDGE
    } else if p.anti_mask(u) & (1 << v) != 0 {
        ANTI_EDGE
    } else {
        NO_EDGE
    }
}

fn vertex_key(p: &Pattern, v: usize) -> (u8, u8, u32) {
    let anti_vertex = u8::from(p.is_anti_vertex(v));
    match p.label(v) {
        Some(l) => (anti_vertex, 1, l),
        None => (anti_vertex, 0, 0),
    }
}

/// Assigns dense ranks to `keys`, preserving their order.
fn rank<K: Ord + Clone>(keys: &[K]) -> Vec<u32> {
    let mut sorted = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter()
        .map(|k| sorted.binary_search(k).unwrap() as u32)
        .collect()
}

pub(crate) fn initial_colors(p: &Pattern) -> Vec<u32> {
    let keys: Vec<_> = (0..p.len()).map(|v| vertex_key(p, v)).collect();
    rank(&keys)
}

fn cell_count(colors: &[u32]) -> usize {
    colors.iter().max().map_or(0, |&m| m as usize + 1)
}

/// Refines `colors` to the coarsest equitable partition below it.
pub(crate) fn refine(p: &Pattern, colors: &mut Vec<u32>) {
    let n = p.len();
    let mut cells = cell_count(colors);
    loop {
        let keys: Vec<(u32, Vec<(u8, u32)>)> = (0..n)
            .map(|v| {
                let mut sig: Vec<(u8, u32)> = (0..n)
                    .filter(|&w| w != v)
                    .filter_map(|w| match pair_kind(p, v, w) {
                        NO_EDGE => None,
                        k => Some((k, colors[w])),
                    })
                    .collect();
                sig.sort_unstable();
                (colors[v], sig)
            })
            .collect();
        let next = rank(&keys);
        let next_cells = cell_count(&next);
        *colors = next;
        if next_cells == cells {
            return;
        }
        cells = next_cells;
    }
}

pub(crate) fn individualize(colors: &mut Vec<u32>, v: usize) {
    let keys: Vec<(u32, u8)> = colors
        .iter()
        .enumerate()
        .map(|(x, &c)| (c, u8::from(x != v)))
        .collect();
    *colors = rank(&keys);
}

/// Swapping two twins is an automorphism fixing every other vertex.
pub(crate) fn twins(p: &Pattern, a: usize, b: usize) -> bool {
    let (ma, mb) = (!(1u32 << b), !(1u32 << a));
    p.label(a) == p.label(b)
        && p.is_anti_vertex(a) == p.is_anti_vertex(b)
        && p.true_mask(a) & ma == p.true_mask(b) & mb
        && p.anti_mask(a) & ma == p.anti_mask(b) & mb
}

/// Code of the pattern with vertices laid out as `order` (position -> vertex).
pub(crate) fn code_for(p: &Pattern, order: &[usize]) -> Vec<u8> {
    let n = order.len();
    let mut code = Vec::with_capacity(1 + 6 * n + n * n / 2);
    code.push(n as u8);
    for &v in order {
        let (anti_vertex, has_label, label) = vertex_key(p, v);
        code.push(anti_vertex);
        code.push(has_label);
        code.extend_from_slice(&label.to_be_bytes());
    }
    for i in 0..n {
        for j in i + 1..n {
            code.push(pair_kind(p, order[i], order[j]));
        }
    }
    code
}

pub(crate) fn canonical(p: &Pattern) -> Canon {
    let mut colors = initial_colors(p);
    refine(p, &mut colors);
    let mut best: Option<Canon> = None;
    search(p, colors, &mut best);
    best.unwrap_or(Canon {
        code: vec![0],
        perm: Vec::new(),
    })
}

fn search(p: &Pattern, colors: Vec<u32>, best: &mut Option<Canon>) {
    let n = p.len();
    let cells = cell_count(&colors);
    if cells == n {
        let mut order = vec![0; n];
        for (v, &c) in colors.iter().enumerate() {
            order[c as usize] = v;
        }
        let code = code_for(p, &order);
        if best.as_ref().is_none_or(|b| code < b.code) {
            *best = Some(Canon {
                code,
                perm: colors.iter().map(|&c| c as usize).collect(),
            });
        }
        return;
    }
    let mut sizes = vec![0usize; cells];
    for &c in &colors {
        sizes[c as usize] += 1;
    }
    let target = sizes.iter().position(|&s| s > 1).unwrap() as u32;
    let cell: Vec<usize> = (0..n).filter(|&v| colors[v] == target).collect();
    let mut tried: Vec<usize> = Vec::new();
    for &v in &cell {
        if tried.iter().any(|&t| twins(p, t, v)) {
            continue;
        }
        tried.push(v);
        let mut next = colors.clone();
        individualize(&mut next, v);
        refine(p, &mut next);
        search(p, next, best);
    }
}
