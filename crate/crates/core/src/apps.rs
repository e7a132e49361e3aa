//! Mining applications built on the matcher.

use std::collections::{BTreeMap, HashMap};

use crate::aggregation::{Aggregator, BitmapKind, DomainMap};
use crate::error::Error;
use crate::graph::DataGraph;
use crate::matcher::{count, plan_for, run_plan, Control, MatchConfig, MatchMode, MatchStats};
use crate::pattern::{CanonicalCode, Extension, Label, Pattern};
use crate::plan::automorphism_orbits;

/// Matches a worker accumulates between publish attempts.
const PUBLISH_EVERY: u64 = 256;

/// Graphs with more vertices than this use compressed domain bitmaps.
const COMPRESSED_ABOVE: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotifCount {
    pub name: String,
    pub pattern: Pattern,
    pub count: u64,
}

/// Vertex-induced counts of every connected `k`-vertex pattern, sorted by
/// name.
pub fn motif_count(k: usize, graph: &DataGraph, config: &MatchConfig) -> Result<Vec<MotifCount>, Error> {
    if !(3..=5).contains(&k) {
        return Err(Error::Config(format!("motif size {k} outside 3..=5")));
    }
    let cfg = config.clone().mode(MatchMode::VertexInduced);
    let mut out = Vec::new();
    for p in Pattern::generate_all_vertex_induced(k)? {
        out.push(MotifCount {
            name: p.display_name(),
            count: count(&p, graph, &cfg)?,
            pattern: p,
        });
    }
    out.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(out)
}

pub fn clique_count(k: usize, graph: &DataGraph, config: &MatchConfig) -> Result<u64, Error> {
    if k < 3 {
        return Err(Error::Config(format!("clique size {k} below 3")));
    }
    count(&Pattern::clique(k)?, graph, &config.clone().mode(MatchMode::EdgeInduced))
}

/// Counts per pattern, honoring labels and constraints. A pattern that
/// fails validation is reported with its (1-based) position.
pub fn pattern_match(patterns: &[Pattern], graph: &DataGraph, config: &MatchConfig) -> Result<Vec<u64>, Error> {
    for (i, p) in patterns.iter().enumerate() {
        p.validate()
            .map_err(|e| Error::Config(format!("pattern {}: {e}", i + 1)))?;
    }
    patterns.iter().map(|p| count(p, graph, config)).collect()
}

/// Whether `pattern` occurs at all; exploration stops at the first match.
pub fn exists(pattern: &Pattern, graph: &DataGraph, config: &MatchConfig) -> Result<(bool, MatchStats), Error> {
    let control = Control::new();
    let plan = plan_for(pattern, config)?;
    let (found, stats) = run_plan(&plan, graph, config, &control, |_| false, |f, _, c| {
        *f = true;
        c.stop_exploration();
    });
    Ok((found.into_iter().any(|f| f), stats))
}

pub fn exists_clique(k: usize, graph: &DataGraph, config: &MatchConfig) -> Result<(bool, MatchStats), Error> {
    if k < 2 {
        return Err(Error::Config(format!("clique size {k} below 2")));
    }
    exists(&Pattern::clique(k)?, graph, &config.clone().mode(MatchMode::EdgeInduced))
}

/// Number of paths of length two, `sum_v C(deg v, 2)`.
pub fn wedge_count(graph: &DataGraph) -> u64 {
    graph
        .vertices()
        .map(|v| {
            let d = graph.degree(v) as u64;
            d * d.saturating_sub(1) / 2
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CcOutcome {
    pub holds: bool,
    /// Triangles seen; a lower bound when the run stopped early.
    pub triangles: u64,
    /// Edge-induced 3-star matches.
    pub triplets: u64,
    pub stopped: bool,
}

/// `bound` as `m / 2^k` exactly; `bound` is finite and non-negative.
fn dyadic(bound: f64) -> (u64, u32) {
    let bits = bound.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as u32;
    let frac = bits & ((1 << 52) - 1);
    let (mut m, mut k) = if exp == 0 { (frac, 1074) } else { (frac | 1 << 52, 1075 - exp) };
    while m != 0 && m % 2 == 0 && k > 0 {
        m /= 2;
        k -= 1;
    }
    (m, k)
}

/// Exact test of `3 * triangles / triplets >= bound`.
fn reaches(triangles: u64, triplets: u64, bound: f64) -> bool {
    if triplets == 0 {
        return bound <= 0.0;
    }
    let (m, k) = dyadic(bound);
    let prod = u128::from(m) * u128::from(triplets);
    // smallest integer at least prod / 2^k
    let need = if k >= 127 {
        u128::from(prod > 0)
    } else {
        (prod + (1u128 << k) - 1) >> k
    };
    3 * u128::from(triangles) >= need
}

/// Decides whether the global clustering coefficient `3t / s` reaches
/// `bound`, where `s` is the number of edge-induced 3-star matches. Triangle
/// counting stops as soon as the aggregated count settles the question.
pub fn cc_bound(graph: &DataGraph, bound: f64, config: &MatchConfig) -> Result<CcOutcome, Error> {
    if !(0.0..=1.0).contains(&bound) {
        return Err(Error::Config(format!("bound {bound} outside [0, 1]")));
    }
    let cfg = config.clone().mode(MatchMode::EdgeInduced);
    let triplets = count(&Pattern::star(3)?, graph, &cfg)?;
    let plan = plan_for(&Pattern::clique(3)?, &cfg)?;
    let control = Control::new();
    let agg = Aggregator::new(cfg.threads.max(1), || 0u64, |g, v| *g += v);
    let (locals, stats) = agg.run(
        &control,
        |&t, c| {
            if reaches(t, triplets, bound) {
                c.stop_exploration();
            }
        },
        || {
            run_plan(&plan, graph, &cfg, &control, |w| (w, 0u64), |(w, local), _, _| {
                *local += 1;
                agg.publish(*w, local);
            })
        },
    );
    let triangles = agg.finish(locals.into_iter().map(|(_, l)| l));
    Ok(CcOutcome {
        holds: reaches(triangles, triplets, bound),
        triangles,
        triplets,
        stopped: stats.stopped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequentPattern {
    /// Fully labeled, in canonical layout.
    pub pattern: Pattern,
    pub code: CanonicalCode,
    pub support: u64,
}

type Bins = HashMap<Vec<Label>, DomainMap>;

/// Frequent labeled patterns with up to `max_edges` edges and MNI support
/// of at least `tau`. Starts from the unlabeled edge and discovers labels
/// from the matches; every data vertex must carry a label.
pub fn fsm(graph: &DataGraph, max_edges: usize, tau: u64, config: &MatchConfig) -> Result<Vec<FrequentPattern>, Error> {
    if !graph.is_labeled() || graph.vertices().any(|v| graph.label(v).is_none()) {
        return Err(Error::Config("frequent subgraph mining needs a label for every vertex".into()));
    }
    if max_edges == 0 {
        return Ok(Vec::new());
    }
    let cfg = config.clone().mode(MatchMode::EdgeInduced);
    let mut out = Vec::new();
    let mut candidates = vec![Pattern::chain(2)?];
    for level in 1..=max_edges {
        let mut found: BTreeMap<CanonicalCode, (Pattern, DomainMap)> = BTreeMap::new();
        for q in &candidates {
            for (labels, dm) in discover_labels(q, graph, &cfg)? {
                let mut p = q.clone();
                for (u, l) in labels.into_iter().enumerate() {
                    p.set_label(u, Some(l))?;
                }
                let (code, perm) = p.canonical_form();
                let dm = dm.permuted(&perm);
                match found.get_mut(&code) {
                    Some((_, acc)) => acc.union_with(&dm),
                    None => {
                        found.insert(code, (p.permuted(&perm), dm));
                    }
                }
            }
        }
        let mut frequent = Vec::new();
        for (code, (p, mut dm)) in found {
            dm.symmetrize(&automorphism_orbits(&p));
            let support = dm.mni_support();
            if support >= tau {
                frequent.push(p.clone());
                out.push(FrequentPattern { pattern: p, code, support });
            }
        }
        if level == max_edges || frequent.is_empty() {
            break;
        }
        candidates = Pattern::extend(&frequent, Extension::ByEdge);
    }
    Ok(out)
}

/// Matches `q` and bins domains by the label vector of each match.
fn discover_labels(q: &Pattern, graph: &DataGraph, cfg: &MatchConfig) -> Result<Bins, Error> {
    let plan = plan_for(q, cfg)?;
    let control = Control::new();
    let n = q.len();
    let kind = if graph.vertex_count() > COMPRESSED_ABOVE { BitmapKind::Compressed } else { BitmapKind::Dense };
    let agg = Aggregator::new(cfg.threads.max(1), Bins::new, |g: &mut Bins, v: Bins| {
        for (k, dm) in v {
            match g.get_mut(&k) {
                Some(acc) => acc.union_with(&dm),
                None => {
                    g.insert(k, dm);
                }
            }
        }
    });
    let (locals, _) = agg.run(&control, |_, _| {}, || {
        run_plan(
            &plan,
            graph,
            cfg,
            &control,
            |w| (w, 0u64, Bins::new()),
            |(w, since, bins), m, _| {
                let labels: Vec<Label> = (0..n).map(|u| m.label(u).expect("labeled graph")).collect();
                bins.entry(labels)
                    .or_insert_with(|| DomainMap::new(n, kind))
                    .insert(m.internal());
                *since += 1;
                if *since >= PUBLISH_EVERY && agg.publish(*w, bins) {
                    *since = 0;
                }
            },
        )
    });
    Ok(agg.finish(locals.into_iter().map(|(_, _, b)| b)))
}

/// `code<TAB>support` lines in code order.
pub fn support_table(patterns: &[FrequentPattern]) -> String {
    let mut rows: Vec<(String, u64)> = patterns.iter().map(|f| (f.code.to_string(), f.support)).collect();
    rows.sort();
    rows.iter().map(|(c, s)| format!("{c}\t{s}\n")).collect()
}
