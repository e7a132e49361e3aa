use std::collections::BTreeSet;

use patmine::matcher::{collect_matches, count};
use patmine::plan::min_connected_vertex_cover;
use patmine::{DataGraph, ExplorationPlan, MatchConfig, MatchMode, Pattern, Traversal};
use proptest::prelude::*;

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect()
}

/// Connected pattern on 2..=5 vertices; pairs not chosen as edges may become anti-edges.
fn pattern() -> impl Strategy<Value = Pattern> {
    (2usize..=5)
        .prop_flat_map(|n| (Just(n), any::<u16>(), any::<u16>()))
        .prop_filter_map("disconnected", |(n, edges, anti)| {
            let mut p = Pattern::with_vertices(n).ok()?;
            for (i, &(u, v)) in pairs(n).iter().enumerate() {
                if edges >> i & 1 == 1 {
                    p.add_edge(u, v).ok()?;
                } else if anti >> i & 1 == 1 && (i % 3 == 0) {
                    p.add_anti_edge(u, v).ok()?;
                }
            }
            p.validate().ok()?;
            Some(p)
        })
}

fn graph() -> impl Strategy<Value = DataGraph> {
    prop::collection::vec((0u64..11, 0u64..11), 1..40).prop_filter_map("empty", |es| {
        let es: Vec<_> = es.into_iter().filter(|(u, v)| u != v).collect();
        if es.is_empty() {
            return None;
        }
        DataGraph::from_edges(es, None).ok()
    })
}

fn shuffle(n: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut s = seed | 1;
    for i in (1..n).rev() {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        perm.swap(i, (s % (i as u64 + 1)) as usize);
    }
    perm
}

fn cfg(threads: usize) -> MatchConfig {
    MatchConfig::with_threads(threads)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn canonical_code_ignores_vertex_numbering(p in pattern(), seed in any::<u64>()) {
        let q = p.permuted(&shuffle(p.len(), seed));
        prop_assert_eq!(p.canonical_code(), q.canonical_code());
        prop_assert_eq!(p.canonical().exact_code(), q.canonical().exact_code());
        let (code, perm) = p.canonical_form();
        prop_assert_eq!(code, p.permuted(&perm).canonical_code());
    }

    #[test]
    fn core_covers_and_is_connected(p in pattern()) {
        let core = min_connected_vertex_cover(&p);
        let in_core: BTreeSet<usize> = core.iter().copied().collect();
        let regular = |u: usize| p.is_regular(u);
        for (u, v) in p.true_edges().into_iter().chain(p.anti_edges()) {
            if !regular(u) || !regular(v) {
                continue;
            }
            prop_assert!(in_core.contains(&u) || in_core.contains(&v));
        }
        let mut seen = BTreeSet::from([core[0]]);
        let mut stack = vec![core[0]];
        while let Some(u) = stack.pop() {
            for w in p.neighbors(u) {
                if in_core.contains(&w) && seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        prop_assert_eq!(seen, in_core);
    }

    #[test]
    fn matches_respect_every_constraint(p in pattern(), g in graph()) {
        let ms = collect_matches(&p, &g, &cfg(1)).unwrap();
        let regular = p.regular_vertices();
        for m in &ms {
            let distinct: BTreeSet<u32> = regular.iter().map(|&u| m[u]).collect();
            prop_assert_eq!(distinct.len(), regular.len());
            for (u, v) in p.true_edges() {
                prop_assert!(g.has_edge(m[u], m[v]));
            }
            for (u, v) in p.anti_edges() {
                if p.is_regular(u) && p.is_regular(v) {
                    prop_assert!(!g.has_edge(m[u], m[v]));
                }
            }
        }
        let sets: BTreeSet<BTreeSet<u32>> = ms.iter().map(|m| regular.iter().map(|&u| m[u]).collect()).collect();
        if p.anti_edges().is_empty() && p.edge_count() == pairs(p.len()).len() {
            prop_assert_eq!(sets.len(), ms.len());
        }
    }

    #[test]
    fn symmetry_breaking_divides_by_group_order(p in pattern(), g in graph()) {
        let on = count(&p, &g, &cfg(1)).unwrap();
        let mut c = cfg(1);
        c.symmetry_breaking = false;
        let off = count(&p, &g, &c).unwrap();
        let aut = ExplorationPlan::generate(&p).unwrap().automorphism_count();
        prop_assert_eq!(off, on * aut);
    }

    #[test]
    fn threads_and_traversal_do_not_change_results(p in pattern(), g in graph(), vertex in any::<bool>()) {
        let mode = if vertex { MatchMode::VertexInduced } else { MatchMode::EdgeInduced };
        let base = collect_matches(&p, &g, &cfg(1).mode(mode)).unwrap();
        for threads in [2, 4] {
            prop_assert_eq!(&collect_matches(&p, &g, &cfg(threads).mode(mode)).unwrap(), &base);
        }
        let mut low = cfg(3).mode(mode);
        low.traversal = Traversal::LowToHigh;
        prop_assert_eq!(&collect_matches(&p, &g, &low).unwrap(), &base);
    }

    #[test]
    fn vertex_induced_equals_converted_pattern(p in pattern(), g in graph()) {
        let direct = count(&p, &g, &cfg(1).mode(MatchMode::VertexInduced)).unwrap();
        let converted = count(&p.to_vertex_induced(), &g, &cfg(1)).unwrap();
        prop_assert_eq!(direct, converted);
    }

    #[test]
    fn internal_ids_follow_degree_order(g in graph()) {
        let vs: Vec<u32> = g.vertices().collect();
        for w in vs.windows(2) {
            prop_assert!(g.degree(w[0]) <= g.degree(w[1]));
        }
        for v in g.vertices() {
            prop_assert_eq!(g.internal_id(g.original_id(v)), Some(v));
            prop_assert!(g.neighbors(v).windows(2).all(|w| w[0] < w[1]));
        }
    }
}
