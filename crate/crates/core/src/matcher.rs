//! Plan-guided matching.
//!
//! A task is a data vertex. For each matching order the task binds its start
//! vertex to the highest position (or the lowest, with
//! [`Traversal::LowToHigh`]) and extends through the core with id-bounded
//! adjacency intersections. Each core match is converted through the
//! matching order's vertex sequences, completed with set operations for the
//! non-core vertices, checked against anti-vertex constraints and handed to
//! the callback. Tasks are claimed from a shared cursor in descending degree
//! order.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;

use crate::error::Error;
use crate::graph::DataGraph;
use crate::pattern::{bits, Label, Pattern};
use crate::plan::ExplorationPlan;
use crate::setops::{ordered_set_op, subtract_in_place, Bounds, SetOp};

/// Workers check the stop flag once per this many candidate extensions.
pub const STOP_POLL_INTERVAL: u64 = 1024;

/// Mapping entry of an anti-vertex or a not yet matched vertex.
pub const UNMATCHED: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum MatchMode {
    #[default]
    EdgeInduced,
    VertexInduced,
}

/// Direction in which a matching order's positions are bound.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Traversal {
    #[default]
    HighToLow,
    LowToHigh,
}

#[derive(Debug, Clone)]
pub struct MatchConfig {
    pub threads: usize,
    pub mode: MatchMode,
    pub symmetry_breaking: bool,
    pub traversal: Traversal,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
            mode: MatchMode::EdgeInduced,
            symmetry_breaking: true,
            traversal: Traversal::HighToLow,
        }
    }
}

impl MatchConfig {
    pub fn with_threads(threads: usize) -> Self {
        Self {
            threads: threads.max(1),
            ..Self::default()
        }
    }

    pub fn mode(mut self, mode: MatchMode) -> Self {
        self.mode = mode;
        self
    }
}

/// Shared, set-once stop flag.
#[derive(Debug, Clone, Default)]
pub struct Control {
    stop: Arc<AtomicBool>,
}

impl Control {
    pub fn new() -> Self {
        Self::default()
    }

    /// Asks every worker to abandon its remaining work. Idempotent.
    pub fn stop_exploration(&self) {
        self.stop.store(true, Ordering::Release);
    }

    pub fn is_stopped(&self) -> bool {
        self.stop.load(Ordering::Acquire)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatchStats {
    pub tasks: u64,
    pub matches: u64,
    /// Candidate data vertices tried at any recursion level.
    pub extensions: u64,
    pub set_operations: u64,
    /// Always zero: the matcher never tests canonicality.
    pub canonicality_checks: u64,
    /// Always zero: the matcher never tests isomorphism.
    pub isomorphism_checks: u64,
    /// Upper bound on extensions performed after the stop flag was raised.
    pub extensions_after_stop: u64,
    pub stopped: bool,
}

impl MatchStats {
    fn absorb(&mut self, other: &MatchStats) {
        self.tasks += other.tasks;
        self.matches += other.matches;
        self.extensions += other.extensions;
        self.set_operations += other.set_operations;
        self.canonicality_checks += other.canonicality_checks;
        self.isomorphism_checks += other.isomorphism_checks;
        self.extensions_after_stop += other.extensions_after_stop;
        self.stopped |= other.stopped;
    }
}

/// A complete match handed to callbacks.
#[derive(Clone, Copy)]
pub struct Match<'a> {
    pattern: &'a Pattern,
    graph: &'a DataGraph,
    mapping: &'a [u32],
}

impl<'a> Match<'a> {
    /// The pattern actually matched (after vertex-induced conversion).
    pub fn pattern(&self) -> &'a Pattern {
        self.pattern
    }

    /// Internal data-vertex id per pattern vertex; [`UNMATCHED`] for
    /// anti-vertices.
    pub fn internal(&self) -> &'a [u32] {
        self.mapping
    }

    /// Original id of the data vertex matched to `u`.
    pub fn vertex(&self, u: usize) -> Option<u64> {
        match self.mapping[u] {
            UNMATCHED => None,
            v => Some(self.graph.original_id(v)),
        }
    }

    pub fn vertices(&self) -> Vec<Option<u64>> {
        (0..self.mapping.len()).map(|u| self.vertex(u)).collect()
    }

    /// Label of the data vertex matched to `u`.
    pub fn label(&self, u: usize) -> Option<Label> {
        match self.mapping[u] {
            UNMATCHED => None,
            v => self.graph.label(v),
        }
    }

    pub fn labels(&self) -> Vec<Option<Label>> {
        (0..self.mapping.len()).map(|u| self.label(u)).collect()
    }
}

impl std::fmt::Debug for Match<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.vertices()).finish()
    }
}

#[derive(Debug)]
struct Step {
    position: usize,
    true_prev: Vec<usize>,
    anti_prev: Vec<usize>,
    lower: Option<usize>,
    upper: Option<usize>,
    label: Option<Label>,
}

#[derive(Debug)]
struct CompiledOrder {
    steps: Vec<Step>,
    sequences: Vec<Vec<usize>>,
}

#[derive(Debug)]
struct Completion {
    vertex: usize,
    true_core: Vec<usize>,
    anti_core: Vec<usize>,
    lower: u32,
    upper: u32,
    label: Option<Label>,
}

#[derive(Debug)]
struct AntiCheck {
    neighbors: Vec<usize>,
    excluded: u32,
    label: Option<Label>,
}

/// Per-worker buffers and counters, reused across tasks.
#[derive(Debug, Default)]
pub struct TaskScratch {
    buffers: Vec<Vec<u32>>,
    scratch: Vec<u32>,
    tuple: Vec<u32>,
    mapping: Vec<u32>,
    since_poll: u64,
    pub stats: MatchStats,
}

impl TaskScratch {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Executes one plan against one graph.
#[derive(Debug)]
pub struct Matcher<'a> {
    plan: &'a ExplorationPlan,
    graph: &'a DataGraph,
    orders: Vec<CompiledOrder>,
    completions: Vec<Completion>,
    anti_checks: Vec<AntiCheck>,
}

fn label_ok(want: Option<Label>, graph: &DataGraph, v: u32) -> bool {
    match want {
        None => true,
        Some(l) => graph.label(v) == Some(l),
    }
}

impl<'a> Matcher<'a> {
    pub fn new(plan: &'a ExplorationPlan, graph: &'a DataGraph, traversal: Traversal) -> Self {
        let p = plan.pattern();
        let orders = plan
            .matching_orders()
            .iter()
            .map(|mo| {
                let core = mo.remapped_core();
                let c = core.len();
                let mut matched = vec![false; c];
                let mut steps = Vec::with_capacity(c);
                let mut next = match traversal {
                    Traversal::HighToLow => c - 1,
                    Traversal::LowToHigh => 0,
                };
                loop {
                    let done: Vec<usize> = (0..c).filter(|&q| matched[q]).collect();
                    steps.push(Step {
                        position: next,
                        true_prev: done.iter().copied().filter(|&q| core.are_connected(next, q)).collect(),
                        anti_prev: done
                            .iter()
                            .copied()
                            .filter(|&q| core.are_anti_adjacent(next, q))
                            .collect(),
                        lower: done.iter().copied().filter(|&q| q < next).max(),
                        upper: done.iter().copied().filter(|&q| q > next).min(),
                        label: core.label(next),
                    });
                    matched[next] = true;
                    // the core is connected, so some unmatched position
                    // always touches a matched one
                    let frontier = (0..c).filter(|&q| {
                        !matched[q] && (0..c).any(|r| matched[r] && core.are_connected(q, r))
                    });
                    let pick = match traversal {
                        Traversal::HighToLow => frontier.max(),
                        Traversal::LowToHigh => frontier.min(),
                    };
                    match pick {
                        Some(q) => next = q,
                        None => break,
                    }
                }
                CompiledOrder {
                    steps,
                    sequences: mo.sequences().to_vec(),
                }
            })
            .collect();

        let po = plan.partial_order();
        let mut assigned: u32 = plan.core().iter().fold(0, |m, &v| m | 1 << v);
        let completions = plan
            .non_core_vertices()
            .iter()
            .map(|nc| {
                let u = nc.vertex;
                let comp = Completion {
                    vertex: u,
                    true_core: nc.core_neighbors.clone(),
                    anti_core: nc.core_anti_neighbors.clone(),
                    lower: po.predecessors(u) & assigned,
                    upper: po.successors(u) & assigned,
                    label: p.label(u),
                };
                assigned |= 1 << u;
                comp
            })
            .collect();
        let anti_checks = plan
            .anti_vertex_checks()
            .iter()
            .map(|av| AntiCheck {
                neighbors: av.neighbors.clone(),
                excluded: av.neighbors.iter().fold(0, |m, &w| m | p.true_mask(w)),
                label: av.label,
            })
            .collect();
        Self {
            plan,
            graph,
            orders,
            completions,
            anti_checks,
        }
    }

    pub fn plan(&self) -> &ExplorationPlan {
        self.plan
    }

    /// Runs every matching order from `start`, invoking `callback` on each
    /// match whose designated first vertex is `start`. Returns false if the
    /// exploration was stopped.
    pub fn match_task<S, F>(
        &self,
        start: u32,
        scratch: &mut TaskScratch,
        state: &mut S,
        callback: &F,
        control: &Control,
    ) -> bool
    where
        F: Fn(&mut S, &Match<'_>, &Control),
    {
        let n = self.plan.pattern().len();
        if scratch.buffers.len() <= n {
            scratch.buffers.resize_with(n + 1, Vec::new);
        }
        scratch.mapping.clear();
        scratch.mapping.resize(n, UNMATCHED);
        scratch.stats.tasks += 1;
        // task boundaries double as polls
        if control.is_stopped() {
            scratch.stats.extensions_after_stop += std::mem::take(&mut scratch.since_poll);
            scratch.stats.stopped = true;
            return false;
        }
        scratch.since_poll = 0;
        let mut run = Run {
            m: self,
            scratch,
            state,
            callback,
            control,
        };
        for order in &self.orders {
            run.scratch.tuple.clear();
            run.scratch.tuple.resize(order.steps.len(), UNMATCHED);
            let first = &order.steps[0];
            if !label_ok(first.label, self.graph, start) {
                continue;
            }
            run.scratch.tuple[first.position] = start;
            if !run.core_step(order, 1) {
                return false;
            }
        }
        true
    }
}

struct Run<'r, 'a, S, F> {
    m: &'r Matcher<'a>,
    scratch: &'r mut TaskScratch,
    state: &'r mut S,
    callback: &'r F,
    control: &'r Control,
}

impl<S, F> Run<'_, '_, S, F>
where
    F: Fn(&mut S, &Match<'_>, &Control),
{
    /// Counts one extension; false once a poll observes the stop flag.
    fn tick(&mut self) -> bool {
        let s = &mut *self.scratch;
        s.stats.extensions += 1;
        s.since_poll += 1;
        if s.since_poll >= STOP_POLL_INTERVAL {
            let pending = s.since_poll;
            s.since_poll = 0;
            if self.control.is_stopped() {
                s.stats.extensions_after_stop += pending;
                s.stats.stopped = true;
                return false;
            }
        }
        true
    }

    fn core_step(&mut self, order: &CompiledOrder, depth: usize) -> bool {
        if depth == order.steps.len() {
            return self.convert(order);
        }
        let g = self.m.graph;
        let step = &order.steps[depth];
        let tuple = &self.scratch.tuple;
        let bounds = Bounds {
            lower: step.lower.map(|q| tuple[q]),
            upper: step.upper.map(|q| tuple[q]),
        };
        if bounds.is_empty_range() {
            return true;
        }
        let lists: Vec<&[u32]> = step.true_prev.iter().map(|&q| g.neighbors(tuple[q])).collect();
        let mut buf = std::mem::take(&mut self.scratch.buffers[depth]);
        ordered_set_op(SetOp::Intersect, &lists, bounds, &mut buf, &mut self.scratch.scratch);
        self.scratch.stats.set_operations += 1;
        for &q in &step.anti_prev {
            subtract_in_place(&mut buf, g.neighbors(self.scratch.tuple[q]));
            self.scratch.stats.set_operations += 1;
        }
        let mut go_on = true;
        for &c in &buf {
            if !self.tick() {
                go_on = false;
                break;
            }
            if !label_ok(step.label, g, c) {
                continue;
            }
            self.scratch.tuple[step.position] = c;
            if !self.core_step(order, depth + 1) {
                go_on = false;
                break;
            }
        }
        self.scratch.tuple[step.position] = UNMATCHED;
        self.scratch.buffers[depth] = buf;
        go_on
    }

    /// One core match per vertex sequence of the matching order.
    fn convert(&mut self, order: &CompiledOrder) -> bool {
        for seq in &order.sequences {
            for (pos, &u) in seq.iter().enumerate() {
                self.scratch.mapping[u] = self.scratch.tuple[pos];
            }
            if !self.complete(0) {
                return false;
            }
        }
        true
    }

    fn complete(&mut self, k: usize) -> bool {
        if k == self.m.completions.len() {
            return self.finish();
        }
        let g = self.m.graph;
        let comp = &self.m.completions[k];
        let mapping = &self.scratch.mapping;
        let bounds = Bounds {
            lower: bits(comp.lower).map(|w| mapping[w]).max(),
            upper: bits(comp.upper).map(|w| mapping[w]).min(),
        };
        if bounds.is_empty_range() {
            return true;
        }
        let lists: Vec<&[u32]> = comp.true_core.iter().map(|&w| g.neighbors(mapping[w])).collect();
        let depth = self.m.orders[0].steps.len() + k;
        let mut buf = std::mem::take(&mut self.scratch.buffers[depth]);
        ordered_set_op(SetOp::Intersect, &lists, bounds, &mut buf, &mut self.scratch.scratch);
        self.scratch.stats.set_operations += 1;
        for &a in &comp.anti_core {
            subtract_in_place(&mut buf, g.neighbors(self.scratch.mapping[a]));
            self.scratch.stats.set_operations += 1;
        }
        let mut go_on = true;
        for &c in &buf {
            if !self.tick() {
                go_on = false;
                break;
            }
            if !label_ok(comp.label, g, c) || self.scratch.mapping.contains(&c) {
                continue;
            }
            self.scratch.mapping[comp.vertex] = c;
            let cont = self.complete(k + 1);
            self.scratch.mapping[comp.vertex] = UNMATCHED;
            if !cont {
                go_on = false;
                break;
            }
        }
        self.scratch.buffers[depth] = buf;
        go_on
    }

    fn anti_vertices_hold(&mut self) -> bool {
        let g = self.m.graph;
        for check in &self.m.anti_checks {
            let mapping = &self.scratch.mapping;
            let lists: Vec<&[u32]> = check.neighbors.iter().map(|&w| g.neighbors(mapping[w])).collect();
            let buf = &mut self.scratch.buffers[mapping.len()];
            ordered_set_op(SetOp::Intersect, &lists, Bounds::NONE, buf, &mut self.scratch.scratch);
            self.scratch.stats.set_operations += 1;
            let violated = buf.iter().any(|&x| {
                label_ok(check.label, g, x) && !bits(check.excluded).any(|y| mapping[y] == x)
            });
            if violated {
                return false;
            }
        }
        true
    }

    fn finish(&mut self) -> bool {
        if !self.anti_vertices_hold() {
            return true;
        }
        self.scratch.stats.matches += 1;
        let m = Match {
            pattern: self.m.plan.pattern(),
            graph: self.m.graph,
            mapping: &self.scratch.mapping,
        };
        (self.callback)(self.state, &m, self.control);
        if self.control.is_stopped() {
            self.scratch.stats.stopped = true;
            return false;
        }
        true
    }
}

/// The pattern actually matched for `mode`.
pub fn effective_pattern(pattern: &Pattern, mode: MatchMode) -> Pattern {
    match mode {
        MatchMode::EdgeInduced => pattern.clone(),
        MatchMode::VertexInduced => pattern.to_vertex_induced(),
    }
}

/// Builds the plan for `pattern` under `config`.
pub fn plan_for(pattern: &Pattern, config: &MatchConfig) -> Result<ExplorationPlan, Error> {
    let p = effective_pattern(pattern, config.mode);
    Ok(ExplorationPlan::generate_with(&p, config.symmetry_breaking)?)
}

/// Runs a plan with one state value per worker, created by `init(worker)`.
/// Returns the worker states (also when stopped early) and merged stats.
pub fn run_plan<S, I, F>(
    plan: &ExplorationPlan,
    graph: &DataGraph,
    config: &MatchConfig,
    control: &Control,
    init: I,
    callback: F,
) -> (Vec<S>, MatchStats)
where
    S: Send,
    I: Fn(usize) -> S + Sync,
    F: Fn(&mut S, &Match<'_>, &Control) + Sync,
{
    let matcher = Matcher::new(plan, graph, config.traversal);
    let n = graph.vertex_count();
    let cursor = AtomicUsize::new(0);
    let work = |worker: usize| -> (S, MatchStats) {
        let mut state = init(worker);
        let mut scratch = TaskScratch::new();
        loop {
            let i = cursor.fetch_add(1, Ordering::Relaxed);
            if i >= n {
                break;
            }
            // highest degree first
            let start = (n - 1 - i) as u32;
            if !matcher.match_task(start, &mut scratch, &mut state, &callback, control) {
                break;
            }
        }
        if control.is_stopped() {
            // everything since the last poll that saw the flag clear
            scratch.stats.extensions_after_stop += std::mem::take(&mut scratch.since_poll);
            scratch.stats.stopped = true;
        }
        (state, scratch.stats)
    };
    let threads = config.threads.max(1);
    let results: Vec<(S, MatchStats)> = if threads == 1 {
        vec![work(0)]
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..threads).map(|w| s.spawn(move || work(w))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("matcher worker panicked"))
                .collect()
        })
    };
    let mut stats = MatchStats::default();
    let mut states = Vec::with_capacity(results.len());
    for (s, st) in results {
        stats.absorb(&st);
        states.push(s);
    }
    (states, stats)
}

/// Plans `pattern` and folds every match into per-worker state.
pub fn match_fold<S, I, F>(
    pattern: &Pattern,
    graph: &DataGraph,
    config: &MatchConfig,
    control: &Control,
    init: I,
    callback: F,
) -> Result<(Vec<S>, MatchStats), Error>
where
    S: Send,
    I: Fn(usize) -> S + Sync,
    F: Fn(&mut S, &Match<'_>, &Control) + Sync,
{
    let plan = plan_for(pattern, config)?;
    Ok(run_plan(&plan, graph, config, control, init, callback))
}

/// Invokes `callback` once per canonical match.
pub fn match_all<F>(
    pattern: &Pattern,
    graph: &DataGraph,
    config: &MatchConfig,
    callback: F,
) -> Result<MatchStats, Error>
where
    F: Fn(&Match<'_>, &Control) + Sync,
{
    let control = Control::new();
    let (_, stats) = match_fold(pattern, graph, config, &control, |_| (), |_, m, c| callback(m, c))?;
    Ok(stats)
}

/// Number of canonical matches.
pub fn count(pattern: &Pattern, graph: &DataGraph, config: &MatchConfig) -> Result<u64, Error> {
    let control = Control::new();
    let (counts, _) = match_fold(pattern, graph, config, &control, |_| 0u64, |c, _, _| *c += 1)?;
    Ok(counts.iter().sum())
}

/// Every match's internal mapping, sorted. Intended for tests and small graphs.
pub fn collect_matches(
    pattern: &Pattern,
    graph: &DataGraph,
    config: &MatchConfig,
) -> Result<Vec<Vec<u32>>, Error> {
    let control = Control::new();
    let (parts, _) = match_fold(pattern, graph, config, &control, |_| Vec::new(), |v: &mut Vec<Vec<u32>>, m, _| {
        v.push(m.internal().to_vec())
    })?;
    let mut all: Vec<Vec<u32>> = parts.into_iter().flatten().collect();
    all.sort();
    Ok(all)
}
