//! Domain bitmaps, MNI support and the asynchronous aggregator.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use roaring::RoaringBitmap;

use crate::matcher::{Control, UNMATCHED};
use crate::pattern::Pattern;

/// Default aggregator wake-up period.
pub const DEFAULT_EPOCH: Duration = Duration::from_millis(50);

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum BitmapKind {
    #[default]
    Dense,
    Compressed,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Bitmap {
    Dense(Vec<u64>),
    Compressed(RoaringBitmap),
}

impl Bitmap {
    pub fn new(kind: BitmapKind) -> Self {
        match kind {
            BitmapKind::Dense => Bitmap::Dense(Vec::new()),
            BitmapKind::Compressed => Bitmap::Compressed(RoaringBitmap::new()),
        }
    }

    pub fn kind(&self) -> BitmapKind {
        match self {
            Bitmap::Dense(_) => BitmapKind::Dense,
            Bitmap::Compressed(_) => BitmapKind::Compressed,
        }
    }

    pub fn insert(&mut self, v: u32) {
        match self {
            Bitmap::Dense(words) => {
                let w = (v / 64) as usize;
                if words.len() <= w {
                    words.resize(w + 1, 0);
                }
                words[w] |= 1 << (v % 64);
            }
            Bitmap::Compressed(r) => {
                r.insert(v);
            }
        }
    }

    pub fn contains(&self, v: u32) -> bool {
        match self {
            Bitmap::Dense(words) => words
                .get((v / 64) as usize)
                .is_some_and(|w| w & (1 << (v % 64)) != 0),
            Bitmap::Compressed(r) => r.contains(v),
        }
    }

    /// Population count.
    pub fn len(&self) -> u64 {
        match self {
            Bitmap::Dense(words) => words.iter().map(|w| u64::from(w.count_ones())).sum(),
            Bitmap::Compressed(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn union_with(&mut self, other: &Bitmap) {
        match (self, other) {
            (Bitmap::Dense(a), Bitmap::Dense(b)) => {
                if a.len() < b.len() {
                    a.resize(b.len(), 0);
                }
                for (x, y) in a.iter_mut().zip(b) {
                    *x |= y;
                }
            }
            (Bitmap::Compressed(a), Bitmap::Compressed(b)) => *a |= b,
            (a, b) => {
                for v in b.iter() {
                    a.insert(v);
                }
            }
        }
    }

    pub fn iter(&self) -> Box<dyn Iterator<Item = u32> + '_> {
        match self {
            Bitmap::Dense(words) => Box::new(words.iter().enumerate().flat_map(|(i, &w)| {
                let mut w = w;
                std::iter::from_fn(move || {
                    if w == 0 {
                        return None;
                    }
                    let b = w.trailing_zeros();
                    w &= w - 1;
                    Some(i as u32 * 64 + b)
                })
            })),
            Bitmap::Compressed(r) => Box::new(r.iter()),
        }
    }
}

/// Per pattern vertex, the set of data vertices it was matched to.
/// Anti-vertices carry no domain and do not count towards support.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainMap {
    domains: Vec<Bitmap>,
    active: Vec<bool>,
}

impl DomainMap {
    pub fn new(vertices: usize, kind: BitmapKind) -> Self {
        Self {
            domains: (0..vertices).map(|_| Bitmap::new(kind)).collect(),
            active: vec![true; vertices],
        }
    }

    pub fn for_pattern(p: &Pattern, kind: BitmapKind) -> Self {
        let mut dm = Self::new(p.len(), kind);
        for u in p.anti_vertices() {
            dm.active[u] = false;
        }
        dm
    }

    pub fn len(&self) -> usize {
        self.domains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty()
    }

    pub fn domain(&self, u: usize) -> &Bitmap {
        &self.domains[u]
    }

    /// Records one match given as internal data-vertex ids per pattern vertex.
    pub fn insert(&mut self, mapping: &[u32]) {
        for (u, &v) in mapping.iter().enumerate() {
            if v != UNMATCHED && self.active[u] {
                self.domains[u].insert(v);
            }
        }
    }

    pub fn union_with(&mut self, other: &DomainMap) {
        for (a, b) in self.domains.iter_mut().zip(&other.domains) {
            a.union_with(b);
        }
    }

    /// Moves the domain of `u` to `perm[u]`.
    pub fn permuted(&self, perm: &[usize]) -> DomainMap {
        let mut domains: Vec<Option<Bitmap>> = vec![None; self.domains.len()];
        let mut active = vec![true; self.active.len()];
        for (u, d) in self.domains.iter().enumerate() {
            domains[perm[u]] = Some(d.clone());
            active[perm[u]] = self.active[u];
        }
        DomainMap {
            domains: domains.into_iter().map(|d| d.expect("perm is a permutation")).collect(),
            active,
        }
    }

    /// Replaces each domain by the union over its automorphism orbit.
    ///
    /// Symmetry breaking reports one match per automorphism class, so a
    /// domain built from canonical matches alone misses the images of the
    /// automorphic matches. Those images are exactly the orbit unions.
    pub fn symmetrize(&mut self, orbits: &[Vec<usize>]) {
        for orbit in orbits {
            if orbit.len() < 2 {
                continue;
            }
            let mut all = self.domains[orbit[0]].clone();
            for &u in &orbit[1..] {
                all.union_with(&self.domains[u]);
            }
            for &u in orbit {
                self.domains[u] = all.clone();
            }
        }
    }

    /// Minimum node image support.
    pub fn mni_support(&self) -> u64 {
        self.domains
            .iter()
            .zip(&self.active)
            .filter(|(_, &a)| a)
            .map(|(d, _)| d.len())
            .min()
            .unwrap_or(0)
    }
}

/// Keys whose support reaches `tau`, in input order.
pub fn frequency_check<K: Clone>(supports: &[(K, u64)], tau: u64) -> Vec<K> {
    supports
        .iter()
        .filter(|(_, s)| *s >= tau)
        .map(|(k, _)| k.clone())
        .collect()
}

struct Slot<T> {
    value: Mutex<Option<T>>,
    ready: AtomicBool,
}

type MergeFn<T> = Box<dyn Fn(&mut T, T) + Send + Sync>;

/// Merges worker-local values into a global value on a background thread.
///
/// Workers hand over their local value through a per-worker slot. A worker
/// never waits: if its slot still holds an unconsumed value, or is being
/// drained, `publish` returns false and the worker keeps accumulating.
pub struct Aggregator<T> {
    slots: Vec<Slot<T>>,
    global: Mutex<T>,
    identity: Box<dyn Fn() -> T + Send + Sync>,
    merge: MergeFn<T>,
    done: Mutex<bool>,
    wake: Condvar,
    epoch: Duration,
    rounds: AtomicU64,
}

impl<T: Send> Aggregator<T> {
    pub fn new(
        workers: usize,
        identity: impl Fn() -> T + Send + Sync + 'static,
        merge: impl Fn(&mut T, T) + Send + Sync + 'static,
    ) -> Self {
        Self {
            slots: (0..workers)
                .map(|_| Slot {
                    value: Mutex::new(None),
                    ready: AtomicBool::new(false),
                })
                .collect(),
            global: Mutex::new(identity()),
            identity: Box::new(identity),
            merge: Box::new(merge),
            done: Mutex::new(false),
            wake: Condvar::new(),
            epoch: DEFAULT_EPOCH,
            rounds: AtomicU64::new(0),
        }
    }

    pub fn with_epoch(mut self, epoch: Duration) -> Self {
        self.epoch = epoch;
        self
    }

    pub fn workers(&self) -> usize {
        self.slots.len()
    }

    pub fn identity(&self) -> T {
        (self.identity)()
    }

    /// Swaps `local` into the worker's slot if the slot is free. On success
    /// `local` is reset to the identity.
    pub fn publish(&self, worker: usize, local: &mut T) -> bool {
        let slot = &self.slots[worker];
        if slot.ready.load(Ordering::Acquire) {
            return false;
        }
        let Ok(mut guard) = slot.value.try_lock() else {
            return false;
        };
        *guard = Some(std::mem::replace(local, (self.identity)()));
        slot.ready.store(true, Ordering::Release);
        true
    }

    /// Merges every ready slot into the global value.
    pub fn merge_ready(&self) -> bool {
        let mut merged = false;
        for slot in &self.slots {
            if !slot.ready.load(Ordering::Acquire) {
                continue;
            }
            let taken = slot.value.lock().expect("slot poisoned").take();
            slot.ready.store(false, Ordering::Release);
            if let Some(v) = taken {
                let mut g = self.global.lock().expect("global poisoned");
                (self.merge)(&mut g, v);
                merged = true;
            }
        }
        if merged {
            self.rounds.fetch_add(1, Ordering::Relaxed);
        }
        merged
    }

    /// Number of aggregation rounds that merged at least one value.
    pub fn rounds(&self) -> u64 {
        self.rounds.load(Ordering::Relaxed)
    }

    pub fn with_global<R>(&self, f: impl FnOnce(&T) -> R) -> R {
        f(&self.global.lock().expect("global poisoned"))
    }

    /// Runs `body` while an aggregator thread merges published values every
    /// epoch and calls `on_update` with the global value after each merge.
    /// Ready slots are drained once more after `body` returns.
    pub fn run<R>(
        &self,
        control: &Control,
        mut on_update: impl FnMut(&T, &Control) + Send,
        body: impl FnOnce() -> R,
    ) -> R {
        *self.done.lock().expect("poisoned") = false;
        let out = std::thread::scope(|s| {
            s.spawn(|| loop {
                let finished = {
                    let guard = self.done.lock().expect("poisoned");
                    let (guard, _) = self
                        .wake
                        .wait_timeout_while(guard, self.epoch, |d| !*d)
                        .expect("poisoned");
                    *guard
                };
                if self.merge_ready() {
                    self.with_global(|g| on_update(g, control));
                }
                if finished {
                    break;
                }
            });
            let out = body();
            *self.done.lock().expect("poisoned") = true;
            self.wake.notify_all();
            out
        });
        self.merge_ready();
        out
    }

    /// Final drain: merges ready slots and the workers' unpublished values.
    pub fn finish(self, leftovers: impl IntoIterator<Item = T>) -> T {
        self.merge_ready();
        let mut g = self.global.into_inner().expect("global poisoned");
        for v in leftovers {
            (self.merge)(&mut g, v);
        }
        g
    }
}

impl<T> std::fmt::Debug for Aggregator<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Aggregator")
            .field("workers", &self.slots.len())
            .field("epoch", &self.epoch)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::DataGraph;
    use crate::matcher::{collect_matches, MatchConfig};
    use crate::plan::automorphism_orbits;
    use proptest::prelude::*;

    #[test]
    fn insert_has_set_semantics() {
        let mut dm = DomainMap::new(2, BitmapKind::Dense);
        dm.insert(&[3, 7]);
        assert_eq!(dm.domain(0).iter().collect::<Vec<_>>(), vec![3]);
        dm.insert(&[3, 9]);
        assert_eq!(dm.domain(0).len(), 1);
        assert_eq!(dm.domain(1).len(), 2);
        assert_eq!(dm.mni_support(), 1);
    }

    #[test]
    fn empty_support_is_zero() {
        assert_eq!(DomainMap::new(3, BitmapKind::Dense).mni_support(), 0);
        assert_eq!(DomainMap::new(0, BitmapKind::Compressed).mni_support(), 0);
    }

    fn edge_support(g: &DataGraph, p: &Pattern) -> u64 {
        let mut dm = DomainMap::for_pattern(p, BitmapKind::Dense);
        for m in collect_matches(p, g, &MatchConfig::with_threads(1)).unwrap() {
            dm.insert(&m);
        }
        dm.symmetrize(&automorphism_orbits(p));
        dm.mni_support()
    }

    #[test]
    fn edge_support_on_k3() {
        let g = DataGraph::from_edges([(1, 2), (2, 3), (1, 3)], None).unwrap();
        assert_eq!(edge_support(&g, &Pattern::chain(2).unwrap()), 3);
    }

    #[test]
    fn labeled_edge_support() {
        let labels = [(1, 0), (2, 1), (3, 1)].into_iter().collect();
        let g = DataGraph::from_edges([(1, 2), (1, 3)], Some(&labels)).unwrap();
        let mut p = Pattern::chain(2).unwrap();
        p.set_label(0, Some(0)).unwrap().set_label(1, Some(1)).unwrap();
        assert_eq!(edge_support(&g, &p), 1);
    }

    #[test]
    fn frequency_examples() {
        let s = [("pA", 5), ("pB", 2)];
        assert_eq!(frequency_check(&s, 3), vec!["pA"]);
        assert_eq!(frequency_check(&s, 0), vec!["pA", "pB"]);
    }

    #[test]
    fn aggregator_sums_after_drain() {
        let agg = Aggregator::new(3, || 0u64, |g, v| *g += v);
        let control = Control::new();
        let leftovers = agg.run(&control, |_, _| {}, || {
            std::thread::scope(|s| {
                let hs: Vec<_> = [3u64, 5, 7]
                    .into_iter()
                    .enumerate()
                    .map(|(w, v)| {
                        let agg = &agg;
                        s.spawn(move || {
                            let mut local = v;
                            agg.publish(w, &mut local);
                            local
                        })
                    })
                    .collect();
                hs.into_iter().map(|h| h.join().unwrap()).collect::<Vec<_>>()
            })
        });
        assert_eq!(agg.finish(leftovers), 15);
    }

    #[test]
    fn aggregator_without_publishers_is_identity() {
        let agg = Aggregator::new(4, || 0u64, |g, v| *g += v);
        agg.run(&Control::new(), |_, _| {}, || ());
        assert_eq!(agg.finish([]), 0);
    }

    #[test]
    fn busy_slot_keeps_local_value() {
        let agg = Aggregator::new(1, || 0u64, |g, v| *g += v);
        let mut local = 4;
        assert!(agg.publish(0, &mut local));
        assert_eq!(local, 0);
        local = 6;
        assert!(!agg.publish(0, &mut local));
        assert_eq!(local, 6);
        assert!(agg.merge_ready());
        assert!(agg.publish(0, &mut local));
        assert_eq!(agg.finish([]), 10);
    }

    #[test]
    fn on_update_can_stop() {
        let agg = Aggregator::new(1, || 0u64, |g, v| *g += v).with_epoch(Duration::from_millis(1));
        let control = Control::new();
        agg.run(
            &control,
            |g, c| {
                if *g >= 100 {
                    c.stop_exploration();
                }
            },
            || {
                let mut local = 0;
                while !control.is_stopped() {
                    local += 1;
                    agg.publish(0, &mut local);
                    std::thread::yield_now();
                }
            },
        );
        assert!(control.is_stopped());
        assert!(agg.rounds() > 0);
    }

    proptest! {
        #[test]
        fn dense_and_compressed_agree(vs in prop::collection::vec(0u32..5000, 0..200), ws in prop::collection::vec(0u32..5000, 0..200)) {
            let mut d = Bitmap::new(BitmapKind::Dense);
            let mut c = Bitmap::new(BitmapKind::Compressed);
            let mut d2 = Bitmap::new(BitmapKind::Dense);
            let mut c2 = Bitmap::new(BitmapKind::Compressed);
            for &v in &vs { d.insert(v); c.insert(v); }
            for &w in &ws { d2.insert(w); c2.insert(w); }
            d.union_with(&d2);
            c.union_with(&c2);
            prop_assert_eq!(d.len(), c.len());
            prop_assert_eq!(d.iter().collect::<Vec<_>>(), c.iter().collect::<Vec<_>>());
        }
    }
}
