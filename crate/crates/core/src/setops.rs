//! Set operations over sorted adjacency lists, restricted to id ranges.

/// Exclusive id bounds: keep `x` with `lower < x < upper`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Bounds {
    pub lower: Option<u32>,
    pub upper: Option<u32>,
}

impl Bounds {
    pub const NONE: Bounds = Bounds {
        lower: None,
        upper: None,
    };

    pub fn above(v: u32) -> Self {
        Bounds {
            lower: Some(v),
            upper: None,
        }
    }

    pub fn below(v: u32) -> Self {
        Bounds {
            lower: None,
            upper: Some(v),
        }
    }

    pub fn contains(&self, x: u32) -> bool {
        self.lower.is_none_or(|l| x > l) && self.upper.is_none_or(|u| x < u)
    }

    pub fn is_empty_range(&self) -> bool {
        matches!((self.lower, self.upper), (Some(l), Some(u)) if u <= l + 1)
    }

    /// Sub-slice of a sorted list inside the bounds, found by binary search.
    pub fn clip<'a>(&self, list: &'a [u32]) -> &'a [u32] {
        let start = match self.lower {
            Some(l) => list.partition_point(|&x| x <= l),
            None => 0,
        };
        let end = match self.upper {
            Some(u) => list.partition_point(|&x| x < u),
            None => list.len(),
        };
        if start >= end {
            &[]
        } else {
            &list[start..end]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetOp {
    Intersect,
    Difference,
}

/// Appends `a ∩ b` to `out`.
pub fn intersect_into(a: &[u32], b: &[u32], out: &mut Vec<u32>) {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if small.is_empty() {
        return;
    }
    if large.len() / small.len() >= 32 {
        // galloping for skewed sizes
        let mut rest = large;
        for &x in small {
            let i = rest.partition_point(|&y| y < x);
            rest = &rest[i..];
            match rest.first() {
                Some(&y) if y == x => {
                    out.push(x);
                    rest = &rest[1..];
                }
                Some(_) => {}
                None => break,
            }
        }
        return;
    }
    let (mut i, mut j) = (0, 0);
    while i < small.len() && j < large.len() {
        match small[i].cmp(&large[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(small[i]);
                i += 1;
                j += 1;
            }
        }
    }
}

/// Removes from `set` (sorted) every element of `remove` (sorted).
pub fn subtract_in_place(set: &mut Vec<u32>, remove: &[u32]) {
    let mut j = 0;
    set.retain(|&x| {
        while j < remove.len() && remove[j] < x {
            j += 1;
        }
        !(j < remove.len() && remove[j] == x)
    });
}

/// Multi-way intersection (or left-fold difference) of sorted lists, each
/// first clipped to `bounds`. The result replaces the contents of `out`;
/// `scratch` is reused between calls.
pub fn ordered_set_op(
    op: SetOp,
    lists: &[&[u32]],
    bounds: Bounds,
    out: &mut Vec<u32>,
    scratch: &mut Vec<u32>,
) {
    out.clear();
    let Some((first, rest)) = lists.split_first() else {
        return;
    };
    let first = bounds.clip(first);
    match op {
        SetOp::Intersect => {
            if rest.is_empty() {
                out.extend_from_slice(first);
                return;
            }
            intersect_into(first, bounds.clip(rest[0]), out);
            for list in &rest[1..] {
                if out.is_empty() {
                    return;
                }
                scratch.clear();
                intersect_into(out, bounds.clip(list), scratch);
                std::mem::swap(out, scratch);
            }
        }
        SetOp::Difference => {
            out.extend_from_slice(first);
            for list in rest {
                if out.is_empty() {
                    return;
                }
                subtract_in_place(out, bounds.clip(list));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn run(op: SetOp, lists: &[&[u32]], bounds: Bounds) -> Vec<u32> {
        let (mut out, mut scratch) = (Vec::new(), Vec::new());
        ordered_set_op(op, lists, bounds, &mut out, &mut scratch);
        out
    }

    #[test]
    fn examples() {
        assert_eq!(run(SetOp::Intersect, &[&[1, 3, 5], &[3, 5, 7]], Bounds::NONE), vec![3, 5]);
        assert_eq!(run(SetOp::Difference, &[&[1, 3, 5], &[3]], Bounds::NONE), vec![1, 5]);
        assert_eq!(
            run(SetOp::Intersect, &[&[2, 4, 6, 8], &[4, 6, 8]], Bounds::above(4)),
            vec![6, 8]
        );
    }

    #[test]
    fn clip_and_bounds() {
        let l = [1, 3, 5, 7, 9];
        let b = Bounds {
            lower: Some(3),
            upper: Some(9),
        };
        assert_eq!(b.clip(&l), &[5, 7]);
        assert!(b.contains(4) && !b.contains(3) && !b.contains(9));
        assert!(Bounds { lower: Some(4), upper: Some(5) }.is_empty_range());
        assert_eq!(Bounds::below(0).clip(&l), &[] as &[u32]);
    }

    #[test]
    fn galloping_path() {
        let big: Vec<u32> = (0..1000).collect();
        assert_eq!(run(SetOp::Intersect, &[&[5, 500, 2000], &big], Bounds::NONE), vec![5, 500]);
    }

    fn sorted_set() -> impl Strategy<Value = Vec<u32>> {
        prop::collection::btree_set(0u32..200, 0..60).prop_map(|s| s.into_iter().collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn agrees_with_naive_sets(
            lists in prop::collection::vec(sorted_set(), 2..5),
            lower in prop::option::of(0u32..200),
            upper in prop::option::of(0u32..200),
            intersect in any::<bool>(),
        ) {
            let bounds = Bounds { lower, upper };
            let refs: Vec<&[u32]> = lists.iter().map(Vec::as_slice).collect();
            let op = if intersect { SetOp::Intersect } else { SetOp::Difference };
            let got = run(op, &refs, bounds);
            let mut expect: BTreeSet<u32> = lists[0].iter().copied().collect();
            for l in &lists[1..] {
                let l: BTreeSet<u32> = l.iter().copied().collect();
                expect = if intersect { &expect & &l } else { &expect - &l };
            }
            let expect: Vec<u32> = expect.into_iter().filter(|&x| bounds.contains(x)).collect();
            prop_assert_eq!(got, expect);
        }
    }
}
