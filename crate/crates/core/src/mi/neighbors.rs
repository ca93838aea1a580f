//! Exact max-norm neighbor queries: a kd-tree for low dimensions and a
//! brute-force scan that doubles as its oracle.

use std::collections::BinaryHeap;

const LEAF_SIZE: usize = 16;
/// Above this dimension the kd-tree prunes too little to pay off.
pub const TREE_MAX_DIM: usize = 16;

#[inline]
pub fn chebyshev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// `chebyshev(a, b) <= r` (or `< r` when `strict`), with early exit.
#[inline]
fn within(a: &[f64], b: &[f64], r: f64, strict: bool) -> bool {
    for (x, y) in a.iter().zip(b) {
        let d = (x - y).abs();
        if d > r || (strict && d >= r) {
            return false;
        }
    }
    !(strict && r <= 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Ordered(f64);

impl Eq for Ordered {}

impl PartialOrd for Ordered {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ordered {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Keeps the `k` smallest distances seen.
struct KBest {
    k: usize,
    heap: BinaryHeap<Ordered>,
}

impl KBest {
    fn new(k: usize) -> Self {
        Self { k, heap: BinaryHeap::with_capacity(k + 1) }
    }

    fn bound(&self) -> f64 {
        if self.heap.len() < self.k {
            f64::INFINITY
        } else {
            self.heap.peek().map_or(f64::INFINITY, |o| o.0)
        }
    }

    fn offer(&mut self, d: f64) {
        if self.heap.len() < self.k {
            self.heap.push(Ordered(d));
        } else if d < self.bound() {
            self.heap.pop();
            self.heap.push(Ordered(d));
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

/// Point set with exact max-norm queries. Points are identified by their
/// row index in the input.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    dim: usize,
    /// Row-major points in tree order.
    data: Vec<f64>,
    ids: Vec<usize>,
    nodes: Vec<Node>,
    brute: bool,
}

impl NeighborIndex {
    /// Chooses the kd-tree for `dim <= TREE_MAX_DIM`, brute force otherwise.
    pub fn new(data: &[f64], dim: usize) -> Self {
        Self::build(data, dim, dim > TREE_MAX_DIM)
    }

    pub fn brute_force(data: &[f64], dim: usize) -> Self {
        Self::build(data, dim, true)
    }

    pub fn kd_tree(data: &[f64], dim: usize) -> Self {
        Self::build(data, dim, false)
    }

    fn build(data: &[f64], dim: usize, brute: bool) -> Self {
        assert!(dim > 0 && data.len() % dim == 0, "point data must be [n, dim]");
        let n = data.len() / dim;
        let mut ids: Vec<usize> = (0..n).collect();
        let mut nodes = Vec::new();
        if brute {
            nodes.push(Node::Leaf { start: 0, end: n });
        } else {
            build_node(data, dim, &mut ids, 0, n, &mut nodes);
        }
        let mut ordered = Vec::with_capacity(data.len());
        for &i in &ids {
            ordered.extend_from_slice(&data[i * dim..(i + 1) * dim]);
        }
        Self { dim, data: ordered, ids, nodes, brute }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn is_brute_force(&self) -> bool {
        self.brute
    }

    fn point(&self, slot: usize) -> &[f64] {
        &self.data[slot * self.dim..(slot + 1) * self.dim]
    }

    /// Distance from `q` to its `k`-th nearest indexed point, skipping the
    /// point whose id is `exclude`. `None` if fewer than `k` candidates.
    pub fn kth_distance(&self, q: &[f64], k: usize, exclude: Option<usize>) -> Option<f64> {
        let mut best = KBest::new(k);
        self.knn_rec(0, q, exclude, &mut best);
        (best.heap.len() == k).then(|| best.bound())
    }

    fn knn_rec(&self, node: usize, q: &[f64], exclude: Option<usize>, best: &mut KBest) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for slot in start..end {
                    if Some(self.ids[slot]) != exclude {
                        best.offer(chebyshev(q, self.point(slot)));
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.knn_rec(near, q, exclude, best);
                if diff.abs() <= best.bound() {
                    self.knn_rec(far, q, exclude, best);
                }
            }
        }
    }

    /// Number of indexed points within `r` of `q` (strictly closer when
    /// `strict`), not counting the point whose id is `exclude`.
    pub fn count_within(&self, q: &[f64], r: f64, strict: bool, exclude: Option<usize>) -> usize {
        self.count_rec(0, q, r, strict, exclude)
    }

    fn count_rec(&self, node: usize, q: &[f64], r: f64, strict: bool, exclude: Option<usize>) -> usize {
        match self.nodes[node] {
            Node::Leaf { start, end } => (start..end)
                .filter(|&slot| Some(self.ids[slot]) != exclude && within(q, self.point(slot), r, strict))
                .count(),
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let mut c = 0;
                // left holds coordinates <= value, right holds >= value
                if diff <= r {
                    c += self.count_rec(left, q, r, strict, exclude);
                }
                if -diff <= r {
                    c += self.count_rec(right, q, r, strict, exclude);
                }
                c
            }
        }
    }
}

fn build_node(data: &[f64], dim: usize, ids: &mut [usize], start: usize, end: usize, nodes: &mut Vec<Node>) -> usize {
    let me = nodes.len();
    nodes.push(Node::Leaf { start, end });
    if end - start <= LEAF_SIZE {
        return me;
    }
    let slice = &mut ids[start..end];
    let coord = |i: usize, a: usize| data[i * dim + a];
    let axis = (0..dim)
        .map(|a| {
            let (lo, hi) = slice.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                (lo.min(coord(i, a)), hi.max(coord(i, a)))
            });
            (a, hi - lo)
        })
        .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    if axis.1 <= 0.0 {
        return me;
    }
    let axis = axis.0;
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| coord(a, axis).total_cmp(&coord(b, axis)));
    let value = coord(slice[mid], axis);
    let left = build_node(data, dim, ids, start, start + mid, nodes);
    let right = build_node(data, dim, ids, start + mid, end, nodes);
    nodes[me] = Node::Split { axis, value, left, right };
    me
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SimRng;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn cloud(n: usize, dim: usize, seed: u64, grid: bool) -> Vec<f64> {
        let mut rng = SimRng::seed_from_u64(seed);
        (0..n * dim)
            .map(|_| if grid { rng.random_range(0..4) as f64 } else { rng.random_range(-1.0..1.0) })
            .collect()
    }

    #[test]
    fn tree_and_brute_force_agree() {
        for (dim, grid) in [(1, false), (2, false), (3, true), (5, false), (20, false)] {
            let data = cloud(700, dim, dim as u64, grid);
            let tree = NeighborIndex::kd_tree(&data, dim);
            let brute = NeighborIndex::brute_force(&data, dim);
            for i in (0..700).step_by(7) {
                let q = &data[i * dim..(i + 1) * dim];
                for k in [1, 3, 10] {
                    let a = tree.kth_distance(q, k, Some(i));
                    assert_eq!(a, brute.kth_distance(q, k, Some(i)));
                    let r = a.unwrap();
                    for strict in [false, true] {
                        assert_eq!(
                            tree.count_within(q, r, strict, Some(i)),
                            brute.count_within(q, r, strict, Some(i))
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn counts_respect_strictness() {
        let data = [0.0, 1.0, 2.0, 3.0];
        let idx = NeighborIndex::new(&data, 1);
        assert_eq!(idx.count_within(&[1.0], 1.0, false, Some(1)), 2);
        assert_eq!(idx.count_within(&[1.0], 1.0, true, Some(1)), 0);
        assert_eq!(idx.kth_distance(&[1.0], 3, Some(1)), Some(2.0));
        assert_eq!(idx.kth_distance(&[1.0], 4, Some(1)), None);
    }

    proptest! {
        #[test]
        fn kth_distance_matches_sorted_scan(
            pts in prop::collection::vec(-5i32..5, 6..200),
            k in 1usize..4,
        ) {
            let data: Vec<f64> = pts.iter().map(|&v| v as f64).collect();
            let dim = 2;
            let n = data.len() / dim;
            prop_assume!(n > k);
            let data = &data[..n * dim];
            let idx = NeighborIndex::kd_tree(data, dim);
            for i in 0..n {
                let q = &data[i * dim..(i + 1) * dim];
                let mut d: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| chebyshev(q, &data[j * dim..(j + 1) * dim])).collect();
                d.sort_by(f64::total_cmp);
                prop_assert_eq!(idx.kth_distance(q, k, Some(i)), Some(d[k - 1]));
                let expect = d.iter().filter(|&&x| x < d[k - 1]).count();
                prop_assert_eq!(idx.count_within(q, d[k - 1], true, Some(i)), expect);
            }
        }
    }
}
