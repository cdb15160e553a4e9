//! Evaluation store and the piecewise-constant nearest-neighbor
//! interpolant built on it.
//!
//! Sites are kept in internal units. Distances are Euclidean with wrapped
//! differences on periodic axes. Among equidistant sites the one inserted
//! first wins, so the interpolant is deterministic.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::space::DesignSpace;

/// Origin of a stored evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RecordTag {
    Doe,
    Perturbation,
    /// Imported from outside the optimizer.
    External,
    /// Objective failed and the penalty value was substituted.
    Failure,
}

impl RecordTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RecordTag::Doe => "doe",
            RecordTag::Perturbation => "perturbation",
            RecordTag::External => "external",
            RecordTag::Failure => "external-failure",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "doe" => RecordTag::Doe,
            "perturbation" => RecordTag::Perturbation,
            "external" => RecordTag::External,
            "external-failure" => RecordTag::Failure,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRecord {
    pub site: Vec<f64>,
    pub value: f64,
    pub iteration: usize,
    pub tag: RecordTag,
}

/// Result of a nearest-neighbor lookup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NnMatch<'a> {
    pub index: usize,
    pub site: &'a [f64],
    pub value: f64,
    pub distance: f64,
}

const LEAF_SIZE: usize = 8;
/// Unindexed tail length that triggers an automatic rebuild.
const TAIL_LIMIT: usize = 256;
/// Cells whose lower bound exceeds the best distance by less than this
/// factor are still visited, so rounding never hides an exact tie.
const PRUNE_SLACK: f64 = 1.0 + 1e-12;
/// Queries up to this dimension wrap into a stack buffer.
const STACK_DIM: usize = 16;

/// Tree node covering `order[start..end]`; leaves have no children.
#[derive(Debug, Clone)]
struct Node {
    start: usize,
    end: usize,
    children: Option<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct NnIndex {
    space: DesignSpace,
    records: Vec<EvaluationRecord>,
    /// Record indices in tree order; covers `records[..indexed]`.
    order: Vec<usize>,
    /// Sites in tree order, `dim` values each.
    points: Vec<f64>,
    nodes: Vec<Node>,
    /// Tight bounding box per node: `dim` lower then `dim` upper values.
    boxes: Vec<f64>,
    indexed: usize,
    any_periodic: bool,
}

impl NnIndex {
    pub fn new(space: DesignSpace) -> Self {
        let any_periodic = space.periodic().iter().any(|&p| p);
        Self {
            space,
            records: Vec::new(),
            order: Vec::new(),
            points: Vec::new(),
            nodes: Vec::new(),
            boxes: Vec::new(),
            indexed: 0,
            any_periodic,
        }
    }

    pub fn space(&self) -> &DesignSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[EvaluationRecord] {
        &self.records
    }

    fn validate(&self, record: &EvaluationRecord) -> Result<()> {
        let d = self.space.dim();
        if record.site.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: record.site.len() });
        }
        if !record.value.is_finite() {
            return Err(Error::NonFinite { what: "record value", value: record.value });
        }
        if let Some(&v) = record.site.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "record site", value: v });
        }
        Ok(())
    }

    /// Appends one record; it is visible to queries immediately.
    pub fn insert(&mut self, mut record: EvaluationRecord) -> Result<()> {
        self.validate(&record)?;
        for (axis, v) in record.site.iter_mut().enumerate() {
            *v = self.space.wrap(axis, *v);
        }
        self.records.push(record);
        if self.records.len() - self.indexed > TAIL_LIMIT {
            self.rebuild();
        }
        Ok(())
    }

    /// Appends a batch and rebuilds the tree once. Nothing is inserted if
    /// any record is invalid.
    pub fn insert_batch(&mut self, records: impl IntoIterator<Item = EvaluationRecord>) -> Result<()> {
        let batch: Vec<_> = records.into_iter().collect();
        for r in &batch {
            self.validate(r)?;
        }
        for mut r in batch {
            for (axis, v) in r.site.iter_mut().enumerate() {
                *v = self.space.wrap(axis, *v);
            }
            self.records.push(r);
        }
        self.rebuild();
        Ok(())
    }

    /// Rebuilds the balanced k-d tree over every stored record.
    pub fn rebuild(&mut self) {
        let mut order: Vec<usize> = (0..self.records.len()).collect();
        self.nodes.clear();
        self.boxes.clear();
        self.indexed = self.records.len();
        if self.indexed > 0 {
            self.build(&mut order, 0);
        }
        self.points = order.iter().flat_map(|&i| self.records[i].site.iter().copied()).collect();
        self.order = order;
    }

    fn build(&mut self, order: &mut [usize], offset: usize) -> usize {
        let d = self.space.dim();
        let id = self.nodes.len();
        let records = &self.records;
        let base = self.boxes.len();
        self.boxes.resize(base + 2 * d, 0.0);
        let mut widest = (0, f64::NEG_INFINITY);
        for a in 0..d {
            let (lo, hi) = order.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                let v = records[i].site[a];
                (lo.min(v), hi.max(v))
            });
            self.boxes[base + a] = lo;
            self.boxes[base + d + a] = hi;
            if hi - lo > widest.1 {
                widest = (a, hi - lo);
            }
        }
        self.nodes.push(Node { start: offset, end: offset + order.len(), children: None });
        if order.len() <= LEAF_SIZE {
            return id;
        }
        let axis = widest.0;
        let mid = order.len() / 2;
        order.select_nth_unstable_by(mid, |&i, &j| {
            records[i].site[axis].total_cmp(&records[j].site[axis]).then(i.cmp(&j))
        });
        let (lo, hi) = order.split_at_mut(mid);
        let left = self.build(lo, offset);
        let right = self.build(hi, offset + mid);
        self.nodes[id].children = Some((left, right));
        id
    }

    /// Distance from `q` to the interval `[lo, hi]` along `axis`.
    fn interval_gap(&self, axis: usize, q: f64, lo: f64, hi: f64) -> f64 {
        if q >= lo && q <= hi {
            return 0.0;
        }
        if self.space.is_periodic(axis) {
            let a = self.space.axis_diff(axis, q, lo).abs();
            let b = self.space.axis_diff(axis, q, hi).abs();
            a.min(b)
        } else if q < lo {
            lo - q
        } else {
            q - hi
        }
    }

    /// Squared distance from `q` to the bounding box of `node`.
    fn box_bound(&self, node: usize, q: &[f64]) -> f64 {
        let d = q.len();
        let b = &self.boxes[2 * d * node..2 * d * (node + 1)];
        let mut sum = 0.0;
        if self.any_periodic {
            for a in 0..d {
                let g = self.interval_gap(a, q[a], b[a], b[d + a]);
                sum += g * g;
            }
        } else {
            for a in 0..d {
                let g = (b[a] - q[a]).max(q[a] - b[d + a]).max(0.0);
                sum += g * g;
            }
        }
        sum
    }

    /// Closest stored record to `x` (internal units).
    pub fn nn_query(&self, x: &[f64]) -> Result<NnMatch<'_>> {
        let d = self.space.dim();
        if x.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x.len() });
        }
        if self.records.is_empty() {
            return Err(Error::EmptyIndex);
        }
        let mut stack = [0.0; STACK_DIM];
        let mut heap = Vec::new();
        let q: &mut [f64] = if d <= STACK_DIM {
            &mut stack[..d]
        } else {
            heap.resize(d, 0.0);
            &mut heap
        };
        for (a, v) in q.iter_mut().enumerate() {
            *v = self.space.wrap(a, x[a]);
        }
        let mut best = (f64::INFINITY, usize::MAX);
        if self.indexed > 0 {
            self.search(0, q, &mut best);
        }
        for i in self.indexed..self.records.len() {
            self.consider(i, q, &mut best);
        }
        let r = &self.records[best.1];
        Ok(NnMatch { index: best.1, site: &r.site, value: r.value, distance: libm::sqrt(best.0) })
    }

    /// Value of the nearest-neighbor interpolant at `x`.
    pub fn nn_predict(&self, x: &[f64]) -> Result<f64> {
        self.nn_query(x).map(|m| m.value)
    }

    fn consider(&self, i: usize, q: &[f64], best: &mut (f64, usize)) {
        let dist = self.space.distance_sq(q, &self.records[i].site);
        if dist < best.0 || (dist == best.0 && i < best.1) {
            *best = (dist, i);
        }
    }

    /// Like `consider` for the site at tree position `p`, abandoning the
    /// sum once it exceeds the best distance.
    fn consider_indexed(&self, p: usize, q: &[f64], best: &mut (f64, usize)) {
        let d = q.len();
        let site = &self.points[p * d..(p + 1) * d];
        let mut dist = 0.0;
        if self.any_periodic {
            for a in 0..d {
                let t = self.space.axis_diff(a, q[a], site[a]);
                dist += t * t;
                if dist > best.0 {
                    return;
                }
            }
        } else {
            for a in 0..d {
                let t = q[a] - site[a];
                dist += t * t;
                if dist > best.0 {
                    return;
                }
            }
        }
        let i = self.order[p];
        if dist < best.0 || i < best.1 {
            *best = (dist, i);
        }
    }

    fn search(&self, node: usize, q: &[f64], best: &mut (f64, usize)) {
        let n = &self.nodes[node];
        match n.children {
            None => {
                for p in n.start..n.end {
                    self.consider_indexed(p, q, best);
                }
            }
            Some((left, right)) => {
                let bl = self.box_bound(left, q);
                let br = self.box_bound(right, q);
                let ((first, fb), (second, sb)) = if bl <= br { ((left, bl), (right, br)) } else { ((right, br), (left, bl)) };
                if fb <= best.0 * PRUNE_SLACK {
                    self.search(first, q, best);
                }
                if sb <= best.0 * PRUNE_SLACK {
                    self.search(second, q, best);
                }
            }
        }
    }

    /// Reference O(N·d) lookup used to cross-check the tree.
    pub fn linear_scan(&self, x: &[f64]) -> Result<NnMatch<'_>> {
        if self.records.is_empty() {
            return Err(Error::EmptyIndex);
        }
        let q: Vec<f64> = x.iter().enumerate().map(|(a, &v)| self.space.wrap(a, v)).collect();
        let mut best = (f64::INFINITY, usize::MAX);
        for i in 0..self.records.len() {
            self.consider(i, &q, &mut best);
        }
        let r = &self.records[best.1];
        Ok(NnMatch { index: best.1, site: &r.site, value: r.value, distance: libm::sqrt(best.0) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::SeededStream;
    use alloc::vec;
    use rand::Rng;

    fn rec(site: Vec<f64>, value: f64) -> EvaluationRecord {
        EvaluationRecord { site, value, iteration: 0, tag: RecordTag::Doe }
    }

    fn line() -> NnIndex {
        NnIndex::new(DesignSpace::unscaled(vec![-10.0], vec![10.0]).unwrap())
    }

    #[test]
    fn single_record_is_constant() {
        let mut idx = line();
        idx.insert(rec(vec![0.3], 2.5)).unwrap();
        assert_eq!(idx.len(), 1);
        for x in [-5.0, 0.0, 0.3, 7.0] {
            assert_eq!(idx.nn_predict(&[x]).unwrap(), 2.5);
        }
        let m = idx.nn_query(&[1.3]).unwrap();
        assert_eq!(m.site, &[0.3]);
        assert!((m.distance - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_sites_split_at_midpoint() {
        let mut idx = line();
        idx.insert_batch([rec(vec![0.0], 1.0), rec(vec![1.0], 3.0)]).unwrap();
        assert_eq!(idx.nn_predict(&[0.4]).unwrap(), 1.0);
        assert_eq!(idx.nn_predict(&[0.6]).unwrap(), 3.0);
        assert_eq!(idx.nn_predict(&[1.0]).unwrap(), 3.0);
        assert_eq!(idx.nn_query(&[1.0]).unwrap().distance, 0.0);
    }

    #[test]
    fn duplicate_site_keeps_earliest() {
        let mut idx = line();
        idx.insert(rec(vec![0.5], 1.0)).unwrap();
        idx.insert(rec(vec![0.5], 9.0)).unwrap();
        assert_eq!(idx.len(), 2);
        assert_eq!(idx.nn_predict(&[0.5]).unwrap(), 1.0);
        idx.rebuild();
        assert_eq!(idx.nn_query(&[0.7]).unwrap().index, 0);
    }

    #[test]
    fn equidistant_tie_goes_to_first_inserted() {
        let mut idx = line();
        idx.insert_batch([rec(vec![1.0], 5.0), rec(vec![-1.0], 7.0)]).unwrap();
        assert_eq!(idx.nn_predict(&[0.0]).unwrap(), 5.0);
    }

    #[test]
    fn errors() {
        let mut idx = line();
        assert_eq!(idx.nn_predict(&[0.0]), Err(Error::EmptyIndex));
        assert!(matches!(idx.insert(rec(vec![0.0], f64::NAN)), Err(Error::NonFinite { .. })));
        assert!(matches!(idx.insert(rec(vec![0.0, 1.0], 1.0)), Err(Error::DimensionMismatch { .. })));
        assert!(idx.insert_batch([rec(vec![0.0], 1.0), rec(vec![0.0], f64::INFINITY)]).is_err());
        assert!(idx.is_empty());
    }

    #[test]
    fn periodic_axis_wraps_distance() {
        let space = DesignSpace::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![true, false], vec![1.0, 1.0]).unwrap();
        let mut idx = NnIndex::new(space);
        idx.insert_batch([rec(vec![0.02, 0.5], 1.0), rec(vec![0.6, 0.5], 2.0)]).unwrap();
        assert_eq!(idx.nn_predict(&[0.97, 0.5]).unwrap(), 1.0);
        assert_eq!(idx.nn_predict(&[-0.03, 0.5]).unwrap(), 1.0);
    }

    fn random_index(n: usize, d: usize, periodic: bool, seed: u64) -> NnIndex {
        let mut per = vec![false; d];
        if periodic {
            per[0] = true;
        }
        let space = DesignSpace::new(vec![0.0; d], vec![1.0; d], per, vec![1.0; d]).unwrap();
        let mut idx = NnIndex::new(space);
        let mut rng = SeededStream::new(seed, 0).rng();
        for i in 0..n {
            let site = (0..d).map(|_| rng.random::<f64>()).collect();
            let r = rec(site, (i as f64 * 0.37).sin());
            if i % 3 == 0 {
                idx.insert(r).unwrap();
            } else {
                idx.insert_batch([r]).unwrap();
            }
        }
        idx
    }

    #[test]
    fn tree_matches_linear_scan() {
        for (d, periodic) in [(1, false), (2, true), (3, false), (6, true)] {
            let idx = random_index(1000, d, periodic, d as u64);
            let mut rng = SeededStream::new(99, d as u64).rng();
            for _ in 0..100 {
                let q: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 1.4 - 0.2).collect();
                let a = idx.nn_query(&q).unwrap();
                let b = idx.linear_scan(&q).unwrap();
                assert_eq!(a.index, b.index);
                assert_eq!(a.distance, b.distance);
            }
        }
    }

    #[test]
    fn lattice_ties_match_scan() {
        for d in [2, 3] {
            let space = DesignSpace::unscaled(vec![0.0; d], vec![4.0; d]).unwrap();
            let mut idx = NnIndex::new(space);
            let cells = 5usize.pow(d as u32);
            let site = |c: usize| (0..d).map(|a| ((c / 5usize.pow(a as u32)) % 5) as f64).collect::<Vec<_>>();
            // every site twice, second copies later
            idx.insert_batch((0..2 * cells).map(|i| rec(site(i % cells), i as f64))).unwrap();
            let mut rng = SeededStream::new(5, d as u64).rng();
            for _ in 0..500 {
                let q: Vec<f64> = (0..d).map(|_| rng.random_range(-2..10) as f64 * 0.5).collect();
                let (a, b) = (idx.nn_query(&q).unwrap(), idx.linear_scan(&q).unwrap());
                assert_eq!((a.index, a.distance), (b.index, b.distance), "{q:?}");
                assert!(a.index < cells);
            }
        }
    }

    #[test]
    fn small_random_set_matches_scan() {
        let idx = random_index(5, 2, false, 42);
        let mut rng = SeededStream::new(1, 1).rng();
        for _ in 0..20 {
            let q = [rng.random::<f64>(), rng.random::<f64>()];
            assert_eq!(idx.nn_query(&q).unwrap().index, idx.linear_scan(&q).unwrap().index);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn sites() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
            proptest::collection::vec((0.0..1.0f64, 0.0..1.0f64, -5.0..5.0f64), 1..80)
        }

        proptest! {
            #[test]
            fn interpolates_and_preserves_range(pts in sites(), q in (-0.5..1.5f64, -0.5..1.5f64)) {
                let mut idx = NnIndex::new(DesignSpace::unscaled(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap());
                idx.insert_batch(pts.iter().map(|&(a, b, v)| rec(vec![a, b], v))).unwrap();
                let lo = pts.iter().map(|p| p.2).fold(f64::INFINITY, f64::min);
                let hi = pts.iter().map(|p| p.2).fold(f64::NEG_INFINITY, f64::max);
                let y = idx.nn_predict(&[q.0, q.1]).unwrap();
                prop_assert!(lo <= y && y <= hi);
                for (i, &(a, b, _)) in pts.iter().enumerate() {
                    let m = idx.nn_query(&[a, b]).unwrap();
                    prop_assert_eq!(m.distance, 0.0);
                    // coincident earlier site may win the tie
                    prop_assert!(m.index <= i);
                }
                let t = idx.nn_query(&[q.0, q.1]).unwrap();
                let s = idx.linear_scan(&[q.0, q.1]).unwrap();
                prop_assert_eq!(t.index, s.index);
            }

            #[test]
            fn insertion_is_monotone_refinement(pts in sites(), new in (0.0..1.0f64, 0.0..1.0f64), q in (0.0..1.0f64, 0.0..1.0f64)) {
                let mut idx = NnIndex::new(DesignSpace::unscaled(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap());
                idx.insert_batch(pts.iter().map(|&(a, b, v)| rec(vec![a, b], v))).unwrap();
                let before = idx.nn_query(&[q.0, q.1]).unwrap();
                let (prev_dist, prev_val) = (before.distance, before.value);
                let to_new = libm::sqrt((q.0 - new.0).powi(2) + (q.1 - new.1).powi(2));
                idx.insert(rec(vec![new.0, new.1], 1e3)).unwrap();
                if prev_dist < to_new {
                    prop_assert_eq!(idx.nn_predict(&[q.0, q.1]).unwrap(), prev_val);
                }
            }
        }
    }
}
