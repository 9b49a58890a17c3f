//! Random hyperplane search trees and their combinatorial twins.
//!
//! Three split rules share one builder:
//!
//! * [`build_hst`]: `d` random pivots, the rest classified by the oriented
//!   hyperplane through them.
//! * [`build_moment_hst`]: moment-curve points never materialized; the `d`
//!   pivot ranks cut the scope into `d+1` intervals and the odd-numbered
//!   ones go left. On `moment_curve(n, d)` this is the same tree as
//!   `build_hst` for every seed.
//! * [`build_fringe_tree`]: median-of-`(2t+1)` search tree whose `2t`
//!   non-median samples stay at the node.
//!
//! Node `v` with seed `s` draws its sample from `SplitMix64::new(s)`; the
//! children get `mix(s, 0)` (left) and `mix(s, 1)` (right). Nodes are stored
//! in preorder and their points in one shared slot array.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::geom::{binomial, check_budget, classify_among, for_each_combination, PointSet};
use crate::points::moment_label;
use crate::rng::{mix, SplitMix64};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Internal { left: NodeId, right: NodeId },
    Leaf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub kind: NodeKind,
    /// Edges from the root.
    pub depth: u32,
    start: usize,
    len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HstTree {
    d: usize,
    nodes: Vec<Node>,
    slots: Vec<usize>,
    source: String,
    seed: u64,
}

/// Height and mean depth of the data points of one tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeStats {
    pub n: usize,
    pub d: usize,
    pub height: u32,
    pub total_depth: u64,
    pub mean_depth: Ratio<u64>,
    /// `(|left|, |right|)` at the root; `(0, 0)` when the root is a leaf.
    pub root_split: (usize, usize),
}

impl TreeStats {
    pub fn mean_depth_f64(&self) -> f64 {
        *self.mean_depth.numer() as f64 / *self.mean_depth.denom() as f64
    }

    /// Larger root side as a fraction of the points below the root.
    pub fn larger_side_fraction(&self) -> Option<f64> {
        let (l, r) = self.root_split;
        (l + r > 0).then(|| l.max(r) as f64 / (l + r) as f64)
    }
}

impl HstTree {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    /// Pivots of an internal node or the contents of a leaf.
    pub fn points_at(&self, id: NodeId) -> &[usize] {
        let n = &self.nodes[id];
        &self.slots[n.start..n.start + n.len]
    }

    pub fn point_count(&self) -> usize {
        self.slots.len()
    }

    pub fn stats(&self) -> TreeStats {
        let n = self.point_count();
        let mut height = 0;
        let mut total: u64 = 0;
        for node in &self.nodes {
            if node.len > 0 {
                height = height.max(node.depth);
                total += u64::from(node.depth) * node.len as u64;
            }
        }
        let root_split = match self.nodes[0].kind {
            NodeKind::Internal { left, right } => {
                (self.subtree_size(left), self.subtree_size(right))
            }
            NodeKind::Leaf => (0, 0),
        };
        TreeStats {
            n,
            d: self.d,
            height,
            total_depth: total,
            mean_depth: Ratio::new(total, n.max(1) as u64),
            root_split,
        }
    }

    /// Points held in the subtree rooted at `id`. Preorder storage makes a
    /// subtree a contiguous run of slots.
    pub fn subtree_size(&self, id: NodeId) -> usize {
        let end = self.subtree_end(id);
        let start = self.nodes[id].start;
        let stop = if end < self.nodes.len() {
            self.nodes[end].start
        } else {
            self.slots.len()
        };
        stop - start
    }

    fn subtree_end(&self, id: NodeId) -> NodeId {
        let mut cur = id;
        while let NodeKind::Internal { right, .. } = self.nodes[cur].kind {
            cur = right;
        }
        cur + 1
    }

    /// `hist[k]` = number of data points at depth `k`.
    pub fn depth_histogram(&self) -> Vec<u64> {
        let mut hist = Vec::new();
        for node in &self.nodes {
            let k = node.depth as usize;
            if hist.len() <= k {
                hist.resize(k + 1, 0);
            }
            hist[k] += node.len as u64;
        }
        while hist.len() > 1 && hist.last() == Some(&0) {
            hist.pop();
        }
        hist
    }

    /// Checks the structural invariants: every index in `[0, n)` held exactly
    /// once, internal nodes hold `d` points, leaves at most `d − 1`.
    pub fn validate(&self) -> Result<()> {
        let n = self.slots.len();
        let mut seen = vec![false; n];
        for &p in &self.slots {
            if p >= n || seen[p] {
                return Err(Error::InvalidArgument(format!(
                    "point {p} missing or duplicated"
                )));
            }
            seen[p] = true;
        }
        for (id, node) in self.nodes.iter().enumerate() {
            match node.kind {
                NodeKind::Internal { left, right } => {
                    if node.len != self.d {
                        return Err(Error::InvalidArgument(format!(
                            "internal node {id} holds {}",
                            node.len
                        )));
                    }
                    for c in [left, right] {
                        if self.nodes[c].depth != node.depth + 1 {
                            return Err(Error::InvalidArgument(format!(
                                "bad depth below node {id}"
                            )));
                        }
                    }
                }
                NodeKind::Leaf => {
                    if node.len >= self.d {
                        return Err(Error::InvalidArgument(format!(
                            "leaf {id} holds {}",
                            node.len
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Checks that each internal node's subtrees are exactly the geometric
    /// classification of the points below it.
    pub fn validate_against(&self, ps: &PointSet) -> Result<()> {
        self.validate()?;
        for (id, node) in self.nodes.iter().enumerate() {
            if let NodeKind::Internal { left, right } = node.kind {
                let mut pivots = self.points_at(id).to_vec();
                pivots.sort_unstable();
                let mut below: Vec<usize> = self.subtree_points(left);
                below.extend(self.subtree_points(right));
                below.sort_unstable();
                let split = classify_among(ps, &pivots, below)?;
                let mut l = self.subtree_points(left);
                let mut r = self.subtree_points(right);
                l.sort_unstable();
                r.sort_unstable();
                if split.left != l || split.right != r {
                    return Err(Error::InvalidArgument(format!(
                        "node {id} disagrees with its hyperplane"
                    )));
                }
            }
        }
        Ok(())
    }

    fn subtree_points(&self, id: NodeId) -> Vec<usize> {
        let start = self.nodes[id].start;
        self.slots[start..start + self.subtree_size(id)].to_vec()
    }
}

/// A node split rule: given the sorted scope and `arity()` sorted sample
/// positions, returns (held, left, right).
pub trait SplitRule {
    fn arity(&self) -> usize;
    fn split(
        &self,
        scope: &[usize],
        positions: &[usize],
    ) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)>;
}

/// Oriented hyperplane through the sampled points.
pub struct Geometric<'a>(pub &'a PointSet);

impl SplitRule for Geometric<'_> {
    fn arity(&self) -> usize {
        self.0.dim()
    }

    fn split(
        &self,
        scope: &[usize],
        positions: &[usize],
    ) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
        let held: Vec<usize> = positions.iter().map(|&p| scope[p]).collect();
        let mut pivots = held.clone();
        pivots.sort_unstable();
        let rest = scope
            .iter()
            .enumerate()
            .filter(|(i, _)| positions.binary_search(i).is_err())
            .map(|(_, &q)| q);
        let s = classify_among(self.0, &pivots, rest)?;
        Ok((held, s.left, s.right))
    }
}

/// Odd-numbered gaps between sampled ranks go left, even-numbered go right.
pub struct IntervalAlternation(pub usize);

impl SplitRule for IntervalAlternation {
    fn arity(&self) -> usize {
        self.0
    }

    fn split(
        &self,
        scope: &[usize],
        positions: &[usize],
    ) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
        let held: Vec<usize> = positions.iter().map(|&p| scope[p]).collect();
        let (mut left, mut right) = (Vec::new(), Vec::new());
        let mut passed = 0;
        for (i, &q) in scope.iter().enumerate() {
            if passed < positions.len() && positions[passed] == i {
                passed += 1;
                continue;
            }
            if passed % 2 == 0 {
                left.push(q);
            } else {
                right.push(q);
            }
        }
        Ok((held, left, right))
    }
}

/// Median of `2t+1` sampled keys; the other samples stay at the node.
pub struct MedianOf(pub usize);

impl SplitRule for MedianOf {
    fn arity(&self) -> usize {
        2 * self.0 + 1
    }

    fn split(
        &self,
        scope: &[usize],
        positions: &[usize],
    ) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
        let held: Vec<usize> = positions.iter().map(|&p| scope[p]).collect();
        let median = positions[self.0];
        let (mut left, mut right) = (Vec::new(), Vec::new());
        for (i, &q) in scope.iter().enumerate() {
            if positions.binary_search(&i).is_ok() {
                continue;
            }
            if i < median {
                left.push(q);
            } else {
                right.push(q);
            }
        }
        Ok((held, left, right))
    }
}

/// Builds a tree over `scope` (sorted ascending) with the given rule.
pub fn build_with<R: SplitRule>(
    rule: &R,
    scope: Vec<usize>,
    seed: u64,
    source: String,
) -> Result<HstTree> {
    let k = rule.arity();
    let mut tree = HstTree {
        d: k,
        nodes: Vec::new(),
        slots: Vec::with_capacity(scope.len()),
        source,
        seed,
    };
    // (scope, node seed, depth, parent waiting for its right child)
    let mut stack: Vec<(Vec<usize>, u64, u32, Option<NodeId>)> = vec![(scope, seed, 0, None)];
    while let Some((scope, node_seed, depth, parent)) = stack.pop() {
        let id = tree.nodes.len();
        if let Some(p) = parent {
            if let NodeKind::Internal { ref mut right, .. } = tree.nodes[p].kind {
                *right = id;
            }
        }
        let start = tree.slots.len();
        if scope.len() < k || k == 0 {
            tree.slots.extend_from_slice(&scope);
            tree.nodes.push(Node {
                kind: NodeKind::Leaf,
                depth,
                start,
                len: scope.len(),
            });
            continue;
        }
        let mut rng = SplitMix64::new(node_seed);
        let positions = rng.sample_sorted(scope.len(), k);
        let (held, left, right) = rule.split(&scope, &positions)?;
        tree.slots.extend_from_slice(&held);
        tree.nodes.push(Node {
            kind: NodeKind::Internal {
                left: id + 1,
                right: usize::MAX,
            },
            depth,
            start,
            len: held.len(),
        });
        stack.push((right, mix(node_seed, 1), depth + 1, Some(id)));
        stack.push((left, mix(node_seed, 0), depth + 1, None));
    }
    Ok(tree)
}

/// Random hyperplane search tree on `ps`.
pub fn build_hst(ps: &PointSet, seed: u64) -> Result<HstTree> {
    build_with(
        &Geometric(ps),
        (0..ps.len()).collect(),
        seed,
        ps.label().to_string(),
    )
}

/// The hyperplane search tree of `moment_curve(n, d)`, built from ranks
/// alone. Identical to `build_hst(&moment_curve(n, d), seed)`.
pub fn build_moment_hst(n: usize, d: usize, seed: u64) -> HstTree {
    build_with(
        &IntervalAlternation(d),
        (0..n).collect(),
        seed,
        moment_label(n, d),
    )
    .expect("interval rule cannot fail")
}

/// Median-of-`(2t+1)` tree over keys `0..n`; stored as a tree of arity `2t+1`.
pub fn build_fringe_tree(n: usize, t: usize, seed: u64) -> HstTree {
    build_with(
        &MedianOf(t),
        (0..n).collect(),
        seed,
        format!("fringe(n={n},t={t})"),
    )
    .expect("median rule cannot fail")
}

/// One root split of the moment-curve model without materializing points:
/// returns `(odd-numbered gaps, even-numbered gaps)`.
pub fn simulate_moment_split(n: usize, d: usize, rng: &mut SplitMix64) -> (usize, usize) {
    assert!(n >= d, "simulate_moment_split needs n ≥ d");
    let pos = rng.sample_sorted(n, d);
    gap_sums(n, &pos)
}

fn gap_sums(n: usize, sorted_positions: &[usize]) -> (usize, usize) {
    let (mut odd, mut even) = (0, 0);
    let mut prev: isize = -1;
    for (j, &p) in sorted_positions
        .iter()
        .chain(std::iter::once(&n))
        .enumerate()
    {
        let gap = (p as isize - prev - 1) as usize;
        if j % 2 == 0 {
            odd += gap;
        } else {
            even += gap;
        }
        prev = p as isize;
    }
    (odd, even)
}

/// Exact distribution of `(|left|, |right|)` over a finite sample space.
pub type SplitDistribution = BTreeMap<(usize, usize), BigRational>;

/// Folds an ordered distribution into `(smaller, larger)` pairs.
pub fn unordered(dist: &SplitDistribution) -> SplitDistribution {
    let mut out = SplitDistribution::new();
    for (&(a, b), p) in dist {
        *out.entry((a.min(b), a.max(b)))
            .or_insert_with(BigRational::zero) += p;
    }
    out
}

/// Root split distribution of a rule over every equally likely sample.
pub fn root_split_distribution<R: SplitRule>(
    rule: &R,
    n: usize,
    budget: u64,
) -> Result<SplitDistribution> {
    let k = rule.arity();
    let mut counts: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    if n < k {
        counts.insert((0, 0), 1);
    } else {
        check_budget(binomial(n as u64, k as u64), budget)?;
        let scope: Vec<usize> = (0..n).collect();
        let mut err = None;
        for_each_combination(n, k, |c| {
            if err.is_some() {
                return;
            }
            match rule.split(&scope, c) {
                Ok((_, l, r)) => *counts.entry((l.len(), r.len())).or_default() += 1,
                Err(e) => err = Some(e),
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
    }
    let total: u64 = counts.values().sum();
    Ok(counts
        .into_iter()
        .map(|(k, c)| (k, BigRational::new(BigInt::from(c), BigInt::from(total))))
        .collect())
}

/// Closed-form pmf of the odd-side size for the moment-curve root split:
/// gap vectors are uniform over compositions of `n − d` into `d + 1` parts,
/// so `P(odd = s) = C(s+a−1, a−1)·C(n−d−s+b−1, b−1) / C(n, d)` with
/// `a = ⌈(d+1)/2⌉` odd gaps and `b = ⌊(d+1)/2⌋` even gaps.
pub fn moment_split_pmf(n: usize, d: usize) -> Vec<BigRational> {
    assert!(n >= d);
    let m = n - d;
    let a = (d + 2) / 2;
    let b = d + 1 - a;
    let comps = |total: usize, parts: usize| -> BigInt {
        if parts == 0 {
            if total == 0 {
                BigInt::one()
            } else {
                BigInt::zero()
            }
        } else {
            big_binomial(total + parts - 1, parts - 1)
        }
    };
    let denom = big_binomial(n, d);
    (0..=m)
        .map(|s| BigRational::new(comps(s, a) * comps(m - s, b), denom.clone()))
        .collect()
}

pub(crate) fn big_binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Joint law of (height, total depth) of a subtree; height is `None` for a
/// subtree without points.
pub type StatsDistribution = BTreeMap<(Option<u32>, u64), BigRational>;

/// Exact distribution of (height, total depth) over every sequence of
/// samples, by exhaustive recursion. Only for tiny inputs.
pub fn exact_stats_distribution<R: SplitRule>(
    rule: &R,
    scope: &[usize],
) -> Result<StatsDistribution> {
    let k = rule.arity();
    let mut out = StatsDistribution::new();
    if scope.len() < k || k == 0 {
        let h = (!scope.is_empty()).then_some(0);
        out.insert((h, 0), BigRational::one());
        return Ok(out);
    }
    let total = BigRational::from_integer(BigInt::from(binomial(scope.len() as u64, k as u64)));
    let mut err = None;
    for_each_combination(scope.len(), k, |c| {
        if err.is_some() {
            return;
        }
        let res = (|| -> Result<()> {
            let (_, l, r) = rule.split(scope, c)?;
            let dl = exact_stats_distribution(rule, &l)?;
            let dr = exact_stats_distribution(rule, &r)?;
            for (&(hl, tl), pl) in &dl {
                for (&(hr, tr), pr) in &dr {
                    let h = [Some(0), hl.map(|h| h + 1), hr.map(|h| h + 1)]
                        .into_iter()
                        .flatten()
                        .max();
                    let t = tl + l.len() as u64 + tr + r.len() as u64;
                    *out.entry((h, t)).or_insert_with(BigRational::zero) += pl * pr / &total;
                }
            }
            Ok(())
        })();
        if let Err(e) = res {
            err = Some(e);
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Preorder text form: a header comment, then one `I <pivots…>` or
/// `L <points…>` line per node.
pub fn format_tree(tree: &HstTree) -> String {
    let mut out = String::new();
    writeln!(out, "# hst d={} seed={}", tree.d, tree.seed).unwrap();
    writeln!(out, "# source: {}", tree.source).unwrap();
    for (id, node) in tree.nodes.iter().enumerate() {
        let tag = match node.kind {
            NodeKind::Internal { .. } => 'I',
            NodeKind::Leaf => 'L',
        };
        out.push(tag);
        for p in tree.points_at(id) {
            write!(out, " {p}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_tree(text: &str) -> Result<HstTree> {
    let path = Path::new("<tree>");
    let mut d = None;
    let mut seed = 0;
    let mut source = String::new();
    // (tag, points)
    let mut lines: Vec<(bool, Vec<usize>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if let Some(rest) = line.strip_prefix("# hst ") {
            for kv in rest.split_whitespace() {
                match kv.split_once('=') {
                    Some(("d", v)) => {
                        d = Some(
                            v.parse()
                                .map_err(|_| Error::parse(path, i + 1, 1, "bad d"))?,
                        )
                    }
                    Some(("seed", v)) => {
                        seed = v
                            .parse()
                            .map_err(|_| Error::parse(path, i + 1, 1, "bad seed"))?
                    }
                    _ => {}
                }
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix("# source: ") {
            source = rest.to_string();
            continue;
        }
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let internal = match toks.next() {
            Some("I") => true,
            Some("L") => false,
            _ => return Err(Error::parse(path, i + 1, 1, "expected `I` or `L`")),
        };
        let pts = toks
            .enumerate()
            .map(|(c, t)| {
                t.parse::<usize>()
                    .map_err(|_| Error::parse(path, i + 1, c + 2, "bad index"))
            })
            .collect::<Result<Vec<_>>>()?;
        lines.push((internal, pts));
    }
    let d = d.ok_or(Error::MissingHeader)?;
    let mut tree = HstTree {
        d,
        nodes: Vec::with_capacity(lines.len()),
        slots: Vec::new(),
        source,
        seed,
    };
    // Preorder decode: internal nodes whose left subtree is still open.
    let mut pending: Vec<NodeId> = Vec::new();
    let mut next_depth = 0;
    let mut done = false;
    for (internal, pts) in lines {
        if done {
            return Err(Error::InvalidArgument(
                "trailing nodes after a complete tree".into(),
            ));
        }
        let id = tree.nodes.len();
        let start = tree.slots.len();
        tree.slots.extend_from_slice(&pts);
        let kind = if internal {
            NodeKind::Internal {
                left: id + 1,
                right: usize::MAX,
            }
        } else {
            NodeKind::Leaf
        };
        tree.nodes.push(Node {
            kind,
            depth: next_depth,
            start,
            len: pts.len(),
        });
        if internal {
            pending.push(id);
            next_depth += 1;
        } else if let Some(p) = pending.pop() {
            if let NodeKind::Internal { ref mut right, .. } = tree.nodes[p].kind {
                *right = id + 1;
            }
            next_depth = tree.nodes[p].depth + 1;
        } else {
            done = true;
        }
    }
    if !done {
        return Err(Error::InvalidArgument("truncated tree".into()));
    }
    tree.validate()?;
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Point, DEFAULT_BUDGET};
    use crate::points::moment_curve;

    fn r(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn fewer_points_than_d_is_a_leaf() {
        let ps = PointSet::new(
            4,
            (0..3)
                .map(|i| Point::from_integers([i, i * i, 7 * i, 1]))
                .collect(),
            "x",
        )
        .unwrap();
        let t = build_hst(&ps, 1).unwrap();
        assert_eq!(t.nodes().len(), 1);
        let s = t.stats();
        assert_eq!((s.height, s.total_depth, s.root_split), (0, 0, (0, 0)));
    }

    #[test]
    fn exactly_d_points() {
        let t = build_hst(&moment_curve(3, 3), 5).unwrap();
        assert_eq!(t.nodes().len(), 3);
        assert!(matches!(
            t.node(0).kind,
            NodeKind::Internal { left: 1, right: 2 }
        ));
        let s = t.stats();
        assert_eq!((s.height, s.total_depth, s.root_split), (0, 0, (0, 0)));
    }

    #[test]
    fn hand_built_perfect_tree() {
        // d = 1, keys 0..7, medians at every level.
        let text = "# hst d=1 seed=0\n# source: perfect\nI 3\nI 1\nI 0\nL\nL\nI 2\nL\nL\nI 5\nI 4\nL\nL\nI 6\nL\nL\n";
        let t = parse_tree(text).unwrap();
        let s = t.stats();
        assert_eq!(s.height, 2);
        assert_eq!(s.mean_depth, Ratio::new(10, 7));
        assert_eq!(t.stats(), s);
        assert_eq!(s.root_split, (3, 3));
    }

    #[test]
    fn geometric_and_interval_builds_coincide_on_moment_curve() {
        for d in 1..=3 {
            for n in [1, d, d + 1, 9, 17] {
                let ps = moment_curve(n, d);
                for seed in 0..10 {
                    let g = build_hst(&ps, seed).unwrap();
                    let m = build_moment_hst(n, d, seed);
                    assert_eq!(format_tree(&g), format_tree(&m));
                    g.validate_against(&ps).unwrap();
                }
            }
        }
    }

    #[test]
    fn deterministic_and_serializable() {
        let t1 = build_moment_hst(200, 3, 99);
        let t2 = build_moment_hst(200, 3, 99);
        assert_eq!(format_tree(&t1), format_tree(&t2));
        let back = parse_tree(&format_tree(&t1)).unwrap();
        assert_eq!(back, t1);
        let f = build_fringe_tree(50, 1, 3);
        assert_eq!(parse_tree(&format_tree(&f)).unwrap(), f);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_tree("").is_err());
        assert!(parse_tree("# hst d=1 seed=0\nI 0\nL\n").is_err());
        assert!(parse_tree("# hst d=1 seed=0\nL\nL\n").is_err());
        assert!(parse_tree("# hst d=1 seed=0\nX 1\n").is_err());
    }

    #[test]
    fn simulated_split_edge_cases() {
        let mut rng = SplitMix64::new(0);
        assert_eq!(simulate_moment_split(3, 3, &mut rng), (0, 0));
        for _ in 0..100 {
            let (a, b) = simulate_moment_split(10, 3, &mut rng);
            assert_eq!(a + b, 7);
        }
    }

    #[test]
    fn moment_split_d2_n4_enumeration() {
        // pivot pairs (1-based): {1,2},{2,3},{3,4},{1,4} → (2,0) unordered; {1,3},{2,4} → (1,1)
        let mut seen = BTreeMap::new();
        for_each_combination(4, 2, |c| {
            let (o, e) = gap_sums(4, c);
            seen.insert((c[0] + 1, c[1] + 1), (o.min(e), o.max(e)));
        });
        for pair in [(1, 2), (2, 3), (3, 4), (1, 4)] {
            assert_eq!(seen[&pair], (0, 2));
        }
        assert_eq!(seen[&(1, 3)], (1, 1));
        assert_eq!(seen[&(2, 4)], (1, 1));

        let interval = root_split_distribution(&IntervalAlternation(2), 4, DEFAULT_BUDGET).unwrap();
        let geometric =
            root_split_distribution(&Geometric(&moment_curve(4, 2)), 4, DEFAULT_BUDGET).unwrap();
        assert_eq!(unordered(&interval), unordered(&geometric));
        assert_eq!(unordered(&interval)[&(0, 2)], r(2, 3));
    }

    #[test]
    fn root_split_moment_6_2_matches_geometry() {
        let a = root_split_distribution(&IntervalAlternation(2), 6, DEFAULT_BUDGET).unwrap();
        let b =
            root_split_distribution(&Geometric(&moment_curve(6, 2)), 6, DEFAULT_BUDGET).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            root_split_distribution(&IntervalAlternation(3), 2, DEFAULT_BUDGET).unwrap()[&(0, 0)],
            r(1, 1)
        );
    }

    #[test]
    fn d1_left_size_is_uniform() {
        let dist = root_split_distribution(&IntervalAlternation(1), 5, DEFAULT_BUDGET).unwrap();
        for l in 0..5 {
            assert_eq!(dist[&(l, 4 - l)], r(1, 5));
        }
        let fringe = root_split_distribution(&MedianOf(0), 5, DEFAULT_BUDGET).unwrap();
        assert_eq!(dist, fringe);
    }

    #[test]
    fn fringe_7_1_matches_moment_7_3() {
        let f = root_split_distribution(&MedianOf(1), 7, DEFAULT_BUDGET).unwrap();
        let m = root_split_distribution(&IntervalAlternation(3), 7, DEFAULT_BUDGET).unwrap();
        assert_eq!(f, m);
    }

    #[test]
    fn closed_form_pmf_matches_enumeration() {
        for d in 1..=4 {
            for n in d..=9 {
                let pmf = moment_split_pmf(n, d);
                let dist =
                    root_split_distribution(&IntervalAlternation(d), n, DEFAULT_BUDGET).unwrap();
                for (s, p) in pmf.iter().enumerate() {
                    let want = dist
                        .get(&(s, n - d - s))
                        .cloned()
                        .unwrap_or_else(BigRational::zero);
                    assert_eq!(*p, want, "n={n} d={d} s={s}");
                }
            }
        }
    }

    #[test]
    fn fringe_small_is_leaf() {
        let t = build_fringe_tree(2, 1, 0);
        assert_eq!(t.nodes().len(), 1);
        assert_eq!(t.stats().height, 0);
        let t = build_fringe_tree(100, 2, 7);
        t.validate().unwrap();
        let s = t.stats();
        assert_eq!(s.root_split.0 + s.root_split.1, 95);
    }

    #[test]
    fn d1_n3_exhaustive_stats() {
        // Pivot 2 → depths (0,1,1); pivot 1 or 3 → depths (0,1,2).
        let dist = exact_stats_distribution(&Geometric(&moment_curve(3, 1)), &[0, 1, 2]).unwrap();
        assert_eq!(dist.len(), 2);
        assert_eq!(dist[&(Some(1), 2)], r(1, 3));
        assert_eq!(dist[&(Some(2), 3)], r(2, 3));
        let via_interval = exact_stats_distribution(&IntervalAlternation(1), &[0, 1, 2]).unwrap();
        assert_eq!(dist, via_interval);
    }

    #[test]
    fn depth_histogram_sums_to_n() {
        let t = build_moment_hst(500, 2, 4);
        let h = t.depth_histogram();
        assert_eq!(h.iter().sum::<u64>(), 500);
        let s = t.stats();
        assert_eq!(h.len() as u32 - 1, s.height);
        let total: u64 = h.iter().enumerate().map(|(k, &c)| k as u64 * c).sum();
        assert_eq!(total, s.total_depth);
    }
}
