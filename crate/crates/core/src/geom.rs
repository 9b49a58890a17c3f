//! Exact orientation predicates over rational coordinates.
//!
//! Every point is lifted to an integer homogeneous row
//! `(L·x_1, …, L·x_d, L)` where `L > 0` clears its denominators. Positive
//! row scaling never changes a determinant's sign, so all predicates run on
//! integers with fraction-free (Bareiss) elimination.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on how many subsets an exhaustive routine may enumerate.
pub const DEFAULT_BUDGET: u64 = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Point {
    pub coords: Vec<BigRational>,
}

impl Point {
    pub fn new(coords: Vec<BigRational>) -> Self {
        Point { coords }
    }

    pub fn from_integers<I: IntoIterator<Item = i64>>(coords: I) -> Self {
        Point {
            coords: coords
                .into_iter()
                .map(|c| BigRational::from_integer(c.into()))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    fn homogeneous(&self) -> Vec<BigInt> {
        let lcm = self
            .coords
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let mut row: Vec<BigInt> = self
            .coords
            .iter()
            .map(|c| c.numer() * (&lcm / c.denom()))
            .collect();
        row.push(lcm);
        row
    }
}

/// `n ≥ 1` points in `ℝ^d`, addressed by stable 0-based index.
#[derive(Debug, Clone)]
pub struct PointSet {
    d: usize,
    points: Vec<Point>,
    label: String,
    hom: Vec<Vec<BigInt>>,
}

impl PartialEq for PointSet {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.label == other.label && self.points == other.points
    }
}

impl Eq for PointSet {}

impl PointSet {
    pub fn new(d: usize, points: Vec<Point>, label: impl Into<String>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if points.is_empty() {
            return Err(Error::InvalidArgument(
                "a point set needs at least one point".into(),
            ));
        }
        if let Some(p) = points.iter().find(|p| p.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.dim(),
            });
        }
        let hom = points.iter().map(Point::homogeneous).collect();
        Ok(PointSet {
            d,
            points,
            label: label.into(),
            hom,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Applies `f` to every point, keeping the label.
    pub fn map_points<F: FnMut(&Point) -> Point>(&self, f: F) -> Result<PointSet> {
        let pts = self.points.iter().map(f).collect();
        PointSet::new(self.d, pts, self.label.clone())
    }

    fn check_indices(&self, idx: &[usize]) -> Result<()> {
        for (k, &i) in idx.iter().enumerate() {
            if i >= self.len() {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    len: self.len(),
                });
            }
            if idx[..k].contains(&i) {
                return Err(Error::RepeatedIndex { index: i });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    Negative,
    Zero,
    Positive,
}

impl Orientation {
    pub fn sign(self) -> i8 {
        match self {
            Orientation::Negative => -1,
            Orientation::Zero => 0,
            Orientation::Positive => 1,
        }
    }

    fn of(x: &BigInt) -> Self {
        if x.is_positive() {
            Orientation::Positive
        } else if x.is_negative() {
            Orientation::Negative
        } else {
            Orientation::Zero
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Orientation::Negative => Orientation::Positive,
            Orientation::Zero => Orientation::Zero,
            Orientation::Positive => Orientation::Negative,
        }
    }
}

/// Determinant of a square integer matrix by Bareiss elimination.
pub(crate) fn det(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut negate = false;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(k, i);
                    negate = !negate;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    let d = a[n - 1][n - 1].clone();
    if negate {
        -d
    } else {
        d
    }
}

/// Sign of the `(d+1)×(d+1)` determinant whose rows are the listed points in
/// homogeneous form (coordinates followed by 1), in the given order.
pub fn orientation(ps: &PointSet, tuple: &[usize]) -> Result<Orientation> {
    if tuple.len() != ps.d + 1 {
        return Err(Error::WrongArity {
            expected: ps.d + 1,
            got: tuple.len(),
        });
    }
    ps.check_indices(tuple)?;
    let m: Vec<Vec<BigInt>> = tuple.iter().map(|&i| ps.hom[i].clone()).collect();
    Ok(Orientation::of(&det(m)))
}

/// The oriented affine hull of `d` points: the orientation of
/// `(p_1, …, p_d, q)` equals the sign of `⟨normal, hom(q)⟩`.
#[derive(Debug, Clone)]
pub struct Hyperplane {
    normal: Vec<BigInt>,
}

impl Hyperplane {
    /// `pivots` are taken in the order given.
    pub fn through(ps: &PointSet, pivots: &[usize]) -> Result<Hyperplane> {
        let d = ps.d;
        if pivots.len() != d {
            return Err(Error::WrongArity {
                expected: d,
                got: pivots.len(),
            });
        }
        ps.check_indices(pivots)?;
        // Expand the determinant along the appended last row.
        let normal = (0..=d)
            .map(|col| {
                let minor: Vec<Vec<BigInt>> = pivots
                    .iter()
                    .map(|&p| {
                        ps.hom[p]
                            .iter()
                            .enumerate()
                            .filter(|&(j, _)| j != col)
                            .map(|(_, v)| v.clone())
                            .collect()
                    })
                    .collect();
                let m = det(minor);
                if (d + col) % 2 == 1 {
                    -m
                } else {
                    m
                }
            })
            .collect();
        Ok(Hyperplane { normal })
    }

    pub fn side(&self, ps: &PointSet, q: usize) -> Orientation {
        let row = &ps.hom[q];
        let mut acc = BigInt::zero();
        for (a, b) in self.normal.iter().zip(row) {
            acc += a * b;
        }
        Orientation::of(&acc)
    }
}

/// Non-pivot points on the positive (`left`) and negative (`right`) side of
/// the hyperplane through the pivots taken in ascending index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

impl Split {
    pub fn sizes(&self) -> (usize, usize) {
        (self.left.len(), self.right.len())
    }

    /// Sizes as an unordered pair `(smaller, larger)`.
    pub fn unordered(&self) -> (usize, usize) {
        let (a, b) = self.sizes();
        (a.min(b), a.max(b))
    }
}

pub fn classify_split(ps: &PointSet, pivots: &[usize]) -> Result<Split> {
    let mut sorted = pivots.to_vec();
    sorted.sort_unstable();
    let others = (0..ps.len()).filter(|i| sorted.binary_search(i).is_err());
    classify_among(ps, &sorted, others)
}

/// Classifies `candidates` against the hyperplane through `sorted_pivots`,
/// preserving candidate order within each side.
pub(crate) fn classify_among<I: IntoIterator<Item = usize>>(
    ps: &PointSet,
    sorted_pivots: &[usize],
    candidates: I,
) -> Result<Split> {
    let h = Hyperplane::through(ps, sorted_pivots)?;
    let mut split = Split {
        left: Vec::new(),
        right: Vec::new(),
    };
    for q in candidates {
        match h.side(ps, q) {
            Orientation::Positive => split.left.push(q),
            Orientation::Negative => split.right.push(q),
            Orientation::Zero => {
                return Err(Error::Degenerate {
                    pivots: sorted_pivots.to_vec(),
                    point: q,
                })
            }
        }
    }
    Ok(split)
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = match acc.checked_mul(u128::from(n - i)) {
            Some(v) => v / u128::from(i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

pub(crate) fn check_budget(needed: u128, budget: u64) -> Result<()> {
    if needed > u128::from(budget) {
        Err(Error::BudgetExceeded { needed, budget })
    } else {
        Ok(())
    }
}

/// Calls `f` with every `k`-subset of `[0, n)` in lexicographic order.
pub fn for_each_combination<F: FnMut(&[usize])>(n: usize, k: usize, mut f: F) {
    if k > n {
        return;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        f(&c);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if c[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        c[i] += 1;
        for j in i + 1..k {
            c[j] = c[j - 1] + 1;
        }
    }
}

/// True iff every `(d+1)`-subset is affinely independent. Enumerates
/// `C(n, d+1)` determinants, so it is gated on `budget`.
pub fn is_general_position(ps: &PointSet, budget: u64) -> Result<bool> {
    let n = ps.len();
    let k = ps.d + 1;
    if n < k {
        return Ok(true);
    }
    check_budget(binomial(n as u64, k as u64), budget)?;
    let mut ok = true;
    for_each_combination(n, k, |c| {
        if ok {
            let m: Vec<Vec<BigInt>> = c.iter().map(|&i| ps.hom[i].clone()).collect();
            if det(m).is_zero() {
                ok = false;
            }
        }
    });
    Ok(ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(d: usize, rows: &[&[i64]]) -> PointSet {
        PointSet::new(
            d,
            rows.iter()
                .map(|r| Point::from_integers(r.iter().copied()))
                .collect(),
            "t",
        )
        .unwrap()
    }

    #[test]
    fn ccw_standard_simplex_is_positive() {
        let ps = set(2, &[&[0, 0], &[1, 0], &[0, 1]]);
        assert_eq!(orientation(&ps, &[0, 1, 2]).unwrap(), Orientation::Positive);
        assert_eq!(orientation(&ps, &[1, 0, 2]).unwrap(), Orientation::Negative);
    }

    #[test]
    fn collinear_is_zero() {
        let ps = set(2, &[&[0, 0], &[1, 1], &[2, 2]]);
        assert_eq!(orientation(&ps, &[0, 1, 2]).unwrap(), Orientation::Zero);
    }

    #[test]
    fn orientation_errors() {
        let ps = set(2, &[&[0, 0], &[1, 0], &[0, 1]]);
        assert!(matches!(
            orientation(&ps, &[0, 1]),
            Err(Error::WrongArity { .. })
        ));
        assert!(matches!(
            orientation(&ps, &[0, 1, 1]),
            Err(Error::RepeatedIndex { index: 1 })
        ));
        assert!(matches!(
            orientation(&ps, &[0, 1, 7]),
            Err(Error::IndexOutOfRange { .. })
        ));
        let bad = PointSet::new(2, vec![Point::from_integers([1, 2, 3])], "x");
        assert!(matches!(
            bad,
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 3
            })
        ));
    }

    #[test]
    fn rational_coordinates() {
        let half = BigRational::new(1.into(), 2.into());
        let ps = PointSet::new(
            2,
            vec![
                Point::new(vec![half.clone(), BigRational::zero()]),
                Point::new(vec![BigRational::one(), half.clone()]),
                Point::new(vec![half.clone(), BigRational::one()]),
            ],
            "r",
        )
        .unwrap();
        assert_eq!(orientation(&ps, &[0, 1, 2]).unwrap(), Orientation::Positive);
    }

    #[test]
    fn point_splits_a_line() {
        let ps = set(1, &[&[1], &[2], &[3]]);
        let s = classify_split(&ps, &[1]).unwrap();
        assert_eq!(s.unordered(), (1, 1));
        let mut all = s.left.clone();
        all.extend(&s.right);
        all.sort();
        assert_eq!(all, vec![0, 2]);
    }

    #[test]
    fn moment_curve_middle_interval() {
        let ps = set(2, &[&[1, 1], &[2, 4], &[3, 9], &[4, 16]]);
        let s = classify_split(&ps, &[0, 3]).unwrap();
        assert_eq!(s.unordered(), (0, 2));
        // Middle interval is even-numbered, so it lands on the negative side.
        assert_eq!(s.right, vec![1, 2]);
    }

    #[test]
    fn no_candidates() {
        let ps = set(2, &[&[0, 0], &[1, 0]]);
        let s = classify_split(&ps, &[0, 1]).unwrap();
        assert!(s.left.is_empty() && s.right.is_empty());
    }

    #[test]
    fn degenerate_pivots_error() {
        let ps = set(2, &[&[0, 0], &[1, 1], &[2, 2], &[5, 0]]);
        assert!(matches!(
            classify_split(&ps, &[0, 1]),
            Err(Error::Degenerate { point: 2, .. })
        ));
    }

    #[test]
    fn general_position_checks() {
        let ps = set(2, &[&[0, 0], &[1, 1], &[2, 2], &[5, 0]]);
        assert!(!is_general_position(&ps, DEFAULT_BUDGET).unwrap());
        let ps = set(3, &[&[0, 0, 0], &[1, 0, 0]]);
        assert!(is_general_position(&ps, DEFAULT_BUDGET).unwrap());
        let ps = set(1, &[&[0], &[1], &[2], &[3]]);
        assert!(matches!(
            is_general_position(&ps, 3),
            Err(Error::BudgetExceeded {
                needed: 6,
                budget: 3
            })
        ));
    }

    #[test]
    fn combinations_are_lexicographic() {
        let mut all = Vec::new();
        for_each_combination(4, 2, |c| all.push(c.to_vec()));
        assert_eq!(
            all,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        let mut count = 0;
        for_each_combination(3, 0, |c| {
            assert!(c.is_empty());
            count += 1
        });
        assert_eq!(count, 1);
        for_each_combination(2, 3, |_| panic!("no 3-subsets of 2"));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(6, 2), 15);
        assert_eq!(binomial(10, 0), 1);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(60, 30), 118264581564861424);
    }

    #[test]
    fn bareiss_matches_cofactor_expansion() {
        let m: Vec<Vec<BigInt>> = [[2, -1, 0, 3], [0, 0, 4, 1], [1, 5, -2, 0], [3, 1, 1, 1]]
            .iter()
            .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
            .collect();
        fn laplace(m: &[Vec<BigInt>]) -> BigInt {
            if m.len() == 1 {
                return m[0][0].clone();
            }
            let mut acc = BigInt::zero();
            for c in 0..m.len() {
                let sub: Vec<Vec<BigInt>> = m[1..]
                    .iter()
                    .map(|r| {
                        r.iter()
                            .enumerate()
                            .filter(|&(j, _)| j != c)
                            .map(|(_, v)| v.clone())
                            .collect()
                    })
                    .collect();
                let t = &m[0][c] * laplace(&sub);
                if c % 2 == 0 {
                    acc += t
                } else {
                    acc -= t
                }
            }
            acc
        }
        assert_eq!(det(m.clone()), laplace(&m));
    }
}
