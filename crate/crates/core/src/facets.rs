//! k-facet census and the balance inequalities it certifies.
//!
//! An oriented `d`-subset is a `k`-facet when its positive open halfspace
//! holds exactly `k` of the other `n − d` points. Each unordered subset is
//! counted in both orientations, so a split `(a, b)` contributes one entry at
//! `k = a` and one at `k = b`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{
    binomial, check_budget, classify_among, for_each_combination, orientation, Orientation,
    PointSet,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCensus {
    pub n: usize,
    pub d: usize,
    /// `table[k]` = number of `k`-facets, `k = 0..=n−d`.
    pub table: Vec<u64>,
}

impl SplitCensus {
    pub fn oriented_total(&self) -> u64 {
        self.table.iter().sum()
    }

    /// Checks `Σ table = 2·C(n,d)` and `Σ k·table[k] = C(n,d)·(n−d)`.
    pub fn check_invariants(&self) -> bool {
        let subsets = binomial(self.n as u64, self.d as u64);
        let total: u128 = self.table.iter().map(|&c| u128::from(c)).sum();
        let moment: u128 = self
            .table
            .iter()
            .enumerate()
            .map(|(k, &c)| k as u128 * u128::from(c))
            .sum();
        total == 2 * subsets && moment == subsets * (self.n - self.d) as u128
    }

    /// Number of `(≤k)`-facets.
    pub fn at_most(&self, k: usize) -> u64 {
        self.table.iter().take(k + 1).sum()
    }
}

/// Exact k-facet counts by enumerating all `C(n, d)` pivot subsets.
pub fn census(ps: &PointSet, budget: u64) -> Result<SplitCensus> {
    let n = ps.len();
    let d = ps.dim();
    if n < d {
        return Err(Error::InvalidArgument(format!(
            "census needs n ≥ d, got n={n}, d={d}"
        )));
    }
    check_budget(binomial(n as u64, d as u64), budget)?;
    let mut subsets = Vec::new();
    for_each_combination(n, d, |c| subsets.push(c.to_vec()));
    let m = n - d;
    let table = subsets
        .par_iter()
        .map(|pivots| -> Result<Vec<u64>> {
            let rest = (0..n).filter(|i| pivots.binary_search(i).is_err());
            let k = classify_among(ps, pivots, rest)?.left.len();
            let mut t = vec![0u64; m + 1];
            t[k] += 1;
            t[m - k] += 1;
            Ok(t)
        })
        .try_reduce(
            || vec![0u64; m + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;
    Ok(SplitCensus { n, d, table })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailVariant {
    /// `N` is a fair-coin choice between the two sides.
    Randomized,
    /// `N` is the larger side.
    Larger,
}

/// Exact `P(N ≥ x)` over a uniform pivot subset (and the coin, for
/// [`TailVariant::Randomized`]).
pub fn larger_side_tail(cs: &SplitCensus, x: &BigRational, variant: TailVariant) -> BigRational {
    let m = cs.n - cs.d;
    let total = cs.oriented_total();
    if total == 0 {
        return if x <= &BigRational::zero() {
            BigRational::one()
        } else {
            BigRational::zero()
        };
    }
    let hits: u64 = cs
        .table
        .iter()
        .enumerate()
        .filter(|&(k, _)| {
            let n_val = match variant {
                TailVariant::Randomized => k,
                TailVariant::Larger => k.max(m - k),
            };
            BigRational::from_integer(BigInt::from(n_val)) >= *x
        })
        .map(|(_, &c)| c)
        .sum();
    BigRational::new(BigInt::from(hits), BigInt::from(total))
}

/// `f_{d−1}(C_n^d) = C(n − ⌊(d+1)/2⌋, n − d) + C(n − ⌊(d+2)/2⌋, n − d)`.
pub fn cyclic_facet_count(n: usize, d: usize) -> u128 {
    assert!(n > d, "cyclic_facet_count needs n ≥ d + 1");
    let m = (n - d) as u64;
    let n = n as u64;
    let d = d as u64;
    binomial(n - d.div_ceil(2), m) + binomial(n - (d + 2) / 2, m)
}

/// Probability, over the `C(d+2, d)` hyperplanes of a `(d+2)`-point set,
/// that the two left-over points lie on the same side.
pub fn same_side_probability(ps: &PointSet) -> Result<BigRational> {
    let d = ps.dim();
    if ps.len() != d + 2 {
        return Err(Error::InvalidArgument(format!(
            "need exactly d+2 = {} points, got {}",
            d + 2,
            ps.len()
        )));
    }
    let mut same = 0u64;
    let mut total = 0u64;
    let mut err = None;
    for_each_combination(d + 2, d, |pivots| {
        if err.is_some() {
            return;
        }
        let rest = (0..d + 2).filter(|i| pivots.binary_search(i).is_err());
        match classify_among(ps, pivots, rest) {
            Ok(s) => {
                total += 1;
                if s.left.is_empty() || s.right.is_empty() {
                    same += 1;
                }
            }
            Err(e) => err = Some(e),
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(BigRational::new(BigInt::from(same), BigInt::from(total)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmallConfiguration {
    /// All `d+2` points are vertices of their convex hull; `smaller` is the
    /// size of the smaller Radon part (at least 2).
    Convex { smaller: usize },
    /// The given point lies inside the simplex of the other `d+1`.
    Interior(usize),
}

impl SmallConfiguration {
    /// Convex with the most balanced Radon partition, i.e. combinatorially
    /// the cyclic polytope. For `d ≤ 3` every convex set is of this type.
    pub fn is_cyclic(self, d: usize) -> bool {
        matches!(self, SmallConfiguration::Convex { smaller } if smaller == (d + 2) / 2)
    }

    fn radon_parts(self, d: usize) -> (usize, usize) {
        match self {
            SmallConfiguration::Convex { smaller } => (smaller, d + 2 - smaller),
            SmallConfiguration::Interior(_) => (1, d + 1),
        }
    }
}

/// Classifies a `(d+2)`-point set from its Radon partition. The signs
/// `(−1)^i·orient(all but i)` are the signs of the affine dependence
/// coefficients; a lone sign marks the interior point.
pub fn classify_small(ps: &PointSet) -> Result<SmallConfiguration> {
    let d = ps.dim();
    if ps.len() != d + 2 {
        return Err(Error::InvalidArgument(format!(
            "need exactly d+2 = {} points, got {}",
            d + 2,
            ps.len()
        )));
    }
    let mut signs = Vec::with_capacity(d + 2);
    for i in 0..d + 2 {
        let tuple: Vec<usize> = (0..d + 2).filter(|&j| j != i).collect();
        let o = orientation(ps, &tuple)?;
        if o == Orientation::Zero {
            return Err(Error::Degenerate {
                pivots: tuple,
                point: i,
            });
        }
        let s = if i % 2 == 0 { o.sign() } else { -o.sign() };
        signs.push(s);
    }
    let pos: Vec<usize> = (0..d + 2).filter(|&i| signs[i] > 0).collect();
    let neg: Vec<usize> = (0..d + 2).filter(|&i| signs[i] < 0).collect();
    Ok(match (pos.len(), neg.len()) {
        (1, _) => SmallConfiguration::Interior(pos[0]),
        (_, 1) => SmallConfiguration::Interior(neg[0]),
        (p, q) => SmallConfiguration::Convex { smaller: p.min(q) },
    })
}

/// Same-side probability `a·b / C(d+2, 2)` for Radon parts of sizes `a, b`:
/// the two leftover points straddle the hyperplane exactly when they are in
/// the same part.
pub fn small_balance_value(d: usize, config: SmallConfiguration) -> BigRational {
    let (a, b) = config.radon_parts(d);
    BigRational::new(BigInt::from(2 * a * b), BigInt::from((d + 2) * (d + 1)))
}

/// The cyclic-polytope value: `(d+2)/(2(d+1))` for even `d`,
/// `(d+3)/(2(d+2))` for odd `d`.
pub fn cyclic_small_value(d: usize) -> BigRational {
    if d.is_multiple_of(2) {
        BigRational::new(BigInt::from(d + 2), BigInt::from(2 * (d + 1)))
    } else {
        BigRational::new(BigInt::from(d + 3), BigInt::from(2 * (d + 2)))
    }
}

/// `1/2 + 1/(2(d+1))`.
pub fn small_balance_cap(d: usize) -> BigRational {
    BigRational::new(BigInt::from(d + 2), BigInt::from(2 * (d + 1)))
}

/// Exact `V / (V + x²)` with `V = (n−d)/4 + (n−d)²/(4(d+1))`.
pub fn balance_bound_exact(n: usize, d: usize, x: &BigRational) -> BigRational {
    let m = BigRational::from_integer(BigInt::from(n - d));
    let four = BigRational::from_integer(4.into());
    let v = &m / &four + &m * &m / (&four * BigRational::from_integer(BigInt::from(d + 1)));
    &v / (&v + x * x)
}

/// Exact `min(1/2, 1/(1 + 4(d+1)(y − 1/2)²))`, for `y > 1/2`.
pub fn simplified_balance_bound_exact(d: usize, y: &BigRational) -> BigRational {
    let half = BigRational::new(1.into(), 2.into());
    let t = y - &half;
    let v = BigRational::one()
        / (BigRational::one() + BigRational::from_integer(BigInt::from(4 * (d + 1))) * &t * &t);
    if v < half {
        v
    } else {
        half
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Point, DEFAULT_BUDGET};
    use crate::points::moment_curve;

    fn r(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

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
    fn census_on_a_line() {
        let cs = census(&moment_curve(3, 1), DEFAULT_BUDGET).unwrap();
        assert_eq!(cs.table, vec![2, 2, 2]);
        assert!(cs.check_invariants());
    }

    #[test]
    fn census_counts_cyclic_facets() {
        let cs = census(&moment_curve(5, 3), DEFAULT_BUDGET).unwrap();
        assert_eq!(cs.table[0], 6);
        assert!(cs.check_invariants());
    }

    #[test]
    fn census_budget() {
        assert!(matches!(
            census(&moment_curve(10, 3), 100),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn cyclic_counts() {
        assert_eq!(cyclic_facet_count(4, 2), 4);
        assert_eq!(cyclic_facet_count(6, 2), 6);
        assert_eq!(cyclic_facet_count(5, 3), 6);
        for d in (2..=12).step_by(2) {
            assert_eq!(
                cyclic_facet_count(d + 2, d),
                ((d + 2) * (d + 2) / 4) as u128
            );
        }
        for d in (1..=11).step_by(2) {
            assert_eq!(
                cyclic_facet_count(d + 2, d),
                ((d + 1) * (d + 3) / 4) as u128
            );
        }
        // Simplex: n = d + 1 has d + 1 facets.
        for d in 1..8 {
            assert_eq!(cyclic_facet_count(d + 1, d), (d + 1) as u128);
        }
    }

    #[test]
    fn tails() {
        let cs = census(&moment_curve(3, 1), DEFAULT_BUDGET).unwrap();
        assert_eq!(
            larger_side_tail(&cs, &r(0, 1), TailVariant::Randomized),
            r(1, 1)
        );
        assert_eq!(
            larger_side_tail(&cs, &r(0, 1), TailVariant::Larger),
            r(1, 1)
        );
        // Extreme pivots give a (0,2) split, the middle one (1,1).
        assert_eq!(
            larger_side_tail(&cs, &r(2, 1), TailVariant::Larger),
            r(2, 3)
        );
        assert_eq!(
            larger_side_tail(&cs, &r(2, 1), TailVariant::Randomized),
            r(1, 3)
        );
        assert_eq!(
            larger_side_tail(&cs, &r(3, 2), TailVariant::Randomized),
            r(1, 3)
        );
    }

    #[test]
    fn small_balance_convex_square() {
        let ps = set(2, &[&[0, 0], &[1, 0], &[1, 1], &[0, 1]]);
        assert_eq!(
            classify_small(&ps).unwrap(),
            SmallConfiguration::Convex { smaller: 2 }
        );
        assert_eq!(same_side_probability(&ps).unwrap(), r(2, 3));
    }

    #[test]
    fn small_balance_interior_point() {
        let ps = set(2, &[&[0, 0], &[4, 0], &[1, 1], &[0, 4]]);
        assert_eq!(
            classify_small(&ps).unwrap(),
            SmallConfiguration::Interior(2)
        );
        assert_eq!(same_side_probability(&ps).unwrap(), r(1, 2));
    }

    #[test]
    fn small_balance_on_a_line() {
        let ps = set(1, &[&[0], &[5], &[2]]);
        assert_eq!(
            classify_small(&ps).unwrap(),
            SmallConfiguration::Interior(2)
        );
        assert_eq!(same_side_probability(&ps).unwrap(), r(2, 3));
        assert_eq!(
            small_balance_value(1, SmallConfiguration::Interior(0)),
            r(2, 3)
        );
    }

    #[test]
    fn unbalanced_convex_sets_in_dimension_four() {
        // Two points on either side of a tetrahedron's centroid line, so the
        // Radon partition is 2 | 4.
        let ps = set(
            4,
            &[
                &[0, 0, 0, 0],
                &[8, 0, 0, 0],
                &[0, 8, 0, 0],
                &[0, 0, 8, 0],
                &[1, 1, 1, -3],
                &[1, 1, 1, 5],
            ],
        );
        let c = classify_small(&ps).unwrap();
        assert_eq!(c, SmallConfiguration::Convex { smaller: 2 });
        assert!(!c.is_cyclic(4));
        assert_eq!(same_side_probability(&ps).unwrap(), r(8, 15));
        assert!(r(8, 15) < cyclic_small_value(4));
        assert!(cyclic_small_value(4) <= small_balance_cap(4));
    }

    #[test]
    fn moment_curve_is_cyclic() {
        for d in 1..=6 {
            let ps = moment_curve(d + 2, d);
            let c = classify_small(&ps).unwrap();
            assert_eq!(c.is_cyclic(d), d >= 2);
            assert_eq!(
                same_side_probability(&ps).unwrap(),
                small_balance_value(d, c)
            );
            if d >= 2 {
                assert_eq!(small_balance_value(d, c), cyclic_small_value(d));
            }
        }
    }

    #[test]
    fn same_side_equals_census_route() {
        for d in 1..=4 {
            let ps = moment_curve(d + 2, d);
            let cs = census(&ps, DEFAULT_BUDGET).unwrap();
            let via_census = BigRational::new(
                BigInt::from(cs.table[0]),
                BigInt::from(binomial(d as u64 + 2, d as u64)),
            );
            assert_eq!(same_side_probability(&ps).unwrap(), via_census);
        }
    }

    #[test]
    fn balance_bound_values() {
        assert_eq!(balance_bound_exact(10, 3, &r(0, 1)), r(1, 1));
        for d in 1..6 {
            for x2 in 0..=1 {
                let x = r(x2, 2);
                assert!(balance_bound_exact(d + 1, d, &x) > r(1, 2));
            }
        }
        assert_eq!(simplified_balance_bound_exact(1, &r(1, 1)), r(1, 3));
        assert_eq!(simplified_balance_bound_exact(4, &r(51, 100)), r(1, 2));
    }
}
