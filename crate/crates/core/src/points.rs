//! Point-set generators and the text file format.
//!
//! File format (UTF-8):
//!
//! ```text
//! <d> <n>
//! # label: <free text>
//! <c_1> <c_2> … <c_d>        # n rows; each c is `p/q` or a bare integer
//! ```
//!
//! Lines starting with `#` are comments and may appear anywhere; the first
//! `# label: ` comment names the set.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{binomial, is_general_position, Point, PointSet, DEFAULT_BUDGET};
use crate::rng::{mix, SplitMix64};

/// How many nonces `random_pointset` tries before giving up.
pub const MAX_NONCE_RETRIES: u32 = 16;

/// `x_i = (i, i², …, i^d)` for `i = 1..=n`.
pub fn moment_curve(n: usize, d: usize) -> PointSet {
    assert!(n >= 1 && d >= 1, "moment_curve needs n ≥ 1 and d ≥ 1");
    let points = (1..=n)
        .map(|i| {
            let base = BigInt::from(i);
            let mut pow = BigInt::one();
            Point::new(
                (0..d)
                    .map(|_| {
                        pow *= &base;
                        BigRational::from_integer(pow.clone())
                    })
                    .collect(),
            )
        })
        .collect();
    PointSet::new(d, points, moment_label(n, d)).expect("valid by construction")
}

pub fn moment_label(n: usize, d: usize) -> String {
    format!("moment(n={n},d={d})")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RandomModel {
    /// Independent coordinates on the dyadic grid in `[0, 1)`.
    UnitCubeRational,
    /// Normalized Gaussian directions rounded to the dyadic grid.
    SphereRational,
}

impl RandomModel {
    pub fn name(self) -> &'static str {
        match self {
            RandomModel::UnitCubeRational => "unit-cube-rational",
            RandomModel::SphereRational => "sphere-rational",
        }
    }
}

impl FromStr for RandomModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit-cube-rational" | "unit-cube" | "cube" => Ok(RandomModel::UnitCubeRational),
            "sphere-rational" | "sphere" => Ok(RandomModel::SphereRational),
            other => Err(Error::InvalidArgument(format!(
                "unknown random model {other:?}"
            ))),
        }
    }
}

/// Uniform integer in `[0, 2^bits)`.
fn random_bits(rng: &mut SplitMix64, bits: u32) -> BigInt {
    let words = bits.div_ceil(64) as usize;
    let mut digits: Vec<u64> = (0..words).map(|_| rng.next_u64()).collect();
    let excess = words as u32 * 64 - bits;
    if excess > 0 {
        let last = digits.last_mut().expect("at least one word");
        *last >>= excess;
    }
    BigInt::from_biguint(
        Sign::Plus,
        num_bigint::BigUint::new(
            digits
                .iter()
                .flat_map(|&w| [w as u32, (w >> 32) as u32])
                .collect(),
        ),
    )
}

fn random_point(rng: &mut SplitMix64, d: usize, model: RandomModel, precision: u32) -> Point {
    let denom = BigInt::one() << precision;
    let coords = match model {
        RandomModel::UnitCubeRational => (0..d)
            .map(|_| BigRational::new(random_bits(rng, precision), denom.clone()))
            .collect(),
        RandomModel::SphereRational => {
            let mut g: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
            let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                g.iter_mut().for_each(|x| *x /= norm);
            }
            // Top 52 bits from the float, the rest fresh random bits.
            let hi = 52.min(precision);
            let lo = precision - hi;
            g.into_iter()
                .map(|x| {
                    let top = BigInt::from((x * (1u64 << hi) as f64).round() as i64);
                    let num = (top << lo) + random_bits(rng, lo);
                    BigRational::new(num, denom.clone())
                })
                .collect()
        }
    };
    Point::new(coords)
}

/// `n` random points with dyadic coordinates of the given precision. The
/// result is a pure function of the arguments. When `C(n, d+1)` fits the
/// default budget the set is checked for general position and regenerated
/// with the next nonce on failure; the nonce used is part of the label.
pub fn random_pointset(
    n: usize,
    d: usize,
    model: RandomModel,
    seed: u64,
    precision: u32,
) -> Result<PointSet> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidArgument(
            "random_pointset needs n ≥ 1 and d ≥ 1".into(),
        ));
    }
    if precision < 32 {
        return Err(Error::InvalidArgument(format!(
            "precision {precision} < 32"
        )));
    }
    let checkable = binomial(n as u64, d as u64 + 1) <= u128::from(DEFAULT_BUDGET);
    for nonce in 0..MAX_NONCE_RETRIES {
        let mut rng = SplitMix64::new(mix(seed, u64::from(nonce)));
        let points = (0..n)
            .map(|_| random_point(&mut rng, d, model, precision))
            .collect();
        let label = format!(
            "random(model={},n={n},d={d},seed={seed},precision={precision},nonce={nonce})",
            model.name()
        );
        let ps = PointSet::new(d, points, label)?;
        if !checkable || is_general_position(&ps, DEFAULT_BUDGET)? {
            return Ok(ps);
        }
    }
    Err(Error::GeneralPosition {
        attempts: MAX_NONCE_RETRIES,
    })
}

fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn parse_rational(tok: &str) -> std::result::Result<BigRational, String> {
    let (num, den) = match tok.split_once('/') {
        Some((a, b)) => (a, b),
        None => (tok, "1"),
    };
    let num: BigInt = num
        .parse()
        .map_err(|_| format!("bad numerator in {tok:?}"))?;
    let den: BigInt = den
        .parse()
        .map_err(|_| format!("bad denominator in {tok:?}"))?;
    if den.is_zero() {
        return Err(format!("zero denominator in {tok:?}"));
    }
    Ok(BigRational::new(num, den))
}

pub fn format_points(ps: &PointSet) -> Result<String> {
    if ps.label().contains('\n') || ps.label().contains('\r') {
        return Err(Error::InvalidArgument(
            "labels must be a single line".into(),
        ));
    }
    let mut out = String::new();
    writeln!(out, "{} {}", ps.dim(), ps.len()).unwrap();
    writeln!(out, "# label: {}", ps.label()).unwrap();
    for p in ps.points() {
        let row: Vec<String> = p.coords.iter().map(format_rational).collect();
        writeln!(out, "{}", row.join(" ")).unwrap();
    }
    Ok(out)
}

pub fn parse_points(text: &str, path: &Path) -> Result<PointSet> {
    let mut label: Option<String> = None;
    let mut header: Option<(usize, usize)> = None;
    let mut points = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.trim_end_matches('\r');
        if let Some(rest) = line.trim_start().strip_prefix('#') {
            if label.is_none() {
                if let Some(l) = rest.strip_prefix(" label: ") {
                    label = Some(l.to_string());
                } else if let Some(l) = rest.strip_prefix(" label:") {
                    label = Some(l.to_string());
                }
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        match header {
            None => {
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() != 2 {
                    return Err(Error::parse(path, line_no, 1, "header must be `d n`"));
                }
                let d: usize = toks[0]
                    .parse()
                    .map_err(|_| Error::parse(path, line_no, 1, "bad dimension"))?;
                let n: usize = toks[1]
                    .parse()
                    .map_err(|_| Error::parse(path, line_no, 2, "bad point count"))?;
                header = Some((d, n));
            }
            Some((d, n)) => {
                if points.len() == n {
                    return Err(Error::parse(
                        path,
                        line_no,
                        1,
                        format!("more than {n} point rows"),
                    ));
                }
                let row = points.len() + 1;
                let mut coords = Vec::with_capacity(d);
                for (col, tok) in line.split_whitespace().enumerate() {
                    let v =
                        parse_rational(tok).map_err(|m| Error::parse(path, line_no, col + 1, m))?;
                    coords.push(v);
                }
                if coords.len() != d {
                    return Err(Error::parse(
                        path,
                        line_no,
                        coords.len().min(d) + 1,
                        format!("row {row} has {} coordinates, expected {d}", coords.len()),
                    ));
                }
                points.push(Point::new(coords));
            }
        }
    }
    let (d, n) = header.ok_or(Error::MissingHeader)?;
    if points.len() != n {
        return Err(Error::parse(
            path,
            text.lines().count(),
            1,
            format!("expected {n} point rows, found {}", points.len()),
        ));
    }
    PointSet::new(d, points, label.unwrap_or_default())
}

pub fn save_points(ps: &PointSet, path: &Path) -> Result<()> {
    fs::write(path, format_points(ps)?)?;
    Ok(())
}

pub fn load_points(path: &Path) -> Result<PointSet> {
    let text = fs::read_to_string(path)?;
    parse_points(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn moment_curve_values() {
        let ps = moment_curve(3, 2);
        let want = [[1, 1], [2, 4], [3, 9]];
        for (p, w) in ps.points().iter().zip(want) {
            assert_eq!(*p, Point::from_integers(w));
        }
        assert_eq!(*moment_curve(1, 5).point(0), Point::from_integers([1; 5]));
        let line = moment_curve(4, 1);
        assert_eq!(
            line.points().to_vec(),
            (1..=4)
                .map(|i| Point::from_integers([i]))
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn moment_curve_is_in_general_position() {
        assert!(is_general_position(&moment_curve(6, 3), DEFAULT_BUDGET).unwrap());
        for d in 1..=4 {
            for n in 1..=9 {
                assert!(
                    is_general_position(&moment_curve(n, d), DEFAULT_BUDGET).unwrap(),
                    "n={n} d={d}"
                );
            }
        }
    }

    #[test]
    fn random_is_deterministic_and_general() {
        for model in [RandomModel::UnitCubeRational, RandomModel::SphereRational] {
            let a = random_pointset(20, 3, model, 5, 40).unwrap();
            let b = random_pointset(20, 3, model, 5, 40).unwrap();
            assert_eq!(a, b);
            for seed in 0..20 {
                let ps = random_pointset(4, 2, model, seed, 32).unwrap();
                assert!(is_general_position(&ps, DEFAULT_BUDGET).unwrap());
            }
        }
    }

    #[test]
    fn different_seeds_differ() {
        let a = random_pointset(100, 3, RandomModel::UnitCubeRational, 1, 32).unwrap();
        let b = random_pointset(100, 3, RandomModel::UnitCubeRational, 2, 32).unwrap();
        let sa: BTreeSet<_> = a
            .points()
            .iter()
            .map(|p| format!("{:?}", p.coords))
            .collect();
        let sb: BTreeSet<_> = b
            .points()
            .iter()
            .map(|p| format!("{:?}", p.coords))
            .collect();
        assert!(sa.is_disjoint(&sb));
    }

    #[test]
    fn coordinates_are_dyadic() {
        let ps = random_pointset(10, 4, RandomModel::SphereRational, 3, 70).unwrap();
        let grid = BigInt::one() << 70u32;
        for p in ps.points() {
            for c in &p.coords {
                assert!((&grid % c.denom()).is_zero());
            }
        }
    }

    #[test]
    fn bad_arguments() {
        assert!(random_pointset(5, 2, RandomModel::UnitCubeRational, 0, 31).is_err());
        assert!(random_pointset(0, 2, RandomModel::UnitCubeRational, 0, 32).is_err());
    }

    #[test]
    fn round_trip_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pts");
        let ps = moment_curve(5, 3);
        save_points(&ps, &path).unwrap();
        assert_eq!(load_points(&path).unwrap(), ps);

        let ps = random_pointset(7, 2, RandomModel::SphereRational, 11, 64).unwrap();
        save_points(&ps, &path).unwrap();
        assert_eq!(load_points(&path).unwrap(), ps);
    }

    #[test]
    fn short_row_is_reported() {
        let err = parse_points("2 2\n1 2\n3\n", Path::new("x")).unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("row 2"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_missing_header() {
        let err = parse_points("", Path::new("x")).unwrap_err();
        assert!(matches!(err, Error::MissingHeader));
        assert_eq!(err.to_string(), "missing header");
        assert!(matches!(
            parse_points("# only a comment\n", Path::new("x")),
            Err(Error::MissingHeader)
        ));
    }

    #[test]
    fn comments_and_fractions() {
        let ps = parse_points(
            "# hello\n2 2\n# label: two\n1/2 -3\n# mid\n4 5/10\n",
            Path::new("x"),
        )
        .unwrap();
        assert_eq!(ps.label(), "two");
        assert_eq!(ps.point(1).coords[1], BigRational::new(1.into(), 2.into()));
        assert!(parse_points("1 1\n1/0\n", Path::new("x")).is_err());
        assert!(parse_points("1 2\n1\n", Path::new("x")).is_err());
    }
}
