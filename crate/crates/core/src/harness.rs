//! Seeded experiments, theorem checkers and record persistence.
//!
//! Trial `i` of an experiment uses seed `mix(base_seed, i)`. Trials run on a
//! rayon pool but are collected in trial order, so output bytes do not depend
//! on the thread count.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::statistics::{Data, OrderStatistics};

use crate::bounds::{
    beta_tail_exact, depth_tail_bound, wagner_hoeffding_tail, BoundResult, SplitLaw,
};
use crate::error::{Error, Result};
use crate::facets::{
    balance_bound_exact, census, classify_small, larger_side_tail, same_side_probability,
    simplified_balance_bound_exact, small_balance_cap, small_balance_value, TailVariant,
};
use crate::geom::{binomial, is_general_position, PointSet, DEFAULT_BUDGET};
use crate::points::{format_points, load_points, moment_curve, random_pointset, RandomModel};
use crate::rng::{mix, SplitMix64};
use crate::tree::{
    build_hst, build_moment_hst, root_split_distribution, simulate_moment_split, unordered,
    Geometric, IntervalAlternation, MedianOf,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const CSV_HEADER: [&str; 9] = [
    "trial",
    "seed",
    "n",
    "d",
    "height",
    "mean_depth",
    "root_left",
    "root_right",
    "wall_ms",
];
/// Digits after the point when a mean depth is written out.
pub const MEAN_DEPTH_DIGITS: u32 = 12;
pub const DEFAULT_PRECISION: u32 = 32;
pub const KS_ALPHA: f64 = 0.01;
pub const DKW_ALPHA: f64 = 0.01;
pub const MIN_KS_SAMPLES: usize = 100;
/// Tag deriving a trial's point-set seed from its tree seed.
const POINTS_TAG: u64 = u64::MAX;

fn default_precision() -> u32 {
    DEFAULT_PRECISION
}

fn default_budget() -> u64 {
    DEFAULT_BUDGET
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Source {
    Moment {
        n: usize,
        d: usize,
    },
    /// A fresh random set per trial.
    Random {
        model: RandomModel,
        n: usize,
        d: usize,
        #[serde(default = "default_precision")]
        precision: u32,
    },
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Exact predicates on actual points.
    Geometric,
    /// Interval alternation on ranks; moment sources only.
    Combinatorial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: Source,
    pub trials: u64,
    pub base_seed: u64,
    pub mode: Mode,
    /// CSV destination; standard output when absent.
    #[serde(default)]
    pub outputs: Option<PathBuf>,
    #[serde(default = "default_budget")]
    pub budget: u64,
    /// Record wall-clock time per trial. Off by default so reruns are
    /// byte-identical.
    #[serde(default)]
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.mode == Mode::Combinatorial && !matches!(self.source, Source::Moment { .. }) {
            return Err(Error::InvalidArgument(
                "combinatorial mode needs a moment source".into(),
            ));
        }
        match self.source {
            Source::Moment { n, d } | Source::Random { n, d, .. } if n == 0 || d == 0 => Err(
                Error::InvalidArgument(format!("need n ≥ 1 and d ≥ 1, got n={n}, d={d}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    pub height: u32,
    /// Sum of point depths; the mean depth is `total_depth / n`.
    pub total_depth: u64,
    pub root_left: usize,
    pub root_right: usize,
    pub wall_ms: u64,
}

impl TrialRecord {
    pub fn mean_depth(&self) -> Ratio<u64> {
        Ratio::new(self.total_depth, self.n as u64)
    }

    /// `max(left, right) / (n − d)`, or `None` when nothing was split off.
    pub fn larger_side_fraction(&self) -> Option<f64> {
        let m = self.root_left + self.root_right;
        (m > 0).then(|| self.root_left.max(self.root_right) as f64 / m as f64)
    }
}

enum Prepared {
    Fixed(PointSet),
    Moment {
        n: usize,
        d: usize,
    },
    Random {
        model: RandomModel,
        n: usize,
        d: usize,
        precision: u32,
    },
}

fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    cfg.validate()?;
    Ok(match (&cfg.source, cfg.mode) {
        (&Source::Moment { n, d }, Mode::Combinatorial) => Prepared::Moment { n, d },
        (&Source::Moment { n, d }, Mode::Geometric) => Prepared::Fixed(moment_curve(n, d)),
        (
            &Source::Random {
                model,
                n,
                d,
                precision,
            },
            _,
        ) => Prepared::Random {
            model,
            n,
            d,
            precision,
        },
        (Source::File { path }, _) => {
            let ps = load_points(path)?;
            let needed = binomial(ps.len() as u64, ps.dim() as u64 + 1);
            if needed <= u128::from(cfg.budget) && !is_general_position(&ps, cfg.budget)? {
                return Err(Error::InvalidArgument(format!(
                    "{} is not in general position",
                    path.display()
                )));
            }
            Prepared::Fixed(ps)
        }
    })
}

fn run_trial(prep: &Prepared, cfg: &ExperimentConfig, trial: u64) -> Result<TrialRecord> {
    let seed = mix(cfg.base_seed, trial);
    let start = Instant::now();
    let tree = match prep {
        Prepared::Fixed(ps) => build_hst(ps, seed)?,
        &Prepared::Moment { n, d } => build_moment_hst(n, d, seed),
        &Prepared::Random {
            model,
            n,
            d,
            precision,
        } => {
            let ps = random_pointset(n, d, model, mix(seed, POINTS_TAG), precision)?;
            build_hst(&ps, seed)?
        }
    };
    let s = tree.stats();
    let wall_ms = if cfg.timing {
        start.elapsed().as_millis() as u64
    } else {
        0
    };
    Ok(TrialRecord {
        trial,
        seed,
        n: s.n,
        d: s.d,
        height: s.height,
        total_depth: s.total_depth,
        root_left: s.root_split.0,
        root_right: s.root_split.1,
        wall_ms,
    })
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
}

/// Runs every trial; records come back in trial order.
pub fn run_experiment(cfg: &ExperimentConfig, threads: usize) -> Result<Vec<TrialRecord>> {
    let prep = prepare(cfg)?;
    pool(threads)?.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| run_trial(&prep, cfg, i))
            .collect()
    })
}

/// `num/den` rounded half-up to `digits` decimals.
pub fn format_decimal(r: Ratio<u64>, digits: u32) -> String {
    let scale = 10u128.pow(digits);
    let num = u128::from(*r.numer());
    let den = u128::from(*r.denom());
    let scaled = (num * scale * 2 + den) / (2 * den);
    format!(
        "{}.{:0width$}",
        scaled / scale,
        scaled % scale,
        width = digits as usize
    )
}

fn parse_mean_depth(s: &str, n: usize) -> std::result::Result<u64, String> {
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if frac.len() != MEAN_DEPTH_DIGITS as usize {
        return Err(format!(
            "mean_depth {s:?} must have {MEAN_DEPTH_DIGITS} decimals"
        ));
    }
    let scale = 10u128.pow(MEAN_DEPTH_DIGITS);
    let int: u128 = int.parse().map_err(|_| format!("bad mean_depth {s:?}"))?;
    let frac: u128 = frac.parse().map_err(|_| format!("bad mean_depth {s:?}"))?;
    let scaled = int * scale + frac;
    let total = (scaled * n as u128 * 2 + scale) / (2 * scale);
    let total = u64::try_from(total).map_err(|_| format!("mean_depth {s:?} too large"))?;
    if n == 0 || format_decimal(Ratio::new(total, n as u64), MEAN_DEPTH_DIGITS) != s {
        return Err(format!("mean_depth {s:?} is not a depth total over n={n}"));
    }
    Ok(total)
}

/// Writes the `# schema=1` line, the header and one row per record.
pub fn write_records<W: Write>(mut w: W, records: &[TrialRecord]) -> Result<()> {
    writeln!(w, "# schema={SCHEMA_VERSION}")?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in records {
        out.write_record([
            r.trial.to_string(),
            r.seed.to_string(),
            r.n.to_string(),
            r.d.to_string(),
            r.height.to_string(),
            format_decimal(r.mean_depth(), MEAN_DEPTH_DIGITS),
            r.root_left.to_string(),
            r.root_right.to_string(),
            r.wall_ms.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(mut r: R, path: &Path) -> Result<Vec<TrialRecord>> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let first = text.lines().next().ok_or(Error::MissingHeader)?;
    let version = first
        .strip_prefix("# schema=")
        .ok_or_else(|| Error::parse(path, 1, 1, "expected `# schema=<version>`"))?;
    if version.trim() != SCHEMA_VERSION.to_string() {
        return Err(Error::parse(
            path,
            1,
            10,
            format!("unsupported schema {version:?}"),
        ));
    }
    let mut rd = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = rd.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::parse(
            path,
            2,
            1,
            format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        ));
    }
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| -> Result<&str> {
            row.get(i).ok_or_else(|| {
                Error::parse(path, line, 1, format!("missing column {}", CSV_HEADER[i]))
            })
        };
        macro_rules! num {
            ($i:expr) => {
                field($i)?.parse().map_err(|_| {
                    Error::parse(
                        path,
                        line,
                        1,
                        format!("bad {} {:?}", CSV_HEADER[$i], row.get($i)),
                    )
                })?
            };
        }
        let n: usize = num!(2);
        let total_depth =
            parse_mean_depth(field(5)?, n).map_err(|m| Error::parse(path, line, 1, m))?;
        out.push(TrialRecord {
            trial: num!(0),
            seed: num!(1),
            n,
            d: num!(3),
            height: num!(4),
            total_depth,
            root_left: num!(6),
            root_right: num!(7),
            wall_ms: num!(8),
        });
    }
    Ok(out)
}

pub fn load_records(path: &Path) -> Result<Vec<TrialRecord>> {
    read_records(std::fs::File::open(path)?, path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub q05: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q95: f64,
    pub max: f64,
}

impl Summary {
    fn of(values: Vec<f64>, mean: f64) -> Summary {
        let m = values.len() as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
        let mut data = Data::new(values);
        Summary {
            mean,
            sd: var.sqrt(),
            min: data.quantile(0.0),
            q05: data.quantile(0.05),
            q25: data.quantile(0.25),
            median: data.quantile(0.5),
            q75: data.quantile(0.75),
            q95: data.quantile(0.95),
            max: data.quantile(1.0),
        }
    }
}

/// Height and mean depth per natural log of `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub n: usize,
    pub d: usize,
    pub trials: usize,
    pub height: Summary,
    pub mean_depth: Summary,
}

pub fn estimate_ratios(records: &[TrialRecord]) -> Result<RatioSummary> {
    if records.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 records, got {}",
            records.len()
        )));
    }
    let n = records[0].n;
    let d = records[0].d;
    if let Some(r) = records.iter().find(|r| r.n != n || r.d != d) {
        return Err(Error::InvalidArgument(format!(
            "mixed sizes: trial {} has n={}, d={} but trial {} has n={n}, d={d}",
            r.trial, r.n, r.d, records[0].trial
        )));
    }
    if n < 2 {
        return Err(Error::InvalidArgument("ratios need n ≥ 2".into()));
    }
    let ln_n = (n as f64).ln();
    let m = records.len();
    let heights: Vec<f64> = records.iter().map(|r| f64::from(r.height) / ln_n).collect();
    let height_mean =
        records.iter().map(|r| u128::from(r.height)).sum::<u128>() as f64 / m as f64 / ln_n;
    let depths: Vec<f64> = records
        .iter()
        .map(|r| r.total_depth as f64 / n as f64 / ln_n)
        .collect();
    // Exact average of the rational means, divided once.
    let total: u128 = records.iter().map(|r| u128::from(r.total_depth)).sum();
    let depth_mean = total as f64 / (n as f64 * m as f64) / ln_n;
    Ok(RatioSummary {
        n,
        d,
        trials: m,
        height: Summary::of(heights, height_mean),
        mean_depth: Summary::of(depths, depth_mean),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub samples: usize,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// `c(α) = √(ln(2/α)/2)`.
pub fn ks_critical(alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / 2.0).sqrt()
}

/// `P(max(B, 1 − B) ≤ x)` for `B ~ beta(⌈d/2⌉, ⌈d/2⌉)`.
pub fn folded_beta_cdf(d: usize, x: f64) -> f64 {
    if x <= 0.5 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        1.0 - 2.0 * beta_tail_exact(d, x).value
    }
}

/// KS test of larger-side fractions in `[1/2, 1]` against the folded beta
/// law. `n`, when given, adds the finite-size slack `2d/n`.
pub fn ks_split_vs_beta(samples: &[f64], d: usize, n: Option<usize>) -> Result<KsReport> {
    if samples.len() < MIN_KS_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "KS needs at least {MIN_KS_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if d == 0 {
        return Err(Error::InvalidArgument("KS needs d ≥ 1".into()));
    }
    if let Some(x) = samples.iter().find(|x| !(0.5..=1.0).contains(*x)) {
        return Err(Error::InvalidArgument(format!(
            "fraction {x} outside [1/2, 1]"
        )));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;
    let mut stat: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let g = folded_beta_cdf(d, x);
        stat = stat.max((i + 1) as f64 / m - g).max(g - i as f64 / m);
    }
    let slack = n.map_or(0.0, |n| 2.0 * d as f64 / n as f64);
    let threshold = ks_critical(KS_ALPHA) / m.sqrt() + slack;
    Ok(KsReport {
        samples: xs.len(),
        statistic: stat,
        threshold,
        pass: stat <= threshold,
    })
}

/// Root larger-side fractions of `trials` moment-curve trees; trial `i`
/// draws its root pivots from `SplitMix64::new(mix(seed, i))`, the same
/// stream [`build_moment_hst`] starts from.
pub fn simulate_root_fractions(n: usize, d: usize, trials: u64, seed: u64) -> Vec<f64> {
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let (a, b) = simulate_moment_split(n, d, &mut SplitMix64::new(mix(seed, i)));
            a.max(b) as f64 / (n - d) as f64
        })
        .collect()
}

/// `√(ln(2/α)/(2m))`.
pub fn dkw_slack(alpha: f64, m: usize) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * m as f64)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub lemma: String,
    pub d: usize,
    pub n: usize,
    pub detail: String,
    /// The offending set in the points file format.
    pub points: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub small_balance_sets: usize,
    /// Sets attaining the small-balance cap exactly.
    pub small_balance_equalities: usize,
    pub convex_sets: usize,
    /// Convex sets with the balanced Radon partition (the cyclic type).
    pub cyclic_sets: usize,
    pub balance_sets: usize,
    pub thresholds_checked: usize,
    pub violations: Vec<Violation>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn lemma_sets(n: usize, d: usize, count: usize, seed: u64) -> Result<Vec<PointSet>> {
    let mut sets = vec![moment_curve(n, d)];
    for k in 0..count as u64 {
        // The 0-sphere has only two points.
        let model = if k % 2 == 0 || d == 1 {
            RandomModel::UnitCubeRational
        } else {
            RandomModel::SphereRational
        };
        let s = mix(mix(seed, (n as u64) << 32 | d as u64), k);
        sets.push(random_pointset(n, d, model, s, DEFAULT_PRECISION)?);
    }
    Ok(sets)
}

fn violation(lemma: &str, ps: &PointSet, detail: String) -> Violation {
    Violation {
        lemma: lemma.into(),
        d: ps.dim(),
        n: ps.len(),
        detail,
        points: format_points(ps).unwrap_or_else(|e| format!("<unprintable: {e}>")),
    }
}

/// Small-balance lemma on the moment curve plus `sets_per_case` random
/// `(d+2)`-sets per dimension.
pub fn verify_small_balance(d_max: usize, sets_per_case: usize, seed: u64) -> Result<LemmaReport> {
    let mut report = LemmaReport::default();
    for d in 1..=d_max {
        let cap = small_balance_cap(d);
        let sets = lemma_sets(d + 2, d, sets_per_case, seed)?;
        let results: Vec<_> = sets
            .par_iter()
            .map(|ps| -> Result<_> { Ok((same_side_probability(ps)?, classify_small(ps)?)) })
            .collect::<Result<_>>()?;
        for (ps, (p, config)) in sets.iter().zip(results) {
            report.small_balance_sets += 1;
            if matches!(config, crate::facets::SmallConfiguration::Convex { .. }) {
                report.convex_sets += 1;
                report.cyclic_sets += usize::from(config.is_cyclic(d));
            }
            if p > cap {
                report.violations.push(violation(
                    "small-balance",
                    ps,
                    format!("P(A) = {p} > {cap}"),
                ));
            } else if p == cap {
                report.small_balance_equalities += 1;
            }
            let want = small_balance_value(d, config);
            if p != want {
                report.violations.push(violation(
                    "small-balance-value",
                    ps,
                    format!("P(A) = {p}, expected {want} for {config:?}"),
                ));
            }
        }
    }
    Ok(report)
}

/// Balance and simplified-balance lemmas at every integer threshold.
pub fn verify_balance(
    d_max: usize,
    n_max: usize,
    sets_per_case: usize,
    seed: u64,
    budget: u64,
) -> Result<LemmaReport> {
    let mut report = LemmaReport::default();
    let half = BigRational::new(1.into(), 2.into());
    for d in 1..=d_max {
        for n in d + 1..=n_max {
            let sets = lemma_sets(n, d, sets_per_case, seed)?;
            let censuses: Vec<_> = sets
                .par_iter()
                .map(|ps| census(ps, budget))
                .collect::<Result<_>>()?;
            for (ps, cs) in sets.iter().zip(&censuses) {
                report.balance_sets += 1;
                let m = n - d;
                for k in 0..=m {
                    let kr = BigRational::from_integer(BigInt::from(k));
                    let tail = larger_side_tail(cs, &kr, TailVariant::Randomized);
                    report.thresholds_checked += 1;
                    // N ≥ (n−d)/2 + x with x = k − (n−d)/2.
                    let x = &kr - BigRational::new(BigInt::from(m), 2.into());
                    if x >= BigRational::from_integer(0.into()) {
                        let b = balance_bound_exact(n, d, &x);
                        if tail > b {
                            report.violations.push(violation(
                                "balance",
                                ps,
                                format!("P(N ≥ {k}) = {tail} > {b}"),
                            ));
                        }
                    }
                    // N/n ≥ y with y = k/n.
                    let y = BigRational::new(BigInt::from(k), BigInt::from(n));
                    if y > half {
                        let b = simplified_balance_bound_exact(d, &y);
                        if tail > b {
                            report.violations.push(violation(
                                "simplified-balance",
                                ps,
                                format!("P(N ≥ {k}) = {tail} > {b}"),
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(report)
}

/// Both checkers with one seed.
pub fn verify_lemmas(
    d_max: usize,
    n_max: usize,
    sets_per_case: usize,
    seed: u64,
    budget: u64,
) -> Result<LemmaReport> {
    let small = verify_small_balance(d_max, sets_per_case, seed)?;
    let big = verify_balance(d_max, n_max, sets_per_case, seed, budget)?;
    let mut violations = small.violations;
    violations.extend(big.violations);
    Ok(LemmaReport {
        small_balance_sets: small.small_balance_sets,
        small_balance_equalities: small.small_balance_equalities,
        convex_sets: small.convex_sets,
        cyclic_sets: small.cyclic_sets,
        balance_sets: big.balance_sets,
        thresholds_checked: big.thresholds_checked,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationRow {
    pub x: f64,
    pub empirical: f64,
    pub w_tail: f64,
    pub wagner_tail: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub d: usize,
    pub n: usize,
    pub trials: u64,
    pub slack: f64,
    pub rows: Vec<DominationRow>,
    /// Largest `empirical − tail` over the grid.
    pub w_excess: f64,
    pub wagner_excess: f64,
    pub w_pass: bool,
    pub wagner_pass: bool,
}

impl DominationReport {
    pub fn passed(&self) -> bool {
        self.w_pass && self.wagner_pass
    }
}

/// Compares the empirical tail of moment-curve larger-side fractions with
/// the dominating tails `min(1, 1/(2(d+1)(x−1/2)²))` and
/// `min(1, 4·exp(−2d(x−1/2)²))` on `x ∈ (1/2, 1]`.
pub fn verify_domination(d: usize, n: usize, trials: u64, seed: u64) -> Result<DominationReport> {
    if n <= d || trials == 0 {
        return Err(Error::InvalidArgument(format!(
            "domination needs n > d and trials ≥ 1, got n={n}, d={d}"
        )));
    }
    let mut fr = simulate_root_fractions(n, d, trials, seed);
    fr.sort_by(f64::total_cmp);
    let slack = dkw_slack(DKW_ALPHA, trials as usize);
    let w = SplitLaw::Example2 { d };
    let mut rows = Vec::new();
    let (mut w_excess, mut wagner_excess) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for k in 1..=100 {
        let x = 0.5 + k as f64 / 200.0;
        let below = fr.partition_point(|&f| f < x);
        let empirical = (fr.len() - below) as f64 / fr.len() as f64;
        let w_tail = w.tail(x);
        let wagner_tail = wagner_hoeffding_tail(d, x).value.min(1.0);
        w_excess = w_excess.max(empirical - w_tail);
        wagner_excess = wagner_excess.max(empirical - wagner_tail);
        rows.push(DominationRow {
            x,
            empirical,
            w_tail,
            wagner_tail,
        });
    }
    Ok(DominationReport {
        d,
        n,
        trials,
        slack,
        rows,
        w_excess,
        wagner_excess,
        w_pass: w_excess <= slack,
        wagner_pass: wagner_excess <= slack,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceCase {
    pub d: usize,
    pub n: usize,
    pub geometric_matches_interval: bool,
    /// `None` for even `d`.
    pub median_matches_interval: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub cases: Vec<EquivalenceCase>,
    /// Geometric and combinatorial experiments with the same seeds produced
    /// identical records.
    pub experiments_agree: bool,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.experiments_agree
            && self
                .cases
                .iter()
                .all(|c| c.geometric_matches_interval && c.median_matches_interval != Some(false))
    }
}

/// Exact unordered root-split distributions of the geometric build on the
/// moment curve, the interval model and (odd `d`) the median rule, for
/// `d ≤ d_max`, `d ≤ n ≤ n_max`; plus a seeded run of both experiment modes.
pub fn verify_equivalence(
    d_max: usize,
    n_max: usize,
    budget: u64,
    seed: u64,
) -> Result<EquivalenceReport> {
    let mut cases = Vec::new();
    for d in 1..=d_max {
        for n in d..=n_max {
            let ps = moment_curve(n, d);
            let geo = unordered(&root_split_distribution(&Geometric(&ps), n, budget)?);
            let int = unordered(&root_split_distribution(
                &IntervalAlternation(d),
                n,
                budget,
            )?);
            let med = if d % 2 == 1 {
                let m = unordered(&root_split_distribution(&MedianOf((d - 1) / 2), n, budget)?);
                Some(m == int)
            } else {
                None
            };
            cases.push(EquivalenceCase {
                d,
                n,
                geometric_matches_interval: geo == int,
                median_matches_interval: med,
            });
        }
    }
    let mut cfg = ExperimentConfig {
        source: Source::Moment { n: 7, d: 3 },
        trials: 200,
        base_seed: seed,
        mode: Mode::Geometric,
        outputs: None,
        budget,
        timing: false,
    };
    let geo = run_experiment(&cfg, 1)?;
    cfg.mode = Mode::Combinatorial;
    let comb = run_experiment(&cfg, 1)?;
    Ok(EquivalenceReport {
        cases,
        experiments_agree: geo == comb,
    })
}

/// The smallest `depth_tail_bound` over a grid of `λ`.
pub fn best_depth_tail_bound(
    n: u64,
    t: u64,
    law: &SplitLaw,
    lambdas: &[f64],
) -> Result<(f64, BoundResult)> {
    let mut best: Option<(f64, BoundResult)> = None;
    for &l in lambdas {
        let b = depth_tail_bound(n, t, l, law)?;
        if best.as_ref().is_none_or(|(_, x)| b.value < x.value) {
            best = Some((l, b));
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("empty λ grid".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moment_cfg(n: usize, d: usize, trials: u64, mode: Mode) -> ExperimentConfig {
        ExperimentConfig {
            source: Source::Moment { n, d },
            trials,
            base_seed: 99,
            mode,
            outputs: None,
            budget: DEFAULT_BUDGET,
            timing: false,
        }
    }

    #[test]
    fn decimal_rounding() {
        assert_eq!(format_decimal(Ratio::new(10, 7), 12), "1.428571428571");
        assert_eq!(format_decimal(Ratio::new(2, 3), 12), "0.666666666667");
        assert_eq!(format_decimal(Ratio::new(5, 1), 12), "5.000000000000");
        assert_eq!(parse_mean_depth("1.428571428571", 7), Ok(10));
        assert!(parse_mean_depth("1.4285714", 7).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let recs = run_experiment(&moment_cfg(50, 2, 6, Mode::Combinatorial), 2).unwrap();
        let mut buf = Vec::new();
        write_records(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "# schema=1\ntrial,seed,n,d,height,mean_depth,root_left,root_right,wall_ms\n"
        ));
        assert_eq!(
            read_records(buf.as_slice(), Path::new("x.csv")).unwrap(),
            recs
        );
    }

    #[test]
    fn csv_rejects_missing_schema() {
        let err = read_records("trial,seed\n".as_bytes(), Path::new("x.csv")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn records_in_trial_order_for_any_pool() {
        let cfg = moment_cfg(300, 3, 40, Mode::Combinatorial);
        let a = run_experiment(&cfg, 1).unwrap();
        let b = run_experiment(&cfg, 8).unwrap();
        assert_eq!(a, b);
        assert!(a
            .iter()
            .enumerate()
            .all(|(i, r)| r.trial == i as u64 && r.seed == mix(99, i as u64)));
        for r in &a {
            assert_eq!(r.root_left + r.root_right, r.n - r.d);
            assert!(Ratio::from_integer(u64::from(r.height)) >= r.mean_depth());
        }
    }

    #[test]
    fn combinatorial_needs_moment_source() {
        let mut cfg = moment_cfg(10, 2, 1, Mode::Combinatorial);
        cfg.source = Source::File {
            path: "p.txt".into(),
        };
        assert!(cfg.validate().is_err());
        cfg.source = Source::Moment { n: 10, d: 2 };
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_json_field_names() {
        let cfg = moment_cfg(10, 2, 3, Mode::Geometric);
        let v: serde_json::Value = serde_json::to_value(&cfg).unwrap();
        for k in ["source", "trials", "base_seed", "mode", "outputs", "budget"] {
            assert!(v.get(k).is_some(), "{k}");
        }
        let back: ExperimentConfig = serde_json::from_value(v).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn ratios_of_identical_records() {
        let r = TrialRecord {
            trial: 0,
            seed: 1,
            n: 100,
            d: 1,
            height: 12,
            total_depth: 500,
            root_left: 40,
            root_right: 59,
            wall_ms: 0,
        };
        let s = estimate_ratios(&[r, TrialRecord { trial: 1, ..r }]).unwrap();
        assert_eq!(s.height.sd, 0.0);
        assert_eq!(s.mean_depth.sd, 0.0);
        assert!((s.mean_depth.mean - 5.0 / 100f64.ln()).abs() < 1e-15);
        assert!(estimate_ratios(&[r]).is_err());
        assert!(estimate_ratios(&[r, TrialRecord { n: 101, ..r }]).is_err());
    }

    #[test]
    fn ks_rejects_constant_and_short_samples() {
        let ones = vec![1.0; 500];
        assert!(!ks_split_vs_beta(&ones, 3, None).unwrap().pass);
        assert!(ks_split_vs_beta(&ones[..50], 3, None).is_err());
        assert!(ks_split_vs_beta(&[0.2; 200], 3, None).is_err());
        assert!((ks_critical(0.01) - 1.6276).abs() < 1e-4);
    }

    #[test]
    fn root_fraction_stream_matches_tree_roots() {
        let (n, d) = (200, 3);
        let fr = simulate_root_fractions(n, d, 20, 5);
        for (i, f) in fr.iter().enumerate() {
            let t = build_moment_hst(n, d, mix(5, i as u64));
            let (a, b) = t.stats().root_split;
            assert_eq!(*f, a.max(b) as f64 / (n - d) as f64);
        }
    }

    #[test]
    fn lemma_checkers_small() {
        let r = verify_lemmas(2, 6, 5, 1, DEFAULT_BUDGET).unwrap();
        assert!(r.passed(), "{:?}", r.violations);
        assert!(r.small_balance_equalities >= 1);
        assert!(r.thresholds_checked > 0);
    }
}
