//! `hst`: build hyperplane search trees, count k-facets, evaluate the
//! analytic constants and run seeded experiments.
//!
//! Exit status: 0 on success, 1 when a verification finds a violation, 2 on
//! usage or input errors.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use hst_core::bounds::{self, BoundResult, SplitLaw};
use hst_core::facets::census;
use hst_core::harness::{self, ExperimentConfig, Mode, Source, TrialRecord};
use hst_core::points::{format_points, load_points, moment_curve, random_pointset, RandomModel};
use hst_core::tree::format_tree;
use hst_core::{build_hst, build_moment_hst, PointSet, DEFAULT_BUDGET};

#[derive(Parser, Debug)]
#[command(
    name = "hst",
    version,
    about = "Random hyperplane search trees: builds, census, bounds, experiments"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Base seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads. Never changes output bytes.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Cap on enumerated subsets.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    /// Record per-trial wall time (makes experiment output nondeterministic).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SourceKind {
    Moment,
    Random,
    File,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Model {
    UnitCubeRational,
    SphereRational,
}

impl From<Model> for RandomModel {
    fn from(m: Model) -> Self {
        match m {
            Model::UnitCubeRational => RandomModel::UnitCubeRational,
            Model::SphereRational => RandomModel::SphereRational,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Geometric,
    Combinatorial,
}

#[derive(Args, Debug)]
struct PointsInput {
    /// Points file.
    #[arg(long, conflicts_with = "moment")]
    input: Option<PathBuf>,
    /// Use the moment curve with --n and --d instead of a file.
    #[arg(long)]
    moment: bool,
    #[arg(long, requires = "moment")]
    n: Option<usize>,
    #[arg(long, requires = "moment")]
    d: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a point set in the points file format.
    Gen {
        #[arg(long, value_enum, default_value = "moment")]
        source: GenSource,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        /// Bits after the binary point for random coordinates.
        #[arg(long, default_value_t = harness::DEFAULT_PRECISION)]
        precision: u32,
    },
    /// Build one tree and report its statistics.
    Build {
        #[command(flatten)]
        input: PointsInput,
        /// Also write the tree in its text form here.
        #[arg(long)]
        tree: Option<PathBuf>,
        /// Build on ranks with the interval model (moment curve only).
        #[arg(long)]
        combinatorial: bool,
    },
    /// Exact k-facet counts, one row per k.
    Census {
        #[command(flatten)]
        input: PointsInput,
    },
    /// Analytic constants and tail bounds.
    Bounds {
        #[command(subcommand)]
        what: BoundsCommand,
    },
    /// Seeded Monte Carlo trials, one CSV row per trial.
    Experiment(ExperimentArgs),
    /// Theorem checkers; exit status 1 on any violation.
    Verify(VerifyArgs),
    /// Summary of height and mean depth per ln n from an experiment CSV.
    Report {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum GenSource {
    Moment,
    UnitCubeRational,
    SphereRational,
}

#[derive(Subcommand, Debug)]
enum BoundsCommand {
    /// Λ(t), the limiting mean depth per ln n.
    Lambda {
        #[arg(long)]
        t: u64,
    },
    /// C(t), the limiting height per ln n.
    HeightConstant {
        #[arg(long)]
        t: u64,
    },
    /// A larger-side tail bound at fraction x (or count deviation x for balance).
    Tail {
        #[arg(long, value_enum)]
        kind: TailKind,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        x: f64,
        /// Needed by the balance bound.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Height constant γ of a tree dominated by min(1/2 + a√(E+b), 1).
    Gamma {
        #[arg(long, requires = "b", conflicts_with = "d")]
        a: Option<f64>,
        #[arg(long, requires = "a")]
        b: Option<f64>,
        /// Shorthand for a = 1/√(2d), b = ln 8.
        #[arg(long)]
        d: Option<usize>,
    },
    /// Lower bound on the logarithmic moment μ.
    Mu {
        #[arg(long, value_enum)]
        law: LawKind,
        #[arg(long)]
        d: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TailKind {
    Simplified,
    Balance,
    Wagner,
    Beta,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum LawKind {
    Example2,
    Wagner,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// JSON experiment config; other source flags are ignored when given.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "moment")]
    source: SourceKind,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, value_enum, default_value = "unit-cube-rational")]
    model: Model,
    #[arg(long, default_value_t = harness::DEFAULT_PRECISION)]
    precision: u32,
    /// Points file for `--source file`.
    #[arg(long)]
    path: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    #[arg(long, value_enum, default_value = "geometric")]
    mode: ModeArg,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Small-balance, balance and simplified-balance lemmas.
    #[arg(long)]
    lemmas: bool,
    /// Larger-side tails against the dominating laws.
    #[arg(long)]
    domination: bool,
    /// Geometric, interval and median split models agree.
    #[arg(long)]
    equivalence: bool,
    /// KS test of root splits against the limiting beta law.
    #[arg(long)]
    ks: bool,
    #[arg(long, default_value_t = 3)]
    d_max: usize,
    #[arg(long, default_value_t = 8)]
    n_max: usize,
    /// Random sets per (n, d) case for --lemmas.
    #[arg(long, default_value_t = 20)]
    sets: usize,
    /// Dimension for --domination and --ks.
    #[arg(long, default_value_t = 3)]
    d: usize,
    /// Points for --domination and --ks.
    #[arg(long, default_value_t = 4096)]
    n: usize,
    /// Trials for --domination and --ks.
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
}

struct Failure(String);

enum Outcome {
    Ok,
    VerificationFailed,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code.clamp(0, 255) as u8);
        }
    };
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::VerificationFailed) => ExitCode::from(1),
        Err(Failure(msg)) => {
            eprintln!("hst: {msg}");
            ExitCode::from(2)
        }
    }
}

impl From<hst_core::Error> for Failure {
    fn from(e: hst_core::Error) -> Self {
        Failure(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure(e.to_string())
    }
}

fn emit(global: &Global, bytes: &[u8]) -> Result<(), Failure> {
    match &global.out {
        Some(p) => fs::write(p, bytes).map_err(|e| Failure(format!("{}: {e}", p.display()))),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn emit_json(global: &Global, v: &Value) -> Result<(), Failure> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    emit(global, s.as_bytes())
}

fn format_or(
    global: &Global,
    default: Format,
    allowed: &[Format],
    cmd: &str,
) -> Result<Format, Failure> {
    let f = global.format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(Failure(
            format!("{cmd} does not support --format {f:?}").to_lowercase(),
        ))
    }
}

fn threads(global: &Global) -> usize {
    global
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn with_pool<T: Send>(global: &Global, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    let pool = rayon_pool(threads(global))?;
    Ok(pool.install(f))
}

fn rayon_pool(n: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build()
        .map_err(|e| Failure(format!("thread pool: {e}")))
}

fn load_input(input: &PointsInput) -> Result<PointSet, Failure> {
    match (&input.input, input.moment) {
        (Some(p), false) => Ok(load_points(p)?),
        (None, true) => {
            let (n, d) = input
                .n
                .zip(input.d)
                .ok_or_else(|| Failure("--moment needs --n and --d".into()))?;
            if n == 0 || d == 0 {
                return Err(Failure("--n and --d must be positive".into()));
            }
            Ok(moment_curve(n, d))
        }
        _ => Err(Failure(
            "give either --input FILE or --moment --n N --d D".into(),
        )),
    }
}

fn bound_json(b: &BoundResult) -> Value {
    serde_json::to_value(b).expect("serializable")
}

fn record_json(r: &TrialRecord) -> Value {
    json!({
        "trial": r.trial,
        "seed": r.seed,
        "n": r.n,
        "d": r.d,
        "height": r.height,
        "mean_depth": harness::format_decimal(r.mean_depth(), harness::MEAN_DEPTH_DIGITS),
        "root_left": r.root_left,
        "root_right": r.root_right,
        "wall_ms": r.wall_ms,
    })
}

fn run(cli: Cli) -> Result<Outcome, Failure> {
    let g = &cli.global;
    match cli.command {
        Command::Gen {
            source,
            n,
            d,
            precision,
        } => {
            format_or(g, Format::Csv, &[Format::Csv], "gen")?;
            let ps = match source {
                GenSource::Moment => moment_curve(n, d),
                GenSource::UnitCubeRational => {
                    random_pointset(n, d, RandomModel::UnitCubeRational, g.seed, precision)?
                }
                GenSource::SphereRational => {
                    random_pointset(n, d, RandomModel::SphereRational, g.seed, precision)?
                }
            };
            emit(g, format_points(&ps)?.as_bytes())?;
        }
        Command::Build {
            input,
            tree,
            combinatorial,
        } => {
            let f = format_or(g, Format::Json, &[Format::Json, Format::Csv], "build")?;
            let t = if combinatorial {
                let (n, d) = input
                    .n
                    .zip(input.d)
                    .filter(|_| input.moment)
                    .ok_or_else(|| Failure("--combinatorial needs --moment --n N --d D".into()))?;
                build_moment_hst(n, d, g.seed)
            } else {
                build_hst(&load_input(&input)?, g.seed)?
            };
            if let Some(p) = tree {
                fs::write(&p, format_tree(&t))
                    .map_err(|e| Failure(format!("{}: {e}", p.display())))?;
            }
            let s = t.stats();
            let mean = harness::format_decimal(s.mean_depth, harness::MEAN_DEPTH_DIGITS);
            match f {
                Format::Json => emit_json(
                    g,
                    &json!({
                        "source": t.source(),
                        "seed": t.seed(),
                        "n": s.n,
                        "d": s.d,
                        "height": s.height,
                        "mean_depth": mean,
                        "root_left": s.root_split.0,
                        "root_right": s.root_split.1,
                    }),
                )?,
                Format::Csv => emit(
                    g,
                    format!(
                        "seed,n,d,height,mean_depth,root_left,root_right\n{},{},{},{},{},{},{}\n",
                        t.seed(),
                        s.n,
                        s.d,
                        s.height,
                        mean,
                        s.root_split.0,
                        s.root_split.1
                    )
                    .as_bytes(),
                )?,
            }
        }
        Command::Census { input } => {
            let f = format_or(g, Format::Csv, &[Format::Json, Format::Csv], "census")?;
            let ps = load_input(&input)?;
            let cs = with_pool(g, || census(&ps, g.budget))??;
            match f {
                Format::Json => emit_json(g, &serde_json::to_value(&cs).expect("serializable"))?,
                Format::Csv => {
                    let mut s = String::from("k,count\n");
                    for (k, c) in cs.table.iter().enumerate() {
                        s.push_str(&format!("{k},{c}\n"));
                    }
                    emit(g, s.as_bytes())?;
                }
            }
        }
        Command::Bounds { what } => {
            let f = format_or(g, Format::Json, &[Format::Json, Format::Csv], "bounds")?;
            let b = eval_bound(what)?;
            match f {
                Format::Json => emit_json(g, &bound_json(&b))?,
                Format::Csv => emit(
                    g,
                    format!(
                        "value,log_base,valid,residual\n{},{},{},{}\n",
                        b.value,
                        match b.log_base {
                            bounds::LogBase::Natural => "natural",
                            bounds::LogBase::Two => "two",
                        },
                        b.valid,
                        b.residual
                    )
                    .as_bytes(),
                )?,
            }
        }
        Command::Experiment(args) => {
            let f = format_or(g, Format::Csv, &[Format::Json, Format::Csv], "experiment")?;
            let cfg = experiment_config(g, &args)?;
            let records = harness::run_experiment(&cfg, threads(g))?;
            let bytes = match f {
                Format::Csv => {
                    let mut buf = Vec::new();
                    harness::write_records(&mut buf, &records)?;
                    buf
                }
                Format::Json => {
                    let v: Vec<Value> = records.iter().map(record_json).collect();
                    let mut s = serde_json::to_string_pretty(
                        &json!({ "schema": harness::SCHEMA_VERSION, "records": v }),
                    )
                    .expect("serializable");
                    s.push('\n');
                    s.into_bytes()
                }
            };
            match (&g.out, &cfg.outputs) {
                (None, Some(p)) => {
                    fs::write(p, &bytes).map_err(|e| Failure(format!("{}: {e}", p.display())))?
                }
                _ => emit(g, &bytes)?,
            }
        }
        Command::Verify(args) => return verify(g, &args),
        Command::Report { input } => {
            let f = format_or(g, Format::Json, &[Format::Json, Format::Csv], "report")?;
            let records = harness::load_records(&input)?;
            let s = harness::estimate_ratios(&records)?;
            match f {
                Format::Json => emit_json(g, &serde_json::to_value(&s).expect("serializable"))?,
                Format::Csv => {
                    let mut out =
                        String::from("metric,n,d,trials,mean,sd,min,q05,q25,median,q75,q95,max\n");
                    for (name, m) in [
                        ("height_per_ln_n", &s.height),
                        ("mean_depth_per_ln_n", &s.mean_depth),
                    ] {
                        out.push_str(&format!(
                            "{name},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                            s.n,
                            s.d,
                            s.trials,
                            m.mean,
                            m.sd,
                            m.min,
                            m.q05,
                            m.q25,
                            m.median,
                            m.q75,
                            m.q95,
                            m.max
                        ));
                    }
                    emit(g, out.as_bytes())?;
                }
            }
        }
    }
    Ok(Outcome::Ok)
}

fn eval_bound(what: BoundsCommand) -> Result<BoundResult, Failure> {
    Ok(match what {
        BoundsCommand::Lambda { t } => bounds::lambda_poblete(t),
        BoundsCommand::HeightConstant { t } => bounds::height_constant(t),
        BoundsCommand::Tail { kind, d, x, n } => match kind {
            TailKind::Simplified => bounds::simplified_balance_bound(d, x),
            TailKind::Balance => {
                let n = n.ok_or_else(|| Failure("--kind balance needs --n".into()))?;
                bounds::balance_bound(n, d, x)
            }
            TailKind::Wagner => bounds::wagner_hoeffding_tail(d, x),
            TailKind::Beta => bounds::beta_tail_exact(d, x),
        },
        BoundsCommand::Gamma { a, b, d } => {
            let law = match (a, b, d) {
                (Some(a), Some(b), None) => SplitLaw::Explicit { a, b },
                (None, None, Some(d)) if d >= 1 => bounds::theorem_height_law(d),
                _ => return Err(Failure("give --a and --b, or --d ≥ 1".into())),
            };
            bounds::dominated_height_gamma(&law)?
        }
        BoundsCommand::Mu { law, d } => {
            let law = match law {
                LawKind::Example2 => SplitLaw::Example2 { d },
                LawKind::Wagner => SplitLaw::Wagner { d },
            };
            bounds::log_moment_lower(&law)?
        }
    })
}

fn experiment_config(g: &Global, a: &ExperimentArgs) -> Result<ExperimentConfig, Failure> {
    if let Some(p) = &a.config {
        let mut cfg = ExperimentConfig::load(p)?;
        cfg.timing |= g.timing;
        return Ok(cfg);
    }
    let need =
        |v: Option<usize>, name: &str| v.ok_or_else(|| Failure(format!("--source needs --{name}")));
    let source = match a.source {
        SourceKind::Moment => Source::Moment {
            n: need(a.n, "n")?,
            d: need(a.d, "d")?,
        },
        SourceKind::Random => Source::Random {
            model: a.model.into(),
            n: need(a.n, "n")?,
            d: need(a.d, "d")?,
            precision: a.precision,
        },
        SourceKind::File => Source::File {
            path: a
                .path
                .clone()
                .ok_or_else(|| Failure("--source file needs --path".into()))?,
        },
    };
    let cfg = ExperimentConfig {
        source,
        trials: a.trials,
        base_seed: g.seed,
        mode: match a.mode {
            ModeArg::Geometric => Mode::Geometric,
            ModeArg::Combinatorial => Mode::Combinatorial,
        },
        outputs: None,
        budget: g.budget,
        timing: g.timing,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn verify(g: &Global, a: &VerifyArgs) -> Result<Outcome, Failure> {
    format_or(g, Format::Json, &[Format::Json], "verify")?;
    if !(a.lemmas || a.domination || a.equivalence || a.ks) {
        return Err(Failure(
            "verify needs at least one of --lemmas, --domination, --equivalence, --ks".into(),
        ));
    }
    let mut report = serde_json::Map::new();
    let mut ok = true;
    let pool = rayon_pool(threads(g))?;
    if a.lemmas {
        let r =
            pool.install(|| harness::verify_lemmas(a.d_max, a.n_max, a.sets, g.seed, g.budget))?;
        ok &= r.passed();
        report.insert(
            "lemmas".into(),
            serde_json::to_value(&r).expect("serializable"),
        );
    }
    if a.domination {
        let r = pool.install(|| harness::verify_domination(a.d, a.n, a.trials, g.seed))?;
        ok &= r.passed();
        report.insert(
            "domination".into(),
            serde_json::to_value(&r).expect("serializable"),
        );
    }
    if a.equivalence {
        let r = pool.install(|| harness::verify_equivalence(a.d_max, a.n_max, g.budget, g.seed))?;
        ok &= r.passed();
        report.insert(
            "equivalence".into(),
            serde_json::to_value(&r).expect("serializable"),
        );
    }
    if a.ks {
        if a.n <= a.d {
            return Err(Failure("--ks needs --n > --d".into()));
        }
        let fr = pool.install(|| harness::simulate_root_fractions(a.n, a.d, a.trials, g.seed));
        let r = harness::ks_split_vs_beta(&fr, a.d, Some(a.n))?;
        ok &= r.pass;
        report.insert("ks".into(), serde_json::to_value(&r).expect("serializable"));
    }
    report.insert("passed".into(), Value::Bool(ok));
    emit_json(g, &Value::Object(report))?;
    Ok(if ok {
        Outcome::Ok
    } else {
        Outcome::VerificationFailed
    })
}
