use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serpscale::dominance::{self, Violation};
use serpscale::enumeration::{self, Limits, SerpUniverse, UniverseMode};
use serpscale::exact::{format_rational, parse_rational};
use serpscale::intervalize::{self, Intervalizer};
use serpscale::trec::{self, EvalOptions, QrelsOptions, UndefinedPolicy};
use serpscale::{
    Depth, Discount, GainMap, GradeCensus, GradeScale, Metric, MetricSpec, Rational, Scorer,
    UnjudgedPolicy,
};

const GAIN_MAP_ENV: &str = "SERPSCALE_GAIN_MAP";

#[derive(Parser)]
#[command(name = "serpscale", version, about = "Score SERPs and analyze the measurement scale of retrieval metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a TREC run against qrels and print a per-topic TSV report.
    Score(ScoreArgs),
    /// List every SERP class of a universe, optionally with per-metric scores.
    Enumerate(EnumerateArgs),
    /// Print the distinct score set of a metric over a universe.
    Distinct(MetricUniverseArgs),
    /// Print the source-to-target table mapping a metric's score set onto equi-spaced points.
    Intervalize(IntervalizeArgs),
    /// Write the Hasse diagram of the non-inferiority order as DOT.
    Hasse(HasseArgs),
    /// List pairs ordered by non-inferiority that a metric scores the wrong way round.
    Audit(AuditArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricName {
    Prec,
    Rr,
    R1,
    Rbp,
    Ap,
    Dcg,
    Ndcg,
    Err,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    /// log2(rank + 1) discount
    Ms,
    /// no discount up to rank b, then log_b(rank)
    Jk,
}

#[derive(Clone, Copy, ValueEnum)]
enum UniverseKind {
    /// every ordering of a fixed census of documents
    Perm,
    /// every grade sequence of length k
    Prefix,
}

#[derive(Clone, Copy, ValueEnum)]
enum UnjudgedArg {
    Nonrelevant,
    Error,
}

#[derive(Clone, Copy, ValueEnum)]
enum UndefinedArg {
    Skip,
    Fail,
}

#[derive(Args)]
struct MetricArgs {
    /// Metric to compute; repeat or comma-separate where several are accepted
    #[arg(long, value_enum, value_delimiter = ',', required = true)]
    metric: Vec<MetricName>,

    /// Persistence for rbp, as a decimal or p/q
    #[arg(long, default_value = "1/2")]
    phi: String,

    /// Discount for dcg and ndcg
    #[arg(long, value_enum, default_value = "ms")]
    variant: Variant,

    /// Log base of the jk discount
    #[arg(long, default_value_t = 2)]
    b: u64,
}

#[derive(Args)]
struct GainArgs {
    /// Gain map file ("label value" per line); falls back to $SERPSCALE_GAIN_MAP, then binary gains
    #[arg(long)]
    gain_map: Option<PathBuf>,

    /// Use binary grades with gains 0 and 1
    #[arg(long, conflicts_with = "gain_map")]
    binary: bool,
}

#[derive(Args)]
struct UniverseArgs {
    /// Cut-off depth; also the SERP length of prefix universes
    #[arg(long)]
    k: Option<usize>,

    #[arg(long, value_enum, default_value = "prefix")]
    universe: UniverseKind,

    /// Non-relevant documents of a binary perm universe
    #[arg(long, conflicts_with = "census")]
    n0: Option<u64>,

    /// Relevant documents of a binary perm universe
    #[arg(long, conflicts_with = "census")]
    n1: Option<u64>,

    /// Documents per grade for a perm universe, lowest grade first (e.g. 3,2,1)
    #[arg(long, value_delimiter = ',')]
    census: Option<Vec<u64>>,

    /// Number of grades in a prefix universe; defaults to the gain map's size
    #[arg(long)]
    grades: Option<usize>,

    /// Per-grade document limits for a prefix universe, lowest grade first
    #[arg(long, value_delimiter = ',')]
    cap: Option<Vec<u64>>,

    /// Largest universe to enumerate
    #[arg(long, default_value_t = Limits::default().max_size)]
    max_size: u128,

    /// Longest SERP to enumerate
    #[arg(long, default_value_t = Limits::default().max_depth)]
    max_depth: usize,
}

#[derive(Args)]
struct OutputArgs {
    /// Write to this file instead of stdout
    #[arg(long, short)]
    output: Option<PathBuf>,

    /// Decimal places in printed scores
    #[arg(long, default_value_t = 4)]
    precision: usize,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    qrels: PathBuf,

    #[arg(long)]
    run: PathBuf,

    #[command(flatten)]
    metrics: MetricArgs,

    /// Cut-off depth; defaults to each ranking's length
    #[arg(long)]
    k: Option<usize>,

    #[command(flatten)]
    gains: GainArgs,

    /// How to treat retrieved documents missing from the qrels
    #[arg(long, value_enum, default_value = "nonrelevant")]
    unjudged: UnjudgedArg,

    /// What to do when a metric is undefined for a topic
    #[arg(long, value_enum, default_value = "skip")]
    undefined: UndefinedArg,

    /// Print exact closed forms instead of rounded decimals
    #[arg(long)]
    exact: bool,

    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct EnumerateArgs {
    #[command(flatten)]
    universe: UniverseArgs,

    #[command(flatten)]
    gains: GainArgs,

    /// Metrics to score each member with
    #[arg(long, value_enum, value_delimiter = ',')]
    metric: Vec<MetricName>,

    #[arg(long, default_value = "1/2")]
    phi: String,

    #[arg(long, value_enum, default_value = "ms")]
    variant: Variant,

    #[arg(long, default_value_t = 2)]
    b: u64,

    /// Add an intervalized column after each metric
    #[arg(long)]
    intervalize: bool,

    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct MetricUniverseArgs {
    #[command(flatten)]
    metrics: MetricArgs,

    #[command(flatten)]
    universe: UniverseArgs,

    #[command(flatten)]
    gains: GainArgs,

    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct IntervalizeArgs {
    #[command(flatten)]
    common: MetricUniverseArgs,

    /// Qrels to re-score with intervalized values (needs --run)
    #[arg(long, requires = "run")]
    qrels: Option<PathBuf>,

    /// Run to re-score with intervalized values (needs --qrels)
    #[arg(long, requires = "qrels")]
    run: Option<PathBuf>,

    /// Write the re-scored report here; the table still goes to --output
    #[arg(long, requires = "run")]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct HasseArgs {
    #[command(flatten)]
    universe: UniverseArgs,

    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    common: MetricUniverseArgs,
}

enum Failure {
    Usage(String),
    Data(String),
    Violations,
}

impl From<serpscale::Error> for Failure {
    fn from(e: serpscale::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("\nFor more information, try '--help'.");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Violations) => ExitCode::from(3),
    }
}

fn run(command: Command) -> Outcome<()> {
    match command {
        Command::Score(args) => score(args),
        Command::Enumerate(args) => enumerate(args),
        Command::Distinct(args) => distinct(args),
        Command::Intervalize(args) => intervalize(args),
        Command::Hasse(args) => hasse(args),
        Command::Audit(args) => audit(args),
    }
}

fn score(args: ScoreArgs) -> Outcome<()> {
    if args.k == Some(0) {
        return Err(Failure::Usage("--k must be at least 1".into()));
    }
    let depth = args.k.map_or(Depth::Full, Depth::At);
    let specs = metric_specs(&args.metrics.metric, &args.metrics, depth)?;
    let map = gain_map(&args.gains)?;
    let qrels = read_qrels(&args.qrels)?;
    let runs = read_runs(&args.run)?;
    let options = EvalOptions {
        depth: args.k,
        unjudged: match args.unjudged {
            UnjudgedArg::Nonrelevant => UnjudgedPolicy::NonRelevant,
            UnjudgedArg::Error => UnjudgedPolicy::Error,
        },
        undefined: match args.undefined {
            UndefinedArg::Skip => UndefinedPolicy::Skip,
            UndefinedArg::Fail => UndefinedPolicy::Fail,
        },
    };
    let report = trec::evaluate(&runs, &qrels, &map, &specs, &options)?;
    eprint!("{}", report.skipped_tsv());
    let text = if args.exact { report.to_tsv_exact() } else { report.to_tsv(args.output.precision) };
    emit(&args.output, &text)
}

fn enumerate(args: EnumerateArgs) -> Outcome<()> {
    let map = gain_map(&args.gains)?;
    let plan = universe_plan(&args.universe, &map)?;
    let params = MetricArgs { metric: args.metric.clone(), phi: args.phi, variant: args.variant, b: args.b };
    let specs = metric_specs(&args.metric, &params, plan.depth)?;
    if args.intervalize && specs.is_empty() {
        return Err(Failure::Usage("--intervalize needs at least one --metric".into()));
    }
    let universe = plan.build()?;
    let mut intervalizers = Vec::new();
    if args.intervalize {
        for spec in &specs {
            intervalizers.push(intervalize::build_intervalizer(spec, &universe, &map)?);
        }
    }
    let columns: Vec<(&dyn Scorer, Option<&Intervalizer>)> = specs
        .iter()
        .enumerate()
        .map(|(i, s)| (s as &dyn Scorer, intervalizers.get(i)))
        .collect();
    let text = enumeration::universe_report(&universe, &map, &columns, args.output.precision)?;
    emit(&args.output, &text)
}

fn distinct(args: MetricUniverseArgs) -> Outcome<()> {
    let (spec, universe, map) = single_metric(&args)?;
    let set = enumeration::distinct_scores(&spec, &universe, &map)?;
    emit(&args.output, &set.listing(args.output.precision))
}

fn intervalize(args: IntervalizeArgs) -> Outcome<()> {
    let common = &args.common;
    let (spec, universe, map) = single_metric(common)?;
    let iv = intervalize::build_intervalizer(&spec, &universe, &map)?;
    let places = common.output.precision;
    let (Some(qrels), Some(run)) = (&args.qrels, &args.run) else {
        return emit(&common.output, &iv.table(places));
    };
    let report = rescore(&spec, &map, &common.universe, read_qrels(qrels)?, read_runs(run)?, places)?;
    match &args.report {
        Some(path) => {
            emit(&common.output, &iv.table(places))?;
            write_file(path, &report)
        }
        None => emit(&common.output, &format!("{}\n{}", iv.table(places), report)),
    }
}

/// Intervalizes each topic's score against the prefix universe its own judgments can supply.
fn rescore(
    spec: &MetricSpec,
    map: &GainMap,
    limits: &UniverseArgs,
    qrels: trec::Qrels,
    runs: trec::Runs,
    places: usize,
) -> Outcome<String> {
    let Depth::At(k) = spec.depth() else {
        return Err(Failure::Usage("re-scoring needs --k".into()));
    };
    let options = EvalOptions { depth: Some(k), ..EvalOptions::default() };
    let report = trec::evaluate(&runs, &qrels, map, std::slice::from_ref(spec), &options)?;
    eprint!("{}", report.skipped_tsv());
    let mut out = String::from("metric\ttopic\tscore\tinterval\n");
    let mut targets = Vec::with_capacity(report.scores.len());
    for s in &report.scores {
        let mut cap = qrels[&s.topic].census().counts().to_vec();
        cap.resize(map.scale().size(), 0);
        // unjudged documents are padded in as non-relevant, so grade 0 never runs out
        cap[0] = cap[0].max(k as u64);
        let mode = UniverseMode::Prefixes { depth: k, grades: map.scale().size(), cap: Some(GradeCensus::new(cap)) };
        let universe = SerpUniverse::enumerate_with(mode, limits.limits())?;
        let target = intervalize::build_intervalizer(spec, &universe, map)?.map(&s.value)?;
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            s.metric,
            s.topic,
            s.value.format_decimal(places),
            format_rational(&target, places)
        ));
        targets.push(target);
    }
    if let (Some(mean), Some(target_mean)) = (report.means.first(), intervalize::mean_target(&targets)) {
        out.push_str(&format!(
            "{}\tall\t{}\t{}\n",
            mean.metric,
            mean.mean.format_decimal(places),
            format_rational(&target_mean, places)
        ));
    }
    Ok(out)
}

fn hasse(args: HasseArgs) -> Outcome<()> {
    let u = &args.universe;
    let grades = u
        .grades
        .or(u.census.as_ref().map(Vec::len))
        .or(u.cap.as_ref().map(Vec::len))
        .unwrap_or(2)
        .max(2);
    let map = GainMap::linear(GradeScale::numbered(grades).map_err(usage)?);
    let universe = universe_plan(&args.universe, &map)?.build()?;
    emit(&args.output, &dominance::hasse(&universe).to_dot())
}

fn audit(args: AuditArgs) -> Outcome<()> {
    let common = &args.common;
    let map = gain_map(&common.gains)?;
    let plan = universe_plan(&common.universe, &map)?;
    let specs = metric_specs(&common.metrics.metric, &common.metrics, plan.depth)?;
    let universe = plan.build()?;
    let mut out = String::new();
    for spec in &specs {
        let violations: Vec<Violation> = dominance::audit_metric(spec, &universe, &map)?;
        for v in violations {
            out.push_str(&format!("{spec}\t{v}\n"));
        }
    }
    emit(&common.output, &out)?;
    if out.is_empty() {
        Ok(())
    } else {
        Err(Failure::Violations)
    }
}

fn single_metric(args: &MetricUniverseArgs) -> Outcome<(MetricSpec, SerpUniverse, GainMap)> {
    if args.metrics.metric.len() != 1 {
        return Err(Failure::Usage("exactly one --metric is accepted here".into()));
    }
    let map = gain_map(&args.gains)?;
    let plan = universe_plan(&args.universe, &map)?;
    let spec = metric_specs(&args.metrics.metric, &args.metrics, plan.depth)?.remove(0);
    Ok((spec, plan.build()?, map))
}

fn usage(e: serpscale::Error) -> Failure {
    Failure::Usage(e.to_string())
}

fn metric_specs(names: &[MetricName], params: &MetricArgs, depth: Depth) -> Outcome<Vec<MetricSpec>> {
    let discount = match params.variant {
        Variant::Ms => Discount::Microsoft,
        Variant::Jk => Discount::JarvelinKekalainen { base: params.b },
    };
    let mut specs = Vec::new();
    for name in names {
        let metric = match name {
            MetricName::Prec => Metric::Precision,
            MetricName::Rr => Metric::ReciprocalRank,
            MetricName::R1 => Metric::FirstRelevantRank,
            MetricName::Rbp => Metric::Rbp { persistence: phi(&params.phi)? },
            MetricName::Ap => Metric::AveragePrecision,
            MetricName::Dcg => Metric::Dcg(discount),
            MetricName::Ndcg => Metric::Ndcg(discount),
            MetricName::Err => Metric::ExpectedReciprocalRank,
        };
        let spec = MetricSpec::new(metric, depth).map_err(usage)?;
        if !specs.contains(&spec) {
            specs.push(spec);
        }
    }
    Ok(specs)
}

fn phi(text: &str) -> Outcome<Rational> {
    parse_rational(text).ok_or_else(|| Failure::Usage(format!("--phi: cannot parse {text:?}")))
}

fn gain_map(args: &GainArgs) -> Outcome<GainMap> {
    if args.binary {
        return Ok(GainMap::binary());
    }
    let path = match &args.gain_map {
        Some(path) => path.clone(),
        None => match std::env::var_os(GAIN_MAP_ENV) {
            Some(path) if !path.is_empty() => PathBuf::from(path),
            _ => return Ok(GainMap::binary()),
        },
    };
    trec::parse_gain_map(BufReader::new(open(&path)?))
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

/// A validated universe description the size guard has already accepted.
struct UniversePlan {
    mode: UniverseMode,
    limits: Limits,
    /// Metric depth consistent with the universe.
    depth: Depth,
}

impl UniversePlan {
    fn build(self) -> Outcome<SerpUniverse> {
        Ok(SerpUniverse::enumerate_with(self.mode, self.limits)?)
    }
}

impl UniverseArgs {
    fn limits(&self) -> Limits {
        Limits { max_depth: self.max_depth, max_size: self.max_size }
    }
}

fn universe_plan(args: &UniverseArgs, map: &GainMap) -> Outcome<UniversePlan> {
    let map_grades = map.scale().size();
    let (mode, depth) = match args.universe {
        UniverseKind::Perm => {
            if args.cap.is_some() || args.grades.is_some() {
                return Err(Failure::Usage("--cap and --grades apply to prefix universes only".into()));
            }
            let census = match (&args.census, args.n0, args.n1) {
                (Some(counts), None, None) => GradeCensus::new(counts.clone()),
                (None, Some(n0), Some(n1)) => GradeCensus::binary(n0, n1),
                _ => {
                    return Err(Failure::Usage(
                        "a perm universe needs --n0 and --n1, or --census".into(),
                    ))
                }
            };
            if census.counts().len() > map_grades {
                return Err(Failure::Usage(format!(
                    "--census has {} grades but the gain map has {map_grades}",
                    census.counts().len()
                )));
            }
            if census.total() == 0 {
                return Err(Failure::Usage("the census holds no documents".into()));
            }
            let depth = match args.k {
                Some(0) => return Err(Failure::Usage("--k must be at least 1".into())),
                Some(k) => Depth::At(k),
                None => Depth::Full,
            };
            (UniverseMode::FullPermutations(census), depth)
        }
        UniverseKind::Prefix => {
            if args.n0.is_some() || args.n1.is_some() || args.census.is_some() {
                return Err(Failure::Usage("--n0, --n1 and --census apply to perm universes only".into()));
            }
            let k = match args.k {
                Some(k) if k >= 1 => k,
                _ => return Err(Failure::Usage("a prefix universe needs --k of at least 1".into())),
            };
            let grades = args.grades.unwrap_or(map_grades);
            if grades < 2 || grades > map_grades {
                return Err(Failure::Usage(format!(
                    "--grades must be between 2 and the gain map's {map_grades}"
                )));
            }
            let cap = match &args.cap {
                Some(c) if c.len() > grades => {
                    return Err(Failure::Usage(format!("--cap lists more than {grades} grades")))
                }
                Some(c) => {
                    if c.iter().sum::<u64>() < k as u64 {
                        return Err(Failure::Usage(format!("--cap cannot fill {k} ranks")));
                    }
                    Some(GradeCensus::new(c.clone()))
                }
                None => None,
            };
            (UniverseMode::Prefixes { depth: k, grades, cap }, Depth::At(k))
        }
    };
    let limits = args.limits();
    let length = match &mode {
        UniverseMode::FullPermutations(c) => c.total() as usize,
        UniverseMode::Prefixes { depth, .. } => *depth,
        UniverseMode::Custom { .. } => unreachable!(),
    };
    let size = enumeration::universe_size(&mode);
    if length > limits.max_depth || size > limits.max_size {
        return Err(Failure::Usage(format!(
            "universe of {size} SERPs of length {length} exceeds --max-size {} / --max-depth {}",
            limits.max_size, limits.max_depth
        )));
    }
    Ok(UniversePlan { mode, limits, depth })
}

fn open(path: &Path) -> Outcome<File> {
    File::open(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn read_qrels(path: &Path) -> Outcome<trec::Qrels> {
    let qrels = trec::parse_qrels(BufReader::new(open(path)?), QrelsOptions::default())
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    if qrels.is_empty() {
        return Err(Failure::Data(format!("{}: no judgments", path.display())));
    }
    Ok(qrels)
}

fn read_runs(path: &Path) -> Outcome<trec::Runs> {
    let runs = trec::parse_run(BufReader::new(open(path)?))
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    if runs.is_empty() {
        return Err(Failure::Data(format!("{}: no ranked documents", path.display())));
    }
    Ok(runs)
}

fn write_file(path: &Path, text: &str) -> Outcome<()> {
    fs::write(path, text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn emit(output: &OutputArgs, text: &str) -> Outcome<()> {
    match &output.output {
        Some(path) => write_file(path, text),
        None => {
            let mut stdout = io::stdout().lock();
            match stdout.write_all(text.as_bytes()).and_then(|()| stdout.flush()) {
                Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(Failure::Data(format!("stdout: {e}"))),
                _ => Ok(()),
            }
        }
    }
}
