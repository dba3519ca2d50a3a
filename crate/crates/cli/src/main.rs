//! `negsel`: GO annotation evolution analysis and negative example selection.
//!
//! Every flag can also come from a `NEGSEL_<FLAG>` environment variable or
//! from a `--config` run file. Precedence: flag, then environment, then run
//! file, then built-in default.
//!
//! Exit codes: 0 ok, 1 other failure, 2 usage, 3 empty result, 4 parse error.

mod config;

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::parser::ValueSource;
use clap::{ArgAction, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use log::info;
use negsel_core::annotations::{parse_gaf_path, GafOptions, Holdout, MatrixMode, EXPERIMENTAL_CODES};
use negsel_core::evaluation::{BenchmarkConfig, TuneConfig, DEFAULT_BUDGETS, DEFAULT_GRID, DEFAULT_REPEATS};
use negsel_core::ontology::{parse_obo_path, Branch, EdgeRelations, TermIdx};
use negsel_core::pipeline::{self, Inputs, MatrixCache};
use negsel_core::selection::{Method, SelectionConfig};
use negsel_core::similarity::Measure;

const ENV_PREFIX: &str = "NEGSEL_";

#[derive(Parser)]
#[command(name = "negsel", version, about, args_override_self = true, propagate_version = true)]
struct Cli {
    /// Run file of `key = value` lines; keys are long flag names.
    #[arg(long, global = true, env = "NEGSEL_CONFIG", value_name = "FILE")]
    config: Option<PathBuf>,

    /// Writes the effective settings of this run as a run file.
    #[arg(long, global = true, env = "NEGSEL_SAVE_CONFIG", value_name = "FILE")]
    save_config: Option<PathBuf>,

    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true, env = "NEGSEL_THREADS")]
    threads: Option<usize>,

    /// Directory for cached similarity matrices.
    #[arg(long, global = true, env = "NEGSEL_CACHE_DIR", value_name = "DIR")]
    cache_dir: Option<PathBuf>,

    /// -v for progress, -vv for debug output.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Where newly annotated proteins land relative to their old terms.
    Analyze(AnalyzeArgs),
    /// Selects negative examples for each term of a release.
    Select(SelectArgs),
    /// Temporal-holdout benchmark of selection methods.
    Evaluate(EvaluateArgs),
    /// Exports term-term similarity matrices.
    Similarity(SimilarityArgs),
    /// Parses the inputs and reports what was kept and dropped.
    ParseCheck(ParseCheckArgs),
}

#[derive(Args)]
struct OntologyArgs {
    /// Ontology in OBO 1.2/1.4 format (optionally gzipped).
    #[arg(long, env = "NEGSEL_OBO", value_name = "FILE")]
    obo: PathBuf,

    /// Relations that become DAG edges.
    #[arg(long, env = "NEGSEL_RELATIONS", value_delimiter = ',', action = ArgAction::Set, default_value = "is_a,part_of")]
    relations: Vec<String>,
}

#[derive(Args)]
struct FilterArgs {
    /// Evidence codes to keep.
    #[arg(long, env = "NEGSEL_EVIDENCE", value_delimiter = ',', action = ArgAction::Set,
          default_values_t = EXPERIMENTAL_CODES.map(String::from))]
    evidence: Vec<String>,

    /// Tab-separated alias → canonical protein id map.
    #[arg(long, env = "NEGSEL_PROTEIN_MAP", value_name = "FILE")]
    protein_map: Option<PathBuf>,

    /// Branches to process.
    #[arg(long, env = "NEGSEL_BRANCH", value_delimiter = ',', action = ArgAction::Set,
          value_parser = parse_branch, default_value = "BP,MF,CC")]
    branch: Vec<Branch>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    ontology: OntologyArgs,
    /// Older annotation release (GAF).
    #[arg(long, env = "NEGSEL_GAF_OLD", value_name = "FILE")]
    gaf_old: PathBuf,
    /// Newer annotation release (GAF).
    #[arg(long, env = "NEGSEL_GAF_NEW", value_name = "FILE")]
    gaf_new: PathBuf,
    #[command(flatten)]
    filter: FilterArgs,
    /// Similarity measures for the rank analysis.
    #[arg(long, env = "NEGSEL_MEASURE", value_delimiter = ',', action = ArgAction::Set,
          value_parser = parse_measure, default_value = "lin,jaccard")]
    measure: Vec<Measure>,
    /// Output directory.
    #[arg(long, env = "NEGSEL_OUT", value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    ontology: OntologyArgs,
    /// Annotation release to select from (GAF).
    #[arg(long, visible_alias = "gaf-old", env = "NEGSEL_GAF", value_name = "FILE")]
    gaf: PathBuf,
    #[command(flatten)]
    filter: FilterArgs,
    #[arg(long, env = "NEGSEL_METHOD", value_parser = parse_method)]
    method: Method,
    /// Negatives per term.
    #[arg(long, env = "NEGSEL_BUDGET")]
    budget: usize,
    #[command(flatten)]
    k: KArgs,
    #[arg(long, env = "NEGSEL_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "NEGSEL_SNOB_MODE", value_enum, default_value_t = Mode::Closed)]
    snob_mode: Mode,
    /// Restrict to these terms; default is every annotated term of the branch.
    #[arg(long, env = "NEGSEL_TERMS", value_delimiter = ',', action = ArgAction::Set)]
    terms: Vec<String>,
    /// Output CSV; `-` or absent writes to stdout.
    #[arg(long, env = "NEGSEL_OUT", value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KArgs {
    /// NSFS quantile K: one value for every NSFS method, or `method=K` pairs.
    #[arg(long, env = "NEGSEL_K", value_delimiter = ',', action = ArgAction::Set)]
    k: Vec<String>,
    /// Choose K for NSFS methods without one by masking old annotations.
    #[arg(long, env = "NEGSEL_TUNE_K")]
    tune_k: bool,
    /// Candidate K values for tuning.
    #[arg(long, env = "NEGSEL_GRID", value_delimiter = ',', action = ArgAction::Set, default_values_t = DEFAULT_GRID)]
    grid: Vec<f64>,
    /// Share of direct annotations masked while tuning.
    #[arg(long, env = "NEGSEL_MASK_FRACTION", default_value_t = 0.1)]
    mask_fraction: f64,
    /// Independent masks averaged while tuning.
    #[arg(long, env = "NEGSEL_TUNE_REPEATS", default_value_t = 1)]
    tune_repeats: usize,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    ontology: OntologyArgs,
    #[arg(long, env = "NEGSEL_GAF_OLD", value_name = "FILE")]
    gaf_old: PathBuf,
    #[arg(long, env = "NEGSEL_GAF_NEW", value_name = "FILE")]
    gaf_new: PathBuf,
    #[command(flatten)]
    filter: FilterArgs,
    /// Methods to compare.
    #[arg(long, env = "NEGSEL_METHOD", value_delimiter = ',', action = ArgAction::Set,
          value_parser = parse_method, default_value = "nsfs-j,nsfs-l,sibling,noancdesc,snob,random")]
    method: Vec<Method>,
    #[arg(long, env = "NEGSEL_BUDGETS", value_delimiter = ',', action = ArgAction::Set, default_values_t = DEFAULT_BUDGETS)]
    budgets: Vec<usize>,
    #[command(flatten)]
    k: KArgs,
    /// Budget used to score K while tuning; defaults to the smallest budget.
    #[arg(long, env = "NEGSEL_TUNE_BUDGET")]
    tune_budget: Option<usize>,
    #[arg(long, env = "NEGSEL_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "NEGSEL_REPEATS", default_value_t = DEFAULT_REPEATS)]
    repeats: usize,
    /// Newer-release matrix a selected protein must be absent from.
    #[arg(long, env = "NEGSEL_FN_MODE", value_enum, default_value_t = Mode::Closed)]
    fn_mode: Mode,
    #[arg(long, env = "NEGSEL_SNOB_MODE", value_enum, default_value_t = Mode::Closed)]
    snob_mode: Mode,
    #[arg(long, env = "NEGSEL_OUT", value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct SimilarityArgs {
    #[command(flatten)]
    ontology: OntologyArgs,
    /// Release providing the term frequencies.
    #[arg(long, visible_alias = "gaf-old", env = "NEGSEL_GAF", value_name = "FILE")]
    gaf: PathBuf,
    /// Optional newer release; its annotated terms join the matrix scope.
    #[arg(long, env = "NEGSEL_GAF_NEW", value_name = "FILE")]
    gaf_new: Option<PathBuf>,
    #[command(flatten)]
    filter: FilterArgs,
    #[arg(long, env = "NEGSEL_MEASURE", value_delimiter = ',', action = ArgAction::Set,
          value_parser = parse_measure, default_value = "lin,jaccard")]
    measure: Vec<Measure>,
    /// Also write the binary matrix format next to the CSV.
    #[arg(long, env = "NEGSEL_BINARY")]
    binary: bool,
    #[arg(long, env = "NEGSEL_OUT", value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct ParseCheckArgs {
    #[command(flatten)]
    ontology: OntologyArgs,
    /// Annotation releases to check.
    #[arg(long, env = "NEGSEL_GAF", value_delimiter = ',', action = ArgAction::Set, value_name = "FILE")]
    gaf: Vec<PathBuf>,
    /// Evidence codes to keep.
    #[arg(long, env = "NEGSEL_EVIDENCE", value_delimiter = ',', action = ArgAction::Set,
          default_values_t = EXPERIMENTAL_CODES.map(String::from))]
    evidence: Vec<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Direct,
    Closed,
}

impl From<Mode> for MatrixMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Direct => MatrixMode::Direct,
            Mode::Closed => MatrixMode::Closed,
        }
    }
}

fn parse_branch(s: &str) -> std::result::Result<Branch, String> {
    s.trim().parse().map_err(|e: negsel_core::Error| e.to_string())
}

fn parse_measure(s: &str) -> std::result::Result<Measure, String> {
    s.trim().parse().map_err(|e: negsel_core::Error| e.to_string())
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: negsel_core::Error| e.to_string())
}

/// A bad invocation detected after argument parsing; exits with code 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn exit_code(e: &anyhow::Error) -> u8 {
    use negsel_core::Error as E;
    for cause in e.chain() {
        if cause.is::<Usage>() {
            return 2;
        }
        if let Some(core) = cause.downcast_ref::<E>() {
            return match core {
                E::Parse { .. } | E::Structural(_) => 4,
                E::Empty(_) => 3,
                E::Domain(_) | E::UnknownTerm(_) => 2,
                _ => 1,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let argv: Vec<OsString> = std::env::args_os().collect();
    let matches = match with_run_file(argv).and_then(|argv| Ok(Cli::command().try_get_matches_from(argv)?)) {
        Ok(m) => m,
        Err(e) => {
            if let Some(ce) = e.downcast_ref::<clap::Error>() {
                ce.exit();
            }
            eprintln!("negsel: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    init_logging(cli.verbose);
    match run(cli, &matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("negsel: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_env("NEGSEL_LOG")
        .format_timestamp(None)
        .init();
}

fn env_name(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.to_ascii_uppercase().replace('-', "_"))
}

/// Global options that take a value, so the subcommand can be located.
const VALUED_GLOBALS: [&str; 4] = ["--config", "--save-config", "--threads", "--cache-dir"];

/// Splices run-file settings into `argv` right after the subcommand, so any
/// flag given later on the command line overrides them. Settings whose
/// environment variable is set are left to the environment.
fn with_run_file(mut argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut config = std::env::var_os(env_name("config")).map(PathBuf::from);
    let mut sub_pos = None;
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].to_string_lossy();
        if let Some(v) = a.strip_prefix("--config=") {
            config = Some(PathBuf::from(v));
        } else if VALUED_GLOBALS.contains(&a.as_ref()) {
            if a == "--config" {
                config = argv.get(i + 1).map(PathBuf::from);
            }
            i += 1;
        } else if a == "--" {
            break;
        } else if !a.starts_with('-') && sub_pos.is_none() {
            sub_pos = Some(i);
        }
        i += 1;
    }
    let (Some(path), Some(pos)) = (config, sub_pos) else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path).map_err(|e| usage(format!("--config {}: {e}", path.display())))?;
    let file = config::parse(&text, &path.display().to_string()).map_err(|e| usage(e.to_string()))?;

    let cmd = Cli::command();
    let sub_name = argv[pos].to_string_lossy().into_owned();
    let Some(sub) = cmd.find_subcommand(&sub_name) else {
        return Ok(argv);
    };
    let takes = |c: &clap::Command, key: &str| {
        c.get_arguments().find(|a| a.get_long() == Some(key)).map(|a| a.get_action().takes_values())
    };
    let mut injected = Vec::new();
    for (key, value) in &file {
        if key == "config" || key == "save-config" {
            continue;
        }
        let takes_value = match takes(sub, key).or_else(|| takes(&cmd, key)) {
            Some(t) => t,
            None if cmd.get_subcommands().any(|s| takes(s, key).is_some()) => continue,
            None => bail!(usage(format!("{}: unknown key {key:?}", path.display()))),
        };
        if std::env::var_os(env_name(key)).is_some() {
            continue;
        }
        if takes_value {
            injected.push(OsString::from(format!("--{key}={value}")));
        } else {
            match value.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" => injected.push(OsString::from(format!("--{key}"))),
                "false" | "no" | "0" => {}
                _ => bail!(usage(format!("{}: {key} expects true or false", path.display()))),
            }
        }
    }
    argv.splice(pos + 1..pos + 1, injected);
    Ok(argv)
}

/// Effective settings of the chosen subcommand, as a run file.
fn effective_settings(matches: &clap::ArgMatches) -> config::RunFile {
    let mut out = config::RunFile::new();
    let Some((name, sub)) = matches.subcommand() else {
        return out;
    };
    let cmd = Cli::command();
    let sub_cmd = cmd.find_subcommand(name).unwrap();
    for arg in sub_cmd.get_arguments().chain(cmd.get_arguments()) {
        let id = arg.get_id().as_str();
        let Some(long) = arg.get_long() else { continue };
        if matches!(long, "config" | "save-config" | "help" | "version" | "verbose") {
            continue;
        }
        if !matches!(sub.value_source(id), Some(ValueSource::CommandLine | ValueSource::EnvVariable | ValueSource::DefaultValue)) {
            continue;
        }
        let Some(raw) = sub.get_raw(id) else { continue };
        let values: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
        out.insert(long.to_string(), values.join(","));
    }
    out
}

fn run(cli: Cli, matches: &clap::ArgMatches) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("starting worker pool")?;
    }
    if let Some(path) = &cli.save_config {
        fs::write(path, config::format(&effective_settings(matches)))
            .with_context(|| format!("writing --save-config {}", path.display()))?;
    }
    let cache = MatrixCache::new(cli.cache_dir.clone());
    match cli.cmd {
        Cmd::Analyze(a) => analyze(a, &cache),
        Cmd::Select(a) => select(a, &cache),
        Cmd::Evaluate(a) => evaluate(a, &cache),
        Cmd::Similarity(a) => similarity(a, &cache),
        Cmd::ParseCheck(a) => parse_check(a),
    }
}

fn require_file(flag: &str, path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("{flag} {}: no such file", path.display())))
    }
}

fn relations(o: &OntologyArgs) -> EdgeRelations {
    EdgeRelations::from_names(o.relations.iter().map(|s| s.trim()))
}

fn gaf_options(f: &FilterArgs) -> Result<GafOptions> {
    let mut opts = GafOptions::default().with_evidence(&f.evidence)?;
    if let Some(p) = &f.protein_map {
        require_file("--protein-map", p)?;
        opts = opts.load_protein_map(p).context("annotations: --protein-map")?;
    }
    Ok(opts)
}

fn file_label(p: &Path) -> String {
    p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Parses the ontology and one or two releases, attributing failures to
/// the flag that named the file.
fn load(o: &OntologyArgs, gafs: &[(&str, &Path)], f: &FilterArgs) -> Result<Inputs> {
    require_file("--obo", &o.obo)?;
    for (flag, p) in gafs {
        require_file(flag, p)?;
    }
    let opts = gaf_options(f)?;
    let (dag, obo_stats) =
        parse_obo_path(&o.obo, &relations(o)).with_context(|| format!("ontology: --obo {}", o.obo.display()))?;
    info!("{}: {} terms, {} edges", o.obo.display(), dag.len(), dag.edge_count());
    let mut releases = Vec::new();
    for (flag, p) in gafs {
        let r = parse_gaf_path(p, &dag, &opts, &file_label(p))
            .with_context(|| format!("annotations: {flag} {}", p.display()))?;
        info!("{}: {} proteins, {} annotations", p.display(), r.protein_count(), r.annotation_count());
        releases.push(r);
    }
    let holdout = match releases.as_slice() {
        [old] => Holdout::single(&dag, old),
        [old, new] => Holdout::new(&dag, old, new),
        _ => unreachable!("one or two releases"),
    };
    Ok(Inputs {
        old_stats: releases[0].stats.clone(),
        new_stats: releases.get(1).map(|r| r.stats.clone()).unwrap_or_default(),
        obo_stats,
        dag,
        holdout,
    })
}

fn analyze(a: AnalyzeArgs, cache: &MatrixCache) -> Result<()> {
    let inputs = load(&a.ontology, &[("--gaf-old", &a.gaf_old), ("--gaf-new", &a.gaf_new)], &a.filter)?;
    let summary = pipeline::run_analysis(&inputs, &a.filter.branch, &a.measure, cache, &a.out)?;
    let mut out = io::stdout().lock();
    for b in &summary.branches {
        writeln!(
            out,
            "{}: {} proteins / {} annotations novel (direct), {} / {} (closed)",
            b.branch,
            b.novelty_direct.proteins,
            b.novelty_direct.annotations,
            b.novelty_closed.proteins,
            b.novelty_closed.annotations
        )?;
    }
    writeln!(out, "wrote {}", a.out.display())?;
    Ok(())
}

/// Quantiles for the NSFS methods in `methods`, from `--k`.
fn fixed_quantiles(k: &KArgs, methods: &[Method]) -> Result<Vec<(Method, f64)>> {
    let mut out = Vec::new();
    for item in &k.k {
        let item = item.trim();
        let (targets, value): (Vec<Method>, &str) = match item.split_once('=') {
            Some((m, v)) => (vec![parse_method(m).map_err(usage)?], v),
            None => (methods.iter().copied().filter(|m| m.is_nsfs()).collect(), item),
        };
        let q: f64 = value.trim().parse().map_err(|_| usage(format!("--k: {value:?} is not a number")))?;
        if !(q > 0.0 && q < 1.0) {
            bail!(usage(format!("--k: {q} is outside (0, 1)")));
        }
        for m in targets {
            if !m.is_nsfs() {
                bail!(usage(format!("--k: {m} takes no quantile")));
            }
            out.retain(|(x, _)| *x != m);
            out.push((m, q));
        }
    }
    for &m in methods.iter().filter(|m| m.is_nsfs()) {
        if !out.iter().any(|(x, _)| *x == m) && !k.tune_k {
            bail!(usage(format!("{m} needs --k or --tune-k")));
        }
    }
    Ok(out)
}

fn tune_config(k: &KArgs, budget: usize, seed: u64) -> TuneConfig {
    let mut tc = TuneConfig::new(budget, seed);
    tc.grid = k.grid.clone();
    tc.mask_fraction = k.mask_fraction;
    tc.repeats = k.tune_repeats;
    tc
}

fn select(a: SelectArgs, cache: &MatrixCache) -> Result<()> {
    if a.budget == 0 {
        bail!(usage("--budget must be at least 1"));
    }
    let fixed = fixed_quantiles(&a.k, &[a.method])?;
    let inputs = load(&a.ontology, &[("--gaf", &a.gaf)], &a.filter)?;
    let dag = &inputs.dag;
    let wanted: Vec<TermIdx> = a
        .terms
        .iter()
        .map(|t| dag.lookup(t.trim()))
        .collect::<negsel_core::Result<_>>()
        .context("--terms")?;

    let mut body: Vec<u8> = Vec::new();
    let mut header = None;
    let mut n_terms = 0;
    for &branch in &a.filter.branch {
        let terms: Vec<TermIdx> = if wanted.is_empty() {
            pipeline::default_selection_terms(&inputs, branch)
        } else {
            wanted.iter().copied().filter(|&t| dag.branch(t) == Some(branch)).collect()
        };
        if terms.is_empty() {
            continue;
        }
        let mut cfg = SelectionConfig::new(a.method, a.budget, a.seed);
        cfg.snob_mode = a.snob_mode.into();
        let matrix = match a.method.measure() {
            Some(measure) => {
                let q = match fixed.first() {
                    Some(&(_, q)) => q,
                    None => {
                        let tc = tune_config(&a.k, a.budget, a.seed);
                        let r = negsel_core::evaluation::tune_k(&inputs.holdout.old, dag, branch, measure, &tc)
                            .with_context(|| format!("tuning K for {branch}"))?;
                        eprintln!("{branch} {}: tuned K = {}", a.method, r.k);
                        r.k
                    }
                };
                cfg = cfg.with_quantile(q);
                Some(pipeline::branch_matrix(&inputs, measure, branch, cache)?)
            }
            None => None,
        };
        let mut buf = Vec::new();
        pipeline::run_selection(&inputs, &cfg, &terms, matrix.as_ref(), &mut buf)?;
        let text = String::from_utf8(buf).expect("CSV is UTF-8");
        let (head, rows) = text.split_once('\n').unwrap_or((&text, ""));
        header.get_or_insert_with(|| head.to_string());
        body.extend_from_slice(rows.as_bytes());
        n_terms += terms.len();
    }
    let Some(header) = header else {
        return Err(negsel_core::Error::Empty("no annotated terms in the selected branches".into()).into());
    };
    info!("selected negatives for {n_terms} terms");

    let mut w: Box<dyn Write> = match &a.out {
        Some(p) if p.as_os_str() != "-" => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            Box::new(BufWriter::new(fs::File::create(p).with_context(|| format!("--out {}", p.display()))?))
        }
        _ => Box::new(BufWriter::new(io::stdout().lock())),
    };
    writeln!(w, "{header}")?;
    w.write_all(&body)?;
    w.flush()?;
    Ok(())
}

fn evaluate(a: EvaluateArgs, cache: &MatrixCache) -> Result<()> {
    if a.budgets.is_empty() || a.budgets.contains(&0) {
        bail!(usage("--budgets must be positive"));
    }
    if a.repeats == 0 {
        bail!(usage("--repeats must be at least 1"));
    }
    let fixed = fixed_quantiles(&a.k, &a.method)?;
    let mut cfg = BenchmarkConfig::new(a.method.clone(), a.seed);
    cfg.budgets = a.budgets.clone();
    cfg.repeats = a.repeats;
    cfg.fn_mode = a.fn_mode.into();
    cfg.snob_mode = a.snob_mode.into();
    cfg.quantiles.extend(fixed);
    let tune_budget = a.tune_budget.unwrap_or_else(|| *a.budgets.iter().min().unwrap());
    let tc = a.k.tune_k.then(|| tune_config(&a.k, tune_budget, a.seed));

    let inputs = load(&a.ontology, &[("--gaf-old", &a.gaf_old), ("--gaf-new", &a.gaf_new)], &a.filter)?;
    let output = pipeline::run_evaluation(&inputs, &cfg, tc.as_ref(), &a.filter.branch, cache, &a.out)?;

    let mut out = io::stdout().lock();
    for t in &output.tuned {
        writeln!(out, "{} {}: tuned K = {}", t.branch, t.method, t.result.k)?;
    }
    writeln!(out, "branch\tmethod\tbudget\tmean_fn\tterms")?;
    for r in &output.report.branches {
        for c in &r.cells {
            writeln!(out, "{}\t{}\t{}\t{:.4}\t{}", r.branch, c.method, c.budget, c.mean_fn, r.terms.len())?;
        }
    }
    writeln!(out, "wrote {}", a.out.display())?;
    Ok(())
}

fn similarity(a: SimilarityArgs, cache: &MatrixCache) -> Result<()> {
    let mut gafs: Vec<(&str, &Path)> = vec![("--gaf", &a.gaf)];
    if let Some(p) = &a.gaf_new {
        gafs.push(("--gaf-new", p));
    }
    let inputs = load(&a.ontology, &gafs, &a.filter)?;
    let mut written = 0;
    for &branch in &a.filter.branch {
        for &measure in &a.measure {
            let m = match pipeline::branch_matrix(&inputs, measure, branch, cache) {
                Ok(m) => m,
                Err(negsel_core::Error::Empty(msg)) => {
                    log::warn!("{msg}; skipping");
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            let stem = format!("{}_{}", branch.as_str().to_ascii_lowercase(), measure.as_str());
            pipeline::export_matrix(&m, &inputs.dag, &a.out, &stem, a.binary)?;
            println!("{stem}: {} terms", m.m());
            written += 1;
        }
    }
    if written == 0 {
        return Err(negsel_core::Error::Empty("no annotated terms in the selected branches".into()).into());
    }
    Ok(())
}

fn parse_check(a: ParseCheckArgs) -> Result<()> {
    require_file("--obo", &a.ontology.obo)?;
    for p in &a.gaf {
        require_file("--gaf", p)?;
    }
    let opts = GafOptions::default().with_evidence(&a.evidence)?;
    let (dag, stats) = parse_obo_path(&a.ontology.obo, &relations(&a.ontology))
        .with_context(|| format!("ontology: --obo {}", a.ontology.obo.display()))?;
    let mut releases = Vec::new();
    for p in &a.gaf {
        let r = parse_gaf_path(p, &dag, &opts, &file_label(p))
            .with_context(|| format!("annotations: --gaf {}", p.display()))?;
        releases.push(serde_json::json!({
            "file": p.display().to_string(),
            "proteins": r.protein_count(),
            "annotations": r.annotation_count(),
            "stats": r.stats,
        }));
    }
    let branches: serde_json::Map<String, serde_json::Value> = dag
        .branch_sizes()
        .iter()
        .map(|(b, n)| (b.as_str().to_string(), (*n).into()))
        .collect();
    let report = serde_json::json!({
        "ontology": {
            "file": a.ontology.obo.display().to_string(),
            "terms": dag.len() - 1,
            "edges": dag.edge_count(),
            "max_level": dag.max_level(),
            "branches": branches,
            "stats": stats,
        },
        "releases": releases,
    });
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k_args(k: &[&str], tune: bool) -> KArgs {
        KArgs {
            k: k.iter().map(|s| s.to_string()).collect(),
            tune_k: tune,
            grid: DEFAULT_GRID.to_vec(),
            mask_fraction: 0.1,
            tune_repeats: 1,
        }
    }

    #[test]
    fn k_applies_to_every_nsfs_method_or_one() {
        let all = [Method::NsfsJaccard, Method::NsfsLin, Method::Random];
        let q = fixed_quantiles(&k_args(&["0.8"], false), &all).unwrap();
        assert_eq!(q, vec![(Method::NsfsJaccard, 0.8), (Method::NsfsLin, 0.8)]);
        let q = fixed_quantiles(&k_args(&["0.8", "nsfs-l=0.6"], false), &all).unwrap();
        assert_eq!(q, vec![(Method::NsfsJaccard, 0.8), (Method::NsfsLin, 0.6)]);
        assert!(fixed_quantiles(&k_args(&["nsfs-j=0.6"], false), &all).is_err());
        assert!(fixed_quantiles(&k_args(&["nsfs-j=0.6"], true), &all).is_ok());
        assert!(fixed_quantiles(&k_args(&["random=0.5"], true), &all).is_err());
        assert!(fixed_quantiles(&k_args(&["1.5"], false), &all).is_err());
    }

    #[test]
    fn usage_and_core_errors_map_to_exit_codes() {
        assert_eq!(exit_code(&usage("x")), 2);
        assert_eq!(exit_code(&anyhow::anyhow!(negsel_core::Error::Empty("x".into())).context("ctx")), 3);
        let parse = negsel_core::Error::Structural("cycle".into());
        assert_eq!(exit_code(&anyhow::Error::from(parse).context("ontology")), 4);
        assert_eq!(exit_code(&anyhow::anyhow!("other")), 1);
    }

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
