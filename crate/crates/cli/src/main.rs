//! Batch jobs over architecture landscapes. Every output file starts with a
//! header naming the tool version, a hash of the resolved job configuration
//! and the configuration itself, so any file can be regenerated exactly.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use archscape::a2m::{
    derive_seed, run_search, sweep, sweep_csv, A2MConfig, Optimizer, RelaxedLandscapeLoss, SearchOptions,
    SupernetConfig, Testbed, ToySupernet,
};
use archscape::arch_space::{parse_nb201_genotype, Architecture, OperationSet, SpaceSpec};
use archscape::geometry::{build_neighbor_tree, build_path_tree};
use archscape::landscape::{
    accuracy_path, diff_distributions, load_table, neighborhood_histogram, refs_in_band, AccuracyOracle, BinSpec,
    LandscapeSpec, RefSelector, TableFormat,
};
use archscape::stats::ks_two_sample;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(name = "archscape", version, about = "Architecture-space geometry, landscape statistics and flatness-biased search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Neighbor vs whole-space accuracy histograms.
    Neighbors(NeighborsArgs),
    /// Accuracy-difference samples per reference tier plus random pairs.
    Diff(DiffArgs),
    /// Neighbor tree of one architecture, or path tree between two.
    PathTree(PathTreeArgs),
    /// Accuracy path and barrier between two architectures.
    Barrier(BarrierArgs),
    /// Two-sample Kolmogorov-Smirnov test on two sample files.
    Ks(KsArgs),
    /// First-order DARTS search.
    Darts(SearchArgs),
    /// Flatness-biased (A2M) search.
    A2m(A2mArgs),
    /// A2M runs over a grid of rho values and seeds.
    Sweep(SweepArgs),
    /// Canonical and genotype forms of an architecture.
    Encode(EncodeArgs),
    /// Size of a search space.
    Count(CountArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum TableKind {
    /// `arch,dataset,test_acc,valid_acc` with pipe-joined codes.
    Csv,
    /// Same columns with `|op~src|+|...|` genotypes.
    Genotype,
}

#[derive(Args, Serialize)]
struct OracleArgs {
    /// Accuracy table file.
    #[arg(long, conflicts_with = "landscape")]
    table: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    table_format: TableKind,
    /// JSON description of a synthetic landscape.
    #[arg(long)]
    landscape: Option<PathBuf>,
    #[arg(long, default_value = "cifar10")]
    dataset: String,
}

#[derive(Args, Serialize)]
struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct NeighborsArgs {
    #[command(flatten)]
    oracle: OracleArgs,
    /// Reference architecture (repeatable).
    #[arg(long, required_unless_present = "band")]
    arch: Vec<String>,
    /// Accuracy band `LO:HI` selecting the references instead.
    #[arg(long, conflicts_with = "arch")]
    band: Option<String>,
    #[arg(long, default_value_t = 1)]
    radius: usize,
    #[arg(long, default_value_t = 50)]
    bins: usize,
    /// Histogram range `LO:HI`; defaults to the data range.
    #[arg(long)]
    range: Option<String>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[command(flatten)]
    #[serde(skip)]
    output: OutputArgs,
}

#[derive(Args, Serialize)]
struct DiffArgs {
    #[command(flatten)]
    oracle: OracleArgs,
    /// Tier `NAME=ARCH,ARCH,...` (repeatable).
    #[arg(long)]
    tier: Vec<String>,
    /// Tier `NAME=LO:HI` taking every architecture in an accuracy band.
    #[arg(long)]
    tier_band: Vec<String>,
    #[arg(long, default_value_t = 1)]
    radius: usize,
    /// Number of random distinct pairs.
    #[arg(long, default_value_t = 1000)]
    pairs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[command(flatten)]
    #[serde(skip)]
    output: OutputArgs,
}

#[derive(Args, Serialize)]
struct PathTreeArgs {
    #[arg(long)]
    arch: String,
    /// Path-tree endpoint; without it a neighbor tree is built.
    #[arg(long)]
    target: Option<String>,
    /// Depth of the neighbor tree.
    #[arg(long, default_value_t = 1)]
    radius: usize,
    /// Number of operations including zero; defaults to the standard space.
    #[arg(long)]
    ops: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    #[serde(skip)]
    output: OutputArgs,
}

#[derive(Args, Serialize)]
struct BarrierArgs {
    #[command(flatten)]
    oracle: OracleArgs,
    #[arg(long)]
    arch: String,
    #[arg(long)]
    target: String,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    #[serde(skip)]
    output: OutputArgs,
    /// Additional per-level CSV (`radius,mean_acc,unique_count`).
    #[arg(long)]
    #[serde(skip)]
    levels_out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct KsArgs {
    /// First sample: one number per line (first CSV column).
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[command(flatten)]
    #[serde(skip)]
    output: OutputArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum TestbedKind {
    Relaxation,
    Supernet,
}

#[derive(Args, Serialize)]
struct SearchArgs {
    #[arg(long, value_enum, default_value = "relaxation")]
    testbed: TestbedKind,
    #[command(flatten)]
    oracle: OracleArgs,
    /// Architecture learning rate.
    #[arg(long, default_value_t = 0.05)]
    eta: f64,
    /// Weight learning rate (supernet only).
    #[arg(long, default_value_t = 0.05)]
    eta_w: f64,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Standard deviation of the initial logits.
    #[arg(long, default_value_t = 1.0)]
    init_scale: f64,
    /// `json` writes the full run; `csv` writes the `step,loss` trajectory.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    #[serde(skip)]
    output: OutputArgs,
}

#[derive(Args, Serialize)]
struct A2mArgs {
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    #[arg(long, default_value_t = 1e-2)]
    epsilon: f64,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args, Serialize)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "1e-4,1e-3,1e-2,1e-1")]
    rhos: Vec<f64>,
    /// Number of seeds; cell seeds are `seed, seed + 1, ...`.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    #[arg(long, default_value_t = 1e-2)]
    epsilon: f64,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args, Serialize)]
struct EncodeArgs {
    /// Pipe-joined codes, `normal;reduction` digits, or an NB201 genotype.
    #[arg(long)]
    arch: String,
    #[arg(long)]
    ops: Option<usize>,
    #[command(flatten)]
    #[serde(skip)]
    output: OutputArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SpaceKind {
    Nb201,
    Darts,
}

#[derive(Args, Serialize)]
struct CountArgs {
    #[arg(long, value_enum, default_value = "nb201")]
    space: SpaceKind,
    /// NB201 sequence length.
    #[arg(long, default_value_t = 6)]
    len: usize,
    /// DARTS intermediate nodes per cell.
    #[arg(long, default_value_t = 4)]
    nodes: usize,
    /// Operations including zero; defaults to 5 (NB201) or 8 (DARTS).
    #[arg(long)]
    ops: Option<usize>,
    #[command(flatten)]
    #[serde(skip)]
    output: OutputArgs,
}

/// Header-stamped output for one destination.
struct Output {
    path: Option<PathBuf>,
    body: String,
}

struct Job {
    name: &'static str,
    config: serde_json::Value,
}

impl Job {
    fn new(name: &'static str, args: &impl Serialize) -> Result<Self> {
        Ok(Self { name, config: serde_json::to_value(args)? })
    }

    fn config_hash(&self) -> String {
        let canonical = serde_json::json!({ "command": self.name, "config": self.config }).to_string();
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    fn csv(&self, path: &Option<PathBuf>, body: String) -> Output {
        let header = format!(
            "# {} {} {} config_hash={}\n# config {}\n",
            env!("CARGO_PKG_NAME"),
            env!("CARGO_PKG_VERSION"),
            self.name,
            self.config_hash(),
            self.config
        );
        Output { path: path.clone(), body: header + &body }
    }

    fn json(&self, path: &Option<PathBuf>, result: &impl Serialize) -> Result<Output> {
        let doc = serde_json::json!({
            "header": {
                "tool": env!("CARGO_PKG_NAME"),
                "version": env!("CARGO_PKG_VERSION"),
                "command": self.name,
                "config_hash": self.config_hash(),
                "config": self.config,
            },
            "result": result,
        });
        Ok(Output { path: path.clone(), body: serde_json::to_string_pretty(&doc)? + "\n" })
    }

    fn emit(&self, path: &Option<PathBuf>, format: Format, csv: impl FnOnce() -> String, json: &impl Serialize) -> Result<Output> {
        match format {
            Format::Csv => Ok(self.csv(path, csv())),
            Format::Json => self.json(path, json),
        }
    }
}

/// Writes every file through a temporary sibling and renames it into place;
/// if any write fails, files already placed by this call are removed.
fn write_outputs(outputs: Vec<Output>) -> Result<()> {
    let mut staged = Vec::new();
    let mut stdout = String::new();
    for out in outputs {
        match out.path {
            None => stdout.push_str(&out.body),
            Some(path) => {
                let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
                let mut tmp = tempfile::NamedTempFile::new_in(dir)
                    .with_context(|| format!("cannot create output in {}", dir.display()))?;
                tmp.write_all(out.body.as_bytes())?;
                staged.push((tmp, path));
            }
        }
    }
    let mut placed: Vec<PathBuf> = Vec::new();
    for (tmp, path) in staged {
        if let Err(e) = tmp.persist(&path) {
            for p in &placed {
                let _ = fs::remove_file(p);
            }
            return Err(e.error).with_context(|| format!("cannot write {}", path.display()));
        }
        placed.push(path);
    }
    print!("{stdout}");
    Ok(())
}

fn load_oracle(args: &OracleArgs) -> Result<Box<dyn AccuracyOracle>> {
    match (&args.table, &args.landscape) {
        (Some(path), _) => {
            if !path.exists() {
                bail!("table not found: {}", path.display());
            }
            let format = match args.table_format {
                TableKind::Csv => TableFormat::Csv,
                TableKind::Genotype => TableFormat::NativeGenotype,
            };
            let table = load_table(path, format).with_context(|| format!("cannot load table {}", path.display()))?;
            Ok(Box::new(table))
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path).with_context(|| format!("landscape not found: {}", path.display()))?;
            let spec: LandscapeSpec = serde_json::from_str(&text).context("invalid landscape description")?;
            Ok(Box::new(spec.build()?))
        }
        (None, None) => bail!("an accuracy source is required: pass --table or --landscape"),
    }
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let (lo, hi) = s.split_once(':').with_context(|| format!("expected LO:HI, got `{s}`"))?;
    let (lo, hi): (f64, f64) = (lo.trim().parse()?, hi.trim().parse()?);
    if !(lo <= hi) {
        bail!("empty range `{s}`");
    }
    Ok((lo, hi))
}

/// Space implied by an architecture string when no table fixes it.
fn infer_space(arch: &str, ops: Option<usize>) -> SpaceSpec {
    match arch.split_once(';') {
        Some((normal, _)) => {
            let len = normal.trim().len();
            let nodes = (1..=len).find(|m| m * (m + 1) == len).unwrap_or(0);
            SpaceSpec::Darts { nodes, num_ops: ops.unwrap_or(8) }
        }
        None => SpaceSpec::Nb201 { len: arch.split('|').count(), num_ops: ops.unwrap_or(5) },
    }
}

fn parse_arch(s: &str, space: &SpaceSpec) -> Result<Architecture> {
    if s.contains('~') {
        return Ok(Architecture::Nb201(parse_nb201_genotype(s, &OperationSet::nb201())?));
    }
    Architecture::parse(s, space).with_context(|| format!("invalid architecture `{s}`"))
}

fn cmd_neighbors(a: &NeighborsArgs) -> Result<Vec<Output>> {
    let job = Job::new("neighbors", a)?;
    let oracle = load_oracle(&a.oracle)?;
    let space = oracle.space();
    let refs = match &a.band {
        Some(b) => {
            let (lo, hi) = parse_range(b)?;
            RefSelector::Band { lo, hi }
        }
        None => RefSelector::Archs(a.arch.iter().map(|s| parse_arch(s, &space)).collect::<Result<_>>()?),
    };
    let range = a.range.as_deref().map(parse_range).transpose()?;
    let h = neighborhood_histogram(oracle.as_ref(), &refs, a.radius, &a.oracle.dataset, &BinSpec { count: a.bins, range })?;
    Ok(vec![job.emit(&a.output.out, a.format, || h.to_csv(), &h)?])
}

fn cmd_diff(a: &DiffArgs) -> Result<Vec<Output>> {
    let job = Job::new("diff", a)?;
    let oracle = load_oracle(&a.oracle)?;
    let space = oracle.space();
    let mut tiers = BTreeMap::new();
    for t in &a.tier {
        let (name, archs) = t.split_once('=').with_context(|| format!("expected NAME=ARCH,..., got `{t}`"))?;
        let archs = archs.split(',').map(|s| parse_arch(s.trim(), &space)).collect::<Result<Vec<_>>>()?;
        tiers.insert(name.to_string(), archs);
    }
    for t in &a.tier_band {
        let (name, band) = t.split_once('=').with_context(|| format!("expected NAME=LO:HI, got `{t}`"))?;
        let (lo, hi) = parse_range(band)?;
        tiers.insert(name.to_string(), refs_in_band(oracle.as_ref(), &a.oracle.dataset, lo, hi)?);
    }
    let diffs = diff_distributions(oracle.as_ref(), &tiers, a.radius, a.pairs, a.seed, &a.oracle.dataset)?;
    let csv = || {
        let mut s = String::from("tier,diff\n");
        for (tier, values) in &diffs {
            for v in values {
                s.push_str(&format!("{tier},{v}\n"));
            }
        }
        s
    };
    Ok(vec![job.emit(&a.output.out, a.format, csv, &diffs)?])
}

fn cmd_path_tree(a: &PathTreeArgs) -> Result<Vec<Output>> {
    let job = Job::new("path-tree", a)?;
    let space = infer_space(&a.arch, a.ops);
    let root = parse_arch(&a.arch, &space)?;
    let doc = match &a.target {
        Some(t) => build_path_tree(&root, &parse_arch(t, &space)?)?.to_document(),
        None => build_neighbor_tree(&root, a.radius)?.to_document(),
    };
    let csv = || {
        let mut s = String::from("level,arch\n");
        for (level, archs) in doc.levels.iter().enumerate() {
            for arch in archs {
                s.push_str(&format!("{level},{arch}\n"));
            }
        }
        s
    };
    Ok(vec![job.emit(&a.output.out, a.format, csv, &doc)?])
}

fn cmd_barrier(a: &BarrierArgs) -> Result<Vec<Output>> {
    let job = Job::new("barrier", a)?;
    let oracle = load_oracle(&a.oracle)?;
    let space = oracle.space();
    let (src, dst) = (parse_arch(&a.arch, &space)?, parse_arch(&a.target, &space)?);
    let report = accuracy_path(oracle.as_ref(), &src, &dst, &a.oracle.dataset)?;
    let mut outputs = vec![job.emit(&a.output.out, a.format, || report.level_csv(), &report)?];
    if let Some(path) = &a.levels_out {
        outputs.push(job.csv(&Some(path.clone()), report.level_csv()));
    }
    Ok(outputs)
}

/// First column of each non-comment line; a non-numeric first line is a header.
fn read_sample(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("sample not found: {}", path.display()))?;
    let mut out = Vec::new();
    let mut first = true;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let field = line.split(',').next().unwrap_or("").trim();
        match field.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if first => {}
            Err(_) => bail!("{}:{}: `{field}` is not a number", path.display(), n + 1),
        }
        first = false;
    }
    Ok(out)
}

fn cmd_ks(a: &KsArgs) -> Result<Vec<Output>> {
    let job = Job::new("ks", a)?;
    let r = ks_two_sample(&read_sample(&a.a)?, &read_sample(&a.b)?)?;
    Ok(vec![job.json(&a.output.out, &r)?])
}

fn build_testbed(s: &SearchArgs) -> Result<Testbed> {
    Ok(match s.testbed {
        TestbedKind::Relaxation => {
            let oracle = load_oracle(&s.oracle)?;
            Testbed::Relaxation(Box::new(RelaxedLandscapeLoss::new(oracle.as_ref(), &s.oracle.dataset)?))
        }
        TestbedKind::Supernet => {
            let cfg = SupernetConfig { seed: derive_seed(s.seed, 7), ..Default::default() };
            Testbed::Supernet(Box::new(ToySupernet::new(&cfg)?))
        }
    })
}

fn search_options(s: &SearchArgs, optimizer: Optimizer, rho: f64, epsilon: f64) -> SearchOptions {
    SearchOptions {
        optimizer,
        a2m: A2MConfig { rho_alpha: rho, epsilon, xi: 0.0, eta_alpha: s.eta, eta_w: s.eta_w },
        steps: s.steps,
        seed: s.seed,
        init_scale: s.init_scale,
    }
}

fn run(job: &Job, s: &SearchArgs, opts: &SearchOptions) -> Result<Vec<Output>> {
    let outcome = run_search(build_testbed(s)?, opts)?;
    Ok(vec![job.emit(&s.output.out, s.format, || outcome.trajectory_csv(), &outcome)?])
}

fn cmd_darts(s: &SearchArgs) -> Result<Vec<Output>> {
    let job = Job::new("darts", s)?;
    run(&job, s, &search_options(s, Optimizer::Darts, 0.0, A2MConfig::default().epsilon))
}

fn cmd_a2m(a: &A2mArgs) -> Result<Vec<Output>> {
    let job = Job::new("a2m", a)?;
    run(&job, &a.search, &search_options(&a.search, Optimizer::A2m, a.rho, a.epsilon))
}

fn cmd_sweep(a: &SweepArgs) -> Result<Vec<Output>> {
    let job = Job::new("sweep", a)?;
    if a.seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    let s = &a.search;
    let seeds: Vec<u64> = (0..a.seeds).map(|i| s.seed + i).collect();
    let base = search_options(s, Optimizer::A2m, 0.0, a.epsilon);
    let rows = sweep(&build_testbed(s)?, &base, &a.rhos, &seeds)?;
    Ok(vec![job.emit(&s.output.out, s.format, || sweep_csv(&rows), &rows)?])
}

#[derive(Serialize)]
struct Encoded {
    canonical: String,
    genotype: Option<String>,
    space: SpaceSpec,
}

fn cmd_encode(a: &EncodeArgs) -> Result<Vec<Output>> {
    let job = Job::new("encode", a)?;
    let arch = parse_arch(&a.arch, &infer_space(&a.arch, a.ops))?;
    let genotype = match arch.as_nb201() {
        Some(nb) if nb.num_ops() == 5 && nb.n_nodes().is_some() => Some(nb.to_genotype(&OperationSet::nb201())?),
        _ => None,
    };
    let enc = Encoded { canonical: arch.to_string(), genotype, space: arch.space() };
    Ok(vec![job.json(&a.output.out, &enc)?])
}

#[derive(Serialize)]
struct Count {
    space: SpaceSpec,
    count: String,
}

fn cmd_count(a: &CountArgs) -> Result<Vec<Output>> {
    let job = Job::new("count", a)?;
    let space = match a.space {
        SpaceKind::Nb201 => SpaceSpec::Nb201 { len: a.len, num_ops: a.ops.unwrap_or(5) },
        SpaceKind::Darts => SpaceSpec::Darts { nodes: a.nodes, num_ops: a.ops.unwrap_or(8) },
    };
    // counts overflow JSON's safe integer range, so they travel as strings
    Ok(vec![job.json(&a.output.out, &Count { space, count: space.count().to_string() })?])
}

fn dispatch(cli: &Cli) -> Result<Vec<Output>> {
    match &cli.command {
        Command::Neighbors(a) => cmd_neighbors(a),
        Command::Diff(a) => cmd_diff(a),
        Command::PathTree(a) => cmd_path_tree(a),
        Command::Barrier(a) => cmd_barrier(a),
        Command::Ks(a) => cmd_ks(a),
        Command::Darts(a) => cmd_darts(a),
        Command::A2m(a) => cmd_a2m(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Encode(a) => cmd_encode(a),
        Command::Count(a) => cmd_count(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli).and_then(write_outputs) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
