use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use proxbounds::bootstrap::{bootstrap_ci, BootstrapConfig};
use proxbounds::bounds::{estimate, Estimand, Method, DEFAULT_ALPHA};
use proxbounds::bridge::{check_outcome_bridge, check_treatment_bridge, OutcomeVariant};
use proxbounds::dgp::{build_joint, DgpSpec};
use proxbounds::rng::RNG_ALGORITHM;
use proxbounds::study::{run_study, simulate_replication, StudyConfig};
use proxbounds::{Codebook, Dataset, Error, FrequencyModel, JointPmf, Role};

#[derive(Parser)]
#[command(
    name = "proxbounds",
    version,
    about = "Partial-identification bounds with proxy variables"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write DGP specs, datasets and oracle truths for a study configuration.
    Simulate(SimulateArgs),
    /// Bounds on one estimand from a dataset or an exact joint.
    Bounds(BoundsArgs),
    /// Basic-bootstrap confidence interval around the smoothed bounds.
    Ci(CiArgs),
    /// Check whether non-negative bridge functions exist for a simulated joint.
    BridgeCheck(BridgeArgs),
    /// Run a replicated simulation study and write summary tables.
    Study(StudyArgs),
}

#[derive(Args)]
struct StudyOverrides {
    /// Study configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<usize>,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Output directory (overrides the configuration's `output`).
    #[arg(long)]
    output: Option<PathBuf>,
}

impl StudyOverrides {
    fn load(&self) -> Result<(StudyConfig, PathBuf)> {
        let mut config = StudyConfig::from_json_file(&self.config)
            .with_context(|| format!("reading {}", self.config.display()))?;
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(r) = self.replications {
            config.replications = r;
        }
        if let Some(n) = &self.n {
            config.n = n.clone();
        }
        if let Some(out) = &self.output {
            config.output = Some(out.display().to_string());
        }
        config.validate()?;
        let out = PathBuf::from(config.output.clone().unwrap_or_else(|| ".".into()));
        Ok((config, out))
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    study: StudyOverrides,
}

#[derive(Args)]
struct Smoothing {
    /// LSE smoothing parameter.
    #[arg(long, default_value_t = DEFAULT_ALPHA, conflicts_with = "hard")]
    alpha: f64,
    /// Hard bounds only (no LSE smoothing).
    #[arg(long)]
    hard: bool,
    /// Add-λ pseudo-count on every observed cell.
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
}

impl Smoothing {
    fn alpha(&self) -> Option<f64> {
        (!self.hard).then_some(self.alpha)
    }
}

#[derive(Args)]
struct Target {
    /// W, Z, WZ, mediation or frontdoor.
    #[arg(long)]
    method: Method,
    /// e.g. ett-mean(0), po-mean(1), ate, ett, cross-world, nie, nde.
    #[arg(long)]
    estimand: Estimand,
}

#[derive(Args)]
struct BoundsArgs {
    /// Dataset CSV (requires --codebook).
    #[arg(long, requires = "codebook", conflicts_with = "joint")]
    data: Option<PathBuf>,
    #[arg(long)]
    codebook: Option<PathBuf>,
    /// Exact joint distribution JSON (population mode).
    #[arg(long, required_unless_present = "data")]
    joint: Option<PathBuf>,
    #[command(flatten)]
    target: Target,
    #[command(flatten)]
    smoothing: Smoothing,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CiArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    codebook: PathBuf,
    #[command(flatten)]
    target: Target,
    #[command(flatten)]
    smoothing: Smoothing,
    /// Bootstrap replicates.
    #[arg(short = 'B', long = "replicates", default_value_t = 500)]
    replicates: usize,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Also write every replicate's bounds as CSV.
    #[arg(long)]
    replicates_csv: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BridgeSelect {
    Outcome,
    Treatment,
    Both,
}

#[derive(Args)]
struct BridgeArgs {
    /// DGP specification JSON.
    #[arg(long, conflicts_with = "joint", required_unless_present = "joint")]
    spec: Option<PathBuf>,
    /// Joint distribution JSON including the latent axis.
    #[arg(long)]
    joint: Option<PathBuf>,
    /// Which bridge to check; defaults to both for confounder joints.
    #[arg(long, value_enum)]
    kind: Option<BridgeSelect>,
    /// Outcome-bridge variant; inferred from the latent axes when omitted.
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Confounder,
    Mediation,
    Frontdoor,
}

#[derive(Args)]
struct StudyArgs {
    #[command(flatten)]
    study: StudyOverrides,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Bounds(a) => bounds(a),
        Command::Ci(a) => ci(a),
        Command::BridgeCheck(a) => bridge_check(a),
        Command::Study(a) => study(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 configuration/schema, 3 estimator precondition, 4 I/O.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Io(_) => 4,
                e if e.is_precondition() => 3,
                _ => 2,
            };
        }
        if cause.is::<std::io::Error>() {
            return 4;
        }
    }
    2
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)
        .map_err(Error::from)
        .with_context(|| format!("writing {}", path.display()))
}

fn emit(value: &serde_json::Value, output: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match output {
        Some(p) => write_text(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_codebook(path: &Path) -> Result<Codebook> {
    Codebook::from_json_file(path).with_context(|| format!("reading {}", path.display()))
}

fn read_data(data: &Path, codebook: &Path) -> Result<Dataset> {
    let cb = read_codebook(codebook)?;
    Dataset::from_csv_file(&cb, data).with_context(|| format!("reading {}", data.display()))
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let (config, out) = args.study.load()?;
    fs::create_dir_all(&out)
        .map_err(Error::from)
        .with_context(|| format!("creating {}", out.display()))?;
    for g in 0..config.grid.len() {
        for (ni, &n) in config.n.iter().enumerate() {
            for r in 0..config.replications {
                let sim = simulate_replication(&config, g, ni, r)?;
                let stem = format!("g{g}_r{r}");
                if ni == 0 {
                    write_text(
                        &out.join(format!("spec_{stem}.json")),
                        &(serde_json::to_string_pretty(&sim.spec)? + "\n"),
                    )?;
                    write_text(
                        &out.join(format!("truth_{stem}.json")),
                        &(serde_json::to_string_pretty(&sim.truth)? + "\n"),
                    )?;
                    write_text(
                        &out.join(format!("codebook_{stem}.json")),
                        &(serde_json::to_string_pretty(sim.data.codebook())? + "\n"),
                    )?;
                }
                write_text(
                    &out.join(format!("data_{stem}_n{n}.csv")),
                    &sim.data.to_csv_string(),
                )?;
            }
        }
    }
    let manifest = json!({ "config": config, "rng": RNG_ALGORITHM });
    emit(&manifest, Some(&out.join("simulate.json")))
}

fn bounds(args: BoundsArgs) -> Result<()> {
    let model = match (&args.data, &args.joint) {
        (Some(data), _) => {
            let codebook = args.codebook.as_deref().expect("clap enforces --codebook");
            FrequencyModel::fit(&read_data(data, codebook)?, args.smoothing.lambda)?
        }
        (None, Some(joint)) => {
            let joint = JointPmf::from_json_file(joint)
                .with_context(|| format!("reading {}", joint.display()))?;
            FrequencyModel::from_joint(&joint)?
        }
        (None, None) => unreachable!("clap requires --data or --joint"),
    };
    let alpha = args.smoothing.alpha();
    let report = estimate(&model, args.target.method, args.target.estimand, alpha)?;
    let config = json!({
        "data": args.data,
        "codebook": args.codebook,
        "joint": args.joint,
        "method": args.target.method,
        "estimand": args.target.estimand,
        "alpha": alpha,
        "lambda": args.smoothing.lambda,
    });
    emit(
        &json!({ "config": config, "report": report }),
        args.output.as_deref(),
    )
}

fn ci(args: CiArgs) -> Result<()> {
    let data = read_data(&args.data, &args.codebook)?;
    let config = BootstrapConfig {
        method: args.target.method,
        estimand: args.target.estimand,
        alpha: args.smoothing.alpha(),
        lambda: args.smoothing.lambda,
        replicates: args.replicates,
        level: args.level,
        seed: args.seed,
    };
    let report = bootstrap_ci(&data, &config, args.workers)?;
    if let Some(path) = &args.replicates_csv {
        write_text(path, &report.replicates_csv())?;
    }
    let echo = json!({ "data": args.data, "codebook": args.codebook, "bootstrap": config });
    emit(
        &json!({ "config": echo, "report": report }),
        args.output.as_deref(),
    )
}

fn bridge_check(args: BridgeArgs) -> Result<()> {
    let joint = match (&args.spec, &args.joint) {
        (Some(spec), _) => {
            let spec = DgpSpec::from_json_file(spec)
                .with_context(|| format!("reading {}", spec.display()))?;
            build_joint(&spec)?
        }
        (None, Some(joint)) => JointPmf::from_json_file(joint)
            .with_context(|| format!("reading {}", joint.display()))?,
        (None, None) => unreachable!("clap requires --spec or --joint"),
    };
    let cb = joint.codebook();
    let (has_u, has_m) = (
        cb.role_index(Role::LatentConfounder).is_some(),
        cb.role_index(Role::LatentMediator).is_some(),
    );
    let variant = match args.variant {
        Some(VariantArg::Confounder) => OutcomeVariant::Confounder,
        Some(VariantArg::Mediation) => OutcomeVariant::Mediation,
        Some(VariantArg::Frontdoor) => OutcomeVariant::Frontdoor,
        None if has_m && has_u => OutcomeVariant::Frontdoor,
        None if has_m => OutcomeVariant::Mediation,
        None => OutcomeVariant::Confounder,
    };
    let kind = args
        .kind
        .unwrap_or(if variant == OutcomeVariant::Confounder {
            BridgeSelect::Both
        } else {
            BridgeSelect::Outcome
        });
    let mut results = Vec::new();
    if matches!(kind, BridgeSelect::Outcome | BridgeSelect::Both) {
        results.push(check_outcome_bridge(&joint, variant)?);
    }
    if matches!(kind, BridgeSelect::Treatment | BridgeSelect::Both) {
        results.push(check_treatment_bridge(&joint)?);
    }
    emit(&serde_json::to_value(&results)?, args.output.as_deref())
}

fn study(args: StudyArgs) -> Result<()> {
    let (config, out) = args.study.load()?;
    let report = run_study(&config, args.workers)?;
    fs::create_dir_all(&out)
        .map_err(Error::from)
        .with_context(|| format!("creating {}", out.display()))?;
    write_text(&out.join("summary.csv"), &report.summary_csv())?;
    write_text(&out.join("replications.csv"), &report.records_csv())?;
    emit(
        &serde_json::to_value(&report)?,
        Some(&out.join("summary.json")),
    )?;
    for f in &report.failures {
        eprintln!("quarantined: {f}");
    }
    print!("{}", report.summary_csv());
    Ok(())
}
