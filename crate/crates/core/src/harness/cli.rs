//! Command line front end. Exit codes: 0 success, 2 input or format
//! error, 3 numerical divergence.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use super::data::{load_dataset, DatasetFormat, HINT3_OOS_MARKER};
use super::embed::{Embedder, EmbeddingSource};
use super::experiment::{embed_dataset, run_embedded, Algorithm, EmbeddedDataset, ExperimentConfig};
use super::report::{emit_report, ReportFormat};
use crate::ces::{ces_search, CesConfig};
use crate::encoding::{
    load_encoding_set, one_hot_encoding_set, random_encoding_set, save_encoding_set, ClassEncodingSet,
    ClassDecision, DecisionRule, ThresholdPolicy,
};
use crate::error::{Error, Result};
use crate::metrics::{compute_eer, far, frr, score_samples};
use crate::model::{train_classifier, LikelihoodModel, Loss, NetworkConfig};
use crate::topology::{signature_for, label_grid_with_rule, signature_from_grid, GridSpec};

#[derive(Debug, Parser)]
#[command(name = "oosenc", version, about = "Class encodings for out-of-scope rejection")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one network and save its checkpoint.
    Train(TrainArgs),
    /// Score a checkpoint on the test split and sweep the threshold.
    Evaluate(EvaluateArgs),
    /// Draw random dense encodings and write them to a directory.
    SampleEncodings(SampleArgs),
    /// Topology signature of a decision rule over the unit square or cube.
    Topology(TopologyArgs),
    /// Iterative class encoding search.
    Ces(CesArgs),
    /// Run the comparison protocol and print a results table.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum, default_value = "jsonl")]
    format: DatasetFormat,
    /// Precomputed embedding file; the hashed featurizer is used otherwise.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long, default_value_t = 512)]
    feat_dim: usize,
    #[arg(long, default_value = HINT3_OOS_MARKER)]
    oos_marker: String,
}

impl DataArgs {
    fn source(&self) -> EmbeddingSource {
        match &self.embeddings {
            Some(p) => EmbeddingSource::File(p.clone()),
            None => EmbeddingSource::Hashed { dim: self.feat_dim },
        }
    }

    fn load(&self) -> Result<EmbeddedDataset> {
        let raw = load_dataset(&self.dataset, self.format, &self.oos_marker)?;
        embed_dataset(&raw, &Embedder::from_source(&self.source())?)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LossArg {
    CrossEntropy,
    Mse,
}

impl From<LossArg> for Loss {
    fn from(l: LossArg) -> Self {
        match l {
            LossArg::CrossEntropy => Loss::CrossEntropy,
            LossArg::Mse => Loss::Mse,
        }
    }
}

#[derive(Debug, Args)]
struct NetArgs {
    #[arg(long, default_value_t = 768)]
    hidden: usize,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.1)]
    dropout: f64,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    /// Training loss of the one-hot distance baseline.
    #[arg(long, value_enum, default_value = "cross-entropy")]
    distance_loss: LossArg,
}

impl NetArgs {
    fn config(&self, input_dim: usize, output_dim: usize, loss: Loss, seed: u64) -> NetworkConfig {
        NetworkConfig {
            hidden_dim: self.hidden,
            dropout_rate: self.dropout,
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.lr,
            seed,
            ..NetworkConfig::new(input_dim, output_dim, loss)
        }
    }
}

fn parse_algo(s: &str) -> std::result::Result<Algorithm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    net: NetArgs,
    #[arg(long, value_parser = parse_algo, default_value = "one_hot_softmax")]
    algo: Algorithm,
    /// Encoding dimension for random_dense (first value is used).
    #[arg(long, value_delimiter = ',')]
    n_values: Vec<usize>,
    /// Encoding file for loaded_encoding.
    #[arg(long)]
    encoding: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Checkpoint path; dense targets are also written to `<out>.enc`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    model: PathBuf,
    /// Dense encoding the model was trained toward.
    #[arg(long)]
    encoding: Option<PathBuf>,
    /// Rule for one-hot models: one_hot_softmax or one_hot_distance.
    #[arg(long, value_parser = parse_algo, default_value = "one_hot_softmax")]
    algo: Algorithm,
    /// Also report FAR/FRR at this threshold.
    #[arg(long)]
    theta: Option<f64>,
    /// Writes the FAR/FRR curve as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long)]
    classes: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    n_values: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    Max,
    Softmax,
    Distance,
    Dense,
}

#[derive(Debug, Args)]
struct TopologyArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// 2 or 3; taken from the encoding for the dense family.
    #[arg(long, default_value_t = 2)]
    classes: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    theta: Vec<f64>,
    #[arg(long)]
    resolution: Option<usize>,
    /// Encoding for the dense family (its dimension must be 2 or 3).
    #[arg(long)]
    encoding: Option<PathBuf>,
    /// Writes the labeled grid of the first θ as a PGM image.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CesArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    net: NetArgs,
    /// Encoding dimension of the random starting point (first value; default c).
    #[arg(long, value_delimiter = ',')]
    n_values: Vec<usize>,
    /// Starting encoding; overrides --n-values.
    #[arg(long)]
    encoding: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    #[arg(long, default_value_t = 1e-4)]
    lambda: f64,
    /// Carry weights across iterations instead of reinitializing.
    #[arg(long)]
    no_restart: bool,
    /// Epochs per iteration (default 50 with restarts, 1 without).
    #[arg(long)]
    inner_epochs: Option<usize>,
    #[arg(long)]
    attraction: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for the trace and best encodings.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    net: NetArgs,
    #[arg(long, value_parser = parse_algo, value_delimiter = ',',
          default_value = "one_hot_softmax,one_hot_distance,random_dense")]
    algo: Vec<Algorithm>,
    #[arg(long, value_delimiter = ',')]
    n_values: Vec<usize>,
    #[arg(long, default_value_t = 500)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Encoding file for loaded_encoding.
    #[arg(long)]
    encoding: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "markdown")]
    emit: ReportFormat,
    /// Output file; stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn train(args: TrainArgs, out: &mut dyn Write) -> Result<()> {
    let data = args.data.load()?;
    let c = data.num_classes();
    let (targets, loss) = match args.algo {
        Algorithm::OneHotSoftmax => (one_hot_encoding_set(c)?, Loss::CrossEntropy),
        Algorithm::OneHotDistance => (one_hot_encoding_set(c)?, args.net.distance_loss.into()),
        Algorithm::RandomDense => {
            let n = args.n_values.first().copied().unwrap_or(c);
            (random_encoding_set(c, n, args.seed.wrapping_add(1))?, Loss::Mse)
        }
        Algorithm::LoadedEncoding => {
            let path = args.encoding.as_ref().ok_or_else(|| Error::invalid("--encoding is required"))?;
            (load_encoding_set(path)?, Loss::Mse)
        }
    };
    let cfg = args.net.config(data.input_dim(), targets.dim(), loss, args.seed);
    let model = train_classifier(&data.train, &targets, cfg)?;
    model.save(&args.out)?;
    let mut written = vec![args.out.display().to_string()];
    if loss == Loss::Mse && matches!(args.algo, Algorithm::RandomDense | Algorithm::LoadedEncoding) {
        let mut enc_path = args.out.clone().into_os_string();
        enc_path.push(".enc");
        save_encoding_set(&targets, &enc_path)?;
        written.push(PathBuf::from(enc_path).display().to_string());
    }
    let summary = json!({"algorithm": args.algo.tag(), "classes": c, "written": written});
    writeln!(out, "{summary}").map_err(|e| Error::io("<stdout>", e))
}

fn evaluate(args: EvaluateArgs, out: &mut dyn Write) -> Result<()> {
    let data = args.data.load()?;
    let model = LikelihoodModel::load(&args.model)?;
    let c = data.num_classes();
    let rule = match (&args.encoding, args.algo) {
        (Some(p), _) => DecisionRule::Dense(load_encoding_set(p)?),
        (None, Algorithm::OneHotSoftmax) => DecisionRule::Softmax { classes: c },
        (None, Algorithm::OneHotDistance) => DecisionRule::OneHotDistance { classes: c },
        (None, other) => return Err(Error::invalid(format!("{other} needs --encoding"))),
    };
    if rule.input_dim() != model.config().output_dim || rule.num_classes() != c {
        return Err(Error::invalid("model, decision rule and dataset disagree on dimensions"));
    }
    let scored = score_samples(&model, &rule, &data.test)?;
    let report = compute_eer(&scored, rule.semantics())?.with_split("test");
    let mut summary = json!({
        "split": report.split,
        "eer": report.eer,
        "theta_star": report.theta_star,
        "far": report.far_at_theta,
        "frr": report.frr_at_theta,
        "iser": report.iser,
    });
    if let Some(theta) = args.theta {
        let policy = ThresholdPolicy::new(theta, rule.semantics())?;
        let decisions: Vec<ClassDecision> = data
            .test
            .iter()
            .map(|s| rule.decide(&model.predict(&s.embedding)?, &policy))
            .collect::<Result<_>>()?;
        let truths: Vec<_> = data.test.iter().map(|s| s.label).collect();
        summary["at_theta"] = json!({
            "theta": theta,
            "far": far(&decisions, &truths)?,
            "frr": frr(&decisions, &truths)?,
        });
    }
    if let Some(path) = &args.out {
        write_file(path, &report.curve_csv())?;
    }
    writeln!(out, "{summary}").map_err(|e| Error::io("<stdout>", e))
}

fn sample_encodings(args: SampleArgs, out: &mut dyn Write) -> Result<()> {
    if args.samples == 0 {
        return Err(Error::invalid("--samples must be >= 1"));
    }
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let mut count = 0;
    for &n in &args.n_values {
        for k in 1..=args.samples as u64 {
            let enc = random_encoding_set(args.classes, n, args.seed.wrapping_add(k))?;
            save_encoding_set(&enc, args.out.join(format!("r{n}_{k}.enc")))?;
            count += 1;
        }
    }
    writeln!(out, "{}", json!({"written": count, "dir": args.out.display().to_string()}))
        .map_err(|e| Error::io("<stdout>", e))
}

fn topology(args: TopologyArgs, out: &mut dyn Write) -> Result<()> {
    let rule = match args.family {
        FamilyArg::Max => DecisionRule::Max { classes: args.classes },
        FamilyArg::Softmax => DecisionRule::Softmax { classes: args.classes },
        FamilyArg::Distance => DecisionRule::OneHotDistance { classes: args.classes },
        FamilyArg::Dense => {
            let path = args.encoding.as_ref().ok_or_else(|| Error::invalid("--encoding is required"))?;
            DecisionRule::Dense(load_encoding_set(path)?)
        }
    };
    let dim = rule.input_dim();
    let grid = match args.resolution {
        Some(r) => GridSpec::new(dim, r)?,
        None => GridSpec::default_for(dim)?,
    };
    if let Some(path) = &args.out {
        let labeled = label_grid_with_rule(&rule, args.theta[0], &grid)?;
        write_file(path, &labeled.to_pgm())?;
        let sig = signature_from_grid(&labeled);
        writeln!(out, "{}", json!({"theta": args.theta[0], "signature": sig.to_json()}))
            .map_err(|e| Error::io("<stdout>", e))?;
        return Ok(());
    }
    for &theta in &args.theta {
        let sig = signature_for(&rule, theta, &grid)?;
        writeln!(out, "{}", json!({"theta": theta, "signature": sig.to_json()}))
            .map_err(|e| Error::io("<stdout>", e))?;
    }
    Ok(())
}

fn ces(args: CesArgs, out: &mut dyn Write) -> Result<()> {
    let data = args.data.load()?;
    let c = data.num_classes();
    let initial: ClassEncodingSet = match &args.encoding {
        Some(p) => load_encoding_set(p)?,
        None => {
            let n = args.n_values.first().copied().unwrap_or(c);
            random_encoding_set(c, n, args.seed.wrapping_add(1))?
        }
    };
    let network = args.net.config(data.input_dim(), initial.dim(), Loss::Mse, args.seed);
    let mut config = CesConfig::new(network).with_restart(!args.no_restart);
    config.iterations = args.iterations;
    config.lambda = args.lambda;
    config.seed = args.seed;
    config.attraction_enabled = args.attraction;
    if let Some(e) = args.inner_epochs {
        config.inner_epochs = e;
    }
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let (trace, failure) = match ces_search(&data.train, &data.test, &initial, &config) {
        Ok(trace) => (trace, None),
        Err(aborted) => (aborted.trace, Some(aborted.cause)),
    };
    if !trace.is_empty() {
        trace.write_to(&args.out)?;
    }
    if let Some(cause) = failure {
        return Err(cause);
    }
    let best = trace.best_far.as_ref().expect("non-empty trace");
    let summary = json!({
        "iterations": trace.len(),
        "initial_far": trace.records[0].far,
        "best_far": best.value,
        "best_far_iteration": best.iteration,
    });
    writeln!(out, "{summary}").map_err(|e| Error::io("<stdout>", e))
}

fn report(args: ReportArgs, out: &mut dyn Write) -> Result<()> {
    let data = args.data.load()?;
    let c = data.num_classes();
    let mut config = ExperimentConfig::new(args.algo.clone(), args.n_values.clone(), args.data.source());
    if config.n_values.is_empty() {
        config.n_values = vec![c];
    }
    config.samples_per_n = args.samples;
    config.seed = args.seed;
    config.network = args.net.config(data.input_dim(), c, Loss::CrossEntropy, args.seed);
    config.one_hot_distance_loss = args.net.distance_loss.into();
    if let Some(p) = &args.encoding {
        config.loaded_encoding = Some(load_encoding_set(p)?);
    }
    let table = run_embedded(&data, &config)?;
    let text = emit_report(&table, args.emit)?;
    match &args.out {
        Some(path) => write_file(path, &text),
        None => out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e)),
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Train(a) => train(a, out),
        Command::Evaluate(a) => evaluate(a, out),
        Command::SampleEncodings(a) => sample_encodings(a, out),
        Command::Topology(a) => topology(a, out),
        Command::Ces(a) => ces(a, out),
        Command::Report(a) => report(a, out),
    }
}

/// Parses `args` (including the program name), runs the command against
/// stdout and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let stdout = std::io::stdout();
    match execute(cli, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
