//! `fincat train | predict | evaluate | serve`.

use std::ffi::OsString;
use std::fmt;
use std::io::{self, Read};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use fincat_core::classifier::{self, load_model, save_model, ClassWeights, TrainConfig};
use fincat_core::evaluation::{self, f1_scores, featurize, load_dataset, save_dataset, RecordError};
use fincat_core::pipeline::ADHOC_RECORD_ID;
use fincat_core::synthetic;
use fincat_core::{AnalysisResult, Analyzer, EmbeddingProvider, Error, LogisticModel};

use crate::provider::{DynProvider, EmbedderArgs};
use crate::server::{self, AnalyzeResponse};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fincat", version, about = "Tell in-claim numerals from out-of-claim ones")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a logistic regression on a JSONL dataset
    Train(TrainArgs),
    /// Label every numeral in a text
    Predict(PredictArgs),
    /// Score a model against a labeled JSONL dataset
    Evaluate(EvaluateArgs),
    /// Run the HTTP API
    Serve(ServeArgs),
    /// Write a synthetic keyword-rule dataset as JSONL
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    embedder: EmbedderArgs,
    /// L2 penalty on the weights
    #[arg(long)]
    l2: Option<f64>,
    /// Gradient step; chosen from the data when omitted
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Weight classes inversely to their frequency
    #[arg(long)]
    balanced: bool,
    #[arg(long, default_value = "model.json")]
    out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["text", "input"]))]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    embedder: EmbedderArgs,
    #[arg(long)]
    text: Option<String>,
    /// Read the text from a file, or stdin for "-"
    #[arg(long)]
    input: Option<PathBuf>,
    /// Record id used to look up cached embeddings
    #[arg(long, default_value = ADHOC_RECORD_ID)]
    record_id: String,
    /// Print the HTTP response body instead of a table
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    embedder: EmbedderArgs,
    /// Also write the report as JSON
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    embedder: EmbedderArgs,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = 8080)]
    port: u16,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Data(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

/// Parse `argv` (program name first), run, and return the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
        }
    };
    let outcome = match cli.command {
        Command::Train(args) => train(args),
        Command::Predict(args) => predict(args),
        Command::Evaluate(args) => evaluate(args),
        Command::Serve(args) => serve(args),
        Command::Synth(args) => synth(args),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("fincat: {e}");
            e.exit_code()
        }
    }
}

fn warn_skipped(skipped: &[RecordError]) {
    for s in skipped {
        eprintln!("skipped {s}");
    }
}

fn train(args: TrainArgs) -> Result<(), CliError> {
    let records = load_dataset(&args.data)?;
    if records.is_empty() {
        return Err(Error::InvalidArgument(format!("{} holds no records", args.data.display())).into());
    }
    let provider = args.embedder.build(None)?;
    let data = featurize(&records, &provider, args.embedder.k)?;
    warn_skipped(&data.skipped);

    let defaults = TrainConfig::default();
    let config = TrainConfig {
        l2_lambda: args.l2.unwrap_or(defaults.l2_lambda),
        learning_rate: args.lr,
        max_epochs: args.epochs.unwrap_or(defaults.max_epochs),
        seed: args.embedder.seed.unwrap_or(0),
        class_weights: if args.balanced {
            ClassWeights::balanced(&data.labels)
        } else {
            None
        },
        ..defaults
    };
    let model = classifier::train(&data.features, &data.labels, provider.id(), &config)?;
    save_model(&model, &args.out)?;

    let predictions = data
        .features
        .iter()
        .map(|x| model.classify(x).map(|p| p.label))
        .collect::<Result<Vec<_>, _>>()?;
    let fit = f1_scores(&predictions, &data.labels)?;
    let meta = &model.train_meta;
    println!(
        "trained on {} records ({} skipped) with {}",
        data.features.len(),
        data.skipped.len(),
        model.embedder
    );
    println!(
        "epochs {}  final loss {:.6}  step {:.4}",
        meta.epochs_run, meta.final_loss, meta.learning_rate
    );
    println!("train F1 micro {:.4}  macro {:.4}", fit.f1_micro, fit.f1_macro);
    println!("model {} written to {}", model.fingerprint(), args.out.display());
    Ok(())
}

fn read_text(args: &PredictArgs) -> Result<String, CliError> {
    if let Some(text) = &args.text {
        return Ok(text.clone());
    }
    let path = args.input.as_deref().expect("clap requires text or input");
    let mut text = String::new();
    let read = if path == Path::new("-") {
        io::stdin().read_to_string(&mut text)
    } else {
        std::fs::File::open(path).and_then(|mut f| f.read_to_string(&mut text))
    };
    read.map_err(|e| Error::io(path, e))?;
    Ok(text)
}

fn load_analyzer(model: &Path, embedder: &EmbedderArgs) -> Result<Analyzer<DynProvider>, CliError> {
    let model: LogisticModel = load_model(model)?;
    let provider = embedder.build(Some(&model.embedder))?;
    Ok(Analyzer::new(model, provider, embedder.k)?)
}

/// Human-readable table, probabilities to four places.
pub fn render_table(result: &AnalysisResult) -> String {
    let width = result
        .rows
        .iter()
        .map(|r| r.numeral.chars().count())
        .chain(["numeral".len()])
        .max()
        .unwrap_or(0);
    let mut out = format!("{:<width$}  {:<12}  probability\n", "numeral", "label");
    for r in &result.rows {
        out.push_str(&format!(
            "{:<width$}  {:<12}  {:.4}\n",
            r.numeral,
            r.label.to_string(),
            r.probability
        ));
    }
    out
}

fn predict(args: PredictArgs) -> Result<(), CliError> {
    let text = read_text(&args)?;
    let analyzer = load_analyzer(&args.model, &args.embedder)?;
    let result = analyzer.analyze_record(&args.record_id, &text)?;
    if args.json {
        let body = AnalyzeResponse::new(&result, result.elapsed_ms());
        println!("{}", serde_json::to_string(&body).expect("response serializes"));
    } else {
        print!("{}", render_table(&result));
        eprintln!(
            "{} numeral(s) in {} ms, model {}",
            result.rows.len(),
            result.elapsed_ms(),
            result.model_fingerprint
        );
    }
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let provider = args.embedder.build(Some(&model.embedder))?;
    let records = load_dataset(&args.data)?;
    let outcome = evaluation::evaluate(&model, &provider, &records, args.embedder.k)?;
    warn_skipped(&outcome.skipped);
    println!("{}", outcome.report);
    if !outcome.skipped.is_empty() {
        println!("skipped           {:>8}", outcome.skipped.len());
    }
    if let Some(path) = &args.report {
        let mut json = serde_json::to_string_pretty(&outcome.report).expect("report serializes");
        json.push('\n');
        std::fs::write(path, json).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn serve(args: ServeArgs) -> Result<(), CliError> {
    let analyzer = Arc::new(load_analyzer(&args.model, &args.embedder)?);
    let address = format!("{}:{}", args.host, args.port);
    let io = |source| Error::Io {
        path: address.clone(),
        source,
    };
    let runtime = tokio::runtime::Runtime::new().map_err(io)?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((args.host.as_str(), args.port))
            .await
            .map_err(io)?;
        let addr: SocketAddr = listener.local_addr().map_err(io)?;
        eprintln!("serving model {} on http://{addr}", analyzer.fingerprint());
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        server::serve(listener, analyzer, shutdown).await.map_err(io)?;
        Ok(())
    })
}

fn synth(args: SynthArgs) -> Result<(), CliError> {
    save_dataset(&args.out, &synthetic::generate(args.n, args.seed))?;
    println!("{} records written to {}", args.n, args.out.display());
    Ok(())
}
