use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context};
use bankcf_cli::{router, Registry, ServeOptions};
use bankcf_core::cfgen::CfMethod;
use bankcf_core::pipeline::explain::{cmd_explain, BankInput, ExplainOptions, ExplanationStatus};
use bankcf_core::pipeline::{cmd_benchmark, cmd_train, RunConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Bank failure models and counterfactual explanations.
#[derive(Debug, Parser)]
#[command(name = "bankcf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit one model and report accuracy and F1 on both test partitions.
    Train(RunArgs),
    /// Run every model × strategy × method cell and write the desiderata grid.
    Benchmark(RunArgs),
    /// Explain one bank record with a trained model.
    Explain(ExplainArgs),
    /// Serve trained models over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML configuration file; `BANKCF_*` variables override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Model kind (DecisionTree, RandomForest, ExtraTrees).
    #[arg(long)]
    model: Option<String>,
    /// Predictor group (I, II, III).
    #[arg(long)]
    group: Option<String>,
    /// Balancing strategy (Original, Undersampling, Oversampling, SMOTE, CostSensitive).
    #[arg(long)]
    strategy: Option<String>,
    /// Counterfactual methods, comma separated.
    #[arg(long)]
    method: Option<String>,
}

impl RunArgs {
    fn resolve(&self, benchmark: bool) -> anyhow::Result<RunConfig> {
        let mut cfg = RunConfig::load(self.config.as_deref())?;
        if let Some(s) = self.seed {
            cfg.seed = Some(s);
        }
        if let Some(o) = &self.out {
            cfg.out_dir = Some(o.clone());
        }
        if let Some(g) = &self.group {
            cfg.model.group = g.parse()?;
        }
        if let Some(m) = &self.model {
            let kind = m.parse()?;
            cfg.model.kind = kind;
            if benchmark {
                cfg.benchmark.models = vec![kind];
            }
        }
        if let Some(s) = &self.strategy {
            let tag = s.parse()?;
            cfg.model.strategy = tag;
            if benchmark {
                cfg.benchmark.strategies = vec![tag];
            }
        }
        if let Some(m) = &self.method {
            cfg.counterfactuals.methods = m.split(',').map(str::parse).collect::<Result<_, _>>()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
struct ExplainArgs {
    /// Model directory (from `train`) or a model JSON file.
    #[arg(long)]
    model: PathBuf,
    /// Reference rows; defaults to `reference.csv` beside the model.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Bank record as JSON: `{"bank_id", "report_date", "indicators": {...}}`. Reads stdin when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value = "NICE")]
    method: String,
    /// Features the explanation may not change, comma separated.
    #[arg(long, value_delimiter = ',')]
    frozen: Vec<String>,
    #[arg(long, default_value_t = 5)]
    max: usize,
    /// Seed for the MOC search.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "text")]
    format: OutputFormat,
    /// Also write the canonical JSON document here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// Model directory or directory of model directories; repeatable.
    #[arg(long = "model", required = true)]
    models: Vec<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Browser origin allowed by CORS (any when omitted).
    #[arg(long)]
    origin: Option<String>,
    #[arg(long, default_value_t = 5)]
    max: usize,
    /// Per-request search budget in seconds.
    #[arg(long, default_value_t = 10)]
    budget_secs: u64,
}

fn model_paths(model: &Path, reference: Option<&Path>) -> (PathBuf, PathBuf) {
    let model_file = if model.is_dir() { model.join("model.json") } else { model.to_path_buf() };
    let reference = reference
        .map(Path::to_path_buf)
        .unwrap_or_else(|| model_file.with_file_name("reference.csv"));
    (model_file, reference)
}

fn explain(args: &ExplainArgs) -> anyhow::Result<ExitCode> {
    let text = match &args.input {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => std::io::read_to_string(std::io::stdin())?,
    };
    let input: BankInput = serde_json::from_str(&text).context("parsing the bank record")?;
    let mut opts = ExplainOptions::new(args.method.parse::<CfMethod>()?);
    opts.frozen = args.frozen.iter().cloned().collect();
    opts.max_counterfactuals = args.max;
    if let Some(s) = args.seed {
        opts.moc.seed = s;
    }
    let (model, reference) = model_paths(&args.model, args.reference.as_deref());
    let doc = cmd_explain(&model, &reference, input, &opts)?;
    let json = doc.to_json()?;
    if let Some(p) = &args.out {
        std::fs::write(p, &json).with_context(|| format!("writing {}", p.display()))?;
    }
    match args.format {
        OutputFormat::Text => print!("{}", doc.render_text()),
        OutputFormat::Json => println!("{json}"),
    }
    Ok(if doc.status == ExplanationStatus::NoCounterfactual {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn serve(args: &ServeArgs) -> anyhow::Result<()> {
    let registry = Registry::load(&args.models)?;
    if registry.is_empty() {
        bail!("no models to serve");
    }
    for b in registry.iter() {
        log::info!("serving model `{}` ({})", b.id, b.model.kind);
    }
    let opts = ServeOptions {
        max_counterfactuals: args.max,
        time_budget: Duration::from_secs(args.budget_secs),
        allowed_origin: args.origin.clone(),
    };
    let app = router(registry, opts)?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(args.addr).await?;
        log::info!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, app).await?;
        Ok(())
    })
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Train(a) => {
            let out = cmd_train(&a.resolve(false)?)?;
            for (part, r) in &out.bundle.classification {
                println!("{part:<14} accuracy {:.6}  f1 {:.6}  (n = {})", r.accuracy, r.f1, r.n);
            }
            for f in &out.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Benchmark(a) => {
            let out = cmd_benchmark(&a.resolve(true)?)?;
            let grid = out.grid();
            let empty = grid.cells.values().filter(|c| c.is_empty()).count();
            println!("{} cells, {empty} empty", grid.cells.len());
            for f in &out.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Explain(a) => return explain(&a),
        Command::Serve(a) => serve(&a)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
