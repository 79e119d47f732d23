use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use hevote_core::bench::{self, BackendKind, BenchConfig, Method};
use hevote_core::ensemble::{self, SignSettings, VoteConfig};
use hevote_core::sign::{self, SignConfig};
use hevote_core::BackendParams;

/// Encrypted aggregate-then-argmax voting: certification, voting and
/// argmax benchmarks on a simulated CKKS backend.
#[derive(Parser)]
#[command(name = "hevote", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Benchmark the logarithmic argmax against the pairwise baseline.
    Bench(BenchArgs),
    /// Vote over a logit file and write one JSON result per example.
    Vote(VoteArgs),
    /// Certify the sign approximation on a dense grid.
    #[command(alias = "certify-sign")]
    Certify(CertifyArgs),
}

/// Overrides for the sign approximation used by `bench` and `vote`.
#[derive(Args)]
struct SignArgs {
    #[arg(long)]
    alpha: Option<u32>,
    #[arg(long = "df")]
    d_f: Option<u32>,
    #[arg(long = "dg")]
    d_g: Option<u32>,
    #[arg(long)]
    degree: Option<usize>,
}

impl SignArgs {
    fn apply(&self, mut base: SignSettings) -> SignSettings {
        base.alpha = self.alpha.unwrap_or(base.alpha);
        base.d_f = self.d_f.unwrap_or(base.d_f);
        base.d_g = self.d_g.unwrap_or(base.d_g);
        base.degree = self.degree.unwrap_or(base.degree);
        base
    }
}

#[derive(Args)]
struct BenchArgs {
    /// Window sizes, powers of two.
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "secpe,phoenix")]
    method: Vec<Method>,
    #[arg(long, default_value = "sim")]
    backend: BackendKind,
    #[arg(long)]
    seed: u64,
    /// Backend parameter file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record measured wall time instead of writing 0.
    #[arg(long)]
    wall_time: bool,
    #[command(flatten)]
    sign: SignArgs,
}

#[derive(Args)]
struct VoteArgs {
    #[arg(long)]
    logits: PathBuf,
    /// Vote configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    backend: Option<BackendKind>,
    /// JSON-lines destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the cost breakdown to this file.
    #[arg(long)]
    cost_out: Option<PathBuf>,
    #[command(flatten)]
    sign: SignArgs,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long, default_value_t = 12)]
    alpha: u32,
    #[arg(long = "df", default_value_t = 2)]
    d_f: u32,
    #[arg(long = "dg", default_value_t = 2)]
    d_g: u32,
    #[arg(long, default_value_t = 1_000_000)]
    grid: usize,
    #[arg(long, default_value_t = 9)]
    degree: usize,
}

enum Failure {
    Validation(String),
    Certification,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Validation(e.to_string())
    }
}

fn output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run_bench(args: BenchArgs) -> Result<(), Failure> {
    let params = match &args.config {
        Some(p) => BackendParams::load(p)?,
        None => BackendParams::default(),
    };
    let sign = args.sign.apply(SignSettings::default()).build()?;
    let cfg = BenchConfig {
        dims: args.dims,
        methods: args.method,
        backend: args.backend,
        params,
        seed: args.seed,
        sign,
    };
    let records = bench::run_bench(&cfg)?;
    let mut w = output(args.out.as_deref())?;
    bench::write_csv(&mut w, &records, args.wall_time)?;
    w.flush()?;
    Ok(())
}

fn run_vote(args: VoteArgs) -> Result<(), Failure> {
    let mut cfg = match &args.config {
        Some(p) => VoteConfig::load(p)?,
        None => VoteConfig::default(),
    };
    cfg.sign = args.sign.apply(cfg.sign);
    if let Some(kind) = args.backend {
        cfg.backend = kind;
    }
    let sign = cfg.sign.build()?;
    let batch = ensemble::load_logits(&args.logits)?;
    let backend = cfg.backend.build(cfg.params.clone())?;
    let outcome = ensemble::vote(backend.as_ref(), &batch, &sign, cfg.options())?;

    let mut w = output(args.out.as_deref())?;
    for r in &outcome.results {
        serde_json::to_writer(&mut w, r)?;
        writeln!(w)?;
    }
    w.flush()?;
    let breakdown = serde_json::to_string(&outcome.breakdown)?;
    if let Some(p) = &args.cost_out {
        std::fs::write(p, format!("{breakdown}\n"))?;
    }
    if args.out.is_some() {
        println!("{breakdown}");
    } else {
        eprintln!("{breakdown}");
    }
    Ok(())
}

fn run_certify(args: CertifyArgs) -> Result<(), Failure> {
    let config = SignConfig::new(args.alpha, args.d_f, args.d_g, args.degree)?;
    let cert = sign::certify(&config, args.grid)?;
    println!("{}", serde_json::to_string(&cert)?);
    if cert.passed {
        Ok(())
    } else {
        Err(Failure::Certification)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Bench(a) => run_bench(a),
        Command::Vote(a) => run_vote(a),
        Command::Certify(a) => run_certify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Certification) => {
            eprintln!("error: certificate did not pass");
            ExitCode::from(2)
        }
    }
}
