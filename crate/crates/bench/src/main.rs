use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vecmd_bench::{
    emit_report, generate_system, parse_kernel_list, run_bench_with, BenchConfig, BenchError,
    Format, KernelKind, RunOptions, SystemDocument, WallClock,
};

/// Scalar versus vectorized kernel benchmark.
#[derive(Parser)]
#[command(name = "bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify and time the selected kernels.
    Run(RunArgs),
    /// Verify scalar/vectorized agreement without timing.
    Verify(RunArgs),
    /// Write the generated system as a JSON document.
    Gen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated subset of lj,ewald_real,halgren,tmatxb,perm_field,image,neighbor_build.
    #[arg(long)]
    kernels: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long, default_value = "human")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Real lane width override (1, 2, 4 or 8).
    #[arg(long)]
    lanes: Option<usize>,
    /// Run this many independent systems concurrently.
    #[arg(long)]
    shards: Option<usize>,
    /// Time the scalar path only.
    #[arg(long)]
    scalar_only: bool,
    #[arg(long, hide = true)]
    inject_mismatch: Option<String>,
}

fn load_config(path: &Path, n: Option<usize>, seed: Option<u64>) -> Result<BenchConfig, BenchError> {
    let mut c = BenchConfig::load(path)?;
    if let Some(n) = n {
        c.n_sites = n;
    }
    if let Some(s) = seed {
        c.seed = s;
    }
    Ok(c)
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), BenchError> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(args: RunArgs, skip_timing: bool) -> Result<bool, BenchError> {
    let mut c = load_config(&args.config, args.n, args.seed)?;
    if let Some(k) = &args.kernels {
        c.kernels = parse_kernel_list(k)?;
    }
    if let Some(r) = args.repeats {
        c.repeats = r;
    }
    if let Some(w) = args.warmup {
        c.warmup = w;
    }
    if args.lanes.is_some() {
        c.lanes = args.lanes;
    }
    if let Some(s) = args.shards {
        c.shards = s;
    }
    c.scalar_only |= args.scalar_only;
    let format: Format = args.format.parse()?;
    let inject_mismatch = args
        .inject_mismatch
        .as_deref()
        .map(str::parse::<KernelKind>)
        .transpose()?;
    c.validate()?;
    let report = run_bench_with(&c, WallClock, RunOptions { skip_timing, inject_mismatch })?;
    write_output(args.out.as_deref(), &emit_report(&report, format)?)?;
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(a) => run(a, false),
        Command::Verify(a) => run(a, true),
        Command::Gen { config, out, n, seed } => (|| {
            let c = load_config(&config, n, seed)?;
            c.validate()?;
            let system = generate_system(&c)?;
            let doc = SystemDocument::new(&c, &system);
            std::fs::write(&out, serde_json::to_string(&doc)? + "\n")?;
            Ok(true)
        })(),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("bench: verification failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("bench: {e}");
            ExitCode::from(1)
        }
    }
}
