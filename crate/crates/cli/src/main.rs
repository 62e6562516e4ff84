//! `grg`: batch driver for generalized random graph experiments.
//!
//! Exit codes: 0 on success, 1 for usage or configuration errors, 2 for
//! numerical or I/O failures.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use grg_core::graph::{sample_graph_fast_with, sample_graph_naive_with, SampleOptions, SamplerKind};
use grg_core::limits::{run_audit, run_experiment, ExperimentConfig, Theorem};
use grg_core::report::{self, StageTiming, SCHEMA_VERSION};
use grg_core::weights::{lemma1_ratio_check, sample_weights, WeightModel};
use grg_core::Error;

const SEED_ENV: &str = "GRG_SEED";

#[derive(Debug, Parser)]
#[command(name = "grg", version, about = "Generalized random graph experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample one graph and write a JSON summary.
    Sample(SampleArgs),
    /// Run a T1, T2 or LLN experiment and write result.csv, summary.json and figures.
    Experiment(RunArgs),
    /// Evaluate the remainder terms across the n grid.
    Audit(RunArgs),
    /// Tabulate truncated moments against their asymptotic forms.
    Lemma1(Lemma1Args),
    /// Print the verdicts stored in an output directory.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Seed; takes precedence over GRG_SEED and the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Debug, Args)]
struct SampleArgs {
    /// Weight law, e.g. `pareto:alpha=1.5,xm=1` or `exponential:rate=1`.
    #[arg(long)]
    model: WeightModel,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value = "fast")]
    sampler: SamplerKind,
    /// Summary JSON path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the edge list, one `i j` pair per line.
    #[arg(long)]
    edges: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the sampler named in the config.
    #[arg(long)]
    sampler: Option<SamplerKind>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Lemma1Args {
    #[arg(long, default_value = "pareto:alpha=1.5,xm=1")]
    model: WeightModel,
    /// Comma-separated truncation points.
    #[arg(long, value_delimiter = ',', default_value = "1e2,1e3,1e4,1e5,1e6")]
    x: Vec<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Directory written by `experiment`, `audit` or `lemma1`.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn exit_code(err: &Error) -> u8 {
    if err.is_numerical() {
        2
    } else {
        1
    }
}

/// Seed precedence: flag, then environment, then config.
fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> Result<Option<u64>, Error> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{SEED_ENV}={v:?} is not a 64-bit unsigned integer"))),
        Err(_) => Ok(config),
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool, Error> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))
}

fn load(args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = report::load_config(&args.config)?;
    cfg.master_seed = resolve_seed(args.common.seed, Some(cfg.master_seed))?.unwrap_or(cfg.master_seed);
    if let Some(s) = args.sampler {
        cfg.sampler = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn sample(args: SampleArgs) -> Result<(), Error> {
    let seed = resolve_seed(args.common.seed, None)?.unwrap_or(0);
    let started = Instant::now();
    let weights = sample_weights(&args.model, args.n, seed)?;
    let opts = SampleOptions { record_edges: args.edges.is_some() };
    let edge_seed = grg_core::seed::derive_seed(seed, grg_core::seed::STREAM_EDGES, 0);
    let g = pool(args.common.threads)?.install(|| match args.sampler {
        SamplerKind::Naive => sample_graph_naive_with(&weights, edge_seed, opts),
        SamplerKind::Fast => sample_graph_fast_with(&weights, edge_seed, opts),
    })?;
    if let Some(path) = &args.edges {
        g.write_edge_list(BufWriter::new(fs::File::create(path)?))?;
    }
    let summary = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "model": args.model.to_string(),
        "n": g.n,
        "seed": seed,
        "sampler": g.sampler,
        "L_n": weights.sum_l(),
        "edge_count": g.edge_count,
        "candidates": g.candidates,
        "degrees": g.degrees,
        "seconds": started.elapsed().as_secs_f64(),
    });
    let text = serde_json::to_string_pretty(&summary)? + "\n";
    match &args.out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn experiment(args: RunArgs) -> Result<(), Error> {
    let cfg = load(&args)?;
    if cfg.theorem == Theorem::Audit {
        return Err(Error::Config("AUDIT configs run through `grg audit`".into()));
    }
    let started = Instant::now();
    let result = pool(args.common.threads)?.install(|| run_experiment(&cfg))?;
    let stages = [StageTiming { stage: "simulate".into(), seconds: started.elapsed().as_secs_f64() }];
    report::emit_report(&result, &args.out, &stages)?;
    for s in &result.per_n {
        match s.ks {
            Some(ks) => println!("n={:<8} D={:.4} p={:.4} mean={:.4} sd={:.4}", s.n, ks.d_stat, ks.p_value, s.mean, s.sd),
            None => println!("n={:<8} mean={:.5} sd={:.5}", s.n, s.mean, s.sd),
        }
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn audit(args: RunArgs) -> Result<(), Error> {
    let mut cfg = load(&args)?;
    cfg.theorem = Theorem::Audit;
    let started = Instant::now();
    let rep = pool(args.common.threads)?.install(|| run_audit(&cfg))?;
    let stages = [StageTiming { stage: "audit".into(), seconds: started.elapsed().as_secs_f64() }];
    report::emit_audit_report(&rep, &args.out, &stages)?;
    for (name, ok) in &rep.decreasing {
        println!("{name:<16} {}", if *ok { "decreasing" } else { "NOT decreasing" });
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn lemma1(args: Lemma1Args) -> Result<(), Error> {
    let rows = lemma1_ratio_check(&args.model, &args.x)?;
    report::emit_lemma1_report(&args.model, &rows, &args.out)?;
    println!("{:>12} {:>14} {:>14} {:>14}", "x", "second", "karamata", "alternative");
    for r in &rows {
        println!("{:>12e} {:>14.8} {:>14.8} {:>14.8}", r.x, r.ratio_second, r.ratio_tail_karamata, r.ratio_tail_alternative);
    }
    Ok(())
}

fn read_json(path: &Path) -> Result<serde_json::Value, Error> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn report_dir(args: ReportArgs) -> Result<(), Error> {
    let summary = args.out.join("summary.json");
    let audit = args.out.join("audit_summary.json");
    let lemma = args.out.join("lemma1_summary.json");
    if summary.exists() {
        let v = read_json(&summary)?;
        println!("theorem: {}", v["theorem"].as_str().unwrap_or("?"));
        for row in v["results"].as_array().into_iter().flatten() {
            println!(
                "n={:<8} ks_d={} ks_p={} trend={} mean={}",
                row["n"], row["ks_d"], row["ks_p"], row["trend"].as_str().unwrap_or("-"), row["mean"]
            );
        }
        println!("trend_decreasing: {}", v["trend_decreasing"]);
    } else if audit.exists() {
        let v = read_json(&audit)?;
        for (name, ok) in v["decreasing"].as_object().into_iter().flatten() {
            println!("{name:<16} decreasing={ok}");
        }
        println!("moment bounds decreasing: {}", v["moment_bounds_decreasing"]);
    } else if lemma.exists() {
        let v = read_json(&lemma)?;
        println!("ratio_second at largest x: {}", v["ratio_second_at_largest_x"]);
        println!("ratio_tail_karamata at largest x: {}", v["ratio_tail_karamata_at_largest_x"]);
        println!("alternative constant: {}", v["alternative_constant_discrepancy"]);
    } else {
        return Err(Error::Io(io::Error::new(
            io::ErrorKind::NotFound,
            format!("no summary file in {}", args.out.display()),
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Sample(a) => sample(a),
        Command::Experiment(a) => experiment(a),
        Command::Audit(a) => audit(a),
        Command::Lemma1(a) => lemma1(a),
        Command::Report(a) => report_dir(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
