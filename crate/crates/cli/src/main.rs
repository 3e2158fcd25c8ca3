//! `driftbench` command line: stream generation, experiment runs, analysis,
//! reporting and single-detector traces.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use driftbench::detectors::{error_signal, Detector, DetectorKind, DetectorOptions, DriftDetector, Status};
use driftbench::harness::{self, ExperimentConfig, RunOptions};
use driftbench::par::{self, Execution};
use driftbench::streamgen::{generate_stream, write_stream_csv, DriftType, Generator, StreamSpec};

#[derive(Parser)]
#[command(name = "driftbench", version, about = "Concept drift detector accuracy and energy benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic drift streams as CSV files with metadata sidecars.
    Generate {
        /// Generators to emit (default: all).
        #[arg(long, value_delimiter = ',')]
        generators: Vec<Generator>,
        /// Drift types to emit (default: both).
        #[arg(long, value_delimiter = ',')]
        drift_types: Vec<DriftType>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Streams per combination; stream r uses seed XOR r.
        #[arg(long, default_value_t = 1)]
        repetitions: u64,
        #[arg(long, default_value = "streams")]
        out_dir: PathBuf,
        /// Generate one stream at a time.
        #[arg(long)]
        sequential: bool,
    },
    /// Run the experiment described by a config file or preset.
    Run {
        /// TOML experiment config.
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Built-in design: full, reduced or smoke.
        #[arg(long)]
        preset: Option<String>,
        /// Overrides the config's output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Continue an interrupted run in the output directory.
        #[arg(long)]
        resume: bool,
        /// Stop after this many new rows.
        #[arg(long)]
        stop_after: Option<usize>,
    },
    /// Compute statistics tables from a results CSV.
    Analyze {
        results: PathBuf,
        #[arg(long, default_value = "tables")]
        out_dir: PathBuf,
        #[arg(long)]
        sequential: bool,
    },
    /// Render analysis tables as markdown.
    Report {
        tables_dir: PathBuf,
        /// Output file; standard output when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Feed `predicted,actual` rows through a detector and print alarm indices.
    Detect {
        #[arg(long)]
        detector: DetectorKind,
        /// CSV with a `predicted,actual` header; `-` reads standard input.
        input: PathBuf,
        #[arg(long, default_value_t = 42)]
        kswin_seed: u64,
        /// Also print warning indices, prefixed with `w`.
        #[arg(long)]
        warnings: bool,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Generate {
            generators,
            drift_types,
            seed,
            repetitions,
            out_dir,
            sequential,
        } => generate(generators, drift_types, seed, repetitions, &out_dir, exec(sequential)),
        Command::Run {
            config,
            preset,
            output_dir,
            resume,
            stop_after,
        } => run(config, preset, output_dir, RunOptions { resume, stop_after }),
        Command::Analyze {
            results,
            out_dir,
            sequential,
        } => analyze(&results, &out_dir, exec(sequential)),
        Command::Report { tables_dir, output } => report(&tables_dir, output.as_deref()),
        Command::Detect {
            detector,
            input,
            kswin_seed,
            warnings,
        } => detect(detector, &input, kswin_seed, warnings),
    }
}

fn exec(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn generate(
    generators: Vec<Generator>,
    drift_types: Vec<DriftType>,
    seed: u64,
    repetitions: u64,
    out_dir: &Path,
    exec: Execution,
) -> Result<()> {
    let generators = if generators.is_empty() { Generator::ALL.to_vec() } else { generators };
    let drift_types = if drift_types.is_empty() { DriftType::ALL.to_vec() } else { drift_types };
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut specs = Vec::new();
    for &g in &generators {
        for &dt in &drift_types {
            for r in 0..repetitions {
                specs.push(StreamSpec::new(g, dt, seed ^ r));
            }
        }
    }
    let written = par::map(exec, &specs, |spec| -> Result<PathBuf> {
        let path = out_dir.join(format!("{}_{}_seed{}.csv", spec.generator, spec.drift_type, spec.seed));
        let stream = generate_stream(spec)?;
        write_stream_csv(&stream, &path)?;
        Ok(path)
    });
    for p in written {
        println!("{}", p?.display());
    }
    Ok(())
}

fn run(config: Option<PathBuf>, preset: Option<String>, output_dir: Option<PathBuf>, opts: RunOptions) -> Result<()> {
    let mut cfg = match (config, preset) {
        (Some(path), _) => ExperimentConfig::load(&path).with_context(|| format!("loading {}", path.display()))?,
        (None, Some(name)) => match ExperimentConfig::preset(&name) {
            Some(c) => c,
            None => bail!("unknown preset `{name}` (expected full, reduced or smoke)"),
        },
        (None, None) => bail!("pass --config FILE or --preset NAME"),
    };
    if let Some(dir) = output_dir {
        cfg.output_dir = dir;
    }
    cfg.energy = cfg.energy.with_env_overrides()?;
    cfg.validate()?;
    let summary = harness::run_experiment(&cfg, opts)?;
    println!(
        "{} rows written, {} resumed, {}/{} complete; provider {}; guard trips {}; warnings {}",
        summary.written,
        summary.skipped,
        summary.skipped + summary.written,
        summary.total_runs,
        summary.provider,
        summary.guard_trips,
        summary.warnings
    );
    println!("{}", summary.results_path.display());
    if summary.guard_trips > 0 {
        bail!("energy meter occupancy guard tripped {} times", summary.guard_trips);
    }
    Ok(())
}

fn analyze(results: &Path, out_dir: &Path, exec: Execution) -> Result<()> {
    let rows = harness::read_results(results)?;
    let report = harness::analyze_with(&rows, exec);
    harness::write_tables(&report, out_dir)?;
    println!("analyzed {} rows into {}", rows.len(), out_dir.display());
    Ok(())
}

fn report(tables_dir: &Path, output: Option<&Path>) -> Result<()> {
    let report = harness::read_tables(tables_dir)?;
    let md = harness::render_markdown(&report);
    match output {
        Some(p) => std::fs::write(p, md).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(md.as_bytes())?,
    }
    Ok(())
}

fn detect(kind: DetectorKind, input: &Path, kswin_seed: u64, warnings: bool) -> Result<()> {
    let source: Box<dyn std::io::Read> = if input == Path::new("-") {
        Box::new(std::io::stdin())
    } else {
        Box::new(std::fs::File::open(input).with_context(|| format!("opening {}", input.display()))?)
    };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("missing `{name}` column"))
    };
    let (pi, ai) = (col("predicted")?, col("actual")?);
    let mut detector = Detector::with_defaults(kind, DetectorOptions { kswin_seed });
    let mut out = std::io::BufWriter::new(std::io::stdout().lock());
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let parse = |k: usize| -> Result<u8> {
            let v: u8 = record[k]
                .parse()
                .with_context(|| format!("row {i}: `{}` is not 0 or 1", &record[k]))?;
            if v > 1 {
                bail!("row {i}: `{v}` is not 0 or 1");
            }
            Ok(v)
        };
        match detector.update(error_signal(parse(pi)?, parse(ai)?)) {
            Status::Drift => writeln!(out, "{i}")?,
            Status::Warning if warnings => writeln!(out, "w{i}")?,
            _ => {}
        }
    }
    Ok(())
}
