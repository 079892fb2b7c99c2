//! `simulate`: spectrum and q-q experiments, validation suites and plots.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use torus_coalescent::cannings::{moment_diagnostics, moments_csv, OffspringLaw};
use torus_coalescent::rng::stream;
use torus_coalescent::experiments::{cmd_qq, cmd_spectrum, ExperimentConfig, Layout};
use torus_coalescent::plot::{parse_qq_csv, parse_spectrum_csv, qq_svg, spectrum_svg};
use torus_coalescent::validation::{all_passed, run_all, Suite, Validator};
use torus_coalescent::Error;

#[derive(Parser)]
#[command(name = "simulate", version, about = "Spatial Lambda-coalescents on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean allele frequency spectra (spectrum.csv, summary.json).
    Spectrum(RunArgs),
    /// Rescaled tree length quantiles (qq.csv).
    Qq(RunArgs),
    /// Run validation suites and print one line per check.
    Validate(ValidateArgs),
    /// Render spectrum.csv / qq.csv files as SVG.
    Plot(PlotArgs),
    /// Offspring moment ratios of a Cannings law (moments.csv).
    Cannings(CanningsArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Odd side length L' = 2L + 1.
    #[arg(long)]
    side_length: Option<u32>,
    /// grid3x3-far, grid3x3-close, same-site[:N] or sites:(x,y);(x,y)...
    #[arg(long)]
    layout: Option<String>,
    /// Comma-separated: kingman, bs, crw, beta:A:B[:M], pointmass:P[:M];
    /// `reference` is the non-spatial column in q-q runs.
    #[arg(long, value_delimiter = ',')]
    mechanism: Vec<String>,
    #[arg(long)]
    replicates: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Per-line mutation rate; default pi / s_L.
    #[arg(long)]
    mutation_rate: Option<f64>,
    /// Hybrid handoff distance.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Also dump the event log of replicate 0 per mechanism.
    #[arg(long)]
    events: bool,
    /// Also dump every replicate's spectrum as JSON lines.
    #[arg(long)]
    spectra: bool,
}

#[derive(Args)]
struct ValidateArgs {
    /// exact, statistical or cannings; all when omitted.
    #[arg(long, value_delimiter = ',')]
    suite: Vec<String>,
    /// Divide replicate counts by this; statistical misses become flags.
    #[arg(long, default_value_t = 1)]
    reduce: u64,
    #[arg(long, default_value_t = 20261019)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct PlotArgs {
    /// CSV files written by `spectrum` or `qq`.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Output directory; defaults to each input's directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CanningsArgs {
    /// wright-fisher, moran or skewed:PSI:EPS.
    #[arg(long, default_value = "wright-fisher")]
    law: String,
    /// Colony sizes N, comma-separated.
    #[arg(long, value_delimiter = ',', default_values_t = [10, 100])]
    sizes: Vec<usize>,
    /// Largest factorial moment order.
    #[arg(long, default_value_t = 3)]
    k_max: u32,
    #[arg(long, default_value_t = 100_000)]
    draws: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl RunArgs {
    fn config(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                ExperimentConfig::from_json(&text)?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.side_length {
            cfg.side_length = v;
        }
        if let Some(v) = &self.layout {
            cfg.layout = v.parse::<Layout>()?;
        }
        if !self.mechanism.is_empty() {
            cfg.mechanisms = self.mechanism.clone();
        }
        if let Some(v) = self.replicates {
            cfg.replicates = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if self.mutation_rate.is_some() {
            cfg.mutation_rate = self.mutation_rate;
        }
        if self.threshold.is_some() {
            cfg.threshold = self.threshold;
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if self.workers.is_some() {
            cfg.workers = self.workers;
        }
        cfg.emit_events |= self.events;
        cfg.emit_spectra |= self.spectra;
        Ok(cfg)
    }
}

fn plot(args: &PlotArgs) -> anyhow::Result<()> {
    for input in &args.inputs {
        let text = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
        let title = input.file_stem().and_then(|s| s.to_str()).unwrap_or("plot").to_string();
        let header = text.lines().find(|l| !l.trim_start().starts_with('#')).unwrap_or("");
        let svg = if header.starts_with("quantile_index") {
            qq_svg(&parse_qq_csv(&text).with_context(|| input.display().to_string())?, &title)?
        } else {
            spectrum_svg(&parse_spectrum_csv(&text).with_context(|| input.display().to_string())?, &title)?
        };
        let dir = match &args.out {
            Some(d) => d.clone(),
            None => input.parent().map(PathBuf::from).unwrap_or_default(),
        };
        std::fs::create_dir_all(&dir)?;
        let path = dir.join(format!("{title}.svg"));
        std::fs::write(&path, svg)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Spectrum(args) => {
            for path in cmd_spectrum(&args.config()?)? {
                println!("{}", path.display());
            }
        }
        Command::Qq(args) => {
            for path in cmd_qq(&args.config()?)? {
                println!("{}", path.display());
            }
        }
        Command::Validate(args) => {
            let suites = if args.suite.is_empty() {
                vec![Suite::Exact, Suite::Statistical, Suite::Cannings]
            } else {
                args.suite.iter().map(|s| s.parse()).collect::<Result<Vec<Suite>, _>>()?
            };
            let validator = Validator::new(args.reduce, args.workers, args.seed);
            let results = run_all(&validator, &suites)?;
            for r in &results {
                println!("{r}");
            }
            if !all_passed(&results) {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Plot(args) => plot(&args)?,
        Command::Cannings(args) => {
            let law: OffspringLaw = args.law.parse()?;
            let mut rng = stream(args.seed, 0, "moments");
            let rows = moment_diagnostics(law, &args.sizes, args.k_max, args.draws, &mut rng)?;
            std::fs::create_dir_all(&args.out)?;
            let path = args.out.join("moments.csv");
            std::fs::write(&path, moments_csv(&rows))?;
            println!("{}", path.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            let config = matches!(
                err.downcast_ref::<Error>(),
                Some(Error::Config { .. } | Error::InvalidArgument(_))
            );
            ExitCode::from(if config { 2 } else { 1 })
        }
    }
}
