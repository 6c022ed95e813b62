use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use vecm_core::ingest::build_dataset;
use vecm_core::irf::{mc_bands, McSpec, Ordering};
use vecm_core::pipeline::{
    emit_reports, run_pipeline, summary, synthetic_config, write_irf, OutputFormat, PipelineConfig,
    Verdict,
};
use vecm_core::vecm::VecmModel;
use vecm_core::Error;

#[derive(Parser)]
#[command(name = "vecm", version, about = "Unit-root, cointegration, VECM and IRF pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Svg,
    Both,
}

impl Format {
    fn formats(self) -> Vec<OutputFormat> {
        match self {
            Format::Csv => vec![OutputFormat::Csv],
            Format::Svg => vec![OutputFormat::Svg],
            Format::Both => vec![OutputFormat::Csv, OutputFormat::Svg],
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check the config and load every data file.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the full procedure and write the reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma list, e.g. E,A,P,Y,R
        #[arg(long)]
        ordering: Option<String>,
        #[arg(long)]
        draws: Option<usize>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Recompute responses and bands from a saved model.
    Irf {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        ordering: Option<String>,
        #[arg(long, default_value_t = 10_000)]
        draws: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 36)]
        horizons: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Responses drawn as figures.
        #[arg(long, default_value = "P,Y,R")]
        tracked: String,
    },
    /// Write a synthetic dataset and a config that reads it.
    Simulate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Independent random walks instead of a cointegrated system.
        #[arg(long)]
        independent: bool,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Io { .. } => 3,
        Error::Config(_)
        | Error::Parse { .. }
        | Error::MissingValue { .. }
        | Error::Alignment { .. }
        | Error::Domain { .. }
        | Error::Frequency(_)
        | Error::InvalidArgument(_)
        | Error::Series { .. }
        | Error::Stage { .. } => 1,
        Error::NoCointegration
        | Error::Numerical(_)
        | Error::SingularDesign { .. }
        | Error::Degenerate(_)
        | Error::TooManyRejections { .. }
        | Error::NotPositiveDefinite { .. }
        | Error::InsufficientData(_) => 2,
    }
}

fn config_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn validate(config: &Path) -> Result<(), Error> {
    let c = PipelineConfig::load(config)?;
    c.validate()?;
    let d = build_dataset(&c.dataset, &config_dir(config))?;
    for line in &d.log {
        println!("{line}");
    }
    println!(
        "{}: {} variables, {} months, config sha256 {}",
        c.dataset.label,
        d.panel.n_vars(),
        d.panel.len(),
        c.hash()
    );
    Ok(())
}

struct RunArgs {
    config: PathBuf,
    out: Option<PathBuf>,
    seed: Option<u64>,
    ordering: Option<String>,
    draws: Option<usize>,
    format: Option<Format>,
}

fn run(a: RunArgs) -> Result<Verdict, Error> {
    let mut c = PipelineConfig::load(&a.config)?;
    if let Some(s) = a.seed {
        c.irf.seed = s;
    }
    if let Some(d) = a.draws {
        c.irf.draws = d;
    }
    if let Some(o) = &a.ordering {
        c.irf.ordering = Ordering::parse(o, &c.variables())?.names().to_vec();
    }
    let base = config_dir(&a.config);
    let out = a.out.unwrap_or_else(|| base.join(&c.outputs.directory));
    let formats = a.format.map(Format::formats).unwrap_or_else(|| c.outputs.formats.clone());
    let report = run_pipeline(&c, &base)?;
    let written = emit_reports(&report, &out, &formats)?;
    print!("{}", summary(&report));
    log::info!("{} files written to {}", written.len(), out.display());
    Ok(report.verdict)
}

struct IrfArgs {
    model: PathBuf,
    ordering: Option<String>,
    draws: usize,
    seed: u64,
    horizons: usize,
    out: PathBuf,
    format: Format,
    tracked: String,
}

fn irf(a: IrfArgs) -> Result<(), Error> {
    let text = std::fs::read_to_string(&a.model).map_err(|e| Error::Io {
        path: a.model.clone(),
        source: e,
    })?;
    let m = VecmModel::from_text(&text, &a.model.display().to_string())?;
    let ord = match &a.ordering {
        Some(o) => Ordering::parse(o, &m.variables)?,
        None => Ordering::new(m.ordering.clone(), &m.variables)?,
    };
    let tracked: Vec<String> = a.tracked.split(',').map(|s| s.trim().to_string()).collect();
    if let Some(t) = tracked.iter().find(|t| !m.variables.contains(t)) {
        return Err(Error::InvalidArgument(format!("unknown tracked response `{t}`")));
    }
    let result = mc_bands(&m, &ord, a.horizons, &McSpec::new(a.draws, a.seed))?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::Io {
        path: a.out.clone(),
        source: e,
    })?;
    let stem = format!("irf_{}", ord.label());
    for p in write_irf(&result, &a.out, &stem, &a.format.formats(), &tracked)? {
        println!("{}", p.display());
    }
    if result.rejected_draws > 0 {
        log::warn!("{} covariance draws rejected and redrawn", result.rejected_draws);
    }
    Ok(())
}

fn simulate(out: &Path, seed: u64, independent: bool) -> Result<(), Error> {
    std::fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    let c = synthetic_config(out, !independent, seed)?;
    let path = out.join("config.toml");
    std::fs::write(&path, c.to_toml()).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    println!("{}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Validate { config } => validate(&config).map(|_| 0),
        Command::Run {
            config,
            out,
            seed,
            ordering,
            draws,
            format,
        } => run(RunArgs {
            config,
            out,
            seed,
            ordering,
            draws,
            format,
        })
        .map(|v| match v {
            Verdict::Completed => 0,
            Verdict::NoCointegration => {
                eprintln!("error: {}", Error::NoCointegration);
                exit_code(&Error::NoCointegration)
            }
        }),
        Command::Irf {
            model,
            ordering,
            draws,
            seed,
            horizons,
            out,
            format,
            tracked,
        } => irf(IrfArgs {
            model,
            ordering,
            draws,
            seed,
            horizons,
            out,
            format,
            tracked,
        })
        .map(|_| 0),
        Command::Simulate {
            out,
            seed,
            independent,
        } => simulate(&out, seed, independent).map(|_| 0),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
