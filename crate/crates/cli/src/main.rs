use std::path::PathBuf;
use std::process::ExitCode;

use arrayscat_cli::{commands, config::Format, output, verify, Artifact, CliError, RunConfig};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "arrayscat", version, about = "Two-excitation scattering in infinite atomic arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration; missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Dot-path override, e.g. `--set P.kx=0.2` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (overrides `threads`).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[arg(long, value_enum, global = true)]
    format: Option<FormatArg>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Two-excitation band map and critical points.
    Bands,
    /// S-matrix eigenvalue and propagator over the energy window.
    Smatrix,
    /// Photon-pair cross sections vs E and the dark-pair q-map.
    Xsection,
    /// ΔE sweeps into each critical energy with scaling-class fits.
    Scaling,
    /// Production code against the independent oracles.
    Verify,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref(), &cli.overrides)?;
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    if let Some(f) = cli.format {
        cfg.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load(cli)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("threads: {e}")))?;
    }
    let artifacts: Vec<Artifact> = match cli.command {
        Command::Bands => commands::bands(&cfg)?,
        Command::Smatrix => commands::smatrix(&cfg)?,
        Command::Xsection => commands::xsection(&cfg)?,
        Command::Scaling => commands::scaling(&cfg)?,
        Command::Verify => {
            let (report, artifacts) = verify::verify(&cfg)?;
            output::write_all(&cfg.output_dir, &artifacts)?;
            report_written(&cfg, &artifacts);
            if !report.passed {
                return Err(CliError::Verification(format!(
                    "propagator {}, critical points {}, dispersion {}",
                    pass(report.propagator.passed),
                    pass(report.critical_points.passed),
                    pass(report.dispersion.passed)
                )));
            }
            return Ok(());
        }
    };
    output::write_all(&cfg.output_dir, &artifacts)?;
    report_written(&cfg, &artifacts);
    Ok(())
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn report_written(cfg: &RunConfig, artifacts: &[Artifact]) {
    for a in artifacts {
        eprintln!("wrote {}", cfg.output_dir.join(&a.file_name).display());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
