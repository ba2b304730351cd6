use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use citefit::app::{parse_params, run_batch, write_long_csv, RunConfig};
use citefit::distributions::ModelId;
use citefit::synthetic::{sample_cell, SampleSpec};
use citefit::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_INGEST: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(name = "citefit", version, about = "Fit and compare citation-count distributions per subject and year")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// CSV with `subject,year,citations` or `subject,year,count,freq`
    #[arg(long)]
    input: PathBuf,
    /// Output directory for the bundle
    #[arg(long)]
    out: PathBuf,
    /// Drop uncited articles before fitting
    #[arg(long)]
    exclude_uncited: bool,
    /// Added to every count (the model support starts here)
    #[arg(long, default_value_t = 1)]
    offset: u32,
    /// Significance level for the Vuong comparison
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Leave fits that hit the iteration cap out of stability correlations
    #[arg(long)]
    exclude_unconverged: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one model to every cell
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: ModelId,
    },
    /// Fit dlnorm and hooked and compare them with Vuong's test
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Year-to-year rank stability of one fitted parameter
    Stability {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: ModelId,
        /// e.g. mu, sigma, alpha, b, mean, sd
        #[arg(long)]
        parameter: String,
    },
    /// Draw a synthetic cell and write it in long format
    Simulate {
        #[arg(long)]
        model: ModelId,
        /// e.g. "mu=1.2,sigma=1.1" or "alpha=3,b=5"
        #[arg(long)]
        params: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "synthetic")]
        subject: String,
        #[arg(long, default_value_t = 2000)]
        year: i32,
        #[arg(long)]
        out: PathBuf,
    },
    /// All models, comparisons, panels and stability
    Report {
        #[command(flatten)]
        common: Common,
    },
}

fn config(common: Common, models: Vec<ModelId>) -> RunConfig {
    let mut cfg = RunConfig::new(common.input, common.out);
    cfg.include_uncited = !common.exclude_uncited;
    cfg.offset = common.offset;
    cfg.level = common.level;
    cfg.seed = common.seed;
    cfg.include_unconverged = !common.exclude_unconverged;
    cfg.models = models;
    cfg
}

fn exit_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) => EXIT_USAGE,
        _ => EXIT_INGEST,
    }
}

fn batch(cfg: RunConfig) -> Result<u8, Error> {
    let bundle = run_batch(&cfg)?;
    for w in &bundle.ingest_warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "{} cells, {} comparisons, {} panels written to {}",
        bundle.cells.len(),
        bundle.winners.len(),
        bundle.panels.len(),
        cfg.out_dir.display()
    );
    if bundle.has_failures() {
        for f in &bundle.failures {
            eprintln!("failed: {}/{} {}: {}", f.subject, f.year, f.stage, f.reason);
        }
        return Ok(EXIT_PARTIAL);
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Fit { common, model } => batch(config(common, vec![model])),
        Command::Compare { common } => batch(config(common, vec![ModelId::Dlnorm, ModelId::Hooked])),
        Command::Stability {
            common,
            model,
            parameter,
        } => {
            let name = parameter.to_ascii_lowercase();
            if !model.parameter_names().contains(&name.as_str()) {
                return Err(Error::Config(format!(
                    "{model} has parameters {}",
                    model.parameter_names().join(", ")
                )));
            }
            let mut cfg = config(common, vec![model]);
            cfg.parameters = Some(vec![format!("{model}_{name}")]);
            batch(cfg)
        }
        Command::Simulate {
            model,
            params,
            n,
            seed,
            subject,
            year,
            out,
        } => {
            let params = parse_params(model, &params)?;
            let data = sample_cell(&SampleSpec::new(params, n, seed), &subject, year)?;
            let file = fs::File::create(&out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
            write_long_csv(&[data], file)?;
            Ok(0)
        }
        Command::Report { common } => batch(config(common, ModelId::ALL.to_vec())),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
