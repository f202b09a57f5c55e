use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use lords_lab::dgp::{build_paper_scm, build_randomized_scm, cols, ground_truth};
use lords_lab::did::did_demo;
use lords_lab::estimators::{estimates_csv, ApproachRegistry, EstimationContext};
use lords_lab::figure::{density_csv, ellipses_csv, figure3_data, points_csv, Axis};
use lords_lab::harness::{run_and_summarize, McConfig, DEFAULT_N, DEFAULT_Y0_FIXED_KG};
use lords_lab::rtm::biasing_term_report;
use lords_lab::scm::{simulate, to_natural_units, validate_scm, Dataset, ScmSpec, Units};
use lords_lab::svg::render_svg;
use lords_lab::table::{emit_table1, TableFormat};
use lords_lab::LabError;

const DEFAULT_SEED: u64 = 1967;
const SEED_ENV: &str = "LORDS_LAB_SEED";

#[derive(Parser)]
#[command(name = "lords-lab", version, about = "Change-score vs baseline-adjusted analyses on a simulated structural model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Structural model JSON (defaults to the built-in sex/activity/weight model).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Use the built-in variant with sex independent of pre-baseline variables.
    #[arg(long, conflicts_with = "model")]
    randomized: bool,
    /// Master seed; the LORDS_LAB_SEED environment variable takes precedence.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Observations per dataset.
    #[arg(long, default_value_t = DEFAULT_N)]
    n: usize,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

impl ModelArgs {
    fn spec(&self) -> Result<ScmSpec> {
        Ok(match (&self.model, self.randomized) {
            (Some(path), _) => ScmSpec::load(path)
                .with_context(|| format!("loading model {}", path.display()))?,
            (None, true) => build_randomized_scm(),
            (None, false) => build_paper_scm(),
        })
    }

    fn seed(&self) -> Result<u64> {
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| LabError::Config(format!("{SEED_ENV}=`{v}` is not a u64")).into()),
            Err(_) => Ok(self.seed),
        }
    }

    fn natural_dataset(&self) -> Result<Dataset> {
        let scm = validate_scm(self.spec()?)?;
        let ds = simulate(&scm, self.n, self.seed()?)?;
        Ok(to_natural_units(&ds, &scm)?)
    }
}

#[derive(Args)]
struct ReplicationArgs {
    /// Number of replications.
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    /// Run the full 10,000-replication design (overrides --reps).
    #[arg(long)]
    paper_scale: bool,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Baseline weight (kg) at which the controlled direct effect is evaluated.
    #[arg(long, default_value_t = DEFAULT_Y0_FIXED_KG)]
    y0_fixed: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one dataset and write dataset.csv.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        /// Keep the standardized scale instead of natural units.
        #[arg(long)]
        standardized: bool,
    },
    /// Run the estimators on a natural-unit dataset CSV.
    Estimate {
        /// Dataset CSV with at least X, M0, Y0, Y1 columns.
        input: PathBuf,
        /// Comma-separated approach names (default: the six table approaches).
        #[arg(long, value_delimiter = ',')]
        approach: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_Y0_FIXED_KG)]
        y0_fixed: f64,
        /// Output format: markdown or json.
        #[arg(long, default_value = "markdown")]
        format: String,
    },
    /// Replicate, summarize and emit the results table.
    #[command(name = "reproduce-table1")]
    ReproduceTable1 {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        reps: ReplicationArgs,
        /// Table format: markdown, csv or json.
        #[arg(long, default_value = "markdown")]
        format: String,
    },
    /// Emit the scatter/ellipse/density bundle as CSVs and/or SVG.
    Figure3 {
        #[command(flatten)]
        model: ModelArgs,
        /// What to write: csv, svg or both.
        #[arg(long, default_value = "both")]
        format: String,
    },
    /// Biasing-term and regression-to-the-mean report as JSON.
    #[command(name = "rtm-report")]
    RtmReport {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Difference-in-difference versus change-score and ANCOVA report.
    #[command(name = "did-demo")]
    DidDemo {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        reps: ReplicationArgs,
    },
    /// Print the structural model JSON.
    Model {
        #[arg(long)]
        randomized: bool,
    },
}

fn write(out: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn mc_config(model: &ModelArgs, reps: &ReplicationArgs) -> Result<McConfig> {
    let mut cfg = McConfig::new(model.spec()?, model.seed()?);
    cfg.replications = reps.reps;
    cfg.n_per_replication = model.n;
    cfg.y0_fixed_kg = reps.y0_fixed;
    if reps.paper_scale {
        cfg = cfg.paper_scale();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            model,
            standardized,
        } => {
            let scm = validate_scm(model.spec()?)?;
            let mut ds = simulate(&scm, model.n, model.seed()?)?;
            if !standardized {
                ds = to_natural_units(&ds, &scm)?;
            }
            let canonical = cols::EXPORT_ORDER
                .iter()
                .all(|c| ds.columns().contains_key(*c));
            let mut buf = Vec::new();
            ds.write_csv(&mut buf, canonical.then_some(&cols::EXPORT_ORDER[..]))?;
            write(&model.out, "dataset.csv", &String::from_utf8(buf)?)?;
        }
        Command::Estimate {
            input,
            approach,
            y0_fixed,
            format,
        } => {
            let file = fs::File::open(&input)
                .map_err(LabError::from)
                .with_context(|| format!("opening {}", input.display()))?;
            let ds = Dataset::read_csv(file, Units::Natural)?;
            let registry = ApproachRegistry::with_extras();
            let selection: Vec<&str> = if approach.is_empty() {
                ApproachRegistry::table1().names().collect()
            } else {
                approach.iter().map(String::as_str).collect()
            };
            let ctx = EstimationContext { y0_fixed_kg: y0_fixed };
            let results = registry.run(&selection, &ds, &ctx)?;
            match format.as_str() {
                "json" => println!("{}", serde_json::to_string_pretty(&results)?),
                "markdown" | "md" => {
                    println!("| Approach | Description | Estimate (kg) |\n|---|---|---|");
                    for (name, v) in &results {
                        println!("| {name} | {} | {v:.1} |", registry.get(name)?.description());
                    }
                }
                other => return Err(LabError::Config(format!("unknown format `{other}`")).into()),
            }
        }
        Command::ReproduceTable1 {
            model,
            reps,
            format,
        } => {
            let format: TableFormat = format.parse()?;
            let cfg = mc_config(&model, &reps)?;
            let truth = ground_truth(&cfg.spec)?;
            let (estimates, summary) = run_and_summarize(&cfg, reps.workers)?;
            write(&model.out, "estimates.csv", &estimates_csv(&estimates))?;
            write(&model.out, "summary.json", &summary.to_json()?)?;
            write(&model.out, "ground_truth.json", &serde_json::to_string_pretty(&truth)?)?;
            let table = emit_table1(&summary, &truth, format)?;
            write(&model.out, &format!("table1.{}", format.extension()), &table)?;
            print!("{table}");
            if let Some(secs) = summary.elapsed_secs {
                eprintln!(
                    "{} replications x {} rows in {secs:.1}s",
                    cfg.replications, cfg.n_per_replication
                );
            }
        }
        Command::Figure3 { model, format } => {
            let (csv, svg) = match format.as_str() {
                "csv" => (true, false),
                "svg" => (false, true),
                "both" => (true, true),
                other => return Err(LabError::Config(format!("unknown format `{other}`")).into()),
            };
            let bundle = figure3_data(&model.natural_dataset()?)?;
            if csv {
                write(&model.out, "figure3_points.csv", &points_csv(&bundle))?;
                write(&model.out, "figure3_ellipses.csv", &ellipses_csv(&bundle))?;
                write(&model.out, "figure3_density_x.csv", &density_csv(&bundle, Axis::Y0))?;
                write(&model.out, "figure3_density_y.csv", &density_csv(&bundle, Axis::Y1))?;
            }
            if svg {
                write(&model.out, "figure3.svg", &render_svg(&bundle))?;
            }
        }
        Command::RtmReport { model } => {
            let report = biasing_term_report(&model.natural_dataset()?)?;
            let json = serde_json::to_string_pretty(&report)?;
            write(&model.out, "rtm_report.json", &json)?;
            println!("{json}");
        }
        Command::DidDemo { model, reps } => {
            let cfg = mc_config(&model, &reps)?;
            let report = did_demo(&cfg, reps.workers)?;
            let json = serde_json::to_string_pretty(&report)?;
            write(&model.out, "did_demo.json", &json)?;
            println!("{json}");
        }
        Command::Model { randomized } => {
            let spec = if randomized {
                build_randomized_scm()
            } else {
                build_paper_scm()
            };
            println!("{}", spec.to_json()?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            match err.downcast_ref::<LabError>() {
                Some(e) if !e.is_validation() => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
