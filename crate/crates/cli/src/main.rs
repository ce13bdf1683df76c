mod args;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use qremap::data::{self, DatasetKind};
use qremap::experiment::{
    self, ExperimentPlan, GradcheckOptions, Overrides, RunStatus,
};
use qremap::{RemapKind, RotationAxis};

const EXIT_USAGE: u8 = 1;
const EXIT_BREACH: u8 = 2;

#[derive(Parser)]
#[command(name = "qremap", version, about = "Variational quantum classifier experiments with weight re-mapping")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one run per (remap, seed) and write metrics, checkpoints and manifests.
    Run(RunArgs),
    /// Mean and 95% CI of validation accuracy at sample checkpoints.
    Aggregate(AggregateArgs),
    /// Compare adjoint, parameter-shift and finite-difference gradients.
    Gradcheck(GradcheckArgs),
    /// Mean validation curves with confidence bands (SVG + CSV).
    Plot(PlotArgs),
    /// Download the UCI Iris and Wine files into the data directory.
    FetchData(FetchArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    dataset: DatasetKind,
    /// Comma-separated remap kinds (none, clamp, tanh, arctan, sigmoid, elu).
    #[arg(long, value_delimiter = ',', default_value = "none,clamp,tanh,arctan,sigmoid,elu")]
    remap: Vec<RemapKind>,
    /// Seed list or range: `0..20`, `0..=9`, `1,4,7`. Defaults to 20 seeds
    /// for Iris and 10 for Wine.
    #[arg(long, value_parser = args::parse_seeds)]
    seeds: Option<args::Seeds>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    embedding_axis: Option<RotationAxis>,
    /// key=value file of overrides; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Worker threads (0 = all hardware threads).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long, env = "QREMAP_DATA_DIR", default_value = "data")]
    data_dir: PathBuf,
}

#[derive(clap::Args)]
struct AggregateArgs {
    /// Metrics CSV files, run directories, or a plan output directory.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Sample counts to report (defaults to the dataset's standard grid).
    #[arg(long, value_delimiter = ',')]
    at: Vec<usize>,
    /// Directory for aggregate.csv and aggregate.txt.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 50)]
    instances: usize,
    #[arg(long, default_value_t = 20)]
    fd_instances: usize,
    #[arg(long, default_value_t = 4)]
    max_qubits: usize,
    #[arg(long, default_value_t = 3)]
    max_layers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Perturb the adjoint chain factor so the suite must fail.
    #[arg(long, hide = true)]
    corrupt_derivative: bool,
}

#[derive(clap::Args)]
struct PlotArgs {
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value = "plots")]
    out: PathBuf,
}

#[derive(clap::Args)]
struct FetchArgs {
    #[arg(long, env = "QREMAP_DATA_DIR", default_value = "data")]
    data_dir: PathBuf,
    /// Replace files that already exist.
    #[arg(long)]
    force: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Aggregate(a) => cmd_aggregate(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
        Command::Plot(a) => cmd_plot(a),
        Command::FetchData(a) => cmd_fetch(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn cmd_run(a: RunArgs) -> Result<ExitCode> {
    let data_file = a.data_dir.join(a.dataset.file_name());
    let mut plan = ExperimentPlan::new(a.dataset, data_file, a.out);
    plan.remap_kinds = a.remap;
    if let Some(seeds) = a.seeds {
        plan.seeds = seeds.0;
    }
    plan.jobs = a.jobs;
    let file_overrides = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Overrides::parse_config(&text, path)?
        }
        None => Overrides::default(),
    };
    let flags = Overrides {
        epochs: a.epochs,
        learning_rate: a.lr,
        weight_decay: a.weight_decay,
        batch_size: a.batch_size,
        layers: a.layers,
        embedding_axis: a.embedding_axis,
    };
    plan.overrides = file_overrides.merged_with(&flags);

    let report = experiment::run_plan(&plan)?;
    for run in &report.runs {
        match &run.status {
            RunStatus::Finished { final_accuracy } => {
                println!("{:<24} final val_accuracy {:.4}", run.run_id, final_accuracy)
            }
            RunStatus::Failed(msg) => eprintln!("{:<24} FAILED: {msg}", run.run_id),
        }
    }
    Ok(if report.all_finished() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_BREACH)
    })
}

fn cmd_aggregate(a: AggregateArgs) -> Result<ExitCode> {
    let files = args::collect_metric_files(&a.inputs)?;
    let at = if a.at.is_empty() {
        let runs = experiment::load_runs(&files)?;
        let kind: DatasetKind = runs[0]
            .dataset
            .parse()
            .context("cannot infer the checkpoint grid; pass --at")?;
        experiment::table_checkpoints(kind)
    } else {
        a.at
    };
    let table = experiment::aggregate(&files, &at)?;
    let text = table.to_text();
    print!("{text}");
    if let Some(out) = a.out {
        std::fs::create_dir_all(&out)?;
        std::fs::write(out.join("aggregate.csv"), table.to_csv_string()?)?;
        std::fs::write(out.join("aggregate.txt"), text)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_gradcheck(a: GradcheckArgs) -> Result<ExitCode> {
    if a.max_qubits == 0 || a.max_qubits > 4 || a.max_layers == 0 || a.max_layers > 3 {
        bail!("gradcheck sizes are bounded to 1..=4 qubits and 1..=3 layers");
    }
    let opts = GradcheckOptions {
        engine_instances: a.instances,
        fd_instances: a.fd_instances,
        max_qubits: a.max_qubits,
        max_layers: a.max_layers,
        seed: a.seed,
        corrupt_adjoint: a.corrupt_derivative,
        ..GradcheckOptions::default()
    };
    let r = experiment::gradcheck(&opts)?;
    println!(
        "adjoint vs shift: max |diff| = {:.3e} over {} instances (tolerance {:.0e}) {}",
        r.max_engine_deviation,
        r.engine_instances,
        opts.engine_tolerance,
        verdict(r.engine_ok)
    );
    println!(
        "finite difference: max rel dev = {:.3e}, {} breaches, {} kink-adjacent skipped over {} instances (tolerance {:.0e}) {}",
        r.max_fd_relative_deviation,
        r.fd_failures,
        r.fd_skipped_near_kink,
        r.fd_instances,
        opts.fd_relative_tolerance,
        verdict(r.fd_ok)
    );
    Ok(if r.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_BREACH)
    })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn cmd_plot(a: PlotArgs) -> Result<ExitCode> {
    let files = args::collect_metric_files(&a.inputs)?;
    let out = experiment::plot(&files, &a.out)?;
    println!("wrote {} and {}", out.svg_path.display(), out.csv_path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_fetch(a: FetchArgs) -> Result<ExitCode> {
    std::fs::create_dir_all(&a.data_dir)?;
    for kind in [DatasetKind::Iris, DatasetKind::Wine] {
        let dest = a.data_dir.join(kind.file_name());
        if dest.exists() && !a.force {
            let ds = data::load_csv(&dest, kind)?;
            println!("{} present ({} rows), skipping", dest.display(), ds.len());
            continue;
        }
        let body = download(kind.source_url())?;
        data::parse_csv(&body, kind, Path::new(kind.source_url()))
            .with_context(|| format!("validating download of {kind}"))?;
        std::fs::write(&dest, &body)?;
        println!("{} <- {} (sha256 {})", dest.display(), kind.source_url(), data::sha256_hex(body.as_bytes()));
    }
    Ok(ExitCode::SUCCESS)
}

fn download(url: &str) -> Result<String> {
    let mut response = ureq::get(url).call().with_context(|| format!("GET {url}"))?;
    Ok(response.body_mut().read_to_string()?)
}
