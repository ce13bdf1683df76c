use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::data::{self, DatasetKind, FeatureScaling, SplitIndices};
use crate::error::{Error, Result};
use crate::remap::RemapKind;
use crate::statevector::RotationAxis;
use crate::training::{fit, MetricsWriter, TrainConfig};

/// Optional replacements for the per-dataset defaults.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub weight_decay: Option<f64>,
    pub batch_size: Option<usize>,
    pub layers: Option<usize>,
    pub embedding_axis: Option<RotationAxis>,
}

impl Overrides {
    /// Fields set in `other` win.
    pub fn merged_with(&self, other: &Overrides) -> Overrides {
        Overrides {
            epochs: other.epochs.or(self.epochs),
            learning_rate: other.learning_rate.or(self.learning_rate),
            weight_decay: other.weight_decay.or(self.weight_decay),
            batch_size: other.batch_size.or(self.batch_size),
            layers: other.layers.or(self.layers),
            embedding_axis: other.embedding_axis.or(self.embedding_axis),
        }
    }

    pub fn apply(&self, cfg: &mut TrainConfig) {
        if let Some(v) = self.epochs {
            cfg.n_epochs = v;
        }
        if let Some(v) = self.learning_rate {
            cfg.learning_rate = v;
        }
        if let Some(v) = self.weight_decay {
            cfg.weight_decay = v;
        }
        if let Some(v) = self.batch_size {
            cfg.batch_size = v;
        }
        if let Some(v) = self.layers {
            cfg.model.n_layers = v;
        }
        if let Some(v) = self.embedding_axis {
            cfg.model.embedding_axis = v;
        }
    }

    /// Parses `key=value` lines; `#` starts a comment. Keys match the long
    /// CLI flags (`epochs`, `lr`, `weight-decay`, `batch-size`, `layers`,
    /// `embedding-axis`); underscores are accepted in place of dashes.
    pub fn parse_config(text: &str, origin: &Path) -> Result<Overrides> {
        let mut out = Overrides::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                msg,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, found `{line}`")))?;
            let (key, value) = (key.trim().replace('_', "-"), value.trim());
            let num_err = |e: &dyn std::fmt::Display| bad(format!("bad value for `{key}`: {e}"));
            match key.as_str() {
                "epochs" => out.epochs = Some(value.parse().map_err(|e| num_err(&e))?),
                "lr" | "learning-rate" => out.learning_rate = Some(value.parse().map_err(|e| num_err(&e))?),
                "weight-decay" => out.weight_decay = Some(value.parse().map_err(|e| num_err(&e))?),
                "batch-size" => out.batch_size = Some(value.parse().map_err(|e| num_err(&e))?),
                "layers" => out.layers = Some(value.parse().map_err(|e| num_err(&e))?),
                "embedding-axis" => out.embedding_axis = Some(value.parse().map_err(|e| num_err(&e))?),
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        Ok(out)
    }
}

/// One sweep: every (remap, seed) pair is an independent run.
#[derive(Clone, Debug)]
pub struct ExperimentPlan {
    pub dataset: DatasetKind,
    pub data_file: PathBuf,
    pub remap_kinds: Vec<RemapKind>,
    pub seeds: Vec<u64>,
    pub overrides: Overrides,
    pub output_dir: PathBuf,
    /// Worker threads; 0 means one per hardware thread.
    pub jobs: usize,
    pub train_fraction: f64,
}

impl ExperimentPlan {
    pub fn new(dataset: DatasetKind, data_file: PathBuf, output_dir: PathBuf) -> Self {
        Self {
            dataset,
            data_file,
            remap_kinds: RemapKind::ALL.to_vec(),
            seeds: (0..default_seed_count(dataset)).collect(),
            overrides: Overrides::default(),
            output_dir,
            jobs: 0,
            train_fraction: 0.8,
        }
    }

    pub fn config_for(&self, remap: RemapKind, seed: u64) -> TrainConfig {
        let mut cfg = TrainConfig::defaults(self.dataset, remap);
        self.overrides.apply(&mut cfg);
        cfg.seed = seed;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.remap_kinds.is_empty() {
            return Err(Error::Config("plan needs at least one remap kind".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("plan needs at least one seed".into()));
        }
        self.config_for(self.remap_kinds[0], self.seeds[0]).validate()
    }

    pub fn run_id(&self, remap: RemapKind, seed: u64) -> String {
        format!("{}-{}-s{}", self.dataset, remap, seed)
    }
}

/// Seeds per remap kind when none are given: 20 for Iris, 10 for Wine.
pub fn default_seed_count(dataset: DatasetKind) -> u64 {
    match dataset {
        DatasetKind::Iris => 20,
        DatasetKind::Wine => 10,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunStatus {
    Finished { final_accuracy: f64 },
    Failed(String),
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub run_id: String,
    pub remap: RemapKind,
    pub seed: u64,
    pub dir: PathBuf,
    pub status: RunStatus,
}

#[derive(Clone, Debug)]
pub struct PlanReport {
    pub runs: Vec<RunOutcome>,
}

impl PlanReport {
    pub fn all_finished(&self) -> bool {
        self.runs
            .iter()
            .all(|r| matches!(r.status, RunStatus::Finished { .. }))
    }

    pub fn metric_files(&self) -> Vec<PathBuf> {
        self.runs
            .iter()
            .filter(|r| matches!(r.status, RunStatus::Finished { .. }))
            .map(|r| r.dir.join("metrics.csv"))
            .collect()
    }
}

struct Prepared {
    dataset: data::Dataset,
    scaling: FeatureScaling,
    checksum: String,
}

/// Executes every run of `plan`. Each run writes `metrics.csv`,
/// `checkpoint.txt` and `manifest.txt` into a temporary directory that is
/// renamed to `<output_dir>/<run_id>` once the run succeeds. Failed runs
/// leave nothing behind and do not stop the others.
pub fn run_plan(plan: &ExperimentPlan) -> Result<PlanReport> {
    plan.validate()?;
    let bytes = fs::read(&plan.data_file).map_err(|e| Error::io(&plan.data_file, e))?;
    let text = String::from_utf8_lossy(&bytes);
    let raw = data::parse_csv(&text, plan.dataset, &plan.data_file)?;
    let (dataset, scaling) = data::scale_features(&raw)?;
    let prepared = Prepared {
        dataset,
        scaling,
        checksum: data::sha256_hex(&bytes),
    };
    fs::create_dir_all(&plan.output_dir).map_err(|e| Error::io(&plan.output_dir, e))?;

    let jobs: Vec<(RemapKind, u64)> = plan
        .remap_kinds
        .iter()
        .flat_map(|&r| plan.seeds.iter().map(move |&s| (r, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.jobs)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let runs = pool.install(|| {
        jobs.par_iter()
            .map(|&(remap, seed)| execute_run(plan, &prepared, remap, seed))
            .collect()
    });
    Ok(PlanReport { runs })
}

fn execute_run(plan: &ExperimentPlan, prepared: &Prepared, remap: RemapKind, seed: u64) -> RunOutcome {
    let run_id = plan.run_id(remap, seed);
    let dir = plan.output_dir.join(&run_id);
    let staging = plan.output_dir.join(format!(".{run_id}.partial"));
    let status = match train_into(plan, prepared, remap, seed, &run_id, &staging) {
        Ok(final_accuracy) => match publish(&staging, &dir) {
            Ok(()) => RunStatus::Finished { final_accuracy },
            Err(e) => RunStatus::Failed(e.to_string()),
        },
        Err(e) => {
            let _ = fs::remove_dir_all(&staging);
            RunStatus::Failed(e.to_string())
        }
    };
    RunOutcome {
        run_id,
        remap,
        seed,
        dir,
        status,
    }
}

fn publish(staging: &Path, dir: &Path) -> Result<()> {
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::rename(staging, dir).map_err(|e| Error::io(dir, e))
}

fn train_into(
    plan: &ExperimentPlan,
    prepared: &Prepared,
    remap: RemapKind,
    seed: u64,
    run_id: &str,
    staging: &Path,
) -> Result<f64> {
    if staging.exists() {
        fs::remove_dir_all(staging).map_err(|e| Error::io(staging, e))?;
    }
    fs::create_dir_all(staging).map_err(|e| Error::io(staging, e))?;
    let cfg = plan.config_for(remap, seed);
    let split = data::stratified_split(&prepared.dataset, plan.train_fraction, seed)?;
    let train = prepared.dataset.subset(&split.train);
    let val = prepared.dataset.subset(&split.validation);

    let metrics_path = staging.join("metrics.csv");
    let file = fs::File::create(&metrics_path).map_err(|e| Error::io(&metrics_path, e))?;
    let mut writer = MetricsWriter::new(std::io::BufWriter::new(file))?;
    let result = fit(&cfg, run_id, &train, &val, |rec| writer.write(rec))?;
    writer.finish()?;

    result.params.save(&staging.join("checkpoint.txt"))?;
    let manifest = manifest_text(plan, prepared, &cfg, &split, run_id);
    let manifest_path = staging.join("manifest.txt");
    fs::write(&manifest_path, manifest).map_err(|e| Error::io(&manifest_path, e))?;

    Ok(result.records.last().map_or(0.0, |r| r.val_accuracy))
}

fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn manifest_text(
    plan: &ExperimentPlan,
    prepared: &Prepared,
    cfg: &TrainConfig,
    split: &SplitIndices,
    run_id: &str,
) -> String {
    let mut out = String::new();
    writeln!(out, "run_id={run_id}").unwrap();
    writeln!(out, "dataset={}", plan.dataset).unwrap();
    writeln!(out, "data_file={}", plan.data_file.display()).unwrap();
    writeln!(out, "data_sha256={}", prepared.checksum).unwrap();
    writeln!(out, "scaling=minmax_full_dataset_to_0_pi").unwrap();
    writeln!(out, "scaling_min={}", join(&prepared.scaling.mins)).unwrap();
    writeln!(out, "scaling_max={}", join(&prepared.scaling.maxs)).unwrap();
    writeln!(out, "train_fraction={}", plan.train_fraction).unwrap();
    writeln!(out, "split_seed={}", cfg.seed).unwrap();
    writeln!(out, "train_indices={}", join(&split.train)).unwrap();
    writeln!(out, "validation_indices={}", join(&split.validation)).unwrap();
    for line in cfg.manifest_lines() {
        writeln!(out, "{line}").unwrap();
    }
    out
}
