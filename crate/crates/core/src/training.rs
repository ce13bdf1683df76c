//! Cross-entropy loss, Adam with coupled L2 decay, and the epoch loop.
//!
//! Re-mapping happens only inside the forward and gradient evaluations.
//! The optimizer reads and writes raw, unbounded angles.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{Dataset, DatasetKind};
use crate::error::{Error, Result};
use crate::gradient::{adjoint_sample, Gradient};
use crate::model::{self, ClassifierConfig, ClassifierParams};
use crate::remap::RemapKind;
use crate::statevector::RotationAxis;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;
pub const INIT_RANGE: f64 = 0.01;
pub const DEFAULT_EPOCHS: usize = 30;
const PROB_FLOOR: f64 = 1e-12;

/// Exact header of the metrics CSV.
pub const METRICS_HEADER: [&str; 8] = [
    "run_id",
    "seed",
    "remap",
    "epoch",
    "samples_seen",
    "train_loss",
    "val_loss",
    "val_accuracy",
];

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub n_epochs: usize,
    pub seed: u64,
    pub model: ClassifierConfig,
}

impl TrainConfig {
    /// Tuned hyperparameters for each dataset.
    pub fn defaults(kind: DatasetKind, remap: RemapKind) -> Self {
        let (lr, decay, batch, axis, layers) = match kind {
            DatasetKind::Iris => (0.0201, 0.0372, 9, RotationAxis::X, 8),
            DatasetKind::Wine => (0.0300, 0.0007, 18, RotationAxis::Y, 9),
        };
        Self {
            learning_rate: lr,
            weight_decay: decay,
            batch_size: batch,
            n_epochs: DEFAULT_EPOCHS,
            seed: 0,
            model: ClassifierConfig {
                n_qubits: kind.n_features(),
                n_layers: layers,
                n_classes: kind.n_classes(),
                embedding_axis: axis,
                remap,
            },
        }
    }

    pub fn remap(&self) -> RemapKind {
        self.model.remap
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::Config(format!(
                "weight decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if self.n_epochs == 0 {
            return Err(Error::Config("epoch count must be positive".into()));
        }
        self.model.validate()
    }

    /// `key=value` lines describing the effective configuration.
    pub fn manifest_lines(&self) -> Vec<String> {
        vec![
            format!("learning_rate={}", self.learning_rate),
            format!("weight_decay={}", self.weight_decay),
            format!("batch_size={}", self.batch_size),
            format!("epochs={}", self.n_epochs),
            format!("seed={}", self.seed),
            format!("remap={}", self.model.remap),
            format!("layers={}", self.model.n_layers),
            format!("qubits={}", self.model.n_qubits),
            format!("classes={}", self.model.n_classes),
            format!("embedding_axis={}", self.model.embedding_axis),
            format!("adam_beta1={ADAM_BETA1}"),
            format!("adam_beta2={ADAM_BETA2}"),
            format!("adam_epsilon={ADAM_EPSILON}"),
        ]
    }
}

/// `-ln p[label]`, with `p[label]` floored at 1e-12.
pub fn cross_entropy(probs: &[f64], label: usize) -> Result<f64> {
    let p = *probs.get(label).ok_or(Error::InvalidLabel {
        label,
        n_classes: probs.len(),
    })?;
    Ok(-p.max(PROB_FLOOR).ln())
}

/// Thetas uniform on `[-0.01, 0.01]`, biases zero.
pub fn init_params<R: Rng + ?Sized>(rng: &mut R, cfg: &ClassifierConfig) -> ClassifierParams {
    let mut params = ClassifierParams::zeros(cfg);
    for t in params.thetas.iter_mut() {
        *t = rng.gen_range(-INIT_RANGE..=INIT_RANGE);
    }
    params
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
}

impl AdamState {
    pub fn new(n_params: usize) -> Self {
        Self {
            first_moment: vec![0.0; n_params],
            second_moment: vec![0.0; n_params],
            step_count: 0,
        }
    }
}

/// One Adam step on the flat parameter vector (thetas, then biases).
///
/// Decay is coupled: `g += decay * param` before the moment updates, and it
/// applies to biases as well as thetas.
pub fn adam_step(
    params: &mut ClassifierParams,
    grads: &Gradient,
    state: &mut AdamState,
    learning_rate: f64,
    weight_decay: f64,
) -> Result<()> {
    let n = params.len();
    if grads.d_thetas.len() != params.thetas.len() || grads.d_biases.len() != params.biases.len() {
        return Err(Error::Shape {
            context: "gradient",
            expected: n,
            found: grads.d_thetas.len() + grads.d_biases.len(),
        });
    }
    if state.first_moment.len() != n || state.second_moment.len() != n {
        return Err(Error::Shape {
            context: "optimizer state",
            expected: n,
            found: state.first_moment.len(),
        });
    }
    if let Some(&bad) = grads.iter().find(|g| !g.is_finite()) {
        return Err(Error::NonFinite {
            context: "gradient entry (optimizer step aborted)",
            value: bad,
        });
    }

    state.step_count += 1;
    let t = state.step_count as i32;
    let bias1 = 1.0 - ADAM_BETA1.powi(t);
    let bias2 = 1.0 - ADAM_BETA2.powi(t);

    let values = params.thetas.iter_mut().chain(params.biases.iter_mut());
    let moments = state.first_moment.iter_mut().zip(state.second_moment.iter_mut());
    for ((p, g), (m, v)) in values.zip(grads.iter()).zip(moments) {
        let g = g + weight_decay * *p;
        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
        *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
        let m_hat = *m / bias1;
        let v_hat = *v / bias2;
        *p -= learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
    }
    Ok(())
}

/// Mean gradient and mean loss over `indices` of `data`.
///
/// Per-sample gradients run in parallel; the reduction is a left fold in
/// sample order so the result does not depend on the thread count.
pub fn batch_gradient(
    cfg: &ClassifierConfig,
    params: &ClassifierParams,
    data: &Dataset,
    indices: &[usize],
) -> Result<(Gradient, f64)> {
    if indices.is_empty() {
        return Err(Error::Config("empty batch".into()));
    }
    let samples = indices
        .par_iter()
        .map(|&i| adjoint_sample(cfg, params, &data.features[i], data.labels[i]))
        .collect::<Result<Vec<_>>>()?;
    let mut total = Gradient::zeros(cfg);
    let mut loss = 0.0;
    for s in &samples {
        total.add_assign(&s.gradient);
        loss += s.loss;
    }
    let inv = 1.0 / indices.len() as f64;
    total.scale(inv);
    Ok((total, loss * inv))
}

/// Mean loss and accuracy of `params` on all of `data`.
pub fn evaluate(cfg: &ClassifierConfig, params: &ClassifierParams, data: &Dataset) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(Error::Config("cannot evaluate on an empty split".into()));
    }
    let per_sample = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let probs = model::forward(cfg, params, &data.features[i])?;
            let loss = cross_entropy(&probs, data.labels[i])?;
            Ok((loss, argmax(&probs) == data.labels[i]))
        })
        .collect::<Result<Vec<_>>>()?;
    let loss: f64 = per_sample.iter().map(|(l, _)| l).sum::<f64>() / data.len() as f64;
    let correct = per_sample.iter().filter(|(_, ok)| *ok).count();
    Ok((loss, correct as f64 / data.len() as f64))
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
        .0
}

/// One row of the metrics CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRecord {
    pub run_id: String,
    pub seed: u64,
    pub remap: String,
    pub epoch: usize,
    pub samples_seen: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

impl MetricsRecord {
    fn fields(&self) -> [String; 8] {
        [
            self.run_id.clone(),
            self.seed.to_string(),
            self.remap.clone(),
            self.epoch.to_string(),
            self.samples_seen.to_string(),
            self.train_loss.to_string(),
            self.val_loss.to_string(),
            self.val_accuracy.to_string(),
        ]
    }
}

/// Writes metrics rows as CSV with [`METRICS_HEADER`].
pub struct MetricsWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> MetricsWriter<W> {
    pub fn new(sink: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(sink);
        inner.write_record(METRICS_HEADER)?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, record: &MetricsRecord) -> Result<()> {
        self.inner.write_record(record.fields())?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush().map_err(|e| Error::io("metrics csv", e))?;
        self.inner
            .into_inner()
            .map_err(|e| Error::io("metrics csv", e.into_error()))
    }
}

/// Reads a metrics CSV written by [`MetricsWriter`].
pub fn read_metrics(path: &std::path::Path) -> Result<Vec<MetricsRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.clone();
    if header.iter().ne(METRICS_HEADER) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let bad = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        if row.len() != METRICS_HEADER.len() {
            return Err(bad(format!("expected 8 fields, found {}", row.len())));
        }
        let num = |j: usize| -> Result<f64> {
            row[j]
                .parse()
                .map_err(|e| bad(format!("field `{}`: {e}", METRICS_HEADER[j])))
        };
        let int = |j: usize| -> Result<u64> {
            row[j]
                .parse()
                .map_err(|e| bad(format!("field `{}`: {e}", METRICS_HEADER[j])))
        };
        out.push(MetricsRecord {
            run_id: row[0].to_string(),
            seed: int(1)?,
            remap: row[2].to_string(),
            epoch: int(3)? as usize,
            samples_seen: int(4)? as usize,
            train_loss: num(5)?,
            val_loss: num(6)?,
            val_accuracy: num(7)?,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub params: ClassifierParams,
    pub records: Vec<MetricsRecord>,
    pub optimizer_steps: u64,
}

/// Trains from a seeded initialization.
///
/// Every epoch shuffles the training split, takes one Adam step per
/// mini-batch (the last batch may be short), then evaluates the held-out
/// split and hands a [`MetricsRecord`] to `sink`.
pub fn fit<F>(cfg: &TrainConfig, run_id: &str, train: &Dataset, val: &Dataset, mut sink: F) -> Result<FitResult>
where
    F: FnMut(&MetricsRecord) -> Result<()>,
{
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::Config("training and validation splits must be non-empty".into()));
    }
    let model_cfg = &cfg.model;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = init_params(&mut rng, model_cfg);
    let mut adam = AdamState::new(params.len());
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut records = Vec::with_capacity(cfg.n_epochs);

    for epoch in 1..=cfg.n_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let (grad, loss) = batch_gradient(model_cfg, &params, train, batch)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite {
                    context: "training loss",
                    value: loss,
                });
            }
            loss_sum += loss * batch.len() as f64;
            adam_step(&mut params, &grad, &mut adam, cfg.learning_rate, cfg.weight_decay)?;
        }
        let (val_loss, val_accuracy) = evaluate(model_cfg, &params, val)?;
        if !val_loss.is_finite() {
            return Err(Error::NonFinite {
                context: "validation loss",
                value: val_loss,
            });
        }
        let record = MetricsRecord {
            run_id: run_id.to_string(),
            seed: cfg.seed,
            remap: model_cfg.remap.to_string(),
            epoch,
            samples_seen: epoch * train.len(),
            train_loss: loss_sum / train.len() as f64,
            val_loss,
            val_accuracy,
        };
        sink(&record)?;
        records.push(record);
    }
    Ok(FitResult {
        params,
        records,
        optimizer_steps: adam.step_count,
    })
}
