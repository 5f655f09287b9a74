//! Mini-batch training with Adam, per-epoch validation and best-epoch
//! model selection.

use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use satgnn_core::generator::{Dataset, Split};
use satgnn_core::graph::apply_rni_with;
use satgnn_core::{batch, encode, to_graph, BipartiteGraph, Formula};
use serde::{Deserialize, Serialize};

use crate::error::NnError;
use crate::gnn::{GnnConfig, GnnModel};
use crate::loss::{classify, LossKind};
use crate::optim::{adam_step, AdamState};
use crate::tensor::Tensor;

/// Feature dimensions of an encoded formula before random slots are added.
pub const BASE_DIMS: (usize, usize) = (1, 0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub d: usize,
    pub rounds: usize,
    pub rni_fraction: f64,
    pub loss: LossKind,
    pub seed: u64,
    /// Whole-batch gradients on one thread; otherwise batches are split
    /// across the rayon pool and results depend on its size.
    pub deterministic: bool,
    /// RNI draws averaged per graph at evaluation time.
    pub eval_redraws: usize,
    /// Draw each training graph's random features once instead of per epoch.
    pub freeze_rni: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 150,
            batch_size: 64,
            learning_rate: 1e-4,
            d: 32,
            rounds: 2,
            rni_fraction: 0.0,
            loss: LossKind::Bce,
            seed: 0,
            deterministic: false,
            eval_redraws: 1,
            freeze_rni: false,
        }
    }
}

impl TrainConfig {
    pub fn gnn(&self) -> Result<GnnConfig, NnError> {
        GnnConfig::new(self.d, self.rounds, self.rni_fraction)
    }

    pub fn validate(&self) -> Result<(), NnError> {
        self.gnn()?;
        if self.batch_size == 0 || self.eval_redraws == 0 {
            return Err(NnError::Config("batch size and evaluation redraws must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(NnError::Config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        Ok(())
    }
}

/// A base graph (features `(1, 0)`) with its 0/1 label.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub graph: BipartiteGraph,
    pub label: u8,
}

impl Sample {
    pub fn from_formula(f: &Formula, label: u8) -> Self {
        Sample { graph: to_graph(&encode(f)), label }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Splits {
    pub train: Vec<Sample>,
    pub valid: Vec<Sample>,
    pub test: Vec<Sample>,
}

impl Splits {
    pub fn from_dataset(ds: &Dataset) -> Self {
        let take = |s: Split| ds.split(s).map(|e| Sample::from_formula(&e.formula, e.label)).collect();
        Splits { train: take(Split::Train), valid: take(Split::Valid), test: take(Split::Test) }
    }

    /// Uses the same samples for all three splits.
    pub fn same(samples: Vec<Sample>) -> Self {
        Splits { train: samples.clone(), valid: samples.clone(), test: samples }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_sat: usize,
    pub true_unsat: usize,
    pub false_sat: usize,
    pub false_unsat: usize,
}

impl Confusion {
    pub fn record(&mut self, predicted: u8, label: u8) {
        match (predicted, label) {
            (1, 1) => self.true_sat += 1,
            (0, 0) => self.true_unsat += 1,
            (1, _) => self.false_sat += 1,
            _ => self.false_unsat += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.true_sat + self.true_unsat + self.false_sat + self.false_unsat
    }

    pub fn accuracy(&self) -> f64 {
        if self.total() == 0 {
            return 0.0;
        }
        (self.true_sat + self.true_unsat) as f64 / self.total() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub confusion: Confusion,
    pub predictions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    /// Accuracy of the in-epoch predictions on the batches as they were fed.
    pub train_accuracy: f64,
    pub valid_accuracy: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub history: Vec<EpochMetrics>,
    /// 1-based; 0 when no epoch ran and the initial model was kept.
    pub best_epoch: usize,
    pub best_valid_accuracy: f64,
    pub test_accuracy: f64,
    pub test_confusion: Confusion,
    pub runtime_seconds: f64,
}

impl Metrics {
    pub fn write_csv(&self, path: &Path) -> Result<(), NnError> {
        let io = |source| NnError::Io { path: path.display().to_string(), source };
        let mut out = std::fs::File::create(path).map_err(io)?;
        let mut text = String::from("epoch,train_loss,valid_acc\n");
        for e in &self.history {
            text.push_str(&format!("{},{},{}\n", e.epoch, e.train_loss, e.valid_accuracy));
        }
        out.write_all(text.as_bytes()).map_err(io)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the best validation epoch.
    pub model: GnnModel,
    /// Parameters after the last epoch.
    pub last: GnnModel,
    pub metrics: Metrics,
}

fn epoch_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// Stream layout: shuffles use 3e, training RNI draws 3e + 1, validation
// draws 3e + 2; test draws use u64::MAX, frozen training draws u64::MAX - 1.
const TEST_STREAM: u64 = u64::MAX;
const FROZEN_STREAM: u64 = u64::MAX - 1;

fn check_samples(samples: &[Sample]) -> Result<(), NnError> {
    for s in samples {
        if s.graph.feature_dims() != BASE_DIMS {
            return Err(NnError::DimensionMismatch { expected: BASE_DIMS, found: s.graph.feature_dims() });
        }
    }
    Ok(())
}

fn featurize<R: Rng>(model: &GnnModel, g: &BipartiteGraph, rng: &mut R) -> BipartiteGraph {
    apply_rni_with(g, model.config().rni_fraction, rng)
}

/// Predictions for each sample, averaged over `redraws` RNI draws when the
/// model uses random features.
pub fn predict(model: &GnnModel, samples: &[Sample], redraws: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, NnError> {
    let draws = if model.config().uses_rni() { redraws.max(1) } else { 1 };
    // draw all features up front so the result does not depend on threading
    let mut featured: Vec<Vec<BipartiteGraph>> = Vec::with_capacity(draws);
    for _ in 0..draws {
        featured.push(samples.iter().map(|s| featurize(model, &s.graph, rng)).collect());
    }
    let mut sums = vec![0.0; samples.len()];
    for graphs in &featured {
        let chunks: Vec<Vec<f64>> = graphs
            .par_chunks(64)
            .map(|chunk| model.forward(&batch(chunk)?))
            .collect::<Result<_, NnError>>()?;
        sums.iter_mut().zip(chunks.concat()).for_each(|(s, y)| *s += y);
    }
    Ok(sums.into_iter().map(|s| s / draws as f64).collect())
}

pub fn evaluate(model: &GnnModel, samples: &[Sample], redraws: usize, seed: u64) -> Result<Evaluation, NnError> {
    check_samples(samples)?;
    let mut rng = epoch_rng(seed, TEST_STREAM);
    let predictions = predict(model, samples, redraws, &mut rng)?;
    Ok(evaluation_of(predictions, samples))
}

fn evaluation_of(predictions: Vec<f64>, samples: &[Sample]) -> Evaluation {
    let mut confusion = Confusion::default();
    for (y, s) in predictions.iter().zip(samples) {
        confusion.record(classify(*y), s.label);
    }
    Evaluation { accuracy: confusion.accuracy(), confusion, predictions }
}

/// Gradient of the mean batch loss. In non-deterministic mode the batch is
/// split across the rayon pool and the per-chunk gradients are combined in
/// chunk order.
fn batch_gradient(
    model: &GnnModel,
    graphs: &[BipartiteGraph],
    targets: &[f64],
    kind: LossKind,
    deterministic: bool,
) -> Result<(f64, Vec<f64>, Vec<Tensor>), NnError> {
    let chunks = if deterministic { 1 } else { rayon::current_num_threads().min(graphs.len()).max(1) };
    if chunks == 1 {
        let b = model.backward(&batch(graphs)?, targets, kind)?;
        return Ok((b.loss, b.predictions, b.grads));
    }
    let size = graphs.len().div_ceil(chunks);
    let parts: Vec<_> = graphs
        .par_chunks(size)
        .zip(targets.par_chunks(size))
        .map(|(g, t)| model.backward(&batch(g)?, t, kind).map(|b| (g.len(), b)))
        .collect::<Result<_, NnError>>()?;
    let total = graphs.len() as f64;
    let mut grads: Vec<Tensor> = model.params().iter().map(Tensor::zeros_like).collect();
    let mut loss = 0.0;
    let mut predictions = Vec::with_capacity(graphs.len());
    for (len, b) in parts {
        let w = len as f64 / total;
        loss += w * b.loss;
        predictions.extend(b.predictions);
        for (acc, g) in grads.iter_mut().zip(b.grads) {
            acc.data_mut().iter_mut().zip(g.data()).for_each(|(a, x)| *a += w * x);
        }
    }
    Ok((loss, predictions, grads))
}

pub fn train(splits: &Splits, cfg: &TrainConfig) -> Result<TrainOutcome, NnError> {
    let model = GnnModel::init(cfg.gnn()?, cfg.seed);
    train_from(model, splits, cfg, |_| {})
}

/// Trains `model` in place of a fresh initialisation; `on_epoch` sees each
/// epoch's metrics as they are produced.
pub fn train_from(
    mut model: GnnModel,
    splits: &Splits,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<TrainOutcome, NnError> {
    cfg.validate()?;
    if model.config() != &cfg.gnn()? {
        return Err(NnError::Config("model shape differs from the training configuration".into()));
    }
    for (name, s) in [("train", &splits.train), ("valid", &splits.valid), ("test", &splits.test)] {
        if s.is_empty() {
            return Err(NnError::EmptySplit(name));
        }
        check_samples(s)?;
    }
    let start = Instant::now();
    let mut state = AdamState::new(model.params());
    let mut best = (0usize, f64::NEG_INFINITY, model.clone());
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..splits.train.len()).collect();
    let frozen: Option<Vec<BipartiteGraph>> = cfg.freeze_rni.then(|| {
        let mut rng = epoch_rng(cfg.seed, FROZEN_STREAM);
        splits.train.iter().map(|s| featurize(&model, &s.graph, &mut rng)).collect()
    });

    for epoch in 0..cfg.epochs {
        let epoch_start = Instant::now();
        let stream = 3 * epoch as u64;
        order.sort_unstable();
        order.shuffle(&mut epoch_rng(cfg.seed, stream));
        let mut rni_rng = epoch_rng(cfg.seed, stream + 1);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for idx in order.chunks(cfg.batch_size) {
            let graphs: Vec<BipartiteGraph> = idx
                .iter()
                .map(|&i| match &frozen {
                    Some(f) => f[i].clone(),
                    None => featurize(&model, &splits.train[i].graph, &mut rni_rng),
                })
                .collect();
            let targets: Vec<f64> = idx.iter().map(|&i| f64::from(splits.train[i].label)).collect();
            let (loss, predictions, grads) = batch_gradient(&model, &graphs, &targets, cfg.loss, cfg.deterministic)?;
            loss_sum += loss * idx.len() as f64;
            correct += predictions.iter().zip(&targets).filter(|(p, &t)| f64::from(classify(**p)) == t).count();
            adam_step(model.params_mut(), &grads, &mut state, cfg.learning_rate)?;
        }
        let mut valid_rng = epoch_rng(cfg.seed, stream + 2);
        let valid = evaluation_of(predict(&model, &splits.valid, cfg.eval_redraws, &mut valid_rng)?, &splits.valid);
        let metrics = EpochMetrics {
            epoch: epoch + 1,
            train_loss: loss_sum / splits.train.len() as f64,
            train_accuracy: correct as f64 / splits.train.len() as f64,
            valid_accuracy: valid.accuracy,
            seconds: epoch_start.elapsed().as_secs_f64(),
        };
        if valid.accuracy > best.1 {
            best = (epoch + 1, valid.accuracy, model.clone());
        }
        on_epoch(&metrics);
        history.push(metrics);
    }

    let (best_epoch, best_valid, best_model) = best;
    let best_valid = if best_valid.is_finite() { best_valid } else { 0.0 };
    let test = evaluate(&best_model, &splits.test, cfg.eval_redraws, cfg.seed)?;
    Ok(TrainOutcome {
        model: best_model,
        last: model,
        metrics: Metrics {
            history,
            best_epoch,
            best_valid_accuracy: best_valid,
            test_accuracy: test.accuracy,
            test_confusion: test.confusion,
            runtime_seconds: start.elapsed().as_secs_f64(),
        },
    })
}
