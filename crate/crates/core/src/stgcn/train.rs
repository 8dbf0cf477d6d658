use std::ops::Range;

use ndarray::{Array2, Array3, ArrayView3};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{l2_loss, stack_windows, GraphContext, StgcnModel};
use crate::error::{Error, Result};
use crate::ingest::{NormalizationParams, WindowedDataset};
use crate::metrics;
use crate::tensor::{Adam, Tape, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Seeds mini-batch shuffling and dropout masks.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            batch_size: 32,
            epochs: 350,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        Ok(())
    }
}

/// Per-epoch losses. Validation metrics are on normalized values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_mae: f64,
    pub val_rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub history: Vec<EpochRecord>,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
}

fn next_step_targets(ds: &WindowedDataset, idx: &[usize]) -> Result<Tensor> {
    let s = ds.n_stations();
    let mut data = Vec::with_capacity(idx.len() * s);
    for &i in idx {
        let t = ds.end_time(i) + 1;
        data.extend((0..s).map(|st| ds.data[[t, st, ds.target_channel]]));
    }
    Tensor::new(vec![idx.len(), s, 1], data)
}

/// One-step predictions and truths over a window range, flattened window-major.
pub fn evaluate_one_step(
    model: &StgcnModel,
    ds: &WindowedDataset,
    range: Range<usize>,
    ctx: &GraphContext,
    batch_size: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let idx: Vec<usize> = range.collect();
    let mut pred = Vec::with_capacity(idx.len() * ds.n_stations());
    let mut truth = Vec::with_capacity(pred.capacity());
    for chunk in idx.chunks(batch_size.max(1)) {
        let windows: Vec<ArrayView3<'_, f64>> = chunk.iter().map(|&i| ds.input(i)).collect();
        for row in model.predict_batch(&windows, ctx)? {
            pred.extend(row);
        }
        truth.extend(next_step_targets(ds, chunk)?.into_data());
    }
    Ok((pred, truth))
}

/// Persistence baseline: the next value of the target equals its last input.
pub fn persistence_one_step(ds: &WindowedDataset, range: Range<usize>) -> (Vec<f64>, Vec<f64>) {
    let s = ds.n_stations();
    let mut pred = Vec::new();
    let mut truth = Vec::new();
    for i in range {
        let t = ds.end_time(i);
        for st in 0..s {
            pred.push(ds.data[[t, st, ds.target_channel]]);
            truth.push(ds.data[[t + 1, st, ds.target_channel]]);
        }
    }
    (pred, truth)
}

/// Mini-batch Adam on the next-step L2 loss. The model ends up holding the
/// parameters of the epoch with the lowest validation loss (training loss
/// when the validation split is empty).
pub fn train(
    model: &mut StgcnModel,
    ds: &WindowedDataset,
    ctx: &GraphContext,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    if ds.split.train.is_empty() {
        return Err(Error::Validation("training split is empty".into()));
    }
    if ds.n_channels() != model.config.in_channels || ds.history != model.config.history {
        return Err(Error::shape(
            "train",
            &[ds.history, ds.n_channels()],
            &[model.config.history, model.config.in_channels],
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(cfg.lr);
    let mut order: Vec<usize> = ds.split.train.clone().collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, Vec<Tensor>)> = None;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (bi, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let windows: Vec<ArrayView3<'_, f64>> = chunk.iter().map(|&i| ds.input(i)).collect();
            let mut tape = Tape::new();
            let vars = model.register(&mut tape);
            let x = tape.constant(stack_windows(&windows)?);
            let y = tape.constant(next_step_targets(ds, chunk)?);
            let pred = model.forward(&mut tape, &vars, x, ctx, true, &mut rng)?;
            let loss = l2_loss(&mut tape, pred, y)?;
            let value = tape.value(loss).item();
            if !value.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: bi,
                    loss: value,
                });
            }
            tape.backward(loss)?;
            let grads: Vec<Tensor> = vars
                .iter()
                .map(|v| tape.grad(*v).cloned().expect("parameter gradient"))
                .collect();
            adam.step(&mut model.params.tensors, &grads)?;
            loss_sum += value * chunk.len() as f64;
        }
        let train_loss = loss_sum / order.len() as f64;

        let (val_loss, val_mae, val_rmse) = if ds.split.val.is_empty() {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            let (p, t) = evaluate_one_step(model, ds, ds.split.val.clone(), ctx, cfg.batch_size)?;
            let sq: f64 = p.iter().zip(&t).map(|(a, b)| (a - b).powi(2)).sum();
            (
                sq / ds.split.val.len() as f64,
                metrics::mae(&p, &t)?,
                metrics::rmse(&p, &t)?,
            )
        };
        let score = if val_loss.is_nan() { train_loss } else { val_loss };
        if !score.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                batch: 0,
                loss: score,
            });
        }
        if best.as_ref().is_none_or(|(b, _, _)| score < *b) {
            best = Some((score, epoch, model.params.tensors.clone()));
        }
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            val_mae,
            val_rmse,
        });
    }

    let (_, best_epoch, params) = best.expect("at least one epoch");
    model.params.tensors = params;
    Ok(TrainReport { history, best_epoch })
}

/// Iterated rollout from one P×S×K window in original units. Each one-step
/// prediction replaces the target channel of the next frame; other channels
/// hold their last observed value. Returns Q×S forecasts in original units.
pub fn predict(
    model: &StgcnModel,
    ctx: &GraphContext,
    window: ArrayView3<'_, f64>,
    horizon: usize,
    norm: &NormalizationParams,
) -> Result<Array2<f64>> {
    let (p, s, k) = window.dim();
    if p != model.config.history || k != model.config.in_channels || s != ctx.n_nodes() || norm.min.len() != k {
        return Err(Error::shape(
            "predict",
            &[p, s, k],
            &[model.config.history, ctx.n_nodes(), model.config.in_channels],
        ));
    }
    if window.iter().any(|v| !v.is_finite()) {
        return Err(Error::MissingData("forecast window contains missing values".into()));
    }
    let target = model.config.target_channel;
    let mut frames: Array3<f64> = window.to_owned();
    norm.apply_in_place(&mut frames);
    let mut out = rollout(model, ctx, &[frames.view()], horizon)?.remove(0);
    out.mapv_inplace(|v| norm.invert_value(target, v));
    Ok(out)
}

/// Batched iterated rollout on normalized windows; returns one Q×S array per window.
pub fn rollout(
    model: &StgcnModel,
    ctx: &GraphContext,
    windows: &[ArrayView3<'_, f64>],
    horizon: usize,
) -> Result<Vec<Array2<f64>>> {
    let target = model.config.target_channel;
    let mut frames: Vec<Array3<f64>> = windows.iter().map(|w| w.to_owned()).collect();
    let mut out: Vec<Array2<f64>> = frames
        .iter()
        .map(|f| Array2::zeros((horizon, f.dim().1)))
        .collect();
    for q in 0..horizon {
        let views: Vec<ArrayView3<'_, f64>> = frames.iter().map(|f| f.view()).collect();
        let next = model.predict_batch(&views, ctx)?;
        for ((f, o), n) in frames.iter_mut().zip(out.iter_mut()).zip(next) {
            let (p, s, _) = f.dim();
            for st in 0..s {
                o[[q, st]] = n[st];
            }
            let mut rolled = Array3::zeros(f.dim());
            rolled
                .slice_mut(ndarray::s![..p - 1, .., ..])
                .assign(&f.slice(ndarray::s![1.., .., ..]));
            let mut last = f.slice(ndarray::s![p - 1, .., ..]).to_owned();
            for st in 0..s {
                last[[st, target]] = n[st];
            }
            rolled.slice_mut(ndarray::s![p - 1, .., ..]).assign(&last);
            *f = rolled;
        }
    }
    Ok(out)
}
