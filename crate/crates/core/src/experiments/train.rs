use std::time::Instant;

use super::{EpochRow, Precision, RunRecord, Task, TrainConfig};
use crate::data::{Dataset, Targets};
use crate::error::{Error, Result};
use crate::ndcore::Mat;
use crate::network::Sequential;
use crate::optim::{mse_loss, softmax_cross_entropy};
use crate::rng::Rng;

const EVAL_CHUNK: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    /// Accuracy for classification, MSE for regression.
    pub metric: f64,
}

pub fn task_of(ds: &Dataset) -> Task {
    match ds.targets {
        Targets::Labels { .. } => Task::Classify,
        Targets::Values(_) => Task::Regress,
    }
}

/// Fraction of rows whose argmax (lowest index on ties) equals the label.
pub fn accuracy(logits: &Mat, labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let hits = logits
        .iter_rows()
        .zip(labels)
        .filter(|(row, &label)| argmax(row) == label)
        .count();
    hits as f64 / labels.len() as f64
}

pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = k;
        }
    }
    best
}

fn batch_loss(pred: &Mat, targets: &Targets, indices: &[usize]) -> Result<(f64, Mat)> {
    match targets {
        Targets::Labels { labels, .. } => {
            let batch: Vec<usize> = indices.iter().map(|&i| labels[i]).collect();
            softmax_cross_entropy(pred, &batch)
        }
        Targets::Values(y) => mse_loss(pred, &y.select_rows(indices)),
    }
}

/// Loss and metric of a frozen model over a whole dataset.
pub fn evaluate(model: &Sequential, ds: &Dataset) -> Result<Evaluation> {
    let n = ds.len();
    if n == 0 {
        return Err(Error::InvalidArgument("cannot evaluate on an empty dataset".into()));
    }
    let mut loss_sum = 0.0;
    let mut metric_sum = 0.0;
    let all: Vec<usize> = (0..n).collect();
    for chunk in all.chunks(EVAL_CHUNK) {
        let pred = model.infer(&ds.features.select_rows(chunk))?;
        let (loss, _) = batch_loss(&pred, &ds.targets, chunk)?;
        let w = chunk.len() as f64;
        loss_sum += loss * w;
        if let Targets::Labels { labels, .. } = &ds.targets {
            let batch: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            metric_sum += accuracy(&pred, &batch) * w;
        }
    }
    let loss = loss_sum / n as f64;
    let metric = match task_of(ds) {
        Task::Classify => metric_sum / n as f64,
        // mse_loss averages over all output entries, so it already is the metric
        Task::Regress => loss,
    };
    Ok(Evaluation { loss, metric })
}

fn check_compatible(model: &Sequential, ds: &Dataset, which: &str) -> Result<()> {
    if ds.is_empty() {
        return Err(Error::InvalidArgument(format!("{which} set is empty")));
    }
    if ds.input_dim() != model.input_dim() {
        return Err(Error::shape(
            "train",
            format!("{which} features with {} columns", model.input_dim()),
            format!("{}", ds.input_dim()),
        ));
    }
    let out = model.output_dim();
    match &ds.targets {
        Targets::Labels { classes, .. } if *classes != out => Err(Error::shape(
            "train",
            format!("{which} labels over {out} classes"),
            format!("{classes}"),
        )),
        Targets::Values(y) if y.cols() != out => Err(Error::shape(
            "train",
            format!("{which} targets with {out} columns"),
            format!("{}", y.cols()),
        )),
        _ => Ok(()),
    }
}

fn round_params(model: &mut Sequential, precision: Precision) -> Result<()> {
    if precision == Precision::F32 {
        model.for_each_param_group(|_, p, _| {
            p.iter_mut().for_each(|v| *v = precision.round(*v));
            Ok(())
        })?;
    }
    Ok(())
}

fn round_features(ds: &Dataset, precision: Precision) -> Dataset {
    let mut out = ds.clone();
    if precision == Precision::F32 {
        out.features = ds.features.map(|v| precision.round(v));
    }
    out
}

/// Minibatch training. Epoch `e` visits the training set in the order drawn
/// from stream `e` of the `"shuffle"` generator, so a run is a pure function
/// of `(model, data, cfg)`.
pub fn train(model: &mut Sequential, train_ds: &Dataset, test_ds: &Dataset, cfg: &TrainConfig) -> Result<RunRecord> {
    cfg.validate()?;
    check_compatible(model, train_ds, "train")?;
    check_compatible(model, test_ds, "test")?;
    if task_of(train_ds) != task_of(test_ds) {
        return Err(Error::InvalidArgument("train and test sets have different target types".into()));
    }
    let start = Instant::now();
    let train_ds = round_features(train_ds, cfg.precision);
    let test_ds = round_features(test_ds, cfg.precision);
    round_params(model, cfg.precision)?;

    let mut optimizer = cfg.optimizer.build(cfg.lr)?;
    let shuffle = Rng::named(cfg.seed, "shuffle");
    let mut rows = Vec::with_capacity(cfg.epochs + 1);

    let initial_train = evaluate(model, &train_ds)?;
    let initial_test = evaluate(model, &test_ds)?;
    rows.push(EpochRow {
        epoch: 0,
        train_loss: initial_train.loss,
        test_loss: initial_test.loss,
        metric: initial_test.metric,
    });

    model.set_training(true);
    for epoch in 1..=cfg.epochs {
        let order = shuffle.substream_index(epoch as u64).permutation(train_ds.len());
        let mut loss_sum = 0.0;
        for (batch_idx, indices) in order.chunks(cfg.batch_size).enumerate() {
            let x = train_ds.features.select_rows(indices);
            let pred = model.forward(&x)?;
            let (loss, grad) = batch_loss(&pred, &train_ds.targets, indices)?;
            if !loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    batch: batch_idx,
                });
            }
            loss_sum += loss * indices.len() as f64;
            model.backward_params(&grad)?;
            optimizer.step(model)?;
            round_params(model, cfg.precision)?;
        }
        let test = evaluate(model, &test_ds)?;
        if !test.loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                batch: order.len().div_ceil(cfg.batch_size),
            });
        }
        rows.push(EpochRow {
            epoch,
            train_loss: loss_sum / train_ds.len() as f64,
            test_loss: test.loss,
            metric: test.metric,
        });
    }
    model.set_training(false);

    Ok(RunRecord {
        task: task_of(&train_ds),
        rows,
        param_count: model.param_count(),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}
