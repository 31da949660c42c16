//! Mini-batch training: per-epoch negative resampling, shuffled batches,
//! mean-gradient Adam steps, validation-based early stopping, and
//! restoration of the best checkpoint.

use std::path::PathBuf;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{sample_negatives, Dataset};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate_model, EvalSplit};
use crate::model::{accumulate_backward, forward, Example, Variant};
use crate::numerics::{
    adam_step, derive_seed, gaussian, load_checkpoint, save_checkpoint, AdamState, Dims,
    Gradients, Hyperparams, ModelParams, ParamGroup,
};

/// Training configuration on top of the model hyperparameters.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub hyper: Hyperparams,
    /// Stop after this many evaluations without a validation improvement.
    pub patience: usize,
    /// Run the validation ranking every this many epochs.
    pub eval_every: usize,
    /// Where the best checkpoint is written (and restored from).
    pub checkpoint_path: PathBuf,
    /// Worker threads for the validation ranking (training itself is
    /// single-threaded and deterministic).
    pub workers: usize,
}

impl TrainConfig {
    pub fn new(hyper: Hyperparams, checkpoint_path: PathBuf) -> Self {
        TrainConfig {
            hyper,
            patience: 5,
            eval_every: 1,
            checkpoint_path,
            workers: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        if self.patience < 1 {
            return Err(Error::Config("patience must be >= 1".into()));
        }
        if self.eval_every < 1 {
            return Err(Error::Config("eval_every must be >= 1".into()));
        }
        Ok(())
    }
}

/// One epoch's record in the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    /// Validation (HR@10, NDCG@10, MRR@10) when evaluated this epoch.
    pub val: Option<(f64, f64, f64)>,
    pub seconds: f64,
    pub negatives: usize,
    pub skipped_users: usize,
}

/// Per-epoch training history.
#[derive(Debug, Clone, Default)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
}

impl TrainLog {
    /// CSV emission (`epoch,loss,hr10,ndcg10,mrr10[,seconds]`). The timing
    /// column is measurement, not computation; callers comparing runs for
    /// reproducibility exclude it.
    pub fn csv_string(&self, include_timing: bool) -> String {
        let mut s = String::from(if include_timing {
            "epoch,loss,hr10,ndcg10,mrr10,seconds\n"
        } else {
            "epoch,loss,hr10,ndcg10,mrr10\n"
        });
        for r in &self.records {
            let (hr, ndcg, mrr) = match r.val {
                Some((h, n, m)) => (format!("{h:?}"), format!("{n:?}"), format!("{m:?}")),
                None => (String::new(), String::new(), String::new()),
            };
            s.push_str(&format!("{},{:?},{},{},{}", r.epoch, r.mean_loss, hr, ndcg, mrr));
            if include_timing {
                s.push_str(&format!(",{:.3}", r.seconds));
            }
            s.push('\n');
        }
        s
    }
}

/// Initialize every tensor i.i.d. Gaussian with mean 0 and standard
/// deviation 0.01, shapes per `dims` and the variant's fusion width.
pub fn init_params<R: Rng>(dims: Dims, variant: Variant, rng: &mut R) -> ModelParams {
    let mut params = ModelParams::zeros(dims, variant.fusion_width(dims.d));
    for g in ParamGroup::ALL {
        for v in params.group_mut(g) {
            *v = 0.01 * gaussian(rng);
        }
    }
    params
}

/// Binary cross-entropy of `sigmoid(logit)` against a 0/1 label, computed in
/// logit space: `softplus(logit) - label * logit`. Never produces `log(0)`.
pub fn bce_loss(logit: f64, label: f64) -> f64 {
    softplus(logit) - label * logit
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Train one variant on the dataset's train split.
///
/// Each epoch resamples negatives, shuffles the positive+negative pool,
/// takes one Adam step per batch on the mean gradient, and ranks the
/// validation items. The best-validation checkpoint is written to
/// `config.checkpoint_path` and the returned parameters are exactly its
/// loaded contents.
pub fn train(
    dataset: &Dataset,
    config: &TrainConfig,
    variant: Variant,
) -> Result<(ModelParams, TrainLog)> {
    config.validate()?;
    let hyper = &config.hyper;
    let dims = dataset.dims(hyper.d);
    let seed = hyper.seed;

    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1, 0));
    let mut params = init_params(dims, variant, &mut init_rng);
    let mut state = AdamState::new(dims, variant.fusion_width(dims.d));
    let val_seed = derive_seed(seed, 4, 0);

    if let Some(parent) = config.checkpoint_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    // The checkpoint always exists, even if epoch 0 is never improved upon.
    save_checkpoint(&config.checkpoint_path, &params, variant.tag())?;

    let mut log = TrainLog::default();
    let mut best_hr = f64::NEG_INFINITY;
    let mut evals_since_best = 0usize;

    for epoch in 1..=hyper.epochs {
        let started = Instant::now();
        let mut neg_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2, epoch as u64));
        let (negatives, skipped_users) = sample_negatives(
            &dataset.train,
            &dataset.user_positive,
            dataset.num_target_items,
            hyper.neg_ratio,
            &mut neg_rng,
        );
        let negatives_count = negatives.len();

        let mut pool: Vec<(u32, u32, f64)> = Vec::with_capacity(dataset.train.len() + negatives_count);
        pool.extend(dataset.train.iter().map(|&(u, i)| (u, i, 1.0)));
        pool.extend(negatives.into_iter().map(|(u, i)| (u, i, 0.0)));
        let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 3, epoch as u64));
        pool.shuffle(&mut shuffle_rng);

        let mut loss_sum = 0.0f64;
        for (batch_idx, batch) in pool.chunks(hyper.batch_size).enumerate() {
            let mut grads = Gradients::zeros_like(&params);
            for &(u, i, label) in batch {
                let doc = dataset.lookup_document(u, i)?;
                let cache = forward(
                    Example {
                        user: u as usize,
                        item: i as usize,
                        doc,
                        source_items: &dataset.source_items[u as usize],
                    },
                    &params,
                    variant,
                    hyper.beta,
                    hyper.tnet_temp,
                )?;
                let loss = bce_loss(cache.logit, label);
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss {
                        epoch,
                        batch: batch_idx,
                    });
                }
                loss_sum += loss;
                accumulate_backward(&cache, label, &params, variant, 1.0, &mut grads)?;
            }
            grads.scale(1.0 / batch.len() as f64);
            adam_step(&mut params, &grads, &mut state, hyper.learning_rate)?;
        }
        let mean_loss = loss_sum / pool.len() as f64;

        let val = if epoch % config.eval_every == 0 {
            let report = evaluate_model(
                &params,
                variant,
                hyper.beta,
                hyper.tnet_temp,
                dataset,
                EvalSplit::Validation,
                &[10],
                val_seed,
                config.workers,
            )?;
            let row = report.row(10).expect("cutoff 10 requested");
            Some((row.hr, row.ndcg, row.mrr))
        } else {
            None
        };

        log.records.push(EpochRecord {
            epoch,
            mean_loss,
            val,
            seconds: started.elapsed().as_secs_f64(),
            negatives: negatives_count,
            skipped_users,
        });

        if let Some((hr, _, _)) = val {
            if hr > best_hr {
                best_hr = hr;
                log.best_epoch = Some(epoch);
                evals_since_best = 0;
                save_checkpoint(&config.checkpoint_path, &params, variant.tag())?;
            } else {
                evals_since_best += 1;
                if evals_since_best >= config.patience {
                    break;
                }
            }
        }
    }

    let (best_params, _) = load_checkpoint(&config.checkpoint_path)?;
    Ok((best_params, log))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bce_closed_forms() {
        // logit 0 (prediction one half) gives ln 2 for either label.
        assert!((bce_loss(0.0, 1.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((bce_loss(0.0, 0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        // logit 2, label 1: softplus(-2).
        let expect = (1.0 + (-2.0f64).exp()).ln();
        assert!((bce_loss(2.0, 1.0) - expect).abs() < 1e-12);
        assert!((bce_loss(2.0, 1.0) - 0.126928).abs() < 1e-6);
        // Confident correct predictions approach zero loss.
        assert!(bce_loss(30.0, 1.0) < 1e-12);
        assert!(bce_loss(-30.0, 0.0) < 1e-12);
        // Extreme logits stay finite.
        assert!(bce_loss(-800.0, 1.0).is_finite());
        assert!(bce_loss(800.0, 0.0).is_finite());
    }

    #[test]
    fn init_statistics_match_target() {
        let dims = Dims {
            num_users: 1000,
            num_target_items: 200,
            num_source_items: 10,
            d: 120,
            vocab_size: 10,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let params = init_params(dims, Variant::Full, &mut rng);
        let entries = &params.user_emb.data;
        assert!(entries.len() >= 100_000);
        let mean: f64 = entries.iter().sum::<f64>() / entries.len() as f64;
        let var: f64 =
            entries.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / entries.len() as f64;
        assert!(mean.abs() < 0.001, "mean {mean}");
        let std = var.sqrt();
        assert!((std - 0.01).abs() < 0.001, "std {std}");
    }

    #[test]
    fn init_is_seed_deterministic() {
        let dims = Dims {
            num_users: 5,
            num_target_items: 5,
            num_source_items: 5,
            d: 4,
            vocab_size: 8,
        };
        let a = init_params(dims, Variant::NoMemory, &mut ChaCha8Rng::seed_from_u64(3));
        let b = init_params(dims, Variant::NoMemory, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        // Ablation fusion width: two branches, 2d.
        assert_eq!(a.fuse_weight.len(), 2 * dims.d);
    }
}
