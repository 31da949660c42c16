//! Leave-one-out ranking evaluation: each evaluable user's held-out item is
//! ranked against 99 sampled negatives; hit ratio, NDCG and MRR are computed
//! at several cutoffs, with misses contributing zero to all three.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{sample_eval_candidates, Dataset, EVAL_NEGATIVES};
use crate::error::{Error, Result};
use crate::model::{score_logit, Example, Variant};
use crate::numerics::{derive_seed, ModelParams};

/// Which held-out pair to rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalSplit {
    Validation,
    Test,
}

/// One user's outcome: the held-out item's rank and the user's train count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserPosition {
    pub user: u32,
    pub position: usize,
    pub train_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub k: usize,
    pub hr: f64,
    pub ndcg: f64,
    pub mrr: f64,
}

/// Ranking metrics at every cutoff plus the per-user hit positions.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub rows: Vec<MetricsRow>,
    pub positions: Vec<UserPosition>,
    pub evaluated_users: usize,
    /// Users with fewer than the full complement of candidate negatives.
    pub degraded_candidates: usize,
}

impl MetricsReport {
    pub fn row(&self, k: usize) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.k == k)
    }

    /// CSV with header `K,hr,ndcg,mrr`, one row per cutoff.
    pub fn csv_string(&self) -> String {
        let mut s = String::from("K,hr,ndcg,mrr\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:?},{:?},{:?}\n", r.k, r.hr, r.ndcg, r.mrr));
        }
        s
    }

    /// Per-user TSV (`user_id`, hit position, train-interaction count).
    /// `user_names` supplies raw ids; dense ids are written otherwise.
    pub fn per_user_tsv(&self, user_names: Option<&[String]>) -> String {
        let mut s = String::from("user_id\tp_u\tn_train\n");
        for p in &self.positions {
            match user_names {
                Some(names) => s.push_str(&format!(
                    "{}\t{}\t{}\n",
                    names[p.user as usize], p.position, p.train_count
                )),
                None => s.push_str(&format!("{}\t{}\t{}\n", p.user, p.position, p.train_count)),
            }
        }
        s
    }
}

/// Rank of the held-out item among the candidates, with pessimistic ties:
/// `1 + |strictly greater| + |equal non-test|`.
pub fn rank_position(scores: &[f64], test_index: usize) -> usize {
    let test_score = scores[test_index];
    let mut position = 1usize;
    for (idx, &s) in scores.iter().enumerate() {
        if idx != test_index && s >= test_score {
            position += 1;
        }
    }
    position
}

/// (HR, NDCG, MRR) at cutoff `k` over per-user positions. A miss
/// (`p_u > k`) contributes zero to all three metrics.
pub fn metrics_at_k(positions: &[usize], k: usize) -> Result<(f64, f64, f64)> {
    if positions.is_empty() {
        return Err(Error::NoEvaluatedUsers);
    }
    let n = positions.len() as f64;
    let mut hr = 0.0;
    let mut ndcg = 0.0;
    let mut mrr = 0.0;
    for &p in positions {
        debug_assert!(p >= 1);
        if p <= k {
            hr += 1.0;
            ndcg += std::f64::consts::LN_2 / ((p + 1) as f64).ln();
            mrr += 1.0 / p as f64;
        }
    }
    Ok((hr / n, ndcg / n, mrr / n))
}

/// Evaluate an arbitrary scorer under the leave-one-out protocol.
///
/// Candidate sets depend only on `(seed, dataset, split, user)`, so every
/// model scored at the same seed ranks against identical candidates, and the
/// result is independent of `workers`.
pub fn evaluate_with_scorer<S>(
    dataset: &Dataset,
    split: EvalSplit,
    cutoffs: &[usize],
    seed: u64,
    workers: usize,
    scorer: S,
) -> Result<MetricsReport>
where
    S: Fn(u32, u32) -> Result<f64> + Sync,
{
    let held_out = match split {
        EvalSplit::Validation => &dataset.val,
        EvalSplit::Test => &dataset.test,
    };
    let stream = match split {
        EvalSplit::Validation => 11u64,
        EvalSplit::Test => 12u64,
    };

    let eval_one = |&(user, item): &(u32, u32)| -> Result<(UserPosition, bool)> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, stream, user as u64));
        let (candidates, available) = sample_eval_candidates(
            item,
            &dataset.user_positive[user as usize],
            dataset.num_target_items,
            &mut rng,
        );
        let mut scores = Vec::with_capacity(candidates.len());
        for &c in &candidates {
            scores.push(scorer(user, c)?);
        }
        let test_index = candidates
            .iter()
            .position(|&c| c == item)
            .expect("held-out item is always a candidate");
        let position = rank_position(&scores, test_index);
        Ok((
            UserPosition {
                user,
                position,
                train_count: dataset.train_counts[user as usize],
            },
            available < EVAL_NEGATIVES,
        ))
    };

    let outcomes: Vec<(UserPosition, bool)> = if workers > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        pool.install(|| held_out.par_iter().map(eval_one).collect::<Result<Vec<_>>>())?
    } else {
        held_out.iter().map(eval_one).collect::<Result<Vec<_>>>()?
    };

    let positions: Vec<UserPosition> = outcomes.iter().map(|(p, _)| *p).collect();
    let degraded_candidates = outcomes.iter().filter(|(_, d)| *d).count();
    let raw_positions: Vec<usize> = positions.iter().map(|p| p.position).collect();
    let mut rows = Vec::with_capacity(cutoffs.len());
    for &k in cutoffs {
        let (hr, ndcg, mrr) = metrics_at_k(&raw_positions, k)?;
        rows.push(MetricsRow { k, hr, ndcg, mrr });
    }
    Ok(MetricsReport {
        rows,
        evaluated_users: positions.len(),
        positions,
        degraded_candidates,
    })
}

/// Evaluate a trained model: each candidate pair is scored by the variant's
/// forward pass with the dataset's document fallback and the user's source
/// history.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_model(
    params: &ModelParams,
    variant: Variant,
    beta: f64,
    tnet_temp: f64,
    dataset: &Dataset,
    split: EvalSplit,
    cutoffs: &[usize],
    seed: u64,
    workers: usize,
) -> Result<MetricsReport> {
    evaluate_with_scorer(dataset, split, cutoffs, seed, workers, |user, item| {
        let doc = dataset.lookup_document(user, item)?;
        score_logit(
            Example {
                user: user as usize,
                item: item as usize,
                doc,
                source_items: &dataset.source_items[user as usize],
            },
            params,
            variant,
            beta,
            tnet_temp,
        )
    })
}

/// Histogram of missed hits at cutoff `k`, keyed by the user's target-train
/// interaction count.
pub fn missed_hit_distribution(report: &MetricsReport, k: usize) -> BTreeMap<usize, usize> {
    let mut bins = BTreeMap::new();
    for p in &report.positions {
        if p.position > k {
            *bins.entry(p.train_count).or_insert(0) += 1;
        }
    }
    bins
}

/// Total missed hits among users with train counts at or below `max_train`.
pub fn missed_cold_users(report: &MetricsReport, k: usize, max_train: usize) -> usize {
    missed_hit_distribution(report, k)
        .into_iter()
        .filter(|&(count, _)| count <= max_train)
        .map(|(_, n)| n)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unique_max_ranks_first() {
        let scores = [0.1, 0.9, 0.3, 0.2];
        assert_eq!(rank_position(&scores, 1), 1);
    }

    #[test]
    fn all_ties_rank_last() {
        let scores = [0.5; 100];
        assert_eq!(rank_position(&scores, 42), 100);
    }

    #[test]
    fn metrics_formulas_at_small_cases() {
        // All hits at position 1.
        let (hr, ndcg, mrr) = metrics_at_k(&[1, 1, 1], 5).unwrap();
        assert_eq!((hr, ndcg, mrr), (1.0, 1.0, 1.0));

        // One user at position 3 with k=5: NDCG = ln2/ln4 = 0.5, MRR = 1/3.
        let (hr, ndcg, mrr) = metrics_at_k(&[3], 5).unwrap();
        assert_eq!(hr, 1.0);
        assert!((ndcg - 0.5).abs() < 1e-12);
        assert!((mrr - 1.0 / 3.0).abs() < 1e-12);

        // Miss: everything zero.
        let (hr, ndcg, mrr) = metrics_at_k(&[7], 5).unwrap();
        assert_eq!((hr, ndcg, mrr), (0.0, 0.0, 0.0));
    }

    #[test]
    fn empty_positions_error() {
        assert!(metrics_at_k(&[], 10).is_err());
    }

    #[test]
    fn per_user_metric_ordering() {
        for p in 1..=100usize {
            let inv = 1.0 / p as f64;
            let gain = std::f64::consts::LN_2 / ((p + 1) as f64).ln();
            assert!(inv <= gain + 1e-12);
            assert!(gain <= 1.0 + 1e-12);
        }
    }
}
