//! Negative sampling for training and candidate sampling for evaluation.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

/// Number of sampled negatives ranked against the test item.
pub const EVAL_NEGATIVES: usize = 99;

/// Draw `neg_ratio` negatives per train positive, uniformly over the target
/// items the user has never interacted with (train, validation and test
/// pairs all excluded). Users who interacted with every item are skipped;
/// the skip count is returned alongside.
pub fn sample_negatives<R: Rng>(
    train: &[(u32, u32)],
    user_positive: &[HashSet<u32>],
    num_target_items: usize,
    neg_ratio: usize,
    rng: &mut R,
) -> (Vec<(u32, u32)>, usize) {
    let mut negatives = Vec::with_capacity(train.len() * neg_ratio);
    let mut skipped = 0usize;
    for &(u, _) in train {
        let positives = &user_positive[u as usize];
        if positives.len() >= num_target_items {
            skipped += 1;
            continue;
        }
        for _ in 0..neg_ratio {
            loop {
                let cand = rng.gen_range(0..num_target_items) as u32;
                if !positives.contains(&cand) {
                    negatives.push((u, cand));
                    break;
                }
            }
        }
    }
    (negatives, skipped)
}

/// Candidate list for one user's ranked evaluation: `EVAL_NEGATIVES`
/// distinct non-interacted items plus the held-out item, in shuffled order.
///
/// Returns the candidates and the number of distinct negatives available;
/// when fewer than `EVAL_NEGATIVES` exist the whole complement is used and
/// the caller records the degraded count.
pub fn sample_eval_candidates<R: Rng>(
    held_out: u32,
    user_positive: &HashSet<u32>,
    num_target_items: usize,
    rng: &mut R,
) -> (Vec<u32>, usize) {
    let available = num_target_items - user_positive.len();
    let mut negatives: Vec<u32>;
    if available <= 4 * EVAL_NEGATIVES {
        // Complement is small: enumerate it and shuffle.
        negatives = (0..num_target_items as u32)
            .filter(|i| !user_positive.contains(i))
            .collect();
        negatives.shuffle(rng);
        negatives.truncate(EVAL_NEGATIVES);
    } else {
        let mut picked: HashSet<u32> = HashSet::with_capacity(EVAL_NEGATIVES);
        negatives = Vec::with_capacity(EVAL_NEGATIVES);
        while negatives.len() < EVAL_NEGATIVES {
            let cand = rng.gen_range(0..num_target_items) as u32;
            if !user_positive.contains(&cand) && picked.insert(cand) {
                negatives.push(cand);
            }
        }
    }
    let mut candidates = negatives;
    candidates.push(held_out);
    candidates.shuffle(rng);
    (candidates, available)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn positives_of(pairs: &[(u32, u32)], m: usize) -> Vec<HashSet<u32>> {
        let mut sets = vec![HashSet::new(); m];
        for &(u, i) in pairs {
            sets[u as usize].insert(i);
        }
        sets
    }

    #[test]
    fn negative_count_matches_ratio() {
        let train = vec![(0, 1), (0, 2), (1, 0)];
        let sets = positives_of(&train, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (negs, skipped) = sample_negatives(&train, &sets, 50, 1, &mut rng);
        assert_eq!(negs.len(), 3);
        assert_eq!(skipped, 0);
        let (negs2, _) = sample_negatives(&train, &sets, 50, 4, &mut rng);
        assert_eq!(negs2.len(), 12);
    }

    #[test]
    fn negatives_never_hit_positive_set() {
        let train: Vec<(u32, u32)> = (0..40).map(|k| (0, k)).collect();
        let sets = positives_of(&train, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (negs, _) = sample_negatives(&train, &sets, 50, 3, &mut rng);
        for (_, i) in negs {
            assert!(!sets[0].contains(&i));
        }
    }

    #[test]
    fn saturated_user_is_skipped() {
        let train: Vec<(u32, u32)> = (0..5).map(|k| (0, k)).collect();
        let sets = positives_of(&train, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (negs, skipped) = sample_negatives(&train, &sets, 5, 1, &mut rng);
        assert!(negs.is_empty());
        assert_eq!(skipped, 5);
    }

    #[test]
    fn epochs_resample_differently() {
        let train: Vec<(u32, u32)> = (0..1000).map(|k| (k % 10, k % 97)).collect();
        let sets = positives_of(&train, 10);
        let (a, _) = sample_negatives(&train, &sets, 2000, 1, &mut ChaCha8Rng::seed_from_u64(1));
        let (b, _) = sample_negatives(&train, &sets, 2000, 1, &mut ChaCha8Rng::seed_from_u64(2));
        assert_ne!(a, b);
    }

    #[test]
    fn candidates_contain_held_out_once() {
        let positives: HashSet<u32> = [3u32, 8, 15].into_iter().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (cands, available) = sample_eval_candidates(8, &positives, 1000, &mut rng);
        assert_eq!(cands.len(), 100);
        assert_eq!(available, 997);
        assert_eq!(cands.iter().filter(|&&c| c == 8).count(), 1);
        for &c in &cands {
            assert!(c == 8 || !positives.contains(&c));
        }
        let unique: HashSet<u32> = cands.iter().copied().collect();
        assert_eq!(unique.len(), 100);
    }

    #[test]
    fn small_complement_degrades_gracefully() {
        let positives: HashSet<u32> = (0..45).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (cands, available) = sample_eval_candidates(0, &positives, 50, &mut rng);
        assert_eq!(available, 5);
        assert_eq!(cands.len(), 6);
    }

    #[test]
    fn fixed_seed_reproduces_candidates() {
        let positives: HashSet<u32> = [1u32, 2].into_iter().collect();
        let (a, _) = sample_eval_candidates(1, &positives, 500, &mut ChaCha8Rng::seed_from_u64(7));
        let (b, _) = sample_eval_candidates(1, &positives, 500, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
    }
}
