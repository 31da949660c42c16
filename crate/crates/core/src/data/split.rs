//! Leave-one-out splitting of the target-domain interactions.

use rand::Rng;

/// Disjoint train/validation/test pairs whose union is the input.
#[derive(Debug, Clone, Default)]
pub struct Split {
    pub train: Vec<(u32, u32)>,
    pub val: Vec<(u32, u32)>,
    pub test: Vec<(u32, u32)>,
}

/// Reserve one uniformly chosen test pair and one validation pair per user
/// with at least three interactions. Users below the threshold keep all
/// pairs in train and are excluded from evaluation.
pub fn loo_split<R: Rng>(per_user_items: &[Vec<u32>], rng: &mut R) -> Split {
    let mut split = Split::default();
    for (u, items) in per_user_items.iter().enumerate() {
        let u = u as u32;
        if items.len() < 3 {
            split.train.extend(items.iter().map(|&i| (u, i)));
            continue;
        }
        let test_idx = rng.gen_range(0..items.len());
        let mut rest: Vec<u32> = items
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != test_idx)
            .map(|(_, &i)| i)
            .collect();
        let val_idx = rng.gen_range(0..rest.len());
        let val_item = rest.remove(val_idx);
        split.test.push((u, items[test_idx]));
        split.val.push((u, val_item));
        split.train.extend(rest.into_iter().map(|i| (u, i)));
    }
    split
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_interactions_stay_in_train() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let split = loo_split(&[vec![7, 9]], &mut rng);
        assert_eq!(split.train, vec![(0, 7), (0, 9)]);
        assert!(split.val.is_empty());
        assert!(split.test.is_empty());
    }

    #[test]
    fn ten_interactions_give_eight_one_one() {
        let items: Vec<u32> = (0..10).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let split = loo_split(&[items], &mut rng);
        assert_eq!(split.train.len(), 8);
        assert_eq!(split.val.len(), 1);
        assert_eq!(split.test.len(), 1);
    }

    #[test]
    fn fixed_seed_reproduces_split() {
        let users: Vec<Vec<u32>> = (0..20)
            .map(|u| (0..(3 + u % 7)).map(|k| (u * 13 + k) as u32 % 50).collect())
            .collect();
        let a = loo_split(&users, &mut ChaCha8Rng::seed_from_u64(99));
        let b = loo_split(&users, &mut ChaCha8Rng::seed_from_u64(99));
        assert_eq!(a.train, b.train);
        assert_eq!(a.val, b.val);
        assert_eq!(a.test, b.test);
    }
}
