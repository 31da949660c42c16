//! Scratch: score the planted fixture with oracle subsets of the true
//! affinity to bound what each branch can contribute.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xdrec_core::evaluation::{evaluate_with_scorer, EvalSplit};
use xdrec_core::numerics::{derive_seed, gaussian};
use xdrec_core::synthgen::{generate, SynthConfig};

fn unit_vectors<R: Rng>(count: usize, dim: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| loop {
            let v: Vec<f64> = (0..dim).map(|_| gaussian(rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-9 {
                break v.into_iter().map(|x| x / norm).collect::<Vec<f64>>();
            }
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let wx: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.4);
    let wt: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.3);

    let mut synth = SynthConfig::small();
    synth.cross_weight = wx;
    synth.text_weight = wt;
    synth.latent_scale = std::env::args().nth(3).and_then(|s| s.parse().ok()).unwrap_or(2.0);
    synth.seed = 7;
    let dir = std::env::temp_dir().join(format!("oracle-{}", std::process::id()));
    let ds = generate(&synth, &dir).unwrap();

    // Replicate the generator's latent draws (same streams).
    let k = synth.latent_dim;
    let mut latent_rng = ChaCha8Rng::seed_from_u64(derive_seed(synth.seed, 1, 0));
    let theta = unit_vectors(synth.num_users, k, &mut latent_rng);
    let phi = unit_vectors(synth.num_target_items, k, &mut latent_rng);
    let psi = unit_vectors(synth.num_source_items, k, &mut latent_rng);
    let taste = unit_vectors(synth.num_users, k, &mut latent_rng);

    let mut topic_rng = ChaCha8Rng::seed_from_u64(derive_seed(synth.seed, 2, 0));
    let item_topic: Vec<usize> = (0..synth.num_target_items)
        .map(|_| topic_rng.gen_range(0..synth.num_topics))
        .collect();
    let user_pref: Vec<usize> = (0..synth.num_users)
        .map(|_| topic_rng.gen_range(0..synth.num_topics))
        .collect();

    let source_lists: Vec<Vec<usize>> = taste
        .iter()
        .map(|t| top_k(&psi.iter().map(|p| dot(t, p)).collect::<Vec<_>>(), synth.source_interactions))
        .collect();
    let mean_psi: Vec<Vec<f64>> = source_lists
        .iter()
        .map(|list| {
            let mut m = vec![0.0; k];
            for &j in list {
                for (a, &b) in m.iter_mut().zip(&psi[j]) {
                    *a += b;
                }
            }
            for a in &mut m {
                *a /= list.len() as f64;
            }
            m
        })
        .collect();

    let sk = synth.latent_scale;
    let w_cf = 1.0 - wx - wt;
    // Dense ids follow first appearance in the emitted files; translate back
    // to generator indices through the persisted raw ids ("u7", "i42").
    let user_gen: Vec<usize> = ds.user_ids.iter().map(|r| r[1..].parse().unwrap()).collect();
    let item_gen: Vec<usize> = ds
        .target_item_ids
        .iter()
        .map(|r| r[1..].parse().unwrap())
        .collect();
    let parts = |u: usize, i: usize| -> (f64, f64, f64) {
        let (u, i) = (user_gen[u], item_gen[i]);
        (
            w_cf * sk * dot(&theta[u], &phi[i]),
            wx * sk * dot(&mean_psi[u], &phi[i]),
            if item_topic[i] == user_pref[u] { wt } else { 0.0 },
        )
    };

    let score_with = |name: &str, f: &(dyn Fn(f64, f64, f64) -> f64 + Sync)| {
        let report = evaluate_with_scorer(&ds, EvalSplit::Test, &[10], 999, 1, |u, i| {
            let (b, c, t) = parts(u as usize, i as usize);
            Ok(f(b, c, t))
        })
        .unwrap();
        let row = report.row(10).unwrap();
        println!("{name:>18}: hr@10 {:.4} ndcg@10 {:.4}", row.hr, row.ndcg);
    };

    score_with("full affinity", &|b, c, t| b + c + t);
    score_with("base+cross (no_m)", &|b, c, _| b + c);
    score_with("base+text (no_t)", &|b, _, t| b + t);
    score_with("base only", &|b, _, _| b);
    score_with("cross+text", &|_, c, t| c + t);
    score_with("text only", &|_, _, t| t);
    score_with("cross only", &|_, c, _| c);

    std::fs::remove_dir_all(&dir).ok();
}
