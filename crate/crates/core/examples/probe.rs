//! Scratch experiment: train all variants on the planted fixture and print
//! test metrics. Used to calibrate defaults; not part of the test suite.

use std::time::Instant;

use xdrec_core::evaluation::{evaluate_model, missed_cold_users, EvalSplit};
use xdrec_core::model::Variant;
use xdrec_core::numerics::Hyperparams;
use xdrec_core::synthgen::{generate, SynthConfig};
use xdrec_core::training::{train, TrainConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let d: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(16);
    let lr: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.01);
    let epochs: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(30);
    let batch: usize = args.get(12).and_then(|s| s.parse().ok()).unwrap_or(128);
    let ttemp: f64 = args.get(13).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let seeds: u64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(3);
    let wx: f64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(0.4);
    let wt: f64 = args.get(6).and_then(|s| s.parse().ok()).unwrap_or(0.3);
    let patience: usize = args.get(7).and_then(|s| s.parse().ok()).unwrap_or(5);
    let topics: usize = args.get(8).and_then(|s| s.parse().ok()).unwrap_or(8);
    let min_inter: usize = args.get(9).and_then(|s| s.parse().ok()).unwrap_or(12);
    let max_inter: usize = args.get(10).and_then(|s| s.parse().ok()).unwrap_or(12);
    let source_inter: usize = args.get(11).and_then(|s| s.parse().ok()).unwrap_or(12);

    let base = std::env::temp_dir().join(format!("probe-{}", std::process::id()));
    let mut synth = SynthConfig::small();
    synth.cross_weight = wx;
    synth.text_weight = wt;
    synth.num_topics = topics;
    synth.min_interactions = min_inter;
    synth.max_interactions = max_inter;
    synth.source_interactions = source_inter;
    synth.seed = 7;
    let dataset = generate(&synth, &base.join("data")).unwrap();
    println!(
        "dataset: {} users, {} items, {} train pairs, vocab {}",
        dataset.num_users,
        dataset.num_target_items,
        dataset.train.len(),
        dataset.vocab.len()
    );

    for variant in Variant::ALL {
        let mut hrs = Vec::new();
        let mut ndcgs = Vec::new();
        let mut colds = Vec::new();
        for seed in 1..=seeds {
            let started = Instant::now();
            let mut hyper = Hyperparams::with_dim(d);
            hyper.learning_rate = lr;
            hyper.epochs = epochs;
            hyper.seed = seed;
            hyper.batch_size = batch;
            hyper.tnet_temp = ttemp;
            hyper.vocab_size = dataset.vocab.len();
            hyper.max_doc_len = synth.words_per_doc;
            let ckpt = base.join(format!("{variant}-{seed}.ckpt"));
            let mut config = TrainConfig::new(hyper.clone(), ckpt);
            config.patience = patience;
            let (params, log) = train(&dataset, &config, variant).unwrap();
            let report = evaluate_model(
                &params,
                variant,
                hyper.beta,
                hyper.tnet_temp,
                &dataset,
                EvalSplit::Test,
                &[5, 10, 20],
                999,
                1,
            )
            .unwrap();
            let row = report.row(10).unwrap();
            hrs.push(row.hr);
            ndcgs.push(row.ndcg);
            colds.push(missed_cold_users(&report, 10, 7));
            println!(
                "  {variant} seed {seed}: hr@10 {:.4} ndcg@10 {:.4} cold-miss {} epochs {} loss1 {:.4} lossN {:.4} ({:.1}s)",
                row.hr,
                row.ndcg,
                colds.last().unwrap(),
                log.records.len(),
                log.records.first().map(|r| r.mean_loss).unwrap_or(0.0),
                log.records.last().map(|r| r.mean_loss).unwrap_or(0.0),
                started.elapsed().as_secs_f64(),
            );
        }
        hrs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ndcgs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        println!(
            "{variant}: median hr@10 {:.4} ndcg@10 {:.4}",
            hrs[hrs.len() / 2],
            ndcgs[ndcgs.len() / 2]
        );
    }
    std::fs::remove_dir_all(&base).ok();
}
