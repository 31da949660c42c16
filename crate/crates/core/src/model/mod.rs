//! The hybrid cross-domain model: a word-attention branch over the pair's
//! document (MNet), an attentive transfer branch over the user's
//! source-domain items (TNet), a one-hidden-layer interaction branch (CFNet),
//! and a shared sigmoid output layer over the concatenated branch outputs.

mod backward;
pub mod fixtures;

pub use backward::{accumulate_backward, backward};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::{affine, dot, relu, scaled_softmax, sigmoid, ModelParams};

/// Which branches participate in the prediction.
///
/// The fusion layer weight is sized to the active branches: 3d for `Full`,
/// 2d for the single-ablation variants, d for `CfOnly`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Text + interaction + transfer.
    Full,
    /// Text branch removed (interaction + transfer).
    NoMemory,
    /// Transfer branch removed (text + interaction).
    NoTransfer,
    /// Interaction branch only; a one-hidden-layer MLP recommender.
    CfOnly,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Full,
        Variant::NoMemory,
        Variant::NoTransfer,
        Variant::CfOnly,
    ];

    pub fn uses_memory(self) -> bool {
        matches!(self, Variant::Full | Variant::NoTransfer)
    }

    pub fn uses_transfer(self) -> bool {
        matches!(self, Variant::Full | Variant::NoMemory)
    }

    pub fn fusion_width(self, d: usize) -> usize {
        match self {
            Variant::Full => 3 * d,
            Variant::NoMemory | Variant::NoTransfer => 2 * d,
            Variant::CfOnly => d,
        }
    }

    pub fn tag(self) -> u64 {
        match self {
            Variant::Full => 0,
            Variant::NoMemory => 1,
            Variant::NoTransfer => 2,
            Variant::CfOnly => 3,
        }
    }

    pub fn from_tag(tag: u64) -> Result<Variant> {
        match tag {
            0 => Ok(Variant::Full),
            1 => Ok(Variant::NoMemory),
            2 => Ok(Variant::NoTransfer),
            3 => Ok(Variant::CfOnly),
            _ => Err(Error::Config(format!("unknown variant tag {tag}"))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Variant::Full => "FULL",
            Variant::NoMemory => "NO_M",
            Variant::NoTransfer => "NO_T",
            Variant::CfOnly => "CF_ONLY",
        };
        f.write_str(name)
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Variant> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "full" => Ok(Variant::Full),
            "no_m" => Ok(Variant::NoMemory),
            "no_t" => Ok(Variant::NoTransfer),
            "cf_only" => Ok(Variant::CfOnly),
            other => Err(Error::Config(format!(
                "unknown variant '{other}' (expected full|no_m|no_t|cf_only)"
            ))),
        }
    }
}

/// One scoring input: a user, a candidate target item, the pair's document
/// tokens and the user's source-domain item history.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub user: usize,
    pub item: usize,
    pub doc: &'a [u32],
    pub source_items: &'a [u32],
}

/// Every intermediate of one forward pass, retained for the backward pass
/// and for attention inspection.
///
/// `word_weights` and `source_weights` are the attention distributions over
/// the document tokens and the user's source items; both are empty exactly
/// when their input list is empty or their branch is ablated.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub variant: Variant,
    pub d: usize,
    /// Softmax temperatures the pass was computed with.
    pub beta: f64,
    pub tnet_temp: f64,
    pub user: usize,
    pub item: usize,
    pub doc: Vec<u32>,
    pub source_items: Vec<u32>,
    /// User embedding (d) and item embedding (d).
    pub x_u: Vec<f64>,
    pub x_i: Vec<f64>,
    /// Concatenated [x_u, x_i] (2d).
    pub x_ui: Vec<f64>,
    /// Word attention scores q_k and weights p_k (one per doc token).
    pub word_scores: Vec<f64>,
    pub word_weights: Vec<f64>,
    /// Text branch output o_ui (d); zero when the doc is empty or ablated.
    pub text_out: Vec<f64>,
    /// Source-item similarity scores a_j and weights alpha_j.
    pub source_scores: Vec<f64>,
    pub source_weights: Vec<f64>,
    /// Transfer vector before and after ReLU (d).
    pub transfer_pre: Vec<f64>,
    pub transfer_out: Vec<f64>,
    /// Interaction hidden layer before and after ReLU (d).
    pub cf_pre: Vec<f64>,
    pub cf_out: Vec<f64>,
    /// Concatenated mapped branch outputs (fusion width).
    pub fused: Vec<f64>,
    pub logit: f64,
    /// Predicted interaction probability, strictly inside (0, 1).
    pub prediction: f64,
}

fn check_id(kind: &'static str, id: usize, limit: usize) -> Result<()> {
    if id >= limit {
        return Err(Error::IdOutOfRange { kind, id, limit });
    }
    Ok(())
}

struct MnetParts {
    scores: Vec<f64>,
    weights: Vec<f64>,
    out: Vec<f64>,
}

fn mnet_parts(x_ui: &[f64], doc: &[u32], params: &ModelParams, beta: f64) -> Result<MnetParts> {
    let d = params.dims.d;
    if doc.is_empty() {
        return Ok(MnetParts {
            scores: vec![],
            weights: vec![],
            out: vec![0.0; d],
        });
    }
    let mut scores = Vec::with_capacity(doc.len());
    for &w in doc {
        check_id("token", w as usize, params.dims.vocab_size)?;
        scores.push(dot(x_ui, params.word_key.row(w as usize))?);
    }
    let weights = scaled_softmax(&scores, beta)?;
    let mut out = vec![0.0; d];
    for (&w, &p) in doc.iter().zip(&weights) {
        let value = params.word_value.row(w as usize);
        for (o, &v) in out.iter_mut().zip(value) {
            *o += p * v;
        }
    }
    Ok(MnetParts {
        scores,
        weights,
        out,
    })
}

struct TnetParts {
    scores: Vec<f64>,
    weights: Vec<f64>,
    pre: Vec<f64>,
    out: Vec<f64>,
}

fn tnet_parts(x_i: &[f64], source_items: &[u32], params: &ModelParams, temp: f64) -> Result<TnetParts> {
    let d = params.dims.d;
    if source_items.is_empty() {
        return Ok(TnetParts {
            scores: vec![],
            weights: vec![],
            pre: vec![0.0; d],
            out: vec![0.0; d],
        });
    }
    let mut scores = Vec::with_capacity(source_items.len());
    for &j in source_items {
        check_id("source item", j as usize, params.dims.num_source_items)?;
        scores.push(dot(x_i, params.source_emb.row(j as usize))?);
    }
    let weights = scaled_softmax(&scores, temp)?;
    let mut pre = vec![0.0; d];
    for (&j, &a) in source_items.iter().zip(&weights) {
        let emb = params.source_emb.row(j as usize);
        for (p, &v) in pre.iter_mut().zip(emb) {
            *p += a * v;
        }
    }
    let out = relu(&pre);
    Ok(TnetParts {
        scores,
        weights,
        pre,
        out,
    })
}

/// Text branch: attention over the document's words keyed by the user-item
/// pair, then a weighted readout of the word value memories.
///
/// Returns `(o_ui, p)`. An empty document yields a zero output and empty
/// weights; attention over nothing is never computed.
pub fn mnet_forward(
    user: usize,
    item: usize,
    doc: &[u32],
    params: &ModelParams,
    beta: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_id("user", user, params.dims.num_users)?;
    check_id("target item", item, params.dims.num_target_items)?;
    let x_ui = concat(params.user_emb.row(user), params.target_emb.row(item));
    let parts = mnet_parts(&x_ui, doc, params, beta)?;
    Ok((parts.out, parts.weights))
}

/// Transfer branch: softmax over target-source item similarities, then a
/// ReLU'd weighted sum of source-item embeddings.
///
/// Returns `(c_ui, alpha)`. An empty source history yields a zero transfer
/// vector and empty weights.
pub fn tnet_forward(
    item: usize,
    source_items: &[u32],
    params: &ModelParams,
    temp: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_id("target item", item, params.dims.num_target_items)?;
    let parts = tnet_parts(params.target_emb.row(item), source_items, params, temp)?;
    Ok((parts.out, parts.weights))
}

/// Interaction branch: `z_ui = ReLU(W^T [x_u, x_i] + b)`.
pub fn cfnet_forward(user: usize, item: usize, params: &ModelParams) -> Result<Vec<f64>> {
    check_id("user", user, params.dims.num_users)?;
    check_id("target item", item, params.dims.num_target_items)?;
    let x_ui = concat(params.user_emb.row(user), params.target_emb.row(item));
    Ok(relu(&affine(&params.cf_weight, &x_ui, &params.cf_bias)?))
}

/// Map each active branch output through its linear layer, concatenate, and
/// squash the shared-layer inner product to a probability.
///
/// Inactive branches are ignored entirely. Returns `(r_hat, logit)`.
pub fn fuse_predict(
    text_out: &[f64],
    cf_out: &[f64],
    transfer_out: &[f64],
    params: &ModelParams,
    variant: Variant,
) -> Result<(f64, f64)> {
    let fused = fuse_blocks(text_out, cf_out, transfer_out, params, variant)?;
    let logit = dot(&params.fuse_weight, &fused)?;
    Ok((sigmoid(logit), logit))
}

fn fuse_blocks(
    text_out: &[f64],
    cf_out: &[f64],
    transfer_out: &[f64],
    params: &ModelParams,
    variant: Variant,
) -> Result<Vec<f64>> {
    let d = params.dims.d;
    let want = variant.fusion_width(d);
    if params.fuse_weight.len() != want {
        return Err(Error::Shape {
            op: "fuse_predict",
            detail: format!(
                "fuse_weight has length {} but variant {variant} needs {want}",
                params.fuse_weight.len()
            ),
        });
    }
    let zeros = vec![0.0; d];
    let mut fused = Vec::with_capacity(want);
    if variant.uses_memory() {
        fused.extend(affine(&params.map_text, text_out, &zeros)?);
    }
    fused.extend(affine(&params.map_cf, cf_out, &zeros)?);
    if variant.uses_transfer() {
        fused.extend(affine(&params.map_transfer, transfer_out, &zeros)?);
    }
    Ok(fused)
}

fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

/// Full forward pass for one example. The returned cache holds every
/// intermediate the backward pass needs plus the attention weights.
pub fn forward(
    example: Example<'_>,
    params: &ModelParams,
    variant: Variant,
    beta: f64,
    tnet_temp: f64,
) -> Result<ForwardCache> {
    let d = params.dims.d;
    check_id("user", example.user, params.dims.num_users)?;
    check_id("target item", example.item, params.dims.num_target_items)?;

    let x_u = params.user_emb.row(example.user).to_vec();
    let x_i = params.target_emb.row(example.item).to_vec();
    let x_ui = concat(&x_u, &x_i);

    let mnet = if variant.uses_memory() {
        mnet_parts(&x_ui, example.doc, params, beta)?
    } else {
        MnetParts {
            scores: vec![],
            weights: vec![],
            out: vec![0.0; d],
        }
    };
    let tnet = if variant.uses_transfer() {
        tnet_parts(&x_i, example.source_items, params, tnet_temp)?
    } else {
        TnetParts {
            scores: vec![],
            weights: vec![],
            pre: vec![0.0; d],
            out: vec![0.0; d],
        }
    };
    let cf_pre = affine(&params.cf_weight, &x_ui, &params.cf_bias)?;
    let cf_out = relu(&cf_pre);

    let fused = fuse_blocks(&mnet.out, &cf_out, &tnet.out, params, variant)?;
    let logit = dot(&params.fuse_weight, &fused)?;
    let prediction = sigmoid(logit);

    Ok(ForwardCache {
        variant,
        d,
        beta,
        tnet_temp,
        user: example.user,
        item: example.item,
        doc: example.doc.to_vec(),
        source_items: example.source_items.to_vec(),
        x_u,
        x_i,
        x_ui,
        word_scores: mnet.scores,
        word_weights: mnet.weights,
        text_out: mnet.out,
        source_scores: tnet.scores,
        source_weights: tnet.weights,
        transfer_pre: tnet.pre,
        transfer_out: tnet.out,
        cf_pre,
        cf_out,
        fused,
        logit,
        prediction,
    })
}

/// Score an example without retaining intermediates; same arithmetic as
/// `forward`, used in evaluation inner loops. Returns the logit (ranking is
/// invariant under the sigmoid).
pub fn score_logit(
    example: Example<'_>,
    params: &ModelParams,
    variant: Variant,
    beta: f64,
    tnet_temp: f64,
) -> Result<f64> {
    Ok(forward(example, params, variant, beta, tnet_temp)?.logit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{Dims, Mat};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_params(dims: Dims, variant: Variant, seed: u64, scale: f64) -> ModelParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ModelParams::zeros(dims, variant.fusion_width(dims.d));
        for g in crate::numerics::ParamGroup::ALL {
            for v in p.group_mut(g) {
                *v = scale * crate::numerics::gaussian(&mut rng);
            }
        }
        p
    }

    fn small_dims(d: usize) -> Dims {
        Dims {
            num_users: 4,
            num_target_items: 5,
            num_source_items: 5,
            d,
            vocab_size: 6,
        }
    }

    #[test]
    fn mnet_singleton_doc_reads_one_value_row() {
        let dims = small_dims(3);
        let params = random_params(dims, Variant::Full, 7, 0.5);
        let (out, weights) = mnet_forward(1, 2, &[4], &params, 0.7).unwrap();
        assert_eq!(weights, vec![1.0]);
        assert_eq!(out, params.word_value.row(4).to_vec());
    }

    #[test]
    fn mnet_zero_keys_average_values() {
        let dims = small_dims(2);
        let mut params = random_params(dims, Variant::Full, 8, 0.5);
        params.word_key = Mat::zeros(dims.vocab_size, 2 * dims.d);
        let doc = [0u32, 3, 5];
        let (out, weights) = mnet_forward(0, 0, &doc, &params, 1.3).unwrap();
        for &w in &weights {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }
        for k in 0..dims.d {
            let mean = doc
                .iter()
                .map(|&t| params.word_value.row(t as usize)[k])
                .sum::<f64>()
                / 3.0;
            assert!((out[k] - mean).abs() < 1e-15);
        }
    }

    #[test]
    fn mnet_matches_direct_summation_oracle() {
        // Independent recomputation: raw exp ratios and explicit sums.
        let dims = small_dims(2);
        let params = random_params(dims, Variant::Full, 9, 0.5);
        let (u, i) = (2usize, 3usize);
        let doc = [1u32, 4, 2];
        let beta = 0.9;
        let (out, weights) = mnet_forward(u, i, &doc, &params, beta).unwrap();

        let x_ui: Vec<f64> = params
            .user_emb
            .row(u)
            .iter()
            .chain(params.target_emb.row(i))
            .copied()
            .collect();
        let q: Vec<f64> = doc
            .iter()
            .map(|&w| {
                x_ui.iter()
                    .zip(params.word_key.row(w as usize))
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            })
            .collect();
        let z: Vec<f64> = q.iter().map(|&s| (beta * s).exp()).collect();
        let zsum: f64 = z.iter().sum();
        for (k, &w) in weights.iter().enumerate() {
            assert!((w - z[k] / zsum).abs() <= 1e-12);
        }
        for c in 0..dims.d {
            let expect: f64 = doc
                .iter()
                .zip(&z)
                .map(|(&t, &zk)| zk / zsum * params.word_value.row(t as usize)[c])
                .sum();
            assert!((out[c] - expect).abs() <= 1e-12);
        }
    }

    #[test]
    fn mnet_rejects_out_of_vocab_token() {
        let dims = small_dims(2);
        let params = random_params(dims, Variant::Full, 10, 0.5);
        let err = mnet_forward(0, 0, &[6], &params, 1.0).unwrap_err();
        assert!(err.to_string().contains("token"));
    }

    #[test]
    fn tnet_single_source_item() {
        let dims = small_dims(3);
        let params = random_params(dims, Variant::Full, 11, 0.5);
        let (out, weights) = tnet_forward(1, &[3], &params, 1.0).unwrap();
        assert_eq!(weights, vec![1.0]);
        let expect = relu(params.source_emb.row(3));
        assert_eq!(out, expect);
    }

    #[test]
    fn tnet_identical_embeddings_collapse() {
        let dims = small_dims(3);
        let mut params = random_params(dims, Variant::Full, 12, 0.5);
        let v = [0.4, -0.2, 0.9];
        for j in 0..dims.num_source_items {
            params.source_emb.row_mut(j).copy_from_slice(&v);
        }
        let (out, _) = tnet_forward(0, &[0, 2, 4], &params, 1.0).unwrap();
        let expect = relu(&v);
        for (a, b) in out.iter().zip(&expect) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn tnet_matches_brute_force_oracle() {
        let dims = small_dims(2);
        let params = random_params(dims, Variant::Full, 13, 0.5);
        let item = 4usize;
        let source = [0u32, 1, 3];
        let (out, weights) = tnet_forward(item, &source, &params, 1.0).unwrap();

        let x_i = params.target_emb.row(item);
        let a: Vec<f64> = source
            .iter()
            .map(|&j| {
                x_i.iter()
                    .zip(params.source_emb.row(j as usize))
                    .map(|(p, q)| p * q)
                    .sum::<f64>()
            })
            .collect();
        let z: Vec<f64> = a.iter().map(|&s| s.exp()).collect();
        let zsum: f64 = z.iter().sum();
        for c in 0..dims.d {
            let pre: f64 = source
                .iter()
                .zip(&z)
                .map(|(&j, &zk)| zk / zsum * params.source_emb.row(j as usize)[c])
                .sum();
            assert!((out[c] - pre.max(0.0)).abs() <= 1e-12);
        }
        assert!((weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn cfnet_zero_weights_and_dead_relu() {
        let dims = small_dims(3);
        let mut params = random_params(dims, Variant::Full, 14, 0.5);
        params.cf_weight = Mat::zeros(2 * dims.d, dims.d);
        params.cf_bias = vec![0.0; dims.d];
        assert_eq!(cfnet_forward(0, 0, &params).unwrap(), vec![0.0; dims.d]);

        params.cf_bias = vec![-100.0; dims.d];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for v in &mut params.cf_weight.data {
            *v = rng.gen_range(-1.0..1.0);
        }
        assert_eq!(cfnet_forward(1, 2, &params).unwrap(), vec![0.0; dims.d]);
    }

    #[test]
    fn cfnet_matches_matrix_vector_oracle() {
        let dims = small_dims(2);
        let params = random_params(dims, Variant::Full, 15, 0.5);
        let (u, i) = (3, 1);
        let z = cfnet_forward(u, i, &params).unwrap();
        let x_ui: Vec<f64> = params
            .user_emb
            .row(u)
            .iter()
            .chain(params.target_emb.row(i))
            .copied()
            .collect();
        for o in 0..dims.d {
            let mut pre = params.cf_bias[o];
            for (inp, &x) in x_ui.iter().enumerate() {
                pre += x * params.cf_weight.row(inp)[o];
            }
            assert!((z[o] - pre.max(0.0)).abs() <= 1e-12);
        }
    }

    #[test]
    fn fuse_zero_weight_gives_half() {
        let dims = small_dims(3);
        let mut params = random_params(dims, Variant::Full, 16, 0.5);
        params.fuse_weight = vec![0.0; 3 * dims.d];
        let (r, logit) =
            fuse_predict(&[1.0; 3], &[2.0; 3], &[3.0; 3], &params, Variant::Full).unwrap();
        assert_eq!(logit, 0.0);
        assert_eq!(r, 0.5);
    }

    #[test]
    fn fuse_checks_width() {
        let dims = small_dims(3);
        let params = random_params(dims, Variant::Full, 17, 0.5);
        let err =
            fuse_predict(&[0.0; 3], &[0.0; 3], &[0.0; 3], &params, Variant::CfOnly).unwrap_err();
        assert!(err.to_string().contains("fuse_weight"));
    }

    #[test]
    fn ablated_branches_are_ignored() {
        let dims = small_dims(3);
        let params = random_params(dims, Variant::NoMemory, 18, 0.5);
        let z = [0.1, 0.2, 0.3];
        let c = [0.5, 0.0, 0.4];
        let (r1, _) = fuse_predict(&[0.0; 3], &z, &c, &params, Variant::NoMemory).unwrap();
        let (r2, _) = fuse_predict(&[9.0; 3], &z, &c, &params, Variant::NoMemory).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn fuse_matches_scalar_oracle() {
        let dims = small_dims(2);
        let params = random_params(dims, Variant::Full, 19, 0.5);
        let o = [0.3, -0.6];
        let z = [0.2, 0.8];
        let c = [0.0, 1.5];
        let (_, logit) = fuse_predict(&o, &z, &c, &params, Variant::Full).unwrap();

        let mut expect = 0.0;
        let map = [
            (&o, &params.map_text),
            (&z, &params.map_cf),
            (&c, &params.map_transfer),
        ];
        for (block, (v, m)) in map.iter().enumerate() {
            for out_k in 0..dims.d {
                let mut y = 0.0;
                for inp in 0..dims.d {
                    y += v[inp] * m.row(inp)[out_k];
                }
                expect += params.fuse_weight[block * dims.d + out_k] * y;
            }
        }
        assert!((logit - expect).abs() <= 1e-12);
    }

    #[test]
    fn cf_only_ignores_doc_and_source() {
        let dims = small_dims(3);
        let params = random_params(dims, Variant::CfOnly, 20, 0.5);
        let a = forward(
            Example {
                user: 1,
                item: 2,
                doc: &[0, 1, 2],
                source_items: &[3, 4],
            },
            &params,
            Variant::CfOnly,
            1.0,
            1.0,
        )
        .unwrap();
        let b = forward(
            Example {
                user: 1,
                item: 2,
                doc: &[5, 5],
                source_items: &[0],
            },
            &params,
            Variant::CfOnly,
            1.0,
            1.0,
        )
        .unwrap();
        assert_eq!(a.prediction, b.prediction);
    }

    #[test]
    fn forward_is_deterministic_and_sane() {
        let dims = small_dims(3);
        let params = random_params(dims, Variant::Full, 21, 0.5);
        let ex = Example {
            user: 0,
            item: 4,
            doc: &[1, 3, 3, 0],
            source_items: &[2, 0, 4],
        };
        let a = forward(ex, &params, Variant::Full, 0.6, 1.0).unwrap();
        let b = forward(ex, &params, Variant::Full, 0.6, 1.0).unwrap();
        assert_eq!(a.prediction.to_bits(), b.prediction.to_bits());
        assert!(a.prediction > 0.0 && a.prediction < 1.0);
        assert!((a.word_weights.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
        assert!((a.source_weights.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
        assert!(a.transfer_out.iter().all(|&v| v >= 0.0));
        assert!(a.cf_out.iter().all(|&v| v >= 0.0));
        assert!(a.fused.iter().all(|v| v.is_finite()));
        assert_eq!(a.logit, score_logit(ex, &params, Variant::Full, 0.6, 1.0).unwrap());
    }

    #[test]
    fn permuting_inputs_permutes_weights_and_keeps_outputs() {
        let dims = small_dims(3);
        let params = random_params(dims, Variant::Full, 22, 0.5);
        let doc = [1u32, 3, 0, 5];
        let perm = [3usize, 0, 2, 1];
        let pdoc: Vec<u32> = perm.iter().map(|&k| doc[k]).collect();
        let (o1, w1) = mnet_forward(1, 1, &doc, &params, 0.8).unwrap();
        let (o2, w2) = mnet_forward(1, 1, &pdoc, &params, 0.8).unwrap();
        for (k, &pk) in perm.iter().enumerate() {
            assert!((w2[k] - w1[pk]).abs() <= 1e-12);
        }
        for (a, b) in o1.iter().zip(&o2) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}
