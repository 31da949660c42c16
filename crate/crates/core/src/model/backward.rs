//! Reverse-mode gradients of the per-example binary cross-entropy loss.
//!
//! Derivatives are hand-derived for the fixed graph: sigmoid output, linear
//! fusion maps, ReLU hidden layers, two softmax attentions, and the shared
//! embeddings underneath. Ablated branches contribute nothing.

use crate::error::{Error, Result};
use crate::model::{ForwardCache, Variant};
use crate::numerics::{Gradients, ModelParams};

fn validate_cache(cache: &ForwardCache, params: &ModelParams, variant: Variant) -> Result<()> {
    let d = params.dims.d;
    let stale = |why: String| Err(Error::StaleCache(why));
    if cache.variant != variant {
        return stale(format!(
            "cache built for {} but backward called for {variant}",
            cache.variant
        ));
    }
    if cache.d != d {
        return stale(format!("cache d={} but params d={d}", cache.d));
    }
    if params.fuse_weight.len() != variant.fusion_width(d) {
        return stale(format!(
            "fuse_weight length {} does not match variant {variant}",
            params.fuse_weight.len()
        ));
    }
    if cache.user >= params.dims.num_users || cache.item >= params.dims.num_target_items {
        return stale("cached ids exceed parameter table sizes".into());
    }
    if cache.doc.iter().any(|&w| w as usize >= params.dims.vocab_size) {
        return stale("cached token id exceeds vocabulary".into());
    }
    if cache
        .source_items
        .iter()
        .any(|&j| j as usize >= params.dims.num_source_items)
    {
        return stale("cached source item id exceeds table".into());
    }
    if cache.x_ui.len() != 2 * d || cache.fused.len() != variant.fusion_width(d) {
        return stale("cached activation shapes do not match params".into());
    }
    Ok(())
}

/// Gradients of the BCE loss for one example, scaled by `scale`, accumulated
/// into `grads`. `label` is 0 or 1.
pub fn accumulate_backward(
    cache: &ForwardCache,
    label: f64,
    params: &ModelParams,
    variant: Variant,
    scale: f64,
    grads: &mut Gradients,
) -> Result<()> {
    validate_cache(cache, params, variant)?;
    let d = cache.d;

    // d loss / d logit for BCE through a sigmoid.
    let g_logit = cache.prediction - label;

    // Shared output layer: logit = fuse_weight . fused.
    for (gh, &y) in grads.fuse_weight.iter_mut().zip(&cache.fused) {
        *gh += scale * g_logit * y;
    }

    // Gradient w.r.t. each mapped block of the fused vector.
    let g_fused: Vec<f64> = params.fuse_weight.iter().map(|&h| g_logit * h).collect();
    let mut block = 0usize;
    let g_text = if variant.uses_memory() {
        let s = &g_fused[block..block + d];
        block += d;
        Some(s)
    } else {
        None
    };
    let g_cf = &g_fused[block..block + d];
    block += d;
    let g_transfer = if variant.uses_transfer() {
        Some(&g_fused[block..block + d])
    } else {
        None
    };

    // Accumulated gradient w.r.t. the concatenated [x_u, x_i] embedding.
    let mut g_xui = vec![0.0; 2 * d];
    // Extra item-embedding gradient from the transfer similarities.
    let mut g_xi_extra = vec![0.0; d];

    // Interaction branch: mapped = map_cf^T z, z = ReLU(cf_pre),
    // cf_pre = cf_weight^T x_ui + b.
    {
        let mut g_z = vec![0.0; d];
        for inp in 0..d {
            let row = params.map_cf.row(inp);
            let mut acc = 0.0;
            for (o, &g) in g_cf.iter().enumerate() {
                grads.map_cf[inp * d + o] += scale * cache.cf_out[inp] * g;
                acc += row[o] * g;
            }
            g_z[inp] = acc;
        }
        let g_pre: Vec<f64> = g_z
            .iter()
            .zip(&cache.cf_pre)
            .map(|(&g, &pre)| if pre > 0.0 { g } else { 0.0 })
            .collect();
        for (o, &g) in g_pre.iter().enumerate() {
            grads.cf_bias[o] += scale * g;
        }
        for inp in 0..2 * d {
            let x = cache.x_ui[inp];
            let row = params.cf_weight.row(inp);
            let mut acc = 0.0;
            for (o, &g) in g_pre.iter().enumerate() {
                grads.cf_weight[inp * d + o] += scale * x * g;
                acc += row[o] * g;
            }
            g_xui[inp] += acc;
        }
    }

    // Text branch: mapped = map_text^T o, o = sum_k p_k value_k,
    // p = softmax(beta * q), q_k = x_ui . key_k.
    if let Some(g_mapped) = g_text {
        if !cache.doc.is_empty() {
            let mut g_o = vec![0.0; d];
            for inp in 0..d {
                let row = params.map_text.row(inp);
                let mut acc = 0.0;
                for (o, &g) in g_mapped.iter().enumerate() {
                    grads.map_text[inp * d + o] += scale * cache.text_out[inp] * g;
                    acc += row[o] * g;
                }
                g_o[inp] = acc;
            }
            let p = &cache.word_weights;
            let mut g_p = Vec::with_capacity(cache.doc.len());
            let mut value_delta = vec![0.0; d];
            for (&w, &pk) in cache.doc.iter().zip(p) {
                let value = params.word_value.row(w as usize);
                g_p.push(value.iter().zip(&g_o).map(|(v, g)| v * g).sum::<f64>());
                for (dv, &g) in value_delta.iter_mut().zip(&g_o) {
                    *dv = pk * g;
                }
                grads.word_value.add_scaled(w, &value_delta, scale);
            }
            // Softmax with temperature: dL/dq_k = beta * p_k (gp_k - sum p gp).
            let mix: f64 = p.iter().zip(&g_p).map(|(pk, gp)| pk * gp).sum();
            let mut key_delta = vec![0.0; 2 * d];
            for ((&w, &pk), &gp) in cache.doc.iter().zip(p).zip(&g_p) {
                let g_q = cache.beta * pk * (gp - mix);
                for (dv, &x) in key_delta.iter_mut().zip(&cache.x_ui) {
                    *dv = g_q * x;
                }
                grads.word_key.add_scaled(w, &key_delta, scale);
                let key = params.word_key.row(w as usize);
                for (gx, &k) in g_xui.iter_mut().zip(key) {
                    *gx += g_q * k;
                }
            }
        }
        // Empty doc: the text block is identically zero and detached.
    }

    // Transfer branch: mapped = map_transfer^T c, c = ReLU(sum_j alpha_j x_j),
    // alpha = softmax(temp * a), a_j = x_i . x_j.
    if let Some(g_mapped) = g_transfer {
        if !cache.source_items.is_empty() {
            let mut g_c = vec![0.0; d];
            for inp in 0..d {
                let row = params.map_transfer.row(inp);
                let mut acc = 0.0;
                for (o, &g) in g_mapped.iter().enumerate() {
                    grads.map_transfer[inp * d + o] += scale * cache.transfer_out[inp] * g;
                    acc += row[o] * g;
                }
                g_c[inp] = acc;
            }
            let g_pre: Vec<f64> = g_c
                .iter()
                .zip(&cache.transfer_pre)
                .map(|(&g, &pre)| if pre > 0.0 { g } else { 0.0 })
                .collect();
            let alpha = &cache.source_weights;
            let mut g_alpha = Vec::with_capacity(alpha.len());
            for &j in &cache.source_items {
                let emb = params.source_emb.row(j as usize);
                g_alpha.push(emb.iter().zip(&g_pre).map(|(e, g)| e * g).sum::<f64>());
            }
            let mix: f64 = alpha.iter().zip(&g_alpha).map(|(a, g)| a * g).sum();
            let mut delta = vec![0.0; d];
            for (idx, &j) in cache.source_items.iter().enumerate() {
                let a_w = alpha[idx];
                let g_a = cache.tnet_temp * a_w * (g_alpha[idx] - mix);
                let emb = params.source_emb.row(j as usize);
                // Weighted-sum path plus similarity path.
                for k in 0..d {
                    delta[k] = a_w * g_pre[k] + g_a * cache.x_i[k];
                }
                grads.source_emb.add_scaled(j, &delta, scale);
                for (gx, &e) in g_xi_extra.iter_mut().zip(emb) {
                    *gx += g_a * e;
                }
            }
        }
    }

    // Embedding tables.
    let g_xu = &g_xui[..d];
    let mut g_xi = vec![0.0; d];
    for k in 0..d {
        g_xi[k] = g_xui[d + k] + g_xi_extra[k];
    }
    grads.user_emb.add_scaled(cache.user as u32, g_xu, scale);
    grads.target_emb.add_scaled(cache.item as u32, &g_xi, scale);
    Ok(())
}

/// Gradients for one example as a fresh container.
pub fn backward(
    cache: &ForwardCache,
    label: f64,
    params: &ModelParams,
    variant: Variant,
) -> Result<Gradients> {
    let mut grads = Gradients::zeros_like(params);
    accumulate_backward(cache, label, params, variant, 1.0, &mut grads)?;
    Ok(grads)
}
