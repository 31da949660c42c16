use crate::error::{Error, Result};
use crate::numerics::params::{Dims, Gradients, ModelParams, ParamGroup, SparseRows};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Adam moment accumulators, shaped like the parameters, plus the step count.
///
/// Embedding rows use lazy moments: a row's accumulators are decayed and
/// updated only in steps whose batch actually touched the row.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub t: u64,
    pub first: ModelParams,
    pub second: ModelParams,
}

impl AdamState {
    pub fn new(dims: Dims, fusion_width: usize) -> Self {
        AdamState {
            t: 0,
            first: ModelParams::zeros(dims, fusion_width),
            second: ModelParams::zeros(dims, fusion_width),
        }
    }
}

#[inline]
fn update_coord(
    theta: &mut f64,
    m: &mut f64,
    v: &mut f64,
    grad: f64,
    lr: f64,
    bc1: f64,
    bc2: f64,
) {
    *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * grad;
    *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * grad * grad;
    let m_hat = *m / bc1;
    let v_hat = *v / bc2;
    *theta -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
}

/// One Adam step over all parameter groups.
///
/// Rejects non-finite gradients before mutating anything, so a failed step
/// leaves `params` and `state` untouched. After the update the touched
/// entries are re-checked for finiteness.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &Gradients,
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    if let Some(group) = grads.first_non_finite() {
        return Err(Error::NonFiniteGradient { group });
    }
    state.t += 1;
    let bc1 = 1.0 - ADAM_BETA1.powi(state.t as i32);
    let bc2 = 1.0 - ADAM_BETA2.powi(state.t as i32);

    let sparse_groups: [(ParamGroup, &SparseRows); 5] = [
        (ParamGroup::UserEmb, &grads.user_emb),
        (ParamGroup::TargetEmb, &grads.target_emb),
        (ParamGroup::SourceEmb, &grads.source_emb),
        (ParamGroup::WordKey, &grads.word_key),
        (ParamGroup::WordValue, &grads.word_value),
    ];
    for (g, rows) in sparse_groups {
        for (&row_idx, grad_row) in &rows.rows {
            let start = row_idx as usize * rows.row_dim;
            let theta = &mut params.group_mut(g)[start..start + rows.row_dim];
            let m = &mut state.first.group_mut(g)[start..start + rows.row_dim];
            let v = &mut state.second.group_mut(g)[start..start + rows.row_dim];
            for k in 0..rows.row_dim {
                update_coord(&mut theta[k], &mut m[k], &mut v[k], grad_row[k], lr, bc1, bc2);
            }
            if !theta.iter().all(|x| x.is_finite()) {
                return Err(Error::NonFiniteParam { group: g.name() });
            }
        }
    }

    let dense_groups: [(ParamGroup, &[f64]); 6] = [
        (ParamGroup::CfWeight, &grads.cf_weight),
        (ParamGroup::CfBias, &grads.cf_bias),
        (ParamGroup::MapText, &grads.map_text),
        (ParamGroup::MapCf, &grads.map_cf),
        (ParamGroup::MapTransfer, &grads.map_transfer),
        (ParamGroup::FuseWeight, &grads.fuse_weight),
    ];
    for (g, grad) in dense_groups {
        let theta = params.group_mut(g);
        debug_assert_eq!(theta.len(), grad.len());
        {
            let m = state.first.group_mut(g);
            for k in 0..grad.len() {
                m[k] = ADAM_BETA1 * m[k] + (1.0 - ADAM_BETA1) * grad[k];
            }
        }
        {
            let v = state.second.group_mut(g);
            for k in 0..grad.len() {
                v[k] = ADAM_BETA2 * v[k] + (1.0 - ADAM_BETA2) * grad[k] * grad[k];
            }
        }
        let m = state.first.group(g);
        let v = state.second.group(g);
        for k in 0..grad.len() {
            theta[k] -= lr * (m[k] / bc1) / ((v[k] / bc2).sqrt() + ADAM_EPS);
        }
        if !theta.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFiniteParam { group: g.name() });
        }
    }
    Ok(())
}
