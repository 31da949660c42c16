//! Dense numerical kernels, parameter containers, the Adam optimizer and a
//! finite-difference gradient-check harness.
//!
//! Everything operates on `f64`. Weight matrices are stored input-major
//! (`flat[input * out_dim + output]`), so `affine` computes `x^T W + b`;
//! embedding tables are stored one row per entity.

mod adam;
mod checkpoint;
mod gradcheck;
mod params;

pub use adam::{adam_step, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use checkpoint::{fusion_width_for_tag, load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC};
pub use gradcheck::{grad_check, relative_error, GroupCheck};
pub use params::{Dims, Gradients, Hyperparams, ModelParams, ParamGroup, SparseRows};

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// Softmax with temperature: `out_k = exp(beta * s_k) / sum_k' exp(beta * s_k')`.
///
/// The maximum score is subtracted before exponentiation so large scores do
/// not overflow. Empty input is an error: a distribution over nothing is
/// undefined and callers must handle the empty case themselves.
pub fn scaled_softmax(scores: &[f64], beta: f64) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::EmptyAttentionTarget);
    }
    debug_assert!(beta > 0.0, "softmax temperature must be positive");
    debug_assert!(scores.iter().all(|s| s.is_finite()));

    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = scores.iter().map(|&s| (beta * (s - max)).exp()).collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    Ok(out)
}

/// Elementwise `max(0, x)`.
pub fn relu(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| x.max(0.0)).collect()
}

/// Logistic function, numerically stable on both tails.
///
/// The result is clamped into the open interval (0, 1): downstream code
/// treats the output as a probability and must never see an exact 0 or 1.
pub fn sigmoid(x: f64) -> f64 {
    let s = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// `x^T W + b` for an input-major weight matrix (`weight.rows` inputs,
/// `weight.cols` outputs).
pub fn affine(weight: &Mat, x: &[f64], bias: &[f64]) -> Result<Vec<f64>> {
    if weight.rows != x.len() {
        return Err(Error::Shape {
            op: "affine",
            detail: format!(
                "weight has {} input rows but x has length {}",
                weight.rows,
                x.len()
            ),
        });
    }
    if weight.cols != bias.len() {
        return Err(Error::Shape {
            op: "affine",
            detail: format!(
                "weight has {} output cols but bias has length {}",
                weight.cols,
                bias.len()
            ),
        });
    }
    let mut out = bias.to_vec();
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        let row = weight.row(i);
        for (o, &w) in out.iter_mut().zip(row) {
            *o += xi * w;
        }
    }
    Ok(out)
}

/// Inner product with an explicit length check.
pub fn dot(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape {
            op: "dot",
            detail: format!("a has length {} but b has length {}", a.len(), b.len()),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).sum())
}

/// Standard-normal sample via Box-Muller. Kept hand-rolled so initialization
/// is bit-reproducible across dependency upgrades.
pub fn gaussian<R: rand::Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            let v: f64 = rng.gen();
            return (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos();
        }
    }
}

/// Derive an independent 64-bit seed from a base seed and stream labels
/// (splitmix64 finalizer). Every RNG consumer in the crate gets its own
/// stream so adding a consumer never perturbs the others.
pub fn derive_seed(base: u64, tag: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_uniform_on_constant_input() {
        for c in [-3.0, 0.0, 7.5] {
            let p = scaled_softmax(&[c, c, c], 1.0).unwrap();
            for &v in &p {
                assert!((v - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn softmax_singleton_is_one() {
        for beta in [0.1, 1.0, 13.0] {
            assert_eq!(scaled_softmax(&[4.2], beta).unwrap(), vec![1.0]);
        }
    }

    #[test]
    fn softmax_closed_form_ratio() {
        // exp(0) : exp(ln 3) = 1 : 3
        let p = scaled_softmax(&[0.0, 3.0_f64.ln()], 1.0).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-12);
        assert!((p[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn softmax_empty_is_error() {
        let err = scaled_softmax(&[], 1.0).unwrap_err();
        assert_eq!(err.to_string(), "empty attention target");
    }

    #[test]
    fn softmax_sums_to_one_and_shift_invariant() {
        let scores = [0.3, -1.2, 5.0, 0.0, 2.2];
        let p = scaled_softmax(&scores, 0.7).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let shifted: Vec<f64> = scores.iter().map(|s| s + 123.456).collect();
        let q = scaled_softmax(&shifted, 0.7).unwrap();
        for (a, b) in p.iter().zip(&q) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn softmax_sharpens_with_larger_beta() {
        let scores = [0.1, 0.9, -0.4, 0.5];
        for beta in [0.25, 1.0, 4.0] {
            let p = scaled_softmax(&scores, beta).unwrap();
            let q = scaled_softmax(&scores, 2.0 * beta).unwrap();
            let pmax = p.iter().cloned().fold(f64::MIN, f64::max);
            let qmax = q.iter().cloned().fold(f64::MIN, f64::max);
            assert!(qmax >= pmax - 1e-15);
        }
    }

    #[test]
    fn relu_clamps_negatives() {
        assert_eq!(relu(&[-1.0, 0.0, 2.0]), vec![0.0, 0.0, 2.0]);
    }

    #[test]
    fn sigmoid_midpoint_and_bounds() {
        assert_eq!(sigmoid(0.0), 0.5);
        for x in [-1e9, -50.0, 0.0, 50.0, 1e9] {
            let s = sigmoid(x);
            assert!(s > 0.0 && s < 1.0, "sigmoid({x}) = {s} not in open (0,1)");
        }
    }

    #[test]
    fn affine_identity_map() {
        let mut eye = Mat::zeros(3, 3);
        for i in 0..3 {
            eye.row_mut(i)[i] = 1.0;
        }
        let x = [1.5, -2.0, 0.25];
        let y = affine(&eye, &x, &[0.0; 3]).unwrap();
        assert_eq!(y, x.to_vec());
    }

    #[test]
    fn affine_shape_errors_name_operands() {
        let w = Mat::zeros(2, 3);
        let err = affine(&w, &[1.0; 4], &[0.0; 3]).unwrap_err();
        assert!(err.to_string().contains("affine"));
        let err = affine(&w, &[1.0; 2], &[0.0; 5]).unwrap_err();
        assert!(err.to_string().contains("bias"));
    }

    #[test]
    fn dot_checks_lengths() {
        assert_eq!(dot(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        assert!(dot(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn derive_seed_streams_differ() {
        let a = derive_seed(42, 1, 0);
        let b = derive_seed(42, 2, 0);
        let c = derive_seed(42, 1, 1);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(42, 1, 0));
    }
}
