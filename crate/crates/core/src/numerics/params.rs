use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::numerics::Mat;

/// Model-wide hyperparameters with the reference defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    /// Embedding dimension.
    pub d: usize,
    /// Vocabulary size cap.
    pub vocab_size: usize,
    /// Word-attention temperature; defaults to `d^(-1/2)`.
    pub beta: f64,
    /// Source-item attention temperature (plain softmax by default).
    pub tnet_temp: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Negatives sampled per positive, each epoch.
    pub neg_ratio: usize,
    /// Token cap per document (the attention memory size).
    pub max_doc_len: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Hyperparams {
    /// Defaults for embedding dimension `d`; `beta` is set to `d^(-1/2)`.
    pub fn with_dim(d: usize) -> Self {
        Hyperparams {
            d,
            vocab_size: 8000,
            beta: 1.0 / (d as f64).sqrt(),
            tnet_temp: 1.0,
            learning_rate: 0.001,
            batch_size: 128,
            neg_ratio: 1,
            max_doc_len: 300,
            epochs: 30,
            seed: 42,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.vocab_size == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "d, vocab_size and batch_size must be positive".into(),
            ));
        }
        if self.neg_ratio < 1 {
            return Err(Error::Config("neg_ratio must be >= 1".into()));
        }
        if self.max_doc_len < 1 {
            return Err(Error::Config("max_doc_len must be >= 1".into()));
        }
        if !(self.beta > 0.0) || !(self.tnet_temp > 0.0) {
            return Err(Error::Config("attention temperatures must be > 0".into()));
        }
        if !(self.learning_rate >= 0.0) {
            return Err(Error::Config("learning_rate must be >= 0".into()));
        }
        Ok(())
    }
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams::with_dim(75)
    }
}

/// Entity counts the parameter shapes depend on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub num_users: usize,
    pub num_target_items: usize,
    pub num_source_items: usize,
    pub d: usize,
    pub vocab_size: usize,
}

/// Identifies one trainable tensor; used for diagnostics and gradient checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamGroup {
    UserEmb,
    TargetEmb,
    SourceEmb,
    WordKey,
    WordValue,
    CfWeight,
    CfBias,
    MapText,
    MapCf,
    MapTransfer,
    FuseWeight,
}

impl ParamGroup {
    pub const ALL: [ParamGroup; 11] = [
        ParamGroup::UserEmb,
        ParamGroup::TargetEmb,
        ParamGroup::SourceEmb,
        ParamGroup::WordKey,
        ParamGroup::WordValue,
        ParamGroup::CfWeight,
        ParamGroup::CfBias,
        ParamGroup::MapText,
        ParamGroup::MapCf,
        ParamGroup::MapTransfer,
        ParamGroup::FuseWeight,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamGroup::UserEmb => "user_emb",
            ParamGroup::TargetEmb => "target_emb",
            ParamGroup::SourceEmb => "source_emb",
            ParamGroup::WordKey => "word_key",
            ParamGroup::WordValue => "word_value",
            ParamGroup::CfWeight => "cf_weight",
            ParamGroup::CfBias => "cf_bias",
            ParamGroup::MapText => "map_text",
            ParamGroup::MapCf => "map_cf",
            ParamGroup::MapTransfer => "map_transfer",
            ParamGroup::FuseWeight => "fuse_weight",
        }
    }
}

/// All trainable tensors of the model.
///
/// Embedding-style tables (one row per user/item/word) and the small dense
/// layers that fuse the three branches. `fuse_weight` is the shared output
/// layer; its length depends on how many branches the active variant fuses
/// (3d, 2d or d), every other shape is fixed by `dims`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub dims: Dims,
    /// User embeddings, `num_users x d`.
    pub user_emb: Mat,
    /// Target-item embeddings, `num_target_items x d`.
    pub target_emb: Mat,
    /// Source-item embeddings, `num_source_items x d`.
    pub source_emb: Mat,
    /// Internal word memory (attention keys), `vocab_size x 2d`.
    pub word_key: Mat,
    /// External word memory (attention values), `vocab_size x d`.
    pub word_value: Mat,
    /// Interaction hidden layer, input-major `2d x d`.
    pub cf_weight: Mat,
    /// Interaction hidden-layer bias, `d`.
    pub cf_bias: Vec<f64>,
    /// Linear map over the text branch output, `d x d`.
    pub map_text: Mat,
    /// Linear map over the interaction branch output, `d x d`.
    pub map_cf: Mat,
    /// Linear map over the transfer branch output, `d x d`.
    pub map_transfer: Mat,
    /// Shared output layer weight; length 3d, 2d or d.
    pub fuse_weight: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(dims: Dims, fusion_width: usize) -> Self {
        let d = dims.d;
        ModelParams {
            dims,
            user_emb: Mat::zeros(dims.num_users, d),
            target_emb: Mat::zeros(dims.num_target_items, d),
            source_emb: Mat::zeros(dims.num_source_items, d),
            word_key: Mat::zeros(dims.vocab_size, 2 * d),
            word_value: Mat::zeros(dims.vocab_size, d),
            cf_weight: Mat::zeros(2 * d, d),
            cf_bias: vec![0.0; d],
            map_text: Mat::zeros(d, d),
            map_cf: Mat::zeros(d, d),
            map_transfer: Mat::zeros(d, d),
            fuse_weight: vec![0.0; fusion_width],
        }
    }

    pub fn fusion_width(&self) -> usize {
        self.fuse_weight.len()
    }

    /// Flat view of one parameter group. Matrices are in storage order
    /// (row-major), so `flat_index = row * cols + col`.
    pub fn group(&self, g: ParamGroup) -> &[f64] {
        match g {
            ParamGroup::UserEmb => &self.user_emb.data,
            ParamGroup::TargetEmb => &self.target_emb.data,
            ParamGroup::SourceEmb => &self.source_emb.data,
            ParamGroup::WordKey => &self.word_key.data,
            ParamGroup::WordValue => &self.word_value.data,
            ParamGroup::CfWeight => &self.cf_weight.data,
            ParamGroup::CfBias => &self.cf_bias,
            ParamGroup::MapText => &self.map_text.data,
            ParamGroup::MapCf => &self.map_cf.data,
            ParamGroup::MapTransfer => &self.map_transfer.data,
            ParamGroup::FuseWeight => &self.fuse_weight,
        }
    }

    pub fn group_mut(&mut self, g: ParamGroup) -> &mut [f64] {
        match g {
            ParamGroup::UserEmb => &mut self.user_emb.data,
            ParamGroup::TargetEmb => &mut self.target_emb.data,
            ParamGroup::SourceEmb => &mut self.source_emb.data,
            ParamGroup::WordKey => &mut self.word_key.data,
            ParamGroup::WordValue => &mut self.word_value.data,
            ParamGroup::CfWeight => &mut self.cf_weight.data,
            ParamGroup::CfBias => &mut self.cf_bias,
            ParamGroup::MapText => &mut self.map_text.data,
            ParamGroup::MapCf => &mut self.map_cf.data,
            ParamGroup::MapTransfer => &mut self.map_transfer.data,
            ParamGroup::FuseWeight => &mut self.fuse_weight,
        }
    }

    /// Verify all shapes are mutually consistent with `dims`.
    pub fn check_shapes(&self) -> Result<()> {
        let d = self.dims.d;
        let checks: [(&str, usize, usize); 10] = [
            ("user_emb", self.user_emb.data.len(), self.dims.num_users * d),
            (
                "target_emb",
                self.target_emb.data.len(),
                self.dims.num_target_items * d,
            ),
            (
                "source_emb",
                self.source_emb.data.len(),
                self.dims.num_source_items * d,
            ),
            ("word_key", self.word_key.data.len(), self.dims.vocab_size * 2 * d),
            ("word_value", self.word_value.data.len(), self.dims.vocab_size * d),
            ("cf_weight", self.cf_weight.data.len(), 2 * d * d),
            ("cf_bias", self.cf_bias.len(), d),
            ("map_text", self.map_text.data.len(), d * d),
            ("map_cf", self.map_cf.data.len(), d * d),
            ("map_transfer", self.map_transfer.data.len(), d * d),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(Error::Shape {
                    op: "check_shapes",
                    detail: format!("{name} has {got} entries, expected {want}"),
                });
            }
        }
        Ok(())
    }

    /// True when every entry of every tensor is finite.
    pub fn all_finite(&self) -> bool {
        ParamGroup::ALL
            .iter()
            .all(|&g| self.group(g).iter().all(|v| v.is_finite()))
    }
}

/// Gradient rows for an embedding-style table, keyed by row index. Rows not
/// touched by a batch carry an implicit zero gradient.
#[derive(Debug, Clone, Default)]
pub struct SparseRows {
    pub row_dim: usize,
    pub rows: HashMap<u32, Vec<f64>>,
}

impl SparseRows {
    pub fn new(row_dim: usize) -> Self {
        SparseRows {
            row_dim,
            rows: HashMap::new(),
        }
    }

    /// Add `scale * delta` into the gradient row `idx`.
    pub fn add_scaled(&mut self, idx: u32, delta: &[f64], scale: f64) {
        debug_assert_eq!(delta.len(), self.row_dim);
        let row = self
            .rows
            .entry(idx)
            .or_insert_with(|| vec![0.0; self.row_dim]);
        for (r, &d) in row.iter_mut().zip(delta) {
            *r += scale * d;
        }
    }

    pub fn get(&self, idx: u32) -> Option<&[f64]> {
        self.rows.get(&idx).map(|v| v.as_slice())
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn scale(&mut self, s: f64) {
        for row in self.rows.values_mut() {
            for v in row {
                *v *= s;
            }
        }
    }

    fn all_finite(&self) -> bool {
        self.rows.values().all(|r| r.iter().all(|v| v.is_finite()))
    }
}

/// Gradients of the per-example (or batch-mean) loss with respect to every
/// trainable tensor. Embedding tables are sparse; the dense layers are not.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub user_emb: SparseRows,
    pub target_emb: SparseRows,
    pub source_emb: SparseRows,
    pub word_key: SparseRows,
    pub word_value: SparseRows,
    pub cf_weight: Vec<f64>,
    pub cf_bias: Vec<f64>,
    pub map_text: Vec<f64>,
    pub map_cf: Vec<f64>,
    pub map_transfer: Vec<f64>,
    pub fuse_weight: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        let d = params.dims.d;
        Gradients {
            user_emb: SparseRows::new(d),
            target_emb: SparseRows::new(d),
            source_emb: SparseRows::new(d),
            word_key: SparseRows::new(2 * d),
            word_value: SparseRows::new(d),
            cf_weight: vec![0.0; params.cf_weight.data.len()],
            cf_bias: vec![0.0; params.cf_bias.len()],
            map_text: vec![0.0; params.map_text.data.len()],
            map_cf: vec![0.0; params.map_cf.data.len()],
            map_transfer: vec![0.0; params.map_transfer.data.len()],
            fuse_weight: vec![0.0; params.fuse_weight.len()],
        }
    }

    /// Multiply every stored gradient by `s` (used to turn batch sums into
    /// batch means).
    pub fn scale(&mut self, s: f64) {
        self.user_emb.scale(s);
        self.target_emb.scale(s);
        self.source_emb.scale(s);
        self.word_key.scale(s);
        self.word_value.scale(s);
        for dense in [
            &mut self.cf_weight,
            &mut self.cf_bias,
            &mut self.map_text,
            &mut self.map_cf,
            &mut self.map_transfer,
            &mut self.fuse_weight,
        ] {
            for v in dense {
                *v *= s;
            }
        }
    }

    /// Gradient value at a flat coordinate of a parameter group (zero for
    /// untouched sparse rows).
    pub fn value_at(&self, g: ParamGroup, flat: usize) -> f64 {
        let sparse = |s: &SparseRows| {
            let row = (flat / s.row_dim) as u32;
            let col = flat % s.row_dim;
            s.get(row).map_or(0.0, |r| r[col])
        };
        match g {
            ParamGroup::UserEmb => sparse(&self.user_emb),
            ParamGroup::TargetEmb => sparse(&self.target_emb),
            ParamGroup::SourceEmb => sparse(&self.source_emb),
            ParamGroup::WordKey => sparse(&self.word_key),
            ParamGroup::WordValue => sparse(&self.word_value),
            ParamGroup::CfWeight => self.cf_weight[flat],
            ParamGroup::CfBias => self.cf_bias[flat],
            ParamGroup::MapText => self.map_text[flat],
            ParamGroup::MapCf => self.map_cf[flat],
            ParamGroup::MapTransfer => self.map_transfer[flat],
            ParamGroup::FuseWeight => self.fuse_weight[flat],
        }
    }

    /// Name of the first group containing a non-finite gradient, if any.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        let sparse: [(&SparseRows, ParamGroup); 5] = [
            (&self.user_emb, ParamGroup::UserEmb),
            (&self.target_emb, ParamGroup::TargetEmb),
            (&self.source_emb, ParamGroup::SourceEmb),
            (&self.word_key, ParamGroup::WordKey),
            (&self.word_value, ParamGroup::WordValue),
        ];
        for (s, g) in sparse {
            if !s.all_finite() {
                return Some(g.name());
            }
        }
        let dense: [(&[f64], ParamGroup); 6] = [
            (&self.cf_weight, ParamGroup::CfWeight),
            (&self.cf_bias, ParamGroup::CfBias),
            (&self.map_text, ParamGroup::MapText),
            (&self.map_cf, ParamGroup::MapCf),
            (&self.map_transfer, ParamGroup::MapTransfer),
            (&self.fuse_weight, ParamGroup::FuseWeight),
        ];
        for (v, g) in dense {
            if !v.iter().all(|x| x.is_finite()) {
                return Some(g.name());
            }
        }
        None
    }
}
