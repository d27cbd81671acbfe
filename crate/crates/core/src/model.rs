//! The two-branch collaborative network and its five baselines.
//!
//! Every variant shares one parameter naming scheme. Parameters are
//! initialized from a per-name random stream, so two variants built with the
//! same seed hold bit-identical values for every parameter they share.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GraphBatch, Topology};
use crate::layers::{readout, FusionLayer, GcnLayer, SagPoolLayer};
use crate::optim::Param;
use crate::rng;
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

pub const NUM_CLASSES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Two GCN branches with center fusion after every convolution.
    Collaborative,
    /// Two branches with self-attention pooling, no fusion.
    TwoBranchSagpool,
    /// Two branches, no pooling and no fusion.
    TwoBranchPlain,
    ImageOnly,
    TextOnly,
    /// Per-modality mean of raw node features, embedded and concatenated.
    TwoBranchAvg,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Collaborative,
        Variant::TwoBranchSagpool,
        Variant::TwoBranchPlain,
        Variant::TwoBranchAvg,
        Variant::TextOnly,
        Variant::ImageOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Collaborative => "collaborative",
            Variant::TwoBranchSagpool => "two_branch_sagpool",
            Variant::TwoBranchPlain => "two_branch_plain",
            Variant::ImageOnly => "image_only",
            Variant::TextOnly => "text_only",
            Variant::TwoBranchAvg => "two_branch_avg",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == name)
    }

    fn uses_image(self) -> bool {
        self != Variant::TextOnly
    }

    fn uses_text(self) -> bool {
        self != Variant::ImageOnly
    }

    fn is_graph_two_branch(self) -> bool {
        matches!(
            self,
            Variant::Collaborative | Variant::TwoBranchSagpool | Variant::TwoBranchPlain
        )
    }

    fn pools(self) -> bool {
        !matches!(self, Variant::TwoBranchPlain | Variant::TwoBranchAvg)
    }
}

impl core::fmt::Display for Variant {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub gcn_dims: Vec<usize>,
    pub pooling_ratio: f64,
    /// Hidden widths of the classifier head; the output layer (→ 2) is implied.
    pub fc_hidden: Vec<usize>,
    pub mu_init: f64,
    /// One fusion gate per block shared by both directions.
    pub shared_mu: bool,
    /// Scale pooled features by their attention score.
    pub score_gating: bool,
    pub variant: Variant,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            input_dim: 256,
            gcn_dims: vec![64, 32],
            pooling_ratio: 0.8,
            fc_hidden: vec![64, 32],
            mu_init: 1.0,
            shared_mu: false,
            score_gating: true,
            variant: Variant::Collaborative,
        }
    }
}

impl ModelConfig {
    pub fn with_variant(&self, variant: Variant) -> Self {
        ModelConfig {
            variant,
            ..self.clone()
        }
    }

    fn last_width(&self) -> usize {
        *self.gcn_dims.last().unwrap_or(&self.input_dim)
    }

    /// Width of the classifier head input.
    pub fn head_input_dim(&self) -> usize {
        match self.variant {
            Variant::ImageOnly | Variant::TextOnly => 2 * self.last_width(),
            _ => 4 * self.last_width(),
        }
    }

    /// Embedding width of the feature-averaging baseline: it matches one
    /// branch's readout so both modalities concatenate to the head input.
    pub fn avg_embed_dim(&self) -> usize {
        2 * self.last_width()
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::Validation("input_dim must be positive".into()));
        }
        if self.gcn_dims.is_empty() || self.gcn_dims.contains(&0) {
            return Err(Error::Validation("gcn_dims must be nonempty and positive".into()));
        }
        if self.fc_hidden.contains(&0) {
            return Err(Error::Validation("fc_hidden widths must be positive".into()));
        }
        if !(self.pooling_ratio > 0.0 && self.pooling_ratio <= 1.0) {
            return Err(Error::Validation(format!(
                "pooling_ratio {} outside (0, 1]",
                self.pooling_ratio
            )));
        }
        if !self.mu_init.is_finite() {
            return Err(Error::Validation("mu_init must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Block {
    gcn: usize,
    pool: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
struct Affine {
    weight: usize,
    bias: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
struct Layout {
    image: Vec<Block>,
    text: Vec<Block>,
    /// Per block: (into_image, into_text) gate indices.
    fusion: Vec<(usize, usize)>,
    embed: Vec<Affine>,
    head: Vec<Affine>,
}

/// Parameters bound onto a tape for one forward pass.
#[derive(Debug, Clone)]
pub struct Bound {
    vars: Vec<Var>,
}

impl Bound {
    /// Wraps caller-provided handles, one per parameter in model order.
    pub fn from_vars(vars: Vec<Var>) -> Self {
        Bound { vars }
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    config: ModelConfig,
    params: Vec<Param>,
    layout: Layout,
}

struct Builder {
    seed: u64,
    params: Vec<Param>,
}

impl Builder {
    fn glorot(&mut self, name: String, fan_in: usize, fan_out: usize) -> usize {
        let limit = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
        let mut rng = rng::stream(self.seed, &name);
        let data = (0..fan_in * fan_out)
            .map(|_| rng.random_range(-limit..limit))
            .collect();
        self.push(name, Tensor::new(vec![fan_in, fan_out], data).unwrap())
    }

    fn filled(&mut self, name: String, shape: Vec<usize>, value: f64) -> usize {
        let n = shape.iter().product();
        self.push(name, Tensor::new(shape, vec![value; n]).unwrap())
    }

    fn push(&mut self, name: String, tensor: Tensor) -> usize {
        self.params.push(Param {
            name,
            tensor: tensor.with_grad(),
        });
        self.params.len() - 1
    }

    fn affine(&mut self, prefix: &str, fan_in: usize, fan_out: usize) -> Affine {
        Affine {
            weight: self.glorot(format!("{prefix}.weight"), fan_in, fan_out),
            bias: self.filled(format!("{prefix}.bias"), vec![1, fan_out], 0.0),
        }
    }

    fn branch(&mut self, modality: &str, cfg: &ModelConfig) -> Vec<Block> {
        let mut width = cfg.input_dim;
        let mut blocks = Vec::new();
        for (b, &out) in cfg.gcn_dims.iter().enumerate() {
            let gcn = self.glorot(format!("{modality}.block{b}.gcn.weight"), width, out);
            let pool = cfg
                .variant
                .pools()
                .then(|| self.glorot(format!("{modality}.block{b}.pool.score_weight"), out, 1));
            blocks.push(Block { gcn, pool });
            width = out;
        }
        blocks
    }
}

impl Model {
    /// Builds a freshly initialized model.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut b = Builder {
            seed,
            params: Vec::new(),
        };
        let mut layout = Layout::default();
        let v = config.variant;
        if v == Variant::TwoBranchAvg {
            let e = config.avg_embed_dim();
            layout.embed.push(b.affine("image.embed", config.input_dim, e));
            layout.embed.push(b.affine("text.embed", config.input_dim, e));
        } else {
            if v.uses_image() {
                layout.image = b.branch("image", &config);
            }
            if v.uses_text() {
                layout.text = b.branch("text", &config);
            }
        }
        if v == Variant::Collaborative {
            for blk in 0..config.gcn_dims.len() {
                let gates = if config.shared_mu {
                    let m = b.filled(format!("fusion.block{blk}.mu"), Vec::new(), config.mu_init);
                    (m, m)
                } else {
                    (
                        b.filled(format!("fusion.block{blk}.into_image"), Vec::new(), config.mu_init),
                        b.filled(format!("fusion.block{blk}.into_text"), Vec::new(), config.mu_init),
                    )
                };
                layout.fusion.push(gates);
            }
        }
        let mut width = config.head_input_dim();
        for (i, &out) in config
            .fc_hidden
            .iter()
            .chain(core::iter::once(&NUM_CLASSES))
            .enumerate()
        {
            layout.head.push(b.affine(&format!("head.fc{i}"), width, out));
            width = out;
        }
        Ok(Model {
            config,
            params: b.params,
            layout,
        })
    }

    /// Rebuilds a model from stored parameters, checking names and shapes
    /// against the layout `config` implies.
    pub fn from_params(config: ModelConfig, params: Vec<Param>) -> Result<Self> {
        let mut model = Model::new(config, 0)?;
        if params.len() != model.params.len() {
            return Err(Error::Validation(format!(
                "expected {} parameters for variant {}, got {}",
                model.params.len(),
                model.config.variant,
                params.len()
            )));
        }
        for (slot, p) in model.params.iter_mut().zip(params) {
            if slot.name != p.name || slot.tensor.shape() != p.tensor.shape() {
                return Err(Error::Validation(format!(
                    "parameter mismatch: expected `{}` {:?}, got `{}` {:?}",
                    slot.name,
                    slot.tensor.shape(),
                    p.name,
                    p.tensor.shape()
                )));
            }
            slot.tensor = p.tensor;
            slot.tensor.requires_grad = true;
            slot.tensor.grad = None;
        }
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn variant(&self) -> Variant {
        self.config.variant
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param] {
        &mut self.params
    }

    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Overwrites one parameter's values, keeping its shape.
    pub fn set_param(&mut self, name: &str, tensor: Tensor) -> Result<()> {
        let p = self
            .params
            .iter_mut()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::Validation(format!("no parameter named `{name}`")))?;
        if p.tensor.shape() != tensor.shape() {
            return Err(Error::shape("set_param", p.tensor.shape(), tensor.shape()));
        }
        p.tensor = tensor.with_grad();
        Ok(())
    }

    /// Total number of trainable scalars.
    pub fn param_count(&self) -> usize {
        self.params.iter().map(|p| p.tensor.len()).sum()
    }

    /// Records every parameter as a gradient-tracking leaf.
    pub fn bind(&self, tape: &mut Tape) -> Bound {
        Bound {
            vars: self.params.iter().map(|p| tape.leaf(p.tensor.clone())).collect(),
        }
    }

    /// Copies gradients from the tape into the parameters. A parameter the
    /// loss does not depend on receives a zero gradient.
    pub fn collect_grads(&mut self, tape: &Tape, bound: &Bound) {
        for (p, &v) in self.params.iter_mut().zip(&bound.vars) {
            if !p.tensor.requires_grad {
                continue;
            }
            p.tensor.grad = Some(match tape.grad(v) {
                Some(g) => g.to_vec(),
                None => vec![0.0; p.tensor.len()],
            });
        }
    }

    fn check_bound(&self, bound: &Bound) -> Result<()> {
        if bound.vars.len() != self.params.len() {
            return Err(Error::Contract(format!(
                "bound {} parameters, model has {}",
                bound.vars.len(),
                self.params.len()
            )));
        }
        Ok(())
    }

    fn input(&self, tape: &mut Tape, batch: &GraphBatch) -> Result<(Topology, Var)> {
        let c = batch.features.cols();
        if c != self.config.input_dim {
            return Err(Error::Validation(format!(
                "feature dimension {c} does not match model input_dim {}",
                self.config.input_dim
            )));
        }
        Ok((batch.topology.clone(), tape.constant(batch.features.clone())))
    }

    fn pool_layer(&self, bound: &Bound, block: &Block) -> Option<SagPoolLayer> {
        block.pool.map(|i| SagPoolLayer {
            score_weight: bound.vars[i],
            ratio: self.config.pooling_ratio,
            gating: self.config.score_gating,
        })
    }

    fn head(&self, tape: &mut Tape, bound: &Bound, mut x: Var) -> Result<Var> {
        let last = self.layout.head.len() - 1;
        for (i, layer) in self.layout.head.iter().enumerate() {
            x = tape.matmul(x, bound.vars[layer.weight])?;
            x = tape.add_row(x, bound.vars[layer.bias])?;
            if i < last {
                x = tape.relu(x);
            }
        }
        Ok(x)
    }

    /// Two-branch graph forward pass (collaborative, +SAGPool and plain
    /// variants): per block convolve, fuse, pool; then readout, concat, head.
    pub fn forward(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        image: &GraphBatch,
        text: &GraphBatch,
    ) -> Result<Var> {
        self.check_bound(bound)?;
        if !self.config.variant.is_graph_two_branch() {
            return Err(Error::Contract(format!(
                "forward needs a two-branch graph variant, model is {}",
                self.config.variant
            )));
        }
        if image.graph_count() != text.graph_count() {
            return Err(Error::Contract(format!(
                "image batch has {} samples, text batch has {}",
                image.graph_count(),
                text.graph_count()
            )));
        }
        let (mut img_topo, mut img) = self.input(tape, image)?;
        let (mut txt_topo, mut txt) = self.input(tape, text)?;
        for (b, (ib, tb)) in self.layout.image.iter().zip(&self.layout.text).enumerate() {
            img = GcnLayer { weight: bound.vars[ib.gcn] }.forward(tape, &img_topo, img)?;
            txt = GcnLayer { weight: bound.vars[tb.gcn] }.forward(tape, &txt_topo, txt)?;
            if let Some(&(into_image, into_text)) = self.layout.fusion.get(b) {
                let fusion = FusionLayer {
                    into_image: bound.vars[into_image],
                    into_text: bound.vars[into_text],
                };
                (img, txt) = fusion.forward(tape, (&img_topo, img), (&txt_topo, txt))?;
            }
            if let Some(pool) = self.pool_layer(bound, ib) {
                let p = pool.forward(tape, &img_topo, img)?;
                (img, img_topo) = (p.features, p.topology);
            }
            if let Some(pool) = self.pool_layer(bound, tb) {
                let p = pool.forward(tape, &txt_topo, txt)?;
                (txt, txt_topo) = (p.features, p.topology);
            }
        }
        let ri = readout(tape, &img_topo, img)?;
        let rt = readout(tape, &txt_topo, txt)?;
        let joint = tape.concat_cols(ri, rt)?;
        self.head(tape, bound, joint)
    }

    /// Single-modality forward pass (image-only or text-only variants).
    pub fn forward_single_branch(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        batch: &GraphBatch,
    ) -> Result<Var> {
        self.check_bound(bound)?;
        let blocks = match self.config.variant {
            Variant::ImageOnly => &self.layout.image,
            Variant::TextOnly => &self.layout.text,
            v => {
                return Err(Error::Contract(format!(
                    "forward_single_branch needs image_only or text_only, model is {v}"
                )))
            }
        };
        let (mut topo, mut h) = self.input(tape, batch)?;
        for blk in blocks {
            h = GcnLayer { weight: bound.vars[blk.gcn] }.forward(tape, &topo, h)?;
            if let Some(pool) = self.pool_layer(bound, blk) {
                let p = pool.forward(tape, &topo, h)?;
                (h, topo) = (p.features, p.topology);
            }
        }
        let r = readout(tape, &topo, h)?;
        self.head(tape, bound, r)
    }

    /// Feature-averaging baseline: no graph structure, one mean vector per
    /// modality, affine + ReLU embedding, concatenation, shared head.
    pub fn forward_avg_baseline(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        image: &GraphBatch,
        text: &GraphBatch,
    ) -> Result<Var> {
        self.check_bound(bound)?;
        if self.config.variant != Variant::TwoBranchAvg {
            return Err(Error::Contract(format!(
                "forward_avg_baseline needs two_branch_avg, model is {}",
                self.config.variant
            )));
        }
        if image.graph_count() != text.graph_count() {
            return Err(Error::Contract(format!(
                "image batch has {} samples, text batch has {}",
                image.graph_count(),
                text.graph_count()
            )));
        }
        let mut embedded = Vec::with_capacity(2);
        for (batch, layer) in [image, text].into_iter().zip(&self.layout.embed) {
            let (topo, x) = self.input(tape, batch)?;
            let mean = tape.segment_mean(x, topo.segments())?;
            let e = tape.matmul(mean, bound.vars[layer.weight])?;
            let e = tape.add_row(e, bound.vars[layer.bias])?;
            embedded.push(tape.relu(e));
        }
        let joint = tape.concat_cols(embedded[0], embedded[1])?;
        self.head(tape, bound, joint)
    }

    /// Dispatches to the forward pass of this model's variant. Single-branch
    /// variants ignore the other modality.
    pub fn logits(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        image: &GraphBatch,
        text: &GraphBatch,
    ) -> Result<Var> {
        match self.config.variant {
            Variant::ImageOnly => self.forward_single_branch(tape, bound, image),
            Variant::TextOnly => self.forward_single_branch(tape, bound, text),
            Variant::TwoBranchAvg => self.forward_avg_baseline(tape, bound, image, text),
            _ => self.forward(tape, bound, image, text),
        }
    }

    /// Forward pass without gradient tracking; returns `[B×2]` logits.
    pub fn predict(&self, image: &GraphBatch, text: &GraphBatch) -> Result<Tensor> {
        let mut tape = Tape::new();
        let vars = self
            .params
            .iter()
            .map(|p| tape.constant(p.tensor.clone()))
            .collect();
        let bound = Bound { vars };
        let out = self.logits(&mut tape, &bound, image, text)?;
        Ok(tape.value(out).clone())
    }

    /// Parameter names in model order.
    pub fn param_names(&self) -> Vec<String> {
        self.params.iter().map(|p| p.name.to_string()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_matches_published_setup() {
        let c = ModelConfig::default();
        assert_eq!(c.input_dim, 256);
        assert_eq!(c.gcn_dims, vec![64, 32]);
        assert_eq!(c.pooling_ratio, 0.8);
        assert_eq!(c.fc_hidden, vec![64, 32]);
        assert_eq!(c.head_input_dim(), 128);
        assert_eq!(c.with_variant(Variant::TextOnly).head_input_dim(), 64);
    }

    #[test]
    fn collaborative_parameter_count() {
        let m = Model::new(ModelConfig::default(), 1).unwrap();
        let branch = 256 * 64 + 64 + 64 * 32 + 32;
        let head = 128 * 64 + 64 + 64 * 32 + 32 + 32 * 2 + 2;
        assert_eq!(m.param_count(), 2 * branch + 4 + head);
    }

    #[test]
    fn shared_mu_has_one_gate_per_block() {
        let cfg = ModelConfig {
            shared_mu: true,
            ..ModelConfig::default()
        };
        let m = Model::new(cfg, 1).unwrap();
        let plain = Model::new(ModelConfig::default(), 1).unwrap();
        assert_eq!(plain.param_count() - m.param_count(), 2);
        assert!(m.param("fusion.block1.mu").is_some());
    }

    #[test]
    fn shared_parameters_identical_across_variants() {
        let a = Model::new(ModelConfig::default(), 9).unwrap();
        let b = Model::new(ModelConfig::default().with_variant(Variant::TwoBranchSagpool), 9).unwrap();
        for p in b.params() {
            assert_eq!(a.param(&p.name).unwrap().tensor, p.tensor, "{}", p.name);
        }
        assert_eq!(a.param_count() - b.param_count(), 4);
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(Variant::from_name(v.name()), Some(v));
        }
        assert_eq!(Variant::from_name("ours"), None);
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = [
            ModelConfig {
                pooling_ratio: 0.0,
                ..ModelConfig::default()
            },
            ModelConfig {
                gcn_dims: vec![],
                ..ModelConfig::default()
            },
            ModelConfig {
                input_dim: 0,
                ..ModelConfig::default()
            },
        ];
        for c in bad {
            assert!(Model::new(c, 0).is_err());
        }
    }

    #[test]
    fn from_params_checks_layout() {
        let m = Model::new(ModelConfig::default(), 3).unwrap();
        let restored = Model::from_params(m.config().clone(), m.params().to_vec()).unwrap();
        assert_eq!(restored, m);
        let other = ModelConfig::default().with_variant(Variant::ImageOnly);
        assert!(Model::from_params(other, m.params().to_vec()).is_err());
    }
}
