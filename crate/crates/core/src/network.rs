//! The full multi-task topology: a shared convolutional backbone feeding
//! three pyramid-pooled heads.
//!
//! - objective-attribute head: 1-level pyramid, two fully connected layers;
//! - subjective-attribute head: 3-level pyramid, three fully connected
//!   layers (the deeper stack encodes higher-level information);
//! - landmark head: 1-level pyramid, two fully connected layers emitting
//!   2T coordinates.
//!
//! With grouping disabled a single subjective-style head (3-level pyramid,
//! three fully connected layers) predicts all attributes. The landmark head
//! is always built, last in initialization order, so networks that ignore it
//! share backbone and attribute-head weights bit-for-bit with networks that
//! use it. Head outputs are raw scores; thresholding happens at decision
//! time.
//!
//! Attribute ordering: the [`AttributeSpec`] order is canonical. An index
//! map translates between (head, slot) positions and canonical attribute
//! indices, and `Prediction::attributes` is always in canonical order.

use rand::Rng;

use crate::error::{Error, Result};
use crate::layer::{Layer, LayerKind};
use crate::spp::{spp_backward, spp_forward, SppConfig};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttributeGroup {
    Objective,
    Subjective,
}

/// Ordered attribute names with a learning-complexity group tag each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeSpec {
    names: Vec<String>,
    groups: Vec<AttributeGroup>,
}

impl AttributeSpec {
    pub fn new(names: Vec<String>, groups: Vec<AttributeGroup>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidConfig("attribute list is empty".into()));
        }
        if names.len() != groups.len() {
            return Err(Error::InvalidConfig(format!(
                "{} attribute names but {} group tags",
                names.len(),
                groups.len()
            )));
        }
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() || name.contains(char::is_whitespace) || name.contains(',') {
                return Err(Error::InvalidConfig(format!(
                    "attribute name {name:?} must be nonempty without whitespace or commas"
                )));
            }
            if names[..i].contains(name) {
                return Err(Error::InvalidConfig(format!("duplicate attribute name {name:?}")));
            }
        }
        Ok(AttributeSpec { names, groups })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn groups(&self) -> &[AttributeGroup] {
        &self.groups
    }

    pub fn objective_count(&self) -> usize {
        self.groups
            .iter()
            .filter(|g| **g == AttributeGroup::Objective)
            .count()
    }

    pub fn subjective_count(&self) -> usize {
        self.len() - self.objective_count()
    }

    /// Canonical indices of the attributes in a group, in spec order. The
    /// position inside this list is the attribute's slot in the group head.
    pub fn group_indices(&self, group: AttributeGroup) -> Vec<usize> {
        self.groups
            .iter()
            .enumerate()
            .filter(|(_, g)| **g == group)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Shared feature extractor: a stack of conv -> ReLU -> max-pool blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackboneConfig {
    pub in_channels: usize,
    /// Output channels of each block.
    pub block_channels: Vec<usize>,
    pub conv_kernel: usize,
    pub pool_size: usize,
}

impl Default for BackboneConfig {
    fn default() -> Self {
        BackboneConfig {
            in_channels: 1,
            block_channels: vec![8, 16, 32],
            conv_kernel: 3,
            pool_size: 2,
        }
    }
}

impl BackboneConfig {
    pub fn out_channels(&self) -> usize {
        *self.block_channels.last().unwrap_or(&self.in_channels)
    }

    fn validate(&self) -> Result<()> {
        if self.in_channels == 0
            || self.block_channels.is_empty()
            || self.block_channels.contains(&0)
            || self.conv_kernel == 0
            || self.pool_size == 0
        {
            return Err(Error::InvalidConfig(format!("bad backbone config: {self:?}")));
        }
        Ok(())
    }

    fn build<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<Layer>> {
        self.validate()?;
        let mut layers = Vec::new();
        let mut in_ch = self.in_channels;
        for &out_ch in &self.block_channels {
            layers.push(Layer::new(
                LayerKind::Conv2d {
                    in_channels: in_ch,
                    out_channels: out_ch,
                    kernel: self.conv_kernel,
                    stride: 1,
                    padding: self.conv_kernel / 2,
                },
                rng,
            )?);
            layers.push(Layer::new(LayerKind::ReLU, rng)?);
            layers.push(Layer::new(
                LayerKind::MaxPool2d {
                    kernel: self.pool_size,
                    stride: self.pool_size,
                },
                rng,
            )?);
            in_ch = out_ch;
        }
        Ok(layers)
    }
}

/// Hidden widths of the three heads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadConfig {
    pub objective_hidden: usize,
    pub subjective_hidden: (usize, usize),
    pub fld_hidden: usize,
}

impl Default for HeadConfig {
    fn default() -> Self {
        HeadConfig {
            objective_hidden: 1024,
            subjective_hidden: (2048, 1024),
            fld_hidden: 1024,
        }
    }
}

impl HeadConfig {
    /// A small variant for quick experiments.
    pub fn desk_scale() -> Self {
        HeadConfig {
            objective_hidden: 64,
            subjective_hidden: (64, 32),
            fld_hidden: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkConfig {
    pub backbone: BackboneConfig,
    pub heads: HeadConfig,
    /// When false, a single subjective-style head predicts every attribute.
    pub grouped: bool,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            backbone: BackboneConfig::default(),
            heads: HeadConfig::default(),
            grouped: true,
        }
    }
}

/// Dimension plan of the wired network: every fully connected layer's
/// (input, output) size per head. Checking the plan is cheap at any scale,
/// no parameters are allocated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkPlan {
    pub feature_channels: usize,
    pub objective_fc: Vec<(usize, usize)>,
    pub subjective_fc: Vec<(usize, usize)>,
    pub fld_fc: Vec<(usize, usize)>,
}

pub fn plan_network(
    spec: &AttributeSpec,
    config: &NetworkConfig,
    landmark_count: usize,
) -> Result<NetworkPlan> {
    if landmark_count == 0 {
        return Err(Error::InvalidConfig("landmark count must be positive".into()));
    }
    config.backbone.validate()?;
    let c = config.backbone.out_channels();
    let spp1 = SppConfig::new(1)?.output_len(c);
    let spp3 = SppConfig::new(3)?.output_len(c);
    let h = &config.heads;
    let (objective_fc, subjective_fc) = if config.grouped {
        let j_obj = spec.objective_count();
        let j_subj = spec.subjective_count();
        if j_obj == 0 || j_subj == 0 {
            return Err(Error::InvalidConfig(format!(
                "grouping needs both groups populated, got {j_obj} objective / {j_subj} subjective"
            )));
        }
        (
            vec![(spp1, h.objective_hidden), (h.objective_hidden, j_obj)],
            vec![
                (spp3, h.subjective_hidden.0),
                (h.subjective_hidden.0, h.subjective_hidden.1),
                (h.subjective_hidden.1, j_subj),
            ],
        )
    } else {
        (
            Vec::new(),
            vec![
                (spp3, h.subjective_hidden.0),
                (h.subjective_hidden.0, h.subjective_hidden.1),
                (h.subjective_hidden.1, spec.len()),
            ],
        )
    };
    Ok(NetworkPlan {
        feature_channels: c,
        objective_fc,
        subjective_fc,
        fld_fc: vec![(spp1, h.fld_hidden), (h.fld_hidden, 2 * landmark_count)],
    })
}

/// One pyramid-pooled head: SPP followed by a fully connected stack with
/// ReLU between hidden layers and a raw linear output.
#[derive(Debug, Clone)]
struct Head {
    spp: SppConfig,
    layers: Vec<Layer>,
}

impl Head {
    fn build<R: Rng + ?Sized>(levels: usize, fc_dims: &[(usize, usize)], rng: &mut R) -> Result<Self> {
        let spp = SppConfig::new(levels)?;
        let mut layers = Vec::new();
        for (i, &(in_dim, out_dim)) in fc_dims.iter().enumerate() {
            layers.push(Layer::new(LayerKind::FullyConnected { in_dim, out_dim }, rng)?);
            if i + 1 < fc_dims.len() {
                layers.push(Layer::new(LayerKind::ReLU, rng)?);
            }
        }
        Ok(Head { spp, layers })
    }

    fn forward(&self, features: &Tensor) -> Result<(Vec<Tensor>, Vec<f64>)> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(spp_forward(features, &self.spp)?);
        for layer in &self.layers {
            let next = layer.forward(acts.last().unwrap())?;
            acts.push(next);
        }
        let out = acts.last().unwrap().data().to_vec();
        Ok((acts, out))
    }

    /// Backprop through the stack and the pyramid; returns the gradient on
    /// the shared feature map.
    fn backward(&mut self, features: &Tensor, acts: &[Tensor], upstream: &[f64]) -> Result<Tensor> {
        let mut grad = Tensor::from_vec(upstream.to_vec());
        for (layer, input) in self.layers.iter_mut().zip(acts).rev() {
            grad = layer.backward(input, &grad)?;
        }
        spp_backward(features, &self.spp, &grad)
    }
}

#[derive(Debug, Clone)]
enum AttributeHeads {
    Grouped { objective: Head, subjective: Head },
    Unified(Head),
}

/// Raw head outputs of one forward pass.
#[derive(Debug, Clone)]
pub enum HeadOutputs {
    Grouped {
        objective: Vec<f64>,
        subjective: Vec<f64>,
    },
    Unified(Vec<f64>),
}

/// Outputs of a full forward pass: attribute scores in canonical spec order,
/// normalized landmark coordinates, and the raw per-head vectors.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub attributes: Vec<f64>,
    pub landmarks: Vec<f64>,
    pub heads: HeadOutputs,
}

#[derive(Debug, Clone)]
pub struct DmmNetwork {
    spec: AttributeSpec,
    config: NetworkConfig,
    landmark_count: usize,
    backbone: Vec<Layer>,
    heads: AttributeHeads,
    fld: Head,
    objective_indices: Vec<usize>,
    subjective_indices: Vec<usize>,
}

pub(crate) struct ForwardTrace {
    backbone_acts: Vec<Tensor>,
    objective: Option<Vec<Tensor>>,
    subjective: Vec<Tensor>,
    fld: Vec<Tensor>,
    pub outputs: Prediction,
}

pub fn build_network<R: Rng + ?Sized>(
    spec: &AttributeSpec,
    config: &NetworkConfig,
    landmark_count: usize,
    rng: &mut R,
) -> Result<DmmNetwork> {
    let plan = plan_network(spec, config, landmark_count)?;
    let backbone = config.backbone.build(rng)?;
    // landmark head is built last so attribute-only training and joint
    // training share identical backbone/head initializations per seed
    let heads = if config.grouped {
        let objective = Head::build(1, &plan.objective_fc, rng)?;
        let subjective = Head::build(3, &plan.subjective_fc, rng)?;
        AttributeHeads::Grouped {
            objective,
            subjective,
        }
    } else {
        AttributeHeads::Unified(Head::build(3, &plan.subjective_fc, rng)?)
    };
    let fld = Head::build(1, &plan.fld_fc, rng)?;
    Ok(DmmNetwork {
        spec: spec.clone(),
        config: config.clone(),
        landmark_count,
        backbone,
        heads,
        fld,
        objective_indices: spec.group_indices(AttributeGroup::Objective),
        subjective_indices: spec.group_indices(AttributeGroup::Subjective),
    })
}

impl DmmNetwork {
    pub fn spec(&self) -> &AttributeSpec {
        &self.spec
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn landmark_count(&self) -> usize {
        self.landmark_count
    }

    /// Reassembles per-head outputs into the canonical attribute order.
    pub fn assemble_attributes(&self, heads: &HeadOutputs) -> Vec<f64> {
        match heads {
            HeadOutputs::Unified(all) => all.clone(),
            HeadOutputs::Grouped {
                objective,
                subjective,
            } => {
                let mut out = vec![0.0; self.spec.len()];
                for (slot, &j) in self.objective_indices.iter().enumerate() {
                    out[j] = objective[slot];
                }
                for (slot, &j) in self.subjective_indices.iter().enumerate() {
                    out[j] = subjective[slot];
                }
                out
            }
        }
    }

    /// Scatters a canonical-order attribute gradient back to head slots.
    fn scatter_attribute_grad(&self, canonical: &[f64]) -> (Option<Vec<f64>>, Vec<f64>) {
        match &self.heads {
            AttributeHeads::Unified(_) => (None, canonical.to_vec()),
            AttributeHeads::Grouped { .. } => {
                let obj = self.objective_indices.iter().map(|&j| canonical[j]).collect();
                let subj = self.subjective_indices.iter().map(|&j| canonical[j]).collect();
                (Some(obj), subj)
            }
        }
    }

    pub fn forward(&self, image: &Tensor) -> Result<Prediction> {
        Ok(self.forward_trace(image)?.outputs)
    }

    pub(crate) fn forward_trace(&self, image: &Tensor) -> Result<ForwardTrace> {
        let mut backbone_acts = Vec::with_capacity(self.backbone.len() + 1);
        backbone_acts.push(image.clone());
        for layer in &self.backbone {
            let next = layer.forward(backbone_acts.last().unwrap())?;
            backbone_acts.push(next);
        }
        let features = backbone_acts.last().unwrap();

        let (objective, subjective, heads_out) = match &self.heads {
            AttributeHeads::Grouped {
                objective,
                subjective,
            } => {
                let (obj_acts, obj_out) = objective.forward(features)?;
                let (subj_acts, subj_out) = subjective.forward(features)?;
                (
                    Some(obj_acts),
                    subj_acts,
                    HeadOutputs::Grouped {
                        objective: obj_out,
                        subjective: subj_out,
                    },
                )
            }
            AttributeHeads::Unified(head) => {
                let (acts, out) = head.forward(features)?;
                (None, acts, HeadOutputs::Unified(out))
            }
        };
        let (fld_acts, fld_out) = self.fld.forward(features)?;

        let attributes = self.assemble_attributes(&heads_out);
        Ok(ForwardTrace {
            backbone_acts,
            objective,
            subjective,
            fld: fld_acts,
            outputs: Prediction {
                attributes,
                landmarks: fld_out,
                heads: heads_out,
            },
        })
    }

    /// Accumulates parameter gradients for one sample given upstream
    /// gradients on the canonical attribute vector and on the landmark
    /// vector. The shared backbone receives the sum of all head
    /// contributions. Returns the gradient with respect to the input image.
    pub fn accumulate_gradients(
        &mut self,
        image: &Tensor,
        d_attributes: &[f64],
        d_landmarks: &[f64],
    ) -> Result<Tensor> {
        let trace = self.forward_trace(image)?;
        self.backward_from_trace(&trace, d_attributes, d_landmarks)
    }

    pub(crate) fn backward_from_trace(
        &mut self,
        trace: &ForwardTrace,
        d_attributes: &[f64],
        d_landmarks: &[f64],
    ) -> Result<Tensor> {
        if d_attributes.len() != self.spec.len() {
            return Err(Error::ShapeMismatch {
                context: "attribute head gradient".to_string(),
                expected: vec![self.spec.len()],
                actual: vec![d_attributes.len()],
            });
        }
        if d_landmarks.len() != 2 * self.landmark_count {
            return Err(Error::ShapeMismatch {
                context: "landmark head gradient".to_string(),
                expected: vec![2 * self.landmark_count],
                actual: vec![d_landmarks.len()],
            });
        }
        let features = trace.backbone_acts.last().unwrap();
        let (d_obj, d_subj) = self.scatter_attribute_grad(d_attributes);

        let mut d_features = match (&mut self.heads, d_obj) {
            (
                AttributeHeads::Grouped {
                    objective,
                    subjective,
                },
                Some(d_obj),
            ) => {
                let obj_acts = trace.objective.as_ref().expect("grouped trace");
                let mut grad = objective.backward(features, obj_acts, &d_obj)?;
                let subj_grad = subjective.backward(features, &trace.subjective, &d_subj)?;
                for (a, b) in grad.data_mut().iter_mut().zip(subj_grad.data()) {
                    *a += b;
                }
                grad
            }
            (AttributeHeads::Unified(head), _) => {
                head.backward(features, &trace.subjective, &d_subj)?
            }
            _ => unreachable!("grouped heads always receive an objective gradient"),
        };
        let fld_grad = self.fld.backward(features, &trace.fld, d_landmarks)?;
        for (a, b) in d_features.data_mut().iter_mut().zip(fld_grad.data()) {
            *a += b;
        }

        let mut grad = d_features;
        for (layer, input) in self.backbone.iter_mut().zip(&trace.backbone_acts).rev() {
            grad = layer.backward(input, &grad)?;
        }
        Ok(grad)
    }

    fn layers(&self) -> Vec<&Layer> {
        let mut out: Vec<&Layer> = self.backbone.iter().collect();
        match &self.heads {
            AttributeHeads::Grouped {
                objective,
                subjective,
            } => {
                out.extend(objective.layers.iter());
                out.extend(subjective.layers.iter());
            }
            AttributeHeads::Unified(head) => out.extend(head.layers.iter()),
        }
        out.extend(self.fld.layers.iter());
        out
    }

    fn layers_mut(&mut self) -> Vec<&mut Layer> {
        let mut out: Vec<&mut Layer> = self.backbone.iter_mut().collect();
        match &mut self.heads {
            AttributeHeads::Grouped {
                objective,
                subjective,
            } => {
                out.extend(objective.layers.iter_mut());
                out.extend(subjective.layers.iter_mut());
            }
            AttributeHeads::Unified(head) => out.extend(head.layers.iter_mut()),
        }
        out.extend(self.fld.layers.iter_mut());
        out
    }

    fn backbone_layer_count(&self) -> usize {
        self.backbone.len()
    }

    /// One SGD step over every parameter tensor, then gradient accumulators
    /// are cleared. With `freeze_backbone` the backbone keeps its weights
    /// (its accumulators are still cleared).
    pub fn sgd_step(&mut self, lr: f64, momentum: f64, freeze_backbone: bool) {
        let backbone_len = self.backbone_layer_count();
        for (i, layer) in self.layers_mut().into_iter().enumerate() {
            if freeze_backbone && i < backbone_len {
                layer.zero_gradients();
            } else {
                layer.sgd_step(lr, momentum);
            }
        }
    }

    pub fn zero_gradients(&mut self) {
        for layer in self.layers_mut() {
            layer.zero_gradients();
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(|l| l.param_count()).sum()
    }

    /// Parameter tensors in a fixed order (weights then bias per layer;
    /// backbone, attribute heads, landmark head). This order defines the
    /// checkpoint layout and the flat parameter indexing below.
    pub fn param_tensors(&self) -> Vec<&Tensor> {
        let mut out = Vec::new();
        for layer in self.layers() {
            if let Some(p) = layer.params() {
                out.push(&p.weights);
                out.push(&p.bias);
            }
        }
        out
    }

    pub fn param_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        for layer in self.layers_mut() {
            if let Some(p) = layer.params_mut() {
                out.push(&mut p.weights);
                out.push(&mut p.bias);
            }
        }
        out
    }

    /// Flat view of all accumulated parameter gradients, matching the
    /// indexing of [`DmmNetwork::get_param`].
    pub fn gradient_vector(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in self.layers() {
            if let Some(p) = layer.params() {
                out.extend_from_slice(p.weight_grad.data());
                out.extend_from_slice(p.bias_grad.data());
            }
        }
        out
    }

    pub fn get_param(&self, index: usize) -> f64 {
        let mut offset = index;
        for t in self.param_tensors() {
            if offset < t.len() {
                return t.data()[offset];
            }
            offset -= t.len();
        }
        panic!("parameter index {index} out of range");
    }

    pub fn set_param(&mut self, index: usize, value: f64) {
        let mut offset = index;
        for t in self.param_tensors_mut() {
            if offset < t.len() {
                t.data_mut()[offset] = value;
                return;
            }
            offset -= t.len();
        }
        panic!("parameter index {index} out of range");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec6() -> AttributeSpec {
        AttributeSpec::new(
            vec!["a0", "a1", "a2", "s0", "s1", "s2"]
                .into_iter()
                .map(String::from)
                .collect(),
            vec![
                AttributeGroup::Objective,
                AttributeGroup::Objective,
                AttributeGroup::Objective,
                AttributeGroup::Subjective,
                AttributeGroup::Subjective,
                AttributeGroup::Subjective,
            ],
        )
        .unwrap()
    }

    fn interleaved_spec() -> AttributeSpec {
        AttributeSpec::new(
            vec!["x0", "x1", "x2", "x3"].into_iter().map(String::from).collect(),
            vec![
                AttributeGroup::Subjective,
                AttributeGroup::Objective,
                AttributeGroup::Subjective,
                AttributeGroup::Objective,
            ],
        )
        .unwrap()
    }

    fn desk_config() -> NetworkConfig {
        NetworkConfig {
            backbone: BackboneConfig {
                in_channels: 1,
                block_channels: vec![4, 8],
                conv_kernel: 3,
                pool_size: 2,
            },
            heads: HeadConfig {
                objective_hidden: 16,
                subjective_hidden: (16, 8),
                fld_hidden: 16,
            },
            grouped: true,
        }
    }

    fn image(h: usize, w: usize, seed: u64) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..h * w).map(|_| rng.random_range(0.0..1.0)).collect();
        Tensor::new(vec![1, h, w], data).unwrap()
    }

    #[test]
    fn full_scale_plan_matches_published_dimensions() {
        // 40 attributes split 22 objective / 18 subjective, 72 landmarks,
        // 2048 shared channels
        let names: Vec<String> = (0..40).map(|i| format!("attr{i:02}")).collect();
        let mut groups = vec![AttributeGroup::Objective; 22];
        groups.extend(vec![AttributeGroup::Subjective; 18]);
        let spec = AttributeSpec::new(names, groups).unwrap();
        let config = NetworkConfig {
            backbone: BackboneConfig {
                in_channels: 3,
                block_channels: vec![2048],
                conv_kernel: 3,
                pool_size: 2,
            },
            heads: HeadConfig::default(),
            grouped: true,
        };
        let plan = plan_network(&spec, &config, 72).unwrap();
        assert_eq!(plan.objective_fc, vec![(2048, 1024), (1024, 22)]);
        assert_eq!(plan.subjective_fc, vec![(28_672, 2048), (2048, 1024), (1024, 18)]);
        assert_eq!(plan.fld_fc, vec![(2048, 1024), (1024, 144)]);
    }

    #[test]
    fn desk_scale_plan() {
        let spec = spec6();
        let config = NetworkConfig {
            backbone: BackboneConfig {
                in_channels: 1,
                block_channels: vec![8],
                conv_kernel: 3,
                pool_size: 2,
            },
            heads: HeadConfig {
                objective_hidden: 16,
                subjective_hidden: (16, 8),
                fld_hidden: 16,
            },
            grouped: true,
        };
        let plan = plan_network(&spec, &config, 4).unwrap();
        assert_eq!(plan.subjective_fc[0].0, 112); // 8 * 14
        assert_eq!(plan.fld_fc.last().unwrap().1, 8); // 2T
    }

    #[test]
    fn ungrouped_plan_has_single_three_layer_head() {
        let spec = spec6();
        let mut config = desk_config();
        config.grouped = false;
        let plan = plan_network(&spec, &config, 4).unwrap();
        assert!(plan.objective_fc.is_empty());
        assert_eq!(plan.subjective_fc.len(), 3);
        assert_eq!(plan.subjective_fc.last().unwrap().1, 6);
    }

    #[test]
    fn empty_group_is_rejected_when_grouping_enabled() {
        let spec = AttributeSpec::new(
            vec!["only".to_string()],
            vec![AttributeGroup::Objective],
        )
        .unwrap();
        let config = desk_config();
        assert!(plan_network(&spec, &config, 4).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(build_network(&spec, &config, 4, &mut rng).is_err());
    }

    #[test]
    fn zero_weight_network_outputs_biases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut net = build_network(&spec6(), &desk_config(), 4, &mut rng).unwrap();
        for t in net.param_tensors_mut() {
            t.fill(0.0);
        }
        let pred = net.forward(&image(8, 8, 2)).unwrap();
        assert!(pred.attributes.iter().all(|&v| v == 0.0));
        assert!(pred.landmarks.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn forward_is_deterministic_per_seed() {
        let build = || {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            build_network(&spec6(), &desk_config(), 4, &mut rng).unwrap()
        };
        let a = build().forward(&image(8, 8, 3)).unwrap();
        let b = build().forward(&image(8, 8, 3)).unwrap();
        assert_eq!(a.attributes, b.attributes);
        assert_eq!(a.landmarks, b.landmarks);
    }

    #[test]
    fn canonical_attribute_vector_matches_head_slots_via_index_map() {
        let spec = interleaved_spec();
        let mut config = desk_config();
        config.backbone.block_channels = vec![4];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let net = build_network(&spec, &config, 2, &mut rng).unwrap();
        let pred = net.forward(&image(8, 8, 7)).unwrap();
        let HeadOutputs::Grouped {
            objective,
            subjective,
        } = &pred.heads
        else {
            panic!("expected grouped heads");
        };
        // independent reconstruction from the spec's group order
        let obj_idx = spec.group_indices(AttributeGroup::Objective);
        let subj_idx = spec.group_indices(AttributeGroup::Subjective);
        assert_eq!(obj_idx, vec![1, 3]);
        assert_eq!(subj_idx, vec![0, 2]);
        let mut expected = vec![0.0; 4];
        for (slot, &j) in obj_idx.iter().enumerate() {
            expected[j] = objective[slot];
        }
        for (slot, &j) in subj_idx.iter().enumerate() {
            expected[j] = subjective[slot];
        }
        assert_eq!(pred.attributes, expected);
    }

    #[test]
    fn same_network_accepts_multiple_input_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let net = build_network(&spec6(), &desk_config(), 4, &mut rng).unwrap();
        let small = net.forward(&image(8, 8, 1)).unwrap();
        let large = net.forward(&image(20, 12, 2)).unwrap();
        assert_eq!(small.attributes.len(), large.attributes.len());
        assert_eq!(small.landmarks.len(), large.landmarks.len());
    }

    #[test]
    fn zero_landmark_gradient_reproduces_attribute_only_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut net = build_network(&spec6(), &desk_config(), 4, &mut rng).unwrap();
        let img = image(8, 8, 19);
        let d_attr = vec![0.25, -0.5, 1.0, 0.75, -1.0, 0.1];
        let n_fld_params: usize = net.fld.layers.iter().map(|l| l.param_count()).sum();

        net.accumulate_gradients(&img, &d_attr, &vec![0.0; 8]).unwrap();
        let with_zero_fld = net.gradient_vector();
        net.zero_gradients();

        // the landmark head received exactly zero gradient
        let tail = &with_zero_fld[with_zero_fld.len() - n_fld_params..];
        assert!(tail.iter().all(|&g| g == 0.0));

        // and the rest of the gradient does not depend on the landmark head
        // at all: perturbing its weights changes nothing upstream
        let mut mutated = net.clone();
        for layer in &mut mutated.fld.layers {
            if let Some(p) = layer.params_mut() {
                p.weights.fill(3.5);
                p.bias.fill(-1.25);
            }
        }
        mutated.accumulate_gradients(&img, &d_attr, &vec![0.0; 8]).unwrap();
        let mutated_grads = mutated.gradient_vector();
        let shared = with_zero_fld.len() - n_fld_params;
        assert_eq!(with_zero_fld[..shared], mutated_grads[..shared]);
    }

    #[test]
    fn backbone_gradient_is_additive_across_heads() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let net = build_network(&spec6(), &desk_config(), 4, &mut rng).unwrap();
        let img = image(8, 8, 29);
        let d_attr = vec![0.3, -0.2, 0.8, -0.9, 0.4, 0.6];
        let d_fld: Vec<f64> = (0..8).map(|i| 0.1 * (i as f64 + 1.0)).collect();
        let backbone_params: usize = net.backbone.iter().map(|l| l.param_count()).sum();

        let grads_for = |da: &[f64], dl: &[f64]| {
            let mut n = net.clone();
            n.accumulate_gradients(&img, da, dl).unwrap();
            n.gradient_vector()[..backbone_params].to_vec()
        };

        let both = grads_for(&d_attr, &d_fld);
        let attr_only = grads_for(&d_attr, &vec![0.0; 8]);
        let fld_only = grads_for(&vec![0.0; 6], &d_fld);
        for i in 0..backbone_params {
            let sum = attr_only[i] + fld_only[i];
            let denom = both[i].abs().max(sum.abs()).max(1e-12);
            assert!(
                ((both[i] - sum) / denom).abs() < 1e-9,
                "backbone gradient not additive at {i}"
            );
        }
    }

    #[test]
    fn frozen_backbone_keeps_backbone_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut net = build_network(&spec6(), &desk_config(), 4, &mut rng).unwrap();
        let before: Vec<f64> = net
            .backbone
            .iter()
            .filter_map(|l| l.params())
            .flat_map(|p| p.weights.data().to_vec())
            .collect();
        net.accumulate_gradients(&image(8, 8, 37), &[1.0; 6], &[1.0; 8]).unwrap();
        net.sgd_step(0.1, 0.0, true);
        let after: Vec<f64> = net
            .backbone
            .iter()
            .filter_map(|l| l.params())
            .flat_map(|p| p.weights.data().to_vec())
            .collect();
        assert_eq!(before, after);
    }

    #[test]
    fn duplicate_attribute_names_rejected() {
        assert!(AttributeSpec::new(
            vec!["a".to_string(), "a".to_string()],
            vec![AttributeGroup::Objective, AttributeGroup::Subjective],
        )
        .is_err());
    }
}
