//! The composed network: node layer, subnet layer, global decoder.
//!
//! Graph variants run a shared temporal encoder on every node's scalar
//! sequence, optionally reweight it over time with attention, mix nodes per
//! time step with a graph convolution, encode again and pool each node to a
//! vector. Node vectors are averaged within subnets and decoded. Graph-free
//! variants pool straight after the node encoder.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::attention::{Attention, AttentionTrace};
use super::conv::{ConvTrace, TemporalConv};
use super::decoder::{Decoder, DecoderTrace, NUM_CLASSES};
use super::gcn::{Gcn, GcnTrace};
use super::gru::{Gru, GruTrace};
use crate::graph::{GraphSample, RadarGraph};
use crate::sim::seeds::{derive_seed, TAG_INIT};
use crate::{Error, Result, Scalar};

/// Probability clamp inside the loss.
pub const PROB_CLIP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemporalKind {
    /// Plain GRU, read out by its last hidden state.
    Gru,
    /// GRU followed by temporal attention.
    AttGru,
    /// Width-3 tanh convolution, read out by its time mean.
    Conv,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub temporal: TemporalKind,
    /// Graph convolution and second temporal stage on/off.
    pub graph: bool,
    /// Dense subnet index per node; its length is the node count.
    pub subnet_of: Vec<usize>,
    pub hidden: usize,
    pub decoder_channels: usize,
}

impl ModelSpec {
    pub fn num_nodes(&self) -> usize {
        self.subnet_of.len()
    }

    pub fn num_subnets(&self) -> usize {
        self.subnet_of.iter().max().map_or(0, |m| m + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.subnet_of.is_empty() || self.hidden == 0 || self.decoder_channels == 0 {
            return Err(Error::InvalidConfig(format!("degenerate model spec {self:?}")));
        }
        for s in 0..self.num_subnets() {
            if !self.subnet_of.contains(&s) {
                return Err(Error::InvalidConfig(format!("subnet {s} has no nodes")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamBlock {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
    pub len: usize,
    pub fan_in: usize,
}

#[derive(Clone, Copy, Debug)]
enum Core {
    Gru(Gru),
    Conv(TemporalConv),
}

#[derive(Clone, Debug)]
enum CoreTrace<T> {
    Gru(GruTrace<T>),
    Conv(ConvTrace<T>),
}

impl Core {
    fn new(kind: TemporalKind, input: usize, hidden: usize) -> Self {
        match kind {
            TemporalKind::Conv => Core::Conv(TemporalConv::new(input, hidden)),
            _ => Core::Gru(Gru::new(input, hidden)),
        }
    }

    fn param_len(&self) -> usize {
        match self {
            Core::Gru(g) => g.param_len(),
            Core::Conv(c) => c.param_len(),
        }
    }

    fn blocks(&self) -> Vec<(&'static str, Vec<usize>, usize)> {
        match self {
            Core::Gru(g) => g.blocks(),
            Core::Conv(c) => c.blocks(),
        }
    }

    fn forward<T: Scalar>(&self, p: &[T], xs: &[T]) -> (Vec<T>, CoreTrace<T>) {
        match self {
            Core::Gru(g) => {
                let tr = g.forward(p, xs);
                (tr.outputs(g.hidden).to_vec(), CoreTrace::Gru(tr))
            }
            Core::Conv(c) => {
                let tr = c.forward(p, xs);
                (tr.ys.clone(), CoreTrace::Conv(tr))
            }
        }
    }

    fn backward<T: Scalar>(&self, p: &[T], tr: &CoreTrace<T>, douts: &[T], grad: &mut [T], dxs: Option<&mut [T]>) {
        match (self, tr) {
            (Core::Gru(g), CoreTrace::Gru(t)) => g.backward(p, t, douts, grad, dxs),
            (Core::Conv(c), CoreTrace::Conv(t)) => c.backward(p, t, douts, grad, dxs),
            _ => unreachable!("trace from another core"),
        }
    }
}

#[derive(Clone, Debug)]
enum Readout<T> {
    Attention(AttentionTrace<T>),
    Last,
    Mean,
}

/// Per-node intermediate state of one forward pass.
#[derive(Clone, Debug)]
struct NodeCache<T> {
    node_core: CoreTrace<T>,
    node_out: Vec<T>,
    reweight: Option<AttentionTrace<T>>,
    sub_core: Option<CoreTrace<T>>,
    /// Sequence entering the final readout.
    final_seq: Vec<T>,
    readout: Readout<T>,
}

/// Everything the backward pass needs.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    nodes: Vec<NodeCache<T>>,
    mixed_in: Vec<Vec<T>>,
    gcn: Option<GcnTrace<T>>,
    decoder: DecoderTrace<T>,
}

impl<T: Scalar> ForwardCache<T> {
    pub fn probs(&self) -> &[T] {
        &self.decoder.probs
    }

    pub fn logits(&self) -> &[T] {
        &self.decoder.logits
    }
}

/// Parameter layout and forward/backward for one [`ModelSpec`].
#[derive(Clone, Debug)]
pub struct Model {
    spec: ModelSpec,
    node_core: Core,
    node_att: Option<Attention>,
    gcn: Option<Gcn>,
    sub_core: Option<Core>,
    sub_att: Option<Attention>,
    decoder: Decoder,
    ranges: [Range<usize>; 6],
    blocks: Vec<ParamBlock>,
}

impl Model {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        let h = spec.hidden;
        let att = spec.temporal == TemporalKind::AttGru;
        let node_core = Core::new(spec.temporal, 1, h);
        let node_att = att.then(|| Attention::new(h));
        let gcn = spec.graph.then(|| Gcn::new(h, h));
        let sub_core = spec.graph.then(|| Core::new(spec.temporal, h, h));
        let sub_att = (att && spec.graph).then(|| Attention::new(h));
        let decoder = Decoder::new(spec.num_subnets() * h, spec.decoder_channels)?;

        let parts: [(&str, Vec<(&'static str, Vec<usize>, usize)>); 6] = [
            ("node", node_core.blocks()),
            ("node_attention", node_att.map(|a| a.blocks()).unwrap_or_default()),
            ("gcn", gcn.map(|g| g.blocks()).unwrap_or_default()),
            ("subnet", sub_core.map(|c| c.blocks()).unwrap_or_default()),
            ("subnet_attention", sub_att.map(|a| a.blocks()).unwrap_or_default()),
            ("decoder", decoder.blocks()),
        ];
        let mut blocks = Vec::new();
        let mut offset = 0;
        let ranges = parts.map(|(prefix, bl)| {
            let start = offset;
            for (name, shape, fan_in) in bl {
                let len = shape.iter().product();
                blocks.push(ParamBlock { name: format!("{prefix}.{name}"), shape, offset, len, fan_in });
                offset += len;
            }
            start..offset
        });
        let model = Self { spec: spec.clone(), node_core, node_att, gcn, sub_core, sub_att, decoder, ranges, blocks };
        debug_assert_eq!(model.param_len(), model.expected_len());
        Ok(model)
    }

    fn expected_len(&self) -> usize {
        self.node_core.param_len()
            + self.node_att.map_or(0, |a| a.param_len())
            + self.gcn.map_or(0, |g| g.param_len())
            + self.sub_core.map_or(0, |c| c.param_len())
            + self.sub_att.map_or(0, |a| a.param_len())
            + self.decoder.param_len()
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn blocks(&self) -> &[ParamBlock] {
        &self.blocks
    }

    pub fn param_len(&self) -> usize {
        self.ranges[5].end
    }

    /// Uniform `+-1/sqrt(fan_in)` per block from its own stream; norm gains
    /// start at 1 and norm biases at 0.
    pub fn init<T: Scalar>(&self, seed: u64) -> Vec<T> {
        let mut values = vec![T::zero(); self.param_len()];
        for (i, b) in self.blocks.iter().enumerate() {
            let dst = &mut values[b.offset..b.offset + b.len];
            if b.name.ends_with("norm_gain") {
                dst.iter_mut().for_each(|v| *v = T::one());
                continue;
            }
            if b.fan_in == 0 {
                continue;
            }
            let bound = 1.0 / (b.fan_in as f64).sqrt();
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[TAG_INIT, i as u64]));
            for v in dst {
                *v = T::lit(rng.gen_range(-bound..=bound));
            }
        }
        values
    }

    /// `signals` is `N x K` row-major, `a_hat` is `N x N`.
    pub fn forward<T: Scalar>(&self, p: &[T], signals: &[T], steps: usize, a_hat: &[T]) -> Result<ForwardCache<T>> {
        let n = self.spec.num_nodes();
        let h = self.spec.hidden;
        if steps == 0 || signals.len() != n * steps || p.len() != self.param_len() {
            return Err(Error::shape(format!(
                "model with {n} nodes and {} parameters got {} signal values over {steps} steps and {} parameters",
                self.param_len(),
                signals.len(),
                p.len()
            )));
        }
        if self.spec.graph && a_hat.len() != n * n {
            return Err(Error::shape(format!("A_hat with {} entries for {n} nodes", a_hat.len())));
        }
        let [r_nc, r_na, r_g, r_sc, r_sa, r_d] = self.ranges.clone();
        let mut nodes = Vec::with_capacity(n);
        let mut mixed_in = Vec::new();
        for row in signals.chunks_exact(steps) {
            let (node_out, node_core) = self.node_core.forward(&p[r_nc.clone()], row);
            nodes.push(NodeCache {
                node_core,
                node_out,
                reweight: None,
                sub_core: None,
                final_seq: Vec::new(),
                readout: Readout::Last,
            });
        }
        let mut gcn_trace = None;
        if let (Some(gcn), Some(sub)) = (self.gcn, self.sub_core) {
            for nc in nodes.iter_mut() {
                let seq = match self.node_att {
                    Some(att) => {
                        let (seq, tr) = att.reweight(&p[r_na.clone()], &nc.node_out);
                        nc.reweight = Some(tr);
                        seq
                    }
                    None => nc.node_out.clone(),
                };
                mixed_in.push(seq);
            }
            let (mixed, tr) = gcn.forward_seq(&p[r_g], a_hat, &mixed_in);
            gcn_trace = Some(tr);
            for (nc, m) in nodes.iter_mut().zip(&mixed) {
                let (out, tr) = sub.forward(&p[r_sc.clone()], m);
                nc.sub_core = Some(tr);
                nc.final_seq = out;
            }
        } else {
            for nc in nodes.iter_mut() {
                nc.final_seq = nc.node_out.clone();
            }
        }
        let pool_att = if self.spec.graph { self.sub_att.map(|a| (a, r_sa)) } else { self.node_att.map(|a| (a, r_na)) };
        let s = self.spec.num_subnets();
        let mut features = vec![T::zero(); s * h];
        let counts = self.subnet_counts();
        for (i, nc) in nodes.iter_mut().enumerate() {
            let (v, readout) = match (&pool_att, self.spec.temporal) {
                (Some((att, r)), _) => {
                    let (o, tr) = att.pool(&p[r.clone()], &nc.final_seq);
                    (o, Readout::Attention(tr))
                }
                (None, TemporalKind::Conv) => {
                    let mut o = vec![T::zero(); h];
                    for row in nc.final_seq.chunks_exact(h) {
                        o.iter_mut().zip(row).for_each(|(a, b)| *a += *b);
                    }
                    let k = T::from_usize_lossy(steps);
                    o.iter_mut().for_each(|v| *v /= k);
                    (o, Readout::Mean)
                }
                (None, _) => (nc.final_seq[(steps - 1) * h..].to_vec(), Readout::Last),
            };
            nc.readout = readout;
            let sub = self.spec.subnet_of[i];
            let w = T::one() / T::from_usize_lossy(counts[sub]);
            for (f, x) in features[sub * h..(sub + 1) * h].iter_mut().zip(&v) {
                *f += *x * w;
            }
        }
        let decoder = self.decoder.forward(&p[r_d], &features);
        Ok(ForwardCache { nodes, mixed_in, gcn: gcn_trace, decoder })
    }

    fn subnet_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.spec.num_subnets()];
        for &s in &self.spec.subnet_of {
            counts[s] += 1;
        }
        counts
    }

    /// Accumulates `d loss / d params` into `grad` given `d loss / d logits`.
    pub fn backward<T: Scalar>(&self, p: &[T], cache: &ForwardCache<T>, dlogits: &[T], a_hat: &[T], grad: &mut [T]) {
        let h = self.spec.hidden;
        let [r_nc, r_na, r_g, r_sc, r_sa, r_d] = self.ranges.clone();
        let dfeat = self.decoder.backward(&p[r_d.clone()], &cache.decoder, dlogits, &mut grad[r_d]);
        let counts = self.subnet_counts();
        let pool_att = if self.spec.graph { self.sub_att.map(|a| (a, r_sa)) } else { self.node_att.map(|a| (a, r_na.clone())) };

        let mut dfinal: Vec<Vec<T>> = Vec::with_capacity(cache.nodes.len());
        for (i, nc) in cache.nodes.iter().enumerate() {
            let sub = self.spec.subnet_of[i];
            let w = T::one() / T::from_usize_lossy(counts[sub]);
            let dv: Vec<T> = dfeat[sub * h..(sub + 1) * h].iter().map(|d| *d * w).collect();
            let mut dseq = vec![T::zero(); nc.final_seq.len()];
            match (&nc.readout, &pool_att) {
                (Readout::Attention(tr), Some((att, r))) => {
                    att.pool_backward(&p[r.clone()], &nc.final_seq, tr, &dv, &mut grad[r.clone()], &mut dseq);
                }
                (Readout::Mean, _) => {
                    let k = T::from_usize_lossy(dseq.len() / h);
                    for row in dseq.chunks_exact_mut(h) {
                        row.iter_mut().zip(&dv).for_each(|(a, b)| *a = *b / k);
                    }
                }
                (Readout::Last, _) => {
                    let at = dseq.len() - h;
                    dseq[at..].copy_from_slice(&dv);
                }
                _ => unreachable!("attention readout without attention block"),
            }
            dfinal.push(dseq);
        }

        let dnode: Vec<Vec<T>> = match (self.gcn, self.sub_core, &cache.gcn) {
            (Some(gcn), Some(sub), Some(gtr)) => {
                let mut dmixed = Vec::with_capacity(dfinal.len());
                for (nc, d) in cache.nodes.iter().zip(&dfinal) {
                    let mut dm = vec![T::zero(); d.len()];
                    let tr = nc.sub_core.as_ref().expect("subnet trace");
                    sub.backward(&p[r_sc.clone()], tr, d, &mut grad[r_sc.clone()], Some(&mut dm));
                    dmixed.push(dm);
                }
                let mut din: Vec<Vec<T>> = cache.mixed_in.iter().map(|m| vec![T::zero(); m.len()]).collect();
                gcn.backward_seq(&p[r_g.clone()], a_hat, gtr, &dmixed, &mut grad[r_g], &mut din);
                match self.node_att {
                    Some(att) => cache
                        .nodes
                        .iter()
                        .zip(&din)
                        .map(|(nc, d)| {
                            let mut dn = vec![T::zero(); d.len()];
                            let tr = nc.reweight.as_ref().expect("reweight trace");
                            att.reweight_backward(&p[r_na.clone()], &nc.node_out, tr, d, &mut grad[r_na.clone()], &mut dn);
                            dn
                        })
                        .collect(),
                    None => din,
                }
            }
            _ => dfinal,
        };
        for (nc, d) in cache.nodes.iter().zip(&dnode) {
            self.node_core.backward(&p[r_nc.clone()], &nc.node_core, d, &mut grad[r_nc.clone()], None);
        }
    }
}

/// A spec together with its flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    pub spec: ModelSpec,
    pub values: Vec<T>,
}

impl<T: Scalar> ModelParams<T> {
    pub fn init(spec: &ModelSpec, seed: u64) -> Result<Self> {
        let model = Model::new(spec)?;
        Ok(Self { spec: spec.clone(), values: model.init(seed) })
    }

    pub fn zeros(spec: &ModelSpec) -> Result<Self> {
        let model = Model::new(spec)?;
        Ok(Self { spec: spec.clone(), values: vec![T::zero(); model.param_len()] })
    }

    pub fn from_values(spec: &ModelSpec, values: Vec<T>) -> Result<Self> {
        let model = Model::new(spec)?;
        if values.len() != model.param_len() {
            return Err(Error::shape(format!(
                "spec needs {} parameters, got {}",
                model.param_len(),
                values.len()
            )));
        }
        Ok(Self { spec: spec.clone(), values })
    }

    pub fn model(&self) -> Model {
        Model::new(&self.spec).expect("spec validated at construction")
    }

    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        ModelParams { spec: self.spec.clone(), values: self.values.iter().map(|v| U::lit(v.to_f64_lossy())).collect() }
    }
}

fn sample_inputs<T: Scalar>(spec: &ModelSpec, sample: &GraphSample, graph: &RadarGraph<T>) -> Result<(Vec<T>, usize)> {
    let n = spec.num_nodes();
    if sample.signals.shape().len() != 2 || sample.signals.rows() != n {
        return Err(Error::shape(format!(
            "model expects {n} nodes, sample {} has signals of shape {:?}",
            sample.sample_id,
            sample.signals.shape()
        )));
    }
    if graph.num_nodes() != n || graph.subnet_of != spec.subnet_of {
        return Err(Error::shape(format!(
            "model subnets {:?} do not match graph subnets {:?}",
            spec.subnet_of, graph.subnet_of
        )));
    }
    let xs = sample.signals.data().iter().map(|v| T::lit(*v)).collect();
    Ok((xs, sample.signals.cols()))
}

/// Class probabilities and the cache for a backward pass.
pub fn model_forward<T: Scalar>(
    params: &ModelParams<T>,
    sample: &GraphSample,
    graph: &RadarGraph<T>,
) -> Result<(Vec<T>, ForwardCache<T>)> {
    let model = params.model();
    let (xs, steps) = sample_inputs(&params.spec, sample, graph)?;
    let cache = model.forward(&params.values, &xs, steps, graph.normalized_adjacency.data())?;
    Ok((cache.probs().to_vec(), cache))
}

/// Clamped cross-entropy of one prediction and its logit gradient.
pub fn cross_entropy<T: Scalar>(probs: &[T], label: usize) -> (T, Vec<T>) {
    let lo = T::lit(PROB_CLIP);
    let hi = T::one() - lo;
    let py = probs[label];
    let loss = -py.max(lo).min(hi).ln();
    let mut d = vec![T::zero(); NUM_CLASSES];
    if py > lo && py < hi {
        for (k, v) in d.iter_mut().enumerate() {
            *v = probs[k] - if k == label { T::one() } else { T::zero() };
        }
    }
    (loss, d)
}

/// Mean loss over `batch` and its gradient. Samples run in parallel; the
/// reduction is sequential in batch order, so the result does not depend on
/// the thread count.
pub fn loss_and_gradients<T: Scalar>(
    params: &ModelParams<T>,
    batch: &[&GraphSample],
    graph: &RadarGraph<T>,
) -> Result<(T, Vec<T>)> {
    if batch.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let model = params.model();
    let a_hat = graph.normalized_adjacency.data();
    let per_sample: Vec<Result<(T, Vec<T>)>> = batch
        .par_iter()
        .map(|sample| {
            let (xs, steps) = sample_inputs(&params.spec, sample, graph)?;
            let cache = model.forward(&params.values, &xs, steps, a_hat)?;
            let (loss, dlogits) = cross_entropy(cache.probs(), sample.label as usize);
            let mut grad = vec![T::zero(); model.param_len()];
            model.backward(&params.values, &cache, &dlogits, a_hat, &mut grad);
            Ok((loss, grad))
        })
        .collect();
    let scale = T::one() / T::from_usize_lossy(batch.len());
    let mut total = T::zero();
    let mut grad = vec![T::zero(); model.param_len()];
    for r in per_sample {
        let (l, g) = r?;
        total += l;
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += *b);
    }
    total *= scale;
    grad.iter_mut().for_each(|v| *v *= scale);
    if !total.is_finite() || grad.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteLoss { epoch: 0, batch: 0 });
    }
    Ok((total, grad))
}

/// Argmax with ties going to class 0.
pub fn predict_label<T: Scalar>(probs: &[T]) -> u8 {
    if probs[1] > probs[0] {
        1
    } else {
        0
    }
}
