//! Global decoder: width-5 convolution along the flattened subnet features,
//! layer normalisation, dense projection to two logits, softmax.

use super::linalg::{gemv_acc, gemv_t_acc, outer_acc};
use super::Tensor;
use crate::scalar::softmax;
use crate::{Error, Result, Scalar};

pub const DECODER_KERNEL: usize = 5;
pub const LAYER_NORM_EPS: f64 = 1e-5;
pub const NUM_CLASSES: usize = 2;

/// Layout: kernel `C x 5`, conv bias `C`, norm gain `C*M`, norm bias `C*M`,
/// dense weight `2 x C*M`, dense bias `2`, with `M = input_len - 4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Decoder {
    pub input_len: usize,
    pub channels: usize,
}

#[derive(Clone, Debug)]
pub struct DecoderTrace<T> {
    pub x: Vec<T>,
    pub normed: Vec<T>,
    pub inv_std: T,
    pub logits: Vec<T>,
    pub probs: Vec<T>,
}

impl Decoder {
    pub fn new(input_len: usize, channels: usize) -> Result<Self> {
        if input_len < DECODER_KERNEL || channels == 0 {
            return Err(Error::shape(format!(
                "decoder needs at least {DECODER_KERNEL} features and one channel, got {input_len} and {channels}"
            )));
        }
        Ok(Self { input_len, channels })
    }

    pub fn conv_len(&self) -> usize {
        self.input_len + 1 - DECODER_KERNEL
    }

    pub fn features(&self) -> usize {
        self.channels * self.conv_len()
    }

    pub fn param_len(&self) -> usize {
        let f = self.features();
        self.channels * (DECODER_KERNEL + 1) + 2 * f + NUM_CLASSES * (f + 1)
    }

    pub fn blocks(&self) -> Vec<(&'static str, Vec<usize>, usize)> {
        let (c, f) = (self.channels, self.features());
        vec![
            ("conv_kernel", vec![c, DECODER_KERNEL], DECODER_KERNEL),
            ("conv_bias", vec![c], DECODER_KERNEL),
            ("norm_gain", vec![f], 0),
            ("norm_bias", vec![f], 0),
            ("dense_weight", vec![NUM_CLASSES, f], f),
            ("dense_bias", vec![NUM_CLASSES], f),
        ]
    }

    fn split<'a, T>(&self, p: &'a [T]) -> [&'a [T]; 6] {
        let (c, f) = (self.channels, self.features());
        let (k, rest) = p.split_at(c * DECODER_KERNEL);
        let (cb, rest) = rest.split_at(c);
        let (g, rest) = rest.split_at(f);
        let (nb, rest) = rest.split_at(f);
        let (w, db) = rest.split_at(NUM_CLASSES * f);
        [k, cb, g, nb, w, db]
    }

    fn split_mut<'a, T>(&self, p: &'a mut [T]) -> [&'a mut [T]; 6] {
        let (c, f) = (self.channels, self.features());
        let (k, rest) = p.split_at_mut(c * DECODER_KERNEL);
        let (cb, rest) = rest.split_at_mut(c);
        let (g, rest) = rest.split_at_mut(f);
        let (nb, rest) = rest.split_at_mut(f);
        let (w, db) = rest.split_at_mut(NUM_CLASSES * f);
        [k, cb, g, nb, w, db]
    }

    pub fn forward<T: Scalar>(&self, p: &[T], x: &[T]) -> DecoderTrace<T> {
        let [k, cb, g, nb, w, db] = self.split(p);
        let m = self.conv_len();
        let mut conv = vec![T::zero(); self.features()];
        for ch in 0..self.channels {
            let kern = &k[ch * DECODER_KERNEL..(ch + 1) * DECODER_KERNEL];
            for t in 0..m {
                let mut acc = cb[ch];
                for (kv, xv) in kern.iter().zip(&x[t..t + DECODER_KERNEL]) {
                    acc += *kv * *xv;
                }
                conv[ch * m + t] = acc;
            }
        }
        let (normed, inv_std) = standardize(&conv);
        let y: Vec<T> = normed.iter().zip(g).zip(nb).map(|((v, g), b)| *v * *g + *b).collect();
        let mut logits = db.to_vec();
        gemv_acc(&mut logits, w, &y);
        let probs = softmax(&logits);
        DecoderTrace { x: x.to_vec(), normed, inv_std, logits, probs }
    }

    /// Accumulates parameter gradients from `dlogits`; returns the input gradient.
    pub fn backward<T: Scalar>(&self, p: &[T], tr: &DecoderTrace<T>, dlogits: &[T], grad: &mut [T]) -> Vec<T> {
        let [k, _, g, nb, w, _] = self.split(p);
        let f = self.features();
        let m = self.conv_len();
        let y: Vec<T> = tr.normed.iter().zip(g).zip(nb).map(|((v, g), b)| *v * *g + *b).collect();
        let [gk, gcb, gg, gnb, gw, gdb] = self.split_mut(grad);
        for (a, b) in gdb.iter_mut().zip(dlogits) {
            *a += *b;
        }
        outer_acc(gw, dlogits, &y);
        let mut dy = vec![T::zero(); f];
        gemv_t_acc(&mut dy, w, dlogits);
        let mut dn = vec![T::zero(); f];
        for i in 0..f {
            gg[i] += dy[i] * tr.normed[i];
            gnb[i] += dy[i];
            dn[i] = dy[i] * g[i];
        }
        let dconv = standardize_backward(&tr.normed, tr.inv_std, &dn);
        let mut dx = vec![T::zero(); self.input_len];
        for ch in 0..self.channels {
            for t in 0..m {
                let d = dconv[ch * m + t];
                gcb[ch] += d;
                for j in 0..DECODER_KERNEL {
                    gk[ch * DECODER_KERNEL + j] += d * tr.x[t + j];
                    dx[t + j] += d * k[ch * DECODER_KERNEL + j];
                }
            }
        }
        dx
    }
}

fn standardize<T: Scalar>(x: &[T]) -> (Vec<T>, T) {
    let n = T::from_usize_lossy(x.len());
    let mean = x.iter().copied().sum::<T>() / n;
    let var = x.iter().map(|v| (*v - mean) * (*v - mean)).sum::<T>() / n;
    let inv_std = T::one() / (var + T::lit(LAYER_NORM_EPS)).sqrt();
    (x.iter().map(|v| (*v - mean) * inv_std).collect(), inv_std)
}

fn standardize_backward<T: Scalar>(normed: &[T], inv_std: T, dn: &[T]) -> Vec<T> {
    let n = T::from_usize_lossy(dn.len());
    let mean_d = dn.iter().copied().sum::<T>() / n;
    let mean_dn = dn.iter().zip(normed).map(|(d, v)| *d * *v).sum::<T>() / n;
    dn.iter()
        .zip(normed)
        .map(|(d, v)| inv_std * (*d - mean_d - *v * mean_dn))
        .collect()
}

/// Layer normalisation over the whole vector with `eps = 1e-5`.
pub fn layer_norm<T: Scalar>(x: &[T], gain: &[T], bias: &[T]) -> Result<Vec<T>> {
    if x.is_empty() || gain.len() != x.len() || bias.len() != x.len() {
        return Err(Error::shape(format!(
            "layer_norm over {} values with gain {} and bias {}",
            x.len(),
            gain.len(),
            bias.len()
        )));
    }
    let (normed, _) = standardize(x);
    Ok(normed.iter().zip(gain).zip(bias).map(|((v, g), b)| *v * *g + *b).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecoderParams<T> {
    pub layer: Decoder,
    pub values: Vec<T>,
}

impl<T: Scalar> DecoderParams<T> {
    /// Zero parameters except unit norm gain.
    pub fn identity_norm(input_len: usize, channels: usize) -> Result<Self> {
        let layer = Decoder::new(input_len, channels)?;
        let mut values = vec![T::zero(); layer.param_len()];
        let start = channels * (DECODER_KERNEL + 1);
        values[start..start + layer.features()].iter_mut().for_each(|v| *v = T::one());
        Ok(Self { layer, values })
    }

    pub fn from_values(input_len: usize, channels: usize, values: Vec<T>) -> Result<Self> {
        let layer = Decoder::new(input_len, channels)?;
        if values.len() != layer.param_len() {
            return Err(Error::shape(format!(
                "decoder expects {} parameters, got {}",
                layer.param_len(),
                values.len()
            )));
        }
        Ok(Self { layer, values })
    }
}

/// Class probabilities for subnet features (`S x F`, flattened row-major).
pub fn decoder_forward<T: Scalar>(params: &DecoderParams<T>, features: &Tensor<T>) -> Result<Vec<T>> {
    if features.len() != params.layer.input_len {
        return Err(Error::shape(format!(
            "decoder built for {} features got {:?}",
            params.layer.input_len,
            features.shape()
        )));
    }
    Ok(params.layer.forward(&params.values, features.data()).probs)
}
