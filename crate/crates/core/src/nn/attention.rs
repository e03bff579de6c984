//! Temporal attention over a hidden-state sequence.
//!
//! Scores are `u_i = tanh(w_u . h_i + b_u)` with a `1 x hidden` projection,
//! weights `alpha = softmax(u)`. The layer either pools (`o = sum alpha_i h_i`)
//! or reweights the sequence in place (`o_i = K alpha_i h_i`, which keeps the
//! sequence length and unit scale under uniform weights).

use super::linalg::{axpy, dot};
use super::Tensor;
use crate::scalar::softmax_into;
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Attention {
    pub hidden: usize,
}

#[derive(Clone, Debug)]
pub struct AttentionTrace<T> {
    pub u: Vec<T>,
    pub alpha: Vec<T>,
}

impl Attention {
    pub fn new(hidden: usize) -> Self {
        Self { hidden }
    }

    /// `w_u` then `b_u`.
    pub fn param_len(&self) -> usize {
        self.hidden + 1
    }

    pub fn blocks(&self) -> Vec<(&'static str, Vec<usize>, usize)> {
        vec![("w_u", vec![1, self.hidden], self.hidden), ("b_u", vec![1], self.hidden)]
    }

    pub fn weights<T: Scalar>(&self, p: &[T], hs: &[T]) -> AttentionTrace<T> {
        let h = self.hidden;
        let (w, b) = (&p[..h], p[h]);
        let u: Vec<T> = hs.chunks_exact(h).map(|hi| (dot(w, hi) + b).tanh()).collect();
        let mut alpha = vec![T::zero(); u.len()];
        softmax_into(&u, &mut alpha);
        AttentionTrace { u, alpha }
    }

    pub fn pool<T: Scalar>(&self, p: &[T], hs: &[T]) -> (Vec<T>, AttentionTrace<T>) {
        let tr = self.weights(p, hs);
        let mut o = vec![T::zero(); self.hidden];
        for (a, hi) in tr.alpha.iter().zip(hs.chunks_exact(self.hidden)) {
            axpy(&mut o, *a, hi);
        }
        (o, tr)
    }

    pub fn reweight<T: Scalar>(&self, p: &[T], hs: &[T]) -> (Vec<T>, AttentionTrace<T>) {
        let tr = self.weights(p, hs);
        let k = T::from_usize_lossy(tr.alpha.len());
        let mut out = hs.to_vec();
        for (a, row) in tr.alpha.iter().zip(out.chunks_exact_mut(self.hidden)) {
            let w = k * *a;
            row.iter_mut().for_each(|v| *v *= w);
        }
        (out, tr)
    }

    /// Backprop from `d alpha` through softmax and the tanh scores.
    fn alpha_backward<T: Scalar>(
        &self,
        p: &[T],
        hs: &[T],
        tr: &AttentionTrace<T>,
        dalpha: &[T],
        grad: &mut [T],
        dhs: &mut [T],
    ) {
        let h = self.hidden;
        let w = &p[..h];
        let mean: T = tr.alpha.iter().zip(dalpha).map(|(a, d)| *a * *d).sum();
        for (i, hi) in hs.chunks_exact(h).enumerate() {
            let du = tr.alpha[i] * (dalpha[i] - mean);
            let da = du * (T::one() - tr.u[i] * tr.u[i]);
            axpy(&mut grad[..h], da, hi);
            grad[h] += da;
            axpy(&mut dhs[i * h..(i + 1) * h], da, w);
        }
    }

    pub fn pool_backward<T: Scalar>(
        &self,
        p: &[T],
        hs: &[T],
        tr: &AttentionTrace<T>,
        d_o: &[T],
        grad: &mut [T],
        dhs: &mut [T],
    ) {
        let h = self.hidden;
        let dalpha: Vec<T> = hs.chunks_exact(h).map(|hi| dot(d_o, hi)).collect();
        for (i, a) in tr.alpha.iter().enumerate() {
            axpy(&mut dhs[i * h..(i + 1) * h], *a, d_o);
        }
        self.alpha_backward(p, hs, tr, &dalpha, grad, dhs);
    }

    pub fn reweight_backward<T: Scalar>(
        &self,
        p: &[T],
        hs: &[T],
        tr: &AttentionTrace<T>,
        dout: &[T],
        grad: &mut [T],
        dhs: &mut [T],
    ) {
        let h = self.hidden;
        let k = T::from_usize_lossy(tr.alpha.len());
        let mut dalpha = Vec::with_capacity(tr.alpha.len());
        for (i, (hi, di)) in hs.chunks_exact(h).zip(dout.chunks_exact(h)).enumerate() {
            dalpha.push(k * dot(di, hi));
            axpy(&mut dhs[i * h..(i + 1) * h], k * tr.alpha[i], di);
        }
        self.alpha_backward(p, hs, tr, &dalpha, grad, dhs);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttentionParams<T> {
    pub hidden: usize,
    /// `w_u` (length `hidden`) followed by `b_u`.
    pub values: Vec<T>,
}

impl<T: Scalar> AttentionParams<T> {
    pub fn new(w_u: Vec<T>, b_u: T) -> Self {
        let hidden = w_u.len();
        let mut values = w_u;
        values.push(b_u);
        Self { hidden, values }
    }
}

/// Attention pooling of `hs` (`K x hidden`); returns `(o, alpha)`.
pub fn attention_pool<T: Scalar>(params: &AttentionParams<T>, hs: &Tensor<T>) -> Result<(Vec<T>, Vec<T>)> {
    if hs.shape().len() != 2 || hs.cols() != params.hidden || hs.rows() == 0 {
        return Err(Error::shape(format!(
            "attention over hidden {} got states of shape {:?}",
            params.hidden,
            hs.shape()
        )));
    }
    let (o, tr) = Attention::new(params.hidden).pool(&params.values, hs.data());
    Ok((o, tr.alpha))
}
