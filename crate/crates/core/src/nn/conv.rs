//! Width-3 temporal convolution with zero padding and tanh, used where a
//! convolutional block replaces the recurrent encoder.

use crate::Scalar;

pub const TEMPORAL_KERNEL: usize = 3;

/// Weights `output x input x 3`, then bias `output`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TemporalConv {
    pub input: usize,
    pub output: usize,
}

#[derive(Clone, Debug)]
pub struct ConvTrace<T> {
    pub xs: Vec<T>,
    /// tanh outputs, `steps x output`.
    pub ys: Vec<T>,
}

impl TemporalConv {
    pub fn new(input: usize, output: usize) -> Self {
        Self { input, output }
    }

    pub fn param_len(&self) -> usize {
        self.output * self.input * TEMPORAL_KERNEL + self.output
    }

    pub fn blocks(&self) -> Vec<(&'static str, Vec<usize>, usize)> {
        let fan = self.input * TEMPORAL_KERNEL;
        vec![
            ("kernel", vec![self.output, self.input, TEMPORAL_KERNEL], fan),
            ("bias", vec![self.output], fan),
        ]
    }

    pub fn forward<T: Scalar>(&self, p: &[T], xs: &[T]) -> ConvTrace<T> {
        let (ni, no) = (self.input, self.output);
        let steps = xs.len() / ni;
        let (w, b) = p.split_at(no * ni * TEMPORAL_KERNEL);
        let mut ys = vec![T::zero(); steps * no];
        for t in 0..steps {
            for o in 0..no {
                let mut acc = b[o];
                for j in 0..TEMPORAL_KERNEL {
                    let src = t as isize + j as isize - 1;
                    if src < 0 || src as usize >= steps {
                        continue;
                    }
                    let x = &xs[src as usize * ni..(src as usize + 1) * ni];
                    for (i, xv) in x.iter().enumerate() {
                        acc += w[(o * ni + i) * TEMPORAL_KERNEL + j] * *xv;
                    }
                }
                ys[t * no + o] = acc.tanh();
            }
        }
        ConvTrace { xs: xs.to_vec(), ys }
    }

    pub fn backward<T: Scalar>(&self, p: &[T], tr: &ConvTrace<T>, dys: &[T], grad: &mut [T], mut dxs: Option<&mut [T]>) {
        let (ni, no) = (self.input, self.output);
        let steps = tr.xs.len() / ni;
        let nw = no * ni * TEMPORAL_KERNEL;
        let w = &p[..nw];
        let (gw, gb) = grad.split_at_mut(nw);
        for t in 0..steps {
            for o in 0..no {
                let y = tr.ys[t * no + o];
                let da = dys[t * no + o] * (T::one() - y * y);
                if da == T::zero() {
                    continue;
                }
                gb[o] += da;
                for j in 0..TEMPORAL_KERNEL {
                    let src = t as isize + j as isize - 1;
                    if src < 0 || src as usize >= steps {
                        continue;
                    }
                    let s = src as usize;
                    for i in 0..ni {
                        let wi = (o * ni + i) * TEMPORAL_KERNEL + j;
                        gw[wi] += da * tr.xs[s * ni + i];
                        if let Some(dx) = dxs.as_deref_mut() {
                            dx[s * ni + i] += da * w[wi];
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_padded_stencil() {
        let c = TemporalConv::new(1, 1);
        // kernel (1, 2, 3), bias 0: y_t = tanh(x_{t-1} + 2 x_t + 3 x_{t+1})
        let tr = c.forward(&[1.0, 2.0, 3.0, 0.0], &[1.0f64, 0.0, -1.0]);
        let want = [(0.0 + 2.0 * 1.0 + 3.0 * 0.0f64).tanh(), (1.0 + 0.0 - 3.0f64).tanh(), (0.0 - 2.0 + 0.0f64).tanh()];
        for (a, b) in tr.ys.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
