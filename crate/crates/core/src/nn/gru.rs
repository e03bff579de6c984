//! Gated recurrent unit with update gate `s`, reset gate `z` and candidate `c`:
//!
//! ```text
//! s_t = sigmoid(W_s x_t + V_s h_{t-1} + b_s)
//! z_t = sigmoid(W_z x_t + V_z h_{t-1} + b_z)
//! c_t = tanh(W_c x_t + V_c (h_{t-1} * z_t + b_c))
//! h_t = s_t * c_t + h_{t-1} * (1 - s_t)
//! ```
//!
//! The candidate bias sits inside the recurrent product, so it is scaled by
//! `V_c` rather than added after it.

use serde::{Deserialize, Serialize};

use super::linalg::{gemv_acc, gemv_t_acc, outer_acc};
use crate::{Error, Result, Scalar};

/// Shape of a GRU layer. Parameters are laid out as
/// `W_s, V_s, b_s, W_z, V_z, b_z, W_c, V_c, b_c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gru {
    pub input: usize,
    pub hidden: usize,
}

pub struct GruView<'a, T> {
    pub w_s: &'a [T],
    pub v_s: &'a [T],
    pub b_s: &'a [T],
    pub w_z: &'a [T],
    pub v_z: &'a [T],
    pub b_z: &'a [T],
    pub w_c: &'a [T],
    pub v_c: &'a [T],
    pub b_c: &'a [T],
}

struct GruViewMut<'a, T> {
    w_s: &'a mut [T],
    v_s: &'a mut [T],
    b_s: &'a mut [T],
    w_z: &'a mut [T],
    v_z: &'a mut [T],
    b_z: &'a mut [T],
    w_c: &'a mut [T],
    v_c: &'a mut [T],
    b_c: &'a mut [T],
}

/// Forward activations of a whole sequence, kept for backpropagation through time.
#[derive(Clone, Debug)]
pub struct GruTrace<T> {
    pub steps: usize,
    pub xs: Vec<T>,
    /// `(steps + 1) x hidden`; row 0 is the zero initial state.
    pub hs: Vec<T>,
    pub s: Vec<T>,
    pub z: Vec<T>,
    pub c: Vec<T>,
    /// `h_{t-1} * z_t + b_c`.
    pub r: Vec<T>,
}

impl<T: Scalar> GruTrace<T> {
    /// Hidden states `h_1..h_K` as a `steps x hidden` block.
    pub fn outputs(&self, hidden: usize) -> &[T] {
        &self.hs[hidden..]
    }
}

impl Gru {
    pub fn new(input: usize, hidden: usize) -> Self {
        Self { input, hidden }
    }

    pub fn param_len(&self) -> usize {
        3 * (self.hidden * self.input + self.hidden * self.hidden + self.hidden)
    }

    /// Block names, shapes and fan-in, in storage order.
    pub fn blocks(&self) -> Vec<(&'static str, Vec<usize>, usize)> {
        let (h, i) = (self.hidden, self.input);
        let mut out = Vec::with_capacity(9);
        for g in ["s", "z", "c"] {
            let (w, v, b) = match g {
                "s" => ("w_s", "v_s", "b_s"),
                "z" => ("w_z", "v_z", "b_z"),
                _ => ("w_c", "v_c", "b_c"),
            };
            out.push((w, vec![h, i], i));
            out.push((v, vec![h, h], h));
            out.push((b, vec![h], h));
        }
        out
    }

    pub fn view<'a, T>(&self, p: &'a [T]) -> GruView<'a, T> {
        let (h, i) = (self.hidden, self.input);
        let (w_s, p) = p.split_at(h * i);
        let (v_s, p) = p.split_at(h * h);
        let (b_s, p) = p.split_at(h);
        let (w_z, p) = p.split_at(h * i);
        let (v_z, p) = p.split_at(h * h);
        let (b_z, p) = p.split_at(h);
        let (w_c, p) = p.split_at(h * i);
        let (v_c, p) = p.split_at(h * h);
        let (b_c, _) = p.split_at(h);
        GruView { w_s, v_s, b_s, w_z, v_z, b_z, w_c, v_c, b_c }
    }

    fn view_mut<'a, T>(&self, p: &'a mut [T]) -> GruViewMut<'a, T> {
        let (h, i) = (self.hidden, self.input);
        let (w_s, p) = p.split_at_mut(h * i);
        let (v_s, p) = p.split_at_mut(h * h);
        let (b_s, p) = p.split_at_mut(h);
        let (w_z, p) = p.split_at_mut(h * i);
        let (v_z, p) = p.split_at_mut(h * h);
        let (b_z, p) = p.split_at_mut(h);
        let (w_c, p) = p.split_at_mut(h * i);
        let (v_c, p) = p.split_at_mut(h * h);
        let (b_c, _) = p.split_at_mut(h);
        GruViewMut { w_s, v_s, b_s, w_z, v_z, b_z, w_c, v_c, b_c }
    }

    /// One step; writes gates into the given buffers and the new state into `h`.
    #[allow(clippy::too_many_arguments)]
    fn step_into<T: Scalar>(
        &self,
        p: &GruView<'_, T>,
        x: &[T],
        h_prev: &[T],
        s: &mut [T],
        z: &mut [T],
        c: &mut [T],
        r: &mut [T],
        h: &mut [T],
    ) {
        s.copy_from_slice(p.b_s);
        gemv_acc(s, p.w_s, x);
        gemv_acc(s, p.v_s, h_prev);
        z.copy_from_slice(p.b_z);
        gemv_acc(z, p.w_z, x);
        gemv_acc(z, p.v_z, h_prev);
        for j in 0..self.hidden {
            s[j] = s[j].sigmoid();
            z[j] = z[j].sigmoid();
            r[j] = h_prev[j] * z[j] + p.b_c[j];
        }
        c.iter_mut().for_each(|v| *v = T::zero());
        gemv_acc(c, p.w_c, x);
        gemv_acc(c, p.v_c, r);
        for j in 0..self.hidden {
            c[j] = c[j].tanh();
            h[j] = s[j] * c[j] + h_prev[j] * (T::one() - s[j]);
        }
    }

    /// Runs the sequence `xs` (`steps x input`) from a zero state.
    pub fn forward<T: Scalar>(&self, p: &[T], xs: &[T]) -> GruTrace<T> {
        let (h, i) = (self.hidden, self.input);
        let steps = xs.len() / i;
        let v = self.view(p);
        let mut tr = GruTrace {
            steps,
            xs: xs.to_vec(),
            hs: vec![T::zero(); (steps + 1) * h],
            s: vec![T::zero(); steps * h],
            z: vec![T::zero(); steps * h],
            c: vec![T::zero(); steps * h],
            r: vec![T::zero(); steps * h],
        };
        for t in 0..steps {
            let (prev, next) = tr.hs.split_at_mut((t + 1) * h);
            let g = t * h..(t + 1) * h;
            self.step_into(
                &v,
                &xs[t * i..(t + 1) * i],
                &prev[t * h..],
                &mut tr.s[g.clone()],
                &mut tr.z[g.clone()],
                &mut tr.c[g.clone()],
                &mut tr.r[g],
                &mut next[..h],
            );
        }
        tr
    }

    /// Backpropagation through time. `dhs` is the loss gradient w.r.t.
    /// `h_1..h_K`; parameter gradients are accumulated into `grad` and input
    /// gradients into `dxs` when given.
    pub fn backward<T: Scalar>(
        &self,
        p: &[T],
        tr: &GruTrace<T>,
        dhs: &[T],
        grad: &mut [T],
        mut dxs: Option<&mut [T]>,
    ) {
        let (h, i) = (self.hidden, self.input);
        let v = self.view(p);
        let g = self.view_mut(grad);
        let mut carry = vec![T::zero(); h];
        let mut dh = vec![T::zero(); h];
        let mut da_s = vec![T::zero(); h];
        let mut da_z = vec![T::zero(); h];
        let mut da_c = vec![T::zero(); h];
        let mut dr = vec![T::zero(); h];
        for t in (0..tr.steps).rev() {
            let gt = t * h..(t + 1) * h;
            let (s, z, c, r) = (&tr.s[gt.clone()], &tr.z[gt.clone()], &tr.c[gt.clone()], &tr.r[gt.clone()]);
            let h_prev = &tr.hs[t * h..(t + 1) * h];
            let x = &tr.xs[t * i..(t + 1) * i];
            for j in 0..h {
                dh[j] = dhs[t * h + j] + carry[j];
            }
            for j in 0..h {
                let one_minus_s = T::one() - s[j];
                da_s[j] = dh[j] * (c[j] - h_prev[j]) * s[j] * one_minus_s;
                da_c[j] = dh[j] * s[j] * (T::one() - c[j] * c[j]);
                carry[j] = dh[j] * one_minus_s;
            }
            outer_acc(g.w_c, &da_c, x);
            outer_acc(g.v_c, &da_c, r);
            dr.iter_mut().for_each(|d| *d = T::zero());
            gemv_t_acc(&mut dr, v.v_c, &da_c);
            for j in 0..h {
                g.b_c[j] += dr[j];
                carry[j] += dr[j] * z[j];
                da_z[j] = dr[j] * h_prev[j] * z[j] * (T::one() - z[j]);
            }
            outer_acc(g.w_z, &da_z, x);
            outer_acc(g.v_z, &da_z, h_prev);
            outer_acc(g.w_s, &da_s, x);
            outer_acc(g.v_s, &da_s, h_prev);
            for j in 0..h {
                g.b_z[j] += da_z[j];
                g.b_s[j] += da_s[j];
            }
            gemv_t_acc(&mut carry, v.v_z, &da_z);
            gemv_t_acc(&mut carry, v.v_s, &da_s);
            if let Some(dx) = dxs.as_deref_mut() {
                let dx = &mut dx[t * i..(t + 1) * i];
                gemv_t_acc(dx, v.w_s, &da_s);
                gemv_t_acc(dx, v.w_z, &da_z);
                gemv_t_acc(dx, v.w_c, &da_c);
            }
        }
    }
}

/// Owned GRU parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct GruParams<T> {
    pub layer: Gru,
    pub values: Vec<T>,
}

impl<T: Scalar> GruParams<T> {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        let layer = Gru::new(input, hidden);
        Self {
            values: vec![T::zero(); layer.param_len()],
            layer,
        }
    }

    pub fn from_values(input: usize, hidden: usize, values: Vec<T>) -> Result<Self> {
        let layer = Gru::new(input, hidden);
        if values.len() != layer.param_len() {
            return Err(Error::shape(format!(
                "GRU {input}->{hidden} needs {} parameters, got {}",
                layer.param_len(),
                values.len()
            )));
        }
        Ok(Self { layer, values })
    }

    pub fn view(&self) -> GruView<'_, T> {
        self.layer.view(&self.values)
    }
}

/// Single GRU update `h_t` from `x_t` and `h_{t-1}`.
pub fn gru_step<T: Scalar>(params: &GruParams<T>, x_t: &[T], h_prev: &[T]) -> Result<Vec<T>> {
    let l = params.layer;
    if x_t.len() != l.input || h_prev.len() != l.hidden {
        return Err(Error::shape(format!(
            "gru_step expects x of {} and h of {}, got {} and {}",
            l.input,
            l.hidden,
            x_t.len(),
            h_prev.len()
        )));
    }
    let hd = l.hidden;
    let (mut s, mut z, mut c, mut r, mut h) = (
        vec![T::zero(); hd],
        vec![T::zero(); hd],
        vec![T::zero(); hd],
        vec![T::zero(); hd],
        vec![T::zero(); hd],
    );
    l.step_into(&params.view(), x_t, h_prev, &mut s, &mut z, &mut c, &mut r, &mut h);
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sig(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    /// Straight-line scalar-loop transcription of the four gate equations.
    fn oracle_step(p: &GruParams<f64>, x: &[f64], hp: &[f64]) -> Vec<f64> {
        let (ni, nh) = (p.layer.input, p.layer.hidden);
        let v = p.view();
        let mut out = vec![0.0; nh];
        let mut z = vec![0.0; nh];
        for j in 0..nh {
            let mut a = v.b_z[j];
            for k in 0..ni {
                a += v.w_z[j * ni + k] * x[k];
            }
            for k in 0..nh {
                a += v.v_z[j * nh + k] * hp[k];
            }
            z[j] = sig(a);
        }
        for j in 0..nh {
            let mut a_s = v.b_s[j];
            for k in 0..ni {
                a_s += v.w_s[j * ni + k] * x[k];
            }
            for k in 0..nh {
                a_s += v.v_s[j * nh + k] * hp[k];
            }
            let s = sig(a_s);
            let mut a_c = 0.0;
            for k in 0..ni {
                a_c += v.w_c[j * ni + k] * x[k];
            }
            for k in 0..nh {
                a_c += v.v_c[j * nh + k] * (hp[k] * z[k] + v.b_c[k]);
            }
            let c = a_c.tanh();
            out[j] = s * c + hp[j] * (1.0 - s);
        }
        out
    }

    #[test]
    fn zero_params_halve_state() {
        let p = GruParams::<f64>::zeros(2, 3);
        let h = gru_step(&p, &[0.7, -2.0], &[1.0, -4.0, 0.5]).unwrap();
        assert_eq!(h, vec![0.5, -2.0, 0.25]);
        assert_eq!(gru_step(&p, &[0.3, 0.1], &[0.0; 3]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn shape_mismatch() {
        let p = GruParams::<f64>::zeros(2, 3);
        assert!(matches!(gru_step(&p, &[1.0], &[0.0; 3]), Err(Error::ShapeMismatch(_))));
        assert!(GruParams::<f64>::from_values(2, 3, vec![0.0; 4]).is_err());
    }

    #[test]
    fn matches_scalar_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let (ni, nh) = (rng.gen_range(1..4), rng.gen_range(1..6));
            let l = Gru::new(ni, nh);
            let vals = (0..l.param_len()).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let p = GruParams::from_values(ni, nh, vals).unwrap();
            let x: Vec<f64> = (0..ni).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let hp: Vec<f64> = (0..nh).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let got = gru_step(&p, &x, &hp).unwrap();
            let want = oracle_step(&p, &x, &hp);
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sequence_forward_chains_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let l = Gru::new(1, 4);
        let vals: Vec<f64> = (0..l.param_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = GruParams::from_values(1, 4, vals.clone()).unwrap();
        let xs: Vec<f64> = (0..10).map(|_| rng.gen_range(0.0..1.0)).collect();
        let tr = l.forward(&vals, &xs);
        let mut h = vec![0.0; 4];
        for (t, x) in xs.iter().enumerate() {
            h = gru_step(&p, &[*x], &h).unwrap();
            assert_eq!(&tr.hs[(t + 1) * 4..(t + 2) * 4], h.as_slice());
        }
    }

    #[test]
    fn long_sequences_stay_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let l = Gru::new(1, 16);
        let vals: Vec<f64> = (0..l.param_len()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let xs: Vec<f64> = (0..200).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let tr = l.forward(&vals, &xs);
        assert!(tr.hs.iter().all(|v| v.is_finite() && v.abs() <= 1.0));
    }
}
