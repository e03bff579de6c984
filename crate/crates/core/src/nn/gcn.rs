//! First-order graph convolution `(A_hat O) W_G^T`.

use super::linalg::{axpy, gemv_acc, gemv_t_acc, outer_acc};
use super::Tensor;
use crate::{Error, Result, Scalar};

/// `W_G` is `output x input`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gcn {
    pub input: usize,
    pub output: usize,
}

#[derive(Clone, Debug)]
pub struct GcnTrace<T> {
    /// Per node, `A_hat`-aggregated input sequence (`steps x input`).
    pub aggregated: Vec<Vec<T>>,
}

impl Gcn {
    pub fn new(input: usize, output: usize) -> Self {
        Self { input, output }
    }

    pub fn param_len(&self) -> usize {
        self.input * self.output
    }

    pub fn blocks(&self) -> Vec<(&'static str, Vec<usize>, usize)> {
        vec![("w_g", vec![self.output, self.input], self.input)]
    }

    /// Applies the convolution at every time step of per-node sequences.
    /// `a_hat` is row-major `N x N`; `seqs[n]` is `steps x input`.
    pub fn forward_seq<T: Scalar>(&self, p: &[T], a_hat: &[T], seqs: &[Vec<T>]) -> (Vec<Vec<T>>, GcnTrace<T>) {
        let n = seqs.len();
        let len = seqs.first().map_or(0, |s| s.len());
        let steps = len / self.input;
        let mut aggregated = vec![vec![T::zero(); len]; n];
        for (i, agg) in aggregated.iter_mut().enumerate() {
            for (m, seq) in seqs.iter().enumerate() {
                let a = a_hat[i * n + m];
                if a != T::zero() {
                    axpy(agg, a, seq);
                }
            }
        }
        let out = aggregated
            .iter()
            .map(|agg| {
                let mut o = vec![T::zero(); steps * self.output];
                for (orow, arow) in o.chunks_exact_mut(self.output).zip(agg.chunks_exact(self.input)) {
                    gemv_acc(orow, p, arow);
                }
                o
            })
            .collect();
        (out, GcnTrace { aggregated })
    }

    /// Accumulates `dW_G` and per-node input gradients.
    pub fn backward_seq<T: Scalar>(
        &self,
        p: &[T],
        a_hat: &[T],
        tr: &GcnTrace<T>,
        douts: &[Vec<T>],
        grad: &mut [T],
        dseqs: &mut [Vec<T>],
    ) {
        let n = douts.len();
        for (i, (dout, agg)) in douts.iter().zip(&tr.aggregated).enumerate() {
            let mut dagg = vec![T::zero(); agg.len()];
            for ((drow, arow), darow) in dout
                .chunks_exact(self.output)
                .zip(agg.chunks_exact(self.input))
                .zip(dagg.chunks_exact_mut(self.input))
            {
                outer_acc(grad, drow, arow);
                gemv_t_acc(darow, p, drow);
            }
            for (m, dseq) in dseqs.iter_mut().enumerate() {
                let a = a_hat[i * n + m];
                if a != T::zero() {
                    axpy(dseq, a, &dagg);
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GcnParams<T> {
    /// `W_G`, `output x input`.
    pub weight: Tensor<T>,
}

/// `(A_hat O) W_G^T` for one feature matrix `O` (`N x F`).
pub fn graph_convolve<T: Scalar>(params: &GcnParams<T>, a_hat: &Tensor<T>, o: &Tensor<T>) -> Result<Tensor<T>> {
    let (fo, fi) = (params.weight.rows(), params.weight.cols());
    let n = o.rows();
    if a_hat.shape() != [n, n] || o.cols() != fi {
        return Err(Error::shape(format!(
            "graph_convolve: A_hat {:?}, O {:?}, W_G {:?}",
            a_hat.shape(),
            o.shape(),
            params.weight.shape()
        )));
    }
    let layer = Gcn::new(fi, fo);
    let seqs: Vec<Vec<T>> = (0..n).map(|i| o.row(i).to_vec()).collect();
    let (out, _) = layer.forward_seq(params.weight.data(), a_hat.data(), &seqs);
    Tensor::from_vec(&[n, fo], out.concat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_tensor(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Tensor<f64> {
        Tensor::from_vec(&[r, c], (0..r * c).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn identity_pass_through() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let o = rand_tensor(&mut rng, 4, 3);
        let p = GcnParams { weight: Tensor::identity(3) };
        assert_eq!(graph_convolve(&p, &Tensor::identity(4), &o).unwrap(), o);
    }

    #[test]
    fn two_node_hand_computed() {
        let a = Tensor::from_rows(&[vec![1.0f64, 0.5], vec![0.5, 1.0]]).unwrap();
        let o = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, -1.0]]).unwrap();
        let w = Tensor::from_rows(&[vec![1.0, 0.0], vec![2.0, -1.0], vec![0.0, 0.5]]).unwrap();
        // A O = [[2.5, 1.5], [3.5, 0.0]]; times W^T
        let want = [2.5, 3.5, 0.75, 3.5, 7.0, 0.0];
        let got = graph_convolve(&GcnParams { weight: w }, &a, &o).unwrap();
        assert_eq!(got.shape(), &[2, 3]);
        for (g, w) in got.data().iter().zip(want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_matmul_oracle_and_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let (n, fi, fo) = (rng.gen_range(1..6), rng.gen_range(1..5), rng.gen_range(1..5));
            let a = rand_tensor(&mut rng, n, n);
            let o1 = rand_tensor(&mut rng, n, fi);
            let o2 = rand_tensor(&mut rng, n, fi);
            let p = GcnParams { weight: rand_tensor(&mut rng, fo, fi) };
            let got = graph_convolve(&p, &a, &o1).unwrap();
            let want = a.matmul(&o1).unwrap().matmul(&p.weight.transpose().unwrap()).unwrap();
            assert!(got.max_abs_diff(&want) < 1e-12);

            let (al, be) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let mix = Tensor::from_vec(
                &[n, fi],
                o1.data().iter().zip(o2.data()).map(|(x, y)| al * x + be * y).collect(),
            )
            .unwrap();
            let lhs = graph_convolve(&p, &a, &mix).unwrap();
            let out2 = graph_convolve(&p, &a, &o2).unwrap();
            for ((l, x), y) in lhs.data().iter().zip(got.data()).zip(out2.data()) {
                assert!((l - (al * x + be * y)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn node_permutation_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 5;
        let a = rand_tensor(&mut rng, n, n);
        let o = rand_tensor(&mut rng, n, 3);
        let p = GcnParams { weight: rand_tensor(&mut rng, 2, 3) };
        let perm = [3, 0, 4, 1, 2];
        let mut ap = Tensor::zeros(&[n, n]);
        let mut op = Tensor::zeros(&[n, 3]);
        for i in 0..n {
            for j in 0..n {
                ap.set(i, j, a.at(perm[i], perm[j]));
            }
            op.row_mut(i).copy_from_slice(o.row(perm[i]));
        }
        let base = graph_convolve(&p, &a, &o).unwrap();
        let moved = graph_convolve(&p, &ap, &op).unwrap();
        for i in 0..n {
            for (x, y) in moved.row(i).iter().zip(base.row(perm[i])) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shape_mismatch() {
        let p = GcnParams { weight: Tensor::<f64>::zeros(&[2, 3]) };
        assert!(graph_convolve(&p, &Tensor::identity(2), &Tensor::zeros(&[2, 2])).is_err());
        assert!(graph_convolve(&p, &Tensor::identity(3), &Tensor::zeros(&[2, 3])).is_err());
    }
}
