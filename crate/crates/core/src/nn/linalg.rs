//! Slice kernels for row-major matrices.

use crate::Scalar;

/// `out += W x`, with `W` rows x cols.
#[inline]
pub fn gemv_acc<T: Scalar>(out: &mut [T], w: &[T], x: &[T]) {
    let cols = x.len();
    debug_assert_eq!(w.len(), out.len() * cols);
    for (o, row) in out.iter_mut().zip(w.chunks_exact(cols)) {
        let mut acc = T::zero();
        for (a, b) in row.iter().zip(x) {
            acc += *a * *b;
        }
        *o += acc;
    }
}

/// `out += W^T y`, with `W` rows x cols, `y` of length rows.
#[inline]
pub fn gemv_t_acc<T: Scalar>(out: &mut [T], w: &[T], y: &[T]) {
    let cols = out.len();
    debug_assert_eq!(w.len(), y.len() * cols);
    for (&yi, row) in y.iter().zip(w.chunks_exact(cols)) {
        if yi == T::zero() {
            continue;
        }
        for (o, a) in out.iter_mut().zip(row) {
            *o += *a * yi;
        }
    }
}

/// `dW += y x^T`.
#[inline]
pub fn outer_acc<T: Scalar>(dw: &mut [T], y: &[T], x: &[T]) {
    let cols = x.len();
    debug_assert_eq!(dw.len(), y.len() * cols);
    for (&yi, row) in y.iter().zip(dw.chunks_exact_mut(cols)) {
        if yi == T::zero() {
            continue;
        }
        for (d, b) in row.iter_mut().zip(x) {
            *d += yi * *b;
        }
    }
}

#[inline]
pub fn axpy<T: Scalar>(out: &mut [T], a: T, x: &[T]) {
    for (o, v) in out.iter_mut().zip(x) {
        *o += a * *v;
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b) {
        acc += *x * *y;
    }
    acc
}
