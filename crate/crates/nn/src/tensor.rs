//! Row-major `f64` tensors. Everything the GNN needs is 2-D; vectors are
//! stored as `1 × c`.

use serde::{Deserialize, Serialize};

use crate::error::NnError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, NnError> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(NnError::Shape(format!("shape {shape:?} needs {expected} values, got {}", data.len())));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor { shape: vec![rows, cols], data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len(), "tensor data does not match {rows}x{cols}");
        Tensor { shape: vec![rows, cols], data }
    }

    pub fn zeros_like(other: &Tensor) -> Self {
        Tensor { shape: other.shape.clone(), data: vec![0.0; other.data.len()] }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        self.shape.get(1).copied().unwrap_or(1)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[r * c..(r + 1) * c]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols() + c]
    }

    pub fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.shape, other.shape);
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += b);
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor { shape: self.shape.clone(), data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Column sums as a `1 × c` tensor.
    pub fn col_sums(&self) -> Tensor {
        let c = self.cols();
        let mut out = vec![0.0; c];
        for r in 0..self.rows() {
            out.iter_mut().zip(self.row(r)).for_each(|(o, x)| *o += x);
        }
        Tensor::from_rows(1, c, out)
    }
}

#[derive(Clone, Copy)]
pub(crate) enum Trans {
    No,
    Yes,
}

/// `c += op(a) · op(b)`.
pub(crate) fn gemm_acc(a: &Tensor, ta: Trans, b: &Tensor, tb: Trans, c: &mut Tensor) {
    let (ar, ac) = (a.rows(), a.cols());
    let (br, bc) = (b.rows(), b.cols());
    let (m, k, rsa, csa) = match ta {
        Trans::No => (ar, ac, ac as isize, 1),
        Trans::Yes => (ac, ar, 1, ac as isize),
    };
    let (k2, n, rsb, csb) = match tb {
        Trans::No => (br, bc, bc as isize, 1),
        Trans::Yes => (bc, br, 1, bc as isize),
    };
    assert_eq!(k, k2, "inner dimensions differ");
    assert_eq!((c.rows(), c.cols()), (m, n), "output shape differs");
    if m == 0 || n == 0 || k == 0 {
        return;
    }
    // SAFETY: the strides describe the row-major buffers checked above and
    // `c` does not alias `a` or `b`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            rsa,
            csa,
            b.data.as_ptr(),
            rsb,
            csb,
            1.0,
            c.data.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

pub fn matmul(a: &Tensor, b: &Tensor) -> Tensor {
    let mut c = Tensor::zeros(a.rows(), b.cols());
    gemm_acc(a, Trans::No, b, Trans::No, &mut c);
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &Tensor, b: &Tensor) -> Tensor {
        let mut out = Tensor::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                out.data[i * b.cols() + j] = (0..a.cols()).map(|k| a.get(i, k) * b.get(k, j)).sum();
            }
        }
        out
    }

    #[test]
    fn gemm_matches_naive_with_transposes() {
        let a = Tensor::from_rows(3, 4, (0..12).map(|x| x as f64 * 0.5 - 2.0).collect());
        let b = Tensor::from_rows(4, 2, (0..8).map(|x| (x as f64).sin()).collect());
        let expect = naive(&a, &b);
        matmul(&a, &b).data.iter().zip(&expect.data).for_each(|(x, y)| assert!((x - y).abs() < 1e-12));

        let at = Tensor::from_rows(4, 3, (0..12).map(|i| a.get(i % 3, i / 3)).collect());
        let mut c = Tensor::zeros(3, 2);
        gemm_acc(&at, Trans::Yes, &b, Trans::No, &mut c);
        c.data.iter().zip(&expect.data).for_each(|(x, y)| assert!((x - y).abs() < 1e-12));

        let bt = Tensor::from_rows(2, 4, (0..8).map(|i| b.get(i % 4, i / 4)).collect());
        let mut c = Tensor::zeros(3, 2);
        gemm_acc(&a, Trans::No, &bt, Trans::Yes, &mut c);
        c.data.iter().zip(&expect.data).for_each(|(x, y)| assert!((x - y).abs() < 1e-12));
    }

    #[test]
    fn shape_checks() {
        assert!(Tensor::new(vec![2, 3], vec![0.0; 5]).is_err());
        let t = Tensor::new(vec![2, 3], vec![1.0; 6]).unwrap();
        assert_eq!(t.col_sums().data(), &[2.0, 2.0, 2.0]);
    }
}
