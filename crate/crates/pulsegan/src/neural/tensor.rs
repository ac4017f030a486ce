//! Batched 1D tensor with an associated gradient buffer.

use crate::{Error, Result};

/// A `(batch, channels, length)` array of doubles plus a same-shape
/// gradient buffer. Data is row-major with the length axis contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    pub batch: usize,
    pub channels: usize,
    pub len: usize,
    pub data: Vec<f64>,
    pub grad: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(batch: usize, channels: usize, len: usize) -> Self {
        let n = batch * channels * len;
        Self { batch, channels, len, data: vec![0.0; n], grad: vec![0.0; n] }
    }

    pub fn from_data(batch: usize, channels: usize, len: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != batch * channels * len {
            return Err(Error::ShapeMismatch(format!(
                "expected {} values for ({batch}, {channels}, {len}), got {}",
                batch * channels * len,
                data.len()
            )));
        }
        let grad = vec![0.0; data.len()];
        Ok(Self { batch, channels, len, data, grad })
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn same_shape(&self, other: &Tensor3) -> bool {
        self.batch == other.batch && self.channels == other.channels && self.len == other.len
    }

    #[inline]
    pub fn row_index(&self, b: usize, c: usize) -> usize {
        (b * self.channels + c) * self.len
    }

    /// One `(batch, channel)` row of the data.
    #[inline]
    pub fn row(&self, b: usize, c: usize) -> &[f64] {
        let i = self.row_index(b, c);
        &self.data[i..i + self.len]
    }

    #[inline]
    pub fn row_mut(&mut self, b: usize, c: usize) -> &mut [f64] {
        let i = self.row_index(b, c);
        &mut self.data[i..i + self.len]
    }

    #[inline]
    pub fn grad_row(&self, b: usize, c: usize) -> &[f64] {
        let i = self.row_index(b, c);
        &self.grad[i..i + self.len]
    }

    #[inline]
    pub fn grad_row_mut(&mut self, b: usize, c: usize) -> &mut [f64] {
        let i = self.row_index(b, c);
        &mut self.grad[i..i + self.len]
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn assert_finite(&self, what: &str) -> Result<()> {
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSignal(format!("non-finite values in {what}")));
        }
        Ok(())
    }
}
