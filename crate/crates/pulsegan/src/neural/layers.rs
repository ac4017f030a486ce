//! Hand-wired differentiable layers: 1D convolution and transposed
//! convolution, activations, batch normalization, and a fully connected
//! layer. Every layer exposes `forward` plus a `backward` that reads the
//! output tensor's gradient buffer and accumulates into the input's
//! buffer and the parameter store.
//!
//! Stride-2 convolutions run on even/odd deinterleaved rows so the inner
//! loops stay contiguous.

use super::store::ParamStore;
use super::tensor::Tensor3;
use crate::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------
// Row kernels
// ---------------------------------------------------------------------

fn split_even_odd(x: &[f64], even: &mut Vec<f64>, odd: &mut Vec<f64>) {
    even.clear();
    odd.clear();
    let mut chunks = x.chunks_exact(2);
    for pair in &mut chunks {
        even.push(pair[0]);
        odd.push(pair[1]);
    }
    if let [last] = chunks.remainder() {
        even.push(*last);
    }
}

fn interleave_into(even: &[f64], odd: &[f64], out: &mut [f64]) {
    for (j, v) in even.iter().enumerate() {
        out[2 * j] = *v;
    }
    for (j, v) in odd.iter().enumerate() {
        out[2 * j + 1] = *v;
    }
}

/// y[i] += sum_k w[k] * x[2i + k], on pre-split planes.
fn gather_acc_s2(y: &mut [f64], xe: &[f64], xo: &[f64], w: &[f64]) {
    for (k, &wv) in w.iter().enumerate() {
        let base = if k & 1 == 0 { &xe[k / 2..] } else { &xo[k / 2..] };
        for (yv, xv) in y.iter_mut().zip(base) {
            *yv += wv * xv;
        }
    }
}

/// x[2i + k] += w[k] * y[i], on pre-split planes.
fn scatter_acc_s2(xe: &mut [f64], xo: &mut [f64], y: &[f64], w: &[f64]) {
    for (k, &wv) in w.iter().enumerate() {
        let base = if k & 1 == 0 { &mut xe[k / 2..] } else { &mut xo[k / 2..] };
        for (xv, yv) in base.iter_mut().zip(y) {
            *xv += wv * yv;
        }
    }
}

/// dw[k] += sum_i y[i] * x[2i + k], on pre-split planes.
fn kernel_acc_s2(dw: &mut [f64], xe: &[f64], xo: &[f64], y: &[f64]) {
    for (k, dwk) in dw.iter_mut().enumerate() {
        let base = if k & 1 == 0 { &xe[k / 2..] } else { &xo[k / 2..] };
        *dwk += y.iter().zip(base).map(|(a, b)| a * b).sum::<f64>();
    }
}

fn gather_acc_gen(y: &mut [f64], xp: &[f64], w: &[f64], stride: usize) {
    for (i, yv) in y.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, &wv) in w.iter().enumerate() {
            acc += wv * xp[i * stride + k];
        }
        *yv += acc;
    }
}

fn scatter_acc_gen(xp: &mut [f64], y: &[f64], w: &[f64], stride: usize) {
    for (i, &yv) in y.iter().enumerate() {
        for (k, &wv) in w.iter().enumerate() {
            xp[i * stride + k] += wv * yv;
        }
    }
}

fn kernel_acc_gen(dw: &mut [f64], xp: &[f64], y: &[f64], stride: usize) {
    for (k, dwk) in dw.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (i, &yv) in y.iter().enumerate() {
            acc += yv * xp[i * stride + k];
        }
        *dwk += acc;
    }
}

/// Padded copies of every channel row of one batch item, with stride-2
/// even/odd planes when requested.
struct PaddedRows {
    padded: Vec<Vec<f64>>,
    even: Vec<Vec<f64>>,
    odd: Vec<Vec<f64>>,
    split: bool,
}

impl PaddedRows {
    fn new(channels: usize, split: bool) -> Self {
        Self {
            padded: vec![Vec::new(); channels],
            even: vec![Vec::new(); channels],
            odd: vec![Vec::new(); channels],
            split,
        }
    }

    fn fill(&mut self, x: &Tensor3, b: usize, pad: usize) {
        for c in 0..x.channels {
            let row = x.row(b, c);
            let xp = &mut self.padded[c];
            xp.clear();
            xp.resize(row.len() + 2 * pad, 0.0);
            xp[pad..pad + row.len()].copy_from_slice(row);
            if self.split {
                let (e, o) = (&mut self.even[c], &mut self.odd[c]);
                split_even_odd(xp, e, o);
            }
        }
    }
}

fn kaiming_uniform(rng: &mut ChaCha8Rng, fan_in: usize, n: usize) -> Vec<f64> {
    let bound = (6.0 / fan_in as f64).sqrt();
    (0..n).map(|_| rng.gen_range(-bound..bound)).collect()
}

// ---------------------------------------------------------------------
// Conv1d
// ---------------------------------------------------------------------

/// Strided 1D cross-correlation with zero padding.
#[derive(Debug, Clone)]
pub struct Conv1d {
    pub name: String,
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
}

impl Conv1d {
    pub fn init(
        name: &str,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        store: &mut ParamStore,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if kernel == 0 || stride == 0 || in_ch == 0 || out_ch == 0 {
            return Err(Error::LayerConfig(format!("conv `{name}`: zero-sized dimension")));
        }
        let fan_in = in_ch * kernel;
        store.register(
            &format!("{name}.weight"),
            vec![out_ch, in_ch, kernel],
            kaiming_uniform(rng, fan_in, out_ch * in_ch * kernel),
        )?;
        store.register(&format!("{name}.bias"), vec![out_ch], vec![0.0; out_ch])?;
        Ok(Self { name: name.to_string(), in_ch, out_ch, kernel, stride, padding })
    }

    pub fn weight_name(&self) -> String {
        format!("{}.weight", self.name)
    }

    pub fn bias_name(&self) -> String {
        format!("{}.bias", self.name)
    }

    pub fn out_len(&self, len: usize) -> Result<usize> {
        let padded = len + 2 * self.padding;
        if padded < self.kernel {
            return Err(Error::LayerConfig(format!(
                "conv `{}`: input of {len} (+2*{} pad) shorter than kernel {}",
                self.name, self.padding, self.kernel
            )));
        }
        Ok((padded - self.kernel) / self.stride + 1)
    }

    pub fn forward(&self, store: &ParamStore, x: &Tensor3) -> Result<Tensor3> {
        if x.channels != self.in_ch {
            return Err(Error::ShapeMismatch(format!(
                "conv `{}` expects {} channels, got {}",
                self.name, self.in_ch, x.channels
            )));
        }
        let out_len = self.out_len(x.len)?;
        let w = store.values(&self.weight_name());
        let bias = store.values(&self.bias_name());
        let mut y = Tensor3::zeros(x.batch, self.out_ch, out_len);

        let s2 = self.stride == 2;
        let mut rows = PaddedRows::new(self.in_ch, s2);
        for b in 0..x.batch {
            rows.fill(x, b, self.padding);
            for co in 0..self.out_ch {
                let yrow = y.row_mut(b, co);
                yrow.fill(bias[co]);
                for ci in 0..self.in_ch {
                    let wrow = &w[(co * self.in_ch + ci) * self.kernel..][..self.kernel];
                    if s2 {
                        gather_acc_s2(yrow, &rows.even[ci], &rows.odd[ci], wrow);
                    } else {
                        gather_acc_gen(yrow, &rows.padded[ci], wrow, self.stride);
                    }
                }
            }
        }
        Ok(y)
    }

    /// Accumulate gradients into `x.grad` and parameter gradients from
    /// `y.grad`.
    pub fn backward(&self, store: &mut ParamStore, x: &mut Tensor3, y: &Tensor3) -> Result<()> {
        let out_len = y.len;
        let s2 = self.stride == 2;
        let padded_len = x.len + 2 * self.padding;

        // Bias gradient.
        {
            let bias = store.get_mut(&self.bias_name());
            for b in 0..y.batch {
                for co in 0..self.out_ch {
                    bias.grad[co] += y.grad_row(b, co).iter().sum::<f64>();
                }
            }
        }

        let wpar = store.get_mut(&self.weight_name());
        let k = self.kernel;
        let mut rows = PaddedRows::new(self.in_ch, s2);
        let mut dxe = vec![0.0; padded_len / 2 + 1];
        let mut dxo = vec![0.0; padded_len / 2 + 1];
        let mut dxp = vec![0.0; padded_len];
        for b in 0..x.batch {
            rows.fill(x, b, self.padding);
            // Weight gradient: correlate incoming grads with inputs.
            for co in 0..self.out_ch {
                let gy = y.grad_row(b, co);
                for ci in 0..self.in_ch {
                    let dw = &mut wpar.grad[(co * self.in_ch + ci) * k..][..k];
                    if s2 {
                        kernel_acc_s2(dw, &rows.even[ci], &rows.odd[ci], gy);
                    } else {
                        kernel_acc_gen(dw, &rows.padded[ci], gy, self.stride);
                    }
                }
            }
            // Input gradient: scatter grads back through the kernel.
            for ci in 0..self.in_ch {
                if s2 {
                    let ne = (padded_len + 1) / 2;
                    let no = padded_len / 2;
                    dxe[..ne].fill(0.0);
                    dxo[..no].fill(0.0);
                    for co in 0..self.out_ch {
                        let wrow = &wpar.values[(co * self.in_ch + ci) * k..][..k];
                        scatter_acc_s2(&mut dxe[..ne], &mut dxo[..no], y.grad_row(b, co), wrow);
                    }
                    interleave_into(&dxe[..ne], &dxo[..no], &mut dxp);
                } else {
                    dxp.fill(0.0);
                    for co in 0..self.out_ch {
                        let wrow = &wpar.values[(co * self.in_ch + ci) * k..][..k];
                        scatter_acc_gen(&mut dxp, y.grad_row(b, co), wrow, self.stride);
                    }
                }
                let gx = x.grad_row_mut(b, ci);
                for (g, d) in gx.iter_mut().zip(&dxp[self.padding..]) {
                    *g += d;
                }
            }
        }
        let _ = out_len;
        Ok(())
    }
}

// ---------------------------------------------------------------------
// TConv1d
// ---------------------------------------------------------------------

/// Transposed 1D convolution: the adjoint of [`Conv1d`] with the same
/// kernel, stride, and padding, used as a forward op. `output_padding`
/// extends the right edge to pick which input length the matching
/// convolution consumed (stride-2 halving is two-to-one).
#[derive(Debug, Clone)]
pub struct TConv1d {
    pub name: String,
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub output_padding: usize,
}

impl TConv1d {
    #[allow(clippy::too_many_arguments)]
    pub fn init(
        name: &str,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        output_padding: usize,
        store: &mut ParamStore,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if kernel == 0 || stride == 0 || in_ch == 0 || out_ch == 0 {
            return Err(Error::LayerConfig(format!("tconv `{name}`: zero-sized dimension")));
        }
        if output_padding >= stride || output_padding > padding {
            return Err(Error::LayerConfig(format!(
                "tconv `{name}`: output_padding {output_padding} must be < stride {stride} and <= padding {padding}"
            )));
        }
        let fan_in = in_ch * kernel;
        store.register(
            &format!("{name}.weight"),
            vec![in_ch, out_ch, kernel],
            kaiming_uniform(rng, fan_in, in_ch * out_ch * kernel),
        )?;
        store.register(&format!("{name}.bias"), vec![out_ch], vec![0.0; out_ch])?;
        Ok(Self {
            name: name.to_string(),
            in_ch,
            out_ch,
            kernel,
            stride,
            padding,
            output_padding,
        })
    }

    pub fn weight_name(&self) -> String {
        format!("{}.weight", self.name)
    }

    pub fn bias_name(&self) -> String {
        format!("{}.bias", self.name)
    }

    fn full_len(&self, len: usize) -> usize {
        (len - 1) * self.stride + self.kernel
    }

    pub fn out_len(&self, len: usize) -> Result<usize> {
        let full = self.full_len(len);
        let cropped = full as i64 - 2 * self.padding as i64 + self.output_padding as i64;
        if cropped < 1 {
            return Err(Error::LayerConfig(format!(
                "tconv `{}`: non-positive output length for input {len}",
                self.name
            )));
        }
        Ok(cropped as usize)
    }

    pub fn forward(&self, store: &ParamStore, x: &Tensor3) -> Result<Tensor3> {
        if x.channels != self.in_ch {
            return Err(Error::ShapeMismatch(format!(
                "tconv `{}` expects {} channels, got {}",
                self.name, self.in_ch, x.channels
            )));
        }
        let out_len = self.out_len(x.len)?;
        let full = self.full_len(x.len);
        let w = store.values(&self.weight_name());
        let bias = store.values(&self.bias_name());
        let mut y = Tensor3::zeros(x.batch, self.out_ch, out_len);

        let s2 = self.stride == 2;
        let k = self.kernel;
        let mut ye = vec![0.0; full / 2 + 1];
        let mut yo = vec![0.0; full / 2 + 1];
        let mut yfull = vec![0.0; full];
        for b in 0..x.batch {
            for co in 0..self.out_ch {
                if s2 {
                    let ne = (full + 1) / 2;
                    let no = full / 2;
                    ye[..ne].fill(0.0);
                    yo[..no].fill(0.0);
                    for ci in 0..self.in_ch {
                        let wrow = &w[(ci * self.out_ch + co) * k..][..k];
                        scatter_acc_s2(&mut ye[..ne], &mut yo[..no], x.row(b, ci), wrow);
                    }
                    interleave_into(&ye[..ne], &yo[..no], &mut yfull);
                } else {
                    yfull.fill(0.0);
                    for ci in 0..self.in_ch {
                        let wrow = &w[(ci * self.out_ch + co) * k..][..k];
                        scatter_acc_gen(&mut yfull, x.row(b, ci), wrow, self.stride);
                    }
                }
                let yrow = y.row_mut(b, co);
                for (yv, fv) in yrow.iter_mut().zip(&yfull[self.padding..]) {
                    *yv = fv + bias[co];
                }
            }
        }
        Ok(y)
    }

    pub fn backward(&self, store: &mut ParamStore, x: &mut Tensor3, y: &Tensor3) -> Result<()> {
        let full = self.full_len(x.len);
        let s2 = self.stride == 2;
        let k = self.kernel;

        {
            let bias = store.get_mut(&self.bias_name());
            for b in 0..y.batch {
                for co in 0..self.out_ch {
                    bias.grad[co] += y.grad_row(b, co).iter().sum::<f64>();
                }
            }
        }

        let wpar = store.get_mut(&self.weight_name());
        // Padded-back gradient rows per output channel, with stride-2
        // planes, rebuilt once per batch item.
        let mut gfull = vec![0.0; full];
        let mut ge: Vec<Vec<f64>> = vec![Vec::new(); self.out_ch];
        let mut go: Vec<Vec<f64>> = vec![Vec::new(); self.out_ch];
        let mut gf: Vec<Vec<f64>> = vec![Vec::new(); self.out_ch];
        for b in 0..x.batch {
            for co in 0..self.out_ch {
                gfull.fill(0.0);
                let gy = y.grad_row(b, co);
                gfull[self.padding..self.padding + y.len].copy_from_slice(gy);
                if s2 {
                    split_even_odd(&gfull, &mut ge[co], &mut go[co]);
                } else {
                    gf[co].clear();
                    gf[co].extend_from_slice(&gfull);
                }
            }
            for ci in 0..self.in_ch {
                let xrow_idx = x.row_index(b, ci);
                // dw[ci,co,k] += sum_i x[i] * gfull[i*s + k]
                for co in 0..self.out_ch {
                    let dw = &mut wpar.grad[(ci * self.out_ch + co) * k..][..k];
                    let xrow = &x.data[xrow_idx..xrow_idx + x.len];
                    if s2 {
                        kernel_acc_s2(dw, &ge[co], &go[co], xrow);
                    } else {
                        kernel_acc_gen(dw, &gf[co], xrow, self.stride);
                    }
                }
                // dx[i] += sum_co sum_k w[k] * gfull[i*s + k]
                let gx = x.grad_row_mut(b, ci);
                for co in 0..self.out_ch {
                    let wrow = &wpar.values[(ci * self.out_ch + co) * k..][..k];
                    if s2 {
                        gather_acc_s2(gx, &ge[co], &go[co], wrow);
                    } else {
                        gather_acc_gen(gx, &gf[co], wrow, self.stride);
                    }
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------

/// Elementwise nonlinearity. PReLU carries one learnable slope per layer.
#[derive(Debug, Clone)]
pub enum Activation {
    PRelu { name: String },
    Tanh,
    LeakyRelu { slope: f64 },
    Sigmoid,
}

impl Activation {
    pub fn prelu(name: &str, init_slope: f64, store: &mut ParamStore) -> Result<Self> {
        store.register(&format!("{name}.slope"), vec![1], vec![init_slope])?;
        Ok(Activation::PRelu { name: name.to_string() })
    }

    pub fn forward(&self, store: &ParamStore, x: &Tensor3) -> Tensor3 {
        let mut y = Tensor3::zeros(x.batch, x.channels, x.len);
        match self {
            Activation::PRelu { name } => {
                let a = store.values(&format!("{name}.slope"))[0];
                for (yv, &xv) in y.data.iter_mut().zip(&x.data) {
                    *yv = if xv >= 0.0 { xv } else { a * xv };
                }
            }
            Activation::Tanh => {
                for (yv, &xv) in y.data.iter_mut().zip(&x.data) {
                    *yv = xv.tanh();
                }
            }
            Activation::LeakyRelu { slope } => {
                for (yv, &xv) in y.data.iter_mut().zip(&x.data) {
                    *yv = if xv >= 0.0 { xv } else { slope * xv };
                }
            }
            Activation::Sigmoid => {
                for (yv, &xv) in y.data.iter_mut().zip(&x.data) {
                    *yv = 1.0 / (1.0 + (-xv).exp());
                }
            }
        }
        y
    }

    pub fn backward(&self, store: &mut ParamStore, x: &mut Tensor3, y: &Tensor3) {
        match self {
            Activation::PRelu { name } => {
                let par = store.get_mut(&format!("{name}.slope"));
                let a = par.values[0];
                let mut da = 0.0;
                for i in 0..x.data.len() {
                    let xv = x.data[i];
                    let g = y.grad[i];
                    if xv >= 0.0 {
                        x.grad[i] += g;
                    } else {
                        x.grad[i] += a * g;
                        da += g * xv;
                    }
                }
                par.grad[0] += da;
            }
            Activation::Tanh => {
                for i in 0..x.data.len() {
                    x.grad[i] += y.grad[i] * (1.0 - y.data[i] * y.data[i]);
                }
            }
            Activation::LeakyRelu { slope } => {
                for i in 0..x.data.len() {
                    let d = if x.data[i] >= 0.0 { 1.0 } else { *slope };
                    x.grad[i] += y.grad[i] * d;
                }
            }
            Activation::Sigmoid => {
                for i in 0..x.data.len() {
                    x.grad[i] += y.grad[i] * y.data[i] * (1.0 - y.data[i]);
                }
            }
        }
    }
}

// ---------------------------------------------------------------------
// BatchNorm1d
// ---------------------------------------------------------------------

/// Per-channel batch normalization over `(batch, length)`.
///
/// Scale and shift are trainable parameters; running statistics live on
/// the layer and are updated only in train mode.
#[derive(Debug, Clone)]
pub struct BatchNorm1d {
    pub name: String,
    pub channels: usize,
    pub momentum: f64,
    pub epsilon: f64,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub train_mode: bool,
}

impl BatchNorm1d {
    pub fn init(name: &str, channels: usize, store: &mut ParamStore) -> Result<Self> {
        store.register(&format!("{name}.scale"), vec![channels], vec![1.0; channels])?;
        store.register(&format!("{name}.shift"), vec![channels], vec![0.0; channels])?;
        Ok(Self {
            name: name.to_string(),
            channels,
            momentum: 0.1,
            epsilon: 1e-8,
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            train_mode: true,
        })
    }

    fn batch_stats(&self, x: &Tensor3, c: usize) -> (f64, f64) {
        let n = (x.batch * x.len) as f64;
        let mut sum = 0.0;
        for b in 0..x.batch {
            sum += x.row(b, c).iter().sum::<f64>();
        }
        let mean = sum / n;
        let mut var = 0.0;
        for b in 0..x.batch {
            var += x.row(b, c).iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
        }
        (mean, var / n)
    }

    pub fn forward(&mut self, store: &ParamStore, x: &Tensor3) -> Result<Tensor3> {
        if x.channels != self.channels {
            return Err(Error::ShapeMismatch(format!(
                "batchnorm `{}` expects {} channels, got {}",
                self.name, self.channels, x.channels
            )));
        }
        let n = x.batch * x.len;
        if self.train_mode && n < 2 {
            return Err(Error::DegenerateInput(format!(
                "batchnorm `{}` needs more than one element per channel in train mode",
                self.name
            )));
        }
        let scale = store.values(&format!("{}.scale", self.name));
        let shift = store.values(&format!("{}.shift", self.name));
        let mut y = Tensor3::zeros(x.batch, x.channels, x.len);
        for c in 0..self.channels {
            let (mean, var) = if self.train_mode {
                let (m, v) = self.batch_stats(x, c);
                self.running_mean[c] =
                    (1.0 - self.momentum) * self.running_mean[c] + self.momentum * m;
                let unbiased = v * n as f64 / (n as f64 - 1.0);
                self.running_var[c] =
                    (1.0 - self.momentum) * self.running_var[c] + self.momentum * unbiased;
                (m, v)
            } else {
                (self.running_mean[c], self.running_var[c])
            };
            let inv = 1.0 / (var + self.epsilon).sqrt();
            let (g, s) = (scale[c], shift[c]);
            for b in 0..x.batch {
                let xi = x.row_index(b, c);
                let yi = y.row_index(b, c);
                for l in 0..x.len {
                    y.data[yi + l] = g * (x.data[xi + l] - mean) * inv + s;
                }
            }
        }
        Ok(y)
    }

    pub fn backward(&self, store: &mut ParamStore, x: &mut Tensor3, y: &Tensor3) -> Result<()> {
        let n = (x.batch * x.len) as f64;
        let scale_name = format!("{}.scale", self.name);
        let shift_name = format!("{}.shift", self.name);
        for c in 0..self.channels {
            let (mean, var) = if self.train_mode {
                self.batch_stats(x, c)
            } else {
                (self.running_mean[c], self.running_var[c])
            };
            let inv = 1.0 / (var + self.epsilon).sqrt();
            let g = store.values(&scale_name)[c];

            // Channel reductions.
            let mut sum_gy = 0.0;
            let mut sum_gy_xhat = 0.0;
            for b in 0..x.batch {
                let xi = x.row_index(b, c);
                let gy = y.grad_row(b, c);
                for (l, gyv) in gy.iter().enumerate() {
                    let xhat = (x.data[xi + l] - mean) * inv;
                    sum_gy += gyv;
                    sum_gy_xhat += gyv * xhat;
                }
            }
            store.get_mut(&scale_name).grad[c] += sum_gy_xhat;
            store.get_mut(&shift_name).grad[c] += sum_gy;

            if self.train_mode {
                let mean_gy = sum_gy / n;
                let mean_gy_xhat = sum_gy_xhat / n;
                for b in 0..x.batch {
                    let xi = x.row_index(b, c);
                    for l in 0..x.len {
                        let xhat = (x.data[xi + l] - mean) * inv;
                        let gy = y.grad[xi + l];
                        x.grad[xi + l] += g * inv * (gy - mean_gy - xhat * mean_gy_xhat);
                    }
                }
            } else {
                for b in 0..x.batch {
                    let xi = x.row_index(b, c);
                    for l in 0..x.len {
                        x.grad[xi + l] += y.grad[xi + l] * g * inv;
                    }
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------
// Linear
// ---------------------------------------------------------------------

/// Fully connected layer over the flattened `(channels * length)` axis.
/// Output shape is `(batch, out_features, 1)`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub name: String,
    pub in_features: usize,
    pub out_features: usize,
}

impl Linear {
    pub fn init(
        name: &str,
        in_features: usize,
        out_features: usize,
        store: &mut ParamStore,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let bound = 1.0 / (in_features as f64).sqrt();
        let w: Vec<f64> = (0..in_features * out_features)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        store.register(&format!("{name}.weight"), vec![out_features, in_features], w)?;
        store.register(&format!("{name}.bias"), vec![out_features], vec![0.0; out_features])?;
        Ok(Self { name: name.to_string(), in_features, out_features })
    }

    pub fn forward(&self, store: &ParamStore, x: &Tensor3) -> Result<Tensor3> {
        let d = x.channels * x.len;
        if d != self.in_features {
            return Err(Error::ShapeMismatch(format!(
                "linear `{}` expects {} inputs, got {}x{}={}",
                self.name, self.in_features, x.channels, x.len, d
            )));
        }
        let w = store.values(&format!("{}.weight", self.name));
        let bias = store.values(&format!("{}.bias", self.name));
        let mut y = Tensor3::zeros(x.batch, self.out_features, 1);
        for b in 0..x.batch {
            let xrow = &x.data[b * d..(b + 1) * d];
            for o in 0..self.out_features {
                let wrow = &w[o * d..(o + 1) * d];
                let dot: f64 = wrow.iter().zip(xrow).map(|(a, b)| a * b).sum();
                y.data[b * self.out_features + o] = dot + bias[o];
            }
        }
        Ok(y)
    }

    pub fn backward(&self, store: &mut ParamStore, x: &mut Tensor3, y: &Tensor3) -> Result<()> {
        let d = self.in_features;
        {
            let bias = store.get_mut(&format!("{}.bias", self.name));
            for b in 0..x.batch {
                for o in 0..self.out_features {
                    bias.grad[o] += y.grad[b * self.out_features + o];
                }
            }
        }
        let wpar = store.get_mut(&format!("{}.weight", self.name));
        for b in 0..x.batch {
            let xbase = b * d;
            for o in 0..self.out_features {
                let gy = y.grad[b * self.out_features + o];
                if gy == 0.0 {
                    continue;
                }
                let wrow = &wpar.values[o * d..(o + 1) * d];
                let dwrow = &mut wpar.grad[o * d..(o + 1) * d];
                for i in 0..d {
                    dwrow[i] += gy * x.data[xbase + i];
                }
                for i in 0..d {
                    x.grad[xbase + i] += gy * wrow[i];
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------
// Channel concatenation
// ---------------------------------------------------------------------

/// Concatenate two tensors along the channel axis.
pub fn concat_channels(a: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
    if a.batch != b.batch || a.len != b.len {
        return Err(Error::ShapeMismatch(format!(
            "concat: ({}, {}, {}) vs ({}, {}, {})",
            a.batch, a.channels, a.len, b.batch, b.channels, b.len
        )));
    }
    let mut y = Tensor3::zeros(a.batch, a.channels + b.channels, a.len);
    for bi in 0..a.batch {
        for c in 0..a.channels {
            y.row_mut(bi, c).copy_from_slice(a.row(bi, c));
        }
        for c in 0..b.channels {
            y.row_mut(bi, a.channels + c).copy_from_slice(b.row(bi, c));
        }
    }
    Ok(y)
}

/// Route the gradient of a concatenated tensor back to its two sources.
pub fn concat_channels_backward(a: &mut Tensor3, b: &mut Tensor3, y: &Tensor3) -> Result<()> {
    if y.channels != a.channels + b.channels || y.batch != a.batch || y.len != a.len {
        return Err(Error::ShapeMismatch("concat backward shape mismatch".into()));
    }
    for bi in 0..a.batch {
        for c in 0..a.channels {
            for (g, s) in a.grad_row_mut(bi, c).iter_mut().zip(y.grad_row(bi, c)) {
                *g += s;
            }
        }
        for c in 0..b.channels {
            for (g, s) in b
                .grad_row_mut(bi, c)
                .iter_mut()
                .zip(y.grad_row(bi, a.channels + c))
            {
                *g += s;
            }
        }
    }
    Ok(())
}
