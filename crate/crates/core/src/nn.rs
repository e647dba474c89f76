//! Inference for the learned reconstructions: a convolutional network either
//! predicts cell face states directly or the linear stencil coefficients of
//! the reconstruction slopes.
//!
//! Networks are read from self-describing little-endian weight files
//! ("NNW1"), so any stack of `Conv1D`/`Conv2D`/`GeLU`/`Softplus` layers loads.

use std::fmt;
use std::path::Path;

use rayon::prelude::*;

use crate::binary::{check_crc, Reader};
use crate::error::{Error, Result};
use crate::field::ConservedField;
use crate::reconstruction::{FaceStates, SlopeCoefficients, MAX_STENCIL};
use crate::state::{State, System};

pub const MAGIC: &[u8; 4] = b"NNW1";
pub const VERSION: u32 = 1;

/// Dense row-major array; network activations use the shape `[channels, ny, nx]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != values.len() {
            return Err(Error::Inference(format!(
                "shape {shape:?} needs {n} values, got {}",
                values.len()
            )));
        }
        Ok(Tensor { shape, values })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape,
            values: vec![0.0; n],
        }
    }

    fn dims3(&self) -> Result<(usize, usize, usize)> {
        match self.shape[..] {
            [c, h, w] => Ok((c, h, w)),
            _ => Err(Error::Inference(format!(
                "expected a [channels, ny, nx] tensor, got shape {:?}",
                self.shape
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Padding {
    Periodic,
    /// Mirror about the boundary face (edge sample repeated).
    Reflect,
}

#[inline]
fn pad_index(idx: isize, n: usize, padding: Padding) -> usize {
    let n = n as isize;
    let i = match padding {
        Padding::Periodic => idx.rem_euclid(n),
        Padding::Reflect => {
            let period = 2 * n;
            let m = idx.rem_euclid(period);
            if m < n {
                m
            } else {
                period - 1 - m
            }
        }
    };
    i as usize
}

/// A same-size convolution layer. 1D layers have `kernel = [kw]`, 2D
/// layers `kernel = [kh, kw]`; weights are laid out `[out, in, kh, kw]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: Vec<usize>,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Conv {
    fn kh_kw(&self) -> (usize, usize) {
        match self.kernel[..] {
            [kw] => (1, kw),
            [kh, kw] => (kh, kw),
            _ => (0, 0),
        }
    }

    fn validate(&self) -> Result<()> {
        let (kh, kw) = self.kh_kw();
        if kh == 0 || kw == 0 || kh % 2 == 0 || kw % 2 == 0 {
            return Err(Error::Inference(format!(
                "kernel {:?} must have odd positive sizes",
                self.kernel
            )));
        }
        let expected = self.out_ch * self.in_ch * kh * kw;
        if self.weights.len() != expected || self.bias.len() != self.out_ch {
            return Err(Error::Inference(format!(
                "conv {}->{} with kernel {:?} needs {expected} weights and {} biases, got {} and {}",
                self.in_ch,
                self.out_ch,
                self.kernel,
                self.out_ch,
                self.weights.len(),
                self.bias.len()
            )));
        }
        Ok(())
    }

    /// Cross-correlation plus bias with `(k - 1) / 2` padding on each side.
    pub fn apply(&self, input: &Tensor, padding: Padding) -> Result<Tensor> {
        let (c, h, w) = input.dims3()?;
        if c != self.in_ch {
            return Err(Error::Inference(format!(
                "conv expects {} input channels, got {c}",
                self.in_ch
            )));
        }
        let (kh, kw) = self.kh_kw();
        let (rh, rw) = ((kh / 2) as isize, (kw / 2) as isize);
        let plane = h * w;
        let values: Vec<f64> = (0..self.out_ch)
            .into_par_iter()
            .flat_map_iter(|o| {
                let mut out = vec![self.bias[o]; plane];
                for ci in 0..self.in_ch {
                    let src = &input.values[ci * plane..(ci + 1) * plane];
                    for dy in 0..kh {
                        for dx in 0..kw {
                            let wgt = self.weights[((o * self.in_ch + ci) * kh + dy) * kw + dx];
                            if wgt == 0.0 {
                                continue;
                            }
                            for y in 0..h {
                                let sy = pad_index(y as isize + dy as isize - rh, h, padding);
                                for x in 0..w {
                                    let sx = pad_index(x as isize + dx as isize - rw, w, padding);
                                    out[y * w + x] += wgt * src[sy * w + sx];
                                }
                            }
                        }
                    }
                }
                out
            })
            .collect();
        Tensor::new(vec![self.out_ch, h, w], values)
    }
}

pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

/// `ln(1 + e^x)` without overflow for large `|x|`.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[derive(Clone, Debug, PartialEq)]
pub enum Layer {
    Conv1D(Conv),
    Conv2D(Conv),
    Gelu,
    /// Applied only to the height channels of a boundary-state network.
    Softplus,
}

impl Layer {
    fn tag(&self) -> u8 {
        match self {
            Layer::Conv1D(_) => 0,
            Layer::Conv2D(_) => 1,
            Layer::Gelu => 2,
            Layer::Softplus => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Approach {
    BoundaryStates,
    SlopeCoefficients,
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Approach::BoundaryStates => "boundary_states",
            Approach::SlopeCoefficients => "slope_coefficients",
        })
    }
}

/// A trained network with its input normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightBundle {
    pub approach: Approach,
    pub system: System,
    /// Per conserved component `(mean, scale)`: inputs are fed as
    /// `(q - mean) / scale`. Output heights are scaled back by `scale`
    /// alone so they stay positive; other face states get `y * scale + mean`.
    pub normalization: Vec<(f64, f64)>,
    pub layers: Vec<Layer>,
}

impl WeightBundle {
    fn ndim(&self) -> usize {
        self.system.grid_dims()
    }

    /// Output channels the final layer must produce.
    pub fn output_channels(&self) -> Option<usize> {
        self.layers.iter().rev().find_map(|l| match l {
            Layer::Conv1D(c) | Layer::Conv2D(c) => Some(c.out_ch),
            _ => None,
        })
    }

    /// Stencil width of a slope-coefficient network.
    pub fn stencil_width(&self) -> Option<usize> {
        let per = self.ndim() * self.system.ncomp();
        self.output_channels().map(|c| c / per)
    }

    pub fn validate(&self) -> Result<()> {
        let ncomp = self.system.ncomp();
        let ndim = self.ndim();
        if self.normalization.len() != ncomp {
            return Err(Error::Inference(format!(
                "{} normalization channels for a {ncomp}-component system",
                self.normalization.len()
            )));
        }
        for (k, (m, s)) in self.normalization.iter().enumerate() {
            if !m.is_finite() || !(s.is_finite() && *s > 0.0) {
                return Err(Error::Inference(format!(
                    "channel {k} normalization ({m}, {s}) needs a finite mean and positive scale"
                )));
            }
        }
        let mut channels = ncomp;
        let mut convs = 0;
        for (i, layer) in self.layers.iter().enumerate() {
            match layer {
                Layer::Conv1D(c) | Layer::Conv2D(c) => {
                    let want = if ndim == 1 { 1 } else { 2 };
                    if c.kernel.len() != want || matches!(layer, Layer::Conv1D(_)) != (ndim == 1) {
                        return Err(Error::Inference(format!(
                            "layer {i}: a {ndim}D system needs Conv{ndim}D layers"
                        )));
                    }
                    c.validate().map_err(|e| Error::Inference(format!("layer {i}: {e}")))?;
                    if c.in_ch != channels {
                        return Err(Error::Inference(format!(
                            "layer {i} expects {} input channels, previous layer gives {channels}",
                            c.in_ch
                        )));
                    }
                    channels = c.out_ch;
                    convs += 1;
                }
                Layer::Gelu => {}
                Layer::Softplus => {
                    if self.approach != Approach::BoundaryStates || i + 1 != self.layers.len() {
                        return Err(Error::Inference(format!(
                            "layer {i}: Softplus is only allowed as the final layer of a boundary-state network"
                        )));
                    }
                }
            }
        }
        if convs == 0 {
            return Err(Error::Inference("network has no convolution layers".into()));
        }
        match self.approach {
            Approach::BoundaryStates => {
                let want = 2 * ndim * ncomp;
                if channels != want {
                    return Err(Error::Inference(format!(
                        "boundary-state network must output {want} channels, got {channels}"
                    )));
                }
                if self.layers.last() != Some(&Layer::Softplus) {
                    return Err(Error::Inference(
                        "boundary-state network must end in Softplus on the height channels".into(),
                    ));
                }
            }
            Approach::SlopeCoefficients => {
                let per = ndim * ncomp;
                let w = channels / per;
                if channels % per != 0 || w % 2 == 0 || w > MAX_STENCIL {
                    return Err(Error::Inference(format!(
                        "slope network outputs {channels} channels; need {per} x odd stencil width <= {MAX_STENCIL}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn forward(&self, field: &ConservedField, padding: Padding) -> Result<Tensor> {
        if field.system != self.system {
            return Err(Error::config(format!(
                "weight bundle is for {}, field is {}",
                self.system, field.system
            )));
        }
        let (nx, ny) = field.dims();
        let ncomp = self.system.ncomp();
        let cells = field.interior();
        let mut values = Vec::with_capacity(ncomp * cells.len());
        for (k, (mean, scale)) in self.normalization.iter().enumerate() {
            values.extend(cells.iter().map(|q| (q[k] - mean) / scale));
        }
        let mut x = Tensor::new(vec![ncomp, ny, nx], values)?;
        let plane = nx * ny;
        for layer in &self.layers {
            x = match layer {
                Layer::Conv1D(c) | Layer::Conv2D(c) => c.apply(&x, padding)?,
                Layer::Gelu => {
                    x.values.iter_mut().for_each(|v| *v = gelu(*v));
                    x
                }
                Layer::Softplus => {
                    for (ch, chunk) in x.values.chunks_mut(plane).enumerate() {
                        if ch % ncomp == 0 {
                            chunk.iter_mut().for_each(|v| *v = softplus(*v));
                        }
                    }
                    x
                }
            };
        }
        Ok(x)
    }
}

/// Face states predicted directly by a boundary-state network.
pub fn infer_boundary_states(bundle: &WeightBundle, field: &ConservedField, padding: Padding) -> Result<FaceStates> {
    if bundle.approach != Approach::BoundaryStates {
        return Err(Error::config(format!(
            "expected a boundary_states bundle, got {}",
            bundle.approach
        )));
    }
    let out = bundle.forward(field, padding)?;
    let ncomp = bundle.system.ncomp();
    let n = field.ncells();
    let nfaces = 2 * bundle.ndim();
    let mut faces = vec![vec![State::ZERO; n]; nfaces];
    for (f, face) in faces.iter_mut().enumerate() {
        for (k, (mean, scale)) in bundle.normalization.iter().enumerate() {
            let chan = &out.values[(f * ncomp + k) * n..(f * ncomp + k + 1) * n];
            for (c, y) in chan.iter().enumerate() {
                face[c][k] = if k == 0 {
                    (y * scale).max(f64::MIN_POSITIVE)
                } else {
                    y * scale + mean
                };
            }
        }
    }
    let mut it = faces.into_iter();
    let west = it.next().unwrap_or_default();
    let east = it.next().unwrap_or_default();
    Ok(FaceStates {
        west,
        east,
        south: it.next().unwrap_or_default(),
        north: it.next().unwrap_or_default(),
    })
}

/// Per-cell stencil coefficients predicted by a slope network.
pub fn infer_slope_coefficients(
    bundle: &WeightBundle,
    field: &ConservedField,
    padding: Padding,
) -> Result<SlopeCoefficients> {
    if bundle.approach != Approach::SlopeCoefficients {
        return Err(Error::config(format!(
            "expected a slope_coefficients bundle, got {}",
            bundle.approach
        )));
    }
    let out = bundle.forward(field, padding)?;
    let n = field.ncells();
    let channels = out.shape[0];
    let mut alpha = vec![0.0; n * channels];
    for ch in 0..channels {
        for c in 0..n {
            alpha[c * channels + ch] = out.values[ch * n + c];
        }
    }
    let width = channels / (bundle.ndim() * bundle.system.ncomp());
    SlopeCoefficients::new(n, bundle.ndim(), bundle.system.ncomp(), width, alpha)
}

fn approach_tag(a: Approach) -> u8 {
    match a {
        Approach::BoundaryStates => 0,
        Approach::SlopeCoefficients => 1,
    }
}

pub fn encode(bundle: &WeightBundle) -> Vec<u8> {
    let mut b = Vec::new();
    b.extend_from_slice(MAGIC);
    b.extend_from_slice(&VERSION.to_le_bytes());
    b.push(approach_tag(bundle.approach));
    b.push(bundle.system.tag());
    b.extend_from_slice(&(bundle.normalization.len() as u16).to_le_bytes());
    for (m, s) in &bundle.normalization {
        b.extend_from_slice(&m.to_le_bytes());
        b.extend_from_slice(&s.to_le_bytes());
    }
    b.extend_from_slice(&(bundle.layers.len() as u32).to_le_bytes());
    for layer in &bundle.layers {
        b.push(layer.tag());
        if let Layer::Conv1D(c) | Layer::Conv2D(c) = layer {
            b.extend_from_slice(&(c.in_ch as u32).to_le_bytes());
            b.extend_from_slice(&(c.out_ch as u32).to_le_bytes());
            for k in &c.kernel {
                b.extend_from_slice(&(*k as u32).to_le_bytes());
            }
            for v in c.weights.iter().chain(&c.bias) {
                b.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    let crc = crc32fast::hash(&b);
    b.extend_from_slice(&crc.to_le_bytes());
    b
}

pub fn decode(bytes: &[u8]) -> Result<WeightBundle> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::Format {
            offset: 0,
            msg: "not a weight bundle (bad magic)".into(),
        });
    }
    let mut r = Reader::new(bytes);
    r.take(4, "magic")?;
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(r.error(4, format!("unsupported weight bundle version {version}")));
    }
    let at = r.pos;
    let approach = match r.u8("approach")? {
        0 => Approach::BoundaryStates,
        1 => Approach::SlopeCoefficients,
        t => return Err(r.error(at, format!("unknown approach tag {t}"))),
    };
    let at = r.pos;
    let tag = r.u8("system tag")?;
    let system = System::from_tag(tag).ok_or_else(|| r.error(at, format!("unknown system tag {tag}")))?;
    let nch = r.u16("channel count")? as usize;
    let mut normalization = Vec::with_capacity(nch);
    for _ in 0..nch {
        normalization.push((r.f64("channel mean")?, r.f64("channel scale")?));
    }
    let nlayers = r.u32("layer count")? as usize;
    let mut layers = Vec::new();
    for i in 0..nlayers {
        let at = r.pos;
        let kind = r.u8("layer kind")?;
        let layer = match kind {
            0 | 1 => {
                let in_ch = r.u32("in_ch")? as usize;
                let out_ch = r.u32("out_ch")? as usize;
                let nk = if kind == 0 { 1 } else { 2 };
                let mut kernel = Vec::with_capacity(nk);
                for _ in 0..nk {
                    kernel.push(r.u32("kernel size")? as usize);
                }
                let nw = kernel
                    .iter()
                    .try_fold(out_ch.saturating_mul(in_ch), |a, &k| a.checked_mul(k))
                    .ok_or_else(|| r.error(at, format!("layer {i} is too large")))?;
                let weights = r.f64s(nw, "conv weights")?;
                let bias = r.f64s(out_ch, "conv bias")?;
                let conv = Conv {
                    in_ch,
                    out_ch,
                    kernel,
                    weights,
                    bias,
                };
                if kind == 0 {
                    Layer::Conv1D(conv)
                } else {
                    Layer::Conv2D(conv)
                }
            }
            2 => Layer::Gelu,
            3 => Layer::Softplus,
            k => return Err(r.error(at, format!("layer {i} has unknown kind {k}"))),
        };
        layers.push(layer);
    }
    let body_end = bytes.len().saturating_sub(4);
    if r.pos != body_end {
        if r.pos > body_end {
            return Err(r.error(r.pos, "truncated: missing checksum"));
        }
        return Err(r.error(r.pos, format!("{} unexpected trailing bytes", body_end - r.pos)));
    }
    check_crc(bytes)?;
    let bundle = WeightBundle {
        approach,
        system,
        normalization,
        layers,
    };
    bundle.validate().map_err(|e| Error::Format {
        offset: 0,
        msg: format!("invalid network: {e}"),
    })?;
    Ok(bundle)
}

pub fn save_weights(bundle: &WeightBundle, path: &Path) -> Result<()> {
    bundle.validate()?;
    std::fs::write(path, encode(bundle))?;
    Ok(())
}

pub fn load_weights(path: &Path) -> Result<WeightBundle> {
    decode(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conv1(in_ch: usize, out_ch: usize, k: usize, weights: Vec<f64>, bias: Vec<f64>) -> Conv {
        Conv {
            in_ch,
            out_ch,
            kernel: vec![k],
            weights,
            bias,
        }
    }

    #[test]
    fn periodic_box_filter() {
        let x = Tensor::new(vec![1, 1, 3], vec![3.0, 6.0, 9.0]).unwrap();
        let c = conv1(1, 1, 3, vec![1.0 / 3.0; 3], vec![0.0]);
        let y = c.apply(&x, Padding::Periodic).unwrap();
        for v in y.values {
            assert!((v - 6.0).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_and_bias_kernels() {
        let x = Tensor::new(vec![1, 1, 4], vec![1.0, -2.0, 3.5, 0.25]).unwrap();
        let id = conv1(1, 1, 3, vec![0.0, 1.0, 0.0], vec![0.0]);
        assert_eq!(id.apply(&x, Padding::Periodic).unwrap(), x);
        let b = conv1(1, 1, 3, vec![0.0; 3], vec![2.5]);
        assert_eq!(b.apply(&x, Padding::Reflect).unwrap().values, vec![2.5; 4]);
    }

    #[test]
    fn reflect_padding_mirrors_edges() {
        assert_eq!(pad_index(-1, 4, Padding::Reflect), 0);
        assert_eq!(pad_index(-2, 4, Padding::Reflect), 1);
        assert_eq!(pad_index(4, 4, Padding::Reflect), 3);
        assert_eq!(pad_index(-1, 4, Padding::Periodic), 3);
    }

    #[test]
    fn channel_mismatch_is_reported() {
        let x = Tensor::zeros(vec![2, 1, 3]);
        let c = conv1(1, 1, 1, vec![1.0], vec![0.0]);
        let err = c.apply(&x, Padding::Periodic).unwrap_err().to_string();
        assert!(err.contains("1 input channels, got 2"), "{err}");
    }

    #[test]
    fn activations() {
        assert_eq!(gelu(0.0), 0.0);
        assert!((gelu(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-16);
        for x in [-100.0, 0.0, 100.0, -800.0, 800.0] {
            let s = softplus(x);
            assert!(s.is_finite() && s >= 0.0);
        }
        assert!(softplus(-100.0) > 0.0);
        assert_eq!(softplus(100.0), 100.0);
    }

    fn tiny_slope_bundle() -> WeightBundle {
        WeightBundle {
            approach: Approach::SlopeCoefficients,
            system: System::Swe1D,
            normalization: vec![(0.5, 2.0), (0.0, 1.0)],
            layers: vec![
                Layer::Conv1D(conv1(2, 3, 3, (0..18).map(|v| v as f64 * 0.1).collect(), vec![0.0, 1.0, 2.0])),
                Layer::Gelu,
                Layer::Conv1D(conv1(3, 6, 1, vec![0.5; 18], vec![0.0; 6])),
            ],
        }
    }

    #[test]
    fn bundle_round_trip_is_bit_exact() {
        let b = tiny_slope_bundle();
        b.validate().unwrap();
        let bytes = encode(&b);
        assert_eq!(decode(&bytes).unwrap(), b);
        assert_eq!(encode(&decode(&bytes).unwrap()), bytes);
    }

    #[test]
    fn bad_files_are_rejected() {
        let bytes = encode(&tiny_slope_bundle());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode(&bad).unwrap_err().to_string().contains("not a weight bundle"));

        let truncated = &bytes[..40];
        let err = decode(truncated).unwrap_err().to_string();
        assert!(err.contains("truncated"), "{err}");

        let mut flipped = bytes.clone();
        flipped[30] ^= 1;
        assert!(decode(&flipped).is_err());
    }

    #[test]
    fn softplus_placement_is_validated() {
        let mut b = tiny_slope_bundle();
        b.layers.push(Layer::Softplus);
        assert!(b.validate().is_err());
    }
}
