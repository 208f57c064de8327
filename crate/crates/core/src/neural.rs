//! Minimal dense network engine.
//!
//! A model is a stack of affine layers, each optionally followed by a PReLU
//! (one shared slope per layer) and inverted dropout. Training runs in `f64`;
//! parameters are kept on the `f32` grid after initialisation and after every
//! training run so that the 32-bit model files round-trip exactly.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_dim(rows * cols, data.len())?;
        Ok(Matrix { rows, cols, data })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Gathers the given rows into a new matrix.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }
}

/// `c = alpha * op(a) * op(b) + beta * c` with explicit strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: isize,
    csa: isize,
    b: &[f64],
    rsb: isize,
    csb: isize,
    beta: f64,
    c: &mut [f64],
) {
    if m == 0 || n == 0 {
        return;
    }
    debug_assert!(c.len() >= m * n);
    // SAFETY: callers pass slices that cover the strided extents described by
    // (m, k, n) and the strides; `c` is row-major m x n and not aliased.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Dropout active, caches kept for backprop.
    Train,
    /// Dropout active at inference; each forward draws fresh masks.
    EvalStochastic,
    /// No dropout, no randomness consumed.
    EvalDeterministic,
}

/// Shape and non-linearity plan of one layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerSpec {
    pub inputs: usize,
    pub outputs: usize,
    pub prelu: bool,
    pub dropout: bool,
}

pub const PRELU_INIT: f64 = 0.25;

/// Weight initialisation scheme.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightInit {
    /// Weights and biases uniform in `±1/sqrt(fan_in)`.
    #[default]
    FanIn,
    /// Uniform weights whose variance keeps the training-mode activation
    /// scale constant through PReLU and inverted dropout; zero biases.
    VariancePreserving,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    /// `outputs x inputs`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub prelu: Option<f64>,
    pub dropout: bool,
}

impl DenseLayer {
    pub fn spec(&self) -> LayerSpec {
        LayerSpec {
            inputs: self.inputs,
            outputs: self.outputs,
            prelu: self.prelu.is_some(),
            dropout: self.dropout,
        }
    }
}

/// Feed-forward network.
#[derive(Clone, Debug)]
pub struct Mlp {
    layers: Vec<DenseLayer>,
    dropout_rate: f64,
    mode: Mode,
    /// Coordinates are divided by this before entering the network.
    coord_scale: f64,
    /// When set, input columns `[k, k + outputs)` are added to the output.
    input_skip: Option<usize>,
    /// Bumped on every parameter update; ties caches to a parameter state.
    generation: u64,
}

impl PartialEq for Mlp {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
            && self.dropout_rate == other.dropout_rate
            && self.coord_scale == other.coord_scale
            && self.input_skip == other.input_skip
    }
}

fn round_f32(v: f64) -> f64 {
    v as f32 as f64
}

impl Mlp {
    /// Builds a model with weights and biases uniform in `±1/sqrt(fan_in)`
    /// and PReLU slopes at 0.25.
    pub fn new(specs: &[LayerSpec], dropout_rate: f64, rng: &mut impl Rng) -> Result<Self> {
        Self::with_init(specs, dropout_rate, WeightInit::FanIn, rng)
    }

    pub fn with_init(specs: &[LayerSpec], dropout_rate: f64, init: WeightInit, rng: &mut impl Rng) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::InvalidArgument("model needs at least one layer".into()));
        }
        for w in specs.windows(2) {
            check_dim(w[0].outputs, w[1].inputs)?;
        }
        let layers = specs
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let fan_in = s.inputs as f64;
                let (bound, bias_bound) = match init {
                    WeightInit::FanIn => (1.0 / fan_in.sqrt(), 1.0 / fan_in.sqrt()),
                    WeightInit::VariancePreserving => {
                        let mut gain = 1.0;
                        if i > 0 && specs[i - 1].prelu {
                            gain *= 2.0 / (1.0 + PRELU_INIT * PRELU_INIT);
                        }
                        if i > 0 && specs[i - 1].dropout {
                            gain *= 1.0 - dropout_rate;
                        }
                        ((3.0 * gain / fan_in).sqrt(), 0.0)
                    }
                };
                let mut draw = |b: f64| if b > 0.0 { round_f32(rng.gen_range(-b..b)) } else { 0.0 };
                let weights = (0..s.inputs * s.outputs).map(|_| draw(bound)).collect();
                let bias = (0..s.outputs).map(|_| draw(bias_bound)).collect();
                DenseLayer {
                    inputs: s.inputs,
                    outputs: s.outputs,
                    weights,
                    bias,
                    prelu: s.prelu.then_some(PRELU_INIT),
                    dropout: s.dropout,
                }
            })
            .collect();
        Mlp::from_layers(layers, dropout_rate, 1.0)
    }

    pub fn from_layers(layers: Vec<DenseLayer>, dropout_rate: f64, coord_scale: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&dropout_rate) {
            return Err(Error::InvalidArgument(format!(
                "dropout rate {dropout_rate} outside [0, 1]"
            )));
        }
        if layers.is_empty() {
            return Err(Error::InvalidArgument("model needs at least one layer".into()));
        }
        for l in &layers {
            check_dim(l.inputs * l.outputs, l.weights.len())?;
            check_dim(l.outputs, l.bias.len())?;
            if let Some(a) = l.prelu {
                if !a.is_finite() {
                    return Err(Error::InvalidArgument("PReLU slope must be finite".into()));
                }
            }
        }
        for w in layers.windows(2) {
            check_dim(w[0].outputs, w[1].inputs)?;
        }
        Ok(Mlp {
            layers,
            dropout_rate,
            mode: Mode::EvalDeterministic,
            coord_scale,
            input_skip: None,
            generation: 0,
        })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        self.generation += 1;
        &mut self.layers
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_size(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn dropout_rate(&self) -> f64 {
        self.dropout_rate
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn coord_scale(&self) -> f64 {
        self.coord_scale
    }

    pub fn set_coord_scale(&mut self, scale: f64) {
        self.coord_scale = scale;
    }

    pub fn input_skip(&self) -> Option<usize> {
        self.input_skip
    }

    /// Adds input columns `[k, k + outputs)` to the output, so the layers
    /// learn a correction to that slice of the input.
    pub fn set_input_skip(&mut self, skip: Option<usize>) -> Result<()> {
        if let Some(k) = skip {
            if k + self.output_size() > self.input_size() {
                return Err(Error::InvalidArgument(format!(
                    "skip columns {k}..{} exceed input width {}",
                    k + self.output_size(),
                    self.input_size()
                )));
            }
        }
        self.input_skip = skip;
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len() + usize::from(l.prelu.is_some()))
            .sum()
    }

    /// Snaps every parameter to the nearest `f32`.
    pub fn round_to_f32(&mut self) {
        for l in self.layers_mut() {
            l.weights.iter_mut().for_each(|w| *w = round_f32(*w));
            l.bias.iter_mut().for_each(|b| *b = round_f32(*b));
            if let Some(a) = l.prelu.as_mut() {
                *a = round_f32(*a);
            }
        }
    }

    /// Sum of squared weight-matrix entries (biases and slopes excluded).
    pub fn weight_sq_sum(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter())
            .map(|w| w * w)
            .sum()
    }

    fn dropout_active(&self) -> bool {
        self.mode != Mode::EvalDeterministic && self.dropout_rate > 0.0
    }

    /// Forward pass of a single input vector in the model's current mode.
    pub fn forward(&self, x: &[f64], rng: &mut impl Rng) -> Result<Vec<f64>> {
        let m = Matrix::from_vec(1, x.len(), x.to_vec())?;
        Ok(self.forward_batch(&m, rng)?.data)
    }

    /// Forward pass of a batch (one sample per row) without caching.
    pub fn forward_batch(&self, x: &Matrix, rng: &mut impl Rng) -> Result<Matrix> {
        let masks = MaskSource::Draw(rng);
        self.run(x, masks, false).map(|(y, _)| y)
    }

    /// Forward pass that keeps what backprop needs.
    pub fn forward_cached(&self, x: &Matrix, rng: &mut impl Rng) -> Result<(Matrix, ForwardCache)> {
        let (y, cache) = self.run(x, MaskSource::Draw(rng), true)?;
        Ok((y, cache.expect("cache requested")))
    }

    /// Forward pass reusing the dropout masks of an earlier cached pass.
    pub fn forward_with_masks(&self, x: &Matrix, masks: &[Option<Vec<f64>>]) -> Result<(Matrix, ForwardCache)> {
        check_dim(self.layers.len(), masks.len())?;
        let (y, cache) = self.run(x, MaskSource::<crate::rng::PlanRng>::Fixed(masks), true)?;
        Ok((y, cache.expect("cache requested")))
    }

    fn run<R: Rng>(&self, x: &Matrix, mut masks: MaskSource<'_, R>, keep: bool) -> Result<(Matrix, Option<ForwardCache>)> {
        check_dim(self.input_size(), x.cols)?;
        let batch = x.rows;
        let keep_rate = 1.0 - self.dropout_rate;
        let mut cache = keep.then(|| ForwardCache {
            generation: self.generation,
            inputs: Vec::with_capacity(self.layers.len()),
            pre_activations: Vec::with_capacity(self.layers.len()),
            masks: Vec::with_capacity(self.layers.len()),
        });
        let mut cur = x.clone();
        for (li, layer) in self.layers.iter().enumerate() {
            let mut z = Matrix::zeros(batch, layer.outputs);
            for r in 0..batch {
                z.row_mut(r).copy_from_slice(&layer.bias);
            }
            gemm(
                batch,
                layer.inputs,
                layer.outputs,
                &cur.data,
                layer.inputs as isize,
                1,
                &layer.weights,
                1,
                layer.inputs as isize,
                1.0,
                &mut z.data,
            );
            let mut y = z.clone();
            if let Some(a) = layer.prelu {
                y.data.iter_mut().for_each(|v| {
                    if *v <= 0.0 {
                        *v *= a
                    }
                });
            }
            let mask = if layer.dropout {
                match &mut masks {
                    MaskSource::Fixed(m) => m[li].clone(),
                    MaskSource::Draw(rng) if self.dropout_active() => {
                        let scale = if keep_rate > 0.0 { 1.0 / keep_rate } else { 0.0 };
                        Some(
                            (0..y.data.len())
                                .map(|_| if rng.gen::<f64>() < keep_rate { scale } else { 0.0 })
                                .collect(),
                        )
                    }
                    MaskSource::Draw(_) => None,
                }
            } else {
                None
            };
            if let Some(m) = &mask {
                check_dim(y.data.len(), m.len())?;
                y.data.iter_mut().zip(m).for_each(|(v, s)| *v *= s);
            }
            if let Some(c) = cache.as_mut() {
                c.inputs.push(std::mem::replace(&mut cur, y));
                c.pre_activations.push(z);
                c.masks.push(mask);
            } else {
                cur = y;
            }
        }
        if let Some(k) = self.input_skip {
            let w = cur.cols;
            for r in 0..batch {
                let src = &x.row(r)[k..k + w];
                cur.row_mut(r).iter_mut().zip(src).for_each(|(v, s)| *v += s);
            }
        }
        Ok((cur, cache))
    }

    /// Backpropagates `grad_out` (d loss / d output) through a cached pass.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &Matrix) -> Result<Gradients> {
        if cache.generation != self.generation || cache.inputs.len() != self.layers.len() {
            return Err(Error::StaleCache);
        }
        check_dim(self.output_size(), grad_out.cols)?;
        let batch = grad_out.rows;
        check_dim(cache.inputs[0].rows, batch)?;
        let mut layer_grads: Vec<LayerGrad> = Vec::with_capacity(self.layers.len());
        let mut g = grad_out.clone();
        for (li, layer) in self.layers.iter().enumerate().rev() {
            if let Some(m) = &cache.masks[li] {
                g.data.iter_mut().zip(m).for_each(|(v, s)| *v *= s);
            }
            let mut slope_grad = 0.0;
            if let Some(a) = layer.prelu {
                let z = &cache.pre_activations[li];
                for (gv, zv) in g.data.iter_mut().zip(&z.data) {
                    if *zv <= 0.0 {
                        slope_grad += *gv * zv;
                        *gv *= a;
                    }
                }
            }
            let input = &cache.inputs[li];
            let mut gw = vec![0.0; layer.outputs * layer.inputs];
            // dW = g^T X
            gemm(
                layer.outputs,
                batch,
                layer.inputs,
                &g.data,
                1,
                layer.outputs as isize,
                &input.data,
                layer.inputs as isize,
                1,
                0.0,
                &mut gw,
            );
            let mut gb = vec![0.0; layer.outputs];
            for r in 0..batch {
                gb.iter_mut().zip(g.row(r)).for_each(|(b, v)| *b += v);
            }
            // dX = g W
            let mut gx = Matrix::zeros(batch, layer.inputs);
            gemm(
                batch,
                layer.outputs,
                layer.inputs,
                &g.data,
                layer.outputs as isize,
                1,
                &layer.weights,
                layer.inputs as isize,
                1,
                0.0,
                &mut gx.data,
            );
            layer_grads.push(LayerGrad {
                weights: gw,
                bias: gb,
                slope: slope_grad,
            });
            g = gx;
        }
        layer_grads.reverse();
        if let Some(k) = self.input_skip {
            for r in 0..batch {
                let src = grad_out.row(r);
                g.row_mut(r)[k..k + src.len()].iter_mut().zip(src).for_each(|(v, s)| *v += s);
            }
        }
        Ok(Gradients {
            layers: layer_grads,
            input: g,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Mlp::from_bytes(&bytes)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(28 + 4 * self.parameter_count() + 16 * self.layers.len());
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.layers.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.dropout_rate as f32).to_le_bytes());
        out.extend_from_slice(&(self.coord_scale as f32).to_le_bytes());
        out.extend_from_slice(&self.input_skip.map_or(u32::MAX, |k| k as u32).to_le_bytes());
        for l in &self.layers {
            out.extend_from_slice(&(l.inputs as u32).to_le_bytes());
            out.extend_from_slice(&(l.outputs as u32).to_le_bytes());
            let flags = u8::from(l.prelu.is_some()) | (u8::from(l.dropout) << 1);
            out.push(flags);
            for w in l.weights.iter().chain(&l.bias) {
                out.extend_from_slice(&(*w as f32).to_le_bytes());
            }
            out.extend_from_slice(&(l.prelu.unwrap_or(0.0) as f32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MODEL_MAGIC {
            return Err(Error::Format("not a model file (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != MODEL_VERSION {
            return Err(Error::Version {
                found: version,
                expected: MODEL_VERSION,
            });
        }
        let count = r.u32()? as usize;
        let dropout_rate = r.f32()? as f64;
        let coord_scale = r.f32()? as f64;
        let skip = r.u32()?;
        let mut layers = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            let inputs = r.u32()? as usize;
            let outputs = r.u32()? as usize;
            let flags = r.take(1)?[0];
            if flags & !3 != 0 {
                return Err(Error::Format(format!("unknown layer flags {flags:#x}")));
            }
            let n = inputs
                .checked_mul(outputs)
                .ok_or_else(|| Error::Format("layer size overflow".into()))?;
            let weights = r.f32_vec(n)?;
            let bias = r.f32_vec(outputs)?;
            let slope = r.f32()? as f64;
            layers.push(DenseLayer {
                inputs,
                outputs,
                weights,
                bias,
                prelu: (flags & 1 != 0).then_some(slope),
                dropout: flags & 2 != 0,
            });
        }
        if r.pos != bytes.len() {
            return Err(Error::Format("trailing bytes after last layer".into()));
        }
        let mut m = Mlp::from_layers(layers, dropout_rate, coord_scale)
            .map_err(|e| Error::Format(format!("inconsistent model: {e}")))?;
        m.set_input_skip((skip != u32::MAX).then_some(skip as usize))
            .map_err(|e| Error::Format(format!("inconsistent model: {e}")))?;
        Ok(m)
    }
}

pub const MODEL_MAGIC: &[u8; 4] = b"NPNN";
pub const MODEL_VERSION: u32 = 2;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format("model file truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32_vec(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(4).ok_or_else(|| Error::Format("size overflow".into()))?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect())
    }
}

enum MaskSource<'a, R> {
    Draw(&'a mut R),
    Fixed(&'a [Option<Vec<f64>>]),
}

/// Activations retained by a cached forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    generation: u64,
    inputs: Vec<Matrix>,
    pre_activations: Vec<Matrix>,
    masks: Vec<Option<Vec<f64>>>,
}

impl ForwardCache {
    /// Dropout masks per layer (`None` where dropout was off).
    pub fn masks(&self) -> &[Option<Vec<f64>>] {
        &self.masks
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub slope: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
    /// Gradient with respect to the network input.
    pub input: Matrix,
}

impl Gradients {
    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).chain(std::iter::once(&l.slope)))
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Mean over rows of the squared Euclidean error, with its gradient.
///
/// Returns `(1/B) Σ_r ‖pred_r − target_r‖²` and `2 (pred − target) / B`.
pub fn mean_sq_error(pred: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    check_dim(pred.rows, target.rows)?;
    check_dim(pred.cols, target.cols)?;
    if pred.rows == 0 {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let inv = 1.0 / pred.rows as f64;
    let mut grad = Matrix::zeros(pred.rows, pred.cols);
    let mut loss = 0.0;
    for ((g, p), t) in grad.data.iter_mut().zip(&pred.data).zip(&target.data) {
        let d = p - t;
        loss += d * d;
        *g = 2.0 * d * inv;
    }
    Ok((loss * inv, grad))
}

/// Per-parameter Adagrad accumulators.
#[derive(Clone, Debug, PartialEq)]
pub struct AdagradState {
    pub learning_rate: f64,
    pub epsilon: f64,
    accum: Vec<LayerGrad>,
}

pub const ADAGRAD_EPSILON: f64 = 1e-10;

impl AdagradState {
    pub fn new(model: &Mlp, learning_rate: f64, epsilon: f64) -> Self {
        let accum = model
            .layers
            .iter()
            .map(|l| LayerGrad {
                weights: vec![0.0; l.weights.len()],
                bias: vec![0.0; l.bias.len()],
                slope: 0.0,
            })
            .collect();
        AdagradState {
            learning_rate,
            epsilon,
            accum,
        }
    }

    /// Accumulated squared gradients, shaped like the model parameters.
    pub fn accumulators(&self) -> &[LayerGrad] {
        &self.accum
    }

    /// `acc += g²; p -= lr · g / (√acc + ε)` for every parameter.
    pub fn step(&mut self, model: &mut Mlp, grads: &Gradients) -> Result<()> {
        check_dim(model.layers.len(), grads.layers.len())?;
        check_dim(model.layers.len(), self.accum.len())?;
        for ((l, g), a) in model.layers.iter().zip(&grads.layers).zip(&self.accum) {
            check_dim(l.weights.len(), g.weights.len())?;
            check_dim(l.bias.len(), g.bias.len())?;
            check_dim(l.weights.len(), a.weights.len())?;
        }
        let (lr, eps) = (self.learning_rate, self.epsilon);
        let update = |p: &mut f64, g: f64, acc: &mut f64| {
            *acc += g * g;
            *p -= lr * g / (acc.sqrt() + eps);
        };
        for ((l, g), a) in model.layers_mut().iter_mut().zip(&grads.layers).zip(&mut self.accum) {
            for ((p, gv), av) in l.weights.iter_mut().zip(&g.weights).zip(&mut a.weights) {
                update(p, *gv, av);
            }
            for ((p, gv), av) in l.bias.iter_mut().zip(&g.bias).zip(&mut a.bias) {
                update(p, *gv, av);
            }
            if let Some(s) = l.prelu.as_mut() {
                update(s, g.slope, &mut a.slope);
            }
        }
        Ok(())
    }
}

/// Early-stop rule: stop once the best loss of the last `patience` epochs
/// failed to improve on the earlier best by the relative margin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EarlyStop {
    pub patience: usize,
    pub min_rel_improvement: f64,
}

impl Default for EarlyStop {
    fn default() -> Self {
        EarlyStop {
            patience: 20,
            min_rel_improvement: 1e-3,
        }
    }
}

impl EarlyStop {
    pub fn should_stop(&self, curve: &[f64]) -> bool {
        if self.patience == 0 || curve.len() <= self.patience {
            return false;
        }
        let split = curve.len() - self.patience;
        let before = curve[..split].iter().cloned().fold(f64::INFINITY, f64::min);
        let recent = curve[split..].iter().cloned().fold(f64::INFINITY, f64::min);
        recent > before * (1.0 - self.min_rel_improvement)
    }
}

/// Mini-batch schedule shared by the trainers.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub early_stop: Option<EarlyStop>,
}
