//! Stochastic deep sampler.
//!
//! A twelve-layer network maps `(Z, x_t, x_goal)` to a proposed next
//! configuration. Hidden layers are linear → PReLU → dropout, except the last
//! hidden layer, which has no dropout. Dropout stays on at inference, so each
//! call samples a different thinned network and repeated calls scatter around
//! the learned next state.

use std::collections::HashMap;

use log::{info, warn};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{Config, REGION_HALF_EXTENT};
use crate::neural::{mean_sq_error, AdagradState, LayerSpec, Matrix, Mlp, Mode, TrainConfig, WeightInit, ADAGRAD_EPSILON};
use crate::rng::rng_from_seed;

/// Hidden widths, input side first.
pub const DEFAULT_HIDDEN: [usize; 11] = [1280, 1024, 896, 768, 512, 384, 256, 128, 64, 64, 32];

pub const HIDDEN_LAYERS: usize = 11;

pub const DEFAULT_DROPOUT: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub config_dim: usize,
    /// 0 when no workspace encoding is used.
    pub latent_size: usize,
    pub hidden: Vec<usize>,
    pub dropout: f64,
    #[serde(default)]
    pub init: WeightInit,
    /// Predict a step from `x_t` instead of the absolute next state.
    #[serde(default = "residual_default")]
    pub residual: bool,
    /// Half-width of the uniform noise added to the standardised encoding
    /// during training. 0 disables it.
    #[serde(default = "latent_noise_default")]
    pub latent_noise: f64,
}

pub const DEFAULT_LATENT_NOISE: f64 = 1.0;

fn residual_default() -> bool {
    true
}

fn latent_noise_default() -> f64 {
    DEFAULT_LATENT_NOISE
}

impl SamplerSpec {
    pub fn new(config_dim: usize, latent_size: usize) -> Self {
        SamplerSpec {
            config_dim,
            latent_size,
            hidden: DEFAULT_HIDDEN.to_vec(),
            dropout: DEFAULT_DROPOUT,
            init: WeightInit::FanIn,
            residual: true,
            latent_noise: DEFAULT_LATENT_NOISE,
        }
    }

    pub fn with_hidden(mut self, hidden: Vec<usize>) -> Result<Self> {
        if hidden.len() != HIDDEN_LAYERS || hidden.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "sampler needs {HIDDEN_LAYERS} non-empty hidden layers, got {hidden:?}"
            )));
        }
        self.hidden = hidden;
        Ok(self)
    }

    pub fn with_residual(mut self, residual: bool) -> Self {
        self.residual = residual;
        self
    }

    pub fn with_latent_noise(mut self, half_width: f64) -> Result<Self> {
        if !(half_width.is_finite() && half_width >= 0.0) {
            return Err(Error::InvalidArgument(format!("latent noise must be finite and >= 0, got {half_width}")));
        }
        self.latent_noise = half_width;
        Ok(self)
    }

    pub fn with_init(mut self, init: WeightInit) -> Self {
        self.init = init;
        self
    }

    pub fn input_size(&self) -> usize {
        self.latent_size + 2 * self.config_dim
    }

    pub fn layer_specs(&self) -> Vec<LayerSpec> {
        let mut widths = vec![self.input_size()];
        widths.extend(&self.hidden);
        widths.push(self.config_dim);
        let hidden = widths.len() - 2;
        widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| LayerSpec {
                inputs: w[0],
                outputs: w[1],
                prelu: i < hidden,
                // No dropout on the last hidden layer or the output layer.
                dropout: i + 1 < hidden,
            })
            .collect()
    }

    pub fn build(&self, seed: u64) -> Result<Mlp> {
        if self.config_dim == 0 {
            return Err(Error::InvalidArgument("config dimension must be positive".into()));
        }
        if self.hidden.len() != HIDDEN_LAYERS {
            return Err(Error::InvalidArgument(format!(
                "sampler needs {HIDDEN_LAYERS} hidden layers"
            )));
        }
        let mut m = Mlp::with_init(&self.layer_specs(), self.dropout, self.init, &mut rng_from_seed(seed))?;
        m.set_coord_scale(REGION_HALF_EXTENT);
        m.set_input_skip(self.residual.then_some(self.latent_size))?;
        m.set_mode(Mode::EvalStochastic);
        Ok(m)
    }

    /// Recovers the spec a model was built from.
    pub fn of_model(m: &Mlp) -> Result<Self> {
        let layers = m.layers();
        if layers.len() != HIDDEN_LAYERS + 1 {
            return Err(Error::Config(format!(
                "sampler model must have {} layers, found {}",
                HIDDEN_LAYERS + 1,
                layers.len()
            )));
        }
        let config_dim = m.output_size();
        let latent_size = m
            .input_size()
            .checked_sub(2 * config_dim)
            .ok_or_else(|| Error::Config("sampler input narrower than two configurations".into()))?;
        Ok(SamplerSpec {
            config_dim,
            latent_size,
            hidden: layers[..HIDDEN_LAYERS].iter().map(|l| l.outputs).collect(),
            dropout: m.dropout_rate(),
            init: WeightInit::FanIn,
            residual: m.input_skip() == Some(latent_size),
            latent_noise: DEFAULT_LATENT_NOISE,
        })
    }
}

/// Network input `[Z, x_t / s, x_goal / s]`.
pub fn sampler_input(latent: &[f64], current: &[f64], goal: &[f64], scale: f64) -> Vec<f64> {
    let mut v = Vec::with_capacity(latent.len() + current.len() + goal.len());
    v.extend_from_slice(latent);
    v.extend(current.iter().map(|x| x / scale));
    v.extend(goal.iter().map(|x| x / scale));
    v
}

/// Proposes the configuration after `current` on the way to `goal`.
///
/// Uses the model's mode: in eval-stochastic mode fresh dropout masks are
/// drawn from `rng` on every call. The result is clamped to the operating
/// region.
pub fn next_sample(m: &Mlp, latent: &[f64], current: &Config, goal: &Config, rng: &mut impl Rng) -> Result<Config> {
    let d = m.output_size();
    check_dim(d, current.dim())?;
    check_dim(d, goal.dim())?;
    check_dim(m.input_size(), latent.len() + 2 * d)?;
    let scale = m.coord_scale();
    let x = sampler_input(latent, current.as_slice(), goal.as_slice(), scale);
    let y = m.forward(&x, rng)?;
    Ok(Config(
        y.into_iter()
            .map(|v| (v * scale).clamp(-REGION_HALF_EXTENT, REGION_HALF_EXTENT))
            .collect(),
    ))
}

/// An expert demonstration in one workspace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingPath {
    pub workspace_seed: u64,
    pub path: Vec<Config>,
}

/// Normalised `(input, next state)` rows for sampler training.
#[derive(Clone, Debug, PartialEq)]
pub struct PairDataset {
    pub inputs: Matrix,
    pub targets: Matrix,
}

impl PairDataset {
    pub fn len(&self) -> usize {
        self.inputs.rows
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.rows == 0
    }
}

/// One row per consecutive transition of every path; the goal of each row is
/// the path's last configuration and its latent is the workspace encoding.
/// Paths shorter than two configurations are dropped with a warning.
pub fn make_training_pairs(
    paths: &[TrainingPath],
    latents: &HashMap<u64, Vec<f64>>,
    scale: f64,
) -> Result<PairDataset> {
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    let mut in_cols = None;
    let mut out_cols = None;
    for tp in paths {
        if tp.path.len() < 2 {
            warn!("dropping path of length {} in workspace {}", tp.path.len(), tp.workspace_seed);
            continue;
        }
        let z = latents.get(&tp.workspace_seed).ok_or_else(|| {
            Error::Config(format!("no encoding for workspace {}", tp.workspace_seed))
        })?;
        let goal = tp.path.last().unwrap();
        for w in tp.path.windows(2) {
            let row = sampler_input(z, w[0].as_slice(), goal.as_slice(), scale);
            let cols = *in_cols.get_or_insert(row.len());
            check_dim(cols, row.len())?;
            let oc = *out_cols.get_or_insert(w[1].dim());
            check_dim(oc, w[1].dim())?;
            inputs.extend(row);
            targets.extend(w[1].as_slice().iter().map(|x| x / scale));
        }
    }
    let (ic, oc) = (in_cols.unwrap_or(0), out_cols.unwrap_or(0));
    let rows = if ic == 0 { 0 } else { inputs.len() / ic };
    Ok(PairDataset {
        inputs: Matrix::from_vec(rows, ic, inputs)?,
        targets: Matrix::from_vec(rows, oc, targets)?,
    })
}

/// `(1/N_p) Σ ‖x̂_{t+1} − x_{t+1}‖²` over the batch, in the model's mode.
pub fn sampler_loss(m: &Mlp, inputs: &Matrix, targets: &Matrix, rng: &mut impl Rng) -> Result<f64> {
    if inputs.rows == 0 {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let pred = m.forward_batch(inputs, rng)?;
    Ok(mean_sq_error(&pred, targets)?.0)
}

/// Centres and scales the first `cols` input columns to unit variance.
/// Returns the new inputs and the per-column mean and scale.
fn standardize_latent(inputs: &Matrix, cols: usize) -> (Matrix, Vec<f64>, Vec<f64>) {
    let n = inputs.rows as f64;
    let mut out = inputs.clone();
    let mut shift = vec![0.0; cols];
    let mut scale = vec![1.0; cols];
    for c in 0..cols {
        let mean = (0..inputs.rows).map(|r| inputs.row(r)[c]).sum::<f64>() / n;
        let var = (0..inputs.rows).map(|r| (inputs.row(r)[c] - mean).powi(2)).sum::<f64>() / n;
        shift[c] = mean;
        if var.sqrt() > 1e-8 {
            scale[c] = var.sqrt();
        }
        for r in 0..inputs.rows {
            out.row_mut(r)[c] = (inputs.row(r)[c] - shift[c]) / scale[c];
        }
    }
    (out, shift, scale)
}

/// Rewrites the first layer so the model takes raw inputs again.
fn fold_latent_scaling(model: &mut Mlp, shift: &[f64], scale: &[f64]) {
    let first = &mut model.layers_mut()[0];
    let width = first.inputs;
    for o in 0..first.outputs {
        let row = &mut first.weights[o * width..(o + 1) * width];
        let mut offset = 0.0;
        for c in 0..shift.len() {
            row[c] /= scale[c];
            offset += row[c] * shift[c];
        }
        first.bias[o] -= offset;
    }
}

#[derive(Clone, Debug)]
pub struct SamplerTraining {
    pub model: Mlp,
    /// Mean mini-batch loss per epoch.
    pub loss_curve: Vec<f64>,
}

/// Adagrad training with dropout active. Latent columns are standardised
/// while training and the scaling is folded into the first layer afterwards,
/// so the returned model takes raw encodings. `spec.latent_noise` perturbs the
/// standardised encoding of every training row.
pub fn train_sampler(spec: &SamplerSpec, data: &PairDataset, cfg: &TrainConfig) -> Result<SamplerTraining> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("sampler dataset is empty".into()));
    }
    if cfg.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    check_dim(spec.input_size(), data.inputs.cols)?;
    check_dim(spec.config_dim, data.targets.cols)?;
    info!(
        "train-sampler: pairs={} hidden={:?} dropout={} latent_noise={} lr={} epochs={} batch={} seed={}",
        data.len(),
        spec.hidden,
        spec.dropout,
        spec.latent_noise,
        cfg.learning_rate,
        cfg.epochs,
        cfg.batch_size,
        cfg.seed
    );
    let (inputs, shift, scale) = standardize_latent(&data.inputs, spec.latent_size);
    let mut model = spec.build(cfg.seed)?;
    model.set_mode(Mode::Train);
    let mut opt = AdagradState::new(&model, cfg.learning_rate, ADAGRAD_EPSILON);
    let mut rng = rng_from_seed(cfg.seed ^ 0x5a3b_1e55);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let mut x = inputs.select_rows(chunk);
            let noise = spec.latent_noise;
            if noise > 0.0 {
                for r in 0..x.rows {
                    for v in &mut x.row_mut(r)[..spec.latent_size] {
                        *v += rng.gen_range(-noise..noise);
                    }
                }
            }
            let y = data.targets.select_rows(chunk);
            let (pred, cache) = model.forward_cached(&x, &mut rng)?;
            let (loss, g) = mean_sq_error(&pred, &y)?;
            if !loss.is_finite() {
                return Err(Error::Generation(format!("sampler loss diverged at epoch {epoch}")));
            }
            let grads = model.backward(&cache, &g)?;
            opt.step(&mut model, &grads)?;
            total += loss;
            batches += 1;
        }
        let mean = total / batches as f64;
        curve.push(mean);
        log::debug!("train-sampler epoch {epoch}: loss {mean:.6}");
        if cfg.early_stop.is_some_and(|r| r.should_stop(&curve)) {
            info!("train-sampler: early stop after epoch {epoch}");
            break;
        }
    }
    fold_latent_scaling(&mut model, &shift, &scale);
    model.round_to_f32();
    model.set_mode(Mode::EvalStochastic);
    Ok(SamplerTraining {
        model,
        loss_curve: curve,
    })
}
