//! Contractive autoencoder for obstacle point clouds.
//!
//! The encoder maps a flattened 1400-point cloud to a short latent vector `Z`
//! that conditions the deep sampler. Training minimises the mean squared
//! reconstruction error plus `λ` times the squared encoder weights.

use log::info;
use rand::seq::SliceRandom;

use crate::error::{check_dim, Error, Result};
use crate::geometry::{PointCloud, CLOUD_SIZE, REGION_HALF_EXTENT};
use crate::neural::{
    mean_sq_error, AdagradState, LayerSpec, Matrix, Mlp, Mode, TrainConfig, ADAGRAD_EPSILON,
};
use crate::rng::rng_from_seed;

pub const DEFAULT_LAMBDA: f64 = 1e-3;

/// Layer sizes of the autoencoder for one workspace dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct CaeSpec {
    pub dim: usize,
    pub input_size: usize,
    pub encoder_hidden: Vec<usize>,
    pub latent_size: usize,
    pub lambda: f64,
}

impl CaeSpec {
    pub fn for_dim(dim: usize) -> Result<Self> {
        let (encoder_hidden, latent_size) = match dim {
            2 => (vec![512, 256, 128], 28),
            3 => (vec![786, 512, 256], 60),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "autoencoder supports 2D and 3D clouds, got {dim}D"
                )))
            }
        };
        Ok(CaeSpec {
            dim,
            input_size: CLOUD_SIZE * dim,
            encoder_hidden,
            latent_size,
            lambda: DEFAULT_LAMBDA,
        })
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
        }
        self.lambda = lambda;
        Ok(self)
    }

    fn encoder_layers(&self) -> Vec<LayerSpec> {
        let mut widths = vec![self.input_size];
        widths.extend(&self.encoder_hidden);
        widths.push(self.latent_size);
        stack(&widths)
    }

    fn decoder_layers(&self) -> Vec<LayerSpec> {
        let mut widths = vec![self.latent_size];
        widths.extend(self.encoder_hidden.iter().rev());
        widths.push(self.input_size);
        stack(&widths)
    }

    /// Fresh encoder/decoder pair.
    pub fn build(&self, seed: u64) -> Result<(Mlp, Mlp)> {
        let mut rng = rng_from_seed(seed);
        let mut enc = Mlp::new(&self.encoder_layers(), 0.0, &mut rng)?;
        let mut dec = Mlp::new(&self.decoder_layers(), 0.0, &mut rng)?;
        enc.set_coord_scale(REGION_HALF_EXTENT);
        dec.set_coord_scale(REGION_HALF_EXTENT);
        Ok((enc, dec))
    }
}

/// PReLU on every hidden layer, plain linear output, no dropout.
fn stack(widths: &[usize]) -> Vec<LayerSpec> {
    let last = widths.len() - 2;
    widths
        .windows(2)
        .enumerate()
        .map(|(i, w)| LayerSpec {
            inputs: w[0],
            outputs: w[1],
            prelu: i < last,
            dropout: false,
        })
        .collect()
}

/// Stacks clouds into an encoder input matrix, one normalised cloud per row.
pub fn cloud_matrix(clouds: &[&PointCloud], scale: f64) -> Result<Matrix> {
    let cols = clouds.first().map(|c| c.points.len()).unwrap_or(0);
    let mut data = Vec::with_capacity(cols * clouds.len());
    for c in clouds {
        check_dim(cols, c.points.len())?;
        data.extend(c.points.iter().map(|&v| v as f64 / scale));
    }
    Matrix::from_vec(clouds.len(), cols, data)
}

/// Latent embedding of one cloud. Always deterministic: the encoder has no
/// dropout and runs in eval-deterministic mode.
pub fn encode(enc: &Mlp, pc: &PointCloud) -> Result<Vec<f64>> {
    check_dim(enc.input_size(), pc.points.len())?;
    let x = pc.to_input(enc.coord_scale());
    let enc = enc.clone().with_mode(Mode::EvalDeterministic);
    enc.forward(&x, &mut rng_from_seed(0))
}

/// Autoencoder objective on a batch of normalised clouds.
pub fn cae_loss_matrix(enc: &Mlp, dec: &Mlp, batch: &Matrix, lambda: f64) -> Result<f64> {
    if batch.rows == 0 {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let mut rng = rng_from_seed(0);
    let z = enc.forward_batch(batch, &mut rng)?;
    let recon = dec.forward_batch(&z, &mut rng)?;
    let (mse, _) = mean_sq_error(&recon, batch)?;
    Ok(mse + lambda * enc.weight_sq_sum())
}

/// `(1/N) Σ ‖x − g(f(x))‖² + λ Σ (encoder weights)²` over a batch of clouds.
pub fn cae_loss(enc: &Mlp, dec: &Mlp, clouds: &[&PointCloud], lambda: f64) -> Result<f64> {
    if clouds.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let batch = cloud_matrix(clouds, enc.coord_scale())?;
    cae_loss_matrix(enc, dec, &batch, lambda)
}

/// Loss and gradients for both networks.
pub fn cae_loss_and_grads(
    enc: &Mlp,
    dec: &Mlp,
    batch: &Matrix,
    lambda: f64,
) -> Result<(f64, crate::neural::Gradients, crate::neural::Gradients)> {
    let mut rng = rng_from_seed(0);
    let (z, enc_cache) = enc.forward_cached(batch, &mut rng)?;
    let (recon, dec_cache) = dec.forward_cached(&z, &mut rng)?;
    let (mse, g_recon) = mean_sq_error(&recon, batch)?;
    let dec_grads = dec.backward(&dec_cache, &g_recon)?;
    let mut enc_grads = enc.backward(&enc_cache, &dec_grads.input)?;
    for (g, l) in enc_grads.layers.iter_mut().zip(enc.layers()) {
        for (gw, w) in g.weights.iter_mut().zip(&l.weights) {
            *gw += 2.0 * lambda * w;
        }
    }
    Ok((mse + lambda * enc.weight_sq_sum(), enc_grads, dec_grads))
}

#[derive(Clone, Debug)]
pub struct CaeTraining {
    pub encoder: Mlp,
    pub decoder: Mlp,
    /// Mean mini-batch loss per epoch.
    pub loss_curve: Vec<f64>,
}

/// Trains an autoencoder with Adagrad on the given clouds.
pub fn train_cae(spec: &CaeSpec, clouds: &[PointCloud], cfg: &TrainConfig) -> Result<CaeTraining> {
    if clouds.len() < 2 {
        return Err(Error::InvalidArgument(
            "autoencoder training needs at least two clouds".into(),
        ));
    }
    if cfg.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    for c in clouds {
        check_dim(spec.input_size, c.points.len())?;
    }
    info!(
        "train-cae: dim={} clouds={} lambda={:e} lr={} epochs={} batch={} seed={}",
        spec.dim,
        clouds.len(),
        spec.lambda,
        cfg.learning_rate,
        cfg.epochs,
        cfg.batch_size,
        cfg.seed
    );
    let (mut enc, mut dec) = spec.build(cfg.seed)?;
    enc.set_mode(Mode::Train);
    dec.set_mode(Mode::Train);
    let refs: Vec<&PointCloud> = clouds.iter().collect();
    let data = cloud_matrix(&refs, enc.coord_scale())?;
    let mut enc_opt = AdagradState::new(&enc, cfg.learning_rate, ADAGRAD_EPSILON);
    let mut dec_opt = AdagradState::new(&dec, cfg.learning_rate, ADAGRAD_EPSILON);
    let mut rng = rng_from_seed(cfg.seed ^ 0x5eed_cae0);
    let mut order: Vec<usize> = (0..clouds.len()).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = data.select_rows(chunk);
            let (loss, ge, gd) = cae_loss_and_grads(&enc, &dec, &batch, spec.lambda)?;
            if !loss.is_finite() {
                return Err(Error::Generation(format!("autoencoder loss diverged at epoch {epoch}")));
            }
            enc_opt.step(&mut enc, &ge)?;
            dec_opt.step(&mut dec, &gd)?;
            total += loss;
            batches += 1;
        }
        let mean = total / batches as f64;
        curve.push(mean);
        log::debug!("train-cae epoch {epoch}: loss {mean:.6}");
        if cfg.early_stop.is_some_and(|r| r.should_stop(&curve)) {
            info!("train-cae: early stop after epoch {epoch}");
            break;
        }
    }
    enc.round_to_f32();
    dec.round_to_f32();
    enc.set_mode(Mode::EvalDeterministic);
    dec.set_mode(Mode::EvalDeterministic);
    Ok(CaeTraining {
        encoder: enc,
        decoder: dec,
        loss_curve: curve,
    })
}

/// Per-feature mean squared reconstruction error on normalised clouds.
pub fn reconstruction_mse(enc: &Mlp, dec: &Mlp, clouds: &[&PointCloud]) -> Result<f64> {
    let batch = cloud_matrix(clouds, enc.coord_scale())?;
    let mut rng = rng_from_seed(0);
    let z = enc.forward_batch(&batch, &mut rng)?;
    let recon = dec.forward_batch(&z, &mut rng)?;
    let (mse, _) = mean_sq_error(&recon, &batch)?;
    Ok(mse / batch.cols as f64)
}

/// Mean per-feature variance of normalised clouds: the error of the best
/// constant predictor.
pub fn cloud_variance(clouds: &[&PointCloud], scale: f64) -> Result<f64> {
    let m = cloud_matrix(clouds, scale)?;
    if m.rows == 0 {
        return Err(Error::InvalidArgument("no clouds".into()));
    }
    let n = m.rows as f64;
    let mut total = 0.0;
    for c in 0..m.cols {
        let mean = (0..m.rows).map(|r| m.data[r * m.cols + c]).sum::<f64>() / n;
        total += (0..m.rows)
            .map(|r| (m.data[r * m.cols + c] - mean).powi(2))
            .sum::<f64>()
            / n;
    }
    Ok(total / m.cols as f64)
}
