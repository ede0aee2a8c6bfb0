//! Two-layer convolutional autoencoder over a precomputed propagation
//! operator.
//!
//! The encoder is `Z = P * ReLU(P * X * theta1) * theta2` for a symmetric
//! normalized operator `P` (graph or hypergraph variant, the code does not
//! care which). The decoder reconstructs the binary structure target `T`
//! as `sigmoid(Z Z^T)`, trained with binary cross-entropy over all `n^2`
//! vertex pairs:
//!
//! ```text
//! L = -(1/n^2) * sum_ij [ w * T_ij * ln s(z_i z_j^T)
//!                         + (1 - T_ij) * ln(1 - s(z_i z_j^T)) ]
//! ```
//!
//! `w` is an optional positive-class weight countering the extreme 0/1
//! imbalance of sparse structure targets. Loss and gradients are evaluated
//! with a fused row-at-a-time pass in log-space, so the full `n x n`
//! probability matrix is never materialized and `ln(0)` never occurs.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{
    gemm, gemm_tn, map_elementwise, spmm, Activation, DenseMatrix, SparseMatrix,
};

/// The two learned parameter matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    /// Input-to-hidden weights, `input_dim x hidden_dim`.
    pub theta1: DenseMatrix,
    /// Hidden-to-embedding weights, `hidden_dim x embed_dim`.
    pub theta2: DenseMatrix,
}

impl EncoderParams {
    /// Glorot-uniform initialization: entries drawn from
    /// `U(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out)))`, filled in
    /// row-major order, `theta1` first.
    pub fn glorot(input_dim: usize, hidden_dim: usize, embed_dim: usize, rng: &mut Rng) -> Self {
        EncoderParams {
            theta1: glorot_matrix(input_dim, hidden_dim, rng),
            theta2: glorot_matrix(hidden_dim, embed_dim, rng),
        }
    }
}

fn glorot_matrix(rows: usize, cols: usize, rng: &mut Rng) -> DenseMatrix {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let values = (0..rows * cols)
        .map(|_| rng.uniform(-limit, limit))
        .collect();
    DenseMatrix::from_raw(rows, cols, values)
}

/// Gradient-descent flavor for [`train`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    /// Fixed-step gradient descent.
    PlainGd,
    /// Adam with coefficients (0.9, 0.999) and epsilon 1e-8.
    AdaptiveMoments,
}

/// Positive-class weight policy for the reconstruction loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PosWeight {
    /// `(#zero entries of T) / (#one entries of T)`; falls back to 1 when
    /// the target is all-zero or all-one.
    Auto,
    Fixed(f64),
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hidden_dim: usize,
    pub embed_dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub optimizer: Optimizer,
    pub pos_weight: PosWeight,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden_dim: 32,
            embed_dim: 16,
            learning_rate: 0.01,
            epochs: 200,
            seed: 0,
            optimizer: Optimizer::AdaptiveMoments,
            pos_weight: PosWeight::Auto,
        }
    }
}

/// Output of [`train`].
#[derive(Debug, Clone)]
pub struct TrainResult {
    pub params: EncoderParams,
    /// Final embedding `Z`, `n x embed_dim`.
    pub embedding: DenseMatrix,
    /// Loss evaluated at the start of each epoch, length `epochs`.
    pub loss_history: Vec<f64>,
}

fn check_encode_shapes(p: &SparseMatrix, x: &DenseMatrix, params: &EncoderParams) -> Result<()> {
    if p.rows() != p.cols() {
        return Err(Error::Invalid(format!(
            "operator must be square, got {}x{}",
            p.rows(),
            p.cols()
        )));
    }
    if p.cols() != x.rows() {
        return Err(Error::dim("encode", p.rows(), p.cols(), x.rows(), x.cols()));
    }
    if x.cols() != params.theta1.rows() || params.theta1.cols() != params.theta2.rows() {
        return Err(Error::Invalid(format!(
            "parameter shapes {}x{} / {}x{} incompatible with {} features",
            params.theta1.rows(),
            params.theta1.cols(),
            params.theta2.rows(),
            params.theta2.cols(),
            x.cols()
        )));
    }
    Ok(())
}

/// Encoder forward pass `Z = P * ReLU(P * X * theta1) * theta2`.
pub fn encode(p: &SparseMatrix, x: &DenseMatrix, params: &EncoderParams) -> Result<DenseMatrix> {
    check_encode_shapes(p, x, params)?;
    let pre = spmm(p, &gemm(x, &params.theta1, false)?)?;
    let hidden = map_elementwise(&pre, Activation::Relu);
    spmm(p, &gemm(&hidden, &params.theta2, false)?)
}

/// Inner-product decoder `sigmoid(Z Z^T)`: symmetric by construction, every
/// entry strictly inside `(0, 1)`.
pub fn decode(z: &DenseMatrix) -> DenseMatrix {
    let n = z.rows();
    let mut out = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let dot: f64 = z.row(i).iter().zip(z.row(j)).map(|(a, b)| a * b).sum();
            let v = crate::tensor::sigmoid(dot);
            out.set(i, j, v);
            out.set(j, i, v);
        }
    }
    out
}

fn check_target(z: &DenseMatrix, t: &SparseMatrix) -> Result<()> {
    if t.rows() != t.cols() || t.rows() != z.rows() {
        return Err(Error::dim(
            "reconstruction_loss",
            z.rows(),
            z.cols(),
            t.rows(),
            t.cols(),
        ));
    }
    if t.values().iter().any(|&v| v != 1.0) {
        return Err(Error::Invalid(
            "reconstruction target must be binary (stored entries all 1)".into(),
        ));
    }
    Ok(())
}

/// Resolves [`PosWeight`] against a concrete target matrix.
pub fn resolve_pos_weight(t: &SparseMatrix, policy: PosWeight) -> f64 {
    match policy {
        PosWeight::Fixed(w) => w,
        PosWeight::Auto => {
            let ones = t.nnz() as f64;
            let zeros = (t.rows() * t.cols()) as f64 - ones;
            if ones == 0.0 || zeros == 0.0 {
                1.0
            } else {
                zeros / ones
            }
        }
    }
}

/// Fused per-row pass over all vertex pairs: accumulates the weighted
/// binary cross-entropy and, when requested, `dL/dZ = (G + G^T) Z`.
///
/// `t_t` must be the transpose of `t`; it supplies `T_ji` during row `i`'s
/// scan so asymmetric targets are handled exactly.
fn pair_pass(
    z: &DenseMatrix,
    t: &SparseMatrix,
    t_t: &SparseMatrix,
    pos_weight: f64,
    want_grad: bool,
) -> (f64, Option<DenseMatrix>) {
    let n = z.rows();
    let d = z.cols();
    let scale = 1.0 / (n as f64 * n as f64);
    let w = pos_weight;

    let mut dz_buf = if want_grad {
        vec![0.0; n * d]
    } else {
        Vec::new()
    };
    let mut row_losses = vec![0.0; n];

    let grad_rows: Vec<&mut [f64]> = if want_grad {
        dz_buf.chunks_mut(d).collect()
    } else {
        Vec::new()
    };

    let do_row = |i: usize, loss_slot: &mut f64, grad_row: Option<&mut [f64]>| {
        let zi = z.row(i);
        let (pos_cols, _) = t.row(i);
        let (post_cols, _) = t_t.row(i);
        let mut p_ptr = 0usize;
        let mut q_ptr = 0usize;
        let mut loss = 0.0;
        let mut grad = grad_row;
        for j in 0..n {
            let zj = z.row(j);
            let mut u = 0.0;
            for (a, b) in zi.iter().zip(zj) {
                u += a * b;
            }
            let t_ij = p_ptr < pos_cols.len() && pos_cols[p_ptr] == j;
            if t_ij {
                p_ptr += 1;
            }
            // ln(1 + e^-|u|) shared by both stable log-sigmoid branches.
            let e = (-u.abs()).exp();
            let ln1pe = e.ln_1p();
            let sp_pos = if u >= 0.0 { u + ln1pe } else { ln1pe }; // softplus(u)
            loss += if t_ij { w * (sp_pos - u) } else { sp_pos };

            if let Some(row) = grad.as_deref_mut() {
                let t_ji = q_ptr < post_cols.len() && post_cols[q_ptr] == j;
                if t_ji {
                    q_ptr += 1;
                }
                let s = if u >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
                let g_ij = if t_ij { w * (s - 1.0) } else { s };
                let g_ji = if t_ji { w * (s - 1.0) } else { s };
                let r = scale * (g_ij + g_ji);
                if r != 0.0 {
                    for (slot, &v) in row.iter_mut().zip(zj) {
                        *slot += r * v;
                    }
                }
            } else if q_ptr < post_cols.len() && post_cols[q_ptr] == j {
                q_ptr += 1;
            }
        }
        *loss_slot = loss * scale;
    };

    if want_grad {
        row_losses
            .par_iter_mut()
            .zip(grad_rows)
            .enumerate()
            .for_each(|(i, (slot, row))| do_row(i, slot, Some(row)));
    } else {
        row_losses
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, slot)| do_row(i, slot, None));
    }

    let loss = row_losses.iter().sum();
    let dz = want_grad.then(|| DenseMatrix::from_raw(n, d, dz_buf));
    (loss, dz)
}

/// Weighted binary cross-entropy between `sigmoid(Z Z^T)` and the binary
/// target `T`, averaged over all `n^2` pairs.
pub fn reconstruction_loss(z: &DenseMatrix, t: &SparseMatrix, pos_weight: f64) -> Result<f64> {
    check_target(z, t)?;
    let t_t = t.transpose();
    let (loss, _) = pair_pass(z, t, &t_t, pos_weight, false);
    Ok(loss)
}

/// Feature matrix in the representation cheapest for the training loop:
/// near-binary inputs get a CSR view so `X * theta` and `X^T * G` scale
/// with the nonzero count.
enum FeatureSource<'a> {
    Dense(&'a DenseMatrix),
    Sparse {
        mat: SparseMatrix,
        transposed: SparseMatrix,
    },
}

impl<'a> FeatureSource<'a> {
    fn build(x: &'a DenseMatrix) -> Self {
        let nnz = x.values().iter().filter(|&&v| v != 0.0).count();
        if nnz * 4 < x.rows() * x.cols() {
            let rows: Vec<Vec<(usize, f64)>> = (0..x.rows())
                .map(|i| {
                    x.row(i)
                        .iter()
                        .enumerate()
                        .filter(|(_, &v)| v != 0.0)
                        .map(|(c, &v)| (c, v))
                        .collect()
                })
                .collect();
            let mat = SparseMatrix::from_sorted_rows(x.rows(), x.cols(), rows);
            let transposed = mat.transpose();
            FeatureSource::Sparse { mat, transposed }
        } else {
            FeatureSource::Dense(x)
        }
    }

    /// `X * theta`
    fn times(&self, theta: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            FeatureSource::Dense(x) => gemm(x, theta, false),
            FeatureSource::Sparse { mat, .. } => spmm(mat, theta),
        }
    }

    /// `X^T * g`
    fn t_times(&self, g: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            FeatureSource::Dense(x) => gemm_tn(x, g),
            FeatureSource::Sparse { transposed, .. } => spmm(transposed, g),
        }
    }
}

struct Forward {
    /// Pre-activation of the hidden layer, `P X theta1`.
    pre: DenseMatrix,
    /// `ReLU(pre)`.
    hidden: DenseMatrix,
    /// Embedding `P (hidden theta2)`.
    z: DenseMatrix,
}

fn forward(
    p: &SparseMatrix,
    feats: &FeatureSource<'_>,
    params: &EncoderParams,
) -> Result<Forward> {
    let pre = spmm(p, &feats.times(&params.theta1)?)?;
    let hidden = map_elementwise(&pre, Activation::Relu);
    let z = spmm(p, &gemm(&hidden, &params.theta2, false)?)?;
    Ok(Forward { pre, hidden, z })
}

/// Backpropagation through decoder gradient `dz`. ReLU uses subgradient 0
/// at 0.
fn backward(
    p_t: &SparseMatrix,
    feats: &FeatureSource<'_>,
    fwd: &Forward,
    dz: &DenseMatrix,
    theta2: &DenseMatrix,
) -> Result<(DenseMatrix, DenseMatrix)> {
    let db = spmm(p_t, dz)?;
    let d_theta2 = gemm_tn(&fwd.hidden, &db)?;
    let dh = gemm(&db, theta2, true)?;
    let masked: Vec<f64> = dh
        .values()
        .iter()
        .zip(fwd.pre.values())
        .map(|(&g, &s)| if s > 0.0 { g } else { 0.0 })
        .collect();
    let ds = DenseMatrix::from_raw(dh.rows(), dh.cols(), masked);
    let dpre = spmm(p_t, &ds)?;
    let d_theta1 = feats.t_times(&dpre)?;
    Ok((d_theta1, d_theta2))
}

/// Analytic gradients `(dL/dtheta1, dL/dtheta2)` of the reconstruction loss
/// at the given parameters.
pub fn loss_gradients(
    p: &SparseMatrix,
    x: &DenseMatrix,
    t: &SparseMatrix,
    params: &EncoderParams,
    pos_weight: f64,
) -> Result<(DenseMatrix, DenseMatrix)> {
    check_encode_shapes(p, x, params)?;
    let feats = FeatureSource::build(x);
    let fwd = forward(p, &feats, params)?;
    check_target(&fwd.z, t)?;
    let t_t = t.transpose();
    let (_, dz) = pair_pass(&fwd.z, t, &t_t, pos_weight, true);
    let p_t = p.transpose();
    backward(&p_t, &feats, &fwd, &dz.expect("grad requested"), &params.theta2)
}

struct AdamState {
    m1: Vec<f64>,
    v1: Vec<f64>,
    m2: Vec<f64>,
    v2: Vec<f64>,
    step: i32,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

fn adam_update(theta: &mut [f64], grad: &[f64], m: &mut [f64], v: &mut [f64], lr: f64, step: i32) {
    let bc1 = 1.0 - ADAM_BETA1.powi(step);
    let bc2 = 1.0 - ADAM_BETA2.powi(step);
    for i in 0..theta.len() {
        m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * grad[i];
        v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * grad[i] * grad[i];
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        theta[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
    }
}

/// Full-batch training of the autoencoder against binary target `T`.
///
/// Parameters are Glorot-initialized from `cfg.seed`; the loss is recorded
/// once per epoch (before that epoch's update). The run is bit-reproducible
/// for a fixed seed, independent of thread count. A non-finite loss aborts
/// with the offending epoch index.
pub fn train(
    p: &SparseMatrix,
    x: &DenseMatrix,
    t: &SparseMatrix,
    cfg: &TrainConfig,
) -> Result<TrainResult> {
    if cfg.learning_rate <= 0.0 || !cfg.learning_rate.is_finite() {
        return Err(Error::Invalid(format!(
            "learning_rate {} must be positive",
            cfg.learning_rate
        )));
    }
    if cfg.epochs == 0 || cfg.hidden_dim == 0 || cfg.embed_dim == 0 {
        return Err(Error::Invalid(
            "epochs, hidden_dim and embed_dim must all be >= 1".into(),
        ));
    }
    let n = p.rows();
    if n < 2 {
        return Err(Error::Invalid(format!("need at least 2 vertices, got {n}")));
    }

    let mut rng = Rng::seed_from_u64(cfg.seed);
    let mut params = EncoderParams::glorot(x.cols(), cfg.hidden_dim, cfg.embed_dim, &mut rng);
    check_encode_shapes(p, x, &params)?;

    let feats = FeatureSource::build(x);
    let p_t = p.transpose();
    let t_t = t.transpose();
    let pos_weight = resolve_pos_weight(t, cfg.pos_weight);
    {
        // Validate the target once against the embedding shape.
        let probe = DenseMatrix::zeros(n, cfg.embed_dim);
        check_target(&probe, t)?;
    }

    let mut adam = AdamState {
        m1: vec![0.0; params.theta1.values().len()],
        v1: vec![0.0; params.theta1.values().len()],
        m2: vec![0.0; params.theta2.values().len()],
        v2: vec![0.0; params.theta2.values().len()],
        step: 0,
    };
    let mut loss_history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let fwd = forward(p, &feats, &params)?;
        let (loss, dz) = pair_pass(&fwd.z, t, &t_t, pos_weight, true);
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        loss_history.push(loss);
        let (g1, g2) = backward(&p_t, &feats, &fwd, &dz.expect("grad requested"), &params.theta2)?;

        match cfg.optimizer {
            Optimizer::PlainGd => {
                for (w, g) in params.theta1.values_mut().iter_mut().zip(g1.values()) {
                    *w -= cfg.learning_rate * g;
                }
                for (w, g) in params.theta2.values_mut().iter_mut().zip(g2.values()) {
                    *w -= cfg.learning_rate * g;
                }
            }
            Optimizer::AdaptiveMoments => {
                adam.step += 1;
                adam_update(
                    params.theta1.values_mut(),
                    g1.values(),
                    &mut adam.m1,
                    &mut adam.v1,
                    cfg.learning_rate,
                    adam.step,
                );
                adam_update(
                    params.theta2.values_mut(),
                    g2.values(),
                    &mut adam.m2,
                    &mut adam.v2,
                    cfg.learning_rate,
                    adam.step,
                );
            }
        }
        if !params.theta1.all_finite() || !params.theta2.all_finite() {
            return Err(Error::Diverged { epoch });
        }
    }

    let embedding = forward(p, &feats, &params)?.z;
    Ok(TrainResult {
        params,
        embedding,
        loss_history,
    })
}
