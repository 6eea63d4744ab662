//! Channel realizations, pilot construction, the contaminated uplink
//! training phase and MMSE channel estimation.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;

use crate::cmat::{norm_sq, orthonormalize_columns, CMat};
use crate::sysmodel::{cn_sample, cn_vector, SystemConfig};
use crate::Error;

/// One fading realization: user channels (columns of `g`) and the
/// eavesdropper channel, with their large-scale coefficients.
#[derive(Clone, Debug)]
pub struct ChannelSet {
    /// M x K matrix of user channels, column k is g_k = sqrt(beta_k) h_k.
    pub g: CMat,
    /// Eavesdropper channel g_w = sqrt(beta_w) h_w.
    pub g_w: Vec<Complex64>,
    pub betas: Vec<f64>,
    pub beta_w: f64,
}

/// Orthonormal user pilots plus the eavesdropper's random unit-sphere pilot.
#[derive(Clone, Debug)]
pub struct PilotSet {
    /// eta x K matrix with orthonormal columns.
    pub phi: CMat,
    /// Eavesdropper pilot, unit norm in C^eta.
    pub phi_w: Vec<Complex64>,
}

impl PilotSet {
    /// Overlap c_k = phi_w^T phi_k^* between the eavesdropper pilot and
    /// user k's pilot.
    pub fn overlap(&self, user: usize) -> Complex64 {
        self.phi
            .col(user)
            .iter()
            .zip(&self.phi_w)
            .fold(Complex64::new(0.0, 0.0), |acc, (&p, &w)| acc + w * p.conj())
    }
}

/// Everything the training phase produces.
#[derive(Clone, Debug)]
pub struct TrainingOutcome {
    pub y_t: CMat,
    pub g_hat: CMat,
    pub sigma2_ghat: Vec<f64>,
    pub sigma2_err: Vec<f64>,
    pub p_t: f64,
    pub q_t: f64,
}

/// Draw a fresh i.i.d. Rayleigh realization of all channels.
pub fn draw_channels(cfg: &SystemConfig, rng: &mut ChaCha8Rng) -> ChannelSet {
    let betas = cfg.betas();
    let columns: Vec<Vec<Complex64>> = betas.iter().map(|&b| cn_vector(rng, b, cfg.m)).collect();
    let beta_w = cfg.beta_w();
    ChannelSet {
        g: CMat::from_columns(&columns),
        g_w: cn_vector(rng, beta_w, cfg.m),
        betas,
        beta_w,
    }
}

/// Build the pilot set: user pilots from the QR factorization of a seeded
/// random complex matrix, the eavesdropper pilot uniform on the unit sphere.
pub fn make_pilots(eta: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<PilotSet, Error> {
    if eta < k {
        return Err(Error::InvalidConfig(format!(
            "cannot build {k} orthonormal pilots of length {eta}"
        )));
    }
    let raw: Vec<Vec<Complex64>> = (0..k).map(|_| cn_vector(rng, 1.0, eta)).collect();
    let mut phi = CMat::from_columns(&raw);
    if !orthonormalize_columns(&mut phi) {
        // a random complex Gaussian matrix is almost surely full rank;
        // retry once with fresh draws rather than failing the run
        let raw: Vec<Vec<Complex64>> = (0..k).map(|_| cn_vector(rng, 1.0, eta)).collect();
        phi = CMat::from_columns(&raw);
        if !orthonormalize_columns(&mut phi) {
            return Err(Error::Domain("pilot orthonormalization failed".into()));
        }
    }
    let mut phi_w = cn_vector(rng, 1.0, eta);
    let n = norm_sq(&phi_w).sqrt();
    for z in &mut phi_w {
        *z /= n;
    }
    Ok(PilotSet { phi, phi_w })
}

/// Received training block Y_t = sqrt(eta p_t) G Phi^T
///                             + sqrt(eta q_t) g_w phi_w^T + N.
pub fn uplink_receive(
    channels: &ChannelSet,
    pilots: &PilotSet,
    p_t: f64,
    q_t: f64,
    sigma2: f64,
    rng: &mut ChaCha8Rng,
) -> Result<CMat, Error> {
    if p_t < 0.0 || q_t < 0.0 || sigma2 < 0.0 {
        return Err(Error::Domain(format!(
            "pilot and noise powers must be nonnegative (p_t={p_t}, q_t={q_t}, sigma2={sigma2})"
        )));
    }
    let m = channels.g.rows();
    let k = channels.g.cols();
    let eta = pilots.phi.rows();
    let su = (eta as f64 * p_t).sqrt();
    let se = (eta as f64 * q_t).sqrt();
    let mut y = CMat::zeros(m, eta);
    for j in 0..eta {
        let col = y.col_mut(j);
        for (i, slot) in col.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for u in 0..k {
                // (G Phi^T)_{ij} = sum_u G_{iu} Phi_{ju}
                acc += channels.g.get(i, u) * pilots.phi.get(j, u);
            }
            *slot = su * acc + se * channels.g_w[i] * pilots.phi_w[j];
        }
    }
    if sigma2 > 0.0 {
        for j in 0..eta {
            for slot in y.col_mut(j) {
                *slot += cn_sample(rng, sigma2);
            }
        }
    }
    Ok(y)
}

/// MMSE estimate of G from the training block:
/// G_hat = Y_t Phi^* / sqrt(eta p_t) scaled per user by
/// eta p_t beta_k / (eta p_t beta_k + sigma^2 + q_t beta_w).
pub fn mmse_estimate(
    y_t: &CMat,
    pilots: &PilotSet,
    p_t: f64,
    q_t: f64,
    cfg: &SystemConfig,
) -> Result<CMat, Error> {
    if !(p_t > 0.0) {
        return Err(Error::Domain(
            "MMSE estimation needs a strictly positive pilot power".into(),
        ));
    }
    let eta = cfg.eta as f64;
    let betas = cfg.betas();
    let beta_w = cfg.beta_w();
    let mut g_hat = y_t.mul(&pilots.phi, true);
    let pre = 1.0 / (eta * p_t).sqrt();
    for (u, &beta) in betas.iter().enumerate() {
        let denom = eta * p_t * beta + cfg.sigma2 + q_t * beta_w;
        // beta = 0 collapses to the zero-variance prior: g_hat_k = 0
        let scale = if denom > 0.0 {
            pre * eta * p_t * beta / denom
        } else {
            0.0
        };
        for z in g_hat.col_mut(u) {
            *z *= scale;
        }
    }
    Ok(g_hat)
}

/// Closed-form per-entry variances of the MMSE estimate and of the
/// estimation error, for every user.
pub fn estimation_stats(cfg: &SystemConfig, p_t: f64, q_t: f64) -> (Vec<f64>, Vec<f64>) {
    let eta = cfg.eta as f64;
    let beta_w = cfg.beta_w();
    let mut s2g = Vec::with_capacity(cfg.k);
    let mut s2e = Vec::with_capacity(cfg.k);
    for beta in cfg.betas() {
        let noise = cfg.sigma2 + q_t * beta_w;
        let denom = eta * p_t * beta + noise;
        if denom > 0.0 {
            s2g.push(eta * p_t * beta * beta / denom);
            s2e.push(noise * beta / denom);
        } else {
            s2g.push(0.0);
            s2e.push(beta);
        }
    }
    (s2g, s2e)
}

/// Run the whole training phase: receive the contaminated block and
/// estimate every user channel.
pub fn run_training(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    pilots: &PilotSet,
    p_t: f64,
    q_t: f64,
    rng: &mut ChaCha8Rng,
) -> Result<TrainingOutcome, Error> {
    let y_t = uplink_receive(channels, pilots, p_t, q_t, cfg.sigma2, rng)?;
    let g_hat = mmse_estimate(&y_t, pilots, p_t, q_t, cfg)?;
    let (sigma2_ghat, sigma2_err) = estimation_stats(cfg, p_t, q_t);
    Ok(TrainingOutcome {
        y_t,
        g_hat,
        sigma2_ghat,
        sigma2_err,
        p_t,
        q_t,
    })
}

/// Despread the training block onto the user pilots: columns are
/// z_k = sqrt(eta p_t) g_k + sqrt(eta q_t) c_k g_w + N phi_k^*.
pub fn despread(y_t: &CMat, pilots: &PilotSet) -> CMat {
    y_t.mul(&pilots.phi, true)
}
