//! Achievable-rate and secrecy-rate machinery: the closed-form lower
//! bound, its Monte Carlo counterpart, the large-M asymptotic, and the
//! interference-variance moments behind the bound's derivation.
//!
//! Rates are bits/s/Hz and carry the training prelog (T - tau)/T.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{despread, draw_channels, estimation_stats, make_pilots, run_training};
use crate::cmat::{hdot, norm_sq};
use crate::downlink::mrt_precoder;
use crate::energy::pilot_denominator;
use crate::sysmodel::{substream, StreamRole, SystemConfig};
use crate::Error;

/// Named numerator/denominator pieces of the closed-form bound.
#[derive(Clone, Copy, Debug)]
pub struct SinrTerms {
    /// rho_k M sigma_ghat_k^2 — coherent user signal power.
    pub user_signal: f64,
    /// Mean interference-plus-noise power at the user (E{U}).
    pub user_interference: f64,
    /// rho_Eve M q_t beta_w^2 / D_k — coherent eavesdropper power.
    pub eve_signal: f64,
    /// Mean interference-plus-noise power at the eavesdropper (E{Z}).
    pub eve_interference: f64,
}

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
}

/// Monte Carlo user rate, eavesdropper rate and secrecy rate.
#[derive(Clone, Copy, Debug)]
pub struct McRates {
    pub user_rate: McEstimate,
    pub eve_rate: McEstimate,
    pub secrecy: McEstimate,
}

/// Closed-form bound with its decomposition; `mc` is attached by callers
/// that also ran the simulator.
#[derive(Clone, Debug)]
pub struct SecrecyReport {
    pub bound: f64,
    pub user_rate_bound: f64,
    pub eve_rate_bound: f64,
    pub mc: Option<McRates>,
    pub terms: SinrTerms,
    /// The unclamped bound may be negative; flagged rather than clamped.
    pub negative: bool,
}

/// Moment quantities used by the bound's derivation.
#[derive(Clone, Copy, Debug)]
pub struct MomentBundle {
    pub sigma_z_sq: f64,
    /// Generalized-Jensen constant at mu = 1 (its maximum, 3/8).
    pub jensen_c: f64,
    /// delta = sum_i 1/(M^2 D_i^2).
    pub delta: f64,
    /// E{||g_w||^(2m)} for m = 1..4.
    pub gw_norm_moments: [f64; 4],
}

/// SINR decomposition of the closed-form bound for user `user`.
pub fn sinr_terms(cfg: &SystemConfig, user: usize, p_t: f64, q_t: f64, rho_k: f64) -> SinrTerms {
    let m = cfg.m as f64;
    let kf = cfg.k as f64;
    let betas = cfg.betas();
    let beta_k = betas[user];
    let beta_w = cfg.beta_w();
    let (s2g, s2e) = estimation_stats(cfg, p_t, q_t);

    let user_signal = rho_k * m * s2g[user];
    // E{U}: other-user beams, the forgotten part of the own beam, the
    // imperfect-CSI energy-symbol residual, antenna noise, processing noise
    let user_interference = rho_k
        * (kf * beta_k + (kf - 1.0) * beta_k * cfg.w_e + s2e[user] * cfg.w_e + cfg.sigma2_ant)
        + cfg.sigma2_s;

    let gain: Vec<f64> = betas
        .iter()
        .map(|&beta_i| {
            let d = pilot_denominator(cfg, beta_i, p_t, q_t);
            if d > 0.0 {
                m * q_t * beta_w * beta_w / d
            } else {
                0.0
            }
        })
        .collect();
    let eve_signal = cfg.rho_eve * gain[user];
    let eve_interference = cfg.rho_eve
        * ((kf * beta_w + gain.iter().sum::<f64>()) * (cfg.w_e + 1.0) - gain[user]
            + cfg.sigma2_ant)
        + cfg.sigma2_s;

    SinrTerms {
        user_signal,
        user_interference,
        eve_signal,
        eve_interference,
    }
}

fn rate_from(terms: &SinrTerms, prelog: f64) -> (f64, f64) {
    let user = prelog * (1.0 + terms.user_signal / terms.user_interference).log2();
    let eve = if terms.eve_signal > 0.0 {
        prelog * (1.0 + terms.eve_signal / terms.eve_interference).log2()
    } else {
        0.0
    };
    (user, eve)
}

/// Closed-form secrecy-rate lower bound for user `user` (signed; callers
/// decide whether to clamp).
pub fn secrecy_bound_closed(
    cfg: &SystemConfig,
    user: usize,
    p_t: f64,
    q_t: f64,
    rho_k: f64,
) -> f64 {
    let terms = sinr_terms(cfg, user, p_t, q_t, rho_k);
    let (u, e) = rate_from(&terms, cfg.prelog());
    u - e
}

/// Full closed-form report with the SINR decomposition.
pub fn secrecy_report(
    cfg: &SystemConfig,
    user: usize,
    p_t: f64,
    q_t: f64,
    rho_k: f64,
) -> SecrecyReport {
    let terms = sinr_terms(cfg, user, p_t, q_t, rho_k);
    let (u, e) = rate_from(&terms, cfg.prelog());
    SecrecyReport {
        bound: u - e,
        user_rate_bound: u,
        eve_rate_bound: e,
        mc: None,
        terms,
        negative: u - e < 0.0,
    }
}

/// Large-M secrecy bound: the user term keeps its exact M scaling while
/// the eavesdropper term converges to an M-independent constant.
pub fn secrecy_asymptotic(cfg: &SystemConfig, user: usize, p_t: f64, q_t: f64, rho_k: f64) -> f64 {
    let terms = sinr_terms(cfg, user, p_t, q_t, rho_k);
    let prelog = cfg.prelog();
    let user_term = prelog * (1.0 + terms.user_signal / terms.user_interference).log2();
    if q_t <= 0.0 {
        return user_term;
    }
    let beta_w = cfg.beta_w();
    let per_m: Vec<f64> = cfg
        .betas()
        .iter()
        .map(|&beta_i| q_t * beta_w * beta_w / pilot_denominator(cfg, beta_i, p_t, q_t))
        .collect();
    let denom = per_m.iter().sum::<f64>() * (cfg.w_e + 1.0) - per_m[user];
    let eve_term = prelog * (1.0 + per_m[user] / denom).log2();
    user_term - eve_term
}

/// One Monte Carlo realization of the instantaneous user and
/// eavesdropper rates for user `user`.
fn mc_trial(
    cfg: &SystemConfig,
    user: usize,
    p_t: f64,
    q_t: f64,
    rho_k: f64,
    seed: u64,
    index: u64,
) -> Result<(f64, f64), Error> {
    let ch = draw_channels(cfg, &mut substream(seed, StreamRole::Channel, index));
    let pilots = make_pilots(
        cfg.eta,
        cfg.k,
        &mut substream(seed, StreamRole::Pilot, index),
    )?;
    let tr = run_training(
        cfg,
        &ch,
        &pilots,
        p_t,
        q_t,
        &mut substream(seed, StreamRole::UplinkNoise, index),
    )?;
    let prec = mrt_precoder(&tr.g_hat, &tr.sigma2_ghat)?;
    let z = despread(&tr.y_t, &pilots);

    let m = cfg.m as f64;
    let eta = cfg.eta as f64;
    let beta_k = ch.betas[user];
    let d_k = pilot_denominator(cfg, beta_k, p_t, q_t);
    let prelog = cfg.prelog();

    // user side: deterministic use-and-forget gain, everything else noise
    let g_k = ch.g.col(user);
    let mean_gain = (m * tr.sigma2_ghat[user]).sqrt();
    let mut interference = 0.0;
    let mut a_k = Complex64::new(0.0, 0.0);
    for i in 0..cfg.k {
        let a_i = hdot(g_k, prec.w.col(i));
        if i == user {
            a_k = a_i;
        } else {
            interference += a_i.norm_sqr();
        }
    }
    // the part of the own beam the user cannot predict from its channel:
    // g_k^H (N phi_k^* + sqrt(eta q_t) c_k g_w) / sqrt(M D_k)
    let resid = (hdot(g_k, z.col(user)) - (eta * p_t).sqrt() * norm_sq(g_k))
        / Complex64::new((m * d_k).sqrt(), 0.0);
    let u_inst = rho_k
        * (interference * (cfg.w_e + 1.0)
            + (a_k - Complex64::new(mean_gain, 0.0)).norm_sqr()
            + resid.norm_sqr() * cfg.w_e
            + cfg.sigma2_ant)
        + cfg.sigma2_s;
    let user_rate = prelog * (1.0 + rho_k * mean_gain * mean_gain / u_inst).log2();

    // eavesdropper side: realized coherent gain from its own pilot and
    // channel; the received power decomposes exactly into signal + rest
    let w2 = norm_sq(&ch.g_w);
    let c_k = pilots.overlap(user);
    let m_real = (eta * q_t).sqrt() * c_k * w2 / (m * d_k).sqrt();
    let mut eve_cross = 0.0;
    let mut b_k = Complex64::new(0.0, 0.0);
    for i in 0..cfg.k {
        let b_i = hdot(&ch.g_w, prec.w.col(i));
        if i == user {
            b_k = b_i;
        } else {
            eve_cross += b_i.norm_sqr();
        }
    }
    let z_inst = cfg.rho_eve
        * (eve_cross * (cfg.w_e + 1.0)
            + b_k.norm_sqr() * cfg.w_e
            + (b_k - m_real).norm_sqr()
            + cfg.sigma2_ant)
        + cfg.sigma2_s;
    let eve_rate = prelog * (1.0 + cfg.rho_eve * m_real.norm_sqr() / z_inst).log2();

    Ok((user_rate, eve_rate))
}

fn summarize(values: &[f64]) -> McEstimate {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    McEstimate {
        mean,
        stderr: (var / n).sqrt(),
        trials: values.len() as u64,
    }
}

/// Monte Carlo user, eavesdropper and secrecy rates over the full
/// training/precoding/downlink pipeline. Trials map to fixed substream
/// indices, so the result is identical for any worker count.
pub fn mc_rates(
    cfg: &SystemConfig,
    user: usize,
    p_t: f64,
    q_t: f64,
    rho_k: f64,
    trials: u64,
    seed: u64,
) -> Result<McRates, Error> {
    if trials == 0 {
        return Err(Error::Domain("need at least one Monte Carlo trial".into()));
    }
    let samples: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|i| mc_trial(cfg, user, p_t, q_t, rho_k, seed, i))
        .collect::<Result<_, Error>>()?;
    let user_rates: Vec<f64> = samples.iter().map(|&(u, _)| u).collect();
    let eve_rates: Vec<f64> = samples.iter().map(|&(_, e)| e).collect();
    let secrecy: Vec<f64> = samples.iter().map(|&(u, e)| (u - e).max(0.0)).collect();
    Ok(McRates {
        user_rate: summarize(&user_rates),
        eve_rate: summarize(&eve_rates),
        secrecy: summarize(&secrecy),
    })
}

/// Monte Carlo estimate of the achievable secrecy rate
/// E{[R_k - R_Eve]^+} with its standard error.
pub fn mc_secrecy_rate(
    cfg: &SystemConfig,
    user: usize,
    p_t: f64,
    q_t: f64,
    rho_k: f64,
    trials: u64,
    seed: u64,
) -> Result<McEstimate, Error> {
    Ok(mc_rates(cfg, user, p_t, q_t, rho_k, trials, seed)?.secrecy)
}

/// Moments of ||g||^2 for g ~ CN(0, beta I_M), orders 1..4, via the
/// 2M-degree chi-square moment rule E{X^m} = k(k+2)...(k+2m-2).
pub fn gaussian_moments(m: usize, beta: f64, order: u32) -> Result<f64, Error> {
    if !(1..=4).contains(&order) {
        return Err(Error::Domain(format!(
            "norm-square moments supported for orders 1..4, got {order}"
        )));
    }
    if m == 0 || beta < 0.0 {
        return Err(Error::Domain("need M >= 1 and beta >= 0".into()));
    }
    let mf = m as f64;
    let mut v = 1.0;
    for j in 0..order {
        v *= (mf + j as f64) * beta;
    }
    Ok(v)
}

/// Per-entry quartic moment E{|g(i)|^4} = 2 beta^2.
pub fn quartic_entry_moment(beta: f64) -> f64 {
    2.0 * beta * beta
}

/// Generalized-Jensen constant C = (2 mu + 1) / (4 (mu^2 + mu)), mu >= 1.
pub fn jensen_constant(mu: f64) -> Result<f64, Error> {
    if !(mu >= 1.0) {
        return Err(Error::Domain(format!(
            "jensen constant defined for mu >= 1, got {mu}"
        )));
    }
    Ok((2.0 * mu + 1.0) / (4.0 * (mu * mu + mu)))
}

/// Closed-form variance of the eavesdropper's interference-plus-noise
/// aggregate Z.
///
/// Conditioned on the eavesdropper channel norm W = ||g_w||^2 and the
/// pilot overlaps t_i = |phi_w^T phi_i^*|^2, each beam observation
/// g_w^H w_i is an independent complex Gaussian with mean
/// sqrt(eta q_t t_i) W / sqrt(M D_i) and variance
/// (eta p_t beta_i + sigma^2) W / (M D_i); the variance of the total then
/// follows from the chi-square moments of W and the simplex (Dirichlet)
/// moments of the overlaps.
pub fn sigma_z_sq(cfg: &SystemConfig, p_t: f64, q_t: f64, rho_eve: f64) -> f64 {
    let m = cfg.m as f64;
    let eta = cfg.eta as f64;
    let beta_w = cfg.beta_w();
    let betas = cfg.betas();

    let mut alpha = 0.0; // sum a_i e_i
    let mut a2e2 = 0.0; // sum a_i^2 e_i^2
    let mut a2e = 0.0; // sum a_i^2 e_i
    let mut s1 = 0.0; // sum a_i
    let mut s2 = 0.0; // sum a_i^2
    for &beta_i in &betas {
        let d_i = pilot_denominator(cfg, beta_i, p_t, q_t);
        if d_i <= 0.0 {
            return 0.0;
        }
        let a_i = 1.0 / (m * d_i);
        let e_i = eta * p_t * beta_i + cfg.sigma2;
        alpha += a_i * e_i;
        a2e2 += a_i * a_i * e_i * e_i;
        a2e += a_i * a_i * e_i;
        s1 += a_i;
        s2 += a_i * a_i;
    }

    let m1 = gaussian_moments(cfg.m, beta_w, 1).unwrap();
    let m2 = gaussian_moments(cfg.m, beta_w, 2).unwrap();
    let m3 = gaussian_moments(cfg.m, beta_w, 3).unwrap();
    let m4 = gaussian_moments(cfg.m, beta_w, 4).unwrap();

    let e_gamma = q_t * s1;
    let e_gamma_sq = eta * q_t * q_t * (s2 + s1 * s1) / (eta + 1.0);

    let mean_cond_var = m2 * a2e2 + 2.0 * q_t * m3 * a2e;
    let first = alpha * alpha * m2 + 2.0 * alpha * e_gamma * m3 + e_gamma_sq * m4;
    let second = alpha * m1 + e_gamma * m2;
    let var_cond_mean = first - second * second;

    let scale = rho_eve * (cfg.w_e + 1.0);
    scale * scale * (mean_cond_var + var_cond_mean).max(0.0)
}

/// Bundle of derivation-level moment quantities at a parameter point.
pub fn moment_bundle(cfg: &SystemConfig, p_t: f64, q_t: f64) -> MomentBundle {
    let m = cfg.m as f64;
    let delta = cfg
        .betas()
        .iter()
        .map(|&beta_i| {
            let d = pilot_denominator(cfg, beta_i, p_t, q_t);
            1.0 / (m * m * d * d)
        })
        .sum();
    let beta_w = cfg.beta_w();
    MomentBundle {
        sigma_z_sq: sigma_z_sq(cfg, p_t, q_t, cfg.rho_eve),
        jensen_c: jensen_constant(1.0).unwrap(),
        delta,
        gw_norm_moments: [
            gaussian_moments(cfg.m, beta_w, 1).unwrap(),
            gaussian_moments(cfg.m, beta_w, 2).unwrap(),
            gaussian_moments(cfg.m, beta_w, 3).unwrap(),
            gaussian_moments(cfg.m, beta_w, 4).unwrap(),
        ],
    }
}
