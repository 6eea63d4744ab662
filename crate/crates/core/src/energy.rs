//! Received RF power (closed form, empirical, asymptotic) and the
//! non-linear energy-harvesting model.

use rayon::prelude::*;

use crate::channel::{draw_channels, make_pilots, run_training};
use crate::downlink::{downlink_receive, draw_symbols, mrt_precoder};
use crate::sysmodel::{substream, EhCurve, StreamRole, SystemConfig};
use crate::Error;

/// Which route produced an energy report.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnergyVariant {
    ClosedForm,
    Empirical,
    Asymptotic,
}

/// Received RF power and non-linear harvested energy for every receiver.
#[derive(Clone, Debug)]
pub struct EnergyReport {
    pub p_rf_user: Vec<f64>,
    pub p_rf_eve: f64,
    pub q_user: Vec<f64>,
    pub q_eve: f64,
    pub variant: EnergyVariant,
}

/// Denominator eta p_t beta_i + q_t beta_w + sigma^2 shared by every
/// closed form.
pub fn pilot_denominator(cfg: &SystemConfig, beta: f64, p_t: f64, q_t: f64) -> f64 {
    cfg.eta as f64 * p_t * beta + q_t * cfg.beta_w() + cfg.sigma2
}

/// Total received RF power at user `user` after power splitting:
/// (1-rho_k) ((K beta_k + M eta p_t beta_k^2 / D_k)(W_E + 1) + sigma_ant^2).
pub fn rf_power_user_closed(
    cfg: &SystemConfig,
    user: usize,
    p_t: f64,
    q_t: f64,
    rho_k: f64,
) -> f64 {
    let beta = cfg.geometry.beta(user);
    let d = pilot_denominator(cfg, beta, p_t, q_t);
    let beam = if d > 0.0 {
        cfg.m as f64 * cfg.eta as f64 * p_t * beta * beta / d
    } else {
        0.0
    };
    (1.0 - rho_k) * ((cfg.k as f64 * beta + beam) * (cfg.w_e + 1.0) + cfg.sigma2_ant)
}

/// Total received RF power at the eavesdropper after power splitting.
pub fn rf_power_eve_closed(cfg: &SystemConfig, p_t: f64, q_t: f64, rho_eve: f64) -> f64 {
    let beta_w = cfg.beta_w();
    let beam: f64 = cfg
        .betas()
        .iter()
        .map(|&beta_i| {
            let d = pilot_denominator(cfg, beta_i, p_t, q_t);
            if d > 0.0 {
                cfg.m as f64 * q_t * beta_w * beta_w / d
            } else {
                0.0
            }
        })
        .sum();
    (1.0 - rho_eve) * ((cfg.k as f64 * beta_w + beam) * (cfg.w_e + 1.0) + cfg.sigma2_ant)
}

/// Non-linear (logistic) harvested energy over `duration` seconds.
///
/// Evaluated as P_s (1 - e^{-a x}) / (1 + e^{a b - a x}) with
/// x = [p_eh - P_sen]^+, which is algebraically identical to the
/// normalized-sigmoid form but never overflows: huge `a b` drives the
/// result to 0 and huge `a x` saturates it at P_s.
pub fn nonlinear_eh(p_eh: f64, curve: &EhCurve, duration: f64) -> f64 {
    let x = (p_eh - curve.p_sen).max(0.0);
    let ax = curve.a * x;
    let numer = -(-ax).exp_m1();
    let denom = 1.0 + (curve.a * curve.b - ax).exp();
    curve.p_s * duration * numer / denom
}

/// Degenerate linear harvester (identity map with duration scaling); a
/// debugging diagnostic, not a modeling claim.
pub fn linear_eh(p_eh: f64, duration: f64) -> f64 {
    p_eh * duration
}

/// Large-M limit of the received RF power at user `user` and at the
/// eavesdropper: only the beamformed terms scaled by M survive.
pub fn rf_power_asymptotic(
    cfg: &SystemConfig,
    user: usize,
    p_t: f64,
    q_t: f64,
    rho_k: f64,
) -> (f64, f64) {
    let beta = cfg.geometry.beta(user);
    let beta_w = cfg.beta_w();
    let d = pilot_denominator(cfg, beta, p_t, q_t);
    let user_term = if d > 0.0 {
        (1.0 - rho_k) * cfg.m as f64 * cfg.eta as f64 * p_t * beta * beta * (cfg.w_e + 1.0) / d
    } else {
        0.0
    };
    let eve_term: f64 = (1.0 - cfg.rho_eve)
        * cfg
            .betas()
            .iter()
            .map(|&beta_i| {
                let di = pilot_denominator(cfg, beta_i, p_t, q_t);
                if di > 0.0 {
                    cfg.m as f64 * q_t * beta_w * beta_w * (cfg.w_e + 1.0) / di
                } else {
                    0.0
                }
            })
            .sum::<f64>();
    (user_term, eve_term)
}

/// Harvested energy in the large-M regime: the non-linear model applied
/// to the asymptotic RF power.
pub fn eh_asymptotic(cfg: &SystemConfig, p_rf_asym: f64, curve: &EhCurve) -> f64 {
    nonlinear_eh(p_rf_asym, curve, cfg.harvest_duration())
}

/// Closed-form energy report for every receiver at a common user
/// power-splitting ratio.
pub fn energy_report_closed(cfg: &SystemConfig, p_t: f64, q_t: f64, rho_k: f64) -> EnergyReport {
    let dur = cfg.harvest_duration();
    let p_rf_user: Vec<f64> = (0..cfg.k)
        .map(|u| rf_power_user_closed(cfg, u, p_t, q_t, rho_k))
        .collect();
    let p_rf_eve = rf_power_eve_closed(cfg, p_t, q_t, cfg.rho_eve);
    let user_curve = cfg.eh.user_curve();
    let q_user = p_rf_user
        .iter()
        .map(|&p| nonlinear_eh(p, &user_curve, dur))
        .collect();
    let q_eve = nonlinear_eh(p_rf_eve, &cfg.eh.eve_curve(), dur);
    EnergyReport {
        p_rf_user,
        p_rf_eve,
        q_user,
        q_eve,
        variant: EnergyVariant::ClosedForm,
    }
}

/// Empirical energy report: average (1-rho)|y|^2 over full pipeline
/// realizations (training, precoding, downlink with drawn symbols), then
/// map the mean received power through the harvester.
pub fn energy_report_empirical(
    cfg: &SystemConfig,
    p_t: f64,
    q_t: f64,
    rho_k: f64,
    trials: u64,
    seed: u64,
) -> Result<EnergyReport, Error> {
    let per_trial: Vec<(Vec<f64>, f64)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let ch = draw_channels(cfg, &mut substream(seed, StreamRole::Channel, i));
            let pil = make_pilots(cfg.eta, cfg.k, &mut substream(seed, StreamRole::Pilot, i))?;
            let tr = run_training(
                cfg,
                &ch,
                &pil,
                p_t,
                q_t,
                &mut substream(seed, StreamRole::UplinkNoise, i),
            )?;
            let prec = mrt_precoder(&tr.g_hat, &tr.sigma2_ghat)?;
            let sym = draw_symbols(cfg, &mut substream(seed, StreamRole::Symbols, i));
            let (ys, ye) = downlink_receive(
                &ch,
                &prec,
                &sym,
                cfg.sigma2_ant,
                &mut substream(seed, StreamRole::AntennaNoise, i),
            );
            let users: Vec<f64> = ys.iter().map(|y| (1.0 - rho_k) * y.norm_sqr()).collect();
            Ok((users, (1.0 - cfg.rho_eve) * ye.norm_sqr()))
        })
        .collect::<Result<_, Error>>()?;

    let n = trials as f64;
    let mut p_rf_user = vec![0.0; cfg.k];
    let mut p_rf_eve = 0.0;
    for (users, eve) in &per_trial {
        for (acc, v) in p_rf_user.iter_mut().zip(users) {
            *acc += v;
        }
        p_rf_eve += eve;
    }
    for v in &mut p_rf_user {
        *v /= n;
    }
    p_rf_eve /= n;

    let dur = cfg.harvest_duration();
    let user_curve = cfg.eh.user_curve();
    let q_user = p_rf_user
        .iter()
        .map(|&p| nonlinear_eh(p, &user_curve, dur))
        .collect();
    let q_eve = nonlinear_eh(p_rf_eve, &cfg.eh.eve_curve(), dur);
    Ok(EnergyReport {
        p_rf_user,
        p_rf_eve,
        q_user,
        q_eve,
        variant: EnergyVariant::Empirical,
    })
}

/// Asymptotic energy report.
pub fn energy_report_asymptotic(
    cfg: &SystemConfig,
    p_t: f64,
    q_t: f64,
    rho_k: f64,
) -> EnergyReport {
    let per_user: Vec<(f64, f64)> = (0..cfg.k)
        .map(|u| rf_power_asymptotic(cfg, u, p_t, q_t, rho_k))
        .collect();
    let p_rf_user: Vec<f64> = per_user.iter().map(|&(u, _)| u).collect();
    let p_rf_eve = per_user.first().map(|&(_, e)| e).unwrap_or(0.0);
    let user_curve = cfg.eh.user_curve();
    let q_user = p_rf_user
        .iter()
        .map(|&p| eh_asymptotic(cfg, p, &user_curve))
        .collect();
    let q_eve = eh_asymptotic(cfg, p_rf_eve, &cfg.eh.eve_curve());
    EnergyReport {
        p_rf_user,
        p_rf_eve,
        q_user,
        q_eve,
        variant: EnergyVariant::Asymptotic,
    }
}
