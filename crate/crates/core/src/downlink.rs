//! MRT precoding, downlink signal synthesis and power splitting.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;

use crate::channel::ChannelSet;
use crate::cmat::{hdot, CMat};
use crate::sysmodel::{cn_sample, SystemConfig};
use crate::Error;

/// MRT precoding matrix; column k is g_hat_k / sqrt(M sigma_ghat_k^2),
/// normalized by the statistical norm rather than the instantaneous one.
#[derive(Clone, Debug)]
pub struct Precoder {
    pub w: CMat,
}

/// One symbol interval worth of downlink symbols: unit-power data symbols
/// and known pseudorandom energy symbols with power W_E.
#[derive(Clone, Debug)]
pub struct DownlinkSymbols {
    pub s: Vec<Complex64>,
    pub w_e: Vec<Complex64>,
}

/// A power-split receive sample.
#[derive(Clone, Copy, Debug)]
pub struct SplitSignal {
    /// sqrt(rho) y + n_s, fed to the information decoder.
    pub id_stream: Complex64,
    /// (1 - rho) |y|^2, fed to the energy harvester.
    pub eh_power_sample: f64,
}

/// Build the MRT precoder from MMSE estimates.
pub fn mrt_precoder(g_hat: &CMat, sigma2_ghat: &[f64]) -> Result<Precoder, Error> {
    let m = g_hat.rows() as f64;
    let mut w = g_hat.clone();
    for (u, &s2) in sigma2_ghat.iter().enumerate() {
        if !(s2 > 0.0) {
            return Err(Error::Domain(format!(
                "user {u} unestimable: sigma_ghat^2 = {s2}"
            )));
        }
        let scale = 1.0 / (m * s2).sqrt();
        for z in w.col_mut(u) {
            *z *= scale;
        }
    }
    Ok(Precoder { w })
}

/// Draw one set of downlink symbols. Both are circularly symmetric complex
/// Gaussian; the energy symbols are scaled to power W_E.
pub fn draw_symbols(cfg: &SystemConfig, rng: &mut ChaCha8Rng) -> DownlinkSymbols {
    let s = (0..cfg.k).map(|_| cn_sample(rng, 1.0)).collect();
    let w_e = (0..cfg.k).map(|_| cn_sample(rng, cfg.w_e)).collect();
    DownlinkSymbols { s, w_e }
}

/// Received samples at every user and at the eavesdropper:
/// y = g^H sum_i w_i (s_i + w_Ei) + n_ant.
pub fn downlink_receive(
    channels: &ChannelSet,
    precoder: &Precoder,
    symbols: &DownlinkSymbols,
    sigma2_ant: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<Complex64>, Complex64) {
    let m = precoder.w.rows();
    let k = precoder.w.cols();
    let mut tx = vec![Complex64::new(0.0, 0.0); m];
    for i in 0..k {
        let sym = symbols.s[i] + symbols.w_e[i];
        for (t, &w) in tx.iter_mut().zip(precoder.w.col(i)) {
            *t += w * sym;
        }
    }
    let mut y_users = Vec::with_capacity(k);
    for u in 0..k {
        let mut y = hdot(channels.g.col(u), &tx);
        if sigma2_ant > 0.0 {
            y += cn_sample(rng, sigma2_ant);
        }
        y_users.push(y);
    }
    let mut y_eve = hdot(&channels.g_w, &tx);
    if sigma2_ant > 0.0 {
        y_eve += cn_sample(rng, sigma2_ant);
    }
    (y_users, y_eve)
}

/// Split one received sample into its decoding and harvesting branches.
pub fn split_power(
    y: Complex64,
    rho: f64,
    sigma2_s: f64,
    rng: &mut ChaCha8Rng,
) -> Result<SplitSignal, Error> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::Domain(format!(
            "power-splitting ratio must lie in [0, 1], got {rho}"
        )));
    }
    let n_s = if sigma2_s > 0.0 {
        cn_sample(rng, sigma2_s)
    } else {
        Complex64::new(0.0, 0.0)
    };
    Ok(SplitSignal {
        id_stream: rho.sqrt() * y + n_s,
        eh_power_sample: (1.0 - rho) * y.norm_sqr(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_channels, make_pilots, run_training};
    use crate::cmat::norm_sq;
    use crate::sysmodel::{substream, StreamRole};

    fn small_cfg() -> SystemConfig {
        let mut cfg = SystemConfig::default();
        cfg.m = 16;
        cfg.k = 2;
        cfg.eta = 4;
        cfg.geometry.d_k = vec![10.0, 14.0];
        cfg.validate().unwrap();
        cfg
    }

    #[test]
    fn precoder_unit_construction() {
        // single column equal to sqrt(M s2) e_1 maps to w = e_1
        let m = 4;
        let s2 = 0.3;
        let mut col = vec![Complex64::new(0.0, 0.0); m];
        col[0] = Complex64::new((m as f64 * s2).sqrt(), 0.0);
        let g_hat = CMat::from_columns(&[col]);
        let p = mrt_precoder(&g_hat, &[s2]).unwrap();
        assert!((p.w.get(0, 0) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        for i in 1..m {
            assert_eq!(p.w.get(i, 0), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn precoder_rejects_unestimable_user() {
        let g_hat = CMat::zeros(4, 1);
        assert!(mrt_precoder(&g_hat, &[0.0]).is_err());
    }

    #[test]
    fn precoder_statistical_norm_is_unit() {
        let cfg = small_cfg();
        let p_t = 2e-7;
        let q_t = 5e-8;
        let trials = 50_000u64;
        let mut acc = vec![0.0; cfg.k];
        let mut acc_align = vec![Complex64::new(0.0, 0.0); cfg.k];
        let (s2g, _) = crate::channel::estimation_stats(&cfg, p_t, q_t);
        for i in 0..trials {
            let ch = draw_channels(&cfg, &mut substream(41, StreamRole::Channel, i));
            let pil =
                make_pilots(cfg.eta, cfg.k, &mut substream(41, StreamRole::Pilot, i)).unwrap();
            let tr = run_training(
                &cfg,
                &ch,
                &pil,
                p_t,
                q_t,
                &mut substream(41, StreamRole::UplinkNoise, i),
            )
            .unwrap();
            let prec = mrt_precoder(&tr.g_hat, &tr.sigma2_ghat).unwrap();
            for u in 0..cfg.k {
                acc[u] += norm_sq(prec.w.col(u));
                acc_align[u] += hdot(ch.g.col(u), prec.w.col(u));
            }
        }
        for u in 0..cfg.k {
            let mean_norm = acc[u] / trials as f64;
            assert!(
                (mean_norm - 1.0).abs() < 0.01,
                "E||w||^2 = {mean_norm} for user {u}"
            );
            // MMSE estimate aligned with channel: E{g^H w} = sqrt(M s2g)
            let expect = (cfg.m as f64 * s2g[u]).sqrt();
            let mean_align = acc_align[u] / trials as f64;
            assert!(
                (mean_align.re - expect).abs() < 0.01 * expect,
                "E g^H w = {mean_align} vs {expect}"
            );
            assert!(mean_align.im.abs() < 0.01 * expect);
        }
    }

    #[test]
    fn downlink_zero_channels_zero_noise_is_zero() {
        let cfg = small_cfg();
        let ch = ChannelSet {
            g: CMat::zeros(cfg.m, cfg.k),
            g_w: vec![Complex64::new(0.0, 0.0); cfg.m],
            betas: vec![0.0; cfg.k],
            beta_w: 0.0,
        };
        let mut w = CMat::zeros(cfg.m, cfg.k);
        for u in 0..cfg.k {
            w.set(0, u, Complex64::new(1.0, 0.0));
        }
        let prec = Precoder { w };
        let sym = draw_symbols(&cfg, &mut substream(1, StreamRole::Symbols, 0));
        let (ys, ye) = downlink_receive(
            &ch,
            &prec,
            &sym,
            0.0,
            &mut substream(1, StreamRole::AntennaNoise, 0),
        );
        assert!(ys.iter().all(|y| y.norm_sqr() == 0.0));
        assert_eq!(ye.norm_sqr(), 0.0);
    }

    #[test]
    fn downlink_scalar_identity() {
        // K=1, M=1, g=1, perfect CSI, s=1, no energy symbol, no noise -> y = 1
        let ch = ChannelSet {
            g: CMat::from_columns(&[vec![Complex64::new(1.0, 0.0)]]),
            g_w: vec![Complex64::new(0.0, 0.0)],
            betas: vec![1.0],
            beta_w: 0.0,
        };
        let prec = Precoder {
            w: CMat::from_columns(&[vec![Complex64::new(1.0, 0.0)]]),
        };
        let sym = DownlinkSymbols {
            s: vec![Complex64::new(1.0, 0.0)],
            w_e: vec![Complex64::new(0.0, 0.0)],
        };
        let (ys, _) = downlink_receive(
            &ch,
            &prec,
            &sym,
            0.0,
            &mut substream(2, StreamRole::AntennaNoise, 0),
        );
        assert!((ys[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn split_edges_and_conservation() {
        let mut rng = substream(3, StreamRole::ProcessingNoise, 0);
        let y = Complex64::new(1.2, -0.7);
        let s0 = split_power(y, 0.0, 0.0, &mut rng).unwrap();
        assert_eq!(s0.id_stream, Complex64::new(0.0, 0.0));
        assert_eq!(s0.eh_power_sample, y.norm_sqr());
        let s1 = split_power(y, 1.0, 0.0, &mut rng).unwrap();
        assert_eq!(s1.eh_power_sample, 0.0);
        assert!(split_power(y, 1.5, 0.0, &mut rng).is_err());
        assert!(split_power(y, -0.1, 0.0, &mut rng).is_err());
    }

    #[test]
    fn symbol_moments() {
        let mut cfg = small_cfg();
        cfg.w_e = 0.6;
        let n = 100_000u64;
        let mut mean_s = Complex64::new(0.0, 0.0);
        let mut pow_s = 0.0;
        let mut pow_e = 0.0;
        for i in 0..n {
            let sym = draw_symbols(&cfg, &mut substream(7, StreamRole::Symbols, i));
            mean_s += sym.s[0];
            pow_s += sym.s[0].norm_sqr();
            pow_e += sym.w_e[0].norm_sqr();
        }
        let nf = n as f64;
        assert!((mean_s / nf).norm() < 0.01);
        assert!((pow_s / nf - 1.0).abs() < 0.02);
        assert!((pow_e / nf - cfg.w_e).abs() < 0.02 * cfg.w_e);
    }

    #[test]
    fn energy_residual_matches_error_variance() {
        // the user cancels the part of its energy symbol it can predict;
        // the leftover coefficient g_k^H (N phi_k^* + sqrt(eta q_t) c_k g_w)
        // / sqrt(M D_k) must carry exactly the estimation-error power
        let cfg = small_cfg();
        let (p_t, q_t) = (2e-7, 8e-8);
        let user = 0;
        let eta = cfg.eta as f64;
        let (_, s2e) = crate::channel::estimation_stats(&cfg, p_t, q_t);
        let d_k = eta * p_t * cfg.geometry.beta(user) + q_t * cfg.beta_w() + cfg.sigma2;
        let trials = 40_000u64;
        let mut acc = 0.0;
        for i in 0..trials {
            let ch = draw_channels(&cfg, &mut substream(51, StreamRole::Channel, i));
            let pil =
                make_pilots(cfg.eta, cfg.k, &mut substream(51, StreamRole::Pilot, i)).unwrap();
            let tr = run_training(
                &cfg,
                &ch,
                &pil,
                p_t,
                q_t,
                &mut substream(51, StreamRole::UplinkNoise, i),
            )
            .unwrap();
            let z = crate::channel::despread(&tr.y_t, &pil);
            let g_k = ch.g.col(user);
            let resid = (hdot(g_k, z.col(user)) - (eta * p_t).sqrt() * norm_sq(g_k))
                / Complex64::new((cfg.m as f64 * d_k).sqrt(), 0.0);
            acc += resid.norm_sqr();
        }
        let emp = acc / trials as f64;
        assert!(
            ((emp - s2e[user]) / s2e[user]).abs() < 0.05,
            "residual power {emp:e} vs sigma_e^2 {:e}",
            s2e[user]
        );
    }

    #[test]
    fn split_id_stream_power() {
        let rho = 0.35;
        let sigma2_s = 0.04;
        let y = Complex64::new(0.9, 0.4);
        let n = 200_000u64;
        let mut acc = 0.0;
        for i in 0..n {
            let mut rng = substream(5, StreamRole::ProcessingNoise, i);
            acc += split_power(y, rho, sigma2_s, &mut rng)
                .unwrap()
                .id_stream
                .norm_sqr();
        }
        let emp = acc / n as f64;
        let expect = rho * y.norm_sqr() + sigma2_s;
        assert!(
            (emp - expect).abs() < 0.02 * expect,
            "E|id|^2 = {emp} vs {expect}"
        );
    }

    proptest::proptest! {
        #[test]
        fn splitter_conserves_power(re in -2.0f64..2.0, im in -2.0f64..2.0, rho in 0.0f64..1.0) {
            let y = Complex64::new(re, im);
            let mut rng = substream(6, StreamRole::ProcessingNoise, 0);
            let s = split_power(y, rho, 0.0, &mut rng).unwrap();
            // rho |y|^2 + (1-rho) |y|^2 = |y|^2 exactly per sample
            let total = rho * y.norm_sqr() + s.eh_power_sample;
            proptest::prop_assert!((total - y.norm_sqr()).abs() <= 1e-15 * y.norm_sqr().max(1e-300));
            proptest::prop_assert!((s.eh_power_sample - (1.0 - rho) * y.norm_sqr()).abs() <= f64::EPSILON * y.norm_sqr());
        }
    }
}
