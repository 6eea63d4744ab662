//! Acceptance suite: one test per verification criterion, each printing a
//! pass/fail line. Run with `cargo test -p swipt-core --test acceptance`
//! (add `-- --nocapture` to see the lines for passing criteria too).

// configs are built as "defaults plus tweaks" throughout
#![allow(clippy::field_reassign_with_default)]

use num_complex::Complex64;
use rayon::prelude::*;

use swipt_core::cmat::norm_sq;
use swipt_core::energy::pilot_denominator;
use swipt_core::*;

fn report(id: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {id}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "ACCEPTANCE {id} FAILED: {detail}");
}

fn fig_config() -> SystemConfig {
    // default noise powers and the mixed-distance geometry
    let cfg = SystemConfig::default();
    cfg.validate().unwrap();
    cfg
}

/// Pilot powers used throughout: a previous-frame energy budget of
/// 4e-6 W s on each side, split as p_t = theta Q / eta, q_t = zeta Q / eta.
fn live_budget() -> EnergyBudget {
    EnergyBudget {
        q_user: 4e-6,
        q_eve: 4e-6,
    }
}

/// Harvester curve whose transfer region sits in the received-power range
/// of the default geometry, so the cross-frame energy loop self-sustains.
fn live_eh_config() -> SystemConfig {
    let mut cfg = SystemConfig::default();
    cfg.eh = EhParams {
        a: 1e5,
        b: 3e-5,
        p_s_user: 2e-3,
        p_s_eve: 2e-3,
        p_sen: 1e-6,
    };
    cfg.validate().unwrap();
    cfg
}

#[test]
fn criterion_01_mmse_identity_and_empirical_variances() {
    // algebraic identity over random configurations
    use rand::Rng;
    let mut rng = substream(101, StreamRole::Scenario, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let k = rng.random_range(1..=6usize);
        let eta = rng.random_range(k..=8usize);
        let mut cfg = SystemConfig::default();
        cfg.k = k;
        cfg.eta = eta;
        cfg.geometry.d_k = (0..k).map(|_| rng.random_range(5.0..50.0)).collect();
        cfg.geometry.d_w = rng.random_range(5.0..50.0);
        cfg.sigma2 = 10f64.powf(rng.random_range(-14.0..-8.0));
        let p_t = 10f64.powf(rng.random_range(-10.0..-5.0));
        let q_t = 10f64.powf(rng.random_range(-10.0..-5.0));
        let (s2g, s2e) = estimation_stats(&cfg, p_t, q_t);
        for ((g, e), b) in s2g.iter().zip(&s2e).zip(&cfg.betas()) {
            worst = worst.max(((g + e - b) / b).abs());
        }
    }

    // empirical estimate/error variances against the closed forms
    let mut cfg = SystemConfig::default();
    cfg.m = 8;
    cfg.geometry.d_k = vec![10.0, 12.0, 15.0, 19.0];
    cfg.validate().unwrap();
    let (p_t, q_t) = (2e-7, 8e-8);
    let (s2g, s2e) = estimation_stats(&cfg, p_t, q_t);
    let trials = 100_000u64;
    let sums: Vec<(Vec<f64>, Vec<f64>)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let ch = draw_channels(&cfg, &mut substream(102, StreamRole::Channel, i));
            let pil =
                make_pilots(cfg.eta, cfg.k, &mut substream(102, StreamRole::Pilot, i)).unwrap();
            let tr = run_training(
                &cfg,
                &ch,
                &pil,
                p_t,
                q_t,
                &mut substream(102, StreamRole::UplinkNoise, i),
            )
            .unwrap();
            let m = cfg.m as f64;
            let est: Vec<f64> = (0..cfg.k).map(|u| norm_sq(tr.g_hat.col(u)) / m).collect();
            let err: Vec<f64> = (0..cfg.k)
                .map(|u| {
                    tr.g_hat
                        .col(u)
                        .iter()
                        .zip(ch.g.col(u))
                        .map(|(a, b)| (a - b).norm_sqr())
                        .sum::<f64>()
                        / m
                })
                .collect();
            (est, err)
        })
        .collect();
    let n = trials as f64;
    let mut worst_emp: f64 = 0.0;
    for u in 0..cfg.k {
        let eg: f64 = sums.iter().map(|(a, _)| a[u]).sum::<f64>() / n;
        let ee: f64 = sums.iter().map(|(_, b)| b[u]).sum::<f64>() / n;
        worst_emp = worst_emp.max(((eg - s2g[u]) / s2g[u]).abs());
        worst_emp = worst_emp.max(((ee - s2e[u]) / s2e[u]).abs());
    }

    report(
        "1 (MMSE identity + variance oracle)",
        worst <= 1e-12 && worst_emp <= 0.01,
        &format!("identity deviation {worst:.2e}, empirical variance error {worst_emp:.4}"),
    );
}

#[test]
fn criterion_02_rf_power_closed_vs_empirical() {
    let budget = live_budget();
    let mut worst: f64 = 0.0;
    let mut detail = String::new();
    for m in [64usize, 200, 512] {
        let mut cfg = fig_config();
        cfg.m = m;
        let (p_t, q_t) = budget.pilot_powers(&cfg, 0.7);
        let rho_k = 0.4;
        let closed = energy_report_closed(&cfg, p_t, q_t, rho_k);
        let emp = energy_report_empirical(&cfg, p_t, q_t, rho_k, 100_000, 202).unwrap();
        for u in 0..cfg.k {
            let rel = ((emp.p_rf_user[u] - closed.p_rf_user[u]) / closed.p_rf_user[u]).abs();
            worst = worst.max(rel);
        }
        let rel_eve = ((emp.p_rf_eve - closed.p_rf_eve) / closed.p_rf_eve).abs();
        worst = worst.max(rel_eve);
        detail.push_str(&format!("M={m} eve_err={rel_eve:.4} "));
    }
    report(
        "2 (received RF power closed form vs empirical, 2%)",
        worst <= 0.02,
        &format!("worst relative error {worst:.4}; {detail}"),
    );
}

#[test]
fn criterion_03_harvested_energy_linear_in_m_decreasing_in_rho() {
    // fully live grid: close users, strong pilots
    let mut cfg = fig_config();
    cfg.geometry.d_k = vec![10.0; 4];
    cfg.validate().unwrap();
    let (p_t, q_t) = (4e-6, 5e-7);
    let ms: Vec<usize> = (1..=16).map(|i| 64 * i).collect();
    let rhos = [0.1, 0.5, 0.8];
    let dur = cfg.harvest_duration();
    let curve = cfg.eh.user_curve();

    let mut worst_r2 = f64::INFINITY;
    let mut curves: Vec<Vec<f64>> = Vec::new();
    for &rho in &rhos {
        let q: Vec<f64> = ms
            .iter()
            .map(|&m| {
                let mut c = cfg.clone();
                c.m = m;
                nonlinear_eh(rf_power_user_closed(&c, 0, p_t, q_t, rho), &curve, dur)
            })
            .collect();
        assert!(q.iter().all(|&v| v > 0.0), "grid has dead points");
        // least-squares line Q = a M + b
        let n = ms.len() as f64;
        let mx = ms.iter().map(|&m| m as f64).sum::<f64>() / n;
        let my = q.iter().sum::<f64>() / n;
        let sxy: f64 = ms
            .iter()
            .zip(&q)
            .map(|(&m, &v)| (m as f64 - mx) * (v - my))
            .sum();
        let sxx: f64 = ms.iter().map(|&m| (m as f64 - mx).powi(2)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let ss_res: f64 = ms
            .iter()
            .zip(&q)
            .map(|(&m, &v)| (v - (slope * m as f64 + intercept)).powi(2))
            .sum();
        let ss_tot: f64 = q.iter().map(|&v| (v - my).powi(2)).sum();
        let r2 = 1.0 - ss_res / ss_tot;
        worst_r2 = worst_r2.min(r2);
        curves.push(q);
    }
    let mut strictly_decreasing = true;
    for ((&a, &b), &c) in curves[0].iter().zip(&curves[1]).zip(&curves[2]) {
        strictly_decreasing &= a > b && b > c;
    }
    report(
        "3 (harvested energy: linear in M, decreasing in rho)",
        worst_r2 > 0.999 && strictly_decreasing,
        &format!("min R^2 = {worst_r2:.6}, strict decrease in rho = {strictly_decreasing}"),
    );
}

#[test]
fn criterion_04_nonlinear_eh_properties() {
    let cfg = fig_config();
    let curve = cfg.eh.user_curve();
    let dur = cfg.harvest_duration();

    let below = (0..100).all(|i| {
        let p = curve.p_sen * i as f64 / 99.0;
        nonlinear_eh(p, &curve, dur) == 0.0
    });

    let mut monotone = true;
    let mut prev = -1.0;
    for i in 0..1000 {
        let p = 5e-2 * i as f64 / 999.0;
        let q = nonlinear_eh(p, &curve, dur);
        monotone &= q >= prev;
        prev = q;
    }

    let q_top = nonlinear_eh(1.0, &curve, dur);
    let ceiling = cfg.eh.p_s_user * dur;
    let sat_err = ((q_top - ceiling) / ceiling).abs();

    report(
        "4 (non-linear harvester: threshold, monotone, saturation)",
        below && monotone && sat_err < 1e-3,
        &format!("below-threshold zero = {below}, monotone = {monotone}, saturation error = {sat_err:.2e}"),
    );
}

#[test]
fn criterion_05_secrecy_bound_sandwich() {
    let cfg = fig_config();
    let budget = live_budget();
    let rho_k = 0.4;
    let user = 1; // d_k = 13
    let trials = 10_000u64;
    let mut all_sandwich = true;
    let mut worst_gap: f64 = 0.0;
    for i in 1..=10 {
        let theta = i as f64 / 10.0;
        let (p_t, q_t) = budget.pilot_powers(&cfg, theta);
        let bound = secrecy_bound_closed(&cfg, user, p_t, q_t, rho_k);
        let mc = mc_secrecy_rate(&cfg, user, p_t, q_t, rho_k, trials, 505).unwrap();
        let sandwich = bound <= mc.mean + 3.0 * mc.stderr;
        let gap = ((mc.mean - bound) / mc.mean).abs();
        all_sandwich &= sandwich;
        worst_gap = worst_gap.max(gap);
    }
    report(
        "5 (secrecy bound <= MC + 3se, gap < 15%)",
        all_sandwich && worst_gap < 0.15,
        &format!("sandwich everywhere = {all_sandwich}, worst gap = {worst_gap:.4}"),
    );
}

#[test]
fn criterion_06_chi_square_moment_oracle() {
    let beta = 0.7;
    let draws = 1_000_000u64;
    let mut worst: f64 = 0.0;
    for m in [1usize, 2, 4, 8] {
        let samples: Vec<(f64, f64)> = (0..draws)
            .into_par_iter()
            .map(|i| {
                let mut rng = substream(3606 + m as u64, StreamRole::Channel, i);
                let g = sysmodel::cn_vector(&mut rng, beta, m);
                (norm_sq(&g), g[0].norm_sqr())
            })
            .collect();
        let n = draws as f64;
        for order in 1..=4u32 {
            let emp: f64 = samples
                .iter()
                .map(|&(w, _)| w.powi(order as i32))
                .sum::<f64>()
                / n;
            let expect = gaussian_moments(m, beta, order).unwrap();
            worst = worst.max(((emp - expect) / expect).abs());
        }
        let emp_quartic: f64 = samples.iter().map(|&(_, e)| e * e).sum::<f64>() / n;
        worst = worst
            .max(((emp_quartic - quartic_entry_moment(beta)) / quartic_entry_moment(beta)).abs());
    }
    report(
        "6 (norm and entry moments vs brute force, 1%)",
        worst <= 0.01,
        &format!("worst relative error {worst:.4}"),
    );
}

/// Brute-force variance of the eavesdropper interference aggregate Z,
/// assembled from first principles (independent of the library's closed
/// form and of its Monte Carlo pipeline).
fn brute_force_var_z(cfg: &SystemConfig, p_t: f64, q_t: f64, trials: u64, seed: u64) -> f64 {
    let eta = cfg.eta as f64;
    let sums: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let ch = draw_channels(cfg, &mut substream(seed, StreamRole::Channel, i));
            let pil =
                make_pilots(cfg.eta, cfg.k, &mut substream(seed, StreamRole::Pilot, i)).unwrap();
            let mut rng = substream(seed, StreamRole::UplinkNoise, i);
            let mut total = 0.0;
            for u in 0..cfg.k {
                let c_u = pil.overlap(u);
                let noise = sysmodel::cn_vector(&mut rng, cfg.sigma2, cfg.m);
                let d_u = pilot_denominator(cfg, cfg.geometry.beta(u), p_t, q_t);
                let scale = 1.0 / (cfg.m as f64 * d_u).sqrt();
                let mut acc = Complex64::new(0.0, 0.0);
                for ((&g_row, &gw_row), &n_row) in ch.g.col(u).iter().zip(&ch.g_w).zip(&noise) {
                    let z_row =
                        (eta * p_t).sqrt() * g_row + (eta * q_t).sqrt() * c_u * gw_row + n_row;
                    acc += gw_row.conj() * z_row * scale;
                }
                total += acc.norm_sqr();
            }
            total
        })
        .collect();
    let n = trials as f64;
    let mean = sums.iter().sum::<f64>() / n;
    let var = sums.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
    (cfg.rho_eve * (cfg.w_e + 1.0)).powi(2) * var
}

#[test]
fn criterion_07_sigma_z_oracle_and_negligibility() {
    // small instances with unit-order parameters (d = 0.1 m gives beta = 1)
    let mut worst: f64 = 0.0;
    for (m, k, scale, seed) in [
        (4usize, 2usize, 1.0f64, 707u64),
        (8, 3, 1.0, 708),
        (4, 2, 10.0, 709),
    ] {
        let mut cfg = SystemConfig::default();
        cfg.m = m;
        cfg.k = k;
        cfg.eta = 4;
        // beta = 1e-3 d^-3 = scale at these distances
        let d = (1e-3 / scale).powf(1.0 / 3.0);
        cfg.geometry.d_k = (0..k).map(|j| d * (1.0 + 0.1 * j as f64)).collect();
        cfg.geometry.d_w = d * 1.05;
        cfg.sigma2 = 0.5 * scale;
        cfg.validate().unwrap();
        let (p_t, q_t) = (0.2, 0.15);
        let closed = sigma_z_sq(&cfg, p_t, q_t, cfg.rho_eve);
        let brute = brute_force_var_z(&cfg, p_t, q_t, 1_000_000, seed);
        worst = worst.max(((closed - brute) / brute).abs());
    }

    // C sigma_Z^2 negligibility against the eavesdropper log term
    let cfg = fig_config();
    let budget = live_budget();
    let c = jensen_constant(1.0).unwrap();
    let mut violations = Vec::new();
    for i in 1..=10 {
        let theta = i as f64 / 10.0;
        let (p_t, q_t) = budget.pilot_powers(&cfg, theta);
        for user in 0..cfg.k {
            let rep = secrecy_report(&cfg, user, p_t, q_t, 0.4);
            let csz = c * sigma_z_sq(&cfg, p_t, q_t, cfg.rho_eve);
            if csz >= 0.01 * rep.eve_rate_bound {
                violations.push((theta, user, csz, rep.eve_rate_bound));
            }
        }
    }
    if !violations.is_empty() {
        println!("C sigma_Z^2 negligibility violations: {violations:?}");
    }

    report(
        "7 (sigma_Z^2 brute-force oracle, 5% + negligibility)",
        worst <= 0.05 && violations.is_empty(),
        &format!(
            "worst oracle error {worst:.4}, negligibility violations {}",
            violations.len()
        ),
    );
}

#[test]
fn criterion_08_large_m_asymptotics() {
    let mut cfg = fig_config();
    cfg.geometry.d_k = vec![13.0; 4];
    cfg.validate().unwrap();
    let rho_k = 0.4;
    let user = 0;
    let (p_t, q_t) = (7e-7, 5e-6); // strong active eavesdropper
    let trials = 3000u64;

    cfg.m = 1024;
    let a = mc_rates(&cfg, user, p_t, q_t, rho_k, trials, 808).unwrap();
    cfg.m = 2048;
    let b = mc_rates(&cfg, user, p_t, q_t, rho_k, trials, 809).unwrap();
    let eve_diff = (b.eve_rate.mean - a.eve_rate.mean).abs();
    let eve_se = (a.eve_rate.stderr.powi(2) + b.eve_rate.stderr.powi(2)).sqrt();
    let eve_flat = eve_diff < 2.0 * eve_se;
    let user_grows = b.user_rate.mean > a.user_rate.mean;

    cfg.m = 4096;
    let full = secrecy_bound_closed(&cfg, user, p_t, q_t, rho_k);
    let asym = secrecy_asymptotic(&cfg, user, p_t, q_t, rho_k);
    let asym_err = ((full - asym) / full).abs();

    report(
        "8 (large M: eve rate flattens, user rate grows, asymptotic within 5%)",
        eve_flat && user_grows && asym_err < 0.05,
        &format!(
            "eve diff {eve_diff:.2e} vs 2se {:.2e}, user {:.4}->{:.4}, asym err {asym_err:.4}",
            2.0 * eve_se,
            a.user_rate.mean,
            b.user_rate.mean
        ),
    );
}

#[test]
fn criterion_09_monotonicity_over_random_geometries() {
    let grid = GridSpec {
        theta_lo: 0.1,
        theta_hi: 1.0,
        rho_lo: 0.05,
        rho_hi: 0.95,
        n_theta: 50,
        n_rho: 50,
    };
    let mut all_pos = true;
    let mut worst_rel: f64 = 0.0;
    let mut min_drho = f64::INFINITY;
    let mut min_dtheta = f64::INFINITY;
    for g in 0..100u64 {
        let mut cfg = fig_config();
        cfg.geometry = draw_scenario(900 + g, cfg.k, 10.0, 20.0).unwrap();
        cfg.validate().unwrap();
        let rep = monotonicity_check(&cfg, 0, &grid, 4e-6, 4e-6).unwrap();
        all_pos &= rep.all_drho_positive && rep.all_dtheta_positive;
        worst_rel = worst_rel.max(rep.max_rel_err_drho);
        min_drho = min_drho.min(rep.min_drho);
        min_dtheta = min_dtheta.min(rep.min_dtheta);
    }
    report(
        "9 (partial derivatives positive, closed-form match 1e-4)",
        all_pos && worst_rel < 1e-4,
        &format!(
            "all positive = {all_pos} (min d/drho {min_drho:.3e}, min d/dtheta {min_dtheta:.3e}), closed-form mismatch {worst_rel:.2e}"
        ),
    );
}

#[test]
fn criterion_10_optimizer_border_and_forward_checks() {
    let cfg = live_eh_config();
    let user = 1;
    let base = steady_state_energy(&cfg, user, 0.0, 1.0, 1e-9, 1000).unwrap();
    let q_min = 0.5 * base.q_user[user];
    let qe0 = steady_state_energy(&cfg, user, 0.4, 0.0, 1e-9, 1000)
        .unwrap()
        .q_eve;
    let q_max = 0.8 * qe0;

    let rep = maximize_secrecy(&cfg, user, q_min, q_max).unwrap();

    // forward checks of both bisections
    let q_at = steady_state_energy(&cfg, user, rep.rho_star, 1.0, 1e-9, 1000)
        .unwrap()
        .q_user[user];
    let rho_ok = q_at >= q_min * (1.0 - 1e-6) && q_at <= q_min * (1.0 + 1e-6);
    let qe_at = steady_state_energy(&cfg, user, rep.rho_star, rep.theta_min, 1e-9, 1000)
        .unwrap()
        .q_eve;
    let theta_ok = qe_at <= q_max * (1.0 + 1e-6);

    let border_ok = rep.audit.max_excess <= 1e-6;
    report(
        "10 (border optimum + bisection forward-verification)",
        rho_ok && theta_ok && border_ok,
        &format!(
            "Q(rho*)/Q_min = {:.9}, Q_eve(theta_min)/Q_max = {:.9}, audit max excess {:.2e}",
            q_at / q_min,
            qe_at / q_max,
            rep.audit.max_excess
        ),
    );
}

#[test]
fn worker_count_independence() {
    // the aggregate is an ordered fold over per-trial substreams, so any
    // thread count must give bit-identical results
    let cfg = fig_config();
    let (p_t, q_t) = live_budget().pilot_powers(&cfg, 0.7);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| mc_rates(&cfg, 1, p_t, q_t, 0.4, 2000, 1111).unwrap())
    };
    let a = run(1);
    let b = run(8);
    let same = a.secrecy.mean.to_bits() == b.secrecy.mean.to_bits()
        && a.secrecy.stderr.to_bits() == b.secrecy.stderr.to_bits()
        && a.user_rate.mean.to_bits() == b.user_rate.mean.to_bits()
        && a.eve_rate.mean.to_bits() == b.eve_rate.mean.to_bits();
    report(
        "determinism (library: 1 vs 8 workers bit-identical)",
        same,
        &format!("secrecy mean {:.12e}", a.secrecy.mean),
    );
}
