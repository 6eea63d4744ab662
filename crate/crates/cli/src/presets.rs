//! Figure-reproduction presets. Each preset pins the scenario parameters
//! from the corresponding experiment, emits a CSV and checks the
//! figure's headline claim as an assertion.
//!
//! The harvested-energy chain needs a previous-frame pilot budget; the
//! default harvester ceiling (P_s (T - tau) ~ 5e-10 W s) yields pilot
//! SNRs around -35 dB at these geometries, where every curve is flat
//! zero. Presets therefore pin a live reference budget and record it in
//! the CSV comment header.

use swipt_core::{
    draw_scenario, energy_report_closed, energy_report_empirical, mc_rates, monotonicity_check,
    nonlinear_eh, secrecy_asymptotic, secrecy_bound_closed, secrecy_report, EnergyBudget, GridSpec,
    SystemConfig,
};

use crate::output::{num, CsvSink};
use crate::sweep::row_seed;

/// Reference previous-frame harvested energy used by the presets.
pub const PRESET_BUDGET: EnergyBudget = EnergyBudget {
    q_user: 4e-6,
    q_eve: 4e-6,
};

pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Assertion {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Assertion {
            name: name.to_string(),
            pass,
            detail,
        }
    }
}

pub struct PresetRun {
    pub assertions: Vec<Assertion>,
}

impl PresetRun {
    pub fn all_pass(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }
}

fn fig_geometry_config() -> SystemConfig {
    // d_k = [11, 13, 16, 18], d_w = 15 (the defaults)
    SystemConfig::default()
}

fn single_distance_config(m: usize) -> SystemConfig {
    let mut cfg = SystemConfig::default();
    cfg.m = m;
    cfg.geometry.d_k = vec![13.0; cfg.k];
    cfg.geometry.d_w = 15.0;
    cfg
}

fn comments(
    sink: &mut CsvSink,
    preset: &str,
    cfg: &SystemConfig,
    budget: &EnergyBudget,
    seed: u64,
    trials: u64,
    extra: &[(&str, String)],
) -> anyhow::Result<()> {
    for line in crate::output::config_comments(preset, cfg, budget, seed, trials, extra) {
        sink.comment(&line)?;
    }
    Ok(())
}

fn r2_of_line(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (y - slope * x - icept).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|&y| (y - my) * (y - my)).sum();
    1.0 - ss_res / ss_tot
}

/// Average harvested energy vs number of antennas, rho in {0.1, 0.5, 0.8}.
pub fn fig2(seed: u64, trials: u64, mut sink: CsvSink) -> anyhow::Result<PresetRun> {
    let theta = 0.7;
    let rhos = [0.1, 0.5, 0.8];
    let ms: [usize; 9] = [64, 128, 256, 384, 512, 640, 768, 896, 1024];
    // equal distances keep the per-curve shape visible; a mixed geometry
    // averages users that cross the harvester threshold at different M
    let base = single_distance_config(200);
    comments(
        &mut sink,
        "reproduce fig2",
        &base,
        &PRESET_BUDGET,
        seed,
        trials,
        &[("theta", num(theta))],
    )?;
    sink.header(&[
        "m",
        "rho_k",
        "q_user_closed",
        "q_user_mc",
        "q_user_asymptotic",
    ])?;

    let mut worst_rel: f64 = 0.0;
    let mut curves: Vec<Vec<f64>> = Vec::new();
    let mut idx = 0u64;
    for &rho in &rhos {
        let mut curve = Vec::new();
        for &m in &ms {
            let mut cfg = base.clone();
            cfg.m = m;
            let (p_t, q_t) = PRESET_BUDGET.pilot_powers(&cfg, theta);
            let closed = energy_report_closed(&cfg, p_t, q_t, rho);
            let emp = energy_report_empirical(&cfg, p_t, q_t, rho, trials, row_seed(seed, idx))?;
            let asym = {
                let dur = cfg.harvest_duration();
                let curve_eh = cfg.eh.user_curve();
                (0..cfg.k)
                    .map(|u| {
                        let (p, _) = swipt_core::rf_power_asymptotic(&cfg, u, p_t, q_t, rho);
                        nonlinear_eh(p, &curve_eh, dur)
                    })
                    .sum::<f64>()
                    / cfg.k as f64
            };
            let qc = closed.q_user.iter().sum::<f64>() / cfg.k as f64;
            let qm = emp.q_user.iter().sum::<f64>() / cfg.k as f64;
            sink.row(&[m.to_string(), num(rho), num(qc), num(qm), num(asym)])?;
            // compare the received powers: the harvester curve is a shared
            // deterministic map whose relative error is unbounded right at
            // the sensitivity threshold
            for u in 0..cfg.k {
                worst_rel = worst_rel
                    .max(((emp.p_rf_user[u] - closed.p_rf_user[u]) / closed.p_rf_user[u]).abs());
            }
            curve.push(qc);
            idx += 1;
        }
        curves.push(curve);
    }
    sink.finish()?;

    // linearity applies to the live, pre-saturation stretch of each curve
    let mut min_r2 = f64::INFINITY;
    for curve in &curves {
        let pts: Vec<(f64, f64)> = ms
            .iter()
            .zip(curve)
            .filter(|&(_, &q)| q > 0.0)
            .map(|(&m, &q)| (m as f64, q))
            .collect();
        if pts.len() >= 3 {
            let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
            min_r2 = min_r2.min(r2_of_line(&xs, &ys));
        }
    }
    let mut decreasing = true;
    for ((&a, &b), &c) in curves[0].iter().zip(&curves[1]).zip(&curves[2]) {
        decreasing &= (a > b || (a == 0.0 && b == 0.0)) && (b > c || (b == 0.0 && c == 0.0));
    }

    Ok(PresetRun {
        assertions: vec![
            Assertion::new(
                "closed-form received power tracks Monte Carlo within 2%",
                worst_rel <= 0.02,
                format!("worst relative error {worst_rel:.4}"),
            ),
            Assertion::new(
                "harvested energy linear in M pre-saturation (R^2 > 0.999)",
                min_r2 > 0.999,
                format!("min R^2 = {min_r2:.6}"),
            ),
            Assertion::new(
                "harvested energy decreases with rho_k",
                decreasing,
                String::new(),
            ),
        ],
    })
}

/// Average harvested energy vs theta at the Fig. 3 geometry.
pub fn fig3(seed: u64, trials: u64, mut sink: CsvSink) -> anyhow::Result<PresetRun> {
    let rho = 0.4;
    let cfg = fig_geometry_config();
    comments(
        &mut sink,
        "reproduce fig3",
        &cfg,
        &PRESET_BUDGET,
        seed,
        trials,
        &[("rho_k", num(rho))],
    )?;
    sink.header(&["theta", "q_user_closed", "q_user_mc"])?;

    let mut worst_rel: f64 = 0.0;
    let mut prev = -1.0;
    let mut nondecreasing = true;
    for i in 1..=20u64 {
        let theta = i as f64 / 20.0;
        let (p_t, q_t) = PRESET_BUDGET.pilot_powers(&cfg, theta);
        let closed = energy_report_closed(&cfg, p_t, q_t, rho);
        let emp = energy_report_empirical(&cfg, p_t, q_t, rho, trials, row_seed(seed, i))?;
        let qc = closed.q_user.iter().sum::<f64>() / cfg.k as f64;
        let qm = emp.q_user.iter().sum::<f64>() / cfg.k as f64;
        sink.row(&[num(theta), num(qc), num(qm)])?;
        for u in 0..cfg.k {
            worst_rel = worst_rel
                .max(((emp.p_rf_user[u] - closed.p_rf_user[u]) / closed.p_rf_user[u]).abs());
        }
        nondecreasing &= qc >= prev;
        prev = qc;
    }
    sink.finish()?;
    Ok(PresetRun {
        assertions: vec![
            Assertion::new(
                "closed-form received power tracks Monte Carlo within 2%",
                worst_rel <= 0.02,
                format!("worst relative error {worst_rel:.4}"),
            ),
            Assertion::new(
                "harvested energy nondecreasing in theta",
                nondecreasing,
                String::new(),
            ),
        ],
    })
}

/// Secrecy rate vs theta: closed-form bound against Monte Carlo.
pub fn fig4(seed: u64, trials: u64, mut sink: CsvSink) -> anyhow::Result<PresetRun> {
    let rho = 0.4;
    let user = 1; // d_k = 13
    let cfg = fig_geometry_config();
    comments(
        &mut sink,
        "reproduce fig4",
        &cfg,
        &PRESET_BUDGET,
        seed,
        trials,
        &[("rho_k", num(rho)), ("user", user.to_string())],
    )?;
    sink.header(&[
        "theta",
        "bound_closed",
        "secrecy_mc",
        "secrecy_mc_stderr",
        "user_rate_mc",
        "eve_rate_mc",
        "bound_asymptotic",
    ])?;

    let mut sandwich = true;
    let mut detail = String::new();
    for i in 1..=10u64 {
        let theta = i as f64 / 10.0;
        let (p_t, q_t) = PRESET_BUDGET.pilot_powers(&cfg, theta);
        let bound = secrecy_bound_closed(&cfg, user, p_t, q_t, rho);
        let mc = mc_rates(&cfg, user, p_t, q_t, rho, trials, row_seed(seed, i))?;
        let asym = secrecy_asymptotic(&cfg, user, p_t, q_t, rho);
        sink.row(&[
            num(theta),
            num(bound),
            num(mc.secrecy.mean),
            num(mc.secrecy.stderr),
            num(mc.user_rate.mean),
            num(mc.eve_rate.mean),
            num(asym),
        ])?;
        let ok = bound <= mc.secrecy.mean + 3.0 * mc.secrecy.stderr;
        if !ok {
            detail = format!(
                "theta = {theta}: bound {bound:.4} vs MC {:.4} + 3 x {:.4}",
                mc.secrecy.mean, mc.secrecy.stderr
            );
        }
        sandwich &= ok;
    }
    sink.finish()?;
    Ok(PresetRun {
        assertions: vec![Assertion::new(
            "bound <= MC + 3 stderr at every theta",
            sandwich,
            detail,
        )],
    })
}

/// Active vs passive eavesdropper achievable rate vs theta.
pub fn fig5(seed: u64, trials: u64, mut sink: CsvSink) -> anyhow::Result<PresetRun> {
    let rho = 0.4;
    let user = 1;
    let cfg = fig_geometry_config(); // d_w = d_passive = 15
    comments(
        &mut sink,
        "reproduce fig5",
        &cfg,
        &PRESET_BUDGET,
        seed,
        trials,
        &[("rho_k", num(rho)), ("user", user.to_string())],
    )?;
    sink.header(&[
        "theta",
        "eve_rate_active_mc",
        "eve_rate_active_stderr",
        "eve_rate_passive_mc",
        "eve_rate_passive_stderr",
    ])?;

    let mut max_passive: f64 = 0.0;
    for i in 1..=10u64 {
        let theta = i as f64 / 10.0;
        let (p_t, q_t) = PRESET_BUDGET.pilot_powers(&cfg, theta);
        let active = mc_rates(&cfg, user, p_t, q_t, rho, trials, row_seed(seed, i))?;
        // a passive eavesdropper sends no pilot: q_t = 0
        let passive = mc_rates(&cfg, user, p_t, 0.0, rho, trials, row_seed(seed, 100 + i))?;
        sink.row(&[
            num(theta),
            num(active.eve_rate.mean),
            num(active.eve_rate.stderr),
            num(passive.eve_rate.mean),
            num(passive.eve_rate.stderr),
        ])?;
        max_passive = max_passive.max(passive.eve_rate.mean);
    }
    sink.finish()?;
    Ok(PresetRun {
        assertions: vec![Assertion::new(
            "passive eavesdropper rate below 0.05 bits/s/Hz",
            max_passive < 0.05,
            format!("max passive rate {max_passive:.4}"),
        )],
    })
}

/// Secrecy rate vs theta for (M, zeta) in {(200, 0.2), (400, 0.5), (800, 0.7)}.
pub fn fig6(seed: u64, trials: u64, mut sink: CsvSink) -> anyhow::Result<PresetRun> {
    let rho = 0.4;
    let user = 0;
    let base = single_distance_config(200);
    comments(
        &mut sink,
        "reproduce fig6",
        &base,
        &PRESET_BUDGET,
        seed,
        trials,
        &[("rho_k", num(rho))],
    )?;
    sink.header(&[
        "theta",
        "m",
        "zeta",
        "bound_closed",
        "secrecy_mc",
        "secrecy_mc_stderr",
    ])?;

    let mut sandwich = true;
    let mut idx = 0u64;
    for (m, zeta) in [(200usize, 0.2), (400, 0.5), (800, 0.7)] {
        for i in 1..=10u64 {
            let theta = i as f64 / 10.0;
            let mut cfg = single_distance_config(m);
            cfg.zeta = zeta;
            let (p_t, q_t) = PRESET_BUDGET.pilot_powers(&cfg, theta);
            let bound = secrecy_bound_closed(&cfg, user, p_t, q_t, rho);
            let mc = mc_rates(&cfg, user, p_t, q_t, rho, trials, row_seed(seed, idx))?;
            sink.row(&[
                num(theta),
                m.to_string(),
                num(zeta),
                num(bound),
                num(mc.secrecy.mean),
                num(mc.secrecy.stderr),
            ])?;
            sandwich &= bound <= mc.secrecy.mean + 3.0 * mc.secrecy.stderr;
            idx += 1;
        }
    }
    sink.finish()?;
    Ok(PresetRun {
        assertions: vec![Assertion::new(
            "bound <= MC + 3 stderr at every point",
            sandwich,
            String::new(),
        )],
    })
}

/// Achievable rates vs number of antennas.
pub fn fig7(seed: u64, trials: u64, mut sink: CsvSink) -> anyhow::Result<PresetRun> {
    let rho = 0.4;
    let theta = 0.7;
    let user = 0;
    // the eavesdropper's rate only saturates once its beamformed share
    // dominates; give it a heavier pilot budget so the knee sits inside
    // the swept range
    let budget = EnergyBudget {
        q_user: 4e-6,
        q_eve: 8e-5,
    };
    let base = single_distance_config(200);
    comments(
        &mut sink,
        "reproduce fig7",
        &base,
        &budget,
        seed,
        trials,
        &[("rho_k", num(rho)), ("theta", num(theta))],
    )?;
    sink.header(&[
        "m",
        "user_rate_mc",
        "user_rate_stderr",
        "eve_rate_mc",
        "eve_rate_stderr",
        "user_rate_bound",
        "eve_rate_bound",
    ])?;

    let ms = [16usize, 32, 64, 128, 256, 512, 1024, 2048];
    let mut rows = Vec::new();
    for (idx, &m) in ms.iter().enumerate() {
        let cfg = single_distance_config(m);
        let (p_t, q_t) = budget.pilot_powers(&cfg, theta);
        let mc = mc_rates(
            &cfg,
            user,
            p_t,
            q_t,
            rho,
            trials,
            row_seed(seed, idx as u64),
        )?;
        let rep = secrecy_report(&cfg, user, p_t, q_t, rho);
        sink.row(&[
            m.to_string(),
            num(mc.user_rate.mean),
            num(mc.user_rate.stderr),
            num(mc.eve_rate.mean),
            num(mc.eve_rate.stderr),
            num(rep.user_rate_bound),
            num(rep.eve_rate_bound),
        ])?;
        rows.push((m, mc));
    }
    sink.finish()?;

    let user_grows = rows
        .windows(2)
        .all(|w| w[1].1.user_rate.mean > w[0].1.user_rate.mean);
    let mut eve_flat = true;
    let mut detail = String::new();
    for w in rows.windows(2) {
        let (m0, a) = &w[0];
        let (m1, b) = &w[1];
        if *m0 >= 512 {
            let diff = (b.eve_rate.mean - a.eve_rate.mean).abs();
            let se = (a.eve_rate.stderr.powi(2) + b.eve_rate.stderr.powi(2)).sqrt();
            if diff >= 2.0 * se {
                eve_flat = false;
                detail = format!("M {m0} -> {m1}: diff {diff:.2e} vs 2se {:.2e}", 2.0 * se);
            }
        }
    }
    Ok(PresetRun {
        assertions: vec![
            Assertion::new(
                "user rate strictly increases with M",
                user_grows,
                String::new(),
            ),
            Assertion::new(
                "eavesdropper rate flat within noise for M >= 512",
                eve_flat,
                detail,
            ),
        ],
    })
}

/// Positivity of the secrecy bound over random geometries.
pub fn fig8(seed: u64, _trials: u64, mut sink: CsvSink) -> anyhow::Result<PresetRun> {
    let rho = 0.4;
    let user = 0;
    let base = fig_geometry_config();
    comments(
        &mut sink,
        "reproduce fig8",
        &base,
        &PRESET_BUDGET,
        seed,
        0,
        &[("rho_k", num(rho)), ("geometries", "1000".to_string())],
    )?;
    sink.header(&["geometry", "d_w", "min_bound", "argmin_theta", "positive"])?;

    let mut all_positive = true;
    let mut detail = String::new();
    for g in 0..1000u64 {
        let mut cfg = base.clone();
        cfg.geometry = draw_scenario(row_seed(seed, g), cfg.k, 10.0, 20.0)?;
        let mut min_bound = f64::INFINITY;
        let mut arg = 0.0;
        for i in 0..48 {
            let theta = 0.06 + (1.0 - 0.06) * i as f64 / 47.0;
            let (p_t, q_t) = PRESET_BUDGET.pilot_powers(&cfg, theta);
            let b = secrecy_bound_closed(&cfg, user, p_t, q_t, rho);
            if b < min_bound {
                min_bound = b;
                arg = theta;
            }
        }
        let positive = min_bound > 0.0;
        if !positive && detail.is_empty() {
            detail = format!(
                "geometry {g} (d_w = {:.2}): bound {min_bound:.4} at theta = {arg:.3}",
                cfg.geometry.d_w
            );
        }
        all_positive &= positive;
        sink.row(&[
            g.to_string(),
            num(cfg.geometry.d_w),
            num(min_bound),
            num(arg),
            (positive as u8).to_string(),
        ])?;
    }
    sink.finish()?;
    Ok(PresetRun {
        assertions: vec![Assertion::new(
            "bound positive for theta > 0.05 across 1000 geometries",
            all_positive,
            detail,
        )],
    })
}

/// Positivity of the theta-derivative of the bound over random geometries.
pub fn fig9(seed: u64, _trials: u64, mut sink: CsvSink) -> anyhow::Result<PresetRun> {
    let base = fig_geometry_config();
    comments(
        &mut sink,
        "reproduce fig9",
        &base,
        &PRESET_BUDGET,
        seed,
        0,
        &[("geometries", "100".to_string())],
    )?;
    sink.header(&[
        "geometry",
        "min_dtheta",
        "argmin_theta",
        "argmin_rho",
        "positive",
    ])?;

    let grid = GridSpec {
        theta_lo: 0.1,
        theta_hi: 1.0,
        rho_lo: 0.05,
        rho_hi: 0.95,
        n_theta: 25,
        n_rho: 25,
    };
    let mut all_positive = true;
    for g in 0..100u64 {
        let mut cfg = base.clone();
        cfg.geometry = draw_scenario(row_seed(seed, 5000 + g), cfg.k, 10.0, 20.0)?;
        let rep = monotonicity_check(&cfg, 0, &grid, PRESET_BUDGET.q_user, PRESET_BUDGET.q_eve)?;
        all_positive &= rep.all_dtheta_positive;
        sink.row(&[
            g.to_string(),
            num(rep.min_dtheta),
            num(rep.argmin_dtheta.0),
            num(rep.argmin_dtheta.1),
            (rep.all_dtheta_positive as u8).to_string(),
        ])?;
    }
    sink.finish()?;
    Ok(PresetRun {
        assertions: vec![Assertion::new(
            "d(bound)/d(theta) positive across geometries and grid",
            all_positive,
            String::new(),
        )],
    })
}

/// Default trial count per preset point.
pub fn default_trials(figure: &str) -> u64 {
    match figure {
        "fig2" | "fig3" => 30_000,
        "fig6" | "fig7" => 5_000,
        _ => 10_000,
    }
}

pub fn run(figure: &str, seed: u64, trials: u64, sink: CsvSink) -> anyhow::Result<PresetRun> {
    match figure {
        "fig2" => fig2(seed, trials, sink),
        "fig3" => fig3(seed, trials, sink),
        "fig4" => fig4(seed, trials, sink),
        "fig5" => fig5(seed, trials, sink),
        "fig6" => fig6(seed, trials, sink),
        "fig7" => fig7(seed, trials, sink),
        "fig8" => fig8(seed, trials, sink),
        "fig9" => fig9(seed, trials, sink),
        other => anyhow::bail!("unknown figure id {other:?} (expected fig2 through fig9)"),
    }
}
