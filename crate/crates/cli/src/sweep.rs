//! Parameter sweeps driven by a TOML sweep-specification file.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use serde::Deserialize;

use swipt_core::{
    energy_report_closed, energy_report_empirical, mc_rates, secrecy_asymptotic, secrecy_report,
    EnergyBudget, SystemConfig,
};

use crate::output::{num, CsvSink};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    M,
    Theta,
    RhoK,
    Zeta,
    DK,
    DW,
}

impl SweepParam {
    fn parse(s: &str) -> anyhow::Result<Self> {
        Ok(match s {
            "m" | "M" => SweepParam::M,
            "theta" => SweepParam::Theta,
            "rho_k" => SweepParam::RhoK,
            "zeta" => SweepParam::Zeta,
            "d_k" => SweepParam::DK,
            "d_w" => SweepParam::DW,
            other => bail!(
                "unknown sweep parameter {other:?} (expected m, theta, rho_k, zeta, d_k or d_w)"
            ),
        })
    }

    fn name(self) -> &'static str {
        match self {
            SweepParam::M => "m",
            SweepParam::Theta => "theta",
            SweepParam::RhoK => "rho_k",
            SweepParam::Zeta => "zeta",
            SweepParam::DK => "d_k",
            SweepParam::DW => "d_w",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    param: String,
    values: Vec<f64>,
    trials: Option<u64>,
    seed: Option<u64>,
    user: Option<usize>,
    theta: Option<f64>,
    rho_k: Option<f64>,
    config: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    sweep: SweepSection,
}

/// A parsed sweep specification.
#[derive(Debug)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub user: usize,
    pub theta: f64,
    pub rho_k: f64,
    pub config: Option<PathBuf>,
}

pub fn load_spec(path: &Path) -> anyhow::Result<SweepSpec> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading sweep spec {}", path.display()))?;
    let file: SweepFile = toml::from_str(&text).context("parsing sweep spec")?;
    let s = file.sweep;
    if s.values.is_empty() {
        bail!("sweep needs at least one value");
    }
    if let Some(t) = s.trials {
        if t == 0 {
            bail!("trials must be at least 1");
        }
    }
    Ok(SweepSpec {
        param: SweepParam::parse(&s.param)?,
        values: s.values,
        trials: s.trials,
        seed: s.seed,
        user: s.user.unwrap_or(0),
        theta: s.theta.unwrap_or(0.7),
        rho_k: s.rho_k.unwrap_or(0.4),
        config: s.config,
    })
}

/// Deterministic per-row seed derivation from the master seed.
pub fn row_seed(master: u64, idx: u64) -> u64 {
    let mut z = master ^ idx.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub struct SweepRow {
    pub value: f64,
    pub status: &'static str,
    pub cells: Vec<String>,
}

pub const SWEEP_COLUMNS: &[&str] = &[
    "status",
    "bound_closed",
    "bound_asymptotic",
    "secrecy_mc",
    "secrecy_mc_stderr",
    "user_rate_mc",
    "eve_rate_mc",
    "eve_rate_mc_stderr",
    "q_user_closed",
    "q_user_mc",
    "q_eve_closed",
    "q_eve_mc",
];

fn nan_cells() -> Vec<String> {
    SWEEP_COLUMNS[1..].iter().map(|_| num(f64::NAN)).collect()
}

/// Evaluate one sweep point; harvested-energy columns average over users.
#[allow(clippy::too_many_arguments)]
pub fn eval_point(
    base: &SystemConfig,
    budget: &EnergyBudget,
    param: SweepParam,
    value: f64,
    user: usize,
    theta: f64,
    rho_k: f64,
    trials: u64,
    seed: u64,
) -> SweepRow {
    let mut cfg = base.clone();
    let mut theta = theta;
    let mut rho_k = rho_k;
    match param {
        SweepParam::M => {
            if value < 1.0 || value.fract() != 0.0 {
                return SweepRow {
                    value,
                    status: "infeasible",
                    cells: nan_cells(),
                };
            }
            cfg.m = value as usize;
        }
        SweepParam::Theta => theta = value,
        SweepParam::RhoK => rho_k = value,
        SweepParam::Zeta => cfg.zeta = value,
        SweepParam::DK => {
            if user < cfg.geometry.d_k.len() {
                cfg.geometry.d_k[user] = value;
            }
        }
        SweepParam::DW => cfg.geometry.d_w = value,
    }
    let feasible = cfg.validate().is_ok()
        && (0.0..=1.0).contains(&theta)
        && (0.0..=1.0).contains(&rho_k)
        && user < cfg.k;
    if !feasible {
        return SweepRow {
            value,
            status: "infeasible",
            cells: nan_cells(),
        };
    }

    let (p_t, q_t) = budget.pilot_powers(&cfg, theta);
    let rep = secrecy_report(&cfg, user, p_t, q_t, rho_k);
    let asym = secrecy_asymptotic(&cfg, user, p_t, q_t, rho_k);
    let closed = energy_report_closed(&cfg, p_t, q_t, rho_k);
    let q_user_closed = closed.q_user.iter().sum::<f64>() / cfg.k as f64;

    let mc = mc_rates(&cfg, user, p_t, q_t, rho_k, trials, seed);
    let emp = energy_report_empirical(&cfg, p_t, q_t, rho_k, trials, seed);
    match (mc, emp) {
        (Ok(mc), Ok(emp)) => {
            let q_user_mc = emp.q_user.iter().sum::<f64>() / cfg.k as f64;
            SweepRow {
                value,
                status: "ok",
                cells: vec![
                    num(rep.bound),
                    num(asym),
                    num(mc.secrecy.mean),
                    num(mc.secrecy.stderr),
                    num(mc.user_rate.mean),
                    num(mc.eve_rate.mean),
                    num(mc.eve_rate.stderr),
                    num(q_user_closed),
                    num(q_user_mc),
                    num(closed.q_eve),
                    num(emp.q_eve),
                ],
            }
        }
        _ => SweepRow {
            value,
            status: "infeasible",
            cells: nan_cells(),
        },
    }
}

/// Run a sweep and emit its CSV. Points run in their listed order; each
/// derives its own seed, so output is identical for any worker count.
#[allow(clippy::too_many_arguments)]
pub fn run_sweep(
    spec: &SweepSpec,
    cfg: &SystemConfig,
    budget: &EnergyBudget,
    seed: u64,
    trials: u64,
    timings: bool,
    mut sink: CsvSink,
) -> anyhow::Result<()> {
    for line in crate::output::config_comments(
        "sweep",
        cfg,
        budget,
        seed,
        trials,
        &[
            ("sweep.param", spec.param.name().to_string()),
            ("sweep.user", spec.user.to_string()),
            ("sweep.theta", num(spec.theta)),
            ("sweep.rho_k", num(spec.rho_k)),
        ],
    ) {
        sink.comment(&line)?;
    }
    let mut cols: Vec<&str> = vec![spec.param.name()];
    cols.extend_from_slice(SWEEP_COLUMNS);
    if timings {
        cols.push("wall_time_s");
    }
    sink.header(&cols)?;

    for (idx, &value) in spec.values.iter().enumerate() {
        let started = Instant::now();
        let row = eval_point(
            cfg,
            budget,
            spec.param,
            value,
            spec.user,
            spec.theta,
            spec.rho_k,
            trials,
            row_seed(seed, idx as u64),
        );
        let mut cells = vec![num(row.value), row.status.to_string()];
        cells.extend(row.cells);
        if timings {
            cells.push(format!("{:.3}", started.elapsed().as_secs_f64()));
        }
        sink.row(&cells)?;
    }
    sink.finish()?;
    Ok(())
}
