//! `swipt` — experiment runner for the secure SWIPT massive-MIMO
//! simulation. Subcommands: `eval` (single parameter point), `sweep`
//! (TOML-specified parameter sweep), `reproduce figN` (figure presets
//! with assertions) and `optimize` (constrained secrecy maximization).

// configs are built as "defaults plus tweaks" throughout
#![allow(clippy::field_reassign_with_default)]

mod output;
mod presets;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use swipt_core::{
    energy_report_closed, load_config, maximize_secrecy, mc_rates, secrecy_asymptotic,
    secrecy_report, sigma_z_sq, EnergyBudget, ResolvedConfig, SystemConfig,
};

use output::{num, CsvSink};

#[derive(Parser)]
#[command(name = "swipt", version, about)]
struct Cli {
    /// TOML configuration file (defaults when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for every random substream.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Monte Carlo trials per point (presets have their own defaults).
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// CSV output path (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate closed forms, asymptotics and Monte Carlo at one point.
    Eval {
        /// Fraction of the user's harvested energy spent on pilots.
        #[arg(long, default_value_t = 0.7)]
        theta: f64,
        /// User power-splitting ratio.
        #[arg(long, default_value_t = 0.4)]
        rho_k: f64,
        /// Index of the user under study.
        #[arg(long, default_value_t = 0)]
        user: usize,
        /// Override the pilot power p_t (watts) directly.
        #[arg(long)]
        p_t: Option<f64>,
        /// Override the eavesdropper pilot power q_t (watts) directly.
        #[arg(long)]
        q_t: Option<f64>,
        /// Dump one channel realization (real/imag entry pairs) to a CSV.
        #[arg(long)]
        dump_realization: Option<PathBuf>,
    },
    /// Run a parameter sweep described by a TOML spec file.
    Sweep {
        /// Sweep specification file.
        #[arg(long)]
        spec: PathBuf,
        /// Append a wall-time column (makes re-runs non-identical).
        #[arg(long, default_value_t = false)]
        timings: bool,
    },
    /// Re-run a figure preset and check its headline assertion.
    Reproduce {
        /// One of fig2 .. fig9.
        figure: String,
    },
    /// Maximize the secrecy bound subject to harvested-energy constraints.
    Optimize {
        /// Minimum harvested energy required by the user (watt-seconds).
        #[arg(long)]
        q_min: f64,
        /// Maximum harvested energy allowed to the eavesdropper (watt-seconds).
        #[arg(long)]
        q_max: f64,
        /// Index of the user under study.
        #[arg(long, default_value_t = 0)]
        user: usize,
    },
}

fn resolved_config(cli: &Cli) -> anyhow::Result<ResolvedConfig> {
    match &cli.config {
        Some(path) => Ok(load_config(path)?),
        None => {
            let system = SystemConfig::default();
            let budget = EnergyBudget::saturation(&system);
            Ok(ResolvedConfig { system, budget })
        }
    }
}

/// Debug dump of one channel realization: user channels column by column
/// and then the eavesdropper channel, one (re, im) pair per cell.
fn dump_channel_realization(
    cfg: &SystemConfig,
    seed: u64,
    path: &std::path::Path,
) -> anyhow::Result<()> {
    use swipt_core::{draw_channels, substream, StreamRole};
    let ch = draw_channels(cfg, &mut substream(seed, StreamRole::Channel, 0));
    let mut sink = CsvSink::create(Some(path))?;
    sink.comment(&format!("channel realization, seed = {seed}"))?;
    let mut cols = vec!["antenna".to_string()];
    for u in 0..cfg.k {
        cols.push(format!("g{u}_re"));
        cols.push(format!("g{u}_im"));
    }
    cols.push("gw_re".to_string());
    cols.push("gw_im".to_string());
    sink.header(&cols.iter().map(String::as_str).collect::<Vec<_>>())?;
    for row in 0..cfg.m {
        let mut cells = vec![row.to_string()];
        for u in 0..cfg.k {
            let z = ch.g.get(row, u);
            cells.push(num(z.re));
            cells.push(num(z.im));
        }
        cells.push(num(ch.g_w[row].re));
        cells.push(num(ch.g_w[row].im));
        sink.row(&cells)?;
    }
    sink.finish()?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    cli: &Cli,
    theta: f64,
    rho_k: f64,
    user: usize,
    p_t_override: Option<f64>,
    q_t_override: Option<f64>,
    dump_realization: Option<&std::path::Path>,
) -> anyhow::Result<ExitCode> {
    let rc = resolved_config(cli)?;
    let cfg = rc.system;
    anyhow::ensure!(
        user < cfg.k,
        "user index {user} out of range (K = {})",
        cfg.k
    );
    anyhow::ensure!((0.0..=1.0).contains(&theta), "theta must lie in [0, 1]");
    anyhow::ensure!((0.0..=1.0).contains(&rho_k), "rho_k must lie in [0, 1]");
    let (mut p_t, mut q_t) = rc.budget.pilot_powers(&cfg, theta);
    if let Some(p) = p_t_override {
        p_t = p;
    }
    if let Some(q) = q_t_override {
        q_t = q;
    }
    let trials = cli.trials.unwrap_or(10_000);

    let rep = secrecy_report(&cfg, user, p_t, q_t, rho_k);
    let asym = secrecy_asymptotic(&cfg, user, p_t, q_t, rho_k);
    let energy = energy_report_closed(&cfg, p_t, q_t, rho_k);
    let mc = mc_rates(&cfg, user, p_t, q_t, rho_k, trials, cli.seed)?;
    let sz = sigma_z_sq(&cfg, p_t, q_t, cfg.rho_eve);

    if let Some(path) = dump_realization {
        dump_channel_realization(&cfg, cli.seed, path)?;
        println!("channel realization written to {}", path.display());
    }

    println!("point: theta = {theta}, rho_k = {rho_k}, user = {user}");
    println!("pilot powers: p_t = {} W, q_t = {} W", num(p_t), num(q_t));
    println!(
        "secrecy bound = {} bits/s/Hz (user {}, eavesdropper {}){}",
        num(rep.bound),
        num(rep.user_rate_bound),
        num(rep.eve_rate_bound),
        if rep.negative { "  [negative]" } else { "" }
    );
    println!(
        "secrecy MC    = {} +/- {} bits/s/Hz ({} trials)",
        num(mc.secrecy.mean),
        num(mc.secrecy.stderr),
        trials
    );
    println!(
        "rates MC      : user {} , eavesdropper {}",
        num(mc.user_rate.mean),
        num(mc.eve_rate.mean)
    );
    println!("asymptotic bound = {}", num(asym));
    println!(
        "harvested energy (closed): user avg = {} W s, eavesdropper = {} W s",
        num(energy.q_user.iter().sum::<f64>() / cfg.k as f64),
        num(energy.q_eve)
    );
    println!("sigma_Z^2 = {}", num(sz));

    if cli.out.is_some() {
        let mut sink = CsvSink::create(cli.out.as_deref())?;
        for line in output::config_comments(
            "eval",
            &cfg,
            &rc.budget,
            cli.seed,
            trials,
            &[
                ("theta", num(theta)),
                ("rho_k", num(rho_k)),
                ("user", user.to_string()),
                ("p_t", num(p_t)),
                ("q_t", num(q_t)),
            ],
        ) {
            sink.comment(&line)?;
        }
        sink.header(&[
            "bound_closed",
            "bound_asymptotic",
            "secrecy_mc",
            "secrecy_mc_stderr",
            "user_rate_mc",
            "eve_rate_mc",
            "q_user_closed",
            "q_eve_closed",
            "sigma_z_sq",
        ])?;
        sink.row(&[
            num(rep.bound),
            num(asym),
            num(mc.secrecy.mean),
            num(mc.secrecy.stderr),
            num(mc.user_rate.mean),
            num(mc.eve_rate.mean),
            num(energy.q_user.iter().sum::<f64>() / cfg.k as f64),
            num(energy.q_eve),
            num(sz),
        ])?;
        sink.finish()?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(cli: &Cli, spec_path: &std::path::Path, timings: bool) -> anyhow::Result<ExitCode> {
    let spec = sweep::load_spec(spec_path)?;
    let rc = match (&cli.config, &spec.config) {
        (Some(path), _) => load_config(path)?,
        (None, Some(path)) => load_config(path)?,
        (None, None) => {
            let system = SystemConfig::default();
            let budget = EnergyBudget::saturation(&system);
            ResolvedConfig { system, budget }
        }
    };
    let seed = spec.seed.unwrap_or(cli.seed);
    let trials = cli.trials.or(spec.trials).unwrap_or(10_000);
    let sink = CsvSink::create(cli.out.as_deref())?;
    sweep::run_sweep(&spec, &rc.system, &rc.budget, seed, trials, timings, sink)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_reproduce(cli: &Cli, figure: &str) -> anyhow::Result<ExitCode> {
    let trials = cli
        .trials
        .unwrap_or_else(|| presets::default_trials(figure));
    let sink = CsvSink::create(cli.out.as_deref())?;
    let run = presets::run(figure, cli.seed, trials, sink)?;
    for a in &run.assertions {
        eprintln!(
            "{figure} assertion: {} ... {}{}",
            a.name,
            if a.pass { "PASS" } else { "FAIL" },
            if a.detail.is_empty() {
                String::new()
            } else {
                format!(" ({})", a.detail)
            }
        );
    }
    Ok(if run.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_optimize(cli: &Cli, q_min: f64, q_max: f64, user: usize) -> anyhow::Result<ExitCode> {
    let rc = resolved_config(cli)?;
    let cfg = rc.system;
    anyhow::ensure!(
        user < cfg.k,
        "user index {user} out of range (K = {})",
        cfg.k
    );
    let rep = maximize_secrecy(&cfg, user, q_min, q_max).context("secrecy maximization failed")?;

    println!("theta* = {}", num(rep.theta_star));
    println!(
        "rho*   = {} (rho_max = {})",
        num(rep.rho_star),
        num(rep.rho_max)
    );
    println!("theta_min = {}", num(rep.theta_min));
    println!("R*     = {} bits/s/Hz", num(rep.r_star));
    println!(
        "steady-state energies at the optimum: Q_user = {} W s, Q_eve = {} W s",
        num(rep.q_user_star),
        num(rep.q_eve_star)
    );
    println!("binding constraints: {:?}", rep.binding);
    println!(
        "grid audit ({}x{}): max interior excess over border = {}",
        rep.audit.grid.0,
        rep.audit.grid.1,
        num(rep.audit.max_excess)
    );
    let clean = rep.audit.max_excess <= 1e-6;
    println!(
        "border optimality: {}",
        if clean { "CONFIRMED" } else { "VIOLATED" }
    );

    if cli.out.is_some() {
        let mut sink = CsvSink::create(cli.out.as_deref())?;
        for line in output::config_comments(
            "optimize",
            &cfg,
            &rc.budget,
            cli.seed,
            0,
            &[
                ("q_min", num(q_min)),
                ("q_max", num(q_max)),
                ("user", user.to_string()),
            ],
        ) {
            sink.comment(&line)?;
        }
        sink.header(&[
            "theta_star",
            "rho_star",
            "r_star",
            "rho_max",
            "theta_min",
            "q_user_star",
            "q_eve_star",
            "audit_max_excess",
        ])?;
        sink.row(&[
            num(rep.theta_star),
            num(rep.rho_star),
            num(rep.r_star),
            num(rep.rho_max),
            num(rep.theta_min),
            num(rep.q_user_star),
            num(rep.q_eve_star),
            num(rep.audit.max_excess),
        ])?;
        sink.finish()?;
    }
    Ok(if clean {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            eprintln!("error: could not configure {workers} workers: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match &cli.command {
        Command::Eval {
            theta,
            rho_k,
            user,
            p_t,
            q_t,
            dump_realization,
        } => cmd_eval(
            &cli,
            *theta,
            *rho_k,
            *user,
            *p_t,
            *q_t,
            dump_realization.as_deref(),
        ),
        Command::Sweep { spec, timings } => cmd_sweep(&cli, spec, *timings),
        Command::Reproduce { figure } => cmd_reproduce(&cli, figure),
        Command::Optimize { q_min, q_max, user } => cmd_optimize(&cli, *q_min, *q_max, *user),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
