//! CSV emission with a `#`-prefixed comment header recording the fully
//! resolved configuration. Numeric cells carry 12 significant digits in
//! a locale-independent scientific format.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use swipt_core::{EnergyBudget, SystemConfig};

pub struct CsvSink {
    w: Box<dyn Write>,
}

impl CsvSink {
    pub fn create(path: Option<&Path>) -> anyhow::Result<Self> {
        let w: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout())),
        };
        Ok(CsvSink { w })
    }

    pub fn comment(&mut self, line: &str) -> anyhow::Result<()> {
        writeln!(self.w, "# {line}")?;
        Ok(())
    }

    pub fn header(&mut self, cols: &[&str]) -> anyhow::Result<()> {
        writeln!(self.w, "{}", cols.join(","))?;
        Ok(())
    }

    pub fn row(&mut self, cells: &[String]) -> anyhow::Result<()> {
        writeln!(self.w, "{}", cells.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> anyhow::Result<()> {
        self.w.flush()?;
        Ok(())
    }
}

/// 12 significant digits, scientific, locale-independent.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.11e}")
    }
}

/// Comment lines spelling out every resolved parameter of a run.
pub fn config_comments(
    command: &str,
    cfg: &SystemConfig,
    budget: &EnergyBudget,
    seed: u64,
    trials: u64,
    extra: &[(&str, String)],
) -> Vec<String> {
    let mut lines = vec![
        format!("command = {command}"),
        format!("seed = {seed}"),
        format!("trials = {trials}"),
        format!("m = {}", cfg.m),
        format!("k = {}", cfg.k),
        format!("eta = {}", cfg.eta),
        format!("t = {}", num(cfg.t)),
        format!("tau = {}", num(cfg.tau)),
        format!("sigma2 = {}", num(cfg.sigma2)),
        format!("sigma2_ant = {}", num(cfg.sigma2_ant)),
        format!("sigma2_s = {}", num(cfg.sigma2_s)),
        format!("w_e = {}", num(cfg.w_e)),
        format!("rho_eve = {}", num(cfg.rho_eve)),
        format!("zeta = {}", num(cfg.zeta)),
        format!("eh.a = {}", num(cfg.eh.a)),
        format!("eh.b = {}", num(cfg.eh.b)),
        format!("eh.p_s_user = {}", num(cfg.eh.p_s_user)),
        format!("eh.p_s_eve = {}", num(cfg.eh.p_s_eve)),
        format!("eh.p_sen = {}", num(cfg.eh.p_sen)),
        format!(
            "geometry.d_k = [{}]",
            cfg.geometry
                .d_k
                .iter()
                .map(|&d| num(d))
                .collect::<Vec<_>>()
                .join(", ")
        ),
        format!("geometry.d_w = {}", num(cfg.geometry.d_w)),
        format!("budget.q_user = {}", num(budget.q_user)),
        format!("budget.q_eve = {}", num(budget.q_eve)),
    ];
    for (k, v) in extra {
        lines.push(format!("{k} = {v}"));
    }
    lines
}
