//! Secrecy-rate maximization: the cross-frame harvested-energy fixed
//! point, constraint inversion to (rho_max, theta_min), the border-point
//! optimum and the monotonicity verification behind it.

use rayon::prelude::*;

use crate::energy::{nonlinear_eh, rf_power_eve_closed, rf_power_user_closed};
use crate::secrecy::secrecy_bound_closed;
use crate::sysmodel::SystemConfig;
use crate::Error;

/// Guard width for the open interval rho in (0, 1).
pub const RHO_GUARD: f64 = 1e-6;
const BISECT_TOL: f64 = 1e-9;

/// Converged cross-frame energy state.
#[derive(Clone, Debug)]
pub struct SteadyState {
    /// Harvested energy of every user under the common pilot power.
    pub q_user: Vec<f64>,
    pub q_eve: f64,
    /// Pilot powers implied by the anchor user's harvest: p_t = theta Q_k / eta.
    pub p_t: f64,
    pub q_t: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Whole network below the harvester sensitivity.
    pub dead: bool,
}

/// Solve the cross-frame fixed point for the anchor user `user`:
/// harvested energy -> pilot powers -> estimation quality -> received RF
/// power -> harvested energy, iterated with damping 0.5.
pub fn steady_state_energy(
    cfg: &SystemConfig,
    user: usize,
    rho_k: f64,
    theta: f64,
    tol: f64,
    max_iter: usize,
) -> Result<SteadyState, Error> {
    if !(tol > 0.0) {
        return Err(Error::Domain(
            "fixed-point tolerance must be positive".into(),
        ));
    }
    if !(0.0..=1.0).contains(&rho_k) || !(0.0..=1.0).contains(&theta) {
        return Err(Error::Domain(format!(
            "rho_k = {rho_k} and theta = {theta} must lie in [0, 1]"
        )));
    }
    let eta = cfg.eta as f64;
    let dur = cfg.harvest_duration();
    let user_curve = cfg.eh.user_curve();
    let eve_curve = cfg.eh.eve_curve();
    let map = |qk: f64, qe: f64| -> (f64, f64) {
        let p_t = theta * qk / eta;
        let q_t = cfg.zeta * qe / eta;
        let p_u = rf_power_user_closed(cfg, user, p_t, q_t, rho_k);
        let p_e = rf_power_eve_closed(cfg, p_t, q_t, cfg.rho_eve);
        (
            nonlinear_eh(p_u, &user_curve, dur),
            nonlinear_eh(p_e, &eve_curve, dur),
        )
    };

    let ceiling_u = cfg.eh.p_s_user * dur;
    let ceiling_e = cfg.eh.p_s_eve * dur;
    let floor_u = ceiling_u * tol;
    let floor_e = ceiling_e * tol;
    let mut qk = ceiling_u;
    let mut qe = ceiling_e;
    let rel = |old: f64, new: f64| -> f64 {
        let scale = old.abs().max(new.abs());
        if scale == 0.0 {
            0.0
        } else {
            (new - old).abs() / scale
        }
    };

    for it in 1..=max_iter {
        let (fk, fe) = map(qk, qe);
        if fk == 0.0 && fe == 0.0 {
            let (zk, ze) = map(0.0, 0.0);
            if zk == 0.0 && ze == 0.0 {
                return Ok(SteadyState {
                    q_user: vec![0.0; cfg.k],
                    q_eve: 0.0,
                    p_t: 0.0,
                    q_t: 0.0,
                    iterations: it,
                    converged: true,
                    dead: true,
                });
            }
        }
        let mut nk = qk + 0.5 * (fk - qk);
        let mut ne = qe + 0.5 * (fe - qe);
        // energies below tol x ceiling cannot influence anything upstream
        if nk < floor_u {
            nk = 0.0;
        }
        if ne < floor_e {
            ne = 0.0;
        }
        let change = rel(qk, nk).max(rel(qe, ne));
        qk = nk;
        qe = ne;
        if change < tol {
            let p_t = theta * qk / eta;
            let q_t = cfg.zeta * qe / eta;
            let mut q_user: Vec<f64> = (0..cfg.k)
                .map(|u| {
                    nonlinear_eh(
                        rf_power_user_closed(cfg, u, p_t, q_t, rho_k),
                        &user_curve,
                        dur,
                    )
                })
                .collect();
            // the anchor's reported harvest is the converged iterate, so
            // p_t = theta Q_k / eta holds exactly in the returned state
            q_user[user] = qk;
            return Ok(SteadyState {
                q_user,
                q_eve: qe,
                p_t,
                q_t,
                iterations: it,
                converged: true,
                dead: qk == 0.0 && qe == 0.0,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        q_user: qk,
        q_eve: qe,
    })
}

fn steady_q_user(cfg: &SystemConfig, user: usize, rho: f64, theta: f64) -> Result<f64, Error> {
    Ok(steady_state_energy(cfg, user, rho, theta, 1e-9, 1000)?.q_user[user])
}

fn steady_q_eve(cfg: &SystemConfig, user: usize, rho: f64, theta: f64) -> Result<f64, Error> {
    Ok(steady_state_energy(cfg, user, rho, theta, 1e-9, 1000)?.q_eve)
}

/// Largest power-splitting ratio whose steady-state harvest still meets
/// `q_min`, by bisection on [0, 1] (the harvest is strictly decreasing
/// in rho).
pub fn rho_max(cfg: &SystemConfig, user: usize, theta: f64, q_min: f64) -> Result<f64, Error> {
    if q_min < 0.0 {
        return Err(Error::Domain("Q_min must be nonnegative".into()));
    }
    if q_min == 0.0 {
        return Ok(1.0);
    }
    let mut lo = 0.0;
    if steady_q_user(cfg, user, lo, theta)? < q_min {
        return Err(Error::Infeasible(format!(
            "even rho = 0 harvests less than Q_min = {q_min:e}"
        )));
    }
    let mut hi = 1.0;
    if steady_q_user(cfg, user, hi, theta)? >= q_min {
        return Ok(1.0);
    }
    while hi - lo > BISECT_TOL {
        let mid = 0.5 * (lo + hi);
        if steady_q_user(cfg, user, mid, theta)? >= q_min {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Smallest pilot-allocation fraction that keeps the eavesdropper's
/// steady-state harvest below `q_max` (strictly decreasing in theta).
pub fn theta_min(cfg: &SystemConfig, user: usize, rho_k: f64, q_max: f64) -> Result<f64, Error> {
    if !(q_max > 0.0) {
        return Err(Error::Domain("Q_max must be strictly positive".into()));
    }
    if steady_q_eve(cfg, user, rho_k, 1.0)? > q_max {
        return Err(Error::Infeasible(format!(
            "eavesdropper harvests more than Q_max = {q_max:e} even at theta = 1"
        )));
    }
    let mut lo = 0.0;
    if steady_q_eve(cfg, user, rho_k, lo)? <= q_max {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while hi - lo > BISECT_TOL {
        let mid = 0.5 * (lo + hi);
        if steady_q_eve(cfg, user, rho_k, mid)? <= q_max {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Which constraints pinned the reported optimum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Binding {
    UserEnergyCapsRho,
    RhoGuard,
    ThetaAtUpperBound,
    EveEnergyFloorsTheta,
}

/// Result of the interior grid audit around the border optimum.
#[derive(Clone, Copy, Debug)]
pub struct AuditReport {
    pub grid: (usize, usize),
    /// Largest amount an interior point beat the border by (<= 0 when the
    /// border is the maximum, small positive numbers mean a violation).
    pub max_excess: f64,
    pub worst_point: (f64, f64),
}

#[derive(Clone, Debug)]
pub struct OptimumReport {
    pub theta_star: f64,
    pub rho_star: f64,
    pub r_star: f64,
    pub rho_max: f64,
    pub theta_min: f64,
    pub feasible: bool,
    pub binding: Vec<Binding>,
    pub audit: AuditReport,
    /// Steady-state energies at the optimum, which also define the pilot
    /// powers the objective was evaluated with.
    pub q_user_star: f64,
    pub q_eve_star: f64,
}

/// Secrecy bound as a function of (theta, rho) for fixed previous-frame
/// energy references.
pub fn bound_for_allocation(
    cfg: &SystemConfig,
    user: usize,
    theta: f64,
    rho_k: f64,
    q_user_ref: f64,
    q_eve_ref: f64,
) -> f64 {
    let eta = cfg.eta as f64;
    let p_t = theta * q_user_ref / eta;
    let q_t = cfg.zeta * q_eve_ref / eta;
    secrecy_bound_closed(cfg, user, p_t, q_t, rho_k)
}

/// Maximize the secrecy bound subject to Q_k >= q_min and Q_Eve <= q_max.
///
/// The objective is strictly increasing in both theta and rho over the
/// feasible box, so the optimum sits on its border: theta* = 1 and
/// rho* = rho_max. A 50 x 50 interior grid audit double-checks that no
/// audited point beats the border value.
pub fn maximize_secrecy(
    cfg: &SystemConfig,
    user: usize,
    q_min: f64,
    q_max: f64,
) -> Result<OptimumReport, Error> {
    let theta_star = 1.0;
    let rho_cap = rho_max(cfg, user, theta_star, q_min)?;
    let rho_star = rho_cap.clamp(RHO_GUARD, 1.0 - RHO_GUARD);
    let t_min = theta_min(cfg, user, rho_star, q_max)?;

    let state = steady_state_energy(cfg, user, rho_star, theta_star, 1e-9, 1000)?;
    let q_user_ref = state.q_user[user];
    let q_eve_ref = state.q_eve;
    let r_star = bound_for_allocation(cfg, user, theta_star, rho_star, q_user_ref, q_eve_ref);

    let n = 50usize;
    let theta_lo = t_min.max(RHO_GUARD);
    let rho_lo = RHO_GUARD;
    let mut max_excess = f64::NEG_INFINITY;
    let mut worst = (theta_lo, rho_lo);
    for i in 0..n {
        let theta = theta_lo + (theta_star - theta_lo) * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let rho = rho_lo + (rho_star - rho_lo) * j as f64 / (n - 1) as f64;
            let r = bound_for_allocation(cfg, user, theta, rho, q_user_ref, q_eve_ref);
            let excess = r - r_star;
            if excess > max_excess {
                max_excess = excess;
                worst = (theta, rho);
            }
        }
    }

    let mut binding = vec![Binding::ThetaAtUpperBound];
    if rho_cap < 1.0 - RHO_GUARD {
        binding.push(Binding::UserEnergyCapsRho);
    } else {
        binding.push(Binding::RhoGuard);
    }
    if t_min > 0.0 {
        binding.push(Binding::EveEnergyFloorsTheta);
    }

    Ok(OptimumReport {
        theta_star,
        rho_star,
        r_star,
        rho_max: rho_cap,
        theta_min: t_min,
        feasible: true,
        binding,
        audit: AuditReport {
            grid: (n, n),
            max_excess,
            worst_point: worst,
        },
        q_user_star: q_user_ref,
        q_eve_star: q_eve_ref,
    })
}

/// Rectangular (theta, rho) grid for the monotonicity scan.
#[derive(Clone, Copy, Debug)]
pub struct GridSpec {
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub rho_lo: f64,
    pub rho_hi: f64,
    pub n_theta: usize,
    pub n_rho: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct MonotonicityReport {
    pub points: usize,
    pub min_drho: f64,
    pub min_dtheta: f64,
    pub argmin_drho: (f64, f64),
    pub argmin_dtheta: (f64, f64),
    pub all_drho_positive: bool,
    pub all_dtheta_positive: bool,
    /// Worst relative disagreement between the finite-difference and the
    /// closed-form rho-derivative.
    pub max_rel_err_drho: f64,
}

/// Closed-form partial derivative of the bound with respect to rho_k
/// (the eavesdropper term does not depend on rho_k).
pub fn secrecy_bound_drho(cfg: &SystemConfig, user: usize, p_t: f64, q_t: f64, rho_k: f64) -> f64 {
    let terms = crate::secrecy::sinr_terms(cfg, user, p_t, q_t, rho_k);
    // un-scale the rho-weighted pieces
    let s = terms.user_signal / rho_k;
    let i = (terms.user_interference - cfg.sigma2_s) / rho_k;
    let c = cfg.prelog() / std::f64::consts::LN_2;
    c * cfg.sigma2_s * s / ((rho_k * (s + i) + cfg.sigma2_s) * (rho_k * i + cfg.sigma2_s))
}

/// Central-difference partial derivatives of the bound over a grid,
/// cross-checked against the closed-form rho-derivative.
pub fn monotonicity_check(
    cfg: &SystemConfig,
    user: usize,
    grid: &GridSpec,
    q_user_ref: f64,
    q_eve_ref: f64,
) -> Result<MonotonicityReport, Error> {
    if !(grid.theta_lo > 0.05) {
        return Err(Error::Domain(
            "monotonicity scan requires theta > 0.05 (the bound may go negative below)".into(),
        ));
    }
    if !(grid.theta_hi <= 1.0 && grid.rho_lo > 0.0 && grid.rho_hi < 1.0) {
        return Err(Error::Domain(
            "grid must lie inside the feasible box".into(),
        ));
    }
    let h = 1e-6;
    let eta = cfg.eta as f64;
    let q_t = cfg.zeta * q_eve_ref / eta;

    let points: Vec<(f64, f64)> = (0..grid.n_theta)
        .flat_map(|i| {
            let theta = grid.theta_lo
                + (grid.theta_hi - grid.theta_lo) * i as f64 / (grid.n_theta - 1).max(1) as f64;
            (0..grid.n_rho).map(move |j| {
                let rho = grid.rho_lo
                    + (grid.rho_hi - grid.rho_lo) * j as f64 / (grid.n_rho - 1).max(1) as f64;
                (theta, rho)
            })
        })
        .collect();

    let evals: Vec<(f64, f64, f64)> = points
        .par_iter()
        .map(|&(theta, rho)| {
            let f = |t: f64, r: f64| bound_for_allocation(cfg, user, t, r, q_user_ref, q_eve_ref);
            let drho = (f(theta, rho + h) - f(theta, rho - h)) / (2.0 * h);
            let dtheta = (f(theta + h, rho) - f(theta - h, rho)) / (2.0 * h);
            let closed = secrecy_bound_drho(cfg, user, theta * q_user_ref / eta, q_t, rho);
            let rel = if closed != 0.0 {
                ((drho - closed) / closed).abs()
            } else {
                drho.abs()
            };
            (drho, dtheta, rel)
        })
        .collect();

    let mut report = MonotonicityReport {
        points: points.len(),
        min_drho: f64::INFINITY,
        min_dtheta: f64::INFINITY,
        argmin_drho: (0.0, 0.0),
        argmin_dtheta: (0.0, 0.0),
        all_drho_positive: true,
        all_dtheta_positive: true,
        max_rel_err_drho: 0.0,
    };
    for ((theta, rho), (drho, dtheta, rel)) in points.iter().zip(&evals) {
        if *drho < report.min_drho {
            report.min_drho = *drho;
            report.argmin_drho = (*theta, *rho);
        }
        if *dtheta < report.min_dtheta {
            report.min_dtheta = *dtheta;
            report.argmin_dtheta = (*theta, *rho);
        }
        report.all_drho_positive &= *drho > 0.0;
        report.all_dtheta_positive &= *dtheta > 0.0;
        report.max_rel_err_drho = report.max_rel_err_drho.max(*rel);
    }
    Ok(report)
}
