//! System configuration, unit conversions, scenario geometry and the
//! deterministic random-stream contract shared by every other module.
//!
//! All powers are in watts, times in seconds, distances in meters and
//! harvested energy in watt-seconds. Rates are bits/s/Hz. dBm values are
//! accepted at the configuration-file boundary only.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::Error;

/// Non-linear energy-harvesting circuit constants.
///
/// `a` and `b` shape the logistic transfer curve, `p_s_*` are the
/// saturation levels of the user and eavesdropper harvesters and `p_sen`
/// is the sensitivity threshold below which nothing is harvested.
#[derive(Clone, Debug, PartialEq)]
pub struct EhParams {
    pub a: f64,
    pub b: f64,
    pub p_s_user: f64,
    pub p_s_eve: f64,
    pub p_sen: f64,
}

/// One receiver's harvester curve (user and eavesdropper share `a`, `b`,
/// `p_sen` but may saturate at different levels).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EhCurve {
    pub a: f64,
    pub b: f64,
    pub p_s: f64,
    pub p_sen: f64,
}

impl EhParams {
    pub fn user_curve(&self) -> EhCurve {
        EhCurve {
            a: self.a,
            b: self.b,
            p_s: self.p_s_user,
            p_sen: self.p_sen,
        }
    }

    pub fn eve_curve(&self) -> EhCurve {
        EhCurve {
            a: self.a,
            b: self.b,
            p_s: self.p_s_eve,
            p_sen: self.p_sen,
        }
    }

    fn validate(&self) -> Result<(), Error> {
        if !(self.a > 0.0) || !(self.b > 0.0) {
            return Err(Error::InvalidConfig(
                "EH constants a and b must be strictly positive".into(),
            ));
        }
        if !(self.p_s_user > 0.0) || !(self.p_s_eve > 0.0) {
            return Err(Error::InvalidConfig(
                "EH saturation power must be strictly positive".into(),
            ));
        }
        if !(self.p_sen >= 0.0) {
            return Err(Error::InvalidConfig(
                "EH sensitivity must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// User distances and the eavesdropper distance from the base station.
#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    pub d_k: Vec<f64>,
    pub d_w: f64,
}

/// All scalar parameters of the system model.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemConfig {
    /// Base-station antenna count M.
    pub m: usize,
    /// Number of single-antenna users K.
    pub k: usize,
    /// Pilot sequence length eta (symbols), eta >= K.
    pub eta: usize,
    /// Coherence interval T (seconds).
    pub t: f64,
    /// Training-phase duration tau (seconds), 0 < tau < T.
    pub tau: f64,
    /// BS training noise power sigma^2 (watts).
    pub sigma2: f64,
    /// Receiver antenna noise power sigma_ant^2 (watts).
    pub sigma2_ant: f64,
    /// Processing noise power sigma_s^2 (watts).
    pub sigma2_s: f64,
    /// Energy-symbol power relative to unit data-symbol power.
    pub w_e: f64,
    /// Eavesdropper power-splitting ratio rho_Eve in (0, 1).
    pub rho_eve: f64,
    /// Eavesdropper pilot-energy fraction zeta in [0, 1].
    pub zeta: f64,
    pub eh: EhParams,
    pub geometry: Geometry,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            m: 200,
            k: 4,
            eta: 4,
            t: 5e-3,
            tau: 4e-5,
            sigma2: dbm_to_watts(-90.0),
            sigma2_ant: dbm_to_watts(-70.0),
            sigma2_s: dbm_to_watts(-50.0),
            w_e: 1.0,
            rho_eve: 0.5,
            zeta: 0.5,
            eh: EhParams {
                a: 150.0,
                b: 0.014,
                p_s_user: dbm_to_watts(-40.0),
                p_s_eve: dbm_to_watts(-40.0),
                p_sen: 2.4e-5,
            },
            geometry: Geometry {
                d_k: vec![11.0, 13.0, 16.0, 18.0],
                d_w: 15.0,
            },
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.m == 0 || self.k == 0 || self.eta == 0 {
            return Err(Error::InvalidConfig("M, K and eta must be positive".into()));
        }
        if self.eta < self.k {
            return Err(Error::InvalidConfig(format!(
                "eta ({}) must be at least K ({}) so orthogonal user pilots exist",
                self.eta, self.k
            )));
        }
        if !(self.tau > 0.0 && self.tau < self.t) {
            return Err(Error::InvalidConfig(format!(
                "require 0 < tau < T, got tau = {}, T = {}",
                self.tau, self.t
            )));
        }
        for (name, v) in [
            ("sigma2", self.sigma2),
            ("sigma2_ant", self.sigma2_ant),
            ("sigma2_s", self.sigma2_s),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be a strictly positive power, got {v}"
                )));
            }
        }
        if !(self.w_e >= 0.0) || !self.w_e.is_finite() {
            return Err(Error::InvalidConfig(
                "W_E must be a nonnegative finite power ratio".into(),
            ));
        }
        if !(self.rho_eve > 0.0 && self.rho_eve < 1.0) {
            return Err(Error::InvalidConfig(
                "rho_eve must lie strictly inside (0, 1)".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.zeta) {
            return Err(Error::InvalidConfig("zeta must lie in [0, 1]".into()));
        }
        self.eh.validate()?;
        if self.geometry.d_k.len() != self.k {
            return Err(Error::InvalidConfig(format!(
                "geometry lists {} user distances for K = {}",
                self.geometry.d_k.len(),
                self.k
            )));
        }
        for &d in self.geometry.d_k.iter().chain([&self.geometry.d_w]) {
            if !(d > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "distances must be strictly positive, got {d}"
                )));
            }
        }
        Ok(())
    }

    /// Rate prelog factor (T - tau)/T.
    pub fn prelog(&self) -> f64 {
        (self.t - self.tau) / self.t
    }

    /// Downlink (harvesting) phase duration T - tau in seconds.
    pub fn harvest_duration(&self) -> f64 {
        self.t - self.tau
    }

    /// Large-scale fading coefficients of all users.
    pub fn betas(&self) -> Vec<f64> {
        self.geometry
            .d_k
            .iter()
            .map(|&d| pathloss_unchecked(d))
            .collect()
    }

    /// Large-scale fading coefficient of the eavesdropper.
    pub fn beta_w(&self) -> f64 {
        pathloss_unchecked(self.geometry.d_w)
    }
}

/// Per-frame pilot energy budget: the previous-frame harvested energies
/// the user and the eavesdropper draw their pilot symbols from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyBudget {
    pub q_user: f64,
    pub q_eve: f64,
}

impl EnergyBudget {
    /// Budget of a harvester running at its saturation ceiling for the
    /// whole downlink phase.
    pub fn saturation(cfg: &SystemConfig) -> Self {
        EnergyBudget {
            q_user: cfg.eh.p_s_user * cfg.harvest_duration(),
            q_eve: cfg.eh.p_s_eve * cfg.harvest_duration(),
        }
    }

    /// Pilot powers (p_t, q_t) for a given user allocation fraction theta.
    /// The eavesdropper always spends the fraction zeta of its budget.
    pub fn pilot_powers(&self, cfg: &SystemConfig, theta: f64) -> (f64, f64) {
        (
            theta * self.q_user / cfg.eta as f64,
            cfg.zeta * self.q_eve / cfg.eta as f64,
        )
    }
}

/// dBm to watts.
pub fn dbm_to_watts(x: f64) -> f64 {
    10f64.powf((x - 30.0) / 10.0)
}

/// Watts to dBm.
pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// Large-scale fading beta = 1e-3 * d^-3 for a distance in meters.
pub fn pathloss(d: f64) -> Result<f64, Error> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Domain(format!(
            "pathloss needs a strictly positive distance, got {d}"
        )));
    }
    Ok(1e-3 * d.powi(-3))
}

// Distances are used so often that config accessors unwrap through this;
// validation has already rejected nonpositive values.
fn pathloss_unchecked(d: f64) -> f64 {
    1e-3 * d.powi(-3)
}

impl Geometry {
    pub fn beta(&self, user: usize) -> f64 {
        pathloss_unchecked(self.d_k[user])
    }
}

/// Draw K user distances and one eavesdropper distance i.i.d. uniform on
/// `[lo, hi]`, deterministically from the master seed.
pub fn draw_scenario(seed: u64, k: usize, lo: f64, hi: f64) -> Result<Geometry, Error> {
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Domain(format!(
            "invalid distance range [{lo}, {hi}]"
        )));
    }
    let mut rng = substream(seed, StreamRole::Scenario, 0);
    let draw = |rng: &mut ChaCha8Rng| {
        let u: f64 = rand::Rng::random(rng);
        lo + u * (hi - lo)
    };
    let d_k = (0..k).map(|_| draw(&mut rng)).collect();
    let d_w = draw(&mut rng);
    Ok(Geometry { d_k, d_w })
}

/// Roles a random substream can play. Every randomized operation draws
/// from `substream(master, role, realization_index)`, so results do not
/// depend on how realizations are scheduled across workers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamRole {
    Scenario,
    Channel,
    Pilot,
    UplinkNoise,
    Symbols,
    AntennaNoise,
    ProcessingNoise,
}

impl StreamRole {
    fn tag(self) -> u64 {
        match self {
            StreamRole::Scenario => 0x5343_454e,
            StreamRole::Channel => 0x4348_414e,
            StreamRole::Pilot => 0x5049_4c4f,
            StreamRole::UplinkNoise => 0x554e_4f49,
            StreamRole::Symbols => 0x5359_4d42,
            StreamRole::AntennaNoise => 0x414e_4f49,
            StreamRole::ProcessingNoise => 0x504e_4f49,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based substream derivation: a (role, index) pair keyed by the
/// master seed expands into an independent 256-bit ChaCha seed.
pub fn substream(master: u64, role: StreamRole, index: u64) -> ChaCha8Rng {
    let mut state = master;
    let s0 = splitmix64(&mut state);
    state = s0 ^ role.tag().wrapping_mul(0xA076_1D64_78BD_642F);
    let s1 = splitmix64(&mut state);
    state = s1 ^ index.wrapping_mul(0xE703_7ED1_A0B4_28DB);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// One sample of a circularly symmetric complex Gaussian CN(0, variance).
pub fn cn_sample<R: rand::Rng>(rng: &mut R, variance: f64) -> num_complex::Complex64 {
    let s = (variance * 0.5).sqrt();
    let re: f64 = rng.sample(rand_distr::StandardNormal);
    let im: f64 = rng.sample(rand_distr::StandardNormal);
    num_complex::Complex64::new(re * s, im * s)
}

pub fn cn_vector<R: rand::Rng>(
    rng: &mut R,
    variance: f64,
    len: usize,
) -> Vec<num_complex::Complex64> {
    (0..len).map(|_| cn_sample(rng, variance)).collect()
}

// ---------------------------------------------------------------------
// Configuration file schema
// ---------------------------------------------------------------------

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemSection {
    m: Option<usize>,
    k: Option<usize>,
    eta: Option<usize>,
    t: Option<f64>,
    tau: Option<f64>,
    sigma2: Option<f64>,
    sigma2_dbm: Option<f64>,
    sigma2_ant: Option<f64>,
    sigma2_ant_dbm: Option<f64>,
    sigma2_s: Option<f64>,
    sigma2_s_dbm: Option<f64>,
    w_e: Option<f64>,
    rho_eve: Option<f64>,
    zeta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EhSection {
    a: Option<f64>,
    b: Option<f64>,
    p_s_user: Option<f64>,
    p_s_user_dbm: Option<f64>,
    p_s_eve: Option<f64>,
    p_s_eve_dbm: Option<f64>,
    p_sen: Option<f64>,
    p_sen_dbm: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometrySection {
    d_k: Option<Vec<f64>>,
    d_w: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BudgetSection {
    q_user: Option<f64>,
    q_eve: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    system: Option<SystemSection>,
    eh: Option<EhSection>,
    geometry: Option<GeometrySection>,
    budget: Option<BudgetSection>,
}

/// A parsed configuration file: the validated system parameters plus the
/// pilot energy budget (defaulting to the harvester saturation ceiling).
#[derive(Clone, Debug)]
pub struct ResolvedConfig {
    pub system: SystemConfig,
    pub budget: EnergyBudget,
}

fn pick(name: &str, plain: Option<f64>, dbm: Option<f64>, default: f64) -> Result<f64, Error> {
    match (plain, dbm) {
        (Some(_), Some(_)) => Err(Error::InvalidConfig(format!(
            "config sets both {name} and {name}_dbm"
        ))),
        (Some(v), None) => Ok(v),
        (None, Some(d)) => Ok(dbm_to_watts(d)),
        (None, None) => Ok(default),
    }
}

/// Parse a TOML configuration string. Missing keys fall back to the
/// defaults; `_dbm`-suffixed keys are accepted for any power.
pub fn parse_config(text: &str) -> Result<ResolvedConfig, Error> {
    let file: FileConfig =
        toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("config parse: {e}")))?;
    let mut cfg = SystemConfig::default();

    let sys = file.system.unwrap_or_default();
    if let Some(m) = sys.m {
        cfg.m = m;
    }
    if let Some(k) = sys.k {
        cfg.k = k;
        // keep geometry consistent when only K changes
        if file
            .geometry
            .as_ref()
            .and_then(|g| g.d_k.as_ref())
            .is_none()
        {
            cfg.geometry.d_k = vec![13.0; k];
        }
    }
    if let Some(eta) = sys.eta {
        cfg.eta = eta;
    }
    if let Some(t) = sys.t {
        cfg.t = t;
    }
    if let Some(tau) = sys.tau {
        cfg.tau = tau;
    }
    cfg.sigma2 = pick("sigma2", sys.sigma2, sys.sigma2_dbm, cfg.sigma2)?;
    cfg.sigma2_ant = pick(
        "sigma2_ant",
        sys.sigma2_ant,
        sys.sigma2_ant_dbm,
        cfg.sigma2_ant,
    )?;
    cfg.sigma2_s = pick("sigma2_s", sys.sigma2_s, sys.sigma2_s_dbm, cfg.sigma2_s)?;
    if let Some(w_e) = sys.w_e {
        cfg.w_e = w_e;
    }
    if let Some(r) = sys.rho_eve {
        cfg.rho_eve = r;
    }
    if let Some(z) = sys.zeta {
        cfg.zeta = z;
    }

    let eh = file.eh.unwrap_or_default();
    if let Some(a) = eh.a {
        cfg.eh.a = a;
    }
    if let Some(b) = eh.b {
        cfg.eh.b = b;
    }
    cfg.eh.p_s_user = pick("p_s_user", eh.p_s_user, eh.p_s_user_dbm, cfg.eh.p_s_user)?;
    cfg.eh.p_s_eve = pick("p_s_eve", eh.p_s_eve, eh.p_s_eve_dbm, cfg.eh.p_s_eve)?;
    cfg.eh.p_sen = pick("p_sen", eh.p_sen, eh.p_sen_dbm, cfg.eh.p_sen)?;

    let geo = file.geometry.unwrap_or_default();
    if let Some(d_k) = geo.d_k {
        cfg.geometry.d_k = d_k;
    }
    if let Some(d_w) = geo.d_w {
        cfg.geometry.d_w = d_w;
    }

    cfg.validate()?;

    let mut budget = EnergyBudget::saturation(&cfg);
    if let Some(b) = file.budget {
        if let Some(q) = b.q_user {
            budget.q_user = q;
        }
        if let Some(q) = b.q_eve {
            budget.q_eve = q;
        }
    }
    if !(budget.q_user >= 0.0 && budget.q_eve >= 0.0) {
        return Err(Error::InvalidConfig(
            "pilot energy budgets must be nonnegative".into(),
        ));
    }
    Ok(ResolvedConfig {
        system: cfg,
        budget,
    })
}

/// Load and parse a configuration file from disk.
pub fn load_config(path: &std::path::Path) -> Result<ResolvedConfig, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}
