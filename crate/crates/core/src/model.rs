//! Physical parameters of the chain-cavity system and the constants derived
//! from them.
//!
//! Natural units throughout: hbar = c = e = 1 and unit lattice constant.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

/// Relative tolerance for `eta` given both directly and as `kappa_el / gamma_pump`.
const ETA_AGREEMENT: f64 = 1e-12;

/// Which open-system scenario a computation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Regime {
    /// Closed system; the photon ground state of the truncated Hamiltonian.
    Lossless,
    /// Photon decay at rate `kappa_ph`, electrons frozen in the Fermi sea.
    CavityLoss,
    /// Electron decay and pumping drive a steady current; photon decay at `kappa_ph`.
    ChainLoss,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::Lossless, Regime::CavityLoss, Regime::ChainLoss];

    pub fn name(self) -> &'static str {
        match self {
            Regime::Lossless => "lossless",
            Regime::CavityLoss => "cavity",
            Regime::ChainLoss => "chain",
        }
    }

    pub fn parse(s: &str) -> Option<Regime> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lossless" => Some(Regime::Lossless),
            "cavity" | "cavityloss" | "cavity-loss" => Some(Regime::CavityLoss),
            "chain" | "chainloss" | "chain-loss" => Some(Regime::ChainLoss),
            _ => None,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Cavity frequency.
    pub omega0: f64,
    /// Hopping strength, the parameter being estimated.
    pub t_hop: f64,
    /// Dimensionless light-matter coupling.
    pub g: f64,
    /// Number of lattice sites; even, so that half filling is an integer.
    pub n_sites: usize,
    pub kappa_ph: f64,
    pub kappa_el: f64,
    pub gamma_pump: f64,
    /// `kappa_el / gamma_pump`, when supplied directly.
    pub eta: Option<f64>,
}

impl Default for SystemParams {
    /// The figure parameters: omega0 = t_h = 1, L = 400, g = 0.88,
    /// kappa_ph = 0.1, eta = 2.41.
    fn default() -> Self {
        SystemParams {
            omega0: 1.0,
            t_hop: 1.0,
            g: 0.88,
            n_sites: 400,
            kappa_ph: 0.1,
            kappa_el: 0.0,
            gamma_pump: 0.0,
            eta: Some(2.41),
        }
    }
}

impl SystemParams {
    pub fn with_g(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    pub fn with_t_hop(mut self, t_hop: f64) -> Self {
        self.t_hop = t_hop;
        self
    }

    pub fn with_omega0(mut self, omega0: f64) -> Self {
        self.omega0 = omega0;
        self
    }

    pub fn with_kappa_ph(mut self, kappa_ph: f64) -> Self {
        self.kappa_ph = kappa_ph;
        self
    }

    pub fn with_sites(mut self, n_sites: usize) -> Self {
        self.n_sites = n_sites;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = Some(eta);
        self
    }

    pub fn with_rates(mut self, kappa_el: f64, gamma_pump: f64) -> Self {
        self.kappa_el = kappa_el;
        self.gamma_pump = gamma_pump;
        self
    }

    /// Resolves `eta` from the direct value and/or the rate ratio.
    pub fn resolved_eta(&self) -> Result<Option<f64>> {
        let from_rates = (self.gamma_pump > 0.0).then(|| self.kappa_el / self.gamma_pump);
        match (self.eta, from_rates) {
            (Some(direct), Some(ratio)) => {
                let scale = direct.abs().max(ratio.abs()).max(f64::MIN_POSITIVE);
                if (direct - ratio).abs() > ETA_AGREEMENT * scale {
                    return Err(Error::Range(format!(
                        "eta = {direct} disagrees with kappa_el/gamma_pump = {ratio}"
                    )));
                }
                Ok(Some(direct))
            }
            (Some(direct), None) => Ok(Some(direct)),
            (None, ratio) => Ok(ratio),
        }
    }

    /// `X = 4 t_h / (omega0 pi)`.
    pub fn x_factor(&self) -> f64 {
        4.0 * self.t_hop / (self.omega0 * PI)
    }

    /// `X g^2`, which reaches 1 at the critical coupling.
    pub fn criticality(&self) -> f64 {
        self.x_factor() * self.g * self.g
    }

    /// `A = kappa_ph^2 + omega0^2`.
    pub fn a_factor(&self) -> f64 {
        self.kappa_ph * self.kappa_ph + self.omega0 * self.omega0
    }

    /// Field-level checks shared by every regime.
    pub fn check_fields(&self) -> Result<()> {
        let fields = [
            ("omega0", self.omega0),
            ("t_hop", self.t_hop),
            ("g", self.g),
            ("kappa_ph", self.kappa_ph),
            ("kappa_el", self.kappa_el),
            ("gamma_pump", self.gamma_pump),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::Range(format!("{name} must be finite, got {v}")));
            }
        }
        if let Some(eta) = self.eta {
            if !eta.is_finite() {
                return Err(Error::Range(format!("eta must be finite, got {eta}")));
            }
        }
        if self.omega0 <= 0.0 {
            return Err(Error::Range(format!("omega0 > 0 violated: {}", self.omega0)));
        }
        if self.t_hop <= 0.0 {
            return Err(Error::Range(format!("t_hop > 0 violated: {}", self.t_hop)));
        }
        if self.n_sites < 2 || !self.n_sites.is_multiple_of(2) {
            return Err(Error::Range(format!(
                "n_sites >= 2 and even violated: {}",
                self.n_sites
            )));
        }
        for (name, v) in [
            ("kappa_ph", self.kappa_ph),
            ("kappa_el", self.kappa_el),
            ("gamma_pump", self.gamma_pump),
        ] {
            if v < 0.0 {
                return Err(Error::Range(format!("{name} >= 0 violated: {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    pub x: f64,
    pub a: f64,
    pub g_crit: f64,
    /// Effective drive from the steady electron current; present when eta is known.
    pub lambda_drive: Option<f64>,
}

/// Parameters that passed the regime's validity conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidatedParams {
    pub params: SystemParams,
    pub regime: Regime,
    pub derived: DerivedConstants,
}

impl ValidatedParams {
    pub fn eta(&self) -> Option<f64> {
        // validation already resolved and checked it
        self.params.resolved_eta().ok().flatten()
    }
}

/// Distance from `X g^2 = 1` inside which the lossless ground state is treated as absent,
/// so that `g = critical_coupling(p)` itself is rejected despite rounding.
pub const CRITICAL_TOL: f64 = 1e-12;

pub fn validate_params(p: &SystemParams, regime: Regime) -> Result<ValidatedParams> {
    p.check_fields()?;
    let eta = p.resolved_eta()?;
    let xg2 = p.criticality();
    match regime {
        Regime::Lossless => {
            if xg2 >= 1.0 - CRITICAL_TOL {
                return Err(Error::UnstableRegime(format!("X g^2 < 1 violated: X g^2 = {xg2}")));
            }
        }
        Regime::CavityLoss => {
            let shift = p.omega0 * p.omega0 * (xg2 - 1.0);
            if p.kappa_ph * p.kappa_ph <= shift {
                return Err(Error::UnstableRegime(format!(
                    "kappa_ph^2 > omega0^2 (X g^2 - 1) violated: {} <= {}",
                    p.kappa_ph * p.kappa_ph,
                    shift
                )));
            }
        }
        Regime::ChainLoss => match eta {
            Some(e) if e > 0.0 => {}
            other => {
                return Err(Error::Range(format!(
                    "eta > 0 required in the chain-loss regime, got {other:?}"
                )))
            }
        },
    }
    let lambda_drive = match eta {
        Some(e) if e > 0.0 => Some(drive_from(p, e)),
        _ => None,
    };
    Ok(ValidatedParams {
        params: *p,
        regime,
        derived: DerivedConstants {
            x: p.x_factor(),
            a: p.a_factor(),
            g_crit: critical_coupling(p),
            lambda_drive,
        },
    })
}

/// `g_c = sqrt(pi omega0 / (4 t_h))`.
pub fn critical_coupling(p: &SystemParams) -> f64 {
    (PI * p.omega0 / (4.0 * p.t_hop)).sqrt()
}

/// Current shape factor `2/eta - 2(1+eta)/(eta sqrt(1+2 eta))`; non-positive for eta > 0.
pub fn current_factor(eta: f64) -> f64 {
    2.0 / eta - 2.0 * (1.0 + eta) / (eta * (1.0 + 2.0 * eta).sqrt())
}

fn drive_from(p: &SystemParams, eta: f64) -> f64 {
    (2.0 * p.n_sites as f64).sqrt() * p.g * p.t_hop * current_factor(eta)
}

/// Drive strength `Lambda = sqrt(2L) g t_h (2/eta - 2(1+eta)/(eta sqrt(1+2eta)))`.
pub fn drive_strength(p: &SystemParams) -> Result<f64> {
    match p.resolved_eta()? {
        Some(eta) if eta > 0.0 => {
            if p.n_sites < 2 {
                return Err(Error::Range(format!("n_sites >= 2 violated: {}", p.n_sites)));
            }
            Ok(drive_from(p, eta))
        }
        other => Err(Error::Range(format!("eta > 0 violated: {other:?}"))),
    }
}
