//! Quantum and homodyne Fisher information for the hopping strength.
//!
//! Two families of results live here. The engine path differentiates the
//! Gaussian steady/ground state and feeds the covariance formula and the
//! Gaussian-marginal Fisher information. The closed forms are literal
//! transcriptions of the published expressions and are only used for
//! comparison.

use std::f64::consts::PI;
use std::fmt;
use std::sync::OnceLock;

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::fock;
use crate::gaussian::{ground_state_lossless, marginal, steady_state_cavity, steady_state_chain, GaussianState};
use crate::model::{validate_params, Regime, SystemParams};

/// Relative agreement required between derivative estimates at `h` and `h/2`.
pub const DERIVATIVE_RTOL: f64 = 1e-6;
/// Relative tolerance for a formula variant to count as matching the oracle.
pub const ARBITRATION_RTOL: f64 = 1e-4;
/// `|256 det^2 - 1|` below which the covariance prefactor is treated as singular.
pub const POLE_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Path {
    ClosedForm,
    GaussianFormula,
    Oracle,
}

impl Path {
    pub fn name(self) -> &'static str {
        match self {
            Path::ClosedForm => "closed",
            Path::GaussianFormula => "engine",
            Path::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Normalisation under which the covariance part of the Gaussian QFI formula is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CovarianceConvention {
    /// `sigma` and `sigma_dot` as produced by the engine (vacuum 1/2).
    VacuumHalf,
    /// `sigma` and `sigma_dot` halved (vacuum 1/4), `M` unchanged.
    VacuumQuarter,
    /// `sigma`, `sigma_dot` and the symplectic form `M` all halved.
    VacuumQuarterSymplectic,
}

impl CovarianceConvention {
    pub const ALL: [CovarianceConvention; 3] = [
        CovarianceConvention::VacuumHalf,
        CovarianceConvention::VacuumQuarter,
        CovarianceConvention::VacuumQuarterSymplectic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CovarianceConvention::VacuumHalf => "vacuum-half",
            CovarianceConvention::VacuumQuarter => "vacuum-quarter",
            CovarianceConvention::VacuumQuarterSymplectic => "vacuum-quarter-symplectic",
        }
    }

    fn scales(self) -> (f64, f64) {
        match self {
            CovarianceConvention::VacuumHalf => (1.0, 1.0),
            CovarianceConvention::VacuumQuarter => (0.5, 1.0),
            CovarianceConvention::VacuumQuarterSymplectic => (0.5, 0.5),
        }
    }
}

/// Weight of the displacement term `w d_dot^T sigma^-1 d_dot`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DisplacementWeight {
    Double,
    Unit,
}

impl DisplacementWeight {
    pub const ALL: [DisplacementWeight; 2] = [DisplacementWeight::Double, DisplacementWeight::Unit];

    pub fn value(self) -> f64 {
        match self {
            DisplacementWeight::Double => 2.0,
            DisplacementWeight::Unit => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DisplacementWeight::Double => "weight-2",
            DisplacementWeight::Unit => "weight-1",
        }
    }
}

/// A complete reading of the Gaussian QFI formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Convention {
    pub covariance: CovarianceConvention,
    pub displacement: DisplacementWeight,
}

impl Convention {
    pub const REFERENCE: Convention = Convention {
        covariance: CovarianceConvention::VacuumHalf,
        displacement: DisplacementWeight::Double,
    };

    pub fn label(&self) -> String {
        format!("{}+{}", self.covariance.name(), self.displacement.name())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FisherMeta {
    /// Finite-difference step used for the state derivative, if any.
    pub step: Option<f64>,
    pub convention: Option<Convention>,
    /// Every evaluated formula variant, by label.
    pub variants: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FisherResult {
    pub value: f64,
    pub path: Path,
    pub regime: Regime,
    pub phi: Option<f64>,
    pub meta: FisherMeta,
}

impl FisherResult {
    fn new(value: f64, path: Path, regime: Regime, phi: Option<f64>) -> Self {
        FisherResult {
            value,
            path,
            regime,
            phi,
            meta: FisherMeta::default(),
        }
    }
}

/// Derivatives of the displacement and covariance with respect to `t_h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub d_dot: Vector2<f64>,
    pub sigma_dot: Matrix2<f64>,
}

impl StateDerivative {
    pub fn zero() -> Self {
        StateDerivative {
            d_dot: Vector2::zeros(),
            sigma_dot: Matrix2::zeros(),
        }
    }

    fn max_abs(&self) -> f64 {
        self.d_dot.amax().max(self.sigma_dot.amax())
    }
}

/// The Gaussian state the engine assigns to a regime.
pub fn engine_state(p: &SystemParams, regime: Regime) -> Result<GaussianState> {
    match regime {
        Regime::Lossless => ground_state_lossless(p),
        Regime::CavityLoss => {
            validate_params(p, regime)?;
            steady_state_cavity(p)
        }
        Regime::ChainLoss => steady_state_chain(p),
    }
}

fn central(
    state: &dyn Fn(&SystemParams) -> Result<GaussianState>,
    p: &SystemParams,
    h: f64,
) -> Result<StateDerivative> {
    let up = state(&p.with_t_hop(p.t_hop + h))?;
    let down = state(&p.with_t_hop(p.t_hop - h))?;
    let sigma_dot = (up.sigma - down.sigma) / (2.0 * h);
    let sym = 0.5 * (sigma_dot[(0, 1)] + sigma_dot[(1, 0)]);
    let mut sigma_dot = sigma_dot;
    sigma_dot[(0, 1)] = sym;
    sigma_dot[(1, 0)] = sym;
    Ok(StateDerivative {
        d_dot: (up.d - down.d) / (2.0 * h),
        sigma_dot,
    })
}

/// Central difference of an arbitrary state map, checked against the half step.
pub fn derivative_of(
    state: &dyn Fn(&SystemParams) -> Result<GaussianState>,
    p: &SystemParams,
    h: f64,
) -> Result<StateDerivative> {
    if !(h > 0.0) {
        return Err(Error::Range(format!("h > 0 violated: {h}")));
    }
    let coarse = central(state, p, h)?;
    let fine = central(state, p, h / 2.0)?;
    let gap = StateDerivative {
        d_dot: coarse.d_dot - fine.d_dot,
        sigma_dot: coarse.sigma_dot - fine.sigma_dot,
    }
    .max_abs();
    let scale = coarse.max_abs().max(fine.max_abs());
    if gap > DERIVATIVE_RTOL * scale && gap > 1e-13 {
        return Err(Error::Step {
            coarse: coarse.max_abs(),
            fine: fine.max_abs(),
        });
    }
    Ok(coarse)
}

/// Derivative of the regime's engine state with respect to `t_h`.
pub fn state_derivative(p: &SystemParams, regime: Regime, h: f64) -> Result<StateDerivative> {
    derivative_of(&|q| engine_state(q, regime), p, h)
}

/// Default step `1e-5 max(1, |t_h|)`.
pub fn default_step(p: &SystemParams) -> f64 {
    fock::default_step(p)
}

fn symplectic_m() -> Matrix2<f64> {
    Matrix2::new(0.0, 0.5, -0.5, 0.0)
}

/// Covariance part of the Gaussian QFI under a given normalisation.
pub fn covariance_term(
    sigma: &Matrix2<f64>,
    sigma_dot: &Matrix2<f64>,
    convention: CovarianceConvention,
) -> Result<f64> {
    if sigma_dot.amax() == 0.0 {
        return Ok(0.0);
    }
    let (s_scale, m_scale) = convention.scales();
    let s = sigma * s_scale;
    let sd = sigma_dot * s_scale;
    let m = symplectic_m() * m_scale;
    let det = s.determinant();
    let pole = 256.0 * det * det - 1.0;
    if pole.abs() < POLE_EPS {
        return Err(Error::PurityPole(pole.abs()));
    }
    let inv = s
        .try_inverse()
        .ok_or_else(|| Error::Range("singular covariance".into()))?;
    let a = inv * sd;
    let t1 = (a * a).trace();
    let b = sd * m;
    let t2 = (b * b).trace();
    Ok(128.0 / pole * (det * det * t1 - t2))
}

/// Displacement part `w d_dot^T sigma^-1 d_dot`.
pub fn displacement_term(sigma: &Matrix2<f64>, d_dot: &Vector2<f64>, weight: DisplacementWeight) -> Result<f64> {
    let inv = sigma
        .try_inverse()
        .ok_or_else(|| Error::Range("singular covariance".into()))?;
    Ok(weight.value() * (d_dot.transpose() * inv * d_dot)[(0, 0)])
}

/// Gaussian QFI under one convention.
pub fn qfi_gaussian_with(state: &GaussianState, deriv: &StateDerivative, convention: Convention) -> Result<f64> {
    Ok(covariance_term(&state.sigma, &deriv.sigma_dot, convention.covariance)?
        + displacement_term(&state.sigma, &deriv.d_dot, convention.displacement)?)
}

/// QFI of a pure Gaussian state: `Tr[(sigma^-1 sigma_dot)^2]/4 + w d_dot^T sigma^-1 d_dot`.
pub fn qfi_pure(state: &GaussianState, deriv: &StateDerivative, weight: DisplacementWeight) -> Result<f64> {
    let inv = state
        .sigma
        .try_inverse()
        .ok_or_else(|| Error::Range("singular covariance".into()))?;
    let a = inv * deriv.sigma_dot;
    Ok(0.25 * (a * a).trace() + displacement_term(&state.sigma, &deriv.d_dot, weight)?)
}

/// The reference Gaussian QFI formula (half-vacuum covariance, weight-2 displacement) with every covariance variant recorded in `meta`.
pub fn qfi_gaussian(state: &GaussianState, deriv: &StateDerivative, regime: Regime) -> Result<FisherResult> {
    let value = qfi_gaussian_with(state, deriv, Convention::REFERENCE)?;
    let mut out = FisherResult::new(value, Path::GaussianFormula, regime, None);
    out.meta.convention = Some(Convention::REFERENCE);
    for cov in CovarianceConvention::ALL {
        for w in DisplacementWeight::ALL {
            let c = Convention {
                covariance: cov,
                displacement: w,
            };
            if let Ok(v) = qfi_gaussian_with(state, deriv, c) {
                out.meta.variants.push((c.label(), v));
            }
        }
    }
    Ok(out)
}

/// Fisher information of the Gaussian homodyne marginal along `phi`.
pub fn cfi_homodyne(state: &GaussianState, deriv: &StateDerivative, phi: f64) -> Result<f64> {
    let (_, v) = marginal(state, phi);
    if !(v > 0.0) {
        return Err(Error::Range(format!("marginal variance must be positive, got {v}")));
    }
    let c = Vector2::new(phi.cos(), phi.sin());
    let m_dot = c.dot(&deriv.d_dot);
    let v_dot = (c.transpose() * deriv.sigma_dot * c)[(0, 0)];
    Ok(m_dot * m_dot / v + v_dot * v_dot / (2.0 * v * v))
}

/// Outcome of matching the formula variants against the density-matrix oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct Arbitration {
    pub convention: Convention,
    pub cavity_point: SystemParams,
    pub cavity_oracle: f64,
    pub cavity_variants: Vec<(CovarianceConvention, f64)>,
    pub chain_point: SystemParams,
    pub chain_oracle: f64,
    pub chain_variants: Vec<(DisplacementWeight, f64)>,
}

/// Canonical cavity-loss point: `omega0 = t_h = 1`, `g = 0.5`, `kappa_ph = 0.1`.
pub fn cavity_canonical() -> SystemParams {
    SystemParams::default().with_g(0.5).with_kappa_ph(0.1)
}

/// Canonical chain-loss point, small enough for the Liouvillian oracle.
pub fn chain_canonical() -> SystemParams {
    SystemParams::default().with_sites(16)
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Runs the arbitration from scratch.
pub fn arbitrate() -> Result<Arbitration> {
    let cav = cavity_canonical();
    let cav_state = engine_state(&cav, Regime::CavityLoss)?;
    let cav_deriv = state_derivative(&cav, Regime::CavityLoss, default_step(&cav))?;
    let cav_oracle = fock::qfi_sld(
        &cav,
        Regime::CavityLoss,
        fock::default_nmax(&cav, Regime::CavityLoss),
        fock::default_step(&cav),
    )?;
    let cavity_variants: Vec<(CovarianceConvention, f64)> = CovarianceConvention::ALL
        .iter()
        .filter_map(|&c| {
            covariance_term(&cav_state.sigma, &cav_deriv.sigma_dot, c)
                .ok()
                .map(|v| (c, v))
        })
        .collect();
    let cov_matches: Vec<CovarianceConvention> = cavity_variants
        .iter()
        .filter(|(_, v)| relative(*v, cav_oracle) < ARBITRATION_RTOL)
        .map(|(c, _)| *c)
        .collect();

    let chain = chain_canonical();
    let chain_state = engine_state(&chain, Regime::ChainLoss)?;
    let chain_deriv = state_derivative(&chain, Regime::ChainLoss, default_step(&chain))?;
    let chain_oracle = fock::qfi_sld(
        &chain,
        Regime::ChainLoss,
        fock::default_nmax(&chain, Regime::ChainLoss),
        fock::default_step(&chain),
    )?;
    let covariance = cov_matches.first().copied().unwrap_or(CovarianceConvention::VacuumHalf);
    let chain_variants: Vec<(DisplacementWeight, f64)> = DisplacementWeight::ALL
        .iter()
        .filter_map(|&w| {
            qfi_gaussian_with(
                &chain_state,
                &chain_deriv,
                Convention {
                    covariance,
                    displacement: w,
                },
            )
            .ok()
            .map(|v| (w, v))
        })
        .collect();
    let weight_matches: Vec<DisplacementWeight> = chain_variants
        .iter()
        .filter(|(_, v)| relative(*v, chain_oracle) < ARBITRATION_RTOL)
        .map(|(w, _)| *w)
        .collect();
    let displacement = weight_matches.first().copied().unwrap_or(DisplacementWeight::Double);
    Ok(Arbitration {
        convention: Convention {
            covariance,
            displacement,
        },
        cavity_point: cav,
        cavity_oracle: cav_oracle,
        cavity_variants,
        chain_point: chain,
        chain_oracle,
        chain_variants,
    })
}

static ARBITRATION: OnceLock<std::result::Result<Arbitration, Error>> = OnceLock::new();

/// The arbitration outcome, computed once per process.
pub fn arbitration() -> Result<&'static Arbitration> {
    ARBITRATION.get_or_init(arbitrate).as_ref().map_err(Clone::clone)
}

/// The convention selected by the arbitration.
pub fn arbitrated_convention() -> Result<Convention> {
    arbitration().map(|a| a.convention)
}

/// Engine-path QFI for an explicit state, derivative and convention.
pub fn qfi_engine_with(
    state: &GaussianState,
    deriv: &StateDerivative,
    regime: Regime,
    convention: Convention,
) -> Result<f64> {
    match regime {
        Regime::Lossless => qfi_pure(state, deriv, convention.displacement),
        _ => qfi_gaussian_with(state, deriv, convention),
    }
}

/// Engine-path QFI.
pub fn qfi_engine(p: &SystemParams, regime: Regime) -> Result<FisherResult> {
    let convention = arbitrated_convention()?;
    let h = default_step(p);
    let state = engine_state(p, regime)?;
    let deriv = state_derivative(p, regime, h)?;
    let value = qfi_engine_with(&state, &deriv, regime, convention)?;
    let mut out = FisherResult::new(value, Path::GaussianFormula, regime, None);
    out.meta.step = Some(h);
    out.meta.convention = Some(convention);
    Ok(out)
}

/// Engine-path homodyne CFI.
pub fn cfi_engine(p: &SystemParams, regime: Regime, phi: f64) -> Result<FisherResult> {
    let h = default_step(p);
    let state = engine_state(p, regime)?;
    let deriv = state_derivative(p, regime, h)?;
    let value = cfi_homodyne(&state, &deriv, phi)?;
    let mut out = FisherResult::new(value, Path::GaussianFormula, regime, Some(phi));
    out.meta.step = Some(h);
    Ok(out)
}

fn radicand(p: &SystemParams) -> f64 {
    1.0 - 4.0 * p.g * p.g * p.t_hop / (PI * p.omega0)
}

/// Lossless closed-form QFI: `2 (g^2 / (2 pi omega0 (1 - 4 g^2 t_h/(pi omega0))))^2`.
pub fn qfi_closed_lossless(p: &SystemParams) -> Result<f64> {
    let u = radicand(p);
    if u <= 0.0 {
        return Err(Error::UnstableRegime(format!("1 - X g^2 = {u} <= 0")));
    }
    Ok(2.0 * (p.g * p.g / (2.0 * PI * p.omega0 * u)).powi(2))
}

/// Cavity-loss closed-form QFI.
pub fn qfi_closed_cavity(p: &SystemParams) -> Result<f64> {
    let (g, w, k, t) = (p.g, p.omega0, p.kappa_ph, p.t_hop);
    let x = p.x_factor();
    let a = p.a_factor();
    let gw = g * g * w * w * x;
    let gx = g * g * x;
    let num = g.powi(4)
        * w
        * w
        * (6.0 * a.powi(3)
            + gw * (-12.0 * a * a + 6.0 * g * g * a * (k * k + 2.0 * w * w) * x - 6.0 * g.powi(4) * w * w * a * x * x
                + g.powi(6) * w.powi(4) * x.powi(3)))
        * x
        * x;
    let den = 2.0 * (a - gw).powi(2) * (5.0 * a + gw * (gx - 5.0)) * (3.0 * a + gw * (gx - 3.0)) * t * t;
    if den == 0.0 || !(a - gw != 0.0) {
        return Err(Error::UnstableRegime("pole of the cavity-loss QFI".into()));
    }
    Ok(num / den)
}

/// Chain-loss closed-form QFI, for drive `lambda`.
pub fn qfi_closed_chain_with_drive(p: &SystemParams, lambda: f64) -> Result<f64> {
    let (w, t) = (p.omega0, p.t_hop);
    let a = p.a_factor();
    let l2 = lambda * lambda;
    let first = (a.powi(6) + 4.0 * w.powi(4) * a * a * l2) / (a * a + 4.0 * w * w * l2);
    let inner = 1.0 + 4.0 * w * w * l2 / (a * a);
    let den = 16.0 * inner * inner - 1.0;
    if den == 0.0 {
        return Err(Error::UnstableRegime("pole of the chain-loss QFI".into()));
    }
    let second = 256.0 * w.powi(4) * l2 / den;
    Ok(2.0 * l2 / (a.powi(4) * t * t) * (first + second))
}

fn drive(p: &SystemParams) -> Result<f64> {
    let vp = validate_params(p, Regime::ChainLoss)?;
    vp.derived
        .lambda_drive
        .ok_or_else(|| Error::Range("eta > 0 required".into()))
}

/// Closed-form QFI of a regime.
pub fn qfi_closed(p: &SystemParams, regime: Regime) -> Result<FisherResult> {
    let value = match regime {
        Regime::Lossless => {
            validate_params(p, regime)?;
            qfi_closed_lossless(p)?
        }
        Regime::CavityLoss => {
            validate_params(p, regime)?;
            qfi_closed_cavity(p)?
        }
        Regime::ChainLoss => qfi_closed_chain_with_drive(p, drive(p)?)?,
    };
    Ok(FisherResult::new(value, Path::ClosedForm, regime, None))
}

/// Lossless homodyne closed-form CFI, with the common `g^4` cancelled.
pub fn cfi_closed_lossless(p: &SystemParams, phi: f64) -> Result<f64> {
    let u = radicand(p);
    let w = p.omega0;
    let (c2, s2) = (phi.cos().powi(2), phi.sin().powi(2));
    let inner = u * 2.0 * c2 / (PI * w) - s2 / (PI * w);
    let den = 4.0 * (u * c2 + s2).powi(2);
    if den == 0.0 {
        return Err(Error::UnstableRegime("pole of the lossless CFI".into()));
    }
    Ok(PI * PI * w * w * inner * inner / den)
}

/// Cavity-loss homodyne closed-form CFI.
pub fn cfi_closed_cavity(p: &SystemParams, phi: f64) -> Result<f64> {
    let (g, w, k, t) = (p.g, p.omega0, p.kappa_ph, p.t_hop);
    let x = p.x_factor();
    let a = p.a_factor();
    let s = phi.sin();
    let c2p = (2.0 * phi).cos();
    let s2p = (2.0 * phi).sin();
    let top = a * (w * c2p + k * s2p) + g * g * w * s * s * (2.0 * a - g * g * w * w * x);
    let num = g.powi(4) * w * w * top * top * x * x;
    let bottom = 2.0 * a + g * g * w * x * (w * (c2p - 2.0) + k * s2p + g * g * w * s * s * x);
    let den = (a - g * g * w * w * x).powi(2) * bottom * bottom * t * t;
    if den == 0.0 {
        return Err(Error::UnstableRegime("pole of the cavity-loss CFI".into()));
    }
    Ok(num / den)
}

/// Chain-loss homodyne closed-form CFI, for drive `lambda`.
pub fn cfi_closed_chain_with_drive(p: &SystemParams, lambda: f64, phi: f64) -> Result<f64> {
    let (w, k, t) = (p.omega0, p.kappa_ph, p.t_hop);
    let a = p.a_factor();
    let l2 = lambda * lambda;
    let (s, c) = (phi.sin(), phi.cos());
    let q = a * a + 4.0 * w * w * s * s * l2;
    let num = 2.0 * (16.0 * w.powi(4) * s.powi(4) * l2 + (w * c * c + k * s * s).powi(2) * q) * l2;
    let den = q * q * t * t;
    if den == 0.0 {
        return Err(Error::UnstableRegime("pole of the chain-loss CFI".into()));
    }
    Ok(num / den)
}

/// Closed-form homodyne CFI of a regime.
pub fn cfi_closed(p: &SystemParams, regime: Regime, phi: f64) -> Result<FisherResult> {
    let value = match regime {
        Regime::Lossless => {
            validate_params(p, regime)?;
            cfi_closed_lossless(p, phi)?
        }
        Regime::CavityLoss => {
            validate_params(p, regime)?;
            cfi_closed_cavity(p, phi)?
        }
        Regime::ChainLoss => cfi_closed_chain_with_drive(p, drive(p)?, phi)?,
    };
    Ok(FisherResult::new(value, Path::ClosedForm, regime, Some(phi)))
}

/// Oracle QFI with the default truncation and step.
pub fn qfi_oracle(p: &SystemParams, regime: Regime) -> Result<FisherResult> {
    let n = fock::default_nmax(p, regime);
    let h = fock::default_step(p);
    let value = fock::qfi_sld(p, regime, n, h)?;
    let mut out = FisherResult::new(value, Path::Oracle, regime, None);
    out.meta.step = Some(h);
    Ok(out)
}

/// Oracle homodyne CFI with the default truncation, step and grid.
pub fn cfi_oracle(p: &SystemParams, regime: Regime, phi: f64) -> Result<FisherResult> {
    let n = fock::default_nmax(p, regime);
    let h = fock::default_step(p);
    let value = fock::cfi_numeric(p, regime, phi, n, h, None)?;
    let mut out = FisherResult::new(value, Path::Oracle, regime, Some(phi));
    out.meta.step = Some(h);
    Ok(out)
}

/// CFI over QFI along one path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ratio {
    pub cfi: f64,
    pub qfi: f64,
    /// `cfi / qfi`, or NaN when the QFI vanishes.
    pub value: f64,
    pub path: Path,
    /// Set when the QFI was zero and the ratio is a NaN sentinel.
    pub degenerate: bool,
}

impl Ratio {
    pub fn from_parts(cfi: f64, qfi: f64, path: Path) -> Self {
        if qfi == 0.0 || !qfi.is_finite() {
            Ratio {
                cfi,
                qfi,
                value: f64::NAN,
                path,
                degenerate: true,
            }
        } else {
            Ratio {
                cfi,
                qfi,
                value: cfi / qfi,
                path,
                degenerate: false,
            }
        }
    }
}

/// Homodyne-to-quantum Fisher ratio with both numbers from the same path.
pub fn ratio(p: &SystemParams, regime: Regime, phi: f64, path: Path) -> Result<Ratio> {
    let (cfi, qfi) = match path {
        Path::GaussianFormula => (cfi_engine(p, regime, phi)?.value, qfi_engine(p, regime)?.value),
        Path::ClosedForm => (cfi_closed(p, regime, phi)?.value, qfi_closed(p, regime)?.value),
        Path::Oracle => (cfi_oracle(p, regime, phi)?.value, qfi_oracle(p, regime)?.value),
    };
    Ok(Ratio::from_parts(cfi, qfi, path))
}

/// Cramer-Rao bound `1 / (nu I)` on the variance of an unbiased estimator.
pub fn cr_bound(info: &FisherResult, nu: u64) -> Result<f64> {
    if nu == 0 {
        return Err(Error::Range("nu >= 1 violated".into()));
    }
    if info.value == 0.0 {
        return Err(Error::DivisionByZero("Fisher information is zero".into()));
    }
    if !(info.value > 0.0) {
        return Err(Error::Range(format!(
            "Fisher information must be positive, got {}",
            info.value
        )));
    }
    Ok(1.0 / (nu as f64 * info.value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::steady_state_chain_with_drive;
    use crate::model::drive_strength;
    use approx::assert_relative_eq;

    fn unit(g: f64) -> SystemParams {
        SystemParams::default().with_g(g)
    }

    fn lossless_exact(g: f64) -> f64 {
        let u = 1.0 - 4.0 * g * g / PI;
        2.0 * (g * g / (PI * u)).powi(2)
    }

    #[test]
    fn derivative_examples() {
        let d = state_derivative(&unit(0.0), Regime::Lossless, 1e-5).unwrap();
        assert_eq!(d.max_abs(), 0.0);
        let p = unit(0.5);
        let d = state_derivative(&p, Regime::Lossless, default_step(&p)).unwrap();
        let u = 1.0 - 1.0 / PI;
        // Var(x) = 1/(2 sqrt u) grows, Var(p) = sqrt(u)/2 shrinks as t_h increases
        assert_relative_eq!(d.sigma_dot[(1, 1)], -0.25 / PI / u.sqrt(), epsilon = 1e-7);
        assert_relative_eq!(d.sigma_dot[(0, 0)], 0.25 / PI * u.powf(-1.5), epsilon = 1e-7);
        let chain = SystemParams::default();
        let d = state_derivative(&chain, Regime::ChainLoss, default_step(&chain)).unwrap();
        let s = engine_state(&chain, Regime::ChainLoss).unwrap();
        assert_relative_eq!(d.d_dot, s.d / chain.t_hop, epsilon = 1e-8);
        assert!(state_derivative(&p, Regime::Lossless, 0.0).is_err());
    }

    #[test]
    fn closed_form_examples() {
        assert_relative_eq!(qfi_closed_lossless(&unit(0.5)).unwrap(), 6.8136e-3, max_relative = 1e-4);
        assert_relative_eq!(
            qfi_closed_lossless(&unit(0.5)).unwrap() * 4.0,
            lossless_exact(0.5),
            max_relative = 1e-13
        );
        assert_eq!(qfi_closed_chain_with_drive(&SystemParams::default(), 0.0).unwrap(), 0.0);
        assert_eq!(
            qfi_closed(&unit(0.0).with_kappa_ph(0.1), Regime::CavityLoss)
                .unwrap()
                .value,
            0.0
        );
        let p = SystemParams::default();
        let l = drive_strength(&p).unwrap();
        assert_relative_eq!(
            cfi_closed_chain_with_drive(&p, l, 0.0).unwrap(),
            2.0 * l * l / (p.a_factor().powi(2)),
            max_relative = 1e-14
        );
        assert_eq!(cfi_closed_chain_with_drive(&p, 0.0, 0.4).unwrap(), 0.0);
        for g in [0.1, 0.3, 0.8] {
            assert_relative_eq!(cfi_closed_lossless(&unit(g), 0.0).unwrap(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn gaussian_formula_examples() {
        let vac = GaussianState::vacuum();
        let zero = StateDerivative::zero();
        assert_eq!(qfi_gaussian(&vac, &zero, Regime::CavityLoss).unwrap().value, 0.0);
        let c = 0.37;
        let dd = StateDerivative {
            d_dot: Vector2::new(c, 0.0),
            sigma_dot: Matrix2::zeros(),
        };
        let r = qfi_gaussian(&vac, &dd, Regime::ChainLoss).unwrap();
        assert_relative_eq!(r.value, 4.0 * c * c, max_relative = 1e-14);
        assert_eq!(r.meta.variants.len(), 6);
        // pole of the quarter-vacuum readings at pure states
        let sd = StateDerivative {
            d_dot: Vector2::zeros(),
            sigma_dot: Matrix2::new(0.1, 0.0, 0.0, -0.1),
        };
        assert!(matches!(
            covariance_term(&vac.sigma, &sd.sigma_dot, CovarianceConvention::VacuumQuarterSymplectic),
            Err(Error::PurityPole(_))
        ));
    }

    #[test]
    fn homodyne_examples() {
        let p = unit(0.5);
        let s = engine_state(&p, Regime::Lossless).unwrap();
        assert_eq!(cfi_homodyne(&s, &StateDerivative::zero(), 0.3).unwrap(), 0.0);
        let d = state_derivative(&p, Regime::Lossless, default_step(&p)).unwrap();
        let f = cfi_homodyne(&s, &d, 0.0).unwrap();
        assert_relative_eq!(f, lossless_exact(0.5), max_relative = 1e-8);
        assert_relative_eq!(f, 2.7254e-2, max_relative = 1e-4);
        // insensitive quadrature
        let dd = StateDerivative {
            d_dot: Vector2::new(0.0, 1.0),
            sigma_dot: Matrix2::new(0.0, 0.0, 0.0, 1.0),
        };
        assert_eq!(cfi_homodyne(&s, &dd, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn pure_formula_matches_squeezing() {
        for g in [0.2, 0.5, 0.8] {
            let p = unit(g);
            let s = engine_state(&p, Regime::Lossless).unwrap();
            let d = state_derivative(&p, Regime::Lossless, default_step(&p)).unwrap();
            let q = qfi_pure(&s, &d, DisplacementWeight::Unit).unwrap();
            assert_relative_eq!(q, lossless_exact(g), max_relative = 1e-8);
        }
    }

    #[test]
    fn chain_engine_values() {
        let p = SystemParams::default();
        let l = drive_strength(&p).unwrap();
        let s = steady_state_chain_with_drive(&p, l).unwrap();
        let d = state_derivative(&p, Regime::ChainLoss, default_step(&p)).unwrap();
        let a = p.a_factor();
        let unit_conv = Convention {
            covariance: CovarianceConvention::VacuumQuarterSymplectic,
            displacement: DisplacementWeight::Unit,
        };
        let q = qfi_engine_with(&s, &d, Regime::ChainLoss, unit_conv).unwrap();
        assert_relative_eq!(q, 2.0 * l * l / a, max_relative = 1e-8);
        let f = cfi_homodyne(&s, &d, 0.0).unwrap();
        assert_relative_eq!(f / q, 1.0 / (1.0 + 0.01), max_relative = 1e-8);
    }

    #[test]
    fn ratio_sentinel_and_bound() {
        let r = Ratio::from_parts(0.0, 0.0, Path::ClosedForm);
        assert!(r.degenerate && r.value.is_nan());
        let info = FisherResult::new(4.0, Path::ClosedForm, Regime::Lossless, None);
        assert_relative_eq!(cr_bound(&info, 1).unwrap(), 0.25);
        assert_relative_eq!(cr_bound(&info, 100).unwrap(), 0.0025);
        let zero = FisherResult::new(0.0, Path::ClosedForm, Regime::Lossless, None);
        assert!(matches!(cr_bound(&zero, 1), Err(Error::DivisionByZero(_))));
        assert!(cr_bound(&info, 0).is_err());
        let g_c = crate::model::critical_coupling(&unit(0.5));
        let near = qfi_closed(&unit(0.9999 * g_c), Regime::Lossless).unwrap();
        assert!(
            cr_bound(&near, 1).unwrap()
                < 1e-3 * cr_bound(&qfi_closed(&unit(0.5), Regime::Lossless).unwrap(), 1).unwrap()
        );
    }

    #[test]
    fn arbitration_against_oracle() {
        let a = arbitration().unwrap();
        for (c, v) in &a.cavity_variants {
            println!("cavity {}: {v:.8e} (oracle {:.8e})", c.name(), a.cavity_oracle);
        }
        for (w, v) in &a.chain_variants {
            println!("chain {}: {v:.8e} (oracle {:.8e})", w.name(), a.chain_oracle);
        }
        assert_eq!(a.convention.covariance, CovarianceConvention::VacuumQuarterSymplectic);
        assert_eq!(a.convention.displacement, DisplacementWeight::Unit);
        assert_relative_eq!(a.cavity_oracle, 0.080_671_9, max_relative = 1e-5);
    }

    #[test]
    fn closed_forms_are_pi_periodic() {
        let p = unit(0.6).with_kappa_ph(0.2);
        let chain = SystemParams::default();
        for phi in [0.0, 0.3, 1.1, 2.5] {
            let a = cfi_closed(&p, Regime::CavityLoss, phi).unwrap().value;
            let b = cfi_closed(&p, Regime::CavityLoss, phi + PI).unwrap().value;
            assert_relative_eq!(a, b, max_relative = 1e-12);
            let a = cfi_closed(&p, Regime::Lossless, phi).unwrap().value;
            let b = cfi_closed(&p, Regime::Lossless, phi + PI).unwrap().value;
            assert_relative_eq!(a, b, max_relative = 1e-12);
            let a = cfi_closed(&chain, Regime::ChainLoss, phi).unwrap().value;
            let b = cfi_closed(&chain, Regime::ChainLoss, phi + PI).unwrap().value;
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }
}
