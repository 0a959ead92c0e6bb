//! Gaussian description of the cavity mode: displacement `d = (<x>, <p>)` and
//! symmetrised covariance `sigma`, with vacuum `sigma = diag(1/2, 1/2)`.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

use crate::electron::{steady_expectations, Form};
use crate::error::{Error, Result};
use crate::model::{validate_params, Regime, SystemParams};

/// Smallest covariance eigenvalue tolerated during integration.
const MIN_EIGENVALUE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    pub d: Vector2<f64>,
    pub sigma: Matrix2<f64>,
}

impl GaussianState {
    pub fn vacuum() -> Self {
        GaussianState {
            d: Vector2::zeros(),
            sigma: Matrix2::identity() * 0.5,
        }
    }

    pub fn new(d: Vector2<f64>, sigma: Matrix2<f64>) -> Result<Self> {
        if (sigma[(0, 1)] - sigma[(1, 0)]).abs() > 1e-12 * sigma.amax().max(1.0) {
            return Err(Error::Range("covariance must be symmetric".into()));
        }
        let s = GaussianState { d, sigma };
        if s.min_eigenvalue() <= 0.0 {
            return Err(Error::Range("covariance must be positive definite".into()));
        }
        Ok(s)
    }

    pub fn det(&self) -> f64 {
        self.sigma.determinant()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let s = &self.sigma;
        let mean = 0.5 * (s[(0, 0)] + s[(1, 1)]);
        let half_gap = (0.25 * (s[(0, 0)] - s[(1, 1)]).powi(2) + s[(0, 1)] * s[(1, 0)]).sqrt();
        mean - half_gap
    }

    /// Purity `1 / (2 sqrt(det sigma))`.
    pub fn purity(&self) -> f64 {
        0.5 / self.det().sqrt()
    }

    fn symmetrised(mut self) -> Self {
        let off = 0.5 * (self.sigma[(0, 1)] + self.sigma[(1, 0)]);
        self.sigma[(0, 1)] = off;
        self.sigma[(1, 0)] = off;
        self
    }
}

/// How fast the displacement relaxes relative to the field damping rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DisplacementDecay {
    /// `d' = B d + c - kappa d`, the rate whose fixed point is the stated steady state.
    #[default]
    Kappa,
    /// `d' = B d + c - 2 kappa d`.
    TwoKappa,
}

/// Linear drift of the first and second moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftSpec {
    pub b: Matrix2<f64>,
    pub c: Vector2<f64>,
    pub kappa: f64,
    pub sigma_lin: Matrix2<f64>,
    pub decay: DisplacementDecay,
}

impl DriftSpec {
    /// Drift with an oscillator of frequency `omega0`, restoring coefficient `b21`,
    /// constant force `(0, force)` and damping `kappa`.
    pub fn oscillator(omega0: f64, b21: f64, force: f64, kappa: f64) -> Self {
        DriftSpec {
            b: Matrix2::new(0.0, omega0, b21, 0.0),
            c: Vector2::new(0.0, force),
            kappa,
            sigma_lin: Matrix2::identity() * 0.5,
            decay: DisplacementDecay::Kappa,
        }
    }

    /// Relaxation rate of the displacement.
    pub fn displacement_rate(&self) -> f64 {
        match self.decay {
            DisplacementDecay::Kappa => self.kappa,
            DisplacementDecay::TwoKappa => 2.0 * self.kappa,
        }
    }

    fn rhs(&self, s: &GaussianState) -> GaussianState {
        let dd = self.b * s.d + self.c - s.d * self.displacement_rate();
        let ds = self.b * s.sigma + s.sigma * self.b.transpose() - (s.sigma - self.sigma_lin) * (2.0 * self.kappa);
        GaussianState { d: dd, sigma: ds }
    }

    /// Residual of the moment equations at `s`.
    pub fn residual(&self, s: &GaussianState) -> GaussianState {
        self.rhs(s)
    }
}

/// Drift for a cavity that sees electron expectations `(t_bar, j_bar)` and loses photons at `kappa`.
pub fn drift_with(p: &SystemParams, t_bar: f64, j_bar: f64, kappa: f64) -> DriftSpec {
    let l = p.n_sites as f64;
    let b21 = -(p.omega0 - 2.0 * p.g * p.g * t_bar / l);
    let drive = 2f64.sqrt() * p.g * j_bar / l.sqrt();
    DriftSpec::oscillator(p.omega0, b21, -drive, kappa)
}

/// Chain-loss drift with an explicit drive `Lambda`.
pub fn chain_drift_with_drive(p: &SystemParams, lambda: f64) -> DriftSpec {
    DriftSpec::oscillator(p.omega0, -p.omega0, -lambda, p.kappa_ph)
}

/// Moment drift of a regime.
pub fn drift_for(p: &SystemParams, regime: Regime) -> Result<DriftSpec> {
    let vp = validate_params(p, regime)?;
    let b21 = p.omega0 * (vp.derived.x * p.g * p.g - 1.0);
    Ok(match regime {
        Regime::Lossless => DriftSpec::oscillator(p.omega0, b21, 0.0, 0.0),
        Regime::CavityLoss => DriftSpec::oscillator(p.omega0, b21, 0.0, p.kappa_ph),
        Regime::ChainLoss => {
            let e = steady_expectations(p, Form::Continuum)?;
            drift_with(p, e.t_bar, e.j_bar, p.kappa_ph)
        }
    })
}

/// Default RK4 step `0.005 min(1/omega0, 1/max(kappa, 1e-6))`.
pub fn default_dt(omega0: f64, kappa: f64) -> f64 {
    0.005 * (1.0 / omega0).min(1.0 / kappa.max(1e-6))
}

fn axpy(a: &GaussianState, h: f64, k: &GaussianState) -> GaussianState {
    GaussianState {
        d: a.d + k.d * h,
        sigma: a.sigma + k.sigma * h,
    }
}

fn rk4_step(spec: &DriftSpec, s: &GaussianState, h: f64) -> GaussianState {
    let k1 = spec.rhs(s).symmetrised();
    let k2 = spec.rhs(&axpy(s, h / 2.0, &k1).symmetrised()).symmetrised();
    let k3 = spec.rhs(&axpy(s, h / 2.0, &k2).symmetrised()).symmetrised();
    let k4 = spec.rhs(&axpy(s, h, &k3).symmetrised()).symmetrised();
    GaussianState {
        d: s.d + (k1.d + k2.d * 2.0 + k3.d * 2.0 + k4.d) * (h / 6.0),
        sigma: s.sigma + (k1.sigma + k2.sigma * 2.0 + k3.sigma * 2.0 + k4.sigma) * (h / 6.0),
    }
    .symmetrised()
}

fn check_evolve_args(t_final: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Range(format!("dt > 0 violated: {dt}")));
    }
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(Error::Range(format!("t_final >= 0 violated: {t_final}")));
    }
    Ok((t_final / dt).ceil() as usize)
}

fn run(
    state0: &GaussianState,
    spec: &DriftSpec,
    t_final: f64,
    dt: f64,
    mut record: impl FnMut(f64, &GaussianState),
) -> Result<GaussianState> {
    let steps = check_evolve_args(t_final, dt)?;
    let h = if steps == 0 { 0.0 } else { t_final / steps as f64 };
    let mut s = state0.symmetrised();
    record(0.0, &s);
    for i in 1..=steps {
        s = rk4_step(spec, &s, h);
        let t = i as f64 * h;
        let ev = s.min_eigenvalue();
        if !(ev >= MIN_EIGENVALUE) {
            return Err(Error::Stability {
                time: t,
                eigenvalue: ev,
            });
        }
        record(t, &s);
    }
    Ok(s)
}

/// RK4 trajectory from `state0` to `t_final`, including both end points.
pub fn evolve(state0: &GaussianState, spec: &DriftSpec, t_final: f64, dt: f64) -> Result<Vec<(f64, GaussianState)>> {
    let mut out = Vec::new();
    run(state0, spec, t_final, dt, |t, s| out.push((t, *s)))?;
    Ok(out)
}

/// Final state of [`evolve`] without storing the trajectory.
pub fn evolve_to(state0: &GaussianState, spec: &DriftSpec, t_final: f64, dt: f64) -> Result<GaussianState> {
    run(state0, spec, t_final, dt, |_, _| {})
}

/// Whether the moment equations are stationary at `s` to `1e-12 max(1, |sigma|)`.
pub fn is_stationary(spec: &DriftSpec, s: &GaussianState) -> bool {
    let r = spec.rhs(s);
    r.d.amax().max(r.sigma.amax()) < 1e-12 * s.sigma.amax().max(1.0)
}

/// Stationary covariance from the linear Lyapunov-type equation of `spec`.
pub fn stationary_covariance(spec: &DriftSpec) -> Result<Matrix2<f64>> {
    // unknowns (s11, s12, s22); B = [[b11, b12], [b21, b22]]
    let b = &spec.b;
    let k2 = 2.0 * spec.kappa;
    let m = Matrix3::new(
        2.0 * b[(0, 0)] - k2,
        2.0 * b[(0, 1)],
        0.0,
        b[(1, 0)],
        b[(0, 0)] + b[(1, 1)] - k2,
        b[(0, 1)],
        0.0,
        2.0 * b[(1, 0)],
        2.0 * b[(1, 1)] - k2,
    );
    let l = &spec.sigma_lin;
    let rhs = -Vector3::new(k2 * l[(0, 0)], k2 * l[(0, 1)], k2 * l[(1, 1)]);
    let sol = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::UnstableRegime("stationary covariance equation is singular".into()))?;
    Ok(Matrix2::new(sol[0], sol[1], sol[1], sol[2]))
}

fn cavity_condition(p: &SystemParams) -> Result<f64> {
    let shift = p.omega0 * p.omega0 * (p.criticality() - 1.0);
    let den = p.kappa_ph * p.kappa_ph - shift;
    if !(p.kappa_ph > 0.0) || !(den > 0.0) {
        return Err(Error::UnstableRegime(format!(
            "kappa_ph > 0 and kappa_ph^2 > omega0^2 (X g^2 - 1) required, got kappa_ph = {}, omega0^2 (X g^2 - 1) = {shift}",
            p.kappa_ph
        )));
    }
    Ok(den)
}

/// Steady covariance of the cavity-loss regime in closed form; zero displacement.
pub fn steady_state_cavity(p: &SystemParams) -> Result<GaussianState> {
    let den = 4.0 * cavity_condition(p)?;
    let w2 = p.omega0 * p.omega0;
    let k2 = p.kappa_ph * p.kappa_ph;
    let y = p.criticality() - 1.0;
    let s11 = (2.0 * k2 + w2 - w2 * y) / den;
    let s12 = p.criticality() * p.kappa_ph * p.omega0 / den;
    let s22 = (2.0 * k2 + w2 * y * y - w2 * y) / den;
    Ok(GaussianState {
        d: Vector2::zeros(),
        sigma: Matrix2::new(s11, s12, s12, s22),
    })
}

/// Ground state of the lossless quadratic Hamiltonian: a squeezed vacuum.
pub fn ground_state_lossless(p: &SystemParams) -> Result<GaussianState> {
    validate_params(p, Regime::Lossless)?;
    let u = 1.0 - p.criticality();
    Ok(GaussianState {
        d: Vector2::zeros(),
        sigma: Matrix2::new(0.5 / u.sqrt(), 0.0, 0.0, 0.5 * u.sqrt()),
    })
}

fn chain_displacement(p: &SystemParams, lambda: f64) -> Vector2<f64> {
    let a = p.a_factor();
    Vector2::new(-lambda * p.omega0 / a, -lambda * p.kappa_ph / a)
}

/// Steady state of the chain-loss regime for a given drive.
///
/// The drive only displaces the damped oscillator, so the covariance is that of
/// the vacuum.
pub fn steady_state_chain_with_drive(p: &SystemParams, lambda: f64) -> Result<GaussianState> {
    if !(p.kappa_ph > 0.0) {
        return Err(Error::UnstableRegime(format!(
            "kappa_ph > 0 required, got {}",
            p.kappa_ph
        )));
    }
    Ok(GaussianState {
        d: chain_displacement(p, lambda),
        sigma: Matrix2::identity() * 0.5,
    })
}

/// Steady state of the chain-loss regime with the drive of the steady current.
pub fn steady_state_chain(p: &SystemParams) -> Result<GaussianState> {
    let vp = validate_params(p, Regime::ChainLoss)?;
    let lambda = vp
        .derived
        .lambda_drive
        .ok_or_else(|| Error::Range("eta > 0 required".into()))?;
    steady_state_chain_with_drive(p, lambda)
}

/// The displaced state whose `p`-variance carries the extra `2 Lambda^2 omega0^2 / A^2`;
/// kept for comparison, it does not solve the moment equations.
pub fn chain_state_inflated(p: &SystemParams, lambda: f64) -> Result<GaussianState> {
    let mut s = steady_state_chain_with_drive(p, lambda)?;
    let a = p.a_factor();
    s.sigma[(1, 1)] += 2.0 * lambda * lambda * p.omega0 * p.omega0 / (a * a);
    Ok(s)
}

/// The five stationarity conditions of the driven, damped oscillator in raw moments.
pub fn chain_steady_residuals(p: &SystemParams, lambda: f64, s: &GaussianState) -> [f64; 5] {
    let (w, k) = (p.omega0, p.kappa_ph);
    let (x, pm) = (s.d[0], s.d[1]);
    let xx = s.sigma[(0, 0)] + x * x;
    let pp = s.sigma[(1, 1)] + pm * pm;
    let xp = s.sigma[(0, 1)] + x * pm;
    [
        w * pm - k * x,
        w * x + lambda + k * pm,
        2.0 * w * xp - 2.0 * k * xx + k,
        2.0 * w * xp + 2.0 * lambda * pm + 2.0 * k * pp - k,
        w * pp - w * xx - lambda * x - 2.0 * k * xp,
    ]
}

/// Mean and variance of `cos(phi) x + sin(phi) p`.
pub fn marginal(state: &GaussianState, phi: f64) -> (f64, f64) {
    let c = Vector2::new(phi.cos(), phi.sin());
    (c.dot(&state.d), (c.transpose() * state.sigma * c)[(0, 0)])
}

/// Wigner function of the Gaussian state.
pub fn wigner(state: &GaussianState, x: f64, p: f64) -> f64 {
    let det = state.det();
    let inv = state.sigma.try_inverse().unwrap_or_else(Matrix2::zeros);
    let v = Vector2::new(x, p) - state.d;
    let q = (v.transpose() * inv * v)[(0, 0)];
    (-0.5 * q).exp() / (2.0 * PI * det.sqrt())
}
