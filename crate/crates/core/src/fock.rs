//! Brute-force reference computations in a truncated photon-number basis.
//!
//! Everything here is deliberately independent of the Gaussian machinery: the
//! states are built from Hamiltonian matrices and the vectorised Liouvillian,
//! and the information measures come from eigendecompositions and explicit
//! quadrature densities.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2, Vector2};
use num_complex::Complex64;

use crate::electron::{fs_expectations, steady_expectations, Form};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, symmetric_eigen, BandedMatrix};
use crate::model::{critical_coupling, validate_params, Regime, SystemParams};

/// Population allowed above 90% of the basis before the truncation is deemed unhealthy.
pub const TAIL_LIMIT: f64 = 1e-8;
/// Extra levels used for the spectral ladder check.
pub const LADDER_STEP: usize = 20;
/// Eigenvalue-sum threshold in the SLD formula.
pub const SLD_EPS: f64 = 1e-12;
/// Relative agreement required between the `h` and `h/2` derivative estimates.
pub const STEP_RTOL: f64 = 1e-3;
/// Floor applied to probability densities in the Fisher integrand.
pub const DENSITY_FLOOR: f64 = 1e-300;

/// Dense operator on the truncated number basis `|0>, ..., |N_max>`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    pub entries: DMatrix<Complex64>,
}

impl FockOperator {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn from_real(m: &DMatrix<f64>) -> Self {
        FockOperator {
            entries: m.map(|v| Complex64::new(v, 0.0)),
        }
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.entries - self.entries.adjoint()).camax()
    }
}

/// Density matrix on the truncated number basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensity {
    pub entries: DMatrix<Complex64>,
}

impl FockDensity {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn pure(psi: &[Complex64]) -> Self {
        let n = psi.len();
        FockDensity {
            entries: DMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj()),
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    /// Population of the levels above 90% of the truncation.
    pub fn tail_population(&self) -> f64 {
        let n_max = self.dim() - 1;
        let cut = (0.9 * n_max as f64).floor() as usize;
        (cut + 1..=n_max).map(|n| self.entries[(n, n)].re).sum()
    }

    /// Trace, hermiticity, positivity and tail checks.
    pub fn check(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::Truncation(format!("trace {tr} differs from 1")));
        }
        let herm = (&self.entries - self.entries.adjoint()).camax();
        if herm > 1e-10 {
            return Err(Error::Truncation(format!("hermiticity defect {herm:e}")));
        }
        let (vals, _) = hermitian_eigen(&self.entries);
        if vals[0] < -1e-10 {
            return Err(Error::Truncation(format!("negative eigenvalue {:e}", vals[0])));
        }
        let tail = self.tail_population();
        if tail > TAIL_LIMIT {
            return Err(Error::Truncation(format!("tail population {tail:e}")));
        }
        Ok(())
    }

    pub fn expectation(&self, op: &DMatrix<f64>) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                acc += self.entries[(i, j)] * op[(j, i)];
            }
        }
        acc.re
    }

    /// Displacement `(<x>, <p>)` and symmetrised covariance matrix.
    pub fn moments(&self) -> (Vector2<f64>, Matrix2<f64>) {
        let dim = self.dim();
        let x = position(dim);
        let xx = x_squared(dim);
        let pp = p_squared(dim);
        // <p> and <{x,p}>/2 come from the imaginary parts of the first and
        // second off-diagonals: p = i(a^dag - a)/sqrt2, {x,p}/2 = i(a^dag^2 - a^2)/2
        let mut mean_p = 0.0;
        for n in 0..dim - 1 {
            mean_p -= 2f64.sqrt() * ((n + 1) as f64).sqrt() * self.entries[(n, n + 1)].im;
        }
        let mut sym_xp = 0.0;
        for n in 0..dim.saturating_sub(2) {
            sym_xp -= (((n + 1) * (n + 2)) as f64).sqrt() * self.entries[(n, n + 2)].im;
        }
        let mean_x = self.expectation(&x);
        let d = Vector2::new(mean_x, mean_p);
        let sigma = Matrix2::new(
            self.expectation(&xx) - mean_x * mean_x,
            sym_xp - mean_x * mean_p,
            sym_xp - mean_x * mean_p,
            self.expectation(&pp) - mean_p * mean_p,
        );
        (d, sigma)
    }
}

/// Annihilation operator with `a[n-1, n] = sqrt(n)`.
pub fn annihilation(dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |i, j| if j == i + 1 { (j as f64).sqrt() } else { 0.0 })
}

/// `a + a^dag`.
pub fn field(dim: usize) -> DMatrix<f64> {
    let a = annihilation(dim);
    &a + a.transpose()
}

/// `x = (a + a^dag)/sqrt 2`.
pub fn position(dim: usize) -> DMatrix<f64> {
    field(dim) / 2f64.sqrt()
}

/// `(a + a^dag)^2` with the exact matrix elements, free of the truncation edge artefact.
pub fn field_squared(dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            2.0 * i as f64 + 1.0
        } else if j == i + 2 {
            (((i + 1) * (i + 2)) as f64).sqrt()
        } else if i == j + 2 {
            (((j + 1) * (j + 2)) as f64).sqrt()
        } else {
            0.0
        }
    })
}

fn x_squared(dim: usize) -> DMatrix<f64> {
    field_squared(dim) / 2.0
}

fn p_squared(dim: usize) -> DMatrix<f64> {
    // p^2 = (2 a^dag a + 1 - a^2 - a^dag^2)/2
    DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            (2.0 * i as f64 + 1.0) / 2.0
        } else if j == i + 2 {
            -(((i + 1) * (i + 2)) as f64).sqrt() / 2.0
        } else if i == j + 2 {
            -(((j + 1) * (j + 2)) as f64).sqrt() / 2.0
        } else {
            0.0
        }
    })
}

fn number_plus_half(dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |i, j| if i == j { i as f64 + 0.5 } else { 0.0 })
}

fn check_nmax(n_max: usize) -> Result<()> {
    if n_max < 4 {
        return Err(Error::Range(format!("N_max >= 4 violated: {n_max}")));
    }
    Ok(())
}

fn quadrature_functions_real(dim: usize, lambda: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let (vals, vecs) = symmetric_eigen(&field(dim));
    let build = |f: &dyn Fn(f64) -> f64| {
        let scaled = DMatrix::from_fn(dim, dim, |r, c| vecs[(r, c)] * f(lambda * vals[c]));
        &scaled * vecs.transpose()
    };
    (build(&f64::cos), build(&f64::sin))
}

/// `cos(lambda (a + a^dag))` and `sin(lambda (a + a^dag))` on `N_max + 1` levels.
pub fn build_quadrature_functions(n_max: usize, lambda: f64) -> Result<(FockOperator, FockOperator)> {
    check_nmax(n_max)?;
    if !lambda.is_finite() {
        return Err(Error::Range(format!("lambda must be finite, got {lambda}")));
    }
    let (c, s) = quadrature_functions_real(n_max + 1, lambda);
    Ok((FockOperator::from_real(&c), FockOperator::from_real(&s)))
}

fn coupling(p: &SystemParams) -> f64 {
    p.g / (p.n_sites as f64).sqrt()
}

fn full_matrix(p: &SystemParams, t_bar: f64, j_bar: f64, dim: usize) -> DMatrix<f64> {
    let (c, s) = quadrature_functions_real(dim, coupling(p));
    c * t_bar + s * j_bar + number_plus_half(dim) * p.omega0
}

/// Second-order Hamiltonian with the electron operators replaced by numbers.
fn truncated_matrix(p: &SystemParams, t_bar: f64, j_bar: f64, dim: usize) -> DMatrix<f64> {
    let lam = coupling(p);
    let mut h =
        field(dim) * (lam * j_bar) - field_squared(dim) * (0.5 * lam * lam * t_bar) + number_plus_half(dim) * p.omega0;
    for i in 0..dim {
        h[(i, i)] += t_bar;
    }
    h
}

fn ladder_check(e_small: f64, e_big: f64, what: &str) -> Result<()> {
    let shift = (e_small - e_big).abs();
    if shift > 1e-8 * e_small.abs().max(1.0) {
        return Err(Error::Truncation(format!(
            "{what}: ground energy moved by {shift:e} when adding {LADDER_STEP} levels"
        )));
    }
    Ok(())
}

fn fs_numbers(p: &SystemParams, s: f64) -> Result<(f64, f64)> {
    let e = fs_expectations(p, s, Form::Continuum)?;
    Ok((e.t_bar, e.j_bar))
}

/// Ascending spectrum of the full cavity Hamiltonian for a Fermi sea centred at `s`.
pub fn full_hamiltonian_spectrum(p: &SystemParams, s: f64, n_max: usize) -> Result<Vec<f64>> {
    check_nmax(n_max)?;
    let (t_bar, j_bar) = fs_numbers(p, s)?;
    let (vals, _) = symmetric_eigen(&full_matrix(p, t_bar, j_bar, n_max + 1));
    let (big, _) = symmetric_eigen(&full_matrix(p, t_bar, j_bar, n_max + 1 + LADDER_STEP));
    ladder_check(vals[0], big[0], "full Hamiltonian")?;
    Ok(vals)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSpectrum {
    pub eigenvalues: Vec<f64>,
    /// `None` when the effective frequency is not real: no photon ground state.
    pub effective_frequency: Option<f64>,
}

impl TruncatedSpectrum {
    pub fn has_ground_state(&self) -> bool {
        self.effective_frequency.is_some()
    }
}

/// `omega0 sqrt(1 - 2 g^2 T / (L omega0))`, or `None` when the radicand is not positive.
pub fn effective_frequency(p: &SystemParams, t_bar: f64) -> Option<f64> {
    let radicand = 1.0 - 2.0 * p.g * p.g * t_bar / (p.n_sites as f64 * p.omega0);
    (radicand > 0.0).then(|| p.omega0 * radicand.sqrt())
}

/// Spectrum of the second-order Hamiltonian and its effective cavity frequency.
pub fn truncated_hamiltonian_spectrum(p: &SystemParams, s: f64, n_max: usize) -> Result<TruncatedSpectrum> {
    check_nmax(n_max)?;
    let (t_bar, j_bar) = fs_numbers(p, s)?;
    let (vals, _) = symmetric_eigen(&truncated_matrix(p, t_bar, j_bar, n_max + 1));
    let freq = effective_frequency(p, t_bar);
    if freq.is_some() {
        let (big, _) = symmetric_eigen(&truncated_matrix(p, t_bar, j_bar, n_max + 1 + LADDER_STEP));
        ladder_check(vals[0], big[0], "truncated Hamiltonian")?;
    }
    Ok(TruncatedSpectrum {
        eigenvalues: vals,
        effective_frequency: freq,
    })
}

/// Number-basis amplitudes of `exp{zeta/2 (a^2 - a^dag^2)}|0>`.
fn squeezed_amplitudes(zeta: f64, dim: usize) -> Vec<Complex64> {
    let mut psi = vec![Complex64::new(0.0, 0.0); dim];
    let t = -zeta.tanh();
    let mut c = 1.0 / zeta.cosh().sqrt();
    let mut n = 0;
    while 2 * n < dim {
        psi[2 * n] = Complex64::new(c, 0.0);
        n += 1;
        let m = 2 * n;
        c *= t * ((m * (m - 1)) as f64).sqrt() / m as f64;
    }
    psi
}

fn normalise(psi: &mut [Complex64]) {
    let norm = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    psi.iter_mut().for_each(|c| *c /= norm);
}

/// Squeezed vacuum with squeeze exponent `1/4 ln(V/omega0)`, oriented so that it is
/// the ground state of the second-order Hamiltonian at `s = 0`.
pub fn squeezed_vacuum_state(p: &SystemParams, n_max: usize) -> Result<FockDensity> {
    check_nmax(n_max)?;
    if p.g >= critical_coupling(p) {
        return Err(Error::Range(format!(
            "g < g_c violated: g = {}, g_c = {}",
            p.g,
            critical_coupling(p)
        )));
    }
    let (t_bar, j_bar) = fs_numbers(p, 0.0)?;
    let freq = effective_frequency(p, t_bar).ok_or_else(|| Error::Range("no photon ground state".into()))?;
    let xi = 0.25 * (freq / p.omega0).ln();
    let dim = n_max + 1;
    let h = truncated_matrix(p, t_bar, j_bar, dim);
    let energy = |psi: &[Complex64]| {
        let rho = FockDensity::pure(psi);
        rho.expectation(&h)
    };
    let mut plus = squeezed_amplitudes(2.0 * xi, dim);
    let mut minus = squeezed_amplitudes(-2.0 * xi, dim);
    normalise(&mut plus);
    normalise(&mut minus);
    let psi = if energy(&plus) <= energy(&minus) { plus } else { minus };
    let rho = FockDensity::pure(&psi);
    let tail = rho.tail_population();
    if tail > TAIL_LIMIT {
        return Err(Error::Truncation(format!("squeezed state tail population {tail:e}")));
    }
    Ok(rho)
}

/// Ground state of the second-order Hamiltonian at `s = 0`, by diagonalisation.
pub fn truncated_ground_state(p: &SystemParams, n_max: usize) -> Result<FockDensity> {
    check_nmax(n_max)?;
    let (t_bar, j_bar) = fs_numbers(p, 0.0)?;
    if effective_frequency(p, t_bar).is_none() {
        return Err(Error::UnstableRegime("no photon ground state".into()));
    }
    let h = truncated_matrix(p, t_bar, j_bar, n_max + 1);
    let (_, vecs) = symmetric_eigen(&h);
    let psi: Vec<Complex64> = vecs.column(0).iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let rho = FockDensity::pure(&psi);
    let tail = rho.tail_population();
    if tail > TAIL_LIMIT {
        return Err(Error::Truncation(format!("ground state tail population {tail:e}")));
    }
    Ok(rho)
}

/// Photon Hamiltonian entering the master equation of each dissipative regime.
fn open_hamiltonian(p: &SystemParams, regime: Regime, dim: usize) -> Result<DMatrix<f64>> {
    match regime {
        Regime::CavityLoss => {
            let x = p.x_factor();
            let n = DMatrix::from_fn(dim, dim, |i, j| if i == j { i as f64 } else { 0.0 });
            Ok(n * p.omega0 - field_squared(dim) * (p.omega0 * x * p.g * p.g / 4.0))
        }
        Regime::ChainLoss => {
            let e = steady_expectations(p, Form::Discrete)?;
            Ok(truncated_matrix(p, e.t_bar, e.j_bar, dim))
        }
        Regime::Lossless => Err(Error::Range("the lossless regime has no master equation".into())),
    }
}

/// Steady state of `-i[H, rho] + kappa (2 a rho a^dag - a^dag a rho - rho a^dag a)`.
///
/// The vectorised generator is banded; the `(0,0)` equation is replaced by the
/// normalisation `rho_00 = 1` and the trace is fixed afterwards.
pub fn lindblad_steady_state(p: &SystemParams, regime: Regime, n_max: usize) -> Result<FockDensity> {
    check_nmax(n_max)?;
    validate_params(p, regime)?;
    if !(p.kappa_ph > 0.0) {
        return Err(Error::Range(format!("kappa_ph > 0 violated: {}", p.kappa_ph)));
    }
    let dim = n_max + 1;
    let h = open_hamiltonian(p, regime, dim)?;
    let kappa = p.kappa_ph;
    let idx = |m: usize, n: usize| m * dim + n;
    let i = Complex64::new(0.0, 1.0);
    let mut lv = BandedMatrix::new(dim * dim, 2 * dim, 2 * dim);
    for m in 0..dim {
        for n in 0..dim {
            let row = idx(m, n);
            for k in m.saturating_sub(2)..(m + 3).min(dim) {
                let hmk = h[(m, k)];
                if hmk != 0.0 {
                    lv.add(row, idx(k, n), -i * hmk);
                }
            }
            for k in n.saturating_sub(2)..(n + 3).min(dim) {
                let hkn = h[(k, n)];
                if hkn != 0.0 {
                    lv.add(row, idx(m, k), i * hkn);
                }
            }
            if m + 1 < dim && n + 1 < dim {
                let w = 2.0 * kappa * (((m + 1) * (n + 1)) as f64).sqrt();
                lv.add(row, idx(m + 1, n + 1), Complex64::new(w, 0.0));
            }
            lv.add(row, row, Complex64::new(-kappa * (m + n) as f64, 0.0));
        }
    }
    lv.set_row(0, &[(0, Complex64::new(1.0, 0.0))]);
    let mut rhs = vec![Complex64::new(0.0, 0.0); dim * dim];
    rhs[0] = Complex64::new(1.0, 0.0);
    let sol = lv.solve(rhs)?;
    let raw = DMatrix::from_fn(dim, dim, |m, n| sol[idx(m, n)]);
    let herm = (&raw + raw.adjoint()) * Complex64::new(0.5, 0.0);
    let tr = herm.trace();
    let rho = FockDensity { entries: herm / tr };
    let tail = rho.tail_population();
    if tail > TAIL_LIMIT {
        return Err(Error::Truncation(format!(
            "steady-state tail population {tail:e} at N_max = {n_max}"
        )));
    }
    Ok(rho)
}

/// The reference state of a regime: the diagonalised ground state without loss,
/// the Liouvillian steady state otherwise.
pub fn oracle_state(p: &SystemParams, regime: Regime, n_max: usize) -> Result<FockDensity> {
    match regime {
        Regime::Lossless => {
            validate_params(p, regime)?;
            truncated_ground_state(p, n_max)
        }
        _ => lindblad_steady_state(p, regime, n_max),
    }
}

/// Default truncation for a regime: 60 levels, 80 near the critical point, and
/// enough headroom for the coherent amplitude in the chain-loss regime.
pub fn default_nmax(p: &SystemParams, regime: Regime) -> usize {
    let near = p.g >= 0.95 * critical_coupling(p);
    let base = if near { 80 } else { 60 };
    match regime {
        Regime::Lossless => {
            // squeezed-vacuum populations fall off like tanh(r)^n
            let u = 1.0 - p.criticality();
            if u <= 0.0 {
                return base;
            }
            let t = (0.25 * u.ln()).tanh().abs();
            if t < 1e-3 {
                return base;
            }
            let n = (1e-12f64.ln() / t.ln()).ceil() as usize;
            base.max(((n + LADDER_STEP) as f64 / 0.9).ceil() as usize)
        }
        Regime::ChainLoss => {
            let amp = steady_expectations(p, Form::Discrete)
                .map(|e| {
                    let drive = 2f64.sqrt() * coupling(p) * e.j_bar;
                    let a = p.a_factor();
                    let dx = drive * p.omega0 / a;
                    let dp = drive * p.kappa_ph / a;
                    (dx * dx + dp * dp) / 2.0
                })
                .unwrap_or(0.0);
            base.max((amp + 10.0 * amp.sqrt() + 30.0).ceil() as usize)
        }
        Regime::CavityLoss => base,
    }
}

/// Default central-difference step `1e-5 max(1, |t_h|)`.
pub fn default_step(p: &SystemParams) -> f64 {
    1e-5 * p.t_hop.abs().max(1.0)
}

fn shifted(p: &SystemParams, dt: f64) -> SystemParams {
    p.with_t_hop(p.t_hop + dt)
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-14 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn sld_qfi(rho: &FockDensity, drho: &DMatrix<Complex64>) -> f64 {
    let (vals, vecs) = hermitian_eigen(&rho.entries);
    let rotated = vecs.adjoint() * drho * &vecs;
    let n = vals.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let s = vals[i] + vals[j];
            if s > SLD_EPS {
                acc += 2.0 * rotated[(i, j)].norm_sqr() / s;
            }
        }
    }
    acc
}

/// QFI from the symmetric logarithmic derivative of the reference state.
pub fn qfi_sld(p: &SystemParams, regime: Regime, n_max: usize, h: f64) -> Result<f64> {
    let rho = oracle_state(p, regime, n_max)?;
    let estimate = |step: f64| -> Result<f64> {
        let up = oracle_state(&shifted(p, step), regime, n_max)?;
        let down = oracle_state(&shifted(p, -step), regime, n_max)?;
        let drho = (&up.entries - &down.entries) / Complex64::new(2.0 * step, 0.0);
        Ok(sld_qfi(&rho, &drho))
    };
    let coarse = estimate(h)?;
    let fine = estimate(h / 2.0)?;
    if relative_gap(coarse, fine) > STEP_RTOL {
        return Err(Error::Step { coarse, fine });
    }
    Ok(coarse)
}

/// Hermite functions `psi_0..psi_{dim-1}` at `x`.
pub fn hermite_functions(dim: usize, x: f64) -> Vec<f64> {
    let mut psi = vec![0.0; dim];
    psi[0] = PI.powf(-0.25) * (-x * x / 2.0).exp();
    if dim > 1 {
        psi[1] = 2f64.sqrt() * x * psi[0];
    }
    for n in 1..dim.saturating_sub(1) {
        let nf = n as f64;
        psi[n + 1] = (2.0 / (nf + 1.0)).sqrt() * x * psi[n] - (nf / (nf + 1.0)).sqrt() * psi[n - 1];
    }
    psi
}

fn rotated_real_part(rho: &FockDensity, phi: f64) -> DMatrix<f64> {
    let dim = rho.dim();
    DMatrix::from_fn(dim, dim, |m, n| {
        let phase = Complex64::from_polar(1.0, -phi * (m as f64 - n as f64));
        (rho.entries[(m, n)] * phase).re
    })
}

/// Trapezoid rule on a (possibly non-uniform) grid.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

fn pdf_unchecked(rho: &FockDensity, phi: f64, x_grid: &[f64]) -> Vec<f64> {
    let re = rotated_real_part(rho, phi);
    let dim = rho.dim();
    x_grid
        .iter()
        .map(|&x| {
            let v = nalgebra::DVector::from_vec(hermite_functions(dim, x));
            v.dot(&(&re * &v)).max(0.0)
        })
        .collect()
}

/// Homodyne probability density of `cos(phi) x + sin(phi) p` on `x_grid`.
pub fn homodyne_pdf(rho: &FockDensity, phi: f64, x_grid: &[f64]) -> Result<Vec<f64>> {
    let pdf = pdf_unchecked(rho, phi, x_grid);
    let mass = trapezoid(x_grid, &pdf);
    if mass < 1.0 - 1e-4 {
        return Err(Error::Grid { mass });
    }
    Ok(pdf)
}

/// Mean and variance of the rotated quadrature, read off the density matrix.
pub fn quadrature_moments(rho: &FockDensity, phi: f64) -> (f64, f64) {
    let (d, s) = rho.moments();
    let c = Vector2::new(phi.cos(), phi.sin());
    (c.dot(&d), (c.transpose() * s * c)[(0, 0)])
}

/// Uniform grid spanning eight standard deviations around the quadrature mean.
pub fn default_x_grid(rho: &FockDensity, phi: f64, points: usize) -> Vec<f64> {
    let (mean, var) = quadrature_moments(rho, phi);
    let half = 8.0 * var.max(1e-6).sqrt();
    let n = points.max(3);
    (0..n)
        .map(|i| mean - half + 2.0 * half * i as f64 / (n - 1) as f64)
        .collect()
}

pub const DEFAULT_GRID_POINTS: usize = 2001;

/// Homodyne CFI from finite differences of the density on a fixed grid.
pub fn cfi_numeric(
    p: &SystemParams,
    regime: Regime,
    phi: f64,
    n_max: usize,
    h: f64,
    x_grid: Option<&[f64]>,
) -> Result<f64> {
    let rho = oracle_state(p, regime, n_max)?;
    let owned;
    let grid = match x_grid {
        Some(g) => g,
        None => {
            owned = default_x_grid(&rho, phi, DEFAULT_GRID_POINTS);
            &owned
        }
    };
    let base = homodyne_pdf(&rho, phi, grid)?;
    let estimate = |step: f64| -> Result<f64> {
        let up = pdf_unchecked(&oracle_state(&shifted(p, step), regime, n_max)?, phi, grid);
        let down = pdf_unchecked(&oracle_state(&shifted(p, -step), regime, n_max)?, phi, grid);
        let integrand: Vec<f64> = up
            .iter()
            .zip(&down)
            .zip(&base)
            .map(|((u, d), b)| {
                let dp = (u - d) / (2.0 * step);
                dp * dp / b.max(DENSITY_FLOOR)
            })
            .collect();
        Ok(trapezoid(grid, &integrand))
    };
    let coarse = estimate(h)?;
    let fine = estimate(h / 2.0)?;
    if relative_gap(coarse, fine) > STEP_RTOL {
        return Err(Error::Step { coarse, fine });
    }
    Ok(coarse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit(g: f64) -> SystemParams {
        SystemParams::default().with_g(g)
    }

    #[test]
    fn ladder_structure() {
        let a = annihilation(6);
        for n in 1..6 {
            assert_eq!(a[(n - 1, n)], (n as f64).sqrt());
        }
        assert_eq!(a[(1, 0)], 0.0);
        let f = field(6);
        let sq = &f * &f;
        let exact = field_squared(6);
        // identical except for the truncation edge
        for i in 0..5 {
            for j in 0..5 {
                assert_relative_eq!(sq[(i, j)], exact[(i, j)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn quadrature_functions_identity_and_vacuum() {
        let (c, s) = build_quadrature_functions(40, 0.0).unwrap();
        assert!((c.entries.clone() - DMatrix::identity(41, 41).map(|v: f64| Complex64::new(v, 0.0))).camax() < 1e-12);
        assert!(s.entries.camax() < 1e-12);
        let (c, s) = build_quadrature_functions(60, 0.3).unwrap();
        assert!(c.hermiticity_defect() < 1e-12 && s.hermiticity_defect() < 1e-12);
        assert_relative_eq!(c.entries[(0, 0)].re, (-0.045f64).exp(), epsilon = 1e-10);
        let id = &c.entries * &c.entries + &s.entries * &s.entries;
        let keep = 54;
        for i in 0..keep {
            for j in 0..keep {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)].re - target).abs() < 1e-10, "({i},{j})");
            }
        }
        assert!(build_quadrature_functions(3, 0.1).is_err());
    }

    #[test]
    fn decoupled_spectra() {
        let p = unit(0.0);
        let s: f64 = 0.4;
        let t_bar = 800.0 / PI * s.cos();
        let spec = full_hamiltonian_spectrum(&p, s, 30).unwrap();
        for (n, e) in spec.iter().take(10).enumerate() {
            assert_relative_eq!(*e, t_bar + n as f64 + 0.5, epsilon = 1e-9);
        }
        let tr = truncated_hamiltonian_spectrum(&p, s, 30).unwrap();
        assert_eq!(tr.effective_frequency, Some(1.0));
        for w in tr.eigenvalues.windows(2).take(10) {
            assert_relative_eq!(w[1] - w[0], 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn full_spectrum_symmetric_in_s() {
        let p = unit(0.5);
        let a = full_hamiltonian_spectrum(&p, 0.7, 60).unwrap();
        let b = full_hamiltonian_spectrum(&p, -0.7, 60).unwrap();
        for (x, y) in a.iter().zip(&b).take(20) {
            assert_relative_eq!(x, y, epsilon = 1e-9);
        }
    }

    #[test]
    fn truncated_effective_frequency() {
        let tr = truncated_hamiltonian_spectrum(&unit(0.5), 0.0, 60).unwrap();
        let v = tr.effective_frequency.unwrap();
        assert_relative_eq!(v, (1.0 - 1.0 / PI).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(v, 0.825_65, max_relative = 1e-5);
        // ground energy of the quadratic oscillator
        assert_relative_eq!(tr.eigenvalues[0], 800.0 / PI + v / 2.0, epsilon = 1e-9);
        let over = truncated_hamiltonian_spectrum(&unit(1.2), 0.0, 60).unwrap();
        assert!(!over.has_ground_state());
    }

    #[test]
    fn squeezed_vacuum_properties() {
        let vac = squeezed_vacuum_state(&unit(0.0), 40).unwrap();
        let (d, s) = vac.moments();
        assert!(d.norm() < 1e-14);
        assert_relative_eq!(s[(0, 0)], 0.5, epsilon = 1e-12);
        assert_relative_eq!(s[(1, 1)], 0.5, epsilon = 1e-12);

        let p = unit(0.5);
        let rho = squeezed_vacuum_state(&p, 80).unwrap();
        rho.check().unwrap();
        let (_, s) = rho.moments();
        assert_relative_eq!(s[(0, 0)] * s[(1, 1)] - s[(0, 1)].powi(2), 0.25, epsilon = 1e-9);
        let u = 1.0 - 1.0 / PI;
        assert_relative_eq!(s[(0, 0)], 0.5 / u.sqrt(), epsilon = 1e-9);

        let ground = truncated_ground_state(&p, 80).unwrap();
        let (_, h) = {
            let e = fs_expectations(&p, 0.0, Form::Continuum).unwrap();
            (0, truncated_matrix(&p, e.t_bar, e.j_bar, 81))
        };
        let e0 = ground.expectation(&h);
        // residual of the constructed state against the eigenproblem
        let psi: Vec<f64> = (0..81)
            .map(|n| rho.entries[(n, 0)].re / rho.entries[(0, 0)].re.sqrt())
            .collect();
        let v = nalgebra::DVector::from_vec(psi);
        let residual = (&h * &v - &v * e0).norm();
        assert!(residual < 1e-6, "{residual}");
        assert!(squeezed_vacuum_state(&unit(0.9), 80).is_err());
    }

    #[test]
    fn damped_empty_cavity_is_vacuum() {
        let p = unit(0.0).with_kappa_ph(0.3);
        let rho = lindblad_steady_state(&p, Regime::CavityLoss, 20).unwrap();
        rho.check().unwrap();
        assert_relative_eq!(rho.entries[(0, 0)].re, 1.0, epsilon = 1e-12);
        assert!(rho.entries.iter().skip(1).all(|c| c.norm() < 1e-12));
    }

    #[test]
    fn cavity_loss_moments() {
        let p = unit(0.5).with_kappa_ph(0.1);
        let rho = lindblad_steady_state(&p, Regime::CavityLoss, 60).unwrap();
        rho.check().unwrap();
        let (d, s) = rho.moments();
        assert!(d.norm() < 1e-12);
        // steady covariance of the quadratic master equation, solved by hand
        let b21 = 1.0 / PI - 1.0;
        let den = 4.0 * (0.01 - b21);
        assert_relative_eq!(s[(0, 0)], (2.0 * 0.01 + 1.0 - b21) / den, epsilon = 1e-6);
        assert_relative_eq!(s[(0, 0)], 0.615_048, epsilon = 1e-5);
        assert_relative_eq!(s[(0, 1)], (1.0 / PI) * 0.1 / den, epsilon = 1e-6);
        assert_relative_eq!(s[(1, 1)], (2.0 * 0.01 + b21 * b21 - b21) / den, epsilon = 1e-6);
    }

    #[test]
    fn chain_loss_displacement() {
        let p = SystemParams::default().with_sites(16);
        let rho = lindblad_steady_state(&p, Regime::ChainLoss, 50).unwrap();
        rho.check().unwrap();
        let (d, s) = rho.moments();
        let e = steady_expectations(&p, Form::Discrete).unwrap();
        let lambda = 2f64.sqrt() * p.g / 4.0 * e.j_bar;
        let a = p.a_factor();
        assert_relative_eq!(d[0], -lambda / a, epsilon = 1e-6);
        assert_relative_eq!(d[1], -lambda * 0.1 / a, epsilon = 1e-6);
        assert_relative_eq!(s[(0, 0)], 0.5, epsilon = 1e-6);
        assert_relative_eq!(s[(1, 1)], 0.5, epsilon = 1e-6);
    }

    #[test]
    fn lossless_qfi_matches_squeezing_derivative() {
        let p = unit(0.5);
        let q = qfi_sld(&p, Regime::Lossless, 80, default_step(&p)).unwrap();
        let u = 1.0 - 1.0 / PI;
        let exact = 2.0 * (0.25 / (PI * u)).powi(2);
        assert_relative_eq!(q, exact, max_relative = 1e-5);
        assert_relative_eq!(q, 2.7254e-2, max_relative = 1e-4);
        assert_eq!(qfi_sld(&unit(0.0), Regime::Lossless, 40, 1e-5).unwrap(), 0.0);
    }

    #[test]
    fn vacuum_homodyne() {
        let rho = squeezed_vacuum_state(&unit(0.0), 30).unwrap();
        let grid: Vec<f64> = (0..801).map(|i| -8.0 + 16.0 * i as f64 / 800.0).collect();
        for &phi in &[0.0, 0.7, 2.0] {
            let pdf = homodyne_pdf(&rho, phi, &grid).unwrap();
            let mass = trapezoid(&grid, &pdf);
            assert_relative_eq!(mass, 1.0, epsilon = 1e-6);
            let second: Vec<f64> = grid.iter().zip(&pdf).map(|(x, p)| x * x * p).collect();
            assert_relative_eq!(trapezoid(&grid, &second), 0.5, epsilon = 1e-6);
            for (x, p) in grid.iter().zip(&pdf).step_by(50) {
                assert_relative_eq!(*p, (-x * x).exp() / PI.sqrt(), epsilon = 1e-12);
            }
        }
        let narrow = [-0.1, 0.0, 0.1];
        assert!(matches!(homodyne_pdf(&rho, 0.0, &narrow), Err(Error::Grid { .. })));
    }

    #[test]
    fn squeezed_homodyne_variance() {
        let rho = squeezed_vacuum_state(&unit(0.5), 80).unwrap();
        let (_, s) = rho.moments();
        let grid = default_x_grid(&rho, 0.0, 2001);
        let pdf = homodyne_pdf(&rho, 0.0, &grid).unwrap();
        let second: Vec<f64> = grid.iter().zip(&pdf).map(|(x, p)| x * x * p).collect();
        assert_relative_eq!(trapezoid(&grid, &second), s[(0, 0)], epsilon = 1e-8);
    }

    #[test]
    fn lossless_cfi_saturates() {
        let p = unit(0.5);
        let h = default_step(&p);
        let cfi = cfi_numeric(&p, Regime::Lossless, 0.0, 80, h, None).unwrap();
        let qfi = qfi_sld(&p, Regime::Lossless, 80, h).unwrap();
        assert_relative_eq!(cfi, qfi, max_relative = 1e-5);
        assert_eq!(
            cfi_numeric(&unit(0.0), Regime::Lossless, 0.3, 30, h, None).unwrap(),
            0.0
        );
    }

    #[test]
    fn nmax_defaults() {
        assert_eq!(default_nmax(&unit(0.5), Regime::CavityLoss), 60);
        assert_eq!(default_nmax(&unit(0.87), Regime::CavityLoss), 80);
        let big = default_nmax(&SystemParams::default(), Regime::ChainLoss);
        assert!(big > 100);
    }
}
