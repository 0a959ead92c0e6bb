//! Engine-versus-oracle consistency report.
//!
//! Engine numbers that disagree with the Fock-space oracle make the report fail.
//! Closed-form discrepancies are measured and printed but never fail it.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{Matrix2, Vector2};

use crate::electron::{steady_expectations, Form};
use crate::error::{Error, Result};
use crate::fisher::{self, Convention, StateDerivative};
use crate::fock;
use crate::gaussian::{
    chain_drift_with_drive, chain_state_inflated, chain_steady_residuals, drift_for, ground_state_lossless,
    stationary_covariance, steady_state_cavity, steady_state_chain_with_drive, DisplacementDecay, DriftSpec,
    GaussianState,
};
use crate::model::{critical_coupling, current_factor, drive_strength, validate_params, Regime, SystemParams};
use crate::sweep::config::SweepConfig;
use crate::sweep::csv::{Cell, Table};
use crate::sweep::figures::cavity_boundary;
use crate::sweep::{par_map, prepare_convention, RunOutput};

/// Relative tolerance of every engine-versus-oracle comparison.
pub const CHECK_RTOL: f64 = 1e-4;
/// Relative size of an injected fault.
pub const FAULT_SIZE: f64 = 0.01;
/// Phases at which homodyne Fisher information is compared.
pub const CHECK_PHIS: [f64; 2] = [0.0, 0.25 * PI];
/// Chain length of the chain-loss check points, small enough for the oracle.
pub const CHECK_SITES: usize = 32;

/// Deliberate 1% perturbations used to confirm that the report catches errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Fault {
    /// Bath covariance of the moment equations.
    SigmaLin,
    /// Closed-form cavity-loss steady covariance.
    CavityFormula,
    /// Drive strength of the chain-loss regime.
    Drive,
}

impl Fault {
    pub const ALL: [Fault; 3] = [Fault::SigmaLin, Fault::CavityFormula, Fault::Drive];

    pub fn name(self) -> &'static str {
        match self {
            Fault::SigmaLin => "sigma-lin",
            Fault::CavityFormula => "cavity-formula",
            Fault::Drive => "drive",
        }
    }

    pub fn parse(s: &str) -> Option<Fault> {
        Fault::ALL.into_iter().find(|f| f.name() == s)
    }
}

fn scale_if(on: bool) -> f64 {
    if on {
        1.0 + FAULT_SIZE
    } else {
        1.0
    }
}

fn drive(p: &SystemParams, fault: Option<Fault>) -> Result<f64> {
    Ok(drive_strength(p)? * scale_if(fault == Some(Fault::Drive)))
}

/// The engine state with an optional injected fault.
pub fn engine_state(p: &SystemParams, regime: Regime, fault: Option<Fault>) -> Result<GaussianState> {
    match regime {
        Regime::Lossless => ground_state_lossless(p),
        Regime::CavityLoss => {
            validate_params(p, regime)?;
            let mut s = steady_state_cavity(p)?;
            s.sigma *= scale_if(fault == Some(Fault::CavityFormula));
            Ok(s)
        }
        Regime::ChainLoss => {
            validate_params(p, regime)?;
            steady_state_chain_with_drive(p, drive(p, fault)?)
        }
    }
}

/// Stationary point of the moment equations, with an optional injected fault.
pub fn moment_state(p: &SystemParams, regime: Regime, fault: Option<Fault>) -> Result<GaussianState> {
    let mut spec = match regime {
        Regime::ChainLoss => {
            validate_params(p, regime)?;
            chain_drift_with_drive(p, drive(p, fault)?)
        }
        _ => drift_for(p, regime)?,
    };
    spec.sigma_lin *= scale_if(fault == Some(Fault::SigmaLin));
    let sigma = stationary_covariance(&spec)?;
    let d = moment_displacement(&spec)?;
    Ok(GaussianState { d, sigma })
}

/// Fixed point of the first-moment equation of `spec`.
pub fn moment_displacement(spec: &DriftSpec) -> Result<Vector2<f64>> {
    let m = spec.b - Matrix2::identity() * spec.displacement_rate();
    m.try_inverse()
        .map(|inv| -(inv * spec.c))
        .ok_or_else(|| Error::UnstableRegime("moment drift is singular".into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckItem {
    pub regime: Regime,
    pub quantity: String,
    pub params: SystemParams,
    pub phi: Option<f64>,
    pub engine: f64,
    pub oracle: f64,
    pub error: f64,
    pub pass: bool,
}

/// Largest moment deviation relative to the largest oracle moment; `sigma_11` is shown.
fn moment_item(
    regime: Regime,
    quantity: &str,
    p: &SystemParams,
    e: &GaussianState,
    d: &Vector2<f64>,
    s: &Matrix2<f64>,
) -> CheckItem {
    let diff = (e.d - d).amax().max((e.sigma - s).amax());
    let error = diff / d.amax().max(s.amax()).max(1e-12);
    CheckItem {
        regime,
        quantity: quantity.to_string(),
        params: *p,
        phi: None,
        engine: e.sigma[(0, 0)],
        oracle: s[(0, 0)],
        error,
        pass: error <= CHECK_RTOL,
    }
}

fn item(regime: Regime, quantity: &str, p: &SystemParams, phi: Option<f64>, engine: f64, oracle: f64) -> CheckItem {
    let error = (engine - oracle).abs() / oracle.abs().max(1e-12);
    CheckItem {
        regime,
        quantity: quantity.to_string(),
        params: *p,
        phi,
        engine,
        oracle,
        error,
        pass: error <= CHECK_RTOL,
    }
}

fn failed(regime: Regime, quantity: &str, p: &SystemParams, e: &Error) -> CheckItem {
    CheckItem {
        regime,
        quantity: format!("{quantity} ({e})"),
        params: *p,
        phi: None,
        engine: f64::NAN,
        oracle: f64::NAN,
        error: f64::INFINITY,
        pass: false,
    }
}

/// Engine-versus-oracle comparisons at one point.
pub fn check_point(p: &SystemParams, regime: Regime, convention: Convention, fault: Option<Fault>) -> Vec<CheckItem> {
    let mut out = Vec::new();
    let n_max = fock::default_nmax(p, regime);
    let h = fock::default_step(p);
    let rho = match fock::oracle_state(p, regime, n_max) {
        Ok(r) => r,
        Err(e) => return vec![failed(regime, "oracle state", p, &e)],
    };
    let (d_o, s_o) = rho.moments();
    match engine_state(p, regime, fault) {
        Ok(e) => out.push(moment_item(regime, "moments (closed form)", p, &e, &d_o, &s_o)),
        Err(e) => out.push(failed(regime, "moments (closed form)", p, &e)),
    }
    if regime != Regime::Lossless {
        match moment_state(p, regime, fault) {
            Ok(e) => out.push(moment_item(regime, "moments (moment equations)", p, &e, &d_o, &s_o)),
            Err(e) => out.push(failed(regime, "moments (moment equations)", p, &e)),
        }
    }
    let state = engine_state(p, regime, fault);
    let deriv: Result<StateDerivative> =
        fisher::derivative_of(&|q| engine_state(q, regime, fault), p, fisher::default_step(p));
    let (state, deriv) = match (state, deriv) {
        (Ok(s), Ok(d)) => (s, d),
        (Err(e), _) | (_, Err(e)) => {
            out.push(failed(regime, "engine derivative", p, &e));
            return out;
        }
    };
    match (
        fisher::qfi_engine_with(&state, &deriv, regime, convention),
        fock::qfi_sld(p, regime, n_max, h),
    ) {
        (Ok(e), Ok(o)) => out.push(item(regime, "qfi", p, None, e, o)),
        (Err(e), _) | (_, Err(e)) => out.push(failed(regime, "qfi", p, &e)),
    }
    for phi in CHECK_PHIS {
        match (
            fisher::cfi_homodyne(&state, &deriv, phi),
            fock::cfi_numeric(p, regime, phi, n_max, h, None),
        ) {
            (Ok(e), Ok(o)) => out.push(item(regime, "cfi", p, Some(phi), e, o)),
            (Err(e), _) | (_, Err(e)) => out.push(failed(regime, "cfi", p, &e)),
        }
    }
    out
}

/// The points the report compares against the oracle.
pub fn check_points(base: &SystemParams) -> Vec<(Regime, SystemParams)> {
    let unit = SystemParams {
        omega0: 1.0,
        t_hop: 1.0,
        ..*base
    };
    let mut pts = Vec::new();
    for g in [0.3, 0.6, 0.8] {
        pts.push((Regime::Lossless, unit.with_g(g)));
    }
    for g in [0.4, 0.8] {
        for k in [0.1, 0.4] {
            pts.push((Regime::CavityLoss, unit.with_g(g).with_kappa_ph(k)));
        }
    }
    for (eta, k) in [(2.41, 0.1), (1.5, 0.5)] {
        pts.push((
            Regime::ChainLoss,
            unit.with_g(0.88).with_sites(CHECK_SITES).with_eta(eta).with_kappa_ph(k),
        ));
    }
    pts
}

/// Closed-form over engine ratio statistics over one regime's grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioStats {
    pub regime: Regime,
    pub quantity: String,
    pub mean: f64,
    /// Standard deviation over mean.
    pub spread: f64,
    pub count: usize,
}

fn stats(regime: Regime, quantity: &str, v: &[f64]) -> RatioStats {
    let v: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    RatioStats {
        regime,
        quantity: quantity.to_string(),
        mean,
        spread: var.sqrt() / mean.abs(),
        count: v.len(),
    }
}

/// Grids on which the closed forms are compared with the engine.
pub fn closed_form_grid(regime: Regime) -> Vec<SystemParams> {
    let base = SystemParams::default();
    match regime {
        Regime::Lossless => (1..=8).map(|i| base.with_g(0.1 * i as f64)).collect(),
        Regime::CavityLoss => (1..=8)
            .flat_map(|i| [0.1, 0.3, 0.5].map(|k| base.with_g(0.1 * i as f64).with_kappa_ph(k)))
            .collect(),
        Regime::ChainLoss => [0.5, 1.0, 2.41, 5.0, 10.0]
            .into_iter()
            .flat_map(|eta| [0.1, 0.3, 0.5].map(|k| base.with_eta(eta).with_kappa_ph(k)))
            .collect(),
    }
}

/// Ratio statistics of the closed forms against the engine for one regime.
pub fn closed_form_stats(regime: Regime, convention: Convention) -> Result<Vec<RatioStats>> {
    let grid = closed_form_grid(regime);
    let mut q = Vec::new();
    let mut c0 = Vec::new();
    let mut c1 = Vec::new();
    for p in &grid {
        let s = fisher::engine_state(p, regime)?;
        let d = fisher::state_derivative(p, regime, fisher::default_step(p))?;
        let qe = fisher::qfi_engine_with(&s, &d, regime, convention)?;
        q.push(fisher::qfi_closed(p, regime)?.value / qe);
        c0.push(fisher::cfi_closed(p, regime, 0.0)?.value / fisher::cfi_homodyne(&s, &d, 0.0)?);
        c1.push(fisher::cfi_closed(p, regime, 0.25 * PI)?.value / fisher::cfi_homodyne(&s, &d, 0.25 * PI)?);
    }
    Ok(vec![
        stats(regime, "qfi", &q),
        stats(regime, "cfi(phi=0)", &c0),
        stats(regime, "cfi(phi=0.25pi)", &c1),
    ])
}

fn point_label(p: &SystemParams, regime: Regime) -> String {
    match regime {
        Regime::Lossless => format!("g={}", p.g),
        Regime::CavityLoss => format!("g={} kappa_ph={}", p.g, p.kappa_ph),
        Regime::ChainLoss => format!(
            "L={} eta={} kappa_ph={}",
            p.n_sites,
            p.eta.unwrap_or(f64::NAN),
            p.kappa_ph
        ),
    }
}

/// The `check` command.
pub fn cmd_check(cfg: &SweepConfig, fault: Option<Fault>) -> Result<RunOutput> {
    let arb = fisher::arbitration()?;
    let convention = prepare_convention()?;
    let points = check_points(&cfg.params);
    let items: Vec<CheckItem> = par_map(cfg.jobs, &points, |(regime, p)| {
        check_point(p, *regime, convention, fault)
    })?
    .into_iter()
    .flatten()
    .collect();
    let consistent = items.iter().all(|i| i.pass);

    let mut r = String::new();
    let _ = writeln!(r, "critchain {} consistency report", env!("CARGO_PKG_VERSION"));
    if let Some(f) = fault {
        let _ = writeln!(r, "injected fault: {} (+{}%)", f.name(), FAULT_SIZE * 100.0);
    }

    let _ = writeln!(r, "\n== convention arbitration");
    let _ = writeln!(
        r,
        "cavity-loss point g={} kappa_ph={}: oracle QFI {:.10e}",
        arb.cavity_point.g, arb.cavity_point.kappa_ph, arb.cavity_oracle
    );
    for (c, v) in &arb.cavity_variants {
        let _ = writeln!(
            r,
            "  covariance term, {:<26} {:.10e}  rel. dev. {:.2e}",
            c.name(),
            v,
            (v - arb.cavity_oracle).abs() / arb.cavity_oracle
        );
    }
    let _ = writeln!(
        r,
        "chain-loss point L={} eta={}: oracle QFI {:.10e}",
        arb.chain_point.n_sites,
        arb.chain_point.eta.unwrap_or(f64::NAN),
        arb.chain_oracle
    );
    for (w, v) in &arb.chain_variants {
        let _ = writeln!(
            r,
            "  displacement {:<10} {:.10e}  rel. dev. {:.2e}",
            w.name(),
            v,
            (v - arb.chain_oracle).abs() / arb.chain_oracle
        );
    }
    let _ = writeln!(r, "selected: {}", convention.label());

    let _ = writeln!(r, "\n== engine vs oracle (tolerance {CHECK_RTOL:e} relative)");
    for i in &items {
        let phi = i.phi.map(|f| format!(" phi={:.2}pi", f / PI)).unwrap_or_default();
        let _ = writeln!(
            r,
            "{} {:<7} {:<28} {}{}: engine {:.8e} oracle {:.8e} rel. err {:.2e}",
            if i.pass { "PASS" } else { "FAIL" },
            i.regime.name(),
            i.quantity,
            point_label(&i.params, i.regime),
            phi,
            i.engine,
            i.oracle,
            i.error
        );
    }
    let worst = items.iter().map(|i| i.error).fold(0.0f64, f64::max);
    let _ = writeln!(r, "max relative error: {worst:.3e}");

    let _ = writeln!(r, "\n== closed forms / engine (reported, not enforced)");
    let mut stat_rows = Vec::new();
    for regime in Regime::ALL {
        match closed_form_stats(regime, convention) {
            Ok(v) => {
                for s in v {
                    let _ = writeln!(
                        r,
                        "{:<8} {:<16} mean ratio {:.8e}  std/mean {:.3e}  over {} points{}",
                        regime.name(),
                        s.quantity,
                        s.mean,
                        s.spread,
                        s.count,
                        if s.spread < 1e-6 { "" } else { "  NOT CONSTANT" }
                    );
                    stat_rows.push(s);
                }
            }
            Err(e) => {
                let _ = writeln!(r, "{:<8} statistics unavailable: {e}", regime.name());
            }
        }
    }
    let lossless_phi0: Vec<f64> = (1..=8)
        .map(|i| fisher::cfi_closed_lossless(&SystemParams::default().with_g(0.1 * i as f64), 0.0).unwrap_or(f64::NAN))
        .collect();
    let lossless_q: Vec<f64> = (1..=8)
        .map(|i| fisher::qfi_closed_lossless(&SystemParams::default().with_g(0.1 * i as f64)).unwrap_or(f64::NAN))
        .collect();
    let max_dev = lossless_phi0.iter().map(|v| (v - 1.0).abs()).fold(0.0f64, f64::max);
    let _ = writeln!(
        r,
        "finding: the closed-form lossless homodyne CFI at phi = 0 equals 1 at every g (max |F - 1| = {max_dev:.1e} for g = 0.1..0.8), \
         while the closed-form lossless QFI runs from {:.3e} to {:.3e}; the two closed forms cannot both be the plotted quantities.",
        lossless_q[0],
        lossless_q[7]
    );
    let _ = writeln!(
        r,
        "finding: the closed-form lossless QFI and CFI carry no 1/t_h^2 factor, unlike the cavity-loss and chain-loss expressions."
    );

    let _ = writeln!(r, "\n== stability thresholds");
    let p0 = SystemParams {
        omega0: 1.0,
        t_hop: 1.0,
        ..cfg.params
    };
    let gc = critical_coupling(&p0);
    let _ = writeln!(r, "g_c = sqrt(pi omega0 / (4 t_h)) = {gc:.12}");
    for k in [0.0, 0.1, 0.3, 0.5, 1.0] {
        let p = p0.with_kappa_ph(k);
        let gk = cavity_boundary(&p);
        let below = validate_params(&p.with_g(gk * (1.0 - 1e-6)), Regime::CavityLoss).is_ok();
        let above = validate_params(&p.with_g(gk * (1.0 + 1e-6)), Regime::CavityLoss).is_ok();
        let _ = writeln!(
            r,
            "kappa_ph = {k:<4}: cavity-loss boundary g = g_c sqrt(1 + kappa_ph^2/omega0^2) = {gk:.12} (g_c shift {:+.3e}); accepted just below: {below}, just above: {above}",
            gk - gc
        );
    }

    let _ = writeln!(r, "\n== chain-loss covariance");
    let pc = SystemParams::default();
    if let Ok(l) = drive_strength(&pc) {
        let vac = steady_state_chain_with_drive(&pc, l)?;
        let inflated = chain_state_inflated(&pc, l)?;
        let rv = chain_steady_residuals(&pc, l, &vac);
        let ri = chain_steady_residuals(&pc, l, &inflated);
        let fmt = |v: &[f64; 5]| v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(r, "Lambda = {l:.12}");
        let _ = writeln!(r, "stationarity residuals, vacuum covariance:   {}", fmt(&rv));
        let _ = writeln!(r, "stationarity residuals, inflated covariance: {}", fmt(&ri));
    }

    let _ = writeln!(r, "\n== chain-loss current and displacement");
    if let (Ok(l), Some(eta)) = (drive_strength(&pc), pc.eta) {
        let j = steady_expectations(&pc, Form::Continuum)?.j_bar;
        let j_discrete = steady_expectations(&pc, Form::Discrete)?.j_bar;
        let n = pc.n_sites as f64;
        let _ = writeln!(
            r,
            "J(inf) at L = {}: continuum {j:.10e}, grid sum {j_discrete:.10e}, Lambda sqrt(L)/(g sqrt 2) = {:.10e}",
            pc.n_sites,
            l * n.sqrt() / (pc.g * 2f64.sqrt())
        );
        let _ = writeln!(
            r,
            "t_h sqrt(L) f(eta) = {:.10e} differs from the grid sum by a factor {:.6e} = sqrt(L); the L-linear form is used",
            pc.t_hop * n.sqrt() * current_factor(eta),
            j_discrete / (pc.t_hop * n.sqrt() * current_factor(eta))
        );
        let mut spec = chain_drift_with_drive(&pc, l);
        let d_kappa = moment_displacement(&spec)?;
        spec.decay = DisplacementDecay::TwoKappa;
        let d_two = moment_displacement(&spec)?;
        let _ = writeln!(
            r,
            "steady displacement with relaxation rate kappa_ph: ({:.10e}, {:.10e}); with 2 kappa_ph: ({:.10e}, {:.10e})",
            d_kappa[0], d_kappa[1], d_two[0], d_two[1]
        );
    }

    let _ = writeln!(
        r,
        "\nresult: {}",
        if consistent {
            "engine agrees with the oracle"
        } else {
            "ENGINE DISAGREES WITH THE ORACLE"
        }
    );

    let mut table = Table::new(
        "check",
        &[
            "regime",
            "quantity",
            "g",
            "kappa_ph",
            "eta",
            "sites",
            "phi",
            "engine",
            "oracle",
            "rel_error",
            "status",
        ],
    );
    for i in &items {
        table.push(vec![
            Cell::Text(i.regime.name().to_string()),
            Cell::Text(i.quantity.replace(',', ";")),
            Cell::Num(i.params.g),
            Cell::Num(i.params.kappa_ph),
            Cell::Num(i.params.eta.unwrap_or(f64::NAN)),
            Cell::Int(i.params.n_sites as i64),
            Cell::Num(i.phi.unwrap_or(f64::NAN)),
            Cell::Num(i.engine),
            Cell::Num(i.oracle),
            Cell::Num(i.error),
            Cell::Text(if i.pass { "PASS" } else { "FAIL" }.to_string()),
        ]);
    }
    let mut closed = Table::new(
        "check_closed",
        &["regime", "quantity", "mean_ratio", "std_over_mean", "points"],
    );
    for s in stat_rows {
        closed.push(vec![
            Cell::Text(s.regime.name().to_string()),
            Cell::Text(s.quantity),
            Cell::Num(s.mean),
            Cell::Num(s.spread),
            Cell::Int(s.count as i64),
        ]);
    }
    Ok(RunOutput {
        tables: vec![table, closed],
        plots: Vec::new(),
        convention: Some(convention),
        report: Some(r),
        consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fault_names_round_trip() {
        for f in Fault::ALL {
            assert_eq!(Fault::parse(f.name()), Some(f));
        }
        assert_eq!(Fault::parse("none"), None);
    }

    #[test]
    fn moment_state_matches_closed_forms() {
        let p = SystemParams::default().with_g(0.6).with_kappa_ph(0.2);
        let a = moment_state(&p, Regime::CavityLoss, None).unwrap();
        let b = engine_state(&p, Regime::CavityLoss, None).unwrap();
        assert!((a.sigma - b.sigma).amax() < 1e-12);
        let c = SystemParams::default();
        let a = moment_state(&c, Regime::ChainLoss, None).unwrap();
        let b = engine_state(&c, Regime::ChainLoss, None).unwrap();
        assert!((a.d - b.d).amax() < 1e-12 && (a.sigma - b.sigma).amax() < 1e-12);
        let f = moment_state(&p, Regime::CavityLoss, Some(Fault::SigmaLin)).unwrap();
        assert_relative_eq!(f.sigma[(0, 0)], 1.01 * b_sigma(&p), max_relative = 1e-12);
    }

    fn b_sigma(p: &SystemParams) -> f64 {
        engine_state(p, Regime::CavityLoss, None).unwrap().sigma[(0, 0)]
    }

    #[test]
    fn faults_move_the_engine_by_one_percent() {
        let c = SystemParams::default();
        let a = engine_state(&c, Regime::ChainLoss, None).unwrap();
        let b = engine_state(&c, Regime::ChainLoss, Some(Fault::Drive)).unwrap();
        assert_relative_eq!(b.d[0], 1.01 * a.d[0], max_relative = 1e-12);
        let p = SystemParams::default().with_g(0.5);
        let a = engine_state(&p, Regime::CavityLoss, None).unwrap();
        let b = engine_state(&p, Regime::CavityLoss, Some(Fault::CavityFormula)).unwrap();
        assert_relative_eq!(b.sigma[(1, 1)], 1.01 * a.sigma[(1, 1)], max_relative = 1e-12);
    }
}
