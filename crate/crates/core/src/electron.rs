//! Electron-sector expectation values of the kinetic-energy and current
//! operators, for the Fermi-sea ground state and for the pumped/dissipative
//! steady state.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::model::{current_factor, SystemParams};

/// Grid points closer than this to a Fermi-window edge count as lying on it.
const EDGE_TOL: f64 = 1e-12;

/// Which way an expectation value is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Form {
    /// Closed-form integrals over the Brillouin zone.
    Continuum,
    /// Explicit sums over the `L` grid momenta.
    Discrete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElectronMode {
    FermiSea,
    SteadyState,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElectronSummary {
    pub t_bar: f64,
    pub j_bar: f64,
    /// Centre of the occupied window; only set for the Fermi sea.
    pub s_center: Option<f64>,
    pub mode: ElectronMode,
}

/// The `L` lattice momenta `k_j = -pi + 2 pi (j + 1) / L`, `j = 0..L`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    pub l: usize,
    pub k_values: Vec<f64>,
}

impl MomentumGrid {
    pub fn new(l: usize) -> Self {
        let step = 2.0 * PI / l as f64;
        let k_values = (0..l).map(|j| -PI + step * (j + 1) as f64).collect();
        MomentumGrid { l, k_values }
    }

    pub fn len(&self) -> usize {
        self.k_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_values.is_empty()
    }
}

/// Maps an angle onto `(-pi, pi]`.
fn wrap(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Indices of the grid momenta occupied by a half-filled Fermi sea centred at `s`.
///
/// Points strictly inside `(s - pi/2, s + pi/2)` are taken first; points that sit
/// on an edge are then added starting from the lower edge until `L/2` modes are
/// occupied.
pub fn fermi_window(grid: &MomentumGrid, s: f64) -> Result<Vec<usize>> {
    let half = grid.l / 2;
    let mut inside = Vec::with_capacity(half);
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for (i, &k) in grid.k_values.iter().enumerate() {
        let delta = wrap(k - s);
        if (delta + FRAC_PI_2).abs() <= EDGE_TOL {
            lower.push(i);
        } else if (delta - FRAC_PI_2).abs() <= EDGE_TOL {
            upper.push(i);
        } else if delta.abs() < FRAC_PI_2 {
            inside.push(i);
        }
    }
    for i in lower.into_iter().chain(upper) {
        if inside.len() >= half {
            break;
        }
        inside.push(i);
    }
    if inside.len() != half {
        return Err(Error::HalfFilling {
            selected: inside.len(),
            expected: half,
        });
    }
    inside.sort_unstable();
    Ok(inside)
}

/// Kinetic-energy and current expectations in the Fermi sea centred at `s`.
///
/// The kinetic term carries the sign for which the occupied window centred at
/// `s = 0` gives `T = +2 t_h L / pi`, the value that makes the quadratic
/// cavity Hamiltonian soften towards `g_c`.
pub fn fs_expectations(p: &SystemParams, s: f64, form: Form) -> Result<ElectronSummary> {
    if !s.is_finite() || s.abs() > PI + EDGE_TOL {
        return Err(Error::Range(format!("s must lie in [-pi, pi], got {s}")));
    }
    let (t_bar, j_bar) = match form {
        Form::Continuum => {
            let scale = 2.0 * p.t_hop * p.n_sites as f64 / PI;
            (scale * s.cos(), scale * s.sin())
        }
        Form::Discrete => {
            let grid = MomentumGrid::new(p.n_sites);
            let occupied = fermi_window(&grid, s)?;
            occupied.iter().fold((0.0, 0.0), |(t, j), &i| {
                let k = grid.k_values[i];
                (t + 2.0 * p.t_hop * k.cos(), j + 2.0 * p.t_hop * k.sin())
            })
        }
    };
    Ok(ElectronSummary {
        t_bar,
        j_bar,
        s_center: Some(s),
        mode: ElectronMode::FermiSea,
    })
}

/// Steady-state occupation `1 / (eta (1 + sin k) + 1)`.
pub fn steady_occupation(eta: f64, k: f64) -> f64 {
    1.0 / (eta * (1.0 + k.sin()) + 1.0)
}

fn required_eta(p: &SystemParams) -> Result<f64> {
    match p.resolved_eta()? {
        Some(e) if e > 0.0 && e.is_finite() => Ok(e),
        other => Err(Error::Range(format!("eta > 0 violated: {other:?}"))),
    }
}

/// Kinetic-energy and current expectations in the pumped steady state.
pub fn steady_expectations(p: &SystemParams, form: Form) -> Result<ElectronSummary> {
    let eta = required_eta(p)?;
    let (t_bar, j_bar) = match form {
        Form::Continuum => (0.0, p.t_hop * p.n_sites as f64 * current_factor(eta)),
        Form::Discrete => {
            let grid = MomentumGrid::new(p.n_sites);
            grid.k_values.iter().fold((0.0, 0.0), |(t, j), &k| {
                let n = steady_occupation(eta, k);
                (t + 2.0 * p.t_hop * k.cos() * n, j + 2.0 * p.t_hop * k.sin() * n)
            })
        }
    };
    Ok(ElectronSummary {
        t_bar,
        j_bar,
        s_center: None,
        mode: ElectronMode::SteadyState,
    })
}

/// `eta` maximising the steady current magnitude on `[0.1, 50]`.
///
/// The objective is `t_h L |f(eta)|`, so the maximiser does not depend on the
/// other parameters; they are accepted for symmetry with the other entry points.
pub fn optimal_eta(_p: &SystemParams) -> f64 {
    golden_max(|eta| current_factor(eta).abs(), 0.1, 50.0, 1e-6)
}

/// Golden-section search for the maximum of a unimodal function on `[a, b]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Occupation of mode `k` after time `t`, relaxing under loss `4 kappa_el (1 + sin k)`
/// and gain `4 Gamma`.
pub fn relax_occupation(p: &SystemParams, k: f64, n0: f64, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&n0) {
        return Err(Error::Range(format!("n0 must lie in [0, 1], got {n0}")));
    }
    if !(t >= 0.0) {
        return Err(Error::Range(format!("t >= 0 violated: {t}")));
    }
    let loss = 4.0 * p.kappa_el * (1.0 + k.sin());
    let gain = 4.0 * p.gamma_pump;
    let total = loss + gain;
    if total == 0.0 {
        return Ok(n0);
    }
    let fixed = gain / total;
    Ok(fixed + (n0 - fixed) * (-total * t).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::drive_strength;
    use approx::assert_relative_eq;

    fn base() -> SystemParams {
        SystemParams::default().with_t_hop(1.0).with_sites(400)
    }

    fn brute_fs(l: usize, t: f64, s: f64) -> (f64, f64, usize) {
        // independent enumeration: count every k with |k - s| < pi/2 modulo 2 pi
        let mut tt = 0.0;
        let mut jj = 0.0;
        let mut n = 0;
        for j in 0..l {
            let k = -PI + 2.0 * PI * (j + 1) as f64 / l as f64;
            let d = (k - s + 3.0 * PI).rem_euclid(2.0 * PI) - PI;
            if d.abs() < FRAC_PI_2 - 1e-9 {
                tt += 2.0 * t * k.cos();
                jj += 2.0 * t * k.sin();
                n += 1;
            }
        }
        (tt, jj, n)
    }

    #[test]
    fn grid_layout() {
        let g = MomentumGrid::new(8);
        assert_eq!(g.len(), 8);
        assert_relative_eq!(g.k_values[0], -PI + PI / 4.0);
        assert_relative_eq!(g.k_values[7], PI);
        // symmetric about zero except the endpoint pi
        for j in 0..3 {
            assert_relative_eq!(g.k_values[j], -g.k_values[6 - j], epsilon = 1e-15);
        }
    }

    #[test]
    fn continuum_fermi_sea() {
        let e = fs_expectations(&base(), 0.0, Form::Continuum).unwrap();
        assert_relative_eq!(e.t_bar, 800.0 / PI, max_relative = 1e-15);
        assert_relative_eq!(e.t_bar, 254.647_908_947_032_5, max_relative = 1e-12);
        assert_eq!(e.j_bar, 0.0);
        let e = fs_expectations(&base(), FRAC_PI_2, Form::Continuum).unwrap();
        assert!(e.t_bar.abs() < 1e-12);
        assert_relative_eq!(e.j_bar, 800.0 / PI, max_relative = 1e-15);
    }

    #[test]
    fn discrete_fermi_sea_at_zero() {
        let e = fs_expectations(&base(), 0.0, Form::Discrete).unwrap();
        // the window (-pi/2, pi/2) holds the 199 interior points plus the lower edge -pi/2
        let mut t = 0.0;
        let mut j = 0.0;
        for m in -100i32..100 {
            let k = 2.0 * PI * m as f64 / 400.0;
            t += 2.0 * k.cos();
            j += 2.0 * k.sin();
        }
        assert_relative_eq!(e.t_bar, t, max_relative = 1e-13);
        assert_relative_eq!(e.j_bar, j, epsilon = 1e-10);
        // sum_{m=-100}^{99} cos(2 pi m / 400) = cot(pi/400)
        assert_relative_eq!(e.t_bar, 2.0 / (PI / 400.0).tan(), max_relative = 1e-12);
        assert!((e.t_bar - 800.0 / PI).abs() / (800.0 / PI) < 1.0 / 400.0);
    }

    #[test]
    fn discrete_matches_brute_force_off_grid() {
        for &s in &[0.1234, -0.7, 1.3, -2.9, 3.0] {
            let e = fs_expectations(&base(), s, Form::Discrete).unwrap();
            let (t, j, n) = brute_fs(400, 1.0, s);
            assert_eq!(n, 200);
            assert_relative_eq!(e.t_bar, t, epsilon = 1e-9);
            assert_relative_eq!(e.j_bar, j, epsilon = 1e-9);
        }
    }

    #[test]
    fn window_ties_fill_from_lower_edge() {
        let grid = MomentumGrid::new(8);
        let w = fermi_window(&grid, 0.0).unwrap();
        let ks: Vec<f64> = w.iter().map(|&i| grid.k_values[i]).collect();
        assert_eq!(ks.len(), 4);
        assert_relative_eq!(ks[0], -FRAC_PI_2, epsilon = 1e-15);
        assert!(ks.iter().all(|&k| k < FRAC_PI_2 - 1e-9));
    }

    #[test]
    fn rejects_s_outside_range() {
        assert!(fs_expectations(&base(), 4.0, Form::Continuum).is_err());
    }

    #[test]
    fn occupation_examples() {
        assert_relative_eq!(steady_occupation(1.0, 0.0), 0.5);
        assert_eq!(steady_occupation(3.7, -FRAC_PI_2), 1.0);
        assert_relative_eq!(steady_occupation(1.0, FRAC_PI_2), 1.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn steady_continuum() {
        let p = SystemParams::default();
        let e = steady_expectations(&p, Form::Continuum).unwrap();
        assert_eq!(e.t_bar, 0.0);
        let lambda = drive_strength(&p).unwrap();
        let via_drive = lambda * (400f64).sqrt() / (0.88 * 2f64.sqrt());
        assert_relative_eq!(e.j_bar, via_drive, max_relative = 1e-13);
        assert_relative_eq!(e.j_bar, -137.26, max_relative = 1e-4);
    }

    #[test]
    fn steady_discrete_close_to_continuum() {
        let p = SystemParams::default();
        let c = steady_expectations(&p, Form::Continuum).unwrap();
        let d = steady_expectations(&p, Form::Discrete).unwrap();
        assert!((d.j_bar - c.j_bar).abs() / c.j_bar.abs() < 1e-3);
        assert!(d.t_bar.abs() < 1e-10 * 400.0);
    }

    #[test]
    fn steady_needs_eta() {
        let p = SystemParams {
            eta: None,
            ..SystemParams::default()
        };
        assert!(steady_expectations(&p, Form::Continuum).is_err());
    }

    #[test]
    fn optimal_eta_value() {
        let p = SystemParams::default();
        let eta = optimal_eta(&p);
        assert!((2.39..=2.46).contains(&eta), "{eta}");
        assert_relative_eq!(eta, 1.0 + 2f64.sqrt(), epsilon = 1e-5);
        assert_eq!(eta, optimal_eta(&p.with_t_hop(7.0)));
        let f = (2.0 / eta) * ((1.0 + eta) / (1.0 + 2.0 * eta).sqrt() - 1.0);
        assert_relative_eq!(f, 0.343_15, max_relative = 1e-4);
        let e = steady_expectations(&p.with_eta(eta), Form::Continuum).unwrap();
        assert_relative_eq!(e.j_bar.abs() / 400.0, f, max_relative = 1e-12);
    }

    #[test]
    fn relaxation() {
        let p = SystemParams::default().with_rates(2.41, 1.0);
        let k = 0.3;
        assert_eq!(relax_occupation(&p, k, 0.2, 0.0).unwrap(), 0.2);
        let late = relax_occupation(&p, k, 0.9, 100.0).unwrap();
        assert_relative_eq!(late, steady_occupation(2.41, k), epsilon = 1e-12);
        let pump_only = SystemParams::default().with_rates(0.0, 0.5);
        let mut q = pump_only;
        q.eta = None;
        let n = relax_occupation(&q, k, 0.3, 0.7).unwrap();
        assert_relative_eq!(n, 1.0 - 0.7 * (-4.0 * 0.5 * 0.7f64).exp(), max_relative = 1e-14);
        assert!(relax_occupation(&p, k, 1.5, 1.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn half_filling_at_any_center(s in -PI..PI, half in 1usize..300) {
                let grid = MomentumGrid::new(2 * half);
                prop_assert_eq!(fermi_window(&grid, s).unwrap().len(), half);
            }

            #[test]
            fn fermi_sea_bounds(s in -PI..PI, half in 1usize..300, t in 0.1f64..5.0) {
                let p = SystemParams::default().with_sites(2 * half).with_t_hop(t);
                let e = fs_expectations(&p, s, Form::Discrete).unwrap();
                let bound = 2.0 * t * (2 * half) as f64 / PI + 2.0 * t;
                prop_assert!(e.t_bar.abs() <= bound && e.j_bar.abs() <= bound);
            }

            #[test]
            fn steady_current_non_positive(eta in 1e-3f64..1e3) {
                let p = SystemParams::default().with_eta(eta);
                let e = steady_expectations(&p, Form::Continuum).unwrap();
                prop_assert!(e.j_bar <= 0.0);
                let d = steady_expectations(&p, Form::Discrete).unwrap();
                prop_assert!(d.j_bar <= 1e-9);
                prop_assert!(d.t_bar.abs() <= 1e-10 * 400.0);
            }
        }
    }

    #[test]
    fn current_vanishes_at_extremes() {
        let p = SystemParams::default();
        let small = steady_expectations(&p.with_eta(1e-6), Form::Continuum).unwrap();
        let big = steady_expectations(&p.with_eta(1e12), Form::Continuum).unwrap();
        assert!(small.j_bar.abs() < 1e-3 * 400.0);
        assert!(big.j_bar.abs() < 1e-3);
    }

    #[test]
    fn fermi_sea_discrete_error_shrinks_with_l() {
        // the window edge moves in steps of 2 pi / L, so the error is O(1/L) but not monotone
        let err_at = |l: usize| {
            let p = SystemParams::default().with_sites(l);
            let c = fs_expectations(&p, 0.3, Form::Continuum).unwrap();
            let d = fs_expectations(&p, 0.3, Form::Discrete).unwrap();
            ((d.t_bar - c.t_bar) / c.t_bar).abs() + ((d.j_bar - c.j_bar) / c.j_bar).abs()
        };
        for l in [50usize, 100, 200, 400, 800, 1600] {
            let err = err_at(l);
            println!("L = {l}: {err:e}");
            assert!(err * (l as f64) < 20.0, "L = {l}: {err}");
        }
        assert!(err_at(6400) < err_at(50) / 16.0);
    }
}
