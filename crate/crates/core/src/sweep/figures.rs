//! Figure commands. Each one fixes a regime and a default grid and returns
//! one or more tables plus derived plots.

use std::f64::consts::PI;

use crate::electron::{steady_expectations, Form};
use crate::error::Result;
use crate::fock::{full_hamiltonian_spectrum, truncated_hamiltonian_spectrum};
use crate::model::{critical_coupling, Regime, SystemParams};
use crate::sweep::config::{Axis, AxisName, SweepConfig};
use crate::sweep::csv::{Cell, Flag, Table};
use crate::sweep::svg::{heat_map, line_plot, Series};
use crate::sweep::{fisher_table, par_map, prepare_convention, FisherContext, RunOutput};

/// Homodyne phases of the lossless and cavity-loss ratio figures.
pub const FIG_PHIS: [f64; 6] = [0.0, 0.25 * PI, 0.4 * PI, 0.5 * PI, 0.6 * PI, 0.8 * PI];
/// Couplings shown in the spectrum figure.
pub const FIG2_G: [f64; 4] = [0.2, 0.5, 0.88, 1.2];
/// Photon decay slices of the chain-loss figures.
pub const KAPPA_SLICES: [f64; 3] = [0.1, 0.3, 0.5];
/// Default truncation for the spectrum figure.
pub const FIG2_NMAX: usize = 80;

fn context(cfg: &SweepConfig, regime: Regime) -> Result<FisherContext> {
    Ok(FisherContext {
        regime,
        convention: prepare_convention()?,
        oracle: cfg.oracle,
        n_max: cfg.n_max,
    })
}

fn phis(cfg: &SweepConfig, default: &[f64]) -> Vec<f64> {
    cfg.phi.clone().unwrap_or_else(|| default.to_vec())
}

/// Groups a column by another: one series per distinct value of `group`, in first-seen order.
fn series_by(table: &Table, group: &str, x: &str, y: &str, label: impl Fn(f64) -> String) -> Vec<Series> {
    let gs = table.numbers(group);
    let xs = table.numbers(x);
    let ys = table.numbers(y);
    let mut keys: Vec<f64> = Vec::new();
    let mut out: Vec<Series> = Vec::new();
    for i in 0..gs.len() {
        let k = gs[i];
        let idx = match keys.iter().position(|&v| v == k) {
            Some(j) => j,
            None => {
                keys.push(k);
                out.push(Series::new(label(k), Vec::new()));
                keys.len() - 1
            }
        };
        out[idx].points.push((xs[i], ys[i]));
    }
    out
}

fn phi_label(phi: f64) -> String {
    format!("phi = {:.2}pi", phi / PI)
}

/// Ratio against `x`, one line per phase.
pub fn ratio_plot(table: &Table, x: &str, title: &str, log_x: bool) -> String {
    let series = series_by(table, "phi", x, "ratio", phi_label);
    line_plot(title, x, "CFI / QFI", &series, log_x)
}

fn grid2(table: &Table, xname: &str, yname: &str, z: &str) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let xs_all = table.numbers(xname);
    let ys_all = table.numbers(yname);
    let zs = table.numbers(z);
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for &v in &xs_all {
        if !xs.contains(&v) {
            xs.push(v);
        }
    }
    for &v in &ys_all {
        if !ys.contains(&v) {
            ys.push(v);
        }
    }
    let mut grid = vec![vec![f64::NAN; xs.len()]; ys.len()];
    for i in 0..zs.len() {
        let ix = xs.iter().position(|&v| v == xs_all[i]).unwrap_or(0);
        let iy = ys.iter().position(|&v| v == ys_all[i]).unwrap_or(0);
        grid[iy][ix] = zs[i];
    }
    (xs, ys, grid)
}

fn append_log10(table: &mut Table, from: &str) {
    let vals = table.numbers(from);
    let flag_col = table.columns.len() - 1;
    table.columns.insert(flag_col, format!("log10_{from}"));
    for (row, v) in table.rows.iter_mut().zip(vals) {
        row.insert(flag_col, Cell::Num(v.log10()));
    }
}

/// Ground energy of the full and second-order Hamiltonians against the Fermi-sea centre.
pub fn fig2(cfg: &SweepConfig) -> Result<RunOutput> {
    let gs = cfg.g_values.clone().unwrap_or_else(|| FIG2_G.to_vec());
    let n_max = cfg.n_max.unwrap_or(FIG2_NMAX);
    let s_axis = Axis::linear(AxisName::Phi, -PI / 2.0, PI / 2.0, cfg.points).values();
    let points: Vec<(f64, f64)> = s_axis.iter().flat_map(|&s| gs.iter().map(move |&g| (s, g))).collect();
    let base = cfg.params;
    let rows = par_map(cfg.jobs, &points, |&(s, g)| {
        let p = base.with_g(g);
        let mut flags: Vec<&str> = Vec::new();
        let full = match full_hamiltonian_spectrum(&p, s, n_max) {
            Ok(v) => v[0],
            Err(e) => {
                flags.push(Flag::from_error(&e).as_str());
                f64::NAN
            }
        };
        let (trunc, freq_flag) = match truncated_hamiltonian_spectrum(&p, s, n_max) {
            Ok(t) => {
                if !t.has_ground_state() {
                    flags.push(Flag::NoGround.as_str());
                }
                (t.eigenvalues[0], i64::from(t.has_ground_state()))
            }
            Err(e) => {
                flags.push(Flag::from_error(&e).as_str());
                (f64::NAN, 0)
            }
        };
        vec![
            Cell::Num(s),
            Cell::Num(g),
            Cell::Num(full),
            Cell::Num(trunc),
            Cell::Int(freq_flag),
            Cell::Text(flags.join("|")),
        ]
    })?;
    let mut table = Table::new(
        "fig2",
        &["s", "g", "E0_full", "E0_trunc", "effective_frequency_flag", "flag"],
    );
    rows.into_iter().for_each(|r| table.push(r));
    let label = |g: f64| format!("g = {g}");
    let plots = vec![
        (
            "fig2a".to_string(),
            line_plot(
                "full Hamiltonian",
                "s",
                "E0",
                &series_by(&table, "g", "s", "E0_full", label),
                false,
            ),
        ),
        (
            "fig2b".to_string(),
            line_plot(
                "second-order Hamiltonian",
                "s",
                "E0",
                &series_by(&table, "g", "s", "E0_trunc", label),
                false,
            ),
        ),
    ];
    Ok(RunOutput {
        tables: vec![table],
        plots,
        convention: None,
        report: None,
        consistent: true,
    })
}

fn ratio_figure(cfg: &SweepConfig, name: &str, regime: Regime, g_max: f64) -> Result<RunOutput> {
    let ctx = context(cfg, regime)?;
    let g = Axis::linear(AxisName::G, 0.01, g_max, cfg.points).values();
    let table = fisher_table(
        name,
        &cfg.params,
        &[AxisName::G],
        &[g],
        &phis(cfg, &FIG_PHIS),
        &ctx,
        cfg.jobs,
    )?;
    let plot = ratio_plot(&table, "g", name, false);
    Ok(RunOutput {
        plots: vec![(name.to_string(), plot)],
        tables: vec![table],
        convention: Some(ctx.convention),
        report: None,
        consistent: true,
    })
}

/// Upper end of the default coupling grid of the lossless ratio figure.
pub fn fig3_g_max(p: &SystemParams) -> f64 {
    0.99 * critical_coupling(p)
}

/// Coupling at which the cavity-loss steady state stops existing.
pub fn cavity_boundary(p: &SystemParams) -> f64 {
    critical_coupling(p) * (1.0 + (p.kappa_ph / p.omega0).powi(2)).sqrt()
}

/// Lossless ratio against coupling.
pub fn fig3(cfg: &SweepConfig) -> Result<RunOutput> {
    ratio_figure(cfg, "fig3", Regime::Lossless, fig3_g_max(&cfg.params))
}

/// Cavity-loss ratio against coupling.
pub fn fig5(cfg: &SweepConfig) -> Result<RunOutput> {
    ratio_figure(cfg, "fig5", Regime::CavityLoss, 0.99 * cavity_boundary(&cfg.params))
}

/// Cavity-loss QFI over photon decay and coupling.
pub fn fig4(cfg: &SweepConfig) -> Result<RunOutput> {
    let ctx = context(cfg, Regime::CavityLoss)?;
    let kappa = Axis::linear(AxisName::KappaPh, 0.01, 1.0, cfg.points_2d).values();
    let g = Axis::linear(AxisName::G, 0.0, 1.2, cfg.points_2d).values();
    let mut table = fisher_table(
        "fig4",
        &cfg.params,
        &[AxisName::KappaPh, AxisName::G],
        &[kappa, g],
        &phis(cfg, &[0.0]),
        &ctx,
        cfg.jobs,
    )?;
    append_log10(&mut table, "qfi");
    let (xs, ys, z) = grid2(&table, "g", "kappa_ph", "log10_qfi");
    let plot = heat_map("log10 QFI, cavity loss", "g", "kappa_ph", &xs, &ys, &z);
    Ok(RunOutput {
        tables: vec![table],
        plots: vec![("fig4".to_string(), plot)],
        convention: Some(ctx.convention),
        report: None,
        consistent: true,
    })
}

/// Cavity-loss ratio against photon decay at fixed coupling.
pub fn fig6(cfg: &SweepConfig) -> Result<RunOutput> {
    let ctx = context(cfg, Regime::CavityLoss)?;
    let kappa = Axis::linear(AxisName::KappaPh, 0.001, 1.0, cfg.points).values();
    let table = fisher_table(
        "fig6",
        &cfg.params,
        &[AxisName::KappaPh],
        &[kappa],
        &phis(cfg, &[0.0]),
        &ctx,
        cfg.jobs,
    )?;
    let plot = ratio_plot(&table, "kappa_ph", "fig6", false);
    Ok(RunOutput {
        tables: vec![table],
        plots: vec![("fig6".to_string(), plot)],
        convention: Some(ctx.convention),
        report: None,
        consistent: true,
    })
}

/// Default log grid of the pumping ratio.
pub fn eta_grid(points: usize) -> Vec<f64> {
    Axis::log(AxisName::Eta, 0.3, 30.0, points).values()
}

/// Chain-loss QFI against pumping ratio, photon decay and chain length, and the steady current.
pub fn fig7(cfg: &SweepConfig) -> Result<RunOutput> {
    let ctx = context(cfg, Regime::ChainLoss)?;
    let phi = phis(cfg, &[0.0]);
    let p = &cfg.params;

    let mut a = fisher_table(
        "fig7a",
        p,
        &[AxisName::KappaPh, AxisName::Eta],
        &[
            Axis::linear(AxisName::KappaPh, 0.01, 1.0, cfg.points_2d).values(),
            eta_grid(cfg.points_2d),
        ],
        &phi,
        &ctx,
        cfg.jobs,
    )?;
    append_log10(&mut a, "qfi");
    let b = fisher_table(
        "fig7b",
        p,
        &[AxisName::KappaPh, AxisName::Eta],
        &[KAPPA_SLICES.to_vec(), eta_grid(cfg.points)],
        &phi,
        &ctx,
        cfg.jobs,
    )?;

    let etas = eta_grid(cfg.points);
    let currents = par_map(cfg.jobs, &etas, |&eta| {
        let q = p.with_eta(eta);
        let c = steady_expectations(&q, Form::Continuum);
        let d = steady_expectations(&q, Form::Discrete);
        let flag = c.as_ref().err().or(d.as_ref().err()).map(Flag::from_error);
        let c = c.ok();
        let d = d.ok();
        vec![
            Cell::Num(eta),
            Cell::Num(c.map_or(f64::NAN, |e| e.j_bar)),
            Cell::Num(c.map_or(f64::NAN, |e| e.j_bar.abs())),
            Cell::Num(d.map_or(f64::NAN, |e| e.j_bar)),
            Cell::Num(c.map_or(f64::NAN, |e| e.t_bar)),
            Cell::Num(d.map_or(f64::NAN, |e| e.t_bar)),
            Cell::flag(flag),
        ]
    })?;
    let mut c = Table::new(
        "fig7c",
        &[
            "eta",
            "j_bar",
            "abs_j_bar",
            "j_bar_discrete",
            "t_bar",
            "t_bar_discrete",
            "flag",
        ],
    );
    currents.into_iter().for_each(|r| c.push(r));

    let sites: Vec<f64> = (1..=16).map(|i| 100.0 * i as f64).collect();
    let d = fisher_table(
        "fig7d",
        &p.with_eta(2.41),
        &[AxisName::KappaPh, AxisName::Sites],
        &[KAPPA_SLICES.to_vec(), sites],
        &phi,
        &ctx,
        cfg.jobs,
    )?;

    let (xs, ys, z) = grid2(&a, "eta", "kappa_ph", "log10_qfi");
    let kappa_label = |k: f64| format!("kappa_ph = {k}");
    let plots = vec![
        (
            "fig7a".to_string(),
            heat_map("log10 QFI, chain loss", "eta", "kappa_ph", &xs, &ys, &z),
        ),
        (
            "fig7b".to_string(),
            line_plot(
                "QFI",
                "eta",
                "QFI",
                &series_by(&b, "kappa_ph", "eta", "qfi", kappa_label),
                true,
            ),
        ),
        (
            "fig7c".to_string(),
            line_plot(
                "steady current",
                "eta",
                "|J|",
                &[Series::new(
                    "|J|",
                    c.numbers("eta").into_iter().zip(c.numbers("abs_j_bar")).collect(),
                )],
                true,
            ),
        ),
        (
            "fig7d".to_string(),
            line_plot(
                "QFI",
                "L",
                "QFI",
                &series_by(&d, "kappa_ph", "sites", "qfi", kappa_label),
                false,
            ),
        ),
    ];
    Ok(RunOutput {
        tables: vec![a, b, c, d],
        plots,
        convention: Some(ctx.convention),
        report: None,
        consistent: true,
    })
}

/// Chain-loss ratio against phase, photon decay and chain length.
pub fn fig8(cfg: &SweepConfig) -> Result<RunOutput> {
    let ctx = context(cfg, Regime::ChainLoss)?;
    let p = cfg.params.with_eta(2.41);
    let a = fisher_table(
        "fig8a",
        &p,
        &[AxisName::KappaPh],
        &[Axis::linear(AxisName::KappaPh, 0.01, 1.5, cfg.points_2d).values()],
        &Axis::linear(AxisName::Phi, 0.0, PI, cfg.points_2d).values(),
        &ctx,
        cfg.jobs,
    )?;
    let zero = phis(cfg, &[0.0]);
    let b = fisher_table(
        "fig8b",
        &p,
        &[AxisName::KappaPh],
        &[Axis::linear(AxisName::KappaPh, 0.01, 1.5, cfg.points).values()],
        &zero,
        &ctx,
        cfg.jobs,
    )?;
    let c = fisher_table(
        "fig8c",
        &p,
        &[AxisName::Sites],
        &[Axis::log(AxisName::Sites, 100.0, 1e6, cfg.points).values()],
        &zero,
        &ctx,
        cfg.jobs,
    )?;
    let (xs, ys, z) = grid2(&a, "phi", "kappa_ph", "ratio");
    let plots = vec![
        (
            "fig8a".to_string(),
            heat_map("CFI / QFI, chain loss", "phi", "kappa_ph", &xs, &ys, &z),
        ),
        ("fig8b".to_string(), ratio_plot(&b, "kappa_ph", "fig8b", false)),
        ("fig8c".to_string(), ratio_plot(&c, "sites", "fig8c", true)),
    ];
    Ok(RunOutput {
        tables: vec![a, b, c],
        plots,
        convention: Some(ctx.convention),
        report: None,
        consistent: true,
    })
}
