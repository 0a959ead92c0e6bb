//! Figure reproduction, generic parameter sweeps and the consistency report.
//!
//! Every command builds its grid up front, evaluates the points on a fixed-size
//! rayon pool and collects the rows back in grid order, so the output bytes do
//! not depend on the number of workers.

pub mod check;
pub mod config;
pub mod csv;
pub mod figures;
pub mod svg;

use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fisher::{self, Convention};
use crate::fock;
use crate::model::{validate_params, Regime, SystemParams};

pub use config::{Axis, AxisName, Command, Spacing, SweepConfig};
pub use csv::{Cell, Flag, Table};

/// Runs `f` over `items` on a pool of `jobs` threads and returns the results in input order.
pub fn par_map<T, R, F>(jobs: usize, items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(&f).collect()))
}

/// Cartesian product in lexicographic order, first list slowest.
pub fn cartesian(lists: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for list in lists {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                list.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

/// How the Fisher columns of a sweep are evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherContext {
    pub regime: Regime,
    pub convention: Convention,
    pub oracle: bool,
    pub n_max: Option<usize>,
}

impl FisherContext {
    pub fn columns(&self) -> Vec<&'static str> {
        let mut c = vec!["qfi", "cfi", "ratio", "qfi_closed", "cfi_closed", "ratio_closed"];
        if self.oracle {
            c.extend(["qfi_oracle", "cfi_oracle", "ratio_oracle"]);
        }
        c.push("flag");
        c
    }
}

fn num(r: &Result<f64>) -> Cell {
    Cell::Num(*r.as_ref().unwrap_or(&f64::NAN))
}

fn ratio_cell(cfi: &Result<f64>, qfi: &Result<f64>) -> Cell {
    match (cfi, qfi) {
        (Ok(c), Ok(q)) => Cell::Num(fisher::Ratio::from_parts(*c, *q, fisher::Path::ClosedForm).value),
        _ => Cell::Num(f64::NAN),
    }
}

/// Fisher columns at one parameter point for every phase in `phis`, one row per phase.
pub fn fisher_rows(p: &SystemParams, phis: &[f64], ctx: &FisherContext) -> Vec<Vec<Cell>> {
    let regime = ctx.regime;
    let mut first_err: Option<Error> = None;
    let mut note = |r: &Result<f64>| {
        if let (Err(e), None) = (r, &first_err) {
            first_err = Some(e.clone());
        }
    };
    let engine = validate_params(p, regime).and_then(|_| {
        let state = fisher::engine_state(p, regime)?;
        let deriv = fisher::state_derivative(p, regime, fisher::default_step(p))?;
        Ok((state, deriv))
    });
    let qfi = engine
        .as_ref()
        .map_err(Clone::clone)
        .and_then(|(s, d)| fisher::qfi_engine_with(s, d, regime, ctx.convention));
    let qfi_closed = fisher::qfi_closed(p, regime).map(|r| r.value);
    let n_max = ctx.n_max.unwrap_or_else(|| fock::default_nmax(p, regime));
    let h = fock::default_step(p);
    let qfi_oracle = if ctx.oracle && engine.is_ok() {
        Some(fock::qfi_sld(p, regime, n_max, h))
    } else if ctx.oracle {
        Some(Err(engine
            .as_ref()
            .err()
            .cloned()
            .unwrap_or_else(|| Error::Range("invalid point".into()))))
    } else {
        None
    };
    note(&qfi);
    note(&qfi_closed);
    if let Some(q) = &qfi_oracle {
        note(q);
    }
    let mut rows = Vec::with_capacity(phis.len());
    for &phi in phis {
        let cfi = engine
            .as_ref()
            .map_err(Clone::clone)
            .and_then(|(s, d)| fisher::cfi_homodyne(s, d, phi));
        let cfi_closed = fisher::cfi_closed(p, regime, phi).map(|r| r.value);
        let mut row = vec![
            num(&qfi),
            num(&cfi),
            ratio_cell(&cfi, &qfi),
            num(&qfi_closed),
            num(&cfi_closed),
            ratio_cell(&cfi_closed, &qfi_closed),
        ];
        let mut err = first_err.clone();
        for r in [&cfi, &cfi_closed] {
            if let (Err(e), None) = (r, &err) {
                err = Some(e.clone());
            }
        }
        if let Some(qo) = &qfi_oracle {
            let co = match qo {
                Ok(_) => fock::cfi_numeric(p, regime, phi, n_max, h, None),
                Err(e) => Err(e.clone()),
            };
            if let (Err(e), None) = (&co, &err) {
                err = Some(e.clone());
            }
            row.extend([num(qo), num(&co), ratio_cell(&co, qo)]);
        }
        row.push(Cell::flag(err.as_ref().map(Flag::from_error)));
        rows.push(row);
    }
    rows
}

/// A table of Fisher columns over the product of `lists` (named by `names`) and `phis`.
pub fn fisher_table(
    name: &str,
    base: &SystemParams,
    names: &[AxisName],
    lists: &[Vec<f64>],
    phis: &[f64],
    ctx: &FisherContext,
    jobs: usize,
) -> Result<Table> {
    let mut columns: Vec<&str> = names.iter().map(|n| n.name()).collect();
    columns.push("phi");
    columns.extend(ctx.columns());
    let mut table = Table::new(name, &columns);
    let points = cartesian(lists);
    let blocks = par_map(jobs, &points, |coords| {
        let mut p = *base;
        for (n, &v) in names.iter().zip(coords) {
            n.apply(&mut p, v);
        }
        fisher_rows(&p, phis, ctx)
    })?;
    for (coords, rows) in points.iter().zip(blocks) {
        for (&phi, row) in phis.iter().zip(rows) {
            let mut full: Vec<Cell> = coords.iter().map(|&v| Cell::Num(v)).collect();
            full.push(Cell::Num(phi));
            full.extend(row);
            table.push(full);
        }
    }
    Ok(table)
}

/// Tables and plots produced by one command.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    /// `(file stem, svg text)`.
    pub plots: Vec<(String, String)>,
    pub convention: Option<Convention>,
    /// Free-form report text, printed by `check`.
    pub report: Option<String>,
    /// False when an oracle consistency check failed.
    pub consistent: bool,
}

/// The arbitrated convention, computed before any worker starts.
pub fn prepare_convention() -> Result<Convention> {
    fisher::arbitrated_convention()
}

/// The `sweep` command.
pub fn cmd_sweep(cfg: &SweepConfig) -> Result<RunOutput> {
    let convention = prepare_convention()?;
    let ctx = FisherContext {
        regime: cfg.regime,
        convention,
        oracle: cfg.oracle,
        n_max: cfg.n_max,
    };
    let axes: Vec<&Axis> = cfg.axes.iter().filter(|a| a.name != AxisName::Phi).collect();
    let phis = match cfg.axes.iter().find(|a| a.name == AxisName::Phi) {
        Some(a) => a.values(),
        None => cfg.phi.clone().unwrap_or_else(|| vec![0.0]),
    };
    let names: Vec<AxisName> = axes.iter().map(|a| a.name).collect();
    let lists: Vec<Vec<f64>> = axes.iter().map(|a| a.values()).collect();
    let table = fisher_table("sweep", &cfg.params, &names, &lists, &phis, &ctx, cfg.jobs)?;
    let mut plots = Vec::new();
    if cfg.svg && names.len() == 1 {
        let x = names[0];
        plots.push((
            "sweep".to_string(),
            figures::ratio_plot(
                &table,
                x.name(),
                "sweep",
                x == AxisName::Sites || axes[0].spacing == Spacing::Log,
            ),
        ));
    }
    if cfg.svg && names.len() == 2 {
        // rows run over the first axis, then the second, then phi
        let ratio = table.numbers("ratio");
        let (n0, n1, np) = (lists[0].len(), lists[1].len(), phis.len());
        let z: Vec<Vec<f64>> = (0..n1)
            .map(|i1| (0..n0).map(|i0| ratio[(i0 * n1 + i1) * np]).collect())
            .collect();
        plots.push((
            "sweep".to_string(),
            svg::heat_map(
                &format!("CFI/QFI at phi = {:.4}", phis[0]),
                names[0].name(),
                names[1].name(),
                &lists[0],
                &lists[1],
                &z,
            ),
        ));
    }
    Ok(RunOutput {
        tables: vec![table],
        plots,
        convention: Some(convention),
        report: None,
        consistent: true,
    })
}

/// Dispatches a resolved config to its command.
pub fn run(cfg: &SweepConfig, fault: Option<check::Fault>) -> Result<RunOutput> {
    cfg.validate()?;
    let mut out = match cfg.command {
        Command::Fig2 => figures::fig2(cfg),
        Command::Fig3 => figures::fig3(cfg),
        Command::Fig4 => figures::fig4(cfg),
        Command::Fig5 => figures::fig5(cfg),
        Command::Fig6 => figures::fig6(cfg),
        Command::Fig7 => figures::fig7(cfg),
        Command::Fig8 => figures::fig8(cfg),
        Command::Sweep => cmd_sweep(cfg),
        Command::Check => check::cmd_check(cfg, fault),
    }?;
    if !cfg.svg {
        out.plots.clear();
    }
    Ok(out)
}

/// Writes every table and plot under `cfg.out`; returns the paths written.
pub fn write_output(cfg: &SweepConfig, out: &RunOutput) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(&cfg.out)?;
    let mut written = Vec::new();
    for t in &out.tables {
        let path = cfg.out.join(format!("{}.csv", t.name));
        fs::write(&path, t.to_csv(cfg, out.convention))?;
        written.push(path);
    }
    if cfg.svg {
        for (stem, text) in &out.plots {
            let path = cfg.out.join(format!("{stem}.svg"));
            fs::write(&path, text)?;
            written.push(path);
        }
    }
    if let Some(report) = &out.report {
        let path = cfg.out.join(format!("{}.txt", cfg.command));
        fs::write(&path, report)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cartesian_order() {
        let c = cartesian(&[vec![1.0, 2.0], vec![10.0, 20.0, 30.0]]);
        assert_eq!(c.len(), 6);
        assert_eq!(c[0], vec![1.0, 10.0]);
        assert_eq!(c[2], vec![1.0, 30.0]);
        assert_eq!(c[3], vec![2.0, 10.0]);
        assert_eq!(cartesian(&[]), vec![Vec::<f64>::new()]);
    }

    #[test]
    fn par_map_keeps_order() {
        let items: Vec<usize> = (0..1000).collect();
        let out = par_map(7, &items, |i| i * i).unwrap();
        assert!(out.iter().enumerate().all(|(i, &v)| v == i * i));
    }

    #[test]
    fn unstable_points_are_flagged() {
        let ctx = FisherContext {
            regime: Regime::Lossless,
            convention: Convention::REFERENCE,
            oracle: false,
            n_max: None,
        };
        let rows = fisher_rows(&SystemParams::default().with_g(1.0), &[0.0], &ctx);
        assert_eq!(rows[0].last(), Some(&Cell::Text("UNSTABLE".into())));
        let rows = fisher_rows(&SystemParams::default().with_g(0.5), &[0.0, 0.3], &ctx);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].last(), Some(&Cell::Text(String::new())));
    }
}
