use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use critchain::sweep::check::Fault;
use critchain::sweep::config::{parse_axis_spec, parse_float, Command, SweepConfig};
use critchain::sweep::{run, write_output};
use critchain::{Error, Regime};

#[derive(Parser, Debug)]
#[command(
    name = "critchain",
    version,
    about = "Critical metrology of a tight-binding chain in a cavity: figures, sweeps and oracle checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Ground energy against the Fermi-sea centre, full and second-order Hamiltonians
    Fig2(Opts),
    /// Lossless CFI/QFI ratio against coupling
    Fig3(Opts),
    /// Cavity-loss QFI over photon decay and coupling
    Fig4(Opts),
    /// Cavity-loss CFI/QFI ratio against coupling
    Fig5(Opts),
    /// Cavity-loss CFI/QFI ratio against photon decay
    Fig6(Opts),
    /// Chain-loss QFI and steady current against pumping ratio, decay and length
    Fig7(Opts),
    /// Chain-loss CFI/QFI ratio against phase, decay and length
    Fig8(Opts),
    /// Generic sweep over any parameter axes
    Sweep(Opts),
    /// Engine-versus-oracle consistency report
    Check(Opts),
}

#[derive(Args, Debug)]
struct Opts {
    /// Config file, or a CSV written by a previous run
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write SVG plots next to the CSV files
    #[arg(long, overrides_with = "no_svg")]
    svg: bool,
    #[arg(long = "no-svg", overrides_with = "svg")]
    no_svg: bool,
    /// Add Fock-space oracle columns
    #[arg(long, overrides_with = "no_oracle")]
    oracle: bool,
    #[arg(long = "no-oracle", overrides_with = "oracle")]
    no_oracle: bool,
    /// Worker threads
    #[arg(long, env = "CRITCHAIN_JOBS")]
    jobs: Option<usize>,
    /// Fock truncation for oracle columns and spectra
    #[arg(long)]
    nmax: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    omega0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    thop: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    g: Option<String>,
    #[arg(long = "kappa-ph", allow_hyphen_values = true)]
    kappa_ph: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<String>,
    #[arg(long)]
    sites: Option<usize>,
    /// Homodyne phases, e.g. `0,0.25pi,0.5pi`
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<String>,
    /// Regime of a sweep: lossless, cavity or chain
    #[arg(long)]
    regime: Option<String>,
    /// Sweep axis `name=min:max:count[:log]`; repeatable
    #[arg(long = "axis")]
    axes: Vec<String>,
    /// Points per axis of one-dimensional grids
    #[arg(long)]
    points: Option<usize>,
    /// Points per axis of two-dimensional grids
    #[arg(long)]
    points2d: Option<usize>,
    #[arg(long = "inject-fault", hide = true)]
    inject_fault: Option<String>,
}

fn resolve(command: Command, o: &Opts) -> Result<(SweepConfig, Option<Fault>), Error> {
    let mut cfg = match &o.config {
        Some(path) => SweepConfig::load(path)?,
        None => SweepConfig::default(),
    };
    cfg.command = command;
    if let Some(r) = command.fixed_regime() {
        cfg.regime = r;
    }
    if let Some(r) = &o.regime {
        cfg.regime = Regime::parse(r).ok_or_else(|| Error::Config(format!("unknown regime {r:?}")))?;
    }
    if let Some(out) = &o.out {
        cfg.out = out.clone();
    }
    if o.svg {
        cfg.svg = true;
    }
    if o.no_svg {
        cfg.svg = false;
    }
    if o.oracle {
        cfg.oracle = true;
    }
    if o.no_oracle {
        cfg.oracle = false;
    }
    if let Some(j) = o.jobs {
        cfg.jobs = j;
    }
    if let Some(n) = o.nmax {
        cfg.n_max = Some(n);
    }
    let p = &mut cfg.params;
    if let Some(v) = &o.omega0 {
        p.omega0 = parse_float(v)?;
    }
    if let Some(v) = &o.thop {
        p.t_hop = parse_float(v)?;
    }
    if let Some(v) = &o.g {
        p.g = parse_float(v)?;
        if command == Command::Fig2 {
            cfg.g_values = Some(vec![p.g]);
        }
    }
    if let Some(v) = &o.kappa_ph {
        p.kappa_ph = parse_float(v)?;
    }
    if let Some(v) = &o.eta {
        p.eta = Some(parse_float(v)?);
    }
    if let Some(v) = o.sites {
        p.n_sites = v;
    }
    if let Some(v) = &o.phi {
        cfg.phi = Some(critchain::sweep::config::parse_list(v)?);
    }
    if let Some(v) = o.points {
        cfg.points = v;
    }
    if let Some(v) = o.points2d {
        cfg.points_2d = v;
    }
    for spec in &o.axes {
        let axis = parse_axis_spec(spec)?;
        cfg.axes.retain(|a| a.name != axis.name);
        cfg.axes.push(axis);
    }
    let fault = match &o.inject_fault {
        Some(f) => Some(Fault::parse(f).ok_or_else(|| Error::Config(format!("unknown fault {f:?}")))?),
        None => None,
    };
    cfg.validate()?;
    Ok((cfg, fault))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let (command, opts) = match &cli.command {
        Cmd::Fig2(o) => (Command::Fig2, o),
        Cmd::Fig3(o) => (Command::Fig3, o),
        Cmd::Fig4(o) => (Command::Fig4, o),
        Cmd::Fig5(o) => (Command::Fig5, o),
        Cmd::Fig6(o) => (Command::Fig6, o),
        Cmd::Fig7(o) => (Command::Fig7, o),
        Cmd::Fig8(o) => (Command::Fig8, o),
        Cmd::Sweep(o) => (Command::Sweep, o),
        Cmd::Check(o) => (Command::Check, o),
    };
    let (cfg, fault) = match resolve(command, opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("critchain: {e}");
            return ExitCode::from(1);
        }
    };
    let out = match run(&cfg, fault) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("critchain {command}: {e}");
            return ExitCode::from(1);
        }
    };
    match write_output(&cfg, &out) {
        Ok(paths) => {
            if let Some(report) = &out.report {
                print!("{report}");
            }
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("critchain {command}: {e}");
            return ExitCode::from(1);
        }
    }
    if out.consistent {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
