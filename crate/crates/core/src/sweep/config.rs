//! Line-based `key = value` run configuration with `[section]` grouping.
//!
//! ```text
//! [run]
//! command = sweep
//! regime = cavity
//! phi = 0, 0.25pi
//!
//! [params]
//! g = 0.5
//! kappa_ph = 0.1
//!
//! [axis.g]
//! min = 0.05
//! max = 0.85
//! count = 101
//! spacing = linear
//! ```
//!
//! Keys outside any section may be any `[run]` or `[params]` key. Whole-line
//! comments start with `#` or `;`.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{Regime, SystemParams};

pub const BEGIN_CONFIG: &str = "# begin config";
pub const END_CONFIG: &str = "# end config";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Sweep,
    Check,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::Fig2,
        Command::Fig3,
        Command::Fig4,
        Command::Fig5,
        Command::Fig6,
        Command::Fig7,
        Command::Fig8,
        Command::Sweep,
        Command::Check,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Fig2 => "fig2",
            Command::Fig3 => "fig3",
            Command::Fig4 => "fig4",
            Command::Fig5 => "fig5",
            Command::Fig6 => "fig6",
            Command::Fig7 => "fig7",
            Command::Fig8 => "fig8",
            Command::Sweep => "sweep",
            Command::Check => "check",
        }
    }

    pub fn parse(s: &str) -> Option<Command> {
        Command::ALL.into_iter().find(|c| c.name() == s)
    }

    /// Regime a figure command always runs in.
    pub fn fixed_regime(self) -> Option<Regime> {
        match self {
            Command::Fig3 => Some(Regime::Lossless),
            Command::Fig4 | Command::Fig5 | Command::Fig6 => Some(Regime::CavityLoss),
            Command::Fig7 | Command::Fig8 => Some(Regime::ChainLoss),
            _ => None,
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spacing {
    Linear,
    Log,
}

impl Spacing {
    pub fn name(self) -> &'static str {
        match self {
            Spacing::Linear => "linear",
            Spacing::Log => "log",
        }
    }

    pub fn parse(s: &str) -> Option<Spacing> {
        match s {
            "linear" | "lin" => Some(Spacing::Linear),
            "log" => Some(Spacing::Log),
            _ => None,
        }
    }
}

/// Quantity a sweep axis runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AxisName {
    Omega0,
    Thop,
    G,
    KappaPh,
    Eta,
    Sites,
    Phi,
}

impl AxisName {
    pub const ALL: [AxisName; 7] = [
        AxisName::Omega0,
        AxisName::Thop,
        AxisName::G,
        AxisName::KappaPh,
        AxisName::Eta,
        AxisName::Sites,
        AxisName::Phi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AxisName::Omega0 => "omega0",
            AxisName::Thop => "thop",
            AxisName::G => "g",
            AxisName::KappaPh => "kappa_ph",
            AxisName::Eta => "eta",
            AxisName::Sites => "sites",
            AxisName::Phi => "phi",
        }
    }

    pub fn parse(s: &str) -> Option<AxisName> {
        AxisName::ALL.into_iter().find(|a| a.name() == s)
    }

    /// Writes `value` into the matching parameter field; `phi` is not a parameter.
    pub fn apply(self, p: &mut SystemParams, value: f64) {
        match self {
            AxisName::Omega0 => p.omega0 = value,
            AxisName::Thop => p.t_hop = value,
            AxisName::G => p.g = value,
            AxisName::KappaPh => p.kappa_ph = value,
            AxisName::Eta => p.eta = Some(value),
            AxisName::Sites => p.n_sites = value as usize,
            AxisName::Phi => {}
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub name: AxisName,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl Axis {
    pub fn linear(name: AxisName, min: f64, max: f64, count: usize) -> Self {
        Axis {
            name,
            min,
            max,
            count,
            spacing: Spacing::Linear,
        }
    }

    pub fn log(name: AxisName, min: f64, max: f64, count: usize) -> Self {
        Axis {
            name,
            min,
            max,
            count,
            spacing: Spacing::Log,
        }
    }

    /// Grid values, endpoints included. Site counts are rounded to the nearest even integer.
    pub fn values(&self) -> Vec<f64> {
        let n = self.count;
        let raw: Vec<f64> = (0..n)
            .map(|i| {
                if i == 0 {
                    return self.min;
                }
                if i + 1 == n {
                    return self.max;
                }
                let f = i as f64 / (n - 1) as f64;
                match self.spacing {
                    Spacing::Linear => self.min + f * (self.max - self.min),
                    Spacing::Log => (self.min.ln() + f * (self.max.ln() - self.min.ln())).exp(),
                }
            })
            .collect();
        match self.name {
            AxisName::Sites => raw.into_iter().map(|v| 2.0 * (v / 2.0).round()).collect(),
            _ => raw,
        }
    }

    fn check(&self) -> Result<()> {
        let n = self.name.name();
        if self.count < 2 {
            return Err(Error::Config(format!("axis {n}: count >= 2 violated: {}", self.count)));
        }
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::Config(format!("axis {n}: bounds must be finite")));
        }
        if !(self.min < self.max) {
            return Err(Error::Config(format!(
                "axis {n}: min < max violated: {} >= {}",
                self.min, self.max
            )));
        }
        if self.spacing == Spacing::Log && self.min <= 0.0 {
            return Err(Error::Config(format!("axis {n}: log spacing needs min > 0")));
        }
        if self.name == AxisName::Sites {
            if self.min < 2.0 || self.max > 1e9 {
                return Err(Error::Config(format!("axis {n}: sites must lie in [2, 1e9]")));
            }
            let v = self.values();
            if v.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Config(format!(
                    "axis {n}: {} points collapse onto repeated even site counts",
                    self.count
                )));
            }
        }
        Ok(())
    }
}

/// A fully resolved run description.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub command: Command,
    pub regime: Regime,
    pub params: SystemParams,
    pub axes: Vec<Axis>,
    /// Homodyne phases; `None` selects the command's default list.
    pub phi: Option<Vec<f64>>,
    /// Coupling list for the spectrum figure; `None` selects the default list.
    pub g_values: Option<Vec<f64>>,
    /// Points per axis for one-dimensional grids.
    pub points: usize,
    /// Points per axis for two-dimensional grids.
    pub points_2d: usize,
    pub oracle: bool,
    pub n_max: Option<usize>,
    pub out: PathBuf,
    pub svg: bool,
    /// Worker threads; defaults to the available parallelism.
    pub jobs: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            command: Command::Sweep,
            regime: Regime::Lossless,
            params: SystemParams::default(),
            axes: Vec::new(),
            phi: None,
            g_values: None,
            points: 201,
            points_2d: 101,
            oracle: false,
            n_max: None,
            out: PathBuf::from("out"),
            svg: true,
            jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

/// One `key = value` line with its section.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub section: String,
    pub key: String,
    pub value: String,
}

fn is_ident(s: &str, extra: &[char]) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || extra.contains(&c))
}

/// Splits a config text into entries without interpreting them.
pub fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut section = String::new();
    let mut out: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') || s.starts_with(';') {
            continue;
        }
        if let Some(rest) = s.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::Config(format!("line {line}: unterminated section header")))?
                .trim();
            if !is_ident(name, &['.']) {
                return Err(Error::Config(format!("line {line}: bad section name {name:?}")));
            }
            section = name.to_string();
            continue;
        }
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {line}: expected `key = value`")))?;
        let key = k.trim();
        if !is_ident(key, &[]) {
            return Err(Error::Config(format!("line {line}: bad key {key:?}")));
        }
        if out.iter().any(|e| e.section == section && e.key == key) {
            return Err(Error::Config(format!("line {line}: duplicate key {key:?}")));
        }
        out.push(Entry {
            line,
            section: section.clone(),
            key: key.to_string(),
            value: v.trim().to_string(),
        });
    }
    Ok(out)
}

/// Parses a float, accepting `pi` and `<number>pi` for phases.
pub fn parse_float(s: &str) -> Result<f64> {
    let s = s.trim();
    let v = if s == "pi" {
        PI
    } else if s == "-pi" {
        -PI
    } else if let Some(head) = s.strip_suffix("pi") {
        parse_plain(head)? * PI
    } else {
        parse_plain(s)?
    };
    if !v.is_finite() {
        return Err(Error::Config(format!("{s:?} is not a finite number")));
    }
    Ok(v)
}

fn parse_plain(s: &str) -> Result<f64> {
    let s = s.trim();
    // reject the spellings of inf/nan that `f64::from_str` accepts
    if s.is_empty() || s.chars().any(|c| c.is_ascii_alphabetic() && c != 'e' && c != 'E') {
        return Err(Error::Config(format!("{s:?} is not a number")));
    }
    s.parse::<f64>()
        .map_err(|_| Error::Config(format!("{s:?} is not a number")))
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = s.split(',').map(parse_float).collect::<Result<_>>()?;
    Ok(v)
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| Error::Config(format!("{s:?} is not a non-negative integer")))
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        other => Err(Error::Config(format!("{other:?} is not a boolean"))),
    }
}

fn at(line: usize, e: Error) -> Error {
    match e {
        Error::Config(m) => Error::Config(format!("line {line}: {m}")),
        other => other,
    }
}

#[derive(Default)]
struct AxisDraft {
    min: Option<f64>,
    max: Option<f64>,
    count: Option<usize>,
    spacing: Option<Spacing>,
}

impl SweepConfig {
    /// Parses a config text on top of the defaults and validates the result.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = SweepConfig::default();
        let mut drafts: Vec<(AxisName, AxisDraft)> = Vec::new();
        for e in parse_entries(text)? {
            let r = match e.section.as_str() {
                "" => match cfg.apply_run(&e.key, &e.value) {
                    Ok(true) => Ok(()),
                    Ok(false) => cfg.apply_param(&e.key, &e.value).and_then(|known| {
                        if known {
                            Ok(())
                        } else {
                            Err(Error::Config(format!("unknown key {:?}", e.key)))
                        }
                    }),
                    Err(err) => Err(err),
                },
                "run" => cfg.apply_run(&e.key, &e.value).and_then(|known| {
                    if known {
                        Ok(())
                    } else {
                        Err(Error::Config(format!("unknown key {:?} in [run]", e.key)))
                    }
                }),
                "params" => cfg.apply_param(&e.key, &e.value).and_then(|known| {
                    if known {
                        Ok(())
                    } else {
                        Err(Error::Config(format!("unknown key {:?} in [params]", e.key)))
                    }
                }),
                sec => match sec.strip_prefix("axis.").and_then(AxisName::parse) {
                    Some(name) => {
                        let idx = match drafts.iter().position(|(n, _)| *n == name) {
                            Some(i) => i,
                            None => {
                                drafts.push((name, AxisDraft::default()));
                                drafts.len() - 1
                            }
                        };
                        apply_axis(&mut drafts[idx].1, &e.key, &e.value)
                    }
                    None => Err(Error::Config(format!("unknown section [{sec}]"))),
                },
            };
            r.map_err(|err| at(e.line, err))?;
        }
        for (name, d) in drafts {
            let axis = Axis {
                name,
                min: d
                    .min
                    .ok_or_else(|| Error::Config(format!("axis {}: missing min", name.name())))?,
                max: d
                    .max
                    .ok_or_else(|| Error::Config(format!("axis {}: missing max", name.name())))?,
                count: d.count.unwrap_or(cfg.points),
                spacing: d.spacing.unwrap_or(Spacing::Linear),
            };
            cfg.axes.push(axis);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads the config embedded in the comment header of a CSV written by this tool.
    pub fn from_csv_header(text: &str) -> Result<Self> {
        let mut inside = false;
        let mut body = String::new();
        let mut closed = false;
        for line in text.lines() {
            if !line.starts_with('#') {
                break;
            }
            if line.trim_end() == BEGIN_CONFIG {
                if inside || closed {
                    return Err(Error::Config("repeated config block".into()));
                }
                inside = true;
                continue;
            }
            if line.trim_end() == END_CONFIG {
                if !inside {
                    return Err(Error::Config("config block closed before it was opened".into()));
                }
                inside = false;
                closed = true;
                continue;
            }
            if inside {
                let stripped = line.strip_prefix("# ").unwrap_or(&line[1..]);
                body.push_str(stripped);
                body.push('\n');
            }
        }
        if !closed {
            return Err(Error::Config("no embedded config block in CSV header".into()));
        }
        SweepConfig::from_text(&body)
    }

    /// Loads a config file, or the config embedded in a CSV produced by a previous run.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        if text.lines().any(|l| l.trim_end() == BEGIN_CONFIG) {
            SweepConfig::from_csv_header(&text)
        } else {
            SweepConfig::from_text(&text)
        }
    }

    fn apply_run(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "command" => {
                self.command =
                    Command::parse(value).ok_or_else(|| Error::Config(format!("unknown command {value:?}")))?
            }
            "regime" => {
                self.regime = Regime::parse(value).ok_or_else(|| Error::Config(format!("unknown regime {value:?}")))?
            }
            "phi" => self.phi = Some(parse_list(value)?),
            "g_values" => self.g_values = Some(parse_list(value)?),
            "points" => self.points = parse_usize(value)?,
            "points2d" => self.points_2d = parse_usize(value)?,
            "oracle" => self.oracle = parse_bool(value)?,
            "nmax" => {
                self.n_max = match value {
                    "auto" => None,
                    v => Some(parse_usize(v)?),
                }
            }
            "out" => {
                if value.is_empty() {
                    return Err(Error::Config("empty output path".into()));
                }
                self.out = PathBuf::from(value)
            }
            "svg" => self.svg = parse_bool(value)?,
            "jobs" => self.jobs = parse_usize(value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn apply_param(&mut self, key: &str, value: &str) -> Result<bool> {
        let p = &mut self.params;
        match key {
            "omega0" => p.omega0 = parse_float(value)?,
            "thop" => p.t_hop = parse_float(value)?,
            "g" => p.g = parse_float(value)?,
            "kappa_ph" => p.kappa_ph = parse_float(value)?,
            "kappa_el" => p.kappa_el = parse_float(value)?,
            "gamma" => p.gamma_pump = parse_float(value)?,
            "eta" => {
                p.eta = match value {
                    "none" => None,
                    v => Some(parse_float(v)?),
                }
            }
            "sites" => p.n_sites = parse_usize(value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Checks everything that does not depend on a particular grid point.
    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| match e {
            Error::Range(m) => Error::Config(m),
            other => other,
        };
        self.params.check_fields().map_err(cfg_err)?;
        self.params.resolved_eta().map_err(cfg_err)?;
        if self.points < 2 || self.points_2d < 2 {
            return Err(Error::Config("points >= 2 violated".into()));
        }
        if self.points > 1_000_000 || self.points_2d > 10_000 {
            return Err(Error::Config("grid too large".into()));
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs >= 1 violated".into()));
        }
        if let Some(n) = self.n_max {
            if n < 4 {
                return Err(Error::Config(format!("nmax >= 4 violated: {n}")));
            }
        }
        for list in [&self.phi, &self.g_values].into_iter().flatten() {
            if list.is_empty() {
                return Err(Error::Config("empty list".into()));
            }
        }
        for (i, a) in self.axes.iter().enumerate() {
            a.check()?;
            if self.axes[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::Config(format!("axis {} given twice", a.name.name())));
            }
        }
        if self.axes.iter().any(|a| a.name == AxisName::Phi) && self.phi.is_some() {
            return Err(Error::Config("phi given both as an axis and as a list".into()));
        }
        if self.command == Command::Sweep && self.axes.is_empty() {
            return Err(Error::Config("sweep needs at least one axis".into()));
        }
        if let Some(r) = self.command.fixed_regime() {
            if r != self.regime {
                return Err(Error::Config(format!(
                    "{} runs in the {} regime, config asks for {}",
                    self.command, r, self.regime
                )));
            }
        }
        let cells: usize = self.axes.iter().map(|a| a.count).product::<usize>() * self.phi.as_ref().map_or(1, Vec::len);
        if cells > 10_000_000 {
            return Err(Error::Config(format!("{cells} grid points is too many")));
        }
        Ok(())
    }

    /// Renders the config. Without `runtime` the output path, plotting switch and
    /// worker count are left out, since they do not change any computed number.
    pub fn to_text(&self, runtime: bool) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        s.push_str("[run]\n");
        s.push_str(&format!("command = {}\n", self.command));
        s.push_str(&format!("regime = {}\n", self.regime));
        if let Some(phi) = &self.phi {
            s.push_str(&format!("phi = {}\n", list(phi)));
        }
        if let Some(g) = &self.g_values {
            s.push_str(&format!("g_values = {}\n", list(g)));
        }
        s.push_str(&format!("points = {}\n", self.points));
        s.push_str(&format!("points2d = {}\n", self.points_2d));
        s.push_str(&format!("oracle = {}\n", self.oracle));
        match self.n_max {
            Some(n) => s.push_str(&format!("nmax = {n}\n")),
            None => s.push_str("nmax = auto\n"),
        }
        if runtime {
            s.push_str(&format!("out = {}\n", self.out.display()));
            s.push_str(&format!("svg = {}\n", self.svg));
            s.push_str(&format!("jobs = {}\n", self.jobs));
        }
        let p = &self.params;
        s.push_str("\n[params]\n");
        s.push_str(&format!("omega0 = {:?}\n", p.omega0));
        s.push_str(&format!("thop = {:?}\n", p.t_hop));
        s.push_str(&format!("g = {:?}\n", p.g));
        s.push_str(&format!("kappa_ph = {:?}\n", p.kappa_ph));
        s.push_str(&format!("kappa_el = {:?}\n", p.kappa_el));
        s.push_str(&format!("gamma = {:?}\n", p.gamma_pump));
        match p.eta {
            Some(e) => s.push_str(&format!("eta = {e:?}\n")),
            None => s.push_str("eta = none\n"),
        }
        s.push_str(&format!("sites = {}\n", p.n_sites));
        for a in &self.axes {
            s.push_str(&format!("\n[axis.{}]\n", a.name.name()));
            s.push_str(&format!("min = {:?}\n", a.min));
            s.push_str(&format!("max = {:?}\n", a.max));
            s.push_str(&format!("count = {}\n", a.count));
            s.push_str(&format!("spacing = {}\n", a.spacing.name()));
        }
        s
    }
}

fn apply_axis(d: &mut AxisDraft, key: &str, value: &str) -> Result<()> {
    match key {
        "min" => d.min = Some(parse_float(value)?),
        "max" => d.max = Some(parse_float(value)?),
        "count" => d.count = Some(parse_usize(value)?),
        "spacing" => {
            d.spacing = Some(Spacing::parse(value).ok_or_else(|| Error::Config(format!("unknown spacing {value:?}")))?)
        }
        other => return Err(Error::Config(format!("unknown axis key {other:?}"))),
    }
    Ok(())
}

/// Parses a command-line axis `name=min:max:count[:log|:linear]`.
pub fn parse_axis_spec(spec: &str) -> Result<Axis> {
    let (name, rest) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("axis {spec:?}: expected name=min:max:count")))?;
    let name = AxisName::parse(name.trim()).ok_or_else(|| Error::Config(format!("unknown axis {:?}", name.trim())))?;
    let parts: Vec<&str> = rest.split(':').collect();
    if !(3..=4).contains(&parts.len()) {
        return Err(Error::Config(format!("axis {spec:?}: expected name=min:max:count")));
    }
    let spacing = match parts.get(3) {
        Some(s) => Spacing::parse(s.trim()).ok_or_else(|| Error::Config(format!("unknown spacing {s:?}")))?,
        None => Spacing::Linear,
    };
    let axis = Axis {
        name,
        min: parse_float(parts[0])?,
        max: parse_float(parts[1])?,
        count: parse_usize(parts[2])?,
        spacing,
    };
    axis.check()?;
    Ok(axis)
}
