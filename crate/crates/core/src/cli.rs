//! Batch runner: configuration parsing, subcommand dispatch and table output.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Deserialize;

use crate::ar1oracle::ar1_ell0;
use crate::error::Error;
use crate::idist::{ar1_density_laplace, decompose, ComponentKind, MAX_DECOMPOSE};
use crate::kernels::{KernelSpec, MeanSpec, Perturbation, ProcessModel};
use crate::laplace::log_laplace;
use crate::limits::{
    convergence_table, convergence_table_conditioned, limit, wiener_hopf, DEFAULT_NODES, DEFAULT_TOL,
};
use crate::mc::estimate_log_laplace;

/// Largest horizon the runner accepts; covariance matrices are stored densely.
pub const MAX_HORIZON: usize = 4096;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sqgauss", version, about = "Laplace transforms of squared Gaussian sums")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// l0, l1 and l per alpha.
    Limit,
    /// (1/t) log L_t against -l over the t grid (one alpha).
    Converge,
    /// As `converge`, for the law conditioned on X_0 = x.
    ConvergeConditioned,
    /// Truncated Wiener-Hopf solution against its closed forms, per alpha.
    Wienerhopf,
    /// Infinitely divisible decomposition against the exact transform, per (alpha, t).
    Decompose,
    /// Monte Carlo estimate against the exact transform, per (alpha, t).
    McCheck,
    /// Finite-horizon diagnostics of the model hypotheses, per t.
    Hypotheses,
    /// Laplace transform of the AR(1) limit density against its closed form, per alpha.
    Ar1Density,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Obj,
}

#[derive(Debug, Default, Clone, clap::Args)]
pub struct Flags {
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Comma-separated list.
    #[arg(long, global = true)]
    pub alpha: Option<String>,
    /// `LO:HI:STEP` (inclusive) or a comma-separated list.
    #[arg(long, global = true)]
    pub t: Option<String>,
    #[arg(long, global = true)]
    pub nodes: Option<usize>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub x: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelSection {
    kind: String,
    theta: Option<f64>,
    coeffs: Option<Vec<f64>>,
    values: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeanSection {
    kind: String,
    m_inf: Option<f64>,
    c: Option<f64>,
    rho: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PerturbationSection {
    kind: String,
    c: Option<f64>,
    rho: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum AlphaValue {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum GridValue {
    Spec(String),
    List(Vec<usize>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    alpha: Option<AlphaValue>,
    t: Option<GridValue>,
    nodes: Option<usize>,
    tol: Option<f64>,
    seed: Option<u64>,
    samples: Option<usize>,
    x: Option<f64>,
    format: Option<Format>,
    out: Option<PathBuf>,
    kernel: Option<KernelSection>,
    mean: Option<MeanSection>,
    perturbation: Option<PerturbationSection>,
}

/// Validated experiment: model, grids and options after flag overrides.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: ProcessModel,
    pub alphas: Vec<f64>,
    pub ts: Vec<usize>,
    pub nodes: usize,
    pub tol: f64,
    pub seed: u64,
    pub samples: usize,
    pub x: Option<f64>,
    pub format: Format,
    pub out: Option<PathBuf>,
}

/// Failure of a run, mapped to the process exit code.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Numeric(Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "ConfigError: {m}"),
            RunError::Numeric(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Numeric(e)
    }
}

fn config_err(e: impl std::fmt::Display) -> RunError {
    RunError::Config(e.to_string())
}

/// Parses `LO:HI:STEP` (inclusive) or `a,b,c`.
pub fn parse_grid(s: &str) -> Result<Vec<usize>, String> {
    let s = s.trim();
    let ts: Vec<usize> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("grid `{s}` is not LO:HI:STEP"));
        }
        let num = |p: &str| p.trim().parse::<usize>().map_err(|e| format!("grid `{s}`: {e}"));
        let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if step == 0 || lo > hi {
            return Err(format!("grid `{s}` needs LO <= HI and STEP > 0"));
        }
        (lo..=hi).step_by(step).collect()
    } else {
        s.split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|e| format!("grid `{s}`: {e}")))
            .collect::<Result<_, _>>()?
    };
    Ok(ts)
}

pub fn parse_alphas(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("alpha `{p}`: {e}")))
        .collect()
}

fn need<T>(v: Option<T>, what: &str) -> Result<T, RunError> {
    v.ok_or_else(|| RunError::Config(format!("missing {what}")))
}

fn build_kernel(k: &KernelSection) -> Result<KernelSpec, RunError> {
    let kernel = match k.kind.as_str() {
        "white" => Ok(KernelSpec::white()),
        "ar1" => KernelSpec::ar1(need(k.theta, "kernel.theta")?),
        "ma" => KernelSpec::ma(need(k.coeffs.clone(), "kernel.coeffs")?),
        "table" => KernelSpec::table(need(k.values.clone(), "kernel.values")?),
        other => return Err(RunError::Config(format!("unknown kernel.kind `{other}`"))),
    };
    kernel.map_err(config_err)
}

fn build_mean(m: Option<&MeanSection>) -> Result<MeanSpec, RunError> {
    let Some(m) = m else {
        return Ok(MeanSpec::zero());
    };
    let m_inf = m.m_inf.unwrap_or(0.0);
    match m.kind.as_str() {
        "constant" => Ok(MeanSpec::Constant(m_inf)),
        "alternating" => Ok(MeanSpec::Alternating(m_inf)),
        "decaying" => Ok(MeanSpec::Decaying {
            m_inf,
            c: need(m.c, "mean.c")?,
            rho: need(m.rho, "mean.rho")?,
        }),
        other => Err(RunError::Config(format!("unknown mean.kind `{other}`"))),
    }
}

fn build_perturbation(p: Option<&PerturbationSection>) -> Result<Perturbation, RunError> {
    let Some(p) = p else {
        return Ok(Perturbation::None);
    };
    match p.kind.as_str() {
        "none" => Ok(Perturbation::None),
        "separable" => Ok(Perturbation::Separable {
            c: need(p.c, "perturbation.c")?,
            rho: need(p.rho, "perturbation.rho")?,
        }),
        other => Err(RunError::Config(format!("unknown perturbation.kind `{other}`"))),
    }
}

impl ExperimentConfig {
    /// Parses the configuration text (TOML), applies flag overrides and validates.
    pub fn from_parts(text: Option<&str>, flags: &Flags) -> Result<Self, RunError> {
        let file: ConfigFile = match text {
            Some(t) => toml::from_str(t).map_err(config_err)?,
            None => ConfigFile::default(),
        };
        let kernel = match &file.kernel {
            Some(k) => build_kernel(k)?,
            None => KernelSpec::white(),
        };
        let model = ProcessModel::new(
            build_mean(file.mean.as_ref())?,
            kernel,
            build_perturbation(file.perturbation.as_ref())?,
        )
        .map_err(config_err)?;

        let alphas = match (&flags.alpha, file.alpha) {
            (Some(s), _) => parse_alphas(s).map_err(RunError::Config)?,
            (None, Some(AlphaValue::One(a))) => vec![a],
            (None, Some(AlphaValue::Many(v))) => v,
            (None, None) => Vec::new(),
        };
        if let Some(a) = alphas.iter().find(|a| !(**a >= 0.0) || !a.is_finite()) {
            return Err(RunError::Config(format!("alpha must be finite and >= 0, got {a}")));
        }
        let ts = match (&flags.t, file.t) {
            (Some(s), _) => parse_grid(s).map_err(RunError::Config)?,
            (None, Some(GridValue::Spec(s))) => parse_grid(&s).map_err(RunError::Config)?,
            (None, Some(GridValue::List(v))) => v,
            (None, None) => Vec::new(),
        };
        if let Some(t) = ts.iter().find(|t| **t == 0 || **t > MAX_HORIZON) {
            return Err(RunError::Config(format!("t must lie in 1..={MAX_HORIZON}, got {t}")));
        }
        let nodes = flags.nodes.or(file.nodes).unwrap_or(DEFAULT_NODES);
        if nodes < 8 {
            return Err(RunError::Config(format!("nodes must be >= 8, got {nodes}")));
        }
        let tol = flags.tol.or(file.tol).unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0) {
            return Err(RunError::Config(format!("tol must be > 0, got {tol}")));
        }
        let x = flags.x.or(file.x);
        if let Some(x) = x.filter(|x| !x.is_finite()) {
            return Err(RunError::Config(format!("x must be finite, got {x}")));
        }
        Ok(ExperimentConfig {
            model,
            alphas,
            ts,
            nodes,
            tol,
            seed: flags.seed.or(file.seed).unwrap_or(0),
            samples: flags.samples.or(file.samples).unwrap_or(100_000),
            x,
            format: flags.format.or(file.format).unwrap_or(Format::Csv),
            out: flags.out.clone().or(file.out),
        })
    }

    pub fn load(flags: &Flags) -> Result<Self, RunError> {
        let text = match &flags.config {
            Some(p) => Some(
                std::fs::read_to_string(p).map_err(|e| RunError::Config(format!("{}: {e}", p.display())))?,
            ),
            None => None,
        };
        Self::from_parts(text.as_deref(), flags)
    }

    fn require_alphas(&self) -> Result<&[f64], RunError> {
        if self.alphas.is_empty() {
            return Err(RunError::Config("missing alpha".into()));
        }
        Ok(&self.alphas)
    }

    fn require_single_alpha(&self) -> Result<f64, RunError> {
        match self.require_alphas()? {
            [a] => Ok(*a),
            _ => Err(RunError::Config("this subcommand takes exactly one alpha".into())),
        }
    }

    fn require_ts(&self) -> Result<&[usize], RunError> {
        if self.ts.is_empty() {
            return Err(RunError::Config("missing t grid".into()));
        }
        Ok(&self.ts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(u64),
    Num(f64),
}

/// Output table: a header and rows of cells in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn check_finite(&self) -> Result<(), Error> {
        for row in &self.rows {
            for (name, cell) in self.columns.iter().zip(row) {
                if let Cell::Num(v) = cell {
                    if !v.is_finite() {
                        return Err(Error::Domain(format!("non-finite value in column `{name}`")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Int(i) => i.to_string(),
                    Cell::Num(v) => format!("{v:.16e}"),
                })
                .collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: serde_json::Map<String, serde_json::Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(name, c)| {
                        let v = match c {
                            Cell::Int(i) => serde_json::Value::from(*i),
                            Cell::Num(v) => serde_json::Value::from(*v),
                        };
                        (name.to_string(), v)
                    })
                    .collect();
                serde_json::Value::Object(obj)
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&rows).expect("serializable rows");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Obj => self.to_json(),
        }
    }
}

use Cell::{Int, Num};

fn int(v: usize) -> Cell {
    Int(v as u64)
}

/// Runs one subcommand and returns its table.
pub fn execute(command: Command, cfg: &ExperimentConfig) -> Result<Table, RunError> {
    let model = &cfg.model;
    let table = match command {
        Command::Limit => {
            let mut t = Table::new(&["alpha", "ell0", "ell1", "ell", "quadrature_delta"]);
            t.rows = cfg
                .require_alphas()?
                .par_iter()
                .map(|&a| {
                    let r = limit(&model.kernel, &model.mean, a, cfg.nodes);
                    vec![Num(a), Num(r.ell0), Num(r.ell1), Num(r.ell), Num(r.quadrature_delta)]
                })
                .collect();
            t
        }
        Command::Converge | Command::ConvergeConditioned => {
            let alpha = cfg.require_single_alpha()?;
            let ts = cfg.require_ts()?;
            let (mut t, rows) = if command == Command::Converge {
                let t = Table::new(&["t", "scaled_log_laplace", "neg_ell", "abs_error"]);
                (t, convergence_table(model, alpha, ts, cfg.nodes)?)
            } else {
                let x = need(cfg.x, "x")?;
                let t = Table::new(&["t", "scaled_log_laplace", "neg_ell", "abs_error"]);
                (t, convergence_table_conditioned(model, x, alpha, ts, cfg.nodes)?)
            };
            t.rows = rows
                .iter()
                .map(|r| vec![int(r.t), Num(r.scaled_log_laplace), Num(r.neg_ell), Num(r.abs_error)])
                .collect();
            t
        }
        Command::Wienerhopf => {
            let mut t = Table::new(&[
                "alpha",
                "truncation",
                "g0",
                "g0_closed",
                "sum",
                "sum_closed",
                "ratio",
                "ratio_closed",
                "residual",
            ]);
            let sols = cfg
                .require_alphas()?
                .par_iter()
                .map(|&a| wiener_hopf(&model.kernel, a, cfg.tol, cfg.nodes))
                .collect::<Result<Vec<_>, _>>()?;
            t.rows = sols
                .iter()
                .map(|w| {
                    vec![
                        Num(w.alpha),
                        int(w.truncation),
                        Num(w.g0()),
                        Num(w.g0_closed),
                        Num(w.sum()),
                        Num(w.sum_closed),
                        Num(w.ratio()),
                        Num(w.ratio_closed),
                        Num(w.residual),
                    ]
                })
                .collect();
            t
        }
        Command::Decompose => {
            let alphas = cfg.require_alphas()?;
            let ts = cfg.require_ts()?;
            if let Some(t) = ts.iter().find(|t| **t > MAX_DECOMPOSE) {
                return Err(RunError::Config(format!("decompose takes t <= {MAX_DECOMPOSE}, got {t}")));
            }
            let mut t = Table::new(&[
                "t",
                "alpha",
                "log_laplace_decomposed",
                "log_laplace_exact",
                "abs_error",
                "gamma_count",
                "compound_count",
                "deterministic_shift",
            ]);
            let decs = ts
                .par_iter()
                .map(|&t| decompose(model, t))
                .collect::<Result<Vec<_>, _>>()?;
            for (&tt, dec) in ts.iter().zip(&decs) {
                let gammas = dec
                    .components
                    .iter()
                    .filter(|c| matches!(c.kind, ComponentKind::Gamma { .. }))
                    .count();
                let compounds = dec
                    .components
                    .iter()
                    .filter(|c| matches!(c.kind, ComponentKind::CompoundPoisson { .. }))
                    .count();
                let shift: f64 = dec
                    .components
                    .iter()
                    .map(|c| match c.kind {
                        ComponentKind::Deterministic { shift } => shift,
                        _ => 0.0,
                    })
                    .sum();
                for &a in alphas {
                    let d = dec.log_laplace(a);
                    let e = log_laplace(model, a, tt)?.log_value;
                    t.rows.push(vec![
                        int(tt),
                        Num(a),
                        Num(d),
                        Num(e),
                        Num((d - e).abs()),
                        int(gammas),
                        int(compounds),
                        Num(shift),
                    ]);
                }
            }
            t
        }
        Command::McCheck => {
            let alphas = cfg.require_alphas()?;
            let ts = cfg.require_ts()?;
            if cfg.samples == 0 {
                return Err(RunError::Config("samples must be >= 1".into()));
            }
            let mut t = Table::new(&[
                "t", "alpha", "samples", "seed", "mc_mean", "std_error", "exact", "z_score",
            ]);
            for &tt in ts {
                for &a in alphas {
                    let est = estimate_log_laplace(model, a, tt, cfg.samples, cfg.seed)?;
                    let exact = log_laplace(model, a, tt)?.log_value.exp();
                    let z = if est.std_error == 0.0 && est.mean == exact {
                        0.0
                    } else {
                        est.z_score(exact)
                    };
                    t.rows.push(vec![
                        int(tt),
                        Num(a),
                        int(cfg.samples),
                        Int(cfg.seed),
                        Num(est.mean),
                        Num(est.std_error),
                        Num(exact),
                        Num(z),
                    ]);
                }
            }
            t
        }
        Command::Hypotheses => {
            let mut t = Table::new(&[
                "t",
                "sup_mean",
                "max_row_abs_sum",
                "kernel_abs_sum",
                "mean_gap",
                "covariance_gap",
            ]);
            t.rows = cfg
                .require_ts()?
                .par_iter()
                .map(|&tt| {
                    let h = model.hypothesis_report(tt);
                    vec![
                        int(h.t),
                        Num(h.sup_mean),
                        Num(h.max_row_abs_sum),
                        Num(h.kernel_abs_sum),
                        Num(h.mean_gap),
                        Num(h.covariance_gap),
                    ]
                })
                .collect();
            t
        }
        Command::Ar1Density => {
            let theta = model
                .kernel
                .theta()
                .ok_or_else(|| RunError::Config("ar1-density needs kernel.kind = \"ar1\"".into()))?;
            let mut t = Table::new(&[
                "theta",
                "alpha",
                "laplace_numeric",
                "laplace_closed",
                "abs_error",
                "tail_bound",
            ]);
            let rows = cfg
                .require_alphas()?
                .par_iter()
                .map(|&a| {
                    let d = ar1_density_laplace(theta, a)?;
                    let closed = (-ar1_ell0(theta, a)?).exp();
                    Ok(vec![
                        Num(theta),
                        Num(a),
                        Num(d.value),
                        Num(closed),
                        Num((d.value - closed).abs()),
                        Num(d.tail_bound),
                    ])
                })
                .collect::<Result<Vec<_>, Error>>()?;
            t.rows = rows;
            t
        }
    };
    table.check_finite()?;
    Ok(table)
}

/// Parses the command line, runs, writes the output and returns the exit code.
pub fn run(cli: &Cli) -> Result<(), RunError> {
    let cfg = ExperimentConfig::load(&cli.flags)?;
    let table = execute(cli.command, &cfg)?;
    let text = table.render(cfg.format);
    match &cfg.out {
        Some(p) => std::fs::write(p, text).map_err(|e| RunError::Config(format!("{}: {e}", p.display())))?,
        None => print!("{text}"),
    }
    Ok(())
}
