//! Study configuration, error norms and report emission for the
//! `misdc-kit` front end.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::analysis::{self, LegacyLimitReport, LimitReport, Method, RegionScan};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::testpde::{self, StepRecord, TestPdeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    OrderStudy,
    RegionScan,
    LimitCheck,
    SingleRun,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "order-study" => Ok(Mode::OrderStudy),
            "region-scan" => Ok(Mode::RegionScan),
            "limit-check" => Ok(Mode::LimitCheck),
            "single-run" => Ok(Mode::SingleRun),
            other => Err(Error::Config(format!("unknown mode '{other}'"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::OrderStudy => "order-study",
            Mode::RegionScan => "region-scan",
            Mode::LimitCheck => "limit-check",
            Mode::SingleRun => "single-run",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown format '{other}'"))),
        }
    }
}

/// Flat `key = value` study description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyConfig {
    pub mode: Option<Mode>,
    pub a: f64,
    pub d: f64,
    pub r: f64,
    pub n_ladder: Vec<usize>,
    pub cfl: f64,
    pub sweeps: usize,
    pub nodes: usize,
    pub t_final: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub d_dt_range: (f64, f64),
    pub r_dt_range: (f64, f64),
    pub resolution: (usize, usize),
    pub a_tilde: f64,
    pub d_tilde: f64,
    pub lambda: f64,
    pub dx_sequence: Vec<f64>,
    pub record_wall_time: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            mode: None,
            a: -0.1,
            d: 1.0,
            r: -10.0,
            n_ladder: vec![200, 400, 800, 1600, 3200],
            cfl: 0.5,
            sweeps: 4,
            nodes: 3,
            t_final: 0.5,
            out: None,
            format: Format::Csv,
            d_dt_range: (-40.0, 4.0),
            r_dt_range: (-40.0, 4.0),
            resolution: (89, 89),
            a_tilde: 1.0,
            d_tilde: 1.0,
            lambda: 0.5,
            dx_sequence: vec![1e-2, 1e-3, 1e-4],
            record_wall_time: true,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{value}'")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

fn parse_pair<T: FromStr + Copy>(key: &str, value: &str) -> Result<(T, T)> {
    match parse_list::<T>(key, value)?.as_slice() {
        [x] => Ok((*x, *x)),
        [x, y] => Ok((*x, *y)),
        _ => Err(Error::Config(format!(
            "{key}: expected one or two values, got '{value}'"
        ))),
    }
}

impl StudyConfig {
    /// Parse `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
            let key = key.trim().to_string();
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
        }

        let mut config = Self::default();
        for (key, value) in &entries {
            let (k, v) = (key.as_str(), value.as_str());
            match k {
                "mode" => config.mode = Some(v.parse()?),
                "a" => config.a = parse_value(k, v)?,
                "d" => config.d = parse_value(k, v)?,
                "r" => config.r = parse_value(k, v)?,
                "n_ladder" => config.n_ladder = parse_list(k, v)?,
                "cfl" => config.cfl = parse_value(k, v)?,
                "K" => config.sweeps = parse_value(k, v)?,
                "nodes" => config.nodes = parse_value(k, v)?,
                "t_final" => config.t_final = parse_value(k, v)?,
                "out" => config.out = Some(PathBuf::from(v)),
                "format" => config.format = v.parse()?,
                "d_dt_range" => config.d_dt_range = parse_pair(k, v)?,
                "r_dt_range" => config.r_dt_range = parse_pair(k, v)?,
                "resolution" => config.resolution = parse_pair(k, v)?,
                "a_tilde" => config.a_tilde = parse_value(k, v)?,
                "d_tilde" => config.d_tilde = parse_value(k, v)?,
                "lambda" => config.lambda = parse_value(k, v)?,
                "dx_sequence" => config.dx_sequence = parse_list(k, v)?,
                "record_wall_time" => config.record_wall_time = parse_value(k, v)?,
                other => return Err(Error::Config(format!("unknown key '{other}'"))),
            }
        }
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Check the ladder: strictly increasing, each entry twice the previous.
    pub fn validate_ladder(&self, minimum: usize) -> Result<()> {
        if self.n_ladder.len() < minimum {
            return Err(Error::Config(format!(
                "n_ladder needs at least {minimum} entries, got {}",
                self.n_ladder.len()
            )));
        }
        if let Some(w) = self.n_ladder.windows(2).find(|w| w[1] != 2 * w[0]) {
            return Err(Error::Config(format!(
                "n_ladder must double at each entry; {} is followed by {}",
                w[0], w[1]
            )));
        }
        Ok(())
    }

    pub fn pde(&self, n: usize) -> TestPdeConfig {
        TestPdeConfig {
            a: self.a,
            d: self.d,
            r: self.r,
            n,
            cfl: self.cfl,
            final_time: self.t_final,
            sweeps: self.sweeps,
            node_count: self.nodes,
        }
    }
}

/// How a fine solution is brought to the coarse mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coarsening {
    /// Point values: `coarse[i]` pairs with `fine[2i + 1]`.
    Injection,
    /// Cell averages: `coarse[i]` pairs with the mean of `fine[2i]` and `fine[2i + 1]`.
    Averaging,
}

/// `(1/n_c) sum |coarse_i - coarsened fine_i|`, with `fine` holding twice as
/// many values as `coarse`.
pub fn l1_error(coarse: &[f64], fine: &[f64], mode: Coarsening) -> Result<f64> {
    if coarse.is_empty() || fine.len() != 2 * coarse.len() {
        return Err(Error::InvalidArgument(format!(
            "fine field must hold exactly twice the coarse values ({} vs {})",
            fine.len(),
            coarse.len()
        )));
    }
    let sum: f64 = coarse
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let f = match mode {
                Coarsening::Injection => fine[2 * i + 1],
                Coarsening::Averaging => 0.5 * (fine[2 * i] + fine[2 * i + 1]),
            };
            (c - f).abs()
        })
        .sum();
    Ok(sum / coarse.len() as f64)
}

/// `log2(e_coarse / e_fine)`; NaN when either error is zero.
pub fn observed_order(coarse_error: f64, fine_error: f64) -> f64 {
    if coarse_error == fine_error {
        return 0.0;
    }
    if coarse_error == 0.0 || fine_error == 0.0 {
        return f64::NAN;
    }
    (coarse_error / fine_error).log2()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderRow {
    pub n: usize,
    pub dt: f64,
    /// Error against the next ladder entry; absent for the finest.
    pub l1_error: Option<f64>,
    /// Rate between the previous entry's error and this one's.
    pub rate: Option<f64>,
    pub wall_seconds: f64,
    pub newton_max_iterations: usize,
    pub newton_max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub sweeps: usize,
    pub node_count: usize,
    pub cfl: f64,
    pub t_final: f64,
    pub a: f64,
    pub d: f64,
    pub r: f64,
    pub rows: Vec<OrderRow>,
    /// Set when a solve failed; rows that depend on it are left empty.
    pub failure: Option<String>,
}

impl ConvergenceReport {
    /// Defined rates in ladder order.
    pub fn rates(&self) -> Vec<f64> {
        self.rows
            .iter()
            .filter_map(|r| r.rate)
            .filter(|r| r.is_finite())
            .collect()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.l1_error).collect()
    }

    pub fn newton_max_iterations(&self) -> usize {
        self.rows.iter().map(|r| r.newton_max_iterations).max().unwrap_or(0)
    }

    pub fn newton_max_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.newton_max_residual).fold(0.0, f64::max)
    }
}

/// Solve the benchmark on every ladder entry and compare neighbours.
pub fn run_order_study(config: &StudyConfig, exec: Execution) -> Result<ConvergenceReport> {
    config.validate_ladder(3)?;
    let pdes: Vec<TestPdeConfig> = config.n_ladder.iter().map(|&n| config.pde(n)).collect();
    for pde in &pdes {
        pde.validate()?;
    }
    let runs = exec.map(&pdes, |pde| {
        let start = Instant::now();
        let solution = testpde::solve(pde);
        (solution, start.elapsed().as_secs_f64())
    });

    let mut failure = None;
    let mut fields = Vec::with_capacity(runs.len());
    let mut rows = Vec::with_capacity(runs.len());
    for (pde, (solution, wall)) in pdes.iter().zip(runs) {
        let wall_seconds = if config.record_wall_time { wall } else { 0.0 };
        let (iters, resid) = match &solution {
            Ok(s) => (s.newton_max_iterations(), s.newton_max_residual()),
            Err(_) => (0, 0.0),
        };
        rows.push(OrderRow {
            n: pde.n,
            dt: pde.dt(),
            l1_error: None,
            rate: None,
            wall_seconds,
            newton_max_iterations: iters,
            newton_max_residual: resid,
        });
        match solution {
            Ok(s) => fields.push(Some(s.field)),
            Err(e) => {
                if failure.is_none() {
                    failure = Some(format!("n = {}: {e}", pde.n));
                }
                fields.push(None);
            }
        }
    }

    for i in 0..rows.len() - 1 {
        if let (Some(coarse), Some(fine)) = (&fields[i], &fields[i + 1]) {
            // Skip x = 0, which both meshes pin to the inflow value.
            rows[i].l1_error = Some(l1_error(&coarse[1..], &fine[1..], Coarsening::Injection)?);
        }
    }
    for i in 1..rows.len() {
        if let (Some(prev), Some(cur)) = (rows[i - 1].l1_error, rows[i].l1_error) {
            rows[i].rate = Some(observed_order(prev, cur));
        }
    }

    Ok(ConvergenceReport {
        sweeps: config.sweeps,
        node_count: config.nodes,
        cfl: config.cfl,
        t_final: config.t_final,
        a: config.a,
        d: config.d,
        r: config.r,
        rows,
        failure,
    })
}

/// MISDC and legacy scans on the same grid, `dt = 1`.
pub fn run_region_scan(config: &StudyConfig, exec: Execution) -> Result<Vec<RegionScan>> {
    [Method::Misdc, Method::Legacy]
        .into_iter()
        .map(|method| {
            analysis::scan_region(
                method,
                config.a,
                config.d_dt_range,
                config.r_dt_range,
                config.resolution,
                exec,
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitStudy {
    pub misdc: LimitReport,
    pub legacy: LegacyLimitReport,
}

pub fn run_limit_check(config: &StudyConfig) -> Result<LimitStudy> {
    let args = (config.a_tilde, config.d_tilde, config.r, config.lambda);
    Ok(LimitStudy {
        misdc: analysis::limit_check(args.0, args.1, args.2, args.3, &config.dx_sequence)?,
        legacy: analysis::legacy_limit_check(args.0, args.1, args.2, args.3, &config.dx_sequence)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingleRun {
    pub config: TestPdeConfig,
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
    pub steps: Vec<StepRecord>,
}

/// Solve the benchmark once on the first ladder entry.
pub fn run_single(config: &StudyConfig) -> Result<SingleRun> {
    let n = *config
        .n_ladder
        .first()
        .ok_or_else(|| Error::Config("n_ladder is empty".into()))?;
    let pde = config.pde(n);
    let solution = testpde::solve(&pde)?;
    let x = (0..=n).map(|i| solution.grid.x(i)).collect();
    Ok(SingleRun {
        config: pde,
        x,
        phi: solution.field,
        steps: solution.steps,
    })
}

/// Seventeen significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(v) if v.is_finite() => fmt_f64(v),
        Some(_) => "undefined".into(),
        None => String::new(),
    }
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

pub fn write_order_csv<W: Write>(report: &ConvergenceReport, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["n", "dt", "l1_error", "rate", "wall_seconds"])?;
    for row in &report.rows {
        out.write_record([
            row.n.to_string(),
            fmt_f64(row.dt),
            fmt_opt(row.l1_error),
            fmt_opt(row.rate),
            fmt_f64(row.wall_seconds),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_region_csv<W: Write>(scans: &[RegionScan], w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["method", "d_dt", "r_dt", "theta", "converged"])?;
    for scan in scans {
        for cell in &scan.cells {
            out.write_record([
                scan.method.name().to_string(),
                fmt_f64(cell.d_dt),
                fmt_f64(cell.r_dt),
                if cell.pole {
                    "pole".to_string()
                } else {
                    fmt_f64(cell.theta)
                },
                cell.converged.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_limit_csv<W: Write>(study: &LimitStudy, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["dx", "alpha", "beta", "gamma", "delta", "theta"])?;
    for row in &study.misdc.rows {
        out.write_record([row.dx, row.alpha, row.beta, row.gamma, row.delta, row.theta].map(fmt_f64))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_single_csv<W: Write>(run: &SingleRun, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record([
        "step",
        "time",
        "dt",
        "newton_max_iterations",
        "newton_max_residual",
        "sweep_residuals",
    ])?;
    for s in &run.steps {
        let residuals: Vec<String> = s.sweep_residuals.iter().map(|r| fmt_f64(*r)).collect();
        out.write_record([
            s.step.to_string(),
            fmt_f64(s.time),
            fmt_f64(s.dt),
            s.newton_max_iterations.to_string(),
            fmt_f64(s.newton_max_residual),
            residuals.join(";"),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize, W: Write>(value: &T, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

/// Outcome of [`run_study`]; `solver_failure` is set when the report is
/// partial because a solve failed.
#[derive(Debug)]
pub struct StudyOutcome {
    pub solver_failure: Option<String>,
}

/// Run `mode` and write its report in `format` to `w`.
pub fn run_study<W: Write>(
    mode: Mode,
    config: &StudyConfig,
    format: Format,
    exec: Execution,
    w: W,
) -> Result<StudyOutcome> {
    let mut solver_failure = None;
    match mode {
        Mode::OrderStudy => {
            let report = run_order_study(config, exec)?;
            solver_failure = report.failure.clone();
            match format {
                Format::Csv => write_order_csv(&report, w)?,
                Format::Json => write_json(&report, w)?,
            }
        }
        Mode::RegionScan => {
            let scans = run_region_scan(config, exec)?;
            match format {
                Format::Csv => write_region_csv(&scans, w)?,
                Format::Json => write_json(&scans, w)?,
            }
        }
        Mode::LimitCheck => {
            let study = run_limit_check(config)?;
            match format {
                Format::Csv => write_limit_csv(&study, w)?,
                Format::Json => write_json(&study, w)?,
            }
        }
        Mode::SingleRun => {
            let run = run_single(config)?;
            match format {
                Format::Csv => write_single_csv(&run, w)?,
                Format::Json => write_json(&run, w)?,
            }
        }
    }
    Ok(StudyOutcome { solver_failure })
}
