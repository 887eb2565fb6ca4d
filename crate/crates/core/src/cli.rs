//! Command-line frontend.
//!
//! Every command reads a CSV table (header row, columns `x1..xd`, plus `y`
//! for labeled data), writes a CSV result and prints a JSON run summary.
//! The summary goes to stdout when the CSV goes to a file, and to stderr
//! when the CSV goes to stdout. Exit status: 0 success, 1 invalid input or
//! arguments, 2 I/O failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::band::{bootstrap_band, BootstrapPlan};
use crate::deconv::{Deconvolver, DeconvOptions, McDeconvolver, NoiseModel};
use crate::density::{
    density_derivative_at, lscv_score, pointwise_ci, select_radius, select_radius_lscv, EstimatorConfig, Smoothness,
};
use crate::error::{domain, Error, Result};
use crate::io::{axis_names, read_table, write_table, Table};
use crate::kernel::Radius;
use crate::markov::{transition_grid, MarkovSeries};
use crate::modal::modal_curve;
use crate::modes::{find_modes_density, find_modes_mixing, AscentConfig, StartSet};
use crate::regression::{regress_at, regress_ci_with_sigma2, sigma2_hat, DEFAULT_SIGMA2_CAP};
use crate::sample::{grid_points, GridAxis, SampleMatrix};
use crate::simulate::{generate, ExampleId, ExampleSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "fourier-smooth", version, about = "Sinc-kernel density, regression, deconvolution and mode estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Density estimate with pointwise intervals on a grid.
    Density,
    /// Gradient and Hessian of the density estimate on a grid.
    Derivs,
    /// Pointwise confidence intervals for the density.
    Ci,
    /// Bootstrap uniform confidence band for the density on a grid.
    Band,
    /// Regression estimate with pointwise intervals (input needs a `y` column).
    Regress,
    /// Deconvolution estimate of the mixing density and its gradient.
    Deconv,
    /// Modes of the density, or of the mixing density when --noise is given.
    Modes,
    /// Conditional modes of y given x on a grid of x.
    Modal,
    /// Transition density p(y | x) of a time-ordered series.
    Transition,
    /// Generate data for one of the worked examples.
    Simulate,
    /// Least-squares cross-validation scores over candidate radii.
    Lscv,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Density => "density",
            Command::Derivs => "derivs",
            Command::Ci => "ci",
            Command::Band => "band",
            Command::Regress => "regress",
            Command::Deconv => "deconv",
            Command::Modes => "modes",
            Command::Modal => "modal",
            Command::Transition => "transition",
            Command::Simulate => "simulate",
            Command::Lscv => "lscv",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Input CSV; `-` or omitted reads stdin.
    #[arg(long, short, global = true)]
    pub input: Option<PathBuf>,
    /// Output CSV; `-` or omitted writes stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Explicit radius R.
    #[arg(long, global = true, conflicts_with_all = ["rule", "lscv"])]
    pub radius: Option<f64>,
    /// Radius rule: `supersmooth:ALPHA:C1` or `ordinary:BETA`.
    #[arg(long, global = true, conflicts_with = "lscv")]
    pub rule: Option<String>,
    /// Candidate radii `min:max:count` for cross-validated selection.
    #[arg(long, global = true)]
    pub lscv: Option<String>,
    /// Grid axis `min:max:count`; repeat once per dimension (or give one for all).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub grid: Vec<String>,
    /// Evaluation point, comma-separated; repeatable.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub x: Vec<String>,
    /// Interval level is 1 - tau.
    #[arg(long, global = true, default_value_t = 0.1)]
    pub tau: f64,
    /// Bootstrap replicates.
    #[arg(long = "B", global = true, default_value_t = 200)]
    pub replicates: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 picks automatically.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Noise model: `gaussian:H`, `laplace:B` or `none`.
    #[arg(long, global = true)]
    pub noise: Option<String>,
    /// Monte Carlo frequency draws per observation (one-dimensional Gaussian deconvolution).
    #[arg(long, global = true)]
    pub mc: Option<usize>,
    /// Example number 1..7 for `simulate`.
    #[arg(long, global = true)]
    pub example: Option<String>,
    /// Sample size for `simulate`.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Example parameter override `key=value`; repeatable.
    #[arg(long, global = true)]
    pub set: Vec<String>,
}

/// Parses `argv`, runs the command and returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let shown: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, &shown) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => 2,
                _ => 1,
            }
        }
    }
}

fn execute(cli: &Cli, argv: &[String]) -> Result<()> {
    let c = &cli.common;
    if c.threads > 0 {
        // Ignore the error raised when a pool already exists (repeated in-process runs).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(c.threads).build_global();
    }
    let start = Instant::now();
    let outcome = dispatch(cli.command, c)?;
    let mut summary = Map::new();
    summary.insert("schema_version".into(), json!(SCHEMA_VERSION));
    summary.insert("command".into(), json!(cli.command.name()));
    summary.insert("radius".into(), outcome.radius.map_or(Value::Null, |r| json!(r)));
    summary.insert("n".into(), json!(outcome.n));
    summary.insert("d".into(), json!(outcome.d));
    summary.insert("seed".into(), json!(c.seed));
    summary.insert("tau".into(), json!(c.tau));
    summary.insert("args".into(), json!(argv));
    for (k, v) in outcome.extra {
        summary.insert(k, v);
    }
    summary.insert("elapsed_ms".into(), json!(start.elapsed().as_millis() as u64));

    let to_stdout = c.output.as_ref().is_none_or(|p| p.as_os_str() == "-");
    if to_stdout {
        let stdout = io::stdout();
        write_table(BufWriter::new(stdout.lock()), &outcome.table)?;
        eprintln!("{}", Value::Object(summary));
    } else {
        let path = c.output.as_ref().unwrap();
        let f = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        write_table(BufWriter::new(f), &outcome.table)?;
        println!("{}", Value::Object(summary));
    }
    io::stdout().flush().map_err(|e| Error::Io(e.to_string()))
}

struct Outcome {
    table: Table,
    radius: Option<f64>,
    n: usize,
    d: usize,
    extra: Vec<(String, Value)>,
}

fn read_input(c: &Common) -> Result<Table> {
    match &c.input {
        Some(p) if p.as_os_str() != "-" => {
            let f = File::open(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            read_table(BufReader::new(f))
        }
        _ => {
            let mut buf = Vec::new();
            io::stdin().read_to_end(&mut buf).map_err(|e| Error::Io(format!("stdin: {e}")))?;
            read_table(buf.as_slice())
        }
    }
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Domain(format!("{what}: cannot parse '{s}' as a number")))
}

fn parse_axis(s: &str) -> Result<GridAxis> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return domain(format!("grid '{s}': expected min:max:count"));
    }
    let count = parts[2].trim().parse().map_err(|_| Error::Domain(format!("grid '{s}': bad count")))?;
    GridAxis::new(parse_f64(parts[0], "grid")?, parse_f64(parts[1], "grid")?, count)
}

pub fn parse_rule(s: &str) -> Result<Smoothness> {
    let parts: Vec<&str> = s.split(':').collect();
    let kind = parts[0].trim().to_ascii_lowercase();
    let s = match (kind.as_str(), parts.len()) {
        ("supersmooth" | "super", 3) => {
            Smoothness::Supersmooth { alpha: parse_f64(parts[1], "rule")?, c1: parse_f64(parts[2], "rule")? }
        }
        ("ordinary" | "ordinarysmooth", 2) => Smoothness::OrdinarySmooth { beta: parse_f64(parts[1], "rule")? },
        _ => return domain(format!("rule '{s}': expected supersmooth:ALPHA:C1 or ordinary:BETA")),
    };
    s.validate()?;
    Ok(s)
}

pub fn parse_noise(s: &str) -> Result<NoiseModel> {
    let parts: Vec<&str> = s.split(':').collect();
    match (parts[0].trim().to_ascii_lowercase().as_str(), parts.len()) {
        ("gaussian" | "normal", 2) => Ok(NoiseModel::GaussianIsotropic { h: parse_f64(parts[1], "noise")? }),
        ("laplace", 2) => Ok(NoiseModel::LaplaceProduct { b: parse_f64(parts[1], "noise")? }),
        ("none", 1) => Ok(NoiseModel::point_mass()),
        _ => domain(format!("noise '{s}': expected gaussian:H, laplace:B or none")),
    }
}

fn candidate_radii(s: &str) -> Result<Vec<Radius>> {
    parse_axis(s)?.points().into_iter().map(Radius::new).collect()
}

/// Radius from --radius, --rule or --lscv. With none given, the
/// supersmooth rule with alpha = 2, c1 = 1/2 (a standard normal's class) is used.
fn resolve_radius(c: &Common, sample: &SampleMatrix, extra: &mut Vec<(String, Value)>) -> Result<EstimatorConfig> {
    if let Some(r) = c.radius {
        extra.push(("radius_source".into(), json!("explicit")));
        return EstimatorConfig::with_radius(r);
    }
    if let Some(spec) = &c.lscv {
        let cands = candidate_radii(spec)?;
        let r = select_radius_lscv(sample, &cands)?;
        extra.push(("radius_source".into(), json!(format!("lscv:{spec}"))));
        return Ok(EstimatorConfig::new(r));
    }
    let (rule, label) = match &c.rule {
        Some(s) => (parse_rule(s)?, s.clone()),
        None => (Smoothness::Supersmooth { alpha: 2.0, c1: 0.5 }, "supersmooth:2:0.5 (default)".to_string()),
    };
    let r = select_radius(rule, sample.d(), sample.n())?;
    extra.push(("radius_source".into(), json!(format!("rule:{label}"))));
    let mut cfg = EstimatorConfig::new(r);
    cfg.smoothness = Some(rule);
    Ok(cfg)
}

fn grid_axes(c: &Common, d: usize) -> Result<Option<Vec<GridAxis>>> {
    if c.grid.is_empty() {
        return Ok(None);
    }
    let axes: Vec<GridAxis> = c.grid.iter().map(|s| parse_axis(s)).collect::<Result<_>>()?;
    match axes.len() {
        1 => Ok(Some(vec![axes[0]; d])),
        k if k == d => Ok(Some(axes)),
        k => domain(format!("got {k} grid axes for d = {d}")),
    }
}

fn explicit_points(c: &Common, d: usize) -> Result<Vec<Vec<f64>>> {
    c.x.iter()
        .map(|s| {
            let p: Vec<f64> = s.split(',').map(|v| parse_f64(v, "--x")).collect::<Result<_>>()?;
            if p.len() != d {
                return domain(format!("--x '{s}' has {} coordinates, expected {d}", p.len()));
            }
            Ok(p)
        })
        .collect()
}

/// Evaluation points from --x (preferred) or --grid.
fn eval_points(c: &Common, d: usize) -> Result<Vec<Vec<f64>>> {
    let pts = explicit_points(c, d)?;
    if !pts.is_empty() {
        return Ok(pts);
    }
    match grid_axes(c, d)? {
        Some(axes) => Ok(grid_points(&axes)),
        None => domain("give evaluation points with --grid min:max:count or --x"),
    }
}

fn with_points(d: usize, rest: &[&str]) -> Table {
    let mut h = axis_names("point", d);
    h.extend(rest.iter().map(|s| s.to_string()));
    Table::new(h)
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn dispatch(cmd: Command, c: &Common) -> Result<Outcome> {
    let mut extra = Vec::new();
    if cmd == Command::Simulate {
        let id: ExampleId = c.example.as_deref().ok_or_else(|| Error::Domain("simulate needs --example".into()))?.parse()?;
        let mut spec = ExampleSpec::new(id, c.seed);
        if let Some(n) = c.n {
            spec = spec.with_n(n);
        }
        for kv in &c.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Domain(format!("--set '{kv}': expected key=value")))?;
            spec = spec.set(k.trim(), parse_f64(v, "--set")?);
        }
        let (header, rows) = generate(&spec)?.header_and_rows();
        let d = header.iter().filter(|h| h.starts_with('x')).count();
        extra.push(("example".into(), json!(id.number())));
        extra.push(("overrides".into(), json!(spec.overrides)));
        let n = rows.len();
        return Ok(Outcome { table: Table { header, rows }, radius: None, n, d, extra });
    }

    let input = read_input(c)?;
    match cmd {
        Command::Density | Command::Ci => {
            let s = input.to_sample()?;
            let cfg = resolve_radius(c, &s, &mut extra)?;
            let pts = eval_points(c, s.d())?;
            let mut t = if cmd == Command::Density {
                with_points(s.d(), &["estimate", "clipped", "lower", "upper"])
            } else {
                with_points(s.d(), &["estimate", "lower", "upper", "level"])
            };
            for p in &pts {
                let ci = pointwise_ci(&s, p, &cfg, c.tau)?;
                let mut row = p.clone();
                if cmd == Command::Density {
                    row.extend([ci.estimate, ci.estimate.max(0.0), ci.lower, ci.upper]);
                } else {
                    row.extend([ci.estimate, ci.lower, ci.upper, ci.level]);
                }
                t.push(row);
            }
            Ok(Outcome { table: t, radius: Some(cfg.r()), n: s.n(), d: s.d(), extra })
        }
        Command::Derivs => {
            let s = input.to_sample()?;
            let d = s.d();
            let cfg = resolve_radius(c, &s, &mut extra)?;
            let pts = eval_points(c, d)?;
            let mut cols: Vec<String> = (1..=d).map(|j| format!("d{j}")).collect();
            for a in 1..=d {
                for b in a..=d {
                    cols.push(format!("d{a}{b}"));
                }
            }
            let mut t = Table::new(axis_names("point", d).into_iter().chain(cols).collect());
            for p in &pts {
                let g = density_derivative_at(&s, p, 1, &cfg)?;
                let h = density_derivative_at(&s, p, 2, &cfg)?;
                let mut row = p.clone();
                row.extend_from_slice(g.as_gradient());
                for a in 0..d {
                    for b in a..d {
                        row.push(h.get(&[a, b]));
                    }
                }
                t.push(row);
            }
            Ok(Outcome { table: t, radius: Some(cfg.r()), n: s.n(), d, extra })
        }
        Command::Band => {
            let s = input.to_sample()?;
            let cfg = resolve_radius(c, &s, &mut extra)?;
            let pts = eval_points(c, s.d())?;
            let plan = BootstrapPlan::new(c.replicates, c.seed, pts)?;
            let band = bootstrap_band(&s, &cfg, &plan, c.tau)?;
            let mut t = with_points(s.d(), &["estimate", "lower", "upper"]);
            for (j, p) in band.grid.iter().enumerate() {
                let mut row = p.clone();
                row.extend([band.center[j], band.lower(j), band.upper(j)]);
                t.push(row);
            }
            extra.push(("critical_value".into(), json!(band.critical_value)));
            extra.push(("replicates".into(), json!(band.replicates)));
            Ok(Outcome { table: t, radius: Some(cfg.r()), n: s.n(), d: s.d(), extra })
        }
        Command::Regress => {
            let data = input.to_labeled()?;
            let cfg = resolve_radius(c, &data.x, &mut extra)?;
            let pts = eval_points(c, data.d())?;
            let s2 = if data.n() >= 3 { Some(sigma2_hat(&data, &cfg, DEFAULT_SIGMA2_CAP)?) } else { None };
            let mut t = with_points(data.d(), &["estimate", "denominator", "reliable", "lower", "upper"]);
            for p in &pts {
                let ev = regress_at(&data, p, &cfg)?;
                let (lo, hi) = match s2.map(|v| regress_ci_with_sigma2(&data, p, &cfg, c.tau, v)) {
                    Some(Ok(ci)) => (ci.lower, ci.upper),
                    Some(Err(Error::InfiniteWidth(_))) => (f64::NEG_INFINITY, f64::INFINITY),
                    Some(Err(e)) => return Err(e),
                    None => (f64::NAN, f64::NAN),
                };
                let mut row = p.clone();
                row.extend([ev.m_hat, ev.denominator, flag(ev.reliable), lo, hi]);
                t.push(row);
            }
            extra.push(("sigma2".into(), s2.map_or(Value::Null, |v| json!(v))));
            Ok(Outcome { table: t, radius: Some(cfg.r()), n: data.n(), d: data.d(), extra })
        }
        Command::Deconv => {
            let s = input.to_sample()?;
            let d = s.d();
            let noise_spec = c.noise.as_deref().ok_or_else(|| Error::Domain("deconv needs --noise".into()))?;
            let noise = parse_noise(noise_spec)?;
            let cfg = resolve_radius(c, &s, &mut extra)?;
            let pts = eval_points(c, d)?;
            extra.push(("noise".into(), json!(noise_spec)));
            let mut cols = vec!["estimate".to_string()];
            cols.extend((1..=d).map(|j| format!("d{j}")));
            let mut t = Table::new(axis_names("point", d).into_iter().chain(cols).collect());
            if let Some(m) = c.mc {
                let NoiseModel::GaussianIsotropic { h } = noise else {
                    return domain("--mc requires gaussian noise");
                };
                let mc = McDeconvolver::new(&s, h, cfg.r(), m, c.seed)?;
                t.header.push("std_error".into());
                for p in &pts {
                    let v = mc.value(p[0]);
                    t.push(vec![p[0], v.raw_value, mc.derivative(p[0]).raw_value, v.mc_std_error.unwrap_or(0.0)]);
                }
                extra.push(("mc_draws".into(), json!(m)));
            } else {
                let reach = pts
                    .iter()
                    .flat_map(|p| s.rows().map(move |row| row.iter().zip(p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)))
                    .fold(0.0, f64::max);
                let dc = Deconvolver::new(&s, &noise, &cfg, &DeconvOptions::default(), reach)?;
                for p in &pts {
                    let (v, g, _) = dc.value_grad_hess(p)?;
                    let mut row = p.clone();
                    row.push(v);
                    row.extend(g);
                    t.push(row);
                }
                extra.push(("quadrature_nodes".into(), json!(dc.node_count())));
            }
            Ok(Outcome { table: t, radius: Some(cfg.r()), n: s.n(), d, extra })
        }
        Command::Modes => {
            let s = input.to_sample()?;
            let d = s.d();
            let cfg = resolve_radius(c, &s, &mut extra)?;
            let starts = match grid_axes(c, d)? {
                Some(axes) => StartSet::Grid(axes),
                None => {
                    let pts = explicit_points(c, d)?;
                    if pts.is_empty() {
                        StartSet::AllDataPoints
                    } else {
                        StartSet::Explicit(pts)
                    }
                }
            };
            let asc = AscentConfig::with_starts(starts);
            let set = match &c.noise {
                Some(spec) => {
                    extra.push(("noise".into(), json!(spec)));
                    find_modes_mixing(&s, &parse_noise(spec)?, &cfg, &asc)?
                }
                None => find_modes_density(&s, &cfg, &asc)?,
            };
            let mut t = Table::new(
                axis_names("mode", d)
                    .into_iter()
                    .chain(["estimate", "gradient_norm", "hessian_top_eig"].map(String::from))
                    .collect(),
            );
            for i in 0..set.k {
                let mut row = set.modes[i].clone();
                row.extend([set.values[i], set.gradient_norms[i], set.hessian_top_eigs[i]]);
                t.push(row);
            }
            extra.push(("k".into(), json!(set.k)));
            if let Some(msg) = set.diagnostic {
                extra.push(("diagnostic".into(), json!(msg)));
            }
            Ok(Outcome { table: t, radius: Some(cfg.r()), n: s.n(), d, extra })
        }
        Command::Modal => {
            let data = input.to_labeled()?;
            let d = data.d();
            let cfg = resolve_radius(c, &data.x, &mut extra)?;
            let pts = eval_points(c, d)?;
            let curve = modal_curve(&data, &pts, &cfg, &AscentConfig::default(), None)?;
            let mut t = with_points(d, &["y_mode", "estimate", "dy", "dyy"]);
            for set in &curve.mode_sets {
                for (k, y) in set.modes_y.iter().enumerate() {
                    let mut row = set.x.clone();
                    row.extend([*y, set.values[k], set.certificates[k].0, set.certificates[k].1]);
                    t.push(row);
                }
            }
            Ok(Outcome { table: t, radius: Some(cfg.r()), n: data.n(), d, extra })
        }
        Command::Transition => {
            let s = input.to_sample()?;
            let d = s.d();
            let series = MarkovSeries::new(s)?;
            let cfg = resolve_radius(c, series.data(), &mut extra)?;
            let xs = explicit_points(c, d)?;
            let [x] = xs.as_slice() else {
                return domain("transition needs exactly one conditioning point --x");
            };
            let ys = match grid_axes(c, d)? {
                Some(axes) => grid_points(&axes),
                None => {
                    let axes: Vec<GridAxis> = (0..d)
                        .map(|j| {
                            let col = series.data().column(j);
                            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                            GridAxis::new(lo, hi.max(lo + 1e-12), 101)
                        })
                        .collect::<Result<_>>()?;
                    grid_points(&axes)
                }
            };
            let evals = transition_grid(&series, x, &ys, &cfg)?;
            let mut t = Table::new(
                axis_names("y", d).into_iter().chain(["estimate", "reliable"].map(String::from)).collect(),
            );
            for e in &evals {
                let mut row = e.y.clone();
                row.extend([e.value, flag(e.reliable)]);
                t.push(row);
            }
            extra.push(("x".into(), json!(x)));
            Ok(Outcome { table: t, radius: Some(cfg.r()), n: series.len(), d, extra })
        }
        Command::Lscv => {
            let s = input.to_sample()?;
            let spec = c.lscv.as_deref().ok_or_else(|| Error::Domain("lscv needs --lscv min:max:count".into()))?;
            let cands = candidate_radii(spec)?;
            let mut t = Table::new(vec!["radius".into(), "score".into()]);
            for r in &cands {
                t.push(vec![r.value(), lscv_score(&s, *r)?]);
            }
            let best = select_radius_lscv(&s, &cands)?;
            Ok(Outcome { table: t, radius: Some(best.value()), n: s.n(), d: s.d(), extra })
        }
        Command::Simulate => unreachable!(),
    }
}
