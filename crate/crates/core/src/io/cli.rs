//! Command-line front end.
//!
//! Flags may also come from a config file (`--config <path>`): flat
//! `key = value` lines, where keys are flag names without the leading dashes.
//! Keys before the first `[section]` header apply to every subcommand; keys
//! under `[evolve]`, `[sweep]`, ... only to that subcommand. Flags given on
//! the command line win over the file.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::error::Error;
use crate::integrator::{
    default_half_width, evolve, SimConfig, DEFAULT_DT, DEFAULT_HORIZON_GAMMA_T,
};
use crate::io::csv::{emit_csv, CsvTable};
use crate::io::svg::{emit_svg, heatmap_svg, sweep_svg};
use crate::lattice::{
    make_params, winding_number, InitialStateSpec, LatticeState, ModelKind, ModelParams, Sublattice,
};
use crate::observables::{incoherent_reference, mean_displacement, norm_rate_residual};
use crate::sweeps::{
    default_delta_g_grid, grid, run_sweep, Heatmap, SweepSpec, DEFAULT_U_VALUES, ENGINE_VERSION,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Diverged(Error),
    #[error(transparent)]
    Io(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Diverged(_) => EXIT_DIVERGED,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Diverged { .. } => CliError::Diverged(e),
            Error::Io { .. } => CliError::Io(e),
            other => CliError::Usage(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "nlrl",
    version,
    about = "Quantum transport in linear and nonlinear lossy dimerized lattices",
    arg_required_else_help = true,
    args_override_self = true
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Integrate one run and write the time-resolved trajectory.
    #[command(args_override_self = true)]
    Evolve(RunArgs),
    /// Mean displacement over a grid of delta_g for each U.
    #[command(args_override_self = true)]
    Sweep(RunArgs),
    /// Integrate one run and write the effective coupling contrast Z_m(t).
    #[command(args_override_self = true)]
    Contrast(RunArgs),
    /// Check the norm-evolution law on random states and along one run.
    #[command(args_override_self = true)]
    CheckNorm(RunArgs),
    /// Winding number and incoherent reference value per delta_g.
    #[command(args_override_self = true)]
    Winding(RunArgs),
}

#[derive(Debug, Clone, Args)]
struct RunArgs {
    /// linear, a, b, c, d or e
    #[arg(long)]
    model: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    delta_g: Option<f64>,
    /// start:stop:step, endpoints included
    #[arg(long, allow_hyphen_values = true)]
    delta_g_grid: Option<String>,
    /// Comma-separated nonlinear coefficients
    #[arg(long)]
    u: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    gamma_a: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Horizon as gamma_a * T [default: 50]
    #[arg(long)]
    horizon_gamma_t: Option<f64>,
    /// Horizon T in absolute time units (needed when gamma_a = 0)
    #[arg(long)]
    horizon: Option<f64>,
    /// Lattice half-width N [default: 60 for gamma_a >= 1, else 150]
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    negate_linear: bool,
    /// Initial site as <m>:<a|b> [default: 0:b]
    #[arg(long, allow_hyphen_values = true)]
    initial: Option<String>,
    /// Record every k-th step
    #[arg(long)]
    stride: Option<usize>,
    /// Output path prefix
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of csv,json,svg [default: csv,json,svg]
    #[arg(long)]
    format: Option<String>,
    /// Number of random states for check-norm [default: 100]
    #[arg(long)]
    samples: Option<usize>,
    /// RNG seed for check-norm [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

impl Formats {
    fn parse(text: &str) -> Result<Self, CliError> {
        let mut f = Formats {
            csv: false,
            json: false,
            svg: false,
        };
        for token in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match token {
                "csv" => f.csv = true,
                "json" => f.json = true,
                "svg" => f.svg = true,
                other => return Err(CliError::Usage(format!("unknown output format '{other}'"))),
            }
        }
        if !(f.csv || f.json || f.svg) {
            return Err(CliError::Usage("--format selects no output format".into()));
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Evolve {
        params: ModelParams,
        config: SimConfig,
    },
    Sweep(SweepSpec),
    Contrast {
        params: ModelParams,
        config: SimConfig,
    },
    CheckNorm {
        params: ModelParams,
        config: SimConfig,
        samples: usize,
        seed: u64,
    },
    Winding {
        delta_g: Vec<f64>,
        negate_linear: bool,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Evolve { .. } => "evolve",
            Command::Sweep(_) => "sweep",
            Command::Contrast { .. } => "contrast",
            Command::CheckNorm { .. } => "check-norm",
            Command::Winding { .. } => "winding",
        }
    }
}

/// A fully resolved invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: Command,
    /// Output prefix; files are `<out>.csv`, `<out>.json`, `<out>.svg` and
    /// the sidecar `<out>.meta.json`.
    pub out: PathBuf,
    pub formats: Formats,
}

impl RunManifest {
    pub fn path_for(&self, extension: &str) -> PathBuf {
        let mut name = self.out.as_os_str().to_owned();
        name.push(".");
        name.push(extension);
        PathBuf::from(name)
    }
}

const SUBCOMMANDS: [&str; 5] = ["evolve", "sweep", "contrast", "check-norm", "winding"];

/// Reads the `[section]`-structured `key = value` file and returns the
/// flags that apply to `subcommand`, as `--key=value` tokens.
pub fn config_tokens(text: &str, subcommand: &str) -> Result<Vec<String>, CliError> {
    let mut tokens = Vec::new();
    let mut section: Option<String> = None;
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            if !SUBCOMMANDS.contains(&name) {
                return Err(CliError::Usage(format!(
                    "config line {}: unknown section '[{name}]'",
                    k + 1
                )));
            }
            section = Some(name.to_string());
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "config line {}: expected key = value, got '{line}'",
                k + 1
            )));
        };
        if section.as_deref().is_some_and(|s| s != subcommand) {
            continue;
        }
        let (key, value) = (key.trim(), value.trim());
        if key == "config" {
            return Err(CliError::Usage(
                "config files cannot include other config files".into(),
            ));
        }
        if key == "negate-linear" {
            match value {
                "true" => tokens.push("--negate-linear".to_string()),
                "false" => {}
                _ => {
                    return Err(CliError::Usage(format!(
                        "config line {}: negate-linear must be true or false",
                        k + 1
                    )))
                }
            }
            continue;
        }
        tokens.push(format!("--{key}={value}"));
    }
    Ok(tokens)
}

fn find_config(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad {what} value '{t}'")))
        })
        .collect()
}

fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Usage(format!(
            "--delta-g-grid expects start:stop:step, got '{text}'"
        )));
    }
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("bad --delta-g-grid component '{s}'")))
    };
    Ok(grid(num(parts[0])?, num(parts[1])?, num(parts[2])?)?)
}

fn parse_initial(text: &str) -> Result<InitialStateSpec, CliError> {
    let bad = || CliError::Usage(format!("--initial expects <m>:<a|b>, got '{text}'"));
    let (m, site) = text.rsplit_once(':').ok_or_else(bad)?;
    let m = m.trim().parse::<i64>().map_err(|_| bad())?;
    let sublattice = site.trim().parse::<Sublattice>().map_err(|_| bad())?;
    Ok(InitialStateSpec::SingleSite { m, sublattice })
}

/// Parses `argv` (program name first) into a manifest.
pub fn parse_cli(argv: &[String]) -> Result<RunManifest, CliError> {
    if argv.len() <= 1 {
        let help = <Cli as clap::CommandFactory>::command().render_help();
        return Err(CliError::Usage(format!(
            "missing subcommand (one of: {})\n\n{help}",
            SUBCOMMANDS.join(", ")
        )));
    }

    let mut args: Vec<String> = argv.to_vec();
    if let Some(path) = find_config(&argv[1..]) {
        let text = fs::read_to_string(&path)
            .map_err(|e| CliError::Usage(format!("cannot read config '{path}': {e}")))?;
        if let Some(pos) = argv
            .iter()
            .skip(1)
            .position(|a| SUBCOMMANDS.contains(&a.as_str()))
        {
            let sub_index = pos + 1;
            let tokens = config_tokens(&text, &argv[sub_index])?;
            args = argv[..=sub_index]
                .iter()
                .cloned()
                .chain(tokens)
                .chain(argv[sub_index + 1..].iter().cloned())
                .collect();
        }
    }

    let cli = Cli::try_parse_from(&args).map_err(|e| CliError::Usage(e.render().to_string()))?;
    let (name, run) = match cli.command {
        Sub::Evolve(a) => ("evolve", a),
        Sub::Sweep(a) => ("sweep", a),
        Sub::Contrast(a) => ("contrast", a),
        Sub::CheckNorm(a) => ("check-norm", a),
        Sub::Winding(a) => ("winding", a),
    };
    resolve(name, run)
}

fn resolve(name: &str, a: RunArgs) -> Result<RunManifest, CliError> {
    let model: ModelKind = match &a.model {
        Some(m) => m.parse()?,
        None => ModelKind::Linear,
    };
    if a.delta_g.is_some() && a.delta_g_grid.is_some() {
        return Err(CliError::Usage(
            "conflicting settings: --delta-g and --delta-g-grid".into(),
        ));
    }
    let u_given = match &a.u {
        Some(text) => Some(parse_list(text, "--u")?),
        None => None,
    };
    if let Some(us) = &u_given {
        if us.is_empty() {
            return Err(CliError::Usage("--u lists no values".into()));
        }
        if model == ModelKind::Linear && us.iter().any(|&u| u != 0.0) {
            return Err(CliError::Usage(format!(
                "conflicting settings: --model linear with nonzero --u {}",
                a.u.as_deref().unwrap_or("")
            )));
        }
    }

    let gamma_a = a.gamma_a.unwrap_or(2.0);
    let horizon = match (a.horizon, a.horizon_gamma_t) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "conflicting settings: --horizon and --horizon-gamma-t".into(),
            ))
        }
        (Some(t), None) => t,
        (None, gt) => {
            if !(gamma_a > 0.0) {
                return Err(CliError::Usage(
                    "gamma_a = 0 needs an absolute --horizon".into(),
                ));
            }
            gt.unwrap_or(DEFAULT_HORIZON_GAMMA_T) / gamma_a
        }
    };
    let initial = match &a.initial {
        Some(text) => parse_initial(text)?,
        None => InitialStateSpec::default(),
    };
    let mut config = SimConfig::new(
        a.n.unwrap_or_else(|| default_half_width(gamma_a)),
        a.dt.unwrap_or(DEFAULT_DT),
        horizon,
        initial,
    )?;
    if let Some(stride) = a.stride {
        config = config.with_sample_stride(stride)?;
    }

    let out = a
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("nlrl_{}", name.replace('-', "_"))));
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        if !parent.is_dir() {
            return Err(CliError::Io(Error::Io {
                path: parent.to_path_buf(),
                source: std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    "output directory does not exist",
                ),
            }));
        }
    }
    let formats = Formats::parse(a.format.as_deref().unwrap_or("csv,json,svg"))?;

    let single_point = |what: &str| -> Result<ModelParams, CliError> {
        if a.delta_g_grid.is_some() {
            return Err(CliError::Usage(format!(
                "{what} takes --delta-g, not --delta-g-grid"
            )));
        }
        let u = match &u_given {
            None => 0.0,
            Some(us) if us.len() == 1 => us[0],
            Some(_) => {
                return Err(CliError::Usage(format!("{what} takes a single --u value")));
            }
        };
        let params = make_params(model, a.delta_g.unwrap_or(0.0), gamma_a, u, a.negate_linear)?;
        config.validate(&params)?;
        Ok(params)
    };

    let command = match name {
        "evolve" => Command::Evolve {
            params: single_point("evolve")?,
            config: config.clone(),
        },
        "contrast" => Command::Contrast {
            params: single_point("contrast")?,
            config: config.clone(),
        },
        "check-norm" => Command::CheckNorm {
            params: single_point("check-norm")?,
            config: config.clone(),
            samples: a.samples.unwrap_or(100),
            seed: a.seed.unwrap_or(0),
        },
        "sweep" => {
            let delta_g_grid = match (&a.delta_g_grid, a.delta_g) {
                (Some(text), _) => parse_grid(text)?,
                (None, Some(dg)) => vec![dg],
                (None, None) => default_delta_g_grid(),
            };
            let u_values = u_given.clone().unwrap_or_else(|| {
                if model == ModelKind::Linear {
                    vec![0.0]
                } else {
                    DEFAULT_U_VALUES.to_vec()
                }
            });
            let spec = SweepSpec {
                model,
                delta_g_grid,
                u_values,
                gamma_a,
                sim: config.clone(),
                negate_linear: a.negate_linear,
            };
            spec.validate()?;
            Command::Sweep(spec)
        }
        "winding" => {
            let delta_g = match (&a.delta_g_grid, a.delta_g) {
                (Some(text), _) => parse_grid(text)?,
                (None, Some(dg)) => vec![dg],
                (None, None) => default_delta_g_grid(),
            };
            for &dg in &delta_g {
                make_params(ModelKind::Linear, dg, 0.0, 0.0, a.negate_linear)?;
            }
            Command::Winding {
                delta_g,
                negate_linear: a.negate_linear,
            }
        }
        other => return Err(CliError::Usage(format!("unknown subcommand '{other}'"))),
    };
    Ok(RunManifest {
        command,
        out,
        formats,
    })
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("plain data serializes");
    fs::write(path, text + "\n").map_err(|e| CliError::Io(Error::io(path, e)))
}

fn emit_table<T: CsvTable + ?Sized>(manifest: &RunManifest, table: &T) -> Result<(), CliError> {
    if manifest.formats.csv {
        emit_csv(table, &manifest.path_for("csv"))?;
    }
    Ok(())
}

fn sim_meta(config: &SimConfig) -> serde_json::Value {
    json!({
        "dt": config.effective_dt(),
        "T": config.horizon,
        "N": config.half_width,
        "steps": config.step_count(),
        "sample_stride": config.sample_stride,
    })
}

/// Runs a manifest, writing its outputs. Returns a short human-readable
/// summary.
pub fn run(manifest: &RunManifest) -> Result<String, CliError> {
    let started = Instant::now();
    let (summary, sim) = match &manifest.command {
        Command::Evolve { params, config } | Command::Contrast { params, config } => {
            let traj = evolve(params, config)?;
            let md = mean_displacement(&traj);
            let heat = Heatmap::from_trajectory(&traj);
            let is_evolve = matches!(manifest.command, Command::Evolve { .. });
            if is_evolve {
                emit_table(manifest, &traj)?;
            } else {
                emit_table(manifest, &heat.contrast)?;
            }
            if manifest.formats.json {
                let data = if is_evolve {
                    json!({
                        "params": params,
                        "mean_displacement": md.value,
                        "residual_norm": md.residual_norm,
                        "truncation_unsafe": md.truncation_unsafe,
                        "displacement": heat.displacement,
                    })
                } else {
                    json!({
                        "params": params,
                        "contrast": heat.contrast,
                    })
                };
                write_json(&data, &manifest.path_for("json"))?;
            }
            if manifest.formats.svg {
                emit_svg(&heatmap_svg(&heat), &manifest.path_for("svg"))?;
            }
            let mut text = format!(
                "model {} delta_g={} U={} gamma_a={}: <Delta m> = {} (residual norm {:.3e})",
                params.kind(),
                params.delta_g(),
                params.u(),
                params.gamma_a(),
                md.value,
                md.residual_norm
            );
            if md.truncation_unsafe {
                text.push_str("\nwarning: excitation reached the lattice edge; increase --n");
            }
            (text, Some(sim_meta(config)))
        }
        Command::Sweep(spec) => {
            let result = run_sweep(spec)?;
            emit_table(manifest, &result)?;
            if manifest.formats.json {
                write_json(
                    &json!({ "spec": result.spec, "curves": result.curves }),
                    &manifest.path_for("json"),
                )?;
            }
            if manifest.formats.svg {
                emit_svg(&sweep_svg(&result), &manifest.path_for("svg"))?;
            }
            let points: Vec<_> = result.curves.iter().flat_map(|c| &c.points).collect();
            let holes = points.iter().filter(|p| p.error.is_some()).count();
            let unsafe_points = points.iter().filter(|p| p.truncation_unsafe).count();
            let mut text = format!(
                "sweep model {}: {} points over {} U values",
                spec.model,
                points.len(),
                result.curves.len()
            );
            if holes > 0 {
                text.push_str(&format!("\nwarning: {holes} points diverged"));
            }
            if unsafe_points > 0 {
                text.push_str(&format!(
                    "\nwarning: {unsafe_points} points reached the lattice edge"
                ));
            }
            (text, Some(sim_meta(&spec.sim)))
        }
        Command::CheckNorm {
            params,
            config,
            samples,
            seed,
        } => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
            let mut residuals = Vec::with_capacity(*samples);
            for _ in 0..*samples {
                let mut s = LatticeState::zeros(config.half_width);
                for z in s.a.iter_mut().chain(s.b.iter_mut()) {
                    *z = num_complex::Complex64::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    );
                }
                let scale = s.norm().sqrt().recip();
                s.a.iter_mut()
                    .chain(s.b.iter_mut())
                    .for_each(|z| *z *= scale);
                residuals.push(norm_rate_residual(params, &s)?);
            }
            let traj = evolve(params, config)?;
            let fin = &traj.final_state;
            let conservation = (fin.norm() + fin.total_decay() - 1.0).abs();
            let max_residual = residuals.iter().copied().fold(0.0, f64::max);
            let table = ResidualTable(&residuals);
            emit_table(manifest, &table)?;
            if manifest.formats.json {
                write_json(
                    &json!({
                        "params": params,
                        "samples": samples,
                        "seed": seed,
                        "max_norm_rate_residual": max_residual,
                        "conservation_error": conservation,
                    }),
                    &manifest.path_for("json"),
                )?;
            }
            (
                format!(
                    "model {}: max norm-rate residual {:.3e} over {} states; |norm + decay - 1| = {:.3e} at T",
                    params.kind(),
                    max_residual,
                    samples,
                    conservation
                ),
                Some(sim_meta(config)),
            )
        }
        Command::Winding {
            delta_g,
            negate_linear,
        } => {
            let mut rows = Vec::with_capacity(delta_g.len());
            for &dg in delta_g {
                let p = make_params(ModelKind::Linear, dg, 0.0, 0.0, *negate_linear)?;
                let winding = winding_number(p.mu(), p.nu()).ok();
                rows.push(WindingRow {
                    delta_g: dg,
                    mu: p.mu(),
                    nu: p.nu(),
                    winding_number: winding,
                    incoherent_reference: incoherent_reference(p.mu(), p.nu())?,
                });
            }
            emit_table(manifest, &WindingTable(&rows))?;
            if manifest.formats.json {
                write_json(&rows, &manifest.path_for("json"))?;
            }
            let text = rows
                .iter()
                .map(|r| {
                    format!(
                        "delta_g={} winding={} incoherent={}",
                        r.delta_g,
                        r.winding_number
                            .map_or_else(|| "undefined".to_string(), |w| w.to_string()),
                        r.incoherent_reference
                    )
                })
                .collect::<Vec<_>>()
                .join("\n");
            (text, None)
        }
    };

    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = json!({
        "subcommand": manifest.command.name(),
        "engine_version": ENGINE_VERSION,
        "simulation": sim,
        "wall_time_seconds": started.elapsed().as_secs_f64(),
        "timestamp": timestamp,
    });
    write_json(&meta, &manifest.path_for("meta.json"))?;
    Ok(summary)
}

struct ResidualTable<'a>(&'a [f64]);

impl CsvTable for ResidualTable<'_> {
    fn header(&self) -> &'static str {
        "sample,norm_rate_residual"
    }

    fn write_rows(&self, w: &mut dyn std::io::Write) -> std::io::Result<()> {
        for (k, r) in self.0.iter().enumerate() {
            writeln!(w, "{k},{r:?}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Serialize)]
struct WindingRow {
    delta_g: f64,
    mu: f64,
    nu: f64,
    /// `None` where the gap closes.
    winding_number: Option<i32>,
    incoherent_reference: f64,
}

struct WindingTable<'a>(&'a [WindingRow]);

impl CsvTable for WindingTable<'_> {
    fn header(&self) -> &'static str {
        "delta_g,mu,nu,winding_number,incoherent_reference"
    }

    fn write_rows(&self, w: &mut dyn std::io::Write) -> std::io::Result<()> {
        for r in self.0 {
            let winding = r.winding_number.map_or_else(String::new, |v| v.to_string());
            writeln!(
                w,
                "{:?},{:?},{:?},{},{:?}",
                r.delta_g, r.mu, r.nu, winding, r.incoherent_reference
            )?;
        }
        Ok(())
    }
}

/// Entry point used by the binary: parse, run, report. Returns the exit code.
pub fn main_with_args(argv: &[String]) -> i32 {
    let outcome = parse_cli(argv).and_then(|m| run(&m));
    match outcome {
        Ok(summary) => {
            println!("{summary}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(line: &str) -> Vec<String> {
        std::iter::once("nlrl")
            .chain(line.split_whitespace())
            .map(String::from)
            .collect()
    }

    #[test]
    fn empty_argv_lists_subcommands() {
        for args in [vec![], vec!["nlrl".to_string()]] {
            match parse_cli(&args) {
                Err(CliError::Usage(msg)) => {
                    for sub in SUBCOMMANDS {
                        assert!(msg.contains(sub), "{msg}");
                    }
                }
                other => panic!("expected usage error, got {other:?}"),
            }
        }
    }

    #[test]
    fn sweep_model_a_settings() {
        let m = parse_cli(&argv(
            "sweep --model A --gamma-a 2 --u 0,0.5,3,5 --out model_a",
        ))
        .unwrap();
        let Command::Sweep(spec) = &m.command else {
            panic!("not a sweep")
        };
        assert_eq!(spec.model, ModelKind::A);
        assert_eq!(spec.u_values, vec![0.0, 0.5, 3.0, 5.0]);
        assert_eq!(spec.gamma_a, 2.0);
        assert_eq!(spec.sim.half_width, 60);
        assert_eq!(spec.sim.horizon, 25.0);
        assert_eq!(spec.sim.initial, InitialStateSpec::default());
        assert_eq!(spec.delta_g_grid.len(), 81);
        assert_eq!(m.out, PathBuf::from("model_a"));
        assert_eq!(m.path_for("meta.json"), PathBuf::from("model_a.meta.json"));
    }

    #[test]
    fn evolve_model_c_settings() {
        let m = parse_cli(&argv("evolve --model C --delta-g -0.4 --u 5 --gamma-a 0.2")).unwrap();
        let Command::Evolve { params, config } = &m.command else {
            panic!("not evolve")
        };
        assert!((params.mu() - 0.9).abs() < 1e-15);
        assert!((params.nu() - 0.1).abs() < 1e-15);
        assert_eq!(params.u(), 5.0);
        assert_eq!(config.half_width, 150);
        assert!((config.horizon - 250.0).abs() < 1e-12);
    }

    #[test]
    fn usage_errors() {
        let usage = |line: &str| match parse_cli(&argv(line)) {
            Err(e @ CliError::Usage(_)) => e.to_string(),
            other => panic!("{line}: expected usage error, got {other:?}"),
        };
        assert!(usage("evolve --bogus 3").contains("--bogus"));
        assert!(usage("evolve --model linear --u 3").contains("conflicting"));
        assert!(usage("sweep --delta-g 0.1 --delta-g-grid -0.1:0.1:0.1").contains("conflicting"));
        assert!(usage("evolve --u 1,2 --model a").contains("single"));
        assert!(usage("evolve --model z").contains("unknown model"));
        assert!(usage("evolve --delta-g 0.7").contains("delta_g"));
        assert!(usage("evolve --format pdf").contains("pdf"));
        assert!(usage("evolve --gamma-a 0").contains("horizon"));
        assert!(usage("evolve --initial 0:c").contains("initial"));
        assert!(usage("evolve --config /nonexistent/file.cfg").contains("/nonexistent/file.cfg"));
        assert!(usage("frobnicate").contains("frobnicate"));
        assert_eq!(CliError::Usage(String::new()).exit_code(), 1);
    }

    #[test]
    fn missing_output_directory_is_io_error() {
        match parse_cli(&argv("evolve --out /nonexistent/dir/run")) {
            Err(e @ CliError::Io(_)) => assert_eq!(e.exit_code(), EXIT_IO),
            other => panic!("expected I/O error, got {other:?}"),
        }
    }

    #[test]
    fn config_file_with_command_line_override() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(
            &cfg,
            "# shared\ngamma-a = 0.2\nn = 40\n\n[evolve]\nmodel = c\ndelta-g = -0.4\nu = 3\nnegate-linear = true\n\n[sweep]\nu = 0,5\n",
        )
        .unwrap();
        let line = format!("evolve --config {} --u 5", cfg.display());
        let m = parse_cli(&argv(&line)).unwrap();
        let Command::Evolve { params, config } = &m.command else {
            panic!("not evolve")
        };
        assert_eq!(params.kind(), ModelKind::C);
        assert_eq!(params.u(), 5.0);
        assert_eq!(params.gamma_a(), 0.2);
        assert!(params.negate_linear());
        assert_eq!(config.half_width, 40);

        let line = format!("sweep --config {} --model d", cfg.display());
        let Command::Sweep(spec) = parse_cli(&argv(&line)).unwrap().command else {
            panic!("not sweep")
        };
        assert_eq!(spec.u_values, vec![0.0, 5.0]);
        assert!(!spec.negate_linear);
    }

    #[test]
    fn config_file_errors() {
        assert!(config_tokens("[nope]\n", "evolve").is_err());
        assert!(config_tokens("just words\n", "evolve").is_err());
        assert!(config_tokens("negate-linear = maybe\n", "evolve").is_err());
        assert_eq!(
            config_tokens("[sweep]\nu = 1\n[evolve]\ndt = 0.01\n", "evolve").unwrap(),
            vec!["--dt=0.01".to_string()]
        );
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("bad.cfg");
        fs::write(&cfg, "wobble = 3\n").unwrap();
        match parse_cli(&argv(&format!("evolve --config {}", cfg.display()))) {
            Err(CliError::Usage(msg)) => assert!(msg.contains("wobble")),
            other => panic!("expected usage error, got {other:?}"),
        }
    }

    #[test]
    fn formats_and_initial() {
        assert_eq!(
            Formats::parse("csv").unwrap(),
            Formats {
                csv: true,
                json: false,
                svg: false
            }
        );
        assert!(Formats::parse(",").is_err());
        assert_eq!(
            parse_initial("-3:a").unwrap(),
            InitialStateSpec::SingleSite {
                m: -3,
                sublattice: Sublattice::A
            }
        );
    }
}
