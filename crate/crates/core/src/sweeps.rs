//! Parameter sweeps over `(delta_g, U)` and time-resolved heat-map runs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{evolve, SimConfig, Trajectory};
use crate::lattice::{make_params, ModelKind, ModelParams};
use crate::observables::{
    contrast_series, displacement_of_time, mean_displacement, occupancy_grid, ContrastSeries,
    DisplacementSeries, OccupancyGrid,
};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Nonlinear coefficients used when none are given.
pub const DEFAULT_U_VALUES: [f64; 4] = [0.0, 0.5, 3.0, 5.0];

/// 81 points from -0.5 to 0.5 in steps of 0.0125, endpoints included.
pub fn default_delta_g_grid() -> Vec<f64> {
    grid(-0.5, 0.5, 0.0125).expect("static grid is valid")
}

/// Evenly spaced points `start, start + step, ...` up to and including
/// `stop` (within a rounding tolerance). Points are computed as
/// `start + k * step` so they do not accumulate error.
pub fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(Error::Config(format!(
            "invalid grid {start}:{stop}:{step} (need start <= stop and step > 0)"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|k| {
            let x = start + k as f64 * step;
            // Snap values such as 0.30000000000000004 back onto the decimal grid.
            let snapped = (x / step).round() * step;
            if (snapped - x).abs() < 1e-12 {
                (snapped * 1e12).round() / 1e12
            } else {
                x
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub model: ModelKind,
    pub delta_g_grid: Vec<f64>,
    pub u_values: Vec<f64>,
    pub gamma_a: f64,
    pub sim: SimConfig,
    pub negate_linear: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.delta_g_grid.is_empty() {
            return Err(Error::Config("delta_g grid is empty".into()));
        }
        if self.delta_g_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config(
                "delta_g grid must be strictly increasing".into(),
            ));
        }
        if self.u_values.is_empty() {
            return Err(Error::Config("no U values given".into()));
        }
        for &dg in &self.delta_g_grid {
            for &u in &self.u_values {
                let p = make_params(self.model, dg, self.gamma_a, u, self.negate_linear)?;
                self.sim.validate(&p)?;
            }
        }
        Ok(())
    }
}

/// One grid point. A diverged run leaves a hole: `mean_displacement` and
/// `residual_norm` are NaN and `error` says why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub delta_g: f64,
    pub mean_displacement: f64,
    pub residual_norm: f64,
    pub truncation_unsafe: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub u: f64,
    pub points: Vec<SweepPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub dt: f64,
    pub horizon: f64,
    pub half_width: usize,
    /// Seconds since the Unix epoch when the sweep finished.
    pub timestamp: u64,
    pub engine_version: String,
    pub wall_time_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    /// One curve per entry of `spec.u_values`, in that order.
    pub curves: Vec<SweepCurve>,
    pub metadata: SweepMetadata,
}

fn run_point(spec: &SweepSpec, sim: &SimConfig, delta_g: f64, u: f64) -> SweepPoint {
    let outcome = make_params(spec.model, delta_g, spec.gamma_a, u, spec.negate_linear)
        .and_then(|p| evolve(&p, sim));
    match outcome {
        Ok(traj) => {
            let md = mean_displacement(&traj);
            SweepPoint {
                delta_g,
                mean_displacement: md.value,
                residual_norm: md.residual_norm,
                truncation_unsafe: md.truncation_unsafe,
                error: None,
            }
        }
        Err(e) => SweepPoint {
            delta_g,
            mean_displacement: f64::NAN,
            residual_norm: f64::NAN,
            truncation_unsafe: false,
            error: Some(e.to_string()),
        },
    }
}

/// Evolves every `(delta_g, U)` point of `spec` independently, in parallel.
/// Results come back in grid order whatever the scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let started = std::time::Instant::now();
    // Only the final state matters here.
    let mut sim = spec.sim.clone();
    sim.sample_stride = sim.step_count();

    let jobs: Vec<(usize, f64, f64)> = spec
        .u_values
        .iter()
        .enumerate()
        .flat_map(|(k, &u)| spec.delta_g_grid.iter().map(move |&dg| (k, dg, u)))
        .collect();
    let points: Vec<SweepPoint> = jobs
        .par_iter()
        .map(|&(_, dg, u)| run_point(spec, &sim, dg, u))
        .collect();

    let per_curve = spec.delta_g_grid.len();
    let curves = spec
        .u_values
        .iter()
        .zip(points.chunks(per_curve))
        .map(|(&u, chunk)| SweepCurve {
            u,
            points: chunk.to_vec(),
        })
        .collect();

    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Ok(SweepResult {
        spec: spec.clone(),
        curves,
        metadata: SweepMetadata {
            dt: spec.sim.dt,
            horizon: spec.sim.horizon,
            half_width: spec.sim.half_width,
            timestamp,
            engine_version: ENGINE_VERSION.to_string(),
            wall_time_seconds: started.elapsed().as_secs_f64(),
        },
    })
}

/// Aligned time-resolved datasets of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub params: ModelParams,
    pub occupancy: OccupancyGrid,
    pub contrast: ContrastSeries,
    pub displacement: DisplacementSeries,
    /// Per-sample `<psi|psi>`.
    pub norm: Vec<f64>,
    pub truncation_unsafe: bool,
}

impl Heatmap {
    pub fn from_trajectory(traj: &Trajectory) -> Self {
        Heatmap {
            params: traj.params,
            occupancy: occupancy_grid(traj),
            contrast: contrast_series(traj),
            displacement: displacement_of_time(traj),
            norm: traj.samples.iter().map(|s| s.norm()).collect(),
            truncation_unsafe: traj.truncation_unsafe,
        }
    }
}

pub fn heatmap_run(params: &ModelParams, config: &SimConfig) -> Result<Heatmap> {
    Ok(Heatmap::from_trajectory(&evolve(params, config)?))
}
