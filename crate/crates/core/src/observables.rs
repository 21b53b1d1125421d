//! Observables computed from completed trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::lattice::{contrast_at, rhs, LatticeState, ModelParams};

/// `<Delta m>` together with the probability that had not yet decayed at the
/// horizon, which bounds the error from stopping the integral at finite `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanDisplacement {
    pub value: f64,
    pub residual_norm: f64,
    /// Copied from the trajectory: the excitation reached the lattice edge.
    pub truncation_unsafe: bool,
}

/// `Delta m(t)` at every sample time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub final_value: f64,
    pub residual_norm: f64,
}

/// `Z_m(t)` on every (sample, cell) pair; `values[k][i]` belongs to
/// `times[k]` and `cells[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastSeries {
    pub times: Vec<f64>,
    pub cells: Vec<i64>,
    pub values: Vec<Vec<f64>>,
}

/// Cell occupancy `|a_m|^2 + |b_m|^2` on every (sample, cell) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    pub times: Vec<f64>,
    pub cells: Vec<i64>,
    pub values: Vec<Vec<f64>>,
}

/// `sum_m m * decay_m`, accumulated in cell order.
pub fn displacement_of_state(state: &LatticeState) -> f64 {
    state
        .decay
        .iter()
        .enumerate()
        .map(|(i, d)| state.cell_of(i) as f64 * d)
        .sum()
}

pub fn mean_displacement(traj: &Trajectory) -> MeanDisplacement {
    MeanDisplacement {
        value: displacement_of_state(&traj.final_state),
        residual_norm: traj.final_state.norm(),
        truncation_unsafe: traj.truncation_unsafe,
    }
}

pub fn displacement_of_time(traj: &Trajectory) -> DisplacementSeries {
    let times = traj.times();
    let values: Vec<f64> = traj.samples.iter().map(displacement_of_state).collect();
    DisplacementSeries {
        final_value: values.last().copied().unwrap_or(0.0),
        residual_norm: traj.final_state.norm(),
        times,
        values,
    }
}

pub fn contrast_series(traj: &Trajectory) -> ContrastSeries {
    let state = &traj.final_state;
    let values = traj
        .samples
        .iter()
        .map(|s| {
            (0..s.len())
                .map(|i| contrast_at(&traj.params, &s.a, &s.b, i))
                .collect()
        })
        .collect();
    ContrastSeries {
        times: traj.times(),
        cells: state.cells().collect(),
        values,
    }
}

pub fn occupancy_grid(traj: &Trajectory) -> OccupancyGrid {
    OccupancyGrid {
        times: traj.times(),
        cells: traj.final_state.cells().collect(),
        values: traj.samples.iter().map(LatticeState::occupancy).collect(),
    }
}

/// Mirror asymmetry of the site occupancies about the central neutral site
/// `b_0`, summed over all samples and normalized by the summed occupancy.
///
/// The lattice reflection through `b_0` maps `b_m -> b_{-m}` and
/// `a_m -> a_{1-m}`; a state spreading symmetrically from `|0, b>` scores 0.
pub fn mirror_asymmetry(traj: &Trajectory) -> f64 {
    let mut diff = 0.0;
    let mut total = 0.0;
    for s in &traj.samples {
        let n = s.half_width() as i64;
        let a_sq = |m: i64| {
            if (-n..=n).contains(&m) {
                s.a[(m + n) as usize].norm_sqr()
            } else {
                0.0
            }
        };
        for m in s.cells() {
            let i = (m + n) as usize;
            let b = s.b[i].norm_sqr();
            let a = s.a[i].norm_sqr();
            diff += (b - s.b[(n - m) as usize].norm_sqr()).abs() + (a - a_sq(1 - m)).abs();
            total += a + b;
        }
    }
    if total > 0.0 {
        diff / total
    } else {
        0.0
    }
}

/// `|2 Re <psi|f(psi)> + sum_m 2 gamma_a |a_m|^2|`: how far the equations of
/// motion are from the norm-evolution law at this state.
pub fn norm_rate_residual(params: &ModelParams, state: &LatticeState) -> Result<f64> {
    let d = rhs(params, state)?;
    let rate: f64 = state
        .a
        .iter()
        .zip(&d.da)
        .chain(state.b.iter().zip(&d.db))
        .map(|(z, dz)| 2.0 * (z.conj() * dz).re)
        .sum();
    let loss: f64 = state
        .a
        .iter()
        .map(|z| 2.0 * params.gamma_a() * z.norm_sqr())
        .sum();
    Ok((rate + loss).abs())
}

/// Mean displacement for incoherent hopping from `|0, b>`,
/// `nu^2 / (nu^2 + mu^2)`.
pub fn incoherent_reference(mu: f64, nu: f64) -> Result<f64> {
    let denom = nu * nu + mu * mu;
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(Error::Domain {
            field: "mu/nu",
            value: denom,
            constraint: "mu and nu finite and not both zero",
        });
    }
    Ok(nu * nu / denom)
}
