//! Fixed-step classical RK4 over the augmented state (amplitudes plus decay
//! accumulators).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{rhs_into, InitialStateSpec, LatticeState, ModelParams};
use crate::observables;

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_EDGE_TOLERANCE: f64 = 1e-8;
/// Default horizon expressed as `gamma_a * T`.
pub const DEFAULT_HORIZON_GAMMA_T: f64 = 50.0;
/// `dt * max(|mu|, |nu|, gamma_a, U)` may not exceed this.
pub const STABILITY_FACTOR: f64 = 0.1;
/// Any |amplitude| above this aborts the run.
pub const BLOWUP_AMPLITUDE: f64 = 1e6;
const TARGET_SAMPLES: usize = 1000;

/// Time discretisation and initial condition of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Cells run over `[-half_width, half_width]`.
    pub half_width: usize,
    pub dt: f64,
    /// Final time `T`.
    pub horizon: f64,
    /// Record every `sample_stride`-th step (the final state is always kept).
    pub sample_stride: usize,
    pub initial: InitialStateSpec,
    pub edge_tolerance: f64,
}

impl SimConfig {
    /// Validated config with the default edge tolerance and a stride giving
    /// roughly a thousand samples.
    pub fn new(
        half_width: usize,
        dt: f64,
        horizon: f64,
        initial: InitialStateSpec,
    ) -> Result<Self> {
        let mut config = SimConfig {
            half_width,
            dt,
            horizon,
            sample_stride: 1,
            initial,
            edge_tolerance: DEFAULT_EDGE_TOLERANCE,
        };
        config.check_shape()?;
        config.sample_stride = (config.step_count() / TARGET_SAMPLES).max(1);
        Ok(config)
    }

    /// Defaults for a given loss rate: `dt = 1e-3`, `gamma_a T = 50`, single
    /// particle on the central neutral site, and `N = 60` for strong loss
    /// (`gamma_a >= 1`) or `N = 150` otherwise.
    pub fn for_loss_rate(gamma_a: f64) -> Result<Self> {
        if !(gamma_a > 0.0) || !gamma_a.is_finite() {
            return Err(Error::Domain {
                field: "gamma_a",
                value: gamma_a,
                constraint: "> 0 when the horizon is given as gamma_a * T",
            });
        }
        Self::new(
            default_half_width(gamma_a),
            DEFAULT_DT,
            DEFAULT_HORIZON_GAMMA_T / gamma_a,
            InitialStateSpec::default(),
        )
    }

    pub fn with_sample_stride(mut self, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::Config("sample stride must be positive".into()));
        }
        self.sample_stride = stride;
        Ok(self)
    }

    pub fn with_half_width(mut self, half_width: usize) -> Result<Self> {
        self.half_width = half_width;
        self.check_shape()?;
        Ok(self)
    }

    /// Changes `dt`, rescaling the stride so the sample times are unchanged.
    pub fn with_dt(mut self, dt: f64) -> Result<Self> {
        let old_steps = self.step_count();
        self.dt = dt;
        self.check_shape()?;
        let ratio = self.step_count() as f64 / old_steps as f64;
        self.sample_stride = ((self.sample_stride as f64 * ratio).round() as usize).max(1);
        Ok(self)
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        self.horizon = horizon;
        self.check_shape()?;
        self.sample_stride = (self.step_count() / TARGET_SAMPLES).max(1);
        Ok(self)
    }

    /// `T / dt` rounded up. Values within rounding error of an integer are
    /// not bumped to the next one.
    pub fn step_count(&self) -> usize {
        let ratio = self.horizon / self.dt;
        let nearest = ratio.round();
        let steps = if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
            nearest
        } else {
            ratio.ceil()
        };
        (steps as usize).max(1)
    }

    /// The step actually taken: `T / step_count()`, so the last step lands
    /// exactly on `T`.
    pub fn effective_dt(&self) -> f64 {
        self.horizon / self.step_count() as f64
    }

    fn check_shape(&self) -> Result<()> {
        if self.half_width == 0 {
            return Err(Error::Config(
                "lattice half-width N must be positive".into(),
            ));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Domain {
                field: "dt",
                value: self.dt,
                constraint: "finite and > 0",
            });
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::Domain {
                field: "T",
                value: self.horizon,
                constraint: "finite and > 0",
            });
        }
        if !(self.edge_tolerance >= 0.0) {
            return Err(Error::Domain {
                field: "edge_tolerance",
                value: self.edge_tolerance,
                constraint: ">= 0",
            });
        }
        // Rejects zero or out-of-range initial amplitudes up front.
        LatticeState::from_initial(self.half_width, &self.initial)?;
        Ok(())
    }

    /// Full validation against the rates of `params`.
    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        self.check_shape()?;
        if self.sample_stride == 0 {
            return Err(Error::Config("sample stride must be positive".into()));
        }
        let rate = params.max_rate();
        if rate > 0.0 && self.dt * rate > STABILITY_FACTOR * (1.0 + 1e-12) {
            return Err(Error::Domain {
                field: "dt",
                value: self.dt,
                constraint: "dt <= 0.1 / max(|mu|, |nu|, gamma_a, U)",
            });
        }
        Ok(())
    }
}

/// Lattice half-width used when none is given.
pub fn default_half_width(gamma_a: f64) -> usize {
    if gamma_a >= 1.0 {
        60
    } else {
        150
    }
}

/// A completed run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub config: SimConfig,
    pub params: ModelParams,
    /// Snapshots at strictly increasing times; the first at `t = 0`, the last
    /// at `t = T` (equal to `final_state`).
    pub samples: Vec<LatticeState>,
    pub final_state: LatticeState,
    /// Set when a boundary cell's occupancy exceeded the edge tolerance.
    pub truncation_unsafe: bool,
    pub steps: usize,
    pub step_size: f64,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }
}

struct Stage {
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    decay: Vec<f64>,
}

impl Stage {
    fn new(len: usize) -> Self {
        Stage {
            a: vec![Complex64::new(0.0, 0.0); len],
            b: vec![Complex64::new(0.0, 0.0); len],
            decay: vec![0.0; len],
        }
    }
}

/// Preallocated RK4 stage buffers for one lattice size.
struct Rk4 {
    k: [Stage; 4],
    tmp_a: Vec<Complex64>,
    tmp_b: Vec<Complex64>,
}

impl Rk4 {
    fn new(len: usize) -> Self {
        Rk4 {
            k: [
                Stage::new(len),
                Stage::new(len),
                Stage::new(len),
                Stage::new(len),
            ],
            tmp_a: vec![Complex64::new(0.0, 0.0); len],
            tmp_b: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    fn eval(&mut self, params: &ModelParams, stage: usize, from_tmp: bool, state: &LatticeState) {
        let k = &mut self.k[stage];
        let (a, b) = if from_tmp {
            (&self.tmp_a, &self.tmp_b)
        } else {
            (&state.a, &state.b)
        };
        rhs_into(params, a, b, &mut k.a, &mut k.b, &mut k.decay);
    }

    fn load_tmp(&mut self, state: &LatticeState, stage: usize, h: f64) {
        let k = &self.k[stage];
        for i in 0..state.a.len() {
            self.tmp_a[i] = state.a[i] + k.a[i] * h;
            self.tmp_b[i] = state.b[i] + k.b[i] * h;
        }
    }

    fn step(&mut self, params: &ModelParams, state: &mut LatticeState, h: f64) {
        // The decay accumulators do not feed back into the derivative, so
        // the intermediate stages only need the amplitudes.
        self.eval(params, 0, false, state);
        self.load_tmp(state, 0, 0.5 * h);
        self.eval(params, 1, true, state);
        self.load_tmp(state, 1, 0.5 * h);
        self.eval(params, 2, true, state);
        self.load_tmp(state, 2, h);
        self.eval(params, 3, true, state);

        let w = h / 6.0;
        let [k1, k2, k3, k4] = &self.k;
        for i in 0..state.a.len() {
            state.a[i] += (k1.a[i] + (k2.a[i] + k3.a[i]) * 2.0 + k4.a[i]) * w;
            state.b[i] += (k1.b[i] + (k2.b[i] + k3.b[i]) * 2.0 + k4.b[i]) * w;
            state.decay[i] += (k1.decay[i] + 2.0 * (k2.decay[i] + k3.decay[i]) + k4.decay[i]) * w;
        }
    }
}

/// Largest `|z|^2` over all amplitudes, NaN-propagating.
fn max_amplitude_sqr(state: &LatticeState) -> f64 {
    let mut max = 0.0f64;
    for z in state.a.iter().chain(&state.b) {
        let v = z.norm_sqr();
        if !(v <= max) {
            max = v;
            if v.is_nan() {
                return f64::NAN;
            }
        }
    }
    max
}

/// Integrates `params` from `config.initial` up to `config.horizon`.
///
/// The boundary cells are checked after every step; exceeding the edge
/// tolerance marks the trajectory `truncation_unsafe` but does not stop it.
pub fn evolve(params: &ModelParams, config: &SimConfig) -> Result<Trajectory> {
    config.validate(params)?;
    integrate(params, config)
}

/// [`evolve`] without the step-size guard.
fn integrate(params: &ModelParams, config: &SimConfig) -> Result<Trajectory> {
    let mut state = LatticeState::from_initial(config.half_width, &config.initial)?;
    let steps = config.step_count();
    let h = config.effective_dt();
    let blowup_sqr = BLOWUP_AMPLITUDE * BLOWUP_AMPLITUDE;

    let mut rk = Rk4::new(state.len());
    let mut samples = Vec::with_capacity(steps / config.sample_stride + 2);
    samples.push(state.clone());
    let mut truncation_unsafe = edge_exceeded(&state, config.edge_tolerance);

    for step in 1..=steps {
        rk.step(params, &mut state, h);
        state.t = if step == steps {
            config.horizon
        } else {
            step as f64 * h
        };

        if !(max_amplitude_sqr(&state) <= blowup_sqr) {
            return Err(Error::Diverged {
                step,
                max_amplitude: state.max_amplitude(),
            });
        }
        if !truncation_unsafe && edge_exceeded(&state, config.edge_tolerance) {
            truncation_unsafe = true;
        }
        if step % config.sample_stride == 0 || step == steps {
            samples.push(state.clone());
        }
    }

    Ok(Trajectory {
        config: config.clone(),
        params: *params,
        samples,
        final_state: state,
        truncation_unsafe,
        steps,
        step_size: h,
    })
}

fn edge_exceeded(state: &LatticeState, tolerance: f64) -> bool {
    let (left, right) = state.edge_weights();
    left > tolerance || right > tolerance
}

/// Re-runs [`evolve`] with `dt` halved `refinements` times and returns
/// `(dt, <Delta m>)` for the original step and each refinement.
pub fn convergence_probe(
    params: &ModelParams,
    config: &SimConfig,
    refinements: usize,
) -> Result<Vec<(f64, f64)>> {
    if refinements < 2 {
        return Err(Error::Config(format!(
            "convergence probe needs at least 2 refinements, got {refinements}"
        )));
    }
    let mut out = Vec::with_capacity(refinements + 1);
    let mut dt = config.dt;
    for _ in 0..=refinements {
        let mut run = config.clone();
        run.dt = dt;
        run.sample_stride = run.step_count();
        let traj = evolve(params, &run)?;
        out.push((
            run.effective_dt(),
            observables::mean_displacement(&traj).value,
        ));
        dt *= 0.5;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{make_params, ModelKind, Sublattice};

    fn small_config(n: usize, dt: f64, horizon: f64) -> SimConfig {
        SimConfig::new(n, dt, horizon, InitialStateSpec::default()).unwrap()
    }

    #[test]
    fn step_count_rounds_up() {
        assert_eq!(small_config(3, 0.1, 1.0).step_count(), 10);
        assert_eq!(small_config(3, 0.3, 1.0).step_count(), 4);
        assert_eq!(small_config(3, 1e-3, 25.0).step_count(), 25_000);
        let c = small_config(3, 0.3, 1.0);
        assert!((c.effective_dt() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn config_rejects_bad_inputs() {
        assert!(SimConfig::new(0, 0.1, 1.0, InitialStateSpec::default()).is_err());
        assert!(SimConfig::new(3, 0.0, 1.0, InitialStateSpec::default()).is_err());
        assert!(SimConfig::new(3, 0.1, -1.0, InitialStateSpec::default()).is_err());
        let zero = InitialStateSpec::Custom(vec![(0, Sublattice::B, Complex64::new(0.0, 0.0))]);
        assert!(SimConfig::new(3, 0.1, 1.0, zero).is_err());
        let outside = InitialStateSpec::SingleSite {
            m: -9,
            sublattice: Sublattice::B,
        };
        assert!(SimConfig::new(3, 0.1, 1.0, outside).is_err());
        assert!(SimConfig::for_loss_rate(0.0).is_err());
    }

    #[test]
    fn stability_guard() {
        let p = make_params(ModelKind::A, 0.0, 2.0, 5.0, false).unwrap();
        let ok = small_config(3, 0.02, 1.0);
        assert!(ok.validate(&p).is_ok());
        let bad = small_config(3, 0.021, 1.0);
        assert!(matches!(
            bad.validate(&p),
            Err(Error::Domain { field: "dt", .. })
        ));
    }

    #[test]
    fn defaults_follow_loss_rate() {
        let strong = SimConfig::for_loss_rate(2.0).unwrap();
        assert_eq!(strong.half_width, 60);
        assert!((strong.horizon - 25.0).abs() < 1e-15);
        let weak = SimConfig::for_loss_rate(0.2).unwrap();
        assert_eq!(weak.half_width, 150);
        assert!((weak.horizon - 250.0).abs() < 1e-12);
        assert_eq!(weak.dt, DEFAULT_DT);
    }

    #[test]
    fn sample_times_cover_run() {
        let p = make_params(ModelKind::C, -0.2, 1.0, 1.0, false).unwrap();
        let cfg = small_config(4, 0.01, 1.05).with_sample_stride(7).unwrap();
        let traj = evolve(&p, &cfg).unwrap();
        let times = traj.times();
        assert_eq!(times[0], 0.0);
        assert_eq!(*times.last().unwrap(), 1.05);
        assert!(times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(traj.samples.last().unwrap(), &traj.final_state);
    }

    #[test]
    fn lossless_run_keeps_unit_norm() {
        for kind in ModelKind::ALL {
            let p = make_params(kind, -0.3, 0.0, 3.0, false).unwrap();
            let traj = evolve(&p, &small_config(8, 1e-3, 5.0)).unwrap();
            assert!((traj.final_state.norm() - 1.0).abs() < 1e-8, "{kind}");
            assert!(traj.final_state.decay.iter().all(|&d| d == 0.0));
        }
    }

    #[test]
    fn decay_is_non_decreasing() {
        let p = make_params(ModelKind::D, -0.4, 0.5, 2.0, false).unwrap();
        let traj = evolve(
            &p,
            &small_config(10, 1e-2, 10.0).with_sample_stride(1).unwrap(),
        )
        .unwrap();
        for pair in traj.samples.windows(2) {
            for (x, y) in pair[0].decay.iter().zip(&pair[1].decay) {
                assert!(y >= x);
            }
        }
    }

    #[test]
    fn truncation_flag_on_tiny_lattice() {
        let p = make_params(ModelKind::Linear, 0.0, 0.1, 0.0, false).unwrap();
        let traj = evolve(&p, &small_config(2, 1e-2, 5.0)).unwrap();
        assert!(traj.truncation_unsafe);
        let roomy = evolve(&p, &small_config(30, 1e-2, 5.0)).unwrap();
        assert!(!roomy.truncation_unsafe);
    }

    #[test]
    fn divergence_is_reported() {
        let p = make_params(ModelKind::A, 0.0, 0.0, 5.0, false).unwrap();
        let mut cfg = small_config(3, 1.0, 500.0);
        cfg.dt = 5.0;
        assert!(matches!(
            cfg.validate(&p),
            Err(Error::Domain { field: "dt", .. })
        ));
        match integrate(&p, &cfg) {
            Err(Error::Diverged {
                step,
                max_amplitude,
            }) => {
                assert!(step >= 1);
                assert!(!(max_amplitude <= BLOWUP_AMPLITUDE));
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn deterministic() {
        let p = make_params(ModelKind::B, 0.1, 1.0, 2.0, false).unwrap();
        let cfg = small_config(6, 1e-2, 3.0);
        let x = evolve(&p, &cfg).unwrap();
        let y = evolve(&p, &cfg).unwrap();
        assert_eq!(x.samples, y.samples);
    }

    #[test]
    fn probe_requires_two_refinements() {
        let p = make_params(ModelKind::Linear, 0.3, 2.0, 0.0, false).unwrap();
        let cfg = small_config(6, 0.05, 2.0);
        assert!(matches!(
            convergence_probe(&p, &cfg, 1),
            Err(Error::Config(_))
        ));
        let seq = convergence_probe(&p, &cfg, 2).unwrap();
        assert_eq!(seq.len(), 3);
        let a = convergence_probe(&p.with_kind(ModelKind::A), &cfg, 2).unwrap();
        assert_eq!(seq, a);
    }
}
