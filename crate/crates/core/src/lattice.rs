//! Lattice state, model parameters and the equations of motion.
//!
//! The lattice has unit cells `m ∈ [-N, N]`, each holding a lossy site `A`
//! (amplitude `a_m`, decay rate `gamma_a`) and a neutral site `B` (`b_m`).
//! The intracell bond couples `a_m` and `b_m`, the intercell bond couples
//! `b_{m-1}` and `a_m`. Every model is written as
//!
//! ```text
//! da_m/dt = -gamma_a a_m + i (mu - s_intra(m)) b_m + i (nu - s_inter(m)) b_{m-1}
//! db_m/dt =                i (mu - s_intra(m)) a_m + i (nu - s_inter(m+1)) a_{m+1}
//! ```
//!
//! where the Kerr-type shifts `s_intra`, `s_inter` depend on the model.
//! Each bond enters both equations with the same real coefficient, which is
//! what makes `d<psi|psi>/dt = -sum_m 2 gamma_a |a_m|^2` hold for every
//! model.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which nonlinear extension of the lattice dynamics to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    /// Linear lossy dimerized lattice.
    Linear,
    /// Intercell bond shifted by `xi_m = U (|a_m|^2 + |b_{m-1}|^2)`.
    A,
    /// Intracell bond shifted by `zeta_m = U (|a_m|^2 + |b_m|^2)`.
    B,
    /// Intercell bond shifted by `chi_m = U |a_m|^2`.
    C,
    /// Intracell bond shifted by `chi_m = U |a_m|^2`.
    D,
    /// Intercell bond out of cell `m` shifted by `eta_m = U |b_m|^2`.
    E,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Linear,
        ModelKind::A,
        ModelKind::B,
        ModelKind::C,
        ModelKind::D,
        ModelKind::E,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Linear => "Linear",
            ModelKind::A => "A",
            ModelKind::B => "B",
            ModelKind::C => "C",
            ModelKind::D => "D",
            ModelKind::E => "E",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(ModelKind::Linear),
            "a" => Ok(ModelKind::A),
            "b" => Ok(ModelKind::B),
            "c" => Ok(ModelKind::C),
            "d" => Ok(ModelKind::D),
            "e" => Ok(ModelKind::E),
            _ => Err(Error::Config(format!(
                "unknown model '{s}' (expected linear, a, b, c, d or e)"
            ))),
        }
    }
}

/// Couplings and rates of one model instance.
///
/// Construct through [`make_params`]; the coupling pair is always derived
/// from `delta_g` as `mu = 0.5 - delta_g`, `nu = 0.5 + delta_g` (both negated
/// when `negate_linear` is set).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    kind: ModelKind,
    delta_g: f64,
    mu: f64,
    nu: f64,
    gamma_a: f64,
    u: f64,
    negate_linear: bool,
}

pub fn make_params(
    kind: ModelKind,
    delta_g: f64,
    gamma_a: f64,
    u: f64,
    negate_linear: bool,
) -> Result<ModelParams> {
    if !(delta_g.abs() <= 0.5) {
        return Err(Error::Domain {
            field: "delta_g",
            value: delta_g,
            constraint: "|delta_g| <= 0.5",
        });
    }
    if !(gamma_a >= 0.0) || !gamma_a.is_finite() {
        return Err(Error::Domain {
            field: "gamma_a",
            value: gamma_a,
            constraint: "finite and >= 0",
        });
    }
    if !(u >= 0.0) || !u.is_finite() {
        return Err(Error::Domain {
            field: "U",
            value: u,
            constraint: "finite and >= 0",
        });
    }
    let sign = if negate_linear { -1.0 } else { 1.0 };
    Ok(ModelParams {
        kind,
        delta_g,
        mu: sign * (0.5 - delta_g),
        nu: sign * (0.5 + delta_g),
        gamma_a,
        u,
        negate_linear,
    })
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn delta_g(&self) -> f64 {
        self.delta_g
    }

    /// Intracell coupling.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Intercell coupling.
    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn gamma_a(&self) -> f64 {
        self.gamma_a
    }

    /// Nonlinear coefficient.
    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn negate_linear(&self) -> bool {
        self.negate_linear
    }

    /// Same couplings and rates under a different model.
    pub fn with_kind(&self, kind: ModelKind) -> ModelParams {
        ModelParams { kind, ..*self }
    }

    /// Largest rate in the problem, used by the time-step guard.
    pub fn max_rate(&self) -> f64 {
        self.mu
            .abs()
            .max(self.nu.abs())
            .max(self.gamma_a)
            .max(self.u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sublattice {
    /// Lossy site.
    A,
    /// Neutral site.
    B,
}

impl FromStr for Sublattice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" | "A" => Ok(Sublattice::A),
            "b" | "B" => Ok(Sublattice::B),
            _ => Err(Error::Config(format!("unknown sublattice '{s}'"))),
        }
    }
}

/// Initial excitation of the lattice. Custom amplitudes are normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialStateSpec {
    SingleSite { m: i64, sublattice: Sublattice },
    Custom(Vec<(i64, Sublattice, Complex64)>),
}

impl Default for InitialStateSpec {
    /// A single particle on the neutral site of the central cell.
    fn default() -> Self {
        InitialStateSpec::SingleSite {
            m: 0,
            sublattice: Sublattice::B,
        }
    }
}

/// Amplitudes and accumulated decay integrals on `2N + 1` unit cells.
///
/// Vector index `i` corresponds to cell `m = i - N`. `decay[i]` holds
/// `int_0^t 2 gamma_a |a_m|^2 dt'`, the probability that has left the lattice
/// through the lossy site of cell `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeState {
    half_width: usize,
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
    pub decay: Vec<f64>,
    pub t: f64,
}

/// Time derivative of a [`LatticeState`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateDerivative {
    pub da: Vec<Complex64>,
    pub db: Vec<Complex64>,
    pub ddecay: Vec<f64>,
}

impl LatticeState {
    pub fn zeros(half_width: usize) -> Self {
        let len = 2 * half_width + 1;
        LatticeState {
            half_width,
            a: vec![Complex64::new(0.0, 0.0); len],
            b: vec![Complex64::new(0.0, 0.0); len],
            decay: vec![0.0; len],
            t: 0.0,
        }
    }

    /// Builds a unit-norm state from `spec` at `t = 0`.
    pub fn from_initial(half_width: usize, spec: &InitialStateSpec) -> Result<Self> {
        if half_width == 0 {
            return Err(Error::Config("lattice half-width must be positive".into()));
        }
        let mut state = Self::zeros(half_width);
        match spec {
            InitialStateSpec::SingleSite { m, sublattice } => {
                state.set(*m, *sublattice, Complex64::new(1.0, 0.0))?;
            }
            InitialStateSpec::Custom(entries) => {
                for &(m, sublattice, amp) in entries {
                    let i = state.index(m)?;
                    match sublattice {
                        Sublattice::A => state.a[i] += amp,
                        Sublattice::B => state.b[i] += amp,
                    }
                }
                let norm = state.norm();
                if !(norm > 0.0) || !norm.is_finite() {
                    return Err(Error::Config(
                        "initial state has zero (or non-finite) norm".into(),
                    ));
                }
                let scale = norm.sqrt().recip();
                state.a.iter_mut().for_each(|z| *z *= scale);
                state.b.iter_mut().for_each(|z| *z *= scale);
            }
        }
        Ok(state)
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Number of unit cells, `2N + 1`.
    pub fn len(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cells(&self) -> RangeInclusive<i64> {
        let n = self.half_width as i64;
        -n..=n
    }

    pub fn index(&self, m: i64) -> Result<usize> {
        let n = self.half_width as i64;
        if m < -n || m > n {
            return Err(Error::Index {
                m,
                half_width: self.half_width,
            });
        }
        Ok((m + n) as usize)
    }

    pub fn cell_of(&self, index: usize) -> i64 {
        index as i64 - self.half_width as i64
    }

    pub fn a_at(&self, m: i64) -> Result<Complex64> {
        Ok(self.a[self.index(m)?])
    }

    pub fn b_at(&self, m: i64) -> Result<Complex64> {
        Ok(self.b[self.index(m)?])
    }

    pub fn set(&mut self, m: i64, sublattice: Sublattice, amp: Complex64) -> Result<()> {
        let i = self.index(m)?;
        match sublattice {
            Sublattice::A => self.a[i] = amp,
            Sublattice::B => self.b[i] = amp,
        }
        Ok(())
    }

    /// `<psi|psi>`, the probability still on the lattice.
    pub fn norm(&self) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
            .sum()
    }

    pub fn total_decay(&self) -> f64 {
        self.decay.iter().sum()
    }

    /// Occupancy `|a_m|^2 + |b_m|^2` of every cell.
    pub fn occupancy(&self) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
            .collect()
    }

    /// Occupancy of the two boundary cells `(-N, N)`.
    pub fn edge_weights(&self) -> (f64, f64) {
        let last = self.len() - 1;
        (
            self.a[0].norm_sqr() + self.b[0].norm_sqr(),
            self.a[last].norm_sqr() + self.b[last].norm_sqr(),
        )
    }

    pub fn max_amplitude(&self) -> f64 {
        self.a
            .iter()
            .chain(&self.b)
            .map(|z| {
                if z.is_finite() {
                    z.norm()
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }

    fn check_dims(&self) -> Result<()> {
        let expected = self.len();
        for got in [self.a.len(), self.b.len(), self.decay.len()] {
            if got != expected {
                return Err(Error::Dimension { expected, got });
            }
        }
        Ok(())
    }
}

/// Shift of the intracell bond `a_i <-> b_i`.
#[inline(always)]
fn intra_shift(kind: ModelKind, u: f64, a: &[Complex64], b: &[Complex64], i: usize) -> f64 {
    match kind {
        ModelKind::B => u * (a[i].norm_sqr() + b[i].norm_sqr()),
        ModelKind::D => u * a[i].norm_sqr(),
        ModelKind::Linear | ModelKind::A | ModelKind::C | ModelKind::E => 0.0,
    }
}

/// Shift of the intercell bond `b_{i-1} <-> a_i`; `b_{-1}` counts as zero.
#[inline(always)]
fn inter_shift(kind: ModelKind, u: f64, a: &[Complex64], b: &[Complex64], i: usize) -> f64 {
    let b_left = if i > 0 { b[i - 1].norm_sqr() } else { 0.0 };
    match kind {
        ModelKind::A => u * (a[i].norm_sqr() + b_left),
        ModelKind::C => u * a[i].norm_sqr(),
        ModelKind::E => u * b_left,
        ModelKind::Linear | ModelKind::B | ModelKind::D => 0.0,
    }
}

/// `i * c * z` for real `c`.
#[inline(always)]
fn i_times(c: f64, z: Complex64) -> Complex64 {
    Complex64::new(-c * z.im, c * z.re)
}

const LINEAR: u8 = 0;
const MODEL_A: u8 = 1;
const MODEL_B: u8 = 2;
const MODEL_C: u8 = 3;
const MODEL_D: u8 = 4;
const MODEL_E: u8 = 5;

/// Hot-path right-hand side over raw slices. All slices have equal length.
pub(crate) fn rhs_into(
    params: &ModelParams,
    a: &[Complex64],
    b: &[Complex64],
    da: &mut [Complex64],
    db: &mut [Complex64],
    ddecay: &mut [f64],
) {
    match params.kind {
        ModelKind::Linear => rhs_kernel::<LINEAR>(params, a, b, da, db, ddecay),
        ModelKind::A => rhs_kernel::<MODEL_A>(params, a, b, da, db, ddecay),
        ModelKind::B => rhs_kernel::<MODEL_B>(params, a, b, da, db, ddecay),
        ModelKind::C => rhs_kernel::<MODEL_C>(params, a, b, da, db, ddecay),
        ModelKind::D => rhs_kernel::<MODEL_D>(params, a, b, da, db, ddecay),
        ModelKind::E => rhs_kernel::<MODEL_E>(params, a, b, da, db, ddecay),
    }
}

/// One monomorphized copy per model so the shift selection is resolved at
/// compile time. Must agree with [`intra_shift`] and [`inter_shift`].
#[inline(always)]
fn rhs_kernel<const KIND: u8>(
    params: &ModelParams,
    a: &[Complex64],
    b: &[Complex64],
    da: &mut [Complex64],
    db: &mut [Complex64],
    ddecay: &mut [f64],
) {
    let len = a.len();
    let (b, da, db, ddecay) = (
        &b[..len],
        &mut da[..len],
        &mut db[..len],
        &mut ddecay[..len],
    );
    let (u, mu, nu, gamma) = (params.u, params.mu, params.nu, params.gamma_a);

    let intra = |i: usize| -> f64 {
        match KIND {
            MODEL_B => mu - u * (a[i].norm_sqr() + b[i].norm_sqr()),
            MODEL_D => mu - u * a[i].norm_sqr(),
            _ => mu,
        }
    };
    // Intercell coupling of the bond b_{i-1} <-> a_i, for i >= 1.
    let inter = |i: usize| -> f64 {
        match KIND {
            MODEL_A => nu - u * (a[i].norm_sqr() + b[i - 1].norm_sqr()),
            MODEL_C => nu - u * a[i].norm_sqr(),
            MODEL_E => nu - u * b[i - 1].norm_sqr(),
            _ => nu,
        }
    };

    // Bond into cell 0 does not exist: a_0 has no left neighbour.
    let mut inter_here = 0.0;
    for i in 0..len {
        let c_intra = intra(i);
        let mut dai = -gamma * a[i] + i_times(c_intra, b[i]);
        if i > 0 {
            dai += i_times(inter_here, b[i - 1]);
        }
        let mut dbi = i_times(c_intra, a[i]);
        if i + 1 < len {
            let inter_next = inter(i + 1);
            dbi += i_times(inter_next, a[i + 1]);
            inter_here = inter_next;
        }
        da[i] = dai;
        db[i] = dbi;
        ddecay[i] = 2.0 * gamma * a[i].norm_sqr();
    }
}

/// Time derivative of `state` under the model in `params`, with open
/// boundaries. The decay accumulators evolve as `2 gamma_a |a_m|^2`.
pub fn rhs(params: &ModelParams, state: &LatticeState) -> Result<StateDerivative> {
    state.check_dims()?;
    let len = state.len();
    let mut out = StateDerivative {
        da: vec![Complex64::new(0.0, 0.0); len],
        db: vec![Complex64::new(0.0, 0.0); len],
        ddecay: vec![0.0; len],
    };
    rhs_into(
        params,
        &state.a,
        &state.b,
        &mut out.da,
        &mut out.db,
        &mut out.ddecay,
    );
    Ok(out)
}

/// The model's nonlinear shift labelled by cell `m`: `xi_m` (A), `zeta_m`
/// (B), `chi_m` (C, D), `eta_m` (E) and zero for the linear model.
///
/// Note the labelling for model E: `eta_m` belongs to the bond leaving cell
/// `m` to the right, unlike `xi_m` and `chi_m` which belong to the bond
/// entering cell `m` from the left.
pub fn nonlinear_shift(params: &ModelParams, state: &LatticeState, m: i64) -> Result<f64> {
    state.check_dims()?;
    let i = state.index(m)?;
    let (a, b, u) = (&state.a, &state.b, params.u);
    Ok(match params.kind {
        ModelKind::Linear => 0.0,
        ModelKind::A | ModelKind::C => inter_shift(params.kind, u, a, b, i),
        ModelKind::B | ModelKind::D => intra_shift(params.kind, u, a, b, i),
        ModelKind::E => u * b[i].norm_sqr(),
    })
}

/// Effective coupling contrast `Z_m = |nu_eff| - |mu_eff|` felt when entering
/// cell `m`: the intercell coupling uses the bond between cells `m - 1` and
/// `m`, the intracell coupling the bond inside cell `m`. Positive values
/// favour hopping to the right.
pub fn effective_contrast(params: &ModelParams, state: &LatticeState, m: i64) -> Result<f64> {
    state.check_dims()?;
    let i = state.index(m)?;
    Ok(contrast_at(params, &state.a, &state.b, i))
}

#[inline]
pub(crate) fn contrast_at(params: &ModelParams, a: &[Complex64], b: &[Complex64], i: usize) -> f64 {
    let inter = params.nu - inter_shift(params.kind, params.u, a, b, i);
    let intra = params.mu - intra_shift(params.kind, params.u, a, b, i);
    inter.abs() - intra.abs()
}

/// Largest k-grid used by [`winding_number`] before declaring the input
/// numerically gapless.
const MAX_WINDING_GRID: usize = 1 << 26;

/// Winding of `h(k) = mu + nu e^{ik}` around the origin over one Brillouin
/// zone, by accumulating wrapped phase increments on a k-grid fine enough
/// that no increment can exceed a quarter turn.
pub fn winding_number(mu: f64, nu: f64) -> Result<i32> {
    use std::f64::consts::{PI, TAU};

    if !mu.is_finite() || !nu.is_finite() {
        return Err(Error::Domain {
            field: "mu/nu",
            value: if mu.is_finite() { nu } else { mu },
            constraint: "finite",
        });
    }
    let gap = (nu.abs() - mu.abs()).abs();
    if gap == 0.0 {
        return Err(Error::Degenerate(mu.abs()));
    }
    // Chord between neighbouring grid points is |nu| dk; keeping it below
    // gap / 2 bounds every phase increment well under pi.
    let needed = (2.0 * TAU * nu.abs() / gap).ceil();
    if needed > MAX_WINDING_GRID as f64 {
        return Err(Error::Degenerate(mu.abs()));
    }
    let points = (needed as usize).max(64);

    let phase = |j: usize| {
        let k = TAU * j as f64 / points as f64;
        (nu * k.sin()).atan2(mu + nu * k.cos())
    };
    let mut total = 0.0;
    let mut prev = phase(0);
    for j in 1..=points {
        let cur = if j == points { phase(0) } else { phase(j) };
        let mut step = cur - prev;
        if step > PI {
            step -= TAU;
        } else if step <= -PI {
            step += TAU;
        }
        total += step;
        prev = cur;
    }
    Ok((total / TAU).round() as i32)
}
