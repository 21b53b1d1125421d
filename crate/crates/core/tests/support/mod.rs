//! Reference integrators used as oracles. The equations of motion are coded
//! here from scratch on a flat real vector, sharing nothing with the crate's
//! own kernel.

#![allow(dead_code, clippy::needless_range_loop)]

use nlrl_core::ModelKind;

/// Flat layout per cell `i`: `[Re a, Im a, Re b, Im b]`, followed by one
/// decay accumulator per cell.
#[derive(Debug, Clone, Copy)]
pub struct Model {
    pub kind: ModelKind,
    pub mu: f64,
    pub nu: f64,
    pub gamma: f64,
    pub u: f64,
    pub half_width: usize,
}

pub struct RefState {
    pub a: Vec<(f64, f64)>,
    pub b: Vec<(f64, f64)>,
    pub decay: Vec<f64>,
}

impl RefState {
    pub fn norm(&self) -> f64 {
        self.a
            .iter()
            .chain(&self.b)
            .map(|&(r, i)| r * r + i * i)
            .sum()
    }

    pub fn mean_displacement(&self) -> f64 {
        let n = (self.decay.len() / 2) as f64;
        self.decay
            .iter()
            .enumerate()
            .map(|(i, d)| (i as f64 - n) * d)
            .sum()
    }
}

impl Model {
    pub fn cells(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn dim(&self) -> usize {
        5 * self.cells()
    }

    /// Single particle on the neutral site of cell 0.
    pub fn central_b(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        y[4 * self.half_width + 2] = 1.0;
        y
    }

    pub fn unpack(&self, y: &[f64]) -> RefState {
        let c = self.cells();
        RefState {
            a: (0..c).map(|i| (y[4 * i], y[4 * i + 1])).collect(),
            b: (0..c).map(|i| (y[4 * i + 2], y[4 * i + 3])).collect(),
            decay: y[4 * c..].to_vec(),
        }
    }

    /// Right-hand side written out bond by bond: cell `i` has the intracell
    /// bond `a_i -- b_i` and the intercell bond `b_{i-1} -- a_i`.
    pub fn deriv(&self, y: &[f64], out: &mut [f64]) {
        let c = self.cells();
        let sq = |re: f64, im: f64| re * re + im * im;
        let pa = |i: usize| sq(y[4 * i], y[4 * i + 1]);
        let pb = |i: usize| sq(y[4 * i + 2], y[4 * i + 3]);
        let u = self.u;
        // Effective coupling on the intracell bond of cell i.
        let intra = |i: usize| -> f64 {
            match self.kind {
                ModelKind::B => self.mu - u * (pa(i) + pb(i)),
                ModelKind::D => self.mu - u * pa(i),
                _ => self.mu,
            }
        };
        // Effective coupling on the intercell bond into cell i (i >= 1).
        let inter = |i: usize| -> f64 {
            match self.kind {
                ModelKind::A => self.nu - u * (pa(i) + pb(i - 1)),
                ModelKind::C => self.nu - u * pa(i),
                ModelKind::E => self.nu - u * pb(i - 1),
                _ => self.nu,
            }
        };
        out.iter_mut().for_each(|x| *x = 0.0);
        // d/dt a += i J b and d/dt b += i J a for each bond with coupling J.
        let bond = |out: &mut [f64], ia: usize, ib: usize, j: f64| {
            let (ar, ai) = (y[4 * ia], y[4 * ia + 1]);
            let (br, bi) = (y[4 * ib + 2], y[4 * ib + 3]);
            out[4 * ia] += -j * bi;
            out[4 * ia + 1] += j * br;
            out[4 * ib + 2] += -j * ai;
            out[4 * ib + 3] += j * ar;
        };
        for i in 0..c {
            bond(out, i, i, intra(i));
            if i >= 1 {
                bond(out, i, i - 1, inter(i));
            }
        }
        for i in 0..c {
            out[4 * i] -= self.gamma * y[4 * i];
            out[4 * i + 1] -= self.gamma * y[4 * i + 1];
            out[4 * c + i] = 2.0 * self.gamma * pa(i);
        }
    }
}

/// Explicit Euler with a fixed step.
pub fn euler(model: &Model, y0: &[f64], t_end: f64, dt: f64) -> Vec<f64> {
    let steps = (t_end / dt).round() as usize;
    let mut y = y0.to_vec();
    let mut k = vec![0.0; y.len()];
    for _ in 0..steps {
        model.deriv(&y, &mut k);
        for (yi, ki) in y.iter_mut().zip(&k) {
            *yi += dt * ki;
        }
    }
    y
}

/// Adaptive Dormand-Prince 5(4) with a mixed absolute/relative tolerance.
/// The system is autonomous, so the stage times are not needed.
pub fn dopri(model: &Model, y0: &[f64], t_end: f64, tol: f64) -> Vec<f64> {
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const B5: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut t = 0.0;
    let mut h = 1e-3;
    while t < t_end {
        if t + h > t_end {
            h = t_end - t;
        }
        model.deriv(&y, &mut k[0]);
        for s in 1..7 {
            for j in 0..n {
                tmp[j] = y[j] + h * (0..s).map(|r| A[s][r] * k[r][j]).sum::<f64>();
            }
            let (_, rest) = k.split_at_mut(s);
            model.deriv(&tmp, &mut rest[0]);
        }
        let mut err: f64 = 0.0;
        for j in 0..n {
            let y5 = y[j] + h * (0..7).map(|s| B5[s] * k[s][j]).sum::<f64>();
            let y4 = y[j] + h * (0..7).map(|s| B4[s] * k[s][j]).sum::<f64>();
            let scale = tol * (1.0 + y[j].abs().max(y5.abs()));
            err = err.max((y5 - y4).abs() / scale);
            tmp[j] = y5;
        }
        if err <= 1.0 {
            t += h;
            y.copy_from_slice(&tmp);
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    y
}
