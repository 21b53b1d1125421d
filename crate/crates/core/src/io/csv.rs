//! CSV tables. Floats are written in shortest round-trip form (exponent
//! notation for very small or large magnitudes), so parsing a file back
//! yields the exact same `f64` values.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::lattice::{contrast_at, ModelKind};
use crate::observables::{
    displacement_of_state, ContrastSeries, DisplacementSeries, OccupancyGrid,
};
use crate::sweeps::SweepResult;

pub const SWEEP_HEADER: &str =
    "model,delta_g,U,gamma_a,mean_displacement,residual_norm,truncation_flag";
pub const TRAJECTORY_HEADER: &str = "t,m,abs_a_sq,abs_b_sq,Z_m,Delta_m_t,norm";
pub const DISPLACEMENT_HEADER: &str = "t,Delta_m_t";
pub const CONTRAST_HEADER: &str = "t,m,Z_m";
pub const OCCUPANCY_HEADER: &str = "t,m,occupancy";

/// Anything that can be written as a CSV table with a fixed header.
pub trait CsvTable {
    fn header(&self) -> &'static str;
    fn write_rows(&self, w: &mut dyn Write) -> io::Result<()>;
}

pub fn write_csv<T: CsvTable + ?Sized>(table: &T, w: &mut dyn Write) -> io::Result<()> {
    writeln!(w, "{}", table.header())?;
    table.write_rows(w)
}

pub fn to_csv_string<T: CsvTable + ?Sized>(table: &T) -> String {
    let mut buf = Vec::new();
    write_csv(table, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV output is UTF-8")
}

pub fn emit_csv<T: CsvTable + ?Sized>(table: &T, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_csv(table, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

impl CsvTable for SweepResult {
    fn header(&self) -> &'static str {
        SWEEP_HEADER
    }

    fn write_rows(&self, w: &mut dyn Write) -> io::Result<()> {
        for curve in &self.curves {
            for p in &curve.points {
                writeln!(
                    w,
                    "{},{:?},{:?},{:?},{:?},{:?},{}",
                    self.spec.model,
                    p.delta_g,
                    curve.u,
                    self.spec.gamma_a,
                    p.mean_displacement,
                    p.residual_norm,
                    p.truncation_unsafe
                )?;
            }
        }
        Ok(())
    }
}

/// Long format, one row per (sample, cell).
impl CsvTable for Trajectory {
    fn header(&self) -> &'static str {
        TRAJECTORY_HEADER
    }

    fn write_rows(&self, w: &mut dyn Write) -> io::Result<()> {
        for s in &self.samples {
            let dm = displacement_of_state(s);
            let norm = s.norm();
            for i in 0..s.len() {
                writeln!(
                    w,
                    "{:?},{},{:?},{:?},{:?},{:?},{:?}",
                    s.t,
                    s.cell_of(i),
                    s.a[i].norm_sqr(),
                    s.b[i].norm_sqr(),
                    contrast_at(&self.params, &s.a, &s.b, i),
                    dm,
                    norm
                )?;
            }
        }
        Ok(())
    }
}

impl CsvTable for DisplacementSeries {
    fn header(&self) -> &'static str {
        DISPLACEMENT_HEADER
    }

    fn write_rows(&self, w: &mut dyn Write) -> io::Result<()> {
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(w, "{t:?},{v:?}")?;
        }
        Ok(())
    }
}

impl CsvTable for ContrastSeries {
    fn header(&self) -> &'static str {
        CONTRAST_HEADER
    }

    fn write_rows(&self, w: &mut dyn Write) -> io::Result<()> {
        for (t, row) in self.times.iter().zip(&self.values) {
            for (m, z) in self.cells.iter().zip(row) {
                writeln!(w, "{t:?},{m},{z:?}")?;
            }
        }
        Ok(())
    }
}

impl CsvTable for OccupancyGrid {
    fn header(&self) -> &'static str {
        OCCUPANCY_HEADER
    }

    fn write_rows(&self, w: &mut dyn Write) -> io::Result<()> {
        for (t, row) in self.times.iter().zip(&self.values) {
            for (m, p) in self.cells.iter().zip(row) {
                writeln!(w, "{t:?},{m},{p:?}")?;
            }
        }
        Ok(())
    }
}

/// One parsed row of a sweep CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub model: ModelKind,
    pub delta_g: f64,
    pub u: f64,
    pub gamma_a: f64,
    pub mean_displacement: f64,
    pub residual_norm: f64,
    pub truncation_flag: bool,
}

/// Flattens a sweep into the rows its CSV holds.
pub fn sweep_rows(result: &SweepResult) -> Vec<SweepRow> {
    result
        .curves
        .iter()
        .flat_map(|curve| {
            curve.points.iter().map(move |p| SweepRow {
                model: result.spec.model,
                delta_g: p.delta_g,
                u: curve.u,
                gamma_a: result.spec.gamma_a,
                mean_displacement: p.mean_displacement,
                residual_norm: p.residual_norm,
                truncation_flag: p.truncation_unsafe,
            })
        })
        .collect()
}

pub fn read_sweep_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == SWEEP_HEADER => {}
        other => {
            return Err(Error::Config(format!(
                "unexpected sweep CSV header {:?}",
                other.unwrap_or("")
            )))
        }
    }
    let bad = |n: usize, what: &str| Error::Config(format!("sweep CSV line {n}: bad {what}"));
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let n = k + 2;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != 7 {
            return Err(bad(n, "field count"));
        }
        let num = |i: usize, what: &str| f[i].parse::<f64>().map_err(|_| bad(n, what));
        rows.push(SweepRow {
            model: f[0].parse().map_err(|_| bad(n, "model"))?,
            delta_g: num(1, "delta_g")?,
            u: num(2, "U")?,
            gamma_a: num(3, "gamma_a")?,
            mean_displacement: num(4, "mean_displacement")?,
            residual_norm: num(5, "residual_norm")?,
            truncation_flag: f[6].parse().map_err(|_| bad(n, "truncation_flag"))?,
        });
    }
    Ok(rows)
}
