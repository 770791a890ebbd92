//! CSV writers for the time series, field snapshots and operator dumps.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use kssav_core::{CsrMatrix, EnergyRecord, Mesh};

use crate::format::g17;

pub const TIMESERIES_HEADER: &str =
    "t,E,diss,mass_u,min_u,max_u,min_c,max_c,r,sqrt_e1,drift,peclet,cond_pos,cond_diff,flags";

/// Violations noted for one recorded state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepFlags {
    pub peclet: bool,
    pub positivity: bool,
    pub diffusion: bool,
    /// `E^{n+1} > E^n` beyond tolerance.
    pub energy_increase: bool,
    /// `E^{n+1} - E^n > -dt diss` beyond tolerance.
    pub dissipation: bool,
    pub r_nonpositive: bool,
}

impl StepFlags {
    pub fn any(&self) -> bool {
        self.peclet
            || self.positivity
            || self.diffusion
            || self.energy_increase
            || self.dissipation
            || self.r_nonpositive
    }

    /// Whether the step-size conditions for `0 <= u <= 1` all held.
    pub fn conditions_hold(&self) -> bool {
        !(self.peclet || self.positivity || self.diffusion)
    }

    pub fn energy_ok(&self) -> bool {
        !(self.energy_increase || self.dissipation)
    }

    /// `ok`, or the `;`-separated names of the raised flags.
    pub fn label(&self) -> String {
        let names = [
            (self.peclet, "peclet"),
            (self.positivity, "pos"),
            (self.diffusion, "diff"),
            (self.energy_increase, "energy"),
            (self.dissipation, "dissipation"),
            (self.r_nonpositive, "r_nonpos"),
        ];
        let raised: Vec<&str> = names.iter().filter(|(on, _)| *on).map(|(_, n)| *n).collect();
        if raised.is_empty() {
            "ok".to_string()
        } else {
            raised.join(";")
        }
    }
}

pub struct TimeseriesWriter {
    out: BufWriter<File>,
}

impl TimeseriesWriter {
    pub fn create(path: &Path) -> io::Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{TIMESERIES_HEADER}")?;
        Ok(TimeseriesWriter { out })
    }

    pub fn row(
        &mut self,
        rec: &EnergyRecord,
        peclet: f64,
        cond_pos: f64,
        cond_diff: f64,
        flags: &StepFlags,
    ) -> io::Result<()> {
        let fields = [
            rec.t,
            rec.e,
            rec.diss,
            rec.mass_u,
            rec.min_u,
            rec.max_u,
            rec.min_c,
            rec.max_c,
            rec.r,
            rec.sqrt_e1,
            rec.drift,
            peclet,
            cond_pos,
            cond_diff,
        ];
        for x in fields {
            write!(self.out, "{},", g17(x))?;
        }
        writeln!(self.out, "{}", flags.label())
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.out.flush()
    }
}

/// `node_id,x[,y],u,c`, one row per node.
pub fn write_snapshot(path: &Path, mesh: &Mesh, u: &[f64], c: &[f64]) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    if mesh.dim() == 1 {
        writeln!(out, "node_id,x,u,c")?;
    } else {
        writeln!(out, "node_id,x,y,u,c")?;
    }
    for i in 0..mesh.n_nodes() {
        write!(out, "{i}")?;
        for &x in mesh.node(i) {
            write!(out, ",{}", g17(x))?;
        }
        writeln!(out, ",{},{}", g17(u[i]), g17(c[i]))?;
    }
    out.flush()
}

/// Node coordinates as `node_id,x[,y]`.
pub fn write_nodes(path: &Path, mesh: &Mesh) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{}", if mesh.dim() == 1 { "node_id,x" } else { "node_id,x,y" })?;
    for i in 0..mesh.n_nodes() {
        write!(out, "{i}")?;
        for &x in mesh.node(i) {
            write!(out, ",{}", g17(x))?;
        }
        writeln!(out)?;
    }
    out.flush()
}

/// Element connectivity as `element_id,n0,n1[,n2]`.
pub fn write_elements(path: &Path, mesh: &Mesh) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{}", if mesh.dim() == 1 { "element_id,n0,n1" } else { "element_id,n0,n1,n2" })?;
    for e in 0..mesh.n_elements() {
        write!(out, "{e}")?;
        for &n in mesh.element(e) {
            write!(out, ",{n}")?;
        }
        writeln!(out)?;
    }
    out.flush()
}

/// Sparse matrix in coordinate form, `row,col,value`, zero-based.
pub fn write_coo(path: &Path, a: &CsrMatrix) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "row,col,value")?;
    for i in 0..a.n_rows() {
        let (cols, vals) = a.row(i);
        for (j, v) in cols.iter().zip(vals) {
            writeln!(out, "{i},{j},{}", g17(*v))?;
        }
    }
    out.flush()
}

/// Nodal vector as `node_id,value`.
pub fn write_vector(path: &Path, v: &[f64]) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "node_id,value")?;
    for (i, x) in v.iter().enumerate() {
        writeln!(out, "{i},{}", g17(*x))?;
    }
    out.flush()
}
