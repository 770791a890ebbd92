//! Pre-run inspection: mesh quality and the step-size conditions evaluated
//! on the initial state.

use std::fmt;
use std::fs;
use std::path::Path;

use kssav_core::diagnostics::stability_conditions;
use kssav_core::{model, AssembledOperators, Mesh, MeshMetrics, MobilityAssembler, StabilityReport};

use crate::config::SimConfig;
use crate::init::{build_mesh, initial_state};
use crate::output::{write_coo, write_elements, write_nodes, write_vector};
use crate::run::RunError;

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub dim: usize,
    pub n_nodes: usize,
    pub n_elements: usize,
    pub measure: f64,
    pub acute: bool,
    pub metrics: MeshMetrics,
    pub n_steps: u64,
    /// Conditions for the first step, taking `r^1 ~ r^0`.
    pub initial: StabilityReport,
    /// Largest `dt` meeting the diffusion condition while `r ~ sqrt(E1)`.
    pub dt_diffusion_limit: f64,
}

pub fn check(config: &SimConfig) -> Result<(CheckReport, Mesh, AssembledOperators), RunError> {
    config.validate()?;
    let mesh = build_mesh(config).map_err(RunError::Setup)?;
    let metrics = mesh.metrics();
    let ops = AssembledOperators::new(&mesh).map_err(RunError::Setup)?;
    let params = config.params;
    let state = initial_state(config, &mesh, &ops, &params).map_err(RunError::Setup)?;
    let a = MobilityAssembler::new(&mesh).assemble(&state.u, model::phi).map_err(RunError::Setup)?;
    let sqrt_e1 = model::energy_e1(&state.u, &ops.lumped, &params).map_err(RunError::Setup)?.sqrt_e1;
    let initial = stability_conditions(&state.c, state.r, sqrt_e1, &metrics, &a.matrix, &params, config.dt);
    let kappa = metrics.kappa_h;
    let report = CheckReport {
        dim: mesh.dim(),
        n_nodes: mesh.n_nodes(),
        n_elements: mesh.n_elements(),
        measure: ops.measure(),
        acute: mesh.dim() == 1 || mesh.is_acute(),
        dt_diffusion_limit: kappa * kappa / (params.d_u * metrics.g_h as f64),
        metrics,
        n_steps: config.n_steps(),
        initial,
    };
    Ok((report, mesh, ops))
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "VIOLATED"
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.metrics;
        writeln!(f, "mesh: dim {} nodes {} elements {} measure {}", self.dim, self.n_nodes, self.n_elements, self.measure)?;
        writeln!(f, "  h {:.6e}  h_min {:.6e}  h/h_min {:.4}", m.h, m.h_min, m.quasi_uniformity_ratio())?;
        writeln!(f, "  kappa_h {:.6e}  G_h {}  acute {}", m.kappa_h, m.g_h, self.acute)?;
        writeln!(f, "steps: {}", self.n_steps)?;
        let s = &self.initial;
        writeln!(f, "conditions at t = 0:")?;
        writeln!(f, "  peclet    {:.6e}  (< 1)  {}", s.peclet, verdict(s.peclet_ok()))?;
        writeln!(f, "  cond_pos  {:.6e}  (<= 1) {}", s.cond_pos, verdict(s.pos_ok()))?;
        writeln!(f, "  cond_diff {:.6e}  (<= 1) {}", s.cond_diff, verdict(s.diff_ok()))?;
        write!(f, "  dt limit from diffusion ~ {:.6e}", self.dt_diffusion_limit)
    }
}

/// Writes `nodes.csv`, `elements.csv`, `lumped_mass.csv` and the mass and
/// stiffness matrices as `mass.coo.csv`, `stiffness.coo.csv`.
pub fn dump(dir: &Path, mesh: &Mesh, ops: &AssembledOperators) -> Result<(), RunError> {
    let wrap = |path: &Path| {
        let path = path.to_path_buf();
        move |source| RunError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(wrap(dir))?;
    let p = dir.join("nodes.csv");
    write_nodes(&p, mesh).map_err(wrap(&p))?;
    let p = dir.join("elements.csv");
    write_elements(&p, mesh).map_err(wrap(&p))?;
    let p = dir.join("lumped_mass.csv");
    write_vector(&p, &ops.lumped).map_err(wrap(&p))?;
    let p = dir.join("mass.coo.csv");
    write_coo(&p, &ops.mass).map_err(wrap(&p))?;
    let p = dir.join("stiffness.coo.csv");
    write_coo(&p, &ops.stiffness).map_err(wrap(&p))?;
    Ok(())
}
