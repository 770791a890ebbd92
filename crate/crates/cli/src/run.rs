//! The time loop: build, initialise, step, record, write.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use kssav_core::diagnostics::{self, check_decay, stability_conditions};
use kssav_core::stepper::{compute_mu1, compute_mu2};
use kssav_core::{AssembledOperators, EnergyRecord, Mesh, MeshMetrics, SavStepper, StabilityReport, State};
use thiserror::Error;

use crate::config::{ConfigError, SimConfig};
use crate::init::{build_mesh, initial_state};
use crate::output::{write_snapshot, StepFlags, TimeseriesWriter};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("step {step}: {source}")]
    Step {
        step: u64,
        #[source]
        source: kssav_core::Error,
    },
    #[error("setup: {0}")]
    Setup(#[source] kssav_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub final_state: State,
    /// One record per state, the initial one included.
    pub energy: Vec<EnergyRecord>,
    /// One report per executed step, evaluated on the state it starts from.
    pub stability: Vec<StabilityReport>,
    /// One entry per record; the initial entry only carries the Peclet flag.
    pub flags: Vec<StepFlags>,
    pub metrics: MeshMetrics,
    /// Every file written, time series first.
    pub files: Vec<PathBuf>,
}

impl RunResult {
    pub fn steps(&self) -> usize {
        self.stability.len()
    }

    /// Number of records with an energy-decay flag raised.
    pub fn energy_warnings(&self) -> usize {
        self.flags.iter().filter(|f| !f.energy_ok()).count()
    }
}

/// Runs `config` to completion, writing `timeseries.csv` and
/// `snapshot_<step>.csv` (every `snapshot_every` steps and at the final
/// step) into `config.output_dir`.
pub fn run(config: &SimConfig) -> Result<RunResult, RunError> {
    config.validate()?;
    let out_dir = &config.output_dir;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    let mesh = build_mesh(config).map_err(RunError::Setup)?;
    let metrics = mesh.metrics();
    let ops = AssembledOperators::new(&mesh).map_err(RunError::Setup)?;
    let params = config.params;
    let mut state = initial_state(config, &mesh, &ops, &params).map_err(RunError::Setup)?;
    let mut stepper =
        SavStepper::new(&mesh, ops, params, config.dt, config.c_solver).map_err(RunError::Setup)?;

    let n_steps = config.n_steps();
    let ts_path = out_dir.join("timeseries.csv");
    let mut files = vec![ts_path.clone()];
    let mut ts = TimeseriesWriter::create(&ts_path).map_err(io_err(&ts_path))?;

    let peclet = params.chi_c * metrics.kappa_h / (2.0 * params.d_u);
    let first = EnergyRecord::observe(&state, stepper.ops(), &params, 0.0).map_err(RunError::Setup)?;
    let first_flags = StepFlags { peclet: peclet >= 1.0, ..StepFlags::default() };
    ts.row(&first, peclet, 0.0, 0.0, &first_flags).map_err(io_err(&ts_path))?;
    snapshot(out_dir, &mesh, &state, &mut files)?;

    let mut energy = Vec::with_capacity(n_steps as usize + 1);
    let mut stability = Vec::with_capacity(n_steps as usize);
    let mut flags = Vec::with_capacity(n_steps as usize + 1);
    energy.push(first);
    flags.push(first_flags);

    for n in 1..=n_steps {
        let step_err = |source| RunError::Step { step: n, source };
        let (mut next, rep) = stepper.step(&state).map_err(step_err)?;
        next.t = n as f64 * config.dt;

        let mu1 = compute_mu1(&next, &state, &rep.s, &params);
        let mu2 = compute_mu2(&next, &state, &params, config.dt);
        let ml = &stepper.ops().lumped;
        let diss = diagnostics::dissipation(&mu1, &mu2, stepper.mobility(), stepper.assembler(), ml, &params);
        let stab = stability_conditions(
            &state.c,
            next.r,
            rep.sqrt_e1,
            &metrics,
            &stepper.mobility().matrix,
            &params,
            config.dt,
        );
        let rec = EnergyRecord::observe(&next, stepper.ops(), &params, diss).map_err(step_err)?;
        let decay = check_decay(energy[energy.len() - 1].e, rec.e, config.dt, diss);
        let f = StepFlags {
            peclet: !stab.peclet_ok(),
            positivity: !stab.pos_ok(),
            diffusion: !stab.diff_ok(),
            energy_increase: !decay.monotone,
            dissipation: !decay.dissipative,
            r_nonpositive: !rep.r_positive,
        };
        ts.row(&rec, stab.peclet, stab.cond_pos, stab.cond_diff, &f).map_err(io_err(&ts_path))?;
        state = next;
        if n % config.snapshot_every == 0 || n == n_steps {
            snapshot(out_dir, &mesh, &state, &mut files)?;
        }
        energy.push(rec);
        stability.push(stab);
        flags.push(f);
    }
    ts.finish().map_err(io_err(&ts_path))?;

    Ok(RunResult { final_state: state, energy, stability, flags, metrics, files })
}

fn snapshot(dir: &Path, mesh: &Mesh, state: &State, files: &mut Vec<PathBuf>) -> Result<(), RunError> {
    let path = dir.join(format!("snapshot_{}.csv", state.step));
    write_snapshot(&path, mesh, &state.u, &state.c).map_err(io_err(&path))?;
    files.push(path);
    Ok(())
}
