//! Per-step monitors: modified energy, dissipation, mass, field bounds and
//! the time-step conditions under which the scheme keeps `0 <= u <= 1`.
//!
//! Every pairing uses the lumped mass, exactly as the stepper does, so the
//! energy inequality holds for the implemented algebra up to the
//! chemoattractant solver residual.

use crate::assembly::{AssembledOperators, MobilityAssembler, MobilityOperator};
use crate::error::Result;
use crate::mesh::MeshMetrics;
use crate::model::{self, ModelParams};
use crate::sparse::{self, CsrMatrix};
use crate::stepper::State;

/// Relative slack on the energy decay checks, scaled by `max(1, |E|)`.
pub const ENERGY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRecord {
    pub t: f64,
    /// Modified discrete energy.
    pub e: f64,
    /// Dissipation rate of the step that produced this state (zero for the
    /// initial record).
    pub diss: f64,
    pub mass_u: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub min_c: f64,
    pub max_c: f64,
    pub r: f64,
    pub sqrt_e1: f64,
    /// `|r - sqrt(E1)|`.
    pub drift: f64,
}

impl EnergyRecord {
    pub fn observe(
        state: &State,
        ops: &AssembledOperators,
        params: &ModelParams,
        diss: f64,
    ) -> Result<Self> {
        let sqrt_e1 = model::energy_e1(&state.u, &ops.lumped, params)?.sqrt_e1;
        let (min_u, max_u) = extrema(&state.u);
        let (min_c, max_c) = extrema(&state.c);
        Ok(EnergyRecord {
            t: state.t,
            e: discrete_energy(state, ops, params),
            diss,
            mass_u: mass(&state.u, &ops.lumped),
            min_u,
            max_u,
            min_c,
            max_c,
            r: state.r,
            sqrt_e1,
            drift: (state.r - sqrt_e1).abs(),
        })
    }
}

fn extrema(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// `E = 1/2 (c^T K c + alpha c^T ML c) + B r^2 - c^T ML u`.
pub fn discrete_energy(state: &State, ops: &AssembledOperators, params: &ModelParams) -> f64 {
    let kc = ops.stiffness.mul_vec(&state.c);
    let c_k_c = sparse::dot(&state.c, &kc);
    let (c_ml_c, c_ml_u) = ops
        .lumped
        .iter()
        .zip(&state.c)
        .zip(&state.u)
        .fold((0.0, 0.0), |(cc, cu), ((m, c), u)| (cc + m * c * c, cu + m * c * u));
    0.5 * (c_k_c + params.alpha * c_ml_c) + params.b() * state.r * state.r - c_ml_u
}

/// Energy dissipation rate of one step,
/// `chi_c mu1^T A mu1 + mu2^T ML mu2 / tau`.
///
/// The factors `chi_c` and `1 / tau` are the mobilities of the two gradient
/// flows; with the scheme's coefficients the energy then satisfies
/// `E' - E <= -dt * dissipation`.
pub fn dissipation(
    mu1: &[f64],
    mu2: &[f64],
    mobility: &MobilityOperator,
    assembler: &MobilityAssembler,
    lumped: &[f64],
    params: &ModelParams,
) -> f64 {
    let grad_part = assembler.quadratic_form(mobility, mu1);
    let l2_part: f64 = lumped.iter().zip(mu2).map(|(m, x)| m * x * x).sum();
    params.chi_c * grad_part + l2_part / params.tau
}

/// Lumped cell mass `sum_i ML_i u_i`.
pub fn mass(u: &[f64], lumped: &[f64]) -> f64 {
    u.iter().zip(lumped).map(|(u, m)| u * m).sum()
}

/// Outcome of the two energy checks for one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecayCheck {
    /// `E' <= E + tol`.
    pub monotone: bool,
    /// `E' - E <= -dt * dissipation + tol`.
    pub dissipative: bool,
}

pub fn check_decay(e_prev: f64, e_next: f64, dt: f64, diss: f64) -> DecayCheck {
    let tol = ENERGY_TOLERANCE * e_prev.abs().max(1.0);
    DecayCheck {
        monotone: e_next <= e_prev + tol,
        dissipative: e_next - e_prev <= -dt * diss + tol,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    /// Mesh Peclet number `chi_c kappa_h / (2 D_u)`; must stay below one.
    pub peclet: f64,
    /// Largest `|A_ij| |c_j - c_i|` over edges.
    pub b_inf: f64,
    /// `dt chi_c G_h b_inf / kappa_h`; must not exceed one.
    pub cond_pos: f64,
    /// `dt D_u G_h r' / (kappa_h^2 sqrt(E1[u^n]))`; must not exceed one.
    pub cond_diff: f64,
}

impl StabilityReport {
    pub fn peclet_ok(&self) -> bool {
        self.peclet < 1.0
    }

    pub fn pos_ok(&self) -> bool {
        self.cond_pos <= 1.0
    }

    pub fn diff_ok(&self) -> bool {
        self.cond_diff <= 1.0
    }

    pub fn all_ok(&self) -> bool {
        self.peclet_ok() && self.pos_ok() && self.diff_ok()
    }
}

/// Evaluates the sufficient conditions for `0 <= u' <= 1`. `c_prev` and
/// `a` are the chemoattractant and mobility matrix the step starts from;
/// `r_next` is the updated auxiliary variable and `sqrt_e1_prev` is
/// `sqrt(E1)` at the old density.
pub fn stability_conditions(
    c_prev: &[f64],
    r_next: f64,
    sqrt_e1_prev: f64,
    metrics: &MeshMetrics,
    a: &CsrMatrix,
    params: &ModelParams,
    dt: f64,
) -> StabilityReport {
    let kappa = metrics.kappa_h;
    let g_h = metrics.g_h as f64;
    let b_inf = (0..a.n_rows())
        .flat_map(|i| {
            let (cols, vals) = a.row(i);
            cols.iter()
                .zip(vals)
                .filter(move |(&j, _)| j != i)
                .map(move |(&j, &v)| v.abs() * (c_prev[j] - c_prev[i]).abs())
        })
        .fold(0.0, f64::max);
    StabilityReport {
        peclet: params.chi_c * kappa / (2.0 * params.d_u),
        b_inf,
        cond_pos: dt * params.chi_c * g_h * b_inf / kappa,
        cond_diff: dt * params.d_u * g_h * r_next.abs() / (kappa * kappa * sqrt_e1_prev),
    }
}

/// Extrema of a nodal vector as `(min, max)`.
pub fn bounds(v: &[f64]) -> (f64, f64) {
    extrema(v)
}
