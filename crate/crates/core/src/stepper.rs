//! One SAV time step.
//!
//! With lumped mass `ML`, mobility stiffness `A = A(u^n)` and
//! `s = g(u^n) / sqrt(E1[u^n])`, the step solves
//!
//! ```text
//! ML (U' - U) / dt = -chi_c A (B r' s - C)
//! r' - r           = 1/2 s^T ML (U' - U)
//! tau ML (C' - C) / dt = -(K C' + alpha ML C' - delta ML U')
//! ```
//!
//! The only coupling between `U'` and `r'` is the scalar
//! `theta = s^T ML U'`. Testing the first line with `s` gives it in closed
//! form:
//!
//! ```text
//! L1    = ML U / dt + chi_c A C + D_u (s^T ML U / 2 - r) A s
//! theta = dt s^T L1 / (1 + D_u dt / 2 * s^T A s)
//! ```
//!
//! after which `r' = r + (theta - s^T ML U) / 2`, `U'` needs one diagonal
//! solve and `C'` one solve with the constant SPD matrix
//! `tau ML / dt + K + alpha ML`. Since `chi_c B = D_u`, the entropic flux
//! carries `D_u` and the chemotactic flux carries `chi_c`.

use alloc::vec;
use alloc::vec::Vec;

use crate::assembly::{AssembledOperators, MobilityAssembler, MobilityOperator};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::model::{self, ModelParams};
use crate::sparse::{self, CsrMatrix, SkylineCholesky};

/// Relative residual required from the chemoattractant solve.
pub const C_SOLVER_TOLERANCE: f64 = 1e-10;

const CG_MAX_ITER_FACTOR: usize = 10;
const REFINEMENT_SWEEPS: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    /// Nodal cell density (volume fraction).
    pub u: Vec<f64>,
    /// Nodal chemoattractant concentration.
    pub c: Vec<f64>,
    /// Scalar auxiliary variable.
    pub r: f64,
    pub t: f64,
    pub step: u64,
}

impl State {
    pub fn new(u: Vec<f64>, c: Vec<f64>, r: f64) -> Self {
        State { u, c, r, t: 0.0, step: 0 }
    }

    pub fn n_nodes(&self) -> usize {
        self.u.len()
    }

    pub fn validate(&self, n_nodes: usize) -> Result<()> {
        for v in [&self.u, &self.c] {
            if v.len() != n_nodes {
                return Err(Error::LengthMismatch { expected: n_nodes, found: v.len() });
            }
        }
        if self.u.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("cell density"));
        }
        if self.c.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("chemoattractant"));
        }
        if !self.r.is_finite() || !self.t.is_finite() {
            return Err(Error::NonFinite("scalar state"));
        }
        Ok(())
    }
}

/// By-products of one step, used by the diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// `theta = s^T ML U'`.
    pub theta: f64,
    /// `1 + D_u dt / 2 * s^T A s`, never below one.
    pub denom: f64,
    /// Conjugate-gradient iterations; zero for the direct solver.
    pub c_solver_iters: usize,
    pub c_residual: f64,
    /// `s` evaluated at the old density.
    pub s: Vec<f64>,
    /// `E1` and its square root at the old density.
    pub e1: f64,
    pub sqrt_e1: f64,
    /// False when the new `r` is not strictly positive. Not an error: the
    /// step is still well defined, but the run should report it.
    pub r_positive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CSolverKind {
    #[default]
    Cholesky,
    ConjugateGradient,
}

#[derive(Debug, Clone)]
enum CSolver {
    Cholesky(SkylineCholesky),
    ConjugateGradient,
}

/// The constant chemoattractant operator `tau ML / dt + K + alpha ML`,
/// prepared for repeated solves at a fixed `dt`.
#[derive(Debug, Clone)]
pub struct COperator {
    matrix: CsrMatrix,
    solver: CSolver,
    dt: f64,
}

impl COperator {
    pub fn new(
        ops: &AssembledOperators,
        params: &ModelParams,
        dt: f64,
        kind: CSolverKind,
    ) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParams("dt must be positive and finite"));
        }
        let shift: Vec<f64> =
            ops.lumped.iter().map(|m| (params.tau / dt + params.alpha) * m).collect();
        let matrix = ops.stiffness.with_added_diagonal(&shift);
        let solver = match kind {
            CSolverKind::Cholesky => CSolver::Cholesky(SkylineCholesky::factor(&matrix)?),
            CSolverKind::ConjugateGradient => {
                if let Some(row) = matrix.diagonal().iter().position(|&d| !(d > 0.0)) {
                    return Err(Error::FactorizationBreakdown { row });
                }
                CSolver::ConjugateGradient
            }
        };
        Ok(COperator { matrix, solver, dt })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Solves with `guess` as the CG starting point. Returns the solution,
    /// the iteration count and the final relative residual.
    pub fn solve(&self, rhs: &[f64], guess: &[f64]) -> Result<(Vec<f64>, usize, f64)> {
        match &self.solver {
            CSolver::Cholesky(chol) => {
                let mut x = rhs.to_vec();
                chol.solve_in_place(&mut x);
                let mut res = sparse::relative_residual(&self.matrix, &x, rhs);
                for _ in 0..REFINEMENT_SWEEPS {
                    if res <= C_SOLVER_TOLERANCE {
                        break;
                    }
                    let ax = self.matrix.mul_vec(&x);
                    let mut d: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
                    chol.solve_in_place(&mut d);
                    x.iter_mut().zip(&d).for_each(|(xi, di)| *xi += di);
                    res = sparse::relative_residual(&self.matrix, &x, rhs);
                }
                if !(res <= C_SOLVER_TOLERANCE) {
                    return Err(Error::SolverNotConverged { iterations: 0, residual: res });
                }
                Ok((x, 0, res))
            }
            CSolver::ConjugateGradient => {
                let mut x = guess.to_vec();
                let max_iter = CG_MAX_ITER_FACTOR * rhs.len().max(10);
                let out =
                    sparse::conjugate_gradient(&self.matrix, rhs, &mut x, C_SOLVER_TOLERANCE, max_iter)?;
                Ok((x, out.iterations, out.relative_residual))
            }
        }
    }
}

/// Chemoattractant operator with the default (direct) solver.
pub fn build_c_operator(ops: &AssembledOperators, params: &ModelParams, dt: f64) -> Result<COperator> {
    COperator::new(ops, params, dt, CSolverKind::default())
}

/// Owns everything a run needs to advance a [`State`]: the constant
/// operators, the factored chemoattractant matrix and the mobility matrix
/// workspace.
#[derive(Debug, Clone)]
pub struct SavStepper {
    assembler: MobilityAssembler,
    ops: AssembledOperators,
    params: ModelParams,
    c_op: COperator,
    mobility: MobilityOperator,
}

impl SavStepper {
    pub fn new(
        mesh: &Mesh,
        ops: AssembledOperators,
        params: ModelParams,
        dt: f64,
        kind: CSolverKind,
    ) -> Result<Self> {
        params.validate()?;
        if ops.n_nodes() != mesh.n_nodes() {
            return Err(Error::LengthMismatch { expected: mesh.n_nodes(), found: ops.n_nodes() });
        }
        let assembler = MobilityAssembler::new(mesh);
        let c_op = COperator::new(&ops, &params, dt, kind)?;
        let mobility = assembler.assemble(&vec![0.0; mesh.n_nodes()], model::phi)?;
        Ok(SavStepper { assembler, ops, params, c_op, mobility })
    }

    pub fn ops(&self) -> &AssembledOperators {
        &self.ops
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn assembler(&self) -> &MobilityAssembler {
        &self.assembler
    }

    pub fn c_operator(&self) -> &COperator {
        &self.c_op
    }

    pub fn dt(&self) -> f64 {
        self.c_op.dt()
    }

    /// Rebuilds the chemoattractant operator for a new time step.
    pub fn set_dt(&mut self, dt: f64, kind: CSolverKind) -> Result<()> {
        self.c_op = COperator::new(&self.ops, &self.params, dt, kind)?;
        Ok(())
    }

    /// Mobility operator `A(u^n)` used by the most recent step.
    pub fn mobility(&self) -> &MobilityOperator {
        &self.mobility
    }

    /// `x^T A x` for the most recent mobility operator.
    pub fn mobility_quadratic_form(&self, x: &[f64]) -> f64 {
        self.assembler.quadratic_form(&self.mobility, x)
    }

    /// Advances `state` by the operator's `dt`.
    pub fn step(&mut self, state: &State) -> Result<(State, StepReport)> {
        self.step_with_dt(state, self.c_op.dt())
    }

    /// Advances `state` by `dt`, which must match the operator.
    pub fn step_with_dt(&mut self, state: &State, dt: f64) -> Result<(State, StepReport)> {
        if dt != self.c_op.dt() {
            return Err(Error::TimeStepMismatch { built_for: self.c_op.dt(), requested: dt });
        }
        let n = self.ops.n_nodes();
        state.validate(n)?;
        let p = &self.params;
        let ml = &self.ops.lumped;

        self.assembler.refresh(&state.u, model::phi, &mut self.mobility)?;
        let eval = model::energy_e1(&state.u, ml, p)?;
        let s = model::s_vector(&eval)?;

        let a_s = apply_zero_row_sum(&self.mobility.matrix, &s);
        let a_c = apply_zero_row_sum(&self.mobility.matrix, &state.c);
        let s_ml_u: f64 = s.iter().zip(ml).zip(&state.u).map(|((s, m), u)| s * m * u).sum();
        let s_a_s = self.assembler.quadratic_form(&self.mobility, &s);
        let s_a_c = sparse::dot(&s, &a_c);

        // s^T L1, expanded so that s^T ML ML^-1 never forms.
        let s_l1 = s_ml_u / dt + p.chi_c * s_a_c + p.d_u * (0.5 * s_ml_u - state.r) * s_a_s;
        let denom = 1.0 + 0.5 * p.d_u * dt * s_a_s;
        let theta = dt * s_l1 / denom;
        let r_next = state.r + 0.5 * (theta - s_ml_u);

        // ML^-1 (dt L1 - D_u dt / 2 theta A s), rewritten as an increment of
        // U using D_u (s^T ML U / 2 - r - theta / 2) = -D_u r'.
        let u_next: Vec<f64> = (0..n)
            .map(|i| state.u[i] + dt / ml[i] * (p.chi_c * a_c[i] - p.d_u * r_next * a_s[i]))
            .collect();

        let coef = p.tau / dt;
        let rhs: Vec<f64> =
            (0..n).map(|i| ml[i] * (coef * state.c[i] + p.delta * u_next[i])).collect();
        let (c_next, iters, residual) = self.c_op.solve(&rhs, &state.c)?;

        if !theta.is_finite() || !r_next.is_finite() {
            return Err(Error::NonFinite("scalar auxiliary update"));
        }
        if u_next.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("updated cell density"));
        }
        if c_next.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("updated chemoattractant"));
        }

        let next = State { u: u_next, c: c_next, r: r_next, t: state.t + dt, step: state.step + 1 };
        let report = StepReport {
            theta,
            denom,
            c_solver_iters: iters,
            c_residual: residual,
            s,
            e1: eval.e1,
            sqrt_e1: eval.sqrt_e1,
            r_positive: r_next > 0.0,
        };
        Ok((next, report))
    }
}

/// `A x` for a matrix with zero row sums, as `sum_j A_ij (x_j - x_i)`, so
/// that constant vectors map to exactly zero.
fn apply_zero_row_sum(a: &CsrMatrix, x: &[f64]) -> Vec<f64> {
    (0..a.n_rows())
        .map(|i| {
            let (cols, vals) = a.row(i);
            cols.iter().zip(vals).filter(|(&j, _)| j != i).map(|(&j, &v)| v * (x[j] - x[i])).sum()
        })
        .collect()
}

/// Nodal chemical potential `mu1 = B r' s - c^n`.
pub fn compute_mu1(next: &State, prev: &State, s: &[f64], params: &ModelParams) -> Vec<f64> {
    let br = params.b() * next.r;
    s.iter().zip(&prev.c).map(|(s, c)| br * s - c).collect()
}

/// Nodal `mu2 = -tau (c' - c) / dt`.
pub fn compute_mu2(next: &State, prev: &State, params: &ModelParams, dt: f64) -> Vec<f64> {
    next.c.iter().zip(&prev.c).map(|(cn, c)| -params.tau * (cn - c) / dt).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::vec;

    fn setup(mesh: &Mesh, params: ModelParams, dt: f64) -> SavStepper {
        let ops = AssembledOperators::new(mesh).unwrap();
        SavStepper::new(mesh, ops, params, dt, CSolverKind::Cholesky).unwrap()
    }

    #[test]
    fn uniform_state_relaxes_only_c() {
        let mesh = Mesh::interval(0.0, 2.0, 8).unwrap();
        let params = ModelParams::default();
        let dt = 0.01;
        let mut st = setup(&mesh, params, dt);
        let (ubar, cbar) = (0.3, 0.2);
        let r0 = model::r_init(&[ubar; 9], &st.ops().lumped, &params).unwrap();
        let state = State::new(vec![ubar; 9], vec![cbar; 9], r0);
        let (next, rep) = st.step(&state).unwrap();
        assert_eq!(next.u, state.u);
        assert_eq!(next.r, state.r);
        let expect = (params.tau / dt * cbar + params.delta * ubar) / (params.tau / dt + params.alpha);
        for c in &next.c {
            assert!((c - expect).abs() < 1e-13);
        }
        assert_eq!(rep.denom, 1.0);
        assert_eq!(next.step, 1);
        assert_eq!(next.t, dt);

        let mu2 = compute_mu2(&next, &state, &params, dt);
        for m in &mu2 {
            assert!((m + params.tau * (expect - cbar) / dt).abs() < 1e-10);
        }
    }

    #[test]
    fn mu1_examples() {
        let params = ModelParams::default();
        let prev = State::new(vec![0.5; 3], vec![0.0; 3], 1.0);
        assert_eq!(compute_mu1(&prev, &prev, &[0.0; 3], &params), vec![0.0; 3]);
        let prev = State::new(vec![0.5; 3], vec![0.7; 3], 1.0);
        assert_eq!(compute_mu1(&prev, &prev, &[0.0; 3], &params), vec![-0.7; 3]);
        let steady = compute_mu2(&prev, &prev, &params, 0.1);
        assert_eq!(steady, vec![-0.0; 3]);
    }

    #[test]
    fn c_operator_properties() {
        let mesh = Mesh::interval(0.0, 1.0, 6).unwrap();
        let ops = AssembledOperators::new(&mesh).unwrap();
        let params = ModelParams { alpha: 0.0, tau: 1.0, ..ModelParams::default() };
        let dt = 0.05;
        for kind in [CSolverKind::Cholesky, CSolverKind::ConjugateGradient] {
            let op = COperator::new(&ops, &params, dt, kind).unwrap();
            assert!(op.matrix().audit_symmetry(0.0));
            let rhs: Vec<f64> = ops.lumped.iter().map(|m| m / dt * 0.8).collect();
            let (c, _, res) = op.solve(&rhs, &[0.0; 7]).unwrap();
            assert!(res <= C_SOLVER_TOLERANCE);
            for ci in c {
                assert!((ci - 0.8).abs() < 1e-9);
            }
        }
        assert!(COperator::new(&ops, &params, 0.0, CSolverKind::Cholesky).is_err());
        assert!(COperator::new(&ops, &params, f64::NAN, CSolverKind::Cholesky).is_err());
    }

    #[test]
    fn dt_mismatch_is_rejected() {
        let mesh = Mesh::interval(0.0, 1.0, 4).unwrap();
        let mut st = setup(&mesh, ModelParams::default(), 0.01);
        let state = State::new(vec![0.5; 5], vec![0.0; 5], 1.0);
        assert!(matches!(st.step_with_dt(&state, 0.02), Err(Error::TimeStepMismatch { .. })));
        st.set_dt(0.02, CSolverKind::Cholesky).unwrap();
        assert!(st.step_with_dt(&state, 0.02).is_ok());
    }

    #[test]
    fn invalid_states_are_rejected() {
        let mesh = Mesh::interval(0.0, 1.0, 4).unwrap();
        let mut st = setup(&mesh, ModelParams::default(), 0.01);
        let bad = State::new(vec![0.5; 4], vec![0.0; 5], 1.0);
        assert!(matches!(st.step(&bad), Err(Error::LengthMismatch { .. })));
        let bad = State::new(vec![0.5, f64::NAN, 0.5, 0.5, 0.5], vec![0.0; 5], 1.0);
        assert!(matches!(st.step(&bad), Err(Error::NonFinite(_))));
    }

    #[test]
    fn cholesky_and_cg_steps_agree() {
        let mesh = Mesh::rectangle(1.0, 1.0, 6, 6).unwrap();
        let n = mesh.n_nodes();
        let params = ModelParams::default();
        let u: Vec<f64> = (0..n).map(|i| 0.5 + 0.05 * libm::sin(i as f64)).collect();
        let c: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * libm::cos(i as f64)).collect();
        let ops = AssembledOperators::new(&mesh).unwrap();
        let r0 = model::r_init(&u, &ops.lumped, &params).unwrap();
        let state = State::new(u, c, r0);
        let mut direct = SavStepper::new(&mesh, ops.clone(), params, 1e-3, CSolverKind::Cholesky).unwrap();
        let mut cg = SavStepper::new(&mesh, ops, params, 1e-3, CSolverKind::ConjugateGradient).unwrap();
        let (a, ra) = direct.step(&state).unwrap();
        let (b, rb) = cg.step(&state).unwrap();
        assert_eq!(a.u, b.u);
        assert!(rb.c_solver_iters > 0 && ra.c_solver_iters == 0);
        for (x, y) in a.c.iter().zip(&b.c) {
            assert!((x - y).abs() < 1e-8);
        }
    }
}
