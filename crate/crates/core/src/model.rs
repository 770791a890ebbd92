//! Physical model: parameters, volume-filling mobility, regularized entropy
//! and the scalar-auxiliary-variable energy.
//!
//! The free energy density is `F(u) = u ln u + (1 - u) ln(1 - u) + C`, with
//! derivative `g(u) = ln(u / (1 - u))` and `g'(u) = 1 / phi(u)`. Both are
//! evaluated at `clamp(u, eps, 1 - eps)` so they stay finite for any input.
//! The entropy part of the energy is `E1 = sum_i ML_i F(u_i)` (no `B`
//! factor; `B` multiplies `r` in the chemical potential instead).

use alloc::vec::Vec;
use core::f64::consts::LN_2;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Cell diffusion coefficient `D_u`.
    pub d_u: f64,
    /// Chemotactic sensitivity `chi_c`.
    pub chi_c: f64,
    /// Chemoattractant decay rate.
    pub alpha: f64,
    /// Chemoattractant production rate per unit cell density.
    pub delta: f64,
    /// Chemoattractant time scale.
    pub tau: f64,
    /// Additive constant in `F`; must exceed `ln 2` so that `F > 0`.
    pub c_shift: f64,
    /// Entropy regularization, in `(0, 1/2)`.
    pub eps_reg: f64,
}

impl Default for ModelParams {
    /// The 1D pattern-formation experiment: `chi_c / D_u = 40`,
    /// `alpha = 0.5`, `delta = 1`, `tau = 0.01`, `eps = 0.01`.
    fn default() -> Self {
        ModelParams {
            d_u: 1.0,
            chi_c: 40.0,
            alpha: 0.5,
            delta: 1.0,
            tau: 0.01,
            c_shift: 1.0,
            eps_reg: 0.01,
        }
    }
}

impl ModelParams {
    /// `B = D_u / chi_c`.
    pub fn b(&self) -> f64 {
        self.d_u / self.chi_c
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.d_u, self.chi_c, self.alpha, self.delta, self.tau, self.c_shift, self.eps_reg];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("model parameters"));
        }
        if !(self.d_u > 0.0) {
            return Err(Error::InvalidParams("d_u must be positive"));
        }
        if !(self.chi_c > 0.0) {
            return Err(Error::InvalidParams("chi_c must be positive"));
        }
        if !(self.tau > 0.0) {
            return Err(Error::InvalidParams("tau must be positive"));
        }
        if self.alpha < 0.0 {
            return Err(Error::InvalidParams("alpha must be nonnegative"));
        }
        if self.delta < 0.0 {
            return Err(Error::InvalidParams("delta must be nonnegative"));
        }
        if !(self.c_shift > LN_2) {
            return Err(Error::InvalidParams("c_shift must exceed ln 2"));
        }
        if !(self.eps_reg > 0.0 && self.eps_reg < 0.5) {
            return Err(Error::InvalidParams("eps_reg must lie in (0, 1/2)"));
        }
        Ok(())
    }

    fn regularize(&self, u: f64) -> f64 {
        u.clamp(self.eps_reg, 1.0 - self.eps_reg)
    }
}

/// Volume-filling mobility `u (1 - u)` on `clamp(u, 0, 1)`.
pub fn phi(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * (1.0 - u)
}

/// Regularized free energy density `F`.
pub fn free_energy(u: f64, params: &ModelParams) -> f64 {
    let u = params.regularize(u);
    u * libm::log(u) + (1.0 - u) * libm::log1p(-u) + params.c_shift
}

/// Regularized `g = F'`, i.e. `ln(u / (1 - u))`.
pub fn free_energy_derivative(u: f64, params: &ModelParams) -> f64 {
    let u = params.regularize(u);
    libm::log(u) - libm::log1p(-u)
}

/// Entropy energy and the nodal `g` values it was computed with.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyEval {
    pub e1: f64,
    pub g_nodal: Vec<f64>,
    pub sqrt_e1: f64,
}

/// `E1 = sum_i ML_i F(u_i)` (lumped quadrature).
pub fn energy_e1(u: &[f64], lumped: &[f64], params: &ModelParams) -> Result<EntropyEval> {
    if u.len() != lumped.len() {
        return Err(Error::LengthMismatch { expected: lumped.len(), found: u.len() });
    }
    if u.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("nodal density"));
    }
    let e1: f64 = u.iter().zip(lumped).map(|(&ui, &m)| m * free_energy(ui, params)).sum();
    if !e1.is_finite() {
        return Err(Error::NonFinite("entropy energy"));
    }
    if !(e1 > 0.0) {
        return Err(Error::NonPositiveEnergy);
    }
    let g_nodal = u.iter().map(|&ui| free_energy_derivative(ui, params)).collect();
    Ok(EntropyEval { e1, g_nodal, sqrt_e1: libm::sqrt(e1) })
}

/// `s_i = g(u_i) / sqrt(E1)`: the lumped realization of the projected
/// variational derivative divided by `sqrt(E1)`.
pub fn s_vector(eval: &EntropyEval) -> Result<Vec<f64>> {
    if !(eval.e1 > 0.0) {
        return Err(Error::NonPositiveEnergy);
    }
    Ok(eval.g_nodal.iter().map(|g| g / eval.sqrt_e1).collect())
}

/// Initial auxiliary variable `r0 = sqrt(E1[u0])`.
pub fn r_init(u0: &[f64], lumped: &[f64], params: &ModelParams) -> Result<f64> {
    Ok(energy_e1(u0, lumped, params)?.sqrt_e1)
}
