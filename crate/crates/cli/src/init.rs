//! Mesh construction and seeded initial data.
//!
//! The perturbation uses SplitMix64 seeded directly with `rng_seed`: the
//! state advances by `0x9E3779B97F4A7C15`, the output is the standard
//! `(30, 27, 31)` xor-shift/multiply finalizer, and each draw becomes
//! `xi = (next >> 11) * 2^-53 in [0, 1)`. Node `i` takes the `i`-th draw.

use kssav_core::{model, AssembledOperators, Mesh, ModelParams, State};
use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::config::SimConfig;

/// `[0, lx]` with `nx` elements or `[0, lx] x [0, ly]` with `nx x ny` cells.
pub fn build_mesh(config: &SimConfig) -> kssav_core::Result<Mesh> {
    match config.dim {
        1 => Mesh::interval(0.0, config.lx, config.nx),
        _ => Mesh::rectangle(config.lx, config.ly, config.nx, config.ny),
    }
}

/// `n` uniform draws in `[0, 1)` from SplitMix64 seeded with `seed`.
pub fn uniform_draws(seed: u64, n: usize) -> Vec<f64> {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    let mut rng = SplitMix64::seed_from_u64(seed);
    (0..n).map(|_| (rng.next_u64() >> 11) as f64 * SCALE).collect()
}

/// `u_i = u0_mean + perturb_amp (2 xi_i - 1)`, `c_i = c0_value`,
/// `r = sqrt(E1[u])`.
pub fn initial_state(
    config: &SimConfig,
    mesh: &Mesh,
    ops: &AssembledOperators,
    params: &ModelParams,
) -> kssav_core::Result<State> {
    let n = mesh.n_nodes();
    let u: Vec<f64> = if config.perturb_amp == 0.0 {
        vec![config.u0_mean; n]
    } else {
        uniform_draws(config.rng_seed, n)
            .into_iter()
            .map(|xi| (config.u0_mean + config.perturb_amp * (2.0 * xi - 1.0)).clamp(0.0, 1.0))
            .collect()
    };
    let c = vec![config.c0_value; n];
    let r = model::r_init(&u, &ops.lumped, params)?;
    Ok(State::new(u, c, r))
}
