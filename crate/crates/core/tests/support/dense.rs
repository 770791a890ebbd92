//! Dense brute-force reference for one SAV step on a 1D mesh.
//!
//! Written from the matrix form of the scheme with no code shared with the
//! library: its own element integrals, its own entropy, the scalar solve in
//! its closed form, and Gaussian elimination for the chemoattractant.

#![allow(dead_code, clippy::needless_range_loop)]

pub struct DenseParams {
    pub d_u: f64,
    pub chi_c: f64,
    pub alpha: f64,
    pub delta: f64,
    pub tau: f64,
    pub c_shift: f64,
    pub eps: f64,
}

pub struct DenseStep {
    pub u: Vec<f64>,
    pub c: Vec<f64>,
    pub r: f64,
    pub theta: f64,
    pub denom: f64,
    pub mu1: Vec<f64>,
    pub mu2: Vec<f64>,
    pub dissipation: f64,
    pub energy_before: f64,
    pub energy_after: f64,
    pub mass_before: f64,
    pub mass_after: f64,
}

type Dense = Vec<Vec<f64>>;

fn zeros(n: usize) -> Dense {
    vec![vec![0.0; n]; n]
}

fn matvec(a: &Dense, x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

fn inner(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

fn weighted(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, p), q)| w * p * q).sum()
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Dense, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// Consistent mass, lumped mass, stiffness, mobility stiffness.
pub fn matrices(x: &[f64], u: &[f64]) -> (Dense, Vec<f64>, Dense, Dense) {
    let n = x.len();
    let mut m = zeros(n);
    let mut k = zeros(n);
    let mut a = zeros(n);
    for e in 0..n - 1 {
        let l = x[e + 1] - x[e];
        let mean = ((u[e] + u[e + 1]) / 2.0).clamp(0.0, 1.0);
        let mob = mean * (1.0 - mean);
        for (i, j, sign) in [(e, e, 1.0), (e, e + 1, -1.0), (e + 1, e, -1.0), (e + 1, e + 1, 1.0)] {
            m[i][j] += if i == j { l / 3.0 } else { l / 6.0 };
            k[i][j] += sign / l;
            a[i][j] += mob * sign / l;
        }
    }
    let ml = m.iter().map(|row| row.iter().sum()).collect();
    (m, ml, k, a)
}

fn entropy(u: f64, p: &DenseParams) -> (f64, f64) {
    let v = u.max(p.eps).min(1.0 - p.eps);
    let f = v * v.ln() + (1.0 - v) * (1.0 - v).ln() + p.c_shift;
    let g = (v / (1.0 - v)).ln();
    (f, g)
}

pub fn energy(ml: &[f64], k: &Dense, u: &[f64], c: &[f64], r: f64, p: &DenseParams) -> f64 {
    let kc = matvec(k, c);
    0.5 * (inner(c, &kc) + p.alpha * weighted(ml, c, c)) + (p.d_u / p.chi_c) * r * r
        - weighted(ml, c, u)
}

pub fn step(x: &[f64], u: &[f64], c: &[f64], r: f64, p: &DenseParams, dt: f64) -> DenseStep {
    let n = x.len();
    let (_m, ml, k, a) = matrices(x, u);
    let b = p.d_u / p.chi_c;

    let e1: f64 = (0..n).map(|i| ml[i] * entropy(u[i], p).0).sum();
    let s: Vec<f64> = (0..n).map(|i| entropy(u[i], p).1 / e1.sqrt()).collect();

    let a_s = matvec(&a, &s);
    let a_c = matvec(&a, c);
    let s_ml_u = weighted(&ml, &s, u);
    let l1: Vec<f64> = (0..n)
        .map(|i| ml[i] / dt * u[i] + p.chi_c * a_c[i] + p.d_u * (0.5 * s_ml_u - r) * a_s[i])
        .collect();
    let denom = 1.0 + p.d_u * dt / 2.0 * inner(&s, &a_s);
    let theta = dt * inner(&s, &l1) / denom;
    let u_next: Vec<f64> =
        (0..n).map(|i| (dt * l1[i] - p.d_u * dt / 2.0 * theta * a_s[i]) / ml[i]).collect();
    let r_next = r + 0.5 * (theta - s_ml_u);

    let mut lhs = k.clone();
    for i in 0..n {
        lhs[i][i] += (p.tau / dt + p.alpha) * ml[i];
    }
    let rhs: Vec<f64> = (0..n).map(|i| p.tau / dt * ml[i] * c[i] + p.delta * ml[i] * u_next[i]).collect();
    let c_next = gauss_solve(lhs, rhs);

    let mu1: Vec<f64> = (0..n).map(|i| b * r_next * s[i] - c[i]).collect();
    let mu2: Vec<f64> = (0..n).map(|i| -p.tau * (c_next[i] - c[i]) / dt).collect();
    let dissipation = p.chi_c * inner(&mu1, &matvec(&a, &mu1)) + weighted(&ml, &mu2, &mu2) / p.tau;

    DenseStep {
        energy_before: energy(&ml, &k, u, c, r, p),
        energy_after: energy(&ml, &k, &u_next, &c_next, r_next, p),
        mass_before: inner(&ml, u),
        mass_after: inner(&ml, &u_next),
        u: u_next,
        c: c_next,
        r: r_next,
        theta,
        denom,
        mu1,
        mu2,
        dissipation,
    }
}
