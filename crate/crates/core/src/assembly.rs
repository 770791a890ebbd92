//! P1 finite-element operators.
//!
//! All stiffness-type matrices share one sparsity pattern (the node
//! adjacency plus the diagonal). The mobility-weighted stiffness `A` is
//! rebuilt every time step by rescaling precomputed element matrices with a
//! per-element mobility, so only values change.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::sparse::CsrMatrix;

/// The constant operators of the scheme.
#[derive(Debug, Clone)]
pub struct AssembledOperators {
    /// Consistent mass matrix.
    pub mass: CsrMatrix,
    /// Row sums of `mass`.
    pub lumped: Vec<f64>,
    pub stiffness: CsrMatrix,
}

impl AssembledOperators {
    pub fn new(mesh: &Mesh) -> Result<Self> {
        let mass = assemble_mass(mesh);
        let lumped = lump_mass(&mass)?;
        let stiffness = assemble_stiffness(mesh);
        Ok(AssembledOperators { mass, lumped, stiffness })
    }

    pub fn n_nodes(&self) -> usize {
        self.lumped.len()
    }

    /// Domain measure as seen by the lumped quadrature.
    pub fn measure(&self) -> f64 {
        self.lumped.iter().sum()
    }
}

fn stiffness_pattern(mesh: &Mesh) -> CsrMatrix {
    let mut rows = mesh.adjacency();
    for (i, row) in rows.iter_mut().enumerate() {
        row.push(i);
    }
    CsrMatrix::from_pattern(mesh.n_nodes(), &rows, true)
}

/// Consistent P1 mass matrix, exact element integrals.
pub fn assemble_mass(mesh: &Mesh) -> CsrMatrix {
    let mut m = stiffness_pattern(mesh);
    let npe = mesh.nodes_per_element();
    for e in 0..mesh.n_elements() {
        let measure = mesh.element_measure(e);
        // 1D: l/3 and l/6; 2D: S/6 and S/12.
        let (diag, off) = match npe {
            2 => (measure / 3.0, measure / 6.0),
            _ => (measure / 6.0, measure / 12.0),
        };
        let nodes = mesh.element(e);
        for (a, &i) in nodes.iter().enumerate() {
            for (b, &j) in nodes.iter().enumerate() {
                let k = m.position(i, j).expect("element pair is in the pattern");
                m.values_mut()[k] += if a == b { diag } else { off };
            }
        }
    }
    m
}

/// Diagonal of row sums of a consistent mass matrix.
pub fn lump_mass(mass: &CsrMatrix) -> Result<Vec<f64>> {
    let lumped = mass.row_sums();
    match lumped.iter().position(|&m| !(m > 0.0)) {
        Some(node) => Err(Error::NonPositiveLumpedMass { node }),
        None => Ok(lumped),
    }
}

/// P1 stiffness matrix.
pub fn assemble_stiffness(mesh: &Mesh) -> CsrMatrix {
    MobilityAssembler::new(mesh).stiffness()
}

/// Mobility-weighted stiffness `A` for nodal density `u` (see
/// [`MobilityAssembler::assemble`]).
pub fn assemble_mobility_stiffness(
    mesh: &Mesh,
    u: &[f64],
    phi: impl Fn(f64) -> f64,
) -> Result<CsrMatrix> {
    Ok(MobilityAssembler::new(mesh).assemble(u, phi)?.matrix)
}

/// `A` together with the element mobilities it was built from.
#[derive(Debug, Clone)]
pub struct MobilityOperator {
    pub matrix: CsrMatrix,
    /// Mobility of each element, `phi(clamp(mean u, 0, 1))`.
    pub element_mobility: Vec<f64>,
}

/// Precomputed element geometry and scatter map for stiffness-type
/// matrices.
#[derive(Debug, Clone)]
pub struct MobilityAssembler {
    npe: usize,
    n_nodes: usize,
    elements: Vec<usize>,
    measure: Vec<f64>,
    /// Gradients of the barycentric basis functions, padded to 2D.
    grads: Vec<[[f64; 2]; 3]>,
    /// Element stiffness, row-major `npe x npe`, padded to 3x3.
    local: Vec<[f64; 9]>,
    /// Storage index in the global matrix of each local entry.
    scatter: Vec<[usize; 9]>,
    pattern: CsrMatrix,
}

impl MobilityAssembler {
    pub fn new(mesh: &Mesh) -> Self {
        let pattern = stiffness_pattern(mesh);
        let npe = mesh.nodes_per_element();
        let n_el = mesh.n_elements();
        let mut measure = Vec::with_capacity(n_el);
        let mut grads = Vec::with_capacity(n_el);
        let mut local = Vec::with_capacity(n_el);
        let mut scatter = Vec::with_capacity(n_el);
        for e in 0..n_el {
            let nodes = mesh.element(e);
            let area = mesh.element_measure(e);
            let g = basis_gradients(mesh, nodes, area);
            let mut k = [0.0; 9];
            for a in 0..npe {
                let mut diag = 0.0;
                for b in 0..npe {
                    if a != b {
                        let v = area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                        k[3 * a + b] = v;
                        diag -= v;
                    }
                }
                // Exact zero element row sums.
                k[3 * a + a] = diag;
            }
            let mut s = [0usize; 9];
            for a in 0..npe {
                for b in 0..npe {
                    s[3 * a + b] = pattern.position(nodes[a], nodes[b]).expect("in pattern");
                }
            }
            measure.push(area);
            grads.push(g);
            local.push(k);
            scatter.push(s);
        }
        MobilityAssembler {
            npe,
            n_nodes: mesh.n_nodes(),
            elements: (0..n_el).flat_map(|e| mesh.element(e).to_vec()).collect(),
            measure,
            grads,
            local,
            scatter,
            pattern,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_elements(&self) -> usize {
        self.measure.len()
    }

    /// Unweighted stiffness matrix.
    pub fn stiffness(&self) -> CsrMatrix {
        let mut m = self.pattern.clone();
        self.scatter_weighted(&vec![1.0; self.n_elements()], &mut m);
        m
    }

    /// Element mobilities `phi(clamp(mean of u over T, 0, 1))`.
    pub fn element_mobility(&self, u: &[f64], phi: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
        if u.len() != self.n_nodes {
            return Err(Error::LengthMismatch { expected: self.n_nodes, found: u.len() });
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("nodal density"));
        }
        Ok(self
            .elements
            .chunks_exact(self.npe)
            .map(|nodes| {
                let mean = nodes.iter().map(|&n| u[n]).sum::<f64>() / self.npe as f64;
                phi(mean.clamp(0.0, 1.0))
            })
            .collect())
    }

    /// `A_ij = sum_T phi_T K^T_ij` with `phi_T` from [`Self::element_mobility`].
    pub fn assemble(&self, u: &[f64], phi: impl Fn(f64) -> f64) -> Result<MobilityOperator> {
        let mut op = MobilityOperator {
            matrix: self.pattern.clone(),
            element_mobility: Vec::new(),
        };
        self.refresh(u, phi, &mut op)?;
        Ok(op)
    }

    /// Recomputes `op` in place for a new density, reusing its pattern.
    pub fn refresh(
        &self,
        u: &[f64],
        phi: impl Fn(f64) -> f64,
        op: &mut MobilityOperator,
    ) -> Result<()> {
        op.element_mobility = self.element_mobility(u, phi)?;
        op.matrix.values_mut().fill(0.0);
        self.scatter_weighted(&op.element_mobility, &mut op.matrix);
        Ok(())
    }

    fn scatter_weighted(&self, weights: &[f64], m: &mut CsrMatrix) {
        let n = self.npe;
        let values = m.values_mut();
        for ((k, s), &w) in self.local.iter().zip(&self.scatter).zip(weights) {
            for a in 0..n {
                for b in 0..n {
                    values[s[3 * a + b]] += w * k[3 * a + b];
                }
            }
        }
    }

    /// `x^T A x` evaluated element by element as
    /// `sum_T phi_T |T| |grad x|^2`, which is nonnegative in floating point
    /// whenever the mobilities are.
    pub fn quadratic_form(&self, op: &MobilityOperator, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n_nodes);
        self.elements
            .chunks_exact(self.npe)
            .zip(&self.grads)
            .zip(self.measure.iter().zip(&op.element_mobility))
            .map(|((nodes, g), (&area, &w))| {
                let mut grad = [0.0; 2];
                for (a, &n) in nodes.iter().enumerate() {
                    grad[0] += x[n] * g[a][0];
                    grad[1] += x[n] * g[a][1];
                }
                w * area * (grad[0] * grad[0] + grad[1] * grad[1])
            })
            .sum()
    }
}

fn basis_gradients(mesh: &Mesh, nodes: &[usize], measure: f64) -> [[f64; 2]; 3] {
    match nodes.len() {
        2 => {
            let sign = if mesh.node(nodes[1])[0] > mesh.node(nodes[0])[0] { 1.0 } else { -1.0 };
            let inv = sign / measure;
            [[-inv, 0.0], [inv, 0.0], [0.0, 0.0]]
        }
        _ => {
            let p: [&[f64]; 3] = [mesh.node(nodes[0]), mesh.node(nodes[1]), mesh.node(nodes[2])];
            let inv = 1.0 / (2.0 * measure);
            // grad(lambda_a) is the inward normal of the opposite edge scaled
            // by its length over twice the area.
            core::array::from_fn(|a| {
                let q = p[(a + 1) % 3];
                let r = p[(a + 2) % 3];
                [(q[1] - r[1]) * inv, (r[0] - q[0]) * inv]
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::phi;
    use proptest::prelude::*;
    use std::vec::Vec;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn mass_single_segment() {
        let mesh = Mesh::interval(0.0, 1.0, 1).unwrap();
        let m = assemble_mass(&mesh).to_dense();
        assert!(close(m[0][0], 1.0 / 3.0, 1e-16) && close(m[1][1], 1.0 / 3.0, 1e-16));
        assert!(close(m[0][1], 1.0 / 6.0, 1e-16) && close(m[1][0], 1.0 / 6.0, 1e-16));
        assert_eq!(lump_mass(&assemble_mass(&mesh)).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn mass_two_segments_interior_diagonal() {
        let mesh = Mesh::interval(0.0, 1.0, 2).unwrap();
        assert!(close(assemble_mass(&mesh).get(1, 1), 1.0 / 3.0, 1e-16));
    }

    #[test]
    fn lumped_mass_unit_interval() {
        let mesh = Mesh::interval(0.0, 1.0, 10).unwrap();
        let ml = lump_mass(&assemble_mass(&mesh)).unwrap();
        assert!(close(ml[0], 0.05, 1e-15) && close(ml[10], 0.05, 1e-15));
        assert!(ml[1..10].iter().all(|&m| close(m, 0.1, 1e-15)));
        assert!(close(ml.iter().sum(), 1.0, 1e-14));
    }

    #[test]
    fn lump_mass_rejects_nonpositive_rows() {
        let bad = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 0.0)], true);
        assert_eq!(lump_mass(&bad), Err(Error::NonPositiveLumpedMass { node: 1 }));
    }

    #[test]
    fn stiffness_single_segment() {
        let h = 0.25;
        let mesh = Mesh::interval(0.0, h, 1).unwrap();
        let k = assemble_stiffness(&mesh).to_dense();
        assert!(close(k[0][0], 1.0 / h, 1e-14) && close(k[1][1], 1.0 / h, 1e-14));
        assert!(close(k[0][1], -1.0 / h, 1e-14) && close(k[1][0], -1.0 / h, 1e-14));
    }

    #[test]
    fn stiffness_two_segments_interior_diagonal() {
        let mesh = Mesh::interval(0.0, 1.0, 2).unwrap();
        assert!(close(assemble_stiffness(&mesh).get(1, 1), 4.0, 1e-14));
    }

    #[test]
    fn stiffness_right_isoceles_pair_matches_cotangent_formula() {
        // K_ij = -(cot a + cot b)/2 over the angles opposite edge ij.
        let mesh = Mesh::rectangle(1.0, 1.0, 1, 1).unwrap();
        let k = assemble_stiffness(&mesh);
        // Nodes: 0=(0,0) 1=(1,0) 2=(0,1) 3=(1,1). Diagonal 0-3 is opposite
        // two right angles; legs are opposite one 45 degree angle each.
        assert!(close(k.get(0, 3), 0.0, 1e-15));
        assert!(close(k.get(0, 1), -0.5, 1e-15));
        assert!(close(k.get(1, 3), -0.5, 1e-15));
        assert!(close(k.get(0, 2), -0.5, 1e-15));
        assert!(close(k.get(0, 0), 1.0, 1e-15));
        assert!(close(k.get(1, 1), 1.0, 1e-15));
        for (i, j, v) in k.triplets() {
            if i != j {
                assert!(v <= 1e-14);
            }
        }
    }

    #[test]
    fn mobility_zero_density_gives_zero_matrix() {
        let mesh = Mesh::interval(0.0, 1.0, 4).unwrap();
        let a = assemble_mobility_stiffness(&mesh, &[0.0; 5], phi).unwrap();
        assert!(a.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mobility_half_density_is_quarter_stiffness() {
        let mesh = Mesh::interval(0.0, 2.0, 7).unwrap();
        let a = assemble_mobility_stiffness(&mesh, &[0.5; 8], phi).unwrap();
        let k = assemble_stiffness(&mesh);
        for (x, y) in a.values().iter().zip(k.values()) {
            assert!(close(*x, 0.25 * y, 1e-15));
        }
    }

    #[test]
    fn mobility_linear_profile_by_hand() {
        let mesh = Mesh::interval(0.0, 1.0, 2).unwrap();
        let a = assemble_mobility_stiffness(&mesh, &[0.0, 0.5, 1.0], phi).unwrap();
        // Element means 1/4 and 3/4, both with mobility 3/16.
        let h = 0.5;
        assert!(close(a.get(1, 1), 3.0 / 16.0 * (1.0 / h + 1.0 / h), 1e-15));
        assert!(close(a.get(0, 1), -3.0 / 16.0 / h, 1e-15));
    }

    #[test]
    fn mobility_rejects_non_finite_and_wrong_length() {
        let mesh = Mesh::interval(0.0, 1.0, 2).unwrap();
        assert!(matches!(
            assemble_mobility_stiffness(&mesh, &[0.1, f64::NAN, 0.2], phi),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            assemble_mobility_stiffness(&mesh, &[0.1, 0.2], phi),
            Err(Error::LengthMismatch { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn unit_mobility_equals_stiffness() {
        let mesh = Mesh::rectangle(2.0, 1.0, 5, 3).unwrap();
        let a = assemble_mobility_stiffness(&mesh, &vec![0.3; mesh.n_nodes()], |_| 1.0).unwrap();
        assert_eq!(a, assemble_stiffness(&mesh));
    }

    fn structure_holds(mesh: &Mesh, u: &[f64]) -> core::result::Result<(), TestCaseError> {
        let asm = MobilityAssembler::new(mesh);
        let op = asm.assemble(u, phi).unwrap();
        let a = &op.matrix;
        prop_assert!(a.audit_symmetry(1e-15));
        for i in 0..a.n_rows() {
            let (cols, vals) = a.row(i);
            let mut off = 0.0;
            let mut sum = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                sum += v;
                if j != i {
                    prop_assert!(v <= 1e-14);
                    off += v.abs();
                }
            }
            prop_assert!(sum.abs() <= 1e-12);
            prop_assert!((a.get(i, i) - off).abs() <= 1e-12);
        }
        Ok(())
    }

    proptest! {
        #[test]
        fn mobility_structure_1d(u in proptest::collection::vec(-0.2f64..1.2, 2..40)) {
            let mesh = Mesh::interval(0.0, 3.0, u.len() - 1).unwrap();
            structure_holds(&mesh, &u)?;
        }

        #[test]
        fn mobility_structure_2d(nx in 1usize..6, ny in 1usize..6, seed in proptest::collection::vec(0.0f64..1.0, 49)) {
            let mesh = Mesh::rectangle(1.5, 0.7, nx, ny).unwrap();
            let u: Vec<f64> = seed[..mesh.n_nodes()].to_vec();
            structure_holds(&mesh, &u)?;
        }

        #[test]
        fn quadratic_form_is_nonnegative_and_matches_matvec(
            u in proptest::collection::vec(0.0f64..1.0, 36),
            x in proptest::collection::vec(-5.0f64..5.0, 36),
        ) {
            let mesh = Mesh::rectangle(1.0, 1.0, 5, 5).unwrap();
            let asm = MobilityAssembler::new(&mesh);
            let op = asm.assemble(&u, phi).unwrap();
            let q = asm.quadratic_form(&op, &x);
            prop_assert!(q >= 0.0);
            let ax = op.matrix.mul_vec(&x);
            let q2: f64 = ax.iter().zip(&x).map(|(a, b)| a * b).sum();
            prop_assert!((q - q2).abs() <= 1e-12 * (1.0 + q.abs()));
        }

        #[test]
        fn lumped_mass_sums_to_measure(lx in 0.1f64..5.0, ly in 0.1f64..5.0, nx in 1usize..10, ny in 1usize..10) {
            let mesh = Mesh::rectangle(lx, ly, nx, ny).unwrap();
            let ops = AssembledOperators::new(&mesh).unwrap();
            let area = lx * ly;
            prop_assert!((ops.measure() - area).abs() <= 1e-12 * area);
            for (ml, rs) in ops.lumped.iter().zip(ops.mass.row_sums()) {
                prop_assert_eq!(*ml, rs);
            }
            for s in ops.stiffness.row_sums() {
                prop_assert!(s.abs() <= 1e-12);
            }
        }
    }
}
