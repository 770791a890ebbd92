//! Simplicial meshes in one and two dimensions.
//!
//! Node coordinates are stored flat with stride `dim`, elements flat with
//! stride `dim + 1`. Constructors order nodes lexicographically by grid index
//! (x fastest), so every output derived from a mesh is reproducible.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Slack on the right-angle test of [`Mesh::is_acute`].
pub const ACUTE_ANGLE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    coords: Vec<f64>,
    elements: Vec<usize>,
    boundary_nodes: Vec<usize>,
}

impl Mesh {
    /// Builds a mesh from raw arrays and checks every element.
    ///
    /// `coords` holds `dim` values per node and `elements` holds `dim + 1`
    /// node indices per element. Boundary nodes are sorted and deduplicated.
    pub fn new(
        dim: usize,
        coords: Vec<f64>,
        elements: Vec<usize>,
        mut boundary_nodes: Vec<usize>,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidMesh("only 1D and 2D meshes are supported"));
        }
        if !coords.len().is_multiple_of(dim) || !elements.len().is_multiple_of(dim + 1) {
            return Err(Error::InvalidMesh("array length is not a multiple of the stride"));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("node coordinates"));
        }
        let n_nodes = coords.len() / dim;
        if n_nodes < 2 || elements.is_empty() {
            return Err(Error::InvalidMesh("a mesh needs at least one element and two nodes"));
        }
        boundary_nodes.sort_unstable();
        boundary_nodes.dedup();
        if boundary_nodes.last().is_some_and(|&b| b >= n_nodes) {
            return Err(Error::InvalidMesh("boundary node index out of range"));
        }
        let mesh = Mesh { dim, coords, elements, boundary_nodes };
        for e in 0..mesh.n_elements() {
            let nodes = mesh.element(e);
            if nodes.iter().any(|&n| n >= n_nodes) {
                return Err(Error::InvalidMesh("element node index out of range"));
            }
            for (k, a) in nodes.iter().enumerate() {
                if nodes[k + 1..].contains(a) {
                    return Err(Error::InvalidMesh("element repeats a node"));
                }
            }
            let measure = mesh.element_measure(e);
            if !(measure > 0.0) {
                return Err(Error::DegenerateElement { index: e });
            }
        }
        Ok(mesh)
    }

    /// Uniform partition of `[a, b]` into `n` segments.
    pub fn interval(a: f64, b: f64, n: usize) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::NonFinite("interval endpoints"));
        }
        if n == 0 {
            return Err(Error::InvalidMesh("interval mesh needs at least one segment"));
        }
        if !(a < b) {
            return Err(Error::InvalidMesh("interval endpoints must satisfy a < b"));
        }
        let length = b - a;
        let mut coords: Vec<f64> = (0..=n).map(|i| a + length * (i as f64 / n as f64)).collect();
        coords[n] = b;
        let elements = (0..n).flat_map(|i| [i, i + 1]).collect();
        Mesh::new(1, coords, elements, vec![0, n])
    }

    /// Structured triangulation of `[0, lx] x [0, ly]`.
    ///
    /// Each of the `nx * ny` grid cells is cut along its diagonal from the
    /// lower-left to the upper-right corner, giving right triangles whose
    /// largest angle is exactly pi/2.
    pub fn rectangle(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        if !lx.is_finite() || !ly.is_finite() {
            return Err(Error::NonFinite("rectangle extents"));
        }
        if !(lx > 0.0 && ly > 0.0) {
            return Err(Error::InvalidMesh("rectangle extents must be positive"));
        }
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidMesh("rectangle mesh needs nx, ny >= 1"));
        }
        let row = nx + 1;
        let mut coords = Vec::with_capacity(2 * row * (ny + 1));
        let mut boundary = Vec::new();
        for j in 0..=ny {
            let y = if j == ny { ly } else { ly * (j as f64 / ny as f64) };
            for i in 0..=nx {
                let x = if i == nx { lx } else { lx * (i as f64 / nx as f64) };
                coords.push(x);
                coords.push(y);
                if i == 0 || i == nx || j == 0 || j == ny {
                    boundary.push(j * row + i);
                }
            }
        }
        let mut elements = Vec::with_capacity(6 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let n00 = j * row + i;
                let n10 = n00 + 1;
                let n01 = n00 + row;
                let n11 = n01 + 1;
                elements.extend_from_slice(&[n00, n10, n11, n00, n11, n01]);
            }
        }
        Mesh::new(2, coords, elements, boundary)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_nodes(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len() / (self.dim + 1)
    }

    pub fn nodes_per_element(&self) -> usize {
        self.dim + 1
    }

    /// Coordinates of node `i` (length `dim`).
    pub fn node(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Node indices of element `e` (length `dim + 1`).
    pub fn element(&self, e: usize) -> &[usize] {
        let k = self.dim + 1;
        &self.elements[e * k..(e + 1) * k]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    /// Node position padded to 2D (`y = 0` in 1D).
    fn point(&self, i: usize) -> [f64; 2] {
        match self.dim {
            1 => [self.coords[i], 0.0],
            _ => [self.coords[2 * i], self.coords[2 * i + 1]],
        }
    }

    /// Length of a segment or signed area of a triangle (positive when the
    /// vertices are counter-clockwise).
    pub fn element_measure(&self, e: usize) -> f64 {
        let nodes = self.element(e);
        match self.dim {
            1 => (self.coords[nodes[1]] - self.coords[nodes[0]]).abs(),
            _ => {
                let [p0, p1, p2] = [nodes[0], nodes[1], nodes[2]].map(|n| self.point(n));
                0.5 * cross(sub(p1, p0), sub(p2, p0))
            }
        }
    }

    pub fn total_measure(&self) -> f64 {
        (0..self.n_elements()).map(|e| self.element_measure(e)).sum()
    }

    /// Longest edge of element `e`.
    pub fn element_diameter(&self, e: usize) -> f64 {
        let nodes = self.element(e);
        let mut d: f64 = 0.0;
        for a in 0..nodes.len() {
            for b in a + 1..nodes.len() {
                d = d.max(norm(sub(self.point(nodes[a]), self.point(nodes[b]))));
            }
        }
        d
    }

    /// Minimal perpendicular length: the element length in 1D, the smallest
    /// altitude (twice the area over the longest edge) in 2D.
    pub fn element_min_altitude(&self, e: usize) -> f64 {
        match self.dim {
            1 => self.element_measure(e),
            _ => 2.0 * self.element_measure(e) / self.element_diameter(e),
        }
    }

    /// Interior angles of triangle `e`, one per vertex.
    pub fn triangle_angles(&self, e: usize) -> [f64; 3] {
        let nodes = self.element(e);
        let p = [nodes[0], nodes[1], nodes[2]].map(|n| self.point(n));
        core::array::from_fn(|k| {
            let a = sub(p[(k + 1) % 3], p[k]);
            let b = sub(p[(k + 2) % 3], p[k]);
            libm::atan2(cross(a, b).abs(), dot(a, b))
        })
    }

    /// True when no triangle angle exceeds pi/2 (right angles allowed).
    /// Interval meshes are acute by convention.
    pub fn is_acute(&self) -> bool {
        self.dim == 1
            || (0..self.n_elements()).all(|e| {
                self.triangle_angles(e).iter().all(|&a| a <= FRAC_PI_2 + ACUTE_ANGLE_TOLERANCE)
            })
    }

    /// Edge-connected neighbours of every node, each list sorted ascending.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_nodes()];
        for e in 0..self.n_elements() {
            let nodes = self.element(e);
            for &a in nodes {
                for &b in nodes {
                    if a != b {
                        adj[a].push(b);
                    }
                }
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }

    pub fn metrics(&self) -> MeshMetrics {
        let n = self.n_elements();
        let diameters: Vec<f64> = (0..n).map(|e| self.element_diameter(e)).collect();
        let h = diameters.iter().copied().fold(0.0, f64::max);
        let h_min = diameters.iter().copied().fold(f64::INFINITY, f64::min);
        let kappa_h = (0..n).map(|e| self.element_min_altitude(e)).fold(f64::INFINITY, f64::min);
        let adjacency = self.adjacency();
        let g_h = adjacency.iter().map(Vec::len).max().unwrap_or(0);
        MeshMetrics { h, h_min, kappa_h, g_h, adjacency }
    }
}

/// Mesh-quality quantities entering the positivity conditions of the scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshMetrics {
    /// Largest element diameter.
    pub h: f64,
    /// Smallest element diameter (quasi-uniformity witness together with `h`).
    pub h_min: f64,
    /// Smallest minimal perpendicular length over all elements.
    pub kappa_h: f64,
    /// Largest number of edge neighbours of any node.
    pub g_h: usize,
    pub adjacency: Vec<Vec<usize>>,
}

impl MeshMetrics {
    pub fn quasi_uniformity_ratio(&self) -> f64 {
        self.h / self.h_min
    }
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn norm(a: [f64; 2]) -> f64 {
    libm::sqrt(dot(a, a))
}
