//! Shared fixtures for the integration tests: deterministic RNG,
//! finite-difference oracles, and small test meshes.
//!
//! Each test binary uses a different subset of these helpers.
#![allow(dead_code)]

use morphshell_core::energy::EnergyParams;
use morphshell_core::lattice::staggered_grid;
use morphshell_core::material::{assemble_material, LayerSpec, MaterialConfig};
use morphshell_core::math::{Mat3, Vec3};
use morphshell_core::mesh::{DofVector, Mesh};

/// xorshift64* PRNG; deterministic across platforms.
pub struct Rng(pub u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed.max(1))
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x.wrapping_mul(0x2545F4914F6CDD1D)
    }

    /// Uniform in [0, 1).
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [-a, a).
    pub fn symmetric(&mut self, a: f64) -> f64 {
        (self.unit() * 2.0 - 1.0) * a
    }

    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.next_u64() % (hi - lo) as u64) as usize
    }
}

/// Two triangles sharing one edge; the first is covered by the stiff layer.
pub fn two_triangle_mesh() -> Mesh {
    let nodes = vec![
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.5, 0.9, 0.0),
        Vec3::new(0.5, -0.8, 0.0),
    ];
    Mesh::build(nodes, vec![[0, 1, 2], [1, 0, 3]], &[0]).unwrap()
}

/// 5x5-node staggered strip with the left half covered by the stiff layer.
pub fn strip_5x5() -> Mesh {
    let patch = staggered_grid(5, 5, 6, 4.0, 4.0);
    let bilayer: Vec<usize> = (0..patch.triangle_count())
        .filter(|&t| patch.centroid(t).x < 0.0)
        .collect();
    Mesh::build(patch.nodes, patch.triangles, &bilayer).unwrap()
}

/// Default two-layer material on a mesh, unscaled stretching.
pub fn default_params(mesh: &Mesh) -> EnergyParams {
    let material = assemble_material(&MaterialConfig {
        substrate: LayerSpec::new(1.0, 0.3).unwrap(),
        pattern: LayerSpec::new(3.0, 0.7).unwrap(),
        l0: mesh.mean_edge_length(),
        stretch_scale: 1.0,
    })
    .unwrap();
    EnergyParams::with_default_coupling(material, mesh.mean_edge_length())
}

/// Random perturbation of the rest state, bounded to keep triangles sound.
pub fn perturbed_state(mesh: &Mesh, rng: &mut Rng, amplitude: f64) -> DofVector {
    let scale = amplitude * mesh.mean_edge_length();
    let mut x = mesh.rest_dofs();
    for i in 0..x.len() {
        x.as_mut_slice()[i] += rng.symmetric(scale);
    }
    x
}

/// Central finite differences of a scalar function of the coordinates.
pub fn fd_gradient<F>(x: &DofVector, h: f64, mut f: F) -> Vec<f64>
where
    F: FnMut(&DofVector) -> f64,
{
    let mut g = vec![0.0; x.len()];
    let mut probe = x.clone();
    for i in 0..x.len() {
        let base = x.as_slice()[i];
        probe.as_mut_slice()[i] = base + h;
        let fp = f(&probe);
        probe.as_mut_slice()[i] = base - h;
        let fm = f(&probe);
        probe.as_mut_slice()[i] = base;
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

/// Central finite differences of a vector function (gradient), producing a
/// dense Jacobian in row-major layout (`rows = len of f output`).
pub fn fd_jacobian<F>(x: &DofVector, h: f64, mut f: F) -> Vec<f64>
where
    F: FnMut(&DofVector) -> Vec<f64>,
{
    let n = x.len();
    let mut jac = vec![0.0; n * n];
    let mut probe = x.clone();
    for col in 0..n {
        let base = x.as_slice()[col];
        probe.as_mut_slice()[col] = base + h;
        let fp = f(&probe);
        probe.as_mut_slice()[col] = base - h;
        let fm = f(&probe);
        probe.as_mut_slice()[col] = base;
        for row in 0..n {
            jac[row * n + col] = (fp[row] - fm[row]) / (2.0 * h);
        }
    }
    jac
}

/// Max-norm relative error between two vectors.
pub fn rel_error_inf(a: &[f64], b: &[f64]) -> f64 {
    let scale = a
        .iter()
        .fold(0.0f64, |m, &v| m.max(v.abs()))
        .max(1e-300);
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (&x, &y)| m.max((x - y).abs()))
        / scale
}

/// Rotation matrix about a unit axis by `angle` (Rodrigues form).
pub fn rotation(axis: Vec3, angle: f64) -> Mat3 {
    let a = axis.normalized().unwrap();
    let k = Mat3::skew(a);
    let k2 = k.mul(k);
    Mat3::identity()
        .add(k.scale(angle.sin()))
        .add(k2.scale(1.0 - angle.cos()))
}

/// Apply a rigid transform to every node.
pub fn rigid_transform(x: &DofVector, r: &Mat3, t: Vec3) -> DofVector {
    let mut out = x.clone();
    for i in 0..x.node_count() {
        out.set_node(i, r.mul_vec(x.node(i)) + t);
    }
    out
}
