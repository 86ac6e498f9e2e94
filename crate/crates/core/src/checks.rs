//! Built-in verification: finite-difference checks of the analytic
//! derivatives and static benchmarks with closed-form answers. These back
//! the `verify` command and the acceptance suite.

use alloc::vec::Vec;

use crate::energy::{energy_gradient, energy_hessian, energy_value, EnergyParams};
use crate::lattice::equilateral_strip;
use crate::material::{assemble_material, LayerSpec, MaterialConfig};
use crate::math::Vec3;
use crate::mesh::{DofVector, Mesh, MeshError};
use crate::solver::{solve_static, ConstraintScheme, SolverConfig, SolverError};
use crate::stimulus::{thermal_field, StimulusError, ThermalField};

#[derive(Debug, Clone)]
pub enum CheckError {
    Mesh(MeshError),
    Stimulus(StimulusError),
    Solver(SolverError),
    /// A verification solve did not converge; nothing to compare.
    BenchmarkDidNotConverge(&'static str),
}

impl From<MeshError> for CheckError {
    fn from(e: MeshError) -> Self {
        CheckError::Mesh(e)
    }
}

impl From<StimulusError> for CheckError {
    fn from(e: StimulusError) -> Self {
        CheckError::Stimulus(e)
    }
}

impl From<SolverError> for CheckError {
    fn from(e: SolverError) -> Self {
        CheckError::Solver(e)
    }
}

impl core::fmt::Display for CheckError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CheckError::Mesh(e) => write!(f, "{e}"),
            CheckError::Stimulus(e) => write!(f, "{e}"),
            CheckError::Solver(e) => write!(f, "{e}"),
            CheckError::BenchmarkDidNotConverge(which) => {
                write!(f, "{which} benchmark solve did not converge")
            }
        }
    }
}

/// Worst relative errors of the analytic energy derivatives against
/// central finite differences over randomized states.
#[derive(Debug, Clone, Copy)]
pub struct DerivativeCheck {
    pub samples: usize,
    pub max_gradient_rel_err: f64,
    pub max_hessian_rel_err: f64,
    /// Max absolute asymmetry of the assembled Hessian (zero by contract).
    pub max_hessian_asymmetry: f64,
}

/// Run the FD suite on a mesh: `samples` random perturbations of the rest
/// state, amplitude `0.1 * l0` per coordinate, FD step `1e-6 * l0`.
pub fn check_energy_derivatives(
    mesh: &Mesh,
    params: &EnergyParams,
    field: &ThermalField,
    samples: usize,
    seed: u64,
) -> Result<DerivativeCheck, CheckError> {
    let l0 = mesh.mean_edge_length();
    let h = 1e-6 * l0;
    let mut rng = seed.max(1);
    let mut next = move || {
        let mut x = rng;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        rng = x;
        ((x >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };

    let mut worst_grad = 0.0f64;
    let mut worst_hess = 0.0f64;
    let mut worst_asym = 0.0f64;
    for _ in 0..samples {
        let mut x = mesh.rest_dofs();
        for c in x.as_mut_slice() {
            *c += 0.1 * l0 * next();
        }

        let analytic = energy_gradient(mesh, &x, params, field)?;
        let fd = fd_of(&x, h, |state| energy_value(mesh, state, params, field))?;
        worst_grad = worst_grad.max(rel_inf(&analytic, &fd));

        let hess = energy_hessian(mesh, &x, params, field)?;
        let dense = hess.to_dense();
        let n = x.len();
        for i in 0..n {
            for j in 0..n {
                worst_asym = worst_asym.max((dense[i * n + j] - dense[j * n + i]).abs());
            }
        }
        let fd_h = fd_rows(&x, h, |state| energy_gradient(mesh, state, params, field))?;
        worst_hess = worst_hess.max(rel_inf(&dense, &fd_h));
    }
    Ok(DerivativeCheck {
        samples,
        max_gradient_rel_err: worst_grad,
        max_hessian_rel_err: worst_hess,
        max_hessian_asymmetry: worst_asym,
    })
}

/// The built-in FD stencil: a 5x5 staggered strip, left half covered.
pub fn builtin_check_mesh() -> Mesh {
    let patch = crate::lattice::staggered_grid(5, 5, 6, 4.0, 4.0);
    let bilayer: Vec<usize> = (0..patch.triangle_count())
        .filter(|&t| patch.centroid(t).x < 0.0)
        .collect();
    Mesh::build(patch.nodes, patch.triangles, &bilayer).expect("builtin mesh is valid")
}

/// Default parameters for verification runs on a given mesh.
pub fn builtin_params(mesh: &Mesh) -> EnergyParams {
    let material = assemble_material(&MaterialConfig {
        substrate: LayerSpec::new(1.0, 0.3).expect("positive"),
        pattern: LayerSpec::new(3.0, 0.7).expect("positive"),
        l0: mesh.mean_edge_length(),
        stretch_scale: 1.0,
    })
    .expect("valid material");
    EnergyParams::with_default_coupling(material, mesh.mean_edge_length())
}

/// Run the derivative suite on the built-in stencil with its thermal field.
pub fn check_builtin_derivatives(samples: usize) -> Result<DerivativeCheck, CheckError> {
    let mesh = builtin_check_mesh();
    let params = builtin_params(&mesh);
    let field = thermal_field(&mesh, -0.25)?;
    check_energy_derivatives(&mesh, &params, &field, samples, 0x5EED5EED)
}

#[derive(Debug, Clone, Copy)]
pub struct UniaxialCheck {
    /// Worst deviation of a simulated edge strain from the affine value.
    pub max_strain_deviation: f64,
    pub stretch: f64,
}

/// Pin the boundary of an equilateral strip to a uniaxial affine map and
/// let the interior relax; every edge strain must land on the homogeneous
/// solution.
pub fn uniaxial_benchmark() -> Result<UniaxialCheck, CheckError> {
    let patch = equilateral_strip(13, 9, 1.0);
    let mesh = Mesh::build(patch.nodes, patch.triangles, &[])?;
    let params = builtin_params(&mesh);
    let field = ThermalField::zero(&mesh);

    let stretch = 1.03f64;
    let mut x0 = mesh.rest_dofs();
    let mut pins = Vec::new();
    for &n in &mesh.boundary_nodes() {
        let p = mesh.node(n);
        x0.set_node(n, Vec3::new(stretch * p.x, p.y, 0.0));
        pins.extend([3 * n, 3 * n + 1, 3 * n + 2]);
    }
    let config = SolverConfig {
        constraints: ConstraintScheme::PinnedDofs(pins),
        tol: 1e-12,
        force_tol: Some(1e-12),
        max_newton_iters: 80,
        ..SolverConfig::default()
    };
    let f_ext = alloc::vec![0.0; x0.len()];
    let solve = solve_static(&mesh, &x0, &params, &field, &f_ext, &config)?;
    if !solve.converged {
        return Err(CheckError::BenchmarkDidNotConverge("uniaxial"));
    }

    let mut worst = 0.0f64;
    for (e, edge) in mesh.edges().iter().enumerate() {
        let d = mesh.node(edge.nodes[1]) - mesh.node(edge.nodes[0]);
        let mapped = Vec3::new(stretch * d.x, d.y, 0.0);
        let analytic = mapped.norm() / edge.rest_length - 1.0;
        let simulated = mesh.axial_strain(&solve.x, e)?;
        worst = worst.max((simulated - analytic).abs());
    }
    Ok(UniaxialCheck {
        max_strain_deviation: worst,
        stretch,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct CantileverCheck {
    /// In-plane tip deflection relative error against `P L^3 / (3 Y I)`
    /// with the discrete fiber-section moment.
    pub in_plane_rel_err: f64,
    /// Transverse tip deflection relative error against plate theory with
    /// the free-edge anticlastic factor 9/8.
    pub transverse_rel_err: f64,
}

/// End-loaded cantilever strips in the linear regime.
pub fn cantilever_benchmark() -> Result<CantileverCheck, CheckError> {
    Ok(CantileverCheck {
        in_plane_rel_err: cantilever_case(true)?,
        transverse_rel_err: cantilever_case(false)?,
    })
}

fn cantilever_case(in_plane: bool) -> Result<f64, CheckError> {
    let young = 1.0;
    let thickness = 0.3;
    let (cols, rows, dx) = if in_plane { (101, 11, 0.5) } else { (121, 9, 0.33) };
    let patch = equilateral_strip(cols, rows, dx);
    let mesh = Mesh::build(patch.nodes, patch.triangles, &[])?;
    let material = assemble_material(&MaterialConfig {
        substrate: LayerSpec::new(young, thickness).expect("positive"),
        pattern: LayerSpec::new(young, thickness).expect("positive"),
        l0: mesh.mean_edge_length(),
        stretch_scale: 1.0,
    })
    .map_err(|_| CheckError::BenchmarkDidNotConverge("cantilever material"))?;
    let params = EnergyParams::with_default_coupling(material, mesh.mean_edge_length());
    let field = ThermalField::zero(&mesh);

    let length = (cols - 1) as f64 * dx;
    let dy = dx * libm::sqrt(3.0) / 2.0;
    let x_min = -length / 2.0;
    let mut pins = Vec::new();
    let mut clamp_plane = f64::NEG_INFINITY;
    for n in 0..mesh.node_count() {
        let p = mesh.node(n);
        if p.x <= x_min + 1.1 * dx {
            pins.extend([3 * n, 3 * n + 1, 3 * n + 2]);
            if p.x > clamp_plane {
                clamp_plane = p.x;
            }
        } else if in_plane {
            pins.push(3 * n + 2);
        }
    }
    let x_max = length / 2.0;
    let tip: Vec<usize> = (0..mesh.node_count())
        .filter(|&n| mesh.node(n).x > x_max - 1e-9)
        .collect();
    let span = x_max - clamp_plane;

    let r = rows as f64;
    let inertia = if in_plane {
        // exact second moment of the fiber stack
        thickness * dy * dy * dy * r * (r * r - 1.0) / 12.0
    } else {
        (rows - 1) as f64 * dy * thickness * thickness * thickness / 12.0
    };
    let target = 0.002 * span;
    let load = 3.0 * young * inertia * target / (span * span * span);

    let mut f_ext = alloc::vec![0.0; 3 * mesh.node_count()];
    let axis = if in_plane { 1 } else { 2 };
    for &n in &tip {
        f_ext[3 * n + axis] += load / tip.len() as f64;
    }
    let config = SolverConfig {
        constraints: ConstraintScheme::PinnedDofs(pins),
        tol: 1e-10,
        force_tol: Some(load * 1e-3),
        max_newton_iters: 80,
        ..SolverConfig::default()
    };
    let solve = solve_static(&mesh, &mesh.rest_dofs(), &params, &field, &f_ext, &config)?;
    if !solve.converged {
        return Err(CheckError::BenchmarkDidNotConverge("cantilever"));
    }
    let deflection = tip
        .iter()
        .map(|&n| solve.x.node(n).component(axis) - mesh.node(n).component(axis))
        .sum::<f64>()
        / tip.len() as f64;
    let theory = if in_plane { 1.0 } else { 9.0 / 8.0 } * load * span * span * span
        / (3.0 * young * inertia);
    Ok((deflection - theory).abs() / theory)
}

fn fd_of<F>(x: &DofVector, h: f64, mut f: F) -> Result<Vec<f64>, MeshError>
where
    F: FnMut(&DofVector) -> Result<f64, MeshError>,
{
    let mut g = alloc::vec![0.0; x.len()];
    let mut probe = x.clone();
    for i in 0..x.len() {
        let base = x.as_slice()[i];
        probe.as_mut_slice()[i] = base + h;
        let fp = f(&probe)?;
        probe.as_mut_slice()[i] = base - h;
        let fm = f(&probe)?;
        probe.as_mut_slice()[i] = base;
        g[i] = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}

fn fd_rows<F>(x: &DofVector, h: f64, mut f: F) -> Result<Vec<f64>, MeshError>
where
    F: FnMut(&DofVector) -> Result<Vec<f64>, MeshError>,
{
    let n = x.len();
    let mut jac = alloc::vec![0.0; n * n];
    let mut probe = x.clone();
    for col in 0..n {
        let base = x.as_slice()[col];
        probe.as_mut_slice()[col] = base + h;
        let fp = f(&probe)?;
        probe.as_mut_slice()[col] = base - h;
        let fm = f(&probe)?;
        probe.as_mut_slice()[col] = base;
        for row in 0..n {
            jac[row * n + col] = (fp[row] - fm[row]) / (2.0 * h);
        }
    }
    Ok(jac)
}

fn rel_inf(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(1e-300);
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (&x, &y)| m.max((x - y).abs()))
        / scale
}
