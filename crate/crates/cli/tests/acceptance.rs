//! Acceptance suite: every release gate as one test, each printing a
//! summary line (run with `-- --nocapture` to see them).
//!
//! Gate 7 is known-red: the bundled cross pattern saturates below the
//! aspect-ratio target under this model class (the shipped notes document
//! the analysis); the criterion is asserted faithfully rather than
//! loosened.

use std::path::{Path, PathBuf};

use morphshell_cli::commands::run::{execute, prepare};
use morphshell_cli::config::RunConfig;
use morphshell_core::energy::{energy_gradient, energy_hessian, energy_value, EnergyParams};
use morphshell_core::material::{bilayer_stiffness, layer_stiffness, LayerSpec};
use morphshell_core::math::{Mat3, Vec3};
use morphshell_core::mesh::{DofVector, Mesh, Region};
use morphshell_core::metrics::{
    align, aspect_ratio_about, ssim, voxelize, SimilarityTransform, TriSurface, VoxelVolume,
};
use morphshell_core::solver::{solve_equilibrium, SolverState};
use morphshell_core::stimulus::{thermal_field, ThermalField};

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("morphshell_acceptance").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

struct Rng(u64);

impl Rng {
    fn unit(&mut self) -> f64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        (x >> 11) as f64 / (1u64 << 53) as f64
    }

    fn symmetric(&mut self, a: f64) -> f64 {
        (self.unit() * 2.0 - 1.0) * a
    }
}

fn two_triangle_mesh() -> Mesh {
    let nodes = vec![
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.5, 0.9, 0.0),
        Vec3::new(0.5, -0.8, 0.0),
    ];
    Mesh::build(nodes, vec![[0, 1, 2], [1, 0, 3]], &[0]).unwrap()
}

fn strip_mesh() -> Mesh {
    let patch = morphshell_core::lattice::staggered_grid(5, 5, 6, 4.0, 4.0);
    let bilayer: Vec<usize> = (0..patch.triangle_count())
        .filter(|&t| patch.centroid(t).x < 0.0)
        .collect();
    Mesh::build(patch.nodes, patch.triangles, &bilayer).unwrap()
}

fn default_params(mesh: &Mesh) -> EnergyParams {
    morphshell_core::checks::builtin_params(mesh)
}

fn perturbed(mesh: &Mesh, rng: &mut Rng, amplitude: f64) -> DofVector {
    let scale = amplitude * mesh.mean_edge_length();
    let mut x = mesh.rest_dofs();
    for c in x.as_mut_slice() {
        *c += rng.symmetric(scale);
    }
    x
}

fn fd_gradient<F: FnMut(&DofVector) -> f64>(x: &DofVector, h: f64, mut f: F) -> Vec<f64> {
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

fn rel_inf(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(1e-300);
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (&x, &y)| m.max((x - y).abs()))
        / scale
}

/// Criterion 1: analytic gradient vs central FD < 1e-6 and Hessian vs FD
/// of the gradient < 1e-5 over >= 100 randomized perturbations of the
/// two-triangle mesh and a 5x5 strip.
#[test]
fn criterion_01_derivative_correctness() {
    let mut rng = Rng(0xACC1);
    let mut worst_grad = 0.0f64;
    let mut worst_hess = 0.0f64;
    let mut samples = 0;
    for mesh in [two_triangle_mesh(), strip_mesh()] {
        let params = default_params(&mesh);
        let field = thermal_field(&mesh, -0.25).unwrap();
        let h = 1e-6 * mesh.mean_edge_length();
        for _ in 0..55 {
            samples += 1;
            let x = perturbed(&mesh, &mut rng, 0.1);
            let grad = energy_gradient(&mesh, &x, &params, &field).unwrap();
            let fd = fd_gradient(&x, h, |s| energy_value(&mesh, s, &params, &field).unwrap());
            worst_grad = worst_grad.max(rel_inf(&grad, &fd));

            let hess = energy_hessian(&mesh, &x, &params, &field).unwrap().to_dense();
            let n = x.len();
            let mut fd_h = vec![0.0; n * n];
            let mut probe = x.clone();
            for col in 0..n {
                let base = x.as_slice()[col];
                probe.as_mut_slice()[col] = base + h;
                let gp = energy_gradient(&mesh, &probe, &params, &field).unwrap();
                probe.as_mut_slice()[col] = base - h;
                let gm = energy_gradient(&mesh, &probe, &params, &field).unwrap();
                probe.as_mut_slice()[col] = base;
                for row in 0..n {
                    fd_h[row * n + col] = (gp[row] - gm[row]) / (2.0 * h);
                }
            }
            worst_hess = worst_hess.max(rel_inf(&hess, &fd_h));
        }
    }
    let pass = worst_grad < 1e-6 && worst_hess < 1e-5;
    println!(
        "ACCEPTANCE 1 {}: gradient rel err {worst_grad:.3e} (<1e-6), hessian rel err {worst_hess:.3e} (<1e-5), {samples} randomized states",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass);
}

/// Criterion 2: zero coupling and zero thermal field reduce the energy to
/// the plain discrete-shells form, term by term, to 1e-12.
#[test]
fn criterion_02_classical_limit() {
    let mut rng = Rng(0xACC2);
    let mut worst = 0.0f64;
    for mesh in [two_triangle_mesh(), strip_mesh()] {
        let base = default_params(&mesh);
        let params = EnergyParams::new(base.material, 0.0, base.l0);
        let field = ThermalField::zero(&mesh);
        for _ in 0..20 {
            let x = perturbed(&mesh, &mut rng, 0.15);
            let report = morphshell_core::energy::total_energy(&mesh, &x, &params, &field).unwrap();
            for (e, edge) in mesh.edges().iter().enumerate() {
                let l = (x.node(edge.nodes[1]) - x.node(edge.nodes[0])).norm();
                let eps = l / edge.rest_length - 1.0;
                let term = 0.5 * params.material.stretching(edge.region) * eps * eps;
                let got = report.edge_stretch_energy[e];
                worst = worst.max((term - got).abs() / term.abs().max(1e-30));
            }
            for (j, h) in mesh.hinges().iter().enumerate() {
                let theta = reference_dihedral(&mesh, &x, j);
                let dev = theta - h.rest_angle;
                let term = 0.5 * params.material.bending(mesh.hinge_region(j)) * dev * dev;
                let got = report.hinge_bend_energy[j];
                worst = worst.max((term - got).abs() / term.abs().max(1e-30));
            }
        }
    }
    let pass = worst <= 1e-12;
    println!(
        "ACCEPTANCE 2 {}: classical-limit term-by-term rel deviation {worst:.3e} (<=1e-12)",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass);
}

fn reference_dihedral(mesh: &Mesh, x: &DofVector, hinge: usize) -> f64 {
    let h = mesh.hinge(hinge);
    let normal = |t: usize| -> Vec3 {
        let tri = mesh.triangles()[t];
        let p0 = x.node(tri[0]);
        (x.node(tri[1]) - p0).cross(x.node(tri[2]) - p0)
    };
    let n1 = normal(h.triangles[0]).normalized().unwrap();
    let n2 = normal(h.triangles[1]).normalized().unwrap();
    let e = (x.node(h.nodes[1]) - x.node(h.nodes[0])).normalized().unwrap();
    n1.cross(n2).dot(e).atan2(n1.dot(n2))
}

/// Criterion 3: uniaxial strains match the homogeneous solution to 1e-8;
/// cantilever tip deflection within 2% of beam theory.
#[test]
fn criterion_03_analytic_benchmarks() {
    let uni = morphshell_core::checks::uniaxial_benchmark().unwrap();
    let cant = morphshell_core::checks::cantilever_benchmark().unwrap();
    let pass = uni.max_strain_deviation < 1e-8
        && cant.in_plane_rel_err <= 0.02
        && cant.transverse_rel_err <= 0.02;
    println!(
        "ACCEPTANCE 3 {}: uniaxial strain dev {:.3e} (<1e-8), cantilever rel err {:.4} in-plane / {:.4} transverse (<=0.02)",
        if pass { "PASS" } else { "FAIL" },
        uni.max_strain_deviation,
        cant.in_plane_rel_err,
        cant.transverse_rel_err
    );
    assert!(pass);
}

/// Criterion 4: effective rigidity collapses to the homogeneous plate for
/// equal moduli and half thicknesses, and to the single-layer formula as
/// the second layer vanishes.
#[test]
fn criterion_04_bilayer_rigidity_collapse() {
    let y = 2.3;
    let h = 0.9;
    let half = LayerSpec::new(y, h / 2.0).unwrap();
    let collapsed = bilayer_stiffness(&half, &half, 3.0).unwrap();
    let homogeneous = layer_stiffness(&LayerSpec::new(y, h).unwrap(), 3.0).unwrap();
    let rigidity_err = (collapsed.kb - homogeneous.kb).abs() / homogeneous.kb;

    let l1 = LayerSpec::new(1.0, 0.3).unwrap();
    let thin = LayerSpec::new(3.0, 1e-13).unwrap();
    let limit = bilayer_stiffness(&l1, &thin, 3.2).unwrap();
    let single = layer_stiffness(&l1, 3.2).unwrap();
    let limit_err = ((limit.kb - single.kb) / single.kb)
        .abs()
        .max(((limit.ks - single.ks) / single.ks).abs());

    let pass = rigidity_err <= 4.0 * f64::EPSILON && limit_err < 1e-10;
    println!(
        "ACCEPTANCE 4 {}: equal-layer collapse rel err {rigidity_err:.3e} (machine precision), vanishing-layer rel err {limit_err:.3e}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass);
}

/// Criterion 5: thermal field invariants hold exactly on all three
/// bundled meshes.
#[test]
fn criterion_05_thermal_field_exactness() {
    let mut worst_linearity = 0.0f64;
    for name in ["pattern_a", "pattern_b", "pattern_c"] {
        let input = morphshell_cli::meshio::load_mesh_input(
            &data_dir().join(format!("{name}.mesh")),
            None,
        )
        .unwrap();
        let mesh = input.build().unwrap();
        let peak = -0.31;
        let field = thermal_field(&mesh, peak).unwrap();
        let mut saw_peak = false;
        for (e, edge) in mesh.edges().iter().enumerate() {
            match edge.region {
                Region::Bilayer => assert_eq!(field.edge_strain(e), 0.0, "{name} edge {e}"),
                Region::SingleLayer => {
                    if field.distance(e) == field.max_distance() {
                        assert_eq!(field.edge_strain(e), peak, "{name} edge {e} at d_max");
                        saw_peak = true;
                    }
                    // linearity: eps * d_max == peak * d up to one rounding
                    let lhs = field.edge_strain(e) * field.max_distance();
                    let rhs = peak * field.distance(e);
                    if rhs != 0.0 {
                        worst_linearity = worst_linearity.max(((lhs - rhs) / rhs).abs());
                    }
                }
            }
        }
        assert!(saw_peak, "{name}: peak strain attained at d_max");
    }
    let pass = worst_linearity <= 1e-14;
    println!(
        "ACCEPTANCE 5 {}: field zero on stiff regions (exact), peak at max distance (exact), linearity dev {worst_linearity:.3e}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass);
}

fn solve_bundled(config_name: &str, target: f64) -> (morphshell_core::mesh::Mesh, SolverState) {
    let mut config = RunConfig::load(&data_dir().join(config_name)).unwrap();
    config.schedule.target_strain = Some(target);
    let prepared = prepare(&config).unwrap();
    let state = solve_equilibrium(
        &prepared.mesh,
        &prepared.params,
        &prepared.schedule,
        &prepared.solver,
    )
    .unwrap();
    (prepared.mesh, state)
}

/// Criterion 6: the disc pattern's aspect ratio and peak dihedral angle
/// grow strictly with the actuation level, and the peak bending stays on
/// bare-substrate hinges (deformation localizes between the arms).
#[test]
fn criterion_06_morphing_monotonicity() {
    let stages = [-0.20, -0.30, -0.77];
    let mut aspects = Vec::new();
    let mut peak_angles = Vec::new();
    let mut regions = Vec::new();
    for &target in &stages {
        let start = std::time::Instant::now();
        let (mesh, state) = solve_bundled("pattern_a.toml", target);
        let elapsed = start.elapsed().as_secs_f64();
        assert!(state.converged, "pattern A at {target} converged");
        assert!(elapsed < 600.0, "runtime budget: {elapsed:.0}s < 10 min");
        let surf = TriSurface::from_mesh(&mesh, &state.x);
        aspects.push(aspect_ratio_about(&surf, Vec3::new(0.0, 0.0, 1.0)).unwrap());
        let mut max_theta = 0.0f64;
        let mut max_region = Region::Bilayer;
        for j in 0..mesh.hinge_count() {
            let th = mesh.dihedral_angle(&state.x, j).unwrap().abs();
            if th > max_theta {
                max_theta = th;
                max_region = mesh.hinge_region(j);
            }
        }
        peak_angles.push(max_theta);
        regions.push(max_region);
    }
    let monotone_aspect = aspects.windows(2).all(|w| w[1] > w[0]);
    let monotone_theta = peak_angles.windows(2).all(|w| w[1] > w[0]);
    let localized = regions.iter().all(|&r| r == Region::SingleLayer);
    let pass = monotone_aspect && monotone_theta && localized;
    println!(
        "ACCEPTANCE 6 {}: aspect ratios {:.3?} strictly increasing = {monotone_aspect}, max|angle| {:.3?} strictly increasing = {monotone_theta}, peak bending on bare substrate = {localized}",
        if pass { "PASS" } else { "FAIL" },
        aspects,
        peak_angles
    );
    assert!(pass);
}

/// Criterion 7: final-stage aspect ratio of the cross pattern. Known-red:
/// the reduced model saturates near 0.6-0.9 (see the analysis in the
/// project notes); asserted faithfully rather than loosened.
#[test]
fn criterion_07_cross_pattern_aspect_target() {
    let (mesh, state) = solve_bundled("pattern_c.toml", -0.50);
    assert!(state.converged, "pattern C final stage converged");
    let surf = TriSurface::from_mesh(&mesh, &state.x);
    let aspect = aspect_ratio_about(&surf, Vec3::new(0.0, 0.0, 1.0)).unwrap();
    let pass = aspect >= 1.0;
    println!(
        "ACCEPTANCE 7 {}: cross-pattern final-stage aspect ratio {aspect:.4} (target >= 1.0)",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "reported aspect ratio {aspect:.4} below 1.0");
}

/// Criterion 8: SSIM self-identity, symmetry, brute-force agreement to
/// 1e-12, and alignment invariance of the mean SSIM.
#[test]
fn criterion_08_ssim_correctness() {
    let mut rng = Rng(0xACC8);
    let lo = Vec3::default();
    let hi = Vec3::new(1.0, 1.0, 1.0);
    let ns = 10;

    let mut worst_oracle = 0.0f64;
    let mut symmetric = true;
    let mut self_identity = true;
    for _ in 0..5 {
        let d1: Vec<f64> = (0..ns * ns * ns).map(|_| rng.unit()).collect();
        let d2: Vec<f64> = (0..ns * ns * ns).map(|_| rng.unit()).collect();
        let v1 = VoxelVolume::from_intensities(lo, hi, ns, d1).unwrap();
        let v2 = VoxelVolume::from_intensities(lo, hi, ns, d2).unwrap();
        let s_ab = ssim(&v1, &v2).unwrap();
        let s_ba = ssim(&v2, &v1).unwrap();
        symmetric &= s_ab.mean == s_ba.mean;
        self_identity &= ssim(&v1, &v1).unwrap().mean == 1.0;
        let brute = brute_force_ssim(&v1, &v2);
        for (a, b) in s_ab.map.iter().zip(&brute) {
            worst_oracle = worst_oracle.max((a - b).abs());
        }
    }

    // alignment invariance: a similarity-transformed copy aligns back and
    // scores ~1 against the original
    let sheet = bumpy_sheet();
    let truth = SimilarityTransform {
        scale: 1.4,
        rotation: rotation_z(0.4),
        translation: Vec3::new(0.6, -0.2, 0.9),
    };
    let moved = truth.apply_surface(&sheet);
    let result = align(&moved, &sheet).unwrap();
    let back = result.transform.apply_surface(&moved);
    let (blo, bhi) = sheet.bounds();
    let pad = (bhi - blo).scale(0.08);
    let v_ref = voxelize(&sheet, blo - pad, bhi + pad, ns).unwrap();
    let v_back = voxelize(&back, blo - pad, bhi + pad, ns).unwrap();
    let aligned_mean = ssim(&v_ref, &v_back).unwrap().mean;

    let pass =
        self_identity && symmetric && worst_oracle <= 1e-12 && aligned_mean >= 0.999;
    println!(
        "ACCEPTANCE 8 {}: self-SSIM exact = {self_identity}, symmetry exact = {symmetric}, brute-force dev {worst_oracle:.3e} (<=1e-12), aligned-copy mean SSIM {aligned_mean:.6} (>=0.999)",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass);
}

/// Independent windowed SSIM on raw intensities, organized differently
/// from the implementation (covariance via E[xy] - mu1 mu2).
fn brute_force_ssim(v1: &VoxelVolume, v2: &VoxelVolume) -> Vec<f64> {
    let ns = v1.resolution() as isize;
    let c1 = (0.01f64).powi(2);
    let c2 = (0.03f64).powi(2);
    let mut out = Vec::new();
    for i in 0..ns {
        for j in 0..ns {
            for k in 0..ns {
                let mut xs: Vec<f64> = Vec::new();
                let mut ys: Vec<f64> = Vec::new();
                for di in -1..=1isize {
                    for dj in -1..=1isize {
                        for dk in -1..=1isize {
                            let (a, b, c) = (i + di, j + dj, k + dk);
                            if a < 0 || b < 0 || c < 0 || a >= ns || b >= ns || c >= ns {
                                continue;
                            }
                            xs.push(v1.at(a as usize, b as usize, c as usize));
                            ys.push(v2.at(a as usize, b as usize, c as usize));
                        }
                    }
                }
                let m = xs.len() as f64;
                let mu1: f64 = xs.iter().sum::<f64>() / m;
                let mu2: f64 = ys.iter().sum::<f64>() / m;
                let e_xx: f64 = xs.iter().map(|x| x * x).sum::<f64>() / m;
                let e_yy: f64 = ys.iter().map(|y| y * y).sum::<f64>() / m;
                let e_xy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum::<f64>() / m;
                let var1 = e_xx - mu1 * mu1;
                let var2 = e_yy - mu2 * mu2;
                let cov = e_xy - mu1 * mu2;
                out.push(
                    ((2.0 * mu1 * mu2 + c1) * (2.0 * cov + c2))
                        / ((mu1 * mu1 + mu2 * mu2 + c1) * (var1 + var2 + c2)),
                );
            }
        }
    }
    out
}

fn bumpy_sheet() -> TriSurface {
    let n = 14;
    let mut positions = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let x = i as f64 / (n - 1) as f64 * 2.0 - 1.0;
            let y = j as f64 / (n - 1) as f64 * 2.0 - 1.0;
            let z = 0.3 * (2.0 * x + 0.5).sin() + 0.25 * (3.0 * y).cos() + 0.15 * x * y;
            positions.push(Vec3::new(x, y, z));
        }
    }
    let mut triangles = Vec::new();
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let a = i * n + j;
            let b = a + 1;
            let c = a + n;
            let d = c + 1;
            triangles.push([a, b, c]);
            triangles.push([b, d, c]);
        }
    }
    TriSurface::new(positions, triangles).unwrap()
}

fn rotation_z(angle: f64) -> Mat3 {
    let c = angle.cos();
    let s = angle.sin();
    Mat3 {
        m: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
    }
}

/// Criterion 9: the experimental-scan comparison is out of desk-scale
/// scope (substituted by gates 6-8); the compare pipeline itself is
/// exercised end to end on synthetic shapes.
#[test]
fn criterion_09_scan_comparison_substitute() {
    let sheet = bumpy_sheet();
    let moved = SimilarityTransform {
        scale: 1.2,
        rotation: rotation_z(-0.3),
        translation: Vec3::new(0.4, 0.1, -0.2),
    }
    .apply_surface(&sheet);
    let dir = scratch("criterion9");
    let report = dir.join("compare.txt");
    let mean = morphshell_cli::commands::run::compare_surfaces(&moved, &sheet, 10, &report)
        .unwrap();
    let report_exists = report.exists();
    let pass = report_exists && mean > 0.99 && mean <= 1.0;
    println!(
        "ACCEPTANCE 9 {}: experimental-scan SSIM not reproducible at desk scale (no scan data); compare pipeline verified on synthetic shapes, mean SSIM {mean:.4}, report written = {report_exists}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass);
}

/// Criterion 10: repeated runs of a bundled config produce byte-identical
/// artifacts.
#[test]
fn criterion_10_determinism() {
    let mut config = RunConfig::load(&data_dir().join("pattern_c.toml")).unwrap();
    let dir_a = scratch("determinism_a");
    let dir_b = scratch("determinism_b");

    config.output.directory = dir_a.clone();
    execute(&config, true).unwrap();
    config.output.directory = dir_b.clone();
    execute(&config, true).unwrap();

    let mut names: Vec<String> = std::fs::read_dir(&dir_a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(!names.is_empty());
    let mut identical = true;
    for name in &names {
        let a = std::fs::read(dir_a.join(name)).unwrap();
        let b = std::fs::read(dir_b.join(name)).unwrap();
        if a != b {
            identical = false;
            println!("  artifact {name} differs between runs");
        }
    }
    println!(
        "ACCEPTANCE 10 {}: {} artifacts byte-identical across repeated runs = {identical}",
        if identical { "PASS" } else { "FAIL" },
        names.len()
    );
    assert!(identical);
}
