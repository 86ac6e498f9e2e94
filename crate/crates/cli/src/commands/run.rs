//! The `run` pipeline: load inputs, solve the scheduled actuation, export
//! snapshots, field tables, the run log, and optional comparison metrics.

use std::path::{Path, PathBuf};

use morphshell_core::energy::{total_energy, EnergyParams};
use morphshell_core::material::{assemble_material, LayerSpec, MaterialConfig};
use morphshell_core::math::Vec3;
use morphshell_core::mesh::{Mesh, Region};
use morphshell_core::metrics::{self, TriSurface};
use morphshell_core::solver::{
    solve_equilibrium_dynamic_with, solve_equilibrium_with, ConstraintScheme, SolveMode,
    SolverConfig, SolverError, SolverState,
};
use morphshell_core::stimulus::{PerturbationDecay, StimulusSchedule, ThermalField};

use crate::config::{DecayKind, ModeKind, RunConfig};
use crate::error::CliError;
use crate::{fields, meshio};

pub struct RunSummary {
    pub converged: bool,
    pub steps: usize,
    pub final_peak_strain: f64,
    pub output_directory: PathBuf,
    /// Aspect ratio of the final state about the morphing axis.
    pub aspect_ratio: f64,
    pub mean_ssim: Option<f64>,
}

/// Everything derived from a validated config, ready to solve.
pub struct PreparedRun {
    pub mesh: Mesh,
    pub params: EnergyParams,
    pub schedule: StimulusSchedule,
    pub solver: SolverConfig,
}

pub fn prepare(config: &RunConfig) -> Result<PreparedRun, CliError> {
    let input = meshio::load_mesh_input(&config.mesh.path, config.mesh.regions.as_deref())?;
    let mesh = input.build()?;
    let l0 = mesh.mean_edge_length();

    let material = assemble_material(&MaterialConfig {
        substrate: layer(config.material.substrate_modulus, config.material.substrate_thickness)?,
        pattern: layer(config.material.pattern_modulus, config.material.pattern_thickness)?,
        l0,
        stretch_scale: config.material.stretch_scale,
    })
    .map_err(|e| CliError::input(format!("material: {e}")))?;
    let coupling = config.material.coupling.unwrap_or(1.0 / l0);
    if !(coupling >= 0.0 && coupling.is_finite()) {
        return Err(CliError::input(format!(
            "material.coupling must be finite and non-negative, got {coupling}"
        )));
    }
    let params = EnergyParams::new(material, coupling, l0);

    let target_strain = match (config.schedule.target_strain, config.schedule.temperature_ratio) {
        (Some(t), _) => t,
        (None, Some(ratio)) => {
            let curve_path = config
                .schedule
                .curve
                .as_ref()
                .ok_or_else(|| CliError::input("temperature_ratio needs a curve".into()))?;
            let curve = meshio::load_shrink_curve(curve_path, config.schedule.tg_kelvin)?;
            curve.shrink_to_strain(ratio)
        }
        (None, None) => unreachable!("validated at load"),
    };
    // calibrated on the bending stiffness: the transverse response is
    // bending-dominated, so a stretching-scale force would balloon the
    // sheet instead of just breaking the planar symmetry
    let perturbation = config.schedule.perturbation_force.unwrap_or_else(|| {
        1e-3 * params.material.bending(Region::SingleLayer) / l0
    });
    let schedule = StimulusSchedule {
        target_strain,
        initial_step: config.schedule.initial_step,
        min_step: config.schedule.min_step,
        max_step: config.schedule.max_step,
        perturbation_force: perturbation,
        decay: match config.schedule.perturbation_decay {
            DecayKind::Linear => PerturbationDecay::Linear,
            DecayKind::Quadratic => PerturbationDecay::Quadratic,
        },
    };
    schedule
        .validate()
        .map_err(|e| CliError::input(format!("schedule: {e}")))?;

    let constraints = match &config.solver.pinned_nodes {
        None => ConstraintScheme::Auto321,
        Some(nodes) => {
            let mut dofs = Vec::with_capacity(3 * nodes.len());
            for &n in nodes {
                if n >= mesh.node_count() {
                    return Err(CliError::input(format!(
                        "solver.pinned_nodes: node {n} out of range (mesh has {})",
                        mesh.node_count()
                    )));
                }
                dofs.extend([3 * n, 3 * n + 1, 3 * n + 2]);
            }
            ConstraintScheme::PinnedDofs(dofs)
        }
    };
    let mode = match config.solver.mode {
        ModeKind::Static => SolveMode::Static,
        ModeKind::Dynamic => SolveMode::Dynamic {
            dt: config.solver.time_step.expect("validated"),
            density: config.solver.density.expect("validated"),
        },
    };
    let solver = SolverConfig {
        tol: config.solver.tolerance,
        max_newton_iters: config.solver.max_newton_iterations,
        constraints,
        mode,
        force_tol: config.solver.force_tolerance,
        ..SolverConfig::default()
    };
    Ok(PreparedRun {
        mesh,
        params,
        schedule,
        solver,
    })
}

fn layer(modulus: f64, thickness: f64) -> Result<LayerSpec, CliError> {
    LayerSpec::new(modulus, thickness).map_err(|e| CliError::input(format!("material: {e}")))
}

/// Execute the full pipeline. Artifacts land in the output directory; a
/// non-converged solve still writes its log before reporting failure.
pub fn execute(config: &RunConfig, quiet: bool) -> Result<RunSummary, CliError> {
    let prepared = prepare(config)?;
    let out_dir = &config.output.directory;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::input(format!("cannot create {}: {e}", out_dir.display())))?;

    let PreparedRun {
        mesh,
        params,
        schedule,
        solver,
    } = &prepared;

    let snapshot_every = config.output.snapshot_every;
    let mut snapshot_error: Option<CliError> = None;
    let solve_result = {
        let callback = |state: &SolverState, field: &ThermalField| {
            let step = state.history.len() - 1;
            if snapshot_every == 0 || step % snapshot_every != 0 {
                return;
            }
            if snapshot_error.is_some() {
                return;
            }
            if let Err(e) = write_snapshot(out_dir, &format!("{step:04}"), mesh, params, state, field)
            {
                snapshot_error = Some(e);
            }
            if !quiet {
                let record = state.history.last().unwrap();
                println!(
                    "step {step}: strain {:.4} iters {} energy {:.6e}",
                    record.peak_strain, record.newton_iterations, record.energy
                );
            }
        };
        match solver.mode {
            SolveMode::Static => {
                solve_equilibrium_with(mesh, params, schedule, solver, callback)
            }
            SolveMode::Dynamic { .. } => {
                solve_equilibrium_dynamic_with(mesh, params, schedule, solver, callback)
            }
        }
    };

    let state = match solve_result {
        Ok(state) => state,
        Err(SolverError::NonFinite { step }) => {
            return Err(CliError::NonConvergence(format!(
                "non-finite coordinates at load step {step}"
            )));
        }
        Err(e) => return Err(CliError::input(format!("solver setup: {e}"))),
    };
    if let Some(e) = snapshot_error {
        return Err(e);
    }

    fields::write_run_log(&out_dir.join("runlog.txt"), &state.history, state.converged)?;
    let final_field = if state.peak_strain == 0.0 {
        ThermalField::zero(mesh)
    } else {
        morphshell_core::stimulus::thermal_field(mesh, state.peak_strain)
            .map_err(|e| CliError::input(format!("thermal field: {e}")))?
    };
    write_snapshot(out_dir, "final", mesh, params, &state, &final_field)?;

    if !state.converged {
        return Err(CliError::NonConvergence(format!(
            "stopped at peak strain {:.4} after {} accepted steps (see {})",
            state.peak_strain,
            state.history.len(),
            out_dir.join("runlog.txt").display()
        )));
    }

    let sim_surface = TriSurface::from_mesh(mesh, &state.x);
    let aspect = metrics::aspect_ratio_about(&sim_surface, Vec3::new(0.0, 0.0, 1.0))
        .map_err(|e| CliError::input(format!("aspect ratio: {e}")))?;

    let mut mean_ssim = None;
    if let Some(metrics_block) = &config.metrics {
        if let Some(reference) = &metrics_block.reference {
            let numbers = compare_surfaces(
                &sim_surface,
                &meshio::load_surface(reference)?,
                metrics_block.grid,
                &out_dir.join("metrics.txt"),
            )?;
            mean_ssim = Some(numbers);
        }
    }

    if !quiet {
        println!(
            "converged at peak strain {:.4} in {} steps; aspect ratio {:.4}",
            state.peak_strain,
            state.history.len(),
            aspect
        );
    }
    Ok(RunSummary {
        converged: state.converged,
        steps: state.history.len(),
        final_peak_strain: state.peak_strain,
        output_directory: out_dir.clone(),
        aspect_ratio: aspect,
        mean_ssim,
    })
}

fn write_snapshot(
    out_dir: &Path,
    label: &str,
    mesh: &Mesh,
    params: &EnergyParams,
    state: &SolverState,
    field: &ThermalField,
) -> Result<(), CliError> {
    meshio::write_obj(&out_dir.join(format!("step_{label}.obj")), mesh, &state.x)?;
    let report = total_energy(mesh, &state.x, params, field)
        .map_err(|e| CliError::input(format!("energy report: {e}")))?;
    fields::write_edge_table(
        &out_dir.join(format!("edges_{label}.txt")),
        mesh,
        &report,
        field,
    )?;
    fields::write_hinge_table(&out_dir.join(format!("hinges_{label}.txt")), mesh, &report)?;
    Ok(())
}

/// Align, voxelize, and compare two surfaces; writes the report and
/// returns the mean SSIM.
pub fn compare_surfaces(
    sim: &TriSurface,
    reference: &TriSurface,
    grid: usize,
    report_path: &Path,
) -> Result<f64, CliError> {
    let align = metrics::align(sim, reference)
        .map_err(|e| CliError::input(format!("alignment: {e}")))?;
    let moved = align.transform.apply_surface(sim);

    let (lo_a, hi_a) = moved.bounds();
    let (lo_b, hi_b) = reference.bounds();
    let lo = Vec3::new(lo_a.x.min(lo_b.x), lo_a.y.min(lo_b.y), lo_a.z.min(lo_b.z));
    let hi = Vec3::new(hi_a.x.max(hi_b.x), hi_a.y.max(hi_b.y), hi_a.z.max(hi_b.z));
    let pad = (hi - lo).scale(0.05);
    let lo = lo - pad;
    let hi = hi + pad;

    let v_sim = metrics::voxelize(&moved, lo, hi, grid)
        .map_err(|e| CliError::input(format!("voxelize sim: {e}")))?;
    let v_ref = metrics::voxelize(reference, lo, hi, grid)
        .map_err(|e| CliError::input(format!("voxelize reference: {e}")))?;
    let ssim = metrics::ssim(&v_sim, &v_ref)
        .map_err(|e| CliError::input(format!("ssim: {e}")))?;

    let numbers = fields::CompareNumbers {
        sim_principal: metrics::aspect_ratio(sim).ok(),
        sim_zhint: metrics::aspect_ratio_about(sim, Vec3::new(0.0, 0.0, 1.0)).ok(),
        ref_principal: metrics::aspect_ratio(reference).ok(),
        ref_zhint: metrics::aspect_ratio_about(reference, Vec3::new(0.0, 0.0, 1.0)).ok(),
    };
    fields::write_compare_report(report_path, &align, &ssim, grid, &numbers)?;
    Ok(ssim.mean)
}
