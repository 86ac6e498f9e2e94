//! Columnar plain-text exports: per-element field tables, the run log,
//! and comparison reports. All numbers are written with a fixed format so
//! repeated runs produce byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use morphshell_core::energy::EnergyReport;
use morphshell_core::mesh::{Mesh, Region};
use morphshell_core::metrics::{AlignResult, SsimResult};
use morphshell_core::solver::StepRecord;
use morphshell_core::stimulus::ThermalField;

use crate::error::CliError;

fn region_tag(region: Region) -> &'static str {
    match region {
        Region::Bilayer => "bilayer",
        Region::SingleLayer => "single",
    }
}

fn write_file(path: &Path, contents: String) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

/// Per-edge table: elastic and prescribed thermal strain.
pub fn write_edge_table(
    path: &Path,
    mesh: &Mesh,
    report: &EnergyReport,
    field: &ThermalField,
) -> Result<(), CliError> {
    let mut out = String::new();
    out.push_str("# edge n0 n1 region strain thermal_strain stretch_energy\n");
    for (e, edge) in mesh.edges().iter().enumerate() {
        let _ = writeln!(
            out,
            "{e} {} {} {} {:.12e} {:.12e} {:.12e}",
            edge.nodes[0],
            edge.nodes[1],
            region_tag(edge.region),
            report.edge_strain[e],
            field.edge_strain(e),
            report.edge_stretch_energy[e],
        );
    }
    write_file(path, out)
}

/// Per-hinge table: dihedral angle and strain mismatch.
pub fn write_hinge_table(path: &Path, mesh: &Mesh, report: &EnergyReport) -> Result<(), CliError> {
    let mut out = String::new();
    out.push_str("# hinge edge region angle mismatch thermal_mismatch bend_energy\n");
    for (j, h) in mesh.hinges().iter().enumerate() {
        let _ = writeln!(
            out,
            "{j} {} {} {:.12e} {:.12e} {:.12e} {:.12e}",
            h.edge,
            region_tag(mesh.hinge_region(j)),
            report.hinge_angle[j],
            report.hinge_delta_strain[j],
            report.hinge_delta_strain_thermal[j],
            report.hinge_bend_energy[j],
        );
    }
    write_file(path, out)
}

/// Run log: one row per accepted load step.
pub fn write_run_log(path: &Path, history: &[StepRecord], converged: bool) -> Result<(), CliError> {
    let mut out = String::new();
    out.push_str("# step peak_strain perturbation newton_iters rel_dx max_node_force energy\n");
    for r in history {
        let _ = writeln!(
            out,
            "{} {:.12e} {:.12e} {} {:.12e} {:.12e} {:.12e}",
            r.index,
            r.peak_strain,
            r.perturbation,
            r.newton_iterations,
            r.rel_dx,
            r.max_node_force,
            r.energy,
        );
    }
    let _ = writeln!(out, "# converged {converged}");
    write_file(path, out)
}

/// Aspect ratios reported by `compare`: the principal-frame rule and the
/// variant with the height axis hinted along world z (meaningful for
/// simulated states, whose morphing axis is z).
pub struct CompareNumbers {
    pub sim_principal: Option<f64>,
    pub sim_zhint: Option<f64>,
    pub ref_principal: Option<f64>,
    pub ref_zhint: Option<f64>,
}

/// Comparison report: alignment, mean SSIM, per-voxel SSIM grid, aspect
/// ratios.
pub fn write_compare_report(
    path: &Path,
    align: &AlignResult,
    ssim: &SsimResult,
    grid: usize,
    numbers: &CompareNumbers,
) -> Result<(), CliError> {
    let mut out = String::new();
    let _ = writeln!(out, "# mean_ssim {:.12e}", ssim.mean);
    let _ = writeln!(out, "# align_rms {:.12e}", align.rms);
    let _ = writeln!(out, "# align_iterations {}", align.iterations);
    let _ = writeln!(out, "# align_scale {:.12e}", align.transform.scale);
    let aspect = |v: Option<f64>| match v {
        Some(v) => format!("{v:.12e}"),
        None => "undefined".to_string(),
    };
    let _ = writeln!(out, "# sim_aspect_principal {}", aspect(numbers.sim_principal));
    let _ = writeln!(out, "# sim_aspect_zhint {}", aspect(numbers.sim_zhint));
    let _ = writeln!(out, "# ref_aspect_principal {}", aspect(numbers.ref_principal));
    let _ = writeln!(out, "# ref_aspect_zhint {}", aspect(numbers.ref_zhint));
    out.push_str("# i j k ssim\n");
    for i in 0..grid {
        for j in 0..grid {
            for k in 0..grid {
                let v = ssim.map[(i * grid + j) * grid + k];
                let _ = writeln!(out, "{i} {j} {k} {v:.12e}");
            }
        }
    }
    write_file(path, out)
}
