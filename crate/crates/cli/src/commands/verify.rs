//! The `verify` command: finite-difference derivative checks plus the
//! closed-form static benchmarks, one pass/fail line per check.

use morphshell_core::checks;
use morphshell_core::mesh::Region;
use morphshell_core::stimulus::{thermal_field, ThermalField};

use crate::error::CliError;
use crate::meshio;

pub struct VerifyOptions {
    /// Extra mesh to run the derivative suite on.
    pub mesh: Option<std::path::PathBuf>,
    pub regions: Option<std::path::PathBuf>,
    /// Randomized states per derivative check.
    pub samples: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            mesh: None,
            regions: None,
            samples: 4,
        }
    }
}

struct Gate {
    name: &'static str,
    value: f64,
    limit: f64,
}

pub fn run(options: &VerifyOptions) -> Result<(), CliError> {
    let mut gates: Vec<Gate> = Vec::new();

    let builtin = checks::check_builtin_derivatives(options.samples)
        .map_err(|e| CliError::input(format!("derivative check: {e}")))?;
    gates.push(Gate {
        name: "energy gradient vs finite differences (rel err)",
        value: builtin.max_gradient_rel_err,
        limit: 1e-6,
    });
    gates.push(Gate {
        name: "energy hessian vs finite differences (rel err)",
        value: builtin.max_hessian_rel_err,
        limit: 1e-5,
    });
    gates.push(Gate {
        name: "hessian asymmetry (must be exactly zero)",
        value: builtin.max_hessian_asymmetry,
        limit: 0.0,
    });

    if let Some(mesh_path) = &options.mesh {
        let input = meshio::load_mesh_input(mesh_path, options.regions.as_deref())?;
        let mesh = input.build()?;
        let params = checks::builtin_params(&mesh);
        let has_both = mesh.edges().iter().any(|e| e.region == Region::Bilayer)
            && mesh.edges().iter().any(|e| e.region == Region::SingleLayer);
        let field = if has_both {
            thermal_field(&mesh, -0.25)
                .map_err(|e| CliError::input(format!("thermal field: {e}")))?
        } else {
            ThermalField::zero(&mesh)
        };
        let user = checks::check_energy_derivatives(&mesh, &params, &field, 1, 0xF00D)
            .map_err(|e| CliError::input(format!("derivative check on user mesh: {e}")))?;
        gates.push(Gate {
            name: "user mesh gradient vs finite differences (rel err)",
            value: user.max_gradient_rel_err,
            limit: 1e-6,
        });
        gates.push(Gate {
            name: "user mesh hessian vs finite differences (rel err)",
            value: user.max_hessian_rel_err,
            limit: 1e-5,
        });
    }

    let uniaxial = checks::uniaxial_benchmark()
        .map_err(|e| CliError::input(format!("uniaxial benchmark: {e}")))?;
    gates.push(Gate {
        name: "uniaxial strain vs homogeneous solution (abs err)",
        value: uniaxial.max_strain_deviation,
        limit: 1e-8,
    });

    let cantilever = checks::cantilever_benchmark()
        .map_err(|e| CliError::input(format!("cantilever benchmark: {e}")))?;
    gates.push(Gate {
        name: "in-plane cantilever vs beam theory (rel err)",
        value: cantilever.in_plane_rel_err,
        limit: 0.02,
    });
    gates.push(Gate {
        name: "transverse cantilever vs plate theory (rel err)",
        value: cantilever.transverse_rel_err,
        limit: 0.02,
    });

    let mut failed = Vec::new();
    for gate in &gates {
        let pass = gate.value <= gate.limit;
        println!(
            "{}: {:.3e} (limit {:.1e}) {}",
            gate.name,
            gate.value,
            gate.limit,
            if pass { "PASS" } else { "FAIL" }
        );
        if !pass {
            failed.push(gate.name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::VerificationBreach(failed.join("; ")))
    }
}
