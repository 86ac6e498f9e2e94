//! Bundled example patterns: three planar precursors (a six-arm star on a
//! disc, a double star on a rectangle, an X-cross on a square) with their
//! stiff-layer layouts, plus the default substrate shrink curve.
//!
//! The generators are deterministic and reproduce the reference mesh
//! statistics exactly: (nodes, edges, triangles) = (970, 2800, 1831) for
//! pattern A, (1215, 3505, 2291) for B, and (388, 1087, 700) for C.

use std::path::Path;

use morphshell_core::lattice::{ring_disc, staggered_grid, LatticePatch};
use morphshell_core::math::Vec3;
use morphshell_core::mesh::Mesh;

use crate::error::CliError;
use crate::meshio;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pattern {
    /// Six-arm star on a circular sheet, 100 mm diameter.
    A,
    /// Two coaxial stars joined by a spine on a 156 x 100 mm rectangle.
    B,
    /// Orthogonal cross along the diagonals of a 100 x 100 mm square.
    C,
}

impl Pattern {
    pub const ALL: [Pattern; 3] = [Pattern::A, Pattern::B, Pattern::C];

    pub fn name(self) -> &'static str {
        match self {
            Pattern::A => "pattern_a",
            Pattern::B => "pattern_b",
            Pattern::C => "pattern_c",
        }
    }

    /// Expected (nodes, edges, triangles) for the bundled meshes.
    pub fn expected_counts(self) -> (usize, usize, usize) {
        match self {
            Pattern::A => (970, 2800, 1831),
            Pattern::B => (1215, 3505, 2291),
            Pattern::C => (388, 1087, 700),
        }
    }

    /// Nominal mean edge length of the bundled meshes (mm).
    pub fn nominal_edge_length(self) -> f64 {
        match self {
            Pattern::A => 3.2,
            Pattern::B => 4.0,
            Pattern::C => 5.8,
        }
    }

    /// Stiff-layer thickness used by the bundled configs (mm).
    pub fn pattern_thickness(self) -> f64 {
        match self {
            Pattern::A => 0.7,
            Pattern::B => 0.6,
            Pattern::C => 1.0,
        }
    }

    /// Actuation stages (peak thermal strains) of the bundled examples;
    /// the last entry is the config's default target.
    pub fn stages(self) -> [f64; 3] {
        match self {
            Pattern::A => [-0.20, -0.30, -0.77],
            Pattern::B => [-0.08, -0.15, -0.30],
            Pattern::C => [-0.10, -0.30, -0.50],
        }
    }
}

/// Ring sizes for the pattern A disc: near-uniform ~2.9 mm spacing, summing
/// to 969 interior+boundary nodes with 107 on the boundary.
const DISC_RINGS: [usize; 17] = [
    7, 13, 19, 26, 32, 38, 44, 51, 57, 63, 70, 76, 82, 88, 95, 101, 107,
];

/// Half-width of the printed arms (mm).
const ARM_HALF_WIDTH: f64 = 4.0;
/// Radial arm length of the six-arm stars (mm).
const STAR_ARM_LENGTH: f64 = 45.0;
/// Center offset of the two stars in pattern B (mm).
const STAR_SEPARATION: f64 = 56.73;
/// Arm length of the pattern C cross (mm).
const CROSS_ARM_LENGTH: f64 = 56.7;

/// Generate geometry and the bilayer triangle set for a pattern.
pub fn build(pattern: Pattern) -> (LatticePatch, Vec<usize>) {
    let patch = match pattern {
        Pattern::A => ring_disc(&DISC_RINGS, 50.0),
        Pattern::B => staggered_grid(30, 41, 40, 156.0, 100.0),
        Pattern::C => staggered_grid(21, 18, 19, 100.0, 100.0),
    };
    let bilayer = (0..patch.triangle_count())
        .filter(|&t| in_pattern(pattern, patch.centroid(t)))
        .collect();
    (patch, bilayer)
}

/// Build the full mesh of a bundled pattern.
pub fn mesh(pattern: Pattern) -> Result<Mesh, CliError> {
    let (patch, bilayer) = build(pattern);
    Mesh::build(patch.nodes, patch.triangles, &bilayer)
        .map_err(|e| CliError::input(format!("{}: {e}", pattern.name())))
}

fn in_pattern(pattern: Pattern, p: Vec3) -> bool {
    match pattern {
        Pattern::A => {
            (0..6).any(|k| in_arm(p, Vec3::default(), k as f64 * 60.0, STAR_ARM_LENGTH))
        }
        Pattern::B => {
            let centers = [Vec3::new(-STAR_SEPARATION / 2.0, 0.0, 0.0),
                           Vec3::new(STAR_SEPARATION / 2.0, 0.0, 0.0)];
            centers.iter().any(|&c| {
                (0..6).any(|k| in_arm(p, c, k as f64 * 60.0, STAR_ARM_LENGTH))
            })
        }
        Pattern::C => {
            (0..4).any(|k| in_arm(p, Vec3::default(), 45.0 + k as f64 * 90.0, CROSS_ARM_LENGTH))
        }
    }
}

/// Membership in one printed arm: a rectangle extending `length` from
/// `center` along the `angle_deg` direction.
fn in_arm(p: Vec3, center: Vec3, angle_deg: f64, length: f64) -> bool {
    let angle = angle_deg.to_radians();
    let d = p - center;
    let along = angle.cos() * d.x + angle.sin() * d.y;
    let across = -angle.sin() * d.x + angle.cos() * d.y;
    (0.0..=length).contains(&along) && across.abs() <= ARM_HALF_WIDTH
}

/// Substrate contraction curve: no shrinkage up to the transition, then a
/// steep drop that settles near L/L0 = 0.4 above T/Tg = 1.15.
pub const SHRINK_CURVE_TEXT: &str = "\
# substrate shrink curve: normalized temperature T/Tg vs shrink ratio L/L0
# Tg = 366.5 K
0.85 1.000
0.90 1.000
0.95 1.000
1.00 1.000
1.02 0.985
1.04 0.950
1.06 0.890
1.08 0.800
1.10 0.690
1.12 0.570
1.14 0.460
1.15 0.425
1.16 0.410
1.18 0.402
1.20 0.400
1.25 0.400
1.30 0.400
";

/// Bundled run configuration for a pattern.
pub fn config_text(pattern: Pattern) -> String {
    let stages = pattern.stages();
    format!(
        "# {name}: bundled example configuration\n\
         # intermediate stages: {s0} and {s1} (override with --target or sweep)\n\
         [mesh]\n\
         path = \"{name}.mesh\"\n\
         \n\
         [material]\n\
         substrate_modulus = 1.0      # MPa\n\
         substrate_thickness = 0.3    # mm\n\
         pattern_modulus = 3.0        # MPa\n\
         pattern_thickness = {h2}     # mm\n\
         stretch_scale = 10.0\n\
         \n\
         [schedule]\n\
         target_strain = {target}\n\
         initial_step = 0.05\n\
         min_step = 1e-4\n\
         max_step = 0.1\n\
         \n\
         [solver]\n\
         tolerance = 1e-5\n\
         max_newton_iterations = 60\n\
         \n\
         [output]\n\
         directory = \"out/{name}\"\n\
         snapshot_every = 1\n",
        name = pattern.name(),
        s0 = stages[0],
        s1 = stages[1],
        h2 = pattern.pattern_thickness(),
        target = stages[2],
    )
}

/// Write all bundled data files (meshes, configs, shrink curve) into a
/// directory.
pub fn write_bundle(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::input(format!("cannot create {}: {e}", dir.display())))?;
    for pattern in Pattern::ALL {
        let (patch, bilayer) = build(pattern);
        let mut flags = vec![false; patch.triangle_count()];
        for &t in &bilayer {
            flags[t] = true;
        }
        let mesh_path = dir.join(format!("{}.mesh", pattern.name()));
        meshio::write_native(&mesh_path, &patch.nodes, &patch.triangles, &flags)?;
        let config_path = dir.join(format!("{}.toml", pattern.name()));
        std::fs::write(&config_path, config_text(pattern))
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", config_path.display())))?;
    }
    std::fs::write(dir.join("shrink_curve.txt"), SHRINK_CURVE_TEXT)
        .map_err(|e| CliError::input(format!("cannot write shrink curve: {e}")))?;
    Ok(())
}
