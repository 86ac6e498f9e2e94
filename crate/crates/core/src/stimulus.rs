//! Thermal stimulus: measured shrink curve, distance-graded strain field,
//! and the incremental load-stepping plan.
//!
//! The substrate contracts where it is not covered by the stiff pattern;
//! the prescribed strain on a single-layer edge grows linearly with the
//! rest-configuration distance from its midpoint to the nearest bilayer
//! edge midpoint, reaching the full `peak_strain` at the farthest edge and
//! staying exactly zero on bilayer edges.

use alloc::vec::Vec;

use crate::math::Vec3;
use crate::mesh::{Mesh, Region};

#[derive(Debug, Clone, PartialEq)]
pub enum StimulusError {
    EmptyCurve,
    /// Temperature samples must be strictly increasing.
    NonMonotoneCurve { index: usize },
    /// Shrink ratios must lie in (0, 1], and equal 1 at or below T/Tg = 1.
    InvalidShrinkRatio { index: usize, value: f64 },
    /// Positive strain would mean expansion; the substrate only contracts.
    PositiveStrain { value: f64 },
    /// The field needs at least one bilayer edge to measure distances from.
    NoBilayerEdges,
    /// The field is trivially zero without single-layer edges.
    NoSingleLayerEdges,
    NonPositiveStep { field: &'static str, value: f64 },
}

impl core::fmt::Display for StimulusError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            StimulusError::EmptyCurve => write!(f, "shrink curve has no samples"),
            StimulusError::NonMonotoneCurve { index } => {
                write!(f, "shrink curve temperatures must increase strictly (sample {index})")
            }
            StimulusError::InvalidShrinkRatio { index, value } => {
                write!(f, "shrink ratio {value} at sample {index} outside (0, 1] or below-Tg sample not 1")
            }
            StimulusError::PositiveStrain { value } => {
                write!(f, "prescribed strain must be <= 0, got {value}")
            }
            StimulusError::NoBilayerEdges => {
                write!(f, "mesh has no bilayer edges; distance field is undefined")
            }
            StimulusError::NoSingleLayerEdges => {
                write!(f, "mesh has no single-layer edges; thermal field would be trivially zero")
            }
            StimulusError::NonPositiveStep { field, value } => {
                write!(f, "{field} must be strictly positive, got {value}")
            }
        }
    }
}

#[cfg(test)]
impl std::error::Error for StimulusError {}

/// Measured contraction of the bare substrate: ordered samples of
/// `(T / Tg, L / L0)`.
#[derive(Debug, Clone)]
pub struct ShrinkCurve {
    samples: Vec<(f64, f64)>,
    tg_kelvin: f64,
}

impl ShrinkCurve {
    pub fn new(samples: Vec<(f64, f64)>, tg_kelvin: f64) -> Result<Self, StimulusError> {
        if samples.is_empty() {
            return Err(StimulusError::EmptyCurve);
        }
        for (i, &(t, ratio)) in samples.iter().enumerate() {
            if i > 0 && !(t > samples[i - 1].0) {
                return Err(StimulusError::NonMonotoneCurve { index: i });
            }
            let below_tg_ok = t > 1.0 || ratio == 1.0;
            if !(ratio > 0.0 && ratio <= 1.0 && below_tg_ok) {
                return Err(StimulusError::InvalidShrinkRatio { index: i, value: ratio });
            }
        }
        Ok(Self { samples, tg_kelvin })
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn tg_kelvin(&self) -> f64 {
        self.tg_kelvin
    }

    /// Contraction strain `L/L0 - 1` at a normalized temperature, linearly
    /// interpolated. Exactly zero at or below `T/Tg = 1`; clamped to the
    /// last sample above the curve range.
    pub fn shrink_to_strain(&self, t_ratio: f64) -> f64 {
        if t_ratio <= 1.0 {
            return 0.0;
        }
        let s = &self.samples;
        if t_ratio <= s[0].0 {
            return s[0].1 - 1.0;
        }
        if t_ratio >= s[s.len() - 1].0 {
            return s[s.len() - 1].1 - 1.0;
        }
        let hi = s.partition_point(|&(t, _)| t < t_ratio);
        let (t0, r0) = s[hi - 1];
        let (t1, r1) = s[hi];
        let w = (t_ratio - t0) / (t1 - t0);
        (r0 + w * (r1 - r0)) - 1.0
    }
}

/// Per-edge prescribed thermal strains for one stimulus level.
#[derive(Debug, Clone)]
pub struct ThermalField {
    peak_strain: f64,
    strains: Vec<f64>,
    distances: Vec<f64>,
    max_distance: f64,
}

impl ThermalField {
    /// Prescribed strain of an edge (zero on bilayer edges).
    #[inline]
    pub fn edge_strain(&self, edge: usize) -> f64 {
        self.strains[edge]
    }

    pub fn strains(&self) -> &[f64] {
        &self.strains
    }

    /// Distance from the edge midpoint to the bilayer region (zero for
    /// bilayer edges).
    pub fn distance(&self, edge: usize) -> f64 {
        self.distances[edge]
    }

    pub fn max_distance(&self) -> f64 {
        self.max_distance
    }

    pub fn peak_strain(&self) -> f64 {
        self.peak_strain
    }

    /// A field of the same shape with every strain identically zero.
    pub fn zero(mesh: &Mesh) -> ThermalField {
        ThermalField {
            peak_strain: 0.0,
            strains: alloc::vec![0.0; mesh.edge_count()],
            distances: alloc::vec![0.0; mesh.edge_count()],
            max_distance: 0.0,
        }
    }
}

/// Build the distance-graded thermal field for a prescribed peak strain
/// (`peak_strain <= 0`). Distances are measured between edge midpoints in
/// the rest configuration by brute-force nearest-neighbor search.
pub fn thermal_field(mesh: &Mesh, peak_strain: f64) -> Result<ThermalField, StimulusError> {
    if !(peak_strain <= 0.0) {
        return Err(StimulusError::PositiveStrain { value: peak_strain });
    }
    let midpoints: Vec<Vec3> = mesh
        .edges()
        .iter()
        .map(|e| (mesh.node(e.nodes[0]) + mesh.node(e.nodes[1])).scale(0.5))
        .collect();
    let bilayer: Vec<usize> = (0..mesh.edge_count())
        .filter(|&e| mesh.edge(e).region == Region::Bilayer)
        .collect();
    if bilayer.is_empty() {
        return Err(StimulusError::NoBilayerEdges);
    }
    if bilayer.len() == mesh.edge_count() {
        return Err(StimulusError::NoSingleLayerEdges);
    }

    let mut distances = alloc::vec![0.0; mesh.edge_count()];
    let mut max_distance = 0.0f64;
    for (e, edge) in mesh.edges().iter().enumerate() {
        if edge.region == Region::Bilayer {
            continue;
        }
        let mut best = f64::INFINITY;
        for &b in &bilayer {
            let d2 = (midpoints[e] - midpoints[b]).norm_sq();
            if d2 < best {
                best = d2;
            }
        }
        let d = libm::sqrt(best);
        distances[e] = d;
        if d > max_distance {
            max_distance = d;
        }
    }

    let strains = mesh
        .edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| {
            if edge.region == Region::Bilayer || max_distance == 0.0 {
                0.0
            } else {
                peak_strain * (distances[e] / max_distance)
            }
        })
        .collect();
    Ok(ThermalField {
        peak_strain,
        strains,
        distances,
        max_distance,
    })
}

/// How the symmetry-breaking perturbation load fades over the actuation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbationDecay {
    /// Proportional to the remaining fraction of the target strain.
    Linear,
    /// Proportional to the square of the remaining fraction.
    Quadratic,
}

/// Load-stepping plan: target peak strain, step-size controls, and the
/// transverse perturbation load that breaks planar symmetry.
#[derive(Debug, Clone)]
pub struct StimulusSchedule {
    /// Final peak thermal strain (<= 0).
    pub target_strain: f64,
    /// Magnitude of the first strain increment.
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Per-node transverse force (N) at the start of the actuation.
    pub perturbation_force: f64,
    pub decay: PerturbationDecay,
}

impl StimulusSchedule {
    pub fn validate(&self) -> Result<(), StimulusError> {
        if !(self.target_strain <= 0.0) {
            return Err(StimulusError::PositiveStrain {
                value: self.target_strain,
            });
        }
        for (field, value) in [
            ("initial_step", self.initial_step),
            ("min_step", self.min_step),
            ("max_step", self.max_step),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(StimulusError::NonPositiveStep { field, value });
            }
        }
        Ok(())
    }

    /// Perturbation magnitude at a given peak strain, following the decay
    /// profile; exactly zero once the target is reached.
    pub fn perturbation_at(&self, peak_strain: f64) -> f64 {
        if self.target_strain == 0.0 {
            return 0.0;
        }
        let remaining = 1.0 - (peak_strain / self.target_strain).clamp(0.0, 1.0);
        if remaining == 0.0 {
            return 0.0;
        }
        match self.decay {
            PerturbationDecay::Linear => self.perturbation_force * remaining,
            PerturbationDecay::Quadratic => self.perturbation_force * remaining * remaining,
        }
    }
}

/// One planned actuation step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannedStep {
    pub peak_strain: f64,
    pub perturbation: f64,
}

/// Fixed-increment plan from zero to the target using the initial step
/// size. A zero target yields a single unperturbed step; the final step
/// always lands exactly on the target with zero perturbation.
pub fn plan_steps(schedule: &StimulusSchedule) -> Result<Vec<PlannedStep>, StimulusError> {
    schedule.validate()?;
    if schedule.target_strain == 0.0 {
        return Ok(alloc::vec![PlannedStep {
            peak_strain: 0.0,
            perturbation: 0.0,
        }]);
    }
    let mut steps = Vec::new();
    let mut level = 0.0f64;
    while level > schedule.target_strain {
        level = (level - schedule.initial_step).max(schedule.target_strain);
        steps.push(PlannedStep {
            peak_strain: level,
            perturbation: schedule.perturbation_at(level),
        });
    }
    Ok(steps)
}
