//! Per-region stretching and bending stiffnesses.
//!
//! An edge stores `0.5 * ks * strain^2` and a hinge `0.5 * kb * deviation^2`;
//! for a homogeneous layer the discrete stiffnesses
//!
//! ```text
//! ks = (sqrt(3)/2) Y h l0^2        kb = (2/sqrt(3)) D,   D = Y h^3 / 12
//! ```
//!
//! recover the continuum thin-plate equations in the refinement limit
//! (Y in MPa, h and l0 in mm, so ks and kb come out in N*mm). Bilayer
//! regions use the effective stack properties: stretching stiffnesses add,
//! and the flexural rigidity follows from the parallel-axis sum about the
//! modulus-weighted neutral axis.

use crate::mesh::Region;

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, PartialEq)]
pub enum MaterialError {
    /// A quantity that must be strictly positive was not; carries the name.
    NonPositive { field: &'static str, value: f64 },
}

impl core::fmt::Display for MaterialError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MaterialError::NonPositive { field, value } => {
                write!(f, "{field} must be strictly positive, got {value}")
            }
        }
    }
}

#[cfg(test)]
impl std::error::Error for MaterialError {}

/// One layer of the composite: Young's modulus (MPa) and thickness (mm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerSpec {
    pub young_modulus: f64,
    pub thickness: f64,
}

impl LayerSpec {
    pub fn new(young_modulus: f64, thickness: f64) -> Result<Self, MaterialError> {
        require_positive("young_modulus", young_modulus)?;
        require_positive("thickness", thickness)?;
        Ok(Self {
            young_modulus,
            thickness,
        })
    }
}

/// Per-edge stretching stiffness `ks` and per-hinge bending stiffness `kb`,
/// both in N*mm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stiffness {
    pub ks: f64,
    pub kb: f64,
}

/// Region-resolved stiffnesses for a whole mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialModel {
    single: Stiffness,
    bilayer: Stiffness,
    stretch_scale: f64,
}

impl MaterialModel {
    pub fn stretching(&self, region: Region) -> f64 {
        match region {
            Region::SingleLayer => self.single.ks,
            Region::Bilayer => self.bilayer.ks,
        }
    }

    pub fn bending(&self, region: Region) -> f64 {
        match region {
            Region::SingleLayer => self.single.kb,
            Region::Bilayer => self.bilayer.kb,
        }
    }

    /// The multiplier already applied to both stretching stiffnesses.
    pub fn stretch_scale(&self) -> f64 {
        self.stretch_scale
    }
}

/// Stiffness of a single homogeneous layer on a mesh with mean edge
/// length `l0`.
pub fn layer_stiffness(layer: &LayerSpec, l0: f64) -> Result<Stiffness, MaterialError> {
    require_positive("l0", l0)?;
    require_positive("young_modulus", layer.young_modulus)?;
    require_positive("thickness", layer.thickness)?;
    let rigidity = layer.young_modulus * layer.thickness * layer.thickness * layer.thickness / 12.0;
    Ok(Stiffness {
        ks: SQRT3 / 2.0 * layer.young_modulus * layer.thickness * l0 * l0,
        kb: 2.0 / SQRT3 * rigidity,
    })
}

/// Effective flexural rigidity per unit width of a two-layer stack, with
/// layer 1 at the bottom.
pub fn effective_rigidity(layer1: &LayerSpec, layer2: &LayerSpec) -> f64 {
    let (y1, h1) = (layer1.young_modulus, layer1.thickness);
    let (y2, h2) = (layer2.young_modulus, layer2.thickness);
    // centroid heights, measuring from the bottom of layer 1
    let c1 = h1 / 2.0;
    let c2 = h1 + h2 / 2.0;
    let neutral = (y1 * h1 * c1 + y2 * h2 * c2) / (y1 * h1 + y2 * h2);
    y1 * (h1 * h1 * h1 / 12.0 + h1 * (c1 - neutral) * (c1 - neutral))
        + y2 * (h2 * h2 * h2 / 12.0 + h2 * (c2 - neutral) * (c2 - neutral))
}

/// Stiffness of the bonded stack: stretching stiffnesses add, bending uses
/// the neutral-axis effective rigidity with the same per-hinge width
/// normalization as the single layer.
pub fn bilayer_stiffness(
    layer1: &LayerSpec,
    layer2: &LayerSpec,
    l0: f64,
) -> Result<Stiffness, MaterialError> {
    let s1 = layer_stiffness(layer1, l0)?;
    let s2 = layer_stiffness(layer2, l0)?;
    Ok(Stiffness {
        ks: s1.ks + s2.ks,
        kb: 2.0 / SQRT3 * effective_rigidity(layer1, layer2),
    })
}

/// Inputs for [`assemble_material`].
#[derive(Debug, Clone, Copy)]
pub struct MaterialConfig {
    /// Responsive substrate (layer 1, bottom).
    pub substrate: LayerSpec,
    /// Patterned stiff layer (layer 2, top), present only in bilayer regions.
    pub pattern: LayerSpec,
    /// Mean edge length of the mesh (mm).
    pub l0: f64,
    /// Multiplier applied to both stretching stiffnesses; bending is
    /// unaffected. Default 10.
    pub stretch_scale: f64,
}

pub const DEFAULT_STRETCH_SCALE: f64 = 10.0;

/// Assemble the region-resolved material model.
pub fn assemble_material(config: &MaterialConfig) -> Result<MaterialModel, MaterialError> {
    require_positive("stretch_scale", config.stretch_scale)?;
    let single = layer_stiffness(&config.substrate, config.l0)?;
    let bilayer = bilayer_stiffness(&config.substrate, &config.pattern, config.l0)?;
    Ok(MaterialModel {
        single: Stiffness {
            ks: single.ks * config.stretch_scale,
            kb: single.kb,
        },
        bilayer: Stiffness {
            ks: bilayer.ks * config.stretch_scale,
            kb: bilayer.kb,
        },
        stretch_scale: config.stretch_scale,
    })
}

fn require_positive(field: &'static str, value: f64) -> Result<(), MaterialError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(MaterialError::NonPositive { field, value })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(y: f64, h: f64) -> LayerSpec {
        LayerSpec::new(y, h).unwrap()
    }

    #[test]
    fn unit_layer_stiffness() {
        let s = layer_stiffness(&layer(1.0, 1.0), 1.0).unwrap();
        assert!((s.ks - SQRT3 / 2.0).abs() < 1e-15);
        assert!((s.kb - 1.0 / (6.0 * SQRT3)).abs() < 1e-15);
    }

    #[test]
    fn thickness_scaling() {
        let thin = layer_stiffness(&layer(2.0, 0.5), 3.0).unwrap();
        let thick = layer_stiffness(&layer(2.0, 1.0), 3.0).unwrap();
        assert!((thick.ks / thin.ks - 2.0).abs() < 1e-12);
        assert!((thick.kb / thin.kb - 8.0).abs() < 1e-12);
    }

    #[test]
    fn substrate_stiffness_for_fine_pattern() {
        // Y = 1 MPa, h = 0.3 mm, l0 = 3.2 mm, before the stretch scaling
        let s = layer_stiffness(&layer(1.0, 0.3), 3.2).unwrap();
        assert!((s.ks - SQRT3 / 2.0 * 0.3 * 3.2 * 3.2).abs() < 1e-12);
        assert!((s.ks - 2.66).abs() < 0.005);
    }

    #[test]
    fn equal_moduli_half_layers_collapse_to_homogeneous() {
        let y = 2.5;
        let h = 0.8;
        let half = layer(y, h / 2.0);
        let d = effective_rigidity(&half, &half);
        let homogeneous = y * h * h * h / 12.0;
        assert!((d - homogeneous).abs() <= 1e-15 * homogeneous.abs());
    }

    #[test]
    fn vanishing_second_layer_recovers_single_layer() {
        let l1 = layer(1.0, 0.3);
        let l2 = layer(3.0, 1e-14);
        let bi = bilayer_stiffness(&l1, &l2, 3.2).unwrap();
        let single = layer_stiffness(&l1, 3.2).unwrap();
        assert!((bi.ks - single.ks).abs() < 1e-10 * single.ks);
        assert!((bi.kb - single.kb).abs() < 1e-10 * single.kb);
    }

    #[test]
    fn reference_bilayer_rigidity() {
        // hand evaluation of the neutral-axis formula:
        // Y1=1, h1=0.3, Y2=3, h2=0.7 -> neutral axis 0.5875 mm,
        // D = 1*(0.3^3/12 + 0.3*(0.15-0.5875)^2)
        //   + 3*(0.7^3/12 + 0.7*(0.65-0.5875)^2)
        let l1 = layer(1.0, 0.3);
        let l2 = layer(3.0, 0.7);
        let (y1, h1, y2, h2) = (1.0, 0.3, 3.0, 0.7);
        let neutral: f64 = (y1 * h1 * 0.15 + y2 * h2 * 0.65) / (y1 * h1 + y2 * h2);
        assert!((neutral - 0.5875) < 1e-10);
        let expected = y1 * (h1 * h1 * h1 / 12.0 + h1 * (0.15f64 - neutral) * (0.15 - neutral))
            + y2 * (h2 * h2 * h2 / 12.0 + h2 * (0.65f64 - neutral) * (0.65 - neutral));
        let d = effective_rigidity(&l1, &l2);
        assert!((d - expected).abs() < 1e-15);
        assert!((d - 0.15363).abs() < 5e-5);
    }

    #[test]
    fn rigidity_never_below_plain_sum_and_mirror_symmetric() {
        let cases = [
            (layer(1.0, 0.3), layer(3.0, 0.7)),
            (layer(2.0, 0.5), layer(2.0, 0.5)),
            (layer(0.7, 1.2), layer(5.0, 0.1)),
        ];
        for (a, b) in cases {
            let d = effective_rigidity(&a, &b);
            let plain = a.young_modulus * a.thickness.powi(3) / 12.0
                + b.young_modulus * b.thickness.powi(3) / 12.0;
            assert!(d >= plain - 1e-15);
            // flipping the stack upside down relabels the layers
            let mirrored = effective_rigidity(&b, &a);
            assert!((d - mirrored).abs() < 1e-14 * d.abs());
        }
    }

    #[test]
    fn stretch_scale_multiplies_ks_only() {
        let base = MaterialConfig {
            substrate: layer(1.0, 0.3),
            pattern: layer(3.0, 0.7),
            l0: 3.2,
            stretch_scale: 1.0,
        };
        let unscaled = assemble_material(&base).unwrap();
        let scaled = assemble_material(&MaterialConfig {
            stretch_scale: 10.0,
            ..base
        })
        .unwrap();
        for region in [Region::SingleLayer, Region::Bilayer] {
            assert!(
                (scaled.stretching(region) - 10.0 * unscaled.stretching(region)).abs()
                    < 1e-12 * scaled.stretching(region)
            );
            assert_eq!(scaled.bending(region), unscaled.bending(region));
        }
    }

    #[test]
    fn thicker_pattern_layer_is_stiffer_in_bending() {
        let thick = bilayer_stiffness(&layer(1.0, 0.3), &layer(3.0, 1.0), 5.8).unwrap();
        let thin = bilayer_stiffness(&layer(1.0, 0.3), &layer(3.0, 0.6), 4.0).unwrap();
        assert!(thick.kb > thin.kb);
    }

    #[test]
    fn non_positive_inputs_name_the_field() {
        assert_eq!(
            LayerSpec::new(0.0, 1.0).unwrap_err(),
            MaterialError::NonPositive {
                field: "young_modulus",
                value: 0.0
            }
        );
        assert_eq!(
            layer_stiffness(&layer(1.0, 1.0), -2.0).unwrap_err(),
            MaterialError::NonPositive {
                field: "l0",
                value: -2.0
            }
        );
    }
}
