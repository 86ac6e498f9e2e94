//! Coupled stretch-bend elastic energy of the reduced composite model.
//!
//! Every edge stores `0.5 ks (eps - eps_th)^2`. Every hinge stores
//! `0.5 kb (theta - rest - c * d_eps)^2`, where `d_eps` is the signed
//! strain-mismatch sum over the hinge's four flanking edges and
//! `c = coupling * l0` is the dimensionless coupling strength: an in-plane
//! contraction mismatch across a hinge bends the rest state, which is how a
//! flat sheet buys curvature from the stimulus. Gradients and Hessians are
//! assembled analytically from the kinematic kernels in [`crate::mesh`].

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::material::MaterialModel;
use crate::math::{Mat3, Vec3};
use crate::mesh::{DofVector, Hinge, Mesh, MeshError};
use crate::stimulus::ThermalField;

/// Parameters of the coupled energy.
#[derive(Debug, Clone)]
pub struct EnergyParams {
    pub material: MaterialModel,
    /// Mismatch-to-rest-angle coupling per unit length (1/mm).
    pub coupling: f64,
    /// Mean edge length of the mesh (mm).
    pub l0: f64,
}

impl EnergyParams {
    pub fn new(material: MaterialModel, coupling: f64, l0: f64) -> Self {
        Self {
            material,
            coupling,
            l0,
        }
    }

    /// Default coupling `1/l0`, making the coupling strength exactly one.
    pub fn with_default_coupling(material: MaterialModel, l0: f64) -> Self {
        Self {
            material,
            coupling: 1.0 / l0,
            l0,
        }
    }

    /// Dimensionless coupling strength multiplying the mismatch sum.
    #[inline]
    pub fn coupling_strength(&self) -> f64 {
        self.coupling * self.l0
    }
}

/// Energy breakdown with the per-element fields used for exports.
#[derive(Debug, Clone)]
pub struct EnergyReport {
    pub total: f64,
    pub stretch_total: f64,
    pub bend_total: f64,
    pub edge_stretch_energy: Vec<f64>,
    /// Elastic axial strain per edge.
    pub edge_strain: Vec<f64>,
    pub hinge_bend_energy: Vec<f64>,
    /// Dihedral angle per hinge.
    pub hinge_angle: Vec<f64>,
    /// Full mismatch per hinge (elastic minus thermal flank strains).
    pub hinge_delta_strain: Vec<f64>,
    /// Thermal-only part of the mismatch, kept separate for diagnostics.
    pub hinge_delta_strain_thermal: Vec<f64>,
}

/// Signed strain-mismatch sum over a hinge's four flanking edges:
/// `sum_p s_p (eps_p - eps_th_p)`.
pub fn delta_strain(
    mesh: &Mesh,
    x: &DofVector,
    field: &ThermalField,
    hinge: usize,
) -> Result<f64, MeshError> {
    if hinge >= mesh.hinge_count() {
        return Err(MeshError::HingeIndexOutOfRange { index: hinge });
    }
    let h = mesh.hinge(hinge);
    let mut sum = 0.0;
    for (p, &edge) in h.flank_edges.iter().enumerate() {
        let eps = mesh.axial_strain(x, edge)?;
        sum += h.signs[p] * (eps - field.edge_strain(edge));
    }
    Ok(sum)
}

/// Total energy with per-element fields.
pub fn total_energy(
    mesh: &Mesh,
    x: &DofVector,
    params: &EnergyParams,
    field: &ThermalField,
) -> Result<EnergyReport, MeshError> {
    let mut edge_stretch_energy = Vec::with_capacity(mesh.edge_count());
    let mut edge_strain = Vec::with_capacity(mesh.edge_count());
    let mut stretch_total = 0.0;
    for (e, edge) in mesh.edges().iter().enumerate() {
        let eps = mesh.axial_strain(x, e)?;
        let dev = eps - field.edge_strain(e);
        let energy = 0.5 * params.material.stretching(edge.region) * dev * dev;
        edge_strain.push(eps);
        edge_stretch_energy.push(energy);
        stretch_total += energy;
    }

    let cs = params.coupling_strength();
    let mut hinge_bend_energy = Vec::with_capacity(mesh.hinge_count());
    let mut hinge_angle = Vec::with_capacity(mesh.hinge_count());
    let mut hinge_delta_strain = Vec::with_capacity(mesh.hinge_count());
    let mut hinge_delta_thermal = Vec::with_capacity(mesh.hinge_count());
    let mut bend_total = 0.0;
    for (j, h) in mesh.hinges().iter().enumerate() {
        let theta = mesh.dihedral_angle(x, j)?;
        let mut mismatch = 0.0;
        let mut thermal = 0.0;
        for (p, &edge) in h.flank_edges.iter().enumerate() {
            mismatch += h.signs[p] * (edge_strain[edge] - field.edge_strain(edge));
            thermal += h.signs[p] * field.edge_strain(edge);
        }
        let dev = theta - h.rest_angle - cs * mismatch;
        let energy = 0.5 * params.material.bending(mesh.hinge_region(j)) * dev * dev;
        hinge_angle.push(theta);
        hinge_delta_strain.push(mismatch);
        hinge_delta_thermal.push(thermal);
        hinge_bend_energy.push(energy);
        bend_total += energy;
    }

    Ok(EnergyReport {
        total: stretch_total + bend_total,
        stretch_total,
        bend_total,
        edge_stretch_energy,
        edge_strain,
        hinge_bend_energy,
        hinge_angle,
        hinge_delta_strain,
        hinge_delta_strain_thermal: hinge_delta_thermal,
    })
}

/// Total energy only; the cheap path used by line searches.
pub fn energy_value(
    mesh: &Mesh,
    x: &DofVector,
    params: &EnergyParams,
    field: &ThermalField,
) -> Result<f64, MeshError> {
    let mut strains = Vec::with_capacity(mesh.edge_count());
    let mut total = 0.0;
    for (e, edge) in mesh.edges().iter().enumerate() {
        let eps = mesh.axial_strain(x, e)?;
        let dev = eps - field.edge_strain(e);
        total += 0.5 * params.material.stretching(edge.region) * dev * dev;
        strains.push(eps);
    }
    let cs = params.coupling_strength();
    for (j, h) in mesh.hinges().iter().enumerate() {
        let theta = mesh.dihedral_angle(x, j)?;
        let mut mismatch = 0.0;
        for (p, &edge) in h.flank_edges.iter().enumerate() {
            mismatch += h.signs[p] * (strains[edge] - field.edge_strain(edge));
        }
        let dev = theta - h.rest_angle - cs * mismatch;
        total += 0.5 * params.material.bending(mesh.hinge_region(j)) * dev * dev;
    }
    Ok(total)
}

/// Receives Hessian entries during assembly. Indices are global degrees of
/// freedom; implementations choose what to keep.
pub trait HessianSink {
    fn add(&mut self, p: usize, q: usize, value: f64);
}

/// Sink that discards everything (used to reuse the assembly path when only
/// the gradient is wanted).
pub struct NullSink;

impl HessianSink for NullSink {
    #[inline]
    fn add(&mut self, _p: usize, _q: usize, _value: f64) {}
}

/// Energy gradient as a flat 3N vector.
pub fn energy_gradient(
    mesh: &Mesh,
    x: &DofVector,
    params: &EnergyParams,
    field: &ThermalField,
) -> Result<Vec<f64>, MeshError> {
    let mut grad = alloc::vec![0.0; x.len()];
    accumulate::<NullSink>(mesh, x, params, field, Some(&mut grad), None)?;
    Ok(grad)
}

/// Energy Hessian as a sparse symmetric operator.
pub fn energy_hessian(
    mesh: &Mesh,
    x: &DofVector,
    params: &EnergyParams,
    field: &ThermalField,
) -> Result<SparseSymMatrix, MeshError> {
    let mut builder = SparseBuilder {
        dim: x.len(),
        entries: BTreeMap::new(),
    };
    accumulate(mesh, x, params, field, None, Some(&mut builder))?;
    Ok(builder.finish())
}

/// One pass over all elements, accumulating whichever of energy, gradient,
/// and Hessian the caller asked for. Returns the total energy.
pub fn accumulate<S: HessianSink>(
    mesh: &Mesh,
    x: &DofVector,
    params: &EnergyParams,
    field: &ThermalField,
    mut grad: Option<&mut [f64]>,
    mut hess: Option<&mut S>,
) -> Result<f64, MeshError> {
    mesh.check_dofs(x)?;
    if let Some(g) = grad.as_deref() {
        debug_assert_eq!(g.len(), x.len());
    }
    let mut total = 0.0;
    let want_hess = hess.is_some();

    for (e, edge) in mesh.edges().iter().enumerate() {
        let ks = params.material.stretching(edge.region);
        let eps = mesh.axial_strain(x, e)?;
        let dev = eps - field.edge_strain(e);
        total += 0.5 * ks * dev * dev;

        let sg = mesh.strain_gradient(x, e)?;
        if let Some(g) = grad.as_deref_mut() {
            for (k, &node) in sg.nodes.iter().enumerate() {
                let contrib = sg.d[k].scale(ks * dev);
                g[3 * node] += contrib.x;
                g[3 * node + 1] += contrib.y;
                g[3 * node + 2] += contrib.z;
            }
        }
        if want_hess {
            let sh = mesh.strain_hessian(x, e)?;
            let sink = hess.as_deref_mut().expect("hessian sink present");
            for r in 0..2 {
                for c in 0..2 {
                    // ks (grad x grad + dev * hess)
                    let outer = Mat3::outer(sg.d[r], sg.d[c]);
                    let block = outer.scale(ks).add(sh.blocks[r][c].scale(ks * dev));
                    emit_block(sink, sg.nodes[r], sg.nodes[c], &block);
                }
            }
        }
    }

    let cs = params.coupling_strength();
    for (j, h) in mesh.hinges().iter().enumerate() {
        let kb = params.material.bending(mesh.hinge_region(j));
        let theta = mesh.dihedral_angle(x, j)?;
        let mut mismatch = 0.0;
        for (p, &edge) in h.flank_edges.iter().enumerate() {
            let eps = mesh.axial_strain(x, edge)?;
            mismatch += h.signs[p] * (eps - field.edge_strain(edge));
        }
        let dev = theta - h.rest_angle - cs * mismatch;
        total += 0.5 * kb * dev * dev;

        if grad.is_none() && !want_hess {
            continue;
        }

        // combined gradient  d(theta) - cs * sum_p s_p d(eps_p)
        let ag = mesh.angle_gradient(x, j)?;
        let mut combined = [Vec3::default(); 4];
        for k in 0..4 {
            combined[k] = ag.d[k];
        }
        for (p, &edge) in h.flank_edges.iter().enumerate() {
            let sg = mesh.strain_gradient(x, edge)?;
            for (k, &node) in sg.nodes.iter().enumerate() {
                let slot = stencil_slot(h, node);
                combined[slot] = combined[slot] + sg.d[k].scale(-cs * h.signs[p]);
            }
        }

        if let Some(g) = grad.as_deref_mut() {
            for (slot, &node) in h.nodes.iter().enumerate() {
                let contrib = combined[slot].scale(kb * dev);
                g[3 * node] += contrib.x;
                g[3 * node + 1] += contrib.y;
                g[3 * node + 2] += contrib.z;
            }
        }

        if want_hess {
            let ah = mesh.angle_hessian(x, j)?;
            let mut curvature = ah.blocks;
            for (p, &edge) in h.flank_edges.iter().enumerate() {
                let sh = mesh.strain_hessian(x, edge)?;
                let slots = [stencil_slot(h, sh.nodes[0]), stencil_slot(h, sh.nodes[1])];
                for r in 0..2 {
                    for c in 0..2 {
                        curvature[slots[r]][slots[c]] = curvature[slots[r]][slots[c]]
                            .add(sh.blocks[r][c].scale(-cs * h.signs[p]));
                    }
                }
            }
            let sink = hess.as_deref_mut().expect("hessian sink present");
            for r in 0..4 {
                for c in 0..4 {
                    let block = Mat3::outer(combined[r], combined[c])
                        .scale(kb)
                        .add(curvature[r][c].scale(kb * dev));
                    emit_block(sink, h.nodes[r], h.nodes[c], &block);
                }
            }
        }
    }
    Ok(total)
}

#[inline]
fn stencil_slot(h: &Hinge, node: usize) -> usize {
    h.nodes
        .iter()
        .position(|&n| n == node)
        .expect("flank edge node belongs to the hinge stencil")
}

#[inline]
fn emit_block<S: HessianSink>(sink: &mut S, node_r: usize, node_c: usize, block: &Mat3) {
    for i in 0..3 {
        for j in 0..3 {
            sink.add(3 * node_r + i, 3 * node_c + j, block.m[i][j]);
        }
    }
}

/// Sparse symmetric matrix in lower-triangle CSR form.
#[derive(Debug, Clone)]
pub struct SparseSymMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz_lower(&self) -> usize {
        self.values.len()
    }

    /// Entry (i, j); either triangle may be queried.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        match self.col_idx[lo..hi].binary_search(&c) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    /// `out = H v`, expanding the stored lower triangle symmetrically.
    pub fn mul_vec(&self, v: &[f64], out: &mut [f64]) {
        assert_eq!(v.len(), self.dim);
        assert_eq!(out.len(), self.dim);
        out.fill(0.0);
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                let val = self.values[k];
                out[i] += val * v[j];
                if i != j {
                    out[j] += val * v[i];
                }
            }
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim;
        let mut dense = alloc::vec![0.0; n * n];
        for i in 0..n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                dense[i * n + j] = self.values[k];
                dense[j * n + i] = self.values[k];
            }
        }
        dense
    }

    pub fn infinity_norm(&self) -> f64 {
        let mut row_sums = alloc::vec![0.0; self.dim];
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                let a = self.values[k].abs();
                row_sums[i] += a;
                if i != j {
                    row_sums[j] += a;
                }
            }
        }
        row_sums.iter().fold(0.0, |m, &s| if s > m { s } else { m })
    }
}

struct SparseBuilder {
    dim: usize,
    entries: BTreeMap<(usize, usize), f64>,
}

impl HessianSink for SparseBuilder {
    #[inline]
    fn add(&mut self, p: usize, q: usize, value: f64) {
        if p >= q {
            *self.entries.entry((p, q)).or_insert(0.0) += value;
        }
    }
}

impl SparseBuilder {
    fn finish(self) -> SparseSymMatrix {
        let mut row_ptr = alloc::vec![0usize; self.dim + 1];
        for &(p, _) in self.entries.keys() {
            row_ptr[p + 1] += 1;
        }
        for i in 0..self.dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values = Vec::with_capacity(self.entries.len());
        for ((_, q), v) in self.entries {
            col_idx.push(q);
            values.push(v);
        }
        SparseSymMatrix {
            dim: self.dim,
            row_ptr,
            col_idx,
            values,
        }
    }
}
