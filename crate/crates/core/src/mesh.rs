//! Triangle-mesh topology and geometry kernel.
//!
//! A [`Mesh`] is immutable after construction: it owns the rest geometry
//! (node positions, edge rest lengths, hinge rest angles), the connectivity
//! (edges deduplicated from triangles, hinges enumerated for every interior
//! edge), and the per-element region labels that select material properties.
//!
//! Deformed configurations live in a separate flat coordinate vector
//! ([`DofVector`]); every kinematic query is a pure function of
//! `(Mesh, DofVector)`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::math::{Mat3, Vec3};

/// Material region of a mesh element.
///
/// `Bilayer` marks elements covered by the patterned stiff layer bonded to
/// the substrate; `SingleLayer` marks bare substrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    SingleLayer,
    Bilayer,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshError {
    /// A triangle references a node index outside the node list.
    NodeIndexOutOfRange { triangle: usize, index: usize },
    /// A bilayer label references a triangle index outside the triangle list.
    RegionIndexOutOfRange { index: usize },
    /// A triangle has (numerically) zero area in the rest configuration.
    DegenerateTriangle { triangle: usize },
    /// More than two triangles share one edge.
    NonManifoldEdge { nodes: [usize; 2], count: usize },
    /// Two triangles traverse a shared edge in the same direction.
    InconsistentWinding { nodes: [usize; 2] },
    EdgeIndexOutOfRange { index: usize },
    HingeIndexOutOfRange { index: usize },
    /// The endpoints of an edge coincide in the queried configuration.
    CollapsedEdge { edge: usize },
    /// A triangle is degenerate in the queried (deformed) configuration.
    DegenerateDeformedTriangle { triangle: usize },
    /// Coordinate vector length does not equal 3 * node count.
    DofLengthMismatch { expected: usize, actual: usize },
    NonFiniteDof { index: usize },
    EmptyMesh,
}

impl core::fmt::Display for MeshError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MeshError::NodeIndexOutOfRange { triangle, index } => {
                write!(f, "triangle {triangle} references node {index} out of range")
            }
            MeshError::RegionIndexOutOfRange { index } => {
                write!(f, "bilayer label references triangle {index} out of range")
            }
            MeshError::DegenerateTriangle { triangle } => {
                write!(f, "triangle {triangle} has zero area in the rest configuration")
            }
            MeshError::NonManifoldEdge { nodes, count } => write!(
                f,
                "edge ({}, {}) is shared by {count} triangles; at most 2 allowed",
                nodes[0], nodes[1]
            ),
            MeshError::InconsistentWinding { nodes } => write!(
                f,
                "edge ({}, {}) is traversed in the same direction by both triangles",
                nodes[0], nodes[1]
            ),
            MeshError::EdgeIndexOutOfRange { index } => write!(f, "edge index {index} out of range"),
            MeshError::HingeIndexOutOfRange { index } => {
                write!(f, "hinge index {index} out of range")
            }
            MeshError::CollapsedEdge { edge } => {
                write!(f, "edge {edge} has coincident endpoints")
            }
            MeshError::DegenerateDeformedTriangle { triangle } => {
                write!(f, "triangle {triangle} is degenerate in the queried configuration")
            }
            MeshError::DofLengthMismatch { expected, actual } => {
                write!(f, "coordinate vector has length {actual}, expected {expected}")
            }
            MeshError::NonFiniteDof { index } => {
                write!(f, "coordinate entry {index} is not finite")
            }
            MeshError::EmptyMesh => write!(f, "mesh has no nodes or no triangles"),
        }
    }
}

#[cfg(test)]
impl std::error::Error for MeshError {}

/// Flat vector of nodal coordinates; node `i` occupies entries `3i..3i+3`.
#[derive(Debug, Clone, PartialEq)]
pub struct DofVector {
    coords: Vec<f64>,
}

impl DofVector {
    /// Wrap a coordinate vector, rejecting non-finite entries and lengths
    /// that are not a multiple of three.
    pub fn new(coords: Vec<f64>) -> Result<Self, MeshError> {
        if coords.len() % 3 != 0 {
            return Err(MeshError::DofLengthMismatch {
                expected: coords.len() / 3 * 3,
                actual: coords.len(),
            });
        }
        for (i, c) in coords.iter().enumerate() {
            if !c.is_finite() {
                return Err(MeshError::NonFiniteDof { index: i });
            }
        }
        Ok(Self { coords })
    }

    pub fn zeros(node_count: usize) -> Self {
        Self {
            coords: alloc::vec![0.0; 3 * node_count],
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.coords.len() / 3
    }

    #[inline]
    pub fn node(&self, i: usize) -> Vec3 {
        Vec3::new(self.coords[3 * i], self.coords[3 * i + 1], self.coords[3 * i + 2])
    }

    #[inline]
    pub fn set_node(&mut self, i: usize, v: Vec3) {
        self.coords[3 * i] = v.x;
        self.coords[3 * i + 1] = v.y;
        self.coords[3 * i + 2] = v.z;
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    /// Mutable access to the raw coordinates. Finiteness is re-checked by
    /// consumers that iterate (the solver aborts on NaN), not per write.
    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.coords.iter().map(|c| c * c).sum())
    }
}

/// An undirected edge with its rest length and region label.
#[derive(Debug, Clone)]
pub struct Edge {
    /// Endpoint node indices, lower index first.
    pub nodes: [usize; 2],
    /// Rest length (mm), strictly positive.
    pub rest_length: f64,
    pub region: Region,
}

/// A bending pair: an interior edge together with the two flanking triangles.
///
/// Stencil node order is `[a, b, opposite_first, opposite_second]` where
/// the opposite vertices belong to the first/second adjacent triangle by
/// ascending triangle index, and the shared-edge direction `a -> b` is
/// chosen geometrically: crossing from the first flap to the second along
/// with the rest surface normal forms a right-handed frame. Tying the edge
/// orientation to the flap order makes the signed dihedral angle and the
/// strain-mismatch sum flip together under any relabeling, so a smooth
/// mismatch field prefers the same physical fold direction at every hinge;
/// an index-based edge orientation would frustrate the coupling hinge by
/// hinge.
///
/// The four flanking edges are ordered per adjacent triangle (`(a, opp)`
/// then `(b, opp)`), and their orientation factors are `+1` for the first
/// triangle's pair and `-1` for the second's, so the factors sum to zero
/// and uniform fields cancel in the strain-mismatch sum.
#[derive(Debug, Clone)]
pub struct Hinge {
    /// Index of the shared edge.
    pub edge: usize,
    /// Stencil nodes: shared edge endpoints, then the two opposite vertices.
    pub nodes: [usize; 4],
    /// Adjacent triangle indices, ascending.
    pub triangles: [usize; 2],
    /// Flanking edge indices, grouped per adjacent triangle.
    pub flank_edges: [usize; 4],
    /// Orientation factors for the flanking edges.
    pub signs: [f64; 4],
    /// Rest dihedral angle (radians); zero for planar precursors.
    pub rest_angle: f64,
}

/// Immutable triangle mesh: rest geometry, connectivity, region labels.
#[derive(Debug, Clone)]
pub struct Mesh {
    nodes: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    triangle_regions: Vec<Region>,
    edges: Vec<Edge>,
    hinges: Vec<Hinge>,
    mean_edge_length: f64,
}

// Relative area floor below which a triangle counts as degenerate.
const DEGENERACY_TOL: f64 = 1e-12;

impl Mesh {
    /// Build the full topology from node positions, consistently oriented
    /// triangles, and the set of triangle indices covered by the stiff layer.
    ///
    /// Edges are deduplicated, a hinge is enumerated for every edge shared by
    /// exactly two triangles, and an edge is labeled [`Region::Bilayer`] iff
    /// at least one incident triangle is.
    pub fn build(
        nodes: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
        bilayer_triangles: &[usize],
    ) -> Result<Self, MeshError> {
        if nodes.is_empty() || triangles.is_empty() {
            return Err(MeshError::EmptyMesh);
        }
        for (t, tri) in triangles.iter().enumerate() {
            for &n in tri {
                if n >= nodes.len() {
                    return Err(MeshError::NodeIndexOutOfRange { triangle: t, index: n });
                }
            }
            let area2 = triangle_area2(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
            let scale = longest_edge_sq(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
            if !(area2 > DEGENERACY_TOL * scale) {
                return Err(MeshError::DegenerateTriangle { triangle: t });
            }
        }

        let mut triangle_regions = alloc::vec![Region::SingleLayer; triangles.len()];
        for &t in bilayer_triangles {
            if t >= triangles.len() {
                return Err(MeshError::RegionIndexOutOfRange { index: t });
            }
            triangle_regions[t] = Region::Bilayer;
        }

        // Directed-edge scan: key is the undirected pair (min, max); the flag
        // records whether the triangle traverses the edge as (min -> max).
        let mut incidence: BTreeMap<[usize; 2], Vec<(usize, bool)>> = BTreeMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let from = tri[k];
                let to = tri[(k + 1) % 3];
                let key = [from.min(to), from.max(to)];
                incidence.entry(key).or_default().push((t, from < to));
            }
        }

        let mut edges = Vec::with_capacity(incidence.len());
        let mut edge_index: BTreeMap<[usize; 2], usize> = BTreeMap::new();
        let mut interior: Vec<([usize; 2], [usize; 2])> = Vec::new();
        for (key, tris) in &incidence {
            match tris.len() {
                1 => {}
                2 => {
                    if tris[0].1 == tris[1].1 {
                        return Err(MeshError::InconsistentWinding { nodes: *key });
                    }
                    let mut pair = [tris[0].0, tris[1].0];
                    pair.sort_unstable();
                    interior.push((*key, pair));
                }
                n => {
                    return Err(MeshError::NonManifoldEdge { nodes: *key, count: n });
                }
            }
            let region = if tris
                .iter()
                .any(|&(t, _)| triangle_regions[t] == Region::Bilayer)
            {
                Region::Bilayer
            } else {
                Region::SingleLayer
            };
            let rest_length = (nodes[key[1]] - nodes[key[0]]).norm();
            edge_index.insert(*key, edges.len());
            edges.push(Edge {
                nodes: *key,
                rest_length,
                region,
            });
        }

        let mean_edge_length =
            edges.iter().map(|e| e.rest_length).sum::<f64>() / edges.len() as f64;

        let mut hinges = Vec::with_capacity(interior.len());
        for (key, tris) in interior {
            let [mut a, mut b] = key;
            let opp_first = opposite_vertex(&triangles[tris[0]], a, b);
            let opp_second = opposite_vertex(&triangles[tris[1]], a, b);
            // orient the shared edge so the frame (edge, flap crossing,
            // surface normal) is left-handed; the rest winding normal of
            // the first triangle serves as the local up reference. With
            // this handedness a flank that contracts more than its partner
            // prefers to fold toward the winding-normal side (the stiff
            // layer's side for the bundled patterns).
            let tri = &triangles[tris[0]];
            let normal_ref =
                (nodes[tri[1]] - nodes[tri[0]]).cross(nodes[tri[2]] - nodes[tri[0]]);
            let crossing = nodes[opp_second] - nodes[opp_first];
            if (nodes[b] - nodes[a]).cross(crossing).dot(normal_ref) > 0.0 {
                core::mem::swap(&mut a, &mut b);
            }
            let flank = |p: usize, q: usize| edge_index[&[p.min(q), p.max(q)]];
            let hinge = Hinge {
                edge: edge_index[&key],
                nodes: [a, b, opp_first, opp_second],
                triangles: tris,
                flank_edges: [
                    flank(a, opp_first),
                    flank(b, opp_first),
                    flank(a, opp_second),
                    flank(b, opp_second),
                ],
                signs: [1.0, 1.0, -1.0, -1.0],
                rest_angle: 0.0,
            };
            hinges.push(hinge);
        }

        let mut mesh = Self {
            nodes,
            triangles,
            triangle_regions,
            edges,
            hinges,
            mean_edge_length,
        };
        let rest = mesh.rest_dofs();
        for h in 0..mesh.hinges.len() {
            let angle = mesh.dihedral_angle(&rest, h)?;
            mesh.hinges[h].rest_angle = angle;
        }
        Ok(mesh)
    }

    /// Rest positions flattened into a coordinate vector.
    pub fn rest_dofs(&self) -> DofVector {
        let mut coords = Vec::with_capacity(3 * self.nodes.len());
        for n in &self.nodes {
            coords.extend_from_slice(&n.to_array());
        }
        DofVector { coords }
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn hinge_count(&self) -> usize {
        self.hinges.len()
    }

    #[inline]
    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    #[inline]
    pub fn node(&self, i: usize) -> Vec3 {
        self.nodes[i]
    }

    #[inline]
    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    #[inline]
    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    #[inline]
    pub fn triangle_region(&self, t: usize) -> Region {
        self.triangle_regions[t]
    }

    #[inline]
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    #[inline]
    pub fn edge(&self, i: usize) -> &Edge {
        &self.edges[i]
    }

    #[inline]
    pub fn hinges(&self) -> &[Hinge] {
        &self.hinges
    }

    #[inline]
    pub fn hinge(&self, i: usize) -> &Hinge {
        &self.hinges[i]
    }

    /// Region carried by a hinge: that of its shared edge.
    #[inline]
    pub fn hinge_region(&self, i: usize) -> Region {
        self.edges[self.hinges[i].edge].region
    }

    /// Arithmetic mean of the rest edge lengths (mm).
    #[inline]
    pub fn mean_edge_length(&self) -> f64 {
        self.mean_edge_length
    }

    /// Whether an edge lies on the boundary (only interior edges carry
    /// hinges).
    pub fn is_boundary_edge(&self, edge: usize) -> bool {
        !self.hinges.iter().any(|h| h.edge == edge)
    }

    /// Sorted node indices on the mesh boundary.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        let mut interior = alloc::vec![false; self.edges.len()];
        for h in &self.hinges {
            interior[h.edge] = true;
        }
        let mut nodes: Vec<usize> = self
            .edges
            .iter()
            .enumerate()
            .filter(|(e, _)| !interior[*e])
            .flat_map(|(_, edge)| edge.nodes)
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }

    pub fn check_dofs(&self, x: &DofVector) -> Result<(), MeshError> {
        if x.len() != 3 * self.nodes.len() {
            return Err(MeshError::DofLengthMismatch {
                expected: 3 * self.nodes.len(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Axial strain of an edge: `l / l_rest - 1`.
    pub fn axial_strain(&self, x: &DofVector, edge: usize) -> Result<f64, MeshError> {
        let (_, _, d, l) = self.edge_geometry(x, edge)?;
        let _ = d;
        Ok(l / self.edges[edge].rest_length - 1.0)
    }

    /// Strain derivatives restricted to the edge's two nodes.
    pub fn strain_gradient(&self, x: &DofVector, edge: usize) -> Result<StrainGradient, MeshError> {
        let (a, b, d, l) = self.edge_geometry(x, edge)?;
        let unit = d.scale(1.0 / l);
        let inv_l0 = 1.0 / self.edges[edge].rest_length;
        Ok(StrainGradient {
            nodes: [a, b],
            d: [unit.scale(-inv_l0), unit.scale(inv_l0)],
        })
    }

    /// Second strain derivatives as a symmetric 6x6 block over the edge's
    /// two nodes.
    pub fn strain_hessian(&self, x: &DofVector, edge: usize) -> Result<StrainHessian, MeshError> {
        let (a, b, d, l) = self.edge_geometry(x, edge)?;
        let unit = d.scale(1.0 / l);
        let proj = Mat3::identity()
            .sub(Mat3::outer(unit, unit))
            .scale(1.0 / (l * self.edges[edge].rest_length));
        Ok(StrainHessian {
            nodes: [a, b],
            blocks: [[proj, proj.scale(-1.0)], [proj.scale(-1.0), proj]],
        })
    }

    /// Signed dihedral angle at a hinge, in `(-pi, pi)`.
    ///
    /// The sign is that of `(n1 x n2) . e` where `n1`, `n2` are the normals
    /// of the first/second adjacent triangle and `e` is the oriented shared
    /// edge of the hinge (see [`Hinge`] for the orientation rule). Coplanar
    /// triangles of a consistently oriented mesh give exactly zero, and a
    /// smooth dome gives every hinge the same sign.
    pub fn dihedral_angle(&self, x: &DofVector, hinge: usize) -> Result<f64, MeshError> {
        let g = self.hinge_geometry(x, hinge)?;
        let na = g.na.scale(1.0 / libm::sqrt(g.ma));
        let nb = g.nb.scale(1.0 / libm::sqrt(g.mb));
        let sin = na.cross(nb).dot(g.t.scale(1.0 / g.l));
        let cos = na.dot(nb);
        Ok(libm::atan2(sin, cos))
    }

    /// Dihedral-angle gradient over the hinge's four stencil nodes.
    pub fn angle_gradient(&self, x: &DofVector, hinge: usize) -> Result<AngleGradient, MeshError> {
        let g = self.hinge_geometry(x, hinge)?;
        Ok(AngleGradient {
            nodes: self.hinges[hinge].nodes,
            d: angle_gradient_parts(&g),
        })
    }

    /// Dihedral-angle Hessian as a symmetric 12x12 block over the hinge's
    /// four stencil nodes.
    pub fn angle_hessian(&self, x: &DofVector, hinge: usize) -> Result<AngleHessian, MeshError> {
        let g = self.hinge_geometry(x, hinge)?;
        Ok(AngleHessian {
            nodes: self.hinges[hinge].nodes,
            blocks: angle_hessian_parts(&g),
        })
    }

    fn edge_geometry(
        &self,
        x: &DofVector,
        edge: usize,
    ) -> Result<(usize, usize, Vec3, f64), MeshError> {
        if edge >= self.edges.len() {
            return Err(MeshError::EdgeIndexOutOfRange { index: edge });
        }
        self.check_dofs(x)?;
        let [a, b] = self.edges[edge].nodes;
        let d = x.node(b) - x.node(a);
        let l = d.norm();
        if !(l > DEGENERACY_TOL * self.edges[edge].rest_length) {
            return Err(MeshError::CollapsedEdge { edge });
        }
        Ok((a, b, d, l))
    }

    fn hinge_geometry(&self, x: &DofVector, hinge: usize) -> Result<HingeGeometry, MeshError> {
        if hinge >= self.hinges.len() {
            return Err(MeshError::HingeIndexOutOfRange { index: hinge });
        }
        self.check_dofs(x)?;
        let h = &self.hinges[hinge];
        let xa = x.node(h.nodes[0]);
        let xb = x.node(h.nodes[1]);
        let x2 = x.node(h.nodes[2]);
        let x3 = x.node(h.nodes[3]);
        let t = xb - xa;
        let u = x2 - xa;
        let v = x3 - xa;
        // With consistent winding both true face normals are (na, nb) or
        // (-na, -nb); the angle formulas are invariant to the joint flip.
        let na = t.cross(u);
        let nb = v.cross(t);
        let ma = na.norm_sq();
        let mb = nb.norm_sq();
        let l2 = t.norm_sq();
        let scale_a = longest_edge_sq(xa, xb, x2);
        let scale_b = longest_edge_sq(xa, xb, x3);
        if !(ma > (DEGENERACY_TOL * scale_a) * (DEGENERACY_TOL * scale_a)) || scale_a == 0.0 {
            return Err(MeshError::DegenerateDeformedTriangle {
                triangle: h.triangles[0],
            });
        }
        if !(mb > (DEGENERACY_TOL * scale_b) * (DEGENERACY_TOL * scale_b)) || scale_b == 0.0 {
            return Err(MeshError::DegenerateDeformedTriangle {
                triangle: h.triangles[1],
            });
        }
        Ok(HingeGeometry {
            t,
            u,
            v,
            na,
            nb,
            ma,
            mb,
            l2,
            l: libm::sqrt(l2),
        })
    }
}

/// Strain gradient restricted to an edge's six degrees of freedom.
#[derive(Debug, Clone)]
pub struct StrainGradient {
    pub nodes: [usize; 2],
    /// Per-node derivative, same order as `nodes`.
    pub d: [Vec3; 2],
}

/// Strain Hessian restricted to an edge's six degrees of freedom.
#[derive(Debug, Clone)]
pub struct StrainHessian {
    pub nodes: [usize; 2],
    /// 2x2 grid of 3x3 blocks, same node order as `nodes`.
    pub blocks: [[Mat3; 2]; 2],
}

/// Dihedral-angle gradient over a hinge's twelve degrees of freedom.
#[derive(Debug, Clone)]
pub struct AngleGradient {
    pub nodes: [usize; 4],
    pub d: [Vec3; 4],
}

/// Dihedral-angle Hessian over a hinge's twelve degrees of freedom.
#[derive(Debug, Clone)]
pub struct AngleHessian {
    pub nodes: [usize; 4],
    /// 4x4 grid of 3x3 blocks, symmetric as a 12x12 matrix.
    pub blocks: [[Mat3; 4]; 4],
}

struct HingeGeometry {
    t: Vec3,
    u: Vec3,
    v: Vec3,
    na: Vec3,
    nb: Vec3,
    ma: f64,
    mb: f64,
    l2: f64,
    l: f64,
}

/// Exact angle gradient in stencil order `[a, b, opp_first, opp_second]`.
///
/// The flap derivatives are `-|e| N / |N|^2` (a normal-direction rotation
/// with lever arm equal to the flap altitude); the shared-edge derivatives
/// follow from the flap terms via the edge-projection weights, which also
/// enforces translation invariance of the angle.
fn angle_gradient_parts(g: &HingeGeometry) -> [Vec3; 4] {
    let ga = g.na.scale(-g.l / g.ma);
    let gb = g.nb.scale(-g.l / g.mb);
    let da0 = (g.u - g.t).dot(g.t) / g.l2;
    let db0 = (g.v - g.t).dot(g.t) / g.l2;
    let da1 = g.u.dot(g.t) / g.l2;
    let db1 = g.v.dot(g.t) / g.l2;
    [
        ga.scale(da0) + gb.scale(db0),
        ga.scale(-da1) + gb.scale(-db1),
        ga,
        gb,
    ]
}

fn angle_hessian_parts(g: &HingeGeometry) -> [[Mat3; 4]; 4] {
    let zero = Vec3::new(0.0, 0.0, 0.0);
    let e_hat = g.t.scale(1.0 / g.l);

    // Jacobians of the unnormalized normals w.r.t. each stencil node.
    let dna = [
        Mat3::skew(g.u - g.t),
        Mat3::skew(-g.u),
        Mat3::skew(g.t),
        Mat3::ZERO,
    ];
    let dnb = [
        Mat3::skew(g.t - g.v),
        Mat3::skew(g.v),
        Mat3::ZERO,
        Mat3::skew(-g.t),
    ];
    // Gradient of the shared-edge length.
    let dl = [-e_hat, e_hat, zero, zero];

    let ga = g.na.scale(-g.l / g.ma);
    let gb = g.nb.scale(-g.l / g.mb);

    // d/dx_c of  -L N / |N|^2
    let flap_jacobian = |n: Vec3, m: f64, dn: &[Mat3; 4]| -> [Mat3; 4] {
        let mut out = [Mat3::ZERO; 4];
        for c in 0..4 {
            let a1 = Mat3::outer(n, dl[c]).scale(-1.0 / m);
            let a2 = dn[c].scale(-g.l / m);
            let a3 = Mat3::outer(n, dn[c].pre_mul_vec(n)).scale(2.0 * g.l / (m * m));
            out[c] = a1.add(a2).add(a3);
        }
        out
    };
    let dga = flap_jacobian(g.na, g.ma, &dna);
    let dgb = flap_jacobian(g.nb, g.mb, &dnb);

    // Gradients of the scalar edge-projection weights d = (w . t) / L^2.
    let inv_l2 = 1.0 / g.l2;
    let d_inv_l2 = [
        g.t.scale(2.0 * inv_l2 * inv_l2),
        g.t.scale(-2.0 * inv_l2 * inv_l2),
        zero,
        zero,
    ];
    let weight_grad = |dot: f64, dw_dot: [Vec3; 4]| -> [Vec3; 4] {
        let mut out = [zero; 4];
        for c in 0..4 {
            out[c] = dw_dot[c].scale(inv_l2) + d_inv_l2[c].scale(dot);
        }
        out
    };

    let p = g.u - g.t; // x2 - xb
    let q = g.v - g.t; // x3 - xb
    let da0 = p.dot(g.t) * inv_l2;
    let db0 = q.dot(g.t) * inv_l2;
    let da1 = g.u.dot(g.t) * inv_l2;
    let db1 = g.v.dot(g.t) * inv_l2;

    let gda0 = weight_grad(p.dot(g.t), [-p, p - g.t, g.t, zero]);
    let gdb0 = weight_grad(q.dot(g.t), [-q, q - g.t, zero, g.t]);
    let gda1 = weight_grad(g.u.dot(g.t), [-(g.t + g.u), g.u, g.t, zero]);
    let gdb1 = weight_grad(g.v.dot(g.t), [-(g.t + g.v), g.v, zero, g.t]);

    let mut h = [[Mat3::ZERO; 4]; 4];
    for c in 0..4 {
        h[0][c] = Mat3::outer(ga, gda0[c])
            .add(dga[c].scale(da0))
            .add(Mat3::outer(gb, gdb0[c]))
            .add(dgb[c].scale(db0));
        h[1][c] = Mat3::outer(ga, gda1[c])
            .add(dga[c].scale(da1))
            .add(Mat3::outer(gb, gdb1[c]))
            .add(dgb[c].scale(db1))
            .scale(-1.0);
        h[2][c] = dga[c];
        h[3][c] = dgb[c];
    }

    // The analytic blocks are symmetric up to rounding; mirroring the mean
    // makes the 12x12 exactly symmetric.
    let mut sym = [[Mat3::ZERO; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            sym[r][c] = h[r][c].add(h[c][r].transpose()).scale(0.5);
        }
    }
    sym
}

fn triangle_area2(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    (b - a).cross(c - a).norm()
}

fn longest_edge_sq(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let ab = (b - a).norm_sq();
    let bc = (c - b).norm_sq();
    let ca = (a - c).norm_sq();
    ab.max(bc).max(ca)
}

fn opposite_vertex(tri: &[usize; 3], a: usize, b: usize) -> usize {
    for &n in tri {
        if n != a && n != b {
            return n;
        }
    }
    unreachable!("triangle must contain a vertex besides its shared edge")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Vec3;

    /// Two triangles sharing one edge: the canonical bending pair.
    pub fn bending_pair() -> Mesh {
        let nodes = alloc::vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.5, 0.9, 0.0),
            Vec3::new(0.5, -0.8, 0.0),
        ];
        let triangles = alloc::vec![[0, 1, 2], [1, 0, 3]];
        Mesh::build(nodes, triangles, &[0]).unwrap()
    }

    #[test]
    fn single_triangle_has_three_edges_no_hinges() {
        let nodes = alloc::vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ];
        let mesh = Mesh::build(nodes, alloc::vec![[0, 1, 2]], &[]).unwrap();
        assert_eq!(mesh.edge_count(), 3);
        assert_eq!(mesh.hinge_count(), 0);
    }

    #[test]
    fn bending_pair_counts() {
        let mesh = bending_pair();
        assert_eq!(mesh.node_count(), 4);
        assert_eq!(mesh.edge_count(), 5);
        assert_eq!(mesh.hinge_count(), 1);
        let h = mesh.hinge(0);
        let mut shared = [h.nodes[0], h.nodes[1]];
        shared.sort_unstable();
        assert_eq!(shared, [0, 1]);
        assert_eq!(h.signs.iter().sum::<f64>(), 0.0);
        assert_eq!(h.rest_angle, 0.0);
    }

    #[test]
    fn edge_region_is_bilayer_when_any_incident_triangle_is() {
        let mesh = bending_pair();
        // triangle 0 is bilayer: its three edges (including the shared one)
        // are bilayer; the two edges touching only triangle 1 are not.
        let mut bilayer = 0;
        for e in mesh.edges() {
            if e.region == Region::Bilayer {
                bilayer += 1;
            }
        }
        assert_eq!(bilayer, 3);
        assert_eq!(mesh.hinge_region(0), Region::Bilayer);
    }

    #[test]
    fn non_manifold_edge_is_rejected_with_its_nodes() {
        let nodes = alloc::vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.5, 1.0, 0.0),
            Vec3::new(0.5, -1.0, 0.0),
            Vec3::new(0.5, 0.5, 1.0),
        ];
        let triangles = alloc::vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]];
        let err = Mesh::build(nodes, triangles, &[]).unwrap_err();
        assert_eq!(
            err,
            MeshError::NonManifoldEdge {
                nodes: [0, 1],
                count: 3
            }
        );
    }

    #[test]
    fn degenerate_triangle_is_rejected() {
        let nodes = alloc::vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
        ];
        let err = Mesh::build(nodes, alloc::vec![[0, 1, 2]], &[]).unwrap_err();
        assert_eq!(err, MeshError::DegenerateTriangle { triangle: 0 });
    }

    #[test]
    fn out_of_range_index_is_rejected() {
        let nodes = alloc::vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ];
        let err = Mesh::build(nodes, alloc::vec![[0, 1, 7]], &[]).unwrap_err();
        assert_eq!(
            err,
            MeshError::NodeIndexOutOfRange {
                triangle: 0,
                index: 7
            }
        );
    }

    #[test]
    fn inconsistent_winding_is_rejected() {
        let nodes = alloc::vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.5, 1.0, 0.0),
            Vec3::new(0.5, -1.0, 0.0),
        ];
        // both triangles traverse (0 -> 1)
        let err = Mesh::build(nodes, alloc::vec![[0, 1, 2], [0, 1, 3]], &[]).unwrap_err();
        assert_eq!(err, MeshError::InconsistentWinding { nodes: [0, 1] });
    }

    #[test]
    fn strain_at_rest_is_zero_and_scales_linearly() {
        let mesh = bending_pair();
        let rest = mesh.rest_dofs();
        for e in 0..mesh.edge_count() {
            assert_eq!(mesh.axial_strain(&rest, e).unwrap(), 0.0);
        }
        // stretch edge (0, 1) to 1.5x by moving node 1
        let mut x = rest.clone();
        x.set_node(1, Vec3::new(1.5, 0.0, 0.0));
        let edge_01 = mesh
            .edges()
            .iter()
            .position(|e| e.nodes == [0, 1])
            .unwrap();
        assert!((mesh.axial_strain(&x, edge_01).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn collapsed_edge_is_reported() {
        let mesh = bending_pair();
        let mut x = mesh.rest_dofs();
        x.set_node(1, Vec3::new(0.0, 0.0, 0.0));
        let edge_01 = mesh
            .edges()
            .iter()
            .position(|e| e.nodes == [0, 1])
            .unwrap();
        assert_eq!(
            mesh.axial_strain(&x, edge_01).unwrap_err(),
            MeshError::CollapsedEdge { edge: edge_01 }
        );
    }

    #[test]
    fn coplanar_hinge_angle_is_zero_and_right_fold_is_half_pi() {
        let mesh = bending_pair();
        let rest = mesh.rest_dofs();
        assert_eq!(mesh.dihedral_angle(&rest, 0).unwrap(), 0.0);

        // fold the second flap 90 degrees about the shared edge (the x axis)
        let mut x = rest.clone();
        x.set_node(3, Vec3::new(0.5, 0.0, 0.8));
        let theta = mesh.dihedral_angle(&x, 0).unwrap();
        assert!((theta.abs() - core::f64::consts::FRAC_PI_2).abs() < 1e-12);

        x.set_node(3, Vec3::new(0.5, 0.0, -0.8));
        let theta_down = mesh.dihedral_angle(&x, 0).unwrap();
        assert!((theta + theta_down).abs() < 1e-12, "opposite folds have opposite signs");
    }

    #[test]
    fn dihedral_sign_matches_normal_convention() {
        // independent evaluation from explicitly computed winding normals
        // and the hinge's oriented shared edge
        let mesh = bending_pair();
        let mut x = mesh.rest_dofs();
        x.set_node(2, Vec3::new(0.45, 0.8, 0.3));
        x.set_node(3, Vec3::new(0.6, -0.7, -0.2));
        let theta = mesh.dihedral_angle(&x, 0).unwrap();

        let h = mesh.hinge(0);
        let tri_a = mesh.triangles()[h.triangles[0]];
        let tri_b = mesh.triangles()[h.triangles[1]];
        let normal = |tri: [usize; 3]| -> Vec3 {
            let p0 = x.node(tri[0]);
            (x.node(tri[1]) - p0).cross(x.node(tri[2]) - p0)
        };
        let n1 = normal(tri_a).normalized().unwrap();
        let n2 = normal(tri_b).normalized().unwrap();
        let e = (x.node(h.nodes[1]) - x.node(h.nodes[0])).normalized().unwrap();
        let expected = libm::atan2(n1.cross(n2).dot(e), n1.dot(n2));
        assert!((theta - expected).abs() < 1e-14);
    }

    #[test]
    fn dome_bends_every_hinge_the_same_way() {
        // a smooth dome interpolated on a Delaunay-quality lattice must
        // produce one consistent dihedral sign across the whole mesh;
        // index-based hinge orientations would randomize it
        let patch = crate::lattice::equilateral_strip(8, 7, 1.0);
        let mesh = Mesh::build(patch.nodes, patch.triangles, &[]).unwrap();
        let mut x = mesh.rest_dofs();
        for i in 0..mesh.node_count() {
            let p = x.node(i);
            x.set_node(i, Vec3::new(p.x, p.y, 0.05 * (p.x * p.x + p.y * p.y)));
        }
        let mut signs = (0, 0);
        for j in 0..mesh.hinge_count() {
            let theta = mesh.dihedral_angle(&x, j).unwrap();
            assert!(theta.abs() > 1e-6, "dome bends hinge {j}");
            if theta > 0.0 {
                signs.0 += 1;
            } else {
                signs.1 += 1;
            }
        }
        assert!(
            signs.0 == 0 || signs.1 == 0,
            "mixed dihedral signs on a dome: {signs:?}"
        );
    }

    #[test]
    fn degenerate_deformed_triangle_names_the_triangle() {
        let mesh = bending_pair();
        let mut x = mesh.rest_dofs();
        x.set_node(3, Vec3::new(0.5, 0.0, 0.0)); // collinear with the shared edge
        let err = mesh.dihedral_angle(&x, 0).unwrap_err();
        assert_eq!(err, MeshError::DegenerateDeformedTriangle { triangle: 1 });
    }

    #[test]
    fn rest_strain_gradient_magnitude_is_inverse_rest_length() {
        let mesh = bending_pair();
        let rest = mesh.rest_dofs();
        for (e, edge) in mesh.edges().iter().enumerate() {
            let g = mesh.strain_gradient(&rest, e).unwrap();
            let expect = 1.0 / edge.rest_length;
            assert!((g.d[0].norm() - expect).abs() < 1e-14);
            assert!((g.d[1].norm() - expect).abs() < 1e-14);
            assert!((g.d[0] + g.d[1]).norm() < 1e-15, "opposite signs at endpoints");
        }
    }

    #[test]
    fn dof_vector_validates_input() {
        assert!(matches!(
            DofVector::new(alloc::vec![0.0, 1.0]),
            Err(MeshError::DofLengthMismatch { .. })
        ));
        assert!(matches!(
            DofVector::new(alloc::vec![0.0, f64::NAN, 1.0]),
            Err(MeshError::NonFiniteDof { index: 1 })
        ));
    }
}
