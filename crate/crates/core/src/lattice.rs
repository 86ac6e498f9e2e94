//! Structured planar triangulations.
//!
//! The simulator consumes externally supplied node/triangle lists; these
//! builders provide the regular lattices used for bundled examples,
//! verification benchmarks, and tests. All patches lie in the z = 0 plane
//! and are consistently oriented counterclockwise.

use alloc::vec::Vec;

use crate::math::Vec3;

/// A raw planar triangulation, ready for [`crate::mesh::Mesh::build`].
#[derive(Debug, Clone)]
pub struct LatticePatch {
    pub nodes: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

impl LatticePatch {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// Centroid of a triangle, for region classification.
    pub fn centroid(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.triangles[t];
        (self.nodes[a] + self.nodes[b] + self.nodes[c]).scale(1.0 / 3.0)
    }
}

/// Rectangular patch of `rows` node rows, centered on the origin.
///
/// Rows are horizontal lines spaced evenly over `height`; even rows carry
/// `even_count` nodes and odd rows `odd_count`, each spanning the full
/// `width`, so consecutive rows interleave and the strips triangulate into
/// near-isosceles triangles. A strip between rows of `m` and `n` nodes holds
/// `m + n - 2` triangles.
pub fn staggered_grid(
    rows: usize,
    even_count: usize,
    odd_count: usize,
    width: f64,
    height: f64,
) -> LatticePatch {
    assert!(rows >= 2 && even_count >= 2 && odd_count >= 2);
    let mut nodes = Vec::new();
    let mut row_start = Vec::with_capacity(rows);
    let mut row_len = Vec::with_capacity(rows);
    for r in 0..rows {
        let count = if r % 2 == 0 { even_count } else { odd_count };
        let y = -height / 2.0 + height * r as f64 / (rows - 1) as f64;
        row_start.push(nodes.len());
        row_len.push(count);
        for c in 0..count {
            let x = -width / 2.0 + width * c as f64 / (count - 1) as f64;
            nodes.push(Vec3::new(x, y, 0.0));
        }
    }

    let mut triangles = Vec::new();
    for r in 1..rows {
        let (lo, ln) = (row_start[r - 1], row_len[r - 1]);
        let (uo, un) = (row_start[r], row_len[r]);
        merge_strip(&nodes, lo, ln, uo, un, &mut triangles);
    }
    LatticePatch { nodes, triangles }
}

/// Triangulate the strip between a lower and an upper node row by marching
/// left to right, always advancing the row whose next node comes first.
fn merge_strip(
    nodes: &[Vec3],
    lower_offset: usize,
    lower_len: usize,
    upper_offset: usize,
    upper_len: usize,
    triangles: &mut Vec<[usize; 3]>,
) {
    let mut i = 0; // lower cursor
    let mut j = 0; // upper cursor
    while i + 1 < lower_len || j + 1 < upper_len {
        let advance_lower = if i + 1 >= lower_len {
            false
        } else if j + 1 >= upper_len {
            true
        } else {
            nodes[lower_offset + i + 1].x <= nodes[upper_offset + j + 1].x
        };
        if advance_lower {
            triangles.push([lower_offset + i, lower_offset + i + 1, upper_offset + j]);
            i += 1;
        } else {
            triangles.push([lower_offset + i, upper_offset + j + 1, upper_offset + j]);
            j += 1;
        }
    }
}

/// Strip of near-equilateral triangles: even rows carry `cols` nodes at
/// spacing `dx`, odd rows are inset half a step with `cols - 1` nodes, and
/// rows are spaced `dx * sqrt(3)/2`. This is the lattice the discrete
/// stiffness formulas are calibrated for; the verification benchmarks use
/// it so comparisons against plate and beam theory are meaningful.
pub fn equilateral_strip(cols: usize, rows: usize, dx: f64) -> LatticePatch {
    assert!(cols >= 3 && rows >= 2);
    let dy = dx * libm::sqrt(3.0) / 2.0;
    let width = (cols - 1) as f64 * dx;
    let height = (rows - 1) as f64 * dy;
    let mut nodes = Vec::new();
    let mut row_start = Vec::with_capacity(rows);
    let mut row_len = Vec::with_capacity(rows);
    for r in 0..rows {
        let (count, offset) = if r % 2 == 0 {
            (cols, 0.0)
        } else {
            (cols - 1, 0.5 * dx)
        };
        row_start.push(nodes.len());
        row_len.push(count);
        let y = -height / 2.0 + r as f64 * dy;
        for c in 0..count {
            nodes.push(Vec3::new(-width / 2.0 + offset + c as f64 * dx, y, 0.0));
        }
    }
    let mut triangles = Vec::new();
    for r in 1..rows {
        merge_strip(
            &nodes,
            row_start[r - 1],
            row_len[r - 1],
            row_start[r],
            row_len[r],
            &mut triangles,
        );
    }
    LatticePatch { nodes, triangles }
}

/// Disc triangulated as a central fan plus concentric ring strips.
///
/// `ring_counts[k]` is the node count of ring `k + 1`; rings are spaced
/// evenly out to `radius` and alternate a half-step azimuthal offset so the
/// strips stay close to equilateral. The patch has `1 + sum(ring_counts)`
/// nodes and `2 * sum - last` triangles.
pub fn ring_disc(ring_counts: &[usize], radius: f64) -> LatticePatch {
    assert!(!ring_counts.is_empty() && ring_counts.iter().all(|&n| n >= 3));
    let rings = ring_counts.len();
    let mut nodes = Vec::new();
    nodes.push(Vec3::new(0.0, 0.0, 0.0));
    let mut ring_start = Vec::with_capacity(rings);
    for (k, &count) in ring_counts.iter().enumerate() {
        let r = radius * (k + 1) as f64 / rings as f64;
        let offset = if k % 2 == 0 { 0.0 } else { 0.5 };
        ring_start.push(nodes.len());
        for j in 0..count {
            let angle = core::f64::consts::TAU * (j as f64 + offset) / count as f64;
            nodes.push(Vec3::new(r * libm::cos(angle), r * libm::sin(angle), 0.0));
        }
    }

    let mut triangles = Vec::new();
    // central fan
    let first = ring_start[0];
    let n0 = ring_counts[0];
    for j in 0..n0 {
        triangles.push([0, first + j, first + (j + 1) % n0]);
    }
    // annulus strips
    for k in 1..rings {
        merge_ring(
            &nodes,
            ring_start[k - 1],
            ring_counts[k - 1],
            ring_start[k],
            ring_counts[k],
            &mut triangles,
        );
    }
    LatticePatch { nodes, triangles }
}

/// Triangulate the annulus between two rings by angular two-pointer merge;
/// produces exactly `inner_len + outer_len` triangles.
fn merge_ring(
    nodes: &[Vec3],
    inner_offset: usize,
    inner_len: usize,
    outer_offset: usize,
    outer_len: usize,
    triangles: &mut Vec<[usize; 3]>,
) {
    let angle_of = |idx: usize| libm::atan2(nodes[idx].y, nodes[idx].x);
    // Unwrapped angular positions starting from each ring's node 0.
    let unwrapped = |offset: usize, len: usize, step: usize, base: f64| -> f64 {
        let whole = (step / len) as f64 * core::f64::consts::TAU;
        let mut a = angle_of(offset + step % len);
        while a < base - 1e-12 {
            a += core::f64::consts::TAU;
        }
        a + whole
    };
    let base_inner = angle_of(inner_offset);
    let mut base_outer = angle_of(outer_offset);
    // keep the outer start within half a turn of the inner start
    while base_outer < base_inner - core::f64::consts::PI {
        base_outer += core::f64::consts::TAU;
    }

    let mut i = 0;
    let mut j = 0;
    while i < inner_len || j < outer_len {
        let advance_inner = if i >= inner_len {
            false
        } else if j >= outer_len {
            true
        } else {
            unwrapped(inner_offset, inner_len, i + 1, base_inner)
                <= unwrapped(outer_offset, outer_len, j + 1, base_outer)
        };
        let inner_node = inner_offset + i % inner_len;
        let outer_node = outer_offset + j % outer_len;
        if advance_inner {
            let next_inner = inner_offset + (i + 1) % inner_len;
            triangles.push([inner_node, outer_node, next_inner]);
            i += 1;
        } else {
            let next_outer = outer_offset + (j + 1) % outer_len;
            triangles.push([inner_node, outer_node, next_outer]);
            j += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh;

    #[test]
    fn staggered_grid_counts() {
        // 21 rows alternating 18/19 over a square
        let patch = staggered_grid(21, 18, 19, 100.0, 100.0);
        assert_eq!(patch.node_count(), 11 * 18 + 10 * 19);
        assert_eq!(patch.triangle_count(), 20 * (18 + 19 - 2));
        let mesh = Mesh::build(patch.nodes, patch.triangles, &[]).unwrap();
        assert_eq!(mesh.node_count(), 388);
        assert_eq!(mesh.triangle_count(), 700);
        assert_eq!(mesh.edge_count(), 1087);
    }

    #[test]
    fn ring_disc_builds_manifold_mesh() {
        let patch = ring_disc(&[6, 12, 18], 3.0);
        assert_eq!(patch.node_count(), 1 + 6 + 12 + 18);
        assert_eq!(patch.triangle_count(), 6 + (6 + 12) + (12 + 18));
        let mesh = Mesh::build(patch.nodes, patch.triangles, &[]).unwrap();
        // Euler: disc topology
        assert_eq!(
            mesh.node_count() + mesh.triangle_count(),
            mesh.edge_count() + 1
        );
        // interior edges all become hinges
        assert_eq!(mesh.hinge_count(), mesh.edge_count() - 18);
    }
}
