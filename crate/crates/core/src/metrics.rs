//! Shape comparison: voxel occupancy, windowed structural similarity,
//! similarity-transform alignment, and the height-to-footprint aspect ratio.

use alloc::vec::Vec;

use crate::math::{jacobi_eigen, Mat3, Vec3};
use crate::mesh::{DofVector, Mesh};

/// Intensity ceiling of a voxel volume; SSIM constants scale with it.
pub const INTENSITY_RANGE: f64 = 1.0;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

#[derive(Debug, Clone, PartialEq)]
pub enum MetricsError {
    EmptyShape,
    TriangleIndexOutOfRange { triangle: usize, index: usize },
    /// Voxel grids must share resolution and bounding box.
    MismatchedGrids,
    GridTooCoarse { ns: usize },
    BoxDoesNotEncloseShape,
    IntensityOutOfRange { index: usize, value: f64 },
    /// Alignment needs at least four non-coplanar sample points.
    DegeneratePointSet,
    /// Aspect ratio of a shape with no footprint is undefined.
    ZeroFootprint,
}

impl core::fmt::Display for MetricsError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MetricsError::EmptyShape => write!(f, "shape has no vertices or triangles"),
            MetricsError::TriangleIndexOutOfRange { triangle, index } => {
                write!(f, "triangle {triangle} references vertex {index} out of range")
            }
            MetricsError::MismatchedGrids => {
                write!(f, "voxel volumes differ in resolution or bounding box")
            }
            MetricsError::GridTooCoarse { ns } => {
                write!(f, "grid resolution {ns} below the minimum of 2")
            }
            MetricsError::BoxDoesNotEncloseShape => {
                write!(f, "bounding box does not enclose the shape")
            }
            MetricsError::IntensityOutOfRange { index, value } => {
                write!(f, "voxel {index} intensity {value} outside [0, {INTENSITY_RANGE}]")
            }
            MetricsError::DegeneratePointSet => {
                write!(f, "sample points are collinear or coplanar")
            }
            MetricsError::ZeroFootprint => write!(f, "shape footprint has zero extent"),
        }
    }
}

#[cfg(test)]
impl std::error::Error for MetricsError {}

/// A bare triangle surface; scanned shapes need not be manifold, so this is
/// looser than [`Mesh`].
#[derive(Debug, Clone)]
pub struct TriSurface {
    pub positions: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriSurface {
    pub fn new(positions: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self, MetricsError> {
        if positions.is_empty() || triangles.is_empty() {
            return Err(MetricsError::EmptyShape);
        }
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= positions.len() {
                    return Err(MetricsError::TriangleIndexOutOfRange { triangle: t, index: v });
                }
            }
        }
        Ok(Self {
            positions,
            triangles,
        })
    }

    /// Deformed state of a simulation mesh as a comparison surface.
    pub fn from_mesh(mesh: &Mesh, x: &DofVector) -> Self {
        Self {
            positions: (0..mesh.node_count()).map(|i| x.node(i)).collect(),
            triangles: mesh.triangles().to_vec(),
        }
    }

    pub fn bounds(&self) -> (Vec3, Vec3) {
        let mut lo = self.positions[0];
        let mut hi = self.positions[0];
        for p in &self.positions {
            lo = Vec3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
            hi = Vec3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
        }
        (lo, hi)
    }

    pub fn centroid(&self) -> Vec3 {
        let mut c = Vec3::default();
        for p in &self.positions {
            c = c + *p;
        }
        c.scale(1.0 / self.positions.len() as f64)
    }
}

/// Closest point on a triangle to `p` (region-based barycentric clamp).
pub fn closest_point_on_triangle(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab.scale(v);
    }
    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac.scale(w);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b).scale(w);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab.scale(v) + ac.scale(w)
}

/// Brute-force point-to-surface queries with per-triangle bound culling.
struct SurfaceQuery<'a> {
    surface: &'a TriSurface,
    bounds: Vec<(Vec3, Vec3)>,
}

impl<'a> SurfaceQuery<'a> {
    fn new(surface: &'a TriSurface) -> Self {
        let bounds = surface
            .triangles
            .iter()
            .map(|tri| {
                let (a, b, c) = (
                    surface.positions[tri[0]],
                    surface.positions[tri[1]],
                    surface.positions[tri[2]],
                );
                (
                    Vec3::new(
                        a.x.min(b.x).min(c.x),
                        a.y.min(b.y).min(c.y),
                        a.z.min(b.z).min(c.z),
                    ),
                    Vec3::new(
                        a.x.max(b.x).max(c.x),
                        a.y.max(b.y).max(c.y),
                        a.z.max(b.z).max(c.z),
                    ),
                )
            })
            .collect();
        Self { surface, bounds }
    }

    fn box_distance_sq(p: Vec3, lo: Vec3, hi: Vec3) -> f64 {
        let dx = (lo.x - p.x).max(0.0).max(p.x - hi.x);
        let dy = (lo.y - p.y).max(0.0).max(p.y - hi.y);
        let dz = (lo.z - p.z).max(0.0).max(p.z - hi.z);
        dx * dx + dy * dy + dz * dz
    }

    fn closest(&self, p: Vec3) -> (Vec3, f64) {
        let mut best_sq = f64::INFINITY;
        let mut best = self.surface.positions[self.surface.triangles[0][0]];
        for (t, tri) in self.surface.triangles.iter().enumerate() {
            let (lo, hi) = self.bounds[t];
            if Self::box_distance_sq(p, lo, hi) >= best_sq {
                continue;
            }
            let q = closest_point_on_triangle(
                p,
                self.surface.positions[tri[0]],
                self.surface.positions[tri[1]],
                self.surface.positions[tri[2]],
            );
            let d = (p - q).norm_sq();
            if d < best_sq {
                best_sq = d;
                best = q;
            }
        }
        (best, libm::sqrt(best_sq))
    }

    /// Whether any triangle lies within `radius` of `p` (early exit).
    fn within(&self, p: Vec3, radius: f64) -> bool {
        let r_sq = radius * radius;
        for (t, tri) in self.surface.triangles.iter().enumerate() {
            let (lo, hi) = self.bounds[t];
            if Self::box_distance_sq(p, lo, hi) > r_sq {
                continue;
            }
            let q = closest_point_on_triangle(
                p,
                self.surface.positions[tri[0]],
                self.surface.positions[tri[1]],
                self.surface.positions[tri[2]],
            );
            if (p - q).norm_sq() <= r_sq {
                return true;
            }
        }
        false
    }
}

/// Cubic grid of surface-occupancy intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelVolume {
    ns: usize,
    lo: Vec3,
    hi: Vec3,
    data: Vec<f64>,
}

impl VoxelVolume {
    pub fn from_intensities(
        lo: Vec3,
        hi: Vec3,
        ns: usize,
        data: Vec<f64>,
    ) -> Result<Self, MetricsError> {
        if ns < 2 {
            return Err(MetricsError::GridTooCoarse { ns });
        }
        if data.len() != ns * ns * ns {
            return Err(MetricsError::MismatchedGrids);
        }
        for (i, &v) in data.iter().enumerate() {
            if !(0.0..=INTENSITY_RANGE).contains(&v) {
                return Err(MetricsError::IntensityOutOfRange { index: i, value: v });
            }
        }
        Ok(Self { ns, lo, hi, data })
    }

    pub fn resolution(&self) -> usize {
        self.ns
    }

    pub fn bounds(&self) -> (Vec3, Vec3) {
        (self.lo, self.hi)
    }

    pub fn intensities(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.ns + j) * self.ns + k]
    }
}

/// Sample sub-grid per voxel axis used by [`voxelize`].
const SUBSAMPLES: usize = 4;

/// Voxelize a surface over the box `[lo, hi]`: each voxel's intensity is
/// the fraction of its 4x4x4 sample points lying within half a voxel
/// diagonal of the surface.
pub fn voxelize(
    surface: &TriSurface,
    lo: Vec3,
    hi: Vec3,
    ns: usize,
) -> Result<VoxelVolume, MetricsError> {
    if ns < 2 {
        return Err(MetricsError::GridTooCoarse { ns });
    }
    if surface.positions.is_empty() || surface.triangles.is_empty() {
        return Err(MetricsError::EmptyShape);
    }
    let extent = hi - lo;
    let slack = 1e-9 * extent.norm().max(1.0);
    for p in &surface.positions {
        if p.x < lo.x - slack
            || p.y < lo.y - slack
            || p.z < lo.z - slack
            || p.x > hi.x + slack
            || p.y > hi.y + slack
            || p.z > hi.z + slack
        {
            return Err(MetricsError::BoxDoesNotEncloseShape);
        }
    }

    let cell = Vec3::new(
        extent.x / ns as f64,
        extent.y / ns as f64,
        extent.z / ns as f64,
    );
    let radius = 0.5 * cell.norm();
    let query = SurfaceQuery::new(surface);

    let mut data = Vec::with_capacity(ns * ns * ns);
    let inv = 1.0 / (SUBSAMPLES * SUBSAMPLES * SUBSAMPLES) as f64;
    for i in 0..ns {
        for j in 0..ns {
            for k in 0..ns {
                let base = lo
                    + Vec3::new(
                        cell.x * i as f64,
                        cell.y * j as f64,
                        cell.z * k as f64,
                    );
                let mut hits = 0usize;
                for si in 0..SUBSAMPLES {
                    for sj in 0..SUBSAMPLES {
                        for sk in 0..SUBSAMPLES {
                            let p = base
                                + Vec3::new(
                                    cell.x * (si as f64 + 0.5) / SUBSAMPLES as f64,
                                    cell.y * (sj as f64 + 0.5) / SUBSAMPLES as f64,
                                    cell.z * (sk as f64 + 0.5) / SUBSAMPLES as f64,
                                );
                            if query.within(p, radius) {
                                hits += 1;
                            }
                        }
                    }
                }
                data.push((hits as f64 * inv).clamp(0.0, INTENSITY_RANGE));
            }
        }
    }
    VoxelVolume::from_intensities(lo, hi, ns, data)
}

/// Per-voxel and mean structural similarity between two volumes.
#[derive(Debug, Clone)]
pub struct SsimResult {
    pub mean: f64,
    /// Per-voxel SSIM, same layout as the volumes.
    pub map: Vec<f64>,
    pub c1: f64,
    pub c2: f64,
}

/// Windowed SSIM with 3x3x3 uniform windows truncated at the boundary.
pub fn ssim(v1: &VoxelVolume, v2: &VoxelVolume) -> Result<SsimResult, MetricsError> {
    if v1.ns != v2.ns || v1.lo != v2.lo || v1.hi != v2.hi {
        return Err(MetricsError::MismatchedGrids);
    }
    let ns = v1.ns as isize;
    let c1 = (SSIM_K1 * INTENSITY_RANGE) * (SSIM_K1 * INTENSITY_RANGE);
    let c2 = (SSIM_K2 * INTENSITY_RANGE) * (SSIM_K2 * INTENSITY_RANGE);

    let mut map = Vec::with_capacity((ns * ns * ns) as usize);
    let mut sum = 0.0;
    for i in 0..ns {
        for j in 0..ns {
            for k in 0..ns {
                let mut count = 0.0;
                let mut s1 = 0.0;
                let mut s2 = 0.0;
                for di in -1..=1 {
                    for dj in -1..=1 {
                        for dk in -1..=1 {
                            let (ii, jj, kk) = (i + di, j + dj, k + dk);
                            if ii < 0 || jj < 0 || kk < 0 || ii >= ns || jj >= ns || kk >= ns {
                                continue;
                            }
                            let a = v1.at(ii as usize, jj as usize, kk as usize);
                            let b = v2.at(ii as usize, jj as usize, kk as usize);
                            count += 1.0;
                            s1 += a;
                            s2 += b;
                        }
                    }
                }
                let mu1 = s1 / count;
                let mu2 = s2 / count;
                let mut var1 = 0.0;
                let mut var2 = 0.0;
                let mut cov = 0.0;
                for di in -1..=1 {
                    for dj in -1..=1 {
                        for dk in -1..=1 {
                            let (ii, jj, kk) = (i + di, j + dj, k + dk);
                            if ii < 0 || jj < 0 || kk < 0 || ii >= ns || jj >= ns || kk >= ns {
                                continue;
                            }
                            let a = v1.at(ii as usize, jj as usize, kk as usize) - mu1;
                            let b = v2.at(ii as usize, jj as usize, kk as usize) - mu2;
                            var1 += a * a;
                            var2 += b * b;
                            cov += a * b;
                        }
                    }
                }
                var1 /= count;
                var2 /= count;
                cov /= count;
                let value = ((2.0 * mu1 * mu2 + c1) * (2.0 * cov + c2))
                    / ((mu1 * mu1 + mu2 * mu2 + c1) * (var1 + var2 + c2));
                map.push(value);
                sum += value;
            }
        }
    }
    let mean = sum / map.len() as f64;
    Ok(SsimResult { mean, map, c1, c2 })
}

/// Uniform scale, rotation, translation: `p -> scale * R p + t`.
#[derive(Debug, Clone, Copy)]
pub struct SimilarityTransform {
    pub scale: f64,
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl SimilarityTransform {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            rotation: Mat3::identity(),
            translation: Vec3::default(),
        }
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.rotation.mul_vec(p).scale(self.scale) + self.translation
    }

    pub fn apply_surface(&self, s: &TriSurface) -> TriSurface {
        TriSurface {
            positions: s.positions.iter().map(|&p| self.apply(p)).collect(),
            triangles: s.triangles.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AlignResult {
    pub transform: SimilarityTransform,
    /// RMS point-to-surface distance at the final transform.
    pub rms: f64,
    pub iterations: usize,
}

const ALIGN_MAX_ITERS: usize = 100;
const ALIGN_RELATIVE_TOL: f64 = 1e-6;

/// Iterative-closest-point refinement of the similarity transform mapping
/// `sim` onto `reference`: correspondences to the closest surface points,
/// then centroid translation, RMS-radius scale, and the orthogonal factor
/// of the cross-covariance, until the RMS residual stops improving.
///
/// ICP is a local method, so the refinement is started from each of the
/// four proper rotations aligning the shapes' principal frames and the
/// best final residual wins.
pub fn align(sim: &TriSurface, reference: &TriSurface) -> Result<AlignResult, MetricsError> {
    check_nondegenerate(&sim.positions)?;
    check_nondegenerate(&reference.positions)?;
    let query = SurfaceQuery::new(reference);
    let points = &sim.positions;

    let p_bar = centroid_of(points);
    let q_bar = centroid_of(&reference.positions);
    let scale0 = rms_radius(&reference.positions, q_bar) / rms_radius(points, p_bar);
    let basis_p = principal_basis(points, p_bar);
    let basis_q = principal_basis(&reference.positions, q_bar);

    let mut best: Option<AlignResult> = None;
    for flips in [
        [1.0, 1.0, 1.0],
        [1.0, -1.0, -1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0],
    ] {
        let mut flip = Mat3::ZERO;
        for k in 0..3 {
            flip.m[k][k] = flips[k];
        }
        let rotation = basis_q.mul(flip).mul(basis_p.transpose());
        let start = SimilarityTransform {
            scale: scale0,
            rotation,
            translation: q_bar - rotation.mul_vec(p_bar).scale(scale0),
        };
        let candidate = icp_refine(points, p_bar, &query, start);
        if best.as_ref().is_none_or(|b| candidate.rms < b.rms) {
            best = Some(candidate);
        }
    }
    Ok(best.expect("at least one candidate"))
}

fn icp_refine(
    points: &[Vec3],
    p_bar: Vec3,
    query: &SurfaceQuery<'_>,
    start: SimilarityTransform,
) -> AlignResult {
    let mut transform = start;
    let mut last_rms = f64::INFINITY;
    let mut rms = f64::INFINITY;
    let mut iterations = 0;
    for iter in 0..ALIGN_MAX_ITERS {
        iterations = iter + 1;
        // correspondences under the current transform
        let mut targets = Vec::with_capacity(points.len());
        let mut sq_sum = 0.0;
        for &p in points {
            let moved = transform.apply(p);
            let (q, d) = query.closest(moved);
            targets.push(q);
            sq_sum += d * d;
        }
        rms = libm::sqrt(sq_sum / points.len() as f64);
        if last_rms.is_finite() {
            let improvement = (last_rms - rms) / last_rms.max(1e-300);
            if improvement.abs() < ALIGN_RELATIVE_TOL {
                break;
            }
        }
        last_rms = rms;

        // re-fit the absolute transform from original points to targets
        let q_bar = centroid_of(&targets);
        let scale = rms_radius(&targets, q_bar) / rms_radius(points, p_bar);
        let mut m = Mat3::ZERO;
        for (p, q) in points.iter().zip(&targets) {
            m = m.add(Mat3::outer(*p - p_bar, *q - q_bar));
        }
        let rotation = horn_rotation(&m);
        transform = SimilarityTransform {
            scale,
            rotation,
            translation: q_bar - rotation.mul_vec(p_bar).scale(scale),
        };
    }
    AlignResult {
        transform,
        rms,
        iterations,
    }
}

/// Right-handed orthonormal basis of a point cloud's principal directions.
fn principal_basis(points: &[Vec3], center: Vec3) -> Mat3 {
    let mut cov = [[0.0; 3]; 3];
    for p in points {
        let d = (*p - center).to_array();
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += d[i] * d[j];
            }
        }
    }
    let (_, vecs) = jacobi_eigen(cov);
    let mut basis = Mat3 { m: vecs };
    if basis.determinant() < 0.0 {
        for row in basis.m.iter_mut() {
            row[0] = -row[0];
        }
    }
    basis
}

fn centroid_of(points: &[Vec3]) -> Vec3 {
    let mut c = Vec3::default();
    for p in points {
        c = c + *p;
    }
    c.scale(1.0 / points.len() as f64)
}

fn rms_radius(points: &[Vec3], center: Vec3) -> f64 {
    let s: f64 = points.iter().map(|&p| (p - center).norm_sq()).sum();
    libm::sqrt(s / points.len() as f64)
}

fn check_nondegenerate(points: &[Vec3]) -> Result<(), MetricsError> {
    if points.len() < 4 {
        return Err(MetricsError::DegeneratePointSet);
    }
    let c = centroid_of(points);
    let mut cov = [[0.0; 3]; 3];
    for p in points {
        let d = (*p - c).to_array();
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += d[i] * d[j];
            }
        }
    }
    let (vals, _) = jacobi_eigen(cov);
    if vals[0] <= 1e-12 * vals[2].max(1e-300) {
        return Err(MetricsError::DegeneratePointSet);
    }
    Ok(())
}

/// Rotation from the cross-covariance `M = sum p' q'^T` via the unit
/// quaternion maximizing the correlation (the orthogonal polar factor for
/// proper rotations).
fn horn_rotation(m: &Mat3) -> Mat3 {
    let s = &m.m;
    let n = [
        [
            s[0][0] + s[1][1] + s[2][2],
            s[1][2] - s[2][1],
            s[2][0] - s[0][2],
            s[0][1] - s[1][0],
        ],
        [
            s[1][2] - s[2][1],
            s[0][0] - s[1][1] - s[2][2],
            s[0][1] + s[1][0],
            s[2][0] + s[0][2],
        ],
        [
            s[2][0] - s[0][2],
            s[0][1] + s[1][0],
            -s[0][0] + s[1][1] - s[2][2],
            s[1][2] + s[2][1],
        ],
        [
            s[0][1] - s[1][0],
            s[2][0] + s[0][2],
            s[1][2] + s[2][1],
            -s[0][0] - s[1][1] + s[2][2],
        ],
    ];
    let (_, vecs) = jacobi_eigen(n);
    // largest eigenvalue is last after the ascending sort
    let q = [vecs[0][3], vecs[1][3], vecs[2][3], vecs[3][3]];
    let norm = libm::sqrt(q.iter().map(|v| v * v).sum());
    let (w, x, y, z) = (q[0] / norm, q[1] / norm, q[2] / norm, q[3] / norm);
    Mat3 {
        m: [
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ],
    }
}

/// Height-to-footprint ratio with the height axis chosen as the principal
/// axis of minimal spatial extent; the footprint diameter is the larger of
/// the two remaining principal extents.
pub fn aspect_ratio(surface: &TriSurface) -> Result<f64, MetricsError> {
    let (extents, _) = principal_extents(surface)?;
    let mut order = [0usize, 1, 2];
    order.sort_unstable_by(|&a, &b| extents[a].partial_cmp(&extents[b]).unwrap());
    let h = extents[order[0]];
    let d = extents[order[2]];
    if d <= 0.0 {
        return Err(MetricsError::ZeroFootprint);
    }
    Ok(h / d)
}

/// Height-to-footprint ratio with the height axis chosen as the principal
/// axis most aligned with `up`; used for simulated states where the
/// morphing direction is known (closed, tall shapes would otherwise report
/// a lateral extent as their height).
pub fn aspect_ratio_about(surface: &TriSurface, up: Vec3) -> Result<f64, MetricsError> {
    let up = up.normalized().ok_or(MetricsError::ZeroFootprint)?;
    let (extents, axes) = principal_extents(surface)?;
    let mut height_axis = 0;
    let mut best = -1.0;
    for (k, axis) in axes.iter().enumerate() {
        let a = axis.dot(up).abs();
        if a > best {
            best = a;
            height_axis = k;
        }
    }
    let h = extents[height_axis];
    let d = (0..3)
        .filter(|&k| k != height_axis)
        .map(|k| extents[k])
        .fold(0.0f64, f64::max);
    if d <= 0.0 {
        return Err(MetricsError::ZeroFootprint);
    }
    Ok(h / d)
}

fn principal_extents(surface: &TriSurface) -> Result<([f64; 3], [Vec3; 3]), MetricsError> {
    if surface.positions.is_empty() {
        return Err(MetricsError::EmptyShape);
    }
    let c = centroid_of(&surface.positions);
    let mut cov = [[0.0; 3]; 3];
    for p in &surface.positions {
        let d = (*p - c).to_array();
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += d[i] * d[j];
            }
        }
    }
    let (_, vecs) = jacobi_eigen(cov);
    let mut axes = [Vec3::default(); 3];
    let mut extents = [0.0; 3];
    for k in 0..3 {
        let axis = Vec3::new(vecs[0][k], vecs[1][k], vecs[2][k]);
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for p in &surface.positions {
            let t = (*p - c).dot(axis);
            min = min.min(t);
            max = max.max(t);
        }
        axes[k] = axis;
        extents[k] = max - min;
    }
    Ok((extents, axes))
}
