//! Residuals, tolerance predicates and point-to-manifold distances.
//!
//! Residual conventions:
//!
//! - collinearity: `‖(p2 − p1) × (p3 − p1)‖`, twice the triangle area.
//! - coplanarity: `|det[p2 − p1; p3 − p1; p4 − p1]|`, which equals the
//!   determinant of the 4×4 homogeneous matrix (six times the tetrahedron
//!   volume).
//! - sphere: `|‖p − c‖² − r²|` (squared form).
//!
//! Residual tests against `epsilon` are strict (`< ε`); distance tests against
//! `delta` are inclusive (`≤ δ`).

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// A point in `d`-dimensional space with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("point must have at least one coordinate"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("point coordinates"));
        }
        Ok(Self { coords })
    }

    pub fn xyz(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::new(vec![x, y, z])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    fn as_xyz(&self) -> Result<[f64; 3]> {
        expect_dim(3, self.dim())?;
        Ok([self.coords[0], self.coords[1], self.coords[2]])
    }
}

/// A collection of points sharing one dimension, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("point cloud dimension must be at least 1"));
        }
        Ok(Self {
            dim,
            coords: Vec::new(),
        })
    }

    pub fn with_capacity(dim: usize, n: usize) -> Result<Self> {
        let mut cloud = Self::new(dim)?;
        cloud.coords.reserve(dim * n);
        Ok(cloud)
    }

    pub fn from_points(dim: usize, points: impl IntoIterator<Item = Point>) -> Result<Self> {
        let mut cloud = Self::new(dim)?;
        for p in points {
            cloud.push(&p)?;
        }
        Ok(cloud)
    }

    /// Builds a 3D cloud from raw triples.
    pub fn from_xyz(points: &[[f64; 3]]) -> Result<Self> {
        let mut cloud = Self::with_capacity(3, points.len())?;
        for p in points {
            cloud.push_coords(p)?;
        }
        Ok(cloud)
    }

    pub fn push(&mut self, p: &Point) -> Result<()> {
        expect_dim(self.dim, p.dim())?;
        self.coords.extend_from_slice(p.coords());
        Ok(())
    }

    pub fn push_coords(&mut self, coords: &[f64]) -> Result<()> {
        expect_dim(self.dim, coords.len())?;
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("point coordinates"));
        }
        self.coords.extend_from_slice(coords);
        Ok(())
    }

    pub fn extend(&mut self, other: &PointCloud) -> Result<()> {
        expect_dim(self.dim, other.dim)?;
        self.coords.extend_from_slice(&other.coords);
        Ok(())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Coordinates of the `i`-th point. Panics when out of range.
    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn to_points(&self) -> Vec<Point> {
        self.iter().map(|c| Point { coords: c.to_vec() }).collect()
    }

    /// Copies the cloud into fixed-size triples; fails unless `dim == 3`.
    pub fn to_xyz(&self) -> Result<Vec<[f64; 3]>> {
        expect_dim(3, self.dim)?;
        Ok(self.iter().map(|c| [c[0], c[1], c[2]]).collect())
    }

    pub(crate) fn map_points(&self, mut f: impl FnMut(&[f64], &mut [f64])) -> PointCloud {
        let mut coords = self.coords.clone();
        for (src, dst) in self
            .coords
            .chunks_exact(self.dim)
            .zip(coords.chunks_exact_mut(self.dim))
        {
            f(src, dst);
        }
        PointCloud {
            dim: self.dim,
            coords,
        }
    }

    pub(crate) fn from_raw(dim: usize, coords: Vec<f64>) -> PointCloud {
        debug_assert!(dim > 0 && coords.len().is_multiple_of(dim));
        PointCloud { dim, coords }
    }
}

/// Residual threshold `epsilon` and manifold-distance tolerance `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ToleranceSpec {
    pub epsilon: f64,
    pub delta: f64,
}

impl ToleranceSpec {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        check_nonneg("epsilon", epsilon)?;
        check_nonneg("delta", delta)?;
        Ok(Self { epsilon, delta })
    }

    pub fn epsilon(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, 0.0)
    }

    pub fn delta(delta: f64) -> Result<Self> {
        Self::new(0.0, delta)
    }
}

/// `{ base + t·direction }` with a unit direction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineManifold {
    base: Point,
    direction: Vec<f64>,
}

impl LineManifold {
    /// `direction` is normalized; it must be non-zero and match `base`.
    pub fn new(base: Point, direction: &[f64]) -> Result<Self> {
        expect_dim(base.dim(), direction.len())?;
        if direction.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("line direction"));
        }
        let norm = norm(direction);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid("line direction must be non-zero"));
        }
        let direction = direction.iter().map(|c| c / norm).collect();
        Ok(Self { base, direction })
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn at(&self, t: f64) -> Vec<f64> {
        self.base
            .coords()
            .iter()
            .zip(&self.direction)
            .map(|(c, v)| c + t * v)
            .collect()
    }
}

/// `a·x + b = 0` in 3D, stored with `‖a‖ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlaneManifold {
    normal: [f64; 3],
    offset: f64,
}

impl PlaneManifold {
    pub fn new(normal: [f64; 3], offset: f64) -> Result<Self> {
        if normal.iter().any(|c| !c.is_finite()) || !offset.is_finite() {
            return Err(Error::NonFinite("plane coefficients"));
        }
        let n = norm(&normal);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::invalid("plane normal must be non-zero"));
        }
        Ok(Self {
            normal: [normal[0] / n, normal[1] / n, normal[2] / n],
            offset: offset / n,
        })
    }

    /// Plane with the given normal passing through `point`.
    pub fn through(normal: [f64; 3], point: &Point) -> Result<Self> {
        let p = point.as_xyz()?;
        let plane = Self::new(normal, 0.0)?;
        Ok(Self {
            offset: -dot3(&plane.normal, &p),
            ..plane
        })
    }

    pub fn normal(&self) -> [f64; 3] {
        self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Signed distance `a·p + b`.
    pub fn signed_distance(&self, p: &[f64; 3]) -> f64 {
        dot3(&self.normal, p) + self.offset
    }

    /// Point of the plane closest to `p`.
    pub fn project(&self, p: &[f64; 3]) -> [f64; 3] {
        let s = self.signed_distance(p);
        [
            p[0] - s * self.normal[0],
            p[1] - s * self.normal[1],
            p[2] - s * self.normal[2],
        ]
    }

    /// Orthonormal in-plane basis `(u, v)` derived from the normal.
    ///
    /// The helper axis is the coordinate axis along which the normal has its
    /// smallest absolute component (ties go to the lowest index).
    pub fn basis(&self) -> ([f64; 3], [f64; 3]) {
        let n = self.normal;
        let mut pivot = 0;
        for i in 1..3 {
            if n[i].abs() < n[pivot].abs() {
                pivot = i;
            }
        }
        let mut axis = [0.0; 3];
        axis[pivot] = 1.0;
        let u = cross3(&n, &axis);
        let un = norm(&u);
        let u = [u[0] / un, u[1] / un, u[2] / un];
        let v = cross3(&n, &u);
        (u, v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SphereManifold {
    center: Point,
    radius: f64,
}

impl SphereManifold {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !radius.is_finite() {
            return Err(Error::NonFinite("sphere radius"));
        }
        if radius <= 0.0 {
            return Err(Error::invalid("sphere radius must be positive"));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }
}

/// One of the reference manifolds used for structured degeneracy.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Manifold {
    Line(LineManifold),
    Plane(PlaneManifold),
    Sphere(SphereManifold),
}

impl Manifold {
    /// Euclidean distance from `p`. For spheres this is `|‖p − c‖ − r|`,
    /// not the squared residual.
    pub fn distance(&self, p: &Point) -> Result<f64> {
        match self {
            Manifold::Line(line) => point_line_distance(p, line),
            Manifold::Plane(plane) => point_plane_distance(p, plane),
            Manifold::Sphere(sphere) => sphere_distance(p, sphere),
        }
    }
}

// ---------------------------------------------------------------------------
// Raw kernels shared with the counting code. No validation.
// ---------------------------------------------------------------------------

#[inline]
pub(crate) fn sub3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub(crate) fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// `‖(b − a) × (c − a)‖`.
#[inline]
pub fn triangle_cross_norm(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> f64 {
    let n = cross3(&sub3(b, a), &sub3(c, a));
    dot3(&n, &n).sqrt()
}

/// Signed `det[b − a; c − a; d − a]`.
#[inline]
pub fn tetra_det(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3], d: &[f64; 3]) -> f64 {
    dot3(&cross3(&sub3(b, a), &sub3(c, a)), &sub3(d, a))
}

// ---------------------------------------------------------------------------
// Validated operations
// ---------------------------------------------------------------------------

pub fn collinearity_residual(p1: &Point, p2: &Point, p3: &Point) -> Result<f64> {
    Ok(triangle_cross_norm(
        &p1.as_xyz()?,
        &p2.as_xyz()?,
        &p3.as_xyz()?,
    ))
}

pub fn is_collinear(p1: &Point, p2: &Point, p3: &Point, tol: &ToleranceSpec) -> Result<bool> {
    check_nonneg("epsilon", tol.epsilon)?;
    Ok(collinearity_residual(p1, p2, p3)? < tol.epsilon)
}

pub fn coplanarity_residual(p1: &Point, p2: &Point, p3: &Point, p4: &Point) -> Result<f64> {
    Ok(tetra_det(&p1.as_xyz()?, &p2.as_xyz()?, &p3.as_xyz()?, &p4.as_xyz()?).abs())
}

pub fn is_coplanar(
    p1: &Point,
    p2: &Point,
    p3: &Point,
    p4: &Point,
    tol: &ToleranceSpec,
) -> Result<bool> {
    check_nonneg("epsilon", tol.epsilon)?;
    Ok(coplanarity_residual(p1, p2, p3, p4)? < tol.epsilon)
}

pub fn point_line_distance(p: &Point, line: &LineManifold) -> Result<f64> {
    expect_dim(line.dim(), p.dim())?;
    let w: Vec<f64> = p
        .coords()
        .iter()
        .zip(line.base.coords())
        .map(|(a, c)| a - c)
        .collect();
    let t: f64 = w.iter().zip(&line.direction).map(|(a, v)| a * v).sum();
    let perp: f64 = w
        .iter()
        .zip(&line.direction)
        .map(|(a, v)| {
            let r = a - t * v;
            r * r
        })
        .sum();
    Ok(perp.sqrt())
}

pub fn point_plane_distance(p: &Point, plane: &PlaneManifold) -> Result<f64> {
    Ok(plane.signed_distance(&p.as_xyz()?).abs())
}

fn squared_distance_to_center(p: &[f64], sphere: &SphereManifold) -> Result<f64> {
    expect_dim(sphere.dim(), p.len())?;
    Ok(p.iter()
        .zip(sphere.center.coords())
        .map(|(a, c)| (a - c) * (a - c))
        .sum())
}

/// `|‖p − c‖² − r²|`.
pub fn sphere_residual(p: &Point, sphere: &SphereManifold) -> Result<f64> {
    sphere_residual_coords(p.coords(), sphere)
}

pub(crate) fn sphere_residual_coords(p: &[f64], sphere: &SphereManifold) -> Result<f64> {
    let d2 = squared_distance_to_center(p, sphere)?;
    Ok((d2 - sphere.radius * sphere.radius).abs())
}

/// `|‖p − c‖ − r|`, the Euclidean distance to the sphere surface.
pub fn sphere_distance(p: &Point, sphere: &SphereManifold) -> Result<f64> {
    let d2 = squared_distance_to_center(p.coords(), sphere)?;
    Ok((d2.sqrt() - sphere.radius).abs())
}

/// Algebraic least-squares sphere through `points`.
///
/// Solves `2⟨q, c⟩ + t = ‖q‖²` for `(c, t)` in the least-squares sense, with
/// `q` the points shifted by their centroid, and recovers `r² = t + ‖c‖²`.
/// Exact (up to rounding) when the points lie on a sphere.
pub fn fit_sphere(points: &PointCloud) -> Result<SphereManifold> {
    let d = points.dim();
    let n = points.len();
    if n < d + 1 {
        return Err(Error::invalid(format!(
            "sphere fit in {d}D needs at least {} points, got {n}",
            d + 1
        )));
    }

    let mut centroid = vec![0.0; d];
    for p in points.iter() {
        for (m, c) in centroid.iter_mut().zip(p) {
            *m += c;
        }
    }
    centroid.iter_mut().for_each(|m| *m /= n as f64);

    let mut a = DMatrix::<f64>::zeros(n, d + 1);
    let mut b = DVector::<f64>::zeros(n);
    for (row, p) in points.iter().enumerate() {
        let mut sq = 0.0;
        for j in 0..d {
            let q = p[j] - centroid[j];
            a[(row, j)] = 2.0 * q;
            sq += q * q;
        }
        a[(row, d)] = 1.0;
        b[row] = sq;
    }

    // Scale-free rank test on the design matrix.
    let svd = a.svd(true, true);
    let max_sv = svd.singular_values.max();
    let tol = max_sv * 1e-10;
    let rank = svd.singular_values.iter().filter(|s| **s > tol).count();
    if rank < d + 1 {
        return Err(Error::RankDeficient {
            rank,
            required: d + 1,
            reason: "points are coplanar or collinear",
        });
    }
    let x = svd.solve(&b, tol).map_err(|_| Error::RankDeficient {
        rank,
        required: d + 1,
        reason: "least-squares solve failed",
    })?;

    let shift: Vec<f64> = (0..d).map(|j| x[j]).collect();
    let r2 = x[d] + shift.iter().map(|c| c * c).sum::<f64>();
    if !r2.is_finite() || r2 <= 0.0 {
        return Err(Error::invalid(
            "fitted sphere has non-positive squared radius",
        ));
    }
    let center = shift.iter().zip(&centroid).map(|(s, m)| s + m).collect();
    SphereManifold::new(Point::new(center)?, r2.sqrt())
}

/// Largest `sphere_residual` over the cloud.
pub fn max_sphere_residual(points: &PointCloud, sphere: &SphereManifold) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::invalid("point cloud is empty"));
    }
    points
        .iter()
        .map(|p| sphere_residual_coords(p, sphere))
        .try_fold(0.0f64, |acc, r| r.map(|r| acc.max(r)))
}

pub fn is_nearly_spherical(
    points: &PointCloud,
    sphere: &SphereManifold,
    tol: &ToleranceSpec,
) -> Result<bool> {
    check_nonneg("delta", tol.delta)?;
    Ok(max_sphere_residual(points, sphere)? <= tol.delta)
}

/// Whether `p` lies within `delta_i` of at least one manifold.
pub fn region_membership(p: &Point, manifolds: &[(Manifold, f64)]) -> Result<bool> {
    if manifolds.is_empty() {
        return Err(Error::invalid("region needs at least one manifold"));
    }
    let mut inside = false;
    for (manifold, delta) in manifolds {
        check_nonneg("delta", *delta)?;
        inside |= manifold.distance(p)? <= *delta;
    }
    Ok(inside)
}

pub(crate) fn expect_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub(crate) fn check_nonneg(name: &str, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::invalid(format!("{name} must be finite")));
    }
    if value < 0.0 {
        return Err(Error::invalid(format!("{name} must be non-negative")));
    }
    Ok(())
}
