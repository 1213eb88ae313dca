//! Synthetic point clouds.
//!
//! Every sampler is a pure function of its parameters and a [`SeededRng`].
//! Point `i` is drawn from its own sub-stream `(label, i)`, so generation runs
//! in parallel and still matches sequential output bit for bit.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{expect_dim, LineManifold, PlaneManifold, PointCloud, SphereManifold};
use crate::rng::SeededRng;

/// Per-axis floor quantization steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantizationGrid {
    steps: [f64; 3],
}

impl QuantizationGrid {
    pub fn new(step_x: f64, step_y: f64, step_z: f64) -> Result<Self> {
        for (axis, s) in ["x", "y", "z"].iter().zip([step_x, step_y, step_z]) {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::invalid(format!(
                    "quantization step {axis} must be positive and finite, got {s}"
                )));
            }
        }
        Ok(Self {
            steps: [step_x, step_y, step_z],
        })
    }

    pub fn uniform(step: f64) -> Result<Self> {
        Self::new(step, step, step)
    }

    pub fn steps(&self) -> [f64; 3] {
        self.steps
    }
}

/// Isotropic Gaussian perturbation with standard deviation `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseModel {
    sigma: f64,
}

impl NoiseModel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::invalid(format!(
                "noise sigma must be finite and non-negative, got {sigma}"
            )));
        }
        Ok(Self { sigma })
    }

    pub fn none() -> Self {
        Self { sigma: 0.0 }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    fn perturb(&self, rng: &mut ChaCha8Rng, coords: &mut [f64]) {
        if self.sigma == 0.0 {
            return;
        }
        for c in coords {
            let z: f64 = rng.sample(StandardNormal);
            *c += self.sigma * z;
        }
    }
}

/// Rectangle `[u_min, u_max] × [v_min, v_max]` in a plane's in-plane basis.
///
/// Coordinates are measured from the plane's anchor, the point of the plane
/// closest to the origin, along [`PlaneManifold::basis`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatchExtent {
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl PatchExtent {
    pub fn new(u_min: f64, u_max: f64, v_min: f64, v_max: f64) -> Result<Self> {
        let all_finite = [u_min, u_max, v_min, v_max].iter().all(|c| c.is_finite());
        if !all_finite || u_min >= u_max || v_min >= v_max {
            return Err(Error::invalid(format!(
                "patch extent [{u_min}, {u_max}] x [{v_min}, {v_max}] must have positive area"
            )));
        }
        Ok(Self {
            u_min,
            u_max,
            v_min,
            v_max,
        })
    }

    /// Square of side `side` centered at `(u, v)`.
    pub fn centered(u: f64, v: f64, side: f64) -> Result<Self> {
        let h = side / 2.0;
        Self::new(u - h, u + h, v - h, v + h)
    }
}

/// Structured sensing environment: a vertical cylinder of radius `R` and
/// height `h` (axis along z, `0 ≤ z ≤ h`) holding reflective manifolds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SceneModel {
    sensing_radius: f64,
    sensing_height: f64,
    plane_area: f64,
    sphere: Option<SphereManifold>,
    planes: Vec<PlaneManifold>,
    lines: Vec<LineManifold>,
}

impl SceneModel {
    pub fn new(sensing_radius: f64, sensing_height: f64, plane_area: f64) -> Result<Self> {
        for (name, v) in [
            ("sensing radius", sensing_radius),
            ("sensing height", sensing_height),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(plane_area.is_finite() && plane_area >= 0.0) {
            return Err(Error::invalid(format!(
                "plane area must be non-negative, got {plane_area}"
            )));
        }
        Ok(Self {
            sensing_radius,
            sensing_height,
            plane_area,
            sphere: None,
            planes: Vec::new(),
            lines: Vec::new(),
        })
    }

    pub fn with_plane(mut self, plane: PlaneManifold) -> Self {
        self.planes.push(plane);
        self
    }

    pub fn with_line(mut self, line: LineManifold) -> Result<Self> {
        expect_dim(3, line.dim())?;
        self.lines.push(line);
        Ok(self)
    }

    pub fn with_sphere(mut self, sphere: SphereManifold) -> Result<Self> {
        expect_dim(3, sphere.dim())?;
        self.sphere = Some(sphere);
        Ok(self)
    }

    pub fn sensing_radius(&self) -> f64 {
        self.sensing_radius
    }

    pub fn sensing_height(&self) -> f64 {
        self.sensing_height
    }

    pub fn plane_area(&self) -> f64 {
        self.plane_area
    }

    pub fn planes(&self) -> &[PlaneManifold] {
        &self.planes
    }

    pub fn lines(&self) -> &[LineManifold] {
        &self.lines
    }

    pub fn sphere(&self) -> Option<&SphereManifold> {
        self.sphere.as_ref()
    }

    /// `π R² h`.
    pub fn total_volume(&self) -> f64 {
        std::f64::consts::PI * self.sensing_radius * self.sensing_radius * self.sensing_height
    }

    fn center(&self) -> [f64; 3] {
        [0.0, 0.0, self.sensing_height / 2.0]
    }
}

/// How many surface samples to draw from each manifold of a scene.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SurfaceCounts {
    pub planes: Vec<usize>,
    pub sphere: usize,
    pub lines: Vec<usize>,
}

impl SurfaceCounts {
    /// The same count for every manifold in `scene`.
    pub fn each(scene: &SceneModel, n: usize) -> Self {
        Self {
            planes: vec![n; scene.planes.len()],
            sphere: if scene.sphere.is_some() { n } else { 0 },
            lines: vec![n; scene.lines.len()],
        }
    }
}

fn generate(
    dim: usize,
    n: usize,
    rng: &SeededRng,
    label: &str,
    point: impl Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
) -> PointCloud {
    let coords: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut stream = rng.stream(label, i as u64);
            let mut p = vec![0.0; dim];
            point(&mut stream, &mut p);
            p
        })
        .collect();
    PointCloud::from_raw(dim, coords)
}

/// `n` points with i.i.d. uniform coordinates on `[0, 1)`.
pub fn sample_uniform_hypercube(n: usize, dim: usize, rng: &SeededRng) -> Result<PointCloud> {
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    Ok(generate(dim, n, rng, "uniform", |s, p| {
        for c in p.iter_mut() {
            *c = s.random::<f64>();
        }
    }))
}

/// Uniform points on a rectangular patch of `plane`, plus Gaussian noise.
pub fn sample_plane_patch(
    plane: &PlaneManifold,
    extent: &PatchExtent,
    n: usize,
    noise: &NoiseModel,
    rng: &SeededRng,
) -> Result<PointCloud> {
    let extent = PatchExtent::new(extent.u_min, extent.u_max, extent.v_min, extent.v_max)?;
    let (u, v) = plane.basis();
    let anchor = plane.project(&[0.0; 3]);
    Ok(generate(3, n, rng, "plane", |s, p| {
        let a = extent.u_min + s.random::<f64>() * (extent.u_max - extent.u_min);
        let b = extent.v_min + s.random::<f64>() * (extent.v_max - extent.v_min);
        for k in 0..3 {
            p[k] = anchor[k] + a * u[k] + b * v[k];
        }
        noise.perturb(s, p);
    }))
}

/// Uniform directions on the sphere (normalized Gaussians), placed at radius
/// `r`, plus Gaussian noise. Works in any dimension.
pub fn sample_sphere_surface(
    sphere: &SphereManifold,
    n: usize,
    noise: &NoiseModel,
    rng: &SeededRng,
) -> Result<PointCloud> {
    let c = sphere.center().coords();
    let r = sphere.radius();
    Ok(generate(sphere.dim(), n, rng, "sphere", |s, p| {
        let norm = loop {
            for x in p.iter_mut() {
                *x = s.sample(StandardNormal);
            }
            let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-300 {
                break norm;
            }
        };
        for (x, ck) in p.iter_mut().zip(c) {
            *x = ck + r * (*x / norm);
        }
        noise.perturb(s, p);
    }))
}

/// Points `c + t v` with `t` uniform on `[t_min, t_max]`, plus Gaussian noise.
pub fn sample_line_segment(
    line: &LineManifold,
    t_min: f64,
    t_max: f64,
    n: usize,
    noise: &NoiseModel,
    rng: &SeededRng,
) -> Result<PointCloud> {
    if !(t_min.is_finite() && t_max.is_finite() && t_min < t_max) {
        return Err(Error::invalid(format!(
            "line parameter range [{t_min}, {t_max}] is empty"
        )));
    }
    let c = line.base().coords();
    let v = line.direction();
    Ok(generate(line.dim(), n, rng, "line", |s, p| {
        let t = t_min + s.random::<f64>() * (t_max - t_min);
        for k in 0..p.len() {
            p[k] = c[k] + t * v[k];
        }
        noise.perturb(s, p);
    }))
}

/// Largest lattice index `m` with `fl(m·step) ≤ x`.
///
/// Starts from `⌊x / step⌋` and corrects by one when division rounding puts
/// the estimate on the wrong side. Choosing the index this way makes
/// quantization exactly idempotent.
fn lattice_index(x: f64, step: f64) -> f64 {
    let mut m = (x / step).floor();
    if (m + 1.0) * step <= x {
        m += 1.0;
    } else if m * step > x {
        m -= 1.0;
    }
    m
}

/// Floor-snaps every coordinate to the grid: `⌊x/Δx⌋·Δx` per axis.
pub fn quantize(cloud: &PointCloud, grid: &QuantizationGrid) -> Result<PointCloud> {
    expect_dim(3, cloud.dim())?;
    let steps = grid.steps;
    Ok(cloud.map_points(|src, dst| {
        for k in 0..3 {
            dst[k] = lattice_index(src[k], steps[k]) * steps[k];
        }
    }))
}

/// Adds i.i.d. `N(0, σ² I)` to every point. `σ = 0` returns an exact copy.
pub fn add_noise(cloud: &PointCloud, noise: &NoiseModel, rng: &SeededRng) -> PointCloud {
    if noise.sigma == 0.0 {
        return cloud.clone();
    }
    let dim = cloud.dim();
    let coords: Vec<f64> = (0..cloud.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut s = rng.stream("noise", i as u64);
            let mut p = cloud.point(i).to_vec();
            noise.perturb(&mut s, &mut p);
            p
        })
        .collect();
    PointCloud::from_raw(dim, coords)
}

/// Background points uniform in the sensing cylinder plus noisy samples from
/// every manifold in the scene.
///
/// Background points come from rejection sampling in the bounding box. Each
/// plane contributes a square patch of area `plane_area` centred on the
/// projection of the cylinder centre; each line a segment `t ∈ [-R, R]`.
/// Output order: background, planes, sphere, lines.
pub fn sample_scene(
    scene: &SceneModel,
    n_background: usize,
    counts: &SurfaceCounts,
    noise: &NoiseModel,
    rng: &SeededRng,
) -> Result<PointCloud> {
    if counts.planes.len() != scene.planes.len() || counts.lines.len() != scene.lines.len() {
        return Err(Error::invalid(format!(
            "surface counts ({} planes, {} lines) do not match scene ({} planes, {} lines)",
            counts.planes.len(),
            counts.lines.len(),
            scene.planes.len(),
            scene.lines.len()
        )));
    }
    if counts.sphere > 0 && scene.sphere.is_none() {
        return Err(Error::invalid("sphere count given but scene has no sphere"));
    }

    let r = scene.sensing_radius;
    let h = scene.sensing_height;
    let mut cloud = generate(
        3,
        n_background,
        &rng.child("scene", 0),
        "background",
        |s, p| loop {
            let x = (2.0 * s.random::<f64>() - 1.0) * r;
            let y = (2.0 * s.random::<f64>() - 1.0) * r;
            let z = s.random::<f64>() * h;
            if x * x + y * y <= r * r {
                p.copy_from_slice(&[x, y, z]);
                break;
            }
        },
    );

    let center = scene.center();
    for (j, (plane, &n)) in scene.planes.iter().zip(&counts.planes).enumerate() {
        if n == 0 {
            continue;
        }
        let (u, v) = plane.basis();
        let anchor = plane.project(&[0.0; 3]);
        let foot = plane.project(&center);
        let offset = [
            foot[0] - anchor[0],
            foot[1] - anchor[1],
            foot[2] - anchor[2],
        ];
        let du = offset.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>();
        let dv = offset.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
        let extent = PatchExtent::centered(du, dv, scene.plane_area.sqrt())?;
        let patch = sample_plane_patch(
            plane,
            &extent,
            n,
            noise,
            &rng.child("scene/plane", j as u64),
        )?;
        cloud.extend(&patch)?;
    }

    if let Some(sphere) = &scene.sphere {
        if counts.sphere > 0 {
            let s =
                sample_sphere_surface(sphere, counts.sphere, noise, &rng.child("scene/sphere", 0))?;
            cloud.extend(&s)?;
        }
    }

    for (j, (line, &n)) in scene.lines.iter().zip(&counts.lines).enumerate() {
        if n == 0 {
            continue;
        }
        let seg = sample_line_segment(line, -r, r, n, noise, &rng.child("scene/line", j as u64))?;
        cloud.extend(&seg)?;
    }

    Ok(cloud)
}
