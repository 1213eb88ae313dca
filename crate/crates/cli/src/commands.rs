use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use degeneracy::analytics::{
    build_expectation_table, expected_collinear, expected_coplanar, expected_degenerate_subsets,
    near_spherical_probability, overall_probability, overall_probability_exp_approx,
    single_subset_probability, structured_coplanar_probability, subset_count, AmplificationFactors,
    RandomModelParams, StructuredModelParams,
};
use degeneracy::geometry::{
    fit_sphere, is_nearly_spherical, max_sphere_residual, LineManifold, PlaneManifold,
    SphereManifold,
};
use degeneracy::montecarlo::{
    amplification_experiment, compare_analytic_empirical, count_degenerate_sampled,
    count_exhaustive, AmplificationConfig, ComparisonParams, SubsetKind,
};
use degeneracy::samplers::{
    add_noise, quantize, sample_line_segment, sample_plane_patch, sample_scene,
    sample_sphere_surface, sample_uniform_hypercube, NoiseModel, PatchExtent, QuantizationGrid,
    SceneModel, SurfaceCounts,
};
use degeneracy::{Point, PointCloud, SeededRng, ToleranceSpec};

use crate::args::{
    DetectArgs, DetectMode, ExpectArgs, ExpectModel, FloatList, GenArgs, McArgs, McKind, Sampler,
    TableArgs,
};
use crate::error::{CliError, Result};
use crate::report::{ExpectationReport, McExperiment, McReport, Payload, Quantity, SphereReport};
use crate::xyz::read_xyz;

fn fixed<const N: usize>(list: &FloatList, field: &'static str) -> Result<[f64; N]> {
    <[f64; N]>::try_from(list.0.as_slice())
        .map_err(|_| CliError::invalid(field, format!("expected {N} values, got {}", list.0.len())))
}

fn grid_from(list: &FloatList, field: &'static str) -> Result<QuantizationGrid> {
    match list.0.as_slice() {
        [step] => Ok(QuantizationGrid::uniform(*step)?),
        [dx, dy, dz] => Ok(QuantizationGrid::new(*dx, *dy, *dz)?),
        other => Err(CliError::invalid(
            field,
            format!("expected 1 or 3 grid steps, got {}", other.len()),
        )),
    }
}

/// Sample, then optionally quantize and add noise after snapping.
///
/// Without a grid the noise is the sampler's own, drawn together with each
/// point. With a grid the sampler runs noise-free and noise follows the snap.
pub fn gen(args: &GenArgs, seed: u64) -> Result<PointCloud> {
    let rng = SeededRng::new(seed);
    let noise = NoiseModel::new(args.noise)?;
    let grid = args
        .quantize
        .as_ref()
        .map(|q| grid_from(q, "--quantize"))
        .transpose()?;
    let sampler_noise = if grid.is_some() {
        NoiseModel::none()
    } else {
        noise
    };
    let post_noise = rng.child("gen/noise", 0);

    let cloud = match &args.sampler {
        Sampler::Uniform { n, dim } => {
            let cloud = sample_uniform_hypercube(*n, *dim, &rng)?;
            add_noise(&cloud, &sampler_noise, &post_noise)
        }
        Sampler::Plane {
            n,
            normal,
            offset,
            extent,
        } => {
            let plane = PlaneManifold::new(fixed(normal, "--normal")?, *offset)?;
            let [u0, u1, v0, v1] = fixed(extent, "--extent")?;
            let extent = PatchExtent::new(u0, u1, v0, v1)?;
            sample_plane_patch(&plane, &extent, *n, &sampler_noise, &rng)?
        }
        Sampler::Sphere { n, center, radius } => {
            let sphere = SphereManifold::new(Point::new(center.0.clone())?, *radius)?;
            sample_sphere_surface(&sphere, *n, &sampler_noise, &rng)?
        }
        Sampler::Line {
            n,
            base,
            direction,
            t_range,
        } => {
            let line = LineManifold::new(Point::new(base.0.clone())?, &direction.0)?;
            let [t0, t1] = fixed(t_range, "--t-range")?;
            sample_line_segment(&line, t0, t1, *n, &sampler_noise, &rng)?
        }
        Sampler::Scene {
            cyl_radius,
            cyl_height,
            plane_area,
            planes,
            sphere,
            lines,
            n_background,
            n_per_surface,
        } => {
            let mut scene = SceneModel::new(*cyl_radius, *cyl_height, *plane_area)?;
            for p in planes {
                let [a, b, c, d] = fixed(p, "--plane")?;
                scene = scene.with_plane(PlaneManifold::new([a, b, c], d)?);
            }
            if let Some(s) = sphere {
                let [x, y, z, r] = fixed(s, "--sphere")?;
                scene = scene.with_sphere(SphereManifold::new(Point::xyz(x, y, z)?, r)?)?;
            }
            for l in lines {
                let [x, y, z, vx, vy, vz] = fixed(l, "--line")?;
                scene = scene.with_line(LineManifold::new(Point::xyz(x, y, z)?, &[vx, vy, vz])?)?;
            }
            let counts = SurfaceCounts::each(&scene, *n_per_surface);
            sample_scene(&scene, *n_background, &counts, &sampler_noise, &rng)?
        }
    };

    match grid {
        Some(grid) => Ok(add_noise(&quantize(&cloud, &grid)?, &noise, &post_noise)),
        None => Ok(cloud),
    }
}

pub fn load_cloud(path: &Path) -> Result<PointCloud> {
    let file = File::open(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_xyz(BufReader::new(file)).map_err(|e| CliError::Malformed {
        path: path.to_path_buf(),
        line: e.line,
        reason: e.reason,
    })
}

pub fn detect(args: &DetectArgs, seed: u64) -> Result<Payload> {
    let cloud = load_cloud(&args.input)?;
    let kind = match args.mode {
        DetectMode::Collinear => SubsetKind::Collinear,
        DetectMode::Coplanar => SubsetKind::Coplanar,
        DetectMode::Sphere => return detect_sphere(&cloud, args.delta),
    };
    let n = cloud.len() as u64;
    let result = if args.sampled {
        count_degenerate_sampled(
            &cloud,
            kind.size(),
            args.epsilon,
            args.samples,
            &SeededRng::new(seed),
        )?
    } else {
        count_exhaustive(
            &cloud,
            kind,
            args.epsilon,
            args.cap.unwrap_or(kind.default_cap()),
        )?
    };
    let analytic = match kind {
        SubsetKind::Collinear => expected_collinear(n, args.epsilon)?,
        SubsetKind::Coplanar => expected_coplanar(n, args.epsilon)?,
    };
    let params = ComparisonParams {
        n,
        dim: cloud.dim() as u32,
        k: kind.size() as u32,
        epsilon: args.epsilon,
        seed: args.sampled.then_some(seed),
        ..ComparisonParams::default()
    };
    Ok(Payload::Count(compare_analytic_empirical(
        params, analytic, result,
    )?))
}

fn detect_sphere(cloud: &PointCloud, delta: f64) -> Result<Payload> {
    let tol = ToleranceSpec::delta(delta)?;
    let sphere = fit_sphere(cloud)?;
    Ok(Payload::Sphere(SphereReport {
        n_points: cloud.len(),
        center: sphere.center().coords().to_vec(),
        radius: sphere.radius(),
        max_residual: max_sphere_residual(cloud, &sphere)?,
        delta,
        nearly_spherical: is_nearly_spherical(cloud, &sphere, &tol)?,
    }))
}

fn q(name: &'static str, formula: &'static str, value: f64) -> Quantity {
    Quantity {
        name,
        formula,
        value,
    }
}

fn aggregate(out: &mut Vec<Quantity>, p: f64, subsets: Option<f64>) -> Result<()> {
    if let Some(m) = subsets {
        out.push(q(
            "overall_probability",
            "1-(1-p)^M",
            overall_probability(&[(p, m)])?,
        ));
        out.push(q(
            "overall_probability_exp_approx",
            "1-exp(-M*p)",
            overall_probability_exp_approx(p * m)?,
        ));
    }
    Ok(())
}

pub fn expect(args: &ExpectArgs) -> Result<Payload> {
    let (model, quantities) = match &args.model {
        ExpectModel::RandomCollinear { n, epsilon } => (
            "random-collinear",
            vec![q(
                "expected_collinear_triples",
                "eps*N^2/6",
                expected_collinear(*n, *epsilon)?,
            )],
        ),
        ExpectModel::RandomCoplanar { n, epsilon } => (
            "random-coplanar",
            vec![q(
                "expected_coplanar_quadruples",
                "eps*N/24",
                expected_coplanar(*n, *epsilon)?,
            )],
        ),
        ExpectModel::RandomGeneral {
            n,
            dim,
            k,
            epsilon,
            constant,
        } => {
            let params = RandomModelParams::with_constant(*n, *dim, *k, *epsilon, *constant)?;
            (
                "random-general",
                vec![
                    q(
                        "subset_probability",
                        "min(1, C*eps/N^(d-k))",
                        single_subset_probability(&params)?,
                    ),
                    q("subset_count", "C(N,k)", subset_count(*n, u64::from(*k))?),
                    q(
                        "expected_degenerate_subsets",
                        "C*eps*N^(2k-d)/k!",
                        expected_degenerate_subsets(&params)?,
                    ),
                ],
            )
        }
        ExpectModel::StructuredCoplanar {
            plane_area,
            delta,
            cyl_radius,
            cyl_height,
            subsets,
        } => {
            let params = StructuredModelParams {
                plane_area: *plane_area,
                shell_thickness: *delta,
                cyl_radius: *cyl_radius,
                cyl_height: *cyl_height,
                // Unused by the planar model.
                sphere_radius: 1.0,
                dim: 3,
            };
            let p = structured_coplanar_probability(&params)?;
            let mut out = vec![q("point_probability", "delta*A_plane/(pi*R^2*h)", p)];
            aggregate(&mut out, p, *subsets)?;
            ("structured-coplanar", out)
        }
        ExpectModel::StructuredSphere {
            sphere_radius,
            delta,
            cyl_radius,
            cyl_height,
            dim,
            subsets,
        } => {
            let params = StructuredModelParams {
                plane_area: 0.0,
                shell_thickness: *delta,
                cyl_radius: *cyl_radius,
                cyl_height: *cyl_height,
                sphere_radius: *sphere_radius,
                dim: *dim,
            };
            let p = near_spherical_probability(&params)?;
            let mut out = vec![q("point_probability", "delta*d*r^(d-1)/(pi*R^2*h)", p)];
            aggregate(&mut out, p, *subsets)?;
            ("structured-sphere", out)
        }
        ExpectModel::Composite {
            factors,
            multiplicity,
        } => {
            let terms: Vec<(f64, f64)> = factors.0.iter().map(|&p| (p, *multiplicity)).collect();
            let sum: f64 = terms.iter().map(|(p, m)| p * m).sum();
            (
                "composite",
                vec![
                    q(
                        "composite_probability",
                        "1-prod(1-p_i)^m",
                        overall_probability(&terms)?,
                    ),
                    q(
                        "composite_exp_approx",
                        "1-exp(-m*sum(p_i))",
                        overall_probability_exp_approx(sum)?,
                    ),
                ],
            )
        }
    };
    Ok(Payload::Expectation(ExpectationReport {
        model,
        quantities,
    }))
}

pub fn table(args: &TableArgs) -> Result<Payload> {
    let amp = AmplificationFactors::new(args.amp_collinear, args.amp_coplanar)?;
    Ok(Payload::Table(build_expectation_table(
        &args.n.0,
        args.eps_collinear,
        args.eps_coplanar,
        &amp,
    )?))
}

pub fn mc(args: &McArgs, seed: u64) -> Result<Payload> {
    let grid = grid_from(&args.quantize, "--quantize")?;
    let noise = NoiseModel::new(args.noise)?;
    let amp = AmplificationFactors::new(args.amp_collinear, args.amp_coplanar)?;
    let kinds: &[SubsetKind] = match args.kind {
        McKind::Collinear => &[SubsetKind::Collinear],
        McKind::Coplanar => &[SubsetKind::Coplanar],
        McKind::Both => &[SubsetKind::Collinear, SubsetKind::Coplanar],
    };
    let rng = SeededRng::new(seed);
    let n = args.n as u64;
    let experiments = kinds
        .iter()
        .map(|&kind| {
            let config = AmplificationConfig {
                n_points: args.n,
                epsilon: args.epsilon,
                grid,
                noise,
                repetitions: args.reps,
                kind,
                cap: args.cap.unwrap_or(kind.default_cap()),
            };
            // Both kinds see the same clouds.
            let result = amplification_experiment(&config, &rng)?;
            let (analytic_random, postulated_factor) = match kind {
                SubsetKind::Collinear => (expected_collinear(n, args.epsilon)?, amp.collinear),
                SubsetKind::Coplanar => (expected_coplanar(n, args.epsilon)?, amp.coplanar),
            };
            Ok(McExperiment {
                kind,
                epsilon: args.epsilon,
                grid: grid.steps(),
                sigma: noise.sigma(),
                analytic_random,
                postulated_factor,
                analytic_quantized: analytic_random * postulated_factor,
                result,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Payload::Amplification(McReport { experiments }))
}
