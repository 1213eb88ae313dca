use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Comma-separated floats, e.g. `0.1,0.1,0.05`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct FloatList(pub Vec<f64>);

impl std::str::FromStr for FloatList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|f| {
                let f = f.trim();
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| format!("{f:?} is not a finite number"))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(FloatList)
    }
}

/// Comma-separated non-negative integers.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct CountList(pub Vec<u64>);

impl std::str::FromStr for CountList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|f| f.trim().parse::<u64>().map_err(|e| format!("{f:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(CountList)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Parser)]
#[command(
    name = "degen",
    version,
    about = "Degeneracy analysis for 3-D point clouds"
)]
pub struct Cli {
    /// Master random seed; echoed in every report.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads. Results are identical for any value.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic point cloud as an XYZ file.
    Gen(GenArgs),
    /// Count degenerate subsets or test near-sphericity of an XYZ file.
    Detect(DetectArgs),
    /// Evaluate a closed-form expectation or probability.
    Expect(ExpectArgs),
    /// Expected degenerate subset counts for a list of cloud sizes.
    Table(TableArgs),
    /// Paired raw vs quantized Monte-Carlo amplification experiment.
    Mc(McArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    #[command(subcommand)]
    pub sampler: Sampler,

    /// Snap coordinates to a grid: one step or `dx,dy,dz`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub quantize: Option<FloatList>,

    /// Gaussian noise σ. With `--quantize` it is applied after snapping.
    #[arg(
        long,
        allow_negative_numbers = true,
        global = true,
        default_value_t = 0.0
    )]
    pub noise: f64,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "sampler", rename_all = "lowercase")]
pub enum Sampler {
    /// Uniform in the unit hypercube.
    Uniform {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        dim: usize,
    },
    /// Uniform on a rectangular patch of the plane `n·x = offset`.
    Plane {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true, default_value = "0,0,1")]
        normal: FloatList,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        offset: f64,
        /// `u_min,u_max,v_min,v_max` in plane coordinates.
        #[arg(long, allow_hyphen_values = true, default_value = "-1,1,-1,1")]
        extent: FloatList,
    },
    /// Uniform on a sphere surface.
    Sphere {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true, default_value = "0,0,0")]
        center: FloatList,
        #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
        radius: f64,
    },
    /// Uniform on the segment `base + t·direction`, `t` in `[t_min, t_max]`.
    Line {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true, default_value = "0,0,0")]
        base: FloatList,
        #[arg(long, allow_hyphen_values = true, default_value = "1,0,0")]
        direction: FloatList,
        #[arg(long, allow_hyphen_values = true, default_value = "0,1")]
        t_range: FloatList,
    },
    /// Background points in a sensing cylinder plus structured surfaces.
    Scene {
        #[arg(long, allow_negative_numbers = true, default_value_t = 10.0)]
        cyl_radius: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 5.0)]
        cyl_height: f64,
        /// Area of each plane patch.
        #[arg(long, allow_negative_numbers = true, default_value_t = 10.0)]
        plane_area: f64,
        /// Plane `a,b,c,d` meaning `(a,b,c)·x = d`. Repeatable.
        #[arg(long = "plane", allow_hyphen_values = true)]
        planes: Vec<FloatList>,
        /// Sphere `cx,cy,cz,r`.
        #[arg(long, allow_hyphen_values = true)]
        sphere: Option<FloatList>,
        /// Line `bx,by,bz,vx,vy,vz`. Repeatable.
        #[arg(long = "line", allow_hyphen_values = true)]
        lines: Vec<FloatList>,
        #[arg(long, default_value_t = 1000)]
        n_background: usize,
        /// Points on each surface.
        #[arg(long, default_value_t = 200)]
        n_per_surface: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectMode {
    Collinear,
    Coplanar,
    Sphere,
}

#[derive(Debug, Args, Serialize)]
pub struct DetectArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub mode: DetectMode,
    /// Residual tolerance for collinear/coplanar counting.
    #[arg(long, allow_negative_numbers = true, default_value_t = 1e-6)]
    pub epsilon: f64,
    /// Residual tolerance for the sphere test.
    #[arg(long, allow_negative_numbers = true, default_value_t = 1e-3)]
    pub delta: f64,
    /// Estimate by random subsets instead of enumerating.
    #[arg(long)]
    pub sampled: bool,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    /// Largest N for exhaustive enumeration.
    #[arg(long)]
    pub cap: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct ExpectArgs {
    #[command(subcommand)]
    pub model: ExpectModel,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ExpectModel {
    /// εN²/6 nearly collinear triples among N random points.
    RandomCollinear {
        #[arg(long)]
        n: u64,
        #[arg(long, allow_negative_numbers = true)]
        epsilon: f64,
    },
    /// εN/24 nearly coplanar quadruples among N random points.
    RandomCoplanar {
        #[arg(long)]
        n: u64,
        #[arg(long, allow_negative_numbers = true)]
        epsilon: f64,
    },
    /// General random model: `C·ε·N^(2k−d)/k!`.
    RandomGeneral {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 3)]
        dim: u32,
        #[arg(long)]
        k: u32,
        #[arg(long, allow_negative_numbers = true)]
        epsilon: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
        constant: f64,
    },
    /// `δ·A_plane / V` for a point falling in a planar slab.
    StructuredCoplanar {
        #[arg(long, allow_negative_numbers = true)]
        plane_area: f64,
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 10.0)]
        cyl_radius: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 5.0)]
        cyl_height: f64,
        /// Also aggregate over this many independent subsets.
        #[arg(long, allow_negative_numbers = true)]
        subsets: Option<f64>,
    },
    /// `δ·S_sphere / V` for a point falling in a spherical shell.
    StructuredSphere {
        #[arg(long, allow_negative_numbers = true)]
        sphere_radius: f64,
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 10.0)]
        cyl_radius: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 5.0)]
        cyl_height: f64,
        #[arg(long, default_value_t = 3)]
        dim: u32,
        #[arg(long, allow_negative_numbers = true)]
        subsets: Option<f64>,
    },
    /// `1 − ∏(1 − p_i)^m` over independent sources.
    Composite {
        #[arg(long)]
        factors: FloatList,
        /// Repeat every factor this many times.
        #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
        multiplicity: f64,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct TableArgs {
    #[arg(long, default_value = "1000,5000,10000,20000")]
    pub n: CountList,
    #[arg(long, allow_negative_numbers = true, default_value_t = 1e-6)]
    pub eps_collinear: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 1e-3)]
    pub eps_coplanar: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 10.0)]
    pub amp_collinear: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 3.0)]
    pub amp_coplanar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum McKind {
    Collinear,
    Coplanar,
    Both,
}

#[derive(Debug, Args, Serialize)]
pub struct McArgs {
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, allow_negative_numbers = true, default_value_t = 1e-6)]
    pub epsilon: f64,
    /// Grid step: one value or `dx,dy,dz`.
    #[arg(long, default_value = "0.1")]
    pub quantize: FloatList,
    /// Noise σ added after quantization.
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 100)]
    pub reps: u32,
    #[arg(long, value_enum, default_value_t = McKind::Collinear)]
    pub kind: McKind,
    #[arg(long)]
    pub cap: Option<usize>,
    /// Postulated collinear amplification, for comparison only.
    #[arg(long, allow_negative_numbers = true, default_value_t = 10.0)]
    pub amp_collinear: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 3.0)]
    pub amp_coplanar: f64,
}
