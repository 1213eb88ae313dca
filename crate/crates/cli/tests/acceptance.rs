//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` are run exactly as stated and are
//! expected to fail; the process exits non-zero if any other criterion fails
//! or if a known failure starts passing.

use std::process::Command;
use std::time::{Duration, Instant};

use clap::Parser;
use degeneracy::analytics::{
    expected_collinear, expected_coplanar, expected_degenerate_subsets, overall_probability,
    overall_probability_exp_approx, structured_coplanar_probability, RandomModelParams,
    StructuredModelParams,
};
use degeneracy::geometry::{collinearity_residual, coplanarity_residual};
use degeneracy::montecarlo::{
    amplification_experiment, count_degenerate_sampled, count_exhaustive, AmplificationConfig,
    SubsetKind,
};
use degeneracy::samplers::{sample_uniform_hypercube, NoiseModel, QuantizationGrid};
use degeneracy::{Point, SeededRng};
use degeneracy_cli::{Cli, Output, Payload};
use rand::Rng;
use twofloat::TwoFloat;

const KNOWN_UNATTAINABLE: &[u32] = &[3];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(limit: Duration, elapsed: Duration) -> bool {
    elapsed < limit
}

// ---------------------------------------------------------------------------
// 1. Default expectation table

/// Published cells as printed, row by row: N, then the four columns.
const PRINTED: [[&str; 5]; 4] = [
    ["1000", "0.1667", "1.667", "0.0417", "0.125"],
    ["5000", "4.1667", "41.667", "0.2083", "0.625"],
    ["10000", "16.6667", "166.667", "0.4167", "1.250"],
    ["20000", "66.6667", "666.667", "0.8333", "2.500"],
];

fn sig_figs(printed: &str) -> usize {
    printed
        .chars()
        .filter(char::is_ascii_digit)
        .skip_while(|&c| c == '0')
        .count()
}

fn round_sig(x: f64, s: usize) -> String {
    format!("{:.*e}", s - 1, x)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let cli = Cli::try_parse_from(["degen", "table"]).unwrap();
    let Ok(Output::Report(report)) = degeneracy_cli::execute(&cli) else {
        return outcome(false, "table command failed");
    };
    let elapsed = start.elapsed();
    let Payload::Table(table) = &report.payload else {
        return outcome(false, "table command returned a non-table payload");
    };
    let mut matched = 0;
    let mut misses = Vec::new();
    for (row, printed) in table.rows.iter().zip(PRINTED) {
        let got = [
            row.collinear_random,
            row.collinear_quantized,
            row.coplanar_random,
            row.coplanar_quantized,
        ];
        if row.n.to_string() != printed[0] {
            misses.push(format!("N {} vs {}", row.n, printed[0]));
            continue;
        }
        for (g, p) in got.iter().zip(&printed[1..]) {
            // Cells printed with fewer than four figures are compared at their
            // printed precision.
            let s = sig_figs(p).min(4);
            let want: f64 = p.parse().unwrap();
            if round_sig(*g, s) == round_sig(want, s) {
                matched += 1;
            } else {
                misses.push(format!("N={} got {g} want {p}", row.n));
            }
        }
    }
    let pass = matched == 16 && table.rows.len() == 4 && within(Duration::from_secs(1), elapsed);
    outcome(
        pass,
        format!(
            "{matched}/16 cells match in {elapsed:.2?} {}",
            misses.join("; ")
        ),
    )
}

// ---------------------------------------------------------------------------
// 2. Structured coplanar worked example

fn criterion_2() -> Outcome {
    let p = structured_coplanar_probability(&StructuredModelParams {
        plane_area: 20.0,
        shell_thickness: 0.1,
        cyl_radius: 10.0,
        cyl_height: 5.0,
        sphere_radius: 1.0,
        dim: 3,
    })
    .unwrap();
    outcome(
        (p - 0.00127).abs() <= 5e-6,
        format!("P = {p} (target 0.00127 ± 5e-6)"),
    )
}

// ---------------------------------------------------------------------------
// 3. Special cases bit-identical to the general expectation

fn criterion_3() -> Outcome {
    let mut identical = 0;
    let mut total = 0;
    let mut example = String::new();
    for n in [10u64, 1_000, 1_000_000] {
        for eps in [0.0, 1e-6, 1e-3] {
            let general = |k| {
                expected_degenerate_subsets(&RandomModelParams::new(n, 3, k, eps).unwrap()).unwrap()
            };
            for (k, special) in [
                (3, expected_collinear(n, eps).unwrap()),
                (4, expected_coplanar(n, eps).unwrap()),
            ] {
                total += 1;
                let g = general(k);
                if g.to_bits() == special.to_bits() {
                    identical += 1;
                } else if example.is_empty() {
                    example =
                        format!("e.g. N={n} eps={eps} k={k}: closed form {special}, general {g}");
                }
            }
        }
    }
    outcome(
        identical == total,
        format!(
            "{identical}/{total} bit-identical; the general exponent 2k-d gives N^3/6 and N^5/24 \
             where the closed forms use N^2/6 and N/24; {example}"
        ),
    )
}

// ---------------------------------------------------------------------------
// 4. Growth laws

fn criterion_4() -> Outcome {
    let mut bad = Vec::new();
    for n in [100u64, 1_000] {
        for eps in [1e-6, 1e-3, 1.0] {
            let c = expected_collinear(2 * n, eps).unwrap() / expected_collinear(n, eps).unwrap();
            let q = expected_coplanar(2 * n, eps).unwrap() / expected_coplanar(n, eps).unwrap();
            if c != 4.0 || q != 2.0 {
                bad.push(format!("N={n} eps={eps}: {c}, {q}"));
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!("ratios exactly 4 and 2 {}", bad.join("; ")),
    )
}

// ---------------------------------------------------------------------------
// 5. Sampled interval covers the exhaustive count

fn coverage(n: usize, cloud_seed: u64, kind: SubsetKind, eps: f64) -> (usize, f64) {
    let cloud = sample_uniform_hypercube(n, 3, &SeededRng::new(cloud_seed)).unwrap();
    let exact = count_exhaustive(&cloud, kind, eps, kind.default_cap())
        .unwrap()
        .degenerate_count;
    let hits = (0..100u64)
        .filter(|&s| {
            let r = count_degenerate_sampled(&cloud, kind.size(), eps, 100_000, &SeededRng::new(s))
                .unwrap();
            r.ci_low <= exact && exact <= r.ci_high
        })
        .count();
    (hits, exact)
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let (a, exact_a) = coverage(60, 42, SubsetKind::Collinear, 1e-3);
    let (b, exact_b) = coverage(30, 7, SubsetKind::Coplanar, 1e-2);
    let elapsed = start.elapsed();
    outcome(
        a >= 93 && b >= 93 && within(Duration::from_secs(120), elapsed),
        format!(
            "collinear {a}/100 (exact {exact_a}), coplanar {b}/100 (exact {exact_b}) in {elapsed:.2?}"
        ),
    )
}

// ---------------------------------------------------------------------------
// 6. Quantization raises the collinear count

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let config = AmplificationConfig {
        n_points: 200,
        epsilon: 1e-6,
        grid: QuantizationGrid::uniform(0.1).unwrap(),
        noise: NoiseModel::none(),
        repetitions: 100,
        kind: SubsetKind::Collinear,
        cap: SubsetKind::Collinear.default_cap(),
    };
    let report = amplification_experiment(&config, &SeededRng::new(2025)).unwrap();
    let elapsed = start.elapsed();
    outcome(
        report.processed_ge_raw >= 95 && within(Duration::from_secs(300), elapsed),
        format!(
            "quantized >= raw in {}/100 (mean raw {}, mean quantized {}) in {elapsed:.2?}",
            report.processed_ge_raw, report.mean_raw, report.mean_processed
        ),
    )
}

// ---------------------------------------------------------------------------
// 7. Geometry properties

const CASES: usize = 1000;

fn random_point(rng: &mut impl Rng) -> [f64; 3] {
    [0; 3].map(|_| rng.random_range(-2.0..2.0))
}

fn pt(c: [f64; 3]) -> Point {
    Point::xyz(c[0], c[1], c[2]).unwrap()
}

fn tri(p: &[[f64; 3]]) -> f64 {
    collinearity_residual(&pt(p[0]), &pt(p[1]), &pt(p[2])).unwrap()
}

fn quad(p: &[[f64; 3]]) -> f64 {
    coplanarity_residual(&pt(p[0]), &pt(p[1]), &pt(p[2]), &pt(p[3])).unwrap()
}

fn diameter(pts: &[[f64; 3]]) -> f64 {
    let mut d: f64 = 0.0;
    for a in pts {
        for b in pts {
            d = d.max((0..3).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>().sqrt());
        }
    }
    d
}

/// All orderings of `0..n` by Heap's algorithm.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, a, out);
            let j = if k.is_multiple_of(2) { i } else { 0 };
            a.swap(j, k - 1);
        }
    }
    let mut out = Vec::new();
    heap(n, &mut (0..n).collect(), &mut out);
    out
}

/// Rotation matrix from a random unit quaternion.
fn random_rotation(rng: &mut impl Rng) -> [[f64; 3]; 3] {
    loop {
        let q: [f64; 4] = [0; 4].map(|_| rng.random_range(-1.0..1.0));
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(0.1..=1.0).contains(&n) {
            continue;
        }
        let [w, x, y, z] = q.map(|c| c / n);
        return [
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
        ];
    }
}

fn criterion_7() -> Outcome {
    let mut rng = SeededRng::new(7).stream("acceptance/geometry", 0);
    let perms3 = permutations(3);
    let perms4 = permutations(4);
    // Failures per property: permutation (3), permutation (4), motion, scaling.
    let mut failures = [0usize; 4];
    for _ in 0..CASES {
        let p: [[f64; 3]; 4] = [0; 4].map(|_| random_point(&mut rng));
        let l = diameter(&p);

        let t0 = tri(&p[..3]);
        let q0 = quad(&p);
        if perms3.iter().any(|s| {
            (tri(&s.iter().map(|&i| p[i]).collect::<Vec<_>>()) - t0).abs() > 1e-12 * t0.max(l * l)
        }) {
            failures[0] += 1;
        }
        if perms4.iter().any(|s| {
            (quad(&s.iter().map(|&i| p[i]).collect::<Vec<_>>()) - q0).abs()
                > 1e-12 * q0.max(l.powi(3))
        }) {
            failures[1] += 1;
        }

        let r = random_rotation(&mut rng);
        let t = random_point(&mut rng);
        let moved = p.map(|x| {
            let mut y = t;
            for i in 0..3 {
                for j in 0..3 {
                    y[i] += r[i][j] * x[j];
                }
            }
            y
        });
        if (tri(&moved[..3]) - t0).abs() > 1e-9 * t0.max(l * l)
            || (quad(&moved) - q0).abs() > 1e-9 * q0.max(l.powi(3))
        {
            failures[2] += 1;
        }

        let s: f64 = rng.random_range(0.01..100.0);
        let scaled = p.map(|x| x.map(|c| c * s));
        if (tri(&scaled[..3]) - s * s * t0).abs() > 1e-9 * s * s * t0.max(l * l)
            || (quad(&scaled) - s.powi(3) * q0).abs() > 1e-9 * s.powi(3) * q0.max(l.powi(3))
        {
            failures[3] += 1;
        }
    }
    outcome(
        failures.iter().all(|&f| f == 0),
        format!(
            "{CASES} cases each; failures: permutation(3) {}, permutation(4) {}, rigid motion {}, scaling {}",
            failures[0], failures[1], failures[2], failures[3]
        ),
    )
}

// ---------------------------------------------------------------------------
// 8. Probability aggregation

/// `1 − ∏ (1 − p)^m` in double-double arithmetic.
fn product_oracle(terms: &[(f64, u32)]) -> f64 {
    let one = TwoFloat::from(1.0);
    let survival = terms.iter().fold(one, |acc, &(p, m)| {
        acc * (one - TwoFloat::from(p)).powi(m as i32)
    });
    f64::from(one - survival)
}

fn criterion_8() -> Outcome {
    let mut rng = SeededRng::new(8).stream("acceptance/aggregation", 0);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let len = rng.random_range(1..=6);
        let terms: Vec<(f64, u32)> = (0..len)
            .map(|_| {
                let p = 10f64.powf(rng.random_range(-9.0..-0.3));
                (p, rng.random_range(1..=2000))
            })
            .collect();
        let stable = overall_probability(
            &terms
                .iter()
                .map(|&(p, m)| (p, f64::from(m)))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let oracle = product_oracle(&terms);
        worst = worst.max((stable - oracle).abs() / oracle);
    }

    let sums: Vec<f64> = (0..=400).map(|i| f64::from(i) * 0.1).collect();
    let values: Vec<f64> = sums
        .iter()
        .map(|&s| overall_probability_exp_approx(s).unwrap())
        .collect();
    let monotone = values.windows(2).all(|w| w[0] <= w[1]);
    let limit = *values.last().unwrap();
    outcome(
        worst <= 1e-10 && monotone && 1.0 - limit < 1e-15,
        format!(
            "worst relative error {worst:.3e} over 100 sets; exp approximation monotone = {monotone}, \
             value at 40 = {limit}"
        ),
    )
}

// ---------------------------------------------------------------------------
// 9. Thread-count independence of CLI output

fn degen(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_degen"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "degen {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

/// JSON reports carry a wall-clock timestamp; everything else must match.
fn without_timestamp(bytes: Vec<u8>) -> Vec<u8> {
    String::from_utf8(bytes)
        .unwrap()
        .lines()
        .filter(|l| !l.trim_start().starts_with("\"timestamp\""))
        .flat_map(|l| l.bytes().chain(std::iter::once(b'\n')))
        .collect()
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("cloud.xyz");
    let cloud = cloud.to_str().unwrap();
    degen(&[
        "--seed", "42", "--out", cloud, "gen", "uniform", "--n", "60",
    ]);

    let invocations: Vec<Vec<&str>> = vec![
        vec!["--seed", "5", "gen", "uniform", "--n", "2000"],
        vec![
            "--seed",
            "5",
            "gen",
            "--quantize",
            "0.1",
            "--noise",
            "0.01",
            "scene",
            "--plane",
            "0,0,1,1",
            "--sphere",
            "2,1,2.5,1",
            "--line",
            "0,0,1,1,1,0",
        ],
        vec![
            "--seed", "9", "gen", "sphere", "--n", "500", "--noise", "0.05",
        ],
        vec![
            "--seed",
            "11",
            "detect",
            "--input",
            cloud,
            "--mode",
            "coplanar",
            "--epsilon",
            "1e-2",
        ],
        vec![
            "--seed",
            "11",
            "detect",
            "--input",
            cloud,
            "--mode",
            "collinear",
            "--sampled",
            "--samples",
            "200000",
            "--epsilon",
            "1e-2",
        ],
        vec![
            "--seed",
            "3",
            "mc",
            "--n",
            "80",
            "--reps",
            "12",
            "--epsilon",
            "1e-2",
            "--kind",
            "both",
        ],
        vec!["table"],
        vec![
            "expect",
            "composite",
            "--factors",
            "0.00127",
            "--multiplicity",
            "97",
        ],
    ];
    let mut mismatched = Vec::new();
    for args in &invocations {
        let run = |threads: &str| {
            let mut full = vec!["--threads", threads];
            full.extend(args);
            without_timestamp(degen(&full))
        };
        let one = run("1");
        if one.is_empty() || run("2") != one || run("8") != one {
            mismatched.push(args.join(" "));
        }
    }
    outcome(
        mismatched.is_empty(),
        format!(
            "{} invocations x threads 1/2/8 {}",
            invocations.len(),
            mismatched.join("; ")
        ),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "default expectation table", criterion_1),
        (2, "structured coplanar probability", criterion_2),
        (3, "closed forms equal general expectation", criterion_3),
        (4, "growth laws", criterion_4),
        (5, "sampled interval covers exhaustive count", criterion_5),
        (6, "quantization amplification direction", criterion_6),
        (7, "geometry properties", criterion_7),
        (8, "probability aggregation", criterion_8),
        (9, "thread-count reproducibility", criterion_9),
    ];
    let mut unexpected = 0;
    for (id, name, run) in criteria {
        let start = Instant::now();
        let result = run();
        let known = KNOWN_UNATTAINABLE.contains(&id);
        let status = match (result.pass, known) {
            (true, false) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
            (true, true) => "PASS (unexpected)",
        };
        if result.pass == known {
            unexpected += 1;
        }
        println!(
            "criterion {id} {status}: {name} [{:.2?}] {}",
            start.elapsed(),
            result.detail.trim_end()
        );
    }
    if unexpected > 0 {
        println!("{unexpected} criterion result(s) differ from expectation");
        std::process::exit(1);
    }
}
