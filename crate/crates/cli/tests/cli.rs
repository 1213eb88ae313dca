use std::path::Path;
use std::process::{Command, Output};

use clap::Parser;
use degeneracy::geometry::{point_plane_distance, PlaneManifold};
use degeneracy::Point;
use degeneracy_cli::commands::{gen, load_cloud};
use degeneracy_cli::Cli;
use serde_json::Value;

fn degen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_degen"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = degen(args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn quantity(report: &Value, name: &str) -> f64 {
    report["payload"]["quantities"]
        .as_array()
        .unwrap()
        .iter()
        .find(|q| q["name"] == name)
        .unwrap_or_else(|| panic!("no quantity {name}"))["value"]
        .as_f64()
        .unwrap()
}

#[test]
fn gen_uniform_writes_one_point_per_line() {
    let out = degen(&["gen", "uniform", "--n", "100", "--dim", "3", "--seed", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 100);
    assert!(text.lines().all(|l| l.split(' ').count() == 3));
}

#[test]
fn gen_output_round_trips_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.xyz");
    let p = path.to_str().unwrap();
    let args = [
        "degen", "--seed", "17", "--out", p, "gen", "--noise", "0.3", "sphere", "--n", "500",
    ];
    assert!(degen(&args[1..]).status.success());

    let cli = Cli::try_parse_from(args).unwrap();
    let degeneracy_cli::args::Command::Gen(gen_args) = &cli.command else {
        unreachable!()
    };
    let expected = gen(gen_args, 17).unwrap();
    let read = load_cloud(&path).unwrap();
    let bits =
        |c: &degeneracy::PointCloud| c.iter().flatten().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&read), bits(&expected));
}

#[test]
fn quantized_coordinates_are_grid_multiples() {
    let out = degen(&["gen", "--quantize", "0.1,0.1,0.1", "uniform", "--n", "1000"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for v in text.split_whitespace() {
        let x: f64 = v.parse().unwrap();
        let m = x / 0.1;
        assert!((m - m.round()).abs() < 1e-9, "{x}");
    }
}

#[test]
fn noiseless_plane_points_lie_on_the_plane() {
    let out = degen(&[
        "--seed",
        "4",
        "gen",
        "plane",
        "--n",
        "500",
        "--normal",
        "1,2,2",
        "--offset",
        "-1",
        "--extent",
        "-3,2,-1,4",
        "--noise",
        "0",
    ]);
    assert!(out.status.success());
    let plane = PlaneManifold::new([1.0, 2.0, 2.0], -1.0).unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    for line in text.lines() {
        let c: Vec<f64> = line.split(' ').map(|v| v.parse().unwrap()).collect();
        let d = point_plane_distance(&Point::new(c).unwrap(), &plane).unwrap();
        assert!(d < 1e-12, "{d}");
    }
}

#[test]
fn detect_counts_exact_collinear_points() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "line.xyz",
        "# five on a line\n0 0 0\n1 2 3\n2 4 6\n-1 -2 -3\n0.5 1 1.5\n",
    );
    let r = json(&[
        "detect",
        "--input",
        &f,
        "--mode",
        "collinear",
        "--epsilon",
        "1e-9",
    ]);
    assert_eq!(r["payload"]["empirical"]["degenerate_count"], 10.0);
    assert_eq!(r["payload"]["empirical"]["total_subsets"], 10.0);
}

#[test]
fn detect_finds_nothing_in_general_position() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "general.xyz",
        "0 0 0\n1 0 0\n0 1 0\n0 0 1\n1 1 1.5\n2 0.3 0.7\n",
    );
    for mode in ["collinear", "coplanar"] {
        let r = json(&["detect", "--input", &f, "--mode", mode, "--epsilon", "1e-6"]);
        assert_eq!(r["payload"]["empirical"]["degenerate_count"], 0.0, "{mode}");
    }
}

#[test]
fn detect_matches_library_regression_counts() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("seed42.xyz");
    let f = f.to_str().unwrap();
    assert!(
        degen(&["--seed", "42", "--out", f, "gen", "uniform", "--n", "60"])
            .status
            .success()
    );
    let r = json(&[
        "detect",
        "--input",
        f,
        "--mode",
        "collinear",
        "--epsilon",
        "1e-2",
    ]);
    assert_eq!(r["payload"]["empirical"]["degenerate_count"], 47.0);

    let r = json(&[
        "--seed",
        "3",
        "detect",
        "--input",
        f,
        "--mode",
        "collinear",
        "--epsilon",
        "1e-2",
        "--sampled",
        "--samples",
        "50000",
    ]);
    let e = &r["payload"]["empirical"];
    assert_eq!(e["mode"], "sampled");
    assert!(e["ci_low"].as_f64().unwrap() <= 47.0 && 47.0 <= e["ci_high"].as_f64().unwrap());
    assert_eq!(r["payload"]["params"]["seed"], 3);
}

#[test]
fn detect_sphere_mode_fits_and_tests() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("s.xyz");
    let f = f.to_str().unwrap();
    assert!(degen(&[
        "--out", f, "gen", "sphere", "--n", "200", "--center", "1,-2,0.5", "--radius", "2"
    ])
    .status
    .success());
    let r = json(&[
        "detect", "--input", f, "--mode", "sphere", "--delta", "1e-9",
    ]);
    let p = &r["payload"];
    assert_eq!(p["kind"], "sphere");
    assert_eq!(p["nearly_spherical"], true);
    assert!((p["radius"].as_f64().unwrap() - 2.0).abs() < 1e-9);

    let f2 = write(dir.path(), "flat.xyz", "0 0 0\n1 0 0\n0 1 0\n1 1 0\n");
    let out = degen(&["detect", "--input", &f2, "--mode", "sphere"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn expect_models() {
    let r = json(&[
        "expect",
        "structured-coplanar",
        "--cyl-radius",
        "10",
        "--cyl-height",
        "5",
        "--plane-area",
        "20",
        "--delta",
        "0.1",
    ]);
    assert!((quantity(&r, "point_probability") - 0.00127).abs() <= 5e-6);

    let r = json(&[
        "expect",
        "random-collinear",
        "--n",
        "10000",
        "--epsilon",
        "1e-6",
    ]);
    let v = quantity(&r, "expected_collinear_triples");
    assert_eq!(format!("{v:.4}"), "16.6667");

    let r = json(&[
        "expect",
        "random-coplanar",
        "--n",
        "10000",
        "--epsilon",
        "0",
    ]);
    assert_eq!(quantity(&r, "expected_coplanar_quadruples"), 0.0);

    let r = json(&["expect", "composite", "--factors", "0.1,0.2,0.3"]);
    assert!((quantity(&r, "composite_probability") - 0.496).abs() < 1e-15);

    let r = json(&[
        "expect",
        "random-general",
        "--n",
        "100",
        "--dim",
        "3",
        "--k",
        "4",
        "--epsilon",
        "1",
    ]);
    assert_eq!(quantity(&r, "subset_count"), 3_921_225.0);

    let r = json(&[
        "expect",
        "structured-coplanar",
        "--plane-area",
        "20",
        "--delta",
        "0.1",
        "--subsets",
        "97",
    ]);
    let exact = quantity(&r, "overall_probability");
    let approx = quantity(&r, "overall_probability_exp_approx");
    assert!((exact - 0.1163).abs() < 1e-4 && approx < exact);
}

#[test]
fn table_variants() {
    let r = json(&["table"]);
    let rows = r["payload"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(
        format!("{:.3}", rows[3]["collinear_quantized"].as_f64().unwrap()),
        "666.667"
    );

    let r = json(&["table", "--amp-collinear", "1", "--amp-coplanar", "1"]);
    for row in r["payload"]["rows"].as_array().unwrap() {
        assert_eq!(row["collinear_quantized"], row["collinear_random"]);
        assert_eq!(row["coplanar_quantized"], row["coplanar_random"]);
    }

    let r = json(&["table", "--n", "24", "--eps-coplanar", "1"]);
    assert_eq!(r["payload"]["rows"][0]["coplanar_random"], 1.0);

    let out = degen(&["table", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.starts_with("n,collinear_random"));
}

#[test]
fn envelope_echoes_parameters_and_seed() {
    let r = json(&[
        "--seed",
        "99",
        "mc",
        "--n",
        "40",
        "--reps",
        "3",
        "--epsilon",
        "1e-2",
    ]);
    assert_eq!(r["seed"], 99);
    assert_eq!(r["command"], "mc");
    assert_eq!(r["params"]["reps"], 3);
    assert!(r["version"].is_string() && r["timestamp"].is_u64());
    let ex = &r["payload"]["experiments"][0];
    assert_eq!(ex["kind"], "collinear");
    assert_eq!(ex["result"]["pairs"].as_array().unwrap().len(), 3);
    assert_eq!(ex["postulated_factor"], 10.0);
}

#[test]
fn text_format_names_the_formula() {
    let out = degen(&[
        "--format",
        "text",
        "expect",
        "random-coplanar",
        "--n",
        "1000",
        "--epsilon",
        "1e-3",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("eps*N/24"), "{text}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();

    // Usage and validation.
    assert_eq!(degen(&["table", "--nope"]).status.code(), Some(2));
    let out = degen(&["gen", "sphere", "--n", "5", "--radius", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("radius"));
    assert_eq!(
        degen(&["gen", "plane", "--n", "5", "--normal", "1,2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(degen(&["--threads", "0", "table"]).status.code(), Some(2));

    // I/O.
    assert_eq!(
        degen(&[
            "detect",
            "--input",
            "/nonexistent/x.xyz",
            "--mode",
            "collinear"
        ])
        .status
        .code(),
        Some(3)
    );
    let blocked = dir.path().join("missing-dir").join("out.json");
    assert_eq!(
        degen(&["--out", blocked.to_str().unwrap(), "table"])
            .status
            .code(),
        Some(3)
    );

    // Cap.
    let big = dir.path().join("big.xyz");
    let big = big.to_str().unwrap();
    assert!(degen(&["--out", big, "gen", "uniform", "--n", "130"])
        .status
        .success());
    assert_eq!(
        degen(&["detect", "--input", big, "--mode", "coplanar"])
            .status
            .code(),
        Some(4)
    );
    assert!(degen(&[
        "detect",
        "--input",
        big,
        "--mode",
        "coplanar",
        "--sampled",
        "--samples",
        "1000"
    ])
    .status
    .success());
}

#[test]
fn malformed_input_reports_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bad.xyz", "# header\n0 0 0\n1 1 1\n2 two 2\n");
    let out = degen(&["detect", "--input", &f, "--mode", "collinear"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.xyz:4:"), "{err}");
}
