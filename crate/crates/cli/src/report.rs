//! Report envelope and its JSON, CSV and text renderings.

use std::fmt::Write as _;

use degeneracy::analytics::ExpectationTable;
use degeneracy::montecarlo::{AmplificationReport, ComparisonReport, CountMode, SubsetKind};
use serde::Serialize;

use crate::args::Format;

#[derive(Debug, Clone, Serialize)]
pub struct ReportEnvelope {
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub params: serde_json::Value,
    /// Seconds since the Unix epoch. The only field that varies between runs.
    pub timestamp: u64,
    pub payload: Payload,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Table(ExpectationTable),
    Count(ComparisonReport),
    Sphere(SphereReport),
    Expectation(ExpectationReport),
    Amplification(McReport),
}

#[derive(Debug, Clone, Serialize)]
pub struct SphereReport {
    pub n_points: usize,
    pub center: Vec<f64>,
    pub radius: f64,
    pub max_residual: f64,
    pub delta: f64,
    pub nearly_spherical: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Quantity {
    pub name: &'static str,
    pub formula: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpectationReport {
    pub model: &'static str,
    pub quantities: Vec<Quantity>,
}

#[derive(Debug, Clone, Serialize)]
pub struct McExperiment {
    pub kind: SubsetKind,
    pub epsilon: f64,
    pub grid: [f64; 3],
    pub sigma: f64,
    /// Closed-form expectation for raw uniform points.
    pub analytic_random: f64,
    pub postulated_factor: f64,
    /// `analytic_random · postulated_factor`.
    pub analytic_quantized: f64,
    pub result: AmplificationReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct McReport {
    pub experiments: Vec<McExperiment>,
}

pub fn render(report: &ReportEnvelope, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report is serializable");
            s.push('\n');
            s
        }
        Format::Csv => render_csv(&report.payload),
        Format::Text => render_text(report),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn kind_name(kind: SubsetKind) -> &'static str {
    match kind {
        SubsetKind::Collinear => "collinear",
        SubsetKind::Coplanar => "coplanar",
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render_csv(payload: &Payload) -> String {
    let mut out = String::new();
    match payload {
        Payload::Table(t) => {
            out.push_str(
                "n,collinear_random,collinear_quantized,coplanar_random,coplanar_quantized\n",
            );
            for r in &t.rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.n,
                    r.collinear_random,
                    r.collinear_quantized,
                    r.coplanar_random,
                    r.coplanar_quantized
                );
            }
        }
        Payload::Count(c) => {
            let e = &c.empirical;
            out.push_str(
                "kind,mode,n,epsilon,degenerate_count,total_subsets,ci_low,ci_high,samples_used,analytic_expectation,ratio,discrepancy\n",
            );
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                kind_name(e.kind),
                match e.mode {
                    CountMode::Exhaustive => "exhaustive",
                    CountMode::Sampled => "sampled",
                },
                c.params.n,
                e.epsilon,
                e.degenerate_count,
                e.total_subsets,
                e.ci_low,
                e.ci_high,
                e.samples_used,
                c.analytic_expectation,
                opt(c.ratio),
                c.discrepancy
            );
        }
        Payload::Sphere(s) => {
            let centers: Vec<String> = (0..s.center.len()).map(|i| format!("center_{i}")).collect();
            let _ = writeln!(
                out,
                "n_points,{},radius,max_residual,delta,nearly_spherical",
                centers.join(",")
            );
            let coords: Vec<String> = s.center.iter().map(f64::to_string).collect();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                s.n_points,
                coords.join(","),
                s.radius,
                s.max_residual,
                s.delta,
                s.nearly_spherical
            );
        }
        Payload::Expectation(e) => {
            out.push_str("name,formula,value\n");
            for q in &e.quantities {
                let _ = writeln!(out, "{},{},{}", q.name, csv_field(q.formula), q.value);
            }
        }
        Payload::Amplification(m) => {
            out.push_str("kind,repetition,raw,processed\n");
            for ex in &m.experiments {
                for p in &ex.result.pairs {
                    let _ = writeln!(
                        out,
                        "{},{},{},{}",
                        kind_name(ex.kind),
                        p.repetition,
                        p.raw,
                        p.processed
                    );
                }
            }
        }
    }
    out
}

fn render_text(report: &ReportEnvelope) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "degen {} (seed {})", report.command, report.seed);
    match &report.payload {
        Payload::Table(t) => {
            let _ = writeln!(
                out,
                "eps_collinear = {}, eps_coplanar = {}, amplification = ({}, {})",
                t.eps_collinear,
                t.eps_coplanar,
                t.amplification.collinear,
                t.amplification.coplanar
            );
            let _ = writeln!(
                out,
                "{:>10}  {:>14}  {:>14}  {:>14}  {:>14}",
                "N", "collinear", "collinear (q)", "coplanar", "coplanar (q)"
            );
            for r in &t.rows {
                let _ = writeln!(
                    out,
                    "{:>10}  {:>14.4}  {:>14.4}  {:>14.4}  {:>14.4}",
                    r.n,
                    r.collinear_random,
                    r.collinear_quantized,
                    r.coplanar_random,
                    r.coplanar_quantized
                );
            }
        }
        Payload::Count(c) => {
            let e = &c.empirical;
            let _ = writeln!(
                out,
                "{} subsets with residual < {}: {} of {}",
                kind_name(e.kind),
                e.epsilon,
                e.degenerate_count,
                e.total_subsets
            );
            if e.mode == CountMode::Sampled {
                let _ = writeln!(
                    out,
                    "95% interval [{}, {}] from {} samples",
                    e.ci_low, e.ci_high, e.samples_used
                );
            }
            let _ = writeln!(out, "random-model expectation: {}", c.analytic_expectation);
            match c.ratio {
                Some(r) => {
                    let _ = writeln!(out, "empirical / expected: {r}");
                }
                None => out.push_str("empirical / expected: undefined\n"),
            }
        }
        Payload::Sphere(s) => {
            let _ = writeln!(out, "fitted center {:?}, radius {}", s.center, s.radius);
            let _ = writeln!(
                out,
                "max residual {} vs delta {}: {}",
                s.max_residual,
                s.delta,
                if s.nearly_spherical {
                    "nearly spherical"
                } else {
                    "not spherical"
                }
            );
        }
        Payload::Expectation(e) => {
            let _ = writeln!(out, "model {}", e.model);
            for q in &e.quantities {
                let _ = writeln!(out, "{} = {}    [{}]", q.name, q.value, q.formula);
            }
        }
        Payload::Amplification(m) => {
            for ex in &m.experiments {
                let r = &ex.result;
                let _ = writeln!(
                    out,
                    "{}: {} repetitions, mean raw {}, mean quantized {}, quantized >= raw in {}",
                    kind_name(ex.kind),
                    r.pairs.len(),
                    r.mean_raw,
                    r.mean_processed,
                    r.processed_ge_raw
                );
                match (r.measured_ratio, r.ratio_ci) {
                    (Some(v), Some((lo, hi))) => {
                        let _ = writeln!(out, "  measured factor {v} (95% CI [{lo}, {hi}])");
                    }
                    (Some(v), None) => {
                        let _ = writeln!(out, "  measured factor {v}");
                    }
                    _ => out.push_str("  measured factor undefined (no raw degeneracies)\n"),
                }
                let _ = writeln!(
                    out,
                    "  analytic random {}, postulated factor {}, analytic quantized {}",
                    ex.analytic_random, ex.postulated_factor, ex.analytic_quantized
                );
            }
        }
    }
    out
}
