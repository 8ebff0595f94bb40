//! File formats: JSON problem descriptions, CSV tables for traces, fronts and
//! reference fronts, and the reference-front provenance sidecar.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), which
//! round-trips every `f64` exactly, so parsing a file and writing it back
//! reproduces it byte for byte.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::merit::{FrontPoint, Provenance, ReferenceFront};
use crate::problem::{NonsmoothTerm, Problem, Quadratic, SmoothObjective};
use crate::solver::{Method, RunTrace};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("invalid number `{s}`")))
}

fn parse_u64(s: &str) -> Result<u64> {
    s.trim()
        .parse::<u64>()
        .map_err(|_| Error::Parse(format!("invalid integer `{s}`")))
}

// ---------------------------------------------------------------------------
// problem descriptions

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDescription {
    pub objectives: Vec<ObjectiveDescription>,
    /// Optional override of `L(f)`; must not be below the analytic bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveDescription {
    pub smooth: SmoothDescription,
    #[serde(default = "zero_term")]
    pub nonsmooth: NonsmoothTerm,
}

fn zero_term() -> NonsmoothTerm {
    NonsmoothTerm::Zero
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SmoothDescription {
    /// `½ xᵀ H x + cᵀx + d`
    Quadratic {
        hessian: Vec<Vec<f64>>,
        linear: Vec<f64>,
        #[serde(default)]
        constant: f64,
    },
    /// `cᵀx + d`
    Linear {
        coefficients: Vec<f64>,
        #[serde(default)]
        constant: f64,
    },
    /// `scale·‖x − center‖² + d`
    Isotropic {
        scale: f64,
        center: Vec<f64>,
        #[serde(default)]
        constant: f64,
    },
}

impl SmoothDescription {
    fn build(&self) -> Result<Quadratic> {
        match self {
            Self::Quadratic {
                hessian,
                linear,
                constant,
            } => Quadratic::new(hessian.clone(), linear.clone(), *constant),
            Self::Linear {
                coefficients,
                constant,
            } => {
                let n = coefficients.len();
                Quadratic::new(vec![vec![0.0; n]; n], coefficients.clone(), *constant)
            }
            Self::Isotropic {
                scale,
                center,
                constant,
            } => {
                if !(scale.is_finite() && *scale >= 0.0) {
                    return Err(Error::InvalidQuadratic(format!(
                        "isotropic scale must be finite and nonnegative, got {scale}"
                    )));
                }
                Quadratic::isotropic(*scale, center, *constant)
            }
        }
    }
}

impl ProblemDescription {
    pub fn build(&self) -> Result<Problem> {
        let mut smooth = Vec::with_capacity(self.objectives.len());
        let mut nonsmooth = Vec::with_capacity(self.objectives.len());
        for o in &self.objectives {
            smooth.push(SmoothObjective::Quadratic(o.smooth.build()?));
            nonsmooth.push(o.nonsmooth.clone());
        }
        let p = Problem::new(smooth, nonsmooth)?;
        match self.lipschitz {
            Some(l) => p.with_lipschitz(l),
            None => Ok(p),
        }
    }
}

/// Parse and build a problem from its JSON description.
pub fn parse_problem_json(text: &str) -> Result<Problem> {
    let desc: ProblemDescription =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    desc.build()
}

// ---------------------------------------------------------------------------
// generic numeric CSV

fn write_csv(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

fn read_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());
    let header = r
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect::<Vec<_>>();
    if header.is_empty() || header.iter().all(|h| h.is_empty()) {
        return Err(Error::Parse("missing header".into()));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

fn numbered(prefix: &str, count: usize) -> impl Iterator<Item = String> + '_ {
    (1..=count).map(move |i| format!("{prefix}_{i}"))
}

/// Count leading header cells of the form `{prefix}_1, {prefix}_2, ...`.
fn count_numbered(header: &[String], start: usize, prefix: &str) -> usize {
    header[start..]
        .iter()
        .enumerate()
        .take_while(|(i, h)| **h == format!("{prefix}_{}", i + 1))
        .count()
}

fn expect_header(header: &[String], expected: &[String]) -> Result<()> {
    if header != expected {
        return Err(Error::Parse(format!(
            "unexpected header `{}`, expected `{}`",
            header.join(","),
            expected.join(",")
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// traces

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: u64,
    pub s: f64,
    pub gamma: f64,
    pub f: Vec<f64>,
    pub step_norm: f64,
    pub merit: Option<f64>,
}

/// `trace.csv`: `k,s_k,gamma_k,F_1..F_m,step_norm,merit`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub num_objectives: usize,
    pub rows: Vec<TraceRow>,
}

impl TraceTable {
    pub fn from_trace(trace: &RunTrace) -> Self {
        Self {
            num_objectives: trace.num_objectives(),
            rows: trace
                .records
                .iter()
                .map(|r| TraceRow {
                    k: r.k,
                    s: r.s,
                    gamma: r.gamma,
                    f: r.f_values.clone(),
                    step_norm: r.step_norm,
                    merit: r.merit,
                })
                .collect(),
        }
    }

    pub fn header(m: usize) -> Vec<String> {
        ["k", "s_k", "gamma_k"]
            .iter()
            .map(|s| s.to_string())
            .chain(numbered("F", m))
            .chain(["step_norm", "merit"].iter().map(|s| s.to_string()))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        write_csv(
            &Self::header(self.num_objectives),
            self.rows.iter().map(|r| {
                let mut v = vec![r.k.to_string(), fmt_f64(r.s), fmt_f64(r.gamma)];
                v.extend(r.f.iter().map(|x| fmt_f64(*x)));
                v.push(fmt_f64(r.step_norm));
                v.push(r.merit.map(fmt_f64).unwrap_or_default());
                v
            }),
        )
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let (header, rows) = read_csv(text)?;
        if header.len() < 3 {
            return Err(Error::Parse("trace header too short".into()));
        }
        let m = count_numbered(&header, 3, "F");
        if m == 0 {
            return Err(Error::Parse("trace has no objective columns".into()));
        }
        expect_header(&header, &Self::header(m))?;
        let rows = rows
            .iter()
            .map(|r| {
                Ok(TraceRow {
                    k: parse_u64(&r[0])?,
                    s: parse_f64(&r[1])?,
                    gamma: parse_f64(&r[2])?,
                    f: r[3..3 + m]
                        .iter()
                        .map(|c| parse_f64(c))
                        .collect::<Result<_>>()?,
                    step_norm: parse_f64(&r[3 + m])?,
                    merit: match r[4 + m].as_str() {
                        "" => None,
                        c => Some(parse_f64(c)?),
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            num_objectives: m,
            rows,
        })
    }
}

// ---------------------------------------------------------------------------
// fronts

#[derive(Debug, Clone, PartialEq)]
pub struct FrontRow {
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub iterations: u64,
}

/// `front.csv`: `x_1..x_n,F_1..F_m,iterations`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontTable {
    pub dim: usize,
    pub num_objectives: usize,
    pub rows: Vec<FrontRow>,
}

impl FrontTable {
    pub fn from_result(result: &crate::bench::FrontResult, dim: usize, m: usize) -> Self {
        Self {
            dim,
            num_objectives: m,
            rows: result
                .front()
                .map(|s| FrontRow {
                    x: s.x_final.clone(),
                    f: s.f_final.clone(),
                    iterations: s.iterations as u64,
                })
                .collect(),
        }
    }

    pub fn header(n: usize, m: usize) -> Vec<String> {
        numbered("x", n)
            .chain(numbered("F", m))
            .chain(std::iter::once("iterations".to_string()))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        write_csv(
            &Self::header(self.dim, self.num_objectives),
            self.rows.iter().map(|r| {
                r.x.iter()
                    .chain(&r.f)
                    .map(|v| fmt_f64(*v))
                    .chain(std::iter::once(r.iterations.to_string()))
                    .collect()
            }),
        )
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let (header, rows) = read_csv(text)?;
        let n = count_numbered(&header, 0, "x");
        let m = count_numbered(&header, n, "F");
        if n == 0 || m == 0 {
            return Err(Error::Parse("front needs x_ and F_ columns".into()));
        }
        expect_header(&header, &Self::header(n, m))?;
        let rows = rows
            .iter()
            .map(|r| {
                Ok(FrontRow {
                    x: r[..n].iter().map(|c| parse_f64(c)).collect::<Result<_>>()?,
                    f: r[n..n + m]
                        .iter()
                        .map(|c| parse_f64(c))
                        .collect::<Result<_>>()?,
                    iterations: parse_u64(&r[n + m])?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim: n,
            num_objectives: m,
            rows,
        })
    }
}

// ---------------------------------------------------------------------------
// rate series and method comparisons

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub k: u64,
    pub u0_lower: f64,
    pub bound: f64,
}

/// `rate.csv`: `k,u0_lower,bound`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
}

impl RateTable {
    pub const HEADER: [&'static str; 3] = ["k", "u0_lower", "bound"];

    pub fn from_certificate(cert: &crate::merit::RateCertificate) -> Self {
        Self {
            rows: cert
                .series
                .iter()
                .map(|p| RateRow {
                    k: p.k,
                    u0_lower: p.u0_lower,
                    bound: p.bound,
                })
                .collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        write_csv(
            &Self::HEADER.map(String::from),
            self.rows
                .iter()
                .map(|r| vec![r.k.to_string(), fmt_f64(r.u0_lower), fmt_f64(r.bound)]),
        )
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let (header, rows) = read_csv(text)?;
        expect_header(&header, &Self::HEADER.map(String::from))?;
        let rows = rows
            .iter()
            .map(|r| {
                Ok(RateRow {
                    k: parse_u64(&r[0])?,
                    u0_lower: parse_f64(&r[1])?,
                    bound: parse_f64(&r[2])?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rows })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub method: Method,
    /// First `k` with `û₀(x_k) < threshold`, or the iterations run if never.
    pub iterations: u64,
    pub reached: bool,
    pub final_step_norm: f64,
    pub wall_time_s: f64,
}

/// `compare.csv`: one row per method.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CompareTable {
    pub rows: Vec<CompareRow>,
}

impl CompareTable {
    pub const HEADER: [&'static str; 5] = [
        "method",
        "iterations",
        "reached",
        "final_step_norm",
        "wall_time_s",
    ];

    pub fn to_csv(&self) -> String {
        write_csv(
            &Self::HEADER.map(String::from),
            self.rows.iter().map(|r| {
                vec![
                    r.method.to_string(),
                    r.iterations.to_string(),
                    r.reached.to_string(),
                    fmt_f64(r.final_step_norm),
                    fmt_f64(r.wall_time_s),
                ]
            }),
        )
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let (header, rows) = read_csv(text)?;
        expect_header(&header, &Self::HEADER.map(String::from))?;
        let rows = rows
            .iter()
            .map(|r| {
                Ok(CompareRow {
                    method: r[0].parse()?,
                    iterations: parse_u64(&r[1])?,
                    reached: r[2]
                        .parse()
                        .map_err(|_| Error::Parse(format!("invalid flag `{}`", r[2])))?,
                    final_step_norm: parse_f64(&r[3])?,
                    wall_time_s: parse_f64(&r[4])?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rows })
    }
}

// ---------------------------------------------------------------------------
// reference fronts

pub fn reference_header(n: usize, m: usize) -> Vec<String> {
    numbered("x", n).chain(numbered("F", m)).collect()
}

/// `x_1..x_n,F_1..F_m` rows of a reference front.
pub fn reference_to_csv(front: &ReferenceFront) -> String {
    write_csv(
        &reference_header(front.dim(), front.num_objectives()),
        front
            .points()
            .iter()
            .map(|p| p.x.iter().chain(&p.f).map(|v| fmt_f64(*v)).collect()),
    )
}

/// Parse reference-front rows; no nondominance check.
pub fn parse_reference_csv(text: &str) -> Result<Vec<FrontPoint>> {
    let (header, rows) = read_csv(text)?;
    let n = count_numbered(&header, 0, "x");
    let m = count_numbered(&header, n, "F");
    if n == 0 || m == 0 {
        return Err(Error::Parse(
            "reference front needs x_ and F_ columns".into(),
        ));
    }
    expect_header(&header, &reference_header(n, m))?;
    rows.iter()
        .map(|r| {
            Ok(FrontPoint {
                x: r[..n].iter().map(|c| parse_f64(c)).collect::<Result<_>>()?,
                f: r[n..].iter().map(|c| parse_f64(c)).collect::<Result<_>>()?,
            })
        })
        .collect()
}

/// Write `<stem>.csv` and `<stem>.json` (provenance) next to each other.
pub fn save_reference_front(front: &ReferenceFront, csv_path: &Path) -> std::io::Result<()> {
    std::fs::write(csv_path, reference_to_csv(front))?;
    let json = serde_json::to_string_pretty(&front.provenance).expect("serializable provenance");
    std::fs::write(csv_path.with_extension("json"), json + "\n")
}

pub fn load_reference_front(csv_path: &Path) -> Result<ReferenceFront> {
    let text = std::fs::read_to_string(csv_path).map_err(|e| Error::Parse(e.to_string()))?;
    let points = parse_reference_csv(&text)?;
    let provenance = match std::fs::read_to_string(csv_path.with_extension("json")) {
        Ok(j) => serde_json::from_str(&j).map_err(|e| Error::Parse(e.to_string()))?,
        Err(_) => Provenance::default(),
    };
    ReferenceFront::new(points, provenance)
}
