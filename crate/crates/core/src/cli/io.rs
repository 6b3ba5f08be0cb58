//! Text formats: flat `key = value` reports, CSV traces and field files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::domain::{DiscreteDomain, Field};
use crate::error::{LabError, Result};
use crate::minimize::TraceRow;

pub const TRACE_HEADER: &str =
    "iter,start_id,psi,beta,delta,grad_norm,max_value,eps_scale,boundary_distance";

/// Floats are written with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Ordered `key = value` lines.
#[derive(Debug, Default, Clone)]
pub struct Report {
    lines: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(&mut self, key: impl Into<String>, value: impl std::fmt::Display) -> &mut Self {
        self.lines.push((key.into(), value.to_string()));
        self
    }

    pub fn float(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.lines.push((key.into(), fmt_float(value)));
        self
    }

    pub fn floats(&mut self, key: impl Into<String>, values: &[f64]) -> &mut Self {
        let v: Vec<String> = values.iter().map(|x| fmt_float(*x)).collect();
        self.lines.push((key.into(), v.join(",")));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.lines
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.lines {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Parses rendered text back into key/value pairs.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let (k, v) = line.split_once(" = ").ok_or_else(|| {
                LabError::InvalidParameter(format!("report line {}: expected `key = value`", i + 1))
            })?;
            lines.push((k.to_string(), v.to_string()));
        }
        Ok(Self { lines })
    }
}

/// Grid metadata shared by every report.
pub fn domain_metadata(r: &mut Report, d: &DiscreteDomain) {
    r.text("dimension", d.dimension())
        .text("domain_kind", d.kind().as_str())
        .text("stencil", d.stencil().as_str())
        .text("resolution", d.shape()[0])
        .text("num_nodes", d.num_nodes())
        .floats("extent", d.extent())
        .float("min_spacing", d.min_spacing())
        .float("measure", d.measure());
}

pub fn render_trace<'a>(rows: impl Iterator<Item = &'a TraceRow>) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.iter,
            r.start_id,
            fmt_float(r.psi),
            fmt_float(r.beta),
            fmt_float(r.delta),
            fmt_float(r.grad_norm),
            fmt_float(r.max_value),
            fmt_float(r.eps_scale),
            fmt_float(r.boundary_distance),
        );
    }
    out
}

fn field_header(d: &DiscreteDomain) -> String {
    format!("{} {} {}", d.dimension(), d.kind().as_str(), d.shape()[0])
}

pub fn render_field(d: &DiscreteDomain, u: &Field) -> Result<String> {
    d.check(u)?;
    let mut out = field_header(d);
    out.push('\n');
    for x in u.values() {
        out.push_str(&fmt_float(*x));
        out.push('\n');
    }
    Ok(out)
}

/// Reads a field written by [`render_field`]; the header must match `d`.
pub fn parse_field(d: &DiscreteDomain, text: &str) -> Result<Field> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| LabError::InvalidParameter("field file is empty".into()))?;
    let tok: Vec<&str> = header.split_whitespace().collect();
    let expected = field_header(d);
    let want: Vec<&str> = expected.split_whitespace().collect();
    if tok.len() < 3 || tok[..3] != want[..] {
        return Err(LabError::InvalidParameter(format!(
            "field file header `{header}` does not match the domain `{expected}`"
        )));
    }
    let values = lines
        .enumerate()
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .map_err(|e| LabError::InvalidParameter(format!("field file value {}: {e}", i + 1)))
        })
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != d.num_nodes() {
        return Err(LabError::DomainMismatch {
            expected: d.num_nodes(),
            found: values.len(),
        });
    }
    Field::new(d, values)
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_error(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_error(path, e))
}

pub fn io_error(path: &Path, e: std::io::Error) -> LabError {
    LabError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}
