//! Artifact writers. JSON floats are rewritten as exact rational strings so
//! no bare rounded value reaches disk.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use critval_core::precision::{format_rational, CertInterval};
use num_rational::BigRational;
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

/// The exact binary value of `x` as `p/q`.
pub fn exact(x: f64) -> String {
    match BigRational::from_float(x) {
        Some(r) => format_rational(&r),
        None => x.to_string(),
    }
}

fn exactify(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => Value::String(exact(n.as_f64().unwrap())),
        Value::Array(a) => Value::Array(a.into_iter().map(exactify).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, exactify(v))).collect()),
        other => other,
    }
}

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    schema_version: u32,
    command: &'a str,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    nonconformant: bool,
    config: &'a C,
    result: &'a R,
}

pub struct Out {
    pub dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl Out {
    pub fn new(dir: PathBuf) -> std::io::Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Out { dir, written: Vec::new() })
    }

    pub fn text(&mut self, name: &str, body: &str) -> std::io::Result<PathBuf> {
        let p = self.dir.join(name);
        fs::write(&p, body)?;
        self.written.push(p.clone());
        Ok(p)
    }

    pub fn json<C: Serialize, R: Serialize>(
        &mut self,
        name: &str,
        command: &str,
        nonconformant: bool,
        config: &C,
        result: &R,
    ) -> std::io::Result<PathBuf> {
        let env = Envelope { schema_version: SCHEMA_VERSION, command, nonconformant, config, result };
        let v = exactify(serde_json::to_value(&env).map_err(std::io::Error::other)?);
        let mut s = serde_json::to_string_pretty(&v).map_err(std::io::Error::other)?;
        s.push('\n');
        self.text(name, &s)
    }
}

/// Plain JSON without the envelope, for files that are read back.
pub fn write_raw_json<T: Serialize>(path: &Path, v: &T) -> std::io::Result<()> {
    let mut s = serde_json::to_string_pretty(v).map_err(std::io::Error::other)?;
    s.push('\n');
    fs::write(path, s)
}

pub fn lo(x: &CertInterval) -> String {
    x.to_decimal_pair(17).0
}

pub fn hi(x: &CertInterval) -> String {
    x.to_decimal_pair(17).1
}

pub struct Csv {
    body: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv { body: header.join(",") + "\n" }
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        let cells: Vec<String> = cells.iter().map(|c| quote(c.as_ref())).collect();
        let _ = writeln!(self.body, "{}", cells.join(","));
    }

    pub fn finish(self) -> String {
        self.body
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// A minimal SVG canvas mapping a data box onto a fixed-size viewport with
/// the y axis pointing up.
pub struct Svg {
    min: [f64; 2],
    scale: f64,
    size: f64,
    body: String,
}

impl Svg {
    pub fn fit(points: impl Iterator<Item = [f64; 2]>) -> Self {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in points {
            for i in 0..2 {
                min[i] = min[i].min(p[i]);
                max[i] = max[i].max(p[i]);
            }
        }
        if !min[0].is_finite() {
            min = [0.0; 2];
            max = [1.0; 2];
        }
        let span = (max[0] - min[0]).max(max[1] - min[1]).max(1e-300);
        let pad = span * 0.05;
        let size = 800.0;
        Svg { min: [min[0] - pad, min[1] - pad], scale: size / (span + 2.0 * pad), size, body: String::new() }
    }

    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        ((p[0] - self.min[0]) * self.scale, self.size - (p[1] - self.min[1]) * self.scale)
    }

    pub fn dots(&mut self, pts: &[[f64; 2]], r: f64, fill: &str) {
        for &p in pts {
            let (x, y) = self.map(p);
            let _ = writeln!(self.body, r#"<circle cx="{x:.3}" cy="{y:.3}" r="{r}" fill="{fill}"/>"#);
        }
    }

    pub fn polygon(&mut self, pts: &[[f64; 2]], stroke: &str) {
        let s: Vec<String> = pts
            .iter()
            .map(|&p| {
                let (x, y) = self.map(p);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let _ = writeln!(self.body, r#"<polygon points="{}" fill="none" stroke="{stroke}"/>"#, s.join(" "));
    }

    pub fn polyline_raw(&mut self, pts: &[(f64, f64)], stroke: &str) {
        let s: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.3},{y:.3}")).collect();
        let _ = writeln!(self.body, r#"<polyline points="{}" fill="none" stroke="{stroke}"/>"#, s.join(" "));
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{0}\" viewBox=\"0 0 {0} {0}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{1}</svg>\n",
            self.size, self.body
        )
    }
}

/// A profile plot of `(t, value)` pairs on the unit square.
pub fn profile_svg(samples: &[(f64, f64)], marks: &[(f64, f64)]) -> String {
    let vmax = samples.iter().chain(marks).map(|s| s.1).fold(0.0, f64::max).max(1e-300);
    let size = 800.0;
    let map = |(t, v): (f64, f64)| (40.0 + t * (size - 80.0), size - 40.0 - v / vmax * (size - 80.0));
    let mut svg = Svg { min: [0.0; 2], scale: 1.0, size, body: String::new() };
    let line: Vec<(f64, f64)> = samples.iter().map(|&s| map(s)).collect();
    svg.polyline_raw(&line, "black");
    for &m in marks {
        let (x, y) = map(m);
        let _ = writeln!(svg.body, r#"<circle cx="{x:.3}" cy="{y:.3}" r="4" fill="red"/>"#);
    }
    svg.finish()
}
