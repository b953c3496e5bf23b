use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use critval_core::distance::{self, Certificate, Engine, Status};
use critval_core::geometry::{Ball, Pt, Tri};
use critval_core::hull::{self, cloud_hull};
use critval_core::ifs::{attractor_cloud, cloud_at_depth, Word};
use critval_core::precision::{format_rational, CertInterval};

use super::{finish, ifs_arg, open};
use crate::input::{self, IfsEcho};
use crate::report::{exact, hi, lo, profile_svg, Csv, Svg};
use crate::{CliError, RunConfig};

#[derive(Args, Debug)]
pub struct AttractorArgs {
    /// Built-in family or JSON IFS spec path.
    #[arg(long)]
    ifs: Option<String>,
    /// Target cylinder diameter, rational.
    #[arg(long, default_value = "1/100")]
    eps: String,
    /// Also write an SVG, optionally into a different directory.
    #[arg(long, num_args = 0..=1)]
    svg: Option<Option<PathBuf>>,
}

#[derive(Serialize)]
struct CloudReport<'a> {
    ifs: IfsEcho<'a>,
    eps: String,
    depth: u32,
    points: usize,
    slack: String,
    hull_vertices: usize,
}

fn pt_cells(p: &Pt) -> [String; 4] {
    [lo(&p[0]), hi(&p[0]), lo(&p[1]), hi(&p[1])]
}

pub fn attractor(rc: &RunConfig, a: AttractorArgs) -> Result<(), CliError> {
    let name = ifs_arg(rc, &a.ifs)?;
    let sel = input::select(&name)?;
    let eps = input::rational(&a.eps)?;
    let mut out = open(rc)?;
    let cloud = attractor_cloud(&sel.ifs, &eps, rc.precision_bits, rc.node_cap)?;
    let mut csv = Csv::new(&["word", "x_lo", "x_hi", "y_lo", "y_hi"]);
    for (w, p) in cloud.words.iter().zip(&cloud.points) {
        let c = pt_cells(p);
        csv.row(&[w.to_string(), c[0].clone(), c[1].clone(), c[2].clone(), c[3].clone()]);
    }
    out.text("cloud.csv", &csv.finish())?;
    let hull = cloud_hull(&cloud);
    let report = CloudReport {
        ifs: IfsEcho { source: &name, spec: &sel.spec },
        eps: format_rational(&eps),
        depth: cloud.depth,
        points: cloud.len(),
        slack: format_rational(&cloud.slack.to_rational()),
        hull_vertices: hull.len(),
    };
    out.json("attractor.json", "attractor", sel.nonconformant, rc, &report)?;
    if let Some(dir) = a.svg {
        let pts = cloud.f64_points();
        let mut svg = Svg::fit(pts.iter().copied());
        svg.dots(&pts, 1.5, "black");
        svg.polygon(&hull, "steelblue");
        let body = svg.finish();
        match dir {
            Some(d) => {
                std::fs::create_dir_all(&d)?;
                std::fs::write(d.join("attractor.svg"), body)?;
            }
            None => {
                out.text("attractor.svg", &body)?;
            }
        }
    }
    println!("attractor: depth {}, {} points", cloud.depth, cloud.len());
    finish(&out, sel.nonconformant);
    Ok(())
}

#[derive(Args, Debug)]
pub struct DistanceArgs {
    #[arg(long)]
    ifs: Option<String>,
    /// Query point `x,y` with rational coordinates.
    #[arg(long, allow_hyphen_values = true)]
    point: String,
    /// Target width of the distance enclosure.
    #[arg(long, default_value_t = 1e-9)]
    eps: f64,
}

#[derive(Serialize)]
struct Witness<'a> {
    word: &'a Word,
    point: &'a Pt,
}

#[derive(Serialize)]
struct DistanceReport<'a> {
    ifs: IfsEcho<'a>,
    point: &'a Pt,
    value: &'a CertInterval,
    nodes: u64,
    witnesses: Vec<Witness<'a>>,
    criticality: Status,
    certificate: &'static str,
    certificate_valid: bool,
    eta: f64,
}

pub fn distance(rc: &RunConfig, a: DistanceArgs) -> Result<(), CliError> {
    let name = ifs_arg(rc, &a.ifs)?;
    let sel = input::select(&name)?;
    let x = input::point(&a.point, rc.precision_bits)?;
    let mut out = open(rc)?;
    let engine = Engine::new(&sel.ifs, rc.precision_bits).with_cap(rc.node_cap);
    let d = engine.distance(&x, a.eps)?;
    let v = engine.criticality(&x, a.eps)?;
    let certificate = match v.certificate {
        Certificate::Convex { .. } => "convex_combination",
        Certificate::Separating { .. } => "separating_direction",
        Certificate::None => "none",
    };
    let report = DistanceReport {
        ifs: IfsEcho { source: &name, spec: &sel.spec },
        point: &x,
        value: &d.value,
        nodes: d.nodes,
        witnesses: d.witnesses.iter().map(|(word, point)| Witness { word, point }).collect(),
        criticality: v.status,
        certificate,
        certificate_valid: v.validate(&x),
        eta: v.eta,
    };
    out.json("distance.json", "distance", sel.nonconformant, rc, &report)?;
    println!("distance: [{}, {}] {:?}", lo(&d.value), hi(&d.value), v.status);
    finish(&out, sel.nonconformant);
    Ok(())
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[arg(long)]
    ifs: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    from: String,
    #[arg(long, allow_hyphen_values = true)]
    to: String,
    /// Number of samples, both ends included.
    #[arg(long, default_value_t = 730)]
    steps: usize,
    /// Distance tolerance; must stay above the location accuracy of the
    /// refined maxima (about 1e-10) for CRITICAL verdicts to certify.
    #[arg(long, default_value_t = 1e-9)]
    eps: f64,
    #[arg(long)]
    svg: bool,
}

#[derive(Serialize)]
struct ScanRow<'a> {
    t: f64,
    point: &'a Pt,
    value: &'a CertInterval,
    status: Status,
}

#[derive(Serialize)]
struct ScanReport<'a> {
    ifs: IfsEcho<'a>,
    from: &'a str,
    to: &'a str,
    steps: usize,
    eps: f64,
    entries: Vec<ScanRow<'a>>,
}

pub fn critical_scan(rc: &RunConfig, a: ScanArgs) -> Result<(), CliError> {
    let name = ifs_arg(rc, &a.ifs)?;
    let sel = input::select(&name)?;
    if a.steps < 2 {
        return Err(CliError::Config("need at least two samples".into()));
    }
    let from = input::point(&a.from, rc.precision_bits)?;
    let to = input::point(&a.to, rc.precision_bits)?;
    let mut out = open(rc)?;
    let engine = Engine::new(&sel.ifs, rc.precision_bits).with_cap(rc.node_cap);
    let entries = distance::critical_scan(&engine, &from, &to, a.steps, a.eps)?;
    let mut csv = Csv::new(&["t", "x_lo", "x_hi", "y_lo", "y_hi", "value_lo", "value_hi", "status"]);
    for e in &entries {
        let c = pt_cells(&e.point);
        let status = serde_json::to_value(e.status).unwrap().as_str().unwrap().to_string();
        csv.row(&[exact(e.t), c[0].clone(), c[1].clone(), c[2].clone(), c[3].clone(), lo(&e.value), hi(&e.value), status]);
    }
    out.text("scan.csv", &csv.finish())?;
    let report = ScanReport {
        ifs: IfsEcho { source: &name, spec: &sel.spec },
        from: &a.from,
        to: &a.to,
        steps: a.steps,
        eps: a.eps,
        entries: entries.iter().map(|e| ScanRow { t: e.t, point: &e.point, value: &e.value, status: e.status }).collect(),
    };
    out.json("scan.json", "critical-scan", sel.nonconformant, rc, &report)?;
    if a.svg {
        let marks: Vec<(f64, f64)> = entries.iter().map(|e| (e.t, e.value.to_f64())).collect();
        out.text("scan.svg", &profile_svg(&[], &marks))?;
    }
    let critical = entries.iter().filter(|e| e.status == Status::Critical).count();
    println!("critical-scan: {critical} critical, {} undecided", entries.len() - critical);
    finish(&out, sel.nonconformant);
    Ok(())
}

#[derive(Args, Debug)]
pub struct CensusArgs {
    #[arg(long)]
    ifs: Option<String>,
    #[arg(long, default_value_t = 8)]
    max_depth: u32,
    #[arg(long)]
    svg: bool,
}

pub fn hull_census(rc: &RunConfig, a: CensusArgs) -> Result<(), CliError> {
    let name = ifs_arg(rc, &a.ifs)?;
    let sel = input::select(&name)?;
    if a.max_depth == 0 {
        return Err(CliError::Config("max-depth must be at least 1".into()));
    }
    let mut out = open(rc)?;
    let census = hull::hull_census(&sel.ifs, a.max_depth, rc.precision_bits, rc.node_cap)?;
    let mut csv = Csv::new(&["depth", "vertices", "displacement", "slack", "directions"]);
    for r in &census.rows {
        let dirs: Vec<String> = r.directions.iter().map(|d| exact(*d)).collect();
        csv.row(&[r.depth.to_string(), r.vertices.to_string(), exact(r.displacement), exact(r.slack), dirs.join(" ")]);
    }
    out.text("census.csv", &csv.finish())?;
    #[derive(Serialize)]
    struct R<'a> {
        ifs: IfsEcho<'a>,
        census: &'a hull::HullCensus,
    }
    out.json("census.json", "hull-census", sel.nonconformant, rc, &R { ifs: IfsEcho { source: &name, spec: &sel.spec }, census: &census })?;
    if a.svg {
        let cloud = cloud_at_depth(&sel.ifs, a.max_depth, rc.precision_bits, rc.node_cap)?;
        let pts = cloud.f64_points();
        let last = census.rows.last().expect("at least one row");
        let mut svg = Svg::fit(pts.iter().copied());
        svg.dots(&pts, 1.0, "gray");
        svg.polygon(&last.hull, "black");
        out.text("census.svg", &svg.finish())?;
    }
    let counts: Vec<String> = census.rows.iter().map(|r| r.vertices.to_string()).collect();
    let stable = census.stabilized_at.map_or("none".to_string(), |d| d.to_string());
    println!("hull-census: vertices {} stabilized_at {stable}", counts.join(" "));
    finish(&out, sel.nonconformant);
    Ok(())
}

#[derive(Args, Debug)]
pub struct EdgeArgs {
    #[arg(long)]
    ifs: Option<String>,
    #[arg(long, default_value_t = 6)]
    depth: u32,
    /// Rotation angle of the maps.
    #[arg(long, allow_hyphen_values = true)]
    alpha: String,
    #[arg(long, default_value_t = 12)]
    k_max: u32,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
}

pub fn edge_directions(rc: &RunConfig, a: EdgeArgs) -> Result<(), CliError> {
    let name = ifs_arg(rc, &a.ifs)?;
    let sel = input::select(&name)?;
    let alpha = input::angle(&a.alpha)?;
    let mut out = open(rc)?;
    let res = hull::edge_directions_match(&sel.ifs, a.depth, &alpha, a.k_max, a.tol, rc.precision_bits, rc.node_cap);
    #[derive(Serialize)]
    struct R<'a> {
        ifs: IfsEcho<'a>,
        matched: bool,
        report: Option<hull::EdgeReport>,
        unmatched: Vec<hull::EdgeMatch>,
    }
    let echo = IfsEcho { source: &name, spec: &sel.spec };
    match res {
        Ok(report) => {
            let n = report.matched.len();
            out.json("edges.json", "edge-directions", sel.nonconformant, rc, &R { ifs: echo, matched: true, report: Some(report), unmatched: vec![] })?;
            println!("edge-directions: {n} edges matched");
            finish(&out, sel.nonconformant);
            Ok(())
        }
        Err(hull::HullError::NoMatch(bad)) => {
            let n = bad.len();
            out.json("edges.json", "edge-directions", sel.nonconformant, rc, &R { ifs: echo, matched: false, report: None, unmatched: bad })?;
            finish(&out, sel.nonconformant);
            Err(CliError::Certification(format!("{n} hull edges matched no direction")))
        }
        Err(e) => Err(e.into()),
    }
}

#[derive(Args, Debug)]
pub struct GammaArgs {
    #[arg(long)]
    ifs: Option<String>,
    #[arg(long, default_value_t = 6)]
    depth: u32,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
}

pub fn gamma(rc: &RunConfig, a: GammaArgs) -> Result<(), CliError> {
    let name = ifs_arg(rc, &a.ifs)?;
    let sel = input::select(&name)?;
    if a.samples == 0 {
        return Err(CliError::Config("need at least one sample".into()));
    }
    let mut out = open(rc)?;
    let g = hull::gamma_estimate(&sel.ifs, a.depth, a.samples, rc.seed, rc.precision_bits, rc.node_cap)?;
    #[derive(Serialize)]
    struct R<'a> {
        ifs: IfsEcho<'a>,
        depth: u32,
        estimate: &'a hull::GammaEstimate,
    }
    out.json("gamma.json", "gamma", sel.nonconformant, rc, &R { ifs: IfsEcho { source: &name, spec: &sel.spec }, depth: a.depth, estimate: &g })?;
    println!("gamma: {}", g.gamma_hat.map_or("none".into(), exact));
    finish(&out, sel.nonconformant);
    Ok(())
}

#[derive(Args, Debug)]
pub struct CutsWellArgs {
    #[arg(long)]
    ifs: Option<String>,
    /// Cylinder word, e.g. `2,1,-1`.
    #[arg(long, allow_hyphen_values = true)]
    word: String,
    #[arg(long, allow_hyphen_values = true)]
    center: String,
    #[arg(long)]
    radius: String,
    /// Angular tolerance between the tangent directions.
    #[arg(long, default_value_t = 1e-2)]
    eps: f64,
    #[arg(long, default_value_t = 6)]
    depth: u32,
}

pub fn cuts_well(rc: &RunConfig, a: CutsWellArgs) -> Result<(), CliError> {
    let name = ifs_arg(rc, &a.ifs)?;
    let sel = input::select(&name)?;
    let word = input::word(&a.word)?;
    let center = input::point(&a.center, rc.precision_bits)?;
    let radius = CertInterval::from_rational(&input::rational(&a.radius)?, rc.precision_bits);
    let mut out = open(rc)?;
    let disk = Ball::new(center, radius);
    let t = hull::cuts_well_disk(&sel.ifs, &word, &disk, a.eps, a.depth, rc.precision_bits, rc.node_cap)?;
    let verdict = match t {
        Tri::Yes => "YES",
        Tri::No => "NO",
        Tri::Undecided => "UNDECIDED",
    };
    #[derive(Serialize)]
    struct R<'a> {
        ifs: IfsEcho<'a>,
        word: &'a Word,
        disk: &'a Ball,
        eps: f64,
        depth: u32,
        cuts_well: &'a str,
    }
    let r = R { ifs: IfsEcho { source: &name, spec: &sel.spec }, word: &word, disk: &disk, eps: a.eps, depth: a.depth, cuts_well: verdict };
    out.json("cuts_well.json", "cuts-well", sel.nonconformant, rc, &r)?;
    println!("cuts-well: {verdict}");
    finish(&out, sel.nonconformant);
    Ok(())
}
