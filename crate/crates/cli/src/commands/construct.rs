use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;

use critval_core::construction::{
    self as cons, check_ball_separation, check_cr, check_sqrt_bounds, separation_trials, CertificateStatus,
    ConstructionError, KAlphaConfig, KappaResult, RefinementState, TrialSummary, Verdict,
};
use critval_core::geometry::pt_rational;
use critval_core::ifs::Word;
use critval_core::precision::{format_rational, rat, AngleRep, CertInterval};
use num_rational::BigRational;

use super::{finish, open};
use crate::input;
use crate::report::{hi, lo, write_raw_json, Csv};
use crate::{CliError, RunConfig};

fn verdict_str(v: Verdict) -> String {
    serde_json::to_value(v).unwrap().as_str().unwrap().to_string()
}

#[derive(Args, Debug)]
pub struct LemmaArgs {
    #[arg(long, default_value = "1/1000")]
    q: String,
    /// Grid side for the square-root bounds.
    #[arg(long, default_value_t = 50)]
    grid: usize,
    /// Random configurations for the ball-separation bound.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
}

#[derive(Serialize, Default)]
struct GridSummary {
    cells: usize,
    holds: usize,
    fails: usize,
    domain_violation: usize,
    undecided: usize,
}

#[derive(Serialize)]
struct LemmaReport {
    q: String,
    sqrt_grid: GridSummary,
    sqrt_corner_low: String,
    sqrt_corner_high_minus_upper: String,
    separation_equality_margin: CertInterval,
    separation_equality_verdict: Verdict,
    separation_trials: TrialSummary,
    closest_ball_example: Verdict,
}

/// One grid cell: `DOMAIN_VIOLATION`, `UNDECIDED`, `FAILS` or `HOLDS`, and
/// the four verdicts when defined.
fn sqrt_cell(a: &BigRational, b: &BigRational, q: &BigRational, bits: u32) -> (String, Option<[Verdict; 4]>) {
    let ai = CertInterval::from_rational(a, bits);
    let bi = CertInterval::from_rational(b, bits);
    match check_sqrt_bounds(&ai, &bi, q) {
        Err(ConstructionError::DomainViolation) => ("DOMAIN_VIOLATION".into(), None),
        Err(e) => (format!("ERROR {e}"), None),
        Ok(r) => {
            let v = r.verdicts();
            let s = if v.contains(&Verdict::Undecided) {
                "UNDECIDED"
            } else if v.contains(&Verdict::Fails) {
                "FAILS"
            } else {
                "HOLDS"
            };
            (s.into(), Some(v))
        }
    }
}

pub fn verify_lemmas(rc: &RunConfig, a: LemmaArgs) -> Result<(), CliError> {
    let q = input::rational(&a.q)?;
    if a.grid < 2 {
        return Err(CliError::Config("grid must be at least 2".into()));
    }
    let bits = rc.precision_bits;
    let mut out = open(rc)?;
    let n = a.grid as i64;
    let mut csv = Csv::new(&["i", "j", "a", "b", "result", "minus_lower", "minus_upper", "plus_lower", "plus_upper"]);
    let mut sum = GridSummary::default();
    for i in 0..n {
        let av = rat(2, 3) * &q + rat(2, 3) * &q * rat(i, n - 1);
        for j in 0..n {
            let bv = &q * &q * rat(j + 1, n);
            let (res, v) = sqrt_cell(&av, &bv, &q, bits);
            sum.cells += 1;
            match res.as_str() {
                "HOLDS" => sum.holds += 1,
                "FAILS" => sum.fails += 1,
                "DOMAIN_VIOLATION" => sum.domain_violation += 1,
                _ => sum.undecided += 1,
            }
            let vs: Vec<String> = match v {
                Some(v) => v.iter().map(|x| verdict_str(*x)).collect(),
                None => vec![String::new(); 4],
            };
            let mut row = vec![i.to_string(), j.to_string(), format_rational(&av), format_rational(&bv), res];
            row.extend(vs);
            csv.row(&row);
        }
    }
    out.text("sqrt_grid.csv", &csv.finish())?;
    let corner_low = sqrt_cell(&(rat(2, 3) * &q), &(&q * &q), &q, bits).0;
    let corner_high = match sqrt_cell(&(rat(4, 3) * &q), &(&q * &q), &q, bits).1 {
        Some(v) => verdict_str(v[1]),
        None => "DOMAIN_VIOLATION".into(),
    };
    let p = |x: i64, y: i64| pt_rational(&rat(x, 1), &rat(y, 1), bits);
    let d = CertInterval::from_i64(8, bits).sqrt_clamped();
    let eq = check_ball_separation(&[p(0, 1)], &[p(0, -1)], &[p(2, 1)], &d)?;
    let trials = separation_trials(a.trials, rc.seed, bits);
    let cfg = KAlphaConfig::new(q.clone(), AngleRep::from_rational(rat(7, 1) * &q * &q * &q))
        .map_err(|e| CliError::Config(e.to_string()))?;
    let words: Vec<Word> = [[-1, -1], [-1, 1], [1, -1], [1, 1]].iter().map(|s| Word::from_symbols(&[2, s[0], s[1]])).collect();
    let cr = check_cr(&cfg, &words[0], &words[1..], bits)?;
    let report = LemmaReport {
        q: format_rational(&q),
        sqrt_grid: sum,
        sqrt_corner_low: corner_low,
        sqrt_corner_high_minus_upper: corner_high,
        separation_equality_margin: eq.margin,
        separation_equality_verdict: eq.verdict,
        separation_trials: trials,
        closest_ball_example: cr,
    };
    out.json("lemmas.json", "verify-lemmas", !cfg.conformant(), rc, &report)?;
    let t = &report.separation_trials;
    println!(
        "verify-lemmas: sqrt {} holds {} fails {} domain {} undecided; separation {}/{} hold; closest-ball {}",
        report.sqrt_grid.holds,
        report.sqrt_grid.fails,
        report.sqrt_grid.domain_violation,
        report.sqrt_grid.undecided,
        t.holds,
        t.trials,
        verdict_str(cr)
    );
    finish(&out, !cfg.conformant());
    if report.sqrt_grid.undecided > 0 || t.holds != t.trials || cr != Verdict::Holds {
        return Err(CliError::Certification("some lemma instance was not certified".into()));
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct KappaArgs {
    /// Arc start, e.g. `pi/2`.
    #[arg(long, allow_hyphen_values = true)]
    a: String,
    #[arg(long, allow_hyphen_values = true)]
    b: String,
    #[arg(long, default_value_t = 1)]
    k0: u64,
    #[arg(long, default_value = "1/1000")]
    q: String,
}

#[derive(Serialize)]
struct KappaReport<'a> {
    a: &'a AngleRep,
    b: &'a AngleRep,
    k0: u64,
    q: String,
    result: &'a KappaResult,
    identities_exact: bool,
}

pub fn kappa_search(rc: &RunConfig, a: KappaArgs) -> Result<(), CliError> {
    let lo_ = input::angle(&a.a)?;
    let hi_ = input::angle(&a.b)?;
    let q = input::rational(&a.q)?;
    let cfg = KAlphaConfig::new(q.clone(), AngleRep::zero()).map_err(|e| CliError::Config(e.to_string()))?;
    let mut out = open(rc)?;
    let r = cons::kappa_search(&lo_, &hi_, a.k0, &q)?;
    let report = KappaReport { a: &lo_, b: &hi_, k0: a.k0, q: format_rational(&q), result: &r, identities_exact: r.identities_hold(&q) };
    out.json("kappa.json", "kappa-search", !cfg.conformant(), rc, &report)?;
    println!("kappa-search: k {} l {} kappa {}", r.k, r.l, r.kappa);
    finish(&out, !cfg.conformant());
    Ok(())
}

#[derive(Args, Debug)]
pub struct RefineArgs {
    /// Steps to run in total; already completed steps count.
    #[arg(long, default_value_t = 2)]
    steps: usize,
    /// State file to resume from and update; created when missing.
    #[arg(long)]
    resume: Option<PathBuf>,
    #[arg(long, default_value = "1/1000")]
    q: String,
    /// Upper bound on the step index k searched.
    #[arg(long)]
    max_k: Option<u64>,
}

fn load_state(p: &Path) -> Result<RefinementState, CliError> {
    let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
    let s: RefinementState = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
    if s.schema != cons::SCHEMA_VERSION {
        return Err(CliError::Config(format!("{}: schema {} unsupported", p.display(), s.schema)));
    }
    Ok(s)
}

fn state_config(s: &RefinementState) -> Result<KAlphaConfig, CliError> {
    KAlphaConfig::new(s.q.clone(), AngleRep::zero()).map_err(|e| CliError::Config(e.to_string()))
}

#[derive(Serialize)]
struct StepRow {
    n: usize,
    k: u64,
    l: u64,
    bits: u32,
    checks: BTreeMap<String, String>,
}

pub fn refine(rc: &RunConfig, a: RefineArgs) -> Result<(), CliError> {
    let q = input::rational(&a.q)?;
    let path = match &a.resume {
        Some(p) if p.is_absolute() => p.clone(),
        Some(p) => std::env::current_dir()?.join(p),
        None => rc.out.join("state.json"),
    };
    let mut state = if path.is_file() {
        let s = load_state(&path)?;
        if s.q != q && a.q != "1/1000" {
            return Err(CliError::Config(format!("state has q = {}, flag says {}", format_rational(&s.q), a.q)));
        }
        s
    } else {
        RefinementState::fresh(&KAlphaConfig::new(q, AngleRep::zero()).map_err(|e| CliError::Config(e.to_string()))?)
    };
    let cfg = state_config(&state)?;
    let mut out = open(rc)?;
    let mut failure = None;
    while state.n() < a.steps {
        let next = match a.max_k {
            Some(m) => cons::refine_capped(&state, &cfg, rc.precision_bits, m),
            None => cons::refine(&state, &cfg, rc.precision_bits),
        };
        match next {
            Ok(s) => {
                state = s;
                if let Some(parent) = path.parent() {
                    std::fs::create_dir_all(parent)?;
                }
                write_raw_json(&path, &state)?;
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    if !path.is_file() {
        write_raw_json(&path, &state)?;
    }
    let mut csv = Csv::new(&["n", "k", "l", "multiplier", "bits", "kappa_lo", "kappa_hi", "nu_lo", "nu_hi", "checks"]);
    let mut rows = Vec::new();
    for s in &state.steps {
        let checks: BTreeMap<String, String> = s.checks.iter().map(|(k, v)| (k.clone(), verdict_str(v.verdict))).collect();
        let flags: Vec<String> = checks.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let (c, d) = (s.interval.lo.value(rc.precision_bits), s.interval.hi.value(rc.precision_bits));
        csv.row(&[
            s.n.to_string(),
            s.k.to_string(),
            s.l.to_string(),
            s.multiplier.to_string(),
            s.bits.to_string(),
            lo(&c),
            hi(&c),
            lo(&d),
            hi(&d),
            flags.join(" "),
        ]);
        rows.push(StepRow { n: s.n, k: s.k, l: s.l, bits: s.bits, checks });
    }
    out.text("refine.csv", &csv.finish())?;
    #[derive(Serialize)]
    struct R<'a> {
        steps_completed: usize,
        k: Vec<u64>,
        all_hold: bool,
        error: Option<String>,
        steps: &'a [StepRow],
    }
    let r = R { steps_completed: state.n(), k: state.k_seq(), all_hold: state.all_hold(), error: failure.as_ref().map(|e| e.to_string()), steps: &rows };
    out.json("refine.json", "refine", state.nonconformant, rc, &r)?;
    println!("refine: {} steps, k = {:?}, all conditions hold: {}", state.n(), state.k_seq(), state.all_hold());
    finish(&out, state.nonconformant);
    if let Some(e) = failure {
        return Err(e.into());
    }
    if !state.all_hold() {
        return Err(CliError::Certification("a required condition is not certified".into()));
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct FamilyArgs {
    /// Refinement state written by `refine`.
    #[arg(long)]
    state: PathBuf,
    #[arg(long, default_value_t = 2)]
    n: usize,
}

pub fn critical_family(rc: &RunConfig, a: FamilyArgs) -> Result<(), CliError> {
    let state = load_state(&a.state)?;
    let cfg = state_config(&state)?;
    let mut out = open(rc)?;
    let fam = cons::critical_family(&state, a.n, &cfg, rc.precision_bits)?;
    let mut csv = Csv::new(&[
        "a",
        "b",
        "step",
        "separation_lo",
        "separation_hi",
        "stated_bound_lo",
        "stated_bound_hi",
        "stated",
        "implied_bound_lo",
        "implied_bound_hi",
        "implied",
    ]);
    for p in &fam.separations {
        csv.row(&[
            p.a.to_string(),
            p.b.to_string(),
            p.step.to_string(),
            lo(&p.separation),
            hi(&p.separation),
            lo(&p.stated_bound),
            hi(&p.stated_bound),
            verdict_str(p.stated),
            lo(&p.implied_bound),
            hi(&p.implied_bound),
            verdict_str(p.implied),
        ]);
    }
    out.text("family.csv", &csv.finish())?;
    out.json("family.json", "critical-family", fam.nonconformant, rc, &fam)?;
    println!(
        "critical-family: {} values, all distinct: {}, stated bound holds: {}",
        fam.m_values.len(),
        fam.all_distinct,
        fam.stated_bound_holds
    );
    finish(&out, fam.nonconformant);
    if !fam.all_distinct || !fam.stated_bound_holds {
        return Err(CliError::Certification("separation bound not certified for every pair".into()));
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct CertificateArgs {
    #[arg(long)]
    state: PathBuf,
    /// Branch prefix over {-1, 1}, e.g. `-1` or `-1,1`.
    #[arg(long, allow_hyphen_values = true)]
    prefix: String,
    /// Sibling enumeration budget; defaults to k_n + 1.
    #[arg(long)]
    depth: Option<u64>,
}

pub fn certificate(rc: &RunConfig, a: CertificateArgs) -> Result<(), CliError> {
    let state = load_state(&a.state)?;
    let cfg = state_config(&state)?;
    let prefix = input::word(&a.prefix)?;
    let depth = a.depth.unwrap_or_else(|| state.k_seq().last().map_or(1, |k| k + 1));
    let mut out = open(rc)?;
    let c = cons::certificate_check(&state, &prefix, depth, &cfg, rc.precision_bits)?;
    out.json("certificate.json", "certificate", state.nonconformant, rc, &c)?;
    let status = serde_json::to_value(c.status).unwrap().as_str().unwrap().to_string();
    println!("certificate: {status}");
    finish(&out, state.nonconformant);
    if c.status != CertificateStatus::TouchingCertified {
        return Err(CliError::Certification(format!("prefix {prefix}: {status}")));
    }
    Ok(())
}
