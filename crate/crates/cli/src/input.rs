//! Parsing of command-line values: IFS selections, points, words, angles.

use std::path::Path;

use critval_core::construction::{build_kalpha, build_pm1, KAlphaConfig};
use critval_core::geometry::{pt_rational, Pt};
use critval_core::ifs::{cantor, rotation_pair, sierpinski, unit_segment, Ifs, IfsSpec, Word};
use critval_core::precision::{parse_rational, AngleRep};
use num_rational::BigRational;
use serde::Serialize;

use crate::CliError;

/// A resolved IFS with the spec it came from, for echoing into artifacts.
#[derive(Debug)]
pub struct Selected {
    pub ifs: Ifs,
    pub spec: IfsSpec,
    pub nonconformant: bool,
}

#[derive(Serialize)]
pub struct IfsEcho<'a> {
    pub source: &'a str,
    pub spec: &'a IfsSpec,
}

const BUILTINS: &str = "cantor, unit-segment, sierpinski, rotation:<ratio>:<angle>, kalpha:<q>:<angle>, pm1:<q>:<angle>";

pub fn rational(s: &str) -> Result<BigRational, CliError> {
    parse_rational(s).map_err(|e| CliError::Config(format!("{s:?}: {e}")))
}

pub fn angle(s: &str) -> Result<AngleRep, CliError> {
    AngleRep::parse(s).map_err(|e| CliError::Config(format!("{s:?}: {e}")))
}

pub fn word(s: &str) -> Result<Word, CliError> {
    s.parse::<Word>().map_err(CliError::Config)
}

pub fn point(s: &str, bits: u32) -> Result<Pt, CliError> {
    let (x, y) = s.split_once(',').ok_or_else(|| CliError::Config(format!("point {s:?} is not x,y")))?;
    Ok(pt_rational(&rational(x)?, &rational(y)?, bits))
}

pub fn kalpha(q: &str, alpha: &str) -> Result<KAlphaConfig, CliError> {
    KAlphaConfig::new(rational(q)?, angle(alpha)?).map_err(|e| CliError::Config(e.to_string()))
}

/// A built-in family name or a path to a JSON IFS spec.
pub fn select(name: &str) -> Result<Selected, CliError> {
    let plain = |ifs: Ifs| Selected { spec: IfsSpec::from_ifs(&ifs), ifs, nonconformant: false };
    let parts: Vec<&str> = name.split(':').collect();
    match parts.as_slice() {
        ["cantor"] => Ok(plain(cantor())),
        ["unit-segment"] => Ok(plain(unit_segment())),
        ["sierpinski"] => Ok(plain(sierpinski())),
        ["rotation", r, a] => Ok(plain(rotation_pair(rational(r)?, angle(a)?))),
        ["kalpha", q, a] | ["pm1", q, a] => {
            let cfg = kalpha(q, a)?;
            let ifs = if parts[0] == "kalpha" { build_kalpha(&cfg) } else { build_pm1(&cfg) };
            Ok(Selected { spec: IfsSpec::from_ifs(&ifs), ifs, nonconformant: !cfg.conformant() })
        }
        _ if Path::new(name).is_file() => {
            let text = std::fs::read_to_string(name)?;
            let spec: IfsSpec = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{name}: {e}")))?;
            let ifs = spec.build().map_err(|e| CliError::Config(format!("{name}: {e}")))?;
            Ok(Selected { ifs, spec, nonconformant: false })
        }
        _ => Err(CliError::Config(format!("{name:?} is neither a file nor one of: {BUILTINS}"))),
    }
}
