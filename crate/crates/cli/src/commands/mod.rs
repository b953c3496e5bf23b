mod construct;
mod geom;

pub use construct::*;
pub use geom::*;

use crate::report::Out;
use crate::{CliError, RunConfig};

fn ifs_arg(rc: &RunConfig, flag: &Option<String>) -> Result<String, CliError> {
    flag.clone()
        .or_else(|| rc.ifs_default.clone())
        .ok_or_else(|| CliError::Config("no IFS given: pass --ifs or set `ifs` in the config file".into()))
}

fn open(rc: &RunConfig) -> Result<Out, CliError> {
    Ok(Out::new(rc.out.clone())?)
}

fn finish(out: &Out, nonconformant: bool) {
    if nonconformant {
        println!("NONCONFORMANT: q is above 1/1000");
    }
    for p in &out.written {
        if let Some(name) = p.file_name() {
            println!("wrote {}", name.to_string_lossy());
        }
    }
}
