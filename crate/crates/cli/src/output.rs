use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::Failure;

/// 17 significant digits, enough to round-trip an `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_json<T: serde::Serialize>(w: &mut dyn Write, value: &T) -> Result<(), Failure> {
    serde_json::to_writer_pretty(&mut *w, value).map_err(|e| Failure::Io(e.into()))?;
    writeln!(w)?;
    Ok(())
}
