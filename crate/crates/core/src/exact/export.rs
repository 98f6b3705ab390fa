use std::io::Write;

use serde::{Deserialize, Serialize};

use super::LatticePMF;
use crate::error::{Error, Result};
use crate::numerics::LogReal;

/// Version line written first in every CSV file.
pub const CSV_SCHEMA_LINE: &str = "# schema=1";

/// Writes the schema line, then `x,log_prob,prob` rows. Zero masses are written as `-inf,0`.
pub fn pmf_to_csv<W: Write>(pmf: &LatticePMF, mut out: W) -> Result<()> {
    writeln!(out, "{CSV_SCHEMA_LINE}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "log_prob", "prob"])?;
    for (i, m) in pmf.masses.iter().enumerate() {
        let x = pmf.offset + i as i64;
        w.write_record([x.to_string(), format!("{:.16e}", m.ln()), format!("{:.16e}", m.to_linear())])?;
    }
    w.flush()?;
    Ok(())
}

/// JSON form; masses are natural logs with `null` for zero.
#[derive(Serialize, Deserialize)]
struct PmfDoc {
    offset: i64,
    masses: Vec<Option<f64>>,
    truncated: bool,
    truncation_bound: Option<f64>,
}

fn ln_or_null(v: LogReal) -> Option<f64> {
    (!v.is_zero()).then(|| v.ln())
}

fn from_ln_or_null(v: Option<f64>) -> LogReal {
    v.map_or(LogReal::ZERO, LogReal::from_ln)
}

pub fn pmf_to_json(pmf: &LatticePMF) -> Result<String> {
    let doc = PmfDoc {
        offset: pmf.offset,
        masses: pmf.masses.iter().copied().map(ln_or_null).collect(),
        truncated: pmf.truncated,
        truncation_bound: ln_or_null(pmf.truncation_mass_bound),
    };
    Ok(serde_json::to_string(&doc)?)
}

pub fn pmf_from_json(s: &str) -> Result<LatticePMF> {
    let doc: PmfDoc = serde_json::from_str(s)?;
    if doc.masses.iter().flatten().any(|v| v.is_nan() || *v > 1e-9) {
        return Err(Error::param("log masses must be <= 0"));
    }
    Ok(LatticePMF {
        offset: doc.offset,
        masses: doc.masses.into_iter().map(from_ln_or_null).collect(),
        truncated: doc.truncated,
        truncation_mass_bound: from_ln_or_null(doc.truncation_bound),
    })
}
