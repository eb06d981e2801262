//! Sweep CSV: `ph,temp_c[,<source>...],<probe>,converged,iterations`.
//!
//! Numbers carry 9 significant digits, rows end in LF, and `ph` is empty
//! for circuits without an ISFET. A failed point has `nan` in the probe
//! column and `false` under `converged`.

use std::fmt;
use std::io;

use isfetsim_core::analysis::{Sample, SweepResult};
use isfetsim_core::netlist::SweepVariable;

/// Format with 9 significant digits.
pub fn sig9(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.8e}")
    }
}

pub fn write_sweep<W: io::Write>(result: &SweepResult, out: W) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let sources: Vec<(usize, String)> = result
        .axes
        .iter()
        .enumerate()
        .filter_map(|(k, a)| match &a.variable {
            SweepVariable::Source(name) => Some((k, name.clone())),
            _ => None,
        })
        .collect();

    let mut header = vec!["ph".to_string(), "temp_c".to_string()];
    header.extend(sources.iter().map(|(_, n)| n.clone()));
    header.extend([
        result.probe_label.clone(),
        "converged".into(),
        "iterations".into(),
    ]);
    w.write_record(&header)?;

    for p in &result.points {
        let mut row = vec![p.ph.map(sig9).unwrap_or_default(), sig9(p.temp_c)];
        row.extend(sources.iter().map(|&(k, _)| sig9(p.coords[k])));
        row.extend([
            sig9(p.vo),
            p.converged.to_string(),
            p.iterations.to_string(),
        ]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvError {
    /// 1-based data row, if the problem is in a row.
    pub row: Option<usize>,
    pub message: String,
}

impl fmt::Display for CsvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.row {
            Some(r) => write!(f, "row {r}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for CsvError {}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub probe: String,
    pub samples: Vec<Sample>,
}

fn header_error(message: impl Into<String>) -> CsvError {
    CsvError {
        row: None,
        message: message.into(),
    }
}

/// Read a sweep CSV back into metric samples.
pub fn read_sweep<R: io::Read>(input: R) -> Result<SweepTable, CsvError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let headers = r
        .headers()
        .map_err(|e| header_error(format!("cannot read header: {e}")))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| header_error(format!("missing `{name}` column")))
    };
    let (ph, temp, conv, iters) = (
        col("ph")?,
        col("temp_c")?,
        col("converged")?,
        col("iterations")?,
    );
    if conv == 0 || conv - 1 <= temp.max(ph) {
        return Err(header_error("no probe column before `converged`"));
    }
    let probe = conv - 1;

    let mut samples = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let row = i + 1;
        let bad = |message: String| CsvError {
            row: Some(row),
            message,
        };
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.len() != headers.len() {
            return Err(bad(format!(
                "expected {} fields, found {}",
                headers.len(),
                rec.len()
            )));
        }
        let num = |k: usize| -> Result<f64, CsvError> {
            let s = rec[k].trim();
            s.parse::<f64>()
                .map_err(|_| bad(format!("`{}` is not a number in column {}", s, &headers[k])))
        };
        let converged = match rec[conv].trim() {
            "true" | "1" => true,
            "false" | "0" => false,
            other => return Err(bad(format!("`{other}` is not a converged flag"))),
        };
        rec[iters]
            .trim()
            .parse::<usize>()
            .map_err(|_| bad(format!("`{}` is not an iteration count", &rec[iters])))?;
        let ph = if rec[ph].trim().is_empty() {
            None
        } else {
            Some(num(ph)?)
        };
        let vo = num(probe)?;
        if converged && !vo.is_finite() {
            return Err(bad("converged point has a non-finite probe value".into()));
        }
        samples.push(Sample {
            ph,
            temp_c: num(temp)?,
            vo,
            converged,
        });
    }
    Ok(SweepTable {
        probe: headers[probe].to_string(),
        samples,
    })
}
