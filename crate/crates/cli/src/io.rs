//! CSV files for observations, hidden paths and Monte Carlo samples.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use ssm_mirfs::ObservationSeq;

pub fn read_observations(path: &Path) -> Result<ObservationSeq> {
    let file = File::open(path).with_context(|| format!("opening data file {}", path.display()))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let headers = rdr
        .headers()
        .with_context(|| format!("reading header of {}", path.display()))?
        .clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        bail!("data file {} is empty", path.display());
    }
    for (i, h) in headers.iter().enumerate() {
        if h.trim() != format!("xi_{i}") {
            bail!(
                "{}: column {i} is named `{h}`, expected `xi_{i}`",
                path.display()
            );
        }
    }
    let dim = headers.len();
    let mut flat = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: row {}", path.display(), line + 1))?;
        for field in rec.iter() {
            let v: f64 = field.trim().parse().with_context(|| {
                format!(
                    "{}: row {}: `{field}` is not a number",
                    path.display(),
                    line + 1
                )
            })?;
            flat.push(v);
        }
    }
    if flat.is_empty() {
        bail!("data file {} has no rows", path.display());
    }
    ObservationSeq::from_flat(flat, dim).with_context(|| format!("loading {}", path.display()))
}

pub fn write_observations(path: &Path, obs: &ObservationSeq) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record((0..obs.dim()).map(|i| format!("xi_{i}")))?;
    for row in obs.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_hidden(path: &Path, hidden: &[f64]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["x"])?;
    for v in hidden {
        w.write_record([v.to_string()])?;
    }
    w.flush()
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    f.write_all(text.as_bytes())
        .with_context(|| format!("writing {}", path.display()))
}
