//! CSV result tables with the schema `n,property,key,value`.

use std::io::Write;
use std::path::Path;

use spinmc_core::analyze::PropertyReport;
use spinmc_core::montecarlo::{Estimate, SimEstimates};

use crate::{io_err, Error, Result};

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub n: u32,
    pub property: String,
    pub key: String,
    pub value: f64,
}

pub fn report_rows(r: &PropertyReport) -> Vec<Row> {
    r.rows().into_iter().map(|(property, key, value)| Row { n: r.n, property: property.into(), key, value }).collect()
}

/// Estimates as rows, each followed by a `<property>_se` row.
pub fn simulation_rows(n: u32, e: &SimEstimates) -> Vec<Row> {
    let mut rows = Vec::new();
    let mut push = |property: &str, key: String, est: &Estimate| {
        rows.push(Row { n, property: property.into(), key: key.clone(), value: est.mean });
        rows.push(Row { n, property: format!("{property}_se"), key, value: est.se });
    };
    for (k, est) in e.ncrit_histogram.iter().enumerate() {
        push("ncrit", k.to_string(), est);
    }
    push("p1_spinning", String::new(), &e.p1_spinning);
    push("any_spinning", String::new(), &e.any_spinning);
    for (k, est) in &e.distance_spectrum {
        push("distance", k.to_string(), est);
    }
    if let Some(est) = &e.p_acquire_no_wait {
        push("p_acquire_no_wait", String::new(), est);
    }
    if let Some(est) = &e.expected_wait {
        push("expected_wait", String::new(), est);
    }
    if let Some(est) = &e.wait_quantile_95 {
        push("wait_quantile_95", String::new(), est);
    }
    rows
}

pub fn write_rows<W: Write>(rows: &[Row], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["n", "property", "key", "value"])?;
    for r in rows {
        out.write_record([r.n.to_string(), r.property.clone(), r.key.clone(), r.value.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_csv(rows: &[Row], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(io_err(path))?;
    write_rows(rows, std::io::BufWriter::new(f)).map_err(|source| Error::Csv { path: path.to_path_buf(), source })
}
