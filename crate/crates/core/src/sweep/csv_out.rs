use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::optimizer::Objective;

use super::TradeoffCurve;

pub const CSV_HEADER: [&str; 10] = [
    "sweep_var",
    "sweep_value",
    "objective",
    "M",
    "gamma",
    "zeta",
    "eta_bits_per_joule",
    "f_pa",
    "regime",
    "status",
];

/// Nine significant digits in scientific notation.
pub fn format_float(x: f64) -> String {
    format!("{x:.8e}")
}

fn format_antennas(objective: Objective, m: f64) -> String {
    match objective {
        Objective::Relaxed => format_float(m),
        Objective::Exact | Objective::Bound => format!("{}", m as u64),
    }
}

fn csv_err(path: &Path, source: csv::Error) -> Error {
    Error::Csv {
        path: path.to_owned(),
        source,
    }
}

/// The CSV document for `curve`: one row per grid value per objective.
pub fn render_csv(curve: &TradeoffCurve) -> Result<Vec<u8>> {
    let here = Path::new("<memory>");
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).map_err(|e| csv_err(here, e))?;
    for point in &curve.points {
        let regime = match &point.regime {
            Ok(report) => report.label(),
            Err(_) => "unknown".to_owned(),
        };
        for (objective, outcome) in &point.outcomes {
            let head = [
                curve.variable.label().to_owned(),
                format_float(point.sweep_value),
                objective.to_string(),
            ];
            let body = match outcome {
                Ok(r) => [
                    format_antennas(r.objective, r.antennas),
                    format_float(r.gamma),
                    format_float(r.zeta),
                    format_float(r.eta),
                    format_float(r.breakdown.pa_fraction),
                    regime.clone(),
                    "ok".to_owned(),
                ],
                Err(msg) => [
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    regime.clone(),
                    format!("error: {msg}"),
                ],
            };
            w.write_record(head.iter().chain(body.iter()))
                .map_err(|e| csv_err(here, e))?;
        }
    }
    w.into_inner().map_err(|e| Error::Io {
        path: here.to_owned(),
        source: e.into_error(),
    })
}

/// Writes `curve` to `path`. An empty curve is rejected before touching the
/// filesystem.
pub fn emit_csv(curve: &TradeoffCurve, path: &Path) -> Result<()> {
    if curve.is_empty() {
        return Err(Error::InvalidInput {
            name: "curve",
            value: 0.0,
            reason: "must have at least one point",
        });
    }
    let bytes = render_csv(curve)?;
    std::fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

/// One data row as read back from disk.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct CsvRecord {
    pub sweep_var: String,
    pub sweep_value: f64,
    pub objective: String,
    #[serde(rename = "M")]
    pub antennas: Option<f64>,
    pub gamma: Option<f64>,
    pub zeta: Option<f64>,
    pub eta_bits_per_joule: Option<f64>,
    pub f_pa: Option<f64>,
    pub regime: String,
    pub status: String,
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Config(format!(
            "{}: unexpected header {:?}",
            path.display(),
            header
        )));
    }
    r.deserialize()
        .collect::<std::result::Result<Vec<CsvRecord>, _>>()
        .map_err(|e| csv_err(path, e))
}
