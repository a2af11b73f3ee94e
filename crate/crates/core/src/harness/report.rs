use std::io::Write;

use thiserror::Error;

use super::campaign::CampaignResult;
use super::config::OutputFormat;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub const CSV_HEADER: [&str; 7] = ["solver", "qos_mbps", "mean", "max", "min", "std", "samples"];

/// Writes the report. CSV has one row per (solver, QoS group) with rates
/// in Mbit/s to four decimals; groups without samples leave the rate
/// cells empty. JSON is the full result, per-trial records included,
/// in bit/s.
pub fn emit_report<W: Write>(r: &CampaignResult, format: OutputFormat, mut w: W) -> Result<(), ReportError> {
    match format {
        OutputFormat::Csv => {
            let mut out = csv::Writer::from_writer(w);
            out.write_record(CSV_HEADER)?;
            for s in &r.solvers {
                for g in &s.groups {
                    let mbps = |x: f64| format!("{:.4}", x / 1e6);
                    let (mean, max, min, std) = match g.stats {
                        Some(st) => (mbps(st.mean), mbps(st.max), mbps(st.min), mbps(st.std)),
                        None => Default::default(),
                    };
                    out.write_record([
                        s.solver.as_str().to_string(),
                        mbps(g.qos_bps),
                        mean,
                        max,
                        min,
                        std,
                        g.sample_count().to_string(),
                    ])?;
                }
            }
            out.flush()?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut w, r)?;
            w.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn render_report(r: &CampaignResult, format: OutputFormat) -> Result<String, ReportError> {
    let mut buf = Vec::new();
    emit_report(r, format, &mut buf)?;
    Ok(String::from_utf8(buf).expect("reports are UTF-8"))
}
