pub mod calibrate;
pub mod equi_check;
pub mod evaluate;
pub mod localize;
pub mod simulate;

use std::path::Path;

use fishloc_core::localization::AnchorStrategy;

use crate::error::{io_error, CliError};

/// Write a report to `path`, or to stdout.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| io_error(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn strategy(flag: Option<AnchorStrategy>, config: Option<&str>) -> Result<AnchorStrategy, CliError> {
    match (flag, config) {
        (Some(s), _) => Ok(s),
        (None, Some(name)) => name.parse().map_err(CliError::Validation),
        (None, None) => Ok(AnchorStrategy::default()),
    }
}

pub fn pretty<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

pub fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
