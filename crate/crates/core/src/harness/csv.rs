use std::io::Write;
use std::path::Path;

use crate::scenarios::{sort_rows, ScenarioResult};

use super::HarnessError;

pub const CSV_HEADER: &str = "scenario,length_km,trial,metric,value_uncalibrated,value_calibrated,iterations_used,shots,seed";

/// Fixed-point rendering with 9 significant digits.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v.is_finite() {
            "0.00000000".into()
        } else {
            v.to_string()
        };
    }
    // round in scientific form first so carries move the exponent
    let sci = format!("{v:.8e}");
    let exp: i32 = sci
        .rsplit('e')
        .next()
        .and_then(|e| e.parse().ok())
        .unwrap_or(0);
    let decimals = (8 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

/// CSV text for `result`, rows sorted by length, trial, metric and shots.
pub fn to_csv_string(result: &ScenarioResult) -> String {
    let mut rows = result.rows.clone();
    sort_rows(&mut rows);
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            result.scenario,
            format_sig9(r.length_km),
            r.trial,
            r.metric,
            format_sig9(r.value_uncalibrated),
            format_sig9(r.value_calibrated),
            r.iterations_used,
            r.shots,
            r.seed
        ));
    }
    out
}

/// Writes the CSV through a temporary file in the destination directory
/// and renames it into place.
pub fn write_csv(result: &ScenarioResult, path: &Path) -> Result<(), HarnessError> {
    if result.rows.is_empty() {
        return Err(HarnessError::Run(crate::Error::Empty("result rows")));
    }
    let io = |source: std::io::Error| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(to_csv_string(result).as_bytes())
        .map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::ResultRow;

    fn row(l: f64, trial: usize, v: f64) -> ResultRow {
        ResultRow {
            length_km: l,
            trial,
            metric: "qber".into(),
            value_uncalibrated: v,
            value_calibrated: v / 2.0,
            iterations_used: 3,
            shots: 10,
            seed: 42,
        }
    }

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_sig9(0.43766), "0.437660000");
        assert_eq!(format_sig9(50.0), "50.0000000");
        assert_eq!(format_sig9(0.0006), "0.000600000000");
        assert_eq!(format_sig9(0.0), "0.00000000");
        assert_eq!(format_sig9(9.9999999999), "10.0000000");
        assert_eq!(format_sig9(-0.25), "-0.250000000");
        assert_eq!(format_sig9(123456789.0), "123456789");
    }

    #[test]
    fn single_row_is_two_lines() {
        let r = ScenarioResult {
            scenario: "bb84".into(),
            rows: vec![row(10.0, 0, 0.5)],
        };
        let s = to_csv_string(&r);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(
            lines[1],
            "bb84,10.0000000,0,qber,0.500000000,0.250000000,3,10,42"
        );
    }

    #[test]
    fn rows_are_sorted_on_output() {
        let r = ScenarioResult {
            scenario: "bb84".into(),
            rows: vec![row(20.0, 0, 0.1), row(10.0, 1, 0.2), row(10.0, 0, 0.3)],
        };
        let s = to_csv_string(&r);
        let keys: Vec<&str> = s.lines().skip(1).map(|l| &l[5..17]).collect();
        assert_eq!(keys, ["10.0000000,0", "10.0000000,1", "20.0000000,0"]);
    }

    #[test]
    fn writes_atomically_and_rejects_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let empty = ScenarioResult {
            scenario: "bb84".into(),
            rows: vec![],
        };
        assert!(write_csv(&empty, &path).is_err());
        assert!(!path.exists());
        let r = ScenarioResult {
            scenario: "bb84".into(),
            rows: vec![row(10.0, 0, 0.5)],
        };
        write_csv(&r, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), to_csv_string(&r));
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
