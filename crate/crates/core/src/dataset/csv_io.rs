//! Long-format CSV ingestion and emission.
//!
//! UTF-8 with a header row; columns are addressed by name. A missing response
//! is an empty field or `NA` and produces no observation for that row.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::Dataset;

/// Column names used when reading a long-format CSV.
#[derive(Debug, Clone)]
pub struct LongColumns<'a> {
    pub id: &'a str,
    pub time: &'a str,
    pub response: &'a str,
    pub group: Option<&'a str>,
}

fn is_missing(field: &str) -> bool {
    let f = field.trim();
    f.is_empty() || f == "NA"
}

/// Read a long-format CSV file into a [`Dataset`].
pub fn load_long_csv(
    path: impl AsRef<Path>,
    id_col: &str,
    time_col: &str,
    response_col: &str,
    group_col: Option<&str>,
) -> Result<Dataset> {
    let file = File::open(path)?;
    read_long_csv(
        file,
        &LongColumns {
            id: id_col,
            time: time_col,
            response: response_col,
            group: group_col,
        },
    )
}

/// Read a long-format CSV from any reader.
pub fn read_long_csv<R: Read>(reader: R, cols: &LongColumns<'_>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let id_idx = find(cols.id)?;
    let time_idx = find(cols.time)?;
    let resp_idx = find(cols.response)?;
    let group_idx = cols.group.map(find).transpose()?;

    let mut rows: Vec<(String, f64, f64)> = Vec::new();
    let mut truth: BTreeMap<String, String> = BTreeMap::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        // Header is line 1, so the first data record is line 2.
        let line = i + 2;
        let parse_num = |idx: usize, column: &str| -> Result<f64> {
            let raw = record.get(idx).unwrap_or("");
            raw.parse::<f64>().map_err(|_| Error::Parse {
                row: line,
                column: column.to_string(),
                value: raw.to_string(),
            })
        };
        let id = record.get(id_idx).unwrap_or("").to_string();
        if id.is_empty() {
            return Err(Error::Parse {
                row: line,
                column: cols.id.to_string(),
                value: String::new(),
            });
        }
        let time = parse_num(time_idx, cols.time)?;
        let resp_raw = record.get(resp_idx).unwrap_or("");
        if let Some(gi) = group_idx {
            let label = record.get(gi).unwrap_or("");
            if is_missing(label) {
                return Err(Error::Parse {
                    row: line,
                    column: cols.group.unwrap().to_string(),
                    value: label.to_string(),
                });
            }
            match truth.get(&id) {
                Some(existing) if existing != label => {
                    return Err(Error::Shape(format!(
                        "trajectory `{id}` has conflicting group labels `{existing}` and `{label}`"
                    )));
                }
                _ => {
                    truth.insert(id.clone(), label.to_string());
                }
            }
        }
        if is_missing(resp_raw) {
            continue;
        }
        let value = parse_num(resp_idx, cols.response)?;
        rows.push((id, time, value));
    }

    // Ids that only ever had missing responses carry no observations and are
    // dropped together with their truth entry.
    if group_idx.is_some() {
        let mut ds = Dataset::from_observations(rows, None)?;
        truth.retain(|id, _| ds.index_of(id).is_some());
        ds = ds.with_truth(super::GroundTruth::new(truth))?;
        Ok(ds)
    } else {
        Dataset::from_observations(rows, None)
    }
}

/// Write a dataset as long-format CSV, optionally with a group column.
pub fn write_long_csv<W: Write>(
    ds: &Dataset,
    mut writer: W,
    id_col: &str,
    time_col: &str,
    response_col: &str,
    group_col: Option<&str>,
) -> Result<()> {
    match group_col {
        Some(g) => writeln!(writer, "{id_col},{time_col},{response_col},{g}")?,
        None => writeln!(writer, "{id_col},{time_col},{response_col}")?,
    }
    for (id, t, v) in ds.observations() {
        match group_col {
            Some(_) => {
                let label = ds
                    .truth()
                    .and_then(|tr| tr.label_of(id))
                    .unwrap_or_default();
                writeln!(writer, "{id},{t},{v},{label}")?;
            }
            None => writeln!(writer, "{id},{t},{v}")?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cols<'a>() -> LongColumns<'a> {
        LongColumns {
            id: "Patient",
            time: "Week",
            response: "UsageHours",
            group: None,
        }
    }

    #[test]
    fn reads_one_patient_six_weeks() {
        let csv = "\
Patient,Week,UsageHours,Group
1,1,6.298703,Adherers
1,2,5.916080,Adherers
1,3,5.022241,Adherers
1,4,5.788624,Adherers
1,5,4.758154,Adherers
1,6,4.222821,Adherers
";
        let ds = read_long_csv(
            csv.as_bytes(),
            &LongColumns {
                group: Some("Group"),
                ..cols()
            },
        )
        .unwrap();
        assert_eq!(ds.n_trajectories(), 1);
        assert_eq!(ds.trajectories()[0].len(), 6);
        assert_eq!(ds.truth().unwrap().label_of("1"), Some("Adherers"));
    }

    #[test]
    fn header_only_is_a_valid_empty_dataset() {
        let ds = read_long_csv("Patient,Week,UsageHours\n".as_bytes(), &cols()).unwrap();
        assert_eq!(ds.n_trajectories(), 0);
        assert_eq!(ds.n_observations(), 0);
    }

    #[test]
    fn shuffled_rows_produce_identical_dataset() {
        let sorted = "Patient,Week,UsageHours\n1,1,2.0\n1,2,3.0\n2,1,4.0\n";
        let shuffled = "Patient,Week,UsageHours\n2,1,4.0\n1,2,3.0\n1,1,2.0\n";
        let a = read_long_csv(sorted.as_bytes(), &cols()).unwrap();
        let b = read_long_csv(shuffled.as_bytes(), &cols()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn missing_column_is_a_schema_error() {
        let err = read_long_csv("Patient,Week\n1,1\n".as_bytes(), &cols()).unwrap_err();
        match err {
            Error::MissingColumn(c) => assert_eq!(c, "UsageHours"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn bad_number_reports_row() {
        let csv = "Patient,Week,UsageHours\n1,1,2.0\n1,2,oops\n";
        match read_long_csv(csv.as_bytes(), &cols()).unwrap_err() {
            Error::Parse { row, column, value } => {
                assert_eq!(row, 3);
                assert_eq!(column, "UsageHours");
                assert_eq!(value, "oops");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn duplicate_id_time_is_rejected() {
        let csv = "Patient,Week,UsageHours\n1,1,2.0\n1,1,2.5\n";
        let err = read_long_csv(csv.as_bytes(), &cols()).unwrap_err();
        assert!(matches!(err, Error::DuplicateObservation { .. }));
    }

    #[test]
    fn missing_responses_are_skipped() {
        let csv = "Patient,Week,UsageHours\n1,1,2.0\n1,2,NA\n1,3,\n1,4,3.0\n";
        let ds = read_long_csv(csv.as_bytes(), &cols()).unwrap();
        assert_eq!(ds.trajectories()[0].len(), 2);
    }

    #[test]
    fn write_then_read_is_a_fixpoint() {
        let csv = "Patient,Week,UsageHours,Group\n1,1,2.25,A\n1,2,3.5,A\n2,1,4.125,B\n";
        let ds = read_long_csv(
            csv.as_bytes(),
            &LongColumns {
                group: Some("Group"),
                ..cols()
            },
        )
        .unwrap();
        let mut buf = Vec::new();
        write_long_csv(&ds, &mut buf, "Patient", "Week", "UsageHours", Some("Group")).unwrap();
        let again = read_long_csv(
            buf.as_slice(),
            &LongColumns {
                group: Some("Group"),
                ..cols()
            },
        )
        .unwrap();
        assert_eq!(ds, again);
    }
}
