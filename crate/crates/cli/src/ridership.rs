//! Monthly ridership series: CSV with header `month,boardings`, months as
//! `YYYY-MM`, strictly consecutive.

use std::io::Read;
use std::path::Path;

use crate::config::parse_month;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct RidershipSeries {
    /// `(year, month)` per row.
    pub months: Vec<(i32, u32)>,
    pub boardings: Vec<f64>,
}

impl RidershipSeries {
    pub fn len(&self) -> usize {
        self.boardings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boardings.is_empty()
    }
}

fn month_index((y, m): (i32, u32)) -> i64 {
    i64::from(y) * 12 + i64::from(m) - 1
}

pub fn load_ridership(path: &Path) -> Result<RidershipSeries, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_ridership(file)
}

/// Parses and validates the series, listing every bad row. Row numbers count
/// the header as row 1.
pub fn read_ridership(input: impl Read) -> Result<RidershipSeries, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let mut problems = Vec::new();
    match reader.headers() {
        Ok(h) if h.iter().eq(["month", "boardings"]) => {}
        Ok(h) => problems.push(format!(
            "row 1: expected header month,boardings, found {}",
            h.iter().collect::<Vec<_>>().join(",")
        )),
        Err(e) => return Err(CliError::Validation(vec![format!("row 1: {e}")])),
    }
    let mut series = RidershipSeries {
        months: Vec::new(),
        boardings: Vec::new(),
    };
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                problems.push(format!("row {row}: {e}"));
                continue;
            }
        };
        if record.len() != 2 {
            problems.push(format!(
                "row {row}: expected 2 fields, found {}",
                record.len()
            ));
            continue;
        }
        let Some(month) = parse_month(&record[0]) else {
            problems.push(format!("row {row}: month {:?} is not YYYY-MM", &record[0]));
            continue;
        };
        let boardings: f64 = match record[1].parse() {
            Ok(b) => b,
            Err(_) => {
                problems.push(format!(
                    "row {row}: boardings {:?} is not a number",
                    &record[1]
                ));
                continue;
            }
        };
        if !(boardings > 0.0 && boardings.is_finite()) {
            problems.push(format!(
                "row {row}: boardings must be positive, got {boardings}"
            ));
        }
        if let Some(&prev) = series.months.last() {
            let step = month_index(month) - month_index(prev);
            match step {
                1 => {}
                0 => problems.push(format!("row {row}: duplicate month {}", &record[0])),
                s if s < 0 => {
                    problems.push(format!("row {row}: month {} is out of order", &record[0]))
                }
                s => problems.push(format!(
                    "row {row}: gap of {} months before {}",
                    s - 1,
                    &record[0]
                )),
            }
        }
        series.months.push(month);
        series.boardings.push(boardings);
    }
    if series.is_empty() && problems.is_empty() {
        problems.push("no data rows".into());
    }
    if problems.is_empty() {
        Ok(series)
    } else {
        Err(CliError::Validation(problems))
    }
}
