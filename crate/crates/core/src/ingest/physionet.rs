//! Conversion of PhysioNet-2012-style records (`Time,Parameter,Value` rows,
//! one file per stay) and the outcome table into a [`TimeSeriesDataset`].

use std::collections::HashMap;
use std::path::Path;

use super::aggregate::{aggregate, Event};
use super::dataset::{Sample, TimeSeriesDataset};
use crate::error::{Error, Result};

/// Time-series channels of the 2012 challenge.
pub const TIME_SERIES_VARIABLES: [&str; 37] = [
    "Albumin", "ALP", "ALT", "AST", "Bilirubin", "BUN", "Cholesterol", "Creatinine",
    "DiasABP", "FiO2", "GCS", "Glucose", "HCO3", "HCT", "HR", "K", "Lactate", "Mg",
    "MAP", "MechVent", "Na", "NIDiasABP", "NIMAP", "NISysABP", "PaCO2", "PaO2", "pH",
    "Platelets", "RespRate", "SaO2", "SysABP", "Temp", "TroponinI", "TroponinT",
    "Urine", "WBC", "Weight",
];

/// Descriptors recorded at `00:00`, used as static features.
pub const STATIC_DESCRIPTORS: [&str; 5] = ["Age", "Gender", "Height", "ICUType", "Weight"];

/// Parsed record before gridding.
#[derive(Clone, Debug, PartialEq)]
pub struct RawRecord {
    pub id: String,
    pub events: Vec<Event>,
    /// Descriptor values; `-1` and absent descriptors become NaN.
    pub descriptors: Vec<f64>,
}

fn parse_hours(stamp: &str) -> Option<f64> {
    let (h, m) = stamp.split_once(':')?;
    Some(h.trim().parse::<f64>().ok()? + m.trim().parse::<f64>().ok()? / 60.0)
}

pub fn parse_record(text: &str) -> Result<RawRecord> {
    let var_index: HashMap<&str, usize> = TIME_SERIES_VARIABLES
        .iter()
        .enumerate()
        .map(|(i, v)| (*v, i))
        .collect();
    let mut id = String::new();
    let mut events = Vec::new();
    let mut descriptors = vec![f64::NAN; STATIC_DESCRIPTORS.len()];
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("Time")) {
            continue;
        }
        let mut parts = line.splitn(3, ',');
        let (Some(ts), Some(param), Some(val)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parse { line: i + 1, msg: format!("expected 3 fields: '{line}'") });
        };
        let time = parse_hours(ts)
            .ok_or_else(|| Error::Parse { line: i + 1, msg: format!("bad time '{ts}'") })?;
        let value: f64 = val
            .trim()
            .parse()
            .map_err(|_| Error::Parse { line: i + 1, msg: format!("bad value '{val}'") })?;
        let param = param.trim();
        if param == "RecordID" {
            id = format!("{}", value as i64);
            continue;
        }
        if time == 0.0 {
            if let Some(k) = STATIC_DESCRIPTORS.iter().position(|d| *d == param) {
                descriptors[k] = if value < 0.0 { f64::NAN } else { value };
                continue;
            }
        }
        if let Some(&var) = var_index.get(param) {
            if value >= 0.0 {
                events.push(Event { time, var, value });
            }
        }
    }
    Ok(RawRecord { id, events, descriptors })
}

/// `RecordID → In-hospital_death` from the outcome table.
pub fn parse_outcomes(text: &str) -> Result<HashMap<String, usize>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse { line: 1, msg: "empty outcome file".into() })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let find = |name: &str| {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| Error::Parse { line: 1, msg: format!("missing column {name}") })
    };
    let (id_col, y_col) = (find("RecordID")?, find("In-hospital_death")?);
    let mut out = HashMap::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || Error::Parse { line: i + 2, msg: format!("bad outcome row '{line}'") };
        let id = f.get(id_col).ok_or_else(bad)?.to_string();
        let y: usize = f.get(y_col).ok_or_else(bad)?.parse().map_err(|_| bad())?;
        out.insert(id, y);
    }
    Ok(out)
}

/// Grids one record at `resolution` hours. Missing descriptors become 0;
/// they are z-scored later alongside the other static features.
pub fn record_to_sample(record: &RawRecord, label: usize, resolution: f64) -> Result<Sample> {
    let g = aggregate(&record.events, TIME_SERIES_VARIABLES.len(), resolution)?;
    Ok(Sample {
        id: record.id.clone(),
        times: g.times,
        values: g.values,
        mask: g.mask,
        static_features: record
            .descriptors
            .iter()
            .map(|v| if v.is_finite() { *v } else { 0.0 })
            .collect(),
        label,
    })
}

/// Reads every `*.txt` record under `dir` that has an outcome entry.
pub fn load_directory(dir: impl AsRef<Path>, outcomes: &HashMap<String, usize>, resolution: f64) -> Result<TimeSeriesDataset> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    paths.sort();
    let mut ds = TimeSeriesDataset::new(
        TIME_SERIES_VARIABLES.iter().map(|s| s.to_string()).collect(),
        STATIC_DESCRIPTORS.len(),
        2,
    );
    for p in paths {
        let rec = parse_record(&std::fs::read_to_string(&p)?)?;
        if let Some(&label) = outcomes.get(&rec.id) {
            ds.push(record_to_sample(&rec, label, resolution)?)?;
        }
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    const RECORD: &str = "Time,Parameter,Value
00:00,RecordID,132539
00:00,Age,54
00:00,Gender,0
00:00,Height,-1
00:00,ICUType,4
00:00,Weight,-1
00:07,GCS,15
00:07,HR,73
00:37,HR,77
02:36,HR,80
02:37,Temp,36.5
";

    #[test]
    fn record_parsing() {
        let r = parse_record(RECORD).unwrap();
        assert_eq!(r.id, "132539");
        assert_eq!(r.descriptors[0], 54.0);
        assert!(r.descriptors[2].is_nan());
        assert_eq!(r.events.len(), 5);
    }

    #[test]
    fn hourly_and_decimal_grids() {
        let r = parse_record(RECORD).unwrap();
        let hr = TIME_SERIES_VARIABLES.iter().position(|v| *v == "HR").unwrap();
        let d = TIME_SERIES_VARIABLES.len();

        let hourly = record_to_sample(&r, 1, 1.0).unwrap();
        assert_eq!(hourly.times, vec![0.0, 2.0]);
        assert_eq!(hourly.values[hr], 75.0);

        let fine = record_to_sample(&r, 1, 0.1).unwrap();
        assert_eq!(fine.times, vec![0.1, 0.6, 2.6]);
        assert_eq!(fine.values[2 * d + hr], 80.0);
        assert_eq!(fine.static_features[2], 0.0);
    }

    #[test]
    fn outcome_table() {
        let o = parse_outcomes(
            "RecordID,SAPS-I,SOFA,Length_of_stay,Survival,In-hospital_death\n132539,6,1,5,-1,0\n132540,16,8,8,-1,1\n",
        )
        .unwrap();
        assert_eq!(o["132539"], 0);
        assert_eq!(o["132540"], 1);
    }
}
