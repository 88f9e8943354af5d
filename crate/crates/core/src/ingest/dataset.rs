use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One multivariate series. `values` and `mask` are `len() × n_vars`,
/// row-major by time step. Unobserved values are stored as NaN.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub id: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
    pub static_features: Vec<f64>,
    pub label: usize,
}

impl Sample {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Observed value at `(t, d)`, if any.
    pub fn observed(&self, t: usize, d: usize, n_vars: usize) -> Option<f64> {
        let i = t * n_vars + d;
        self.mask[i].then_some(self.values[i])
    }
}

/// A labelled collection of samples sharing a variable layout.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesDataset {
    pub variables: Vec<String>,
    pub n_static: usize,
    pub n_classes: usize,
    pub samples: Vec<Sample>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    variables: Vec<String>,
    n_static: usize,
    n_classes: usize,
}

#[derive(Serialize, Deserialize)]
struct Record {
    id: String,
    times: Vec<f64>,
    values: Vec<Vec<Option<f64>>>,
    #[serde(rename = "static")]
    static_features: Vec<f64>,
    label: usize,
}

pub const FORMAT_VERSION: u32 = 1;

impl TimeSeriesDataset {
    pub fn new(variables: Vec<String>, n_static: usize, n_classes: usize) -> Self {
        Self {
            variables,
            n_static,
            n_classes,
            samples: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn max_len(&self) -> usize {
        self.samples.iter().map(Sample::len).max().unwrap_or(0)
    }

    /// Per-class sample counts, indexed by label.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for s in &self.samples {
            counts[s.label] += 1;
        }
        counts
    }

    /// Copy holding the samples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            variables: self.variables.clone(),
            n_static: self.n_static,
            n_classes: self.n_classes,
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }

    /// Fraction of observed entries over all samples and variables.
    pub fn observed_fraction(&self) -> f64 {
        let (obs, total) = self.samples.iter().fold((0usize, 0usize), |(o, t), s| {
            (o + s.mask.iter().filter(|&&m| m).count(), t + s.mask.len())
        });
        if total == 0 {
            0.0
        } else {
            obs as f64 / total as f64
        }
    }

    pub fn validate_sample(&self, s: &Sample) -> Result<()> {
        let d = self.n_vars();
        let t = s.len();
        if s.values.len() != t * d || s.mask.len() != t * d {
            return Err(Error::Validation(format!(
                "sample '{}': expected {} values, got {} values / {} mask entries",
                s.id,
                t * d,
                s.values.len(),
                s.mask.len()
            )));
        }
        if s.static_features.len() != self.n_static {
            return Err(Error::Validation(format!(
                "sample '{}': expected {} static features, got {}",
                s.id,
                self.n_static,
                s.static_features.len()
            )));
        }
        if s.label >= self.n_classes {
            return Err(Error::Validation(format!(
                "sample '{}': label {} outside 0..{}",
                s.id, s.label, self.n_classes
            )));
        }
        if let Some(w) = s.times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Validation(format!(
                "sample '{}': times not strictly increasing at step {}",
                s.id,
                w + 1
            )));
        }
        if s.times.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("sample '{}': non-finite time", s.id)));
        }
        if let Some(i) = s
            .mask
            .iter()
            .zip(&s.values)
            .position(|(&m, v)| m && !v.is_finite())
        {
            return Err(Error::Validation(format!(
                "sample '{}': observed entry {} is not finite",
                s.id, i
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.samples.iter().try_for_each(|s| self.validate_sample(s))
    }

    pub fn push(&mut self, sample: Sample) -> Result<()> {
        self.validate_sample(&sample)?;
        self.samples.push(sample);
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = BufWriter::new(writer);
        let header = Header {
            version: FORMAT_VERSION,
            variables: self.variables.clone(),
            n_static: self.n_static,
            n_classes: self.n_classes,
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        let d = self.n_vars();
        for s in &self.samples {
            let values = (0..s.len())
                .map(|t| (0..d).map(|v| s.observed(t, v, d)).collect())
                .collect();
            let rec = Record {
                id: s.id.clone(),
                times: s.times.clone(),
                values,
                static_features: s.static_features.clone(),
                label: s.label,
            };
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_jsonl<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut lines = BufReader::new(reader).lines();
        let header_line = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })??;
        let header: Header = serde_json::from_str(&header_line).map_err(|e| Error::Parse {
            line: 1,
            msg: e.to_string(),
        })?;
        if header.version != FORMAT_VERSION {
            return Err(Error::Parse {
                line: 1,
                msg: format!("unsupported version {}", header.version),
            });
        }
        let mut ds = Self::new(header.variables, header.n_static, header.n_classes);
        let d = ds.n_vars();
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: line_no,
                msg: e.to_string(),
            })?;
            if rec.values.len() != rec.times.len() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!(
                        "{} value rows for {} time stamps",
                        rec.values.len(),
                        rec.times.len()
                    ),
                });
            }
            let mut values = Vec::with_capacity(rec.times.len() * d);
            let mut mask = Vec::with_capacity(rec.times.len() * d);
            for row in &rec.values {
                if row.len() != d {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("row of width {} for {} variables", row.len(), d),
                    });
                }
                for v in row {
                    values.push(v.unwrap_or(f64::NAN));
                    mask.push(v.is_some());
                }
            }
            let sample = Sample {
                id: rec.id,
                times: rec.times,
                values,
                mask,
                static_features: rec.static_features,
                label: rec.label,
            };
            ds.push(sample).map_err(|e| match e {
                Error::Validation(msg) => Error::Validation(format!("line {line_no}: {msg}")),
                other => other,
            })?;
        }
        Ok(ds)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_jsonl(std::fs::File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_jsonl(std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = r#"{"version":1,"variables":["hr","b"],"n_static":0,"n_classes":2}"#;

    #[test]
    fn empty_record_list() {
        let ds = TimeSeriesDataset::read_jsonl(format!("{HEADER}\n").as_bytes()).unwrap();
        assert_eq!(ds.len(), 0);
        assert_eq!(ds.variables, vec!["hr", "b"]);
    }

    #[test]
    fn null_means_missing() {
        let text = format!(
            "{HEADER}\n{}\n",
            r#"{"id":"a","times":[0.0],"values":[[1.5,null]],"static":[],"label":1}"#
        );
        let ds = TimeSeriesDataset::read_jsonl(text.as_bytes()).unwrap();
        assert_eq!(ds.samples[0].mask, vec![true, false]);
        assert_eq!(ds.samples[0].values[0], 1.5);
    }

    #[test]
    fn schema_error_reports_line() {
        let text = format!(
            "{HEADER}\n{}\n{}\n",
            r#"{"id":"a","times":[0.0],"values":[[1.0,2.0]],"static":[],"label":0}"#,
            r#"{"id":"b","times":[0.0],"values":[[1.0]],"static":[],"label":0}"#
        );
        match TimeSeriesDataset::read_jsonl(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let bad_json = format!("{HEADER}\n{{\"id\":\n");
        assert!(matches!(
            TimeSeriesDataset::read_jsonl(bad_json.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn non_monotone_times_rejected() {
        let text = format!(
            "{HEADER}\n{}\n",
            r#"{"id":"a","times":[0.0,2.0,1.0],"values":[[1,2],[1,2],[1,2]],"static":[],"label":0}"#
        );
        assert!(matches!(
            TimeSeriesDataset::read_jsonl(text.as_bytes()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn label_out_of_range_rejected() {
        let text = format!(
            "{HEADER}\n{}\n",
            r#"{"id":"a","times":[0.0],"values":[[1,2]],"static":[],"label":2}"#
        );
        assert!(TimeSeriesDataset::read_jsonl(text.as_bytes()).is_err());
    }
}
