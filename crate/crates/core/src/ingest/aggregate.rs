use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// A single timestamped measurement of variable `var` (index into the
/// dataset's variable list).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    pub time: f64,
    pub var: usize,
    pub value: f64,
}

/// Events gridded at a fixed resolution; only occupied bins become steps.
#[derive(Clone, Debug, PartialEq)]
pub struct GriddedSample {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

/// Bin start for bin `k`. When the resolution is the reciprocal of an
/// integer the division form reproduces decimal literals (bin 26 at 0.1 h is
/// exactly `2.6`).
fn bin_start(k: i64, resolution: f64) -> f64 {
    let inv = 1.0 / resolution;
    if (inv - inv.round()).abs() < 1e-9 {
        k as f64 / inv.round()
    } else {
        k as f64 * resolution
    }
}

fn bin_index(time: f64, resolution: f64) -> i64 {
    // Tolerance absorbs representation error, e.g. 0.3 / 0.1 = 2.9999999999999996.
    (time / resolution + 1e-9).floor() as i64
}

/// Averages events that share a `(bin, variable)` cell. Bins without any
/// event for a variable stay missing.
pub fn aggregate(events: &[Event], n_vars: usize, resolution: f64) -> Result<GriddedSample> {
    if !(resolution > 0.0) {
        return Err(Error::Parameter(format!("resolution must be positive, got {resolution}")));
    }
    let mut cells: BTreeMap<i64, Vec<(f64, usize)>> = BTreeMap::new();
    for e in events {
        if e.var >= n_vars {
            return Err(Error::Parameter(format!("variable index {} out of range", e.var)));
        }
        let row = cells
            .entry(bin_index(e.time, resolution))
            .or_insert_with(|| vec![(0.0, 0); n_vars]);
        row[e.var].0 += e.value;
        row[e.var].1 += 1;
    }
    let mut out = GriddedSample {
        times: Vec::with_capacity(cells.len()),
        values: Vec::with_capacity(cells.len() * n_vars),
        mask: Vec::with_capacity(cells.len() * n_vars),
    };
    for (k, row) in cells {
        out.times.push(bin_start(k, resolution));
        for (sum, n) in row {
            if n > 0 {
                out.values.push(if n == 1 { sum } else { sum / n as f64 });
                out.mask.push(true);
            } else {
                out.values.push(f64::NAN);
                out.mask.push(false);
            }
        }
    }
    Ok(out)
}
