use super::dataset::Sample;

/// Time since the last observation of each variable, `len() × n_vars`.
///
/// `δ[0] = 0`; afterwards `δ[t] = Δt + δ[t-1]` when the variable was missing
/// at `t-1`, and `Δt` otherwise.
pub fn compute_deltas(mask: &[bool], times: &[f64], n_vars: usize) -> Vec<f64> {
    let t_len = times.len();
    let mut delta = vec![0.0; t_len * n_vars];
    for t in 1..t_len {
        let dt = times[t] - times[t - 1];
        for d in 0..n_vars {
            let prev = (t - 1) * n_vars + d;
            delta[t * n_vars + d] = if mask[prev] { dt } else { dt + delta[prev] };
        }
    }
    delta
}

pub fn sample_deltas(sample: &Sample, n_vars: usize) -> Vec<f64> {
    compute_deltas(&sample.mask, &sample.times, n_vars)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fully_observed_unit_spacing() {
        let d = compute_deltas(&[true; 8], &[0.0, 1.0, 2.0, 3.0], 2);
        assert_eq!(d, vec![0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn gap_accumulates() {
        let d = compute_deltas(&[true, false, false, true], &[0.0, 1.0, 2.0, 3.0], 1);
        assert_eq!(d, vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn never_observed_measures_elapsed_time() {
        let times = [0.5, 0.75, 2.0, 4.5];
        let d = compute_deltas(&[false; 4], &times, 1);
        for (t, v) in d.iter().enumerate() {
            assert_eq!(*v, times[t] - times[0]);
        }
    }
}
