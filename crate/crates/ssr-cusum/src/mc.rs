//! Internal replication driver shared by calibration and the run-length
//! experiments.
//!
//! Replications are indexed 0..reps and each builds its own RNG stream from
//! (seed, index), so the per-replication outputs are independent of worker
//! count and scheduling. Scratch state (rank accumulators) is reused across
//! the replications a worker happens to process; it is reset per replication,
//! so reuse never leaks state between replications.

use rayon::prelude::*;

/// Run `f` once per replication index, collecting outputs in index order.
pub(crate) fn map_replications<S, T, F, Init>(reps: u64, init: Init, f: F) -> Vec<T>
where
    S: Send,
    T: Send,
    Init: Fn() -> S + Sync + Send,
    F: Fn(&mut S, u64) -> T + Sync + Send,
{
    (0..reps)
        .into_par_iter()
        .map_init(&init, |scratch, rep| f(scratch, rep))
        .collect()
}

/// Sample mean and its standard error.
pub(crate) fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    let variance = ss / (n - 1.0);
    (mean, (variance / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outputs_are_in_replication_order() {
        let out = map_replications(100, || (), |_, r| r * 2);
        assert_eq!(out, (0..100).map(|r| r * 2).collect::<Vec<_>>());
    }

    #[test]
    fn mean_and_se_basic() {
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0, 4.0]);
        assert!((m - 2.5).abs() < 1e-15);
        let expected_se = (5.0f64 / 3.0 / 4.0).sqrt();
        assert!((se - expected_se).abs() < 1e-15);
    }
}
