//! Score functions and the per-observation chart statistics built from them.
//!
//! A location score J is odd on (-1, 1) and normalized so the integral of
//! J^2 over (0, 1) equals one. Observation i with sign s and sequential rank
//! r contributes
//!
//! ```text
//! xi_i = s * J(r / (i + 1)) / v_i,     v_i^2 = (1/i) * sum_{j<=i} J^2(j / (i + 1))
//! ```
//!
//! which has mean zero and variance one exactly under the in-control regime.
//! The dispersion statistic drops the sign and centers the squared Wilcoxon
//! score instead:
//!
//! ```text
//! xi_i = 6 r^2 / ((2i + 1)(i + 1)) - 1
//! ```
//!
//! Normalizers are memoized per index by the defining sum for every kind; the
//! Wilcoxon closed form (2i+1)/(2(i+1)) is used only as a test cross-check.

use std::sync::{Arc, RwLock};

use crate::normal;
use crate::ScoreError;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Which score drives a chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    /// Linear score, `J(u) = sqrt(3) u`. Bounded statistic, |xi| <= sqrt(3).
    Wilcoxon,
    /// Normal-quantile score, `J(u) = inverse_normal_cdf((1 + u) / 2)`.
    VanDerWaerden,
    /// Squared Wilcoxon score for dispersion charts; sign-free and asymmetric.
    WilcoxonSquared,
}

impl ScoreKind {
    pub fn is_location(self) -> bool {
        matches!(self, ScoreKind::Wilcoxon | ScoreKind::VanDerWaerden)
    }

    pub fn label(self) -> &'static str {
        match self {
            ScoreKind::Wilcoxon => "w",
            ScoreKind::VanDerWaerden => "vdw",
            ScoreKind::WilcoxonSquared => "w2",
        }
    }
}

/// Standard normal quantile; z such that the normal cdf at z equals p.
///
/// Rational approximation plus one Newton refinement, max error below 1e-13
/// for p in [1e-10, 1 - 1e-10]. Errors outside (0, 1).
pub fn inverse_normal_cdf(p: f64) -> Result<f64, ScoreError> {
    normal::inverse_cdf(p)
}

/// Evaluate the raw score J for `kind` at `u`.
///
/// Location kinds take u in (-1, 1); the dispersion kind takes u in (0, 1).
pub fn score_eval(kind: ScoreKind, u: f64) -> f64 {
    match kind {
        ScoreKind::Wilcoxon => SQRT_3 * u,
        ScoreKind::VanDerWaerden => {
            normal::inverse_cdf((1.0 + u) / 2.0).expect("score argument inside (-1, 1)")
        }
        ScoreKind::WilcoxonSquared => 3.0 * u * u,
    }
}

/// Derivative of J, used by the efficacy integrals.
pub fn score_deriv(kind: ScoreKind, u: f64) -> f64 {
    match kind {
        ScoreKind::Wilcoxon => SQRT_3,
        ScoreKind::VanDerWaerden => {
            let z = normal::inverse_cdf((1.0 + u) / 2.0).expect("score argument inside (-1, 1)");
            0.5 / normal::pdf(z)
        }
        ScoreKind::WilcoxonSquared => 6.0 * u,
    }
}

/// Memoized per-index normalizers v_i for a location score.
///
/// Immutable from the outside; extension on demand is synchronized, and hot
/// loops should grab a snapshot up front so no lock is touched per
/// observation.
pub struct NormalizerTable {
    kind: ScoreKind,
    values: RwLock<Arc<Vec<f64>>>,
}

impl NormalizerTable {
    pub fn new(kind: ScoreKind) -> Result<Self, ScoreError> {
        if !kind.is_location() {
            return Err(ScoreError::KindMismatch {
                expected: "location score",
                got: kind,
            });
        }
        Ok(NormalizerTable {
            kind,
            values: RwLock::new(Arc::new(Vec::new())),
        })
    }

    pub fn kind(&self) -> ScoreKind {
        self.kind
    }

    /// v_i for one-based index i, extending the table if needed.
    pub fn value(&self, i: u64) -> f64 {
        self.snapshot_at_least(i)[(i - 1) as usize]
    }

    /// A snapshot covering at least the first `n` indices. `snapshot[i - 1]`
    /// is v_i.
    pub fn snapshot_at_least(&self, n: u64) -> Arc<Vec<f64>> {
        {
            let guard = self.values.read().unwrap();
            if guard.len() >= n as usize {
                return Arc::clone(&guard);
            }
        }
        self.extend_to(n as usize)
    }

    /// Eagerly extend the table, e.g. before a parallel section.
    pub fn ensure(&self, n: u64) {
        let _ = self.snapshot_at_least(n);
    }

    fn extend_to(&self, n: usize) -> Arc<Vec<f64>> {
        let mut guard = self.values.write().unwrap();
        if guard.len() >= n {
            return Arc::clone(&guard);
        }
        // Geometric growth: each row i costs O(i), so doubling keeps the
        // total work proportional to the square of the largest index reached.
        let target = n.max(guard.len() * 2).max(64);
        let mut values = Vec::with_capacity(target);
        values.extend_from_slice(&guard);
        for i in values.len() + 1..=target {
            values.push(defining_sum_normalizer(self.kind, i as u64));
        }
        *guard = Arc::new(values);
        Arc::clone(&guard)
    }
}

/// v_i from the defining sum, with compensated summation.
fn defining_sum_normalizer(kind: ScoreKind, i: u64) -> f64 {
    let m = (i + 1) as f64;
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for j in 1..=i {
        let s = score_eval(kind, j as f64 / m);
        let term = s * s - carry;
        let t = sum + term;
        carry = (t - sum) - term;
        sum = t;
    }
    (sum / i as f64).sqrt()
}

/// A score plus its normalizer table; cheap to clone and safe to share
/// across simulation workers.
#[derive(Clone)]
pub struct ScoreSpec {
    kind: ScoreKind,
    normalizers: Option<Arc<NormalizerTable>>,
}

impl std::fmt::Debug for ScoreSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScoreSpec").field("kind", &self.kind).finish()
    }
}

impl ScoreSpec {
    pub fn new(kind: ScoreKind) -> Self {
        let normalizers = kind
            .is_location()
            .then(|| Arc::new(NormalizerTable::new(kind).expect("location kind")));
        ScoreSpec { kind, normalizers }
    }

    pub fn wilcoxon() -> Self {
        Self::new(ScoreKind::Wilcoxon)
    }

    pub fn van_der_waerden() -> Self {
        Self::new(ScoreKind::VanDerWaerden)
    }

    pub fn wilcoxon_squared() -> Self {
        Self::new(ScoreKind::WilcoxonSquared)
    }

    pub fn kind(&self) -> ScoreKind {
        self.kind
    }

    pub fn is_location(&self) -> bool {
        self.kind.is_location()
    }

    /// J evaluated at `u`.
    pub fn eval(&self, u: f64) -> f64 {
        score_eval(self.kind, u)
    }

    /// J' evaluated at `u`.
    pub fn deriv(&self, u: f64) -> f64 {
        score_deriv(self.kind, u)
    }

    /// Normalizer table for location kinds.
    pub fn normalizers(&self) -> Option<&Arc<NormalizerTable>> {
        self.normalizers.as_ref()
    }

    /// Chart statistic for an observation that already carries its sign and
    /// sequential rank. Zero-signed observations contribute zero to location
    /// charts; the dispersion statistic is sign-free.
    pub fn xi(&self, i: u64, sign: i8, rank: u64) -> f64 {
        match self.kind {
            ScoreKind::WilcoxonSquared => dispersion_statistic(i, rank),
            _ if sign == 0 => 0.0,
            kind => {
                let table = self.normalizers.as_ref().expect("location kind");
                f64::from(sign) * score_eval(kind, rank as f64 / (i + 1) as f64) / table.value(i)
            }
        }
    }
}

/// Location-chart statistic `sign * J(rank / (i + 1)) / v_i`.
///
/// For the Wilcoxon score this equals `sign * rank * sqrt(6 / ((2i+1)(i+1)))`.
pub fn xi_location(score: &ScoreSpec, i: u64, sign: i8, rank: u64) -> Result<f64, ScoreError> {
    if !score.is_location() {
        return Err(ScoreError::KindMismatch {
            expected: "location score",
            got: score.kind(),
        });
    }
    if i == 0 || rank == 0 || rank > i {
        return Err(ScoreError::RankOutOfRange { i, rank });
    }
    if sign != 1 && sign != -1 {
        return Err(ScoreError::InvalidSign { sign });
    }
    Ok(score.xi(i, sign, rank))
}

/// Dispersion-chart statistic `6 rank^2 / ((2i+1)(i+1)) - 1`.
pub fn xi_dispersion(i: u64, rank: u64) -> Result<f64, ScoreError> {
    if i == 0 || rank == 0 || rank > i {
        return Err(ScoreError::RankOutOfRange { i, rank });
    }
    Ok(dispersion_statistic(i, rank))
}

#[inline]
pub(crate) fn dispersion_statistic(i: u64, rank: u64) -> f64 {
    let r = rank as f64;
    6.0 * r * r / (((2 * i + 1) * (i + 1)) as f64) - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilcoxon_examples() {
        let w = ScoreSpec::wilcoxon();
        assert!((xi_location(&w, 1, 1, 1).unwrap() - 1.0).abs() < 1e-15);
        let want = -2.0 * (6.0f64 / 15.0).sqrt();
        assert!((xi_location(&w, 2, -1, 2).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn van_der_waerden_first_index_is_one() {
        let vdw = ScoreSpec::van_der_waerden();
        assert!((xi_location(&vdw, 1, 1, 1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dispersion_examples() {
        assert!(xi_dispersion(1, 1).unwrap().abs() < 1e-15);
        assert!((xi_dispersion(2, 2).unwrap() - 0.6).abs() < 1e-15);
        assert!((xi_dispersion(2, 1).unwrap() + 0.6).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        let w = ScoreSpec::wilcoxon();
        assert!(matches!(
            xi_location(&w, 3, 1, 4),
            Err(ScoreError::RankOutOfRange { .. })
        ));
        assert!(matches!(
            xi_location(&w, 3, 1, 0),
            Err(ScoreError::RankOutOfRange { .. })
        ));
        assert!(matches!(
            xi_location(&w, 3, 0, 2),
            Err(ScoreError::InvalidSign { .. })
        ));
        let w2 = ScoreSpec::wilcoxon_squared();
        assert!(matches!(
            xi_location(&w2, 3, 1, 2),
            Err(ScoreError::KindMismatch { .. })
        ));
        assert!(xi_dispersion(3, 4).is_err());
        assert!(NormalizerTable::new(ScoreKind::WilcoxonSquared).is_err());
    }

    #[test]
    fn wilcoxon_normalizer_matches_closed_form() {
        let table = NormalizerTable::new(ScoreKind::Wilcoxon).unwrap();
        for i in 1..=4096u64 {
            let closed = ((2 * i + 1) as f64 / (2 * (i + 1)) as f64).sqrt();
            assert!(
                (table.value(i) - closed).abs() < 1e-12,
                "i={i}: {} vs {}",
                table.value(i),
                closed
            );
        }
    }

    #[test]
    fn location_scores_are_odd() {
        for kind in [ScoreKind::Wilcoxon, ScoreKind::VanDerWaerden] {
            for &u in &[0.1, 0.37, 0.82, 0.99] {
                let diff = score_eval(kind, -u) + score_eval(kind, u);
                assert!(diff.abs() < 1e-12, "{kind:?} at u={u}");
            }
        }
    }

    #[test]
    fn location_scores_are_normalized() {
        // Midpoint rule on the integral of J^2 over (0, 1); the dense grid
        // keeps the discretization error well under the 1e-8 target.
        for kind in [ScoreKind::Wilcoxon, ScoreKind::VanDerWaerden] {
            let n = 400_000;
            let sum: f64 = (0..n)
                .map(|k| {
                    let u = (k as f64 + 0.5) / n as f64;
                    let s = score_eval(kind, u);
                    s * s
                })
                .sum();
            let integral = sum / n as f64;
            assert!(
                (integral - 1.0).abs() < 1e-6,
                "{kind:?}: int J^2 = {integral}"
            );
        }
    }

    #[test]
    fn exact_in_control_moments_small_i() {
        // Enumerate all 2i equally likely (sign, rank) pairs.
        for kind in [ScoreKind::Wilcoxon, ScoreKind::VanDerWaerden] {
            let score = ScoreSpec::new(kind);
            for i in 1..=50u64 {
                let mut mean = 0.0;
                let mut second = 0.0;
                for rank in 1..=i {
                    for sign in [-1i8, 1] {
                        let x = xi_location(&score, i, sign, rank).unwrap();
                        mean += x;
                        second += x * x;
                    }
                }
                mean /= (2 * i) as f64;
                second /= (2 * i) as f64;
                assert!(mean.abs() < 1e-10, "{kind:?} i={i} mean={mean}");
                assert!((second - 1.0).abs() < 1e-10, "{kind:?} i={i} var={second}");
            }
        }
    }

    #[test]
    fn wilcoxon_statistic_is_bounded() {
        let w = ScoreSpec::wilcoxon();
        let bound = 3.0f64.sqrt();
        for i in (1..=10_000u64).step_by(37) {
            let x = xi_location(&w, i, 1, i).unwrap();
            assert!(x.abs() <= bound + 1e-12, "i={i}: {x}");
        }
    }

    #[test]
    fn dispersion_mean_zero_and_range() {
        for i in 1..=50u64 {
            let mut mean = 0.0;
            for rank in 1..=i {
                let x = xi_dispersion(i, rank).unwrap();
                assert!(x > -1.0 && x <= 2.0, "i={i} rank={rank}: {x}");
                mean += x;
            }
            mean /= i as f64;
            assert!(mean.abs() < 1e-10, "i={i}: mean={mean}");
        }
    }

    #[test]
    fn snapshot_is_consistent_with_values() {
        let table = NormalizerTable::new(ScoreKind::VanDerWaerden).unwrap();
        let snap = table.snapshot_at_least(200);
        for i in [1u64, 17, 128, 200] {
            assert_eq!(snap[(i - 1) as usize], table.value(i));
        }
        assert!(snap.len() >= 200);
    }
}
