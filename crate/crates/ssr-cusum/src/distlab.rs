//! Reference distributions with standardized parameterizations, and the
//! design constants theta0 / theta1 evaluated by adaptive quadrature.
//!
//! theta0 maps a standardized location shift delta to the asymptotic drift
//! `theta0 * delta` of a location-score statistic; theta1 maps a log scale
//! change to the drift of the dispersion statistic. Both are computed on the
//! probability scale after substituting u = 2 F0(y) - 1, which keeps the
//! integration domain finite:
//!
//! ```text
//! theta0 = 2 * int_0^1 f0(Q(p)) J'(2p - 1) dp
//! theta1 = 12 * int_0^1 (2p - 1) Q(p) f0(Q(p)) dp
//! ```
//!
//! (The factor 2 in theta0 is fixed by the Wilcoxon reduction
//! `theta0 = sqrt(12) E[f0(Y)]` and by the Van der Waerden value of exactly 1
//! at the normal distribution.)

use std::sync::Arc;

use rand::Rng;
use rand_distr::Distribution as RandDistribution;
use statrs::distribution::{Continuous, ContinuousCDF, StudentsT};

use crate::normal;
use crate::quad;
use crate::scores::{score_deriv, ScoreSpec};
use crate::DistError;

/// Distribution family, in its raw (unstandardized) parameterization.
#[derive(Debug, Clone)]
pub enum Family {
    Normal,
    StudentT { dof: f64 },
    SkewNormal { shape: f64 },
    /// Uniform on (-1, 1).
    Uniform,
    EmpiricalKde(Arc<KdeDensity>),
}

/// How the raw family was rescaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Standardization {
    UnitVariance,
    UnitIqr,
    None,
}

/// A sampled-and-evaluated distribution: the standardized variable is
/// `X = (T - shift) / scale` for raw `T`.
#[derive(Debug, Clone)]
pub struct DistributionSpec {
    family: Family,
    standardization: Standardization,
    scale: f64,
    shift: f64,
}

impl DistributionSpec {
    /// Standard normal.
    pub fn normal() -> Self {
        DistributionSpec {
            family: Family::Normal,
            standardization: Standardization::UnitVariance,
            scale: 1.0,
            shift: 0.0,
        }
    }

    /// Student t: unit standard deviation for dof >= 3, unit inter-quartile
    /// range below that (where the variance does not exist).
    pub fn student_t(dof: f64) -> Result<Self, DistError> {
        if !(dof >= 1.0) || !dof.is_finite() {
            return Err(DistError::InvalidParameter {
                reason: format!("student t degrees of freedom must be >= 1, got {dof}"),
            });
        }
        let (scale, standardization) = if dof >= 3.0 {
            ((dof / (dof - 2.0)).sqrt(), Standardization::UnitVariance)
        } else {
            (2.0 * student_t_quantile_raw(dof, 0.75), Standardization::UnitIqr)
        };
        Ok(DistributionSpec {
            family: Family::StudentT { dof },
            standardization,
            scale,
            shift: 0.0,
        })
    }

    /// Skew-normal with shape `lambda`, standardized to zero mean and unit
    /// variance (location and scale solved from the moment formulas).
    pub fn skew_normal(lambda: f64) -> Result<Self, DistError> {
        if !lambda.is_finite() {
            return Err(DistError::InvalidParameter {
                reason: format!("skew-normal shape must be finite, got {lambda}"),
            });
        }
        let delta = lambda / (1.0 + lambda * lambda).sqrt();
        let mean = delta * (2.0 / std::f64::consts::PI).sqrt();
        let var = 1.0 - 2.0 * delta * delta / std::f64::consts::PI;
        Ok(DistributionSpec {
            family: Family::SkewNormal { shape: lambda },
            standardization: Standardization::UnitVariance,
            scale: var.sqrt(),
            shift: mean,
        })
    }

    /// Uniform on (-1, 1), the canonical in-control driver for calibration.
    pub fn uniform() -> Self {
        DistributionSpec {
            family: Family::Uniform,
            standardization: Standardization::None,
            scale: 1.0,
            shift: 0.0,
        }
    }

    /// Gaussian-kernel density estimate; see [`fit_kde`].
    pub fn kde(kde: KdeDensity) -> Self {
        DistributionSpec {
            family: Family::EmpiricalKde(Arc::new(kde)),
            standardization: Standardization::None,
            scale: 1.0,
            shift: 0.0,
        }
    }

    /// Multiply the variable by `factor` (e.g. to give a standardized noise
    /// distribution a physical scale). Drops the standardization tag.
    pub fn rescaled(&self, factor: f64) -> Result<Self, DistError> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(DistError::InvalidParameter {
                reason: format!("rescale factor must be positive and finite, got {factor}"),
            });
        }
        let mut out = self.clone();
        out.scale /= factor;
        out.standardization = Standardization::None;
        Ok(out)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn standardization(&self) -> Standardization {
        self.standardization
    }

    /// Scale factor dividing the raw variable.
    pub fn scale_factor(&self) -> f64 {
        self.scale
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let t = self.shift + self.scale * x;
        self.scale * self.raw_pdf(t)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let t = self.shift + self.scale * x;
        self.raw_cdf(t)
    }

    pub fn quantile(&self, p: f64) -> Result<f64, DistError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(DistError::InvalidParameter {
                reason: format!("quantile probability must be in (0, 1), got {p}"),
            });
        }
        Ok((self.raw_quantile(p)? - self.shift) / self.scale)
    }

    /// One draw from the standardized distribution.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        (self.raw_draw(rng) - self.shift) / self.scale
    }

    /// `n` independent draws.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.draw(rng)).collect()
    }

    fn raw_pdf(&self, t: f64) -> f64 {
        match &self.family {
            Family::Normal => normal::pdf(t),
            Family::StudentT { dof } => StudentsT::new(0.0, 1.0, *dof)
                .expect("validated dof")
                .pdf(t),
            Family::SkewNormal { shape } => 2.0 * normal::pdf(t) * normal::cdf(shape * t),
            Family::Uniform => {
                if (-1.0..=1.0).contains(&t) {
                    0.5
                } else {
                    0.0
                }
            }
            Family::EmpiricalKde(kde) => kde.pdf(t),
        }
    }

    fn raw_cdf(&self, t: f64) -> f64 {
        match &self.family {
            Family::Normal => normal::cdf(t),
            Family::StudentT { dof } => StudentsT::new(0.0, 1.0, *dof)
                .expect("validated dof")
                .cdf(t),
            Family::SkewNormal { shape } => {
                (normal::cdf(t) - 2.0 * owen_t(t, *shape)).clamp(0.0, 1.0)
            }
            Family::Uniform => ((t + 1.0) / 2.0).clamp(0.0, 1.0),
            Family::EmpiricalKde(kde) => kde.cdf(t),
        }
    }

    fn raw_quantile(&self, p: f64) -> Result<f64, DistError> {
        match &self.family {
            Family::Normal => normal::inverse_cdf(p).map_err(|_| DistError::QuantileSolveFailed { p }),
            Family::StudentT { dof } => Ok(student_t_quantile_raw(*dof, p)),
            Family::SkewNormal { .. } => {
                let start = normal::inverse_cdf(p).unwrap_or(0.0);
                solve_quantile(|t| self.raw_cdf(t), |t| self.raw_pdf(t), p, start)
            }
            Family::Uniform => Ok(2.0 * p - 1.0),
            Family::EmpiricalKde(kde) => {
                let start = kde.mean + kde.sd_hint * normal::inverse_cdf(p).unwrap_or(0.0);
                solve_quantile(|t| kde.cdf(t), |t| kde.pdf(t), p, start)
            }
        }
    }

    fn raw_draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.family {
            Family::Normal => rng.sample(rand_distr::StandardNormal),
            Family::StudentT { dof } => rand_distr::StudentT::new(*dof)
                .expect("validated dof")
                .sample(rng),
            Family::SkewNormal { shape } => {
                let delta = shape / (1.0 + shape * shape).sqrt();
                let z0: f64 = rng.sample(rand_distr::StandardNormal);
                let z1: f64 = rng.sample(rand_distr::StandardNormal);
                delta * z0.abs() + (1.0 - delta * delta).sqrt() * z1
            }
            Family::Uniform => rng.random_range(-1.0..1.0),
            Family::EmpiricalKde(kde) => {
                let idx = rng.random_range(0..kde.points.len());
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                kde.points[idx] + kde.bandwidth * z
            }
        }
    }
}

/// A design constant with its quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaValue {
    pub value: f64,
    pub error: f64,
}

const QUAD_TOL: f64 = 1e-6;
/// Integration runs on [CLIP, 1 - CLIP]; interior singular integrands (the
/// quantile-score derivative blows up at the endpoints) stay finite there,
/// and for every convergent case the clipped tail is far below tolerance.
const CLIP: f64 = 1e-10;
const MAX_INTERVALS: usize = 4000;

/// Efficacy of a location score against a standardized distribution:
/// `2 * int f0(Q(p)) J'(2p - 1) dp`. Functionally independent of any scale
/// applied before standardization.
pub fn theta0(score: &ScoreSpec, dist: &DistributionSpec) -> Result<ThetaValue, DistError> {
    if !score.is_location() {
        return Err(DistError::LocationScoreRequired {
            what: "theta0",
            got: score.kind(),
        });
    }
    let kind = score.kind();
    let g = |p: f64| {
        let q = dist
            .quantile(p)
            .expect("quantile inside clipped domain");
        2.0 * dist.pdf(q) * score_deriv(kind, 2.0 * p - 1.0)
    };
    let r = quad::integrate(g, CLIP, 1.0 - CLIP, QUAD_TOL, MAX_INTERVALS)?;
    Ok(ThetaValue { value: r.value, error: r.error })
}

/// Dispersion efficacy `12 * int (2p - 1) Q(p) f0(Q(p)) dp`; scale-invariant.
pub fn theta1(dist: &DistributionSpec) -> Result<ThetaValue, DistError> {
    let g = |p: f64| {
        let q = dist
            .quantile(p)
            .expect("quantile inside clipped domain");
        12.0 * (2.0 * p - 1.0) * q * dist.pdf(q)
    };
    let r = quad::integrate(g, CLIP, 1.0 - CLIP, QUAD_TOL, MAX_INTERVALS)?;
    Ok(ThetaValue { value: r.value, error: r.error })
}

// ---------------------------------------------------------------------------
// Kernel density estimate
// ---------------------------------------------------------------------------

/// Gaussian-kernel density over a fixed data set.
#[derive(Debug, Clone)]
pub struct KdeDensity {
    points: Vec<f64>,
    bandwidth: f64,
    mean: f64,
    sd_hint: f64,
}

impl KdeDensity {
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let b = self.bandwidth;
        let sum: f64 = self
            .points
            .iter()
            .map(|&xi| normal::pdf((x - xi) / b))
            .sum();
        sum / (self.points.len() as f64 * b)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let b = self.bandwidth;
        let sum: f64 = self
            .points
            .iter()
            .map(|&xi| normal::cdf((x - xi) / b))
            .sum();
        sum / self.points.len() as f64
    }
}

/// Fit a Gaussian-kernel density. With no explicit bandwidth, the normal
/// reference rule `1.06 * min(sd, iqr / 1.349) * n^(-1/5)` is used.
pub fn fit_kde(data: &[f64], bandwidth: Option<f64>) -> Result<DistributionSpec, DistError> {
    if data.len() < 2 {
        return Err(DistError::TooFewPoints { needed: 2, got: data.len() });
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(DistError::InvalidParameter {
            reason: "data contains non-finite values".to_string(),
        });
    }
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let ss: f64 = data.iter().map(|x| (x - mean) * (x - mean)).sum();
    let sd = (ss / (n - 1.0)).sqrt();
    if sd == 0.0 {
        return Err(DistError::DegenerateData);
    }
    let bandwidth = match bandwidth {
        Some(b) if b > 0.0 && b.is_finite() => b,
        Some(b) => {
            return Err(DistError::InvalidParameter {
                reason: format!("bandwidth must be positive and finite, got {b}"),
            })
        }
        None => {
            let mut sorted = data.to_vec();
            sorted.sort_by(f64::total_cmp);
            let iqr = sorted_quantile(&sorted, 0.75) - sorted_quantile(&sorted, 0.25);
            let spread = if iqr > 0.0 { sd.min(iqr / 1.349) } else { sd };
            1.06 * spread * n.powf(-0.2)
        }
    };
    let mut points = data.to_vec();
    points.sort_by(f64::total_cmp);
    Ok(DistributionSpec::kde(KdeDensity {
        points,
        bandwidth,
        mean,
        sd_hint: sd,
    }))
}

/// Linear-interpolation quantile of pre-sorted data.
pub(crate) fn sorted_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

// ---------------------------------------------------------------------------
// Special functions and solvers
// ---------------------------------------------------------------------------

/// Owen's T function by direct quadrature of its defining integral.
fn owen_t(h: f64, a: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    if a < 0.0 {
        return -owen_t(h, -a);
    }
    let hh = h * h;
    let g = |x: f64| (-0.5 * hh * (1.0 + x * x)).exp() / (1.0 + x * x);
    let r = quad::integrate(g, 0.0, a, 1e-14, 512).expect("smooth bounded integrand");
    r.value / (2.0 * std::f64::consts::PI)
}

/// Raw Student-t quantile: closed forms for 1 and 2 degrees of freedom,
/// otherwise a safeguarded Newton solve on the cdf.
fn student_t_quantile_raw(dof: f64, p: f64) -> f64 {
    if dof == 1.0 {
        return (std::f64::consts::PI * (p - 0.5)).tan();
    }
    if dof == 2.0 {
        let a = 4.0 * p * (1.0 - p);
        return 2.0 * (p - 0.5) * (2.0 / a).sqrt();
    }
    let t = StudentsT::new(0.0, 1.0, dof).expect("validated dof");
    let start = if dof > 2.0 {
        normal::inverse_cdf(p).unwrap_or(0.0) * (dof / (dof - 2.0)).sqrt()
    } else {
        (std::f64::consts::PI * (p - 0.5)).tan()
    };
    solve_quantile(|x| t.cdf(x), |x| t.pdf(x), p, start)
        .expect("student t quantile solve")
}

/// Safeguarded Newton: bracket by doubling out from `start`, then Newton with
/// bisection fallback.
fn solve_quantile(
    cdf: impl Fn(f64) -> f64,
    pdf: impl Fn(f64) -> f64,
    p: f64,
    start: f64,
) -> Result<f64, DistError> {
    let mut lo = start;
    let mut hi = start;
    let mut step = start.abs().max(1.0);
    for _ in 0..200 {
        if cdf(lo) < p {
            break;
        }
        lo -= step;
        step *= 2.0;
    }
    step = start.abs().max(1.0);
    for _ in 0..200 {
        if cdf(hi) > p {
            break;
        }
        hi += step;
        step *= 2.0;
    }
    if !(cdf(lo) < p && cdf(hi) > p) {
        return Err(DistError::QuantileSolveFailed { p });
    }
    let mut x = start.clamp(lo, hi);
    for _ in 0..128 {
        let fx = cdf(x) - p;
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = pdf(x);
        let newton = if d > 0.0 { x - fx / d } else { f64::NAN };
        x = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (hi - lo) <= 1e-13 * (1.0 + x.abs()) || fx.abs() <= 1e-15 {
            return Ok(x);
        }
    }
    Ok(x)
}

/// Inter-quartile range helper used by tests and phase1.
pub(crate) fn sample_iqr(data: &[f64]) -> f64 {
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted_quantile(&sorted, 0.75) - sorted_quantile(&sorted, 0.25)
}
