//! One- and two-sided CUSUM recursions over any statistic stream.
//!
//! The upper chart accumulates `D_i = max(0, D_{i-1} + xi_i - zeta_up)` and
//! signals when it strictly exceeds `h_up`; the lower chart mirrors it with
//! `min(0, D_{i-1} + xi_i + zeta_down)` against `-h_down`. Reference values
//! and limits are stored as positive magnitudes; signs are applied inside the
//! recursion. After a signal the state is poisoned until reset, since a chart
//! is restarted once the cause has been diagnosed.
//!
//! The changepoint estimate reported on a signal is the last index at which
//! the signaling statistic sat at zero.

use crate::scores::ScoreSpec;
use crate::seqrank::RankAccumulator;
use crate::EngineError;

/// Which recursions a chart runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartSide {
    Upper,
    Lower,
    Both,
}

impl ChartSide {
    pub fn upper_active(self) -> bool {
        matches!(self, ChartSide::Upper | ChartSide::Both)
    }

    pub fn lower_active(self) -> bool {
        matches!(self, ChartSide::Lower | ChartSide::Both)
    }
}

/// Side on which a signal fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalSide {
    Upper,
    Lower,
}

/// Reference values and control limits, all as positive magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CusumConfig {
    pub zeta_up: f64,
    pub zeta_down: f64,
    pub h_up: f64,
    /// Magnitude of the lower limit; the lower chart signals below `-h_down`.
    pub h_down: f64,
    pub sides: ChartSide,
}

impl CusumConfig {
    pub fn upper(zeta: f64, h: f64) -> Self {
        CusumConfig { zeta_up: zeta, zeta_down: 0.0, h_up: h, h_down: f64::INFINITY, sides: ChartSide::Upper }
    }

    pub fn lower(zeta: f64, h: f64) -> Self {
        CusumConfig { zeta_up: 0.0, zeta_down: zeta, h_up: f64::INFINITY, h_down: h, sides: ChartSide::Lower }
    }

    /// Symmetric two-sided chart: one zeta, one limit magnitude for both sides.
    pub fn symmetric(zeta: f64, h: f64) -> Self {
        CusumConfig { zeta_up: zeta, zeta_down: zeta, h_up: h, h_down: h, sides: ChartSide::Both }
    }

    /// Two-sided chart with separate reference values and limits, as used by
    /// the asymmetric dispersion statistic.
    pub fn two_sided(zeta_up: f64, zeta_down: f64, h_up: f64, h_down: f64) -> Self {
        CusumConfig { zeta_up, zeta_down, h_up, h_down, sides: ChartSide::Both }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |reason: &'static str| Err(EngineError::InvalidConfig { reason });
        if self.sides.upper_active() {
            if !(self.h_up > 0.0) {
                return bad("h_up must be strictly positive");
            }
            if !(self.zeta_up >= 0.0 && self.zeta_up.is_finite()) {
                return bad("zeta_up must be finite and nonnegative");
            }
        }
        if self.sides.lower_active() {
            if !(self.h_down > 0.0) {
                return bad("h_down must be strictly positive");
            }
            if !(self.zeta_down >= 0.0 && self.zeta_down.is_finite()) {
                return bad("zeta_down must be finite and nonnegative");
            }
        }
        Ok(())
    }
}

/// Mutable chart state. `d_up >= 0` and `d_down <= 0` always hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CusumState {
    pub n: u64,
    pub d_up: f64,
    pub d_down: f64,
    pub last_zero_up: u64,
    pub last_zero_down: u64,
    signaled: Option<SignalSide>,
}

impl Default for CusumState {
    fn default() -> Self {
        Self::new()
    }
}

impl CusumState {
    pub fn new() -> Self {
        CusumState { n: 0, d_up: 0.0, d_down: 0.0, last_zero_up: 0, last_zero_down: 0, signaled: None }
    }

    /// Restart the chart from scratch.
    pub fn reset(&mut self) {
        *self = CusumState::new();
    }

    pub fn signaled(&self) -> Option<SignalSide> {
        self.signaled
    }

    /// Advance by one statistic. Returns the signal side when a control
    /// limit is crossed; upper is reported first on a simultaneous crossing.
    pub fn step(&mut self, xi: f64, config: &CusumConfig) -> Result<Option<SignalSide>, EngineError> {
        if let Some(side) = self.signaled {
            return Err(EngineError::SteppedAfterSignal { side });
        }
        if !xi.is_finite() {
            return Err(EngineError::NonFiniteStatistic { value: xi });
        }
        self.n += 1;
        if config.sides.upper_active() {
            self.d_up = (self.d_up + xi - config.zeta_up).max(0.0);
            if self.d_up == 0.0 {
                self.last_zero_up = self.n;
            }
        }
        if config.sides.lower_active() {
            self.d_down = (self.d_down + xi + config.zeta_down).min(0.0);
            if self.d_down == 0.0 {
                self.last_zero_down = self.n;
            }
        }
        let signal = if config.sides.upper_active() && self.d_up > config.h_up {
            Some(SignalSide::Upper)
        } else if config.sides.lower_active() && self.d_down < -config.h_down {
            Some(SignalSide::Lower)
        } else {
            None
        };
        self.signaled = signal;
        Ok(signal)
    }

    /// Last zero of the statistic on `side`.
    pub fn last_zero(&self, side: SignalSide) -> u64 {
        match side {
            SignalSide::Upper => self.last_zero_up,
            SignalSide::Lower => self.last_zero_down,
        }
    }

    pub fn d_value(&self, side: SignalSide) -> f64 {
        match side {
            SignalSide::Upper => self.d_up,
            SignalSide::Lower => self.d_down,
        }
    }
}

/// One recorded step of a chart path, for plot files.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PathPoint {
    pub n: u64,
    pub d_up: f64,
    pub d_down: f64,
    pub signal: bool,
}

/// A signal together with its post-hoc changepoint estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalReport {
    pub signal_index: u64,
    pub side: SignalSide,
    /// Last zero of the signaling statistic; always < `signal_index`.
    pub changepoint_estimate: u64,
    pub d_value_at_signal: f64,
    pub path: Option<Vec<PathPoint>>,
}

/// End of stream without a signal.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamSummary {
    pub observations: u64,
    pub state: CusumState,
    /// True when the run-length guard stopped the scan, not the stream
    /// itself; never silently treated as a signal.
    pub hit_cap: bool,
    pub path: Option<Vec<PathPoint>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    Signal(SignalReport),
    Exhausted(StreamSummary),
}

#[derive(Debug, Clone, Copy)]
pub struct RunSettings {
    /// Guard on the number of observations consumed.
    pub max_n: u64,
    pub record_path: bool,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings { max_n: 10_000_000, record_path: false }
    }
}

/// Pipe raw observations through sequential ranking and scoring into the
/// recursion, stopping at the first signal.
pub fn run<I>(
    xs: I,
    score: &ScoreSpec,
    config: &CusumConfig,
    settings: &RunSettings,
) -> Result<RunOutcome, EngineError>
where
    I: IntoIterator<Item = f64>,
{
    config.validate()?;
    let mut accumulator = RankAccumulator::new();
    let mut state = CusumState::new();
    let mut path = settings.record_path.then(Vec::new);
    let mut iter = xs.into_iter();
    loop {
        if state.n >= settings.max_n {
            let hit_cap = iter.next().is_some();
            return Ok(RunOutcome::Exhausted(StreamSummary {
                observations: state.n,
                state,
                hit_cap,
                path,
            }));
        }
        let Some(x) = iter.next() else {
            return Ok(RunOutcome::Exhausted(StreamSummary {
                observations: state.n,
                state,
                hit_cap: false,
                path,
            }));
        };
        let ranked = accumulator.push(x)?;
        let xi = score.xi(ranked.index, ranked.sign, ranked.rank);
        let signal = state.step(xi, config)?;
        if let Some(points) = path.as_mut() {
            points.push(PathPoint {
                n: state.n,
                d_up: state.d_up,
                d_down: state.d_down,
                signal: signal.is_some(),
            });
        }
        if let Some(side) = signal {
            return Ok(RunOutcome::Signal(SignalReport {
                signal_index: state.n,
                side,
                changepoint_estimate: state.last_zero(side),
                d_value_at_signal: state.d_value(side),
                path,
            }));
        }
    }
}
