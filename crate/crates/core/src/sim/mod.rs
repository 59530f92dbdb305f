//! Fixed-step hybrid integration of the element in open and closed loop.

mod closed_loop;
mod engine;
mod incremental;
mod input;
mod trajectory;

use thiserror::Error;

use crate::element::ElementError;
use crate::lti::LtiError;
use crate::scalar::Real;

pub use closed_loop::{simulate_closed_loop, simulate_closed_loop_epds, simulate_closed_loop_linear, ClosedLoop};
pub use engine::{simulate_cascade, simulate_epds, simulate_linear, simulate_open_loop, simulate_open_loop_with};
pub use incremental::{incremental_gap, IncrementalReport};
pub use input::{InputSignal, Sine};
pub use trajectory::{steady_state_period, Event, Sample, SimStats, SteadyState, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("invalid input signal: {0}")]
    Input(String),
    #[error(transparent)]
    Element(#[from] ElementError),
    #[error(transparent)]
    Lti(#[from] LtiError),
    #[error("sector violated at t = {t}: normalized product {violation}")]
    SectorViolation { t: f64, violation: f64 },
    #[error("chattering at t = {t}: more than {events} events per step even at the minimum step")]
    Chattering { t: f64, events: usize },
    #[error("state became non-finite at t = {t}")]
    NonFinite { t: f64 },
    #[error("closed loop requires a strictly proper plant with C_p B_p = 0 (C_p B_p = {cb}, D_p = {d})")]
    PlantStructure { cb: f64, d: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("trajectory too short: need {needed} s, have {have} s")]
    TooShort { needed: f64, have: f64 },
    #[error("sample spacing {spacing} does not divide the period {period}")]
    NotCommensurate { spacing: f64, period: f64 },
    #[error("not settled: last two periods differ by {gap} (limit {limit})")]
    NotSettled { gap: f64, limit: f64 },
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
}

/// Maximum number of events tolerated inside one base step before the
/// local step is halved.
pub const MAX_EVENTS_PER_STEP: usize = 10;
/// Smallest local step as a fraction of the base step.
pub const MIN_STEP_DIVISOR: usize = 64;

/// Integration settings. Samples are taken on the uniform grid `n h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig<T> {
    pub h: T,
    pub event_tol: T,
    pub t_end: T,
    /// Keep every `decimation`-th grid sample.
    pub decimation: usize,
    /// Also store the full state vector at each kept sample.
    pub record_states: bool,
}

impl<T: Real> Default for SimConfig<T> {
    fn default() -> Self {
        Self { h: T::lit(1e-5), event_tol: T::lit(1e-10), t_end: T::one(), decimation: 1, record_states: false }
    }
}

impl<T: Real> SimConfig<T> {
    pub fn new(h: T, t_end: T) -> Self {
        Self { h, t_end, ..Self::default() }
    }

    /// Step chosen so that one period of `omega` holds exactly
    /// `samples_per_period` steps, running for `periods` periods.
    pub fn for_periods(omega: T, samples_per_period: usize, periods: usize) -> Self {
        let period = T::TAU() / omega;
        let h = period / T::from_count(samples_per_period);
        Self { h, t_end: period * T::from_count(periods), ..Self::default() }
    }

    pub fn with_event_tol(mut self, tol: T) -> Self {
        self.event_tol = tol;
        self
    }

    pub fn with_decimation(mut self, d: usize) -> Self {
        self.decimation = d;
        self
    }

    pub fn with_states(mut self) -> Self {
        self.record_states = true;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.h > T::zero()) || !self.h.is_finite() {
            return Err(SimError::Config(format!("step size must be positive, got {}", self.h)));
        }
        if !(self.event_tol > T::zero() && self.event_tol < self.h) {
            return Err(SimError::Config(format!("event tolerance {} must lie in (0, h = {})", self.event_tol, self.h)));
        }
        if !(self.t_end >= T::zero()) || !self.t_end.is_finite() {
            return Err(SimError::Config(format!("total time must be non-negative, got {}", self.t_end)));
        }
        if self.decimation == 0 {
            return Err(SimError::Config("decimation must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of base steps.
    pub fn steps(&self) -> usize {
        (self.t_end / self.h).round().to_usize().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(SimConfig::<f64>::default().validate().is_ok());
        assert!(SimConfig::new(0.0, 1.0).validate().is_err());
        assert!(SimConfig::new(1e-5, 1.0).with_event_tol(1e-4).validate().is_err());
        assert!(SimConfig::new(1e-5, 1.0).with_decimation(0).validate().is_err());
        let c = SimConfig::for_periods(2.0 * std::f64::consts::PI, 1000, 3);
        assert_eq!(c.steps(), 3000);
    }
}
