//! Analytic steady-state response and describing functions of the
//! simplified element: integrator (with `alpha_h = 0`) and sector gains
//! acting on `v2 = F e` for a single filter `F`.

mod fourier;
mod response;
mod sweep;
mod switching;

use num_complex::Complex;
use thiserror::Error;

use crate::element::{ElementError, FhigsParams};
use crate::lti::{freq_response, tf_to_ss, LtiError, StateSpace, TransferFunction};
use crate::scalar::Real;

pub use fourier::{first_harmonic_closed_form, fourier_coefficients, fourier_quadrature, QUADRATURE_POINTS};
pub use response::{steady_state_analytic, PiecewiseResponse, Segment};
pub use sweep::{df_point, df_point_with, df_sweep, log_grid, write_sweep_csv, DfOptions, DfPoint, SweepEntry};
pub use switching::{
    epsilon_bisection, epsilon_closed_form, epsilon_residual, gamma_bisection, gamma_closed_form, gamma_residual,
    select_case, solve_epsilon, solve_gamma, SwitchCase, SwitchingInstants,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DfError {
    #[error(transparent)]
    Lti(#[from] LtiError),
    #[error(transparent)]
    Element(#[from] ElementError),
    #[error("the analytic response assumes alpha_h = 0, got {0}")]
    Leaky(f64),
    #[error("frequency must be positive and finite, got {0}")]
    BadFrequency(f64),
    #[error("amplitude must be positive and finite, got {0}")]
    BadAmplitude(f64),
    #[error("harmonic index must be at least 1")]
    BadHarmonic,
    #[error("outside the analytic regime at omega = {omega}: {reason}")]
    UnsupportedRegime { omega: f64, reason: String },
    #[error("no {what} root in its bracket at omega = {omega} ({case})")]
    NoRoot { what: &'static str, omega: f64, case: &'static str },
    #[error("{what} cross-check failed at omega = {omega}: closed form {closed}, reference {reference}")]
    CrossCheck { what: &'static str, omega: f64, closed: f64, reference: f64 },
    #[error("frequency grid must be sorted ascending")]
    UnsortedGrid,
}

/// Element reduced to one filter `F = F1^{-1} F2` in front of the switching
/// logic, with `alpha_h = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplifiedFhigs<T> {
    pub params: FhigsParams<T>,
    pub filter: StateSpace<T>,
}

/// Filter gain and phase at one frequency together with the element data
/// the closed forms need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Harmonic<T> {
    pub k1: T,
    pub k2: T,
    pub omega_h: T,
    pub omega: T,
    pub gain: T,
    pub phase: T,
}

impl<T: Real> SimplifiedFhigs<T> {
    pub fn new(params: FhigsParams<T>, filter: StateSpace<T>) -> Result<Self, DfError> {
        if params.alpha_h != T::zero() {
            return Err(DfError::Leaky(params.alpha_h.as_f64()));
        }
        if params.is_degenerate() {
            return Err(DfError::Element(ElementError::DegenerateSector {
                k1: params.k1.as_f64(),
                k2: params.k2.as_f64(),
            }));
        }
        Ok(Self { params, filter })
    }

    /// Plain HIGS: `F = 1`.
    pub fn higs(params: FhigsParams<T>) -> Result<Self, DfError> {
        Self::new(params, StateSpace::identity())
    }

    /// Forms `F = F1^{-1} F2`; `F1` must be biproper.
    pub fn from_filters(params: FhigsParams<T>, f1: &TransferFunction<T>, f2: &TransferFunction<T>) -> Result<Self, DfError> {
        let f = f1.inverse()?.series(f2);
        Self::new(params, tf_to_ss(&f))
    }

    pub fn filter_response(&self, omega: T) -> Result<Complex<T>, DfError> {
        check_omega(omega)?;
        Ok(freq_response(&self.filter, omega)?.to_complex())
    }

    pub(crate) fn harmonic(&self, omega: T) -> Result<Harmonic<T>, DfError> {
        check_omega(omega)?;
        let fr = freq_response(&self.filter, omega)?;
        let h = Harmonic {
            k1: self.params.k1,
            k2: self.params.k2,
            omega_h: self.params.omega_h,
            omega,
            gain: fr.gain,
            phase: fr.phase,
        };
        if self.params.k1 < T::zero() {
            return Err(DfError::UnsupportedRegime {
                omega: omega.as_f64(),
                reason: format!("k1 = {} < 0 changes the mode order", self.params.k1),
            });
        }
        if !(fr.phase.abs() < T::FRAC_PI_2()) {
            return Err(DfError::UnsupportedRegime {
                omega: omega.as_f64(),
                reason: format!("filter phase {} rad is outside (-pi/2, pi/2)", fr.phase),
            });
        }
        if !(fr.gain > T::zero()) {
            return Err(DfError::UnsupportedRegime { omega: omega.as_f64(), reason: "filter gain is zero".into() });
        }
        Ok(h)
    }
}

fn check_omega<T: Real>(omega: T) -> Result<(), DfError> {
    if omega > T::zero() && omega.is_finite() {
        Ok(())
    } else {
        Err(DfError::BadFrequency(omega.as_f64()))
    }
}
