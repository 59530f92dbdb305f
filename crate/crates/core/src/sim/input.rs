use crate::scalar::Real;

use super::SimError;

/// One sinusoidal component `amplitude * sin(omega t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sine<T> {
    pub amplitude: T,
    pub omega: T,
    pub phase: T,
}

impl<T: Real> Sine<T> {
    pub fn new(amplitude: T, omega: T, phase: T) -> Self {
        Self { amplitude, omega, phase }
    }

    #[inline]
    fn value(&self, t: T) -> T {
        self.amplitude * (self.omega * t + self.phase).sin()
    }

    #[inline]
    fn rate(&self, t: T) -> T {
        self.amplitude * self.omega * (self.omega * t + self.phase).cos()
    }
}

/// Differentiable scalar signal with analytic derivative.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSignal<T> {
    Zero,
    Sine(Sine<T>),
    SumOfSines(Vec<Sine<T>>),
    /// Step of `amplitude` starting at `t0`, smoothed by a C1 ramp of
    /// duration `rise`.
    Step { amplitude: T, t0: T, rise: T },
}

impl<T: Real> InputSignal<T> {
    pub fn zero() -> Self {
        Self::Zero
    }

    pub fn sine(amplitude: T, omega: T, phase: T) -> Result<Self, SimError> {
        Self::Sine(Sine::new(amplitude, omega, phase)).validated()
    }

    pub fn sum_of_sines(terms: Vec<Sine<T>>) -> Result<Self, SimError> {
        Self::SumOfSines(terms).validated()
    }

    pub fn step(amplitude: T, t0: T, rise: T) -> Result<Self, SimError> {
        if !(rise > T::zero()) {
            return Err(SimError::Input(format!("step rise time must be positive, got {rise}")));
        }
        Self::Step { amplitude, t0, rise }.validated()
    }

    pub fn value(&self, t: T) -> T {
        match self {
            Self::Zero => T::zero(),
            Self::Sine(s) => s.value(t),
            Self::SumOfSines(v) => v.iter().map(|s| s.value(t)).sum(),
            Self::Step { amplitude, t0, rise } => {
                let s = ((t - *t0) / *rise).max(T::zero()).min(T::one());
                *amplitude * s * s * (T::lit(3.0) - T::lit(2.0) * s)
            }
        }
    }

    pub fn derivative(&self, t: T) -> T {
        match self {
            Self::Zero => T::zero(),
            Self::Sine(s) => s.rate(t),
            Self::SumOfSines(v) => v.iter().map(|s| s.rate(t)).sum(),
            Self::Step { amplitude, t0, rise } => {
                let s = (t - *t0) / *rise;
                if s <= T::zero() || s >= T::one() {
                    T::zero()
                } else {
                    *amplitude * T::lit(6.0) * s * (T::one() - s) / *rise
                }
            }
        }
    }

    /// Largest angular frequency present, used to pick finite-difference
    /// steps; steps report `pi / rise`.
    fn bandwidth(&self) -> T {
        match self {
            Self::Zero => T::one(),
            Self::Sine(s) => s.omega.abs(),
            Self::SumOfSines(v) => v.iter().fold(T::zero(), |m, s| m.max(s.omega.abs())),
            Self::Step { rise, .. } => T::PI() / *rise,
        }
    }

    fn scale(&self) -> T {
        match self {
            Self::Zero => T::one(),
            Self::Sine(s) => s.amplitude.abs(),
            Self::SumOfSines(v) => v.iter().map(|s| s.amplitude.abs()).sum(),
            Self::Step { amplitude, .. } => amplitude.abs(),
        }
    }

    /// Central-difference check of the analytic derivative at a handful of
    /// points; the allowed mismatch is second order in the probe step.
    pub fn check_derivative(&self) -> Result<(), SimError> {
        let w = self.bandwidth().max(T::tol(1e-12));
        let scale = self.scale().max(T::min_positive_value());
        let d = T::lit(1e-3) / w;
        let bound = scale * w * w * w * d * d + T::tol(1e-9) * scale * w;
        let period = T::TAU() / w;
        for i in 0..17 {
            let t = period * T::from_count(i) / T::lit(7.3);
            let t = match self {
                Self::Step { t0, rise, .. } => *t0 + *rise * (T::from_count(i) + T::lit(0.5)) / T::lit(17.0),
                _ => t,
            };
            let fd = (self.value(t + d) - self.value(t - d)) / (d + d);
            let err = (fd - self.derivative(t)).abs();
            if !(err <= bound) {
                return Err(SimError::Input(format!("derivative mismatch {err} at t = {t}")));
            }
        }
        Ok(())
    }

    fn validated(self) -> Result<Self, SimError> {
        let finite = match &self {
            Self::Zero => true,
            Self::Sine(s) => [s.amplitude, s.omega, s.phase].iter().all(|v| v.is_finite()),
            Self::SumOfSines(v) => v.iter().all(|s| [s.amplitude, s.omega, s.phase].iter().all(|v| v.is_finite())),
            Self::Step { amplitude, t0, rise } => [*amplitude, *t0, *rise].iter().all(|v| v.is_finite()),
        };
        if !finite {
            return Err(SimError::Input("non-finite signal parameter".into()));
        }
        self.check_derivative()?;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_value_and_rate() {
        let s = InputSignal::sine(2.0, 3.0, 0.5).unwrap();
        assert!((s.value(0.1) - 2.0 * (0.8f64).sin()).abs() < 1e-15);
        assert!((s.derivative(0.1) - 6.0 * (0.8f64).cos()).abs() < 1e-15);
    }

    #[test]
    fn step_is_c1_and_saturates() {
        let s = InputSignal::step(2.0f64, 1.0, 1e-4).unwrap();
        assert_eq!(s.value(0.5), 0.0);
        assert_eq!(s.value(2.0), 2.0);
        assert!((s.value(1.0 + 5e-5) - 1.0).abs() < 1e-9);
        assert_eq!(s.derivative(1.0), 0.0);
        assert_eq!(s.derivative(1.0 + 2e-4), 0.0);
        assert!((s.derivative(1.0 + 5e-5) - 2.0 * 1.5 / 1e-4).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(InputSignal::step(1.0, 0.0, 0.0).is_err());
        assert!(InputSignal::sine(f64::NAN, 1.0, 0.0).is_err());
    }

    #[test]
    fn sum_of_sines_adds() {
        let s = InputSignal::sum_of_sines(vec![Sine::new(1.0, 1.0, 0.0), Sine::new(0.5, 10.0, 0.3)]).unwrap();
        let t: f64 = 0.37;
        let v = t.sin() + 0.5 * (10.0 * t + 0.3).sin();
        assert!((s.value(t) - v).abs() < 1e-15);
    }
}
