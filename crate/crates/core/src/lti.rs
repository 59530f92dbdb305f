//! SISO transfer functions, their controllable-canonical state-space
//! realizations, and frequency responses.

use num_complex::Complex;
use thiserror::Error;

use crate::linalg::{self, Matrix};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LtiError {
    #[error("denominator is empty or has a zero leading coefficient")]
    BadDenominator,
    #[error("transfer function is improper: numerator degree {num} > denominator degree {den}")]
    Improper { num: usize, den: usize },
    #[error("non-finite coefficient in transfer function")]
    NonFinite,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("s = j{omega} is a pole of the system")]
    PoleOnAxis { omega: f64 },
    #[error("frequency must be positive and finite, got {0}")]
    BadFrequency(f64),
    #[error("notch parameters must be positive (omega_n = {omega_n}, beta1 = {beta1}, beta2 = {beta2})")]
    BadNotch { omega_n: f64, beta1: f64, beta2: f64 },
    #[error("transfer function is not invertible (numerator degree must equal denominator degree)")]
    NotInvertible,
}

/// Rational transfer function `num(s) / den(s)`, coefficients in descending
/// powers of `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction<T> {
    num: Vec<T>,
    den: Vec<T>,
}

impl<T: Real> TransferFunction<T> {
    /// Builds a proper transfer function. Leading zeros of the numerator are
    /// dropped before the degree check.
    pub fn new(num: Vec<T>, den: Vec<T>) -> Result<Self, LtiError> {
        if num.iter().chain(&den).any(|c| !c.is_finite()) {
            return Err(LtiError::NonFinite);
        }
        if den.first().is_none_or(|c| *c == T::zero()) {
            return Err(LtiError::BadDenominator);
        }
        let first = num.iter().position(|c| *c != T::zero());
        let num = match first {
            Some(i) => num[i..].to_vec(),
            None => vec![T::zero()],
        };
        if num.len() > den.len() {
            return Err(LtiError::Improper { num: num.len() - 1, den: den.len() - 1 });
        }
        Ok(Self { num, den })
    }

    pub fn gain(k: T) -> Self {
        Self { num: vec![k], den: vec![T::one()] }
    }

    pub fn num(&self) -> &[T] {
        &self.num
    }

    pub fn den(&self) -> &[T] {
        &self.den
    }

    pub fn order(&self) -> usize {
        self.den.len() - 1
    }

    pub fn is_biproper(&self) -> bool {
        self.num.len() == self.den.len() && self.num[0] != T::zero()
    }

    /// Direct evaluation at a complex point.
    pub fn eval(&self, s: Complex<T>) -> Complex<T> {
        linalg::poly_eval_complex(&self.num, s) / linalg::poly_eval_complex(&self.den, s)
    }

    /// Cascade `self * other`.
    pub fn series(&self, other: &Self) -> Self {
        Self {
            num: linalg::poly_mul(&self.num, &other.num),
            den: linalg::poly_mul(&self.den, &other.den),
        }
    }

    /// `1 / self`; only biproper transfer functions stay proper.
    pub fn inverse(&self) -> Result<Self, LtiError> {
        if !self.is_biproper() {
            return Err(LtiError::NotInvertible);
        }
        Self::new(self.den.clone(), self.num.clone())
    }

    pub fn to_state_space(&self) -> StateSpace<T> {
        tf_to_ss(self)
    }
}

/// SISO state-space system `x' = A x + B u`, `y = C x + D u`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace<T> {
    a: Matrix<T>,
    b: Vec<T>,
    c: Vec<T>,
    d: T,
}

impl<T: Real> StateSpace<T> {
    pub fn new(a: Matrix<T>, b: Vec<T>, c: Vec<T>, d: T) -> Result<Self, LtiError> {
        let n = b.len();
        if a.nrows() != n || a.ncols() != n || c.len() != n {
            return Err(LtiError::Dimension(format!(
                "A is {}x{}, B has {} rows, C has {} columns",
                a.nrows(),
                a.ncols(),
                n,
                c.len()
            )));
        }
        Ok(Self { a, b, c, d })
    }

    /// Static gain `y = d u` with no states.
    pub fn gain(d: T) -> Self {
        Self { a: Matrix::zeros(0, 0), b: Vec::new(), c: Vec::new(), d }
    }

    pub fn identity() -> Self {
        Self::gain(T::one())
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self) -> &Matrix<T> {
        &self.a
    }

    pub fn b(&self) -> &[T] {
        &self.b
    }

    pub fn c(&self) -> &[T] {
        &self.c
    }

    pub fn d(&self) -> T {
        self.d
    }

    #[inline]
    pub fn output(&self, x: &[T], u: T) -> T {
        linalg::dot(&self.c, x) + self.d * u
    }

    /// `A x + B u` written into `out`.
    #[inline]
    pub fn state_derivative_into(&self, x: &[T], u: T, out: &mut [T]) {
        self.a.mul_vec_into(x, out);
        for (o, b) in out.iter_mut().zip(&self.b) {
            *o = *o + *b * u;
        }
    }

    pub fn state_derivative(&self, x: &[T], u: T) -> Vec<T> {
        let mut out = vec![T::zero(); self.order()];
        self.state_derivative_into(x, u, &mut out);
        out
    }

    /// `C (A x + B u)`, the output rate excluding the feedthrough of `u_dot`.
    #[inline]
    pub fn output_rate_free(&self, x: &[T], u: T) -> T {
        let mut acc = T::zero();
        for (i, ci) in self.c.iter().enumerate() {
            if *ci == T::zero() {
                continue;
            }
            acc = acc + *ci * (linalg::dot(self.a.row(i), x) + self.b[i] * u);
        }
        acc
    }

    /// `y = C x + D u`, `y' = C (A x + B u) + D u'`.
    pub fn derivative_output(&self, x: &[T], u: T, u_dot: T) -> Result<(T, T), LtiError> {
        if x.len() != self.order() {
            return Err(LtiError::Dimension(format!("state has {} entries, system order is {}", x.len(), self.order())));
        }
        Ok((self.output(x, u), self.output_rate_free(x, u) + self.d * u_dot))
    }

    /// `C (j w I - A)^{-1} B + D`.
    pub fn eval_jw(&self, omega: T) -> Result<Complex<T>, LtiError> {
        let n = self.order();
        let d = Complex::new(self.d, T::zero());
        if n == 0 {
            return Ok(d);
        }
        let m: Vec<Vec<Complex<T>>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let diag = if i == j { omega } else { T::zero() };
                        Complex::new(-self.a[(i, j)], diag)
                    })
                    .collect()
            })
            .collect();
        let rhs = self.b.iter().map(|b| Complex::new(*b, T::zero())).collect();
        let x = linalg::solve_complex(m, rhs).ok_or(LtiError::PoleOnAxis { omega: omega.as_f64() })?;
        let y = self.c.iter().zip(&x).fold(d, |acc, (c, xi)| acc + *xi * *c);
        Ok(y)
    }

    /// True when every eigenvalue of `A` has a negative real part. A static
    /// gain (no states) counts as stable.
    pub fn is_hurwitz(&self) -> bool {
        self.order() == 0 || linalg::is_hurwitz_poly(&linalg::char_poly(&self.a))
    }
}

/// Gain and wrapped phase of a system at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyResponse<T> {
    pub omega: T,
    pub gain: T,
    /// Radians in (-pi, pi].
    pub phase: T,
}

impl<T: Real> FrequencyResponse<T> {
    pub fn from_complex(omega: T, z: Complex<T>) -> Self {
        Self { omega, gain: z.norm(), phase: wrap_phase(z.arg()) }
    }

    pub fn to_complex(&self) -> Complex<T> {
        Complex::from_polar(self.gain, self.phase)
    }
}

/// Maps an angle into (-pi, pi].
pub fn wrap_phase<T: Real>(phi: T) -> T {
    let two_pi = T::TAU();
    let mut p = phi % two_pi;
    if p > T::PI() {
        p = p - two_pi;
    }
    if p <= -T::PI() {
        p = p + two_pi;
    }
    p
}

/// Controllable canonical realization after normalizing the denominator to
/// be monic. Biproper functions get `D` = ratio of leading coefficients.
pub fn tf_to_ss<T: Real>(tf: &TransferFunction<T>) -> StateSpace<T> {
    let lead = tf.den[0];
    let den: Vec<T> = tf.den.iter().map(|c| *c / lead).collect();
    let n = den.len() - 1;
    let mut num = vec![T::zero(); n + 1 - tf.num.len()];
    num.extend(tf.num.iter().map(|c| *c / lead));
    let d = num[0];
    let mut a = Matrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        a[(i, i + 1)] = T::one();
    }
    if n > 0 {
        for j in 0..n {
            // last row: -a_n, ..., -a_1
            a[(n - 1, j)] = -den[n - j];
        }
    }
    let mut b = vec![T::zero(); n];
    if n > 0 {
        b[n - 1] = T::one();
    }
    let c = (0..n).map(|j| num[n - j] - d * den[n - j]).collect();
    StateSpace { a, b, c, d }
}

/// Gain and phase of `ss` at `omega` rad/s.
pub fn freq_response<T: Real>(ss: &StateSpace<T>, omega: T) -> Result<FrequencyResponse<T>, LtiError> {
    if !(omega > T::zero()) || !omega.is_finite() {
        return Err(LtiError::BadFrequency(omega.as_f64()));
    }
    Ok(FrequencyResponse::from_complex(omega, ss.eval_jw(omega)?))
}

/// Inverted-notch / notch filter
/// `(s^2/w^2 + 2 b1 s / w + 1) / (s^2/w^2 + 2 b2 s / w + 1)`.
/// `b1 > b2` lifts the response around `omega_n` by `b1/b2`; `b1 < b2`
/// attenuates it.
pub fn notch<T: Real>(omega_n: T, beta1: T, beta2: T) -> Result<TransferFunction<T>, LtiError> {
    let ok = |x: T| x > T::zero() && x.is_finite();
    if !(ok(omega_n) && ok(beta1) && ok(beta2)) {
        return Err(LtiError::BadNotch { omega_n: omega_n.as_f64(), beta1: beta1.as_f64(), beta2: beta2.as_f64() });
    }
    let two = T::lit(2.0);
    let w2 = T::one() / (omega_n * omega_n);
    TransferFunction::new(vec![w2, two * beta1 / omega_n, T::one()], vec![w2, two * beta2 / omega_n, T::one()])
}

/// Convenience wrapper around [`StateSpace::derivative_output`].
pub fn lti_derivative_output<T: Real>(ss: &StateSpace<T>, x: &[T], u: T, u_dot: T) -> Result<(T, T), LtiError> {
    ss.derivative_output(x, u, u_dot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn lead_filter() -> TransferFunction<f64> {
        let wf = 20.0 * PI;
        TransferFunction::new(vec![9.0, 6.0 * wf], vec![4.0, 6.0 * wf]).unwrap()
    }

    #[test]
    fn unit_gain_realizes_to_pure_feedthrough() {
        let ss = tf_to_ss(&TransferFunction::new(vec![1.0], vec![1.0]).unwrap());
        assert_eq!(ss.order(), 0);
        assert_eq!(ss.d(), 1.0);
        let fr = freq_response(&ss, 3.0).unwrap();
        assert_eq!((fr.gain, fr.phase), (1.0, 0.0));
    }

    #[test]
    fn first_order_corner() {
        let w = 2.0 * PI * 10.0;
        let ss = tf_to_ss(&TransferFunction::new(vec![w], vec![1.0, w]).unwrap());
        assert_eq!(ss.order(), 1);
        let fr = freq_response(&ss, w).unwrap();
        assert!((fr.gain - 1.0 / 2f64.sqrt()).abs() < 1e-14);
        assert!((fr.phase + PI / 4.0).abs() < 1e-14);
    }

    #[test]
    fn notch_peak_is_beta_ratio() {
        let n = notch(2.0 * PI, 0.2, 0.02).unwrap();
        let ss = tf_to_ss(&n);
        assert_eq!(ss.order(), 2);
        let fr = freq_response(&ss, 2.0 * PI).unwrap();
        assert!((fr.gain - 10.0).abs() < 1e-10);
        assert!(fr.phase.abs() < 1e-12);
    }

    #[test]
    fn equal_betas_give_identity() {
        let n = notch(5.0f64, 0.3, 0.3).unwrap();
        for w in [0.1, 1.0, 5.0, 50.0] {
            let fr = freq_response(&tf_to_ss(&n), w).unwrap();
            assert!((fr.gain - 1.0).abs() < 1e-12 && fr.phase.abs() < 1e-12);
        }
    }

    #[test]
    fn notch_rejects_non_positive_parameters() {
        assert!(matches!(notch(0.0, 0.1, 0.1), Err(LtiError::BadNotch { .. })));
        assert!(matches!(notch(1.0, -0.1, 0.1), Err(LtiError::BadNotch { .. })));
    }

    #[test]
    fn lead_filter_limits_and_direct_evaluation() {
        let tf = lead_filter();
        let ss = tf_to_ss(&tf);
        assert!(tf.is_biproper());
        assert!((ss.d() - 9.0 / 4.0).abs() < 1e-15);
        let low = freq_response(&ss, 1e-6).unwrap();
        assert!((low.gain - 1.0).abs() < 1e-9);
        let high = freq_response(&ss, 1e9).unwrap();
        assert!((high.gain - 2.25).abs() < 1e-9);
        let w = 8.0 * PI;
        let fr = freq_response(&ss, w).unwrap();
        let direct = tf.eval(Complex::new(0.0, w));
        assert!((fr.gain - direct.norm()).abs() < 1e-13);
        assert!((fr.phase - direct.arg()).abs() < 1e-13);
    }

    #[test]
    fn improper_rejected() {
        assert_eq!(
            TransferFunction::new(vec![1.0, 0.0, 0.0], vec![1.0, 1.0]).unwrap_err(),
            LtiError::Improper { num: 2, den: 1 }
        );
        assert_eq!(TransferFunction::new(vec![1.0], vec![0.0, 1.0]).unwrap_err(), LtiError::BadDenominator);
    }

    #[test]
    fn pole_on_axis_rejected() {
        let ss = tf_to_ss(&TransferFunction::new(vec![1.0], vec![1.0, 0.0, 4.0]).unwrap());
        assert!(matches!(freq_response(&ss, 2.0), Err(LtiError::PoleOnAxis { .. })));
        assert!(matches!(freq_response(&ss, -1.0), Err(LtiError::BadFrequency(_))));
    }

    #[test]
    fn derivative_output_passthrough_and_first_order() {
        let id = StateSpace::<f64>::identity();
        assert_eq!(id.derivative_output(&[], 0.3, -2.0).unwrap(), (0.3, -2.0));
        let w = 2.0 * PI * 10.0;
        let lp = tf_to_ss(&TransferFunction::new(vec![w], vec![1.0, w]).unwrap());
        let (y, yd) = lp.derivative_output(&[0.0], 1.0, 0.0).unwrap();
        // canonical form: B = [1], C = [w]
        assert_eq!(y, 0.0);
        assert!((yd - lp.c()[0] * lp.b()[0]).abs() < 1e-15);
        assert!((yd - w).abs() < 1e-12);
        assert!(lp.derivative_output(&[0.0, 1.0], 1.0, 0.0).is_err());
    }

    #[test]
    fn notch_inverse_is_beta_swap() {
        let n = notch(3.0, 0.5, 0.05).unwrap();
        let inv = n.inverse().unwrap();
        let swapped = notch(3.0, 0.05, 0.5).unwrap();
        for w in [0.3, 3.0, 30.0] {
            let s = Complex::new(0.0, w);
            assert!((inv.eval(s) - swapped.eval(s)).norm() < 1e-12);
        }
    }

    #[test]
    fn hurwitz_check_on_realizations() {
        assert!(tf_to_ss(&lead_filter()).is_hurwitz());
        let unstable = TransferFunction::new(vec![1.0], vec![20.0, 0.0, -5000.0]).unwrap();
        assert!(!tf_to_ss(&unstable).is_hurwitz());
        assert!(StateSpace::<f64>::identity().is_hurwitz());
    }

    #[test]
    fn wraps_phase_into_half_open_interval() {
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(-0.5 - 4.0 * PI) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_precision_realization() {
        let tf = TransferFunction::<f32>::new(vec![9.0, 6.0 * 20.0 * std::f32::consts::PI], vec![4.0, 6.0 * 20.0 * std::f32::consts::PI])
            .unwrap();
        let fr = freq_response(&tf_to_ss(&tf), 1e6f32).unwrap();
        assert!((fr.gain - 2.25).abs() < 1e-4);
    }
}
