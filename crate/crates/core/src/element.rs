//! The filtered integrator-gain element: sector set, projection operator,
//! mode classification and the equivalent three-mode piecewise-linear
//! realization.
//!
//! The controller state is stored flat as `[x_h, x_v1..., x_v2...]`, where
//! `x_v1`/`x_v2` are the states of the integrator-drive filter `F1` and the
//! switching filter `F2`.

use thiserror::Error;

use crate::linalg::{dot, Matrix};
use crate::lti::StateSpace;
use crate::scalar::Real;

/// Relative tolerance for membership of a sector line.
pub const BOUNDARY_TOL: f64 = 1e-9;
/// Relative tolerance on the sector product `(x_h - k1 v2)(x_h - k2 v2)`.
pub const SECTOR_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElementError {
    #[error("sector gains must satisfy k2 > k1 (k1 = {k1}, k2 = {k2})")]
    DegenerateSector { k1: f64, k2: f64 },
    #[error("omega_h must be positive, got {0}")]
    BadOmegaH(f64),
    #[error("alpha_h must be non-negative, got {0}")]
    BadAlphaH(f64),
    #[error("state dimension {got} does not match element dimension {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("state outside the sector: (x_h - k1 v2)(x_h - k2 v2) = {product} exceeds tolerance (x_h = {x_h}, v2 = {v2})")]
    OutsideSector { x_h: f64, v2: f64, product: f64 },
    #[error("mode classification is undefined for a degenerate (k1 = k2) sector")]
    DegenerateClassification,
}

/// Sector gains and first-order dynamics of the element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FhigsParams<T> {
    pub k1: T,
    pub k2: T,
    pub omega_h: T,
    pub alpha_h: T,
    degenerate: bool,
}

impl<T: Real> FhigsParams<T> {
    pub fn new(k1: T, k2: T, omega_h: T, alpha_h: T) -> Result<Self, ElementError> {
        if !(k2 > k1) {
            return Err(ElementError::DegenerateSector { k1: k1.as_f64(), k2: k2.as_f64() });
        }
        Self::check_rates(omega_h, alpha_h)?;
        Ok(Self { k1, k2, omega_h, alpha_h, degenerate: false })
    }

    /// HIGS-style integrator (`alpha_h = 0`).
    pub fn integrator(k1: T, k2: T, omega_h: T) -> Result<Self, ElementError> {
        Self::new(k1, k2, omega_h, T::zero())
    }

    /// Collapsed sector `k1 = k2 = k`: the element is the static gain `k v2`.
    /// Only the projection operator accepts it.
    pub fn pure_gain(k: T, omega_h: T, alpha_h: T) -> Result<Self, ElementError> {
        Self::check_rates(omega_h, alpha_h)?;
        Ok(Self { k1: k, k2: k, omega_h, alpha_h, degenerate: true })
    }

    fn check_rates(omega_h: T, alpha_h: T) -> Result<(), ElementError> {
        if !(omega_h > T::zero()) || !omega_h.is_finite() {
            return Err(ElementError::BadOmegaH(omega_h.as_f64()));
        }
        if !(alpha_h >= T::zero()) || !alpha_h.is_finite() {
            return Err(ElementError::BadAlphaH(alpha_h.as_f64()));
        }
        Ok(())
    }

    #[inline]
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// `max(|k1|, |k2|)`.
    pub fn k_h(&self) -> T {
        self.k1.abs().max(self.k2.abs())
    }

    #[inline]
    pub fn gain(&self, line: Line) -> T {
        match line {
            Line::K1 => self.k1,
            Line::K2 => self.k2,
        }
    }
}

/// One of the two sector boundary lines `x_h = k_i v2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Line {
    K1,
    K2,
}

/// Active dynamics of the piecewise-linear realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    /// First-order (integrator) dynamics, region F0.
    #[default]
    Integrator,
    /// Sliding on `x_h = k1 v2`, region F1.
    GainK1,
    /// Sliding on `x_h = k2 v2`, region F2.
    GainK2,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Integrator, Mode::GainK1, Mode::GainK2];

    /// 0, 1, 2 for integrator, k1-gain, k2-gain.
    pub fn index(self) -> usize {
        match self {
            Mode::Integrator => 0,
            Mode::GainK1 => 1,
            Mode::GainK2 => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn line(self) -> Option<Line> {
        match self {
            Mode::Integrator => None,
            Mode::GainK1 => Some(Line::K1),
            Mode::GainK2 => Some(Line::K2),
        }
    }

    pub fn from_line(line: Option<Line>) -> Self {
        match line {
            None => Mode::Integrator,
            Some(Line::K1) => Mode::GainK1,
            Some(Line::K2) => Mode::GainK2,
        }
    }
}

/// Structured view of the controller state.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementState<T> {
    pub x_h: T,
    pub x_v1: Vec<T>,
    pub x_v2: Vec<T>,
}

impl<T: Real> ElementState<T> {
    pub fn to_flat(&self) -> Vec<T> {
        let mut v = Vec::with_capacity(1 + self.x_v1.len() + self.x_v2.len());
        v.push(self.x_h);
        v.extend_from_slice(&self.x_v1);
        v.extend_from_slice(&self.x_v2);
        v
    }
}

/// Instantaneous element signals derived from `(x_c, e, e_dot)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Signals<T> {
    pub x_h: T,
    pub v1: T,
    pub v2: T,
    pub v2_dot: T,
    /// Unprojected rate `-alpha_h x_h + omega_h v1`.
    pub flow: T,
}

/// Result of the projection operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection<T> {
    pub velocity: Vec<T>,
    /// Line whose constraint multiplier is positive, if any.
    pub active: Option<Line>,
    /// KKT multiplier of the active constraint (zero when inactive).
    pub multiplier: T,
}

/// Filtered integrator-gain element: parameters plus the two filters.
#[derive(Debug, Clone, PartialEq)]
pub struct Fhigs<T> {
    pub params: FhigsParams<T>,
    pub f1: StateSpace<T>,
    pub f2: StateSpace<T>,
}

impl<T: Real> Fhigs<T> {
    pub fn new(params: FhigsParams<T>, f1: StateSpace<T>, f2: StateSpace<T>) -> Self {
        Self { params, f1, f2 }
    }

    /// Plain HIGS: both filters are unit gains.
    pub fn higs(params: FhigsParams<T>) -> Self {
        Self::new(params, StateSpace::identity(), StateSpace::identity())
    }

    /// Length of the flat controller state.
    #[inline]
    pub fn dim(&self) -> usize {
        1 + self.f1.order() + self.f2.order()
    }

    #[inline]
    fn v1_range(&self) -> std::ops::Range<usize> {
        1..1 + self.f1.order()
    }

    #[inline]
    fn v2_range(&self) -> std::ops::Range<usize> {
        1 + self.f1.order()..self.dim()
    }

    pub fn check_dim(&self, x: &[T]) -> Result<(), ElementError> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(ElementError::Dimension { expected: self.dim(), got: x.len() })
        }
    }

    pub fn state_from_flat(&self, x: &[T]) -> Result<ElementState<T>, ElementError> {
        self.check_dim(x)?;
        Ok(ElementState { x_h: x[0], x_v1: x[self.v1_range()].to_vec(), x_v2: x[self.v2_range()].to_vec() })
    }

    pub fn zero_state(&self) -> Vec<T> {
        vec![T::zero(); self.dim()]
    }

    #[inline]
    pub fn x_v1<'a>(&self, x: &'a [T]) -> &'a [T] {
        &x[self.v1_range()]
    }

    #[inline]
    pub fn x_v2<'a>(&self, x: &'a [T]) -> &'a [T] {
        &x[self.v2_range()]
    }

    #[inline]
    pub fn v2(&self, x: &[T], e: T) -> T {
        self.f2.output(self.x_v2(x), e)
    }

    pub fn signals(&self, x: &[T], e: T, e_dot: T) -> Signals<T> {
        let p = &self.params;
        let xv2 = self.x_v2(x);
        let v1 = self.f1.output(self.x_v1(x), e);
        let v2 = self.f2.output(xv2, e);
        let v2_dot = self.f2.output_rate_free(xv2, e) + self.f2.d() * e_dot;
        Signals { x_h: x[0], v1, v2, v2_dot, flow: -p.alpha_h * x[0] + p.omega_h * v1 }
    }

    /// Unprojected controller dynamics `f_c(x_c, e)` written into `out`.
    pub fn unprojected_into(&self, x: &[T], e: T, out: &mut [T]) {
        let p = &self.params;
        let v1 = self.f1.output(self.x_v1(x), e);
        out[0] = -p.alpha_h * x[0] + p.omega_h * v1;
        let (r1, r2) = (self.v1_range(), self.v2_range());
        self.f1.state_derivative_into(&x[r1.clone()], e, &mut out[r1]);
        self.f2.state_derivative_into(&x[r2.clone()], e, &mut out[r2]);
    }

    pub fn unprojected_dynamics(&self, state: &ElementState<T>, e: T) -> Result<Vec<T>, ElementError> {
        if state.x_v1.len() != self.f1.order() || state.x_v2.len() != self.f2.order() {
            return Err(ElementError::Dimension {
                expected: self.dim(),
                got: 1 + state.x_v1.len() + state.x_v2.len(),
            });
        }
        let x = state.to_flat();
        let mut out = vec![T::zero(); self.dim()];
        self.unprojected_into(&x, e, &mut out);
        Ok(out)
    }

    /// Assembles the three-mode realization `x_c' = A_i x_c + B_i [e, e']`.
    pub fn build_pwl(&self) -> PwlRealization<T> {
        let p = &self.params;
        let n = self.dim();
        let (r1, r2) = (self.v1_range(), self.v2_range());
        let mut a0 = Matrix::zeros(n, n);
        let mut b0 = Matrix::zeros(n, 2);
        for (i, ri) in r1.clone().enumerate() {
            for (j, cj) in r1.clone().enumerate() {
                a0[(ri, cj)] = self.f1.a()[(i, j)];
            }
            b0[(ri, 0)] = self.f1.b()[i];
        }
        for (i, ri) in r2.clone().enumerate() {
            for (j, cj) in r2.clone().enumerate() {
                a0[(ri, cj)] = self.f2.a()[(i, j)];
            }
            b0[(ri, 0)] = self.f2.b()[i];
        }
        let (mut a1, mut b1, mut a2, mut b2) = (a0.clone(), b0.clone(), a0.clone(), b0.clone());

        a0[(0, 0)] = -p.alpha_h;
        for (j, cj) in r1.enumerate() {
            a0[(0, cj)] = p.omega_h * self.f1.c()[j];
        }
        b0[(0, 0)] = p.omega_h * self.f1.d();

        // x_h rows of the gain modes: k_i * d/dt v2
        let n2 = self.f2.order();
        let ca: Vec<T> = (0..n2).map(|j| (0..n2).map(|i| self.f2.c()[i] * self.f2.a()[(i, j)]).sum()).collect();
        let cb = dot(self.f2.c(), self.f2.b());
        for (a, b, k) in [(&mut a1, &mut b1, p.k1), (&mut a2, &mut b2, p.k2)] {
            for (j, cj) in r2.clone().enumerate() {
                a[(0, cj)] = k * ca[j];
            }
            b[(0, 0)] = k * cb;
            b[(0, 1)] = k * self.f2.d();
        }
        PwlRealization { a: [a0, a1, a2], b: [b0, b1, b2] }
    }

    /// `(x_h - k1 v2)(x_h - k2 v2)`; non-positive inside the sector.
    #[inline]
    pub fn sector_product(&self, x_h: T, v2: T) -> T {
        (x_h - self.params.k1 * v2) * (x_h - self.params.k2 * v2)
    }

    #[inline]
    pub fn sector_scale(&self, x_h: T, v2: T) -> T {
        T::one().max(x_h.abs()).max((self.params.k1 * v2).abs()).max((self.params.k2 * v2).abs())
    }

    /// Sector product normalized by the squared signal scale, clipped at 0.
    pub fn sector_violation(&self, x_h: T, v2: T) -> T {
        let s = self.sector_scale(x_h, v2);
        (self.sector_product(x_h, v2) / (s * s)).max(T::zero())
    }

    pub fn in_sector(&self, x_h: T, v2: T) -> bool {
        self.sector_violation(x_h, v2) <= T::tol(SECTOR_TOL)
    }

    /// Projection of `x_h` onto the sector along the `x_h` axis.
    pub fn clamp_x_h(&self, x_h: T, v2: T) -> T {
        let (a, b) = (self.params.k1 * v2, self.params.k2 * v2);
        x_h.max(a.min(b)).min(a.max(b))
    }

    #[inline]
    fn boundary_tol(&self, x_h: T, kv: T) -> T {
        T::tol(BOUNDARY_TOL) * T::one().max(x_h.abs()).max(kv.abs())
    }

    /// Sign of `v2` used to orient the constraints; at the apex the
    /// one-sided sign `sign(v2_dot)` is used, and zero means undecided.
    #[inline]
    pub fn orientation(v2: T, v2_dot: T) -> T {
        if v2 != T::zero() {
            v2.signum()
        } else if v2_dot != T::zero() {
            v2_dot.signum()
        } else {
            T::zero()
        }
    }

    /// Region membership of `(x_c, e, e_dot)`.
    pub fn classify_mode(&self, x: &[T], e: T, e_dot: T) -> Result<Mode, ElementError> {
        self.check_dim(x)?;
        if self.params.degenerate {
            return Err(ElementError::DegenerateClassification);
        }
        let s = self.signals(x, e, e_dot);
        self.classify_signals(&s)
    }

    pub fn classify_signals(&self, s: &Signals<T>) -> Result<Mode, ElementError> {
        let p = &self.params;
        if !self.in_sector(s.x_h, s.v2) {
            return Err(ElementError::OutsideSector {
                x_h: s.x_h.as_f64(),
                v2: s.v2.as_f64(),
                product: self.sector_product(s.x_h, s.v2).as_f64(),
            });
        }
        let sigma = Self::orientation(s.v2, s.v2_dot);
        let on = |k: T| (s.x_h - k * s.v2).abs() <= self.boundary_tol(s.x_h, k * s.v2);
        let k1_holds = on(p.k1) && sigma * (p.k1 * s.v2_dot - s.flow) > T::zero();
        let k2_holds = on(p.k2) && sigma * (p.k2 * s.v2_dot - s.flow) < T::zero();
        Ok(match (k1_holds, k2_holds) {
            (true, false) => Mode::GainK1,
            (false, true) => Mode::GainK2,
            _ => Mode::Integrator,
        })
    }

    /// Projection of the velocity `unprojected` (the controller part of
    /// `f`) onto the tangent cone of the sector along the `x_h` direction,
    /// computed from the KKT conditions of the minimal-norm correction.
    pub fn project_velocity(&self, x: &[T], e: T, e_dot: T, unprojected: &[T]) -> Result<Projection<T>, ElementError> {
        self.check_dim(unprojected)?;
        let mut velocity = unprojected.to_vec();
        let (active, multiplier) = self.project_in_place(x, e, e_dot, &mut velocity)?;
        Ok(Projection { velocity, active, multiplier })
    }

    /// In-place form of [`Fhigs::project_velocity`]; returns the active line
    /// and its multiplier.
    pub fn project_in_place(&self, x: &[T], e: T, e_dot: T, velocity: &mut [T]) -> Result<(Option<Line>, T), ElementError> {
        self.project_frozen(x, e, e_dot, velocity, None)
    }

    /// As [`Fhigs::project_in_place`], optionally with the candidate active
    /// constraint and its orientation (`sign v2`) fixed by the caller rather
    /// than read from the state. Integrators use this to hold the active set
    /// over a sliding step, where the apex makes both ambiguous.
    pub fn project_frozen(
        &self,
        x: &[T],
        e: T,
        e_dot: T,
        velocity: &mut [T],
        frozen: Option<(Line, T)>,
    ) -> Result<(Option<Line>, T), ElementError> {
        self.check_dim(x)?;
        self.check_dim(velocity)?;
        let p = &self.params;
        let x_h = x[0];
        let v2 = self.v2(x, e);
        if !self.in_sector(x_h, v2) {
            return Err(ElementError::OutsideSector {
                x_h: x_h.as_f64(),
                v2: v2.as_f64(),
                product: self.sector_product(x_h, v2).as_f64(),
            });
        }
        // Constraint rows over [x_c; e]:
        //   M1 = [ 1, 0, -k1 C_v2, -k1 D_v2],  M2 = [-1, 0, k2 C_v2, k2 D_v2]
        // and their rates along f' = [f_c; e_dot].
        let v2_rate = dot(self.f2.c(), &velocity[self.v2_range()]) + self.f2.d() * e_dot;
        if p.degenerate {
            let m = (p.k1 * v2_rate - velocity[0]).abs();
            velocity[0] = p.k1 * v2_rate;
            return Ok((Some(Line::K2), m));
        }
        let rows = [(Line::K1, T::one(), p.k1), (Line::K2, -T::one(), p.k2)];
        let sigma = frozen.map_or_else(|| Self::orientation(v2, v2_rate), |f| f.1);
        let mut violated: Option<(Line, T)> = None;
        let mut count = 0;
        for (line, lead, k) in rows {
            if frozen.is_some_and(|f| f.0 != line) {
                continue;
            }
            let value = lead * (x_h - k * v2);
            if value.abs() > self.boundary_tol(x_h, k * v2) {
                continue;
            }
            let rate = sigma * lead * (velocity[0] - k * v2_rate);
            if rate < T::zero() {
                count += 1;
                violated = Some((line, -rate));
            }
        }
        let Some((line, lambda)) = violated.filter(|_| count == 1) else {
            return Ok((None, T::zero()));
        };
        // x_h' + (E'^T E')^{-1} E'^T F_I^T lambda, which lands exactly on k v2'
        velocity[0] = p.gain(line) * v2_rate;
        Ok((Some(line), lambda))
    }
}

/// Mode matrices of the piecewise-linear realization, indexed by
/// [`Mode::index`]. `b[i]` has two columns acting on `[e, e_dot]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PwlRealization<T> {
    pub a: [Matrix<T>; 3],
    pub b: [Matrix<T>; 3],
}

impl<T: Real> PwlRealization<T> {
    pub fn a(&self, mode: Mode) -> &Matrix<T> {
        &self.a[mode.index()]
    }

    pub fn b(&self, mode: Mode) -> &Matrix<T> {
        &self.b[mode.index()]
    }

    /// `A_i x + B_i [e, e_dot]` into `out`.
    #[inline]
    pub fn derivative_into(&self, mode: Mode, x: &[T], e: T, e_dot: T, out: &mut [T]) {
        let i = mode.index();
        self.a[i].mul_vec_into(x, out);
        let b = &self.b[i];
        for (r, o) in out.iter_mut().enumerate() {
            *o = *o + b[(r, 0)] * e + b[(r, 1)] * e_dot;
        }
    }

    pub fn derivative(&self, mode: Mode, x: &[T], e: T, e_dot: T) -> Vec<T> {
        let mut out = vec![T::zero(); x.len()];
        self.derivative_into(mode, x, e, e_dot, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{notch, tf_to_ss, TransferFunction};
    use std::f64::consts::PI;

    fn higs(omega_h: f64) -> Fhigs<f64> {
        Fhigs::higs(FhigsParams::integrator(0.0, 1.0, omega_h).unwrap())
    }

    #[test]
    fn params_validation() {
        assert!(FhigsParams::new(1.0, 1.0, 1.0, 0.0).is_err());
        assert!(FhigsParams::new(0.0, 1.0, 0.0, 0.0).is_err());
        assert!(FhigsParams::new(0.0, 1.0, 1.0, -1.0).is_err());
        let g = FhigsParams::pure_gain(2.0, 1.0, 0.0).unwrap();
        assert!(g.is_degenerate());
        assert_eq!(FhigsParams::new(-3.0, 2.0, 1.0, 0.0).unwrap().k_h(), 3.0);
    }

    #[test]
    fn unprojected_integrator_and_leakage() {
        let el = higs(100.0);
        let s = ElementState { x_h: 0.0, x_v1: vec![], x_v2: vec![] };
        assert_eq!(el.unprojected_dynamics(&s, 1.0).unwrap(), vec![100.0]);
        let leaky = Fhigs::higs(FhigsParams::new(0.0, 1.0, 100.0, 2.0).unwrap());
        let s = ElementState { x_h: 5.0, x_v1: vec![], x_v2: vec![] };
        assert_eq!(leaky.unprojected_dynamics(&s, 0.0).unwrap(), vec![-10.0]);
    }

    #[test]
    fn classify_examples() {
        let el = higs(100.0);
        // strict interior
        assert_eq!(el.classify_mode(&[0.5], 1.0, 3.0).unwrap(), Mode::Integrator);
        // on the upper line with the flow pointing out
        assert_eq!(el.classify_mode(&[0.8], 0.8, 0.0).unwrap(), Mode::GainK2);
        // apex with inward flow: v2' = 1, x_h' = 0 lies between k1 v2' and k2 v2'
        assert_eq!(el.classify_mode(&[0.0], 0.0, 1.0).unwrap(), Mode::Integrator);
        // outside
        assert!(matches!(el.classify_mode(&[2.0], 1.0, 0.0), Err(ElementError::OutsideSector { .. })));
    }

    #[test]
    fn apex_tie_break_uses_one_sided_sign() {
        let el = higs(100.0);
        // at the apex with v2 about to go positive, flow above k2 v2' exits through k2
        let mode = el.classify_mode(&[0.0], 0.0, 0.1).unwrap();
        // flow = 100 * 0 = 0 here, so still inward
        assert_eq!(mode, Mode::Integrator);
        // with a leak and x_h = 0 nothing changes; use F2 with state to get nonzero flow at v2 = 0
        let f2 = tf_to_ss(&TransferFunction::new(vec![1.0], vec![1.0, 1.0]).unwrap());
        let el = Fhigs::new(FhigsParams::integrator(0.0, 1.0, 100.0).unwrap(), StateSpace::identity(), f2);
        // x_v2 = 0 -> v2 = 0, v2' = e = 1, flow = 100 e = 100 > k2 v2' = 1
        assert_eq!(el.classify_mode(&[0.0, 0.0], 1.0, 0.0).unwrap(), Mode::GainK2);
        // v2' = 0 as well: undecided -> integrator
        assert_eq!(el.classify_mode(&[0.0, 0.0], 0.0, 0.0).unwrap(), Mode::Integrator);
    }

    #[test]
    fn build_pwl_for_plain_higs() {
        let pwl = higs(100.0).build_pwl();
        assert_eq!(pwl.a(Mode::Integrator).as_slice(), &[0.0]);
        assert_eq!(pwl.b(Mode::Integrator).as_slice(), &[100.0, 0.0]);
        assert_eq!(pwl.a(Mode::GainK2).as_slice(), &[0.0]);
        assert_eq!(pwl.b(Mode::GainK2).as_slice(), &[0.0, 1.0]);
        assert_eq!(pwl.b(Mode::GainK1).as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn build_pwl_with_notch_f2() {
        let f2 = tf_to_ss(&notch(20.0 * PI, 0.02, 0.2).unwrap());
        let el = Fhigs::new(FhigsParams::integrator(0.0, 1.5, 100.0).unwrap(), StateSpace::identity(), f2.clone());
        let pwl = el.build_pwl();
        assert_eq!((pwl.a(Mode::GainK2).nrows(), pwl.a(Mode::GainK2).ncols()), (3, 3));
        // by hand: C A for the 2x2 companion A = [[0,1],[-a2,-a1]]
        let (c, a) = (f2.c(), f2.a());
        let ca = [c[1] * a[(1, 0)], c[0] + c[1] * a[(1, 1)]];
        assert!((pwl.a(Mode::GainK2)[(0, 1)] - 1.5 * ca[0]).abs() < 1e-9);
        assert!((pwl.a(Mode::GainK2)[(0, 2)] - 1.5 * ca[1]).abs() < 1e-9);
        assert_eq!(pwl.a(Mode::GainK1).row(0), &[0.0, 0.0, 0.0]);
        assert_eq!(pwl.b(Mode::GainK1).row(0), &[0.0, 0.0]);
        assert_eq!(pwl.a(Mode::Integrator).row(0), &[0.0, 0.0, 0.0]);
        assert_eq!(pwl.b(Mode::GainK2)[(0, 1)], 1.5 * f2.d());
    }

    #[test]
    fn projection_examples() {
        let el = higs(100.0);
        // interior: unchanged
        let p = el.project_velocity(&[0.5], 1.0, 2.0, &[100.0]).unwrap();
        assert_eq!(p.velocity, vec![100.0]);
        assert_eq!(p.active, None);
        // on the k2 line flowing out: x_h' = k2 v2' = e_dot
        let p = el.project_velocity(&[0.8], 0.8, -0.3, &[80.0]).unwrap();
        assert_eq!(p.velocity, vec![-0.3]);
        assert_eq!(p.active, Some(Line::K2));
        assert!((p.multiplier - 80.3).abs() < 1e-12);
        // on the k2 line flowing in: unchanged
        let p = el.project_velocity(&[0.8], 0.8, 5.0, &[2.0]).unwrap();
        assert_eq!(p.velocity, vec![2.0]);
    }

    #[test]
    fn degenerate_projection_is_a_gain() {
        let el = Fhigs::higs(FhigsParams::pure_gain(2.0, 10.0, 0.0).unwrap());
        let p = el.project_velocity(&[1.0], 0.5, 3.0, &[5.0]).unwrap();
        assert_eq!(p.velocity, vec![6.0]);
        assert!(el.classify_mode(&[1.0], 0.5, 3.0).is_err());
    }

    #[test]
    fn clamp_projects_along_x_h() {
        let el = Fhigs::higs(FhigsParams::integrator(-0.5, 2.0, 1.0).unwrap());
        assert_eq!(el.clamp_x_h(5.0, 1.0), 2.0);
        assert_eq!(el.clamp_x_h(-5.0, 1.0), -0.5);
        assert_eq!(el.clamp_x_h(5.0, -1.0), 0.5);
        assert_eq!(el.clamp_x_h(0.1, 1.0), 0.1);
    }
}
