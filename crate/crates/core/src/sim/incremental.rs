use crate::element::Fhigs;
use crate::linalg::norm2;
use crate::scalar::Real;

use super::{simulate_open_loop, InputSignal, SimConfig, SimError};

/// Difference between two responses to the same input, sampled on the
/// common grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IncrementalReport<T> {
    pub t: Vec<T>,
    /// `||delta x_c||`.
    pub gap: Vec<T>,
    pub dx_h: Vec<T>,
    /// `||delta x_v||` over both filter states.
    pub dx_v: Vec<T>,
    /// `delta v2`.
    pub dv: Vec<T>,
    /// `k_h * sup_{s >= t} |delta v2(s)|`, the half-width of the box the
    /// `x_h` difference is eventually confined to.
    pub kh_rho: Vec<T>,
    pub k1: T,
    pub k2: T,
    /// Worst normalized sector product over both runs.
    pub max_sector_violation: T,
}

impl<T: Real> IncrementalReport<T> {
    /// `gap(T) / gap(0)`; zero when the initial gap is zero.
    pub fn contraction(&self) -> T {
        match (self.gap.first(), self.gap.last()) {
            (Some(&g0), Some(&g1)) if g0 > T::zero() => g1 / g0,
            _ => T::zero(),
        }
    }

    /// Whether `(delta x_h, |delta v|)` lies outside the cone spanned by the
    /// sector gains at sample `i`.
    pub fn outside_cone(&self, i: usize) -> bool {
        let a = self.dv[i].abs();
        (self.dx_h[i] - self.k1 * a) * (self.dx_h[i] - self.k2 * a) > T::zero()
    }

    /// Whether `(delta x_h, delta v)` lies outside the signed cone
    /// `(dx - k1 dv)(dx - k2 dv) <= 0`, by more than round-off.
    pub fn outside_signed_cone(&self, i: usize) -> bool {
        let (dx, dv) = (self.dx_h[i], self.dv[i]);
        let kh = self.k1.abs().max(self.k2.abs());
        let margin = T::tol(1e-9) * (dx * dx + kh * kh * dv * dv);
        (dx - self.k1 * dv) * (dx - self.k2 * dv) > margin
    }

    /// Largest excess of `|delta x_h(t)|` over `exp(-alpha t / 2) |delta x_h(0)|`
    /// among samples outside [`outside_cone`](Self::outside_cone), relative
    /// to the initial gap. A value `<= 0` means the bound holds everywhere
    /// it is claimed.
    pub fn leak_bound_excess(&self, alpha_h: T) -> T {
        let Some(&x0) = self.dx_h.first() else { return T::zero() };
        let x0 = x0.abs();
        let mut worst = T::neg_infinity();
        for i in (0..self.t.len()).filter(|&i| self.outside_cone(i)) {
            let bound = (-T::lit(0.5) * alpha_h * self.t[i]).exp() * x0;
            worst = worst.max(self.dx_h[i].abs() - bound);
        }
        self.relative(worst)
    }

    /// As [`leak_bound_excess`](Self::leak_bound_excess), but on the signed
    /// cone and with the clock restarted at the first sample of each stretch
    /// spent outside it.
    pub fn stretch_bound_excess(&self, alpha_h: T) -> T {
        let mut worst = T::neg_infinity();
        let mut anchor: Option<(T, T)> = None;
        for i in 0..self.t.len() {
            if !self.outside_signed_cone(i) {
                anchor = None;
                continue;
            }
            let (s, x0) = *anchor.get_or_insert((self.t[i], self.dx_h[i].abs()));
            let bound = (-T::lit(0.5) * alpha_h * (self.t[i] - s)).exp() * x0;
            worst = worst.max(self.dx_h[i].abs() - bound);
        }
        self.relative(worst)
    }

    fn relative(&self, x: T) -> T {
        match self.gap.first() {
            Some(&g0) if g0 > T::zero() => x / g0,
            _ => x,
        }
    }

    /// Least-squares slope of `-ln gap` against time over `[t_from, t_to]`,
    /// skipping samples where the gap has reached round-off.
    pub fn fitted_decay_rate(&self, t_from: T, t_to: T) -> Option<T> {
        let floor = self.gap.first().copied().unwrap_or(T::zero()) * T::tol(1e-13);
        let pts: Vec<(T, T)> = self
            .t
            .iter()
            .zip(&self.gap)
            .filter(|(t, g)| **t >= t_from && **t <= t_to && **g > floor)
            .map(|(t, g)| (*t, g.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = T::from_count(pts.len());
        let mt = pts.iter().map(|p| p.0).sum::<T>() / n;
        let my = pts.iter().map(|p| p.1).sum::<T>() / n;
        let sxy: T = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
        let sxx: T = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
        (sxx > T::zero()).then(|| -sxy / sxx)
    }
}

fn check_hypotheses<T: Real>(el: &Fhigs<T>) -> Result<(), SimError> {
    let p = &el.params;
    if !(p.alpha_h >= T::zero()) {
        return Err(SimError::Hypothesis(format!("alpha_h >= 0 fails (alpha_h = {})", p.alpha_h)));
    }
    if !(p.k2 > T::zero()) {
        return Err(SimError::Hypothesis(format!("k2 > 0 fails (k2 = {})", p.k2)));
    }
    if !(p.k1 <= T::zero()) {
        return Err(SimError::Hypothesis(format!("k1 <= 0 fails (k1 = {})", p.k1)));
    }
    if !el.f1.is_hurwitz() {
        return Err(SimError::Hypothesis("F1 state matrix is not Hurwitz".into()));
    }
    if !el.f2.is_hurwitz() {
        return Err(SimError::Hypothesis("F2 state matrix is not Hurwitz".into()));
    }
    Ok(())
}

/// Runs two open-loop simulations from different initial controller
/// states and reports how their difference evolves.
pub fn incremental_gap<T: Real>(
    el: &Fhigs<T>,
    input: &InputSignal<T>,
    cfg: &SimConfig<T>,
    init_a: &[T],
    init_b: &[T],
) -> Result<IncrementalReport<T>, SimError> {
    check_hypotheses(el)?;
    let cfg = cfg.with_states();
    let a = simulate_open_loop(el, input, &cfg, init_a)?;
    let b = simulate_open_loop(el, input, &cfg, init_b)?;
    let n = a.len().min(b.len());
    let mut rep = IncrementalReport {
        k1: el.params.k1,
        k2: el.params.k2,
        max_sector_violation: a.stats.max_sector_violation.max(b.stats.max_sector_violation),
        ..Default::default()
    };
    let mut diff = vec![T::zero(); el.dim()];
    for i in 0..n {
        for (d, (x, y)) in diff.iter_mut().zip(a.states[i].iter().zip(&b.states[i])) {
            *d = *x - *y;
        }
        rep.t.push(a.samples[i].t);
        rep.gap.push(norm2(&diff));
        rep.dx_h.push(diff[0]);
        rep.dx_v.push(norm2(&diff[1..]));
        rep.dv.push(a.samples[i].v2 - b.samples[i].v2);
    }
    let kh = el.params.k_h();
    let mut rho = T::zero();
    rep.kh_rho = vec![T::zero(); n];
    for i in (0..n).rev() {
        rho = rho.max(rep.dv[i].abs());
        rep.kh_rho[i] = kh * rho;
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::FhigsParams;

    fn report(dx_h: Vec<f64>, dv: Vec<f64>) -> IncrementalReport<f64> {
        let n = dx_h.len();
        IncrementalReport {
            t: (0..n).map(|i| i as f64 * 0.1).collect(),
            gap: vec![1.0; n],
            dx_v: vec![0.0; n],
            kh_rho: vec![0.0; n],
            dx_h,
            dv,
            k1: -0.2,
            k2: 1.0,
            max_sector_violation: 0.0,
        }
    }

    #[test]
    fn rejects_positive_k1() {
        let el = Fhigs::higs(FhigsParams::integrator(0.1, 1.0, 50.0).unwrap());
        let input = InputSignal::sine(1.0, 5.0, 0.0).unwrap();
        let err = incremental_gap(&el, &input, &SimConfig::new(1e-3, 0.1), &[0.0], &[0.0]).unwrap_err();
        assert!(matches!(err, SimError::Hypothesis(_)));
    }

    #[test]
    fn higs_pair_converges() {
        let el = Fhigs::higs(FhigsParams::new(0.0, 1.0, 50.0, 1.0).unwrap());
        let input = InputSignal::sine(1.0, 5.0, 0.3).unwrap();
        let rep = incremental_gap(&el, &input, &SimConfig::new(1e-3, 5.0), &[0.5], &[0.0]).unwrap();
        assert!(rep.gap[0] > 0.0 && rep.contraction() < 1e-6);
    }

    #[test]
    fn common_line_is_inside_signed_cone() {
        // both trajectories on the k1 line, up to round-off
        let dv: f64 = 0.8166;
        let r = report(vec![-0.2 * dv * (1.0 + 1e-15)], vec![dv]);
        assert!(!r.outside_signed_cone(0));
        // negative pairs inside the signed cone but outside the |dv| one
        let r = report(vec![-0.5], vec![-1.0]);
        assert!(r.outside_cone(0) && !r.outside_signed_cone(0));
    }

    #[test]
    fn stretch_clock_restarts() {
        let r = report(vec![1.0, 0.5, 0.0, 0.8, 0.4], vec![0.0; 5]);
        // alpha = 0: each stretch may not grow beyond its start value
        assert!(r.stretch_bound_excess(0.0) <= 0.0);
        assert!(r.leak_bound_excess(0.0) <= 0.0);
        let r = report(vec![0.1, 0.0, 0.8], vec![0.0; 3]);
        assert!(r.leak_bound_excess(0.0) > 0.0);
        assert!(r.stretch_bound_excess(0.0) <= 0.0);
    }
}
