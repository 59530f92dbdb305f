//! Seeded random draws for the verification suite.

use num_complex::Complex;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::element::{Fhigs, FhigsParams};
use crate::linalg::poly_from_roots;
use crate::lti::{tf_to_ss, StateSpace, TransferFunction};
use crate::sim::{InputSignal, Sine};

pub use rand::SeedableRng;

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stable filter of the given order with poles in the left half plane,
/// a random numerator of degree `<= order` and peak gain 1 on
/// `[0.1, 1000]` rad/s. Order 0 is a static gain in `[0.5, 1.5)`.
pub fn stable_filter(rng: &mut impl Rng, order: usize) -> StateSpace<f64> {
    if order == 0 {
        return StateSpace::gain(rng.gen_range(0.5..1.5));
    }
    let mut roots = Vec::with_capacity(order);
    while roots.len() < order {
        if order - roots.len() >= 2 && rng.gen_bool(0.5) {
            let re = -rng.gen_range(2.0..60.0);
            let im = rng.gen_range(1.0..60.0);
            roots.push(Complex::new(re, im));
            roots.push(Complex::new(re, -im));
        } else {
            roots.push(Complex::new(-rng.gen_range(1.0..80.0), 0.0));
        }
    }
    let den = poly_from_roots(&roots);
    let mut num: Vec<f64> = (0..=rng.gen_range(0..=order)).map(|_| rng.gen_range(-1.0..1.0)).collect();
    if num[0].abs() < 0.2 {
        num[0] = 0.5;
    }
    let ss = tf_to_ss(&TransferFunction::new(num.clone(), den.clone()).expect("nonzero leading coefficients"));
    let peak = (0..200)
        .map(|i| ss.eval_jw(10f64.powf(-1.0 + 4.0 * i as f64 / 199.0)).map_or(0.0, |z| z.norm()))
        .fold(0.0, f64::max);
    let num = num.iter().map(|c| c / peak).collect();
    tf_to_ss(&TransferFunction::new(num, den).expect("nonzero leading coefficients"))
}

/// Element with random filters of order `<= 3`, `k1` in `(-0.5, 0.5)` and
/// `k2 - k1` in `(0.2, 2)`.
pub fn element(rng: &mut impl Rng) -> Fhigs<f64> {
    let (o1, o2) = (rng.gen_range(0..=3), rng.gen_range(0..=3));
    let f1 = stable_filter(rng, o1);
    let f2 = stable_filter(rng, o2);
    let k1 = rng.gen_range(-0.5..0.5);
    let k2 = k1 + rng.gen_range(0.2..2.0);
    let omega_h = rng.gen_range(10.0..200.0);
    let alpha_h = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..5.0) };
    let p = FhigsParams::new(k1, k2, omega_h, alpha_h).expect("k2 > k1 and positive rates");
    Fhigs::new(p, f1, f2)
}

/// Element satisfying the incremental hypotheses `k2 > 0 >= k1`, with
/// `F1` static when `static_f1` is set.
pub fn incremental_element(rng: &mut impl Rng, alpha_h: f64, static_f1: bool) -> Fhigs<f64> {
    let o1 = if static_f1 { 0 } else { rng.gen_range(0..=3) };
    let f1 = stable_filter(rng, o1);
    let o2 = rng.gen_range(0..=3);
    let f2 = stable_filter(rng, o2);
    let k1 = -rng.gen_range(0.0..0.5);
    let k2 = rng.gen_range(0.5..2.0);
    let omega_h = rng.gen_range(10.0..200.0);
    Fhigs::new(FhigsParams::new(k1, k2, omega_h, alpha_h).expect("k2 > k1"), f1, f2)
}

/// One to three sines with amplitudes in `[0.2, 0.6)` and frequencies in
/// `[3, 60)` rad/s.
pub fn sum_of_sines(rng: &mut impl Rng) -> InputSignal<f64> {
    let n = rng.gen_range(1..=3);
    let terms = (0..n)
        .map(|_| Sine::new(rng.gen_range(0.2..0.6), rng.gen_range(3.0..60.0), rng.gen_range(0.0..std::f64::consts::TAU)))
        .collect();
    InputSignal::sum_of_sines(terms).expect("finite terms")
}

/// Log-uniform draw from `[lo, hi)`.
pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo.ln()..hi.ln()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filters_are_stable_with_unit_peak() {
        let mut r = rng(3);
        for order in 0..=3 {
            let f = stable_filter(&mut r, order);
            assert!(f.is_hurwitz());
            assert_eq!(f.order(), order);
        }
    }

    #[test]
    fn draws_are_reproducible() {
        let a = element(&mut rng(5));
        let b = element(&mut rng(5));
        assert_eq!(a.params, b.params);
        assert_eq!(a.f2, b.f2);
    }
}
