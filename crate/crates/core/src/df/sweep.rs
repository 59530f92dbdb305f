use std::io::{self, Write};

use num_complex::Complex;
use rayon::prelude::*;

use crate::scalar::Real;

use super::fourier::{first_harmonic_closed_form, fourier_coefficients, fourier_quadrature};
use super::response::{steady_state_analytic, PiecewiseResponse};
use super::switching::{SwitchCase, SwitchingInstants};
use super::{DfError, SimplifiedFhigs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DfOptions {
    /// Cross-check every closed form against its numerical reference and
    /// fail the point on disagreement.
    pub validate: bool,
}

impl Default for DfOptions {
    fn default() -> Self {
        Self { validate: cfg!(debug_assertions) }
    }
}

/// Tolerances of the validation mode.
const EPS_GAP: f64 = 1e-11;
const RESIDUAL_REL: f64 = 1e-10;
const FOURIER_REL: f64 = 1e-9;

/// `k`-th harmonic describing function at one frequency, per unit input
/// amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DfPoint<T> {
    pub omega: T,
    pub k: usize,
    pub a_k: T,
    pub b_k: T,
    /// `b_k + j a_k`.
    pub d_k: Complex<T>,
    pub mag_db: T,
    /// Degrees; unwrapped along a sweep.
    pub phase_deg: T,
    pub case: SwitchCase,
    pub instants: SwitchingInstants<T>,
}

impl<T: Real> DfPoint<T> {
    fn new(omega: T, k: usize, a_k: T, b_k: T, instants: SwitchingInstants<T>) -> Self {
        let d_k = Complex::new(b_k, a_k);
        Self {
            omega,
            k,
            a_k,
            b_k,
            d_k,
            mag_db: T::lit(20.0) * d_k.norm().log10(),
            phase_deg: a_k.atan2(b_k).to_degrees(),
            case: instants.case,
            instants,
        }
    }

    pub fn magnitude(&self) -> T {
        self.d_k.norm()
    }
}

fn cross_check<T: Real>(what: &'static str, omega: T, closed: T, reference: T, tol: T) -> Result<(), DfError> {
    if (closed - reference).abs() <= tol {
        Ok(())
    } else {
        Err(DfError::CrossCheck { what, omega: omega.as_f64(), closed: closed.as_f64(), reference: reference.as_f64() })
    }
}

fn validate_response<T: Real>(elem: &SimplifiedFhigs<T>, resp: &PiecewiseResponse<T>) -> Result<(), DfError> {
    let w = resp.omega;
    let h = elem.harmonic(w)?;
    let case = resp.case();
    let (a, g) = (resp.instants.a(), resp.instants.g());
    let res_tol = T::tol(RESIDUAL_REL) * h.omega_h;
    if case != SwitchCase::LagNoK1 {
        let k = if case == SwitchCase::Lead { h.k1 } else { h.k2 };
        cross_check("epsilon residual", w, h.eps_fn(k, a), T::zero(), res_tol)?;
        let reference = h.a_bisect(case).ok_or(DfError::NoRoot { what: "epsilon", omega: w.as_f64(), case: case.tag() })?;
        cross_check("epsilon", w, a / w, reference / w, T::tol(EPS_GAP))?;
    }
    let roles = h.roles(case, a);
    cross_check("gamma residual", w, w * h.gamma_fn(&roles, a, g), T::zero(), res_tol)?;
    let reference = h.g_bisect(case, a).ok_or(DfError::NoRoot { what: "gamma", omega: w.as_f64(), case: case.tag() })?;
    // near a double root the reference itself is only this accurate
    let tol = T::tol(EPS_GAP) + h.gamma_resolution(case, a, g);
    cross_check("gamma", w, g / w, reference / w, tol)?;
    Ok(())
}

pub fn df_point<T: Real>(elem: &SimplifiedFhigs<T>, omega: T, k: usize) -> Result<DfPoint<T>, DfError> {
    df_point_with(elem, omega, k, DfOptions::default())
}

pub fn df_point_with<T: Real>(elem: &SimplifiedFhigs<T>, omega: T, k: usize, opts: DfOptions) -> Result<DfPoint<T>, DfError> {
    if k == 0 {
        return Err(DfError::BadHarmonic);
    }
    let resp = steady_state_analytic(elem, omega, T::one())?;
    if opts.validate {
        validate_response(elem, &resp)?;
    }
    let (a_k, b_k) = fourier_coefficients(&resp, k);
    if opts.validate && k == 1 {
        if let Some((ca, cb)) = first_harmonic_closed_form(&resp) {
            let (qa, qb) = fourier_quadrature(&resp, 1);
            let tol = T::tol(FOURIER_REL) * qa.hypot(qb);
            cross_check("a1", omega, ca, qa, tol)?;
            cross_check("b1", omega, cb, qb, tol)?;
        }
    }
    Ok(DfPoint::new(omega, k, a_k, b_k, resp.instants))
}

/// Result of one `(omega, k)` pair of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry<T> {
    pub omega: T,
    pub k: usize,
    pub result: Result<DfPoint<T>, DfError>,
}

/// Describing functions over an ascending frequency grid, computed in
/// parallel; phases are unwrapped per harmonic along the grid. Failures
/// are reported per entry.
pub fn df_sweep<T: Real>(
    elem: &SimplifiedFhigs<T>,
    omegas: &[T],
    harmonics: &[usize],
    opts: DfOptions,
) -> Result<Vec<SweepEntry<T>>, DfError> {
    if omegas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(DfError::UnsortedGrid);
    }
    if harmonics.is_empty() {
        return Ok(Vec::new());
    }
    let mut entries: Vec<SweepEntry<T>> = omegas
        .par_iter()
        .flat_map_iter(|&w| {
            harmonics.iter().map(move |&k| SweepEntry { omega: w, k, result: df_point_with(elem, w, k, opts) })
        })
        .collect();
    for &k in harmonics {
        let mut prev: Option<T> = None;
        for e in entries.iter_mut().filter(|e| e.k == k) {
            if let Ok(p) = &mut e.result {
                if let Some(q) = prev {
                    let turn = T::lit(360.0);
                    p.phase_deg = p.phase_deg - turn * ((p.phase_deg - q) / turn).round();
                }
                prev = Some(p.phase_deg);
            }
        }
    }
    Ok(entries)
}

/// `n` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_grid<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (l, h) = (lo.log10(), hi.log10());
            (0..n)
                .map(|i| T::lit(10.0).powf(l + (h - l) * T::from_count(i) / T::from_count(n - 1)))
                .collect()
        }
    }
}

/// Writes the successful entries; failed ones are skipped.
pub fn write_sweep_csv<T: Real, W: Write>(entries: &[SweepEntry<T>], mut w: W) -> io::Result<()> {
    writeln!(w, "omega_rad_s,k,a_k,b_k,mag_db,phase_deg,case")?;
    for p in entries.iter().filter_map(|e| e.result.as_ref().ok()) {
        writeln!(
            w,
            "{:e},{},{:e},{:e},{:.9},{:.9},{}",
            p.omega.as_f64(),
            p.k,
            p.a_k.as_f64(),
            p.b_k.as_f64(),
            p.mag_db.as_f64(),
            p.phase_deg.as_f64(),
            p.case.tag()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::FhigsParams;

    fn higs() -> SimplifiedFhigs<f64> {
        SimplifiedFhigs::higs(FhigsParams::integrator(0.0, 1.0, 100.0).unwrap()).unwrap()
    }

    #[test]
    fn even_harmonics_vanish() {
        let p = df_point(&higs(), 30.0, 2).unwrap();
        assert_eq!((p.a_k, p.b_k), (0.0, 0.0));
        assert!(p.mag_db.is_infinite());
    }

    #[test]
    fn low_frequency_is_gain_like() {
        let p = df_point(&higs(), 0.1, 1).unwrap();
        assert!((p.magnitude() - 1.0).abs() < 1e-3);
        assert!(p.phase_deg.abs() < 0.1);
    }

    #[test]
    fn sweep_rules() {
        assert!(df_sweep(&higs(), &[2.0, 1.0], &[1], DfOptions::default()).is_err());
        assert!(df_sweep(&higs(), &[1.0, 2.0], &[], DfOptions::default()).unwrap().is_empty());
        let grid = log_grid(1.0, 1e4, 50);
        let s = df_sweep(&higs(), &grid, &[1, 3], DfOptions { validate: true }).unwrap();
        assert_eq!(s.len(), 100);
        assert!(s.iter().all(|e| e.result.is_ok()));
        let mut buf = Vec::new();
        write_sweep_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("omega_rad_s,k,a_k,b_k,mag_db,phase_deg,case\n"));
        assert_eq!(text.lines().count(), 101);
    }

    #[test]
    fn lowpass_at_integrator_rate_never_integrates() {
        // with w_lp = w_h the integrator flow points out of the sector all
        // along the k2 line, so the response is the filter itself
        let f = crate::lti::TransferFunction::new(vec![100.0], vec![1.0, 100.0]).unwrap();
        let el = SimplifiedFhigs::new(FhigsParams::integrator(0.0, 1.0, 100.0).unwrap(), crate::lti::tf_to_ss(&f)).unwrap();
        for w in [15.0, 60.0, 300.0] {
            let p = df_point_with(&el, w, 1, DfOptions { validate: true }).unwrap();
            let z = el.filter_response(w).unwrap();
            assert!((p.d_k - z).norm() < 1e-6 * z.norm(), "{w}: {} vs {z}", p.d_k);
        }
    }

    #[test]
    fn grid_endpoints() {
        let g: Vec<f64> = log_grid(1.0, 1e4, 5);
        assert_eq!(g.len(), 5);
        assert!((g[0] - 1.0).abs() < 1e-12 && (g[4] - 1e4).abs() < 1e-8 && (g[2] - 100.0).abs() < 1e-10);
    }
}
