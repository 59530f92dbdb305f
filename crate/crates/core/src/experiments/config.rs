//! TOML experiment configuration. Frequencies are in rad/s, times in
//! seconds.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer};

use crate::element::{Fhigs, FhigsParams};
use crate::lti::{notch, tf_to_ss, StateSpace, TransferFunction};
use crate::sim::{InputSignal, SimConfig, Sine};

use super::ExperimentError;

/// A filter written out in full.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FilterSpec {
    Gain { k: f64 },
    /// Coefficients in descending powers of `s`.
    Tf { num: Vec<f64>, den: Vec<f64> },
    /// `(s^2 + 2 b1 w s + w^2) / (s^2 + 2 b2 w s + w^2)`.
    Notch { omega_n: f64, beta1: f64, beta2: f64 },
    /// Reciprocal of the notch with the same parameters.
    InverseNotch { omega_n: f64, beta1: f64, beta2: f64 },
    /// `omega / (s + omega)`.
    Lowpass { omega: f64 },
    /// `gain (tau_z s + 1) / (tau_p s + 1)`.
    LeadLag {
        tau_z: f64,
        tau_p: f64,
        #[serde(default = "one")]
        gain: f64,
    },
}

/// Either the name of an entry of `[filters]` or an inline table.
#[derive(Debug, Clone, PartialEq)]
pub enum FilterRef {
    Named(String),
    Inline(FilterSpec),
}

impl Default for FilterRef {
    fn default() -> Self {
        FilterRef::Inline(FilterSpec::Gain { k: 1.0 })
    }
}

impl<'de> Deserialize<'de> for FilterRef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = FilterRef;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a filter name or an inline filter table")
            }

            fn visit_str<E: de::Error>(self, s: &str) -> Result<FilterRef, E> {
                Ok(FilterRef::Named(s.to_owned()))
            }

            fn visit_map<A: MapAccess<'de>>(self, map: A) -> Result<FilterRef, A::Error> {
                FilterSpec::deserialize(de::value::MapAccessDeserializer::new(map)).map(FilterRef::Inline)
            }
        }
        d.deserialize_any(V)
    }
}

fn one() -> f64 {
    1.0
}

fn zero() -> f64 {
    0.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSection {
    pub k1: f64,
    pub k2: f64,
    pub omega_h: f64,
    #[serde(default = "zero")]
    pub alpha_h: f64,
    #[serde(default)]
    pub f1: FilterRef,
    #[serde(default)]
    pub f2: FilterRef,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub h: f64,
    pub t_end: f64,
    #[serde(default = "default_event_tol")]
    pub event_tol: f64,
    #[serde(default = "default_decimation")]
    pub decimation: usize,
}

fn default_event_tol() -> f64 {
    1e-10
}

fn default_decimation() -> usize {
    1
}

impl SimSection {
    pub fn to_config(&self) -> SimConfig<f64> {
        SimConfig::new(self.h, self.t_end).with_event_tol(self.event_tol).with_decimation(self.decimation)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSpec {
    Zero,
    Sine {
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    SumOfSines {
        amplitudes: Vec<f64>,
        omegas: Vec<f64>,
        #[serde(default)]
        phases: Vec<f64>,
    },
    Step {
        amplitude: f64,
        #[serde(default)]
        t0: f64,
        rise: f64,
    },
}

impl InputSpec {
    pub fn build(&self) -> Result<InputSignal<f64>, ExperimentError> {
        let sig = match self {
            InputSpec::Zero => return Ok(InputSignal::zero()),
            InputSpec::Sine { amplitude, omega, phase } => InputSignal::sine(*amplitude, *omega, *phase),
            InputSpec::SumOfSines { amplitudes, omegas, phases } => {
                if amplitudes.len() != omegas.len() || !(phases.is_empty() || phases.len() == omegas.len()) {
                    return Err(ExperimentError::field(
                        "input",
                        "amplitudes, omegas and phases must have the same length",
                    ));
                }
                let terms = amplitudes
                    .iter()
                    .zip(omegas)
                    .enumerate()
                    .map(|(i, (a, w))| Sine::new(*a, *w, phases.get(i).copied().unwrap_or(0.0)))
                    .collect();
                InputSignal::sum_of_sines(terms)
            }
            InputSpec::Step { amplitude, t0, rise } => InputSignal::step(*amplitude, *t0, *rise),
        };
        sig.map_err(|e| ExperimentError::field("input", e))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DfSection {
    /// Explicit grid; overrides the log grid when present.
    #[serde(default)]
    pub omegas: Vec<f64>,
    #[serde(default)]
    pub omega_min: Option<f64>,
    #[serde(default)]
    pub omega_max: Option<f64>,
    #[serde(default)]
    pub points: Option<usize>,
    #[serde(default = "default_harmonics")]
    pub harmonics: Vec<usize>,
}

fn default_harmonics() -> Vec<usize> {
    vec![1]
}

impl DfSection {
    pub fn grid(&self) -> Result<Vec<f64>, ExperimentError> {
        if !self.omegas.is_empty() {
            return Ok(self.omegas.clone());
        }
        match (self.omega_min, self.omega_max, self.points) {
            (Some(lo), Some(hi), Some(n)) if lo > 0.0 && hi >= lo => Ok(crate::df::log_grid(lo, hi, n)),
            (Some(_), Some(_), Some(_)) => Err(ExperimentError::field("df", "need 0 < omega_min <= omega_max")),
            _ => Err(ExperimentError::field("df", "give either omegas or omega_min, omega_max and points")),
        }
    }
}

/// Sector and integrator parameters without filters.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSection {
    pub k1: f64,
    pub k2: f64,
    pub omega_h: f64,
    #[serde(default)]
    pub alpha_h: f64,
}

impl GainsSection {
    pub fn params(&self, section: &str) -> Result<FhigsParams<f64>, ExperimentError> {
        FhigsParams::new(self.k1, self.k2, self.omega_h, self.alpha_h).map_err(|e| ExperimentError::field(section, e))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainLossSection {
    pub gains: GainsSection,
    /// Low and high input frequencies.
    pub omega_1: f64,
    pub omega_2: f64,
    pub h: f64,
    /// Number of low-frequency periods simulated; metrics use the last.
    pub periods: usize,
    /// Lifting pre-filter; its inverse is the post-filter.
    pub lifting: FilterRef,
    pub fhigs_f1: FilterRef,
    pub fhigs_f2: FilterRef,
    pub rms_ratio_max: f64,
    pub correlation_min: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepRowSection {
    /// Filter in series with the plant.
    #[serde(default)]
    pub loop_filter: FilterRef,
    #[serde(default)]
    pub proportional: f64,
    pub gains: GainsSection,
    #[serde(default)]
    pub f1: FilterRef,
    #[serde(default)]
    pub f2: FilterRef,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearRowSection {
    #[serde(default)]
    pub loop_filter: FilterRef,
    pub proportional: f64,
    /// Integral gain.
    pub omega_i: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSection {
    pub plant: FilterRef,
    pub amplitude: f64,
    pub rise: f64,
    pub h: f64,
    pub t_end: f64,
    #[serde(default = "default_decimation")]
    pub decimation: usize,
    #[serde(default = "default_band")]
    pub settle_band: f64,
    #[serde(default = "default_divergence")]
    pub divergence: f64,
    pub linear: LinearRowSection,
    pub higs: StepRowSection,
    pub fhigs: StepRowSection,
}

fn default_band() -> f64 {
    0.02
}

fn default_divergence() -> f64 {
    1e6
}

/// Draw counts and tolerances of the verification suite.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub seed: u64,
    pub equivalence_configs: usize,
    pub equivalence_t_end: f64,
    pub equivalence_h: f64,
    pub equivalence_tol: f64,
    /// Relative perturbation of the k2-mode matrix used by the PWL run;
    /// nonzero only in negative-control fixtures.
    pub a2_perturbation: f64,
    pub switching_draws: usize,
    pub residual_tol: f64,
    pub gap_tol: f64,
    pub quadrature_draws: usize,
    pub quadrature_tol: f64,
    pub even_tol: f64,
    pub symmetry_tol: f64,
    pub sim_settle_periods: usize,
    pub sim_tol: f64,
    pub incremental_pairs: usize,
    pub incremental_horizon: f64,
    pub incremental_tol: f64,
    pub incremental_alpha: f64,
    pub envelope_tol: f64,
    pub sector_tol: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            seed: 7,
            equivalence_configs: 20,
            equivalence_t_end: 2.0,
            equivalence_h: 1e-5,
            equivalence_tol: 1e-5,
            a2_perturbation: 0.0,
            switching_draws: 100,
            residual_tol: 1e-10,
            gap_tol: 1e-11,
            quadrature_draws: 50,
            quadrature_tol: 1e-9,
            even_tol: 1e-10,
            symmetry_tol: 1e-12,
            sim_settle_periods: 20,
            sim_tol: 1e-4,
            incremental_pairs: 100,
            incremental_horizon: 200.0,
            incremental_tol: 1e-3,
            incremental_alpha: 2.0,
            envelope_tol: 1e-6,
            sector_tol: crate::element::SECTOR_TOL,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub filters: BTreeMap<String, FilterSpec>,
    pub element: Option<ElementSection>,
    pub sim: Option<SimSection>,
    pub input: Option<InputSpec>,
    pub df: Option<DfSection>,
    pub gainloss: Option<GainLossSection>,
    pub step: Option<StepSection>,
    pub verify: Option<VerifySection>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn section<'a, S>(&self, name: &str, s: &'a Option<S>) -> Result<&'a S, ExperimentError> {
        s.as_ref().ok_or_else(|| ExperimentError::MissingSection(name.to_owned()))
    }

    pub fn filter_tf(&self, r: &FilterRef, field: &str) -> Result<TransferFunction<f64>, ExperimentError> {
        let spec = match r {
            FilterRef::Inline(s) => s,
            FilterRef::Named(name) => self
                .filters
                .get(name)
                .ok_or_else(|| ExperimentError::field(field, format!("unknown filter '{name}'")))?,
        };
        spec.to_tf().map_err(|e| ExperimentError::field(field, e))
    }

    pub fn filter_ss(&self, r: &FilterRef, field: &str) -> Result<StateSpace<f64>, ExperimentError> {
        self.filter_tf(r, field).map(|tf| tf_to_ss(&tf))
    }

    /// The element of `[element]` with both filters resolved.
    pub fn element(&self) -> Result<Fhigs<f64>, ExperimentError> {
        let s = self.section("element", &self.element)?;
        let p = FhigsParams::new(s.k1, s.k2, s.omega_h, s.alpha_h).map_err(|e| ExperimentError::field("element", e))?;
        Ok(Fhigs::new(p, self.filter_ss(&s.f1, "element.f1")?, self.filter_ss(&s.f2, "element.f2")?))
    }

    /// Checks that every referenced filter resolves and every section
    /// builds.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        for (name, spec) in &self.filters {
            spec.to_tf().map_err(|e| ExperimentError::field(&format!("filters.{name}"), e))?;
        }
        if self.element.is_some() {
            self.element()?;
        }
        if let Some(s) = &self.sim {
            s.to_config().validate().map_err(|e| ExperimentError::field("sim", e))?;
        }
        if let Some(i) = &self.input {
            i.build()?;
        }
        if let Some(d) = &self.df {
            d.grid()?;
        }
        if let Some(g) = &self.gainloss {
            g.gains.params("gainloss.gains")?;
            self.filter_tf(&g.lifting, "gainloss.lifting")?.inverse().map_err(|e| ExperimentError::field("gainloss.lifting", e))?;
            self.filter_tf(&g.fhigs_f1, "gainloss.fhigs_f1")?;
            self.filter_tf(&g.fhigs_f2, "gainloss.fhigs_f2")?;
        }
        if let Some(s) = &self.step {
            self.filter_tf(&s.plant, "step.plant")?;
            self.filter_tf(&s.linear.loop_filter, "step.linear.loop_filter")?;
            for (name, row) in [("higs", &s.higs), ("fhigs", &s.fhigs)] {
                row.gains.params(&format!("step.{name}.gains"))?;
                for (f, r) in [("loop_filter", &row.loop_filter), ("f1", &row.f1), ("f2", &row.f2)] {
                    self.filter_tf(r, &format!("step.{name}.{f}"))?;
                }
            }
        }
        Ok(())
    }
}

impl FilterSpec {
    pub fn to_tf(&self) -> Result<TransferFunction<f64>, crate::lti::LtiError> {
        match *self {
            FilterSpec::Gain { k } => Ok(TransferFunction::gain(k)),
            FilterSpec::Tf { ref num, ref den } => TransferFunction::new(num.clone(), den.clone()),
            FilterSpec::Notch { omega_n, beta1, beta2 } => notch(omega_n, beta1, beta2),
            FilterSpec::InverseNotch { omega_n, beta1, beta2 } => notch(omega_n, beta1, beta2)?.inverse(),
            FilterSpec::Lowpass { omega } => TransferFunction::new(vec![omega], vec![1.0, omega]),
            FilterSpec::LeadLag { tau_z, tau_p, gain } => TransferFunction::new(vec![gain * tau_z, gain], vec![tau_p, 1.0]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_and_inline_filters_resolve() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            [filters.lp]
            kind = "lowpass"
            omega = 20.0

            [element]
            k1 = 0.0
            k2 = 1.0
            omega_h = 100.0
            f1 = { kind = "lead_lag", tau_z = 0.1, tau_p = 0.01 }
            f2 = "lp"
            "#,
        )
        .unwrap();
        cfg.validate().unwrap();
        let el = cfg.element().unwrap();
        assert_eq!((el.f1.order(), el.f2.order()), (1, 1));
    }

    #[test]
    fn unknown_filter_names_the_field() {
        let cfg = ExperimentConfig::from_toml("[element]\nk1 = 0.0\nk2 = 1.0\nomega_h = 1.0\nf2 = \"nope\"\n").unwrap();
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("element.f2") && msg.contains("nope"), "{msg}");
    }

    #[test]
    fn bad_parameters_are_rejected() {
        let cfg = ExperimentConfig::from_toml("[element]\nk1 = 2.0\nk2 = 1.0\nomega_h = 1.0\n").unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("element"));
        assert!(ExperimentConfig::from_toml("[element]\nk1 = 0.0\nk2 = 1.0\nomega_h = 1.0\nbogus = 3\n").is_err());
        assert!(ExperimentConfig::from_toml("[input]\nkind = \"square\"\n").is_err());
    }

    #[test]
    fn sum_of_sines_lengths_must_match() {
        let spec = InputSpec::SumOfSines { amplitudes: vec![1.0], omegas: vec![1.0, 2.0], phases: vec![] };
        assert!(spec.build().is_err());
    }
}
