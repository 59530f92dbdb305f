// `!(x > y)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod element;
pub mod linalg;
pub mod lti;
pub mod scalar;
pub mod sim;
pub mod df;
pub mod experiments;

pub use df::SimplifiedFhigs;
pub use element::{Fhigs, FhigsParams, Mode};
pub use lti::{StateSpace, TransferFunction};
pub use sim::{InputSignal, SimConfig, Trajectory};

/// Double-precision aliases.
pub type Fhigs64 = element::Fhigs<f64>;
pub type FhigsParams64 = element::FhigsParams<f64>;
pub type StateSpace64 = lti::StateSpace<f64>;
pub type TransferFunction64 = lti::TransferFunction<f64>;
pub type SimplifiedFhigs64 = df::SimplifiedFhigs<f64>;
pub type SimConfig64 = sim::SimConfig<f64>;
pub type InputSignal64 = sim::InputSignal<f64>;
pub type Trajectory64 = sim::Trajectory<f64>;
