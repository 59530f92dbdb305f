use crate::element::Fhigs;
use crate::lti::StateSpace;
use crate::scalar::Real;

use super::engine::{Downstream, Engine, Field};
use super::{InputSignal, SimConfig, SimError, Trajectory};

/// Element in feedback with a plant (the cascade of any linear controller
/// part and the plant proper), tracking `e = r - y`. The plant input is
/// `x_h + proportional * e`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoop<T> {
    pub element: Fhigs<T>,
    pub plant: StateSpace<T>,
    pub reference: InputSignal<T>,
    pub proportional: T,
}

impl<T: Real> ClosedLoop<T> {
    /// Rejects plants with direct feedthrough or `C_p B_p != 0`, for which
    /// `e` would not be differentiable along the projected flow.
    pub fn new(element: Fhigs<T>, plant: StateSpace<T>, reference: InputSignal<T>) -> Result<Self, SimError> {
        let cb = crate::linalg::dot(plant.c(), plant.b());
        let scale = T::one().max(plant.c().iter().chain(plant.b()).fold(T::zero(), |m, v| m.max(v.abs())));
        if cb.abs() > T::tol(1e-12) * scale * scale || plant.d() != T::zero() {
            return Err(SimError::PlantStructure { cb: cb.as_f64(), d: plant.d().as_f64() });
        }
        Ok(Self { element, plant, reference, proportional: T::zero() })
    }

    /// Adds a direct path `k * e` in parallel with the element.
    pub fn with_proportional(mut self, k: T) -> Self {
        self.proportional = k;
        self
    }

    pub fn dim(&self) -> usize {
        self.element.dim() + self.plant.order()
    }

    fn run(&self, field: Field, cfg: &SimConfig<T>, init_controller: &[T], init_plant: &[T]) -> Result<Trajectory<T>, SimError> {
        if init_controller.len() != self.element.dim() || init_plant.len() != self.plant.order() {
            return Err(SimError::Dimension(format!(
                "initial states have lengths {} and {}, expected {} and {}",
                init_controller.len(),
                init_plant.len(),
                self.element.dim(),
                self.plant.order()
            )));
        }
        let pwl = self.element.build_pwl();
        let z: Vec<T> = init_controller.iter().chain(init_plant).copied().collect();
        Engine {
            el: &self.element,
            pwl: &pwl,
            down: Some(Downstream { ss: &self.plant, feedback: true, proportional: self.proportional }),
            input: &self.reference,
            field,
        }
        .run(cfg, &z)
    }
}

/// Joint integration of the piecewise-linear controller and the plant.
pub fn simulate_closed_loop<T: Real>(
    cl: &ClosedLoop<T>,
    cfg: &SimConfig<T>,
    init_controller: &[T],
    init_plant: &[T],
) -> Result<Trajectory<T>, SimError> {
    cl.run(Field::Pwl, cfg, init_controller, init_plant)
}

/// Same loop with the projection removed, i.e. the linear controller the
/// element is built on.
pub fn simulate_closed_loop_linear<T: Real>(
    cl: &ClosedLoop<T>,
    cfg: &SimConfig<T>,
    init_controller: &[T],
    init_plant: &[T],
) -> Result<Trajectory<T>, SimError> {
    cl.run(Field::Linear, cfg, init_controller, init_plant)
}

/// Closed loop integrated through the projection operator.
pub fn simulate_closed_loop_epds<T: Real>(
    cl: &ClosedLoop<T>,
    cfg: &SimConfig<T>,
    init_controller: &[T],
    init_plant: &[T],
) -> Result<Trajectory<T>, SimError> {
    cl.run(Field::Projected, cfg, init_controller, init_plant)
}
