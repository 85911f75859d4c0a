use std::collections::BTreeMap;

use serde::Serialize;

use super::scenario::{DriveMode, Scenario};
use crate::bt::TickStatus;
use crate::runtime::{ActionExecutor, RuntimeError};

pub const EMERGENCY_STOP: &str = "SS_04";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VehicleState {
    pub speed_mps: f64,
    pub lateral_deviation_m: f64,
    pub mode: DriveMode,
}

#[derive(Debug, Clone, PartialEq)]
struct Manoeuvre {
    action: String,
    start_tick: u64,
    start_speed: f64,
}

/// Kinematic stub for the safety states.
///
/// `SS_04` brakes at the configured deceleration until standstill. Degraded
/// states brake the same way down to a fraction of the speed they were
/// entered at. Speed is a closed-form function of ticks since start, so it
/// is exact at every tick. Halting keeps the current speed.
#[derive(Debug, Clone)]
pub struct VehicleExecutor {
    tick_rate_hz: f64,
    brake_decel_mps2: f64,
    caps: BTreeMap<String, f64>,
    state: VehicleState,
    current: Option<Manoeuvre>,
    /// Last manoeuvre that reached its target; re-entering the same state
    /// keeps that target instead of lowering the cap again.
    completed: Option<Manoeuvre>,
}

impl VehicleExecutor {
    pub fn new(scenario: &Scenario) -> Self {
        let v = &scenario.vehicle;
        VehicleExecutor {
            tick_rate_hz: scenario.tick_rate_hz,
            brake_decel_mps2: v.brake_decel_mps2,
            caps: v.degraded_caps.clone(),
            state: VehicleState {
                speed_mps: v.initial_speed_mps,
                lateral_deviation_m: 0.0,
                mode: v.mode,
            },
            current: None,
            completed: None,
        }
    }

    pub fn state(&self) -> VehicleState {
        self.state
    }

    pub fn set_lateral_deviation(&mut self, metres: f64) {
        self.state.lateral_deviation_m = metres.abs();
    }

    fn target(&self, action: &str) -> Result<f64, RuntimeError> {
        if action == EMERGENCY_STOP {
            return Ok(0.0);
        }
        self.caps
            .get(action)
            .copied()
            .ok_or_else(|| RuntimeError::UnknownAction(action.to_string()))
    }
}

impl ActionExecutor for VehicleExecutor {
    fn start(&mut self, action_id: &str, tick: u64) -> Result<(), RuntimeError> {
        self.target(action_id)?;
        let resumed = self.completed.take().filter(|m| m.action == action_id);
        self.current = Some(resumed.unwrap_or_else(|| Manoeuvre {
            action: action_id.to_string(),
            start_tick: tick,
            start_speed: self.state.speed_mps,
        }));
        Ok(())
    }

    fn poll(&mut self, action_id: &str, tick: u64) -> Result<TickStatus, RuntimeError> {
        let fraction = self.target(action_id)?;
        let m = match &self.current {
            Some(m) if m.action == action_id => m.clone(),
            _ => {
                self.start(action_id, tick)?;
                self.current.clone().expect("just started")
            }
        };
        let target = fraction * m.start_speed;
        let elapsed = tick.saturating_sub(m.start_tick) as f64 / self.tick_rate_hz;
        let speed = m.start_speed - self.brake_decel_mps2 * elapsed;
        if speed <= target {
            self.state.speed_mps = target;
            self.completed = self.current.take();
            Ok(TickStatus::Success)
        } else {
            self.state.speed_mps = speed;
            Ok(TickStatus::Running)
        }
    }

    fn halt(&mut self, action_id: &str, _tick: u64) {
        if self.current.as_ref().is_some_and(|m| m.action == action_id) {
            self.current = None;
        }
    }
}

/// Executor for a scenario: [`VehicleExecutor`] with its vehicle settings.
pub fn vehicle_executor(scenario: &Scenario) -> VehicleExecutor {
    VehicleExecutor::new(scenario)
}
