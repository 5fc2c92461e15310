use serde::{Deserialize, Serialize};

use super::{DecompConfig, DualState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    /// Fixed step size.
    Constant,
    /// Step size halves at each plateau.
    Decaying,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleAction {
    Continue,
    Halved,
    Terminate,
}

/// Relative improvement of the best dual from `before` to `after`.
pub fn relative_change(before: i64, after: i64) -> f64 {
    (after - before) as f64 / after.unsigned_abs().max(1) as f64
}

/// Applies one relative-change measurement. Below the plateau threshold the
/// step halves, and the first such halving starts the decaying phase. Below
/// the convergence threshold the run ends instead, once the step has already
/// decayed to `config.min_step`.
pub fn step_schedule(state: &mut DualState, change: f64, config: &DecompConfig) -> ScheduleAction {
    if change < config.convergence_threshold && state.step_size <= config.min_step {
        return ScheduleAction::Terminate;
    }
    if change < config.plateau_threshold {
        if state.phase == Phase::Constant {
            state.phase = Phase::Decaying;
            state.phase_transition = Some(state.iteration);
        }
        state.step_size /= 2.0;
        state.window_start = state.iteration;
        return ScheduleAction::Halved;
    }
    ScheduleAction::Continue
}
