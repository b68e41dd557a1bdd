use super::{StepMode, TraceConfig};
use crate::numeric::robust_step;

/// Running step-size state of one chain.
#[derive(Clone, Debug, PartialEq)]
pub struct StepState {
    /// Smallest singular value at the current point.
    pub s: f64,
    pub s_prev: f64,
    pub delta: f64,
    pub consecutive_ok: usize,
    /// Multiplier in `(0, 1]`: halved on rejection, grown by 1.25 after 4 accepted steps.
    pub factor: f64,
    /// Set when a step at the floor `h_min` was rejected.
    floor_rejected: bool,
}

impl StepState {
    pub fn new(s: f64, delta: f64) -> Self {
        StepState { s, s_prev: s, delta, consecutive_ok: 0, factor: 1.0, floor_rejected: false }
    }

    pub fn accept(&mut self, s: f64) {
        self.s_prev = self.s;
        self.s = s;
        self.floor_rejected = false;
        self.consecutive_ok += 1;
        if self.consecutive_ok >= 4 {
            self.factor = (self.factor * 1.25).min(1.0);
            self.consecutive_ok = 0;
        }
    }

    /// Records a rejected step of length `h`.
    pub fn reject(&mut self, h: f64, h_min: f64) {
        self.consecutive_ok = 0;
        self.factor *= 0.5;
        self.floor_rejected = self.floor_rejected || h <= h_min;
    }
}

/// Next step length, or `None` when the chain must stall.
///
/// Practical mode: `clamp(factor * min(delta/2, kappa s), h_min, delta/2)` with
/// `kappa = 1 / (2 mu rho)`. Robust mode: `factor * min(sigma / (2 mu rho), delta/2)`,
/// stalling below `h_min`. A fixed step overrides both and ignores the `delta/2` cap.
pub fn step_control(state: &StepState, n: usize, cfg: &TraceConfig) -> Option<f64> {
    let raw = if let Some(h) = cfg.fixed_step {
        state.factor * h
    } else {
        match cfg.mode {
            StepMode::Practical => {
                let kappa_s = robust_step(state.s.max(0.0), n, cfg.rho);
                state.factor * (state.delta / 2.0).min(kappa_s)
            }
            StepMode::Robust => state.factor * robust_step(state.s.max(0.0), n, cfg.rho).min(state.delta / 2.0),
        }
    };
    if raw >= cfg.h_min {
        return Some(raw);
    }
    match (cfg.mode, cfg.fixed_step) {
        (StepMode::Practical, None) if !state.floor_rejected => Some(cfg.h_min),
        _ => None,
    }
}
