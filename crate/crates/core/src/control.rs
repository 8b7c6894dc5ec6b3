//! Proportional-integral controller state shared by the batch executors and the serving
//! vertical scalers.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiControllerState {
    /// Core-units per unit of error.
    pub kp: f64,
    pub ki: f64,
    pub integral: f64,
    pub u_min: f64,
    pub u_max: f64,
    /// Actuation period in seconds.
    pub period: f64,
    /// Time of the last update that integrated error, in seconds.
    pub last_update: Option<f64>,
}

impl PiControllerState {
    pub fn new(kp: f64, ki: f64, u_min: f64, u_max: f64, period: f64) -> Self {
        debug_assert!(u_min >= 0.0 && u_max >= u_min);
        PiControllerState {
            kp,
            ki,
            integral: 0.0,
            u_min,
            u_max,
            period,
            last_update: None,
        }
    }

    pub fn clamp_output(&self, u: f64) -> f64 {
        u.clamp(self.u_min, self.u_max)
    }

    /// Anti-windup bounds for the integral: `[u_min - u_max, u_max - u_min] / ki`.
    pub fn integral_bounds(&self) -> (f64, f64) {
        if self.ki > 0.0 {
            let span = (self.u_max - self.u_min) / self.ki;
            (-span, span)
        } else {
            (0.0, 0.0)
        }
    }

    /// Elapsed time since the previous update in units of the period (1 on the first call).
    pub fn step_weight(&mut self, now: f64) -> f64 {
        let w = match self.last_update {
            Some(prev) if self.period > 0.0 => ((now - prev) / self.period).max(0.0),
            _ => 1.0,
        };
        self.last_update = Some(now);
        w
    }

    /// Combines `base + p_term + ki * integral'` and clamps it.
    ///
    /// The integral absorbs `error * weight` only when doing so does not push an already
    /// saturated output further into saturation (conditional integration).
    pub fn output(&mut self, base: f64, p_term: f64, error: f64, weight: f64) -> f64 {
        let (lo, hi) = self.integral_bounds();
        let candidate = (self.integral + error * weight).clamp(lo, hi);
        let raw = base + p_term + self.ki * candidate;
        let winding_up = (raw > self.u_max && error > 0.0) || (raw < self.u_min && error < 0.0);
        if winding_up {
            self.clamp_output(base + p_term + self.ki * self.integral)
        } else {
            self.integral = candidate;
            self.clamp_output(raw)
        }
    }

    pub fn reset(&mut self) {
        self.integral = 0.0;
        self.last_update = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_error_passes_base_through() {
        let mut pi = PiControllerState::new(2.0, 0.5, 0.0, 4.0, 1.0);
        assert_eq!(pi.output(1.25, 0.0, 0.0, 1.0), 1.25);
        assert_eq!(pi.integral, 0.0);
    }

    #[test]
    fn integral_frozen_while_saturated() {
        let mut pi = PiControllerState::new(2.0, 0.5, 0.0, 4.0, 1.0);
        for _ in 0..100 {
            assert_eq!(pi.output(3.9, 2.0, 1.0, 1.0), 4.0);
        }
        assert!(pi.integral <= 0.2 + 1e-12, "integral wound up to {}", pi.integral);
    }

    #[test]
    fn integral_accumulates_when_unsaturated() {
        let mut pi = PiControllerState::new(0.0, 0.5, 0.0, 4.0, 1.0);
        pi.output(1.0, 0.0, 0.2, 1.0);
        pi.output(1.0, 0.0, 0.2, 1.0);
        assert!((pi.integral - 0.4).abs() < 1e-12);
    }

    #[test]
    fn integral_respects_bounds() {
        let mut pi = PiControllerState::new(0.0, 2.0, 0.0, 4.0, 1.0);
        for _ in 0..50 {
            pi.output(0.0, 0.0, -10.0, 1.0);
        }
        let (lo, _) = pi.integral_bounds();
        assert!(pi.integral >= lo);
    }

    #[test]
    fn step_weight_tracks_elapsed_periods() {
        let mut pi = PiControllerState::new(1.0, 1.0, 0.0, 1.0, 2.0);
        assert_eq!(pi.step_weight(10.0), 1.0);
        assert_eq!(pi.step_weight(11.0), 0.5);
        assert_eq!(pi.step_weight(15.0), 2.0);
    }
}
