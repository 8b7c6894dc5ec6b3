use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

/// A point on the simulated clock, in seconds.
///
/// Always finite and non-negative, which makes the total order below sound.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimTime(f64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0.0);

    /// Panics on negative or non-finite input; use [`SimTime::try_new`] for untrusted values.
    pub fn new(secs: f64) -> Self {
        Self::try_new(secs).unwrap_or_else(|| panic!("invalid simulated time {secs}"))
    }

    pub fn try_new(secs: f64) -> Option<Self> {
        (secs.is_finite() && secs >= 0.0).then_some(SimTime(secs))
    }

    pub fn secs(self) -> f64 {
        self.0
    }

    pub fn max(self, other: SimTime) -> SimTime {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: SimTime) -> SimTime {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Eq for SimTime {}

impl PartialOrd for SimTime {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SimTime {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Add<f64> for SimTime {
    type Output = SimTime;

    fn add(self, rhs: f64) -> SimTime {
        SimTime::new(self.0 + rhs)
    }
}

impl Sub for SimTime {
    type Output = f64;

    fn sub(self, rhs: SimTime) -> f64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}s", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_negative_and_nan() {
        assert!(SimTime::try_new(-1.0).is_none());
        assert!(SimTime::try_new(f64::NAN).is_none());
        assert!(SimTime::try_new(f64::INFINITY).is_none());
        assert_eq!(SimTime::try_new(0.0), Some(SimTime::ZERO));
    }

    #[test]
    fn arithmetic() {
        let t = SimTime::new(2.5) + 1.5;
        assert_eq!(t.secs(), 4.0);
        assert_eq!(t - SimTime::new(1.0), 3.0);
        assert!(SimTime::new(1.0) < SimTime::new(1.5));
    }
}
