use rand::Rng;
use serde::{Deserialize, Serialize};

/// Arrival generator for one service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ArrivalSpec {
    Poisson {
        rate: f64,
    },
    /// Rate moves linearly from `start_rate` to `end_rate` over `duration`, then stays.
    Ramp {
        start_rate: f64,
        end_rate: f64,
        duration: f64,
    },
    /// `burst_rate` for the first `duty` fraction of each `period`, `base_rate` otherwise.
    Burst {
        base_rate: f64,
        burst_rate: f64,
        period: f64,
        duty: f64,
        #[serde(default)]
        phase: f64,
    },
    Explicit {
        times: Vec<f64>,
    },
}

fn rate_ok(r: f64) -> bool {
    r.is_finite() && r >= 0.0
}

impl ArrivalSpec {
    pub fn validate(&self) -> Result<(), (&'static str, &'static str)> {
        match self {
            ArrivalSpec::Poisson { rate } if !rate_ok(*rate) => Err(("rate", "non-negative")),
            ArrivalSpec::Ramp {
                start_rate,
                end_rate,
                duration,
            } => {
                if !rate_ok(*start_rate) {
                    Err(("start_rate", "non-negative"))
                } else if !rate_ok(*end_rate) {
                    Err(("end_rate", "non-negative"))
                } else if !(duration.is_finite() && *duration > 0.0) {
                    Err(("duration", "positive"))
                } else {
                    Ok(())
                }
            }
            ArrivalSpec::Burst {
                base_rate,
                burst_rate,
                period,
                duty,
                phase,
            } => {
                if !rate_ok(*base_rate) {
                    Err(("base_rate", "non-negative"))
                } else if !rate_ok(*burst_rate) {
                    Err(("burst_rate", "non-negative"))
                } else if !(period.is_finite() && *period > 0.0) {
                    Err(("period", "positive"))
                } else if !(*duty >= 0.0 && *duty <= 1.0) {
                    Err(("duty", "within [0, 1]"))
                } else if !phase.is_finite() {
                    Err(("phase", "finite"))
                } else {
                    Ok(())
                }
            }
            ArrivalSpec::Explicit { times } => {
                if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
                    Err(("times", "finite and non-negative"))
                } else if times.windows(2).any(|w| w[1] < w[0]) {
                    Err(("times", "non-decreasing"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Intensity as linear pieces `(t0, t1, rate_at_t0, rate_at_t1)` covering `[0, horizon)`.
    fn pieces(&self, horizon: f64) -> Vec<(f64, f64, f64, f64)> {
        match *self {
            ArrivalSpec::Poisson { rate } => vec![(0.0, horizon, rate, rate)],
            ArrivalSpec::Ramp {
                start_rate,
                end_rate,
                duration,
            } => {
                if horizon <= duration {
                    let at = start_rate + (end_rate - start_rate) * horizon / duration;
                    vec![(0.0, horizon, start_rate, at)]
                } else {
                    vec![
                        (0.0, duration, start_rate, end_rate),
                        (duration, horizon, end_rate, end_rate),
                    ]
                }
            }
            ArrivalSpec::Burst {
                base_rate,
                burst_rate,
                period,
                duty,
                phase,
            } => {
                let on = duty * period;
                let offset = phase.rem_euclid(period);
                let mut out = Vec::new();
                let mut k = -1.0;
                loop {
                    let t0 = offset + k * period;
                    if t0 >= horizon {
                        break;
                    }
                    for (a, b, r) in [(t0, t0 + on, burst_rate), (t0 + on, t0 + period, base_rate)] {
                        let (a, b) = (a.max(0.0), b.min(horizon));
                        if b > a {
                            out.push((a, b, r, r));
                        }
                    }
                    k += 1.0;
                }
                out
            }
            ArrivalSpec::Explicit { .. } => Vec::new(),
        }
    }
}

/// Arrival timestamps in `[0, horizon)`.
///
/// Generated arrivals are a non-homogeneous Poisson process obtained by time rescaling: unit
/// exponential gaps, each drawn by inverting its CDF on one uniform, are mapped back through
/// the inverse of the integrated intensity. Explicit lists are returned unchanged.
pub fn gen_arrivals<R: Rng>(spec: &ArrivalSpec, horizon: f64, rng: &mut R) -> Vec<f64> {
    if let ArrivalSpec::Explicit { times } = spec {
        return times.clone();
    }
    let mut out = Vec::new();
    let pieces = spec.pieces(horizon);
    let mut idx = 0;
    // intensity mass still to cover before the next arrival, and position within the current piece
    let mut pos = pieces.first().map_or(0.0, |p| p.0);
    let mut need = -(1.0 - rng.gen::<f64>()).ln();
    while idx < pieces.len() {
        let (t0, t1, r0, r1) = pieces[idx];
        let len = t1 - t0;
        let rate_at = |t: f64| r0 + (r1 - r0) * (t - t0) / len;
        let rp = rate_at(pos);
        let left = 0.5 * (rp + r1) * (t1 - pos);
        if need >= left {
            need -= left;
            idx += 1;
            pos = pieces.get(idx).map_or(t1, |p| p.0);
            continue;
        }
        let a = (r1 - r0) / (2.0 * len);
        let disc = (rp * rp + 4.0 * a * need).max(0.0);
        let tau = 2.0 * need / (rp + disc.sqrt());
        pos = (pos + tau).min(t1);
        out.push(pos);
        need = -(1.0 - rng.gen::<f64>()).ln();
    }
    out
}
