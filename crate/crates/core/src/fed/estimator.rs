use serde::{Deserialize, Serialize};

/// Monitored outcome of one completed round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundState {
    pub r: u32,
    pub e_r: u32,
    /// Cumulative epochs through this round.
    pub s_r: u32,
    pub ac_r: f64,
}

/// Slopes at or below this are treated as a plateau.
pub const MIN_SLOPE: f64 = 1e-6;

/// Epochs for the next round from the last two monitored rounds.
///
/// Extrapolates the secant through `(s, ac)` of rounds `r-2` and `r-1` to the target and rounds
/// up. A flat or falling secant repeats the previous epoch count.
pub fn estimate_epochs(target: f64, hist: [&RoundState; 2], e_max: u32) -> u32 {
    let [older, last] = hist;
    debug_assert!(older.s_r < last.s_r, "cumulative epochs must increase");
    let slope = (last.ac_r - older.ac_r) / f64::from(last.s_r - older.s_r);
    if slope <= MIN_SLOPE {
        return last.e_r.clamp(1, e_max.max(1));
    }
    // tolerance keeps an exact landing from rounding up an extra epoch
    let need = ((target - last.ac_r) / slope - 1e-9).ceil();
    if need.is_nan() || need < 1.0 {
        1
    } else {
        need.min(f64::from(e_max.max(1))) as u32
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rs(r: u32, e_r: u32, s_r: u32, ac_r: f64) -> RoundState {
        RoundState { r, e_r, s_r, ac_r }
    }

    #[test]
    fn secant_from_bootstrap_rounds() {
        // slope 0.05 per epoch; 0.0625 short of target -> 1.25 -> 2
        let e = estimate_epochs(0.3625, [&rs(1, 1, 1, 0.25), &rs(2, 1, 2, 0.30)], 16);
        assert_eq!(e, 2);
    }

    #[test]
    fn ahead_of_target_runs_one_epoch() {
        assert_eq!(estimate_epochs(0.28, [&rs(1, 1, 1, 0.25), &rs(2, 1, 2, 0.30)], 16), 1);
    }

    #[test]
    fn plateau_repeats_previous() {
        assert_eq!(estimate_epochs(0.9, [&rs(3, 2, 4, 0.50), &rs(4, 3, 7, 0.50)], 16), 3);
        assert_eq!(estimate_epochs(0.9, [&rs(3, 2, 4, 0.50), &rs(4, 5, 9, 0.48)], 16), 5);
    }

    #[test]
    fn clamped_to_e_max() {
        assert_eq!(estimate_epochs(0.99, [&rs(1, 1, 1, 0.10), &rs(2, 1, 2, 0.11)], 16), 16);
    }

    #[test]
    fn linear_plant_lands_on_target() {
        // ac = 0.04 * s exactly; target 0.28 from s = 2 needs 5 more epochs
        let e = estimate_epochs(0.28, [&rs(1, 1, 1, 0.04), &rs(2, 1, 2, 0.08)], 16);
        assert_eq!(e, 5);
        assert!((0.04 * f64::from(2 + e) - 0.28).abs() < 1e-12);
    }
}
