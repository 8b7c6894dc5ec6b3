use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Synthetic learning curve `AC(S) = a_max (1 - exp(-k S))` standing in for real training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct LearningCurveOracle {
    /// Asymptotic accuracy.
    pub a_max: f64,
    /// Rate constant per epoch.
    pub k: f64,
    /// Standard deviation of the per-round measurement noise.
    #[serde(default)]
    pub noise_sd: f64,
    /// Relative per-node perturbations of `k`; missing entries are zero.
    #[serde(default)]
    pub k_jitter: Vec<f64>,
    /// Validation minus held-out accuracy.
    #[serde(default = "default_gap")]
    pub generalization_gap: f64,
}

fn default_gap() -> f64 {
    0.01
}

impl LearningCurveOracle {
    pub fn new(a_max: f64, k: f64, noise_sd: f64) -> Self {
        LearningCurveOracle {
            a_max,
            k,
            noise_sd,
            k_jitter: Vec::new(),
            generalization_gap: default_gap(),
        }
    }

    pub fn validate(&self) -> Result<(), (&'static str, &'static str)> {
        if !(self.a_max > 0.0 && self.a_max <= 1.0) {
            return Err(("a_max", "in (0, 1]"));
        }
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(("k", "positive"));
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return Err(("noise_sd", "non-negative"));
        }
        if self.k_jitter.iter().any(|j| !j.is_finite() || *j <= -1.0) {
            return Err(("k_jitter", "finite and greater than -1"));
        }
        if !self.generalization_gap.is_finite() {
            return Err(("generalization_gap", "finite"));
        }
        Ok(())
    }

    /// Noise-free accuracy after `epochs` cumulative epochs on a node with relative jitter `jitter`.
    pub fn curve(&self, epochs: f64, jitter: f64) -> f64 {
        self.a_max * (1.0 - (-self.k * (1.0 + jitter) * epochs).exp())
    }
}

/// Measured accuracies after one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundAccuracy {
    pub ac_fit: f64,
    pub ac_eval: f64,
}

/// Trains every node for `epochs` more epochs and aggregates.
///
/// `ac_fit` is the node mean plus gaussian noise; `ac_eval` subtracts the generalization gap.
/// Both are clamped to `[0, 1]`.
pub fn simulate_round<R: Rng + ?Sized>(
    oracle: &LearningCurveOracle,
    epochs: u32,
    s_prev: u32,
    nodes: u32,
    rng: &mut R,
) -> RoundAccuracy {
    debug_assert!(epochs >= 1);
    let s = f64::from(s_prev + epochs);
    let nodes = nodes.max(1);
    let mean = (0..nodes as usize)
        .map(|i| oracle.curve(s, oracle.k_jitter.get(i).copied().unwrap_or(0.0)))
        .sum::<f64>()
        / f64::from(nodes);
    let noise = if oracle.noise_sd > 0.0 {
        Normal::new(0.0, oracle.noise_sd)
            .expect("validated noise_sd")
            .sample(rng)
    } else {
        0.0
    };
    let ac_fit = (mean + noise).clamp(0.0, 1.0);
    RoundAccuracy {
        ac_fit,
        ac_eval: (ac_fit - oracle.generalization_gap).clamp(0.0, 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn closed_form_curve() {
        let o = LearningCurveOracle::new(0.85, 0.15, 0.0);
        let want = 0.85 * (1.0 - (-2.85f64).exp());
        assert!((want - 0.8008).abs() < 1e-4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let got = simulate_round(&o, 1, 18, 1, &mut rng);
        assert!((got.ac_fit - want).abs() < 1e-12);
        assert!((got.ac_eval - (want - 0.01)).abs() < 1e-12);
    }

    #[test]
    fn noise_free_is_increasing() {
        let o = LearningCurveOracle::new(0.85, 0.21, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut prev = -1.0;
        for s in 0..40 {
            let a = simulate_round(&o, 1, s, 3, &mut rng).ac_fit;
            assert!(a > prev);
            prev = a;
        }
    }

    #[test]
    fn mean_within_node_range() {
        let mut o = LearningCurveOracle::new(0.85, 0.2, 0.0);
        o.k_jitter = vec![0.1, -0.1];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = simulate_round(&o, 2, 3, 2, &mut rng).ac_fit;
        let lo = o.curve(5.0, -0.1);
        let hi = o.curve(5.0, 0.1);
        assert!(lo <= a && a <= hi);
    }
}
