use super::config::{FederationConfig, Trajectory};
use super::FedError;

/// Accuracy the model should have reached at the end of round `r`.
///
/// Interpolates from the anchor `(r0, ac0)` to `ac_sla` at the last round. With
/// `x = (r - r0) / (R - r0)` the linear target is `ac0 + (ac_sla - ac0) x` and the quadratic one
/// `ac0 + (ac_sla - ac0) (1 - (1 - x)^2)`.
pub fn target_accuracy(r: u32, cfg: &FederationConfig, anchor: (u32, f64)) -> Result<f64, FedError> {
    let (r0, ac0) = anchor;
    if r <= r0 || r > cfg.rounds {
        return Err(FedError::RoundOutOfRange {
            r,
            first: r0 + 1,
            last: cfg.rounds,
        });
    }
    if r == cfg.rounds {
        return Ok(cfg.ac_sla);
    }
    let x = f64::from(r - r0) / f64::from(cfg.rounds - r0);
    let shape = match cfg.trajectory {
        Trajectory::Linear => x,
        Trajectory::Quadratic => 1.0 - (1.0 - x) * (1.0 - x),
    };
    Ok(ac0 + (cfg.ac_sla - ac0) * shape)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(t: Trajectory) -> FederationConfig {
        FederationConfig::new(10, 0.80, t)
    }

    #[test]
    fn endpoint_is_sla() {
        for t in [Trajectory::Linear, Trajectory::Quadratic] {
            assert_eq!(target_accuracy(10, &cfg(t), (2, 0.3)).unwrap(), 0.80);
        }
    }

    #[test]
    fn midpoint_values() {
        let lin = target_accuracy(6, &cfg(Trajectory::Linear), (2, 0.30)).unwrap();
        assert!((lin - 0.55).abs() < 1e-12);
        let quad = target_accuracy(6, &cfg(Trajectory::Quadratic), (2, 0.30)).unwrap();
        assert!((quad - 0.675).abs() < 1e-12);
    }

    #[test]
    fn rejects_rounds_at_or_before_anchor() {
        let c = cfg(Trajectory::Linear);
        assert!(target_accuracy(2, &c, (2, 0.3)).is_err());
        assert!(target_accuracy(11, &c, (2, 0.3)).is_err());
    }
}
