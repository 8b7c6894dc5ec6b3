use rand_chacha::ChaCha8Rng;

use super::config::{FederationConfig, MonitoredAccuracy};
use super::estimator::{estimate_epochs, RoundState};
use super::oracle::{simulate_round, LearningCurveOracle};
use super::trajectory::target_accuracy;
use crate::sim::{Ctx, Engine, EventKind, EventRecord, MetricsLog, Model, RoundRecord, SimError, SimTime};

/// Per-round outcomes of a federation run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FederationLog {
    pub rounds: Vec<RoundRecord>,
}

impl FederationLog {
    pub fn final_eval(&self) -> Option<f64> {
        self.rounds.last().map(|r| r.ac_eval)
    }
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    r: u32,
    e: u32,
    target: Option<f64>,
}

/// Round orchestration driven by the event engine; one `RoundComplete` event per round.
pub struct FederationSimulation {
    cfg: FederationConfig,
    oracle: LearningCurveOracle,
    rng: ChaCha8Rng,
    history: Vec<RoundState>,
    pending: Option<Pending>,
}

impl FederationSimulation {
    pub fn new(cfg: FederationConfig, oracle: LearningCurveOracle, rng: ChaCha8Rng) -> Self {
        FederationSimulation {
            cfg,
            oracle,
            rng,
            history: Vec::new(),
            pending: None,
        }
    }

    pub fn history(&self) -> &[RoundState] {
        &self.history
    }

    fn round_length(&self, e: u32) -> f64 {
        f64::from(e) * self.cfg.epoch_time + self.cfg.aggregation_delay
    }

    /// Chooses the epochs for round `r` from the monitored history.
    fn plan(&self, r: u32) -> Pending {
        if r <= 2 {
            return Pending {
                r,
                e: self.cfg.e_bootstrap,
                target: None,
            };
        }
        let anchor = (2, self.history[1].ac_r);
        let target = target_accuracy(r, &self.cfg, anchor).expect("r is past the bootstrap rounds");
        let n = self.history.len();
        let e = estimate_epochs(
            target + self.cfg.accuracy_headroom,
            [&self.history[n - 2], &self.history[n - 1]],
            self.cfg.e_max,
        );
        Pending {
            r,
            e,
            target: Some(target),
        }
    }

    /// Completion event of the first round, starting at `start`.
    pub fn first_event(&mut self, start: SimTime) -> EventRecord<u32> {
        let p = self.plan(1);
        self.pending = Some(p);
        EventRecord::new(start + self.round_length(p.e), EventKind::RoundComplete, 1)
    }
}

impl Model for FederationSimulation {
    type Payload = u32;

    fn handle(&mut self, ev: EventRecord<u32>, ctx: &mut Ctx<'_, u32>) -> Result<(), SimError> {
        let Some(p) = self.pending.take().filter(|p| p.r == ev.payload) else {
            return Ok(());
        };
        let s_prev = self.history.last().map_or(0, |h| h.s_r);
        let acc = simulate_round(&self.oracle, p.e, s_prev, self.cfg.node_count, &mut self.rng);
        let state = RoundState {
            r: p.r,
            e_r: p.e,
            s_r: s_prev + p.e,
            ac_r: match self.cfg.monitor {
                MonitoredAccuracy::Fit => acc.ac_fit,
                MonitoredAccuracy::Eval => acc.ac_eval,
            },
        };
        self.history.push(state);
        ctx.log.rounds.push(RoundRecord {
            r: p.r,
            target: p.target,
            e_r: p.e,
            s_r: state.s_r,
            ac_fit: acc.ac_fit,
            ac_eval: acc.ac_eval,
            time: ev.time,
        });
        if p.r < self.cfg.rounds {
            let next = self.plan(p.r + 1);
            self.pending = Some(next);
            ctx.schedule(ev.time + self.round_length(next.e), EventKind::RoundComplete, next.r)?;
        }
        Ok(())
    }

    fn is_active(&self) -> bool {
        false
    }
}

/// Runs all `cfg.rounds` rounds; never stops early.
pub fn run_federation(cfg: &FederationConfig, oracle: &LearningCurveOracle, rng: ChaCha8Rng) -> FederationLog {
    let (log, _) = run_federation_logged(cfg, oracle, rng, 1.0);
    FederationLog { rounds: log.rounds }
}

pub(crate) fn run_federation_logged(
    cfg: &FederationConfig,
    oracle: &LearningCurveOracle,
    rng: ChaCha8Rng,
    period: f64,
) -> (MetricsLog, SimTime) {
    let mut sim = FederationSimulation::new(cfg.clone(), oracle.clone(), rng);
    let first = sim.first_event(SimTime::ZERO);
    let mut engine = Engine::new(sim, period).expect("positive control period");
    engine.schedule(first).expect("first round is in the future");
    // rounds are bounded by e_max epochs each
    let horizon =
        f64::from(cfg.rounds) * (f64::from(cfg.e_max.max(cfg.e_bootstrap)) * cfg.epoch_time + cfg.aggregation_delay);
    engine
        .run_until(SimTime::new(horizon))
        .expect("federation events are scheduled forward");
    let now = engine.now();
    let (_, log) = engine.into_parts();
    (log, now)
}
