use super::event::{EventKind, EventQueue, EventRecord};
use super::metrics::MetricsLog;
use super::time::SimTime;
use super::SimError;

/// A policy stack driven by the engine.
///
/// The engine owns the clock and the queue; the model owns all domain state.
pub trait Model {
    type Payload;

    fn handle(&mut self, event: EventRecord<Self::Payload>, ctx: &mut Ctx<'_, Self::Payload>) -> Result<(), SimError>;

    /// Runs the periodic controllers: executor controllers, then node arbitration, then grants.
    fn control_tick(&mut self, _ctx: &mut Ctx<'_, Self::Payload>) -> Result<(), SimError> {
        Ok(())
    }

    /// Whether any controlled entity is live; ticks are emitted only while this holds.
    fn is_active(&self) -> bool;
}

enum Slot<P> {
    Tick(u64),
    Model(P),
}

/// Handle passed to model callbacks for scheduling follow-up events and logging.
pub struct Ctx<'a, P> {
    queue: &'a mut EventQueue<Slot<P>>,
    pub log: &'a mut MetricsLog,
    pub period: f64,
}

impl<P> Ctx<'_, P> {
    pub fn now(&self) -> SimTime {
        self.queue.now()
    }

    pub fn schedule(&mut self, time: SimTime, kind: EventKind, payload: P) -> Result<(), SimError> {
        self.queue.schedule(EventRecord::new(time, kind, Slot::Model(payload)))
    }
}

pub struct Engine<M: Model> {
    model: M,
    queue: EventQueue<Slot<M::Payload>>,
    log: MetricsLog,
    period: f64,
    pending_tick: Option<u64>,
    last_tick: Option<u64>,
    ticks: u64,
    processed: u64,
    last_time: SimTime,
}

impl<M: Model> Engine<M> {
    pub fn new(model: M, control_period: f64) -> Result<Self, SimError> {
        if !(control_period.is_finite() && control_period > 0.0) {
            return Err(SimError::InvalidPeriod(control_period));
        }
        Ok(Engine {
            model,
            queue: EventQueue::new(),
            log: MetricsLog::new(),
            period: control_period,
            pending_tick: None,
            last_tick: None,
            ticks: 0,
            processed: 0,
            last_time: SimTime::ZERO,
        })
    }

    pub fn now(&self) -> SimTime {
        self.queue.now()
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn model_mut(&mut self) -> &mut M {
        &mut self.model
    }

    pub fn log(&self) -> &MetricsLog {
        &self.log
    }

    pub fn into_parts(self) -> (M, MetricsLog) {
        (self.model, self.log)
    }

    /// Number of control ticks that invoked the model.
    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    pub fn events_processed(&self) -> u64 {
        self.processed
    }

    pub fn schedule(&mut self, event: EventRecord<M::Payload>) -> Result<(), SimError> {
        let EventRecord { time, kind, payload } = event;
        self.queue.schedule(EventRecord::new(time, kind, Slot::Model(payload)))
    }

    /// Processes every event due at or before `end`, then parks the clock at `end`.
    pub fn run_until(&mut self, end: SimTime) -> Result<&MetricsLog, SimError> {
        self.arm_tick()?;
        while let Some(ev) = self.queue.pop_until(end) {
            debug_assert!(ev.time >= self.last_time, "clock went backwards");
            self.last_time = ev.time;
            self.processed += 1;
            let mut ctx = Ctx {
                queue: &mut self.queue,
                log: &mut self.log,
                period: self.period,
            };
            match ev.payload {
                Slot::Tick(k) => {
                    self.pending_tick = None;
                    self.last_tick = Some(k);
                    if self.model.is_active() {
                        self.ticks += 1;
                        self.model.control_tick(&mut ctx)?;
                    }
                }
                Slot::Model(p) => {
                    self.model.handle(EventRecord::new(ev.time, ev.kind, p), &mut ctx)?;
                }
            }
            self.arm_tick()?;
        }
        self.queue.advance_clock(end);
        Ok(&self.log)
    }

    /// Schedules the next tick on the `k * period` grid if the model is active and none is pending.
    fn arm_tick(&mut self) -> Result<(), SimError> {
        if self.pending_tick.is_some() || !self.model.is_active() {
            return Ok(());
        }
        let now = self.queue.now().secs();
        let mut k = (now / self.period).ceil() as u64;
        if (k as f64) * self.period < now {
            k += 1;
        }
        if let Some(last) = self.last_tick {
            k = k.max(last + 1);
        }
        let at = SimTime::new(k as f64 * self.period);
        self.queue
            .schedule(EventRecord::new(at, EventKind::ControlTick, Slot::Tick(k)))?;
        self.pending_tick = Some(k);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Active between a submit and a completion event; counts ticks it sees.
    struct Dummy {
        active: bool,
        ticks_at: Vec<f64>,
        duration: f64,
    }

    impl Model for Dummy {
        type Payload = bool;

        fn handle(&mut self, ev: EventRecord<bool>, ctx: &mut Ctx<'_, bool>) -> Result<(), SimError> {
            if ev.payload {
                self.active = true;
                let done = ctx.now() + self.duration;
                ctx.schedule(done, EventKind::StageComplete, false)?;
            } else {
                self.active = false;
                ctx.log.note(ctx.now(), "done");
            }
            Ok(())
        }

        fn control_tick(&mut self, ctx: &mut Ctx<'_, bool>) -> Result<(), SimError> {
            self.ticks_at.push(ctx.now().secs());
            Ok(())
        }

        fn is_active(&self) -> bool {
            self.active
        }
    }

    fn dummy(duration: f64) -> Dummy {
        Dummy {
            active: false,
            ticks_at: vec![],
            duration,
        }
    }

    #[test]
    fn empty_queue_advances_to_end() {
        let mut e = Engine::new(dummy(1.0), 1.0).unwrap();
        let log = e.run_until(SimTime::new(100.0)).unwrap();
        assert!(log.is_empty());
        assert_eq!(e.now(), SimTime::new(100.0));
        assert_eq!(e.ticks(), 0);
    }

    #[test]
    fn ten_second_activity_sees_ten_ticks() {
        let mut e = Engine::new(dummy(10.0), 1.0).unwrap();
        e.schedule(EventRecord::new(SimTime::ZERO, EventKind::JobSubmit, true))
            .unwrap();
        e.run_until(SimTime::new(50.0)).unwrap();
        assert_eq!(e.ticks(), 10);
        assert_eq!(e.model().ticks_at, (0..10).map(f64::from).collect::<Vec<_>>());
    }

    #[test]
    fn ticks_align_to_grid_after_idle_gap() {
        let mut e = Engine::new(dummy(2.0), 1.0).unwrap();
        e.schedule(EventRecord::new(SimTime::new(3.5), EventKind::JobSubmit, true))
            .unwrap();
        e.run_until(SimTime::new(50.0)).unwrap();
        assert_eq!(e.model().ticks_at, vec![4.0, 5.0]);
    }

    #[test]
    fn rejects_non_positive_period() {
        assert!(matches!(Engine::new(dummy(1.0), 0.0), Err(SimError::InvalidPeriod(_))));
    }

    #[test]
    fn run_until_stops_at_horizon() {
        let mut e = Engine::new(dummy(10.0), 1.0).unwrap();
        e.schedule(EventRecord::new(SimTime::ZERO, EventKind::JobSubmit, true))
            .unwrap();
        e.run_until(SimTime::new(4.5)).unwrap();
        assert_eq!(e.now(), SimTime::new(4.5));
        assert!(e.log().notes.is_empty());
        e.run_until(SimTime::new(20.0)).unwrap();
        assert_eq!(e.log().notes.len(), 1);
    }
}
