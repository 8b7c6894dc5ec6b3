use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::time::SimTime;
use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    JobSubmit,
    ExecutorDone,
    StageComplete,
    ControlTick,
    RequestArrival,
    RequestComplete,
    RoundComplete,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord<P> {
    pub time: SimTime,
    pub kind: EventKind,
    pub payload: P,
}

impl<P> EventRecord<P> {
    pub fn new(time: SimTime, kind: EventKind, payload: P) -> Self {
        EventRecord { time, kind, payload }
    }
}

struct Queued<P> {
    seq: u64,
    event: EventRecord<P>,
}

impl<P> PartialEq for Queued<P> {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}

impl<P> Eq for Queued<P> {}

impl<P> PartialOrd for Queued<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P> Ord for Queued<P> {
    // BinaryHeap is a max-heap: reverse so the earliest (time, seq) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .event
            .time
            .cmp(&self.event.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Pending events ordered by (time, insertion sequence).
pub struct EventQueue<P> {
    heap: BinaryHeap<Queued<P>>,
    next_seq: u64,
    now: SimTime,
}

impl<P> Default for EventQueue<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> EventQueue<P> {
    pub fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            next_seq: 0,
            now: SimTime::ZERO,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn schedule(&mut self, event: EventRecord<P>) -> Result<(), SimError> {
        if event.time < self.now {
            return Err(SimError::EventInPast {
                at: event.time,
                now: self.now,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Queued { seq, event });
        Ok(())
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|q| q.event.time)
    }

    pub fn peek(&self) -> Option<&EventRecord<P>> {
        self.heap.peek().map(|q| &q.event)
    }

    /// Removes the next event if it is due at or before `end`, advancing the clock to it.
    pub fn pop_until(&mut self, end: SimTime) -> Option<EventRecord<P>> {
        if self.peek_time()? > end {
            return None;
        }
        let q = self.heap.pop()?;
        self.now = q.event.time;
        Some(q.event)
    }

    pub(crate) fn advance_clock(&mut self, to: SimTime) {
        if to > self.now {
            self.now = to;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(t: f64, tag: &'static str) -> EventRecord<&'static str> {
        EventRecord::new(SimTime::new(t), EventKind::JobSubmit, tag)
    }

    #[test]
    fn head_is_earliest() {
        let mut q = EventQueue::new();
        q.schedule(ev(5.0, "a")).unwrap();
        assert_eq!(q.peek_time(), Some(SimTime::new(5.0)));
        q.schedule(ev(3.0, "b")).unwrap();
        assert_eq!(q.peek().unwrap().payload, "b");
    }

    #[test]
    fn equal_times_are_fifo() {
        let mut q = EventQueue::new();
        q.schedule(ev(5.0, "A")).unwrap();
        q.schedule(ev(5.0, "B")).unwrap();
        q.schedule(ev(5.0, "C")).unwrap();
        let end = SimTime::new(10.0);
        let order: Vec<_> = std::iter::from_fn(|| q.pop_until(end).map(|e| e.payload)).collect();
        assert_eq!(order, ["A", "B", "C"]);
    }

    #[test]
    fn rejects_past_events() {
        let mut q = EventQueue::new();
        q.schedule(ev(2.0, "x")).unwrap();
        q.pop_until(SimTime::new(2.0)).unwrap();
        let err = q.schedule(ev(1.0, "late")).unwrap_err();
        assert!(matches!(err, SimError::EventInPast { .. }));
        // equal to now is allowed
        q.schedule(ev(2.0, "same")).unwrap();
    }

    #[test]
    fn pop_respects_horizon() {
        let mut q = EventQueue::new();
        q.schedule(ev(7.0, "x")).unwrap();
        assert!(q.pop_until(SimTime::new(6.9)).is_none());
        assert_eq!(q.now(), SimTime::ZERO);
        assert!(q.pop_until(SimTime::new(7.0)).is_some());
    }
}
