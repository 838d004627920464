//! Discrete-event kernel: simulation clock, future event list, random
//! streams and the sampling primitives shared by the rest of the model.

mod rng;
mod sampling;

pub use rng::{replication_seed, RngStream, StreamId, Streams};
pub use sampling::{generate_arrivals, sample_bernoulli, sample_triangular, TriangularDist};

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Length of a calendar day in minutes.
pub const DAY_MINUTES: f64 = 1440.0;

/// Minutes since the start of a replication.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
pub struct SimTime(pub f64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0.0);

    pub fn minutes(self) -> f64 {
        self.0
    }

    /// Splits the clock into calendar coordinates. Each simulated day is
    /// [`DAY_MINUTES`] long and opens at its first minute.
    pub fn calendar(self, days_per_week: u32) -> CalendarTime {
        let day_index = (self.0 / DAY_MINUTES).floor().max(0.0) as u32;
        let minute_of_day = self.0 - f64::from(day_index) * DAY_MINUTES;
        CalendarTime {
            week: day_index / days_per_week,
            day: day_index % days_per_week,
            hour: (minute_of_day / 60.0).floor() as u32,
            minute_of_day,
        }
    }
}

impl std::ops::Add<f64> for SimTime {
    type Output = SimTime;

    fn add(self, minutes: f64) -> SimTime {
        SimTime(self.0 + minutes)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}min", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalendarTime {
    pub week: u32,
    pub day: u32,
    pub hour: u32,
    pub minute_of_day: f64,
}

/// A scheduled event. `sequence` is assigned by the scheduler and breaks
/// ties between events that share a timestamp (FIFO insertion order).
#[derive(Debug, Clone)]
pub struct Event<K> {
    pub time: SimTime,
    pub sequence: u64,
    pub kind: K,
}

impl<K> PartialEq for Event<K> {
    fn eq(&self, other: &Self) -> bool {
        self.sequence == other.sequence
    }
}

impl<K> Eq for Event<K> {}

impl<K> PartialOrd for Event<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<K> Ord for Event<K> {
    // BinaryHeap is a max-heap; reverse so the earliest (time, sequence) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .0
            .total_cmp(&self.time.0)
            .then_with(|| other.sequence.cmp(&self.sequence))
    }
}

/// Future event list plus the simulation clock.
#[derive(Debug)]
pub struct Scheduler<K> {
    queue: BinaryHeap<Event<K>>,
    now: SimTime,
    next_sequence: u64,
    dispatched: u64,
}

impl<K> Default for Scheduler<K> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K> Scheduler<K> {
    pub fn new() -> Self {
        Self {
            queue: BinaryHeap::new(),
            now: SimTime::ZERO,
            next_sequence: 0,
            dispatched: 0,
        }
    }

    #[inline]
    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn dispatched(&self) -> u64 {
        self.dispatched
    }

    /// Enqueues `kind` at `time`. Scheduling in the past is a logic error in
    /// the model and is reported rather than silently reordered.
    pub fn schedule(&mut self, time: SimTime, kind: K) -> Result<u64, ModelError> {
        if !(time.0 >= self.now.0) {
            return Err(ModelError::ScheduledInPast {
                at: time.0,
                now: self.now.0,
            });
        }
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        self.queue.push(Event {
            time,
            sequence,
            kind,
        });
        Ok(sequence)
    }

    pub fn schedule_in(&mut self, delay: f64, kind: K) -> Result<u64, ModelError> {
        self.schedule(self.now + delay, kind)
    }

    /// Pops the next event and moves the clock to its timestamp. `None`
    /// signals the end of the replication.
    pub fn advance_to_next(&mut self) -> Option<Event<K>> {
        let event = self.queue.pop()?;
        self.now = event.time;
        self.dispatched += 1;
        Some(event)
    }
}
