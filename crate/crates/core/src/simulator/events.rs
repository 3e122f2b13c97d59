use alloc::collections::BinaryHeap;
use core::cmp::{Ordering, Reverse};

use crate::{Error, Result};

/// A worker finishing a gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub worker: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64, usize);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Pending completions ordered by `(time, worker id)`, so simultaneous
/// completions pop lowest id first.
#[derive(Debug, Clone, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Reverse<Key>>,
    now: f64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn schedule(&mut self, worker: usize, time: f64) {
        debug_assert!(time >= self.now, "events cannot be scheduled in the past");
        self.heap.push(Reverse(Key(time, worker)));
    }

    /// Time of the next finite event, if any.
    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|Reverse(k)| k.0).filter(|t| t.is_finite())
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Pops the earliest completion. Fails when nothing can ever complete:
    /// the queue is empty or every pending completion lies at `+inf`.
    pub fn advance_to_next_event(&mut self) -> Result<Event> {
        match self.heap.peek() {
            Some(Reverse(Key(t, _))) if t.is_finite() => {}
            _ => return Err(Error::SimulationStalled { time: self.now }),
        }
        let Reverse(Key(time, worker)) = self.heap.pop().expect("peeked");
        self.now = time;
        Ok(Event { time, worker })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_pop_lower_id_first() {
        let mut q = EventQueue::new();
        q.schedule(3, 2.0);
        q.schedule(1, 2.0);
        q.schedule(2, 1.0);
        let order: alloc::vec::Vec<usize> = (0..3).map(|_| q.advance_to_next_event().unwrap().worker).collect();
        assert_eq!(order, [2, 1, 3]);
    }

    #[test]
    fn stalls_on_infinite_or_empty() {
        let mut q = EventQueue::new();
        assert!(matches!(
            q.advance_to_next_event(),
            Err(Error::SimulationStalled { .. })
        ));
        q.schedule(0, f64::INFINITY);
        q.schedule(1, f64::INFINITY);
        assert!(matches!(
            q.advance_to_next_event(),
            Err(Error::SimulationStalled { .. })
        ));
    }

    #[test]
    fn single_event() {
        let mut q = EventQueue::new();
        q.schedule(0, 7.0);
        assert_eq!(q.advance_to_next_event().unwrap(), Event { time: 7.0, worker: 0 });
        assert_eq!(q.now(), 7.0);
    }
}
