use std::collections::VecDeque;

use crate::vbus::SimTime;

/// Timestamped inputs, consumed as simulated time reaches them.
pub(crate) struct TimedQueue<T> {
    items: VecDeque<(SimTime, T)>,
}

impl<T> Default for TimedQueue<T> {
    fn default() -> Self {
        TimedQueue {
            items: VecDeque::new(),
        }
    }
}

impl<T> TimedQueue<T> {
    /// Inserts after any item with the same or an earlier time.
    pub(crate) fn push(&mut self, at: SimTime, item: T) {
        let pos = self.items.partition_point(|(t, _)| *t <= at);
        self.items.insert(pos, (at, item));
    }

    /// Removes and returns the newest item due by `now`, dropping older ones.
    pub(crate) fn take_latest(&mut self, now: SimTime) -> Option<(SimTime, T)> {
        let due = self.items.partition_point(|(t, _)| *t <= now);
        if due == 0 {
            return None;
        }
        self.items.drain(..due - 1);
        self.items.pop_front()
    }

    pub(crate) fn front(&self) -> Option<&(SimTime, T)> {
        self.items.front()
    }

    pub(crate) fn pop_front(&mut self) -> Option<(SimTime, T)> {
        self.items.pop_front()
    }
}
