//! Local opinion broadcast and the bounded unique-sender message queue.

use crate::arena::Color;

/// Broadcast radius in meters.
pub const COMM_RADIUS_M: f64 = 0.70;
/// Maximum number of unique senders held in a queue.
pub const QUEUE_CAPACITY: usize = 4;

/// An opinion message: the sender's id and current opinion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OpinionMessage {
    pub sender: usize,
    pub opinion: Color,
}

/// Ordered queue of opinions from up to four unique neighbors.
///
/// A message from a sender already present replaces that sender's stored
/// opinion in place (freshest wins); a message from a new sender is dropped
/// when the queue is full.
#[derive(Clone, Debug, Default)]
pub struct MessageQueue {
    entries: Vec<OpinionMessage>,
}

/// Queue aggregate fed to the decision mechanisms: s0 is the share of white
/// opinions among queued entries (0 for an empty queue), s1 the fill level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VirtualSensors {
    pub s0: f64,
    pub s1: f64,
}

impl MessageQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, msg: OpinionMessage) {
        if let Some(entry) = self.entries.iter_mut().find(|e| e.sender == msg.sender) {
            entry.opinion = msg.opinion;
        } else if self.entries.len() < QUEUE_CAPACITY {
            self.entries.push(msg);
        }
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[OpinionMessage] {
        &self.entries
    }

    pub fn virtual_sensors(&self) -> VirtualSensors {
        if self.entries.is_empty() {
            return VirtualSensors { s0: 0.0, s1: 0.0 };
        }
        let white = self
            .entries
            .iter()
            .filter(|e| e.opinion == Color::White)
            .count();
        VirtualSensors {
            s0: white as f64 / self.entries.len() as f64,
            s1: self.entries.len() as f64 / QUEUE_CAPACITY as f64,
        }
    }
}

/// Receiver ids within communication range of `sender`, ascending. Whether a
/// receiver actually stores the message depends on its receive window, which
/// the simulation checks at delivery time.
pub fn recipients_in_range(positions: &[(f64, f64)], sender: usize) -> Vec<usize> {
    let (sx, sy) = positions[sender];
    positions
        .iter()
        .enumerate()
        .filter(|(id, (x, y))| {
            *id != sender && {
                let (dx, dy) = (x - sx, y - sy);
                dx * dx + dy * dy <= COMM_RADIUS_M * COMM_RADIUS_M
            }
        })
        .map(|(id, _)| id)
        .collect()
}
