//! Service-wide event stream: a bounded replay buffer plus a live broadcast.

use std::collections::VecDeque;
use std::sync::Mutex;

use serde::Serialize;
use serde_json::Value;
use tokio::sync::broadcast;

/// Events kept for replay after a reconnect.
pub const RING_CAPACITY: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub seq: u64,
    #[serde(rename = "type")]
    pub kind: &'static str,
    pub payload: Value,
}

impl Event {
    /// Stands in for the dropped events `from..=to`; carries `to` as its seq
    /// so a client's last seen seq stays meaningful.
    pub fn gap(from: u64, to: u64) -> Self {
        Self {
            seq: to,
            kind: "gap",
            payload: serde_json::json!({"from": from, "to": to}),
        }
    }
}

struct Ring {
    next_seq: u64,
    buf: VecDeque<Event>,
}

pub struct EventLog {
    ring: Mutex<Ring>,
    tx: broadcast::Sender<Event>,
}

impl Default for EventLog {
    fn default() -> Self {
        Self {
            ring: Mutex::new(Ring {
                next_seq: 1,
                buf: VecDeque::with_capacity(RING_CAPACITY),
            }),
            tx: broadcast::channel(RING_CAPACITY).0,
        }
    }
}

impl EventLog {
    pub fn publish(&self, kind: &'static str, payload: Value) -> u64 {
        let mut ring = self.ring.lock().unwrap();
        let ev = Event {
            seq: ring.next_seq,
            kind,
            payload,
        };
        ring.next_seq += 1;
        if ring.buf.len() == RING_CAPACITY {
            ring.buf.pop_front();
        }
        ring.buf.push_back(ev.clone());
        // Sent under the lock so subscribers see the same order as the ring.
        let _ = self.tx.send(ev);
        ring.next_seq - 1
    }

    /// Events after `since` still in the buffer, led by a gap marker when
    /// some were already dropped, and a receiver for everything later.
    pub fn subscribe(&self, since: Option<u64>) -> (Vec<Event>, broadcast::Receiver<Event>) {
        let ring = self.ring.lock().unwrap();
        let rx = self.tx.subscribe();
        let mut replay = Vec::new();
        if let Some(since) = since {
            let oldest = ring.buf.front().map_or(ring.next_seq, |e| e.seq);
            if since + 1 < oldest {
                replay.push(Event::gap(since + 1, oldest - 1));
            }
            replay.extend(ring.buf.iter().filter(|e| e.seq > since).cloned());
        }
        (replay, rx)
    }

    pub fn last_seq(&self) -> u64 {
        self.ring.lock().unwrap().next_seq - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seqs_are_contiguous_and_replay_is_bounded() {
        let log = EventLog::default();
        for i in 0..300 {
            assert_eq!(log.publish("belief_updated", serde_json::json!(i)), i + 1);
        }
        let (replay, _) = log.subscribe(Some(290));
        assert_eq!(replay.iter().map(|e| e.seq).collect::<Vec<_>>(), (291..=300).collect::<Vec<_>>());

        let (replay, _) = log.subscribe(Some(10));
        assert_eq!(replay[0], Event::gap(11, 44));
        assert_eq!(replay[1].seq, 45);
        assert_eq!(replay.len(), 1 + RING_CAPACITY);

        let (replay, _) = log.subscribe(None);
        assert!(replay.is_empty());
    }

    #[test]
    fn live_events_follow_the_replay() {
        let log = EventLog::default();
        log.publish("graph_updated", Value::Null);
        let (replay, mut rx) = log.subscribe(Some(0));
        log.publish("belief_updated", Value::Null);
        assert_eq!(replay.len(), 1);
        assert_eq!(rx.try_recv().unwrap().seq, 2);
    }
}
