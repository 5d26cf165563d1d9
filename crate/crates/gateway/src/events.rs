//! Event stream. Every trace record appended by the gateway is also
//! published here with a gateway-wide sequence number.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

use bgate_core::audit_trace::{TraceKind, TraceRecord};
use futures::stream::{self, Stream};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast::{self, error::RecvError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventMessage {
    pub seq: u64,
    pub session_id: String,
    pub kind: TraceKind,
    pub record: TraceRecord,
}

struct HubInner {
    log: Vec<EventMessage>,
    tx: broadcast::Sender<EventMessage>,
}

/// Keeps the full event log for replay and fans live events out.
pub struct EventHub {
    inner: Mutex<HubInner>,
}

impl Default for EventHub {
    fn default() -> Self {
        EventHub::new(1024)
    }
}

impl EventHub {
    pub fn new(capacity: usize) -> EventHub {
        let (tx, _) = broadcast::channel(capacity);
        EventHub { inner: Mutex::new(HubInner { log: Vec::new(), tx }) }
    }

    pub fn publish(&self, record: &TraceRecord) -> EventMessage {
        let mut inner = self.inner.lock().expect("event hub lock");
        let msg = EventMessage {
            seq: inner.log.len() as u64,
            session_id: record.session_id.clone(),
            kind: record.kind,
            record: record.clone(),
        };
        inner.log.push(msg.clone());
        let _ = inner.tx.send(msg.clone());
        msg
    }

    pub fn since(&self, seq: u64) -> Vec<EventMessage> {
        let inner = self.inner.lock().expect("event hub lock");
        inner.log.get(seq as usize..).map(<[_]>::to_vec).unwrap_or_default()
    }

    pub fn len(&self) -> u64 {
        self.inner.lock().expect("event hub lock").log.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Events from `from_seq` on (only new ones when `None`), then live
    /// events, with no gaps or duplicates. A subscriber that falls behind
    /// the channel catches up from the log.
    pub fn subscribe(
        self: &Arc<Self>,
        from_seq: Option<u64>,
        session_id: Option<String>,
    ) -> impl Stream<Item = EventMessage> + Send + 'static {
        let (replay, rx, from_seq) = {
            let inner = self.inner.lock().expect("event hub lock");
            let from_seq = from_seq.unwrap_or(inner.log.len() as u64);
            let replay: VecDeque<_> = inner.log.get(from_seq as usize..).map(|s| s.iter().cloned().collect()).unwrap_or_default();
            (replay, inner.tx.subscribe(), from_seq)
        };
        let state = (Arc::clone(self), rx, replay, from_seq);
        let all = stream::unfold(state, |(hub, mut rx, mut buf, mut next)| async move {
            loop {
                if let Some(msg) = buf.pop_front() {
                    if msg.seq < next {
                        continue;
                    }
                    next = msg.seq + 1;
                    return Some((msg, (hub, rx, buf, next)));
                }
                match rx.recv().await {
                    Ok(msg) => buf.push_back(msg),
                    Err(RecvError::Lagged(_)) => buf.extend(hub.since(next)),
                    Err(RecvError::Closed) => return None,
                }
            }
        });
        futures::StreamExt::filter(all, move |m| {
            let keep = session_id.as_ref().is_none_or(|s| *s == m.session_id);
            async move { keep }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bgate_core::audit_trace::Trace;
    use futures::StreamExt;

    fn records(n: usize) -> Vec<TraceRecord> {
        let mut t = Trace::in_memory();
        for i in 0..n {
            t.append(i as u64, if i % 2 == 0 { "a" } else { "b" }, TraceKind::StepVerdict, serde_json::json!({"i": i})).unwrap();
        }
        t.records().to_vec()
    }

    #[tokio::test]
    async fn replay_then_live_without_gaps() {
        let hub = Arc::new(EventHub::new(2));
        let recs = records(10);
        for r in &recs[..4] {
            hub.publish(r);
        }
        let s = hub.subscribe(Some(1), None);
        // Overflow the channel so the subscriber has to catch up from the log.
        for r in &recs[4..] {
            hub.publish(r);
        }
        let got: Vec<u64> = s.take(9).map(|m| m.seq).collect().await;
        assert_eq!(got, (1..10).collect::<Vec<_>>());
    }

    #[tokio::test]
    async fn session_filter() {
        let hub = Arc::new(EventHub::default());
        for r in records(6) {
            hub.publish(&r);
        }
        let got: Vec<String> = hub.subscribe(Some(0), Some("b".into())).take(3).map(|m| m.session_id).collect().await;
        assert_eq!(got, vec!["b"; 3]);
        assert!(hub.since(100).is_empty());
        let live = hub.subscribe(None, None);
        let r = records(1).remove(0);
        hub.publish(&r);
        let got: Vec<u64> = live.take(1).map(|m| m.seq).collect().await;
        assert_eq!(got, vec![6]);
    }
}
