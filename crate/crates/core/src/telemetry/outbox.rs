use std::collections::VecDeque;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

/// Bounded outbound line queue for one connection. When full, the oldest
/// line is dropped so producers never block.
#[derive(Debug)]
pub struct Outbox {
    inner: Mutex<State>,
    ready: Condvar,
    capacity: usize,
}

#[derive(Debug, Default)]
struct State {
    lines: VecDeque<String>,
    dropped: u64,
    closed: bool,
}

impl Outbox {
    pub fn new(capacity: usize) -> Self {
        Self {
            inner: Mutex::new(State::default()),
            ready: Condvar::new(),
            capacity: capacity.max(1),
        }
    }

    /// Returns false once the outbox is closed.
    pub fn push(&self, line: String) -> bool {
        let mut s = self.inner.lock().unwrap();
        if s.closed {
            return false;
        }
        if s.lines.len() == self.capacity {
            s.lines.pop_front();
            s.dropped += 1;
        }
        s.lines.push_back(line);
        self.ready.notify_one();
        true
    }

    /// Blocks until a line is available or the outbox is closed and drained.
    pub fn pop(&self) -> Option<String> {
        let mut s = self.inner.lock().unwrap();
        loop {
            if let Some(line) = s.lines.pop_front() {
                return Some(line);
            }
            if s.closed {
                return None;
            }
            s = self.ready.wait(s).unwrap();
        }
    }

    pub fn pop_timeout(&self, timeout: Duration) -> Option<String> {
        let s = self.inner.lock().unwrap();
        let (mut s, _) = self
            .ready
            .wait_timeout_while(s, timeout, |s| s.lines.is_empty() && !s.closed)
            .unwrap();
        s.lines.pop_front()
    }

    pub fn dropped(&self) -> u64 {
        self.inner.lock().unwrap().dropped
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn close(&self) {
        self.inner.lock().unwrap().closed = true;
        self.ready.notify_all();
    }

    pub fn is_closed(&self) -> bool {
        self.inner.lock().unwrap().closed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;
    use std::thread;

    #[test]
    fn drops_oldest_when_full() {
        let q = Outbox::new(3);
        for i in 0..5 {
            assert!(q.push(i.to_string()));
        }
        assert_eq!(q.dropped(), 2);
        let got: Vec<_> = std::iter::from_fn(|| q.pop_timeout(Duration::ZERO)).collect();
        assert_eq!(got, ["2", "3", "4"]);
    }

    #[test]
    fn close_drains_then_ends() {
        let q = Outbox::new(4);
        q.push("a".into());
        q.close();
        assert!(!q.push("b".into()));
        assert_eq!(q.pop().as_deref(), Some("a"));
        assert_eq!(q.pop(), None);
    }

    #[test]
    fn producer_never_blocks_on_idle_consumer() {
        let q = Arc::new(Outbox::new(256));
        let producer = {
            let q = q.clone();
            thread::spawn(move || {
                for i in 0..10_000 {
                    q.push(i.to_string());
                }
            })
        };
        producer.join().unwrap();
        assert_eq!(q.len(), 256);
        assert_eq!(q.dropped(), 10_000 - 256);
        // freshest lines survive, in order
        assert_eq!(q.pop().as_deref(), Some("9744"));
    }
}
