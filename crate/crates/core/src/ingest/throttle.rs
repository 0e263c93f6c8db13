use std::time::Duration;

use tokio::sync::Mutex;
use tokio::time::Instant;

/// Token bucket shared by concurrent requesters.
#[derive(Debug)]
pub struct TokenBucket {
    capacity: f64,
    refill_per_sec: f64,
    state: Mutex<BucketState>,
}

#[derive(Debug)]
struct BucketState {
    tokens: f64,
    last: Instant,
    /// Server-imposed pause (`backoff` field or HTTP 429).
    hold_until: Option<Instant>,
}

impl TokenBucket {
    pub fn per_minute(requests: u32) -> Self {
        Self::new(requests.max(1) as f64, requests.max(1) as f64 / 60.0)
    }

    pub fn new(capacity: f64, refill_per_sec: f64) -> Self {
        assert!(capacity >= 1.0 && refill_per_sec > 0.0);
        Self {
            capacity,
            refill_per_sec,
            state: Mutex::new(BucketState {
                tokens: capacity,
                last: Instant::now(),
                hold_until: None,
            }),
        }
    }

    /// Waits until a token is available and takes it.
    pub async fn acquire(&self) {
        loop {
            let wait = {
                let mut st = self.state.lock().await;
                let now = Instant::now();
                if let Some(until) = st.hold_until {
                    if now < until {
                        Some(until - now)
                    } else {
                        st.hold_until = None;
                        continue;
                    }
                } else {
                    let elapsed = now.duration_since(st.last).as_secs_f64();
                    st.tokens = (st.tokens + elapsed * self.refill_per_sec).min(self.capacity);
                    st.last = now;
                    if st.tokens >= 1.0 {
                        st.tokens -= 1.0;
                        None
                    } else {
                        Some(Duration::from_secs_f64(
                            (1.0 - st.tokens) / self.refill_per_sec,
                        ))
                    }
                }
            };
            match wait {
                None => return,
                Some(d) => tokio::time::sleep(d).await,
            }
        }
    }

    /// Blocks all acquirers for `pause`.
    pub async fn hold(&self, pause: Duration) {
        let mut st = self.state.lock().await;
        let until = Instant::now() + pause;
        st.hold_until = Some(st.hold_until.map_or(until, |u| u.max(until)));
    }
}
