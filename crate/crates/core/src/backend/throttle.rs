//! In-flight bounding and token-bucket rate limiting for remote backends.

use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

/// Counting semaphore over Mutex + Condvar.
pub(crate) struct Semaphore {
    permits: Mutex<usize>,
    available: Condvar,
}

impl Semaphore {
    pub fn new(permits: usize) -> Self {
        Self {
            permits: Mutex::new(permits.max(1)),
            available: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> SemaphoreGuard<'_> {
        let mut permits = self.permits.lock().expect("semaphore poisoned");
        while *permits == 0 {
            permits = self.available.wait(permits).expect("semaphore poisoned");
        }
        *permits -= 1;
        SemaphoreGuard { semaphore: self }
    }
}

pub(crate) struct SemaphoreGuard<'a> {
    semaphore: &'a Semaphore,
}

impl Drop for SemaphoreGuard<'_> {
    fn drop(&mut self) {
        let mut permits = self.semaphore.permits.lock().expect("semaphore poisoned");
        *permits += 1;
        self.semaphore.available.notify_one();
    }
}

struct BucketState {
    tokens: f64,
    refilled: Instant,
}

/// Token bucket: capacity one second's worth of tokens, refilled continuously.
pub(crate) struct TokenBucket {
    rate: f64,
    capacity: f64,
    state: Mutex<BucketState>,
}

impl TokenBucket {
    pub fn new(requests_per_second: f64) -> Self {
        let rate = requests_per_second.max(0.001);
        Self {
            rate,
            capacity: rate.max(1.0),
            state: Mutex::new(BucketState {
                tokens: rate.max(1.0),
                refilled: Instant::now(),
            }),
        }
    }

    /// Block until one token is available, then consume it.
    pub fn take(&self) {
        loop {
            let wait = {
                let mut s = self.state.lock().expect("bucket poisoned");
                let now = Instant::now();
                let elapsed = now.duration_since(s.refilled).as_secs_f64();
                s.tokens = (s.tokens + elapsed * self.rate).min(self.capacity);
                s.refilled = now;
                if s.tokens >= 1.0 {
                    s.tokens -= 1.0;
                    return;
                }
                (1.0 - s.tokens) / self.rate
            };
            std::thread::sleep(Duration::from_secs_f64(wait.min(0.25)));
        }
    }
}

/// Optional in-flight bound plus optional rate limit.
pub(crate) struct Throttle {
    semaphore: Option<Semaphore>,
    bucket: Option<TokenBucket>,
}

impl Throttle {
    pub fn new(max_in_flight: Option<usize>, requests_per_second: Option<f64>) -> Self {
        Self {
            semaphore: max_in_flight.map(Semaphore::new),
            bucket: requests_per_second.map(TokenBucket::new),
        }
    }

    /// Wait for capacity; the returned guard releases the in-flight slot.
    pub fn admit(&self) -> Option<SemaphoreGuard<'_>> {
        let guard = self.semaphore.as_ref().map(|s| s.acquire());
        if let Some(bucket) = &self.bucket {
            bucket.take();
        }
        guard
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    #[test]
    fn semaphore_bounds_concurrency() {
        let sem = Arc::new(Semaphore::new(2));
        let live = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let sem = sem.clone();
                let live = live.clone();
                let peak = peak.clone();
                std::thread::spawn(move || {
                    let _guard = sem.acquire();
                    let now = live.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    std::thread::sleep(Duration::from_millis(5));
                    live.fetch_sub(1, Ordering::SeqCst);
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }

    #[test]
    fn token_bucket_paces_requests() {
        let bucket = TokenBucket::new(200.0);
        let start = Instant::now();
        // Capacity covers the first 200; the rest must wait for refill.
        for _ in 0..220 {
            bucket.take();
        }
        assert!(start.elapsed() >= Duration::from_millis(80));
    }
}
