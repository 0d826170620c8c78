use std::sync::atomic::{AtomicU64, Ordering};

/// Counts model evaluations made on behalf of an explanation method.
///
/// A "backward" is any backward-equivalent sweep: a gradient pass or an LRP
/// relevance pass.
#[derive(Debug, Default)]
pub struct PassCounter {
    forwards: AtomicU64,
    backwards: AtomicU64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PassCount {
    pub forwards: u64,
    pub backwards: u64,
}

impl PassCount {
    pub fn total(&self) -> u64 {
        self.forwards + self.backwards
    }
}

impl std::ops::Sub for PassCount {
    type Output = PassCount;

    fn sub(self, rhs: PassCount) -> PassCount {
        PassCount {
            forwards: self.forwards - rhs.forwards,
            backwards: self.backwards - rhs.backwards,
        }
    }
}

impl PassCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_forward(&self) {
        self.forwards.fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_backward(&self) {
        self.backwards.fetch_add(1, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> PassCount {
        PassCount {
            forwards: self.forwards.load(Ordering::Relaxed),
            backwards: self.backwards.load(Ordering::Relaxed),
        }
    }
}
