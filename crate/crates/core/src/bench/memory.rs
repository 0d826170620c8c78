use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

pub const SAMPLE_PERIOD: Duration = Duration::from_millis(100);
const PAGE_SIZE: u64 = 4096;

/// Resident set size of this process, if the platform exposes it.
pub fn resident_bytes() -> Option<u64> {
    let statm = std::fs::read_to_string("/proc/self/statm").ok()?;
    let pages: u64 = statm.split_whitespace().nth(1)?.parse().ok()?;
    Some(pages * PAGE_SIZE)
}

/// Samples RSS on a background thread and reports the peak growth over the
/// value at start.
pub struct PeakRssSampler {
    baseline: u64,
    peak: Arc<AtomicU64>,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl PeakRssSampler {
    pub fn start() -> Self {
        let baseline = resident_bytes().unwrap_or(0);
        let peak = Arc::new(AtomicU64::new(baseline));
        let stop = Arc::new(AtomicBool::new(false));
        let handle = {
            let (peak, stop) = (peak.clone(), stop.clone());
            std::thread::spawn(move || {
                while !stop.load(Ordering::Relaxed) {
                    if let Some(rss) = resident_bytes() {
                        peak.fetch_max(rss, Ordering::Relaxed);
                    }
                    std::thread::park_timeout(SAMPLE_PERIOD);
                }
            })
        };
        PeakRssSampler {
            baseline,
            peak,
            stop,
            handle: Some(handle),
        }
    }

    /// Stops sampling and returns the peak delta in bytes.
    pub fn finish(mut self) -> u64 {
        self.halt();
        if let Some(rss) = resident_bytes() {
            self.peak.fetch_max(rss, Ordering::Relaxed);
        }
        self.peak.load(Ordering::Relaxed).saturating_sub(self.baseline)
    }

    fn halt(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(handle) = self.handle.take() {
            handle.thread().unpark();
            let _ = handle.join();
        }
    }
}

impl Drop for PeakRssSampler {
    fn drop(&mut self) {
        self.halt();
    }
}
