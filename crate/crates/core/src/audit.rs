//! Allocation audit for dense buffers.
//!
//! Every dense buffer created through [`crate::DenseMatrix`] reports its
//! element count here. The process-wide high-water mark lets tests assert
//! that a code path never materializes an `m x n` dense intermediate.
//! The counter is global, so audited code must not run concurrently with
//! unrelated dense work.

use core::sync::atomic::{AtomicUsize, Ordering};

static PEAK: AtomicUsize = AtomicUsize::new(0);

#[inline]
pub(crate) fn record(elements: usize) {
    PEAK.fetch_max(elements, Ordering::Relaxed);
}

/// Resets the high-water mark to zero.
pub fn reset() {
    PEAK.store(0, Ordering::Relaxed);
}

/// Largest dense buffer (in elements) created since the last [`reset`].
pub fn peak() -> usize {
    PEAK.load(Ordering::Relaxed)
}
