//! Conformal footprint layouts: skeleton-guided decomposition of building
//! footprints, Schwarz–Christoffel disk maps per subregion, distance-level
//! ribbons with facade sectors, and temporal encodings rendered as lenses.

use std::sync::atomic::{AtomicUsize, Ordering};

static WARNINGS: AtomicUsize = AtomicUsize::new(0);

/// Logs a warning and counts it.
macro_rules! lens_warn {
    ($($arg:tt)*) => {{
        $crate::note_warning();
        log::warn!($($arg)*);
    }};
}
pub(crate) use lens_warn;

#[doc(hidden)]
pub fn note_warning() {
    WARNINGS.fetch_add(1, Ordering::Relaxed);
}

/// Warnings logged by this process so far.
pub fn warning_count() -> usize {
    WARNINGS.load(Ordering::Relaxed)
}

pub mod encoding;
pub mod error;
pub mod geometry;
pub mod io;
pub mod partition;
pub mod pipeline;
pub mod ribbon;
pub mod scmap;
pub mod skeleton;
mod svg;

pub use error::{ErrorClass, LensError, Result};
