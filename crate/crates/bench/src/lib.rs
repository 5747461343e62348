//! Benchmark fixtures shared by the bench targets.

use bigjump_core::presets;
use bigjump_core::{ModelBundle, RareSet};

/// The weak-dependence preset with its reference set.
pub fn weak() -> (ModelBundle, RareSet) {
    (presets::theorem31_bundle(), presets::reference_set())
}

/// The comonotone preset with its reference set.
pub fn strong() -> (ModelBundle, RareSet) {
    (presets::comonotone_bundle(), presets::reference_set())
}
