//! The transported scalar: grids, initial data, mollification, blobs and
//! norm tracking.

mod blobs;
mod grid;
pub(crate) mod io;
mod mollify;
mod shapes;

pub use blobs::{blob_stats, load_blobs_csv, save_blobs_csv, to_blobs, VortexBlob};
pub use grid::{GridGeometry, VorticityGrid};
pub use mollify::{bump_profile, mollify, MollifierSpec};
pub use shapes::{make_gaussian, make_indicator, make_indicator_sampled, Shape};

use crate::complexfield::FieldStats;

/// Stats of either representation.
pub fn stats(data: &VorticityGrid) -> FieldStats {
    data.stats()
}
