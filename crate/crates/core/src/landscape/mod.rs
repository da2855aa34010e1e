//! Accuracy oracles over architecture spaces and the statistics built on them.

mod distribution;
mod path;
mod synthetic;
mod table;

pub use distribution::{
    diff_distributions, neighborhood_histogram, refs_in_band, BinSpec, Histogram, NeighborhoodHistogram,
    RefSelector, RANDOM_TIER,
};
pub use path::{accuracy_path, barrier_value, BarrierReport};
pub use synthetic::{LandscapeSpec, SyntheticLandscape};
pub use table::{load_table, AccuracyEntry, AccuracyTable, TableFormat};

use crate::arch_space::{Architecture, SpaceSpec};
use crate::error::Result;

/// Maps an architecture and dataset tag to a test accuracy in percent.
pub trait AccuracyOracle: Sync {
    fn space(&self) -> SpaceSpec;

    fn accuracy(&self, arch: &Architecture, dataset: &str) -> Result<f64>;

    /// Every architecture the oracle knows with its accuracy, sorted by architecture.
    fn entries(&self, dataset: &str) -> Result<Vec<(Architecture, f64)>>;
}

impl<T: AccuracyOracle + ?Sized> AccuracyOracle for &T {
    fn space(&self) -> SpaceSpec {
        (**self).space()
    }

    fn accuracy(&self, arch: &Architecture, dataset: &str) -> Result<f64> {
        (**self).accuracy(arch, dataset)
    }

    fn entries(&self, dataset: &str) -> Result<Vec<(Architecture, f64)>> {
        (**self).entries(dataset)
    }
}
