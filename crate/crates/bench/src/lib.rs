//! Shared fixtures for the benchmark suite.

use gridapprox::error::Result;
use gridapprox::hypotheses::{label_grid, Grid, Labeling};
use gridapprox::measures::{sample, Measure1D};
use gridapprox::sets::TargetSet;
use gridapprox::Point;

/// Uniform grid over [-1.5, 1.5]^2 labeled by the unit disk.
pub fn disk_fixture(m: usize, seed: u64) -> Result<(Grid, Labeling, TargetSet)> {
    let mu = Measure1D::uniform(-1.5, 1.5)?;
    let a = sample(&mu, m, seed)?;
    let b = sample(&mu, m, seed ^ 0x9e37_79b9_7f4a_7c15)?;
    let grid = Grid::new(a.values, b.values)?;
    let target = TargetSet::disk(Point::new(0.0, 0.0), 1.0)?;
    let labeling = label_grid(&target, &grid);
    Ok((grid, labeling, target))
}
