//! Grid-sampled approximation of planar set families.
//!
//! The library is organized around one pipeline: sample coordinate sequences
//! from 1-D measures ([`measures`]), form the product grid and label it with a
//! target set ([`sets`], [`hypotheses`]), construct a definable approximant
//! from the labeling alone (convex hull of the 1-labeled points, or the
//! auxiliary-grid union of half-open rectangles), and measure how well the
//! approximant tracks the target both on the grid and under the product
//! measure ([`losses`]). The combinatorial side (VC dimension, slicewise
//! traces, sample-size bounds) lives in [`vcdim`], and [`experiments`] wires
//! everything into reproducible randomized trials with CSV/SVG output.

pub mod error;
pub mod experiments;
pub mod geom;
pub mod hypotheses;
pub mod losses;
pub mod measures;
pub mod sets;
pub mod vcdim;

pub use error::{Error, Result};
pub use experiments::{ExperimentConfig, RunSummary, TrialRecord};
pub use geom::Point;
pub use hypotheses::{Grid, Hypothesis, Labeling};
pub use losses::{LossReport, Region, Verdict};
pub use measures::{Measure1D, Sample};
pub use sets::{Axis, HalfOpenRect, HalfOpenRectUnion, PointCloud, TargetSet};
pub use vcdim::FiniteFamily;
