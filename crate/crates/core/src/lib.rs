//! Hyperplane search trees over points in general position.
//!
//! A tree splits its points with the hyperplane through `d` of them chosen at
//! random, then recurses on each open side. The crate builds such trees with
//! exact rational predicates, enumerates split distributions, counts
//! `k`-facets, and evaluates the analytic depth and height bounds.

pub mod bounds;
pub mod error;
pub mod facets;
pub mod geom;
pub mod harness;
pub mod points;
pub mod rng;
pub mod tree;

pub use bounds::{BoundResult, LogBase, SplitLaw};
pub use error::{Error, Result};
pub use geom::{
    classify_split, orientation, Hyperplane, Orientation, Point, PointSet, Split, DEFAULT_BUDGET,
};
pub use harness::{ExperimentConfig, Mode, Source, TrialRecord};
pub use points::{moment_curve, random_pointset, RandomModel};
pub use rng::{mix, SplitMix64};
pub use tree::{build_fringe_tree, build_hst, build_moment_hst, HstTree, TreeStats};
