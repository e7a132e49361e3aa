//! Pattern-aware graph mining.
//!
//! A query [`Pattern`] is compiled into an [`ExplorationPlan`] (symmetry
//! breaking, core extraction, matching orders) which drives the matcher over a
//! degree-ordered [`DataGraph`]. Each canonical match is produced exactly once,
//! so no per-match isomorphism or canonicality test is needed.
//!
//! ```
//! use patmine::{apps, DataGraph, MatchConfig};
//!
//! let k4 = DataGraph::from_edges([(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)], None).unwrap();
//! let triangles = apps::clique_count(3, &k4, &MatchConfig::default()).unwrap();
//! assert_eq!(triangles, 4);
//! ```

pub mod aggregation;
pub mod apps;
mod canon;
pub mod error;
pub mod graph;
pub mod matcher;
pub mod pattern;
pub mod plan;
pub mod setops;

pub use aggregation::{Aggregator, Bitmap, BitmapKind, DomainMap};
pub use error::{Error, GraphError, PatternError};
pub use graph::DataGraph;
pub use matcher::{Control, Match, MatchConfig, MatchMode, MatchStats, Traversal};
pub use pattern::{CanonicalCode, EdgeKind, Label, Pattern};
pub use plan::{ExplorationPlan, MatchingOrder, PartialOrder};
