//! Collision-free 3D realisations of flexible planar frameworks.
//!
//! A moving graph assigns every vertex a planar trajectory along which all
//! edge lengths stay constant. Lifting each edge to its own integer height
//! (an L-model) turns the planar motion into a physical linkage, provided no
//! vertex ever passes through an edge at a height between the edges it is
//! attached to.
//!
//! The pipeline:
//!
//! 1. [`motion`]: load or build a [`MovingGraph`] from closed-form trajectories.
//! 2. [`collide`]: find every vertex/edge pair that becomes collinear-and-inside.
//! 3. [`cgraph`]: turn those pairs into the [`CollisionGraph`] on edges.
//! 4. [`plan`]: split the collision graph, assign heights, verify, or decide
//!    existence exactly.
//!
//! [`families`] builds the standard flexible families used throughout.
//!
//! ```
//! use lmodel::{collide, families, plan, CollisionGraph};
//!
//! let moving = families::dixon1(&families::Dixon1Params::uniform(2, 2)).unwrap();
//! let detection = collide::detect_all(&moving, &Default::default()).unwrap();
//! let pairs = detection.pairs(moving.graph());
//! let c = CollisionGraph::build(moving.graph(), &pairs).unwrap();
//! let plan::PartitionDecision::Found(partition) = plan::decide_partition(&c).unwrap() else {
//!     unreachable!()
//! };
//! let heights = plan::assign_heights(moving.graph(), &pairs, &partition).unwrap();
//! assert!(plan::verify_collision_free(moving.graph(), &pairs, &heights).unwrap().collision_free);
//! ```

pub mod cgraph;
pub mod collide;
pub mod expr;
pub mod families;
pub mod motion;
pub mod plan;

pub use cgraph::CollisionGraph;
pub use collide::{CollisionPair, DetectionConfig};
pub use expr::MotionExpr;
pub use motion::{EdgeId, Graph, Interval, MovingGraph, VertexId};
pub use plan::{Existence, HeightAssignment, Partition};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/moving-graphs.md")]
    mod moving_graphs {}
    #[doc = include_str!("../../../book/src/families.md")]
    mod families {}
    #[doc = include_str!("../../../book/src/collisions.md")]
    mod collisions {}
    #[doc = include_str!("../../../book/src/collision-graph.md")]
    mod collision_graph {}
    #[doc = include_str!("../../../book/src/heights.md")]
    mod heights {}
    #[doc = include_str!("../../../book/src/existence.md")]
    mod existence {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
