//! Closed-loop coefficient re-optimization and visitation-based
//! re-engineering.

mod reoptimize;
mod visitation;

pub use reoptimize::{
    fitness_closed, generation_seeds, reoptimize, ClosedLoopConfig, ClosedLoopResult, CurvePoint, SeedPolicy,
};
pub use visitation::{collect_visitation, reengineer, VisitationProfile};
