//! Spontaneous excitation and de-excitation rates of a multilevel atom held
//! near a perfectly conducting plane, for inertial and uniformly accelerated
//! trajectories, split into vacuum-fluctuation and radiation-reaction
//! contributions.

pub mod atom;
pub mod cli;
pub mod correlations;
pub mod error;
pub mod oracle;
pub mod rates;
pub mod special;

pub use atom::{AtomSpec, DipoleElement, Level, Transition, TwoLevelState};
pub use correlations::{Branch, Kinematics, Trajectory};
pub use error::{Error, Result};
pub use rates::{
    nonthermal_crossing, rate_accelerated, rate_inertial, unbounded_rate, Channel, CrossingResult,
    BoundaryTotal, Mechanism, Part, RateBreakdown, RateEntry, RateModel,
};
pub use special::{f_accel, f_x, f_y, f_z, EvalPolicy, Pair, ReducedPoint};
