//! Exact planning for deterministic, continuous MDPs with sparse positive
//! state rewards.
//!
//! The solver returns an ordered list of value-function peaks instead of a
//! value table. Its time and memory depend on the number of reward sources
//! and actions only; any state's value is recovered on demand from the peaks,
//! and the optimal policy can be followed by evaluating just the neighbours of
//! the states visited.
//!
//! ```
//! use memoryless_core::{solve_memoryless, value_on_demand, MdpInstance};
//!
//! let instance = MdpInstance::grid(1_000_000, 1_000_000, 0.9, &[(4, 2, 10.0)]).unwrap();
//! let peaks = solve_memoryless(&instance).unwrap();
//! let s = instance.env().state_at(4, 5).unwrap();
//! let v = value_on_demand(&peaks, s, instance.env(), instance.discount()).unwrap();
//! assert!((v - 10.0 / 0.19 * 0.9f64.powi(3)).abs() < 1e-9);
//! ```

pub mod error;
pub mod io;
pub mod mdp;
pub mod oracle;
pub mod peak;
pub mod policy;
pub mod solver;

pub use error::{Error, Result};
pub use mdp::{
    ActionId, Direction, Discount, Environment, GraphWorld, GridWorld, MdpInstance, Neighbors,
    RewardSource, StateId,
};
pub use oracle::{greedy_policy, value_iteration, ValueTable, DEFAULT_RESIDUAL};
pub use peak::{CandidateSet, Peak, PeakKind, PeakList, PeakSlot};
pub use policy::{
    find_max_neighbor, follow_local_policy, reconstruct_value_function, FollowError, MaxNeighbor,
    Step, Trajectory,
};
pub use solver::{
    compute_deltas, precompute_peaks, prune_invalid_peaks, remove_affected_peaks, solve_memoized,
    solve_memoryless, solve_memoryless_with_stats, value_on_demand, SolveStats,
};
