//! Following the optimal policy from a peak list, evaluating only the
//! neighbours of the states actually visited.

use crate::error::{Error, Result};
use crate::mdp::{ActionId, Discount, Environment, StateId};
use crate::oracle::ValueTable;
use crate::peak::PeakList;
use crate::solver::value_on_demand;

/// Best successor of a state under the on-demand value function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaxNeighbor {
    pub action: ActionId,
    pub state: StateId,
    pub value: f64,
}

/// Evaluates every successor of `s` and returns the best one; ties go to the
/// lowest action id.
pub fn find_max_neighbor<E: Environment>(
    peaks: &PeakList,
    s: StateId,
    env: &E,
    discount: Discount,
) -> Result<MaxNeighbor> {
    let mut best: Option<MaxNeighbor> = None;
    for (action, state) in env.neighbors(s)? {
        let value = value_on_demand(peaks, state, env, discount)?;
        if best.is_none_or(|b| value > b.value) {
            best = Some(MaxNeighbor {
                action,
                state,
                value,
            });
        }
    }
    best.ok_or(Error::DeadEnd { state: s.0 })
}

/// One executed action: where it led and the value there.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub action: ActionId,
    pub state: StateId,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub start: StateId,
    pub steps: Vec<Step>,
    /// Every state whose value was evaluated, in evaluation order.
    pub evaluated: Vec<StateId>,
}

impl Trajectory {
    /// Distinct states whose values were computed along the way.
    pub fn distinct_evaluated(&self) -> usize {
        let mut seen = self.evaluated.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        std::iter::once(self.start).chain(self.steps.iter().map(|s| s.state))
    }
}

/// Raised when the walk reaches a state with no successors.
#[derive(Debug, Clone, PartialEq)]
pub struct FollowError {
    pub error: Error,
    pub partial: Trajectory,
}

impl std::fmt::Display for FollowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} after {} steps", self.error, self.partial.steps.len())
    }
}

impl std::error::Error for FollowError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Walks `steps` actions from `initial`, each time moving to the best
/// neighbour. Work and memory are linear in `steps` and independent of the
/// number of states.
pub fn follow_local_policy<E: Environment>(
    peaks: &PeakList,
    initial: StateId,
    steps: usize,
    env: &E,
    discount: Discount,
) -> std::result::Result<Trajectory, FollowError> {
    let mut trajectory = Trajectory {
        start: initial,
        steps: Vec::with_capacity(steps),
        evaluated: Vec::new(),
    };
    if let Err(error) = env.check_state(initial) {
        return Err(FollowError {
            error,
            partial: trajectory,
        });
    }

    let mut current = initial;
    for _ in 0..steps {
        let neighbors = env.successors(current);
        if neighbors.is_empty() {
            return Err(FollowError {
                error: Error::DeadEnd { state: current.0 },
                partial: trajectory,
            });
        }
        let mut best: Option<Step> = None;
        for (action, state) in neighbors {
            let value = peaks
                .iter()
                .map(|p| p.value_at(env, discount, state))
                .fold(0.0, f64::max);
            trajectory.evaluated.push(state);
            if best.is_none_or(|b| value > b.value) {
                best = Some(Step {
                    action,
                    state,
                    value,
                });
            }
        }
        let step = best.expect("non-empty neighbour list");
        trajectory.steps.push(step);
        current = step.state;
    }
    Ok(trajectory)
}

/// Evaluates every state on demand. This is the one deliberately
/// `O(|S|)` operation on a peak list.
pub fn reconstruct_value_function<E: Environment>(
    peaks: &PeakList,
    env: &E,
    discount: Discount,
) -> ValueTable {
    let values = (0..env.state_count())
        .map(|s| {
            peaks
                .iter()
                .map(|p| p.value_at(env, discount, StateId(s)))
                .fold(0.0, f64::max)
        })
        .collect();
    ValueTable {
        values,
        gamma: discount.get(),
        residual: 0.0,
        sweeps: 0,
    }
}
