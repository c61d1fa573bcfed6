//! Table-based value iteration, the ground truth the peak solvers are
//! checked against and the baseline they are benchmarked against.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mdp::{ActionId, Environment, MdpInstance, StateId};

/// Bellman residual used when the caller has no opinion.
pub const DEFAULT_RESIDUAL: f64 = 1e-9;

/// Dense value function indexed by [`StateId`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValueTable {
    pub values: Vec<f64>,
    pub gamma: f64,
    /// Max-norm change of the last sweep (0 for tables built in closed form).
    pub residual: f64,
    /// Number of synchronous sweeps performed.
    pub sweeps: usize,
}

impl ValueTable {
    pub fn get(&self, s: StateId) -> f64 {
        self.values[s.0]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs_diff(&self, other: &ValueTable) -> f64 {
        max_abs_diff(&self.values, &other.values)
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "tables of different sizes");
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Sweep cap: ten times the a-priori sweep count for a contraction at `gamma`.
pub fn sweep_cap(residual: f64, gamma: f64) -> usize {
    let bound = ((residual * (1.0 - gamma)).ln() / gamma.ln()).ceil();
    10 * (bound.max(1.0) as usize)
}

/// One synchronous backup `V'(s) = R(s) + γ·max_{s'} V(s')` into `next`,
/// returning the max-norm change.
fn sweep<E: Environment>(
    env: &E,
    rewards: &[f64],
    gamma: f64,
    current: &[f64],
    next: &mut [f64],
) -> f64 {
    let mut change: f64 = 0.0;
    for (s, slot) in next.iter_mut().enumerate() {
        let best = env
            .successors(StateId(s))
            .iter()
            .map(|&(_, n)| current[n.0])
            .fold(0.0, f64::max);
        let v = rewards[s] + gamma * best;
        change = change.max((v - current[s]).abs());
        *slot = v;
    }
    change
}

/// Runs Jacobi value iteration from `V ≡ 0` until the max-norm change of a
/// sweep drops below `residual`.
pub fn value_iteration<E: Environment>(
    instance: &MdpInstance<E>,
    residual: f64,
) -> Result<ValueTable> {
    if !(residual.is_finite() && residual > 0.0) {
        return Err(Error::InvalidResidual(residual));
    }
    let env = instance.env();
    let gamma = instance.gamma();
    let n = env.state_count();
    let mut rewards = vec![0.0; n];
    for r in instance.rewards() {
        rewards[r.state.0] = r.value;
    }

    let cap = sweep_cap(residual, gamma);
    let mut current = vec![0.0; n];
    let mut next = vec![0.0; n];
    for sweeps in 1..=cap {
        let change = sweep(env, &rewards, gamma, &current, &mut next);
        std::mem::swap(&mut current, &mut next);
        if change < residual {
            return Ok(ValueTable {
                values: current,
                gamma,
                residual: change,
                sweeps,
            });
        }
    }
    Err(Error::NotConverged { residual, cap })
}

/// Max-norm distance between `table` and one Bellman backup of it.
pub fn bellman_residual<E: Environment>(table: &ValueTable, instance: &MdpInstance<E>) -> f64 {
    let env = instance.env();
    let n = env.state_count();
    let mut rewards = vec![0.0; n];
    for r in instance.rewards() {
        rewards[r.state.0] = r.value;
    }
    let mut backed = vec![0.0; n];
    sweep(env, &rewards, instance.gamma(), &table.values, &mut backed)
}

/// Action leading to the highest-valued successor; ties go to the lowest
/// action id.
pub fn greedy_policy<E: Environment>(table: &ValueTable, env: &E, s: StateId) -> Result<ActionId> {
    greedy_step(table, env, s).map(|(a, _)| a)
}

/// Like [`greedy_policy`] but also returns the successor state.
pub fn greedy_step<E: Environment>(
    table: &ValueTable,
    env: &E,
    s: StateId,
) -> Result<(ActionId, StateId)> {
    let mut best: Option<(ActionId, StateId, f64)> = None;
    for (a, n) in env.neighbors(s)? {
        let v = table.get(n);
        if best.is_none_or(|(_, _, bv)| v > bv) {
            best = Some((a, n, v));
        }
    }
    best.map(|(a, n, _)| (a, n))
        .ok_or(Error::DeadEnd { state: s.0 })
}
