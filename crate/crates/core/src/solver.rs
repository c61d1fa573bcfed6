//! Peak selection: builds the ordered [`PeakList`] that determines the
//! optimal value function without ever storing it.
//!
//! Each iteration of the selection loop
//!
//! 1. builds a delta candidate for every reward not yet covered,
//! 2. prunes cycle-based candidates whose cycle the selected peaks break,
//! 3. selects the best peak among the surviving candidates and the deltas,
//! 4. drops candidates that share a reward with the selection.
//!
//! Neighbour values are read through a [`ValueLookup`]. The memoryless
//! solver evaluates them from the peaks selected so far; the memoized solver
//! keeps a dense table updated after every selection. Both run the same loop
//! and produce identical peak lists.

use crate::error::Result;
use crate::mdp::{Discount, Environment, MdpInstance, StateId};
use crate::oracle::ValueTable;
use crate::peak::{CandidateSet, Peak, PeakList, PeakSlot};

/// Value of `s` under the peaks selected so far: the best discounted
/// contribution of any peak, or 0 when no peak has been selected.
///
/// Linear in the number of peaks; touches no per-state storage.
pub fn value_on_demand<E: Environment>(
    peaks: &PeakList,
    s: StateId,
    env: &E,
    discount: Discount,
) -> Result<f64> {
    env.check_state(s)?;
    Ok(on_demand(peaks, s, env, discount))
}

#[inline]
fn on_demand<E: Environment>(peaks: &PeakList, s: StateId, env: &E, discount: Discount) -> f64 {
    peaks
        .iter()
        .map(|p| p.value_at(env, discount, s))
        .fold(0.0, f64::max)
}

/// Source of intermediate state values during selection.
pub trait ValueLookup {
    fn value(&self, processed: &PeakList, s: StateId) -> f64;

    /// Called once a peak has been appended to the processed list.
    fn record(&mut self, _peak: &Peak) {}
}

/// Evaluates every lookup from the processed peaks.
pub struct OnDemand<'a, E> {
    env: &'a E,
    discount: Discount,
}

impl<'a, E: Environment> OnDemand<'a, E> {
    pub fn new(env: &'a E, discount: Discount) -> Self {
        Self { env, discount }
    }
}

impl<E: Environment> ValueLookup for OnDemand<'_, E> {
    #[inline]
    fn value(&self, processed: &PeakList, s: StateId) -> f64 {
        on_demand(processed, s, self.env, self.discount)
    }
}

/// Dense intermediate value function, max-composed after each selection.
pub struct Memoized<'a, E> {
    env: &'a E,
    discount: Discount,
    table: Vec<f64>,
}

impl<'a, E: Environment> Memoized<'a, E> {
    pub fn new(env: &'a E, discount: Discount) -> Self {
        Self {
            env,
            discount,
            table: vec![0.0; env.state_count()],
        }
    }

    pub fn into_table(self) -> Vec<f64> {
        self.table
    }
}

impl<E: Environment> ValueLookup for Memoized<'_, E> {
    #[inline]
    fn value(&self, _processed: &PeakList, s: StateId) -> f64 {
        self.table[s.0]
    }

    fn record(&mut self, peak: &Peak) {
        for (s, v) in self.table.iter_mut().enumerate() {
            *v = v.max(peak.value_at(self.env, self.discount, StateId(s)));
        }
    }
}

/// Highest looked-up value among the successors of `s` (0 if it has none).
fn best_neighbor_value<E: Environment, L: ValueLookup + ?Sized>(
    env: &E,
    lookup: &L,
    processed: &PeakList,
    s: StateId,
) -> f64 {
    env.successors(s)
        .iter()
        .map(|&(_, n)| lookup.value(processed, n))
        .fold(0.0, f64::max)
}

/// Initial candidates, computed against an all-zero value function.
///
/// One baseline peak per reward, `r / (1 − γ^c)` with `c` the minimum cycle
/// length of its state. A reward with at least one rewarded neighbour also
/// gets a combined peak with its highest-valued such neighbour (lowest id on
/// ties): `(r₁ + γr₂) / (1 − γ²)` at the reward, `(r₂ + γr₁) / (1 − γ²)` at
/// the neighbour.
pub fn precompute_peaks<E: Environment>(instance: &MdpInstance<E>) -> Result<CandidateSet> {
    let env = instance.env();
    let gamma = instance.gamma();
    let mut candidates = CandidateSet::new();

    for r in instance.rewards() {
        let cycle = instance.min_cycle_length(r.state)?;
        let value = r.value / (1.0 - instance.discount().decay(1.0, Some(cycle)));
        candidates.insert(Peak::baseline(r.id, r.state, value));
    }

    let two_cycle = 1.0 - gamma * gamma;
    for r in instance.rewards() {
        let partner = env
            .successors(r.state)
            .iter()
            .filter_map(|&(_, n)| instance.reward_at(n))
            // the pair must be able to alternate: the neighbour steps straight back
            .filter(|other| env.connected_distance(other.state, r.state) == Some(1))
            .fold(
                None::<&crate::mdp::RewardSource>,
                |best, other| match best {
                    Some(b)
                        if b.value > other.value || (b.value == other.value && b.id < other.id) =>
                    {
                        Some(b)
                    }
                    _ => Some(other),
                },
            );
        if let Some(other) = partner {
            let pri = (r.value + gamma * other.value) / two_cycle;
            let sec = (other.value + gamma * r.value) / two_cycle;
            candidates.insert(Peak::combined(
                (
                    r.id,
                    PeakSlot {
                        state: r.state,
                        value: pri,
                    },
                ),
                (
                    other.id,
                    PeakSlot {
                        state: other.state,
                        value: sec,
                    },
                ),
            ));
        }
    }
    Ok(candidates)
}

fn deltas_with<E: Environment, L: ValueLookup + ?Sized>(
    instance: &MdpInstance<E>,
    lookup: &L,
    processed: &PeakList,
    covered: &[bool],
) -> CandidateSet {
    let env = instance.env();
    let gamma = instance.gamma();
    let mut deltas = CandidateSet::new();
    for r in instance.rewards().iter().filter(|r| !covered[r.id]) {
        let here = lookup.value(processed, r.state);
        let best = best_neighbor_value(env, lookup, processed, r.state);
        let value = (r.value + gamma * best).max(here);
        deltas.insert(Peak::delta(r.id, r.state, value));
    }
    deltas
}

/// Delta candidates for the rewards in `remaining`: collect the reward once,
/// then move to the best neighbour under the processed peaks.
pub fn compute_deltas<E: Environment>(
    processed: &PeakList,
    remaining: &[usize],
    instance: &MdpInstance<E>,
) -> CandidateSet {
    let mut covered = vec![true; instance.rewards().len()];
    for &id in remaining {
        covered[id] = false;
    }
    let lookup = OnDemand::new(instance.env(), instance.discount());
    deltas_with(instance, &lookup, processed, &covered)
}

fn prune_with<E: Environment, L: ValueLookup + ?Sized>(
    env: &E,
    lookup: &L,
    candidates: &mut CandidateSet,
    processed: &PeakList,
) {
    candidates.retain(|peak| {
        std::iter::once(peak.primary)
            .chain(peak.secondary)
            .all(|slot| best_neighbor_value(env, lookup, processed, slot.state) <= peak.value())
    });
}

/// Drops candidates whose primary state has a neighbour worth strictly more
/// than the candidate: the cycle the peak assumes would be abandoned.
pub fn prune_invalid_peaks<E: Environment>(
    candidates: &mut CandidateSet,
    processed: &PeakList,
    instance: &MdpInstance<E>,
) {
    let lookup = OnDemand::new(instance.env(), instance.discount());
    prune_with(instance.env(), &lookup, candidates, processed);
}

/// Drops candidates sharing a reward with `selected`.
pub fn remove_affected_peaks(candidates: &mut CandidateSet, selected: &Peak) {
    candidates.retain(|peak| !peak.shares_reward_with(selected));
}

/// Bookkeeping sizes observed during one solve.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Largest number of peaks held at once: candidates, deltas and the
    /// selected list.
    pub max_live_peaks: usize,
    pub max_candidates: usize,
    pub max_deltas: usize,
    /// Value of each peak at the moment it was selected.
    pub selection_values: Vec<f64>,
    pub settle_passes: usize,
}

/// The selection loop, shared by both lookup backends.
pub fn select_peaks<E: Environment, L: ValueLookup>(
    instance: &MdpInstance<E>,
    lookup: &mut L,
) -> Result<(PeakList, SolveStats)> {
    let env = instance.env();
    let n_rewards = instance.rewards().len();
    let mut candidates = precompute_peaks(instance)?;
    let mut processed = PeakList::with_capacity(n_rewards);
    let mut covered = vec![false; n_rewards];
    let mut uncovered = n_rewards;
    let mut stats = SolveStats {
        max_candidates: candidates.len(),
        ..SolveStats::default()
    };

    while uncovered > 0 {
        let mut deltas = deltas_with(instance, &*lookup, &processed, &covered);
        prune_with(env, &*lookup, &mut candidates, &processed);

        stats.iterations += 1;
        stats.max_candidates = stats.max_candidates.max(candidates.len());
        stats.max_deltas = stats.max_deltas.max(deltas.len());
        stats.max_live_peaks = stats
            .max_live_peaks
            .max(candidates.len() + deltas.len() + processed.len());

        let from_candidates = match (candidates.best(), deltas.best()) {
            (Some(c), Some(d)) => c.rank(d).is_le(),
            (Some(_), None) => true,
            (None, _) => false,
        };
        let selected = if from_candidates {
            candidates.remove_best()
        } else {
            deltas.remove_best()
        }
        .expect("an uncovered reward always yields a delta candidate");

        for &id in &selected.rewards {
            if !covered[id] {
                covered[id] = true;
                uncovered -= 1;
            }
        }
        remove_affected_peaks(&mut candidates, &selected);
        stats.selection_values.push(selected.value());
        processed.push(selected);
        lookup.record(processed.as_slice().last().expect("just pushed"));
    }
    stats.settle_passes = settle(instance, lookup, &mut processed);
    Ok((processed, stats))
}

/// Raises every selected slot to `r + γ·(best neighbour)` until no slot
/// improves, returning the number of passes.
///
/// Selection fixes a reward's value before lower-valued rewards on its best
/// continuation are selected; this pass folds their contribution back in.
/// Every raised value is still attained by a policy (collect, then step to
/// that neighbour), so the slots stay lower bounds and converge to the
/// optimal values at reward states.
fn settle<E: Environment, L: ValueLookup>(
    instance: &MdpInstance<E>,
    lookup: &mut L,
    processed: &mut PeakList,
) -> usize {
    let env = instance.env();
    let gamma = instance.gamma();
    let cap = 2 * processed.len() + 2;
    for pass in 1..=cap {
        let mut changed = false;
        for k in 0..processed.len() {
            for secondary in [false, true] {
                let peak = &processed.as_slice()[k];
                let slot = match (secondary, peak.secondary) {
                    (false, _) => peak.primary,
                    (true, Some(sec)) => sec,
                    (true, None) => continue,
                };
                let reward = instance
                    .reward_at(slot.state)
                    .expect("peak slots sit on reward states")
                    .value;
                let raised =
                    reward + gamma * best_neighbor_value(env, &*lookup, processed, slot.state);
                if raised > slot.value * (1.0 + SETTLE_TOLERANCE) {
                    let peak = processed.get_mut(k);
                    if secondary {
                        peak.secondary.as_mut().expect("checked above").value = raised;
                    } else {
                        peak.primary.value = raised;
                    }
                    lookup.record(&processed.as_slice()[k]);
                    changed = true;
                }
            }
        }
        if !changed {
            return pass;
        }
    }
    cap
}

/// Relative improvement below which a settle update is treated as rounding.
const SETTLE_TOLERANCE: f64 = 1e-12;

/// Solves the instance without any per-state storage.
pub fn solve_memoryless<E: Environment>(instance: &MdpInstance<E>) -> Result<PeakList> {
    solve_memoryless_with_stats(instance).map(|(peaks, _)| peaks)
}

pub fn solve_memoryless_with_stats<E: Environment>(
    instance: &MdpInstance<E>,
) -> Result<(PeakList, SolveStats)> {
    let mut lookup = OnDemand::new(instance.env(), instance.discount());
    select_peaks(instance, &mut lookup)
}

/// Same selection as [`solve_memoryless`], reading neighbour values from a
/// dense table that is updated after every selection. Memory is `O(|S|)`.
pub fn solve_memoized<E: Environment>(instance: &MdpInstance<E>) -> Result<(PeakList, ValueTable)> {
    let mut lookup = Memoized::new(instance.env(), instance.discount());
    let (peaks, _) = select_peaks(instance, &mut lookup)?;
    Ok((
        peaks,
        ValueTable {
            values: lookup.into_table(),
            gamma: instance.gamma(),
            residual: 0.0,
            sweeps: 0,
        },
    ))
}
