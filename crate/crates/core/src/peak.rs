//! Peaks: local maxima of the optimal value function induced by one or two
//! reward sources, and the ordered list of them that replaces a value table.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::mdp::{Discount, Environment, StateId};

/// How a peak's value was derived.
///
/// The declaration order is the tie-break order used during selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeakKind {
    /// One reward collected forever around its minimum cycle.
    Baseline,
    /// Two adjacent rewards collected alternately.
    Combined,
    /// One reward collected once, then the already-selected peaks are followed.
    Delta,
}

/// A state and the value of the peak at that state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakSlot {
    pub state: StateId,
    pub value: f64,
}

/// Reward ids represented by a peak: one, or two for combined peaks.
pub type CoveredRewards = SmallVec<[usize; 2]>;

#[derive(Clone, Debug, PartialEq)]
pub struct Peak {
    pub kind: PeakKind,
    pub primary: PeakSlot,
    /// Only populated for [`PeakKind::Combined`].
    pub secondary: Option<PeakSlot>,
    pub rewards: CoveredRewards,
}

impl Peak {
    pub fn baseline(reward: usize, state: StateId, value: f64) -> Self {
        Self {
            kind: PeakKind::Baseline,
            primary: PeakSlot { state, value },
            secondary: None,
            rewards: SmallVec::from_slice(&[reward]),
        }
    }

    pub fn delta(reward: usize, state: StateId, value: f64) -> Self {
        Self {
            kind: PeakKind::Delta,
            primary: PeakSlot { state, value },
            secondary: None,
            rewards: SmallVec::from_slice(&[reward]),
        }
    }

    pub fn combined(primary: (usize, PeakSlot), secondary: (usize, PeakSlot)) -> Self {
        Self {
            kind: PeakKind::Combined,
            primary: primary.1,
            secondary: Some(secondary.1),
            rewards: SmallVec::from_slice(&[primary.0, secondary.0]),
        }
    }

    /// Highest value held by either slot; the key peaks are ranked by.
    pub fn value(&self) -> f64 {
        match self.secondary {
            Some(sec) => self.primary.value.max(sec.value),
            None => self.primary.value,
        }
    }

    /// Contribution of this peak to the value of `s`.
    #[inline]
    pub fn value_at<E: Environment + ?Sized>(
        &self,
        env: &E,
        discount: Discount,
        s: StateId,
    ) -> f64 {
        let pri = discount.decay(
            self.primary.value,
            env.connected_distance(s, self.primary.state),
        );
        match self.secondary {
            Some(sec) => pri.max(discount.decay(sec.value, env.connected_distance(s, sec.state))),
            None => pri,
        }
    }

    pub fn covers(&self, reward: usize) -> bool {
        self.rewards.contains(&reward)
    }

    pub fn shares_reward_with(&self, other: &Peak) -> bool {
        self.rewards.iter().any(|&r| other.covers(r))
    }

    /// Selection order: higher value first, then kind, then state indices.
    pub fn rank(&self, other: &Peak) -> Ordering {
        other
            .value()
            .total_cmp(&self.value())
            .then(self.kind.cmp(&other.kind))
            .then(self.primary.state.cmp(&other.primary.state))
            .then_with(|| {
                let a = self.secondary.map(|s| s.state);
                let b = other.secondary.map(|s| s.state);
                a.cmp(&b)
            })
            .then_with(|| self.rewards.cmp(&other.rewards))
    }
}

/// Peaks in the order the solver selected them.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PeakList {
    peaks: Vec<Peak>,
}

impl PeakList {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            peaks: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, peak: Peak) {
        self.peaks.push(peak);
    }

    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Peak> {
        self.peaks.iter()
    }

    pub fn as_slice(&self) -> &[Peak] {
        &self.peaks
    }

    pub fn covers(&self, reward: usize) -> bool {
        self.peaks.iter().any(|p| p.covers(reward))
    }

    pub(crate) fn get_mut(&mut self, k: usize) -> &mut Peak {
        &mut self.peaks[k]
    }
}

impl From<Vec<Peak>> for PeakList {
    fn from(peaks: Vec<Peak>) -> Self {
        Self { peaks }
    }
}

impl<'a> IntoIterator for &'a PeakList {
    type Item = &'a Peak;
    type IntoIter = std::slice::Iter<'a, Peak>;

    fn into_iter(self) -> Self::IntoIter {
        self.peaks.iter()
    }
}

/// Candidate peaks kept sorted by [`Peak::rank`], best first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CandidateSet {
    sorted: Vec<Peak>,
}

impl CandidateSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, peak: Peak) {
        let at = self
            .sorted
            .partition_point(|p| p.rank(&peak) != Ordering::Greater);
        self.sorted.insert(at, peak);
    }

    pub fn retain(&mut self, keep: impl FnMut(&Peak) -> bool) {
        self.sorted.retain(keep);
    }

    pub fn best(&self) -> Option<&Peak> {
        self.sorted.first()
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Peak> {
        self.sorted.iter()
    }

    pub fn remove_best(&mut self) -> Option<Peak> {
        (!self.sorted.is_empty()).then(|| self.sorted.remove(0))
    }
}

impl FromIterator<Peak> for CandidateSet {
    fn from_iter<I: IntoIterator<Item = Peak>>(iter: I) -> Self {
        let mut sorted: Vec<Peak> = iter.into_iter().collect();
        sorted.sort_by(Peak::rank);
        Self { sorted }
    }
}
