//! Problem representation: states, actions, reward sources, discounting and
//! the environment contract (successors, connected distance, minimum cycle).
//!
//! Two environments implement [`Environment`]:
//!
//! - [`GridWorld`], an obstacle-free 4-connected grid. Distances are the
//!   closed-form Manhattan metric, so nothing proportional to the number of
//!   cells is ever stored.
//! - [`GraphWorld`], an arbitrary deterministic transition graph. Distances
//!   are precomputed once with breadth-first search, which is only sensible
//!   for graphs that fit in memory.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Dense index of a state, `0..state_count`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StateId(pub usize);

/// Dense index of an action, `0..action_count`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActionId(pub usize);

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Successor list of one state, ordered by action.
pub type Neighbors = SmallVec<[(ActionId, StateId); 4]>;

/// Discount factor, strictly inside `(0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Discount(f64);

impl Discount {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma.is_finite() && gamma > 0.0 && gamma < 1.0 {
            Ok(Self(gamma))
        } else {
            Err(Error::InvalidDiscount(gamma))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// `value · γ^distance`; unreachable targets contribute nothing.
    #[inline]
    pub fn decay(self, value: f64, distance: Option<u64>) -> f64 {
        match distance {
            Some(0) => value,
            Some(d) if d <= i32::MAX as u64 => value * self.0.powi(d as i32),
            _ => 0.0,
        }
    }
}

/// Deterministic environment contract shared by the solvers.
///
/// Implementors may assume that state arguments are valid; the checked
/// wrappers ([`Environment::neighbors`], [`Environment::distance`],
/// [`Environment::min_cycle_length`]) validate before delegating.
pub trait Environment {
    fn state_count(&self) -> usize;

    fn action_count(&self) -> usize;

    /// Successors of a valid state, ordered by action.
    fn successors(&self, s: StateId) -> Neighbors;

    /// Shortest-path step count from `from` to `to`, `None` if unreachable.
    fn connected_distance(&self, from: StateId, to: StateId) -> Option<u64>;

    /// Length of the shortest action sequence leaving `s` and returning.
    fn shortest_cycle(&self, s: StateId) -> Option<u64>;

    /// Checks that every state can act; continuous MDPs have no dead ends.
    fn check_no_dead_ends(&self) -> Result<()>;

    #[inline]
    fn contains(&self, s: StateId) -> bool {
        s.0 < self.state_count()
    }

    fn check_state(&self, s: StateId) -> Result<()> {
        if self.contains(s) {
            Ok(())
        } else {
            Err(Error::InvalidState {
                state: s.0,
                count: self.state_count(),
            })
        }
    }

    fn neighbors(&self, s: StateId) -> Result<Neighbors> {
        self.check_state(s)?;
        Ok(self.successors(s))
    }

    fn distance(&self, from: StateId, to: StateId) -> Result<Option<u64>> {
        self.check_state(from)?;
        self.check_state(to)?;
        Ok(self.connected_distance(from, to))
    }

    fn min_cycle_length(&self, s: StateId) -> Result<u64> {
        self.check_state(s)?;
        self.shortest_cycle(s).ok_or(Error::NoCycle { state: s.0 })
    }
}

/// Grid move, in action-id order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    North,
    East,
    South,
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::North,
        Direction::East,
        Direction::South,
        Direction::West,
    ];

    pub fn action(self) -> ActionId {
        ActionId(self as usize)
    }

    pub fn from_action(a: ActionId) -> Option<Self> {
        Self::ALL.get(a.0).copied()
    }

    /// `(dx, dy)`; north increases `y`.
    pub fn delta(self) -> (i64, i64) {
        match self {
            Direction::North => (0, 1),
            Direction::East => (1, 0),
            Direction::South => (0, -1),
            Direction::West => (-1, 0),
        }
    }

    pub fn letter(self) -> char {
        match self {
            Direction::North => 'N',
            Direction::East => 'E',
            Direction::South => 'S',
            Direction::West => 'W',
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::North => "north",
            Direction::East => "east",
            Direction::South => "south",
            Direction::West => "west",
        })
    }
}

/// Obstacle-free 4-connected grid. `index = y * width + x`.
///
/// Moves that would leave the grid are omitted rather than turned into
/// self-loops, so every cell of a grid with at least two cells has a
/// minimum cycle of exactly 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridWorld {
    width: usize,
    height: usize,
}

impl GridWorld {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 || width.checked_mul(height).is_none() {
            return Err(Error::InvalidGridShape { width, height });
        }
        Ok(Self { width, height })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn state_at(&self, x: i64, y: i64) -> Result<StateId> {
        if x < 0 || y < 0 || x as u64 >= self.width as u64 || y as u64 >= self.height as u64 {
            return Err(Error::OutOfBounds {
                x,
                y,
                width: self.width,
                height: self.height,
            });
        }
        Ok(StateId(y as usize * self.width + x as usize))
    }

    pub fn coords(&self, s: StateId) -> (usize, usize) {
        (s.0 % self.width, s.0 / self.width)
    }

    /// Successor in direction `dir`, if it stays on the grid.
    pub fn step(&self, s: StateId, dir: Direction) -> Option<StateId> {
        let (x, y) = self.coords(s);
        let (nx, ny) = match dir {
            Direction::North => (x, y.checked_add(1).filter(|&v| v < self.height)?),
            Direction::East => (x.checked_add(1).filter(|&v| v < self.width)?, y),
            Direction::South => (x, y.checked_sub(1)?),
            Direction::West => (x.checked_sub(1)?, y),
        };
        Some(StateId(ny * self.width + nx))
    }
}

impl Environment for GridWorld {
    fn state_count(&self) -> usize {
        self.width * self.height
    }

    fn action_count(&self) -> usize {
        Direction::ALL.len()
    }

    fn successors(&self, s: StateId) -> Neighbors {
        Direction::ALL
            .iter()
            .filter_map(|&d| self.step(s, d).map(|n| (d.action(), n)))
            .collect()
    }

    fn connected_distance(&self, from: StateId, to: StateId) -> Option<u64> {
        let (ax, ay) = self.coords(from);
        let (bx, by) = self.coords(to);
        Some((ax.abs_diff(bx) + ay.abs_diff(by)) as u64)
    }

    fn shortest_cycle(&self, _s: StateId) -> Option<u64> {
        // Every move is reversible, so step out and back whenever any move exists.
        (self.state_count() >= 2).then_some(2)
    }

    fn check_no_dead_ends(&self) -> Result<()> {
        if self.state_count() >= 2 {
            Ok(())
        } else {
            Err(Error::DeadEnd { state: 0 })
        }
    }
}

/// Deterministic transition graph with precomputed all-pairs distances.
///
/// Action `k` of a state is its `k`-th outgoing edge. Memory is
/// `O(|S|²)`; intended for small irregular environments.
#[derive(Clone, Debug)]
pub struct GraphWorld {
    edges: Vec<Vec<StateId>>,
    action_count: usize,
    /// Row-major `from * n + to`; `u32::MAX` marks unreachable.
    dist: Vec<u32>,
}

impl GraphWorld {
    pub fn new(edges: Vec<Vec<usize>>) -> Result<Self> {
        let n = edges.len();
        for (from, out) in edges.iter().enumerate() {
            if let Some(&to) = out.iter().find(|&&to| to >= n) {
                return Err(Error::InvalidEdge { from, to, count: n });
            }
        }
        let edges: Vec<Vec<StateId>> = edges
            .into_iter()
            .map(|out| out.into_iter().map(StateId).collect())
            .collect();
        let action_count = edges.iter().map(Vec::len).max().unwrap_or(0);

        let mut dist = vec![u32::MAX; n * n];
        let mut queue = VecDeque::new();
        for src in 0..n {
            let row = &mut dist[src * n..(src + 1) * n];
            row[src] = 0;
            queue.clear();
            queue.push_back(src);
            while let Some(u) = queue.pop_front() {
                let du = row[u];
                for &StateId(v) in &edges[u] {
                    if row[v] == u32::MAX {
                        row[v] = du + 1;
                        queue.push_back(v);
                    }
                }
            }
        }
        Ok(Self {
            edges,
            action_count,
            dist,
        })
    }
}

impl Environment for GraphWorld {
    fn state_count(&self) -> usize {
        self.edges.len()
    }

    fn action_count(&self) -> usize {
        self.action_count
    }

    fn successors(&self, s: StateId) -> Neighbors {
        self.edges[s.0]
            .iter()
            .enumerate()
            .map(|(a, &t)| (ActionId(a), t))
            .collect()
    }

    fn connected_distance(&self, from: StateId, to: StateId) -> Option<u64> {
        let d = self.dist[from.0 * self.edges.len() + to.0];
        (d != u32::MAX).then_some(d as u64)
    }

    fn shortest_cycle(&self, s: StateId) -> Option<u64> {
        self.edges[s.0]
            .iter()
            .filter_map(|&t| self.connected_distance(t, s))
            .min()
            .map(|d| d + 1)
    }

    fn check_no_dead_ends(&self) -> Result<()> {
        match self.edges.iter().position(Vec::is_empty) {
            Some(state) => Err(Error::DeadEnd { state }),
            None => Ok(()),
        }
    }
}

/// A positive reward collected every time its state is occupied.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardSource {
    pub id: usize,
    pub state: StateId,
    pub value: f64,
}

/// Environment, reward sources and discount: the full problem statement.
#[derive(Clone, Debug)]
pub struct MdpInstance<E = GridWorld> {
    env: E,
    rewards: Vec<RewardSource>,
    by_state: HashMap<StateId, usize>,
    discount: Discount,
}

impl<E: Environment> MdpInstance<E> {
    /// Validates and builds an instance. Reward ids are assigned by position.
    pub fn new(env: E, rewards: &[(StateId, f64)], gamma: f64) -> Result<Self> {
        let discount = Discount::new(gamma)?;
        if rewards.is_empty() {
            return Err(Error::NoRewards);
        }
        env.check_no_dead_ends()?;
        let mut by_state = HashMap::with_capacity(rewards.len());
        let mut sources = Vec::with_capacity(rewards.len());
        for (id, &(state, value)) in rewards.iter().enumerate() {
            env.check_state(state)?;
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPositiveReward { id, value });
            }
            if by_state.insert(state, id).is_some() {
                return Err(Error::DuplicateReward { state: state.0 });
            }
            env.min_cycle_length(state)?;
            sources.push(RewardSource { id, state, value });
        }
        Ok(Self {
            env,
            rewards: sources,
            by_state,
            discount,
        })
    }

    pub fn env(&self) -> &E {
        &self.env
    }

    pub fn rewards(&self) -> &[RewardSource] {
        &self.rewards
    }

    pub fn discount(&self) -> Discount {
        self.discount
    }

    pub fn gamma(&self) -> f64 {
        self.discount.get()
    }

    /// Reward source occupying `s`, if any.
    pub fn reward_at(&self, s: StateId) -> Option<&RewardSource> {
        self.by_state.get(&s).map(|&id| &self.rewards[id])
    }

    pub fn neighbors(&self, s: StateId) -> Result<Neighbors> {
        self.env.neighbors(s)
    }

    pub fn distance(&self, a: StateId, b: StateId) -> Result<Option<u64>> {
        self.env.distance(a, b)
    }

    pub fn min_cycle_length(&self, s: StateId) -> Result<u64> {
        self.env.min_cycle_length(s)
    }
}

impl MdpInstance<GridWorld> {
    /// Grid instance from `(x, y, value)` triples.
    pub fn grid(
        width: usize,
        height: usize,
        gamma: f64,
        rewards: &[(i64, i64, f64)],
    ) -> Result<Self> {
        let env = GridWorld::new(width, height)?;
        let placed = rewards
            .iter()
            .map(|&(x, y, v)| env.state_at(x, y).map(|s| (s, v)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(env, &placed, gamma)
    }
}
