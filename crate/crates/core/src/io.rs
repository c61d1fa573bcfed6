//! JSON documents for grid instances, peak lists, trajectories and value
//! tables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{Direction, Discount, GridWorld, MdpInstance};
use crate::oracle::ValueTable;
use crate::peak::{Peak, PeakKind, PeakList, PeakSlot};
use crate::policy::Trajectory;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub width: usize,
    pub height: usize,
    pub gamma: f64,
    pub rewards: Vec<RewardDoc>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardDoc {
    pub x: i64,
    pub y: i64,
    pub value: f64,
}

impl InstanceDoc {
    pub fn from_instance(instance: &MdpInstance) -> Self {
        let g = instance.env();
        Self {
            width: g.width(),
            height: g.height(),
            gamma: instance.gamma(),
            rewards: instance
                .rewards()
                .iter()
                .map(|r| {
                    let (x, y) = g.coords(r.state);
                    RewardDoc {
                        x: x as i64,
                        y: y as i64,
                        value: r.value,
                    }
                })
                .collect(),
        }
    }

    pub fn into_instance(self) -> Result<MdpInstance> {
        let triples: Vec<_> = self.rewards.iter().map(|r| (r.x, r.y, r.value)).collect();
        MdpInstance::grid(self.width, self.height, self.gamma, &triples)
    }
}

fn malformed(e: serde_json::Error) -> Error {
    Error::Malformed(e.to_string())
}

/// Parses and validates an instance document.
pub fn load_instance(text: &str) -> Result<MdpInstance> {
    let doc: InstanceDoc = serde_json::from_str(text).map_err(malformed)?;
    doc.into_instance()
}

pub fn instance_to_json(instance: &MdpInstance) -> String {
    serde_json::to_string_pretty(&InstanceDoc::from_instance(instance))
        .expect("plain data serializes")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotDoc {
    pub x: usize,
    pub y: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeakDoc {
    pub kind: PeakKind,
    pub pri: SlotDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sec: Option<SlotDoc>,
    pub rewards: Vec<usize>,
}

/// A solved peak list plus the grid shape and discount it was solved for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeakListDoc {
    pub gamma: f64,
    pub width: usize,
    pub height: usize,
    pub peaks: Vec<PeakDoc>,
}

/// Peak list decoded together with the setting needed to evaluate it.
#[derive(Clone, Debug, PartialEq)]
pub struct SolvedGrid {
    pub grid: GridWorld,
    pub discount: Discount,
    pub peaks: PeakList,
}

impl PeakListDoc {
    pub fn new(peaks: &PeakList, grid: &GridWorld, discount: Discount) -> Self {
        let slot = |s: PeakSlot| {
            let (x, y) = grid.coords(s.state);
            SlotDoc {
                x,
                y,
                value: s.value,
            }
        };
        Self {
            gamma: discount.get(),
            width: grid.width(),
            height: grid.height(),
            peaks: peaks
                .iter()
                .map(|p| PeakDoc {
                    kind: p.kind,
                    pri: slot(p.primary),
                    sec: p.secondary.map(slot),
                    rewards: p.rewards.to_vec(),
                })
                .collect(),
        }
    }

    pub fn decode(self) -> Result<SolvedGrid> {
        let grid = GridWorld::new(self.width, self.height)?;
        let discount = Discount::new(self.gamma)?;
        let slot = |d: SlotDoc| -> Result<PeakSlot> {
            let state = grid.state_at(d.x as i64, d.y as i64)?;
            if !(d.value.is_finite() && d.value > 0.0) {
                return Err(Error::Malformed(format!(
                    "peak value {} is not positive",
                    d.value
                )));
            }
            Ok(PeakSlot {
                state,
                value: d.value,
            })
        };
        let mut peaks = PeakList::with_capacity(self.peaks.len());
        for (i, doc) in self.peaks.into_iter().enumerate() {
            let expected = if doc.kind == PeakKind::Combined { 2 } else { 1 };
            if doc.rewards.len() != expected || doc.sec.is_some() != (expected == 2) {
                return Err(Error::Malformed(format!(
                    "peak {i}: a {:?} peak needs {expected} reward(s) and {} secondary slot",
                    doc.kind,
                    if expected == 2 { "a" } else { "no" }
                )));
            }
            let primary = slot(doc.pri)?;
            let peak = match doc.sec {
                Some(sec) => {
                    Peak::combined((doc.rewards[0], primary), (doc.rewards[1], slot(sec)?))
                }
                None => Peak {
                    kind: doc.kind,
                    primary,
                    secondary: None,
                    rewards: doc.rewards.into_iter().collect(),
                },
            };
            peaks.push(peak);
        }
        Ok(SolvedGrid {
            grid,
            discount,
            peaks,
        })
    }
}

pub fn peaks_to_json(peaks: &PeakList, grid: &GridWorld, discount: Discount) -> String {
    serde_json::to_string_pretty(&PeakListDoc::new(peaks, grid, discount))
        .expect("plain data serializes")
}

pub fn load_peaks(text: &str) -> Result<SolvedGrid> {
    let doc: PeakListDoc = serde_json::from_str(text).map_err(malformed)?;
    doc.decode()
}

/// One trajectory row: the state reached after `step` actions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub step: usize,
    pub x: usize,
    pub y: usize,
    pub action: Direction,
    pub value: f64,
}

pub fn trajectory_rows(trajectory: &Trajectory, grid: &GridWorld) -> Vec<TrajectoryRow> {
    trajectory
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let (x, y) = grid.coords(s.state);
            TrajectoryRow {
                step: i + 1,
                x,
                y,
                action: Direction::from_action(s.action).expect("grid actions are directions"),
                value: s.value,
            }
        })
        .collect()
}

/// Row-major value dump for debugging.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValueTableDoc<'a> {
    pub width: usize,
    pub height: usize,
    pub gamma: f64,
    pub values: &'a [f64],
}

pub fn table_to_json(table: &ValueTable, grid: &GridWorld) -> String {
    serde_json::to_string(&ValueTableDoc {
        width: grid.width(),
        height: grid.height(),
        gamma: table.gamma,
        values: &table.values,
    })
    .expect("plain data serializes")
}
