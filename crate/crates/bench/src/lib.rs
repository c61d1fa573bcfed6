//! Scaling sweeps: value iteration against the memoized and memoryless peak
//! solvers on randomly generated grid instances, with CSV output.

use std::fmt;
use std::io::{Read, Write};
use std::time::Instant;

use memoryless_core::{
    reconstruct_value_function, solve_memoized, solve_memoryless, value_iteration, Environment,
    MdpInstance, ValueTable, DEFAULT_RESIDUAL,
};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const CSV_HEADER: &str =
    "experiment,config_id,solver,n_rewards,n_states,gamma,wall_seconds,max_abs_diff_vs_vi";

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid sweep config: {0}")]
    Config(String),
    #[error(transparent)]
    Solve(#[from] memoryless_core::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("config: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Rewards,
    States,
    Discount,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::Rewards => "rewards",
            Experiment::States => "states",
            Experiment::Discount => "discount",
        })
    }
}

/// Declaration order is the CSV row order within a configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Memoized,
    Memoryless,
    Vi,
}

impl SolverKind {
    pub const ALL: [SolverKind; 3] = [SolverKind::Memoized, SolverKind::Memoryless, SolverKind::Vi];
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Memoized => "memoized",
            SolverKind::Memoryless => "memoryless",
            SolverKind::Vi => "vi",
        })
    }
}

/// The sweep is the cartesian product grid sizes × reward counts × gammas,
/// with `configs_per_point` random instances at each point. An empty
/// `solvers` list is allowed and yields no records.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepConfig {
    pub experiment: Experiment,
    pub grid_sizes: Vec<[usize; 2]>,
    pub reward_counts: Vec<usize>,
    pub gammas: Vec<f64>,
    pub configs_per_point: usize,
    pub seed: u64,
    pub solvers: Vec<SolverKind>,
}

/// On-disk form: everything but the experiment falls back to its default.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepConfigDoc {
    experiment: Experiment,
    grid_sizes: Option<Vec<[usize; 2]>>,
    reward_counts: Option<Vec<usize>>,
    gammas: Option<Vec<f64>>,
    configs_per_point: Option<usize>,
    seed: Option<u64>,
    solvers: Option<Vec<SolverKind>>,
}

impl SweepConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let (grid_sizes, reward_counts, gammas) = match experiment {
            Experiment::Rewards => (vec![[50, 50]], (1..=10).collect(), vec![0.9]),
            Experiment::States => (
                (1..=5).map(|k| [10 * k, 10 * k]).collect(),
                vec![5],
                vec![0.9],
            ),
            Experiment::Discount => (
                vec![[50, 50]],
                vec![5],
                vec![0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99],
            ),
        };
        Self {
            experiment,
            grid_sizes,
            reward_counts,
            gammas,
            configs_per_point: 10,
            seed: 0,
            solvers: SolverKind::ALL.to_vec(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SweepConfigDoc = serde_json::from_str(text)?;
        let d = Self::defaults(doc.experiment);
        let config = Self {
            experiment: doc.experiment,
            grid_sizes: doc.grid_sizes.unwrap_or(d.grid_sizes),
            reward_counts: doc.reward_counts.unwrap_or(d.reward_counts),
            gammas: doc.gammas.unwrap_or(d.gammas),
            configs_per_point: doc.configs_per_point.unwrap_or(d.configs_per_point),
            seed: doc.seed.unwrap_or(d.seed),
            solvers: doc.solvers.unwrap_or(d.solvers),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.configs_per_point == 0 {
            return bad("configs_per_point must be at least 1".into());
        }
        if self.grid_sizes.is_empty() || self.reward_counts.is_empty() || self.gammas.is_empty() {
            return bad("grid_sizes, reward_counts and gammas must be non-empty".into());
        }
        for &g in &self.gammas {
            memoryless_core::Discount::new(g)?;
        }
        for &[w, h] in &self.grid_sizes {
            memoryless_core::GridWorld::new(w, h)?;
            if w * h < 2 {
                return bad(format!("{w}x{h} grid has no cycle"));
            }
            for &n in &self.reward_counts {
                if n == 0 || n > w * h {
                    return bad(format!("{n} rewards do not fit a {w}x{h} grid"));
                }
            }
        }
        Ok(())
    }

    /// Every (grid, reward count, gamma, seed) in sweep order.
    pub fn points(&self) -> Vec<SweepPoint> {
        let mut out = Vec::new();
        for &[w, h] in &self.grid_sizes {
            for &n in &self.reward_counts {
                for &gamma in &self.gammas {
                    for c in 0..self.configs_per_point {
                        out.push(SweepPoint {
                            config_id: out.len(),
                            width: w,
                            height: h,
                            n_rewards: n,
                            gamma,
                            seed: self.seed.wrapping_add(c as u64),
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub config_id: usize,
    pub width: usize,
    pub height: usize,
    pub n_rewards: usize,
    pub gamma: f64,
    pub seed: u64,
}

impl SweepPoint {
    pub fn instance(&self) -> Result<MdpInstance> {
        generate_config(
            self.seed,
            (self.width, self.height),
            self.n_rewards,
            self.gamma,
        )
    }
}

/// `n_rewards` distinct uniformly chosen cells with integer values in 1..=10.
/// The cells and values depend only on `seed`, the grid and `n_rewards`.
pub fn generate_config(
    seed: u64,
    grid: (usize, usize),
    n_rewards: usize,
    gamma: f64,
) -> Result<MdpInstance> {
    let (w, h) = grid;
    let cells = w
        .checked_mul(h)
        .ok_or_else(|| BenchError::Config(format!("{w}x{h} overflows")))?;
    if n_rewards > cells {
        return Err(BenchError::Config(format!(
            "{n_rewards} rewards do not fit a {w}x{h} grid"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rewards: Vec<_> = sample(&mut rng, cells, n_rewards)
        .iter()
        .map(|c| {
            (
                (c % w) as i64,
                (c / w) as i64,
                f64::from(rng.gen_range(1u8..=10)),
            )
        })
        .collect();
    Ok(MdpInstance::grid(w, h, gamma, &rewards)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub experiment: Experiment,
    pub config_id: usize,
    pub solver: SolverKind,
    pub n_rewards: usize,
    pub n_states: usize,
    pub gamma: f64,
    pub wall_seconds: f64,
    pub max_abs_diff_vs_vi: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepFailure {
    pub config_id: usize,
    pub solver: Option<SolverKind>,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepOutcome {
    pub records: Vec<BenchRecord>,
    pub failures: Vec<SweepFailure>,
}

/// Wall time of the solve call alone plus the resulting value table.
/// The table for the memoryless solver is rebuilt after the clock stops.
pub fn time_solver(instance: &MdpInstance, solver: SolverKind) -> Result<(f64, ValueTable)> {
    let start = Instant::now();
    let table = match solver {
        SolverKind::Vi => value_iteration(instance, DEFAULT_RESIDUAL)?,
        SolverKind::Memoized => solve_memoized(instance)?.1,
        SolverKind::Memoryless => {
            let peaks = solve_memoryless(instance)?;
            let secs = start.elapsed().as_secs_f64();
            let table = reconstruct_value_function(&peaks, instance.env(), instance.discount());
            return Ok((secs.max(1e-9), table));
        }
    };
    Ok((start.elapsed().as_secs_f64().max(1e-9), table))
}

/// Wall time of `solve_memoryless` alone.
pub fn time_memoryless(instance: &MdpInstance) -> Result<f64> {
    let start = Instant::now();
    let peaks = solve_memoryless(instance)?;
    let secs = start.elapsed().as_secs_f64();
    std::hint::black_box(peaks);
    Ok(secs.max(1e-9))
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        (values[m - 1] + values[m]) / 2.0
    }
}

/// Runs every requested solver on every sweep point, serially. A failed
/// solve is reported in `failures` and the sweep moves on.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutcome> {
    config.validate()?;
    let mut solvers = config.solvers.clone();
    solvers.sort();
    solvers.dedup();
    let mut outcome = SweepOutcome::default();

    for point in config.points() {
        let instance = match point.instance() {
            Ok(i) => i,
            Err(e) => {
                outcome.failures.push(SweepFailure {
                    config_id: point.config_id,
                    solver: None,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let row = |solver, wall_seconds, diff| BenchRecord {
            experiment: config.experiment,
            config_id: point.config_id,
            solver,
            n_rewards: point.n_rewards,
            n_states: instance.env().state_count(),
            gamma: point.gamma,
            wall_seconds,
            max_abs_diff_vs_vi: diff,
        };

        // vi goes first so the peak solvers can be compared against it
        let mut vi: Option<(f64, ValueTable)> = None;
        if solvers.contains(&SolverKind::Vi) {
            match time_solver(&instance, SolverKind::Vi) {
                Ok(r) => vi = Some(r),
                Err(e) => outcome.failures.push(SweepFailure {
                    config_id: point.config_id,
                    solver: Some(SolverKind::Vi),
                    message: e.to_string(),
                }),
            }
        }
        for &solver in &solvers {
            if solver == SolverKind::Vi {
                if let Some((secs, _)) = &vi {
                    outcome.records.push(row(solver, *secs, Some(0.0)));
                }
                continue;
            }
            match time_solver(&instance, solver) {
                Ok((secs, table)) => {
                    let diff = vi.as_ref().map(|(_, v)| table.max_abs_diff(v));
                    outcome.records.push(row(solver, secs, diff));
                }
                Err(e) => outcome.failures.push(SweepFailure {
                    config_id: point.config_id,
                    solver: Some(solver),
                    message: e.to_string(),
                }),
            }
        }
    }
    Ok(outcome)
}

pub fn write_csv<W: Write>(records: &[BenchRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<BenchRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != CSV_HEADER {
        return Err(BenchError::Config(format!(
            "unexpected csv header {:?}",
            header.join(",")
        )));
    }
    r.deserialize()
        .map(|row| row.map_err(BenchError::from))
        .collect()
}
