//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicUsize, Ordering::Relaxed};
use std::time::Instant;

use memoryless_bench::{generate_config, median};
use memoryless_core::oracle::greedy_step;
use memoryless_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Counting;

static LIVE: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = System.alloc(layout);
        if !p.is_null() {
            let now = LIVE.fetch_add(layout.size(), Relaxed) + layout.size();
            PEAK.fetch_max(now, Relaxed);
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout);
        LIVE.fetch_sub(layout.size(), Relaxed);
    }
}

#[global_allocator]
static ALLOC: Counting = Counting;

/// Peak heap growth, in bytes, while `f` runs.
fn peak_heap<T>(f: impl FnOnce() -> T) -> (T, usize) {
    let base = LIVE.load(Relaxed);
    PEAK.store(base, Relaxed);
    let out = f();
    (out, PEAK.load(Relaxed) - base)
}

struct Report {
    lines: Vec<(bool, String)>,
}

impl Report {
    fn check(&mut self, name: &str, pass: bool, detail: String) {
        let line = format!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        println!("{line}");
        self.lines.push((pass, line));
    }
}

struct Solved {
    instance: MdpInstance,
    peaks: PeakList,
    stats: SolveStats,
    vi: ValueTable,
}

/// 3 grids × 8 reward counts × 3 discounts × 3 seeds = 216 instances.
fn equivalence_suite() -> Vec<Solved> {
    let mut out = Vec::new();
    for side in [5, 10, 20] {
        for n in 1..=8 {
            for gamma in [0.5, 0.9, 0.99] {
                for rep in 0..3u64 {
                    let seed =
                        1_000 * side as u64 + 100 * n as u64 + 10 * rep + (gamma * 100.0) as u64;
                    let instance = generate_config(seed, (side, side), n, gamma).unwrap();
                    let (peaks, stats) = solve_memoryless_with_stats(&instance).unwrap();
                    let vi = value_iteration(&instance, 1e-9).unwrap();
                    out.push(Solved {
                        instance,
                        peaks,
                        stats,
                        vi,
                    });
                }
            }
        }
    }
    out
}

fn oracle_equivalence(report: &mut Report, suite: &[Solved]) {
    let mut worst = 0.0f64;
    let mut failing = 0;
    for s in suite {
        let rebuilt = reconstruct_value_function(&s.peaks, s.instance.env(), s.instance.discount());
        let diff = rebuilt.max_abs_diff(&s.vi);
        worst = worst.max(diff);
        if diff > 1e-6 {
            failing += 1;
        }
    }
    report.check(
        "oracle equivalence",
        suite.len() >= 200 && failing == 0,
        format!(
            "{} instances, {failing} over 1e-6, worst diff {worst:.3e}",
            suite.len()
        ),
    );
}

fn mode_agreement(report: &mut Report, suite: &[Solved]) {
    let mut mismatched = 0;
    for s in suite {
        let (memo, table) = solve_memoized(&s.instance).unwrap();
        let rebuilt = reconstruct_value_function(&s.peaks, s.instance.env(), s.instance.discount());
        if memo != s.peaks || rebuilt.max_abs_diff(&table) != 0.0 {
            mismatched += 1;
        }
    }
    report.check(
        "mode agreement",
        mismatched == 0,
        format!("{mismatched} of {} peak lists differ", suite.len()),
    );
}

/// Median over `seeds` of each instance's median solve time, with the two
/// grid settings interleaved so drift hits both equally.
fn paired_medians(a: &[MdpInstance], b: &[MdpInstance], repeats: usize) -> (f64, f64) {
    let mut per_a = Vec::new();
    let mut per_b = Vec::new();
    for (x, y) in a.iter().zip(b) {
        let mut ta = Vec::with_capacity(repeats);
        let mut tb = Vec::with_capacity(repeats);
        for _ in 0..repeats {
            ta.push(time(x));
            tb.push(time(y));
        }
        per_a.push(median(&mut ta));
        per_b.push(median(&mut tb));
    }
    (median(&mut per_a), median(&mut per_b))
}

fn time(instance: &MdpInstance) -> f64 {
    let start = Instant::now();
    let peaks = solve_memoryless(instance).unwrap();
    let secs = start.elapsed().as_secs_f64();
    std::hint::black_box(peaks);
    secs
}

fn state_space_invariance(report: &mut Report) {
    let seeds = 0..10u64;
    let small: Vec<_> = seeds
        .clone()
        .map(|s| generate_config(s, (10, 10), 5, 0.9).unwrap())
        .collect();
    let large: Vec<_> = seeds
        .map(|s| generate_config(s, (100, 100), 5, 0.9).unwrap())
        .collect();
    for i in small.iter().chain(&large) {
        time(i);
    }
    let (t_small, t_large) = paired_medians(&small, &large, 201);
    let ratio = t_large / t_small;
    report.check(
        "state-space invariance",
        ratio <= 1.5,
        format!("median 10x10 {t_small:.3e}s, 100x100 {t_large:.3e}s, ratio {ratio:.2}"),
    );
}

fn discount_invariance(report: &mut Report) {
    let seeds = 0..10u64;
    let low: Vec<_> = seeds
        .clone()
        .map(|s| generate_config(s, (50, 50), 5, 0.5).unwrap())
        .collect();
    let high: Vec<_> = seeds
        .map(|s| generate_config(s, (50, 50), 5, 0.99).unwrap())
        .collect();
    for i in low.iter().chain(&high) {
        time(i);
    }
    let (t_low, t_high) = paired_medians(&low, &high, 201);
    let ratio = t_high / t_low;

    let mut sweep_ratio = f64::INFINITY;
    for (l, h) in low.iter().zip(&high) {
        let sl = value_iteration(l, 1e-9).unwrap().sweeps;
        let sh = value_iteration(h, 1e-9).unwrap().sweeps;
        sweep_ratio = sweep_ratio.min(sh as f64 / sl as f64);
    }
    report.check(
        "discount invariance",
        ratio <= 1.5 && sweep_ratio >= 5.0,
        format!(
            "median gamma 0.5 {t_low:.3e}s, 0.99 {t_high:.3e}s, ratio {ratio:.2}; smallest vi sweep ratio {sweep_ratio:.1}"
        ),
    );
}

fn memory_bound(report: &mut Report, suite: &[Solved]) {
    let mut worst = 0.0f64;
    let mut over = 0;
    for s in suite {
        let r = s.instance.rewards().len();
        let bound = r * s.instance.env().action_count() + r;
        worst = worst.max(s.stats.max_live_peaks as f64 / bound as f64);
        if s.stats.max_live_peaks > bound {
            over += 1;
        }
    }

    // identical reward layout on grids four orders of magnitude apart
    let rewards = [
        (3, 3, 4.0),
        (4, 3, 9.0),
        (8, 1, 2.0),
        (0, 9, 7.0),
        (6, 6, 5.0),
        (9, 9, 1.0),
    ];
    let sides = [20usize, 2_000, 2_000_000];
    let mut bytes = Vec::new();
    for side in sides {
        let instance = MdpInstance::grid(side, side, 0.95, &rewards).unwrap();
        let (peaks, b) = peak_heap(|| solve_memoryless(&instance).unwrap());
        assert_eq!(peaks.len(), solve_memoryless(&instance).unwrap().len());
        bytes.push(b);
    }
    let flat = bytes.iter().all(|&b| b == bytes[0]);
    report.check(
        "memory bound",
        over == 0 && flat,
        format!(
            "{over} solves over |R||A|+|R| (worst fill {:.2}); solve heap peak {:?} bytes on {:?}-sided grids",
            worst, bytes, sides
        ),
    );
}

fn policy_following(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut compared, mut mismatched, mut worst) = (0usize, 0usize, 0.0f64);
    for k in 0..50u64 {
        let side = rng.gen_range(5..=20);
        let n = rng.gen_range(1..=8);
        let gamma = [0.5, 0.9, 0.99][rng.gen_range(0..3)];
        let instance = generate_config(7_000 + k, (side, side), n, gamma).unwrap();
        let peaks = solve_memoryless(&instance).unwrap();
        let vi = value_iteration(&instance, 1e-9).unwrap();
        let env = instance.env();
        for _ in 0..10 {
            let start = StateId(rng.gen_range(0..env.state_count()));
            let t = follow_local_policy(&peaks, start, 100, env, instance.discount()).unwrap();
            let mut oracle = start;
            for step in &t.steps {
                oracle = greedy_step(&vi, env, oracle).unwrap().1;
                let d = (vi.get(step.state) - vi.get(oracle))
                    .abs()
                    .max((step.value - vi.get(step.state)).abs());
                worst = worst.max(d);
                compared += 1;
                if d > 1e-6 {
                    mismatched += 1;
                }
            }
        }
    }
    report.check(
        "policy-following equivalence",
        mismatched == 0 && compared == 50 * 10 * 100,
        format!("{compared} steps compared, {mismatched} over 1e-6, worst {worst:.3e}"),
    );
}

fn six_by_six_walk(report: &mut Report) {
    let instance = MdpInstance::grid(6, 6, 0.9, &[(4, 2, 10.0)]).unwrap();
    let env = instance.env();
    let peaks = solve_memoryless(&instance).unwrap();
    let start = env.state_at(1, 1).unwrap();
    let target = env.state_at(4, 2).unwrap();
    let t = follow_local_policy(&peaks, start, 4, env, instance.discount()).unwrap();
    let path: Vec<_> = t
        .steps
        .iter()
        .map(|s| Direction::from_action(s.action).unwrap().letter())
        .collect();
    let arrives = t.steps.last().map(|s| s.state) == Some(target)
        && t.steps[..3].iter().all(|s| s.state != target);
    let budget = 4 * env.action_count() + 1;
    report.check(
        "six-by-six walk",
        arrives && t.distinct_evaluated() <= budget,
        format!(
            "path {} reaches (4,2) in {} steps, {} states evaluated (budget {budget})",
            path.iter().collect::<String>(),
            t.steps.len(),
            t.distinct_evaluated()
        ),
    );
}

fn main() {
    let mut report = Report { lines: Vec::new() };
    let suite = equivalence_suite();
    oracle_equivalence(&mut report, &suite);
    state_space_invariance(&mut report);
    discount_invariance(&mut report);
    memory_bound(&mut report, &suite);
    policy_following(&mut report);
    six_by_six_walk(&mut report);
    mode_agreement(&mut report, &suite);

    let failed: Vec<_> = report
        .lines
        .iter()
        .filter(|(p, _)| !p)
        .map(|(_, l)| l.as_str())
        .collect();
    if !failed.is_empty() {
        eprintln!("failed criteria:\n{}", failed.join("\n"));
        std::process::exit(1);
    }
    println!("all {} criteria passed", report.lines.len());
}
