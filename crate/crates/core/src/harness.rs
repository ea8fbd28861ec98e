//! Seeded trial ensembles and the statistics extracted from them.
//!
//! Trial `i` of an ensemble with master seed `s` always draws from the
//! stream keyed by `(s, i)`, and aggregation uses exact integer sums, so a
//! summary is bit-identical whatever the worker count.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forcing::{default_max_steps, run_trial, ColorState, ForcingRule, TrialRecord};
use crate::graph::{eccentricity, Graph, GraphFamilySpec};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "PZF_THREADS";

pub const DEFAULT_TRIALS: u64 = 1000;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HarnessOptions {
    /// Defaults to `1000 * n_vertices`.
    pub max_steps: Option<u64>,
    /// Defaults to `PZF_THREADS`, else rayon's choice.
    pub threads: Option<usize>,
}

impl HarnessOptions {
    pub fn with_threads(threads: usize) -> Self {
        HarnessOptions { threads: Some(threads), ..Self::default() }
    }

    fn worker_count(&self) -> usize {
        self.threads
            .or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()))
            .filter(|&t| t > 0)
            .unwrap_or_else(rayon::current_num_threads)
    }
}

/// Runs trials `0..trials` and returns their records in trial order.
pub fn run_ensemble(
    g: &Graph,
    start: usize,
    rule: ForcingRule,
    trials: u64,
    seed: u64,
    options: &HarnessOptions,
) -> Result<Vec<TrialRecord>> {
    map_trials(g, start, rule, trials, seed, options, |r| r)
}

fn map_trials<T: Send>(
    g: &Graph,
    start: usize,
    rule: ForcingRule,
    trials: u64,
    seed: u64,
    options: &HarnessOptions,
    f: impl Fn(TrialRecord) -> T + Sync,
) -> Result<Vec<T>> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let initial = ColorState::new(g, &[start])?;
    let max_steps = options.max_steps.unwrap_or_else(|| default_max_steps(g));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.worker_count())
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| {
        (0..trials).into_par_iter().map(|i| run_trial(g, &initial, rule, seed, i, max_steps).map(&f)).collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EptSummary {
    /// Mean propagation time over terminated trials.
    pub mean: f64,
    /// Unbiased sample variance (zero for a single trial).
    pub variance: f64,
    pub std_error: f64,
    pub trials: u64,
    pub terminated: u64,
    /// Trials that stalled or hit the step cutoff; excluded from the moments.
    pub cutoff: u64,
    pub min_time: u64,
    pub max_time: u64,
    pub start_vertex: usize,
    pub rule: ForcingRule,
    pub seed: u64,
}

impl EptSummary {
    pub fn from_times(times: &[Option<u64>], start_vertex: usize, rule: ForcingRule, seed: u64) -> Result<Self> {
        let done: Vec<u64> = times.iter().flatten().copied().collect();
        let trials = times.len() as u64;
        let count = done.len() as u64;
        if count == 0 {
            return Err(Error::AllTrialsCutOff(trials));
        }
        let sum: u128 = done.iter().map(|&t| t as u128).sum();
        let sum_sq: u128 = done.iter().map(|&t| (t as u128) * (t as u128)).sum();
        let mean = sum as f64 / count as f64;
        let variance = if count > 1 {
            let numerator = count as u128 * sum_sq - sum * sum;
            numerator as f64 / (count as f64 * (count - 1) as f64)
        } else {
            0.0
        };
        Ok(EptSummary {
            mean,
            variance,
            std_error: (variance / count as f64).sqrt(),
            trials,
            terminated: count,
            cutoff: trials - count,
            min_time: done.iter().copied().min().unwrap_or(0),
            max_time: done.iter().copied().max().unwrap_or(0),
            start_vertex,
            rule,
            seed,
        })
    }
}

pub fn estimate_ept(
    g: &Graph,
    start: usize,
    rule: ForcingRule,
    trials: u64,
    seed: u64,
    options: &HarnessOptions,
) -> Result<EptSummary> {
    let times = map_trials(g, start, rule, trials, seed, options, |r| r.propagation_time)?;
    EptSummary::from_times(&times, start, rule, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinOverStarts {
    pub minimizer: usize,
    /// One summary per candidate, in candidate order.
    pub summaries: Vec<EptSummary>,
}

impl MinOverStarts {
    pub fn best(&self) -> &EptSummary {
        self.summaries.iter().find(|s| s.start_vertex == self.minimizer).expect("minimizer is one of the candidates")
    }
}

/// Estimates every candidate with the same seed and picks the smallest
/// mean; equal means go to the lowest vertex index.
pub fn estimate_ept_min_over_starts(
    g: &Graph,
    candidates: &[usize],
    rule: ForcingRule,
    trials: u64,
    seed: u64,
    options: &HarnessOptions,
) -> Result<MinOverStarts> {
    if candidates.is_empty() {
        return Err(Error::Config("no candidate start vertices".into()));
    }
    let summaries =
        candidates.iter().map(|&v| estimate_ept(g, v, rule, trials, seed, options)).collect::<Result<Vec<_>>>()?;
    let best = summaries
        .iter()
        .min_by(|a, b| a.mean.total_cmp(&b.mean).then(a.start_vertex.cmp(&b.start_vertex)))
        .map(|s| s.start_vertex)
        .unwrap_or(candidates[0]);
    Ok(MinOverStarts { minimizer: best, summaries })
}

/// How the start vertex of a run is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartPolicy {
    Vertex(usize),
    /// A peripheral vertex (a grid corner).
    Corner,
    /// A central vertex (the grid center).
    Center,
    /// Minimum over the default candidate set.
    MinOverAll,
}

impl fmt::Display for StartPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StartPolicy::Vertex(v) => write!(f, "{v}"),
            StartPolicy::Corner => f.write_str("corner"),
            StartPolicy::Center => f.write_str("center"),
            StartPolicy::MinOverAll => f.write_str("min"),
        }
    }
}

impl FromStr for StartPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "corner" => Ok(StartPolicy::Corner),
            "center" => Ok(StartPolicy::Center),
            "min" | "min-over-all" => Ok(StartPolicy::MinOverAll),
            other => {
                other.parse().map(StartPolicy::Vertex).map_err(|_| Error::Config(format!("bad start policy '{s}'")))
            }
        }
    }
}

fn extreme_eccentricity_vertex(g: &Graph, want_max: bool) -> usize {
    let ecc: Vec<usize> = (0..g.n_vertices()).map(|v| eccentricity(g, v).unwrap_or(usize::MAX)).collect();
    let target = if want_max { ecc.iter().max() } else { ecc.iter().min() }.copied().unwrap_or(0);
    ecc.iter().position(|&e| e == target).unwrap_or(0)
}

/// Corner (peripheral) vertex: coordinate-based on grids, vertex 0 on
/// vertex-transitive families, otherwise the first vertex of maximum
/// eccentricity.
pub fn corner_vertex(spec: Option<&GraphFamilySpec>, g: &Graph) -> usize {
    match spec {
        Some(GraphFamilySpec::Star(_)) if g.n_vertices() > 1 => 1,
        Some(
            GraphFamilySpec::Grid { .. }
            | GraphFamilySpec::Path(_)
            | GraphFamilySpec::Star(_)
            | GraphFamilySpec::Hypercube(_)
            | GraphFamilySpec::Cycle(_)
            | GraphFamilySpec::Complete(_),
        ) => 0,
        _ => extreme_eccentricity_vertex(g, true),
    }
}

/// Central vertex, by the same conventions as [`corner_vertex`].
pub fn center_vertex(spec: Option<&GraphFamilySpec>, g: &Graph) -> usize {
    match spec {
        Some(&GraphFamilySpec::Grid { m, n }) => (m - 1) / 2 + m * ((n - 1) / 2),
        Some(&GraphFamilySpec::Path(n)) => (n - 1) / 2,
        Some(GraphFamilySpec::Star(_)) => 0,
        Some(GraphFamilySpec::Hypercube(_) | GraphFamilySpec::Cycle(_) | GraphFamilySpec::Complete(_)) => 0,
        _ => extreme_eccentricity_vertex(g, false),
    }
}

/// Candidates for a minimum over starts: corner, edge midpoint and center
/// on grids, every vertex on graphs with at most 12 vertices, otherwise a
/// peripheral and a central vertex.
pub fn default_candidates(spec: Option<&GraphFamilySpec>, g: &Graph) -> Vec<usize> {
    let mut out = match spec {
        Some(&GraphFamilySpec::Grid { m, .. }) => {
            vec![corner_vertex(spec, g), (m - 1) / 2, center_vertex(spec, g)]
        }
        _ if g.n_vertices() <= 12 => (0..g.n_vertices()).collect(),
        _ => vec![corner_vertex(spec, g), center_vertex(spec, g)],
    };
    let mut seen = std::collections::HashSet::new();
    out.retain(|v| seen.insert(*v));
    out
}

pub fn resolve_starts(policy: StartPolicy, spec: Option<&GraphFamilySpec>, g: &Graph) -> Result<Vec<usize>> {
    let starts = match policy {
        StartPolicy::Vertex(v) => {
            g.check_vertex(v)?;
            vec![v]
        }
        StartPolicy::Corner => vec![corner_vertex(spec, g)],
        StartPolicy::Center => vec![center_vertex(spec, g)],
        StartPolicy::MinOverAll => default_candidates(spec, g),
    };
    Ok(starts)
}

/// Mean steps spent per dyadic level of the blue and white counts.
///
/// A step is charged to the state it starts from. While fewer than half
/// the vertices are blue, the step belongs to blue level
/// `k = floor(log2 blue)`, i.e. `blue` in `[2^k, 2^(k+1))`. Afterwards it
/// belongs to white level `k` with `white` in `(2^k, 2^(k+1)]`, and once a
/// single white vertex remains, to the final-vertex phase. The phases
/// partition every trajectory, so the level means sum to the mean
/// propagation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingProfile {
    pub n_vertices: usize,
    /// Terminated trials the means are taken over.
    pub trials: u64,
    pub cutoff: u64,
    pub mean_time: f64,
    pub blue_levels: Vec<f64>,
    pub white_levels: Vec<f64>,
    pub final_vertex: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Blue,
    White,
    Final,
}

impl DoublingProfile {
    /// Flattened `(phase, level, mean steps)` entries in trajectory order.
    pub fn entries(&self) -> Vec<(Phase, usize, f64)> {
        let blue = self.blue_levels.iter().enumerate().map(|(k, &m)| (Phase::Blue, k, m));
        let white = self.white_levels.iter().enumerate().rev().map(|(k, &m)| (Phase::White, k, m));
        blue.chain(white).chain(std::iter::once((Phase::Final, 0, self.final_vertex))).collect()
    }

    pub fn total(&self) -> f64 {
        self.blue_levels.iter().sum::<f64>() + self.white_levels.iter().sum::<f64>() + self.final_vertex
    }
}

fn level_counts(n: usize) -> (usize, usize) {
    let blue = (0..usize::BITS).take_while(|&k| 2usize << k < n).count();
    let white = (0..usize::BITS).take_while(|&k| (1usize << k) < n / 2).count();
    (blue, white)
}

pub fn doubling_profile(
    g: &Graph,
    start: usize,
    rule: ForcingRule,
    trials: u64,
    seed: u64,
    options: &HarnessOptions,
) -> Result<DoublingProfile> {
    let n = g.n_vertices();
    let (blue_len, white_len) = level_counts(n);
    let per_trial = map_trials(g, start, rule, trials, seed, options, move |record| {
        record.propagation_time?;
        let mut blue = vec![0u64; blue_len];
        let mut white = vec![0u64; white_len];
        let mut last = 0u64;
        for &b in &record.blue_counts[..record.blue_counts.len() - 1] {
            let w = n - b;
            if 2 * b < n {
                blue[b.ilog2() as usize] += 1;
            } else if w >= 2 {
                white[(w - 1).ilog2() as usize] += 1;
            } else {
                last += 1;
            }
        }
        Some((blue, white, last))
    })?;
    let done: Vec<_> = per_trial.iter().flatten().collect();
    let count = done.len() as u64;
    if count == 0 {
        return Err(Error::AllTrialsCutOff(trials));
    }
    let mut blue_sum = vec![0u64; blue_len];
    let mut white_sum = vec![0u64; white_len];
    let mut last_sum = 0u64;
    for (blue, white, last) in &done {
        blue_sum.iter_mut().zip(blue).for_each(|(s, x)| *s += x);
        white_sum.iter_mut().zip(white).for_each(|(s, x)| *s += x);
        last_sum += last;
    }
    let total: u64 = blue_sum.iter().sum::<u64>() + white_sum.iter().sum::<u64>() + last_sum;
    let mean = |s: u64| s as f64 / count as f64;
    Ok(DoublingProfile {
        n_vertices: n,
        trials: count,
        cutoff: trials - count,
        mean_time: mean(total),
        blue_levels: blue_sum.into_iter().map(mean).collect(),
        white_levels: white_sum.into_iter().map(mean).collect(),
        final_vertex: mean(last_sum),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub t: u64,
    /// Fraction of trials with propagation time above `t`; cut-off trials count.
    pub probability: f64,
    /// Binomial standard error of `probability`.
    pub std_error: f64,
    pub trials: u64,
}

pub fn tail_estimate(
    g: &Graph,
    start: usize,
    rule: ForcingRule,
    trials: u64,
    seed: u64,
    t: u64,
    options: &HarnessOptions,
) -> Result<TailEstimate> {
    let times = map_trials(g, start, rule, trials, seed, options, |r| r.propagation_time)?;
    let exceed = times.iter().filter(|x| x.is_none_or(|time| time > t)).count();
    let p = exceed as f64 / trials as f64;
    Ok(TailEstimate { t, probability: p, std_error: (p * (1.0 - p) / trials as f64).sqrt(), trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::make_named_graph;

    fn graph(spec: &str) -> Graph {
        make_named_graph(&spec.parse().unwrap()).unwrap()
    }

    #[test]
    fn summary_statistics() {
        let s = EptSummary::from_times(&[Some(1), Some(2), Some(3), None], 0, ForcingRule::Standard, 5).unwrap();
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.variance, 1.0);
        assert!((s.std_error - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!((s.trials, s.terminated, s.cutoff, s.min_time, s.max_time), (4, 3, 1, 1, 3));
        let one = EptSummary::from_times(&[Some(4)], 0, ForcingRule::Standard, 0).unwrap();
        assert_eq!((one.variance, one.std_error), (0.0, 0.0));
        assert_eq!(EptSummary::from_times(&[None, None], 0, ForcingRule::Classic, 0), Err(Error::AllTrialsCutOff(2)));
    }

    #[test]
    fn edge_graph_is_deterministic() {
        let q1 = graph("hypercube:1");
        let s = estimate_ept(&q1, 0, ForcingRule::Standard, 1000, 3, &HarnessOptions::default()).unwrap();
        assert_eq!(s.mean, 1.0);
        assert_eq!(s.variance, 0.0);
        let p = doubling_profile(&q1, 0, ForcingRule::Standard, 100, 3, &HarnessOptions::default()).unwrap();
        assert_eq!(p.entries(), vec![(Phase::Final, 0, 1.0)]);
    }

    #[test]
    fn level_layout_matches_hypercube_phases() {
        for dim in 1..=10u32 {
            let (b, w) = level_counts(1 << dim);
            assert_eq!((b, w), ((dim - 1) as usize, (dim - 1) as usize));
        }
        assert_eq!(level_counts(1), (0, 0));
        // n = 12: blue counts 1..5 -> levels 0,1,2; white counts 2..6 -> levels 0,1,2
        assert_eq!(level_counts(12), (3, 3));
    }

    #[test]
    fn profile_partitions_trajectories() {
        let q = graph("hypercube:6");
        let opts = HarnessOptions::default();
        let p = doubling_profile(&q, 0, ForcingRule::Standard, 500, 11, &opts).unwrap();
        let s = estimate_ept(&q, 0, ForcingRule::Standard, 500, 11, &opts).unwrap();
        assert!((p.total() - s.mean).abs() < 1e-9);
        assert_eq!(p.mean_time, s.mean);
    }

    #[test]
    fn tails() {
        let p2 = graph("path:2");
        let opts = HarnessOptions::default();
        assert_eq!(tail_estimate(&p2, 0, ForcingRule::Standard, 100, 0, 1, &opts).unwrap().probability, 0.0);
        let g = graph("grid:3,3");
        assert_eq!(tail_estimate(&g, 0, ForcingRule::Standard, 100, 0, 0, &opts).unwrap().probability, 1.0);
    }

    #[test]
    fn start_policies() {
        let g = graph("grid:3,3");
        let spec: GraphFamilySpec = "grid:3,3".parse().unwrap();
        assert_eq!(resolve_starts(StartPolicy::Corner, Some(&spec), &g).unwrap(), vec![0]);
        assert_eq!(resolve_starts(StartPolicy::Center, Some(&spec), &g).unwrap(), vec![4]);
        assert_eq!(resolve_starts(StartPolicy::MinOverAll, Some(&spec), &g).unwrap(), vec![0, 1, 4]);
        assert!(resolve_starts(StartPolicy::Vertex(9), Some(&spec), &g).is_err());

        let g = graph("grid:2,2");
        let spec: GraphFamilySpec = "grid:2,2".parse().unwrap();
        assert_eq!(default_candidates(Some(&spec), &g), vec![0]);

        // generic fallback uses eccentricities
        let p5 = graph("path:5");
        assert_eq!(center_vertex(None, &p5), 2);
        assert_eq!(corner_vertex(None, &p5), 0);
        assert_eq!(default_candidates(None, &p5), vec![0, 1, 2, 3, 4]);

        for s in ["3", "corner", "center", "min"] {
            assert_eq!(s.parse::<StartPolicy>().unwrap().to_string(), s);
        }
        assert!("middle".parse::<StartPolicy>().is_err());
    }

    #[test]
    fn min_over_starts_reports_every_candidate() {
        let g = graph("grid:3,3");
        let r =
            estimate_ept_min_over_starts(&g, &[0, 1, 4], ForcingRule::Standard, 2000, 4, &HarnessOptions::default())
                .unwrap();
        assert_eq!(r.summaries.len(), 3);
        let min = r.summaries.iter().map(|s| s.mean).fold(f64::INFINITY, f64::min);
        assert_eq!(r.best().mean, min);
        assert!(
            estimate_ept_min_over_starts(&g, &[], ForcingRule::Standard, 10, 0, &HarnessOptions::default()).is_err()
        );
    }
}
