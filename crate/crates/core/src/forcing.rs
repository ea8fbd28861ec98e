//! Synchronous probabilistic zero-forcing and its rule variants.
//!
//! Within a step, each (blue `u`, white `v`) edge carries an independent
//! coin that lands with the rule's forcing probability; `v` turns blue if
//! any of its coins lands. All coins read the blue set as it was at the
//! start of the step. The coin for that edge is keyed by the arc index of
//! `u` inside `v`'s adjacency row, so one step's outcome is a pure function
//! of the state and the [`StepStream`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexSet};
use crate::rng::{StepStream, TrialStream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ForcingRule {
    /// Blue `u` forces white neighbor `v` with probability `C[u] / deg u`.
    Standard,
    /// Every blue-white edge forces with the same fixed probability.
    Constant(f64),
    /// Each blue vertex picks one uniform neighbor and colors it.
    Push,
    /// Each white vertex picks one uniform neighbor and turns blue if it is blue.
    Pull,
    /// Push and pull in the same step; effects are unioned.
    PushPull,
    /// Deterministic zero forcing: a blue vertex with a unique white neighbor forces it.
    Classic,
}

impl ForcingRule {
    pub fn constant(p: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&p) {
            Ok(ForcingRule::Constant(p))
        } else {
            Err(Error::ProbabilityRange(p))
        }
    }

    /// Rules whose step factorizes into independent per-edge coins.
    pub fn is_edge_independent(&self) -> bool {
        matches!(self, ForcingRule::Standard | ForcingRule::Constant(_))
    }
}

impl fmt::Display for ForcingRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForcingRule::Standard => f.write_str("standard"),
            ForcingRule::Constant(p) => write!(f, "constant:{p}"),
            ForcingRule::Push => f.write_str("push"),
            ForcingRule::Pull => f.write_str("pull"),
            ForcingRule::PushPull => f.write_str("pushpull"),
            ForcingRule::Classic => f.write_str("classic"),
        }
    }
}

impl FromStr for ForcingRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "standard" => Ok(ForcingRule::Standard),
            "push" => Ok(ForcingRule::Push),
            "pull" => Ok(ForcingRule::Pull),
            "pushpull" | "push-pull" | "push_pull" => Ok(ForcingRule::PushPull),
            "classic" => Ok(ForcingRule::Classic),
            other => {
                let p = other
                    .strip_prefix("constant:")
                    .and_then(|p| p.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::RuleSyntax(s.to_string()))?;
                ForcingRule::constant(p)
            }
        }
    }
}

impl Serialize for ForcingRule {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ForcingRule {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Blue vertex set of a running process. Only grows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorState {
    blue: VertexSet,
}

impl ColorState {
    pub fn new(g: &Graph, blue: &[usize]) -> Result<Self> {
        Ok(ColorState { blue: VertexSet::from_indices(g.n_vertices(), blue)? })
    }

    pub fn from_set(g: &Graph, blue: VertexSet) -> Result<Self> {
        if blue.universe() != g.n_vertices() {
            return Err(Error::Contract(format!(
                "vertex set over {} vertices used with a graph of {}",
                blue.universe(),
                g.n_vertices()
            )));
        }
        Ok(ColorState { blue })
    }

    pub fn blue(&self) -> &VertexSet {
        &self.blue
    }

    #[inline]
    pub fn is_blue(&self, v: usize) -> bool {
        self.blue.contains(v)
    }

    pub fn n_blue(&self) -> usize {
        self.blue.len()
    }

    pub fn all_blue(&self) -> bool {
        self.blue.is_full()
    }
}

fn require_blue(state: &ColorState, u: usize) -> Result<()> {
    if state.is_blue(u) {
        Ok(())
    } else {
        Err(Error::Contract(format!("vertex {u} is white")))
    }
}

/// `C[u]`: blue vertices in the closed neighborhood of blue vertex `u`.
pub fn closed_blue_count(g: &Graph, state: &ColorState, u: usize) -> Result<usize> {
    g.check_vertex(u)?;
    require_blue(state, u)?;
    Ok(1 + g.neighbors(u).iter().filter(|&&w| state.is_blue(w)).count())
}

/// Probability that blue `u` forces white neighbor `v` this step.
pub fn force_probability(g: &Graph, state: &ColorState, u: usize, v: usize, rule: ForcingRule) -> Result<f64> {
    g.check_vertex(v)?;
    let closed = closed_blue_count(g, state, u)?;
    if state.is_blue(v) {
        return Err(Error::Contract(format!("vertex {v} is already blue")));
    }
    if !g.has_edge(u, v) {
        return Err(Error::Contract(format!("vertices {u} and {v} are not adjacent")));
    }
    match rule {
        ForcingRule::Standard => Ok(closed as f64 / g.degree(u) as f64),
        ForcingRule::Constant(p) => Ok(p),
        other => Err(Error::UnsupportedRule(other.to_string())),
    }
}

/// Probability that white `v` turns blue this step:
/// `1 - prod over blue neighbors u of (1 - Pr[u -> v])`.
pub fn vertex_absorption_prob(g: &Graph, state: &ColorState, v: usize, rule: ForcingRule) -> Result<f64> {
    g.check_vertex(v)?;
    if state.is_blue(v) {
        return Err(Error::Contract(format!("vertex {v} is already blue")));
    }
    if !rule.is_edge_independent() {
        return Err(Error::UnsupportedRule(rule.to_string()));
    }
    let mut stay_white = 1.0;
    for &u in g.neighbors(v).iter().filter(|&&u| state.is_blue(u)) {
        stay_white *= 1.0 - force_probability(g, state, u, v, rule)?;
    }
    Ok(1.0 - stay_white)
}

/// Incremental process state: blue flags, blue-neighbor counts and the
/// frontier (white vertices with at least one blue neighbor).
struct Engine<'g> {
    g: &'g Graph,
    rule: ForcingRule,
    blue: Vec<bool>,
    blue_nbrs: Vec<u32>,
    n_blue: usize,
    frontier: Vec<usize>,
    in_frontier: Vec<bool>,
    marked: Vec<bool>,
    newly: Vec<usize>,
}

impl<'g> Engine<'g> {
    fn new(g: &'g Graph, rule: ForcingRule, state: &ColorState) -> Self {
        let n = g.n_vertices();
        let mut engine = Engine {
            g,
            rule,
            blue: vec![false; n],
            blue_nbrs: vec![0; n],
            n_blue: 0,
            frontier: Vec::new(),
            in_frontier: vec![false; n],
            marked: vec![false; n],
            newly: state.blue().iter().collect(),
        };
        engine.apply_newly();
        engine
    }

    fn done(&self) -> bool {
        self.n_blue == self.g.n_vertices()
    }

    fn apply_newly(&mut self) {
        let g = self.g;
        for &v in &self.newly {
            self.blue[v] = true;
            self.n_blue += 1;
            for &w in g.neighbors(v) {
                self.blue_nbrs[w] += 1;
                if !self.in_frontier[w] && !self.blue[w] {
                    self.in_frontier[w] = true;
                    self.frontier.push(w);
                }
            }
        }
        for &v in &self.newly {
            self.marked[v] = false;
        }
        let blue = &self.blue;
        self.frontier.retain(|&v| !blue[v]);
    }

    fn mark(marked: &mut [bool], newly: &mut Vec<usize>, v: usize) {
        if !marked[v] {
            marked[v] = true;
            newly.push(v);
        }
    }

    /// One synchronous step; returns whether any vertex turned blue.
    fn advance(&mut self, stream: &StepStream) -> bool {
        let g = self.g;
        let rule = self.rule;
        let Engine { blue, blue_nbrs, frontier, marked, newly, .. } = self;
        newly.clear();
        match rule {
            ForcingRule::Standard | ForcingRule::Constant(_) => {
                let constant = match rule {
                    ForcingRule::Constant(p) => Some(p),
                    _ => None,
                };
                for &v in frontier.iter() {
                    let base = g.arc_offset(v);
                    for (j, &u) in g.neighbors(v).iter().enumerate() {
                        if !blue[u] {
                            continue;
                        }
                        let p = constant.unwrap_or_else(|| (1 + blue_nbrs[u]) as f64 / g.degree(u) as f64);
                        // coins of the remaining edges into v cannot change the outcome
                        if stream.coin(base + j) < p {
                            newly.push(v);
                            break;
                        }
                    }
                }
            }
            ForcingRule::Classic => {
                for u in (0..g.n_vertices()).filter(|&u| blue[u]) {
                    if g.degree(u) - blue_nbrs[u] as usize == 1 {
                        if let Some(&w) = g.neighbors(u).iter().find(|&&w| !blue[w]) {
                            Self::mark(marked, newly, w);
                        }
                    }
                }
            }
            ForcingRule::Push | ForcingRule::Pull | ForcingRule::PushPull => {
                if matches!(rule, ForcingRule::Push | ForcingRule::PushPull) {
                    for u in (0..g.n_vertices()).filter(|&u| blue[u]) {
                        let deg = g.degree(u);
                        if deg > 0 {
                            let w = g.neighbors(u)[stream.push_choice(u, deg)];
                            if !blue[w] {
                                Self::mark(marked, newly, w);
                            }
                        }
                    }
                }
                if matches!(rule, ForcingRule::Pull | ForcingRule::PushPull) {
                    // a white vertex off the frontier can only pick white neighbors
                    for &v in frontier.iter() {
                        let u = g.neighbors(v)[stream.pull_choice(v, g.degree(v))];
                        if blue[u] {
                            Self::mark(marked, newly, v);
                        }
                    }
                }
            }
        }
        let changed = !self.newly.is_empty();
        self.apply_newly();
        changed
    }

    fn state(&self) -> ColorState {
        let mut set = VertexSet::empty(self.g.n_vertices());
        for v in (0..self.blue.len()).filter(|&v| self.blue[v]) {
            set.insert(v);
        }
        ColorState { blue: set }
    }
}

/// One synchronous step of `rule` from `state`, drawing from `stream`.
pub fn step(g: &Graph, state: &ColorState, rule: ForcingRule, stream: &StepStream) -> ColorState {
    let mut engine = Engine::new(g, rule, state);
    engine.advance(stream);
    engine.state()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// `None` when the process stalled or hit the step cutoff.
    pub propagation_time: Option<u64>,
    /// Blue-set size after each step; entry 0 is the initial size.
    pub blue_counts: Vec<usize>,
    pub trial_index: u64,
    pub seed: u64,
}

impl TrialRecord {
    pub fn terminated(&self) -> bool {
        self.propagation_time.is_some()
    }
}

pub fn default_max_steps(g: &Graph) -> u64 {
    1000 * g.n_vertices() as u64
}

/// Runs `rule` from `initial` until every vertex is blue, no further
/// progress is possible, or `max_steps` steps have elapsed. Step `t` draws
/// from `TrialStream::new(seed, trial_index).step(t)`.
pub fn run_trial(
    g: &Graph,
    initial: &ColorState,
    rule: ForcingRule,
    seed: u64,
    trial_index: u64,
    max_steps: u64,
) -> Result<TrialRecord> {
    if initial.blue().universe() != g.n_vertices() {
        return Err(Error::Contract("initial state belongs to a different graph".into()));
    }
    if initial.n_blue() == 0 {
        return Err(Error::Contract("initial blue set is empty".into()));
    }
    if max_steps == 0 {
        return Err(Error::Contract("max_steps must be at least 1".into()));
    }
    let stream = TrialStream::new(seed, trial_index);
    let mut engine = Engine::new(g, rule, initial);
    let mut blue_counts = vec![engine.n_blue];
    let mut t = 0;
    while !engine.done() && t < max_steps {
        // nothing white touches a blue vertex: no rule can make progress
        if engine.frontier.is_empty() {
            break;
        }
        t += 1;
        let changed = engine.advance(&stream.step(t));
        blue_counts.push(engine.n_blue);
        if !changed && rule == ForcingRule::Classic {
            break;
        }
    }
    Ok(TrialRecord { propagation_time: engine.done().then_some(t), blue_counts, trial_index, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{make_grid, make_hypercube, make_named_graph, parse_edge_list, GraphFamilySpec};

    fn graph(spec: &str) -> Graph {
        make_named_graph(&spec.parse().unwrap()).unwrap()
    }

    #[test]
    fn closed_counts() {
        let k3 = graph("complete:3");
        assert_eq!(closed_blue_count(&k3, &ColorState::new(&k3, &[0]).unwrap(), 0).unwrap(), 1);
        assert_eq!(closed_blue_count(&k3, &ColorState::new(&k3, &[0, 1]).unwrap(), 0).unwrap(), 2);
        let star = graph("star:4");
        assert_eq!(closed_blue_count(&star, &ColorState::new(&star, &[0, 2, 4]).unwrap(), 0).unwrap(), 3);
        assert!(closed_blue_count(&k3, &ColorState::new(&k3, &[0]).unwrap(), 1).is_err());
    }

    #[test]
    fn forcing_probabilities() {
        let k3 = graph("complete:3");
        let s = ColorState::new(&k3, &[0]).unwrap();
        assert_eq!(force_probability(&k3, &s, 0, 1, ForcingRule::Standard).unwrap(), 0.5);
        assert_eq!(force_probability(&k3, &s, 0, 1, ForcingRule::Constant(0.25)).unwrap(), 0.25);

        // exactly one white neighbor: classic rule recovered
        let g = make_grid(3, 3).unwrap();
        let s = ColorState::new(&g, &[0, 1]).unwrap();
        assert_eq!(force_probability(&g, &s, 0, 3, ForcingRule::Standard).unwrap(), 1.0);

        let p3 = graph("path:3");
        let s = ColorState::new(&p3, &[0]).unwrap();
        assert!(force_probability(&p3, &s, 0, 2, ForcingRule::Standard).is_err());
        assert!(force_probability(&p3, &s, 0, 1, ForcingRule::Push).is_err());
    }

    #[test]
    fn absorption() {
        let c4 = graph("cycle:4");
        let s = ColorState::new(&c4, &[0, 1]).unwrap();
        assert_eq!(vertex_absorption_prob(&c4, &s, 3, ForcingRule::Standard).unwrap(), 1.0);

        let two = parse_edge_list("n 3\n0 1").unwrap();
        let s = ColorState::new(&two, &[0]).unwrap();
        assert_eq!(vertex_absorption_prob(&two, &s, 2, ForcingRule::Standard).unwrap(), 0.0);

        let k3 = graph("complete:3");
        let s = ColorState::new(&k3, &[0, 1]).unwrap();
        // two coins of 1 each
        assert_eq!(vertex_absorption_prob(&k3, &s, 2, ForcingRule::Standard).unwrap(), 1.0);
        let c = vertex_absorption_prob(&k3, &s, 2, ForcingRule::Constant(0.25)).unwrap();
        assert!((c - (1.0 - 0.75f64 * 0.75)).abs() < 1e-15);

        // Q_n: each blue neighbor forces with probability >= 1/n
        let dim = 4;
        let q = make_hypercube(dim).unwrap();
        let s = ColorState::new(&q, &[1, 2, 4]).unwrap();
        let p = vertex_absorption_prob(&q, &s, 0, ForcingRule::Standard).unwrap();
        let n = dim as f64;
        assert!(p >= 1.0 - ((n - 1.0) / n).powi(3));
    }

    #[test]
    fn classic_step_on_path() {
        let p3 = graph("path:3");
        let s = ColorState::new(&p3, &[0]).unwrap();
        let next = step(&p3, &s, ForcingRule::Classic, &TrialStream::new(0, 0).step(1));
        assert_eq!(next, ColorState::new(&p3, &[0, 1]).unwrap());
    }

    #[test]
    fn full_state_is_fixed_point() {
        let g = make_grid(3, 4).unwrap();
        let all: Vec<_> = (0..12).collect();
        let s = ColorState::new(&g, &all).unwrap();
        for rule in [ForcingRule::Standard, ForcingRule::Push, ForcingRule::PushPull, ForcingRule::Classic] {
            assert_eq!(step(&g, &s, rule, &TrialStream::new(3, 1).step(1)), s);
        }
    }

    #[test]
    fn k3_one_step_distribution() {
        let k3 = graph("complete:3");
        let s = ColorState::new(&k3, &[0]).unwrap();
        let samples = 100_000u64;
        let mut freq = [0u64; 4];
        for i in 0..samples {
            let next = step(&k3, &s, ForcingRule::Standard, &TrialStream::new(42, i).step(1));
            freq[next.n_blue()] += 1;
        }
        for (size, expected) in [(1usize, 0.25), (2, 0.5), (3, 0.25)] {
            let phat = freq[size] as f64 / samples as f64;
            let se = (expected * (1.0 - expected) / samples as f64).sqrt();
            assert!((phat - expected).abs() < 3.0 * se, "size {size}: {phat}");
        }
    }

    #[test]
    fn trials() {
        let p2 = graph("path:2");
        let s = ColorState::new(&p2, &[0]).unwrap();
        for i in 0..50 {
            let rec = run_trial(&p2, &s, ForcingRule::Standard, 9, i, 100).unwrap();
            assert_eq!(rec.propagation_time, Some(1));
            assert_eq!(rec.blue_counts, vec![1, 2]);
        }

        let c4 = graph("cycle:4");
        let s = ColorState::new(&c4, &[0]).unwrap();
        let rec = run_trial(&c4, &s, ForcingRule::Classic, 1, 0, default_max_steps(&c4)).unwrap();
        assert_eq!(rec.propagation_time, None);

        let q5 = make_hypercube(5).unwrap();
        let s = ColorState::new(&q5, &[0]).unwrap();
        let a = run_trial(&q5, &s, ForcingRule::Standard, 5, 17, 1000).unwrap();
        let b = run_trial(&q5, &s, ForcingRule::Standard, 5, 17, 1000).unwrap();
        assert_eq!(a, b);

        assert!(run_trial(&q5, &ColorState::new(&q5, &[]).unwrap(), ForcingRule::Standard, 0, 0, 10).is_err());
        assert!(run_trial(&q5, &s, ForcingRule::Standard, 0, 0, 0).is_err());
    }

    #[test]
    fn cutoff_and_disconnected() {
        let g = parse_edge_list("n 3\n0 1").unwrap();
        let s = ColorState::new(&g, &[0]).unwrap();
        let rec = run_trial(&g, &s, ForcingRule::Standard, 0, 0, 50).unwrap();
        assert_eq!(rec.propagation_time, None);
        assert_eq!(*rec.blue_counts.last().unwrap(), 2);

        let g = make_named_graph(&GraphFamilySpec::Path(50)).unwrap();
        let s = ColorState::new(&g, &[0]).unwrap();
        let rec = run_trial(&g, &s, ForcingRule::Standard, 0, 0, 3).unwrap();
        assert_eq!(rec.propagation_time, None);
        assert_eq!(rec.blue_counts.len(), 4);
    }

    #[test]
    fn rule_strings() {
        for s in ["standard", "constant:0.25", "push", "pull", "pushpull", "classic", "constant:1"] {
            assert_eq!(s.parse::<ForcingRule>().unwrap().to_string(), s);
        }
        assert!(matches!("constant:1.5".parse::<ForcingRule>(), Err(Error::ProbabilityRange(_))));
        assert!("constant:x".parse::<ForcingRule>().is_err());
        assert!("gossip".parse::<ForcingRule>().is_err());
        let json = serde_json::to_string(&ForcingRule::Constant(0.25)).unwrap();
        assert_eq!(json, "\"constant:0.25\"");
        assert_eq!(serde_json::from_str::<ForcingRule>(&json).unwrap(), ForcingRule::Constant(0.25));
    }
}
