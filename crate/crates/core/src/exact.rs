//! Exact expected propagation time on small graphs.
//!
//! The process is an absorbing Markov chain on blue sets. Blue sets only
//! grow, so apart from self-loops the chain is acyclic and expectations can
//! be eliminated in decreasing-cardinality order:
//!
//! ```text
//! E[B] = (1 + sum_{S != {}} P(S | B) E[B u S]) / (1 - P({} | B))
//! ```
//!
//! where `S` ranges over subsets of the frontier `F(B)` (white vertices with
//! a blue neighbor). Edge coins are independent and no two white vertices
//! share a coin, so frontier vertices turn blue independently and
//! `P(S | B)` is a product of per-vertex absorption probabilities.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forcing::ForcingRule;
use crate::graph::Graph;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactConfig {
    pub max_vertices: usize,
    /// Largest frontier a single state may have.
    pub max_frontier: usize,
    /// Total subset transitions enumerated while exploring the chain.
    pub max_transitions: u64,
    /// The tail is extended until `P(T > t)` falls below this.
    pub tail_epsilon: f64,
    pub t_max_cap: usize,
    /// Vertex limit for the exact rational mode.
    pub max_rational_vertices: usize,
}

impl Default for ExactConfig {
    fn default() -> Self {
        ExactConfig {
            max_vertices: 20,
            max_frontier: 20,
            max_transitions: 100_000_000,
            tail_epsilon: 1e-12,
            t_max_cap: 10_000,
            max_rational_vertices: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactResult {
    pub expected_time: f64,
    /// `tail[t] = P(T > t)` for `t = 0..tail.len()`.
    pub tail: Vec<f64>,
    /// True when `t_max_cap` stopped the tail before it fell below epsilon.
    pub tail_truncated: bool,
    pub states: usize,
    pub transitions: u64,
}

/// Arithmetic the chain solver needs; implemented for `f64` (with
/// compensated summation) and for exact rationals.
pub trait Scalar: Clone + Num {
    fn ratio(num: usize, den: usize) -> Self;
    fn from_probability(p: f64) -> Result<Self>;
    fn sum<I: IntoIterator<Item = Self>>(terms: I) -> Self;
}

impl Scalar for f64 {
    fn ratio(num: usize, den: usize) -> Self {
        num as f64 / den as f64
    }

    fn from_probability(p: f64) -> Result<Self> {
        Ok(p)
    }

    // Neumaier summation
    fn sum<I: IntoIterator<Item = Self>>(terms: I) -> Self {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for x in terms {
            let t = sum + x;
            if sum.abs() >= x.abs() {
                comp += (sum - t) + x;
            } else {
                comp += (x - t) + sum;
            }
            sum = t;
        }
        sum + comp
    }
}

impl Scalar for BigRational {
    fn ratio(num: usize, den: usize) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_probability(p: f64) -> Result<Self> {
        BigRational::from_float(p).ok_or(Error::ProbabilityRange(p))
    }

    fn sum<I: IntoIterator<Item = Self>>(terms: I) -> Self {
        terms.into_iter().fold(Self::zero(), |acc, x| acc + x)
    }
}

/// Blue sets as bitmasks over at most 32 vertices.
struct Chain<T> {
    n: usize,
    neighbors: Vec<u32>,
    degree: Vec<usize>,
    constant: Option<T>,
    full: u32,
}

impl<T: Scalar> Chain<T> {
    fn new(g: &Graph, rule: ForcingRule) -> Result<Self> {
        let constant = match rule {
            ForcingRule::Standard => None,
            ForcingRule::Constant(p) => Some(T::from_probability(p)?),
            other => return Err(Error::UnsupportedRule(other.to_string())),
        };
        let n = g.n_vertices();
        let neighbors = (0..n).map(|v| g.neighbors(v).iter().fold(0u32, |m, &w| m | 1 << w)).collect();
        Ok(Chain {
            n,
            neighbors,
            degree: g.degrees(),
            constant,
            full: if n == 32 { u32::MAX } else { (1u32 << n) - 1 },
        })
    }

    /// Frontier vertices of `blue` with their absorption probabilities.
    fn frontier(&self, blue: u32) -> Vec<(usize, T)> {
        let mut out = Vec::new();
        for v in (0..self.n).filter(|&v| blue >> v & 1 == 0) {
            let blue_nbrs = self.neighbors[v] & blue;
            if blue_nbrs == 0 {
                continue;
            }
            let mut stay = T::one();
            for u in (0..self.n).filter(|&u| blue_nbrs >> u & 1 == 1) {
                let q = match &self.constant {
                    Some(p) => p.clone(),
                    None => {
                        let closed = 1 + (self.neighbors[u] & blue).count_ones() as usize;
                        T::ratio(closed, self.degree[u])
                    }
                };
                stay = stay * (T::one() - q);
            }
            out.push((v, T::one() - stay));
        }
        out
    }

    /// Every subset of the frontier as `(added vertices, probability)`;
    /// entry 0 is the empty subset.
    fn outcomes(frontier: &[(usize, T)]) -> Vec<(u32, T)> {
        let mut out = Vec::with_capacity(1 << frontier.len());
        out.push((0u32, T::one()));
        for (v, p) in frontier {
            let miss = T::one() - p.clone();
            let len = out.len();
            for i in 0..len {
                let (mask, prob) = out[i].clone();
                out.push((mask | 1 << v, prob.clone() * p.clone()));
                out[i].1 = prob * miss.clone();
            }
        }
        out
    }
}

struct Explored<T> {
    /// Reachable blue sets, sorted by decreasing cardinality.
    states: Vec<u32>,
    frontiers: Vec<Vec<(usize, T)>>,
    index: HashMap<u32, usize>,
    transitions: u64,
}

fn validate(g: &Graph, initial: &[usize], max_vertices: usize) -> Result<u32> {
    let n = g.n_vertices();
    if n > max_vertices.min(32) {
        return Err(Error::BudgetExceeded(format!("{n} vertices exceeds the limit of {}", max_vertices.min(32))));
    }
    if initial.is_empty() {
        return Err(Error::Contract("initial blue set is empty".into()));
    }
    let mut mask = 0u32;
    for &v in initial {
        g.check_vertex(v)?;
        mask |= 1 << v;
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    Ok(mask)
}

fn explore<T: Scalar>(chain: &Chain<T>, start: u32, config: &ExactConfig) -> Result<Explored<T>> {
    let mut frontier_of: HashMap<u32, Vec<(usize, T)>> = HashMap::new();
    let mut stack = vec![start];
    let mut transitions = 0u64;
    while let Some(blue) = stack.pop() {
        if frontier_of.contains_key(&blue) {
            continue;
        }
        let frontier = chain.frontier(blue);
        if frontier.len() > config.max_frontier {
            return Err(Error::BudgetExceeded(format!(
                "frontier of {} vertices exceeds the limit of {}",
                frontier.len(),
                config.max_frontier
            )));
        }
        if blue != chain.full {
            transitions += 1 << frontier.len();
            if transitions > config.max_transitions {
                return Err(Error::BudgetExceeded(format!("more than {} transitions", config.max_transitions)));
            }
            let frontier_mask = frontier.iter().fold(0u32, |m, (v, _)| m | 1 << v);
            // successors are blue | S for every nonempty S within the frontier
            let mut sub = frontier_mask;
            while sub != 0 {
                if !frontier_of.contains_key(&(blue | sub)) {
                    stack.push(blue | sub);
                }
                sub = (sub - 1) & frontier_mask;
            }
        }
        frontier_of.insert(blue, frontier);
    }
    let mut states: Vec<u32> = frontier_of.keys().copied().collect();
    states.sort_unstable_by(|a, b| b.count_ones().cmp(&a.count_ones()).then(a.cmp(b)));
    let index = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let frontiers = states.iter().map(|s| frontier_of.remove(s).unwrap_or_default()).collect();
    Ok(Explored { states, frontiers, index, transitions })
}

fn expectations<T: Scalar>(chain: &Chain<T>, explored: &Explored<T>) -> Result<Vec<T>> {
    let mut expected: Vec<T> = vec![T::zero(); explored.states.len()];
    for (i, &blue) in explored.states.iter().enumerate() {
        if blue == chain.full {
            continue;
        }
        let outcomes = Chain::outcomes(&explored.frontiers[i]);
        let stay = outcomes[0].1.clone();
        let leave = T::one() - stay;
        if leave.is_zero() {
            return Err(Error::Contract("forcing probabilities are zero; the process never finishes".into()));
        }
        let terms =
            outcomes[1..].iter().map(|(added, p)| p.clone() * expected[explored.index[&(blue | added)]].clone());
        let numerator = T::sum(std::iter::once(T::one()).chain(terms));
        expected[i] = numerator / leave;
    }
    Ok(expected)
}

fn tail(chain: &Chain<f64>, explored: &Explored<f64>, start: u32, config: &ExactConfig) -> (Vec<f64>, bool) {
    let outcomes: Vec<Vec<(usize, f64)>> = explored
        .states
        .iter()
        .zip(&explored.frontiers)
        .map(|(&blue, frontier)| {
            Chain::outcomes(frontier).into_iter().map(|(added, p)| (explored.index[&(blue | added)], p)).collect()
        })
        .collect();
    let full = explored.index.get(&chain.full).copied();
    let mut mass = vec![0.0; explored.states.len()];
    mass[explored.index[&start]] = 1.0;
    let alive = |mass: &[f64]| 1.0 - full.map_or(0.0, |f| mass[f]);
    let mut tail = vec![alive(&mass)];
    while *tail.last().unwrap_or(&0.0) >= config.tail_epsilon {
        if tail.len() > config.t_max_cap {
            return (tail, true);
        }
        let mut next = vec![0.0; mass.len()];
        for (i, &m) in mass.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            if Some(i) == full {
                next[i] += m;
                continue;
            }
            for &(j, p) in &outcomes[i] {
                next[j] += m * p;
            }
        }
        mass = next;
        // summing the transient states keeps precision once the tail is tiny
        let transient = f64::sum(mass.iter().enumerate().filter(|(i, _)| Some(*i) != full).map(|(_, &m)| m));
        tail.push(transient);
    }
    (tail, false)
}

pub fn exact_ept(g: &Graph, initial: &[usize], rule: ForcingRule) -> Result<ExactResult> {
    exact_ept_with(g, initial, rule, &ExactConfig::default())
}

pub fn exact_ept_with(g: &Graph, initial: &[usize], rule: ForcingRule, config: &ExactConfig) -> Result<ExactResult> {
    let start = validate(g, initial, config.max_vertices)?;
    let chain = Chain::<f64>::new(g, rule)?;
    let explored = explore(&chain, start, config)?;
    let expected = expectations(&chain, &explored)?;
    let (tail, tail_truncated) = tail(&chain, &explored, start, config);
    Ok(ExactResult {
        expected_time: expected[explored.index[&start]],
        tail,
        tail_truncated,
        states: explored.states.len(),
        transitions: explored.transitions,
    })
}

/// Exact rational expectation, for graphs within `max_rational_vertices`.
pub fn exact_ept_rational(g: &Graph, initial: &[usize], rule: ForcingRule) -> Result<BigRational> {
    let config = ExactConfig::default();
    if g.n_vertices() > config.max_rational_vertices {
        return Err(Error::BudgetExceeded(format!(
            "rational mode is limited to {} vertices",
            config.max_rational_vertices
        )));
    }
    let start = validate(g, initial, config.max_vertices)?;
    let chain = Chain::<BigRational>::new(g, rule)?;
    let explored = explore(&chain, start, &config)?;
    let expected = expectations(&chain, &explored)?;
    Ok(expected[explored.index[&start]].clone())
}

/// Minimizing single-vertex start. Values within a relative `1e-12` of the
/// current best count as ties, which go to the lower index.
pub fn exact_ept_min_over_starts(g: &Graph, rule: ForcingRule) -> Result<(usize, ExactResult)> {
    let mut best: Option<(usize, ExactResult)> = None;
    for v in 0..g.n_vertices() {
        let result = exact_ept(g, &[v], rule)?;
        let better = match &best {
            None => true,
            Some((_, b)) => result.expected_time < b.expected_time - 1e-12 * b.expected_time.abs().max(1.0),
        };
        if better {
            best = Some((v, result));
        }
    }
    best.ok_or_else(|| Error::Contract("graph has no vertices".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{eccentricity, make_grid, make_named_graph, parse_edge_list};

    fn graph(spec: &str) -> Graph {
        make_named_graph(&spec.parse().unwrap()).unwrap()
    }

    fn rational(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    // Hand-solved chains.
    // K3 from one vertex: E1 = (1 + 1/2 * E2) / (3/4) with E2 = 1, so E1 = 2.
    // C4 from one vertex: both "one new" and "two new" outcomes finish in
    // exactly one more step, so E1 = (1 + 1/2 + 1/4) / (3/4) = 7/3.
    #[test]
    fn golden_values() {
        let k3 = graph("complete:3");
        let c4 = graph("cycle:4");
        let p2 = graph("path:2");
        assert!((exact_ept(&k3, &[0], ForcingRule::Standard).unwrap().expected_time - 2.0).abs() < 1e-12);
        assert!((exact_ept(&c4, &[2], ForcingRule::Standard).unwrap().expected_time - 7.0 / 3.0).abs() < 1e-12);
        assert_eq!(exact_ept(&p2, &[0], ForcingRule::Standard).unwrap().expected_time, 1.0);

        assert_eq!(exact_ept_rational(&k3, &[0], ForcingRule::Standard).unwrap(), rational(2, 1));
        assert_eq!(exact_ept_rational(&c4, &[0], ForcingRule::Standard).unwrap(), rational(7, 3));
    }

    #[test]
    fn constant_rule_on_paths() {
        // each of the n-1 forces on a path takes a geometric(p) number of steps
        let p5 = graph("path:5");
        let e = exact_ept_rational(&p5, &[0], ForcingRule::Constant(0.25)).unwrap();
        assert_eq!(e, rational(16, 1));
        let r = exact_ept(&p5, &[0], ForcingRule::Constant(0.25)).unwrap();
        assert!((r.expected_time - 16.0).abs() < 1e-10);
    }

    #[test]
    fn tails_are_consistent() {
        for spec in ["cycle:5", "star:3", "grid:2,3", "complete:4"] {
            let g = graph(spec);
            for rule in [ForcingRule::Standard, ForcingRule::Constant(0.25)] {
                let r = exact_ept(&g, &[0], rule).unwrap();
                assert!(!r.tail_truncated);
                assert_eq!(r.tail[0], 1.0);
                assert!(r.tail.windows(2).all(|w| w[1] <= w[0] + 1e-15));
                assert!(*r.tail.last().unwrap() < 1e-12);
                let area = f64::sum(r.tail.iter().copied());
                assert!((area - r.expected_time).abs() < 1e-9, "{spec} {rule}: {area} vs {}", r.expected_time);
                assert!(r.expected_time >= eccentricity(&g, 0).unwrap() as f64);
            }
        }
    }

    #[test]
    fn min_over_starts() {
        let (v, r) = exact_ept_min_over_starts(&graph("complete:3"), ForcingRule::Standard).unwrap();
        assert_eq!(v, 0);
        assert!((r.expected_time - 2.0).abs() < 1e-12);
        let (v, r) = exact_ept_min_over_starts(&graph("cycle:4"), ForcingRule::Standard).unwrap();
        assert_eq!(v, 0);
        assert!((r.expected_time - 7.0 / 3.0).abs() < 1e-12);

        // P3: the end start is deterministic (two forced steps); the middle
        // start satisfies E = 1 + E/4 + 1/2, so E = 2 as well. Exact tie.
        let p3 = graph("path:3");
        assert_eq!(exact_ept_rational(&p3, &[0], ForcingRule::Standard).unwrap(), rational(2, 1));
        assert_eq!(exact_ept_rational(&p3, &[1], ForcingRule::Standard).unwrap(), rational(2, 1));
        assert_eq!(exact_ept_min_over_starts(&p3, ForcingRule::Standard).unwrap().0, 0);
    }

    #[test]
    fn rejections() {
        let q = graph("hypercube:10");
        assert!(matches!(exact_ept(&q, &[0], ForcingRule::Standard), Err(Error::BudgetExceeded(_))));
        let k = graph("complete:20");
        let tight = ExactConfig { max_transitions: 1_000_000, ..ExactConfig::default() };
        assert!(matches!(exact_ept_with(&k, &[0], ForcingRule::Standard, &tight), Err(Error::BudgetExceeded(_))));
        let split = parse_edge_list("n 3\n0 1").unwrap();
        assert_eq!(exact_ept(&split, &[0], ForcingRule::Standard), Err(Error::Disconnected));
        let p3 = graph("path:3");
        assert!(matches!(exact_ept(&p3, &[0], ForcingRule::Push), Err(Error::UnsupportedRule(_))));
        assert!(exact_ept(&p3, &[0], ForcingRule::Constant(0.0)).is_err());
        assert!(exact_ept(&p3, &[], ForcingRule::Standard).is_err());
        assert!(exact_ept_rational(&graph("path:7"), &[0], ForcingRule::Standard).is_err());
    }

    #[test]
    fn full_initial_set() {
        let g = make_grid(2, 2).unwrap();
        let r = exact_ept(&g, &[0, 1, 2, 3], ForcingRule::Standard).unwrap();
        assert_eq!(r.expected_time, 0.0);
        assert_eq!(r.tail, vec![0.0]);
    }
}
