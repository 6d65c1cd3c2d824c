//! Positive-association and stochastic-domination checks for distributions
//! on finite posets of integer vectors under the componentwise order.

use std::collections::VecDeque;

use petgraph::algo::dinics;
use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::visit::EdgeRef;

use crate::dist::ExactDistribution;

/// Outcome of an exhaustive inequality check: the smallest value of
/// `lhs - rhs` seen, and where it was seen.
#[derive(Clone, Debug, PartialEq)]
pub struct SlackReport {
    pub checked: u64,
    pub worst_slack: f64,
    pub witness: Option<String>,
}

impl SlackReport {
    pub fn new() -> SlackReport {
        SlackReport { checked: 0, worst_slack: f64::INFINITY, witness: None }
    }

    pub fn record(&mut self, slack: f64, witness: impl FnOnce() -> String) {
        self.checked += 1;
        if slack < self.worst_slack {
            self.worst_slack = slack;
            self.witness = Some(witness());
        }
    }

    pub fn merge(&mut self, other: SlackReport) {
        self.checked += other.checked;
        if other.worst_slack < self.worst_slack {
            self.worst_slack = other.worst_slack;
            self.witness = other.witness;
        }
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.worst_slack >= -tol
    }
}

impl Default for SlackReport {
    fn default() -> Self {
        SlackReport::new()
    }
}

pub fn leq(x: &[i64], y: &[i64]) -> bool {
    x.iter().zip(y).all(|(a, b)| a <= b)
}

pub fn join(x: &[i64], y: &[i64]) -> Vec<i64> {
    x.iter().zip(y).map(|(a, b)| *a.max(b)).collect()
}

pub fn meet(x: &[i64], y: &[i64]) -> Vec<i64> {
    x.iter().zip(y).map(|(a, b)| *a.min(b)).collect()
}

/// `μ(x∨y) μ(x∧y) - μ(x) μ(y)` over every unordered pair of the support.
/// Pairs outside the support contribute a nonnegative slack and are skipped.
pub fn lattice_condition(dist: &ExactDistribution) -> SlackReport {
    let probs = dist.probs();
    let mut report = SlackReport::new();
    for i in 0..dist.len() {
        for j in i..dist.len() {
            let (x, y) = (&dist.support[i], &dist.support[j]);
            let slack = dist.prob_of(&join(x, y)) * dist.prob_of(&meet(x, y)) - probs[i] * probs[j];
            report.record(slack, || format!("x={x:?} y={y:?}"));
        }
    }
    report
}

/// `P[A∩B] - P[A] P[B]` for every pair of events in `events`.
pub fn correlation_pairs(dist: &ExactDistribution, events: &[Vec<bool>], names: &[String]) -> SlackReport {
    let probs = dist.probs();
    let p: Vec<f64> = events
        .iter()
        .map(|e| e.iter().zip(&probs).filter(|(b, _)| **b).map(|(_, p)| p).sum())
        .collect();
    let mut report = SlackReport::new();
    for a in 0..events.len() {
        for b in a..events.len() {
            let both: f64 = (0..probs.len()).filter(|&k| events[a][k] && events[b][k]).map(|k| probs[k]).sum();
            report.record(both - p[a] * p[b], || format!("A={} B={}", names[a], names[b]));
        }
    }
    report
}

/// Smallest value of `upper[A] - lower[A]` over increasing events `A`, with
/// the minimal elements of a minimizing event. Zero is always attainable
/// (take `A` empty), so the result is at most zero; domination of `lower` by
/// `upper` is the statement that it is zero.
pub fn domination_gap(upper: &ExactDistribution, lower: &ExactDistribution) -> (f64, Vec<Vec<i64>>) {
    let mut points: Vec<Vec<i64>> = upper.support.iter().chain(&lower.support).cloned().collect();
    points.sort();
    points.dedup();
    // Fixed-point weights keep the cut computation exact.
    const SCALE: f64 = (1u128 << 80) as f64;
    let q = |x: f64| (x * SCALE).round() as i128;
    let value: Vec<i128> = points.iter().map(|x| q(lower.prob_of(x)) - q(upper.prob_of(x))).collect();

    // Maximum-weight closure: a point in the event drags in everything above it.
    let mut g = DiGraph::<(), u128>::new();
    let src = g.add_node(());
    let dst = g.add_node(());
    let nodes: Vec<NodeIndex> = points.iter().map(|_| g.add_node(())).collect();
    let big = u128::MAX / 4;
    let mut positive: u128 = 0;
    for (k, &v) in value.iter().enumerate() {
        if v > 0 {
            g.add_edge(src, nodes[k], v as u128);
            positive += v as u128;
        } else if v < 0 {
            g.add_edge(nodes[k], dst, (-v) as u128);
        }
    }
    for (i, x) in points.iter().enumerate() {
        for (j, y) in points.iter().enumerate() {
            if i != j && leq(x, y) {
                g.add_edge(nodes[i], nodes[j], big);
            }
        }
    }
    let (cut, flows) = dinics(&g, src, dst);
    let best = positive - cut;

    // Source side of the residual graph is a maximizing closure.
    let mut seen = vec![false; g.node_count()];
    seen[src.index()] = true;
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        for e in g.edges_directed(u, petgraph::Direction::Outgoing) {
            if flows[e.id().index()] < *e.weight() && !seen[e.target().index()] {
                seen[e.target().index()] = true;
                queue.push_back(e.target());
            }
        }
        for e in g.edges_directed(u, petgraph::Direction::Incoming) {
            if flows[e.id().index()] > 0 && !seen[e.source().index()] {
                seen[e.source().index()] = true;
                queue.push_back(e.source());
            }
        }
    }
    let chosen: Vec<&Vec<i64>> =
        points.iter().enumerate().filter(|(k, _)| seen[nodes[*k].index()]).map(|(_, x)| x).collect();
    let minimal: Vec<Vec<i64>> = chosen
        .iter()
        .filter(|x| !chosen.iter().any(|y| y != *x && leq(y, x)))
        .map(|x| (*x).clone())
        .collect();
    (-(best as f64) / SCALE, minimal)
}

/// Every up-set of the Boolean lattice on `k` coordinates, as a bitmask over
/// the `2^k` points (point `p` has coordinate `i` set when bit `i` of `p` is).
pub fn boolean_upsets(k: usize) -> Vec<u64> {
    assert!(k <= 6, "up-set masks are limited to 64 points");
    if k == 0 {
        return vec![0, 1];
    }
    let lower = boolean_upsets(k - 1);
    let half = 1usize << (k - 1);
    let mut out = Vec::new();
    // Points with the top coordinate clear in the event force the same
    // points with it set.
    for &f0 in &lower {
        for &f1 in &lower {
            if f0 & !f1 == 0 {
                out.push(f0 | (f1 << half));
            }
        }
    }
    out.sort_unstable();
    out
}

/// `P[A∩B] - P[A] P[B]` over every pair of up-sets of `{0,1}^k`, for a
/// distribution given by its point masses.
pub fn all_upset_pairs(k: usize, mass: &[f64]) -> SlackReport {
    assert_eq!(mass.len(), 1 << k);
    let ups = boolean_upsets(k);
    let bytes = mass.len().div_ceil(8);
    // Sum of masses selected by each byte of a mask.
    let tables: Vec<[f64; 256]> = (0..bytes)
        .map(|b| {
            let mut t = [0.0; 256];
            for (m, slot) in t.iter_mut().enumerate() {
                *slot = (0..8).filter(|i| m >> i & 1 == 1).filter_map(|i| mass.get(8 * b + i)).sum();
            }
            t
        })
        .collect();
    let measure = |mask: u64| -> f64 { (0..bytes).map(|b| tables[b][(mask >> (8 * b)) as usize & 0xff]).sum() };
    let p: Vec<f64> = ups.iter().map(|&u| measure(u)).collect();
    let mut report = SlackReport::new();
    for a in 0..ups.len() {
        for b in a..ups.len() {
            let slack = measure(ups[a] & ups[b]) - p[a] * p[b];
            report.checked += 1;
            if slack < report.worst_slack {
                report.worst_slack = slack;
                report.witness = Some(format!("A={:#x} B={:#x}", ups[a], ups[b]));
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(items: Vec<(Vec<i64>, f64)>) -> ExactDistribution {
        ExactDistribution::from_log_weights("t", "", items.into_iter().map(|(c, p)| (c, p.ln())).collect())
            .unwrap()
    }

    #[test]
    fn dedekind_numbers() {
        let counts: Vec<usize> = (0..=5).map(|k| boolean_upsets(k).len()).collect();
        assert_eq!(counts, vec![2, 3, 6, 20, 168, 7581]);
    }

    #[test]
    fn product_measure_satisfies_lattice_condition() {
        let d = dist(vec![(vec![0, 0], 0.12), (vec![0, 1], 0.28), (vec![1, 0], 0.18), (vec![1, 1], 0.42)]);
        assert!(lattice_condition(&d).holds(1e-15));
        let mass: Vec<f64> = [[0, 0], [1, 0], [0, 1], [1, 1]].iter().map(|c| d.prob_of(c)).collect();
        assert!(all_upset_pairs(2, &mass).holds(1e-15));
    }

    #[test]
    fn anticorrelated_measure_fails() {
        let d = dist(vec![(vec![0, 1], 0.5), (vec![1, 0], 0.5)]);
        assert!(lattice_condition(&d).worst_slack < -0.2);
    }

    #[test]
    fn domination_gap_detects_order() {
        let low = dist(vec![(vec![0], 0.7), (vec![1], 0.2), (vec![2], 0.1)]);
        let high = dist(vec![(vec![0], 0.2), (vec![1], 0.3), (vec![2], 0.5)]);
        assert!(domination_gap(&high, &low).0.abs() < 1e-15);
        let (gap, witness) = domination_gap(&low, &high);
        assert!((gap + 0.5).abs() < 1e-15, "{gap}");
        assert_eq!(witness, vec![vec![1]]);
    }

    #[test]
    fn domination_gap_on_incomparable_points() {
        let p = dist(vec![(vec![1, 0], 1.0)]);
        let q = dist(vec![(vec![0, 1], 1.0)]);
        let (gap, witness) = domination_gap(&p, &q);
        assert!((gap + 1.0).abs() < 1e-15);
        assert_eq!(witness, vec![vec![0, 1]]);
    }
}
