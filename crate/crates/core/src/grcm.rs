//! Generalized random-cluster model: bonds carry a pair `(n_σ, n_τ)` of
//! occupation bits, weighted by a per-bond channel table and by
//! `q_σ^{N_σ} q_τ^{N_τ}` where `N_σ`, `N_τ` count the clusters of the
//! σ-open and τ-open bonds.
//!
//! Channel tables are stored as `[a_0, a_σ, a_τ, a_στ]` for the occupations
//! `(0,0)`, `(1,0)`, `(0,1)` and `(1,1)`. Bond configurations are encoded
//! `[n_σ(b_0), n_τ(b_0), n_σ(b_1), ...]` and ordered componentwise.
//!
//! The `++` boundary condition adds a ghost vertex joined to each site once
//! per missing edge neighbour; every cluster touching the ghost is one
//! cluster.
//!
//! The module also holds the cubic model on the sites of a domain, whose
//! `q_σ = q_τ = 2` case is the Ashkin-Teller model.

use std::collections::BTreeMap;

use petgraph::unionfind::UnionFind;

use crate::ashkinteller::site_bonds;
use crate::dist::ExactDistribution;
use crate::error::{Error, Result};
use crate::lattice::Domain;
use crate::monotone::{domination_gap, SlackReport};

/// Bonds for which [`nu_measure`] materializes every configuration.
pub const NU_MAX_BONDS: usize = 10;
/// Bonds for which [`nu_event_prob`] streams every configuration.
pub const NU_STREAM_MAX_BONDS: usize = 13;
/// Bonds for the exhaustive pair check of [`fkg_lattice_check_grcm`].
pub const FKG_MAX_BONDS: usize = 8;
/// Bonds for [`comparison_check`].
pub const COMPARE_MAX_BONDS: usize = 6;
/// Parallel-bond bundles for [`connection_probabilities`].
pub const ES_MAX_BUNDLES: usize = 13;
/// Spin configurations for [`cubic_measure`].
pub const CUBIC_MAX_STATES: u64 = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GrcmBoundary {
    Free,
    /// `++`: ghost-wired boundary.
    Wired,
}

/// A multigraph on `vertices` vertices. When `ghost` is set, that vertex
/// stands for the exterior.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BondGraph {
    pub vertices: usize,
    pub ghost: Option<usize>,
    pub bonds: Vec<(usize, usize)>,
}

impl BondGraph {
    pub fn new(vertices: usize, bonds: Vec<(usize, usize)>) -> Result<BondGraph> {
        if let Some(&(p, q)) = bonds.iter().find(|(p, q)| *p >= vertices || *q >= vertices) {
            return Err(Error::InvalidParameter(format!("bond ({p},{q}) leaves the {vertices} vertices")));
        }
        Ok(BondGraph { vertices, ghost: None, bonds })
    }

    /// Sites are faces; bonds join edge-adjacent faces. The wired variant
    /// appends vertex `num_faces` as the ghost.
    pub fn from_domain(domain: &Domain, boundary: GrcmBoundary) -> BondGraph {
        let n = domain.num_faces();
        let wired = boundary == GrcmBoundary::Wired;
        let bonds = site_bonds(domain)
            .into_iter()
            .filter_map(|(p, q)| match q {
                Some(q) => Some((p, q)),
                None if wired => Some((p, n)),
                None => None,
            })
            .collect();
        BondGraph { vertices: n + usize::from(wired), ghost: wired.then_some(n), bonds }
    }

    pub fn num_bonds(&self) -> usize {
        self.bonds.len()
    }

    /// Vertices other than the ghost.
    pub fn sites(&self) -> usize {
        self.vertices - usize::from(self.ghost.is_some())
    }

    /// Bonds grouped by unordered endpoint pair, in order of first bond.
    pub fn bundles(&self) -> Vec<((usize, usize), Vec<usize>)> {
        let mut order: Vec<(usize, usize)> = Vec::new();
        let mut groups: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (k, &(p, q)) in self.bonds.iter().enumerate() {
            let key = (p.min(q), p.max(q));
            let entry = groups.entry(key).or_default();
            if entry.is_empty() {
                order.push(key);
            }
            entry.push(k);
        }
        order.into_iter().map(|key| (key, groups.remove(&key).unwrap())).collect()
    }
}

/// Number of clusters of the bonds selected by `mask`.
pub fn cluster_count(graph: &BondGraph, mask: u64) -> usize {
    let mut uf = UnionFind::<usize>::new(graph.vertices);
    let mut merged = 0;
    for (k, &(p, q)) in graph.bonds.iter().enumerate() {
        if mask >> k & 1 == 1 && uf.union(p, q) {
            merged += 1;
        }
    }
    graph.vertices - merged
}

pub fn cluster_labels(graph: &BondGraph, mask: u64) -> Vec<usize> {
    let mut uf = UnionFind::<usize>::new(graph.vertices);
    for (k, &(p, q)) in graph.bonds.iter().enumerate() {
        if mask >> k & 1 == 1 {
            uf.union(p, q);
        }
    }
    uf.into_labeling()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BondConfig {
    /// Bit `b` is `n_σ(b)`.
    pub sigma: u64,
    /// Bit `b` is `n_τ(b)`.
    pub tau: u64,
}

impl BondConfig {
    pub fn channel(&self, b: usize) -> usize {
        ((self.sigma >> b & 1) | (self.tau >> b & 1) << 1) as usize
    }

    pub fn encode(&self, bonds: usize) -> Vec<i64> {
        (0..bonds).flat_map(|b| [(self.sigma >> b & 1) as i64, (self.tau >> b & 1) as i64]).collect()
    }

    pub fn decode(code: &[i64]) -> BondConfig {
        let mut c = BondConfig { sigma: 0, tau: 0 };
        for (b, pair) in code.chunks(2).enumerate() {
            c.sigma |= (pair[0] as u64) << b;
            c.tau |= (pair[1] as u64) << b;
        }
        c
    }
}

/// Which side of `a_στ a_0 = a_σ a_τ` a bond lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BondClass {
    /// `a_στ a_0 ≥ a_σ a_τ`.
    Greater,
    Less,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrcmParams {
    pub channels: Vec<[f64; 4]>,
    pub q_sigma: f64,
    pub q_tau: f64,
}

impl GrcmParams {
    pub fn new(channels: Vec<[f64; 4]>, q_sigma: f64, q_tau: f64) -> Result<GrcmParams> {
        for (b, ch) in channels.iter().enumerate() {
            if ch.iter().any(|a| !a.is_finite() || *a < 0.0) {
                return Err(Error::InvalidParameter(format!("bond {b}: channel weights must be finite and ≥ 0")));
            }
            if ch.iter().all(|a| *a == 0.0) {
                return Err(Error::InvalidParameter(format!("bond {b}: every channel weight is zero")));
            }
        }
        if !(q_sigma > 0.0 && q_tau > 0.0 && q_sigma.is_finite() && q_tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("cluster weights must be positive, got {q_sigma}, {q_tau}")));
        }
        Ok(GrcmParams { channels, q_sigma, q_tau })
    }

    pub fn uniform(bonds: usize, channel: [f64; 4], q_sigma: f64, q_tau: f64) -> Result<GrcmParams> {
        GrcmParams::new(vec![channel; bonds], q_sigma, q_tau)
    }

    pub fn partition(&self) -> Vec<BondClass> {
        self.channels
            .iter()
            .map(|a| if a[3] * a[0] >= a[1] * a[2] { BondClass::Greater } else { BondClass::Less })
            .collect()
    }
}

/// `log λ(n) = Σ_b log a_{n_b}(b)`; `-∞` when a used channel has weight zero.
pub fn lambda_weight(n: &BondConfig, p: &GrcmParams) -> f64 {
    (0..p.channels.len()).map(|b| p.channels[b][n.channel(b)].ln()).sum()
}

/// `(N_σ, N_τ)`.
pub fn cluster_counts(graph: &BondGraph, n: &BondConfig) -> (usize, usize) {
    (cluster_count(graph, n.sigma), cluster_count(graph, n.tau))
}

fn check_params(graph: &BondGraph, p: &GrcmParams) -> Result<()> {
    if graph.num_bonds() != p.channels.len() {
        return Err(Error::InvalidParameter(format!(
            "{} channel tables for {} bonds",
            p.channels.len(),
            graph.num_bonds()
        )));
    }
    Ok(())
}

// Unnormalized weights `w(σ, τ)` split as lo × hi × qσ-part × qτ-part, each
// channel table scaled by its largest entry.
struct WeightTables {
    bonds: usize,
    split: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    q_sigma: Vec<f64>,
    q_tau: Vec<f64>,
}

impl WeightTables {
    fn new(graph: &BondGraph, p: &GrcmParams) -> WeightTables {
        let nb = graph.num_bonds();
        let split = nb / 2;
        let half = |range: std::ops::Range<usize>| -> Vec<f64> {
            let len = range.len();
            let mut t = vec![1.0; 1 << (2 * len)];
            for (code, slot) in t.iter_mut().enumerate() {
                for (k, b) in range.clone().enumerate() {
                    let ch = (code >> k & 1) | (code >> (len + k) & 1) << 1;
                    let a = &p.channels[b];
                    let scale = a.iter().cloned().fold(0.0, f64::max);
                    *slot *= a[ch] / scale;
                }
            }
            t
        };
        let counts: Vec<usize> = (0..1u64 << nb).map(|m| cluster_count(graph, m)).collect();
        WeightTables {
            bonds: nb,
            split,
            lo: half(0..split),
            hi: half(split..nb),
            q_sigma: counts.iter().map(|&c| p.q_sigma.powi(c as i32)).collect(),
            q_tau: counts.iter().map(|&c| p.q_tau.powi(c as i32)).collect(),
        }
    }

    #[inline]
    fn weight(&self, sigma: u64, tau: u64) -> f64 {
        let s = self.split;
        let r = self.bonds - s;
        let lm = (1u64 << s) - 1;
        let lo = (sigma & lm) | (tau & lm) << s;
        let hi = (sigma >> s) | (tau >> s) << r;
        self.lo[lo as usize] * self.hi[hi as usize] * self.q_sigma[sigma as usize] * self.q_tau[tau as usize]
    }

    fn for_each<F: FnMut(BondConfig, f64)>(&self, mut visit: F) {
        let all = 1u64 << self.bonds;
        for sigma in 0..all {
            for tau in 0..all {
                visit(BondConfig { sigma, tau }, self.weight(sigma, tau));
            }
        }
    }
}

/// The measure `∝ λ q_σ^{N_σ} q_τ^{N_τ}` on every bond configuration; the
/// boundary condition is carried by the graph.
pub fn nu_measure(graph: &BondGraph, p: &GrcmParams) -> Result<ExactDistribution> {
    check_params(graph, p)?;
    let nb = graph.num_bonds();
    if nb > NU_MAX_BONDS {
        return Err(Error::TooLarge(format!("{nb} bonds exceeds the limit of {NU_MAX_BONDS}")));
    }
    let tables = WeightTables::new(graph, p);
    let mut items = Vec::with_capacity(1 << (2 * nb));
    tables.for_each(|n, w| items.push((n.encode(nb), w.ln())));
    let params = format!("{graph:?} {p:?}");
    ExactDistribution::from_log_weights("grcm", &params, items)
}

/// `ν[event]` by streaming over every configuration.
pub fn nu_event_prob<F: Fn(&BondConfig) -> bool>(graph: &BondGraph, p: &GrcmParams, event: F) -> Result<f64> {
    check_params(graph, p)?;
    let nb = graph.num_bonds();
    if nb > NU_STREAM_MAX_BONDS {
        return Err(Error::TooLarge(format!("{nb} bonds exceeds the limit of {NU_STREAM_MAX_BONDS}")));
    }
    let tables = WeightTables::new(graph, p);
    let (mut z, mut hit) = (0.0, 0.0);
    tables.for_each(|n, w| {
        z += w;
        if w > 0.0 && event(&n) {
            hit += w;
        }
    });
    Ok(hit / z)
}

/// σ-connection probabilities of a graph.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionProbs {
    /// `ν[i ↔σ ghost]` per site; empty without a ghost.
    pub to_ghost: Vec<f64>,
    /// `ν[i ↔σ j]` over sites.
    pub pair: Vec<Vec<f64>>,
}

/// Parallel bonds collapse to one bond whose channel table sums the member
/// tables over each pair of OR-ed occupations; cluster counts only see the
/// OR, so the collapsed measure has the same σ and τ connectivity law.
pub fn collapse_bundles(graph: &BondGraph, p: &GrcmParams) -> Result<(BondGraph, GrcmParams)> {
    check_params(graph, p)?;
    let mut bonds = Vec::new();
    let mut channels = Vec::new();
    for ((u, v), members) in graph.bundles() {
        let k = members.len();
        let mut table = [0.0; 4];
        for code in 0u64..(1 << (2 * k)) {
            let mut w = 1.0;
            let (mut any_s, mut any_t) = (0usize, 0usize);
            for (i, &b) in members.iter().enumerate() {
                let s = (code >> (2 * i) & 1) as usize;
                let t = (code >> (2 * i + 1) & 1) as usize;
                any_s |= s;
                any_t |= t;
                w *= p.channels[b][s | t << 1];
            }
            table[any_s | any_t << 1] += w;
        }
        bonds.push((u, v));
        channels.push(table);
    }
    let collapsed = BondGraph { vertices: graph.vertices, ghost: graph.ghost, bonds };
    Ok((collapsed, GrcmParams { channels, q_sigma: p.q_sigma, q_tau: p.q_tau }))
}

pub fn connection_probabilities(graph: &BondGraph, p: &GrcmParams) -> Result<ConnectionProbs> {
    let (g, q) = collapse_bundles(graph, p)?;
    let nb = g.num_bonds();
    if nb > ES_MAX_BUNDLES {
        return Err(Error::TooLarge(format!("{nb} bond bundles exceeds the limit of {ES_MAX_BUNDLES}")));
    }
    let tables = WeightTables::new(&g, &q);
    let all = 1u64 << nb;
    // σ-marginal weights.
    let mut marginal = vec![0.0; all as usize];
    for (sigma, slot) in marginal.iter_mut().enumerate() {
        let mut acc = 0.0;
        for tau in 0..all {
            acc += tables.weight(sigma as u64, tau);
        }
        *slot = acc;
    }
    let z: f64 = marginal.iter().sum();
    let sites = g.sites();
    let mut to_ghost = vec![0.0; if g.ghost.is_some() { sites } else { 0 }];
    let mut pair = vec![vec![0.0; sites]; sites];
    for (sigma, &w) in marginal.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let labels = cluster_labels(&g, sigma as u64);
        if let Some(gh) = g.ghost {
            for (i, slot) in to_ghost.iter_mut().enumerate() {
                if labels[i] == labels[gh] {
                    *slot += w;
                }
            }
        }
        for i in 0..sites {
            for j in 0..sites {
                if labels[i] == labels[j] {
                    pair[i][j] += w;
                }
            }
        }
    }
    to_ghost.iter_mut().for_each(|x| *x /= z);
    pair.iter_mut().flatten().for_each(|x| *x /= z);
    Ok(ConnectionProbs { to_ghost, pair })
}

/// Channel table obtained from the couplings of a two-species spin model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AtDictionary {
    /// `[a_0, a_σ, a_τ, a_στ]`.
    pub channels: [f64; 4],
    /// Some channel weight is negative; the table is not a measure.
    pub out_of_regime: bool,
}

/// ```text
/// a_0  = e^{-2(Jσ+Jτ)}
/// a_σ  = e^{-2Jτ} (e^{-2Jστ} - e^{-2Jσ})
/// a_τ  = e^{-2Jσ} (e^{-2Jστ} - e^{-2Jτ})
/// a_στ = 1 - e^{-2(Jσ+Jστ)} - e^{-2(Jτ+Jστ)} + e^{-2(Jσ+Jτ)}
/// ```
pub fn at_to_grcm(j_sigma: f64, j_tau: f64, j_sigma_tau: f64) -> AtDictionary {
    let e = |x: f64| (-2.0 * x).exp();
    let channels = [
        e(j_sigma + j_tau),
        e(j_tau) * (e(j_sigma_tau) - e(j_sigma)),
        e(j_sigma) * (e(j_sigma_tau) - e(j_tau)),
        1.0 - e(j_sigma + j_sigma_tau) - e(j_tau + j_sigma_tau) + e(j_sigma + j_tau),
    ];
    AtDictionary { channels, out_of_regime: channels.iter().any(|a| *a < 0.0) }
}

impl AtDictionary {
    /// The table on every bond of `graph`, with `q_σ = q_τ = 2`.
    pub fn params(&self, graph: &BondGraph) -> Result<GrcmParams> {
        if self.out_of_regime {
            return Err(Error::InvalidParameter(format!("negative channel weight in {:?}", self.channels)));
        }
        GrcmParams::uniform(graph.num_bonds(), self.channels, 2.0, 2.0)
    }
}

#[derive(Clone, Debug)]
pub struct GrcmFkgReport {
    pub lambda: SlackReport,
    pub partition: Vec<BondClass>,
}

/// `λ(n∨n') λ(n∧n') - λ(n) λ(n')` over every pair, with `λ` normalized.
pub fn fkg_lattice_check_grcm(p: &GrcmParams) -> Result<GrcmFkgReport> {
    let nb = p.channels.len();
    if nb > FKG_MAX_BONDS {
        return Err(Error::TooLarge(format!("{nb} bonds exceeds the limit of {FKG_MAX_BONDS}")));
    }
    let norm: Vec<[f64; 4]> = p
        .channels
        .iter()
        .map(|a| {
            let s: f64 = a.iter().sum();
            a.map(|x| x / s)
        })
        .collect();
    let lam = |n: &BondConfig| -> f64 { (0..nb).map(|b| norm[b][n.channel(b)]).product() };
    let all = 1u64 << nb;
    let configs: Vec<BondConfig> =
        (0..all).flat_map(|s| (0..all).map(move |t| BondConfig { sigma: s, tau: t })).collect();
    let weights: Vec<f64> = configs.iter().map(lam).collect();
    let mut report = SlackReport::new();
    for i in 0..configs.len() {
        for j in i..configs.len() {
            let (x, y) = (configs[i], configs[j]);
            let up = BondConfig { sigma: x.sigma | y.sigma, tau: x.tau | y.tau };
            let down = BondConfig { sigma: x.sigma & y.sigma, tau: x.tau & y.tau };
            let slack = lam(&up) * lam(&down) - weights[i] * weights[j];
            report.record(slack, || format!("n={:?} n'={:?}", x.encode(nb), y.encode(nb)));
        }
    }
    Ok(GrcmFkgReport { lambda: report, partition: p.partition() })
}

/// Per-bond evaluation of the comparison hypotheses between `p` and `p̃`.
#[derive(Clone, Debug, PartialEq)]
pub struct BondHypothesis {
    pub class: BondClass,
    /// `[α_0, α_σ, α_τ, α_στ]`, each `a / ã` (`0/0` read as 1).
    pub alpha: [f64; 4],
    pub holds: bool,
    /// `α_0 ≤ min(α_σ, α_τ) ≤ max(α_σ, α_τ) ≤ α_στ` and `ã_στ ã_0 ≥ ã_σ ã_τ`.
    pub monotone_ratio: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisReport {
    pub q_sigma_ok: bool,
    pub rho_sigma: f64,
    pub rho_tau: f64,
    pub q_tilde_ge_one: bool,
    pub bonds: Vec<BondHypothesis>,
}

impl HypothesisReport {
    pub fn holds(&self) -> bool {
        self.q_sigma_ok && self.bonds.iter().all(|b| b.holds)
    }

    /// A sufficient condition for `ν_p ≥ ν_p̃`: `ν_p̃` satisfies the lattice
    /// condition (`q̃ ≥ 1`, every bond of `p̃` in `B_>`) and `ν_p / ν_p̃` is
    /// increasing (`ρ_σ, ρ_τ ≤ 1` and every bond has a monotone ratio).
    pub fn sufficient(&self) -> bool {
        self.q_tilde_ge_one
            && self.rho_sigma <= 1.0
            && self.rho_tau <= 1.0
            && self.bonds.iter().all(|b| b.monotone_ratio)
    }
}

fn ge(x: f64, y: f64) -> bool {
    x >= y - 1e-12 * x.abs().max(y.abs()).max(1.0)
}

/// Evaluates, bond by bond with the partition taken from `p`:
///
/// ```text
/// q_σ ≤ q̃_σ
/// B_>:  α_στ ≥ max(α_σ, α_τ) ≥ min(α_σ, α_τ)
/// B_<:  ρ_τ α_σ ≥ max(α_στ, ρ_τ α_0) ≥ min(α_στ, ρ_τ α_0) ≥ α_τ
/// ```
pub fn comparison_hypothesis(p: &GrcmParams, pt: &GrcmParams) -> Result<HypothesisReport> {
    if p.channels.len() != pt.channels.len() {
        return Err(Error::InvalidParameter("parameter sets have different bond counts".into()));
    }
    let rho_sigma = p.q_sigma / pt.q_sigma;
    let rho_tau = p.q_tau / pt.q_tau;
    let bonds = p
        .channels
        .iter()
        .zip(&pt.channels)
        .zip(p.partition().into_iter().zip(pt.partition()))
        .map(|((a, at), (class, tilde_class))| {
            let alpha: [f64; 4] = std::array::from_fn(|k| match (a[k], at[k]) {
                (x, y) if x == 0.0 && y == 0.0 => 1.0,
                (x, y) => x / y,
            });
            let [a0, s, t, st] = alpha;
            let holds = match class {
                BondClass::Greater => ge(st, s.max(t)),
                BondClass::Less => {
                    let hi = st.max(rho_tau * a0);
                    let lo = st.min(rho_tau * a0);
                    ge(rho_tau * s, hi) && ge(lo, t)
                }
            };
            let monotone_ratio = tilde_class == BondClass::Greater && ge(s.min(t), a0) && ge(st, s.max(t));
            BondHypothesis { class, alpha, holds, monotone_ratio }
        })
        .collect();
    Ok(HypothesisReport {
        q_sigma_ok: p.q_sigma <= pt.q_sigma,
        rho_sigma,
        rho_tau,
        q_tilde_ge_one: pt.q_sigma >= 1.0 && pt.q_tau >= 1.0,
        bonds,
    })
}

#[derive(Clone, Debug)]
pub struct ComparisonReport {
    pub hypothesis: HypothesisReport,
    /// `min_A ν_p[A] - ν_p̃[A]` over increasing `A`; `None` when the
    /// hypothesis fails and the check is skipped.
    pub gap: Option<f64>,
    /// Minimal configurations of a minimizing event.
    pub witness: Vec<Vec<i64>>,
}

/// Smallest `ν_p[A] - ν_p̃[A]` over increasing events, with a witness.
pub fn comparison_gap(graph: &BondGraph, p: &GrcmParams, pt: &GrcmParams) -> Result<(f64, Vec<Vec<i64>>)> {
    let nb = graph.num_bonds();
    if nb > COMPARE_MAX_BONDS {
        return Err(Error::TooLarge(format!("{nb} bonds exceeds the limit of {COMPARE_MAX_BONDS}")));
    }
    let upper = nu_measure(graph, p)?;
    let lower = nu_measure(graph, pt)?;
    Ok(domination_gap(&upper, &lower))
}

pub fn comparison_check(graph: &BondGraph, p: &GrcmParams, pt: &GrcmParams) -> Result<ComparisonReport> {
    check_params(graph, p)?;
    check_params(graph, pt)?;
    let hypothesis = comparison_hypothesis(p, pt)?;
    if !hypothesis.holds() {
        return Ok(ComparisonReport { hypothesis, gap: None, witness: Vec::new() });
    }
    let (gap, witness) = comparison_gap(graph, p, pt)?;
    Ok(ComparisonReport { hypothesis, gap: Some(gap), witness })
}

/// Single-species random-cluster measure on the bonds of `graph`, weight
/// `(p / (1-p))^{open} q^{clusters}`, encoded as one bit per bond.
pub fn rc_measure(graph: &BondGraph, p: f64, q: f64) -> Result<ExactDistribution> {
    if !(p > 0.0 && p < 1.0 && q > 0.0) {
        return Err(Error::InvalidParameter(format!("need 0 < p < 1 and q > 0, got p={p} q={q}")));
    }
    let nb = graph.num_bonds();
    if nb > NU_MAX_BONDS {
        return Err(Error::TooLarge(format!("{nb} bonds exceeds the limit of {NU_MAX_BONDS}")));
    }
    let ratio = (p / (1.0 - p)).ln();
    let mut items = Vec::new();
    for mask in 0u64..(1 << nb) {
        // Components by repeated relabelling.
        let mut label: Vec<usize> = (0..graph.vertices).collect();
        let mut changed = true;
        while changed {
            changed = false;
            for (k, &(u, v)) in graph.bonds.iter().enumerate() {
                if mask >> k & 1 == 1 && label[u] != label[v] {
                    let m = label[u].min(label[v]);
                    label[u] = m;
                    label[v] = m;
                    changed = true;
                }
            }
        }
        let clusters = (0..graph.vertices).filter(|&v| label[v] == v).count();
        let open = mask.count_ones() as f64;
        let code = (0..nb).map(|k| (mask >> k & 1) as i64).collect();
        items.push((code, open * ratio + clusters as f64 * q.ln()));
    }
    ExactDistribution::from_log_weights("random-cluster", &format!("{graph:?} p={p} q={q}"), items)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubicParams {
    pub j_sigma: f64,
    pub j_tau: f64,
    pub j_sigma_tau: f64,
    pub q_sigma: u32,
    pub q_tau: u32,
}

impl CubicParams {
    pub fn new(j_sigma: f64, j_tau: f64, j_sigma_tau: f64, q_sigma: u32, q_tau: u32) -> Result<CubicParams> {
        if q_sigma == 0 || q_tau == 0 {
            return Err(Error::InvalidParameter("alphabet sizes must be positive".into()));
        }
        if ![j_sigma, j_tau, j_sigma_tau].iter().all(|j| j.is_finite()) {
            return Err(Error::InvalidParameter("couplings must be finite".into()));
        }
        Ok(CubicParams { j_sigma, j_tau, j_sigma_tau, q_sigma, q_tau })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CubicBoundary {
    Free,
    /// Every missing neighbour carries these spins.
    Fixed(u32, u32),
}

fn cubic_pair(p: &CubicParams, s1: u32, t1: u32, s2: u32, t2: u32) -> f64 {
    let ds = (s1 == s2) as u8 as f64;
    let dt = (t1 == t2) as u8 as f64;
    -2.0 * (p.j_sigma - p.j_sigma_tau) * ds - 2.0 * (p.j_tau - p.j_sigma_tau) * dt - 4.0 * p.j_sigma_tau * ds * dt
}

/// Sum of the pair Hamiltonian over nearest-neighbour sites and, for a
/// fixed boundary, over ghost pairs.
pub fn cubic_energy(
    domain: &Domain,
    sigma: &[u32],
    tau: &[u32],
    p: &CubicParams,
    bc: CubicBoundary,
) -> Result<f64> {
    let n = domain.num_faces();
    if sigma.len() != n || tau.len() != n {
        return Err(Error::InvalidParameter(format!("expected {n} spins per species")));
    }
    let bad = |v: &[u32], q: u32| v.iter().position(|&x| x == 0 || x > q);
    if let Some(i) = bad(sigma, p.q_sigma) {
        return Err(Error::InvalidParameter(format!("σ at site {i} outside 1..={}", p.q_sigma)));
    }
    if let Some(i) = bad(tau, p.q_tau) {
        return Err(Error::InvalidParameter(format!("τ at site {i} outside 1..={}", p.q_tau)));
    }
    if let CubicBoundary::Fixed(s, t) = bc {
        if s == 0 || s > p.q_sigma || t == 0 || t > p.q_tau {
            return Err(Error::InvalidParameter("boundary spins outside the alphabets".into()));
        }
    }
    let mut h = 0.0;
    for (i, j) in site_bonds(domain) {
        let (s2, t2) = match (j, bc) {
            (Some(j), _) => (sigma[j], tau[j]),
            (None, CubicBoundary::Fixed(s, t)) => (s, t),
            (None, CubicBoundary::Free) => continue,
        };
        h += cubic_pair(p, sigma[i], tau[i], s2, t2);
    }
    Ok(h)
}

/// Measure `∝ exp(-H)` over every spin configuration, encoded
/// `[σ_0 .. σ_{n-1}, τ_0 .. τ_{n-1}]`.
pub fn cubic_measure(domain: &Domain, p: &CubicParams, bc: CubicBoundary) -> Result<ExactDistribution> {
    let n = domain.num_faces();
    let states = ((p.q_sigma * p.q_tau) as f64).powi(n as i32);
    if states > CUBIC_MAX_STATES as f64 {
        return Err(Error::TooLarge(format!("{states:.3e} spin configurations")));
    }
    let mut sigma = vec![1u32; n];
    let mut tau = vec![1u32; n];
    let mut items = Vec::with_capacity(states as usize);
    loop {
        let h = cubic_energy(domain, &sigma, &tau, p, bc)?;
        let code = sigma.iter().chain(&tau).map(|&x| x as i64).collect();
        items.push((code, -h));
        let mut k = 0;
        loop {
            if k == 2 * n {
                let params = format!("{} {p:?} {bc:?}", domain.shape());
                return ExactDistribution::from_log_weights("cubic", &params, items);
            }
            let (slot, q) = if k < n { (&mut sigma[k], p.q_sigma) } else { (&mut tau[k - n], p.q_tau) };
            if *slot < q {
                *slot += 1;
                break;
            }
            *slot = 1;
            k += 1;
        }
    }
}

/// Both sides of the spin/connectivity identities under `++` boundary.
#[derive(Clone, Debug)]
pub struct EsReport {
    pub connection: ConnectionProbs,
    /// `⟨s_i⟩` with `s = +1` for σ-spin 1.
    pub spin_mean: Vec<f64>,
    pub spin_pair: Vec<Vec<f64>>,
    pub max_error: f64,
}

/// Compares `ν[i ↔σ ghost]` with `⟨s_i⟩` and `ν[i ↔σ j]` with `⟨s_i s_j⟩`
/// for the `q = 2` cubic model with all-one boundary spins.
pub fn es_check(domain: &Domain, j_sigma: f64, j_tau: f64, j_sigma_tau: f64) -> Result<EsReport> {
    let dict = at_to_grcm(j_sigma, j_tau, j_sigma_tau);
    let graph = BondGraph::from_domain(domain, GrcmBoundary::Wired);
    let connection = connection_probabilities(&graph, &dict.params(&graph)?)?;
    let cubic = CubicParams::new(j_sigma, j_tau, j_sigma_tau, 2, 2)?;
    let dist = cubic_measure(domain, &cubic, CubicBoundary::Fixed(1, 1))?;
    let n = domain.num_faces();
    let spin = |c: &[i64], i: usize| if c[i] == 1 { 1.0 } else { -1.0 };
    let spin_mean: Vec<f64> = (0..n).map(|i| dist.expectation(|c| spin(c, i))).collect();
    let spin_pair: Vec<Vec<f64>> =
        (0..n).map(|i| (0..n).map(|j| dist.expectation(|c| spin(c, i) * spin(c, j))).collect()).collect();
    let mut max_error: f64 = 0.0;
    for i in 0..n {
        max_error = max_error.max((connection.to_ghost[i] - spin_mean[i]).abs());
        for j in 0..n {
            max_error = max_error.max((connection.pair[i][j] - spin_pair[i][j]).abs());
        }
    }
    Ok(EsReport { connection, spin_mean, spin_pair, max_error })
}
