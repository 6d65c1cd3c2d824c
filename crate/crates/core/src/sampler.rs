//! Single-site Markov chains: heat bath for six-vertex heights, Metropolis
//! for Ashkin-Teller and cubic spins.
//!
//! A sweep visits every updatable site once in index order. Every chain
//! draws from its own ChaCha stream, so identical seeds replay exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ashkinteller::{at_local_delta, at_measure_exact, AtBoundary, AtParams, SpinPair};
use crate::dist::ExactDistribution;
use crate::error::{Error, Result};
use crate::grcm::{cubic_energy, CubicBoundary, CubicParams};
use crate::lattice::{Domain, FaceId};
use crate::monotone::SlackReport;
use crate::sixvertex::{admissible, class_from_heights, height_distribution, BoundaryCondition, Weights};

pub const DEFAULT_BURN_IN: u64 = 100;
pub const DEFAULT_THIN: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub fn new(seed: u64, stream: u64) -> RngSeed {
        RngSeed { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Seed for the `k`-th of several independent chains.
    pub fn child(&self, k: u64) -> RngSeed {
        RngSeed { seed: self.seed, stream: self.stream.wrapping_add(k) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    SixVertexHeight,
    AtSpin,
    CubicSpin,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Configuration {
    Heights(Vec<i64>),
    At(SpinPair),
    Cubic { sigma: Vec<u32>, tau: Vec<u32> },
}

impl Configuration {
    /// Same encoding as the exact distributions of each model.
    pub fn code(&self) -> Vec<i64> {
        match self {
            Configuration::Heights(h) => h.clone(),
            Configuration::At(s) => s.encode(),
            Configuration::Cubic { sigma, tau } => sigma.iter().chain(tau).map(|&x| x as i64).collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub enum ChainParams {
    SixVertex { weights: Weights, bc: BoundaryCondition },
    AshkinTeller { params: AtParams, bc: AtBoundary },
    Cubic { params: CubicParams, bc: CubicBoundary },
}

// Flat neighbourhood tables for the height heat bath.
#[derive(Clone, Debug)]
struct HeightKernel {
    free: Vec<u32>,
    nbrs: Vec<[u32; 4]>,
    nbr_count: Vec<u8>,
    /// Faces `[NE, NW, SW, SE]` of each interior corner vertex.
    corners: Vec<[[u32; 4]; 4]>,
    corner_count: Vec<u8>,
    log_w: [f64; 3],
}

impl HeightKernel {
    fn new(domain: &Domain, bc: &BoundaryCondition, w: &Weights) -> HeightKernel {
        let free: Vec<u32> = bc.free_faces().map(|f| f as u32).collect();
        let mut nbrs = Vec::new();
        let mut nbr_count = Vec::new();
        let mut corners = Vec::new();
        let mut corner_count = Vec::new();
        for &f in &free {
            let face = domain.face(f as usize);
            let mut ns = [0u32; 4];
            let mut k = 0;
            for g in face.nbrs.iter().flatten() {
                ns[k] = *g as u32;
                k += 1;
            }
            nbrs.push(ns);
            nbr_count.push(k as u8);
            let mut cs = [[0u32; 4]; 4];
            let mut m = 0;
            for &v in &face.corners {
                let faces = domain.vertex(v).faces;
                if faces.iter().all(|x| x.is_some()) {
                    cs[m] = faces.map(|x| x.unwrap() as u32);
                    m += 1;
                }
            }
            corners.push(cs);
            corner_count.push(m as u8);
        }
        HeightKernel { free, nbrs, nbr_count, corners, corner_count, log_w: [w.a.ln(), w.b.ln(), w.c.ln()] }
    }

    fn local_log_weight(&self, k: usize, h: &[i64]) -> f64 {
        let mut s = 0.0;
        for c in &self.corners[k][..self.corner_count[k] as usize] {
            let class = class_from_heights(h[c[0] as usize], h[c[1] as usize], h[c[2] as usize], h[c[3] as usize]);
            s += self.log_w[class as usize];
        }
        s
    }

    /// Admissible values of the `k`-th free face and their conditional
    /// probabilities given the rest of `h`.
    fn conditional(&self, k: usize, h: &mut [i64]) -> ([i64; 2], [f64; 2], usize) {
        let f = self.free[k] as usize;
        let ns = &self.nbrs[k][..self.nbr_count[k] as usize];
        if ns.is_empty() {
            return ([h[f], 0], [1.0, 0.0], 1);
        }
        let (mut lo, mut hi) = (i64::MAX, i64::MIN);
        for &g in ns {
            lo = lo.min(h[g as usize]);
            hi = hi.max(h[g as usize]);
        }
        if lo != hi {
            return ([lo + 1, 0], [1.0, 0.0], 1);
        }
        let old = h[f];
        h[f] = lo - 1;
        let down = self.local_log_weight(k, h);
        h[f] = lo + 1;
        let up = self.local_log_weight(k, h);
        h[f] = old;
        let p_down = 1.0 / (1.0 + (up - down).exp());
        ([lo - 1, lo + 1], [p_down, 1.0 - p_down], 2)
    }
}

#[derive(Clone, Debug)]
pub struct ChainState {
    pub model: ModelKind,
    pub config: Configuration,
    pub steps: u64,
    pub params: ChainParams,
    domain: Domain,
    rng: ChaCha8Rng,
    kernel: Option<HeightKernel>,
}

impl ChainState {
    /// Starts from the lowest height function extending `bc`.
    pub fn six_vertex(domain: &Domain, bc: &BoundaryCondition, weights: &Weights, seed: RngSeed) -> Result<ChainState> {
        let envelope = admissible(domain, bc)?;
        Ok(ChainState {
            model: ModelKind::SixVertexHeight,
            config: Configuration::Heights(envelope.lower),
            steps: 0,
            params: ChainParams::SixVertex { weights: *weights, bc: bc.clone() },
            domain: domain.clone(),
            rng: seed.rng(),
            kernel: Some(HeightKernel::new(domain, bc, weights)),
        })
    }

    /// Starts from all spins `+1`.
    pub fn ashkin_teller(domain: &Domain, params: &AtParams, bc: &AtBoundary, seed: RngSeed) -> Result<ChainState> {
        let start = SpinPair::all_plus(domain.num_faces());
        crate::ashkinteller::at_energy(domain, &start, params, bc)?;
        Ok(ChainState {
            model: ModelKind::AtSpin,
            config: Configuration::At(start),
            steps: 0,
            params: ChainParams::AshkinTeller { params: *params, bc: bc.clone() },
            domain: domain.clone(),
            rng: seed.rng(),
            kernel: None,
        })
    }

    /// Starts from all spins `1`.
    pub fn cubic(domain: &Domain, params: &CubicParams, bc: CubicBoundary, seed: RngSeed) -> Result<ChainState> {
        let n = domain.num_faces();
        let (sigma, tau) = (vec![1; n], vec![1; n]);
        cubic_energy(domain, &sigma, &tau, params, bc)?;
        Ok(ChainState {
            model: ModelKind::CubicSpin,
            config: Configuration::Cubic { sigma, tau },
            steps: 0,
            params: ChainParams::Cubic { params: *params, bc },
            domain: domain.clone(),
            rng: seed.rng(),
            kernel: None,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Sites visited by one sweep.
    pub fn sites(&self) -> Vec<FaceId> {
        match &self.kernel {
            Some(k) => k.free.iter().map(|&f| f as usize).collect(),
            None => (0..self.domain.num_faces()).collect(),
        }
    }

    pub fn sweep(&mut self) {
        match self.model {
            ModelKind::SixVertexHeight => {
                let kernel = self.kernel.as_ref().unwrap();
                let Configuration::Heights(h) = &mut self.config else { unreachable!() };
                for k in 0..kernel.free.len() {
                    heat_bath_update(kernel, k, h, &mut self.rng);
                }
                self.steps += kernel.free.len() as u64;
            }
            _ => {
                for i in 0..self.domain.num_faces() {
                    self.step_site(i);
                }
            }
        }
    }

    fn step_site(&mut self, i: FaceId) {
        match self.model {
            ModelKind::SixVertexHeight => heat_bath_height_step(self, i),
            ModelKind::AtSpin => metropolis_at_step(self, i),
            ModelKind::CubicSpin => metropolis_cubic_step(self, i),
        }
    }
}

fn heat_bath_update(kernel: &HeightKernel, k: usize, h: &mut [i64], rng: &mut ChaCha8Rng) {
    let (values, probs, n) = kernel.conditional(k, h);
    let f = kernel.free[k] as usize;
    h[f] = if n == 1 || rng.gen::<f64>() < probs[0] { values[0] } else { values[1] };
}

/// Resamples `h(face)` from its conditional law given every other face.
/// Fixed faces are left unchanged.
pub fn heat_bath_height_step(state: &mut ChainState, face: FaceId) {
    let kernel = state.kernel.as_ref().expect("heat bath needs a six-vertex chain");
    let Configuration::Heights(h) = &mut state.config else { unreachable!() };
    if let Ok(k) = kernel.free.binary_search(&(face as u32)) {
        heat_bath_update(kernel, k, h, &mut state.rng);
    }
    state.steps += 1;
}

/// Exact conditional law of `h(face)` given the other faces.
pub fn height_conditional(domain: &Domain, bc: &BoundaryCondition, w: &Weights, h: &[i64], face: FaceId) -> Vec<(i64, f64)> {
    if bc.is_fixed(face) {
        return vec![(h[face], 1.0)];
    }
    let kernel = HeightKernel::new(domain, bc, w);
    let k = kernel.free.binary_search(&(face as u32)).unwrap();
    let mut work = h.to_vec();
    let (values, probs, n) = kernel.conditional(k, &mut work);
    (0..n).map(|i| (values[i], probs[i])).collect()
}

const AT_PROPOSALS: [(bool, bool); 3] = [(true, false), (false, true), (true, true)];

/// Proposes flipping `τ`, `τ'` or both at `site`, uniformly, and accepts
/// with probability `min(1, exp(-ΔH))`.
pub fn metropolis_at_step(state: &mut ChainState, site: FaceId) {
    let ChainParams::AshkinTeller { params, bc } = &state.params else { panic!("not an Ashkin-Teller chain") };
    let Configuration::At(s) = &mut state.config else { unreachable!() };
    let (ft, fs) = AT_PROPOSALS[state.rng.gen_range(0..3)];
    let t = if ft { -s.tau[site] } else { s.tau[site] };
    let sp = if fs { -s.tau_prime[site] } else { s.tau_prime[site] };
    let delta = at_local_delta(&state.domain, s, params, bc, site, t, sp);
    if delta <= 0.0 || state.rng.gen::<f64>() < (-delta).exp() {
        s.tau[site] = t;
        s.tau_prime[site] = sp;
    }
    state.steps += 1;
}

fn cubic_site_energy(domain: &Domain, p: &CubicParams, bc: CubicBoundary, sigma: &[u32], tau: &[u32], i: FaceId, s: u32, t: u32) -> f64 {
    let mut e = 0.0;
    for n in domain.face(i).nbrs {
        let (s2, t2) = match (n, bc) {
            (Some(j), _) => (sigma[j], tau[j]),
            (None, CubicBoundary::Fixed(a, b)) => (a, b),
            (None, CubicBoundary::Free) => continue,
        };
        let ds = (s == s2) as u8 as f64;
        let dt = (t == t2) as u8 as f64;
        e += -2.0 * (p.j_sigma - p.j_sigma_tau) * ds - 2.0 * (p.j_tau - p.j_sigma_tau) * dt - 4.0 * p.j_sigma_tau * ds * dt;
    }
    e
}

/// Proposes a uniformly random spin pair at `site` and accepts with
/// probability `min(1, exp(-ΔH))`.
pub fn metropolis_cubic_step(state: &mut ChainState, site: FaceId) {
    let ChainParams::Cubic { params, bc } = &state.params else { panic!("not a cubic chain") };
    let Configuration::Cubic { sigma, tau } = &mut state.config else { unreachable!() };
    let s = state.rng.gen_range(1..=params.q_sigma);
    let t = state.rng.gen_range(1..=params.q_tau);
    let old = cubic_site_energy(&state.domain, params, *bc, sigma, tau, site, sigma[site], tau[site]);
    let new = cubic_site_energy(&state.domain, params, *bc, sigma, tau, site, s, t);
    let delta = new - old;
    if delta <= 0.0 || state.rng.gen::<f64>() < (-delta).exp() {
        sigma[site] = s;
        tau[site] = t;
    }
    state.steps += 1;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub sweeps: u64,
    pub burn_in: u64,
    pub thin: u64,
}

impl RunOptions {
    pub fn new(sweeps: u64) -> RunOptions {
        RunOptions { sweeps, burn_in: DEFAULT_BURN_IN, thin: DEFAULT_THIN }
    }
}

pub type Observable<'a> = &'a dyn Fn(&Configuration) -> f64;

/// Runs `burn_in` sweeps, then `sweeps` more, recording the observables
/// after every `thin`-th of them.
pub fn run_chain(state: &mut ChainState, opts: RunOptions, observables: &[Observable]) -> Result<Vec<Vec<f64>>> {
    if opts.thin == 0 {
        return Err(Error::InvalidParameter("thin must be positive".into()));
    }
    let mut records = Vec::new();
    if opts.sweeps == 0 {
        return Ok(records);
    }
    for _ in 0..opts.burn_in {
        state.sweep();
    }
    for k in 1..=opts.sweeps {
        state.sweep();
        if k % opts.thin == 0 {
            records.push(observables.iter().map(|o| o(&state.config)).collect());
        }
    }
    Ok(records)
}

/// Runs the chain and visits the configuration after each recorded sweep.
pub fn run_chain_with<F: FnMut(&Configuration)>(state: &mut ChainState, opts: RunOptions, mut visit: F) -> Result<()> {
    if opts.thin == 0 {
        return Err(Error::InvalidParameter("thin must be positive".into()));
    }
    if opts.sweeps == 0 {
        return Ok(());
    }
    for _ in 0..opts.burn_in {
        state.sweep();
    }
    for k in 1..=opts.sweeps {
        state.sweep();
        if k % opts.thin == 0 {
            visit(&state.config);
        }
    }
    Ok(())
}

/// Histogram of configuration codes over `opts.sweeps` recorded sweeps.
pub fn empirical_counts(state: &mut ChainState, opts: RunOptions) -> Result<std::collections::HashMap<Vec<i64>, u64>> {
    let mut counts = std::collections::HashMap::new();
    run_chain_with(state, opts, |c| *counts.entry(c.code()).or_insert(0) += 1)?;
    Ok(counts)
}

/// Checks `π(x) P(x→y) = π(y) P(y→x)` in log space for every enumerated
/// configuration and every single-face heat-bath move, with `π` taken from
/// exact enumeration.
pub fn detailed_balance_heights(domain: &Domain, bc: &BoundaryCondition, w: &Weights) -> Result<SlackReport> {
    let pi = height_distribution(domain, bc, w)?;
    let mut report = SlackReport::new();
    for (x, lpx) in pi.support.iter().zip(&pi.log_probs) {
        for f in bc.free_faces() {
            for (v, pxy) in height_conditional(domain, bc, w, x, f) {
                if v == x[f] || pxy == 0.0 {
                    continue;
                }
                let mut y = x.clone();
                y[f] = v;
                let lpy = pi.prob_of(&y).ln();
                let pyx = height_conditional(domain, bc, w, &y, f)
                    .into_iter()
                    .find(|(u, _)| *u == x[f])
                    .map_or(0.0, |(_, p)| p);
                let gap = (lpx + pxy.ln() - lpy - pyx.ln()).abs();
                report.record(-gap, || format!("face {f}: {x:?} -> {y:?}"));
            }
        }
    }
    Ok(report)
}

/// Same check for the Ashkin-Teller Metropolis kernel, whose off-diagonal
/// entries are `(1/3) min(1, exp(-ΔH))`.
pub fn detailed_balance_at(domain: &Domain, p: &AtParams, bc: &AtBoundary) -> Result<SlackReport> {
    let pi = at_measure_exact(domain, p, bc)?;
    let n = domain.num_faces();
    let mut report = SlackReport::new();
    let decode = |c: &[i64]| SpinPair {
        tau: c[..n].iter().map(|&x| x as i8).collect(),
        tau_prime: c[n..].iter().map(|&x| x as i8).collect(),
    };
    for (x, lpx) in pi.support.iter().zip(&pi.log_probs) {
        let sx = decode(x);
        for i in 0..n {
            for (ft, fs) in AT_PROPOSALS {
                let mut sy = sx.clone();
                if ft {
                    sy.tau[i] = -sy.tau[i];
                }
                if fs {
                    sy.tau_prime[i] = -sy.tau_prime[i];
                }
                let d_xy = at_local_delta(domain, &sx, p, bc, i, sy.tau[i], sy.tau_prime[i]);
                let d_yx = at_local_delta(domain, &sy, p, bc, i, sx.tau[i], sx.tau_prime[i]);
                let lp_xy = (1.0f64 / 3.0).ln() + (-d_xy).min(0.0);
                let lp_yx = (1.0f64 / 3.0).ln() + (-d_yx).min(0.0);
                let lpy = pi.prob_of(&sy.encode()).ln();
                let gap = (lpx + lp_xy - lpy - lp_yx).abs();
                report.record(-gap, || format!("site {i}: {x:?}"));
            }
        }
    }
    Ok(report)
}

/// Total-variation distance between a chain's empirical law and `exact`.
pub fn chain_tv(state: &mut ChainState, opts: RunOptions, exact: &ExactDistribution) -> Result<f64> {
    Ok(exact.tv_to_counts(&empirical_counts(state, opts)?))
}
