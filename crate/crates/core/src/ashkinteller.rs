//! Ashkin-Teller model on the faces of a domain, the self-dual line, and the
//! two-class spin representation of six-vertex height functions.
//!
//! Sites are the faces of a [`Domain`]; nearest-neighbour pairs are faces
//! sharing an edge. Exterior spins enter through one ghost bond per missing
//! edge neighbour of a site. The weight of `(τ, τ')` is `exp(-H)` with
//!
//! ```text
//! H = Σ_{i~j} J (τ_i τ_j + τ'_i τ'_j) + U τ_i τ_j τ'_i τ'_j
//! ```
//!
//! so negative couplings favour alignment.

use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::dist::ExactDistribution;
use crate::error::{Error, Result};
use crate::lattice::{Domain, FaceId, Parity};
use crate::monotone::{all_upset_pairs, leq, SlackReport};
use crate::sixvertex::{height_distribution, BoundaryCondition, HeightFunction, Weights};

/// Largest site count [`at_measure_exact`] will enumerate (`4^n` states).
pub const AT_MAX_SITES: usize = 10;

/// Largest number of free even faces for the marginal lattice check.
pub const MARGINAL_MAX_FACES: usize = 12;

/// Largest number of free even faces for which every pair of increasing
/// events is checked.
pub const MARGINAL_MAX_UPSET_FACES: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AtParams {
    pub j: f64,
    pub u: f64,
}

impl AtParams {
    pub fn new(j: f64, u: f64) -> Result<AtParams> {
        if !j.is_finite() || !u.is_finite() {
            return Err(Error::InvalidParameter(format!("couplings must be finite, got J={j} U={u}")));
        }
        Ok(AtParams { j, u })
    }

    /// `sinh(2J) = exp(-2U)` to within 1e-12.
    pub fn is_self_dual(&self) -> bool {
        ((2.0 * self.j).sinh() - (-2.0 * self.u).exp()).abs() <= 1e-12
    }
}

/// Point on the self-dual line: `(U, c)` with `sinh(2J) = exp(-2U)` and
/// `c = coth(2J)`; the matching six-vertex weights are `a = b = 1`.
pub fn selfdual_params(j: f64) -> Result<(f64, f64)> {
    if !(j > 0.0) || !j.is_finite() {
        return Err(Error::InvalidParameter(format!("self-dual line needs J > 0, got {j}")));
    }
    let u = -0.5 * (2.0 * j).sinh().ln();
    let c = 1.0 / (2.0 * j).tanh();
    Ok((u, c))
}

#[derive(Clone, Debug, PartialEq)]
pub enum AtBoundary {
    Free,
    /// Every missing neighbour carries `(+1, +1)`.
    Plus,
    Minus,
    /// Exterior spins `(τ, τ')` seen by the listed boundary sites; other
    /// sites have free exterior.
    Mixed(BTreeMap<FaceId, (i8, i8)>),
}

impl AtBoundary {
    fn exterior(&self, f: FaceId) -> Option<(i8, i8)> {
        match self {
            AtBoundary::Free => None,
            AtBoundary::Plus => Some((1, 1)),
            AtBoundary::Minus => Some((-1, -1)),
            AtBoundary::Mixed(map) => map.get(&f).copied(),
        }
    }

    fn validate(&self, domain: &Domain) -> Result<()> {
        if let AtBoundary::Mixed(map) = self {
            for (&f, &(t, s)) in map {
                if f >= domain.num_faces() || !domain.face(f).nbrs.iter().any(|n| n.is_none()) {
                    return Err(Error::InvalidParameter(format!("site {f} has no exterior neighbour")));
                }
                if t.abs() != 1 || s.abs() != 1 {
                    return Err(Error::InvalidParameter(format!("exterior spins at {f} must be ±1")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpinPair {
    pub tau: Vec<i8>,
    pub tau_prime: Vec<i8>,
}

impl SpinPair {
    pub fn new(tau: Vec<i8>, tau_prime: Vec<i8>) -> Result<SpinPair> {
        if tau.len() != tau_prime.len() {
            return Err(Error::InvalidParameter("τ and τ' differ in length".into()));
        }
        if tau.iter().chain(&tau_prime).any(|s| s.abs() != 1) {
            return Err(Error::InvalidParameter("spins must be ±1".into()));
        }
        Ok(SpinPair { tau, tau_prime })
    }

    pub fn all_plus(n: usize) -> SpinPair {
        SpinPair { tau: vec![1; n], tau_prime: vec![1; n] }
    }

    /// `[τ_0 .. τ_{n-1}, τ'_0 .. τ'_{n-1}]`.
    pub fn encode(&self) -> Vec<i64> {
        self.tau.iter().chain(&self.tau_prime).map(|&s| s as i64).collect()
    }
}

/// Nearest-neighbour pairs of sites (each once, east then north) followed by
/// one ghost pair per missing edge neighbour, in face order.
pub fn site_bonds(domain: &Domain) -> Vec<(FaceId, Option<FaceId>)> {
    let mut bonds = Vec::new();
    for (f, face) in domain.faces().iter().enumerate() {
        for dir in [0, 1] {
            if let Some(g) = face.nbrs[dir] {
                bonds.push((f, Some(g)));
            }
        }
    }
    for (f, face) in domain.faces().iter().enumerate() {
        for _ in face.nbrs.iter().filter(|n| n.is_none()) {
            bonds.push((f, None));
        }
    }
    bonds
}

fn bond_energy(p: &AtParams, t1: i8, s1: i8, t2: i8, s2: i8) -> f64 {
    let tt = (t1 * t2) as f64;
    let ss = (s1 * s2) as f64;
    p.j * (tt + ss) + p.u * tt * ss
}

pub fn at_energy(domain: &Domain, s: &SpinPair, p: &AtParams, bc: &AtBoundary) -> Result<f64> {
    if s.tau.len() != domain.num_faces() {
        return Err(Error::InvalidParameter(format!(
            "{} spins for {} sites",
            s.tau.len(),
            domain.num_faces()
        )));
    }
    bc.validate(domain)?;
    let mut h = 0.0;
    for (i, j) in site_bonds(domain) {
        let (t2, s2) = match j {
            Some(j) => (s.tau[j], s.tau_prime[j]),
            None => match bc.exterior(i) {
                Some(x) => x,
                None => continue,
            },
        };
        h += bond_energy(p, s.tau[i], s.tau_prime[i], t2, s2);
    }
    Ok(h)
}

/// Energy change when site `i` moves from its current spins to `(t, s)`.
pub fn at_local_delta(domain: &Domain, s: &SpinPair, p: &AtParams, bc: &AtBoundary, i: FaceId, t: i8, sp: i8) -> f64 {
    let (t0, s0) = (s.tau[i], s.tau_prime[i]);
    let mut delta = 0.0;
    for n in domain.face(i).nbrs {
        let (t2, s2) = match n {
            Some(j) => (s.tau[j], s.tau_prime[j]),
            None => match bc.exterior(i) {
                Some(x) => x,
                None => continue,
            },
        };
        delta += bond_energy(p, t, sp, t2, s2) - bond_energy(p, t0, s0, t2, s2);
    }
    delta
}

/// Exact measure over all `4^n` spin pairs, encoded by [`SpinPair::encode`].
pub fn at_measure_exact(domain: &Domain, p: &AtParams, bc: &AtBoundary) -> Result<ExactDistribution> {
    let n = domain.num_faces();
    if n > AT_MAX_SITES {
        return Err(Error::TooLarge(format!("{n} sites exceeds the limit of {AT_MAX_SITES}")));
    }
    bc.validate(domain)?;
    let bonds = site_bonds(domain);
    let mut items = Vec::with_capacity(1 << (2 * n));
    let mut s = SpinPair::all_plus(n);
    for mask in 0u32..(1u32 << (2 * n)) {
        for k in 0..n {
            s.tau[k] = if mask >> k & 1 == 1 { -1 } else { 1 };
            s.tau_prime[k] = if mask >> (n + k) & 1 == 1 { -1 } else { 1 };
        }
        let mut h = 0.0;
        for &(i, j) in &bonds {
            let (t2, s2) = match j {
                Some(j) => (s.tau[j], s.tau_prime[j]),
                None => match bc.exterior(i) {
                    Some(x) => x,
                    None => continue,
                },
            };
            h += bond_energy(p, s.tau[i], s.tau_prime[i], t2, s2);
        }
        items.push((s.encode(), -h));
    }
    let params = format!("{} J={} U={} bc={:?}", domain.shape(), p.j, p.u, bc);
    ExactDistribution::from_log_weights("ashkin-teller", &params, items)
}

/// Spins on the two parity classes of faces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MixedSpinConfig {
    /// Indexed by face; the class of a face is its parity.
    pub sigma: Vec<i8>,
    pub parity: Vec<Parity>,
}

impl MixedSpinConfig {
    pub fn class(&self, parity: Parity) -> Vec<(FaceId, i8)> {
        (0..self.sigma.len()).filter(|&f| self.parity[f] == parity).map(|f| (f, self.sigma[f])).collect()
    }
}

/// One reference face and its sign per parity class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpinGauge {
    pub even: (FaceId, i8),
    pub odd: (FaceId, i8),
}

/// Faces of the same parity that share a corner or sit two steps apart
/// along a lattice axis.
pub fn same_parity_neighbors(domain: &Domain, f: FaceId) -> Vec<FaceId> {
    let face = domain.face(f);
    let mut out: Vec<FaceId> = face.diag.iter().flatten().copied().collect();
    for dir in 0..4 {
        if let Some(g) = face.nbrs[dir] {
            if let Some(h) = domain.face(g).nbrs[dir] {
                out.push(h);
            }
        }
    }
    out.retain(|&g| g != f);
    out.sort_unstable();
    out.dedup();
    out
}

/// Spins with `σ(f) σ(g) = +1` exactly when `h(f) = h(g)` for same-parity
/// neighbours, fixed on each class by the gauge.
pub fn sixv_to_mixed_spin(domain: &Domain, h: &HeightFunction, gauge: SpinGauge) -> Result<MixedSpinConfig> {
    let n = domain.num_faces();
    let parity: Vec<Parity> = domain.faces().iter().map(|f| f.parity).collect();
    let mut sigma = vec![0i8; n];
    for (want, (root, sign)) in [(Parity::Even, gauge.even), (Parity::Odd, gauge.odd)] {
        if root >= n || parity[root] != want {
            return Err(Error::InvalidParameter(format!("gauge face {root} is not a {want:?} face")));
        }
        if sign.abs() != 1 {
            return Err(Error::InvalidParameter("gauge sign must be ±1".into()));
        }
        sigma[root] = sign;
        let mut queue = VecDeque::from([root]);
        while let Some(f) = queue.pop_front() {
            for g in same_parity_neighbors(domain, f) {
                let expect = if h.get(f) == h.get(g) { sigma[f] } else { -sigma[f] };
                if sigma[g] == 0 {
                    sigma[g] = expect;
                    queue.push_back(g);
                } else if sigma[g] != expect {
                    return Err(Error::InvalidParameter(format!(
                        "height gives inconsistent spins at faces {f} and {g}"
                    )));
                }
            }
        }
        if let Some(f) = (0..n).find(|&f| parity[f] == want && sigma[f] == 0) {
            return Err(Error::InvalidParameter(format!("face {f} is not reachable from gauge face {root}")));
        }
    }
    Ok(MixedSpinConfig { sigma, parity })
}

/// `(-1)^((h(f) - p(f)) / 2)` with `p` the parity offset of the face.
pub fn height_spin(domain: &Domain, h: &HeightFunction, f: FaceId) -> i8 {
    let k = (h.get(f) - domain.face(f).parity.offset()).div_euclid(2);
    if k.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

#[derive(Clone, Debug)]
pub struct MarginalFkgReport {
    /// `a, b ≤ c`.
    pub in_hypothesis: bool,
    pub free_even_faces: Vec<FaceId>,
    pub lattice: SlackReport,
    /// Every pair of increasing events, when the face count allows it.
    pub events: Option<SlackReport>,
}

impl MarginalFkgReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.lattice.holds(tol) && self.events.as_ref().is_none_or(|e| e.holds(tol))
    }
}

/// Law of the spins on the free even faces, as masses over `{0,1}^k` (bit
/// `i` set when the `i`-th free even face has spin `+1`).
pub fn even_spin_marginal(domain: &Domain, w: &Weights, bc: &BoundaryCondition) -> Result<(Vec<FaceId>, Vec<f64>)> {
    let faces: Vec<FaceId> = bc.free_faces().filter(|&f| domain.face(f).parity == Parity::Even).collect();
    if faces.len() > MARGINAL_MAX_FACES {
        return Err(Error::TooLarge(format!(
            "{} free even faces exceeds the limit of {MARGINAL_MAX_FACES}",
            faces.len()
        )));
    }
    let dist = height_distribution(domain, bc, w)?;
    let mut mass = vec![0.0; 1 << faces.len()];
    for (x, lp) in dist.support.iter().zip(&dist.log_probs) {
        let h = HeightFunction::new(domain, x.clone())?;
        let code = faces
            .iter()
            .enumerate()
            .filter(|(_, &f)| height_spin(domain, &h, f) == 1)
            .fold(0usize, |acc, (i, _)| acc | 1 << i);
        mass[code] += lp.exp();
    }
    Ok((faces, mass))
}

pub fn marginal_fkg_check(domain: &Domain, w: &Weights, bc: &BoundaryCondition) -> Result<MarginalFkgReport> {
    let (faces, mass) = even_spin_marginal(domain, w, bc)?;
    let k = faces.len();
    let mut lattice = SlackReport::new();
    for x in 0..mass.len() {
        for y in x..mass.len() {
            let slack = mass[x | y] * mass[x & y] - mass[x] * mass[y];
            lattice.record(slack, || format!("x={x:#b} y={y:#b}"));
        }
    }
    let events = (k <= MARGINAL_MAX_UPSET_FACES).then(|| all_upset_pairs(k, &mass));
    Ok(MarginalFkgReport { in_hypothesis: w.a <= w.c && w.b <= w.c, free_even_faces: faces, lattice, events })
}

/// Single-site monotonicity of the height measure: for every free face `x`,
/// level `k` and comparable pair `χ ≤ χ'` of configurations off `x`,
/// `P[h(x) ≥ k | χ] ≤ P[h(x) ≥ k | χ']`. Slack is the right side minus the
/// left.
pub fn at_criterion_check(domain: &Domain, w: &Weights, bc: &BoundaryCondition) -> Result<SlackReport> {
    let dist = height_distribution(domain, bc, w)?;
    let probs = dist.probs();
    let mut report = SlackReport::new();
    for x in bc.free_faces() {
        // Outside configuration -> (value at x -> mass).
        let mut groups: HashMap<Vec<i64>, BTreeMap<i64, f64>> = HashMap::new();
        for (cfg, p) in dist.support.iter().zip(&probs) {
            let mut outside = cfg.clone();
            let v = outside.remove(x);
            *groups.entry(outside).or_default().entry(v).or_default() += p;
        }
        let mut keys: Vec<&Vec<i64>> = groups.keys().collect();
        keys.sort();
        let levels: Vec<i64> = {
            let mut l: Vec<i64> = groups.values().flat_map(|g| g.keys().copied()).collect();
            l.sort_unstable();
            l.dedup();
            l
        };
        let tails: Vec<Vec<f64>> = keys
            .iter()
            .map(|k| {
                let g = &groups[*k];
                let total: f64 = g.values().sum();
                levels.iter().map(|&lv| g.range(lv..).map(|(_, p)| p).sum::<f64>() / total).collect()
            })
            .collect();
        for a in 0..keys.len() {
            for b in 0..keys.len() {
                if a == b || !leq(keys[a], keys[b]) {
                    continue;
                }
                for (li, &lv) in levels.iter().enumerate() {
                    let slack = tails[b][li] - tails[a][li];
                    report.record(slack, || format!("face={x} level={lv} lower={:?} upper={:?}", keys[a], keys[b]));
                }
            }
        }
        if keys.len() == 1 {
            report.record(0.0, || format!("face={x} has a single outside configuration"));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{exact_distribution, ModelSpec, SpinBoundary};
    use crate::sixvertex::{checkerboard, enumerate_heights, flat_bc};

    fn boxd(w: usize, h: usize) -> Domain {
        Domain::new(format!("box({w},{h})").parse().unwrap()).unwrap()
    }

    #[test]
    fn single_bond_energy() {
        let d = boxd(2, 1);
        let p = AtParams::new(0.7, -0.3).unwrap();
        let e = at_energy(&d, &SpinPair::all_plus(2), &p, &AtBoundary::Free).unwrap();
        assert!((e - (2.0 * 0.7 - 0.3)).abs() < 1e-15);
    }

    #[test]
    fn global_flips_leave_energy_unchanged() {
        let d = boxd(3, 2);
        let p = AtParams::new(0.4, 0.9).unwrap();
        let s = SpinPair::new(vec![1, -1, 1, 1, -1, -1], vec![-1, -1, 1, -1, 1, 1]).unwrap();
        let e = at_energy(&d, &s, &p, &AtBoundary::Free).unwrap();
        let flip = |v: &[i8]| v.iter().map(|x| -x).collect::<Vec<_>>();
        let s1 = SpinPair::new(flip(&s.tau), s.tau_prime.clone()).unwrap();
        let s2 = SpinPair::new(s.tau.clone(), flip(&s.tau_prime)).unwrap();
        for t in [s1, s2] {
            assert!((at_energy(&d, &t, &p, &AtBoundary::Free).unwrap() - e).abs() < 1e-12);
        }
    }

    #[test]
    fn local_delta_matches_full_energy() {
        let d = boxd(3, 3);
        let p = AtParams::new(-0.3, 0.2).unwrap();
        let s = SpinPair::new(vec![1, -1, 1, 1, -1, -1, 1, 1, -1], vec![-1, 1, 1, -1, 1, 1, -1, 1, 1]).unwrap();
        for bc in [AtBoundary::Free, AtBoundary::Plus, AtBoundary::Minus] {
            let e0 = at_energy(&d, &s, &p, &bc).unwrap();
            for i in 0..9 {
                for (t, sp) in [(-1, 1), (1, -1), (-1, -1)] {
                    let mut s2 = s.clone();
                    s2.tau[i] *= t;
                    s2.tau_prime[i] *= sp;
                    let e1 = at_energy(&d, &s2, &p, &bc).unwrap();
                    let delta = at_local_delta(&d, &s, &p, &bc, i, s2.tau[i], s2.tau_prime[i]);
                    assert!((e1 - e0 - delta).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn measure_matches_oracle() {
        for (w, h) in [(2, 1), (2, 2), (3, 2)] {
            let d = boxd(w, h);
            for (bc, sb) in [
                (AtBoundary::Free, SpinBoundary::Free),
                (AtBoundary::Plus, SpinBoundary::Plus),
                (AtBoundary::Minus, SpinBoundary::Minus),
            ] {
                let p = AtParams::new(-0.35, 0.15).unwrap();
                let main = at_measure_exact(&d, &p, &bc).unwrap();
                let spec = ModelSpec::AshkinTeller { width: w, height: h, j: p.j, u: p.u, boundary: sb };
                let oracle = exact_distribution(&spec).unwrap();
                assert!(main.max_abs_diff(&oracle) < 1e-12);
            }
        }
    }

    #[test]
    fn zero_couplings_are_uniform() {
        let d = boxd(2, 2);
        let m = at_measure_exact(&d, &AtParams::new(0.0, 0.0).unwrap(), &AtBoundary::Plus).unwrap();
        assert_eq!(m.len(), 256);
        assert!(m.probs().iter().all(|p| (p - 1.0 / 256.0).abs() < 1e-15));
    }

    #[test]
    fn decouples_at_zero_four_point_coupling() {
        // τ-correlations equal those of a single Ising model with coupling J.
        let d = boxd(2, 2);
        let j = -0.45;
        let m = at_measure_exact(&d, &AtParams::new(j, 0.0).unwrap(), &AtBoundary::Free).unwrap();
        let bonds = [(0usize, 1usize), (2, 3), (0, 2), (1, 3)];
        let mut z = 0.0;
        let mut corr = 0.0;
        for mask in 0..16u32 {
            let s = |k: usize| if mask >> k & 1 == 1 { -1.0 } else { 1.0 };
            let wgt = (-j * bonds.iter().map(|&(a, b)| s(a) * s(b)).sum::<f64>()).exp();
            z += wgt;
            corr += wgt * s(0) * s(3);
        }
        let at = m.expectation(|c| (c[0] * c[3]) as f64);
        assert!((at - corr / z).abs() < 1e-12);
    }

    #[test]
    fn selfdual_points() {
        let j = 1f64.asinh() / 2.0;
        let (u, c) = selfdual_params(j).unwrap();
        assert!(u.abs() < 1e-15);
        assert!((c - 2f64.sqrt()).abs() < 1e-12);
        assert!(AtParams::new(j, u).unwrap().is_self_dual());
        // c ≤ 2 exactly when J ≥ log(3) / 4.
        let j0 = 3f64.ln() / 4.0;
        assert!((selfdual_params(j0).unwrap().1 - 2.0).abs() < 1e-12);
        assert!(selfdual_params(j0 * 1.01).unwrap().1 < 2.0);
        assert!(selfdual_params(j0 * 0.99).unwrap().1 > 2.0);
        let (u, c) = selfdual_params(20.0).unwrap();
        assert!((u + 20.0 - 0.5 * 2f64.ln()).abs() < 1e-9);
        assert!((c - 1.0).abs() < 1e-12);
        assert!(selfdual_params(0.0).is_err());
        assert!(selfdual_params(-1.0).is_err());
    }

    #[test]
    fn mixed_spin_on_checkerboard_is_constant_per_class() {
        let d = Domain::new("torus(4,4)".parse().unwrap()).unwrap();
        let h = checkerboard(&d);
        let even = (0..16).find(|&f| d.face(f).parity == Parity::Even).unwrap();
        let odd = (0..16).find(|&f| d.face(f).parity == Parity::Odd).unwrap();
        let m = sixv_to_mixed_spin(&d, &h, SpinGauge { even: (even, 1), odd: (odd, -1) }).unwrap();
        assert!(m.class(Parity::Even).iter().all(|&(_, s)| s == 1));
        assert!(m.class(Parity::Odd).iter().all(|&(_, s)| s == -1));
        let flipped = sixv_to_mixed_spin(&d, &h, SpinGauge { even: (even, -1), odd: (odd, -1) }).unwrap();
        assert!(flipped.class(Parity::Even).iter().all(|&(_, s)| s == -1));
        assert!(sixv_to_mixed_spin(&d, &h, SpinGauge { even: (odd, 1), odd: (odd, 1) }).is_err());
    }

    #[test]
    fn mixed_spin_matches_closed_form_and_cycles() {
        let d = boxd(4, 4);
        let even = (0..16).find(|&f| d.face(f).parity == Parity::Even).unwrap();
        let odd = (0..16).find(|&f| d.face(f).parity == Parity::Odd).unwrap();
        let heights = enumerate_heights(&d, &flat_bc(&d)).unwrap();
        for h in &heights {
            let gauge = SpinGauge {
                even: (even, height_spin(&d, h, even)),
                odd: (odd, height_spin(&d, h, odd)),
            };
            let m = sixv_to_mixed_spin(&d, h, gauge).unwrap();
            for f in 0..16 {
                assert_eq!(m.sigma[f], height_spin(&d, h, f));
            }
            // Height-equality signs multiply to +1 around elementary cycles.
            let rel = |f: FaceId, g: FaceId| if h.get(f) == h.get(g) { 1 } else { -1 };
            let cycles: [&[(i64, i64)]; 2] = [&[(0, 0), (1, 1), (2, 0), (1, -1)], &[(0, 0), (1, 1), (0, 2)]];
            for x in 0..4i64 {
                for y in 0..4i64 {
                    for cyc in cycles {
                        let faces: Option<Vec<FaceId>> = cyc.iter().map(|(dx, dy)| d.face_at(x + dx, y + dy)).collect();
                        if let Some(fs) = faces {
                            let prod: i32 = (0..fs.len()).map(|i| rel(fs[i], fs[(i + 1) % fs.len()])).product();
                            assert_eq!(prod, 1);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn marginal_fkg_small_boxes() {
        for n in [3, 4, 5] {
            let d = boxd(n, n);
            let bc = flat_bc(&d);
            for c in [1.0, 1.5, 2.0] {
                let r = marginal_fkg_check(&d, &Weights::with_c(c).unwrap(), &bc).unwrap();
                assert!(r.in_hypothesis);
                assert!(r.holds(1e-12), "n={n} c={c} {:?}", r.lattice);
            }
        }
    }

    #[test]
    fn single_even_face_is_an_equality() {
        let d = boxd(3, 3);
        let r = marginal_fkg_check(&d, &Weights::with_c(1.7).unwrap(), &flat_bc(&d)).unwrap();
        assert_eq!(r.free_even_faces.len(), 1);
        assert!(r.lattice.worst_slack.abs() < 1e-15);
    }

    #[test]
    fn criterion_holds_on_small_boxes() {
        for n in [3, 4] {
            let d = boxd(n, n);
            for c in [1.0, 1.25, 1.5, 2.0] {
                let r = at_criterion_check(&d, &Weights::with_c(c).unwrap(), &flat_bc(&d)).unwrap();
                assert!(r.holds(1e-12), "n={n} c={c} {r:?}");
            }
        }
    }
}
