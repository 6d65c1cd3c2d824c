//! Directed loops of an arrow configuration, loop reversal and per-row
//! arrow unbalance.
//!
//! At a vertex of class a or b each incoming arrow continues straight. At a
//! class c vertex the two incoming arrows are opposite and each turns left.

use num_rational::Rational64;

use crate::error::{Error, Result};
use crate::lattice::{Domain, EdgeId, EdgeKind};
use crate::sixvertex::{classify_vertex, log_weight, row_fluxes, ArrowConfig, Weights};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Splitting {
    LeftTurn,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopDecomposition {
    /// Each loop lists its edges in arrow order starting from its least
    /// edge; loops are sorted by that edge.
    pub loops: Vec<Vec<EdgeId>>,
    pub splitting: Splitting,
}

impl LoopDecomposition {
    /// Loop index of every edge.
    pub fn loop_of(&self, num_edges: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; num_edges];
        for (k, l) in self.loops.iter().enumerate() {
            for &e in l {
                out[e] = k;
            }
        }
        out
    }
}

// Slots in `Vertex::edges`.
const W: usize = 0;
const E: usize = 1;
const S: usize = 2;
const N: usize = 3;

/// Vertex reached by the arrow on `e` and the slot it enters through.
fn arrow_head(domain: &Domain, config: &ArrowConfig, e: EdgeId) -> (usize, usize) {
    let edge = domain.edge(e);
    match (edge.kind, config.bit(e)) {
        (EdgeKind::Horizontal, true) => (edge.head, W),
        (EdgeKind::Horizontal, false) => (edge.tail, E),
        (EdgeKind::Vertical, true) => (edge.head, S),
        (EdgeKind::Vertical, false) => (edge.tail, N),
    }
}

fn is_outgoing(config: &ArrowConfig, slot: usize, e: EdgeId) -> bool {
    match slot {
        W | S => !config.bit(e),
        _ => config.bit(e),
    }
}

/// Successor of every edge along its loop.
fn successors(domain: &Domain, config: &ArrowConfig) -> Result<Vec<EdgeId>> {
    let mut next = vec![usize::MAX; domain.num_edges()];
    for e in 0..domain.num_edges() {
        let (v, slot) = arrow_head(domain, config, e);
        let edges = domain.vertex(v).edges;
        let present: Vec<usize> = (0..4).filter(|&k| edges[k].is_some()).collect();
        let outs: Vec<usize> = present.iter().copied().filter(|&k| is_outgoing(config, k, edges[k].unwrap())).collect();
        if outs.len() * 2 != present.len() {
            return Err(Error::InvalidParameter(format!("arrow flux does not close at vertex {v}")));
        }
        let out = if outs.len() == 1 {
            outs[0]
        } else {
            let straight = match slot {
                W => E,
                E => W,
                S => N,
                _ => S,
            };
            if outs.contains(&straight) {
                straight
            } else {
                match slot {
                    W => N,
                    E => S,
                    S => W,
                    _ => E,
                }
            }
        };
        next[e] = edges[out].unwrap();
    }
    Ok(next)
}

pub fn decompose(domain: &Domain, config: &ArrowConfig) -> Result<LoopDecomposition> {
    let next = successors(domain, config)?;
    let mut seen = vec![false; domain.num_edges()];
    let mut loops = Vec::new();
    for start in 0..domain.num_edges() {
        if seen[start] {
            continue;
        }
        let mut l = Vec::new();
        let mut e = start;
        while !seen[e] {
            seen[e] = true;
            l.push(e);
            e = next[e];
        }
        if e != start {
            return Err(Error::InvalidParameter(format!("edge {start} does not lie on a closed loop")));
        }
        loops.push(l);
    }
    Ok(LoopDecomposition { loops, splitting: Splitting::LeftTurn })
}

/// Reverses the arrows on the chosen loops of `decompose(config)`.
pub fn reverse_loops(domain: &Domain, config: &ArrowConfig, loop_ids: &[usize]) -> Result<ArrowConfig> {
    let dec = decompose(domain, config)?;
    reverse_in(config, &dec, loop_ids)
}

/// Like [`reverse_loops`] with a decomposition computed beforehand.
pub fn reverse_in(config: &ArrowConfig, dec: &LoopDecomposition, loop_ids: &[usize]) -> Result<ArrowConfig> {
    let mut out = config.clone();
    let mut used = vec![false; dec.loops.len()];
    for &k in loop_ids {
        if k >= dec.loops.len() {
            return Err(Error::InvalidParameter(format!("loop {k} of {}", dec.loops.len())));
        }
        if std::mem::replace(&mut used[k], true) {
            continue;
        }
        for &e in &dec.loops[k] {
            out.flip(e);
        }
    }
    Ok(out)
}

/// `log w(reversed) - log w(config)`.
pub fn weight_ratio(domain: &Domain, config: &ArrowConfig, reversed: &ArrowConfig, w: &Weights) -> Result<f64> {
    Ok(log_weight(domain, reversed, w)? - log_weight(domain, config, w)?)
}

/// Interior vertices whose type differs between two configurations.
pub fn changed_vertices(domain: &Domain, x: &ArrowConfig, y: &ArrowConfig) -> Result<usize> {
    let mut n = 0;
    for v in domain.interior_vertices() {
        if classify_vertex(domain, x, v)? != classify_vertex(domain, y, v)? {
            n += 1;
        }
    }
    Ok(n)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnbalanceProfile {
    /// Net upward arrows through each row of vertical edges.
    pub per_row: Vec<i64>,
    /// Flux divided by the circumference when every row agrees.
    pub alpha: Option<Rational64>,
}

pub fn unbalance(domain: &Domain, config: &ArrowConfig) -> Result<UnbalanceProfile> {
    if !domain.wraps().0 {
        return Err(Error::InvalidDomain(format!("{} does not wrap horizontally", domain.shape())));
    }
    let per_row = row_fluxes(domain, config);
    let alpha = per_row
        .iter()
        .all(|&f| f == per_row[0])
        .then(|| Rational64::new(per_row[0], domain.cols() as i64));
    Ok(UnbalanceProfile { per_row, alpha })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sixvertex::{class_counts, config_from_height, enumerate_arrows, type_counts, HeightFunction, Sector, VertexType};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dom(s: &str) -> Domain {
        Domain::new(s.parse().unwrap()).unwrap()
    }

    #[test]
    fn canonical_torus_gives_straight_loops() {
        let d = dom("torus(2,2)");
        let dec = decompose(&d, &ArrowConfig::canonical(&d)).unwrap();
        assert_eq!(dec.loops.len(), 4);
        for l in &dec.loops {
            assert_eq!(l.len(), 2);
            assert!(l.iter().all(|&e| d.edge(e).kind == d.edge(l[0]).kind));
        }
    }

    #[test]
    fn checkerboard_gives_small_squares() {
        let d = dom("torus(2,2)");
        let h = crate::sixvertex::checkerboard(&d);
        let c = config_from_height(&d, &h).unwrap();
        let counts = type_counts(&d, &c).unwrap();
        assert_eq!(counts[0] + counts[1] + counts[2] + counts[3], 0);
        let dec = decompose(&d, &c).unwrap();
        assert!(dec.loops.iter().all(|l| l.len() == 4));
        assert_eq!(dec.loops.len(), 2);
    }

    #[test]
    fn open_boundary_is_rejected() {
        let d = dom("cylinder(4,3)");
        assert!(decompose(&d, &ArrowConfig::canonical(&d)).is_err());
    }

    #[test]
    fn partition_and_involution_on_torus_enumeration() {
        let d = dom("torus(4,4)");
        let configs = enumerate_arrows(&d, Sector::Any).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for c in configs.iter().step_by(97) {
            let dec = decompose(&d, c).unwrap();
            let total: usize = dec.loops.iter().map(Vec::len).sum();
            assert_eq!(total, d.num_edges());
            assert!(dec.loop_of(d.num_edges()).iter().all(|&k| k != usize::MAX));
            let ids: Vec<usize> = (0..dec.loops.len()).filter(|_| rng.gen_bool(0.5)).collect();
            let r = reverse_in(c, &dec, &ids).unwrap();
            r.check_ice(&d).unwrap();
            assert_eq!(&reverse_in(&r, &dec, &ids).unwrap(), c);
            let flux = unbalance(&d, c).unwrap();
            assert!(flux.per_row.iter().all(|&f| f == flux.per_row[0]));
        }
    }

    #[test]
    fn full_reversal_conjugates_types() {
        let d = dom("torus(4,4)");
        let mut h = crate::sixvertex::checkerboard(&d).into_values();
        h[5] += 2;
        let c = config_from_height(&d, &HeightFunction::new(&d, h).unwrap()).unwrap();
        let dec = decompose(&d, &c).unwrap();
        let all: Vec<usize> = (0..dec.loops.len()).collect();
        let r = reverse_in(&c, &dec, &all).unwrap();
        assert_eq!(r, c.reversed(&d));
        for v in d.interior_vertices() {
            let t = classify_vertex(&d, &c, v).unwrap();
            assert_eq!(classify_vertex(&d, &r, v).unwrap(), t.reversed());
        }
        let w = Weights::new(1.0, 1.0, 1.7).unwrap();
        assert_eq!(weight_ratio(&d, &c, &r, &w).unwrap(), 0.0);
        assert_eq!(reverse_in(&c, &dec, &[]).unwrap(), c);
        assert!(reverse_in(&c, &dec, &[dec.loops.len()]).is_err());
    }

    #[test]
    fn ratio_counts_c_vertices() {
        let d = dom("torus(4,4)");
        let w = Weights::with_c(2.0).unwrap();
        let mut nonzero = 0;
        for c in enumerate_arrows(&d, Sector::Any).unwrap().iter().step_by(211) {
            let dec = decompose(&d, c).unwrap();
            for k in 0..dec.loops.len() {
                let r = reverse_in(c, &dec, &[k]).unwrap();
                let before = class_counts(type_counts(&d, c).unwrap());
                let after = class_counts(type_counts(&d, &r).unwrap());
                let ratio = weight_ratio(&d, c, &r, &w).unwrap();
                assert!((ratio - (after[2] as f64 - before[2] as f64) * 2f64.ln()).abs() < 1e-12);
                assert!(ratio.abs() <= changed_vertices(&d, c, &r).unwrap() as f64 * 2f64.ln() + 1e-12);
                nonzero += (ratio != 0.0) as usize;
            }
        }
        assert!(nonzero > 0);
    }

    #[test]
    fn extreme_flux() {
        let d = dom("torus(4,4)");
        let p = unbalance(&d, &ArrowConfig::canonical(&d)).unwrap();
        assert_eq!(p.per_row, vec![4; 4]);
        assert_eq!(p.alpha, Some(Rational64::from_integer(1)));
        let h = crate::sixvertex::checkerboard(&d);
        let p = unbalance(&d, &config_from_height(&d, &h).unwrap()).unwrap();
        assert!(p.per_row.iter().all(|&f| f == 0));
        assert!(unbalance(&dom("box(3,3)"), &ArrowConfig::canonical(&dom("box(3,3)"))).is_err());
        assert_eq!(VertexType::T1.reversed(), VertexType::T2);
    }
}
