use super::{
    admissible, log_weight, log_weight_heights, transfer_log_z, ArrowConfig, BoundaryCondition,
    HeightFunction, Sector, Weights,
};
use crate::dist::ExactDistribution;
use crate::error::{Error, Result};
use crate::lattice::{Domain, EdgeId, FaceId, Shape, VertexId};

pub const ENUM_MAX_FREE_FACES: usize = 26;
pub const ENUM_MAX_FREE_EDGES: usize = 32;

/// What a partition function sums over.
#[derive(Clone, Debug)]
pub enum Ensemble {
    /// Height functions extending fixed values.
    Boundary(BoundaryCondition),
    /// Arrow configurations of a wrapped domain.
    Sector(Sector),
}

/// Visits every height function extending `bc` once, in lexicographic order
/// of the free faces' values (free faces taken by increasing id).
pub fn for_each_height<F: FnMut(&HeightFunction)>(
    domain: &Domain,
    bc: &BoundaryCondition,
    mut visit: F,
) -> Result<()> {
    let free: Vec<FaceId> = bc.free_faces().collect();
    if free.len() > ENUM_MAX_FREE_FACES {
        return Err(Error::TooLarge(format!(
            "{} free faces (limit {ENUM_MAX_FREE_FACES})",
            free.len()
        )));
    }
    let env = admissible(domain, bc)?;
    let mut order = vec![usize::MAX; domain.num_faces()];
    for (i, &f) in free.iter().enumerate() {
        order[f] = i;
    }
    // Neighbours already valued when face `free[i]` is reached.
    let constraints: Vec<Vec<FaceId>> = free
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            domain
                .face(f)
                .nbrs
                .iter()
                .flatten()
                .copied()
                .filter(|&g| bc.is_fixed(g) || order[g] < i)
                .collect()
        })
        .collect();
    let mut h = HeightFunction::from_values_unchecked(env.lower.clone());
    fn go<F: FnMut(&HeightFunction)>(
        i: usize,
        free: &[FaceId],
        constraints: &[Vec<FaceId>],
        lower: &[i64],
        upper: &[i64],
        h: &mut HeightFunction,
        visit: &mut F,
    ) {
        if i == free.len() {
            visit(h);
            return;
        }
        let f = free[i];
        let mut v = lower[f];
        while v <= upper[f] {
            if constraints[i].iter().all(|&g| (h.values[g] - v).abs() == 1) {
                h.values[f] = v;
                go(i + 1, free, constraints, lower, upper, h, visit);
            }
            v += 2;
        }
        h.values[f] = lower[f];
    }
    go(0, &free, &constraints, &env.lower, &env.upper, &mut h, &mut visit);
    Ok(())
}

pub fn enumerate_heights(domain: &Domain, bc: &BoundaryCondition) -> Result<Vec<HeightFunction>> {
    let mut out = Vec::new();
    for_each_height(domain, bc, |h| out.push(h.clone()))?;
    Ok(out)
}

/// Visits every arrow configuration satisfying the ice rule and the sector,
/// with the given edges pinned. Inactive edges stay canonical.
pub fn for_each_arrow_config<F: FnMut(&ArrowConfig)>(
    domain: &Domain,
    sector: Sector,
    fixed: &[Option<bool>],
    mut visit: F,
) -> Result<()> {
    if fixed.len() != domain.num_edges() {
        return Err(Error::InvalidParameter("pinned-edge vector has the wrong length".into()));
    }
    if sector != Sector::Any && !domain.wraps().0 {
        return Err(Error::InvalidParameter(format!(
            "sector restrictions need an x-wrapped domain, got {}",
            domain.shape()
        )));
    }
    if let Sector::Excess(k) = sector {
        if 2 * k.unsigned_abs() as usize > domain.cols() {
            return Err(Error::InfeasibleSector(format!(
                "excess {k} on circumference {}",
                domain.cols()
            )));
        }
    }
    let mut bits = vec![true; domain.num_edges()];
    let mut is_free = vec![false; domain.num_edges()];
    for e in domain.active_edges() {
        match fixed[e] {
            Some(b) => bits[e] = b,
            None => is_free[e] = true,
        }
    }
    let mut order: Vec<EdgeId> = Vec::new();
    let mut seen = vec![false; domain.num_edges()];
    for v in domain.interior_vertices() {
        for e in domain.vertex(v).edges.iter().flatten() {
            if is_free[*e] && !seen[*e] {
                seen[*e] = true;
                order.push(*e);
            }
        }
    }
    for e in 0..domain.num_edges() {
        if is_free[e] && !seen[e] {
            order.push(e);
        }
    }
    if order.len() > ENUM_MAX_FREE_EDGES {
        return Err(Error::TooLarge(format!(
            "{} free edges (limit {ENUM_MAX_FREE_EDGES})",
            order.len()
        )));
    }
    let mut position = vec![usize::MAX; domain.num_edges()];
    for (i, &e) in order.iter().enumerate() {
        position[e] = i;
    }
    // Vertices whose last free edge is at position i; those with no free edge
    // are checked once up front.
    let mut completes: Vec<Vec<VertexId>> = vec![Vec::new(); order.len()];
    let mut static_vertices = Vec::new();
    for v in domain.interior_vertices() {
        let last = domain
            .vertex(v)
            .edges
            .iter()
            .flatten()
            .filter(|e| is_free[**e])
            .map(|e| position[*e])
            .max();
        match last {
            Some(i) => completes[i].push(v),
            None => static_vertices.push(v),
        }
    }
    let ice = |bits: &[bool], v: VertexId| {
        let [w, e, s, n] = domain.vertex(v).edges.map(|e| bits[e.unwrap()] as u8);
        w + s == e + n
    };
    if static_vertices.iter().any(|&v| !ice(&bits, v)) {
        return Ok(());
    }
    let mut config = ArrowConfig::from_bits_unchecked(bits);
    #[allow(clippy::too_many_arguments)]
    fn go<F: FnMut(&ArrowConfig)>(
        i: usize,
        order: &[EdgeId],
        completes: &[Vec<VertexId>],
        ice: &dyn Fn(&[bool], VertexId) -> bool,
        domain: &Domain,
        sector: Sector,
        config: &mut ArrowConfig,
        visit: &mut F,
    ) {
        if i == order.len() {
            if sector.admits(domain, config) {
                visit(config);
            }
            return;
        }
        for b in [false, true] {
            config.bits[order[i]] = b;
            if completes[i].iter().all(|&v| ice(&config.bits, v)) {
                go(i + 1, order, completes, ice, domain, sector, config, visit);
            }
        }
    }
    go(0, &order, &completes, &ice, domain, sector, &mut config, &mut visit);
    Ok(())
}

pub fn enumerate_arrows_fixed(
    domain: &Domain,
    sector: Sector,
    fixed: &[Option<bool>],
) -> Result<Vec<ArrowConfig>> {
    let mut out = Vec::new();
    for_each_arrow_config(domain, sector, fixed, |c| out.push(c.clone()))?;
    Ok(out)
}

pub fn enumerate_arrows(domain: &Domain, sector: Sector) -> Result<Vec<ArrowConfig>> {
    enumerate_arrows_fixed(domain, sector, &vec![None; domain.num_edges()])
}

/// Pins every active edge whose two faces are both fixed by `bc`.
pub fn arrows_fixed_by_bc(domain: &Domain, bc: &BoundaryCondition) -> Vec<Option<bool>> {
    domain
        .edges()
        .iter()
        .map(|edge| match (edge.left, edge.right) {
            (Some(l), Some(r)) => match (bc.value(l), bc.value(r)) {
                (Some(x), Some(y)) => Some(x - y == 1),
                _ => None,
            },
            _ => None,
        })
        .collect()
}

/// `log Σ w(ω)` by enumeration; cylinders beyond the enumeration limit use
/// the transfer matrix. An empty ensemble gives `-∞`.
pub fn partition_function(domain: &Domain, ensemble: &Ensemble, w: &Weights) -> Result<f64> {
    let mut acc = LogSum::default();
    match ensemble {
        Ensemble::Boundary(bc) => {
            for_each_height(domain, bc, |h| acc.add(log_weight_heights(domain, h, w)))?;
        }
        Ensemble::Sector(sector) => {
            let result = for_each_arrow_config(
                domain,
                *sector,
                &vec![None; domain.num_edges()],
                |c| acc.add(log_weight(domain, c, w).expect("enumerated configs obey the ice rule")),
            );
            match (result, domain.shape()) {
                (Err(Error::TooLarge(_)), Shape::Cylinder { circumference, height }) => {
                    return transfer_log_z(circumference, height, w, *sector);
                }
                (r, _) => r?,
            }
        }
    }
    Ok(acc.value())
}

/// The weighted measure on height functions extending `bc`, each encoded
/// as its vector of face heights.
pub fn height_distribution(
    domain: &Domain,
    bc: &BoundaryCondition,
    w: &Weights,
) -> Result<ExactDistribution> {
    let mut items = Vec::new();
    for_each_height(domain, bc, |h| {
        items.push((h.values().to_vec(), log_weight_heights(domain, h, w)))
    })?;
    let params = format!("{} a={} b={} c={} bc={:?}", domain.shape(), w.a, w.b, w.c, bc.values());
    ExactDistribution::from_log_weights("sixvertex-heights", &params, items)
}

/// The weighted measure on arrow configurations in a sector, each encoded as
/// its vector of edge bits.
pub fn arrow_distribution(domain: &Domain, sector: Sector, w: &Weights) -> Result<ExactDistribution> {
    let mut items = Vec::new();
    for_each_arrow_config(domain, sector, &vec![None; domain.num_edges()], |c| {
        let code = c.bits().iter().map(|&b| b as i64).collect();
        items.push((code, log_weight(domain, c, w).expect("enumerated configs obey the ice rule")))
    })?;
    let params = format!("{} a={} b={} c={} sector={sector:?}", domain.shape(), w.a, w.b, w.c);
    ExactDistribution::from_log_weights("sixvertex-arrows", &params, items)
}

/// Streaming log-sum-exp.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LogSum {
    max: f64,
    sum: f64,
}

impl Default for LogSum {
    fn default() -> Self {
        LogSum { max: f64::NEG_INFINITY, sum: 0.0 }
    }
}

impl LogSum {
    pub(crate) fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.sum += (x - self.max).exp();
        }
    }

    pub(crate) fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}
