//! Six-vertex configurations and their height functions.
//!
//! An arrow configuration stores one bit per edge: `true` when the arrow
//! points in the canonical direction (east or north). Heights are greater on
//! the left of an arrow, so an active edge carries `true` exactly when
//! `h(left) = h(right) + 1`.

mod bc;
mod enumerate;
mod transfer;

pub use bc::{admissible, flat_bc, sloped_bc, BcKind, BoundaryCondition, Envelope};
pub use enumerate::{
    arrows_fixed_by_bc, enumerate_arrows, enumerate_arrows_fixed, enumerate_heights,
    arrow_distribution, for_each_arrow_config, for_each_height, height_distribution,
    partition_function, Ensemble, ENUM_MAX_FREE_EDGES, ENUM_MAX_FREE_FACES,
};
pub(crate) use enumerate::LogSum;
pub use transfer::{
    sector_free_energy_limit, transfer_free_energy, transfer_log_z, TRANSFER_MAX_N,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Domain, EdgeId, EdgeKind, FaceId, VertexId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VertexType {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VertexClass {
    A,
    B,
    C,
}

impl VertexType {
    pub const ALL: [VertexType; 6] = [
        VertexType::T1,
        VertexType::T2,
        VertexType::T3,
        VertexType::T4,
        VertexType::T5,
        VertexType::T6,
    ];

    /// Canonical-direction bits of the W, E, S, N edges.
    ///
    /// | type | W | E | S | N |
    /// |------|---|---|---|---|
    /// | 1    | 1 | 1 | 1 | 1 |
    /// | 2    | 0 | 0 | 0 | 0 |
    /// | 3    | 1 | 1 | 0 | 0 |
    /// | 4    | 0 | 0 | 1 | 1 |
    /// | 5    | 1 | 0 | 0 | 1 |
    /// | 6    | 0 | 1 | 1 | 0 |
    ///
    /// Type 5 takes its arrows in from W and E, type 6 from S and N.
    pub fn bits(self) -> [bool; 4] {
        match self {
            VertexType::T1 => [true, true, true, true],
            VertexType::T2 => [false, false, false, false],
            VertexType::T3 => [true, true, false, false],
            VertexType::T4 => [false, false, true, true],
            VertexType::T5 => [true, false, false, true],
            VertexType::T6 => [false, true, true, false],
        }
    }

    /// Inverse of [`VertexType::bits`]; `None` when the ice rule fails.
    pub fn from_bits(bits: [bool; 4]) -> Option<VertexType> {
        let [w, e, s, n] = bits;
        if (w as u8 + s as u8) != (e as u8 + n as u8) {
            return None;
        }
        Some(match (w, e, s, n) {
            (true, true, true, true) => VertexType::T1,
            (false, false, false, false) => VertexType::T2,
            (true, true, false, false) => VertexType::T3,
            (false, false, true, true) => VertexType::T4,
            (true, false, false, true) => VertexType::T5,
            (false, true, true, false) => VertexType::T6,
            _ => unreachable!("ice rule admits six patterns"),
        })
    }

    pub fn class(self) -> VertexClass {
        match self {
            VertexType::T1 | VertexType::T2 => VertexClass::A,
            VertexType::T3 | VertexType::T4 => VertexClass::B,
            VertexType::T5 | VertexType::T6 => VertexClass::C,
        }
    }

    pub fn reversed(self) -> VertexType {
        match self {
            VertexType::T1 => VertexType::T2,
            VertexType::T2 => VertexType::T1,
            VertexType::T3 => VertexType::T4,
            VertexType::T4 => VertexType::T3,
            VertexType::T5 => VertexType::T6,
            VertexType::T6 => VertexType::T5,
        }
    }

    /// 1 to 6.
    pub fn number(self) -> usize {
        self as usize + 1
    }
}

/// Isotropic vertex weights, kept alongside their logarithms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    log: [f64; 3],
}

impl Weights {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Weights> {
        for (name, x) in [("a", a), ("b", b), ("c", c)] {
            if !(x >= 0.0) || !x.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "weight {name} = {x} must be finite and nonnegative"
                )));
            }
        }
        Ok(Weights { a, b, c, log: [a.ln(), b.ln(), c.ln()] })
    }

    pub fn uniform() -> Weights {
        Weights::new(1.0, 1.0, 1.0).unwrap()
    }

    /// `a = b = 1`.
    pub fn with_c(c: f64) -> Result<Weights> {
        Weights::new(1.0, 1.0, c)
    }

    pub fn value(&self, class: VertexClass) -> f64 {
        match class {
            VertexClass::A => self.a,
            VertexClass::B => self.b,
            VertexClass::C => self.c,
        }
    }

    pub fn log_value(&self, class: VertexClass) -> f64 {
        self.log[class as usize]
    }

    /// `Σ count · log weight`, with an empty class contributing zero even
    /// when its weight vanishes.
    pub fn log_weight_of_counts(&self, counts: [usize; 3]) -> f64 {
        let mut total = 0.0;
        for (k, &n) in counts.iter().enumerate() {
            if n > 0 {
                total += n as f64 * self.log[k];
            }
        }
        total
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArrowConfig {
    bits: Vec<bool>,
}

impl ArrowConfig {
    /// Every edge in its canonical direction (all vertices of type 1).
    pub fn canonical(domain: &Domain) -> ArrowConfig {
        ArrowConfig { bits: vec![true; domain.num_edges()] }
    }

    /// Validates length, the ice rule at interior vertices, and that edges
    /// with an exterior side keep their canonical direction.
    pub fn from_bits(domain: &Domain, bits: Vec<bool>) -> Result<ArrowConfig> {
        if bits.len() != domain.num_edges() {
            return Err(Error::InvalidParameter(format!(
                "{} edge bits for a domain with {} edges",
                bits.len(),
                domain.num_edges()
            )));
        }
        for (e, edge) in domain.edges().iter().enumerate() {
            if !edge.is_active() && !bits[e] {
                return Err(Error::InvalidParameter(format!(
                    "edge {e} has an exterior side and must stay canonical"
                )));
            }
        }
        let c = ArrowConfig { bits };
        c.check_ice(domain)?;
        Ok(c)
    }

    pub(crate) fn from_bits_unchecked(bits: Vec<bool>) -> ArrowConfig {
        ArrowConfig { bits }
    }

    pub fn bit(&self, e: EdgeId) -> bool {
        self.bits[e]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub(crate) fn flip(&mut self, e: EdgeId) {
        self.bits[e] = !self.bits[e];
    }

    pub fn check_ice(&self, domain: &Domain) -> Result<()> {
        for v in domain.interior_vertices() {
            self.vertex_type(domain, v)?;
        }
        Ok(())
    }

    fn vertex_type(&self, domain: &Domain, v: VertexId) -> Result<VertexType> {
        let vx = domain.vertex(v);
        if !vx.interior {
            return Err(Error::InvalidParameter(format!(
                "vertex {v} is not interior and carries no type"
            )));
        }
        let bits = vx.edges.map(|e| self.bits[e.expect("interior vertex")]);
        VertexType::from_bits(bits).ok_or(Error::IceRule { vertex: v })
    }

    /// Reverses every active edge.
    pub fn reversed(&self, domain: &Domain) -> ArrowConfig {
        let bits = self
            .bits
            .iter()
            .zip(domain.edges())
            .map(|(&b, e)| if e.is_active() { !b } else { b })
            .collect();
        ArrowConfig { bits }
    }
}

pub fn classify_vertex(domain: &Domain, config: &ArrowConfig, v: VertexId) -> Result<VertexType> {
    config.vertex_type(domain, v)
}

/// Number of interior vertices of each type, indexed by `type number - 1`.
pub fn type_counts(domain: &Domain, config: &ArrowConfig) -> Result<[usize; 6]> {
    let mut counts = [0; 6];
    for v in domain.interior_vertices() {
        counts[config.vertex_type(domain, v)? as usize] += 1;
    }
    Ok(counts)
}

pub fn class_counts(type_counts: [usize; 6]) -> [usize; 3] {
    [
        type_counts[0] + type_counts[1],
        type_counts[2] + type_counts[3],
        type_counts[4] + type_counts[5],
    ]
}

pub fn log_weight(domain: &Domain, config: &ArrowConfig, w: &Weights) -> Result<f64> {
    Ok(w.log_weight_of_counts(class_counts(type_counts(domain, config)?)))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HeightFunction {
    values: Vec<i64>,
}

impl HeightFunction {
    /// Checks the unit-step rule across every active edge.
    pub fn new(domain: &Domain, values: Vec<i64>) -> Result<HeightFunction> {
        if values.len() != domain.num_faces() {
            return Err(Error::InvalidParameter(format!(
                "{} heights for a domain with {} faces",
                values.len(),
                domain.num_faces()
            )));
        }
        for e in domain.active_edges() {
            let edge = domain.edge(e);
            let diff = values[edge.left.unwrap()] - values[edge.right.unwrap()];
            if diff.abs() != 1 {
                return Err(Error::NonLipschitz { edge: e, diff });
            }
        }
        Ok(HeightFunction { values })
    }

    pub(crate) fn from_values_unchecked(values: Vec<i64>) -> HeightFunction {
        HeightFunction { values }
    }

    pub fn get(&self, f: FaceId) -> i64 {
        self.values[f]
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<i64> {
        self.values
    }

    pub fn shifted(&self, k: i64) -> HeightFunction {
        HeightFunction { values: self.values.iter().map(|x| x + k).collect() }
    }

    pub fn abs(&self) -> Vec<i64> {
        self.values.iter().map(|x| x.abs()).collect()
    }
}

/// Class of an interior vertex from the heights of its four faces.
///
/// c when both diagonal pairs agree, a when only the NE/SW pair agrees and b
/// when only the NW/SE pair agrees.
pub fn class_from_heights(ne: i64, nw: i64, sw: i64, se: i64) -> VertexClass {
    match (ne == sw, nw == se) {
        (true, true) => VertexClass::C,
        (true, false) => VertexClass::A,
        (false, true) => VertexClass::B,
        (false, false) => unreachable!("unit steps force one diagonal pair to agree"),
    }
}

pub fn class_counts_from_heights(domain: &Domain, h: &HeightFunction) -> [usize; 3] {
    let mut counts = [0; 3];
    for v in domain.interior_vertices() {
        let f = domain.vertex(v).faces.map(|f| h.values[f.unwrap()]);
        counts[class_from_heights(f[0], f[1], f[2], f[3]) as usize] += 1;
    }
    counts
}

pub fn log_weight_heights(domain: &Domain, h: &HeightFunction, w: &Weights) -> f64 {
    w.log_weight_of_counts(class_counts_from_heights(domain, h))
}

/// Integrates the arrows from the anchor. Fails when the result would be
/// multivalued, which happens on wrapped domains with nonzero winding.
pub fn height_from_config(
    domain: &Domain,
    config: &ArrowConfig,
    anchor: (FaceId, i64),
) -> Result<HeightFunction> {
    config.check_ice(domain)?;
    let n = domain.num_faces();
    if anchor.0 >= n {
        return Err(Error::InvalidParameter(format!("anchor face {} out of range", anchor.0)));
    }
    let mut h: Vec<Option<i64>> = vec![None; n];
    h[anchor.0] = Some(anchor.1);
    let mut stack = vec![anchor.0];
    while let Some(f) = stack.pop() {
        let hf = h[f].unwrap();
        for &e in &domain.face(f).edges {
            let edge = domain.edge(e);
            let (Some(l), Some(r)) = (edge.left, edge.right) else { continue };
            let step = if config.bits[e] { 1 } else { -1 };
            let (g, hg) = if l == f { (r, hf - step) } else { (l, hf + step) };
            match h[g] {
                None => {
                    h[g] = Some(hg);
                    stack.push(g);
                }
                Some(x) if x != hg => {
                    return Err(Error::Multivalued(format!(
                        "faces {f} and {g} disagree across edge {e} (nonzero winding)"
                    )));
                }
                _ => {}
            }
        }
    }
    let values = h
        .into_iter()
        .enumerate()
        .map(|(f, x)| {
            x.ok_or_else(|| Error::InvalidDomain(format!("face {f} unreachable from the anchor")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HeightFunction { values })
}

pub fn config_from_height(domain: &Domain, h: &HeightFunction) -> Result<ArrowConfig> {
    let mut bits = vec![true; domain.num_edges()];
    for e in domain.active_edges() {
        let edge = domain.edge(e);
        let diff = h.values[edge.left.unwrap()] - h.values[edge.right.unwrap()];
        match diff {
            1 => bits[e] = true,
            -1 => bits[e] = false,
            _ => return Err(Error::NonLipschitz { edge: e, diff }),
        }
    }
    Ok(ArrowConfig { bits })
}

/// The alternating 0/1 height: 0 on even faces, 1 on odd faces.
pub fn checkerboard(domain: &Domain) -> HeightFunction {
    HeightFunction { values: domain.faces().iter().map(|f| f.parity.offset()).collect() }
}

/// Restriction on the net arrow flux of a wrapped domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sector {
    Any,
    /// Every row of vertical edges has `N/2 + k` upward arrows, a net
    /// flux of `2k`.
    Excess(i64),
    /// Zero net flux through every row, and on a torus through every
    /// column too, so that the height function is single-valued.
    Balanced,
}

impl Sector {
    pub fn admits(&self, domain: &Domain, config: &ArrowConfig) -> bool {
        match *self {
            Sector::Any => true,
            Sector::Excess(k) => row_fluxes(domain, config).iter().all(|&f| f == 2 * k),
            Sector::Balanced => {
                row_fluxes(domain, config).iter().all(|&f| f == 0)
                    && column_fluxes(domain, config).iter().all(|&f| f == 0)
            }
        }
    }
}

/// Net upward flux through each row of vertical edges of an x-wrapped domain.
/// Empty when the domain does not wrap along x.
pub fn row_fluxes(domain: &Domain, config: &ArrowConfig) -> Vec<i64> {
    if !domain.wraps().0 {
        return Vec::new();
    }
    let mut flux = vec![0; domain.rows()];
    for (e, edge) in domain.edges().iter().enumerate() {
        if edge.kind == EdgeKind::Vertical {
            flux[edge.row] += if config.bits[e] { 1 } else { -1 };
        }
    }
    flux
}

/// Net eastward flux through each column of horizontal edges of a y-wrapped
/// domain. Empty when the domain does not wrap along y.
pub fn column_fluxes(domain: &Domain, config: &ArrowConfig) -> Vec<i64> {
    if !domain.wraps().1 {
        return Vec::new();
    }
    let mut flux = vec![0; domain.cols()];
    for (e, edge) in domain.edges().iter().enumerate() {
        if edge.kind == EdgeKind::Horizontal {
            flux[edge.col] += if config.bits[e] { 1 } else { -1 };
        }
    }
    flux
}
