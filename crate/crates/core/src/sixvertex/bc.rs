use std::cmp::Reverse;
use std::collections::BinaryHeap;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use super::HeightFunction;
use crate::error::{Error, Result};
use crate::lattice::{Domain, FaceId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum BcKind {
    /// 0 on even boundary faces, 1 on odd ones.
    Flat,
    Sloped { sx: (i64, i64), sy: (i64, i64) },
    Explicit,
}

/// Fixed heights on a subset of faces, usually the boundary faces.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryCondition {
    pub kind: BcKind,
    values: Vec<Option<i64>>,
}

impl BoundaryCondition {
    /// Any set of fixed faces; rejected unless some height function extends it.
    pub fn explicit(domain: &Domain, values: Vec<Option<i64>>) -> Result<BoundaryCondition> {
        if values.len() != domain.num_faces() {
            return Err(Error::InvalidParameter(format!(
                "{} entries for a domain with {} faces",
                values.len(),
                domain.num_faces()
            )));
        }
        let bc = BoundaryCondition { kind: BcKind::Explicit, values };
        admissible(domain, &bc)?;
        Ok(bc)
    }

    pub fn value(&self, f: FaceId) -> Option<i64> {
        self.values[f]
    }

    pub fn values(&self) -> &[Option<i64>] {
        &self.values
    }

    pub fn is_fixed(&self, f: FaceId) -> bool {
        self.values[f].is_some()
    }

    pub fn fixed_faces(&self) -> impl Iterator<Item = FaceId> + '_ {
        (0..self.values.len()).filter(move |&f| self.values[f].is_some())
    }

    pub fn free_faces(&self) -> impl Iterator<Item = FaceId> + '_ {
        (0..self.values.len()).filter(move |&f| self.values[f].is_none())
    }

    pub fn num_free(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    /// Adds `k` to every fixed value. Odd shifts swap the parity convention
    /// but stay admissible.
    pub fn shifted(&self, k: i64) -> BoundaryCondition {
        BoundaryCondition {
            kind: self.kind.clone(),
            values: self.values.iter().map(|v| v.map(|x| x + k)).collect(),
        }
    }

    /// Pointwise comparison on a shared fixed set.
    pub fn dominates(&self, other: &BoundaryCondition) -> bool {
        self.values.len() == other.values.len()
            && self.values.iter().zip(&other.values).all(|(a, b)| match (a, b) {
                (Some(x), Some(y)) => x >= y,
                (None, None) => true,
                _ => false,
            })
    }
}

pub fn flat_bc(domain: &Domain) -> BoundaryCondition {
    let mut values = vec![None; domain.num_faces()];
    for &f in domain.boundary_faces() {
        values[f] = Some(domain.face(f).parity.offset());
    }
    BoundaryCondition { kind: BcKind::Flat, values }
}

/// Boundary face `f` gets the integer of the parity of `f` nearest to
/// `s · center(f)`, rounding ties upward.
pub fn sloped_bc(domain: &Domain, sx: Rational64, sy: Rational64) -> Result<BoundaryCondition> {
    let one = Rational64::from_integer(1);
    if sx > one || sx < -one || sy > one || sy < -one {
        return Err(Error::InvalidParameter(format!(
            "slope ({sx}, {sy}) must lie in [-1,1] x [-1,1]"
        )));
    }
    let half = Rational64::new(1, 2);
    let mut values = vec![None; domain.num_faces()];
    for &f in domain.boundary_faces() {
        let face = domain.face(f);
        let (x, y) = face.center;
        let t = sx * x + sy * y;
        let p = face.parity.offset();
        let m = ((t - p) / 2 + half).floor().to_integer();
        values[f] = Some(p + 2 * m);
    }
    let bc = BoundaryCondition {
        kind: BcKind::Sloped { sx: (*sx.numer(), *sx.denom()), sy: (*sy.numer(), *sy.denom()) },
        values,
    };
    admissible(domain, &bc)?;
    Ok(bc)
}

/// Pointwise lowest and highest extensions of a boundary condition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Envelope {
    pub lower: Vec<i64>,
    pub upper: Vec<i64>,
}

impl Envelope {
    pub fn lowest(&self) -> HeightFunction {
        HeightFunction::from_values_unchecked(self.lower.clone())
    }

    pub fn highest(&self) -> HeightFunction {
        HeightFunction::from_values_unchecked(self.upper.clone())
    }
}

/// Decides whether the fixed values extend to a height function, returning
/// the envelope `max_g (ξ(g) - d(f,g)) <= h(f) <= min_g (ξ(g) + d(f,g))`.
pub fn admissible(domain: &Domain, bc: &BoundaryCondition) -> Result<Envelope> {
    let fixed: Vec<(FaceId, i64)> = bc.fixed_faces().map(|f| (f, bc.values[f].unwrap())).collect();
    let Some(&(f0, v0)) = fixed.first() else {
        return Err(Error::Inadmissible("no fixed face anchors the heights".into()));
    };
    let parity0 = (v0 - domain.face(f0).parity.offset()).rem_euclid(2);
    for &(f, v) in &fixed {
        if (v - domain.face(f).parity.offset()).rem_euclid(2) != parity0 {
            return Err(Error::Inadmissible(format!(
                "face {f} value {v} has the wrong parity relative to face {f0}"
            )));
        }
    }
    let negated: Vec<(FaceId, i64)> = fixed.iter().map(|&(f, v)| (f, -v)).collect();
    let (Some(upper), Some(neg_lower)) = (relax(domain, &fixed), relax(domain, &negated)) else {
        return Err(Error::Inadmissible("some face is unreachable from the fixed set".into()));
    };
    let lower: Vec<i64> = neg_lower.into_iter().map(|x| -x).collect();
    for &(f, v) in &fixed {
        if lower[f] != v || upper[f] != v {
            return Err(Error::Inadmissible(format!(
                "face {f} value {v} is incompatible with the other fixed values \
                 (allowed range {}..={})",
                lower[f], upper[f]
            )));
        }
    }
    Ok(Envelope { lower, upper })
}

// Multi-source shortest paths: out[f] = min over sources (value + d(f, source)).
fn relax(domain: &Domain, sources: &[(FaceId, i64)]) -> Option<Vec<i64>> {
    let mut out: Vec<Option<i64>> = vec![None; domain.num_faces()];
    let mut heap = BinaryHeap::new();
    for &(f, v) in sources {
        if out[f].map_or(true, |x| v < x) {
            out[f] = Some(v);
            heap.push(Reverse((v, f)));
        }
    }
    while let Some(Reverse((d, f))) = heap.pop() {
        if out[f].is_some_and(|x| d > x) {
            continue;
        }
        for &g in domain.face(f).nbrs.iter().flatten() {
            if out[g].map_or(true, |x| d + 1 < x) {
                out[g] = Some(d + 1);
                heap.push(Reverse((d + 1, g)));
            }
        }
    }
    out.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sixvertex::enumerate_heights;

    fn dom(s: &str) -> Domain {
        Domain::new(s.parse().unwrap()).unwrap()
    }

    #[test]
    fn zero_slope_is_flat() {
        let d = dom("box(5,4)");
        let s = sloped_bc(&d, 0.into(), 0.into()).unwrap();
        assert_eq!(s.values(), flat_bc(&d).values());
    }

    #[test]
    fn extreme_slope_freezes_box() {
        let d = dom("box(3,3)");
        let bc = sloped_bc(&d, 1.into(), 1.into()).unwrap();
        let env = admissible(&d, &bc).unwrap();
        assert_eq!(env.lower, env.upper);
        assert_eq!(enumerate_heights(&d, &bc).unwrap().len(), 1);
    }

    #[test]
    fn half_slope_rises_every_two_faces() {
        let d = dom("strip(4,3)");
        let bc = sloped_bc(&d, Rational64::new(1, 2), 0.into()).unwrap();
        let bottom: Vec<i64> =
            (-4..=4).map(|x| bc.value(d.face_by_center(x, 0).unwrap()).unwrap()).collect();
        assert_eq!(bottom, vec![-2, -1, 0, -1, 0, 1, 2, 1, 2]);
        for w in bottom.windows(5) {
            assert_eq!(w[4] - w[0], 2);
        }
    }

    #[test]
    fn envelope_rejects_incompatible_values() {
        let d = dom("box(3,1)");
        let err = BoundaryCondition::explicit(&d, vec![Some(0), None, Some(4)]).unwrap_err();
        assert!(matches!(err, Error::Inadmissible(_)));
        let err = BoundaryCondition::explicit(&d, vec![Some(0), None, Some(1)]).unwrap_err();
        assert!(matches!(err, Error::Inadmissible(_)));
        let bc = BoundaryCondition::explicit(&d, vec![Some(0), None, Some(2)]).unwrap();
        let env = admissible(&d, &bc).unwrap();
        assert_eq!(env.lower, vec![0, 1, 2]);
    }

    #[test]
    fn lowest_extension_is_a_height_function() {
        let d = dom("box(6,5)");
        let bc = sloped_bc(&d, Rational64::new(1, 3), Rational64::new(-2, 3)).unwrap();
        let env = admissible(&d, &bc).unwrap();
        HeightFunction::new(&d, env.lower.clone()).unwrap();
        HeightFunction::new(&d, env.upper.clone()).unwrap();
    }

    #[test]
    fn slope_out_of_range() {
        let d = dom("box(3,3)");
        assert!(sloped_bc(&d, Rational64::new(3, 2), 0.into()).is_err());
    }
}
