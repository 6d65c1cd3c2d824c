//! Row-to-row transfer operator on cylinders.
//!
//! A row state is the set of N vertical arrows crossing one row of faces,
//! bit `i` set when the arrow at column `i` points north. One application
//! sweeps the vertices of a row left to right, carrying the horizontal arrow
//! between consecutive vertices and closing the loop on the wrap edge.

use super::{Sector, VertexType, Weights};
use crate::error::{Error, Result};

pub const TRANSFER_MAX_N: usize = 20;

struct Transfer {
    n: usize,
    // weight[w][e][s][n] of the vertex with those canonical bits.
    weight: [[[[f64; 2]; 2]; 2]; 2],
}

impl Transfer {
    fn new(n: usize, w: &Weights) -> Result<Transfer> {
        if n == 0 || n % 2 != 0 {
            return Err(Error::InvalidParameter(format!("circumference {n} must be even and positive")));
        }
        if n > TRANSFER_MAX_N {
            return Err(Error::TooLarge(format!(
                "transfer matrix with N = {n} (limit {TRANSFER_MAX_N})"
            )));
        }
        let mut weight = [[[[0.0; 2]; 2]; 2]; 2];
        for t in VertexType::ALL {
            let [bw, be, bs, bn] = t.bits().map(usize::from);
            weight[bw][be][bs][bn] = w.value(t.class());
        }
        Ok(Transfer { n, weight })
    }

    /// `out(s') = Σ_s v(s) T(s, s')`.
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let size = 1usize << self.n;
        // Index: (state, carry, wrap) with the carry the W arrow of the next
        // vertex and `wrap` the guessed arrow on the closing edge.
        let mut cur = vec![0.0; 4 * size];
        let mut next = vec![0.0; 4 * size];
        for s in 0..size {
            if v[s] != 0.0 {
                cur[s * 4] = v[s];
                cur[s * 4 + 3] = v[s];
            }
        }
        for i in 0..self.n {
            next.iter_mut().for_each(|x| *x = 0.0);
            let bit = 1usize << i;
            for s in 0..size {
                let south = usize::from(s & bit != 0);
                for slot in 0..4 {
                    let x = cur[s * 4 + slot];
                    if x == 0.0 {
                        continue;
                    }
                    let west = slot >> 1;
                    let wrap = slot & 1;
                    for north in 0..2 {
                        let east = (west + south) as isize - north as isize;
                        if !(0..=1).contains(&east) {
                            continue;
                        }
                        let east = east as usize;
                        let wt = self.weight[west][east][south][north];
                        if wt == 0.0 {
                            continue;
                        }
                        let t = if north == 1 { s | bit } else { s & !bit };
                        next[t * 4 + (east << 1) + wrap] += x * wt;
                    }
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        for s in 0..size {
            out[s] = cur[s * 4] + cur[s * 4 + 3];
        }
    }

    fn sector_mask(&self, sector: Sector) -> Result<Vec<bool>> {
        let size = 1usize << self.n;
        let target = match sector {
            Sector::Any => return Ok(vec![true; size]),
            Sector::Balanced => self.n as i64 / 2,
            Sector::Excess(k) => self.n as i64 / 2 + k,
        };
        if target < 0 || target > self.n as i64 {
            return Err(Error::InfeasibleSector(format!(
                "{sector:?} needs {target} upward arrows out of {}",
                self.n
            )));
        }
        Ok((0..size).map(|s| s.count_ones() as i64 == target).collect())
    }
}

/// `log Z` of the `n × m` cylinder (circumference `n`, `m` rows of faces) in
/// the given sector.
pub fn transfer_log_z(n: usize, m: usize, w: &Weights, sector: Sector) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParameter("cylinder height must be at least 1".into()));
    }
    let t = Transfer::new(n, w)?;
    let mask = t.sector_mask(sector)?;
    let mut v: Vec<f64> = mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let mut out = vec![0.0; v.len()];
    let mut log_scale = 0.0;
    for _ in 1..m {
        t.apply(&v, &mut out);
        let norm: f64 = out.iter().sum();
        if norm == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        log_scale += norm.ln();
        for (x, y) in v.iter_mut().zip(&out) {
            *x = y / norm;
        }
    }
    let total: f64 = v.iter().sum();
    Ok(log_scale + total.ln())
}

/// `(n m)^{-1} log Z` on the `n × m` cylinder.
pub fn transfer_free_energy(n: usize, m: usize, w: &Weights, sector: Sector) -> Result<f64> {
    Ok(transfer_log_z(n, m, w, sector)? / (n * m) as f64)
}

/// `N^{-1} log λ`, with λ the leading eigenvalue of the transfer operator
/// restricted to the sector: the free energy per vertex of an infinitely
/// tall cylinder.
pub fn sector_free_energy_limit(n: usize, w: &Weights, sector: Sector) -> Result<f64> {
    let t = Transfer::new(n, w)?;
    let mask = t.sector_mask(sector)?;
    let dim = mask.iter().filter(|&&b| b).count() as f64;
    // Power iteration on T + μI with μ the running eigenvalue estimate: the
    // shift keeps the leading eigenvector and damps the other eigenvalues of
    // modulus λ (the operator is periodic on some sectors).
    let mut v: Vec<f64> = mask.iter().map(|&b| if b { 1.0 / dim } else { 0.0 }).collect();
    let mut out = vec![0.0; v.len()];
    let mut prev = f64::NAN;
    let mut shift = 1.0;
    let mut stable = 0;
    for _ in 0..200_000 {
        t.apply(&v, &mut out);
        for (o, x) in out.iter_mut().zip(&v) {
            *o += shift * x;
        }
        let norm: f64 = out.iter().sum();
        let lambda = norm - shift;
        if lambda <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        for (x, y) in v.iter_mut().zip(&out) {
            *x = y / norm;
        }
        if (lambda - prev).abs() <= 1e-14 * lambda {
            stable += 1;
            if stable >= 5 {
                return Ok(lambda.ln() / n as f64);
            }
        } else {
            stable = 0;
        }
        prev = lambda;
        shift = lambda.max(1.0);
    }
    Ok(prev.ln() / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Domain, Shape};
    use crate::sixvertex::{partition_function, Ensemble};

    #[test]
    fn agrees_with_enumeration_on_small_cylinders() {
        let w = Weights::new(0.8, 1.1, 1.7).unwrap();
        for (n, m) in [(2, 1), (2, 3), (4, 1), (4, 2), (4, 3), (6, 2)] {
            let d = Domain::new(Shape::Cylinder { circumference: n, height: m }).unwrap();
            for sector in [Sector::Any, Sector::Balanced, Sector::Excess(1), Sector::Excess(-1)] {
                let enumerated = partition_function(&d, &Ensemble::Sector(sector), &w).unwrap();
                let transfer = transfer_log_z(n, m, &w, sector).unwrap();
                assert!((enumerated - transfer).abs() < 1e-12, "{n}x{m} {sector:?}");
            }
        }
    }

    #[test]
    fn saturated_sector_is_a_single_state() {
        let w = Weights::new(1.0, 1.0, 1.6).unwrap();
        let n = 4;
        let m = 5;
        let z = transfer_log_z(n, m, &w, Sector::Excess(2)).unwrap();
        let expected = (m - 1) as f64 * (w.a.powi(n as i32) + w.b.powi(n as i32)).ln();
        assert!((z - expected).abs() < 1e-12);
        let lim = sector_free_energy_limit(n, &w, Sector::Excess(2)).unwrap();
        assert!((lim - 2f64.ln() / 4.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_oversized() {
        let w = Weights::uniform();
        assert!(matches!(transfer_log_z(4, 2, &w, Sector::Excess(3)), Err(Error::InfeasibleSector(_))));
        assert!(matches!(transfer_log_z(22, 2, &w, Sector::Any), Err(Error::TooLarge(_))));
        assert!(transfer_log_z(3, 2, &w, Sector::Any).is_err());
    }

    #[test]
    fn limit_is_even_in_the_sector() {
        let w = Weights::new(1.0, 1.0, 1.5).unwrap();
        for k in 1..=3 {
            let p = sector_free_energy_limit(6, &w, Sector::Excess(k)).unwrap();
            let q = sector_free_energy_limit(6, &w, Sector::Excess(-k)).unwrap();
            assert!((p - q).abs() < 1e-12);
        }
    }
}
