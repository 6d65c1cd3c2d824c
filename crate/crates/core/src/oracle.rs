//! Brute-force reference engines.
//!
//! Everything here works on bare rectangular grids with its own loops: its
//! own neighbour arithmetic, its own vertex classification and its own
//! cluster counting. Nothing is shared with the main engines except the
//! output type, so agreement between the two is evidence for both.
//!
//! Grid conventions match [`crate::lattice::Domain`] for the shapes used
//! here: faces (sites) are numbered row-major from the bottom-left, edges
//! list all horizontal edges (row-major) before all vertical ones.

use crate::dist::ExactDistribution;
use crate::error::{Error, Result};

/// Largest number of raw configurations a brute-force loop may visit.
pub const ORACLE_MAX_STATES: u64 = 1 << 25;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WrapSector {
    Any,
    Excess(i64),
    Balanced,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpinBoundary {
    Free,
    /// Every missing neighbour of a boundary site is a frozen `+` site.
    Plus,
    Minus,
}

#[derive(Clone, Debug)]
pub enum ModelSpec {
    /// Height functions on a `width × height` box; `fixed[row * width + col]`.
    SixVertexBox { width: usize, height: usize, fixed: Vec<Option<i64>>, a: f64, b: f64, c: f64 },
    /// Arrow configurations of an `n × m` grid wrapped along x, and along y
    /// too when `torus` is set.
    SixVertexWrapped { n: usize, m: usize, torus: bool, sector: WrapSector, a: f64, b: f64, c: f64 },
    /// Weight `exp(-H)` with `H = Σ J(τ_i τ_j + τ'_i τ'_j) + U τ_i τ_j τ'_i τ'_j`.
    /// Configurations are encoded `[τ_0 .. τ_{n-1}, τ'_0 .. τ'_{n-1}]`.
    AshkinTeller { width: usize, height: usize, j: f64, u: f64, boundary: SpinBoundary },
    /// Bond model on an explicit multigraph. Configurations are encoded
    /// `[n_σ(b_0), n_τ(b_0), n_σ(b_1), ...]`.
    Grcm {
        vertices: usize,
        bonds: Vec<(usize, usize)>,
        /// `[a_0, a_σ, a_τ, a_στ]` per bond.
        channels: Vec<[f64; 4]>,
        q_sigma: f64,
        q_tau: f64,
    },
    /// Weight `exp(-H)` with the cubic Hamiltonian; spins in `1..=q`.
    /// Configurations are encoded `[σ_0 .. σ_{n-1}, τ_0 .. τ_{n-1}]`.
    Cubic {
        width: usize,
        height: usize,
        j_sigma: f64,
        j_tau: f64,
        j_sigma_tau: f64,
        q_sigma: usize,
        q_tau: usize,
        /// Missing neighbours carry spins `(1, 1)` when set.
        fixed_one: bool,
    },
}

pub fn exact_distribution(spec: &ModelSpec) -> Result<ExactDistribution> {
    let params = format!("{spec:?}");
    let items = match spec {
        ModelSpec::SixVertexBox { width, height, fixed, a, b, c } => {
            six_vertex_box(*width, *height, fixed, [*a, *b, *c])?
        }
        ModelSpec::SixVertexWrapped { n, m, torus, sector, a, b, c } => {
            six_vertex_wrapped(*n, *m, *torus, *sector, [*a, *b, *c])?
        }
        ModelSpec::AshkinTeller { width, height, j, u, boundary } => {
            ashkin_teller(*width, *height, *j, *u, *boundary)?
        }
        ModelSpec::Grcm { vertices, bonds, channels, q_sigma, q_tau } => {
            grcm(*vertices, bonds, channels, *q_sigma, *q_tau)?
        }
        ModelSpec::Cubic { width, height, j_sigma, j_tau, j_sigma_tau, q_sigma, q_tau, fixed_one } => {
            cubic(*width, *height, [*j_sigma, *j_tau, *j_sigma_tau], *q_sigma, *q_tau, *fixed_one)?
        }
    };
    let model = match spec {
        ModelSpec::SixVertexBox { .. } => "sixvertex-heights",
        ModelSpec::SixVertexWrapped { .. } => "sixvertex-arrows",
        ModelSpec::AshkinTeller { .. } => "ashkin-teller",
        ModelSpec::Grcm { .. } => "grcm",
        ModelSpec::Cubic { .. } => "cubic",
    };
    ExactDistribution::from_log_weights(model, &params, items)
}

pub fn exact_event_prob<F: Fn(&[i64]) -> bool>(spec: &ModelSpec, event: F) -> Result<f64> {
    Ok(exact_distribution(spec)?.event_prob(event))
}

fn guard(states: f64) -> Result<()> {
    if states > ORACLE_MAX_STATES as f64 {
        Err(Error::TooLarge(format!("oracle would visit {states:.3e} configurations")))
    } else {
        Ok(())
    }
}

// Vertex weight from the four arrows around it: a when both lines pass
// straight through pointing "the same way", b when they pass straight
// through the other way, c when the arrows turn.
fn vertex_weight(east_w: bool, east_e: bool, north_s: bool, north_n: bool, abc: [f64; 3]) -> f64 {
    let ins = east_w as u8 + (!east_e) as u8 + north_s as u8 + (!north_n) as u8;
    if ins != 2 {
        return 0.0;
    }
    if east_w == east_e && north_s == north_n {
        if east_w == north_s {
            abc[0]
        } else {
            abc[1]
        }
    } else {
        abc[2]
    }
}

fn six_vertex_box(
    w: usize,
    h: usize,
    fixed: &[Option<i64>],
    abc: [f64; 3],
) -> Result<Vec<(Vec<i64>, f64)>> {
    if fixed.len() != w * h {
        return Err(Error::InvalidParameter("fixed-value grid has the wrong size".into()));
    }
    let anchors: Vec<i64> = fixed.iter().flatten().copied().collect();
    if anchors.is_empty() {
        return Err(Error::InvalidParameter("no fixed face".into()));
    }
    // Grid distance to the nearest fixed face bounds every free value.
    let mut dist = vec![usize::MAX; w * h];
    let mut frontier: Vec<usize> = (0..w * h).filter(|&i| fixed[i].is_some()).collect();
    for &i in &frontier {
        dist[i] = 0;
    }
    let mut d = 0;
    while !frontier.is_empty() {
        d += 1;
        let mut next = Vec::new();
        for &i in &frontier {
            let (x, y) = (i % w, i / w);
            let mut nb = Vec::new();
            if x > 0 {
                nb.push(i - 1);
            }
            if x + 1 < w {
                nb.push(i + 1);
            }
            if y > 0 {
                nb.push(i - w);
            }
            if y + 1 < h {
                nb.push(i + w);
            }
            for j in nb {
                if dist[j] == usize::MAX {
                    dist[j] = d;
                    next.push(j);
                }
            }
        }
        frontier = next;
    }
    let lo = *anchors.iter().min().unwrap();
    let hi = *anchors.iter().max().unwrap();
    let free: Vec<usize> = (0..w * h).filter(|&i| fixed[i].is_none()).collect();
    let ranges: Vec<Vec<i64>> = free
        .iter()
        .map(|&i| ((lo - dist[i] as i64)..=(hi + dist[i] as i64)).collect())
        .collect();
    guard(ranges.iter().map(|r| r.len() as f64).product())?;

    let mut out = Vec::new();
    let mut idx = vec![0usize; free.len()];
    let mut vals: Vec<i64> = fixed.iter().map(|v| v.unwrap_or(0)).collect();
    loop {
        for (k, &i) in free.iter().enumerate() {
            vals[i] = ranges[k][idx[k]];
        }
        let mut ok = true;
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                if x + 1 < w && (vals[i] - vals[i + 1]).abs() != 1 {
                    ok = false;
                }
                if y + 1 < h && (vals[i] - vals[i + w]).abs() != 1 {
                    ok = false;
                }
            }
        }
        if ok {
            let mut weight = 1.0;
            for y in 1..h {
                for x in 1..w {
                    let ne = vals[y * w + x];
                    let nw = vals[y * w + x - 1];
                    let sw = vals[(y - 1) * w + x - 1];
                    let se = vals[(y - 1) * w + x];
                    // Arrows point east when the upper face is higher and
                    // north when the western face is higher.
                    weight *= vertex_weight(nw > sw, ne > se, sw > se, nw > ne, abc);
                }
            }
            out.push((vals.clone(), weight.ln()));
        }
        let mut k = 0;
        loop {
            if k == free.len() {
                return Ok(out);
            }
            idx[k] += 1;
            if idx[k] < ranges[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn six_vertex_wrapped(
    n: usize,
    m: usize,
    torus: bool,
    sector: WrapSector,
    abc: [f64; 3],
) -> Result<Vec<(Vec<i64>, f64)>> {
    if n % 2 != 0 || n == 0 || m == 0 {
        return Err(Error::InvalidParameter("wrapped grid needs even positive circumference".into()));
    }
    let hrows = if torus { m } else { m + 1 };
    let n_h = n * hrows;
    let n_v = n * m;
    let total = n_h + n_v;
    // Horizontal edges on the open top and bottom rows of a cylinder have an
    // exterior side and stay pointing east.
    let free: Vec<usize> = (0..total)
        .filter(|&e| torus || e >= n_h || (e / n != 0 && e / n != m))
        .collect();
    guard(2f64.powi(free.len() as i32))?;
    let hid = |i: usize, j: usize| (j % hrows) * n + (i % n);
    let vid = |i: usize, j: usize| n_h + (j % m) * n + (i % n);
    let vertex_rows: Vec<usize> = if torus { (0..m).collect() } else { (1..m).collect() };
    let mut out = Vec::new();
    let mut bits = vec![true; total];
    for mask in 0u64..(1u64 << free.len()) {
        for (k, &e) in free.iter().enumerate() {
            bits[e] = mask >> k & 1 == 1;
        }
        let mut weight = 1.0;
        for &j in &vertex_rows {
            for i in 0..n {
                let west = bits[hid(i + n - 1, j)];
                let east = bits[hid(i, j)];
                let south = bits[vid(i, j + m - 1)];
                let north = bits[vid(i, j)];
                weight *= vertex_weight(west, east, south, north, abc);
            }
        }
        if weight == 0.0 {
            continue;
        }
        let row_flux = |j: usize| -> i64 {
            (0..n).map(|i| if bits[vid(i, j)] { 1 } else { -1 }).sum()
        };
        let col_flux = |i: usize| -> i64 {
            (0..hrows).map(|j| if bits[hid(i, j)] { 1 } else { -1 }).sum()
        };
        let keep = match sector {
            WrapSector::Any => true,
            WrapSector::Excess(k) => (0..m).all(|j| row_flux(j) == 2 * k),
            WrapSector::Balanced => {
                (0..m).all(|j| row_flux(j) == 0) && (!torus || (0..n).all(|i| col_flux(i) == 0))
            }
        };
        if keep {
            out.push((bits.iter().map(|&b| b as i64).collect(), weight.ln()));
        }
    }
    Ok(out)
}

// Nearest-neighbour pairs of a box, plus one pair per missing neighbour of a
// boundary site (second entry `None`).
fn box_bonds(w: usize, h: usize) -> Vec<(usize, Option<usize>)> {
    let mut bonds = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w {
                bonds.push((i, Some(i + 1)));
            }
            if y + 1 < h {
                bonds.push((i, Some(i + w)));
            }
        }
    }
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let missing = (x == 0) as usize + (x + 1 == w) as usize + (y == 0) as usize + (y + 1 == h) as usize;
            for _ in 0..missing {
                bonds.push((i, None));
            }
        }
    }
    bonds
}

fn ashkin_teller(w: usize, h: usize, j: f64, u: f64, boundary: SpinBoundary) -> Result<Vec<(Vec<i64>, f64)>> {
    let n = w * h;
    guard(4f64.powi(n as i32))?;
    let bonds = box_bonds(w, h);
    let outside = match boundary {
        SpinBoundary::Free => None,
        SpinBoundary::Plus => Some(1i64),
        SpinBoundary::Minus => Some(-1),
    };
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << (2 * n)) {
        let spin = |k: usize| if mask >> k & 1 == 1 { -1i64 } else { 1 };
        let mut energy = 0.0;
        for &(p, q) in &bonds {
            let (t1, s1) = (spin(p), spin(n + p));
            let (t2, s2) = match q {
                Some(q) => (spin(q), spin(n + q)),
                None => match outside {
                    Some(x) => (x, x),
                    None => continue,
                },
            };
            energy += j * ((t1 * t2) as f64 + (s1 * s2) as f64) + u * (t1 * t2 * s1 * s2) as f64;
        }
        out.push(((0..2 * n).map(spin).collect(), -energy));
    }
    Ok(out)
}

fn count_components(vertices: usize, bonds: &[(usize, usize)], open: &[bool]) -> usize {
    let mut label: Vec<usize> = (0..vertices).collect();
    loop {
        let mut changed = false;
        for (k, &(p, q)) in bonds.iter().enumerate() {
            if open[k] && label[p] != label[q] {
                let m = label[p].min(label[q]);
                label[p] = m;
                label[q] = m;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut seen = label.clone();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

fn grcm(
    vertices: usize,
    bonds: &[(usize, usize)],
    channels: &[[f64; 4]],
    q_sigma: f64,
    q_tau: f64,
) -> Result<Vec<(Vec<i64>, f64)>> {
    if bonds.len() != channels.len() {
        return Err(Error::InvalidParameter("one channel vector per bond".into()));
    }
    let nb = bonds.len();
    guard(4f64.powi(nb as i32))?;
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << (2 * nb)) {
        let sigma: Vec<bool> = (0..nb).map(|b| mask >> (2 * b) & 1 == 1).collect();
        let tau: Vec<bool> = (0..nb).map(|b| mask >> (2 * b + 1) & 1 == 1).collect();
        let mut weight = 1.0;
        for b in 0..nb {
            weight *= match (sigma[b], tau[b]) {
                (false, false) => channels[b][0],
                (true, false) => channels[b][1],
                (false, true) => channels[b][2],
                (true, true) => channels[b][3],
            };
        }
        weight *= q_sigma.powi(count_components(vertices, bonds, &sigma) as i32);
        weight *= q_tau.powi(count_components(vertices, bonds, &tau) as i32);
        let code = (0..nb).flat_map(|b| [sigma[b] as i64, tau[b] as i64]).collect();
        out.push((code, weight.ln()));
    }
    Ok(out)
}

fn cubic(
    w: usize,
    h: usize,
    j: [f64; 3],
    q_sigma: usize,
    q_tau: usize,
    fixed_one: bool,
) -> Result<Vec<(Vec<i64>, f64)>> {
    let n = w * h;
    guard(((q_sigma * q_tau) as f64).powi(n as i32))?;
    let bonds = box_bonds(w, h);
    let mut out = Vec::new();
    let mut s = vec![1i64; n];
    let mut t = vec![1i64; n];
    loop {
        let mut energy = 0.0;
        for &(p, q) in &bonds {
            let (s2, t2) = match q {
                Some(q) => (s[q], t[q]),
                None if fixed_one => (1, 1),
                None => continue,
            };
            let ds = (s[p] == s2) as i64 as f64;
            let dt = (t[p] == t2) as i64 as f64;
            energy += -2.0 * (j[0] - j[2]) * ds - 2.0 * (j[1] - j[2]) * dt - 4.0 * j[2] * ds * dt;
        }
        out.push((s.iter().chain(&t).copied().collect(), -energy));
        // Odometer over σ then τ.
        let mut k = 0;
        loop {
            if k == 2 * n {
                return Ok(out);
            }
            let (slot, q) = if k < n { (&mut s[k], q_sigma) } else { (&mut t[k - n], q_tau) };
            *slot += 1;
            if *slot as usize <= q {
                break;
            }
            *slot = 1;
            k += 1;
        }
    }
}

/// Connectivity probabilities of the Edwards-Sokal bond measure of a
/// `width × height` box with `++` boundary, by direct summation over every
/// bond configuration (ghost bonds included, one per missing neighbour).
/// Returns `(P[i ↔σ ghost], P[i ↔σ j])` with site indices row-major.
pub fn es_connectivity(
    width: usize,
    height: usize,
    j_sigma: f64,
    j_tau: f64,
    j_sigma_tau: f64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = width * height;
    let ghost = n;
    let bonds: Vec<(usize, usize)> =
        box_bonds(width, height).into_iter().map(|(p, q)| (p, q.unwrap_or(ghost))).collect();
    let nb = bonds.len();
    guard(4f64.powi(nb as i32))?;
    let e = |x: f64| (-2.0 * x).exp();
    let a0 = e(j_sigma + j_tau);
    let a_s = e(j_tau) * (e(j_sigma_tau) - e(j_sigma));
    let a_t = e(j_sigma) * (e(j_sigma_tau) - e(j_tau));
    let a_st = 1.0 - e(j_sigma + j_sigma_tau) - e(j_tau + j_sigma_tau) + e(j_sigma + j_tau);
    let mut z = 0.0;
    let mut to_ghost = vec![0.0; n];
    let mut pair = vec![vec![0.0; n]; n];
    let mut sigma = vec![false; nb];
    let mut tau = vec![false; nb];
    for mask in 0u64..(1u64 << (2 * nb)) {
        let mut weight = 1.0;
        for b in 0..nb {
            sigma[b] = mask >> (2 * b) & 1 == 1;
            tau[b] = mask >> (2 * b + 1) & 1 == 1;
            weight *= match (sigma[b], tau[b]) {
                (false, false) => a0,
                (true, false) => a_s,
                (false, true) => a_t,
                (true, true) => a_st,
            };
        }
        if weight == 0.0 {
            continue;
        }
        let mut label: Vec<usize> = (0..=n).collect();
        loop {
            let mut changed = false;
            for (k, &(p, q)) in bonds.iter().enumerate() {
                if sigma[k] && label[p] != label[q] {
                    let m = label[p].min(label[q]);
                    label[p] = m;
                    label[q] = m;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let ns = {
            let mut l = label.clone();
            l.sort_unstable();
            l.dedup();
            l.len()
        };
        let nt = count_components(n + 1, &bonds, &tau);
        weight *= 2f64.powi(ns as i32) * 2f64.powi(nt as i32);
        z += weight;
        for i in 0..n {
            if label[i] == label[ghost] {
                to_ghost[i] += weight;
            }
            for k in 0..n {
                if label[i] == label[k] {
                    pair[i][k] += weight;
                }
            }
        }
    }
    Ok((
        to_ghost.into_iter().map(|x| x / z).collect(),
        pair.into_iter().map(|r| r.into_iter().map(|x| x / z).collect()).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_torus_two_is_flat() {
        let spec = ModelSpec::SixVertexWrapped {
            n: 2,
            m: 2,
            torus: true,
            sector: WrapSector::Any,
            a: 1.0,
            b: 1.0,
            c: 1.0,
        };
        let d = exact_distribution(&spec).unwrap();
        let p = 1.0 / d.len() as f64;
        assert!(d.probs().iter().all(|x| (x - p).abs() < 1e-15));
    }

    #[test]
    fn at_single_bond_pair() {
        // Two sites, J = 1, U = 0: sixteen configurations.
        let spec = ModelSpec::AshkinTeller { width: 2, height: 1, j: 1.0, u: 0.0, boundary: SpinBoundary::Free };
        let d = exact_distribution(&spec).unwrap();
        assert_eq!(d.len(), 16);
        let aligned = d.prob_of(&[1, 1, 1, 1]);
        let z = (2.0 * (-1f64).exp() + 2.0 * 1f64.exp()).powi(2);
        assert!((aligned - (-2f64).exp() / z).abs() < 1e-15);
    }

    #[test]
    fn grcm_single_bond_free() {
        let spec = ModelSpec::Grcm {
            vertices: 2,
            bonds: vec![(0, 1)],
            channels: vec![[1.0, 2.0, 3.0, 4.0]],
            q_sigma: 2.0,
            q_tau: 3.0,
        };
        let d = exact_distribution(&spec).unwrap();
        let raw = [1.0 * 4.0 * 9.0, 2.0 * 2.0 * 9.0, 3.0 * 4.0 * 3.0, 4.0 * 2.0 * 3.0];
        let z: f64 = raw.iter().sum();
        assert!((d.prob_of(&[0, 0]) - raw[0] / z).abs() < 1e-15);
        assert!((d.prob_of(&[1, 0]) - raw[1] / z).abs() < 1e-15);
        assert!((d.prob_of(&[0, 1]) - raw[2] / z).abs() < 1e-15);
        assert!((d.prob_of(&[1, 1]) - raw[3] / z).abs() < 1e-15);
    }

    #[test]
    fn complement_law() {
        let spec = ModelSpec::SixVertexBox {
            width: 4,
            height: 4,
            fixed: (0..16)
                .map(|i| {
                    let (x, y) = (i % 4, i / 4);
                    if x == 0 || y == 0 || x == 3 || y == 3 {
                        Some(((x + y) % 2) as i64)
                    } else {
                        None
                    }
                })
                .collect(),
            a: 1.0,
            b: 1.0,
            c: 1.7,
        };
        let d = exact_distribution(&spec).unwrap();
        for k in 0..50u64 {
            let pred = |c: &[i64]| c.iter().enumerate().map(|(i, v)| (i as i64 + 1) * v).sum::<i64>() as u64 % 7 == k % 7;
            let p = d.event_prob(pred);
            let q = d.event_prob(|c| !pred(c));
            assert!((p + q - 1.0).abs() < 1e-12);
        }
        assert!((d.event_prob(|_| true) - 1.0).abs() < 1e-12);
        assert_eq!(d.event_prob(|_| false), 0.0);
    }

    #[test]
    fn guard_trips() {
        let spec = ModelSpec::AshkinTeller { width: 4, height: 4, j: 0.0, u: 0.0, boundary: SpinBoundary::Free };
        assert!(matches!(exact_distribution(&spec), Err(Error::TooLarge(_))));
    }
}
