//! Connectivity events of height functions and spin fields on faces.

use std::collections::VecDeque;

use num_rational::Rational64;

use crate::dist::ExactDistribution;
use crate::error::{Error, Result};
use crate::lattice::{Adjacency, Domain, FaceId, Shape, Side, VertexId};
use crate::monotone::{correlation_pairs, domination_gap, lattice_condition, leq, SlackReport};
use crate::sampler::{run_chain_with, ChainState, Configuration, RngSeed, RunOptions};
use crate::sixvertex::{classify_vertex, height_distribution, ArrowConfig, BoundaryCondition, VertexType, Weights};

/// Which faces are open for a connectivity query.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Predicate {
    AtLeast(i64),
    AtMost(i64),
    Between(i64, i64),
    SpinPlus,
    SpinMinus,
}

impl Predicate {
    pub fn test(self, v: i64) -> bool {
        match self {
            Predicate::AtLeast(k) => v >= k,
            Predicate::AtMost(k) => v <= k,
            Predicate::Between(lo, hi) => lo <= v && v <= hi,
            Predicate::SpinPlus => v > 0,
            Predicate::SpinMinus => v < 0,
        }
    }

    pub fn complement(self) -> Option<Predicate> {
        match self {
            Predicate::AtLeast(k) => Some(Predicate::AtMost(k - 1)),
            Predicate::AtMost(k) => Some(Predicate::AtLeast(k + 1)),
            Predicate::SpinPlus => Some(Predicate::SpinMinus),
            Predicate::SpinMinus => Some(Predicate::SpinPlus),
            Predicate::Between(..) => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CrossingQuery {
    pub predicate: Predicate,
    pub adjacency: Adjacency,
    /// Faces allowed on a path; `None` means the whole domain.
    pub region: Option<Vec<FaceId>>,
    pub source: Vec<FaceId>,
    pub target: Vec<FaceId>,
}

impl CrossingQuery {
    pub fn new(predicate: Predicate, adjacency: Adjacency, source: Vec<FaceId>, target: Vec<FaceId>) -> CrossingQuery {
        CrossingQuery { predicate, adjacency, region: None, source, target }
    }
}

fn region_mask(domain: &Domain, region: Option<&[FaceId]>) -> Vec<bool> {
    match region {
        None => vec![true; domain.num_faces()],
        Some(r) => {
            let mut m = vec![false; domain.num_faces()];
            for &f in r {
                m[f] = true;
            }
            m
        }
    }
}

/// Component label of every open face (`usize::MAX` for closed faces).
fn label_components(domain: &Domain, open: &[bool], adjacency: Adjacency) -> Vec<usize> {
    let mut label = vec![usize::MAX; open.len()];
    let mut next = 0;
    for start in 0..open.len() {
        if !open[start] || label[start] != usize::MAX {
            continue;
        }
        label[start] = next;
        let mut queue = VecDeque::from([start]);
        while let Some(f) = queue.pop_front() {
            for g in domain.neighbors(f, adjacency) {
                if open[g] && label[g] == usize::MAX {
                    label[g] = next;
                    queue.push_back(g);
                }
            }
        }
        next += 1;
    }
    label
}

/// Maximal connected sets of faces in `region` whose value satisfies the
/// predicate, each sorted, listed by least face.
pub fn clusters(
    domain: &Domain,
    values: &[i64],
    predicate: Predicate,
    adjacency: Adjacency,
    region: Option<&[FaceId]>,
) -> Vec<Vec<FaceId>> {
    let mask = region_mask(domain, region);
    let open: Vec<bool> = (0..values.len()).map(|f| mask[f] && predicate.test(values[f])).collect();
    let label = label_components(domain, &open, adjacency);
    let count = label.iter().filter(|&&l| l != usize::MAX).max().map_or(0, |m| m + 1);
    let mut out = vec![Vec::new(); count];
    for (f, &l) in label.iter().enumerate() {
        if l != usize::MAX {
            out[l].push(f);
        }
    }
    out
}

/// Some open path joins the source set to the target set.
pub fn connected(domain: &Domain, values: &[i64], query: &CrossingQuery) -> bool {
    let mask = region_mask(domain, query.region.as_deref());
    let open: Vec<bool> = (0..values.len()).map(|f| mask[f] && query.predicate.test(values[f])).collect();
    let mut target = vec![false; values.len()];
    for &f in &query.target {
        target[f] = true;
    }
    let mut seen = vec![false; values.len()];
    let mut queue: VecDeque<FaceId> = query.source.iter().copied().filter(|&f| open[f]).collect();
    for &f in &queue {
        seen[f] = true;
    }
    while let Some(f) = queue.pop_front() {
        if target[f] {
            return true;
        }
        for g in domain.neighbors(f, query.adjacency) {
            if open[g] && !seen[g] {
                seen[g] = true;
                queue.push_back(g);
            }
        }
    }
    false
}

/// Left-to-right crossing of the open faces.
pub fn horizontal_crossing(domain: &Domain, values: &[i64], predicate: Predicate, adjacency: Adjacency) -> bool {
    let q = CrossingQuery::new(predicate, adjacency, domain.side(Side::Left), domain.side(Side::Right));
    connected(domain, values, &q)
}

/// Bottom-to-top crossing of the open faces.
pub fn vertical_crossing(domain: &Domain, values: &[i64], predicate: Predicate, adjacency: Adjacency) -> bool {
    let q = CrossingQuery::new(predicate, adjacency, domain.side(Side::Bottom), domain.side(Side::Top));
    connected(domain, values, &q)
}

/// Faces of the annulus `Λ_outer \ Λ_inner` around `center`, where `Λ_r`
/// is the set of faces at sup-distance at most `r`, with each face's ring
/// index.
fn annulus_faces(domain: &Domain, center: FaceId, inner: usize, outer: usize) -> Result<Vec<(FaceId, usize)>> {
    if inner >= outer {
        return Err(Error::InvalidParameter(format!("annulus radii ({inner},{outer}) need inner < outer")));
    }
    let (cx, cy) = (domain.face(center).col as i64, domain.face(center).row as i64);
    let (wx, wy) = domain.wraps();
    let r = outer as i64;
    if (wx && 2 * r + 1 > domain.cols() as i64) || (wy && 2 * r + 1 > domain.rows() as i64) {
        return Err(Error::InvalidParameter(format!("annulus of radius {outer} wraps onto itself")));
    }
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            let ring = dx.abs().max(dy.abs()) as usize;
            match domain.face_at(cx + dx, cy + dy) {
                Some(f) if ring > inner => out.push((f, ring)),
                Some(_) => {}
                None => {
                    return Err(Error::InvalidParameter(format!(
                        "annulus ({inner},{outer}) does not fit in {} around face {center}",
                        domain.shape()
                    )))
                }
            }
        }
    }
    Ok(out)
}

/// A circuit of edge-adjacent faces with `h >= k` inside the annulus
/// separates the inner box from the outer boundary. Decided through the dual
/// statement: no x-path of faces with `h < k` joins the two rings.
pub fn annulus_circuit(
    domain: &Domain,
    h: &[i64],
    center: FaceId,
    k: i64,
    inner: usize,
    outer: usize,
) -> Result<bool> {
    let faces = annulus_faces(domain, center, inner, outer)?;
    let region: Vec<FaceId> = faces.iter().map(|&(f, _)| f).collect();
    let q = CrossingQuery {
        predicate: Predicate::AtMost(k - 1),
        adjacency: Adjacency::X,
        region: Some(region),
        source: faces.iter().filter(|&&(_, r)| r == inner + 1).map(|&(f, _)| f).collect(),
        target: faces.iter().filter(|&&(_, r)| r == outer).map(|&(f, _)| f).collect(),
    };
    Ok(!connected(domain, h, &q))
}

/// The same event found directly: some closed walk of edge-adjacent faces
/// with `h >= k` in the annulus winds an odd number of times around the
/// center. Walks are tracked on the double cover that records the parity of
/// crossings of the ray leaving the center between rows 0 and 1 to the east.
pub fn annulus_circuit_by_winding(
    domain: &Domain,
    h: &[i64],
    center: FaceId,
    k: i64,
    inner: usize,
    outer: usize,
) -> Result<bool> {
    let faces = annulus_faces(domain, center, inner, outer)?;
    let (cx, cy) = (domain.face(center).col as i64, domain.face(center).row as i64);
    // Offsets relative to the center; the grid may wrap.
    let mut offset = vec![None; domain.num_faces()];
    for &(f, _) in &faces {
        if h[f] >= k {
            let face = domain.face(f);
            let mut dx = face.col as i64 - cx;
            let mut dy = face.row as i64 - cy;
            let (wx, wy) = domain.wraps();
            if wx && dx.abs() > outer as i64 {
                dx -= dx.signum() * domain.cols() as i64;
            }
            if wy && dy.abs() > outer as i64 {
                dy -= dy.signum() * domain.rows() as i64;
            }
            offset[f] = Some((dx, dy));
        }
    }
    let mut sheet: Vec<Option<u8>> = vec![None; domain.num_faces()];
    for &(start, _) in &faces {
        if offset[start].is_none() || sheet[start].is_some() {
            continue;
        }
        sheet[start] = Some(0);
        let mut queue = VecDeque::from([start]);
        while let Some(f) = queue.pop_front() {
            let (fx, fy) = offset[f].unwrap();
            let s = sheet[f].unwrap();
            for g in domain.face(f).nbrs.iter().flatten().copied() {
                let Some((gx, gy)) = offset[g] else { continue };
                if (gx - fx).abs() + (gy - fy).abs() != 1 {
                    continue;
                }
                let crosses = fx == gx && fx > 0 && fy.min(gy) == 0;
                let t = s ^ crosses as u8;
                match sheet[g] {
                    None => {
                        sheet[g] = Some(t);
                        queue.push_back(g);
                    }
                    Some(u) if u != t => return Ok(true),
                    _ => {}
                }
            }
        }
    }
    Ok(false)
}

/// Maximal set of edge-connected vertices sharing one vertex type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FreezingCluster {
    pub vertex_type: VertexType,
    pub vertices: Vec<VertexId>,
    /// Faces all of whose interior corners belong to the cluster.
    pub faces: Vec<FaceId>,
    /// Longest straight run of cluster faces in one row or column.
    pub inner_diameter: usize,
    /// Number of faces on a longest shortest path inside the cluster's faces.
    pub outer_diameter: usize,
}

pub fn freezing_clusters(domain: &Domain, config: &ArrowConfig) -> Result<Vec<FreezingCluster>> {
    let nv = domain.num_vertices();
    let mut types = vec![None; nv];
    for v in domain.interior_vertices() {
        types[v] = Some(classify_vertex(domain, config, v)?);
    }
    let mut label = vec![usize::MAX; nv];
    let mut groups: Vec<(VertexType, Vec<VertexId>)> = Vec::new();
    for start in 0..nv {
        let Some(t) = types[start] else { continue };
        if label[start] != usize::MAX {
            continue;
        }
        let id = groups.len();
        label[start] = id;
        let mut members = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for e in domain.vertex(v).edges.iter().flatten() {
                let edge = domain.edge(*e);
                let u = if edge.tail == v { edge.head } else { edge.tail };
                if types[u] == Some(t) && label[u] == usize::MAX {
                    label[u] = id;
                    members.push(u);
                    queue.push_back(u);
                }
            }
        }
        members.sort_unstable();
        groups.push((t, members));
    }
    let mut out = Vec::new();
    for (id, (t, vertices)) in groups.into_iter().enumerate() {
        let faces: Vec<FaceId> = (0..domain.num_faces())
            .filter(|&f| {
                let corners: Vec<VertexId> =
                    domain.face(f).corners.iter().copied().filter(|&v| types[v].is_some()).collect();
                !corners.is_empty() && corners.iter().all(|&v| label[v] == id)
            })
            .collect();
        let (inner_diameter, outer_diameter) = diameters(domain, &faces);
        out.push(FreezingCluster { vertex_type: t, vertices, faces, inner_diameter, outer_diameter });
    }
    Ok(out)
}

fn diameters(domain: &Domain, faces: &[FaceId]) -> (usize, usize) {
    if faces.is_empty() {
        return (0, 0);
    }
    let mut member = vec![false; domain.num_faces()];
    for &f in faces {
        member[f] = true;
    }
    let mut longest_run = 1;
    for &f in faces {
        // Runs are measured from their west or south end.
        let nbrs = domain.face(f).nbrs;
        for (back, dir) in [(nbrs[2], 0), (nbrs[3], 1)] {
            if back.is_some_and(|g| member[g]) {
                continue;
            }
            let mut len = 1;
            let mut cur = f;
            loop {
                let next = domain.face(cur).nbrs[dir];
                match next {
                    Some(g) if member[g] && g != f => {
                        len += 1;
                        cur = g;
                    }
                    _ => break,
                }
            }
            longest_run = longest_run.max(len);
        }
    }
    let mut diameter = 0;
    for &f in faces {
        let mut dist = vec![usize::MAX; domain.num_faces()];
        dist[f] = 0;
        let mut queue = VecDeque::from([f]);
        while let Some(g) = queue.pop_front() {
            diameter = diameter.max(dist[g]);
            for x in domain.face(g).nbrs.iter().flatten().copied() {
                if member[x] && dist[x] == usize::MAX {
                    dist[x] = dist[g] + 1;
                    queue.push_back(x);
                }
            }
        }
    }
    (longest_run, diameter + 1)
}

/// Bottom-boundary interval `I_j` of a strip: the faces of row 0 with
/// `j L <= x < (j+1) L`, where `L = max(1, floor(δ n))`.
pub fn strip_interval(domain: &Domain, j: i64, delta: Rational64, n: i64) -> Result<Vec<FaceId>> {
    let Shape::Strip { half_width, .. } = domain.shape() else {
        return Err(Error::InvalidParameter("intervals are defined on strips".into()));
    };
    let len = (delta * n).floor().to_integer().max(1);
    let lo = j * len;
    let hi = lo + len - 1;
    let m = half_width as i64;
    if lo < -m || hi > m {
        return Err(Error::InvalidParameter(format!(
            "interval {j} covers x in [{lo},{hi}], outside [-{m},{m}]"
        )));
    }
    Ok((lo..=hi).map(|x| domain.face_by_center(x, 0).expect("strip face")).collect())
}

/// `I_{j-1}` and `I_{j+1}` are joined by edge-adjacent faces with `h >= k`.
pub fn bridging_event(domain: &Domain, h: &[i64], j: i64, k: i64, delta: Rational64, n: i64) -> Result<bool> {
    let q = CrossingQuery::new(
        Predicate::AtLeast(k),
        Adjacency::Edge,
        strip_interval(domain, j - 1, delta, n)?,
        strip_interval(domain, j + 1, delta, n)?,
    );
    Ok(connected(domain, h, &q))
}

/// Wilson score interval at 95%: the center and half-width.
pub fn wilson_interval(successes: u64, trials: u64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::InvalidParameter("no samples".into()));
    }
    let z = 1.959963984540054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    Ok((center, half))
}

/// Monte-Carlo estimate of an event probability from a heat-bath chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EventEstimate {
    pub p_hat: f64,
    /// Normal-approximation 95% half-width; zero when every sample agrees.
    pub half_width: f64,
    /// Wilson 95% interval, which stays nondegenerate at `p_hat ∈ {0, 1}`.
    pub wilson: (f64, f64),
}

pub fn estimate_event_prob<F: Fn(&[i64]) -> bool>(
    domain: &Domain,
    bc: &BoundaryCondition,
    w: &Weights,
    event: F,
    samples: u64,
    seed: RngSeed,
) -> Result<EventEstimate> {
    if samples == 0 {
        return Err(Error::InvalidParameter("no samples".into()));
    }
    let mut chain = ChainState::six_vertex(domain, bc, w, seed)?;
    let mut hits = 0u64;
    run_chain_with(&mut chain, RunOptions::new(samples), |c| {
        let Configuration::Heights(h) = c else { unreachable!() };
        hits += event(h) as u64;
    })?;
    let n = samples as f64;
    let p = hits as f64 / n;
    let (center, half) = wilson_interval(hits, samples)?;
    Ok(EventEstimate {
        p_hat: p,
        half_width: 1.959963984540054 * (p * (1.0 - p) / n).sqrt(),
        wilson: (center - half, center + half),
    })
}

/// Up-sets of a finite poset under the componentwise order, as membership
/// vectors over `points`; `None` when there are more than `limit`.
pub fn poset_upsets(points: &[Vec<i64>], limit: usize) -> Option<Vec<Vec<bool>>> {
    let n = points.len();
    // Larger points first, so every point is decided after everything above it.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(points[i].iter().sum::<i64>()));
    let above: Vec<Vec<usize>> =
        (0..n).map(|i| (0..n).filter(|&j| j != i && leq(&points[i], &points[j])).collect()).collect();
    let mut out = Vec::new();
    let mut member = vec![false; n];
    fn rec(
        k: usize,
        order: &[usize],
        above: &[Vec<usize>],
        member: &mut Vec<bool>,
        out: &mut Vec<Vec<bool>>,
        limit: usize,
    ) -> bool {
        if k == order.len() {
            out.push(member.clone());
            return out.len() <= limit;
        }
        let i = order[k];
        if !rec(k + 1, order, above, member, out, limit) {
            return false;
        }
        if above[i].iter().all(|&j| member[j]) {
            member[i] = true;
            let ok = rec(k + 1, order, above, member, out, limit);
            member[i] = false;
            return ok;
        }
        true
    }
    rec(0, &order, &above, &mut member, &mut out, limit).then_some(out)
}

/// Up-set pairs checked exhaustively only up to this many up-sets.
pub const UPSET_LIMIT: usize = 4096;

#[derive(Clone, Debug)]
pub struct FkgReport {
    /// Lattice condition over every pair of the support.
    pub lattice: SlackReport,
    /// Point events `{x_f ≥ k}` and left-right crossings of `{x ≥ k}`.
    pub events: SlackReport,
    /// Every pair of increasing events, when few enough exist.
    pub all_upsets: Option<SlackReport>,
}

impl FkgReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.lattice.holds(tol) && self.events.holds(tol) && self.all_upsets.as_ref().is_none_or(|r| r.holds(tol))
    }

    /// The correlation inequalities themselves, without the stronger
    /// lattice condition.
    pub fn correlations_hold(&self, tol: f64) -> bool {
        self.events.holds(tol) && self.all_upsets.as_ref().is_none_or(|r| r.holds(tol))
    }
}

fn increasing_families(domain: &Domain, dist: &ExactDistribution) -> (Vec<Vec<bool>>, Vec<String>) {
    let n = domain.num_faces();
    let (mut events, mut names) = (Vec::new(), Vec::new());
    for f in 0..n {
        let values: std::collections::BTreeSet<i64> = dist.support.iter().map(|x| x[f]).collect();
        let levels: Vec<i64> = values.into_iter().collect();
        for &k in levels.iter().skip(1) {
            events.push(dist.support.iter().map(|x| x[f] >= k).collect());
            names.push(format!("x[{f}]>={k}"));
        }
    }
    let lo = dist.support.iter().flatten().copied().min().unwrap_or(0);
    let hi = dist.support.iter().flatten().copied().max().unwrap_or(0);
    for k in lo..=hi {
        events.push(dist.support.iter().map(|x| horizontal_crossing(domain, x, Predicate::AtLeast(k), Adjacency::Edge)).collect());
        names.push(format!("crossing x>={k}"));
    }
    (events, names)
}

/// FKG checks for a law on face values (heights or `|h|`).
pub fn fkg_report(domain: &Domain, dist: &ExactDistribution) -> FkgReport {
    let (events, names) = increasing_families(domain, dist);
    let all_upsets = poset_upsets(&dist.support, UPSET_LIMIT).map(|ups| {
        let names: Vec<String> = (0..ups.len()).map(|k| format!("upset#{k}")).collect();
        correlation_pairs(dist, &ups, &names)
    });
    FkgReport { lattice: lattice_condition(dist), events: correlation_pairs(dist, &events, &names), all_upsets }
}

pub fn height_fkg(domain: &Domain, bc: &BoundaryCondition, w: &Weights) -> Result<FkgReport> {
    Ok(fkg_report(domain, &height_distribution(domain, bc, w)?))
}

/// FKG checks for the law of `|h|`.
pub fn abs_height_fkg(domain: &Domain, bc: &BoundaryCondition, w: &Weights) -> Result<FkgReport> {
    let dist = height_distribution(domain, bc, w)?.map("abs-heights", |x| x.iter().map(|v| v.abs()).collect());
    Ok(fkg_report(domain, &dist))
}

/// Ordered pairs `(ξ, ξ')` with `ξ ≤ ξ'`: `bc` against `bc + 2`, and `bc`
/// against `bc` with one fixed face raised by 2 whenever that stays
/// admissible.
pub fn cbc_pairs(domain: &Domain, bc: &BoundaryCondition) -> Vec<(BoundaryCondition, BoundaryCondition)> {
    let mut pairs = vec![(bc.clone(), bc.shifted(2))];
    for f in bc.fixed_faces().collect::<Vec<_>>() {
        let mut values = bc.values().to_vec();
        values[f] = values[f].map(|v| v + 2);
        if let Ok(raised) = BoundaryCondition::explicit(domain, values) {
            pairs.push((bc.clone(), raised));
        }
    }
    pairs
}

/// `min_A P^{ξ'}[A] - P^ξ[A]` over increasing `A` for every pair, on `h`
/// or on `|h|`.
pub fn cbc_report(
    domain: &Domain,
    pairs: &[(BoundaryCondition, BoundaryCondition)],
    w: &Weights,
    absolute: bool,
) -> Result<SlackReport> {
    let mut report = SlackReport::new();
    for (lo, hi) in pairs {
        if !hi.dominates(lo) {
            return Err(Error::InvalidParameter("boundary pair is not ordered".into()));
        }
        let mut lower = height_distribution(domain, lo, w)?;
        let mut upper = height_distribution(domain, hi, w)?;
        if absolute {
            let abs = |x: &[i64]| x.iter().map(|v| v.abs()).collect();
            lower = lower.map("abs-heights", abs);
            upper = upper.map("abs-heights", abs);
        }
        let (gap, witness) = domination_gap(&upper, &lower);
        report.record(gap, || format!("ξ={:?} ξ'={:?} minimal={witness:?}", lo.values(), hi.values()));
    }
    Ok(report)
}
