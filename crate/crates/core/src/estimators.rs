//! Height variance profiles, logarithmic fits, crossing curves and sector
//! free energies.

use num_rational::Rational64;

use crate::error::{Error, Result};
use crate::events::{horizontal_crossing, wilson_interval, Predicate};
use crate::lattice::{Adjacency, Domain, FaceId, Shape};
use crate::sampler::{run_chain_with, ChainState, Configuration, RngSeed, RunOptions};
use crate::sixvertex::{flat_bc, height_distribution, sector_free_energy_limit, sloped_bc, BoundaryCondition, Sector, Weights};

/// Boundary conditions indexed by a size `n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BcFamily {
    /// `box(n,n)` with flat boundary heights.
    Flat,
    /// Flat boundary heights plus a constant.
    Shifted(i64),
    /// `box(n,n)` with boundary heights near the plane of slope `(sx, sy)`.
    Sloped { sx: Rational64, sy: Rational64 },
    /// `torus(n)` with `h = 0` on the face at `(0,0)`.
    TorusPinned,
}

impl BcFamily {
    /// Domain, boundary condition and observed face for size `n`.
    pub fn instance(&self, n: usize) -> Result<(Domain, BoundaryCondition, FaceId)> {
        let shape = match self {
            BcFamily::TorusPinned => Shape::Torus { size: n },
            _ => Shape::Box { width: n, height: n },
        };
        let domain = Domain::new(shape)?;
        let bc = match *self {
            BcFamily::Flat => flat_bc(&domain),
            BcFamily::Shifted(k) => flat_bc(&domain).shifted(k),
            BcFamily::Sloped { sx, sy } => sloped_bc(&domain, sx, sy)?,
            BcFamily::TorusPinned => {
                let mut values = vec![None; domain.num_faces()];
                values[domain.face_at(0, 0).unwrap()] = Some(0);
                BoundaryCondition::explicit(&domain, values)?
            }
        };
        let center = domain
            .central_face()
            .ok_or_else(|| Error::InvalidDomain(format!("{} has no central face", domain.shape())))?;
        Ok((domain, bc, center))
    }
}

/// The finite family standing in for a minimum over all boundary
/// conditions: flat, flat shifted by ±1, and four sloped planes.
pub fn minimizing_family() -> Vec<BcFamily> {
    let h = Rational64::new(1, 2);
    let z = Rational64::from_integer(0);
    vec![
        BcFamily::Flat,
        BcFamily::Shifted(1),
        BcFamily::Shifted(-1),
        BcFamily::Sloped { sx: h, sy: z },
        BcFamily::Sloped { sx: -h, sy: z },
        BcFamily::Sloped { sx: z, sy: h },
        BcFamily::Sloped { sx: z, sy: -h },
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Exact,
    Mcmc { sweeps: u64, burn_in: u64, seed: RngSeed },
}

#[derive(Clone, Debug, PartialEq)]
pub struct VarianceProfile {
    pub sizes: Vec<usize>,
    pub variance: Vec<f64>,
    /// Zero for exact values.
    pub std_error: Vec<f64>,
}

pub const VARIANCE_BATCHES: usize = 32;

/// Variance of the centre height for one instance.
pub fn center_variance(domain: &Domain, bc: &BoundaryCondition, w: &Weights, center: FaceId, method: Method) -> Result<(f64, f64)> {
    match method {
        Method::Exact => {
            let dist = height_distribution(domain, bc, w)?;
            let m1 = dist.expectation(|h| h[center] as f64);
            let m2 = dist.expectation(|h| (h[center] * h[center]) as f64);
            Ok(((m2 - m1 * m1).max(0.0), 0.0))
        }
        Method::Mcmc { sweeps, burn_in, seed } => {
            let mut chain = ChainState::six_vertex(domain, bc, w, seed)?;
            let mut samples = Vec::with_capacity(sweeps as usize);
            run_chain_with(&mut chain, RunOptions { sweeps, burn_in, thin: 1 }, |c| {
                let Configuration::Heights(h) = c else { unreachable!() };
                samples.push(h[center] as f64);
            })?;
            variance_with_error(&samples)
        }
    }
}

/// Sample variance with a batch-means standard error.
pub fn variance_with_error(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.len() < 2 * VARIANCE_BATCHES {
        return Err(Error::InvalidParameter(format!(
            "{} samples; at least {} needed",
            samples.len(),
            2 * VARIANCE_BATCHES
        )));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let size = samples.len() / VARIANCE_BATCHES;
    let batch: Vec<f64> = samples
        .chunks_exact(size)
        .take(VARIANCE_BATCHES)
        .map(|b| b.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / b.len() as f64)
        .collect();
    let bm = batch.iter().sum::<f64>() / batch.len() as f64;
    let bvar = batch.iter().map(|x| (x - bm).powi(2)).sum::<f64>() / (batch.len() - 1) as f64;
    Ok((var, (bvar / batch.len() as f64).sqrt()))
}

pub fn variance_profile(sizes: &[usize], w: &Weights, family: &BcFamily, method: Method) -> Result<VarianceProfile> {
    if sizes.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::InvalidParameter("sizes must be strictly increasing".into()));
    }
    let mut profile = VarianceProfile { sizes: sizes.to_vec(), variance: Vec::new(), std_error: Vec::new() };
    for (k, &n) in sizes.iter().enumerate() {
        let (domain, bc, center) = family.instance(n)?;
        let method = match method {
            Method::Mcmc { sweeps, burn_in, seed } => Method::Mcmc { sweeps, burn_in, seed: seed.child(k as u64) },
            m => m,
        };
        let (v, e) = center_variance(&domain, &bc, w, center, method)?;
        profile.variance.push(v);
        profile.std_error.push(e);
    }
    Ok(profile)
}

/// Exact minimum of the centre variance over `families`, per size.
pub fn min_variance_profile(sizes: &[usize], w: &Weights, families: &[BcFamily]) -> Result<VarianceProfile> {
    let mut best: Option<VarianceProfile> = None;
    for f in families {
        let p = variance_profile(sizes, w, f, Method::Exact)?;
        best = Some(match best {
            None => p,
            Some(mut b) => {
                for (x, y) in b.variance.iter_mut().zip(&p.variance) {
                    *x = x.min(*y);
                }
                b
            }
        });
    }
    best.ok_or_else(|| Error::InvalidParameter("empty boundary family".into()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least squares of variance against `ln(size)`.
pub fn log_fit(profile: &VarianceProfile) -> Result<FitResult> {
    if profile.sizes.len() < 3 || profile.sizes.len() != profile.variance.len() {
        return Err(Error::InvalidParameter("a fit needs at least 3 sizes".into()));
    }
    let xs: Vec<f64> = profile.sizes.iter().map(|&n| (n as f64).ln()).collect();
    let ys = &profile.variance;
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("sizes are all equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(FitResult { slope, intercept, r_squared })
}

/// Every `α = flux / n` realisable on a circumference-`n` cylinder.
pub fn feasible_alphas(n: usize) -> Vec<Rational64> {
    (0..=n).map(|up| Rational64::new(2 * up as i64 - n as i64, n as i64)).collect()
}

/// `(α, f_n(α))` with `f_n` the per-vertex free energy of the infinite
/// cylinder whose rows carry net upward flux `α n`.
pub fn free_energy_curve(n: usize, w: &Weights, alphas: &[Rational64]) -> Result<Vec<(Rational64, f64)>> {
    let mut out = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let flux = alpha * Rational64::from_integer(n as i64);
        if !flux.is_integer() || (flux.to_integer() - n as i64).rem_euclid(2) != 0 || flux.to_integer().abs() > n as i64 {
            return Err(Error::InfeasibleSector(format!("α = {alpha} on circumference {n}")));
        }
        let sector = Sector::Excess(flux.to_integer() / 2);
        out.push((alpha, sector_free_energy_limit(n, w, sector)?));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossingPoint {
    pub size: usize,
    pub probability: f64,
    /// 95% half-width; zero for exact values.
    pub half_width: f64,
}

/// Probability that `{h ≥ level}` crosses `box(n,n)` from left to right
/// under flat boundary heights.
pub fn crossing_curve(sizes: &[usize], w: &Weights, level: i64, method: Method) -> Result<Vec<CrossingPoint>> {
    let mut out = Vec::new();
    for (k, &n) in sizes.iter().enumerate() {
        let (domain, bc, _) = BcFamily::Flat.instance(n)?;
        let ev = |h: &[i64]| horizontal_crossing(&domain, h, Predicate::AtLeast(level), Adjacency::Edge);
        let point = match method {
            Method::Exact => {
                let dist = height_distribution(&domain, &bc, w)?;
                CrossingPoint { size: n, probability: dist.event_prob(ev), half_width: 0.0 }
            }
            Method::Mcmc { sweeps, burn_in, seed } => {
                let mut chain = ChainState::six_vertex(&domain, &bc, w, seed.child(k as u64))?;
                let mut hits = 0u64;
                run_chain_with(&mut chain, RunOptions { sweeps, burn_in, thin: 1 }, |c| {
                    let Configuration::Heights(h) = c else { unreachable!() };
                    hits += ev(h) as u64;
                })?;
                let (p, half) = wilson_interval(hits, sweeps)?;
                CrossingPoint { size: n, probability: p, half_width: half }
            }
        };
        out.push(point);
    }
    Ok(out)
}
