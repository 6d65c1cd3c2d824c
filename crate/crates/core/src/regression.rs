//! The cross-engine regression matrix: instances solved both by the main
//! engines and by [`crate::oracle`].

use num_rational::Rational64;

use crate::ashkinteller::{at_measure_exact, AtBoundary, AtParams};
use crate::dist::ExactDistribution;
use crate::error::Result;
use crate::grcm::{cubic_measure, nu_measure, BondGraph, CubicBoundary, CubicParams, GrcmBoundary, GrcmParams};
use crate::lattice::{Domain, Shape};
use crate::oracle::{exact_distribution, ModelSpec, SpinBoundary, WrapSector};
use crate::sixvertex::{arrow_distribution, flat_bc, height_distribution, sloped_bc, BoundaryCondition, Sector, Weights};

#[derive(Clone, Debug)]
pub struct Instance {
    pub name: String,
    pub spec: ModelSpec,
}

fn boxd(w: usize, h: usize) -> Domain {
    Domain::new(Shape::Box { width: w, height: h }).expect("box shapes are valid")
}

fn six_box(name: &str, w: usize, h: usize, bc: &BoundaryCondition, abc: [f64; 3]) -> Instance {
    Instance {
        name: name.to_string(),
        spec: ModelSpec::SixVertexBox { width: w, height: h, fixed: bc.values().to_vec(), a: abc[0], b: abc[1], c: abc[2] },
    }
}

fn grcm_instance(name: &str, graph: &BondGraph, channels: Vec<[f64; 4]>, q_sigma: f64, q_tau: f64) -> Instance {
    Instance {
        name: name.to_string(),
        spec: ModelSpec::Grcm { vertices: graph.vertices, bonds: graph.bonds.clone(), channels, q_sigma, q_tau },
    }
}

pub fn matrix() -> Vec<Instance> {
    let mut out = Vec::new();
    for (w, h, abc) in [
        (3, 3, [1.0, 1.0, 1.0]),
        (3, 3, [1.0, 1.0, 2.0]),
        (4, 4, [1.0, 1.0, 1.0]),
        (4, 4, [1.0, 1.0, 1.5]),
        (5, 5, [1.0, 1.0, 2.0]),
        (5, 5, [0.7, 1.3, 1.1]),
        (5, 4, [1.0, 1.0, 1.25]),
        (6, 4, [1.0, 2.0, 0.5]),
    ] {
        let d = boxd(w, h);
        out.push(six_box(&format!("sixv box({w},{h}) flat {abc:?}"), w, h, &flat_bc(&d), abc));
    }
    let d = boxd(5, 5);
    let half = Rational64::new(1, 2);
    let sloped = sloped_bc(&d, half, Rational64::from_integer(0)).expect("slope 1/2 is admissible");
    out.push(six_box("sixv box(5,5) sloped (1/2,0)", 5, 5, &sloped, [1.0, 1.0, 1.5]));
    out.push(six_box("sixv box(5,5) flat+2", 5, 5, &flat_bc(&d).shifted(2), [1.0, 1.0, 1.0]));

    for (n, m, torus, sector, abc) in [
        (2, 2, true, WrapSector::Any, [1.0, 1.0, 1.0]),
        (2, 2, true, WrapSector::Balanced, [1.0, 1.0, 1.5]),
        (4, 2, false, WrapSector::Any, [1.0, 1.0, 2.0]),
        (4, 2, false, WrapSector::Balanced, [1.0, 1.0, 1.0]),
        (4, 3, false, WrapSector::Excess(1), [0.8, 1.2, 1.5]),
        (6, 2, false, WrapSector::Excess(-1), [1.0, 1.0, 1.25]),
    ] {
        out.push(Instance {
            name: format!("sixv wrapped {n}x{m} torus={torus} {sector:?} {abc:?}"),
            spec: ModelSpec::SixVertexWrapped { n, m, torus, sector, a: abc[0], b: abc[1], c: abc[2] },
        });
    }

    let (self_dual_u, _) = crate::ashkinteller::selfdual_params(0.35).expect("J > 0");
    for (w, h, j, u, boundary) in [
        (2, 1, 1.0, 0.0, SpinBoundary::Free),
        (2, 1, 0.3, -0.4, SpinBoundary::Plus),
        (2, 2, 0.25, 0.1, SpinBoundary::Free),
        (2, 2, -0.3, 0.2, SpinBoundary::Plus),
        (2, 2, 0.4, -0.2, SpinBoundary::Minus),
        (3, 2, 0.2, 0.05, SpinBoundary::Plus),
        (3, 2, 0.35, self_dual_u, SpinBoundary::Free),
        (3, 1, 0.5, 0.5, SpinBoundary::Minus),
    ] {
        out.push(Instance {
            name: format!("at box({w},{h}) J={j:.4} U={u:.4} {boundary:?}"),
            spec: ModelSpec::AshkinTeller { width: w, height: h, j, u, boundary },
        });
    }

    let path = BondGraph::new(4, vec![(0, 1), (1, 2), (2, 3)]).expect("valid path");
    out.push(grcm_instance("grcm path(3)", &path, vec![[0.4, 0.1, 0.2, 0.3]; 3], 2.0, 2.0));
    let multi = BondGraph::new(3, vec![(0, 1), (1, 2), (2, 0), (0, 1)]).expect("valid multigraph");
    out.push(grcm_instance(
        "grcm triangle with double bond",
        &multi,
        vec![[0.5, 0.2, 0.1, 0.2], [0.3, 0.3, 0.3, 0.1], [0.1, 0.0, 0.4, 0.5], [1.0, 2.0, 3.0, 4.0]],
        1.5,
        3.0,
    ));
    let free = BondGraph::from_domain(&boxd(2, 2), GrcmBoundary::Free);
    out.push(grcm_instance("grcm box(2,2) free", &free, vec![[0.4, 0.1, 0.15, 0.35]; 4], 2.0, 2.0));
    let wired = BondGraph::from_domain(&boxd(2, 1), GrcmBoundary::Wired);
    out.push(grcm_instance("grcm box(2,1) wired", &wired, vec![[0.2, 0.3, 0.1, 0.4]; 7], 2.0, 1.0));
    let dict = crate::grcm::at_to_grcm(0.3, 0.25, 0.1);
    out.push(grcm_instance("grcm box(2,2) free, spin dictionary", &free, vec![dict.channels; 4], 2.0, 2.0));

    for (w, h, js, jt, jst, qs, qt, fixed) in [
        (2, 1, 0.3, 0.2, 0.1, 3, 3, false),
        (2, 2, 0.25, 0.25, 0.1, 2, 2, true),
        (3, 1, -0.2, 0.4, 0.3, 2, 3, true),
        (2, 2, 0.1, 0.2, 0.0, 3, 2, false),
    ] {
        out.push(Instance {
            name: format!("cubic box({w},{h}) q=({qs},{qt}) fixed={fixed}"),
            spec: ModelSpec::Cubic { width: w, height: h, j_sigma: js, j_tau: jt, j_sigma_tau: jst, q_sigma: qs, q_tau: qt, fixed_one: fixed },
        });
    }
    out
}

/// The same instance through the main engines.
pub fn main_engine(spec: &ModelSpec) -> Result<ExactDistribution> {
    match spec {
        ModelSpec::SixVertexBox { width, height, fixed, a, b, c } => {
            let d = boxd(*width, *height);
            let bc = BoundaryCondition::explicit(&d, fixed.clone())?;
            height_distribution(&d, &bc, &Weights::new(*a, *b, *c)?)
        }
        ModelSpec::SixVertexWrapped { n, m, torus, sector, a, b, c } => {
            let shape = if *torus { Shape::Torus { size: *n } } else { Shape::Cylinder { circumference: *n, height: *m } };
            let d = Domain::new(shape)?;
            let sector = match sector {
                WrapSector::Any => Sector::Any,
                WrapSector::Excess(k) => Sector::Excess(*k),
                WrapSector::Balanced => Sector::Balanced,
            };
            arrow_distribution(&d, sector, &Weights::new(*a, *b, *c)?)
        }
        ModelSpec::AshkinTeller { width, height, j, u, boundary } => {
            let bc = match boundary {
                SpinBoundary::Free => AtBoundary::Free,
                SpinBoundary::Plus => AtBoundary::Plus,
                SpinBoundary::Minus => AtBoundary::Minus,
            };
            at_measure_exact(&boxd(*width, *height), &AtParams::new(*j, *u)?, &bc)
        }
        ModelSpec::Grcm { vertices, bonds, channels, q_sigma, q_tau } => {
            let g = BondGraph::new(*vertices, bonds.clone())?;
            nu_measure(&g, &GrcmParams::new(channels.clone(), *q_sigma, *q_tau)?)
        }
        ModelSpec::Cubic { width, height, j_sigma, j_tau, j_sigma_tau, q_sigma, q_tau, fixed_one } => {
            let p = CubicParams::new(*j_sigma, *j_tau, *j_sigma_tau, *q_sigma as u32, *q_tau as u32)?;
            let bc = if *fixed_one { CubicBoundary::Fixed(1, 1) } else { CubicBoundary::Free };
            cubic_measure(&boxd(*width, *height), &p, bc)
        }
    }
}

/// Largest pointwise probability difference per instance.
pub fn run_matrix() -> Result<Vec<(String, f64)>> {
    matrix()
        .into_iter()
        .map(|inst| {
            let main = main_engine(&inst.spec)?;
            let oracle = exact_distribution(&inst.spec)?;
            let diff = main.max_abs_diff(&oracle).max(oracle.max_abs_diff(&main));
            Ok((inst.name, diff))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_agrees() {
        let rows = run_matrix().unwrap();
        assert!(rows.len() >= 30);
        for (name, diff) in rows {
            assert!(diff < 1e-10, "{name}: {diff}");
        }
    }
}
