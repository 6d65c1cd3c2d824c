use proptest::prelude::*;

use vertexlab::ashkinteller::{at_measure_exact, AtBoundary, AtParams};
use vertexlab::grcm::{at_to_grcm, nu_measure, BondGraph, GrcmParams};
use vertexlab::lattice::{Domain, Shape};
use vertexlab::loops::{decompose, reverse_in, unbalance};
use vertexlab::oracle::{exact_distribution, ModelSpec, SpinBoundary};
use vertexlab::sampler::{ChainState, Configuration, RngSeed};
use vertexlab::sixvertex::{
    config_from_height, flat_bc, height_distribution, height_from_config, ArrowConfig, HeightFunction, Weights,
};

fn sample_heights(domain: &Domain, c: f64, sweeps: u64, seed: u64) -> HeightFunction {
    let bc = flat_bc(domain);
    let w = Weights::with_c(c).unwrap();
    let mut chain = ChainState::six_vertex(domain, &bc, &w, RngSeed::new(seed, 0)).unwrap();
    for _ in 0..sweeps {
        chain.sweep();
    }
    let Configuration::Heights(h) = &chain.config else { unreachable!() };
    HeightFunction::new(domain, h.clone()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn height_round_trip_on_sampled_boxes(w in 3usize..9, h in 3usize..9, c in 0.5f64..3.0, seed in any::<u64>()) {
        let d = Domain::new(Shape::Box { width: w, height: h }).unwrap();
        let heights = sample_heights(&d, c, 5, seed);
        let config = config_from_height(&d, &heights).unwrap();
        let anchor = d.boundary_faces()[0];
        let back = height_from_config(&d, &config, (anchor, heights.get(anchor))).unwrap();
        prop_assert_eq!(back, heights);
    }

    #[test]
    fn loop_reversal_keeps_ice_and_flux(n in 1usize..4, picks in proptest::collection::vec(any::<bool>(), 64)) {
        let d = Domain::new(Shape::Torus { size: 2 * n }).unwrap();
        let start = ArrowConfig::canonical(&d);
        let dec = decompose(&d, &start).unwrap();
        let ids: Vec<usize> = (0..dec.loops.len()).filter(|&k| picks[k % picks.len()]).collect();
        let r = reverse_in(&start, &dec, &ids).unwrap();
        prop_assert!(r.check_ice(&d).is_ok());
        let u = unbalance(&d, &r).unwrap();
        prop_assert!(u.per_row.iter().all(|&f| f == u.per_row[0]));
        let dec2 = decompose(&d, &r).unwrap();
        prop_assert_eq!(dec2.loops.iter().map(Vec::len).sum::<usize>(), d.num_edges());
    }

    #[test]
    fn weight_scale_invariance(a in 0.2f64..3.0, b in 0.2f64..3.0, c in 0.2f64..3.0, k in 0.1f64..10.0) {
        let d = Domain::new(Shape::Box { width: 4, height: 4 }).unwrap();
        let bc = flat_bc(&d);
        let x = height_distribution(&d, &bc, &Weights::new(a, b, c).unwrap()).unwrap();
        let y = height_distribution(&d, &bc, &Weights::new(k * a, k * b, k * c).unwrap()).unwrap();
        prop_assert!(x.max_abs_diff(&y) < 1e-12);
    }

    #[test]
    fn at_measure_normalizes_and_matches_oracle(j in -1.0f64..1.0, u in -1.0f64..1.0) {
        let d = Domain::new(Shape::Box { width: 2, height: 2 }).unwrap();
        let main = at_measure_exact(&d, &AtParams::new(j, u).unwrap(), &AtBoundary::Plus).unwrap();
        prop_assert!((main.total() - 1.0).abs() < 1e-12);
        let oracle = exact_distribution(&ModelSpec::AshkinTeller { width: 2, height: 2, j, u, boundary: SpinBoundary::Plus }).unwrap();
        prop_assert!(main.max_abs_diff(&oracle) < 1e-10);
    }

    #[test]
    fn unit_cluster_weights_give_product_measure(ch in proptest::array::uniform4(0.05f64..2.0)) {
        let g = BondGraph::new(3, vec![(0, 1), (1, 2), (2, 0)]).unwrap();
        let nu = nu_measure(&g, &GrcmParams::uniform(3, ch, 1.0, 1.0).unwrap()).unwrap();
        let total: f64 = ch.iter().sum();
        for (x, lp) in nu.support.iter().zip(&nu.log_probs) {
            let expected: f64 = (0..3).map(|b| ch[(x[2 * b] + 2 * x[2 * b + 1]) as usize] / total).product();
            prop_assert!((lp.exp() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn spin_dictionary_sums_to_one(js in 0.0f64..2.0, jt in 0.0f64..2.0, jst in -0.5f64..0.5) {
        let dict = at_to_grcm(js, jt, jst);
        prop_assert!((dict.channels.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert_eq!(dict.out_of_regime, dict.channels.iter().any(|a| *a < 0.0));
    }

    #[test]
    fn event_complement_law(mask in any::<u64>()) {
        let spec = ModelSpec::SixVertexWrapped {
            n: 2, m: 2, torus: true, sector: vertexlab::oracle::WrapSector::Any, a: 1.0, b: 1.3, c: 1.7,
        };
        let d = exact_distribution(&spec).unwrap();
        let pick = |x: &[i64]| x.iter().enumerate().fold(0u64, |h, (i, v)| h ^ ((*v as u64 + 3) << (i % 60))) & mask != 0;
        let p = d.event_prob(pick);
        let q = d.event_prob(|x| !pick(x));
        prop_assert!((p + q - 1.0).abs() < 1e-12);
    }
}
