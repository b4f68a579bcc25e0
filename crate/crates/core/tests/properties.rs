//! Cross-module properties on synthetic maps.

use std::collections::BTreeMap;

use nalgebra::{UnitQuaternion, Vector3};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use flowsparse::baselines::{select_grid_bucketed, select_radius_suppressed, select_top_m};
use flowsparse::map::{covisibility, load_map, save_map, MapData};
use flowsparse::metrics::{associate, ate_rot, DEFAULT_MAX_OFFSET};
use flowsparse::synth::{generate, perturb_trajectory, SynthConfig};
use flowsparse::{
    apply_selection, build_graph, sparsify, GraphConfig, PointId, Pose, SlamMap, SparsifyConfig,
    VertexId,
};

fn small_map(seed: u64) -> SlamMap {
    let config = SynthConfig {
        n_points: 100,
        n_keyframes: 10,
        seed,
        ..SynthConfig::default()
    };
    generate(&config).expect("synthetic map").0
}

fn shuffled(map: &SlamMap, seed: u64) -> SlamMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let MapData {
        mut keyframes,
        mut points,
        mut observations,
    } = map.data().clone();
    keyframes.shuffle(&mut rng);
    points.shuffle(&mut rng);
    observations.shuffle(&mut rng);
    SlamMap::from_data(MapData {
        keyframes,
        points,
        observations,
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn save_load_round_trip(seed in 0u64..10_000) {
        let map = small_map(seed);
        let mut first = Vec::new();
        save_map(&map, &mut first).unwrap();
        let again = load_map(first.as_slice()).unwrap();
        prop_assert_eq!(map.data(), again.data());
        let mut second = Vec::new();
        save_map(&again, &mut second).unwrap();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn covisibility_pairs_per_point(seed in 0u64..10_000) {
        let map = small_map(seed);
        let mut per_point: BTreeMap<PointId, usize> = BTreeMap::new();
        for pair in covisibility(&map) {
            for p in pair.shared_points {
                *per_point.entry(p).or_default() += 1;
            }
        }
        for p in map.points() {
            let n = map.observation_count(p.id);
            prop_assert_eq!(per_point.get(&p.id).copied().unwrap_or(0), n * (n.saturating_sub(1)) / 2);
        }
        prop_assert_eq!(covisibility(&map), covisibility(&shuffled(&map, seed)));
    }

    #[test]
    fn graph_is_layered_and_balanced(seed in 0u64..10_000, m in 1i64..30) {
        let map = small_map(seed);
        let graph = build_graph(&map, &GraphConfig::new(m)).unwrap();
        let layer = |v: &VertexId| match v {
            VertexId::Source => 0,
            VertexId::Point(_) => 1,
            VertexId::FramePair(..) => 2,
            VertexId::Sink => 3,
        };
        let mut source_cap = 0;
        let mut pair_edges = 0;
        for e in graph.edges() {
            prop_assert_eq!(layer(&e.to), layer(&e.from) + 1);
            if e.from == VertexId::Source {
                source_cap += e.capacity;
            }
            if layer(&e.from) == 1 {
                prop_assert_eq!(e.capacity, 1);
                pair_edges += 1;
            }
        }
        prop_assert_eq!(source_cap, pair_edges);

        let other = build_graph(&shuffled(&map, seed ^ 1), &GraphConfig::new(m)).unwrap();
        prop_assert_eq!(graph.vertices(), other.vertices());
        prop_assert!(graph.edges().eq(other.edges()));
    }

    #[test]
    fn sparsify_properties(seed in 0u64..10_000) {
        let map = small_map(seed);
        let mut last_flow = 0;
        for m in [2, 5, 10, 20] {
            let r = sparsify(&map, &SparsifyConfig::new(m)).unwrap();
            prop_assert!(r.total_flow >= last_flow);
            last_flow = r.total_flow;
            prop_assert!(r.kept_point_ids.len() as i64 <= r.total_flow);
            prop_assert!(apply_selection(&map, &r).validate().is_empty());
            let again = sparsify(&shuffled(&map, seed), &SparsifyConfig::new(m)).unwrap();
            prop_assert_eq!(
                serde_json::to_vec(&r.to_report(false)).unwrap(),
                serde_json::to_vec(&again.to_report(false)).unwrap()
            );
        }
    }

    #[test]
    fn selectors_are_exact_and_order_invariant(seed in 0u64..10_000, budget in 0usize..120) {
        let map = small_map(seed);
        let other = shuffled(&map, seed);
        let want = budget.min(map.points().len());
        let top = select_top_m(&map, budget);
        let grid = select_grid_bucketed(&map, budget);
        let radius = select_radius_suppressed(&map, budget);
        prop_assert_eq!(top.len(), want);
        prop_assert_eq!(grid.len(), want);
        prop_assert_eq!(radius.len(), want);
        prop_assert_eq!(top, select_top_m(&other, budget));
        prop_assert_eq!(grid, select_grid_bucketed(&other, budget));
        prop_assert_eq!(radius, select_radius_suppressed(&other, budget));
    }

    #[test]
    fn rotation_error_survives_global_rotation(seed in 0u64..10_000, axis in proptest::array::uniform3(-3.0f64..3.0)) {
        let config = SynthConfig { n_points: 50, n_keyframes: 30, seed, ..SynthConfig::default() };
        let (_, gt) = generate(&config).unwrap();
        let est = perturb_trajectory(&gt, 0.1, 3.0, seed + 1);
        let g = UnitQuaternion::from_scaled_axis(Vector3::from(axis));
        let turn = |p: &Pose| Pose::new(g * p.rotation, g * p.translation);
        let base = ate_rot(&associate(&est, &gt, DEFAULT_MAX_OFFSET)).unwrap();
        let moved = ate_rot(&associate(&est.map_poses(turn), &gt.map_poses(turn), DEFAULT_MAX_OFFSET)).unwrap();
        prop_assert!((base - moved).abs() < 1e-9);
    }
}
