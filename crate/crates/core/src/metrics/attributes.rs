use std::collections::HashSet;

use crate::map::SlamMap;

use super::MetricsError;

pub const GRID_CELL_WIDTH: u32 = 64;
pub const GRID_CELL_HEIGHT: u32 = 48;

/// Mean number of observing keyframes per point (`C`).
pub fn attribute_c(map: &SlamMap) -> Result<f64, MetricsError> {
    if map.points().is_empty() {
        return Err(MetricsError::EmptyMap);
    }
    Ok(map.observations().len() as f64 / map.points().len() as f64)
}

/// Largest temporal span (in `seq_index` units) between keyframes observing
/// the same point (`F`).
pub fn attribute_f(map: &SlamMap) -> Result<u64, MetricsError> {
    map.points()
        .iter()
        .filter_map(|p| {
            let obs = map.point_observations(p.id);
            if obs.len() < 2 {
                return None;
            }
            let seqs = obs
                .iter()
                .map(|o| map.keyframe(o.keyframe_id).expect("indexed").seq_index);
            let (lo, hi) = seqs.fold((u64::MAX, 0), |(lo, hi), s| (lo.min(s), hi.max(s)));
            Some(hi - lo)
        })
        .max()
        .ok_or(MetricsError::NoMultiViewPoints)
}

/// Occupied-cell percentage of one keyframe on a `64×48`-pixel grid; edge
/// cells of non-divisible images are partial cells.
pub fn keyframe_occupancy(map: &SlamMap, keyframe: crate::map::KeyframeId) -> f64 {
    let Some(kf) = map.keyframe(keyframe) else {
        return 0.0;
    };
    let cols = kf.intrinsics.width.div_ceil(GRID_CELL_WIDTH);
    let rows = kf.intrinsics.height.div_ceil(GRID_CELL_HEIGHT);
    let occupied: HashSet<(u32, u32)> = map
        .keyframe_observations(keyframe)
        .map(|o| {
            (
                (o.u / f64::from(GRID_CELL_WIDTH)) as u32,
                (o.v / f64::from(GRID_CELL_HEIGHT)) as u32,
            )
        })
        .collect();
    100.0 * occupied.len() as f64 / f64::from(cols * rows)
}

/// Mean per-keyframe grid occupancy in percent (`S`).
pub fn attribute_s(map: &SlamMap) -> f64 {
    if map.keyframes().is_empty() {
        return 0.0;
    }
    let sum: f64 = map
        .keyframes()
        .iter()
        .map(|k| keyframe_occupancy(map, k.id))
        .sum();
    sum / map.keyframes().len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::fixtures::*;
    use crate::map::{MapData, Observation};
    use proptest::prelude::*;

    fn map_with(keyframes: u64, observations: Vec<Observation>) -> SlamMap {
        let mut ids: Vec<u64> = observations.iter().map(|o| o.point_id.0).collect();
        ids.sort();
        ids.dedup();
        SlamMap::from_data(MapData {
            keyframes: (0..keyframes)
                .map(|i| keyframe(i, [i as f64, 0.0, 0.0]))
                .collect(),
            points: ids.into_iter().map(point).collect(),
            observations,
        })
        .unwrap()
    }

    #[test]
    fn connectivity_means() {
        let two = map_with(
            3,
            vec![
                obs(0, 0, 1.0, 1.0),
                obs(0, 1, 1.0, 1.0),
                obs(1, 1, 2.0, 2.0),
                obs(1, 2, 2.0, 2.0),
            ],
        );
        assert_eq!(attribute_c(&two).unwrap(), 2.0);
        let mixed = map_with(
            4,
            vec![
                obs(0, 0, 1.0, 1.0),
                obs(0, 1, 1.0, 1.0),
                obs(1, 0, 2.0, 2.0),
                obs(1, 1, 2.0, 2.0),
                obs(1, 2, 2.0, 2.0),
                obs(1, 3, 2.0, 2.0),
            ],
        );
        assert_eq!(attribute_c(&mixed).unwrap(), 3.0);
    }

    #[test]
    fn span_examples() {
        let mut data = map_with(11, vec![obs(0, 3, 1.0, 1.0), obs(0, 10, 1.0, 1.0)]).into_data();
        assert_eq!(
            attribute_f(&SlamMap::from_data(data.clone()).unwrap()).unwrap(),
            7
        );
        data.observations = vec![obs(0, 3, 1.0, 1.0), obs(0, 4, 1.0, 1.0)];
        assert_eq!(
            attribute_f(&SlamMap::from_data(data.clone()).unwrap()).unwrap(),
            1
        );
        data.observations = vec![obs(0, 3, 1.0, 1.0)];
        assert!(matches!(
            attribute_f(&SlamMap::from_data(data).unwrap()),
            Err(MetricsError::NoMultiViewPoints)
        ));
    }

    #[test]
    fn occupancy_examples() {
        let one = map_with(1, vec![obs(0, 0, 100.0, 100.0)]);
        assert!((attribute_s(&one) - 1.0).abs() < 1e-12);
        let mut full = Vec::new();
        for r in 0..10u64 {
            for c in 0..10u64 {
                full.push(obs(
                    r * 10 + c,
                    0,
                    c as f64 * 64.0 + 10.0,
                    r as f64 * 48.0 + 10.0,
                ));
            }
        }
        assert_eq!(attribute_s(&map_with(1, full.clone())), 100.0);
        // A second keyframe without observations halves the mean.
        assert_eq!(attribute_s(&map_with(2, full)), 50.0);
    }

    #[test]
    fn partial_edge_cells() {
        let mut data = map_with(1, vec![obs(0, 0, 10.0, 10.0)]).into_data();
        data.observations[0].u = 650.0;
        data.observations[0].v = 470.0;
        data.keyframes[0].intrinsics.width = 660;
        data.keyframes[0].intrinsics.height = 490;
        let map = SlamMap::from_data(data).unwrap();
        // 11 × 11 cells, one occupied
        assert!((attribute_s(&map) - 100.0 / 121.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn occupancy_order_invariant_and_monotone(
            pts in proptest::collection::vec((0.0f64..640.0, 0.0f64..480.0), 1..60),
            extra in (0.0f64..640.0, 0.0f64..480.0),
        ) {
            let observations: Vec<_> = pts.iter().enumerate()
                .map(|(i, &(u, v))| obs(i as u64, 0, u, v)).collect();
            let mut reversed = observations.clone();
            reversed.reverse();
            let s = attribute_s(&map_with(1, observations.clone()));
            prop_assert_eq!(s, attribute_s(&map_with(1, reversed)));
            let mut more = observations;
            more.push(obs(1000, 0, extra.0, extra.1));
            prop_assert!(attribute_s(&map_with(1, more)) >= s);
        }
    }
}
