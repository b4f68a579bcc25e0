use std::collections::BTreeMap;

use super::{KeyframeId, PointId, SlamMap};

/// Two keyframes (`frame_a < frame_b`) and the points both observe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CovisPair {
    pub frame_a: KeyframeId,
    pub frame_b: KeyframeId,
    /// Sorted ascending.
    pub shared_points: Vec<PointId>,
}

/// All keyframe pairs sharing at least one point, ordered by `(a, b)`.
pub fn covisibility(map: &SlamMap) -> Vec<CovisPair> {
    let mut pairs: BTreeMap<(KeyframeId, KeyframeId), Vec<PointId>> = BTreeMap::new();
    for p in map.points() {
        let obs = map.point_observations(p.id);
        for (i, a) in obs.iter().enumerate() {
            for b in &obs[i + 1..] {
                pairs
                    .entry((a.keyframe_id, b.keyframe_id))
                    .or_default()
                    .push(p.id);
            }
        }
    }
    pairs
        .into_iter()
        .map(|((frame_a, frame_b), shared_points)| CovisPair {
            frame_a,
            frame_b,
            shared_points,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::MapData;
    use super::*;

    #[test]
    fn four_frame_fixture_pairs() {
        let map = four_frame_fixture();
        let pairs = covisibility(&map);
        let summary: Vec<_> = pairs
            .iter()
            .map(|p| (p.frame_a.0, p.frame_b.0, p.shared_points.len()))
            .collect();
        assert_eq!(
            summary,
            vec![
                (0, 1, 2),
                (0, 2, 1),
                (0, 3, 1),
                (1, 2, 1),
                (1, 3, 1),
                (2, 3, 2)
            ]
        );
        let with_point2 = pairs
            .iter()
            .filter(|p| p.shared_points.contains(&PointId(2)))
            .count();
        assert_eq!(with_point2, 6);
    }

    #[test]
    fn no_shared_points_gives_no_pairs() {
        let map = SlamMap::from_data(MapData {
            keyframes: vec![keyframe(0, [0.0; 3]), keyframe(1, [1.0, 0.0, 0.0])],
            points: vec![point(0), point(1)],
            observations: vec![obs(0, 0, 1.0, 1.0), obs(1, 1, 1.0, 1.0)],
        })
        .unwrap();
        assert!(covisibility(&map).is_empty());
    }

    #[test]
    fn three_frames_one_point() {
        let map = SlamMap::from_data(MapData {
            keyframes: (0..3).map(|i| keyframe(i, [i as f64, 0.0, 0.0])).collect(),
            points: vec![point(7)],
            observations: (0..3).map(|f| obs(7, f, 5.0, 5.0)).collect(),
        })
        .unwrap();
        let pairs = covisibility(&map);
        assert_eq!(pairs.len(), 3);
        assert!(pairs.iter().all(|p| p.shared_points == vec![PointId(7)]));
    }
}
