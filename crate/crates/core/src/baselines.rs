//! Reference point selectors to compare against flow-based selection.
//!
//! All three rank points by connectivity (number of observing keyframes,
//! ties to the lower id) and differ only in how they trade it against image
//! coverage.

use std::collections::{BTreeMap, BTreeSet};

use crate::map::{KeyframeId, PointId, SlamMap};
use crate::metrics::{GRID_CELL_HEIGHT, GRID_CELL_WIDTH};

/// Points ordered by descending observation count, then ascending id.
fn by_connectivity(map: &SlamMap) -> Vec<PointId> {
    let mut ids: Vec<(usize, PointId)> = map
        .points()
        .iter()
        .map(|p| (map.observation_count(p.id), p.id))
        .collect();
    ids.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    ids.into_iter().map(|(_, id)| id).collect()
}

/// The `budget` most-observed points.
pub fn select_top_m(map: &SlamMap, budget: usize) -> BTreeSet<PointId> {
    by_connectivity(map).into_iter().take(budget).collect()
}

/// Round-robin over the image grid cells of every keyframe: each pass visits
/// keyframes by id and their cells in row-major order, taking the
/// best-connected not-yet-selected point from each cell. Unobserved points
/// come last, in connectivity order.
pub fn select_grid_bucketed(map: &SlamMap, budget: usize) -> BTreeSet<PointId> {
    let order = by_connectivity(map);
    let rank: BTreeMap<PointId, usize> = order.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    // (keyframe, row, col) → points ordered by rank
    let mut buckets: BTreeMap<(KeyframeId, u32, u32), Vec<PointId>> = BTreeMap::new();
    for o in map.observations() {
        let col = (o.u / f64::from(GRID_CELL_WIDTH)) as u32;
        let row = (o.v / f64::from(GRID_CELL_HEIGHT)) as u32;
        buckets
            .entry((o.keyframe_id, row, col))
            .or_default()
            .push(o.point_id);
    }
    let mut queues: Vec<(Vec<PointId>, usize)> = buckets
        .into_values()
        .map(|mut pts| {
            pts.sort_by_key(|p| rank[p]);
            (pts, 0)
        })
        .collect();

    let mut selected = BTreeSet::new();
    let target = budget.min(map.points().len());
    while selected.len() < target {
        let mut progressed = false;
        for (pts, cursor) in &mut queues {
            if selected.len() >= target {
                break;
            }
            while *cursor < pts.len() && selected.contains(&pts[*cursor]) {
                *cursor += 1;
            }
            if *cursor < pts.len() {
                selected.insert(pts[*cursor]);
                *cursor += 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    for p in order {
        if selected.len() >= target {
            break;
        }
        selected.insert(p);
    }
    selected
}

/// Greedy suppression: in connectivity order, accept a point unless an
/// accepted point has a keypoint within `radius` pixels of its keypoint on
/// the point's first keyframe (temporal order). Unobserved points are never
/// accepted.
fn suppress(map: &SlamMap, order: &[PointId], radius: f64) -> Vec<PointId> {
    let r2 = radius * radius;
    let mut accepted_on: BTreeMap<KeyframeId, Vec<(f64, f64)>> = BTreeMap::new();
    let mut out = Vec::new();
    for &p in order {
        let obs = map.point_observations(p);
        let Some(first) = obs
            .iter()
            .min_by_key(|o| map.keyframe(o.keyframe_id).map(|k| k.seq_index))
        else {
            continue;
        };
        let blocked = accepted_on.get(&first.keyframe_id).is_some_and(|kps| {
            kps.iter().any(|&(u, v)| {
                let (du, dv) = (u - first.u, v - first.v);
                du * du + dv * dv <= r2
            })
        });
        if !blocked {
            out.push(p);
            for o in obs {
                accepted_on
                    .entry(o.keyframe_id)
                    .or_default()
                    .push((o.u, o.v));
            }
        }
    }
    out
}

/// Radius-based non-maximal suppression with the radius bisected so that
/// roughly `budget` points survive; any surplus is trimmed in connectivity
/// order, and a shortfall (only possible when fewer points are observed
/// than requested) is filled in connectivity order. Returns the selection
/// and the radius used.
pub fn select_radius_suppressed_with_radius(
    map: &SlamMap,
    budget: usize,
) -> (BTreeSet<PointId>, f64) {
    let order = by_connectivity(map);
    if budget >= order.len() {
        return (order.into_iter().collect(), 0.0);
    }
    if budget == 0 {
        return (BTreeSet::new(), 0.0);
    }
    let max_radius = map
        .keyframes()
        .iter()
        .map(|k| f64::from(k.intrinsics.width).hypot(f64::from(k.intrinsics.height)))
        .fold(0.0, f64::max);
    // Largest radius keeping at least `budget` points.
    let (mut lo, mut hi) = (0.0, max_radius);
    let mut best = suppress(map, &order, lo);
    if best.len() >= budget {
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            let kept = suppress(map, &order, mid);
            if kept.len() >= budget {
                lo = mid;
                best = kept;
            } else {
                hi = mid;
            }
        }
    }
    best.truncate(budget);
    let mut selected: BTreeSet<PointId> = best.into_iter().collect();
    for p in order {
        if selected.len() >= budget {
            break;
        }
        selected.insert(p);
    }
    (selected, lo)
}

pub fn select_radius_suppressed(map: &SlamMap, budget: usize) -> BTreeSet<PointId> {
    select_radius_suppressed_with_radius(map, budget).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::fixtures::*;
    use crate::map::{MapData, Observation};

    fn map_from(keyframes: u64, observations: Vec<Observation>) -> SlamMap {
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

    fn counts_map() -> SlamMap {
        // point 0: 2 obs, point 1: 5 obs, point 2: 3 obs, point 3: 3 obs
        let mut o = Vec::new();
        for (p, n) in [(0u64, 2u64), (1, 5), (2, 3), (3, 3)] {
            for f in 0..n {
                o.push(obs(p, f, 10.0 + 70.0 * p as f64, 10.0));
            }
        }
        map_from(5, o)
    }

    #[test]
    fn top_m_examples() {
        let map = counts_map();
        assert_eq!(select_top_m(&map, 10).len(), 4);
        assert_eq!(select_top_m(&map, 1), [PointId(1)].into());
        assert_eq!(select_top_m(&map, 2), [PointId(1), PointId(2)].into());
        assert!(select_top_m(&map, 0).is_empty());
    }

    #[test]
    fn grid_one_per_cell() {
        let mut o = Vec::new();
        for i in 0..10 {
            o.push(obs(i, 0, 5.0 + i as f64, 5.0));
        }
        o.push(obs(10, 0, 100.0, 5.0));
        o.push(obs(11, 0, 200.0, 5.0));
        let map = map_from(1, o);
        let sel = select_grid_bucketed(&map, 3);
        assert_eq!(sel, [PointId(0), PointId(10), PointId(11)].into());
        assert!(select_grid_bucketed(&map, 0).is_empty());
        assert_eq!(select_grid_bucketed(&map, 100).len(), 12);
    }

    #[test]
    fn grid_every_cell_selected() {
        let mut o = Vec::new();
        for r in 0..10u64 {
            for c in 0..10u64 {
                o.push(obs(
                    r * 10 + c,
                    0,
                    c as f64 * 64.0 + 30.0,
                    r as f64 * 48.0 + 20.0,
                ));
            }
        }
        let map = map_from(1, o);
        assert_eq!(select_grid_bucketed(&map, 100).len(), 100);
    }

    #[test]
    fn radius_full_budget_and_coincident() {
        let map = counts_map();
        let (sel, r) = select_radius_suppressed_with_radius(&map, 4);
        assert_eq!((sel.len(), r), (4, 0.0));
        let coincident = map_from(
            3,
            vec![
                obs(0, 0, 50.0, 50.0),
                obs(0, 1, 50.0, 50.0),
                obs(1, 0, 50.0, 50.0),
                obs(1, 1, 50.0, 50.0),
                obs(1, 2, 50.0, 50.0),
            ],
        );
        assert_eq!(
            select_radius_suppressed(&coincident, 1),
            [PointId(1)].into()
        );
    }

    #[test]
    fn radius_spreads_uniform_grid() {
        // 16 × 12 grid with 20 px spacing on one keyframe.
        let mut o = Vec::new();
        for r in 0..12u64 {
            for c in 0..16u64 {
                o.push(obs(
                    r * 16 + c,
                    0,
                    10.0 + 20.0 * c as f64,
                    10.0 + 20.0 * r as f64,
                ));
            }
        }
        let map = map_from(1, o);
        let total = map.points().len();
        let sel = select_radius_suppressed(&map, total / 4);
        assert_eq!(sel.len(), total / 4);
        let kps: Vec<_> = sel
            .iter()
            .map(|p| map.point_observations(*p)[0])
            .map(|o| (o.u, o.v))
            .collect();
        let mean_nn = kps
            .iter()
            .map(|a| {
                kps.iter()
                    .filter(|b| *b != a)
                    .map(|b| (a.0 - b.0).hypot(a.1 - b.1))
                    .fold(f64::INFINITY, f64::min)
            })
            .sum::<f64>()
            / kps.len() as f64;
        let ratio = mean_nn / 20.0;
        assert!((1.6..=2.4).contains(&ratio), "spacing ratio {ratio}");
    }

    #[test]
    fn selectors_ignore_input_order() {
        let map = counts_map();
        let mut data = map.data().clone();
        data.observations.reverse();
        data.points.reverse();
        let shuffled = SlamMap::from_data(data).unwrap();
        for b in 0..5 {
            assert_eq!(select_top_m(&map, b), select_top_m(&shuffled, b));
            assert_eq!(
                select_grid_bucketed(&map, b),
                select_grid_bucketed(&shuffled, b)
            );
            assert_eq!(
                select_radius_suppressed(&map, b),
                select_radius_suppressed(&shuffled, b)
            );
        }
    }
}
