//! Synthetic maps with known ground truth.
//!
//! Cameras move along a circle, a line, or a random walk in the `z = 0`
//! plane, always looking at the scene center. Points are spread uniformly
//! over the scene box, with a fraction packed into tight clusters so that
//! keypoints crowd together in image space.

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::map::{
    CameraIntrinsics, Keyframe, KeyframeId, MapData, MapError, MapPoint, Observation, PointId,
    Pose, SlamMap,
};
use crate::metrics::{StampedPose, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrajectoryShape {
    /// Circle of the given radius around the scene center.
    Circle { radius: f64 },
    /// Straight segment of the given length, `standoff` meters from the
    /// center.
    Line { length: f64 },
    /// Planar random walk with fixed step length, starting `standoff` meters
    /// from the center.
    RandomWalk { step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub n_points: usize,
    pub n_keyframes: usize,
    pub trajectory: TrajectoryShape,
    /// Half-size of the scene box along x and y.
    pub scene_extent: f64,
    /// Half-size of the scene box along z.
    pub scene_height: f64,
    pub standoff: f64,
    pub intrinsics: CameraIntrinsics,
    /// Standard deviation of keypoint noise in pixels.
    pub pixel_noise: f64,
    /// Probability that a visible projection is not observed.
    pub dropout: f64,
    pub cluster_fraction: f64,
    pub n_clusters: usize,
    /// Standard deviation of clustered points around their center.
    pub cluster_spread: f64,
    pub min_depth: f64,
    /// Seconds between consecutive keyframes.
    pub frame_interval: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_points: 500,
            n_keyframes: 30,
            trajectory: TrajectoryShape::Circle { radius: 5.0 },
            scene_extent: 20.0,
            scene_height: 3.0,
            standoff: 10.0,
            intrinsics: CameraIntrinsics::default(),
            pixel_noise: 0.5,
            dropout: 0.1,
            cluster_fraction: 0.3,
            n_clusters: 8,
            cluster_spread: 0.3,
            min_depth: 0.1,
            frame_interval: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    Config(&'static str),
    #[error("generated map has no point observed by two or more keyframes")]
    NoEligiblePoints,
    #[error(transparent)]
    Map(#[from] MapError),
}

impl SynthConfig {
    fn check(&self) -> Result<(), SynthError> {
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        if self.n_points == 0 || self.n_keyframes == 0 {
            return Err(SynthError::Config("counts must be >= 1"));
        }
        if !unit(self.dropout) || !unit(self.cluster_fraction) {
            return Err(SynthError::Config("probabilities must lie in [0, 1]"));
        }
        if !(self.pixel_noise >= 0.0 && self.cluster_spread >= 0.0) {
            return Err(SynthError::Config("noise levels must be non-negative"));
        }
        if !(self.scene_extent >= 0.0 && self.scene_height >= 0.0) {
            return Err(SynthError::Config("scene extents must be non-negative"));
        }
        if self.frame_interval.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(SynthError::Config("frame interval must be positive"));
        }
        if self.cluster_fraction > 0.0 && self.n_clusters == 0 {
            return Err(SynthError::Config("clustered points need n_clusters >= 1"));
        }
        Ok(())
    }
}

/// Camera-to-world rotation for a z-forward, y-down camera at `eye` facing
/// `target`.
pub fn look_at(eye: &Vector3<f64>, target: &Vector3<f64>) -> UnitQuaternion<f64> {
    let forward = (target - eye)
        .try_normalize(1e-12)
        .unwrap_or_else(Vector3::y);
    let up = if forward.z.abs() > 0.999 {
        Vector3::y()
    } else {
        Vector3::z()
    };
    let right = forward.cross(&up).normalize();
    let down = forward.cross(&right);
    let m = Matrix3::from_columns(&[right, down, forward]);
    UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(m))
}

fn camera_centers(config: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<Vector3<f64>> {
    let n = config.n_keyframes;
    match config.trajectory {
        TrajectoryShape::Circle { radius } => (0..n)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / n as f64;
                Vector3::new(radius * a.cos(), radius * a.sin(), 0.0)
            })
            .collect(),
        TrajectoryShape::Line { length } => (0..n)
            .map(|i| {
                let f = if n == 1 {
                    0.5
                } else {
                    i as f64 / (n - 1) as f64
                };
                Vector3::new(length * (f - 0.5), -config.standoff, 0.0)
            })
            .collect(),
        TrajectoryShape::RandomWalk { step } => {
            let mut c = Vector3::new(0.0, -config.standoff, 0.0);
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                out.push(c);
                let a = rng.random_range(0.0..std::f64::consts::TAU);
                c += Vector3::new(step * a.cos(), step * a.sin(), 0.0);
            }
            out
        }
    }
}

fn scene_points(config: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<Vector3<f64>> {
    let (e, h) = (config.scene_extent, config.scene_height);
    let uniform = |rng: &mut ChaCha8Rng| {
        let mut axis = |half: f64| {
            if half > 0.0 {
                rng.random_range(-half..=half)
            } else {
                0.0
            }
        };
        Vector3::new(axis(e), axis(e), axis(h))
    };
    let n_clustered = (config.n_points as f64 * config.cluster_fraction).round() as usize;
    let centers: Vec<Vector3<f64>> = (0..if n_clustered > 0 {
        config.n_clusters
    } else {
        0
    })
        .map(|_| uniform(rng))
        .collect();
    let spread = Normal::new(0.0, config.cluster_spread).expect("validated spread");
    (0..config.n_points)
        .map(|i| {
            if i < n_clustered {
                let c = centers[i % centers.len()];
                c + Vector3::new(spread.sample(rng), spread.sample(rng), spread.sample(rng))
            } else {
                uniform(rng)
            }
        })
        .collect()
}

/// Generates a map and its ground-truth keyframe trajectory. Fully
/// determined by the config, including the seed.
pub fn generate(config: &SynthConfig) -> Result<(SlamMap, Trajectory), SynthError> {
    config.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let centers = camera_centers(config, &mut rng);
    let target = Vector3::zeros();
    let keyframes: Vec<Keyframe> = centers
        .iter()
        .enumerate()
        .map(|(i, c)| Keyframe {
            id: KeyframeId(i as u64),
            seq_index: i as u64,
            timestamp: i as f64 * config.frame_interval,
            pose: Pose::new(look_at(c, &target), *c),
            intrinsics: config.intrinsics,
        })
        .collect();

    let points: Vec<MapPoint> = scene_points(config, &mut rng)
        .into_iter()
        .enumerate()
        .map(|(i, position)| MapPoint {
            id: PointId(i as u64),
            position,
        })
        .collect();

    let noise = Normal::new(0.0, config.pixel_noise).expect("validated noise");
    let (w, h) = (
        f64::from(config.intrinsics.width),
        f64::from(config.intrinsics.height),
    );
    let mut observations = Vec::new();
    for p in &points {
        for kf in &keyframes {
            let pc = kf.pose.world_to_camera(&p.position);
            if pc.z <= config.min_depth {
                continue;
            }
            let (u, v) = kf.intrinsics.project(&pc);
            if !kf.intrinsics.contains(u, v) {
                continue;
            }
            if config.dropout > 0.0 && rng.random_bool(config.dropout) {
                continue;
            }
            let (u, v) = if config.pixel_noise > 0.0 {
                (
                    (u + noise.sample(&mut rng)).clamp(0.0, w - 1e-9),
                    (v + noise.sample(&mut rng)).clamp(0.0, h - 1e-9),
                )
            } else {
                (u, v)
            };
            observations.push(Observation {
                point_id: p.id,
                keyframe_id: kf.id,
                u,
                v,
            });
        }
    }

    let map = SlamMap::from_data(MapData {
        keyframes,
        points,
        observations,
    })?;
    if map.underviewed_points().len() == map.points().len() {
        return Err(SynthError::NoEligiblePoints);
    }
    let trajectory = Trajectory::from_map(&map);
    Ok((map, trajectory))
}

/// Adds independent noise to every pose: translation `N(0, σ_t² I)` and a
/// body-frame rotation `exp(ω)` with `ω ~ N(0, σ_r² I)` (radians from
/// `sigma_r_deg`). The resulting rotation error angle is `‖ω‖`, whose RMS is
/// `√3 σ_r`; the translation error RMS is `√3 σ_t`.
pub fn perturb_trajectory(
    traj: &Trajectory,
    sigma_t: f64,
    sigma_r_deg: f64,
    seed: u64,
) -> Trajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nt = Normal::new(0.0, sigma_t.max(0.0)).expect("finite sigma");
    let nr = Normal::new(0.0, sigma_r_deg.max(0.0).to_radians()).expect("finite sigma");
    let poses = traj
        .poses()
        .iter()
        .map(|sp| {
            let dt = Vector3::new(
                nt.sample(&mut rng),
                nt.sample(&mut rng),
                nt.sample(&mut rng),
            );
            let w = Vector3::new(
                nr.sample(&mut rng),
                nr.sample(&mut rng),
                nr.sample(&mut rng),
            );
            StampedPose {
                timestamp: sp.timestamp,
                pose: Pose::new(
                    sp.pose.rotation * UnitQuaternion::from_scaled_axis(w),
                    sp.pose.translation + dt,
                ),
            }
        })
        .collect();
    Trajectory::new(poses).expect("timestamps unchanged")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::save_map;

    #[test]
    fn center_points_seen_by_every_keyframe() {
        let config = SynthConfig {
            n_points: 20,
            n_keyframes: 12,
            scene_extent: 0.01,
            scene_height: 0.01,
            dropout: 0.0,
            cluster_fraction: 0.0,
            pixel_noise: 0.0,
            ..SynthConfig::default()
        };
        let (map, traj) = generate(&config).unwrap();
        assert_eq!(traj.len(), 12);
        for p in map.points() {
            assert_eq!(map.observation_count(p.id), 12);
        }
    }

    #[test]
    fn full_dropout_fails() {
        let config = SynthConfig {
            dropout: 1.0,
            ..SynthConfig::default()
        };
        assert!(matches!(
            generate(&config),
            Err(SynthError::NoEligiblePoints)
        ));
    }

    #[test]
    fn same_seed_same_bytes() {
        let config = SynthConfig {
            seed: 42,
            trajectory: TrajectoryShape::RandomWalk { step: 0.5 },
            ..SynthConfig::default()
        };
        let bytes = |c: &SynthConfig| {
            let (map, _) = generate(c).unwrap();
            let mut buf = Vec::new();
            save_map(&map, &mut buf).unwrap();
            buf
        };
        assert_eq!(bytes(&config), bytes(&config));
        assert_ne!(bytes(&config), bytes(&SynthConfig { seed: 43, ..config }));
    }

    #[test]
    fn noiseless_observations_reproject() {
        for trajectory in [
            TrajectoryShape::Circle { radius: 5.0 },
            TrajectoryShape::Line { length: 10.0 },
            TrajectoryShape::RandomWalk { step: 1.0 },
        ] {
            let config = SynthConfig {
                pixel_noise: 0.0,
                trajectory,
                ..SynthConfig::default()
            };
            let (map, _) = generate(&config).unwrap();
            assert!(map.validate().is_empty());
            for o in map.observations() {
                let kf = map.keyframe(o.keyframe_id).unwrap();
                let p = map.point(o.point_id).unwrap();
                let (u, v) = kf.intrinsics.project(&kf.pose.world_to_camera(&p.position));
                assert!((u - o.u).abs() < 1e-6 && (v - o.v).abs() < 1e-6);
            }
            for p in map.points() {
                assert!(map.observation_count(p.id) <= config.n_keyframes);
            }
        }
    }

    #[test]
    fn look_at_faces_target() {
        let eye = Vector3::new(3.0, -4.0, 1.0);
        let q = look_at(&eye, &Vector3::zeros());
        let forward = q * Vector3::z();
        assert!((forward - (-eye).normalize()).norm() < 1e-12);
        // image y points downward in the world
        assert!((q * Vector3::y()).z < 0.0);
    }

    #[test]
    fn zero_noise_perturbation_is_identity() {
        let (_, traj) = generate(&SynthConfig::default()).unwrap();
        let same = perturb_trajectory(&traj, 0.0, 0.0, 3);
        for (a, b) in traj.poses().iter().zip(same.poses()) {
            assert_eq!(a.pose.translation, b.pose.translation);
            assert!(a.pose.rotation.angle_to(&b.pose.rotation) < 1e-15);
        }
    }
}
