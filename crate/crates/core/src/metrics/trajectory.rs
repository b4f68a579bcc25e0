//! Timestamped trajectories, TUM text I/O, and timestamp association.

use std::io::{BufRead, Write};

use nalgebra::{Quaternion, UnitQuaternion, Vector3};

use crate::map::{Pose, SlamMap};

use super::MetricsError;

/// Default maximum timestamp offset for association, in seconds.
pub const DEFAULT_MAX_OFFSET: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StampedPose {
    pub timestamp: f64,
    pub pose: Pose,
}

/// Poses with strictly increasing timestamps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    poses: Vec<StampedPose>,
}

impl Trajectory {
    pub fn new(poses: Vec<StampedPose>) -> Result<Self, MetricsError> {
        for (i, w) in poses.windows(2).enumerate() {
            if w[1].timestamp.partial_cmp(&w[0].timestamp) != Some(std::cmp::Ordering::Greater) {
                return Err(MetricsError::NonIncreasingTimestamp(i + 1));
            }
        }
        Ok(Self { poses })
    }

    /// Keyframe poses of a map in temporal order.
    pub fn from_map(map: &SlamMap) -> Self {
        Self {
            poses: map
                .keyframes_by_seq()
                .into_iter()
                .map(|k| StampedPose {
                    timestamp: k.timestamp,
                    pose: k.pose,
                })
                .collect(),
        }
    }

    pub fn poses(&self) -> &[StampedPose] {
        &self.poses
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    /// Applies `f` to every pose, keeping timestamps.
    pub fn map_poses(&self, f: impl Fn(&Pose) -> Pose) -> Self {
        Self {
            poses: self
                .poses
                .iter()
                .map(|p| StampedPose {
                    timestamp: p.timestamp,
                    pose: f(&p.pose),
                })
                .collect(),
        }
    }
}

/// Reads `timestamp tx ty tz qx qy qz qw` lines; blank lines and `#`
/// comments are skipped. Quaternions are normalized.
pub fn read_tum<R: BufRead>(input: R) -> Result<Trajectory, MetricsError> {
    let mut poses = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let vals: Result<Vec<f64>, _> = body.split_whitespace().map(str::parse).collect();
        let vals = vals.map_err(|_| MetricsError::TumSyntax {
            line: i + 1,
            message: "expected numbers".into(),
        })?;
        if vals.len() != 8 {
            return Err(MetricsError::TumSyntax {
                line: i + 1,
                message: format!("expected 8 fields, found {}", vals.len()),
            });
        }
        let q = Quaternion::new(vals[7], vals[4], vals[5], vals[6]);
        if q.norm().partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(MetricsError::TumSyntax {
                line: i + 1,
                message: "zero quaternion".into(),
            });
        }
        poses.push(StampedPose {
            timestamp: vals[0],
            pose: Pose::new(
                UnitQuaternion::from_quaternion(q),
                Vector3::new(vals[1], vals[2], vals[3]),
            ),
        });
    }
    Trajectory::new(poses)
}

pub fn write_tum<W: Write>(traj: &Trajectory, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# timestamp tx ty tz qx qy qz qw")?;
    for p in traj.poses() {
        let t = &p.pose.translation;
        let q = p.pose.rotation.as_ref();
        writeln!(
            out,
            "{} {} {} {} {} {} {} {}",
            p.timestamp, t.x, t.y, t.z, q.i, q.j, q.k, q.w
        )?;
    }
    out.flush()
}

/// An estimated pose matched with its ground-truth pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosePair {
    pub estimate: Pose,
    pub ground_truth: Pose,
}

/// Greedy nearest-timestamp matching: candidate pairs with offset below
/// `max_offset` are taken in order of increasing offset, each pose used at
/// most once. Returned in estimate order.
pub fn associate(est: &Trajectory, gt: &Trajectory, max_offset: f64) -> Vec<PosePair> {
    let gt_times: Vec<f64> = gt.poses().iter().map(|p| p.timestamp).collect();
    let mut candidates = Vec::new();
    for (i, e) in est.poses().iter().enumerate() {
        let start = gt_times.partition_point(|&t| t <= e.timestamp - max_offset);
        for (j, &t) in gt_times.iter().enumerate().skip(start) {
            let dt = (t - e.timestamp).abs();
            if t >= e.timestamp + max_offset {
                break;
            }
            if dt < max_offset {
                candidates.push((dt, i, j));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_est = vec![false; est.len()];
    let mut used_gt = vec![false; gt.len()];
    let mut matches = Vec::new();
    for (_, i, j) in candidates {
        if !used_est[i] && !used_gt[j] {
            used_est[i] = true;
            used_gt[j] = true;
            matches.push((i, j));
        }
    }
    matches.sort_unstable();
    matches
        .into_iter()
        .map(|(i, j)| PosePair {
            estimate: est.poses()[i].pose,
            ground_truth: gt.poses()[j].pose,
        })
        .collect()
}
