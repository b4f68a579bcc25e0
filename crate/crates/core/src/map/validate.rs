use std::collections::{HashMap, HashSet};
use std::fmt;

use super::{KeyframeId, MapData, PointId};

const QUATERNION_NORM_TOL: f64 = 1e-9;

/// A single broken invariant in a [`MapData`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateKeyframeId(KeyframeId),
    DuplicatePointId(PointId),
    DuplicateSeqIndex {
        keyframe: KeyframeId,
        seq_index: u64,
    },
    NonIncreasingTimestamp {
        keyframe: KeyframeId,
        timestamp: f64,
    },
    InvalidIntrinsics {
        keyframe: KeyframeId,
        reason: &'static str,
    },
    NonUnitQuaternion {
        keyframe: KeyframeId,
        norm: f64,
    },
    NonFinitePose(KeyframeId),
    NonFinitePoint(PointId),
    DuplicateObservation {
        point: PointId,
        keyframe: KeyframeId,
    },
    DanglingPoint {
        point: PointId,
        keyframe: KeyframeId,
    },
    DanglingKeyframe {
        point: PointId,
        keyframe: KeyframeId,
    },
    KeypointOutOfImage {
        point: PointId,
        keyframe: KeyframeId,
        u: f64,
        v: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateKeyframeId(id) => write!(f, "duplicate keyframe id {id}"),
            Violation::DuplicatePointId(id) => write!(f, "duplicate point id {id}"),
            Violation::DuplicateSeqIndex {
                keyframe,
                seq_index,
            } => write!(f, "keyframe {keyframe}: seq_index {seq_index} already used"),
            Violation::NonIncreasingTimestamp {
                keyframe,
                timestamp,
            } => write!(
                f,
                "keyframe {keyframe}: timestamp {timestamp} not strictly increasing with seq_index"
            ),
            Violation::InvalidIntrinsics { keyframe, reason } => {
                write!(f, "keyframe {keyframe}: invalid intrinsics ({reason})")
            }
            Violation::NonUnitQuaternion { keyframe, norm } => {
                write!(f, "keyframe {keyframe}: quaternion norm {norm} is not 1")
            }
            Violation::NonFinitePose(id) => write!(f, "keyframe {id}: non-finite pose"),
            Violation::NonFinitePoint(id) => write!(f, "point {id}: non-finite position"),
            Violation::DuplicateObservation { point, keyframe } => {
                write!(
                    f,
                    "duplicate observation of point {point} in keyframe {keyframe}"
                )
            }
            Violation::DanglingPoint { point, keyframe } => {
                write!(
                    f,
                    "observation in keyframe {keyframe} references missing point {point}"
                )
            }
            Violation::DanglingKeyframe { point, keyframe } => {
                write!(
                    f,
                    "observation of point {point} references missing keyframe {keyframe}"
                )
            }
            Violation::KeypointOutOfImage {
                point,
                keyframe,
                u,
                v,
            } => write!(
                f,
                "observation of point {point} in keyframe {keyframe}: ({u}, {v}) outside image"
            ),
        }
    }
}

/// Every invariant violation found in a map. Empty iff the map is valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

fn intrinsics_problem(k: &super::CameraIntrinsics) -> Option<&'static str> {
    let (w, h) = (f64::from(k.width), f64::from(k.height));
    if !(k.fx > 0.0 && k.fy > 0.0 && k.fx.is_finite() && k.fy.is_finite()) {
        Some("focal lengths must be positive")
    } else if !(k.cx > 0.0 && k.cx < w && k.cy > 0.0 && k.cy < h) {
        Some("principal point must lie inside the image")
    } else if k.width < 64 || k.height < 48 {
        Some("image must be at least 64x48")
    } else {
        None
    }
}

pub fn validate(map: &MapData) -> ValidationReport {
    let mut out = Vec::new();

    let mut frames = HashMap::with_capacity(map.keyframes.len());
    for kf in &map.keyframes {
        if frames.insert(kf.id, kf).is_some() {
            out.push(Violation::DuplicateKeyframeId(kf.id));
        }
        if let Some(reason) = intrinsics_problem(&kf.intrinsics) {
            out.push(Violation::InvalidIntrinsics {
                keyframe: kf.id,
                reason,
            });
        }
        let q = kf.pose.rotation.as_ref();
        let t = &kf.pose.translation;
        if !q.coords.iter().chain(t.iter()).all(|x| x.is_finite()) || !kf.timestamp.is_finite() {
            out.push(Violation::NonFinitePose(kf.id));
        } else if (q.norm() - 1.0).abs() > QUATERNION_NORM_TOL {
            out.push(Violation::NonUnitQuaternion {
                keyframe: kf.id,
                norm: q.norm(),
            });
        }
    }

    let mut by_seq: Vec<_> = map.keyframes.iter().collect();
    by_seq.sort_by_key(|k| (k.seq_index, k.id));
    for w in by_seq.windows(2) {
        if w[1].seq_index == w[0].seq_index {
            out.push(Violation::DuplicateSeqIndex {
                keyframe: w[1].id,
                seq_index: w[1].seq_index,
            });
        } else if w[1].timestamp.partial_cmp(&w[0].timestamp) != Some(std::cmp::Ordering::Greater) {
            out.push(Violation::NonIncreasingTimestamp {
                keyframe: w[1].id,
                timestamp: w[1].timestamp,
            });
        }
    }

    let mut points = HashSet::with_capacity(map.points.len());
    for p in &map.points {
        if !points.insert(p.id) {
            out.push(Violation::DuplicatePointId(p.id));
        }
        if !p.position.iter().all(|x| x.is_finite()) {
            out.push(Violation::NonFinitePoint(p.id));
        }
    }

    let mut seen = HashSet::with_capacity(map.observations.len());
    for o in &map.observations {
        let (point, keyframe) = (o.point_id, o.keyframe_id);
        if !seen.insert((point, keyframe)) {
            out.push(Violation::DuplicateObservation { point, keyframe });
        }
        if !points.contains(&point) {
            out.push(Violation::DanglingPoint { point, keyframe });
        }
        match frames.get(&keyframe) {
            None => out.push(Violation::DanglingKeyframe { point, keyframe }),
            Some(kf) => {
                if !kf.intrinsics.contains(o.u, o.v) {
                    out.push(Violation::KeypointOutOfImage {
                        point,
                        keyframe,
                        u: o.u,
                        v: o.v,
                    });
                }
            }
        }
    }

    ValidationReport { violations: out }
}
