//! SLAM map data model: keyframes, map points, and their 2D observations.
//!
//! A [`SlamMap`] is immutable once built. Construction goes through
//! [`SlamMap::from_data`], which validates the raw [`MapData`], canonicalizes
//! the ordering (keyframes and points by id, observations by `(point, frame)`)
//! and builds the point→keyframe and keyframe→point indices.

mod covis;
mod io;
mod validate;

use std::fmt;
use std::ops::Range;

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

pub use covis::{covisibility, CovisPair};
pub use io::{load_map, load_map_from_path, save_map, save_map_to_path};
pub use validate::{validate, ValidationReport, Violation};

/// Identifier of a keyframe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KeyframeId(pub u64);

/// Identifier of a map point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointId(pub u64);

impl fmt::Display for KeyframeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    /// Pinhole projection of a point given in camera coordinates (z forward).
    pub fn project(&self, p_cam: &Vector3<f64>) -> (f64, f64) {
        (
            self.fx * p_cam.x / p_cam.z + self.cx,
            self.fy * p_cam.y / p_cam.z + self.cy,
        )
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u < f64::from(self.width) && v < f64::from(self.height)
    }
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self {
            fx: 500.0,
            fy: 500.0,
            cx: 320.0,
            cy: 240.0,
            width: 640,
            height: 480,
        }
    }
}

/// Camera-to-world rigid transform. `translation` is the camera center in
/// world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn new(rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(UnitQuaternion::identity(), Vector3::zeros())
    }

    pub fn center(&self) -> Vector3<f64> {
        self.translation
    }

    pub fn inverse(&self) -> Self {
        let rotation = self.rotation.inverse();
        Self::new(rotation, -(rotation * self.translation))
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Pose) -> Self {
        Self::new(
            self.rotation * other.rotation,
            self.rotation * other.translation + self.translation,
        )
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// World point expressed in this camera's frame.
    pub fn world_to_camera(&self, p_world: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.inverse() * (p_world - self.translation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keyframe {
    pub id: KeyframeId,
    pub seq_index: u64,
    pub timestamp: f64,
    pub pose: Pose,
    pub intrinsics: CameraIntrinsics,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapPoint {
    pub id: PointId,
    pub position: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub point_id: PointId,
    pub keyframe_id: KeyframeId,
    pub u: f64,
    pub v: f64,
}

/// Unvalidated map contents, in whatever order they were supplied.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MapData {
    pub keyframes: Vec<Keyframe>,
    pub points: Vec<MapPoint>,
    pub observations: Vec<Observation>,
}

#[derive(Debug, thiserror::Error)]
pub enum MapError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("observation references missing point id {0}")]
    MissingPoint(PointId),
    #[error("observation references missing keyframe id {0}")]
    MissingKeyframe(KeyframeId),
    #[error("invalid map: {0}")]
    Invalid(ValidationReport),
    #[error("unknown point id {0}")]
    UnknownPoint(PointId),
    #[error("unknown keyframe id {0}")]
    UnknownKeyframe(KeyframeId),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A validated map with point/keyframe indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SlamMap {
    data: MapData,
    // Parallel to `data.points`: range into `data.observations`.
    point_obs: Vec<Range<usize>>,
    // Parallel to `data.keyframes`: indices into `data.observations`.
    keyframe_obs: Vec<Vec<usize>>,
}

impl SlamMap {
    /// Validates and indexes `data`. Dangling references are reported as
    /// [`MapError::MissingPoint`] / [`MapError::MissingKeyframe`]; every other
    /// violation as [`MapError::Invalid`].
    pub fn from_data(mut data: MapData) -> Result<Self, MapError> {
        let report = validate(&data);
        if !report.is_empty() {
            for v in report.violations() {
                match *v {
                    Violation::DanglingPoint { point, .. } => {
                        return Err(MapError::MissingPoint(point))
                    }
                    Violation::DanglingKeyframe { keyframe, .. } => {
                        return Err(MapError::MissingKeyframe(keyframe))
                    }
                    _ => {}
                }
            }
            return Err(MapError::Invalid(report));
        }

        data.keyframes.sort_by_key(|k| k.id);
        data.points.sort_by_key(|p| p.id);
        data.observations
            .sort_by_key(|o| (o.point_id, o.keyframe_id));

        let mut point_obs = Vec::with_capacity(data.points.len());
        let mut cursor = 0;
        for p in &data.points {
            let start = cursor;
            while cursor < data.observations.len() && data.observations[cursor].point_id == p.id {
                cursor += 1;
            }
            point_obs.push(start..cursor);
        }

        let mut keyframe_obs = vec![Vec::new(); data.keyframes.len()];
        for (i, o) in data.observations.iter().enumerate() {
            let k = data
                .keyframes
                .binary_search_by_key(&o.keyframe_id, |k| k.id)
                .expect("validated reference");
            keyframe_obs[k].push(i);
        }

        Ok(Self {
            data,
            point_obs,
            keyframe_obs,
        })
    }

    pub fn data(&self) -> &MapData {
        &self.data
    }

    pub fn into_data(self) -> MapData {
        self.data
    }

    /// Keyframes sorted by id.
    pub fn keyframes(&self) -> &[Keyframe] {
        &self.data.keyframes
    }

    /// Points sorted by id.
    pub fn points(&self) -> &[MapPoint] {
        &self.data.points
    }

    /// Observations sorted by `(point_id, keyframe_id)`.
    pub fn observations(&self) -> &[Observation] {
        &self.data.observations
    }

    pub fn validate(&self) -> ValidationReport {
        validate(&self.data)
    }

    fn point_index(&self, id: PointId) -> Option<usize> {
        self.data.points.binary_search_by_key(&id, |p| p.id).ok()
    }

    fn keyframe_index(&self, id: KeyframeId) -> Option<usize> {
        self.data.keyframes.binary_search_by_key(&id, |k| k.id).ok()
    }

    pub fn point(&self, id: PointId) -> Option<&MapPoint> {
        self.point_index(id).map(|i| &self.data.points[i])
    }

    pub fn keyframe(&self, id: KeyframeId) -> Option<&Keyframe> {
        self.keyframe_index(id).map(|i| &self.data.keyframes[i])
    }

    /// Observations of a point, sorted by keyframe id.
    pub fn point_observations(&self, id: PointId) -> &[Observation] {
        match self.point_index(id) {
            Some(i) => &self.data.observations[self.point_obs[i].clone()],
            None => &[],
        }
    }

    /// Observations made in a keyframe, sorted by point id.
    pub fn keyframe_observations(&self, id: KeyframeId) -> impl Iterator<Item = &Observation> {
        let idx: &[usize] = match self.keyframe_index(id) {
            Some(i) => &self.keyframe_obs[i],
            None => &[],
        };
        idx.iter().map(move |&i| &self.data.observations[i])
    }

    pub fn keyframes_of_point(&self, id: PointId) -> Vec<KeyframeId> {
        self.point_observations(id)
            .iter()
            .map(|o| o.keyframe_id)
            .collect()
    }

    pub fn points_of_keyframe(&self, id: KeyframeId) -> Vec<PointId> {
        self.keyframe_observations(id).map(|o| o.point_id).collect()
    }

    /// Number of keyframes observing the point.
    pub fn observation_count(&self, id: PointId) -> usize {
        self.point_observations(id).len()
    }

    pub fn observation(&self, point: PointId, keyframe: KeyframeId) -> Option<&Observation> {
        let obs = self.point_observations(point);
        obs.binary_search_by_key(&keyframe, |o| o.keyframe_id)
            .ok()
            .map(|i| &obs[i])
    }

    /// Points seen by fewer than two keyframes; they cannot be triangulated
    /// and are excluded from the flow graph.
    pub fn underviewed_points(&self) -> Vec<PointId> {
        self.data
            .points
            .iter()
            .zip(&self.point_obs)
            .filter(|(_, r)| r.len() < 2)
            .map(|(p, _)| p.id)
            .collect()
    }

    /// Keyframes in temporal order.
    pub fn keyframes_by_seq(&self) -> Vec<&Keyframe> {
        let mut kfs: Vec<&Keyframe> = self.data.keyframes.iter().collect();
        kfs.sort_by_key(|k| k.seq_index);
        kfs
    }
}
