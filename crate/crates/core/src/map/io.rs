//! JSON map file format.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::{
    CameraIntrinsics, Keyframe, KeyframeId, MapData, MapError, MapPoint, Observation, PointId,
    Pose, SlamMap,
};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseRecord {
    /// `[w, x, y, z]`
    q: [f64; 4],
    t: [f64; 3],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntrinsicsRecord {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: u32,
    height: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KeyframeRecord {
    id: KeyframeId,
    seq_index: u64,
    timestamp: f64,
    pose: PoseRecord,
    intrinsics: IntrinsicsRecord,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointRecord {
    id: PointId,
    xyz: [f64; 3],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObservationRecord {
    point: PointId,
    frame: KeyframeId,
    uv: [f64; 2],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapFile {
    keyframes: Vec<KeyframeRecord>,
    points: Vec<PointRecord>,
    observations: Vec<ObservationRecord>,
}

impl From<MapFile> for MapData {
    fn from(file: MapFile) -> Self {
        let keyframes = file
            .keyframes
            .into_iter()
            .map(|k| {
                let [w, x, y, z] = k.pose.q;
                Keyframe {
                    id: k.id,
                    seq_index: k.seq_index,
                    timestamp: k.timestamp,
                    pose: Pose::new(
                        // Stored verbatim; the norm is checked by validation.
                        UnitQuaternion::new_unchecked(Quaternion::new(w, x, y, z)),
                        Vector3::from(k.pose.t),
                    ),
                    intrinsics: CameraIntrinsics {
                        fx: k.intrinsics.fx,
                        fy: k.intrinsics.fy,
                        cx: k.intrinsics.cx,
                        cy: k.intrinsics.cy,
                        width: k.intrinsics.width,
                        height: k.intrinsics.height,
                    },
                }
            })
            .collect();
        let points = file
            .points
            .into_iter()
            .map(|p| MapPoint {
                id: p.id,
                position: Vector3::from(p.xyz),
            })
            .collect();
        let observations = file
            .observations
            .into_iter()
            .map(|o| Observation {
                point_id: o.point,
                keyframe_id: o.frame,
                u: o.uv[0],
                v: o.uv[1],
            })
            .collect();
        MapData {
            keyframes,
            points,
            observations,
        }
    }
}

impl From<&SlamMap> for MapFile {
    fn from(map: &SlamMap) -> Self {
        let keyframes = map
            .keyframes()
            .iter()
            .map(|k| {
                let q = k.pose.rotation.as_ref();
                KeyframeRecord {
                    id: k.id,
                    seq_index: k.seq_index,
                    timestamp: k.timestamp,
                    pose: PoseRecord {
                        q: [q.w, q.i, q.j, q.k],
                        t: k.pose.translation.into(),
                    },
                    intrinsics: IntrinsicsRecord {
                        fx: k.intrinsics.fx,
                        fy: k.intrinsics.fy,
                        cx: k.intrinsics.cx,
                        cy: k.intrinsics.cy,
                        width: k.intrinsics.width,
                        height: k.intrinsics.height,
                    },
                }
            })
            .collect();
        let points = map
            .points()
            .iter()
            .map(|p| PointRecord {
                id: p.id,
                xyz: p.position.into(),
            })
            .collect();
        let observations = map
            .observations()
            .iter()
            .map(|o| ObservationRecord {
                point: o.point_id,
                frame: o.keyframe_id,
                uv: [o.u, o.v],
            })
            .collect();
        MapFile {
            keyframes,
            points,
            observations,
        }
    }
}

/// Parses and validates a map file.
pub fn load_map<R: Read>(source: R) -> Result<SlamMap, MapError> {
    let file: MapFile = serde_json::from_reader(source).map_err(|e| {
        if e.is_io() {
            MapError::Io(e.into())
        } else {
            MapError::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            }
        }
    })?;
    SlamMap::from_data(file.into())
}

/// Writes the map as JSON. Arrays are sorted by id; floats use shortest
/// round-trip formatting.
pub fn save_map<W: Write>(map: &SlamMap, mut sink: W) -> Result<(), MapError> {
    serde_json::to_writer(&mut sink, &MapFile::from(map)).map_err(std::io::Error::from)?;
    sink.write_all(b"\n")?;
    sink.flush()?;
    Ok(())
}

pub fn load_map_from_path(path: impl AsRef<Path>) -> Result<SlamMap, MapError> {
    load_map(BufReader::new(File::open(path)?))
}

pub fn save_map_to_path(map: &SlamMap, path: impl AsRef<Path>) -> Result<(), MapError> {
    save_map(map, BufWriter::new(File::create(path)?))
}
