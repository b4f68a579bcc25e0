//! Trajectory accuracy (ATE, rotational ATE) and map attributes (C, F, S).

mod attributes;
mod trajectory;

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use serde::Serialize;

use crate::map::{Pose, SlamMap};

pub use attributes::{
    attribute_c, attribute_f, attribute_s, keyframe_occupancy, GRID_CELL_HEIGHT, GRID_CELL_WIDTH,
};
pub use trajectory::{
    associate, read_tum, write_tum, PosePair, StampedPose, Trajectory, DEFAULT_MAX_OFFSET,
};

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("map has no points")]
    EmptyMap,
    #[error("map has no point observed by two or more keyframes")]
    NoMultiViewPoints,
    #[error("need at least {needed} associated poses, found {found}")]
    TooFewPairs { needed: usize, found: usize },
    #[error("positions are degenerate (coincident or collinear); alignment is undetermined")]
    Degenerate,
    #[error("timestamp at index {0} does not increase")]
    NonIncreasingTimestamp(usize),
    #[error("trajectory line {line}: {message}")]
    TumSyntax { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `x ↦ scale · rotation · x + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
    pub scale: f64,
}

impl Similarity {
    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
            scale: 1.0,
        }
    }

    pub fn apply(&self, pose: &Pose) -> Pose {
        Pose::new(
            self.rotation * pose.rotation,
            self.scale * (self.rotation * pose.translation) + self.translation,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignMode {
    Rigid,
    Sim,
    None,
}

/// Least-squares rigid (or similarity) transform taking estimated camera
/// centers onto ground truth (Umeyama).
pub fn align(pairs: &[PosePair], with_scale: bool) -> Result<Similarity, MetricsError> {
    if pairs.len() < 3 {
        return Err(MetricsError::TooFewPairs {
            needed: 3,
            found: pairs.len(),
        });
    }
    let n = pairs.len() as f64;
    let src: Vec<Vector3<f64>> = pairs.iter().map(|p| p.estimate.translation).collect();
    let dst: Vec<Vector3<f64>> = pairs.iter().map(|p| p.ground_truth.translation).collect();
    let mu_src = src.iter().sum::<Vector3<f64>>() / n;
    let mu_dst = dst.iter().sum::<Vector3<f64>>() / n;

    let mut cross = Matrix3::zeros();
    let mut src_scatter = Matrix3::zeros();
    let mut dst_scatter = Matrix3::zeros();
    let mut src_var = 0.0;
    for (s, d) in src.iter().zip(&dst) {
        let (cs, cd) = (s - mu_src, d - mu_dst);
        cross += cd * cs.transpose();
        src_scatter += cs * cs.transpose();
        dst_scatter += cd * cd.transpose();
        src_var += cs.norm_squared();
    }
    cross /= n;
    src_var /= n;
    if is_degenerate(&(src_scatter / n)) || is_degenerate(&(dst_scatter / n)) {
        return Err(MetricsError::Degenerate);
    }

    let svd = cross.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut sign = Matrix3::identity();
    if (u.determinant() * v_t.determinant()) < 0.0 {
        sign[(2, 2)] = -1.0;
    }
    let r = u * sign * v_t;
    let scale = if with_scale {
        (Matrix3::from_diagonal(&svd.singular_values) * sign).trace() / src_var
    } else {
        1.0
    };
    let rotation = UnitQuaternion::from_matrix(&r);
    let translation = mu_dst - scale * (rotation * mu_src);
    Ok(Similarity {
        rotation,
        translation,
        scale,
    })
}

// Fewer than two significant principal directions.
fn is_degenerate(scatter: &Matrix3<f64>) -> bool {
    let mut ev: Vec<f64> = scatter.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev[0] <= 1e-18 || ev[1] <= 1e-10 * ev[0]
}

/// Relative error pose `Q⁻¹ P` of an estimate `P` against ground truth `Q`.
pub fn error_pose(pair: &PosePair) -> Pose {
    let q_inv = pair.ground_truth.rotation.inverse();
    Pose::new(
        q_inv * pair.estimate.rotation,
        q_inv * (pair.estimate.translation - pair.ground_truth.translation),
    )
}

/// Rotation angle of a unit quaternion in radians, in `[0, π]`.
pub fn rotation_angle(q: &UnitQuaternion<f64>) -> f64 {
    let q = q.as_ref();
    2.0 * q.imag().norm().atan2(q.w.abs())
}

/// Angle of the relative rotation between `a` and `b` in radians, in
/// `[0, π]`. Uses the chord form `4 atan2(‖a − b‖, ‖a + b‖)` on the
/// same-hemisphere representatives, which is exactly zero for equal inputs.
pub fn rotation_distance(a: &UnitQuaternion<f64>, b: &UnitQuaternion<f64>) -> f64 {
    let (a, b) = (a.as_ref().coords, b.as_ref().coords);
    let b = if a.dot(&b) < 0.0 { -b } else { b };
    4.0 * (a - b).norm().atan2((a + b).norm())
}

fn rms(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), x| (s + x * x, c + 1));
    (count > 0).then(|| (sum / count as f64).sqrt())
}

/// RMS translational error in map units over already aligned pairs.
pub fn ate(pairs: &[PosePair]) -> Result<f64, MetricsError> {
    rms(pairs.iter().map(|p| error_pose(p).translation.norm())).ok_or(MetricsError::TooFewPairs {
        needed: 1,
        found: 0,
    })
}

/// RMS rotation angle of the error poses, in degrees.
pub fn ate_rot(pairs: &[PosePair]) -> Result<f64, MetricsError> {
    rms(pairs
        .iter()
        .map(|p| rotation_distance(&p.estimate.rotation, &p.ground_truth.rotation).to_degrees()))
    .ok_or(MetricsError::TooFewPairs {
        needed: 1,
        found: 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryErrors {
    pub ate_rms: f64,
    pub ate_rot_rms_deg: f64,
    pub associated: usize,
    pub align: AlignMode,
    pub scale: f64,
}

/// Associates by timestamp, aligns according to `mode`, and computes both
/// error measures.
pub fn evaluate(
    est: &Trajectory,
    gt: &Trajectory,
    mode: AlignMode,
    max_offset: f64,
) -> Result<TrajectoryErrors, MetricsError> {
    let mut pairs = associate(est, gt, max_offset);
    let transform = match mode {
        AlignMode::None => Similarity::identity(),
        AlignMode::Rigid => align(&pairs, false)?,
        AlignMode::Sim => align(&pairs, true)?,
    };
    for p in &mut pairs {
        p.estimate = transform.apply(&p.estimate);
    }
    Ok(TrajectoryErrors {
        ate_rms: ate(&pairs)?,
        ate_rot_rms_deg: ate_rot(&pairs)?,
        associated: pairs.len(),
        align: mode,
        scale: transform.scale,
    })
}

/// Map-level summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsReport {
    pub c: f64,
    pub f: Option<u64>,
    pub s: f64,
    pub points: usize,
    pub keyframes: usize,
    pub observations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<TrajectoryErrors>,
}

pub fn map_report(map: &SlamMap) -> MetricsReport {
    MetricsReport {
        c: attribute_c(map).unwrap_or(0.0),
        f: attribute_f(map).ok(),
        s: attribute_s(map),
        points: map.points().len(),
        keyframes: map.keyframes().len(),
        observations: map.observations().len(),
        trajectory: None,
    }
}
