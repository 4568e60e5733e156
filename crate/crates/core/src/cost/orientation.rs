//! Orientation distance for fully symmetric objects (cubes).

use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ORTHONORMAL_TOL: f64 = 1e-9;

/// Three orthonormal axes of a frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientationBasis {
    axes: [Vector3<f64>; 3],
}

impl OrientationBasis {
    pub fn new(u1: Vector3<f64>, u2: Vector3<f64>, u3: Vector3<f64>) -> Result<Self> {
        let axes = [u1, u2, u3];
        for a in &axes {
            if !a.iter().all(|v| v.is_finite()) || (a.norm() - 1.0).abs() > ORTHONORMAL_TOL {
                return Err(Error::config("basis axis is not unit length"));
            }
        }
        for i in 0..3 {
            for j in i + 1..3 {
                if axes[i].dot(&axes[j]).abs() > ORTHONORMAL_TOL {
                    return Err(Error::config("basis axes are not orthogonal"));
                }
            }
        }
        Ok(OrientationBasis { axes })
    }

    /// Columns of the rotation matrix.
    pub fn from_rotation(r: &Rotation3<f64>) -> Self {
        let m = r.matrix();
        OrientationBasis {
            axes: [
                m.column(0).into_owned(),
                m.column(1).into_owned(),
                m.column(2).into_owned(),
            ],
        }
    }

    /// Planar heading embedded as a rotation about z.
    pub fn from_yaw(yaw: f64) -> Self {
        Self::from_rotation(&Rotation3::from_axis_angle(&Vector3::z_axis(), yaw))
    }

    pub fn identity() -> Self {
        Self::from_rotation(&Rotation3::identity())
    }

    pub fn axis(&self, i: usize) -> &Vector3<f64> {
        &self.axes[i]
    }

    pub fn axes(&self) -> &[Vector3<f64>; 3] {
        &self.axes
    }
}

/// `min_{i,j} (2 - |u1 . v_i| - |u2 . v_j|)`, in `[0, 2]`.
///
/// Zero exactly when two axes of one frame are collinear with two axes of the
/// other, which for a cube means the frames differ by a symmetry rotation.
pub fn ori_metric(u: &OrientationBasis, v: &OrientationBasis) -> f64 {
    let best1 = v
        .axes
        .iter()
        .map(|vi| u.axes[0].dot(vi).abs())
        .fold(0.0, f64::max);
    let best2 = v
        .axes
        .iter()
        .map(|vj| u.axes[1].dot(vj).abs())
        .fold(0.0, f64::max);
    (2.0 - best1 - best2).clamp(0.0, 2.0)
}

/// The 24 proper rotations mapping the cube onto itself.
pub fn cube_rotation_group() -> Vec<Rotation3<f64>> {
    let mut out = Vec::with_capacity(24);
    let perms = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    for p in perms {
        for signs in 0..8u8 {
            let mut m = nalgebra::Matrix3::zeros();
            for (row, &col) in p.iter().enumerate() {
                let s = if signs & (1 << row) != 0 { -1.0 } else { 1.0 };
                m[(row, col)] = s;
            }
            if m.determinant() > 0.0 {
                out.push(Rotation3::from_matrix_unchecked(m));
            }
        }
    }
    out
}
