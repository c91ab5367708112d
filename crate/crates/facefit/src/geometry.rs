//! Weak-perspective camera, rotations, quaternions, normals, visibility.
//!
//! Rotations are stored as axis-angle vectors `r` (radians, |r| < 2π) and
//! applied about the model origin. All trigonometric coefficient kernels
//! are written as even functions of θ² with series fallbacks so that both
//! values and derivatives stay accurate through θ = 0.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weak-perspective camera: `(x, y, z) ↦ (s·x + tx, s·y + ty)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraParams {
    pub s: f64,
    pub tx: f64,
    pub ty: f64,
}

impl CameraParams {
    pub fn new(s: f64, tx: f64, ty: f64) -> Result<Self> {
        let cam = CameraParams { s, tx, ty };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s.is_finite() && self.tx.is_finite() && self.ty.is_finite()) {
            return Err(Error::invalid_input("camera parameters must be finite"));
        }
        if self.s <= 0.0 {
            return Err(Error::invalid_input(format!(
                "camera scale must be positive, got {}",
                self.s
            )));
        }
        Ok(())
    }
}

/// Unit quaternion `(w, x, y, z)`, hemisphere-aligned to `w ≥ 0` on
/// construction from axis-angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl UnitQuaternion {
    pub const IDENTITY: UnitQuaternion = UnitQuaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Normalizes the given components to a unit quaternion.
    pub fn from_wxyz(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !n.is_finite() || n < 1e-12 {
            return Err(Error::invalid_input("quaternion norm too small"));
        }
        Ok(UnitQuaternion {
            w: w / n,
            x: x / n,
            y: y / n,
            z: z / n,
        })
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn dot(&self, other: &UnitQuaternion) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn negated(&self) -> UnitQuaternion {
        UnitQuaternion {
            w: -self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Flips the sign so that `w ≥ 0` (canonical double-cover representative).
    pub fn hemisphere_aligned(&self) -> UnitQuaternion {
        if self.w < 0.0 {
            self.negated()
        } else {
            *self
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    /// Hamilton product `self · other`.
    pub fn mul(&self, o: &UnitQuaternion) -> UnitQuaternion {
        UnitQuaternion {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }

    pub fn rotate_vec(&self, v: [f64; 3]) -> [f64; 3] {
        // v + 2w(q×v) + 2q×(q×v) with q = (x, y, z)
        let q = [self.x, self.y, self.z];
        let c1 = cross(q, v);
        let c2 = cross(q, c1);
        [
            v[0] + 2.0 * (self.w * c1[0] + c2[0]),
            v[1] + 2.0 * (self.w * c1[1] + c2[1]),
            v[2] + 2.0 * (self.w * c1[2] + c2[2]),
        ]
    }

    /// Axis-angle vector of this rotation (|r| ≤ π after alignment).
    pub fn to_axis_angle(&self) -> [f64; 3] {
        let q = self.hemisphere_aligned();
        let vn = (q.x * q.x + q.y * q.y + q.z * q.z).sqrt();
        if vn < 1e-12 {
            return [0.0, 0.0, 0.0];
        }
        let theta = 2.0 * vn.atan2(q.w);
        let k = theta / vn;
        [q.x * k, q.y * k, q.z * k]
    }
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Rodrigues coefficients `(a, b)` with `R = I + a·[r]× + b·[r]×²`,
/// where `a = sinθ/θ` and `b = (1−cosθ)/θ²`, as functions of `u = θ²`.
pub(crate) fn rodrigues_coeffs(u: f64) -> (f64, f64) {
    if u < 1e-6 {
        let a = 1.0 - u / 6.0 + u * u / 120.0;
        let b = 0.5 - u / 24.0 + u * u / 720.0;
        (a, b)
    } else {
        let theta = u.sqrt();
        ((theta.sin() / theta), ((1.0 - theta.cos()) / u))
    }
}

/// Derivative coefficients `(a'(θ)/θ, b'(θ)/θ)` as even functions of `u = θ²`.
pub(crate) fn rodrigues_deriv_coeffs(u: f64) -> (f64, f64) {
    if u < 1e-6 {
        let c1 = -1.0 / 3.0 + u / 30.0 - u * u / 840.0;
        let c2 = -1.0 / 12.0 + u / 180.0 - u * u / 6720.0;
        (c1, c2)
    } else {
        let theta = u.sqrt();
        let (s, c) = theta.sin_cos();
        let c1 = (theta * c - s) / (u * theta);
        let c2 = (theta * s - 2.0 * (1.0 - c)) / (u * u);
        (c1, c2)
    }
}

/// Half-angle quaternion kernels as functions of `u = θ²`:
/// returns `(w, h, dh/du)` with `w = cos(θ/2)` and `h = sin(θ/2)/(θ/2)`.
/// Note `dw/du = −h/8` exactly.
pub(crate) fn quat_half_kernels(u: f64) -> (f64, f64, f64) {
    let theta = u.sqrt();
    let w = (theta / 2.0).cos();
    if u < 1e-8 {
        let h = 1.0 - u / 24.0 + u * u / 1920.0;
        let dh = -1.0 / 24.0 + u / 960.0;
        (w, h, dh)
    } else {
        let h = 2.0 * (theta / 2.0).sin() / theta;
        let dh = (theta * (theta / 2.0).cos() - 2.0 * (theta / 2.0).sin()) / (2.0 * theta.powi(3));
        (w, h, dh)
    }
}

/// 3×3 rotation matrix of the axis-angle vector `r` (Rodrigues).
pub fn rotation_matrix(r: [f64; 3]) -> [[f64; 3]; 3] {
    let u = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
    let (a, b) = rodrigues_coeffs(u);
    let [x, y, z] = r;
    // I + a·A + b·A² with A = [r]×
    [
        [
            1.0 + b * (-z * z - y * y),
            -a * z + b * x * y,
            a * y + b * x * z,
        ],
        [
            a * z + b * x * y,
            1.0 + b * (-z * z - x * x),
            -a * x + b * y * z,
        ],
        [
            -a * y + b * x * z,
            a * x + b * y * z,
            1.0 + b * (-y * y - x * x),
        ],
    ]
}

/// Partial derivatives `∂R/∂r_i` for i = 0, 1, 2.
pub(crate) fn rotation_matrix_jacobian(r: [f64; 3]) -> [[[f64; 3]; 3]; 3] {
    let u = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
    let (a, b) = rodrigues_coeffs(u);
    let (c1, c2) = rodrigues_deriv_coeffs(u);
    let aa = skew(r);
    let aa2 = mat_mul3(&aa, &aa);
    let mut out = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        let mut e = [0.0; 3];
        e[i] = 1.0;
        let ei = skew(e);
        let eia = mat_mul3(&ei, &aa);
        let aei = mat_mul3(&aa, &ei);
        for p in 0..3 {
            for q in 0..3 {
                out[i][p][q] = c1 * r[i] * aa[p][q]
                    + a * ei[p][q]
                    + c2 * r[i] * aa2[p][q]
                    + b * (eia[p][q] + aei[p][q]);
            }
        }
    }
    out
}

pub(crate) fn skew(v: [f64; 3]) -> [[f64; 3]; 3] {
    [
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ]
}

pub(crate) fn mat_mul3(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

pub(crate) fn mat_transpose3(a: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}

/// Applies `R(r)` to every row of an `(N, 3)` array.
pub fn rotate_points(points: &Array2<f64>, r: [f64; 3]) -> Array2<f64> {
    apply_matrix3(points, &rotation_matrix(r))
}

/// Applies `R(r)⁻¹ = R(r)ᵀ` to every row of an `(N, 3)` array.
pub fn rotate_points_inverse(points: &Array2<f64>, r: [f64; 3]) -> Array2<f64> {
    apply_matrix3(points, &mat_transpose3(&rotation_matrix(r)))
}

pub(crate) fn apply_matrix3(points: &Array2<f64>, m: &[[f64; 3]; 3]) -> Array2<f64> {
    let mut out = Array2::zeros(points.raw_dim());
    for (row, mut orow) in points.rows().into_iter().zip(out.rows_mut()) {
        let v = [row[0], row[1], row[2]];
        for p in 0..3 {
            orow[p] = m[p][0] * v[0] + m[p][1] * v[1] + m[p][2] * v[2];
        }
    }
    out
}

/// Converts an axis-angle vector to its unit quaternion, hemisphere-aligned
/// so that `w ≥ 0`. `r = 0` maps to the identity.
pub fn axis_angle_to_quat(r: [f64; 3]) -> UnitQuaternion {
    let u = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
    let (w, h, _) = quat_half_kernels(u);
    let q = UnitQuaternion {
        w,
        x: h / 2.0 * r[0],
        y: h / 2.0 * r[1],
        z: h / 2.0 * r[2],
    };
    q.hemisphere_aligned()
}

/// Weak-perspective projection of `(N, 3)` points to `(N, 2)` pixels.
pub fn project(points: &Array2<f64>, cam: &CameraParams) -> Result<Array2<f64>> {
    cam.validate()?;
    if points.ncols() != 3 {
        return Err(Error::invalid_input("points must be (N, 3)"));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid_input("non-finite point coordinates"));
    }
    let mut out = Array2::zeros((points.nrows(), 2));
    for (row, mut orow) in points.rows().into_iter().zip(out.rows_mut()) {
        orow[0] = cam.s * row[0] + cam.tx;
        orow[1] = cam.s * row[1] + cam.ty;
    }
    Ok(out)
}

/// Area-weighted vertex normals from a triangle list. Vertices with a zero
/// accumulated normal get `+z`.
pub fn vertex_normals(vertices: &Array2<f64>, faces: &[[usize; 3]]) -> Result<Array2<f64>> {
    if faces.is_empty() {
        return Err(Error::invalid_input("empty topology"));
    }
    let n = vertices.nrows();
    for f in faces {
        if f.iter().any(|&i| i >= n) {
            return Err(Error::invalid_input("face index out of range"));
        }
    }
    let mut acc = Array2::<f64>::zeros((n, 3));
    for f in faces {
        let a = [vertices[[f[0], 0]], vertices[[f[0], 1]], vertices[[f[0], 2]]];
        let b = [vertices[[f[1], 0]], vertices[[f[1], 1]], vertices[[f[1], 2]]];
        let c = [vertices[[f[2], 0]], vertices[[f[2], 1]], vertices[[f[2], 2]]];
        let ab = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let ac = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
        // cross magnitude = 2·area, so summing raw cross products is the
        // area weighting.
        let fnrm = cross(ab, ac);
        for &vi in f {
            for p in 0..3 {
                acc[[vi, p]] += fnrm[p];
            }
        }
    }
    for mut row in acc.rows_mut() {
        let norm = (row[0] * row[0] + row[1] * row[1] + row[2] * row[2]).sqrt();
        if norm < 1e-12 {
            row[0] = 0.0;
            row[1] = 0.0;
            row[2] = 1.0;
        } else {
            row[0] /= norm;
            row[1] /= norm;
            row[2] /= norm;
        }
    }
    Ok(acc)
}

/// Back-face cosine visibility: `max(dot(normal, −view_dir), 0)` floored at
/// `eps_vis`. The camera looks along `view_dir` (typically `(0, 0, −1)`).
pub fn visibility_weights(
    normals: &Array2<f64>,
    view_dir: [f64; 3],
    eps_vis: f64,
) -> Result<Array1<f64>> {
    if !(eps_vis > 0.0 && eps_vis < 1.0) {
        return Err(Error::invalid_config(format!(
            "eps_vis must lie in (0, 1), got {eps_vis}"
        )));
    }
    let towards = [-view_dir[0], -view_dir[1], -view_dir[2]];
    let mut out = Array1::zeros(normals.nrows());
    for (row, w) in normals.rows().into_iter().zip(out.iter_mut()) {
        let d = row[0] * towards[0] + row[1] * towards[1] + row[2] * towards[2];
        *w = d.max(0.0).max(eps_vis).min(1.0);
    }
    Ok(out)
}
