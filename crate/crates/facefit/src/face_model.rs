//! Linear parametric face model: synthetic assets, differentiable skinning,
//! canonicalization, and the `assets.json` schema.
//!
//! The model is deliberately small: one head rotation about the origin plus
//! linear shape/expression/pose blendshapes over a half-ellipsoid template.
//! Vertices are `R(r) · (T + S·β + E·ψ + P·θ)` and 3D landmarks are a fixed
//! convex combination of vertices.

use ndarray::{Array1, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rotate_points, rotate_points_inverse};

pub const ASSETS_SCHEMA_VERSION: u32 = 1;

/// Model dimensions. `k_*` are blendshape counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub n_vertices: usize,
    pub n_landmarks: usize,
    pub k_shape: usize,
    pub k_expr: usize,
    pub k_pose: usize,
}

impl ModelDims {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("n_vertices", self.n_vertices),
            ("n_landmarks", self.n_landmarks),
            ("k_shape", self.k_shape),
            ("k_expr", self.k_expr),
            ("k_pose", self.k_pose),
        ];
        for (name, v) in fields {
            if v == 0 {
                return Err(Error::invalid_config(format!("{name} must be >= 1")));
            }
        }
        if self.n_vertices > 1_000_000 || self.k_shape > 4096 || self.k_expr > 4096 || self.k_pose > 4096
        {
            return Err(Error::invalid_config("model dimensions too large"));
        }
        if self.n_landmarks > self.n_vertices {
            return Err(Error::invalid_config(
                "n_landmarks must not exceed n_vertices",
            ));
        }
        Ok(())
    }

    /// Encoder output width: r(3) + θ + β + ψ + camera(3).
    pub fn param_dim(&self) -> usize {
        3 + self.k_pose + self.k_shape + self.k_expr + 3
    }
}

/// One landmark as a convex combination of vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkRow {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
}

impl LandmarkRow {
    pub fn one_hot(index: usize) -> Self {
        LandmarkRow {
            indices: vec![index],
            weights: vec![1.0],
        }
    }
}

/// Fixed assets of the face model.
///
/// Basis matrices are stored flattened as `(n_vertices · 3, k)` with row
/// index `vertex·3 + coord`; this is the row-major layout of the conceptual
/// `(n_vertices, 3, k)` tensor and the layout used in `assets.json`.
#[derive(Debug, Clone)]
pub struct FaceModelAssets {
    pub dims: ModelDims,
    pub seed: u64,
    pub template: Array2<f64>,
    pub shape_basis: Array2<f64>,
    pub expr_basis: Array2<f64>,
    pub pose_basis: Array2<f64>,
    pub landmark_embedding: Vec<LandmarkRow>,
    pub eye_pair: (usize, usize),
    pub faces: Vec<[usize; 3]>,
}

/// Per-frame-per-view optimization variables of the face model.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceParams {
    /// Axis-angle head orientation, radians.
    pub r: [f64; 3],
    pub theta: Array1<f64>,
    pub beta: Array1<f64>,
    pub psi: Array1<f64>,
}

impl FaceParams {
    pub fn zeros(dims: &ModelDims) -> Self {
        FaceParams {
            r: [0.0; 3],
            theta: Array1::zeros(dims.k_pose),
            beta: Array1::zeros(dims.k_shape),
            psi: Array1::zeros(dims.k_expr),
        }
    }

    pub fn validate(&self, dims: &ModelDims) -> Result<()> {
        if self.theta.len() != dims.k_pose
            || self.beta.len() != dims.k_shape
            || self.psi.len() != dims.k_expr
        {
            return Err(Error::invalid_input("face parameter dimension mismatch"));
        }
        let finite = self.r.iter().all(|v| v.is_finite())
            && self.theta.iter().all(|v| v.is_finite())
            && self.beta.iter().all(|v| v.is_finite())
            && self.psi.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid_input("non-finite face parameters"));
        }
        let rn = (self.r[0] * self.r[0] + self.r[1] * self.r[1] + self.r[2] * self.r[2]).sqrt();
        if rn >= 2.0 * std::f64::consts::PI {
            return Err(Error::invalid_input(format!(
                "head rotation magnitude {rn} exceeds 2π"
            )));
        }
        Ok(())
    }

    /// Flat layout `[r | θ | β | ψ]`, matching the encoder output slices.
    pub fn to_flat(&self) -> Array1<f64> {
        let mut out = Vec::with_capacity(3 + self.theta.len() + self.beta.len() + self.psi.len());
        out.extend_from_slice(&self.r);
        out.extend(self.theta.iter());
        out.extend(self.beta.iter());
        out.extend(self.psi.iter());
        Array1::from(out)
    }

    pub fn from_flat(dims: &ModelDims, flat: &[f64]) -> Result<Self> {
        if flat.len() != 3 + dims.k_pose + dims.k_shape + dims.k_expr {
            return Err(Error::invalid_input("flat parameter length mismatch"));
        }
        let mut off = 3;
        let r = [flat[0], flat[1], flat[2]];
        let theta = Array1::from(flat[off..off + dims.k_pose].to_vec());
        off += dims.k_pose;
        let beta = Array1::from(flat[off..off + dims.k_shape].to_vec());
        off += dims.k_shape;
        let psi = Array1::from(flat[off..off + dims.k_expr].to_vec());
        Ok(FaceParams { r, theta, beta, psi })
    }
}

/// Posed vertices and 3D landmarks for one frame-view.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshBundle {
    pub vertices: Array2<f64>,
    pub landmarks3d: Array2<f64>,
}

impl FaceModelAssets {
    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        let n = self.dims.n_vertices;
        if self.template.shape() != [n, 3] {
            return Err(Error::invalid_input("template shape mismatch"));
        }
        for (name, arr, k) in [
            ("shape_basis", &self.shape_basis, self.dims.k_shape),
            ("expr_basis", &self.expr_basis, self.dims.k_expr),
            ("pose_basis", &self.pose_basis, self.dims.k_pose),
        ] {
            if arr.shape() != [n * 3, k] {
                return Err(Error::invalid_input(format!("{name} shape mismatch")));
            }
            if arr.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid_input(format!("{name} has non-finite entries")));
            }
        }
        if self.template.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid_input("template has non-finite entries"));
        }
        if self.landmark_embedding.len() != self.dims.n_landmarks {
            return Err(Error::invalid_input("landmark embedding row count mismatch"));
        }
        for row in &self.landmark_embedding {
            if row.indices.is_empty() || row.indices.len() != row.weights.len() {
                return Err(Error::invalid_input("malformed landmark embedding row"));
            }
            if row.indices.iter().any(|&i| i >= n) {
                return Err(Error::invalid_input("landmark embedding index out of range"));
            }
            let sum: f64 = row.weights.iter().sum();
            if row.weights.iter().any(|&w| !w.is_finite() || w < 0.0) || (sum - 1.0).abs() > 1e-12
            {
                return Err(Error::invalid_input(
                    "landmark embedding weights must be convex (non-negative, sum 1)",
                ));
            }
        }
        let (e0, e1) = self.eye_pair;
        if e0 == e1 || e0 >= self.dims.n_landmarks || e1 >= self.dims.n_landmarks {
            return Err(Error::invalid_input("invalid eye pair"));
        }
        for f in &self.faces {
            if f.iter().any(|&i| i >= n) {
                return Err(Error::invalid_input("face index out of range"));
            }
        }
        Ok(())
    }

    /// Dense `(n_landmarks, n_vertices)` embedding matrix.
    pub fn embedding_matrix(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.dims.n_landmarks, self.dims.n_vertices));
        for (j, row) in self.landmark_embedding.iter().enumerate() {
            for (&i, &w) in row.indices.iter().zip(&row.weights) {
                m[[j, i]] += w;
            }
        }
        m
    }

    /// Applies the landmark embedding to vertex positions.
    pub fn embed_landmarks(&self, vertices: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.dims.n_landmarks, 3));
        for (j, row) in self.landmark_embedding.iter().enumerate() {
            for (&i, &w) in row.indices.iter().zip(&row.weights) {
                for p in 0..3 {
                    out[[j, p]] += w * vertices[[i, p]];
                }
            }
        }
        out
    }
}

/// Builds deterministic synthetic model assets from a seed.
///
/// The template is a half-ellipsoid point grid facing +z, blendshape columns
/// are smooth random fields normalized to unit Frobenius norm, and landmarks
/// are one-hot rows over farthest-point-sampled vertices.
pub fn build_synthetic_assets(seed: u64, dims: ModelDims) -> Result<FaceModelAssets> {
    dims.validate()?;
    let n = dims.n_vertices;

    // grid over the +z hemisphere of an ellipsoid
    let nv = (n as f64).sqrt().ceil() as usize;
    let nu = n.div_ceil(nv);
    let (ax, ay, az) = (1.0, 1.3, 0.8);
    let mut template = Array2::zeros((n, 3));
    let ang = |i: usize, total: usize| {
        if total <= 1 {
            0.0
        } else {
            // interior angles only: the rim of the hemisphere stays off ±π/2
            let t = (i as f64 + 0.5) / total as f64;
            (t - 0.5) * 0.9 * std::f64::consts::PI
        }
    };
    for idx in 0..n {
        let i = idx / nv;
        let j = idx % nv;
        let alpha = ang(i, nu);
        let betaa = ang(j, nv);
        template[[idx, 0]] = ax * alpha.cos() * betaa.sin();
        template[[idx, 1]] = ay * alpha.sin();
        template[[idx, 2]] = az * alpha.cos() * betaa.cos();
    }

    // grid triangulation, dropping cells that reference missing vertices
    let mut faces = Vec::new();
    if nu >= 2 && nv >= 2 {
        for i in 0..nu - 1 {
            for j in 0..nv - 1 {
                let a = i * nv + j;
                let (b, c, d) = (a + 1, a + nv, a + nv + 1);
                if d < n {
                    faces.push([a, b, c]);
                    faces.push([b, d, c]);
                }
            }
        }
    }
    if faces.is_empty() && n >= 3 {
        faces.push([0, 1, 2]);
    } else if faces.is_empty() {
        // degenerate tiny model: a single (possibly repeated-vertex) face
        faces.push([0, n.min(2) - 1, 0]);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4653_4554_5f41_5353);
    let mut smooth_basis = |k: usize| -> Array2<f64> {
        let mut basis = Array2::zeros((n * 3, k));
        for col in 0..k {
            for coord in 0..3 {
                // few random low-frequency harmonics of the template position
                let mut harmonics = Vec::new();
                for _ in 0..3 {
                    let dir = [
                        rng.random::<f64>() - 0.5,
                        rng.random::<f64>() - 0.5,
                        rng.random::<f64>() - 0.5,
                    ];
                    let freq = 0.5 + 2.5 * rng.random::<f64>();
                    let phase = rng.random::<f64>() * std::f64::consts::TAU;
                    let amp = rng.random::<f64>() - 0.5;
                    harmonics.push((dir, freq, phase, amp));
                }
                for v in 0..n {
                    let p = [template[[v, 0]], template[[v, 1]], template[[v, 2]]];
                    let mut val = 0.0;
                    for (dir, freq, phase, amp) in &harmonics {
                        let proj = dir[0] * p[0] + dir[1] * p[1] + dir[2] * p[2];
                        val += amp * (freq * proj + phase).sin();
                    }
                    basis[[v * 3 + coord, col]] = val;
                }
            }
            let norm: f64 = basis.column(col).iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                for v in basis.column_mut(col).iter_mut() {
                    *v /= norm;
                }
            } else {
                basis[[0, col]] = 1.0;
            }
        }
        basis
    };
    let shape_basis = smooth_basis(dims.k_shape);
    let expr_basis = smooth_basis(dims.k_expr);
    let pose_basis = smooth_basis(dims.k_pose);

    // farthest-point sampling for well-spread landmark vertices; the first
    // pick is the most frontal vertex, the second is the farthest from it,
    // so (0, 1) is a well-separated normalization pair.
    let mut chosen: Vec<usize> = Vec::with_capacity(dims.n_landmarks);
    let first = (0..n)
        .max_by(|&a, &b| template[[a, 2]].partial_cmp(&template[[b, 2]]).unwrap())
        .unwrap();
    chosen.push(first);
    let mut min_d2 = vec![f64::INFINITY; n];
    while chosen.len() < dims.n_landmarks {
        let last = *chosen.last().unwrap();
        for v in 0..n {
            let d2: f64 = (0..3)
                .map(|p| (template[[v, p]] - template[[last, p]]).powi(2))
                .sum();
            if d2 < min_d2[v] {
                min_d2[v] = d2;
            }
        }
        let next = (0..n)
            .max_by(|&a, &b| min_d2[a].partial_cmp(&min_d2[b]).unwrap())
            .unwrap();
        chosen.push(next);
    }
    let landmark_embedding = chosen.iter().map(|&i| LandmarkRow::one_hot(i)).collect();
    let eye_pair = if dims.n_landmarks >= 2 { (0, 1) } else { (0, 0) };
    if dims.n_landmarks < 2 {
        return Err(Error::invalid_config(
            "n_landmarks must be >= 2 for a valid eye pair",
        ));
    }

    let assets = FaceModelAssets {
        dims,
        seed,
        template,
        shape_basis,
        expr_basis,
        pose_basis,
        landmark_embedding,
        eye_pair,
        faces,
    };
    assets.validate()?;
    Ok(assets)
}

/// Blendshape sum `T + S·β + E·ψ + P·θ` as a flat `(n·3)` vector, i.e. the
/// mesh before head rotation (the canonical-frame mesh).
pub fn blend_flat(assets: &FaceModelAssets, params: &FaceParams) -> Array1<f64> {
    let n3 = assets.dims.n_vertices * 3;
    let mut out = Array1::zeros(n3);
    for (o, t) in out.iter_mut().zip(assets.template.iter()) {
        *o = *t;
    }
    out += &assets.shape_basis.dot(&params.beta);
    out += &assets.expr_basis.dot(&params.psi);
    out += &assets.pose_basis.dot(&params.theta);
    out
}

/// Differentiable skinning: vertices `R(r)·(T + S·β + E·ψ + P·θ)` and
/// embedded 3D landmarks. See [`crate::diff::ops`] for the tape version.
pub fn skin(assets: &FaceModelAssets, params: &FaceParams) -> Result<MeshBundle> {
    params.validate(&assets.dims)?;
    let flat = blend_flat(assets, params);
    let blend = flat
        .into_shape_with_order((assets.dims.n_vertices, 3))
        .expect("n·3 reshape");
    let vertices = rotate_points(&blend, params.r);
    let landmarks3d = assets.embed_landmarks(&vertices);
    Ok(MeshBundle {
        vertices,
        landmarks3d,
    })
}

/// Removes a head rotation: applies `R(r)⁻¹` to vertices and landmarks.
pub fn canonicalize(mesh: &MeshBundle, r: [f64; 3]) -> MeshBundle {
    MeshBundle {
        vertices: rotate_points_inverse(&mesh.vertices, r),
        landmarks3d: rotate_points_inverse(&mesh.landmarks3d, r),
    }
}

// ---------------------------------------------------------------------------
// assets.json
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct AssetsFile {
    schema_version: u32,
    seed: u64,
    dims: ModelDims,
    /// Row-major (vertex, coord).
    template: Vec<f64>,
    /// Row-major (vertex, coord, k).
    shape_basis: Vec<f64>,
    expr_basis: Vec<f64>,
    pose_basis: Vec<f64>,
    landmark_embedding: Vec<LandmarkRow>,
    eye_pair: (usize, usize),
    faces: Vec<[usize; 3]>,
}

pub fn assets_to_json(assets: &FaceModelAssets) -> String {
    let file = AssetsFile {
        schema_version: ASSETS_SCHEMA_VERSION,
        seed: assets.seed,
        dims: assets.dims,
        template: assets.template.iter().copied().collect(),
        shape_basis: assets.shape_basis.iter().copied().collect(),
        expr_basis: assets.expr_basis.iter().copied().collect(),
        pose_basis: assets.pose_basis.iter().copied().collect(),
        landmark_embedding: assets.landmark_embedding.clone(),
        eye_pair: assets.eye_pair,
        faces: assets.faces.clone(),
    };
    serde_json::to_string_pretty(&file).expect("assets serialize")
}

pub fn assets_from_json(json: &str) -> Result<FaceModelAssets> {
    let file: AssetsFile = serde_json::from_str(json)?;
    if file.schema_version != ASSETS_SCHEMA_VERSION {
        return Err(Error::invalid_input(format!(
            "unsupported assets schema version {}",
            file.schema_version
        )));
    }
    file.dims.validate()?;
    let n = file.dims.n_vertices;
    let make2 = |data: Vec<f64>, rows: usize, cols: usize, name: &str| -> Result<Array2<f64>> {
        if data.len() != rows * cols {
            return Err(Error::invalid_input(format!(
                "{name}: expected {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Array2::from_shape_vec((rows, cols), data)
            .map_err(|e| Error::invalid_input(format!("{name}: {e}")))
    };
    let assets = FaceModelAssets {
        dims: file.dims,
        seed: file.seed,
        template: make2(file.template, n, 3, "template")?,
        shape_basis: make2(file.shape_basis, n * 3, file.dims.k_shape, "shape_basis")?,
        expr_basis: make2(file.expr_basis, n * 3, file.dims.k_expr, "expr_basis")?,
        pose_basis: make2(file.pose_basis, n * 3, file.dims.k_pose, "pose_basis")?,
        landmark_embedding: file.landmark_embedding,
        eye_pair: file.eye_pair,
        faces: file.faces,
    };
    assets.validate()?;
    Ok(assets)
}

pub fn save_assets(assets: &FaceModelAssets, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, assets_to_json(assets))?;
    Ok(())
}

pub fn load_assets(path: &std::path::Path) -> Result<FaceModelAssets> {
    let text = std::fs::read_to_string(path)?;
    assets_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rotation_matrix;

    fn small_dims() -> ModelDims {
        ModelDims {
            n_vertices: 64,
            n_landmarks: 8,
            k_shape: 4,
            k_expr: 4,
            k_pose: 2,
        }
    }

    fn random_params(rng: &mut ChaCha8Rng, dims: &ModelDims, r_scale: f64) -> FaceParams {
        FaceParams {
            r: [
                (rng.random::<f64>() - 0.5) * 2.0 * r_scale,
                (rng.random::<f64>() - 0.5) * 2.0 * r_scale,
                (rng.random::<f64>() - 0.5) * 2.0 * r_scale,
            ],
            theta: Array1::from_shape_fn(dims.k_pose, |_| rng.random::<f64>() - 0.5),
            beta: Array1::from_shape_fn(dims.k_shape, |_| rng.random::<f64>() - 0.5),
            psi: Array1::from_shape_fn(dims.k_expr, |_| rng.random::<f64>() - 0.5),
        }
    }

    #[test]
    fn assets_deterministic_in_seed() {
        let a = build_synthetic_assets(0, small_dims()).unwrap();
        let b = build_synthetic_assets(0, small_dims()).unwrap();
        assert_eq!(a.template, b.template);
        assert_eq!(a.shape_basis, b.shape_basis);
        assert_eq!(a.expr_basis, b.expr_basis);
        assert_eq!(a.pose_basis, b.pose_basis);
        assert_eq!(a.landmark_embedding, b.landmark_embedding);
        let c = build_synthetic_assets(1, small_dims()).unwrap();
        assert_ne!(a.shape_basis, c.shape_basis);
    }

    #[test]
    fn basis_columns_unit_frobenius() {
        for seed in [0, 3, 9] {
            let a = build_synthetic_assets(seed, small_dims()).unwrap();
            for basis in [&a.shape_basis, &a.expr_basis, &a.pose_basis] {
                for col in basis.columns() {
                    let n: f64 = col.iter().map(|v| v * v).sum::<f64>().sqrt();
                    assert!((n - 1.0).abs() < 1e-9, "column norm {n}");
                }
            }
        }
    }

    #[test]
    fn landmark_rows_sum_to_one() {
        let a = build_synthetic_assets(7, small_dims()).unwrap();
        for row in &a.landmark_embedding {
            let s: f64 = row.weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_dims_rejected() {
        let mut d = small_dims();
        d.k_shape = 0;
        assert!(matches!(
            build_synthetic_assets(0, d),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn template_faces_plus_z() {
        let a = build_synthetic_assets(0, small_dims()).unwrap();
        for v in 0..a.dims.n_vertices {
            assert!(a.template[[v, 2]] > 0.0, "vertex {v} not on +z hemisphere");
        }
        // outward normals should mostly face +z for a frontal grid
        let normals = crate::geometry::vertex_normals(&a.template, &a.faces).unwrap();
        let frontal = normals.rows().into_iter().filter(|r| r[2] > 0.0).count();
        assert!(frontal * 10 >= a.dims.n_vertices * 9);
    }

    #[test]
    fn skin_zero_params_is_template() {
        let a = build_synthetic_assets(0, small_dims()).unwrap();
        let mesh = skin(&a, &FaceParams::zeros(&a.dims)).unwrap();
        assert_eq!(mesh.vertices, a.template);
        assert_eq!(mesh.landmarks3d, a.embed_landmarks(&a.template));
    }

    #[test]
    fn skin_unit_beta_adds_basis_column() {
        let a = build_synthetic_assets(0, small_dims()).unwrap();
        let mut params = FaceParams::zeros(&a.dims);
        params.beta[2] = 1.0;
        let mesh = skin(&a, &params).unwrap();
        for v in 0..a.dims.n_vertices {
            for p in 0..3 {
                let expect = a.template[[v, p]] + a.shape_basis[[v * 3 + p, 2]];
                assert!((mesh.vertices[[v, p]] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn skin_matches_dense_oracle() {
        let a = build_synthetic_assets(4, small_dims()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let params = random_params(&mut rng, &a.dims, 1.2);
            let mesh = skin(&a, &params).unwrap();
            // dense oracle: explicit loops + rotation matrix
            let rm = rotation_matrix(params.r);
            for v in 0..a.dims.n_vertices {
                let mut blend = [0.0; 3];
                for p in 0..3 {
                    blend[p] = a.template[[v, p]];
                    for k in 0..a.dims.k_shape {
                        blend[p] += a.shape_basis[[v * 3 + p, k]] * params.beta[k];
                    }
                    for k in 0..a.dims.k_expr {
                        blend[p] += a.expr_basis[[v * 3 + p, k]] * params.psi[k];
                    }
                    for k in 0..a.dims.k_pose {
                        blend[p] += a.pose_basis[[v * 3 + p, k]] * params.theta[k];
                    }
                }
                for p in 0..3 {
                    let expect =
                        rm[p][0] * blend[0] + rm[p][1] * blend[1] + rm[p][2] * blend[2];
                    assert!(
                        (mesh.vertices[[v, p]] - expect).abs() < 1e-10,
                        "vertex {v} coord {p}"
                    );
                }
            }
            // landmark oracle
            for (j, row) in a.landmark_embedding.iter().enumerate() {
                for p in 0..3 {
                    let expect: f64 = row
                        .indices
                        .iter()
                        .zip(&row.weights)
                        .map(|(&i, &w)| w * mesh.vertices[[i, p]])
                        .sum();
                    assert!((mesh.landmarks3d[[j, p]] - expect).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn skin_dimension_mismatch_rejected() {
        let a = build_synthetic_assets(0, small_dims()).unwrap();
        let mut params = FaceParams::zeros(&a.dims);
        params.beta = Array1::zeros(a.dims.k_shape + 1);
        assert!(matches!(skin(&a, &params), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn skin_superposition_in_linear_coeffs() {
        let a = build_synthetic_assets(2, small_dims()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let r = [0.3, -0.2, 0.1];
        let mut p1 = random_params(&mut rng, &a.dims, 0.0);
        let mut p2 = random_params(&mut rng, &a.dims, 0.0);
        p1.r = r;
        p2.r = r;
        let (ca, cb) = (0.7, -1.3);
        let combo = FaceParams {
            r,
            theta: ca * &p1.theta + cb * &p2.theta,
            beta: ca * &p1.beta + cb * &p2.beta,
            psi: ca * &p1.psi + cb * &p2.psi,
        };
        let m1 = skin(&a, &p1).unwrap();
        let m2 = skin(&a, &p2).unwrap();
        let mc = skin(&a, &combo).unwrap();
        let m0 = skin(
            &a,
            &FaceParams {
                r,
                ..FaceParams::zeros(&a.dims)
            },
        )
        .unwrap();
        for v in 0..a.dims.n_vertices {
            for p in 0..3 {
                let expect = ca * m1.vertices[[v, p]] + cb * m2.vertices[[v, p]]
                    + (1.0 - ca - cb) * m0.vertices[[v, p]];
                assert!((mc.vertices[[v, p]] - expect).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn canonicalize_inverts_rotation() {
        let a = build_synthetic_assets(0, small_dims()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let params = random_params(&mut rng, &a.dims, 1.0);
        let mesh = skin(&a, &params).unwrap();
        let canon = canonicalize(&mesh, params.r);
        let mut zero_r = params.clone();
        zero_r.r = [0.0; 3];
        let unrotated = skin(&a, &zero_r).unwrap();
        for (x, y) in canon.vertices.iter().zip(unrotated.vertices.iter()) {
            assert!((x - y).abs() < 1e-9);
        }
        for (x, y) in canon.landmarks3d.iter().zip(unrotated.landmarks3d.iter()) {
            assert!((x - y).abs() < 1e-9);
        }
        // identity at r = 0
        let same = canonicalize(&mesh, [0.0; 3]);
        assert_eq!(same.vertices, mesh.vertices);
        // norms preserved
        for (row_a, row_b) in mesh.vertices.rows().into_iter().zip(canon.vertices.rows()) {
            let na: f64 = row_a.iter().map(|v| v * v).sum::<f64>().sqrt();
            let nb: f64 = row_b.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((na - nb).abs() < 1e-10);
        }
    }

    #[test]
    fn assets_json_round_trip() {
        let a = build_synthetic_assets(5, small_dims()).unwrap();
        let json = assets_to_json(&a);
        let b = assets_from_json(&json).unwrap();
        assert_eq!(a.template, b.template);
        assert_eq!(a.shape_basis, b.shape_basis);
        assert_eq!(a.eye_pair, b.eye_pair);
        assert_eq!(a.faces, b.faces);
        // and the JSON is byte-stable
        assert_eq!(json, assets_to_json(&b));
    }

    #[test]
    fn assets_json_rejects_corruption() {
        let a = build_synthetic_assets(5, small_dims()).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&assets_to_json(&a)).unwrap();
        v["template"] = serde_json::json!([1.0, 2.0]);
        assert!(assets_from_json(&v.to_string()).is_err());
        assert!(assets_from_json("not json").is_err());
        assert!(assets_from_json("{}").is_err());
    }
}
