//! Mask-guided mesh part segmentation.
//!
//! A single-view movable-part mask is back-projected onto the mesh through
//! hard z-buffer visibility, yielding a seed face set `S`. All faces are
//! then split by feature distance to the mean feature of `S` (a face joins
//! the movable part when its squared distance does not exceed the largest
//! squared distance of any seed face), and the split is refined by 2-means
//! clustering seeded from the two groups' centroids.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::mesh::TriMesh;
use crate::render::rasterize;

/// One d-dimensional feature vector per face.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceFeatureSet {
    dim: usize,
    /// Face-major storage: `features[face * dim .. (face+1) * dim]`.
    features: Vec<f64>,
}

impl FaceFeatureSet {
    pub fn new(dim: usize, features: Vec<f64>) -> Result<FaceFeatureSet> {
        if dim == 0 {
            return Err(Error::InvalidArgument("feature dimension must be positive".into()));
        }
        if features.len() % dim != 0 {
            return Err(Error::Mismatch(format!(
                "feature data length {} is not a multiple of dim {dim}",
                features.len()
            )));
        }
        if !features.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite feature entry".into()));
        }
        Ok(FaceFeatureSet { dim, features })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn face_count(&self) -> usize {
        self.features.len() / self.dim
    }

    pub fn feature(&self, face: usize) -> &[f64] {
        &self.features[face * self.dim..(face + 1) * self.dim]
    }

    /// Binary format: `face_count: u32 LE`, `dim: u32 LE`, then
    /// `face_count * dim` f32 values, face-major.
    pub fn load(path: impl AsRef<Path>) -> Result<FaceFeatureSet> {
        let path = path.as_ref();
        let mut file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut header = [0u8; 8];
        file.read_exact(&mut header)
            .map_err(|e| Error::io(path, e))?;
        let face_count = u32::from_le_bytes(header[0..4].try_into().unwrap()) as usize;
        let dim = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
        let mut payload = Vec::new();
        file.read_to_end(&mut payload).map_err(|e| Error::io(path, e))?;
        let expected = face_count * dim * 4;
        if payload.len() != expected {
            return Err(Error::parse(
                path,
                None,
                format!("feature payload is {} bytes, expected {expected}", payload.len()),
            ));
        }
        let features = payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect();
        FaceFeatureSet::new(dim.max(1), features)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut bytes = Vec::with_capacity(8 + self.features.len() * 4);
        bytes.extend((self.face_count() as u32).to_le_bytes());
        bytes.extend((self.dim as u32).to_le_bytes());
        for &v in &self.features {
            bytes.extend((v as f32).to_le_bytes());
        }
        file.write_all(&bytes).map_err(|e| Error::io(path, e))
    }
}

/// Movable/base label per face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartLabel {
    Movable,
    Base,
}

impl PartLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            PartLabel::Movable => "movable",
            PartLabel::Base => "base",
        }
    }
}

/// Face labelling for a two-part split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartLabels {
    pub labels: Vec<PartLabel>,
}

impl PartLabels {
    pub fn movable_faces(&self) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == PartLabel::Movable)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn base_faces(&self) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == PartLabel::Base)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn has_both(&self) -> bool {
        let movable = self.labels.iter().any(|&l| l == PartLabel::Movable);
        let base = self.labels.iter().any(|&l| l == PartLabel::Base);
        movable && base
    }
}

/// Faces visible in the view whose visible pixels fall at least 50% inside
/// the mask (mask value > 0.5). Visibility is the rasterizer's hard
/// z-buffer. An empty result is an error: the mask selects nothing.
pub fn backproject_mask(mesh: &TriMesh, camera: &Camera, mask: &Image) -> Result<Vec<usize>> {
    if mask.channels != 1 {
        return Err(Error::InvalidImage("mask must be single-channel".into()));
    }
    if (mask.width, mask.height) != camera.resolution {
        return Err(Error::Mismatch(format!(
            "mask resolution {}x{} differs from camera {}x{}",
            mask.width, mask.height, camera.resolution.0, camera.resolution.1
        )));
    }
    if mesh.faces.is_empty() {
        return Err(Error::InvalidMesh("cannot back-project onto an empty mesh".into()));
    }

    let target = rasterize(mesh, camera, [0.0; 3]);
    let mut visible = vec![0u32; mesh.face_count()];
    let mut inside = vec![0u32; mesh.face_count()];
    for (idx, face) in target.face_id.iter().enumerate() {
        if let Some(f) = face {
            let f = *f as usize;
            visible[f] += 1;
            if mask.data[idx] > 0.5 {
                inside[f] += 1;
            }
        }
    }
    let selected: Vec<usize> = (0..mesh.face_count())
        .filter(|&f| visible[f] >= 1 && 2 * inside[f] >= visible[f])
        .collect();
    if selected.is_empty() {
        return Err(Error::EmptySelection("no visible face falls inside the mask".into()));
    }
    Ok(selected)
}

/// Arithmetic mean feature of the face set.
pub fn mean_feature(features: &FaceFeatureSet, selection: &[usize]) -> Result<Vec<f64>> {
    if selection.is_empty() {
        return Err(Error::EmptySelection("mean feature of an empty set".into()));
    }
    let mut mean = vec![0.0; features.dim()];
    for &f in selection {
        for (m, v) in mean.iter_mut().zip(features.feature(f)) {
            *m += v;
        }
    }
    let inv = 1.0 / selection.len() as f64;
    for m in &mut mean {
        *m *= inv;
    }
    Ok(mean)
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Threshold split: a face joins the movable part when its squared feature
/// distance to the seed mean does not exceed the maximum over the seed set.
/// Every seed face therefore lands on the movable side.
pub fn threshold_assign(features: &FaceFeatureSet, selection: &[usize]) -> Result<PartLabels> {
    let mean = mean_feature(features, selection)?;
    let max_dist = selection
        .iter()
        .map(|&f| dist_sq(features.feature(f), &mean))
        .fold(0.0f64, f64::max);
    let labels = (0..features.face_count())
        .map(|f| {
            if dist_sq(features.feature(f), &mean) <= max_dist {
                PartLabel::Movable
            } else {
                PartLabel::Base
            }
        })
        .collect();
    Ok(PartLabels { labels })
}

/// 2-means refinement with centroids seeded from the initial label groups.
///
/// Runs to an assignment fixpoint or `max_iters`. Exact distance ties keep
/// the current label; if a reassignment would empty a cluster, the previous
/// assignment is kept and iteration stops.
pub fn kmeans_refine(features: &FaceFeatureSet, initial: &PartLabels, max_iters: usize) -> Result<PartLabels> {
    if initial.labels.len() != features.face_count() {
        return Err(Error::Mismatch("label count differs from feature count".into()));
    }
    if !initial.has_both() {
        return Err(Error::InvalidArgument("k-means needs both labels present initially".into()));
    }

    let mut labels = initial.labels.clone();
    for _ in 0..max_iters {
        let movable: Vec<usize> = (0..labels.len()).filter(|&f| labels[f] == PartLabel::Movable).collect();
        let base: Vec<usize> = (0..labels.len()).filter(|&f| labels[f] == PartLabel::Base).collect();
        let centroid_m = mean_feature(features, &movable)?;
        let centroid_b = mean_feature(features, &base)?;

        let mut next = labels.clone();
        let mut changed = false;
        for f in 0..labels.len() {
            let dm = dist_sq(features.feature(f), &centroid_m);
            let db = dist_sq(features.feature(f), &centroid_b);
            let new_label = if dm < db {
                PartLabel::Movable
            } else if db < dm {
                PartLabel::Base
            } else {
                labels[f] // exact tie keeps the current label
            };
            if new_label != labels[f] {
                changed = true;
            }
            next[f] = new_label;
        }
        if !changed {
            break;
        }
        let part = PartLabels { labels: next.clone() };
        if !part.has_both() {
            break; // a cluster emptied: keep the previous assignment
        }
        labels = next;
    }
    Ok(PartLabels { labels })
}

/// Full segmentation output: labels plus the extracted sub-meshes.
#[derive(Debug, Clone)]
pub struct Segmentation {
    pub labels: PartLabels,
    pub seed_faces: Vec<usize>,
    pub movable_faces: Vec<usize>,
    pub base_faces: Vec<usize>,
    pub movable: TriMesh,
    pub base: TriMesh,
}

/// Mask back-projection, threshold split, and k-means refinement, ending in
/// the two extracted part meshes.
///
/// After refinement the cluster holding the majority of the seed set keeps
/// the movable label (clusters can drift during refinement). Errors if
/// either final part is empty.
pub fn segment_movable(
    mesh: &TriMesh,
    features: &FaceFeatureSet,
    camera: &Camera,
    mask: &Image,
) -> Result<Segmentation> {
    if features.face_count() != mesh.face_count() {
        return Err(Error::Mismatch(format!(
            "{} features for {} faces",
            features.face_count(),
            mesh.face_count()
        )));
    }
    let seeds = backproject_mask(mesh, camera, mask)?;
    let initial = threshold_assign(features, &seeds)?;
    let mut labels = if initial.has_both() {
        kmeans_refine(features, &initial, 100)?
    } else {
        initial
    };

    // Majority vote of the seed faces decides which cluster is movable.
    let seed_movable = seeds.iter().filter(|&&f| labels.labels[f] == PartLabel::Movable).count();
    if 2 * seed_movable < seeds.len() {
        for l in &mut labels.labels {
            *l = match *l {
                PartLabel::Movable => PartLabel::Base,
                PartLabel::Base => PartLabel::Movable,
            };
        }
    }

    if !labels.has_both() {
        return Err(Error::Segmentation(
            "segmentation produced an empty part (mask may cover the whole visible mesh)".into(),
        ));
    }
    let movable_faces = labels.movable_faces();
    let base_faces = labels.base_faces();
    let movable = mesh.submesh(&movable_faces)?;
    let base = mesh.submesh(&base_faces)?;
    Ok(Segmentation { labels, seed_faces: seeds, movable_faces, base_faces, movable, base })
}

/// Geometric stand-in for learned per-face features: 6 dimensions holding
/// the bbox-normalized centroid (scaled) and the unit face normal (zero for
/// degenerate faces).
pub fn geometric_fallback_features(mesh: &TriMesh, scale: f64) -> Result<FaceFeatureSet> {
    if mesh.faces.is_empty() {
        return Err(Error::InvalidMesh("no faces to featurize".into()));
    }
    let diag = mesh.bbox_diagonal()?;
    let inv = if diag > 0.0 { scale / diag } else { 0.0 };
    let mut data = Vec::with_capacity(mesh.face_count() * 6);
    for f in 0..mesh.face_count() {
        let c = mesh.face_centroid(f) * inv;
        let n = mesh.face_normal(f);
        data.extend_from_slice(&[c.x, c.y, c.z, n.x, n.y, n.z]);
    }
    FaceFeatureSet::new(6, data)
}

/// Mask preparation for part amodal completion: the visible region
/// `image ⊙ mask` and the inpaint region `silhouette AND NOT mask`.
///
/// `part_silhouette` is the rendered silhouette of the completed part mesh;
/// the returned inpaint mask marks where an inpainting model would fill.
pub fn prepare_amodal_inputs(image: &Image, mask: &Image, part_silhouette: &Image) -> Result<(Image, Image)> {
    if !image.same_resolution(mask) || !image.same_resolution(part_silhouette) {
        return Err(Error::Mismatch("amodal inputs must share one resolution".into()));
    }
    if mask.channels != 1 || part_silhouette.channels != 1 {
        return Err(Error::InvalidImage("mask and silhouette must be single-channel".into()));
    }
    let mut visible = image.clone();
    for y in 0..image.height {
        for x in 0..image.width {
            let m = mask.get(x, y, 0);
            for ch in 0..image.channels {
                let v = image.get(x, y, ch) * m;
                visible.set(x, y, ch, v);
            }
        }
    }
    let inpaint_data = part_silhouette
        .data
        .iter()
        .zip(mask.data.iter())
        .map(|(&s, &m)| if s > 0.5 && m <= 0.5 { 1.0 } else { 0.0 })
        .collect();
    let inpaint = Image::from_data(image.width, image.height, 1, inpaint_data)?;
    Ok((visible, inpaint))
}
