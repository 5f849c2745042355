//! Synthetic articulation scenes with known ground truth.
//!
//! Generates simple two-part objects (a body with a hinged door or a
//! sliding drawer), samples an articulation with a guaranteed minimum
//! motion magnitude, and renders the resulting frame sequence. Scene
//! bundles round-trip through a directory layout consumed by the CLI and
//! the benchmark harness.

use std::fs;
use std::path::Path;

use nalgebra::Vector3;
use rand::Rng;

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::joint::{deform_mesh, JointRecord, JointSpec, JointType};
use crate::mesh::{box_mesh, TriMesh};
use crate::render::{render_pred, DEFAULT_BETA};

/// Sampling bounds for articulation axes and magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleParams {
    /// Minimum |end angle| for revolute joints (radians).
    pub revolute_min_angle: f64,
    /// Maximum |end angle| for revolute joints (radians).
    pub revolute_max_angle: f64,
    /// Minimum |end translation| as a fraction of the movable extent along
    /// the axis.
    pub prismatic_min_fraction: f64,
    pub prismatic_max_fraction: f64,
    /// Coordinate axes (0..3) eligible as revolute edge directions.
    pub revolute_edge_axes: Vec<usize>,
    /// Coordinate axes (0..3) eligible as prismatic face normals.
    pub prismatic_axes: Vec<usize>,
}

impl Default for SampleParams {
    fn default() -> Self {
        SampleParams {
            revolute_min_angle: 30f64.to_radians(),
            revolute_max_angle: 75f64.to_radians(),
            prismatic_min_fraction: 0.25,
            prismatic_max_fraction: 0.60,
            revolute_edge_axes: vec![0, 1, 2],
            prismatic_axes: vec![0, 1, 2],
        }
    }
}

/// A fully specified synthetic scene: parts, camera, joint, and motion.
#[derive(Debug, Clone)]
pub struct GroundTruthArticulation {
    pub joint: JointSpec,
    pub thetas: Vec<f64>,
    pub base: TriMesh,
    pub movable: TriMesh,
    pub camera: Camera,
}

impl GroundTruthArticulation {
    pub fn record(&self) -> JointRecord {
        JointRecord::new(self.joint, self.thetas.clone())
    }

    /// Diagonal of the whole object's bounding box (both parts).
    pub fn object_bbox_diagonal(&self) -> Result<f64> {
        let mut all = self.base.vertices.clone();
        all.extend(self.movable.vertices.iter().cloned());
        TriMesh { vertices: all, faces: vec![], face_colors: None }.bbox_diagonal()
    }
}

fn smoothstep(s: f64) -> f64 {
    s * s * (3.0 - 2.0 * s)
}

fn mesh_centroid(mesh: &TriMesh) -> Vector3<f64> {
    let mut c = Vector3::zeros();
    for v in &mesh.vertices {
        c += v;
    }
    c / mesh.vertices.len().max(1) as f64
}

/// Samples a joint axis and motion for the given parts.
///
/// Revolute axes align with a random edge of the movable part's bounding
/// box; prismatic axes with a random bounding-box face normal. The end
/// configuration is sampled uniformly above a motion floor (at least 30
/// degrees, or 25% of the movable extent along the axis), with the sign
/// chosen so the part moves away from the base. Thetas follow a smoothstep
/// schedule from exactly zero.
pub fn sample_articulation(
    rng: &mut impl Rng,
    joint_type: JointType,
    base: &TriMesh,
    movable: &TriMesh,
    camera: &Camera,
    n: usize,
    params: &SampleParams,
) -> Result<GroundTruthArticulation> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 frames, got {n}")));
    }
    let (lo, hi) = movable.bbox()?;
    let center = (lo + hi) * 0.5;

    let (joint, magnitude) = match joint_type {
        JointType::Revolute => {
            // One of the bbox edges: direction along an eligible axis k,
            // the other two coordinates pinned to a random corner pair.
            if params.revolute_edge_axes.is_empty() {
                return Err(Error::InvalidArgument("no eligible revolute edge axes".into()));
            }
            let k = params.revolute_edge_axes[rng.gen_range(0..params.revolute_edge_axes.len())];
            let (a, b) = ((k + 1) % 3, (k + 2) % 3);
            let mut pos = center;
            pos[a] = if rng.gen_bool(0.5) { lo[a] } else { hi[a] };
            pos[b] = if rng.gen_bool(0.5) { lo[b] } else { hi[b] };
            pos[k] = lo[k];
            let mut dir = Vector3::zeros();
            dir[k] = 1.0;
            let magnitude = rng.gen_range(params.revolute_min_angle..=params.revolute_max_angle);
            (JointSpec::new(JointType::Revolute, pos, dir)?, magnitude)
        }
        JointType::Prismatic => {
            if params.prismatic_axes.is_empty() {
                return Err(Error::InvalidArgument("no eligible prismatic axes".into()));
            }
            let k = params.prismatic_axes[rng.gen_range(0..params.prismatic_axes.len())];
            let mut dir = Vector3::zeros();
            dir[k] = 1.0;
            let extent = (hi[k] - lo[k]).max(1e-9);
            let magnitude =
                rng.gen_range(params.prismatic_min_fraction..=params.prismatic_max_fraction) * extent;
            (JointSpec::new(JointType::Prismatic, center, dir)?, magnitude)
        }
    };

    // Pick the sign that moves the part away from the base.
    let base_centroid = mesh_centroid(base);
    let end_distance = |theta: f64| -> f64 {
        let (r, t) = joint.transform(theta);
        let moved = mesh_centroid(movable);
        (r * moved + t - base_centroid).norm()
    };
    let theta_end = if end_distance(magnitude) >= end_distance(-magnitude) { magnitude } else { -magnitude };

    let thetas = (0..n)
        .map(|i| {
            if i == 0 {
                0.0
            } else {
                theta_end * smoothstep(i as f64 / (n - 1) as f64)
            }
        })
        .collect();

    Ok(GroundTruthArticulation {
        joint,
        thetas,
        base: base.clone(),
        movable: movable.clone(),
        camera: camera.clone(),
    })
}

/// Renders frames for arbitrary thetas under a joint model.
pub fn render_articulation(
    base: &TriMesh,
    movable: &TriMesh,
    camera: &Camera,
    joint: &JointSpec,
    thetas: &[f64],
    background: [f64; 3],
) -> Result<Vec<Image>> {
    thetas
        .iter()
        .map(|&theta| {
            let (r, t) = joint.transform(theta);
            let deformed = deform_mesh(movable, &r, &t);
            Ok(render_pred(base, &deformed, camera, DEFAULT_BETA, background)?.image)
        })
        .collect()
}

/// Renders the ground-truth frame sequence of a scene.
pub fn render_sequence(gt: &GroundTruthArticulation, background: [f64; 3]) -> Result<Vec<Image>> {
    render_articulation(&gt.base, &gt.movable, &gt.camera, &gt.joint, &gt.thetas, background)
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
    let h = (h.rem_euclid(1.0)) * 6.0;
    let i = h.floor() as usize % 6;
    let f = h - h.floor();
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    match i {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}

fn jittered_colors(rng: &mut impl Rng, count: usize, hue: f64) -> Vec<[f64; 3]> {
    (0..count)
        .map(|_| {
            let c = hsv_to_rgb(
                hue + rng.gen_range(-0.03..0.03),
                rng.gen_range(0.45..0.70),
                rng.gen_range(0.55..0.85),
            );
            c.map(|v| v.clamp(0.05, 0.95))
        })
        .collect()
}

/// Builds a random two-part object (body plus door or drawer), places a
/// camera at a three-quarter view, and samples its articulation.
pub fn generate_scene(
    rng: &mut impl Rng,
    joint_type: JointType,
    n_frames: usize,
    resolution: usize,
) -> Result<GroundTruthArticulation> {
    let hx = rng.gen_range(0.34..0.46);
    let hy = rng.gen_range(0.40..0.55);
    let hz = rng.gen_range(0.22..0.30);
    let body = box_mesh(Vector3::new(-hx, -hy, -hz), Vector3::new(hx, hy, hz), None)?;

    let margin = 0.02;
    let movable_box = match joint_type {
        JointType::Revolute => {
            // Door: a thin panel flush on the front face.
            let thick = rng.gen_range(0.035..0.06);
            (
                Vector3::new(-hx + margin, -hy + margin, hz),
                Vector3::new(hx - margin, hy - margin, hz + thick),
            )
        }
        JointType::Prismatic => {
            // Drawer: a deep box seated in the body, its front lip nearly
            // flush with the body front so it emerges as it slides.
            let depth = rng.gen_range(0.30..0.45f64).min(2.0 * hz - 0.05);
            let lip = rng.gen_range(0.015..0.03);
            let band = rng.gen_range(0.28..0.48) * 2.0 * hy;
            let y0 = rng.gen_range(-hy + margin..hy - margin - band);
            (
                Vector3::new(-hx + margin, y0, hz + lip - depth),
                Vector3::new(hx - margin, y0 + band, hz + lip),
            )
        }
    };

    let base_hue = rng.gen_range(0.0..1.0);
    let mov_hue = base_hue + rng.gen_range(0.35..0.65);
    let mut base = body;
    base.face_colors = Some(jittered_colors(rng, base.face_count(), base_hue));
    let mut movable = box_mesh(movable_box.0, movable_box.1, None)?;
    movable.face_colors = Some(jittered_colors(rng, movable.face_count(), mov_hue));

    // Three-quarter view onto the front face.
    let azimuth: f64 = rng.gen_range(0.32..0.70) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let elevation: f64 = rng.gen_range(0.18..0.48);
    let radius: f64 = rng.gen_range(2.3..2.8);
    let eye = Vector3::new(
        radius * elevation.cos() * azimuth.sin(),
        radius * elevation.sin(),
        radius * elevation.cos() * azimuth.cos(),
    );
    let focal = resolution as f64;
    let camera = Camera::look_at(
        eye,
        Vector3::new(0.0, 0.0, 0.0),
        Vector3::y(),
        (focal, focal),
        (resolution, resolution),
    )?;

    // Realistic kinematics: doors hinge on edges lying in the door plane,
    // drawers slide along their opening normal. Axes perpendicular to the
    // contact plane produce in-plane motion that carries no depth signal.
    let params = SampleParams {
        revolute_edge_axes: vec![0, 1],
        prismatic_axes: vec![2],
        ..SampleParams::default()
    };
    sample_articulation(rng, joint_type, &base, &movable, &camera, n_frames, &params)
}

/// On-disk scene bundle.
#[derive(Debug, Clone)]
pub struct SceneBundle {
    pub base: TriMesh,
    pub movable: TriMesh,
    pub camera: Camera,
    pub record: JointRecord,
    pub frames: Vec<Image>,
}

/// Writes `base.obj`, `movable.obj`, `camera.json`, `gt.json`, and
/// `frames/frame_%03d.ppm` (1-based).
pub fn save_scene_bundle(dir: impl AsRef<Path>, gt: &GroundTruthArticulation, frames: &[Image]) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    gt.base.save(dir.join("base.obj"))?;
    gt.movable.save(dir.join("movable.obj"))?;
    gt.camera.save(dir.join("camera.json"))?;
    gt.record().save(dir.join("gt.json"))?;
    let frames_dir = dir.join("frames");
    fs::create_dir_all(&frames_dir).map_err(|e| Error::io(&frames_dir, e))?;
    for (i, frame) in frames.iter().enumerate() {
        frame.save(frames_dir.join(format!("frame_{:03}.ppm", i + 1)))?;
    }
    Ok(())
}

/// Loads a scene bundle saved by [`save_scene_bundle`].
pub fn load_scene_bundle(dir: impl AsRef<Path>) -> Result<SceneBundle> {
    let dir = dir.as_ref();
    let base = TriMesh::load(dir.join("base.obj"))?;
    let movable = TriMesh::load(dir.join("movable.obj"))?;
    let camera = Camera::load(dir.join("camera.json"))?;
    let record = JointRecord::load(dir.join("gt.json"))?;
    let frames = load_frames(dir.join("frames"))?;
    Ok(SceneBundle { base, movable, camera, record, frames })
}

/// Loads all `frame_*.ppm` files of a directory in name order.
pub fn load_frames(dir: impl AsRef<Path>) -> Result<Vec<Image>> {
    let dir = dir.as_ref();
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("frame_") && n.ends_with(".ppm"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InvalidArgument(format!("no frame_*.ppm files in {}", dir.display())));
    }
    paths.into_iter().map(Image::load).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedSplitter;
    use approx::assert_relative_eq;

    fn scene(seed: u64, joint_type: JointType) -> GroundTruthArticulation {
        let splitter = SeedSplitter::new(seed);
        generate_scene(&mut splitter.stream("scene"), joint_type, 6, 48).unwrap()
    }

    #[test]
    fn two_frame_schedule_hits_endpoints() {
        let splitter = SeedSplitter::new(1);
        let gt = {
            let s = scene(1, JointType::Revolute);
            sample_articulation(
                &mut splitter.stream("s"),
                JointType::Revolute,
                &s.base,
                &s.movable,
                &s.camera,
                2,
                &SampleParams::default(),
            )
            .unwrap()
        };
        assert_eq!(gt.thetas.len(), 2);
        assert_eq!(gt.thetas[0], 0.0);
        assert!(gt.thetas[1].abs() >= 30f64.to_radians() - 1e-12);
    }

    #[test]
    fn motion_floors_hold_over_many_draws() {
        let splitter = SeedSplitter::new(2);
        let base_scene = scene(2, JointType::Prismatic);
        let mut rng = splitter.stream("draws");
        for i in 0..500 {
            let joint_type = if i % 2 == 0 { JointType::Revolute } else { JointType::Prismatic };
            let gt = sample_articulation(
                &mut rng,
                joint_type,
                &base_scene.base,
                &base_scene.movable,
                &base_scene.camera,
                4,
                &SampleParams::default(),
            )
            .unwrap();
            let end = gt.thetas.last().unwrap().abs();
            match joint_type {
                JointType::Revolute => assert!(end >= 30f64.to_radians() - 1e-12),
                JointType::Prismatic => {
                    let (lo, hi) = base_scene.movable.bbox().unwrap();
                    let mut k = 0;
                    for c in 1..3 {
                        if gt.joint.axis_dir[c].abs() > gt.joint.axis_dir[k].abs() {
                            k = c;
                        }
                    }
                    let extent = hi[k] - lo[k];
                    assert!(end >= 0.25 * extent - 1e-12);
                }
            }
            assert_eq!(gt.thetas[0], 0.0);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = scene(7, JointType::Revolute);
        let b = scene(7, JointType::Revolute);
        assert_eq!(a.joint, b.joint);
        assert_eq!(a.thetas, b.thetas);
        assert_eq!(a.base, b.base);
        assert_eq!(a.movable, b.movable);
    }

    #[test]
    fn zero_thetas_render_identical_frames() {
        let mut gt = scene(3, JointType::Revolute);
        gt.thetas = vec![0.0; 4];
        let frames = render_sequence(&gt, [0.1, 0.1, 0.12]).unwrap();
        for f in &frames[1..] {
            assert_eq!(f.data, frames[0].data);
        }
    }

    #[test]
    fn first_frame_equals_rest_composite_bit_exactly() {
        let gt = scene(4, JointType::Prismatic);
        let frames = render_sequence(&gt, [0.1, 0.1, 0.12]).unwrap();
        let rest = render_pred(&gt.base, &gt.movable, &gt.camera, DEFAULT_BETA, [0.1, 0.1, 0.12])
            .unwrap()
            .image;
        assert_eq!(frames[0].data, rest.data);
    }

    #[test]
    fn drawer_silhouette_centroid_moves_monotonically() {
        // Track the movable part's silhouette centroid across frames; it
        // must displace monotonically along the projected axis direction.
        let gt = scene(5, JointType::Prismatic);
        let background = [0.1, 0.1, 0.12];
        let mut centroids = Vec::new();
        for &theta in &gt.thetas {
            let (r, t) = gt.joint.transform(theta);
            let deformed = deform_mesh(&gt.movable, &r, &t);
            let target = crate::render::rasterize(&deformed, &gt.camera, background);
            let (mut cx, mut cy, mut count) = (0.0, 0.0, 0.0);
            for y in 0..target.height {
                for x in 0..target.width {
                    if target.coverage[y * target.width + x] {
                        cx += x as f64;
                        cy += y as f64;
                        count += 1.0;
                    }
                }
            }
            assert!(count > 0.0, "movable part left the view");
            centroids.push((cx / count, cy / count));
        }
        // Projected axis: displacement of a probe along the axis.
        let p0 = gt.camera.project(&gt.joint.axis_pos);
        let sign = gt.thetas.last().unwrap().signum();
        let p1 = gt.camera.project(&(gt.joint.axis_pos + gt.joint.axis_dir * 0.2 * sign));
        let axis2d = (p1.x - p0.x, p1.y - p0.y);
        let mut prev = f64::NEG_INFINITY;
        for (cx, cy) in &centroids {
            let along = cx * axis2d.0 + cy * axis2d.1;
            assert!(along >= prev - 1e-9, "centroid moved backwards along the axis");
            prev = along;
        }
        let first = centroids[0].0 * axis2d.0 + centroids[0].1 * axis2d.1;
        assert!(prev > first + 1.0, "silhouette barely moved");
    }

    #[test]
    fn bundle_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let gt = scene(6, JointType::Revolute);
        let frames = render_sequence(&gt, [0.1, 0.1, 0.12]).unwrap();
        save_scene_bundle(dir.path(), &gt, &frames).unwrap();
        let bundle = load_scene_bundle(dir.path()).unwrap();
        assert_eq!(bundle.frames.len(), frames.len());
        assert_eq!(bundle.record.joint.joint_type, JointType::Revolute);
        assert_eq!(bundle.base.face_count(), gt.base.face_count());
        assert_relative_eq!(
            (bundle.record.joint.axis_dir - gt.joint.axis_dir).norm(),
            0.0,
            epsilon = 1e-9
        );
        // Frames survive the u8 quantization of PPM.
        for (a, b) in bundle.frames[0].data.iter().zip(frames[0].data.iter()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
        }
    }
}
