//! Deterministic software rasterizer and differentiable soft depth blending.
//!
//! Each part is rasterized independently into a [`RenderTarget`] holding
//! flat-shaded color and per-pixel proximity (negated axial camera
//! distance, so larger is closer). Two targets are composited per pixel by
//! a sigmoid over their proximity difference:
//!
//! ```text
//! dD = D_mov - D_base
//! w  = sigmoid(dD · beta)
//! I  = w · I_mov + (1 - w) · I_base
//! ```
//!
//! As `beta` grows the blend converges to hard z-buffering under the
//! proximity convention. Uncovered pixels carry [`EMPTY_PROXIMITY`], which
//! loses every soft comparison against covered pixels.


use crate::camera::{Camera, MIN_FORWARD_DISTANCE};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::mesh::TriMesh;

/// Proximity recorded for uncovered pixels.
pub const EMPTY_PROXIMITY: f64 = -1e6;

/// Sharpness of the soft depth blend.
pub const DEFAULT_BETA: f64 = 500.0;

/// Flat color used when a mesh has no per-face colors.
pub const DEFAULT_FACE_COLOR: [f64; 3] = [0.7, 0.7, 0.7];

/// Sigmoid arguments are clamped to this magnitude.
pub const SIGMOID_CLAMP: f64 = 60.0;

/// Numerically stable logistic function with a clamped argument.
pub fn sigmoid(x: f64) -> f64 {
    let x = x.clamp(-SIGMOID_CLAMP, SIGMOID_CLAMP);
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// One rasterized part: color, proximity, and hit records per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderTarget {
    pub width: usize,
    pub height: usize,
    pub color: Image,
    pub proximity: Vec<f64>,
    pub coverage: Vec<bool>,
    pub face_id: Vec<Option<u32>>,
    pub barycentrics: Vec<[f64; 3]>,
}

impl RenderTarget {
    fn empty(width: usize, height: usize, background: [f64; 3]) -> RenderTarget {
        let mut color = Image::new_filled(width, height, 3, 0.0);
        for p in color.data.chunks_exact_mut(3) {
            p.copy_from_slice(&background);
        }
        RenderTarget {
            width,
            height,
            color,
            proximity: vec![EMPTY_PROXIMITY; width * height],
            coverage: vec![false; width * height],
            face_id: vec![None; width * height],
            barycentrics: vec![[0.0; 3]; width * height],
        }
    }

    pub fn same_resolution(&self, other: &RenderTarget) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Proximity buffer affinely normalized to a gray image (debug export).
    pub fn proximity_image(&self) -> Image {
        let covered: Vec<f64> = self
            .proximity
            .iter()
            .zip(self.coverage.iter())
            .filter(|(_, &c)| c)
            .map(|(&p, _)| p)
            .collect();
        let (lo, hi) = covered
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| (lo.min(p), hi.max(p)));
        let span = (hi - lo).max(1e-12);
        let data = self
            .proximity
            .iter()
            .zip(self.coverage.iter())
            .map(|(&p, &c)| if c { (p - lo) / span } else { 0.0 })
            .collect();
        Image::from_data(self.width, self.height, 1, data).expect("normalized proximity in range")
    }
}

struct ScreenVertex {
    x: f64,
    y: f64,
    z: f64, // axial camera distance
}

/// Rasterizes a mesh with a hard z-buffer over pixel centers.
///
/// Winner per pixel is the largest proximity; ties keep the lower face
/// index. Faces with any vertex behind the camera are skipped. Entirely
/// deterministic: pixel-center sampling, top-left fill rule, faces visited
/// in index order.
pub fn rasterize(mesh: &TriMesh, camera: &Camera, background: [f64; 3]) -> RenderTarget {
    let (width, height) = camera.resolution;
    let mut target = RenderTarget::empty(width, height, background);

    let screen: Vec<Option<ScreenVertex>> = mesh
        .vertices
        .iter()
        .map(|v| {
            let pc = camera.to_camera(v);
            if pc.z <= MIN_FORWARD_DISTANCE {
                None
            } else {
                Some(ScreenVertex {
                    x: camera.focal.0 * pc.x / pc.z + camera.principal.0,
                    y: camera.focal.1 * pc.y / pc.z + camera.principal.1,
                    z: pc.z,
                })
            }
        })
        .collect();

    for (fi, face) in mesh.faces.iter().enumerate() {
        let (Some(a), Some(b), Some(c)) = (
            screen[face[0] as usize].as_ref(),
            screen[face[1] as usize].as_ref(),
            screen[face[2] as usize].as_ref(),
        ) else {
            continue;
        };

        // Signed doubled area; orientation-normalize so both windings render.
        let area = edge(a.x, a.y, b.x, b.y, c.x, c.y);
        if area.abs() < 1e-12 {
            continue;
        }
        let flip = if area < 0.0 { -1.0 } else { 1.0 };
        let area = area * flip;

        let min_x = a.x.min(b.x).min(c.x).floor().max(0.0) as usize;
        let max_x = (a.x.max(b.x).max(c.x).ceil() as isize).clamp(0, width as isize) as usize;
        let min_y = a.y.min(b.y).min(c.y).floor().max(0.0) as usize;
        let max_y = (a.y.max(b.y).max(c.y).ceil() as isize).clamp(0, height as isize) as usize;

        let color = mesh
            .face_colors
            .as_ref()
            .map(|cs| cs[fi])
            .unwrap_or(DEFAULT_FACE_COLOR);

        for py in min_y..max_y {
            let sy = py as f64 + 0.5;
            for px in min_x..max_x {
                let sx = px as f64 + 0.5;
                let w0 = flip * edge(b.x, b.y, c.x, c.y, sx, sy);
                let w1 = flip * edge(c.x, c.y, a.x, a.y, sx, sy);
                let w2 = flip * edge(a.x, a.y, b.x, b.y, sx, sy);
                let inside = covers(w0, flip, b, c) && covers(w1, flip, c, a) && covers(w2, flip, a, b);
                if !inside {
                    continue;
                }
                // Perspective-correct interpolation of 1/z.
                let (l0, l1, l2) = (w0 / area, w1 / area, w2 / area);
                let inv_z = l0 / a.z + l1 / b.z + l2 / c.z;
                if inv_z <= 0.0 {
                    continue;
                }
                let z = 1.0 / inv_z;
                let prox = -z;
                let idx = py * width + px;
                if prox > target.proximity[idx] {
                    target.proximity[idx] = prox;
                    target.coverage[idx] = true;
                    target.face_id[idx] = Some(fi as u32);
                    target.barycentrics[idx] = [l0 / a.z * z, l1 / b.z * z, l2 / c.z * z];
                    let base = idx * 3;
                    target.color.data[base..base + 3].copy_from_slice(&color);
                }
            }
        }
    }
    target
}

#[inline]
fn edge(ax: f64, ay: f64, bx: f64, by: f64, px: f64, py: f64) -> f64 {
    (bx - ax) * (py - ay) - (by - ay) * (px - ax)
}

/// Top-left fill rule for boundary pixels (w == 0): owned by edges that are
/// horizontal-going-left or otherwise upward-going, in the orientation-
/// normalized winding.
#[inline]
fn covers(w: f64, flip: f64, from: &ScreenVertex, to: &ScreenVertex) -> bool {
    if w > 0.0 {
        return true;
    }
    if w < 0.0 {
        return false;
    }
    let ex = flip * (to.x - from.x);
    let ey = flip * (to.y - from.y);
    (ey == 0.0 && ex < 0.0) || ey < 0.0
}

/// Soft depth blend of two rasterized parts.
#[derive(Debug, Clone, PartialEq)]
pub struct BlendOutput {
    /// Composited image.
    pub image: Image,
    /// Per-pixel weight of the first (movable) part's color.
    pub weights: Vec<f64>,
}

/// Per-pixel sigmoid blend over the proximity difference.
///
/// Evaluated on the branch-selected near side so that swapping the two
/// inputs produces bitwise-identical images.
pub fn soft_blend(mov: &RenderTarget, base: &RenderTarget, beta: f64) -> Result<BlendOutput> {
    if !mov.same_resolution(base) {
        return Err(Error::Mismatch(format!(
            "render target resolutions differ: {}x{} vs {}x{}",
            mov.width, mov.height, base.width, base.height
        )));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
    }
    let n = mov.width * mov.height;
    let mut weights = vec![0.0; n];
    let mut image = Image::new_filled(mov.width, mov.height, 3, 0.0);
    for i in 0..n {
        let dd = mov.proximity[i] - base.proximity[i];
        let (near, far, x, mov_is_near) = if dd >= 0.0 {
            (&mov.color, &base.color, beta * dd, true)
        } else {
            (&base.color, &mov.color, -beta * dd, false)
        };
        let w_near = sigmoid(x);
        for ch in 0..3 {
            image.data[i * 3 + ch] = w_near * near.data[i * 3 + ch] + (1.0 - w_near) * far.data[i * 3 + ch];
        }
        weights[i] = if mov_is_near { w_near } else { 1.0 - w_near };
    }
    Ok(BlendOutput { image, weights })
}

impl BlendOutput {
    /// Blend weights as a gray image (debug export).
    pub fn weight_image(&self) -> Image {
        Image::from_data(
            self.image.width,
            self.image.height,
            1,
            self.weights.clone(),
        )
        .expect("weights in [0,1]")
    }
}

/// Rasterizes both parts independently and soft-blends them.
pub fn render_pred(
    base_mesh: &TriMesh,
    mov_mesh: &TriMesh,
    camera: &Camera,
    beta: f64,
    background: [f64; 3],
) -> Result<BlendOutput> {
    let base = rasterize(base_mesh, camera, background);
    let mov = rasterize(mov_mesh, camera, background);
    soft_blend(&mov, &base, beta)
}

/// Mean per-pixel L1 difference over all channels.
pub fn image_loss(pred: &Image, reference: &Image) -> Result<f64> {
    if !pred.same_resolution(reference) || pred.channels != reference.channels {
        return Err(Error::Mismatch(format!(
            "image shapes differ: {}x{}x{} vs {}x{}x{}",
            pred.width, pred.height, pred.channels, reference.width, reference.height, reference.channels
        )));
    }
    let n = pred.data.len() as f64;
    let sum: f64 = pred.data.iter().zip(reference.data.iter()).map(|(a, b)| (a - b).abs()).sum();
    Ok(sum / n)
}
