//! Analytic gradients of the rendering loss with respect to movable-part
//! vertex positions.
//!
//! The chain runs `loss -> blended color -> blend weight -> proximity
//! difference -> interpolated movable depth -> camera-space vertices ->
//! world vertices`. Pixel-to-face assignment is held fixed (no silhouette
//! gradients), but the interpolated depth itself is differentiated exactly:
//! at a covered pixel the perspective-correct depth equals the ray/plane
//! intersection `z = (n·P0) / (n·d)` for the winning triangle, which this
//! module back-propagates in closed form. Pixels where the movable part is
//! uncovered, or where the blend argument sits in the sigmoid clamp,
//! contribute nothing.

use nalgebra::Vector3;

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::mesh::TriMesh;
use crate::render::{BlendOutput, RenderTarget};

/// L1 subgradient with `sign(0) = 0`.
#[inline]
fn l1_sign(d: f64) -> f64 {
    if d > 0.0 {
        1.0
    } else if d < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Derivative of the (unclamped) logistic function, evaluated stably from
/// the argument itself.
///
/// The blend value saturates in f64 long before the argument clamp, but
/// the derivative stays representable down to `exp(-745)`; keeping those
/// tails alive is what lets distant depth misfits pull on the parameters
/// at all (Adam rescales the magnitudes). Underflows to zero gracefully.
#[inline]
fn sigmoid_derivative(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

/// Gradient of `image_loss(blend.image, reference)` with respect to every
/// movable-part vertex position (world space).
///
/// `mov` and `blend` must come from rasterizing `mov_mesh` with `camera`
/// and blending against `base` at the same `beta`.
pub fn backward_vertex_grads(
    mov_mesh: &TriMesh,
    camera: &Camera,
    base: &RenderTarget,
    mov: &RenderTarget,
    blend: &BlendOutput,
    reference: &Image,
    beta: f64,
) -> Result<Vec<Vector3<f64>>> {
    if !mov.same_resolution(base) {
        return Err(Error::Mismatch("render target resolutions differ".into()));
    }
    if reference.width != mov.width || reference.height != mov.height || reference.channels != 3 {
        return Err(Error::Mismatch("reference image resolution differs from render".into()));
    }

    let cam_verts: Vec<Vector3<f64>> = mov_mesh.vertices.iter().map(|v| camera.to_camera(v)).collect();
    let mut grads = vec![Vector3::zeros(); mov_mesh.vertices.len()];
    let pixel_weight = 1.0 / (mov.width * mov.height * 3) as f64;
    let (fx, fy) = camera.focal;
    let (cx, cy) = camera.principal;

    for py in 0..mov.height {
        for px in 0..mov.width {
            let idx = py * mov.width + px;
            if !mov.coverage[idx] {
                continue;
            }
            let dd = mov.proximity[idx] - base.proximity[idx];
            let sig_prime = sigmoid_derivative(beta * dd);
            if sig_prime == 0.0 {
                continue; // underflowed: includes pixels without a base surface
            }
            // d loss / d w, through the three channels of this pixel.
            let mut g_w = 0.0;
            for ch in 0..3 {
                let i = idx * 3 + ch;
                let diff = blend.image.data[i] - reference.data[i];
                g_w += l1_sign(diff) * (mov.color.data[i] - base.color.data[i]) * pixel_weight;
            }
            if g_w == 0.0 {
                continue;
            }
            let g_dd = g_w * beta * sig_prime;
            // proximity = -z
            let g_z = -g_dd;

            let face = mov.face_id[idx].expect("covered pixel has a face") as usize;
            let f = mov_mesh.faces[face];
            let p0 = cam_verts[f[0] as usize];
            let p1 = cam_verts[f[1] as usize];
            let p2 = cam_verts[f[2] as usize];

            // z = (n · P0) / (n · d) with n the face normal and d the pixel ray.
            let dir = Vector3::new((px as f64 + 0.5 - cx) / fx, (py as f64 + 0.5 - cy) / fy, 1.0);
            let e1 = p1 - p0;
            let e2 = p2 - p0;
            let n = e1.cross(&e2);
            let s = n.dot(&dir);
            if s.abs() < 1e-12 {
                continue;
            }
            let k = n.dot(&p0);
            let g_k = g_z / s;
            let g_s = -g_z * k / (s * s);
            let g_n = p0 * g_k + dir * g_s;
            let mut g_p0 = n * g_k;
            let g_e1 = e2.cross(&g_n);
            let g_e2 = g_n.cross(&e1);
            g_p0 -= g_e1 + g_e2;

            // Camera-space gradients map to world space through the rotation.
            let rt = camera.rotation.transpose();
            grads[f[0] as usize] += rt * g_p0;
            grads[f[1] as usize] += rt * g_e1;
            grads[f[2] as usize] += rt * g_e2;
        }
    }
    Ok(grads)
}
