//! Evaluation metrics: joint errors, motion RMSE, PSNR, SSIM.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::joint::JointSpec;

/// PSNR value reported for (near-)exact matches.
pub const PSNR_CAP: f64 = 99.0;

/// Per-scene evaluation record.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Axis direction error in degrees, sign-invariant, in `[0, 90]`.
    pub axis_angle_error: f64,
    /// Point-to-line distance of the estimated axis position to the true
    /// axis, as a fraction of the bbox diagonal. Zero for prismatic joints.
    pub axis_position_error: f64,
    /// Motion RMSE as a fraction of the true motion range, sign-gauged.
    pub motion_rmse: f64,
    pub type_correct: bool,
    pub psnr: f64,
    pub ssim: f64,
}

/// Axis direction and position errors between an estimate and ground truth.
///
/// The direction error uses `arccos(|dot|)` so it is invariant to flipping
/// either axis; the position error measures distance to the ground-truth
/// axis *line*, so displacement along the axis is free. For prismatic
/// joints the position is gauge and the error is reported as zero.
pub fn axis_errors(est: &JointSpec, gt: &JointSpec, bbox_diag: f64) -> Result<(f64, f64)> {
    if est.joint_type != gt.joint_type {
        return Err(Error::Mismatch(format!(
            "joint types differ: {} vs {}",
            est.joint_type.as_str(),
            gt.joint_type.as_str()
        )));
    }
    let cosine = est.axis_dir.dot(&gt.axis_dir).abs().clamp(0.0, 1.0);
    let angle = cosine.acos().to_degrees();

    let position = match gt.joint_type {
        crate::joint::JointType::Prismatic => 0.0,
        crate::joint::JointType::Revolute => {
            if !(bbox_diag > 0.0) {
                return Err(Error::InvalidArgument("bbox diagonal must be positive".into()));
            }
            let delta = est.axis_pos - gt.axis_pos;
            let off_axis = delta - gt.axis_dir * delta.dot(&gt.axis_dir);
            off_axis.norm() / bbox_diag
        }
    };
    Ok((angle, position))
}

/// RMSE between motion profiles as a fraction of the ground-truth range,
/// minimized over the axis-sign gauge `est ≈ ±gt`.
///
/// An all-zero ground truth pairs only with an all-zero estimate (returning
/// zero); any other estimate against a zero-range truth is an error.
pub fn motion_rmse(est: &[f64], gt: &[f64]) -> Result<f64> {
    if est.len() != gt.len() {
        return Err(Error::Mismatch(format!("profile lengths differ: {} vs {}", est.len(), gt.len())));
    }
    if est.is_empty() {
        return Err(Error::InvalidArgument("empty motion profiles".into()));
    }
    let range = gt.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if range == 0.0 {
        if est.iter().all(|&v| v == 0.0) {
            return Ok(0.0);
        }
        return Err(Error::InvalidArgument("ground-truth motion range is zero but estimate moves".into()));
    }
    let rmse = |sign: f64| -> f64 {
        let sum: f64 = est.iter().zip(gt.iter()).map(|(e, g)| (e - sign * g).powi(2)).sum();
        (sum / est.len() as f64).sqrt()
    };
    Ok(rmse(1.0).min(rmse(-1.0)) / range)
}

/// Peak signal-to-noise ratio in dB for images in `[0, 1]`, capped at 99.
pub fn psnr(pred: &Image, reference: &Image) -> Result<f64> {
    if !pred.same_resolution(reference) || pred.channels != reference.channels {
        return Err(Error::Mismatch("psnr inputs must share resolution and channels".into()));
    }
    let mse: f64 = pred
        .data
        .iter()
        .zip(reference.data.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / pred.data.len() as f64;
    if mse < 1e-10 {
        return Ok(PSNR_CAP);
    }
    Ok((10.0 * (1.0 / mse).log10()).min(PSNR_CAP))
}

/// Mean local SSIM over non-overlapping square windows of the luminance
/// plane, with stabilizers `C1 = 0.01²`, `C2 = 0.03²`.
///
/// The window is 8x8, shrunk to the smaller image dimension for tiny
/// images so the metric stays defined down to 1x1; partial edge windows
/// are dropped. Statistics are population moments (divide by `n`).
pub fn ssim(pred: &Image, reference: &Image) -> Result<f64> {
    if !pred.same_resolution(reference) || pred.channels != reference.channels {
        return Err(Error::Mismatch("ssim inputs must share resolution and channels".into()));
    }
    if pred.width == 0 || pred.height == 0 {
        return Err(Error::InvalidImage("ssim of an empty image".into()));
    }
    let win = 8usize.min(pred.width).min(pred.height);
    let lp = pred.luminance();
    let lr = reference.luminance();

    const C1: f64 = 0.01 * 0.01;
    const C2: f64 = 0.03 * 0.03;

    let mut total = 0.0;
    let mut count = 0usize;
    let mut wy = 0;
    while wy + win <= pred.height {
        let mut wx = 0;
        while wx + win <= pred.width {
            let n = (win * win) as f64;
            let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for y in wy..wy + win {
                for x in wx..wx + win {
                    let a = lp[y * pred.width + x];
                    let b = lr[y * pred.width + x];
                    sx += a;
                    sy += b;
                    sxx += a * a;
                    syy += b * b;
                    sxy += a * b;
                }
            }
            let mx = sx / n;
            let my = sy / n;
            let vx = (sxx / n - mx * mx).max(0.0);
            let vy = (syy / n - my * my).max(0.0);
            let cov = sxy / n - mx * my;
            let s = ((2.0 * mx * my + C1) * (2.0 * cov + C2)) / ((mx * mx + my * my + C1) * (vx + vy + C2));
            total += s;
            count += 1;
            wx += win;
        }
        wy += win;
    }
    if count == 0 {
        return Err(Error::InvalidImage("image smaller than one ssim window".into()));
    }
    Ok(total / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::joint::JointType;
    use approx::assert_relative_eq;
    use nalgebra::Vector3;
    use proptest::prelude::*;

    fn revolute(pos: Vector3<f64>, dir: Vector3<f64>) -> JointSpec {
        JointSpec::new(JointType::Revolute, pos, dir.normalize()).unwrap()
    }

    #[test]
    fn axis_errors_identity() {
        let j = revolute(Vector3::new(0.1, 0.2, 0.3), Vector3::z());
        let (a, p) = axis_errors(&j, &j, 1.0).unwrap();
        assert_eq!((a, p), (0.0, 0.0));
    }

    #[test]
    fn axis_errors_sign_invariant() {
        let gt = revolute(Vector3::zeros(), Vector3::z());
        let mut est = gt;
        est.axis_dir = -est.axis_dir;
        let (a, _) = axis_errors(&est, &gt, 1.0).unwrap();
        assert_relative_eq!(a, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn on_axis_displacement_is_free() {
        let gt = revolute(Vector3::zeros(), Vector3::z());
        let mut est = gt;
        est.axis_pos += Vector3::z() * 0.1;
        let (_, p) = axis_errors(&est, &gt, 1.0).unwrap();
        assert_relative_eq!(p, 0.0, epsilon = 1e-12);
        // Off-axis displacement registers as point-to-line distance.
        est.axis_pos = Vector3::new(0.3, 0.4, 7.0);
        let (_, p) = axis_errors(&est, &gt, 2.0).unwrap();
        assert_relative_eq!(p, 0.5 / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn axis_errors_type_mismatch() {
        let gt = revolute(Vector3::zeros(), Vector3::z());
        let est = JointSpec::new(JointType::Prismatic, Vector3::zeros(), Vector3::z()).unwrap();
        assert!(axis_errors(&est, &gt, 1.0).is_err());
    }

    #[test]
    fn motion_rmse_examples() {
        let gt = vec![0.0, 0.3, 0.8, 1.0];
        assert_eq!(motion_rmse(&gt, &gt).unwrap(), 0.0);
        let neg: Vec<f64> = gt.iter().map(|v| -v).collect();
        assert_eq!(motion_rmse(&neg, &gt).unwrap(), 0.0);

        // Constant offset of 0.1·range on all frames but the pinned first.
        let est: Vec<f64> = gt.iter().enumerate().map(|(i, &v)| if i == 0 { v } else { v + 0.1 }).collect();
        let expected = (3.0 * 0.1f64.powi(2) / 4.0).sqrt();
        assert_relative_eq!(motion_rmse(&est, &gt).unwrap(), expected, epsilon = 1e-12);

        assert_eq!(motion_rmse(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert!(motion_rmse(&[0.0, 0.1], &[0.0, 0.0]).is_err());
        assert!(motion_rmse(&[0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn psnr_examples() {
        let a = Image::new_filled(4, 4, 3, 0.0);
        let b = Image::new_filled(4, 4, 3, 1.0);
        assert_eq!(psnr(&a, &a).unwrap(), 99.0);
        assert_eq!(psnr(&a, &b).unwrap(), 0.0);
        // MSE 0.01 -> 20 dB.
        let c = Image::new_filled(4, 4, 3, 0.1);
        assert_relative_eq!(psnr(&c, &a).unwrap(), 20.0, epsilon = 1e-9);
    }

    #[test]
    fn ssim_identical_is_one() {
        let img = Image::from_data(16, 16, 1, (0..256).map(|i| (i % 17) as f64 / 16.0).collect()).unwrap();
        assert_relative_eq!(ssim(&img, &img).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ssim_negative_for_inverted_checkerboard() {
        let data: Vec<f64> = (0..64)
            .map(|i| if ((i / 8) + (i % 8)) % 2 == 0 { 0.25 } else { 0.75 })
            .collect();
        let img = Image::from_data(8, 8, 1, data.clone()).unwrap();
        let inv = Image::from_data(8, 8, 1, data.iter().map(|v| 1.0 - v).collect()).unwrap();
        assert!(ssim(&img, &inv).unwrap() < 0.0);
    }

    #[test]
    fn ssim_constant_plus_small_noise() {
        let a = Image::new_filled(8, 8, 1, 0.5);
        let data: Vec<f64> = (0..64).map(|i| 0.5 + 1e-4 * ((i % 5) as f64 - 2.0)).collect();
        let b = Image::from_data(8, 8, 1, data).unwrap();
        assert!(ssim(&a, &b).unwrap() > 0.99);
    }

    #[test]
    fn ssim_textbook_2x2() {
        // One 2x2 window, population moments:
        // x = [0, 0.5; 0.5, 1], y = x -> ssim 1.
        let x = Image::from_data(2, 2, 1, vec![0.0, 0.5, 0.5, 1.0]).unwrap();
        assert_relative_eq!(ssim(&x, &x).unwrap(), 1.0, epsilon = 1e-12);
        // Hand-computed for y = [0.1, 0.5; 0.5, 0.9]:
        let y = Image::from_data(2, 2, 1, vec![0.1, 0.5, 0.5, 0.9]).unwrap();
        let (mx, my) = (0.5, 0.5);
        let vx = (0.0f64.powi(2) + 2.0 * 0.0 + 0.25 * 2.0) / 4.0; // population var of x
        let vy = (0.4f64.powi(2) * 2.0) / 4.0;
        let cov = (0.5 * 0.4 * 2.0) / 4.0;
        let c1 = 0.0001;
        let c2 = 0.0009;
        let expected = ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        assert_relative_eq!(ssim(&x, &y).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn psnr_textbook_2x2() {
        let x = Image::from_data(2, 2, 1, vec![0.0, 0.5, 0.5, 1.0]).unwrap();
        let y = Image::from_data(2, 2, 1, vec![0.1, 0.5, 0.5, 0.9]).unwrap();
        let mse: f64 = (0.01 + 0.01) / 4.0;
        assert_relative_eq!(psnr(&x, &y).unwrap(), 10.0 * (1.0 / mse).log10(), epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn axis_error_gauge_invariances(
            dx in -1.0..1.0f64, dy in -1.0..1.0f64, dz in -1.0..1.0f64,
            px in -1.0..1.0f64, py in -1.0..1.0f64, pz in -1.0..1.0f64,
            shift in -2.0..2.0f64, flip in proptest::bool::ANY
        ) {
            let v = Vector3::new(dx + 1.5, dy, dz);
            let gt = revolute(Vector3::new(px, py, pz), v);
            let mut est = gt;
            if flip {
                est.axis_dir = -est.axis_dir;
            }
            est.axis_pos += gt.axis_dir * shift;
            let (a, p) = axis_errors(&est, &gt, 1.0).unwrap();
            prop_assert!(a.abs() < 1e-5);
            prop_assert!(p.abs() < 1e-9);
            prop_assert!((0.0..=90.0).contains(&a));
        }
    }
}
