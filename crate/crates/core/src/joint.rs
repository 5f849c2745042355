//! Dual-quaternion joint model: construction, rotation/translation
//! extraction, mesh deformation, and analytic pose Jacobians.
//!
//! A joint is an axis (position + unit direction) plus a type. For motion
//! magnitude `theta` the rigid transform of the movable part is encoded as
//! a dual quaternion:
//!
//! * prismatic: `q_r = (1, 0)`, `T = (0, theta·axis_dir)`, `q_d = 0.5·T⊗q_r`
//! * revolute:  `q_r = (cos(theta/2), sin(theta/2)·axis_dir)`,
//!   `T = (0, axis_pos)`, `q_d = 0.5·(T⊗q_r − q_r⊗T)`
//!
//! `theta` is in object units for prismatic joints and radians for revolute
//! joints.

use std::fs;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::quat::{DualQuaternion, Quaternion};

/// Articulation joint kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointType {
    Prismatic,
    Revolute,
}

impl JointType {
    pub fn all() -> [JointType; 2] {
        [JointType::Prismatic, JointType::Revolute]
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            JointType::Prismatic => "prismatic",
            JointType::Revolute => "revolute",
        }
    }
}

impl std::str::FromStr for JointType {
    type Err = Error;

    fn from_str(s: &str) -> Result<JointType> {
        match s {
            "prismatic" => Ok(JointType::Prismatic),
            "revolute" => Ok(JointType::Revolute),
            other => Err(Error::InvalidArgument(format!("unknown joint type {other:?}"))),
        }
    }
}

/// Joint axis: position, unit direction, and type.
///
/// The position is not functionally required for prismatic joints but is
/// retained for a uniform parameterization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointSpec {
    pub joint_type: JointType,
    pub axis_pos: Vector3<f64>,
    pub axis_dir: Vector3<f64>,
}

impl JointSpec {
    pub fn new(joint_type: JointType, axis_pos: Vector3<f64>, axis_dir: Vector3<f64>) -> Result<JointSpec> {
        let spec = JointSpec { joint_type, axis_pos, axis_dir };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.axis_pos.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidArgument("joint axis_pos must be finite".into()));
        }
        if (self.axis_dir.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "joint axis_dir must be unit length (norm {})",
                self.axis_dir.norm()
            )));
        }
        Ok(())
    }

    /// Dual quaternion of the joint at motion magnitude `theta`.
    pub fn dual_quat(&self, theta: f64) -> DualQuaternion {
        dual_quat_from_joint(self, theta)
    }

    /// Rigid transform `(R, t)` at motion magnitude `theta`, derived through
    /// the dual quaternion.
    pub fn transform(&self, theta: f64) -> (Matrix3<f64>, Vector3<f64>) {
        dual_quat_to_rt(&self.dual_quat(theta))
    }

    /// Flips `axis_dir` so its largest-magnitude component is positive.
    ///
    /// Returns the sign applied (+1 or -1); thetas must be negated by the
    /// caller when the sign is -1. The induced rigid transforms are
    /// unchanged for both joint types.
    pub fn canonicalize(&mut self) -> f64 {
        let dir = self.axis_dir;
        let mut k = 0;
        for i in 1..3 {
            if dir[i].abs() > dir[k].abs() {
                k = i;
            }
        }
        if dir[k] < 0.0 {
            self.axis_dir = -dir;
            -1.0
        } else {
            1.0
        }
    }
}

/// Builds the joint dual quaternion at motion magnitude `theta`.
pub fn dual_quat_from_joint(joint: &JointSpec, theta: f64) -> DualQuaternion {
    match joint.joint_type {
        JointType::Prismatic => {
            let real = Quaternion::IDENTITY;
            let t = Quaternion::from_vector(joint.axis_dir * theta);
            let dual = t.mul(&real).scaled(0.5);
            DualQuaternion::new(real, dual)
        }
        JointType::Revolute => {
            let half = 0.5 * theta;
            let real = Quaternion {
                w: half.cos(),
                x: half.sin() * joint.axis_dir.x,
                y: half.sin() * joint.axis_dir.y,
                z: half.sin() * joint.axis_dir.z,
            };
            let t = Quaternion::from_vector(joint.axis_pos);
            let dual = t.mul(&real).sub(&real.mul(&t)).scaled(0.5);
            DualQuaternion::new(real, dual)
        }
    }
}

/// Extracts the rotation matrix and translation vector of a dual quaternion:
/// `R` from the real part, `t` as the vector part of `2 q_d ⊗ conj(q_r)`.
pub fn dual_quat_to_rt(dq: &DualQuaternion) -> (Matrix3<f64>, Vector3<f64>) {
    let rotation = dq.real.to_rotation_matrix();
    let translation = dq.dual.scaled(2.0).mul(&dq.real.conjugate()).vector();
    (rotation, translation)
}

/// Applies a rigid transform to every vertex; faces and colors pass through.
pub fn deform_mesh(mesh: &TriMesh, rotation: &Matrix3<f64>, translation: &Vector3<f64>) -> TriMesh {
    TriMesh {
        vertices: mesh.vertices.iter().map(|v| rotation * v + translation).collect(),
        faces: mesh.faces.clone(),
        face_colors: mesh.face_colors.clone(),
    }
}

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Rodrigues rotation about an arbitrary (not necessarily unit) axis vector.
///
/// `I + sin(theta)·K + (1−cos(theta))·K²` with `K = skew(axis)`. A proper
/// rotation only when `axis` is unit; the ambient extension is what the
/// axis-direction Jacobians differentiate.
pub fn rotation_about_axis(axis: &Vector3<f64>, theta: f64) -> Matrix3<f64> {
    let k = skew(axis);
    Matrix3::identity() + k * theta.sin() + k * k * (1.0 - theta.cos())
}

/// Partial derivatives of the joint transform `(R, t)` with respect to
/// `theta`, `axis_dir` (ambient), and `axis_pos`.
///
/// `d_rot_d_pos` is identically zero and omitted. The `axis_dir`
/// derivatives live in the ambient space; project assembled gradients onto
/// the tangent space of the unit sphere with [`project_to_tangent`] before
/// optimizing.
#[derive(Debug, Clone)]
pub struct JointPoseGrads {
    pub d_rot_d_theta: Matrix3<f64>,
    pub d_trans_d_theta: Vector3<f64>,
    pub d_rot_d_dir: [Matrix3<f64>; 3],
    pub d_trans_d_dir: [Vector3<f64>; 3],
    pub d_trans_d_pos: Matrix3<f64>,
}

/// Analytic Jacobians of the composed map joint -> dual quaternion -> (R, t).
///
/// Closed forms: prismatic `R = I`, `t = theta·axis_dir`; revolute
/// `R = Rodrigues(axis_dir, theta)`, `t = (I − R)·axis_pos`.
pub fn joint_pose_grads(joint: &JointSpec, theta: f64) -> JointPoseGrads {
    match joint.joint_type {
        JointType::Prismatic => JointPoseGrads {
            d_rot_d_theta: Matrix3::zeros(),
            d_trans_d_theta: joint.axis_dir,
            d_rot_d_dir: [Matrix3::zeros(); 3],
            d_trans_d_dir: [
                Vector3::new(theta, 0.0, 0.0),
                Vector3::new(0.0, theta, 0.0),
                Vector3::new(0.0, 0.0, theta),
            ],
            d_trans_d_pos: Matrix3::zeros(),
        },
        JointType::Revolute => {
            let u = joint.axis_dir;
            let k = skew(&u);
            let (sin_t, cos_t) = theta.sin_cos();
            // dR/dtheta = cos·K + sin·K²
            let d_rot_d_theta = k * cos_t + k * k * sin_t;
            // dR/du_k = sin·E_k + (1−cos)·(E_k K + K E_k)
            let basis = [skew(&Vector3::x()), skew(&Vector3::y()), skew(&Vector3::z())];
            let d_rot_d_dir =
                basis.map(|e| e * sin_t + (e * k + k * e) * (1.0 - cos_t));
            // t = (I − R)·axis_pos
            let d_trans_d_theta = -d_rot_d_theta * joint.axis_pos;
            let d_trans_d_dir = [
                -d_rot_d_dir[0] * joint.axis_pos,
                -d_rot_d_dir[1] * joint.axis_pos,
                -d_rot_d_dir[2] * joint.axis_pos,
            ];
            let rotation = rotation_about_axis(&u, theta);
            let d_trans_d_pos = Matrix3::identity() - rotation;
            JointPoseGrads {
                d_rot_d_theta,
                d_trans_d_theta,
                d_rot_d_dir,
                d_trans_d_dir,
                d_trans_d_pos,
            }
        }
    }
}

/// Removes the component of `grad` along the unit direction `dir`.
pub fn project_to_tangent(dir: &Vector3<f64>, grad: &Vector3<f64>) -> Vector3<f64> {
    grad - dir * grad.dot(dir)
}

/// On-disk articulation: joint spec plus the per-frame motion magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct JointRecord {
    pub joint: JointSpec,
    pub thetas: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct JointRecordJson {
    #[serde(rename = "type")]
    joint_type: JointType,
    axis_pos: [f64; 3],
    axis_dir: [f64; 3],
    thetas: Vec<f64>,
}

impl JointRecord {
    pub fn new(joint: JointSpec, thetas: Vec<f64>) -> JointRecord {
        JointRecord { joint, thetas }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<JointRecord> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let json: JointRecordJson =
            serde_json::from_str(&text).map_err(|e| Error::Json { path: path.into(), message: e.to_string() })?;
        let joint = JointSpec::new(
            json.joint_type,
            Vector3::from(json.axis_pos),
            Vector3::from(json.axis_dir),
        )?;
        Ok(JointRecord { joint, thetas: json.thetas })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = JointRecordJson {
            joint_type: self.joint.joint_type,
            axis_pos: self.joint.axis_pos.into(),
            axis_dir: self.joint.axis_dir.into(),
            thetas: self.thetas.clone(),
        };
        let text =
            serde_json::to_string_pretty(&json).map_err(|e| Error::Json { path: path.into(), message: e.to_string() })?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    /// Thetas resampled to `n` frames by linear interpolation; `n = 1`
    /// yields the rest state.
    pub fn resample_thetas(&self, n: usize) -> Result<Vec<f64>> {
        if self.thetas.is_empty() {
            return Err(Error::InvalidArgument("joint record has no thetas".into()));
        }
        if n == 0 {
            return Err(Error::InvalidArgument("cannot resample to zero frames".into()));
        }
        let m = self.thetas.len();
        if n == 1 {
            return Ok(vec![self.thetas[0]]);
        }
        if m == 1 {
            return Ok(vec![self.thetas[0]; n]);
        }
        Ok((0..n)
            .map(|i| {
                let s = i as f64 * (m - 1) as f64 / (n - 1) as f64;
                let lo = s.floor() as usize;
                let hi = (lo + 1).min(m - 1);
                let frac = s - lo as f64;
                self.thetas[lo] * (1.0 - frac) + self.thetas[hi] * frac
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_unit(rng: &mut impl Rng) -> Vector3<f64> {
        loop {
            let v = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let n = v.norm();
            if n > 1e-3 && n <= 1.0 {
                return v / n;
            }
        }
    }

    #[test]
    fn prismatic_dual_quat_example() {
        // axis (0,0,1), theta 0.5 -> q_d = 0.5 · (0,(0,0,0.5)) ⊗ identity
        let j = JointSpec::new(JointType::Prismatic, Vector3::zeros(), Vector3::z()).unwrap();
        let dq = dual_quat_from_joint(&j, 0.5);
        assert_eq!(dq.real, Quaternion::IDENTITY);
        assert_relative_eq!(dq.dual.w, 0.0);
        assert_relative_eq!(dq.dual.z, 0.25);
        assert!(dq.is_rigid(1e-12));
    }

    #[test]
    fn zero_motion_is_identity() {
        let j = JointSpec::new(JointType::Revolute, Vector3::new(0.3, -1.0, 2.0), Vector3::x()).unwrap();
        let dq = dual_quat_from_joint(&j, 0.0);
        assert_relative_eq!(dq.real.w, 1.0);
        assert_relative_eq!(dq.dual.norm(), 0.0, epsilon = 1e-15);
        let (r, t) = dual_quat_to_rt(&dq);
        assert_relative_eq!((r - Matrix3::identity()).norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(t.norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn revolute_half_turn_about_origin() {
        let j = JointSpec::new(JointType::Revolute, Vector3::zeros(), Vector3::z()).unwrap();
        let dq = dual_quat_from_joint(&j, std::f64::consts::PI);
        assert_relative_eq!(dq.real.w, 0.0, epsilon = 1e-15);
        assert_relative_eq!(dq.real.z, 1.0);
        assert_relative_eq!(dq.dual.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn prismatic_translation_extraction() {
        let j = JointSpec::new(JointType::Prismatic, Vector3::zeros(), Vector3::z()).unwrap();
        let (r, t) = dual_quat_to_rt(&dual_quat_from_joint(&j, 0.5));
        assert_relative_eq!((r - Matrix3::identity()).norm(), 0.0, epsilon = 1e-15);
        assert_relative_eq!((t - Vector3::new(0.0, 0.0, 0.5)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn revolute_half_turn_about_offset_axis() {
        // Rotating 180° about the vertical line x=1 sends the origin to (2,0,0).
        let j = JointSpec::new(JointType::Revolute, Vector3::x(), Vector3::z()).unwrap();
        let (r, t) = dual_quat_to_rt(&dual_quat_from_joint(&j, std::f64::consts::PI));
        let expected_r = Matrix3::from_diagonal(&Vector3::new(-1.0, -1.0, 1.0));
        assert_relative_eq!((r - expected_r).norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!((t - Vector3::new(2.0, 0.0, 0.0)).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn round_trip_matches_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let dir = random_unit(&mut rng);
            let pos = Vector3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let theta = rng.gen_range(-3.0..3.0);

            let pj = JointSpec::new(JointType::Prismatic, pos, dir).unwrap();
            let dq = dual_quat_from_joint(&pj, theta);
            assert!(dq.is_rigid(1e-9));
            let (r, t) = dual_quat_to_rt(&dq);
            assert_relative_eq!((r - Matrix3::identity()).norm(), 0.0, epsilon = 1e-9);
            assert_relative_eq!((t - dir * theta).norm(), 0.0, epsilon = 1e-9);

            let rj = JointSpec::new(JointType::Revolute, pos, dir).unwrap();
            let dq = dual_quat_from_joint(&rj, theta);
            assert!(dq.is_rigid(1e-9));
            let (r, t) = dual_quat_to_rt(&dq);
            let expected_r = rotation_about_axis(&dir, theta);
            assert_relative_eq!((r - expected_r).norm(), 0.0, epsilon = 1e-9);
            assert_relative_eq!((t - (pos - expected_r * pos)).norm(), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn revolute_fixes_axis_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let dir = random_unit(&mut rng);
            let pos = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let j = JointSpec::new(JointType::Revolute, pos, dir).unwrap();
            let theta = rng.gen_range(-3.0..3.0);
            let (r, t) = j.transform(theta);
            let s = rng.gen_range(-2.0..2.0);
            let on_axis = pos + dir * s;
            assert_relative_eq!((r * on_axis + t - on_axis).norm(), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn revolute_composition_adds_angles() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let dir = random_unit(&mut rng);
            let pos = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let j = JointSpec::new(JointType::Revolute, pos, dir).unwrap();
            let (t1, t2) = (rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
            let (r1, tr1) = j.transform(t1);
            let (r2, tr2) = j.transform(t2);
            let (r12, tr12) = j.transform(t1 + t2);
            assert_relative_eq!((r2 * r1 - r12).norm(), 0.0, epsilon = 1e-9);
            assert_relative_eq!((r2 * tr1 + tr2 - tr12).norm(), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn deform_composition_matches_composed_transform() {
        let mesh = crate::mesh::unit_cube();
        let j = JointSpec::new(JointType::Revolute, Vector3::new(0.2, 0.1, -0.4), random_unit(&mut ChaCha8Rng::seed_from_u64(5))).unwrap();
        let (r1, t1) = j.transform(0.7);
        let (r2, t2) = j.transform(-0.3);
        let a = deform_mesh(&deform_mesh(&mesh, &r1, &t1), &r2, &t2);
        let b = deform_mesh(&mesh, &(r2 * r1), &(r2 * t1 + t2));
        for (va, vb) in a.vertices.iter().zip(b.vertices.iter()) {
            assert_relative_eq!((va - vb).norm(), 0.0, epsilon = 1e-9);
        }
        assert_eq!(a.faces, mesh.faces);
    }

    #[test]
    fn identity_deform_is_identity() {
        let mesh = crate::mesh::unit_cube();
        let out = deform_mesh(&mesh, &Matrix3::identity(), &Vector3::zeros());
        assert_eq!(out, mesh);
    }

    #[test]
    fn pose_grads_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let h = 1e-5;
        let tol = 1e-6;
        for i in 0..100 {
            let joint_type = if i % 2 == 0 { JointType::Prismatic } else { JointType::Revolute };
            let dir = random_unit(&mut rng);
            let pos = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let theta = rng.gen_range(-2.5..2.5);
            let j = JointSpec { joint_type, axis_pos: pos, axis_dir: dir };
            let g = joint_pose_grads(&j, theta);

            // Ambient closed-form transform used as the finite-difference target.
            let eval = |dir: Vector3<f64>, pos: Vector3<f64>, theta: f64| -> (Matrix3<f64>, Vector3<f64>) {
                match joint_type {
                    JointType::Prismatic => (Matrix3::identity(), dir * theta),
                    JointType::Revolute => {
                        let r = rotation_about_axis(&dir, theta);
                        (r, pos - r * pos)
                    }
                }
            };

            let check = |analytic_r: &Matrix3<f64>, analytic_t: &Vector3<f64>, plus: (Matrix3<f64>, Vector3<f64>), minus: (Matrix3<f64>, Vector3<f64>)| {
                let fd_r = (plus.0 - minus.0) / (2.0 * h);
                let fd_t = (plus.1 - minus.1) / (2.0 * h);
                let scale_r = analytic_r.norm().max(fd_r.norm()).max(1e-6);
                let scale_t = analytic_t.norm().max(fd_t.norm()).max(1e-6);
                assert!((analytic_r - fd_r).norm() / scale_r < tol, "rotation jacobian mismatch");
                assert!((analytic_t - fd_t).norm() / scale_t < tol, "translation jacobian mismatch");
            };

            check(&g.d_rot_d_theta, &g.d_trans_d_theta, eval(dir, pos, theta + h), eval(dir, pos, theta - h));
            for k in 0..3 {
                let mut dp = dir;
                let mut dm = dir;
                dp[k] += h;
                dm[k] -= h;
                check(&g.d_rot_d_dir[k], &g.d_trans_d_dir[k], eval(dp, pos, theta), eval(dm, pos, theta));
                let mut pp = pos;
                let mut pm = pos;
                pp[k] += h;
                pm[k] -= h;
                let fd_t = (eval(dir, pp, theta).1 - eval(dir, pm, theta).1) / (2.0 * h);
                let analytic_t = g.d_trans_d_pos.column(k).into_owned();
                let scale = analytic_t.norm().max(fd_t.norm()).max(1e-6);
                assert!((analytic_t - fd_t).norm() / scale < tol, "pos jacobian mismatch");
            }
        }
    }

    #[test]
    fn prismatic_grads_closed_form() {
        let j = JointSpec::new(JointType::Prismatic, Vector3::zeros(), Vector3::y()).unwrap();
        let g = joint_pose_grads(&j, 0.8);
        assert_eq!(g.d_trans_d_theta, Vector3::y());
        assert_eq!(g.d_rot_d_theta, Matrix3::zeros());
    }

    #[test]
    fn revolute_zero_angle_pos_grad_vanishes() {
        let j = JointSpec::new(JointType::Revolute, Vector3::new(0.5, 0.2, 0.0), Vector3::z()).unwrap();
        let g = joint_pose_grads(&j, 0.0);
        assert_relative_eq!(g.d_trans_d_pos.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn canonicalize_preserves_transforms() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let dir = random_unit(&mut rng);
            let pos = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            for joint_type in JointType::all() {
                let j = JointSpec { joint_type, axis_pos: pos, axis_dir: dir };
                let theta = rng.gen_range(-2.0..2.0);
                let (r0, t0) = j.transform(theta);
                let mut c = j;
                let sign = c.canonicalize();
                let (r1, t1) = c.transform(sign * theta);
                assert_relative_eq!((r0 - r1).norm(), 0.0, epsilon = 1e-9);
                assert_relative_eq!((t0 - t1).norm(), 0.0, epsilon = 1e-9);
                let mut k = 0;
                for i in 1..3 {
                    if c.axis_dir[i].abs() > c.axis_dir[k].abs() {
                        k = i;
                    }
                }
                assert!(c.axis_dir[k] >= 0.0);
            }
        }
    }

    #[test]
    fn record_json_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("joint.json");
        let rec = JointRecord::new(
            JointSpec::new(JointType::Revolute, Vector3::new(0.1, 0.2, 0.3), Vector3::x()).unwrap(),
            vec![0.0, 0.2, 0.5],
        );
        rec.save(&p).unwrap();
        let back = JointRecord::load(&p).unwrap();
        assert_eq!(back, rec);
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.contains("\"type\": \"revolute\""));
    }

    #[test]
    fn resample_endpoints_and_rest() {
        let rec = JointRecord::new(
            JointSpec::new(JointType::Prismatic, Vector3::zeros(), Vector3::z()).unwrap(),
            vec![0.0, 1.0, 4.0],
        );
        assert_eq!(rec.resample_thetas(3).unwrap(), vec![0.0, 1.0, 4.0]);
        assert_eq!(rec.resample_thetas(1).unwrap(), vec![0.0]);
        let five = rec.resample_thetas(5).unwrap();
        assert_eq!(five.len(), 5);
        assert_relative_eq!(five[1], 0.5, epsilon = 1e-12);
        assert_relative_eq!(five[4], 4.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn plucker_condition_holds(
            ax in -1.0..1.0f64, ay in -1.0..1.0f64, az in -1.0..1.0f64,
            px in -2.0..2.0f64, py in -2.0..2.0f64, pz in -2.0..2.0f64,
            theta in -3.0..3.0f64, revolute in proptest::bool::ANY
        ) {
            let v = Vector3::new(ax + 1.5, ay, az);
            let dir = v / v.norm();
            let joint_type = if revolute { JointType::Revolute } else { JointType::Prismatic };
            let j = JointSpec { joint_type, axis_pos: Vector3::new(px, py, pz), axis_dir: dir };
            let dq = dual_quat_from_joint(&j, theta);
            prop_assert!(dq.plucker_residual().abs() < 1e-9);
            prop_assert!((dq.real.norm() - 1.0).abs() < 1e-9);
        }
    }
}
