//! Joint estimation by multi-start Adam through the soft renderer.
//!
//! Every restart draws a random axis and motion network, runs a short
//! warmup, and the best two candidates continue to the full iteration
//! budget; the lowest final loss wins. The loss is the rendering loss
//! summed over supervised frames, with the movable part deformed per frame
//! by the joint model. Everything is deterministic given the seed.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, UnitSphere};
use rayon::prelude::*;

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::joint::{deform_mesh, joint_pose_grads, project_to_tangent, JointSpec, JointType};
use crate::mesh::TriMesh;
use crate::mlp::{MotionMlp, MotionProfile, DEFAULT_LAYER_SIZES};
use crate::render::{image_loss, rasterize, soft_blend, BlendOutput, RenderTarget, DEFAULT_BETA};
use crate::render_grad::backward_vertex_grads;
use crate::rng::SeedSplitter;

/// Background color rendered behind both parts.
pub const DEFAULT_BACKGROUND: [f64; 3] = [0.10, 0.10, 0.12];

/// Optimizer settings.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimConfig {
    pub iterations: usize,
    pub warmup_iterations: usize,
    pub restarts: usize,
    /// How many warmup candidates continue to the full budget.
    pub finalists: usize,
    pub lr_axis_dir: f64,
    pub lr_axis_pos: f64,
    pub lr_mlp: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    /// Blend sharpness used for final losses and reported results.
    pub beta: f64,
    /// Initial blend sharpness of the coarse-to-fine anneal. Low values
    /// widen the depth-blend band so distant misalignments still produce
    /// gradients; the sharpness ramps geometrically up to `beta`.
    pub beta_start: f64,
    /// Fraction of the iteration budget spent annealing `beta_start` up to
    /// `beta`; the remainder runs at `beta` exactly.
    pub beta_anneal_fraction: f64,
    pub seed: u64,
    /// 1-based frame indices to supervise; `None` supervises all frames.
    pub supervised_frames: Option<Vec<usize>>,
    pub background: [f64; 3],
    /// Cosine learning-rate decay floor, as a fraction of the initial rate.
    pub lr_floor_fraction: f64,
    pub mlp_layers: Vec<usize>,
}

impl Default for OptimConfig {
    fn default() -> Self {
        OptimConfig {
            iterations: 600,
            warmup_iterations: 60,
            restarts: 16,
            finalists: 2,
            lr_axis_dir: 1e-2,
            lr_axis_pos: 1e-2,
            lr_mlp: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            beta: DEFAULT_BETA,
            beta_start: 24.0,
            beta_anneal_fraction: 0.7,
            seed: 0,
            supervised_frames: None,
            background: DEFAULT_BACKGROUND,
            lr_floor_fraction: 0.01,
            mlp_layers: DEFAULT_LAYER_SIZES.to_vec(),
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr_axis_dir > 0.0 && self.lr_axis_pos > 0.0 && self.lr_mlp > 0.0) {
            return Err(Error::InvalidArgument("learning rates must be positive".into()));
        }
        if self.restarts < 1 {
            return Err(Error::InvalidArgument("need at least one restart".into()));
        }
        if self.finalists < 1 {
            return Err(Error::InvalidArgument("need at least one finalist".into()));
        }
        if self.iterations < self.warmup_iterations {
            return Err(Error::InvalidArgument(format!(
                "iterations ({}) must cover the warmup ({})",
                self.iterations, self.warmup_iterations
            )));
        }
        if !(self.beta > 0.0 && self.beta_start > 0.0) {
            return Err(Error::InvalidArgument("beta values must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.beta_anneal_fraction) {
            return Err(Error::InvalidArgument("beta_anneal_fraction must lie in [0,1]".into()));
        }
        Ok(())
    }

    fn lr_scale(&self, iter: usize) -> f64 {
        let t = self.iterations.max(2);
        let s = iter as f64 / (t - 1) as f64;
        let floor = self.lr_floor_fraction.clamp(0.0, 1.0);
        floor + (1.0 - floor) * 0.5 * (1.0 + (std::f64::consts::PI * s).cos())
    }

    /// Blend sharpness at an iteration: geometric ramp from `beta_start`
    /// to `beta` over the anneal fraction of the budget, then flat.
    fn beta_at(&self, iter: usize) -> f64 {
        let anneal_iters = (self.iterations as f64 * self.beta_anneal_fraction).max(1.0);
        let p = (iter as f64 / anneal_iters).min(1.0);
        self.beta_start * (self.beta / self.beta_start).powf(p)
    }
}

/// Result of a joint estimation run.
#[derive(Debug, Clone)]
pub struct OptimResult {
    pub joint: JointSpec,
    pub profile: MotionProfile,
    pub mlp: MotionMlp,
    /// Loss per iteration; the final entry is evaluated at the returned
    /// parameters, so `final_loss == loss_history.last()`.
    pub loss_history: Vec<f64>,
    pub final_loss: f64,
    pub restart_index: usize,
}

/// First/second moment accumulators for Adam.
#[derive(Debug, Clone, Default)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(len: usize) -> AdamState {
        AdamState { m: vec![0.0; len], v: vec![0.0; len], step: 0 }
    }
}

/// One bias-corrected Adam update in place.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    lr: f64,
    betas: (f64, f64),
    eps: f64,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::Mismatch("adam parameter/gradient/state lengths differ".into()));
    }
    if !grads.iter().all(|g| g.is_finite()) {
        return Err(Error::Optimization("non-finite gradient".into()));
    }
    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - betas.0.powi(t);
    let bias2 = 1.0 - betas.1.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = betas.0 * state.m[i] + (1.0 - betas.0) * g;
        state.v[i] = betas.1 * state.v[i] + (1.0 - betas.1) * g * g;
        let m_hat = state.m[i] / bias1;
        let v_hat = state.v[i] / bias2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

/// Random initialization of one restart: axis direction uniform on the unit
/// sphere; axis position uniform in the movable bbox for revolute joints
/// and exactly the bbox center for prismatic; small random motion network.
/// Revolute networks carry a `pi` output amplitude so angles stay in
/// `(-pi, pi)`.
pub fn init_restart(
    rng: &mut impl Rng,
    joint_type: JointType,
    movable_bbox: (Vector3<f64>, Vector3<f64>),
    mlp_layers: &[usize],
) -> Result<(JointSpec, MotionMlp)> {
    let dir: [f64; 3] = UnitSphere.sample(rng);
    let (lo, hi) = movable_bbox;
    let pos = match joint_type {
        JointType::Prismatic => (lo + hi) * 0.5,
        JointType::Revolute => Vector3::new(
            rng.gen_range(lo.x..=hi.x),
            rng.gen_range(lo.y..=hi.y),
            rng.gen_range(lo.z..=hi.z),
        ),
    };
    let joint = JointSpec::new(joint_type, pos, Vector3::from(dir))?;
    let amplitude = match joint_type {
        JointType::Prismatic => None,
        JointType::Revolute => Some(std::f64::consts::PI),
    };
    let mlp = MotionMlp::init(mlp_layers, rng)?.with_amplitude(amplitude);
    Ok((joint, mlp))
}

/// Gradients of the articulation loss with respect to the joint parameters
/// and the motion network.
#[derive(Debug, Clone)]
pub struct ParamGrads {
    /// Tangent-projected gradient for the unit axis direction.
    pub axis_dir: Vector3<f64>,
    pub axis_pos: Vector3<f64>,
    pub mlp: Vec<f64>,
}

/// The rendering-loss fitting problem for one scene: fixed base render,
/// movable rest mesh, reference frames, and camera.
pub struct ArticulationProblem<'a> {
    pub base_target: &'a RenderTarget,
    pub movable: &'a TriMesh,
    pub frames: &'a [Image],
    pub camera: &'a Camera,
    pub background: [f64; 3],
    /// 1-based supervised frame indices.
    pub supervised: &'a [usize],
}

impl<'a> ArticulationProblem<'a> {
    fn theta(&self, mlp: &MotionMlp, t: usize) -> Result<f64> {
        mlp.motion_at(t, self.frames.len())
    }

    /// Renders the prediction for 1-based frame `t`.
    pub fn render_frame(&self, joint: &JointSpec, mlp: &MotionMlp, t: usize, beta: f64) -> Result<BlendOutput> {
        let theta = self.theta(mlp, t)?;
        let (r, tv) = joint.transform(theta);
        let deformed = deform_mesh(self.movable, &r, &tv);
        let mov = rasterize(&deformed, self.camera, self.background);
        soft_blend(&mov, self.base_target, beta)
    }

    /// Loss summed over supervised frames.
    pub fn loss(&self, joint: &JointSpec, mlp: &MotionMlp, beta: f64) -> Result<f64> {
        let mut total = 0.0;
        for &t in self.supervised {
            let blend = self.render_frame(joint, mlp, t, beta)?;
            total += image_loss(&blend.image, &self.frames[t - 1])?;
        }
        Ok(total)
    }

    /// Loss and analytic parameter gradients, chained per frame through the
    /// renderer, the rigid transform, and the motion network.
    pub fn loss_and_grads(&self, joint: &JointSpec, mlp: &MotionMlp, beta: f64) -> Result<(f64, ParamGrads)> {
        let n = self.frames.len();
        let mut total = 0.0;
        let mut g_dir = Vector3::zeros();
        let mut g_pos = Vector3::zeros();
        let mut g_mlp = vec![0.0; mlp.param_count()];

        for &t in self.supervised {
            let theta = self.theta(mlp, t)?;
            let (r, tv) = joint.transform(theta);
            let deformed = deform_mesh(self.movable, &r, &tv);
            let mov = rasterize(&deformed, self.camera, self.background);
            let blend = soft_blend(&mov, self.base_target, beta)?;
            total += image_loss(&blend.image, &self.frames[t - 1])?;

            let vert_grads = backward_vertex_grads(
                &deformed,
                self.camera,
                self.base_target,
                &mov,
                &blend,
                &self.frames[t - 1],
                beta,
            )?;

            // Reduce vertex gradients to the rigid transform: for
            // v' = R v + t, dL/dt = sum g_v and dL/dR = sum g_v ⊗ v.
            let mut g_t = Vector3::zeros();
            let mut g_r = Matrix3::zeros();
            for (g, v) in vert_grads.iter().zip(self.movable.vertices.iter()) {
                g_t += g;
                g_r += g * v.transpose();
            }

            let jpg = joint_pose_grads(joint, theta);
            let g_theta = g_r.dot(&jpg.d_rot_d_theta) + g_t.dot(&jpg.d_trans_d_theta);
            g_pos += jpg.d_trans_d_pos.transpose() * g_t;
            for k in 0..3 {
                g_dir[k] += g_r.dot(&jpg.d_rot_d_dir[k]) + g_t.dot(&jpg.d_trans_d_dir[k]);
            }
            let mg = mlp.motion_grad(t, n)?;
            for (acc, g) in g_mlp.iter_mut().zip(mg.iter()) {
                *acc += g_theta * g;
            }
        }
        let g_dir = project_to_tangent(&joint.axis_dir, &g_dir);
        Ok((total, ParamGrads { axis_dir: g_dir, axis_pos: g_pos, mlp: g_mlp }))
    }
}

struct Candidate {
    index: usize,
    joint: JointSpec,
    mlp: MotionMlp,
    adam_dir: AdamState,
    adam_pos: AdamState,
    adam_mlp: AdamState,
    history: Vec<f64>,
}

impl Candidate {
    fn new(index: usize, joint: JointSpec, mlp: MotionMlp) -> Candidate {
        let n_mlp = mlp.param_count();
        Candidate {
            index,
            joint,
            mlp,
            adam_dir: AdamState::new(3),
            adam_pos: AdamState::new(3),
            adam_mlp: AdamState::new(n_mlp),
            history: Vec::new(),
        }
    }

    fn run(&mut self, problem: &ArticulationProblem, cfg: &OptimConfig, from: usize, to: usize) -> Result<()> {
        for iter in from..to {
            let (loss, grads) = problem.loss_and_grads(&self.joint, &self.mlp, cfg.beta_at(iter))?;
            self.history.push(loss);

            let scale = cfg.lr_scale(iter);
            let betas = (cfg.adam_beta1, cfg.adam_beta2);

            let mut dir: [f64; 3] = self.joint.axis_dir.into();
            adam_step(
                &mut dir,
                grads.axis_dir.as_slice(),
                &mut self.adam_dir,
                cfg.lr_axis_dir * scale,
                betas,
                cfg.adam_epsilon,
            )?;
            let dir = Vector3::from(dir);
            let norm = dir.norm();
            if norm < 1e-12 {
                return Err(Error::Optimization("axis direction collapsed to zero".into()));
            }
            self.joint.axis_dir = dir / norm;

            let mut pos: [f64; 3] = self.joint.axis_pos.into();
            adam_step(
                &mut pos,
                grads.axis_pos.as_slice(),
                &mut self.adam_pos,
                cfg.lr_axis_pos * scale,
                betas,
                cfg.adam_epsilon,
            )?;
            self.joint.axis_pos = Vector3::from(pos);

            let mut mlp_params = self.mlp.params();
            adam_step(
                &mut mlp_params,
                &grads.mlp,
                &mut self.adam_mlp,
                cfg.lr_mlp * scale,
                betas,
                cfg.adam_epsilon,
            )?;
            self.mlp.set_params(&mlp_params)?;
        }
        Ok(())
    }

    fn last_loss(&self) -> f64 {
        *self.history.last().expect("candidate has run")
    }
}

fn validate_inputs(base: &TriMesh, movable: &TriMesh, frames: &[Image], camera: &Camera) -> Result<()> {
    base.validate()?;
    movable.validate()?;
    camera.validate()?;
    if frames.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 frames to observe motion, got {}",
            frames.len()
        )));
    }
    for (i, f) in frames.iter().enumerate() {
        if (f.width, f.height) != camera.resolution || f.channels != 3 {
            return Err(Error::Mismatch(format!(
                "frame {i} is {}x{}x{}, camera expects {}x{}x3",
                f.width, f.height, f.channels, camera.resolution.0, camera.resolution.1
            )));
        }
    }
    if movable.vertices.is_empty() {
        return Err(Error::InvalidMesh("movable part has no vertices".into()));
    }
    Ok(())
}

/// Estimates the joint of a fixed type from reference frames.
pub fn estimate_joint(
    base: &TriMesh,
    movable: &TriMesh,
    frames: &[Image],
    camera: &Camera,
    joint_type: JointType,
    config: &OptimConfig,
) -> Result<OptimResult> {
    estimate_joint_with_inits(base, movable, frames, camera, joint_type, config, &[])
}

/// [`estimate_joint`] with extra caller-provided candidates appended after
/// the random restarts (used to seed benchmarks with known solutions).
pub fn estimate_joint_with_inits(
    base: &TriMesh,
    movable: &TriMesh,
    frames: &[Image],
    camera: &Camera,
    joint_type: JointType,
    config: &OptimConfig,
    extra_inits: &[(JointSpec, MotionMlp)],
) -> Result<OptimResult> {
    config.validate()?;
    validate_inputs(base, movable, frames, camera)?;
    let n = frames.len();
    let supervised: Vec<usize> = match &config.supervised_frames {
        None => (1..=n).collect(),
        Some(list) => {
            if list.is_empty() || list.iter().any(|&t| t < 1 || t > n) {
                return Err(Error::InvalidArgument("supervised frame indices must lie in 1..=N".into()));
            }
            list.clone()
        }
    };

    let base_target = rasterize(base, camera, config.background);
    let problem = ArticulationProblem {
        base_target: &base_target,
        movable,
        frames,
        camera,
        background: config.background,
        supervised: &supervised,
    };

    let splitter = SeedSplitter::new(config.seed);
    let bbox = movable.bbox()?;
    let mut candidates: Vec<Candidate> = Vec::with_capacity(config.restarts + extra_inits.len());
    for i in 0..config.restarts {
        let mut rng = splitter.stream(&format!("restart.{}.{}", joint_type.as_str(), i));
        let (joint, mlp) = init_restart(&mut rng, joint_type, bbox, &config.mlp_layers)?;
        candidates.push(Candidate::new(i, joint, mlp));
    }
    for (k, (joint, mlp)) in extra_inits.iter().enumerate() {
        if joint.joint_type != joint_type {
            return Err(Error::InvalidArgument("extra init has a different joint type".into()));
        }
        candidates.push(Candidate::new(config.restarts + k, joint.clone(), mlp.clone()));
    }

    // Warmup all candidates in parallel; candidate order fixes determinism.
    let mut candidates: Vec<Candidate> = candidates
        .into_par_iter()
        .map(|mut c| {
            c.run(&problem, config, 0, config.warmup_iterations)?;
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;

    if config.warmup_iterations == 0 {
        for c in &mut candidates {
            c.history.push(problem.loss(&c.joint, &c.mlp, config.beta_at(0))?);
        }
    }

    // Keep the `finalists` lowest warmup losses (ties by lower index).
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        candidates[a]
            .last_loss()
            .partial_cmp(&candidates[b].last_loss())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(candidates[a].index.cmp(&candidates[b].index))
    });
    order.truncate(config.finalists.min(candidates.len()));
    order.sort_unstable(); // keep original relative order for determinism
    let mut finalists: Vec<Candidate> = Vec::with_capacity(order.len());
    for idx in order.into_iter().rev() {
        finalists.push(candidates.swap_remove(idx));
    }
    finalists.sort_by_key(|c| c.index);

    let mut finalists: Vec<Candidate> = finalists
        .into_par_iter()
        .map(|mut c| {
            c.run(&problem, config, config.warmup_iterations, config.iterations)?;
            // Final evaluation at the returned parameters.
            let final_loss = problem.loss(&c.joint, &c.mlp, config.beta)?;
            c.history.push(final_loss);
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;

    finalists.sort_by(|a, b| {
        a.last_loss()
            .partial_cmp(&b.last_loss())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.index.cmp(&b.index))
    });
    let mut winner = finalists.remove(0);

    // Canonical axis sign for reporting; transforms are unchanged.
    let sign = winner.joint.canonicalize();
    if sign < 0.0 {
        winner.mlp.negate_output();
    }
    let profile = winner.mlp.profile(n)?;
    let final_loss = winner.last_loss();
    Ok(OptimResult {
        joint: winner.joint,
        profile,
        mlp: winner.mlp,
        loss_history: winner.history,
        final_loss,
        restart_index: winner.index,
    })
}

/// Estimates under both joint types and keeps the lower final loss.
pub fn select_joint_type(
    base: &TriMesh,
    movable: &TriMesh,
    frames: &[Image],
    camera: &Camera,
    config: &OptimConfig,
) -> Result<(OptimResult, JointType)> {
    let mut best: Option<(OptimResult, JointType)> = None;
    for joint_type in JointType::all() {
        let result = estimate_joint(base, movable, frames, camera, joint_type, config)?;
        let better = match &best {
            None => true,
            Some((current, _)) => result.final_loss < current.final_loss,
        };
        if better {
            best = Some((result, joint_type));
        }
    }
    Ok(best.expect("two estimates ran"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn adam_zero_gradient_keeps_parameters() {
        let mut params = [1.0, -2.0, 3.0];
        let mut state = AdamState::new(3);
        adam_step(&mut params, &[0.0; 3], &mut state, 0.1, (0.9, 0.999), 1e-8).unwrap();
        assert_eq!(params, [1.0, -2.0, 3.0]);
    }

    #[test]
    fn adam_constant_gradient_approaches_lr_steps() {
        let mut params = [0.0];
        let mut state = AdamState::new(1);
        let lr = 0.05;
        let mut prev = params[0];
        for i in 0..300 {
            adam_step(&mut params, &[0.37], &mut state, lr, (0.9, 0.999), 1e-8).unwrap();
            if i > 200 {
                let step = prev - params[0];
                assert_relative_eq!(step, lr, epsilon = 1e-3);
            }
            prev = params[0];
        }
    }

    #[test]
    fn adam_rejects_non_finite_gradient() {
        let mut params = [0.0];
        let mut state = AdamState::new(1);
        assert!(adam_step(&mut params, &[f64::NAN], &mut state, 0.1, (0.9, 0.999), 1e-8).is_err());
    }

    #[test]
    fn init_restart_is_deterministic() {
        let bbox = (Vector3::new(-1.0, -0.5, 0.0), Vector3::new(1.0, 0.5, 2.0));
        let splitter = SeedSplitter::new(99);
        let (j1, m1) = init_restart(&mut splitter.stream("r"), JointType::Revolute, bbox, &[1, 8, 1]).unwrap();
        let (j2, m2) = init_restart(&mut splitter.stream("r"), JointType::Revolute, bbox, &[1, 8, 1]).unwrap();
        assert_eq!(j1, j2);
        assert_eq!(m1.params(), m2.params());
    }

    #[test]
    fn init_restart_sphere_statistics() {
        let bbox = (Vector3::zeros(), Vector3::new(1.0, 1.0, 1.0));
        let splitter = SeedSplitter::new(5);
        let mut rng = splitter.stream("sphere");
        let mut mean = Vector3::zeros();
        let n = 10_000;
        for _ in 0..n {
            let (j, _) = init_restart(&mut rng, JointType::Revolute, bbox, &[1, 2, 1]).unwrap();
            assert_relative_eq!(j.axis_dir.norm(), 1.0, epsilon = 1e-12);
            mean += j.axis_dir;
        }
        mean /= n as f64;
        for k in 0..3 {
            assert!(mean[k].abs() < 0.05, "coordinate mean {k} too large: {}", mean[k]);
        }
    }

    #[test]
    fn prismatic_init_pins_axis_pos_to_bbox_center() {
        let bbox = (Vector3::new(-2.0, 0.0, 4.0), Vector3::new(2.0, 1.0, 6.0));
        let splitter = SeedSplitter::new(5);
        let (j, _) = init_restart(&mut splitter.stream("p"), JointType::Prismatic, bbox, &[1, 2, 1]).unwrap();
        assert_eq!(j.axis_pos, Vector3::new(0.0, 0.5, 5.0));
    }

    #[test]
    fn lr_schedule_decays_to_floor() {
        let cfg = OptimConfig::default();
        assert_relative_eq!(cfg.lr_scale(0), 1.0, epsilon = 1e-12);
        assert_relative_eq!(cfg.lr_scale(cfg.iterations - 1), cfg.lr_floor_fraction, epsilon = 1e-12);
        assert!(cfg.lr_scale(cfg.iterations / 2) < 1.0);
    }

    #[test]
    fn config_validation() {
        let mut cfg = OptimConfig::default();
        cfg.iterations = 10;
        cfg.warmup_iterations = 60;
        assert!(cfg.validate().is_err());
        let mut cfg = OptimConfig::default();
        cfg.restarts = 0;
        assert!(cfg.validate().is_err());
    }
}
