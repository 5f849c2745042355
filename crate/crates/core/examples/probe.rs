// Scratch recovery probe (not part of the deliverable test suite).

use artikit_core::joint::JointType;
use artikit_core::metrics::{axis_errors, motion_rmse};
use artikit_core::optim::{estimate_joint, ArticulationProblem, OptimConfig, DEFAULT_BACKGROUND};
use artikit_core::render::rasterize;
use artikit_core::rng::SeedSplitter;
use artikit_core::synth::{generate_scene, render_sequence};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n_scenes: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let res: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(256);
    let frames_n: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(16);

    for i in 0..n_scenes {
        for gt_type in [JointType::Prismatic, JointType::Revolute] {
            let splitter = SeedSplitter::new(1000 + i as u64);
            let gt = generate_scene(
                &mut splitter.stream(&format!("scene.{}", gt_type.as_str())),
                gt_type,
                frames_n,
                res,
            )
            .unwrap();
            let frames = render_sequence(&gt, DEFAULT_BACKGROUND).unwrap();

            let mut config = OptimConfig::default();
            config.seed = 42 + i as u64;

            // Loss of the ground truth itself (sanity floor).
            let base_target = rasterize(&gt.base, &gt.camera, DEFAULT_BACKGROUND);
            let supervised: Vec<usize> = (1..=frames_n).collect();
            let problem = ArticulationProblem {
                base_target: &base_target,
                movable: &gt.movable,
                frames: &frames,
                camera: &gt.camera,
                background: DEFAULT_BACKGROUND,
                supervised: &supervised,
            };

            println!(
                "--- scene {i} gt={} axis_dir=({:.2},{:.2},{:.2}) pos=({:.2},{:.2},{:.2}) theta_end={:.3}",
                gt_type.as_str(),
                gt.joint.axis_dir.x,
                gt.joint.axis_dir.y,
                gt.joint.axis_dir.z,
                gt.joint.axis_pos.x,
                gt.joint.axis_pos.y,
                gt.joint.axis_pos.z,
                gt.thetas.last().unwrap()
            );

            for est_type in [JointType::Prismatic, JointType::Revolute] {
                let start = std::time::Instant::now();
                let result =
                    estimate_joint(&gt.base, &gt.movable, &frames, &gt.camera, est_type, &config).unwrap();
                let dt = start.elapsed().as_secs_f64();
                let zero_mlp = {
                    let mut c = result.clone();
                    c.joint = gt.joint;
                    c
                };
                let _ = zero_mlp;
                let mut detail = String::new();
                if est_type == gt_type {
                    let (angle, pos) = axis_errors(&result.joint, &gt.joint, 1.0).unwrap();
                    let rmse = motion_rmse(&result.profile.thetas, &gt.thetas).unwrap();
                    detail = format!(
                        " angle={angle:.2} pos={pos:.4} rmse={rmse:.4} est_dir=({:.2},{:.2},{:.2})",
                        result.joint.axis_dir.x, result.joint.axis_dir.y, result.joint.axis_dir.z
                    );
                }
                println!(
                    "    fit {}: final_loss={:.3e} warmup_best_iter restart={} [{dt:.1}s]{detail}",
                    est_type.as_str(),
                    result.final_loss,
                    result.restart_index,
                );
            }
            // Loss at the ground truth (approximately zero by construction).
            let gt_mlp = artikit_core::mlp::MotionMlp::fit_profile(
                &artikit_core::mlp::MotionMlp::init(&config.mlp_layers, &mut splitter.stream("fit"))
                    .unwrap()
                    .with_amplitude(match gt_type {
                        JointType::Prismatic => None,
                        JointType::Revolute => Some(std::f64::consts::PI),
                    }),
                &gt.thetas,
            )
            .unwrap();
            let gt_loss = problem.loss(&gt.joint, &gt_mlp, config.beta).unwrap();
            println!("    loss at ground truth: {gt_loss:.3e}");
        }
    }
}
