// Scratch landscape probe: loss and d(loss)/d(theta) along the GT axis.

use artikit_core::joint::{deform_mesh, JointType};
use artikit_core::optim::DEFAULT_BACKGROUND;
use artikit_core::render::{image_loss, rasterize, soft_blend};
use artikit_core::render_grad::backward_vertex_grads;
use artikit_core::rng::SeedSplitter;
use artikit_core::synth::{generate_scene, render_sequence};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let joint_type = if args.get(1).map(|s| s.as_str()) == Some("revolute") {
        JointType::Revolute
    } else {
        JointType::Prismatic
    };
    let res: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(128);

    let splitter = SeedSplitter::new(1000);
    let gt = generate_scene(
        &mut splitter.stream(&format!("scene.{}", joint_type.as_str())),
        joint_type,
        8,
        res,
    )
    .unwrap();
    let frames = render_sequence(&gt, DEFAULT_BACKGROUND).unwrap();
    let reference = &frames[7]; // theta_gt = end
    let theta_gt = *gt.thetas.last().unwrap();
    println!("gt theta_end = {theta_gt:.4}");

    let base_target = rasterize(&gt.base, &gt.camera, DEFAULT_BACKGROUND);
    let lo = -0.4 * theta_gt.abs();
    let hi = 1.8 * theta_gt.abs();
    let steps = 44;
    println!(
        "{:>9} {:>13} {:>13} {:>13} {:>13} | grads at same betas",
        "theta", "L(b24)", "L(b60)", "L(b150)", "L(b500)"
    );
    for i in 0..=steps {
        let theta = (lo + (hi - lo) * i as f64 / steps as f64) * theta_gt.signum();
        let (r, t) = gt.joint.transform(theta);
        let deformed = deform_mesh(&gt.movable, &r, &t);
        let mov = rasterize(&deformed, &gt.camera, DEFAULT_BACKGROUND);
        let mut losses = Vec::new();
        let mut gs = Vec::new();
        for beta in [24.0, 60.0, 150.0, 500.0] {
            let blend = soft_blend(&mov, &base_target, beta).unwrap();
            losses.push(image_loss(&blend.image, reference).unwrap());
            let grads =
                backward_vertex_grads(&deformed, &gt.camera, &base_target, &mov, &blend, reference, beta)
                    .unwrap();
            let g_theta: f64 = match joint_type {
                JointType::Prismatic => grads.iter().map(|g| g.dot(&gt.joint.axis_dir)).sum(),
                JointType::Revolute => {
                    let jpg = artikit_core::joint::joint_pose_grads(&gt.joint, theta);
                    let mut g_t = nalgebra::Vector3::zeros();
                    let mut g_r = nalgebra::Matrix3::zeros();
                    for (g, v) in grads.iter().zip(gt.movable.vertices.iter()) {
                        g_t += g;
                        g_r += g * v.transpose();
                    }
                    g_r.dot(&jpg.d_rot_d_theta) + g_t.dot(&jpg.d_trans_d_theta)
                }
            };
            gs.push(g_theta);
        }
        println!(
            "{theta:+9.4} {:13.4e} {:13.4e} {:13.4e} {:13.4e} | {:+.2e} {:+.2e} {:+.2e} {:+.2e}",
            losses[0], losses[1], losses[2], losses[3], gs[0], gs[1], gs[2], gs[3]
        );
    }
}
