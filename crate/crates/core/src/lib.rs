//! Estimation of articulation joints (type, axis, per-frame motion) for
//! two-part 3D objects from a reference image sequence.
//!
//! The pipeline: segment a whole-object mesh into movable and base parts
//! from a single-view mask ([`segmentation`]), model the joint as a dual
//! quaternion with an MLP motion profile ([`joint`], [`mlp`]), render both
//! parts through a deterministic software rasterizer composited by soft
//! depth blending ([`render`]), and fit the articulation parameters by
//! Adam over analytic gradients ([`optim`]). A synthetic scene generator
//! and metrics ([`synth`], [`metrics`], [`eval`]) provide ground-truth
//! benchmarks end to end.

pub mod camera;
pub mod error;
pub mod eval;
pub mod image;
pub mod joint;
pub mod mesh;
pub mod metrics;
pub mod mlp;
pub mod optim;
pub mod quat;
pub mod render;
pub mod render_grad;
pub mod rng;
pub mod segmentation;
pub mod synth;

pub use camera::{Camera, ProjectedPoint};
pub use error::{Error, Result};
pub use image::Image;
pub use joint::{JointRecord, JointSpec, JointType};
pub use mesh::TriMesh;
pub use mlp::MotionMlp;
pub use optim::{OptimConfig, OptimResult};
pub use quat::{DualQuaternion, Quaternion};
pub use render::{BlendOutput, RenderTarget};
pub use rng::SeedSplitter;
