//! Explanation-consistency scoring for CAM heatmaps.
//!
//! * [`tensor`]: dense maps, normalization, emphasis, bilinear resizing.
//! * [`cam`]: GradCAM, GradCAM++, LayerCAM, EigenCAM, ScoreCAM and
//!   multi-scale GradCAM++ from exported activations and gradients.
//! * [`engine`]: gold lists, soft-IoU and the per-class / global C-Score.
//! * [`trajectory`]: checkpoint series and dissociation detectors.
//! * [`io`]: manifest, tensor, CSV and alert formats.

pub mod cam;
pub mod config;
pub mod engine;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod linalg;
pub mod pipeline;
pub mod tensor;
pub mod trajectory;

pub use cam::{ActivationBundle, CamMethod};
pub use config::RunConfig;
pub use engine::{
    class_cscore, confidence_weights, form_gold_list, global_cscore, pairwise_matrix, soft_iou,
    ClassConsistencyResult, GlobalConsistencyResult, GoldList, GoldMember,
};
pub use error::{Error, Result};
pub use tensor::{bilinear_resize, minmax_normalize, power_emphasis, Heatmap, Tensor2D, Tensor3D};
