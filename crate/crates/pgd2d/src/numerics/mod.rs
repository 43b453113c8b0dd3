//! Dense vector/matrix arithmetic, the fixed MLP epsilon predictor with
//! exact reverse-mode gradients, an Adam optimizer, a finite-difference
//! oracle, and checkpoint I/O.

mod adam;
mod fd;
mod io;
mod mlp;
mod params;

pub use adam::{adam_step, AdamConfig, OptimizerState};
pub use fd::{max_relative_deviation, numerical_gradient};
pub use io::{load_params, load_sidecar, save_params, sidecar_path, Provenance, Sidecar};
pub use mlp::{
    backward_from_cache, forward_cached, mlp_backward, mlp_forward, tiny_arch, ForwardCache,
    TimeEmbedding,
};
pub use params::{Architecture, ModelParams, Vec2, DATA_DIM};
