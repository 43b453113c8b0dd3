//! Experiment orchestration: configs, subcommands, and reproducible
//! CSV/SVG pipelines.

mod commands;
mod config;
mod svg;
mod verify;

pub use commands::{
    cmd_distill, cmd_dpo, cmd_eval, cmd_merge, cmd_pretrain, cmd_sample, cmd_sft, cmd_sweep,
    cmd_verify, load_samples, save_samples,
};
pub use config::{file_checksum, fnv1a64, Config, TOOL_VERSION};
pub use svg::{color_class, scatter_svg, CLUSTER_COLORS, OUTLIER_COLOR};
pub use verify::{run_battery, CheckResult};

use crate::error::Error;

/// Process exit code for an error: 1 for usage/config problems, 2 for
/// numerical failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Invalid { .. } | Error::Parse { .. } | Error::Empty { .. } => 1,
        Error::Io(_) | Error::Checkpoint { .. } | Error::MissingLabel { .. } => 1,
        Error::MissingModelSlot { .. } | Error::LengthMismatch { .. } => 1,
        Error::ShapeMismatch { .. } | Error::MismatchedDraws { .. } => 1,
        Error::NonFinite { .. }
        | Error::StepOutOfRange { .. }
        | Error::Diverged { .. }
        | Error::NonFiniteLogit { .. }
        | Error::DegenerateCovariance { .. } => 2,
    }
}
