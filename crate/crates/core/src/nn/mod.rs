//! Neural-network core: fixed architectures, backprop, SGD and the vector
//! utilities shared by attacks and defenses.

pub mod arch;
pub mod batch;
pub mod gradcheck;
pub mod model;
pub mod params;
pub mod train;

pub use arch::{ArchVariant, LayerSpec, ModelArch};
pub use batch::{Batch, Example};
pub use gradcheck::{check_gradient, GradCheckReport};
pub use model::{forward, loss, loss_and_grad, predict, Logits};
pub use params::{l2_norm, project_l2_ball, ParamVector};
pub use train::{sgd_train, TrainHyper};
