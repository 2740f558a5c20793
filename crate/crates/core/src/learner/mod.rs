//! Per-partition classifiers that predict the band-switch grant.

pub mod cv;
pub mod features;
pub mod gbt;
pub mod mlp;
pub mod model;
pub mod partition;

pub use features::{assemble_features, FeatureMode, FeatureRow, Phase, NUM_FEATURES};
pub use gbt::{gbt_grid, GbtHyperparams};
pub use mlp::{mlp_grid, MlpHyperparams};
pub use model::{train_gbt, train_mlp, ClassifierKind, Prediction, TrainedModel, TrainingContext};
pub use partition::{learning_size, split_learn_exploit, stratified_partition};
