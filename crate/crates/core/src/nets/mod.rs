//! Trainable networks and the full-batch gradient-descent loop they share.

mod deep;
mod train;
mod two_layer;

pub use deep::{init_deep, DeepInit, DeepNet, DeepNetSpec};
pub use train::{
    train_deep, train_full_batch, train_full_batch_observed, train_observed, Loss, Reduction, TrainConfig, TrainRun,
    Trainable, Verdict, DIVERGENCE_FACTOR,
};
pub use two_layer::{init_two_layer, threshold_class_labels, threshold_kept_fraction, Layer, TwoLayerNet};
