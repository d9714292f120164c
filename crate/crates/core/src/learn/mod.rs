//! MLP classifier on feature vectors, with accuracy and AUC.

mod checkpoint;
mod metrics;
mod mlp;
mod scaling;
mod train;

pub use checkpoint::{decode_model, encode_model};
pub use metrics::{accuracy, argmax_rows, auc, binary_auc};
pub use mlp::{
    classifier_widths, forward, init_model, loss, loss_and_gradients, softmax_rows, Gradients,
    MlpModel, HIDDEN_WIDTHS,
};
pub use scaling::Standardizer;
pub use train::{evaluate, fit_classifier, train, EpochRecord, History, Metrics, Samples, TrainConfig};
