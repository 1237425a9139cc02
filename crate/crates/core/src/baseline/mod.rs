//! Linear baselines for the three training schemes.
//!
//! Features are a handful of dense overlap cues plus hashed unigrams, and
//! each head is a linear model trained from zero weights with plain
//! mini-batch SGD. Models emit raw probabilities; turning them into labels
//! is left to the conversion functions in [`crate::labels`].

mod features;
mod model;
pub mod synthetic;
mod train;

pub use features::{extract_features, tokenize, FeatureConfig, FeatureVector, DENSE_DIM, DENSE_NAMES};
pub use model::{
    batch_loss_and_gradient, kl_divergence, loss_and_logit_gradient, sigmoid, softmax, Head, LinearModel, Target,
    PROB_FLOOR,
};
pub use train::{
    dev_macro_f1, history_csv, mixup_pair, predict, predict_one, sgd_step, train, EpochRecord, Example, ModelFile, TrainConfig,
    TrainOutcome, MODEL_FORMAT_VERSION,
};
