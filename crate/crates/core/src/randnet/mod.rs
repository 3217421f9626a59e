//! Randomized single-hidden-layer networks with frozen hidden parameters.

mod activation;
mod compiled;
mod fastmath;
mod normalizer;
pub mod rng;
mod subnet;

pub use activation::Activation;
pub use compiled::{compile_evaluator, CompiledEvaluator};
pub use normalizer::Normalizer;
pub use subnet::{
    eval_varphi, hidden_features, hidden_features_dxi, init_subnet, init_subnet_with, DenseLayer, FeatureScratch,
    SubnetParams,
};
