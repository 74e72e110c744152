//! Faster-than-real-time video summarization on commodity hardware.
//!
//! The pipeline decodes codec-free video sources (image directories, Y4M),
//! filters dark/blurry/uniform frames, segments the video by solving a
//! group-lasso self-representation problem over per-frame histograms, ranks
//! segments with tree ensembles over computational-aesthetics features, and
//! selects the summary with an exact 0/1 knapsack.
//!
//! Numeric kernels (feature matrix, solver, trees, knapsack, metrics) are
//! generic over the scalar type; the pipeline instantiates them at the
//! concrete aliases exported from this root.

pub mod aesthetics;
pub mod changepoint;
pub mod clustering;
pub mod descriptor;
pub mod error;
pub mod evaluate;
pub mod imgproc;
pub mod media;
pub mod pipeline;
pub mod quality;
pub mod segmentation;
pub mod summarize;
pub mod synth;
pub mod tree;

pub use error::{Error, Result};

/// Scalar bound for the numeric kernels: ordinary IEEE floats plus the
/// conversions the kernels need. Implemented for `f32` and `f64`.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::NumAssign
    + ndarray::LinalgScalar
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
    fn as_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).expect("finite scalar")
    }
    fn of_f64(v: f64) -> Self {
        num_traits::FromPrimitive::from_f64(v).expect("representable scalar")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Feature matrix as stored in the on-disk cache (little-endian f32 blob).
pub type Mat32 = descriptor::FeatureMatrix<f32>;
/// Feature matrix at solver precision.
pub type Mat64 = descriptor::FeatureMatrix<f64>;
/// Solver output at the pipeline's working precision.
pub type Solution64 = changepoint::LassoSolution<f64>;
/// Tree model at the pipeline's working precision (the serialized form).
pub type Model64 = tree::TreeModel<f64>;
