//! Weighted mRMR feature selection with SVM wrapper validation.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below name the double-precision instantiations used by the CLI.

pub mod dataset;
pub mod error;
pub mod metrics;
pub mod mrmr;
pub mod mutinfo;
pub mod pca;
pub mod pipeline;
pub mod scalar;
pub mod svm;

pub use dataset::{Class, Dataset, DiscretizedDataset, FoldAssignment};
pub use error::{Error, Result};
pub use metrics::MetricsBundle;
pub use mrmr::{MrmrConfig, RankingResult};
pub use mutinfo::MiMatrix;
pub use pca::PcaProjection;
pub use pipeline::{PipelineConfig, SelectionReport};
pub use scalar::Scalar;
pub use svm::{SubsetEvaluation, SvmConfig, SvmModel};

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type MiMatrix64 = MiMatrix<f64>;
pub type MiMatrix32 = MiMatrix<f32>;
pub type RankingResult64 = RankingResult<f64>;
pub type SvmModel64 = SvmModel<f64>;
pub type SvmModel32 = SvmModel<f32>;
pub type MetricsBundle64 = MetricsBundle<f64>;
pub type PcaProjection64 = PcaProjection<f64>;
pub type PipelineConfig64 = PipelineConfig<f64>;
pub type SelectionReport64 = SelectionReport<f64>;
