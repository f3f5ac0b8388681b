// `!(x > 0.0)` is used on purpose so NaN falls into the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eigcount;
pub mod error;
pub mod field;
pub mod fit;
pub mod gauge;
pub mod harness;
pub mod model;
pub mod oned;
pub mod quad;
pub mod weyl;

pub use error::{Error, Result};
pub use field::{Base, Metric, ScalarField};
pub use gauge::{IntensityList, MagneticTensor, TensorMode, VectorPotentialSpec};
pub use model::{ModelSpec, OperatorKind, ScalingTriple};
