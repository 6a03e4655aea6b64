//! Chart-level machinery: expressions, jets, tensors, arrows and Lie derivatives.

pub mod arrow;
pub mod domain;
pub mod expr;
pub mod jet;
pub mod lie;
pub mod linalg;
pub mod sampling;
pub mod scalar;
pub mod tensor;

pub use arrow::{pushforward_jet2form, pushforward_tensor, JetValued2Form, OneArrow, TwoArrow};
pub use domain::{DomainBox, Point};
pub use expr::{Func, ScalarExpr};
pub use jet::{eval_jet, expr_jet, fd_jet, ScalarJet};
pub use lie::{
    formal_lie_derivative, formal_lie_derivative_pair, lie_derivative_11_closed, spencer_d, ExprJetSection,
    ExprTensorField, JetFormField, JetSection, JetVector, TensorField,
};
pub use linalg::Matrix;
pub use scalar::{Dual, Scalar};
pub use tensor::{SlotSymmetry, SymmetryKind, TensorBlock, Variance};
