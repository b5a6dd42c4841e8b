//! Matrix-free statevector simulation over named registers.

pub mod dense;
pub mod layout;
pub mod norm;
pub mod ops;
pub mod state;

pub use dense::DenseMatrix;
pub use layout::{RegisterLayout, Slot};
pub use norm::{operator_norm, operator_norm_default, NormEstimate};
pub use ops::{LinearMap, Op, C64};
pub use state::{project, uniform_state, StateVector};
