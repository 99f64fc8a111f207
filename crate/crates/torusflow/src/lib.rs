//! Numerical laboratory for special flows over Liouville torus translations.
//!
//! The crate constructs frequency vectors with alternating doubly exponential
//! best-approximation growth, evaluates the associated analytic ceiling
//! function and its Birkhoff sums in closed form, runs the special flow over
//! the T^4 translation, measures uniform stretch on good intervals, builds
//! the partial partitions behind the correlation-decay estimate, and
//! estimates correlation decay and spectral density for flow-box observables.

pub mod arithmetic;
pub mod bump;
pub mod ceiling;
pub mod corr;
pub mod flow;
pub mod qmc;
pub mod sampler;
pub mod stretch;
pub mod error;
pub mod xrat;

pub use error::{Error, Result};
