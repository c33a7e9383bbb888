//! Finite-scale machinery for monotone compression schemes, Kuratowski-type
//! decompositions and EMX learning.
//!
//! * [`ground`]: ordered ground sets and finite sets as monotone enumerations
//! * [`schemes`]: `(sigma, eta)` schemes, exhaustive verification, the
//!   dimension-dropping reduction and fiber-growth audits
//! * [`kuratowski`]: decompositions of finite powers and the schemes built
//!   from them
//! * [`emx`]: finite-support distributions, learners and exact / Monte Carlo
//!   evaluation of the EMX criterion
//! * [`fiberprobe`]: numeric probes showing that continuous selectors on the
//!   unit interval have infinite fibers

pub mod emx;
pub mod error;
pub mod fiberprobe;
pub mod ground;
pub mod kuratowski;
pub mod rational;
pub mod schemes;

pub use error::{Error, Result};
pub use ground::{FinSet, OrderedGround};
pub use schemes::{CompressionScheme, SchemeReport};
