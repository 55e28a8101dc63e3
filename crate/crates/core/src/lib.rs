//! Contraction analysis of switched systems under multiple norms.
//!
//! The crate computes matrix measures and transaction coefficients for
//! weighted Lp, quadratic and structured norms, evaluates averaged
//! contraction conditions over switching schedules, and checks the resulting
//! certificates against direct simulation.
//!
//! Data-parallel loops (direction sampling, batch pair runs) use rayon when
//! the default `parallel` feature is on; see [`par::Exec`].

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod error;
pub mod matcore;
pub mod models;
pub mod norms;
pub mod par;
pub mod simsw;
pub mod switchsig;
pub mod transact;

pub use error::{Error, Result};
pub use matcore::Mat;
pub use norms::NormSpec;
pub use switchsig::{ModeId, SwitchingSignal};
