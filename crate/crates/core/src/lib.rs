//! Exact topological recursion and its logarithmic variant on genus-zero
//! spectral curves.

pub mod curve;
pub mod bridge;
pub mod differential;
pub mod error;
pub mod fixtures;
pub mod hurwitz;
pub mod jet;
pub mod poly;
pub mod ratfunc;
pub mod recursion;
pub mod scalar;
pub mod series;
pub mod swap;

pub use error::{Error, Result};
pub use poly::Poly;
pub use ratfunc::{RationalFunction, RfOp};
pub use scalar::Scalar;
pub use series::{LaurentWindow, Point, Series};
pub use curve::{build_curve, swap_curve, LogRationalFunction, Mobius, SpectralCurve};
pub use differential::{FactorizedDifferential, Mode, PoleForm};
pub use recursion::{check_loop_equations, check_projection, compute_logtr, compute_tr, log_correction, Engine, Family};
