//! Linear transceiver designs for the symmetric multi-relay MIMO Y channel.
//!
//! Three users, each with `M` antennas, exchange pairwise messages through
//! `K` amplify-and-forward relays with `N` antennas each. This crate
//! constructs the user precoders, relay precoders and user post-processors
//! that neutralize interference at every receiver, certifies the resulting
//! designs numerically, and evaluates the closed-form total-DoF expressions
//! (achievable, uplink-downlink-symmetric baseline, and the full-cooperation
//! upper bound).
//!
//! The numerics layer is generic over the scalar type; the rest of the crate
//! works with the double-precision complex aliases exported below.

pub mod channel;
pub mod designer;
pub mod error;
pub mod formulas;
pub mod io;
pub mod numerics;
pub mod verifier;

pub use error::Error;

/// Complex scalar used by the concrete (non-generic) layers.
pub type Cx = num_complex::Complex<f64>;
/// Single-precision complex scalar.
pub type Cx32 = num_complex::Complex<f32>;
/// Dense complex matrix, double precision.
pub type CMat = nalgebra::DMatrix<Cx>;
/// Dense complex matrix, single precision.
pub type CMat32 = nalgebra::DMatrix<Cx32>;
/// Dense complex column vector, double precision.
pub type CVec = nalgebra::DVector<Cx>;
/// Rank tolerance over double-precision singular values.
pub type Tol = numerics::RankTolerance<f64>;

pub type Result<T> = std::result::Result<T, Error>;
