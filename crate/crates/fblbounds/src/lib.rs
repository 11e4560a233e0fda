//! Finite-blocklength channel-coding bounds for discrete-input memoryless
//! channels.
//!
//! Given a channel (BSC, BEC, binary-input Gaussian, Z, or a user-supplied
//! discrete matrix), a blocklength `n`, and a target error probability
//! `eps`, this crate computes non-asymptotic bounds on the best coding rate:
//!
//! * converse bounds driven by exact lattice tails or a Berry-Esseen
//!   sandwich of the relevant tilted tail probability;
//! * achievability bounds from jar decoding;
//! * second-order, nonasymptotic-expansion, and normal approximations.
//!
//! The machinery is organized bottom-up:
//!
//! * [`channels`]: channel models, input distributions, quadrature;
//! * [`tilted`]: exponentially tilted moment families of the information
//!   statistics, the tail sandwich, and the Gaussian-style tail factor `g`;
//! * [`solve`]: scalar solvers that invert the tilt/rate maps and the
//!   constrained input-distribution optimizers;
//! * [`mirror`]: closed-form bounds on the auxiliary output event entering
//!   the converse and expansion formulas;
//! * [`bounds`]: the named rate bounds assembled from the pieces above;
//! * [`oracle`]: exact small-blocklength enumerations used to validate the
//!   analytic formulas in tests.
//!
//! All rates and information quantities are in nats unless a function name
//! says otherwise; the CLI converts to bits at serialization time only.

pub mod bounds;
pub mod channels;
pub mod error;
pub mod mirror;
mod num;
pub mod oracle;
pub mod solve;
pub mod tilted;

pub use bounds::{BoundMeta, BoundName, ErrorModel, EpsilonSpec, RateBound};
pub use channels::{Channel, ChannelSpec, InputDist};
pub use error::{Error, Result};
pub use mirror::{MirrorBound, MirrorMethod, MirrorSelect};
pub use solve::{FeasibilityReport, SolveResult, SolveStatus, SolverConfig, TOpt};
pub use tilted::{TailSide, TiltFamily, TiltedMoments, XiPair};
