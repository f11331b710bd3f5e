//! Checks on a hypothetical device that maps every qubit state to its
//! orthogonal complement, acting on one half of a shared singlet.
//!
//! The pieces, roughly in dependency order:
//!
//! * [`qcore`]: kets, density matrices, projective measurements, channels.
//! * [`dynamics`]: local steps on two parties run in a chosen time order,
//!   including nonlinear ensemble rules and the flip device itself.
//! * [`theorem`]: the states the device could produce if the final state may
//!   not depend on the order, and the certificate that no such state exists.
//! * [`taxonomy`]: grading order dependence as strong, intermediate or weak.
//! * [`unot`]: the best physical approximation of the flip.
//! * [`oracle`]: independent LP and brute-force cross-checks.
//! * [`scenario`], [`report`]: scenario files and their reports.
//! * [`acceptance`]: the acceptance suite behind `noflip selftest`.

pub mod acceptance;
pub mod dynamics;
pub mod error;
pub mod oracle;
pub mod qcore;
pub mod report;
pub mod scenario;
pub mod taxonomy;
pub mod theorem;
pub mod unot;

pub use error::{Error, Result};
pub use qcore::{Axis, ChoiMatrix, DensityMatrix, Ket, Party, ProjectiveMeasurement};
