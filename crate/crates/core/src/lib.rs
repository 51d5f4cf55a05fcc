//! Exact arithmetic for z-permanents (quantum determinants) of matrices over
//! cyclotomic integer rings, together with the reduction pipelines built on
//! them: worst-case mod-p reductions, approximate-to-exact recovery through a
//! close-algebraic-integer search, random self-reduction with error-correcting
//! interpolation, root-of-unity interpolation, and the moment and
//! autocorrelation experiments.

pub mod ball;
pub mod gauss;
pub mod recovery;
pub mod reductions;
pub mod selfreduce;
pub mod cyclotomic;
pub mod dyadic;
pub mod error;
pub mod zperm;

pub use error::{Error, Result};
