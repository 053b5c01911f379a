//! Coded caching with coded prefetching: cache placement, three-type
//! delivery, constructive decoding with an independent GF(2) check, and the
//! exact rate and lower-bound curves the scheme is compared against.
//!
//! Files and users are numbered from 1 everywhere.

pub mod bounds;
pub mod cli;
pub mod combin;
pub mod decoder;
pub mod delivery;
pub mod error;
pub mod gf2;
pub mod model;
pub mod placement;
pub mod rates;

pub use combin::{FileSubset, Rational};
pub use error::{DecodeError, Error, Result};
pub use model::{Demand, Library, Phase, SubfileId, SystemParams, TransmissionLog};
