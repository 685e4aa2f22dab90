//! Lattice-precoded two-way relaying for a MIMO cellular network: channel triangularization,
//! achievable rates and cut-set bounds, optimal power allocation, and a noiseless lattice
//! encode/decode chain.
//!
//! The crate is `no_std` (it needs `alloc`). The `std` feature only enables `std::error::Error`
//! impls through `thiserror`.

#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod channel;
pub mod cmat;
pub mod error;
pub mod latticelab;
pub mod matfact;
pub mod powalloc;
pub mod rates;
pub mod search;
pub mod triangulate;

pub use channel::{gen_channels, Budgets, ChannelSet};
pub use cmat::{CMat, C64};
pub use error::{Error, Result};
pub use triangulate::{triangularize, Permutation, PermutationStrategy, Triangularization};
