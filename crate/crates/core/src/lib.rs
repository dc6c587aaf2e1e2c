//! Invariant objects of foliation-preserving torus maps near resonance.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;

pub mod circle;
pub mod dynamics;
pub mod error;
pub mod fourier;
pub mod frequency;
pub mod jet;
pub mod kam;
pub mod lattice;
pub mod lindstedt;
pub mod normalform;
pub mod scan;
pub mod sternberg;

pub use error::{Error, Result};
