//! Constructions, verifiers and the method planner for social golfer
//! allocations, including the adjacent block size variant.
//!
//! Everything here is pure computation over `alloc` collections. File formats,
//! bundled data and the command-line tool live in the `golfer` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod constructions;
pub mod designs;
pub mod diffmat;
pub mod gf;
pub mod latin;
pub mod planner;
pub mod sga;

mod error;

pub use error::{Error, Result};
