//! File formats, bundled data and the command-line front end for
//! [`golfer_core`].

#![forbid(unsafe_code)]

pub mod cli;
pub mod data;
pub mod formats;
