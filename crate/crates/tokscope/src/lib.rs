//! File formats, report documents and the command-line driver around
//! [`tokscope_core`].

pub mod cli;
pub mod compare;
pub mod error;
pub mod io;
pub mod published;
pub mod render;
pub mod report;

pub use error::{Error, Result};
