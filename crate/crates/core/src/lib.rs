//! Tools for deciding when a family of multipartite states can be told
//! apart by local operations and classical communication, exactly or in the
//! asymptotic limit.
//!
//! The building blocks are deviation measures of outcome tables
//! ([`deviation`]), pseudo-weak measurements with their recovery
//! ([`measure`]), protocol trees ([`protocol`]) and the splitting
//! construction ([`splitting`]). [`certify`] checks and searches for
//! product-operator certificates that rule out asymptotically perfect
//! discrimination, and [`basis`] decides finite discrimination of complete
//! product bases. [`io`] and [`cli`] provide the JSON formats and the
//! `locclab` command.

pub mod basis;
pub mod certify;
pub mod cli;
pub mod deviation;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod measure;
pub mod protocol;
pub mod qcore;
pub mod random;
pub mod splitting;

pub use error::{Error, Result};
