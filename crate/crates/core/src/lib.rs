//! Existential completion of finite primary doctrines.

pub mod completion;
pub mod doctrine;
pub mod error;
pub mod exactcomp;
pub mod fincat;
pub mod fixtures;
pub mod io;
pub mod lattice;
pub mod syntactic;

pub use error::{Check, Failure, Result, Violation};
