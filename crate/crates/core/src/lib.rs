pub mod connection;
pub mod enumeration;
pub mod error;
pub mod exact;
pub mod kasteleyn;
pub mod lattice;
pub mod topology;

pub use error::{Error, Result};
